//! Periodic square lattices, regions, and the two-annulus geometry.
//!
//! Positions use doubled coordinates so that edge midpoints are integral:
//! vertex `(i, j)` sits at `(2i, 2j)`, the horizontal edge leaving it at
//! `(2i+1, 2j)` and the vertical edge at `(2i, 2j+1)`. Distances are taxicab
//! and are reported in lattice units (doubled distance / 2).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// A set of site indices out of `universe` sites.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    mask: Vec<bool>,
    sites: Vec<usize>,
}

impl Region {
    pub fn from_sites(universe: usize, sites: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = vec![false; universe];
        for s in sites {
            assert!(s < universe, "site {s} out of range {universe}");
            mask[s] = true;
        }
        Self::from_mask(mask)
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let sites = mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();
        Self { mask, sites }
    }

    pub fn empty(universe: usize) -> Self {
        Self::from_mask(vec![false; universe])
    }

    pub fn all(universe: usize) -> Self {
        Self::from_mask(vec![true; universe])
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn is_subset(&self, o: &Self) -> bool {
        self.sites.iter().all(|&s| o.contains(s))
    }

    pub fn contains_all(&self, sites: &[usize]) -> bool {
        sites.iter().all(|&s| self.contains(s))
    }

    pub fn meets(&self, sites: &[usize]) -> bool {
        sites.iter().any(|&s| self.contains(s))
    }

    pub fn union(&self, o: &Self) -> Self {
        Self::from_mask(self.mask.iter().zip(&o.mask).map(|(a, b)| *a || *b).collect())
    }

    pub fn intersection(&self, o: &Self) -> Self {
        Self::from_mask(self.mask.iter().zip(&o.mask).map(|(a, b)| *a && *b).collect())
    }

    pub fn difference(&self, o: &Self) -> Self {
        Self::from_mask(self.mask.iter().zip(&o.mask).map(|(a, b)| *a && !*b).collect())
    }

    pub fn complement(&self) -> Self {
        Self::from_mask(self.mask.iter().map(|b| !b).collect())
    }

    /// Same sites inside a larger universe (new sites appended at the end).
    pub fn widen(&self, universe: usize) -> Self {
        assert!(universe >= self.universe());
        Self::from_sites(universe, self.sites.iter().copied())
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.sites.serialize(s)
    }
}

/// Site positions (doubled coordinates) with optional periodic wrap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    positions: Vec<(i64, i64)>,
    period: Option<(i64, i64)>,
}

fn wrap_delta(a: i64, b: i64, p: Option<i64>) -> i64 {
    match p {
        None => (a - b).abs(),
        Some(p) => {
            let d = (a - b).rem_euclid(p);
            d.min(p - d)
        }
    }
}

/// Signed offset `a − b` folded into `(−p/2, p/2]`.
fn wrap_signed(a: i64, b: i64, p: Option<i64>) -> i64 {
    match p {
        None => a - b,
        Some(p) => {
            let d = (a - b).rem_euclid(p);
            if 2 * d > p {
                d - p
            } else {
                d
            }
        }
    }
}

impl Layout {
    pub fn new(positions: Vec<(i64, i64)>, period: Option<(i64, i64)>) -> Self {
        Self { positions, period }
    }

    /// `n` sites on a line at unit spacing.
    pub fn line(n: usize) -> Self {
        Self::new((0..n as i64).map(|i| (2 * i, 0)).collect(), None)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, site: usize) -> (i64, i64) {
        self.positions[site]
    }

    pub fn period(&self) -> Option<(i64, i64)> {
        self.period
    }

    /// Doubled taxicab distance between two points.
    pub fn point_dist2(&self, a: (i64, i64), b: (i64, i64)) -> i64 {
        wrap_delta(a.0, b.0, self.period.map(|p| p.0)) + wrap_delta(a.1, b.1, self.period.map(|p| p.1))
    }

    pub fn offset(&self, a: (i64, i64), origin: (i64, i64)) -> (i64, i64) {
        (
            wrap_signed(a.0, origin.0, self.period.map(|p| p.0)),
            wrap_signed(a.1, origin.1, self.period.map(|p| p.1)),
        )
    }

    pub fn dist2(&self, i: usize, j: usize) -> i64 {
        self.point_dist2(self.positions[i], self.positions[j])
    }

    /// Distance in lattice units.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist2(i, j) as f64 / 2.0
    }

    /// Largest pairwise doubled distance among `sites`.
    pub fn diameter2(&self, sites: &[usize]) -> i64 {
        let mut best = 0;
        for (k, &a) in sites.iter().enumerate() {
            for &b in &sites[k + 1..] {
                best = best.max(self.dist2(a, b));
            }
        }
        best
    }

    /// Smallest doubled distance between the two site sets.
    pub fn set_dist2(&self, a: &[usize], b: &[usize]) -> i64 {
        let mut best = i64::MAX;
        for &x in a {
            for &y in b {
                best = best.min(self.dist2(x, y));
            }
        }
        best
    }

    /// Sites within doubled distance `radius2` of `center`.
    pub fn disk(&self, center: (i64, i64), radius2: i64) -> Region {
        Region::from_mask(self.positions.iter().map(|&p| self.point_dist2(p, center) <= radius2).collect())
    }

    /// All sites within doubled distance `radius2` of some site of `region`.
    pub fn fatten(&self, region: &Region, radius2: i64) -> Region {
        Region::from_mask(
            (0..self.len())
                .map(|i| region.sites().iter().any(|&s| self.dist2(i, s) <= radius2))
                .collect(),
        )
    }

    /// Connected components, two sites being adjacent when at doubled
    /// distance at most 2 (edges sharing a vertex).
    pub fn components(&self, region: &Region) -> Vec<Region> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for &s in region.sites() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(a) = queue.pop_front() {
                for &b in region.sites() {
                    if !seen[b] && self.dist2(a, b) <= 2 {
                        seen[b] = true;
                        comp.push(b);
                        queue.push_back(b);
                    }
                }
            }
            out.push(Region::from_sites(self.len(), comp));
        }
        out
    }
}

/// `L × L` periodic square lattice with one qudit per edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorusLattice {
    l: usize,
    #[serde(skip)]
    layout: Layout,
}

/// Builds the periodic lattice; sizes below 3 cannot host distinct plaquettes.
pub fn build_torus(l: usize) -> Result<TorusLattice> {
    if l < 3 {
        return Err(Error::LatticeTooSmall(format!("L = {l} < 3")));
    }
    let mut positions = vec![(0, 0); 2 * l * l];
    for j in 0..l {
        for i in 0..l {
            let (x, y) = (2 * i as i64, 2 * j as i64);
            positions[2 * (j * l + i)] = (x + 1, y);
            positions[2 * (j * l + i) + 1] = (x, y + 1);
        }
    }
    let p = 2 * l as i64;
    Ok(TorusLattice { l, layout: Layout::new(positions, Some((p, p))) })
}

impl TorusLattice {
    pub fn size(&self) -> usize {
        self.l
    }

    pub fn num_sites(&self) -> usize {
        2 * self.l * self.l
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn wrap(&self, i: i64) -> usize {
        i.rem_euclid(self.l as i64) as usize
    }

    /// Horizontal edge from vertex `(i, j)` to `(i+1, j)`.
    pub fn h_edge(&self, i: i64, j: i64) -> usize {
        2 * (self.wrap(j) * self.l + self.wrap(i))
    }

    /// Vertical edge from vertex `(i, j)` to `(i, j+1)`.
    pub fn v_edge(&self, i: i64, j: i64) -> usize {
        2 * (self.wrap(j) * self.l + self.wrap(i)) + 1
    }

    pub fn vertex_position(&self, i: i64, j: i64) -> (i64, i64) {
        (2 * self.wrap(i) as i64, 2 * self.wrap(j) as i64)
    }

    /// Edges at vertex `(i, j)` with orientation signs (+1 leaving, −1 entering).
    pub fn star(&self, i: i64, j: i64) -> [(usize, i64); 4] {
        [
            (self.h_edge(i, j), 1),
            (self.v_edge(i, j), 1),
            (self.h_edge(i - 1, j), -1),
            (self.v_edge(i, j - 1), -1),
        ]
    }

    /// Boundary edges of the plaquette with lower-left vertex `(i, j)`,
    /// with counterclockwise circulation signs.
    pub fn plaquette(&self, i: i64, j: i64) -> [(usize, i64); 4] {
        [
            (self.h_edge(i, j), 1),
            (self.v_edge(i + 1, j), 1),
            (self.h_edge(i, j + 1), -1),
            (self.v_edge(i, j), -1),
        ]
    }
}

/// Annulus of sites with taxicab distance from `center` in `[r − t, r + t]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    /// Doubled coordinates.
    pub center: (i64, i64),
    pub r_ann: u32,
    pub t: u32,
}

impl AnnulusSpec {
    pub fn region(&self, layout: &Layout) -> Region {
        let lo = 2 * (self.r_ann as i64 - self.t as i64);
        let hi = 2 * (self.r_ann as i64 + self.t as i64);
        Region::from_mask(
            (0..layout.len())
                .map(|s| {
                    let d = layout.point_dist2(layout.position(s), self.center);
                    lo <= d && d <= hi
                })
                .collect(),
        )
    }

    pub fn with_thickness(&self, t: u32) -> Self {
        Self { t, ..*self }
    }
}

/// Two overlapping annuli, their intersection diamonds, and the cut.
///
/// `m_prime` is the side of the cut containing `c_d`; the twist product
/// reverses multiplication order there.
#[derive(Clone, Debug, Serialize)]
pub struct AnnulusPair {
    pub left: Option<AnnulusSpec>,
    pub right: Option<AnnulusSpec>,
    pub left_region: Region,
    pub right_region: Region,
    pub c_u: Region,
    pub c_d: Region,
    pub m_prime: Region,
    /// dist(C_u, C_d) in lattice units.
    pub separation: f64,
    /// Lattice size when built on a torus.
    pub lattice_size: Option<usize>,
    /// Horizontal offset of the two centers.
    pub center_offset: Option<u32>,
    /// Cut height relative to the pair center, doubled coordinates.
    pub cut: i64,
}

pub fn make_annulus_pair(lat: &TorusLattice, r_ann: u32, t: u32, separation: u32) -> Result<AnnulusPair> {
    make_annulus_pair_on(lat.layout(), lat.size(), r_ann, t, separation)
}

/// As [`make_annulus_pair`] on any layout over an `l × l` torus, e.g. one
/// carrying extra ancilla sites.
pub fn make_annulus_pair_on(layout: &Layout, l: usize, r_ann: u32, t: u32, separation: u32) -> Result<AnnulusPair> {
    if layout.period() != Some((2 * l as i64, 2 * l as i64)) {
        return Err(Error::Geometry(format!("layout is not an L = {l} torus")));
    }
    if t == 0 || t >= r_ann {
        return Err(Error::Geometry(format!("need 0 < t < r_ann, got t = {t}, r_ann = {r_ann}")));
    }
    let lsize = l;
    let l = l as i64;
    let extent = 2 * (r_ann + t) as i64;
    if extent >= l || extent + separation as i64 >= l {
        return Err(Error::LatticeTooSmall(format!(
            "annuli of radius {r_ann}, thickness {t} at separation {separation} wrap an L = {l} torus"
        )));
    }
    if separation == 0 {
        return Err(Error::Geometry("coincident annuli".into()));
    }
    let left = AnnulusSpec { center: (0, 0), r_ann, t };
    let right = AnnulusSpec { center: (2 * separation as i64, 0), r_ann, t };
    let lr = left.region(layout);
    let rr = right.region(layout);
    let comps = layout.components(&lr.intersection(&rr));
    if comps.len() != 2 {
        return Err(Error::Geometry(format!("annuli intersect in {} components, expected 2", comps.len())));
    }
    let origin = (separation as i64, 0);
    let mean_y = |c: &Region| -> i64 {
        c.sites().iter().map(|&s| layout.offset(layout.position(s), origin).1).sum()
    };
    let (c_u, c_d) = if mean_y(&comps[0]) > mean_y(&comps[1]) {
        (comps[0].clone(), comps[1].clone())
    } else {
        (comps[1].clone(), comps[0].clone())
    };
    let mut pair = AnnulusPair {
        left: Some(left),
        right: Some(right),
        left_region: lr,
        right_region: rr,
        separation: layout.set_dist2(c_u.sites(), c_d.sites()) as f64 / 2.0,
        c_u,
        c_d,
        m_prime: Region::empty(layout.len()),
        lattice_size: Some(lsize),
        center_offset: Some(separation),
        cut: 0,
    };
    pair.m_prime = pair.cut_region(layout, 0)?;
    Ok(pair)
}

impl AnnulusPair {
    /// Pair on an arbitrary layout, given the two supports and the `M′` side.
    pub fn custom(layout: &Layout, left: Region, right: Region, m_prime: Region) -> Result<Self> {
        let meet = left.intersection(&right);
        let c_d = meet.intersection(&m_prime);
        let c_u = meet.difference(&m_prime);
        let separation = if c_u.is_empty() || c_d.is_empty() {
            f64::INFINITY
        } else {
            layout.set_dist2(c_u.sites(), c_d.sites()) as f64 / 2.0
        };
        Ok(Self {
            left: None,
            right: None,
            left_region: left,
            right_region: right,
            c_u,
            c_d,
            m_prime,
            separation,
            lattice_size: None,
            center_offset: None,
            cut: 0,
        })
    }

    /// `M′` for a horizontal cut at height `cut` (doubled coordinates,
    /// relative to the pair center); errors unless it separates the diamonds.
    pub fn cut_region(&self, layout: &Layout, cut: i64) -> Result<Region> {
        let origin = (self.center_offset.unwrap_or(0) as i64, 0);
        let below: Vec<bool> =
            (0..layout.len()).map(|s| layout.offset(layout.position(s), origin).1 <= cut).collect();
        let below = Region::from_mask(below);
        if !self.c_d.is_subset(&below) || self.c_u.sites().iter().any(|&s| below.contains(s)) {
            return Err(Error::Geometry(format!("cut at {cut} does not separate the diamonds")));
        }
        Ok(below)
    }

    /// Same pair with the cut moved.
    pub fn with_cut(&self, layout: &Layout, cut: i64) -> Result<Self> {
        let mut p = self.clone();
        p.m_prime = self.cut_region(layout, cut)?;
        p.cut = cut;
        Ok(p)
    }

    /// Admissible cut heights (doubled coordinates) strictly between the diamonds.
    pub fn admissible_cuts(&self, layout: &Layout) -> Vec<i64> {
        let origin = (self.center_offset.unwrap_or(0) as i64, 0);
        let ys = |c: &Region| -> Vec<i64> {
            c.sites().iter().map(|&s| layout.offset(layout.position(s), origin).1).collect()
        };
        let lo = ys(&self.c_d).into_iter().max().unwrap_or(0);
        let hi = ys(&self.c_u).into_iter().min().unwrap_or(0);
        (lo..hi).collect()
    }
}

/// Outcome of the geometric preconditions for a circuit range `R` and
/// interaction range `w`.
#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub separation: f64,
    pub circuit_range: u32,
    pub interaction_range: u32,
    /// `R < dist(C_u, C_d) / 10`.
    pub range_restriction: bool,
    /// `1200 w < 60 t < r_ann < L`.
    pub thickness_bound: bool,
    /// Annuli thickened by `R` still meet in exactly two pieces.
    pub fattened_two_components: bool,
    /// No operator of diameter `w + 2R` touches both diamonds.
    pub diamonds_isolated: bool,
    /// `R < t`.
    pub range_below_thickness: bool,
    pub strict_pass: bool,
    pub desk_scale_pass: bool,
    pub notes: Vec<String>,
}

pub fn validate_geometry(pair: &AnnulusPair, circuit_range: u32, interaction_range: u32) -> GeometryReport {
    let r = circuit_range;
    let w = interaction_range;
    let range_restriction = (r as f64) < pair.separation / 10.0;
    let mut notes = Vec::new();
    let (thickness_bound, fattened, below_t) = match (pair.left, pair.lattice_size, pair.center_offset) {
        (Some(a), Some(l), Some(sep)) => {
            let bound = 1200 * w < 60 * a.t && 60 * a.t < a.r_ann && (a.r_ann as usize) < l;
            if !bound {
                notes.push("thickness bound not met; desk-scale relaxation applies".into());
            }
            let fat = build_torus(l)
                .and_then(|lat| make_annulus_pair(&lat, a.r_ann, a.t + r, sep))
                .is_ok();
            (bound, fat, r < a.t)
        }
        _ => {
            notes.push("custom pair: thickness bound not applicable".into());
            (false, true, true)
        }
    };
    let diamonds_isolated = pair.separation > (w + 2 * r) as f64;
    GeometryReport {
        separation: pair.separation,
        circuit_range: r,
        interaction_range: w,
        range_restriction,
        thickness_bound,
        fattened_two_components: fattened,
        diamonds_isolated,
        range_below_thickness: below_t,
        strict_pass: range_restriction && thickness_bound,
        desk_scale_pass: fattened && diamonds_isolated && below_t,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn torus_sizes() {
        assert_eq!(build_torus(4).unwrap().num_sites(), 32);
        assert_eq!(build_torus(12).unwrap().num_sites(), 288);
        assert!(build_torus(2).is_err());
    }

    #[test]
    fn stars_and_plaquettes_have_four_edges() {
        let lat = build_torus(4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for cell in [lat.star(i, j), lat.plaquette(i, j)] {
                    let mut s: Vec<usize> = cell.iter().map(|e| e.0).collect();
                    s.sort_unstable();
                    s.dedup();
                    assert_eq!(s.len(), 4);
                }
            }
        }
    }

    #[test]
    fn annulus_pair_partitions_intersection() {
        let lat = build_torus(24).unwrap();
        let p = make_annulus_pair(&lat, 7, 2, 5).unwrap();
        let meet = p.left_region.intersection(&p.right_region);
        assert_eq!(p.c_u.union(&p.c_d), meet);
        assert!(p.c_u.intersection(&p.c_d).is_empty());
        assert!(p.separation > 0.0);
        assert!(p.c_d.is_subset(&p.m_prime));
        assert!(p.c_u.intersection(&p.m_prime).is_empty());
    }

    #[test]
    fn degenerate_and_wrapping_pairs_rejected() {
        let lat = build_torus(24).unwrap();
        assert!(make_annulus_pair(&lat, 2, 2, 1).is_err());
        assert!(make_annulus_pair(&lat, 10, 2, 3).is_err());
        assert!(make_annulus_pair(&lat, 7, 2, 7).is_err());
    }

    #[test]
    fn validate_reports_range_inequality() {
        let lat = build_torus(24).unwrap();
        let p = make_annulus_pair(&lat, 7, 2, 5).unwrap();
        let rep = validate_geometry(&p, 0, 1);
        assert!(rep.range_restriction);
        assert!(!rep.thickness_bound);
        let rep = validate_geometry(&p, 1, 1);
        assert_eq!(rep.range_restriction, 1.0 < p.separation / 10.0);
    }

    #[test]
    fn cut_can_move_between_diamonds() {
        let lat = build_torus(24).unwrap();
        let p = make_annulus_pair(&lat, 7, 2, 5).unwrap();
        let cuts = p.admissible_cuts(lat.layout());
        assert!(cuts.len() > 2);
        for c in cuts {
            p.with_cut(lat.layout(), c).unwrap();
        }
    }

    #[test]
    fn annulus_symmetric_under_reflection() {
        let lat = build_torus(16).unwrap();
        let a = AnnulusSpec { center: (0, 0), r_ann: 4, t: 1 }.region(lat.layout());
        let lay = lat.layout();
        let mirrored: Vec<usize> = a
            .sites()
            .iter()
            .map(|&s| {
                let (x, y) = lay.position(s);
                (0..lay.len()).find(|&k| lay.point_dist2(lay.position(k), (-x, y)) == 0).unwrap()
            })
            .collect();
        assert_eq!(Region::from_sites(lay.len(), mirrored), a);
    }

    proptest! {
        #[test]
        fn metric_axioms(a in 0usize..72, b in 0usize..72, c in 0usize..72) {
            let lat = build_torus(6).unwrap();
            let l = lat.layout();
            prop_assert_eq!(l.dist2(a, b), l.dist2(b, a));
            prop_assert!(l.dist2(a, c) <= l.dist2(a, b) + l.dist2(b, c));
            prop_assert_eq!(l.dist2(a, a), 0);
        }
    }
}
