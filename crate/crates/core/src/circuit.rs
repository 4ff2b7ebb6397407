//! Qudit Clifford circuits: gates as images of the local Weyl generators,
//! Heisenberg evolution of operators and models, and the S̃ invariance
//! experiment.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num::complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::commutant::logical_quotient;
use crate::error::{Error, Result};
use crate::lattice::{build_torus, make_annulus_pair, validate_geometry, AnnulusPair, GeometryReport, Layout, Region};
use crate::model::StabilizerModel;
use crate::ringlinalg::arith::{gcd, inv_mod};
use crate::twist::{stilde_equivalent, stilde_matrix, twist_op, STilde, STildeRecord};
use crate::weyl::{Phase, SiteSystem, WeylOp};

/// Weyl operator on a handful of sites, indexed locally.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalOp {
    pub phase: Phase,
    pub x: Vec<u32>,
    pub z: Vec<u32>,
}

impl LocalOp {
    fn identity(k: usize) -> Self {
        Self { phase: Phase::ZERO, x: vec![0; k], z: vec![0; k] }
    }

    fn unit(k: usize, site: usize, x: u32, z: u32) -> Self {
        let mut op = Self::identity(k);
        op.x[site] = x;
        op.z[site] = z;
        op
    }

    /// `(X^a Z^b)(X^c Z^d) = ω^{bc} X^{a+c} Z^{b+d}` site by site.
    fn mul(&self, o: &Self, dims: &[u32]) -> Self {
        let mut phase = self.phase.add(o.phase);
        let mut x = vec![0; dims.len()];
        let mut z = vec![0; dims.len()];
        for (k, &d) in dims.iter().enumerate() {
            if self.z[k] != 0 && o.x[k] != 0 {
                phase = phase.add(Phase::new((self.z[k] as i128) * (o.x[k] as i128), d as u64));
            }
            x[k] = (self.x[k] + o.x[k]) % d;
            z[k] = (self.z[k] + o.z[k]) % d;
        }
        Self { phase, x, z }
    }

    fn pow(&self, e: u32, dims: &[u32]) -> Self {
        let mut out = Self::identity(dims.len());
        for _ in 0..e {
            out = out.mul(self, dims);
        }
        out
    }

    fn is_scalar(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&e| e == 0)
    }

    fn commutation(&self, o: &Self, dims: &[u32]) -> Phase {
        let mut p = Phase::ZERO;
        for (k, &d) in dims.iter().enumerate() {
            let t = self.z[k] as i128 * o.x[k] as i128 - self.x[k] as i128 * o.z[k] as i128;
            p = p.add(Phase::new(t, d as u64));
        }
        p
    }

    /// Rescales so the `d`-th power is exactly the identity.
    fn fix_order(mut self, dims: &[u32], d: u32) -> Self {
        let p = self.pow(d, dims);
        debug_assert!(p.is_scalar());
        self.phase = self.phase.add(p.phase.neg().divide(d as u64));
        self
    }
}

/// A Clifford unitary on a few sites, stored as the images of `X_k` and
/// `Z_k` under conjugation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalClifford {
    pub dims: Vec<u32>,
    /// `images[2k]` is `U X_k U†`, `images[2k+1]` is `U Z_k U†`.
    pub images: Vec<LocalOp>,
}

impl LocalClifford {
    pub fn identity(dims: &[u32]) -> Self {
        let k = dims.len();
        let images = (0..k).flat_map(|s| [LocalOp::unit(k, s, 1, 0), LocalOp::unit(k, s, 0, 1)]).collect();
        Self { dims: dims.to_vec(), images }
    }

    fn with_images(dims: &[u32], f: impl Fn(usize, bool) -> LocalOp) -> Self {
        let images = (0..dims.len()).flat_map(|s| [f(s, true), f(s, false)]).collect();
        Self { dims: dims.to_vec(), images }
    }

    /// `X ↦ Z`, `Z ↦ X⁻¹` on site `k`.
    pub fn fourier(dims: &[u32], k: usize) -> Self {
        let n = dims.len();
        Self::with_images(dims, |s, is_x| match (s == k, is_x) {
            (true, true) => LocalOp::unit(n, s, 0, 1),
            (true, false) => LocalOp::unit(n, s, dims[s] - 1, 0),
            (false, true) => LocalOp::unit(n, s, 1, 0),
            (false, false) => LocalOp::unit(n, s, 0, 1),
        })
    }

    /// `X ↦ c·XZ`, `Z ↦ Z` on site `k`.
    pub fn phase(dims: &[u32], k: usize) -> Self {
        let n = dims.len();
        Self::with_images(dims, |s, is_x| match (s == k, is_x) {
            (true, true) => LocalOp::unit(n, s, 1, 1).fix_order(dims, dims[s]),
            (_, true) => LocalOp::unit(n, s, 1, 0),
            (_, false) => LocalOp::unit(n, s, 0, 1),
        })
    }

    /// `X ↦ X^a`, `Z ↦ Z^{a⁻¹}` on site `k`.
    pub fn multiply(dims: &[u32], k: usize, a: u32) -> Result<Self> {
        let d = dims[k];
        let inv = inv_mod(a as u64 % d as u64, d as u64)
            .ok_or_else(|| Error::NonClifford(format!("multiplier {a} is not a unit mod {d}")))?;
        let n = dims.len();
        Ok(Self::with_images(dims, |s, is_x| match (s == k, is_x) {
            (true, true) => LocalOp::unit(n, s, a % d, 0),
            (true, false) => LocalOp::unit(n, s, 0, inv as u32),
            (_, true) => LocalOp::unit(n, s, 1, 0),
            (_, false) => LocalOp::unit(n, s, 0, 1),
        }))
    }

    /// Controlled addition `|i, j⟩ ↦ |i, i + j⟩`.
    pub fn sum(dims: &[u32], c: usize, t: usize) -> Result<Self> {
        if c == t || dims[c] != dims[t] {
            return Err(Error::NonClifford("SUM needs two distinct sites of equal dimension".into()));
        }
        let n = dims.len();
        let d = dims[c];
        let mut g = Self::identity(dims);
        g.images[2 * c] = LocalOp::unit(n, c, 1, 0).mul(&LocalOp::unit(n, t, 1, 0), dims);
        g.images[2 * t + 1] = LocalOp::unit(n, c, 0, d - 1).mul(&LocalOp::unit(n, t, 0, 1), dims);
        Ok(g)
    }

    pub fn swap(dims: &[u32], a: usize, b: usize) -> Result<Self> {
        if a == b || dims[a] != dims[b] {
            return Err(Error::NonClifford("SWAP needs two distinct sites of equal dimension".into()));
        }
        let mut g = Self::identity(dims);
        g.images.swap(2 * a, 2 * b);
        g.images.swap(2 * a + 1, 2 * b + 1);
        Ok(g)
    }

    /// Checks that the images obey the Weyl relations, so a unitary exists.
    pub fn validate(&self) -> Result<()> {
        let n = self.dims.len();
        if self.images.len() != 2 * n || self.images.iter().any(|im| im.x.len() != n || im.z.len() != n) {
            return Err(Error::NonClifford("image count or width does not match the support".into()));
        }
        let gens = Self::identity(&self.dims).images;
        for i in 0..2 * n {
            for j in 0..2 * n {
                if self.images[i].commutation(&self.images[j], &self.dims) != gens[i].commutation(&gens[j], &self.dims) {
                    return Err(Error::NonClifford(format!("images {i} and {j} break the commutation relations")));
                }
            }
            let d = self.dims[i / 2];
            let p = self.images[i].pow(d, &self.dims);
            if !p.is_scalar() || !p.phase.is_zero() {
                return Err(Error::NonClifford(format!("image {i} does not have order {d}")));
            }
        }
        Ok(())
    }

    /// `U p U†`.
    pub fn conjugate(&self, p: &LocalOp) -> LocalOp {
        let mut out = LocalOp { phase: p.phase, ..LocalOp::identity(self.dims.len()) };
        for k in 0..self.dims.len() {
            out = out.mul(&self.images[2 * k].pow(p.x[k], &self.dims), &self.dims);
            out = out.mul(&self.images[2 * k + 1].pow(p.z[k], &self.dims), &self.dims);
        }
        out
    }

    /// `other ∘ self`: first `self`, then `other`.
    pub fn then(&self, other: &Self) -> Self {
        Self { dims: self.dims.clone(), images: self.images.iter().map(|im| other.conjugate(im)).collect() }
    }

    /// A unitary realising the images, fixed up to a global phase.
    pub fn unitary(&self) -> DMatrix<Complex64> {
        let dim: usize = self.dims.iter().map(|&d| d as usize).product();
        let strides: Vec<usize> =
            self.dims.iter().scan(1usize, |acc, &d| { let s = *acc; *acc *= d as usize; Some(s) }).collect();
        let apply = |op: &LocalOp, v: &[Complex64]| -> Vec<Complex64> {
            let mut out = vec![Complex64::new(0.0, 0.0); dim];
            let base = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * op.phase.num() as f64 / op.phase.den() as f64);
            for (idx, amp) in v.iter().enumerate() {
                let mut target = 0;
                let mut ph = 0.0;
                for (k, &d) in self.dims.iter().enumerate() {
                    let digit = (idx / strides[k]) % d as usize;
                    ph += (op.z[k] as usize * digit) as f64 / d as f64;
                    target += ((digit + op.x[k] as usize) % d as usize) * strides[k];
                }
                out[target] += base * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * ph) * amp;
            }
            out
        };
        // |0…0⟩ ↦ common +1 eigenvector of the Z images
        let mut v: Vec<Complex64> = (0..dim).map(|i| Complex64::new(1.0 + i as f64 * 0.37, 0.11 * i as f64)).collect();
        for k in 0..self.dims.len() {
            let z = &self.images[2 * k + 1];
            let mut acc = v.clone();
            let mut cur = v.clone();
            for _ in 1..self.dims[k] {
                cur = apply(z, &cur);
                acc.iter_mut().zip(&cur).for_each(|(a, c)| *a += c);
            }
            v = acc;
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|c| *c /= norm);
        let mut u = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut w = v.clone();
            for (k, &d) in self.dims.iter().enumerate() {
                let digit = (col / strides[k]) % d as usize;
                for _ in 0..digit {
                    w = apply(&self.images[2 * k], &w);
                }
            }
            for (row, c) in w.into_iter().enumerate() {
                u[(row, col)] = c;
            }
        }
        u
    }
}

/// A gate placed on concrete sites.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordGate {
    pub gate: String,
    pub sites: Vec<usize>,
    pub params: Vec<i64>,
    pub action: LocalClifford,
}

impl CliffordGate {
    fn build(sys: &SiteSystem, gate: &str, sites: &[usize], params: &[i64]) -> Result<Self> {
        if sites.is_empty() || sites.len() > 2 || sites.iter().any(|&s| s >= sys.len()) {
            return Err(Error::InvalidInput(format!("gate sites {sites:?}")));
        }
        if sites.len() == 2 && sites[0] == sites[1] {
            return Err(Error::InvalidInput("repeated gate site".into()));
        }
        let dims: Vec<u32> = sites.iter().map(|&s| sys.dim(s)).collect();
        let action = match (gate, sites.len()) {
            ("fourier", 1) => LocalClifford::fourier(&dims, 0),
            ("phase", 1) => LocalClifford::phase(&dims, 0),
            ("multiply", 1) => {
                let a = params.first().copied().ok_or_else(|| Error::InvalidInput("multiply needs a parameter".into()))?;
                LocalClifford::multiply(&dims, 0, a.rem_euclid(dims[0] as i64) as u32)?
            }
            ("sum", 2) => LocalClifford::sum(&dims, 0, 1)?,
            ("swap", 2) => LocalClifford::swap(&dims, 0, 1)?,
            _ => return Err(Error::NonClifford(format!("unknown gate {gate} on {} sites", sites.len()))),
        };
        Ok(Self { gate: gate.into(), sites: sites.to_vec(), params: params.to_vec(), action })
    }

    pub fn fourier(sys: &SiteSystem, s: usize) -> Result<Self> {
        Self::build(sys, "fourier", &[s], &[])
    }

    pub fn phase(sys: &SiteSystem, s: usize) -> Result<Self> {
        Self::build(sys, "phase", &[s], &[])
    }

    pub fn multiply(sys: &SiteSystem, s: usize, a: i64) -> Result<Self> {
        Self::build(sys, "multiply", &[s], &[a])
    }

    pub fn sum(sys: &SiteSystem, control: usize, target: usize) -> Result<Self> {
        Self::build(sys, "sum", &[control, target], &[])
    }

    pub fn swap(sys: &SiteSystem, a: usize, b: usize) -> Result<Self> {
        Self::build(sys, "swap", &[a, b], &[])
    }

    /// Explicit images of the local generators.
    pub fn custom(sys: &SiteSystem, sites: &[usize], images: Vec<LocalOp>) -> Result<Self> {
        if sites.is_empty() || sites.len() > 2 || sites.iter().any(|&s| s >= sys.len()) {
            return Err(Error::InvalidInput(format!("gate sites {sites:?}")));
        }
        let action = LocalClifford { dims: sites.iter().map(|&s| sys.dim(s)).collect(), images };
        action.validate()?;
        Ok(Self { gate: "custom".into(), sites: sites.to_vec(), params: Vec::new(), action })
    }
}

/// Layers of gates with disjoint supports; `W = L_D ⋯ L_1`.
#[derive(Clone, Debug, Serialize)]
pub struct Circuit {
    #[serde(skip)]
    sys: Arc<SiteSystem>,
    pub layers: Vec<Vec<CliffordGate>>,
    pub seed: Option<u64>,
    #[serde(skip)]
    site_gate: Vec<Vec<Option<usize>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub site_dims: Vec<u32>,
    pub layers: Vec<Vec<GateRecord>>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateRecord {
    pub gate: String,
    pub sites: Vec<usize>,
    #[serde(default)]
    pub params: Vec<i64>,
    #[serde(default)]
    pub images: Option<Vec<LocalOp>>,
}

impl Circuit {
    pub fn new(sys: &Arc<SiteSystem>, layers: Vec<Vec<CliffordGate>>) -> Result<Self> {
        let mut site_gate = Vec::with_capacity(layers.len());
        for (li, layer) in layers.iter().enumerate() {
            let mut map = vec![None; sys.len()];
            for (gi, g) in layer.iter().enumerate() {
                g.action.validate()?;
                for (k, &s) in g.sites.iter().enumerate() {
                    if s >= sys.len() || g.action.dims[k] != sys.dim(s) {
                        return Err(Error::SiteSystemMismatch);
                    }
                    if map[s].replace(gi).is_some() {
                        return Err(Error::InvalidInput(format!("layer {li} acts twice on site {s}")));
                    }
                }
            }
            site_gate.push(map);
        }
        Ok(Self { sys: sys.clone(), layers, seed: None, site_gate })
    }

    pub fn identity(sys: &Arc<SiteSystem>) -> Self {
        Self::new(sys, Vec::new()).expect("empty circuit")
    }

    pub fn system(&self) -> &Arc<SiteSystem> {
        &self.sys
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Declared range: each nearest-neighbour layer spreads support by at most one.
    pub fn range(&self) -> u32 {
        self.layers.len() as u32
    }

    pub fn to_record(&self) -> CircuitRecord {
        CircuitRecord {
            site_dims: self.sys.dims().to_vec(),
            layers: self
                .layers
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|g| GateRecord {
                            gate: g.gate.clone(),
                            sites: g.sites.clone(),
                            params: g.params.clone(),
                            images: (g.gate == "custom").then(|| g.action.images.clone()),
                        })
                        .collect()
                })
                .collect(),
            seed: self.seed,
        }
    }

    pub fn from_record(sys: &Arc<SiteSystem>, r: &CircuitRecord) -> Result<Self> {
        if r.site_dims != sys.dims() {
            return Err(Error::SiteSystemMismatch);
        }
        let layers = r
            .layers
            .iter()
            .map(|l| {
                l.iter()
                    .map(|g| match &g.images {
                        Some(images) => CliffordGate::custom(sys, &g.sites, images.clone()),
                        None => CliffordGate::build(sys, &g.gate, &g.sites, &g.params),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut c = Self::new(sys, layers)?;
        c.seed = r.seed;
        Ok(c)
    }

    /// Unitary of every layer, for the dense oracle.
    pub fn layer_unitaries(&self) -> Vec<Vec<(Vec<usize>, DMatrix<Complex64>)>> {
        self.layers.iter().map(|l| l.iter().map(|g| (g.sites.clone(), g.action.unitary())).collect()).collect()
    }
}

/// `W p W†`, exactly.
pub fn conjugate_op(w: &Circuit, p: &WeylOp) -> Result<WeylOp> {
    if !Arc::ptr_eq(w.system(), p.system()) && w.system().dims() != p.system().dims() {
        return Err(Error::SiteSystemMismatch);
    }
    let mut x = p.x().to_vec();
    let mut z = p.z().to_vec();
    let mut phase = p.phase();
    for (layer, map) in w.layers.iter().zip(&w.site_gate) {
        let mut touched: Vec<usize> =
            (0..x.len()).filter(|&s| x[s] != 0 || z[s] != 0).filter_map(|s| map[s]).collect();
        touched.sort_unstable();
        touched.dedup();
        for gi in touched {
            let g = &layer[gi];
            let local = LocalOp {
                phase: Phase::ZERO,
                x: g.sites.iter().map(|&s| x[s]).collect(),
                z: g.sites.iter().map(|&s| z[s]).collect(),
            };
            let img = g.action.conjugate(&local);
            phase = phase.add(img.phase);
            for (k, &s) in g.sites.iter().enumerate() {
                x[s] = img.x[k];
                z[s] = img.z[k];
            }
        }
    }
    WeylOp::from_parts(p.system(), phase, x, z)
}

/// `W H W†` term by term, with logicals carried along.
pub fn evolve_model(w: &Circuit, model: &StabilizerModel) -> Result<StabilizerModel> {
    let gens = model.generators().map(|g| conjugate_op(w, g)).collect::<Result<Vec<_>>>()?;
    let logicals = model.logicals().iter().map(|g| conjugate_op(w, g)).collect::<Result<Vec<_>>>()?;
    let mut out = StabilizerModel::new(format!("{}+circuit", model.name()), model.system(), model.layout().clone(), gens, logicals)?
        .with_lto_hint(model.lto_hint())
        .with_group_label(model.group_label().to_vec());
    if let Some(l) = model.lattice_size() {
        out = out.with_lattice_size(l);
    }
    Ok(out)
}

/// Sites at lattice distance one (doubled taxicab distance at most 2).
fn neighbours(layout: &Layout) -> Vec<Vec<usize>> {
    let mut at: HashMap<(i64, i64), usize> = HashMap::new();
    let wrap = |p: (i64, i64)| match layout.period() {
        Some((a, b)) => (p.0.rem_euclid(a), p.1.rem_euclid(b)),
        None => p,
    };
    for s in 0..layout.len() {
        at.insert(wrap(layout.position(s)), s);
    }
    const OFFSETS: [(i64, i64); 8] = [(1, 1), (1, -1), (-1, 1), (-1, -1), (2, 0), (-2, 0), (0, 2), (0, -2)];
    (0..layout.len())
        .map(|s| {
            let p = layout.position(s);
            let mut v: Vec<usize> = OFFSETS
                .iter()
                .filter_map(|o| at.get(&wrap((p.0 + o.0, p.1 + o.1))).copied())
                .filter(|&t| t != s)
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect()
}

fn random_local(dims: &[u32], rng: &mut ChaCha8Rng) -> LocalClifford {
    let mut g = LocalClifford::identity(dims);
    let n = dims.len();
    for _ in 0..4 * n + 2 {
        let k = rng.gen_range(0..n);
        let letter = match rng.gen_range(0..if n == 2 { 5 } else { 3 }) {
            0 => LocalClifford::fourier(dims, k),
            1 => LocalClifford::phase(dims, k),
            2 => {
                let d = dims[k];
                let units: Vec<u32> = (1..d).filter(|&a| gcd(a as u64, d as u64) == 1).collect();
                LocalClifford::multiply(dims, k, *units.choose(rng).unwrap_or(&1)).expect("unit")
            }
            3 => LocalClifford::sum(dims, k, 1 - k).expect("two sites"),
            _ => LocalClifford::swap(dims, 0, 1).expect("two sites"),
        };
        g = g.then(&letter);
    }
    g
}

/// Seeded layered circuit of nearest-neighbour random Cliffords.
pub fn random_circuit(sys: &Arc<SiteSystem>, layout: &Layout, depth: usize, seed: u64) -> Result<Circuit> {
    if layout.len() != sys.len() {
        return Err(Error::SiteSystemMismatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = neighbours(layout);
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let mut order: Vec<usize> = (0..sys.len()).collect();
        order.shuffle(&mut rng);
        let mut used = vec![false; sys.len()];
        let mut layer = Vec::new();
        for s in order {
            if used[s] {
                continue;
            }
            used[s] = true;
            let free: Vec<usize> = nb[s].iter().copied().filter(|&t| !used[t] && sys.dim(t) == sys.dim(s)).collect();
            let sites = if !free.is_empty() && rng.gen_bool(0.5) {
                let t = *free.choose(&mut rng).expect("nonempty");
                used[t] = true;
                vec![s, t]
            } else {
                vec![s]
            };
            let dims: Vec<u32> = sites.iter().map(|&q| sys.dim(q)).collect();
            let action = random_local(&dims, &mut rng);
            layer.push(CliffordGate { gate: "custom".into(), sites, params: Vec::new(), action });
        }
        layers.push(layer);
    }
    let mut c = Circuit::new(sys, layers)?;
    c.seed = Some(seed);
    Ok(c)
}

/// Outcome of sampling `W(P∞Q)W† = (WPW†)∞(WQW†)`.
#[derive(Clone, Debug, Serialize)]
pub struct TwistIdentityReport {
    pub checked: usize,
    pub failures: usize,
    /// The `R`-fattened annuli still meet in pieces that a cut can separate,
    /// so the identity is guaranteed.
    pub cones_separated: bool,
    pub notes: Vec<String>,
}

/// Samples random Weyl `P` on the left annulus and `Q` on the right and
/// compares both sides of the twist identity. The right side uses the light
/// cones of the annuli, with each piece of their overlap put wholly on one
/// side of the cut.
pub fn twist_identity_check(
    model: &StabilizerModel,
    pair: &AnnulusPair,
    w: &Circuit,
    samples: usize,
    seed: u64,
) -> Result<TwistIdentityReport> {
    let layout = model.layout();
    let cone = |r: &Region| layout.fatten(r, 2 * w.range() as i64);
    let (left_cone, right_cone) = (cone(&pair.left_region), cone(&pair.right_region));
    let mut cut = pair.m_prime.clone();
    let mut notes = Vec::new();
    let mut cones_separated = true;
    for piece in layout.components(&left_cone.intersection(&right_cone)) {
        let (has_d, has_u) = (piece.meets(pair.c_d.sites()), piece.meets(pair.c_u.sites()));
        if has_d && has_u {
            cones_separated = false;
            notes.push("fattened annuli meet in one piece holding both diamonds; the identity is not guaranteed".into());
        } else if has_d {
            cut = cut.union(&piece);
        } else {
            cut = cut.difference(&piece);
        }
    }
    let cone_pair = AnnulusPair::custom(layout, left_cone, right_cone, cut)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sys = model.system();
    let mut failures = 0;
    for _ in 0..samples {
        let p = random_on(sys, pair.left_region.sites(), &mut rng)?;
        let q = random_on(sys, pair.right_region.sites(), &mut rng)?;
        let lhs = conjugate_op(w, &twist_op(&p, &q, pair)?)?;
        let rhs = twist_op(&conjugate_op(w, &p)?, &conjugate_op(w, &q)?, &cone_pair)?;
        if lhs != rhs {
            failures += 1;
        }
    }
    Ok(TwistIdentityReport { checked: samples, failures, cones_separated, notes })
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub seed: Option<u64>,
    pub depth: usize,
    pub geometry: GeometryReport,
    /// All desk-scale preconditions hold, so equivalence is a certified claim.
    pub certified: bool,
    pub original_order: u128,
    pub evolved_order: u128,
    pub stilde_equivalent: bool,
    pub twist_pairs_checked: usize,
    pub twist_identity_failures: usize,
    /// The fattened annuli overlap in pieces that separate the diamonds, so
    /// the identity is expected to hold exactly.
    pub cones_separated: bool,
    pub notes: Vec<String>,
    pub original_stilde: STildeRecord,
    pub evolved_stilde: STildeRecord,
}

fn random_on(sys: &Arc<SiteSystem>, sites: &[usize], rng: &mut ChaCha8Rng) -> Result<WeylOp> {
    let xs: Vec<(usize, i64)> = sites.iter().map(|&s| (s, rng.gen_range(0..sys.dim(s)) as i64)).collect();
    let zs: Vec<(usize, i64)> = sites.iter().map(|&s| (s, rng.gen_range(0..sys.dim(s)) as i64)).collect();
    WeylOp::from_sparse(sys, Phase::ZERO, &xs, &zs)
}

/// S̃ of a toric-type model on an annulus pair.
pub fn pair_stilde(model: &StabilizerModel, pair: &AnnulusPair) -> Result<STilde> {
    let (l, r) = match (pair.left, pair.right) {
        (Some(l), Some(r)) => (l, r),
        _ => return Err(Error::Geometry("pair has no annulus descriptors".into())),
    };
    let al = logical_quotient(model, &l)?;
    let ar = logical_quotient(model, &r)?;
    stilde_matrix(&*model.state()?, &al, &ar, pair)
}

/// Compares S̃ before and after `w`, the evolved one on annuli thickened by
/// the circuit range, and checks `W(P∞Q)W† = (WPW†)∞(WQW†)` on `samples`
/// random pairs.
pub fn invariance_experiment(
    model: &StabilizerModel,
    pair: &AnnulusPair,
    w: &Circuit,
    samples: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    invariance_against(model, pair, None, w, samples, seed)
}

/// As [`invariance_experiment`], reusing a precomputed S̃ of `model` on `pair`.
pub fn invariance_against(
    model: &StabilizerModel,
    pair: &AnnulusPair,
    reference: Option<&STilde>,
    w: &Circuit,
    samples: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    let (a, l, sep) = match (pair.left, pair.lattice_size, pair.center_offset) {
        (Some(a), Some(l), Some(sep)) => (a, l, sep),
        _ => return Err(Error::Geometry("invariance needs a torus annulus pair".into())),
    };
    let range = w.range();
    let geometry = validate_geometry(pair, range, model.interaction_range());
    let mut notes = Vec::new();
    if !geometry.desk_scale_pass {
        notes.push("bound not met: equivalence is computed but not certified".into());
    }
    let lat = build_torus(l)?;
    // thickness t + R when the thickened pair exists, else the largest that does
    let mut evolved_pair = None;
    for t2 in (a.t..=a.t + range).rev() {
        if let Ok(p) = make_annulus_pair(&lat, a.r_ann, t2, sep) {
            if t2 < a.t + range {
                notes.push(format!("thickened pair does not fit; evolved annuli use t = {t2}"));
            }
            evolved_pair = p.with_cut(lat.layout(), pair.cut).ok();
            break;
        }
    }
    let evolved_pair = evolved_pair.ok_or_else(|| Error::Geometry("no evolved annulus pair fits".into()))?;
    let evolved = evolve_model(w, model)?;
    let s0 = match reference {
        Some(s) => s.clone(),
        None => pair_stilde(model, pair)?,
    };
    let s1 = pair_stilde(&evolved, &evolved_pair)?;
    let tw = twist_identity_check(model, pair, w, samples, seed)?;
    notes.extend(tw.notes);
    Ok(InvarianceReport {
        seed: w.seed,
        depth: w.depth(),
        certified: geometry.desk_scale_pass,
        geometry,
        original_order: s0.rows() as u128,
        evolved_order: s1.rows() as u128,
        stilde_equivalent: stilde_equivalent(&s0, &s1),
        twist_pairs_checked: tw.checked,
        twist_identity_failures: tw.failures,
        cones_separated: tw.cones_separated,
        notes,
        original_stilde: s0.to_record(),
        evolved_stilde: s1.to_record(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_torus, make_annulus_pair};
    use crate::model::{build_toric_code, check_model};
    use crate::oracle::DenseState;
    use proptest::prelude::*;

    #[test]
    fn fourier_maps_x_to_z() {
        let sys = SiteSystem::uniform(1, 3).unwrap();
        let w = Circuit::new(&sys, vec![vec![CliffordGate::fourier(&sys, 0).unwrap()]]).unwrap();
        let x = WeylOp::single(&sys, 0, 1, 0);
        let z = WeylOp::single(&sys, 0, 0, 1);
        assert_eq!(conjugate_op(&w, &x).unwrap(), z);
        assert_eq!(conjugate_op(&w, &z).unwrap(), x.inverse());
        assert_eq!(conjugate_op(&Circuit::identity(&sys), &x).unwrap(), x);
    }

    #[test]
    fn library_gates_are_valid() {
        for d in [2u32, 3, 4, 6] {
            let dims = [d, d];
            LocalClifford::fourier(&dims, 1).validate().unwrap();
            LocalClifford::phase(&dims, 0).validate().unwrap();
            LocalClifford::sum(&dims, 0, 1).unwrap().validate().unwrap();
            LocalClifford::swap(&dims, 0, 1).unwrap().validate().unwrap();
        }
        assert!(LocalClifford::multiply(&[4], 0, 2).is_err());
    }

    #[test]
    fn bogus_custom_rejected() {
        let sys = SiteSystem::uniform(1, 2).unwrap();
        let bad = vec![LocalOp::unit(1, 0, 1, 0), LocalOp::unit(1, 0, 1, 0)];
        assert!(matches!(CliffordGate::custom(&sys, &[0], bad), Err(Error::NonClifford(_))));
    }

    #[test]
    fn overlapping_layer_rejected() {
        let sys = SiteSystem::uniform(3, 2).unwrap();
        let layer = vec![CliffordGate::sum(&sys, 0, 1).unwrap(), CliffordGate::fourier(&sys, 1).unwrap()];
        assert!(Circuit::new(&sys, vec![layer]).is_err());
    }

    #[test]
    fn dense_heisenberg_matches_symbolic() {
        for d in [2u32, 3] {
            let n = if d == 2 { 8 } else { 5 };
            let sys = SiteSystem::uniform(n, d).unwrap();
            let layout = Layout::line(n);
            let w = random_circuit(&sys, &layout, 3, 11 + d as u64).unwrap();
            let units = w.layer_unitaries();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..5 {
                let p = random_on(&sys, &(0..n).collect::<Vec<_>>(), &mut rng).unwrap();
                let wp = conjugate_op(&w, &p).unwrap();
                let psi = DenseState::random(sys.dims(), &mut rng);
                // W p W† ψ
                let mut v = psi.clone();
                for layer in units.iter().rev() {
                    for (sites, u) in layer {
                        v = v.apply_local(sites, &u.adjoint());
                    }
                }
                v = v.apply_op(&p);
                for layer in &units {
                    for (sites, u) in layer {
                        v = v.apply_local(sites, u);
                    }
                }
                let want = psi.apply_op(&wp);
                let err: f64 = v.amplitudes().iter().zip(want.amplitudes()).map(|(a, b)| (a - b).norm_sqr()).sum();
                assert!(err < 1e-18, "d = {d}, err = {err}");
            }
        }
    }

    #[test]
    fn evolved_toric_code_stays_consistent() {
        let lat = build_torus(6).unwrap();
        let m = build_toric_code(&lat, 3).unwrap();
        let w = random_circuit(m.system(), m.layout(), 2, 3).unwrap();
        let e = evolve_model(&w, &m).unwrap();
        let rep = check_model(&e, 0);
        assert!(rep.commuting && rep.frustration_free);
        assert!(e.interaction_range() <= m.interaction_range() + 2 * w.range());
        assert!(e.state().unwrap().is_pure());
    }

    #[test]
    fn single_site_layer_keeps_supports() {
        let lat = build_torus(4).unwrap();
        let m = build_toric_code(&lat, 2).unwrap();
        let layer = (0..m.num_sites()).map(|s| CliffordGate::fourier(m.system(), s).unwrap()).collect();
        let w = Circuit::new(m.system(), vec![layer]).unwrap();
        let e = evolve_model(&w, &m).unwrap();
        for (a, b) in m.terms().iter().zip(e.terms()) {
            assert_eq!(a.support(), b.support());
        }
    }

    #[test]
    fn json_round_trip() {
        let sys = SiteSystem::uniform(4, 3).unwrap();
        let w = random_circuit(&sys, &Layout::line(4), 2, 9).unwrap();
        let text = serde_json::to_string(&w.to_record()).unwrap();
        let back = Circuit::from_record(&sys, &serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.layers, w.layers);
        assert_eq!(back.seed, Some(9));
    }

    #[test]
    fn evolved_algebra_sees_band_terms() {
        // this circuit leaves a spurious class on the thin annulus unless
        // terms that miss the annulus join the null group
        let lat = build_torus(24).unwrap();
        let m = build_toric_code(&lat, 2).unwrap();
        let pair = make_annulus_pair(&lat, 7, 2, 5).unwrap();
        let w = random_circuit(m.system(), m.layout(), 2, 15867).unwrap();
        let rep = invariance_experiment(&m, &pair, &w, 0, 1).unwrap();
        assert_eq!((rep.original_order, rep.evolved_order), (4, 4));
        assert!(rep.stilde_equivalent);
    }

    #[test]
    fn twist_identity_depends_on_cone_separation() {
        let lat = build_torus(24).unwrap();
        let m = build_toric_code(&lat, 2).unwrap();
        let w = random_circuit(m.system(), m.layout(), 2, 7919 * 2 + 32).unwrap();
        let apart = make_annulus_pair(&lat, 7, 1, 7).unwrap();
        let rep = twist_identity_check(&m, &apart, &w, 50, 3).unwrap();
        assert!(rep.cones_separated);
        assert_eq!(rep.failures, 0);
        // at separation 5 the fattened diamonds merge and this circuit breaks it
        let touching = make_annulus_pair(&lat, 7, 2, 5).unwrap();
        let rep = twist_identity_check(&m, &touching, &w, 50, 3).unwrap();
        assert!(!rep.cones_separated);
        assert!(rep.failures > 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn conjugation_preserves_commutation(seed in 0u64..1000, d in 2u32..5) {
            let sys = SiteSystem::uniform(6, d).unwrap();
            let layout = Layout::line(6);
            let w = random_circuit(&sys, &layout, 2, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let all: Vec<usize> = (0..6).collect();
            let p = random_on(&sys, &all, &mut rng).unwrap();
            let q = random_on(&sys, &all, &mut rng).unwrap();
            let (wp, wq) = (conjugate_op(&w, &p).unwrap(), conjugate_op(&w, &q).unwrap());
            prop_assert_eq!(wp.commutation_exponent(&wq).unwrap(), p.commutation_exponent(&q).unwrap());
            prop_assert_eq!(conjugate_op(&w, &(&p * &q)).unwrap(), &wp * &wq);
            // support growth bounded by the range
            let single = WeylOp::single(&sys, 3, 1, 0);
            let s = conjugate_op(&w, &single).unwrap().support();
            prop_assert!(s.iter().all(|&t| (t as i64 - 3).abs() <= w.range() as i64 * 2));
        }
    }
}
