//! Commuting-projector Pauli models and their stabilizer ground states.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::lattice::{Layout, Region, TorusLattice};
use crate::weyl::{Phase, SiteSystem, WeylOp, WeylOpRecord, WeylSpan, WeylSum};

/// Projector `h = (1/n) Σ_{k<n} gᵏ` for a Weyl generator `g` with `gⁿ = I`.
#[derive(Clone, Debug)]
pub struct ProjectorTerm {
    generator: WeylOp,
    order: u64,
    support: Vec<usize>,
}

impl ProjectorTerm {
    pub fn new(generator: WeylOp) -> Result<Self> {
        let (order, phase) = generator.order_of();
        if !phase.is_zero() {
            return Err(Error::InvalidInput(format!(
                "generator {generator} has order {order} up to the phase {phase}; its average is not a projector"
            )));
        }
        let support = generator.support();
        Ok(Self { generator, order, support })
    }

    pub fn generator(&self) -> &WeylOp {
        &self.generator
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn projector(&self) -> WeylSum {
        let mut s = WeylSum::zero(self.generator.system());
        let w = Cyclo::from_ratio(1, self.order as i64);
        for k in 0..self.order {
            s.add_term(w.clone(), &self.generator.pow(k as i64));
        }
        s
    }
}

/// Stabilizer state given by a commuting, phase-consistent generating set.
#[derive(Clone, Debug)]
pub struct StabilizerState {
    sys: Arc<SiteSystem>,
    generators: Vec<WeylOp>,
    span: WeylSpan,
}

impl StabilizerState {
    pub fn new(sys: &Arc<SiteSystem>, generators: Vec<WeylOp>) -> Result<Self> {
        if let Some((a, b)) = first_noncommuting(&generators, sys.len()) {
            return Err(Error::InvalidInput(format!("stabilizers {a} and {b} do not commute")));
        }
        let span = WeylSpan::new(sys, &generators);
        let bad = span.scalar_phases();
        if !bad.is_empty() {
            let list: Vec<String> = bad.iter().map(|p| p.to_string()).collect();
            return Err(Error::Frustrated(format!("group contains phases {}", list.join(", "))));
        }
        Ok(Self { sys: sys.clone(), generators, span })
    }

    pub fn system(&self) -> &Arc<SiteSystem> {
        &self.sys
    }

    pub fn generators(&self) -> &[WeylOp] {
        &self.generators
    }

    pub fn span(&self) -> &WeylSpan {
        &self.span
    }

    /// Whether the generators fix a unique state.
    pub fn is_pure(&self) -> bool {
        self.span.order_exact() == self.sys.hilbert_dim_exact()
    }

    /// `⟨ψ|op|ψ⟩`: a root of unity when `op` is a stabilizer up to phase, else 0.
    pub fn expectation(&self, op: &WeylOp) -> Cyclo {
        match self.span.residual_phase(op) {
            Some(p) => p.to_cyclo(),
            None => Cyclo::zero(),
        }
    }

    pub fn expectation_sum(&self, s: &WeylSum) -> Cyclo {
        let mut acc = Cyclo::zero();
        for (c, op) in s.terms() {
            acc = &acc + &(c * &self.expectation(op));
        }
        acc
    }
}

/// Index pair of the first two noncommuting operators, checked via shared sites.
fn first_noncommuting(ops: &[WeylOp], n: usize) -> Option<(String, String)> {
    let supports: Vec<Vec<usize>> = ops.iter().map(|o| o.support()).collect();
    let mut at_site: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, s) in supports.iter().enumerate() {
        for &i in s {
            at_site[i].push(k);
        }
    }
    for (k, s) in supports.iter().enumerate() {
        let mut others: Vec<usize> = s.iter().flat_map(|&i| at_site[i].iter().copied()).filter(|&j| j > k).collect();
        others.sort_unstable();
        others.dedup();
        for j in others {
            if !ops[k].commutation_on(&ops[j], s.iter().copied()).is_zero() {
                return Some((ops[k].to_string(), ops[j].to_string()));
            }
        }
    }
    None
}

/// `H = −Σ h_j` with commuting Weyl projector terms, plus extra stabilizers
/// (e.g. torus logicals) that pick out one ground state.
#[derive(Clone, Debug)]
pub struct StabilizerModel {
    name: String,
    sys: Arc<SiteSystem>,
    layout: Layout,
    lattice_size: Option<usize>,
    terms: Vec<ProjectorTerm>,
    logicals: Vec<WeylOp>,
    interaction_range: u32,
    lto_hint: bool,
    group_label: Vec<u64>,
    site_terms: Vec<Vec<usize>>,
    state: OnceLock<Arc<StabilizerState>>,
}

impl StabilizerModel {
    pub fn new(
        name: impl Into<String>,
        sys: &Arc<SiteSystem>,
        layout: Layout,
        generators: Vec<WeylOp>,
        logicals: Vec<WeylOp>,
    ) -> Result<Self> {
        if layout.len() != sys.len() {
            return Err(Error::DimensionMismatch(format!("{} positions for {} sites", layout.len(), sys.len())));
        }
        for g in generators.iter().chain(&logicals) {
            if !Arc::ptr_eq(g.system(), sys) && **g.system() != **sys {
                return Err(Error::SiteSystemMismatch);
            }
        }
        let terms = generators.into_iter().map(ProjectorTerm::new).collect::<Result<Vec<_>>>()?;
        let mut site_terms = vec![Vec::new(); sys.len()];
        let mut w2 = 0;
        for (k, t) in terms.iter().enumerate() {
            for &s in t.support() {
                site_terms[s].push(k);
            }
            w2 = w2.max(layout.diameter2(t.support()));
        }
        Ok(Self {
            name: name.into(),
            sys: sys.clone(),
            layout,
            lattice_size: None,
            terms,
            logicals,
            interaction_range: ((w2 + 1) / 2) as u32,
            lto_hint: false,
            group_label: Vec::new(),
            site_terms,
            state: OnceLock::new(),
        })
    }

    pub fn with_lattice_size(mut self, l: usize) -> Self {
        self.lattice_size = Some(l);
        self
    }

    /// Marks the model as locally topologically ordered (metadata consulted
    /// by invisibility certification; verified densely where feasible).
    pub fn with_lto_hint(mut self, lto: bool) -> Self {
        self.lto_hint = lto;
        self
    }

    /// Test-only metadata: invariant factors of the expected anyon group.
    pub fn with_group_label(mut self, label: Vec<u64>) -> Self {
        self.group_label = label;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn system(&self) -> &Arc<SiteSystem> {
        &self.sys
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn lattice_size(&self) -> Option<usize> {
        self.lattice_size
    }

    pub fn num_sites(&self) -> usize {
        self.sys.len()
    }

    pub fn terms(&self) -> &[ProjectorTerm] {
        &self.terms
    }

    pub fn generators(&self) -> impl Iterator<Item = &WeylOp> {
        self.terms.iter().map(|t| t.generator())
    }

    pub fn logicals(&self) -> &[WeylOp] {
        &self.logicals
    }

    pub fn interaction_range(&self) -> u32 {
        self.interaction_range
    }

    pub fn lto_hint(&self) -> bool {
        self.lto_hint
    }

    pub fn group_label(&self) -> &[u64] {
        &self.group_label
    }

    /// Indices of terms whose support meets `sites`.
    pub fn terms_meeting(&self, sites: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = sites.iter().flat_map(|&s| self.site_terms[s].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Indices of terms supported inside `region`.
    pub fn terms_inside(&self, region: &Region) -> Vec<usize> {
        self.terms_meeting(region.sites())
            .into_iter()
            .filter(|&k| region.contains_all(self.terms[k].support()))
            .collect()
    }

    /// The ground state fixed by the terms and logical stabilizers.
    pub fn state(&self) -> Result<Arc<StabilizerState>> {
        if let Some(s) = self.state.get() {
            return Ok(s.clone());
        }
        let gens: Vec<WeylOp> = self.generators().cloned().chain(self.logicals.iter().cloned()).collect();
        let s = Arc::new(StabilizerState::new(&self.sys, gens)?);
        Ok(self.state.get_or_init(|| s).clone())
    }

    /// Same model with additional terms that must already stabilize the state.
    pub fn with_extra_terms(&self, extra: Vec<WeylOp>) -> Result<Self> {
        let state = self.state()?;
        for e in &extra {
            if state.expectation(e) != Cyclo::one() {
                return Err(Error::InvalidInput(format!("extra term {e} does not stabilize the ground state")));
            }
        }
        let gens: Vec<WeylOp> = self.generators().cloned().chain(extra).collect();
        let mut m = Self::new(self.name.clone(), &self.sys, self.layout.clone(), gens, self.logicals.clone())?;
        m.lattice_size = self.lattice_size;
        m.lto_hint = self.lto_hint;
        m.group_label = self.group_label.clone();
        Ok(m)
    }

    /// Same terms with different logical stabilizers.
    pub fn with_logicals(&self, logicals: Vec<WeylOp>) -> Result<Self> {
        let gens: Vec<WeylOp> = self.generators().cloned().collect();
        let mut m = Self::new(self.name.clone(), &self.sys, self.layout.clone(), gens, logicals)?;
        m.lattice_size = self.lattice_size;
        m.lto_hint = self.lto_hint;
        m.group_label = self.group_label.clone();
        Ok(m)
    }

    pub fn to_record(&self) -> ModelRecord {
        ModelRecord {
            name: self.name.clone(),
            lattice: self.lattice_size,
            site_dims: self.sys.dims().to_vec(),
            layout: self.layout.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| TermRecord { generator: t.generator.to_record(), support: t.support.clone() })
                .collect(),
            logicals: self.logicals.iter().map(|l| l.to_record()).collect(),
            interaction_range: self.interaction_range,
            lto_hint: self.lto_hint,
            group_label: self.group_label.clone(),
        }
    }

    pub fn from_record(r: &ModelRecord) -> Result<Self> {
        let sys = SiteSystem::new(r.site_dims.clone())?;
        let gens = r.terms.iter().map(|t| WeylOp::from_record(&sys, &t.generator)).collect::<Result<Vec<_>>>()?;
        let logs = r.logicals.iter().map(|l| WeylOp::from_record(&sys, l)).collect::<Result<Vec<_>>>()?;
        let mut m = Self::new(r.name.clone(), &sys, r.layout.clone(), gens, logs)?
            .with_lto_hint(r.lto_hint)
            .with_group_label(r.group_label.clone());
        m.lattice_size = r.lattice;
        Ok(m)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermRecord {
    pub generator: WeylOpRecord,
    pub support: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelRecord {
    pub name: String,
    pub lattice: Option<usize>,
    pub site_dims: Vec<u32>,
    pub layout: Layout,
    pub terms: Vec<TermRecord>,
    pub logicals: Vec<WeylOpRecord>,
    pub interaction_range: u32,
    pub lto_hint: bool,
    pub group_label: Vec<u64>,
}

/// ℤ_d toric code with both torus logical signs `+1`.
pub fn build_toric_code(lat: &TorusLattice, d: u32) -> Result<StabilizerModel> {
    build_toric_code_with_signs(lat, d, [0, 0])
}

/// ℤ_d toric code; `signs[k]` fixes the `k`-th Z-loop eigenvalue to `ω^{-signs[k]}`.
pub fn build_toric_code_with_signs(lat: &TorusLattice, d: u32, signs: [i64; 2]) -> Result<StabilizerModel> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("toric code needs d >= 2, got {d}")));
    }
    let sys = SiteSystem::uniform(lat.num_sites(), d)?;
    let l = lat.size() as i64;
    let mut gens = Vec::with_capacity(2 * lat.num_sites());
    for j in 0..l {
        for i in 0..l {
            gens.push(WeylOp::from_sparse(&sys, Phase::ZERO, &lat.star(i, j), &[])?);
        }
    }
    for j in 0..l {
        for i in 0..l {
            gens.push(WeylOp::from_sparse(&sys, Phase::ZERO, &[], &lat.plaquette(i, j))?);
        }
    }
    let logicals = toric_z_loops(lat, &sys)?
        .into_iter()
        .zip(signs)
        .map(|(z, s)| z.with_phase(Phase::new(s as i128, d as u64)))
        .collect();
    Ok(StabilizerModel::new(format!("toric_Z{d}_L{l}"), &sys, lat.layout().clone(), gens, logicals)?
        .with_lattice_size(lat.size())
        .with_lto_hint(true)
        .with_group_label(vec![d as u64]))
}

/// Open `nx × ny` vertex grid with smooth boundaries: a star on every
/// vertex and a plaquette on every face. The ground state is unique.
pub fn build_planar_toric_patch(nx: usize, ny: usize, d: u32) -> Result<StabilizerModel> {
    if d < 2 || nx < 2 || ny < 2 {
        return Err(Error::InvalidInput(format!("planar patch needs d >= 2 and a 2x2 grid, got {nx}x{ny}, d = {d}")));
    }
    let (nx, ny) = (nx as i64, ny as i64);
    let mut positions = Vec::new();
    let mut index = std::collections::HashMap::new();
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                index.insert((2 * i + 1, 2 * j), positions.len());
                positions.push((2 * i + 1, 2 * j));
            }
            if j + 1 < ny {
                index.insert((2 * i, 2 * j + 1), positions.len());
                positions.push((2 * i, 2 * j + 1));
            }
        }
    }
    let sys = SiteSystem::uniform(positions.len(), d)?;
    let edges = |list: [((i64, i64), i64); 4]| -> Vec<(usize, i64)> {
        list.iter().filter_map(|(p, s)| index.get(p).map(|&e| (e, *s))).collect()
    };
    let mut gens = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (2 * i, 2 * j);
            let star = edges([((x + 1, y), 1), ((x, y + 1), 1), ((x - 1, y), -1), ((x, y - 1), -1)]);
            gens.push(WeylOp::from_sparse(&sys, Phase::ZERO, &star, &[])?);
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (x, y) = (2 * i, 2 * j);
            let plaq = edges([((x + 1, y), 1), ((x + 2, y + 1), 1), ((x + 1, y + 2), -1), ((x, y + 1), -1)]);
            gens.push(WeylOp::from_sparse(&sys, Phase::ZERO, &[], &plaq)?);
        }
    }
    Ok(StabilizerModel::new(format!("patch_Z{d}_{nx}x{ny}"), &sys, Layout::new(positions, None), gens, vec![])?
        .with_lto_hint(true)
        .with_group_label(vec![d as u64]))
}

/// Noncontractible Z loops along row 0 (horizontal edges) and column 0.
pub fn toric_z_loops(lat: &TorusLattice, sys: &Arc<SiteSystem>) -> Result<[WeylOp; 2]> {
    let l = lat.size() as i64;
    let row: Vec<(usize, i64)> = (0..l).map(|i| (lat.h_edge(i, 0), 1)).collect();
    let col: Vec<(usize, i64)> = (0..l).map(|j| (lat.v_edge(0, j), 1)).collect();
    Ok([WeylOp::from_sparse(sys, Phase::ZERO, &[], &row)?, WeylOp::from_sparse(sys, Phase::ZERO, &[], &col)?])
}

/// Noncontractible X loops on the dual lattice, conjugate to [`toric_z_loops`].
pub fn toric_x_loops(lat: &TorusLattice, sys: &Arc<SiteSystem>) -> Result<[WeylOp; 2]> {
    let l = lat.size() as i64;
    let col: Vec<(usize, i64)> = (0..l).map(|j| (lat.h_edge(0, j), 1)).collect();
    let row: Vec<(usize, i64)> = (0..l).map(|i| (lat.v_edge(i, 0), 1)).collect();
    Ok([WeylOp::from_sparse(sys, Phase::ZERO, &col, &[])?, WeylOp::from_sparse(sys, Phase::ZERO, &row, &[])?])
}

/// Disjoint union of two models on the same geometry; sites of `b` follow those of `a`.
pub fn stack_models(a: &StabilizerModel, b: &StabilizerModel) -> Result<StabilizerModel> {
    if a.lattice_size != b.lattice_size || a.layout.period() != b.layout.period() {
        return Err(Error::Geometry("stacked models must share the lattice".into()));
    }
    let dims: Vec<u32> = a.sys.dims().iter().chain(b.sys.dims()).copied().collect();
    let sys = SiteSystem::new(dims)?;
    let off = a.num_sites();
    let mut positions: Vec<(i64, i64)> = (0..a.num_sites()).map(|s| a.layout.position(s)).collect();
    positions.extend((0..b.num_sites()).map(|s| b.layout.position(s)));
    let layout = Layout::new(positions, a.layout.period());
    let mut gens = Vec::new();
    for g in a.generators() {
        gens.push(g.embed(&sys, 0)?);
    }
    for g in b.generators() {
        gens.push(g.embed(&sys, off)?);
    }
    let mut logs = Vec::new();
    for g in &a.logicals {
        logs.push(g.embed(&sys, 0)?);
    }
    for g in &b.logicals {
        logs.push(g.embed(&sys, off)?);
    }
    let label = a.group_label.iter().chain(&b.group_label).copied().collect();
    let mut m = StabilizerModel::new(format!("{}+{}", a.name, b.name), &sys, layout, gens, logs)?
        .with_lto_hint(a.lto_hint && b.lto_hint)
        .with_group_label(label);
    m.lattice_size = a.lattice_size;
    Ok(m)
}

/// Appends `count` qudits in `|0⟩`, each with a rank-one `Z`-average term.
/// Ancilla `k` sits at the position of site `k mod n`.
pub fn add_trivial_ancillas(model: &StabilizerModel, count: usize) -> Result<StabilizerModel> {
    if count == 0 {
        return Ok(model.clone());
    }
    let n = model.num_sites();
    let d = model.sys.dim(0);
    let dims: Vec<u32> = model.sys.dims().iter().copied().chain(std::iter::repeat_n(d, count)).collect();
    let sys = SiteSystem::new(dims)?;
    let mut positions: Vec<(i64, i64)> = (0..n).map(|s| model.layout.position(s)).collect();
    positions.extend((0..count).map(|k| model.layout.position(k % n)));
    let layout = Layout::new(positions, model.layout.period());
    let mut gens = model.generators().map(|g| g.embed(&sys, 0)).collect::<Result<Vec<_>>>()?;
    gens.extend((0..count).map(|k| WeylOp::single(&sys, n + k, 0, 1)));
    let logs = model.logicals.iter().map(|g| g.embed(&sys, 0)).collect::<Result<Vec<_>>>()?;
    let mut m = StabilizerModel::new(format!("{}+anc{count}", model.name), &sys, layout, gens, logs)?
        .with_lto_hint(model.lto_hint)
        .with_group_label(model.group_label.clone());
    m.lattice_size = model.lattice_size;
    Ok(m)
}

/// `|0…0⟩` with single-site `Z` terms.
pub fn build_product_state(layout: Layout, d: u32) -> Result<StabilizerModel> {
    let sys = SiteSystem::uniform(layout.len(), d)?;
    let gens = (0..layout.len()).map(|s| WeylOp::single(&sys, s, 0, 1)).collect();
    Ok(StabilizerModel::new(format!("product_d{d}"), &sys, layout, gens, vec![])?.with_lto_hint(true))
}

/// Open Ising chain `Z_i Z_{i+1}` with one `Z` field term on `field_site`.
pub fn build_ising_with_field(n: usize, field_site: usize) -> Result<StabilizerModel> {
    if n < 2 || field_site >= n {
        return Err(Error::InvalidInput("Ising chain needs n >= 2 and a field site inside".into()));
    }
    let sys = SiteSystem::uniform(n, 2)?;
    let mut gens: Vec<WeylOp> = (0..n - 1)
        .map(|i| WeylOp::from_sparse(&sys, Phase::ZERO, &[], &[(i, 1), (i + 1, 1)]))
        .collect::<Result<_>>()?;
    gens.push(WeylOp::single(&sys, field_site, 0, 1));
    StabilizerModel::new(format!("ising{n}_field{field_site}"), &sys, Layout::line(n), gens, vec![])
}

/// `n`-qubit GHZ state on a line: `Z_i Z_{i+1}` and the global `X^{⊗n}`.
pub fn build_ghz(n: usize) -> Result<StabilizerModel> {
    if n < 2 {
        return Err(Error::InvalidInput("GHZ needs n >= 2".into()));
    }
    let sys = SiteSystem::uniform(n, 2)?;
    let mut gens: Vec<WeylOp> = (0..n - 1)
        .map(|i| WeylOp::from_sparse(&sys, Phase::ZERO, &[], &[(i, 1), (i + 1, 1)]))
        .collect::<Result<_>>()?;
    let all: Vec<(usize, i64)> = (0..n).map(|i| (i, 1)).collect();
    gens.push(WeylOp::from_sparse(&sys, Phase::ZERO, &all, &[])?);
    StabilizerModel::new(format!("ghz{n}"), &sys, Layout::line(n), gens, vec![])
}

/// Bell pair on sites `a`, `b` of an `n`-qubit line, every other qubit in `|0⟩`.
pub fn build_bell_pair(n: usize, a: usize, b: usize) -> Result<StabilizerModel> {
    if a == b || a >= n || b >= n {
        return Err(Error::InvalidInput("Bell pair needs two distinct sites".into()));
    }
    let sys = SiteSystem::uniform(n, 2)?;
    let mut gens = vec![
        WeylOp::from_sparse(&sys, Phase::ZERO, &[(a, 1), (b, 1)], &[])?,
        WeylOp::from_sparse(&sys, Phase::ZERO, &[], &[(a, 1), (b, 1)])?,
    ];
    gens.extend((0..n).filter(|&s| s != a && s != b).map(|s| WeylOp::single(&sys, s, 0, 1)));
    StabilizerModel::new(format!("bell{n}_{a}_{b}"), &sys, Layout::line(n), gens, vec![])
}

pub fn expectation(state: &StabilizerState, op: &WeylOp) -> Cyclo {
    state.expectation(op)
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelReport {
    pub commuting: bool,
    pub noncommuting_pair: Option<(String, String)>,
    pub frustration_free: bool,
    pub frustration_detail: Option<String>,
    /// `None` when the instance exceeds the dense cap.
    pub lto_small_instance: Option<bool>,
    pub lto_detail: Option<String>,
}

pub fn check_model(model: &StabilizerModel, dense_cap: u128) -> ModelReport {
    let gens: Vec<WeylOp> = model.generators().cloned().collect();
    let pair = first_noncommuting(&gens, model.num_sites());
    let commuting = pair.is_none();
    let (frustration_free, frustration_detail) = if commuting {
        let span = WeylSpan::new(model.system(), &gens);
        let bad = span.scalar_phases();
        (bad.is_empty(), (!bad.is_empty()).then(|| format!("phases {bad:?} in the group")))
    } else {
        (false, Some("terms do not commute".into()))
    };
    let (lto, detail) = if commuting && frustration_free && model.system().hilbert_dim() <= dense_cap {
        match crate::oracle::dense_lto_check(model, dense_cap) {
            Ok(rep) => (Some(rep.pass), rep.violating_disk.map(|d| format!("{d:?}"))),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    ModelReport {
        commuting,
        noncommuting_pair: pair,
        frustration_free,
        frustration_detail,
        lto_small_instance: lto,
        lto_detail: detail,
    }
}
