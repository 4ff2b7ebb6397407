//! Locally invisible and locally null operators, symmetrization, and the
//! twist-pairing entanglement witness.
//!
//! Invisibility is certified in two tiers: an exact sufficient check
//! (commutes with every term of a locally topologically ordered model) and a
//! sampled dense check. A refusal means "not certified", never "visible".

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::commutant::{commutant_on_region, logical_quotient};
use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::lattice::{build_torus, make_annulus_pair, AnnulusPair, Layout, Region};
use crate::model::{build_bell_pair, build_ghz, build_product_state, build_toric_code, StabilizerModel};
use crate::oracle::{dense_ground_state, dense_invisibility_check, DenseState, SamplingConfig, DEFAULT_CAP};
use crate::ringlinalg::{Howell, RowPayload};
use crate::twist::twist_pairing;
use crate::weyl::{Phase, WeylOp, WeylSum};

fn ser_cyclo<S: Serializer>(c: &Cyclo, s: S) -> std::result::Result<S::Ok, S::Error> {
    c.to_record().serialize(s)
}

fn ser_sum<S: Serializer>(w: &WeylSum, s: S) -> std::result::Result<S::Ok, S::Error> {
    w.to_record().serialize(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificationMethod {
    CommutantSufficient,
    DenseVerified,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateDetails {
    pub terms_checked: usize,
    pub disks_checked: usize,
    pub samples: usize,
    pub seed: Option<u64>,
    pub worst_deviation: Option<f64>,
    pub note: String,
}

/// Evidence that an operator is `(r, t)`-locally invisible.
#[derive(Clone, Debug, Serialize)]
pub struct InvisibilityCertificate {
    #[serde(serialize_with = "ser_sum")]
    pub operator: WeylSum,
    pub r: u32,
    pub t: u32,
    pub method: CertificationMethod,
    pub details: CertificateDetails,
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub dense_cap: u128,
    pub sampling: SamplingConfig,
    pub allow_dense: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { dense_cap: DEFAULT_CAP, sampling: SamplingConfig::default(), allow_dense: true }
    }
}

/// Number of terms meeting the support of `op`, and whether `op` commutes
/// with all of them (terms elsewhere commute trivially).
fn check_commutation(model: &StabilizerModel, op: &WeylSum) -> (usize, bool) {
    let meeting = model.terms_meeting(&op.support());
    let ok = meeting.iter().all(|&k| op.commutes_with(model.terms()[k].generator()));
    (meeting.len(), ok)
}

/// Certifies `(r, t)`-local invisibility of `op` in the model's ground state.
pub fn certify_invisible(
    model: &StabilizerModel,
    op: &WeylSum,
    r: u32,
    t: u32,
    opts: &CertifyOptions,
) -> Result<InvisibilityCertificate> {
    let w = model.interaction_range();
    let (checked, commutes) = check_commutation(model, op);
    let symbolic = commutes && model.lto_hint() && t >= w;
    if symbolic {
        return Ok(InvisibilityCertificate {
            operator: op.clone(),
            r,
            t,
            method: CertificationMethod::CommutantSufficient,
            details: CertificateDetails {
                terms_checked: checked,
                disks_checked: 0,
                samples: 0,
                seed: None,
                worst_deviation: None,
                note: format!("commutes with all {checked} terms meeting its support; LTO model with t >= w = {w}"),
            },
        });
    }
    let why = if !commutes {
        "does not commute with every term".to_string()
    } else if !model.lto_hint() {
        "model not marked LTO".to_string()
    } else {
        format!("t = {t} < w = {w}")
    };
    if !opts.allow_dense {
        return Err(refusal(&why));
    }
    let psi = match dense_ground_state(model, opts.dense_cap) {
        Ok(p) => p,
        Err(Error::CapExceeded { dim, cap }) => {
            return Err(refusal(&format!("{why}; dense path unavailable (dimension {dim} > cap {cap})")))
        }
        Err(e) => return Err(e),
    };
    certify_invisible_dense(&psi, model, op, r, t, &opts.sampling)
}

fn refusal(why: &str) -> Error {
    Error::Certificate(format!("refused ({why}); this is not a claim that the operator is visible"))
}

/// Dense path against a precomputed ground-state vector.
pub fn certify_invisible_dense(
    psi: &DenseState,
    model: &StabilizerModel,
    op: &WeylSum,
    r: u32,
    t: u32,
    cfg: &SamplingConfig,
) -> Result<InvisibilityCertificate> {
    let chk = dense_invisibility_check(psi, model.system(), model.layout(), op, r, t, cfg);
    if !chk.pass {
        return Err(refusal(&format!("dense check deviation {:.3e}", chk.worst_deviation)));
    }
    if chk.disks_checked == 0 {
        return Err(refusal("no disk small enough for the dense check"));
    }
    Ok(InvisibilityCertificate {
        operator: op.clone(),
        r,
        t,
        method: CertificationMethod::DenseVerified,
        details: CertificateDetails {
            terms_checked: 0,
            disks_checked: chk.disks_checked,
            samples: chk.samples,
            seed: Some(chk.seed),
            worst_deviation: Some(chk.worst_deviation),
            note: "sampled states U on the complement of B; a pass is evidence, not proof".into(),
        },
    })
}

/// One piece `O_i` of a locally null decomposition with its disk `D_i`.
#[derive(Clone, Debug, Serialize)]
pub struct NullPiece {
    #[serde(serialize_with = "ser_sum")]
    pub operator: WeylSum,
    pub term: usize,
    pub disk_center: (i64, i64),
    pub radius: u32,
}

impl NullPiece {
    pub fn disk(&self, layout: &Layout) -> Region {
        layout.disk(self.disk_center, 2 * self.radius as i64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NullDecomposition {
    pub null: bool,
    pub pieces: Vec<NullPiece>,
    pub reason: Option<String>,
}

impl NullDecomposition {
    fn refused(reason: String) -> Self {
        Self { null: false, pieces: Vec::new(), reason: Some(reason) }
    }
}

/// Site position of `support` with the smallest eccentricity, and that
/// eccentricity (doubled units).
fn support_center(layout: &Layout, support: &[usize]) -> ((i64, i64), i64) {
    support
        .iter()
        .map(|&c| (layout.position(c), support.iter().map(|&s| layout.dist2(c, s)).max().unwrap_or(0)))
        .min_by_key(|&(p, e)| (e, p))
        .unwrap_or(((0, 0), 0))
}

/// Operator with its exponents over a fixed generator list.
#[derive(Clone)]
struct Tracked {
    op: WeylOp,
    exps: Vec<i64>,
    orders: Arc<Vec<i64>>,
}

impl RowPayload for Tracked {
    fn combine(&self, a: i64, other: &Self, b: i64) -> Self {
        let exps = self
            .exps
            .iter()
            .zip(&other.exps)
            .zip(self.orders.iter())
            .map(|((&x, &y), &n)| ((a as i128 * x as i128 + b as i128 * y as i128).rem_euclid(n as i128)) as i64)
            .collect();
        Self { op: self.op.combine(a, &other.op, b), exps, orders: self.orders.clone() }
    }

    fn is_trivial(&self) -> bool {
        self.op.is_trivial()
    }
}

/// Decides whether `op` is `s`-locally null near `annulus` by rewriting it
/// as `Σ_j R_j (g_j^e − 1)` over terms `g_j` that fit in a radius-`s` disk
/// meeting the annulus and commute with the `R_j`. Each piece then
/// satisfies `h_j O_j = O_j h_j = 0`, hence `Π_D O_j = O_j Π_D = 0`.
/// `false` only means no such decomposition was found.
pub fn is_locally_null(model: &StabilizerModel, op: &WeylSum, annulus: &Region, s: u32) -> NullDecomposition {
    if op.is_zero() {
        return NullDecomposition { null: true, pieces: Vec::new(), reason: None };
    }
    match null_decomposition(model, op, annulus, s) {
        Ok(d) => d,
        Err(e) => NullDecomposition::refused(e.to_string()),
    }
}

fn null_decomposition(model: &StabilizerModel, op: &WeylSum, annulus: &Region, s: u32) -> Result<NullDecomposition> {
    let layout = model.layout();
    let sys = model.system();
    let s2 = 2 * s as i64;
    let mut cands: Vec<(usize, (i64, i64))> = Vec::new();
    for (k, term) in model.terms().iter().enumerate() {
        let (c, ecc) = support_center(layout, term.support());
        let near = annulus.sites().iter().any(|&a| layout.point_dist2(c, layout.position(a)) <= s2);
        if ecc <= s2 && near {
            cands.push((k, c));
        }
    }
    let gens: Vec<&WeylOp> = cands.iter().map(|&(k, _)| model.terms()[k].generator()).collect();
    let orders = Arc::new(cands.iter().map(|&(k, _)| model.terms()[k].order() as i64).collect::<Vec<_>>());
    let zero = vec![0i64; gens.len()];
    let rows = gens
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut e = zero.clone();
            e[i] = 1;
            (g.embedded_vector(), Tracked { op: (*g).clone(), exps: e, orders: orders.clone() })
        })
        .collect();
    let howell = Howell::new(sys.phase_denominator(), 2 * sys.len(), rows);
    if !howell.scalars.is_empty() {
        return Ok(NullDecomposition::refused("terms near the annulus are frustrated".into()));
    }

    // coset key -> (rep operator part, [(coefficient, exponents, original)])
    type Coset = (WeylOp, Vec<(Cyclo, Vec<i64>)>);
    let mut cosets: BTreeMap<Vec<u64>, Coset> = BTreeMap::new();
    for (c, w) in op.terms() {
        let mut v = w.embedded_vector();
        let mut p = Tracked { op: w.clone(), exps: zero.clone(), orders: orders.clone() };
        howell.reduce(&mut v, &mut p);
        // p.op = w · G⁻¹ with G = Π g^e, e = −p.exps
        let e: Vec<i64> = p.exps.iter().zip(orders.iter()).map(|(&x, &n)| (-x).rem_euclid(n)).collect();
        let mut g = WeylOp::identity(sys);
        for (gi, &ei) in gens.iter().zip(&e) {
            if ei != 0 {
                g = &g * &gi.pow(ei);
            }
        }
        if &p.op * &g != *w {
            return Err(Error::InvalidInput("term group carries a phase relation; decomposition skipped".into()));
        }
        for (gi, &ei) in gens.iter().zip(&e) {
            if ei != 0 && !w.commutes_with(gi) {
                return Ok(NullDecomposition::refused(format!("component {w} does not commute with term {gi} it is reduced by")));
            }
        }
        let coef = c * &p.op.phase().to_cyclo();
        let entry = cosets.entry(v).or_insert_with(|| (p.op.operator_part(), Vec::new()));
        entry.1.push((coef, e));
    }
    for (rep, items) in cosets.values() {
        let eps = items.iter().fold(Cyclo::zero(), |acc, (c, _)| &acc + c);
        if !eps.is_zero() {
            return Ok(NullDecomposition::refused(format!("coset of {rep} has nonzero augmentation {eps}")));
        }
    }
    let mut pieces: Vec<WeylSum> = vec![WeylSum::zero(sys); gens.len()];
    for (rep, items) in cosets.values() {
        for (c, e) in items {
            let mut prefix = rep.clone();
            for (j, &ej) in e.iter().enumerate() {
                if ej == 0 {
                    continue;
                }
                let next = &prefix * &gens[j].pow(ej);
                pieces[j].add_term(c.clone(), &next);
                pieces[j].add_term(-c, &prefix);
                prefix = next;
            }
        }
    }
    let total = pieces.iter().try_fold(WeylSum::zero(sys), |acc, p| acc.add(p))?;
    if total != *op {
        return Err(Error::InvalidInput("decomposition does not reproduce the operator".into()));
    }
    let out = pieces
        .into_iter()
        .zip(&cands)
        .filter(|(p, _)| !p.is_zero())
        .map(|(operator, &(term, center))| NullPiece { operator, term, disk_center: center, radius: s })
        .collect();
    Ok(NullDecomposition { null: true, pieces: out, reason: None })
}

/// `φ = Π_j φ_j` with `φ_j(O) = (1/n) Σ_k g_j^k O g_j^{−k}`. On a Weyl
/// component this keeps it when it commutes with `g_j` and kills it
/// otherwise, so `φ` projects onto the components commuting with every term.
pub fn symmetrize(model: &StabilizerModel, op: &WeylSum) -> WeylSum {
    let mut out = WeylSum::zero(op.system());
    for (c, w) in op.terms() {
        let keep = model.terms_meeting(&w.support()).iter().all(|&k| w.commutes_with(model.terms()[k].generator()));
        if keep {
            out.add_term(c.clone(), w);
        }
    }
    out
}

/// Which side the invisible factor `S` multiplies `T − φ(T)` from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// Telescoping `S (T − φ(T)) = −Σ_j S (φ_j φ_{<j}(T) − φ_{<j}(T))` in term
/// order: the `j`-th piece collects the components of `T` whose first
/// noncommuting term is `g_j`, with a radius-`radius` disk around `g_j`.
pub fn symmetrization_pieces(
    model: &StabilizerModel,
    s: &WeylSum,
    t: &WeylSum,
    radius: u32,
    side: Side,
) -> Result<Vec<NullPiece>> {
    let mut parts: BTreeMap<usize, WeylSum> = BTreeMap::new();
    for (c, w) in t.terms() {
        let first = model
            .terms_meeting(&w.support())
            .into_iter()
            .filter(|&k| !w.commutes_with(model.terms()[k].generator()))
            .min();
        if let Some(j) = first {
            parts.entry(j).or_insert_with(|| WeylSum::zero(t.system())).add_term(c.clone(), w);
        }
    }
    let layout = model.layout();
    parts
        .into_iter()
        .map(|(j, tj)| {
            let operator = match side {
                Side::Left => s.mul(&tj)?,
                Side::Right => tj.mul(s)?,
            };
            let (center, _) = support_center(layout, model.terms()[j].support());
            Ok(NullPiece { operator, term: j, disk_center: center, radius })
        })
        .filter(|p| p.as_ref().map_or(true, |p| !p.operator.is_zero()))
        .collect()
}

/// Orthonormal basis of the support of `ρ_D(ψ)`, from the smaller of the
/// two Gram matrices of the bipartite amplitude matrix.
pub fn support_basis(psi: &DenseState, sites: &[usize]) -> DMatrix<Complex64> {
    let m = psi.bipartite_matrix(sites);
    let mut cols = Vec::new();
    if m.nrows() <= m.ncols() {
        let eig = SymmetricEigen::new(&m * m.adjoint());
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if l > 1e-10 {
                cols.push(eig.eigenvectors.column(k).into_owned());
            }
        }
    } else {
        // the range of M is spanned by M v / √λ over eigenpairs of M†M
        let eig = SymmetricEigen::new(m.adjoint() * &m);
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if l > 1e-10 {
                cols.push((&m * eig.eigenvectors.column(k)) / Complex64::new(l.sqrt(), 0.0));
            }
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(m.nrows(), 0);
    }
    DMatrix::from_columns(&cols)
}

/// `Π_D v` for `Π_D = U U†` acting on `sites`.
fn project(v: &DenseState, sites: &[usize], u: &DMatrix<Complex64>) -> DenseState {
    let m = v.bipartite_matrix(sites);
    v.with_bipartite(sites, &(u * (u.adjoint() * m)))
}

#[derive(Clone, Debug, Serialize)]
pub struct DiskNullCheck {
    pub term: usize,
    pub disk_sites: usize,
    pub left: f64,
    pub right: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DenseNullReport {
    pub pass: bool,
    pub worst: f64,
    pub checks: Vec<DiskNullCheck>,
}

/// Dense check of `Π_D O_i = O_i Π_D = 0` on random vectors for every piece.
pub fn dense_verify_null(
    psi: &DenseState,
    layout: &Layout,
    pieces: &[NullPiece],
    tol: f64,
    seed: u64,
) -> DenseNullReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut worst = 0.0f64;
    let mut pass = true;
    let mut cache: BTreeMap<Vec<usize>, DMatrix<Complex64>> = BTreeMap::new();
    for piece in pieces {
        let disk = piece.disk(layout);
        let u = cache.entry(disk.sites().to_vec()).or_insert_with(|| support_basis(psi, disk.sites()));
        let scale: f64 = piece.operator.terms().map(|(c, _)| c.to_complex().norm()).sum::<f64>().max(1.0);
        let (mut left, mut right) = (0.0f64, 0.0f64);
        for _ in 0..3 {
            let v = DenseState::random(psi.dims(), &mut rng);
            let ov = v.apply_sum(&piece.operator);
            left = left.max(project(&ov, disk.sites(), u).norm_sqr().sqrt() / scale);
            let pv = project(&v, disk.sites(), u);
            right = right.max(pv.apply_sum(&piece.operator).norm_sqr().sqrt() / scale);
        }
        let ok = left <= tol && right <= tol;
        pass &= ok;
        worst = worst.max(left).max(right);
        checks.push(DiskNullCheck { term: piece.term, disk_sites: disk.len(), left, right, pass: ok });
    }
    DenseNullReport { pass, worst, checks }
}

/// A random operator on `region` built to be locally invisible: a
/// commutant element plus `W (1 − π_g)` for a term `g` inside the region and
/// a nearby `W` commuting with `g`. Candidates still need certification.
pub fn random_invisible_candidate(model: &StabilizerModel, region: &Region, rng: &mut ChaCha8Rng) -> Result<WeylSum> {
    let sys = model.system();
    let d = sys.phase_denominator();
    let root = |rng: &mut ChaCha8Rng| Cyclo::root_of_unity(rng.gen_range(0..d as i64), d);
    let comm = commutant_on_region(model, region)?;
    let mut a = WeylOp::identity(sys);
    for g in &comm.generators {
        if rng.gen_bool(0.5) {
            a = &a * g;
        }
    }
    let mut out = WeylSum::from_term(root(rng), &a);
    let inside = model.terms_inside(region);
    if inside.is_empty() {
        return Ok(out);
    }
    let layout = model.layout();
    for _ in 0..rng.gen_range(1..=2) {
        let term = &model.terms()[inside[rng.gen_range(0..inside.len())]];
        let near = layout.fatten(&Region::from_sites(sys.len(), term.support().iter().copied()), 2).intersection(region);
        for _ in 0..32 {
            let mut w = WeylOp::identity(sys);
            for &s in near.sites() {
                if rng.gen_bool(0.5) {
                    let q = sys.dim(s) as i64;
                    w = &w * &WeylOp::single(sys, s, rng.gen_range(0..q), rng.gen_range(0..q));
                }
            }
            let visible_part = !WeylSum::from_op(&w).commutes_with(term.generator());
            let in_commutant = check_commutation(model, &WeylSum::from_op(&w)).1;
            if visible_part || in_commutant || w.is_identity() {
                continue;
            }
            let kill = WeylSum::identity(sys).sub(&term.projector())?;
            out = out.add(&WeylSum::from_op(&w).mul(&kill)?.scale(&root(rng)))?;
            break;
        }
    }
    Ok(out)
}

/// Twist pairing against the product of expectations for two certified
/// invisible operators.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    #[serde(serialize_with = "ser_cyclo")]
    pub pairing: Cyclo,
    #[serde(serialize_with = "ser_cyclo")]
    pub product: Cyclo,
    pub pairing_display: String,
    pub product_display: String,
    pub violated: bool,
    /// Lower bound `r/10` on the range of any circuit preparing the state
    /// from a product state; present when violated.
    pub depth_lower_bound: Option<f64>,
    pub r: u32,
    pub t: u32,
    pub separation: f64,
    pub required_separation: f64,
    pub certificates: [InvisibilityCertificate; 2],
}

/// Exact evaluation of `⟨P ∞ Q⟩` against `⟨P⟩⟨Q⟩`.
pub fn evaluate_witness(
    model: &StabilizerModel,
    pair: &AnnulusPair,
    p: &InvisibilityCertificate,
    q: &InvisibilityCertificate,
) -> Result<WitnessReport> {
    if (p.r, p.t) != (q.r, q.t) {
        return Err(Error::Certificate(format!(
            "certificates at different radii ({}, {}) and ({}, {})",
            p.r, p.t, q.r, q.t
        )));
    }
    let (r, t) = (p.r, p.t);
    if r < 2 {
        return Err(Error::Geometry(format!("witness needs r >= 2, got {r}")));
    }
    let required = 2.0 * (r + t) as f64;
    if pair.separation <= required {
        return Err(Error::Geometry(format!("diamond separation {} <= 2(r + t) = {required}", pair.separation)));
    }
    let state = model.state()?;
    let pairing = twist_pairing(&state, &p.operator, &q.operator, pair)?;
    let product = &state.expectation_sum(&p.operator) * &state.expectation_sum(&q.operator);
    let violated = pairing != product;
    Ok(WitnessReport {
        pairing_display: pairing.to_string(),
        product_display: product.to_string(),
        pairing,
        product,
        violated,
        depth_lower_bound: violated.then_some(r as f64 / 10.0),
        r,
        t,
        separation: pair.separation,
        required_separation: required,
        certificates: [p.clone(), q.clone()],
    })
}

/// A ready-made witness instance.
#[derive(Clone, Debug)]
pub struct WitnessScenario {
    pub name: String,
    pub model: StabilizerModel,
    pub pair: AnnulusPair,
    pub p: WeylSum,
    pub q: WeylSum,
    pub r: u32,
    pub t: u32,
}

impl WitnessScenario {
    pub fn run(&self, opts: &CertifyOptions) -> Result<WitnessReport> {
        let pc = certify_invisible(&self.model, &self.p, self.r, self.t, opts)?;
        let qc = certify_invisible(&self.model, &self.q, self.r, self.t, opts)?;
        evaluate_witness(&self.model, &self.pair, &pc, &qc)
    }
}

fn sparse_sum(model: &StabilizerModel, xs: &[(usize, i64)], zs: &[(usize, i64)]) -> Result<WeylSum> {
    Ok(WeylSum::from_op(&WeylOp::from_sparse(model.system(), Phase::ZERO, xs, zs)?))
}

/// GHZ on `n` qubits: `P = X^{⊗n}` on everything, `Q = Z_0 Z_{n−1}` on two
/// far disks.
pub fn ghz_scenario(n: usize) -> Result<WitnessScenario> {
    let model = build_ghz(n)?;
    let all: Vec<(usize, i64)> = (0..n).map(|i| (i, 1)).collect();
    let p = sparse_sum(&model, &all, &[])?;
    let q = sparse_sum(&model, &[], &[(0, 1), (n - 1, 1)])?;
    let pair = AnnulusPair::custom(
        model.layout(),
        Region::all(n),
        Region::from_sites(n, [0, n - 1]),
        Region::from_sites(n, n / 2..n),
    )?;
    Ok(WitnessScenario { name: format!("ghz{n}"), model, pair, p, q, r: 2, t: 2 })
}

/// Bell pair on the two ends of an `n`-qubit line.
pub fn bell_scenario(n: usize) -> Result<WitnessScenario> {
    let (a, b) = (0, n - 1);
    let model = build_bell_pair(n, a, b)?;
    let p = sparse_sum(&model, &[(a, 1), (b, 1)], &[])?;
    let q = sparse_sum(&model, &[], &[(a, 1), (b, 1)])?;
    let poles = Region::from_sites(n, [a, b]);
    let pair = AnnulusPair::custom(model.layout(), poles.clone(), poles, Region::from_sites(n, n / 2..n))?;
    Ok(WitnessScenario { name: format!("bell_poles{n}"), model, pair, p, q, r: 2, t: 2 })
}

/// ℤ_d toric code: a left logical and a right logical whose twist pairing
/// differs from the product of their expectations.
pub fn toric_scenario(l: usize, d: u32, r_ann: u32, t_ann: u32, sep: u32) -> Result<WitnessScenario> {
    let lat = build_torus(l)?;
    let model = build_toric_code(&lat, d)?;
    let pair = make_annulus_pair(&lat, r_ann, t_ann, sep)?;
    let spec = |a: &Option<_>| a.ok_or_else(|| Error::Geometry("pair lacks annulus specs".into()));
    let al = logical_quotient(&model, &spec(&pair.left)?)?;
    let ar = logical_quotient(&model, &spec(&pair.right)?)?;
    let state = model.state()?;
    for g in al.elements() {
        let p = WeylSum::from_op(&al.element_op(&g));
        for h in ar.elements() {
            let q = WeylSum::from_op(&ar.element_op(&h));
            let pairing = twist_pairing(&state, &p, &q, &pair)?;
            let product = &state.expectation_sum(&p) * &state.expectation_sum(&q);
            if pairing != product {
                return Ok(WitnessScenario { name: format!("toric_Z{d}_L{l}"), model, pair, p, q, r: 2, t: 1 });
            }
        }
    }
    Err(Error::InvalidInput("no logical pair with a nontrivial twist".into()))
}

/// Product state on a line: the witness must not fire.
pub fn product_scenario(n: usize) -> Result<WitnessScenario> {
    let model = build_product_state(Layout::line(n), 2)?;
    let ends: Vec<usize> = (0..3).chain(n - 3..n).collect();
    let region = Region::from_sites(n, ends);
    let p = sparse_sum(&model, &[], &[(0, 1), (n - 1, 1)])?;
    let q = sparse_sum(&model, &[], &[(1, 1), (n - 2, 1)])?;
    let pair = AnnulusPair::custom(model.layout(), region.clone(), region, Region::from_sites(n, n / 2..n))?;
    Ok(WitnessScenario { name: format!("product{n}"), model, pair, p, q, r: 2, t: 1 })
}

pub fn builtin_scenarios() -> Result<Vec<WitnessScenario>> {
    Ok(vec![ghz_scenario(10)?, bell_scenario(12)?, toric_scenario(18, 2, 6, 1, 3)?, product_scenario(14)?])
}

/// Runs every built-in scenario with default certification options.
pub fn builtin_examples() -> Result<Vec<(String, WitnessReport)>> {
    let opts = CertifyOptions::default();
    builtin_scenarios()?.into_iter().map(|s| Ok((s.name.clone(), s.run(&opts)?))).collect()
}
