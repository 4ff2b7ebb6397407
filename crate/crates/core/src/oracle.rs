//! Dense state-vector reference used to cross-check the exact machinery.
//!
//! Site 0 is the least significant digit of a basis index. Weyl operators
//! act as permutation-with-phase maps, so only the state is ever stored.

use nalgebra::{DMatrix, SymmetricEigen};
use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Layout, Region};
use crate::model::{ProjectorTerm, StabilizerModel};
use crate::weyl::{SiteSystem, WeylOp, WeylSum};

/// Largest number of amplitudes the oracle will allocate by default.
pub const DEFAULT_CAP: u128 = 1 << 20;

/// Largest reduced-density dimension formed during disk checks.
const MAX_DISK_DIM: usize = 1 << 10;

const SEED: u64 = 0x5eed;

pub fn check_cap(sys: &SiteSystem, cap: u128) -> Result<usize> {
    let dim = sys.hilbert_dim();
    if dim > cap {
        return Err(Error::CapExceeded { dim, cap });
    }
    Ok(dim as usize)
}

fn root(m: u64, den: u64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / den as f64)
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random `n × n` unitary.
pub fn haar_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

#[derive(Clone, Debug)]
pub struct DenseState {
    dims: Vec<u32>,
    strides: Vec<usize>,
    amps: Vec<Complex64>,
}

impl DenseState {
    pub fn zeros(dims: &[u32]) -> Self {
        let mut strides = Vec::with_capacity(dims.len());
        let mut acc = 1usize;
        for &d in dims {
            strides.push(acc);
            acc *= d as usize;
        }
        Self { dims: dims.to_vec(), strides, amps: vec![Complex64::new(0.0, 0.0); acc] }
    }

    pub fn basis(dims: &[u32], index: usize) -> Self {
        let mut s = Self::zeros(dims);
        s.amps[index] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn random(dims: &[u32], rng: &mut ChaCha8Rng) -> Self {
        let mut s = Self::zeros(dims);
        s.amps.iter_mut().for_each(|a| *a = gaussian(rng));
        s.normalize();
        s
    }

    pub fn from_amplitudes(dims: &[u32], amps: Vec<Complex64>) -> Result<Self> {
        let mut s = Self::zeros(dims);
        if amps.len() != s.amps.len() {
            return Err(Error::DimensionMismatch(format!("{} amplitudes for dimension {}", amps.len(), s.amps.len())));
        }
        s.amps = amps;
        Ok(s)
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm; returns the previous norm.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
        n
    }

    /// `⟨self|o⟩`.
    pub fn inner(&self, o: &Self) -> Complex64 {
        self.amps.iter().zip(&o.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn add_scaled(&mut self, c: Complex64, o: &Self) {
        for (a, b) in self.amps.iter_mut().zip(&o.amps) {
            *a += c * b;
        }
    }

    fn digit(&self, idx: usize, site: usize) -> usize {
        (idx / self.strides[site]) % self.dims[site] as usize
    }

    pub fn apply_op(&self, op: &WeylOp) -> Self {
        assert_eq!(op.system().dims(), &self.dims[..], "operator on a different site system");
        let den = op.system().phase_denominator();
        let roots: Vec<Complex64> = (0..den).map(|m| root(m, den)).collect();
        let base = root(op.phase().num(), op.phase().den());
        let supp = op.support();
        let (xs, zs) = (op.x(), op.z());
        let mut out = Self { amps: vec![Complex64::new(0.0, 0.0); self.dim()], ..self.clone() };
        for (idx, &a) in self.amps.iter().enumerate() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut tgt = idx;
            let mut ph = 0u64;
            for &i in &supp {
                let d = self.dims[i] as usize;
                let k = self.digit(idx, i);
                ph += zs[i] as u64 * k as u64 * (den / d as u64);
                let nk = (k + xs[i] as usize) % d;
                tgt = tgt + nk * self.strides[i] - k * self.strides[i];
            }
            out.amps[tgt] = a * base * roots[(ph % den) as usize];
        }
        out
    }

    pub fn apply_sum(&self, s: &WeylSum) -> Self {
        let mut out = Self { amps: vec![Complex64::new(0.0, 0.0); self.dim()], ..self.clone() };
        for (c, op) in s.terms() {
            out.add_scaled(c.to_complex(), &self.apply_op(op));
        }
        out
    }

    pub fn apply_projector(&self, term: &ProjectorTerm) -> Self {
        let mut acc = self.clone();
        let mut cur = self.clone();
        for _ in 1..term.order() {
            cur = cur.apply_op(term.generator());
            acc.add_scaled(Complex64::new(1.0, 0.0), &cur);
        }
        let n = term.order() as f64;
        acc.amps.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// Index offsets of basis states with all `sites` digits zero, and the
    /// offsets for each sub-index over `sites` (site `sites[0]` fastest).
    fn blocks(&self, sites: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let bases = (0..self.dim()).filter(|&idx| sites.iter().all(|&s| self.digit(idx, s) == 0)).collect();
        let width: usize = sites.iter().map(|&s| self.dims[s] as usize).product();
        let mut order = vec![0usize; width];
        for (k, o) in order.iter_mut().enumerate() {
            let mut rem = k;
            let mut off = 0;
            for &s in sites {
                let d = self.dims[s] as usize;
                off += (rem % d) * self.strides[s];
                rem /= d;
            }
            *o = off;
        }
        (bases, order)
    }

    /// Applies a unitary (or any matrix) on `sites`, `sites[0]` least significant.
    pub fn apply_local(&self, sites: &[usize], u: &DMatrix<Complex64>) -> Self {
        let (bases, offs) = self.blocks(sites);
        assert_eq!(u.nrows(), offs.len());
        let mut out = self.clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); offs.len()];
        for b in bases {
            for (k, &o) in offs.iter().enumerate() {
                buf[k] = self.amps[b + o];
            }
            for (i, &o) in offs.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, v) in buf.iter().enumerate() {
                    acc += u[(i, j)] * v;
                }
                out.amps[b + o] = acc;
            }
        }
        out
    }

    /// Amplitudes as a matrix with rows indexed by `sites` and columns by
    /// the rest, so that `ρ_sites = M M†`.
    pub fn bipartite_matrix(&self, sites: &[usize]) -> DMatrix<Complex64> {
        let (bases, offs) = self.blocks(sites);
        DMatrix::from_fn(offs.len(), bases.len(), |i, j| self.amps[bases[j] + offs[i]])
    }

    /// Inverse of [`Self::bipartite_matrix`]: a state with the same layout
    /// whose amplitude matrix across `sites` is `m`.
    pub fn with_bipartite(&self, sites: &[usize], m: &DMatrix<Complex64>) -> Self {
        let (bases, offs) = self.blocks(sites);
        assert_eq!((m.nrows(), m.ncols()), (offs.len(), bases.len()));
        let mut out = self.clone();
        for (j, &b) in bases.iter().enumerate() {
            for (i, &o) in offs.iter().enumerate() {
                out.amps[b + o] = m[(i, j)];
            }
        }
        out
    }

    /// Reduced density matrix on `sites` (unnormalized if the state is).
    pub fn reduced_density(&self, sites: &[usize]) -> DMatrix<Complex64> {
        let m = self.bipartite_matrix(sites);
        &m * m.adjoint()
    }

    pub fn expectation(&self, op: &WeylOp) -> Complex64 {
        self.inner(&self.apply_op(op))
    }

    pub fn expectation_sum(&self, s: &WeylSum) -> Complex64 {
        self.inner(&self.apply_sum(s))
    }
}

pub fn trace_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let diff = a - b;
    let eig = SymmetricEigen::new(diff);
    0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

/// Trace distance between `A A†` and `B B†`, computed inside the joint
/// column space when that is smaller than the full space.
pub fn trace_distance_factored(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let k = a.ncols() + b.ncols();
    if k >= n {
        return trace_distance(&(a * a.adjoint()), &(b * b.adjoint()));
    }
    let mut joint = DMatrix::zeros(n, k);
    joint.columns_mut(0, a.ncols()).copy_from(a);
    joint.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    let q = joint.qr().q();
    let (qa, qb) = (q.adjoint() * a, q.adjoint() * b);
    trace_distance(&(&qa * qa.adjoint()), &(&qb * qb.adjoint()))
}

/// A joint `+1` eigenvector of every term and logical stabilizer.
pub fn dense_ground_state(model: &StabilizerModel, cap: u128) -> Result<DenseState> {
    check_cap(model.system(), cap)?;
    let dims = model.system().dims();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let extra: Vec<ProjectorTerm> =
        model.logicals().iter().map(|l| ProjectorTerm::new(l.clone())).collect::<Result<_>>()?;
    for _ in 0..4 {
        let mut v = DenseState::random(dims, &mut rng);
        for t in model.terms().iter().chain(&extra) {
            v = v.apply_projector(t);
        }
        if v.normalize() > 1e-9 {
            return Ok(v);
        }
    }
    Err(Error::Frustrated("no common +1 eigenvector found".into()))
}

pub fn dense_expectation(state: &DenseState, op: &WeylSum) -> Complex64 {
    state.expectation_sum(op)
}

/// `⟨ψ| P ∞ Q |ψ⟩` with each Weyl pair factored across the cut and the
/// `M′` factors multiplied in reversed order.
pub fn dense_twist_pairing(state: &DenseState, p: &WeylSum, q: &WeylSum, m_prime: &Region) -> Complex64 {
    let m = m_prime.complement();
    let mut total = Complex64::new(0.0, 0.0);
    for (cp, po) in p.terms() {
        let (pm, pmp) = po.split(&m);
        for (cq, qo) in q.terms() {
            let (qm, qmp) = qo.split(&m);
            let v = state.apply_op(&pmp).apply_op(&qmp).apply_op(&qm).apply_op(&pm);
            total += cp.to_complex() * cq.to_complex() * state.inner(&v);
        }
    }
    total
}

#[derive(Clone, Debug, Serialize)]
pub struct DiskSpec {
    pub center: (i64, i64),
    pub radius: u32,
}

fn disk_centers(layout: &Layout) -> Vec<(i64, i64)> {
    let mut c: Vec<(i64, i64)> = (0..layout.len()).map(|s| layout.position(s)).collect();
    c.sort_unstable();
    c.dedup();
    c
}

/// Knobs for the sampled invisibility check.
#[derive(Clone, Debug, Serialize)]
pub struct SamplingConfig {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { samples: 4, seed: SEED, tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvisibilityCheck {
    pub pass: bool,
    pub worst_deviation: f64,
    pub disks_checked: usize,
    pub worst_disk: Option<DiskSpec>,
    pub samples: usize,
    pub seed: u64,
}

/// Random unitary on `outside`: Haar single-site layers, Haar gates on
/// random pairs, and a random Weyl operator.
fn scramble(state: &DenseState, outside: &[usize], sys: &std::sync::Arc<SiteSystem>, rng: &mut ChaCha8Rng) -> DenseState {
    let mut v = state.clone();
    if outside.is_empty() {
        return v;
    }
    for &s in outside {
        v = v.apply_local(&[s], &haar_unitary(state.dims[s] as usize, rng));
    }
    if outside.len() >= 2 {
        for _ in 0..outside.len() {
            let a = outside[rng.gen_range(0..outside.len())];
            let b = outside[rng.gen_range(0..outside.len())];
            if a != b {
                let n = (state.dims[a] * state.dims[b]) as usize;
                v = v.apply_local(&[a, b], &haar_unitary(n, rng));
            }
        }
    }
    let mut w = WeylOp::identity(sys);
    for &s in outside {
        let d = sys.dim(s) as i64;
        w = &w * &WeylOp::single(sys, s, rng.gen_range(0..d), rng.gen_range(0..d));
    }
    v.apply_op(&w)
}

/// Samples states `|φ⟩ = U_{Bᶜ}|ψ⟩` for every disk `A` of radius `r` and its
/// `t`-ball `B`, and compares the normalized `ρ_A(O|φ⟩)` with `ρ_A(ψ)`.
pub fn dense_invisibility_check(
    state: &DenseState,
    sys: &std::sync::Arc<SiteSystem>,
    layout: &Layout,
    op: &WeylSum,
    r: u32,
    t: u32,
    cfg: &SamplingConfig,
) -> InvisibilityCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    let mut worst_disk = None;
    let mut checked = 0;
    for center in disk_centers(layout) {
        let a = layout.disk(center, 2 * r as i64);
        let b = layout.disk(center, 2 * (r + t) as i64);
        let dim_a: usize = a.sites().iter().map(|&s| sys.dim(s) as usize).product();
        if a.is_empty() || dim_a > MAX_DISK_DIM {
            continue;
        }
        checked += 1;
        let reference = state.bipartite_matrix(a.sites()) / Complex64::new(state.norm_sqr().sqrt(), 0.0);
        let outside: Vec<usize> = b.complement().sites().to_vec();
        for k in 0..=cfg.samples {
            let phi = if k == 0 { state.clone() } else { scramble(state, &outside, sys, &mut rng) };
            let o_phi = phi.apply_sum(op);
            let n = o_phi.norm_sqr();
            if n < 1e-24 {
                continue;
            }
            let m = o_phi.bipartite_matrix(a.sites()) / Complex64::new(n.sqrt(), 0.0);
            let dev = trace_distance_factored(&m, &reference);
            if dev > worst {
                worst = dev;
                worst_disk = Some(DiskSpec { center, radius: r });
            }
        }
    }
    InvisibilityCheck {
        pass: worst <= cfg.tolerance,
        worst_deviation: worst,
        disks_checked: checked,
        worst_disk,
        samples: cfg.samples,
        seed: cfg.seed,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LtoReport {
    pub pass: bool,
    pub disks_checked: usize,
    pub worst_deviation: f64,
    pub violating_disk: Option<DiskSpec>,
}

/// For each non-wrapping disk `D`, projects random states with the product
/// `P_D` of terms meeting `D` and compares their `ρ_D` with the ground state's.
pub fn dense_lto_check(model: &StabilizerModel, cap: u128) -> Result<LtoReport> {
    let psi = dense_ground_state(model, cap)?;
    let layout = model.layout();
    let sys = model.system();
    let max_r = match layout.period() {
        // a disk of radius r spans 2r + 1 sites of a row; keep it short of L
        Some((px, py)) => ((px.min(py) / 2 - 2) / 2).max(0) as u32,
        None => 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x17);
    let mut worst = 0.0f64;
    let mut violating = None;
    let mut checked = 0;
    for center in disk_centers(layout) {
        for radius in 0..=max_r {
            let d = layout.disk(center, 2 * radius as i64);
            let dim_d: usize = d.sites().iter().map(|&s| sys.dim(s) as usize).product();
            if d.is_empty() || dim_d > MAX_DISK_DIM || 2 * d.len() > model.num_sites() {
                continue;
            }
            checked += 1;
            let reference = psi.reduced_density(d.sites());
            let meeting = model.terms_meeting(d.sites());
            for _ in 0..2 {
                let mut v = DenseState::random(psi.dims(), &mut rng);
                for &k in &meeting {
                    v = v.apply_projector(&model.terms()[k]);
                }
                if v.normalize() < 1e-9 {
                    continue;
                }
                let dev = (v.reduced_density(d.sites()) - &reference).norm();
                if dev > worst {
                    worst = dev;
                    violating = Some(DiskSpec { center, radius });
                }
            }
        }
    }
    let pass = worst <= 1e-10;
    Ok(LtoReport { pass, disks_checked: checked, worst_deviation: worst, violating_disk: (!pass).then_some(violating).flatten() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_torus;
    use crate::model::{build_ghz, build_ising_with_field, build_product_state, build_toric_code};
    use crate::weyl::Phase;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-10
    }

    #[test]
    fn clock_and_shift_relation() {
        let sys = SiteSystem::uniform(1, 3).unwrap();
        let x = WeylOp::single(&sys, 0, 1, 0);
        let z = WeylOp::single(&sys, 0, 0, 1);
        let v = DenseState::random(&[3], &mut ChaCha8Rng::seed_from_u64(1));
        let zx = v.apply_op(&x).apply_op(&z);
        let xz = v.apply_op(&z).apply_op(&x);
        let w = root(1, 3);
        for (a, b) in zx.amplitudes().iter().zip(xz.amplitudes()) {
            assert!(close(*a, w * b));
        }
        // composed operator acts like its factors
        let prod = &x * &z;
        let direct = v.apply_op(&prod);
        for (a, b) in direct.amplitudes().iter().zip(xz.amplitudes()) {
            assert!(close(*a, *b));
        }
    }

    #[test]
    fn single_term_ground_state() {
        let m = build_product_state(Layout::line(1), 2).unwrap();
        let g = dense_ground_state(&m, DEFAULT_CAP).unwrap();
        assert!(close(g.amplitudes()[0].norm().into(), Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn ghz_vector() {
        let m = build_ghz(4).unwrap();
        let g = dense_ground_state(&m, DEFAULT_CAP).unwrap();
        let a = g.amplitudes();
        assert!((a[0].norm() - 0.5f64.sqrt()).abs() < 1e-10);
        assert!((a[15].norm() - 0.5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn toric_l3_matches_symbolic_expectations() {
        let lat = build_torus(3).unwrap();
        let m = build_toric_code(&lat, 2).unwrap();
        let g = dense_ground_state(&m, DEFAULT_CAP).unwrap();
        let s = m.state().unwrap();
        for t in m.terms() {
            assert!(close(g.expectation(t.generator()), Complex64::new(1.0, 0.0)));
        }
        let lone = WeylOp::single(m.system(), 4, 1, 0);
        assert!(close(g.expectation(&lone), s.expectation(&lone).to_complex()));
        let p = (m.terms()[9].generator() * m.terms()[12].generator()).with_phase(Phase::half());
        assert!(close(g.expectation(&p), s.expectation(&p).to_complex()));
    }

    #[test]
    fn reduced_density_of_bell_pair_is_mixed() {
        let m = crate::model::build_bell_pair(3, 0, 2).unwrap();
        let g = dense_ground_state(&m, DEFAULT_CAP).unwrap();
        let rho = g.reduced_density(&[0]);
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-10);
        assert!(rho[(0, 1)].norm() < 1e-10);
        let rho1 = g.reduced_density(&[1]);
        assert!((rho1[(0, 0)].re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lto_check_separates_examples() {
        let lat = build_torus(3).unwrap();
        assert!(dense_lto_check(&build_toric_code(&lat, 2).unwrap(), DEFAULT_CAP).unwrap().pass);
        let ising = dense_lto_check(&build_ising_with_field(8, 0).unwrap(), DEFAULT_CAP).unwrap();
        assert!(!ising.pass);
        assert!(dense_lto_check(&build_product_state(Layout::line(6), 2).unwrap(), DEFAULT_CAP).unwrap().pass);
    }

    #[test]
    fn factored_trace_distance_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = DenseState::random(&[2; 7], &mut rng);
        let b = DenseState::random(&[2; 7], &mut rng);
        let sites = [0, 2, 3, 5, 6];
        let full = trace_distance(&a.reduced_density(&sites), &b.reduced_density(&sites));
        let fact = trace_distance_factored(&a.bipartite_matrix(&sites), &b.bipartite_matrix(&sites));
        assert!((full - fact).abs() < 1e-10);
        assert!(trace_distance_factored(&a.bipartite_matrix(&sites), &a.bipartite_matrix(&sites)) < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let lat = build_torus(4).unwrap();
        let m = build_toric_code(&lat, 2).unwrap();
        assert!(matches!(dense_ground_state(&m, DEFAULT_CAP), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn invisibility_examples() {
        let m = build_ghz(6).unwrap();
        let g = dense_ground_state(&m, DEFAULT_CAP).unwrap();
        let all: Vec<(usize, i64)> = (0..6).map(|i| (i, 1)).collect();
        let xs = WeylSum::from_op(&WeylOp::from_sparse(m.system(), Phase::ZERO, &all, &[]).unwrap());
        let cfg = SamplingConfig::default();
        assert!(dense_invisibility_check(&g, m.system(), m.layout(), &xs, 1, 1, &cfg).pass);
        let id = WeylSum::identity(m.system());
        assert!(dense_invisibility_check(&g, m.system(), m.layout(), &id, 1, 1, &cfg).pass);
        let p = build_product_state(Layout::line(5), 2).unwrap();
        let gp = dense_ground_state(&p, DEFAULT_CAP).unwrap();
        let x = WeylSum::from_op(&WeylOp::single(p.system(), 2, 1, 0));
        assert!(!dense_invisibility_check(&gp, p.system(), p.layout(), &x, 1, 1, &cfg).pass);
    }
}
