//! Commutants of model terms on a region, the null subgroup, and the
//! logical algebra with its fundamental projectors.

use std::sync::Arc;

use serde::Serialize;

use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::lattice::{AnnulusSpec, Region};
use crate::model::{StabilizerModel, StabilizerState};
use crate::ringlinalg::{kernel_from_rows, quotient_structure, AbelianGroupStructure, QuotientMap};
use crate::weyl::{Phase, SiteSystem, WeylOp, WeylOpRecord, WeylSpan, WeylSum};

/// Weyl operators on `region` commuting with every model term.
#[derive(Clone, Debug)]
pub struct CommutantGroup {
    pub region: Region,
    pub generators: Vec<WeylOp>,
}

/// Per-coordinate moduli `[d, d, …]` over the region's sites.
fn local_moduli(sys: &SiteSystem, sites: &[usize]) -> Vec<u64> {
    sites.iter().flat_map(|&s| [sys.dim(s) as u64; 2]).collect()
}

fn local_vector(op: &WeylOp, sites: &[usize]) -> Vec<u64> {
    sites.iter().flat_map(|&s| [op.x()[s] as u64, op.z()[s] as u64]).collect()
}

fn op_from_local(sys: &Arc<SiteSystem>, sites: &[usize], v: &[u64]) -> Result<WeylOp> {
    let xs: Vec<(usize, i64)> = sites.iter().enumerate().map(|(k, &s)| (s, v[2 * k] as i64)).collect();
    let zs: Vec<(usize, i64)> = sites.iter().enumerate().map(|(k, &s)| (s, v[2 * k + 1] as i64)).collect();
    WeylOp::from_sparse(sys, Phase::ZERO, &xs, &zs)
}

pub fn commutant_on_region(model: &StabilizerModel, region: &Region) -> Result<CommutantGroup> {
    if region.is_empty() {
        return Err(Error::InvalidInput("empty region".into()));
    }
    let sys = model.system();
    let den = sys.phase_denominator();
    let sites = region.sites();
    let terms = model.terms_meeting(sites);
    let (r, n) = (terms.len(), 2 * sites.len());
    // row for variable j: its coefficients in every commutation constraint, then e_j
    let mut rows = Vec::with_capacity(n);
    for (k, &s) in sites.iter().enumerate() {
        let scale = den / sys.dim(s) as u64;
        for kind in 0..2 {
            let mut v = vec![0u64; r + n];
            for (i, &t) in terms.iter().enumerate() {
                let g = model.terms()[t].generator();
                let (gx, gz) = (g.x()[s] as u64, g.z()[s] as u64);
                // c(O, g) = Σ (z_O x_g − x_O z_g)·den/d
                v[i] = if kind == 0 { (den - gz * scale % den) % den } else { gx * scale % den };
            }
            v[r + 2 * k + kind] = 1 % den;
            rows.push((v, ()));
        }
    }
    let moduli = local_moduli(sys, sites);
    let kernel = kernel_from_rows(den, r, n, rows, &moduli);
    let generators = kernel.iter().map(|v| op_from_local(sys, sites, v)).collect::<Result<_>>()?;
    Ok(CommutantGroup { region: region.clone(), generators })
}

/// Products of terms supported in `outer` whose product is supported in
/// `inner`. `outer` must leave the hole uncovered, or contractible loops
/// become null.
pub fn null_subgroup(model: &StabilizerModel, inner: &Region, outer: &Region) -> Result<Vec<WeylOp>> {
    let sys = model.system();
    let den = sys.phase_denominator();
    let terms: Vec<usize> = model.terms_inside(outer);
    let ring: Vec<usize> = {
        let mut s: Vec<usize> = terms
            .iter()
            .flat_map(|&t| model.terms()[t].support().iter().copied())
            .filter(|&s| !inner.contains(s))
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let (r, n) = (2 * ring.len(), terms.len());
    let mut rows = Vec::with_capacity(n);
    for (j, &t) in terms.iter().enumerate() {
        let g = model.terms()[t].generator();
        let mut v = vec![0u64; r + n];
        for (k, &s) in ring.iter().enumerate() {
            let scale = den / sys.dim(s) as u64;
            v[2 * k] = g.x()[s] as u64 * scale % den;
            v[2 * k + 1] = g.z()[s] as u64 * scale % den;
        }
        v[r + j] = 1 % den;
        rows.push((v, ()));
    }
    let orders: Vec<u64> = terms.iter().map(|&t| model.terms()[t].order()).collect();
    if orders.iter().any(|&o| o < 2) {
        return Err(Error::InvalidInput("identity term".into()));
    }
    let kernel = kernel_from_rows(den, r, n, rows, &orders);
    kernel
        .iter()
        .map(|a| {
            let mut op = WeylOp::identity(sys);
            for (j, &e) in a.iter().enumerate() {
                if e != 0 {
                    op = op.compose(&model.terms()[terms[j]].generator().pow(e as i64))?;
                }
            }
            debug_assert!(op.support().iter().all(|&s| inner.contains(s)));
            Ok(op)
        })
        .collect()
}

/// `𝒜/𝒩` on a region: abelian group, phase-coherent representatives,
/// characters (vacuum first) and fundamental projectors.
#[derive(Clone, Debug)]
pub struct LogicalAlgebra {
    pub annulus: Option<AnnulusSpec>,
    pub region: Region,
    pub structure: AbelianGroupStructure,
    /// One operator per abstract generator, with `Uᵢ^{fᵢ}` an exact product
    /// of terms.
    pub representatives: Vec<WeylOp>,
    pub commutant: Vec<WeylOp>,
    pub null_generators: Vec<WeylOp>,
    /// Character exponent vectors `a`, with `χ_a(Uᵢ) = exp(2πi aᵢ/fᵢ)`.
    pub characters: Vec<Vec<u64>>,
    pub vacuum: usize,
    sys: Arc<SiteSystem>,
    qmap: QuotientMap,
    null_span: WeylSpan,
}

pub fn logical_quotient(model: &StabilizerModel, annulus: &AnnulusSpec) -> Result<LogicalAlgebra> {
    if annulus.t == 0 {
        return Err(Error::Geometry("annulus thickness must be positive".into()));
    }
    let region = annulus.region(model.layout());
    // enlarge by w, but keep at least the center of the hole out
    let w = model.interaction_range().min(annulus.r_ann.saturating_sub(annulus.t + 1));
    let outer = annulus.with_thickness(annulus.t + w).region(model.layout());
    let mut alg = logical_quotient_on(model, &region, &outer)?;
    alg.annulus = Some(*annulus);
    Ok(alg)
}

/// Logical algebra on `region`, with null operators built from terms inside `outer`.
pub fn logical_quotient_on(model: &StabilizerModel, region: &Region, outer: &Region) -> Result<LogicalAlgebra> {
    let sys = model.system().clone();
    let sites = region.sites();
    let commutant = commutant_on_region(model, region)?.generators;
    let null_generators = null_subgroup(model, region, outer)?;
    let moduli = local_moduli(&sys, sites);
    let gvecs: Vec<Vec<u64>> = commutant.iter().map(|g| local_vector(g, sites)).collect();
    let nvecs: Vec<Vec<u64>> = null_generators.iter().map(|g| local_vector(g, sites)).collect();
    let qmap = quotient_structure(&gvecs, &nvecs, &moduli)?;
    let null_span = WeylSpan::new(&sys, &null_generators);
    if !null_span.is_phase_consistent() {
        return Err(Error::Frustrated("null operators generate a nontrivial phase".into()));
    }
    let factors = qmap.structure.invariant_factors.clone();
    let mut reps = Vec::with_capacity(factors.len());
    for (coeffs, &f) in qmap.structure.generator_map.iter().zip(&factors) {
        let mut u = WeylOp::identity(&sys);
        for (g, &c) in commutant.iter().zip(coeffs) {
            if c != 0 {
                u = u.compose(&g.pow(c as i64))?;
            }
        }
        let theta = null_span.residual_phase(&u.pow(f as i64)).ok_or_else(|| {
            Error::PhaseIncoherence(format!("the {f}-th power of {u} is not a null product"))
        })?;
        reps.push(u.times_phase(theta.neg().divide(f)));
    }
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            let c = reps[i].commutation_exponent(&reps[j])?;
            if !c.is_zero() {
                return Err(Error::NonCommutativeQuotient(format!(
                    "representatives {i} and {j} have commutation exponent {c}"
                )));
            }
        }
    }
    let mut alg = LogicalAlgebra {
        annulus: None,
        region: region.clone(),
        structure: qmap.structure.clone(),
        representatives: reps,
        commutant,
        null_generators,
        characters: Vec::new(),
        vacuum: 0,
        sys,
        qmap,
        null_span,
    };
    let state = model.state()?;
    let vac = vacuum_character(&state, &alg)?;
    let mut chars = alg.elements();
    chars.retain(|a| *a != vac);
    chars.insert(0, vac);
    alg.characters = chars;
    alg.vacuum = 0;
    Ok(alg)
}

/// Mixed-radix enumeration of `⊕ ℤ_{fᵢ}` in lexicographic order.
fn enumerate(factors: &[u64]) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for &f in factors {
        out = out.into_iter().flat_map(|v| (0..f).map(move |k| [v.clone(), vec![k]].concat())).collect();
    }
    out
}

/// The character whose projector has expectation 1 in `state`.
fn vacuum_character(state: &StabilizerState, alg: &LogicalAlgebra) -> Result<Vec<u64>> {
    let eig: Vec<Option<Phase>> = alg.representatives.iter().map(|u| state.span().residual_phase(u)).collect();
    let factors = alg.factors();
    if eig.iter().all(Option::is_some) {
        let mut a = Vec::with_capacity(eig.len());
        for (p, &f) in eig.iter().zip(factors) {
            let p = p.unwrap();
            if (f % p.den()) != 0 {
                return Err(Error::NoVacuum);
            }
            a.push(p.num() * (f / p.den()) % f);
        }
        return Ok(a);
    }
    let elems = alg.elements();
    let values: Vec<Cyclo> = elems.iter().map(|g| state.expectation(&alg.element_op(g))).collect();
    let q = alg.order() as i64;
    let mut hits = Vec::new();
    for (k, a) in elems.iter().enumerate() {
        let mut acc = Cyclo::zero();
        for (g, v) in elems.iter().zip(&values) {
            acc = &acc + &(&alg.character_phase(a, g).neg().to_cyclo() * v);
        }
        if acc.scale(&num::BigRational::new(1.into(), q.into())) == Cyclo::one() {
            hits.push(k);
        }
    }
    match hits.as_slice() {
        [k] => Ok(elems[*k].clone()),
        [] => Err(Error::NoVacuum),
        _ => Err(Error::MultipleVacua(hits)),
    }
}

/// Index of the vacuum character of `alg` in `state`.
pub fn vacuum_label(state: &StabilizerState, alg: &LogicalAlgebra) -> Result<usize> {
    let a = vacuum_character(state, alg)?;
    alg.characters.iter().position(|c| *c == a).ok_or(Error::NoVacuum)
}

impl LogicalAlgebra {
    pub fn system(&self) -> &Arc<SiteSystem> {
        &self.sys
    }

    pub fn factors(&self) -> &[u64] {
        &self.structure.invariant_factors
    }

    pub fn order(&self) -> u128 {
        self.structure.order()
    }

    /// All group elements in lexicographic order.
    pub fn elements(&self) -> Vec<Vec<u64>> {
        enumerate(self.factors())
    }

    /// `U_g = ∏ Uᵢ^{gᵢ}`.
    pub fn element_op(&self, g: &[u64]) -> WeylOp {
        let mut u = WeylOp::identity(&self.sys);
        for (r, &e) in self.representatives.iter().zip(g) {
            if e != 0 {
                u = &u * &r.pow(e as i64);
            }
        }
        u
    }

    /// `χ_a(g)` as a phase.
    pub fn character_phase(&self, a: &[u64], g: &[u64]) -> Phase {
        let mut p = Phase::ZERO;
        for ((&ai, &gi), &f) in a.iter().zip(g).zip(self.factors()) {
            p = p.add(Phase::new((ai * gi % f) as i128, f));
        }
        p
    }

    /// `π_a = (1/|Q|) Σ_g χ_a(g)* U_g` for the `k`-th character.
    pub fn projector(&self, k: usize) -> WeylSum {
        let a = &self.characters[k];
        let w = Cyclo::from_ratio(1, self.order() as i64);
        let mut s = WeylSum::zero(&self.sys);
        for g in self.elements() {
            let c = &w * &self.character_phase(a, &g).neg().to_cyclo();
            s.add_term(c, &self.element_op(&g));
        }
        s
    }

    /// Class of a commutant element supported on the region.
    pub fn classify(&self, op: &WeylOp) -> Result<Vec<u64>> {
        if op.support().iter().any(|&s| !self.region.contains(s)) {
            return Err(Error::SupportViolation(format!("{op} leaves the annulus")));
        }
        self.qmap
            .coordinates(&local_vector(op, self.region.sites()))
            .ok_or_else(|| Error::InvalidInput(format!("{op} is not in the commutant")))
    }

    /// Rewrites `op = c·U_g·n` with `n` a null product; returns `(g, c)`.
    pub fn decompose(&self, op: &WeylOp) -> Result<(Vec<u64>, Phase)> {
        let g = self.classify(op)?;
        let rest = op.compose(&self.element_op(&g).inverse())?;
        let theta = self
            .null_span
            .residual_phase(&rest)
            .ok_or_else(|| Error::PhaseIncoherence(format!("{op} differs from its class by a non-null operator")))?;
        Ok((g, theta))
    }

    /// Canonical form in `𝒜/𝒩`: every term replaced by its representative.
    pub fn canonicalize(&self, s: &WeylSum) -> Result<WeylSum> {
        let mut out = WeylSum::zero(&self.sys);
        for (c, op) in s.terms() {
            let (g, theta) = self.decompose(op)?;
            out.add_term(c * &theta.to_cyclo(), &self.element_op(&g));
        }
        Ok(out)
    }

    pub fn to_record(&self) -> LogicalAlgebraRecord {
        LogicalAlgebraRecord {
            invariant_factors: self.factors().to_vec(),
            representatives: self.representatives.iter().map(|r| r.to_record()).collect(),
            characters: self.characters.clone(),
            vacuum: self.vacuum,
            region: self.region.sites().to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LogicalAlgebraRecord {
    pub invariant_factors: Vec<u64>,
    pub representatives: Vec<WeylOpRecord>,
    pub characters: Vec<Vec<u64>>,
    pub vacuum: usize,
    pub region: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub t1: u32,
    pub t2: u32,
    pub order_t1: u128,
    pub order_t2: u128,
    pub injective: bool,
    pub surjective: bool,
    pub isomorphism: bool,
    /// A nonzero class of the thinner annulus mapping to zero, if any.
    pub kernel_witness: Option<Vec<u64>>,
}

/// Whether inclusion of the `t1`-annulus into the `t2`-annulus induces an
/// isomorphism of logical algebras.
pub fn check_stability(model: &StabilizerModel, annulus: &AnnulusSpec, t1: u32, t2: u32) -> Result<StabilityReport> {
    if t1 > t2 {
        return Err(Error::InvalidInput(format!("t1 = {t1} exceeds t2 = {t2}")));
    }
    let a1 = logical_quotient(model, &annulus.with_thickness(t1))?;
    let a2 = logical_quotient(model, &annulus.with_thickness(t2))?;
    let images: Vec<Vec<u64>> = a1.representatives.iter().map(|r| a2.classify(r)).collect::<Result<_>>()?;
    let f2 = a2.factors().to_vec();
    let mut seen = std::collections::HashMap::new();
    let mut kernel_witness = None;
    for g in a1.elements() {
        let mut img = vec![0u64; f2.len()];
        for (gi, im) in g.iter().zip(&images) {
            for (k, x) in img.iter_mut().enumerate() {
                *x = (*x + gi * im[k]) % f2[k];
            }
        }
        if img.iter().all(|&x| x == 0) && g.iter().any(|&x| x != 0) && kernel_witness.is_none() {
            kernel_witness = Some(g.clone());
        }
        seen.insert(img, g);
    }
    let injective = seen.len() as u128 == a1.order();
    let surjective = seen.len() as u128 == a2.order();
    Ok(StabilityReport {
        t1,
        t2,
        order_t1: a1.order(),
        order_t2: a2.order(),
        injective,
        surjective,
        isomorphism: injective && surjective,
        kernel_witness,
    })
}
