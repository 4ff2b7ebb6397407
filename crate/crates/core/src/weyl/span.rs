use std::sync::Arc;

use num::BigUint;

use super::{Phase, SiteSystem, WeylOp};
use crate::ringlinalg::Howell;

/// The group generated by a set of Weyl operators, with exact phases.
///
/// Reduction of an operator against the echelon form returns the residual
/// phase `θ` with `op = e^{2πiθ}·g` for a group element `g`; for a
/// stabilizer group this is the exact expectation value.
#[derive(Clone, Debug)]
pub struct WeylSpan {
    sys: Arc<SiteSystem>,
    howell: Howell<WeylOp>,
}

impl WeylSpan {
    pub fn new(sys: &Arc<SiteSystem>, gens: &[WeylOp]) -> Self {
        let rows = gens.iter().map(|g| (g.embedded_vector(), g.clone())).collect();
        let howell = Howell::new(sys.phase_denominator(), 2 * sys.len(), rows);
        Self { sys: sys.clone(), howell }
    }

    pub fn system(&self) -> &Arc<SiteSystem> {
        &self.sys
    }

    /// `Some(θ)` if `op = e^{2πiθ}·g` with `g` in the group, `None` if the
    /// operator part of `op` is not generated.
    pub fn residual_phase(&self, op: &WeylOp) -> Option<Phase> {
        let mut v = op.embedded_vector();
        let mut p = op.clone();
        self.howell.reduce(&mut v, &mut p).then(|| {
            debug_assert!(p.is_scalar());
            p.phase()
        })
    }

    pub fn contains_up_to_phase(&self, op: &WeylOp) -> bool {
        self.howell.reduce_vector(&mut op.embedded_vector())
    }

    /// Nontrivial phases `e^{2πiθ}·I` lying in the group; nonempty exactly
    /// when the generators admit no common +1 eigenvector.
    pub fn scalar_phases(&self) -> Vec<Phase> {
        let mut out: Vec<Phase> = self.howell.scalars.iter().map(|p| p.phase()).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn is_phase_consistent(&self) -> bool {
        self.howell.scalars.is_empty()
    }

    /// Number of distinct operator parts in the group (saturating).
    pub fn order(&self) -> u128 {
        self.howell.span_order()
    }

    /// Exact number of distinct operator parts in the group.
    pub fn order_exact(&self) -> BigUint {
        self.howell.rows.iter().map(|r| BigUint::from(self.howell.modulus / r.entries[r.pivot])).product()
    }
}
