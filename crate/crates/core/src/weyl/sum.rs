use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{SiteSystem, WeylOp, WeylOpRecord};
use crate::cyclo::{Cyclo, CycloRecord};
use crate::error::{Error, Result};

/// Finite linear combination of Weyl operators with cyclotomic coefficients.
///
/// Phases are absorbed into coefficients; stored operators have trivial
/// phase and are keyed by their exponent vectors.
#[derive(Clone, Debug)]
pub struct WeylSum {
    sys: Arc<SiteSystem>,
    terms: BTreeMap<Vec<u64>, (Cyclo, WeylOp)>,
}

impl PartialEq for WeylSum {
    fn eq(&self, o: &Self) -> bool {
        self.terms.len() == o.terms.len()
            && self.terms.iter().all(|(k, (c, _))| o.terms.get(k).is_some_and(|(c2, _)| c == c2))
    }
}

impl WeylSum {
    pub fn zero(sys: &Arc<SiteSystem>) -> Self {
        Self { sys: sys.clone(), terms: BTreeMap::new() }
    }

    pub fn identity(sys: &Arc<SiteSystem>) -> Self {
        Self::from_op(&WeylOp::identity(sys))
    }

    pub fn from_op(op: &WeylOp) -> Self {
        Self::from_term(Cyclo::one(), op)
    }

    /// `c · op` (the operator's own phase is folded into `c`).
    pub fn from_term(c: Cyclo, op: &WeylOp) -> Self {
        let mut s = Self::zero(op.system());
        s.add_term(c, op);
        s
    }

    pub fn system(&self) -> &Arc<SiteSystem> {
        &self.sys
    }

    pub fn add_term(&mut self, c: Cyclo, op: &WeylOp) {
        let c = &c * &op.phase().to_cyclo();
        if c.is_zero() {
            return;
        }
        let key = op.exponent_vector();
        match self.terms.get_mut(&key) {
            Some((old, _)) => {
                *old = &*old + &c;
                if old.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, (c, op.operator_part()));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(coefficient, phase-free operator)` pairs in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Cyclo, &WeylOp)> {
        self.terms.values().map(|(c, o)| (c, o))
    }

    pub fn coefficient_of(&self, op: &WeylOp) -> Cyclo {
        let base = self.terms.get(&op.exponent_vector()).map_or(Cyclo::zero(), |(c, _)| c.clone());
        // coefficient of `op` itself, which carries its phase
        &base * &op.phase().neg().to_cyclo()
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = self.clone();
        for (c, op) in o.terms() {
            out.add_term(c.clone(), op);
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.scale(&Cyclo::from_ratio(-1, 1)))
    }

    pub fn scale(&self, c: &Cyclo) -> Self {
        let mut out = Self::zero(&self.sys);
        for (k, (a, op)) in &self.terms {
            let v = a * c;
            if !v.is_zero() {
                out.terms.insert(k.clone(), (v, op.clone()));
            }
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = Self::zero(&self.sys);
        for (a, p) in self.terms() {
            for (b, q) in o.terms() {
                out.add_term(a * b, &(p * q));
            }
        }
        Ok(out)
    }

    pub fn mul_op(&self, op: &WeylOp) -> Self {
        let mut out = Self::zero(&self.sys);
        for (a, p) in self.terms() {
            out.add_term(a.clone(), &(p * op));
        }
        out
    }

    pub fn op_mul(&self, op: &WeylOp) -> Self {
        let mut out = Self::zero(&self.sys);
        for (a, p) in self.terms() {
            out.add_term(a.clone(), &(op * p));
        }
        out
    }

    /// Hermitian adjoint.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(&self.sys);
        for (a, p) in self.terms() {
            out.add_term(a.conj(), &p.inverse());
        }
        out
    }

    /// Whether every component commutes with `op` (equivalently the sum does).
    pub fn commutes_with(&self, op: &WeylOp) -> bool {
        self.terms().all(|(_, p)| p.commutes_with(op))
    }

    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.terms().flat_map(|(_, p)| p.support()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    fn check(&self, o: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.sys, &o.sys) || self.sys == o.sys {
            Ok(())
        } else {
            Err(Error::SiteSystemMismatch)
        }
    }

    pub fn to_record(&self) -> WeylSumRecord {
        WeylSumRecord { terms: self.terms().map(|(c, p)| (c.to_record(), p.to_record())).collect() }
    }

    pub fn from_record(sys: &Arc<SiteSystem>, r: &WeylSumRecord) -> Result<Self> {
        let mut s = Self::zero(sys);
        for (c, p) in &r.terms {
            s.add_term(Cyclo::from_record(c), &WeylOp::from_record(sys, p)?);
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylSumRecord {
    pub terms: Vec<(CycloRecord, WeylOpRecord)>,
}
