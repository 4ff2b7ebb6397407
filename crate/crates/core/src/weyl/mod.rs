//! Generalized Pauli (Weyl) operators on qudits of mixed dimensions.

mod op;
mod span;
mod sum;

pub use op::{WeylOp, WeylOpRecord};
pub use span::WeylSpan;
pub use sum::{WeylSum, WeylSumRecord};

use std::fmt;
use std::sync::Arc;

use num::{BigRational, Integer};
use serde::{Deserialize, Serialize};

use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::ringlinalg::arith::lcm_all;

/// Local dimensions of every site, plus the common phase denominator.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct SiteSystem {
    dims: Vec<u32>,
    den: u64,
}

impl SiteSystem {
    pub fn new(dims: Vec<u32>) -> Result<Arc<Self>> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidInput("site dimensions must be at least 2".into()));
        }
        let den = lcm_all(dims.iter().map(|&d| d as u64));
        Ok(Arc::new(Self { dims, den }))
    }

    pub fn uniform(n: usize, d: u32) -> Result<Arc<Self>> {
        Self::new(vec![d; n])
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn dim(&self, site: usize) -> u32 {
        self.dims[site]
    }

    /// lcm of all site dimensions.
    pub fn phase_denominator(&self) -> u64 {
        self.den
    }

    /// Per-coordinate moduli of exponent vectors `[x_0, z_0, x_1, z_1, …]`.
    pub fn coord_moduli(&self) -> Vec<u64> {
        self.dims.iter().flat_map(|&d| [d as u64, d as u64]).collect()
    }

    pub fn hilbert_dim_exact(&self) -> num::BigUint {
        self.dims.iter().map(|&d| num::BigUint::from(d)).product()
    }

    /// Hilbert-space dimension, saturating.
    pub fn hilbert_dim(&self) -> u128 {
        self.dims.iter().fold(1u128, |acc, &d| acc.saturating_mul(d as u128))
    }
}

/// A phase `exp(2πi·num/den)`, kept reduced with `0 ≤ num < den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Phase {
    num: u64,
    den: u64,
}

impl Phase {
    pub const ZERO: Phase = Phase { num: 0, den: 1 };

    pub fn new(num: i128, den: u64) -> Self {
        assert!(den >= 1);
        let n = num.rem_euclid(den as i128) as u64;
        let g = n.gcd(&den);
        if n == 0 {
            return Self::ZERO;
        }
        Self { num: n / g, den: den / g }
    }

    /// `−1`.
    pub fn half() -> Self {
        Self::new(1, 2)
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn add(self, o: Self) -> Self {
        let den = self.den.lcm(&o.den);
        Self::new(
            self.num as i128 * (den / self.den) as i128 + o.num as i128 * (den / o.den) as i128,
            den,
        )
    }

    pub fn neg(self) -> Self {
        Self::new(-(self.num as i128), self.den)
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    pub fn times(self, k: i64) -> Self {
        Self::new(self.num as i128 * k as i128, self.den)
    }

    /// The phase `θ/f` on the principal branch, i.e. `num / (den·f)`.
    pub fn divide(self, f: u64) -> Self {
        Self::new(self.num as i128, self.den * f)
    }

    pub fn to_cyclo(self) -> Cyclo {
        Cyclo::root_of_unity(self.num as i64, self.den)
    }

    pub fn to_cyclo_scaled(self, q: &BigRational) -> Cyclo {
        Cyclo::from_terms(self.den, [(self.num as i64, q.clone())])
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_arithmetic() {
        let a = Phase::new(1, 3);
        assert_eq!(a.add(a).add(a), Phase::ZERO);
        assert_eq!(Phase::new(2, 4), Phase::half());
        assert_eq!(Phase::new(-1, 4), Phase::new(3, 4));
        assert_eq!(Phase::new(1, 2).add(Phase::new(1, 3)), Phase::new(5, 6));
        assert_eq!(Phase::half().divide(2), Phase::new(1, 4));
    }

    #[test]
    fn site_system_denominator() {
        let s = SiteSystem::new(vec![2, 3, 4]).unwrap();
        assert_eq!(s.phase_denominator(), 12);
        assert!(SiteSystem::new(vec![1]).is_err());
    }
}
