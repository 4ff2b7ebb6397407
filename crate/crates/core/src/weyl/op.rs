use std::fmt;
use std::ops::Mul;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Phase, SiteSystem};
use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::ringlinalg::RowPayload;

/// `phase · ∏_i X_i^{x_i} Z_i^{z_i}`, X left of Z on every site.
#[derive(Clone, Debug)]
pub struct WeylOp {
    sys: Arc<SiteSystem>,
    phase: Phase,
    x: Vec<u32>,
    z: Vec<u32>,
}

impl PartialEq for WeylOp {
    fn eq(&self, o: &Self) -> bool {
        self.same_system(o) && self.phase == o.phase && self.x == o.x && self.z == o.z
    }
}

impl Eq for WeylOp {}

impl std::hash::Hash for WeylOp {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.phase.hash(state);
        self.x.hash(state);
        self.z.hash(state);
    }
}

/// Residue of `(x·z)·k(k−1)/2` modulo `d`, exactly.
fn triangular_term(x: u32, z: u32, k: i128, d: u32) -> i128 {
    let t = k * (k - 1) / 2;
    ((x as i128 * z as i128) % d as i128 * (t % d as i128)) % d as i128
}

impl WeylOp {
    pub fn identity(sys: &Arc<SiteSystem>) -> Self {
        let n = sys.len();
        Self { sys: sys.clone(), phase: Phase::ZERO, x: vec![0; n], z: vec![0; n] }
    }

    pub fn scalar(sys: &Arc<SiteSystem>, phase: Phase) -> Self {
        let mut op = Self::identity(sys);
        op.phase = phase;
        op
    }

    /// `X_site^x Z_site^z`.
    pub fn single(sys: &Arc<SiteSystem>, site: usize, x: i64, z: i64) -> Self {
        let mut op = Self::identity(sys);
        op.set_site(site, x, z);
        op
    }

    pub fn from_parts(sys: &Arc<SiteSystem>, phase: Phase, x: Vec<u32>, z: Vec<u32>) -> Result<Self> {
        if x.len() != sys.len() || z.len() != sys.len() {
            return Err(Error::DimensionMismatch("exponent vector length".into()));
        }
        let mut op = Self { sys: sys.clone(), phase, x, z };
        for i in 0..op.x.len() {
            let d = sys.dim(i);
            op.x[i] %= d;
            op.z[i] %= d;
        }
        Ok(op)
    }

    /// Builds from sparse `(site, exponent)` lists.
    pub fn from_sparse(
        sys: &Arc<SiteSystem>,
        phase: Phase,
        xs: &[(usize, i64)],
        zs: &[(usize, i64)],
    ) -> Result<Self> {
        let mut op = Self::scalar(sys, phase);
        for &(s, e) in xs {
            if s >= sys.len() {
                return Err(Error::InvalidInput(format!("site {s} out of range")));
            }
            let d = sys.dim(s) as i64;
            op.x[s] = ((op.x[s] as i64 + e).rem_euclid(d)) as u32;
        }
        for &(s, e) in zs {
            if s >= sys.len() {
                return Err(Error::InvalidInput(format!("site {s} out of range")));
            }
            let d = sys.dim(s) as i64;
            op.z[s] = ((op.z[s] as i64 + e).rem_euclid(d)) as u32;
        }
        Ok(op)
    }

    fn set_site(&mut self, site: usize, x: i64, z: i64) {
        let d = self.sys.dim(site) as i64;
        self.x[site] = x.rem_euclid(d) as u32;
        self.z[site] = z.rem_euclid(d) as u32;
    }

    pub fn system(&self) -> &Arc<SiteSystem> {
        &self.sys
    }

    pub fn same_system(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.sys, &o.sys) || self.sys == o.sys
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn x(&self) -> &[u32] {
        &self.x
    }

    pub fn z(&self) -> &[u32] {
        &self.z
    }

    pub fn with_phase(&self, phase: Phase) -> Self {
        Self { phase, ..self.clone() }
    }

    pub fn times_phase(&self, p: Phase) -> Self {
        self.with_phase(self.phase.add(p))
    }

    /// Drops the phase.
    pub fn operator_part(&self) -> Self {
        self.with_phase(Phase::ZERO)
    }

    pub fn is_scalar(&self) -> bool {
        self.x.iter().all(|&e| e == 0) && self.z.iter().all(|&e| e == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.is_scalar() && self.phase.is_zero()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.x.len()).filter(|&i| self.x[i] != 0 || self.z[i] != 0).collect()
    }

    pub fn acts_on(&self, site: usize) -> bool {
        self.x[site] != 0 || self.z[site] != 0
    }

    /// Canonical product `self · o`.
    pub fn compose(&self, o: &Self) -> Result<Self> {
        if !self.same_system(o) {
            return Err(Error::SiteSystemMismatch);
        }
        Ok(self.compose_unchecked(o))
    }

    fn compose_unchecked(&self, o: &Self) -> Self {
        let den = self.sys.phase_denominator();
        let dims = self.sys.dims();
        let mut acc: u64 = 0;
        let mut x = Vec::with_capacity(self.x.len());
        let mut z = Vec::with_capacity(self.z.len());
        for i in 0..self.x.len() {
            let d = dims[i];
            let (x1, z1, x2, z2) = (self.x[i], self.z[i], o.x[i], o.z[i]);
            if z1 != 0 && x2 != 0 {
                acc = (acc + (z1 as u64 * x2 as u64 % d as u64) * (den / d as u64)) % den;
            }
            let xs = x1 + x2;
            let zs = z1 + z2;
            x.push(if xs >= d { xs - d } else { xs });
            z.push(if zs >= d { zs - d } else { zs });
        }
        let phase = self.phase.add(o.phase).add(Phase::new(acc as i128, den));
        Self { sys: self.sys.clone(), phase, x, z }
    }

    pub fn inverse(&self) -> Self {
        let den = self.sys.phase_denominator();
        let dims = self.sys.dims();
        let mut acc: u64 = 0;
        let mut x = Vec::with_capacity(self.x.len());
        let mut z = Vec::with_capacity(self.z.len());
        for i in 0..self.x.len() {
            let d = dims[i];
            let (xi, zi) = (self.x[i], self.z[i]);
            if xi != 0 && zi != 0 {
                acc = (acc + (xi as u64 * zi as u64 % d as u64) * (den / d as u64)) % den;
            }
            x.push((d - xi) % d);
            z.push((d - zi) % d);
        }
        let phase = self.phase.neg().add(Phase::new(acc as i128, den));
        Self { sys: self.sys.clone(), phase, x, z }
    }

    pub fn pow(&self, k: i64) -> Self {
        if k < 0 {
            return self.inverse().pow(-k);
        }
        let k = k as i128;
        let den = self.sys.phase_denominator();
        let dims = self.sys.dims();
        let mut acc: i128 = 0;
        let mut x = Vec::with_capacity(self.x.len());
        let mut z = Vec::with_capacity(self.z.len());
        for i in 0..self.x.len() {
            let d = dims[i];
            let (xi, zi) = (self.x[i], self.z[i]);
            if xi != 0 && zi != 0 {
                acc = (acc + triangular_term(xi, zi, k, d) * (den / d as u64) as i128) % den as i128;
            }
            x.push(((xi as i128 * k) % d as i128) as u32);
            z.push(((zi as i128 * k) % d as i128) as u32);
        }
        let phase = self.phase.times(k as i64).add(Phase::new(acc, den));
        Self { sys: self.sys.clone(), phase, x, z }
    }

    /// `c` with `self·o = exp(2πi c) · o·self`.
    pub fn commutation_exponent(&self, o: &Self) -> Result<Phase> {
        if !self.same_system(o) {
            return Err(Error::SiteSystemMismatch);
        }
        Ok(self.commutation_unchecked(o))
    }

    pub(crate) fn commutation_unchecked(&self, o: &Self) -> Phase {
        let den = self.sys.phase_denominator();
        let dims = self.sys.dims();
        let mut acc: i128 = 0;
        for i in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[i], self.z[i], o.x[i], o.z[i]);
            let t = z1 as i128 * x2 as i128 - x1 as i128 * z2 as i128;
            if t != 0 {
                acc += t * (den / dims[i] as u64) as i128;
            }
        }
        Phase::new(acc, den)
    }

    /// Commutation exponent restricted to the given sites.
    pub fn commutation_on(&self, o: &Self, sites: impl Iterator<Item = usize>) -> Phase {
        let den = self.sys.phase_denominator();
        let dims = self.sys.dims();
        let mut acc: i128 = 0;
        for i in sites {
            let t = self.z[i] as i128 * o.x[i] as i128 - self.x[i] as i128 * o.z[i] as i128;
            acc += t * (den / dims[i] as u64) as i128;
        }
        Phase::new(acc, den)
    }

    pub fn commutes_with(&self, o: &Self) -> bool {
        self.commutation_unchecked(o).is_zero()
    }

    /// Factor on `region`, keeping the full phase.
    pub fn restrict(&self, region: &Region) -> Self {
        let mut op = self.clone();
        for i in 0..op.x.len() {
            if !region.contains(i) {
                op.x[i] = 0;
                op.z[i] = 0;
            }
        }
        op
    }

    /// `(a_M, a_M′)` with the phase on the `M` factor and `a_M · a_M′ = a`.
    pub fn split(&self, m: &Region) -> (Self, Self) {
        let inside = self.restrict(m);
        let mut outside = self.operator_part();
        for i in 0..outside.x.len() {
            if m.contains(i) {
                outside.x[i] = 0;
                outside.z[i] = 0;
            }
        }
        (inside, outside)
    }

    /// Smallest `n ≥ 1` with `selfⁿ = phase·I`, and that phase.
    pub fn order_of(&self) -> (u64, Phase) {
        use num::Integer;
        let dims = self.sys.dims();
        let mut n: u64 = 1;
        for i in 0..self.x.len() {
            let d = dims[i] as u64;
            let g = (self.x[i] as u64).gcd(&(self.z[i] as u64)).gcd(&d);
            n = n.lcm(&(d / g));
        }
        let p = self.pow(n as i64);
        debug_assert!(p.is_scalar());
        (n, p.phase)
    }

    /// Exponents scaled into ℤ_den, interleaved `[x_0, z_0, x_1, z_1, …]`.
    pub fn embedded_vector(&self) -> Vec<u64> {
        let den = self.sys.phase_denominator();
        let dims = self.sys.dims();
        let mut v = Vec::with_capacity(2 * self.x.len());
        for i in 0..self.x.len() {
            let s = den / dims[i] as u64;
            v.push(self.x[i] as u64 * s);
            v.push(self.z[i] as u64 * s);
        }
        v
    }

    /// Raw exponents, interleaved like [`Self::embedded_vector`].
    pub fn exponent_vector(&self) -> Vec<u64> {
        self.x.iter().zip(&self.z).flat_map(|(&a, &b)| [a as u64, b as u64]).collect()
    }

    pub fn from_exponent_vector(sys: &Arc<SiteSystem>, phase: Phase, v: &[u64]) -> Result<Self> {
        if v.len() != 2 * sys.len() {
            return Err(Error::DimensionMismatch("exponent vector length".into()));
        }
        let x = v.iter().step_by(2).map(|&e| e as u32).collect();
        let z = v.iter().skip(1).step_by(2).map(|&e| e as u32).collect();
        Self::from_parts(sys, phase, x, z)
    }

    /// Reembeds into a larger system, shifting sites by `offset`.
    pub fn embed(&self, sys: &Arc<SiteSystem>, offset: usize) -> Result<Self> {
        let mut op = Self::identity(sys);
        for i in 0..self.x.len() {
            let j = i + offset;
            if j >= sys.len() || sys.dim(j) != self.sys.dim(i) {
                return Err(Error::DimensionMismatch("embedding target".into()));
            }
            op.x[j] = self.x[i];
            op.z[j] = self.z[i];
        }
        op.phase = self.phase;
        Ok(op)
    }

    pub fn to_record(&self) -> WeylOpRecord {
        let x = (0..self.x.len()).filter(|&i| self.x[i] != 0).map(|i| [i as u64, self.x[i] as u64]).collect();
        let z = (0..self.z.len()).filter(|&i| self.z[i] != 0).map(|i| [i as u64, self.z[i] as u64]).collect();
        WeylOpRecord { phase: [self.phase.num(), self.phase.den()], x, z }
    }

    pub fn from_record(sys: &Arc<SiteSystem>, r: &WeylOpRecord) -> Result<Self> {
        if r.phase[1] == 0 {
            return Err(Error::Parse("zero phase denominator".into()));
        }
        let xs: Vec<(usize, i64)> = r.x.iter().map(|p| (p[0] as usize, p[1] as i64)).collect();
        let zs: Vec<(usize, i64)> = r.z.iter().map(|p| (p[0] as usize, p[1] as i64)).collect();
        Self::from_sparse(sys, Phase::new(r.phase[0] as i128, r.phase[1]), &xs, &zs)
    }

    /// Parses the textual form `w^a/b X[s^e …] Z[s^e …]`.
    pub fn parse(sys: &Arc<SiteSystem>, text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("{m} in {text:?}"));
        let mut phase = Phase::ZERO;
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix("w^") {
                let end = r.find(char::is_whitespace).unwrap_or(r.len());
                let (n, d) = r[..end].split_once('/').ok_or_else(|| bad("phase"))?;
                let n: i128 = n.parse().map_err(|_| bad("phase numerator"))?;
                let d: u64 = d.parse().map_err(|_| bad("phase denominator"))?;
                if d == 0 {
                    return Err(bad("zero denominator"));
                }
                phase = phase.add(Phase::new(n, d));
                rest = r[end..].trim_start();
            } else if rest.starts_with("X[") || rest.starts_with("Z[") {
                let close = rest.find(']').ok_or_else(|| bad("unclosed bracket"))?;
                let target = if rest.starts_with('X') { &mut xs } else { &mut zs };
                for tok in rest[2..close].split_whitespace() {
                    let (s, e) = tok.split_once('^').ok_or_else(|| bad("factor"))?;
                    target.push((
                        s.parse().map_err(|_| bad("site"))?,
                        e.parse().map_err(|_| bad("exponent"))?,
                    ));
                }
                rest = rest[close + 1..].trim_start();
            } else if let Some(r) = rest.strip_prefix('I') {
                rest = r.trim_start();
            } else {
                return Err(bad("unexpected token"));
            }
        }
        Self::from_sparse(sys, phase, &xs, &zs)
    }
}

impl fmt::Display for WeylOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.phase.is_zero() {
            parts.push(format!("w^{}/{}", self.phase.num(), self.phase.den()));
        }
        let list = |v: &[u32]| {
            v.iter().enumerate().filter(|(_, &e)| e != 0).map(|(i, e)| format!("{i}^{e}")).collect::<Vec<_>>()
        };
        let xs = list(&self.x);
        let zs = list(&self.z);
        if !xs.is_empty() {
            parts.push(format!("X[{}]", xs.join(" ")));
        }
        if !zs.is_empty() {
            parts.push(format!("Z[{}]", zs.join(" ")));
        }
        if parts.is_empty() {
            parts.push("I".into());
        }
        write!(f, "{}", parts.join(" "))
    }
}

impl Mul for &WeylOp {
    type Output = WeylOp;
    fn mul(self, o: &WeylOp) -> WeylOp {
        assert!(self.same_system(o), "operators on different site systems");
        self.compose_unchecked(o)
    }
}

impl RowPayload for WeylOp {
    fn combine(&self, a: i64, other: &Self, b: i64) -> Self {
        match (a, b) {
            (1, 0) => self.clone(),
            (0, 1) => other.clone(),
            (_, 0) => self.pow(a),
            (0, _) => other.pow(b),
            (1, _) => self.compose_unchecked(&other.pow(b)),
            _ => self.pow(a).compose_unchecked(&other.pow(b)),
        }
    }

    fn is_trivial(&self) -> bool {
        self.phase.is_zero()
    }
}

/// JSON form: phase `[num, den]` and sparse `[site, exponent]` lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeylOpRecord {
    pub phase: [u64; 2],
    pub x: Vec<[u64; 2]>,
    pub z: Vec<[u64; 2]>,
}
