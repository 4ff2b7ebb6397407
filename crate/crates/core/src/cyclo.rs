//! Exact cyclotomic numbers: rational combinations of roots of unity.
//!
//! A value of conductor `n` is stored in the power basis `1, ζ, …, ζ^{φ(n)-1}`
//! of ℚ(ζ_n), reduced modulo the cyclotomic polynomial Φ_n, so equality
//! at a common conductor is coefficient equality.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num::{BigInt, BigRational, Complex, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::ringlinalg::arith::{lcm, totient};

fn cyclotomic_poly(n: u64) -> Arc<Vec<i64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Vec<i64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.lock().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by Φ_d for every proper divisor d
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in (1..n).filter(|d| n.is_multiple_of(*d)) {
        num = poly_div_exact(&num, &cyclotomic_poly(d));
    }
    let p = Arc::new(num);
    cache.lock().unwrap().insert(n, p.clone());
    p
}

/// Exact division of integer polynomials by a monic divisor (low degree first).
fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let dn = den.len() - 1;
    let mut rem = num.to_vec();
    let mut q = vec![0i64; num.len() - dn];
    for i in (0..q.len()).rev() {
        let c = rem[i + dn];
        q[i] = c;
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[i + j] = rem[i + j].checked_sub(c.checked_mul(dj).expect("overflow")).expect("overflow");
            }
        }
    }
    debug_assert!(rem.iter().all(|&x| x == 0));
    q
}

#[derive(Clone, Debug)]
pub struct Cyclo {
    n: u64,
    c: Vec<BigRational>,
}

fn reduce_poly(n: u64, mut p: Vec<BigRational>) -> Vec<BigRational> {
    let phi = totient(n) as usize;
    let f = cyclotomic_poly(n);
    for i in (phi..p.len()).rev() {
        if p[i].is_zero() {
            continue;
        }
        let a = std::mem::take(&mut p[i]);
        for (j, &fj) in f.iter().enumerate().take(phi) {
            if fj != 0 {
                p[i - phi + j] -= &a * BigRational::from_integer(BigInt::from(fj));
            }
        }
    }
    p.resize(phi, BigRational::zero());
    p
}

impl Cyclo {
    pub fn zero() -> Self {
        Self { n: 1, c: vec![BigRational::zero()] }
    }

    pub fn one() -> Self {
        Self::rational(BigRational::one())
    }

    pub fn rational(q: BigRational) -> Self {
        Self { n: 1, c: vec![q] }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::rational(BigRational::new(num.into(), den.into()))
    }

    /// `exp(2πi k / n)`.
    pub fn root_of_unity(k: i64, n: u64) -> Self {
        Self::from_terms(n, [(k, BigRational::one())])
    }

    /// `Σ q_k ζ_n^k`.
    pub fn from_terms(n: u64, terms: impl IntoIterator<Item = (i64, BigRational)>) -> Self {
        assert!(n >= 1);
        let mut p = vec![BigRational::zero(); n as usize];
        for (k, q) in terms {
            p[k.rem_euclid(n as i64) as usize] += q;
        }
        Self { n, c: reduce_poly(n, p) }
    }

    /// `(1/den) Σ_k counts[k] ζ_n^k`, the shape of character sums.
    pub fn from_counts(n: u64, counts: &[i64], den: i64) -> Self {
        let d = BigInt::from(den);
        let p: Vec<BigRational> =
            counts.iter().map(|&x| BigRational::new(BigInt::from(x), d.clone())).collect();
        let mut full = vec![BigRational::zero(); n as usize];
        for (k, q) in p.into_iter().enumerate() {
            full[k % n as usize] += q;
        }
        Self { n, c: reduce_poly(n, full) }
    }

    pub fn conductor(&self) -> u64 {
        self.n
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    /// Rewrites the value at conductor `m` (a multiple of the current one).
    pub fn lift(&self, m: u64) -> Self {
        assert!(m.is_multiple_of(self.n), "lift to a non-multiple conductor");
        if m == self.n {
            return self.clone();
        }
        let step = (m / self.n) as usize;
        let mut p = vec![BigRational::zero(); m as usize];
        for (k, q) in self.c.iter().enumerate() {
            p[k * step] = q.clone();
        }
        Self { n: m, c: reduce_poly(m, p) }
    }

    fn common(&self, other: &Self) -> (Self, Self) {
        let m = lcm(self.n, other.n);
        (self.lift(m), other.lift(m))
    }

    pub fn conj(&self) -> Self {
        let n = self.n as i64;
        Self::from_terms(self.n, self.c.iter().enumerate().map(|(k, q)| (n - k as i64, q.clone())))
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Self { n: self.n, c: self.c.iter().map(|x| x * q).collect() }
    }

    /// Rational value, when the number is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        self.c[1..].iter().all(Zero::is_zero).then(|| self.c[0].clone())
    }

    /// `(q, k)` with value `q·ζ_n^k` when the number has that shape.
    pub fn as_monomial(&self) -> Option<(BigRational, u64, u64)> {
        if self.is_zero() {
            return Some((BigRational::zero(), 0, 1));
        }
        let n = self.n;
        let base = if n % 2 == 1 { 2 * n } else { n };
        let me = self.lift(base);
        for k in 0..base {
            let t = &me * &Cyclo::root_of_unity(-(k as i64), base);
            if let Some(q) = t.as_rational() {
                let g = crate::ringlinalg::arith::gcd(k, base);
                let (k, ord) = if k == 0 { (0, 1) } else { (k / g, base / g) };
                return Some((q, k, ord));
            }
        }
        None
    }

    pub fn to_complex(&self) -> Complex<f64> {
        let n = self.n as f64;
        self.c
            .iter()
            .enumerate()
            .map(|(k, q)| {
                let f = q.to_f64().unwrap_or(f64::NAN);
                Complex::from_polar(f, 2.0 * std::f64::consts::PI * k as f64 / n)
            })
            .sum()
    }

    /// Serializable record: monomial when possible, power basis otherwise.
    pub fn to_record(&self) -> CycloRecord {
        let terms = match self.as_monomial() {
            Some((q, _, _)) if q.is_zero() => Vec::new(),
            Some((q, k, ord)) => vec![CycloTerm::new(&q, k, ord)],
            None => self
                .c
                .iter()
                .enumerate()
                .filter(|(_, q)| !q.is_zero())
                .map(|(k, q)| CycloTerm::new(q, k as u64, self.n))
                .collect(),
        };
        let z = self.to_complex();
        CycloRecord { terms, float: [z.re, z.im] }
    }

    pub fn from_record(r: &CycloRecord) -> Self {
        r.terms.iter().fold(Cyclo::zero(), |acc, t| {
            let q = BigRational::new(BigInt::from(t.coeff[0]), BigInt::from(t.coeff[1]));
            &acc + &Cyclo::from_terms(t.root_order, [(t.root_exponent as i64, q)])
        })
    }
}

/// One `coeff · exp(2πi·root_exponent/root_order)` summand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycloTerm {
    pub coeff: [i64; 2],
    pub root_exponent: u64,
    pub root_order: u64,
}

impl CycloTerm {
    fn new(q: &BigRational, k: u64, n: u64) -> Self {
        let num = q.numer().to_i64().expect("coefficient fits in i64");
        let den = q.denom().to_i64().expect("coefficient fits in i64");
        Self { coeff: [num, den], root_exponent: k, root_order: n }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycloRecord {
    pub terms: Vec<CycloTerm>,
    /// `[re, im]`, a convenience rendering only.
    pub float: [f64; 2],
}

impl PartialEq for Cyclo {
    fn eq(&self, other: &Self) -> bool {
        if self.n == other.n {
            return self.c == other.c;
        }
        let (a, b) = self.common(other);
        a.c == b.c
    }
}

impl Eq for Cyclo {}

impl<'a> Add<&'a Cyclo> for &'a Cyclo {
    type Output = Cyclo;
    fn add(self, o: &Cyclo) -> Cyclo {
        let (mut a, b) = self.common(o);
        for (x, y) in a.c.iter_mut().zip(b.c) {
            *x += y;
        }
        a
    }
}

impl<'a> Sub<&'a Cyclo> for &'a Cyclo {
    type Output = Cyclo;
    fn sub(self, o: &Cyclo) -> Cyclo {
        self + &(-o)
    }
}

impl Neg for &Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        Cyclo { n: self.n, c: self.c.iter().map(|x| -x).collect() }
    }
}

impl<'a> Mul<&'a Cyclo> for &'a Cyclo {
    type Output = Cyclo;
    fn mul(self, o: &Cyclo) -> Cyclo {
        let (a, b) = self.common(o);
        if a.n == 1 {
            return Cyclo { n: 1, c: vec![&a.c[0] * &b.c[0]] };
        }
        let mut p = vec![BigRational::zero(); a.c.len() + b.c.len() - 1];
        for (i, x) in a.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.c.iter().enumerate() {
                if !y.is_zero() {
                    p[i + j] += x * y;
                }
            }
        }
        Cyclo { n: a.n, c: reduce_poly(a.n, p) }
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if let Some((q, k, n)) = self.as_monomial() {
            return if k == 0 { write!(f, "{q}") } else { write!(f, "{q}·ζ{n}^{k}") };
        }
        let mut first = true;
        for (k, q) in self.c.iter().enumerate().filter(|(_, q)| !q.is_zero()) {
            if !first {
                write!(f, " {} ", if q.is_negative() { "-" } else { "+" })?;
            } else if q.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let a = q.abs();
            if k == 0 {
                write!(f, "{a}")?;
            } else {
                write!(f, "{a}·ζ{}^{k}", self.n)?;
            }
        }
        Ok(())
    }
}
