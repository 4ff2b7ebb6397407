//! Row echelon (Howell) form over ℤ_m with saturation rows.
//!
//! Membership in the row span is decided by sequential reduction against the
//! pivots, which stays sound for composite moduli because every row's
//! saturation `(m/pivot)·row` is kept in the span of the later rows.
//!
//! Rows may carry a payload that follows every row operation exactly, e.g.
//! the operator whose exponent vector the row is.

use super::arith::{ext_gcd, mul_mod, normalizing_unit, reduce};

/// Extra data carried along row operations.
pub trait RowPayload: Clone {
    /// `self^a · other^b`, with exact integer exponents.
    fn combine(&self, a: i64, other: &Self, b: i64) -> Self;

    /// Payload of a row that became identically zero; `true` when harmless.
    fn is_trivial(&self) -> bool {
        true
    }
}

impl RowPayload for () {
    fn combine(&self, _: i64, _: &Self, _: i64) -> Self {}
}

#[derive(Clone, Debug)]
pub struct HowellRow<P> {
    pub pivot: usize,
    pub entries: Vec<u64>,
    pub payload: P,
}

#[derive(Clone, Debug)]
pub struct Howell<P> {
    pub modulus: u64,
    pub width: usize,
    pub rows: Vec<HowellRow<P>>,
    /// Payloads of combinations whose vector part vanished but which were
    /// not trivial (for operators: a nontrivial phase times the identity).
    pub scalars: Vec<P>,
}

fn lin(a: &[u64], ka: i64, b: &[u64], kb: i64, m: u64) -> Vec<u64> {
    let ka = reduce(ka as i128, m);
    let kb = reduce(kb as i128, m);
    a.iter()
        .zip(b)
        .map(|(&x, &y)| ((x as u128 * ka as u128 + y as u128 * kb as u128) % m as u128) as u64)
        .collect()
}

fn scale(a: &[u64], k: u64, m: u64) -> Vec<u64> {
    a.iter().map(|&x| mul_mod(x, k, m)).collect()
}

impl<P: RowPayload> Howell<P> {
    pub fn new(modulus: u64, width: usize, input: Vec<(Vec<u64>, P)>) -> Self {
        assert!(modulus >= 1);
        let m = modulus;
        let mut scalars = Vec::new();
        let mut active: Vec<(Vec<u64>, P)> = Vec::with_capacity(input.len());
        for (mut v, p) in input {
            assert_eq!(v.len(), width, "row width mismatch");
            v.iter_mut().for_each(|x| *x %= m);
            if v.iter().all(|&x| x == 0) {
                if !p.is_trivial() {
                    scalars.push(p);
                }
            } else {
                active.push((v, p));
            }
        }
        let mut rows = Vec::new();
        for c in 0..width {
            let hits: Vec<usize> = (0..active.len()).filter(|&i| active[i].0[c] != 0).collect();
            let Some((&first, rest)) = hits.split_first() else { continue };
            let mut keep = vec![true; active.len()];
            let (mut pv, mut pp) = active[first].clone();
            keep[first] = false;
            for &j in rest {
                let (vj, pj) = &active[j];
                let (a, b) = (pv[c] as i128, vj[c] as i128);
                let (g, s, t) = ext_gcd(a, b);
                let (p, q) = (-(b / g), a / g);
                let new_p = lin(&pv, s as i64, vj, t as i64, m);
                let new_j = lin(&pv, p as i64, vj, q as i64, m);
                let pay_p = pp.combine(s as i64, pj, t as i64);
                let pay_j = pp.combine(p as i64, pj, q as i64);
                pv = new_p;
                pp = pay_p;
                debug_assert_eq!(new_j[c], 0);
                if new_j.iter().all(|&x| x == 0) {
                    keep[j] = false;
                    if !pay_j.is_trivial() {
                        scalars.push(pay_j);
                    }
                } else {
                    active[j] = (new_j, pay_j);
                }
            }
            let u = normalizing_unit(pv[c], m);
            if u != 1 {
                pv = scale(&pv, u, m);
                pp = pp.combine(u as i64, &pp, 0);
            }
            let sat_k = m / pv[c];
            let sat_v = scale(&pv, sat_k, m);
            let sat_p = pp.combine(sat_k as i64, &pp, 0);
            let mut next: Vec<(Vec<u64>, P)> =
                active.into_iter().zip(keep).filter_map(|(r, k)| k.then_some(r)).collect();
            if sat_v.iter().all(|&x| x == 0) {
                if !sat_p.is_trivial() {
                    scalars.push(sat_p);
                }
            } else {
                next.push((sat_v, sat_p));
            }
            active = next;
            rows.push(HowellRow { pivot: c, entries: pv, payload: pp });
        }
        debug_assert!(active.is_empty());
        Self { modulus, width, rows, scalars }
    }

    /// Reduces `v` (and its payload) against the pivots in place; returns
    /// whether `v` became zero, i.e. whether it lies in the row span.
    pub fn reduce(&self, v: &mut [u64], payload: &mut P) -> bool {
        let m = self.modulus;
        for row in &self.rows {
            let e = v[row.pivot] % m;
            if e == 0 {
                continue;
            }
            let q = e / row.entries[row.pivot];
            if q == 0 {
                continue;
            }
            let nq = m - q % m;
            for (x, &y) in v.iter_mut().zip(&row.entries) {
                if y != 0 {
                    *x = ((*x as u128 + nq as u128 * y as u128) % m as u128) as u64;
                }
            }
            *payload = payload.combine(1, &row.payload, -(q as i64));
        }
        v.iter().all(|&x| x % m == 0)
    }

    /// As [`Self::reduce`], ignoring payloads.
    pub fn reduce_vector(&self, v: &mut [u64]) -> bool {
        let m = self.modulus;
        for row in &self.rows {
            let e = v[row.pivot] % m;
            let q = e / row.entries[row.pivot];
            if q == 0 {
                continue;
            }
            let nq = m - q % m;
            for (x, &y) in v.iter_mut().zip(&row.entries) {
                if y != 0 {
                    *x = ((*x as u128 + nq as u128 * y as u128) % m as u128) as u64;
                }
            }
        }
        v.iter().all(|&x| x % m == 0)
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce_vector(&mut v.to_vec())
    }

    /// Number of elements in the row span, saturating.
    pub fn span_order(&self) -> u128 {
        self.rows
            .iter()
            .fold(1u128, |acc, r| acc.saturating_mul((self.modulus / r.entries[r.pivot]) as u128))
    }
}
