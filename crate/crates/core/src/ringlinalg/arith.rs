//! Scalar arithmetic in ℤ_m for arbitrary (composite) m.

use num::integer::Integer;

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

pub fn lcm_all(xs: impl IntoIterator<Item = u64>) -> u64 {
    xs.into_iter().fold(1, lcm)
}

/// Extended gcd on signed integers: returns (g, s, t) with s·a + t·b = g ≥ 0.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

#[inline]
pub fn reduce(a: i128, m: u64) -> u64 {
    a.rem_euclid(m as i128) as u64
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

#[inline]
pub fn neg_mod(a: u64, m: u64) -> u64 {
    if a.is_multiple_of(m) {
        0
    } else {
        m - a % m
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (g, s, _) = ext_gcd(a as i128, m as i128);
    (g == 1).then(|| reduce(s, m))
}

/// A unit `u` of ℤ_m with `a·u ≡ gcd(a, m)`.
pub fn normalizing_unit(a: u64, m: u64) -> u64 {
    let a = a % m;
    if a == 0 || m == 1 {
        return 1;
    }
    let g = gcd(a, m);
    let mp = m / g;
    let u0 = inv_mod((a / g) % mp, mp).expect("coprime after dividing out gcd");
    let mut u = u0;
    while gcd(u, m) != 1 {
        u += mp;
    }
    u % m
}

/// Solve `d·y ≡ c (mod m)`; returns one solution when it exists.
pub fn solve_linear(d: u64, c: u64, m: u64) -> Option<u64> {
    let (d, c) = (d % m, c % m);
    let g = gcd(d, m);
    if c % g != 0 {
        return None;
    }
    let mg = m / g;
    if mg == 1 {
        return Some(0);
    }
    let inv = inv_mod((d / g) % mg, mg)?;
    Some(mul_mod((c / g) % mg, inv, mg))
}

/// Euler's totient.
pub fn totient(n: u64) -> u64 {
    let mut n0 = n;
    let mut result = n;
    let mut p = 2;
    while p * p <= n0 {
        if n0.is_multiple_of(p) {
            while n0.is_multiple_of(p) {
                n0 /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n0 > 1 {
        result -= result / n0;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ext_gcd_bezout() {
        for a in -20i128..20 {
            for b in -20i128..20 {
                let (g, s, t) = ext_gcd(a, b);
                assert_eq!(s * a + t * b, g);
                assert_eq!(g as u64, gcd(a.unsigned_abs() as u64, b.unsigned_abs() as u64));
            }
        }
    }

    #[test]
    fn normalizing_unit_composite() {
        for m in 2..40u64 {
            for a in 1..m {
                let u = normalizing_unit(a, m);
                assert_eq!(gcd(u, m), 1);
                assert_eq!(mul_mod(a, u, m), gcd(a, m));
            }
        }
    }

    #[test]
    fn linear_solutions_match_enumeration() {
        for m in 2..20u64 {
            for d in 0..m {
                for c in 0..m {
                    let brute = (0..m).find(|y| mul_mod(d, *y, m) == c);
                    let got = solve_linear(d, c, m);
                    assert_eq!(brute.is_some(), got.is_some());
                    if let Some(y) = got {
                        assert_eq!(mul_mod(d, y, m), c);
                    }
                }
            }
        }
    }

    #[test]
    fn totient_small() {
        let want = [1, 1, 2, 2, 4, 2, 6, 4, 6, 4, 10, 4];
        for (i, w) in want.iter().enumerate() {
            assert_eq!(totient(i as u64 + 1), *w);
        }
    }
}
