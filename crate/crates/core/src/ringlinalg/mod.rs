//! Exact linear algebra over ℤ and ℤ_m (m possibly composite).

pub mod arith;
mod howell;
mod intmat;
mod modular;

pub use howell::{Howell, HowellRow, RowPayload};
pub use intmat::{smith_normal_form, IntMatrix, SmithDecomposition};
pub use modular::{mod_smith, ModMatrix, ModSmith};

use num::{BigInt, Integer, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use arith::{lcm_all, mul_mod, neg_mod};

/// Finite abelian group `⊕ ℤ_{f_i}` with `f_1 | f_2 | …`, all `f_i ≥ 2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianGroupStructure {
    pub invariant_factors: Vec<u64>,
    /// Abstract generator `i` as coefficients on the input generators.
    pub generator_map: Vec<Vec<u64>>,
}

impl AbelianGroupStructure {
    pub fn order(&self) -> u128 {
        self.invariant_factors.iter().map(|&f| f as u128).product()
    }

    /// Primary decomposition: sorted prime powers.
    pub fn elementary_divisors(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for &f in &self.invariant_factors {
            let mut n = f;
            let mut p = 2;
            while n > 1 {
                if n % p == 0 {
                    let mut q = 1;
                    while n % p == 0 {
                        n /= p;
                        q *= p;
                    }
                    out.push(q);
                }
                p += 1;
            }
        }
        out.sort_unstable();
        out
    }

    /// Builds the canonical structure from elementary divisors (prime powers).
    pub fn from_elementary(divisors: &[u64]) -> Self {
        let mut by_prime: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
        for &q in divisors {
            let mut p = 2;
            while q % p != 0 {
                p += 1;
            }
            by_prime.entry(p).or_default().push(q);
        }
        let len = by_prime.values().map(Vec::len).max().unwrap_or(0);
        let mut factors = vec![1u64; len];
        for qs in by_prime.values_mut() {
            qs.sort_unstable_by(|a, b| b.cmp(a));
            for (i, q) in qs.iter().enumerate() {
                factors[len - 1 - i] *= q;
            }
        }
        Self { invariant_factors: factors, generator_map: Vec::new() }
    }

    pub fn is_isomorphic(&self, other: &Self) -> bool {
        self.invariant_factors == other.invariant_factors
    }
}

/// Generators of `{x ∈ ⊕ℤ_{moduli_j} : A·x ≡ 0 (mod lcm(moduli))}`.
pub fn kernel_mod(a: &IntMatrix, moduli: &[u64]) -> Result<Vec<Vec<u64>>> {
    let m = lcm_all(moduli.iter().copied());
    kernel_mod_with(a, moduli, m)
}

/// As [`kernel_mod`] with an explicit equation modulus; every column must
/// be well defined on its variable's residue class (`a_ij·m_j ≡ 0`).
pub fn kernel_mod_with(a: &IntMatrix, moduli: &[u64], modulus: u64) -> Result<Vec<Vec<u64>>> {
    if moduli.len() != a.cols {
        return Err(Error::DimensionMismatch(format!(
            "{} columns but {} moduli",
            a.cols,
            moduli.len()
        )));
    }
    if moduli.iter().any(|&x| x < 2) {
        return Err(Error::InvalidInput("moduli must be at least 2".into()));
    }
    let mbig = BigInt::from(modulus);
    let entry = |i: usize, j: usize| -> u64 { a.get(i, j).mod_floor(&mbig).to_u64().unwrap() };
    for j in 0..a.cols {
        for i in 0..a.rows {
            if mul_mod(entry(i, j), moduli[j] % modulus, modulus) != 0 {
                return Err(Error::InvalidInput(format!(
                    "column {j} is not well defined modulo {}",
                    moduli[j]
                )));
            }
        }
    }
    let (r, n) = (a.rows, a.cols);
    let rows: Vec<(Vec<u64>, ())> = (0..n)
        .map(|j| {
            let mut v = vec![0u64; r + n];
            for i in 0..r {
                v[i] = entry(i, j);
            }
            v[r + j] = 1 % modulus;
            (v, ())
        })
        .collect();
    Ok(kernel_from_rows(modulus, r, n, rows, moduli))
}

/// Kernel extraction shared by the dense and sparse front ends: rows are
/// `[A^T row j | e_j]` of width `r + n` over ℤ_modulus.
pub fn kernel_from_rows(
    modulus: u64,
    r: usize,
    n: usize,
    rows: Vec<(Vec<u64>, ())>,
    moduli: &[u64],
) -> Vec<Vec<u64>> {
    let h = Howell::new(modulus, r + n, rows);
    let mut out: Vec<Vec<u64>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for row in h.rows.iter().filter(|row| row.pivot >= r) {
        let v: Vec<u64> = (0..n).map(|j| row.entries[r + j] % moduli[j]).collect();
        if v.iter().any(|&x| x != 0) && seen.insert(v.clone()) {
            out.push(v);
        }
    }
    out
}

/// Quotient `⟨G⟩ / ⟨H⟩` of subgroups of `⊕ ℤ_{moduli}` with a coordinate map.
#[derive(Clone, Debug)]
pub struct QuotientMap {
    pub structure: AbelianGroupStructure,
    /// Representatives of the abstract generators as ambient vectors.
    pub generators: Vec<Vec<u64>>,
    modulus: u64,
    moduli: Vec<u64>,
    k: usize,
    howell: Howell<()>,
    /// for each kept factor, its column in `V`
    v_cols: Vec<Vec<u64>>,
}

impl QuotientMap {
    /// Class of an ambient vector in the quotient, or `None` if the vector
    /// is not in `⟨G⟩ + ⟨H⟩`.
    pub fn coordinates(&self, v: &[u64]) -> Option<Vec<u64>> {
        let n = self.moduli.len();
        let m = self.modulus;
        let mut w = vec![0u64; n + self.k];
        for j in 0..n {
            w[j] = mul_mod(v[j] % self.moduli[j], m / self.moduli[j], m);
        }
        self.howell.reduce(&mut w, &mut ());
        if w[..n].iter().any(|&x| x != 0) {
            return None;
        }
        let lambda: Vec<u64> = w[n..].iter().map(|&x| neg_mod(x, m)).collect();
        Some(
            self.v_cols
                .iter()
                .zip(&self.structure.invariant_factors)
                .map(|(col, &f)| {
                    let y = lambda.iter().zip(col).fold(0u64, |acc, (&l, &c)| (acc + mul_mod(l, c, m)) % m);
                    y % f
                })
                .collect(),
        )
    }

    pub fn order(&self) -> u128 {
        self.structure.order()
    }
}

fn embed(v: &[u64], moduli: &[u64], m: u64) -> Vec<u64> {
    v.iter().zip(moduli).map(|(&x, &mj)| mul_mod(x % mj, m / mj, m)).collect()
}

pub fn quotient_structure(
    group_gens: &[Vec<u64>],
    subgroup_gens: &[Vec<u64>],
    moduli: &[u64],
) -> Result<QuotientMap> {
    let n = moduli.len();
    if group_gens.iter().chain(subgroup_gens).any(|g| g.len() != n) {
        return Err(Error::DimensionMismatch("generator length differs from moduli".into()));
    }
    if moduli.iter().any(|&x| x < 2) {
        return Err(Error::InvalidInput("moduli must be at least 2".into()));
    }
    let m = lcm_all(moduli.iter().copied());
    let k = group_gens.len();

    let g_only = Howell::new(m, n, group_gens.iter().map(|g| (embed(g, moduli, m), ())).collect());
    if subgroup_gens.iter().any(|h| !g_only.contains(&embed(h, moduli, m))) {
        return Err(Error::SubgroupNotContained);
    }

    let mut rows: Vec<(Vec<u64>, ())> = Vec::with_capacity(k + subgroup_gens.len());
    for h in subgroup_gens {
        let mut v = embed(h, moduli, m);
        v.resize(n + k, 0);
        rows.push((v, ()));
    }
    for (j, g) in group_gens.iter().enumerate() {
        let mut v = embed(g, moduli, m);
        v.resize(n + k, 0);
        v[n + j] = 1 % m;
        rows.push((v, ()));
    }
    let howell = Howell::new(m, n + k, rows);
    let relations: Vec<Vec<u64>> =
        howell.rows.iter().filter(|r| r.pivot >= n).map(|r| r.entries[n..].to_vec()).collect();

    let (diag, v, v_inv) = if k == 0 {
        (Vec::new(), ModMatrix::identity(m, 0), ModMatrix::identity(m, 0))
    } else {
        let rel = if relations.is_empty() {
            ModMatrix::zeros(m, 1, k)
        } else {
            ModMatrix::from_rows(m, k, &relations)
        };
        let s = mod_smith(&rel);
        // columns beyond the relation count are free
        let mut diag = s.diagonal();
        diag.resize(k, m);
        (diag, s.v, s.v_inv)
    };

    let mut factors = Vec::new();
    let mut generator_map = Vec::new();
    let mut generators = Vec::new();
    let mut v_cols = Vec::new();
    for (i, &f) in diag.iter().enumerate() {
        if f < 2 {
            continue;
        }
        let coeffs: Vec<u64> = (0..k).map(|j| v_inv.get(i, j)).collect();
        let mut amb = vec![0u64; n];
        for (j, &c) in coeffs.iter().enumerate() {
            for t in 0..n {
                amb[t] = (amb[t] + mul_mod(c, group_gens[j][t], moduli[t])) % moduli[t];
            }
        }
        factors.push(f);
        generator_map.push(coeffs);
        generators.push(amb);
        v_cols.push((0..k).map(|j| v.get(j, i)).collect());
    }
    Ok(QuotientMap {
        structure: AbelianGroupStructure { invariant_factors: factors, generator_map },
        generators,
        modulus: m,
        moduli: moduli.to_vec(),
        k,
        howell,
        v_cols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn span(gens: &[Vec<u64>], moduli: &[u64]) -> HashSet<Vec<u64>> {
        let mut set: HashSet<Vec<u64>> = HashSet::new();
        set.insert(vec![0; moduli.len()]);
        loop {
            let mut grown = set.clone();
            for v in &set {
                for g in gens {
                    grown.insert(v.iter().zip(g).zip(moduli).map(|((a, b), m)| (a + b) % m).collect());
                }
            }
            if grown.len() == set.len() {
                return set;
            }
            set = grown;
        }
    }

    fn all_vectors(moduli: &[u64]) -> Vec<Vec<u64>> {
        let mut out = vec![vec![]];
        for &m in moduli {
            out = out
                .into_iter()
                .flat_map(|v| (0..m).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                }))
                .collect();
        }
        out
    }

    fn check_kernel(rows: &[Vec<i64>], moduli: &[u64]) -> Vec<Vec<u64>> {
        let a = IntMatrix::from_rows(rows).unwrap();
        let ker = kernel_mod(&a, moduli).unwrap();
        let m = lcm_all(moduli.iter().copied()) as i64;
        let sat = |x: &Vec<u64>| {
            rows.iter().all(|r| r.iter().zip(x).map(|(a, b)| a * *b as i64).sum::<i64>().rem_euclid(m) == 0)
        };
        for v in &ker {
            assert!(sat(v));
        }
        let got = span(&ker, moduli);
        let want: HashSet<Vec<u64>> = all_vectors(moduli).into_iter().filter(sat).collect();
        assert_eq!(got, want);
        ker
    }

    #[test]
    fn parity_check() {
        let ker = check_kernel(&[vec![1, 1]], &[2, 2]);
        assert_eq!(ker, vec![vec![1, 1]]);
    }

    #[test]
    fn zero_matrix_gives_everything() {
        check_kernel(&[vec![0]], &[5]);
    }

    #[test]
    fn two_mod_four() {
        let ker = check_kernel(&[vec![2]], &[4]);
        assert_eq!(span(&ker, &[4]).len(), 2);
        assert!(ker.contains(&vec![2]));
    }

    #[test]
    fn mixed_moduli() {
        // x ∈ ℤ_2 embedded with weight 3, y ∈ ℤ_3 with weight 2, over ℤ_6
        check_kernel(&[vec![3, 2]], &[2, 3]);
        check_kernel(&[vec![3, 4], vec![0, 2]], &[2, 3]);
    }

    #[test]
    fn mismatch_errors() {
        let a = IntMatrix::from_rows(&[vec![1, 1]]).unwrap();
        assert!(kernel_mod(&a, &[2]).is_err());
        assert!(kernel_mod(&a, &[2, 1]).is_err());
    }

    fn check_quotient(g: &[Vec<u64>], h: &[Vec<u64>], moduli: &[u64]) -> QuotientMap {
        let q = quotient_structure(g, h, moduli).unwrap();
        let gs = span(g, moduli);
        let hs = span(h, moduli);
        assert_eq!(q.order() * hs.len() as u128, gs.len() as u128);
        for w in q.structure.invariant_factors.windows(2) {
            assert_eq!(w[1] % w[0], 0);
        }
        // coordinates are a homomorphism onto the abstract group whose
        // kernel is exactly H
        for v in &gs {
            let c = q.coordinates(v).expect("in group");
            assert_eq!(c.iter().all(|&x| x == 0), hs.contains(v), "v={v:?}");
        }
        for (i, gen) in q.generators.iter().enumerate() {
            let c = q.coordinates(gen).unwrap();
            for (j, &x) in c.iter().enumerate() {
                assert_eq!(x, u64::from(i == j));
            }
        }
        q
    }

    #[test]
    fn quotient_examples() {
        let q = check_quotient(&[vec![1, 0], vec![0, 1]], &[vec![1, 1]], &[2, 2]);
        assert_eq!(q.structure.invariant_factors, vec![2]);
        let q = check_quotient(&[vec![1, 0], vec![0, 1]], &[vec![1, 0], vec![0, 1]], &[2, 2]);
        assert!(q.structure.invariant_factors.is_empty());
        let q = check_quotient(&[vec![1]], &[vec![2]], &[4]);
        assert_eq!(q.structure.invariant_factors, vec![2]);
        let q = check_quotient(&[vec![1, 1]], &[], &[2, 3]);
        assert_eq!(q.structure.invariant_factors, vec![6]);
        let q = check_quotient(&[vec![2, 0, 1], vec![0, 3, 1], vec![1, 1, 0]], &[vec![2, 3, 0]], &[4, 6, 2]);
        assert!(q.order() > 0);
    }

    #[test]
    fn subgroup_outside_rejected() {
        assert!(matches!(
            quotient_structure(&[vec![2]], &[vec![1]], &[4]),
            Err(Error::SubgroupNotContained)
        ));
    }

    #[test]
    fn elementary_roundtrip() {
        let s = AbelianGroupStructure { invariant_factors: vec![2, 6, 12], generator_map: vec![] };
        assert_eq!(s.elementary_divisors(), vec![2, 2, 3, 3, 4]);
        assert_eq!(AbelianGroupStructure::from_elementary(&s.elementary_divisors()).invariant_factors, vec![2, 6, 12]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn kernel_is_complete(m in 2u64..9, rows in 1usize..3, data in proptest::collection::vec(-8i64..9, 6)) {
                let n = 3;
                let a: Vec<Vec<i64>> = (0..rows).map(|i| data[i * n..(i + 1) * n].to_vec()).collect();
                check_kernel(&a, &vec![m; n]);
            }

            #[test]
            fn quotient_order_law(m in 2u64..9, data in proptest::collection::vec(0u64..16, 12), hsel in proptest::collection::vec(0u64..16, 6)) {
                let moduli = vec![m; 3];
                let g: Vec<Vec<u64>> = data.chunks(3).map(|c| c.iter().map(|x| x % m).collect()).collect();
                // H drawn from the span of G
                let h: Vec<Vec<u64>> = hsel.chunks(3).map(|c| {
                    (0..3).map(|t| (0..3).map(|j| c[j] * g[j][t]).sum::<u64>() % m).collect()
                }).collect();
                check_quotient(&g, &h, &moduli);
            }
        }
    }
}
