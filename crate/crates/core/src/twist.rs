//! Twist product and pairing, the S̃ matrix, Verlinde fusion and blind
//! reconstruction of the anyon group.

use std::collections::HashMap;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use num::complex::Complex;
use serde::{Deserialize, Serialize};

use crate::commutant::LogicalAlgebra;
use crate::cyclo::{Cyclo, CycloRecord};
use crate::error::{Error, Result};
use crate::lattice::{AnnulusPair, Region};
use crate::model::StabilizerState;
use crate::ringlinalg::{smith_normal_form, AbelianGroupStructure, IntMatrix};
use crate::weyl::{Phase, WeylOp, WeylSum};

fn check_support(op: &WeylOp, region: &Region, side: &str) -> Result<()> {
    match op.support().into_iter().find(|&s| !region.contains(s)) {
        Some(s) => Err(Error::SupportViolation(format!("{side} operator acts on site {s} outside its annulus"))),
        None => Ok(()),
    }
}

/// `p ∞ q` for single Weyl operators: `p_M q_M ⊗ q_M′ p_M′`.
pub fn twist_op(p: &WeylOp, q: &WeylOp, pair: &AnnulusPair) -> Result<WeylOp> {
    check_support(p, &pair.left_region, "left")?;
    check_support(q, &pair.right_region, "right")?;
    let (pm, pr) = p.split(&pair.m_prime);
    let (qm, qr) = q.split(&pair.m_prime);
    pr.compose(&qr)?.compose(&qm)?.compose(&pm)
}

/// Phase `c` with `p ∞ q = e^{2πic}·p·q`.
pub fn twist_phase(p: &WeylOp, q: &WeylOp, pair: &AnnulusPair) -> Phase {
    // q_M′ p_M′ = e^{2πi c(q, p)} p_M′ q_M′
    q.commutation_on(p, pair.m_prime.sites().iter().copied())
}

/// Bilinear extension of [`twist_op`].
pub fn twist_product(p: &WeylSum, q: &WeylSum, pair: &AnnulusPair) -> Result<WeylSum> {
    let mut out = WeylSum::zero(p.system());
    for (a, po) in p.terms() {
        for (b, qo) in q.terms() {
            out.add_term(a * b, &twist_op(po, qo, pair)?);
        }
    }
    Ok(out)
}

/// `⟨ψ| P ∞ Q |ψ⟩`, exact.
pub fn twist_pairing(state: &StabilizerState, p: &WeylSum, q: &WeylSum, pair: &AnnulusPair) -> Result<Cyclo> {
    let mut acc = Cyclo::zero();
    for (a, po) in p.terms() {
        for (b, qo) in q.terms() {
            let e = state.expectation(&twist_op(po, qo, pair)?);
            if !e.is_zero() {
                acc = &acc + &(&(a * b) * &e);
            }
        }
    }
    Ok(acc)
}

/// Matrix of twist pairings of fundamental projectors.
#[derive(Clone, Debug, PartialEq)]
pub struct STilde {
    pub left_labels: Vec<Vec<u64>>,
    pub right_labels: Vec<Vec<u64>>,
    pub left_vacuum: usize,
    pub right_vacuum: usize,
    pub entries: Vec<Vec<Cyclo>>,
    pub provenance: Vec<(String, String)>,
}

/// `T_{gh} = ⟨U_g ∞ V_h⟩` for all class pairs.
fn twist_table(state: &StabilizerState, al: &LogicalAlgebra, ar: &LogicalAlgebra, pair: &AnnulusPair) -> Result<Vec<Vec<Cyclo>>> {
    let gl = al.elements();
    let gr = ar.elements();
    let ul: Vec<WeylOp> = gl.iter().map(|g| al.element_op(g)).collect();
    let ur: Vec<WeylOp> = gr.iter().map(|g| ar.element_op(g)).collect();
    for u in &ul {
        check_support(u, &pair.left_region, "left")?;
    }
    for u in &ur {
        check_support(u, &pair.right_region, "right")?;
    }
    // eigenvalue shortcut: when both factors stabilize ψ up to phase,
    // ⟨U V⟩ = λ_U λ_V
    let eig = |u: &WeylOp| state.span().residual_phase(u);
    let el: Vec<Option<Phase>> = ul.iter().map(eig).collect();
    let er: Vec<Option<Phase>> = ur.iter().map(eig).collect();
    let mut t = Vec::with_capacity(ul.len());
    for (u, lu) in ul.iter().zip(&el) {
        let mut row = Vec::with_capacity(ur.len());
        for (v, lv) in ur.iter().zip(&er) {
            let c = twist_phase(u, v, pair);
            let val = match (lu, lv) {
                (Some(a), Some(b)) => c.add(*a).add(*b).to_cyclo(),
                _ => &c.to_cyclo() * &state.expectation(&(u * v)),
            };
            row.push(val);
        }
        t.push(row);
    }
    Ok(t)
}

/// `S̃_{ab} = (1/|Q_L||Q_R|) Σ_{g,h} χ_a(g)* χ_b(h)* T_{gh}`.
pub fn stilde_matrix(state: &StabilizerState, al: &LogicalAlgebra, ar: &LogicalAlgebra, pair: &AnnulusPair) -> Result<STilde> {
    let t = twist_table(state, al, ar, pair)?;
    let gl = al.elements();
    let gr = ar.elements();
    let conj_chars = |alg: &LogicalAlgebra, gs: &[Vec<u64>]| -> Vec<Vec<Cyclo>> {
        alg.characters
            .iter()
            .map(|a| gs.iter().map(|g| alg.character_phase(a, g).neg().to_cyclo()).collect())
            .collect()
    };
    let cl = conj_chars(al, &gl);
    let cr = conj_chars(ar, &gr);
    // separable transform: first over h, then over g
    let m: Vec<Vec<Cyclo>> = t
        .iter()
        .map(|row| {
            cr.iter()
                .map(|chi| row.iter().zip(chi).fold(Cyclo::zero(), |acc, (x, c)| &acc + &(x * c)))
                .collect()
        })
        .collect();
    let norm = BigRational::new(BigInt::one(), BigInt::from(al.order() * ar.order()));
    let entries: Vec<Vec<Cyclo>> = cl
        .iter()
        .map(|chi| {
            (0..cr.len())
                .map(|b| {
                    chi.iter().zip(&m).fold(Cyclo::zero(), |acc, (c, mrow)| &acc + &(c * &mrow[b])).scale(&norm)
                })
                .collect()
        })
        .collect();
    let mut provenance = vec![("separation".to_string(), format!("{}", pair.separation))];
    if let Some(l) = pair.lattice_size {
        provenance.push(("lattice_size".into(), l.to_string()));
    }
    if let Some(a) = &pair.left {
        provenance.push(("r_ann".into(), a.r_ann.to_string()));
        provenance.push(("t".into(), a.t.to_string()));
    }
    provenance.push(("cut".into(), pair.cut.to_string()));
    Ok(STilde {
        left_labels: al.characters.clone(),
        right_labels: ar.characters.clone(),
        left_vacuum: al.vacuum,
        right_vacuum: ar.vacuum,
        entries,
        provenance,
    })
}

/// Checks `⟨(U n) ∞ V⟩ = ⟨U ∞ V⟩` and `⟨U ∞ (V n)⟩ = ⟨U ∞ V⟩` for every
/// null generator `n` and every pair of representatives (identity included).
pub fn check_representative_independence(
    state: &StabilizerState,
    al: &LogicalAlgebra,
    ar: &LogicalAlgebra,
    pair: &AnnulusPair,
) -> Result<bool> {
    let pairing = |u: &WeylOp, v: &WeylOp| -> Result<Cyclo> { Ok(state.expectation(&twist_op(u, v, pair)?)) };
    let with_id = |alg: &LogicalAlgebra| {
        let mut v = vec![WeylOp::identity(alg.system())];
        v.extend(alg.representatives.iter().cloned());
        v
    };
    let (ls, rs) = (with_id(al), with_id(ar));
    for u in &ls {
        for v in &rs {
            let base = pairing(u, v)?;
            for n in &al.null_generators {
                if pairing(&(u * n), v)? != base {
                    return Ok(false);
                }
            }
            for n in &ar.null_generators {
                if pairing(u, &(v * n))? != base {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

impl STilde {
    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn entry(&self, a: usize, b: usize) -> &Cyclo {
        &self.entries[a][b]
    }

    /// Row/column relabelling: new row `i` is old row `rows[i]`.
    pub fn permuted(&self, rows: &[usize], cols: &[usize]) -> Self {
        let pos = |p: &[usize], v: usize| p.iter().position(|&x| x == v).expect("permutation");
        Self {
            left_labels: rows.iter().map(|&i| self.left_labels[i].clone()).collect(),
            right_labels: cols.iter().map(|&j| self.right_labels[j].clone()).collect(),
            left_vacuum: pos(rows, self.left_vacuum),
            right_vacuum: pos(cols, self.right_vacuum),
            entries: rows.iter().map(|&i| cols.iter().map(|&j| self.entries[i][j].clone()).collect()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Kronecker product, for stacked models.
    pub fn tensor(&self, o: &Self) -> Self {
        let pairs = |a: &[Vec<u64>], b: &[Vec<u64>]| -> Vec<Vec<u64>> {
            a.iter().flat_map(|x| b.iter().map(move |y| [x.clone(), y.clone()].concat())).collect()
        };
        let mut entries = Vec::new();
        for ra in &self.entries {
            for rb in &o.entries {
                entries.push(ra.iter().flat_map(|x| rb.iter().map(move |y| x * y)).collect());
            }
        }
        Self {
            left_labels: pairs(&self.left_labels, &o.left_labels),
            right_labels: pairs(&self.right_labels, &o.right_labels),
            left_vacuum: self.left_vacuum * o.rows() + o.left_vacuum,
            right_vacuum: self.right_vacuum * o.cols() + o.right_vacuum,
            entries,
            provenance: Vec::new(),
        }
    }

    pub fn to_complex(&self) -> Vec<Vec<Complex<f64>>> {
        self.entries.iter().map(|r| r.iter().map(Cyclo::to_complex).collect()).collect()
    }

    /// `S_{ab} = 𝒟 S̃_{ab} / (d_a d_b)` with `d_a`, `𝒟` read from the vacuum row and column.
    pub fn s_view(&self) -> Vec<Vec<Complex<f64>>> {
        let c = self.to_complex();
        let s11 = c[self.left_vacuum][self.right_vacuum].re;
        let total = (1.0 / s11).sqrt();
        let da: Vec<f64> = (0..self.rows()).map(|a| (c[a][self.right_vacuum].re / s11).sqrt()).collect();
        let db: Vec<f64> = (0..self.cols()).map(|b| (c[self.left_vacuum][b].re / s11).sqrt()).collect();
        c.iter()
            .enumerate()
            .map(|(a, row)| row.iter().enumerate().map(|(b, x)| x * total / (da[a] * db[b])).collect())
            .collect()
    }

    pub fn to_record(&self) -> STildeRecord {
        STildeRecord {
            left_labels: self.left_labels.clone(),
            right_labels: self.right_labels.clone(),
            left_vacuum: self.left_vacuum,
            right_vacuum: self.right_vacuum,
            entries: self.entries.iter().map(|r| r.iter().map(Cyclo::to_record).collect()).collect(),
            provenance: self.provenance.iter().cloned().collect(),
        }
    }

    pub fn from_record(r: &STildeRecord) -> Result<Self> {
        let (n, m) = (r.left_labels.len(), r.right_labels.len());
        if r.entries.len() != n || r.entries.iter().any(|row| row.len() != m) || r.left_vacuum >= n.max(1) || r.right_vacuum >= m.max(1) {
            return Err(Error::DimensionMismatch(format!("S̃ record with {n}×{m} labels has inconsistent entries or vacua")));
        }
        Ok(Self {
            left_labels: r.left_labels.clone(),
            right_labels: r.right_labels.clone(),
            left_vacuum: r.left_vacuum,
            right_vacuum: r.right_vacuum,
            entries: r.entries.iter().map(|row| row.iter().map(Cyclo::from_record).collect()).collect(),
            provenance: r.provenance.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct STildeRecord {
    pub left_labels: Vec<Vec<u64>>,
    pub right_labels: Vec<Vec<u64>>,
    pub left_vacuum: usize,
    pub right_vacuum: usize,
    pub entries: Vec<Vec<CycloRecord>>,
    pub provenance: std::collections::BTreeMap<String, String>,
}

/// `N[c][a][b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionTensor {
    pub n: Vec<Vec<Vec<BigRational>>>,
}

impl FusionTensor {
    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    /// The unique `c` with `N^c_{ab} = 1`.
    pub fn product(&self, a: usize, b: usize) -> Option<usize> {
        (0..self.n.len()).find(|&c| self.n[c][a][b].is_one())
    }
}

/// Entry as `q·ζ_n^k` with a shared modulus `q`, when every entry has that shape.
fn monomial_table(s: &STilde) -> Option<(BigRational, u64, Vec<Vec<u64>>)> {
    let mono: Vec<Vec<(BigRational, u64, u64)>> =
        s.entries.iter().map(|r| r.iter().map(Cyclo::as_monomial).collect::<Option<_>>()).collect::<Option<_>>()?;
    let q = mono[0][0].0.abs();
    let mut n = 2u64;
    for (x, _, o) in mono.iter().flatten() {
        if x.abs() != q || q.is_zero() {
            return None;
        }
        n = crate::ringlinalg::arith::lcm(n, *o);
    }
    let table = mono
        .iter()
        .map(|r| {
            r.iter()
                .map(|(x, k, o)| (k * (n / o) + if x.is_negative() { n / 2 } else { 0 }) % n)
                .collect()
        })
        .collect();
    Some((q, n, table))
}

/// `N^c_{ab} = |Q|² Σ_p S̃_{ap} S̃_{bp} S̃*_{cp}`.
pub fn verlinde_fusion(s: &STilde) -> Result<FusionTensor> {
    if !s.is_square() || s.rows() == 0 {
        return Err(Error::DimensionMismatch(format!("S̃ is {}×{}", s.rows(), s.cols())));
    }
    let q = s.rows();
    let norm = BigRational::from_integer(BigInt::from((q * q) as u64));
    let mut n = vec![vec![vec![BigRational::zero(); q]; q]; q];
    if let Some((m, ord, k)) = monomial_table(s) {
        let scale = &norm * &m * &m * &m;
        let mut counts = vec![0i64; ord as usize];
        for c in 0..q {
            for a in 0..q {
                for b in 0..q {
                    counts.iter_mut().for_each(|x| *x = 0);
                    for p in 0..q {
                        let e = (k[a][p] + k[b][p] + ord - k[c][p]) % ord;
                        counts[e as usize] += 1;
                    }
                    let v = Cyclo::from_counts(ord, &counts, 1).scale(&scale);
                    n[c][a][b] = v
                        .as_rational()
                        .ok_or_else(|| Error::NonGroupLikeFusion(format!("N^{c}_{{{a}{b}}} is not rational")))?;
                }
            }
        }
    } else {
        let conj: Vec<Vec<Cyclo>> = s.entries.iter().map(|r| r.iter().map(Cyclo::conj).collect()).collect();
        for c in 0..q {
            for a in 0..q {
                for b in 0..q {
                    let mut acc = Cyclo::zero();
                    for p in 0..q {
                        acc = &acc + &(&(&s.entries[a][p] * &s.entries[b][p]) * &conj[c][p]);
                    }
                    n[c][a][b] = acc
                        .scale(&norm)
                        .as_rational()
                        .ok_or_else(|| Error::NonGroupLikeFusion(format!("N^{c}_{{{a}{b}}} is not rational")))?;
                }
            }
        }
    }
    for a in 0..q {
        for b in 0..q {
            let mut ones = 0;
            for c in 0..q {
                let v = &n[c][a][b];
                if v.is_one() {
                    ones += 1;
                } else if !v.is_zero() {
                    return Err(Error::NonGroupLikeFusion(format!("N^{c}_{{{a}{b}}} = {v}")));
                }
            }
            if ones != 1 {
                return Err(Error::NonGroupLikeFusion(format!("{ones} fusion channels for ({a}, {b})")));
            }
        }
    }
    Ok(FusionTensor { n })
}

/// Group structure of the label set under fusion, from its Cayley table.
pub fn fusion_group(f: &FusionTensor) -> Result<AbelianGroupStructure> {
    let q = f.len();
    let table: Vec<Vec<usize>> = (0..q)
        .map(|a| (0..q).map(|b| f.product(a, b).ok_or_else(|| Error::NonGroupLikeFusion("missing product".into()))).collect())
        .collect::<Result<_>>()?;
    let unit = (0..q)
        .find(|&e| (0..q).all(|a| table[e][a] == a && table[a][e] == a))
        .ok_or_else(|| Error::NonGroupLikeFusion("no unit label".into()))?;
    for a in 0..q {
        for b in 0..q {
            if table[a][b] != table[b][a] {
                return Err(Error::NonGroupLikeFusion("fusion is not commutative".into()));
            }
            for c in 0..q {
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return Err(Error::NonGroupLikeFusion("fusion is not associative".into()));
                }
            }
        }
        if !(0..q).any(|b| table[a][b] == unit) {
            return Err(Error::NonGroupLikeFusion(format!("label {a} has no inverse")));
        }
    }
    // presentation: generators e_a, relations e_a + e_b − e_{ab} and e_unit
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut unit_row = vec![0i64; q];
    unit_row[unit] = 1;
    rows.push(unit_row);
    for a in 0..q {
        for b in a..q {
            let mut r = vec![0i64; q];
            r[a] += 1;
            r[b] += 1;
            r[table[a][b]] -= 1;
            rows.push(r);
        }
    }
    let snf = smith_normal_form(&IntMatrix::from_rows(&rows)?)?;
    let mut diag: Vec<u64> = snf.diagonal().iter().filter_map(|x| x.abs().to_u64()).collect();
    diag.resize(q, 0);
    if diag.contains(&0) {
        return Err(Error::NonGroupLikeFusion("label group is infinite".into()));
    }
    let factors: Vec<u64> = diag.into_iter().filter(|&x| x > 1).collect();
    let g = AbelianGroupStructure { invariant_factors: factors, generator_map: Vec::new() };
    if g.order() != q as u128 {
        return Err(Error::NonGroupLikeFusion(format!("label group has order {} for {q} labels", g.order())));
    }
    Ok(AbelianGroupStructure::from_elementary(&g.elementary_divisors()))
}

/// Recovers `G` from an unsorted S̃ whose labels form `G × G`.
pub fn reconstruct_group(s: &STilde) -> Result<AbelianGroupStructure> {
    let gg = fusion_group(&verlinde_fusion(s)?)?;
    let mut counts: std::collections::BTreeMap<u64, usize> = Default::default();
    for q in gg.elementary_divisors() {
        *counts.entry(q).or_default() += 1;
    }
    let mut half = Vec::new();
    for (q, k) in counts {
        if k % 2 != 0 {
            return Err(Error::NonGroupLikeFusion(format!("prime power {q} occurs {k} times, not a square group")));
        }
        half.extend(std::iter::repeat_n(q, k / 2));
    }
    Ok(AbelianGroupStructure::from_elementary(&half))
}

/// Exact equality up to row and column permutations fixing the vacuum.
pub fn stilde_equivalent(s1: &STilde, s2: &STilde) -> bool {
    if s1.rows() != s2.rows() || s1.cols() != s2.cols() {
        return false;
    }
    if let (Ok(g1), Ok(g2)) = (reconstruct_group(s1), reconstruct_group(s2)) {
        if !g1.is_isomorphic(&g2) {
            return false;
        }
    }
    // intern values so comparisons are integer comparisons
    let mut values: Vec<Cyclo> = Vec::new();
    let mut intern = |m: &STilde| -> Vec<Vec<usize>> {
        m.entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| match values.iter().position(|v| v == x) {
                        Some(i) => i,
                        None => {
                            values.push(x.clone());
                            values.len() - 1
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let a = intern(s1);
    let b = intern(s2);
    let sorted = |r: &Vec<usize>| {
        let mut r = r.clone();
        r.sort_unstable();
        r
    };
    let ra: Vec<Vec<usize>> = a.iter().map(sorted).collect();
    let rb: Vec<Vec<usize>> = b.iter().map(sorted).collect();
    let mut order: Vec<usize> = (0..a.len()).filter(|&i| i != s1.left_vacuum).collect();
    order.insert(0, s1.left_vacuum);
    let mut used = vec![false; b.len()];
    let mut assigned: Vec<(usize, usize)> = Vec::new();
    search(&a, &b, &ra, &rb, &order, &mut used, &mut assigned, (s1.right_vacuum, s2.right_vacuum), s2.left_vacuum)
}

/// Column classes of `m` restricted to the assigned rows, as signature keys.
fn column_signatures(m: &[Vec<usize>], rows: &[usize], pinned: usize) -> Vec<Vec<usize>> {
    (0..m[0].len())
        .map(|j| {
            let mut sig: Vec<usize> = rows.iter().map(|&i| m[i][j]).collect();
            sig.push(usize::from(j == pinned));
            sig
        })
        .collect()
}

fn columns_compatible(a: &[Vec<usize>], b: &[Vec<usize>], assigned: &[(usize, usize)], vac: (usize, usize)) -> bool {
    let ra: Vec<usize> = assigned.iter().map(|p| p.0).collect();
    let rb: Vec<usize> = assigned.iter().map(|p| p.1).collect();
    let mut ca: HashMap<Vec<usize>, i64> = HashMap::new();
    for s in column_signatures(a, &ra, vac.0) {
        *ca.entry(s).or_default() += 1;
    }
    for s in column_signatures(b, &rb, vac.1) {
        *ca.entry(s).or_default() -= 1;
    }
    ca.values().all(|&x| x == 0)
}

#[allow(clippy::too_many_arguments)]
fn search(
    a: &[Vec<usize>],
    b: &[Vec<usize>],
    ra: &[Vec<usize>],
    rb: &[Vec<usize>],
    order: &[usize],
    used: &mut [bool],
    assigned: &mut Vec<(usize, usize)>,
    vac: (usize, usize),
    left_vac2: usize,
) -> bool {
    let k = assigned.len();
    if k == order.len() {
        return true;
    }
    let i = order[k];
    for j in 0..b.len() {
        if used[j] || ra[i] != rb[j] || (k == 0 && j != left_vac2) {
            continue;
        }
        assigned.push((i, j));
        if columns_compatible(a, b, assigned, vac) {
            used[j] = true;
            if search(a, b, ra, rb, order, used, assigned, vac, left_vac2) {
                return true;
            }
            used[j] = false;
        }
        assigned.pop();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutant::logical_quotient;
    use crate::lattice::{build_torus, make_annulus_pair};
    use crate::model::{build_bell_pair, build_toric_code, StabilizerModel};

    /// `(1/d²) ω^{a_z a'_x + a_x a'_z}` for labels `(a_x, a_z)`.
    fn formula(d: u64, a: (u64, u64), b: (u64, u64)) -> Cyclo {
        Cyclo::root_of_unity(((a.1 * b.0 + a.0 * b.1) % d) as i64, d).scale(&BigRational::new(1.into(), ((d * d) as i64).into()))
    }

    fn formula_matrix(d: u64) -> STilde {
        let labels: Vec<Vec<u64>> = (0..d).flat_map(|x| (0..d).map(move |z| vec![x, z])).collect();
        let entries = labels
            .iter()
            .map(|a| labels.iter().map(|b| formula(d, (a[0], a[1]), (b[0], b[1]))).collect())
            .collect();
        STilde { left_labels: labels.clone(), right_labels: labels, left_vacuum: 0, right_vacuum: 0, entries, provenance: vec![] }
    }

    fn toric_stilde(l: usize, d: u32, r: u32, t: u32, sep: u32) -> (StabilizerModel, STilde) {
        let lat = build_torus(l).unwrap();
        let m = build_toric_code(&lat, d).unwrap();
        let pair = make_annulus_pair(&lat, r, t, sep).unwrap();
        let al = logical_quotient(&m, &pair.left.unwrap()).unwrap();
        let ar = logical_quotient(&m, &pair.right.unwrap()).unwrap();
        let s = stilde_matrix(&m.state().unwrap(), &al, &ar, &pair).unwrap();
        (m, s)
    }

    #[test]
    fn toric_stilde_matches_formula_up_to_relabelling() {
        for d in [2u64, 3] {
            let (_, s) = toric_stilde(14, d as u32, 3, 1, 3);
            assert!(stilde_equivalent(&s, &formula_matrix(d)), "d = {d}");
            let q = BigRational::new(1.into(), ((d * d) as i64).into());
            for a in 0..s.rows() {
                assert_eq!(s.entries[0][a], Cyclo::rational(q.clone()));
                assert_eq!(s.entries[a][0], Cyclo::rational(q.clone()));
            }
        }
    }

    #[test]
    fn representative_independence_and_cut() {
        let lat = build_torus(14).unwrap();
        let m = build_toric_code(&lat, 2).unwrap();
        let pair = make_annulus_pair(&lat, 3, 1, 3).unwrap();
        let al = logical_quotient(&m, &pair.left.unwrap()).unwrap();
        let ar = logical_quotient(&m, &pair.right.unwrap()).unwrap();
        let st = m.state().unwrap();
        assert!(check_representative_independence(&st, &al, &ar, &pair).unwrap());
        let s0 = stilde_matrix(&st, &al, &ar, &pair).unwrap();
        for cut in pair.admissible_cuts(lat.layout()) {
            let p2 = pair.with_cut(lat.layout(), cut).unwrap();
            assert_eq!(stilde_matrix(&st, &al, &ar, &p2).unwrap().entries, s0.entries, "cut {cut}");
        }
    }

    #[test]
    fn twist_with_identity_is_plain_product() {
        let lat = build_torus(14).unwrap();
        let m = build_toric_code(&lat, 3).unwrap();
        let pair = make_annulus_pair(&lat, 3, 1, 3).unwrap();
        let al = logical_quotient(&m, &pair.left.unwrap()).unwrap();
        let p = al.projector(1);
        let id = WeylSum::identity(m.system());
        assert_eq!(twist_product(&p, &id, &pair).unwrap(), p);
        let st = m.state().unwrap();
        assert_eq!(twist_pairing(&st, &id, &id, &pair).unwrap(), Cyclo::one());
    }

    #[test]
    fn support_violation() {
        let m = build_bell_pair(4, 0, 3).unwrap();
        let pair = AnnulusPair::custom(
            m.layout(),
            Region::from_sites(4, [0]),
            Region::from_sites(4, [3]),
            Region::from_sites(4, [0]),
        )
        .unwrap();
        let bad = WeylSum::from_op(&WeylOp::single(m.system(), 1, 1, 0));
        let ok = WeylSum::identity(m.system());
        assert!(matches!(twist_product(&bad, &ok, &pair), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn verlinde_and_reconstruction_on_formula() {
        for d in [2u64, 3, 4] {
            let s = formula_matrix(d);
            let f = verlinde_fusion(&s).unwrap();
            for a in 0..s.rows() {
                for b in 0..s.rows() {
                    let c = f.product(a, b).unwrap();
                    let (la, lb) = (&s.left_labels[a], &s.left_labels[b]);
                    assert_eq!(s.left_labels[c], vec![(la[0] + lb[0]) % d, (la[1] + lb[1]) % d]);
                }
            }
            assert_eq!(reconstruct_group(&s).unwrap().invariant_factors, vec![d]);
        }
        let z4 = reconstruct_group(&formula_matrix(4)).unwrap();
        let z2z2 = reconstruct_group(&formula_matrix(2).tensor(&formula_matrix(2))).unwrap();
        assert_eq!(z2z2.invariant_factors, vec![2, 2]);
        assert!(!z4.is_isomorphic(&z2z2));
        assert!(!stilde_equivalent(&formula_matrix(4), &formula_matrix(2).tensor(&formula_matrix(2))));
        let z6 = reconstruct_group(&formula_matrix(2).tensor(&formula_matrix(3))).unwrap();
        assert_eq!(z6.invariant_factors, vec![6]);
    }

    #[test]
    fn nonsquare_fusion_rejected() {
        let mut s = formula_matrix(2);
        s.entries[1][1] = Cyclo::from_ratio(1, 3);
        assert!(matches!(verlinde_fusion(&s), Err(Error::NonGroupLikeFusion(_))));
    }

    #[test]
    fn shuffled_equivalence() {
        let s = formula_matrix(3);
        let rows = [0, 4, 2, 7, 1, 8, 3, 5, 6];
        let cols = [0, 8, 7, 6, 5, 4, 3, 2, 1];
        let t = s.permuted(&rows, &cols);
        assert!(stilde_equivalent(&s, &t));
        assert_eq!(reconstruct_group(&t).unwrap().invariant_factors, vec![3]);
        assert!(!stilde_equivalent(&formula_matrix(2), &s));
        // a relabelling that moves the vacuum is rejected
        let moved = STilde { left_vacuum: 1, ..t.clone() };
        assert!(!stilde_equivalent(&s, &moved));
    }

    #[test]
    fn s_view_is_unitary_for_abelian() {
        let s = formula_matrix(3).s_view();
        for i in 0..9 {
            for j in 0..9 {
                let dot: Complex<f64> = (0..9).map(|k| s[i][k] * s[j][k].conj()).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot.re - want).abs() < 1e-12 && dot.im.abs() < 1e-12);
            }
        }
    }
}
