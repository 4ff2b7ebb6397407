//! Smith decomposition over ℤ_m for composite m.

use super::arith::{ext_gcd, gcd, inv_mod, mul_mod, normalizing_unit, reduce, solve_linear};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModMatrix {
    pub modulus: u64,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl ModMatrix {
    pub fn zeros(modulus: u64, rows: usize, cols: usize) -> Self {
        Self { modulus, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(modulus: u64, n: usize) -> Self {
        let mut m = Self::zeros(modulus, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % modulus;
        }
        m
    }

    pub fn from_rows(modulus: u64, cols: usize, rows: &[Vec<u64>]) -> Self {
        let mut m = Self::zeros(modulus, rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols);
            for (j, &x) in r.iter().enumerate() {
                m.data[i * cols + j] = x % modulus;
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let m = self.modulus;
        let mut out = Self::zeros(m, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..o.cols {
                    let v = (out.get(i, j) + mul_mod(a, o.get(k, j), m)) % m;
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            for c in 0..self.cols {
                self.data.swap(i * self.cols + c, j * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i != j {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + i, r * self.cols + j);
            }
        }
    }

    /// rows (i, j) ← [[a, b], [c, d]] · rows (i, j)
    fn row_op2(&mut self, i: usize, j: usize, t: [i128; 4]) {
        let m = self.modulus;
        let t = t.map(|x| reduce(x, m));
        for k in 0..self.cols {
            let (x, y) = (self.get(i, k), self.get(j, k));
            self.set(i, k, (mul_mod(t[0], x, m) + mul_mod(t[1], y, m)) % m);
            self.set(j, k, (mul_mod(t[2], x, m) + mul_mod(t[3], y, m)) % m);
        }
    }

    /// cols (i, j) ← cols (i, j) · [[a, c], [b, d]]
    fn col_op2(&mut self, i: usize, j: usize, t: [i128; 4]) {
        let m = self.modulus;
        let t = t.map(|x| reduce(x, m));
        for k in 0..self.rows {
            let (x, y) = (self.get(k, i), self.get(k, j));
            self.set(k, i, (mul_mod(t[0], x, m) + mul_mod(t[1], y, m)) % m);
            self.set(k, j, (mul_mod(t[2], x, m) + mul_mod(t[3], y, m)) % m);
        }
    }

    /// inverse transform of `col_op2` applied to rows of an inverse matrix
    fn row_op2_inv(&mut self, i: usize, j: usize, t: [i128; 4]) {
        // inverse of [[a, c], [b, d]] (det 1) is [[d, -c], [-b, a]]
        self.row_op2(i, j, [t[3], -t[2], -t[1], t[0]]);
    }
}

/// `U·A·V = D` over ℤ_m with `D` diagonal; diagonal entries are divisors of
/// m (0 meaning m) in a divisibility chain.
#[derive(Clone, Debug)]
pub struct ModSmith {
    pub u: ModMatrix,
    pub d: ModMatrix,
    pub v: ModMatrix,
    pub v_inv: ModMatrix,
}

impl ModSmith {
    /// Diagonal entries as divisors of m, with the zero element reported as m.
    pub fn diagonal(&self) -> Vec<u64> {
        let m = self.d.modulus;
        (0..self.d.rows.min(self.d.cols))
            .map(|i| if self.d.get(i, i) == 0 { m } else { self.d.get(i, i) })
            .collect()
    }
}

fn bezout(a: u64, b: u64, m: u64) -> [i128; 4] {
    if let Some(q) = solve_linear(a, b, m) {
        return [1, 0, -(q as i128), 1];
    }
    let (g, s, t) = ext_gcd(a as i128, b as i128);
    [s, t, -(b as i128 / g), a as i128 / g]
}

struct Work {
    d: ModMatrix,
    u: ModMatrix,
    v: ModMatrix,
    vi: ModMatrix,
}

impl Work {
    fn rows(&mut self, i: usize, j: usize, t: [i128; 4]) {
        self.d.row_op2(i, j, t);
        self.u.row_op2(i, j, t);
    }

    fn cols(&mut self, i: usize, j: usize, t: [i128; 4]) {
        self.d.col_op2(i, j, t);
        self.v.col_op2(i, j, t);
        self.vi.row_op2_inv(i, j, t);
    }

    fn clear_cross(&mut self, k: usize) {
        let (r, c) = (self.d.rows, self.d.cols);
        loop {
            for i in k + 1..r {
                if self.d.get(i, k) != 0 {
                    let t = bezout(self.d.get(k, k), self.d.get(i, k), self.d.modulus);
                    self.rows(k, i, t);
                }
            }
            let mut dirty = false;
            for j in k + 1..c {
                if self.d.get(k, j) != 0 {
                    let t = bezout(self.d.get(k, k), self.d.get(k, j), self.d.modulus);
                    self.cols(k, j, t);
                    dirty = true;
                }
            }
            if !dirty || (k + 1..r).all(|i| self.d.get(i, k) == 0) {
                break;
            }
        }
    }

    fn normalize(&mut self, k: usize) {
        let m = self.d.modulus;
        let x = self.d.get(k, k);
        if x == 0 {
            return;
        }
        let unit = normalizing_unit(x, m);
        if unit != 1 {
            let inv = inv_mod(unit, m).expect("unit");
            // scale column k by the unit: V gains it, V⁻¹ row k gains its inverse
            for i in 0..self.d.rows {
                let y = mul_mod(self.d.get(i, k), unit, m);
                self.d.set(i, k, y);
            }
            for i in 0..self.v.rows {
                let y = mul_mod(self.v.get(i, k), unit, m);
                self.v.set(i, k, y);
            }
            for j in 0..self.vi.cols {
                let y = mul_mod(self.vi.get(k, j), inv, m);
                self.vi.set(k, j, y);
            }
        }
    }
}

pub fn mod_smith(a: &ModMatrix) -> ModSmith {
    let m = a.modulus;
    let (r, c) = (a.rows, a.cols);
    let mut w = Work {
        d: a.clone(),
        u: ModMatrix::identity(m, r),
        v: ModMatrix::identity(m, c),
        vi: ModMatrix::identity(m, c),
    };
    let p = r.min(c);
    for k in 0..p {
        let mut best: Option<(usize, usize, u64)> = None;
        for i in k..r {
            for j in k..c {
                let x = w.d.get(i, j);
                if x != 0 {
                    let g = gcd(x, m);
                    if best.is_none_or(|b| g < b.2) {
                        best = Some((i, j, g));
                    }
                }
            }
        }
        let Some((pi, pj, _)) = best else { break };
        w.d.swap_rows(k, pi);
        w.u.swap_rows(k, pi);
        w.d.swap_cols(k, pj);
        w.v.swap_cols(k, pj);
        w.vi.swap_rows(k, pj);
        w.clear_cross(k);
        w.normalize(k);
    }
    // divisibility chain, treating 0 as m
    let val = |w: &Work, i: usize| if w.d.get(i, i) == 0 { m } else { w.d.get(i, i) };
    loop {
        let mut changed = false;
        for i in 0..p {
            for j in i + 1..p {
                let (di, dj) = (val(&w, i), val(&w, j));
                if dj % di != 0 {
                    w.cols(i, j, [1, 1, 0, 1]);
                    w.clear_cross(i);
                    w.normalize(i);
                    w.normalize(j);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    ModSmith { u: w.u, d: w.d, v: w.v, v_inv: w.vi }
}
