//! Dense complex matrices, sized for spinor fibers (dimensions stay below ~32).

use num_complex::Complex64;

pub type C64 = Complex64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Z2 parity of a homogeneous object.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_usize(k: usize) -> Parity {
        if k % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn add(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Koszul sign (-1)^{|a||b|}.
    pub fn koszul(self, other: Parity) -> f64 {
        match (self, other) {
            (Parity::Odd, Parity::Odd) => -1.0,
            _ => 1.0,
        }
    }
}

/// Row-major complex matrix. Columns of size one double as fiber vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> CMat {
        CMat {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> CMat {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> CMat {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn col_vec(entries: Vec<C64>) -> CMat {
        CMat {
            rows: entries.len(),
            cols: 1,
            data: entries,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        CMat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn neg(&self) -> CMat {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &CMat, s: C64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row = k * other.cols;
                let orow = i * other.cols;
                for j in 0..other.cols {
                    out.data[orow + j] += a * other.data[row + j];
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &CMat) -> CMat {
        let mut out = CMat::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.set(i * other.rows + k, j * other.cols + l, a * other.get(k, l));
                    }
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn commutator(&self, other: &CMat) -> CMat {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn anticommutator(&self, other: &CMat) -> CMat {
        self.mul(other).add(&other.mul(self))
    }

    /// [a,b] = ab - (-1)^{|a||b|} ba for parity-homogeneous matrices.
    pub fn supercommutator(&self, pa: Parity, other: &CMat, pb: Parity) -> CMat {
        if pa.koszul(pb) < 0.0 {
            self.anticommutator(other)
        } else {
            self.commutator(other)
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Parity of this matrix with respect to the grading involution `tau`:
    /// even if it commutes, odd if it anticommutes, None otherwise.
    pub fn parity_wrt(&self, tau: &CMat, tol: f64) -> Option<Parity> {
        let comm = self.commutator(tau).max_abs();
        let anti = self.anticommutator(tau).max_abs();
        let scale = 1.0 + self.max_abs();
        match (comm < tol * scale, anti < tol * scale) {
            (true, true) => Some(Parity::Even), // zero matrix
            (true, false) => Some(Parity::Even),
            (false, true) => Some(Parity::Odd),
            (false, false) => None,
        }
    }

    /// Numerical rank of a set of matrices viewed as vectors, via row echelon.
    pub fn span_rank(mats: &[CMat], tol: f64) -> usize {
        if mats.is_empty() {
            return 0;
        }
        let cols = mats[0].data.len();
        let mut rows: Vec<Vec<C64>> = mats.iter().map(|m| m.data.clone()).collect();
        let mut rank = 0;
        let mut col = 0;
        while rank < rows.len() && col < cols {
            let (imax, vmax) = rows
                .iter()
                .enumerate()
                .skip(rank)
                .map(|(i, r)| (i, r[col].norm()))
                .fold((rank, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if vmax < tol {
                col += 1;
                continue;
            }
            rows.swap(rank, imax);
            let pivot = rows[rank][col];
            for i in 0..rows.len() {
                if i == rank {
                    continue;
                }
                let f = rows[i][col] / pivot;
                if f.norm() == 0.0 {
                    continue;
                }
                for j in col..cols {
                    let sub = f * rows[rank][j];
                    rows[i][j] -= sub;
                }
            }
            rank += 1;
            col += 1;
        }
        rank
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn product_and_kron() {
        let a = CMat::from_fn(2, 2, |i, j| r((2 * i + j) as f64));
        let id = CMat::identity(2);
        assert_eq!(a.mul(&id), a);
        let k = a.kron(&id);
        assert_eq!(k.rows, 4);
        assert_eq!(k.get(0, 0), r(0.0));
        assert_eq!(k.get(2, 2), r(3.0));
        assert_eq!(k.get(3, 1), r(2.0));
    }

    #[test]
    fn supercommutator_signs() {
        let a = CMat::from_fn(2, 2, |i, j| r((i + 2 * j) as f64 + 1.0));
        // odd against odd is the anticommutator
        let s = a.supercommutator(Parity::Odd, &a, Parity::Odd);
        let two_a2 = a.mul(&a).scale(r(2.0));
        assert!(s.sub(&two_a2).max_abs() < 1e-14);
        // identity commutes with everything
        let id = CMat::identity(2);
        assert!(id.supercommutator(Parity::Even, &a, Parity::Even).max_abs() < 1e-14);
    }

    #[test]
    fn span_rank_of_paulis() {
        let id = CMat::identity(2);
        let sx = CMat::from_fn(2, 2, |i, j| if i != j { r(1.0) } else { r(0.0) });
        let sz = CMat::from_fn(2, 2, |i, j| {
            if i == j {
                r(if i == 0 { 1.0 } else { -1.0 })
            } else {
                r(0.0)
            }
        });
        let sy = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => r(0.0),
        });
        assert_eq!(CMat::span_rank(&[id.clone(), sx.clone(), sy, sz], 1e-10), 4);
        assert_eq!(CMat::span_rank(&[sx.clone(), sx.scale(r(2.0)), id], 1e-10), 2);
    }
}
