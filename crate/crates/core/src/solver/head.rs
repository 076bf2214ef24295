//! Linear systems for the head `P(0..M)`.
//!
//! Row `k` of the balance equations reads
//! `den_k P(k) - F+(k-1) P(k-1) - F-(k+1) P(k+1) = d_k` with
//! `den_k = 1 + F+(k) + F-(k)`.
//!
//! * The closed system keeps rows `0..=M` and replaces `P(M+1)` by
//!   `rho P(M)`, where `rho` is the tail ratio at the seam. It is strictly
//!   column diagonally dominant, so elimination without pivoting is stable.
//! * The pinned system fixes `P(0)`, keeps rows `0..M` divided by `den_k`,
//!   and writes `P(M) = C g`. It is lower triangular with determinant
//!   `g prod e_i`.

use crate::kernels::{InitialDegreeLaw, KernelParams};

use super::SolverError;

/// Tridiagonal system for `P(0..=M)` closed by the tail ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedHeadSystem {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
}

impl ClosedHeadSystem {
    pub fn new(params: &KernelParams, law: &InitialDegreeLaw, tail_ratio: f64) -> Self {
        let m = law.max_degree();
        let n = m + 1;
        let den = |k: usize| 1.0 + params.gain(k) + params.loss(k);
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for k in 0..n {
            diag[k] = den(k);
            if k > 0 {
                sub[k] = -params.gain(k - 1);
            }
            if k < m {
                sup[k] = -params.loss(k + 1);
            }
            rhs[k] = law.prob(k);
        }
        diag[m] -= params.loss(m + 1) * tail_ratio;
        ClosedHeadSystem { sub, diag, sup, rhs }
    }

    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    /// `A x - b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dimension();
        (0..n)
            .map(|k| {
                let mut r = self.diag[k] * x[k] - self.rhs[k];
                if k > 0 {
                    r += self.sub[k] * x[k - 1];
                }
                if k + 1 < n {
                    r += self.sup[k] * x[k + 1];
                }
                r
            })
            .collect()
    }

    /// Thomas elimination with one step of iterative refinement.
    pub fn solve(&self) -> Result<Vec<f64>, SolverError> {
        let mut x = thomas(&self.sub, &self.diag, &self.sup, &self.rhs)?;
        let correction = thomas(&self.sub, &self.diag, &self.sup, &self.residual(&x))?;
        for (xi, ci) in x.iter_mut().zip(correction) {
            *xi -= ci;
        }
        Ok(x)
    }
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    for k in 0..n {
        if k > 0 {
            pivot = diag[k] - sub[k] * c[k - 1];
        }
        if !(pivot.is_finite() && pivot != 0.0) {
            return Err(SolverError::SingularSystem);
        }
        c[k] = sup[k] / pivot;
        d[k] = (rhs[k] - if k > 0 { sub[k] * d[k - 1] } else { 0.0 }) / pivot;
    }
    for k in (0..n.saturating_sub(1)).rev() {
        d[k] -= c[k] * d[k + 1];
    }
    Ok(d)
}

/// Pinned system over the unknowns `P(0), .., P(M-1), C`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadSystem {
    /// Row `r` has entries in columns `r-2, r-1, r`.
    bands: Vec<[f64; 3]>,
    rhs: Vec<f64>,
    tail_kernel: f64,
}

/// Pinned head system for `P(0) = p0` and tail kernel `g = g(M)`.
pub fn build_head_system(params: &KernelParams, law: &InitialDegreeLaw, p0: f64, tail_kernel: f64) -> HeadSystem {
    let m = law.max_degree();
    let den = |k: usize| 1.0 + params.gain(k) + params.loss(k);
    let mut bands = Vec::with_capacity(m + 1);
    let mut rhs = Vec::with_capacity(m + 1);
    bands.push([0.0, 0.0, if m == 0 { tail_kernel } else { 1.0 }]);
    rhs.push(p0);
    for k in 0..m {
        let f = if k > 0 { -params.gain(k - 1) / den(k) } else { 0.0 };
        let mut e = -params.loss(k + 1) / den(k);
        if k + 1 == m {
            e *= tail_kernel;
        }
        bands.push([f, 1.0, e]);
        rhs.push(law.prob(k) / den(k));
    }
    HeadSystem { bands, rhs, tail_kernel }
}

impl HeadSystem {
    pub fn dimension(&self) -> usize {
        self.bands.len()
    }

    pub fn tail_kernel(&self) -> f64 {
        self.tail_kernel
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// `e_i = -F-(i) / den_{i-1}` for `i = 1..=M`.
    pub fn e(&self) -> Vec<f64> {
        let m = self.dimension() - 1;
        self.bands[1..]
            .iter()
            .enumerate()
            .map(|(i, row)| if i + 1 == m { row[2] / self.tail_kernel } else { row[2] })
            .collect()
    }

    /// `f_k = -F+(k-1) / den_k` for `k = 0..M`.
    pub fn f(&self) -> Vec<f64> {
        self.bands[1..].iter().map(|row| row[0]).collect()
    }

    /// Dense row-major matrix.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.dimension();
        let mut a = vec![vec![0.0; n]; n];
        for (r, row) in self.bands.iter().enumerate() {
            for (offset, &v) in row.iter().enumerate() {
                if let Some(c) = (r + offset).checked_sub(2) {
                    a[r][c] = v;
                }
            }
        }
        a
    }

    /// `g prod e_i`.
    pub fn determinant(&self) -> f64 {
        self.bands.iter().map(|row| row[2]).product()
    }

    /// Forward substitution; the last entry is `C`.
    pub fn solve(&self) -> Result<Vec<f64>, SolverError> {
        let mut x = vec![0.0; self.dimension()];
        for (r, row) in self.bands.iter().enumerate() {
            if row[2] == 0.0 {
                return Err(SolverError::SingularSystem);
            }
            let mut acc = self.rhs[r];
            if r >= 1 {
                acc -= row[1] * x[r - 1];
            }
            if r >= 2 {
                acc -= row[0] * x[r - 2];
            }
            x[r] = acc / row[2];
        }
        Ok(x)
    }

    /// Unknown in column `j` (0-based) as a ratio of determinants of the
    /// dense matrix, the numerator with column `j` replaced by the right-hand side.
    pub fn cramer(&self, column: usize) -> Result<f64, SolverError> {
        let a = self.matrix();
        let det = dense_determinant(a.clone());
        if det == 0.0 || !det.is_finite() {
            return Err(SolverError::SingularSystem);
        }
        let mut replaced = a;
        for (row, b) in replaced.iter_mut().zip(&self.rhs) {
            row[column] = *b;
        }
        Ok(dense_determinant(replaced) / det)
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn dense_determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        if a[pivot_row][col] == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            a.swap(pivot_row, col);
            det = -det;
        }
        det *= a[col][col];
        for i in col + 1..n {
            let factor = a[i][col] / a[col][col];
            if factor != 0.0 {
                let (upper, lower) = a.split_at_mut(i);
                for (x, &p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *x -= factor * p;
                }
            }
        }
    }
    det
}
