//! Symmetric banded form of the product `X_p·X_q`.
//!
//! With `X_q = B_qᵀB_q/β`, conjugating by `B_q` gives
//! `B_q·X_p·X_q·B_q⁻¹ = B_q·X_p·B_qᵀ/β`, which is symmetric, pentadiagonal
//! and has the spectrum of the product. `B_q` is never inverted.

use nalgebra::DMatrix;

use crate::ensemble::{BidiagonalFactor, SymmetricTridiagonal};
use crate::{Error, Result};

/// Largest size accepted by the dense product oracle.
pub const DENSE_ORACLE_LIMIT: usize = 64;

/// Imaginary-part tolerance of the dense oracle.
pub const DENSE_IMAG_TOL: f64 = 1e-8;

/// Symmetric matrix with bands at offsets 0, 1 and 2.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricPentadiagonal {
    diag: Vec<f64>,
    off1: Vec<f64>,
    off2: Vec<f64>,
}

impl SymmetricPentadiagonal {
    pub fn new(diag: Vec<f64>, off1: Vec<f64>, off2: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        if off1.len() != n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                found: off1.len(),
            });
        }
        if off2.len() != n.saturating_sub(2) {
            return Err(Error::DimensionMismatch {
                expected: n.saturating_sub(2),
                found: off2.len(),
            });
        }
        Ok(Self { diag, off1, off2 })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(vec![1.0; n])
    }

    pub fn from_diagonal(diag: Vec<f64>) -> Self {
        let n = diag.len();
        Self {
            diag,
            off1: vec![0.0; n.saturating_sub(1)],
            off2: vec![0.0; n.saturating_sub(2)],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off1(&self) -> &[f64] {
        &self.off1
    }

    pub fn off2(&self) -> &[f64] {
        &self.off2
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off1[i.min(j)],
            2 => self.off2[i.min(j)],
            _ => 0.0,
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: v.len(),
            });
        }
        let mut out = vec![0.0; v.len()];
        self.matvec_into(v, &mut out);
        Ok(out)
    }

    /// `out = S·v`; lengths must already match.
    pub(crate) fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        for (o, (d, x)) in out.iter_mut().zip(self.diag.iter().zip(v)) {
            *o = d * x;
        }
        for (k, &e) in self.off1.iter().enumerate() {
            out[k] += e * v[k + 1];
            out[k + 1] += e * v[k];
        }
        for (k, &e) in self.off2.iter().enumerate() {
            out[k] += e * v[k + 2];
            out[k + 2] += e * v[k];
        }
    }

    /// Maximum absolute row sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n())
            .map(|i| {
                let lo = i.saturating_sub(2);
                let hi = (i + 2).min(self.n() - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.n(), |i, j| self.get(i, j))
    }
}

/// `S = B_q·X_p·B_qᵀ/β`, built in O(n).
pub fn product_similarity(
    b_q: &BidiagonalFactor,
    x_p: &SymmetricTridiagonal,
) -> Result<SymmetricPentadiagonal> {
    let n = b_q.n();
    if x_p.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x_p.n(),
        });
    }
    let beta = b_q.params().beta;
    let d = b_q.diag();
    let s = b_q.subdiag();

    // (B·X)[i][l] = d_i·X[i][l] + s_{i-1}·X[i-1][l]
    let bx = |i: usize, l: usize| {
        let mut v = d[i] * x_p.get(i, l);
        if i > 0 {
            v += s[i - 1] * x_p.get(i - 1, l);
        }
        v
    };
    // S[i][j] = (B·X)[i][j]·d_j + (B·X)[i][j-1]·s_{j-1}
    let entry = |i: usize, j: usize| {
        let mut v = bx(i, j) * d[j];
        if j > 0 {
            v += bx(i, j - 1) * s[j - 1];
        }
        v / beta
    };

    let diag = (0..n).map(|i| entry(i, i)).collect();
    let off1 = (0..n.saturating_sub(1)).map(|i| entry(i, i + 1)).collect();
    let off2 = (0..n.saturating_sub(2)).map(|i| entry(i, i + 2)).collect();
    SymmetricPentadiagonal::new(diag, off1, off2)
}

/// All eigenvalues of the dense product `X_p·X_q`, ascending. Test oracle
/// for small `n`.
pub fn dense_product_eigs(x_p: &SymmetricTridiagonal, x_q: &SymmetricTridiagonal) -> Result<Vec<f64>> {
    let n = x_p.n();
    if x_q.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x_q.n(),
        });
    }
    if n > DENSE_ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            n,
            limit: DENSE_ORACLE_LIMIT,
        });
    }
    let product = x_p.to_dense() * x_q.to_dense();
    let eigs = product.complex_eigenvalues();
    let imag = eigs.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > DENSE_IMAG_TOL {
        return Err(Error::ComplexSpectrum { imag });
    }
    let mut re: Vec<f64> = eigs.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    Ok(re)
}
