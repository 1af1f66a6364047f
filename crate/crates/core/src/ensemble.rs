//! β-Laguerre matrices built from their bidiagonal χ factors.
//!
//! `B` is lower bidiagonal with `B[j][j] ~ χ̃_{β(κ−j+1)}` and
//! `B[j+1][j] ~ χ_{β(n−j)}` (1-based `j`). The Laguerre matrix is
//! `X = BᵀB/β`, whose eigenvalues have the β-Laguerre joint density and whose
//! top edge sits at `(√n + √κ)²`.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::scaling::SingleScaling;
use crate::variates::{chi, ChiParam, RandomStream};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleParams {
    pub n: usize,
    pub kappa: usize,
    pub beta: f64,
}

impl EnsembleParams {
    pub fn new(n: usize, kappa: usize, beta: f64) -> Result<Self> {
        let params = Self { n, kappa, beta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("matrix size n must be >= 1".into()));
        }
        if self.kappa < self.n {
            return Err(Error::InvalidParameter(format!(
                "kappa must be >= n, got kappa = {} < n = {}",
                self.kappa, self.n
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// χ parameter of diagonal entry `j` (0-based): β(κ − j).
    pub fn diag_alpha(&self, j: usize) -> f64 {
        self.beta * (self.kappa - j) as f64
    }

    /// χ parameter of subdiagonal entry `j` (0-based): β(n − j − 1).
    pub fn subdiag_alpha(&self, j: usize) -> f64 {
        self.beta * (self.n - j - 1) as f64
    }
}

/// Lower-bidiagonal factor `B` of a β-Laguerre matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BidiagonalFactor {
    params: EnsembleParams,
    diag: Vec<f64>,
    subdiag: Vec<f64>,
}

impl BidiagonalFactor {
    pub fn from_parts(params: EnsembleParams, diag: Vec<f64>, subdiag: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if diag.len() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                found: diag.len(),
            });
        }
        if subdiag.len() != params.n - 1 {
            return Err(Error::DimensionMismatch {
                expected: params.n - 1,
                found: subdiag.len(),
            });
        }
        if diag.iter().chain(&subdiag).any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidParameter(
                "bidiagonal entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            params,
            diag,
            subdiag,
        })
    }

    pub fn params(&self) -> EnsembleParams {
        self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn subdiag(&self) -> &[f64] {
        &self.subdiag
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = self.diag[j];
        }
        for j in 0..n - 1 {
            m[(j + 1, j)] = self.subdiag[j];
        }
        m
    }
}

/// Draws `B` for `params`. Diagonal entry `j` uses `stream.split(j)` and
/// subdiagonal entry `j` uses `stream.split(n + j)`, so the tape does not
/// depend on evaluation order.
pub fn sample_bidiagonal(params: EnsembleParams, stream: &RandomStream) -> Result<BidiagonalFactor> {
    params.validate()?;
    let n = params.n;
    let draw = |index: usize, alpha: f64| -> Result<f64> {
        let p = ChiParam::new(alpha)?;
        Ok(chi(&mut stream.split(index as u64), p))
    };
    let diag = (0..n)
        .map(|j| draw(j, params.diag_alpha(j)))
        .collect::<Result<Vec<_>>>()?;
    let subdiag = (0..n - 1)
        .map(|j| draw(n + j, params.subdiag_alpha(j)))
        .collect::<Result<Vec<_>>>()?;
    BidiagonalFactor::from_parts(params, diag, subdiag)
}

/// Symmetric tridiagonal matrix stored by its diagonal and first
/// off-diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricTridiagonal {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymmetricTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len() - 1,
                found: offdiag.len(),
            });
        }
        Ok(Self { diag, offdiag })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            diag: vec![1.0; n],
            offdiag: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.offdiag[i.min(j)],
            _ => 0.0,
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        let mut out: Vec<f64> = self.diag.iter().zip(v).map(|(d, x)| d * x).collect();
        for (k, &e) in self.offdiag.iter().enumerate() {
            out[k] += e * v[k + 1];
            out[k + 1] += e * v[k];
        }
        Ok(out)
    }

    /// Gershgorin interval containing every eigenvalue.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.n(), |i, j| self.get(i, j))
    }
}

/// `X = BᵀB/β`: diagonal `(b_jj² + b_{j+1,j}²)/β`, off-diagonal
/// `b_{j+1,j+1}·b_{j+1,j}/β`.
pub fn laguerre_matrix(factor: &BidiagonalFactor) -> SymmetricTridiagonal {
    let beta = factor.params().beta;
    let n = factor.n();
    let d = factor.diag();
    let s = factor.subdiag();
    let diag = (0..n)
        .map(|j| {
            let below = if j + 1 < n { s[j] * s[j] } else { 0.0 };
            (d[j] * d[j] + below) / beta
        })
        .collect();
    let offdiag = (0..n - 1).map(|j| d[j + 1] * s[j] / beta).collect();
    SymmetricTridiagonal { diag, offdiag }
}

/// Realized soft-edge potential `y₁ + y₂` of a single Laguerre matrix,
/// sampled on the grid `x_k = k/m`, `k = 1..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialPath {
    m: f64,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl PotentialPath {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Step-function value `y_{⌊x·m⌋}`; zero for `⌊x·m⌋ = 0` and beyond the
    /// last grid point.
    pub fn at(&self, x: f64) -> f64 {
        if !(x >= 0.0) {
            return 0.0;
        }
        let k = (x * self.m).floor() as usize;
        if k == 0 || k > self.values.len() {
            0.0
        } else {
            self.values[k - 1]
        }
    }
}

fn check_path_params(n: usize, kappa: usize, scaling: &SingleScaling) -> Result<()> {
    if scaling.n != n || scaling.i != kappa {
        return Err(Error::InvalidParameter(format!(
            "scaling record is for (n, i) = ({}, {}), factor is ({n}, {kappa})",
            scaling.n, scaling.i
        )));
    }
    Ok(())
}

/// Assembles the path from the per-row deviations
/// `n + i − X_jj` (diagonal) and `2(√(ni) − X_{j,j+1})` (off-diagonal),
/// cumulatively summed and scaled by `m/√(ni)`.
fn assemble_path(
    scaling: &SingleScaling,
    diag_dev: impl Iterator<Item = f64>,
    off_dev: &[f64],
) -> PotentialPath {
    let n = scaling.n;
    let m = scaling.m;
    let scale = m / ((scaling.n as f64) * (scaling.i as f64)).sqrt();
    let mut acc = 0.0;
    let mut grid = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for (k, dd) in diag_dev.enumerate() {
        acc += dd + off_dev.get(k).copied().unwrap_or(0.0);
        grid.push((k + 1) as f64 / m);
        values.push(scale * acc);
    }
    PotentialPath { m, grid, values }
}

pub fn potential_path(factor: &BidiagonalFactor, scaling: &SingleScaling) -> Result<PotentialPath> {
    let params = factor.params();
    check_path_params(params.n, params.kappa, scaling)?;
    let x = laguerre_matrix(factor);
    let total = (params.n + params.kappa) as f64;
    let root = ((params.n * params.kappa) as f64).sqrt();
    let off: Vec<f64> = x.offdiag().iter().map(|e| 2.0 * (root - e)).collect();
    Ok(assemble_path(
        scaling,
        x.diag().iter().map(|d| total - d),
        &off,
    ))
}

/// E[χ_α] = √2·Γ((α+1)/2)/Γ(α/2).
pub fn chi_mean(alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    std::f64::consts::SQRT_2 * (ln_gamma(0.5 * (alpha + 1.0)) - ln_gamma(0.5 * alpha)).exp()
}

/// The potential path with every χ product replaced by its expectation.
pub fn mean_potential_path(params: EnsembleParams, scaling: &SingleScaling) -> Result<PotentialPath> {
    params.validate()?;
    check_path_params(params.n, params.kappa, scaling)?;
    let n = params.n;
    let total = (n + params.kappa) as f64;
    let root = ((n * params.kappa) as f64).sqrt();
    // E[χ̃²_{β(κ−j)} + χ²_{β(n−j−1)}]/β = (κ − j) + (n − j − 1), 0-based j.
    let diag = (0..n).map(|j| total - ((params.kappa - j) + (n - j - 1)) as f64);
    let off: Vec<f64> = (0..n - 1)
        .map(|j| {
            let e = chi_mean(params.diag_alpha(j + 1)) * chi_mean(params.subdiag_alpha(j));
            2.0 * (root - e / params.beta)
        })
        .collect();
    Ok(assemble_path(scaling, diag, &off))
}
