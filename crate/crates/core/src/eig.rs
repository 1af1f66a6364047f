//! Extreme eigenvalues of symmetric tridiagonal and pentadiagonal matrices.
//!
//! Tridiagonal matrices use bisection on the Sturm count inside the
//! Gershgorin interval. Pentadiagonal matrices use Lanczos with full
//! reorthogonalization; a Ritz pair is accepted only once its explicitly
//! recomputed residual `‖Sx − θx‖₂` is below `rel_tol·‖S‖₁`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::ensemble::SymmetricTridiagonal;
use crate::product::SymmetricPentadiagonal;
use crate::variates::{gaussian, RandomStream};
use crate::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigConfig {
    rel_tol: f64,
    max_iter: Option<usize>,
}

impl Default for EigConfig {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            max_iter: None,
        }
    }
}

impl EigConfig {
    /// `max_iter = None` means `10·n + 100`.
    pub fn new(rel_tol: f64, max_iter: Option<usize>) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must lie in (0, 1e-2], got {rel_tol}"
            )));
        }
        if max_iter == Some(0) {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        Ok(Self { rel_tol, max_iter })
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn max_iter(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n + 100)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Smallest,
    Largest,
}

/// Number of eigenvalues of `t` strictly below `x`.
pub fn sturm_count(t: &SymmetricTridiagonal, x: f64) -> usize {
    let d = t.diag();
    let e = t.offdiag();
    let max_e2 = e.iter().map(|v| v * v).fold(1.0, f64::max);
    let pivmin = f64::MIN_POSITIVE * max_e2;

    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let coupling = if i > 0 { e[i - 1] * e[i - 1] / q } else { 0.0 };
        q = d[i] - x - coupling;
        if q.abs() < pivmin {
            q = if q < 0.0 { -pivmin } else { pivmin };
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Extreme eigenvalue of `t` by bisection to an absolute width of
/// `rel_tol·(Gershgorin diameter)`.
pub fn tridiag_extreme_eig(t: &SymmetricTridiagonal, which: Which, cfg: &EigConfig) -> f64 {
    let n = t.n();
    let (g_lo, g_hi) = t.gershgorin();
    let width = (g_hi - g_lo).max(g_hi.abs().max(g_lo.abs()) * f64::EPSILON).max(f64::MIN_POSITIVE);
    let tol = cfg.rel_tol * width;
    let mut lo = g_lo - tol;
    let mut hi = g_hi + tol;
    // Widths halve each pass; 200 passes exceed any f64 range.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let c = sturm_count(t, mid);
        let below = match which {
            Which::Smallest => c >= 1,
            Which::Largest => c >= n,
        };
        if below {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Certified top eigenpair summary from [`banded_largest_eig`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RitzValue {
    pub value: f64,
    /// `‖Sx − θx‖₂` for the unit Ritz vector `x`.
    pub residual: f64,
    /// Lanczos steps taken, summed over restarts.
    pub iterations: usize,
}

struct LanczosOutcome {
    best: RitzValue,
    converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| match i.abs_diff(j) {
        0 => alpha[i],
        1 => beta[i.min(j)],
        _ => 0.0,
    });
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    (theta, eig.eigenvectors.column(idx).iter().copied().collect())
}

fn lanczos(s: &SymmetricPentadiagonal, start: Vec<f64>, tol: f64, max_steps: usize) -> LanczosOutcome {
    let n = s.n();
    let steps = max_steps.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut w = vec![0.0; n];
    let mut v = start;
    normalize(&mut v);

    let mut best = RitzValue {
        value: f64::NAN,
        residual: f64::INFINITY,
        iterations: 0,
    };

    for j in 0..steps {
        s.matvec_into(&v, &mut w);
        let a = dot(&w, &v);
        alpha.push(a);
        basis.push(std::mem::take(&mut v));
        // Two classical Gram-Schmidt passes against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b_next = dot(&w, &w).sqrt();
        let k = j + 1;
        let exhausted = k == steps || b_next <= tol * f64::EPSILON;
        if k % 5 == 0 || k < 5 || exhausted {
            let (theta, y) = top_ritz(&alpha, &beta);
            let estimate = b_next * y[k - 1].abs();
            if estimate <= tol || exhausted {
                let mut x = vec![0.0; n];
                for (coef, b) in y.iter().zip(&basis) {
                    x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += coef * bi);
                }
                normalize(&mut x);
                let mut sx = vec![0.0; n];
                s.matvec_into(&x, &mut sx);
                let residual = sx
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - theta * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if residual < best.residual || best.value.is_nan() {
                    best = RitzValue {
                        value: theta,
                        residual,
                        iterations: k,
                    };
                }
                if residual <= tol {
                    return LanczosOutcome {
                        best,
                        converged: true,
                    };
                }
            } else if best.value.is_nan() || estimate < best.residual {
                best = RitzValue {
                    value: theta,
                    residual: estimate,
                    iterations: k,
                };
            }
        }
        if exhausted {
            break;
        }
        beta.push(b_next);
        v = w.iter().map(|x| x / b_next).collect();
    }
    best.iterations = alpha.len();
    LanczosOutcome {
        best,
        converged: false,
    }
}

fn start_vector(n: usize, stream: &RandomStream) -> Vec<f64> {
    let mut st = stream.clone();
    let scale = 0.1 / (n as f64).sqrt();
    (0..n)
        .map(|_| 1.0 / (n as f64).sqrt() + scale * gaussian(&mut st))
        .collect()
}

/// Largest eigenvalue of `s`. The start vector is the normalized all-ones
/// vector plus a small Gaussian perturbation drawn from `stream`; on
/// failure the iteration restarts once from a perturbation drawn from
/// `stream.split(1)`.
pub fn banded_largest_eig(
    s: &SymmetricPentadiagonal,
    cfg: &EigConfig,
    stream: &RandomStream,
) -> Result<RitzValue> {
    let n = s.n();
    let norm = s.norm1();
    if norm == 0.0 {
        return Ok(RitzValue {
            value: 0.0,
            residual: 0.0,
            iterations: 0,
        });
    }
    let tol = cfg.rel_tol() * norm;
    let max_steps = cfg.max_iter(n);

    let first = lanczos(s, start_vector(n, stream), tol, max_steps);
    if first.converged {
        return Ok(first.best);
    }
    let second = lanczos(s, start_vector(n, &stream.split(1)), tol, max_steps);
    let iterations = first.best.iterations + second.best.iterations;
    if second.converged {
        return Ok(RitzValue {
            iterations,
            ..second.best
        });
    }
    let best = if second.best.residual < first.best.residual {
        second.best
    } else {
        first.best
    };
    Err(Error::NoConvergence {
        best: best.value,
        residual: best.residual,
        iterations,
    })
}
