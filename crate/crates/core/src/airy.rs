//! Tracy-Widom(β) reference samples from the stochastic Airy operator
//! `−d²/dx² + x + (2/√β)·B′` on `[0, L]` with a Dirichlet condition at 0.
//!
//! On the mesh `x_k = k·h`, `k = 1..N`, the operator becomes the symmetric
//! tridiagonal matrix
//!
//! ```text
//! A_kk     = 2/h² + x_k + (2/√β)·(B(x_k + h/2) − B(x_k − h/2))/h
//! A_k,k+1  = −1/h²
//! ```
//!
//! and a TW_β sample is `−λ_min(A)`. Each cell increment of `B` is an
//! independent `N(0, h)`, so the noise is `(2/√β)·g_k/√h`.
//!
//! The Brownian path is drawn once per stream on a fixed dyadic grid of
//! spacing [`BROWNIAN_STEP`] (refined by Brownian bridges when `h` is
//! small), then linearly interpolated. Samples that share a stream
//! therefore share the same path across meshes and cutoffs, which keeps
//! mesh and cutoff comparisons free of sampling noise.

use rayon::prelude::*;

use crate::eig::{tridiag_extreme_eig, EigConfig, Which};
use crate::ensemble::SymmetricTridiagonal;
use crate::stats::{Sample, SampleBatch};
use crate::variates::{gaussian, split_stream, RandomStream};
use crate::{Error, Result};

pub const DEFAULT_MESH: f64 = 0.02;
pub const DEFAULT_CUTOFF: f64 = 12.0;

/// Spacing of the coarsest grid the Brownian path is drawn on.
pub const BROWNIAN_STEP: f64 = 1.0 / 400.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AiryDiscretization {
    beta: f64,
    mesh: f64,
    cutoff: f64,
    points: usize,
}

impl AiryDiscretization {
    /// `beta = f64::INFINITY` drops the noise term.
    pub fn new(beta: f64, mesh: f64, cutoff: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        if !(mesh > 0.0 && mesh <= 0.1) {
            return Err(Error::InvalidParameter(format!(
                "mesh step must lie in (0, 0.1], got {mesh}"
            )));
        }
        if !(cutoff >= 8.0 && cutoff.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cutoff must be finite and >= 8, got {cutoff}"
            )));
        }
        let points = (cutoff / mesh).round() as usize;
        if points < 80 {
            return Err(Error::InvalidParameter(format!(
                "discretization needs >= 80 points, got {points}"
            )));
        }
        Ok(Self {
            beta,
            mesh,
            cutoff,
            points,
        })
    }

    pub fn with_defaults(beta: f64) -> Result<Self> {
        Self::new(beta, DEFAULT_MESH, DEFAULT_CUTOFF)
    }

    pub fn noiseless(mesh: f64, cutoff: f64) -> Result<Self> {
        Self::new(f64::INFINITY, mesh, cutoff)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn points(&self) -> usize {
        self.points
    }
}

/// Piecewise-linear Brownian path on `[0, ∞)` sampled on a dyadic grid.
struct BrownianPath {
    step: f64,
    values: Vec<f64>,
}

impl BrownianPath {
    /// Path covering `[0, end]` with spacing at most `max_step`. The coarse
    /// grid comes from `stream.split(0)`; refinement level `ℓ` draws its
    /// bridge midpoints from `stream.split(ℓ)`.
    fn sample(stream: &RandomStream, end: f64, max_step: f64) -> Self {
        let coarse = (end / BROWNIAN_STEP).ceil() as usize + 1;
        let mut st = stream.split(0);
        let sd = BROWNIAN_STEP.sqrt();
        let mut values = Vec::with_capacity(coarse + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for _ in 0..coarse {
            acc += sd * gaussian(&mut st);
            values.push(acc);
        }

        let mut step = BROWNIAN_STEP;
        let mut level = 0;
        while step > max_step {
            level += 1;
            let mut st = stream.split(level);
            // Bridge midpoint: mean of the endpoints, variance step/4.
            let sd = (0.25 * step).sqrt();
            let mut refined = Vec::with_capacity(2 * values.len() - 1);
            for w in values.windows(2) {
                refined.push(w[0]);
                refined.push(0.5 * (w[0] + w[1]) + sd * gaussian(&mut st));
            }
            refined.push(*values.last().expect("nonempty path"));
            values = refined;
            step *= 0.5;
        }
        Self { step, values }
    }

    fn at(&self, x: f64) -> f64 {
        let t = x / self.step;
        let k = t.floor() as usize;
        if k + 1 >= self.values.len() {
            return *self.values.last().expect("nonempty path");
        }
        let frac = t - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }
}

/// Finite-difference matrix for the stochastic Airy operator with `points`
/// interior nodes. Noise is omitted when `beta` is infinite.
pub fn airy_matrix(beta: f64, mesh: f64, points: usize, stream: &RandomStream) -> Result<SymmetricTridiagonal> {
    if points == 0 || !(mesh > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "invalid Airy matrix parameters: beta = {beta}, mesh = {mesh}, points = {points}"
        )));
    }
    let h2 = 1.0 / (mesh * mesh);
    let mut diag: Vec<f64> = (1..=points).map(|k| 2.0 * h2 + k as f64 * mesh).collect();
    if beta.is_finite() {
        let weight = 2.0 / beta.sqrt() / mesh;
        let end = (points as f64 + 0.5) * mesh;
        let path = BrownianPath::sample(stream, end, 0.25 * mesh);
        for (k, d) in diag.iter_mut().enumerate() {
            let x = (k + 1) as f64 * mesh;
            *d += weight * (path.at(x + 0.5 * mesh) - path.at(x - 0.5 * mesh));
        }
    }
    SymmetricTridiagonal::new(diag, vec![-h2; points - 1])
}

/// One TW_β sample: `−λ_min` of the discretized operator.
pub fn sample_tw(disc: &AiryDiscretization, stream: &RandomStream) -> Result<f64> {
    let a = airy_matrix(disc.beta, disc.mesh, disc.points, stream)?;
    Ok(-tridiag_extreme_eig(&a, Which::Smallest, &EigConfig::default()))
}

/// `count` independent TW_β samples; sample `r` uses `split_stream(seed, r)`.
/// Runs on the current rayon pool.
pub fn tw_reference_batch(beta: f64, count: usize, seed: u64, disc: &AiryDiscretization) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidParameter("reference batch needs >= 1 sample".into()));
    }
    let disc = AiryDiscretization::new(beta, disc.mesh, disc.cutoff)?;
    let samples = (0..count as u64)
        .into_par_iter()
        .map(|r| {
            sample_tw(&disc, &split_stream(seed, r)).map(|v| Sample {
                replicate: r,
                value: Some(v),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch::new(format!("tw-beta{beta}"), Default::default(), samples)
        .with_param("generator", "stochastic-airy")
        .with_param("beta", beta)
        .with_param("reps", count)
        .with_param("seed", seed)
        .with_param("mesh", disc.mesh)
        .with_param("cutoff", disc.cutoff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::moments;

    /// −a₁, first zero of Ai.
    const AIRY_GROUND: f64 = 2.338_107_410_459_767;

    fn noiseless_ground(mesh: f64, cutoff: f64) -> f64 {
        // Fine meshes widen the Gershgorin interval to ~4/h², so the default
        // width-relative tolerance would mask the O(h²) differences checked here.
        let disc = AiryDiscretization::noiseless(mesh, cutoff).unwrap();
        let a = airy_matrix(disc.beta(), disc.mesh(), disc.points(), &split_stream(0, 0)).unwrap();
        -tridiag_extreme_eig(&a, Which::Smallest, &EigConfig::new(1e-14, None).unwrap())
    }

    #[test]
    fn two_point_matrix() {
        let a = airy_matrix(f64::INFINITY, 1.0, 2, &split_stream(0, 0)).unwrap();
        assert_eq!(a.diag(), &[3.0, 4.0]);
        assert_eq!(a.offdiag(), &[-1.0]);
        let lo = tridiag_extreme_eig(&a, Which::Smallest, &EigConfig::default());
        assert!((lo - (7.0 - 5f64.sqrt()) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_converges_to_airy_zero() {
        // Richardson limit from three successive halvings, O(h²) error.
        let g: Vec<f64> = [0.01, 0.005, 0.0025].iter().map(|&h| noiseless_ground(h, 12.0)).collect();
        let limit = g[2] + (g[2] - g[1]) / 3.0;
        // Cauchy behaviour: successive differences shrink by ~4.
        let r = (g[0] - g[1]) / (g[1] - g[2]);
        assert!((r - 4.0).abs() < 0.2, "ratio {r}");
        assert!((limit + AIRY_GROUND).abs() < 1e-5, "limit {limit}");
        assert!((g[0] - limit).abs() < 5e-3);
        assert!((g[0] + AIRY_GROUND).abs() < 5e-3);
    }

    #[test]
    fn noiseless_decreases_with_mesh() {
        let g: Vec<f64> = [0.08, 0.04, 0.02, 0.01].iter().map(|&h| noiseless_ground(h, 12.0)).collect();
        assert!(g.windows(2).all(|w| w[1] < w[0]), "{g:?}");
        assert!(g.iter().all(|&v| v > -AIRY_GROUND));
    }

    #[test]
    fn sample_is_reproducible() {
        let disc = AiryDiscretization::with_defaults(2.0).unwrap();
        let a = sample_tw(&disc, &split_stream(9, 3)).unwrap();
        let b = sample_tw(&disc, &split_stream(9, 3)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn batch_of_one_matches_single_sample() {
        let disc = AiryDiscretization::with_defaults(2.0).unwrap();
        let batch = tw_reference_batch(2.0, 1, 5, &disc).unwrap();
        let direct = sample_tw(&disc, &split_stream(5, 0)).unwrap();
        assert_eq!(batch.values(), &[direct]);
    }

    #[test]
    fn discretization_bounds() {
        assert!(AiryDiscretization::new(2.0, 0.2, 12.0).is_err());
        assert!(AiryDiscretization::new(2.0, 0.02, 7.0).is_err());
        assert!(AiryDiscretization::new(0.0, 0.02, 12.0).is_err());
        assert_eq!(AiryDiscretization::with_defaults(1.0).unwrap().points(), 600);
        assert!(tw_reference_batch(2.0, 0, 1, &AiryDiscretization::with_defaults(2.0).unwrap()).is_err());
    }

    #[test]
    fn cell_noise_has_unit_scaled_variance() {
        // (2/√β)·ΔB/h with β = 4 is N(0, 1/h).
        let mesh = 0.02;
        let mut acc = 0.0;
        let mut count = 0;
        for r in 0..200 {
            let noisy = airy_matrix(4.0, mesh, 100, &split_stream(1, r)).unwrap();
            let clean = airy_matrix(f64::INFINITY, mesh, 100, &split_stream(1, r)).unwrap();
            for (a, b) in noisy.diag().iter().zip(clean.diag()) {
                acc += (a - b).powi(2);
                count += 1;
            }
        }
        let var = acc / count as f64;
        assert!((var * mesh - 1.0).abs() < 0.03, "scaled variance {}", var * mesh);
    }

    #[test]
    fn refined_path_keeps_coarse_values() {
        let st = split_stream(2, 2);
        let coarse = BrownianPath::sample(&st, 1.0, BROWNIAN_STEP);
        let fine = BrownianPath::sample(&st, 1.0, BROWNIAN_STEP / 4.0);
        for k in 0..50 {
            let x = k as f64 * BROWNIAN_STEP;
            assert!((coarse.at(x) - fine.at(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn tw2_moments_bracket() {
        let disc = AiryDiscretization::with_defaults(2.0).unwrap();
        let b = tw_reference_batch(2.0, 4000, 1234, &disc).unwrap();
        let m = moments(&b).unwrap();
        assert!((-1.95..=-1.60).contains(&m.mean), "mean {}", m.mean);
        assert!((0.65..=1.00).contains(&m.variance), "variance {}", m.variance);
    }

    #[test]
    fn tw_means_decrease_with_beta() {
        let m = |beta: f64| {
            let disc = AiryDiscretization::with_defaults(beta).unwrap();
            moments(&tw_reference_batch(beta, 4000, 77, &disc).unwrap()).unwrap().mean
        };
        assert!(m(4.0) < m(1.0));
    }
}
