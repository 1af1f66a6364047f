//! Centering and scaling constants for single Laguerre matrices and for the
//! product `X_p·X_q`.
//!
//! Field names follow what each constant does; the usual symbols are noted
//! in the doc comments.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Soft-edge constants for one matrix with parameters `(n, i)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleScaling {
    pub n: usize,
    pub i: usize,
    /// `m = (√(ni)/(√n+√i))^{2/3}`, the grid density of the edge scaling.
    pub m: f64,
    /// `μ = (√n+√i)²`, the edge location.
    pub mu: f64,
    /// `σ = (√n+√i)^{4/3}/(ni)^{1/6}`, the fluctuation scale.
    pub sigma: f64,
}

impl SingleScaling {
    /// `(λ_max − μ)/σ`.
    pub fn statistic(&self, lambda_max: f64) -> f64 {
        (lambda_max - self.mu) / self.sigma
    }
}

fn check_order(n: usize, p: usize, q: usize) -> Result<()> {
    if n == 0 || n > p || p > q {
        return Err(Error::InvalidParameter(format!(
            "require 1 <= n <= p <= q, got n = {n}, p = {p}, q = {q}"
        )));
    }
    Ok(())
}

pub fn single_scaling(n: usize, i: usize) -> Result<SingleScaling> {
    check_order(n, i, i)?;
    let (sn, si) = ((n as f64).sqrt(), (i as f64).sqrt());
    let edge = sn + si;
    let root = sn * si;
    Ok(SingleScaling {
        n,
        i,
        m: (root / edge).powf(2.0 / 3.0),
        mu: edge * edge,
        sigma: edge.powf(4.0 / 3.0) / root.powf(1.0 / 3.0),
    })
}

/// Every constant of the product edge law for `(n, p, q, β)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub beta: f64,
    pub single_p: SingleScaling,
    pub single_q: SingleScaling,
    /// `m_n`, the common grid density of the coupled operator.
    pub grid_scale: f64,
    /// `a_n`, weight of the rescaled `H^p` term.
    pub weight_p: f64,
    /// `b_n`, weight of the rescaled `H^q` term.
    pub weight_q: f64,
    /// `d_n`, weight of the cross term `H̄^p·H̄^q`.
    pub cross_weight: f64,
    /// `c_n = a_n + b_n`, overall scale of the limiting operator.
    pub operator_scale: f64,
    /// `C_n`, so that the limiting Tracy-Widom parameter is `C_n·β`.
    pub beta_multiplier: f64,
    /// `β₀ = C_n·β`.
    pub effective_beta: f64,
    /// `μ_n = μ_{n,p}·μ_{n,q}`.
    pub center: f64,
    /// `c_n·σ_{n,p}²·σ_{n,q}²`, denominator of the product statistic.
    pub scale: f64,
}

pub fn coupled_scaling(n: usize, p: usize, q: usize, beta: f64) -> Result<ScalingConstants> {
    check_order(n, p, q)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    let sp = single_scaling(n, p)?;
    let sq = single_scaling(n, q)?;

    let wp = sq.mu / (sq.sigma * sq.sigma * sp.sigma);
    let wq = sp.mu / (sp.sigma * sp.sigma * sq.sigma);
    let grid_scale = ((wp * sp.m * sp.m + wq * sq.m * sq.m) * sp.m * sq.m
        / (wp * sq.m + wq * sp.m))
        .cbrt();
    let m2 = grid_scale * grid_scale;

    let weight_p = sp.m * sp.m * wp / m2;
    let weight_q = sq.m * sq.m * wq / m2;
    let cross_weight = (sp.m * sp.m * sq.m * sq.m) / (m2 * m2 * sp.sigma * sq.sigma);
    let operator_scale = weight_p + weight_q;

    let m3 = m2 * grid_scale;
    let fp = weight_p / operator_scale;
    let fq = weight_q / operator_scale;
    let beta_multiplier = 1.0 / (m3 / sp.m.powi(3) * fp * fp + m3 / sq.m.powi(3) * fq * fq);

    Ok(ScalingConstants {
        n,
        p,
        q,
        beta,
        single_p: sp,
        single_q: sq,
        grid_scale,
        weight_p,
        weight_q,
        cross_weight,
        operator_scale,
        beta_multiplier,
        effective_beta: beta_multiplier * beta,
        center: sp.mu * sq.mu,
        scale: operator_scale * sp.sigma.powi(2) * sq.sigma.powi(2),
    })
}

/// Centered and scaled top eigenvalue of `X_p·X_q`; converges in law to
/// `TW_{β₀}`.
pub fn product_statistic(lambda_max: f64, sc: &ScalingConstants) -> f64 {
    (lambda_max - sc.center) / sc.scale
}

/// The closed-form rational expression commonly quoted for `c_n`. It
/// evaluates to `(a_n + b_n)³`, not `a_n + b_n`; kept as a cross-check.
pub fn closed_form_cn(n: usize, p: usize, q: usize) -> f64 {
    let (n, p, q) = (n as f64, p as f64, q as f64);
    let (sn, sp, sq) = (n.sqrt(), p.sqrt(), q.sqrt());
    let ep = (sn + sp).powi(2);
    let eq = (sn + sq).powi(2);
    let (rnp, rnq) = ((n * p).sqrt(), (n * q).sqrt());
    (rnp + rnq).powi(2) * (eq * rnp + ep * rnq) / (ep * ep * eq * eq)
}

/// The closed-form expression commonly quoted for `C_n`:
/// `1 + (p(√n+√p)² + q(√n+√q)²)/(√(pq)((√n+√p)² + (√n+√q)²))`.
/// Agrees with [`ScalingConstants::beta_multiplier`] only when `p = q`.
pub fn closed_form_beta_multiplier(n: usize, p: usize, q: usize) -> f64 {
    let (n, p, q) = (n as f64, p as f64, q as f64);
    let ep = (n.sqrt() + p.sqrt()).powi(2);
    let eq = (n.sqrt() + q.sqrt()).powi(2);
    1.0 + (p * ep + q * eq) / ((p * q).sqrt() * (ep + eq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn single_direct_substitution() {
        let s = single_scaling(4, 9).unwrap();
        assert!(rel(s.mu, 25.0) < 1e-15);
        assert!(rel(s.sigma, 5f64.powf(4.0 / 3.0) / 36f64.powf(1.0 / 6.0)) < 1e-14);
        assert!(rel(s.m, 1.2f64.powf(2.0 / 3.0)) < 1e-14);

        let s = single_scaling(1, 1).unwrap();
        assert!((s.m - 0.5f64.powf(2.0 / 3.0)).abs() < 1e-15);
        assert!((s.m - 0.6300).abs() < 1e-4);
        assert_eq!(s.mu, 4.0);
    }

    #[test]
    fn single_identities() {
        for &(n, i) in &[(7, 13), (1, 1), (100, 100), (3, 1000), (12345, 67890)] {
            let s = single_scaling(n, i).unwrap();
            assert!(rel(s.sigma * s.m * s.m, ((n * i) as f64).sqrt()) < 1e-12);
            assert!(rel(s.mu / (s.sigma * s.sigma), s.m) < 1e-12);
        }
    }

    #[test]
    fn ordering_is_enforced() {
        assert!(single_scaling(5, 4).is_err());
        assert!(single_scaling(0, 4).is_err());
        assert!(coupled_scaling(4, 5, 4, 1.0).is_err());
        assert!(coupled_scaling(6, 5, 7, 1.0).is_err());
        assert!(coupled_scaling(4, 5, 7, 0.0).is_err());
    }

    #[test]
    fn equal_parameters_double_beta() {
        for &(n, p) in &[(1, 1), (4, 9), (256, 256), (10, 1000), (77, 78)] {
            let sc = coupled_scaling(n, p, p, 1.5).unwrap();
            assert!((sc.beta_multiplier - 2.0).abs() < 1e-12, "{n},{p}");
            assert!((sc.effective_beta - 3.0).abs() < 1e-11);
            assert!((closed_form_beta_multiplier(n, p, p) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn square_case_weights() {
        for &n in &[1, 5, 256] {
            let sc = coupled_scaling(n, n, n, 1.0).unwrap();
            assert!((sc.weight_p - 0.25).abs() < 1e-12);
            assert!((sc.weight_q - 0.25).abs() < 1e-12);
            assert!((sc.operator_scale - 0.5).abs() < 1e-12);
            assert!(rel(sc.grid_scale, sc.single_p.m) < 1e-14);
        }
    }

    #[test]
    fn closed_form_cn_is_cube() {
        assert!((closed_form_cn(1, 1, 1) - 0.125).abs() < 1e-15);
        assert!((closed_form_cn(9, 9, 9) - 0.125).abs() < 1e-15);
        let sc = coupled_scaling(4, 9, 16, 1.0).unwrap();
        assert!(rel(closed_form_cn(4, 9, 16), sc.operator_scale.powi(3)) < 1e-12);
        let sc = coupled_scaling(1, 1, 1, 1.0).unwrap();
        assert!((sc.operator_scale - 0.5).abs() < 1e-15);
    }

    #[test]
    fn beta_multiplier_forms_disagree_off_diagonal() {
        assert!((closed_form_beta_multiplier(1, 1, 4) - (1.0 + 40.0 / 26.0)).abs() < 1e-12);
        let sc = coupled_scaling(1, 1, 4, 1.0).unwrap();
        assert!((sc.beta_multiplier - (1.0 + 25.0 / 26.0)).abs() < 1e-12);
    }

    #[test]
    fn cross_weight_ratio() {
        for &(n, p, q) in &[(1, 1, 4), (4, 9, 16), (10, 20, 300), (50, 50, 50)] {
            let sc = coupled_scaling(n, p, q, 1.0).unwrap();
            let r = (q as f64 / n as f64).sqrt();
            let expected = r / (1.0 + r).powi(2);
            let got = sc.cross_weight / sc.weight_p * sc.grid_scale.powi(2);
            assert!(rel(got, expected) < 1e-12);
            assert!(got <= 0.25 + 1e-15);
            assert!(sc.weight_p > 0.0 && sc.weight_q > 0.0 && sc.cross_weight > 0.0);
            assert!(sc.beta_multiplier > 1.0);
        }
    }

    #[test]
    fn constants_converge_in_n() {
        for &(rp, rq) in &[(1.0, 1.0), (1.5, 2.0), (2.0, 5.0)] {
            let at = |n: usize| {
                let p = (rp * n as f64) as usize;
                let q = (rq * n as f64) as usize;
                coupled_scaling(n, p, q, 1.0).unwrap()
            };
            let (a, b) = (at(10_000), at(100_000));
            assert!((a.beta_multiplier - b.beta_multiplier).abs() < 1e-3);
            assert!((a.operator_scale - b.operator_scale).abs() < 1e-3);
        }
    }

    #[test]
    fn statistic_centering_and_unit() {
        let sc = coupled_scaling(8, 10, 12, 2.0).unwrap();
        assert_eq!(product_statistic(sc.center, &sc), 0.0);
        assert!((product_statistic(sc.center + sc.scale, &sc) - 1.0).abs() < 1e-12);
    }
}
