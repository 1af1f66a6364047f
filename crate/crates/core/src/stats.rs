//! Sample batches, empirical CDFs, two-sample Kolmogorov-Smirnov distance
//! and moment summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of blocks used for batch-means standard errors.
pub const MOMENT_BLOCKS: usize = 20;

/// One replicate's value; `None` marks a replicate that failed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub replicate: u64,
    pub value: Option<f64>,
}

/// Labelled Monte Carlo sample with free-form string metadata.
///
/// Samples are kept in replicate order (what gets persisted and what
/// batch-means use); [`SampleBatch::values`] is the sorted view of the
/// present values.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    label: String,
    params: BTreeMap<String, String>,
    samples: Vec<Sample>,
    sorted: Vec<f64>,
}

impl SampleBatch {
    pub fn new(label: impl Into<String>, params: BTreeMap<String, String>, mut samples: Vec<Sample>) -> Self {
        samples.sort_by_key(|s| s.replicate);
        let mut sorted: Vec<f64> = samples.iter().filter_map(|s| s.value).collect();
        sorted.sort_by(f64::total_cmp);
        Self {
            label: label.into(),
            params,
            samples,
            sorted,
        }
    }

    /// Batch whose replicate indices are `0..values.len()`.
    pub fn from_values(label: impl Into<String>, values: Vec<f64>) -> Self {
        let samples = values
            .into_iter()
            .enumerate()
            .map(|(r, v)| Sample {
                replicate: r as u64,
                value: Some(v),
            })
            .collect();
        Self::new(label, BTreeMap::new(), samples)
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Present values, ascending.
    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Present values in replicate order.
    pub fn replicate_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().filter_map(|s| s.value)
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn missing(&self) -> usize {
        self.samples.len() - self.sorted.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSReport {
    #[serde(rename = "D")]
    pub d: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov survival function `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // Jacobi theta form of the CDF converges fast for small λ.
        let t = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda
            * (1..=20)
                .map(|k| (-((2 * k - 1) as f64).powi(2) * t).exp())
                .sum::<f64>();
        1.0 - cdf
    } else {
        2.0 * (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum::<f64>()
    };
    p.clamp(0.0, 1.0)
}

/// Exact sup-distance between the two ECDFs by a merge scan; tied values
/// are consumed from both sides before the gap is measured.
pub fn ks_two_sample(a: &SampleBatch, b: &SampleBatch) -> Result<KSReport> {
    let (xa, xb) = (a.values(), b.values());
    if xa.is_empty() || xb.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let effective = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    Ok(KSReport {
        d,
        n_a: na,
        n_b: nb,
        p_value: kolmogorov_sf(d * effective),
    })
}

/// Fraction of values `<= x`.
pub fn ecdf_eval(batch: &SampleBatch, x: f64) -> Result<f64> {
    let v = batch.values();
    if v.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(v.partition_point(|&y| y <= x) as f64 / v.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased.
    pub variance: f64,
    /// `m₃/m₂^{3/2}` from central sample moments.
    pub skewness: f64,
    /// Batch-means standard error of the mean; needs at least 20 values.
    pub mean_se: Option<f64>,
    /// Batch-means standard error of the variance; needs at least 40 values.
    pub variance_se: Option<f64>,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

fn block_se(stats: &[f64]) -> f64 {
    let (_, var) = mean_var(stats);
    (var / stats.len() as f64).sqrt()
}

pub fn moments(batch: &SampleBatch) -> Result<MomentSummary> {
    let xs: Vec<f64> = batch.replicate_values().collect();
    if xs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = xs.len();
    let (mean, variance) = mean_var(&xs);
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n as f64;
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };

    let block = n / MOMENT_BLOCKS;
    let (mut mean_se, mut variance_se) = (None, None);
    if block >= 1 {
        let blocks: Vec<(f64, f64)> = xs
            .chunks_exact(block)
            .take(MOMENT_BLOCKS)
            .map(mean_var)
            .collect();
        let means: Vec<f64> = blocks.iter().map(|b| b.0).collect();
        mean_se = Some(block_se(&means));
        if block >= 2 {
            let vars: Vec<f64> = blocks.iter().map(|b| b.1).collect();
            variance_se = Some(block_se(&vars));
        }
    }
    Ok(MomentSummary {
        count: n,
        mean,
        variance,
        skewness,
        mean_se,
        variance_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn batch(v: &[f64]) -> SampleBatch {
        SampleBatch::from_values("t", v.to_vec())
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a = batch(&[3.0, 1.0, 2.0]);
        assert_eq!(ks_two_sample(&a, &a).unwrap().d, 0.0);
        let b = batch(&[10.0, 20.0, 30.0]);
        assert_eq!(ks_two_sample(&a, &b).unwrap().d, 1.0);
    }

    #[test]
    fn ks_interleaved() {
        let a = batch(&[1.0, 2.0, 3.0]);
        let b = batch(&[1.5, 2.5, 3.5]);
        assert!((ks_two_sample(&a, &b).unwrap().d - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_ties_across_batches() {
        let a = batch(&[1.0, 2.0, 2.0, 3.0]);
        let b = batch(&[2.0, 2.0, 2.0, 2.0]);
        // After x = 1: 1/4 vs 0; after x = 2: 3/4 vs 1.
        assert!((ks_two_sample(&a, &b).unwrap().d - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ks_rejects_empty() {
        let empty = SampleBatch::new("e", BTreeMap::new(), vec![]);
        assert!(matches!(ks_two_sample(&empty, &batch(&[1.0])), Err(Error::EmptyBatch)));
    }

    #[test]
    fn kolmogorov_tail_values() {
        // P(K > 1.358) ≈ 0.05, P(K > 1.628) ≈ 0.01.
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.01).abs() < 5e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        // Both series agree at the switch point.
        let lo = kolmogorov_sf(1.18 - 1e-12);
        let hi = kolmogorov_sf(1.18);
        assert!((lo - hi).abs() < 1e-9);
    }

    #[test]
    fn moments_small_cases() {
        let m = moments(&batch(&[5.0, 5.0, 5.0, 5.0])).unwrap();
        assert_eq!((m.mean, m.variance, m.skewness), (5.0, 0.0, 0.0));
        let m = moments(&batch(&[0.0, 1.0])).unwrap();
        assert_eq!((m.mean, m.variance), (0.5, 0.5));
        let m = moments(&batch(&[-1.0, 0.0, 1.0])).unwrap();
        assert_eq!(m.skewness, 0.0);
        assert!(m.mean_se.is_none());
    }

    #[test]
    fn moments_standard_errors() {
        let xs: Vec<f64> = (0..400).map(|i| ((i * 37) % 101) as f64).collect();
        let m = moments(&batch(&xs)).unwrap();
        assert!(m.mean_se.unwrap() >= 0.0);
        assert!(m.variance_se.unwrap() >= 0.0);
        assert!(m.variance >= 0.0);
    }

    #[test]
    fn missing_values_are_excluded() {
        let samples = vec![
            Sample { replicate: 1, value: Some(2.0) },
            Sample { replicate: 0, value: None },
            Sample { replicate: 2, value: Some(1.0) },
        ];
        let b = SampleBatch::new("m", BTreeMap::new(), samples);
        assert_eq!(b.values(), &[1.0, 2.0]);
        assert_eq!(b.missing(), 1);
        assert_eq!(b.samples()[0].replicate, 0);
    }

    #[test]
    fn ecdf_cases() {
        let b = batch(&[1.0, 2.0, 3.0]);
        assert_eq!(ecdf_eval(&b, 0.0).unwrap(), 0.0);
        assert_eq!(ecdf_eval(&b, 4.0).unwrap(), 1.0);
        assert!((ecdf_eval(&b, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn ks_is_symmetric_and_bounded(
            a in proptest::collection::vec(-5.0f64..5.0, 1..60),
            b in proptest::collection::vec(-5.0f64..5.0, 1..60),
        ) {
            let (ba, bb) = (batch(&a), batch(&b));
            let d1 = ks_two_sample(&ba, &bb).unwrap().d;
            let d2 = ks_two_sample(&bb, &ba).unwrap().d;
            prop_assert_eq!(d1.to_bits(), d2.to_bits());
            prop_assert!((0.0..=1.0).contains(&d1));
            let r = ks_two_sample(&ba, &bb).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }

        #[test]
        fn ks_zero_iff_same_multiset(a in proptest::collection::vec(-3i32..3, 1..20), shift in 0usize..20) {
            let xs: Vec<f64> = a.iter().map(|&v| v as f64).collect();
            let mut rotated = xs.clone();
            let len = rotated.len();
            rotated.rotate_left(shift % len);
            prop_assert_eq!(ks_two_sample(&batch(&xs), &batch(&rotated)).unwrap().d, 0.0);
            let mut changed = xs.clone();
            changed[0] += 0.5;
            prop_assert!(ks_two_sample(&batch(&xs), &batch(&changed)).unwrap().d > 0.0);
        }

        #[test]
        fn ecdf_is_monotone_step(xs in proptest::collection::vec(-10.0f64..10.0, 1..50), probe in proptest::collection::vec(-12.0f64..12.0, 2..20)) {
            let b = batch(&xs);
            let mut probe = probe;
            probe.sort_by(f64::total_cmp);
            let m = xs.len() as f64;
            let mut prev = 0.0;
            for p in probe {
                let f = ecdf_eval(&b, p).unwrap();
                prop_assert!(f >= prev);
                prop_assert!(((f * m).round() - f * m).abs() < 1e-9);
                prev = f;
            }
            // Right-continuous at sample points: the value at a sample
            // point already includes that point.
            let x0 = b.values()[0];
            prop_assert!(ecdf_eval(&b, x0).unwrap() >= 1.0 / m);
        }
    }
}
