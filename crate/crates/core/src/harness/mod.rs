//! Seeded Monte Carlo runs, batch comparison and the constants / potential
//! diagnostics behind the command-line tool.
//!
//! Replicate `r` of a product run draws `B_p` from `split_stream(seed, 2r)`
//! and `B_q` from `split_stream(seed, 2r + 1)`; single-matrix and
//! Tracy-Widom runs use `split_stream(seed, r)`. Every replicate depends
//! only on its own substreams and results are gathered in replicate order,
//! so output files are identical for any worker count.

pub mod config;
pub mod persist;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::airy::sample_tw;
use crate::eig::{banded_largest_eig, tridiag_extreme_eig, EigConfig, Which};
use crate::ensemble::{laguerre_matrix, potential_path, sample_bidiagonal, EnsembleParams};
use crate::product::product_similarity;
use crate::scaling::{
    closed_form_beta_multiplier, closed_form_cn, coupled_scaling, product_statistic, single_scaling,
    ScalingConstants, SingleScaling,
};
use crate::stats::{ks_two_sample, moments, KSReport, MomentSummary, Sample, SampleBatch};
use crate::variates::split_stream;
use crate::{Error, Result};

pub use config::{ExperimentConfig, Mode, Settings};

/// Child of the `B_q` stream that seeds the Lanczos start vector.
pub const START_VECTOR_SUBSTREAM: u64 = 1 << 40;

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// Statistic `T` of product replicate `r`.
pub fn product_replicate(sc: &ScalingConstants, cfg: &EigConfig, seed: u64, r: u64) -> Result<f64> {
    let stream_p = split_stream(seed, 2 * r);
    let stream_q = split_stream(seed, 2 * r + 1);
    let b_p = sample_bidiagonal(EnsembleParams::new(sc.n, sc.p, sc.beta)?, &stream_p)?;
    let b_q = sample_bidiagonal(EnsembleParams::new(sc.n, sc.q, sc.beta)?, &stream_q)?;
    let s = product_similarity(&b_q, &laguerre_matrix(&b_p))?;
    let top = banded_largest_eig(&s, cfg, &stream_q.split(START_VECTOR_SUBSTREAM))?;
    Ok(product_statistic(top.value, sc))
}

/// `(λ_max − μ)/σ` of single-matrix replicate `r`.
pub fn single_replicate(ss: &SingleScaling, beta: f64, cfg: &EigConfig, seed: u64, r: u64) -> Result<f64> {
    let b = sample_bidiagonal(EnsembleParams::new(ss.n, ss.i, beta)?, &split_stream(seed, r))?;
    let top = tridiag_extreme_eig(&laguerre_matrix(&b), Which::Largest, cfg);
    Ok(ss.statistic(top))
}

/// Config echo written into reports. Excludes the output directory and
/// worker count, which do not affect results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub mode: Mode,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub beta: f64,
    pub reps: usize,
    pub seed: u64,
    pub tol: f64,
    pub mesh: f64,
    pub cutoff: f64,
}

impl From<&ExperimentConfig> for ConfigEcho {
    fn from(c: &ExperimentConfig) -> Self {
        Self {
            mode: c.mode,
            n: c.n,
            p: c.p,
            q: c.q,
            beta: c.beta,
            reps: c.reps,
            seed: c.seed,
            tol: c.tol,
            mesh: c.mesh,
            cutoff: c.cutoff,
        }
    }
}

/// A file written by a run, named relative to the report's directory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub workers: usize,
    pub wall_seconds: f64,
    pub seconds_per_replicate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<ScalingConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub single: Option<SingleScaling>,
    pub statistic: Option<MomentSummary>,
    pub failures: usize,
    pub failed_replicates: Vec<u64>,
    pub artifacts: Vec<Artifact>,
    /// Written to its own file so the report itself is reproducible.
    #[serde(skip)]
    pub timing: Timing,
    #[serde(skip)]
    pub batch: SampleBatch,
    #[serde(skip)]
    pub batch_path: PathBuf,
    #[serde(skip)]
    pub report_path: PathBuf,
}

fn run_samples(config: &ExperimentConfig) -> Result<(SampleBatch, Option<ScalingConstants>, Option<SingleScaling>)> {
    let cfg = config.eig_config()?;
    let label = config.label();
    let reps = config.reps as u64;
    let collect = |f: &(dyn Fn(u64) -> Result<f64> + Sync)| -> Vec<Sample> {
        (0..reps)
            .into_par_iter()
            .map(|r| Sample {
                replicate: r,
                value: f(r).ok(),
            })
            .collect()
    };

    let mut params = BTreeMap::new();
    params.insert("mode".to_string(), config.mode.name().to_string());
    params.insert("beta".to_string(), config.beta.to_string());
    params.insert("reps".to_string(), config.reps.to_string());
    params.insert("seed".to_string(), config.seed.to_string());

    Ok(match config.mode {
        Mode::Product => {
            let sc = coupled_scaling(config.n, config.p, config.q, config.beta)?;
            let samples = collect(&|r| product_replicate(&sc, &cfg, config.seed, r));
            for (k, v) in [
                ("n", config.n.to_string()),
                ("p", config.p.to_string()),
                ("q", config.q.to_string()),
                ("beta0", sc.effective_beta.to_string()),
                ("tol", config.tol.to_string()),
                ("generator", "beta-laguerre-product/lanczos".to_string()),
                ("statistic", "(lambda_max - center)/scale".to_string()),
            ] {
                params.insert(k.to_string(), v);
            }
            (SampleBatch::new(label, params, samples), Some(sc), None)
        }
        Mode::Single => {
            let ss = single_scaling(config.n, config.p)?;
            let samples = collect(&|r| single_replicate(&ss, config.beta, &cfg, config.seed, r));
            for (k, v) in [
                ("n", config.n.to_string()),
                ("p", config.p.to_string()),
                ("tol", config.tol.to_string()),
                ("generator", "beta-laguerre/sturm-bisection".to_string()),
                ("statistic", "(lambda_max - mu)/sigma".to_string()),
            ] {
                params.insert(k.to_string(), v);
            }
            (SampleBatch::new(label, params, samples), None, Some(ss))
        }
        Mode::TwReference => {
            let disc = config.airy()?;
            let samples = collect(&|r| sample_tw(&disc, &split_stream(config.seed, r)));
            for (k, v) in [
                ("mesh", config.mesh.to_string()),
                ("cutoff", config.cutoff.to_string()),
                ("generator", "stochastic-airy/sturm-bisection".to_string()),
                ("statistic", "-lambda_min".to_string()),
            ] {
                params.insert(k.to_string(), v);
            }
            (SampleBatch::new(label, params, samples), None, None)
        }
    })
}

/// Runs `config`, writing `<label>.csv`, `<label>.report.json` and
/// `<label>.timing.json` into `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let pool = thread_pool(config.workers)?;
    let start = Instant::now();
    let (batch, constants, single) = pool.install(|| run_samples(config))?;
    let wall = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&config.out)?;
    let label = config.label();
    let csv_name = format!("{label}.csv");
    let batch_path = config.out.join(&csv_name);
    let sha = persist::write_batch(&batch_path, &batch)?;

    let failed_replicates: Vec<u64> = batch
        .samples()
        .iter()
        .filter(|s| s.value.is_none())
        .map(|s| s.replicate)
        .collect();
    let report = RunReport {
        config: config.into(),
        constants,
        single,
        statistic: moments(&batch).ok(),
        failures: failed_replicates.len(),
        failed_replicates,
        artifacts: vec![Artifact {
            file: csv_name,
            sha256: sha,
        }],
        timing: Timing {
            workers: config.workers,
            wall_seconds: wall,
            seconds_per_replicate: wall / config.reps as f64,
        },
        batch,
        batch_path,
        report_path: config.out.join(format!("{label}.report.json")),
    };
    persist::write_json(&report.report_path, &report)?;
    persist::write_json(&config.out.join(format!("{label}.timing.json")), &report.timing)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchInfo {
    pub path: String,
    pub label: String,
    pub count: usize,
    pub missing: usize,
    pub sha256: String,
    pub params: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub a: BatchInfo,
    pub b: BatchInfo,
    pub ks: KSReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

fn batch_info(path: &Path, batch: &SampleBatch) -> Result<BatchInfo> {
    Ok(BatchInfo {
        path: path.display().to_string(),
        label: batch.label().to_string(),
        count: batch.len(),
        missing: batch.missing(),
        sha256: persist::sha256_file(path)?,
        params: batch.params().clone(),
    })
}

/// Two-sample KS comparison of two persisted batches. With `max_d`, the
/// report records whether `D < max_d`.
pub fn compare(a_path: &Path, b_path: &Path, max_d: Option<f64>) -> Result<CompareReport> {
    let a = persist::read_batch(a_path)?;
    let b = persist::read_batch(b_path)?;
    let ks = ks_two_sample(&a, &b)?;
    Ok(CompareReport {
        a: batch_info(a_path, &a)?,
        b: batch_info(b_path, &b)?,
        ks,
        max_d,
        pass: max_d.map(|t| ks.d < t),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsReport {
    #[serde(flatten)]
    pub constants: ScalingConstants,
    pub closed_form_cn: f64,
    pub closed_form_beta_multiplier: f64,
    /// `closed_form_cn / operator_scale³`; 1 when the closed form is the cube.
    pub closed_form_cn_over_cube: f64,
    pub notes: Vec<String>,
}

pub fn constants(n: usize, p: usize, q: usize, beta: f64) -> Result<ConstantsReport> {
    let sc = coupled_scaling(n, p, q, beta).map_err(|e| Error::Config(e.to_string()))?;
    let cn = closed_form_cn(n, p, q);
    let cap = closed_form_beta_multiplier(n, p, q);
    let cube = sc.operator_scale.powi(3);
    let mut notes = Vec::new();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    if rel(cn, sc.operator_scale) > 1e-12 {
        let relation = if rel(cn, cube) <= 1e-12 {
            "equals operator_scale^3 (cube relation)"
        } else {
            "matches neither operator_scale nor its cube"
        };
        notes.push(format!(
            "closed_form_cn = {cn} differs from operator_scale = {}; it {relation}",
            sc.operator_scale
        ));
    }
    if rel(cap, sc.beta_multiplier) > 1e-12 {
        notes.push(format!(
            "closed_form_beta_multiplier = {cap} differs from beta_multiplier = {} (they agree only when p = q); \
             beta_multiplier is used for effective_beta",
            sc.beta_multiplier
        ));
    }
    Ok(ConstantsReport {
        constants: sc,
        closed_form_cn: cn,
        closed_form_beta_multiplier: cap,
        closed_form_cn_over_cube: cn / cube,
        notes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PotentialRow {
    pub x: f64,
    pub mean: f64,
    pub stderr: f64,
    pub reference: f64,
}

/// Empirical mean and standard error of the potential path `y₁ + y₂` at
/// each grid point `x ≤ max_x`, against the limit drift `x²/2`.
pub fn diagnose_potential(
    n: usize,
    i: usize,
    beta: f64,
    reps: usize,
    seed: u64,
    max_x: f64,
) -> Result<Vec<PotentialRow>> {
    if reps < 2 {
        return Err(Error::Config("potential diagnostic needs reps >= 2".into()));
    }
    let params = EnsembleParams::new(n, i, beta).map_err(|e| Error::Config(e.to_string()))?;
    let sc = single_scaling(n, i).map_err(|e| Error::Config(e.to_string()))?;
    let grid_len = (0..n).take_while(|&k| (k + 1) as f64 / sc.m <= max_x).count();
    let paths = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let b = sample_bidiagonal(params, &split_stream(seed, r))?;
            let path = potential_path(&b, &sc)?;
            Ok(path.values()[..grid_len].to_vec())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;

    let m = reps as f64;
    Ok((0..grid_len)
        .map(|k| {
            let x = (k + 1) as f64 / sc.m;
            let mean = paths.iter().map(|p| p[k]).sum::<f64>() / m;
            let var = paths.iter().map(|p| (p[k] - mean).powi(2)).sum::<f64>() / (m - 1.0);
            PotentialRow {
                x,
                mean,
                stderr: (var / m).sqrt(),
                reference: 0.5 * x * x,
            }
        })
        .collect())
}

pub fn potential_csv(rows: &[PotentialRow], meta: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str("x,mean,stderr,reference\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.x, r.mean, r.stderr, r.reference));
    }
    out
}
