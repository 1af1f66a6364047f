use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use betaprod::harness::{self, persist, ExperimentConfig, Mode, Settings};
use betaprod::Error;

#[derive(Parser)]
#[command(name = "betaprod", version, about = "Edge statistics of products of beta-Laguerre matrices")]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct GlobalFlags {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    p: Option<usize>,
    #[arg(long, global = true)]
    q: Option<usize>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Airy operator mesh width.
    #[arg(long, global = true)]
    mesh: Option<f64>,
    /// Airy operator domain length.
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    /// Relative eigenvalue tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the scaled top eigenvalue of products of two matrices.
    SampleProduct,
    /// Sample the scaled top eigenvalue of a single matrix (n x p).
    SampleSingle,
    /// Sample Tracy-Widom reference values from the stochastic Airy operator.
    SampleTw,
    /// Two-sample Kolmogorov-Smirnov comparison of two batch files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Exit with status 3 unless D < --max-d.
        #[arg(long)]
        assert: bool,
        #[arg(long, default_value_t = 0.12)]
        max_d: f64,
    },
    /// Print every scaling constant for (n, p, q, beta).
    Constants,
    /// Mean potential path of a single matrix against x^2/2.
    DiagnosePotential {
        /// Largest grid abscissa reported.
        #[arg(long, default_value_t = 3.0)]
        max_x: f64,
    },
}

impl GlobalFlags {
    fn settings(&self) -> Result<Settings, Error> {
        let flags = Settings {
            seed: self.seed,
            out: self.out.clone(),
            workers: self.workers,
            n: self.n,
            p: self.p,
            q: self.q,
            beta: self.beta,
            reps: self.reps,
            mesh: self.mesh,
            cutoff: self.cutoff,
            tol: self.tol,
        };
        Ok(match &self.config {
            Some(path) => Settings::from_file(path)?.overridden_by(&flags),
            None => flags,
        })
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn sample(mode: Mode, settings: &Settings) -> Result<ExitCode, Error> {
    let config = ExperimentConfig::resolve(mode, settings)?;
    let report = harness::run_experiment(&config)?;
    println!("{}", to_json(&report)?);
    eprintln!(
        "wrote {} and {} ({:.2}s on {} workers)",
        report.batch_path.display(),
        report.report_path.display(),
        report.timing.wall_seconds,
        report.timing.workers
    );
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let settings = cli.global.settings()?;
    match cli.command {
        Command::SampleProduct => sample(Mode::Product, &settings),
        Command::SampleSingle => sample(Mode::Single, &settings),
        Command::SampleTw => sample(Mode::TwReference, &settings),
        Command::Compare { a, b, assert, max_d } => {
            let report = harness::compare(&a, &b, Some(max_d))?;
            let text = to_json(&report)?;
            println!("{text}");
            if let Some(out) = &settings.out {
                std::fs::create_dir_all(out)?;
                let stem = |p: &PathBuf| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                persist::write_json(&out.join(format!("compare-{}-vs-{}.json", stem(&a), stem(&b))), &report)?;
            }
            if assert && report.pass != Some(true) {
                eprintln!("KS distance {} is not below {max_d}", report.ks.d);
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Constants => {
            let n = settings.n.unwrap_or(100);
            let p = settings.p.unwrap_or(n);
            let q = settings.q.unwrap_or(p);
            let report = harness::constants(n, p, q, settings.beta.unwrap_or(1.0))?;
            println!("{}", to_json(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::DiagnosePotential { max_x } => {
            let config = ExperimentConfig::resolve(Mode::Single, &settings)?;
            let pool = harness::thread_pool(config.workers)?;
            let rows = pool.install(|| {
                harness::diagnose_potential(config.n, config.p, config.beta, config.reps, config.seed, max_x)
            })?;
            let mut meta = BTreeMap::new();
            for (k, v) in [
                ("n", config.n.to_string()),
                ("i", config.p.to_string()),
                ("beta", config.beta.to_string()),
                ("reps", config.reps.to_string()),
                ("seed", config.seed.to_string()),
                ("max_x", max_x.to_string()),
            ] {
                meta.insert(k.to_string(), v);
            }
            let csv = harness::potential_csv(&rows, &meta);
            std::fs::create_dir_all(&config.out)?;
            let path = config.out.join(format!(
                "potential-n{}-i{}-beta{}-seed{}.csv",
                config.n, config.p, config.beta, config.seed
            ));
            std::fs::write(&path, &csv)?;
            let sup = rows.iter().map(|r| (r.mean - r.reference).abs()).fold(0.0, f64::max);
            println!("{}", serde_json::json!({ "file": path.display().to_string(), "points": rows.len(), "sup_abs_error": sup }));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParameter(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
