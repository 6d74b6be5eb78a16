//! `arcsine-lab`: reproducible occupation-time experiments from the
//! command line.
//!
//! Exit codes: 0 pass, 1 statistical fail, 2 usage or configuration error,
//! 3 runtime error.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use arcsine_core::chain::ChainModel;
use arcsine_core::engine::{manifest_json, run_ensemble};
use arcsine_core::error::Error as CoreError;
use arcsine_core::experiments::{run_named, EXPERIMENT_NAMES};
use arcsine_core::fit::{fit_gas, FitOptions};
use arcsine_core::gas::GasParams;

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "arcsine-lab",
    about = "Occupation-time statistics of infinite-ergodic model systems",
    version
)]
struct Cli {
    /// Worker threads (affects speed only, never results)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory
    #[arg(long, global = true, default_value = "arcsine-out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw exact generalized arcsine samples to CSV
    SampleGas {
        #[arg(long)]
        alpha: f64,
        /// comma-separated weights, e.g. 0.2,0.3,0.5
        #[arg(long)]
        beta: String,
        #[arg(long, default_value_t = 10_000)]
        n_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run an ensemble described by a JSON config to CSV + manifest
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// overrides the config's seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact wandering-rate table of a multiray chain to CSV
    Wandering {
        /// comma-separated origin exit probabilities
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
    },
    /// Fit (alpha, beta) to an empirical-law CSV produced by `simulate`
    Fit {
        /// law.csv path
        #[arg(long)]
        law: PathBuf,
        /// fit raw ratios instead of renormalizing rows to unit sum
        #[arg(long)]
        raw_ratios: bool,
    },
    /// Run a named verification experiment end to end
    Verify {
        /// one of: boole-arcsine, chain-gas, cubic3-gas, tauberian, prop51,
        /// strong-conv, sampler-laplace
        name: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_err()
        {
            eprintln!("error: could not configure the thread pool");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify_error(&err))
        }
    }
}

/// Usage/config errors exit 2, runtime errors 3.
fn classify_error(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::Parameter(_) | CoreError::Config(_)) => 2,
        Some(_) => 3,
        // IO / JSON problems are configuration problems
        None => 2,
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::SampleGas { alpha, beta, n_samples, seed } => {
            cmd_sample_gas(&cli.out, *alpha, beta, *n_samples, *seed)
        }
        Command::Simulate { config, seed } => cmd_simulate(&cli.out, config, *seed),
        Command::Wandering { p, horizon } => cmd_wandering(&cli.out, p, *horizon),
        Command::Fit { law, raw_ratios } => cmd_fit(&cli.out, law, !*raw_ratios),
        Command::Verify { name } => cmd_verify(&cli.out, name),
    }
}

fn parse_weights(raw: &str) -> anyhow::Result<Vec<f64>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CoreError::Parameter(format!("'{tok}' is not a number")).into())
        })
        .collect()
}

fn write_out(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn write_manifest<T: Serialize>(dir: &Path, command: &str, echo: &T) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Manifest<'a, T> {
        artifact: &'static str,
        version: &'static str,
        command: &'a str,
        config: &'a T,
    }
    let manifest = Manifest {
        artifact: "arcsine-lab",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: echo,
    };
    write_out(dir, "manifest.json", &serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn cmd_sample_gas(
    out: &Path,
    alpha: f64,
    beta_raw: &str,
    n_samples: usize,
    seed: u64,
) -> anyhow::Result<ExitCode> {
    let beta = parse_weights(beta_raw)?;
    let params = GasParams::new(alpha, beta.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let d = params.dim();
    let mut csv = (1..=d).map(|j| format!("ratio_{j}")).collect::<Vec<_>>().join(",");
    csv.push('\n');
    let mut mean = vec![0.0f64; d];
    for _ in 0..n_samples {
        let s = params.sample(&mut rng);
        let row = s.ratios().iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        csv.push_str(&row);
        csv.push('\n');
        for (m, &x) in mean.iter_mut().zip(s.ratios()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n_samples as f64;
    }
    let path = write_out(out, "samples.csv", &csv)?;

    #[derive(Serialize)]
    struct Echo {
        alpha: f64,
        beta: Vec<f64>,
        n_samples: usize,
        seed: u64,
    }
    write_manifest(out, "sample-gas", &Echo { alpha, beta: beta.clone(), n_samples, seed })?;

    let deviation = mean
        .iter()
        .zip(&beta)
        .map(|(m, b)| (m - b).abs())
        .fold(0.0f64, f64::max);
    println!("wrote {} ({n_samples} samples)", path.display());
    println!("sample mean: {mean:?}");
    println!("max |mean - beta|: {deviation:.6}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(out: &Path, config_path: &Path, seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    cfg.expect_kind("simulate")?;
    if let Some(s) = seed {
        cfg.seed = Some(s);
    }
    let spec = cfg.to_ensemble_spec()?;
    let law = run_ensemble(&spec)?;
    let law_path = write_out(out, "law.csv", &law.to_csv())?;
    write_out(out, "manifest.json", &manifest_json(&spec))?;
    println!(
        "wrote {} ({} trajectories x {} checkpoints, {} restarts)",
        law_path.display(),
        law.n_traj(),
        law.checkpoints().len(),
        law.resample_events()
    );
    for s in law.junction_fraction_profile() {
        println!("n={}: junction fraction median {:.5}, p90 {:.5}", s.n, s.median, s.p90);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_wandering(out: &Path, p_raw: &str, horizon: usize) -> anyhow::Result<ExitCode> {
    let p = parse_weights(p_raw)?;
    let model = ChainModel::new(p.clone())?;
    let table = model.exact_survival(horizon)?;
    let path = write_out(out, "wandering.csv", &table.to_csv())?;

    #[derive(Serialize)]
    struct Echo {
        p: Vec<f64>,
        horizon: usize,
    }
    write_manifest(out, "wandering", &Echo { p, horizon })?;

    println!("wrote {} (horizon {horizon})", path.display());
    if horizon >= 1000 {
        let fit = table.regvar_index()?;
        println!("wandering-rate log-log slope {:.4} (alpha_hat {:.4})", fit.slope, fit.alpha_hat);
    }
    Ok(ExitCode::SUCCESS)
}

/// Reads a `law.csv` written by `simulate` and returns the ratio rows of
/// its largest checkpoint.
fn read_law_rows(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::Config("empty law file".to_string()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[0] != "trajectory_id" || cols[1] != "n" {
        return Err(CoreError::Config("not an empirical-law CSV".to_string()).into());
    }
    let d = cols.len() - 3;
    let mut max_n = 0u64;
    let mut rows: Vec<(u64, Vec<f64>)> = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(CoreError::Config(format!("ragged row: {line}")).into());
        }
        let n: u64 = fields[1].parse().map_err(|_| {
            CoreError::Config(format!("bad step count '{}'", fields[1]))
        })?;
        max_n = max_n.max(n);
        let ratios = fields[2..2 + d]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| CoreError::Config(format!("bad ratio in row: {line}")))?;
        rows.push((n, ratios));
    }
    Ok(rows.into_iter().filter(|(n, _)| *n == max_n).map(|(_, r)| r).collect())
}

fn cmd_fit(out: &Path, law_path: &Path, renormalize: bool) -> anyhow::Result<ExitCode> {
    let rows = read_law_rows(law_path)?;
    let fit = fit_gas(&rows, FitOptions { renormalize })?;
    write_out(out, "fit.json", &serde_json::to_string_pretty(&fit)?)?;

    #[derive(Serialize)]
    struct Echo<'a> {
        law: &'a Path,
        renormalize: bool,
    }
    write_manifest(out, "fit", &Echo { law: law_path, renormalize })?;

    println!("alpha_hat = {}", fit.alpha_hat);
    println!("beta_hat  = {:?}", fit.beta_hat);
    println!("degeneracy = {:?}, objective = {:.6e}", fit.degeneracy, fit.objective);
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(out: &Path, name: &str) -> anyhow::Result<ExitCode> {
    if !EXPERIMENT_NAMES.contains(&name) {
        let mut msg = format!("unknown experiment '{name}'; available:");
        for n in EXPERIMENT_NAMES {
            let _ = write!(msg, " {n}");
        }
        return Err(CoreError::Config(msg).into());
    }
    let report = run_named(name)?;
    print!("{}", report.render_text());
    write_out(out, "report.json", &serde_json::to_string_pretty(&report)?)?;
    write_manifest(out, "verify", &report.name)?;
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
