use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use curve_formation::campaign::{self, CampaignSpec};
use curve_formation::config::SimConfigFile;
use curve_formation::metrics::{self, RunMetrics};
use curve_formation::trajectory;
use curve_formation::Error;

/// Exit status when a run stopped on an estimator contradiction.
const EXIT_ABORTED: u8 = 2;

#[derive(Parser)]
#[command(version, about = "Formation control on closed curves from proximity measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation; writes trajectory_<seed>.csv and runs.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "CURVE_FORMATION_OUT", default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = metrics::DEFAULT_WINDOW)]
        window: usize,
    },
    /// Run a factorial campaign; writes runs.csv and summary.csv.
    Campaign {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, env = "CURVE_FORMATION_OUT", default_value = "out")]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Recompute metrics from a saved trajectory.
    Metrics {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = metrics::DEFAULT_WINDOW)]
        window: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            window,
        } => simulate(&config, seed, &out, window),
        Command::Campaign { spec, out, jobs } => run_campaign(&spec, &out, jobs),
        Command::Metrics { log, window } => show_metrics(&log, window),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn simulate(config: &Path, seed: Option<u64>, out: &Path, window: usize) -> Result<ExitCode, Error> {
    let mut config = SimConfigFile::load_config(config)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        message: e.to_string(),
    })?;
    let path = out.join(campaign::trajectory_file_name(config.seed));
    let (row, cause) = campaign::execute(&config, window, Some(&path))?;
    let mut buf = Vec::new();
    campaign::write_runs(std::slice::from_ref(&row), &mut buf)?;
    let runs = out.join("runs.csv");
    std::fs::write(&runs, buf).map_err(|e| Error::Io {
        path: runs.clone(),
        message: e.to_string(),
    })?;

    println!("trajectory: {}", path.display());
    print_metrics(&row.metrics(), config.target());
    if let Some(cause) = cause {
        eprintln!("aborted: {cause}");
        return Ok(ExitCode::from(EXIT_ABORTED));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_campaign(spec_path: &Path, out: &Path, jobs: usize) -> Result<ExitCode, Error> {
    let spec = CampaignSpec::load(spec_path)?;
    eprintln!("running {} simulations", spec.total_runs());
    let report = campaign::run_campaign(&spec, jobs, Some(out))?;
    report.write(out)?;

    println!(
        "{:>8} {:>8} {:>5} {:>8} {:>9} {:>10} {:>10} {:>9}",
        "K", "phi", "runs", "aborted", "unsettled", "mean eps/b", "max eps/b", "mean k5"
    );
    for c in &report.summary {
        let k5 = c.mean_k5.map_or_else(|| "NA".to_string(), |k| format!("{k:.1}"));
        println!(
            "{:>8} {:>8} {:>5} {:>8} {:>9} {:>10.4} {:>10.4} {:>9}",
            c.k_gain, c.phi, c.runs, c.aborted, c.not_settled, c.mean_eps_over_b, c.max_eps_over_b, k5
        );
    }
    println!("reports: {}", out.display());
    if report.any_aborted() {
        eprintln!("some runs aborted on an estimator contradiction");
        return Ok(ExitCode::from(EXIT_ABORTED));
    }
    Ok(ExitCode::SUCCESS)
}

fn show_metrics(log: &Path, window: usize) -> Result<ExitCode, Error> {
    let run = trajectory::read_trajectory(log)?;
    let m = RunMetrics::from_history(&run.history, window);
    println!("seed: {}", run.meta.seed);
    println!("steps: {}", run.history.series.len());
    print_metrics(&m, run.meta.target);
    let instants: Vec<String> = metrics::settling_instants(&run.history)
        .iter()
        .map(|k| k.map_or_else(|| "NA".to_string(), |k| k.to_string()))
        .collect();
    println!("pair settling instants: {}", instants.join(" "));
    if run.audit_failures > 0 {
        println!("audit failures: {} steps", run.audit_failures);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_metrics(m: &RunMetrics, target: f64) {
    println!("eps_hat: {} ({:.4} b)", m.eps_hat, m.eps_hat / target);
    match m.k5 {
        Some(k) => println!("k5: {k}"),
        None => println!("k5: not settled"),
    }
}
