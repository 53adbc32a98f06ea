use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use hydrostat::fit::FitPoint;
use hydrostat::sweep::{fits_csv, parse_csv};
use hydrostat::verify::{run_suite, Suite};
use hydrostat::{fit_rate, run_sweep, save_snapshot, ConfigFile};
use hydrostat_core::solvers::run_simulation;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hydrostat", version, about = "Hydrostatic-limit simulations and rate sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and print time, L2 and H1 norms as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshot_out: Option<PathBuf>,
    },
    /// Run a parameter sweep and write results.csv and fits.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write one log-log SVG per norm.
        #[arg(long)]
        plots: bool,
    },
    /// Run a verification suite; exits non-zero if any check fails.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
    },
    /// Fit a power law to one norm of a results CSV.
    Fit {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        norm: String,
    },
}

fn main() -> anyhow::Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config, snapshot_out } => {
            let cfg = ConfigFile::read(&config).with_context(|| format!("reading {}", config.display()))?;
            let sim = cfg.sim_config()?;
            let rec = run_simulation(&sim)?;
            println!("time,l2,h1");
            for s in &rec.samples {
                println!("{:?},{:?},{:?}", s.time, s.l2, s.h1);
            }
            if let Some(t) = rec.blowup {
                eprintln!("blowup at t = {t}");
            }
            if let Some(path) = snapshot_out {
                save_snapshot(&rec.final_state, &path)?;
            }
        }
        Command::Sweep { config, out, plots } => {
            let file = ConfigFile::read(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = file.sweep_config()?;
            cfg.out_dir = Some(out.clone());
            cfg.plots |= plots;
            let result = run_sweep(&cfg)?;
            print!("{}", fits_csv(&result.fits));
            match result.blowup_threshold {
                Some(e) => eprintln!("no blowup for eps <= {e}"),
                None => eprintln!("blowup at the smallest eps"),
            }
            for (p, e) in &result.failures {
                eprintln!("FAILED eps = {} delta = {}: {e}", p.eps, p.delta);
            }
            if !result.failures.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Verify { suite } => {
            let checks = run_suite(suite);
            for c in &checks {
                println!("{c}");
            }
            if checks.iter().any(|c| !c.passed) {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Fit { csv, norm } => {
            let text = std::fs::read_to_string(&csv).with_context(|| format!("reading {}", csv.display()))?;
            let rows = parse_csv(&text)?;
            let pts: Vec<FitPoint> = rows
                .iter()
                .filter(|r| r.norm_name == norm && !r.failed)
                .map(|r| FitPoint { h: r.h(), value: r.value, blowup: r.blowup })
                .collect();
            if pts.is_empty() {
                bail!("no rows for norm '{norm}'");
            }
            let f = fit_rate(&pts, true)?;
            println!("slope,intercept,r2,points");
            println!("{:?},{:?},{:?},{}", f.slope, f.intercept, f.r2, f.points);
        }
    }
    Ok(ExitCode::SUCCESS)
}
