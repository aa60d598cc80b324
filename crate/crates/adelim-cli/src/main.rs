use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "adelim", version, about = "Adiabatic elimination: figure data and verification runs")]
struct Cli {
    /// TOML file with run parameters; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance of the PSD-based verdicts.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sign of D for a qutrit over a (Omega, Delta) grid.
    QuditDScan {
        /// Points per axis, overriding both grid sizes.
        #[arg(long)]
        points: Option<usize>,
        /// Also write a sign-of-D heatmap.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Fourth-order qubit rates of the JC model, closed form against the engine.
    JcReport {
        #[arg(long)]
        g: Option<f64>,
        #[arg(long)]
        n_th: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta_a: Option<f64>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Exact reduced evolution of the dispersive qudit.
    ExactMaster,
    /// Largest diagonal-gauge scaling u keeping the assignment positive.
    GaugeUmax,
    /// Kraus feasibility of a qubit map spectrum, e.g. `wpg 1 0.9 0.9 0.7`.
    Wpg {
        #[arg(num_args = 4, required = true, allow_negative_numbers = true)]
        eigenvalues: Vec<String>,
    },
    /// Runs the acceptance criteria and prints one PASS/FAIL line each.
    Verify {
        /// Criterion numbers to run; all when empty.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::QuditDScan { .. } => "qudit-d-scan",
            Command::JcReport { .. } => "jc-report",
            Command::ExactMaster => "exact-master",
            Command::GaugeUmax => "gauge-umax",
            Command::Wpg { .. } => "wpg",
            Command::Verify { .. } => "verify",
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.command = cli.command.name().to_string();
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.display().to_string());
    }
    match &cli.command {
        Command::QuditDScan { points, svg } => {
            if let Some(n) = points {
                cfg.d_scan.omega_points = *n;
                cfg.d_scan.delta_points = *n;
            }
            if let Some(p) = svg {
                cfg.d_scan.svg = Some(p.display().to_string());
            }
        }
        Command::JcReport { g, n_th, delta_a, n_max } => {
            cfg.jc.g = g.unwrap_or(cfg.jc.g);
            cfg.jc.n_th = n_th.unwrap_or(cfg.jc.n_th);
            cfg.jc.delta_a = delta_a.unwrap_or(cfg.jc.delta_a);
            cfg.jc.n_max = n_max.unwrap_or(cfg.jc.n_max);
        }
        _ => {}
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = effective_config(&cli)?;
    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global()
            .context("building the worker pool")?;
    }
    // The body is built in memory so a failing run leaves no partial file.
    let mut body = Vec::new();
    let mut ok = true;
    match &cli.command {
        Command::QuditDScan { .. } => commands::qudit_d_scan(&cfg, &mut body)?,
        Command::JcReport { .. } => commands::jc_report(&cfg, &mut body)?,
        Command::ExactMaster => commands::exact_master(&cfg, &mut body)?,
        Command::GaugeUmax => commands::gauge_umax(&cfg, &mut body)?,
        Command::Wpg { eigenvalues } => commands::wpg(commands::parse_spectrum(eigenvalues)?, &mut body)?,
        Command::Verify { only } => {
            let failed = commands::run_verify(only, &mut body)?;
            writeln!(body, "# failed: {failed}")?;
            ok = failed == 0;
        }
    }
    let mut w: Box<dyn Write> = match &cfg.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {p}"))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    output::write_metadata(&mut w, &cfg)?;
    w.write_all(&body)?;
    w.flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
