//! `cransim` command-line interface: run one scheme, sweep a parameter, or
//! compare schemes on shared random streams.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cransim::config::ScenarioConfig;
use cransim::output::{write_run_outputs, write_sweep, Emit};
use cransim::schemes::Scheme;
use cransim::sim::{run_simulation, sweep, RunOutput};
use cransim::Error;

#[derive(Parser)]
#[command(name = "cransim", version, about = "Downlink NOMA / MU-MIMO small-cell simulator with JT-CoMP clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Scenario config file (TOML); defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (first run).
    #[arg(long)]
    seed: Option<u64>,
    /// Clustering scheme: no_comp | sc | gc | game.
    #[arg(long)]
    scheme: Option<String>,
    /// Number of RRHs.
    #[arg(long)]
    rrhs: Option<usize>,
    /// TTIs per run.
    #[arg(long)]
    ttis: Option<u32>,
    /// Number of runs (seeds seed..seed+runs).
    #[arg(long)]
    runs: Option<u32>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Which tables to write: summary | per-tti | both.
    #[arg(long, default_value = "summary")]
    emit: String,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scheme.
    Run {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Sweep one numeric config field and tabulate aggregates.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Config field to sweep (e.g. d_f, edge_fraction, rrh_count).
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Run several schemes on identical random streams.
    Compare {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated schemes (default: all four).
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<String>,
    },
}

fn load_config(o: &Overrides) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &o.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(scheme) = &o.scheme {
        cfg.scheme = scheme.parse()?;
    }
    if let Some(rrhs) = o.rrhs {
        cfg.rrh_count = rrhs;
    }
    if let Some(ttis) = o.ttis {
        cfg.ttis = ttis;
    }
    if let Some(runs) = o.runs {
        cfg.runs = runs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_batch(cfg: &ScenarioConfig) -> Result<Vec<RunOutput>, Error> {
    (0..cfg.runs)
        .map(|r| {
            let mut c = cfg.clone();
            c.seed = cfg.seed + r as u64;
            run_simulation(&c)
        })
        .collect()
}

fn main_inner() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { overrides } => {
            let cfg = load_config(&overrides)?;
            let emit: Emit = overrides.emit.parse()?;
            let started = Instant::now();
            let outputs = run_batch(&cfg)?;
            write_run_outputs(&overrides.out, &cfg, &outputs, emit, started.elapsed().as_secs_f64())?;
            for (i, out) in outputs.iter().enumerate() {
                let s = &out.summary;
                println!(
                    "run {i} seed {} scheme {}: avg edge {:.0} bps, avg non-edge {:.0} bps, avg coalition size {:.2}",
                    s.seed, s.scheme, s.avg_edge_bps, s.avg_nonedge_bps, s.avg_coalition_size
                );
            }
            println!("wrote {}", overrides.out.display());
        }
        Command::Sweep { overrides, axis, values } => {
            if values.is_empty() {
                return Err(Error::invalid_config("sweep needs at least one value"));
            }
            let cfg = load_config(&overrides)?;
            let table = sweep(&cfg, &axis, &values)?;
            write_sweep(&overrides.out, &cfg, &table)?;
            for row in &table.rows {
                println!(
                    "{axis} = {}: avg coalition size {:.2}, edge {:.0} bps, non-edge {:.0} bps",
                    row.value, row.avg_coalition_size, row.avg_edge_bps, row.avg_nonedge_bps
                );
            }
            println!("wrote {}", overrides.out.join("sweep.csv").display());
        }
        Command::Compare { overrides, schemes } => {
            let cfg = load_config(&overrides)?;
            let emit: Emit = overrides.emit.parse()?;
            let schemes: Vec<Scheme> = if schemes.is_empty() {
                Scheme::all().to_vec()
            } else {
                schemes.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
            };
            let mut compare = String::from(
                "scheme,avg_edge_bps,avg_nonedge_bps,avg_all_bps,pct_inst_decreased,\
avg_coalition_size,avg_iterations\n",
            );
            for scheme in schemes {
                let mut c = cfg.clone();
                c.scheme = scheme;
                let started = Instant::now();
                let outputs = run_batch(&c)?;
                let dir = overrides.out.join(scheme.name());
                write_run_outputs(&dir, &c, &outputs, emit, started.elapsed().as_secs_f64())?;
                let n = outputs.len() as f64;
                let mean = |f: &dyn Fn(&RunOutput) -> f64| {
                    outputs.iter().map(|o| f(o)).sum::<f64>() / n
                };
                compare.push_str(&format!(
                    "{},{:.1},{:.1},{:.1},{:.3},{:.4},{:.2}\n",
                    scheme,
                    mean(&|o| o.summary.avg_edge_bps),
                    mean(&|o| o.summary.avg_nonedge_bps),
                    mean(&|o| o.summary.avg_all_bps),
                    mean(&|o| o.summary.pct_inst_decreased),
                    mean(&|o| o.summary.avg_coalition_size),
                    mean(&|o| o.summary.avg_iterations),
                ));
                println!("scheme {scheme}: wrote {}", dir.display());
            }
            std::fs::create_dir_all(&overrides.out)?;
            std::fs::write(overrides.out.join("compare.csv"), compare)?;
            println!("wrote {}", overrides.out.join("compare.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
