mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Globals;

#[derive(Debug, Parser)]
#[command(name = "duffkg", version, about = "Fate certification for the damped Duffing and Klein-Gordon equations")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Relative tolerance of the adaptive integrator.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Integration horizon (ODE budget, or KG run length).
    #[arg(long, global = true)]
    t_max: Option<f64>,
    /// Seed for randomized seeds and perturbations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key = value` file with defaults for the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl GlobalArgs {
    fn resolve(&self) -> duffing_kg::Result<Globals> {
        let flags = Globals {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            t_max: self.t_max,
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
        };
        let file = match &self.config {
            Some(p) => config::load(p)?,
            None => Globals::default(),
        };
        Ok(flags.over(file))
    }
}

#[derive(Debug, Clone, Copy, Args)]
#[command(allow_negative_numbers = true)]
pub struct Datum {
    #[arg(long)]
    pub u0: f64,
    #[arg(long)]
    pub u1: f64,
}

#[derive(Debug, Clone, Copy, Args)]
#[command(allow_negative_numbers = true)]
pub struct TorusArgs {
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Side length of the torus.
    #[arg(long = "L", default_value_t = 8.0)]
    pub side: f64,
    /// Points per axis (power of two).
    #[arg(long, default_value_t = 128)]
    pub n: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory and write it as CSV.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[command(flatten)]
        datum: Datum,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
    },
    /// Certify the fate of one initial datum.
    #[command(allow_negative_numbers = true)]
    Classify {
        #[command(flatten)]
        datum: Datum,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
    },
    /// Fate map over a window of initial data (CSV, optional PGM).
    #[command(allow_negative_numbers = true)]
    Basin {
        #[arg(long, default_value_t = -3.0)]
        u_min: f64,
        #[arg(long, default_value_t = 3.0)]
        u_max: f64,
        #[arg(long, default_value_t = -3.0)]
        v_min: f64,
        #[arg(long, default_value_t = 3.0)]
        v_max: f64,
        #[arg(long, default_value_t = 300)]
        nx: usize,
        #[arg(long, default_value_t = 300)]
        ny: usize,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Also write the map as a binary PGM.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Critical damping(s) for data with E > 1/4.
    #[command(allow_negative_numbers = true)]
    CriticalGamma {
        #[command(flatten)]
        datum: Datum,
        #[arg(long, default_value_t = 1e-8)]
        width: f64,
    },
    /// Critical velocity U1 for data (-1, u1).
    CriticalU1 {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-8)]
        width: f64,
    },
    /// Integrate the KG equation and write the diagnostics as CSV.
    #[command(allow_negative_numbers = true)]
    KgRun {
        #[command(flatten)]
        torus: TorusArgs,
        /// Constant initial data (ignored with --init).
        #[arg(long, default_value_t = 0.0)]
        u0: f64,
        #[arg(long, default_value_t = 0.0)]
        u1: f64,
        /// Initial state from a snapshot file.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.1)]
        sample_dt: f64,
        /// Write the final state as a snapshot.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Search for a ground state and report its level.
    KgGround {
        #[command(flatten)]
        torus: TorusArgs,
        #[arg(long, default_value_t = 16)]
        seeds: usize,
        /// Write the ground state as a snapshot.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Nehari point 1 + h near the constant state.
    #[command(allow_negative_numbers = true)]
    KgWitness {
        #[command(flatten)]
        torus: TorusArgs,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
    },
    /// Certified KG fate of perturbed constant data.
    #[command(allow_negative_numbers = true)]
    KgFate {
        #[command(flatten)]
        torus: TorusArgs,
        #[command(flatten)]
        datum: Datum,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Energy norm of the random perturbation.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Known upper bound for the ground-state level (computed if absent).
        #[arg(long)]
        d_upper: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> duffing_kg::Result<()> {
    let g = cli.global.resolve()?;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(duffing_kg::Error::InvalidParameter("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| duffing_kg::Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    use commands as c;
    match cli.command {
        Command::Simulate { datum, gamma } => c::simulate(&g, datum, gamma),
        Command::Classify { datum, gamma } => c::classify(&g, datum, gamma),
        Command::Basin { u_min, u_max, v_min, v_max, nx, ny, gamma, pgm } => {
            c::basin(&g, [u_min, u_max, v_min, v_max], nx, ny, gamma, pgm.as_deref())
        }
        Command::CriticalGamma { datum, width } => c::critical_gamma(&g, datum, width),
        Command::CriticalU1 { gamma, width } => c::critical_u1(&g, gamma, width),
        Command::KgRun { torus, u0, u1, init, gamma, sample_dt, snapshot } => {
            c::kg_run(&g, torus, (u0, u1), init.as_deref(), gamma, sample_dt, snapshot.as_deref())
        }
        Command::KgGround { torus, seeds, snapshot } => c::kg_ground(&g, torus, seeds, snapshot.as_deref()),
        Command::KgWitness { torus, beta } => c::kg_witness(&g, torus, beta),
        Command::KgFate { torus, datum, gamma, eps, d_upper } => c::kg_fate(&g, torus, datum, gamma, eps, d_upper),
    }
}
