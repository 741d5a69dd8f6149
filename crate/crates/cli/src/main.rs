//! `hill`: reproducible spectral experiments for Hill operators.
//!
//! Exit status is 0 when every check passes, 1 when a check fails and 2 for
//! usage or configuration errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Experiment, FileConfig, Overrides};

#[derive(Parser)]
#[command(name = "hill", version, about = "Spectral experiments for Hill operators with rough potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Periodic and Dirichlet spectrum with gaps and midpoints.
    Spectrum,
    /// Per-index reduction with dense-spectrum cross-checks and the gap sandwich.
    Reduce,
    /// Linearized Birkhoff coordinates, actions, frequencies and the torus flow.
    Flow,
    /// Acceptance suites: decay, sandwich, isospectral, airy-demo, or all.
    Verify,
}

#[derive(Args)]
struct Flags {
    /// TOML config with [potential], [model], [run] and [tolerances] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// zero | single-mode:c=C | power-law:amp=A,exp=E,band=B | random:m=M,band=B | coeffs:N=C,...
    #[arg(long, global = true)]
    potential: Option<String>,
    /// Galerkin half range.
    #[arg(long = "K", global = true)]
    k: Option<usize>,
    /// Regularity index of the sequence class.
    #[arg(long, global = true, allow_hyphen_values = true)]
    s: Option<f64>,
    /// trivial | poly:A | capped:A:EPS
    #[arg(long, global = true)]
    weight: Option<String>,
    /// Final time (KdV drift check and flow).
    #[arg(long, global = true, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Snapshot spacing for the flow.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random potentials.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Verification suite.
    #[arg(long, global = true)]
    suite: Option<String>,
    /// First index for reduce.
    #[arg(long, global = true)]
    n_min: Option<usize>,
    /// Last index for reduce.
    #[arg(long, global = true)]
    n_max: Option<usize>,
    /// Relative change applied to the oracle gap table before comparison.
    #[arg(long, global = true, allow_hyphen_values = true)]
    perturb_gap: Option<f64>,
}

fn resolve(flags: Flags) -> anyhow::Result<Experiment> {
    let file = match &flags.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let o = Overrides {
        potential: flags.potential,
        k: flags.k,
        s: flags.s,
        weight: flags.weight,
        t: flags.t,
        dt: flags.dt,
        out: flags.out,
        seed: flags.seed,
        suite: flags.suite,
        n_min: flags.n_min,
        n_max: flags.n_max,
        perturb_gap: flags.perturb_gap,
    };
    Experiment::resolve(file, o)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli.flags).and_then(|exp| match cli.command {
        Command::Spectrum => commands::spectrum::run(&exp),
        Command::Reduce => commands::reduce::run(&exp),
        Command::Flow => commands::flow::run(&exp),
        Command::Verify => commands::verify::run(&exp),
    });
    match result {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                eprintln!("FAIL {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
