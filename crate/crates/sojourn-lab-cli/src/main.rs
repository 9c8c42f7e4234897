//! Command-line front end: pick a scenario, point it at a TOML config, get a
//! JSON report plus optional CSV tables and a process exit code that states
//! the verdict. 0 means every bound check passed, 1 means at least one
//! certified bound failed its gate, 2 means the config never parsed, 3 means
//! a solver or I/O step gave up before producing a verdict.

mod config;
mod error;
mod report;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sha2::{Digest, Sha256};

use error::Failure;
use scenarios::{Ctx, ScenarioOutcome};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioKind {
    /// Energy width of a Lorentzian line, solved and closed form.
    Width,
    /// Truncated sojourn integral against the width lower bound.
    Sojourn,
    /// Coupling sweep of the flat-band decay width with eta extrapolation.
    FgrSweep,
    /// Periodically driven decay: lifting identity, averaged sojourn bound.
    Floquet,
    /// Dressed-potential width against the lifted rate, gauge equivalence.
    AcStark,
    /// Two-channel bound state: rate identity and sojourn bound.
    Multistate,
    /// Built-in certification suite over randomized and closed-form cases.
    Verify,
}

#[derive(Parser)]
#[command(
    name = "sojourn-lab",
    version,
    about = "Certified sojourn-time and resonance-width calculations"
)]
struct Cli {
    /// Scenario to run.
    #[arg(value_enum)]
    scenario: ScenarioKind,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for scenarios with randomized suites; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: &Cli) -> Result<ScenarioOutcome, Failure> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::Config(format!("reading {}: {e}", cli.config.display())))?;
    let sha = Sha256::digest(text.as_bytes());
    let ctx = Ctx {
        out_override: cli.out.clone(),
        config_sha256: sha.iter().map(|b| format!("{b:02x}")).collect(),
        seed: cli.seed,
    };
    match cli.scenario {
        ScenarioKind::Width => scenarios::run_width(&text, &ctx),
        ScenarioKind::Sojourn => scenarios::run_sojourn(&text, &ctx),
        ScenarioKind::FgrSweep => scenarios::run_fgr_sweep(&text, &ctx),
        ScenarioKind::Floquet => scenarios::run_floquet(&text, &ctx),
        ScenarioKind::AcStark => scenarios::run_ac_stark(&text, &ctx),
        ScenarioKind::Multistate => scenarios::run_multistate(&text, &ctx),
        ScenarioKind::Verify => scenarios::run_verify(&text, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) if outcome.ok => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("error: bound checks failed: {}", outcome.failed.join(", "));
            ExitCode::from(1)
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
