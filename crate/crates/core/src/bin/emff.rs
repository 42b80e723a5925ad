//! Command-line front end. Log level is read from `EMFF_LOG`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use emff_core::harness::{self, presets, Mode, VerifyOptions};
use emff_core::HarnessError;

#[derive(Parser)]
#[command(
    name = "emff",
    version,
    about = "Electromagnetic formation flight simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV outputs.
    Simulate {
        /// Preset name or path to a TOML scenario.
        #[arg(long)]
        scenario: String,
        /// Overrides the scenario's dipole model.
        #[arg(long)]
        mode: Option<Mode>,
        /// Simulated duration, s.
        #[arg(long)]
        duration: Option<f64>,
        /// Overrides the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant checks.
    Verify {
        /// Also write the report to `<dir>/verify.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
}

fn simulate(
    scenario: &str,
    mode: Option<Mode>,
    duration: Option<f64>,
    seed: Option<u64>,
    out: &std::path::Path,
) -> Result<(), HarnessError> {
    let mut cfg = harness::load_scenario(scenario)?;
    if let Some(m) = mode {
        cfg.mode = m;
    }
    if let Some(d) = duration {
        cfg.duration_s = d;
    }
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    cfg.validate()?;
    let metrics = harness::run_scenario(&cfg)?;
    for f in harness::write_csv(&metrics, out)? {
        println!("wrote {}", f.display());
    }
    print!("{}", harness::output::summary_text(&metrics));
    Ok(())
}

fn verify(out: Option<&std::path::Path>) -> Result<bool, HarnessError> {
    let report = harness::verify(&VerifyOptions::default())?;
    print!("{report}");
    if let Some(dir) = out {
        let io = |source| HarnessError::Io {
            path: dir.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("verify.txt"), report.to_string()).map_err(io)?;
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EMFF_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            scenario,
            mode,
            duration,
            seed,
            out,
        } => simulate(&scenario, mode, duration, seed, &out).map(|_| true),
        Command::Verify { out } => verify(out.as_deref()),
        Command::Presets {
            action: PresetAction::List,
        } => {
            for (name, about, _) in presets::PRESETS {
                println!("{name:<24}{about}");
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
