use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use corridor_cli::commands::{self, default_out_dir};
use corridor_cli::scenario_file::RunMode;

#[derive(Parser)]
#[command(
    name = "corridor",
    about = "Coordinated vs. signalized simulation of a two-intersection corridor",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Optimized,
    Baseline,
    Compare,
}

impl From<ModeArg> for RunMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Optimized => RunMode::Optimized,
            ModeArg::Baseline => RunMode::Baseline,
            ModeArg::Compare => RunMode::Compare,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one mode of a scenario and write its report tree.
    Run {
        /// Scenario file path or built-in preset name (e.g. mcity14).
        #[arg(long)]
        scenario: String,
        /// Output directory (default: $CORRIDOR_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's time step (s).
        #[arg(long)]
        dt: Option<f64>,
        /// Override the scenario's run mode.
        #[arg(long)]
        mode: Option<ModeArg>,
        /// Corrupt the recorded zone transits before auditing (testing aid).
        #[arg(long, hide = true)]
        inject_audit_fault: bool,
    },
    /// Run both modes and write the comparison report.
    Compare {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, hide = true)]
        inject_audit_fault: bool,
    },
    /// Parse and validate a scenario without running it.
    Validate {
        #[arg(long)]
        scenario: String,
    },
    /// Write a built-in preset as a scenario file (stdout without --out).
    EmitPreset {
        #[arg(long, default_value = "mcity14")]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> anyhow::Result<i32> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            dt,
            mode,
            inject_audit_fault,
        } => {
            let mut loaded = commands::resolve_scenario(&scenario)?;
            if let Some(dt) = dt {
                loaded.scenario.dt = dt;
            }
            let mode = mode.map(RunMode::from).unwrap_or(loaded.mode);
            let out = out.unwrap_or_else(default_out_dir);
            commands::run_command(mode, &loaded, &out, inject_audit_fault)
        }
        Command::Compare {
            scenario,
            out,
            dt,
            inject_audit_fault,
        } => {
            let mut loaded = commands::resolve_scenario(&scenario)?;
            if let Some(dt) = dt {
                loaded.scenario.dt = dt;
            }
            let out = out.unwrap_or_else(default_out_dir);
            commands::run_command(RunMode::Compare, &loaded, &out, inject_audit_fault)
        }
        Command::Validate { scenario } => {
            println!("{}", commands::validate_command(&scenario)?);
            Ok(0)
        }
        Command::EmitPreset { name, out } => {
            let text = commands::emit_preset(&name, out.as_deref())?;
            if out.is_none() {
                print!("{text}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
