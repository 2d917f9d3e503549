use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robustbound::config::{run, AnalysisConfig, Command, CommandOutput};
use robustbound::{Error, Tolerance};

#[derive(Parser)]
#[command(
    name = "robustbound",
    version,
    about = "Quadratic-constraint certification of feedback loops"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Check the quadratic constraint on G, searching for N if none is given
    Check(Flags),
    /// Print the closed-loop gain bound for (M, N)
    Gain(Flags),
    /// Build signals that defeat a target gain
    Worstcase(Flags),
    /// Build a linear Phi through an anchor pair
    Interpolate(Flags),
    /// Simulate a discrete-time loop over an input bank
    Simulate(Flags),
}

#[derive(clap::Args)]
struct Flags {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the absolute tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Directory for report.txt, report.json and artifact files
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print the JSON report instead of text
    #[arg(long)]
    json: bool,
}

fn execute(command: Command, flags: &Flags) -> robustbound::Result<CommandOutput> {
    let path = flags.config.clone().ok_or_else(|| Error::Config {
        field: "--config".into(),
        message: "required".into(),
    })?;
    let mut cfg = AnalysisConfig::load(&path)?;
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(abs) = flags.tol {
        let base = cfg.tol();
        cfg.tolerance = Some(Tolerance::new(abs, base.rel));
    }
    let out = run(command, &cfg)?;
    if let Some(dir) = &flags.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), &out.text)?;
        std::fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&out.json).expect("json values serialize") + "\n",
        )?;
        for (name, contents) in &out.files {
            std::fs::write(dir.join(name), contents)?;
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.verb {
        Verb::Check(f) => (Command::Check, f),
        Verb::Gain(f) => (Command::Gain, f),
        Verb::Worstcase(f) => (Command::Worstcase, f),
        Verb::Interpolate(f) => (Command::Interpolate, f),
        Verb::Simulate(f) => (Command::Simulate, f),
    };
    match execute(command, &flags) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe (e.g. `| head`) is not an analysis failure
            let _ = if flags.json {
                writeln!(
                    stdout,
                    "{}",
                    serde_json::to_string_pretty(&out.json).expect("json values serialize")
                )
            } else {
                write!(stdout, "{}", out.text)
            };
            ExitCode::from(out.outcome.exit_code() as u8)
        }
        Err(e) => {
            if flags.json {
                println!("{}", serde_json::json!({ "status": "error", "message": e.to_string() }));
            }
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
