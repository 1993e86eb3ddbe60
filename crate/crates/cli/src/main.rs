use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use tubqi_cli::commands::{self, DecideFlags, Outcome, EXIT_INPUT};
use tubqi_core::Convention;

#[derive(Parser)]
#[command(name = "tubqi", version, about = "Decide quasi-isometry of tubular groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Example,
    Prose,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether two presentations give quasi-isometric groups.
    Decide {
        a: PathBuf,
        b: PathBuf,
        /// Print the JSON certificate instead of a report.
        #[arg(long)]
        json: bool,
        #[arg(long, value_name = "N")]
        max_candidates: Option<u64>,
        /// Wall-clock limit in seconds.
        #[arg(long, value_name = "S")]
        timeout: Option<f64>,
        #[arg(long, value_enum, default_value = "example")]
        convention: ConventionArg,
    },
    /// Dump patterns, symmetry groups, metrics, classes and the max slope.
    Inspect {
        a: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Replay a certificate's error bookkeeping on a finite ball.
    Witness {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value_t = 8)]
        radius: usize,
    },
}

fn run(cli: Cli) -> Result<Outcome> {
    Ok(match cli.command {
        Command::Decide {
            a,
            b,
            json,
            max_candidates,
            timeout,
            convention,
        } => {
            let timeout = match timeout {
                Some(s) if !(s.is_finite() && s >= 0.0) => {
                    return Ok(Outcome {
                        code: EXIT_INPUT,
                        stdout: String::new(),
                        stderr: format!("invalid --timeout {s}\n"),
                    })
                }
                Some(s) => Some(Duration::from_secs_f64(s)),
                None => None,
            };
            let flags = DecideFlags {
                json,
                max_candidates,
                timeout,
                convention: match convention {
                    ConventionArg::Example => Convention::Example,
                    ConventionArg::Prose => Convention::Prose,
                },
            };
            commands::decide(&a, &b, &flags)
        }
        Command::Inspect { a, json } => commands::inspect(&a, json),
        Command::Witness { a, b, cert, radius } => commands::witness(&a, &b, &cert, radius),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let out = match run(cli) {
        Ok(o) => o,
        Err(e) => Outcome {
            code: EXIT_INPUT,
            stdout: String::new(),
            stderr: format!("{e:#}\n"),
        },
    };
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
