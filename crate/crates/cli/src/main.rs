use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use icsim_cli::{run_attack, run_sweep, run_trials, HarnessError, SchemeHandle, CSV_HEADER};

/// Two-party interactive coding experiments: schemes, adversaries,
/// thresholds.
#[derive(Parser)]
#[command(name = "icsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SchemeArgs {
    /// Scheme name (exchange-quarter, exchange-two-sevenths,
    /// exchange-two-thirds, vote-unique, vote-list, vote-adaptive,
    /// block-unique, block-list, block-adaptive).
    #[arg(long)]
    scheme: String,
    /// Exchange bit width or tree depth (ignored by exchange-two-thirds).
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// The scheme's slack below its threshold.
    #[arg(long, default_value_t = 0.125)]
    eps: f64,
    /// Assert the scheme's mode (unique, list, adaptive, shared-rand,
    /// erasure); exits with a usage error on mismatch.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme at one error rate and print a result row.
    Simulate {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Channel error rate.
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        #[arg(long, default_value = "uniform")]
        adversary: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a rate-by-adversary grid and emit CSV.
    Sweep {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Comma-separated error rates.
        #[arg(long, value_delimiter = ',')]
        rates: Vec<f64>,
        /// Comma-separated adversary names.
        #[arg(long, value_delimiter = ',', default_value = "uniform")]
        adversaries: Vec<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a paired-setting attack and print its report. Exits 1 when the
    /// attack's gamble held but the claimed views differ.
    Attack {
        /// Attack name (quarter, third, two-sevenths, list-block,
        /// adaptive-list, erasure).
        #[arg(long)]
        attack: String,
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Channel error rate the attack runs at.
        #[arg(long)]
        rate: f64,
        /// The pinned party input for the quarter and third attacks.
        #[arg(long, default_value_t = 0)]
        x: u64,
        /// Monte-Carlo samples for probe-based attacks.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), std::io::Error> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn build_scheme(args: &SchemeArgs) -> Result<SchemeHandle, HarnessError> {
    let scheme = SchemeHandle::build(&args.scheme, args.n, args.eps)?;
    if let Some(mode) = &args.mode {
        scheme.check_mode(mode)?;
    }
    Ok(scheme)
}

fn run(cli: Cli) -> Result<u8, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Simulate {
            scheme,
            rate,
            adversary,
            trials,
            seed,
            out,
        } => {
            let handle = build_scheme(&scheme)?;
            let row = run_trials(&handle, scheme.n, scheme.eps, rate, &adversary, trials, seed)?;
            emit(&format!("{CSV_HEADER}\n{}\n", row.csv_line()), out.as_ref())?;
            Ok(0)
        }
        Command::Sweep {
            scheme,
            rates,
            adversaries,
            trials,
            seed,
            out,
        } => {
            let handle = build_scheme(&scheme)?;
            let csv = run_sweep(
                &handle,
                scheme.n,
                scheme.eps,
                &rates,
                &adversaries,
                trials,
                seed,
            )?;
            emit(&csv, out.as_ref())?;
            Ok(0)
        }
        Command::Attack {
            attack,
            scheme,
            rate,
            x,
            samples,
            seed,
        } => {
            let handle = build_scheme(&scheme)?;
            let report = run_attack(&attack, &handle, x, rate, seed, samples)?;
            println!("{report}");
            Ok(if report.ok() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
