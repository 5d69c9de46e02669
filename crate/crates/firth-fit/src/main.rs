use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use firth_fit::cli::{run, to_json_string, RunSpec};
use firth_fit::LinkKind;

#[derive(Parser)]
#[command(
    name = "firth-fit",
    version,
    about = "Jeffreys-prior penalized binomial regression with separation diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a binomial regression from a CSV file (header: y,m,x1,...,xp)
    Fit {
        /// Input CSV path
        input: PathBuf,
        /// Link function: logit, probit, or cloglog
        #[arg(long, default_value = "logit")]
        link: String,
        /// Maximize the plain likelihood instead of the penalized one
        #[arg(long)]
        no_penalty: bool,
        /// Gradient infinity-norm tolerance
        #[arg(long)]
        tol: Option<f64>,
        /// Iteration cap
        #[arg(long)]
        max_iter: Option<usize>,
        /// Write the JSON document here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report whether the data are completely or quasi-completely separated
    CheckSeparation {
        /// Input CSV path
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical verification suite and report every check
    Verify {
        /// Seed for all randomized scans and scenarios
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn build_spec(command: Command) -> Result<RunSpec, String> {
    match command {
        Command::Fit {
            input,
            link,
            no_penalty,
            tol,
            max_iter,
            out,
        } => {
            let link: LinkKind = link.parse().map_err(|e| format!("{e}"))?;
            if let Some(t) = tol {
                if !(t > 0.0) {
                    return Err("--tol must be positive".to_string());
                }
            }
            if let Some(mi) = max_iter {
                if mi == 0 {
                    return Err("--max-iter must be positive".to_string());
                }
            }
            let mut spec = RunSpec::fit(input.to_string_lossy());
            spec.link = link;
            spec.penalized = !no_penalty;
            if let Some(t) = tol {
                spec.tol = t;
            }
            if let Some(mi) = max_iter {
                spec.max_iter = mi;
            }
            spec.out = out.map(|p| p.to_string_lossy().into_owned());
            Ok(spec)
        }
        Command::CheckSeparation { input, out } => {
            let mut spec = RunSpec::check_separation(input.to_string_lossy());
            spec.out = out.map(|p| p.to_string_lossy().into_owned());
            Ok(spec)
        }
        Command::Verify { seed, out } => {
            let mut spec = RunSpec::verify(seed);
            spec.out = out.map(|p| p.to_string_lossy().into_owned());
            Ok(spec)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match build_spec(cli.command) {
        Ok(spec) => spec,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let output = match run(&spec) {
        Ok(output) => output,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    let json = match to_json_string(&output.record) {
        Ok(json) => json,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    // Single complete write; never partial JSON.
    match &spec.out {
        Some(path) => {
            if let Err(err) = std::fs::write(path, format!("{json}\n")) {
                eprintln!("error: cannot write {path}: {err}");
                return ExitCode::from(2);
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(json.as_bytes()).is_err() || stdout.write_all(b"\n").is_err() {
                return ExitCode::from(2);
            }
        }
    }
    eprintln!("{}", output.summary);
    ExitCode::from(output.exit_code as u8)
}
