mod args;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde::de::DeserializeOwned;

use repshare_core::service::format::{compare_csv, mc_csv, power_csv, profile_csv, thresholds_csv, to_json};
use repshare_core::service::{
    run_compare, run_error_profile, run_mc_validate, run_power, run_thresholds, Output,
};
use repshare_core::Error;

use args::{Cli, Command, Format};

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

const THREADS_ENV: &str = "SHARED_CTRL_THREADS";

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() { EXIT_INVALID } else { EXIT_NUMERICAL };
        Self { code, message: e.to_string() }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::invalid(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::invalid(format!("cannot configure {n} threads: {e}")))
}

fn read_request<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

/// The request from `--input` when given, otherwise from flags.
fn request<T: DeserializeOwned>(
    input: Option<&Path>,
    flags_used: bool,
    from_flags: impl FnOnce() -> Result<T, Failure>,
) -> Result<T, Failure> {
    match input {
        Some(_) if flags_used => Err(Failure::invalid("give either --input or request flags, not both")),
        Some(p) => read_request(p),
        None => from_flags(),
    }
}

struct Rendered {
    body: String,
    warnings: Vec<String>,
    passed: bool,
}

fn render<T>(out: Output<T>, format: Format, csv: fn(&T) -> String, json: fn(&T) -> String) -> Rendered {
    let body = match format {
        Format::Csv => csv(&out.result),
        Format::Json => json(&out.result) + "\n",
    };
    Rendered { body, warnings: out.warnings, passed: true }
}

fn run(cli: &Cli) -> Result<Rendered, Failure> {
    let input = cli.input.as_deref();
    match &cli.command {
        Command::Thresholds(a) => {
            let req = request(input, a.any_flag(), || a.to_request())?;
            let fmt = cli.format.unwrap_or(Format::Json);
            Ok(render(run_thresholds(&req)?, fmt, thresholds_csv, to_json))
        }
        Command::Power(a) => {
            let req = request(input, a.any_flag(), || a.to_request())?;
            let fmt = cli.format.unwrap_or(Format::Csv);
            Ok(render(run_power(&req)?, fmt, |r| power_csv(&r.curve), to_json))
        }
        Command::ErrorProfile(a) => {
            let req = request(input, a.any_flag(), || a.to_request())?;
            let fmt = cli.format.unwrap_or(Format::Csv);
            Ok(render(run_error_profile(&req)?, fmt, |r| profile_csv(&r.profile), to_json))
        }
        Command::Compare(a) => {
            let req = request(input, a.any_flag(), || a.to_request())?;
            let fmt = cli.format.unwrap_or(Format::Csv);
            Ok(render(run_compare(&req)?, fmt, compare_csv, to_json))
        }
        Command::McValidate(a) => {
            let req = request(input, a.any_flag(), || a.to_request())?;
            let fmt = cli.format.unwrap_or(Format::Json);
            let out = run_mc_validate(&req)?;
            let passed = out.result.pass;
            Ok(Rendered { passed, ..render(out, fmt, mc_csv, to_json) })
        }
    }
}

fn emit(cli: &Cli, r: &Rendered) -> std::io::Result<()> {
    if !cli.quiet {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }
    match &cli.out {
        Some(path) => {
            fs::write(path, &r.body)?;
            if !cli.quiet {
                println!("wrote {}", path.display());
            }
        }
        None => std::io::stdout().lock().write_all(r.body.as_bytes())?,
    }
    if !r.passed && !cli.quiet {
        eprintln!("validation failed: at least one method deviates by more than 3 standard errors");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(&cli));
    match result {
        Ok(r) => {
            if let Err(e) = emit(&cli, &r) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_FAILED_CHECK);
            }
            if r.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED_CHECK)
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
