//! Front end for the `hidim` binary. [`run`] takes the argument list and
//! returns what the process should print and its exit code, so the whole
//! command surface can be driven from tests.

mod args;
mod commands;
pub mod methods;
pub mod scan;
pub mod simulate;

use args::{Cli, Command, FitCommand, TestCommand};
use clap::Parser;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Failure carrying its exit code and an optional machine-readable report.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
    pub report: Option<Value>,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into(), report: None }
    }
}

impl From<hidim::Error> for CliError {
    fn from(e: hidim::Error) -> Self {
        let code = if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERICAL };
        let report = match &e {
            hidim::Error::NonConvergence { iterations, grad_norm } => Some(envelope(
                "error",
                [
                    ("status".to_string(), Value::from("non_convergence")),
                    ("iterations".to_string(), Value::from(*iterations)),
                    ("grad_norm".to_string(), serde_json::json!(grad_norm)),
                ],
            )),
            _ => None,
        };
        Self { code, message: e.to_string(), report }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// JSON object with the schema version and command name in front.
pub(crate) fn envelope(command: &str, fields: impl IntoIterator<Item = (String, Value)>) -> Value {
    let mut m = Map::new();
    m.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    m.insert("command".into(), Value::from(command));
    m.extend(fields);
    Value::Object(m)
}

pub(crate) fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: text }
            } else {
                Outcome { code: EXIT_OK, stdout: text, stderr: String::new() }
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => return Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: format!("error: {e}\n") },
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(stdout) => Outcome { code: EXIT_OK, stdout, stderr: String::new() },
        Err(e) => Outcome {
            code: e.code,
            stdout: e.report.as_ref().map(to_json).unwrap_or_default(),
            stderr: format!("error: {}\n", e.message),
        },
    }
}

fn dispatch(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Test(TestCommand::Mean(a)) => commands::test_mean(a, cli.seed),
        Command::Test(TestCommand::Covariance(a)) => commands::test_covariance(a, cli.seed),
        Command::Test(TestCommand::Multinomial(a)) => commands::test_multinomial(a, cli.seed),
        Command::Simulate(a) => simulate::cmd_simulate(a, cli.seed),
        Command::ScanK(a) => scan::cmd_scan_k(a, cli.seed),
        Command::Fit(FitCommand::Dirmult(a)) => commands::fit_dirmult(a),
        Command::Fit(FitCommand::Banded(a)) => commands::fit_banded(a, cli.seed),
    }
}
