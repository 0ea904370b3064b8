//! Verification runner behind the `kl-twist` binary.

pub mod config;
pub mod report;
pub mod suites;

use std::fmt;

use kltwist::uqverify::QContext;
use serde::{Deserialize, Serialize};

pub use config::{RunConfig, Resolved};
pub use report::{Kind, Record, Report};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Associator,
    Axioms,
    Twist,
    Uq,
    All,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Associator => "associator",
            Suite::Axioms => "axioms",
            Suite::Twist => "twist",
            Suite::Uq => "uq",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

/// A run that could not produce a report. `code` is the process exit code.
#[derive(Debug)]
pub struct RunError {
    pub code: i32,
    pub message: String,
}

impl RunError {
    pub fn config(msg: impl Into<String>) -> RunError {
        RunError { code: 2, message: msg.into() }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

impl From<kltwist::Error> for RunError {
    fn from(e: kltwist::Error) -> RunError {
        let code = match e {
            kltwist::Error::Resonance(_) | kltwist::Error::Config(_) | kltwist::Error::Invalid(_) => 2,
            _ => 1,
        };
        RunError { code, message: e.to_string() }
    }
}

/// Runs one suite (or all of them) and assembles the report.
pub fn run(suite: Suite, cfg: &RunConfig) -> Result<Report, RunError> {
    let resolved = cfg.resolve()?;
    let ctx = suites::Context::new(resolved.clone())?;
    QContext::new(&ctx.d)?;
    let wants = |s: Suite| suite == s || suite == Suite::All;
    let tw = if (wants(Suite::Twist) || wants(Suite::Uq)) && ctx.builds_twist() { Some(ctx.twist()?) } else { None };
    let mut checks = vec![];
    if wants(Suite::Associator) {
        checks.extend(suites::associator_checks(&ctx));
    }
    if wants(Suite::Axioms) {
        checks.extend(suites::axioms_checks(&ctx));
    }
    if wants(Suite::Twist) {
        checks.extend(suites::twist_checks(&ctx, tw.as_ref()));
    }
    if wants(Suite::Uq) {
        checks.extend(suites::uq_checks(&ctx, tw.as_ref()));
    }
    let records = suites::execute(checks)?;
    let environment = report::Environment {
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: suite.to_string(),
        threads: rayon::current_num_threads(),
        config: resolved,
    };
    Ok(Report::new(environment, records))
}
