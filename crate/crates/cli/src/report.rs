use serde::{Deserialize, Serialize};

use crate::config::Resolved;

/// `Residual` records measure a quantity that vanishes exactly in theory;
/// `Bound` records compare a nonvanishing quantity (a ratio or condition number) to a limit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Residual,
    Bound,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Record {
    pub name: String,
    /// The identity or property being checked.
    pub anchor: String,
    pub kind: Kind,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub wall_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub version: String,
    pub subcommand: String,
    pub threads: usize,
    pub config: Resolved,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub pass: bool,
    pub environment: Environment,
    pub records: Vec<Record>,
}

impl Report {
    pub fn new(environment: Environment, mut records: Vec<Record>) -> Report {
        records.sort_by(|a, b| a.name.cmp(&b.name));
        let pass = records.iter().all(|r| r.pass);
        Report { pass, environment, records }
    }

    pub fn get(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,kind,residual,tolerance,pass,wall_time\n");
        for r in &self.records {
            let kind = match r.kind {
                Kind::Residual => "residual",
                Kind::Bound => "bound",
            };
            out.push_str(&format!("{},{},{:e},{:e},{},{:.6}\n", r.name, kind, r.residual, r.tolerance, r.pass, r.wall_time));
        }
        out
    }

    /// One line per record.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let mark = if r.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{mark} {:<40} {:>11.3e} (tol {:.1e}, {:.2}s)", r.name, r.residual, r.tolerance, r.wall_time));
            if let Some(n) = &r.note {
                out.push_str(&format!("  [{n}]"));
            }
            out.push('\n');
        }
        let n_fail = self.failures().count();
        out.push_str(&format!("{} checks, {} failed\n", self.records.len(), n_fail));
        out
    }
}
