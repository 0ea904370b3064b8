use std::collections::BTreeMap;

use kltwist::cartan::{Algebra, RootDatum, Weight};
use kltwist::linalg::{c, C64};
use serde::{Deserialize, Serialize};

use crate::RunError;

/// Run parameters. Missing fields take the per-algebra defaults.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algebra: Option<String>,
    pub hbar: Option<[f64; 2]>,
    pub series_terms: Option<usize>,
    /// Overrides keyed by check name (`suite/check`) or by suite name.
    pub tolerances: BTreeMap<String, f64>,
    pub support: Option<Vec<Weight>>,
    /// Largest truncation level `n` of a single factor `L(nμ, λ)`.
    pub n_max: Option<usize>,
    /// Extra levels above the smallest isomorphic one.
    pub margin: Option<usize>,
    pub rng_seed: Option<u64>,
    /// Gauge values `b_i` of the cochain on the fundamental weights.
    pub gauge: Option<Vec<[f64; 2]>>,
}

/// A validated configuration with every default filled in.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub algebra: Algebra,
    pub hbar: [f64; 2],
    pub series_terms: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub support: Vec<Weight>,
    pub n_max: usize,
    pub margin: usize,
    pub rng_seed: u64,
    pub gauge: Vec<[f64; 2]>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::config(format!("config parse error: {e}")))
    }

    pub fn resolve(&self) -> Result<Resolved, RunError> {
        let algebra = Algebra::parse(self.algebra.as_deref().unwrap_or("A1")).map_err(RunError::from)?;
        let rd = RootDatum::new(algebra);
        let rank = rd.d.len();
        let hbar = self.hbar.unwrap_or([0.0, 0.35]);
        if !hbar.iter().all(|x| x.is_finite()) {
            return Err(RunError::config("hbar must be finite"));
        }
        let series_terms = self.series_terms.unwrap_or(120);
        if series_terms < 8 {
            return Err(RunError::config("series_terms must be at least 8"));
        }
        for (k, &v) in &self.tolerances {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RunError::config(format!("tolerance {k:?} must be positive")));
            }
        }
        let support = match &self.support {
            Some(s) => s.clone(),
            None if algebra == Algebra::A1 => (0..=4).map(|k| vec![k]).collect(),
            None => std::iter::once(rd.zero()).chain((0..rank).map(|i| rd.omega(i))).collect(),
        };
        if support.is_empty() {
            return Err(RunError::config("support is empty"));
        }
        for w in &support {
            if w.len() != rank || !RootDatum::is_dominant(w) {
                return Err(RunError::config(format!("support weight {w:?} is not a dominant weight of {algebra}")));
            }
        }
        let n_max = self.n_max.unwrap_or(if algebra == Algebra::A1 { 5 } else { 2 });
        let gauge = self.gauge.clone().unwrap_or_else(|| vec![[1.0, 0.0]; rank]);
        if gauge.len() != rank || gauge.iter().any(|z| z[0] == 0.0 && z[1] == 0.0) {
            return Err(RunError::config(format!("gauge needs {rank} nonzero values")));
        }
        Ok(Resolved {
            algebra,
            hbar,
            series_terms,
            tolerances: self.tolerances.clone(),
            support,
            n_max,
            margin: self.margin.unwrap_or(1),
            rng_seed: self.rng_seed.unwrap_or(0),
            gauge,
        })
    }
}

impl Resolved {
    pub fn hbar_c(&self) -> C64 {
        c(self.hbar[0], self.hbar[1])
    }

    pub fn gauge_c(&self) -> Vec<C64> {
        self.gauge.iter().map(|z| c(z[0], z[1])).collect()
    }

    /// Tolerance for `name`: exact override, then suite override, then the default.
    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        if let Some(&t) = self.tolerances.get(name) {
            return t;
        }
        let suite = name.split('/').next().unwrap_or(name);
        self.tolerances.get(suite).copied().unwrap_or(default)
    }
}

/// Parses `RE,IM`.
pub fn parse_complex(s: &str) -> Result<[f64; 2], RunError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || RunError::config(format!("expected RE,IM but got {s:?}"));
    match parts.as_slice() {
        [re, im] => Ok([re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?]),
        [re] => Ok([re.parse().map_err(|_| bad())?, 0.0]),
        _ => Err(bad()),
    }
}
