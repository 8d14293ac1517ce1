//! Run configuration documents (TOML).
//!
//! ```toml
//! projection = [1, 2]          # optional, 1-based state components
//!
//! [system]
//! id = "duffing"               # duffing | quadrotor | traffic | custom-test
//! [system.parameters]          # optional overrides of the defaults
//! gamma = 0.4
//!
//! [time]
//! t0 = 0.0                     # optional, default 0
//! t1 = 100.0
//! step = 0.01                  # optional, per-system default
//!
//! [initial]
//! lower = [0.95, -0.05]
//! upper = [1.05, 0.05]
//!
//! [disturbance]                # required iff the system has inputs
//! lower = [1.3333333333333333]
//! upper = [2.0]
//!
//! [fit]
//! k = 10
//! epsilon = 0.05
//! delta = 1e-9
//! samples = 20000              # optional, replaces the PAC sample size
//! normalize = true             # optional, default true
//!
//! [seeds]                      # optional
//! train = 0
//! validate = 1
//!
//! [output]                     # optional
//! estimator = "duffing.json"
//! cloud = "duffing-cloud.csv"
//! report = "duffing-report.txt"
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::basis::basis_size;
use crate::error::{Error, Result};
use crate::pac::{pac_sample_size, PacParams};
use crate::sampler::{Interval, ReachabilityProblem};
use crate::systems::{IntegratorConfig, SystemId, SystemSpec};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub time: TimeSection,
    pub initial: IntervalSection,
    #[serde(default)]
    pub disturbance: Option<IntervalSection>,
    #[serde(default)]
    pub projection: Option<Vec<usize>>,
    pub fit: FitSection,
    #[serde(default)]
    pub seeds: SeedSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub id: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    #[serde(default)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default = "yes")]
    pub normalize: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    #[serde(default)]
    pub train: u64,
    #[serde(default = "one")]
    pub validate: u64,
}

fn one() -> u64 {
    1
}

impl Default for SeedSection {
    fn default() -> Self {
        SeedSection {
            train: 0,
            validate: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub estimator: Option<PathBuf>,
    pub cloud: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        let problem = self.problem().map_err(cfg)?;
        let params = self.pac_params().map_err(cfg)?;
        if let Some(n) = self.fit.samples {
            let needed = basis_size(problem.effective_dim(), params.k).map_err(cfg)?;
            if n < needed {
                return Err(Error::Config(format!(
                    "fit.samples = {n} is below the basis size {needed}"
                )));
            }
        }
        Ok(())
    }

    pub fn system_id(&self) -> Result<SystemId> {
        self.system.id.parse()
    }

    pub fn problem(&self) -> Result<ReachabilityProblem> {
        let id = self.system_id()?;
        let mut spec = SystemSpec::new(id);
        for (name, &value) in &self.system.parameters {
            spec = spec.with_param(name, value)?;
        }
        let integrator = match self.time.step {
            Some(step) => IntegratorConfig::new(step)?,
            None => IntegratorConfig::default_for(id),
        };
        let initial = Interval::new(self.initial.lower.clone(), self.initial.upper.clone())?;
        let disturbance = self
            .disturbance
            .as_ref()
            .map(|d| Interval::new(d.lower.clone(), d.upper.clone()))
            .transpose()?;
        let projection = self
            .projection
            .as_ref()
            .map(|p| {
                p.iter()
                    .map(|&i| {
                        i.checked_sub(1).ok_or_else(|| {
                            Error::InvalidArgument("projection indices are 1-based".into())
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        ReachabilityProblem::new(
            spec,
            integrator,
            (self.time.t0, self.time.t1),
            initial,
            disturbance,
            projection,
        )
    }

    /// PAC parameters for the fitted (post-projection) dimension.
    pub fn pac_params(&self) -> Result<PacParams> {
        let n = match &self.projection {
            Some(p) => p.len(),
            None => self.system_id()?.state_dim(),
        };
        PacParams::new(self.fit.epsilon, self.fit.delta, n, self.fit.k)
    }

    /// Explicit sample count if given, otherwise the PAC sample size.
    pub fn sample_count(&self) -> Result<usize> {
        match self.fit.samples {
            Some(n) => Ok(n),
            None => pac_sample_size(&self.pac_params()?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DUFFING: &str = r#"
[system]
id = "duffing"

[time]
t1 = 100.0

[initial]
lower = [0.95, -0.05]
upper = [1.05, 0.05]

[fit]
k = 10
epsilon = 0.05
delta = 1e-9
"#;

    #[test]
    fn duffing_defaults() {
        let c = RunConfig::parse(DUFFING).unwrap();
        assert_eq!(c.sample_count().unwrap(), 156_626);
        let p = c.problem().unwrap();
        assert_eq!(p.integrator.step, 0.01);
        assert_eq!(p.effective_dim(), 2);
        assert_eq!(c.seeds, SeedSection::default());
        assert!(c.fit.normalize);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = DUFFING.replace("epsilon", "epsilom");
        assert!(matches!(RunConfig::parse(&typo), Err(Error::Config(_))));
        let extra = format!("{DUFFING}\n[extra]\nfoo = 1\n");
        assert!(RunConfig::parse(&extra).is_err());
        let bad_param = DUFFING.replace(
            "id = \"duffing\"",
            "id = \"duffing\"\nparameters = { zeta = 1.0 }",
        );
        assert!(RunConfig::parse(&bad_param).is_err());
    }

    #[test]
    fn validation_of_values() {
        assert!(RunConfig::parse(&DUFFING.replace("epsilon = 0.05", "epsilon = 1.5")).is_err());
        assert!(
            RunConfig::parse(&DUFFING.replace("delta = 1e-9", "delta = 1e-9\nsamples = 10"))
                .is_err()
        );
        assert!(RunConfig::parse(&DUFFING.replace("id = \"duffing\"", "id = \"lorenz\"")).is_err());
        let reduced = format!("projection = [2]\n{DUFFING}");
        let c = RunConfig::parse(&reduced).unwrap();
        assert_eq!(c.problem().unwrap().projection, Some(vec![1]));
        assert!(RunConfig::parse(&format!("projection = [0]\n{DUFFING}")).is_err());
        assert!(RunConfig::parse(&format!("projection = [3]\n{DUFFING}")).is_err());
    }

    #[test]
    fn traffic_requires_disturbance() {
        let base = r#"
projection = [5, 6]
[system]
id = "traffic"
[time]
t1 = 120.0
[initial]
lower = [100.0, 100.0, 100.0, 100.0, 100.0, 100.0]
upper = [200.0, 200.0, 200.0, 200.0, 200.0, 200.0]
[fit]
k = 4
epsilon = 0.05
delta = 1e-9
"#;
        assert!(RunConfig::parse(base).is_err());
        let with_d =
            format!("{base}\n[disturbance]\nlower = [1.3333333333333333]\nupper = [2.0]\n");
        let c = RunConfig::parse(&with_d).unwrap();
        assert_eq!(c.sample_count().unwrap(), 32_292);
        assert_eq!(c.problem().unwrap().integrator.step, 0.05);
    }
}
