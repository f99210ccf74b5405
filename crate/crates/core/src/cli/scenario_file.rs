//! JSON scenario documents.
//!
//! ```json
//! {
//!   "shape": { "kind": "paraboloid", "h": 0.5, "p": 0.2 },
//!   "rho": 1000.0,
//!   "rho0": 6000.0,
//!   "g": 9.81,
//!   "release": "drop",
//!   "sim": { "t_end": 10.0, "rel_tol": 1e-10, "abs_tol": 1e-12, "sample_interval": 0.01,
//!            "max_step": 0.05, "project_energy": true }
//! }
//! ```
//!
//! All quantities are SI. Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::dynamics::{Controls, Release, Scenario};
use crate::solids::Solid;

use super::CliError;

pub const DEFAULT_G: f64 = 9.81;
pub const DEFAULT_T_END: f64 = 10.0;

fn default_g() -> f64 {
    DEFAULT_G
}

fn default_release() -> Release {
    Release::Drop
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub shape: Solid,
    pub rho: f64,
    pub rho0: f64,
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default = "default_release")]
    pub release: Release,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub t_end: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_step: Option<f64>,
    pub sample_interval: Option<f64>,
    pub project_energy: Option<bool>,
}

impl SimSection {
    fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("t_end", self.t_end),
            ("max_step", self.max_step),
            ("sample_interval", self.sample_interval),
        ];
        for (name, value) in positive {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::Input(format!(
                        "sim.{name} must be positive, got {v}"
                    )));
                }
            }
        }
        for (name, value) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if let Some(v) = value {
                if !(v > 0.0 && v < 1.0) {
                    return Err(CliError::Input(format!(
                        "sim.{name} must lie in (0, 1), got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: Self =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("scenario: {e}")))?;
        file.sim.validate()?;
        file.scenario()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        Scenario::new(self.shape, self.rho, self.rho0, self.g, self.release)
            .map_err(|e| CliError::Input(format!("scenario: {e}")))
    }

    pub fn t_end(&self) -> f64 {
        self.sim.t_end.unwrap_or(DEFAULT_T_END)
    }

    pub fn controls(&self) -> Controls {
        let d = Controls::default();
        Controls {
            rel_tol: self.sim.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.sim.abs_tol.unwrap_or(d.abs_tol),
            max_step: self.sim.max_step,
            sample_interval: self.sim.sample_interval,
            project_energy: self.sim.project_energy.unwrap_or(d.project_energy),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_document() {
        let f = ScenarioFile::parse(
            r#"{"shape":{"kind":"cone","h":2.0,"area":0.5},"rho":1.0,"rho0":3.9,
                "release":"launch","sim":{"t_end":4.0,"sample_interval":0.5}}"#,
        )
        .unwrap();
        assert_eq!(f.g, DEFAULT_G);
        assert_eq!(f.release, Release::Launch);
        assert_eq!(f.t_end(), 4.0);
        assert_eq!(f.controls().sample_interval, Some(0.5));
        assert_eq!(f.controls().rel_tol, 1e-10);
        assert!((f.scenario().unwrap().ratio() - 3.9).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        let bad = [
            r#"{"shape":{"kind":"cone","h":1,"area":1},"rho":1,"rho0":2,"colour":"red"}"#,
            r#"{"shape":{"kind":"cone","h":1,"area":1,"p":3},"rho":1,"rho0":2}"#,
            r#"{"shape":{"kind":"cone","h":-1,"area":1},"rho":1,"rho0":2}"#,
            r#"{"shape":{"kind":"sphere","h":1},"rho":1,"rho0":2}"#,
            r#"{"shape":{"kind":"cone","h":1,"area":1},"rho0":2}"#,
            r#"{"shape":{"kind":"cone","h":1,"area":1},"rho":1,"rho0":2,"sim":{"dt":1}}"#,
            r#"{"shape":{"kind":"cone","h":1,"area":1},"rho":1,"rho0":2,"sim":{"rel_tol":0}}"#,
            r#"{"shape":{"kind":"cone","h":1,"area":1},"rho":1,"rho0":2,"sim":{"t_end":-1}}"#,
            r#"{"shape":{"kind":"cone","h":1,"area":1},"rho":0,"rho0":2}"#,
            "{ not json",
        ];
        for text in bad {
            assert!(
                matches!(ScenarioFile::parse(text), Err(CliError::Input(_))),
                "{text}"
            );
        }
        let msg = ScenarioFile::parse("{\n\"rho\": 1,\n\"oops\": 2}")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }
}
