//! Persisted run configurations. A release or audit directory plus its
//! `run_config.json` is enough to regenerate every artifact in it.

use std::path::PathBuf;

use maskdp::mechanisms::Setting;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const RUN_CONFIG_FILE: &str = "run_config.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SigmaChoice {
    Fixed {
        sigma: f64,
    },
    /// Calibrated from (ε, δ): the setting-A sufficient bound for A, the
    /// joint masked bound for B and C.
    Auto {
        epsilon: f64,
        delta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseConfig {
    /// Absolute path of the raw CSV.
    pub input: PathBuf,
    pub header: bool,
    pub setting: Setting,
    pub sigma: SigmaChoice,
    pub seed: u64,
    pub report_gram: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    #[value(name = "violation-A")]
    #[serde(rename = "violation-A")]
    ViolationA,
    #[value(name = "violation-BC")]
    #[serde(rename = "violation-BC")]
    ViolationBc,
    GRatio,
    Sphere,
    RatioBound,
    QuantileBrackets,
    Birge,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::ViolationA => "violation-A",
            Check::ViolationBc => "violation-BC",
            Check::GRatio => "g-ratio",
            Check::Sphere => "sphere",
            Check::RatioBound => "ratio-bound",
            Check::QuantileBrackets => "quantile-brackets",
            Check::Birge => "birge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub check: Check,
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub p: usize,
    /// Mechanism σ; calibrated from (ε, δ, n, p) when absent.
    pub sigma: Option<f64>,
    /// Masked setting for `violation-BC`.
    pub setting: Setting,
    pub samples: Option<usize>,
    pub inner_samples: usize,
    pub seed: u64,
    /// Sphere or G-function dimension; 5 for `g-ratio`, 2 for `sphere` when absent.
    pub q: Option<u32>,
    pub t1: f64,
    pub t2: f64,
    /// Projection vector for `sphere`; drawn from the seed when absent.
    pub v: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum RunConfig {
    Release(ReleaseConfig),
    Audit(AuditConfig),
}

impl ReleaseConfig {
    pub fn validate(&self) -> Result<()> {
        match self.sigma {
            SigmaChoice::Fixed { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                CliError::Input(format!("--sigma must be positive, got {sigma}")),
            ),
            _ if self.report_gram && self.setting != Setting::B => Err(CliError::Input(
                "--report-gram applies to setting B only".into(),
            )),
            _ => Ok(()),
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(CliError::Input(format!(
                    "--sigma must be positive, got {s}"
                )));
            }
        }
        if self.samples == Some(0) || self.inner_samples < 2 {
            return Err(CliError::Input(
                "sample counts must be positive (at least 2 inner samples)".into(),
            ));
        }
        if self.check == Check::ViolationBc && !self.setting.is_masked() {
            return Err(CliError::Input(
                "violation-BC needs --setting B or C".into(),
            ));
        }
        if let Some(v) = &self.v {
            if v.len() != self.n {
                return Err(CliError::Input(format!(
                    "--v has {} entries, expected n = {}",
                    v.len(),
                    self.n
                )));
            }
        }
        Ok(())
    }
}
