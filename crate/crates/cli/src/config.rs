use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tfd_core::oracle::{OracleConfig, Scheme, DEFAULT_TRUNCATION};
use tfd_core::protocols::{ProtocolKind, ProtocolSpec};
use tfd_core::verify::VerifySettings;
use tfd_core::{IntegratorConfig, Statistics};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Quench,
    Sweep,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<RunKind>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistics: Option<Statistics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_beta() -> f64 {
    1.0
}

fn default_hbar() -> f64 {
    1.0
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            kind: None,
            beta: default_beta(),
            hbar: default_hbar(),
            statistics: None,
            output: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        IntegratorSection {
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            grid_points: d.dense_grid_points,
            max_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub enabled: bool,
    pub truncation: usize,
    pub substeps_per_unit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            enabled: true,
            truncation: DEFAULT_TRUNCATION,
            substeps_per_unit: 2000,
            scheme: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSpec>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run: RunSection::default(),
            protocol: None,
            integrator: IntegratorSection::default(),
            oracle: OracleSection::default(),
            sweep: None,
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

impl RunConfig {
    /// Check that the sections needed by `kind` are present and consistent.
    pub fn validate_for(&self, kind: RunKind) -> Result<(), CliError> {
        if let Some(k) = self.run.kind {
            if k != kind {
                return Err(CliError::Config(format!(
                    "[run] kind = {k:?} does not match the {kind:?} verb"
                )));
            }
        }
        for (name, v) in [("beta", self.run.beta), ("hbar", self.run.hbar)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("[run] {name} must be positive and finite, got {v}")));
            }
        }
        self.integrator().check().map_err(|e| CliError::Config(format!("[integrator] {e}")))?;
        if self.oracle.substeps_per_unit == 0 {
            return Err(CliError::Config("[oracle] substeps_per_unit must be at least 1".into()));
        }
        if kind == RunKind::Verify {
            return Ok(());
        }
        let spec = self
            .protocol
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [protocol] section".into()))?;
        let implied = match spec.kind {
            ProtocolKind::Boson | ProtocolKind::Oscillator => Statistics::Boson,
            ProtocolKind::Fermion => Statistics::Fermion,
        };
        if let Some(s) = self.run.statistics {
            if s != implied {
                return Err(CliError::Config(format!(
                    "[run] statistics = {s:?} conflicts with a {:?} protocol",
                    spec.kind
                )));
            }
        }
        if kind == RunKind::Sweep {
            let sweep = self
                .sweep
                .as_ref()
                .ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
            if sweep.values.is_empty() {
                return Err(CliError::Config("[sweep] values must not be empty".into()));
            }
            for v in &sweep.values {
                self.with_parameter(&sweep.parameter, *v)?;
            }
        } else {
            spec.build().map_err(|e| CliError::Config(format!("[protocol] {e}")))?;
        }
        Ok(())
    }

    /// Copy with one swept parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<RunConfig, CliError> {
        let mut out = self.clone();
        out.sweep = None;
        match name {
            "beta" => out.run.beta = value,
            "hbar" => out.run.hbar = value,
            key => {
                let spec = out
                    .protocol
                    .as_mut()
                    .ok_or_else(|| CliError::Config("missing [protocol] section".into()))?;
                spec.set(key, value).map_err(|e| CliError::Config(format!("[sweep] {e}")))?;
                spec.build().map_err(|e| CliError::Config(format!("[protocol] with {key} = {value}: {e}")))?;
            }
        }
        if !(out.run.beta > 0.0 && out.run.hbar > 0.0) {
            return Err(CliError::Config(format!("[sweep] {name} = {value} must be positive")));
        }
        Ok(out)
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: self.integrator.rel_tol,
            abs_tol: self.integrator.abs_tol,
            max_step: self.integrator.max_step.unwrap_or(f64::INFINITY),
            dense_grid_points: self.integrator.grid_points,
        }
    }

    pub fn oracle_config(&self) -> OracleConfig {
        OracleConfig {
            truncation: self.oracle.truncation,
            substeps_per_unit: self.oracle.substeps_per_unit,
            scheme: self.oracle.scheme.unwrap_or(OracleConfig::default().scheme),
        }
    }

    pub fn verify_settings(&self) -> VerifySettings {
        let d = VerifySettings::default();
        VerifySettings {
            integrator: self.integrator(),
            oracle_enabled: self.oracle.enabled,
            truncation: self.oracle.truncation,
            substeps_per_unit: self.oracle.substeps_per_unit,
            scheme: self.oracle.scheme.unwrap_or(d.scheme),
            samples: d.samples,
        }
    }

    /// SHA-256 of the config re-serialised with defaults filled in, so
    /// formatting and key order in the source file do not matter.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
