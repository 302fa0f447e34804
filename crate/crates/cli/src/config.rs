//! Experiment configuration: flat TOML, every key known, validated up front.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Sweep1d,
    Sweep2d,
    Spectrum1d,
    Spectrum2d,
    Continuation,
    Groundstate,
}

impl Kind {
    pub fn dim(self) -> Option<usize> {
        match self {
            Kind::Sweep1d | Kind::Spectrum1d | Kind::Continuation => Some(1),
            Kind::Sweep2d | Kind::Spectrum2d => Some(2),
            Kind::Groundstate => None,
        }
    }
}

/// Initial state of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    /// ground state with the dip already at `x0_start`
    Relaxed,
    /// ground state of the trap alone
    Trap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub citation: String,

    #[serde(default)]
    pub g: f64,
    pub u0: f64,
    pub sigma: f64,
    #[serde(default)]
    pub omega: f64,
    pub x0_start: f64,
    #[serde(default)]
    pub x0_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
    /// dip-position spacing of a spectrum scan
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_step: Option<f64>,
    /// number of levels (spectra) or branches (continuation)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    /// increments used to carry linear target states to `g`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_steps: Option<usize>,
    /// groundstate only: 1 or 2
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,

    pub points: usize,
    pub half_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// residual tolerance of stationary solves
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,

    /// `metric = [low, high]`, checked by `check`
    #[serde(default)]
    pub expect: BTreeMap<String, [f64; 2]>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Validation(vec![e.to_string()]))?;
        Self::from_table(value)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml(&text)
    }

    fn from_table(table: toml::Table) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Validation(vec![e.message().to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides; values are parsed as TOML, falling back to a string.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = toml::Table::try_from(self).map_err(|e| CliError::Validation(vec![e.to_string()]))?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| CliError::Validation(vec![format!("override `{item}` is not key=value")]))?;
            let key = key.trim();
            let raw = raw.trim();
            let value = format!("v = {raw}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            table.insert(key.to_string(), value);
        }
        Self::from_table(table)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dim(&self) -> usize {
        self.kind.dim().or(self.dim).unwrap_or(1)
    }

    /// Field-level checks of everything the chosen experiment will use.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut bad = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                bad.push(msg);
            }
        };
        need(self.g.is_finite(), format!("g: must be finite, got {}", self.g));
        need(self.u0.is_finite() && self.u0 >= 0.0, format!("u0: must be >= 0, got {}", self.u0));
        need(self.sigma.is_finite() && self.sigma > 0.0, format!("sigma: must be > 0, got {}", self.sigma));
        need(self.x0_start.is_finite(), "x0_start: must be finite".into());
        need(self.x0_end.is_finite(), "x0_end: must be finite".into());
        need(
            self.points >= 8 && self.points.is_power_of_two(),
            format!("points: must be a power of two >= 8, got {}", self.points),
        );
        need(self.half_width.is_finite() && self.half_width > 0.0, format!("half_width: must be > 0, got {}", self.half_width));
        let far = self.x0_start.abs().max(self.x0_end.abs()) + 4.0 * self.sigma;
        need(
            self.half_width > far,
            format!("half_width: {} does not contain the dip path (needs > {far})", self.half_width),
        );
        need(self.tol > 0.0 && self.tol.is_finite(), format!("tol: must be > 0, got {}", self.tol));
        let dim = self.dim();
        match self.kind.dim() {
            Some(_) => need(self.dim.is_none(), format!("dim: only used by groundstate (kind {:?})", self.kind)),
            None => need(matches!(self.dim, Some(1) | Some(2)), "dim: groundstate needs dim = 1 or 2".into()),
        }
        if dim == 1 {
            need(self.omega == 0.0, format!("omega: must be 0 in 1D, got {}", self.omega));
        } else {
            need(self.omega.abs() < 1.0, format!("omega: |omega| must be below the trap frequency 1, got {}", self.omega));
        }
        for (k, [lo, hi]) in &self.expect {
            need(lo <= hi, format!("expect.{k}: empty interval [{lo}, {hi}]"));
        }
        match self.kind {
            Kind::Sweep1d | Kind::Sweep2d => {
                need(self.speed.is_some_and(|s| s > 0.0 && s.is_finite()), "speed: required, > 0".into());
                need(self.passes.is_some_and(|p| p >= 1), "passes: required, >= 1".into());
                need(self.dt.is_some_and(|d| d > 0.0 && d.is_finite()), "dt: required, > 0".into());
                need(self.initial.is_some(), "initial: required (relaxed | trap)".into());
                need(self.record_stride.is_some_and(|r| r >= 1), "record_stride: required, >= 1".into());
                need(self.x0_start != self.x0_end, "x0_end: must differ from x0_start".into());
                if self.g != 0.0 {
                    need(self.g_steps.is_some_and(|s| s >= 1), "g_steps: required when g != 0".into());
                }
            }
            Kind::Spectrum1d | Kind::Spectrum2d => {
                need(self.x0_step.is_some_and(|s| s > 0.0 && s.is_finite()), "x0_step: required, > 0".into());
                need(self.levels.is_some_and(|l| l >= 2), "levels: required, >= 2".into());
                need(self.g == 0.0, "g: spectra are of the linear operator; set g = 0".into());
                need(self.x0_start != self.x0_end, "x0_end: must differ from x0_start".into());
            }
            Kind::Continuation => {
                need(self.levels.is_some_and(|l| l >= 1), "levels: required, >= 1".into());
                need(self.x0_start != self.x0_end, "x0_end: must differ from x0_start".into());
            }
            Kind::Groundstate => {}
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(bad))
        }
    }
}
