//! JSON experiment config. Every field is optional; command-line flags take
//! precedence over the file, and the file over built-in defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use stno::film::{Contact, FilmParams};
use stno::logic::{CarrierSpec, Digit, GateKind};
use stno::network::{StepSettings, StnoParams, DEFAULT_TAU_PERIODS};

use crate::fail::usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Gate,
    Xor,
    Circuit,
    Mux,
    Film,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Staged,
    Coupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepTarget {
    #[default]
    Gate,
    Film,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub target: Option<SweepTarget>,
    pub gain: Option<Vec<f64>>,
    pub frequency: Option<Vec<f64>>,
    /// Horizontal distance of the detector column from the film centre.
    pub detector_spacing: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,

    pub params: Option<StnoParams>,
    pub carrier: Option<CarrierSpec>,
    pub gain: Option<f64>,
    pub periods: Option<u32>,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
    pub tau: Option<f64>,

    pub gate: Option<GateKind>,
    pub a: Option<Digit>,
    pub b: Option<Digit>,
    pub gates: Option<Vec<GateKind>>,
    pub ratio: Option<f64>,

    pub expr: Option<String>,
    pub inputs: Option<BTreeMap<String, Digit>>,
    pub mode: Option<Mode>,
    pub stencil: Option<bool>,
    pub random_depth: Option<usize>,
    pub t_end: Option<f64>,

    pub film_params: Option<FilmParams>,
    pub layout: Option<PathBuf>,
    pub contacts: Option<Vec<Contact>>,
    pub grid: Option<usize>,
    pub length: Option<f64>,
    pub sponge: Option<bool>,
    pub u0: Option<f64>,
    pub probe_stride: Option<usize>,
    pub snapshot_stride: Option<usize>,
    pub detector_bias: Option<f64>,
    pub check_reflections: Option<bool>,

    pub sweep: Option<SweepSpec>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Rejects a config written for a different command.
    pub fn expect_kind(&self, allowed: &[ExperimentKind]) -> Result<()> {
        match self.experiment {
            Some(k) if !allowed.contains(&k) => Err(usage(format!(
                "config is for experiment `{}`, not `{}`",
                kind_name(k),
                kind_name(allowed[0])
            ))),
            _ => Ok(()),
        }
    }

    pub fn params(&self) -> Result<StnoParams> {
        let p = self.params.unwrap_or_default();
        p.validate()?;
        Ok(p)
    }

    pub fn carrier(&self) -> Result<CarrierSpec> {
        let c = self.carrier.unwrap_or_default();
        c.validate()?;
        Ok(c)
    }

    pub fn step_settings(&self) -> StepSettings {
        let d = StepSettings::default();
        StepSettings {
            dt: self.dt.unwrap_or(d.dt),
            stride: self.stride.unwrap_or(d.stride),
        }
    }

    pub fn tau(&self, carrier: &CarrierSpec) -> f64 {
        self.tau.unwrap_or(DEFAULT_TAU_PERIODS * carrier.period())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("stno-out"))
    }
}

fn kind_name(k: ExperimentKind) -> String {
    k.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

/// Replaces `slot` when the flag was given.
pub fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"gian": 0.2}"#).unwrap_err();
        assert!(err.to_string().contains("gian"));
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"params": {"omgea": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("omgea"));
    }

    #[test]
    fn partial_configs_fill_in_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"experiment": "gate", "gate": "NAND", "a": 0, "b": 1, "params": {"b": 0.2}}"#)
                .unwrap();
        assert_eq!(cfg.gate, Some(GateKind::Nand));
        assert_eq!(cfg.b, Some(Digit::One));
        let p = cfg.params().unwrap();
        assert_eq!(p.b, 0.2);
        assert_eq!(p.lambda, StnoParams::default().lambda);
    }

    #[test]
    fn invalid_physics_is_caught_before_running() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"params": {"b": -1}}"#).unwrap();
        assert!(cfg.params().is_err());
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"carrier": {"amplitude": 1, "frequency": -2}}"#).unwrap();
        assert!(cfg.carrier().is_err());
    }

    #[test]
    fn kind_mismatch_is_a_usage_error() {
        let cfg = ExperimentConfig { experiment: Some(ExperimentKind::Film), ..Default::default() };
        let err = cfg.expect_kind(&[ExperimentKind::Gate]).unwrap_err();
        assert!(err.downcast_ref::<crate::fail::UsageError>().is_some());
        assert!(cfg.expect_kind(&[ExperimentKind::Circuit, ExperimentKind::Film]).is_ok());
    }
}
