//! Declarative run configuration. A TOML file holds one optional section per
//! subcommand; a JSON output of this tool can be loaded in its place, which
//! replays the exact configuration that produced it.

use std::path::{Path, PathBuf};

use cost_core::mechanism::{CellEffect, ConditionSet, PopulationSpec};
use cost_core::oracle::Universe;
use cost_core::MonotonicityAssumption;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::args::{Family, Format, ModeKind};
use crate::data::Data;
use crate::output::Envelope;
use crate::{usage, Failure};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_NEAR_MONOTONICITY_THRESHOLD: f64 = 10.0;
pub const DEFAULT_MAX_DENOMINATOR: u64 = 1000;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    #[serde(default)]
    pub measures: MeasuresConfig,
    #[serde(default)]
    pub transport: TransportConfig,
    #[serde(default)]
    pub bias_surface: BiasSurfaceConfig,
    #[serde(default)]
    pub mechanism: MechanismConfig,
    #[serde(default)]
    pub meta: MetaConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasuresConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Data>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Data>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t1: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assumption: Option<MonotonicityAssumption>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub near_monotonicity_threshold: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasSurfaceConfig {
    pub g: Option<f64>,
    pub s0: Option<f64>,
    pub h_grid: Option<Vec<f64>>,
    pub f_grid: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismConfig {
    pub conditions: Option<ConditionSet>,
    pub joint_effect: Option<CellEffect>,
    pub populations: Option<Vec<PopulationSpec>>,
    pub mode: Option<ModeKind>,
    pub size: Option<u64>,
    pub max_denominator: Option<u64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Data>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled_rr_minus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled_rr_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled_rd: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub propositions: Option<Vec<String>>,
    pub universe: Option<Universe>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let env: Envelope = serde_json::from_str(&text)
                .map_err(|e| usage(format!("config {} is not a valid output document: {e}", path.display())))?;
            return Self::from_envelope(env);
        }
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    fn from_envelope(env: Envelope) -> Result<Self, Failure> {
        fn section<T: DeserializeOwned>(v: serde_json::Value) -> Result<T, Failure> {
            serde_json::from_value(v).map_err(|e| usage(format!("replayed config: {e}")))
        }
        let mut cfg = FileConfig {
            seed: Some(env.seed),
            format: Some(Format::Json),
            ..Default::default()
        };
        match env.command.as_str() {
            "measures" => cfg.measures = section(env.config)?,
            "transport" => cfg.transport = section(env.config)?,
            "bias-surface" => cfg.bias_surface = section(env.config)?,
            "mechanism-sim" => cfg.mechanism = section(env.config)?,
            "meta" => cfg.meta = section(env.config)?,
            "oracle-verify" => cfg.oracle = section(env.config)?,
            other => return Err(usage(format!("replayed config has unknown command {other:?}"))),
        }
        Ok(cfg)
    }
}

/// Overwrites `slot` when the flag was given.
pub fn flag<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}
