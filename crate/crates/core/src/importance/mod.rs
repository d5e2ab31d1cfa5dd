//! Feature-importance methods and the report they all produce.

mod loco;
mod mcr;
mod replacement;
mod smssm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SplitPlan};
use crate::error::{Error, Result};
use crate::rng;

pub use loco::{loco, loco_iteration, LocoConfig};
pub use mcr::{mcr_simplified, McrConfig};
pub use replacement::{
    constant_replacement, constant_replacement_importance, gain_importance_report, ConstantKind,
    ReplacementConfig,
};
pub use smssm::{sample_masks, smssm, Aggregation, MarginalRecord, SmssmConfig, SmssmDetails};

/// Version of the report JSON layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "SMSSM")]
    Smssm,
    #[serde(rename = "LOCO")]
    Loco,
    #[serde(rename = "MCR")]
    Mcr,
    ConstantReplacement,
    Gain,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Smssm,
        Method::Loco,
        Method::Mcr,
        Method::ConstantReplacement,
        Method::Gain,
    ];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Smssm => "SMSSM",
            Method::Loco => "LOCO",
            Method::Mcr => "MCR",
            Method::ConstantReplacement => "ConstantReplacement",
            Method::Gain => "Gain",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "smssm" => Ok(Method::Smssm),
            "loco" => Ok(Method::Loco),
            "mcr" => Ok(Method::Mcr),
            "constantreplacement" | "constant" | "replacement" => Ok(Method::ConstantReplacement),
            "gain" | "xgb" => Ok(Method::Gain),
            other => Err(Error::validation(format!("unknown method '{other}'"))),
        }
    }
}

/// Per-feature LOCO inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDiagnostics {
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// One-sided signed-rank p-value against "dropping the feature increases loss".
    pub p_value_importance: f64,
    /// One-sided p-value in the opposite direction (null: theta > 0).
    pub p_value_unimportance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub schema_version: u32,
    pub method: Method,
    pub feature_names: Vec<String>,
    pub phi: Vec<f64>,
    pub per_feature_diagnostics: Option<Vec<FeatureDiagnostics>>,
    /// Cross-validated model evaluations the method performs.
    pub n_models_fit: usize,
    /// Evaluations that trained successfully (failed fits excluded).
    pub distinct_fits: usize,
    pub retained_fraction: f64,
    pub seed: u64,
    pub wall_time_ms: f64,
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smssm: Option<SmssmDetails>,
}

impl ImportanceReport {
    pub(crate) fn new(method: Method, ds: &Dataset, phi: Vec<f64>, seed: u64) -> Self {
        ImportanceReport {
            schema_version: REPORT_SCHEMA_VERSION,
            method,
            feature_names: ds.feature_names().to_vec(),
            phi,
            per_feature_diagnostics: None,
            n_models_fit: 0,
            distinct_fits: 0,
            retained_fraction: 1.0,
            seed,
            wall_time_ms: 0.0,
            flags: Vec::new(),
            smssm: None,
        }
    }
}

/// A method together with its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method")]
pub enum MethodConfig {
    #[serde(rename = "SMSSM")]
    Smssm(SmssmConfig),
    #[serde(rename = "LOCO")]
    Loco(LocoConfig),
    #[serde(rename = "MCR")]
    Mcr(McrConfig),
    ConstantReplacement(ReplacementConfig),
    Gain(ReplacementConfig),
}

impl MethodConfig {
    pub fn method(&self) -> Method {
        match self {
            MethodConfig::Smssm(_) => Method::Smssm,
            MethodConfig::Loco(_) => Method::Loco,
            MethodConfig::Mcr(_) => Method::Mcr,
            MethodConfig::ConstantReplacement(_) => Method::ConstantReplacement,
            MethodConfig::Gain(_) => Method::Gain,
        }
    }

    /// Checks the configuration against a dataset without fitting anything.
    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        match self {
            MethodConfig::Smssm(c) => c.validate(ds.p(), ds.n()),
            MethodConfig::Loco(c) => c.validate(ds),
            MethodConfig::Mcr(c) => c.validate(ds.n()),
            MethodConfig::ConstantReplacement(c) => c.validate(ds.n()),
            MethodConfig::Gain(c) => c.learner.validate(),
        }
    }

    pub fn run(&self, ds: &Dataset) -> Result<ImportanceReport> {
        match self {
            MethodConfig::Smssm(c) => smssm(ds, c),
            MethodConfig::Loco(c) => loco(ds, c),
            MethodConfig::Mcr(c) => mcr_simplified(ds, c),
            MethodConfig::ConstantReplacement(c) => constant_replacement(ds, c),
            MethodConfig::Gain(c) => gain_importance_report(ds, c),
        }
    }
}

/// Split plan of resample `i`. SMSSM gives each sampled subset its own
/// resample and LOCO each repeat, both through this function, so the two
/// methods see identical folds at equal indices.
pub fn resample_plan(cv: &SplitPlan, seed: u64, i: usize) -> SplitPlan {
    cv.with_seed(rng::derive(seed, &[RESAMPLE_STREAM, i as u64]))
}

const RESAMPLE_STREAM: u64 = 0x5245_5350;

/// Loss differences below this fraction of the target variance are rounding
/// error (noiseless fits reach losses near 1e-30) and count as exact ties.
const TIE_RESOLUTION: f64 = 1e-12;

/// Scale against which loss differences are judged: the target variance.
pub(crate) fn loss_scale(ds: &Dataset) -> f64 {
    let y = ds.y();
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / y.len() as f64
}

/// `worse - better`, snapped to zero inside the rounding band.
pub(crate) fn loss_increase(worse: f64, better: f64, scale: f64) -> f64 {
    let d = worse - better;
    if d.abs() <= TIE_RESOLUTION * scale {
        0.0
    } else {
        d
    }
}

pub(crate) fn elapsed_ms(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}
