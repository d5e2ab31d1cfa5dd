//! Leave-one-covariate-out importance with resampling-based inference.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{elapsed_ms, loss_increase, loss_scale, resample_plan, FeatureDiagnostics, ImportanceReport, Method};
use crate::dataset::{Dataset, SplitKind, SplitPlan};
use crate::error::{Error, Result};
use crate::learner::{coalition_cv_loss, CoalitionMask, LearnerSpec, LossMetric};
use crate::stats::{mean, normal_quantile, sample_sd, wilcoxon_signed_rank};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocoConfig {
    /// Number of resampled cross-validation repeats.
    pub repeats: usize,
    pub learner: LearnerSpec,
    /// Fold layout; each repeat reshuffles it with its own seed.
    pub cv: SplitPlan,
    pub alpha: f64,
    pub seed: u64,
}

impl LocoConfig {
    pub fn new(learner: LearnerSpec) -> Self {
        LocoConfig {
            repeats: 20,
            learner,
            cv: SplitPlan::kfold(5, 0),
            alpha: 0.05,
            seed: 0,
        }
    }

    pub(super) fn validate(&self, ds: &Dataset) -> Result<()> {
        if ds.p() < 2 {
            return Err(Error::validation("LOCO needs at least 2 features"));
        }
        if self.repeats < 2 {
            return Err(Error::validation(format!(
                "LOCO needs at least 2 repeats to estimate spread, got {}",
                self.repeats
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if !matches!(self.cv.kind, SplitKind::KFold(_)) {
            return Err(Error::validation("LOCO needs a k-fold plan"));
        }
        self.cv.validate(ds.n())?;
        self.learner.validate()
    }

    /// Split plan used by repeat `t`.
    pub fn repeat_plan(&self, t: usize) -> SplitPlan {
        resample_plan(&self.cv, self.seed, t)
    }
}

/// One LOCO pass under a fixed split: the full-model loss and, per
/// feature, the loss increase from refitting without it.
pub fn loco_iteration(ds: &Dataset, learner: &LearnerSpec, cv: &SplitPlan) -> Result<(f64, Vec<f64>)> {
    let p = ds.p();
    let full = CoalitionMask::full(p);
    let mut masks = vec![full.clone()];
    masks.extend((0..p).map(|j| full.without(j)));
    let losses: Vec<f64> = masks
        .par_iter()
        .map(|m| coalition_cv_loss(learner, ds, m, cv, LossMetric::Mse))
        .collect::<Result<_>>()?;
    let full_loss = losses[0];
    let scale = loss_scale(ds);
    Ok((full_loss, losses[1..].iter().map(|&l| loss_increase(l, full_loss, scale)).collect()))
}

pub fn loco(ds: &Dataset, cfg: &LocoConfig) -> Result<ImportanceReport> {
    let start = Instant::now();
    cfg.validate(ds)?;
    let p = ds.p();
    let k = cfg.repeats;

    let runs: Vec<Result<Vec<f64>>> = (0..k)
        .into_par_iter()
        .map(|t| loco_iteration(ds, &cfg.learner, &cfg.repeat_plan(t)).map(|(_, d)| d))
        .collect();
    let mut deltas = Vec::with_capacity(k);
    let mut causes = Vec::new();
    for (t, r) in runs.into_iter().enumerate() {
        match r {
            Ok(d) => deltas.push(d),
            Err(e) => causes.push(format!("repeat {t}: {e}")),
        }
    }
    if deltas.len() < 2 {
        if causes.is_empty() {
            causes.push("fewer than 2 repeats succeeded".into());
        }
        return Err(Error::AllFailed { causes });
    }

    let used = deltas.len();
    let z = normal_quantile(1.0 - cfg.alpha / 2.0);
    let mut phi = Vec::with_capacity(p);
    let mut diags = Vec::with_capacity(p);
    for j in 0..p {
        let d: Vec<f64> = deltas.iter().map(|row| row[j]).collect();
        let theta = mean(&d);
        let se = sample_sd(&d) / (used as f64).sqrt();
        let test = wilcoxon_signed_rank(&d);
        phi.push(theta);
        diags.push(FeatureDiagnostics {
            std_error: se,
            ci_low: theta - z * se,
            ci_high: theta + z * se,
            p_value_importance: test.p_greater,
            p_value_unimportance: test.p_less,
        });
    }

    let mut report = ImportanceReport::new(Method::Loco, ds, phi, cfg.seed);
    report.per_feature_diagnostics = Some(diags);
    report.n_models_fit = k * (1 + p);
    report.distinct_fits = used * (1 + p);
    if !causes.is_empty() {
        report.flags.push(format!("failed_repeats:{}", causes.len()));
    }
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}
