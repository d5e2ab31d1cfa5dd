//! Simplified Model Class Reliance: permutation importance averaged over
//! a sampled Rashomon set of boosted-tree models.
//!
//! The model class is explored by randomizing the template's
//! hyperparameters; the best observed cross-validated loss stands in for
//! the irreducible loss, and every model within `delta` of it is kept.
//! Permutation importance uses a fixed number of random permutations per
//! feature rather than all of them.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{elapsed_ms, ImportanceReport, Method};
use crate::dataset::{Dataset, SplitKind, SplitPlan};
use crate::error::{Error, Result};
use crate::learner::{cv_fits, CoalitionMask, FoldFit, GbtParams, LearnerSpec, LossMetric};
use crate::rng;
use crate::shapley::KahanSum;

const MODEL_STREAM: u64 = 0x4D43_524D;
const PERM_STREAM: u64 = 0x4D43_5250;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McrConfig {
    pub k_models: usize,
    /// Absolute loss slack defining the Rashomon set.
    pub delta: f64,
    pub n_perms: usize,
    /// Model 0 uses it as is; the others perturb it.
    pub template: GbtParams,
    pub cv: SplitPlan,
    pub seed: u64,
}

impl McrConfig {
    pub fn new(template: GbtParams) -> Self {
        McrConfig {
            k_models: 20,
            delta: 0.05,
            n_perms: 20,
            template,
            cv: SplitPlan::kfold(5, 0),
            seed: 0,
        }
    }

    pub(super) fn validate(&self, n: usize) -> Result<()> {
        if self.k_models < 2 {
            return Err(Error::validation(format!("MCR needs k_models >= 2, got {}", self.k_models)));
        }
        if self.n_perms < 1 {
            return Err(Error::validation("MCR needs n_perms >= 1"));
        }
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(Error::validation(format!("delta must be finite and >= 0, got {}", self.delta)));
        }
        if !matches!(self.cv.kind, SplitKind::KFold(_)) {
            return Err(Error::validation("MCR needs a k-fold plan"));
        }
        self.cv.validate(n)?;
        self.template.validate()
    }

    /// Hyperparameters and fit seed of candidate model `i`.
    pub fn candidate(&self, i: usize) -> LearnerSpec {
        let seed = rng::derive(self.seed, &[MODEL_STREAM, i as u64]);
        if i == 0 {
            return LearnerSpec::gbt(self.template).with_seed(seed);
        }
        let mut r = rng::stream(self.seed, &[MODEL_STREAM, i as u64, 1]);
        let base = self.template.n_rounds.max(2);
        let params = GbtParams {
            n_rounds: r.random_range(base / 2..=base + base / 2),
            max_depth: r.random_range(2..=5),
            learning_rate: r.random_range(0.05..0.3),
            subsample: r.random_range(0.6..=1.0),
        };
        LearnerSpec::gbt(params).with_seed(seed)
    }
}

struct Candidate {
    loss: f64,
    folds: Vec<FoldFit>,
}

pub fn mcr_simplified(ds: &Dataset, cfg: &McrConfig) -> Result<ImportanceReport> {
    let start = Instant::now();
    cfg.validate(ds.n())?;
    let p = ds.p();
    let full = CoalitionMask::full(p);

    let fitted: Vec<Result<Candidate>> = (0..cfg.k_models)
        .into_par_iter()
        .map(|i| {
            let folds = cv_fits(&cfg.candidate(i), ds, &full, &cfg.cv, LossMetric::Mse)?;
            let loss = folds.iter().map(|f| f.loss).sum::<f64>() / folds.len() as f64;
            Ok(Candidate { loss, folds })
        })
        .collect();
    let mut causes = Vec::new();
    let mut models = Vec::new();
    for (i, r) in fitted.into_iter().enumerate() {
        match r {
            Ok(c) => models.push((i, c)),
            Err(e) => causes.push(format!("model {i}: {e}")),
        }
    }
    if models.is_empty() {
        return Err(Error::AllFailed { causes });
    }
    let best = models.iter().map(|(_, c)| c.loss).fold(f64::INFINITY, f64::min);
    let rashomon: Vec<&(usize, Candidate)> = models.iter().filter(|(_, c)| c.loss <= best + cfg.delta).collect();

    let per_model: Vec<Vec<f64>> = rashomon
        .par_iter()
        .map(|(i, c)| model_reliance(ds, &c.folds, cfg, *i))
        .collect::<Result<_>>()?;
    let phi: Vec<f64> = (0..p)
        .map(|j| per_model.iter().map(|v| v[j]).collect::<KahanSum>().value() / per_model.len() as f64)
        .collect();

    let mut report = ImportanceReport::new(Method::Mcr, ds, phi, cfg.seed);
    report.n_models_fit = cfg.k_models;
    report.distinct_fits = cfg.k_models;
    report.retained_fraction = rashomon.len() as f64 / cfg.k_models as f64;
    report.flags.push(format!("rashomon_size:{}", rashomon.len()));
    if !causes.is_empty() {
        report.flags.push(format!("failed_fits:{}", causes.len()));
    }
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

/// Mean permutation importance of every feature for one candidate,
/// averaged over its held-out folds.
fn model_reliance(ds: &Dataset, folds: &[FoldFit], cfg: &McrConfig, model: usize) -> Result<Vec<f64>> {
    let p = ds.p();
    let mut totals = vec![KahanSum::default(); p];
    for (f, fold) in folds.iter().enumerate() {
        let test = &fold.test;
        let cols: Vec<Vec<f64>> = (0..p).map(|j| test.iter().map(|&i| ds.column(j)[i]).collect()).collect();
        let y: Vec<f64> = test.iter().map(|&i| ds.y()[i]).collect();
        let base = LossMetric::Mse.loss(&y, &fold.model.predict(&cols)?);
        let gain = fold.model.gain_importance()?;
        for j in 0..p {
            // a column the trees never split on cannot move a prediction
            if gain[j] == 0.0 {
                continue;
            }
            let mut r = rng::stream(cfg.seed, &[PERM_STREAM, model as u64, f as u64, j as u64]);
            let mut shuffled = cols.clone();
            let mut acc = KahanSum::default();
            for _ in 0..cfg.n_perms {
                shuffled[j].copy_from_slice(&cols[j]);
                shuffled[j].shuffle(&mut r);
                acc.add(LossMetric::Mse.loss(&y, &fold.model.predict(&shuffled)?) - base);
            }
            totals[j].add(acc.value() / cfg.n_perms as f64);
        }
    }
    Ok(totals.iter().map(|t| t.value() / folds.len() as f64).collect())
}
