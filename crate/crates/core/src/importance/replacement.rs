//! Replacement-based baselines: constant-value replacement and the
//! built-in split-gain importance of the boosted-tree learner.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{elapsed_ms, ImportanceReport, Method};
use crate::dataset::{Dataset, SplitKind, SplitPlan};
use crate::error::{Error, Result};
use crate::learner::{cv_fits, CoalitionMask, FittedModel, LearnerSpec, LossMetric};
use crate::shapley::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ConstantKind {
    /// Mean of the column over the evaluation rows.
    #[default]
    Mean,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplacementConfig {
    pub learner: LearnerSpec,
    pub cv: SplitPlan,
    #[serde(default)]
    pub constant: ConstantKind,
    pub seed: u64,
}

impl ReplacementConfig {
    pub fn new(learner: LearnerSpec) -> Self {
        ReplacementConfig {
            learner,
            cv: SplitPlan::kfold(5, 0),
            constant: ConstantKind::Mean,
            seed: 0,
        }
    }

    pub(super) fn validate(&self, n: usize) -> Result<()> {
        if !matches!(self.cv.kind, SplitKind::KFold(_)) {
            return Err(Error::validation("constant replacement needs a k-fold plan"));
        }
        self.cv.validate(n)?;
        self.learner.validate()
    }
}

/// Loss increase on `ds` when each column in turn is overwritten by a
/// constant, for an already fitted full-feature model.
pub fn constant_replacement_importance(
    model: &FittedModel,
    ds: &Dataset,
    constant: ConstantKind,
) -> Result<ImportanceReport> {
    let start = Instant::now();
    let phi = replacement_deltas(model, ds.columns(), ds.y(), constant)?;
    let mut report = ImportanceReport::new(Method::ConstantReplacement, ds, phi, model.spec().seed);
    report.n_models_fit = 0;
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

fn replacement_deltas(model: &FittedModel, cols: &[Vec<f64>], y: &[f64], constant: ConstantKind) -> Result<Vec<f64>> {
    if model.mask().count() != model.mask().len() {
        return Err(Error::validation("constant replacement needs a model fitted on all features"));
    }
    let base = LossMetric::Mse.loss(y, &model.predict(cols)?);
    let mut work = cols.to_vec();
    let mut phi = Vec::with_capacity(cols.len());
    for j in 0..cols.len() {
        let c = match constant {
            ConstantKind::Mean => cols[j].iter().copied().collect::<KahanSum>().value() / cols[j].len() as f64,
            ConstantKind::Zero => 0.0,
        };
        work[j].iter_mut().for_each(|v| *v = c);
        phi.push(LossMetric::Mse.loss(y, &model.predict(&work)?) - base);
        work[j].copy_from_slice(&cols[j]);
    }
    Ok(phi)
}

/// Cross-validated pipeline: fit on each training fold, score replacement
/// on the held-out fold, average over folds.
pub fn constant_replacement(ds: &Dataset, cfg: &ReplacementConfig) -> Result<ImportanceReport> {
    let start = Instant::now();
    cfg.validate(ds.n())?;
    let p = ds.p();
    let folds = cv_fits(&cfg.learner, ds, &CoalitionMask::full(p), &cfg.cv, LossMetric::Mse)?;
    let mut totals = vec![KahanSum::default(); p];
    for fold in &folds {
        let cols: Vec<Vec<f64>> = (0..p).map(|j| fold.test.iter().map(|&i| ds.column(j)[i]).collect()).collect();
        let y: Vec<f64> = fold.test.iter().map(|&i| ds.y()[i]).collect();
        for (t, d) in totals.iter_mut().zip(replacement_deltas(&fold.model, &cols, &y, cfg.constant)?) {
            t.add(d);
        }
    }
    let phi = totals.iter().map(|t| t.value() / folds.len() as f64).collect();
    let mut report = ImportanceReport::new(Method::ConstantReplacement, ds, phi, cfg.seed);
    report.n_models_fit = 1;
    report.distinct_fits = 1;
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

/// Total split gain of a boosted-tree model fit on all rows and features.
pub fn gain_importance_report(ds: &Dataset, cfg: &ReplacementConfig) -> Result<ImportanceReport> {
    let start = Instant::now();
    let model = cfg.learner.fit(ds, &CoalitionMask::full(ds.p()))?;
    let mut report = ImportanceReport::new(Method::Gain, ds, model.gain_importance()?, cfg.seed);
    report.n_models_fit = 1;
    report.distinct_fits = 1;
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DgpId, DgpSpec};
    use crate::learner::GbtParams;

    #[test]
    fn ignored_and_constant_columns_get_zero() {
        let x0: Vec<f64> = (0..80).map(|i| (i as f64 * 0.3).cos()).collect();
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            vec![x0.clone(), vec![2.5; 80]],
            x0.iter().map(|v| v * 2.0 + 1.0).collect(),
            None,
        )
        .unwrap();
        let model = LearnerSpec::gbt(GbtParams::default()).fit(&ds, &CoalitionMask::full(2)).unwrap();
        let r = constant_replacement_importance(&model, &ds, ConstantKind::Mean).unwrap();
        assert!(r.phi[0] > 0.0);
        assert_eq!(r.phi[1], 0.0);
        // zero is not the column's value, but the trees ignore the column anyway
        let r = constant_replacement_importance(&model, &ds, ConstantKind::Zero).unwrap();
        assert_eq!(r.phi[1], 0.0);
    }

    #[test]
    fn needs_full_mask() {
        let ds = DgpSpec::new(DgpId::DS1, 50, 1).generate().unwrap();
        let m = LearnerSpec::ols().fit(&ds, &CoalitionMask::from_indices(3, [0])).unwrap();
        assert!(constant_replacement_importance(&m, &ds, ConstantKind::Mean).is_err());
    }

    #[test]
    fn ols_replacement_is_coefficient_squared_times_variance() {
        let ds = DgpSpec::new(DgpId::DS2, 300, 4).generate().unwrap();
        let m = LearnerSpec::ols().fit(&ds, &CoalitionMask::full(5)).unwrap();
        let r = constant_replacement_importance(&m, &ds, ConstantKind::Mean).unwrap();
        let beta = m.as_ols().unwrap().coefficients();
        for j in 0..5 {
            let c = ds.column(j);
            let mu = c.iter().sum::<f64>() / 300.0;
            let var = c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 300.0;
            // the cross term with the residual vanishes in-sample
            assert!((r.phi[j] - beta[j] * beta[j] * var).abs() < 1e-9, "{j}");
        }
    }

    #[test]
    fn pipeline_and_gain() {
        let ds = DgpSpec::new(DgpId::DS4, 300, 2).generate().unwrap();
        let cfg = ReplacementConfig::new(LearnerSpec::gbt(GbtParams::default()));
        let r = constant_replacement(&ds, &cfg).unwrap();
        assert!(r.phi[0] > r.phi[2]);
        let g = gain_importance_report(&ds, &cfg).unwrap();
        assert!(g.phi.iter().all(|&v| v >= 0.0));
        assert!(g.phi[0] > g.phi[2]);
        let ols = ReplacementConfig::new(LearnerSpec::ols());
        assert!(matches!(gain_importance_report(&ds, &ols), Err(Error::Unsupported(_))));
    }
}
