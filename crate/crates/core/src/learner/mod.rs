//! Learners: seeded fit on a feature subset, predict, and cross-validated loss.
//!
//! A model fit with a [`CoalitionMask`] is trained only on the masked-in
//! columns (the others are dropped before fitting, never zero-filled), so
//! its predictions cannot depend on masked-out inputs.

mod external;
mod gbt;
mod ols;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SplitKind, SplitPlan};
use crate::error::{Error, Result};
use crate::rng;

pub use external::ExternalSpec;
pub use gbt::{GbtModel, GbtParams};
pub use ols::OlsModel;

/// Binary inclusion vector over the p features.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoalitionMask(Vec<bool>);

impl CoalitionMask {
    pub fn full(p: usize) -> Self {
        CoalitionMask(vec![true; p])
    }

    pub fn empty(p: usize) -> Self {
        CoalitionMask(vec![false; p])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        CoalitionMask(bits)
    }

    pub fn from_indices(p: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = vec![false; p];
        for j in idx {
            bits[j] = true;
        }
        CoalitionMask(bits)
    }

    /// Mask whose bit j is bit j of `code` (j < 64).
    pub fn from_code(p: usize, code: u64) -> Self {
        CoalitionMask((0..p).map(|j| code >> j & 1 == 1).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&j| self.0[j]).collect()
    }

    pub fn without(&self, j: usize) -> Self {
        let mut bits = self.0.clone();
        bits[j] = false;
        CoalitionMask(bits)
    }

    pub fn with(&self, j: usize) -> Self {
        let mut bits = self.0.clone();
        bits[j] = true;
        CoalitionMask(bits)
    }

    /// Stable 64-bit key of the mask contents, used to derive fit seeds.
    pub fn key(&self) -> u64 {
        let mut words = vec![self.0.len() as u64];
        for chunk in self.0.chunks(64) {
            words.push(chunk.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (b as u64) << i));
        }
        rng::derive(0x6D61_736B, &words)
    }
}

impl fmt::Debug for CoalitionMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&b| if b { '1' } else { '0' }).collect();
        write!(f, "[{s}]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LossMetric {
    #[default]
    Mse,
}

impl LossMetric {
    pub fn loss(self, y: &[f64], yhat: &[f64]) -> f64 {
        match self {
            LossMetric::Mse => {
                let n = y.len() as f64;
                y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LearnerKind {
    Ols,
    Gbt(GbtParams),
    External(ExternalSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn ols() -> Self {
        LearnerSpec {
            kind: LearnerKind::Ols,
            seed: 0,
        }
    }

    pub fn gbt(params: GbtParams) -> Self {
        LearnerSpec {
            kind: LearnerKind::Gbt(params),
            seed: 0,
        }
    }

    pub fn external(spec: ExternalSpec) -> Self {
        LearnerSpec {
            kind: LearnerKind::External(spec),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LearnerKind::Ols => "ols",
            LearnerKind::Gbt(_) => "gbt",
            LearnerKind::External(_) => "external",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            LearnerKind::Ols => Ok(()),
            LearnerKind::Gbt(p) => p.validate(),
            LearnerKind::External(e) => e.validate(),
        }
    }

    /// Fits on all rows of `ds`, using only the columns in `mask`.
    pub fn fit(&self, ds: &Dataset, mask: &CoalitionMask) -> Result<FittedModel> {
        let rows: Vec<usize> = (0..ds.n()).collect();
        self.fit_rows(ds, &rows, mask, self.seed)
    }

    /// Fits on a subset of rows. `seed` drives any randomness in training.
    pub fn fit_rows(&self, ds: &Dataset, rows: &[usize], mask: &CoalitionMask, seed: u64) -> Result<FittedModel> {
        self.validate()?;
        if mask.len() != ds.p() {
            return Err(Error::validation(format!(
                "mask has length {} but dataset has {} features",
                mask.len(),
                ds.p()
            )));
        }
        if mask.count() == 0 {
            return Err(Error::validation("cannot fit a model on an empty feature mask"));
        }
        let features = mask.indices();
        let cols: Vec<Vec<f64>> = features
            .iter()
            .map(|&j| {
                let c = ds.column(j);
                rows.iter().map(|&i| c[i]).collect()
            })
            .collect();
        let y: Vec<f64> = rows.iter().map(|&i| ds.y()[i]).collect();

        let (state, ridge_fallback) = match &self.kind {
            LearnerKind::Ols => {
                let m = OlsModel::fit(&cols, &y)?;
                let flag = m.ridge_fallback;
                (ModelState::Ols(m), flag)
            }
            LearnerKind::Gbt(params) => (ModelState::Gbt(GbtModel::fit(params, &cols, &y, seed)?), false),
            LearnerKind::External(spec) => {
                let session = external::ExternalSession::fit(spec, ds, rows, mask, seed)?;
                (ModelState::External(Arc::new(Mutex::new(session))), false)
            }
        };
        let mut model = FittedModel {
            spec: self.clone(),
            mask: mask.clone(),
            features,
            state,
            train_loss: 0.0,
            ridge_fallback,
        };
        let col_refs: Vec<&[f64]> = model.features.iter().map(|&j| ds.column(j)).collect();
        let fitted = model.predict_selected(&col_refs, Some(rows), ds.p())?;
        model.train_loss = LossMetric::Mse.loss(&y, &fitted);
        Ok(model)
    }
}

enum ModelState {
    Ols(OlsModel),
    Gbt(GbtModel),
    External(Arc<Mutex<external::ExternalSession>>),
}

/// A trained model, immutable after fitting.
pub struct FittedModel {
    spec: LearnerSpec,
    mask: CoalitionMask,
    features: Vec<usize>,
    state: ModelState,
    train_loss: f64,
    ridge_fallback: bool,
}

impl fmt::Debug for FittedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FittedModel")
            .field("learner", &self.spec.name())
            .field("mask", &self.mask)
            .field("train_loss", &self.train_loss)
            .field("ridge_fallback", &self.ridge_fallback)
            .finish()
    }
}

impl FittedModel {
    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn mask(&self) -> &CoalitionMask {
        &self.mask
    }

    pub fn train_loss(&self) -> f64 {
        self.train_loss
    }

    /// True when OLS hit a singular design and fell back to a tiny ridge.
    pub fn ridge_fallback(&self) -> bool {
        self.ridge_fallback
    }

    pub fn as_gbt(&self) -> Option<&GbtModel> {
        match &self.state {
            ModelState::Gbt(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_ols(&self) -> Option<&OlsModel> {
        match &self.state {
            ModelState::Ols(m) => Some(m),
            _ => None,
        }
    }

    /// Predicts from a full-width column-major matrix (p columns).
    pub fn predict(&self, columns: &[Vec<f64>]) -> Result<Vec<f64>> {
        if columns.len() != self.mask.len() {
            return Err(Error::ColumnMismatch {
                expected: self.mask.len(),
                got: columns.len(),
            });
        }
        let refs: Vec<&[f64]> = self.features.iter().map(|&j| columns[j].as_slice()).collect();
        self.predict_selected(&refs, None, columns.len())
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.predict(ds.columns())
    }

    /// Predicts the given rows of a full-width dataset without copying it.
    pub fn predict_rows(&self, ds: &Dataset, rows: &[usize]) -> Result<Vec<f64>> {
        if ds.p() != self.mask.len() {
            return Err(Error::ColumnMismatch {
                expected: self.mask.len(),
                got: ds.p(),
            });
        }
        let refs: Vec<&[f64]> = self.features.iter().map(|&j| ds.column(j)).collect();
        self.predict_selected(&refs, Some(rows), ds.p())
    }

    // `cols` holds only the masked-in columns, in mask order.
    fn predict_selected(&self, cols: &[&[f64]], rows: Option<&[usize]>, p: usize) -> Result<Vec<f64>> {
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..cols.first().map_or(0, |c| c.len())).collect();
                &all
            }
        };
        let out = match &self.state {
            ModelState::Ols(m) => m.predict(cols, rows),
            ModelState::Gbt(m) => m.predict(cols, rows),
            ModelState::External(session) => {
                let mut session = session.lock().map_err(|_| Error::Protocol {
                    message: "external learner session poisoned".into(),
                    transcript: String::new(),
                })?;
                // the wire protocol carries full-width rows; masked-out columns are sent as 0
                // and must be ignored server-side
                let full: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|&i| {
                        let mut row = vec![0.0; p];
                        for (slot, &j) in self.features.iter().enumerate() {
                            row[j] = cols[slot][i];
                        }
                        row
                    })
                    .collect();
                session.predict(&full)?
            }
        };
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Unsupported(format!("model produced a non-finite prediction at row {i}")));
        }
        Ok(out)
    }

    /// Total split gain per feature (length p). Only defined for GBT models.
    pub fn gain_importance(&self) -> Result<Vec<f64>> {
        match &self.state {
            ModelState::Gbt(m) => {
                let mut out = vec![0.0; self.mask.len()];
                for (slot, g) in m.gain_by_feature().into_iter().enumerate() {
                    out[self.features[slot]] = g;
                }
                Ok(out)
            }
            _ => Err(Error::Unsupported(format!(
                "gain importance requires a gbt model, got {}",
                self.spec.name()
            ))),
        }
    }
}

/// Seed for one fold of one mask; a function of content, not of scheduling.
pub fn fit_seed(learner_seed: u64, mask: &CoalitionMask, fold: usize) -> u64 {
    rng::derive(learner_seed, &[mask.key(), fold as u64])
}

/// One cross-validation fold: the model trained on `train`, evaluated on `test`.
pub struct FoldFit {
    pub model: FittedModel,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub loss: f64,
}

/// Fits one model per fold and keeps them.
pub fn cv_fits(
    spec: &LearnerSpec,
    ds: &Dataset,
    mask: &CoalitionMask,
    plan: &SplitPlan,
    metric: LossMetric,
) -> Result<Vec<FoldFit>> {
    if !matches!(plan.kind, SplitKind::KFold(_)) {
        return Err(Error::validation("cross-validated loss needs a k-fold plan"));
    }
    let folds = plan.split(ds.n())?;
    folds
        .into_iter()
        .enumerate()
        .map(|(f, (train, test))| {
            let model = spec.fit_rows(ds, &train, mask, fit_seed(spec.seed, mask, f))?;
            let yhat = model.predict_rows(ds, &test)?;
            let y: Vec<f64> = test.iter().map(|&i| ds.y()[i]).collect();
            let loss = metric.loss(&y, &yhat);
            Ok(FoldFit {
                model,
                train,
                test,
                loss,
            })
        })
        .collect()
}

/// Mean held-out loss over the folds of `plan`.
pub fn cv_loss(
    spec: &LearnerSpec,
    ds: &Dataset,
    mask: &CoalitionMask,
    plan: &SplitPlan,
    metric: LossMetric,
) -> Result<f64> {
    let fits = cv_fits(spec, ds, mask, plan, metric)?;
    Ok(fits.iter().map(|f| f.loss).sum::<f64>() / fits.len() as f64)
}

/// Cross-validated loss of the empty coalition: predict the training-fold mean.
pub fn baseline_cv_loss(ds: &Dataset, plan: &SplitPlan, metric: LossMetric) -> Result<f64> {
    if !matches!(plan.kind, SplitKind::KFold(_)) {
        return Err(Error::validation("cross-validated loss needs a k-fold plan"));
    }
    let folds = plan.split(ds.n())?;
    let k = folds.len() as f64;
    let total: f64 = folds
        .iter()
        .map(|(train, test)| {
            let mean = train.iter().map(|&i| ds.y()[i]).sum::<f64>() / train.len() as f64;
            let y: Vec<f64> = test.iter().map(|&i| ds.y()[i]).collect();
            metric.loss(&y, &vec![mean; y.len()])
        })
        .sum();
    Ok(total / k)
}

/// Cross-validated loss for any mask, the empty one included.
pub fn coalition_cv_loss(
    spec: &LearnerSpec,
    ds: &Dataset,
    mask: &CoalitionMask,
    plan: &SplitPlan,
    metric: LossMetric,
) -> Result<f64> {
    if mask.count() == 0 {
        baseline_cv_loss(ds, plan, metric)
    } else {
        cv_loss(spec, ds, mask, plan, metric)
    }
}

/// Boosting settings in the form sent to external learners.
pub fn hyperparam_map(params: &GbtParams) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("n_rounds".to_string(), params.n_rounds as f64),
        ("max_depth".to_string(), params.max_depth as f64),
        ("learning_rate".to_string(), params.learning_rate),
        ("subsample".to_string(), params.subsample),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DgpId;
    use crate::DgpSpec;

    fn linear(n: usize, seed: u64, coef: &[f64]) -> Dataset {
        // DS6 columns other than the two near-copies of X1 are independent
        const INDEPENDENT: [usize; 8] = [0, 3, 4, 5, 6, 7, 8, 9];
        assert!(coef.len() <= INDEPENDENT.len());
        let base = DgpSpec::new(DgpId::DS6, n.max(2), seed).generate().unwrap();
        let cols: Vec<Vec<f64>> = (0..coef.len()).map(|j| base.column(INDEPENDENT[j]).to_vec()).collect();
        let cols: Vec<Vec<f64>> = cols
            .into_iter()
            .enumerate()
            .map(|(j, c)| c.iter().map(|v| v * (1.0 + j as f64 * 0.1) + j as f64 * 0.01).collect())
            .collect();
        let y = (0..n).map(|i| coef.iter().zip(&cols).map(|(b, c)| b * c[i]).sum()).collect();
        let names = (0..coef.len()).map(|j| format!("x{j}")).collect();
        Dataset::new(names, cols, y, None).unwrap()
    }

    fn single(x: Vec<f64>, y: Vec<f64>) -> Dataset {
        Dataset::new(vec!["x".into()], vec![x], y, None).unwrap()
    }

    #[test]
    fn ols_recovers_exact_slope() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.37 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let ds = single(x, y);
        let m = LearnerSpec::ols().fit(&ds, &CoalitionMask::full(1)).unwrap();
        let coef = m.as_ols().unwrap().coefficients()[0];
        assert!((coef - 2.0).abs() < 1e-9);
        assert!(m.train_loss() <= 1e-18);
        let out = m.predict(&[vec![3.0]]).unwrap();
        assert!((out[0] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn masked_out_columns_do_not_matter() {
        let ds = DgpSpec::new(DgpId::DS4, 200, 3).generate().unwrap();
        let mask = CoalitionMask::from_indices(3, [0, 2]);
        for spec in [LearnerSpec::ols(), LearnerSpec::gbt(GbtParams::default())] {
            let m = spec.fit(&ds, &mask).unwrap();
            let a = m.predict(&[vec![0.5, 1.0], vec![2.0, 2.0], vec![-1.0, 0.0]]).unwrap();
            let b = m.predict(&[vec![0.5, 1.0], vec![-7.0, 9.0], vec![-1.0, 0.0]]).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn gbt_is_deterministic() {
        let ds = DgpSpec::new(DgpId::DS4, 300, 5).generate().unwrap();
        let params = GbtParams {
            subsample: 0.7,
            ..GbtParams::default()
        };
        let spec = LearnerSpec::gbt(params).with_seed(11);
        let a = spec.fit(&ds, &CoalitionMask::full(3)).unwrap().predict_dataset(&ds).unwrap();
        let b = spec.fit(&ds, &CoalitionMask::full(3)).unwrap().predict_dataset(&ds).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gbt_constant_target() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let ds = single(x, vec![3.25; 50]);
        let m = LearnerSpec::gbt(GbtParams::default()).fit(&ds, &CoalitionMask::full(1)).unwrap();
        for v in m.predict_dataset(&ds).unwrap() {
            assert!((v - 3.25).abs() <= 1e-12);
        }
        assert_eq!(m.gain_importance().unwrap(), vec![0.0]);
    }

    #[test]
    fn predict_checks_width() {
        let ds = DgpSpec::new(DgpId::DS1, 50, 1).generate().unwrap();
        let m = LearnerSpec::ols().fit(&ds, &CoalitionMask::full(3)).unwrap();
        assert!(matches!(m.predict(&[vec![1.0]]), Err(Error::ColumnMismatch { .. })));
    }

    #[test]
    fn empty_mask_rejected() {
        let ds = DgpSpec::new(DgpId::DS1, 50, 1).generate().unwrap();
        assert!(LearnerSpec::ols().fit(&ds, &CoalitionMask::empty(3)).is_err());
        assert!(LearnerSpec::ols().fit(&ds, &CoalitionMask::full(2)).is_err());
    }

    #[test]
    fn singular_ols_falls_back_to_ridge() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            vec![x.clone(), x.clone()],
            x.iter().map(|v| 3.0 * v + 1.0).collect(),
            None,
        )
        .unwrap();
        let m = LearnerSpec::ols().fit(&ds, &CoalitionMask::full(2)).unwrap();
        assert!(m.ridge_fallback());
        assert!(m.train_loss() < 1e-6);
    }

    #[test]
    fn cv_loss_noiseless_is_zero() {
        let ds = linear(100, 1, &[1.0]);
        for k in [2, 5, 10] {
            let l = cv_loss(&LearnerSpec::ols(), &ds, &CoalitionMask::full(1), &SplitPlan::kfold(k, 3), LossMetric::Mse).unwrap();
            assert!(l <= 1e-12, "k={k}: {l}");
        }
    }

    #[test]
    fn cv_loss_without_true_covariate_matches_mean_predictor() {
        // y = x0 exactly; x1 independent noise
        let ds = DgpSpec::new(DgpId::DS2, 400, 2).generate().unwrap();
        let cols = vec![ds.column(0).to_vec(), ds.column(4).to_vec()];
        let y = ds.column(0).to_vec();
        let ds = Dataset::new(vec!["a".into(), "b".into()], cols, y, None).unwrap();
        let plan = SplitPlan::kfold(5, 9);
        let dropped = cv_loss(&LearnerSpec::ols(), &ds, &CoalitionMask::from_indices(2, [1]), &plan, LossMetric::Mse).unwrap();
        // oracle: mean predictor per fold, computed directly
        let mut oracle = 0.0;
        for (train, test) in plan.split(ds.n()).unwrap() {
            let m = train.iter().map(|&i| ds.y()[i]).sum::<f64>() / train.len() as f64;
            oracle += test.iter().map(|&i| (ds.y()[i] - m).powi(2)).sum::<f64>() / test.len() as f64;
        }
        oracle /= 5.0;
        assert!((dropped - oracle).abs() / oracle < 0.05, "{dropped} vs {oracle}");
        assert!((baseline_cv_loss(&ds, &plan, LossMetric::Mse).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn gain_importance_only_for_gbt() {
        let ds = DgpSpec::new(DgpId::DS1, 50, 1).generate().unwrap();
        let m = LearnerSpec::ols().fit(&ds, &CoalitionMask::full(3)).unwrap();
        assert!(matches!(m.gain_importance(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn gain_importance_single_feature_and_masked() {
        let ds = DgpSpec::new(DgpId::DS4, 300, 1).generate().unwrap();
        let m = LearnerSpec::gbt(GbtParams::default()).fit(&ds, &CoalitionMask::from_indices(3, [0])).unwrap();
        let g = m.gain_importance().unwrap();
        assert!(g[0] > 0.0);
        assert_eq!((g[1], g[2]), (0.0, 0.0));
    }

    #[test]
    fn mask_helpers() {
        let m = CoalitionMask::from_code(4, 0b1010);
        assert_eq!(m.indices(), vec![1, 3]);
        assert_eq!(m.count(), 2);
        assert_eq!(m.with(0).without(3).indices(), vec![0, 1]);
        assert_eq!(format!("{m:?}"), "[0101]");
        assert_ne!(m.key(), m.with(0).key());
        assert_ne!(CoalitionMask::full(3).key(), CoalitionMask::full(4).key());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn subset_function_law(seed in 0u64..500, code in 1u64..8, noise in proptest::collection::vec(-5.0f64..5.0, 3)) {
            let ds = DgpSpec::new(DgpId::DS5, 120, seed).generate().unwrap();
            let mask = CoalitionMask::from_code(3, code);
            let spec = LearnerSpec::gbt(GbtParams { n_rounds: 20, ..GbtParams::default() });
            let model = spec.fit(&ds, &mask).unwrap();
            let base = ds.columns().to_vec();
            let mut perturbed = base.clone();
            for j in 0..3 {
                if !mask.contains(j) {
                    for v in perturbed[j].iter_mut() { *v += noise[j]; }
                }
            }
            proptest::prop_assert_eq!(model.predict(&base).unwrap(), model.predict(&perturbed).unwrap());
        }

        #[test]
        fn ols_recovers_coefficients(seed in 0u64..200, p in 1usize..8) {
            let coef: Vec<f64> = (0..p).map(|j| (j as f64 - 2.5) * 0.7).collect();
            let ds = linear(300, seed, &coef);
            let m = LearnerSpec::ols().fit(&ds, &CoalitionMask::full(p)).unwrap();
            for (a, b) in m.as_ols().unwrap().coefficients().iter().zip(&coef) {
                proptest::prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn full_mask_equals_unmasked_path() {
        // the all-ones mask is the ordinary model
        let ds = DgpSpec::new(DgpId::DS4, 200, 8).generate().unwrap();
        let spec = LearnerSpec::gbt(GbtParams::default());
        let masked = spec.fit(&ds, &CoalitionMask::full(3)).unwrap().predict_dataset(&ds).unwrap();
        let y = ds.y().to_vec();
        let cols = ds.columns().to_vec();
        let direct = GbtModel::fit(&GbtParams::default(), &cols, &y, spec.seed).unwrap();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let rows: Vec<usize> = (0..ds.n()).collect();
        assert_eq!(masked, direct.predict(&refs, &rows));
    }
}
