//! Shapley Marginal Surplus for Strong Models.
//!
//! 1. Sample `k` feature subsets whose sizes cycle through 2..=p, members
//!    drawn uniformly without replacement.
//! 2. Cross-validate a model on every subset, and on every subset with one
//!    member dropped; the surplus of member l in subset i is
//!    `L(S_i without l) - L(S_i)`.
//! 3. Keep the subsets whose loss is within the best `top_fraction`.
//! 4. Average the kept surpluses per feature, first within each subset size
//!    and then across sizes.
//!
//! Every sampled subset gets its own cross-validation resample, shared with
//! its drops; repeated draws of the same subset therefore carry
//! independent loss estimates, and the top-b cutoff ranks draws rather
//! than distinct subsets.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{elapsed_ms, loss_increase, loss_scale, resample_plan, ImportanceReport, Method};
use crate::dataset::{Dataset, SplitKind, SplitPlan};
use crate::error::{Error, Result};
use crate::learner::{coalition_cv_loss, CoalitionMask, LearnerSpec, LossMetric};
use crate::rng;
use crate::shapley::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Aggregation {
    /// Mean within each subset size, then mean across sizes.
    #[default]
    SizeStratified,
    /// Mean over all kept records.
    PlainMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmssmConfig {
    pub k: usize,
    pub top_fraction: f64,
    pub learner: LearnerSpec,
    pub cv: SplitPlan,
    pub seed: u64,
    #[serde(default)]
    pub aggregation: Aggregation,
    /// Restricts sampled subset sizes; `None` cycles through 2..=p.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
}

impl SmssmConfig {
    pub fn new(learner: LearnerSpec) -> Self {
        SmssmConfig {
            k: 200,
            top_fraction: 0.25,
            learner,
            cv: SplitPlan::kfold(5, 0),
            seed: 0,
            aggregation: Aggregation::SizeStratified,
            sizes: None,
        }
    }

    pub(super) fn validate(&self, p: usize, n: usize) -> Result<()> {
        if p < 2 {
            return Err(Error::validation("SMSSM needs at least 2 features"));
        }
        if self.k < p - 1 {
            return Err(Error::validation(format!(
                "SMSSM needs k >= p - 1 = {} subsets, got {}",
                p - 1,
                self.k
            )));
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return Err(Error::validation(format!(
                "top fraction must be in (0, 1], got {}",
                self.top_fraction
            )));
        }
        if !matches!(self.cv.kind, SplitKind::KFold(_)) {
            return Err(Error::validation("SMSSM needs a k-fold plan"));
        }
        self.cv.validate(n)?;
        if let Some(sizes) = &self.sizes {
            if sizes.is_empty() || sizes.iter().any(|&s| s < 1 || s > p) {
                return Err(Error::validation(format!("subset sizes must lie in 1..={p}")));
            }
        }
        self.learner.validate()
    }
}

/// One evaluated (subset, dropped feature) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalRecord {
    pub mask: CoalitionMask,
    pub subset_loss: f64,
    pub dropped_feature: usize,
    pub drop_loss: f64,
    pub delta: f64,
}

impl MarginalRecord {
    fn new(mask: CoalitionMask, subset_loss: f64, dropped_feature: usize, drop_loss: f64, scale: f64) -> Self {
        MarginalRecord {
            mask,
            subset_loss,
            dropped_feature,
            drop_loss,
            delta: loss_increase(drop_loss, subset_loss, scale),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmssmDetails {
    /// Loss cutoff L_b: subsets at or below it are kept.
    pub cutoff: f64,
    /// Loss of every sampled subset, in sampling order (`None` if it failed).
    pub subset_losses: Vec<Option<f64>>,
    pub masks: Vec<CoalitionMask>,
    /// Kept records only.
    pub records: Vec<MarginalRecord>,
    /// Features that appear in no kept subset (their phi is 0).
    pub never_retained: Vec<usize>,
}

/// The `k` subsets SMSSM evaluates, in sampling order.
pub fn sample_masks(p: usize, k: usize, seed: u64, sizes: Option<&[usize]>) -> Vec<CoalitionMask> {
    let default_sizes: Vec<usize> = (2..=p).collect();
    let sizes = sizes.unwrap_or(&default_sizes);
    (0..k)
        .map(|i| {
            let size = sizes[i % sizes.len()];
            let mut r = rng::stream(seed, &[0x5355_4253, i as u64]);
            CoalitionMask::from_indices(p, index::sample(&mut r, p, size))
        })
        .collect()
}

pub fn smssm(ds: &Dataset, cfg: &SmssmConfig) -> Result<ImportanceReport> {
    let start = Instant::now();
    let p = ds.p();
    cfg.validate(p, ds.n())?;

    let masks = sample_masks(p, cfg.k, cfg.seed, cfg.sizes.as_deref());
    // subset i and all of its drops share resample i, so each delta is a paired difference
    let evaluated: Vec<Result<(f64, Vec<Option<f64>>)>> = masks
        .par_iter()
        .enumerate()
        .map(|(i, mask)| {
            let plan = resample_plan(&cfg.cv, cfg.seed, i);
            let loss = coalition_cv_loss(&cfg.learner, ds, mask, &plan, LossMetric::Mse)?;
            let drops = (0..p)
                .map(|l| {
                    mask.contains(l)
                        .then(|| coalition_cv_loss(&cfg.learner, ds, &mask.without(l), &plan, LossMetric::Mse))
                        .transpose()
                })
                .collect::<Result<_>>()?;
            Ok((loss, drops))
        })
        .collect();

    let mut causes = Vec::new();
    let mut samples = Vec::with_capacity(masks.len());
    for (i, r) in evaluated.into_iter().enumerate() {
        match r {
            Ok(s) => samples.push(Some(s)),
            Err(e) => {
                causes.push(format!("subset {i} {:?}: {e}", masks[i]));
                samples.push(None);
            }
        }
    }
    let mut ranked: Vec<f64> = samples.iter().flatten().map(|(l, _)| *l).collect();
    if ranked.is_empty() {
        return Err(Error::AllFailed { causes });
    }

    let mut flags = Vec::new();
    if !causes.is_empty() {
        flags.push(format!("failed_subsets:{}", causes.len()));
    }
    if masks.iter().any(|m| m.count() == 1) {
        flags.push("baseline_drop_loss".into());
    }

    ranked.sort_by(f64::total_cmp);
    let cut_idx = ((cfg.top_fraction * ranked.len() as f64).ceil() as usize).clamp(1, ranked.len()) - 1;
    let cutoff = ranked[cut_idx];

    let scale = loss_scale(ds);
    let mut records = Vec::new();
    let mut n_retained = 0usize;
    for (mask, sample) in masks.iter().zip(&samples) {
        let Some((loss, drops)) = sample else { continue };
        if *loss > cutoff {
            continue;
        }
        n_retained += 1;
        for (l, drop) in drops.iter().enumerate() {
            if let Some(drop) = drop {
                records.push(MarginalRecord::new(mask.clone(), *loss, l, *drop, scale));
            }
        }
    }
    let n_evaluations: usize = masks.iter().map(|m| 1 + m.count()).sum();
    let subset_losses: Vec<Option<f64>> = samples.iter().map(|s| s.as_ref().map(|(l, _)| *l)).collect();

    let phi = aggregate(p, &records, cfg.aggregation);
    let mut seen = vec![false; p];
    for r in &records {
        seen[r.dropped_feature] = true;
    }
    let never_retained: Vec<usize> = (0..p).filter(|&j| !seen[j]).collect();
    for &j in &never_retained {
        flags.push(format!("never_retained:{}", ds.feature_names()[j]));
    }

    let mut report = ImportanceReport::new(Method::Smssm, ds, phi, cfg.seed);
    report.n_models_fit = n_evaluations;
    report.distinct_fits = n_evaluations - causes.len();
    report.retained_fraction = n_retained as f64 / masks.len() as f64;
    report.flags = flags;
    report.smssm = Some(SmssmDetails {
        cutoff,
        subset_losses,
        masks,
        records,
        never_retained,
    });
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

fn aggregate(p: usize, records: &[MarginalRecord], how: Aggregation) -> Vec<f64> {
    match how {
        Aggregation::PlainMean => {
            let mut sums = vec![KahanSum::default(); p];
            let mut counts = vec![0usize; p];
            for r in records {
                sums[r.dropped_feature].add(r.delta);
                counts[r.dropped_feature] += 1;
            }
            (0..p)
                .map(|j| if counts[j] == 0 { 0.0 } else { sums[j].value() / counts[j] as f64 })
                .collect()
        }
        Aggregation::SizeStratified => {
            // (feature, size) -> (sum, count); BTreeMap keeps the summation order fixed
            let mut strata: BTreeMap<(usize, usize), (KahanSum, usize)> = BTreeMap::new();
            for r in records {
                let e = strata.entry((r.dropped_feature, r.mask.count())).or_default();
                e.0.add(r.delta);
                e.1 += 1;
            }
            let mut per_feature: Vec<(KahanSum, usize)> = vec![Default::default(); p];
            for ((j, _size), (sum, count)) in &strata {
                per_feature[*j].0.add(sum.value() / *count as f64);
                per_feature[*j].1 += 1;
            }
            per_feature
                .iter()
                .map(|(s, c)| if *c == 0 { 0.0 } else { s.value() / *c as f64 })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DgpId, DgpSpec};
    use crate::importance::{loco, loco_iteration, resample_plan, LocoConfig};

    fn exact_pair(n: usize, seed: u64) -> Dataset {
        // y = x0 exactly; x1 pure noise
        let base = DgpSpec::new(DgpId::DS4, n, seed).generate().unwrap();
        let cols = vec![base.column(0).to_vec(), base.column(2).to_vec()];
        let y = base.column(0).to_vec();
        Dataset::new(vec!["a".into(), "b".into()], cols, y, Some([0].into())).unwrap()
    }

    #[test]
    fn mask_sizes_cycle_round_robin() {
        let masks = sample_masks(5, 12, 3, None);
        let sizes: Vec<usize> = masks.iter().map(CoalitionMask::count).collect();
        assert_eq!(sizes, vec![2, 3, 4, 5, 2, 3, 4, 5, 2, 3, 4, 5]);
        assert_eq!(masks, sample_masks(5, 12, 3, None));
        assert_ne!(masks, sample_masks(5, 12, 4, None));
    }

    #[test]
    fn noise_feature_gets_zero_on_exact_data() {
        let ds = exact_pair(200, 1);
        let mut cfg = SmssmConfig::new(LearnerSpec::ols());
        cfg.k = 50;
        let r = smssm(&ds, &cfg).unwrap();
        assert!(r.phi[0] > 0.0);
        assert!(r.phi[1].abs() <= 1e-9, "{}", r.phi[1]);
    }

    #[test]
    fn two_features_reduce_to_drop_one_analysis() {
        let ds = DgpSpec::new(DgpId::DS1, 200, 4).generate().unwrap();
        let ds = Dataset::new(
            ds.feature_names()[..2].to_vec(),
            ds.columns()[..2].to_vec(),
            ds.y().to_vec(),
            None,
        )
        .unwrap();
        let mut cfg = SmssmConfig::new(LearnerSpec::ols());
        cfg.k = 10;
        cfg.top_fraction = 1.0;
        let r = smssm(&ds, &cfg).unwrap();
        let mut loco_cfg = LocoConfig::new(cfg.learner.clone());
        loco_cfg.repeats = 10;
        loco_cfg.cv = cfg.cv;
        let l = loco(&ds, &loco_cfg).unwrap();
        for j in 0..2 {
            assert!((r.phi[j] - l.phi[j]).abs() < 1e-12, "{j}");
        }
        assert_eq!(r.retained_fraction, 1.0);
        // with the default fraction only the best draws count
        cfg.top_fraction = 0.25;
        let r = smssm(&ds, &cfg).unwrap();
        assert_eq!(r.retained_fraction, 0.3);
        let (_, first) = loco_iteration(&ds, &cfg.learner, &resample_plan(&cfg.cv, cfg.seed, 0)).unwrap();
        assert_eq!(first.len(), 2);
    }

    #[test]
    fn full_size_masks_match_loco() {
        let ds = DgpSpec::new(DgpId::DS2, 150, 6).generate().unwrap();
        let mut cfg = SmssmConfig::new(LearnerSpec::gbt(crate::learner::GbtParams {
            n_rounds: 20,
            ..Default::default()
        }));
        cfg.k = 6;
        cfg.top_fraction = 1.0;
        cfg.sizes = Some(vec![5]);
        let r = smssm(&ds, &cfg).unwrap();
        let mut loco_cfg = LocoConfig::new(cfg.learner.clone());
        loco_cfg.repeats = 6;
        loco_cfg.cv = cfg.cv;
        let l = loco(&ds, &loco_cfg).unwrap();
        for j in 0..5 {
            assert!((r.phi[j] - l.phi[j]).abs() < 1e-12, "{j}: {} vs {}", r.phi[j], l.phi[j]);
        }
        assert_eq!(r.n_models_fit, l.n_models_fit);
    }

    #[test]
    fn evaluation_count_matches_formula() {
        let ds = DgpSpec::new(DgpId::DS2, 120, 2).generate().unwrap();
        let mut cfg = SmssmConfig::new(LearnerSpec::ols());
        cfg.k = 40;
        let r = smssm(&ds, &cfg).unwrap();
        let mean_pop = r.smssm.as_ref().unwrap().masks.iter().map(|m| m.count()).sum::<usize>() as f64 / 40.0;
        assert_eq!(r.n_models_fit as f64, 40.0 * (1.0 + mean_pop));
        assert!(r.distinct_fits <= r.n_models_fit);
    }

    #[test]
    fn records_are_consistent() {
        let ds = DgpSpec::new(DgpId::DS5, 150, 5).generate().unwrap();
        let mut cfg = SmssmConfig::new(LearnerSpec::ols());
        cfg.k = 20;
        cfg.top_fraction = 0.5;
        let r = smssm(&ds, &cfg).unwrap();
        let d = r.smssm.unwrap();
        for rec in &d.records {
            assert!(rec.mask.contains(rec.dropped_feature));
            let raw = rec.drop_loss - rec.subset_loss;
            assert!(rec.delta == raw || (rec.delta == 0.0 && raw.abs() < 1e-9), "{rec:?}");
            assert!(rec.subset_loss <= d.cutoff);
        }
        let kept = d.subset_losses.iter().flatten().filter(|&&l| l <= d.cutoff).count();
        assert!(kept as f64 >= 0.5 * 20.0);
    }

    #[test]
    fn never_retained_feature_is_flagged() {
        let ds = DgpSpec::new(DgpId::DS6, 150, 5).generate().unwrap();
        let mut cfg = SmssmConfig::new(LearnerSpec::ols());
        cfg.k = 9;
        cfg.top_fraction = 0.1;
        let r = smssm(&ds, &cfg).unwrap();
        let d = r.smssm.as_ref().unwrap();
        assert!(!d.never_retained.is_empty());
        for &j in &d.never_retained {
            assert_eq!(r.phi[j], 0.0);
            assert!(r.flags.iter().any(|f| f == &format!("never_retained:X{}", j + 1)));
        }
    }

    #[test]
    fn stratified_versus_plain_mean() {
        let rec = |bits: &[usize], l: usize, delta: f64| MarginalRecord::new(CoalitionMask::from_indices(3, bits.iter().copied()), 0.0, l, delta, 1.0);
        let records = vec![
            rec(&[0, 1], 0, 1.0),
            rec(&[0, 2], 0, 3.0),
            rec(&[0, 1, 2], 0, 8.0),
        ];
        let strat = aggregate(3, &records, Aggregation::SizeStratified);
        let plain = aggregate(3, &records, Aggregation::PlainMean);
        assert_eq!(strat[0], (2.0 + 8.0) / 2.0);
        assert_eq!(plain[0], 4.0);
        assert_eq!(strat[1], 0.0);
    }

    #[test]
    fn config_validation() {
        let ds = DgpSpec::new(DgpId::DS6, 60, 1).generate().unwrap();
        let mut cfg = SmssmConfig::new(LearnerSpec::ols());
        cfg.k = 8;
        assert!(smssm(&ds, &cfg).is_err());
        cfg.k = 9;
        cfg.top_fraction = 0.0;
        assert!(smssm(&ds, &cfg).is_err());
        cfg.top_fraction = 1.5;
        assert!(smssm(&ds, &cfg).is_err());
        let one = Dataset::new(vec!["a".into()], vec![vec![1.0, 2.0, 3.0]], vec![1.0, 2.0, 3.0], None).unwrap();
        assert!(smssm(&one, &SmssmConfig::new(LearnerSpec::ols())).is_err());
    }
}
