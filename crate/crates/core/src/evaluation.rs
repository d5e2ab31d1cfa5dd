//! Scoring importance vectors against known truth, split-half consistency,
//! method-comparison tables and the refit-Shapley ground truth.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DgpId, DgpSpec, SplitPlan};
use crate::error::{Error, Result};
use crate::importance::{
    ImportanceReport, LocoConfig, McrConfig, Method, MethodConfig, ReplacementConfig, SmssmConfig,
};
use crate::learner::{
    coalition_cv_loss, hyperparam_map, CoalitionMask, ExternalSpec, GbtParams, LearnerSpec, LossMetric,
};
use crate::rng;
use crate::shapley::{exact_shapley, Game, KahanSum, ShapleyVector};

const CONSISTENCY_STREAM: u64 = 0x434F_4E53;
const CV_STREAM: u64 = 0x4356_5350;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GroundTruth {
    WeightVector(Vec<f64>),
    TrueSet(BTreeSet<usize>),
}

impl GroundTruth {
    pub fn validate(&self) -> Result<()> {
        match self {
            GroundTruth::WeightVector(w) => {
                if w.iter().any(|v| !v.is_finite()) {
                    return Err(Error::validation("ground-truth weights must be finite"));
                }
                if w.iter().all(|&v| v == 0.0) {
                    return Err(Error::validation("ground-truth weights are all zero"));
                }
                Ok(())
            }
            GroundTruth::TrueSet(t) if t.is_empty() => Err(Error::validation("true set is empty")),
            GroundTruth::TrueSet(_) => Ok(()),
        }
    }
}

/// A metric value; `degenerate` marks the conventional value returned when
/// the importance vector has no positive weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

fn clip(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

/// Angle in radians between two weight vectors. With `clip_negative`,
/// negative entries of both are set to 0 first. A zero vector gives pi/2.
pub fn angle_score(phi: &[f64], truth: &[f64], clip_negative: bool) -> Result<Score> {
    if phi.len() != truth.len() {
        return Err(Error::validation(format!(
            "importance vector has length {}, truth has {}",
            phi.len(),
            truth.len()
        )));
    }
    if phi.iter().chain(truth).any(|v| !v.is_finite()) {
        return Err(Error::validation("angle of a non-finite vector"));
    }
    let (a, b) = if clip_negative { (clip(phi), clip(truth)) } else { (phi.to_vec(), truth.to_vec()) };
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(Score {
            value: std::f64::consts::FRAC_PI_2,
            degenerate: true,
        });
    }
    let cos: f64 = a.iter().zip(&b).map(|(x, y)| (x / na) * (y / nb)).sum();
    Ok(Score {
        value: cos.clamp(-1.0, 1.0).acos(),
        degenerate: false,
    })
}

/// Fraction of the (clipped) total weight that sits on the true covariates.
pub fn selective_ratio(phi: &[f64], truth: &BTreeSet<usize>) -> Result<Score> {
    if let Some(&bad) = truth.iter().find(|&&j| j >= phi.len()) {
        return Err(Error::validation(format!("true index {bad} out of range for {} features", phi.len())));
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("selective ratio of a non-finite vector"));
    }
    let c = clip(phi);
    let total: f64 = c.iter().sum();
    if total == 0.0 {
        return Ok(Score {
            value: 0.0,
            degenerate: true,
        });
    }
    let on: f64 = truth.iter().map(|&j| c[j]).sum();
    Ok(Score {
        value: on / total,
        degenerate: false,
    })
}

/// Scores `phi` against either kind of truth.
pub fn score(phi: &[f64], truth: &GroundTruth, clip_negative: bool) -> Result<Score> {
    truth.validate()?;
    match truth {
        GroundTruth::WeightVector(w) => angle_score(phi, w, clip_negative),
        GroundTruth::TrueSet(t) => selective_ratio(phi, t),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyResult {
    pub mean_angle: f64,
    /// Angle per successful trial, in trial order.
    pub angles: Vec<f64>,
    pub skipped: Vec<String>,
}

/// Angle between the importance vectors computed on two datasets.
pub fn paired_half_angle(a: &Dataset, b: &Dataset, method: &MethodConfig, clip_negative: bool) -> Result<f64> {
    let ra = method.run(a)?;
    let rb = method.run(b)?;
    Ok(angle_score(&ra.phi, &rb.phi, clip_negative)?.value)
}

/// Mean angle between importances computed on random halves of `ds`.
pub fn split_consistency(
    ds: &Dataset,
    method: &MethodConfig,
    trials: usize,
    seed: u64,
    clip_negative: bool,
) -> Result<ConsistencyResult> {
    if ds.n() < 40 {
        return Err(Error::validation(format!("split consistency needs n >= 40, got {}", ds.n())));
    }
    if trials < 1 {
        return Err(Error::validation("split consistency needs at least one trial"));
    }
    let outcomes: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let plan = SplitPlan::halves(rng::derive(seed, &[CONSISTENCY_STREAM, t as u64]));
            let (a, b) = plan.split(ds.n())?.swap_remove(0);
            paired_half_angle(&ds.select_rows(&a)?, &ds.select_rows(&b)?, method, clip_negative)
        })
        .collect();
    let mut angles = Vec::new();
    let mut skipped = Vec::new();
    for (t, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(a) => angles.push(a),
            Err(e) => skipped.push(format!("trial {t}: {e}")),
        }
    }
    if angles.is_empty() {
        return Err(Error::AllFailed { causes: skipped });
    }
    let mean_angle = angles.iter().copied().collect::<KahanSum>().value() / angles.len() as f64;
    Ok(ConsistencyResult {
        mean_angle,
        angles,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Angle,
    SelectiveRatio,
    ConsistencyAngle,
}

impl MetricKind {
    pub fn lower_is_better(self) -> bool {
        !matches!(self, MetricKind::SelectiveRatio)
    }

    /// Metric used for a simulated dataset in the comparison grid: angles
    /// where a weight vector is the target, selectivity where only the
    /// true set matters.
    pub fn for_dgp(id: DgpId) -> Self {
        match id {
            DgpId::DS1 | DgpId::DS5 | DgpId::DS6 => MetricKind::Angle,
            DgpId::DS2 | DgpId::DS3 | DgpId::DS4 => MetricKind::SelectiveRatio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Mean over seeds; `None` when any seed failed.
    pub value: Option<f64>,
    pub metric: MetricKind,
    pub seeds: usize,
    pub per_seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    /// Metric of each dataset column.
    pub metric: Vec<MetricKind>,
    /// `cells[method][dataset]`.
    pub cells: Vec<Vec<Cell>>,
}

impl ComparisonTable {
    pub fn is_complete(&self) -> bool {
        self.cells.len() == self.methods.len()
            && self.cells.iter().all(|row| {
                row.len() == self.datasets.len() && row.iter().all(|c| c.value.is_some_and(f64::is_finite))
            })
    }

    pub fn value(&self, method: &str, dataset: &str) -> Option<f64> {
        let i = self.methods.iter().position(|m| m == method)?;
        let j = self.datasets.iter().position(|d| d == dataset)?;
        self.cells[i][j].value
    }

    pub fn to_text(&self) -> String {
        let head: Vec<String> = self
            .datasets
            .iter()
            .zip(&self.metric)
            .map(|(d, m)| {
                let tag = match m {
                    MetricKind::Angle => "angle",
                    MetricKind::SelectiveRatio => "select",
                    MetricKind::ConsistencyAngle => "consist",
                };
                format!("{d} ({tag})")
            })
            .collect();
        let mw = self.methods.iter().map(String::len).max().unwrap_or(6).max(6);
        let cw = head.iter().map(String::len).max().unwrap_or(8).max(8);
        let mut out = String::new();
        let _ = write!(out, "{:<mw$}", "method");
        for h in &head {
            let _ = write!(out, "  {h:>cw$}");
        }
        out.push('\n');
        for (m, row) in self.methods.iter().zip(&self.cells) {
            let _ = write!(out, "{m:<mw$}");
            for c in row {
                match c.value {
                    Some(v) => {
                        let _ = write!(out, "  {v:>cw$.3}");
                    }
                    None => {
                        let _ = write!(out, "  {:>cw$}", "n/a");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub method: String,
    pub mean_rank: f64,
    pub best: f64,
    pub worst: f64,
}

/// Ranks methods within every dataset column (1 = best, ties share the
/// mean rank) and summarises each method's ranks.
pub fn rank_summary(table: &ComparisonTable) -> Result<Vec<RankSummary>> {
    if !table.is_complete() || table.metric.len() != table.datasets.len() || table.methods.is_empty() {
        return Err(Error::validation("rank summary needs a complete table"));
    }
    let m = table.methods.len();
    let mut ranks = vec![Vec::with_capacity(table.datasets.len()); m];
    for (j, kind) in table.metric.iter().enumerate() {
        let vals: Vec<f64> = table.cells.iter().map(|row| row[j].value.expect("complete")).collect();
        let better = |a: f64, b: f64| if kind.lower_is_better() { a < b } else { a > b };
        for i in 0..m {
            let ahead = vals.iter().filter(|&&v| better(v, vals[i])).count();
            let tied = vals.iter().filter(|&&v| v == vals[i]).count();
            // tied block occupies ranks ahead+1 ..= ahead+tied
            ranks[i].push(ahead as f64 + (tied as f64 + 1.0) / 2.0);
        }
    }
    Ok(table
        .methods
        .iter()
        .zip(ranks)
        .map(|(name, r)| RankSummary {
            method: name.clone(),
            mean_rank: r.iter().sum::<f64>() / r.len() as f64,
            best: r.iter().copied().fold(f64::INFINITY, f64::min),
            worst: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect())
}

/// Settings for the refit-Shapley oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n: usize,
    pub seed: u64,
    pub folds: usize,
    pub gbt: GbtParams,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            n: 20_000,
            seed: 0x0AC1_E000,
            folds: 5,
            gbt: GbtParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    /// Exact Shapley values of the refit game.
    pub weights: ShapleyVector,
    pub true_set: BTreeSet<usize>,
    /// v(S) = L(empty) - L(S) over all coalitions, L the cross-validated loss.
    pub game: Game,
}

impl Oracle {
    pub fn weight_truth(&self) -> GroundTruth {
        GroundTruth::WeightVector(self.weights.phi.clone())
    }

    pub fn set_truth(&self) -> GroundTruth {
        GroundTruth::TrueSet(self.true_set.clone())
    }
}

/// Ground truth with default oracle settings (n = 20000).
pub fn derive_ground_truth(spec: &DgpSpec) -> Result<Oracle> {
    derive_ground_truth_with(spec, &OracleConfig::default())
}

/// Exact Shapley values of the game valued by cross-validated loss
/// reduction of a model refit on each coalition. OLS for linear
/// processes, boosted trees otherwise. `spec.n` and `spec.seed` are
/// replaced by the oracle's.
pub fn derive_ground_truth_with(spec: &DgpSpec, cfg: &OracleConfig) -> Result<Oracle> {
    let p = spec.id.p();
    if p > 12 {
        return Err(Error::TooManyPlayers { players: p, max: 12 });
    }
    let ds = DgpSpec {
        n: cfg.n,
        seed: cfg.seed,
        ..*spec
    }
    .generate()?;
    let learner = if spec.id.is_linear() { LearnerSpec::ols() } else { LearnerSpec::gbt(cfg.gbt) };
    let plan = SplitPlan::kfold(cfg.folds, rng::derive(cfg.seed, &[CV_STREAM]));
    let losses: Vec<f64> = (0..1u64 << p)
        .into_par_iter()
        .map(|code| coalition_cv_loss(&learner, &ds, &CoalitionMask::from_code(p, code), &plan, LossMetric::Mse))
        .collect::<Result<_>>()?;
    let game = Game::from_values(p, losses.iter().map(|l| losses[0] - l).collect())?;
    let weights = exact_shapley(&game)?;
    Ok(Oracle {
        weights,
        true_set: spec.id.true_set(),
        game,
    })
}

/// Which learner the refit methods use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LearnerChoice {
    /// OLS on linear simulated processes, boosted trees otherwise.
    Auto,
    Ols,
    Gbt,
    External(ExternalSpec),
}

/// Everything needed to turn (method, dataset, seed) into a method config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub k: usize,
    pub top_fraction: f64,
    pub repeats: usize,
    pub folds: usize,
    pub delta: f64,
    pub n_perms: usize,
    pub k_models: usize,
    pub gbt: GbtParams,
    pub learner: LearnerChoice,
    pub clip: bool,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            k: 200,
            top_fraction: 0.25,
            repeats: 20,
            folds: 5,
            delta: 0.05,
            n_perms: 20,
            k_models: 20,
            gbt: GbtParams::default(),
            learner: LearnerChoice::Auto,
            clip: true,
        }
    }
}

impl Protocol {
    /// Learner for the refit methods; `dgp` is `None` for CSV data.
    pub fn learner(&self, dgp: Option<DgpId>, seed: u64) -> LearnerSpec {
        let spec = match &self.learner {
            LearnerChoice::Auto if dgp.is_some_and(DgpId::is_linear) => LearnerSpec::ols(),
            LearnerChoice::Auto | LearnerChoice::Gbt => LearnerSpec::gbt(self.gbt),
            LearnerChoice::Ols => LearnerSpec::ols(),
            LearnerChoice::External(e) => {
                let mut e = e.clone();
                if e.hyperparams.is_empty() {
                    e.hyperparams = hyperparam_map(&self.gbt);
                }
                LearnerSpec::external(e)
            }
        };
        spec.with_seed(seed)
    }

    /// Gain importance and MCR are defined for boosted trees only.
    pub fn method_config(&self, method: Method, dgp: Option<DgpId>, seed: u64) -> MethodConfig {
        let cv = SplitPlan::kfold(self.folds, rng::derive(seed, &[CV_STREAM]));
        let learner = self.learner(dgp, seed);
        match method {
            Method::Smssm => {
                let mut c = SmssmConfig::new(learner);
                c.k = self.k;
                c.top_fraction = self.top_fraction;
                c.cv = cv;
                c.seed = seed;
                MethodConfig::Smssm(c)
            }
            Method::Loco => {
                let mut c = LocoConfig::new(learner);
                c.repeats = self.repeats;
                c.cv = cv;
                c.seed = seed;
                MethodConfig::Loco(c)
            }
            Method::Mcr => {
                let mut c = McrConfig::new(self.gbt);
                c.k_models = self.k_models;
                c.delta = self.delta;
                c.n_perms = self.n_perms;
                c.cv = cv;
                c.seed = seed;
                MethodConfig::Mcr(c)
            }
            Method::ConstantReplacement => {
                let mut c = ReplacementConfig::new(learner);
                c.cv = cv;
                c.seed = seed;
                MethodConfig::ConstantReplacement(c)
            }
            Method::Gain => {
                let mut c = ReplacementConfig::new(LearnerSpec::gbt(self.gbt).with_seed(seed));
                c.cv = cv;
                c.seed = seed;
                MethodConfig::Gain(c)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub datasets: Vec<DgpId>,
    pub methods: Vec<Method>,
    pub n: usize,
    pub seeds: Vec<u64>,
    pub noise_scale: f64,
    pub protocol: Protocol,
    pub oracle: OracleConfig,
}

impl Grid {
    pub fn new(n: usize, seeds: Vec<u64>) -> Self {
        Grid {
            datasets: DgpId::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            n,
            seeds,
            noise_scale: 1.0,
            protocol: Protocol::default(),
            oracle: OracleConfig::default(),
        }
    }

    fn spec(&self, d: DgpId, seed: u64) -> DgpSpec {
        DgpSpec::new(d, self.n, seed).with_noise(self.noise_scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub dataset: DgpId,
    pub seed: u64,
    pub method: Method,
    pub score: Option<Score>,
    pub error: Option<String>,
    pub report: Option<ImportanceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub table: ComparisonTable,
    pub runs: Vec<GridRun>,
    /// Oracle weights per dataset, for angle columns.
    pub oracle_weights: Vec<(DgpId, Vec<f64>)>,
}

/// Runs every method on every (dataset, seed) and tabulates mean scores.
pub fn run_grid(grid: &Grid) -> Result<GridResult> {
    if grid.seeds.is_empty() || grid.datasets.is_empty() || grid.methods.is_empty() {
        return Err(Error::validation("grid needs at least one dataset, method and seed"));
    }
    let truths: Vec<GroundTruth> = grid
        .datasets
        .par_iter()
        .map(|&d| match MetricKind::for_dgp(d) {
            MetricKind::SelectiveRatio => Ok(GroundTruth::TrueSet(d.true_set())),
            _ => Ok(derive_ground_truth_with(&grid.spec(d, 0), &grid.oracle)?.weight_truth()),
        })
        .collect::<Result<_>>()?;

    let mut tasks = Vec::new();
    for (di, &d) in grid.datasets.iter().enumerate() {
        for &seed in &grid.seeds {
            for &m in &grid.methods {
                tasks.push((di, d, seed, m));
            }
        }
    }
    let runs: Vec<GridRun> = tasks
        .par_iter()
        .map(|&(di, d, seed, m)| {
            let outcome = grid.spec(d, seed).generate().and_then(|ds| {
                let report = grid.protocol.method_config(m, Some(d), seed).run(&ds)?;
                let s = score(&report.phi, &truths[di], grid.protocol.clip)?;
                Ok((report, s))
            });
            match outcome {
                Ok((report, s)) => GridRun {
                    dataset: d,
                    seed,
                    method: m,
                    score: Some(s),
                    error: None,
                    report: Some(report),
                },
                Err(e) => GridRun {
                    dataset: d,
                    seed,
                    method: m,
                    score: None,
                    error: Some(e.to_string()),
                    report: None,
                },
            }
        })
        .collect();

    let cells = grid
        .methods
        .iter()
        .map(|&m| {
            grid.datasets
                .iter()
                .map(|&d| {
                    let scores: Vec<Option<f64>> = runs
                        .iter()
                        .filter(|r| r.dataset == d && r.method == m)
                        .map(|r| r.score.map(|s| s.value))
                        .collect();
                    let per_seed: Vec<f64> = scores.iter().flatten().copied().collect();
                    let value = (per_seed.len() == scores.len())
                        .then(|| per_seed.iter().copied().collect::<KahanSum>().value() / per_seed.len() as f64);
                    Cell {
                        value,
                        metric: MetricKind::for_dgp(d),
                        seeds: per_seed.len(),
                        per_seed,
                    }
                })
                .collect()
        })
        .collect();
    let table = ComparisonTable {
        methods: grid.methods.iter().map(Method::to_string).collect(),
        datasets: grid.datasets.iter().map(DgpId::to_string).collect(),
        metric: grid.datasets.iter().map(|&d| MetricKind::for_dgp(d)).collect(),
        cells,
    };
    let oracle_weights = grid
        .datasets
        .iter()
        .zip(&truths)
        .filter_map(|(&d, t)| match t {
            GroundTruth::WeightVector(w) => Some((d, w.clone())),
            GroundTruth::TrueSet(_) => None,
        })
        .collect();
    Ok(GridResult {
        table,
        runs,
        oracle_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn angle_examples() {
        assert!(angle_score(&[1.0, 2.0, 0.0], &[2.0, 4.0, 0.0], true).unwrap().value.abs() < 1e-7);
        let ortho = angle_score(&[1.0, 0.0], &[0.0, 3.0], true).unwrap();
        assert!((ortho.value - FRAC_PI_2).abs() < 1e-12);
        let zero = angle_score(&[-1.0, 0.0], &[1.0, 1.0], true).unwrap();
        assert_eq!(zero, Score { value: FRAC_PI_2, degenerate: true });
        // without clipping the negative entry counts
        let raw = angle_score(&[-1.0, 0.0], &[1.0, 0.0], false).unwrap();
        assert!((raw.value - std::f64::consts::PI).abs() < 1e-12);
        assert!(angle_score(&[1.0], &[1.0, 2.0], true).is_err());
    }

    #[test]
    fn selective_examples() {
        let t: BTreeSet<usize> = [0, 1].into();
        assert_eq!(selective_ratio(&[1.0, 2.0, 0.0], &t).unwrap().value, 1.0);
        assert_eq!(selective_ratio(&[0.0, -1.0, 3.0], &t).unwrap().value, 0.0);
        assert_eq!(selective_ratio(&[1.0, 0.0, 3.0], &t).unwrap().value, 0.25);
        assert!(selective_ratio(&[0.0, 0.0, -2.0], &t).unwrap().degenerate);
        assert!(selective_ratio(&[1.0], &t).is_err());
    }

    fn table(vals: &[&[f64]], metric: Vec<MetricKind>) -> ComparisonTable {
        ComparisonTable {
            methods: (0..vals.len()).map(|i| format!("m{i}")).collect(),
            datasets: (0..metric.len()).map(|j| format!("d{j}")).collect(),
            cells: vals
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&metric)
                        .map(|(&v, &k)| Cell { value: Some(v), metric: k, seeds: 1, per_seed: vec![v] })
                        .collect()
                })
                .collect(),
            metric,
        }
    }

    #[test]
    fn ranks_respect_direction_and_ties() {
        let t = table(
            &[&[0.1, 0.9], &[0.5, 0.9], &[0.3, 0.2]],
            vec![MetricKind::Angle, MetricKind::SelectiveRatio],
        );
        let r = rank_summary(&t).unwrap();
        assert_eq!(r[0].best, 1.0);
        assert_eq!(r[0].worst, 1.5);
        assert_eq!(r[1].mean_rank, (3.0 + 1.5) / 2.0);
        assert_eq!(r[2].worst, 3.0);
        let total: f64 = r.iter().map(|s| s.mean_rank).sum();
        assert_eq!(total, 3.0 * 2.0);
    }

    #[test]
    fn incomplete_table_is_rejected() {
        let mut t = table(&[&[0.1], &[0.2]], vec![MetricKind::Angle]);
        t.cells[1][0].value = None;
        assert!(rank_summary(&t).is_err());
        assert!(t.to_text().contains("n/a"));
    }

    #[test]
    fn table_json_shape() {
        let t = table(&[&[0.1, 0.2]], vec![MetricKind::Angle, MetricKind::ConsistencyAngle]);
        let v = serde_json::to_value(&t).unwrap();
        for key in ["methods", "datasets", "metric", "cells"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["metric"][1], "consistency_angle");
        assert_eq!(v["cells"][0][1]["value"], 0.2);
    }

    #[test]
    fn protocol_learners() {
        let p = Protocol::default();
        assert_eq!(p.learner(Some(DgpId::DS1), 0).name(), "ols");
        assert_eq!(p.learner(Some(DgpId::DS4), 0).name(), "gbt");
        assert_eq!(p.learner(None, 0).name(), "gbt");
        match p.method_config(Method::Gain, Some(DgpId::DS1), 3) {
            MethodConfig::Gain(c) => assert_eq!(c.learner.name(), "gbt"),
            other => panic!("{other:?}"),
        }
    }
}
