//! Gradient-boosted regression trees with squared-error loss.
//!
//! Trees are grown level by level with exact greedy splits over presorted
//! columns. Split gain and leaf weights follow the usual second-order
//! formulation (hessian = 1 for squared error) with an L2 penalty on leaf
//! weights.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

const LAMBDA: f64 = 1.0;
const MIN_CHILD_WEIGHT: f64 = 1.0;
// relative to the root score of the round; smaller gains are rounding noise
const MIN_RELATIVE_GAIN: f64 = 1e-12;
const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            subsample: 1.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds < 1 {
            return Err(Error::validation("gbt n_rounds must be >= 1"));
        }
        if !(1..=12).contains(&self.max_depth) {
            return Err(Error::validation(format!("gbt max_depth must be in 1..=12, got {}", self.max_depth)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::validation(format!(
                "gbt learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::validation(format!("gbt subsample must be in (0, 1], got {}", self.subsample)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Node {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    value: f64,
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    #[inline]
    fn predict(&self, cols: &[&[f64]], i: usize) -> f64 {
        let mut at = 0usize;
        loop {
            let node = &self.nodes[at];
            if node.feature == LEAF {
                return node.value;
            }
            at = if cols[node.feature as usize][i] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }
}

#[derive(Debug, Clone)]
pub struct GbtModel {
    base_score: f64,
    trees: Vec<Tree>,
    gain: Vec<f64>,
    loss_history: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl GbtModel {
    pub fn fit(params: &GbtParams, cols: &[Vec<f64>], y: &[f64], seed: u64) -> Result<Self> {
        params.validate()?;
        let n = y.len();
        let q = cols.len();
        if n == 0 || q == 0 {
            return Err(Error::validation("gbt needs at least one row and one column"));
        }
        let col_refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let sorted: Vec<Vec<u32>> = cols
            .iter()
            .map(|c| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();

        let base_score = y.iter().sum::<f64>() / n as f64;
        let mut pred = vec![base_score; n];
        let mut grad = vec![0.0; n];
        let mut gain = vec![0.0; q];
        let mut trees = Vec::with_capacity(params.n_rounds);
        let mut loss_history = Vec::with_capacity(params.n_rounds + 1);
        let mse = |pred: &[f64]| y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
        loss_history.push(mse(&pred));

        let n_sample = ((params.subsample * n as f64).round() as usize).clamp(1, n);
        let mut in_sample = vec![true; n];

        for round in 0..params.n_rounds {
            for i in 0..n {
                grad[i] = pred[i] - y[i];
            }
            if n_sample < n {
                in_sample.iter_mut().for_each(|s| *s = false);
                let mut r = rng::stream(seed, &[0x6762_7421, round as u64]);
                for i in index::sample(&mut r, n, n_sample) {
                    in_sample[i] = true;
                }
            }
            let tree = grow_tree(params, &col_refs, &sorted, &grad, &in_sample, &mut gain);
            for (i, p) in pred.iter_mut().enumerate() {
                *p += tree.predict(&col_refs, i);
            }
            trees.push(tree);
            loss_history.push(mse(&pred));
        }
        Ok(GbtModel {
            base_score,
            trees,
            gain,
            loss_history,
        })
    }

    pub(crate) fn predict(&self, cols: &[&[f64]], rows: &[usize]) -> Vec<f64> {
        rows.iter()
            .map(|&i| self.base_score + self.trees.iter().map(|t| t.predict(cols, i)).sum::<f64>())
            .collect()
    }

    /// Total loss reduction contributed by splits on each included column.
    pub fn gain_by_feature(&self) -> Vec<f64> {
        self.gain.clone()
    }

    /// Training MSE before the first round and after each round.
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

fn score(g: f64, h: f64) -> f64 {
    g * g / (h + LAMBDA)
}

fn grow_tree(
    params: &GbtParams,
    cols: &[&[f64]],
    sorted: &[Vec<u32>],
    grad: &[f64],
    in_sample: &[bool],
    gain_total: &mut [f64],
) -> Tree {
    let n = grad.len();
    let mut nodes = vec![Node {
        feature: LEAF,
        threshold: 0.0,
        left: LEAF,
        right: LEAF,
        value: 0.0,
    }];
    // node id per row; LEAF for rows outside the sample or in finished nodes
    let mut node_of: Vec<u32> = (0..n).map(|i| if in_sample[i] { 0 } else { LEAF }).collect();
    let (g0, h0) = (0..n).filter(|&i| in_sample[i]).fold((0.0, 0.0), |(g, h), i| (g + grad[i], h + 1.0));
    let mut sums = vec![(g0, h0)];
    let min_gain = MIN_RELATIVE_GAIN * (1.0 + grad.iter().map(|g| g * g).sum::<f64>());
    let mut frontier: Vec<u32> = vec![0];

    for _depth in 0..params.max_depth {
        if frontier.is_empty() {
            break;
        }
        // slot of each frontier node in the per-level scratch arrays
        let mut slot = vec![u32::MAX; nodes.len()];
        for (s, &id) in frontier.iter().enumerate() {
            slot[id as usize] = s as u32;
        }
        let m = frontier.len();
        let mut best: Vec<Option<Candidate>> = vec![None; m];
        let mut gl = vec![0.0; m];
        let mut hl = vec![0.0; m];
        let mut last = vec![f64::NAN; m];

        for (f, order) in sorted.iter().enumerate() {
            gl.iter_mut().for_each(|v| *v = 0.0);
            hl.iter_mut().for_each(|v| *v = 0.0);
            last.iter_mut().for_each(|v| *v = f64::NAN);
            let col = cols[f];
            for &row in order {
                let row = row as usize;
                let node = node_of[row];
                if node == LEAF {
                    continue;
                }
                let s = slot[node as usize];
                if s == u32::MAX {
                    continue;
                }
                let s = s as usize;
                let x = col[row];
                if !last[s].is_nan() && x > last[s] {
                    let (g, h) = sums[node as usize];
                    let (gr, hr) = (g - gl[s], h - hl[s]);
                    if hl[s] >= MIN_CHILD_WEIGHT && hr >= MIN_CHILD_WEIGHT {
                        let gain = score(gl[s], hl[s]) + score(gr, hr) - score(g, h);
                        if best[s].is_none_or(|b| gain > b.gain) {
                            best[s] = Some(Candidate {
                                gain,
                                feature: f,
                                threshold: last[s] + 0.5 * (x - last[s]),
                            });
                        }
                    }
                }
                gl[s] += grad[row];
                hl[s] += 1.0;
                last[s] = x;
            }
        }

        let mut next = Vec::new();
        for (s, &id) in frontier.iter().enumerate() {
            let Some(c) = best[s].filter(|c| c.gain > min_gain) else {
                continue;
            };
            let left = nodes.len() as u32;
            let right = left + 1;
            for _ in 0..2 {
                nodes.push(Node {
                    feature: LEAF,
                    threshold: 0.0,
                    left: LEAF,
                    right: LEAF,
                    value: 0.0,
                });
                sums.push((0.0, 0.0));
            }
            let node = &mut nodes[id as usize];
            node.feature = c.feature as u32;
            node.threshold = c.threshold;
            node.left = left;
            node.right = right;
            // loss reduction of the split is half the score improvement
            gain_total[c.feature] += 0.5 * c.gain;
            next.push(left);
            next.push(right);
        }
        if next.is_empty() {
            break;
        }
        // route rows of split nodes to their children
        for i in 0..n {
            let node = node_of[i];
            if node == LEAF {
                continue;
            }
            let nd = &nodes[node as usize];
            if nd.feature == LEAF {
                continue;
            }
            let child = if cols[nd.feature as usize][i] <= nd.threshold {
                nd.left
            } else {
                nd.right
            };
            node_of[i] = child;
            let e = &mut sums[child as usize];
            e.0 += grad[i];
            e.1 += 1.0;
        }
        frontier = next;
    }

    for (id, node) in nodes.iter_mut().enumerate() {
        if node.feature == LEAF {
            let (g, h) = sums[id];
            node.value = -params.learning_rate * g / (h + LAMBDA);
        }
    }
    Tree { nodes }
}
