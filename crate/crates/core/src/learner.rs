//! Weighted gradient-boosted regression trees.
//!
//! Squared loss with per-row weights: each tree is grown with exact greedy
//! split search on the weighted gradient statistics, and leaves take the value
//! `Σ w·r / (Σ w + λ)` where `r` is the current residual. Training is fully
//! deterministic: ties between splits go to the lowest feature index, then to
//! the lowest threshold.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Matrix;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_estimators: usize,
    /// L2 penalty on leaf values.
    pub reg_lambda: f64,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum total weight in each child of a split.
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            reg_lambda: 1.0,
            learning_rate: 0.3,
            max_depth: 6,
            min_child_weight: 1.0,
        }
    }
}

impl GbtParams {
    pub fn with(n_estimators: usize, reg_lambda: f64) -> Self {
        Self {
            n_estimators,
            reg_lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 {
            return Err(Error::Argument("n_estimators must be at least 1".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::Argument("max_depth must be at least 1".into()));
        }
        if !(self.reg_lambda >= 0.0) || !(self.min_child_weight >= 0.0) {
            return Err(Error::Argument(format!(
                "reg_lambda and min_child_weight must be non-negative, got {} and {}",
                self.reg_lambda, self.min_child_weight
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Argument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// `n_estimators ∈ {10, 50, 200}` × `reg_lambda ∈ {1, 10, 100}`, other
/// parameters at their defaults.
pub fn default_grid() -> Vec<GbtParams> {
    let mut grid = Vec::with_capacity(9);
    for n in [10, 50, 200] {
        for lambda in [1.0, 10.0, 100.0] {
            grid.push(GbtParams::with(n, lambda));
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

/// A fitted ensemble: `base_score + learning_rate · Σ tree(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_score: f64,
    pub params: GbtParams,
    pub n_features: usize,
    pub seed: u64,
    pub trees: Vec<Tree>,
}

impl GbtModel {
    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        self.check_features(features)?;
        Ok((0..features.rows())
            .map(|r| {
                let row = features.row(r);
                let s: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                self.base_score + self.params.learning_rate * s
            })
            .collect())
    }

    /// Predictions of the first `k` trees for every `k` in `stages`.
    pub fn predict_staged(&self, features: &Matrix, stages: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.check_features(features)?;
        let mut out = alloc::vec![Vec::with_capacity(features.rows()); stages.len()];
        for r in 0..features.rows() {
            let row = features.row(r);
            let mut acc = 0.0;
            let mut done = 0;
            let mut cum = Vec::with_capacity(self.trees.len() + 1);
            cum.push(0.0);
            for t in &self.trees {
                acc += t.predict_row(row);
                done += 1;
                cum.push(acc);
            }
            for (s, &k) in stages.iter().enumerate() {
                let k = k.min(done);
                out[s].push(self.base_score + self.params.learning_rate * cum[k]);
            }
        }
        Ok(out)
    }

    fn check_features(&self, features: &Matrix) -> Result<()> {
        if features.cols() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                actual: features.cols(),
            });
        }
        Ok(())
    }
}

/// Fits a boosted ensemble on weighted squared loss.
///
/// Weights must be strictly positive. A constant target yields a model with no
/// trees that predicts the constant. `seed` is recorded in the model; the
/// fit itself involves no sampling.
pub fn fit(features: &Matrix, target: &[f64], weights: &[f64], params: &GbtParams, seed: u64) -> Result<GbtModel> {
    params.validate()?;
    let n = features.rows();
    if target.len() != n {
        return Err(Error::Length {
            left: target.len(),
            right: n,
        });
    }
    if weights.len() != n {
        return Err(Error::Length {
            left: weights.len(),
            right: n,
        });
    }
    if n < 2 {
        return Err(Error::Argument(format!("need at least 2 training rows, got {n}")));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::Argument(format!(
            "weights must be positive and finite, found {w}"
        )));
    }

    let w_sum: f64 = weights.iter().sum();
    let base_score = target.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / w_sum;
    let mut model = GbtModel {
        base_score,
        params: *params,
        n_features: features.cols(),
        seed,
        trees: Vec::new(),
    };
    if target.iter().all(|&y| y == target[0]) {
        model.base_score = target[0];
        return Ok(model);
    }

    let sorted = presort(features);
    let mut pred = alloc::vec![base_score; n];
    let mut grad = alloc::vec![0.0; n];
    let mut builder = TreeBuilder::new(n);
    for _ in 0..params.n_estimators {
        for i in 0..n {
            grad[i] = weights[i] * (pred[i] - target[i]);
        }
        let tree = builder.grow(features, &sorted, &grad, weights, params);
        for (i, p) in pred.iter_mut().enumerate() {
            if let Node::Leaf { value } = tree.nodes[builder.node_of[i]] {
                *p += params.learning_rate * value;
            }
        }
        model.trees.push(tree);
    }
    Ok(model)
}

/// Row indices sorted by each feature (stable, so ties keep index order).
fn presort(features: &Matrix) -> Vec<Vec<u32>> {
    (0..features.cols())
        .map(|f| {
            let mut idx: Vec<u32> = (0..features.rows() as u32).collect();
            idx.sort_by(|&a, &b| features.get(a as usize, f).total_cmp(&features.get(b as usize, f)));
            idx
        })
        .collect()
}

#[derive(Clone, Copy)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Per-node scan state while sweeping one feature.
#[derive(Clone, Copy)]
struct ScanState {
    g_left: f64,
    h_left: f64,
    last: f64,
    seen: bool,
}

struct TreeBuilder {
    node_of: Vec<usize>,
}

impl TreeBuilder {
    fn new(n: usize) -> Self {
        Self {
            node_of: alloc::vec![0; n],
        }
    }

    fn grow(&mut self, features: &Matrix, sorted: &[Vec<u32>], grad: &[f64], hess: &[f64], params: &GbtParams) -> Tree {
        let n = grad.len();
        let lambda = params.reg_lambda;
        self.node_of.iter_mut().for_each(|v| *v = 0);

        let mut nodes = alloc::vec![Node::Leaf { value: 0.0 }];
        let mut totals = alloc::vec![(grad.iter().sum::<f64>(), hess.iter().sum::<f64>())];
        let mut frontier: Vec<usize> = alloc::vec![0];

        for _depth in 0..params.max_depth {
            if frontier.is_empty() {
                break;
            }
            // map node id -> slot in this level
            let mut slot = alloc::vec![usize::MAX; nodes.len()];
            for (s, &node) in frontier.iter().enumerate() {
                slot[node] = s;
            }
            let mut best: Vec<Option<SplitCandidate>> = alloc::vec![None; frontier.len()];

            for (f, order) in sorted.iter().enumerate() {
                let mut state = alloc::vec![
                    ScanState {
                        g_left: 0.0,
                        h_left: 0.0,
                        last: 0.0,
                        seen: false
                    };
                    frontier.len()
                ];
                for &i in order {
                    let i = i as usize;
                    let s = slot[self.node_of[i]];
                    if s == usize::MAX {
                        continue;
                    }
                    let x = features.get(i, f);
                    let st = &mut state[s];
                    if st.seen && x > st.last {
                        let (g, h) = totals[frontier[s]];
                        let (gl, hl) = (st.g_left, st.h_left);
                        let (gr, hr) = (g - gl, h - hl);
                        if hl >= params.min_child_weight && hr >= params.min_child_weight {
                            let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda);
                            if gain > 0.0 && best[s].is_none_or(|b| gain > b.gain) {
                                let mid = 0.5 * (st.last + x);
                                let threshold = if mid < x { mid } else { st.last };
                                best[s] = Some(SplitCandidate {
                                    gain,
                                    feature: f,
                                    threshold,
                                });
                            }
                        }
                    }
                    st.g_left += grad[i];
                    st.h_left += hess[i];
                    st.last = x;
                    st.seen = true;
                }
            }

            let mut next = Vec::new();
            let mut children = alloc::vec![None; frontier.len()];
            for (s, &node) in frontier.iter().enumerate() {
                if let Some(c) = best[s] {
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    totals.push((0.0, 0.0));
                    totals.push((0.0, 0.0));
                    nodes[node] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    };
                    children[s] = Some((c.feature, c.threshold, left, right));
                    next.push(left);
                    next.push(right);
                }
            }
            if next.is_empty() {
                break;
            }
            for i in 0..n {
                let node = self.node_of[i];
                let s = slot[node];
                if s == usize::MAX {
                    continue;
                }
                if let Some((f, thr, left, right)) = children[s] {
                    let child = if features.get(i, f) <= thr { left } else { right };
                    self.node_of[i] = child;
                    let t = &mut totals[child];
                    t.0 += grad[i];
                    t.1 += hess[i];
                }
            }
            frontier = next;
        }

        for (id, node) in nodes.iter_mut().enumerate() {
            if let Node::Leaf { value } = node {
                let (g, h) = totals[id];
                *value = -g / (h + lambda);
            }
        }
        Tree { nodes }
    }
}

/// Cross-validation scores of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvScore {
    pub params: GbtParams,
    /// Mean over folds of the weighted validation MSE.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub best: GbtParams,
    pub scores: Vec<CvScore>,
}

/// Seeded fold assignment: a shuffled permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::rng(seed));
    let mut fold = alloc::vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// k-fold grid search on weighted validation MSE.
///
/// Weights are used both when fitting and when averaging validation errors.
/// Among equal scores the simpler model wins: fewer estimators first, then
/// the larger `reg_lambda`. Grid points that differ only in `n_estimators`
/// share one fit, since a shorter ensemble is a prefix of a longer one.
pub fn grid_search_cv(
    features: &Matrix,
    target: &[f64],
    weights: &[f64],
    grid: &[GbtParams],
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::Argument("empty parameter grid".into()));
    }
    for p in grid {
        p.validate()?;
    }
    let n = features.rows();
    if folds < 2 {
        return Err(Error::Argument(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::Argument(format!("{n} rows cannot fill {folds} folds")));
    }
    if target.len() != n || weights.len() != n {
        return Err(Error::Length {
            left: target.len().min(weights.len()),
            right: n,
        });
    }

    let assignment = fold_assignment(n, folds, seed);
    let mut sums = alloc::vec![0.0; grid.len()];

    // group grid points sharing everything but n_estimators
    let mut groups: Vec<(GbtParams, Vec<usize>)> = Vec::new();
    for (idx, p) in grid.iter().enumerate() {
        let key = GbtParams { n_estimators: 0, ..*p };
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(idx),
            None => groups.push((key, alloc::vec![idx])),
        }
    }

    for k in 0..folds {
        let train_rows: Vec<usize> = (0..n).filter(|&i| assignment[i] != k).collect();
        let val_rows: Vec<usize> = (0..n).filter(|&i| assignment[i] == k).collect();
        let x_train = features.select_rows(&train_rows);
        let y_train: Vec<f64> = train_rows.iter().map(|&i| target[i]).collect();
        let w_train: Vec<f64> = train_rows.iter().map(|&i| weights[i]).collect();
        let x_val = features.select_rows(&val_rows);
        let y_val: Vec<f64> = val_rows.iter().map(|&i| target[i]).collect();
        let w_val: Vec<f64> = val_rows.iter().map(|&i| weights[i]).collect();
        let w_val_sum: f64 = w_val.iter().sum();

        for (key, members) in &groups {
            let longest = members
                .iter()
                .map(|&m| grid[m].n_estimators)
                .max()
                .expect("non-empty group");
            let params = GbtParams {
                n_estimators: longest,
                ..*key
            };
            let model = fit(&x_train, &y_train, &w_train, &params, seed)?;
            let stages: Vec<usize> = members.iter().map(|&m| grid[m].n_estimators).collect();
            let preds = model.predict_staged(&x_val, &stages)?;
            for (&m, p) in members.iter().zip(&preds) {
                let mse: f64 = p
                    .iter()
                    .zip(&y_val)
                    .zip(&w_val)
                    .map(|((yh, y), w)| w * (yh - y) * (yh - y))
                    .sum::<f64>()
                    / w_val_sum;
                sums[m] += mse;
            }
        }
    }

    let scores: Vec<CvScore> = grid
        .iter()
        .zip(&sums)
        .map(|(p, s)| CvScore {
            params: *p,
            score: s / folds as f64,
        })
        .collect();

    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| {
        grid[a]
            .n_estimators
            .cmp(&grid[b].n_estimators)
            .then(grid[b].reg_lambda.total_cmp(&grid[a].reg_lambda))
    });
    let mut best = order[0];
    for &i in &order[1..] {
        if scores[i].score < scores[best].score {
            best = i;
        }
    }
    Ok(CvResult {
        best: grid[best],
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn column(xs: &[f64]) -> Matrix {
        Matrix::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn zero_estimators_rejected() {
        let x = column(&[0.0, 1.0]);
        let p = GbtParams::with(0, 1.0);
        assert!(matches!(
            fit(&x, &[0.0, 1.0], &[1.0, 1.0], &p, 0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn constant_target_constant_model() {
        let x = column(&[0.0, 1.0, 2.0]);
        let m = fit(&x, &[4.0, 4.0, 4.0], &[1.0; 3], &GbtParams::default(), 0).unwrap();
        assert!(m.trees.is_empty());
        assert_eq!(m.predict(&column(&[-9.0, 9.0])).unwrap(), vec![4.0, 4.0]);
    }

    #[test]
    fn stump_leaves_are_class_means() {
        let xs = [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];
        let y: Vec<f64> = xs.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
        let p = GbtParams {
            n_estimators: 1,
            reg_lambda: 0.0,
            learning_rate: 1.0,
            max_depth: 1,
            min_child_weight: 0.0,
        };
        let m = fit(&column(&xs), &y, &[1.0; 8], &p, 0).unwrap();
        let pred = m.predict(&column(&[-1.0, 1.0])).unwrap();
        assert!((pred[0] - 0.0).abs() < 1e-15);
        assert!((pred[1] - 1.0).abs() < 1e-15);
        match m.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 0.0);
            }
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn weight_scale_invariance_without_regularization() {
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let y: Vec<f64> = xs.iter().map(|x| x * x - x).collect();
        let w: Vec<f64> = (0..40).map(|i| 0.5 + (i % 3) as f64).collect();
        let w2: Vec<f64> = w.iter().map(|v| v * 2.0).collect();
        let p = GbtParams {
            reg_lambda: 0.0,
            min_child_weight: 0.0,
            n_estimators: 20,
            ..GbtParams::default()
        };
        let a = fit(&column(&xs), &y, &w, &p, 0).unwrap().predict(&column(&xs)).unwrap();
        let b = fit(&column(&xs), &y, &w2, &p, 0)
            .unwrap()
            .predict(&column(&xs))
            .unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_checked_on_predict() {
        let x = column(&[0.0, 1.0, 2.0]);
        let m = fit(&x, &[0.0, 1.0, 3.0], &[1.0; 3], &GbtParams::default(), 0).unwrap();
        let wide = Matrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(matches!(m.predict(&wide), Err(Error::Dimension { .. })));
    }

    #[test]
    fn staged_matches_truncated() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = xs.iter().map(|x| (x / 5.0).sin()).collect();
        let x = column(&xs);
        let full = fit(&x, &y, &[1.0; 30], &GbtParams::with(20, 1.0), 0).unwrap();
        let short = fit(&x, &y, &[1.0; 30], &GbtParams::with(5, 1.0), 0).unwrap();
        let staged = full.predict_staged(&x, &[5, 20]).unwrap();
        assert_eq!(staged[0], short.predict(&x).unwrap());
        assert_eq!(staged[1], full.predict(&x).unwrap());
    }

    #[test]
    fn grid_single_point() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let g = [GbtParams::with(10, 10.0)];
        let r = grid_search_cv(&column(&xs), &xs, &[1.0; 12], &g, 3, 1).unwrap();
        assert_eq!(r.best, g[0]);
    }

    #[test]
    fn grid_identical_entries_tie() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let g = [GbtParams::with(10, 10.0), GbtParams::with(10, 10.0)];
        let r = grid_search_cv(&column(&xs), &xs, &[1.0; 12], &g, 3, 1).unwrap();
        assert_eq!(r.scores[0].score, r.scores[1].score);
        assert_eq!(r.best, g[0]);
    }

    #[test]
    fn grid_errors() {
        let x = column(&[0.0, 1.0]);
        assert!(grid_search_cv(&x, &[0.0, 1.0], &[1.0, 1.0], &[], 2, 0).is_err());
        assert!(grid_search_cv(&x, &[0.0, 1.0], &[1.0, 1.0], &default_grid(), 3, 0).is_err());
        assert!(grid_search_cv(&x, &[0.0, 1.0], &[1.0, 1.0], &default_grid(), 1, 0).is_err());
    }

    #[test]
    fn folds_balanced() {
        let f = fold_assignment(10, 3, 4);
        let counts: Vec<usize> = (0..3).map(|k| f.iter().filter(|&&v| v == k).count()).collect();
        assert_eq!(counts, vec![4, 3, 3]);
    }
}
