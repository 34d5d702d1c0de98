//! Pruned cartesian-product augmentation.
//!
//! Variables are visited in the graph's topological order. The frontier starts
//! with the `n` observed values of the first variable, each weighted `1/n`.
//! Every later variable extends each partial point with every donor row's
//! value for that variable. The partial weight is multiplied by the donor's
//! conditional weight factor (see [`crate::kernels`]). Extensions whose weight
//! is not strictly greater than `theta` are dropped immediately.
//!
//! Each factor is at most one, so partial weights never increase along the
//! expansion. Pruning a partial point therefore never drops a completion
//! whose final weight exceeds `theta`. The result equals filtering the full
//! `n^d` product on final weight.
//!
//! The frontier is swapped after every variable. Values are copied from donor
//! rows and never interpolated, so every point is described exactly by its
//! provenance tuple `(i_1, …, i_d)`.

use alloc::vec::Vec;

use crate::dataset::{Dataset, WeightedTable};
use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::kernels::KernelSpec;
use crate::math;

/// Default cap on the number of partial points held in the frontier.
pub const DEFAULT_MAX_POINTS: usize = 5_000_000;

/// Weighted augmented points with their donor provenance.
///
/// Points, weights and provenance tuples are stored in the caller's column
/// order and sorted lexicographically by provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSet {
    d: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    provenance: Vec<u32>,
    theta: f64,
    n_source: usize,
}

impl AugmentedSet {
    /// Rebuilds a set from its parts, e.g. after reading it from a file.
    pub fn from_parts(
        d: usize,
        points: Vec<f64>,
        weights: Vec<f64>,
        provenance: Vec<u32>,
        theta: f64,
        n_source: usize,
    ) -> Result<Self> {
        if points.len() != weights.len() * d {
            return Err(Error::Length {
                left: points.len(),
                right: weights.len() * d,
            });
        }
        if provenance.len() != points.len() {
            return Err(Error::Length {
                left: provenance.len(),
                right: points.len(),
            });
        }
        Ok(Self {
            d,
            points,
            weights,
            provenance,
            theta,
            n_source,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn provenance(&self, i: usize) -> &[u32] {
        &self.provenance[i * self.d..(i + 1) * self.d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    /// Share of points whose provenance is not constant, i.e. that are not
    /// copies of a single training row.
    pub fn fraction_new(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let new = (0..self.len())
            .filter(|&i| {
                let p = self.provenance(i);
                p.iter().any(|&k| k != p[0])
            })
            .count();
        new as f64 / self.len() as f64
    }

    /// Share of the `n^d` candidate tuples that were pruned.
    pub fn fraction_filtered(&self) -> f64 {
        fraction_filtered(self.len(), self.n_source, self.d)
    }

    /// Weights rescaled to sum to one.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }

    pub fn stats(&self) -> FilterStats {
        FilterStats {
            size: self.len(),
            frac_new: self.fraction_new(),
            frac_filtered: self.fraction_filtered(),
            all_filtered: self.is_empty(),
        }
    }
}

impl WeightedTable for AugmentedSet {
    fn n_rows(&self) -> usize {
        self.len()
    }

    fn n_cols(&self) -> usize {
        self.d
    }

    fn value(&self, row: usize, col: usize) -> f64 {
        self.points[row * self.d + col]
    }

    fn weight(&self, row: usize) -> f64 {
        self.weights[row]
    }
}

/// Summary of how much of the cartesian product survived pruning.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FilterStats {
    pub size: usize,
    pub frac_new: f64,
    pub frac_filtered: f64,
    pub all_filtered: bool,
}

impl FilterStats {
    /// Stats for a run where every candidate was pruned.
    pub fn all_filtered() -> Self {
        Self {
            size: 0,
            frac_new: 0.0,
            frac_filtered: 1.0,
            all_filtered: true,
        }
    }
}

/// `1 - retained / n^d`, evaluated in log space.
pub fn fraction_filtered(retained: usize, n: usize, d: usize) -> f64 {
    if retained == 0 || n == 0 {
        return 1.0;
    }
    let log_ratio = math::ln(retained as f64) - d as f64 * math::ln(n as f64);
    (1.0 - math::exp(log_ratio)).max(0.0)
}

/// Per-variable data prepared once before the expansion.
struct Stage<'a> {
    var: usize,
    kernel: &'a crate::kernels::VariableKernel,
    /// Frontier positions (topological positions) of the ancestors.
    anc_positions: Vec<usize>,
    /// Ancestor values of all training rows, row-major.
    train_anc: Vec<f64>,
}

/// Builds the weighted augmented set of `train` under `graph`.
///
/// `theta` must lie in `[0, 1)`. Retention is strict: a point survives only if
/// its weight is greater than `theta`. Fails with [`Error::Capacity`] if the
/// frontier grows beyond `max_points`, and with [`Error::EmptyResult`] if every
/// candidate is pruned.
pub fn augment(
    train: &Dataset,
    graph: &CausalGraph,
    theta: f64,
    specs: &KernelSpec,
    max_points: usize,
) -> Result<AugmentedSet> {
    let n = train.n_rows();
    let d = train.n_cols();
    if n < 2 {
        return Err(Error::Argument(alloc::format!(
            "augmentation needs at least 2 training rows, got {n}"
        )));
    }
    if n > u32::MAX as usize {
        return Err(Error::Argument("too many training rows".into()));
    }
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::Argument(alloc::format!("theta must lie in [0, 1), got {theta}")));
    }
    if graph.node_count() != d {
        return Err(Error::Dimension {
            expected: graph.node_count(),
            actual: d,
        });
    }
    if specs.len() != d {
        return Err(Error::Dimension {
            expected: d,
            actual: specs.len(),
        });
    }
    if max_points == 0 {
        return Err(Error::Argument("max_points must be positive".into()));
    }

    let topo = graph.topo_order();
    let mut position = alloc::vec![0usize; d];
    for (t, &v) in topo.iter().enumerate() {
        position[v] = t;
    }
    let stages: Vec<Stage<'_>> = topo
        .iter()
        .map(|&v| {
            let kernel = specs.variable(v);
            let anc = kernel.ancestors();
            let mut train_anc = Vec::with_capacity(n * anc.len());
            for r in 0..n {
                let row = train.row(r);
                train_anc.extend(anc.iter().map(|&a| row[a]));
            }
            Stage {
                var: v,
                kernel,
                anc_positions: anc.iter().map(|&a| position[a]).collect(),
                train_anc,
            }
        })
        .collect();

    let inv_n = 1.0 / n as f64;

    // stage 0: the first variable in topological order is always a source
    let mut weights: Vec<f64> = Vec::new();
    let mut prov: Vec<u32> = Vec::new();
    debug_assert!(stages[0].anc_positions.is_empty());
    if inv_n > theta {
        if n > max_points {
            return Err(Error::Capacity {
                frontier: n,
                limit: max_points,
                depth: 1,
                total: d,
            });
        }
        weights = alloc::vec![inv_n; n];
        prov = (0..n as u32).collect();
    }
    if weights.is_empty() {
        return Err(Error::EmptyResult { depth: 1, total: d });
    }

    let mut z_anc = Vec::new();
    let mut factors = Vec::with_capacity(n);
    for (t, stage) in stages.iter().enumerate().skip(1) {
        let width = t;
        let mut next_weights = Vec::new();
        let mut next_prov = Vec::new();
        for (i, &w) in weights.iter().enumerate() {
            let prefix = &prov[i * width..(i + 1) * width];
            if stage.anc_positions.is_empty() {
                factors.clear();
                factors.resize(n, inv_n);
            } else {
                z_anc.clear();
                z_anc.extend(stage.anc_positions.iter().map(|&p| {
                    let donor = prefix[p] as usize;
                    train.get(donor, topo[p])
                }));
                stage.kernel.fill_factors(&z_anc, &stage.train_anc, &mut factors);
            }
            for (k, &f) in factors.iter().enumerate() {
                let w_new = w * f;
                if w_new > theta {
                    if next_weights.len() == max_points {
                        return Err(Error::Capacity {
                            frontier: max_points + 1,
                            limit: max_points,
                            depth: t + 1,
                            total: d,
                        });
                    }
                    next_weights.push(w_new);
                    next_prov.extend_from_slice(prefix);
                    next_prov.push(k as u32);
                }
            }
        }
        if next_weights.is_empty() {
            return Err(Error::EmptyResult { depth: t + 1, total: d });
        }
        weights = next_weights;
        prov = next_prov;
    }

    // back to the caller's column order, then canonical sort
    let len = weights.len();
    let mut prov_orig = alloc::vec![0u32; len * d];
    for i in 0..len {
        for (t, stage) in stages.iter().enumerate() {
            prov_orig[i * d + stage.var] = prov[i * d + t];
        }
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_unstable_by(|&a, &b| prov_orig[a * d..(a + 1) * d].cmp(&prov_orig[b * d..(b + 1) * d]));

    let mut out_points = Vec::with_capacity(len * d);
    let mut out_prov = Vec::with_capacity(len * d);
    let mut out_weights = Vec::with_capacity(len);
    for &i in &order {
        let p = &prov_orig[i * d..(i + 1) * d];
        out_prov.extend_from_slice(p);
        out_points.extend(p.iter().enumerate().map(|(j, &k)| train.get(k as usize, j)));
        out_weights.push(weights[i]);
    }

    Ok(AugmentedSet {
        d,
        points: out_points,
        weights: out_weights,
        provenance: out_prov,
        theta,
        n_source: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Matrix;
    use alloc::vec;

    fn table(rows: &[Vec<f64>]) -> Dataset {
        Dataset::with_default_names(Matrix::from_rows(rows).unwrap())
    }

    fn run(train: &Dataset, graph: &CausalGraph, theta: f64) -> Result<AugmentedSet> {
        let specs = KernelSpec::fit(train, graph).unwrap();
        augment(train, graph, theta, &specs, DEFAULT_MAX_POINTS)
    }

    #[test]
    fn empty_graph_uniform_weights() {
        let train = table(&[vec![0.0, 5.0], vec![1.0, 6.0], vec![2.0, 8.0]]);
        let aug = run(&train, &CausalGraph::empty(2), 0.0).unwrap();
        assert_eq!(aug.len(), 9);
        for &w in aug.weights() {
            assert!((w - 1.0 / 9.0).abs() < 1e-15);
        }
        let total: f64 = aug.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((aug.fraction_new() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(aug.fraction_filtered(), 0.0);
    }

    #[test]
    fn output_sorted_by_provenance() {
        let train = table(&[vec![0.0, 5.0], vec![1.0, 6.0], vec![2.0, 8.0]]);
        let aug = run(&train, &CausalGraph::from_edges(2, [(1, 0)]).unwrap(), 0.0).unwrap();
        for i in 1..aug.len() {
            assert!(aug.provenance(i - 1) < aug.provenance(i));
        }
        assert_eq!(aug.provenance(0), &[0, 0]);
        assert_eq!(aug.provenance(1), &[0, 1]);
    }

    #[test]
    fn diagonal_points_are_original_rows() {
        let rows = vec![vec![0.1, 5.0, -2.0], vec![1.3, 6.0, 0.5], vec![2.2, 8.5, 1.0]];
        let train = table(&rows);
        let g = CausalGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let aug = run(&train, &g, 0.0).unwrap();
        for i in 0..aug.len() {
            let p = aug.provenance(i);
            if p.iter().all(|&k| k == p[0]) {
                assert_eq!(aug.point(i), rows[p[0] as usize].as_slice());
            }
            for (j, &k) in p.iter().enumerate() {
                assert_eq!(aug.point(i)[j], rows[k as usize][j]);
            }
        }
    }

    #[test]
    fn single_variable_threshold_at_one_over_n() {
        let train = table(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let g = CausalGraph::empty(1);
        assert_eq!(run(&train, &g, 0.25), Err(Error::EmptyResult { depth: 1, total: 1 }));
        let aug = run(&train, &g, 0.2).unwrap();
        assert_eq!(aug.len(), 4);
        assert_eq!(aug.fraction_new(), 0.0);
    }

    #[test]
    fn capacity_error_reports_depth() {
        let train = table(&[vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 0.0], vec![2.0, 0.0, 1.0]]);
        let g = CausalGraph::empty(3);
        let specs = KernelSpec::fit(&train, &g).unwrap();
        let err = augment(&train, &g, 0.0, &specs, 8).unwrap_err();
        assert_eq!(
            err,
            Error::Capacity {
                frontier: 9,
                limit: 8,
                depth: 2,
                total: 3
            }
        );
    }

    #[test]
    fn rejects_bad_arguments() {
        let train = table(&[vec![0.0], vec![1.0]]);
        let g = CausalGraph::empty(1);
        assert!(matches!(run(&train, &g, 1.0), Err(Error::Argument(_))));
        assert!(matches!(run(&train, &g, -0.1), Err(Error::Argument(_))));
        let one = table(&[vec![0.0]]);
        let specs = KernelSpec::fit(&train, &g).unwrap();
        assert!(matches!(augment(&one, &g, 0.0, &specs, 10), Err(Error::Argument(_))));
    }

    #[test]
    fn fraction_filtered_arithmetic() {
        assert!((fraction_filtered(5, 3, 2) - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(fraction_filtered(0, 3, 2), 1.0);
        // n^d far beyond f64 integer range still works
        let f = fraction_filtered(1000, 700, 25);
        assert!(f > 0.999_999 && f <= 1.0);
    }

    #[test]
    fn normalized_weights_sum_to_one() {
        let aug = AugmentedSet::from_parts(1, vec![1.0, 2.0], vec![0.2, 0.2], vec![0, 1], 0.0, 2).unwrap();
        assert_eq!(aug.normalized_weights(), vec![0.5, 0.5]);
        let single = AugmentedSet::from_parts(1, vec![1.0], vec![0.07], vec![0], 0.0, 2).unwrap();
        assert_eq!(single.normalized_weights(), vec![1.0]);
    }
}
