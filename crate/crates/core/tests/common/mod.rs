//! Brute-force reference for augmentation and random small instances.
#![allow(dead_code)]

use std::collections::BTreeMap;

use cda_core::dataset::{Dataset, Matrix};
use cda_core::kernels::{DimKernel, KernelSpec};
use cda_core::seed::rng;
use cda_core::CausalGraph;
use rand::seq::SliceRandom;
use rand::Rng;

pub struct Instance {
    pub train: Dataset,
    pub graph: CausalGraph,
}

/// A random DAG (random order, each forward pair an edge with probability
/// one half) and uniform data in [-2, 2].
pub fn random_instance(n: usize, d: usize, seed: u64) -> Instance {
    let mut r = rng(seed);
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut r);
    let mut edges = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            if r.random_bool(0.5) {
                edges.push((order[a], order[b]));
            }
        }
    }
    let graph = CausalGraph::from_edges(d, edges).unwrap();
    let data: Vec<f64> = (0..n * d).map(|_| r.random_range(-2.0..2.0)).collect();
    let train = Dataset::with_default_names(Matrix::new(n, d, data).unwrap());
    Instance { train, graph }
}

fn raw_kernel(dims: &[DimKernel], u: &[f64]) -> f64 {
    dims.iter()
        .zip(u)
        .map(|(k, &u)| match *k {
            DimKernel::Gaussian { bandwidth } => (-0.5 * (u / bandwidth).powi(2)).exp(),
            DimKernel::Identity => {
                if u == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        })
        .product()
}

/// Final weight of one full donor tuple, straight from the ratio of raw kernels.
pub fn tuple_weight(train: &Dataset, specs: &KernelSpec, tuple: &[usize]) -> f64 {
    let n = train.n_rows();
    let d = train.n_cols();
    let z: Vec<f64> = (0..d).map(|j| train.get(tuple[j], j)).collect();
    let mut w = 1.0;
    for (j, &donor) in tuple.iter().enumerate() {
        let var = specs.variable(j);
        let anc = var.ancestors();
        if anc.is_empty() {
            w *= 1.0 / n as f64;
            continue;
        }
        let k = |row: usize| {
            let u: Vec<f64> = anc.iter().map(|&a| z[a] - train.get(row, a)).collect();
            raw_kernel(var.dims(), &u)
        };
        let total: f64 = (0..n).map(k).sum();
        w *= k(donor) / total;
    }
    w
}

/// Every tuple of the n^d product whose final weight exceeds `theta`.
pub fn brute_force(train: &Dataset, specs: &KernelSpec, theta: f64) -> BTreeMap<Vec<u32>, f64> {
    let n = train.n_rows();
    let d = train.n_cols();
    let mut out = BTreeMap::new();
    let mut tuple = vec![0usize; d];
    loop {
        let w = tuple_weight(train, specs, &tuple);
        if w > theta {
            out.insert(tuple.iter().map(|&i| i as u32).collect(), w);
        }
        // odometer increment
        let mut pos = d;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
        }
    }
}

/// Augmentation output keyed by provenance; empty on an empty result.
pub fn augmented_map(inst: &Instance, specs: &KernelSpec, theta: f64) -> BTreeMap<Vec<u32>, f64> {
    match cda_core::augment(&inst.train, &inst.graph, theta, specs, 1 << 20) {
        Ok(aug) => (0..aug.len())
            .map(|i| (aug.provenance(i).to_vec(), aug.weights()[i]))
            .collect(),
        Err(cda_core::Error::EmptyResult { .. }) => BTreeMap::new(),
        Err(e) => panic!("augment failed: {e}"),
    }
}
