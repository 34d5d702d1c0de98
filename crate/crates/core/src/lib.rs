//! Causal data augmentation for tabular data.
//!
//! Given a training table and a causal DAG over its columns, [`augment::augment`]
//! builds the weighted cartesian product of the observed column values. Each
//! candidate point is weighted by the product of kernel-estimated conditional
//! probabilities of every variable given its ancestors, and partial products
//! that fall to the pruning threshold or below are dropped as soon as they do.
//!
//! The crate also carries the pieces needed to study the method end to end:
//! a synthetic structural-causal-model generator ([`scm`]), weighted
//! distribution and prediction metrics ([`metrics`]) and a weight-aware
//! gradient-boosted tree regressor with grid-search cross-validation
//! ([`learner`]).
//!
//! Everything here is `no_std` (with `alloc`) and deterministic given explicit
//! seeds. File formats, the experiment runner and the CLI live in the `cda`
//! crate.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod augment;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod kernels;
pub mod learner;
pub(crate) mod math;
pub mod metrics;
pub mod scm;
pub mod seed;

pub use augment::{augment, AugmentedSet};
pub use dataset::{Dataset, Matrix, WeightedTable};
pub use error::{Error, Result};
pub use graph::CausalGraph;
pub use kernels::{silverman_bandwidth, DimKernel, KernelSpec, VariableKernel};
pub use learner::{GbtModel, GbtParams};
pub use scm::{MechanismKind, MechanismSpec, ScmModel};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
