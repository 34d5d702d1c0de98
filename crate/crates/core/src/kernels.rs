//! Conditional kernels for the augmentation weights.
//!
//! The weight factor of variable `j` for a partial point `z` and donor row `k`
//! is the ratio
//!
//! ```text
//!          K_j(z[a(j)] - X_k[a(j)])
//! f_k = ------------------------------
//!        sum_i K_j(z[a(j)] - X_i[a(j)])
//! ```
//!
//! where `a(j)` are the ancestors of `j`. `K_j` is a product of one kernel per
//! ancestor dimension: Gaussian with a Silverman bandwidth for continuous
//! columns, identity (exact match) for discrete ones.
//!
//! The Gaussian kernels are left unnormalised. Normalisation constants are the
//! same in numerator and denominator and cancel in the ratio. The ratio itself
//! is evaluated as a softmax over log-kernels so that the denominator cannot
//! underflow when the conditioning point is far from every training row.

use alloc::format;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::math;

/// Bandwidth used for a column with zero spread.
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

/// Silverman's rule of thumb: `0.9 · min(σ, IQR/1.34) · n^(-1/5)`.
///
/// `σ` is the sample standard deviation. When the interquartile range is zero
/// but the samples are not all equal, `σ` alone is used.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "Silverman bandwidth needs at least 2 samples, got {n}"
        )));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = math::sqrt(var);

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);

    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::Degenerate("all samples identical".into()));
    }
    Ok(0.9 * spread * math::powf(n as f64, -0.2))
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = math::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Kernel along a single conditioning dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DimKernel {
    Gaussian { bandwidth: f64 },
    Identity,
}

impl DimKernel {
    #[inline]
    fn log_value(self, u: f64) -> f64 {
        match self {
            DimKernel::Gaussian { bandwidth } => {
                let t = u / bandwidth;
                -0.5 * t * t
            }
            DimKernel::Identity => {
                if u == 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// `K_j`: the product kernel over the ancestors of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableKernel {
    ancestors: Vec<usize>,
    dims: Vec<DimKernel>,
}

impl VariableKernel {
    pub fn new(ancestors: Vec<usize>, dims: Vec<DimKernel>) -> Result<Self> {
        if ancestors.len() != dims.len() {
            return Err(Error::Dimension {
                expected: ancestors.len(),
                actual: dims.len(),
            });
        }
        for d in &dims {
            if let DimKernel::Gaussian { bandwidth } = d {
                if !(*bandwidth > 0.0) {
                    return Err(Error::Argument(format!("bandwidth must be positive, got {bandwidth}")));
                }
            }
        }
        Ok(Self { ancestors, dims })
    }

    /// Ancestor columns this kernel conditions on, ascending.
    pub fn ancestors(&self) -> &[usize] {
        &self.ancestors
    }

    pub fn dims(&self) -> &[DimKernel] {
        &self.dims
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    /// Unnormalised kernel value at offset `u`.
    ///
    /// Gaussian dimensions contribute `exp(-u²/(2h²))`, identity dimensions 1
    /// on an exact match and 0 otherwise. An empty offset gives 1.
    pub fn kernel_value(&self, u: &[f64]) -> Result<f64> {
        Ok(math::exp(self.log_kernel(u)?))
    }

    fn log_kernel(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dims.len() {
            return Err(Error::Dimension {
                expected: self.dims.len(),
                actual: u.len(),
            });
        }
        Ok(self.log_kernel_unchecked(u.iter().copied()))
    }

    #[inline]
    fn log_kernel_unchecked(&self, u: impl Iterator<Item = f64>) -> f64 {
        self.dims.iter().zip(u).map(|(k, x)| k.log_value(x)).sum()
    }

    /// Weight factors of every donor row for the conditioning point `z_anc`.
    ///
    /// `train_anc` holds the ancestor values of all `n` training rows,
    /// row-major with `dimension()` columns. The factors sum to one, except
    /// when no training row is compatible with `z_anc` (possible only through
    /// identity dimensions), in which case all factors are zero. With no
    /// ancestors every factor is `1/n`.
    pub fn weight_factors(&self, z_anc: &[f64], train_anc: &[f64]) -> Result<Vec<f64>> {
        let m = self.dims.len();
        if z_anc.len() != m {
            return Err(Error::Dimension {
                expected: m,
                actual: z_anc.len(),
            });
        }
        if m == 0 {
            return Err(Error::Argument(
                "use weight_factors_sourced for variables without ancestors".into(),
            ));
        }
        if !train_anc.len().is_multiple_of(m) {
            return Err(Error::Length {
                left: train_anc.len(),
                right: m,
            });
        }
        let mut out = Vec::with_capacity(train_anc.len() / m);
        self.fill_factors(z_anc, train_anc, &mut out);
        Ok(out)
    }

    /// Like [`Self::weight_factors`] but also handles the no-ancestor case,
    /// where `n` must be given explicitly.
    pub fn weight_factors_sourced(&self, z_anc: &[f64], train_anc: &[f64], n: usize) -> Result<Vec<f64>> {
        if self.dims.is_empty() {
            if n == 0 {
                return Err(Error::Empty("no training rows".into()));
            }
            return Ok(alloc::vec![1.0 / n as f64; n]);
        }
        self.weight_factors(z_anc, train_anc)
    }

    /// Factor of a single donor. See [`Self::weight_factors`].
    pub fn weight_factor(&self, z_anc: &[f64], donor_anc: &[f64], train_anc: &[f64], n: usize) -> Result<f64> {
        let m = self.dims.len();
        if donor_anc.len() != m {
            return Err(Error::Dimension {
                expected: m,
                actual: donor_anc.len(),
            });
        }
        if m == 0 {
            if n == 0 {
                return Err(Error::Empty("no training rows".into()));
            }
            return Ok(1.0 / n as f64);
        }
        if z_anc.len() != m {
            return Err(Error::Dimension {
                expected: m,
                actual: z_anc.len(),
            });
        }
        if train_anc.len() != n * m {
            return Err(Error::Length {
                left: train_anc.len(),
                right: n * m,
            });
        }
        let logs: Vec<f64> = train_anc
            .chunks_exact(m)
            .map(|row| self.log_kernel_unchecked(z_anc.iter().zip(row).map(|(z, x)| z - x)))
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let denom: f64 = logs.iter().map(|&l| math::exp(l - max)).sum();
        let own = self.log_kernel_unchecked(z_anc.iter().zip(donor_anc).map(|(z, x)| z - x));
        Ok(math::exp(own - max) / denom)
    }

    /// Writes the donor factors for `z_anc` into `out` (cleared first).
    pub(crate) fn fill_factors(&self, z_anc: &[f64], train_anc: &[f64], out: &mut Vec<f64>) {
        let m = self.dims.len();
        out.clear();
        let mut max = f64::NEG_INFINITY;
        for row in train_anc.chunks_exact(m) {
            let l = self.log_kernel_unchecked(z_anc.iter().zip(row).map(|(z, x)| z - x));
            max = max.max(l);
            out.push(l);
        }
        if max == f64::NEG_INFINITY {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let mut sum = 0.0;
        for v in out.iter_mut() {
            *v = math::exp(*v - max);
            sum += *v;
        }
        for v in out.iter_mut() {
            *v /= sum;
        }
    }
}

/// One [`VariableKernel`] per variable, fitted to a training table.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    variables: Vec<VariableKernel>,
}

impl KernelSpec {
    pub fn new(variables: Vec<VariableKernel>) -> Self {
        Self { variables }
    }

    /// Builds the kernels for `graph` from the columns of `train`.
    ///
    /// Bandwidths are computed once per column over the whole training set;
    /// degenerate columns get [`BANDWIDTH_FLOOR`]. Columns flagged discrete
    /// get identity kernels.
    pub fn fit(train: &Dataset, graph: &CausalGraph) -> Result<Self> {
        let d = train.n_cols();
        if graph.node_count() != d {
            return Err(Error::Dimension {
                expected: graph.node_count(),
                actual: d,
            });
        }
        let dims: Vec<DimKernel> = (0..d)
            .map(|c| {
                if train.discrete()[c] {
                    DimKernel::Identity
                } else {
                    let bandwidth = silverman_bandwidth(&train.column(c)).unwrap_or(BANDWIDTH_FLOOR);
                    DimKernel::Gaussian { bandwidth }
                }
            })
            .collect();
        let variables = (0..d)
            .map(|j| {
                let anc = graph.ancestors(j)?.to_vec();
                let ks = anc.iter().map(|&a| dims[a]).collect();
                VariableKernel::new(anc, ks)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { variables })
    }

    pub fn variable(&self, j: usize) -> &VariableKernel {
        &self.variables[j]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }
}
