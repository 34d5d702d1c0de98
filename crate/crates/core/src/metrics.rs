//! Distribution and prediction metrics.
//!
//! Multivariate distances are means of per-variable 1-D values. Weights are
//! normalised internally, so raw augmentation weights can be passed as is.

use alloc::format;
use alloc::vec::Vec;

use serde::Serialize;

use crate::dataset::WeightedTable;
use crate::error::{Error, Result};
use crate::kernels::{silverman_bandwidth, BANDWIDTH_FLOOR};
use crate::math;

/// Numerical floors and resolutions shared by the metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricConfig {
    /// Floor applied to the reference density before taking the log ratio.
    pub density_floor: f64,
    /// Floor on `|y_true|` in the MAPE denominator.
    pub mape_floor: f64,
    /// Number of grid points for the KL quadrature.
    pub kl_grid_size: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            density_floor: 1e-12,
            mape_floor: 1e-8,
            kl_grid_size: 512,
        }
    }
}

/// Sorted values with normalised weights; equal values are merged.
fn normalized_support(values: &[f64], weights: &[f64], what: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    if values.len() != weights.len() {
        return Err(Error::Length {
            left: values.len(),
            right: weights.len(),
        });
    }
    if values.is_empty() {
        return Err(Error::Empty(format!("{what} sample is empty")));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Degenerate(format!("{what} weights sum to {total}")));
    }
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().map(|w| w / total)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut xs: Vec<f64> = Vec::with_capacity(pairs.len());
    let mut ws: Vec<f64> = Vec::with_capacity(pairs.len());
    for (x, w) in pairs {
        match xs.last() {
            Some(&last) if last == x => *ws.last_mut().expect("paired") += w,
            _ => {
                xs.push(x);
                ws.push(w);
            }
        }
    }
    Ok((xs, ws))
}

/// Exact 1-D Wasserstein-1 distance between two weighted empirical
/// distributions: the integral of `|F_a - F_b|` over the merged support.
pub fn wasserstein_1d_weighted(a: &[f64], a_weights: &[f64], b: &[f64], b_weights: &[f64]) -> Result<f64> {
    let (xa, wa) = normalized_support(a, a_weights, "first")?;
    let (xb, wb) = normalized_support(b, b_weights, "second")?;

    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut prev: Option<f64> = None;
    let mut total = 0.0;
    while i < xa.len() || j < xb.len() {
        let x = match (xa.get(i), xb.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            total += math::abs(fa - fb) * (x - p);
        }
        while i < xa.len() && xa[i] == x {
            fa += wa[i];
            i += 1;
        }
        while j < xb.len() && xb[j] == x {
            fb += wb[j];
            j += 1;
        }
        prev = Some(x);
    }
    Ok(total)
}

/// KL divergence `KL(p ‖ q)` between Gaussian kernel density estimates of two
/// weighted 1-D samples.
///
/// Each estimate uses the Silverman bandwidth of its unweighted values. Both
/// are evaluated on a shared uniform grid over the support of `p` padded by
/// three times the larger bandwidth; the integrand vanishes outside it. The
/// integral is trapezoidal, `q̂` is floored at `density_floor` and the result
/// is clamped at zero.
pub fn kl_divergence_1d_weighted(
    p: &[f64],
    p_weights: &[f64],
    q: &[f64],
    q_weights: &[f64],
    config: &MetricConfig,
) -> Result<f64> {
    if config.kl_grid_size < 2 {
        return Err(Error::Argument("KL grid needs at least 2 points".into()));
    }
    let hp = silverman_bandwidth(p).unwrap_or(BANDWIDTH_FLOOR).max(BANDWIDTH_FLOOR);
    let hq = silverman_bandwidth(q).unwrap_or(BANDWIDTH_FLOOR).max(BANDWIDTH_FLOOR);
    let (xp, wp) = normalized_support(p, p_weights, "first")?;
    let (xq, wq) = normalized_support(q, q_weights, "second")?;

    let pad = 3.0 * hp.max(hq);
    let lo = xp[0] - pad;
    let hi = xp[xp.len() - 1] + pad;
    let m = config.kl_grid_size;
    let dx = (hi - lo) / (m - 1) as f64;

    let mut total = 0.0;
    for g in 0..m {
        let x = lo + g as f64 * dx;
        let pd = kde(x, &xp, &wp, hp);
        if pd <= 0.0 {
            continue;
        }
        let qd = kde(x, &xq, &wq, hq).max(config.density_floor);
        let term = pd * math::ln(pd / qd);
        let trap = if g == 0 || g == m - 1 { 0.5 } else { 1.0 };
        total += trap * term;
    }
    Ok((total * dx).max(0.0))
}

fn kde(x: f64, xs: &[f64], ws: &[f64], h: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    let mut acc = 0.0;
    for (xi, wi) in xs.iter().zip(ws) {
        let t = (x - xi) / h;
        acc += wi * math::exp(-0.5 * t * t);
    }
    acc * INV_SQRT_2PI / h
}

/// Weighted mean and variance with normalised weights.
pub fn weighted_mean_variance(values: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    let (xs, ws) = normalized_support(values, weights, "variance")?;
    let mean: f64 = xs.iter().zip(&ws).map(|(x, w)| x * w).sum();
    let var: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (x - mean) * (x - mean)).sum();
    Ok((mean, var))
}

/// Relative change of the weighted variance of each column of `other` with
/// respect to `reference`: `(V_other - V_ref) / V_ref`.
pub fn variance_rel_diff_per_variable<A, B>(reference: &A, other: &B) -> Result<Vec<f64>>
where
    A: WeightedTable + ?Sized,
    B: WeightedTable + ?Sized,
{
    check_columns(reference, other)?;
    let wr = reference.row_weights();
    let wo = other.row_weights();
    (0..reference.n_cols())
        .map(|j| {
            let (_, vr) = weighted_mean_variance(&reference.column_values(j), &wr)?;
            if !(vr > 0.0) {
                return Err(Error::Degenerate(format!(
                    "column {j} of the reference has zero variance"
                )));
            }
            let (_, vo) = weighted_mean_variance(&other.column_values(j), &wo)?;
            Ok((vo - vr) / vr)
        })
        .collect()
}

/// Mean over columns of [`variance_rel_diff_per_variable`].
pub fn variance_rel_diff<A, B>(reference: &A, other: &B) -> Result<f64>
where
    A: WeightedTable + ?Sized,
    B: WeightedTable + ?Sized,
{
    Ok(mean(&variance_rel_diff_per_variable(reference, other)?))
}

/// Per-variable comparison of two weighted tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionReport {
    /// Mean of per-variable `KL(reference ‖ other)`.
    pub kl_divergence: f64,
    pub wasserstein: f64,
    pub variance_rel_diff: f64,
    pub per_variable: PerVariable,
    /// Multivariate values are averages of 1-D ones.
    pub aggregation: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerVariable {
    pub kl_divergence: Vec<f64>,
    pub wasserstein: Vec<f64>,
    pub variance_rel_diff: Vec<f64>,
}

/// Compares `other` against `reference` column by column.
pub fn compare<A, B>(reference: &A, other: &B, config: &MetricConfig) -> Result<DistributionReport>
where
    A: WeightedTable + ?Sized,
    B: WeightedTable + ?Sized,
{
    check_columns(reference, other)?;
    let wr = reference.row_weights();
    let wo = other.row_weights();
    let mut kl = Vec::with_capacity(reference.n_cols());
    let mut w1 = Vec::with_capacity(reference.n_cols());
    for j in 0..reference.n_cols() {
        let cr = reference.column_values(j);
        let co = other.column_values(j);
        kl.push(kl_divergence_1d_weighted(&cr, &wr, &co, &wo, config)?);
        w1.push(wasserstein_1d_weighted(&cr, &wr, &co, &wo)?);
    }
    let var = variance_rel_diff_per_variable(reference, other)?;
    Ok(DistributionReport {
        kl_divergence: mean(&kl),
        wasserstein: mean(&w1),
        variance_rel_diff: mean(&var),
        per_variable: PerVariable {
            kl_divergence: kl,
            wasserstein: w1,
            variance_rel_diff: var,
        },
        aggregation: "per-variable averaged",
    })
}

fn check_columns<A, B>(a: &A, b: &B) -> Result<()>
where
    A: WeightedTable + ?Sized,
    B: WeightedTable + ?Sized,
{
    if a.n_cols() != b.n_cols() {
        return Err(Error::Dimension {
            expected: a.n_cols(),
            actual: b.n_cols(),
        });
    }
    if a.n_cols() == 0 {
        return Err(Error::Empty("tables have no columns".into()));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean absolute percentage error, with `|y_true|` floored at `floor`.
pub fn mape(y_true: &[f64], y_pred: &[f64], floor: f64) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Length {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Empty("no targets".into()));
    }
    let s: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| math::abs(t - p) / math::abs(*t).max(floor))
        .sum();
    Ok(s / y_true.len() as f64)
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Length {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Empty("no targets".into()));
    }
    let mu = mean(y_true);
    let ss_tot: f64 = y_true.iter().map(|t| (t - mu) * (t - mu)).sum();
    if !(ss_tot > 0.0) {
        return Err(Error::Degenerate("constant target".into()));
    }
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}
