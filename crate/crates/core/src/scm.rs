//! Synthetic structural causal models.
//!
//! A model is an Erdős–Rényi DAG, one mechanism per non-source node, a
//! four-component Gaussian mixture per source node and i.i.d. Gaussian noise.
//! Data is sampled node by node in topological order.
//!
//! Mechanism families:
//!
//! | kind               | function of causes `x` and noise `e`                           |
//! |--------------------|----------------------------------------------------------------|
//! | `linear`           | `x·W + e`, `W ~ U[0,1]^D`                                      |
//! | `polynomial`       | `Σ_i x^i·W_i + e`, `W_i ~ U[0,1]^D`                            |
//! | `sigmoid`          | `Σ_m (1+a) b(x_m+c) / (1+|b(x_m+c)|) + e`                      |
//! | `gaussian_process` | random-Fourier-feature draw of an RBF GP over `x`, plus `e`    |
//! | `neural_net`       | `tanh([x, e]·W_in)·W_out`, 20 hidden units, Glorot-uniform init |
//!
//! For the sigmoid, each cause gets its own `a ~ Exp(rate 4)`,
//! `b ~ U[-2,-0.5] ∪ U[0.5,2]` (fair coin between the two) and `c ~ U[-2,2]`.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{default_names, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, GraphFile};
use crate::{math, seed};

pub const NN_HIDDEN_UNITS: usize = 20;
pub const GP_FEATURES: usize = 100;
pub const GMM_COMPONENTS: usize = 4;
pub const DEFAULT_POLYNOMIAL_DEGREE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Linear,
    Polynomial,
    Sigmoid,
    GaussianProcess,
    NeuralNet,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 5] = [
        MechanismKind::Linear,
        MechanismKind::Polynomial,
        MechanismKind::Sigmoid,
        MechanismKind::GaussianProcess,
        MechanismKind::NeuralNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Linear => "linear",
            MechanismKind::Polynomial => "polynomial",
            MechanismKind::Sigmoid => "sigmoid",
            MechanismKind::GaussianProcess => "gaussian_process",
            MechanismKind::NeuralNet => "neural_net",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::Argument(format!(
                "unknown mechanism '{s}', expected one of linear, polynomial, sigmoid, gaussian_process, neural_net"
            ))
        })
    }
}

/// A sampled mechanism with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MechanismSpec {
    Linear {
        weights: Vec<f64>,
    },
    /// `coefficients[i]` multiplies the `i`-th power of the causes.
    Polynomial {
        coefficients: Vec<Vec<f64>>,
    },
    Sigmoid {
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
    },
    /// `sqrt(2/F) Σ_f amplitude_f cos(frequency_f · x + phase_f)`.
    GaussianProcess {
        frequencies: Vec<Vec<f64>>,
        phases: Vec<f64>,
        amplitudes: Vec<f64>,
    },
    /// `w_in` has one row per input (the causes, then the noise).
    NeuralNet {
        w_in: Vec<Vec<f64>>,
        w_out: Vec<f64>,
    },
}

impl MechanismSpec {
    pub fn kind(&self) -> MechanismKind {
        match self {
            MechanismSpec::Linear { .. } => MechanismKind::Linear,
            MechanismSpec::Polynomial { .. } => MechanismKind::Polynomial,
            MechanismSpec::Sigmoid { .. } => MechanismKind::Sigmoid,
            MechanismSpec::GaussianProcess { .. } => MechanismKind::GaussianProcess,
            MechanismSpec::NeuralNet { .. } => MechanismKind::NeuralNet,
        }
    }

    /// Number of causes this mechanism consumes.
    pub fn n_causes(&self) -> usize {
        match self {
            MechanismSpec::Linear { weights } => weights.len(),
            MechanismSpec::Polynomial { coefficients } => coefficients.first().map_or(0, Vec::len),
            MechanismSpec::Sigmoid { a, .. } => a.len(),
            MechanismSpec::GaussianProcess { frequencies, .. } => frequencies.first().map_or(0, Vec::len),
            MechanismSpec::NeuralNet { w_in, .. } => w_in.len().saturating_sub(1),
        }
    }

    /// Samples parameters for a mechanism over `n_causes` inputs.
    pub fn sample<R: Rng + ?Sized>(
        kind: MechanismKind,
        n_causes: usize,
        polynomial_degree: usize,
        rng: &mut R,
    ) -> Self {
        let unit = |rng: &mut R| -> Vec<f64> { (0..n_causes).map(|_| rng.random::<f64>()).collect() };
        match kind {
            MechanismKind::Linear => MechanismSpec::Linear { weights: unit(rng) },
            MechanismKind::Polynomial => MechanismSpec::Polynomial {
                coefficients: (0..=polynomial_degree).map(|_| unit(rng)).collect(),
            },
            MechanismKind::Sigmoid => {
                let exp = Exp::new(4.0).expect("positive rate");
                let mut a = Vec::with_capacity(n_causes);
                let mut b = Vec::with_capacity(n_causes);
                let mut c = Vec::with_capacity(n_causes);
                for _ in 0..n_causes {
                    a.push(exp.sample(rng));
                    b.push(if rng.random_bool(0.5) {
                        rng.random_range(-2.0..-0.5)
                    } else {
                        rng.random_range(0.5..2.0)
                    });
                    c.push(rng.random_range(-2.0..2.0));
                }
                MechanismSpec::Sigmoid { a, b, c }
            }
            MechanismKind::GaussianProcess => {
                let mut frequencies = Vec::with_capacity(GP_FEATURES);
                let mut phases = Vec::with_capacity(GP_FEATURES);
                let mut amplitudes = Vec::with_capacity(GP_FEATURES);
                for _ in 0..GP_FEATURES {
                    frequencies.push((0..n_causes).map(|_| StandardNormal.sample(rng)).collect());
                    phases.push(rng.random_range(0.0..2.0 * core::f64::consts::PI));
                    amplitudes.push(StandardNormal.sample(rng));
                }
                MechanismSpec::GaussianProcess {
                    frequencies,
                    phases,
                    amplitudes,
                }
            }
            MechanismKind::NeuralNet => {
                let inputs = n_causes + 1;
                let lim_in = math::sqrt(6.0 / (inputs + NN_HIDDEN_UNITS) as f64);
                let lim_out = math::sqrt(6.0 / (NN_HIDDEN_UNITS + 1) as f64);
                let w_in = (0..inputs)
                    .map(|_| {
                        (0..NN_HIDDEN_UNITS)
                            .map(|_| rng.random_range(-lim_in..lim_in))
                            .collect()
                    })
                    .collect();
                let w_out = (0..NN_HIDDEN_UNITS)
                    .map(|_| rng.random_range(-lim_out..lim_out))
                    .collect();
                MechanismSpec::NeuralNet { w_in, w_out }
            }
        }
    }

    /// Value of the node given its causes (ascending parent index) and noise.
    pub fn evaluate(&self, causes: &[f64], noise: f64) -> Result<f64> {
        let expected = self.n_causes();
        if causes.len() != expected {
            return Err(Error::Dimension {
                expected,
                actual: causes.len(),
            });
        }
        let y = match self {
            MechanismSpec::Linear { weights } => dot(causes, weights) + noise,
            MechanismSpec::Polynomial { coefficients } => {
                let mut y = 0.0;
                for (power, w) in coefficients.iter().enumerate() {
                    for (x, wm) in causes.iter().zip(w) {
                        y += math::powi(*x, power as u32) * wm;
                    }
                }
                y + noise
            }
            MechanismSpec::Sigmoid { a, b, c } => {
                let mut y = 0.0;
                for m in 0..causes.len() {
                    let t = b[m] * (causes[m] + c[m]);
                    y += (1.0 + a[m]) * t / (1.0 + math::abs(t));
                }
                y + noise
            }
            MechanismSpec::GaussianProcess {
                frequencies,
                phases,
                amplitudes,
            } => {
                let scale = math::sqrt(2.0 / phases.len() as f64);
                let s: f64 = frequencies
                    .iter()
                    .zip(phases)
                    .zip(amplitudes)
                    .map(|((omega, phi), amp)| amp * math::cos(dot(causes, omega) + phi))
                    .sum();
                scale * s + noise
            }
            MechanismSpec::NeuralNet { w_in, w_out } => {
                let hidden = w_out.len();
                let mut y = 0.0;
                for h in 0..hidden {
                    let mut pre = noise * w_in[causes.len()][h];
                    for (m, x) in causes.iter().enumerate() {
                        pre += x * w_in[m][h];
                    }
                    y += math::tanh(pre) * w_out[h];
                }
                y
            }
        };
        Ok(y)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One-dimensional Gaussian mixture for a source node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

impl GaussianMixture {
    /// Means `U[-2,2]`, standard deviations `U[0.3,1]`, weights Dirichlet(1).
    pub fn sample_params<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let means = (0..GMM_COMPONENTS).map(|_| rng.random_range(-2.0..2.0)).collect();
        let std_devs = (0..GMM_COMPONENTS).map(|_| rng.random_range(0.3..1.0)).collect();
        let raw: Vec<f64> = (0..GMM_COMPONENTS).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = raw.iter().sum();
        Self {
            weights: raw.iter().map(|w| w / total).collect(),
            means,
            std_devs,
        }
    }

    pub fn mean(&self) -> f64 {
        dot(&self.weights, &self.means)
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.std_devs)
            .map(|((w, m), s)| w * (s * s + m * m))
            .sum::<f64>()
            - mu * mu
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut comp = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                comp = i;
                break;
            }
        }
        let z: f64 = StandardNormal.sample(rng);
        self.means[comp] + self.std_devs[comp] * z
    }
}

/// Generation parameters for an [`ScmModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScmConfig {
    pub d: usize,
    pub expected_degree: f64,
    pub mechanism: MechanismKind,
    pub noise_amplitude: f64,
    pub polynomial_degree: usize,
}

impl ScmConfig {
    pub fn new(d: usize, expected_degree: f64, mechanism: MechanismKind, noise_amplitude: f64) -> Self {
        Self {
            d,
            expected_degree,
            mechanism,
            noise_amplitude,
            polynomial_degree: DEFAULT_POLYNOMIAL_DEGREE,
        }
    }
}

/// A generated structural causal model. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmModel {
    graph: CausalGraph,
    mechanisms: Vec<Option<MechanismSpec>>,
    sources: Vec<Option<GaussianMixture>>,
    noise_amplitude: f64,
    seed: u64,
}

impl ScmModel {
    /// Samples DAG, then mechanisms, then source mixtures, each from its own
    /// stream derived from `seed`.
    pub fn generate(config: &ScmConfig, seed: u64) -> Result<Self> {
        if !(config.noise_amplitude >= 0.0) || !config.noise_amplitude.is_finite() {
            return Err(Error::Argument(format!(
                "noise amplitude must be finite and non-negative, got {}",
                config.noise_amplitude
            )));
        }
        let graph = CausalGraph::erdos_renyi(config.d, config.expected_degree, seed::derive(seed, 1))?;
        let mut mech_rng = seed::rng(seed::derive(seed, 2));
        let mechanisms = (0..config.d)
            .map(|j| {
                let parents = graph.parents(j).expect("in range");
                (!parents.is_empty()).then(|| {
                    MechanismSpec::sample(config.mechanism, parents.len(), config.polynomial_degree, &mut mech_rng)
                })
            })
            .collect();
        let mut src_rng = seed::rng(seed::derive(seed, 3));
        let sources = (0..config.d)
            .map(|j| graph.is_source(j).then(|| GaussianMixture::sample_params(&mut src_rng)))
            .collect();
        Ok(Self {
            graph,
            mechanisms,
            sources,
            noise_amplitude: config.noise_amplitude,
            seed,
        })
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn mechanism(&self, j: usize) -> Option<&MechanismSpec> {
        self.mechanisms[j].as_ref()
    }

    pub fn source(&self, j: usize) -> Option<&GaussianMixture> {
        self.sources[j].as_ref()
    }

    pub fn noise_amplitude(&self) -> f64 {
        self.noise_amplitude
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_mechanisms(&self) -> usize {
        self.mechanisms.iter().flatten().count()
    }

    /// Draws `n` rows. Columns are in node-index order, named `x0..`.
    pub fn sample(&self, n: usize, sample_seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::Argument("sample size must be at least 1".into()));
        }
        let d = self.graph.node_count();
        let mut rng = seed::rng(sample_seed);
        let mut values = Matrix::zeros(n, d);
        let mut causes = Vec::new();
        for &j in self.graph.topo_order() {
            if let Some(gmm) = &self.sources[j] {
                for r in 0..n {
                    values.set(r, j, gmm.draw(&mut rng));
                }
                continue;
            }
            let mech = self.mechanisms[j].as_ref().expect("non-source has a mechanism");
            let parents = self.graph.parents(j)?;
            for r in 0..n {
                causes.clear();
                causes.extend(parents.iter().map(|&p| values.get(r, p)));
                let z: f64 = StandardNormal.sample(&mut rng);
                values.set(r, j, mech.evaluate(&causes, self.noise_amplitude * z)?);
            }
        }
        Dataset::new(default_names(d), values)
    }

    pub fn to_record(&self) -> ScmRecord {
        ScmRecord {
            seed: self.seed,
            noise_amplitude: self.noise_amplitude,
            graph: self.graph.to_file(),
            topo_order: self.graph.topo_order().to_vec(),
            nodes: (0..self.graph.node_count())
                .map(|j| NodeRecord {
                    index: j,
                    parents: self.graph.parents(j).expect("in range").to_vec(),
                    mechanism: self.mechanisms[j].clone(),
                    source: self.sources[j].clone(),
                })
                .collect(),
        }
    }

    pub fn from_record(record: &ScmRecord) -> Result<Self> {
        let graph = CausalGraph::from_file(&record.graph)?;
        let d = graph.node_count();
        if record.nodes.len() != d {
            return Err(Error::Dimension {
                expected: d,
                actual: record.nodes.len(),
            });
        }
        let mut mechanisms = Vec::with_capacity(d);
        let mut sources = Vec::with_capacity(d);
        for (j, node) in record.nodes.iter().enumerate() {
            let parents = graph.parents(j)?;
            match (&node.mechanism, &node.source, parents.is_empty()) {
                (None, Some(_), true) => {}
                (Some(m), None, false) if m.n_causes() == parents.len() => {}
                _ => {
                    return Err(Error::Argument(format!(
                        "node {j}: mechanism/source do not match its {} parents",
                        parents.len()
                    )))
                }
            }
            mechanisms.push(node.mechanism.clone());
            sources.push(node.source.clone());
        }
        Ok(Self {
            graph,
            mechanisms,
            sources,
            noise_amplitude: record.noise_amplitude,
            seed: record.seed,
        })
    }
}

/// Serializable form of an [`ScmModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmRecord {
    pub seed: u64,
    pub noise_amplitude: f64,
    pub graph: GraphFile,
    pub topo_order: Vec<usize>,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub index: usize,
    pub parents: Vec<usize>,
    pub mechanism: Option<MechanismSpec>,
    pub source: Option<GaussianMixture>,
}

/// Replaces whole rows with outliers.
///
/// `ceil(fraction · n)` rows are chosen uniformly without replacement. Every
/// value in a chosen row becomes `μ_j ± magnitude_sigmas · σ_j` with a random
/// sign, where `μ_j` and `σ_j` are the clean column mean and sample standard
/// deviation. Row choice and signs come from one seeded permutation, so for a
/// fixed seed the corrupted rows at a smaller fraction are a prefix of those
/// at a larger one. Returns the new table and the sorted corrupted rows.
pub fn inject_outliers(
    data: &Dataset,
    fraction: f64,
    magnitude_sigmas: f64,
    seed: u64,
) -> Result<(Dataset, Vec<usize>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Argument(format!(
            "outlier fraction must lie in [0, 1], got {fraction}"
        )));
    }
    if !(magnitude_sigmas > 0.0) || !magnitude_sigmas.is_finite() {
        return Err(Error::Argument(format!(
            "outlier magnitude must be positive, got {magnitude_sigmas}"
        )));
    }
    let n = data.n_rows();
    let d = data.n_cols();
    let count = (math::ceil(fraction * n as f64 - 1e-9).max(0.0) as usize).min(n);

    let mut rng: ChaCha8Rng = seed::rng(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let signs: Vec<bool> = (0..n * d).map(|_| rng.random_bool(0.5)).collect();

    let stats: Vec<(f64, f64)> = (0..d).map(|j| mean_sd(&data.column(j))).collect();
    let mut out = data.select_rows(&(0..n).collect::<Vec<_>>());
    let out_values = out.values_mut();
    for (slot, &r) in perm.iter().take(count).enumerate() {
        for (j, &(mu, sd)) in stats.iter().enumerate() {
            let s = if signs[slot * d + j] { 1.0 } else { -1.0 };
            out_values.set(r, j, mu + s * magnitude_sigmas * sd);
        }
    }
    let mut rows: Vec<usize> = perm[..count].to_vec();
    rows.sort_unstable();
    Ok((out, rows))
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, math::sqrt(var))
}
