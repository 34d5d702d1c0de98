//! Scenario configuration for sweeps.
//!
//! Configs are JSON. Unknown fields are rejected and every validation error
//! carries a JSON pointer to the offending field.

use std::fmt;
use std::path::Path;

use cda_core::augment::DEFAULT_MAX_POINTS;
use cda_core::learner::GbtParams;
use cda_core::scm::{ScmConfig, DEFAULT_POLYNOMIAL_DEGREE};
use cda_core::MechanismKind;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const SCHEMA: &str = include_str!("../schema/scenario-config.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Mechanism,
    NSamples,
    Dimension,
    ExpectedDegree,
    NoiseAmplitude,
    OutlierFraction,
    Theta,
}

impl Axis {
    pub const ALL: [Axis; 7] = [
        Axis::Mechanism,
        Axis::NSamples,
        Axis::Dimension,
        Axis::ExpectedDegree,
        Axis::NoiseAmplitude,
        Axis::OutlierFraction,
        Axis::Theta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Mechanism => "mechanism",
            Axis::NSamples => "n_samples",
            Axis::Dimension => "dimension",
            Axis::ExpectedDegree => "expected_degree",
            Axis::NoiseAmplitude => "noise_amplitude",
            Axis::OutlierFraction => "outlier_fraction",
            Axis::Theta => "theta",
        }
    }

    /// The values swept when a config gives none.
    pub fn default_values(self) -> Vec<AxisValue> {
        let nums = |v: &[f64]| v.iter().map(|&x| AxisValue::Number(x)).collect();
        match self {
            Axis::Mechanism => MechanismKind::ALL.into_iter().map(AxisValue::Mechanism).collect(),
            Axis::NSamples => nums(&[30.0, 40.0, 60.0, 80.0, 100.0, 300.0, 500.0, 700.0]),
            Axis::Dimension => nums(&[7.0, 8.0, 9.0, 10.0, 15.0, 20.0, 25.0]),
            Axis::ExpectedDegree => nums(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]),
            Axis::NoiseAmplitude => nums(&[0.1, 0.2, 0.4, 0.6, 0.8, 1.0]),
            Axis::OutlierFraction => nums(&[0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.15]),
            Axis::Theta => nums(&[1e-1, 1e-2, 1e-3, 1e-4, 1e-5]),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One point on a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Mechanism(MechanismKind),
    Number(f64),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Mechanism(m) => write!(f, "{m}"),
            AxisValue::Number(x) => write!(f, "{x}"),
        }
    }
}

/// Parameters held fixed when they are not the swept axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Defaults {
    pub d: usize,
    pub expected_degree: f64,
    pub noise_amplitude: f64,
    pub theta: f64,
    pub outlier_fraction: f64,
    pub repetitions: usize,
    pub mechanism: MechanismKind,
    pub n_samples: usize,
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            d: 10,
            expected_degree: 3.0,
            noise_amplitude: 0.4,
            theta: 1e-2,
            outlier_fraction: 0.0,
            repetitions: 20,
            mechanism: MechanismKind::NeuralNet,
            n_samples: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerGrid {
    pub n_estimators: Vec<usize>,
    pub reg_lambda: Vec<f64>,
}

impl Default for LearnerGrid {
    fn default() -> Self {
        Self {
            n_estimators: vec![10, 50, 200],
            reg_lambda: vec![1.0, 10.0, 100.0],
        }
    }
}

impl LearnerGrid {
    pub fn params(&self) -> Vec<GbtParams> {
        let mut out = Vec::new();
        for &n in &self.n_estimators {
            for &l in &self.reg_lambda {
                out.push(GbtParams::with(n, l));
            }
        }
        out
    }
}

fn default_split_ratio() -> f64 {
    0.7
}
fn default_cv_folds() -> usize {
    3
}
fn default_max_points() -> usize {
    DEFAULT_MAX_POINTS
}
fn default_outlier_magnitude() -> f64 {
    5.0
}
fn default_true() -> bool {
    true
}
fn default_kl_grid_size() -> usize {
    512
}
fn default_polynomial_degree() -> usize {
    DEFAULT_POLYNOMIAL_DEGREE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub axis: Axis,
    #[serde(default)]
    pub axis_values: Option<Vec<AxisValue>>,
    #[serde(default)]
    pub defaults: Defaults,
    #[serde(default = "default_split_ratio")]
    pub split_ratio: f64,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub learner_grid: LearnerGrid,
    pub master_seed: u64,
    /// Frontier limit for one augmentation.
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    /// Outlier distance from the column mean, in standard deviations.
    #[serde(default = "default_outlier_magnitude")]
    pub outlier_magnitude: f64,
    /// When false, learners are skipped and only augmentation and
    /// distribution metrics are reported.
    #[serde(default = "default_true")]
    pub evaluate_learners: bool,
    #[serde(default = "default_kl_grid_size")]
    pub kl_grid_size: usize,
    #[serde(default = "default_polynomial_degree")]
    pub polynomial_degree: usize,
}

/// Fully resolved settings of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSettings {
    pub d: usize,
    pub expected_degree: f64,
    pub noise_amplitude: f64,
    pub theta: f64,
    pub outlier_fraction: f64,
    pub mechanism: MechanismKind,
    pub n_samples: usize,
}

impl CellSettings {
    pub fn scm_config(&self, polynomial_degree: usize) -> ScmConfig {
        ScmConfig {
            polynomial_degree,
            ..ScmConfig::new(self.d, self.expected_degree, self.mechanism, self.noise_amplitude)
        }
    }
}

impl ScenarioConfig {
    /// A config sweeping `axis` with every other field at its default.
    pub fn new(axis: Axis, master_seed: u64) -> Self {
        Self {
            axis,
            axis_values: None,
            defaults: Defaults::default(),
            split_ratio: default_split_ratio(),
            cv_folds: default_cv_folds(),
            learner_grid: LearnerGrid::default(),
            master_seed,
            max_points: default_max_points(),
            outlier_magnitude: default_outlier_magnitude(),
            evaluate_learners: true,
            kl_grid_size: default_kl_grid_size(),
            polynomial_degree: default_polynomial_degree(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = json_pointer(&e.path().to_string());
            CliError::config(pointer, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn values(&self) -> Vec<AxisValue> {
        self.axis_values.clone().unwrap_or_else(|| self.axis.default_values())
    }

    pub fn grid(&self) -> Vec<GbtParams> {
        self.learner_grid.params()
    }

    /// Settings of the cell at `value` on the swept axis.
    pub fn cell(&self, value: AxisValue) -> Result<CellSettings, CliError> {
        let d = &self.defaults;
        let mut s = CellSettings {
            d: d.d,
            expected_degree: d.expected_degree,
            noise_amplitude: d.noise_amplitude,
            theta: d.theta,
            outlier_fraction: d.outlier_fraction,
            mechanism: d.mechanism,
            n_samples: d.n_samples,
        };
        let bad = || CliError::config("/axis_values", format!("value {value} does not fit axis {}", self.axis));
        match (self.axis, value) {
            (Axis::Mechanism, AxisValue::Mechanism(m)) => s.mechanism = m,
            (Axis::Mechanism, _) | (_, AxisValue::Mechanism(_)) => return Err(bad()),
            (axis, AxisValue::Number(x)) => match axis {
                Axis::NSamples => s.n_samples = as_count(x).ok_or_else(bad)?,
                Axis::Dimension => s.d = as_count(x).ok_or_else(bad)?,
                Axis::ExpectedDegree => s.expected_degree = x,
                Axis::NoiseAmplitude => s.noise_amplitude = x,
                Axis::OutlierFraction => s.outlier_fraction = x,
                Axis::Theta => s.theta = x,
                Axis::Mechanism => unreachable!(),
            },
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let err = |p: &str, m: String| Err(CliError::config(p, m));
        if let Some(values) = &self.axis_values {
            if values.is_empty() {
                return err("/axis_values", "must not be empty".into());
            }
            for (i, v) in values.iter().enumerate() {
                let pointer = format!("/axis_values/{i}");
                let cell = self.cell(*v).map_err(|e| CliError::config(&pointer, strip_config(e)))?;
                check_cell(&cell, &pointer)?;
            }
        }
        let base = self.cell_defaults();
        check_cell(&base, "/defaults")?;
        if self.defaults.repetitions == 0 {
            return err("/defaults/repetitions", "must be at least 1".into());
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return err("/split_ratio", format!("must lie in (0, 1), got {}", self.split_ratio));
        }
        if self.cv_folds < 2 {
            return err("/cv_folds", format!("must be at least 2, got {}", self.cv_folds));
        }
        if self.learner_grid.n_estimators.is_empty() || self.learner_grid.n_estimators.contains(&0) {
            return err(
                "/learner_grid/n_estimators",
                "must be a non-empty list of positive integers".into(),
            );
        }
        if self.learner_grid.reg_lambda.is_empty()
            || self
                .learner_grid
                .reg_lambda
                .iter()
                .any(|l| !(*l >= 0.0) || !l.is_finite())
        {
            return err(
                "/learner_grid/reg_lambda",
                "must be a non-empty list of non-negative numbers".into(),
            );
        }
        if self.max_points == 0 {
            return err("/max_points", "must be positive".into());
        }
        if !(self.outlier_magnitude > 0.0) || !self.outlier_magnitude.is_finite() {
            return err("/outlier_magnitude", "must be positive".into());
        }
        if self.kl_grid_size < 2 {
            return err("/kl_grid_size", "must be at least 2".into());
        }
        if self.polynomial_degree == 0 {
            return err("/polynomial_degree", "must be at least 1".into());
        }
        Ok(())
    }

    fn cell_defaults(&self) -> CellSettings {
        let d = &self.defaults;
        CellSettings {
            d: d.d,
            expected_degree: d.expected_degree,
            noise_amplitude: d.noise_amplitude,
            theta: d.theta,
            outlier_fraction: d.outlier_fraction,
            mechanism: d.mechanism,
            n_samples: d.n_samples,
        }
    }

    /// Rows of the training portion for a sample of `n`.
    pub fn train_size(&self, n: usize) -> usize {
        ((n as f64) * self.split_ratio).round() as usize
    }
}

fn strip_config(e: CliError) -> String {
    match e {
        CliError::Config { message, .. } => message,
        other => other.to_string(),
    }
}

fn as_count(x: f64) -> Option<usize> {
    (x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64).then_some(x as usize)
}

fn check_cell(c: &CellSettings, pointer: &str) -> Result<(), CliError> {
    let fail = |field: &str, msg: String| {
        Err(CliError::config(
            if pointer.starts_with("/defaults") {
                format!("{pointer}/{field}")
            } else {
                pointer.to_string()
            },
            msg,
        ))
    };
    if c.d < 2 {
        return fail("d", format!("dimension must be at least 2, got {}", c.d));
    }
    if !(c.expected_degree >= 0.0) || !c.expected_degree.is_finite() {
        return fail(
            "expected_degree",
            format!("must be non-negative, got {}", c.expected_degree),
        );
    }
    if !(c.noise_amplitude >= 0.0) || !c.noise_amplitude.is_finite() {
        return fail(
            "noise_amplitude",
            format!("must be non-negative, got {}", c.noise_amplitude),
        );
    }
    if !(0.0..1.0).contains(&c.theta) {
        return fail("theta", format!("must lie in [0, 1), got {}", c.theta));
    }
    if !(0.0..=1.0).contains(&c.outlier_fraction) {
        return fail(
            "outlier_fraction",
            format!("must lie in [0, 1], got {}", c.outlier_fraction),
        );
    }
    if c.n_samples < 10 {
        return fail("n_samples", format!("must be at least 10, got {}", c.n_samples));
    }
    Ok(())
}

/// Turns a serde_path_to_error path (`a.b[2]`) into a JSON pointer (`/a/b/2`).
fn json_pointer(path: &str) -> String {
    if path == "." || path.is_empty() {
        return String::new();
    }
    let mut out = String::new();
    for seg in path.split('.') {
        let mut rest = seg;
        if let Some(i) = rest.find('[') {
            if i > 0 {
                out.push('/');
                out.push_str(&rest[..i]);
            }
            rest = &rest[i..];
            while let Some(end) = rest.find(']') {
                out.push('/');
                out.push_str(&rest[1..end]);
                rest = &rest[end + 1..];
            }
        } else {
            out.push('/');
            out.push_str(rest);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"axis": "theta", "master_seed": 7}"#).unwrap();
        assert_eq!(cfg.defaults, Defaults::default());
        assert_eq!(cfg.values().len(), 5);
        assert_eq!(cfg.grid().len(), 9);
        assert_eq!(cfg.cv_folds, 3);
        assert_eq!(cfg.split_ratio, 0.7);
    }

    #[test]
    fn unknown_axis_names_valid_ones() {
        let err = ScenarioConfig::from_json(r#"{"axis": "colour", "master_seed": 1}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("/axis"), "{msg}");
        for a in Axis::ALL {
            assert!(msg.contains(a.name()), "{msg}");
        }
    }

    #[test]
    fn seed_is_required() {
        let err = ScenarioConfig::from_json(r#"{"axis": "theta"}"#).unwrap_err();
        assert!(err.to_string().contains("master_seed"));
    }

    #[test]
    fn pointer_to_nested_field() {
        let err =
            ScenarioConfig::from_json(r#"{"axis": "theta", "master_seed": 1, "defaults": {"d": "ten"}}"#).unwrap_err();
        match err {
            CliError::Config { pointer, .. } => assert_eq!(pointer, "/defaults/d"),
            e => panic!("{e}"),
        }
        let err =
            ScenarioConfig::from_json(r#"{"axis": "theta", "master_seed": 1, "defaults": {"theta": 2}}"#).unwrap_err();
        match err {
            CliError::Config { pointer, .. } => assert_eq!(pointer, "/defaults/theta"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn axis_value_type_checked() {
        let err = ScenarioConfig::from_json(r#"{"axis": "n_samples", "master_seed": 1, "axis_values": [30, 40.5]}"#)
            .unwrap_err();
        match err {
            CliError::Config { pointer, .. } => assert_eq!(pointer, "/axis_values/1"),
            e => panic!("{e}"),
        }
        assert!(
            ScenarioConfig::from_json(r#"{"axis": "theta", "master_seed": 1, "axis_values": ["linear"]}"#).is_err()
        );
        let cfg = ScenarioConfig::from_json(
            r#"{"axis": "mechanism", "master_seed": 1, "axis_values": ["linear", "sigmoid"]}"#,
        )
        .unwrap();
        assert_eq!(cfg.cell(cfg.values()[1]).unwrap().mechanism, MechanismKind::Sigmoid);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"axis": "theta", "master_seed": 1, "sede": 2}"#).is_err());
    }

    #[test]
    fn pointer_conversion() {
        assert_eq!(json_pointer("defaults.d"), "/defaults/d");
        assert_eq!(json_pointer("axis_values[3]"), "/axis_values/3");
        assert_eq!(json_pointer("."), "");
    }

    #[test]
    fn schema_is_valid_json() {
        let v: Value = serde_json::from_str(SCHEMA).unwrap();
        let axes = &v["properties"]["axis"]["enum"];
        assert_eq!(axes.as_array().unwrap().len(), Axis::ALL.len());
    }
}
