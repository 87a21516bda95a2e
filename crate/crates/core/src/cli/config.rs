//! TOML run configuration.
//!
//! ```toml
//! seed = 42
//!
//! [metric]
//! kind = "randers"          # euclidean | riemannian | polar | sphere | randers | quartic | custom
//! dimension = 2
//! b = [0.5, 0.0]
//!
//! [model]
//! a = 1.0
//!
//! [system]
//! type = "lagrange"
//! masses = [1.0, 1.0]
//! gravity = 9.8
//! height = "x2"
//!
//! [initial]
//! x = [0.0, 0.0]
//! y = [3.0, 4.0]
//! t1 = 1.0
//!
//! [integrator]
//! method = "rk4-fixed"
//! step = 0.01
//! ```
//!
//! Unknown keys are rejected and errors name the offending key path.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::dynamics::{
    lagrangian_standard, HamiltonFlow, HamiltonMode, HamiltonianSpec, IntegratorConfig, LagrangeFlow, LagrangianSpec,
};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::finsler::{BaseMetric, FundamentalFunction, PhasePoint};
use crate::kahler::ModelParams;
use crate::sampling::{self, SampleBox};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub metric: Option<MetricConfig>,
    #[serde(default)]
    pub model: ModelConfig,
    pub system: Option<SystemConfig>,
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub sampling: Option<SamplingConfig>,
    pub einstein: Option<EinsteinConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Euclidean,
    Riemannian,
    Polar,
    Sphere,
    Randers,
    Quartic,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub kind: MetricKind,
    pub dimension: Option<usize>,
    /// Constant Riemannian matrix, or the Randers `α`.
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Randers covector.
    pub b: Option<Vec<f64>>,
    /// Randers `B` in `b_i(x) = b_i + B_ij x^j`.
    pub b_gradient: Option<Vec<Vec<f64>>>,
    /// `F(x, y)` for the custom kind.
    pub expression: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub a: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { a: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemType {
    Lagrange,
    Hamilton,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(rename = "type")]
    pub kind: SystemType,
    pub masses: Option<Vec<f64>>,
    #[serde(default)]
    pub gravity: f64,
    /// Height `h(x)` as an expression.
    pub height: Option<String>,
    /// A custom `L(x, y)`, instead of masses/gravity/height.
    pub lagrangian: Option<String>,
    pub hamiltonian: Option<String>,
    #[serde(default)]
    pub hamilton_mode: HamiltonMode,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_t1")]
    pub t1: f64,
}

fn default_t1() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub samples: Option<usize>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EinsteinConfig {
    #[serde(rename = "A", default = "default_a_values")]
    pub a_values: Vec<f64>,
    #[serde(default = "default_c_values")]
    pub c: Vec<f64>,
    /// The grid is `t = k/100` for `k` from `100 t_min` to `100 t_max`.
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

impl Default for EinsteinConfig {
    fn default() -> Self {
        EinsteinConfig {
            a_values: default_a_values(),
            c: default_c_values(),
            t_min: default_t_min(),
            t_max: default_t_max(),
        }
    }
}

fn default_a_values() -> Vec<f64> {
    vec![1.0, 2.0, 5.0]
}

fn default_c_values() -> Vec<f64> {
    vec![-2.0, -1.0, -0.5, 0.5, 1.0]
}

fn default_t_min() -> f64 {
    0.01
}

fn default_t_max() -> f64 {
    3.0
}

impl EinsteinConfig {
    /// Grid indices `k` with `t = k/100`.
    pub fn t_range(&self) -> Result<(u32, u32)> {
        let lo = (self.t_min * 100.0).round();
        let hi = (self.t_max * 100.0).round();
        if !(lo >= 0.0) || !(hi >= lo) || hi > u32::MAX as f64 {
            return Err(Error::config(
                "einstein.t_min",
                format!("need 0 <= t_min <= t_max, got [{}, {}]", self.t_min, self.t_max),
            ));
        }
        Ok((lo as u32, hi as u32))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().message().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.model.a > 0.0) || !self.model.a.is_finite() {
            return Err(Error::config(
                "model.a",
                format!("the homogeneity constant must satisfy a > 0, got {}", self.model.a),
            ));
        }
        if let Some(m) = &self.metric {
            if m.dimension == Some(0) {
                return Err(Error::config("metric.dimension", "dimension must be at least 1"));
            }
        }
        if let Some(init) = &self.initial {
            if init.x.len() != init.y.len() {
                return Err(Error::config(
                    "initial.y",
                    format!("x has {} components but y has {}", init.x.len(), init.y.len()),
                ));
            }
            if init.y.iter().all(|&v| v == 0.0) {
                return Err(Error::config(
                    "initial.y",
                    "initial point lies on the null section (y = 0); the slit bundle excludes it",
                ));
            }
            if !(init.t1 > init.t0) {
                return Err(Error::config(
                    "initial.t1",
                    format!("need t1 > t0, got t0 = {}, t1 = {}", init.t0, init.t1),
                ));
            }
            if let Some(n) = self.dimension() {
                if n != init.x.len() {
                    return Err(Error::config(
                        "initial.x",
                        format!("metric dimension is {n} but x has {} components", init.x.len()),
                    ));
                }
            }
        }
        self.integrator
            .validate()
            .map_err(|e| Error::config("integrator", e.to_string()))?;
        Ok(())
    }

    /// Base dimension implied by the metric section.
    pub fn dimension(&self) -> Option<usize> {
        let m = self.metric.as_ref()?;
        match m.kind {
            MetricKind::Polar | MetricKind::Sphere => Some(2),
            _ => m
                .dimension
                .or_else(|| m.matrix.as_ref().map(Vec::len))
                .or_else(|| m.b.as_ref().map(Vec::len)),
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.model.a).map_err(|e| Error::config("model.a", e.to_string()))
    }

    pub fn metric_config(&self) -> Result<&MetricConfig> {
        self.metric
            .as_ref()
            .ok_or_else(|| Error::config("metric", "this command needs a [metric] section"))
    }

    pub fn fundamental_function(&self) -> Result<FundamentalFunction> {
        let m = self.metric_config()?;
        let n = self.dimension();
        let need_n = || n.ok_or_else(|| Error::config("metric.dimension", "dimension is required for this kind"));
        let wrap = |key: &str| {
            let key = key.to_string();
            move |e: Error| Error::config(format!("metric.{key}"), e.to_string())
        };
        Ok(match m.kind {
            MetricKind::Euclidean => FundamentalFunction::euclidean(need_n()?),
            MetricKind::Polar => FundamentalFunction::polar(),
            MetricKind::Sphere => FundamentalFunction::sphere(),
            MetricKind::Quartic => FundamentalFunction::quartic(need_n()?),
            MetricKind::Riemannian => {
                let rows = m
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::config("metric.matrix", "riemannian metric needs `matrix`"))?;
                let g = square_matrix(rows, need_n()?, "metric.matrix")?;
                FundamentalFunction::riemannian(BaseMetric::Constant(g)).map_err(wrap("matrix"))?
            }
            MetricKind::Randers => {
                let b = m
                    .b
                    .clone()
                    .ok_or_else(|| Error::config("metric.b", "randers metric needs `b`"))?;
                let n = need_n()?;
                if b.len() != n {
                    return Err(Error::config("metric.b", format!("expected {n} components, got {}", b.len())));
                }
                let alpha = match &m.matrix {
                    Some(rows) => square_matrix(rows, n, "metric.matrix")?,
                    None => DMatrix::identity(n, n),
                };
                let grad = m
                    .b_gradient
                    .as_ref()
                    .map(|rows| square_matrix(rows, n, "metric.b_gradient"))
                    .transpose()?;
                FundamentalFunction::randers_general(alpha, b, grad).map_err(wrap("b"))?
            }
            MetricKind::Custom => {
                let src = m
                    .expression
                    .as_ref()
                    .ok_or_else(|| Error::config("metric.expression", "custom metric needs `expression`"))?;
                let e = Expression::parse(src, need_n()?).map_err(wrap("expression"))?;
                FundamentalFunction::custom(Arc::new(e))
            }
        })
    }

    /// Sampling box: explicit `[sampling]` bounds, else the catalog box for
    /// built-in kinds, else `[-2, 2]^n`.
    pub fn sample_box(&self, f: &FundamentalFunction) -> Result<SampleBox> {
        let s = self.sampling.as_ref();
        let n = f.dim();
        let fallback = match self.metric.as_ref().map(|m| m.kind) {
            Some(MetricKind::Polar) => sampling::builtin("polar").map(|b| b.domain),
            Some(MetricKind::Sphere) => sampling::builtin("sphere").map(|b| b.domain),
            _ => None,
        }
        .unwrap_or_else(|| SampleBox::cube(n, 2.0));
        let bx = SampleBox {
            lo: s.and_then(|s| s.lo.clone()).unwrap_or(fallback.lo),
            hi: s.and_then(|s| s.hi.clone()).unwrap_or(fallback.hi),
        };
        if bx.dim() != n {
            return Err(Error::config("sampling.lo", format!("expected {n} components")));
        }
        bx.validate().map_err(|e| Error::config("sampling", e.to_string()))?;
        Ok(bx)
    }

    pub fn initial_point(&self) -> Result<(PhasePoint, f64, f64)> {
        let init = self
            .initial
            .as_ref()
            .ok_or_else(|| Error::config("initial", "this command needs an [initial] section"))?;
        let p = PhasePoint::new(init.x.clone(), init.y.clone()).map_err(|e| Error::config("initial", e.to_string()))?;
        Ok((p, init.t0, init.t1))
    }

    pub fn system_config(&self) -> Result<&SystemConfig> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::config("system", "this command needs a [system] section"))
    }

    pub fn lagrange_flow(&self) -> Result<LagrangeFlow> {
        let metric = self.fundamental_function()?;
        let n = metric.dim();
        let s = self.system_config()?;
        let lagrangian = match (&s.lagrangian, &s.masses) {
            (Some(_), Some(_)) => {
                return Err(Error::config("system.lagrangian", "give either `lagrangian` or `masses`, not both"))
            }
            (Some(src), None) => LagrangianSpec::new(Arc::new(
                Expression::parse(src, n).map_err(|e| Error::config("system.lagrangian", e.to_string()))?,
            )),
            (None, masses) => {
                let masses = masses.clone().unwrap_or_else(|| vec![1.0; n]);
                if masses.len() != n {
                    return Err(Error::config(
                        "system.masses",
                        format!("expected {n} masses, got {}", masses.len()),
                    ));
                }
                let height = Expression::parse(s.height.as_deref().unwrap_or("0"), n)
                    .map_err(|e| Error::config("system.height", e.to_string()))?;
                lagrangian_standard(masses, s.gravity, Arc::new(height))
                    .map_err(|e| Error::config("system.masses", e.to_string()))?
            }
        };
        Ok(LagrangeFlow {
            lagrangian,
            metric,
            params: self.model_params()?,
        })
    }

    pub fn hamilton_flow(&self) -> Result<HamiltonFlow> {
        let metric = self.fundamental_function()?;
        let s = self.system_config()?;
        let src = s
            .hamiltonian
            .as_ref()
            .ok_or_else(|| Error::config("system.hamiltonian", "hamilton system needs `hamiltonian`"))?;
        let h = Expression::parse(src, metric.dim()).map_err(|e| Error::config("system.hamiltonian", e.to_string()))?;
        Ok(HamiltonFlow {
            hamiltonian: HamiltonianSpec::new(Arc::new(h)),
            metric,
            params: self.model_params()?,
            mode: s.hamilton_mode,
        })
    }
}

fn square_matrix(rows: &[Vec<f64>], n: usize, key: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::config(key, format!("expected a {n}×{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
