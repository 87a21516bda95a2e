//! Fundamental functions, the fundamental metric tensor and the Finsler
//! conditions.
//!
//! A Finsler structure on an `n`-dimensional coordinate patch is a function
//! `F(x, y)` on the slit tangent bundle (`y != 0`) that is positive, positively
//! 1-homogeneous in `y`, and whose squared fiber Hessian
//! `g_ij = ½ ∂²F²/∂y^i∂y^j` is positive definite.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{evaluate_jet, value_at, Jet, ScalarField};
use crate::linalg;

/// A point `(x, y)` of the slit tangent bundle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::Parameter("phase dimension must be at least 1".into()));
        }
        if let Some(v) = x.iter().chain(&y).find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite phase coordinate {v}")));
        }
        if y.iter().all(|&v| v == 0.0) {
            return Err(Error::NullSection);
        }
        Ok(PhasePoint { x, y })
    }

    /// Builds a point from the stacked coordinates `(x^1..x^n, y^1..y^n)`.
    pub fn from_state(z: &[f64]) -> Result<Self> {
        let n = z.len() / 2;
        PhasePoint::new(z[..n].to_vec(), z[n..].to_vec())
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn state(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    /// The point `(x, λy)`.
    pub fn scale_fiber(&self, lambda: f64) -> Result<Self> {
        PhasePoint::new(self.x.clone(), self.y.iter().map(|v| v * lambda).collect())
    }

    pub fn fiber(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.y)
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(x = {:?}, y = {:?})", self.x, self.y)
    }
}

/// Riemannian metric `g_ij(x)` written against jets.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    /// Row-major `n × n` components at `x`.
    fn components(&self, x: &[Jet]) -> Vec<Jet>;
}

/// Base metrics for the Riemannian kind.
#[derive(Clone)]
pub enum BaseMetric {
    /// Constant symmetric positive-definite matrix.
    Constant(DMatrix<f64>),
    /// `ds² = dr² + r² dθ²` with `x = (r, θ)`.
    Polar,
    /// Round unit sphere `ds² = dθ² + sin²θ dφ²` with `x = (θ, φ)`.
    Sphere,
    Custom(Arc<dyn MetricField>),
}

impl fmt::Debug for BaseMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseMetric::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            BaseMetric::Polar => f.write_str("Polar"),
            BaseMetric::Sphere => f.write_str("Sphere"),
            BaseMetric::Custom(c) => write!(f, "Custom(dim = {})", c.dim()),
        }
    }
}

impl BaseMetric {
    pub fn dim(&self) -> usize {
        match self {
            BaseMetric::Constant(m) => m.nrows(),
            BaseMetric::Polar | BaseMetric::Sphere => 2,
            BaseMetric::Custom(c) => c.dim(),
        }
    }

    pub fn components(&self, x: &[Jet]) -> Vec<Jet> {
        let zero = || x[0].lift(0.0);
        match self {
            BaseMetric::Constant(m) => {
                let n = m.nrows();
                (0..n * n).map(|k| x[0].lift(m[(k / n, k % n)])).collect()
            }
            BaseMetric::Polar => vec![x[0].lift(1.0), zero(), zero(), x[0].square()],
            BaseMetric::Sphere => vec![x[0].lift(1.0), zero(), zero(), x[0].sin().square()],
            BaseMetric::Custom(c) => c.components(x),
        }
    }

    /// Plain matrix `g_ij(x)`.
    pub fn matrix_at(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(v, 2 * n, 0)).collect();
        let comps = self.components(&xs);
        DMatrix::from_fn(n, n, |i, j| comps[i * n + j].value())
    }

    fn quadratic_form(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let n = y.len();
        let comps = self.components(x);
        let mut acc = y[0].lift(0.0);
        for i in 0..n {
            for j in 0..n {
                acc = acc + &comps[i * n + j] * &(&y[i] * &y[j]);
            }
        }
        acc
    }

    fn name(&self) -> &'static str {
        match self {
            BaseMetric::Constant(_) => "constant",
            BaseMetric::Polar => "polar",
            BaseMetric::Sphere => "sphere",
            BaseMetric::Custom(_) => "custom",
        }
    }
}

/// Randers data `F = sqrt(a_ij y^i y^j) + b_i(x) y^i` with
/// `b_i(x) = b_i + B_ij x^j`.
#[derive(Debug, Clone)]
pub struct Randers {
    pub alpha: DMatrix<f64>,
    pub b: DVector<f64>,
    pub b_gradient: Option<DMatrix<f64>>,
}

impl Randers {
    /// `‖b‖_α = sqrt(b_i a^ij b_j)` for the constant part of `b`.
    pub fn b_norm(&self) -> Result<f64> {
        let inv = self
            .alpha
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Regularity("Randers α matrix is singular".into()))?;
        Ok((self.b.transpose() * inv * &self.b)[(0, 0)].sqrt())
    }

    fn norm(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let n = y.len();
        let mut q = y[0].lift(0.0);
        for i in 0..n {
            for j in 0..n {
                q = q + &(&y[i] * &y[j]) * self.alpha[(i, j)];
            }
        }
        let mut beta = y[0].lift(0.0);
        for i in 0..n {
            let mut bi = x[0].lift(self.b[i]);
            if let Some(grad) = &self.b_gradient {
                for j in 0..n {
                    bi = bi + &x[j] * grad[(i, j)];
                }
            }
            beta = beta + &bi * &y[i];
        }
        q.sqrt() + beta
    }
}

#[derive(Clone)]
pub enum MetricKind {
    Euclidean,
    Riemannian(BaseMetric),
    Randers(Randers),
    /// `F = (Σ (y^i)⁴)^{1/4}`.
    Quartic,
    Custom(Arc<dyn ScalarField>),
}

impl fmt::Debug for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::Euclidean => f.write_str("Euclidean"),
            MetricKind::Riemannian(b) => f.debug_tuple("Riemannian").field(b).finish(),
            MetricKind::Randers(r) => f.debug_tuple("Randers").field(r).finish(),
            MetricKind::Quartic => f.write_str("Quartic"),
            MetricKind::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A fundamental function `F(x, y)` of a Finsler structure.
#[derive(Debug, Clone)]
pub struct FundamentalFunction {
    n: usize,
    kind: MetricKind,
}

impl FundamentalFunction {
    pub fn euclidean(n: usize) -> Self {
        FundamentalFunction {
            n,
            kind: MetricKind::Euclidean,
        }
    }

    pub fn riemannian(base: BaseMetric) -> Result<Self> {
        if let BaseMetric::Constant(m) = &base {
            if !m.is_square() || linalg::asymmetry(m) != 0.0 || !linalg::is_positive_definite(m) {
                return Err(Error::Parameter(
                    "constant Riemannian metric must be symmetric positive definite".into(),
                ));
            }
        }
        Ok(FundamentalFunction {
            n: base.dim(),
            kind: MetricKind::Riemannian(base),
        })
    }

    /// Flat plane in polar coordinates, `x = (r, θ)`.
    pub fn polar() -> Self {
        FundamentalFunction {
            n: 2,
            kind: MetricKind::Riemannian(BaseMetric::Polar),
        }
    }

    pub fn sphere() -> Self {
        FundamentalFunction {
            n: 2,
            kind: MetricKind::Riemannian(BaseMetric::Sphere),
        }
    }

    /// Randers metric with Euclidean `α` and constant `b`; requires `‖b‖ < 1`.
    pub fn randers(b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        Self::randers_general(DMatrix::identity(n, n), b, None)
    }

    /// Randers metric with constant `α`, and `b_i(x) = b_i + B_ij x^j`.
    ///
    /// The bound `‖b‖_α < 1` is checked for the constant part of `b`; with a
    /// gradient the bound can fail away from `x = 0`, which `validate_finsler`
    /// reports.
    pub fn randers_general(
        alpha: DMatrix<f64>,
        b: Vec<f64>,
        b_gradient: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let f = Self::randers_unchecked(alpha, b, b_gradient)?;
        if let MetricKind::Randers(r) = &f.kind {
            if !linalg::is_positive_definite(&r.alpha) {
                return Err(Error::Parameter("Randers α must be positive definite".into()));
            }
            let norm = r.b_norm()?;
            if !(norm < 1.0) {
                return Err(Error::Parameter(format!(
                    "Randers metric requires ‖b‖_α < 1, got {norm}"
                )));
            }
        }
        Ok(f)
    }

    /// Randers metric without the `‖b‖_α < 1` check; used to exhibit invalid structures.
    pub fn randers_unchecked(
        alpha: DMatrix<f64>,
        b: Vec<f64>,
        b_gradient: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let n = b.len();
        if alpha.nrows() != n || alpha.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: alpha.nrows(),
            });
        }
        if let Some(g) = &b_gradient {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: g.nrows(),
                });
            }
        }
        Ok(FundamentalFunction {
            n,
            kind: MetricKind::Randers(Randers {
                alpha,
                b: DVector::from_vec(b),
                b_gradient,
            }),
        })
    }

    pub fn quartic(n: usize) -> Self {
        FundamentalFunction {
            n,
            kind: MetricKind::Quartic,
        }
    }

    /// An arbitrary user-supplied `F`; `F²` is formed as `F·F`.
    pub fn custom(field: Arc<dyn ScalarField>) -> Self {
        FundamentalFunction {
            n: field.dim(),
            kind: MetricKind::Custom(field),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            MetricKind::Euclidean => "euclidean".into(),
            MetricKind::Riemannian(b) => format!("riemannian/{}", b.name()),
            MetricKind::Randers(_) => "randers".into(),
            MetricKind::Quartic => "quartic".into(),
            MetricKind::Custom(_) => "custom".into(),
        }
    }

    /// True when `F` is known not to depend on `x` (a Minkowski norm).
    pub fn is_minkowski(&self) -> bool {
        match &self.kind {
            MetricKind::Euclidean | MetricKind::Quartic => true,
            MetricKind::Riemannian(BaseMetric::Constant(_)) => true,
            MetricKind::Randers(r) => r.b_gradient.is_none(),
            _ => false,
        }
    }

    pub fn norm_jet(&self, x: &[Jet], y: &[Jet]) -> Jet {
        match &self.kind {
            MetricKind::Euclidean | MetricKind::Riemannian(_) | MetricKind::Quartic => {
                self.squared_jet(x, y).sqrt()
            }
            MetricKind::Randers(r) => r.norm(x, y),
            MetricKind::Custom(f) => f.eval(x, y),
        }
    }

    pub fn squared_jet(&self, x: &[Jet], y: &[Jet]) -> Jet {
        match &self.kind {
            MetricKind::Euclidean => y.iter().fold(y[0].lift(0.0), |acc, v| acc + v.square()),
            MetricKind::Riemannian(base) => base.quadratic_form(x, y),
            MetricKind::Quartic => y
                .iter()
                .fold(y[0].lift(0.0), |acc, v| acc + v.powi(4))
                .sqrt(),
            MetricKind::Randers(_) | MetricKind::Custom(_) => self.norm_jet(x, y).square(),
        }
    }

    /// `F` as a [`ScalarField`].
    pub fn norm_field(&self) -> NormField<'_> {
        NormField(self)
    }

    /// `F²` as a [`ScalarField`].
    pub fn squared_field(&self) -> SquaredNormField<'_> {
        SquaredNormField(self)
    }

    /// `‖y‖ = F(x, y)`.
    pub fn norm(&self, p: &PhasePoint) -> Result<f64> {
        self.check_point(p)?;
        value_at(&self.norm_field(), p.x(), p.y())
    }

    pub(crate) fn check_point(&self, p: &PhasePoint) -> Result<()> {
        if p.dim() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: p.dim(),
            });
        }
        Ok(())
    }
}

pub struct NormField<'a>(&'a FundamentalFunction);

impl ScalarField for NormField<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }
    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet {
        self.0.norm_jet(x, y)
    }
}

pub struct SquaredNormField<'a>(&'a FundamentalFunction);

impl ScalarField for SquaredNormField<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }
    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet {
        self.0.squared_jet(x, y)
    }
}

/// The fundamental tensor `g_ij(x, y)` at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricTensor {
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub g: DMatrix<f64>,
    pub point: PhasePoint,
}

impl MetricTensor {
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        inverse_metric(self)
    }

    pub fn determinant(&self) -> f64 {
        self.g.determinant()
    }
}

/// Fiber block of the Hessian of `F²` from an order ≥ 2 jet.
pub(crate) fn fiber_hessian(jet: &Jet, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| jet.hessian(n + i, n + j))
}

/// `g_ij = ½ ∂²F²/∂y^i∂y^j`.
pub fn metric_tensor(f: &FundamentalFunction, p: &PhasePoint) -> Result<MetricTensor> {
    f.check_point(p)?;
    let jet = evaluate_jet(&f.squared_field(), p, 2)?;
    let g = fiber_hessian(&jet, f.dim()) * 0.5;
    Ok(MetricTensor {
        g,
        point: p.clone(),
    })
}

/// `g^ij` through a Cholesky factor; fails for singular or indefinite `g`.
pub fn inverse_metric(g: &MetricTensor) -> Result<DMatrix<f64>> {
    let n = g.g.nrows();
    let l = linalg::cholesky(&g.g).map_err(|pivot| {
        Error::Regularity(format!(
            "metric tensor is not positive definite (Cholesky pivot {pivot}) at {}",
            g.point
        ))
    })?;
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Regularity("triangular solve failed".into()))?;
    Ok(linv.transpose() * linv)
}

/// Energy density `t = F²/2`.
pub fn energy_density(f: &FundamentalFunction, p: &PhasePoint) -> Result<f64> {
    f.check_point(p)?;
    Ok(0.5 * value_at(&f.squared_field(), p.x(), p.y())?)
}

/// `y_i = g_ij y^j`.
pub fn lower_index(f: &FundamentalFunction, p: &PhasePoint) -> Result<DVector<f64>> {
    let g = metric_tensor(f, p)?;
    Ok(&g.g * p.fiber())
}

/// `y_i = ½ ∂F²/∂y^i`, the second route to the lowered fiber coordinates.
pub fn lower_index_from_gradient(f: &FundamentalFunction, p: &PhasePoint) -> Result<DVector<f64>> {
    f.check_point(p)?;
    let n = f.dim();
    let jet = evaluate_jet(&f.squared_field(), p, 1)?;
    Ok(DVector::from_fn(n, |i, _| 0.5 * jet.gradient()[n + i]))
}

/// Outcome of one Finsler condition over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub pass: bool,
    /// Worst observed value: smallest `F`, largest homogeneity defect, smallest
    /// eigenvalue of `g`, or count of non-finite jets, depending on the condition.
    pub worst: f64,
    pub failing_sample: Option<usize>,
    /// Cholesky pivot that failed at the first failing sample (definiteness only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_pivot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub metric: String,
    pub samples: usize,
    pub smoothness: ConditionCheck,
    pub positivity: ConditionCheck,
    pub homogeneity: ConditionCheck,
    pub definiteness: ConditionCheck,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.smoothness.pass && self.positivity.pass && self.homogeneity.pass && self.definiteness.pass
    }
}

/// Relative tolerance for the multiplicative homogeneity spot check.
pub const HOMOGENEITY_TOLERANCE: f64 = 1e-9;

/// Scalings used for the homogeneity checks.
pub const HOMOGENEITY_SCALES: [f64; 3] = [0.5, 2.0, 10.0];

/// Checks smoothness, positivity, fiber 1-homogeneity and definiteness of `g`
/// at every sample. Failures are report entries, never errors.
pub fn validate_finsler(f: &FundamentalFunction, samples: &[PhasePoint]) -> ValidationReport {
    let mut smooth = ConditionCheck::passing(0.0);
    let mut positive = ConditionCheck::passing(f64::INFINITY);
    let mut homogeneous = ConditionCheck::passing(0.0);
    let mut definite = ConditionCheck::passing(f64::INFINITY);
    let norm = f.norm_field();

    for (idx, p) in samples.iter().enumerate() {
        if evaluate_jet(&f.squared_field(), p, 2).is_err() {
            smooth.worst += 1.0;
            smooth.fail_at(idx);
        }

        let value = value_at(&norm, p.x(), p.y()).unwrap_or(f64::NAN);
        if value.is_nan() || value < positive.worst {
            positive.worst = value;
        }
        if !(value > 0.0) {
            positive.fail_at(idx);
        }

        for &lambda in &HOMOGENEITY_SCALES {
            let scaled = p
                .scale_fiber(lambda)
                .and_then(|q| value_at(&norm, q.x(), q.y()))
                .unwrap_or(f64::NAN);
            let defect = (scaled - lambda * value).abs() / (lambda * value.abs()).max(f64::MIN_POSITIVE);
            if defect.is_nan() || defect > homogeneous.worst {
                homogeneous.worst = if defect.is_nan() { f64::INFINITY } else { defect };
            }
            if !(defect <= HOMOGENEITY_TOLERANCE) {
                homogeneous.fail_at(idx);
            }
        }

        let g = metric_tensor(f, p)
            .map(|m| m.g)
            .unwrap_or_else(|_| DMatrix::from_element(f.dim(), f.dim(), f64::NAN));
        let lowest = linalg::min_eigenvalue(&g);
        if lowest.is_nan() || lowest < definite.worst {
            definite.worst = lowest;
        }
        if let Err(pivot) = linalg::cholesky(&g) {
            if definite.failing_sample.is_none() {
                definite.failing_pivot = Some(pivot);
            }
            definite.fail_at(idx);
        }
    }

    ValidationReport {
        metric: f.name(),
        samples: samples.len(),
        smoothness: smooth,
        positivity: positive,
        homogeneity: homogeneous,
        definiteness: definite,
    }
}

impl ConditionCheck {
    fn passing(worst: f64) -> Self {
        ConditionCheck {
            pass: true,
            worst,
            failing_sample: None,
            failing_pivot: None,
        }
    }

    fn fail_at(&mut self, idx: usize) {
        self.pass = false;
        if self.failing_sample.is_none() {
            self.failing_sample = Some(idx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(x: &[f64], y: &[f64]) -> PhasePoint {
        PhasePoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn null_section_is_rejected() {
        assert!(matches!(
            PhasePoint::new(vec![0.0, 0.0], vec![0.0, 0.0]),
            Err(Error::NullSection)
        ));
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let f = FundamentalFunction::euclidean(3);
        let g = metric_tensor(&f, &pt(&[1.0, 2.0, 3.0], &[0.3, -0.2, 4.0])).unwrap();
        assert_eq!(g.g, DMatrix::identity(3, 3));
    }

    #[test]
    fn quartic_metric_at_diagonal_direction() {
        let f = FundamentalFunction::quartic(2);
        let g = metric_tensor(&f, &pt(&[0.0, 0.0], &[1.0, 1.0])).unwrap().g;
        let r2 = 2f64.sqrt();
        assert_relative_eq!(g[(0, 0)], r2, epsilon = 1e-14);
        assert_relative_eq!(g[(1, 1)], r2, epsilon = 1e-14);
        assert_relative_eq!(g[(0, 1)], -r2 / 2.0, epsilon = 1e-14);
        assert_eq!(g[(0, 1)], g[(1, 0)]);
    }

    #[test]
    fn randers_metric_component() {
        let f = FundamentalFunction::randers(vec![0.5, 0.0]).unwrap();
        let p = pt(&[0.0, 0.0], &[1.0, 0.0]);
        let g = metric_tensor(&f, &p).unwrap().g;
        assert_relative_eq!(g[(0, 0)], 2.25, epsilon = 1e-14);
        assert_relative_eq!(energy_density(&f, &p).unwrap(), 1.125, epsilon = 1e-14);
    }

    #[test]
    fn inverse_of_diagonal_metric() {
        let g = MetricTensor {
            g: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])),
            point: pt(&[0.0, 0.0], &[1.0, 0.0]),
        };
        let inv = inverse_metric(&g).unwrap();
        assert_eq!(inv, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.25])));
    }

    #[test]
    fn quartic_inverse_reproduces_identity() {
        let g = metric_tensor(&FundamentalFunction::quartic(2), &pt(&[0.0, 0.0], &[1.0, 1.0])).unwrap();
        let inv = inverse_metric(&g).unwrap();
        assert!(linalg::max_abs(&(&g.g * inv - DMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn indefinite_metric_is_a_regularity_error() {
        let g = MetricTensor {
            g: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            point: pt(&[0.0, 0.0], &[1.0, 0.0]),
        };
        assert!(matches!(inverse_metric(&g), Err(Error::Regularity(_))));
    }

    #[test]
    fn energy_density_and_lowering_for_euclidean() {
        let f = FundamentalFunction::euclidean(2);
        let p = pt(&[0.0, 0.0], &[3.0, 4.0]);
        assert_eq!(energy_density(&f, &p).unwrap(), 12.5);
        let p2 = p.scale_fiber(2.0).unwrap();
        assert_eq!(energy_density(&f, &p2).unwrap(), 50.0);
        let low = lower_index(&f, &p).unwrap();
        assert_eq!(low.as_slice(), &[3.0, 4.0]);
        assert_eq!(low.dot(&p.fiber()), 25.0);
    }

    #[test]
    fn randers_construction_enforces_bound() {
        assert!(FundamentalFunction::randers(vec![1.5, 0.0]).is_err());
        assert!(FundamentalFunction::randers(vec![0.6, 0.6]).is_ok());
    }

    #[test]
    fn validation_flags_pseudo_norm() {
        let f = FundamentalFunction::custom(Arc::new(crate::jet::field(2, |_, y| {
            (y[0].square() - y[1].square()).sqrt()
        })));
        let samples = [pt(&[0.0, 0.0], &[2.0, 1.0]), pt(&[0.0, 0.0], &[1.0, 2.0])];
        let report = validate_finsler(&f, &samples);
        assert!(!report.positivity.pass);
        assert!(!report.definiteness.pass);
        assert_eq!(report.definiteness.failing_sample, Some(0));
        assert_eq!(report.definiteness.failing_pivot, Some(1));
    }

    #[test]
    fn validation_flags_strong_randers_wind() {
        let f = FundamentalFunction::randers_unchecked(DMatrix::identity(2, 2), vec![1.5, 0.0], None).unwrap();
        // y = (-1, 0): F = 1 - 1.5 < 0 and det g < 0
        let report = validate_finsler(&f, &[pt(&[0.0, 0.0], &[-1.0, 0.0])]);
        assert!(!report.positivity.pass);
        assert!(!report.definiteness.pass);
        assert!(report.definiteness.worst < 0.0);
    }
}
