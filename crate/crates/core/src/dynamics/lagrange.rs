//! Lagrangian mechanics on the homogeneous almost Kähler model.
//!
//! Notation used throughout: `α = ‖y‖/a`, `β = a/‖y‖`, `L_y = ∂L/∂y`,
//! `δL = δL/δx` (horizontal derivative with the Cartan connection),
//! `K = ∂²L/∂y∂y`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::connection::{connection_jets, horizontal_jets};
use crate::error::{Error, Result};
use crate::finsler::{FundamentalFunction, PhasePoint};
use crate::jet::{evaluate_jet, field, ScalarField};
use crate::kahler::{AdaptedCovector, AdaptedTensor, ModelParams, Variance};

/// Masses, gravity and height function of a standard mechanical Lagrangian.
#[derive(Clone)]
pub struct StandardForm {
    pub masses: Vec<f64>,
    pub gravity: f64,
    pub height: Arc<dyn ScalarField>,
}

/// A Lagrangian `L(x, y)` on the slit tangent bundle.
#[derive(Clone)]
pub struct LagrangianSpec {
    field: Arc<dyn ScalarField>,
    standard: Option<StandardForm>,
}

impl fmt::Debug for LagrangianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("LagrangianSpec");
        d.field("dim", &self.field.dim());
        if let Some(s) = &self.standard {
            d.field("masses", &s.masses).field("gravity", &s.gravity);
        }
        d.finish()
    }
}

impl LagrangianSpec {
    pub fn new(field: Arc<dyn ScalarField>) -> Self {
        LagrangianSpec {
            field,
            standard: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn field(&self) -> &dyn ScalarField {
        self.field.as_ref()
    }

    pub fn standard(&self) -> Option<&StandardForm> {
        self.standard.as_ref()
    }

    pub fn value(&self, p: &PhasePoint) -> Result<f64> {
        crate::jet::value_at(self.field(), p.x(), p.y())
    }

    /// `c · L` as a plain field.
    pub fn scaled(&self, c: f64) -> LagrangianSpec {
        let inner = self.field.clone();
        LagrangianSpec {
            field: Arc::new(field(inner.dim(), move |x, y| inner.eval(x, y) * c)),
            standard: None,
        }
    }
}

/// `L = ½ Σ m_i (y^i)² − m̄ g h(x)` with `m̄` the mean of the masses.
///
/// The height field is evaluated on the same phase coordinates and should
/// depend on `x` only.
pub fn lagrangian_standard(masses: Vec<f64>, gravity: f64, height: Arc<dyn ScalarField>) -> Result<LagrangianSpec> {
    let n = masses.len();
    if n == 0 {
        return Err(Error::Parameter("at least one mass is required".into()));
    }
    if let Some(m) = masses.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
        return Err(Error::Parameter(format!("masses must be positive, got {m}")));
    }
    if !gravity.is_finite() {
        return Err(Error::Parameter(format!("gravity must be finite, got {gravity}")));
    }
    if height.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: height.dim(),
        });
    }
    let mean = masses.iter().sum::<f64>() / n as f64;
    let m = masses.clone();
    let h = height.clone();
    let l = field(n, move |x, y| {
        let mut kinetic = y[0].lift(0.0);
        for (mi, yi) in m.iter().zip(y) {
            kinetic = kinetic + yi.square() * (0.5 * mi);
        }
        if gravity == 0.0 {
            kinetic
        } else {
            kinetic - h.eval(x, y) * (mean * gravity)
        }
    });
    Ok(LagrangianSpec {
        field: Arc::new(l),
        standard: Some(StandardForm {
            masses,
            gravity,
            height,
        }),
    })
}

/// The semispray `ξ = X^i δ_i + Y^i ∂_{y^i}` at a point, with `X = y`.
///
/// `vertical` holds the adapted component `Y`. For a curve with fiber
/// acceleration `ẏ` it is `Y = ẏ + N y`; use [`SemisprayState::from_acceleration`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemisprayState {
    pub point: PhasePoint,
    pub vertical: Vec<f64>,
}

impl SemisprayState {
    pub fn new(point: PhasePoint, vertical: Vec<f64>) -> Result<Self> {
        if vertical.len() != point.dim() {
            return Err(Error::Dimension {
                expected: point.dim(),
                got: vertical.len(),
            });
        }
        Ok(SemisprayState { point, vertical })
    }

    pub fn from_acceleration(f: &FundamentalFunction, point: PhasePoint, acceleration: &[f64]) -> Result<Self> {
        let n = crate::connection::nonlinear_connection(f, &point)?.coefficients;
        let y = point.fiber();
        let vertical = DVector::from_column_slice(acceleration) + n * y;
        SemisprayState::new(point, vertical.as_slice().to_vec())
    }

    /// Horizontal components `X^i = y^i`.
    pub fn horizontal(&self) -> &[f64] {
        self.point.y()
    }

    /// Adapted components `(X; Y)`.
    pub fn components(&self) -> DVector<f64> {
        DVector::from_iterator(
            2 * self.point.dim(),
            self.horizontal().iter().chain(&self.vertical).copied(),
        )
    }
}

/// Pointwise derivative data of `L` needed by the Lagrangian formulas.
struct Local {
    alpha: f64,
    beta: f64,
    value: f64,
    ly: DVector<f64>,
    /// `δL/δx`
    dl: DVector<f64>,
    k: DMatrix<f64>,
    /// `(i, j) = ∂²L/∂y^i∂x^j`
    lyx: DMatrix<f64>,
    connection: DMatrix<f64>,
    second: Option<SecondOrder>,
}

/// Derivatives of `δL` (require the connection to first order).
struct SecondOrder {
    /// `(j, i) = ∂(δ_i L)/∂x^j`
    dl_x: DMatrix<f64>,
    /// `(j, i) = ∂(δ_i L)/∂y^j`
    dl_y: DMatrix<f64>,
}

fn check_dims(lag: &LagrangianSpec, f: &FundamentalFunction, p: &PhasePoint) -> Result<()> {
    f.check_point(p)?;
    if lag.dim() != f.dim() {
        return Err(Error::Dimension {
            expected: f.dim(),
            got: lag.dim(),
        });
    }
    Ok(())
}

fn local(lag: &LagrangianSpec, f: &FundamentalFunction, p: &PhasePoint, m: &ModelParams, second: bool) -> Result<Local> {
    check_dims(lag, f, p)?;
    ModelParams::new(m.a)?;
    let n = f.dim();
    let norm = f.norm(p)?;
    if !(norm > 0.0) {
        return Err(Error::Regularity(format!("‖y‖ = {norm} is not positive at {p}")));
    }
    let l = evaluate_jet(lag.field(), p, 2)?;
    let conn = connection_jets(f, p, usize::from(second))?;
    let dl_jets = horizontal_jets(&l, &conn);
    let connection = DMatrix::from_fn(n, n, |i, j| conn[i][j].value());

    let second = second.then(|| SecondOrder {
        dl_x: DMatrix::from_fn(n, n, |j, i| dl_jets[i].gradient()[j]),
        dl_y: DMatrix::from_fn(n, n, |j, i| dl_jets[i].gradient()[n + j]),
    });

    Ok(Local {
        alpha: norm / m.a,
        beta: m.a / norm,
        value: l.value(),
        ly: DVector::from_fn(n, |i, _| l.gradient()[n + i]),
        dl: DVector::from_fn(n, |i, _| dl_jets[i].value()),
        k: DMatrix::from_fn(n, n, |i, j| l.hessian(n + i, n + j)),
        lyx: DMatrix::from_fn(n, n, |i, j| l.hessian(n + i, j)),
        connection,
        second,
    })
}

impl Local {
    fn second(&self) -> &SecondOrder {
        self.second.as_ref().expect("second-order data requested")
    }

    /// `(j, i) = δ_j(∂L/∂y^i)`
    fn c(&self) -> DMatrix<f64> {
        self.lyx.transpose() - self.connection.transpose() * &self.k
    }

    /// `(j, i) = δ_j(δ_i L)`
    fn d(&self) -> DMatrix<f64> {
        let s = self.second();
        &s.dl_x - self.connection.transpose() * &s.dl_y
    }

    /// `(j, i) = ∂_{y^j}(δ_i L)`
    fn e(&self) -> &DMatrix<f64> {
        &self.second().dl_y
    }
}

/// `d_F̊ L = −α ∂L/∂y^i dx^i + β δL/δx^i δy^i`.
pub fn vertical_differential(
    lag: &LagrangianSpec,
    f: &FundamentalFunction,
    p: &PhasePoint,
    m: &ModelParams,
) -> Result<AdaptedCovector> {
    let loc = local(lag, f, p, m, false)?;
    Ok(AdaptedCovector {
        dx: (&loc.ly * -loc.alpha).as_slice().to_vec(),
        dy: (&loc.dl * loc.beta).as_slice().to_vec(),
    })
}

/// `Φ_L = −d d_F̊ L`, assembled from its coefficient expansion:
///
/// ```text
/// Φ_L = α δ_j(L_{y^i}) dx^j∧dx^i − β δ_j(δ_i L) dx^j∧δy^i
///     + α L_{y^j y^i} δy^j∧dx^i − β ∂_{y^j}(δ_i L) δy^j∧δy^i
/// ```
///
/// `α` and `β` are treated as constants, as in the expansion.
pub fn kahler_form_lagrangian(
    lag: &LagrangianSpec,
    f: &FundamentalFunction,
    p: &PhasePoint,
    m: &ModelParams,
) -> Result<AdaptedTensor> {
    let loc = local(lag, f, p, m, true)?;
    Ok(kahler_blocks(&loc))
}

fn kahler_blocks(loc: &Local) -> AdaptedTensor {
    let (a, b) = (loc.alpha, loc.beta);
    let c = loc.c();
    let d = loc.d();
    let e = loc.e();
    let hh = (&c - c.transpose()) * a;
    let hv = &d * -b - &loc.k * a;
    let vh = &loc.k * a + d.transpose() * b;
    let vv = (e - e.transpose()) * -b;
    AdaptedTensor::from_blocks(hh, hv, vh, vv, Variance::TwoForm)
}

/// `V = F̊(ξ) = β Y^i δ_i − α X^i ∂_{y^i}` in adapted components.
pub fn liouville_vector_field(xi: &SemisprayState, f: &FundamentalFunction, m: &ModelParams) -> Result<DVector<f64>> {
    let j = crate::kahler::homogeneous_almost_complex(f, &xi.point, m)?;
    Ok(j.apply(&xi.components()))
}

/// `E_L = V(L) − L = −α X·L_y + β Y·δL − L`.
pub fn energy_function(
    lag: &LagrangianSpec,
    xi: &SemisprayState,
    f: &FundamentalFunction,
    m: &ModelParams,
) -> Result<f64> {
    let loc = local(lag, f, &xi.point, m, false)?;
    Ok(energy(&loc, xi))
}

fn energy(loc: &Local, xi: &SemisprayState) -> f64 {
    let x = xi.point.fiber();
    let y = DVector::from_column_slice(&xi.vertical);
    -loc.alpha * x.dot(&loc.ly) + loc.beta * y.dot(&loc.dl) - loc.value
}

/// `dE_L` with `α`, `β`, `X`, `Y` held fixed:
///
/// ```text
/// dx^j : −α X^i δ_j(L_{y^i}) + β Y^i δ_j(δ_i L) − δ_j L
/// δy^j : −α X^i L_{y^j y^i} + β Y^i ∂_{y^j}(δ_i L) − L_{y^j}
/// ```
pub fn energy_differential(
    lag: &LagrangianSpec,
    xi: &SemisprayState,
    f: &FundamentalFunction,
    m: &ModelParams,
) -> Result<AdaptedCovector> {
    let loc = local(lag, f, &xi.point, m, true)?;
    Ok(energy_differential_of(&loc, xi))
}

fn energy_differential_of(loc: &Local, xi: &SemisprayState) -> AdaptedCovector {
    let x = xi.point.fiber();
    let y = DVector::from_column_slice(&xi.vertical);
    let dx = loc.c() * &x * -loc.alpha + loc.d() * &y * loc.beta - &loc.dl;
    let dy = &loc.k * &x * -loc.alpha + loc.e() * &y * loc.beta - &loc.ly;
    AdaptedCovector {
        dx: dx.as_slice().to_vec(),
        dy: dy.as_slice().to_vec(),
    }
}

/// Relative singular-value threshold below which `∂²L/∂y∂y` counts as singular.
pub const DEGENERACY_THRESHOLD: f64 = 1e-13;

/// Fiber acceleration `ẏ` solving the first Euler-Lagrange family
/// `α d/dt(∂L/∂y^i) + δL/δx^i = 0` along `ẋ = y`.
pub fn el_rhs(lag: &LagrangianSpec, f: &FundamentalFunction, p: &PhasePoint, m: &ModelParams) -> Result<DVector<f64>> {
    let loc = local(lag, f, p, m, false)?;
    solve_acceleration(&loc, p)
}

fn solve_acceleration(loc: &Local, p: &PhasePoint) -> Result<DVector<f64>> {
    let sv = loc.k.singular_values();
    let (lo, hi) = sv
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if !(hi > 0.0) || !(lo / hi >= DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateLagrangian {
            point: p.to_string(),
        });
    }
    let rhs = &loc.dl * -loc.beta - &loc.lyx * p.fiber();
    loc.k
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DegenerateLagrangian {
            point: p.to_string(),
        })
}

/// Residuals of both Euler-Lagrange families at `p` with fiber acceleration `ẏ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElResidual {
    /// `α d/dt(∂L/∂y) + δL/δx`
    pub family1: Vec<f64>,
    /// `β d/dt(δL/δx) − ∂L/∂y`
    pub family2: Vec<f64>,
}

pub fn el_residual(
    lag: &LagrangianSpec,
    f: &FundamentalFunction,
    p: &PhasePoint,
    acceleration: &[f64],
    m: &ModelParams,
) -> Result<ElResidual> {
    let loc = local(lag, f, p, m, true)?;
    residual_of(&loc, p, acceleration)
}

fn residual_of(loc: &Local, p: &PhasePoint, acceleration: &[f64]) -> Result<ElResidual> {
    if acceleration.len() != p.dim() {
        return Err(Error::Dimension {
            expected: p.dim(),
            got: acceleration.len(),
        });
    }
    let y = p.fiber();
    let acc = DVector::from_column_slice(acceleration);
    let f1 = (&loc.lyx * &y + &loc.k * &acc) * loc.alpha + &loc.dl;
    let s = loc.second();
    let f2 = (s.dl_x.transpose() * &y + s.dl_y.transpose() * &acc) * loc.beta - &loc.ly;
    Ok(ElResidual {
        family1: f1.as_slice().to_vec(),
        family2: f2.as_slice().to_vec(),
    })
}

/// `i_ξ Φ_L − dE_L` split into its `dx` and `δy` parts, together with the
/// Euler-Lagrange residuals at the same state.
///
/// Algebraically the `dx` part equals the first-family residual and the `δy`
/// part equals minus the second-family residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub el: ElResidual,
}

pub fn kahler_identity_residual(
    lag: &LagrangianSpec,
    f: &FundamentalFunction,
    p: &PhasePoint,
    acceleration: &[f64],
    m: &ModelParams,
) -> Result<IdentityResidual> {
    let loc = local(lag, f, p, m, true)?;
    let y = p.fiber();
    let vertical = DVector::from_column_slice(acceleration) + &loc.connection * &y;
    let xi = SemisprayState::new(p.clone(), vertical.as_slice().to_vec())?;
    let contraction = kahler_blocks(&loc).contract(&xi.components());
    let de = energy_differential_of(&loc, &xi);
    let diff = contraction.full() - de.full();
    let split = AdaptedCovector::from_full(&diff);
    Ok(IdentityResidual {
        dx: split.dx,
        dy: split.dy,
        el: residual_of(&loc, p, acceleration)?,
    })
}

/// Everything the Lagrangian flow records per sample.
pub(crate) struct FlowPoint {
    pub energy: f64,
    pub family2: DVector<f64>,
}

pub(crate) fn flow_point(lag: &LagrangianSpec, f: &FundamentalFunction, p: &PhasePoint, m: &ModelParams) -> Result<FlowPoint> {
    let loc = local(lag, f, p, m, true)?;
    let acceleration = solve_acceleration(&loc, p)?;
    let vertical = &acceleration + &loc.connection * p.fiber();
    let xi = SemisprayState::new(p.clone(), vertical.as_slice().to_vec())?;
    let res = residual_of(&loc, p, acceleration.as_slice())?;
    Ok(FlowPoint {
        energy: energy(&loc, &xi),
        family2: DVector::from_vec(res.family2),
    })
}
