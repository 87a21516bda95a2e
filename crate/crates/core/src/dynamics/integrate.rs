//! Time integration of Euler-Lagrange and Hamilton flows.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::hamilton::{hamilton_rhs, HamiltonMode, HamiltonianSpec};
use super::lagrange::{el_rhs, flow_point, LagrangianSpec};
use crate::error::{Error, Result};
use crate::finsler::{FundamentalFunction, PhasePoint};
use crate::kahler::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4Fixed,
    #[default]
    Rk45Adaptive,
    ImplicitMidpoint,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rk4Fixed => "rk4-fixed",
            Method::Rk45Adaptive => "rk45-adaptive",
            Method::ImplicitMidpoint => "implicit-midpoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step, or the initial step of the adaptive method.
    pub step: f64,
    /// Relative and absolute tolerance of the adaptive method.
    pub tol: f64,
    /// Integration stops when the Euclidean norm of `y` falls to this value.
    pub null_tolerance: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk45Adaptive,
            step: 0.01,
            tol: 1e-10,
            null_tolerance: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn fixed(method: Method, step: f64) -> Self {
        IntegratorConfig {
            method,
            step,
            ..Default::default()
        }
    }

    pub fn adaptive(tol: f64) -> Self {
        IntegratorConfig {
            tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::Parameter(format!("step must be > 0, got {}", self.step)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Parameter(format!("tolerance must be > 0, got {}", self.tol)));
        }
        if !(self.null_tolerance >= 0.0) {
            return Err(Error::Parameter(format!(
                "null tolerance must be >= 0, got {}",
                self.null_tolerance
            )));
        }
        Ok(())
    }
}

/// Per-sample diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `‖y‖ = F(x, y)`.
    pub norm_y: f64,
    /// `E_L` for Lagrangian flows, `H` for Hamiltonian ones.
    pub energy: f64,
    /// Euclidean norm of the second Euler-Lagrange family residual; NaN for Hamiltonian flows.
    pub res_family2: f64,
}

/// An autonomous first-order system on the stacked state `(x, y)`.
pub trait Flow: Send + Sync {
    fn dim(&self) -> usize;
    fn system(&self) -> String;
    fn rhs(&self, p: &PhasePoint) -> Result<DVector<f64>>;
    fn diagnostics(&self, p: &PhasePoint) -> Result<Diagnostics>;
}

/// `ẋ = y`, `ẏ` from the first Euler-Lagrange family.
#[derive(Debug, Clone)]
pub struct LagrangeFlow {
    pub lagrangian: LagrangianSpec,
    pub metric: FundamentalFunction,
    pub params: ModelParams,
}

impl Flow for LagrangeFlow {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn system(&self) -> String {
        format!("euler-lagrange/{}", self.metric.name())
    }

    fn rhs(&self, p: &PhasePoint) -> Result<DVector<f64>> {
        let acc = el_rhs(&self.lagrangian, &self.metric, p, &self.params)?;
        Ok(stack(&p.fiber(), &acc))
    }

    fn diagnostics(&self, p: &PhasePoint) -> Result<Diagnostics> {
        let fp = flow_point(&self.lagrangian, &self.metric, p, &self.params)?;
        Ok(Diagnostics {
            norm_y: self.metric.norm(p)?,
            energy: fp.energy,
            res_family2: fp.family2.norm(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonFlow {
    pub hamiltonian: HamiltonianSpec,
    pub metric: FundamentalFunction,
    pub params: ModelParams,
    pub mode: HamiltonMode,
}

impl Flow for HamiltonFlow {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn system(&self) -> String {
        format!("hamilton/{}", self.metric.name())
    }

    fn rhs(&self, p: &PhasePoint) -> Result<DVector<f64>> {
        let (dx, dy) = hamilton_rhs(&self.hamiltonian, &self.metric, p, &self.params, self.mode)?;
        Ok(stack(&dx, &dy))
    }

    fn diagnostics(&self, p: &PhasePoint) -> Result<Diagnostics> {
        Ok(Diagnostics {
            norm_y: self.metric.norm(p)?,
            energy: self.hamiltonian.value(p)?,
            res_family2: f64::NAN,
        })
    }
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub point: PhasePoint,
    pub diagnostics: Diagnostics,
    /// Step that produced this sample; 0 for the initial sample.
    pub step_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub system: String,
    pub config: IntegratorConfig,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn header(n: usize) -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=n).map(|i| format!("x{i}")));
        cols.extend((1..=n).map(|i| format!("y{i}")));
        cols.extend(["norm_y", "energy", "res_family2", "step_size"].map(String::from));
        cols
    }

    /// Writes `t, x1..xn, y1..yn, norm_y, energy, res_family2, step_size`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.samples.first().map(|s| s.point.dim()).unwrap_or(0);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Trajectory::header(n)).map_err(csv_error)?;
        for s in &self.samples {
            let d = &s.diagnostics;
            let row = std::iter::once(s.t)
                .chain(s.point.x().iter().copied())
                .chain(s.point.y().iter().copied())
                .chain([d.norm_y, d.energy, d.res_family2, s.step_size])
                .map(|v| format!("{v:?}"));
            w.write_record(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// `max_t |q(p(t)) − q(p(t0))|`.
pub fn conserved_quantity_drift<Q>(tr: &Trajectory, q: Q) -> Result<f64>
where
    Q: Fn(&PhasePoint) -> Result<f64>,
{
    let first = tr
        .samples
        .first()
        .ok_or_else(|| Error::Parameter("empty trajectory".into()))?;
    let q0 = q(&first.point)?;
    tr.samples.iter().try_fold(0.0f64, |acc, s| Ok(acc.max((q(&s.point)? - q0).abs())))
}

struct Run<'a> {
    flow: &'a dyn Flow,
    cfg: &'a IntegratorConfig,
    traj: Trajectory,
    steps: usize,
}

impl Run<'_> {
    fn eval(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let p = PhasePoint::from_state(z.as_slice())?;
        self.flow.rhs(&p)
    }

    fn record(&mut self, t: f64, z: &DVector<f64>, h: f64) -> Result<()> {
        let n = self.flow.dim();
        let y = z.rows(n, n).into_owned();
        if let Some(prev) = self.traj.samples.last() {
            // closest approach of the straight segment between samples to y = 0
            let ya = prev.point.fiber();
            let d = &y - &ya;
            let dd = d.norm_squared();
            let s = if dd > 0.0 { (-ya.dot(&d) / dd).clamp(0.0, 1.0) } else { 1.0 };
            if (&ya + &d * s).norm() <= self.cfg.null_tolerance {
                return Err(Error::NullCrossing {
                    t: prev.t + s * (t - prev.t),
                    partial: Box::new(self.traj.clone()),
                });
            }
        } else if y.norm() <= self.cfg.null_tolerance {
            return Err(Error::NullCrossing {
                t,
                partial: Box::new(self.traj.clone()),
            });
        }
        let p = PhasePoint::from_state(z.as_slice())?;
        let diagnostics = self.flow.diagnostics(&p)?;
        self.traj.samples.push(Sample {
            t,
            point: p,
            diagnostics,
            step_size: h,
        });
        Ok(())
    }

    /// Attaches the partial trajectory to evaluation failures that hit `y = 0`.
    fn wrap(&self, t: f64, e: Error) -> Error {
        match e {
            Error::NullSection => Error::NullCrossing {
                t,
                partial: Box::new(self.traj.clone()),
            },
            other => other,
        }
    }

    fn count_step(&mut self, t: f64) -> Result<()> {
        self.steps += 1;
        if self.steps > self.cfg.max_steps {
            return Err(Error::Parameter(format!(
                "step budget of {} exhausted at t = {t}",
                self.cfg.max_steps
            )));
        }
        Ok(())
    }

    fn rk4_step(&self, z: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        let k1 = self.eval(z)?;
        let k2 = self.eval(&(z + &k1 * (h / 2.0)))?;
        let k3 = self.eval(&(z + &k2 * (h / 2.0)))?;
        let k4 = self.eval(&(z + &k3 * h))?;
        Ok(z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
    }

    fn midpoint_step(&self, z: &DVector<f64>, h: f64, t: f64) -> Result<DVector<f64>> {
        let mut next = z + self.eval(z)? * h;
        for _ in 0..MIDPOINT_ITERATIONS {
            let mid = (z + &next) * 0.5;
            let candidate = z + self.eval(&mid)? * h;
            let diff = (&candidate - &next).amax();
            next = candidate;
            if diff <= MIDPOINT_TOLERANCE * (1.0 + next.amax()) {
                return Ok(next);
            }
        }
        Err(Error::SolverDivergence {
            t,
            partial: Box::new(self.traj.clone()),
        })
    }

    fn fixed(&mut self, mut z: DVector<f64>, t0: f64, t1: f64) -> Result<()> {
        let span = t1 - t0;
        let ratio = span / self.cfg.step;
        let steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
            ratio.round()
        } else {
            ratio.ceil()
        }
        .max(1.0) as usize;
        let h = span / steps as f64;
        for k in 0..steps {
            let t = t0 + k as f64 * h;
            self.count_step(t)?;
            let next = match self.cfg.method {
                Method::ImplicitMidpoint => self.midpoint_step(&z, h, t),
                _ => self.rk4_step(&z, h),
            };
            z = next.map_err(|e| self.wrap(t, e))?;
            let t_next = if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * h };
            self.record(t_next, &z, h)?;
        }
        Ok(())
    }

    fn dopri_trial(&self, z: &DVector<f64>, k1: &DVector<f64>, h: f64) -> Result<(DVector<f64>, DVector<f64>, f64)> {
        let mut k = vec![k1.clone()];
        for row in DP_A.iter() {
            let mut stage = z.clone();
            for (a, kj) in row.iter().zip(&k) {
                if *a != 0.0 {
                    stage += kj * (h * a);
                }
            }
            k.push(self.eval(&stage)?);
        }
        // the last row of DP_A is the fifth-order solution
        let mut next = z.clone();
        for (b, kj) in DP_B.iter().zip(&k) {
            next += kj * (h * b);
        }
        let mut err = 0.0f64;
        for i in 0..z.len() {
            let e: f64 = DP_E.iter().zip(&k).map(|(c, kj)| c * kj[i]).sum::<f64>() * h;
            let scale = self.cfg.tol + self.cfg.tol * z[i].abs().max(next[i].abs());
            err = err.max((e / scale).abs());
        }
        let k7 = k.pop().expect("seven stages");
        Ok((next, k7, err))
    }

    fn adaptive(&mut self, mut z: DVector<f64>, t0: f64, t1: f64) -> Result<()> {
        let mut t = t0;
        let mut h = self.cfg.step.min(t1 - t0);
        let mut k1 = self.eval(&z).map_err(|e| self.wrap(t, e))?;
        while t < t1 {
            let last = t + h >= t1;
            let h_try = if last { t1 - t } else { h };
            if h_try < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow {
                    t,
                    step: h_try,
                    partial: Box::new(self.traj.clone()),
                });
            }
            self.count_step(t)?;
            let (next, k7, err) = match self.dopri_trial(&z, &k1, h_try) {
                Ok(v) => v,
                // a trial stage landed on y = 0; shrink and retry
                Err(Error::NullSection) => {
                    h = h_try * 0.25;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if !err.is_finite() {
                h = h_try * 0.2;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if last { t1 } else { t + h_try };
                z = next;
                k1 = k7;
                self.record(t, &z, h_try)?;
                h = h_try * factor;
            } else {
                h = h_try * factor.min(1.0);
            }
        }
        Ok(())
    }
}

const MIDPOINT_ITERATIONS: usize = 100;
const MIDPOINT_TOLERANCE: f64 = 1e-14;

// Dormand-Prince 5(4) tableau
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
// fifth-order minus embedded fourth-order weights
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrates `flow` from `p0` over `[t0, t1]`, recording every accepted step.
pub fn integrate(flow: &dyn Flow, p0: &PhasePoint, t0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Parameter(format!("need t0 < t1, got [{t0}, {t1}]")));
    }
    if p0.dim() != flow.dim() {
        return Err(Error::Dimension {
            expected: flow.dim(),
            got: p0.dim(),
        });
    }
    let mut run = Run {
        flow,
        cfg,
        traj: Trajectory {
            system: flow.system(),
            config: cfg.clone(),
            samples: Vec::new(),
        },
        steps: 0,
    };
    let z = DVector::from_vec(p0.state());
    run.record(t0, &z, 0.0)?;
    match cfg.method {
        Method::Rk4Fixed | Method::ImplicitMidpoint => run.fixed(z, t0, t1)?,
        Method::Rk45Adaptive => run.adaptive(z, t0, t1)?,
    }
    Ok(run.traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::lagrange::lagrangian_standard;
    use crate::jet::field;
    use std::sync::Arc;

    fn free_flow() -> LagrangeFlow {
        LagrangeFlow {
            lagrangian: lagrangian_standard(vec![1.0, 1.0], 0.0, Arc::new(field(2, |x, _| x[0].lift(0.0)))).unwrap(),
            metric: FundamentalFunction::euclidean(2),
            params: ModelParams::default(),
        }
    }

    fn harmonic_flow() -> HamiltonFlow {
        HamiltonFlow {
            hamiltonian: HamiltonianSpec::new(Arc::new(field(1, |x, y| (x[0].square() + y[0].square()) * 0.5))),
            metric: FundamentalFunction::euclidean(1),
            params: ModelParams::default(),
            mode: HamiltonMode::Plain,
        }
    }

    #[test]
    fn free_particle_moves_in_a_straight_line() {
        let p0 = PhasePoint::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        for method in [Method::Rk4Fixed, Method::ImplicitMidpoint] {
            let tr = integrate(&free_flow(), &p0, 0.0, 1.0, &IntegratorConfig::fixed(method, 0.01)).unwrap();
            let end = tr.last().unwrap();
            assert_eq!(end.t, 1.0);
            assert!((end.point.x()[0] - 1.0).abs() < 1e-12);
            assert_eq!(end.point.x()[1], 0.0);
            assert_eq!(tr.len(), 101);
        }
        let tr = integrate(&free_flow(), &p0, 0.0, 1.0, &IntegratorConfig::default()).unwrap();
        assert!((tr.last().unwrap().point.x()[0] - 1.0).abs() < 1e-12);
        let drift = conserved_quantity_drift(&tr, |p| Ok(p.y()[0].hypot(p.y()[1]))).unwrap();
        assert!(drift < 1e-12);
    }

    #[test]
    fn harmonic_hamiltonian_is_conserved() {
        let p0 = PhasePoint::new(vec![0.0], vec![1.0]).unwrap();
        let flow = harmonic_flow();
        let tr = integrate(&flow, &p0, 0.0, 10.0, &IntegratorConfig::adaptive(1e-10)).unwrap();
        let drift = conserved_quantity_drift(&tr, |p| flow.hamiltonian.value(p)).unwrap();
        assert!(drift < 1e-8, "{drift}");
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(tr.last().unwrap().t, 10.0);
    }

    #[test]
    fn null_crossing_aborts_with_partial_trajectory() {
        // ẏ = −1 drives y through zero at t = 1
        let flow = HamiltonFlow {
            hamiltonian: HamiltonianSpec::new(Arc::new(field(1, |x, _| x[0].clone()))),
            metric: FundamentalFunction::custom(Arc::new(field(1, |x, _| x[0].lift(1.0)))),
            params: ModelParams::default(),
            mode: HamiltonMode::Plain,
        };
        let p0 = PhasePoint::new(vec![0.0], vec![1.0]).unwrap();
        let err = integrate(&flow, &p0, 0.0, 2.1, &IntegratorConfig::fixed(Method::Rk4Fixed, 0.3)).unwrap_err();
        match &err {
            Error::NullCrossing { t, partial } => {
                assert!((t - 1.0).abs() < 1e-12, "{t}");
                assert_eq!(partial.len(), 4);
            }
            other => panic!("unexpected {other}"),
        }
        assert!(err.partial_trajectory().is_some());
    }

    #[test]
    fn csv_header_and_rows() {
        let p0 = PhasePoint::new(vec![0.0], vec![1.0]).unwrap();
        let tr = integrate(&harmonic_flow(), &p0, 0.0, 0.1, &IntegratorConfig::fixed(Method::Rk4Fixed, 0.05)).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,y1,norm_y,energy,res_family2,step_size");
        assert_eq!(lines.next().unwrap(), "0.0,0.0,1.0,1.0,0.5,NaN,0.0");
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn invalid_span_is_rejected() {
        let p0 = PhasePoint::new(vec![0.0], vec![1.0]).unwrap();
        assert!(integrate(&harmonic_flow(), &p0, 1.0, 1.0, &IntegratorConfig::default()).is_err());
    }
}
