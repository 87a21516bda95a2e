//! Hamilton equations on the homogeneous model:
//! `ẋ = (‖y‖/a) ∂H/∂y`, `ẏ = −(‖y‖/a) ∂H/∂x`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::connection::nonlinear_connection;
use crate::error::{Error, Result};
use crate::finsler::{FundamentalFunction, PhasePoint};
use crate::jet::{evaluate_jet, ScalarField};
use crate::kahler::ModelParams;

#[derive(Clone)]
pub struct HamiltonianSpec {
    field: Arc<dyn ScalarField>,
}

impl fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSpec").field("dim", &self.field.dim()).finish()
    }
}

impl HamiltonianSpec {
    pub fn new(field: Arc<dyn ScalarField>) -> Self {
        HamiltonianSpec { field }
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn field(&self) -> &dyn ScalarField {
        self.field.as_ref()
    }

    pub fn value(&self, p: &PhasePoint) -> Result<f64> {
        crate::jet::value_at(self.field(), p.x(), p.y())
    }
}

/// How the `x`-derivative of `H` is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonMode {
    /// Plain partial derivatives; `H` is conserved exactly by the flow.
    #[default]
    Plain,
    /// `∂H/∂x^i` replaced by `δH/δx^i = ∂H/∂x^i − N^j_i ∂H/∂y^j`.
    ConnectionCorrected,
}

/// `(ẋ, ẏ)` of the Hamilton flow at `p`.
pub fn hamilton_rhs(
    h: &HamiltonianSpec,
    f: &FundamentalFunction,
    p: &PhasePoint,
    m: &ModelParams,
    mode: HamiltonMode,
) -> Result<(DVector<f64>, DVector<f64>)> {
    f.check_point(p)?;
    if h.dim() != f.dim() {
        return Err(Error::Dimension {
            expected: f.dim(),
            got: h.dim(),
        });
    }
    ModelParams::new(m.a)?;
    let n = f.dim();
    let alpha = f.norm(p)? / m.a;
    let jet = evaluate_jet(h.field(), p, 1)?;
    let hx = DVector::from_fn(n, |i, _| jet.gradient()[i]);
    let hy = DVector::from_fn(n, |i, _| jet.gradient()[n + i]);
    let dx = match mode {
        HamiltonMode::Plain => hx,
        HamiltonMode::ConnectionCorrected => nonlinear_connection(f, p)?.horizontal(&hx, &hy),
    };
    Ok((hy * alpha, dx * -alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::field;

    fn harmonic() -> HamiltonianSpec {
        HamiltonianSpec::new(Arc::new(field(1, |x, y| (x[0].square() + y[0].square()) * 0.5)))
    }

    #[test]
    fn harmonic_field_at_top_of_circle() {
        let f = FundamentalFunction::euclidean(1);
        let p = PhasePoint::new(vec![0.0], vec![1.0]).unwrap();
        let (dx, dy) = hamilton_rhs(&harmonic(), &f, &p, &ModelParams::default(), HamiltonMode::Plain).unwrap();
        assert_eq!(dx[0], 1.0);
        assert_eq!(dy[0], 0.0);
    }

    #[test]
    fn constant_hamiltonian_gives_zero_field() {
        let f = FundamentalFunction::polar();
        let h = HamiltonianSpec::new(Arc::new(field(2, |x, _| x[0].lift(3.0))));
        let p = PhasePoint::new(vec![1.0, 0.5], vec![0.3, 0.2]).unwrap();
        for mode in [HamiltonMode::Plain, HamiltonMode::ConnectionCorrected] {
            let (dx, dy) = hamilton_rhs(&h, &f, &p, &ModelParams::default(), mode).unwrap();
            assert!(dx.iter().chain(dy.iter()).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn modes_agree_for_minkowski_metrics() {
        let f = FundamentalFunction::randers(vec![0.2, 0.1]).unwrap();
        let h = HamiltonianSpec::new(Arc::new(field(2, |x, y| &x[0] * &y[1] + y[0].square())));
        let p = PhasePoint::new(vec![1.0, -0.5], vec![0.3, 0.7]).unwrap();
        let m = ModelParams::new(1.5).unwrap();
        let plain = hamilton_rhs(&h, &f, &p, &m, HamiltonMode::Plain).unwrap();
        let corrected = hamilton_rhs(&h, &f, &p, &m, HamiltonMode::ConnectionCorrected).unwrap();
        assert_eq!(plain, corrected);
    }
}
