//! Canonical spray, the Cartan nonlinear connection and the adapted frame.
//!
//! For a fundamental function `F` the spray coefficients are
//!
//! ```text
//! G^i = ¼ g^il (y^k ∂²F²/∂y^l∂x^k − ∂F²/∂x^l)
//! ```
//!
//! and the nonlinear connection is `N^i_j = ∂G^i/∂y^j`. Everything is
//! computed on jets, so `N` itself can be differentiated once more.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finsler::{FundamentalFunction, PhasePoint};
use crate::jet::{evaluate_jet, Jet, MAX_ORDER};
use crate::linalg;

/// Jets of `G^i`, each of order `order`.
///
/// Needs `F²` to order `order + 2`, so `order <= MAX_ORDER - 2`.
pub fn spray_jets(f: &FundamentalFunction, p: &PhasePoint, order: usize) -> Result<Vec<Jet>> {
    f.check_point(p)?;
    if order + 2 > MAX_ORDER {
        return Err(Error::Order {
            requested: order + 2,
            available: MAX_ORDER,
        });
    }
    let n = f.dim();
    let f2 = evaluate_jet(&f.squared_field(), p, order + 2)?;
    let first: Vec<Jet> = (0..2 * n).map(|v| f2.derivative(v)).collect();

    let g: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| first[n + i].derivative(n + j) * 0.5).collect())
        .collect();
    let ginv = linalg::invert_jets(&g).map_err(|_| {
        Error::Regularity(format!("fundamental tensor is singular at {p}"))
    })?;

    let (_, ys) = crate::jet::seed(p.x(), p.y(), order + 2);
    let b: Vec<Jet> = (0..n)
        .map(|l| {
            let mut acc = -&first[l];
            for (k, yk) in ys.iter().enumerate() {
                acc = acc + yk * first[n + l].derivative(k);
            }
            acc
        })
        .collect();

    Ok((0..n)
        .map(|i| {
            let mut acc = ginv[i][0].lift(0.0);
            for l in 0..n {
                acc = acc + &ginv[i][l] * &b[l];
            }
            acc * 0.25
        })
        .collect())
}

/// Spray coefficients `G^i(x, y)`.
pub fn spray_coefficients(f: &FundamentalFunction, p: &PhasePoint) -> Result<DVector<f64>> {
    let g = spray_jets(f, p, 0)?;
    Ok(DVector::from_iterator(g.len(), g.iter().map(Jet::value)))
}

/// Jets of `N^i_j` (indexed `[i][j]`) of the requested order (0 or 1).
pub fn connection_jets(f: &FundamentalFunction, p: &PhasePoint, order: usize) -> Result<Vec<Vec<Jet>>> {
    let n = f.dim();
    let g = spray_jets(f, p, order + 1)?;
    Ok(g
        .iter()
        .map(|gi| (0..n).map(|j| gi.derivative(n + j)).collect())
        .collect())
}

/// `N^i_j` at a point; entry `(i, j)` of `coefficients` is `N^i_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearConnection {
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub coefficients: DMatrix<f64>,
    pub point: PhasePoint,
}

impl NonlinearConnection {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.coefficients[(i, j)]
    }

    /// Horizontal derivatives `δ_i f = ∂_{x^i} f − N^j_i ∂_{y^j} f` from the
    /// plain gradients of `f`.
    pub fn horizontal(&self, dx: &DVector<f64>, dy: &DVector<f64>) -> DVector<f64> {
        dx - self.coefficients.transpose() * dy
    }

    /// `δy^i = dy^i + N^i_j dx^j` for a displacement `(dx, dy)`.
    pub fn vertical_part(&self, dx: &DVector<f64>, dy: &DVector<f64>) -> DVector<f64> {
        dy + &self.coefficients * dx
    }

    pub fn frame(&self) -> AdaptedFrame {
        AdaptedFrame::from_connection(&self.coefficients)
    }
}

pub fn nonlinear_connection(f: &FundamentalFunction, p: &PhasePoint) -> Result<NonlinearConnection> {
    let jets = connection_jets(f, p, 0)?;
    let n = f.dim();
    Ok(NonlinearConnection {
        coefficients: DMatrix::from_fn(n, n, |i, j| jets[i][j].value()),
        point: p.clone(),
    })
}

/// The adapted frame `(δ_i, ∂_{y^i})` and coframe `(dx^i, δy^i)`.
///
/// Rows of `frame` are the frame vectors and rows of `coframe` the coframe
/// covectors, both in coordinate components ordered `(x^1..x^n, y^1..y^n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFrame {
    pub frame: DMatrix<f64>,
    pub coframe: DMatrix<f64>,
}

impl AdaptedFrame {
    pub fn from_connection(n_ij: &DMatrix<f64>) -> Self {
        let n = n_ij.nrows();
        let mut frame = DMatrix::identity(2 * n, 2 * n);
        let mut coframe = DMatrix::identity(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                frame[(i, n + j)] = -n_ij[(j, i)];
                coframe[(n + i, j)] = n_ij[(i, j)];
            }
        }
        AdaptedFrame { frame, coframe }
    }

    /// `coframe_a(frame_b)`; the identity for a correctly paired frame.
    pub fn pairing(&self) -> DMatrix<f64> {
        &self.coframe * self.frame.transpose()
    }

    /// Coordinate components of a vector with adapted components `(h, v)`.
    pub fn to_coordinates(&self, adapted: &DVector<f64>) -> DVector<f64> {
        self.frame.transpose() * adapted
    }

    /// Adapted components of a vector given in coordinates.
    pub fn to_adapted(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.coframe * coords
    }
}

/// The adapted frame at `p`.
pub fn adapted_frame(f: &FundamentalFunction, p: &PhasePoint) -> Result<AdaptedFrame> {
    Ok(nonlinear_connection(f, p)?.frame())
}

/// Jets of `δ_i h = ∂_{x^i} h − N^k_i ∂_{y^k} h` given a jet of `h` and connection jets.
///
/// The result has order `min(h.order() - 1, N order)`.
pub fn horizontal_jets(h: &Jet, connection: &[Vec<Jet>]) -> Vec<Jet> {
    let n = connection.len();
    (0..n)
        .map(|i| {
            let mut acc = h.derivative(i);
            for (k, row) in connection.iter().enumerate() {
                acc = acc - &row[i] * &h.derivative(n + k);
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(x: &[f64], y: &[f64]) -> PhasePoint {
        PhasePoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn polar_spray_and_connection() {
        let f = FundamentalFunction::polar();
        let p = pt(&[2.0, 0.3], &[0.0, 1.0]);
        let g = spray_coefficients(&f, &p).unwrap();
        assert_relative_eq!(g[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(g[1], 0.0, epsilon = 1e-14);
        let n = nonlinear_connection(&f, &p).unwrap();
        assert_relative_eq!(n.get(0, 1), -2.0, epsilon = 1e-14);
        assert_relative_eq!(n.get(1, 0), 0.5, epsilon = 1e-14);
        assert_relative_eq!(n.get(0, 0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(n.get(1, 1), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn minkowski_connection_vanishes_exactly() {
        let p = pt(&[0.7, -0.2], &[0.3, 1.1]);
        for f in [
            FundamentalFunction::euclidean(2),
            FundamentalFunction::randers(vec![0.5, 0.0]).unwrap(),
            FundamentalFunction::quartic(2),
        ] {
            let n = nonlinear_connection(&f, &p).unwrap();
            assert!(n.coefficients.iter().all(|&v| v == 0.0), "{}", f.name());
        }
    }

    #[test]
    fn frame_pairing_is_identity() {
        let f = FundamentalFunction::polar();
        let frame = adapted_frame(&f, &pt(&[1.5, 0.0], &[0.4, -0.7])).unwrap();
        assert_eq!(frame.pairing(), DMatrix::identity(4, 4));
        assert_relative_eq!(frame.frame.determinant(), 1.0, epsilon = 1e-14);
        let v = DVector::from_vec(vec![1.0, 2.0, -0.5, 0.25]);
        let back = frame.to_adapted(&frame.to_coordinates(&v));
        assert!((back - v).amax() < 1e-14);
    }

    #[test]
    fn connection_is_homogeneous_of_degree_one() {
        let f = FundamentalFunction::sphere();
        let p = pt(&[1.0, 0.4], &[0.3, 0.8]);
        let n1 = nonlinear_connection(&f, &p).unwrap().coefficients;
        let n2 = nonlinear_connection(&f, &p.scale_fiber(3.0).unwrap()).unwrap().coefficients;
        assert!((n2 - n1 * 3.0).amax() < 1e-13);
    }

    #[test]
    fn horizontal_derivative_of_energy_vanishes() {
        // δ_i F² = 0 for the Cartan connection
        let f = FundamentalFunction::polar();
        let p = pt(&[1.3, 0.2], &[0.5, 0.9]);
        let f2 = evaluate_jet(&f.squared_field(), &p, 1).unwrap();
        let n = connection_jets(&f, &p, 0).unwrap();
        for d in horizontal_jets(&f2, &n) {
            assert!(d.value().abs() < 1e-13);
        }
    }
}
