//! The almost Kähler model on the slit tangent bundle.
//!
//! Every tensor is stored by its blocks in the adapted frame
//! `(δ_i, ∂_{y^i})` / coframe `(dx^i, δy^i)`:
//!
//! * bilinear forms (metrics, 2-forms) as `B(U, W) = Uᵀ B W` on adapted
//!   component vectors `(h; v)`;
//! * endomorphisms as matrices acting on adapted component columns, so column
//!   `j` is the image of the `j`-th frame vector;
//! * dual structures as matrices acting on covector components `(dx; δy)`.
//!
//! The 2-forms use `α ∧ β = α⊗β − β⊗α`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::connection::AdaptedFrame;
use crate::error::{Error, Result};
use crate::finsler::{metric_tensor, FundamentalFunction, PhasePoint};
use crate::linalg;

/// Parameters of the homogeneous model: the constant `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
}

impl ModelParams {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Parameter(format!(
                "homogeneity constant must satisfy a > 0, got {a}"
            )));
        }
        Ok(ModelParams { a })
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { a: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variance {
    Metric,
    Endomorphism,
    TwoForm,
}

/// A rank-2 object on `T(TM)` split into horizontal/vertical blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptedTensor {
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub hh: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub hv: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub vh: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub vv: DMatrix<f64>,
    pub variance: Variance,
}

impl AdaptedTensor {
    pub fn from_blocks(
        hh: DMatrix<f64>,
        hv: DMatrix<f64>,
        vh: DMatrix<f64>,
        vv: DMatrix<f64>,
        variance: Variance,
    ) -> Self {
        AdaptedTensor {
            hh,
            hv,
            vh,
            vv,
            variance,
        }
    }

    /// Splits a `2n × 2n` matrix into blocks.
    pub fn from_full(m: &DMatrix<f64>, variance: Variance) -> Self {
        let n = m.nrows() / 2;
        AdaptedTensor {
            hh: m.view((0, 0), (n, n)).into_owned(),
            hv: m.view((0, n), (n, n)).into_owned(),
            vh: m.view((n, 0), (n, n)).into_owned(),
            vv: m.view((n, n), (n, n)).into_owned(),
            variance,
        }
    }

    pub fn dim(&self) -> usize {
        self.hh.nrows()
    }

    pub fn full(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.hh);
        m.view_mut((0, n), (n, n)).copy_from(&self.hv);
        m.view_mut((n, 0), (n, n)).copy_from(&self.vh);
        m.view_mut((n, n), (n, n)).copy_from(&self.vv);
        m
    }

    /// Composition `self ∘ other` of endomorphisms.
    pub fn compose(&self, other: &AdaptedTensor) -> AdaptedTensor {
        AdaptedTensor::from_full(&(self.full() * other.full()), Variance::Endomorphism)
    }

    /// Applies an endomorphism to adapted components `(h; v)`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.full() * v
    }

    /// `B(U, W)` for a bilinear form.
    pub fn pair(&self, u: &DVector<f64>, w: &DVector<f64>) -> f64 {
        (u.transpose() * self.full() * w)[(0, 0)]
    }

    /// Interior product `i_X B = B(X, ·)` as covector components `(dx; δy)`.
    pub fn contract(&self, x: &DVector<f64>) -> AdaptedCovector {
        AdaptedCovector::from_full(&(self.full().transpose() * x))
    }

    /// `max |B - Bᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        linalg::asymmetry(&self.full())
    }

    /// `max |B + Bᵀ|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let m = self.full();
        linalg::max_abs(&(&m + m.transpose()))
    }

    pub fn is_positive_definite(&self) -> bool {
        linalg::is_positive_definite(&self.full())
    }

    /// The same object in coordinate components ordered `(x, y)`.
    pub fn to_coordinates(&self, frame: &AdaptedFrame) -> DMatrix<f64> {
        match self.variance {
            Variance::Metric | Variance::TwoForm => {
                frame.coframe.transpose() * self.full() * &frame.coframe
            }
            Variance::Endomorphism => frame.frame.transpose() * self.full() * &frame.coframe,
        }
    }
}

/// A 1-form by its components on `dx^i` and `δy^i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptedCovector {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl AdaptedCovector {
    pub fn from_full(v: &DVector<f64>) -> Self {
        let n = v.len() / 2;
        AdaptedCovector {
            dx: v.as_slice()[..n].to_vec(),
            dy: v.as_slice()[n..].to_vec(),
        }
    }

    pub fn full(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dx.len() * 2,
            self.dx.iter().chain(&self.dy).copied(),
        )
    }

    /// Value on a vector with adapted components `(h; v)`.
    pub fn apply(&self, v: &DVector<f64>) -> f64 {
        self.full().dot(v)
    }
}

struct Pointwise {
    g: DMatrix<f64>,
    /// `a / ‖y‖`
    ratio: f64,
}

fn pointwise(f: &FundamentalFunction, p: &PhasePoint, m: &ModelParams) -> Result<Pointwise> {
    ModelParams::new(m.a)?;
    let g = metric_tensor(f, p)?.g;
    let norm = f.norm(p)?;
    if !(norm > 0.0) {
        return Err(Error::Regularity(format!("‖y‖ = {norm} is not positive at {p}")));
    }
    Ok(Pointwise { g, ratio: m.a / norm })
}

fn zeros(n: usize) -> DMatrix<f64> {
    DMatrix::zeros(n, n)
}

fn block_endomorphism(n: usize, hv: f64, vh: f64) -> AdaptedTensor {
    AdaptedTensor::from_blocks(
        zeros(n),
        DMatrix::identity(n, n) * hv,
        DMatrix::identity(n, n) * vh,
        zeros(n),
        Variance::Endomorphism,
    )
}

/// `G = g_ij dx^i⊗dx^j + g_ij δy^i⊗δy^j`.
pub fn sasaki_lift(f: &FundamentalFunction, p: &PhasePoint) -> Result<AdaptedTensor> {
    let g = metric_tensor(f, p)?.g;
    let n = g.nrows();
    Ok(AdaptedTensor::from_blocks(g.clone(), zeros(n), zeros(n), g, Variance::Metric))
}

/// `G̊ = g_ij dx^i⊗dx^j + (a²/‖y‖²) g_ij δy^i⊗δy^j`.
pub fn homogeneous_lift(f: &FundamentalFunction, p: &PhasePoint, m: &ModelParams) -> Result<AdaptedTensor> {
    let pw = pointwise(f, p, m)?;
    let n = pw.g.nrows();
    let vv = &pw.g * (pw.ratio * pw.ratio);
    Ok(AdaptedTensor::from_blocks(pw.g, zeros(n), zeros(n), vv, Variance::Metric))
}

/// `F(δ_i) = −∂_{y^i}`, `F(∂_{y^i}) = δ_i`.
pub fn almost_complex(f: &FundamentalFunction, p: &PhasePoint) -> Result<AdaptedTensor> {
    f.check_point(p)?;
    Ok(block_endomorphism(f.dim(), 1.0, -1.0))
}

/// `F*(dx^i) = −δy^i`, `F*(δy^i) = dx^i`, acting on covector components.
pub fn dual_almost_complex(f: &FundamentalFunction, p: &PhasePoint) -> Result<AdaptedTensor> {
    almost_complex(f, p)
}

/// `F̊(δ_i) = −(‖y‖/a) ∂_{y^i}`, `F̊(∂_{y^i}) = (a/‖y‖) δ_i`.
pub fn homogeneous_almost_complex(
    f: &FundamentalFunction,
    p: &PhasePoint,
    m: &ModelParams,
) -> Result<AdaptedTensor> {
    let pw = pointwise(f, p, m)?;
    Ok(block_endomorphism(f.dim(), pw.ratio, -1.0 / pw.ratio))
}

/// `F̊*(dx^i) = −(‖y‖/a) δy^i`, `F̊*(δy^i) = (a/‖y‖) dx^i`, acting on covector
/// components.
///
/// This has the same block coefficients as `F̊`. Unlike `F*`, it is not the
/// contragredient of `F̊` unless `a = ‖y‖`.
pub fn dual_homogeneous_almost_complex(
    f: &FundamentalFunction,
    p: &PhasePoint,
    m: &ModelParams,
) -> Result<AdaptedTensor> {
    homogeneous_almost_complex(f, p, m)
}

/// `θ = g_ij δy^i ∧ dx^j`.
pub fn symplectic_form_theta(f: &FundamentalFunction, p: &PhasePoint) -> Result<AdaptedTensor> {
    let g = metric_tensor(f, p)?.g;
    if !linalg::is_positive_definite(&g) {
        return Err(Error::Regularity(format!("fundamental tensor is not positive definite at {p}")));
    }
    let n = g.nrows();
    Ok(AdaptedTensor::from_blocks(zeros(n), -g.clone(), g, zeros(n), Variance::TwoForm))
}

/// The 1-forms `ω = (a²/‖y‖²) x^i dx^i + y^i δy^i` and `λ = F̊*(ω)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiouvilleForms {
    pub omega: AdaptedCovector,
    pub lambda: AdaptedCovector,
}

pub fn liouville_one_form(f: &FundamentalFunction, p: &PhasePoint, m: &ModelParams) -> Result<LiouvilleForms> {
    let pw = pointwise(f, p, m)?;
    let r2 = pw.ratio * pw.ratio;
    let omega = AdaptedCovector {
        dx: p.x().iter().map(|v| r2 * v).collect(),
        dy: p.y().to_vec(),
    };
    let dual = dual_homogeneous_almost_complex(f, p, m)?;
    let lambda = AdaptedCovector::from_full(&dual.apply(&omega.full()));
    Ok(LiouvilleForms { omega, lambda })
}

/// `Φ_H = (a/‖y‖) dx^i ∧ δy^i`.
pub fn hamiltonian_two_form(f: &FundamentalFunction, p: &PhasePoint, m: &ModelParams) -> Result<AdaptedTensor> {
    let pw = pointwise(f, p, m)?;
    let n = f.dim();
    let id = DMatrix::identity(n, n);
    Ok(AdaptedTensor::from_blocks(
        zeros(n),
        &id * pw.ratio,
        &id * -pw.ratio,
        zeros(n),
        Variance::TwoForm,
    ))
}

/// `max |G(JU, JW) − G(U, W)|` over the adapted basis.
pub fn hermitian_defect_of(metric: &AdaptedTensor, j: &AdaptedTensor) -> f64 {
    let g = metric.full();
    let jm = j.full();
    linalg::max_abs(&(jm.transpose() * &g * &jm - g))
}

/// Hermitian defect of the pair `(G̊, F̊)` at `p`.
pub fn hermitian_defect(f: &FundamentalFunction, p: &PhasePoint, m: &ModelParams) -> Result<f64> {
    let metric = homogeneous_lift(f, p, m)?;
    let j = homogeneous_almost_complex(f, p, m)?;
    Ok(hermitian_defect_of(&metric, &j))
}

/// `max |J∘J + I|`.
pub fn square_defect(j: &AdaptedTensor) -> f64 {
    let m = j.full();
    let n = m.nrows();
    linalg::max_abs(&(&m * &m + DMatrix::identity(n, n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(x: &[f64], y: &[f64]) -> PhasePoint {
        PhasePoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    fn a(v: f64) -> ModelParams {
        ModelParams::new(v).unwrap()
    }

    #[test]
    fn nonpositive_a_is_rejected() {
        assert!(ModelParams::new(0.0).is_err());
        assert!(ModelParams::new(-1.0).is_err());
    }

    #[test]
    fn euclidean_lifts() {
        let f = FundamentalFunction::euclidean(2);
        let p = pt(&[0.0, 0.0], &[3.0, 4.0]);
        assert_eq!(sasaki_lift(&f, &p).unwrap().full(), DMatrix::identity(4, 4));
        let h = homogeneous_lift(&f, &p, &a(1.0)).unwrap();
        assert_eq!(h.hh, DMatrix::identity(2, 2));
        assert_relative_eq!(h.vv[(0, 0)], 1.0 / 25.0, epsilon = 1e-16);
        assert_eq!(h.hv, zeros(2));
    }

    #[test]
    fn homogeneous_lift_at_a_equal_norm_is_sasaki() {
        let f = FundamentalFunction::randers(vec![0.3, -0.2]).unwrap();
        let p = pt(&[0.1, 0.2], &[0.7, 1.3]);
        let norm = f.norm(&p).unwrap();
        assert_eq!(
            homogeneous_lift(&f, &p, &a(norm)).unwrap(),
            sasaki_lift(&f, &p).unwrap()
        );
        assert_eq!(
            homogeneous_almost_complex(&f, &p, &a(norm)).unwrap(),
            almost_complex(&f, &p).unwrap()
        );
    }

    #[test]
    fn almost_complex_squares_to_minus_identity() {
        let f = FundamentalFunction::euclidean(2);
        let p = pt(&[0.0, 0.0], &[3.0, 4.0]);
        let j = almost_complex(&f, &p).unwrap();
        assert_eq!(square_defect(&j), 0.0);
        // F(δ_1) = -∂_{y^1}
        let image = j.apply(&DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]));
        assert_eq!(image.as_slice(), &[0.0, 0.0, -1.0, 0.0]);
        // F*(dx^1) = -δy^1
        let dual = dual_almost_complex(&f, &p).unwrap();
        let image = dual.apply(&DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]));
        assert_eq!(image.as_slice(), &[0.0, 0.0, -1.0, 0.0]);
        // and F* is the contragredient of F
        let inv_t = j.full().try_inverse().unwrap().transpose();
        assert_eq!(dual.full(), inv_t);
    }

    #[test]
    fn homogeneous_structure_blocks() {
        let f = FundamentalFunction::euclidean(2);
        let p = pt(&[0.0, 0.0], &[3.0, 4.0]);
        let j = homogeneous_almost_complex(&f, &p, &a(1.0)).unwrap();
        assert_relative_eq!(j.hv[(0, 0)], 0.2, epsilon = 1e-16);
        assert_relative_eq!(j.vh[(1, 1)], -5.0, epsilon = 1e-15);
        assert!(square_defect(&j) < 1e-15);
    }

    #[test]
    fn theta_is_canonical_for_euclidean() {
        let f = FundamentalFunction::euclidean(2);
        let t = symplectic_form_theta(&f, &pt(&[0.0, 0.0], &[1.0, 2.0])).unwrap();
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 2)] = -1.0;
        expected[(1, 3)] = -1.0;
        expected[(2, 0)] = 1.0;
        expected[(3, 1)] = 1.0;
        assert_eq!(t.full(), expected);
        assert_eq!(t.antisymmetry_defect(), 0.0);
    }

    #[test]
    fn theta_determinant_and_taming() {
        let f = FundamentalFunction::quartic(2);
        let p = pt(&[0.0, 0.0], &[1.0, 1.0]);
        let t = symplectic_form_theta(&f, &p).unwrap();
        let g = metric_tensor(&f, &p).unwrap().g;
        assert_relative_eq!(t.full().determinant(), g.determinant().powi(2), epsilon = 1e-12);
        let norm = f.norm(&p).unwrap();
        let j = homogeneous_almost_complex(&f, &p, &a(norm)).unwrap();
        let x = DVector::from_vec(vec![0.3, -1.0, 0.5, 0.2]);
        assert!(t.pair(&x, &j.apply(&x)) > 0.0);
    }

    #[test]
    fn liouville_form_components() {
        let f = FundamentalFunction::euclidean(2);
        let forms = liouville_one_form(&f, &pt(&[1.0, 0.0], &[3.0, 4.0]), &a(1.0)).unwrap();
        assert_relative_eq!(forms.lambda.dx[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(forms.lambda.dx[1], 0.8, epsilon = 1e-15);
        assert_relative_eq!(forms.lambda.dy[0], -0.2, epsilon = 1e-15);
        assert_eq!(forms.lambda.dy[1], 0.0);
        // ω on the vertical Liouville direction gives F²
        let liouville = DVector::from_vec(vec![0.0, 0.0, 3.0, 4.0]);
        assert_eq!(forms.omega.apply(&liouville), 25.0);
    }

    #[test]
    fn liouville_form_at_origin_is_horizontal() {
        let f = FundamentalFunction::euclidean(2);
        let forms = liouville_one_form(&f, &pt(&[0.0, 0.0], &[1.0, 1.0]), &a(2.0)).unwrap();
        assert!(forms.lambda.dy.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hamiltonian_form_contraction() {
        let f = FundamentalFunction::euclidean(2);
        let p = pt(&[0.0, 0.0], &[3.0, 4.0]);
        let phi = hamiltonian_two_form(&f, &p, &a(1.0)).unwrap();
        assert_relative_eq!(phi.hv[(0, 0)], 0.2, epsilon = 1e-16);
        let x = DVector::from_vec(vec![1.0, 2.0, -3.0, 0.5]);
        let c = phi.contract(&x);
        for i in 0..2 {
            assert_relative_eq!(c.dx[i], -0.2 * x[2 + i], epsilon = 1e-15);
            assert_relative_eq!(c.dy[i], 0.2 * x[i], epsilon = 1e-15);
        }
        let canonical = hamiltonian_two_form(&f, &p, &a(5.0)).unwrap();
        assert_eq!(canonical.hv, DMatrix::identity(2, 2));
    }

    #[test]
    fn hermitian_defect_detects_corruption() {
        let f = FundamentalFunction::quartic(2);
        let p = pt(&[0.0, 0.0], &[0.6, 1.1]);
        let m = a(1.0);
        assert!(hermitian_defect(&f, &p, &m).unwrap() < 1e-12);
        let mut metric = homogeneous_lift(&f, &p, &m).unwrap();
        metric.vv *= 1.01;
        let j = homogeneous_almost_complex(&f, &p, &m).unwrap();
        let d = hermitian_defect_of(&metric, &j);
        assert!(d > 1e-3 && d < 1e-1, "{d}");
    }

    #[test]
    fn coordinate_form_of_sasaki_metric() {
        let f = FundamentalFunction::polar();
        let p = pt(&[2.0, 0.0], &[0.0, 1.0]);
        let frame = crate::connection::adapted_frame(&f, &p).unwrap();
        let coords = sasaki_lift(&f, &p).unwrap().to_coordinates(&frame);
        assert!(linalg::asymmetry(&coords) < 1e-14);
        assert!(linalg::is_positive_definite(&coords));
    }
}
