//! Numerical toolkit for the almost Kähler model of a Finsler manifold.
//!
//! The crate evaluates, on the slit tangent bundle of a coordinate patch:
//!
//! * exact higher-order partial derivatives of scalar fields through
//!   truncated Taylor jets ([`jet`]);
//! * fundamental functions, the fundamental tensor `g_ij` and the Finsler
//!   conditions ([`finsler`]);
//! * spray coefficients, the Cartan nonlinear connection and the adapted
//!   frame ([`connection`]);
//! * the Sasaki and homogeneous lifts, almost complex structures and the
//!   associated 2-forms ([`kahler`]);
//! * Euler-Lagrange and Hamilton flows on the homogeneous model, with
//!   integrators and diagnostics ([`dynamics`]);
//! * the `u`, `v` functions of the Kähler-Einstein identities ([`einstein`]).
//!
//! ```
//! use finsler_kahler::finsler::{metric_tensor, FundamentalFunction, PhasePoint};
//!
//! let f = FundamentalFunction::randers(vec![0.5, 0.0]).unwrap();
//! let p = PhasePoint::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
//! let g = metric_tensor(&f, &p).unwrap();
//! assert!((g.g[(0, 0)] - 2.25).abs() < 1e-14);
//! ```

pub mod cli;
pub mod connection;
pub mod dynamics;
pub mod einstein;
pub mod error;
pub mod expr;
pub mod finsler;
pub mod jet;
pub mod kahler;
pub mod linalg;
pub mod sampling;

pub use error::{Error, Result};

/// Serializes a matrix as a list of rows.
#[doc(hidden)]
pub fn serialize_matrix<S: serde::Serializer>(m: &nalgebra::DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}
