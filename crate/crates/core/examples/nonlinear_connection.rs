//! Spray coefficients, the nonlinear connection and the adapted frame of the
//! polar-coordinate plane, compared with its Christoffel symbols.

use finsler_kahler::cli::verify::polar_oracle;
use finsler_kahler::connection::{nonlinear_connection, spray_coefficients};
use finsler_kahler::finsler::{FundamentalFunction, PhasePoint};

fn main() -> finsler_kahler::Result<()> {
    let f = FundamentalFunction::polar();
    let p = PhasePoint::new(vec![2.0, 0.0], vec![0.0, 1.0])?;

    let spray = spray_coefficients(&f, &p)?;
    let conn = nonlinear_connection(&f, &p)?;
    println!("G = {:?}", spray.as_slice());
    println!("N = {}", conn.coefficients);
    println!("Γ y = {}", polar_oracle().connection(p.x(), p.y()));

    let frame = conn.frame();
    println!("frame rows (δ/δx, ∂/∂y) = {}", frame.frame);
    println!("coframe rows (dx, δy) = {}", frame.coframe);
    println!("pairing = {}", frame.pairing());

    // A Randers metric with constant wind has no x-dependence: N vanishes.
    let r = FundamentalFunction::randers(vec![0.5, 0.0])?;
    println!("randers N = {}", nonlinear_connection(&r, &p)?.coefficients);
    Ok(())
}
