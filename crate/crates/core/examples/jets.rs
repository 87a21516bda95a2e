//! Exact partial derivatives through truncated Taylor jets, checked against
//! finite differences.

use finsler_kahler::expr::Expression;
use finsler_kahler::finsler::PhasePoint;
use finsler_kahler::jet::{evaluate_jet, finite_difference_defect};

fn main() -> finsler_kahler::Result<()> {
    let f = Expression::parse("x1^2 * y1 + sin(x2) * y2^3", 2)?;
    let p = PhasePoint::new(vec![0.5, 1.0], vec![2.0, -1.0])?;
    let jet = evaluate_jet(&f, &p, 3)?;

    println!("f        = {}", jet.value());
    println!("gradient = {:?}", jet.gradient());
    // Variables are ordered x1, x2, y1, y2.
    println!("∂²f/∂x1∂y1     = {}", jet.hessian(0, 2));
    println!("∂³f/∂y2∂y2∂x2  = {}", jet.third(3, 3, 1));

    for order in 1..=3 {
        let defect = finite_difference_defect(&f, &p, order, 1e-3)?;
        println!("order {order}: relative defect vs finite differences = {defect:.2e}");
    }
    Ok(())
}
