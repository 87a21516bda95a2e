//! Euler-Lagrange dynamics on the homogeneous model: the projectile, its
//! residuals and the identity between Φ_L and the energy differential.

use std::sync::Arc;

use finsler_kahler::dynamics::{
    el_residual, el_rhs, integrate, kahler_identity_residual, lagrangian_standard, IntegratorConfig, LagrangeFlow,
    Method,
};
use finsler_kahler::expr::Expression;
use finsler_kahler::finsler::{FundamentalFunction, PhasePoint};
use finsler_kahler::kahler::ModelParams;

fn main() -> finsler_kahler::Result<()> {
    let metric = FundamentalFunction::euclidean(2);
    let lagrangian = lagrangian_standard(vec![1.0, 1.0], 9.8, Arc::new(Expression::parse("x2", 2)?))?;
    let p = PhasePoint::new(vec![0.0, 0.0], vec![3.0, 4.0])?;

    for a in [1.0, 2.0] {
        let m = ModelParams::new(a)?;
        let acc = el_rhs(&lagrangian, &metric, &p, &m)?;
        let res = el_residual(&lagrangian, &metric, &p, acc.as_slice(), &m)?;
        println!("a = {a}: ẏ = {:?}", acc.as_slice());
        println!("  family-1 residual {:?}", res.family1);
        println!("  family-2 residual {:?}", res.family2);
        let id = kahler_identity_residual(&lagrangian, &metric, &p, acc.as_slice(), &m)?;
        println!("  i_ξΦ_L − dE_L: dx {:?}, δy {:?}", id.dx, id.dy);
    }

    let flow = LagrangeFlow {
        lagrangian,
        metric,
        params: ModelParams::default(),
    };
    let tr = integrate(&flow, &p, 0.0, 0.5, &IntegratorConfig::fixed(Method::Rk4Fixed, 0.01))?;
    let last = tr.last().expect("non-empty trajectory");
    println!("{} samples, endpoint {}", tr.len(), last.point);
    tr.write_csv(std::io::stdout().lock())?;
    Ok(())
}
