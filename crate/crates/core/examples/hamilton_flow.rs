//! Hamilton flow of a harmonic Hamiltonian on a Randers plane: energy drift
//! under the adaptive integrator, in both derivative modes.

use std::sync::Arc;

use finsler_kahler::dynamics::{
    conserved_quantity_drift, integrate, HamiltonFlow, HamiltonMode, HamiltonianSpec, IntegratorConfig,
};
use finsler_kahler::expr::Expression;
use finsler_kahler::finsler::{FundamentalFunction, PhasePoint};
use finsler_kahler::kahler::ModelParams;

fn main() -> finsler_kahler::Result<()> {
    let h = HamiltonianSpec::new(Arc::new(Expression::parse("0.5 * (x1^2 + x2^2 + y1^2 + y2^2)", 2)?));
    let p0 = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 1.0])?;
    let h0 = h.value(&p0)?;

    for mode in [HamiltonMode::Plain, HamiltonMode::ConnectionCorrected] {
        let flow = HamiltonFlow {
            hamiltonian: h.clone(),
            metric: FundamentalFunction::randers(vec![0.5, 0.0])?,
            params: ModelParams::default(),
            mode,
        };
        let tr = integrate(&flow, &p0, 0.0, 10.0, &IntegratorConfig::adaptive(1e-10))?;
        let drift = conserved_quantity_drift(&tr, |p| h.value(p))?;
        println!("{mode:?}: {} steps, relative drift of H = {:.2e}", tr.len() - 1, drift / h0);
    }
    Ok(())
}
