//! The u, v functions of the constant-curvature corollaries and the
//! integrability defect over a parameter grid.

use finsler_kahler::einstein::{domain_check, sweep, t_grid, u_function, v_function, EinsteinParams};

fn main() -> finsler_kahler::Result<()> {
    let rows = sweep(&[1.0, 2.0, 5.0], &[-2.0, -1.0, -0.5, 0.5, 1.0], &t_grid(1, 300));
    let valid: Vec<_> = rows.iter().filter(|r| r.domain_ok).collect();
    let worst = valid.iter().map(|r| r.defect).fold(0.0, f64::max);
    println!("{} grid points, {} valid, max defect {worst:.2e}", rows.len(), valid.len());

    let p = EinsteinParams::new(2.0, -1.0, 1e-8)?;
    println!("v(1e-8) = {}  (limit −3c/2A = {})", v_function(&p)?, 3.0 / 4.0);

    let p = EinsteinParams::new(2.0, 1.0, 1.0)?;
    println!("A = 2, c = 1, t = 1: u = {}, v = {}", u_function(&p)?, v_function(&p)?);

    let bad = EinsteinParams::new(2.0, 1.0, 3.0)?;
    println!("A = 2, c = 1, t = 3: {:?}", domain_check(&bad));
    Ok(())
}
