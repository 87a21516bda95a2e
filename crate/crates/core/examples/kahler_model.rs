//! Lifts, almost complex structures and 2-forms of the homogeneous almost
//! Kähler model at one point.

use finsler_kahler::finsler::{FundamentalFunction, PhasePoint};
use finsler_kahler::kahler::{
    hamiltonian_two_form, hermitian_defect, homogeneous_almost_complex, homogeneous_lift, liouville_one_form,
    sasaki_lift, square_defect, symplectic_form_theta, ModelParams,
};

fn main() -> finsler_kahler::Result<()> {
    let f = FundamentalFunction::randers(vec![0.5, 0.0])?;
    let p = PhasePoint::new(vec![0.0, 0.0], vec![1.0, 1.0])?;

    for a in [0.5, 1.0, 2.0] {
        let m = ModelParams::new(a)?;
        let j = homogeneous_almost_complex(&f, &p, &m)?;
        println!(
            "a = {a}: |F̊² + I| = {:.1e}, hermitian defect = {:.1e}",
            square_defect(&j),
            hermitian_defect(&f, &p, &m)?
        );
    }

    let m = ModelParams::default();
    println!("Sasaki lift = {}", sasaki_lift(&f, &p)?.full());
    println!("homogeneous lift = {}", homogeneous_lift(&f, &p, &m)?.full());
    println!("θ = {}", symplectic_form_theta(&f, &p)?.full());
    println!("Φ_H = {}", hamiltonian_two_form(&f, &p, &m)?.full());
    let forms = liouville_one_form(&f, &p, &m)?;
    println!("ω = {:?}  λ = {:?}", forms.omega.full().as_slice(), forms.lambda.full().as_slice());

    // With a = F(p) the homogeneous lift reduces to the Sasaki lift.
    let at_norm = ModelParams::new(f.norm(&p)?)?;
    let diff = homogeneous_lift(&f, &p, &at_norm)?.full() - sasaki_lift(&f, &p)?.full();
    println!("a = F(p): lift difference = {}", diff.amax());
    Ok(())
}
