//! The built-in fundamental functions, their metric tensors and the Finsler
//! condition checks, including two structures that must be rejected.

use std::sync::Arc;

use nalgebra::DMatrix;

use finsler_kahler::finsler::{metric_tensor, validate_finsler, FundamentalFunction, PhasePoint};
use finsler_kahler::jet::field;
use finsler_kahler::sampling::{all_metrics, sample_points, SampleBox};

fn main() -> finsler_kahler::Result<()> {
    let p = PhasePoint::new(vec![1.0, 0.3], vec![1.0, 0.5])?;
    for m in all_metrics() {
        let samples = sample_points(&m.domain, 500, 42, 0)?;
        let report = validate_finsler(&m.metric, &samples);
        let g = metric_tensor(&m.metric, &p)?.g;
        println!(
            "{:<18} F = {:.6}  det g = {:.6}  valid: {}",
            m.name,
            m.metric.norm(&p)?,
            g.determinant(),
            report.passed()
        );
    }

    let samples = sample_points(&SampleBox::cube(2, 1.0), 200, 42, 1)?;
    let pseudo = FundamentalFunction::custom(Arc::new(field(2, |_, y| (y[0].square() - y[1].square()).sqrt())));
    let wide = FundamentalFunction::randers_unchecked(DMatrix::identity(2, 2), vec![1.5, 0.0], None)?;
    for (name, f) in [("pseudo-norm", pseudo), ("randers ‖b‖ = 1.5", wide)] {
        let r = validate_finsler(&f, &samples);
        println!(
            "{name:<18} positivity {} definiteness {} (worst eigenvalue {:.3})",
            r.positivity.pass, r.definiteness.pass, r.definiteness.worst
        );
    }
    Ok(())
}
