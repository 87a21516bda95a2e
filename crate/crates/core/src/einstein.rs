//! The scalar functions `u(t)`, `v(t)` of the Kähler-Einstein corollaries and
//! the integrability identity `v = (c − u u′)/(2t u′ − u)`.
//!
//! With `s = sqrt(A² − 2ct)`:
//!
//! ```text
//! u = A + s
//! v = (A − 4ct/A − s) / (2t) = c/(A + s) − 2c/A
//! ```
//!
//! The second form of `v` is algebraically identical, has no cancellation for
//! small `t` and extends continuously to `v(0) = −3c/(2A)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `A > 0`, curvature `c`, energy density `t >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EinsteinParams {
    #[serde(rename = "A")]
    pub a: f64,
    pub c: f64,
    pub t: f64,
}

impl EinsteinParams {
    pub fn new(a: f64, c: f64, t: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Parameter(format!("A must satisfy A > 0, got {a}")));
        }
        if !c.is_finite() {
            return Err(Error::Parameter(format!("c must be finite, got {c}")));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Parameter(format!("t must satisfy t >= 0, got {t}")));
        }
        Ok(EinsteinParams { a, c, t })
    }

    pub fn radicand(&self) -> f64 {
        self.a * self.a - 2.0 * self.c * self.t
    }

    fn root(&self) -> Result<f64> {
        EinsteinParams::new(self.a, self.c, self.t)?;
        let r = self.radicand();
        if r < 0.0 {
            return Err(Error::domain(
                "t",
                format!(
                    "A² − 2ct = {r} < 0 for A = {}, c = {}, t = {} (requires t <= A²/(2c))",
                    self.a, self.c, self.t
                ),
            ));
        }
        Ok(r.sqrt())
    }
}

/// `u = A + sqrt(A² − 2ct)`.
pub fn u_function(p: &EinsteinParams) -> Result<f64> {
    Ok(p.a + p.root()?)
}

/// `v = (A − 4ct/A − sqrt(A² − 2ct)) / (2t)`, continuous at `t = 0`.
pub fn v_function(p: &EinsteinParams) -> Result<f64> {
    let s = p.root()?;
    Ok(p.c / (p.a + s) - 2.0 * p.c / p.a)
}

/// `u′ = du/dt = −c / sqrt(A² − 2ct)`.
pub fn u_derivative(p: &EinsteinParams) -> Result<f64> {
    let s = p.root()?;
    if s == 0.0 {
        return Err(Error::DegenerateParameters(format!(
            "u′ is unbounded where A² = 2ct (A = {}, c = {}, t = {})",
            p.a, p.c, p.t
        )));
    }
    Ok(-p.c / s)
}

/// `|v − (c − u u′)/(2t u′ − u)|`.
pub fn integrability_defect(p: &EinsteinParams) -> Result<f64> {
    let u = u_function(p)?;
    let du = u_derivative(p)?;
    let v = v_function(p)?;
    let denom = 2.0 * p.t * du - u;
    if !(denom.abs() > 1e-12 * u.abs().max(1.0)) {
        return Err(Error::DegenerateParameters(format!(
            "2t u′ − u = {denom} vanishes at A = {}, c = {}, t = {}",
            p.a, p.c, p.t
        )));
    }
    Ok((v - (p.c - u * du) / denom).abs())
}

/// Domain conditions of the corollaries at one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainReport {
    pub radicand: f64,
    /// `A² − 2ct >= 0`.
    pub radicand_ok: bool,
    /// The tube bound `t < A²/c`; only stated for `c > 0`.
    pub tube_bound: Option<bool>,
    pub u_positive: bool,
    pub u_plus_2tv_positive: bool,
    /// Tube bound holds but the radicand is negative.
    pub inconsistent: bool,
    /// Radicand, `u > 0` and `u + 2tv > 0` all hold.
    pub valid: bool,
}

pub fn domain_check(p: &EinsteinParams) -> DomainReport {
    let radicand = p.radicand();
    let radicand_ok = radicand >= 0.0;
    let tube_bound = (p.c > 0.0).then(|| p.t < p.a * p.a / p.c);
    let u = u_function(p).unwrap_or(f64::NAN);
    let v = v_function(p).unwrap_or(f64::NAN);
    let u_positive = u > 0.0;
    let u_plus_2tv_positive = u + 2.0 * p.t * v > 0.0;
    DomainReport {
        radicand,
        radicand_ok,
        tube_bound,
        u_positive,
        u_plus_2tv_positive,
        inconsistent: tube_bound == Some(true) && !radicand_ok,
        valid: radicand_ok && u_positive && u_plus_2tv_positive,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "A")]
    pub a: f64,
    pub c: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub defect: f64,
    pub domain_ok: bool,
}

/// Grid `t = k/100` for `k = first..=last`.
pub fn t_grid(first: u32, last: u32) -> Vec<f64> {
    (first..=last).map(|k| k as f64 / 100.0).collect()
}

/// Evaluates `u`, `v` and the integrability defect over the product grid.
/// Points outside the domain get NaN values and `domain_ok = false`.
pub fn sweep(a_values: &[f64], c_values: &[f64], t_values: &[f64]) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(a_values.len() * c_values.len() * t_values.len());
    for &a in a_values {
        for &c in c_values {
            for &t in t_values {
                let p = EinsteinParams { a, c, t };
                let ok = EinsteinParams::new(a, c, t).is_ok() && domain_check(&p).valid;
                let (u, v, defect) = if ok {
                    (
                        u_function(&p).unwrap_or(f64::NAN),
                        v_function(&p).unwrap_or(f64::NAN),
                        integrability_defect(&p).unwrap_or(f64::NAN),
                    )
                } else {
                    (f64::NAN, f64::NAN, f64::NAN)
                };
                rows.push(SweepRow {
                    a,
                    c,
                    t,
                    u,
                    v,
                    defect,
                    domain_ok: ok,
                });
            }
        }
    }
    rows
}

/// Writes the sweep with columns `A,c,t,u,v,defect,domain_ok`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["A", "c", "t", "u", "v", "defect", "domain_ok"])
        .map_err(crate::dynamics::csv_error)?;
    for r in rows {
        let mut rec: Vec<String> = [r.a, r.c, r.t, r.u, r.v, r.defect]
            .iter()
            .map(|v| format!("{v:?}"))
            .collect();
        rec.push(r.domain_ok.to_string());
        w.write_record(&rec).map_err(crate::dynamics::csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(a: f64, c: f64, t: f64) -> EinsteinParams {
        EinsteinParams::new(a, c, t).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let p = params(2.0, -1.0, 1.0);
        assert_relative_eq!(u_function(&p).unwrap(), 2.0 + 6f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(v_function(&p).unwrap(), (4.0 - 6f64.sqrt()) / 2.0, epsilon = 1e-15);
        assert!(integrability_defect(&p).unwrap() < 1e-12);
    }

    #[test]
    fn printed_and_stable_v_agree() {
        for (a, c, t) in [(2.0, -1.0, 1.0), (1.0, 0.5, 0.7), (5.0, -2.0, 2.5)] {
            let p = params(a, c, t);
            let s: f64 = (a * a - 2.0 * c * t).sqrt();
            let printed = (a - 4.0 * c * t / a - s) / (2.0 * t);
            assert_relative_eq!(v_function(&p).unwrap(), printed, epsilon = 1e-13);
        }
    }

    #[test]
    fn flat_case() {
        for t in [0.0, 0.5, 3.0] {
            let p = params(1.5, 0.0, t);
            assert_eq!(u_function(&p).unwrap(), 3.0);
            assert_eq!(v_function(&p).unwrap(), 0.0);
            assert_eq!(integrability_defect(&p).unwrap(), 0.0);
        }
    }

    #[test]
    fn small_t_limit() {
        let p = params(2.0, -1.0, 1e-8);
        assert!((v_function(&p).unwrap() - 0.75).abs() < 1e-6);
        assert_eq!(v_function(&params(2.0, -1.0, 0.0)).unwrap(), 0.75);
    }

    #[test]
    fn negative_radicand_is_a_domain_error() {
        let p = params(2.0, 1.0, 3.0);
        assert!(matches!(u_function(&p), Err(Error::Domain { .. })));
        let report = domain_check(&p);
        assert_eq!(report.tube_bound, Some(true));
        assert!(!report.radicand_ok);
        assert!(report.inconsistent);
        assert!(!report.valid);
    }

    #[test]
    fn negative_curvature_is_always_valid() {
        for t in t_grid(0, 300) {
            let r = domain_check(&params(2.0, -1.0, t));
            assert!(r.valid && !r.inconsistent && r.tube_bound.is_none());
            if t > 0.0 {
                assert!(v_function(&params(2.0, -1.0, t)).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn root_of_radicand_is_degenerate() {
        let p = params(2.0, 1.0, 2.0);
        assert!(matches!(integrability_defect(&p), Err(Error::DegenerateParameters(_))));
    }

    #[test]
    fn sweep_csv_layout() {
        let rows = sweep(&[2.0], &[1.0], &[0.5, 3.0]);
        assert!(rows[0].domain_ok && !rows[1].domain_ok);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "A,c,t,u,v,defect,domain_ok");
        assert_eq!(lines[2], "2.0,1.0,3.0,NaN,NaN,NaN,false");
    }
}
