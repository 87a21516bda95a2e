//! Seeded phase-point sampling and the catalog of built-in metrics.
//!
//! Base points are uniform in a box. Fiber directions are uniform on the unit
//! sphere and scaled by a log-uniform radius in `[0.1, 10]`, so samples cover
//! several orders of magnitude of `‖y‖`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finsler::{FundamentalFunction, PhasePoint};

pub const MIN_RADIUS: f64 = 0.1;
pub const MAX_RADIUS: f64 = 10.0;

/// Axis-aligned box for base points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn cube(n: usize, half_width: f64) -> Self {
        SampleBox {
            lo: vec![-half_width; n],
            hi: vec![half_width; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() {
            return Err(Error::Dimension {
                expected: self.lo.len(),
                got: self.hi.len(),
            });
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::Parameter("sample box needs finite lo <= hi".into()));
        }
        Ok(())
    }
}

/// Deterministic sampler; `stream` separates independent sample sets drawn
/// from the same seed.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Sampler { rng }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            lo
        } else {
            self.rng.random_range(lo..hi)
        }
    }

    /// Uniform direction on the unit sphere in `n` dimensions.
    pub fn direction(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| self.rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|c| c / norm).collect();
            }
        }
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.uniform(lo.ln(), hi.ln()).exp()
    }

    pub fn point(&mut self, domain: &SampleBox) -> PhasePoint {
        let n = domain.dim();
        let x = domain
            .lo
            .iter()
            .zip(&domain.hi)
            .map(|(&l, &h)| self.uniform(l, h))
            .collect();
        let r = self.log_uniform(MIN_RADIUS, MAX_RADIUS);
        let y = self.direction(n).into_iter().map(|c| c * r).collect();
        PhasePoint::new(x, y).expect("sampled fiber is nonzero")
    }

    pub fn points(&mut self, domain: &SampleBox, count: usize) -> Vec<PhasePoint> {
        (0..count).map(|_| self.point(domain)).collect()
    }
}

/// `count` phase points from `(seed, stream)`.
pub fn sample_points(domain: &SampleBox, count: usize, seed: u64, stream: u64) -> Result<Vec<PhasePoint>> {
    domain.validate()?;
    Ok(Sampler::new(seed, stream).points(domain, count))
}

/// A named built-in metric with its sampling box.
#[derive(Debug, Clone)]
pub struct BuiltinMetric {
    pub name: String,
    pub metric: FundamentalFunction,
    pub domain: SampleBox,
}

/// Euclidean, polar, Randers with `b = (0.5, 0)` and quartic, all in two dimensions.
pub fn core_metrics() -> Vec<BuiltinMetric> {
    vec![
        BuiltinMetric {
            name: "euclidean".into(),
            metric: FundamentalFunction::euclidean(2),
            domain: SampleBox::cube(2, 2.0),
        },
        BuiltinMetric {
            name: "polar".into(),
            metric: FundamentalFunction::polar(),
            domain: SampleBox {
                lo: vec![0.5, -PI],
                hi: vec![3.0, PI],
            },
        },
        BuiltinMetric {
            name: "randers".into(),
            metric: FundamentalFunction::randers(vec![0.5, 0.0]).expect("‖b‖ < 1"),
            domain: SampleBox::cube(2, 2.0),
        },
        BuiltinMetric {
            name: "quartic".into(),
            metric: FundamentalFunction::quartic(2),
            domain: SampleBox::cube(2, 2.0),
        },
    ]
}

/// The core metrics plus the round sphere and a Randers metric whose wind
/// varies linearly in `x`.
pub fn all_metrics() -> Vec<BuiltinMetric> {
    let mut all = core_metrics();
    all.push(BuiltinMetric {
        name: "sphere".into(),
        metric: FundamentalFunction::sphere(),
        domain: SampleBox {
            lo: vec![0.4, -PI],
            hi: vec![PI - 0.4, PI],
        },
    });
    all.push(BuiltinMetric {
        name: "randers-gradient".into(),
        metric: FundamentalFunction::randers_general(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.5]),
            vec![0.2, 0.1],
            Some(DMatrix::from_row_slice(2, 2, &[0.1, -0.05, 0.05, 0.1])),
        )
        .expect("‖b‖ < 1"),
        domain: SampleBox::cube(2, 1.0),
    });
    all
}

/// Looks up a built-in metric by name.
pub fn builtin(name: &str) -> Option<BuiltinMetric> {
    all_metrics().into_iter().find(|m| m.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let domain = SampleBox::cube(3, 1.0);
        let a = sample_points(&domain, 50, 42, 0).unwrap();
        let b = sample_points(&domain, 50, 42, 0).unwrap();
        assert_eq!(a, b);
        let c = sample_points(&domain, 50, 42, 1).unwrap();
        assert_ne!(a, c);
        for p in &a {
            assert!(p.x().iter().all(|v| (-1.0..=1.0).contains(v)));
            let r = p.y().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((MIN_RADIUS - 1e-12..=MAX_RADIUS + 1e-12).contains(&r));
        }
    }

    #[test]
    fn catalog_metrics_are_valid() {
        for m in all_metrics() {
            let samples = sample_points(&m.domain, 50, 7, 0).unwrap();
            let report = crate::finsler::validate_finsler(&m.metric, &samples);
            assert!(report.passed(), "{}: {report:?}", m.name);
        }
    }
}
