//! The invariant suite behind `verify`.
//!
//! Every entry reduces a family of pointwise checks to a worst-case defect.
//! Boolean checks report the number of failures against a tolerance of zero.
//! Sample sets are drawn from `(seed, stream)` pairs fixed per metric, and
//! parallel evaluation collects results in sample order, so the report is
//! byte-identical across runs.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::connection::{nonlinear_connection, spray_coefficients};
use crate::dynamics::{
    el_residual, el_rhs, integrate, kahler_identity_residual, lagrangian_standard, liouville_vector_field,
    HamiltonFlow, HamiltonMode, HamiltonianSpec, IntegratorConfig, LagrangeFlow, LagrangianSpec, Method,
    SemisprayState, Trajectory,
};
use crate::einstein::{self, EinsteinParams};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::finsler::{
    lower_index, metric_tensor, validate_finsler, FundamentalFunction, PhasePoint, HOMOGENEITY_SCALES,
};
use crate::jet::{evaluate_jet, field, finite_difference_defect, ScalarField};
use crate::kahler::{
    hermitian_defect, homogeneous_almost_complex, homogeneous_lift, sasaki_lift, square_defect,
    symplectic_form_theta, hamiltonian_two_form, ModelParams,
};
use crate::linalg;
use crate::sampling::{core_metrics, sample_points, BuiltinMetric};

/// Names of every invariant the suite checks, in report order.
pub const INVARIANTS: &[&str] = &[
    "jetcalc.fd_order1",
    "jetcalc.fd_order2",
    "jetcalc.fd_order3",
    "jetcalc.symmetry",
    "jetcalc.finite_levels",
    "jetcalc.determinism",
    "finsler.phase_point_domain",
    "finsler.smoothness",
    "finsler.positivity",
    "finsler.norm_homogeneity",
    "finsler.definiteness",
    "finsler.metric_homogeneity",
    "finsler.norm_identity",
    "finsler.euler_relation",
    "finsler.metric_symmetry",
    "finsler.negative_detection",
    "connection.frame_duality",
    "connection.frame_block_structure",
    "connection.spray_homogeneity",
    "connection.connection_homogeneity",
    "connection.riemannian_christoffel",
    "connection.minkowski_vanishing",
    "kahler.model_parameter",
    "kahler.tensor_symmetry",
    "kahler.involution",
    "kahler.hermitian",
    "kahler.lift_definiteness",
    "kahler.theta_antisymmetry",
    "kahler.theta_nondegeneracy",
    "kahler.sasaki_reduction",
    "dynamics.standard_lagrangian",
    "dynamics.el_family1",
    "dynamics.hamilton_conservation",
    "dynamics.kahler_identity_dx",
    "dynamics.kahler_identity_dy_family2",
    "dynamics.straight_lines",
    "dynamics.free_particle_endpoint",
    "dynamics.trajectory_validity",
    "dynamics.rk4_observed_order",
    "dynamics.rk4_richardson",
    "dynamics.liouville_consistency",
    "einstein.integrability",
    "einstein.u_positive",
    "einstein.v_positive_negative_curvature",
    "einstein.small_t_limit",
    "einstein.inconsistency_flag",
];

/// Model constants exercised by default.
pub const DEFAULT_A_VALUES: [f64; 3] = [0.5, 1.0, 2.0];

/// Points used by checks that need fourth-order jets or integration.
const HEAVY_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub name: String,
    pub samples: usize,
    pub max_defect: f64,
    pub tolerance: f64,
    /// Evaluations that raised an error instead of producing a defect.
    pub errors: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub seed: u64,
    pub samples: usize,
    pub metrics: Vec<String>,
    pub a_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub environment: Environment,
    pub entries: Vec<Entry>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

/// Inputs of a verification run.
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub samples: usize,
    pub metrics: Vec<BuiltinMetric>,
    pub a_values: Vec<f64>,
}

impl VerifyOptions {
    /// The four core metrics and `a ∈ {0.5, 1, 2}`.
    pub fn new(seed: u64, samples: usize) -> Self {
        VerifyOptions {
            seed,
            samples,
            metrics: core_metrics(),
            a_values: DEFAULT_A_VALUES.to_vec(),
        }
    }
}

/// Accumulates pointwise outcomes into one entry.
struct Acc {
    samples: usize,
    worst: f64,
    errors: usize,
}

impl Acc {
    fn new() -> Self {
        Acc {
            samples: 0,
            worst: 0.0,
            errors: 0,
        }
    }

    fn push(&mut self, r: Result<f64>) {
        self.samples += 1;
        match r {
            Ok(v) if v.is_nan() => self.errors += 1,
            Ok(v) => self.worst = self.worst.max(v),
            Err(_) => self.errors += 1,
        }
    }

    fn extend(&mut self, rs: Vec<Result<f64>>) {
        for r in rs {
            self.push(r);
        }
    }

    /// Counts `false` outcomes as defects of one.
    fn extend_flags(&mut self, rs: Vec<Result<bool>>) {
        let mut failures = 0usize;
        for r in rs {
            self.samples += 1;
            match r {
                Ok(true) => {}
                Ok(false) => failures += 1,
                Err(_) => self.errors += 1,
            }
        }
        self.worst = self.worst.max(failures as f64);
    }

    fn finish(self, name: &str, tolerance: f64) -> Entry {
        Entry {
            name: name.to_string(),
            samples: self.samples,
            max_defect: self.worst,
            tolerance,
            errors: self.errors,
            pass: self.errors == 0 && self.worst <= tolerance,
        }
    }
}

fn par_map<T, F>(points: &[PhasePoint], f: F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(&PhasePoint) -> Result<T> + Sync + Send,
{
    points.par_iter().map(f).collect()
}

fn rel(defect: f64, scale: f64) -> f64 {
    defect / scale.abs().max(1.0)
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    linalg::max_abs(&(a - b))
}

struct Sampled<'a> {
    metric: &'a BuiltinMetric,
    points: Vec<PhasePoint>,
}

impl Sampled<'_> {
    fn heavy(&self) -> &[PhasePoint] {
        &self.points[..self.points.len().min(HEAVY_SAMPLES)]
    }
}

/// Runs the whole suite.
pub fn run_verification(opts: &VerifyOptions) -> Result<VerificationReport> {
    if opts.samples == 0 {
        return Err(Error::Parameter("verification needs at least one sample".into()));
    }
    if opts.metrics.is_empty() {
        return Err(Error::Parameter("verification needs at least one metric".into()));
    }
    let params: Vec<ModelParams> = opts
        .a_values
        .iter()
        .map(|&a| ModelParams::new(a))
        .collect::<Result<_>>()?;

    let sets: Vec<Sampled> = opts
        .metrics
        .iter()
        .enumerate()
        .map(|(i, m)| {
            Ok(Sampled {
                metric: m,
                points: sample_points(&m.domain, opts.samples, opts.seed, i as u64)?,
            })
        })
        .collect::<Result<_>>()?;

    let mut entries = Vec::with_capacity(INVARIANTS.len());
    jetcalc_entries(&sets, opts, &mut entries);
    finsler_entries(&sets, opts, &mut entries);
    connection_entries(&sets, opts, &mut entries);
    kahler_entries(&sets, &params, &mut entries);
    dynamics_entries(&sets, &params, opts, &mut entries);
    einstein_entries(&mut entries);

    let pass = entries.iter().all(|e| e.pass);
    Ok(VerificationReport {
        environment: Environment {
            seed: opts.seed,
            samples: opts.samples,
            metrics: opts.metrics.iter().map(|m| m.name.to_string()).collect(),
            a_values: opts.a_values.clone(),
        },
        entries,
        pass,
    })
}

/// Smooth test field mixing base and fiber coordinates through every
/// elementary function of the expression language.
fn mixed_field(n: usize) -> Result<Expression> {
    let src = match n {
        1 => "sin(x1) * y1^3 + exp(0.3 * x1) * y1 - sqrt(1 + y1^2)".to_string(),
        _ => "sin(x1) * y2^3 + exp(0.3 * x2) * y1 * y2 - sqrt(1 + y1^2 + y2^2) + cos(x1 - x2) * ln(2 + y1^2)".to_string(),
    };
    Expression::parse(&src, n)
}

fn jetcalc_entries(sets: &[Sampled], _opts: &VerifyOptions, out: &mut Vec<Entry>) {
    const STEPS: [f64; 3] = [1e-3, 1e-3, 3e-3];
    const TOLS: [f64; 3] = [1e-6, 1e-4, 1e-4];

    let mut fd = [Acc::new(), Acc::new(), Acc::new()];
    let mut symmetry = Acc::new();
    let mut finite = Acc::new();
    let mut determinism = Acc::new();
    for set in sets {
        let f = &set.metric.metric;
        let mixed = mixed_field(f.dim()).ok();
        let mut fields: Vec<&dyn ScalarField> = vec![];
        let norm = f.norm_field();
        let squared = f.squared_field();
        fields.push(&norm);
        fields.push(&squared);
        if let Some(m) = &mixed {
            fields.push(m);
        }
        let pts = set.heavy();
        for field in fields {
            for (k, acc) in fd.iter_mut().enumerate() {
                acc.extend(par_map(pts, |p| finite_difference_defect(field, p, k + 1, STEPS[k])));
            }
            symmetry.extend(par_map(pts, |p| evaluate_jet(field, p, 3).map(|j| symmetry_defect(&j))));
            finite.extend_flags(par_map(pts, |p| evaluate_jet(field, p, 3).map(|j| j.is_finite())));
            determinism.extend_flags(par_map(pts, |p| {
                let a = evaluate_jet(field, p, 3)?;
                let b = evaluate_jet(field, p, 3)?;
                Ok(a == b)
            }));
        }
    }
    let [o1, o2, o3] = fd;
    out.push(o1.finish("jetcalc.fd_order1", TOLS[0]));
    out.push(o2.finish("jetcalc.fd_order2", TOLS[1]));
    out.push(o3.finish("jetcalc.fd_order3", TOLS[2]));
    out.push(symmetry.finish("jetcalc.symmetry", 0.0));
    out.push(finite.finish("jetcalc.finite_levels", 0.0));
    out.push(determinism.finish("jetcalc.determinism", 0.0));
}

fn symmetry_defect(j: &crate::jet::Jet) -> f64 {
    let m = j.nvars();
    let mut worst = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            worst = worst.max((j.hessian(a, b) - j.hessian(b, a)).abs());
            for c in 0..m {
                let v = j.third(a, b, c);
                for w in [j.third(a, c, b), j.third(b, a, c), j.third(b, c, a), j.third(c, a, b), j.third(c, b, a)] {
                    worst = worst.max((v - w).abs());
                }
            }
        }
    }
    worst
}

fn finsler_entries(sets: &[Sampled], _opts: &VerifyOptions, out: &mut Vec<Entry>) {
    let mut domain = Acc::new();
    let rejected = [
        PhasePoint::new(vec![0.0, 0.0], vec![0.0, 0.0]),
        PhasePoint::new(vec![f64::NAN, 0.0], vec![1.0, 0.0]),
        PhasePoint::new(vec![0.0], vec![1.0, 0.0]),
    ];
    domain.extend_flags(rejected.into_iter().map(|r| Ok(r.is_err())).collect());
    out.push(domain.finish("finsler.phase_point_domain", 0.0));

    let mut smooth = Acc::new();
    let mut positive = Acc::new();
    let mut homogeneous = Acc::new();
    let mut definite = Acc::new();
    for set in sets {
        let report = validate_finsler(&set.metric.metric, &set.points);
        let n = set.points.len();
        for (acc, check) in [
            (&mut smooth, &report.smoothness),
            (&mut positive, &report.positivity),
            (&mut homogeneous, &report.homogeneity),
            (&mut definite, &report.definiteness),
        ] {
            acc.samples += n;
            if !check.pass {
                acc.worst += 1.0;
            }
        }
    }
    out.push(smooth.finish("finsler.smoothness", 0.0));
    out.push(positive.finish("finsler.positivity", 0.0));
    out.push(homogeneous.finish("finsler.norm_homogeneity", 0.0));
    out.push(definite.finish("finsler.definiteness", 0.0));

    let mut metric_hom = Acc::new();
    let mut identity = Acc::new();
    let mut euler = Acc::new();
    let mut symmetry = Acc::new();
    for set in sets {
        let f = &set.metric.metric;
        let pts = set.heavy();
        metric_hom.extend(par_map(pts, |p| {
            let g = metric_tensor(f, p)?.g;
            let mut worst = 0.0f64;
            for &lambda in &HOMOGENEITY_SCALES {
                let gs = metric_tensor(f, &p.scale_fiber(lambda)?)?.g;
                worst = worst.max(rel(max_abs_diff(&gs, &g), linalg::max_abs(&g)));
            }
            Ok(worst)
        }));
        identity.extend(par_map(&set.points, |p| {
            let lowered = lower_index(f, p)?;
            let f2 = f.norm(p)?.powi(2);
            Ok(rel((lowered.dot(&p.fiber()) - f2).abs(), f2))
        }));
        euler.extend(par_map(&set.points, |p| {
            let n = p.dim();
            let jet = evaluate_jet(&f.norm_field(), p, 1)?;
            let contracted: f64 = (0..n).map(|i| p.y()[i] * jet.gradient()[n + i]).sum();
            Ok(rel((contracted - jet.value()).abs(), jet.value()))
        }));
        symmetry.extend(par_map(&set.points, |p| Ok(linalg::asymmetry(&metric_tensor(f, p)?.g))));
    }
    out.push(metric_hom.finish("finsler.metric_homogeneity", 1e-9));
    out.push(identity.finish("finsler.norm_identity", 1e-10));
    out.push(euler.finish("finsler.euler_relation", 1e-10));
    out.push(symmetry.finish("finsler.metric_symmetry", 0.0));

    let mut negative = Acc::new();
    negative.extend_flags(negative_cases().into_iter().map(Ok).collect());
    out.push(negative.finish("finsler.negative_detection", 0.0));
}

/// `true` for every invalid structure that validation rejects.
fn negative_cases() -> Vec<bool> {
    let pseudo = FundamentalFunction::custom(Arc::new(field(2, |_, y| (y[0].square() - y[1].square()).sqrt())));
    let wide = FundamentalFunction::randers_unchecked(DMatrix::identity(2, 2), vec![1.5, 0.0], None).expect("square alpha");
    let box2 = crate::sampling::SampleBox::cube(2, 1.0);
    let pts = sample_points(&box2, 200, 0, 99).expect("valid box");
    vec![
        !validate_finsler(&pseudo, &pts).passed(),
        !validate_finsler(&wide, &pts).passed(),
    ]
}

fn connection_entries(sets: &[Sampled], _opts: &VerifyOptions, out: &mut Vec<Entry>) {
    let mut duality = Acc::new();
    let mut blocks = Acc::new();
    let mut spray_hom = Acc::new();
    let mut conn_hom = Acc::new();
    let mut vanishing = Acc::new();
    for set in sets {
        let f = &set.metric.metric;
        let pts = set.heavy();
        let frames = par_map(pts, |p| nonlinear_connection(f, p).map(|c| (c.coefficients.clone(), c.frame())));
        for r in frames {
            match r {
                Ok((n_ij, frame)) => {
                    let n = n_ij.nrows();
                    duality.push(Ok(max_abs_diff(&frame.pairing(), &DMatrix::identity(2 * n, 2 * n))));
                    blocks.push(Ok(frame_block_defect(&n_ij, &frame)));
                }
                Err(e) => {
                    duality.push(Err(e));
                    blocks.push(Err(Error::Parameter("connection unavailable".into())));
                }
            }
        }
        spray_hom.extend(par_map(pts, |p| {
            let g0 = spray_coefficients(f, p)?;
            let mut worst = 0.0f64;
            for lambda in [0.5, 2.0] {
                let gl = spray_coefficients(f, &p.scale_fiber(lambda)?)?;
                let expected = &g0 * (lambda * lambda);
                worst = worst.max(rel((gl - &expected).amax(), expected.amax()));
            }
            Ok(worst)
        }));
        conn_hom.extend(par_map(pts, |p| {
            let n0 = nonlinear_connection(f, p)?.coefficients;
            let mut worst = 0.0f64;
            for lambda in [0.5, 2.0] {
                let nl = nonlinear_connection(f, &p.scale_fiber(lambda)?)?.coefficients;
                let expected = &n0 * lambda;
                worst = worst.max(rel(max_abs_diff(&nl, &expected), linalg::max_abs(&expected)));
            }
            Ok(worst)
        }));
        if f.is_minkowski() {
            vanishing.extend(par_map(pts, |p| {
                let g = spray_coefficients(f, p)?;
                let n = nonlinear_connection(f, p)?.coefficients;
                Ok(g.amax().max(linalg::max_abs(&n)))
            }));
        }
    }
    out.push(duality.finish("connection.frame_duality", 0.0));
    out.push(blocks.finish("connection.frame_block_structure", 0.0));
    out.push(spray_hom.finish("connection.spray_homogeneity", 1e-9));
    out.push(conn_hom.finish("connection.connection_homogeneity", 1e-9));

    let mut christoffel = Acc::new();
    for (idx, (f, domain, oracle)) in riemannian_oracles().into_iter().enumerate() {
        let pts = sample_points(&domain, HEAVY_SAMPLES, 0, 100 + idx as u64).expect("valid box");
        christoffel.extend(par_map(&pts, |p| {
            let n = nonlinear_connection(f, p)?.coefficients;
            let expected = oracle.connection(p.x(), p.y());
            Ok(rel(max_abs_diff(&n, &expected), linalg::max_abs(&expected)))
        }));
    }
    out.push(christoffel.finish("connection.riemannian_christoffel", 1e-9));

    // Minkowski metrics are always exercised, whatever the configured set.
    for (idx, f) in [
        FundamentalFunction::euclidean(3),
        FundamentalFunction::randers(vec![0.3, -0.4]).expect("‖b‖ < 1"),
        FundamentalFunction::quartic(2),
    ]
    .iter()
    .enumerate()
    {
        let pts = sample_points(&crate::sampling::SampleBox::cube(f.dim(), 2.0), 50, 0, 200 + idx as u64)
            .expect("valid box");
        vanishing.extend(par_map(&pts, |p| {
            let g = spray_coefficients(f, p)?;
            let n = nonlinear_connection(f, p)?.coefficients;
            Ok(g.amax().max(linalg::max_abs(&n)))
        }));
    }
    out.push(vanishing.finish("connection.minkowski_vanishing", 0.0));
}

/// Frame rows `(I | −Nᵀ)`, `(0 | I)`; coframe rows `(I | 0)`, `(N | I)`.
fn frame_block_defect(n_ij: &DMatrix<f64>, frame: &crate::connection::AdaptedFrame) -> f64 {
    let n = n_ij.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let zero = DMatrix::<f64>::zeros(n, n);
    let expected_frame = block(&id, &(-n_ij.transpose()), &zero, &id);
    let expected_coframe = block(&id, &zero, n_ij, &id);
    max_abs_diff(&frame.frame, &expected_frame).max(max_abs_diff(&frame.coframe, &expected_coframe))
}

fn block(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(c);
    m.view_mut((n, n), (n, n)).copy_from(d);
    m
}

/// Riemannian metric with hand-coded first derivatives, from which the
/// Christoffel symbols are assembled directly.
pub struct ChristoffelOracle {
    metric: fn(&[f64]) -> DMatrix<f64>,
    /// `∂_k g_ij`, indexed `[k]`.
    derivative: fn(&[f64]) -> Vec<DMatrix<f64>>,
}

impl ChristoffelOracle {
    /// `Γ^i_jk = ½ g^il (∂_j g_lk + ∂_k g_lj − ∂_l g_jk)`.
    pub fn christoffel(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let g = (self.metric)(x);
        let gi = g.clone().try_inverse().expect("metric is invertible");
        let dg = (self.derivative)(x);
        let n = g.nrows();
        (0..n)
            .map(|i| {
                DMatrix::from_fn(n, n, |j, k| {
                    0.5 * (0..n)
                        .map(|l| gi[(i, l)] * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]))
                        .sum::<f64>()
                })
            })
            .collect()
    }

    /// `N^i_j = Γ^i_jk y^k`.
    pub fn connection(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let gamma = self.christoffel(x);
        let n = y.len();
        DMatrix::from_fn(n, n, |i, j| (0..n).map(|k| gamma[i][(j, k)] * y[k]).sum())
    }
}

pub fn polar_oracle() -> ChristoffelOracle {
    ChristoffelOracle {
        metric: |x| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, x[0] * x[0]]),
        derivative: |x| {
            vec![
                DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0 * x[0]]),
                DMatrix::zeros(2, 2),
            ]
        },
    }
}

pub fn sphere_oracle() -> ChristoffelOracle {
    ChristoffelOracle {
        metric: |x| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, x[0].sin().powi(2)]),
        derivative: |x| {
            vec![
                DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0 * x[0].sin() * x[0].cos()]),
                DMatrix::zeros(2, 2),
            ]
        },
    }
}

fn riemannian_oracles() -> Vec<(&'static FundamentalFunction, crate::sampling::SampleBox, ChristoffelOracle)> {
    use std::sync::OnceLock;
    static POLAR: OnceLock<FundamentalFunction> = OnceLock::new();
    static SPHERE: OnceLock<FundamentalFunction> = OnceLock::new();
    vec![
        (
            POLAR.get_or_init(FundamentalFunction::polar),
            crate::sampling::SampleBox {
                lo: vec![0.5, -PI],
                hi: vec![3.0, PI],
            },
            polar_oracle(),
        ),
        (
            SPHERE.get_or_init(FundamentalFunction::sphere),
            crate::sampling::SampleBox {
                lo: vec![0.4, -PI],
                hi: vec![PI - 0.4, PI],
            },
            sphere_oracle(),
        ),
    ]
}

fn kahler_entries(sets: &[Sampled], params: &[ModelParams], out: &mut Vec<Entry>) {
    let mut model = Acc::new();
    model.extend_flags(
        [0.0, -1.0, f64::NAN, f64::INFINITY]
            .into_iter()
            .map(|a| Ok(ModelParams::new(a).is_err()))
            .collect(),
    );
    out.push(model.finish("kahler.model_parameter", 0.0));

    let mut tensors = Acc::new();
    let mut involution = Acc::new();
    let mut hermitian = Acc::new();
    let mut definite = Acc::new();
    let mut antisym = Acc::new();
    let mut nondegenerate = Acc::new();
    let mut reduction = Acc::new();
    for set in sets {
        let f = &set.metric.metric;
        for m in params {
            tensors.extend(par_map(set.heavy(), |p| {
                let s = sasaki_lift(f, p)?;
                let h = homogeneous_lift(f, p, m)?;
                let phi = hamiltonian_two_form(f, p, m)?;
                let theta = symplectic_form_theta(f, p)?;
                Ok(s.asymmetry()
                    .max(h.asymmetry())
                    .max(phi.antisymmetry_defect())
                    .max(theta.antisymmetry_defect()))
            }));
            involution.extend(par_map(&set.points, |p| {
                Ok(square_defect(&homogeneous_almost_complex(f, p, m)?))
            }));
            hermitian.extend(par_map(&set.points, |p| hermitian_defect(f, p, m)));
            definite.extend_flags(par_map(set.heavy(), |p| {
                Ok(sasaki_lift(f, p)?.is_positive_definite() && homogeneous_lift(f, p, m)?.is_positive_definite())
            }));
        }
        antisym.extend(par_map(&set.points, |p| Ok(symplectic_form_theta(f, p)?.antisymmetry_defect())));
        nondegenerate.extend_flags(par_map(&set.points, |p| {
            let sv = symplectic_form_theta(f, p)?.full().singular_values();
            let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &s| (l.min(s), h.max(s)));
            Ok(hi > 0.0 && lo / hi > 1e-12)
        }));
        reduction.extend(par_map(&set.points, |p| {
            let m = ModelParams::new(f.norm(p)?)?;
            let s = sasaki_lift(f, p)?.full();
            let h = homogeneous_lift(f, p, &m)?.full();
            Ok(max_abs_diff(&s, &h))
        }));
    }
    out.push(tensors.finish("kahler.tensor_symmetry", 0.0));
    out.push(involution.finish("kahler.involution", 1e-12));
    out.push(hermitian.finish("kahler.hermitian", 1e-10));
    out.push(definite.finish("kahler.lift_definiteness", 0.0));
    out.push(antisym.finish("kahler.theta_antisymmetry", 0.0));
    out.push(nondegenerate.finish("kahler.theta_nondegeneracy", 0.0));
    out.push(reduction.finish("kahler.sasaki_reduction", 0.0));
}

/// `½F² + ½ y¹x² − 0.3 cos x¹`: regular, with genuine `x` dependence.
fn test_lagrangian(f: &FundamentalFunction) -> LagrangianSpec {
    let f = f.clone();
    LagrangianSpec::new(Arc::new(field(f.dim(), move |x, y| {
        let mut l = f.squared_jet(x, y) * 0.5 - x[0].cos() * 0.3;
        if x.len() > 1 {
            l = l + &y[0] * &x[1] * 0.5;
        }
        l
    })))
}

/// `½F²`, the free particle of the metric itself.
fn half_energy(f: &FundamentalFunction) -> LagrangianSpec {
    let f = f.clone();
    LagrangianSpec::new(Arc::new(field(f.dim(), move |x, y| f.squared_jet(x, y) * 0.5)))
}

fn free_particle(n: usize) -> LagrangianSpec {
    lagrangian_standard(vec![1.0; n], 0.0, Arc::new(field(n, |x, _| x[0].lift(0.0)))).expect("valid masses")
}

/// `L = ½|y|² − g x²` on the Euclidean plane.
pub fn projectile() -> LagrangeFlow {
    LagrangeFlow {
        lagrangian: lagrangian_standard(vec![1.0, 1.0], 9.8, Arc::new(field(2, |x, _| x[1].clone())))
            .expect("valid masses"),
        metric: FundamentalFunction::euclidean(2),
        params: ModelParams::default(),
    }
}

/// Harmonic `H = ½(|x|² + |y|²)`.
pub fn harmonic_hamiltonian(n: usize) -> HamiltonianSpec {
    HamiltonianSpec::new(Arc::new(field(n, |x, y| {
        let mut h = x[0].lift(0.0);
        for (xi, yi) in x.iter().zip(y) {
            h = h + xi.square() * 0.5 + yi.square() * 0.5;
        }
        h
    })))
}

/// Worst relative drift of `H` over `t ∈ [0, 10]`.
pub fn hamilton_drift(flow: &HamiltonFlow, p0: &PhasePoint, tol: f64) -> Result<f64> {
    let tr = integrate(flow, p0, 0.0, 10.0, &IntegratorConfig::adaptive(tol))?;
    let h0 = flow.hamiltonian.value(p0)?;
    let drift = crate::dynamics::conserved_quantity_drift(&tr, |p| flow.hamiltonian.value(p))?;
    Ok(drift / h0.abs())
}

/// Endpoint of an RK4 run of `flow` with step `h`.
fn rk4_endpoint(flow: &LagrangeFlow, p0: &PhasePoint, t1: f64, h: f64) -> Result<DVector<f64>> {
    let tr = integrate(flow, p0, 0.0, t1, &IntegratorConfig::fixed(Method::Rk4Fixed, h))?;
    let last = tr.last().expect("trajectory has samples");
    Ok(DVector::from_vec(last.point.state()))
}

/// Richardson ratio `|e(h) − e(h/2)| / |e(h/2) − e(h/4)|` of RK4 endpoints and
/// the corresponding observed order `log2` of the ratio.
pub fn rk4_richardson(flow: &LagrangeFlow, p0: &PhasePoint, t1: f64, h: f64) -> Result<(f64, f64)> {
    let a = rk4_endpoint(flow, p0, t1, h)?;
    let b = rk4_endpoint(flow, p0, t1, h / 2.0)?;
    let c = rk4_endpoint(flow, p0, t1, h / 4.0)?;
    let ratio = (&a - &b).norm() / (&b - &c).norm();
    Ok((ratio, ratio.log2()))
}

fn trajectory_valid(tr: &Trajectory) -> bool {
    tr.samples.windows(2).all(|w| w[1].t > w[0].t) && tr.samples.iter().all(|s| s.point.y().iter().any(|&v| v != 0.0))
}

fn dynamics_entries(sets: &[Sampled], params: &[ModelParams], opts: &VerifyOptions, out: &mut Vec<Entry>) {
    let mut standard = Acc::new();
    {
        let lag = lagrangian_standard(
            vec![1.0, 2.0],
            9.8,
            Arc::new(Expression::parse("x2 + 0.5 * x1^2", 2).expect("valid expression")),
        )
        .expect("valid masses");
        let pts = sample_points(&crate::sampling::SampleBox::cube(2, 2.0), 50, opts.seed, 300).expect("valid box");
        standard.extend(par_map(&pts, |p| {
            let (x, y) = (p.x(), p.y());
            let expected = 0.5 * (y[0] * y[0] + 2.0 * y[1] * y[1]) - 1.5 * 9.8 * (x[1] + 0.5 * x[0] * x[0]);
            Ok(rel((lag.value(p)? - expected).abs(), expected))
        }));
    }
    out.push(standard.finish("dynamics.standard_lagrangian", 1e-12));

    let mut family1 = Acc::new();
    let mut liouville = Acc::new();
    for set in sets {
        let f = &set.metric.metric;
        let lag = test_lagrangian(f);
        for m in params {
            family1.extend(par_map(set.heavy(), |p| {
                let acc = el_rhs(&lag, f, p, m)?;
                let r = el_residual(&lag, f, p, acc.as_slice(), m)?;
                let ly = evaluate_jet(lag.field(), p, 1)?;
                let n = p.dim();
                let ly_norm = (0..n).map(|i| ly.gradient()[n + i].powi(2)).sum::<f64>().sqrt();
                Ok(DVector::from_vec(r.family1).norm() / (1.0 + ly_norm))
            }));
            liouville.extend(par_map(set.heavy(), |p| {
                let xi = SemisprayState::new(p.clone(), p.x().iter().map(|v| v - 0.5).collect())?;
                let v = liouville_vector_field(&xi, f, m)?;
                let direct = homogeneous_almost_complex(f, p, m)?.apply(&xi.components());
                Ok((v - direct).amax())
            }));
        }
    }
    out.push(family1.finish("dynamics.el_family1", 1e-10));

    let mut conservation = Acc::new();
    for metric in [FundamentalFunction::euclidean(2), FundamentalFunction::randers(vec![0.5, 0.0]).expect("‖b‖ < 1")] {
        let flow = HamiltonFlow {
            hamiltonian: harmonic_hamiltonian(2),
            metric,
            params: ModelParams::default(),
            mode: HamiltonMode::Plain,
        };
        let p0 = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 1.0]).expect("nonzero fiber");
        conservation.push(hamilton_drift(&flow, &p0, 1e-10));
    }
    out.push(conservation.finish("dynamics.hamilton_conservation", 1e-8));

    let mut identity_dx = Acc::new();
    let mut identity_dy = Acc::new();
    let mut validity = Acc::new();
    for (k, (lag, f, p0)) in identity_systems().into_iter().enumerate() {
        let m = params[k % params.len()];
        let flow = LagrangeFlow {
            lagrangian: lag.clone(),
            metric: f.clone(),
            params: m,
        };
        let tr = integrate(&flow, &p0, 0.0, 1.0, &IntegratorConfig::fixed(Method::Rk4Fixed, 0.05));
        let tr = match tr {
            Ok(tr) => tr,
            Err(e) => {
                identity_dx.push(Err(e));
                identity_dy.push(Err(Error::Parameter("trajectory unavailable".into())));
                validity.extend_flags(vec![Ok(false)]);
                continue;
            }
        };
        validity.extend_flags(vec![Ok(trajectory_valid(&tr))]);
        let pts: Vec<PhasePoint> = tr.samples.iter().map(|s| s.point.clone()).collect();
        let residuals = par_map(&pts, |p| {
            let acc = el_rhs(&lag, &f, p, &m)?;
            kahler_identity_residual(&lag, &f, p, acc.as_slice(), &m)
        });
        for r in residuals {
            match r {
                Ok(r) => {
                    identity_dx.push(Ok(DVector::from_vec(r.dx).amax()));
                    let dy = DVector::from_vec(r.dy) + DVector::from_vec(r.el.family2);
                    identity_dy.push(Ok(dy.amax()));
                }
                Err(e) => {
                    identity_dx.push(Err(e));
                    identity_dy.push(Err(Error::Parameter("residual unavailable".into())));
                }
            }
        }
    }
    out.push(identity_dx.finish("dynamics.kahler_identity_dx", 1e-7));
    out.push(identity_dy.finish("dynamics.kahler_identity_dy_family2", 1e-7));

    let mut straight = Acc::new();
    for f in [
        FundamentalFunction::euclidean(2),
        FundamentalFunction::randers(vec![0.5, 0.0]).expect("‖b‖ < 1"),
        FundamentalFunction::quartic(2),
    ] {
        let lag = half_energy(&f);
        let pts = sample_points(&crate::sampling::SampleBox::cube(2, 2.0), 50, opts.seed, 400).expect("valid box");
        for m in params {
            straight.extend(par_map(&pts, |p| Ok(el_rhs(&lag, &f, p, m)?.amax())));
        }
    }
    out.push(straight.finish("dynamics.straight_lines", 0.0));

    let mut endpoint = Acc::new();
    for method in [Method::Rk4Fixed, Method::Rk45Adaptive, Method::ImplicitMidpoint] {
        let flow = LagrangeFlow {
            lagrangian: free_particle(2),
            metric: FundamentalFunction::euclidean(2),
            params: ModelParams::default(),
        };
        let p0 = PhasePoint::new(vec![0.0, 0.0], vec![1.0, 0.0]).expect("nonzero fiber");
        let cfg = IntegratorConfig {
            method,
            ..IntegratorConfig::default()
        };
        let r = integrate(&flow, &p0, 0.0, 1.0, &cfg).map(|tr| {
            validity.extend_flags(vec![Ok(trajectory_valid(&tr))]);
            let last = tr.last().expect("trajectory has samples");
            (last.point.x()[0] - 1.0).abs().max(last.point.x()[1].abs())
        });
        endpoint.push(r);
    }
    out.push(endpoint.finish("dynamics.free_particle_endpoint", 1e-12));
    out.push(validity.finish("dynamics.trajectory_validity", 0.0));

    let p0 = PhasePoint::new(vec![0.0, 0.0], vec![3.0, 4.0]).expect("nonzero fiber");
    let richardson = rk4_richardson(&projectile(), &p0, 1.0, 0.1);
    let mut order = Acc::new();
    let mut ratio = Acc::new();
    match richardson {
        Ok((r, p)) => {
            order.push(Ok((3.8 - p).max(0.0)));
            ratio.push(Ok((r - 16.0).abs()));
        }
        Err(e) => {
            order.push(Err(e));
            ratio.push(Err(Error::Parameter("richardson run failed".into())));
        }
    }
    out.push(order.finish("dynamics.rk4_observed_order", 0.0));
    out.push(ratio.finish("dynamics.rk4_richardson", 4.0));
    out.push(liouville.finish("dynamics.liouville_consistency", 0.0));
}

/// Lagrangian systems whose trajectories are checked against `i_ξΦ_L = dE_L`.
fn identity_systems() -> Vec<(LagrangianSpec, FundamentalFunction, PhasePoint)> {
    let polar = FundamentalFunction::polar();
    let randers = crate::sampling::builtin("randers-gradient").expect("catalog entry").metric;
    let euclid = FundamentalFunction::euclidean(2);
    vec![
        (
            half_energy(&polar),
            polar,
            PhasePoint::new(vec![1.5, 0.2], vec![0.3, 0.4]).expect("nonzero fiber"),
        ),
        (
            test_lagrangian(&randers),
            randers,
            PhasePoint::new(vec![0.1, -0.2], vec![0.8, 0.5]).expect("nonzero fiber"),
        ),
        (
            projectile().lagrangian,
            euclid,
            PhasePoint::new(vec![0.0, 0.0], vec![3.0, 4.0]).expect("nonzero fiber"),
        ),
    ]
}

fn einstein_entries(out: &mut Vec<Entry>) {
    let a_values = [1.0, 2.0, 5.0];
    let c_values = [-2.0, -1.0, -0.5, 0.5, 1.0];
    let rows = einstein::sweep(&a_values, &c_values, &einstein::t_grid(1, 300));

    let mut defect = Acc::new();
    let mut u_pos = Acc::new();
    let mut v_pos = Acc::new();
    let mut u_flags = vec![];
    let mut v_flags = vec![];
    for r in rows.iter().filter(|r| r.domain_ok) {
        defect.push(Ok(r.defect));
        u_flags.push(Ok(r.u > 0.0));
        if r.c < 0.0 {
            v_flags.push(Ok(r.v > 0.0));
        }
    }
    u_pos.extend_flags(u_flags);
    v_pos.extend_flags(v_flags);
    out.push(defect.finish("einstein.integrability", 1e-9));
    out.push(u_pos.finish("einstein.u_positive", 0.0));
    out.push(v_pos.finish("einstein.v_positive_negative_curvature", 0.0));

    let mut limit = Acc::new();
    for &a in &a_values {
        for &c in &c_values {
            limit.push(
                EinsteinParams::new(a, c, 1e-8)
                    .and_then(|p| einstein::v_function(&p))
                    .map(|v| (v + 3.0 * c / (2.0 * a)).abs()),
            );
        }
    }
    out.push(limit.finish("einstein.small_t_limit", 1e-6));

    let mut flag = Acc::new();
    flag.extend_flags(vec![EinsteinParams::new(2.0, 1.0, 3.0).map(|p| einstein::domain_check(&p).inconsistent)]);
    out.push(flag.finish("einstein.inconsistency_flag", 0.0));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_covers_every_invariant_once() {
        let report = run_verification(&VerifyOptions::new(42, 20)).unwrap();
        let names: Vec<&str> = report.entries.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, INVARIANTS);
        for e in &report.entries {
            assert_eq!(e.pass, e.errors == 0 && e.max_defect <= e.tolerance, "{}", e.name);
        }
        let failing: Vec<_> = report.failures().collect();
        assert!(failing.is_empty(), "{failing:#?}");
    }

    #[test]
    fn christoffel_oracle_at_known_point() {
        let n = polar_oracle().connection(&[2.0, 0.0], &[0.0, 1.0]);
        assert_eq!(n[(0, 1)], -2.0);
        assert_eq!(n[(1, 0)], 0.5);
    }
}
