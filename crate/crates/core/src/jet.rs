//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] carries the value of a scalar together with every partial
//! derivative with respect to `m` independent variables, up to a fixed order
//! (at most [`MAX_ORDER`]). Arithmetic on jets propagates all derivative levels
//! exactly, so any field written against [`Jet`] can be differentiated to
//! machine precision.
//!
//! Phase coordinates are numbered `x^1..x^n` as variables `0..n` and
//! `y^1..y^n` as variables `n..2n`.
//!
//! Derivative tensors are stored densely (`m^k` entries for order `k`) but only
//! computed on sorted multi-indices and then copied to every permutation, so
//! symmetry of the Hessian and of higher tensors is exact.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::finsler::PhasePoint;

/// Highest derivative order a jet can carry.
///
/// Fields are only ever asked for order 3 directly; order 4 is needed when the
/// nonlinear connection itself has to be differentiated.
pub const MAX_ORDER: usize = 4;

struct OrderTable {
    tuples: Vec<[u16; MAX_ORDER]>,
    perms: Vec<Vec<u32>>,
}

struct Layout {
    m: usize,
    tables: [OnceLock<OrderTable>; MAX_ORDER],
}

impl Layout {
    fn table(&self, k: usize) -> &OrderTable {
        self.tables[k - 1].get_or_init(|| build_table(self.m, k))
    }
}

fn layout(m: usize) -> &'static Layout {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static Layout>>> = OnceLock::new();
    let mut cache = CACHE
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .expect("jet layout cache poisoned");
    cache.entry(m).or_insert_with(|| {
        Box::leak(Box::new(Layout {
            m,
            tables: Default::default(),
        }))
    })
}

fn build_table(m: usize, k: usize) -> OrderTable {
    let mut tuples = Vec::new();
    let mut perms = Vec::new();
    let mut current = [0u16; MAX_ORDER];
    sorted_tuples(m, k, 0, 0, &mut current, &mut tuples);
    for t in &tuples {
        let mut flats: Vec<u32> = Vec::new();
        permute(&t[..k], &mut Vec::with_capacity(k), &mut vec![false; k], m, &mut flats);
        flats.sort_unstable();
        flats.dedup();
        perms.push(flats);
    }
    OrderTable { tuples, perms }
}

fn sorted_tuples(
    m: usize,
    k: usize,
    pos: usize,
    start: usize,
    current: &mut [u16; MAX_ORDER],
    out: &mut Vec<[u16; MAX_ORDER]>,
) {
    if pos == k {
        out.push(*current);
        return;
    }
    for v in start..m {
        current[pos] = v as u16;
        sorted_tuples(m, k, pos + 1, v, current, out);
    }
}

fn permute(items: &[u16], acc: &mut Vec<u16>, used: &mut [bool], m: usize, out: &mut Vec<u32>) {
    if acc.len() == items.len() {
        out.push(flat_index(acc.iter().copied(), m) as u32);
        return;
    }
    for i in 0..items.len() {
        if !used[i] {
            used[i] = true;
            acc.push(items[i]);
            permute(items, acc, used, m, out);
            acc.pop();
            used[i] = false;
        }
    }
}

fn flat_index(idx: impl Iterator<Item = u16>, m: usize) -> usize {
    idx.fold(0usize, |acc, v| acc * m + v as usize)
}

/// Set partitions of `{0..k}` as lists of position masks, for `k <= MAX_ORDER`.
fn partitions(k: usize) -> &'static [Vec<u8>] {
    static PARTS: OnceLock<Vec<Vec<Vec<u8>>>> = OnceLock::new();
    let all = PARTS.get_or_init(|| {
        (0..=MAX_ORDER)
            .map(|k| {
                let mut out = Vec::new();
                partition_rec(0, k, &mut Vec::new(), &mut out);
                out
            })
            .collect()
    });
    &all[k]
}

fn partition_rec(pos: usize, k: usize, blocks: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos == k {
        out.push(blocks.clone());
        return;
    }
    for b in 0..blocks.len() {
        blocks[b] |= 1 << pos;
        partition_rec(pos + 1, k, blocks, out);
        blocks[b] &= !(1 << pos);
    }
    blocks.push(1 << pos);
    partition_rec(pos + 1, k, blocks, out);
    blocks.pop();
}

/// Value plus all partial derivatives up to `order` of a scalar quantity.
#[derive(Clone)]
pub struct Jet {
    value: f64,
    order: usize,
    layout: &'static Layout,
    levels: Vec<Vec<f64>>,
}

/// Bitwise equality of value and every stored partial.
impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order
            && self.layout.m == other.layout.m
            && self.value.to_bits() == other.value.to_bits()
            && self.levels.len() == other.levels.len()
            && self
                .levels
                .iter()
                .zip(&other.levels)
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(u, v)| u.to_bits() == v.to_bits()))
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("value", &self.value)
            .field("order", &self.order)
            .field("nvars", &self.layout.m)
            .field("gradient", &self.gradient())
            .finish()
    }
}

impl Jet {
    pub fn constant(value: f64, nvars: usize, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let layout = layout(nvars);
        let levels = (1..=order).map(|k| vec![0.0; nvars.pow(k as u32)]).collect();
        Jet {
            value,
            order,
            layout,
            levels,
        }
    }

    /// Independent variable number `index` out of `nvars`, currently at `value`.
    pub fn variable(value: f64, index: usize, nvars: usize, order: usize) -> Self {
        assert!(index < nvars, "variable index {index} out of range");
        let mut jet = Jet::constant(value, nvars, order);
        if order >= 1 {
            jet.levels[0][index] = 1.0;
        }
        jet
    }

    /// A constant with the same variable count and order as `self`.
    pub fn lift(&self, value: f64) -> Jet {
        Jet::constant(value, self.layout.m, self.order)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nvars(&self) -> usize {
        self.layout.m
    }

    /// First derivatives; empty for an order-0 jet.
    pub fn gradient(&self) -> &[f64] {
        self.levels.first().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Dense storage of the order-`k` derivative tensor (row-major, `m^k` entries).
    pub fn level(&self, k: usize) -> Option<&[f64]> {
        match k {
            0 => None,
            k if k <= self.order => Some(&self.levels[k - 1]),
            _ => None,
        }
    }

    /// Second derivative `∂²/∂z_a∂z_b`. Panics if the jet has order < 2.
    pub fn hessian(&self, a: usize, b: usize) -> f64 {
        self.levels[1][a * self.layout.m + b]
    }

    /// Third derivative `∂³/∂z_a∂z_b∂z_c`. Panics if the jet has order < 3.
    pub fn third(&self, a: usize, b: usize, c: usize) -> f64 {
        let m = self.layout.m;
        self.levels[2][(a * m + b) * m + c]
    }

    /// Partial derivative for the multi-index `idx`; the empty index gives the value.
    pub fn partial(&self, idx: &[usize]) -> Result<f64> {
        if idx.len() > self.order {
            return Err(Error::Order {
                requested: idx.len(),
                available: self.order,
            });
        }
        if let Some(&bad) = idx.iter().find(|&&v| v >= self.layout.m) {
            return Err(Error::Parameter(format!(
                "variable index {bad} out of range for {} variables",
                self.layout.m
            )));
        }
        if idx.is_empty() {
            return Ok(self.value);
        }
        let flat = flat_index(idx.iter().map(|&v| v as u16), self.layout.m);
        Ok(self.levels[idx.len() - 1][flat])
    }

    /// The jet of `∂self/∂z_var`, one order lower.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let m = self.layout.m;
        let value = self.levels[0][var];
        let levels = (1..self.order)
            .map(|k| {
                let len = m.pow(k as u32);
                self.levels[k][var * len..(var + 1) * len].to_vec()
            })
            .collect();
        Jet {
            value,
            order: self.order - 1,
            layout: self.layout,
            levels,
        }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            value: self.value,
            order,
            layout: self.layout,
            levels: self.levels[..order].to_vec(),
        }
    }

    /// True when the value and every populated derivative are finite.
    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.levels.iter().flatten().all(|v| v.is_finite())
    }

    fn coeff(&self, tuple: &[u16], mask: u32) -> f64 {
        let k = mask.count_ones() as usize;
        if k == 0 {
            return self.value;
        }
        let m = self.layout.m;
        let mut flat = 0usize;
        for (pos, &v) in tuple.iter().enumerate() {
            if mask & (1 << pos) != 0 {
                flat = flat * m + v as usize;
            }
        }
        self.levels[k - 1][flat]
    }

    fn check_compatible(&self, other: &Jet) {
        assert_eq!(
            self.layout.m, other.layout.m,
            "jets over different variable counts"
        );
    }

    fn zip_linear(&self, other: &Jet, alpha: f64, beta: f64) -> Jet {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let levels = (0..order)
            .map(|k| {
                self.levels[k]
                    .iter()
                    .zip(&other.levels[k])
                    .map(|(a, b)| alpha * a + beta * b)
                    .collect()
            })
            .collect();
        Jet {
            value: alpha * self.value + beta * other.value,
            order,
            layout: self.layout,
            levels,
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let m = self.layout.m;
        let mut levels = Vec::with_capacity(order);
        for k in 1..=order {
            let table = self.layout.table(k);
            let mut out = vec![0.0; m.pow(k as u32)];
            let full = (1u32 << k) - 1;
            for (tuple, perms) in table.tuples.iter().zip(&table.perms) {
                let t = &tuple[..k];
                let mut s = 0.0;
                for mask in 0..=full {
                    s += self.coeff(t, mask) * other.coeff(t, full & !mask);
                }
                for &p in perms {
                    out[p as usize] = s;
                }
            }
            levels.push(out);
        }
        Jet {
            value: self.value * other.value,
            order,
            layout: self.layout,
            levels,
        }
    }

    /// `φ(self)` given `φ` and its first [`MAX_ORDER`] derivatives at `self.value()`.
    pub fn compose(&self, phi: [f64; MAX_ORDER + 1]) -> Jet {
        let m = self.layout.m;
        let mut levels = Vec::with_capacity(self.order);
        for k in 1..=self.order {
            let table = self.layout.table(k);
            let parts = partitions(k);
            let mut out = vec![0.0; m.pow(k as u32)];
            for (tuple, perms) in table.tuples.iter().zip(&table.perms) {
                let t = &tuple[..k];
                let mut s = 0.0;
                for blocks in parts {
                    let mut term = phi[blocks.len()];
                    for &b in blocks {
                        term *= self.coeff(t, b as u32);
                    }
                    s += term;
                }
                for &p in perms {
                    out[p as usize] = s;
                }
            }
            levels.push(out);
        }
        Jet {
            value: phi[0],
            order: self.order,
            layout: self.layout,
            levels,
        }
    }

    pub fn recip(&self) -> Jet {
        let x = self.value;
        let r = 1.0 / x;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r.powi(4), 24.0 * r.powi(5)])
    }

    pub fn sqrt(&self) -> Jet {
        let x = self.value;
        let s = x.sqrt();
        self.compose([
            s,
            0.5 / s,
            -0.25 / (s * x),
            0.375 / (s * x * x),
            -0.9375 / (s * x * x * x),
        ])
    }

    pub fn powi(&self, n: i32) -> Jet {
        let x = self.value;
        let mut phi = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, slot) in phi.iter_mut().enumerate() {
            let e = n - k as i32;
            *slot = if coef == 0.0 { 0.0 } else { coef * x.powi(e) };
            coef *= e as f64;
        }
        self.compose(phi)
    }

    pub fn powf(&self, p: f64) -> Jet {
        let x = self.value;
        let mut phi = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, slot) in phi.iter_mut().enumerate() {
            *slot = coef * x.powf(p - k as f64);
            coef *= p - k as f64;
        }
        self.compose(phi)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value.exp();
        self.compose([e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Jet {
        let x = self.value;
        let r = 1.0 / x;
        self.compose([x.ln(), r, -r * r, 2.0 * r * r * r, -6.0 * r.powi(4)])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.compose([s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.compose([c, -s, -c, s, c])
    }

    pub fn tan(&self) -> Jet {
        &self.sin() / &self.cos()
    }

    pub fn square(&self) -> Jet {
        self.product(self)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip_linear(b, 1.0, 1.0));
jet_binop!(Sub, sub, |a, b| a.zip_linear(b, 1.0, -1.0));
jet_binop!(Mul, mul, |a, b| a.product(b));
jet_binop!(Div, div, |a, b| a.product(&b.recip()));

macro_rules! jet_scalar_op {
    ($trait:ident, $method:ident, $jet_f64:expr, $f64_jet:expr) => {
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let f: fn(&Jet, f64) -> Jet = $jet_f64;
                f(self, rhs)
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<&Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(f64, &Jet) -> Jet = $f64_jet;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

fn scaled(j: &Jet, s: f64) -> Jet {
    Jet {
        value: j.value * s,
        order: j.order,
        layout: j.layout,
        levels: j
            .levels
            .iter()
            .map(|l| l.iter().map(|v| v * s).collect())
            .collect(),
    }
}

fn shifted(j: &Jet, c: f64) -> Jet {
    let mut out = j.clone();
    out.value += c;
    out
}

jet_scalar_op!(Add, add, |j, c| shifted(j, c), |c, j| shifted(j, c));
jet_scalar_op!(Sub, sub, |j, c| shifted(j, -c), |c, j| shifted(&scaled(j, -1.0), c));
jet_scalar_op!(Mul, mul, |j, s| scaled(j, s), |s, j| scaled(j, s));
jet_scalar_op!(Div, div, |j, s| scaled(j, 1.0 / s), |s, j| scaled(&j.recip(), s));

/// A scalar field on the `2n` phase coordinates, evaluable on jets.
pub trait ScalarField: Send + Sync {
    /// Base dimension `n`.
    fn dim(&self) -> usize;

    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet;
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet {
        (**self).eval(x, y)
    }
}

impl<T: ScalarField + ?Sized> ScalarField for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet {
        (**self).eval(x, y)
    }
}

/// Adapter turning a closure into a [`ScalarField`].
pub struct FnField<F> {
    n: usize,
    f: F,
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(&[Jet], &[Jet]) -> Jet + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet {
        (self.f)(x, y)
    }
}

pub fn field<F>(n: usize, f: F) -> FnField<F>
where
    F: Fn(&[Jet], &[Jet]) -> Jet + Send + Sync,
{
    FnField { n, f }
}

/// Name of phase variable `idx` (`x1..xn`, `y1..yn`).
pub fn coordinate_name(n: usize, idx: usize) -> String {
    if idx < n {
        format!("x{}", idx + 1)
    } else {
        format!("y{}", idx - n + 1)
    }
}

/// Seeds jets for every phase coordinate at `(x, y)`.
pub fn seed(x: &[f64], y: &[f64], order: usize) -> (Vec<Jet>, Vec<Jet>) {
    let n = x.len();
    let m = 2 * n;
    let xs = x
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(v, i, m, order))
        .collect();
    let ys = y
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(v, n + i, m, order))
        .collect();
    (xs, ys)
}

/// Evaluates `f` and all its partials up to `order` at raw coordinates.
///
/// Unlike [`evaluate_jet`] this does not require `y != 0`.
pub fn jet_at(f: &dyn ScalarField, x: &[f64], y: &[f64], order: usize) -> Result<Jet> {
    let n = f.dim();
    if x.len() != n || y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len().max(y.len()),
        });
    }
    if order > MAX_ORDER {
        return Err(Error::Order {
            requested: order,
            available: MAX_ORDER,
        });
    }
    for (idx, v) in x.iter().chain(y).enumerate() {
        if !v.is_finite() {
            return Err(Error::domain(
                coordinate_name(n, idx),
                format!("non-finite coordinate {v}"),
            ));
        }
    }
    let (xs, ys) = seed(x, y, order);
    let jet = f.eval(&xs, &ys);
    check_finite(&jet, n, x, y)?;
    Ok(jet)
}

fn check_finite(jet: &Jet, n: usize, x: &[f64], y: &[f64]) -> Result<()> {
    if !jet.value.is_finite() {
        let coordinate = if y.iter().all(|&v| v == 0.0) {
            "y (null section)".to_string()
        } else {
            "value".to_string()
        };
        return Err(Error::domain(
            coordinate,
            format!("field is {} at x = {x:?}, y = {y:?}", jet.value),
        ));
    }
    if let Some(g) = jet.levels.first() {
        if let Some(idx) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(
                coordinate_name(n, idx),
                format!("non-finite derivative at x = {x:?}, y = {y:?}"),
            ));
        }
    }
    for (k, level) in jet.levels.iter().enumerate().skip(1) {
        if let Some(flat) = level.iter().position(|v| !v.is_finite()) {
            let m = 2 * n;
            let first = flat / m.pow(k as u32);
            return Err(Error::domain(
                coordinate_name(n, first),
                format!(
                    "non-finite order-{} derivative at x = {x:?}, y = {y:?}",
                    k + 1
                ),
            ));
        }
    }
    Ok(())
}

/// All partials of `f` up to `order` at the phase point `p`.
pub fn evaluate_jet(f: &dyn ScalarField, p: &PhasePoint, order: usize) -> Result<Jet> {
    jet_at(f, p.x(), p.y(), order)
}

/// Plain value of `f` at raw coordinates.
pub fn value_at(f: &dyn ScalarField, x: &[f64], y: &[f64]) -> Result<f64> {
    jet_at(f, x, y, 0).map(|j| j.value)
}

/// Worst relative discrepancy between the order-`order` jet partials of `f` at
/// `p` and Richardson-extrapolated central finite differences.
///
/// The step is `step * |y|` so that the stencil scales with the fiber radius.
/// Discrepancies are measured relative to `max(1, max |partial|)` over that order.
pub fn finite_difference_defect(
    f: &dyn ScalarField,
    p: &PhasePoint,
    order: usize,
    step: f64,
) -> Result<f64> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::Parameter(format!("finite-difference step must be > 0, got {step}")));
    }
    if order == 0 {
        return Ok(0.0);
    }
    if order > 3 {
        return Err(Error::Order {
            requested: order,
            available: 3,
        });
    }
    let jet = evaluate_jet(f, p, order)?;
    let n = p.dim();
    let m = 2 * n;
    let radius = p.y().iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = step * radius;
    let base: Vec<f64> = p.x().iter().chain(p.y()).copied().collect();

    let level = jet.level(order).expect("jet has requested order");
    let scale = level.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));

    let table = layout(m).table(order);
    let stencil = |t: &[u16], h: f64| -> Result<f64> {
        let mut acc = 0.0;
        for signs in 0..(1u32 << order) {
            let mut z = base.clone();
            let mut sign = 1.0;
            for (pos, &v) in t.iter().enumerate() {
                let s = if signs & (1 << pos) != 0 { 1.0 } else { -1.0 };
                sign *= s;
                z[v as usize] += s * h;
            }
            acc += sign * value_at(f, &z[..n], &z[n..])?;
        }
        Ok(acc / (2.0 * h).powi(order as i32))
    };
    let mut worst = 0.0f64;
    for tuple in &table.tuples {
        let t = &tuple[..order];
        // One Richardson step cancels the h² term of the central stencil.
        let fd = (4.0 * stencil(t, h / 2.0)? - stencil(t, h)?) / 3.0;
        let exact = level[flat_index(t.iter().copied(), m)];
        worst = worst.max((exact - fd).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn point(x: &[f64], y: &[f64]) -> PhasePoint {
        PhasePoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn product_of_base_and_fiber_coordinates() {
        // f = x1 * y1^2 at (2, 3): hand derivatives
        let f = field(1, |x, y| &x[0] * &y[0] * &y[0]);
        let j = evaluate_jet(&f, &point(&[2.0], &[3.0]), 3).unwrap();
        assert_eq!(j.value(), 18.0);
        assert_eq!(j.partial(&[0]).unwrap(), 9.0);
        assert_eq!(j.partial(&[1]).unwrap(), 12.0);
        assert_eq!(j.partial(&[1, 1]).unwrap(), 4.0);
        assert_eq!(j.partial(&[0, 1, 1]).unwrap(), 2.0);
        assert_eq!(j.partial(&[1, 0, 1]).unwrap(), 2.0);
        assert_eq!(j.partial(&[0, 0, 0]).unwrap(), 0.0);
        assert_eq!(j.partial(&[]).unwrap(), j.value());
    }

    #[test]
    fn constant_field_has_no_derivatives() {
        let f = field(2, |x, _| x[0].lift(7.0));
        let j = evaluate_jet(&f, &point(&[0.3, -1.0], &[1.0, 2.0]), 3).unwrap();
        assert_eq!(j.value(), 7.0);
        for k in 1..=3 {
            assert!(j.level(k).unwrap().iter().all(|&v| v == 0.0));
        }
        let defect = finite_difference_defect(&f, &point(&[0.3, -1.0], &[1.0, 2.0]), 2, 1e-4);
        assert_eq!(defect.unwrap(), 0.0);
    }

    #[test]
    fn linear_fiber_field() {
        let f = field(2, |_, y| &y[0] + &y[1]);
        let j = evaluate_jet(&f, &point(&[0.0, 0.0], &[1.0, 1.0]), 2).unwrap();
        assert_eq!(j.gradient(), &[0.0, 0.0, 1.0, 1.0]);
        assert!(j.level(2).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn partial_beyond_order_is_an_error() {
        let f = field(1, |x, y| &x[0] * &y[0]);
        let j = evaluate_jet(&f, &point(&[1.0], &[1.0]), 1).unwrap();
        assert!(matches!(
            j.partial(&[0, 1]),
            Err(Error::Order {
                requested: 2,
                available: 1
            })
        ));
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let f = field(1, |x, y| (&x[0] * &y[0]).sin() + y[0].exp() * x[0].ln() + y[0].sqrt());
        let (x, y) = (1.3, 0.7);
        let j = evaluate_jet(&f, &point(&[x], &[y]), 2).unwrap();
        assert_relative_eq!(j.value(), (x * y).sin() + y.exp() * x.ln() + y.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(j.partial(&[0]).unwrap(), y * (x * y).cos() + y.exp() / x, epsilon = 1e-14);
        assert_relative_eq!(
            j.partial(&[1, 1]).unwrap(),
            -x * x * (x * y).sin() + y.exp() * x.ln() - 0.25 * y.powf(-1.5),
            epsilon = 1e-13
        );
        assert_relative_eq!(
            j.partial(&[0, 1]).unwrap(),
            (x * y).cos() - x * y * (x * y).sin() + y.exp() / x,
            epsilon = 1e-13
        );
    }

    #[test]
    fn fourth_order_of_a_quartic_monomial() {
        let f = field(1, |_, y| y[0].powi(4));
        let (xs, ys) = seed(&[0.0], &[2.0], 4);
        let j = f.eval(&xs, &ys);
        assert_eq!(j.partial(&[1, 1, 1, 1]).unwrap(), 24.0);
        assert_eq!(j.partial(&[1, 1, 1]).unwrap(), 48.0);
    }

    #[test]
    fn derivative_shifts_levels() {
        let f = field(1, |x, y| &x[0] * &x[0] * &y[0] * &y[0] * &y[0]);
        let (xs, ys) = seed(&[2.0], &[3.0], 3);
        let j = f.eval(&xs, &ys);
        let dy = j.derivative(1);
        assert_eq!(dy.order(), 2);
        assert_eq!(dy.value(), j.partial(&[1]).unwrap());
        assert_eq!(dy.partial(&[0, 1]).unwrap(), j.partial(&[1, 0, 1]).unwrap());
    }

    #[test]
    fn non_finite_value_reports_domain() {
        let f = field(1, |x, _| x[0].ln());
        let err = evaluate_jet(&f, &point(&[-1.0], &[1.0]), 1).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }), "{err}");
    }

    #[test]
    fn non_finite_derivative_names_coordinate() {
        let f = field(1, |x, _| x[0].sqrt());
        let err = evaluate_jet(&f, &point(&[0.0], &[1.0]), 1).unwrap_err();
        match err {
            Error::Domain { coordinate, .. } => assert_eq!(coordinate, "x1"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn polynomial_fd_defect_order1() {
        let f = field(2, |x, y| &x[0] * &y[0] * &y[0] + &x[1] * &x[1] * &y[1] - &y[0] * &y[1] * 3.0);
        let p = point(&[0.4, -1.2], &[1.5, 0.8]);
        assert!(finite_difference_defect(&f, &p, 1, 1e-5).unwrap() < 1e-9);
    }

    #[test]
    fn partitions_have_bell_counts() {
        let counts: Vec<usize> = (0..=4).map(|k| partitions(k).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 15]);
    }
}
