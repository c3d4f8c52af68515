//! Mirror trajectories `x⁺ = f(x⁻)` and other monotone null-ray maps.
//!
//! Every map exposes its value and first three derivatives through
//! [`NullMap`]; the radiated flux needs `f‴`, so the built-in trajectories
//! carry closed-form derivatives written in terms of logistic functions that
//! stay finite for `|κx| ≤ 700`.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table;

/// Largest `|κx|` the built-in trajectories accept.
pub const MAX_EXPONENT: f64 = 700.0;

/// Default absolute tolerance on `|f(g(x⁺)) − x⁺|`.
pub const INVERT_TOL: f64 = 1e-12;

/// `f` and its first three derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub first: f64,
    pub second: f64,
    pub third: f64,
}

impl Derivatives {
    pub fn order(&self, order: u8) -> Result<f64> {
        match order {
            0 => Ok(self.value),
            1 => Ok(self.first),
            2 => Ok(self.second),
            3 => Ok(self.third),
            _ => Err(Error::invalid(format!("derivative order {order} not in 0..=3"))),
        }
    }
}

/// A strictly increasing map between null coordinates.
pub trait NullMap: Send + Sync {
    /// Closed domain bounds (possibly infinite).
    fn domain(&self) -> (f64, f64);

    /// Derivatives at `x`, without domain or monotonicity checks.
    fn raw_derivatives(&self, x: f64) -> Derivatives;

    /// Points where the map is C¹ but not C²; the flux there is a delta.
    fn kinks(&self) -> &[f64] {
        &[]
    }

    /// One-sided limit of the derivatives at `x` (`right = true` for x⁺).
    /// Only piecewise maps need to override this.
    fn one_sided(&self, x: f64, right: bool) -> Derivatives {
        let _ = right;
        self.raw_derivatives(x)
    }

    /// Interval of `x⁻` over which the map radiates a thermal flux, if it
    /// has one.
    fn radiating_epoch(&self) -> Option<(f64, f64)> {
        None
    }

    /// Range of the map over its domain.
    fn range(&self) -> (f64, f64) {
        let (lo, hi) = self.domain();
        let end = |x: f64| if x.is_finite() { self.raw_derivatives(x).value } else { x };
        (end(lo), end(hi))
    }

    fn derivatives(&self, x: f64) -> Result<Derivatives> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) || !x.is_finite() {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        let d = self.raw_derivatives(x);
        if !(d.first > 0.0) {
            return Err(Error::NonMonotone { x, derivative: d.first });
        }
        Ok(d)
    }

    fn eval(&self, x: f64, order: u8) -> Result<f64> {
        self.derivatives(x)?.order(order)
    }

    fn value(&self, x: f64) -> Result<f64> {
        self.eval(x, 0)
    }

    /// `g(x⁺)` with `f(g(x⁺)) = x⁺`.
    fn invert(&self, x_plus: f64) -> Result<f64>
    where
        Self: Sized,
    {
        invert(self, x_plus, INVERT_TOL)
    }
}

/// Numerically stable `ln(1 + eʸ)`.
pub(crate) fn softplus(y: f64) -> f64 {
    y.max(0.0) + (-y.abs()).exp().ln_1p()
}

/// Numerically stable logistic `1/(1 + e⁻ʸ)`.
pub(crate) fn logistic(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    Identity,
    BuiltinThermal,
    BuiltinPulse,
    UserDefined,
}

/// A mirror trajectory.
#[derive(Debug, Clone)]
pub enum Trajectory {
    /// Inertial mirror at rest, `f(x) = x`.
    Identity,
    /// `f(x) = −(1/κ) ln(1 + e^{−κx})`: at rest in the far past, asymptotic
    /// to the null ray `x⁺ = 0` in the future.
    Thermal { kappa: f64 },
    /// `f(x) = −(1/κ) ln[(1 + e^{−κx}) / (1 + e^{κ(x−h)})]`: radiates for a
    /// duration of about `h` and comes back to rest.
    Pulse { kappa: f64, h: f64 },
    /// Monotone cubic interpolant of a sampled table.
    Tabulated(MonotoneCubic),
}

impl Trajectory {
    pub fn identity() -> Self {
        Trajectory::Identity
    }

    pub fn thermal(kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(Trajectory::Thermal { kappa })
    }

    pub fn pulse(kappa: f64, h: f64) -> Result<Self> {
        check_kappa(kappa)?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("pulse duration h must be positive, got {h}")));
        }
        Ok(Trajectory::Pulse { kappa, h })
    }

    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        Ok(Trajectory::Tabulated(MonotoneCubic::new(points)?))
    }

    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::tabulated(&table::read_table(path)?)
    }

    pub fn kind(&self) -> TrajectoryKind {
        match self {
            Trajectory::Identity => TrajectoryKind::Identity,
            Trajectory::Thermal { .. } => TrajectoryKind::BuiltinThermal,
            Trajectory::Pulse { .. } => TrajectoryKind::BuiltinPulse,
            Trajectory::Tabulated(_) => TrajectoryKind::UserDefined,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match self {
            Trajectory::Thermal { kappa } | Trajectory::Pulse { kappa, .. } => Some(*kappa),
            _ => None,
        }
    }

    /// A random strictly increasing trajectory on `[x_lo, x_hi]`: cumulative
    /// sums of positive random increments over `nodes` equally spaced points,
    /// joined by a monotone cubic. Same seed, same trajectory.
    pub fn random_monotone(seed: u64, nodes: usize, x_lo: f64, x_hi: f64) -> Result<Self> {
        if nodes < 2 || !(x_hi > x_lo) {
            return Err(Error::invalid("random trajectory needs >= 2 nodes and x_hi > x_lo"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dx = (x_hi - x_lo) / (nodes - 1) as f64;
        let mut y = rng.random_range(-1.0..1.0);
        let mut pts = Vec::with_capacity(nodes);
        for i in 0..nodes {
            pts.push((x_lo + dx * i as f64, y));
            // increments spread over three decades of slope
            let slope = 10f64.powf(rng.random_range(-1.5..1.5));
            y += slope * dx;
        }
        Self::tabulated(&pts)
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("kappa must be positive, got {kappa}")))
    }
}

fn thermal_derivs(kappa: f64, x: f64) -> Derivatives {
    let y = kappa * x;
    let s = logistic(-y);
    let c = logistic(y);
    Derivatives {
        value: -softplus(-y) / kappa,
        first: s,
        second: -kappa * s * c,
        third: kappa * kappa * s * c * (0.5 * y).tanh(),
    }
}

impl NullMap for Trajectory {
    fn radiating_epoch(&self) -> Option<(f64, f64)> {
        match self {
            Trajectory::Thermal { kappa } => Some((1.0 / kappa, f64::INFINITY)),
            Trajectory::Pulse { kappa, h } => Some((1.0 / kappa, h + 1.0 / kappa)),
            _ => None,
        }
    }

    fn domain(&self) -> (f64, f64) {
        match self {
            Trajectory::Identity => (f64::NEG_INFINITY, f64::INFINITY),
            Trajectory::Thermal { kappa } => (f64::NEG_INFINITY, MAX_EXPONENT / kappa),
            Trajectory::Pulse { kappa, h } => (h - MAX_EXPONENT / kappa, MAX_EXPONENT / kappa),
            Trajectory::Tabulated(t) => t.domain(),
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            Trajectory::Thermal { .. } => {
                let (_, hi) = self.domain();
                (f64::NEG_INFINITY, self.raw_derivatives(hi).value)
            }
            Trajectory::Pulse { .. } => {
                let (lo, hi) = self.domain();
                (self.raw_derivatives(lo).value, self.raw_derivatives(hi).value)
            }
            _ => {
                let (lo, hi) = self.domain();
                let end = |x: f64| if x.is_finite() { self.raw_derivatives(x).value } else { x };
                (end(lo), end(hi))
            }
        }
    }

    fn raw_derivatives(&self, x: f64) -> Derivatives {
        match self {
            Trajectory::Identity => Derivatives { value: x, first: 1.0, second: 0.0, third: 0.0 },
            Trajectory::Thermal { kappa } => thermal_derivs(*kappa, x),
            Trajectory::Pulse { kappa, h } => {
                let k = *kappa;
                let early = thermal_derivs(k, x);
                // the late factor mirrors the early one about x = h
                let z = k * (x - h);
                let s2 = logistic(z);
                let c2 = logistic(-z);
                Derivatives {
                    value: early.value + softplus(z) / k,
                    first: early.first + s2,
                    second: early.second + k * s2 * c2,
                    third: early.third - k * k * s2 * c2 * (0.5 * z).tanh(),
                }
            }
            Trajectory::Tabulated(t) => t.raw_derivatives(x),
        }
    }
}

/// Bracketed safeguarded-Newton inversion of a monotone map.
pub fn invert<M: NullMap + ?Sized>(map: &M, x_plus: f64, tol: f64) -> Result<f64> {
    let (rlo, rhi) = map.range();
    if !(x_plus > rlo && x_plus < rhi) && !(x_plus == rlo && rlo.is_finite()) && !(x_plus == rhi && rhi.is_finite())
    {
        return Err(Error::OutOfRange { x_plus, lo: rlo, hi: rhi });
    }
    let (dlo, dhi) = map.domain();
    let f = |x: f64| map.raw_derivatives(x);

    // bracket from the asymptotes: expand geometrically around x⁺ clamped
    // into the domain
    let start = x_plus.clamp(dlo.max(-1e300), dhi.min(1e300));
    let mut lo = start;
    let mut hi = start;
    let mut step = 1.0;
    let mut guard = 0;
    while f(lo).value > x_plus {
        lo = (start - step).max(dlo);
        step *= 2.0;
        guard += 1;
        if guard > 2100 {
            return Err(Error::no_convergence("inversion", "failed to bracket from below"));
        }
    }
    step = 1.0;
    guard = 0;
    while f(hi).value < x_plus {
        hi = (start + step).min(dhi);
        step *= 2.0;
        guard += 1;
        if guard > 2100 {
            return Err(Error::no_convergence("inversion", "failed to bracket from above"));
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let d = f(x);
        let r = d.value - x_plus;
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if d.first > 0.0 { x - r / d.first } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let settled = (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) || next == lo || next == hi;
        x = next;
        if settled {
            break;
        }
    }
    let resid = (f(x).value - x_plus).abs();
    if resid < tol {
        Ok(x)
    } else {
        Err(Error::no_convergence("inversion", format!("residual {resid:e} at x = {x} for x+ = {x_plus}")))
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson).
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds the interpolant; both columns must increase strictly.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(Error::invalid("need at least two points"));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        for i in 1..n {
            if !(xs[i] > xs[i - 1]) {
                return Err(Error::invalid(format!("x values must increase strictly at row {}", i + 1)));
            }
            if !(ys[i] > ys[i - 1]) {
                return Err(Error::NonMonotone { x: xs[i], derivative: (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]) });
            }
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = delta[0];
            m[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                // weighted harmonic mean keeps interior slopes positive
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
            m[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            m[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(MonotoneCubic { xs, ys, slopes: m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().expect("non-empty"))
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    fn raw_derivatives(&self, x: f64) -> Derivatives {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let delta = (self.ys[i + 1] - self.ys[i]) / h;
        let (m0, m1) = (self.slopes[i], self.slopes[i + 1]);
        let c2 = (3.0 * delta - 2.0 * m0 - m1) / h;
        let c3 = (m0 + m1 - 2.0 * delta) / (h * h);
        let t = x - self.xs[i];
        Derivatives {
            value: self.ys[i] + t * (m0 + t * (c2 + t * c3)),
            first: m0 + t * (2.0 * c2 + 3.0 * c3 * t),
            second: 2.0 * c2 + 6.0 * c3 * t,
            third: 6.0 * c3,
        }
    }
}

/// Three-point end slope, kept strictly positive and inside the
/// Fritsch–Carlson monotonicity region.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m <= 0.0 {
        d0
    } else if m > 3.0 * d0 {
        3.0 * d0
    } else {
        m
    }
}

/// Möbius map `(a + b·x)/(c + d·x)` restricted to an interval free of its
/// pole; increasing iff `bc − ad > 0`.
#[derive(Debug, Clone, Copy)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    lo: f64,
    hi: f64,
}

impl Mobius {
    pub fn new(a: f64, b: f64, c: f64, d: f64, domain: (f64, f64)) -> Result<Self> {
        let det = b * c - a * d;
        if !(det > 0.0) {
            return Err(Error::NonMonotone { x: domain.0, derivative: det });
        }
        let (lo, hi) = domain;
        if !(lo < hi) {
            return Err(Error::invalid("empty Möbius domain"));
        }
        if d != 0.0 {
            let pole = -c / d;
            if pole >= lo && pole <= hi {
                return Err(Error::invalid(format!("Möbius pole at {pole} inside domain [{lo}, {hi}]")));
            }
        }
        Ok(Mobius { a, b, c, d, lo, hi })
    }

    /// Largest pole-free domain on the side of the pole containing `x`.
    pub fn around(a: f64, b: f64, c: f64, d: f64, x: f64) -> Result<Self> {
        let dom = if d == 0.0 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            let pole = -c / d;
            if x > pole {
                (pole + 1e-12 * pole.abs().max(1.0), f64::INFINITY)
            } else {
                (f64::NEG_INFINITY, pole - 1e-12 * pole.abs().max(1.0))
            }
        };
        Self::new(a, b, c, d, dom)
    }
}

impl NullMap for Mobius {
    fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn raw_derivatives(&self, x: f64) -> Derivatives {
        let den = self.c + self.d * x;
        let det = self.b * self.c - self.a * self.d;
        Derivatives {
            value: (self.a + self.b * x) / den,
            first: det / (den * den),
            second: -2.0 * self.d * det / den.powi(3),
            third: 6.0 * self.d * self.d * det / den.powi(4),
        }
    }
}
