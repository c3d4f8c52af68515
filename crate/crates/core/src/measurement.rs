//! One-bit measurements of a windowed field derivative and the flux they
//! leave behind.
//!
//! A real window `λ` supported left of a boundary `x_E` defines
//! `M₀ = cos(∫λ ∂φ)`, `M₁ = sin(∫λ ∂φ)`. For `x⁺ > x_E` the vacuum
//! correlator of `Π_i = M_i†M_i` with `T₊₊(x⁺)` is
//! `2(−1)^{i+1} (∫ G(x⁺ − x′) λ(x′) dx′)²` with
//! `G(Δ) = −1/(4π(Δ − i0)²)`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::output::CsvTable;
use crate::quadrature::gauss_legendre_doubling;
use crate::table::read_table;
use crate::trajectory::NullMap;

/// Starting node count for window quadrature; doubled until converged.
pub const WINDOW_NODES: usize = 256;
pub const WINDOW_REL_TOL: f64 = 1e-9;

/// `exp(1 − 1/(1 − t²))` on `(−1, 1)`, zero outside; smooth with unit peak.
fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum WindowShape {
    /// `amplitude · bump`.
    Bump { amplitude: f64 },
    /// `bump(t) · Σ a_k cos(kπt + φ_k)`, `k = 1..`.
    Modulated { harmonics: Vec<(f64, f64)> },
    /// Piecewise-linear through tabulated `(x, λ)`.
    Table { points: Vec<(f64, f64)> },
}

/// A real coupling function with compact support `[lo, hi]` left of the
/// region boundary `boundary`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementWindow {
    pub lo: f64,
    pub hi: f64,
    pub boundary: f64,
    pub shape: WindowShape,
}

impl MeasurementWindow {
    fn with_shape(lo: f64, hi: f64, shape: WindowShape) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("window support needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(MeasurementWindow { lo, hi, boundary: hi, shape })
    }

    pub fn bump(lo: f64, hi: f64, amplitude: f64) -> Result<Self> {
        Self::with_shape(lo, hi, WindowShape::Bump { amplitude })
    }

    /// `λ ≡ 0`, for which the measurement does nothing.
    pub fn zero(lo: f64, hi: f64) -> Result<Self> {
        Self::bump(lo, hi, 0.0)
    }

    /// Window through tabulated points; the end values must vanish.
    pub fn from_table(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("window table needs at least two rows"));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::invalid("window table abscissae must be strictly increasing"));
        }
        let scale = points.iter().fold(0.0_f64, |m, p| m.max(p.1.abs()));
        let (first, last) = (points[0], points[points.len() - 1]);
        if first.1.abs() > 1e-12 * scale || last.1.abs() > 1e-12 * scale {
            return Err(Error::invalid("window must vanish at both ends of its table"));
        }
        Self::with_shape(first.0, last.0, WindowShape::Table { points: points.to_vec() })
    }

    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_table(&read_table(path)?)
    }

    /// Reproducible random window: a bump envelope modulated by a few
    /// harmonics with random signed amplitudes and phases.
    pub fn random(seed: u64, lo: f64, hi: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.random_range(1..=4);
        let harmonics = (0..count)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0 * PI)))
            .collect();
        Self::with_shape(lo, hi, WindowShape::Modulated { harmonics })
    }

    /// Move the region boundary `x_E` to the right of the support.
    pub fn with_boundary(mut self, boundary: f64) -> Result<Self> {
        if !(boundary >= self.hi) {
            return Err(Error::invalid(format!("boundary {boundary} lies inside the support ending at {}", self.hi)));
        }
        self.boundary = boundary;
        Ok(self)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        match &self.shape {
            WindowShape::Bump { amplitude } => amplitude * bump(t),
            WindowShape::Modulated { harmonics } => {
                let sum: f64 = harmonics
                    .iter()
                    .enumerate()
                    .map(|(k, &(a, phi))| a * ((k as f64 + 1.0) * PI * t + phi).cos())
                    .sum();
                bump(t) * sum
            }
            WindowShape::Table { points } => {
                let i = points.partition_point(|p| p.0 <= x).clamp(1, points.len() - 1);
                let ((x0, y0), (x1, y1)) = (points[i - 1], points[i]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.shape {
            WindowShape::Bump { amplitude } => *amplitude == 0.0,
            WindowShape::Modulated { harmonics } => harmonics.iter().all(|h| h.0 == 0.0),
            WindowShape::Table { points } => points.iter().all(|p| p.1 == 0.0),
        }
    }

    /// `∫ k(x) λ(x) dx` over the support.
    pub fn integrate<K: Fn(f64) -> f64>(&self, kernel: K) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        match &self.shape {
            WindowShape::Table { points } => points.windows(2).try_fold(0.0, |acc, w| {
                let part = gauss_legendre_doubling(|x| kernel(x) * self.value(x), w[0].0, w[1].0, 8, WINDOW_REL_TOL)?;
                Ok(acc + part)
            }),
            _ => gauss_legendre_doubling(|x| kernel(x) * self.value(x), self.lo, self.hi, WINDOW_NODES, WINDOW_REL_TOL),
        }
    }
}

/// `G(x − y) = −1/(4π(x − y − iη)²)` with `η = 10⁻⁸|x − y|`.
pub fn vacuum_correlator(x: f64, y: f64) -> Result<Complex64> {
    vacuum_correlator_regulated(x, y, 1e-8 * (x - y).abs())
}

pub fn vacuum_correlator_regulated(x: f64, y: f64, eta: f64) -> Result<Complex64> {
    if x == y {
        return Err(Error::invalid("correlator at coincident points"));
    }
    let d = Complex64::new(x - y, -eta);
    Ok(-1.0 / (4.0 * PI * d * d))
}

/// The correlator at strictly separated points, where the `i0` is inert.
pub fn vacuum_correlator_real(delta: f64) -> f64 {
    -1.0 / (4.0 * PI * delta * delta)
}

/// Out-field correlator `f′(x)f′(y) G(f(x) − f(y))` behind the mirror.
pub fn transported_correlator<M: NullMap + ?Sized>(map: &M, x: f64, y: f64) -> Result<f64> {
    if x == y {
        return Err(Error::invalid("correlator at coincident points"));
    }
    let dx = map.derivatives(x)?;
    let dy = map.derivatives(y)?;
    let gap = dx.value - dy.value;
    Ok(-dx.first * dy.first / (4.0 * PI * gap * gap))
}

/// `−κ²/(16π sinh²(κΔ/2))`, the out correlator of an exactly thermal map.
pub fn thermal_correlator(kappa: f64, delta: f64) -> f64 {
    let s = (0.5 * kappa * delta).sinh();
    -kappa * kappa / (16.0 * PI * s * s)
}

fn sign(outcome: u8) -> Result<f64> {
    match outcome {
        0 => Ok(-1.0),
        1 => Ok(1.0),
        _ => Err(Error::invalid(format!("one-bit outcome must be 0 or 1, got {outcome}"))),
    }
}

/// `∫ G(x⁺ − x′) λ(x′) dx′` for `x⁺` right of the region boundary.
pub fn window_correlation(window: &MeasurementWindow, x_plus: f64) -> Result<f64> {
    if !(x_plus > window.boundary) {
        return Err(Error::invalid(format!(
            "x+ = {x_plus} must lie right of the measured region (boundary {})",
            window.boundary
        )));
    }
    window.integrate(|x| vacuum_correlator_real(x_plus - x))
}

/// `⟨0|Π_i T₊₊(x⁺)|0⟩ = 2(−1)^{i+1} (∫ G λ)²`.
pub fn one_bit_flux(window: &MeasurementWindow, outcome: u8, x_plus: f64) -> Result<f64> {
    let s = sign(outcome)?;
    let c = window_correlation(window, x_plus)?;
    Ok(2.0 * s * c * c)
}

/// Sum of both outcomes' conditioned fluxes, which unitarity sets to zero.
pub fn unitarity_sum_check(window: &MeasurementWindow, x_plus: f64) -> Result<f64> {
    Ok(one_bit_flux(window, 0, x_plus)? + one_bit_flux(window, 1, x_plus)?)
}

/// Conditioned flux of one outcome over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionedFlux {
    pub outcome: u8,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl ConditionedFlux {
    pub fn sample(window: &MeasurementWindow, outcome: u8, grid: &[f64], exec: Execution) -> Result<Self> {
        sign(outcome)?;
        let values = exec.try_map(grid, |&x| one_bit_flux(window, outcome, x))?;
        Ok(ConditionedFlux { outcome, grid: grid.to_vec(), values })
    }
}

/// Both outcomes over a grid, as written by the `measure` subcommand.
pub fn sweep_csv(window: &MeasurementWindow, grid: &[f64], exec: Execution) -> Result<CsvTable> {
    let corr = exec.try_map(grid, |&x| window_correlation(window, x))?;
    let mut t = CsvTable::new(&["x_plus", "flux_outcome0", "flux_outcome1"]);
    for (&x, c) in grid.iter().zip(corr) {
        t.push(vec![x, -2.0 * c * c, 2.0 * c * c]);
    }
    Ok(t)
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.abs().ln())).collect();
    linear_fit(&pts)
}

/// Least-squares slope and intercept of `ln |y|` against `x`.
pub fn exponential_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (*x, y.abs().ln())).collect();
    linear_fit(&pts)
}

fn linear_fit(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pts.len() < 2 || pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::invalid("fit needs at least two finite, nonzero points"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit abscissae are all equal"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Log-log slope of the outcome-1 flux against distance from the window
/// centre, over `distances` measured to the right of that centre.
pub fn decay_slope(window: &MeasurementWindow, distances: &[f64], exec: Execution) -> Result<f64> {
    let c = window.center();
    let xs: Vec<f64> = distances.iter().map(|d| c + d).collect();
    let flux = ConditionedFlux::sample(window, 1, &xs, exec)?;
    Ok(loglog_fit(distances, &flux.values)?.0)
}

/// Energy-flux gain at a late point `x_L⁻` after a one-bit measurement of
/// the out field with window `Ω` in the early radiation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThermalGain {
    pub x_minus: f64,
    pub x_plus: f64,
    /// `Δ T₋₋(x_L⁻)`: connected one-bit correlator with the exact
    /// transported correlator.
    pub gain_minus: f64,
    /// `Δ T₊₊(x_L⁺) = (∂x⁻/∂x⁺)² Δ T₋₋`.
    pub gain_plus: f64,
    /// The window reaches outside the map's radiating epoch.
    pub outside_thermal_regime: bool,
}

pub fn thermal_gain<M: NullMap + ?Sized>(map: &M, window: &MeasurementWindow, x_minus: f64, outcome: u8) -> Result<ThermalGain> {
    let s = sign(outcome)?;
    if !(x_minus > window.boundary) {
        return Err(Error::invalid(format!("x_L = {x_minus} must lie right of the window boundary {}", window.boundary)));
    }
    let d = map.derivatives(x_minus)?;
    let c = window.integrate(|x| transported_correlator(map, x_minus, x).unwrap_or(f64::NAN))?;
    if !c.is_finite() {
        return Err(Error::invalid("window reaches outside the trajectory domain"));
    }
    let gain_minus = 2.0 * s * c * c;
    let outside = match map.radiating_epoch() {
        Some((start, end)) => window.lo < start || window.hi > end,
        None => true,
    };
    Ok(ThermalGain {
        x_minus,
        x_plus: d.value,
        gain_minus,
        gain_plus: gain_minus / (d.first * d.first),
        outside_thermal_regime: outside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Trajectory;

    #[test]
    fn correlator_values() {
        let g = vacuum_correlator(1.0, 0.0).unwrap();
        assert!((g.re + 1.0 / (4.0 * PI)).abs() < 1e-12);
        assert!((g.re + 0.079577).abs() < 1e-6);
        assert!(g.im.abs() < 1e-8);
        assert_eq!(vacuum_correlator_real(2.5), vacuum_correlator_real(-2.5));
        assert!(vacuum_correlator(3.0, 3.0).is_err());
    }

    #[test]
    fn transported_matches_sinh_form() {
        let t = Trajectory::thermal(1.0).unwrap();
        let v = transported_correlator(&t, 30.0, 20.0).unwrap();
        let s = thermal_correlator(1.0, 10.0);
        assert!((v / s - 1.0).abs() < 1e-2);
        assert!((s + 3.61e-6).abs() < 0.01 * 3.61e-6);
    }

    #[test]
    fn zero_window_does_nothing() {
        let w = MeasurementWindow::zero(-2.0, -1.0).unwrap();
        assert_eq!(one_bit_flux(&w, 0, 3.0).unwrap(), 0.0);
        assert_eq!(one_bit_flux(&w, 1, 3.0).unwrap(), 0.0);
        let t = Trajectory::thermal(1.0).unwrap();
        let g = thermal_gain(&t, &w.with_boundary(5.0).unwrap(), 12.0, 1).unwrap();
        assert_eq!((g.gain_minus, g.gain_plus), (0.0, 0.0));
    }

    #[test]
    fn outcomes_have_opposite_signs() {
        let w = MeasurementWindow::random(7, -3.0, -1.0).unwrap();
        for x in [0.0, 2.0, 50.0] {
            let a = one_bit_flux(&w, 0, x).unwrap();
            let b = one_bit_flux(&w, 1, x).unwrap();
            assert!(a <= 0.0 && b >= 0.0 && a == -b);
            assert_eq!(unitarity_sum_check(&w, x).unwrap(), 0.0);
        }
        assert!(one_bit_flux(&w, 2, 3.0).is_err());
        assert!(one_bit_flux(&w, 0, -2.0).is_err());
    }

    #[test]
    fn bump_correlation_against_far_field() {
        // far away the kernel is ≈ −1/(4π d²) times the window area
        let w = MeasurementWindow::bump(-2.0, -1.0, 1.0).unwrap();
        let area = w.integrate(|_| 1.0).unwrap();
        let d = 1e4;
        let c = window_correlation(&w, w.center() + d).unwrap();
        assert!((c / (-area / (4.0 * PI * d * d)) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn power_law_decay() {
        let w = MeasurementWindow::bump(-2.0, -1.0, 1.0).unwrap();
        let ds: Vec<f64> = (0..=20).map(|k| 11.5 * 10f64.powf(k as f64 / 10.0)).collect();
        let slope = decay_slope(&w, &ds, Execution::Parallel).unwrap();
        assert!((slope + 4.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn table_windows() {
        let w = MeasurementWindow::from_table(&[(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)]).unwrap();
        assert_eq!(w.value(0.5), 1.0);
        assert!((w.integrate(|_| 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(MeasurementWindow::from_table(&[(0.0, 1.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn no_remote_peak() {
        let w = MeasurementWindow::random(3, -4.0, -2.0).unwrap();
        let near = one_bit_flux(&w, 1, w.hi + w.width()).unwrap();
        for k in 0..200 {
            let x = w.hi + w.width() * (1.0 + 0.5 * k as f64);
            assert!(one_bit_flux(&w, 1, x).unwrap() <= near * (1.0 + 1e-12));
        }
    }

    #[test]
    fn thermal_gain_decays_and_stays_finite_upstream() {
        let t = Trajectory::thermal(1.0).unwrap();
        let w = MeasurementWindow::bump(2.0, 4.0, 1.0).unwrap().with_boundary(5.0).unwrap();
        let xs: Vec<f64> = (0..=15).map(|k| 10.0 + k as f64).collect();
        let g: Vec<ThermalGain> = xs.iter().map(|&x| thermal_gain(&t, &w, x, 1).unwrap()).collect();
        let minus: Vec<f64> = g.iter().map(|v| v.gain_minus).collect();
        let (rate, _) = exponential_fit(&xs, &minus).unwrap();
        assert!((rate + 2.0).abs() < 0.1, "{rate}");
        let plus: Vec<f64> = g.iter().map(|v| v.gain_plus).collect();
        let last = plus[plus.len() - 1];
        assert!(plus.iter().all(|p| p.abs() <= 1.01 * last.abs()));
        assert!(!g[0].outside_thermal_regime);
    }
}
