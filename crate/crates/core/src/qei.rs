//! Quantum-energy-inequality bounds on a sharp post-measurement pulse.
//!
//! For a sampling function `ξ` rising from 0 at `x_E` to 1 at `x_peak`,
//! `Tr[H_ξ ρ] ≥ −(1/12π) ∫ (∂√ξ)² dx` in any state. The infimum over `ξ`
//! is reached by `ξ_opt = ((x − x_E)/l)²` and equals `1/(12πl)`; applied to
//! a flux `−rE_fw δ(x − x_peak)` it bounds `E_fw < 1/(12πrl)`. The
//! squeezed-state family
//!
//! ```text
//! F(x) = (a + b(x−l)) / (c + d(x−l))   for x < l
//! F(x) = F(l) + (bc − ad)/c² · (x − l)  for x ≥ l,    d = 12π r E_fw c
//! ```
//!
//! realizes exactly that delta at `x = l`, with total energy
//! `E₊ = rE_fw / (1 − 12πl rE_fw)`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::QuadOptions;
use crate::stress_tensor::{flux_delta, total_energy};
use crate::trajectory::{Derivatives, NullMap};

/// Left-cell halvings tried when checking a sampling function for a
/// divergent functional.
const DIVERGENCE_HALVINGS: usize = 4;
const DIVERGENCE_GROWTH: f64 = 0.10;

type Source = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A sampling function `ξ` on `[x_E, x_peak]`, tabulated on a grid.
#[derive(Clone)]
pub struct SamplingFunction {
    pub x_e: f64,
    pub x_peak: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    source: Option<Source>,
}

impl std::fmt::Debug for SamplingFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SamplingFunction")
            .field("x_e", &self.x_e)
            .field("x_peak", &self.x_peak)
            .field("nodes", &self.grid.len())
            .field("has_source", &self.source.is_some())
            .finish()
    }
}

fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

impl SamplingFunction {
    /// Tabulated values; `grid` must start at `x_E` and end at `x_peak`.
    pub fn from_values(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::invalid("sampling function needs matching grid and values with at least two nodes"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("sampling grid must be strictly increasing"));
        }
        if let Some((x, v)) = grid.iter().zip(&values).find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::invalid(format!("xi = {v} < 0 at x = {x}")));
        }
        if values[0].abs() > 1e-12 || (values[values.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "xi must be 0 at x_E and 1 at x_peak, got {} and {}",
                values[0],
                values[values.len() - 1]
            )));
        }
        Ok(SamplingFunction { x_e: grid[0], x_peak: grid[grid.len() - 1], grid, values, source: None })
    }

    /// Sample `xi` on a uniform grid of `n` nodes, keeping it for refinement.
    pub fn from_fn<F>(x_e: f64, x_peak: f64, n: usize, xi: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(x_e < x_peak) || n < 2 {
            return Err(Error::invalid("need x_E < x_peak and at least two nodes"));
        }
        let grid = uniform_grid(x_e, x_peak, n);
        let values = grid.iter().map(|&x| xi(x)).collect();
        let mut s = Self::from_values(grid, values)?;
        s.source = Some(Arc::new(xi));
        Ok(s)
    }

    /// `ξ_opt = ((x − x_E)/l)²`.
    pub fn optimal(x_e: f64, x_peak: f64, n: usize) -> Result<Self> {
        let l = x_peak - x_e;
        Self::from_fn(x_e, x_peak, n, move |x| ((x - x_e) / l).powi(2))
    }

    pub fn length(&self) -> f64 {
        self.x_peak - self.x_e
    }

    /// `ξ` with the continuation 0 left of `x_E` and 1 right of `x_peak`.
    pub fn value(&self, x: f64) -> f64 {
        if x <= self.x_e {
            return 0.0;
        }
        if x >= self.x_peak {
            return 1.0;
        }
        if let Some(src) = &self.source {
            return src(x);
        }
        let i = self.grid.partition_point(|&g| g <= x).clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let (s0, s1) = (self.values[i - 1].sqrt(), self.values[i].sqrt());
        let s = s0 + (s1 - s0) * (x - x0) / (x1 - x0);
        s * s
    }
}

fn cell_energy(x0: f64, x1: f64, xi0: f64, xi1: f64) -> f64 {
    let ds = xi1.sqrt() - xi0.sqrt();
    ds * ds / (x1 - x0)
}

/// `Σ (Δ√ξ)²/Δx` over the grid, the exact `∫ (∂√ξ)²` for `√ξ` linear
/// between nodes.
fn grid_integral(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| cell_energy(g[0], g[1], v[0], v[1]))
        .sum()
}

/// Contribution of `[x_E, x_E + h]` after `halvings` bisections of its
/// leftmost cell.
fn left_cell_energy(xi: &dyn Fn(f64) -> f64, x_e: f64, h: f64, halvings: usize) -> f64 {
    let mut nodes = vec![x_e + h];
    let mut w = h;
    for _ in 0..halvings {
        w *= 0.5;
        nodes.push(x_e + w);
    }
    nodes.push(x_e);
    nodes.reverse();
    nodes.windows(2).map(|p| cell_energy(p[0], p[1], xi(p[0]).max(0.0), xi(p[1]).max(0.0))).sum()
}

/// `(1/12π) ∫ (∂√ξ)² dx`, the magnitude of the lower bound on `Tr[H_ξ ρ]`.
///
/// When `ξ` was built from a function, the leftmost cell is halved
/// repeatedly; if its contribution grows by more than 10% on two
/// consecutive halvings the integral is reported as divergent.
pub fn xi_energy_functional(xi: &SamplingFunction) -> Result<f64> {
    let value = grid_integral(&xi.grid, &xi.values) / (12.0 * PI);
    if let Some(src) = &xi.source {
        let h = xi.grid[1] - xi.grid[0];
        let mut prev = left_cell_energy(src.as_ref(), xi.x_e, h, 0);
        let mut streak = 0;
        for k in 1..=DIVERGENCE_HALVINGS {
            let next = left_cell_energy(src.as_ref(), xi.x_e, h, k);
            if next > prev * (1.0 + DIVERGENCE_GROWTH) && next > 0.0 {
                streak += 1;
                if streak == 2 {
                    return Err(Error::no_convergence(
                        "xi energy functional",
                        format!("left-end contribution keeps growing under refinement ({prev:e} -> {next:e}); the integral diverges at x_E"),
                    ));
                }
            } else {
                streak = 0;
            }
            prev = next;
        }
    }
    Ok(value)
}

/// Linear solver for the discrete variational problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XiSolver {
    #[default]
    Tridiagonal,
    ConjugateGradient,
}

/// Minimize the discrete functional over `√ξ` at the interior nodes of a
/// uniform grid with `√ξ(x_E) = 0`, `√ξ(x_peak) = 1`.
pub fn optimize_xi(x_e: f64, x_peak: f64, n_grid: usize) -> Result<(SamplingFunction, f64)> {
    optimize_xi_with(x_e, x_peak, n_grid, XiSolver::Tridiagonal)
}

pub fn optimize_xi_with(x_e: f64, x_peak: f64, n_grid: usize, solver: XiSolver) -> Result<(SamplingFunction, f64)> {
    if !(x_e < x_peak) {
        return Err(Error::invalid(format!("need x_E < x_peak, got ({x_e}, {x_peak})")));
    }
    if n_grid < 8 {
        return Err(Error::invalid(format!("n_grid must be at least 8, got {n_grid}")));
    }
    let grid = uniform_grid(x_e, x_peak, n_grid);
    // stationarity: s_{i-1} − 2 s_i + s_{i+1} = 0, boundary values moved right
    let m = n_grid - 2;
    let mut rhs = vec![0.0; m];
    rhs[m - 1] = 1.0;
    let s_inner = match solver {
        XiSolver::Tridiagonal => thomas(&vec![-1.0; m], &vec![2.0; m], &vec![-1.0; m], &rhs)?,
        XiSolver::ConjugateGradient => conjugate_gradient(&rhs, 1e-14, 10 * m)?,
    };
    let mut s = Vec::with_capacity(n_grid);
    s.push(0.0);
    s.extend(s_inner);
    s.push(1.0);
    let values: Vec<f64> = s.iter().map(|v| v * v).collect();
    let xi = SamplingFunction::from_values(grid, values)?;
    let value = xi_energy_functional(&xi)?;
    Ok((xi, value))
}

/// Thomas algorithm for a tridiagonal system (`lower[0]`, `upper[m-1]` unused).
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::no_convergence("tridiagonal solve", "zero pivot"));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..m {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 {
            return Err(Error::no_convergence("tridiagonal solve", format!("zero pivot at row {i}")));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// CG on the `[-1, 2, -1]` Laplacian.
fn conjugate_gradient(rhs: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let m = rhs.len();
    let apply = |v: &[f64], out: &mut [f64]| {
        for i in 0..m {
            let left = if i > 0 { v[i - 1] } else { 0.0 };
            let right = if i + 1 < m { v[i + 1] } else { 0.0 };
            out[i] = 2.0 * v[i] - left - right;
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; m];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; m];
    let mut rr = dot(&r, &r);
    let target = tol * tol * rr.max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        if rr <= target {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..m {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    if rr <= target {
        return Ok(x);
    }
    Err(Error::no_convergence("conjugate gradient", format!("residual {} after {max_iter} iterations", rr.sqrt())))
}

/// `1/(12πl)`, the infimum of the functional over sampling functions of
/// length `l`.
pub fn xi_infimum(l: f64) -> f64 {
    1.0 / (12.0 * PI * l)
}

/// Firewall-energy bound and the squeezed-state lower bounds on the
/// compensating energy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundReport {
    pub e_fw: f64,
    pub r: f64,
    pub l: f64,
    /// `1/(12πrl)`.
    pub bound: f64,
    /// `E_fw < 1/(12πrl)`.
    pub satisfied: bool,
    /// `12πl·rE_fw`.
    pub saturation: f64,
    /// `rE_fw/(1 − 12πl rE_fw)`; `None` (serialized as null) once it diverges.
    pub e_plus_lower: Option<f64>,
    /// `12πl(rE_fw)²/(1 − 12πl rE_fw)`; `None` once it diverges.
    pub e_tot_lower: Option<f64>,
    pub diverges: bool,
}

pub fn firewall_bound(e_fw: f64, r: f64, l: f64) -> Result<BoundReport> {
    if !(r > 0.0 && r.is_finite()) || !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid(format!("r and l must be positive, got r = {r}, l = {l}")));
    }
    if !(e_fw >= 0.0 && e_fw.is_finite()) {
        return Err(Error::invalid(format!("E_fw must be non-negative, got {e_fw}")));
    }
    let bound = 1.0 / (12.0 * PI * r * l);
    // comparing against the bound itself keeps the classification exact at
    // E_fw = 1/(12πrl)
    let satisfied = e_fw < bound;
    let saturation = e_fw / bound;
    let re = r * e_fw;
    let (e_plus_lower, e_tot_lower) = if satisfied {
        (Some(re / (1.0 - saturation)), Some(saturation * re / (1.0 - saturation)))
    } else {
        (None, None)
    };
    Ok(BoundReport { e_fw, r, l, bound, satisfied, saturation, e_plus_lower, e_tot_lower, diverges: !satisfied })
}

/// Normalization of the Möbius piece: `F(l)` and the slope `F′(l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gauge {
    pub value_at_kink: f64,
    pub slope: f64,
}

impl Gauge {
    /// `F(l) = l`, `F′(l) = 1`: the profile coincides with the identity
    /// from the kink on.
    pub fn identity_at(l: f64) -> Self {
        Gauge { value_at_kink: l, slope: 1.0 }
    }
}

/// The piecewise Möbius/affine map with a single kink at `x = l`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezedProfile {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub l: f64,
    /// `rE_fw = d/(12πc)`.
    pub r_e_fw: f64,
    kink: [f64; 1],
}

impl SqueezedProfile {
    /// Build from `(r, E_fw, l, c)` with the continuity gauge
    /// `a = F(l)·c` and `b = (F′(l)c² + ad)/c`.
    pub fn new(r: f64, e_fw: f64, l: f64, c: f64, gauge: Gauge) -> Result<Self> {
        if !(r > 0.0) || !(e_fw >= 0.0) || !(l > 0.0) {
            return Err(Error::invalid(format!("need r > 0, E_fw >= 0, l > 0, got ({r}, {e_fw}, {l})")));
        }
        if c == 0.0 || !c.is_finite() {
            return Err(Error::invalid("c must be nonzero"));
        }
        if !(gauge.slope > 0.0) {
            return Err(Error::invalid("gauge slope must be positive for an increasing map"));
        }
        let d = 12.0 * PI * r * e_fw * c;
        let a = gauge.value_at_kink * c;
        let b = (gauge.slope * c * c + a * d) / c;
        Self::from_parameters(a, b, c, d, l)
    }

    /// Build from explicit `(a, b, c, d)`; `rE_fw` follows from `d/(12πc)`.
    pub fn from_parameters(a: f64, b: f64, c: f64, d: f64, l: f64) -> Result<Self> {
        if c == 0.0 || ![a, b, c, d, l].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("profile parameters must be finite with c != 0"));
        }
        if !(b * c - a * d > 0.0) {
            return Err(Error::invalid(format!("bc - ad = {} must be positive for an increasing map", b * c - a * d)));
        }
        let p = SqueezedProfile { a, b, c, d, l, r_e_fw: d / (12.0 * PI * c), kink: [l] };
        if let Some(pole) = p.pole() {
            if pole >= 0.0 && pole <= l {
                return Err(Error::invalid(format!(
                    "Moebius pole at x = {pole} lies inside [0, l]; 12 pi l r E_fw = {} must stay below 1",
                    12.0 * PI * l * p.r_e_fw
                )));
            }
        }
        Ok(p)
    }

    /// Where `c + d(x − l)` vanishes.
    pub fn pole(&self) -> Option<f64> {
        (self.d != 0.0).then(|| self.l - self.c / self.d)
    }

    pub fn slope(&self) -> f64 {
        (self.b * self.c - self.a * self.d) / (self.c * self.c)
    }

    fn mobius(&self, x: f64) -> Derivatives {
        let y = x - self.l;
        let den = self.c + self.d * y;
        let det = self.b * self.c - self.a * self.d;
        Derivatives {
            value: (self.a + self.b * y) / den,
            first: det / (den * den),
            second: -2.0 * self.d * det / den.powi(3),
            third: 6.0 * self.d * self.d * det / den.powi(4),
        }
    }

    fn affine(&self, x: f64) -> Derivatives {
        Derivatives { value: self.a / self.c + self.slope() * (x - self.l), first: self.slope(), second: 0.0, third: 0.0 }
    }
}

impl NullMap for SqueezedProfile {
    fn domain(&self) -> (f64, f64) {
        match self.pole() {
            Some(p) if p < self.l => (p, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn raw_derivatives(&self, x: f64) -> Derivatives {
        if x < self.l {
            self.mobius(x)
        } else {
            self.affine(x)
        }
    }

    fn kinks(&self) -> &[f64] {
        &self.kink
    }

    fn one_sided(&self, x: f64, right: bool) -> Derivatives {
        if right {
            self.affine(x)
        } else {
            self.mobius(x)
        }
    }
}

pub fn squeezed_profile(r: f64, e_fw: f64, l: f64, c: f64, gauge: Gauge) -> Result<SqueezedProfile> {
    SqueezedProfile::new(r, e_fw, l, c, gauge)
}

/// Quadrature and jump-formula check of one squeezed profile against the
/// closed forms.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileCheck {
    pub profile: SqueezedProfile,
    pub r_e_fw: f64,
    pub e_tot_quadrature: f64,
    pub e_tot_closed: f64,
    pub e_tot_residual: f64,
    pub delta_coefficient: f64,
    pub delta_residual: f64,
    /// `E_tot + rE_fw` from the quadrature.
    pub e_plus: f64,
    /// `rE_fw/(1 − 12πl rE_fw)`.
    pub e_plus_bound: f64,
    /// Relative gap between `e_plus` and the bound; zero when saturated.
    pub saturation_residual: f64,
}

pub fn check_squeezed_profile(profile: &SqueezedProfile) -> Result<ProfileCheck> {
    let re = profile.r_e_fw;
    let k = 12.0 * PI * profile.l * re;
    if !(k < 1.0) {
        return Err(Error::invalid("profile violates 12 pi l r E_fw < 1"));
    }
    // F″/F′ vanishes right of the kink; one unit past it keeps the split honest
    let e_tot_quadrature = total_energy(profile, (0.0, profile.l + 1.0), QuadOptions::rel(1e-12))?;
    let e_tot_closed = k * re / (1.0 - k);
    let delta = flux_delta(profile, profile.l)?;
    let e_plus = e_tot_quadrature + re;
    let e_plus_bound = re / (1.0 - k);
    let rel = |x: f64, y: f64| if y == 0.0 { x.abs() } else { (x - y).abs() / y.abs() };
    Ok(ProfileCheck {
        profile: profile.clone(),
        r_e_fw: re,
        e_tot_quadrature,
        e_tot_closed,
        e_tot_residual: rel(e_tot_quadrature, e_tot_closed),
        delta_coefficient: delta,
        delta_residual: (delta + re).abs(),
        e_plus,
        e_plus_bound,
        saturation_residual: rel(e_plus, e_plus_bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stress_tensor::flux;

    #[test]
    fn optimal_xi_hits_the_infimum() {
        for l in [1.0, 2.0, 0.3] {
            let xi = SamplingFunction::optimal(5.0, 5.0 + l, 33).unwrap();
            let v = xi_energy_functional(&xi).unwrap();
            assert!((v - xi_infimum(l)).abs() < 1e-14 * xi_infimum(l).max(1.0));
        }
        assert!((xi_infimum(1.0) - 0.026526).abs() < 1e-6);
    }

    #[test]
    fn linear_xi_is_flagged_divergent() {
        let xi = SamplingFunction::from_fn(0.0, 1.0, 64, |x| x).unwrap();
        let err = xi_energy_functional(&xi).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn smooth_xi_is_not_flagged() {
        let xi = SamplingFunction::from_fn(0.0, 1.0, 64, |x| x.powf(1.5)).unwrap();
        assert!(xi_energy_functional(&xi).unwrap() > xi_infimum(1.0));
        let xi = SamplingFunction::from_fn(0.0, 1.0, 64, |x: f64| (0.5 * PI * x).sin().powi(2)).unwrap();
        assert!(xi_energy_functional(&xi).unwrap() > xi_infimum(1.0));
    }

    #[test]
    fn invalid_sampling_functions() {
        assert!(SamplingFunction::from_values(vec![0.0, 0.5, 1.0], vec![0.0, -0.1, 1.0]).is_err());
        assert!(SamplingFunction::from_values(vec![0.0, 0.5, 1.0], vec![0.1, 0.2, 1.0]).is_err());
        assert!(SamplingFunction::from_values(vec![0.0, 0.5, 1.0], vec![0.0, 0.2, 0.9]).is_err());
    }

    #[test]
    fn optimizer_recovers_xi_opt() {
        for (l, solver) in [(1.0, XiSolver::Tridiagonal), (2.0, XiSolver::ConjugateGradient)] {
            let (xi, v) = optimize_xi_with(0.0, l, 256, solver).unwrap();
            assert!((v / xi_infimum(l) - 1.0).abs() < 1e-8, "{v}");
            for (x, y) in xi.grid.iter().zip(&xi.values) {
                assert!((y - (x / l).powi(2)).abs() < 1e-8);
            }
        }
        assert!(optimize_xi(0.0, 1.0, 4).is_err());
        assert!(optimize_xi(1.0, 0.0, 16).is_err());
    }

    #[test]
    fn bound_report_examples() {
        let b = firewall_bound(0.01, 1.0, 1.0).unwrap();
        assert!(b.satisfied && !b.diverges);
        assert!((b.bound - 0.026526).abs() < 1e-6);
        assert!((b.e_plus_lower.unwrap() - 0.016051).abs() < 1e-6);
        let t = firewall_bound(1.0 / (12.0 * PI), 1.0, 1.0).unwrap();
        assert!(!t.satisfied && t.diverges && t.e_plus_lower.is_none());
        let z = firewall_bound(0.0, 1.0, 1.0).unwrap();
        assert!(z.satisfied && z.e_plus_lower == Some(0.0));
        assert!(firewall_bound(0.01, 0.0, 1.0).is_err());
        assert!(firewall_bound(0.01, 1.0, -1.0).is_err());
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"e_plus_lower\":null"));
    }

    #[test]
    fn bounds_scale_with_length() {
        let base = firewall_bound(0.01, 1.3, 1.0).unwrap();
        for s in [0.5, 2.0] {
            let scaled = firewall_bound(0.01 / s, 1.3, s).unwrap();
            assert!((scaled.saturation - base.saturation).abs() < 1e-14);
            assert!((scaled.e_plus_lower.unwrap() * s - base.e_plus_lower.unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_parameters_and_flux() {
        let p = squeezed_profile(1.0, 0.01, 1.0, 1.0, Gauge::identity_at(1.0)).unwrap();
        assert!((p.d - 0.376991).abs() < 1e-6);
        assert!((p.r_e_fw - 0.01).abs() < 1e-15);
        for x in [0.1, 0.5, 0.99, 1.01, 3.0] {
            assert!(flux(&p, x).unwrap().abs() < 1e-12, "{x}");
        }
        assert!(flux(&p, 1.0).is_err());
        assert!((flux_delta(&p, 1.0).unwrap() + 0.01).abs() < 1e-10);
        // F and F′ continuous at the kink
        let (lft, rgt) = (p.one_sided(1.0, false), p.one_sided(1.0, true));
        assert!((lft.value - rgt.value).abs() < 1e-14 && (lft.first - rgt.first).abs() < 1e-14);
    }

    #[test]
    fn profile_rejects_pole_inside() {
        assert!(squeezed_profile(1.0, 0.03, 1.0, 1.0, Gauge::identity_at(1.0)).is_err());
        assert!(SqueezedProfile::from_parameters(1.0, 0.0, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn profile_closed_forms() {
        let p = squeezed_profile(1.0, 0.01, 1.0, 1.0, Gauge::identity_at(1.0)).unwrap();
        let r = check_squeezed_profile(&p).unwrap();
        assert!((r.e_tot_closed - 6.0512e-3).abs() < 1e-7);
        assert!(r.e_tot_residual < 1e-9);
        assert!((r.e_plus - 1.60512e-2).abs() < 1e-6);
        assert!(r.saturation_residual < 1e-9);
        assert!(r.delta_residual < 1e-10);
    }

    #[test]
    fn e_plus_increases_towards_the_threshold() {
        let edge = 1.0 / (12.0 * PI);
        let mut prev = 0.0;
        for k in 1..=9 {
            let e = 0.1 * k as f64 * edge;
            let p = squeezed_profile(1.0, e, 1.0, 1.0, Gauge::identity_at(1.0)).unwrap();
            let r = check_squeezed_profile(&p).unwrap();
            assert!(r.e_plus > prev);
            prev = r.e_plus;
        }
        assert!(prev > 9.0 * 0.9 * edge);
    }
}
