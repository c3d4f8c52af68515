//! Vacuum energy flux radiated by a monotone null-ray map.
//!
//! For a map `F` the flux is `−(1/24π)[F‴/F′ − (3/2)(F″/F′)²]`, i.e.
//! `−S(F)/24π` with `S` the Schwarzian derivative. The same formula gives
//! `⟨T₋₋⟩` behind a mirror `x⁺ = f(x⁻)` and `⟨T₊₊⟩` in the squeezed state
//! generated by a profile `F(x⁺)`. Where `F″` jumps (a registered kink) the
//! flux carries a Dirac delta with coefficient
//! `−(1/24π)·[(F″/F′)(k⁺) − (F″/F′)(k⁻)]`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::output::{fmt_e12, CsvTable};
use crate::quadrature::{adaptive_with_breaks, QuadOptions};
use crate::trajectory::{Derivatives, NullMap};

/// Plateau flux `κ²/48π = πT²/12` of a mirror radiating at `T = κ/2π`.
pub fn thermal_plateau(kappa: f64) -> f64 {
    kappa * kappa / (48.0 * PI)
}

pub fn schwarzian(d: &Derivatives) -> f64 {
    let q = d.second / d.first;
    d.third / d.first - 1.5 * q * q
}

pub fn flux_from(d: &Derivatives) -> f64 {
    -schwarzian(d) / (24.0 * PI)
}

fn at_kink<M: NullMap + ?Sized>(map: &M, x: f64) -> Option<f64> {
    map.kinks().iter().copied().find(|&k| (k - x).abs() <= 1e-12 * k.abs().max(1.0))
}

/// Energy flux at a smooth point of `map`.
pub fn flux<M: NullMap + ?Sized>(map: &M, x: f64) -> Result<f64> {
    if let Some(k) = at_kink(map, x) {
        return Err(Error::AtKink(k));
    }
    Ok(flux_from(&map.derivatives(x)?))
}

/// Dirac-delta coefficient of the flux at `kink`; zero where the map is C².
pub fn flux_delta<M: NullMap + ?Sized>(map: &M, kink: f64) -> Result<f64> {
    let (lo, hi) = map.domain();
    if !(kink > lo && kink < hi) {
        return Err(Error::OutOfDomain { x: kink, lo, hi });
    }
    let left = map.one_sided(kink, false);
    let right = map.one_sided(kink, true);
    if !(left.first > 0.0 && right.first > 0.0) {
        return Err(Error::NonMonotone { x: kink, derivative: left.first.min(right.first) });
    }
    let jump_first = (right.first - left.first).abs();
    if jump_first > 1e-9 * left.first.abs().max(right.first.abs()) {
        return Err(Error::invalid(format!(
            "F' jumps by {jump_first:e} at {kink}; only F'' discontinuities are supported"
        )));
    }
    let log_slope = |d: &Derivatives| d.second / d.first;
    Ok(-(log_slope(&right) - log_slope(&left)) / (24.0 * PI))
}

/// `(1/48π)∫(F″/F′)² dx` over `region`, split at registered kinks. Delta
/// terms contribute nothing here; their energy is accounted separately.
pub fn total_energy<M: NullMap + ?Sized>(map: &M, region: (f64, f64), opts: QuadOptions) -> Result<f64> {
    let (a, b) = region;
    let (lo, hi) = map.domain();
    if !(a >= lo && b <= hi && a < b) {
        return Err(Error::invalid(format!("region [{a}, {b}] not inside domain [{lo}, {hi}]")));
    }
    // check monotonicity at the ends once; the integrand checks the interior
    map.derivatives(a)?;
    map.derivatives(b)?;
    let integrand = |x: f64| {
        let d = map.raw_derivatives(x);
        let q = d.second / d.first;
        q * q
    };
    let r = adaptive_with_breaks(integrand, a, b, map.kinks(), opts)?;
    if !r.value.is_finite() {
        return Err(Error::no_convergence("total energy", "non-finite integral"));
    }
    Ok(r.value / (48.0 * PI))
}

/// Sampled flux plus the delta terms at kinks inside the sampled range.
#[derive(Debug, Clone, Serialize)]
pub struct FluxProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub deltas: Vec<(f64, f64)>,
}

impl FluxProfile {
    /// Evaluates the flux on `grid`. Grid points that coincide with a kink
    /// are rejected.
    pub fn sample<M: NullMap + ?Sized>(map: &M, grid: &[f64], exec: Execution) -> Result<Self> {
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("flux grid must be strictly increasing"));
        }
        let values = exec.try_map(grid, |&x| flux(map, x))?;
        let mut deltas = Vec::new();
        if let (Some(&first), Some(&last)) = (grid.first(), grid.last()) {
            for &k in map.kinks() {
                if k >= first && k <= last {
                    deltas.push((k, flux_delta(map, k)?));
                }
            }
        }
        Ok(FluxProfile { grid: grid.to_vec(), values, deltas })
    }

    /// Multiply coordinates by `x_scale` and flux values by `flux_scale`
    /// (delta coefficients carry one power of length less).
    pub fn rescaled(&self, x_scale: f64, flux_scale: f64) -> Self {
        FluxProfile {
            grid: self.grid.iter().map(|x| x * x_scale).collect(),
            values: self.values.iter().map(|v| v * flux_scale).collect(),
            deltas: self.deltas.iter().map(|&(x, c)| (x * x_scale, c * flux_scale * x_scale)).collect(),
        }
    }

    /// Columns `x, flux`; deltas as trailing `# delta <x> <coefficient>`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["x", "flux"]);
        for (x, v) in self.grid.iter().zip(&self.values) {
            t.push(vec![*x, *v]);
        }
        for (x, c) in &self.deltas {
            t.trailer.push(format!("delta {} {}", fmt_e12(*x), fmt_e12(*c)));
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{Mobius, Trajectory};

    #[test]
    fn identity_has_no_flux() {
        let id = Trajectory::identity();
        for x in [-5.0, 0.0, 3.0, 1e6] {
            assert_eq!(flux(&id, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn thermal_plateau_value() {
        let t = Trajectory::thermal(1.0).unwrap();
        let v = flux(&t, 10.0).unwrap();
        assert!((v / thermal_plateau(1.0) - 1.0).abs() < 1e-8);
        assert!((thermal_plateau(1.0) - 6.6315e-3).abs() < 1e-7);
    }

    #[test]
    fn thermal_flux_closed_form() {
        // κ²/(48π)·(1 − s²) with s = 1/(1 + e^{κx}), derived by hand
        let kappa = 1.7;
        let t = Trajectory::thermal(kappa).unwrap();
        for x in [-4.0, -1.0, 0.0, 0.3, 2.0] {
            let s = 1.0 / (1.0 + (kappa * x).exp());
            let expect = thermal_plateau(kappa) * (1.0 - s * s);
            assert!((flux(&t, x).unwrap() - expect).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn mobius_and_affine_maps_have_zero_flux() {
        let m = Mobius::new(0.3, 2.0, 1.0, 0.25, (-1.0, 50.0)).unwrap();
        let affine = Mobius::new(-1.0, 3.0, 1.0, 0.0, (-10.0, 10.0)).unwrap();
        for x in [-0.5, 0.0, 1.0, 7.0, 40.0] {
            assert!(flux(&m, x).unwrap().abs() < 1e-12);
        }
        assert_eq!(flux(&affine, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn smooth_map_has_no_delta() {
        let t = Trajectory::thermal(1.0).unwrap();
        assert_eq!(flux_delta(&t, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn identity_total_energy_vanishes() {
        let e = total_energy(&Trajectory::identity(), (0.0, 10.0), QuadOptions::default()).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn thermal_total_energy_grows_at_plateau_rate() {
        let t = Trajectory::thermal(1.0).unwrap();
        let e1 = total_energy(&t, (0.0, 20.0), QuadOptions::default()).unwrap();
        let e2 = total_energy(&t, (0.0, 40.0), QuadOptions::default()).unwrap();
        let slope = (e2 - e1) / 20.0;
        assert!((slope / thermal_plateau(1.0) - 1.0).abs() < 1e-6, "slope {slope}");
    }

    #[test]
    fn profile_rejects_unsorted_grid_and_keeps_order() {
        let t = Trajectory::thermal(1.0).unwrap();
        assert!(FluxProfile::sample(&t, &[1.0, 0.5], Execution::Sequential).is_err());
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.3).collect();
        let a = FluxProfile::sample(&t, &grid, Execution::Sequential).unwrap();
        let b = FluxProfile::sample(&t, &grid, Execution::Parallel).unwrap();
        assert_eq!(a.values, b.values);
        let csv = a.to_csv().to_string_lossy();
        assert!(csv.starts_with("x,flux\n0.000000000000e+00,"));
    }
}
