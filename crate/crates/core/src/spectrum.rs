//! Out-mode particle content of the in-vacuum.
//!
//! An out wave packet `u(x⁻) = W(x⁻) e^{−iωx⁻} / √(4πω)` with a Gaussian
//! window `W` is carried to past null infinity through `x⁻ = g(x⁺)` and
//! projected on in plane waves `e^{∓iω′x⁺} / √(4πω′)`. Changing the
//! integration variable to `x = g(x⁺)` gives
//!
//! ```text
//! β(ω′) = (1/2π) √(ω′/ω) ∫ W(x) f′(x) e^{−i(ωx + ω′f(x))} dx
//! α(ω′) = (1/2π) √(ω′/ω) ∫ W(x) f′(x) e^{ i(ω′f(x) − ωx)} dx
//! ```
//!
//! The `β` phase is strictly monotone, so each overlap is one Levin-type
//! oscillatory integral. The occupation `n = ∫ |β|² dω′` is integrated in
//! `s = ln ω′` over unit segments, scanning outward from the frequency the
//! packet centre is redshifted to until the contributions die off, and the
//! remaining tail is extrapolated geometrically.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::output::CsvTable;
use crate::quadrature::{oscillatory, GaussLegendre, OscOptions, Oscillatory};
use crate::trajectory::NullMap;

/// Gaussian windows are cut off this many standard deviations from the centre.
pub const TRUNCATION: f64 = 8.0;

/// Below this `σω` the packet is too short to isolate frequency `ω` and the
/// identity-trajectory leakage `e^{−σ²ω²}` stops being negligible.
pub const NARROWBAND_LIMIT: f64 = 5.0;

const SEGMENT_NODES: usize = 24;
const SEGMENT_BATCH: usize = 4;
const STOP_REL: f64 = 1e-10;
const QUIET_SEGMENTS: usize = 3;
const MAX_SEGMENTS: usize = 600;

/// Gaussian out-time window `W(x) = exp(−(x − center)² / 2σ²)` with unit
/// peak; `width` is `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Packet {
    pub center: f64,
    pub width: f64,
}

impl Packet {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !center.is_finite() || !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid(format!("packet needs finite centre and positive width, got ({center}, {width})")));
        }
        Ok(Packet { center, width })
    }

    pub fn window(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        if z.abs() > TRUNCATION {
            0.0
        } else {
            (-0.5 * z * z).exp()
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - TRUNCATION * self.width, self.center + TRUNCATION * self.width)
    }

    /// Klein–Gordon norm of the packet mode, `∫ W² dx / 2π`.
    pub fn kg_norm(&self) -> f64 {
        self.width * PI.sqrt() / (2.0 * PI)
    }
}

/// Plane-wave out mode seen at past null infinity, `e^{−iω g(x⁺)}`.
pub fn mode_function<M: NullMap>(map: &M, omega: f64, x_plus: f64) -> Result<Complex64> {
    check_omega(omega)?;
    Ok(Complex64::cis(-omega * map.invert(x_plus)?))
}

/// Sign convention for the overlap integrals. `Conjugate` evaluates the
/// complex-conjugated integrand (phase running the other way) and
/// conjugates the result; moduli agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    #[default]
    Standard,
    Conjugate,
}

struct Overlap<'a, M: ?Sized> {
    map: &'a M,
    packet: Packet,
    omega: f64,
    omega_prime: f64,
    /// `α` phase `ω′f − ωx` instead of the `β` phase `−(ω′f + ωx)`.
    alpha: bool,
    flip: bool,
}

impl<M: NullMap + ?Sized> Overlap<'_, M> {
    fn sign(&self) -> f64 {
        if self.flip {
            -1.0
        } else {
            1.0
        }
    }
}

impl<M: NullMap + ?Sized> Oscillatory for Overlap<'_, M> {
    fn amplitude(&self, x: f64) -> Complex64 {
        let d = self.map.raw_derivatives(x);
        Complex64::new(self.packet.window(x) * d.first, 0.0)
    }

    fn phase(&self, x: f64) -> f64 {
        let f = self.map.raw_derivatives(x).value;
        let p = if self.alpha { self.omega_prime * f - self.omega * x } else { -(self.omega_prime * f + self.omega * x) };
        self.sign() * p
    }

    fn phase_rate(&self, x: f64) -> f64 {
        let fp = self.map.raw_derivatives(x).first;
        let r = if self.alpha { self.omega_prime * fp - self.omega } else { -(self.omega_prime * fp + self.omega) };
        self.sign() * r
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("frequency must be positive, got {omega}")));
    }
    Ok(())
}

fn integration_range<M: NullMap + ?Sized>(map: &M, packet: &Packet) -> Result<(f64, f64)> {
    let (lo, hi) = packet.support();
    let (dlo, dhi) = map.domain();
    let (a, b) = (lo.max(dlo), hi.min(dhi));
    if !(a < b) {
        return Err(Error::invalid(format!("packet support [{lo}, {hi}] misses the domain ({dlo}, {dhi})")));
    }
    // check derivatives once so that raw evaluation inside is safe
    map.derivatives(0.5 * (a + b))?;
    Ok((a, b))
}

fn overlap<M: NullMap + ?Sized>(
    map: &M,
    omega: f64,
    packet: &Packet,
    omega_prime: f64,
    alpha: bool,
    convention: Convention,
) -> Result<Complex64> {
    check_omega(omega)?;
    check_omega(omega_prime)?;
    let (a, b) = integration_range(map, packet)?;
    let flip = convention == Convention::Conjugate;
    let g = Overlap { map, packet: *packet, omega, omega_prime, alpha, flip };
    let opts = OscOptions { rel_tol: 1e-7, abs_tol: 1e-9 * packet.width / omega_prime.max(1.0), ..Default::default() };
    let integral = oscillatory(&g, a, b, opts)?;
    let integral = if flip { integral.conj() } else { integral };
    Ok(integral * ((omega_prime / omega).sqrt() / (2.0 * PI)))
}

/// Negative-frequency overlap `β(ω′)` of the packet mode at `ω`.
pub fn bogoliubov_beta<M: NullMap + ?Sized>(map: &M, omega: f64, packet: &Packet, omega_prime: f64) -> Result<Complex64> {
    overlap(map, omega, packet, omega_prime, false, Convention::Standard)
}

pub fn bogoliubov_beta_with<M: NullMap + ?Sized>(
    map: &M,
    omega: f64,
    packet: &Packet,
    omega_prime: f64,
    convention: Convention,
) -> Result<Complex64> {
    overlap(map, omega, packet, omega_prime, false, convention)
}

/// Positive-frequency overlap `α(ω′)`. Its phase is stationary where
/// `ω′f′ = ω`; the adaptive rule falls back to Gauss–Legendre there.
pub fn bogoliubov_alpha<M: NullMap + ?Sized>(map: &M, omega: f64, packet: &Packet, omega_prime: f64) -> Result<Complex64> {
    overlap(map, omega, packet, omega_prime, true, Convention::Standard)
}

/// Result of [`occupation`].
#[derive(Debug, Clone, Serialize)]
pub struct Occupation {
    pub omega: f64,
    pub packet: Packet,
    /// Expected particle number in the packet mode.
    pub occupation: f64,
    /// Occupation divided by the packet's Klein–Gordon norm; for a
    /// stationary thermal flux this approaches the Planck factor.
    pub normalized: f64,
    /// Geometric estimate of the `ω′` tails beyond the scanned range,
    /// already included in `occupation`.
    pub tail: f64,
    /// Scanned `ln ω′` range.
    pub log_omega_prime: (f64, f64),
    /// `σω` below [`NARROWBAND_LIMIT`].
    pub narrowband: bool,
    /// The packet's 6σ core reaches outside the map's radiating epoch.
    pub outside_radiating_epoch: bool,
}

/// `1/(e^{2πω/κ} − 1)`.
pub fn planck_factor(omega: f64, kappa: f64) -> f64 {
    1.0 / (2.0 * PI * omega / kappa).exp_m1()
}

fn outside_epoch<M: NullMap + ?Sized>(map: &M, packet: &Packet) -> bool {
    // the 6σ core, so that Gaussian tails alone do not trip the flag
    let (lo, hi) = (packet.center - 6.0 * packet.width, packet.center + 6.0 * packet.width);
    match map.radiating_epoch() {
        Some((start, end)) => lo < start || hi > end,
        None => false,
    }
}

/// Expected number of out particles in the packet mode at frequency `ω`.
pub fn occupation<M: NullMap + ?Sized>(map: &M, omega: f64, packet: &Packet, exec: Execution) -> Result<Occupation> {
    check_omega(omega)?;
    let (a, b) = integration_range(map, packet)?;
    let centre = packet.center.clamp(a, b);
    let fp = map.eval(centre, 1)?;
    // the packet centre radiates mostly near ω′ = ω / f′(centre)
    let s_c = (omega / fp).ln().floor();
    let gl = GaussLegendre::new(SEGMENT_NODES);
    let floor = 1e-18 * packet.kg_norm();

    let segment_values = |starts: &[f64]| -> Result<Vec<f64>> {
        let nodes: Vec<(usize, f64, f64)> = starts
            .iter()
            .enumerate()
            .flat_map(|(k, &s0)| gl.mapped(s0, s0 + 1.0).map(move |(s, w)| (k, s, w)))
            .collect();
        let vals = exec.try_map(&nodes, |&(_, s, w)| {
            let wp = s.exp();
            bogoliubov_beta(map, omega, packet, wp).map(|beta| w * beta.norm_sqr() * wp)
        })?;
        let mut out = vec![0.0; starts.len()];
        for ((k, _, _), v) in nodes.iter().zip(vals) {
            out[*k] += v;
        }
        Ok(out)
    };

    let mut total = 0.0;
    let mut tails = [0.0; 2];
    let mut reach = [s_c, s_c];
    let mut scanned = 0usize;
    for (dir, step) in [(0usize, -1.0f64), (1, 1.0)] {
        let mut next = if dir == 0 { s_c - 1.0 } else { s_c };
        let mut history: Vec<f64> = Vec::new();
        loop {
            let starts: Vec<f64> = (0..SEGMENT_BATCH).map(|k| next + step * k as f64).collect();
            let vals = segment_values(&starts)?;
            for (&s0, &v) in starts.iter().zip(&vals) {
                total += v;
                history.push(v);
                reach[dir] = if dir == 0 { s0 } else { s0 + 1.0 };
            }
            next += step * SEGMENT_BATCH as f64;
            scanned += SEGMENT_BATCH;
            let n = history.len();
            let quiet = n >= QUIET_SEGMENTS
                && history[n - QUIET_SEGMENTS..].iter().all(|&v| v <= STOP_REL * total || v <= floor);
            if quiet {
                let (prev, last) = (history[n - 2], history[n - 1]);
                if last <= floor || prev <= floor {
                    break;
                }
                let r = last / prev;
                if r < 1.0 {
                    tails[dir] = last * r / (1.0 - r);
                    break;
                }
            }
            if scanned >= MAX_SEGMENTS {
                return Err(Error::no_convergence(
                    "occupation",
                    format!("|beta|^2 still significant after {scanned} unit segments in ln(omega')"),
                ));
            }
        }
    }
    let tail = tails[0] + tails[1];
    let occupation = total + tail;
    Ok(Occupation {
        omega,
        packet: *packet,
        occupation,
        normalized: occupation / packet.kg_norm(),
        tail,
        log_omega_prime: (reach[0], reach[1]),
        narrowband: packet.width * omega < NARROWBAND_LIMIT,
        outside_radiating_epoch: outside_epoch(map, packet),
    })
}

/// Occupations over a frequency grid for one packet.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSpectrum {
    pub packet: Packet,
    pub omegas: Vec<f64>,
    pub occupations: Vec<f64>,
    pub normalized: Vec<f64>,
    pub narrowband: bool,
    pub outside_radiating_epoch: bool,
}

impl ModeSpectrum {
    pub fn compute<M: NullMap + ?Sized>(map: &M, omegas: &[f64], packet: &Packet, exec: Execution) -> Result<Self> {
        let mut occupations = Vec::with_capacity(omegas.len());
        let mut normalized = Vec::with_capacity(omegas.len());
        let mut narrowband = false;
        let mut outside = false;
        for &w in omegas {
            let o = occupation(map, w, packet, exec)?;
            narrowband |= o.narrowband;
            outside |= o.outside_radiating_epoch;
            occupations.push(o.occupation);
            normalized.push(o.normalized);
        }
        Ok(ModeSpectrum {
            packet: *packet,
            omegas: omegas.to_vec(),
            occupations,
            normalized,
            narrowband,
            outside_radiating_epoch: outside,
        })
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["omega", "occupation", "packet_center", "packet_width"]);
        for (&w, &n) in self.omegas.iter().zip(&self.occupations) {
            t.push(vec![w, n, self.packet.center, self.packet.width]);
        }
        t.meta("narrowband", self.narrowband);
        t.meta("outside_radiating_epoch", self.outside_radiating_epoch);
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Trajectory;

    #[test]
    fn mode_function_phase_and_modulus() {
        let t = Trajectory::thermal(1.0).unwrap();
        let x0 = 1.7;
        let v = mode_function(&t, 1.0, t.value(x0).unwrap()).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-14);
        assert!((v - Complex64::cis(-x0)).norm() < 1e-9);
        let id = Trajectory::identity();
        let v = mode_function(&id, 2.5, 0.3).unwrap();
        assert!((v - Complex64::cis(-0.75)).norm() < 1e-12);
    }

    #[test]
    fn mode_function_near_horizon_is_power_law() {
        let t = Trajectory::thermal(1.0).unwrap();
        let omega = 1.0;
        for xp in [-1e-5, -5e-5, -9e-5] {
            let v = mode_function(&t, omega, xp).unwrap();
            let approx = Complex64::cis(omega * (-xp).ln());
            assert!((v / approx).arg().abs() < 1e-3, "{xp}");
        }
        assert!(mode_function(&t, 1.0, 0.5).is_err());
    }

    #[test]
    fn identity_beta_is_gaussian_transform() {
        let id = Trajectory::identity();
        let p = Packet::new(3.0, 2.0).unwrap();
        let (w, wp) = (1.5, 0.4);
        let b = bogoliubov_beta(&id, w, &p, wp).unwrap();
        let k = w + wp;
        let exact = (wp / w).sqrt() / (2.0 * PI) * p.width * (2.0 * PI).sqrt() * (-0.5 * (p.width * k).powi(2)).exp();
        assert!((b.norm() - exact).abs() < 1e-12, "{} vs {exact}", b.norm());
    }

    #[test]
    fn conventions_agree_in_modulus() {
        let t = Trajectory::thermal(1.0).unwrap();
        let p = Packet::new(10.0, 2.0).unwrap();
        for wp in [0.1, 3.0, 2e3, 1e5] {
            let a = bogoliubov_beta(&t, 1.0, &p, wp).unwrap();
            let b = bogoliubov_beta_with(&t, 1.0, &p, wp, Convention::Conjugate).unwrap();
            assert!((a.norm_sqr() - b.norm_sqr()).abs() <= 1e-6 * a.norm_sqr().max(1e-300), "{wp}");
        }
    }

    #[test]
    fn identity_occupation_vanishes() {
        let id = Trajectory::identity();
        for (w, sigma) in [(1.0, 5.0), (0.5, 10.0), (2.0, 3.0)] {
            let o = occupation(&id, w, &Packet::new(0.0, sigma).unwrap(), Execution::Parallel).unwrap();
            assert!(o.occupation.abs() < 1e-10, "{w} {sigma}: {}", o.occupation);
            assert!(!o.narrowband);
        }
        let o = occupation(&id, 0.1, &Packet::new(0.0, 2.0).unwrap(), Execution::Sequential).unwrap();
        assert!(o.narrowband);
    }

    // For a stationary thermal map the correlator difference has Fourier
    // transform K(ν) = (|ν|/2)/(e^{2π|ν|/κ} − 1), so the packet occupation is a
    // one-dimensional convolution of K with the window's power spectrum.
    fn stationary_oracle(omega: f64, sigma: f64) -> f64 {
        use crate::quadrature::{adaptive, QuadOptions};
        let k = |nu: f64| if nu == 0.0 { 1.0 / (4.0 * PI) } else { 0.5 * nu.abs() / (2.0 * PI * nu.abs()).exp_m1() };
        let w2 = |q: f64| 2.0 * PI * sigma * sigma * (-(sigma * q).powi(2)).exp();
        let g = |nu: f64| k(nu) * 0.5 * (w2(nu - omega) + w2(nu + omega));
        let cut = omega + 12.0 / sigma;
        let v = adaptive(g, -cut, cut, QuadOptions::rel(1e-12)).unwrap().value;
        v / (2.0 * PI * PI * omega)
    }

    #[test]
    fn thermal_packet_matches_stationary_oracle() {
        let t = Trajectory::thermal(1.0).unwrap();
        for (w, sigma) in [(1.0, 6.0), (0.5, 10.0)] {
            let p = Packet::new(10.0 * sigma, sigma).unwrap();
            let o = occupation(&t, w, &p, Execution::Parallel).unwrap();
            let expect = stationary_oracle(w, sigma);
            assert!((o.occupation / expect - 1.0).abs() < 1e-4, "{} vs {expect}", o.occupation);
            assert!(!o.outside_radiating_epoch);
        }
        // wide packets approach the Planck factor itself
        let o = stationary_oracle(1.0, 200.0) / Packet::new(0.0, 200.0).unwrap().kg_norm();
        assert!((o / planck_factor(1.0, 1.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let t = Trajectory::thermal(1.0).unwrap();
        let p = Packet::new(40.0, 5.0).unwrap();
        let a = occupation(&t, 1.0, &p, Execution::Sequential).unwrap();
        let b = occupation(&t, 1.0, &p, Execution::Parallel).unwrap();
        assert_eq!(a.occupation, b.occupation);
    }

    #[test]
    fn spectrum_csv_columns() {
        let t = Trajectory::thermal(1.0).unwrap();
        let s = ModeSpectrum::compute(&t, &[1.0, 2.0], &Packet::new(40.0, 5.0).unwrap(), Execution::Parallel).unwrap();
        assert!(s.occupations[1] < s.occupations[0] && s.occupations[1] > 0.0);
        let text = s.to_csv().to_string_lossy();
        assert!(text.lines().any(|l| l == "omega,occupation,packet_center,packet_width"));
    }
}
