//! Schmidt spectrum of a single Unruh-mode pair.
//!
//! At Rindler frequency `ω` and acceleration `a` the in-vacuum is a two-mode
//! squeezed state with weights `p_n ∝ qⁿ`, `q = e^{−2πω/a}`. Everything
//! depends on `ω/a` only. With a particle-number truncation `N` the sum runs
//! over `n = 0..=N`, and as `a → ∞` the weights become uniform.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::output::CsvTable;

/// Direct entropy sums longer than this fall back to the closed form.
const MAX_DIRECT_TERMS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchmidtSpectrum {
    pub omega: f64,
    pub a: f64,
    /// Largest kept occupation number; `None` for the full geometric series.
    pub truncation: Option<usize>,
    /// `2πω/a`, the Boltzmann exponent per quantum.
    pub beta: f64,
}

impl SchmidtSpectrum {
    pub fn new(omega: f64, a: f64, truncation: Option<usize>) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) || !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("need omega > 0 and a > 0, got ({omega}, {a})")));
        }
        // ratio first, so that (sω)/(sa) reproduces ω/a exactly for binary s
        let beta = 2.0 * PI * (omega / a);
        Ok(SchmidtSpectrum { omega, a, truncation, beta })
    }

    /// `ln Z`, with `Z = Σ qⁿ` over the kept levels.
    pub fn log_partition(&self) -> f64 {
        let full = -(-(-self.beta).exp_m1()).ln();
        match self.truncation {
            None => full,
            Some(n) => full + (-(-self.beta * (n as f64 + 1.0)).exp_m1()).ln(),
        }
    }

    pub fn log_weight(&self, n: usize) -> f64 {
        -self.beta * n as f64 - self.log_partition()
    }

    pub fn weight(&self, n: usize) -> f64 {
        match self.truncation {
            Some(t) if n > t => 0.0,
            _ => self.log_weight(n).exp(),
        }
    }

    /// Weights for `n = 0..count` (all kept levels when truncated).
    pub fn weights(&self, count: usize) -> Vec<f64> {
        let count = self.truncation.map_or(count, |t| t + 1);
        (0..count).map(|n| self.weight(n)).collect()
    }

    /// Number of terms after which the remaining weight is below `1e-18`.
    fn significant_terms(&self) -> usize {
        match self.truncation {
            Some(t) => t + 1,
            None => {
                let n = (18.0 * 10f64.ln() / self.beta).ceil() + 1.0;
                if n > MAX_DIRECT_TERMS as f64 {
                    usize::MAX
                } else {
                    n as usize
                }
            }
        }
    }

    /// `−Σ pₙ ln pₙ` by direct summation.
    pub fn entropy(&self) -> f64 {
        let terms = self.significant_terms();
        if terms == usize::MAX {
            return self.gibbs_entropy();
        }
        (0..terms)
            .map(|n| {
                let lp = self.log_weight(n);
                -lp.exp() * lp
            })
            .sum()
    }

    /// Mean occupation `Σ n pₙ`.
    pub fn mean_number(&self) -> f64 {
        match self.truncation {
            None => 1.0 / self.beta.exp_m1(),
            Some(t) => (0..=t).map(|n| n as f64 * self.weight(n)).sum(),
        }
    }

    /// Thermal identity `S = β⟨n⟩ + ln Z`.
    pub fn gibbs_entropy(&self) -> f64 {
        self.beta * self.mean_number() + self.log_partition()
    }

    /// Entropy of `N + 1` equal weights, the `a → ∞` limit of a truncated mode.
    pub fn max_entropy(&self) -> Option<f64> {
        self.truncation.map(|t| (t as f64 + 1.0).ln())
    }

    pub fn to_csv(&self, count: usize) -> CsvTable {
        let mut t = CsvTable::new(&["n", "weight"]);
        for (n, w) in self.weights(count).into_iter().enumerate() {
            t.push(vec![n as f64, w]);
        }
        t.meta("omega", self.omega).meta("a", self.a);
        t.meta("truncation", self.truncation.map_or("none".to_string(), |n| n.to_string()));
        t.meta("entropy", crate::output::fmt_e12(self.entropy()));
        t
    }
}

pub fn schmidt_spectrum(omega: f64, a: f64, truncation: Option<usize>) -> Result<SchmidtSpectrum> {
    SchmidtSpectrum::new(omega, a, truncation)
}

pub fn mode_entropy(omega: f64, a: f64, truncation: Option<usize>) -> Result<f64> {
    Ok(SchmidtSpectrum::new(omega, a, truncation)?.entropy())
}

/// Largest weight difference between `(ω, a)` and `(sω, sa)`.
pub fn rescaling_invariance_check(omega: f64, a: f64, s: f64, truncation: Option<usize>) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("scale must be positive, got {s}")));
    }
    let base = SchmidtSpectrum::new(omega, a, truncation)?;
    let scaled = SchmidtSpectrum::new(s * omega, s * a, truncation)?;
    let count = truncation.map_or(64, |t| t + 1);
    Ok(base
        .weights(count)
        .iter()
        .zip(scaled.weights(count))
        .fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

/// The frequency product factorizes, so the entropy of `K` modes is a sum.
pub fn multimode_entropy(omegas: &[f64], a: f64, truncation: Option<usize>) -> Result<f64> {
    omegas.iter().map(|&w| mode_entropy(w, a, truncation)).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct UnruhSummary {
    pub spectrum: SchmidtSpectrum,
    pub entropy: f64,
    pub gibbs_entropy: f64,
    pub mean_number: f64,
    pub max_entropy: Option<f64>,
}

impl UnruhSummary {
    pub fn new(spectrum: SchmidtSpectrum) -> Self {
        UnruhSummary {
            entropy: spectrum.entropy(),
            gibbs_entropy: spectrum.gibbs_entropy(),
            mean_number: spectrum.mean_number(),
            max_entropy: spectrum.max_entropy(),
            spectrum,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cold_limit_keeps_the_vacuum() {
        let s = schmidt_spectrum(1.0, 1e-3, Some(5)).unwrap();
        assert!((s.weight(0) - 1.0).abs() < 1e-15);
        assert!(s.weight(1) < 1e-300);
        assert!(mode_entropy(1.0, 1e-3, None).unwrap().abs() < 1e-12);
    }

    #[test]
    fn unit_exponent_geometric_weights() {
        let s = schmidt_spectrum(1.0 / (2.0 * PI), 1.0, None).unwrap();
        let q = (-1.0f64).exp();
        for n in 0..10 {
            let expect = (1.0 - q) * (-(n as f64)).exp();
            assert!((s.weight(n) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn hot_truncated_mode_is_nearly_uniform() {
        let s = schmidt_spectrum(1.0, 1e9, Some(3)).unwrap();
        for w in s.weights(0) {
            assert!((w - 0.25).abs() < 1e-8);
        }
        assert!((s.entropy() - 4f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn weights_are_normalized_and_decreasing() {
        for (w, a, n) in [(1.0, 1.0, Some(0)), (0.3, 2.0, Some(7)), (2.0, 0.5, None), (1.0, 40.0, None)] {
            let s = schmidt_spectrum(w, a, n).unwrap();
            let ws = s.weights(20_000);
            let total: f64 = ws.iter().sum();
            assert!((total - 1.0).abs() < 1e-14, "{total}");
            assert!(ws.windows(2).all(|p| p[1] <= p[0]));
        }
    }

    #[test]
    fn direct_entropy_matches_thermal_identity() {
        for r in [0.01, 0.1, 1.0, 3.0] {
            let s = schmidt_spectrum(r, 1.0, None).unwrap();
            assert!((s.entropy() - s.gibbs_entropy()).abs() < 1e-10, "{r}");
        }
        let s = schmidt_spectrum(0.4, 1.0, Some(6)).unwrap();
        assert!((s.entropy() - s.gibbs_entropy()).abs() < 1e-12);
    }

    #[test]
    fn rescaling_leaves_the_spectrum_unchanged() {
        assert_eq!(rescaling_invariance_check(0.7, 1.3, 1.0, Some(3)).unwrap(), 0.0);
        assert!(rescaling_invariance_check(0.7, 1.3, 2.0, None).unwrap() < 1e-15);
        let e1 = mode_entropy(0.7, 1.3, Some(4)).unwrap();
        let e2 = mode_entropy(2.1, 3.9, Some(4)).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn entropy_grows_with_acceleration() {
        let mut prev = -1.0;
        for a in [0.1, 1.0, 10.0, 100.0, 1e4] {
            let s = mode_entropy(1.0, a, Some(3)).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn multimode_entropy_adds() {
        let w = [0.5, 1.0, 1.5];
        let total = multimode_entropy(&w, 2.0, Some(2)).unwrap();
        let sum: f64 = w.iter().map(|&x| mode_entropy(x, 2.0, Some(2)).unwrap()).sum();
        assert_eq!(total, sum);
    }

    #[test]
    fn csv_lists_all_kept_levels() {
        let s = schmidt_spectrum(1.0, 2.0, Some(3)).unwrap();
        let text = s.to_csv(100).to_string_lossy();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
    }
}
