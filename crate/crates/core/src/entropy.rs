//! Entanglement entropy of an interval of future null infinity.
//!
//! `S(x₁, x₂) = (1/12) ln[(f(x₂) − f(x₁))² / (f′(x₂) f′(x₁) ε₁ ε₂)]` with
//! width cutoffs `ε` given in out-coordinates, the vacuum-referenced
//! `S_ren` (cutoffs replaced by the interval length), and the strong
//! subadditivity combination `S_AB + S_BC − S_B − S_ABC` for three adjacent
//! blocks of equal width.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{NullMap, Trajectory};

/// An interval `[x1, x2]` with UV width cutoffs at each endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSpec {
    pub x1: f64,
    pub x2: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl IntervalSpec {
    pub fn new(x1: f64, x2: f64, eps1: f64, eps2: f64) -> Result<Self> {
        if !(x1 < x2) {
            return Err(Error::invalid(format!("interval needs x1 < x2, got [{x1}, {x2}]")));
        }
        if !(eps1 > 0.0 && eps2 > 0.0) {
            return Err(Error::invalid("cutoffs must be positive"));
        }
        Ok(IntervalSpec { x1, x2, eps1, eps2 })
    }

    /// Cutoffs should be small against the interval; this is advisory only.
    pub fn cutoff_warning(&self) -> bool {
        let tenth = (self.x2 - self.x1) / 10.0;
        self.eps1 >= tenth || self.eps2 >= tenth
    }

    pub fn shifted(&self, c: f64) -> Self {
        IntervalSpec { x1: self.x1 + c, x2: self.x2 + c, ..*self }
    }
}

/// Entropy of `[x1⁺, x2⁺]` in the in-vacuum, cutoffs in in-coordinates.
pub fn entropy_in(x1p: f64, x2p: f64, eps1p: f64, eps2p: f64) -> Result<f64> {
    if x1p == x2p {
        return Err(Error::invalid("coincident endpoints"));
    }
    if !(eps1p > 0.0 && eps2p > 0.0) {
        return Err(Error::invalid("cutoffs must be positive"));
    }
    Ok((2.0 * (x2p - x1p).abs().ln() - eps1p.ln() - eps2p.ln()) / 12.0)
}

/// Interval entropy behind the mirror `map`.
pub fn hlw_entropy<M: NullMap + ?Sized>(map: &M, spec: &IntervalSpec) -> Result<f64> {
    let d1 = map.derivatives(spec.x1)?;
    let d2 = map.derivatives(spec.x2)?;
    let gap = d2.value - d1.value;
    if !(gap > 0.0) {
        return Err(Error::invalid(format!("f(x2) - f(x1) = {gap:e} is not positive")));
    }
    // sum of logs so that f' down to 1e-300 stays finite
    Ok((2.0 * gap.ln() - d1.first.ln() - d2.first.ln() - spec.eps1.ln() - spec.eps2.ln()) / 12.0)
}

/// Out-coordinate cutoffs carried to in-coordinates, `ε⁺ = f′(x)·ε⁻`.
pub fn in_cutoffs<M: NullMap + ?Sized>(map: &M, spec: &IntervalSpec) -> Result<(f64, f64)> {
    Ok((map.eval(spec.x1, 1)? * spec.eps1, map.eval(spec.x2, 1)? * spec.eps2))
}

/// `(1/12) ln[(f(x₂) − f(x₁))² / (f′(x₂) f′(x₁) (x₂ − x₁)²)]`.
pub fn renormalized_entropy<M: NullMap + ?Sized>(map: &M, x1: f64, x2: f64) -> Result<f64> {
    if !(x1 < x2) {
        return Err(Error::invalid(format!("interval needs x1 < x2, got [{x1}, {x2}]")));
    }
    let d1 = map.derivatives(x1)?;
    let d2 = map.derivatives(x2)?;
    let gap = d2.value - d1.value;
    if !(gap > 0.0) {
        return Err(Error::invalid(format!("f(x2) - f(x1) = {gap:e} is not positive")));
    }
    Ok((2.0 * gap.ln() - d1.first.ln() - d2.first.ln() - 2.0 * (x2 - x1).ln()) / 12.0)
}

/// Rindler-wedge entropy `(1/6) ln(x₂/x₁)`: entropy density `πT/3` at
/// `T = κ/2π` integrated over `[u₁, u₂]`, written in the inertial
/// coordinate `x = e^{κu}/κ`.
pub fn rindler_entropy(x1: f64, x2: f64) -> Result<f64> {
    if !(x1 > 0.0 && x2 >= x1) {
        return Err(Error::invalid(format!("need 0 < x1 <= x2, got ({x1}, {x2})")));
    }
    Ok((x2 / x1).ln() / 6.0)
}

/// Entropy of `[0, l]` on a circle of circumference `circumference`,
/// obtained from the Rindler form with the conformally mapped cutoffs
/// `ε_o = (π/L) ε₂ / sin(πl/L)`, `L_o = (L/πε₁) sin(πl/L)`.
///
/// The Rindler form counts both chiralities. A single chiral sector (the
/// reflected field at null infinity) carries half of it, which reduces to
/// `(1/12) ln(l²/ε₁ε₂)` as `L → ∞`.
pub fn circle_interval_entropy(l: f64, eps1: f64, eps2: f64, circumference: f64) -> Result<f64> {
    use std::f64::consts::PI;
    if !(l > 0.0 && circumference > l) {
        return Err(Error::invalid("need 0 < l < L"));
    }
    let s = (PI * l / circumference).sin();
    let eps_o = PI / circumference * eps2 / s;
    let len_o = circumference / (PI * eps1) * s;
    Ok(0.5 * rindler_entropy(eps_o, len_o)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SsaKind {
    Raw,
    Renormalized,
}

impl std::str::FromStr for SsaKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(SsaKind::Raw),
            "renormalized" | "ren" => Ok(SsaKind::Renormalized),
            _ => Err(Error::invalid(format!("unknown entropy kind {s:?} (raw | renormalized)"))),
        }
    }
}

/// Strong-subadditivity combination for `A = [b, b+l]`, `B = [b+l, b+2l]`,
/// `C = [b+2l, b+3l]`.
#[derive(Debug, Clone, Serialize)]
pub struct SsaReport {
    pub kind: SsaKind,
    pub base: f64,
    pub l: f64,
    /// Endpoint cutoffs (raw kind only).
    pub cutoffs: Option<[f64; 4]>,
    pub s_ab: f64,
    pub s_bc: f64,
    pub s_b: f64,
    pub s_abc: f64,
    /// `S_AB + S_BC − S_B − S_ABC` as computed from the four entropies.
    pub delta: f64,
    /// The same quantity from the closed cross-ratio form.
    pub delta_cross_ratio: f64,
}

/// `(f₂ − f₀)(f₃ − f₁) / ((f₂ − f₁)(f₃ − f₀))`; at least 1 for increasing f.
pub fn cross_ratio(f: [f64; 4]) -> f64 {
    ((f[2] - f[0]) * (f[3] - f[1])) / ((f[2] - f[1]) * (f[3] - f[0]))
}

/// The width term `(1/6) ln(3/4)` that equal blocks add to `ΔS_ren`.
pub fn renormalized_width_term() -> f64 {
    0.75f64.ln() / 6.0
}

/// SSA check with the default cutoff `10⁻³·l` at every endpoint.
pub fn ssa_check<M: NullMap + ?Sized>(map: &M, base: f64, l: f64, kind: SsaKind) -> Result<SsaReport> {
    ssa_check_with_cutoffs(map, base, l, kind, [1e-3 * l; 4])
}

pub fn ssa_check_with_cutoffs<M: NullMap + ?Sized>(
    map: &M,
    base: f64,
    l: f64,
    kind: SsaKind,
    cutoffs: [f64; 4],
) -> Result<SsaReport> {
    if !(l > 0.0) {
        return Err(Error::invalid(format!("block width must be positive, got {l}")));
    }
    let x = [base, base + l, base + 2.0 * l, base + 3.0 * l];
    let mut f = [0.0; 4];
    for (fk, &xk) in f.iter_mut().zip(&x) {
        *fk = map.value(xk)?;
    }
    let (s_ab, s_bc, s_b, s_abc) = match kind {
        SsaKind::Raw => {
            let s = |i: usize, j: usize| {
                hlw_entropy(map, &IntervalSpec::new(x[i], x[j], cutoffs[i], cutoffs[j])?)
            };
            (s(0, 2)?, s(1, 3)?, s(1, 2)?, s(0, 3)?)
        }
        SsaKind::Renormalized => {
            let s = |i: usize, j: usize| renormalized_entropy(map, x[i], x[j]);
            (s(0, 2)?, s(1, 3)?, s(1, 2)?, s(0, 3)?)
        }
    };
    let mut delta_cross_ratio = cross_ratio(f).ln() / 6.0;
    if kind == SsaKind::Renormalized {
        delta_cross_ratio += renormalized_width_term();
    }
    Ok(SsaReport {
        kind,
        base,
        l,
        cutoffs: (kind == SsaKind::Raw).then_some(cutoffs),
        s_ab,
        s_bc,
        s_b,
        s_abc,
        delta: s_ab + s_bc - s_b - s_abc,
        delta_cross_ratio,
    })
}

/// Monotone map with `f(base) = 0`, `f(base + l) = ε`, `f(base + 2l) = l`,
/// `f(base + 3l) = 2l`. Its renormalized SSA combination tends to
/// `(1/6) ln(3/4) < 0` as `ε → 0`.
pub fn ssa_counterexample(base: f64, l: f64, eps: f64) -> Result<Trajectory> {
    if !(eps > 0.0 && eps < l) {
        return Err(Error::invalid("need 0 < eps < l"));
    }
    Trajectory::tabulated(&[(base, 0.0), (base + l, eps), (base + 2.0 * l, l), (base + 3.0 * l, 2.0 * l)])
}

/// Echo of the inputs with the computed entropies, for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    pub interval: IntervalSpec,
    pub hlw: f64,
    pub renormalized: f64,
    pub in_coordinates: (f64, f64),
    pub in_cutoffs: (f64, f64),
    pub cutoff_warning: bool,
}

impl EntropyReport {
    pub fn compute<M: NullMap + ?Sized>(map: &M, spec: &IntervalSpec) -> Result<Self> {
        Ok(EntropyReport {
            interval: *spec,
            hlw: hlw_entropy(map, spec)?,
            renormalized: renormalized_entropy(map, spec.x1, spec.x2)?,
            in_coordinates: (map.value(spec.x1)?, map.value(spec.x2)?),
            in_cutoffs: in_cutoffs(map, spec)?,
            cutoff_warning: spec.cutoff_warning(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Mobius;

    #[test]
    fn identity_interval_value() {
        let id = Trajectory::identity();
        let spec = IntervalSpec::new(0.0, 1.0, 0.01, 0.01).unwrap();
        let s = hlw_entropy(&id, &spec).unwrap();
        assert!((s - 1e4f64.ln() / 12.0).abs() < 1e-14);
        assert!((s - 0.767528).abs() < 1e-6);
    }

    #[test]
    fn identity_is_translation_invariant() {
        let id = Trajectory::identity();
        let spec = IntervalSpec::new(0.3, 2.1, 0.02, 0.005).unwrap();
        let s0 = hlw_entropy(&id, &spec).unwrap();
        for c in [-100.0, -1.0, 0.5, 37.0] {
            assert!((hlw_entropy(&id, &spec.shifted(c)).unwrap() - s0).abs() < 1e-13);
        }
    }

    #[test]
    fn in_coordinate_form_agrees_after_cutoff_transport() {
        let t = Trajectory::thermal(1.0).unwrap();
        let spec = IntervalSpec::new(-2.0, 6.0, 1e-3, 2e-3).unwrap();
        let (e1, e2) = in_cutoffs(&t, &spec).unwrap();
        let s_out = hlw_entropy(&t, &spec).unwrap();
        let s_in = entropy_in(t.value(-2.0).unwrap(), t.value(6.0).unwrap(), e1, e2).unwrap();
        assert!((s_out - s_in).abs() < 1e-12);
        // feeding transported cutoffs back into the out formula divides by f′ twice
        let fp1 = t.eval(-2.0, 1).unwrap();
        let fp2 = t.eval(6.0, 1).unwrap();
        let gap = t.value(6.0).unwrap() - t.value(-2.0).unwrap();
        let twice = hlw_entropy(&t, &IntervalSpec::new(-2.0, 6.0, e1, e2).unwrap()).unwrap();
        let expect = (gap * gap / (fp2 * fp2 * fp1 * fp1 * 1e-3 * 2e-3)).ln() / 12.0;
        assert!((twice - expect).abs() < 1e-12);
    }

    #[test]
    fn cutoff_warning_is_advisory() {
        let spec = IntervalSpec::new(0.0, 1.0, 0.2, 0.01).unwrap();
        assert!(spec.cutoff_warning());
        assert!(hlw_entropy(&Trajectory::identity(), &spec).is_ok());
        assert!(IntervalSpec::new(1.0, 1.0, 0.1, 0.1).is_err());
        assert!(IntervalSpec::new(0.0, 1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn renormalized_vanishes_for_vacuum_and_mobius() {
        let id = Trajectory::identity();
        assert_eq!(renormalized_entropy(&id, -3.0, 8.0).unwrap(), 0.0);
        let m = Mobius::new(0.5, 2.0, 1.0, 0.3, (-1.0, 100.0)).unwrap();
        for w in [10.0, 1.0, 0.1, 1e-3] {
            assert!(renormalized_entropy(&m, 2.0, 2.0 + w).unwrap().abs() < 1e-12, "w={w}");
        }
    }

    #[test]
    fn renormalized_depends_on_vacuum_endpoint() {
        let t = Trajectory::thermal(1.0).unwrap();
        let a = renormalized_entropy(&t, -30.0, 5.0).unwrap();
        let b = renormalized_entropy(&t, -25.0, 5.0).unwrap();
        let c = renormalized_entropy(&t, -20.0, 5.0).unwrap();
        assert!(a > b && b > c, "{a} {b} {c}");
        let f2 = t.value(5.0).unwrap();
        let fp2 = t.eval(5.0, 1).unwrap();
        let reduced = ((f2 + 30.0).powi(2) / (fp2 * 35.0f64.powi(2))).ln() / 12.0;
        assert!((a - reduced).abs() < 1e-10);
    }

    #[test]
    fn identity_ssa_raw() {
        let r = ssa_check(&Trajectory::identity(), 3.0, 1.0, SsaKind::Raw).unwrap();
        assert!((r.delta - (4.0f64 / 3.0).ln() / 6.0).abs() < 1e-13);
        assert!((r.delta - 0.047947).abs() < 1e-6);
        assert!((r.delta - r.delta_cross_ratio).abs() < 1e-13);
    }

    #[test]
    fn identity_ssa_renormalized_is_zero() {
        let r = ssa_check(&Trajectory::identity(), 0.0, 2.0, SsaKind::Renormalized).unwrap();
        assert!(r.delta.abs() < 1e-13 && r.delta_cross_ratio.abs() < 1e-13);
    }

    #[test]
    fn raw_ssa_ignores_cutoffs() {
        let t = Trajectory::pulse(1.0, 20.0).unwrap();
        let a = ssa_check_with_cutoffs(&t, 2.0, 3.0, SsaKind::Raw, [1e-3, 2e-2, 5e-4, 0.1]).unwrap();
        let b = ssa_check_with_cutoffs(&t, 2.0, 3.0, SsaKind::Raw, [1e-6; 4]).unwrap();
        assert!((a.delta - b.delta).abs() < 1e-12);
    }

    #[test]
    fn counterexample_breaks_renormalized_ssa() {
        let f = ssa_counterexample(0.0, 1.0, 1e-6).unwrap();
        let r = ssa_check(&f, 0.0, 1.0, SsaKind::Renormalized).unwrap();
        assert!(r.delta < 0.0);
        assert!((r.delta - renormalized_width_term()).abs() < 1e-3);
        assert!((renormalized_width_term() + 0.047947).abs() < 1e-6);
        let raw = ssa_check(&f, 0.0, 1.0, SsaKind::Raw).unwrap();
        assert!(raw.delta >= 0.0);
    }

    #[test]
    fn rindler_values() {
        assert!((rindler_entropy(1.0, 6f64.exp()).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(rindler_entropy(2.0, 2.0).unwrap(), 0.0);
        assert!(rindler_entropy(0.0, 1.0).is_err());
        assert!(rindler_entropy(-1.0, 1.0).is_err());
    }

    #[test]
    fn circle_entropy_reaches_open_line_limit() {
        let (l, e1, e2): (f64, f64, f64) = (2.0, 1e-3, 4e-3);
        let open = (l * l / (e1 * e2)).ln() / 12.0;
        let mut prev_gap = f64::INFINITY;
        for big in [1e2, 1e3, 1e4, 1e6] {
            let gap = (circle_interval_entropy(l, e1, e2, big).unwrap() - open).abs();
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-9);
    }
}
