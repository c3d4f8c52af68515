//! Independent estimates used as cross-checks by the acceptance runners.

use std::f64::consts::PI;

use crate::error::Result;
use crate::qei::SqueezedProfile;
use crate::quadrature::{adaptive, QuadOptions};

/// `(1 + sin(πt/2))/2` on `[−1, 1]`, clamped outside; C¹ at both ends.
fn smooth_step(t: f64) -> (f64, f64) {
    if t <= -1.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        (0.5 * (1.0 + (0.5 * PI * t).sin()), 0.25 * PI * (0.5 * PI * t).cos())
    }
}

/// Flux integrated across the kink after blending `F″/F′` from its
/// left-hand Möbius form to zero over `[l − w, l + w]`.
///
/// With `q = F″/F′` the flux is `−(1/24π)(q′ − q²/2)`; outside the blend
/// region it vanishes for this profile, so the integral is the smeared
/// delta coefficient.
pub fn mollified_delta(profile: &SqueezedProfile, w: f64) -> Result<f64> {
    let l = profile.l;
    let q_left = |x: f64| {
        let den = profile.c + profile.d * (x - l);
        (-2.0 * profile.d / den, 2.0 * profile.d * profile.d / (den * den))
    };
    let integrand = |x: f64| {
        let (q, dq) = q_left(x);
        let (s, ds) = smooth_step((x - l) / w);
        let qw = q * (1.0 - s);
        let dqw = dq * (1.0 - s) - q * ds / w;
        -(dqw - 0.5 * qw * qw) / (24.0 * PI)
    };
    Ok(adaptive(integrand, l - w, l + w, QuadOptions::rel(1e-12))?.value)
}

/// Linear extrapolation of [`mollified_delta`] to zero blend width from
/// `w` and `w/2`.
pub fn mollified_delta_limit(profile: &SqueezedProfile, w: f64) -> Result<f64> {
    let a = mollified_delta(profile, w)?;
    let b = mollified_delta(profile, 0.5 * w)?;
    Ok(2.0 * b - a)
}
