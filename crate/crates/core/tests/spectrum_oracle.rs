//! Packet occupations against a position-space double integral.
//!
//! Summing `|β|²` over `ω′` in closed form leaves
//! `n = (1/πω) ∬ W(x)W(y) cos(ω(x−y)) ΔG(x, y) dx dy` with
//! `ΔG = −(1/4π)[f′(x)f′(y)/(f(x)−f(y))² − 1/(x−y)²]`, whose diagonal
//! value is the flux. No oscillatory quadrature and no `ω′` scan involved.

use std::f64::consts::PI;

use mirrorfield::quadrature::GaussLegendre;
use mirrorfield::spectrum::{occupation, planck_factor, Packet};
use mirrorfield::stress_tensor::flux;
use mirrorfield::{Execution, NullMap, Trajectory};

struct Node {
    x: f64,
    weight: f64,
    f: f64,
    fp: f64,
    flux: f64,
}

fn nodes(map: &Trajectory, packet: &Packet) -> Vec<Node> {
    let gl = GaussLegendre::new(16);
    let (lo, hi) = packet.support();
    let panels = (hi - lo).ceil() as usize;
    let h = (hi - lo) / panels as f64;
    let mut out = Vec::new();
    for p in 0..panels {
        let a = lo + h * p as f64;
        for (x, w) in gl.mapped(a, a + h) {
            let d = map.derivatives(x).unwrap();
            out.push(Node { x, weight: w * packet.window(x), f: d.value, fp: d.first, flux: flux(map, x).unwrap() });
        }
    }
    out
}

fn brute_force_occupation(map: &Trajectory, omega: f64, packet: &Packet) -> f64 {
    let pts = nodes(map, packet);
    let mut sum = 0.0;
    for (i, p) in pts.iter().enumerate() {
        sum += p.weight * p.weight * p.flux;
        for q in &pts[i + 1..] {
            let dx = p.x - q.x;
            let df = p.f - q.f;
            let dg = -(p.fp * q.fp / (df * df) - 1.0 / (dx * dx)) / (4.0 * PI);
            sum += 2.0 * p.weight * q.weight * (omega * dx).cos() * dg;
        }
    }
    sum / (PI * omega)
}

#[test]
fn pulse_occupations_match_double_integral() {
    let pulse = Trajectory::pulse(1.0, 50.0).unwrap();
    let packet = Packet::new(25.0, 10.0).unwrap();
    let mut ns = Vec::new();
    for omega in [0.5, 1.0] {
        let fast = occupation(&pulse, omega, &packet, Execution::Parallel).unwrap().occupation;
        let slow = brute_force_occupation(&pulse, omega, &packet);
        assert!((fast / slow - 1.0).abs() < 1e-4, "omega = {omega}: {fast} vs {slow}");
        ns.push(slow);
    }
    // the frequency ratio stays within 10% of the Planck ratio
    let planck = planck_factor(0.5, 1.0) / planck_factor(1.0, 1.0);
    assert!((ns[0] / ns[1] / planck - 1.0).abs() < 0.1);
}

#[test]
fn thermal_occupation_matches_double_integral() {
    let t = Trajectory::thermal(1.0).unwrap();
    let packet = Packet::new(60.0, 6.0).unwrap();
    let fast = occupation(&t, 1.0, &packet, Execution::Parallel).unwrap().occupation;
    let slow = brute_force_occupation(&t, 1.0, &packet);
    assert!((fast / slow - 1.0).abs() < 1e-4, "{fast} vs {slow}");
}
