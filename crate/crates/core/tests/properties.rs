use std::f64::consts::PI;

use mirrorfield::entropy::{hlw_entropy, ssa_check, ssa_check_with_cutoffs, IntervalSpec, SsaKind};
use mirrorfield::measurement::{one_bit_flux, unitarity_sum_check, MeasurementWindow};
use mirrorfield::qei::{firewall_bound, xi_energy_functional, xi_infimum, SamplingFunction};
use mirrorfield::stress_tensor::flux;
use mirrorfield::trajectory::Mobius;
use mirrorfield::unruh::schmidt_spectrum;
use mirrorfield::Trajectory;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raw_ssa_holds_and_matches_cross_ratio(seed in any::<u64>(), l in 0.05f64..3.0, t in 0.0f64..1.0) {
        let traj = Trajectory::random_monotone(seed, 16, -5.0, 5.0).unwrap();
        let base = -5.0 + t * (10.0 - 3.0 * l);
        let r = ssa_check(&traj, base, l, SsaKind::Raw).unwrap();
        prop_assert!(r.delta >= -1e-12);
        prop_assert!((r.delta - r.delta_cross_ratio).abs() <= 1e-12);
    }

    #[test]
    fn raw_ssa_is_cutoff_independent(seed in any::<u64>(), e in prop::array::uniform4(1e-6f64..1e-2)) {
        let traj = Trajectory::random_monotone(seed, 12, 0.0, 4.0).unwrap();
        let a = ssa_check(&traj, 0.5, 1.0, SsaKind::Raw).unwrap();
        let b = ssa_check_with_cutoffs(&traj, 0.5, 1.0, SsaKind::Raw, e).unwrap();
        prop_assert!((a.delta - b.delta).abs() < 1e-12);
    }

    #[test]
    fn identity_entropy_is_translation_invariant(x1 in -50.0f64..50.0, len in 0.1f64..10.0, shift in -100.0f64..100.0, e1 in 1e-4f64..1e-2, e2 in 1e-4f64..1e-2) {
        let id = Trajectory::identity();
        let spec = IntervalSpec::new(x1, x1 + len, e1, e2).unwrap();
        let a = hlw_entropy(&id, &spec).unwrap();
        let b = hlw_entropy(&id, &spec.shifted(shift)).unwrap();
        prop_assert!((a - b).abs() < 1e-11);
        // swapping the two cutoffs leaves the entropy unchanged
        let c = hlw_entropy(&id, &IntervalSpec::new(x1, x1 + len, e2, e1).unwrap()).unwrap();
        prop_assert!((a - c).abs() < 1e-13);
    }

    #[test]
    fn mobius_maps_leave_entropy_and_flux_alone(b in 0.5f64..2.0, d in 0.01f64..0.1, x1 in 0.0f64..2.0, len in 0.1f64..3.0) {
        // F = b x / (1 + d x) is increasing for x > −1/d
        let m = Mobius::new(0.0, b, 1.0, d, (-0.5 / d, 1e6)).unwrap();
        let spec = IntervalSpec::new(x1, x1 + len, 1e-3, 2e-3).unwrap();
        let s_m = hlw_entropy(&m, &spec).unwrap();
        let s_id = hlw_entropy(&Trajectory::identity(), &spec).unwrap();
        prop_assert!((s_m - s_id).abs() < 1e-10);
        prop_assert!(flux(&m, x1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn one_bit_outcomes_cancel(seed in any::<u64>(), lo in -5.0f64..0.0, w in 0.2f64..3.0, gap in 0.01f64..20.0) {
        let win = MeasurementWindow::random(seed, lo, lo + w).unwrap();
        let x = lo + w + gap;
        prop_assert_eq!(unitarity_sum_check(&win, x).unwrap(), 0.0);
        prop_assert!(one_bit_flux(&win, 1, x).unwrap() >= 0.0);
    }

    #[test]
    fn perturbing_the_optimum_costs_energy(amps in prop::collection::vec(-0.3f64..0.3, 1..5), l in 0.5f64..3.0) {
        // √ξ = u + Σ a_k sin(kπu), u = (x − x_E)/l, keeps both end values
        let amps2 = amps.clone();
        let sqrt_xi = move |x: f64| {
            let u = x / l;
            u + amps2.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * PI * u).sin()).sum::<f64>()
        };
        let xi = SamplingFunction::from_fn(0.0, l, 512, move |x| sqrt_xi(x).powi(2)).unwrap();
        let v = xi_energy_functional(&xi).unwrap();
        prop_assert!(v >= xi_infimum(l) * (1.0 - 1e-12));
    }

    #[test]
    fn bound_is_scale_free(frac in 0.0f64..0.99, r in 0.1f64..10.0, l in 0.1f64..10.0, s in 0.1f64..10.0) {
        let e = frac / (12.0 * PI * r * l);
        let a = firewall_bound(e, r, l).unwrap();
        let b = firewall_bound(e / s, r, l * s).unwrap();
        prop_assert_eq!(a.satisfied, b.satisfied);
        prop_assert!((a.saturation - b.saturation).abs() < 1e-12);
        prop_assert!((a.e_plus_lower.unwrap() - s * b.e_plus_lower.unwrap()).abs() <= 1e-12 * a.e_plus_lower.unwrap().max(1e-300));
    }

    #[test]
    fn thermal_flux_scales_with_kappa(kappa in 0.1f64..5.0, x in -20.0f64..20.0) {
        let t1 = Trajectory::thermal(1.0).unwrap();
        let tk = Trajectory::thermal(kappa).unwrap();
        let a = flux(&tk, x / kappa).unwrap();
        let b = kappa * kappa * flux(&t1, x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-12));
    }

    #[test]
    fn schmidt_weights_are_normalized(omega in 1e-2f64..10.0, a in 1e-2f64..10.0, n in prop::option::of(0usize..50)) {
        let s = schmidt_spectrum(omega, a, n).unwrap();
        let total: f64 = s.weights(200_000).iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(s.entropy() >= -1e-15);
        if let Some(m) = s.max_entropy() {
            prop_assert!(s.entropy() <= m + 1e-12);
        }
    }
}
