use std::f64::consts::{PI, TAU};

use freqbin_core::statekit::{
    branch_probabilities, fpbs_decompose, frequency_difference, pump_phase, sagnac_state,
    solve_signal_wavelength, Branch, PhotonFrequencies, PumpPolarization,
};
use freqbin_core::C64;
use proptest::prelude::*;

#[test]
fn closed_form_bunching_law_on_a_dense_grid() {
    for k in 0..1000 {
        let phi0 = -2.0 * TAU + 4.0 * TAU * k as f64 / 999.0;
        let d = fpbs_decompose(&sagnac_state(phi0).unwrap()).unwrap();
        let pb = d.amp_first.norm_sqr();
        let pab = d.amp_second.norm_sqr();
        assert!((pb - (phi0 / 2.0).cos().powi(2)).abs() < 1e-12);
        assert!((pab - (phi0 / 2.0).sin().powi(2)).abs() < 1e-12);
        assert!((d.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn decomposition_preserves_norm(phi0 in -2.0 * TAU..2.0 * TAU) {
        let d = fpbs_decompose(&sagnac_state(phi0).unwrap()).unwrap();
        prop_assert!((d.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branch_probabilities_ignore_global_phase(phi0 in -PI..PI, theta in -PI..PI) {
        let s = sagnac_state(phi0).unwrap();
        let a = branch_probabilities(&fpbs_decompose(&s).unwrap()).unwrap();
        let b = branch_probabilities(&fpbs_decompose(&s.with_global_phase(theta)).unwrap()).unwrap();
        prop_assert!((a.total() - 1.0).abs() < 1e-12);
        for br in Branch::ALL {
            prop_assert!((a.get(br) - b.get(br)).abs() < 1e-12);
        }
        prop_assert_eq!(a.get(Branch::Aa), a.get(Branch::Bb));
        prop_assert_eq!(a.get(Branch::Ab), a.get(Branch::Ba));
    }

    #[test]
    fn pump_phase_matches_relative_argument(h_arg in -PI..PI, v_arg in -PI..PI, mix in 0.05f64..0.95) {
        let pol = PumpPolarization::new(
            C64::from_polar(mix.sqrt(), h_arg),
            C64::from_polar((1.0 - mix).sqrt(), v_arg),
        ).unwrap();
        let z = pol.amplitude_v() * pol.amplitude_h().conj();
        let oracle = z.im.atan2(z.re);
        let got = pump_phase(&pol);
        prop_assert!((-PI..=PI).contains(&got));
        // equal up to the ±π seam
        let d = (got - oracle).abs();
        prop_assert!(d < 1e-12 || (d - TAU).abs() < 1e-12);
    }

    #[test]
    fn wavelength_round_trip(lambda_pump in 1500.0f64..1600.0, offset in -30.0f64..30.0) {
        let idler = lambda_pump + offset;
        let signal = solve_signal_wavelength(lambda_pump, idler).unwrap();
        let lhs = 2.0 / lambda_pump;
        prop_assert!(((1.0 / signal + 1.0 / idler) - lhs).abs() / lhs < 1e-12);

        let freqs = PhotonFrequencies::new(lambda_pump, signal, idler).unwrap();
        let dw = frequency_difference(&freqs);
        let back = PhotonFrequencies::from_difference(lambda_pump, dw).unwrap();
        prop_assert!(((back.lambda_signal() - signal) / signal).abs() < 1e-9);
        prop_assert!(((back.lambda_idler() - idler) / idler).abs() < 1e-9);
    }
}
