use num_complex::Complex64;
use proptest::prelude::*;

use tribell::inequalities::InequalityKind;
use tribell::quantum::{
    correlator_in, direction, evaluate_quantum, ghz_correlator, optimize_settings,
    optimize_settings_with, GhzState, MeasurementSettings, OptimizerConfig,
};
use tribell::{Context, Party};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn angle() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

/// `Re prod (n_x - i n_y)`, the GHZ three-body correlator in closed form.
fn closed_form(vectors: [[f64; 3]; 3]) -> f64 {
    vectors
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, n| acc * Complex64::new(n[0], -n[1]))
        .re
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn in_plane_correlator_is_cosine(a in angle(), b in angle(), c in angle(), d in angle(), e in angle(), f in angle()) {
        let az = [[a, b], [c, d], [e, f]];
        let settings = MeasurementSettings::in_plane(az);
        for ctx in Context::all_full() {
            let [x, y, z] = ctx.settings().map(|s| s.unwrap() as usize);
            let expected = (az[0][x] + az[1][y] + az[2][z]).cos();
            prop_assert!((ghz_correlator(&settings, &ctx) - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn general_directions_match_closed_form(angles in prop::array::uniform12(angle())) {
        let settings = MeasurementSettings::from_angles(&angles);
        for ctx in Context::all_full() {
            let vectors = Party::ALL.map(|p| settings.vector(p, ctx.setting(p).unwrap()));
            prop_assert!((ghz_correlator(&settings, &ctx) - closed_form(vectors)).abs() <= 1e-12);
        }
        let pair = Context::pair(Party::C, 0, 1);
        let (a0, b1) = (settings.vector(Party::A, 0), settings.vector(Party::B, 1));
        prop_assert!((ghz_correlator(&settings, &pair) - a0[2] * b1[2]).abs() <= 1e-12);
    }

    #[test]
    fn quantum_values_respect_their_maxima(angles in prop::array::uniform12(angle())) {
        let settings = MeasurementSettings::from_angles(&angles);
        prop_assert!(evaluate_quantum(InequalityKind::Mermin, &settings).abs() <= 4.0 + 1e-9);
        prop_assert!(evaluate_quantum(InequalityKind::Svetlichny, &settings).abs() <= 4.0 * SQRT_2 + 1e-9);
        prop_assert!(evaluate_quantum(InequalityKind::Ns2, &settings).abs() <= 1.0 + 2.0 * SQRT_2 + 1e-9);
    }

    #[test]
    fn global_phase_is_unobservable(angles in prop::array::uniform12(angle()), phase in angle()) {
        let settings = MeasurementSettings::from_angles(&angles);
        let rotated = GhzState::with_phase(phase);
        prop_assert!((rotated.norm() - 1.0).abs() <= 1e-12);
        for ctx in Context::all_full() {
            let plain = ghz_correlator(&settings, &ctx);
            prop_assert!((correlator_in(&rotated, &settings, &ctx) - plain).abs() <= 1e-12);
        }
    }
}

#[test]
fn pauli_settings() {
    let x = direction(std::f64::consts::FRAC_PI_2, 0.0);
    let y = direction(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    let settings = MeasurementSettings::new([[x, y], [x, y], [x, y]]).unwrap();
    assert!((ghz_correlator(&settings, &Context::full(0, 0, 0)) - 1.0).abs() < 1e-12);
    assert!((ghz_correlator(&settings, &Context::full(1, 1, 0)) + 1.0).abs() < 1e-12);
    assert!(ghz_correlator(&settings, &Context::full(1, 0, 0)).abs() < 1e-12);

    let (pi6, pi3) = (std::f64::consts::FRAC_PI_6, std::f64::consts::FRAC_PI_3);
    let tilted = MeasurementSettings::in_plane([[-pi6, pi3]; 3]);
    assert!((evaluate_quantum(InequalityKind::Mermin, &tilted).abs() - 4.0).abs() < 1e-12);
}

#[test]
fn non_unit_directions_are_rejected() {
    let x = [1.0, 0.0, 0.0];
    assert!(MeasurementSettings::new([[x, x], [x, [0.5, 0.0, 0.0]], [x, x]]).is_err());
}

#[test]
fn optimizer_reaches_known_maxima() {
    for (kind, target) in [
        (InequalityKind::Mermin, 4.0),
        (InequalityKind::Svetlichny, 4.0 * SQRT_2),
        (InequalityKind::Ns2, 1.0 + 2.0 * SQRT_2),
    ] {
        let (settings, value) = optimize_settings(kind);
        assert!((value - target).abs() <= 1e-6, "{kind}: {value}");
        assert!((evaluate_quantum(kind, &settings) - value).abs() <= 1e-12);
    }
}

#[test]
fn optimizer_is_deterministic() {
    let config = OptimizerConfig {
        starts: 2,
        ..OptimizerConfig::default()
    };
    let a = optimize_settings_with(InequalityKind::Svetlichny, &config);
    let b = optimize_settings_with(InequalityKind::Svetlichny, &config);
    assert_eq!(a.angles, b.angles);
    assert_eq!(a.value, b.value);
}
