use duffing_kg::fate::{classify_fate, profile_difference, Certificate, FateKind, VelocityProfile};
use duffing_kg::ode::{energy_identity_residual, integrate, EventKind, IntegratorOptions, Termination};
use duffing_kg::phase::{classify_region, energy, static_energy, Damping, Region, State};
use proptest::prelude::*;

fn st(u: f64, v: f64) -> State<f64> {
    State::new(u, v).unwrap()
}

fn damp(g: f64) -> Damping<f64> {
    Damping::new(g).unwrap()
}

/// A sub-threshold state with `|u| < 1`, from fractions in `[-1, 1]`.
fn kplus(a: f64, b: f64) -> State<f64> {
    let u = 0.98 * a;
    let vmax = (2.0 * (0.25 - static_energy(u))).sqrt();
    st(u, 0.98 * b * vmax)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_identity_within_tolerance(a in -1.0f64..1.0, b in -1.0f64..1.0, g in 0.0f64..2.0) {
        let s0 = kplus(a, b);
        let opts = IntegratorOptions::default().with_t_max(20.0);
        let tr = integrate(s0, damp(g), &opts).unwrap();
        prop_assert_eq!(tr.termination, Termination::TimeLimit);
        let bound = 100.0 * (opts.abs_tol + opts.rel_tol * energy(s0).abs());
        prop_assert!(energy_identity_residual(&tr) <= bound);
    }

    #[test]
    fn damped_energy_never_increases(u in -2.0f64..2.0, v in -2.0f64..2.0, g in 0.01f64..2.0) {
        let opts = IntegratorOptions::default().with_t_max(20.0);
        let tr = integrate(st(u, v), damp(g), &opts).unwrap();
        for w in tr.samples().windows(2) {
            let (e0, e1) = (w[0].energy(), w[1].energy());
            let slack = 10.0 * (opts.abs_tol + opts.rel_tol * e0.abs());
            prop_assert!(e1 <= e0 + slack, "E rose from {} to {} at t = {}", e0, e1, w[1].t);
        }
    }

    #[test]
    fn undamped_flow_is_reversible(a in -1.0f64..1.0, b in -1.0f64..1.0, t in 1.0f64..20.0) {
        let s0 = kplus(a, b);
        let opts = IntegratorOptions::default().with_t_max(t);
        let fwd = integrate(s0, damp(0.0), &opts).unwrap();
        let end = fwd.last().state;
        let back = integrate(st(end.u, -end.v), damp(0.0), &opts).unwrap();
        let home = back.last().state;
        prop_assert!((home.u - s0.u).abs() <= 1e-7 && (home.v + s0.v).abs() <= 1e-7);
    }

    #[test]
    fn kminus_certificates_survive_tighter_tolerance(u in -2.5f64..2.5, v in 0.0f64..2.5, g in 0.05f64..3.0) {
        let s0 = st(u, v);
        prop_assume!(!classify_region(s0).is_subthreshold());
        let opts = IntegratorOptions::default();
        let f = classify_fate(s0, damp(g), &opts);
        if f.kind == FateKind::BlowUp && f.certificate == Certificate::Event(EventKind::EnteredKMinus) {
            let tight = opts.tightened(10.0).stopping_on(&[EventKind::EnteredKMinus, EventKind::EnteredKPlus]);
            let tr = integrate(s0, damp(g), &tight).unwrap();
            prop_assert!(tr.first_event(EventKind::EnteredKMinus).is_some());
        }
    }

    #[test]
    fn k_regions_are_forward_invariant(u in -2.5f64..2.5, v in -2.5f64..2.5, g in 0.05f64..3.0) {
        let tr = integrate(st(u, v), damp(g), &IntegratorOptions::default().with_t_max(60.0)).unwrap();
        if let Some(e) = tr.first_event(EventKind::EnteredKPlus) {
            for s in tr.samples().iter().filter(|s| s.t > e.t) {
                prop_assert!(s.energy() < 0.25 && s.state.u.abs() < 1.0);
            }
        }
        if let Some(e) = tr.first_event(EventKind::EnteredKMinus) {
            for s in tr.samples().iter().filter(|s| s.t > e.t) {
                prop_assert!(s.energy() < 0.25 && s.state.u.abs() > 1.0);
            }
        }
    }

    #[test]
    fn slower_damping_has_higher_velocity_profile(
        u in -0.9f64..2.0, v in 0.05f64..2.0, g1 in 0.0f64..2.0, dg in 0.01f64..1.5,
    ) {
        let s0 = st(u, v);
        let opts = IntegratorOptions::default();
        let lo = VelocityProfile::compute(s0, damp(g1), &opts, 10.0).unwrap();
        let hi = VelocityProfile::compute(s0, damp(g1 + dg), &opts, 10.0).unwrap();
        let phi = profile_difference(&lo, &hi, 120);
        prop_assert!(phi.len() >= 100);
        for (x, p) in phi {
            prop_assert!(p > 0.0, "phi({}) = {}", x, p);
        }
    }

    #[test]
    fn n2_decays_above_the_damping_bound(a in -0.95f64..0.95, extra in 0.0f64..2.0, dg in 0.001f64..3.0) {
        // v² > 1/2 - u² + u⁴/2 keeps E > 1/4
        let vmin = (0.5 - a * a + a.powi(4) / 2.0).sqrt();
        let s0 = st(a, vmin + 0.01 + extra);
        prop_assert_eq!(classify_region(s0), Region::N2);
        let bound = (s0.v / (1.0 - s0.u)).max(s0.v);
        let f = classify_fate(s0, damp(bound * (1.0 + 1e-3) + dg), &IntegratorOptions::default());
        prop_assert_ne!(f.kind, FateKind::BlowUp);
    }
}

#[test]
fn ledger_matches_tighter_run() {
    let s0 = st(0.0, 0.9);
    let opts = IntegratorOptions::default().with_t_max(10.0);
    let a = integrate(s0, damp(0.5), &opts).unwrap();
    let b = integrate(s0, damp(0.5), &opts.tightened(10.0)).unwrap();
    assert!(energy_identity_residual(&a) <= 1e-8);
    assert!((a.last().dissipation - b.last().dissipation).abs() <= 1e-8);
}

#[test]
fn conservative_orbits_hold_energy() {
    let opts = IntegratorOptions::default().with_t_max(20.0);
    for (u, v) in [(0.0, 0.7), (0.9, 0.0), (-0.5, -0.4), (0.3, 0.1)] {
        let tr = integrate(st(u, v), damp(0.0), &opts).unwrap();
        assert!(energy_identity_residual(&tr) <= 1e-9, "({u}, {v})");
    }
}
