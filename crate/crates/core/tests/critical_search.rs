use duffing_kg::critical::{
    find_gamma0_gamma1_n3, find_gamma0_n2, find_u1, u1_lower_bound, N3Thresholds, SearchOptions,
};
use duffing_kg::phase::{classify_region, energy, Damping, Region, State};
use proptest::prelude::*;

fn st(u: f64, v: f64) -> State<f64> {
    State::new(u, v).unwrap()
}

/// Independent fate oracle: fixed-step classical RK4, stopping once the state
/// is sub-threshold (sign of `|u| - 1` decides) or `|u|` is large.
/// Returns +1 for escape through `u > 1`, -1 through `u < -1`, 0 for decay.
fn rk4_fate(s: State<f64>, gamma: f64) -> i32 {
    let f = |u: f64, v: f64| (v, u * u * u - u - gamma * v);
    let (mut u, mut v) = (s.u, s.v);
    let h = 1e-3;
    for _ in 0..2_000_000 {
        let e = u * u / 2.0 - u.powi(4) / 4.0 + v * v / 2.0;
        if u.abs() > 50.0 || (e < 0.25 - 1e-9 && u.abs() > 1.0) {
            return if u > 0.0 { 1 } else { -1 };
        }
        if e < 0.25 - 1e-9 && u.abs() < 1.0 {
            return 0;
        }
        let k1 = f(u, v);
        let k2 = f(u + h / 2.0 * k1.0, v + h / 2.0 * k1.1);
        let k3 = f(u + h / 2.0 * k2.0, v + h / 2.0 * k2.1);
        let k4 = f(u + h * k3.0, v + h * k3.1);
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    panic!("rk4 oracle did not settle");
}

#[test]
fn gamma0_reproducible_across_tolerances() {
    let s0 = st(0.0, 0.8);
    assert!((energy(s0) - 0.32).abs() < 1e-15);
    let width = 1e-8;
    let base = SearchOptions::default().with_width(width);
    let tight = SearchOptions { integrator: base.integrator.tightened(10.0), ..base };
    let a = find_gamma0_n2(s0, &base).unwrap();
    let b = find_gamma0_n2(s0, &tight).unwrap();
    let (a, b) = (a.bracket().unwrap(), b.bracket().unwrap());
    assert!(a.width() <= width && b.width() <= width);
    assert!((a.midpoint() - b.midpoint()).abs() <= 10.0 * width, "{} vs {}", a.midpoint(), b.midpoint());

    // the threshold separates the two fates for an unrelated integrator too
    assert_eq!(rk4_fate(s0, a.lo - 1e-4), 1);
    assert_eq!(rk4_fate(s0, a.hi + 1e-4), 0);
}

#[test]
fn u1_reproducible_across_tolerances() {
    let width = 1e-6;
    let base = SearchOptions::default().with_width(width);
    let tight = SearchOptions { integrator: base.integrator.tightened(10.0), ..base };
    let g = Damping::new(1.0f64).unwrap();
    let a = find_u1(g, &base).unwrap();
    let b = find_u1(g, &tight).unwrap();
    assert!((a.midpoint() - b.midpoint()).abs() <= 10.0 * width);
    assert_eq!(rk4_fate(st(-1.0, a.lo - 1e-3), 1.0), 0);
    assert_eq!(rk4_fate(st(-1.0, a.hi + 1e-3), 1.0), 1);
}

#[test]
fn u1_exceeds_its_floor_and_grows_with_damping() {
    let opts = SearchOptions::default().with_width(1e-6);
    let mut prev = 0.0;
    for g in [0.25f64, 0.5, 1.0, 2.0] {
        let b = find_u1(Damping::new(g).unwrap(), &opts).unwrap();
        let m = b.midpoint();
        assert!(m.is_finite() && m > 0.0 && m > u1_lower_bound(g), "gamma {g}: {m}");
        assert!(m > prev);
        prev = m;
    }
}

#[test]
fn n3_thresholds_agree_with_rk4() {
    let s0 = st(-1.5, 2.0);
    let N3Thresholds::Pair { gamma0, gamma1 } =
        find_gamma0_gamma1_n3(s0, &SearchOptions::default().with_width(1e-6)).unwrap()
    else {
        panic!("expected two brackets");
    };
    assert_eq!(rk4_fate(s0, gamma0.lo - 1e-3), 1);
    assert_eq!(rk4_fate(s0, (gamma0.hi + gamma1.lo) / 2.0), 0);
    assert_eq!(rk4_fate(s0, gamma1.hi + 1e-3), -1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn n3_thresholds_are_strictly_ordered(u0 in -2.5f64..-1.05, extra in 0.05f64..1.5) {
        // v² > 1/2 - u² + u⁴/2 puts the state above threshold
        let vmin = (0.5 - u0 * u0 + u0.powi(4) / 2.0).max(0.0).sqrt();
        let s0 = st(u0, vmin + extra);
        prop_assert_eq!(classify_region(s0), Region::N3);
        let r = find_gamma0_gamma1_n3(s0, &SearchOptions::default().with_width(1e-5)).unwrap();
        let N3Thresholds::Pair { gamma0, gamma1 } = r else {
            return Err(TestCaseError::fail("shell case off the shell"));
        };
        prop_assert!(gamma0.hi <= gamma1.lo);
        prop_assert!(gamma1.midpoint() - gamma0.midpoint() > gamma0.width() + gamma1.width());
    }
}
