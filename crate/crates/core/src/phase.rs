//! Phase-plane geometry of `ü + γu̇ + u = u³`: energies, the region
//! partition and the explicit heteroclinic on the threshold shell.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A point `(u, v)` of the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State<T> {
    pub u: T,
    pub v: T,
}

impl<T: Real> State<T> {
    pub fn new(u: T, v: T) -> Result<Self> {
        if !u.is_finite() || !v.is_finite() {
            return Err(Error::NonFinite("state"));
        }
        Ok(Self { u, v })
    }

    /// Unchecked constructor for values already known to be finite.
    #[inline]
    pub(crate) fn raw(u: T, v: T) -> Self {
        Self { u, v }
    }

    /// The image under `u ↦ -u`, which maps solutions to solutions.
    #[inline]
    pub fn mirrored(self) -> Self {
        Self { u: -self.u, v: -self.v }
    }

    #[inline]
    pub fn energy(self) -> T {
        energy(self)
    }

    pub fn distance_to(self, other: Self) -> T {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// Nonnegative damping coefficient.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Damping<T>(T);

impl<T: Real> Damping<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::NonFinite("damping"));
        }
        if gamma < T::zero() {
            return Err(Error::InvalidParameter(format!("damping must be >= 0, got {gamma}")));
        }
        Ok(Self(gamma))
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == T::zero()
    }
}

/// `J(u) = u²/2 - u⁴/4`.
#[inline]
pub fn static_energy<T: Real>(u: T) -> T {
    let u2 = u * u;
    u2 / T::lit(2.0) - u2 * u2 / T::lit(4.0)
}

/// `E(u, v) = u²/2 - u⁴/4 + v²/2`.
#[inline]
pub fn energy<T: Real>(s: State<T>) -> T {
    let u2 = s.u * s.u;
    u2 / T::lit(2.0) - u2 * u2 / T::lit(4.0) + s.v * s.v / T::lit(2.0)
}

/// Energy of the saddles `(±1, 0)`.
#[inline]
pub fn threshold_energy<T: Real>() -> T {
    T::lit(0.25)
}

/// Whether `E(s)` equals `1/4` up to the rounding error of evaluating `E`.
pub fn on_threshold_shell<T: Real>(s: State<T>) -> bool {
    let u2 = s.u * s.u;
    let scale = u2 + u2 * u2 + s.v * s.v + T::one();
    (energy(s) - threshold_energy::<T>()).abs() <= T::lit(8.0) * T::epsilon() * scale
}

/// Labels of the phase-plane partition.
///
/// `N1`, `N2`, `N3` are the super-threshold sets with positive velocity;
/// `NMirror` is their image under `u ↦ -u` (super-threshold, negative velocity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    KPlus,
    KMinus,
    N1,
    N2,
    N3,
    NBoundaryCurve,
    EquilibriumPlus,
    EquilibriumMinus,
    EquilibriumZero,
    NMirror,
}

impl Region {
    pub const ALL: [Region; 10] = [
        Region::KPlus,
        Region::KMinus,
        Region::N1,
        Region::N2,
        Region::N3,
        Region::NBoundaryCurve,
        Region::EquilibriumPlus,
        Region::EquilibriumMinus,
        Region::EquilibriumZero,
        Region::NMirror,
    ];

    /// Sub-threshold region (`E < 1/4`), including the origin.
    pub fn is_subthreshold(self) -> bool {
        matches!(self, Region::KPlus | Region::KMinus | Region::EquilibriumZero)
    }

    pub fn is_equilibrium(self) -> bool {
        matches!(self, Region::EquilibriumPlus | Region::EquilibriumMinus | Region::EquilibriumZero)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Total classification of a finite state.
pub fn classify_region<T: Real>(s: State<T>) -> Region {
    let zero = T::zero();
    let one = T::one();
    if s.v == zero {
        if s.u == zero {
            return Region::EquilibriumZero;
        }
        if s.u == one {
            return Region::EquilibriumPlus;
        }
        if s.u == -one {
            return Region::EquilibriumMinus;
        }
    }
    let e = energy(s);
    if e < threshold_energy() {
        // |u| = 1 forces E >= 1/4, so the split below is exhaustive.
        return if s.u.abs() < one { Region::KPlus } else { Region::KMinus };
    }
    if s.v > zero {
        if s.u >= one {
            Region::N1
        } else if s.u >= -one {
            Region::N2
        } else {
            Region::N3
        }
    } else if s.v < zero {
        Region::NMirror
    } else {
        Region::NBoundaryCurve
    }
}

/// Closed-form solution at `γ = 0` starting on the threshold shell with
/// `u0 ∈ (-1, 1)` and `v0 = (1 - u0²)/√2`.
pub fn threshold_solution<T: Real>(u0: T, t: T) -> Result<T> {
    if !u0.is_finite() || !t.is_finite() {
        return Err(Error::NonFinite("threshold_solution"));
    }
    if u0 <= -T::one() || u0 >= T::one() {
        return Err(Error::InvalidParameter(format!("u0 must lie in (-1, 1), got {u0}")));
    }
    let one = T::one();
    let decay = (-t * T::SQRT_2()).exp();
    let a = (one - u0) * decay;
    Ok(one - (a + a) / (one + u0 + a))
}

/// Velocity on the threshold heteroclinic through position `u`.
#[inline]
pub fn threshold_velocity<T: Real>(u: T) -> T {
    (T::one() - u * u) / T::SQRT_2()
}

/// Nonnegative velocity at position `u` on the energy level `e0`.
pub fn velocity_on_energy_shell<T: Real>(e0: T, u: T) -> Result<T> {
    let u2 = u * u;
    let radicand = e0 + e0 - u2 + u2 * u2 / T::lit(2.0);
    if radicand.is_nan() || radicand < T::zero() {
        return Err(Error::Domain(format!("energy level {e0} is below the static energy at u = {u}")));
    }
    Ok(radicand.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn st(u: f64, v: f64) -> State<f64> {
        State::new(u, v).unwrap()
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy(st(0.0, 0.0)), 0.0);
        assert_eq!(energy(st(1.0, 0.0)), 0.25);
        assert_eq!(energy(st(0.0, 1.0)), 0.5);
        assert_eq!(energy(st(-1.0, 0.5)), 0.375);
    }

    #[test]
    fn static_energy_examples() {
        assert_eq!(static_energy(0.0f64), 0.0);
        assert_eq!(static_energy(1.0f64), 0.25);
        assert_eq!(static_energy(-1.0f64), 0.25);
        assert!(static_energy(2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn region_examples() {
        assert_eq!(classify_region(st(0.0, 0.0)), Region::EquilibriumZero);
        assert_eq!(classify_region(st(1.0, 0.0)), Region::EquilibriumPlus);
        assert_eq!(classify_region(st(-1.0, 0.0)), Region::EquilibriumMinus);
        assert_eq!(classify_region(st(2.0, 0.0)), Region::KMinus);
        assert_eq!(classify_region(st(0.0, 1.0)), Region::N2);
        assert_eq!(classify_region(st(1.5, 2.0)), Region::N1);
        assert_eq!(classify_region(st(-1.5, 2.0)), Region::N3);
        assert_eq!(classify_region(st(0.0, -1.0)), Region::NMirror);
        assert_eq!(classify_region(st(0.5, 0.0)), Region::KPlus);
        // closed/open conventions at |u| = 1
        assert_eq!(classify_region(st(1.0, 0.1)), Region::N1);
        assert_eq!(classify_region(st(-1.0, 0.1)), Region::N2);
    }

    #[test]
    fn nonfinite_states_rejected() {
        assert!(State::new(f64::NAN, 0.0).is_err());
        assert!(State::new(0.0, f64::INFINITY).is_err());
        assert!(Damping::new(-0.1f64).is_err());
        assert!(Damping::new(0.0f64).is_ok());
    }

    #[test]
    fn threshold_solution_examples() {
        assert_eq!(threshold_solution(0.0f64, 0.0).unwrap(), 0.0);
        let at_one = threshold_solution(0.0f64, 1.0).unwrap();
        // tanh(1/√2)
        assert!((at_one - 0.608_859_365_013_913_8).abs() < 1e-15);
        assert!((threshold_solution(0.0f64, 60.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(threshold_solution(1.0f64, 0.0).is_err());
        assert!(threshold_solution(-1.2f64, 0.0).is_err());
    }

    #[test]
    fn shell_velocity_examples() {
        assert_eq!(velocity_on_energy_shell(0.25f64, 1.0).unwrap(), 0.0);
        assert_eq!(velocity_on_energy_shell(0.25f64, -1.0).unwrap(), 0.0);
        assert!((velocity_on_energy_shell(0.25f64, 0.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-16);
        assert_eq!(velocity_on_energy_shell(0.5f64, 0.0).unwrap(), 1.0);
        assert!(matches!(velocity_on_energy_shell(0.1f64, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn threshold_state_stays_on_shell() {
        for &u0 in &[-0.9, -0.3, 0.0, 0.4, 0.95] {
            for i in 0..200 {
                let t = i as f64 * 0.05;
                let u = threshold_solution(u0, t).unwrap();
                let e = energy(st(u, threshold_velocity(u)));
                assert!((e - 0.25).abs() <= 1e-14, "u0={u0} t={t} e={e}");
            }
        }
    }

    #[test]
    fn f32_instantiation() {
        let s = State::<f32>::new(0.5, 0.0).unwrap();
        assert_eq!(classify_region(s), Region::KPlus);
        assert!((threshold_solution(0.0f32, 1.0).unwrap() - 0.60886).abs() < 1e-5);
    }

    fn mirror_compatible(a: Region, b: Region) -> bool {
        use Region::*;
        match a {
            KPlus => b == KPlus,
            KMinus => b == KMinus,
            EquilibriumZero => b == EquilibriumZero,
            EquilibriumPlus => b == EquilibriumMinus,
            EquilibriumMinus => b == EquilibriumPlus,
            NBoundaryCurve => b == NBoundaryCurve,
            N1 | N2 | N3 => b == NMirror,
            NMirror => matches!(b, N1 | N2 | N3),
        }
    }

    proptest! {
        #[test]
        fn energy_splits_into_static_and_kinetic(u in -5.0f64..5.0, v in -5.0f64..5.0) {
            let s = st(u, v);
            let split = static_energy(u) + v * v / 2.0;
            prop_assert!((energy(s) - split).abs() <= 4.0 * f64::EPSILON * (1.0 + u.powi(4) + v * v));
        }

        #[test]
        fn partition_respects_mirror_symmetry(u in -4.0f64..4.0, v in -4.0f64..4.0) {
            let s = st(u, v);
            let a = classify_region(s);
            let b = classify_region(s.mirrored());
            prop_assert!(mirror_compatible(a, b), "{:?} vs {:?} at ({}, {})", a, b, u, v);
            // N1 mirrors into N3 (or N2 exactly at u = -1), N3 into N1
            if a == Region::NMirror && u < -1.0 {
                prop_assert_eq!(b, Region::N1);
            }
            if a == Region::NMirror && u > 1.0 {
                prop_assert_eq!(b, Region::N3);
            }
        }

        #[test]
        fn threshold_solution_monotone(u0 in -0.999f64..0.999, t in 0.0f64..15.0, dt in 1e-3f64..1.0) {
            let a = threshold_solution(u0, t).unwrap();
            let b = threshold_solution(u0, t + dt).unwrap();
            prop_assert!(b > a || (a == 1.0 && b == 1.0) || (1.0 - a) < 1e-15);
            prop_assert!(b <= 1.0);
        }
    }
}
