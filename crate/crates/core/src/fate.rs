//! Fate classification of Duffing initial data by invariant-region
//! certificates, plus the diagnostics that go with it.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::ode::{escape_window, integrate, EventKind, IntegratorOptions, Termination, Trajectory};
use crate::phase::{classify_region, energy, on_threshold_shell, Damping, Region, State};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FateKind {
    BlowUp,
    DecayZero,
    ConvergePlus,
    ConvergeMinus,
    Undetermined,
}

impl FateKind {
    pub const ALL: [FateKind; 5] = [
        FateKind::BlowUp,
        FateKind::DecayZero,
        FateKind::ConvergePlus,
        FateKind::ConvergeMinus,
        FateKind::Undetermined,
    ];

    pub fn is_certified(self) -> bool {
        self != FateKind::Undetermined
    }

    /// Image under `u ↦ -u`.
    pub fn mirrored(self) -> Self {
        match self {
            FateKind::ConvergePlus => FateKind::ConvergeMinus,
            FateKind::ConvergeMinus => FateKind::ConvergePlus,
            k => k,
        }
    }

    /// Gray level used in basin maps.
    pub fn gray(self) -> u8 {
        match self {
            FateKind::BlowUp => 0,
            FateKind::DecayZero => 255,
            FateKind::ConvergePlus => 200,
            FateKind::ConvergeMinus => 100,
            FateKind::Undetermined => 128,
        }
    }
}

impl fmt::Display for FateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for FateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FateKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fate `{s}`")))
    }
}

/// What justified a fate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// Initial data already in the given invariant region or equilibrium.
    Initial(Region),
    Event(EventKind),
    /// `u² ≥ 1 + δ` and `E < 1/4` held over a whole window.
    EscapeWindow,
    /// `γ = 0` and `E > 1/4`.
    UndampedAboveThreshold,
    /// Initial data on the level `E = 1/4`, whose fate is known in closed form.
    ThresholdShell,
    BudgetExhausted,
    /// The integrator stopped for numerical reasons.
    IntegratorStopped,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Initial(r) => write!(f, "Initial({r})"),
            Certificate::Event(k) => write!(f, "{k}"),
            other => fmt::Debug::fmt(other, f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fate<T> {
    pub kind: FateKind,
    pub certificate: Certificate,
    /// Time at which the certificate fired, or the elapsed budget.
    pub cert_time: T,
    /// State at `cert_time`.
    pub witness: State<T>,
}

impl<T: Real> Fate<T> {
    fn at_start(kind: FateKind, certificate: Certificate, s0: State<T>) -> Self {
        Self { kind, certificate, cert_time: T::zero(), witness: s0 }
    }

    fn mirrored(self) -> Self {
        Self { kind: self.kind.mirrored(), witness: self.witness.mirrored(), ..self }
    }
}

pub const FATE_CSV_HEADER: &str = "u0,u1,gamma,kind,cert_time,witness_u,witness_v";

/// One CSV row (no trailing newline) in the `FATE_CSV_HEADER` layout.
pub fn fate_csv_row<T: Real>(s0: State<T>, gamma: Damping<T>, fate: &Fate<T>) -> String {
    format!(
        "{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}",
        s0.u.as_f64(),
        s0.v.as_f64(),
        gamma.get().as_f64(),
        fate.kind,
        fate.cert_time.as_f64(),
        fate.witness.u.as_f64(),
        fate.witness.v.as_f64()
    )
}

pub fn write_fate_csv<T: Real, W: Write>(mut w: W, rows: &[(State<T>, Damping<T>, Fate<T>)]) -> std::io::Result<()> {
    writeln!(w, "{FATE_CSV_HEADER}")?;
    for (s, g, f) in rows {
        writeln!(w, "{}", fate_csv_row(*s, *g, f))?;
    }
    Ok(())
}

/// Window parameters of the escape certificate.
pub const ESCAPE_DELTA: f64 = 1e-3;
pub const ESCAPE_WINDOW: f64 = 5.0;

/// Classify the fate of the solution starting at `s0`.
///
/// Returns [`FateKind::Undetermined`] when no certificate fires within
/// `opts.t_max`.
pub fn classify_fate<T: Real>(s0: State<T>, gamma: Damping<T>, opts: &IntegratorOptions<T>) -> Fate<T> {
    let mirror = s0.v < T::zero() && (classify_region(s0) == Region::NMirror || on_threshold_shell(s0));
    if mirror {
        classify_positive(s0.mirrored(), gamma, opts).mirrored()
    } else {
        classify_positive(s0, gamma, opts)
    }
}

fn classify_positive<T: Real>(s0: State<T>, gamma: Damping<T>, opts: &IntegratorOptions<T>) -> Fate<T> {
    let region = classify_region(s0);
    let one = T::one();
    let init = |k| Fate::at_start(k, Certificate::Initial(region), s0);
    match region {
        Region::EquilibriumZero => return init(FateKind::DecayZero),
        Region::EquilibriumPlus => return init(FateKind::ConvergePlus),
        Region::EquilibriumMinus => return init(FateKind::ConvergeMinus),
        _ => {}
    }

    // E = 1/4 is not representable in general; states within rounding of the
    // shell take its closed-form fate, whichever side they round to
    let shell = |k| Fate::at_start(k, Certificate::ThresholdShell, s0);
    if s0.v > T::zero() && on_threshold_shell(s0) {
        return match (gamma.is_zero(), s0.u) {
            (_, u) if u > one => shell(FateKind::BlowUp),
            (true, u) if u > -one => shell(FateKind::ConvergePlus),
            (true, _) => shell(FateKind::ConvergeMinus),
            (false, u) if u.abs() < one => shell(FateKind::DecayZero),
            (false, _) => shell(FateKind::BlowUp),
        };
    }
    match region {
        // with γ = 0 the 𝒦⁺ orbits are periodic; they never blow up, which
        // is the only distinction basin maps draw
        Region::KPlus => return init(FateKind::DecayZero),
        Region::KMinus => return init(FateKind::BlowUp),
        _ => {}
    }
    if gamma.is_zero() && energy(s0) > crate::phase::threshold_energy() {
        return Fate::at_start(FateKind::BlowUp, Certificate::UndampedAboveThreshold, s0);
    }

    let opts = opts.stopping_on(&[EventKind::EnteredKPlus, EventKind::EnteredKMinus]);
    let traj = match integrate(s0, gamma, &opts) {
        Ok(t) => t,
        Err(_) => return Fate::at_start(FateKind::Undetermined, Certificate::IntegratorStopped, s0),
    };
    fate_from_trajectory(&traj)
}

/// Read a fate off a finished trajectory.
pub fn fate_from_trajectory<T: Real>(traj: &Trajectory<T>) -> Fate<T> {
    let last = traj.last();
    let kind_at = |k: EventKind| traj.first_event(k);
    if let Some(ev) = kind_at(EventKind::EnteredKMinus) {
        return Fate {
            kind: FateKind::BlowUp,
            certificate: Certificate::Event(EventKind::EnteredKMinus),
            cert_time: ev.t,
            witness: ev.state,
        };
    }
    if let Some(ev) = kind_at(EventKind::EnteredKPlus) {
        return Fate {
            kind: FateKind::DecayZero,
            certificate: Certificate::Event(EventKind::EnteredKPlus),
            cert_time: ev.t,
            witness: ev.state,
        };
    }
    let window = escape_window(traj, T::lit(ESCAPE_DELTA), T::lit(ESCAPE_WINDOW));
    if let Some(t) = window {
        let witness = traj.state_at(t).unwrap_or(last.state);
        return Fate { kind: FateKind::BlowUp, certificate: Certificate::EscapeWindow, cert_time: t, witness };
    }
    let certificate = match traj.termination {
        Termination::TimeLimit | Termination::BlowupThreshold => Certificate::BudgetExhausted,
        _ => Certificate::IntegratorStopped,
    };
    Fate { kind: FateKind::Undetermined, certificate, cert_time: last.t, witness: last.state }
}

/// Least-squares slope of `-log‖(u,v) - target‖` against `t` over the tail of
/// the trajectory lying within distance `0.1` of `target`.
///
/// Returns `+∞` when the tail sits exactly on the target.
pub fn exponential_rate_estimate<T: Real>(traj: &Trajectory<T>, target: State<T>) -> Result<T> {
    let radius = T::lit(0.1);
    let floor = T::lit(1e-6);
    let samples = traj.samples();
    let start = samples.iter().rposition(|s| s.state.distance_to(target) >= radius).map_or(0, |i| i + 1);
    let tail = &samples[start..];
    if tail.is_empty() {
        return Err(Error::Misuse("trajectory does not end near the target".into()));
    }
    if tail.iter().all(|s| s.state.distance_to(target) == T::zero()) {
        return Ok(T::infinity());
    }
    let pts: Vec<(T, T)> = tail
        .iter()
        .map(|s| (s.t, s.state.distance_to(target)))
        .filter(|&(_, d)| d > floor)
        .map(|(t, d)| (t, d.ln()))
        .collect();
    let span = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => b.0 - a.0,
        _ => T::zero(),
    };
    if pts.len() < 8 || span < T::one() {
        return Err(Error::Misuse("tail near the target is too short for a fit".into()));
    }
    let n = T::from_usize_lossy(pts.len());
    let tc = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let yc = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (t, y) in &pts {
        sxy = sxy + (*t - tc) * (*y - yc);
        sxx = sxx + (*t - tc) * (*t - tc);
    }
    Ok(-sxy / sxx)
}

/// `u̇` as a function of `u` along the initial increasing span of an orbit.
///
/// Stores knots of `w = u̇²/2` with the exact slope `dw/du = u³ - u - γu̇`, so
/// the piecewise cubic Hermite interpolant stays smooth up to a turning
/// point, where `du̇/du` itself is unbounded.
#[derive(Debug, Clone)]
pub struct VelocityProfile<T> {
    knots: Vec<(T, T, T)>,
}

impl<T: Real> VelocityProfile<T> {
    /// Integrate from `s0` (with `u̇ > 0`) until `u̇` vanishes or `|u|`
    /// reaches `cap`.
    pub fn compute(s0: State<T>, gamma: Damping<T>, opts: &IntegratorOptions<T>, cap: T) -> Result<Self> {
        if !(s0.v > T::zero()) {
            return Err(Error::Precondition("velocity profile needs u1 > 0".into()));
        }
        let mut o = opts.stopping_on(&[EventKind::VelocitySignChange]);
        o.blowup_threshold = cap;
        o.max_step = o.max_step.min(T::lit(0.02));
        let traj = integrate(s0, gamma, &o)?;
        let g = gamma.get();
        let mut knots: Vec<(T, T, T)> = Vec::new();
        for s in traj.samples() {
            let (u, v) = (s.state.u, s.state.v.max(T::zero()));
            if knots.last().is_some_and(|k| u <= k.0) {
                break;
            }
            knots.push((u, v * v / T::lit(2.0), u * u * u - u - g * v));
        }
        if knots.len() < 2 {
            return Err(Error::Unresolved("increasing span too short".into()));
        }
        Ok(Self { knots })
    }

    /// `[u0, u_end]`.
    pub fn span(&self) -> (T, T) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    pub fn velocity(&self, x: T) -> Option<T> {
        let (a, b) = self.span();
        if !(x >= a && x <= b) {
            return None;
        }
        let i = self.knots.partition_point(|k| k.0 <= x).clamp(1, self.knots.len() - 1);
        let (x0, w0, d0) = self.knots[i - 1];
        let (x1, w1, d1) = self.knots[i];
        let h = x1 - x0;
        let s = (x - x0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let l = T::lit;
        let w = (l(2.0) * s3 - l(3.0) * s2 + T::one()) * w0
            + (s3 - l(2.0) * s2 + s) * h * d0
            + (l(3.0) * s2 - l(2.0) * s3) * w1
            + (s3 - s2) * h * d1;
        Some((w.max(T::zero()) * l(2.0)).sqrt())
    }
}

/// `φ(x) = v_lo(x) - v_hi(x)` at `n` interior points of the common span,
/// where `lo` and `hi` are the profiles at the smaller and larger damping.
pub fn profile_difference<T: Real>(lo: &VelocityProfile<T>, hi: &VelocityProfile<T>, n: usize) -> Vec<(T, T)> {
    let a = lo.span().0.max(hi.span().0);
    let b = lo.span().1.min(hi.span().1);
    if !(b > a) {
        return Vec::new();
    }
    let step = (b - a) / T::from_usize_lossy(n + 1);
    (1..=n)
        .filter_map(|i| {
            let x = a + step * T::from_usize_lossy(i);
            Some((x, lo.velocity(x)? - hi.velocity(x)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn st(u: f64, v: f64) -> State<f64> {
        State::new(u, v).unwrap()
    }

    fn damp(g: f64) -> Damping<f64> {
        Damping::new(g).unwrap()
    }

    fn fate(u: f64, v: f64, g: f64) -> Fate<f64> {
        classify_fate(st(u, v), damp(g), &IntegratorOptions::default())
    }

    #[test]
    fn classification_examples() {
        assert_eq!(fate(0.5, 0.0, 1.0).kind, FateKind::DecayZero);
        let f = fate(-2.0, 1.0, 0.01);
        assert_eq!(f.kind, FateKind::BlowUp);
        assert_eq!(fate(0.0, 1.0, 2.0).kind, FateKind::DecayZero);
        for g in [0.01, 0.3, 1.0, 5.0] {
            let f = fate(1.0, 0.1, g);
            assert_eq!(f.kind, FateKind::BlowUp, "gamma {g}");
            assert_eq!(f.certificate, Certificate::Event(EventKind::EnteredKMinus));
            assert!(f.witness.u > 1.0);
        }
    }

    #[test]
    fn immediate_certificates() {
        let f = fate(1.5, 0.0, 1.0);
        assert_eq!((f.kind, f.cert_time), (FateKind::BlowUp, 0.0));
        assert_eq!(f.certificate, Certificate::Initial(Region::KMinus));
        assert_eq!(fate(0.0, 0.0, 0.0).kind, FateKind::DecayZero);
        assert_eq!(fate(1.0, 0.0, 0.3).kind, FateKind::ConvergePlus);
        assert_eq!(fate(-1.0, 0.0, 0.3).kind, FateKind::ConvergeMinus);
        let f = fate(0.0, 0.9, 0.0);
        assert_eq!(f.certificate, Certificate::UndampedAboveThreshold);
        assert_eq!(f.kind, FateKind::BlowUp);
    }

    #[test]
    fn threshold_shell_closed_forms() {
        let shell = |u: f64| crate::phase::velocity_on_energy_shell(0.25, u).unwrap();
        for (u, g, want) in [
            (0.3, 0.0, FateKind::ConvergePlus),
            (-2.0, 0.0, FateKind::ConvergeMinus),
            (1.5, 0.0, FateKind::BlowUp),
            (0.3, 0.4, FateKind::DecayZero),
            (-2.0, 0.4, FateKind::BlowUp),
        ] {
            let s = st(u, shell(u));
            if on_threshold_shell(s) {
                let f = fate(s.u, s.v, g);
                assert_eq!(f.kind, want, "u0={u} gamma={g}");
                assert_eq!(f.certificate, Certificate::ThresholdShell);
            }
        }
        // mirrored shell data
        let s = st(0.0, -(0.5f64).sqrt());
        assert_eq!(fate(s.u, s.v, 0.0).kind, FateKind::ConvergeMinus);
    }

    #[test]
    fn mirror_symmetry_on_samples() {
        for &(u, v, g) in &[(0.0, 1.0, 0.6), (-1.5, 2.0, 0.3), (0.2, -1.1, 0.9), (1.2, 0.4, 0.0)] {
            let a = fate(u, v, g);
            let b = fate(-u, -v, g);
            assert_eq!(a.kind, b.kind.mirrored());
        }
    }

    #[test]
    fn forward_invariance_after_entry() {
        let opts = IntegratorOptions::default().with_t_max(40.0);
        let tr = integrate(st(0.0, 1.0), damp(1.5), &opts).unwrap();
        let ev = tr.first_event(EventKind::EnteredKPlus).unwrap();
        for s in tr.samples().iter().filter(|s| s.t > ev.t) {
            assert!(s.energy() < 0.25 && s.state.u.abs() < 1.0);
        }
        let tr = integrate(st(1.0, 0.1), damp(0.5), &opts).unwrap();
        let ev = tr.first_event(EventKind::EnteredKMinus).unwrap();
        for s in tr.samples().iter().filter(|s| s.t > ev.t) {
            assert!(s.energy() < 0.25 && s.state.u.abs() > 1.0);
        }
    }

    #[test]
    fn rate_examples() {
        let opts = IntegratorOptions::default().with_t_max(10.0);
        let eq = integrate(st(1.0, 0.0), damp(0.0), &opts).unwrap();
        assert_eq!(exponential_rate_estimate(&eq, st(1.0, 0.0)).unwrap(), f64::INFINITY);

        // later the numerical orbit leaves the unstable heteroclinic
        let opts = IntegratorOptions::default().with_t_max(8.0);
        let tr = integrate(st(0.0, 0.5f64.sqrt()), damp(0.0), &opts).unwrap();
        let r = exponential_rate_estimate(&tr, st(1.0, 0.0)).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 0.02, "rate {r}");

        let opts = IntegratorOptions::default().with_t_max(30.0);
        let tr = integrate(st(0.5, 0.0), damp(1.0), &opts).unwrap();
        let r = exponential_rate_estimate(&tr, st(0.0, 0.0)).unwrap();
        assert!((r - 0.5).abs() < 0.1, "rate {r}");
    }

    #[test]
    fn rate_needs_a_tail() {
        let opts = IntegratorOptions::default().with_t_max(1.0);
        let tr = integrate(st(0.5, 0.0), damp(1.0), &opts).unwrap();
        assert!(matches!(exponential_rate_estimate(&tr, st(0.0, 0.0)), Err(Error::Misuse(_))));
    }

    #[test]
    fn csv_row_layout() {
        let s = st(1.5, 0.0);
        let f = fate(1.5, 0.0, 1.0);
        let row = fate_csv_row(s, damp(1.0), &f);
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 7);
        assert_eq!(cols[3], "BlowUp");
        assert_eq!(cols[0].parse::<f64>().unwrap(), 1.5);
        assert_eq!("DecayZero".parse::<FateKind>().unwrap(), FateKind::DecayZero);
    }

    #[test]
    fn velocity_profiles_are_ordered() {
        let opts = IntegratorOptions::default().with_t_max(50.0);
        let a = VelocityProfile::compute(st(0.0, 1.0), damp(0.2), &opts, 10.0).unwrap();
        let b = VelocityProfile::compute(st(0.0, 1.0), damp(0.9), &opts, 10.0).unwrap();
        let phi = profile_difference(&a, &b, 100);
        assert_eq!(phi.len(), 100);
        assert!(phi.iter().all(|&(_, d)| d > 0.0));
        assert!((a.velocity(0.0).unwrap() - 1.0).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn subthreshold_seeds_certify_immediately(u in -3.0f64..3.0, v in -2.0f64..2.0, g in 0.0f64..2.0) {
            let s = st(u, v);
            let f = classify_fate(s, damp(g), &IntegratorOptions::default());
            match classify_region(s) {
                Region::KPlus => prop_assert_eq!(f.kind, FateKind::DecayZero),
                Region::KMinus => prop_assert_eq!(f.kind, FateKind::BlowUp),
                _ => {}
            }
        }

        #[test]
        fn mirror_symmetry(u in -2.5f64..2.5, v in -2.0f64..2.0, g in 0.05f64..2.0) {
            let a = fate(u, v, g);
            let b = fate(-u, -v, g);
            prop_assert_eq!(a.kind, b.kind.mirrored());
        }
    }
}
