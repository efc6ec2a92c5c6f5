//! Adaptive integration of `ü + γu̇ + u = u³` with event location and an
//! energy-dissipation ledger.
//!
//! The ledger `D(t) = γ∫₀ᵗ u̇²` is carried as a third state component so the
//! same embedded error estimate controls it; `E(t) - E(0) + D(t)` then
//! measures how well the energy identity is honoured by the discrete flow.

mod dopri;
mod trajectory;

use std::fmt;

pub use trajectory::{
    detect_blowup, energy_identity_residual, escape_window, BlowupCertificate, BlowupReport, Sample, Trajectory,
};

use crate::error::{Error, Result};
use crate::phase::{energy, threshold_energy, Damping, State};
use crate::scalar::Real;
use dopri::{Dense, Stepper, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    EnteredKPlus,
    EnteredKMinus,
    CrossedEnergyQuarter,
    BlowupThreshold,
    VelocitySignChange,
}

impl EventKind {
    const ALL: [EventKind; 5] = [
        EventKind::EnteredKPlus,
        EventKind::EnteredKMinus,
        EventKind::CrossedEnergyQuarter,
        EventKind::BlowupThreshold,
        EventKind::VelocitySignChange,
    ];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Small set of event kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventSet(u8);

impl EventSet {
    pub const EMPTY: EventSet = EventSet(0);

    pub fn of(kinds: &[EventKind]) -> Self {
        Self(kinds.iter().fold(0, |acc, k| acc | k.bit()))
    }

    pub fn with(self, kind: EventKind) -> Self {
        Self(self.0 | kind.bit())
    }

    pub fn contains(self, kind: EventKind) -> bool {
        self.0 & kind.bit() != 0
    }

    pub fn iter(self) -> impl Iterator<Item = EventKind> {
        EventKind::ALL.into_iter().filter(move |k| self.contains(*k))
    }
}

/// A located event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<T> {
    pub t: T,
    pub kind: EventKind,
    pub state: State<T>,
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    TimeLimit,
    BlowupThreshold,
    Event(EventKind),
    StepUnderflow,
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
    /// `|u|` at which the run is stopped as a blow-up.
    pub blowup_threshold: T,
    pub t_max: T,
    /// Events that end the integration when they fire.
    pub stop_on: EventSet,
    /// Absolute accuracy of located event times.
    pub event_time_tol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for IntegratorOptions<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::default_rel_tol(),
            abs_tol: T::default_abs_tol(),
            max_step: T::lit(0.25),
            blowup_threshold: T::lit(1e6),
            t_max: T::lit(200.0),
            stop_on: EventSet::EMPTY,
            event_time_tol: T::lit(1e-12).max(T::epsilon() * T::lit(16.0)),
            max_steps: 2_000_000,
        }
    }
}

impl<T: Real> IntegratorOptions<T> {
    pub fn with_t_max(mut self, t_max: T) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: T, abs_tol: T) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn stopping_on(mut self, kinds: &[EventKind]) -> Self {
        self.stop_on = EventSet::of(kinds);
        self
    }

    /// Same options with both tolerances divided by `factor`.
    pub fn tightened(mut self, factor: T) -> Self {
        self.rel_tol = self.rel_tol / factor;
        self.abs_tol = self.abs_tol / factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: T| x.is_finite() && x > T::zero();
        if !pos(self.rel_tol) || !pos(self.abs_tol) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if !(self.blowup_threshold > T::lit(2.0)) {
            return Err(Error::InvalidParameter("blowup_threshold must exceed 2".into()));
        }
        if !pos(self.t_max) {
            return Err(Error::InvalidParameter("t_max must be positive".into()));
        }
        if !pos(self.max_step) || !pos(self.event_time_tol) {
            return Err(Error::InvalidParameter("max_step and event_time_tol must be positive".into()));
        }
        Ok(())
    }
}

fn to_state<T: Real>(y: &Vec3<T>) -> State<T> {
    State::raw(y[0], y[1])
}

fn state_energy<T: Real>(y: &Vec3<T>) -> T {
    energy(to_state(y))
}

/// Event functions sampled at the ends of a step.
#[derive(Clone, Copy)]
struct Probes<T> {
    energy_gap: T,
    velocity: T,
    overshoot: T,
}

impl<T: Real> Probes<T> {
    fn of(y: &Vec3<T>, threshold: T) -> Self {
        Self { energy_gap: state_energy(y) - threshold_energy(), velocity: y[1], overshoot: y[0].abs() - threshold }
    }
}

fn crossed<T: Real>(g0: T, g1: T) -> bool {
    g0 != T::zero() && (g1 == T::zero() || (g0 < T::zero()) != (g1 < T::zero()))
}

/// False position safeguarded by a bisection every third iteration.
fn locate<T: Real>(dense: &Dense<T>, t1: T, tol: T, g: impl Fn(&Vec3<T>) -> T) -> T {
    let (mut a, mut b) = (dense.t0, t1);
    let (mut ga, mut gb) = (g(&dense.eval(a)), g(&dense.eval(b)));
    let half = T::lit(0.5);
    for it in 0..300 {
        if b - a <= tol || gb == T::zero() {
            break;
        }
        let mid = (a + b) * half;
        let c = if it % 3 == 2 {
            mid
        } else {
            let c = b - gb * (b - a) / (gb - ga);
            if c > a && c < b {
                c
            } else {
                mid
            }
        };
        let gc = g(&dense.eval(c));
        if gc == T::zero() {
            return c;
        }
        if (gc < T::zero()) == (ga < T::zero()) {
            a = c;
            ga = gc;
        } else {
            b = c;
            gb = gc;
        }
    }
    // `b` is on the far side of the sign change
    b
}

/// Integrate from `s0` with damping `gamma`.
///
/// Returns an error only for invalid options; numerical failures (step-size
/// underflow, step budget) end the trajectory early and are reported in
/// [`Trajectory::termination`].
pub fn integrate<T: Real>(s0: State<T>, gamma: Damping<T>, opts: &IntegratorOptions<T>) -> Result<Trajectory<T>> {
    opts.validate()?;
    if !s0.u.is_finite() || !s0.v.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let g = gamma.get();
    let stepper = Stepper::new(g, opts.rel_tol, opts.abs_tol);
    let mut traj = Trajectory::start(gamma, s0);
    let mut t = T::zero();
    let mut y: Vec3<T> = [s0.u, s0.v, T::zero()];
    let mut k1 = stepper.f(&y);
    let mut h = stepper.initial_step(&y, &k1, opts.max_step.min(opts.t_max));
    let mut probes = Probes::of(&y, opts.blowup_threshold);
    let mut fac_old = T::lit(1e-4);
    let mut rejected_last = false;
    let entries_possible = g > T::zero();

    if probes.overshoot >= T::zero() {
        traj.finish(Termination::BlowupThreshold);
        return Ok(traj);
    }

    let beta = T::lit(0.04);
    let expo = T::lit(0.2) - beta * T::lit(0.75);
    let safety = T::lit(0.9);
    let (fac_min, fac_max) = (T::lit(0.2), T::lit(10.0));

    for _ in 0..opts.max_steps {
        if t >= opts.t_max {
            traj.finish(Termination::TimeLimit);
            return Ok(traj);
        }
        let min_h = T::epsilon() * T::lit(16.0) * t.abs().max(T::one());
        let mut last = false;
        if t + h >= opts.t_max {
            h = opts.t_max - t;
            last = true;
        }
        if h < min_h {
            if last {
                traj.finish(Termination::TimeLimit);
                return Ok(traj);
            }
            traj.finish(Termination::StepUnderflow);
            return Ok(traj);
        }
        let step = stepper.step(t, &y, &k1, h);
        let err = step.err;
        let fac11 = if err.is_finite() { err.powf(expo) } else { T::infinity() };
        if err <= T::one() {
            let mut fac = fac11 / fac_old.powf(beta);
            fac = (fac / safety).max(T::one() / fac_max).min(T::one() / fac_min);
            let mut h_new = h / fac;
            fac_old = err.max(T::lit(1e-4));
            if rejected_last {
                h_new = h_new.min(h);
            }
            let t1 = if last { opts.t_max } else { t + h };
            let next = Probes::of(&step.y1, opts.blowup_threshold);

            let mut found: Vec<Event<T>> = Vec::new();
            let tol = opts.event_time_tol;
            if crossed(probes.energy_gap, next.energy_gap) {
                let ts = locate(&step.dense, t1, tol, |z| state_energy(z) - threshold_energy());
                let zs = step.dense.eval(ts);
                found.push(Event { t: ts, kind: EventKind::CrossedEnergyQuarter, state: to_state(&zs) });
                if entries_possible && probes.energy_gap > T::zero() {
                    let kind = if zs[0].abs() < T::one() { EventKind::EnteredKPlus } else { EventKind::EnteredKMinus };
                    found.push(Event { t: ts, kind, state: to_state(&zs) });
                }
            }
            if crossed(probes.velocity, next.velocity) {
                let ts = locate(&step.dense, t1, tol, |z| z[1]);
                let zs = step.dense.eval(ts);
                found.push(Event { t: ts, kind: EventKind::VelocitySignChange, state: to_state(&zs) });
            }
            if crossed(probes.overshoot, next.overshoot) {
                let thr = opts.blowup_threshold;
                let ts = locate(&step.dense, t1, tol, |z| z[0].abs() - thr);
                let zs = step.dense.eval(ts);
                found.push(Event { t: ts, kind: EventKind::BlowupThreshold, state: to_state(&zs) });
            }
            found.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite event times"));

            let stop = found.iter().position(|e| e.kind == EventKind::BlowupThreshold || opts.stop_on.contains(e.kind));
            match stop {
                Some(idx) => {
                    let ev = found[idx];
                    let cut = found.iter().take_while(|e| e.t <= ev.t).count();
                    for e in found.into_iter().take(cut) {
                        traj.push_event(e);
                    }
                    let z = step.dense.eval(ev.t);
                    traj.push_sample(ev.t, &z, &stepper.f(&z));
                    let term = if ev.kind == EventKind::BlowupThreshold {
                        Termination::BlowupThreshold
                    } else {
                        Termination::Event(ev.kind)
                    };
                    traj.finish(term);
                    return Ok(traj);
                }
                None => {
                    for e in found {
                        traj.push_event(e);
                    }
                }
            }

            t = t1;
            y = step.y1;
            k1 = step.k7;
            probes = next;
            traj.push_sample(t, &y, &k1);
            traj.count_step(true);
            h = h_new.min(opts.max_step);
            rejected_last = false;
        } else {
            let shrink = if err.is_finite() { (fac11 / safety).min(T::one() / fac_min) } else { T::lit(10.0) };
            h = h / shrink;
            rejected_last = true;
            traj.count_step(false);
        }
    }
    traj.finish(Termination::StepLimit);
    Ok(traj)
}
