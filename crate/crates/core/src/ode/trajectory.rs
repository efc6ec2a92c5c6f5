use std::io::Write;

use super::dopri::Vec3;
use super::{Event, EventKind, Termination};
use crate::error::{Error, Result};
use crate::phase::{classify_region, energy, threshold_energy, Damping, Region, State};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub state: State<T>,
    /// `γ∫₀ᵗ u̇²`
    pub dissipation: T,
    accel: T,
}

impl<T: Real> Sample<T> {
    pub fn energy(&self) -> T {
        energy(self.state)
    }
}

/// Time-ordered samples of one run, with located events.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    gamma: Damping<T>,
    samples: Vec<Sample<T>>,
    events: Vec<Event<T>>,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl<T: Real> Trajectory<T> {
    pub(crate) fn start(gamma: Damping<T>, s0: State<T>) -> Self {
        let g = gamma.get();
        let accel = s0.u * s0.u * s0.u - s0.u - g * s0.v;
        Self {
            gamma,
            samples: vec![Sample { t: T::zero(), state: s0, dissipation: T::zero(), accel }],
            events: Vec::new(),
            termination: Termination::TimeLimit,
            accepted_steps: 0,
            rejected_steps: 0,
        }
    }

    pub(crate) fn push_sample(&mut self, t: T, y: &Vec3<T>, f: &Vec3<T>) {
        debug_assert!(t > self.last().t);
        self.samples.push(Sample { t, state: State::raw(y[0], y[1]), dissipation: y[2], accel: f[1] });
    }

    pub(crate) fn push_event(&mut self, e: Event<T>) {
        self.events.push(e);
    }

    pub(crate) fn finish(&mut self, term: Termination) {
        self.termination = term;
    }

    pub(crate) fn count_step(&mut self, accepted: bool) {
        if accepted {
            self.accepted_steps += 1;
        } else {
            self.rejected_steps += 1;
        }
    }

    pub fn gamma(&self) -> Damping<T> {
        self.gamma
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn events(&self) -> &[Event<T>] {
        &self.events
    }

    pub fn first(&self) -> &Sample<T> {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample<T> {
        self.samples.last().expect("trajectory holds its initial sample")
    }

    pub fn first_event(&self, kind: EventKind) -> Option<&Event<T>> {
        self.events.iter().find(|e| e.kind == kind)
    }

    /// Quintic Hermite interpolation between samples, using `u, u̇, ü` and
    /// `v, v̇, v̈` from the vector field.
    pub fn state_at(&self, t: T) -> Option<State<T>> {
        let first = self.first().t;
        let last = self.last().t;
        if !(t >= first && t <= last) {
            return None;
        }
        let idx = self.samples.partition_point(|s| s.t <= t);
        if idx == 0 {
            return Some(self.samples[0].state);
        }
        if idx >= self.samples.len() {
            return Some(self.last().state);
        }
        let (a, b) = (&self.samples[idx - 1], &self.samples[idx]);
        let g = self.gamma.get();
        let jerk = |s: &Sample<T>| {
            let u = s.state.u;
            (T::lit(3.0) * u * u - T::one()) * s.state.v - g * s.accel
        };
        let h = b.t - a.t;
        let x = (t - a.t) / h;
        let u = hermite5(h, x, [a.state.u, a.state.v, a.accel], [b.state.u, b.state.v, b.accel]);
        let v = hermite5(h, x, [a.state.v, a.accel, jerk(a)], [b.state.v, b.accel, jerk(b)]);
        Some(State::raw(u, v))
    }

    /// CSV with header `t,u,v,E,dissipation`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,u,v,E,dissipation")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t.as_f64(),
                s.state.u.as_f64(),
                s.state.v.as_f64(),
                s.energy().as_f64(),
                s.dissipation.as_f64()
            )?;
        }
        Ok(())
    }
}

fn hermite5<T: Real>(h: T, s: T, y0: [T; 3], y1: [T; 3]) -> T {
    let l = T::lit;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h00 = T::one() - l(10.0) * s3 + l(15.0) * s4 - l(6.0) * s5;
    let h10 = s - l(6.0) * s3 + l(8.0) * s4 - l(3.0) * s5;
    let h20 = (s2 - l(3.0) * s3 + l(3.0) * s4 - s5) / l(2.0);
    let h01 = l(10.0) * s3 - l(15.0) * s4 + l(6.0) * s5;
    let h11 = -l(4.0) * s3 + l(7.0) * s4 - l(3.0) * s5;
    let h21 = (s3 - l(2.0) * s4 + s5) / l(2.0);
    h00 * y0[0] + h * h10 * y0[1] + h * h * h20 * y0[2] + h01 * y1[0] + h * h11 * y1[1] + h * h * h21 * y1[2]
}

/// `max_k |E(t_k) - E(t_0) + D(t_k)|` over the samples.
pub fn energy_identity_residual<T: Real>(traj: &Trajectory<T>) -> T {
    let e0 = traj.first().energy();
    traj.samples.iter().map(|s| (s.energy() - e0 + s.dissipation).abs()).fold(T::zero(), T::max)
}

/// Earliest time at which `u² ≥ 1 + δ` and `E < 1/4` have held on every
/// sample of a window of length `window`.
pub fn escape_window<T: Real>(traj: &Trajectory<T>, delta: T, window: T) -> Option<T> {
    let mut since: Option<T> = None;
    for s in &traj.samples {
        let ok = s.state.u * s.state.u >= T::one() + delta && s.energy() < threshold_energy();
        if ok {
            let t0 = *since.get_or_insert(s.t);
            if s.t - t0 >= window {
                return Some(s.t);
            }
        } else {
            since = None;
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupCertificate {
    StartedInKMinus,
    EnteredKMinus,
    /// `γ = 0` with `E > 1/4`.
    UndampedAboveThreshold,
    EscapeWindow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupReport<T> {
    /// Extrapolated blow-up time from `1/|u|` being linear in `t`.
    pub t_est: Option<T>,
    pub certified: bool,
    pub certificate: Option<BlowupCertificate>,
    /// `min |u(t)|·(t_est - t)` over the fitted samples.
    pub rate_margin: Option<T>,
    /// Number of samples entering the fit.
    pub fitted: usize,
}

pub const BLOWUP_FIT_SAMPLES: usize = 20;
pub const BLOWUP_FIT_MIN_U: f64 = 100.0;

/// Blow-up time estimate and certificate for a run that escaped.
pub fn detect_blowup<T: Real>(traj: &Trajectory<T>) -> Result<BlowupReport<T>> {
    let s0 = traj.first().state;
    let started_in_kminus = classify_region(s0) == Region::KMinus;
    let entered = traj.first_event(EventKind::EnteredKMinus).is_some();
    let hit_threshold =
        traj.first_event(EventKind::BlowupThreshold).is_some() || traj.termination == Termination::BlowupThreshold;
    if !(started_in_kminus || entered || hit_threshold) {
        return Err(Error::Misuse("detect_blowup needs a run that reached K- or the blow-up threshold".into()));
    }

    let certificate = if started_in_kminus {
        Some(BlowupCertificate::StartedInKMinus)
    } else if entered {
        Some(BlowupCertificate::EnteredKMinus)
    } else if traj.gamma.is_zero() && energy(s0) > threshold_energy() && !crate::phase::on_threshold_shell(s0) {
        Some(BlowupCertificate::UndampedAboveThreshold)
    } else if escape_window(traj, T::lit(1e-3), T::lit(5.0)).is_some() {
        Some(BlowupCertificate::EscapeWindow)
    } else {
        None
    };

    let cutoff = T::lit(BLOWUP_FIT_MIN_U);
    let tail: Vec<&Sample<T>> = traj.samples.iter().filter(|s| s.state.u.abs() > cutoff).collect();
    let tail = &tail[tail.len().saturating_sub(BLOWUP_FIT_SAMPLES)..];
    let (t_est, rate_margin) = if tail.len() >= 3 {
        let n = T::from_usize_lossy(tail.len());
        let tc = tail.iter().fold(T::zero(), |a, s| a + s.t) / n;
        let yc = tail.iter().fold(T::zero(), |a, s| a + T::one() / s.state.u.abs()) / n;
        let (mut sxy, mut sxx) = (T::zero(), T::zero());
        for s in tail {
            let dx = s.t - tc;
            sxy = sxy + dx * (T::one() / s.state.u.abs() - yc);
            sxx = sxx + dx * dx;
        }
        let slope = sxy / sxx;
        if slope < T::zero() && slope.is_finite() {
            let t_est = tc - yc / slope;
            let margin = tail.iter().map(|s| s.state.u.abs() * (t_est - s.t)).fold(T::infinity(), T::min);
            (Some(t_est), Some(margin))
        } else {
            (None, None)
        }
    } else {
        (None, None)
    };

    Ok(BlowupReport { t_est, certified: certificate.is_some(), certificate, rate_margin, fitted: tail.len() })
}
