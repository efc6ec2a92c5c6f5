//! Bisection for the critical dampings `γ₀`, `γ₁` and the critical
//! velocity `U₁`.
//!
//! Every probe is a certified [`classify_fate`] call. The fate sets on either
//! side of each threshold are intervals, so a probe whose fate matches
//! neither endpoint means something is wrong and is reported as
//! [`Error::BracketViolation`].

use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::fate::{classify_fate, Certificate, Fate, FateKind};
use crate::ode::IntegratorOptions;
use crate::phase::{classify_region, energy, on_threshold_shell, threshold_energy, Damping, Region, State};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket<T> {
    pub lo: T,
    pub hi: T,
    pub lo_fate: FateKind,
    pub hi_fate: FateKind,
    pub width_target: T,
    pub probes: usize,
    /// Seconds spent on the search.
    pub wall_time: f64,
}

impl<T: Real> Bracket<T> {
    pub fn midpoint(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// A threshold either known exactly or bracketed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold<T> {
    Exact(T),
    Bracketed(Bracket<T>),
}

impl<T: Real> Threshold<T> {
    pub fn estimate(&self) -> T {
        match self {
            Threshold::Exact(x) => *x,
            Threshold::Bracketed(b) => b.midpoint(),
        }
    }

    pub fn bracket(&self) -> Option<&Bracket<T>> {
        match self {
            Threshold::Exact(_) => None,
            Threshold::Bracketed(b) => Some(b),
        }
    }
}

/// Thresholds of data in `N3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum N3Thresholds<T> {
    /// `E = 1/4`: `γ = 0` converges to `-1`, every `γ > 0` blows up.
    Shell,
    Pair {
        gamma0: Bracket<T>,
        gamma1: Bracket<T>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions<T> {
    /// Target bracket width.
    pub width: T,
    /// Probe integrator settings; `t_max` is the budget at the initial width.
    pub integrator: IntegratorOptions<T>,
    /// Relative slack added to the analytic seeds.
    pub seed_slack: T,
    /// Extra budget per decade of bracket shrinkage.
    pub t_max_per_decade: T,
    pub max_doublings: usize,
}

impl<T: Real> Default for SearchOptions<T> {
    fn default() -> Self {
        Self {
            width: T::lit(1e-8),
            integrator: IntegratorOptions::default(),
            seed_slack: T::lit(1e-3),
            t_max_per_decade: T::lit(50.0),
            max_doublings: 40,
        }
    }
}

impl<T: Real> SearchOptions<T> {
    pub fn with_width(mut self, width: T) -> Self {
        self.width = width;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.width > T::zero() && self.width.is_finite()) {
            return Err(Error::InvalidParameter("width must be positive".into()));
        }
        self.integrator.validate()
    }
}

struct Prober<'a, T: Real> {
    opts: &'a SearchOptions<T>,
    initial_width: T,
    probes: usize,
}

impl<'a, T: Real> Prober<'a, T> {
    fn new(opts: &'a SearchOptions<T>, initial_width: T) -> Self {
        Self { opts, initial_width, probes: 0 }
    }

    fn budget(&self, width: T) -> T {
        let decades = (self.initial_width / width).log10().max(T::zero());
        self.opts.integrator.t_max + self.opts.t_max_per_decade * decades
    }

    /// Certified fate, retried once at ten-fold tighter tolerance.
    fn fate(&mut self, s0: State<T>, gamma: T, width: T) -> Result<Fate<T>> {
        let gamma = Damping::new(gamma)?;
        let base = self.opts.integrator.with_t_max(self.budget(width));
        self.probes += 1;
        let f = classify_fate(s0, gamma, &base);
        if f.kind.is_certified() {
            return Ok(f);
        }
        self.probes += 1;
        let f = classify_fate(s0, gamma, &base.tightened(T::lit(10.0)));
        if f.kind.is_certified() {
            return Ok(f);
        }
        Err(Error::Unresolved(format!(
            "probe at u0={}, u1={}, gamma={} undetermined after t={}",
            s0.u,
            s0.v,
            gamma.get(),
            f.cert_time
        )))
    }
}

/// Shrink `[lo, hi]` until its width is at most `opts.width`, keeping the
/// fates at its ends. `probe(x, width)` returns the certified fate at `x`.
fn bisect<T: Real>(
    mut lo: T,
    mut hi: T,
    lo_fate: FateKind,
    hi_fate: FateKind,
    width: T,
    mut probe: impl FnMut(T, T) -> Result<FateKind>,
) -> Result<(T, T)> {
    while hi - lo > width {
        let mid = (lo + hi) / T::lit(2.0);
        if !(mid > lo && mid < hi) {
            break;
        }
        let k = probe(mid, hi - lo)?;
        if k == lo_fate {
            lo = mid;
        } else if k == hi_fate {
            hi = mid;
        } else {
            return Err(Error::BracketViolation(format!(
                "fate {k} at {mid} inside a {lo_fate}/{hi_fate} bracket [{lo}, {hi}]"
            )));
        }
    }
    Ok((lo, hi))
}

fn seed_bound<T: Real>(s0: State<T>) -> T {
    let one = T::one();
    (s0.v / (one - s0.u)).max(s0.v)
}

/// Bracket `γ₀` for data in `N2`: blow-up below, decay to zero above.
pub fn find_gamma0_n2<T: Real>(s0: State<T>, opts: &SearchOptions<T>) -> Result<Threshold<T>> {
    opts.validate()?;
    if classify_region(s0) != Region::N2 {
        return Err(Error::Precondition(format!("({}, {}) is not in N2", s0.u, s0.v)));
    }
    if on_threshold_shell(s0) {
        return Ok(Threshold::Exact(T::zero()));
    }
    if !(energy(s0) > threshold_energy()) {
        return Err(Error::Precondition("N2 search needs E > 1/4".into()));
    }
    let clock = Instant::now();
    let hi = seed_bound(s0) * (T::one() + opts.seed_slack);
    let mut prober = Prober::new(opts, hi);
    let end_fate = |p: &mut Prober<T>, g: T| p.fate(s0, g, hi).map(|f| f.kind);
    let at_zero = end_fate(&mut prober, T::zero())?;
    let at_hi = end_fate(&mut prober, hi)?;
    if at_zero != FateKind::BlowUp || at_hi != FateKind::DecayZero {
        return Err(Error::BracketViolation(format!("seed bracket [0, {hi}] has fates {at_zero}/{at_hi}")));
    }
    let (lo, hi) = bisect(T::zero(), hi, FateKind::BlowUp, FateKind::DecayZero, opts.width, |g, w| {
        prober.fate(s0, g, w).map(|f| f.kind)
    })?;
    Ok(Threshold::Bracketed(Bracket {
        lo,
        hi,
        lo_fate: FateKind::BlowUp,
        hi_fate: FateKind::DecayZero,
        width_target: opts.width,
        probes: prober.probes,
        wall_time: clock.elapsed().as_secs_f64(),
    }))
}

/// Fates in `N3` with the direction of blow-up kept apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum N3Fate {
    Above,
    Decay,
    Below,
}

fn n3_fate<T: Real>(f: &Fate<T>) -> Result<N3Fate> {
    // without damping above threshold the velocity never vanishes, so its
    // sign gives the direction of escape
    let upward = match f.certificate {
        Certificate::UndampedAboveThreshold => f.witness.v > T::zero(),
        _ => f.witness.u > T::zero(),
    };
    match f.kind {
        FateKind::BlowUp if upward => Ok(N3Fate::Above),
        FateKind::BlowUp => Ok(N3Fate::Below),
        FateKind::DecayZero => Ok(N3Fate::Decay),
        k => Err(Error::BracketViolation(format!("unexpected fate {k} in N3 search"))),
    }
}

/// Bracket `γ₀ < γ₁` for data in `N3`: blow-up through `u > 1` below `γ₀`,
/// decay to zero between, blow-up through `u < -1` above `γ₁`.
pub fn find_gamma0_gamma1_n3<T: Real>(s0: State<T>, opts: &SearchOptions<T>) -> Result<N3Thresholds<T>> {
    opts.validate()?;
    if classify_region(s0) != Region::N3 {
        return Err(Error::Precondition(format!("({}, {}) is not in N3", s0.u, s0.v)));
    }
    if on_threshold_shell(s0) {
        return Ok(N3Thresholds::Shell);
    }
    if !(energy(s0) > threshold_energy()) {
        return Err(Error::Precondition("N3 search needs E > 1/4".into()));
    }
    let clock = Instant::now();
    let mut hi = s0.v / (-T::one() - s0.u) * (T::one() + opts.seed_slack);
    let mut prober = Prober::new(opts, hi);
    let init_w = hi;
    let classify = |p: &mut Prober<T>, g: T, w: T| p.fate(s0, g, w).and_then(|f| n3_fate(&f));

    if classify(&mut prober, T::zero(), init_w)? != N3Fate::Above {
        return Err(Error::BracketViolation("gamma = 0 does not blow up through u > 1".into()));
    }
    let mut doublings = 0;
    while classify(&mut prober, hi, init_w)? != N3Fate::Below {
        doublings += 1;
        if doublings > opts.max_doublings {
            return Err(Error::Unresolved("no blow-up through u < -1 found".into()));
        }
        hi = hi + hi;
    }

    // locate one decaying damping between the two blow-up regimes
    let mut decay = None;
    let scan = 32;
    let mut last_above = T::zero();
    let mut first_below = hi;
    for i in 1..scan {
        let g = hi * T::from_usize_lossy(i) / T::from_usize_lossy(scan);
        match classify(&mut prober, g, init_w)? {
            N3Fate::Decay => {
                decay = Some(g);
                break;
            }
            N3Fate::Above => last_above = g,
            N3Fate::Below => {
                first_below = g;
                break;
            }
        }
    }
    if decay.is_none() {
        let (mut a, mut b) = (last_above, first_below);
        while b - a > opts.width {
            let g = (a + b) / T::lit(2.0);
            match classify(&mut prober, g, b - a)? {
                N3Fate::Decay => {
                    decay = Some(g);
                    break;
                }
                N3Fate::Above => a = g,
                N3Fate::Below => b = g,
            }
        }
    }
    let Some(gd) = decay else {
        return Err(Error::Unresolved("no decaying damping found between the regimes".into()));
    };

    let (lo0, hi0) = bisect(T::zero(), gd, FateKind::BlowUp, FateKind::DecayZero, opts.width, |g, w| {
        let f = prober.fate(s0, g, w)?;
        if n3_fate(&f)? == N3Fate::Below {
            return Err(Error::BracketViolation(format!("blow-up through u < -1 at {g} below gamma1")));
        }
        Ok(f.kind)
    })?;
    let (lo1, hi1) = bisect(gd, hi, FateKind::DecayZero, FateKind::BlowUp, opts.width, |g, w| {
        let f = prober.fate(s0, g, w)?;
        if n3_fate(&f)? == N3Fate::Above {
            return Err(Error::BracketViolation(format!("blow-up through u > 1 at {g} above gamma0")));
        }
        Ok(f.kind)
    })?;
    let wall_time = clock.elapsed().as_secs_f64();
    let mk = |lo, hi, lo_fate, hi_fate| Bracket {
        lo,
        hi,
        lo_fate,
        hi_fate,
        width_target: opts.width,
        probes: prober.probes,
        wall_time,
    };
    Ok(N3Thresholds::Pair {
        gamma0: mk(lo0, hi0, FateKind::BlowUp, FateKind::DecayZero),
        gamma1: mk(lo1, hi1, FateKind::DecayZero, FateKind::BlowUp),
    })
}

/// Certified lower bound on `U₁`: data `(-1, u1)` below it decay.
pub fn u1_lower_bound<T: Real>(gamma: T) -> T {
    let quarter = T::lit(0.25);
    if gamma <= T::FRAC_1_SQRT_2() {
        gamma * quarter
    } else {
        quarter * T::FRAC_1_SQRT_2()
    }
}

/// Bracket the critical velocity `U₁(γ)` for data `(-1, u1)`: decay below,
/// blow-up above.
pub fn find_u1<T: Real>(gamma: Damping<T>, opts: &SearchOptions<T>) -> Result<Bracket<T>> {
    opts.validate()?;
    if gamma.is_zero() {
        return Err(Error::Precondition("U1 needs gamma > 0".into()));
    }
    let clock = Instant::now();
    let g = gamma.get();
    let lo = u1_lower_bound(g) * (T::one() - opts.seed_slack);
    let mut prober = Prober::new(opts, lo);
    let at = |u1: T| State::new(-T::one(), u1);
    let fate = |p: &mut Prober<T>, u1: T, w: T| p.fate(at(u1)?, g, w).map(|f| f.kind);
    let init_w = lo;

    if fate(&mut prober, lo, init_w)? != FateKind::DecayZero {
        return Err(Error::BracketViolation(format!("u1 = {lo} below the lower bound does not decay")));
    }
    let mut lo_b = lo;
    let mut hi = lo + lo;
    let mut doublings = 0;
    loop {
        match fate(&mut prober, hi, init_w)? {
            FateKind::DecayZero => lo_b = hi,
            FateKind::BlowUp => break,
            k => return Err(Error::BracketViolation(format!("fate {k} while seeding U1"))),
        }
        doublings += 1;
        if doublings > opts.max_doublings {
            return Err(Error::Unresolved("no blow-up found by doubling u1".into()));
        }
        hi = hi + hi;
    }
    let (lo, hi) =
        bisect(lo_b, hi, FateKind::DecayZero, FateKind::BlowUp, opts.width, |u1, w| fate(&mut prober, u1, w))?;
    Ok(Bracket {
        lo,
        hi,
        lo_fate: FateKind::DecayZero,
        hi_fate: FateKind::BlowUp,
        width_target: opts.width,
        probes: prober.probes,
        wall_time: clock.elapsed().as_secs_f64(),
    })
}

pub const CRITICAL_CSV_HEADER: &str = "u0,u1,target,lo,hi,midpoint,probes,wall_time";

/// One row in the `CRITICAL_CSV_HEADER` layout (no trailing newline).
pub fn critical_csv_row<T: Real>(s0: State<T>, target: &str, b: &Bracket<T>) -> String {
    format!(
        "{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{},{:.6}",
        s0.u.as_f64(),
        s0.v.as_f64(),
        target,
        b.lo.as_f64(),
        b.hi.as_f64(),
        b.midpoint().as_f64(),
        b.probes,
        b.wall_time
    )
}

pub fn write_critical_csv<T: Real, W: Write>(mut w: W, rows: &[(State<T>, &str, Bracket<T>)]) -> std::io::Result<()> {
    writeln!(w, "{CRITICAL_CSV_HEADER}")?;
    for (s, target, b) in rows {
        writeln!(w, "{}", critical_csv_row(*s, target, b))?;
    }
    Ok(())
}
