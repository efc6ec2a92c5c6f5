use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::field::{k_functional, kg_energy, Field, KgState};
use super::integrate::{kg_integrate, kg_integrate_with, KgOptions, KgTermination};
use crate::error::{Error, Result};
use crate::fate::FateKind;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgCertificate {
    /// Initial data with `E < d_ref` and `K < 0`.
    InitialKMinus,
    /// `E(t) < 0`, which forces `K < 0` below the ground-state level.
    NegativeEnergy,
    /// `E(t) < d_ref` with `K ≥ 0`.
    EnteredKPlus,
    /// The `H¹` norm crossed the blow-up threshold before any certificate.
    ThresholdWithoutWitness,
    BudgetExhausted,
}

impl fmt::Display for KgCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KgFate<T> {
    pub kind: FateKind,
    pub certificate: KgCertificate,
    pub cert_time: T,
    pub energy: T,
    pub k: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KgFateOptions<T> {
    pub kg: KgOptions<T>,
    /// Lower surrogate for the ground-state level.
    pub d_ref: T,
    /// Doublings of the perturbation tried when measuring the margin.
    pub margin_doublings: usize,
}

impl<T: Real> KgFateOptions<T> {
    /// `d_ref = 0.99 · d_upper`.
    pub fn from_ground_level(d_upper: T, kg: KgOptions<T>) -> Self {
        Self { kg, d_ref: T::lit(0.99) * d_upper, margin_doublings: 6 }
    }
}

/// Certified fate of one KG solution.
pub fn kg_fate<T: Real>(s0: &KgState<T>, gamma: T, opts: &KgFateOptions<T>) -> Result<KgFate<T>> {
    if !(opts.d_ref > T::zero()) {
        return Err(Error::InvalidParameter("d_ref must be positive".into()));
    }
    let s0 = s0.dealiased();
    let (e0, k0) = (kg_energy(&s0), k_functional(&s0.u));
    if e0 < opts.d_ref && k0 < T::zero() {
        return Ok(KgFate {
            kind: FateKind::BlowUp,
            certificate: KgCertificate::InitialKMinus,
            cert_time: T::zero(),
            energy: e0,
            k: k0,
        });
    }
    let d_ref = opts.d_ref;
    let tr =
        kg_integrate_with(&s0, gamma, &opts.kg, |s| s.energy < T::zero() || (s.energy < d_ref && s.k >= T::zero()))?;
    let last = tr.last();
    let (kind, certificate) = match tr.termination {
        KgTermination::Stopped if last.energy < T::zero() => (FateKind::BlowUp, KgCertificate::NegativeEnergy),
        KgTermination::Stopped => (FateKind::DecayZero, KgCertificate::EnteredKPlus),
        KgTermination::BlowUp => (FateKind::Undetermined, KgCertificate::ThresholdWithoutWitness),
        KgTermination::TimeLimit => (FateKind::Undetermined, KgCertificate::BudgetExhausted),
    };
    Ok(KgFate { kind, certificate, cert_time: last.t, energy: last.energy, k: last.k })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KgExperiment<T> {
    pub fate: KgFate<T>,
    /// `‖perturbation‖_{H¹×L²}`.
    pub perturbation_norm: T,
    /// Largest perturbation norm, along the same direction, found to keep
    /// the certified fate.
    pub margin: T,
}

/// Fate of `base + perturbation`, with a doubling search along the
/// perturbation direction for the size of the region sharing that fate.
pub fn kg_fate_experiment<T: Real>(
    base: &KgState<T>,
    perturbation: &KgState<T>,
    gamma: T,
    opts: &KgFateOptions<T>,
) -> Result<KgExperiment<T>> {
    let p = perturbation.dealiased();
    let norm = p.energy_norm();
    let fate = kg_fate(&base.axpy(T::one(), &p)?, gamma, opts)?;
    let mut margin = T::zero();
    if fate.kind.is_certified() && norm > T::zero() {
        margin = norm;
        let mut scale = T::one();
        for _ in 0..opts.margin_doublings {
            scale = scale + scale;
            let f = kg_fate(&base.axpy(scale, &p)?, gamma, opts)?;
            if f.kind != fate.kind {
                break;
            }
            margin = norm * scale;
        }
    }
    Ok(KgExperiment { fate, perturbation_norm: norm, margin })
}

/// Random perturbation of energy norm `delta` built from low Fourier modes.
pub fn random_perturbation<T: Real>(s0: &KgState<T>, delta: T, seed: u64) -> KgState<T> {
    let grid = s0.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p =
        KgState { u: Field::random_smooth(grid, &mut rng, 3), v: Field::random_smooth(grid, &mut rng, 3) }.dealiased();
    let n = p.energy_norm();
    p.scaled(delta / n)
}

/// `sup_t ‖S(t)(s0 + p) - S(t)s0‖ / ‖p‖` over the sample times of `[0, t_end]`
/// for a random perturbation `p` of norm `delta`.
pub fn continuity_probe<T: Real>(
    s0: &KgState<T>,
    delta: T,
    t_end: T,
    gamma: T,
    seed: u64,
    kg: &KgOptions<T>,
) -> Result<T> {
    if delta == T::zero() {
        return Ok(T::zero());
    }
    if !(delta > T::zero() && delta.is_finite()) {
        return Err(Error::InvalidParameter("delta must be nonnegative".into()));
    }
    let opts = KgOptions { keep_states: true, ..kg.with_t_max(t_end) };
    let base = s0.dealiased();
    let a = kg_integrate(&base, gamma, &opts)?;
    if a.termination != KgTermination::TimeLimit {
        return Err(Error::Misuse("base solution blows up before the end time".into()));
    }
    let pert = base.axpy(T::one(), &random_perturbation(&base, delta, seed))?;
    let b = kg_integrate(&pert, gamma, &opts)?;
    if b.termination != KgTermination::TimeLimit {
        return Ok(T::infinity());
    }
    let mut worst = T::zero();
    for (x, y) in a.states.iter().zip(&b.states) {
        worst = worst.max(y.axpy(-T::one(), x)?.energy_norm());
    }
    Ok(worst / delta)
}
