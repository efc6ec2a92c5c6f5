//! Ground states on the Nehari manifold and the explicit competitor that
//! beats the constant state when `λ₁ < 2`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::field::{cube_dealiased, k_functional, kg_static_energy, nehari_project, nehari_quotient, Field};
use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `1 + h` with `h = α φ₀ + β φ₁` on the Nehari manifold.
#[derive(Debug, Clone)]
pub struct SymmetryWitness<T: Real> {
    pub h: Field<T>,
    pub alpha: T,
    pub beta_coeff: T,
    /// `J(1 + h)`.
    pub j_value: T,
    /// `K(1 + h)`, zero up to the root-finding tolerance.
    pub k_value: T,
}

impl<T: Real> SymmetryWitness<T> {
    pub fn field(&self) -> Field<T> {
        self.h.axpy(T::one(), &Field::constant(self.h.grid(), T::one())).expect("same grid")
    }
}

/// Nehari point `1 + αφ₀ + βφ₁` near the constant state, where `φ₀`, `φ₁`
/// are the `L²`-normalized constant and first cosine mode.
///
/// Expanding `K(1 + h) = -aα - bβ² + O(|α|³ + |β|³)` with `a = 2V^{1/2}`,
/// `b = 5 - λ₁` puts the root at `α ≈ -bβ²/a`, so `α` is sought in
/// `[-2bβ²/a, 0]`.
pub fn symmetry_breaking_witness<T: Real>(grid: &TorusGrid<T>, beta_coeff: T) -> Result<SymmetryWitness<T>> {
    let l1 = grid.lambda1();
    if !(l1 < T::lit(2.0)) {
        return Err(Error::Precondition(format!("needs lambda1 < 2, got {l1}")));
    }
    if !beta_coeff.is_finite() {
        return Err(Error::NonFinite("beta_coeff"));
    }
    let vol = grid.volume();
    let phi0 = T::one() / vol.sqrt();
    let amp1 = (T::lit(2.0) / vol).sqrt();
    let k = T::TAU() / grid.side();
    let cos1 = Field::from_fn(grid, |x| amp1 * (k * x[grid.dim() - 1]).cos())?;
    let one = Field::constant(grid, T::one());
    let make_h =
        |alpha: T| cos1.scaled(beta_coeff).axpy(T::one(), &Field::constant(grid, alpha * phi0)).expect("same grid");
    let k_at = |alpha: T| k_functional(&make_h(alpha).axpy(T::one(), &one).expect("same grid"));

    if beta_coeff == T::zero() {
        let h = Field::zeros(grid);
        return Ok(SymmetryWitness {
            j_value: kg_static_energy(&one),
            k_value: k_functional(&one),
            h,
            alpha: T::zero(),
            beta_coeff,
        });
    }

    let a = T::lit(2.0) * vol.sqrt();
    let b = T::lit(5.0) - l1;
    let (mut lo, mut hi) = (-T::lit(2.0) * b * beta_coeff * beta_coeff / a, T::zero());
    let (mut k_lo, k_hi) = (k_at(lo), k_at(hi));
    if !(k_lo > T::zero() && k_hi < T::zero()) {
        return Err(Error::Domain(format!(
            "no sign change of K on [{lo}, 0] (K = {k_lo}, {k_hi}); beta_coeff too large"
        )));
    }
    // Illinois-style false position; K is smooth and monotone here
    let mut k_hi = k_hi;
    let mut side = 0i8;
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0)) * vol;
    let mut alpha = lo;
    for _ in 0..200 {
        alpha = (lo * k_hi - hi * k_lo) / (k_hi - k_lo);
        let kc = k_at(alpha);
        if kc.abs() <= tol || hi - lo <= T::epsilon() * alpha.abs() {
            break;
        }
        if kc > T::zero() {
            lo = alpha;
            k_lo = kc;
            if side == 1 {
                k_hi = k_hi / T::lit(2.0);
            }
            side = 1;
        } else {
            hi = alpha;
            k_hi = kc;
            if side == -1 {
                k_lo = k_lo / T::lit(2.0);
            }
            side = -1;
        }
    }
    let h = make_h(alpha);
    let w = h.axpy(T::one(), &one)?;
    Ok(SymmetryWitness { j_value: kg_static_energy(&w), k_value: k_functional(&w), h, alpha, beta_coeff })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundOptions<T> {
    pub random_seeds: usize,
    pub rng_seed: u64,
    pub max_iter: usize,
    /// Stop once the quotient decreased by less than `stall_rel` (relative)
    /// over `stall_window` iterations.
    pub stall_window: usize,
    pub stall_rel: T,
    /// Stop once `‖-ΔQ + Q - Q³‖_{L²} ≤ residual_rel · ‖Q‖_{H¹}`.
    pub residual_rel: T,
    /// `β` of the symmetry-breaking seed (used when `λ₁ < 2`).
    pub witness_beta: T,
    /// Highest mode index in the random seeds.
    pub seed_modes: usize,
}

impl<T: Real> Default for GroundOptions<T> {
    fn default() -> Self {
        Self {
            random_seeds: 16,
            rng_seed: 0,
            max_iter: 20_000,
            stall_window: 50,
            stall_rel: T::lit(1e-12),
            residual_rel: T::lit(1e-8),
            witness_beta: T::lit(0.1),
            seed_modes: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState<T: Real> {
    pub q: Field<T>,
    /// `J(Q)`, an upper bound for the ground-state level.
    pub d: T,
    /// `‖-ΔQ + Q - Q³‖_{L²}`.
    pub residual: T,
    pub h1_norm: T,
    pub k_value: T,
    pub iterations: usize,
    /// Residual target met.
    pub converged: bool,
    /// Index of the winning seed; `random_seeds` is the constant-state seed
    /// and `random_seeds + 1` the symmetry-breaking seed.
    pub seed: usize,
}

struct Descent<T: Real> {
    q: Field<T>,
    r: T,
    residual: T,
    iterations: usize,
    converged: bool,
}

fn residual_norm<T: Real>(q: &Field<T>) -> T {
    q.stationary_residual().l2_norm_sq().sqrt()
}

/// Gradient of the quotient `R(w) = ¼a²/b` (`a = ‖w‖²_{H¹}`, `b = ‖w‖⁴_{L⁴}`)
/// after the `(1 - Δ)⁻¹` preconditioner, with `⟨g, p⟩_{L²}`.
fn preconditioned_gradient<T: Real>(w: &Field<T>) -> (Vec<Complex<T>>, T) {
    let grid = w.grid();
    let a = w.h1_norm_sq();
    let b = w.l4_pow4();
    let (c1, c2) = (a / b, a * a / (b * b));
    let cubed = cube_dealiased(grid, w.values());
    let k2 = grid.k2();
    let mut gp = T::zero();
    let p: Vec<Complex<T>> = w
        .coeffs()
        .iter()
        .zip(&cubed)
        .enumerate()
        .map(|(i, (&c, &q))| {
            let m = T::one() + k2[i];
            let g = c * (c1 * m) - q * c2;
            let p = g / m;
            gp = gp + m * p.norm_sqr();
            p
        })
        .collect();
    (p, gp * grid.volume())
}

type Coeffs<T> = Vec<Complex<T>>;

fn descend<T: Real>(seed: Field<T>, opts: &GroundOptions<T>) -> Result<Descent<T>> {
    let grid = seed.grid().clone();
    let mut w = nehari_project(&seed.dealiased())?;
    let mut r = nehari_quotient(&w);
    let mut history = vec![r];
    let mut alpha = T::one();
    // previous iterate and gradient, for the Barzilai-Borwein step
    let mut prev: Option<(Coeffs<T>, Coeffs<T>)> = None;
    let armijo = T::lit(1e-4);
    let target = |q: &Field<T>| opts.residual_rel * q.h1_norm();
    let k2 = grid.k2().to_vec();
    let h1_dot = |x: &[Complex<T>], y: &[Complex<T>]| {
        let mut s = T::zero();
        for i in 0..x.len() {
            s = s + (T::one() + k2[i]) * (x[i] * y[i].conj()).re;
        }
        s * grid.volume()
    };

    for it in 0..opts.max_iter {
        let res = residual_norm(&w);
        if res <= target(&w) {
            return Ok(Descent { q: w, r, residual: res, iterations: it, converged: true });
        }
        let (p, gp) = preconditioned_gradient(&w);
        if let Some((w_old, p_old)) = &prev {
            let s: Vec<_> = w.coeffs().iter().zip(w_old).map(|(&a, &b)| a - b).collect();
            let y: Vec<_> = p.iter().zip(p_old).map(|(&a, &b)| a - b).collect();
            let sy = h1_dot(&s, &y);
            if sy > T::zero() {
                alpha = (h1_dot(&s, &s) / sy).min(T::lit(10.0)).max(T::lit(1e-3));
            } else {
                alpha = T::one();
            }
        }
        let mut step = alpha;
        let accepted = loop {
            let trial: Vec<_> = w.coeffs().iter().zip(&p).map(|(&c, &d)| c - d * step).collect();
            let cand = Field::from_coeffs(&grid, trial);
            let rc = nehari_quotient(&cand);
            if rc.is_finite() && rc <= r - armijo * step * gp {
                break Some((cand, rc));
            }
            step = step / T::lit(2.0);
            if step < T::lit(1e-12) {
                break None;
            }
        };
        let Some((cand, rc)) = accepted else {
            // no descent possible at this precision
            return Ok(Descent { residual: res, q: w, r, iterations: it, converged: false });
        };
        prev = Some((w.coeffs().to_vec(), p));
        w = nehari_project(&cand)?;
        // keep the stored iterate and its gradient on the same scale
        if let Some((wo, po)) = prev.as_mut() {
            let s = w.h1_norm() / cand.h1_norm();
            wo.iter_mut().for_each(|c| *c = *c * s);
            po.iter_mut().for_each(|c| *c = *c * s);
        }
        r = rc;
        history.push(r);
        if history.len() > opts.stall_window {
            let old = history[history.len() - 1 - opts.stall_window];
            if old - r <= opts.stall_rel * r.abs() {
                let res = residual_norm(&w);
                let ok = res <= target(&w);
                return Ok(Descent { residual: res, q: w, r, iterations: it + 1, converged: ok });
            }
        }
    }
    let res = residual_norm(&w);
    Ok(Descent { converged: res <= target(&w), residual: res, q: w, r, iterations: opts.max_iter })
}

/// Minimize `J` over the Nehari manifold by preconditioned descent from
/// several seeds and return the lowest point found.
pub fn ground_state_search<T: Real>(grid: &TorusGrid<T>, opts: &GroundOptions<T>) -> Result<GroundState<T>> {
    let mut seeds: Vec<Field<T>> = (0..opts.random_seeds)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed.wrapping_add(i as u64));
            let noise = Field::random_smooth(grid, &mut rng, opts.seed_modes);
            // half the seeds sit near the constant state, half are pure noise
            if i % 2 == 0 {
                let scale = T::lit(0.3) / noise.sup_norm().max(T::min_positive_value());
                noise.scaled(scale).axpy(T::one(), &Field::constant(grid, T::one())).expect("same grid")
            } else {
                noise
            }
        })
        .collect();
    seeds.push(Field::constant(grid, T::one()));
    if grid.lambda1() < T::lit(2.0) {
        if let Ok(w) = symmetry_breaking_witness(grid, opts.witness_beta) {
            seeds.push(w.field());
        }
    }
    let runs: Vec<Result<Descent<T>>> = seeds.into_par_iter().map(|s| descend(s, opts)).collect();
    let mut best: Option<(usize, Descent<T>)> = None;
    for (i, run) in runs.into_iter().enumerate() {
        let Ok(run) = run else { continue };
        let better = match &best {
            None => true,
            Some((_, b)) => run.r < b.r,
        };
        if better {
            best = Some((i, run));
        }
    }
    let (seed, run) = best.ok_or_else(|| Error::Unresolved("every descent seed failed".into()))?;
    let q = run.q;
    Ok(GroundState {
        d: kg_static_energy(&q),
        h1_norm: q.h1_norm(),
        k_value: k_functional(&q),
        residual: run.residual,
        iterations: run.iterations,
        converged: run.converged,
        seed,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_endpoint_and_gap() {
        let grid = TorusGrid::new(1, 64, 8.0f64).unwrap();
        let w0 = symmetry_breaking_witness(&grid, 0.0).unwrap();
        assert!((w0.j_value - 2.0).abs() < 1e-12 && w0.k_value.abs() < 1e-12);
        let w = symmetry_breaking_witness(&grid, 0.1).unwrap();
        assert!(w.alpha < 0.0);
        assert!(w.k_value.abs() <= 1e-10);
        assert!(w.j_value < 2.0);
        assert!(symmetry_breaking_witness(&TorusGrid::new(1, 64, 2.0f64).unwrap(), 0.1).is_err());
        assert!(matches!(symmetry_breaking_witness(&grid, 50.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ground_state_below_constant_when_lambda1_small() {
        let grid = TorusGrid::new(1, 128, 8.0f64).unwrap();
        let opts = GroundOptions { random_seeds: 4, ..GroundOptions::default() };
        let g = ground_state_search(&grid, &opts).unwrap();
        let w = symmetry_breaking_witness(&grid, 0.1).unwrap();
        assert!(g.d <= w.j_value && g.d > 0.0);
        assert!(g.residual <= 1e-6 * g.h1_norm, "{} {}", g.residual, g.h1_norm);
        assert!(g.k_value.abs() <= 1e-8 * g.h1_norm * g.h1_norm);
        // the line soliton √2 sech x has J = 4/3
        assert!((g.d - 4.0 / 3.0).abs() < 0.05, "{}", g.d);
    }

    #[test]
    fn constant_state_on_small_torus() {
        let grid = TorusGrid::new(1, 32, 3.0f64).unwrap();
        assert!(grid.lambda1() >= 2.0);
        let opts = GroundOptions { random_seeds: 4, ..GroundOptions::default() };
        let g = ground_state_search(&grid, &opts).unwrap();
        assert!(g.d <= 0.75 + 1e-12 && g.d > 0.0);
        assert!(g.residual <= 1e-6 * g.h1_norm);
    }
}
