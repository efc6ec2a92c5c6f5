use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

struct Inner<T: Real> {
    dim: usize,
    n: usize,
    side: T,
    /// `|k|²` per grid index, in the same order as the values.
    k2: Vec<T>,
    /// Modes kept by the 2/3 rule.
    keep: Vec<bool>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

/// Uniform grid on the flat torus `(ℝ/Lℤ)^d`, with `n` points per axis.
///
/// Cloning is cheap; FFT plans are shared.
#[derive(Clone)]
pub struct TorusGrid<T: Real>(Arc<Inner<T>>);

impl<T: Real> fmt::Debug for TorusGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid").field("dim", &self.0.dim).field("n", &self.0.n).field("side", &self.0.side).finish()
    }
}

impl<T: Real> PartialEq for TorusGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.dim == other.0.dim && self.0.n == other.0.n && self.0.side == other.0.side)
    }
}

/// Signed integer frequency of index `j` on an `n`-point axis.
fn signed_mode(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl<T: Real> TorusGrid<T> {
    pub fn new(dim: usize, n: usize, side: T) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("points per axis must be a power of two >= 4, got {n}")));
        }
        if !(side > T::zero() && side.is_finite()) {
            return Err(Error::InvalidParameter("side length must be positive".into()));
        }
        let total = n.pow(dim as u32);
        let base = T::TAU() / side;
        let mut k2 = Vec::with_capacity(total);
        let mut keep = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut s = T::zero();
            let mut kept = true;
            for _ in 0..dim {
                let m = signed_mode(rem % n, n);
                rem /= n;
                let k = base * T::lit(m as f64);
                s = s + k * k;
                // |m| < n/3
                kept &= 3 * m.unsigned_abs() < n as u64;
            }
            k2.push(s);
            keep.push(kept);
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self(Arc::new(Inner { dim, n, side, k2, keep, fwd, inv })))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn side(&self) -> T {
        self.0.side
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.0.k2.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> T {
        self.0.side.powi(self.0.dim as i32)
    }

    /// Quadrature weight `L^d / n^d`.
    pub fn cell_volume(&self) -> T {
        self.volume() / T::from_usize_lossy(self.len())
    }

    /// First nonzero eigenvalue of `-Δ`.
    pub fn lambda1(&self) -> T {
        let k = T::TAU() / self.0.side;
        k * k
    }

    /// Largest `|k|²` among the modes kept by dealiasing.
    pub fn lambda_max(&self) -> T {
        self.0.k2.iter().zip(&self.0.keep).filter(|(_, &k)| k).map(|(&x, _)| x).fold(T::zero(), T::max)
    }

    pub fn k2(&self) -> &[T] {
        &self.0.k2
    }

    pub fn keep(&self) -> &[bool] {
        &self.0.keep
    }

    /// Coordinates of the point with flat index `idx` (axis 0 varies slowest).
    pub fn point(&self, idx: usize) -> [T; 3] {
        let (n, d) = (self.0.n, self.0.dim);
        let h = self.0.side / T::from_usize_lossy(n);
        let mut out = [T::zero(); 3];
        let mut rem = idx;
        for axis in (0..d).rev() {
            out[axis] = h * T::from_usize_lossy(rem % n);
            rem /= n;
        }
        out
    }

    fn transform(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        let (n, d) = (self.0.n, self.0.dim);
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex::new(T::zero(), T::zero()); n];
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    let base = start + off;
                    for (j, c) in line.iter_mut().enumerate() {
                        *c = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, c) in line.iter().enumerate() {
                        data[base + j * stride] = *c;
                    }
                }
            }
        }
    }

    /// Fourier coefficients `c_m = n^{-d} Σ_j u_j e^{-i k_m·x_j}`.
    pub fn forward(&self, values: &[T]) -> Vec<Complex<T>> {
        let mut data: Vec<Complex<T>> = values.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.forward_in_place(&mut data);
        data
    }

    pub(crate) fn forward_in_place(&self, data: &mut [Complex<T>]) {
        self.transform(data, &self.0.fwd);
        let scale = T::one() / T::from_usize_lossy(self.len());
        for c in data.iter_mut() {
            *c = *c * scale;
        }
    }

    /// Real part of the synthesis `Σ_m c_m e^{i k_m·x_j}`.
    pub fn inverse(&self, coeffs: &[Complex<T>]) -> Vec<T> {
        let mut data = coeffs.to_vec();
        self.transform(&mut data, &self.0.inv);
        data.into_iter().map(|c| c.re).collect()
    }

    /// Zero the modes removed by the 2/3 rule.
    pub fn dealias(&self, coeffs: &mut [Complex<T>]) {
        for (c, &k) in coeffs.iter_mut().zip(&self.0.keep) {
            if !k {
                *c = Complex::new(T::zero(), T::zero());
            }
        }
    }

    /// Flat index of the mode `-m` for the mode at index `idx`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let (n, d) = (self.0.n, self.0.dim);
        let mut rem = idx;
        let mut out = 0;
        let mut mul = 1;
        for _ in 0..d {
            let j = rem % n;
            rem /= n;
            out += ((n - j) % n) * mul;
            mul *= n;
        }
        out
    }
}
