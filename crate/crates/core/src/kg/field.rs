use num_complex::Complex;
use rand::Rng;

use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Real};

/// Real field on a torus grid, with its Fourier coefficients.
#[derive(Debug, Clone)]
pub struct Field<T: Real> {
    grid: TorusGrid<T>,
    values: Vec<T>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Field<T> {
    pub fn from_values(grid: &TorusGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        let coeffs = grid.forward(&values);
        Ok(Self { grid: grid.clone(), values, coeffs })
    }

    /// Field with the given coefficients; imaginary residue of the synthesis
    /// is dropped.
    pub fn from_coeffs(grid: &TorusGrid<T>, coeffs: Vec<Complex<T>>) -> Self {
        assert_eq!(coeffs.len(), grid.len(), "coefficient count must match the grid");
        let values = grid.inverse(&coeffs);
        Self { grid: grid.clone(), values, coeffs }
    }

    pub fn from_fn(grid: &TorusGrid<T>, f: impl Fn([T; 3]) -> T) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::from_values(grid, values)
    }

    pub fn constant(grid: &TorusGrid<T>, c: T) -> Self {
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        coeffs[0] = Complex::new(c, T::zero());
        Self { grid: grid.clone(), values: vec![c; grid.len()], coeffs }
    }

    pub fn zeros(grid: &TorusGrid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Smooth random field: a sum of a few low Fourier modes with
    /// coefficients decaying like `1/(1 + |k|²)`.
    pub fn random_smooth<R: Rng>(grid: &TorusGrid<T>, rng: &mut R, max_mode: usize) -> Self {
        let n = grid.n();
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        let mm = max_mode.min(n / 3) as i64;
        let modes: Vec<i64> = (-mm..=mm).collect();
        let dim = grid.dim();
        let index = |ms: &[i64]| ms.iter().fold(0usize, |acc, &m| acc * n + m.rem_euclid(n as i64) as usize);
        let mut ms = vec![0i64; dim];
        let combos = modes.len().pow(dim as u32);
        for c in 0..combos {
            let mut rem = c;
            for m in ms.iter_mut() {
                *m = modes[rem % modes.len()];
                rem /= modes.len();
            }
            // fill each ± pair once, from the lexicographically positive side
            let neg: Vec<i64> = ms.iter().map(|m| -m).collect();
            if ms <= neg {
                continue;
            }
            let i = index(&ms);
            let scale = T::one() / (T::one() + grid.k2()[i]);
            let re = T::lit(rng.gen_range(-1.0..1.0)) * scale;
            let im = T::lit(rng.gen_range(-1.0..1.0)) * scale;
            coeffs[i] = Complex::new(re, im);
            coeffs[index(&neg)] = Complex::new(re, -im);
        }
        Self::from_coeffs(grid, coeffs)
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Field with the modes removed by the 2/3 rule set to zero.
    pub fn dealiased(&self) -> Self {
        let mut c = self.coeffs.clone();
        self.grid.dealias(&mut c);
        Self::from_coeffs(&self.grid, c)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&x| x * s).collect(),
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: T, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a + s * b).collect(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + b * s).collect(),
        })
    }

    pub fn mean(&self) -> T {
        self.coeffs[0].re
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    fn weighted_power(&self, w: impl Fn(usize) -> T) -> T {
        let terms: Vec<T> = self.coeffs.iter().enumerate().map(|(i, c)| w(i) * c.norm_sqr()).collect();
        self.grid.volume() * pairwise_sum(&terms)
    }

    /// `∫ u²`.
    pub fn l2_norm_sq(&self) -> T {
        self.weighted_power(|_| T::one())
    }

    /// `∫ |∇u|²`.
    pub fn gradient_norm_sq(&self) -> T {
        let k2 = self.grid.k2();
        self.weighted_power(|i| k2[i])
    }

    /// `‖u‖²_{H¹} = ∫ |∇u|² + u²`.
    pub fn h1_norm_sq(&self) -> T {
        let k2 = self.grid.k2();
        self.weighted_power(|i| T::one() + k2[i])
    }

    pub fn h1_norm(&self) -> T {
        self.h1_norm_sq().sqrt()
    }

    /// `∫ u⁴` by grid quadrature.
    pub fn l4_pow4(&self) -> T {
        let terms: Vec<T> = self.values.iter().map(|&x| (x * x) * (x * x)).collect();
        self.grid.cell_volume() * pairwise_sum(&terms)
    }

    /// Largest relative mismatch between the stored values and the synthesis
    /// of the stored coefficients.
    pub fn consistency_defect(&self) -> T {
        let synth = self.grid.inverse(&self.coeffs);
        let scale = self.sup_norm().max(T::min_positive_value());
        self.values.iter().zip(&synth).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())) / scale
    }

    /// `max_m |c_m - conj(c_{-m})|`.
    pub fn conjugate_symmetry_defect(&self) -> T {
        conjugate_symmetry_defect(&self.grid, &self.coeffs)
    }

    /// `-Δu + u - P(u³)` where `P` is the 2/3-rule projection.
    pub fn stationary_residual(&self) -> Self {
        let cubed = cube_dealiased(&self.grid, &self.values);
        let k2 = self.grid.k2();
        let coeffs =
            self.coeffs.iter().zip(&cubed).enumerate().map(|(i, (&c, &q))| c * (T::one() + k2[i]) - q).collect();
        Self::from_coeffs(&self.grid, coeffs)
    }
}

pub(crate) fn conjugate_symmetry_defect<T: Real>(grid: &TorusGrid<T>, coeffs: &[Complex<T>]) -> T {
    (0..coeffs.len()).map(|i| (coeffs[i] - coeffs[grid.conjugate_index(i)].conj()).norm()).fold(T::zero(), T::max)
}

/// Coefficients of `u³` computed on the grid, with the 2/3 rule applied.
pub(crate) fn cube_dealiased<T: Real>(grid: &TorusGrid<T>, values: &[T]) -> Vec<Complex<T>> {
    let mut data: Vec<Complex<T>> = values.iter().map(|&x| Complex::new(x * x * x, T::zero())).collect();
    grid.forward_in_place(&mut data);
    grid.dealias(&mut data);
    data
}

/// `(u, ∂ₜu)` on a common grid.
#[derive(Debug, Clone)]
pub struct KgState<T: Real> {
    pub u: Field<T>,
    pub v: Field<T>,
}

impl<T: Real> KgState<T> {
    pub fn new(u: Field<T>, v: Field<T>) -> Result<Self> {
        u.check_grid(&v)?;
        Ok(Self { u, v })
    }

    pub fn constant(grid: &TorusGrid<T>, u0: T, u1: T) -> Self {
        Self { u: Field::constant(grid, u0), v: Field::constant(grid, u1) }
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        self.u.grid()
    }

    /// `self + s·other`, componentwise.
    pub fn axpy(&self, s: T, other: &Self) -> Result<Self> {
        Ok(Self { u: self.u.axpy(s, &other.u)?, v: self.v.axpy(s, &other.v)? })
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { u: self.u.scaled(s), v: self.v.scaled(s) }
    }

    /// `‖u‖_{H¹×L²} = (‖u‖²_{H¹} + ‖v‖²_{L²})^{1/2}`.
    pub fn energy_norm(&self) -> T {
        (self.u.h1_norm_sq() + self.v.l2_norm_sq()).sqrt()
    }

    pub fn dealiased(&self) -> Self {
        Self { u: self.u.dealiased(), v: self.v.dealiased() }
    }
}

/// `J(u) = ½‖u‖²_{H¹} - ¼‖u‖⁴_{L⁴}`.
pub fn kg_static_energy<T: Real>(u: &Field<T>) -> T {
    u.h1_norm_sq() / T::lit(2.0) - u.l4_pow4() / T::lit(4.0)
}

/// `E(u, v) = J(u) + ½‖v‖²_{L²}`.
pub fn kg_energy<T: Real>(s: &KgState<T>) -> T {
    kg_static_energy(&s.u) + s.v.l2_norm_sq() / T::lit(2.0)
}

/// `K(u) = ‖u‖²_{H¹} - ‖u‖⁴_{L⁴}`.
pub fn k_functional<T: Real>(u: &Field<T>) -> T {
    u.h1_norm_sq() - u.l4_pow4()
}

/// Rescale `w` onto the Nehari manifold `K = 0`.
pub fn nehari_project<T: Real>(w: &Field<T>) -> Result<Field<T>> {
    let l4 = w.l4_pow4();
    if !(l4 > T::zero()) {
        return Err(Error::Domain("cannot project the zero field".into()));
    }
    let lambda = w.h1_norm() / l4.sqrt();
    Ok(w.scaled(lambda))
}

/// `¼‖w‖⁴_{H¹}/‖w‖⁴_{L⁴}`, equal to `J` at the Nehari projection of `w`.
pub fn nehari_quotient<T: Real>(w: &Field<T>) -> T {
    let a = w.h1_norm_sq();
    a * a / (T::lit(4.0) * w.l4_pow4())
}
