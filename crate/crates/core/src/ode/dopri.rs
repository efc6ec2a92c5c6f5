//! Dormand–Prince 5(4) step with Hairer's continuous extension.

use crate::scalar::Real;

pub(crate) const DIM: usize = 3;
pub(crate) type Vec3<T> = [T; DIM];

struct Tableau<T> {
    a2: T,
    a3: [T; 2],
    a4: [T; 3],
    a5: [T; 4],
    a6: [T; 5],
    a7: [T; 6],
    e: [T; 7],
    d: [T; 7],
}

impl<T: Real> Tableau<T> {
    fn new() -> Self {
        let l = T::lit;
        Self {
            a2: l(0.2),
            a3: [l(3.0 / 40.0), l(9.0 / 40.0)],
            a4: [l(44.0 / 45.0), l(-56.0 / 15.0), l(32.0 / 9.0)],
            a5: [l(19372.0 / 6561.0), l(-25360.0 / 2187.0), l(64448.0 / 6561.0), l(-212.0 / 729.0)],
            a6: [l(9017.0 / 3168.0), l(-355.0 / 33.0), l(46732.0 / 5247.0), l(49.0 / 176.0), l(-5103.0 / 18656.0)],
            a7: [l(35.0 / 384.0), T::zero(), l(500.0 / 1113.0), l(125.0 / 192.0), l(-2187.0 / 6784.0), l(11.0 / 84.0)],
            e: [
                l(71.0 / 57600.0),
                T::zero(),
                l(-71.0 / 16695.0),
                l(71.0 / 1920.0),
                l(-17253.0 / 339200.0),
                l(22.0 / 525.0),
                l(-1.0 / 40.0),
            ],
            d: [
                l(-12715105075.0 / 11282082432.0),
                T::zero(),
                l(87487479700.0 / 32700410799.0),
                l(-10690763975.0 / 1880347072.0),
                l(701980252875.0 / 199316789632.0),
                l(-1453857185.0 / 822651844.0),
                l(69997945.0 / 29380423.0),
            ],
        }
    }
}

/// Right-hand side of the Duffing system augmented with the dissipation
/// ledger `D' = γ v²`.
#[inline]
pub(crate) fn rhs<T: Real>(gamma: T, y: &Vec3<T>) -> Vec3<T> {
    let (u, v) = (y[0], y[1]);
    [v, u * u * u - u - gamma * v, gamma * v * v]
}

/// Result of one attempted step.
pub(crate) struct Step<T> {
    pub y1: Vec3<T>,
    pub k7: Vec3<T>,
    pub err: T,
    pub dense: Dense<T>,
}

/// Continuous extension over one accepted step.
#[derive(Clone)]
pub(crate) struct Dense<T> {
    pub t0: T,
    pub h: T,
    r: [Vec3<T>; 5],
}

impl<T: Real> Dense<T> {
    pub fn eval(&self, t: T) -> Vec3<T> {
        let th = (t - self.t0) / self.h;
        let th1 = T::one() - th;
        let mut out = [T::zero(); DIM];
        for (i, o) in out.iter_mut().enumerate() {
            let r = |j: usize| self.r[j][i];
            *o = r(0) + th * (r(1) + th1 * (r(2) + th * (r(3) + th1 * r(4))));
        }
        out
    }
}

pub(crate) struct Stepper<T> {
    tab: Tableau<T>,
    pub gamma: T,
    pub rel_tol: T,
    pub abs_tol: T,
}

#[inline]
fn axpy<T: Real>(y: &Vec3<T>, h: T, terms: &[(T, &Vec3<T>)]) -> Vec3<T> {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + *c * k[i];
        }
        *o = *o + h * acc;
    }
    out
}

impl<T: Real> Stepper<T> {
    pub fn new(gamma: T, rel_tol: T, abs_tol: T) -> Self {
        Self { tab: Tableau::new(), gamma, rel_tol, abs_tol }
    }

    #[inline]
    pub fn f(&self, y: &Vec3<T>) -> Vec3<T> {
        rhs(self.gamma, y)
    }

    fn scale(&self, a: T, b: T) -> T {
        self.abs_tol + self.rel_tol * a.abs().max(b.abs())
    }

    /// One Dormand–Prince step from `(t, y)` with first stage `k1 = f(y)`.
    pub fn step(&self, t: T, y: &Vec3<T>, k1: &Vec3<T>, h: T) -> Step<T> {
        let tb = &self.tab;
        let k2 = self.f(&axpy(y, h, &[(tb.a2, k1)]));
        let k3 = self.f(&axpy(y, h, &[(tb.a3[0], k1), (tb.a3[1], &k2)]));
        let k4 = self.f(&axpy(y, h, &[(tb.a4[0], k1), (tb.a4[1], &k2), (tb.a4[2], &k3)]));
        let k5 = self.f(&axpy(y, h, &[(tb.a5[0], k1), (tb.a5[1], &k2), (tb.a5[2], &k3), (tb.a5[3], &k4)]));
        let k6 =
            self.f(&axpy(y, h, &[(tb.a6[0], k1), (tb.a6[1], &k2), (tb.a6[2], &k3), (tb.a6[3], &k4), (tb.a6[4], &k5)]));
        let y1 = axpy(y, h, &[(tb.a7[0], k1), (tb.a7[2], &k3), (tb.a7[3], &k4), (tb.a7[4], &k5), (tb.a7[5], &k6)]);
        let k7 = self.f(&y1);

        let mut sum = T::zero();
        for i in 0..DIM {
            let e = h
                * (tb.e[0] * k1[i]
                    + tb.e[2] * k3[i]
                    + tb.e[3] * k4[i]
                    + tb.e[4] * k5[i]
                    + tb.e[5] * k6[i]
                    + tb.e[6] * k7[i]);
            let r = e / self.scale(y[i], y1[i]);
            sum = sum + r * r;
        }
        let mut err = (sum / T::lit(DIM as f64)).sqrt();
        if !err.is_finite() || y1.iter().any(|x| !x.is_finite()) {
            err = T::infinity();
        }

        let mut r = [[T::zero(); DIM]; 5];
        for i in 0..DIM {
            let ydiff = y1[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            r[0][i] = y[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - h * k7[i] - bspl;
            r[4][i] = h
                * (tb.d[0] * k1[i]
                    + tb.d[2] * k3[i]
                    + tb.d[3] * k4[i]
                    + tb.d[4] * k5[i]
                    + tb.d[5] * k6[i]
                    + tb.d[6] * k7[i]);
        }
        Step { y1, k7, err, dense: Dense { t0: t, h, r } }
    }

    /// Hairer's starting step heuristic.
    pub fn initial_step(&self, y: &Vec3<T>, k1: &Vec3<T>, h_max: T) -> T {
        let mut dnf = T::zero();
        let mut dny = T::zero();
        for i in 0..DIM {
            let sk = self.abs_tol + self.rel_tol * y[i].abs();
            dnf = dnf + (k1[i] / sk).powi(2);
            dny = dny + (y[i] / sk).powi(2);
        }
        let tiny = T::lit(1e-10);
        let mut h = if dnf <= tiny || dny <= tiny { T::lit(1e-6) } else { (dny / dnf).sqrt() * T::lit(0.01) };
        h = h.min(h_max);
        let y1 = axpy(y, h, &[(T::one(), k1)]);
        let k2 = self.f(&y1);
        let mut der2 = T::zero();
        for i in 0..DIM {
            let sk = self.abs_tol + self.rel_tol * y[i].abs();
            der2 = der2 + ((k2[i] - k1[i]) / sk).powi(2);
        }
        der2 = der2.sqrt() / h;
        let der12 = der2.abs().max(dnf.sqrt());
        let h1 = if der12 <= T::lit(1e-15) {
            T::lit(1e-6).max(h * T::lit(1e-3))
        } else {
            (T::lit(0.01) / der12).powf(T::lit(0.2))
        };
        (T::lit(100.0) * h).min(h1).min(h_max)
    }
}
