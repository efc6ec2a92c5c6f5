//! Fate maps over a rectangle of initial data.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fate::{classify_fate, fate_csv_row, Fate, FATE_CSV_HEADER};
use crate::ode::IntegratorOptions;
use crate::phase::{Damping, State};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinJob<T> {
    pub u_min: T,
    pub u_max: T,
    pub v_min: T,
    pub v_max: T,
    pub nx: usize,
    pub ny: usize,
    pub gamma: T,
    pub integrator: IntegratorOptions<T>,
}

impl<T: Real> BasinJob<T> {
    pub fn square(half_width: T, n: usize, gamma: T) -> Self {
        Self {
            u_min: -half_width,
            u_max: half_width,
            v_min: -half_width,
            v_max: half_width,
            nx: n,
            ny: n,
            gamma,
            integrator: IntegratorOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_min < self.u_max && self.v_min < self.v_max) {
            return Err(Error::InvalidParameter("window must have u_min < u_max and v_min < v_max".into()));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidParameter("resolution must be at least 1x1".into()));
        }
        Damping::new(self.gamma)?;
        self.integrator.validate()
    }

    /// Initial datum at the centre of pixel `(row, col)`; row 0 is the top
    /// (largest `v`).
    pub fn pixel(&self, row: usize, col: usize) -> State<T> {
        let half = T::lit(0.5);
        let du = (self.u_max - self.u_min) / T::from_usize_lossy(self.nx);
        let dv = (self.v_max - self.v_min) / T::from_usize_lossy(self.ny);
        let u = self.u_min + du * (T::from_usize_lossy(col) + half);
        let v = self.v_max - dv * (T::from_usize_lossy(row) + half);
        State::raw(u, v)
    }
}

#[derive(Debug, Clone)]
pub struct BasinMap<T> {
    pub job: BasinJob<T>,
    /// Row-major, row 0 at the top.
    pub fates: Vec<Fate<T>>,
}

impl<T: Real> BasinMap<T> {
    pub fn at(&self, row: usize, col: usize) -> &Fate<T> {
        &self.fates[row * self.job.nx + col]
    }

    /// Binary PGM (`P5`, maxval 255), one gray level per fate.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.job.nx, self.job.ny)?;
        let bytes: Vec<u8> = self.fates.iter().map(|f| f.kind.gray()).collect();
        w.write_all(&bytes)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{FATE_CSV_HEADER}")?;
        let gamma = Damping::new(self.job.gamma).expect("validated job");
        for row in 0..self.job.ny {
            for col in 0..self.job.nx {
                let s = self.job.pixel(row, col);
                writeln!(w, "{}", fate_csv_row(s, gamma, self.at(row, col)))?;
            }
        }
        Ok(())
    }
}

/// Classify every pixel, rows in parallel on the current rayon pool.
pub fn run_basin<T: Real>(job: &BasinJob<T>) -> Result<BasinMap<T>> {
    job.validate()?;
    let gamma = Damping::new(job.gamma)?;
    let fates: Vec<Fate<T>> = (0..job.ny)
        .into_par_iter()
        .flat_map_iter(|row| (0..job.nx).map(move |col| classify_fate(job.pixel(row, col), gamma, &job.integrator)))
        .collect();
    Ok(BasinMap { job: *job, fates })
}

/// [`run_basin`] on a dedicated pool of `threads` workers.
pub fn run_basin_with_threads<T: Real>(job: &BasinJob<T>, threads: usize) -> Result<BasinMap<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_basin(job))
}
