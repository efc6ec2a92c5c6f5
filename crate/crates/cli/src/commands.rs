use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use duffing_kg::basin::{run_basin, BasinJob};
use duffing_kg::critical::{
    find_gamma0_gamma1_n3, find_gamma0_n2, find_u1, write_critical_csv, Bracket, N3Thresholds, SearchOptions, Threshold,
};
use duffing_kg::fate::{classify_fate, fate_csv_row, FateKind, FATE_CSV_HEADER};
use duffing_kg::kg::{
    ground_state_search, kg_fate_experiment, kg_integrate, random_perturbation, snapshot, symmetry_breaking_witness,
    GroundOptions, KgFateOptions, KgOptions, KgState, TorusGrid,
};
use duffing_kg::ode::{integrate, IntegratorOptions, Termination};
use duffing_kg::phase::{classify_region, Damping, Region, State};
use duffing_kg::{Error, Result};

use crate::config::Globals;
use crate::{Datum, TorusArgs};

/// 2 for bad input, 3 for numerical failure, 1 for I/O.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::Precondition(_) | Error::Misuse(_) | Error::Config { .. } => 2,
        Error::NonFinite(_)
        | Error::Domain(_)
        | Error::StepUnderflow { .. }
        | Error::Unresolved(_)
        | Error::BracketViolation(_) => 3,
        Error::Io(_) => 1,
    }
}

fn sink(g: &Globals) -> Result<Box<dyn Write>> {
    Ok(match &g.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn integrator(g: &Globals) -> IntegratorOptions<f64> {
    let mut o = IntegratorOptions::default();
    if let Some(r) = g.rel_tol {
        o.rel_tol = r;
    }
    if let Some(a) = g.abs_tol {
        o.abs_tol = a;
    }
    if let Some(t) = g.t_max {
        o.t_max = t;
    }
    o
}

fn search(g: &Globals, width: f64) -> SearchOptions<f64> {
    SearchOptions { integrator: integrator(g), ..SearchOptions::default() }.with_width(width)
}

fn torus(t: TorusArgs) -> Result<TorusGrid<f64>> {
    TorusGrid::new(t.dim, t.n, t.side)
}

pub fn simulate(g: &Globals, d: Datum, gamma: f64) -> Result<()> {
    let s0 = State::new(d.u0, d.u1)?;
    let tr = integrate(s0, Damping::new(gamma)?, &integrator(g))?;
    let mut w = sink(g)?;
    tr.write_csv(&mut w)?;
    w.flush()?;
    if tr.termination == Termination::StepUnderflow {
        return Err(Error::StepUnderflow { t: tr.last().t });
    }
    Ok(())
}

pub fn classify(g: &Globals, d: Datum, gamma: f64) -> Result<()> {
    let s0 = State::new(d.u0, d.u1)?;
    let gamma = Damping::new(gamma)?;
    let fate = classify_fate(s0, gamma, &integrator(g));
    let mut w = sink(g)?;
    writeln!(w, "{FATE_CSV_HEADER}")?;
    writeln!(w, "{}", fate_csv_row(s0, gamma, &fate))?;
    w.flush()?;
    Ok(())
}

pub fn basin(g: &Globals, window: [f64; 4], nx: usize, ny: usize, gamma: f64, pgm: Option<&Path>) -> Result<()> {
    let [u_min, u_max, v_min, v_max] = window;
    let job = BasinJob { u_min, u_max, v_min, v_max, nx, ny, gamma, integrator: integrator(g) };
    let map = run_basin(&job)?;
    if let Some(p) = pgm {
        let mut f = BufWriter::new(File::create(p)?);
        map.write_pgm(&mut f)?;
        f.flush()?;
    }
    let mut w = sink(g)?;
    map.write_csv(&mut w)?;
    w.flush()?;
    let undetermined = map.fates.iter().filter(|f| f.kind == FateKind::Undetermined).count();
    if undetermined > 0 {
        eprintln!("{undetermined} pixel(s) undetermined within t_max");
    }
    Ok(())
}

fn exact(x: f64, kind_lo: FateKind, kind_hi: FateKind) -> Bracket<f64> {
    Bracket { lo: x, hi: x, lo_fate: kind_lo, hi_fate: kind_hi, width_target: 0.0, probes: 0, wall_time: 0.0 }
}

pub fn critical_gamma(g: &Globals, d: Datum, width: f64) -> Result<()> {
    let given = State::new(d.u0, d.u1)?;
    // u -> -u is a symmetry, so mirrored data share the thresholds
    let s0 = if classify_region(given) == Region::NMirror { given.mirrored() } else { given };
    let opts = search(g, width);
    let rows: Vec<(State<f64>, &str, Bracket<f64>)> = match classify_region(s0) {
        Region::N2 => match find_gamma0_n2(s0, &opts)? {
            Threshold::Exact(x) => vec![(given, "gamma0", exact(x, FateKind::ConvergePlus, FateKind::DecayZero))],
            Threshold::Bracketed(b) => vec![(given, "gamma0", b)],
        },
        Region::N3 => match find_gamma0_gamma1_n3(s0, &opts)? {
            N3Thresholds::Shell => vec![(given, "gamma0", exact(0.0, FateKind::ConvergeMinus, FateKind::BlowUp))],
            N3Thresholds::Pair { gamma0, gamma1 } => vec![(given, "gamma0", gamma0), (given, "gamma1", gamma1)],
        },
        r => {
            return Err(Error::Precondition(format!(
                "critical dampings exist for N2 and N3 data (and their mirror images); ({}, {}) is in {r}",
                d.u0, d.u1
            )))
        }
    };
    let mut w = sink(g)?;
    write_critical_csv(&mut w, &rows)?;
    w.flush()?;
    Ok(())
}

pub fn critical_u1(g: &Globals, gamma: f64, width: f64) -> Result<()> {
    let b = find_u1(Damping::new(gamma)?, &search(g, width))?;
    let mut w = sink(g)?;
    write_critical_csv(&mut w, &[(State::new(-1.0, b.midpoint())?, "U1", b)])?;
    w.flush()?;
    Ok(())
}

fn kg_options(g: &Globals) -> KgOptions<f64> {
    let o = KgOptions::default();
    match g.t_max {
        Some(t) => o.with_t_max(t),
        None => o,
    }
}

pub fn kg_run(
    g: &Globals,
    t: TorusArgs,
    constant: (f64, f64),
    init: Option<&Path>,
    gamma: f64,
    sample_dt: f64,
    snap: Option<&Path>,
) -> Result<()> {
    let s0 = match init {
        Some(p) => snapshot::read_state(io::BufReader::new(File::open(p)?))?,
        None => KgState::constant(&torus(t)?, constant.0, constant.1),
    };
    let opts = KgOptions { sample_dt, ..kg_options(g) };
    let tr = kg_integrate(&s0, gamma, &opts)?;
    let mut w = sink(g)?;
    tr.write_csv(&mut w)?;
    w.flush()?;
    if let Some(p) = snap {
        let mut f = BufWriter::new(File::create(p)?);
        snapshot::write_state(&mut f, &tr.final_state)?;
        f.flush()?;
    }
    Ok(())
}

pub fn kg_ground(g: &Globals, t: TorusArgs, seeds: usize, snap: Option<&Path>) -> Result<()> {
    let grid = torus(t)?;
    let opts = GroundOptions { random_seeds: seeds, rng_seed: g.seed.unwrap_or(0), ..GroundOptions::default() };
    let gs = ground_state_search(&grid, &opts)?;
    let mut w = sink(g)?;
    writeln!(w, "dim,n,L,lambda1,d,volume_over_4,residual,K,converged,iterations,seed")?;
    writeln!(
        w,
        "{},{},{},{:.16e},{:.16e},{:.16e},{:.6e},{:.6e},{},{},{}",
        t.dim,
        t.n,
        t.side,
        grid.lambda1(),
        gs.d,
        grid.volume() / 4.0,
        gs.residual,
        gs.k_value,
        gs.converged,
        gs.iterations,
        gs.seed
    )?;
    w.flush()?;
    if let Some(p) = snap {
        let mut f = BufWriter::new(File::create(p)?);
        snapshot::write_fields(&mut f, &[&gs.q])?;
        f.flush()?;
    }
    Ok(())
}

pub fn kg_witness(g: &Globals, t: TorusArgs, beta: f64) -> Result<()> {
    let grid = torus(t)?;
    let wit = symmetry_breaking_witness(&grid, beta)?;
    let mut w = sink(g)?;
    writeln!(w, "dim,n,L,lambda1,beta,alpha,K,J,volume_over_4")?;
    writeln!(
        w,
        "{},{},{},{:.16e},{},{:.16e},{:.6e},{:.16e},{:.16e}",
        t.dim,
        t.n,
        t.side,
        grid.lambda1(),
        beta,
        wit.alpha,
        wit.k_value,
        wit.j_value,
        grid.volume() / 4.0
    )?;
    w.flush()?;
    Ok(())
}

pub fn kg_fate(g: &Globals, t: TorusArgs, d: Datum, gamma: f64, eps: f64, d_upper: Option<f64>) -> Result<()> {
    let grid = torus(t)?;
    let seed = g.seed.unwrap_or(0);
    let d_upper = match d_upper {
        Some(x) => x,
        None => ground_state_search(&grid, &GroundOptions { rng_seed: seed, ..GroundOptions::default() })?.d,
    };
    let opts = KgFateOptions::from_ground_level(d_upper, kg_options(g));
    let base = KgState::constant(&grid, d.u0, d.u1);
    let pert = if eps > 0.0 { random_perturbation(&base, eps, seed) } else { base.scaled(0.0) };
    let ex = kg_fate_experiment(&base, &pert, gamma, &opts)?;
    let mut w = sink(g)?;
    writeln!(w, "u0,u1,gamma,eps,kind,certificate,cert_time,energy,K,margin,d_ref")?;
    writeln!(
        w,
        "{},{},{},{:e},{},{},{:.6},{:.16e},{:.16e},{:.6e},{:.16e}",
        d.u0,
        d.u1,
        gamma,
        ex.perturbation_norm,
        ex.fate.kind,
        ex.fate.certificate,
        ex.fate.cert_time,
        ex.fate.energy,
        ex.fate.k,
        ex.margin,
        opts.d_ref
    )?;
    w.flush()?;
    Ok(())
}
