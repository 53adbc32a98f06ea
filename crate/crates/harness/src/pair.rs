//! Matched-pair simulations and the difference norms between them.
//!
//! Both trajectories of a pair are advanced on the same time levels and the
//! difference is formed from the two primal states at each level.

use crate::config::{Point, SweepConfig, SweepMode};
use crate::error::Result;
use hydrostat_core::fields::barotropic_split;
use hydrostat_core::initial::generate_initial_data;
use hydrostat_core::norms::{NormAccumulator, NormKind};
use hydrostat_core::solvers::{Ns2dStepper, NsStepper, PeStepper, SimConfig, Stepper, StokesStepper};
use hydrostat_core::{Error, Grid, Parity, SpectralField, State64, System, VelocityState};
use std::time::Instant;

type F = SpectralField<f64>;

/// Norm names reported by `eps_delta_to_zero` and `gamma_scan` points.
pub const LIMIT_NORMS: [&str; 4] = ["EH", "EHdelta", "Ez", "total"];
/// Norm names reported by `delta_to_infty` points.
pub const SPLIT_NORMS: [&str; 4] = ["E1_barotropic", "L4H32_baroclinic", "L4H32_stokes", "total"];

/// Norm that carries the rate claim in every mode.
pub const HEADLINE_NORM: &str = "total";

pub fn norm_names(mode: SweepMode) -> &'static [&'static str] {
    match mode {
        SweepMode::DeltaToInfty => &SPLIT_NORMS,
        _ => &LIMIT_NORMS,
    }
}

/// Finalized norms of one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: Point,
    /// `(norm_name, value)`; NaN when fewer than two samples were taken.
    pub norms: Vec<(String, f64)>,
    pub blowup: bool,
    /// Time at which the run stopped.
    pub t_reached: f64,
    pub wall_ms: u64,
}

impl PointResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.norms.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Runs the pair of simulations belonging to `point`.
pub fn run_matched_pair(point: Point, cfg: &SweepConfig) -> Result<PointResult> {
    let mut sim = cfg.sim.clone();
    sim.eps = point.eps;
    sim.delta = point.delta;
    sim.gamma = point.gamma;
    sim.validate()?;
    let start = Instant::now();
    let grid = Grid::new(sim.nx, sim.ny, sim.nz)?;
    let u0 = generate_initial_data(sim.recipe, sim.seed, &grid)?;
    let mut r = match cfg.mode {
        SweepMode::EpsDeltaToZero | SweepMode::GammaScan => {
            let mut ns = NsStepper::ns(&u0, sim.eps, sim.delta)?;
            let mut pe = PeStepper::pe(&u0, 0.0)?;
            limit_pair(&mut ns, &mut pe, &sim)?
        }
        SweepMode::DeltaToInfty => split_pair(&u0, &sim)?,
    };
    r.point = point;
    r.wall_ms = start.elapsed().as_millis() as u64;
    Ok(r)
}

fn finalize(acc: &NormAccumulator<f64>) -> f64 {
    acc.finalize().unwrap_or(f64::NAN)
}

/// Advances all steppers by `dt`; a blowup in any of them stops the pair.
fn step_all(steppers: &mut [&mut dyn Stepper<f64>], dt: f64) -> Result<bool> {
    for s in steppers.iter_mut() {
        match s.step(dt) {
            Ok(()) => {}
            Err(Error::Blowup { .. }) => return Ok(false),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(true)
}

/// `(V, W) = (v_a − v_b, eps (w_a − w_b))` and its time derivative.
fn scaled_difference(a: &State64, b: &State64, eps: f64) -> Result<[F; 3]> {
    Ok([a.v1.sub(&b.v1)?, a.v2.sub(&b.v2)?, a.w.sub(&b.w)?.scale(eps)])
}

/// Difference norms `‖(V, W)‖` of two trajectories with `W` scaled by `sim.eps`:
/// `EH`, `EHdelta(sim.delta)`, `Ez` and `total = EHdelta + Ez`.
pub fn limit_pair(a: &mut dyn Stepper<f64>, b: &mut dyn Stepper<f64>, sim: &SimConfig<f64>) -> Result<PointResult> {
    let mut accs = [NormKind::EH, NormKind::EHdelta(sim.delta), NormKind::Ez].map(NormAccumulator::new);
    let levels = sim.time_levels();
    let mut blowup = false;
    for (n, &t) in levels.iter().enumerate() {
        if n > 0 && !step_all(&mut [&mut *a, &mut *b], t - levels[n - 1])? {
            blowup = true;
            break;
        }
        let d = scaled_difference(&a.state(), &b.state(), sim.eps)?;
        let dd = scaled_difference(&a.time_derivative(), &b.time_derivative(), sim.eps)?;
        let (u, du) = ([&d[0], &d[1], &d[2]], [&dd[0], &dd[1], &dd[2]]);
        for acc in &mut accs {
            acc.accumulate_fields(a.time(), &u, Some(&du))?;
        }
    }
    let [eh, ehd, ez] = accs.each_ref().map(finalize);
    Ok(PointResult {
        point: Point { eps: sim.eps, delta: sim.delta, gamma: sim.gamma },
        norms: vec![("EH".into(), eh), ("EHdelta".into(), ehd), ("Ez".into(), ez), ("total".into(), ehd + ez)],
        blowup,
        t_reached: a.time(),
        wall_ms: 0,
    })
}

/// Barotropic part of `u` as a 2D state.
pub fn barotropic_state(u: &State64) -> Result<State64> {
    let s = barotropic_split(u);
    let h = s.vbar1.grid().clone();
    Ok(VelocityState::new(s.vbar1, s.vbar2, F::zeros(h, Parity::Odd), System::Ns2d, u.time)?)
}

/// Baroclinic part of `u` as a Stokes state.
pub fn baroclinic_state(u: &State64) -> Result<State64> {
    let s = barotropic_split(u);
    Ok(VelocityState::new(s.vtilde1, s.vtilde2, s.w, System::StokesScaled, u.time)?)
}

/// Runs the rescaled Navier-Stokes equations against the 2D Navier-Stokes
/// flow of the initial vertical average and the exact Stokes flow of the
/// initial baroclinic part.
fn split_pair(u0: &State64, sim: &SimConfig<f64>) -> Result<PointResult> {
    let mut ns = NsStepper::ns(u0, sim.eps, sim.delta)?;
    let mut two = Ns2dStepper::ns2d(&barotropic_state(u0)?)?;
    let mut stokes = StokesStepper::new(&baroclinic_state(u0)?, sim.delta)?;
    let mut e1 = NormAccumulator::new(NormKind::E1);
    let mut tilde = NormAccumulator::new(NormKind::L4H32);
    let mut stokes_acc = NormAccumulator::new(NormKind::L4H32);
    let levels = sim.time_levels();
    let mut blowup = false;
    for (n, &t) in levels.iter().enumerate() {
        if n > 0 && !step_all(&mut [&mut ns, &mut two, &mut stokes], t - levels[n - 1])? {
            blowup = true;
            break;
        }
        let (u, du) = (ns.state(), ns.time_derivative());
        let (b, db) = (two.state(), two.time_derivative());
        let diff = [u.v1.vertical_average().sub(&b.v1)?, u.v2.vertical_average().sub(&b.v2)?];
        let ddiff = [du.v1.vertical_average().sub(&db.v1)?, du.v2.vertical_average().sub(&db.v2)?];
        e1.accumulate_fields(t, &[&diff[0], &diff[1]], Some(&[&ddiff[0], &ddiff[1]]))?;
        let split = barotropic_split(&u);
        tilde.accumulate_fields(t, &[&split.vtilde1, &split.vtilde2, &split.w], None)?;
        stokes_acc.accumulate(t, &stokes.state(), None)?;
    }
    let (a, b, c) = (finalize(&e1), finalize(&tilde), finalize(&stokes_acc));
    Ok(PointResult {
        point: Point { eps: sim.eps, delta: sim.delta, gamma: sim.gamma },
        norms: vec![
            ("E1_barotropic".into(), a),
            ("L4H32_baroclinic".into(), b),
            ("L4H32_stokes".into(), c),
            ("total".into(), a + b),
        ],
        blowup,
        t_reached: ns.time(),
        wall_ms: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hydrostat_core::initial::Recipe;

    fn small(mode: SweepMode, recipe: Recipe) -> SweepConfig {
        let sim = SimConfig { nx: 8, ny: 8, nz: 8, recipe, dt: 1e-3, t_final: 0.02, ..SimConfig::default() };
        SweepConfig::new(mode, sim)
    }

    #[test]
    fn self_difference_vanishes() {
        let cfg = small(SweepMode::EpsDeltaToZero, Recipe::BandlimitedRandom);
        let g = Grid::new(8, 8, 8).unwrap();
        let u0 = generate_initial_data(Recipe::BandlimitedRandom, 42, &g).unwrap();
        let mut a = NsStepper::ns(&u0, 0.1, 0.1).unwrap();
        let mut b = NsStepper::ns(&u0, 0.1, 0.1).unwrap();
        let r = limit_pair(&mut a, &mut b, &cfg.sim).unwrap();
        for (name, v) in &r.norms {
            assert!(*v < 1e-11, "{name} = {v}");
        }
    }

    #[test]
    fn zero_baroclinic_part() {
        let cfg = small(SweepMode::DeltaToInfty, Recipe::TaylorGreen2d);
        let r = run_matched_pair(Point { eps: 0.5, delta: 16.0, gamma: None }, &cfg).unwrap();
        assert!(!r.blowup);
        assert_eq!(r.value("L4H32_baroclinic"), Some(0.0));
        assert!(r.value("E1_barotropic").unwrap() < 1e-10, "{r:?}");
    }

    #[test]
    fn rows_follow_mode() {
        let cfg = small(SweepMode::EpsDeltaToZero, Recipe::BandlimitedRandom);
        let r = run_matched_pair(Point { eps: 0.2, delta: 0.2, gamma: None }, &cfg).unwrap();
        let names: Vec<&str> = r.norms.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, LIMIT_NORMS);
        assert!(r.value("total").unwrap() > 0.0);
        assert!((r.t_reached - 0.02).abs() < 1e-15);
    }
}
