//! Time integration of the rescaled Navier-Stokes equations, the primitive
//! equations (with full or horizontal viscosity), the 2D Navier-Stokes
//! equations and the scaled average-free Stokes system.
//!
//! The first three share one IMEX scheme: Crank-Nicolson on the diagonal
//! viscous symbol `L(k) = −|k_H|² − δ kz²` and second-order Adams-Bashforth
//! (variable step, Euler on the first step) on the projected advection term.

use crate::error::{Error, Result};
use crate::fields::{
    project_hydrostatic_in_place, project_scaled_in_place, vertical_velocity_unchecked, Advector,
    System, VelocityState,
};
use crate::initial::{generate_initial_data, state_h1_norm, Recipe};
use crate::scalar::Real;
use crate::spectral::{Axis, Grid, Parity, SpectralField};
use num_complex::Complex;
use std::sync::Arc;

/// L2 size beyond which a trajectory is declared blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e8;

/// A spatially discretized system `∂t U = L U + P N(U)` with diagonal `L`.
pub trait Model<T: Real>: Send + Sync {
    fn grid(&self) -> &Arc<Grid<T>>;
    fn parities(&self) -> &'static [Parity];
    /// Vertical diffusion weight in `L(k) = −|k_H|² − δ kz²`.
    fn delta(&self) -> T;
    /// Dealiased, parity-enforced `N(U)` (not yet projected).
    fn nonlinear(&self, u: &[SpectralField<T>]) -> Vec<SpectralField<T>>;
    /// Pressure-eliminating projection, in place.
    fn project(&self, u: &mut [SpectralField<T>]);
    /// Prognostic variables of a velocity state.
    fn from_state(&self, state: &VelocityState<T>) -> Result<Vec<SpectralField<T>>>;
    /// Velocity state (physical `v`, `w`) from prognostic variables.
    fn to_state(&self, u: &[SpectralField<T>], time: T) -> VelocityState<T>;
    /// Time derivative of the velocity state from that of the prognostic variables.
    fn to_state_rate(&self, u: &[SpectralField<T>], dudt: &[SpectralField<T>], time: T) -> VelocityState<T>;
    /// Largest transport speed, for the CFL diagnostic.
    fn max_speed(&self, u: &[SpectralField<T>]) -> T {
        u.iter().map(|f| f.to_physical().max_abs()).fold(T::zero(), T::max)
    }
}

fn negate_all<T: Real>(mut v: Vec<SpectralField<T>>, parities: &[Parity]) -> Vec<SpectralField<T>> {
    for (f, p) in v.iter_mut().zip(parities) {
        f.scale_in_place(-T::one());
        f.project_parity_in_place(*p);
    }
    v
}

/// Rescaled Navier-Stokes in the variables `U = (v, eps w)` with `P_ε`.
#[derive(Debug, Clone)]
pub struct NsModel<T: Real> {
    grid: Arc<Grid<T>>,
    eps: T,
    delta: T,
}

impl<T: Real> NsModel<T> {
    pub fn new(grid: Arc<Grid<T>>, eps: T, delta: T) -> Result<Self> {
        check_eps_delta(eps, delta)?;
        Ok(NsModel { grid, eps, delta })
    }
    pub fn eps(&self) -> T {
        self.eps
    }
}

fn check_eps_delta<T: Real>(eps: T, delta: T) -> Result<()> {
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be > 0")));
    }
    if !(delta >= T::zero()) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be >= 0")));
    }
    Ok(())
}

const EVEN_EVEN_ODD: [Parity; 3] = [Parity::Even, Parity::Even, Parity::Odd];
const EVEN_EVEN: [Parity; 2] = [Parity::Even, Parity::Even];

impl<T: Real> Model<T> for NsModel<T> {
    fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }
    fn parities(&self) -> &'static [Parity] {
        &EVEN_EVEN_ODD
    }
    fn delta(&self) -> T {
        self.delta
    }
    fn nonlinear(&self, u: &[SpectralField<T>]) -> Vec<SpectralField<T>> {
        let w = u[2].scale(T::one() / self.eps);
        let adv = Advector::new(&u[0], &u[1], Some(&w));
        negate_all(u.iter().map(|f| adv.advect(f)).collect(), self.parities())
    }
    fn project(&self, u: &mut [SpectralField<T>]) {
        let [a, b, c] = u else { panic!("NS state has three components") };
        project_scaled_in_place(a, b, c, self.eps).expect("eps validated at construction");
    }
    fn from_state(&self, s: &VelocityState<T>) -> Result<Vec<SpectralField<T>>> {
        check_grid(&self.grid, s)?;
        let mut u = vec![s.v1.clone(), s.v2.clone(), s.w.scale(self.eps)];
        for (f, p) in u.iter_mut().zip(self.parities()) {
            f.project_parity_in_place(*p);
        }
        self.project(&mut u);
        Ok(u)
    }
    fn to_state(&self, u: &[SpectralField<T>], time: T) -> VelocityState<T> {
        VelocityState {
            v1: u[0].clone(),
            v2: u[1].clone(),
            w: u[2].scale(T::one() / self.eps),
            system: System::NsEpsDelta,
            time,
        }
    }
    fn to_state_rate(&self, _u: &[SpectralField<T>], dudt: &[SpectralField<T>], time: T) -> VelocityState<T> {
        self.to_state(dudt, time)
    }
    fn max_speed(&self, u: &[SpectralField<T>]) -> T {
        let w = u[2].scale(T::one() / self.eps);
        [&u[0], &u[1], &w].iter().map(|f| f.to_physical().max_abs()).fold(T::zero(), T::max)
    }
}

fn check_grid<T: Real>(grid: &Arc<Grid<T>>, s: &VelocityState<T>) -> Result<()> {
    if grid.same_shape(s.grid()) {
        Ok(())
    } else {
        Err(Error::Shape(format!("state on {:?}, model on {:?}", s.grid(), grid)))
    }
}

/// Primitive equations: prognostic `v`, diagnostic `w = w(v)`, hydrostatic
/// projection. `delta = 0` gives horizontal viscosity only.
#[derive(Debug, Clone)]
pub struct PeModel<T: Real> {
    grid: Arc<Grid<T>>,
    delta: T,
}

impl<T: Real> PeModel<T> {
    pub fn new(grid: Arc<Grid<T>>, delta: T) -> Result<Self> {
        check_eps_delta(T::one(), delta)?;
        Ok(PeModel { grid, delta })
    }
}

impl<T: Real> Model<T> for PeModel<T> {
    fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }
    fn parities(&self) -> &'static [Parity] {
        &EVEN_EVEN
    }
    fn delta(&self) -> T {
        self.delta
    }
    fn nonlinear(&self, u: &[SpectralField<T>]) -> Vec<SpectralField<T>> {
        let w = vertical_velocity_unchecked(&u[0], &u[1]);
        let adv = Advector::new(&u[0], &u[1], Some(&w));
        negate_all(u.iter().map(|f| adv.advect(f)).collect(), self.parities())
    }
    fn project(&self, u: &mut [SpectralField<T>]) {
        let [a, b] = u else { panic!("PE state has two components") };
        project_hydrostatic_in_place(a, b);
    }
    fn from_state(&self, s: &VelocityState<T>) -> Result<Vec<SpectralField<T>>> {
        check_grid(&self.grid, s)?;
        let defect = crate::fields::compatibility_defect(&s.v1, &s.v2);
        if !(defect <= crate::fields::compatibility_tol::<T>()) {
            return Err(Error::Compatibility {
                what: "div_H of the vertical average of v".into(),
                defect: defect.to_f64_lossy(),
            });
        }
        let mut u = vec![s.v1.project_parity(Parity::Even), s.v2.project_parity(Parity::Even)];
        self.project(&mut u);
        Ok(u)
    }
    fn to_state(&self, u: &[SpectralField<T>], time: T) -> VelocityState<T> {
        let system = if self.delta == T::zero() { System::PeH } else { System::PeDelta };
        VelocityState {
            w: vertical_velocity_unchecked(&u[0], &u[1]),
            v1: u[0].clone(),
            v2: u[1].clone(),
            system,
            time,
        }
    }
    fn to_state_rate(&self, u: &[SpectralField<T>], dudt: &[SpectralField<T>], time: T) -> VelocityState<T> {
        let _ = u;
        self.to_state(dudt, time)
    }
}

/// Two-dimensional Navier-Stokes on the horizontal grid with Leray projection.
#[derive(Debug, Clone)]
pub struct Ns2dModel<T: Real> {
    grid: Arc<Grid<T>>,
}

impl<T: Real> Ns2dModel<T> {
    pub fn new(grid: Arc<Grid<T>>) -> Result<Self> {
        if !grid.is_horizontal() {
            return Err(Error::InvalidGrid(format!("{grid:?} is not a horizontal grid")));
        }
        Ok(Ns2dModel { grid })
    }
}

impl<T: Real> Model<T> for Ns2dModel<T> {
    fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }
    fn parities(&self) -> &'static [Parity] {
        &EVEN_EVEN
    }
    fn delta(&self) -> T {
        T::zero()
    }
    fn nonlinear(&self, u: &[SpectralField<T>]) -> Vec<SpectralField<T>> {
        let adv = Advector::new(&u[0], &u[1], None);
        negate_all(u.iter().map(|f| adv.advect(f)).collect(), self.parities())
    }
    fn project(&self, u: &mut [SpectralField<T>]) {
        let [a, b] = u else { panic!("2D state has two components") };
        project_hydrostatic_in_place(a, b);
    }
    fn from_state(&self, s: &VelocityState<T>) -> Result<Vec<SpectralField<T>>> {
        check_grid(&self.grid, s)?;
        let mut u = vec![s.v1.clone(), s.v2.clone()];
        self.project(&mut u);
        Ok(u)
    }
    fn to_state(&self, u: &[SpectralField<T>], time: T) -> VelocityState<T> {
        VelocityState {
            v1: u[0].clone(),
            v2: u[1].clone(),
            w: SpectralField::zeros(self.grid.clone(), Parity::Odd),
            system: System::Ns2d,
            time,
        }
    }
    fn to_state_rate(&self, _u: &[SpectralField<T>], dudt: &[SpectralField<T>], time: T) -> VelocityState<T> {
        self.to_state(dudt, time)
    }
}

/// Common interface of all time steppers.
pub trait Stepper<T: Real>: Send {
    /// Current velocity state (physical `v`, `w`).
    fn state(&self) -> VelocityState<T>;
    fn time(&self) -> T;
    /// Advances by `dt`. On blowup the state is left at the last good step.
    fn step(&mut self, dt: T) -> Result<()>;
    /// Semi-discrete right-hand side at the current state.
    fn time_derivative(&self) -> VelocityState<T>;
    fn steps_taken(&self) -> usize;
}

/// Crank-Nicolson / Adams-Bashforth stepper for a [`Model`].
#[derive(Debug, Clone)]
pub struct ImexStepper<T: Real, M: Model<T>> {
    model: M,
    u: Vec<SpectralField<T>>,
    time: T,
    /// `P N(Uⁿ)`.
    n_curr: Vec<SpectralField<T>>,
    /// `P N(Uⁿ⁻¹)` and the step that led from it.
    n_prev: Option<(Vec<SpectralField<T>>, T)>,
    last_forcing: Option<Vec<SpectralField<T>>>,
    steps: usize,
    cfl_warned: bool,
}

pub type NsStepper<T> = ImexStepper<T, NsModel<T>>;
pub type PeStepper<T> = ImexStepper<T, PeModel<T>>;
pub type Ns2dStepper<T> = ImexStepper<T, Ns2dModel<T>>;

impl<T: Real> NsStepper<T> {
    /// Rescaled Navier-Stokes stepper from a physical state `(v, w)`.
    pub fn ns(state: &VelocityState<T>, eps: T, delta: T) -> Result<Self> {
        ImexStepper::new(NsModel::new(state.grid().clone(), eps, delta)?, state)
    }
}

impl<T: Real> PeStepper<T> {
    /// Primitive-equation stepper; `w` of the input is ignored.
    pub fn pe(state: &VelocityState<T>, delta: T) -> Result<Self> {
        ImexStepper::new(PeModel::new(state.grid().clone(), delta)?, state)
    }
}

impl<T: Real> Ns2dStepper<T> {
    pub fn ns2d(state: &VelocityState<T>) -> Result<Self> {
        ImexStepper::new(Ns2dModel::new(state.grid().clone())?, state)
    }
}

fn projected<T: Real, M: Model<T>>(model: &M, mut n: Vec<SpectralField<T>>) -> Vec<SpectralField<T>> {
    model.project(&mut n);
    n
}

fn is_blown_up<T: Real>(u: &[SpectralField<T>]) -> bool {
    let mut sq = T::zero();
    for f in u {
        if !f.is_finite() {
            return true;
        }
        sq = sq + f.l2_norm_sq();
    }
    !(sq.sqrt() <= T::lit(BLOWUP_THRESHOLD))
}

impl<T: Real, M: Model<T>> ImexStepper<T, M> {
    pub fn new(model: M, state: &VelocityState<T>) -> Result<Self> {
        let u = model.from_state(state)?;
        let n_curr = projected(&model, model.nonlinear(&u));
        Ok(ImexStepper {
            model,
            u,
            time: state.time,
            n_curr,
            n_prev: None,
            last_forcing: None,
            steps: 0,
            cfl_warned: false,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    /// Prognostic variables (for the rescaled system: `(v, eps w)`).
    pub fn prognostic(&self) -> &[SpectralField<T>] {
        &self.u
    }

    /// Projected explicit forcing `P N*` used in the last step.
    pub fn last_forcing(&self) -> Option<&[SpectralField<T>]> {
        self.last_forcing.as_deref()
    }

    /// `Σ ⟨P N(U), U⟩` at the current state; zero for an energy-neutral advection.
    pub fn nonlinear_pairing(&self) -> T {
        self.n_curr.iter().zip(&self.u).map(|(n, u)| n.dot(u)).sum()
    }

    /// Time derivative of the prognostic variables.
    pub fn prognostic_rate(&self) -> Vec<SpectralField<T>> {
        let delta = self.model.delta();
        self.u
            .iter()
            .zip(&self.n_curr)
            .map(|(u, n)| {
                let mut out = n.clone();
                let (uc, oc) = (u.coeffs(), out.coeffs_mut());
                u.grid().for_each_mode(|i, kx, ky, kz| {
                    oc[i] = oc[i] + uc[i] * (-(kx * kx + ky * ky) - delta * kz * kz);
                });
                out
            })
            .collect()
    }

    fn warn_cfl(&mut self, dt: T) {
        if self.cfl_warned {
            return;
        }
        let g = self.model.grid();
        let kmax = Axis::ALL
            .iter()
            .flat_map(|&a| g.wavenumbers(a).iter().copied())
            .fold(T::zero(), |m, k| m.max(k.abs()));
        let c = dt * self.model.max_speed(&self.u) * kmax;
        if c > T::lit(0.5) {
            log::warn!("CFL number {c} exceeds 0.5 at t = {}", self.time);
            self.cfl_warned = true;
        }
    }
}

impl<T: Real, M: Model<T>> Stepper<T> for ImexStepper<T, M> {
    fn state(&self) -> VelocityState<T> {
        self.model.to_state(&self.u, self.time)
    }

    fn time(&self) -> T {
        self.time
    }

    fn step(&mut self, dt: T) -> Result<()> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
        }
        self.warn_cfl(dt);
        let half = T::lit(0.5);
        let forcing: Vec<SpectralField<T>> = match &self.n_prev {
            None => self.n_curr.clone(),
            Some((prev, dt_prev)) => {
                let omega = dt / *dt_prev;
                self.n_curr
                    .iter()
                    .zip(prev)
                    .map(|(c, p)| {
                        let mut f = c.scale(T::one() + half * omega);
                        for (a, b) in f.coeffs_mut().iter_mut().zip(p.coeffs()) {
                            *a = *a - *b * (half * omega);
                        }
                        f
                    })
                    .collect()
            }
        };
        let delta = self.model.delta();
        let grid = self.model.grid().clone();
        let mut next = Vec::with_capacity(self.u.len());
        for (u, f) in self.u.iter().zip(&forcing) {
            let mut out = u.clone();
            let (uc, fc, oc) = (u.coeffs(), f.coeffs(), out.coeffs_mut());
            grid.for_each_mode(|i, kx, ky, kz| {
                let l = -(kx * kx + ky * ky) - delta * kz * kz;
                let h = half * dt * l;
                oc[i] = (uc[i] * (T::one() + h) + fc[i] * dt) / (T::one() - h);
            });
            next.push(out);
        }
        if is_blown_up(&next) {
            return Err(Error::Blowup { time: (self.time + dt).to_f64_lossy() });
        }
        let n_next = projected(&self.model, self.model.nonlinear(&next));
        if n_next.iter().any(|f| !f.is_finite()) {
            return Err(Error::Blowup { time: (self.time + dt).to_f64_lossy() });
        }
        self.u = next;
        let old = std::mem::replace(&mut self.n_curr, n_next);
        self.n_prev = Some((old, dt));
        self.last_forcing = Some(forcing);
        self.time = self.time + dt;
        self.steps += 1;
        Ok(())
    }

    fn time_derivative(&self) -> VelocityState<T> {
        let rate = self.prognostic_rate();
        self.model.to_state_rate(&self.u, &rate, self.time)
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }
}

/// Exact integrator of the scaled average-free Stokes system: every mode is
/// multiplied by `exp((−|k_H|² − δ kz²) dt)`.
#[derive(Debug, Clone)]
pub struct StokesStepper<T: Real> {
    state: VelocityState<T>,
    delta: T,
    steps: usize,
}

impl<T: Real> StokesStepper<T> {
    /// Requires zero vertical mean of `v` and `div u = 0`.
    pub fn new(state: &VelocityState<T>, delta: T) -> Result<Self> {
        check_eps_delta(T::one(), delta)?;
        let mean = state.v1.vertical_average().l2_norm().max(state.v2.vertical_average().l2_norm());
        if !(mean <= crate::fields::compatibility_tol::<T>()) {
            return Err(Error::Compatibility {
                what: "vertical mean of the Stokes data".into(),
                defect: mean.to_f64_lossy(),
            });
        }
        let div = state.divergence().l2_norm();
        if !(div <= crate::fields::compatibility_tol::<T>()) {
            return Err(Error::Compatibility { what: "divergence of the Stokes data".into(), defect: div.to_f64_lossy() });
        }
        let mut state = state.clone();
        state.system = System::StokesScaled;
        Ok(StokesStepper { state, delta, steps: 0 })
    }

    fn symbol(&self) -> impl Fn(T, T, T) -> T {
        let delta = self.delta;
        move |kx, ky, kz| -(kx * kx + ky * ky) - delta * kz * kz
    }
}

impl<T: Real> Stepper<T> for StokesStepper<T> {
    fn state(&self) -> VelocityState<T> {
        self.state.clone()
    }
    fn time(&self) -> T {
        self.state.time
    }
    fn step(&mut self, dt: T) -> Result<()> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
        }
        let l = self.symbol();
        let m = |kx, ky, kz| Complex::new((l(kx, ky, kz) * dt).exp(), T::zero());
        self.state.v1.apply_multiplier(m);
        self.state.v2.apply_multiplier(m);
        self.state.w.apply_multiplier(m);
        self.state.time = self.state.time + dt;
        self.steps += 1;
        Ok(())
    }
    fn time_derivative(&self) -> VelocityState<T> {
        let l = self.symbol();
        let m = |kx, ky, kz| Complex::new(l(kx, ky, kz), T::zero());
        let s = &self.state;
        VelocityState {
            v1: s.v1.map_multiplier(m),
            v2: s.v2.map_multiplier(m),
            w: s.w.map_multiplier(m),
            system: s.system,
            time: s.time,
        }
    }
    fn steps_taken(&self) -> usize {
        self.steps
    }
}

/// Simulation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub system: System,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub eps: T,
    pub delta: T,
    /// When set, `delta = eps^(gamma − 2)`.
    pub gamma: Option<T>,
    pub dt: T,
    pub t_final: T,
    pub recipe: Recipe,
    pub seed: u64,
    pub record_every: usize,
    /// Optional first step of a geometric ramp up to `dt`.
    pub dt_initial: Option<T>,
    /// Growth factor of the ramp.
    pub dt_growth: T,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        SimConfig {
            system: System::NsEpsDelta,
            nx: 32,
            ny: 32,
            nz: 32,
            eps: T::lit(0.1),
            delta: T::lit(0.1),
            gamma: None,
            dt: T::lit(1e-3),
            t_final: T::lit(0.25),
            recipe: Recipe::BandlimitedRandom,
            seed: 42,
            record_every: 1,
            dt_initial: None,
            dt_growth: T::lit(1.05),
        }
    }
}

impl<T: Real> SimConfig<T> {
    /// Sets `gamma` and the derived `delta = eps^(gamma − 2)`.
    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = Some(gamma);
        self.delta = self.eps.powf(gamma - T::lit(2.0));
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.dt > T::zero()) || !(self.t_final > T::zero()) {
            return bad(format!("dt = {} and T = {} must be > 0", self.dt, self.t_final));
        }
        if self.dt > self.t_final {
            return bad(format!("dt = {} exceeds T = {}", self.dt, self.t_final));
        }
        if self.record_every == 0 {
            return bad("record_every must be >= 1".into());
        }
        check_eps_delta(self.eps, self.delta)?;
        if let Some(g) = self.gamma {
            if !(g > T::zero()) {
                return bad(format!("gamma = {g} must be > 0"));
            }
            let want = self.eps.powf(g - T::lit(2.0));
            if (self.delta - want).abs() > T::lit(1e-12) * want.abs().max(T::one()) {
                return bad(format!("delta = {} inconsistent with eps^(gamma-2) = {want}", self.delta));
            }
        }
        if let Some(h) = self.dt_initial {
            if !(h > T::zero()) || h > self.dt {
                return bad(format!("dt_initial = {h} must lie in (0, dt]"));
            }
            if !(self.dt_growth > T::one()) {
                return bad(format!("dt_growth = {} must be > 1", self.dt_growth));
            }
        }
        Ok(())
    }

    /// Time levels `0 = t_0 < … < t_N = T`.
    pub fn time_levels(&self) -> Vec<T> {
        time_levels(self.dt, self.t_final, self.dt_initial, self.dt_growth)
    }
}

/// Time levels of a uniform grid with step `dt`, optionally preceded by a
/// geometric ramp `h, h g, h g², …` that stops once it reaches `dt`.
pub fn time_levels<T: Real>(dt: T, t_final: T, dt_initial: Option<T>, growth: T) -> Vec<T> {
    let slack = T::lit(1e-9) * dt;
    let mut levels = vec![T::zero()];
    let mut t = T::zero();
    if let Some(mut h) = dt_initial {
        while h < dt && t + h < t_final - slack {
            t = t + h;
            levels.push(t);
            h = h * growth;
        }
    }
    let start = t;
    let mut j = 1usize;
    loop {
        let next = start + dt * T::from_usize_lossy(j);
        if next >= t_final - slack {
            levels.push(t_final);
            break;
        }
        levels.push(next);
        j += 1;
    }
    levels
}

/// One recorded sample of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample<T> {
    pub time: T,
    pub l2: T,
    pub h1: T,
}

/// Output of [`run_simulation`].
#[derive(Debug, Clone)]
pub struct TrajectoryRecord<T: Real> {
    pub samples: Vec<NormSample<T>>,
    pub final_state: VelocityState<T>,
    pub blowup: Option<T>,
}

impl<T: Real> TrajectoryRecord<T> {
    pub fn blowup_flag(&self) -> bool {
        self.blowup.is_some()
    }
    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.time).collect()
    }
}

/// Grid on which `cfg.system` runs.
pub fn grid_for<T: Real>(cfg: &SimConfig<T>) -> Result<Arc<Grid<T>>> {
    match cfg.system {
        System::Ns2d => Grid::horizontal_grid(cfg.nx, cfg.ny),
        _ => Grid::new(cfg.nx, cfg.ny, cfg.nz),
    }
}

/// Builds the stepper for `cfg.system` from an initial state.
pub fn make_stepper<T: Real>(cfg: &SimConfig<T>, state: &VelocityState<T>) -> Result<Box<dyn Stepper<T>>> {
    Ok(match cfg.system {
        System::NsEpsDelta => Box::new(NsStepper::ns(state, cfg.eps, cfg.delta)?),
        System::PeDelta => Box::new(PeStepper::pe(state, cfg.delta)?),
        System::PeH => Box::new(PeStepper::pe(state, T::zero())?),
        System::Ns2d => Box::new(Ns2dStepper::ns2d(state)?),
        System::StokesScaled => Box::new(StokesStepper::new(state, cfg.delta)?),
        System::Difference => {
            return Err(Error::InvalidParameter("the difference system is not evolved".into()))
        }
    })
}

/// Initial state for `cfg`; for the Stokes system the vertical mean is removed.
pub fn initial_state<T: Real>(cfg: &SimConfig<T>) -> Result<VelocityState<T>> {
    let grid = grid_for(cfg)?;
    let mut u = generate_initial_data(cfg.recipe, cfg.seed, &grid)?;
    if cfg.system == System::StokesScaled {
        u.v1 = u.v1.remove_vertical_mean();
        u.v2 = u.v2.remove_vertical_mean();
    }
    u.system = cfg.system;
    Ok(u)
}

/// Integrates `cfg.system` from its recipe data to `cfg.t_final`.
pub fn run_simulation<T: Real>(cfg: &SimConfig<T>) -> Result<TrajectoryRecord<T>> {
    cfg.validate()?;
    let u0 = initial_state(cfg)?;
    run_from(cfg, &u0)
}

/// Integrates from a given initial state.
pub fn run_from<T: Real>(cfg: &SimConfig<T>, u0: &VelocityState<T>) -> Result<TrajectoryRecord<T>> {
    cfg.validate()?;
    let mut stepper = make_stepper(cfg, u0)?;
    let sample = |s: &VelocityState<T>| NormSample { time: s.time, l2: s.l2_norm(), h1: state_h1_norm(s) };
    let mut samples = vec![sample(&stepper.state())];
    let levels = cfg.time_levels();
    let mut blowup = None;
    for (n, pair) in levels.windows(2).enumerate() {
        match stepper.step(pair[1] - pair[0]) {
            Ok(()) => {}
            Err(Error::Blowup { time }) => {
                blowup = Some(T::lit(time));
                break;
            }
            Err(e) => return Err(e),
        }
        if (n + 1) % cfg.record_every == 0 || n + 2 == levels.len() {
            samples.push(sample(&stepper.state()));
        }
    }
    Ok(TrajectoryRecord { samples, final_state: stepper.state(), blowup })
}

/// One step of the rescaled Navier-Stokes equations from `state`.
pub fn step_ns_eps_delta<T: Real>(state: &VelocityState<T>, cfg: &SimConfig<T>) -> Result<VelocityState<T>> {
    let mut s = NsStepper::ns(state, cfg.eps, cfg.delta)?;
    s.step(cfg.dt)?;
    Ok(s.state())
}

/// One step of the primitive equations (`cfg.delta = 0` for horizontal viscosity).
pub fn step_pe<T: Real>(state: &VelocityState<T>, cfg: &SimConfig<T>) -> Result<VelocityState<T>> {
    let mut s = PeStepper::pe(state, cfg.delta)?;
    s.step(cfg.dt)?;
    Ok(s.state())
}

/// One step of the 2D Navier-Stokes equations.
pub fn step_ns2d<T: Real>(state: &VelocityState<T>, cfg: &SimConfig<T>) -> Result<VelocityState<T>> {
    let mut s = Ns2dStepper::ns2d(state)?;
    s.step(cfg.dt)?;
    Ok(s.state())
}

/// One exact step of the scaled Stokes system.
pub fn step_stokes_scaled<T: Real>(state: &VelocityState<T>, cfg: &SimConfig<T>) -> Result<VelocityState<T>> {
    let mut s = StokesStepper::new(state, cfg.delta)?;
    s.step(cfg.dt)?;
    Ok(s.state())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_levels_hit_t_final() {
        let l = time_levels(1e-3, 0.25, None, 1.05);
        assert_eq!(l.len(), 251);
        assert_eq!(*l.last().unwrap(), 0.25);
        let l = time_levels(0.3, 1.0, None, 1.05);
        assert_eq!(l, vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
    }

    #[test]
    fn ramped_levels_are_increasing() {
        let l: Vec<f64> = time_levels(1e-3, 0.25, Some(1e-6), 1.1);
        assert!(l.windows(2).all(|w| w[1] > w[0]));
        assert!(l.windows(2).all(|w| w[1] - w[0] <= 1e-3 + 1e-15));
        assert!((l[1] - 1e-6).abs() < 1e-18);
        assert_eq!(*l.last().unwrap(), 0.25);
    }

    #[test]
    fn config_validation() {
        let c = SimConfig::<f64>::default();
        c.validate().unwrap();
        assert!(SimConfig { dt: 1.0, ..c.clone() }.validate().is_err());
        assert!(SimConfig { eps: 0.0, ..c.clone() }.validate().is_err());
        assert!(SimConfig { gamma: Some(4.0), ..c.clone() }.validate().is_err());
        let g = c.clone().with_gamma(4.0);
        assert!((g.delta - 0.01).abs() < 1e-15);
        g.validate().unwrap();
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let z = VelocityState::zeros(g, System::NsEpsDelta);
        let cfg = SimConfig { eps: 0.5, delta: 1.0, ..SimConfig::default() };
        let s = step_ns_eps_delta(&z, &cfg).unwrap();
        assert_eq!(s.l2_norm(), 0.0);
    }

    #[test]
    fn stokes_rejects_mean() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let u = generate_initial_data(Recipe::TaylorGreen2d, 0, &g).unwrap();
        assert!(matches!(StokesStepper::new(&u, 1.0), Err(Error::Compatibility { .. })));
    }
}
