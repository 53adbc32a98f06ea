//! Velocity states, solenoidal projections, vertical-velocity recovery,
//! barotropic/baroclinic splitting and the difference-equation forcings.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{Axis, Grid, Parity, SpectralField};
use num_complex::Complex;
use std::sync::Arc;

/// Defect above which a compatibility precondition is rejected (double precision).
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// [`COMPATIBILITY_TOL`], raised to `100 ε` for scalars coarser than `f64`.
pub fn compatibility_tol<T: Real>() -> T {
    T::lit(COMPATIBILITY_TOL).max(T::epsilon() * T::lit(100.0))
}

/// Equation family a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    /// Rescaled anisotropic Navier-Stokes equations.
    NsEpsDelta,
    /// Primitive equations with full anisotropic viscosity.
    PeDelta,
    /// Primitive equations with horizontal viscosity only.
    PeH,
    /// Two-dimensional Navier-Stokes equations on the cross section.
    Ns2d,
    /// Scaled, vertically average-free Stokes system.
    StokesScaled,
    /// Difference of two primal trajectories.
    Difference,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::NsEpsDelta => "ns_eps_delta",
            System::PeDelta => "pe_delta",
            System::PeH => "pe_h",
            System::Ns2d => "ns2d",
            System::StokesScaled => "stokes_scaled",
            System::Difference => "difference",
        }
    }

    pub fn parse(s: &str) -> Option<System> {
        let s = s.trim().to_ascii_lowercase();
        Some(match s.as_str() {
            "ns_eps_delta" | "ns" => System::NsEpsDelta,
            "pe_delta" => System::PeDelta,
            "pe_h" => System::PeH,
            "ns2d" => System::Ns2d,
            "stokes_scaled" | "stokes" => System::StokesScaled,
            "difference" => System::Difference,
            _ => return None,
        })
    }
}

/// Horizontal velocity `(v1, v2)` (even in z) and vertical velocity `w` (odd in z).
///
/// For the rescaled Navier-Stokes system the solver works with `(v, eps w)`,
/// but a `VelocityState` always stores the physical `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityState<T: Real> {
    pub v1: SpectralField<T>,
    pub v2: SpectralField<T>,
    pub w: SpectralField<T>,
    pub system: System,
    pub time: T,
}

impl<T: Real> VelocityState<T> {
    pub fn new(
        v1: SpectralField<T>,
        v2: SpectralField<T>,
        w: SpectralField<T>,
        system: System,
        time: T,
    ) -> Result<Self> {
        let g = v1.grid();
        if !g.same_shape(v2.grid()) || !g.same_shape(w.grid()) {
            return Err(Error::Shape("velocity components on different grids".into()));
        }
        Ok(VelocityState { v1, v2, w, system, time })
    }

    pub fn zeros(grid: Arc<Grid<T>>, system: System) -> Self {
        VelocityState {
            v1: SpectralField::zeros(grid.clone(), Parity::Even),
            v2: SpectralField::zeros(grid.clone(), Parity::Even),
            w: SpectralField::zeros(grid, Parity::Odd),
            system,
            time: T::zero(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.v1.grid()
    }

    pub fn components(&self) -> [&SpectralField<T>; 3] {
        [&self.v1, &self.v2, &self.w]
    }

    /// Unscaled divergence `∂x v1 + ∂y v2 + ∂z w`.
    pub fn divergence(&self) -> SpectralField<T> {
        divergence3(&self.v1, &self.v2, &self.w, T::one())
    }

    /// `∂x v1 + ∂y v2 + (1/eps) ∂z w`.
    pub fn scaled_divergence(&self, eps: T) -> SpectralField<T> {
        divergence3(&self.v1, &self.v2, &self.w, T::one() / eps)
    }

    /// Horizontal divergence `∂x v1 + ∂y v2`.
    pub fn horizontal_divergence(&self) -> SpectralField<T> {
        divergence_h(&self.v1, &self.v2)
    }

    pub fn l2_norm_sq(&self) -> T {
        self.v1.l2_norm_sq() + self.v2.l2_norm_sq() + self.w.l2_norm_sq()
    }

    pub fn l2_norm(&self) -> T {
        self.l2_norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.v1.is_finite() && self.v2.is_finite() && self.w.is_finite()
    }

    /// Copy with `w` replaced by `s * w`.
    pub fn with_w_scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.w.scale_in_place(s);
        out
    }

    /// Component-wise `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        Ok(VelocityState {
            v1: self.v1.sub(&other.v1)?,
            v2: self.v2.sub(&other.v2)?,
            w: self.w.sub(&other.w)?,
            system: System::Difference,
            time: self.time,
        })
    }

    /// Largest deviation from the even/even/odd parity classes.
    pub fn parity_defect(&self) -> T {
        let mut d = T::zero();
        for (f, p) in [(&self.v1, Parity::Even), (&self.v2, Parity::Even), (&self.w, Parity::Odd)] {
            let mut g = f.clone();
            g.set_parity(p);
            d = d.max(g.parity_defect());
        }
        d
    }
}

fn divergence3<T: Real>(
    a: &SpectralField<T>,
    b: &SpectralField<T>,
    c: &SpectralField<T>,
    zscale: T,
) -> SpectralField<T> {
    let mut out = SpectralField::zeros(a.grid().clone(), Parity::Even);
    let (ac, bc, cc) = (a.coeffs(), b.coeffs(), c.coeffs());
    let oc = out.coeffs_mut();
    a.grid().for_each_gradient_mode(|i, kx, ky, kz| {
        let s = ac[i] * kx + bc[i] * ky + cc[i] * (kz * zscale);
        oc[i] = Complex::new(-s.im, s.re);
    });
    out
}

/// `∂x a + ∂y b`.
pub fn divergence_h<T: Real>(a: &SpectralField<T>, b: &SpectralField<T>) -> SpectralField<T> {
    let zero = SpectralField::zeros(a.grid().clone(), Parity::Odd);
    let mut d = divergence3(a, b, &zero, T::zero());
    d.set_parity(a.parity());
    d
}

/// Scaled Helmholtz projection of the triple `(u1, u2, u3)` in place:
/// `û ↦ û − k_ε (k_ε·û)/|k_ε|²` with `k_ε = (kx, ky, kz/eps)`.
pub fn project_scaled_in_place<T: Real>(
    u1: &mut SpectralField<T>,
    u2: &mut SpectralField<T>,
    u3: &mut SpectralField<T>,
    eps: T,
) -> Result<()> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be > 0")));
    }
    let grid = u1.grid().clone();
    let inv = T::one() / eps;
    let (a, b, c) = (u1.coeffs_mut(), u2.coeffs_mut(), u3.coeffs_mut());
    grid.for_each_gradient_mode(|i, kx, ky, kz| {
        let kze = kz * inv;
        let k2 = kx * kx + ky * ky + kze * kze;
        if k2 == T::zero() {
            return;
        }
        let s = (a[i] * kx + b[i] * ky + c[i] * kze) / k2;
        a[i] = a[i] - s * kx;
        b[i] = b[i] - s * ky;
        c[i] = c[i] - s * kze;
    });
    Ok(())
}

/// Scaled Helmholtz projection `P_ε` of a state whose third component holds
/// the scaled vertical velocity.
pub fn project_div_free_scaled<T: Real>(u: &VelocityState<T>, eps: T) -> Result<VelocityState<T>> {
    let mut out = u.clone();
    project_scaled_in_place(&mut out.v1, &mut out.v2, &mut out.w, eps)?;
    Ok(out)
}

/// Hydrostatic projection in place: removes `∇_H π` with
/// `−Δ_H π = −div_H f̄`, acting only on the vertically averaged plane.
pub fn project_hydrostatic_in_place<T: Real>(f1: &mut SpectralField<T>, f2: &mut SpectralField<T>) {
    let grid = f1.grid().clone();
    let nz = grid.nz();
    let (a, b) = (f1.coeffs_mut(), f2.coeffs_mut());
    grid.for_each_gradient_mode(|i, kx, ky, _| {
        if i % nz != 0 {
            return;
        }
        let k2 = kx * kx + ky * ky;
        if k2 == T::zero() {
            return;
        }
        let s = (a[i] * kx + b[i] * ky) / k2;
        a[i] = a[i] - s * kx;
        b[i] = b[i] - s * ky;
    });
}

/// Hydrostatic projection of a horizontal pair. On a horizontal grid this is
/// the two-dimensional Leray projection.
pub fn project_hydrostatic<T: Real>(
    f1: &SpectralField<T>,
    f2: &SpectralField<T>,
) -> (SpectralField<T>, SpectralField<T>) {
    let (mut a, mut b) = (f1.clone(), f2.clone());
    project_hydrostatic_in_place(&mut a, &mut b);
    (a, b)
}

/// L2(G) size of the part of `div_H v` that obstructs an odd antiderivative:
/// the vertically averaged plane and the vertical Nyquist plane.
pub fn compatibility_defect<T: Real>(v1: &SpectralField<T>, v2: &SpectralField<T>) -> T {
    let d = divergence_h(v1, v2);
    let grid = d.grid();
    let nz = grid.nz();
    let nyq = if nz > 1 { Some(nz / 2) } else { None };
    let sum: T = d
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(i, _)| i % nz == 0 || Some(i % nz) == nyq)
        .map(|(_, c)| c.norm_sqr())
        .sum();
    (sum * T::lit(crate::spectral::SECTION_AREA)).sqrt()
}

/// Vertical velocity `w = −∫_{−1}^z div_H v` without checking compatibility.
/// The averaged and Nyquist planes of the result are zero.
pub fn vertical_velocity_unchecked<T: Real>(
    v1: &SpectralField<T>,
    v2: &SpectralField<T>,
) -> SpectralField<T> {
    let grid = v1.grid().clone();
    let nz = grid.nz();
    let mut w = SpectralField::zeros(grid.clone(), Parity::Odd);
    if nz == 1 {
        return w;
    }
    let (a, b) = (v1.coeffs(), v2.coeffs());
    let wc = w.coeffs_mut();
    grid.for_each_gradient_mode(|i, kx, ky, kz| {
        let iz = i % nz;
        if iz == 0 || iz == nz / 2 {
            return;
        }
        // ∂z w = −D  ⇒  ŵ = −D̂/(i kz) = i D̂/kz, with D̂ = i (kx a + ky b).
        let s = a[i] * kx + b[i] * ky;
        wc[i] = -s / kz;
    });
    w
}

/// Vertical velocity recovered from the divergence-free condition.
pub fn vertical_velocity_from_v<T: Real>(
    v1: &SpectralField<T>,
    v2: &SpectralField<T>,
) -> Result<SpectralField<T>> {
    let defect = compatibility_defect(v1, v2);
    if !(defect <= compatibility_tol::<T>()) {
        return Err(Error::Compatibility {
            what: "div_H of the vertical average of v".into(),
            defect: defect.to_f64_lossy(),
        });
    }
    Ok(vertical_velocity_unchecked(v1, v2))
}

/// Barotropic (vertical mean) and baroclinic (mean-free) parts of a state.
#[derive(Clone, Debug)]
pub struct SplitState<T: Real> {
    /// Vertical average on the horizontal grid.
    pub vbar1: SpectralField<T>,
    pub vbar2: SpectralField<T>,
    /// Remainder on the full grid, zero vertical mean.
    pub vtilde1: SpectralField<T>,
    pub vtilde2: SpectralField<T>,
    pub w: SpectralField<T>,
}

impl<T: Real> SplitState<T> {
    /// Reassembles `v = v̄ + ṽ` on the full grid.
    pub fn reconstruct(&self) -> Result<(SpectralField<T>, SpectralField<T>)> {
        let grid = self.vtilde1.grid();
        Ok((
            self.vtilde1.add(&self.vbar1.lift_to(grid)?)?,
            self.vtilde2.add(&self.vbar2.lift_to(grid)?)?,
        ))
    }
}

/// Splits the horizontal velocity by the `kz = 0` coefficient plane.
pub fn barotropic_split<T: Real>(u: &VelocityState<T>) -> SplitState<T> {
    SplitState {
        vbar1: u.v1.vertical_average(),
        vbar2: u.v2.vertical_average(),
        vtilde1: u.v1.remove_vertical_mean(),
        vtilde2: u.v2.remove_vertical_mean(),
        w: u.w.clone(),
    }
}

/// Physical samples of an advecting velocity, reused for several products.
pub struct Advector<T: Real> {
    grid: Arc<Grid<T>>,
    u: [Option<Vec<T>>; 3],
}

impl<T: Real> Advector<T> {
    /// `u3 = None` (or a horizontal grid) drops the vertical transport term.
    pub fn new(
        u1: &SpectralField<T>,
        u2: &SpectralField<T>,
        u3: Option<&SpectralField<T>>,
    ) -> Self {
        let grid = u1.grid().clone();
        let phys = |f: &SpectralField<T>| Some(f.to_physical().into_values());
        let u3 = if grid.is_horizontal() { None } else { u3.and_then(phys) };
        Advector { u: [phys(u1), phys(u2), u3], grid }
    }

    /// Dealiased `u·∇f` (parity undeclared). Non-finite samples propagate.
    pub fn advect(&self, f: &SpectralField<T>) -> SpectralField<T> {
        let mut acc = vec![Complex::<T>::default(); self.grid.len()];
        for (axis, u) in Axis::ALL.iter().zip(&self.u) {
            let Some(u) = u else { continue };
            let d = f.derivative(*axis, 1).to_physical();
            for ((a, &ui), &di) in acc.iter_mut().zip(u).zip(d.values()) {
                a.re = a.re + ui * di;
            }
        }
        self.grid.forward_in_place(&mut acc);
        let mut out = SpectralField::from_coeffs(self.grid.clone(), acc, Parity::None)
            .expect("grid-sized buffer");
        out.dealias_in_place();
        out
    }
}

/// Dealiased pointwise product.
pub fn product<T: Real>(a: &SpectralField<T>, b: &SpectralField<T>) -> Result<SpectralField<T>> {
    if !a.grid().same_shape(b.grid()) {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.grid(), b.grid())));
    }
    let pa = a.to_physical();
    let pb = b.to_physical();
    let mut data: Vec<Complex<T>> = pa
        .values()
        .iter()
        .zip(pb.values())
        .map(|(&x, &y)| Complex::new(x * y, T::zero()))
        .collect();
    a.grid().forward_in_place(&mut data);
    let mut out = SpectralField::from_coeffs(a.grid().clone(), data, Parity::None)?;
    out.dealias_in_place();
    Ok(out)
}

/// Forcings of the difference system.
#[derive(Clone, Debug)]
pub struct DiffForcing<T: Real> {
    pub fh1: SpectralField<T>,
    pub fh2: SpectralField<T>,
    pub fz: SpectralField<T>,
}

fn check_same<T: Real>(fields: &[&SpectralField<T>]) -> Result<()> {
    let g = fields[0].grid();
    if fields.iter().all(|f| f.grid().same_shape(g)) {
        Ok(())
    } else {
        Err(Error::Shape("fields on different grids".into()))
    }
}

/// Right-hand sides of the difference system in advective form.
///
/// `limit = (v, w)` is the hydrostatic solution, `dwdt` its `∂t w`, and
/// `diff = (V, W)` with `W = eps (w_ns − w)`. The `1/eps` terms use
/// `(1/eps) W = −∫ div_H V`, so no division by `eps` occurs.
pub fn diff_rhs_f<T: Real>(
    limit: &VelocityState<T>,
    dwdt: &SpectralField<T>,
    diff: &VelocityState<T>,
    eps: T,
    delta: T,
) -> Result<DiffForcing<T>> {
    check_inputs(limit, dwdt, diff, eps, delta)?;
    let w_over_eps = vertical_velocity_unchecked(&diff.v1, &diff.v2);
    let u = Advector::new(&limit.v1, &limit.v2, Some(&limit.w));
    let big = Advector::new(&diff.v1, &diff.v2, Some(&w_over_eps));
    let eps_w = limit.w.scale(eps);

    let mut fh = [&limit.v1, &limit.v2].map(|_| SpectralField::zeros(limit.grid().clone(), Parity::Even));
    for (k, (v, vv)) in [(&limit.v1, &diff.v1), (&limit.v2, &diff.v2)].into_iter().enumerate() {
        let mut f = big.advect(v).add(&u.advect(vv))?.add(&big.advect(vv))?.scale(-T::one());
        f = f.axpy(delta, &v.derivative(Axis::Z, 2))?;
        f.project_parity_in_place(Parity::Even);
        fh[k] = f;
    }
    let [fh1, fh2] = fh;
    let mut fz = big
        .advect(&eps_w)
        .add(&u.advect(&diff.w))?
        .add(&big.advect(&diff.w))?
        .scale(-T::one());
    fz = fz.axpy(-eps, &w_forcing(limit, dwdt, &u, delta)?)?;
    fz.project_parity_in_place(Parity::Odd);
    Ok(DiffForcing { fh1, fh2, fz })
}

/// `∂t w + u·∇w − Δ_δ w` of the limit solution.
fn w_forcing<T: Real>(
    limit: &VelocityState<T>,
    dwdt: &SpectralField<T>,
    u: &Advector<T>,
    delta: T,
) -> Result<SpectralField<T>> {
    dwdt.add(&u.advect(&limit.w))?.sub(&limit.w.laplacian_delta(delta)?)
}

fn check_inputs<T: Real>(
    limit: &VelocityState<T>,
    dwdt: &SpectralField<T>,
    diff: &VelocityState<T>,
    eps: T,
    delta: T,
) -> Result<()> {
    check_same(&[&limit.v1, &limit.v2, &limit.w, dwdt, &diff.v1, &diff.v2, &diff.w])?;
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be > 0")));
    }
    if !(delta >= T::zero()) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be >= 0")));
    }
    Ok(())
}

/// Same forcings in divergence form, `div(a⊗b)_i = ∂_j(a_i b_j)`.
pub fn diff_rhs_f_divform<T: Real>(
    limit: &VelocityState<T>,
    dwdt: &SpectralField<T>,
    diff: &VelocityState<T>,
    eps: T,
    delta: T,
) -> Result<DiffForcing<T>> {
    check_inputs(limit, dwdt, diff, eps, delta)?;
    let w_over_eps = vertical_velocity_unchecked(&diff.v1, &diff.v2);
    let eps_w = limit.w.scale(eps);
    // a_i for the three tensor products, and the transporting b_j.
    let a1 = [&limit.v1, &limit.v2, &eps_w];
    let a2 = [&diff.v1, &diff.v2, &diff.w];
    let b_big = [&diff.v1, &diff.v2, &w_over_eps];
    let b_lim = [&limit.v1, &limit.v2, &limit.w];
    let div_tensor = |a: &SpectralField<T>, b: [&SpectralField<T>; 3]| -> Result<SpectralField<T>> {
        let mut acc = SpectralField::zeros(a.grid().clone(), Parity::None);
        for (axis, bj) in Axis::ALL.iter().zip(b) {
            acc = acc.add(&product(a, bj)?.derivative(*axis, 1))?;
        }
        Ok(acc)
    };
    let mut out = Vec::with_capacity(3);
    for i in 0..3 {
        let f = div_tensor(a1[i], b_big)?
            .add(&div_tensor(a2[i], b_lim)?)?
            .add(&div_tensor(a2[i], b_big)?)?
            .scale(-T::one());
        out.push(f);
    }
    let mut fz = out.pop().expect("three components");
    let mut fh2 = out.pop().expect("three components");
    let mut fh1 = out.pop().expect("three components");
    fh1 = fh1.axpy(delta, &limit.v1.derivative(Axis::Z, 2))?;
    fh2 = fh2.axpy(delta, &limit.v2.derivative(Axis::Z, 2))?;
    let u = Advector::new(&limit.v1, &limit.v2, Some(&limit.w));
    fz = fz.axpy(-eps, &w_forcing(limit, dwdt, &u, delta)?)?;
    fh1.project_parity_in_place(Parity::Even);
    fh2.project_parity_in_place(Parity::Even);
    fz.project_parity_in_place(Parity::Odd);
    Ok(DiffForcing { fh1, fh2, fz })
}

/// Forcings of the barotropic/baroclinic system.
#[derive(Clone, Debug)]
pub struct BaroclinicForcing<T: Real> {
    /// `F̄` on the horizontal grid.
    pub fbar1: SpectralField<T>,
    pub fbar2: SpectralField<T>,
    pub ftilde1_1: SpectralField<T>,
    pub ftilde1_2: SpectralField<T>,
    pub ftilde2: SpectralField<T>,
}

/// `F̄ = −avg(ũ·∇ṽ)`, `F̃1 = −ṽ·∇_H v̄ − v̄·∇_H ṽ − ũ·∇ṽ + avg(ũ·∇ṽ)`,
/// `F̃2 = −v̄·∇_H w − ũ·∇w`. `vbar` lives on the horizontal grid.
pub fn baroclinic_rhs<T: Real>(
    vbar1: &SpectralField<T>,
    vbar2: &SpectralField<T>,
    vtilde1: &SpectralField<T>,
    vtilde2: &SpectralField<T>,
    w: &SpectralField<T>,
) -> Result<BaroclinicForcing<T>> {
    check_same(&[vtilde1, vtilde2, w])?;
    let grid = vtilde1.grid().clone();
    let lifted1 = vbar1.lift_to(&grid)?;
    let lifted2 = vbar2.lift_to(&grid)?;
    let mean = vtilde1.vertical_average().l2_norm().max(vtilde2.vertical_average().l2_norm());
    if !(mean <= compatibility_tol::<T>()) {
        return Err(Error::Compatibility {
            what: "vertical mean of the baroclinic velocity".into(),
            defect: mean.to_f64_lossy(),
        });
    }
    let tilde = Advector::new(vtilde1, vtilde2, Some(w));
    let tilde_h = Advector::new(vtilde1, vtilde2, None);
    let bar = Advector::new(&lifted1, &lifted2, None);

    let mut fbar = Vec::with_capacity(2);
    let mut ft1 = Vec::with_capacity(2);
    for (vt, vb) in [(vtilde1, &lifted1), (vtilde2, &lifted2)] {
        let adv = tilde.advect(vt);
        let avg = adv.vertical_mean_plane();
        fbar.push(avg.vertical_average().scale(-T::one()));
        let mut f = tilde_h
            .advect(vb)
            .add(&bar.advect(vt))?
            .add(&adv)?
            .sub(&avg)?
            .scale(-T::one());
        f.project_parity_in_place(Parity::Even);
        ft1.push(f);
    }
    let mut ftilde2 = bar.advect(w).add(&tilde.advect(w))?.scale(-T::one());
    ftilde2.project_parity_in_place(Parity::Odd);
    let ftilde1_2 = ft1.pop().expect("two components");
    let ftilde1_1 = ft1.pop().expect("two components");
    let fbar2 = fbar.pop().expect("two components");
    let fbar1 = fbar.pop().expect("two components");
    Ok(BaroclinicForcing { fbar1, fbar2, ftilde1_1, ftilde1_2, ftilde2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Arc<Grid<f64>> {
        Grid::new(8, 8, 8).unwrap()
    }

    fn max_diff(a: &SpectralField<f64>, b: &SpectralField<f64>) -> f64 {
        a.sub(b).unwrap().max_abs_coeff()
    }

    #[test]
    fn scaled_projection_single_mode() {
        let g = grid();
        let mut u = VelocityState::zeros(g.clone(), System::NsEpsDelta);
        u.v1.set_coeff(1, 0, 1, Complex::new(1.0, 0.0)).unwrap();
        u.v1.set_coeff(1, 0, -1, Complex::new(1.0, 0.0)).unwrap();
        let p = project_div_free_scaled(&u, 1.0).unwrap();
        assert!((p.v1.coeff(1, 0, 1).re - 0.5).abs() < 1e-15);
        assert!(p.v2.coeff(1, 0, 1).norm() < 1e-15);
        assert!((p.w.coeff(1, 0, 1).re + 0.5).abs() < 1e-15);
    }

    #[test]
    fn scaled_projection_kills_gradients() {
        let g = grid();
        let phi = SpectralField::from_fn(g.clone(), Parity::Even, |x, y, z| {
            (PI * x).sin() * (PI * y).cos() * (PI * z).cos() + (2.0 * PI * x).cos()
        });
        let eps = 0.3;
        let u = VelocityState::new(
            phi.derivative(Axis::X, 1),
            phi.derivative(Axis::Y, 1),
            phi.derivative(Axis::Z, 1).scale(1.0 / eps),
            System::NsEpsDelta,
            0.0,
        )
        .unwrap();
        let p = project_div_free_scaled(&u, eps).unwrap();
        assert!(p.l2_norm() < 1e-13);
        assert!(project_div_free_scaled(&u, 0.0).is_err());
    }

    #[test]
    fn hydrostatic_projection_sine_example() {
        let g = grid();
        let f1 = SpectralField::from_fn(g.clone(), Parity::Even, |x, _, _| (PI * x).sin());
        let f2 = SpectralField::zeros(g, Parity::Even);
        let (a, b) = project_hydrostatic(&f1, &f2);
        assert!(a.max_abs_coeff() < 1e-15 && b.max_abs_coeff() < 1e-15);
    }

    #[test]
    fn hydrostatic_projection_keeps_baroclinic_planes() {
        let g = grid();
        let f1 = SpectralField::from_fn(g.clone(), Parity::Even, |x, _, z| (PI * x).sin() * (PI * z).cos());
        let f2 = SpectralField::zeros(g, Parity::Even);
        let (a, _) = project_hydrostatic(&f1, &f2);
        assert!(max_diff(&a, &f1) < 1e-15);
    }

    #[test]
    fn vertical_velocity_example() {
        let g = grid();
        let v1 = SpectralField::from_fn(g.clone(), Parity::Even, |x, _, z| (PI * x).sin() * (PI * z).cos());
        let v2 = SpectralField::zeros(g.clone(), Parity::Even);
        let w = vertical_velocity_from_v(&v1, &v2).unwrap();
        let want = SpectralField::from_fn(g, Parity::Odd, |x, _, z| -(PI * x).cos() * (PI * z).sin());
        assert!(max_diff(&w, &want) < 1e-14);
    }

    #[test]
    fn vertical_velocity_rejects_incompatible() {
        let g = grid();
        let v1 = SpectralField::from_fn(g.clone(), Parity::Even, |x, _, _| (PI * x).sin());
        let v2 = SpectralField::zeros(g, Parity::Even);
        match vertical_velocity_from_v(&v1, &v2) {
            Err(Error::Compatibility { defect, .. }) => assert!(defect > 1.0),
            other => panic!("expected compatibility error, got {other:?}"),
        }
    }

    #[test]
    fn split_of_z_independent_and_mean_free() {
        let g = grid();
        let mut u = VelocityState::zeros(g.clone(), System::NsEpsDelta);
        u.v1 = SpectralField::from_fn(g.clone(), Parity::Even, |x, y, _| (PI * x).sin() * (PI * y).cos());
        let s = barotropic_split(&u);
        assert!(s.vtilde1.max_abs_coeff() < 1e-15);
        assert!(s.vbar1.lift_to(&g).unwrap().sub(&u.v1).unwrap().max_abs_coeff() < 1e-15);

        u.v1 = SpectralField::from_fn(g.clone(), Parity::Even, |x, _, z| (PI * x).sin() * (PI * z).cos());
        let s = barotropic_split(&u);
        assert!(s.vbar1.max_abs_coeff() < 1e-15);
        let (r1, _) = s.reconstruct().unwrap();
        assert_eq!(r1.coeffs(), u.v1.coeffs());
    }

    #[test]
    fn baroclinic_rhs_vanishes_without_baroclinic_part() {
        let g = grid();
        let h = g.horizontal();
        let vb1 = SpectralField::from_fn(h.clone(), Parity::Even, |x, y, _| (PI * x).sin() * (PI * y).cos());
        let vb2 = SpectralField::from_fn(h, Parity::Even, |x, y, _| -(PI * x).cos() * (PI * y).sin());
        let z = SpectralField::zeros(g.clone(), Parity::Even);
        let f = baroclinic_rhs(&vb1, &vb2, &z, &z, &SpectralField::zeros(g, Parity::Odd)).unwrap();
        for x in [&f.fbar1, &f.fbar2, &f.ftilde1_1, &f.ftilde1_2, &f.ftilde2] {
            assert!(x.max_abs_coeff() < 1e-15);
        }
    }

    #[test]
    fn baroclinic_rhs_rejects_mean() {
        let g = grid();
        let h = g.horizontal();
        let zb = SpectralField::zeros(h, Parity::Even);
        let vt = SpectralField::from_fn(g.clone(), Parity::Even, |x, _, _| (PI * x).sin());
        let z = SpectralField::zeros(g.clone(), Parity::Even);
        let w = SpectralField::zeros(g, Parity::Odd);
        assert!(matches!(baroclinic_rhs(&zb, &zb, &vt, &z, &w), Err(Error::Compatibility { .. })));
    }
}
