//! Spatial Sobolev-type norms via Fourier multipliers and space-time norm
//! accumulation along a trajectory.

use crate::error::{Error, Result};
use crate::fields::VelocityState;
use crate::scalar::Real;
use crate::spectral::SpectralField;

/// `(Σ_k m(k) |ĉ(k)|² · |domain|)^{1/2}` for a nonnegative weight `m`.
fn weighted<T: Real>(f: &SpectralField<T>, m: impl Fn(T, T, T) -> T) -> T {
    let c = f.coeffs();
    let mut acc = T::zero();
    f.grid().for_each_mode(|i, kx, ky, kz| acc = acc + m(kx, ky, kz) * c[i].norm_sqr());
    (acc * f.grid().volume()).sqrt()
}

/// Bessel-potential norm with multiplier `(1 + |k|²)^{s/2}`.
pub fn norm_sobolev<T: Real>(f: &SpectralField<T>, s: T) -> Result<T> {
    if !(s >= T::zero()) {
        return Err(Error::InvalidParameter(format!("s = {s} must be >= 0")));
    }
    Ok(weighted(f, |kx, ky, kz| (T::one() + kx * kx + ky * ky + kz * kz).powf(s)))
}

/// `H^r_z H^s_xy` norm with multiplier `(1 + kz²)^{r/2} (1 + kx² + ky²)^{s/2}`.
pub fn norm_aniso<T: Real>(f: &SpectralField<T>, r: u32, s: u32) -> Result<T> {
    if r > 3 || s > 1 {
        return Err(Error::InvalidParameter(format!(
            "anisotropic norm ({r},{s}) unsupported: r in 0..=3, s in 0..=1"
        )));
    }
    let (r, s) = (r as i32, s as i32);
    Ok(weighted(f, |kx, ky, kz| (T::one() + kz * kz).powi(r) * (T::one() + kx * kx + ky * ky).powi(s)))
}

/// `‖Δ_δ f‖_{L²}` without forming the field.
pub fn norm_laplacian_delta<T: Real>(f: &SpectralField<T>, delta: T) -> T {
    weighted(f, |kx, ky, kz| {
        let m = kx * kx + ky * ky + delta * kz * kz;
        m * m
    })
}

/// Root-sum-square over components of a per-field norm.
pub fn vector_norm<T: Real>(fields: &[&SpectralField<T>], norm: impl Fn(&SpectralField<T>) -> T) -> T {
    fields.iter().map(|f| norm(f).powi(2)).sum::<T>().sqrt()
}

/// Which space-time norm an accumulator computes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind<T> {
    /// `L²(0,T;L²)`.
    E0,
    /// `‖u‖ + ‖∂t u‖ + ‖Δ_δ u‖` in `L²(0,T;L²)`.
    EHdelta(T),
    /// As `EHdelta` with the vertical diffusion dropped (`Δ_H`).
    EH,
    /// As `EHdelta` with the full Laplacian (`δ = 1`).
    E1,
    /// `L²(0,T;H¹_z H¹_xy)` plus `sup_t ‖u‖_{H¹_z L²_xy}`.
    Ez,
    /// `L⁴(0,T;H^{3/2})`.
    L4H32,
}

impl<T: Real> NormKind<T> {
    pub fn name(&self) -> String {
        match self {
            NormKind::E0 => "E0".into(),
            NormKind::EHdelta(d) => format!("EHdelta({d})"),
            NormKind::EH => "EH".into(),
            NormKind::E1 => "E1".into(),
            NormKind::Ez => "Ez".into(),
            NormKind::L4H32 => "L4H32".into(),
        }
    }

    fn needs_time_derivative(&self) -> bool {
        matches!(self, NormKind::EHdelta(_) | NormKind::EH | NormKind::E1)
    }

    fn laplacian_delta(&self) -> Option<T> {
        match *self {
            NormKind::EHdelta(d) => Some(d),
            NormKind::EH => Some(T::zero()),
            NormKind::E1 => Some(T::one()),
            _ => None,
        }
    }
}

/// Running trapezoidal quadrature of a space-time norm.
#[derive(Debug, Clone)]
pub struct NormAccumulator<T: Real> {
    kind: NormKind<T>,
    integrals: [T; 3],
    running_max: T,
    samples: usize,
    t_start: T,
    t_last: T,
    last: [T; 3],
}

impl<T: Real> NormAccumulator<T> {
    pub fn new(kind: NormKind<T>) -> Self {
        NormAccumulator {
            kind,
            integrals: [T::zero(); 3],
            running_max: T::zero(),
            samples: 0,
            t_start: T::zero(),
            t_last: T::zero(),
            last: [T::zero(); 3],
        }
    }

    pub fn kind(&self) -> NormKind<T> {
        self.kind
    }
    pub fn sample_count(&self) -> usize {
        self.samples
    }
    pub fn running_integral(&self) -> T {
        self.integrals.iter().copied().sum()
    }
    pub fn running_max(&self) -> T {
        self.running_max
    }
    pub fn t_start(&self) -> T {
        self.t_start
    }
    pub fn t_last(&self) -> T {
        self.t_last
    }

    /// Adds a sample of the state and its time derivative at time `t`.
    pub fn accumulate(
        &mut self,
        t: T,
        u: &VelocityState<T>,
        dudt: Option<&VelocityState<T>>,
    ) -> Result<()> {
        let du = dudt.map(|d| d.components());
        self.accumulate_fields(t, &u.components(), du.as_ref().map(|d| &d[..]))
    }

    /// Adds a sample given as a list of component fields.
    pub fn accumulate_fields(
        &mut self,
        t: T,
        u: &[&SpectralField<T>],
        dudt: Option<&[&SpectralField<T>]>,
    ) -> Result<()> {
        if self.samples > 0 && t < self.t_last {
            return Err(Error::Ordering { last: self.t_last.to_f64_lossy(), next: t.to_f64_lossy() });
        }
        let mut parts = [T::zero(); 3];
        let mut sup = T::zero();
        match self.kind {
            NormKind::E0 => parts[0] = vector_norm(u, |f| f.l2_norm()).powi(2),
            NormKind::Ez => {
                parts[0] = vector_norm(u, |f| aniso(f, 1, 1)).powi(2);
                sup = vector_norm(u, |f| aniso(f, 1, 0));
            }
            NormKind::L4H32 => {
                parts[0] = vector_norm(u, |f| weighted(f, |kx, ky, kz| {
                    (T::one() + kx * kx + ky * ky + kz * kz).powf(T::lit(1.5))
                }))
                .powi(4)
            }
            kind => {
                debug_assert!(kind.needs_time_derivative());
                let dudt = dudt.ok_or_else(|| {
                    Error::InvalidParameter(format!("{} needs the time derivative", kind.name()))
                })?;
                let delta = kind.laplacian_delta().unwrap_or_else(T::zero);
                parts[0] = vector_norm(u, |f| f.l2_norm()).powi(2);
                parts[1] = vector_norm(dudt, |f| f.l2_norm()).powi(2);
                parts[2] = vector_norm(u, |f| norm_laplacian_delta(f, delta)).powi(2);
            }
        }
        self.push(t, parts, sup);
        Ok(())
    }

    /// Adds precomputed squared (or fourth-power) spatial norms.
    pub fn accumulate_raw(&mut self, t: T, parts: [T; 3], sup: T) -> Result<()> {
        if self.samples > 0 && t < self.t_last {
            return Err(Error::Ordering { last: self.t_last.to_f64_lossy(), next: t.to_f64_lossy() });
        }
        self.push(t, parts, sup);
        Ok(())
    }

    fn push(&mut self, t: T, parts: [T; 3], sup: T) {
        if self.samples == 0 {
            self.t_start = t;
        } else {
            let half_dt = (t - self.t_last) * T::lit(0.5);
            for i in 0..3 {
                self.integrals[i] = self.integrals[i] + half_dt * (self.last[i] + parts[i]);
            }
        }
        self.running_max = self.running_max.max(sup);
        self.last = parts;
        self.t_last = t;
        self.samples += 1;
    }

    /// Value of the space-time norm over `[t_start, t_last]`.
    pub fn finalize(&self) -> Result<T> {
        if self.samples < 2 {
            return Err(Error::InsufficientData(format!(
                "{} has {} sample(s), needs 2",
                self.kind.name(),
                self.samples
            )));
        }
        let [a, b, c] = self.integrals;
        Ok(match self.kind {
            NormKind::E0 => a.sqrt(),
            NormKind::Ez => a.sqrt() + self.running_max,
            NormKind::L4H32 => a.sqrt().sqrt(),
            _ => a.sqrt() + b.sqrt() + c.sqrt(),
        })
    }
}

fn aniso<T: Real>(f: &SpectralField<T>, r: i32, s: i32) -> T {
    weighted(f, |kx, ky, kz| (T::one() + kz * kz).powi(r) * (T::one() + kx * kx + ky * ky).powi(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, Parity};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sine_x() -> SpectralField<f64> {
        SpectralField::from_fn(Grid::new(8, 8, 8).unwrap(), Parity::Even, |x, _, _| (PI * x).sin())
    }

    #[test]
    fn sobolev_examples() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let one = SpectralField::from_fn(g, Parity::Even, |_, _, _| 1.0);
        assert_relative_eq!(norm_sobolev(&one, 2.5).unwrap(), 8f64.sqrt(), max_relative = 1e-14);
        let s = sine_x();
        assert_relative_eq!(norm_sobolev(&s, 0.0).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(norm_sobolev(&s, 1.0).unwrap(), 2.0 * (1.0 + PI * PI).sqrt(), max_relative = 1e-14);
        assert!(norm_sobolev(&s, -1.0).is_err());
    }

    #[test]
    fn aniso_examples() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let c = SpectralField::from_fn(g.clone(), Parity::Even, |_, _, z| (PI * z).cos());
        assert_relative_eq!(norm_aniso(&c, 1, 0).unwrap(), 2.0 * (1.0 + PI * PI).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(norm_aniso(&sine_x(), 1, 0).unwrap(), 2.0, max_relative = 1e-14);
        let cs = SpectralField::from_fn(g, Parity::Even, |x, _, z| (PI * z).cos() * (PI * x).sin());
        assert_relative_eq!(norm_aniso(&cs, 1, 1).unwrap(), 2f64.sqrt() * (1.0 + PI * PI), max_relative = 1e-14);
        assert!(norm_aniso(&cs, 4, 0).is_err());
        assert!(norm_aniso(&cs, 0, 2).is_err());
    }

    #[test]
    fn e0_of_constant_trajectory() {
        let s = sine_x();
        let mut acc = NormAccumulator::new(NormKind::E0);
        acc.accumulate_fields(0.0, &[&s], None).unwrap();
        acc.accumulate_fields(1.0, &[&s], None).unwrap();
        assert_relative_eq!(acc.finalize().unwrap(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn insufficient_and_ordering() {
        let s = sine_x();
        let mut acc = NormAccumulator::new(NormKind::E0);
        assert!(matches!(acc.finalize(), Err(Error::InsufficientData(_))));
        acc.accumulate_fields(1.0, &[&s], None).unwrap();
        assert!(matches!(acc.finalize(), Err(Error::InsufficientData(_))));
        assert!(matches!(acc.accumulate_fields(0.5, &[&s], None), Err(Error::Ordering { .. })));
    }

    #[test]
    fn eh_needs_derivative() {
        let s = sine_x();
        let mut acc = NormAccumulator::new(NormKind::EHdelta(1.0));
        assert!(acc.accumulate_fields(0.0, &[&s], None).is_err());
    }

    #[test]
    fn ehdelta_laplacian_term() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let f = SpectralField::from_fn(g.clone(), Parity::Even, |x, _, z| (PI * x).sin() * (2.0 * PI * z).cos());
        let zero = SpectralField::zeros(g, Parity::Even);
        let delta = 0.5;
        let mut acc = NormAccumulator::new(NormKind::EHdelta(delta));
        acc.accumulate_fields(0.0, &[&f], Some(&[&zero])).unwrap();
        acc.accumulate_fields(1.0, &[&f], Some(&[&zero])).unwrap();
        let l2 = f.l2_norm();
        let mult = PI * PI + delta * 4.0 * PI * PI;
        assert_relative_eq!(acc.finalize().unwrap(), l2 + mult * l2, max_relative = 1e-13);
    }
}
