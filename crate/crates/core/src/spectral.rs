//! Fourier representation of periodic fields on the box (-1,1)^3.
//!
//! Coefficients are stored in FFT order along each axis (index `j` carries the
//! integer mode `j` for `j < n/2` and `j - n` otherwise) and flattened with `x`
//! outermost: `idx = (ix * ny + iy) * nz + iz`. The transform is normalized so
//! that the zero coefficient is the mean of the field.

use crate::error::{Error, Result};
use crate::scalar::Real;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Volume of the three-dimensional box.
pub const BOX_VOLUME: f64 = 8.0;
/// Area of the horizontal cross section (-1,1)^2.
pub const SECTION_AREA: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// Symmetry class of a field with respect to `z -> -z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    /// Parity after an `order`-th derivative in `z`.
    pub fn after_z_derivative(self, order: u32) -> Parity {
        if order % 2 == 0 {
            return self;
        }
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
            Parity::None => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Parity> {
        match code {
            0 => Some(Parity::Even),
            1 => Some(Parity::Odd),
            2 => Some(Parity::None),
            _ => None,
        }
    }
}

struct AxisTables<T: Real> {
    n: usize,
    modes: Vec<i64>,
    wavenumbers: Vec<T>,
    /// Wavenumbers of a first derivative: the `-n/2` entry is zero.
    gradient: Vec<T>,
    keep: Vec<bool>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> AxisTables<T> {
    fn new(n: usize, planner: &mut FftPlanner<T>) -> Self {
        let modes: Vec<i64> = (0..n)
            .map(|j| if j < n / 2 || n == 1 { j as i64 } else { j as i64 - n as i64 })
            .collect();
        let wavenumbers: Vec<T> = modes.iter().map(|&m| T::PI() * T::lit(m as f64)).collect();
        let gradient = modes
            .iter()
            .zip(&wavenumbers)
            .map(|(&m, &k)| if n > 1 && m == -((n / 2) as i64) { T::zero() } else { k })
            .collect();
        // 2/3 rule with integer division: |m| < n/3 + 1.
        let cutoff = (n / 3 + 1) as i64;
        let keep = modes.iter().map(|&m| m.abs() < cutoff).collect();
        AxisTables {
            n,
            modes,
            wavenumbers,
            gradient,
            keep,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Collocation grid and wavenumber tables. Immutable once built; shared via `Arc`.
///
/// A grid with `nz == 1` is a horizontal grid on the cross section `G`; it is
/// used for barotropic and two-dimensional fields.
pub struct Grid<T: Real> {
    axes: [AxisTables<T>; 3],
    horizontal: OnceLock<Arc<Grid<T>>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid({}x{}x{})", self.nx(), self.ny(), self.nz())
    }
}

fn check_axis(name: &str, n: usize) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "{name} = {n}: sizes must be even and at least 4"
        )));
    }
    Ok(())
}

impl<T: Real> Grid<T> {
    /// Builds a three-dimensional grid; sizes must be even and at least 4.
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Arc<Self>> {
        check_axis("nx", nx)?;
        check_axis("ny", ny)?;
        check_axis("nz", nz)?;
        Ok(Arc::new(Self::build(nx, ny, nz)))
    }

    /// Builds a horizontal grid on `G` (one vertical point, `kz = 0` only).
    pub fn horizontal_grid(nx: usize, ny: usize) -> Result<Arc<Self>> {
        check_axis("nx", nx)?;
        check_axis("ny", ny)?;
        Ok(Arc::new(Self::build(nx, ny, 1)))
    }

    fn build(nx: usize, ny: usize, nz: usize) -> Self {
        let mut planner = FftPlanner::new();
        Grid {
            axes: [
                AxisTables::new(nx, &mut planner),
                AxisTables::new(ny, &mut planner),
                AxisTables::new(nz, &mut planner),
            ],
            horizontal: OnceLock::new(),
        }
    }

    pub fn nx(&self) -> usize {
        self.axes[0].n
    }
    pub fn ny(&self) -> usize {
        self.axes[1].n
    }
    pub fn nz(&self) -> usize {
        self.axes[2].n
    }
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.nx(), self.ny(), self.nz())
    }
    pub fn len(&self) -> usize {
        self.nx() * self.ny() * self.nz()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn is_horizontal(&self) -> bool {
        self.nz() == 1
    }

    /// Measure of the domain the grid discretizes: 8 for the box, 4 for `G`.
    pub fn volume(&self) -> T {
        if self.is_horizontal() {
            T::lit(SECTION_AREA)
        } else {
            T::lit(BOX_VOLUME)
        }
    }

    fn axis(&self, axis: Axis) -> &AxisTables<T> {
        &self.axes[axis as usize]
    }

    /// Wavenumbers `pi * m` in storage order.
    pub fn wavenumbers(&self, axis: Axis) -> &[T] {
        &self.axis(axis).wavenumbers
    }

    /// Integer mode indices in storage order.
    pub fn modes(&self, axis: Axis) -> &[i64] {
        &self.axis(axis).modes
    }

    pub fn n(&self, axis: Axis) -> usize {
        self.axis(axis).n
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.ny() + iy) * self.nz() + iz
    }

    /// Storage position of integer mode `m` along `axis`, if representable.
    pub fn storage_of_mode(&self, axis: Axis, m: i64) -> Option<usize> {
        let n = self.n(axis) as i64;
        if n == 1 {
            return (m == 0).then_some(0);
        }
        if m < -n / 2 || m >= n / 2 {
            return None;
        }
        Some(m.rem_euclid(n) as usize)
    }

    /// Storage index of the mode with the opposite vertical wavenumber.
    #[inline]
    pub fn z_mirror(&self, iz: usize) -> usize {
        let nz = self.nz();
        (nz - iz) % nz
    }

    #[inline]
    fn mirror(n: usize, j: usize) -> usize {
        (n - j) % n
    }

    /// Whether the 2/3 rule keeps the mode at storage position `(ix, iy, iz)`.
    #[inline]
    pub fn keeps(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.axes[0].keep[ix] && self.axes[1].keep[iy] && self.axes[2].keep[iz]
    }

    /// Dealias mask flattened in storage order.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.len());
        for ix in 0..self.nx() {
            for iy in 0..self.ny() {
                for iz in 0..self.nz() {
                    mask.push(self.keeps(ix, iy, iz));
                }
            }
        }
        mask
    }

    /// Collocation coordinate `-1 + 2 i / n`.
    pub fn coordinate(&self, axis: Axis, i: usize) -> T {
        let n = self.n(axis);
        -T::one() + T::lit(2.0) * T::from_usize_lossy(i) / T::from_usize_lossy(n)
    }

    /// Horizontal companion grid (same `nx`, `ny`, one vertical point).
    pub fn horizontal(&self) -> Arc<Grid<T>> {
        self.horizontal
            .get_or_init(|| Arc::new(Self::build(self.nx(), self.ny(), 1)))
            .clone()
    }

    pub fn same_shape(&self, other: &Grid<T>) -> bool {
        self.shape() == other.shape()
    }

    /// Calls `f(index, kx, ky, kz)` for every mode in storage order.
    #[inline]
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, T, T, T)) {
        let (kx, ky, kz) = (
            &self.axes[0].wavenumbers,
            &self.axes[1].wavenumbers,
            &self.axes[2].wavenumbers,
        );
        let mut idx = 0;
        for &a in kx {
            for &b in ky {
                for &c in kz {
                    f(idx, a, b, c);
                    idx += 1;
                }
            }
        }
    }

    /// As [`Grid::for_each_mode`] with first-derivative wavenumbers, so that
    /// divergences and projections agree with [`SpectralField::derivative`].
    #[inline]
    pub fn for_each_gradient_mode(&self, mut f: impl FnMut(usize, T, T, T)) {
        let (kx, ky, kz) = (&self.axes[0].gradient, &self.axes[1].gradient, &self.axes[2].gradient);
        let mut idx = 0;
        for &a in kx {
            for &b in ky {
                for &c in kz {
                    f(idx, a, b, c);
                    idx += 1;
                }
            }
        }
    }

    fn transform(&self, data: &mut [Complex<T>], inverse: bool) {
        let (nx, ny, nz) = self.shape();
        let mut buf: Vec<Complex<T>> = Vec::new();
        let mut scratch: Vec<Complex<T>> = Vec::new();
        // z: contiguous lines
        if nz > 1 {
            let fft = self.plan(Axis::Z, inverse);
            scratch.resize(fft.get_inplace_scratch_len(), Complex::default());
            fft.process_with_scratch(data, &mut scratch);
        }
        // y: stride nz
        if ny > 1 {
            let fft = self.plan(Axis::Y, inverse);
            scratch.resize(fft.get_inplace_scratch_len(), Complex::default());
            buf.resize(data.len(), Complex::default());
            for ix in 0..nx {
                let plane = ix * ny * nz;
                for iz in 0..nz {
                    let line = (ix * nz + iz) * ny;
                    for iy in 0..ny {
                        buf[line + iy] = data[plane + iy * nz + iz];
                    }
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for ix in 0..nx {
                let plane = ix * ny * nz;
                for iz in 0..nz {
                    let line = (ix * nz + iz) * ny;
                    for iy in 0..ny {
                        data[plane + iy * nz + iz] = buf[line + iy];
                    }
                }
            }
        }
        // x: stride ny*nz
        if nx > 1 {
            let fft = self.plan(Axis::X, inverse);
            scratch.resize(fft.get_inplace_scratch_len(), Complex::default());
            let stride = ny * nz;
            buf.resize(data.len(), Complex::default());
            for r in 0..stride {
                for ix in 0..nx {
                    buf[r * nx + ix] = data[ix * stride + r];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for r in 0..stride {
                for ix in 0..nx {
                    data[ix * stride + r] = buf[r * nx + ix];
                }
            }
        }
    }

    fn plan(&self, axis: Axis, inverse: bool) -> &Arc<dyn Fft<T>> {
        let tables = self.axis(axis);
        if inverse {
            &tables.inverse
        } else {
            &tables.forward
        }
    }

    /// Forward transform of raw complex samples in place (mean-normalized).
    pub fn forward_in_place(&self, data: &mut [Complex<T>]) {
        self.transform(data, false);
        let scale = T::one() / T::from_usize_lossy(self.len());
        self.apply_shift(data, scale);
    }

    /// Inverse transform of raw complex coefficients in place.
    pub fn inverse_in_place(&self, data: &mut [Complex<T>]) {
        self.apply_shift(data, T::one());
        self.transform(data, true);
    }

    /// The lattice starts at `-1`, so the basis `e^{iπmx}` differs from the
    /// DFT basis by `(-1)^m` per axis.
    fn apply_shift(&self, data: &mut [Complex<T>], scale: T) {
        let odd = |axis: usize, j: usize| self.axes[axis].modes[j].rem_euclid(2) == 1;
        let (nx, ny, nz) = self.shape();
        let mut idx = 0;
        for ix in 0..nx {
            for iy in 0..ny {
                let base = odd(0, ix) ^ odd(1, iy);
                for iz in 0..nz {
                    let s = if base ^ odd(2, iz) { -scale } else { scale };
                    data[idx] = data[idx] * s;
                    idx += 1;
                }
            }
        }
    }
}

/// Real samples on the collocation lattice.
#[derive(Clone, Debug)]
pub struct PhysicalField<T: Real> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Real> PhysicalField<T> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} samples for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        Ok(PhysicalField { grid, values })
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let values = vec![T::zero(); grid.len()];
        PhysicalField { grid, values }
    }

    /// Samples `f(x, y, z)` on the collocation lattice.
    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(T, T, T) -> T) -> Self {
        let (nx, ny, nz) = grid.shape();
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..nx {
            let x = grid.coordinate(Axis::X, ix);
            for iy in 0..ny {
                let y = grid.coordinate(Axis::Y, iy);
                for iz in 0..nz {
                    let z = grid.coordinate(Axis::Z, iz);
                    values.push(f(x, y, z));
                }
            }
        }
        PhysicalField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Forward transform; the result carries no parity declaration.
    pub fn to_spectral(&self) -> SpectralField<T> {
        let mut coeffs: Vec<Complex<T>> =
            self.values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.grid.forward_in_place(&mut coeffs);
        SpectralField { grid: self.grid.clone(), coeffs, parity: Parity::None }
    }

    /// Midpoint-rule integral of `f^2` (exact for trigonometric polynomials
    /// resolved by the lattice).
    pub fn quadrature_sq(&self) -> T {
        let cell = self.grid.volume() / T::from_usize_lossy(self.grid.len());
        self.values.iter().map(|&v| v * v).sum::<T>() * cell
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Complex Fourier coefficients of a real field with a declared z-parity.
#[derive(Clone, Debug)]
pub struct SpectralField<T: Real> {
    grid: Arc<Grid<T>>,
    coeffs: Vec<Complex<T>>,
    parity: Parity,
}

impl<T: Real> PartialEq for SpectralField<T> {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_shape(&other.grid)
            && self.parity == other.parity
            && self.coeffs == other.coeffs
    }
}

/// `forward_transform` in free-function form.
pub fn forward_transform<T: Real>(f: &PhysicalField<T>) -> SpectralField<T> {
    f.to_spectral()
}

/// `inverse_transform` in free-function form.
pub fn inverse_transform<T: Real>(f: &SpectralField<T>) -> PhysicalField<T> {
    f.to_physical()
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: Arc<Grid<T>>, parity: Parity) -> Self {
        let coeffs = vec![Complex::default(); grid.len()];
        SpectralField { grid, coeffs, parity }
    }

    /// Wraps raw coefficients. The parity is declared, not enforced.
    pub fn from_coeffs(
        grid: Arc<Grid<T>>,
        coeffs: Vec<Complex<T>>,
        parity: Parity,
    ) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for a grid of {}",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(SpectralField { grid, coeffs, parity })
    }

    /// Transforms samples of `f` and projects onto `parity`.
    pub fn from_fn(grid: Arc<Grid<T>>, parity: Parity, f: impl Fn(T, T, T) -> T) -> Self {
        PhysicalField::from_fn(grid, f).to_spectral().project_parity(parity)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }
    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }
    pub fn parity(&self) -> Parity {
        self.parity
    }
    /// Re-declares the parity without touching coefficients.
    pub fn set_parity(&mut self, parity: Parity) {
        self.parity = parity;
    }

    /// Coefficient of integer mode `(mx, my, mz)`; zero if not representable.
    pub fn coeff(&self, mx: i64, my: i64, mz: i64) -> Complex<T> {
        match self.position(mx, my, mz) {
            Some(i) => self.coeffs[i],
            None => Complex::default(),
        }
    }

    pub fn set_coeff(&mut self, mx: i64, my: i64, mz: i64, value: Complex<T>) -> Result<()> {
        let i = self.position(mx, my, mz).ok_or_else(|| {
            Error::Shape(format!("mode ({mx},{my},{mz}) not on {:?}", self.grid))
        })?;
        self.coeffs[i] = value;
        Ok(())
    }

    fn position(&self, mx: i64, my: i64, mz: i64) -> Option<usize> {
        let g = &self.grid;
        Some(g.index(
            g.storage_of_mode(Axis::X, mx)?,
            g.storage_of_mode(Axis::Y, my)?,
            g.storage_of_mode(Axis::Z, mz)?,
        ))
    }

    pub fn to_physical(&self) -> PhysicalField<T> {
        let mut data = self.coeffs.clone();
        self.grid.inverse_in_place(&mut data);
        PhysicalField { grid: self.grid.clone(), values: data.into_iter().map(|c| c.re).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(Error::Shape(format!("{:?} vs {:?}", self.grid, other.grid)))
        }
    }

    /// Multiplies every coefficient by `m(kx, ky, kz)`.
    pub fn map_multiplier(&self, m: impl Fn(T, T, T) -> Complex<T>) -> Self {
        let mut out = self.clone();
        out.apply_multiplier(m);
        out
    }

    pub fn apply_multiplier(&mut self, m: impl Fn(T, T, T) -> Complex<T>) {
        let coeffs = &mut self.coeffs;
        self.grid.for_each_mode(|i, kx, ky, kz| coeffs[i] = coeffs[i] * m(kx, ky, kz));
    }

    /// `order`-th derivative along `axis`: multiplication by `(i k)^order`.
    pub fn derivative(&self, axis: Axis, order: u32) -> Self {
        let i_pow = match order % 4 {
            0 => Complex::new(T::one(), T::zero()),
            1 => Complex::new(T::zero(), T::one()),
            2 => Complex::new(-T::one(), T::zero()),
            _ => Complex::new(T::zero(), -T::one()),
        };
        let ord = order as i32;
        let mut out = self.map_multiplier(|kx, ky, kz| {
            let k = match axis {
                Axis::X => kx,
                Axis::Y => ky,
                Axis::Z => kz,
            };
            i_pow * k.powi(ord)
        });
        if order % 2 == 1 {
            out.zero_nyquist(axis);
        }
        if axis == Axis::Z {
            out.parity = self.parity.after_z_derivative(order);
        }
        out
    }

    /// The `-n/2` mode has no real-valued odd derivative; drop it.
    fn zero_nyquist(&mut self, axis: Axis) {
        let (nx, ny, nz) = self.grid.shape();
        let n = self.grid.n(axis);
        if n == 1 {
            return;
        }
        let j = n / 2;
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..nz {
                    let hit = match axis {
                        Axis::X => ix == j,
                        Axis::Y => iy == j,
                        Axis::Z => iz == j,
                    };
                    if hit {
                        self.coeffs[(ix * ny + iy) * nz + iz] = Complex::default();
                    }
                }
            }
        }
    }

    /// Zeroes every mode outside the 2/3-rule mask.
    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        let (nx, ny, nz) = self.grid.shape();
        let mut idx = 0;
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..nz {
                    if !self.grid.keeps(ix, iy, iz) {
                        self.coeffs[idx] = Complex::default();
                    }
                    idx += 1;
                }
            }
        }
    }

    /// Orthogonal projection onto the even or odd subspace in `z`.
    /// `Parity::None` returns the field unchanged.
    pub fn project_parity(&self, parity: Parity) -> Self {
        let mut out = self.clone();
        out.project_parity_in_place(parity);
        out
    }

    pub fn project_parity_in_place(&mut self, parity: Parity) {
        let sign = match parity {
            Parity::Even => T::one(),
            Parity::Odd => -T::one(),
            Parity::None => {
                self.parity = Parity::None;
                return;
            }
        };
        let (nx, ny, nz) = self.grid.shape();
        let half = T::lit(0.5);
        for ix in 0..nx {
            for iy in 0..ny {
                let base = (ix * ny + iy) * nz;
                for iz in 0..nz {
                    let jz = self.grid.z_mirror(iz);
                    if jz < iz {
                        continue;
                    }
                    let a = self.coeffs[base + iz];
                    let b = self.coeffs[base + jz];
                    let pa = (a + b * sign) * half;
                    self.coeffs[base + iz] = pa;
                    if jz != iz {
                        self.coeffs[base + jz] = pa * sign;
                    }
                }
            }
        }
        self.parity = parity;
    }

    /// Applies `Δ_δ = Δ_H + δ ∂_z²`.
    pub fn laplacian_delta(&self, delta: T) -> Result<Self> {
        if !(delta >= T::zero()) {
            return Err(Error::InvalidParameter(format!("delta = {delta} must be >= 0")));
        }
        Ok(self.map_multiplier(|kx, ky, kz| {
            Complex::new(-(kx * kx + ky * ky) - delta * kz * kz, T::zero())
        }))
    }

    /// Replaces coefficients by the Hermitian-symmetric part, so the physical
    /// field is exactly real.
    pub fn symmetrize_hermitian(&mut self) {
        let (nx, ny, nz) = self.grid.shape();
        let half = T::lit(0.5);
        let old = self.coeffs.clone();
        for ix in 0..nx {
            let jx = Grid::<T>::mirror(nx, ix);
            for iy in 0..ny {
                let jy = Grid::<T>::mirror(ny, iy);
                for iz in 0..nz {
                    let jz = Grid::<T>::mirror(nz, iz);
                    let a = old[self.grid.index(ix, iy, iz)];
                    let b = old[self.grid.index(jx, jy, jz)];
                    self.coeffs[self.grid.index(ix, iy, iz)] = (a + b.conj()) * half;
                }
            }
        }
    }

    /// Largest deviation from `c(-k) = conj(c(k))`.
    pub fn hermitian_defect(&self) -> T {
        let (nx, ny, nz) = self.grid.shape();
        let mut worst = T::zero();
        for ix in 0..nx {
            let jx = Grid::<T>::mirror(nx, ix);
            for iy in 0..ny {
                let jy = Grid::<T>::mirror(ny, iy);
                for iz in 0..nz {
                    let jz = Grid::<T>::mirror(nz, iz);
                    let a = self.coeffs[self.grid.index(ix, iy, iz)];
                    let b = self.coeffs[self.grid.index(jx, jy, jz)];
                    worst = worst.max((a - b.conj()).norm());
                }
            }
        }
        worst
    }

    /// Largest deviation from the declared parity (zero for `Parity::None`).
    pub fn parity_defect(&self) -> T {
        let sign = match self.parity {
            Parity::Even => T::one(),
            Parity::Odd => -T::one(),
            Parity::None => return T::zero(),
        };
        let (nx, ny, nz) = self.grid.shape();
        let mut worst = T::zero();
        for base in (0..nx * ny).map(|r| r * nz) {
            for iz in 0..nz {
                let jz = self.grid.z_mirror(iz);
                let a = self.coeffs[base + iz];
                let b = self.coeffs[base + jz];
                worst = worst.max((a - b * sign).norm());
            }
        }
        worst
    }

    /// Discrete L2 pairing `∫ f g` (Parseval with the mean-normalized transform).
    pub fn dot(&self, other: &Self) -> T {
        let s: T = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        s * self.grid.volume()
    }

    pub fn l2_norm_sq(&self) -> T {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<T>() * self.grid.volume()
    }

    pub fn l2_norm(&self) -> T {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        out.scale_in_place(s);
        out
    }

    pub fn scale_in_place(&mut self, s: T) {
        for c in &mut self.coeffs {
            *c = *c * s;
        }
    }

    /// `self + s * other`; parity of `self` is kept.
    pub fn axpy(&self, s: T, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a = *a + *b * s;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(T::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-T::one(), other)
    }

    /// Keeps only the `kz = 0` plane (the vertical average).
    pub fn vertical_mean_plane(&self) -> Self {
        let mut out = self.clone();
        let nz = self.grid.nz();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if i % nz != 0 {
                *c = Complex::default();
            }
        }
        out
    }

    /// Restriction of the `kz = 0` plane to the horizontal grid.
    pub fn vertical_average(&self) -> Self {
        let hgrid = self.grid.horizontal();
        let nz = self.grid.nz();
        let coeffs = self.coeffs.iter().step_by(nz).copied().collect();
        SpectralField { grid: hgrid, coeffs, parity: Parity::Even }
    }

    /// Embeds a horizontal field into `grid` as a z-independent field.
    pub fn lift_to(&self, grid: &Arc<Grid<T>>) -> Result<Self> {
        if !self.grid.is_horizontal() || self.grid.nx() != grid.nx() || self.grid.ny() != grid.ny()
        {
            return Err(Error::Shape(format!("cannot lift {:?} to {:?}", self.grid, grid)));
        }
        let nz = grid.nz();
        let mut coeffs = vec![Complex::default(); grid.len()];
        for (r, c) in self.coeffs.iter().enumerate() {
            coeffs[r * nz] = *c;
        }
        Ok(SpectralField { grid: grid.clone(), coeffs, parity: Parity::Even })
    }

    /// Removes the `kz = 0` plane.
    pub fn remove_vertical_mean(&self) -> Self {
        let mut out = self.clone();
        let nz = self.grid.nz();
        for c in out.coeffs.iter_mut().step_by(nz) {
            *c = Complex::default();
        }
        out
    }
}

pub fn spectral_derivative<T: Real>(f: &SpectralField<T>, axis: Axis, order: u32) -> SpectralField<T> {
    f.derivative(axis, order)
}

pub fn dealias<T: Real>(f: &SpectralField<T>) -> SpectralField<T> {
    f.dealias()
}

pub fn enforce_parity<T: Real>(f: &SpectralField<T>, parity: Parity) -> SpectralField<T> {
    f.project_parity(parity)
}

pub fn laplacian_delta<T: Real>(f: &SpectralField<T>, delta: T) -> Result<SpectralField<T>> {
    f.laplacian_delta(delta)
}

/// Free-function form of grid construction.
pub fn make_grid<T: Real>(nx: usize, ny: usize, nz: usize) -> Result<Arc<Grid<T>>> {
    Grid::new(nx, ny, nz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sorted(v: &[f64]) -> Vec<f64> {
        let mut v = v.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn grid_tables_for_eight() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let expect: Vec<f64> = (-4..4).map(|m| PI * m as f64).collect();
        assert_eq!(sorted(g.wavenumbers(Axis::X)), expect);
        for (j, &m) in g.modes(Axis::X).iter().enumerate() {
            assert_eq!(g.axes[0].keep[j], m.abs() <= 2, "m = {m}");
        }
    }

    #[test]
    fn grid_tables_for_four() {
        let g = Grid::<f64>::new(4, 4, 4).unwrap();
        let expect: Vec<f64> = (-2..2).map(|m| PI * m as f64).collect();
        assert_eq!(sorted(g.wavenumbers(Axis::Z)), expect);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(Grid::<f64>::new(7, 8, 8), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::<f64>::new(2, 8, 8), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::<f64>::new(8, 8, 0), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn constant_maps_to_unit_mean() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let f = PhysicalField::from_fn(g, |_, _, _| 1.0).to_spectral();
        assert_abs_diff_eq!(f.coeff(0, 0, 0).re, 1.0, epsilon = 1e-15);
        let rest: f64 = f.coeffs().iter().skip(1).map(|c| c.norm()).sum();
        assert!(rest < 1e-14);
    }

    #[test]
    fn sine_coefficients() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let f = PhysicalField::from_fn(g, |x, _, _| (PI * x).sin()).to_spectral();
        let p = f.coeff(1, 0, 0);
        let m = f.coeff(-1, 0, 0);
        assert_abs_diff_eq!(p.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.im, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.im, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn derivatives_of_trig_modes() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let s = SpectralField::from_fn(g.clone(), Parity::Even, |x, _, _| (PI * x).sin());
        let ds = s.derivative(Axis::X, 1).to_physical();
        let want = PhysicalField::from_fn(g.clone(), |x, _, _| PI * (PI * x).cos());
        let err = ds.values().iter().zip(want.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12);

        let one = SpectralField::from_fn(g.clone(), Parity::Even, |_, _, _| 1.0);
        assert!(one.derivative(Axis::Z, 1).max_abs_coeff() == 0.0);

        let c = SpectralField::from_fn(g.clone(), Parity::Even, |_, _, z| (PI * z).cos());
        let dc = c.derivative(Axis::Z, 1);
        assert_eq!(dc.parity(), Parity::Odd);
        let want = PhysicalField::from_fn(g, |_, _, z| -PI * (PI * z).sin());
        let err = dc
            .to_physical()
            .values()
            .iter()
            .zip(want.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12);
    }

    #[test]
    fn dealias_mask_examples() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let mut f = SpectralField::zeros(g, Parity::None);
        f.set_coeff(3, 0, 0, Complex::new(1.0, 0.0)).unwrap();
        f.set_coeff(1, 1, 1, Complex::new(2.0, 0.0)).unwrap();
        let d = f.dealias();
        assert_eq!(d.coeff(3, 0, 0), Complex::new(0.0, 0.0));
        assert_eq!(d.coeff(1, 1, 1), Complex::new(2.0, 0.0));
    }

    #[test]
    fn parity_projections() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let c = SpectralField::from_fn(g.clone(), Parity::None, |_, _, z| (PI * z).cos());
        let even = c.project_parity(Parity::Even);
        assert!(even.sub(&c).unwrap().max_abs_coeff() < 1e-15);
        assert!(c.project_parity(Parity::Odd).max_abs_coeff() < 1e-15);
        let sc = SpectralField::from_fn(g.clone(), Parity::None, |_, _, z| (PI * z).sin() + (PI * z).cos());
        let s = SpectralField::from_fn(g, Parity::None, |_, _, z| (PI * z).sin());
        assert!(sc.project_parity(Parity::Odd).sub(&s).unwrap().max_abs_coeff() < 1e-15);
    }

    #[test]
    fn laplacian_multiplier() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let mut f = SpectralField::zeros(g.clone(), Parity::None);
        f.set_coeff(1, 0, 2, Complex::new(1.0, 0.0)).unwrap();
        let l1 = f.laplacian_delta(1.0).unwrap();
        assert_abs_diff_eq!(l1.coeff(1, 0, 2).re, -5.0 * PI * PI, epsilon = 1e-12);
        let l0 = f.laplacian_delta(0.0).unwrap();
        assert_abs_diff_eq!(l0.coeff(1, 0, 2).re, -PI * PI, epsilon = 1e-12);
        let z = SpectralField::zeros(g, Parity::None).laplacian_delta(3.0).unwrap();
        assert_eq!(z.max_abs_coeff(), 0.0);
        assert!(matches!(f.laplacian_delta(-1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn shape_mismatch() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        assert!(matches!(PhysicalField::new(g.clone(), vec![0.0; 10]), Err(Error::Shape(_))));
        let h = Grid::<f64>::new(8, 8, 4).unwrap();
        let a = SpectralField::zeros(g, Parity::None);
        let b = SpectralField::zeros(h, Parity::None);
        assert!(a.add(&b).is_err());
    }

    fn field(values: Vec<f64>) -> SpectralField<f64> {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        PhysicalField::new(g, values).unwrap().to_spectral()
    }

    fn values() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 512)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip(v in values()) {
            let f = field(v.clone());
            let back = f.to_physical();
            for (a, b) in v.iter().zip(back.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert!(f.hermitian_defect() < 1e-15);
        }

        #[test]
        fn parseval(v in values()) {
            let f = field(v);
            let q = f.to_physical().quadrature_sq();
            prop_assert!((f.l2_norm_sq() - q).abs() <= 1e-10 * q);
        }

        #[test]
        fn parity_projections_are_complementary(v in values()) {
            let f = field(v);
            let e = enforce_parity(&f, Parity::Even);
            let o = enforce_parity(&f, Parity::Odd);
            prop_assert!(enforce_parity(&e, Parity::Even).sub(&e).unwrap().max_abs_coeff() < 1e-15);
            prop_assert!(enforce_parity(&e, Parity::Odd).max_abs_coeff() < 1e-15);
            prop_assert!(enforce_parity(&o, Parity::Even).max_abs_coeff() < 1e-15);
            prop_assert!(e.add(&o).unwrap().sub(&f).unwrap().max_abs_coeff() < 1e-15);
            prop_assert_eq!(e.parity_defect(), 0.0);
            prop_assert_eq!(o.parity_defect(), 0.0);
        }

        #[test]
        fn derivative_commutes_with_parity(v in values(), order in 1u32..4) {
            let f = field(v);
            let lhs = spectral_derivative(&enforce_parity(&f, Parity::Even), Axis::Z, order);
            let want = Parity::Even.after_z_derivative(order);
            prop_assert_eq!(lhs.parity(), want);
            let rhs = enforce_parity(&spectral_derivative(&f, Axis::Z, order), want);
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs_coeff() < 1e-9);
        }

        #[test]
        fn dealias_idempotent_and_self_adjoint(a in values(), b in values()) {
            let (f, g) = (field(a), field(b));
            let d = dealias(&f);
            prop_assert_eq!(dealias(&d), d.clone());
            let lhs = d.dot(&g);
            let rhs = f.dot(&dealias(&g));
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn laplacian_is_negative_semidefinite(a in values(), b in values(), delta in 0.0f64..10.0) {
            let (f, g) = (field(a), field(b));
            let lf = laplacian_delta(&f, delta).unwrap();
            let lg = laplacian_delta(&g, delta).unwrap();
            prop_assert!(lf.dot(&f) <= 1e-12);
            let (x, y) = (lf.dot(&g), f.dot(&lg));
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn laplacian_kernel_is_the_mean() {
        let g = Grid::<f64>::new(8, 8, 8).unwrap();
        let mut kernel = 0;
        g.for_each_mode(|_, kx, ky, kz| {
            if -(kx * kx + ky * ky) - 0.5 * kz * kz == 0.0 {
                kernel += 1;
            }
        });
        assert_eq!(kernel, 1);
    }

    #[test]
    fn single_precision_round_trip() {
        let g = Grid::<f32>::new(8, 8, 8).unwrap();
        let f = PhysicalField::from_fn(g, |x, y, z| (x * 3.0).sin() * y.cos() + z);
        let back = f.to_spectral().to_physical();
        let err = f.values().iter().zip(back.values()).fold(0.0f32, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-5);
    }
}
