//! Periodic Fourier spectral grid on `[-a, a]^d`.
//!
//! Fields are stored row-major over the axes (last axis contiguous). Spectral
//! coefficients use standard FFT frequency ordering per axis,
//! `m = 0, 1, ..., M1/2 - 1, -M1/2, ..., -1`, and are scaled so that the
//! normalised Fourier function `(2a)^{-d/2} exp(i pi m (x/a + 1))` has a unit
//! coefficient. Under that scaling the discrete Parseval identity reads
//! `sum |v_j|^2 dx^d = sum |c_m|^2`.
//!
//! Derivatives of the state are exact for every trigonometric polynomial on
//! the grid. The first-derivative multiplier of the Nyquist mode is zero so
//! that gradients of real fields stay real; the Laplacian keeps the full
//! eigenvalue `-pi^2 |m|^2 / a^2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

pub const MAX_DIM: usize = 3;
pub const MIN_POINTS_PER_DIM: usize = 8;

#[derive(Clone)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points_per_dim: usize,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    laplacian_eigs: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("half_width", &self.half_width)
            .field("points_per_dim", &self.points_per_dim)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.half_width == other.half_width && self.points_per_dim == other.points_per_dim
    }
}

/// Builds the tensor grid `[-a, a]^d` with `points_per_dim` nodes per axis.
pub fn build_grid(dim: usize, half_width: f64, points_per_dim: usize) -> Result<Arc<Grid>> {
    Grid::new(dim, half_width, points_per_dim).map(Arc::new)
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_dim: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return invalid(format!("dimension must be 1, 2 or 3, got {dim}"));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return invalid(format!("half width must be positive, got {half_width}"));
        }
        if points_per_dim < MIN_POINTS_PER_DIM || !points_per_dim.is_multiple_of(2) {
            return invalid(format!(
                "points per dimension must be even and at least {MIN_POINTS_PER_DIM}, got {points_per_dim}"
            ));
        }
        let n = points_per_dim;
        let dx = 2.0 * half_width / n as f64;
        let nodes = (0..n).map(|j| -half_width + j as f64 * dx).collect();

        let wavenumbers = (0..n)
            .map(|j| {
                let m = frequency(j, n);
                if m == -(n as i64) / 2 {
                    0.0
                } else {
                    PI * m as f64 / half_width
                }
            })
            .collect();

        let axis_eigs: Vec<f64> = (0..n)
            .map(|j| {
                let k = PI * frequency(j, n) as f64 / half_width;
                -k * k
            })
            .collect();
        let total = n.pow(dim as u32);
        let laplacian_eigs = (0..total)
            .map(|flat| (0..dim).map(|axis| axis_eigs[axis_index(flat, axis, dim, n)]).sum())
            .collect();

        let mut planner = FftPlanner::new();
        Ok(Self {
            dim,
            half_width,
            points_per_dim: n,
            nodes,
            wavenumbers,
            laplacian_eigs,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    /// Total number of grid points `M1^d`.
    pub fn len(&self) -> usize {
        self.laplacian_eigs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laplacian_eigs.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_dim as f64
    }

    /// Quadrature weight `dx^d` of the periodic trapezoidal rule.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Per-axis node coordinates `x_j = -a + j dx`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Per-axis first-derivative factors `mu_m / i = pi m / a`, Nyquist zeroed.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Laplacian eigenvalues `-pi^2 |m|^2 / a^2` over the full tensor index set.
    pub fn laplacian_eigs(&self) -> &[f64] {
        &self.laplacian_eigs
    }

    /// Index along `axis` of the flat row-major index `flat`.
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        axis_index(flat, axis, self.dim, self.points_per_dim)
    }

    /// Coordinate along `axis` of the node with flat index `flat`.
    pub fn coordinate(&self, flat: usize, axis: usize) -> f64 {
        self.nodes[self.axis_index(flat, axis)]
    }

    /// Coordinates of the node `flat`; unused trailing entries are zero.
    pub fn point(&self, flat: usize) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for (axis, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.coordinate(flat, axis);
        }
        x
    }

    /// Flat index of the (signed) multi-frequency `m`.
    pub fn mode_index(&self, m: &[i64]) -> Result<usize> {
        if m.len() != self.dim {
            return invalid(format!("mode has {} components, grid has {}", m.len(), self.dim));
        }
        let n = self.points_per_dim as i64;
        let mut flat = 0usize;
        for &mk in m {
            if mk < -n / 2 || mk >= n / 2 {
                return invalid(format!("frequency {mk} outside the truncated index set"));
            }
            flat = flat * self.points_per_dim + mk.rem_euclid(n) as usize;
        }
        Ok(flat)
    }

    /// Signed frequency of `flat` along `axis`.
    pub fn frequency(&self, flat: usize, axis: usize) -> i64 {
        frequency(self.axis_index(flat, axis), self.points_per_dim)
    }

    /// Unnormalised multi-dimensional DFT in place.
    pub(crate) fn fft_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse DFT in place, including the `1/M` normalisation.
    pub(crate) fn ifft_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.points_per_dim;
        let total = self.len();
        assert_eq!(data.len(), total, "field length does not match grid");
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let lines = total / n;
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let mut buf = vec![Complex64::default(); total];
            for line in 0..lines {
                let start = line_start(line, stride, n);
                for j in 0..n {
                    buf[line * n + j] = data[start + j * stride];
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for line in 0..lines {
                let start = line_start(line, stride, n);
                for j in 0..n {
                    data[start + j * stride] = buf[line * n + j];
                }
            }
        }
    }

    /// Multiplies the DFT of `values` by `multiplier(flat)` and transforms back.
    pub(crate) fn apply_multiplier<F>(&self, values: &[Complex64], multiplier: F) -> Vec<Complex64>
    where
        F: Fn(usize) -> Complex64,
    {
        let mut buf = values.to_vec();
        self.fft_in_place(&mut buf);
        buf.iter_mut().enumerate().for_each(|(flat, z)| *z *= multiplier(flat));
        self.ifft_in_place(&mut buf);
        buf
    }

    /// Gradient and Laplacian from one forward and `d + 1` inverse transforms.
    pub(crate) fn derivatives(&self, values: &[Complex64]) -> Derivatives {
        let mut hat = values.to_vec();
        self.fft_in_place(&mut hat);
        let gradient = (0..self.dim)
            .map(|axis| {
                let mut buf: Vec<Complex64> = hat
                    .iter()
                    .enumerate()
                    .map(|(flat, z)| z * Complex64::new(0.0, self.wavenumbers[self.axis_index(flat, axis)]))
                    .collect();
                self.ifft_in_place(&mut buf);
                buf
            })
            .collect();
        let mut laplacian: Vec<Complex64> = hat.iter().zip(&self.laplacian_eigs).map(|(z, lam)| z * lam).collect();
        self.ifft_in_place(&mut laplacian);
        Derivatives { gradient, laplacian }
    }

    /// Gradient only: one forward and `d` inverse transforms.
    pub(crate) fn gradient_values(&self, values: &[Complex64]) -> Vec<Vec<Complex64>> {
        let mut hat = values.to_vec();
        self.fft_in_place(&mut hat);
        (0..self.dim)
            .map(|axis| {
                let mut buf: Vec<Complex64> = hat
                    .iter()
                    .enumerate()
                    .map(|(flat, z)| z * Complex64::new(0.0, self.wavenumbers[self.axis_index(flat, axis)]))
                    .collect();
                self.ifft_in_place(&mut buf);
                buf
            })
            .collect()
    }

    pub(crate) fn laplacian_values(&self, values: &[Complex64]) -> Vec<Complex64> {
        self.apply_multiplier(values, |flat| Complex64::from(self.laplacian_eigs[flat]))
    }
}

/// Spectral derivatives of one state, sharing a single forward transform.
#[derive(Clone, Debug)]
pub(crate) struct Derivatives {
    pub gradient: Vec<Vec<Complex64>>,
    pub laplacian: Vec<Complex64>,
}

fn frequency(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn axis_index(flat: usize, axis: usize, dim: usize, n: usize) -> usize {
    (flat / n.pow((dim - 1 - axis) as u32)) % n
}

// First flat index of the `line`-th 1D line running with the given stride.
fn line_start(line: usize, stride: usize, n: usize) -> usize {
    (line / stride) * stride * n + line % stride
}

fn check_len(grid: &Grid, len: usize) -> Result<()> {
    if len != grid.len() {
        return invalid(format!("field has {len} values, grid has {}", grid.len()));
    }
    Ok(())
}

/// Complex node values on a grid. Houses both Schroedinger and parabolic states.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![Complex64::default(); grid.len()];
        Self { grid, values }
    }

    /// Evaluates `f` at every node; `f` receives the node coordinates (length `d`).
    pub fn from_fn<F>(grid: Arc<Grid>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let dim = grid.dim();
        let values = (0..grid.len()).map(|flat| f(&grid.point(flat)[..dim])).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub(crate) fn with_values(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        self.with_values(self.values.iter().map(|&z| f(z)).collect())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map(|z| z * factor)
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: Complex64, other: &ComplexField) -> Result<Self> {
        self.ensure_same_grid(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + factor * b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.add_scaled(Complex64::new(-1.0, 0.0), other)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest absolute imaginary part; the realness diagnostic for parabolic states.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn re(&self) -> RealField {
        RealField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|z| z.re).collect(),
        }
    }

    pub fn ensure_same_grid(&self, other: &ComplexField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            invalid("fields live on different grids")
        }
    }
}

/// Real node values on a grid (potentials, their derivatives, phase fields).
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        Ok(Self { grid, values })
    }

    pub fn from_fn<F>(grid: Arc<Grid>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64,
    {
        let dim = grid.dim();
        let values = (0..grid.len()).map(|flat| f(&grid.point(flat)[..dim])).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        let values = vec![value; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&x| Complex64::from(x)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Spectral coefficients of a field, in FFT frequency order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, coeffs.len())?;
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of the multi-frequency `m`.
    pub fn coeff(&self, m: &[i64]) -> Result<Complex64> {
        Ok(self.coeffs[self.grid.mode_index(m)?])
    }
}

fn coefficient_scale(grid: &Grid) -> f64 {
    (2.0 * grid.half_width()).powf(grid.dim() as f64 / 2.0) / grid.len() as f64
}

pub fn to_spectral(field: &ComplexField) -> Spectrum {
    let grid = Arc::clone(field.grid());
    let mut coeffs = field.values().to_vec();
    grid.fft_in_place(&mut coeffs);
    let scale = coefficient_scale(&grid);
    coeffs.iter_mut().for_each(|z| *z *= scale);
    Spectrum { grid, coeffs }
}

pub fn from_spectral(spectrum: &Spectrum) -> ComplexField {
    let grid = Arc::clone(spectrum.grid());
    let mut values = spectrum.coeffs().to_vec();
    grid.ifft_in_place(&mut values);
    let scale = 1.0 / coefficient_scale(&grid);
    values.iter_mut().for_each(|z| *z *= scale);
    ComplexField { grid, values }
}

/// The `d` components of the spectral gradient.
pub fn spectral_gradient(field: &ComplexField) -> Vec<ComplexField> {
    field
        .grid()
        .gradient_values(field.values())
        .into_iter()
        .map(|values| field.with_values(values))
        .collect()
}

pub fn spectral_laplacian(field: &ComplexField) -> ComplexField {
    field.with_values(field.grid().laplacian_values(field.values()))
}
