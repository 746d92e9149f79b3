//! Cartesian discretization of the plane and the sampled fields living on it.
//!
//! The box is `[-L, L)²` with `n` samples per axis, sample `(i, j)` sitting at
//! `x₁ = -L + j·h`, `x₂ = -L + i·h` (row index is `x₂`). Fields are periodic
//! on the box; every physical computation assumes they decay well before the
//! edge.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Uniform `n × n` grid on `[-L, L)²` with its discrete wavenumbers.
#[derive(Clone)]
pub struct Grid2D {
    n: usize,
    half_width: f64,
    h: f64,
    k: Arc<[f64]>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("n", &self.n)
            .field("half_width", &self.half_width)
            .field("h", &self.h)
            .finish()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }
}

impl Grid2D {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 16"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half-width L = {half_width} must be positive and finite"
            )));
        }
        let h = 2.0 * half_width / n as f64;
        let dk = std::f64::consts::PI / half_width;
        let k: Arc<[f64]> = (0..n)
            .map(|m| {
                let signed = if m < n / 2 { m as i64 } else { m as i64 - n as i64 };
                dk * signed as f64
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self {
            n,
            half_width,
            h,
            k,
            fwd,
            inv,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `L`, half the side length of the box.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis wavenumbers in transform order (`0, 1, …, n/2-1, -n/2, …, -1` times `π/L`).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Spacing of the frequency lattice, `π/L`.
    pub fn frequency_step(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Largest per-axis frequency magnitude, `πn/(2L)`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * self.n as f64 / (2.0 * self.half_width)
    }

    /// Physical coordinate of sample index `idx` along either axis.
    pub fn coord(&self, idx: usize) -> f64 {
        -self.half_width + idx as f64 * self.h
    }

    /// Signed frequency index of transform slot `m`.
    pub fn signed_index(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Applies an unnormalized 2D DFT in place (forward: `e^{-i…}`).
    pub(crate) fn fft2(&self, data: &mut [C64], inverse: bool) {
        debug_assert_eq!(data.len(), self.len());
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, self.n);
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, self.n);
    }

    /// Raw forward DFT of a sample buffer.
    pub(crate) fn dft(&self, samples: &[C64]) -> Vec<C64> {
        let mut out = samples.to_vec();
        self.fft2(&mut out, false);
        out
    }

    /// Inverse DFT including the `1/n²` normalization.
    pub(crate) fn idft_normalized(&self, coeffs: &mut [C64]) {
        self.fft2(coeffs, true);
        let norm = 1.0 / self.len() as f64;
        for c in coeffs.iter_mut() {
            *c *= norm;
        }
    }

    pub(crate) fn check_same(&self, other: &Grid2D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "n = {}, L = {} vs n = {}, L = {}",
                self.n, self.half_width, other.n, other.half_width
            )))
        }
    }
}

fn transpose_square(data: &mut [C64], n: usize) {
    const BLOCK: usize = 32;
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + BLOCK).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Complex samples of a field on a [`Grid2D`], row-major with rows along `x₂`.
#[derive(Clone, Debug)]
pub struct WaveField {
    grid: Grid2D,
    data: Vec<C64>,
}

impl WaveField {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> C64) -> Self {
        let n = grid.n();
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x2 = grid.coord(i);
            for j in 0..n {
                data.push(f(grid.coord(j), x2));
            }
        }
        Self {
            grid: grid.clone(),
            data,
        }
    }

    pub fn from_real_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |x1, x2| C64::new(f(x1, x2), 0.0))
    }

    pub fn from_samples(grid: &Grid2D, data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            data,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.data
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.grid.n() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Visits every sample together with its physical coordinates.
    pub fn for_each_point(&self, mut f: impl FnMut(f64, f64, C64)) {
        let n = self.grid.n();
        for i in 0..n {
            let x2 = self.grid.coord(i);
            let row = &self.data[i * n..(i + 1) * n];
            for (j, &z) in row.iter().enumerate() {
                f(self.grid.coord(j), x2, z);
            }
        }
    }

    /// Grid quadrature `h² Σ g(x, u(x))`.
    pub fn integrate(&self, mut g: impl FnMut(f64, f64, C64) -> f64) -> f64 {
        let mut acc = 0.0;
        self.for_each_point(|x1, x2, z| acc += g(x1, x2, z));
        acc * self.grid.cell_area()
    }

    pub fn map(&self, f: impl Fn(f64, f64, C64) -> C64) -> WaveField {
        let n = self.grid.n();
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..n {
            let x2 = self.grid.coord(i);
            for j in 0..n {
                data.push(f(self.grid.coord(j), x2, self.data[i * n + j]));
            }
        }
        WaveField {
            grid: self.grid.clone(),
            data,
        }
    }

    pub fn scaled(&self, s: C64) -> WaveField {
        WaveField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: C64, other: &WaveField) -> Result<WaveField> {
        self.grid.check_same(&other.grid)?;
        Ok(WaveField {
            grid: self.grid.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + s * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &WaveField) -> Result<WaveField> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// `∫ |u|² dx` by grid quadrature.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `‖u‖_{L^p}` by grid quadrature (`p = ∞` gives the grid maximum).
    pub fn norm_lp(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let s: f64 = self.data.iter().map(|z| z.norm().powf(p)).sum();
        (s * self.grid.cell_area()).powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `∫ u v̄ dx`.
    pub fn inner(&self, other: &WaveField) -> Result<C64> {
        self.grid.check_same(&other.grid)?;
        let s: C64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell_area())
    }
}

/// Fourier coefficients approximating `F(f)(ξ) = ∫ e^{-ix·ξ} f(x) dx` on the
/// grid's frequency lattice (transform order).
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid2D,
    coeffs: Vec<C64>,
}

fn parity_sign(grid: &Grid2D, m1: usize, m2: usize) -> f64 {
    // sample x = -L + jh contributes e^{ikL} = (-1)^m relative to the raw DFT
    if (grid.signed_index(m1) + grid.signed_index(m2)).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

impl SpectralField {
    pub fn forward(f: &WaveField) -> SpectralField {
        let grid = f.grid().clone();
        let mut coeffs = grid.dft(f.samples());
        let n = grid.n();
        let area = grid.cell_area();
        for m2 in 0..n {
            for m1 in 0..n {
                coeffs[m2 * n + m1] *= area * parity_sign(&grid, m1, m2);
            }
        }
        SpectralField { grid, coeffs }
    }

    pub fn inverse(&self) -> WaveField {
        let n = self.grid.n();
        let inv_area = 1.0 / self.grid.cell_area();
        let mut data = self.coeffs.clone();
        for m2 in 0..n {
            for m1 in 0..n {
                data[m2 * n + m1] *= inv_area * parity_sign(&self.grid, m1, m2);
            }
        }
        self.grid.idft_normalized(&mut data);
        WaveField {
            grid: self.grid.clone(),
            data,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Coefficients indexed `[m₂·n + m₁]` in transform order.
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// `(2π)^{-2} ∫ |f̂|² dξ` by lattice quadrature; equals `‖f‖²_{L²}`.
    pub fn norm_sqr(&self) -> f64 {
        let dk = self.grid.frequency_step();
        let s: f64 = self.coeffs.iter().map(|z| z.norm_sqr()).sum();
        s * dk * dk / (4.0 * std::f64::consts::PI * std::f64::consts::PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_arithmetic() {
        let g = Grid2D::new(16, 8.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert!((g.nyquist() - PI).abs() < 1e-15);
        let g = Grid2D::new(256, 12.0).unwrap();
        assert_eq!(g.spacing(), 3.0 / 32.0);
        assert_eq!(g.spacing() * g.n() as f64, 24.0);
        let kmax = g.wavenumbers().iter().fold(0.0f64, |a, &k| a.max(k.abs()));
        assert!((kmax - PI * 256.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid2D::new(100, 5.0).is_err());
        assert!(Grid2D::new(8, 5.0).is_err());
        assert!(Grid2D::new(64, 0.0).is_err());
        assert!(Grid2D::new(64, -1.0).is_err());
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = Grid2D::new(64, 6.0).unwrap();
        let f = WaveField::from_fn(&g, |x, y| {
            C64::new((-(x * x + y * y) / 2.0).exp(), 0.3 * x * (-(x * x + 2.0 * y * y)).exp())
        });
        let s = SpectralField::forward(&f);
        let back = s.inverse();
        let err = back.sub(&f).unwrap().norm_l2() / f.norm_l2();
        assert!(err < 1e-12, "round trip {err}");
        let rel = (s.norm_sqr() - f.norm_sqr()).abs() / f.norm_sqr();
        assert!(rel < 1e-12, "parseval {rel}");
    }

    #[test]
    fn gaussian_transform_matches_continuum() {
        // F(e^{-|x|²/2})(ξ) = 2π e^{-|ξ|²/2}
        let g = Grid2D::new(64, 10.0).unwrap();
        let f = WaveField::from_real_fn(&g, |x, y| (-(x * x + y * y) / 2.0).exp());
        let s = SpectralField::forward(&f);
        let n = g.n();
        for (m2, &k2) in g.wavenumbers().iter().enumerate().take(6) {
            for (m1, &k1) in g.wavenumbers().iter().enumerate().take(6) {
                let want = 2.0 * PI * (-(k1 * k1 + k2 * k2) / 2.0).exp();
                let got = s.coeffs()[m2 * n + m1];
                assert!((got.re - want).abs() < 1e-10 && got.im.abs() < 1e-10);
            }
        }
    }
}
