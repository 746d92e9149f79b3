//! Fourier multipliers on a [`Grid2D`]: derivatives, fractional powers of the
//! Laplacian, the angular derivative, Littlewood–Paley projections and
//! convolution with a sampled kernel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, SpectralField, WaveField, C64};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeKind {
    /// `D^s`, multiplier `|ξ|^s`.
    Homogeneous,
    /// `Λ^s`, multiplier `(1+|ξ|²)^{s/2}`.
    Inhomogeneous,
}

/// Multiplies the spectrum of `f` by `mult(ξ₁, ξ₂)`.
pub fn apply_multiplier(f: &WaveField, mult: impl Fn(f64, f64) -> C64) -> WaveField {
    let grid = f.grid();
    let mut coeffs = grid.dft(f.samples());
    multiply_in_place(grid, &mut coeffs, mult);
    grid.idft_normalized(&mut coeffs);
    WaveField::from_samples(grid, coeffs).expect("same grid")
}

pub(crate) fn multiply_in_place(grid: &Grid2D, coeffs: &mut [C64], mult: impl Fn(f64, f64) -> C64) {
    let n = grid.n();
    let k = grid.wavenumbers();
    for (m2, &k2) in k.iter().enumerate() {
        let row = &mut coeffs[m2 * n..(m2 + 1) * n];
        for (c, &k1) in row.iter_mut().zip(k.iter()) {
            *c *= mult(k1, k2);
        }
    }
}

/// Symbol of `∂_j` with the unpaired Nyquist mode removed.
fn derivative_symbol(grid: &Grid2D, k: f64) -> C64 {
    if (k.abs() - grid.nyquist()).abs() < 1e-9 * grid.nyquist() {
        C64::new(0.0, 0.0)
    } else {
        I * k
    }
}

pub fn spectral_derivative(f: &WaveField, axis: Axis) -> WaveField {
    let grid = f.grid().clone();
    apply_multiplier(f, |k1, k2| match axis {
        Axis::X1 => derivative_symbol(&grid, k1),
        Axis::X2 => derivative_symbol(&grid, k2),
    })
}

/// `(∂₁f, ∂₂f)` from a single forward transform.
pub fn gradient(f: &WaveField) -> (WaveField, WaveField) {
    let grid = f.grid();
    let coeffs = grid.dft(f.samples());
    gradient_from_dft(grid, &coeffs)
}

pub(crate) fn gradient_from_dft(grid: &Grid2D, coeffs: &[C64]) -> (WaveField, WaveField) {
    let mut d1 = coeffs.to_vec();
    let mut d2 = coeffs.to_vec();
    multiply_in_place(grid, &mut d1, |k1, _| derivative_symbol(grid, k1));
    multiply_in_place(grid, &mut d2, |_, k2| derivative_symbol(grid, k2));
    grid.idft_normalized(&mut d1);
    grid.idft_normalized(&mut d2);
    (
        WaveField::from_samples(grid, d1).expect("same grid"),
        WaveField::from_samples(grid, d2).expect("same grid"),
    )
}

pub fn fractional_derivative(f: &WaveField, s: f64, kind: DerivativeKind) -> Result<WaveField> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::param("s", format!("order must be finite and >= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(apply_multiplier(f, |k1, k2| {
        let k2sum = k1 * k1 + k2 * k2;
        let m = match kind {
            DerivativeKind::Homogeneous => k2sum.powf(s / 2.0),
            DerivativeKind::Inhomogeneous => (1.0 + k2sum).powf(s / 2.0),
        };
        C64::new(m, 0.0)
    }))
}

/// `∂_θ f = x₁∂₂f − x₂∂₁f`.
pub fn angular_derivative(f: &WaveField) -> WaveField {
    let (d1, d2) = gradient(f);
    angular_from_gradient(&d1, &d2)
}

pub(crate) fn angular_from_gradient(d1: &WaveField, d2: &WaveField) -> WaveField {
    let grid = d1.grid();
    let n = grid.n();
    let a = d1.samples();
    let b = d2.samples();
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..n {
        let x2 = grid.coord(i);
        for j in 0..n {
            let x1 = grid.coord(j);
            out.push(b[i * n + j] * x1 - a[i * n + j] * x2);
        }
    }
    WaveField::from_samples(grid, out).expect("same grid")
}

/// Weighted spectral energy `(2π)^{-2} Σ w(ξ)|f̂(ξ)|² Δξ²` from raw DFT coefficients.
pub(crate) fn spectral_energy(grid: &Grid2D, dft: &[C64], weight: impl Fn(f64, f64) -> f64) -> f64 {
    let n = grid.n();
    let k = grid.wavenumbers();
    let mut acc = 0.0;
    for (m2, &k2) in k.iter().enumerate() {
        let row = &dft[m2 * n..(m2 + 1) * n];
        for (c, &k1) in row.iter().zip(k.iter()) {
            acc += weight(k1, k2) * c.norm_sqr();
        }
    }
    // raw DFT coefficients are h^{-2} times the continuum ones
    acc * grid.cell_area() / grid.len() as f64
}

/// `‖∇f‖²_{L²}` via Parseval.
pub fn grad_norm_sqr(f: &WaveField) -> f64 {
    let grid = f.grid();
    let dft = grid.dft(f.samples());
    spectral_energy(grid, &dft, |k1, k2| k1 * k1 + k2 * k2)
}

/// `‖Λ^s f‖_{L²}`; `s = 1` is the `H¹` norm.
pub fn sobolev_norm(f: &WaveField, s: f64) -> f64 {
    let grid = f.grid();
    let dft = grid.dft(f.samples());
    spectral_energy(grid, &dft, |k1, k2| (1.0 + k1 * k1 + k2 * k2).powf(s)).sqrt()
}

/// Fraction of spectral energy in the top octave (`max(|m₁|,|m₂|) ≥ n/4`).
pub fn tail_fraction(f: &WaveField) -> f64 {
    let grid = f.grid();
    let dft = grid.dft(f.samples());
    tail_fraction_from_dft(grid, &dft)
}

pub(crate) fn tail_fraction_from_dft(grid: &Grid2D, dft: &[C64]) -> f64 {
    let n = grid.n();
    let quarter = (n / 4) as i64;
    let mut total = 0.0;
    let mut tail = 0.0;
    for m2 in 0..n {
        let s2 = grid.signed_index(m2).abs();
        for m1 in 0..n {
            let e = dft[m2 * n + m1].norm_sqr();
            total += e;
            if s2 >= quarter || grid.signed_index(m1).abs() >= quarter {
                tail += e;
            }
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// Zeroes the modes outside the 2/3 box in transform order.
pub(crate) fn dealias_in_place(grid: &Grid2D, coeffs: &mut [C64]) {
    let n = grid.n();
    let cut = (n / 3) as i64;
    for m2 in 0..n {
        let s2 = grid.signed_index(m2).abs();
        for m1 in 0..n {
            if s2 > cut || grid.signed_index(m1).abs() > cut {
                coeffs[m2 * n + m1] = C64::new(0.0, 0.0);
            }
        }
    }
}

/// Continuum convolution `ψ ∗ f` realized as `F^{-1}(ψ̂ f̂)`.
pub fn convolve(f: &WaveField, psi: &WaveField) -> Result<WaveField> {
    f.grid().check_same(psi.grid())?;
    let mut fh = SpectralField::forward(f);
    let ph = SpectralField::forward(psi);
    for (a, b) in fh.coeffs_mut().iter_mut().zip(ph.coeffs()) {
        *a *= b;
    }
    Ok(fh.inverse())
}

/// Cutoff `χ`: 1 on `[0, inner]`, raised cosine down to 0 at `r = 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub inner: f64,
}

impl Default for BumpProfile {
    fn default() -> Self {
        Self { inner: 1.0 }
    }
}

impl BumpProfile {
    pub fn cutoff(&self, r: f64) -> f64 {
        if r <= self.inner {
            1.0
        } else if r >= 2.0 {
            0.0
        } else {
            let u = (r - self.inner) / (2.0 - self.inner);
            0.5 * (1.0 + (std::f64::consts::PI * u).cos())
        }
    }
}

/// One Littlewood–Paley block `β_N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadicBand {
    pub level: u64,
    pub profile: BumpProfile,
}

impl DyadicBand {
    pub fn new(level: u64) -> Result<Self> {
        if level == 0 || !level.is_power_of_two() {
            return Err(Error::param("N", format!("dyadic level must be 1, 2, 4, …; got {level}")));
        }
        Ok(Self {
            level,
            profile: BumpProfile::default(),
        })
    }

    /// `β_N(|ξ|)`: `χ(|ξ|)` for `N = 1`, else `χ(|ξ|/N) − χ(2|ξ|/N)`.
    pub fn weight(&self, abs_xi: f64) -> f64 {
        let n = self.level as f64;
        if self.level == 1 {
            self.profile.cutoff(abs_xi)
        } else {
            self.profile.cutoff(abs_xi / n) - self.profile.cutoff(2.0 * abs_xi / n)
        }
    }

    /// Smallest `|ξ|` where the block can be nonzero.
    pub fn lower_edge(&self) -> f64 {
        if self.level == 1 {
            0.0
        } else {
            self.level as f64 * self.profile.inner / 2.0
        }
    }
}

/// Largest `|ξ|` present on the grid (box corner).
pub fn max_grid_frequency(grid: &Grid2D) -> f64 {
    std::f64::consts::SQRT_2 * grid.nyquist()
}

/// Dyadic levels whose blocks meet the grid's frequency lattice; their sum is 1 everywhere on it.
pub fn dyadic_levels(grid: &Grid2D) -> Vec<u64> {
    let kmax = max_grid_frequency(grid);
    let mut levels = vec![1u64];
    let mut n = 2u64;
    while (n as f64) / 2.0 < kmax {
        levels.push(n);
        n *= 2;
    }
    levels
}

#[derive(Clone, Debug)]
pub struct LpProjection {
    pub field: WaveField,
    /// Set when the block lies entirely above the grid's frequencies.
    pub beyond_nyquist: bool,
}

pub fn littlewood_paley(f: &WaveField, band: &DyadicBand) -> LpProjection {
    if band.lower_edge() >= max_grid_frequency(f.grid()) {
        return LpProjection {
            field: WaveField::zeros(f.grid()),
            beyond_nyquist: true,
        };
    }
    let field = apply_multiplier(f, |k1, k2| C64::new(band.weight((k1 * k1 + k2 * k2).sqrt()), 0.0));
    LpProjection {
        field,
        beyond_nyquist: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gauss(g: &Grid2D, a: f64) -> WaveField {
        WaveField::from_real_fn(g, |x, y| (-a * (x * x + y * y)).exp())
    }

    #[test]
    fn plane_wave_derivative() {
        let g = Grid2D::new(32, PI).unwrap();
        let k = 3.0;
        let f = WaveField::from_fn(&g, |x, _| C64::new(0.0, k * x).exp());
        let d = spectral_derivative(&f, Axis::X1);
        let want = f.scaled(I * k);
        assert!(d.sub(&want).unwrap().max_abs() < 1e-12);
        let d2 = spectral_derivative(&f, Axis::X2);
        assert!(d2.max_abs() < 1e-12);
    }

    #[test]
    fn constant_has_zero_derivative() {
        let g = Grid2D::new(16, 2.0).unwrap();
        let f = WaveField::from_real_fn(&g, |_, _| 1.7);
        assert!(spectral_derivative(&f, Axis::X1).max_abs() < 1e-13);
        assert!(angular_derivative(&f).max_abs() < 1e-12);
    }

    #[test]
    fn gaussian_derivative_pointwise() {
        let g = Grid2D::new(256, 12.0).unwrap();
        let f = WaveField::from_real_fn(&g, |x, y| (-(x * x + y * y) / 2.0).exp());
        let d = spectral_derivative(&f, Axis::X1);
        let want = WaveField::from_real_fn(&g, |x, y| -x * (-(x * x + y * y) / 2.0).exp());
        assert!(d.sub(&want).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn fractional_on_plane_waves() {
        let g = Grid2D::new(32, PI).unwrap();
        let f = WaveField::from_fn(&g, |x, _| C64::new(0.0, 2.0 * x).exp());
        let same = fractional_derivative(&f, 0.0, DerivativeKind::Homogeneous).unwrap();
        assert!(same.sub(&f).unwrap().max_abs() == 0.0);
        let d2 = fractional_derivative(&f, 2.0, DerivativeKind::Homogeneous).unwrap();
        assert!(d2.sub(&f.scaled(C64::new(4.0, 0.0))).unwrap().max_abs() < 1e-12);
        let d13 = fractional_derivative(&f, 1.0 / 3.0, DerivativeKind::Homogeneous).unwrap();
        let want = f.scaled(C64::new(2f64.powf(1.0 / 3.0), 0.0));
        assert!(d13.sub(&want).unwrap().max_abs() < 1e-12);
        assert!(fractional_derivative(&f, -0.5, DerivativeKind::Homogeneous).is_err());
    }

    #[test]
    fn angular_derivative_examples() {
        let g = Grid2D::new(128, 8.0).unwrap();
        let radial = gauss(&g, 1.0);
        assert!(angular_derivative(&radial).max_abs() <= 1e-8 * radial.max_abs());

        let mode1 = WaveField::from_fn(&g, |x, y| C64::new(x, y) * (-(x * x + y * y)).exp());
        let d = angular_derivative(&mode1);
        assert!(d.sub(&mode1.scaled(I)).unwrap().max_abs() < 1e-10);

        let x1 = WaveField::from_real_fn(&g, |x, y| x * (-(x * x + y * y)).exp());
        let want = WaveField::from_real_fn(&g, |x, y| -y * (-(x * x + y * y)).exp());
        assert!(angular_derivative(&x1).sub(&want).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn bump_partition_of_unity_on_grid() {
        let g = Grid2D::new(64, 5.0).unwrap();
        let levels = dyadic_levels(&g);
        for &k2 in g.wavenumbers() {
            for &k1 in g.wavenumbers() {
                let r = (k1 * k1 + k2 * k2).sqrt();
                let s: f64 = levels.iter().map(|&n| DyadicBand::new(n).unwrap().weight(r)).sum();
                assert!((s - 1.0).abs() < 1e-14, "sum {s} at |ξ| = {r}");
            }
        }
    }

    #[test]
    fn plane_wave_bands() {
        // |ξ| = 3 lies in the supports of β₂ = (1,4) and β₄ = (2,8) only
        let g = Grid2D::new(64, 2.0 * PI).unwrap();
        let f = WaveField::from_fn(&g, |x, _| C64::new(0.0, 3.0 * x).exp());
        for n in dyadic_levels(&g) {
            let p = littlewood_paley(&f, &DyadicBand::new(n).unwrap()).field;
            let nonzero = p.max_abs() > 1e-12;
            assert_eq!(nonzero, n == 2 || n == 4, "level {n}");
        }
    }

    #[test]
    fn constant_lives_in_first_band() {
        let g = Grid2D::new(32, 4.0).unwrap();
        let f = WaveField::from_real_fn(&g, |_, _| 2.0);
        let p1 = littlewood_paley(&f, &DyadicBand::new(1).unwrap()).field;
        assert!(p1.sub(&f).unwrap().max_abs() < 1e-13);
        let p2 = littlewood_paley(&f, &DyadicBand::new(2).unwrap()).field;
        assert!(p2.max_abs() < 1e-13);
    }

    #[test]
    fn bands_beyond_grid_are_flagged() {
        let g = Grid2D::new(16, 8.0).unwrap();
        let f = gauss(&g, 0.5);
        let p = littlewood_paley(&f, &DyadicBand::new(64).unwrap());
        assert!(p.beyond_nyquist);
        assert_eq!(p.field.max_abs(), 0.0);
    }

    #[test]
    fn lp_sum_reconstructs() {
        let g = Grid2D::new(128, 8.0).unwrap();
        let f = WaveField::from_fn(&g, |x, y| {
            C64::new(x, 0.5 * y) * (-(x * x + y * y) / 1.5).exp() * C64::new(0.0, 0.7 * x).exp()
        });
        let mut acc = WaveField::zeros(&g);
        for n in dyadic_levels(&g) {
            let p = littlewood_paley(&f, &DyadicBand::new(n).unwrap()).field;
            acc = acc.axpy(C64::new(1.0, 0.0), &p).unwrap();
        }
        assert!(acc.sub(&f).unwrap().norm_l2() / f.norm_l2() < 1e-10);
    }

    #[test]
    fn lp_almost_orthogonality_bounds() {
        // pointwise Σβ_N² ∈ [1/2, 1] for the telescoped raised cosine
        let g = Grid2D::new(128, 8.0).unwrap();
        let f = WaveField::from_real_fn(&g, |x, y| (-(x * x + y * y) / 0.2).exp());
        let total = f.norm_sqr();
        let s: f64 = dyadic_levels(&g)
            .into_iter()
            .map(|n| littlewood_paley(&f, &DyadicBand::new(n).unwrap()).field.norm_sqr())
            .sum();
        let ratio = s / total;
        assert!((0.5..=1.0 + 1e-12).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn radial_convolution_commutes_with_angular_derivative() {
        let g = Grid2D::new(128, 10.0).unwrap();
        let psi = gauss(&g, 2.0);
        let f = WaveField::from_fn(&g, |x, y| {
            C64::new(1.0 + x, y * y) * (-((x - 1.0).powi(2) + (y + 0.5).powi(2)) / 2.0).exp()
        });
        let lhs = angular_derivative(&convolve(&f, &psi).unwrap());
        let rhs = convolve(&angular_derivative(&f), &psi).unwrap();
        let rel = lhs.sub(&rhs).unwrap().norm_l2() / lhs.norm_l2();
        assert!(rel < 1e-8, "rel {rel}");
    }
}
