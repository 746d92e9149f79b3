//! Functionals evaluated on solutions: conserved quantities, virial and
//! pseudo-conformal quantities, angular Sobolev norms, polar mixed norms and
//! the scattering correlation used in the non-scattering argument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::CoefficientField;
use crate::grid::{WaveField, C64};
use crate::polar::{to_polar, PolarGrid};
use crate::spectral::{
    angular_derivative, angular_from_gradient, dyadic_levels, gradient_from_dft, littlewood_paley, sobolev_norm,
    spectral_energy, tail_fraction_from_dft, DyadicBand,
};

/// Radius fraction beyond which mass counts as boundary mass.
pub const BOUNDARY_RADIUS_FRACTION: f64 = 0.8;

/// One row of the diagnostic time series, in CSV column order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub dilation_a: f64,
    pub variance: f64,
    pub potential_v: f64,
    pub grad_norm: f64,
    pub h_theta_11: f64,
    pub tail_fraction: f64,
    pub boundary_mass_fraction: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 10] = [
        "t",
        "mass",
        "energy",
        "dilation_A",
        "variance",
        "potential_V",
        "grad_norm",
        "h_theta_11",
        "tail_fraction",
        "boundary_mass_fraction",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.mass,
            self.energy,
            self.dilation_a,
            self.variance,
            self.potential_v,
            self.grad_norm,
            self.h_theta_11,
            self.tail_fraction,
            self.boundary_mass_fraction,
        ]
    }

    pub fn from_values(v: [f64; 10]) -> Self {
        Self {
            t: v[0],
            mass: v[1],
            energy: v[2],
            dilation_a: v[3],
            variance: v[4],
            potential_v: v[5],
            grad_norm: v[6],
            h_theta_11: v[7],
            tail_fraction: v[8],
            boundary_mass_fraction: v[9],
        }
    }
}

/// Evaluates every column of [`DiagnosticsRecord`] with shared transforms.
pub fn record(t: f64, u: &WaveField, k1: &CoefficientField, k2: &CoefficientField) -> DiagnosticsRecord {
    let grid = u.grid();
    let dft = grid.dft(u.samples());
    let grad_sq = spectral_energy(grid, &dft, |a, b| a * a + b * b);
    let mass = u.norm_sqr();
    let (d1, d2) = gradient_from_dft(grid, &dft);
    let dtheta = angular_from_gradient(&d1, &d2);
    let h1 = (mass + grad_sq).sqrt();
    let potential = potential_v(u, k1, k2);
    DiagnosticsRecord {
        t,
        mass,
        energy: 0.5 * grad_sq + potential,
        dilation_a: dilation_from_gradient(u, &d1, &d2),
        variance: variance(u),
        potential_v: potential,
        grad_norm: grad_sq.sqrt(),
        h_theta_11: h1 + sobolev_norm(&dtheta, 1.0),
        tail_fraction: tail_fraction_from_dft(grid, &dft),
        boundary_mass_fraction: boundary_mass_fraction(u),
    }
}

/// `m(u) = ‖u‖²_{L²}`.
pub fn mass(u: &WaveField) -> f64 {
    u.norm_sqr()
}

pub fn grad_norm(u: &WaveField) -> f64 {
    crate::spectral::grad_norm_sqr(u).sqrt()
}

/// `¼∫K₁|u|⁴ + ⅙∫K₂|u|⁶` with the actual (signed, capped) fields.
pub fn potential_v(u: &WaveField, k1: &CoefficientField, k2: &CoefficientField) -> f64 {
    if k1.is_zero() && k2.is_zero() {
        return 0.0;
    }
    u.integrate(|x1, x2, z| {
        let m = z.norm_sqr();
        let r = x1.hypot(x2);
        0.25 * k1.value_at_radius(r) * m * m + k2.value_at_radius(r) * m * m * m / 6.0
    })
}

/// `E(u) = ½‖∇u‖² + ¼∫K₁|u|⁴ + ⅙∫K₂|u|⁶`.
pub fn energy(u: &WaveField, k1: &CoefficientField, k2: &CoefficientField) -> f64 {
    0.5 * crate::spectral::grad_norm_sqr(u) + potential_v(u, k1, k2)
}

fn dilation_from_gradient(u: &WaveField, d1: &WaveField, d2: &WaveField) -> f64 {
    let grid = u.grid();
    let n = grid.n();
    let (s, a, b) = (u.samples(), d1.samples(), d2.samples());
    let mut acc = 0.0;
    for i in 0..n {
        let x2 = grid.coord(i);
        for j in 0..n {
            let idx = i * n + j;
            let x1 = grid.coord(j);
            acc += (s[idx].conj() * (a[idx] * x1 + b[idx] * x2)).im;
        }
    }
    acc * grid.cell_area()
}

/// `𝒜(u) = Im∫ū (x·∇u)`.
pub fn dilation_a(u: &WaveField) -> f64 {
    let grid = u.grid();
    let dft = grid.dft(u.samples());
    let (d1, d2) = gradient_from_dft(grid, &dft);
    dilation_from_gradient(u, &d1, &d2)
}

/// `‖|x|u‖²_{L²}` on the box.
pub fn variance(u: &WaveField) -> f64 {
    u.integrate(|x1, x2, z| (x1 * x1 + x2 * x2) * z.norm_sqr())
}

/// Fraction of the mass located in `|x| > 0.8L`.
pub fn boundary_mass_fraction(u: &WaveField) -> f64 {
    let total = u.norm_sqr();
    if total == 0.0 {
        return 0.0;
    }
    let r0 = BOUNDARY_RADIUS_FRACTION * u.grid().half_width();
    let outer = u.integrate(|x1, x2, z| if x1.hypot(x2) > r0 { z.norm_sqr() } else { 0.0 });
    outer / total
}

/// `‖u‖_{H^order} + ‖∂_θu‖_{H¹}`; `order` 1 gives `H_θ^{1,1}`, 2 gives `H_θ^{2,1}`.
pub fn h_theta_norm(u: &WaveField, order: u32) -> Result<f64> {
    if order != 1 && order != 2 {
        return Err(Error::param("order", format!("must be 1 or 2, got {order}")));
    }
    Ok(sobolev_norm(u, order as f64) + sobolev_norm(&angular_derivative(u), 1.0))
}

/// `‖u‖_{L_ρ^p L_θ^q}` with measure `ρdρ` outside and `dθ` inside.
pub fn mixed_norm(u: &WaveField, pg: &PolarGrid, p_rho: f64, q_theta: f64) -> Result<f64> {
    for (name, e) in [("p_rho", p_rho), ("q_theta", q_theta)] {
        if !(e >= 1.0) {
            return Err(Error::param(name, format!("exponent must be in [1, ∞], got {e}")));
        }
    }
    Ok(to_polar(u, pg)?.mixed_norm(pg, p_rho, q_theta))
}

/// `(Σ_N N^{2s}‖P_N u‖²_{L_ρ^r L_θ²})^{1/2}` over the dyadic bands the grid resolves.
pub fn besov_angular_norm(u: &WaveField, pg: &PolarGrid, r: f64, s: f64) -> Result<f64> {
    if !(r >= 2.0) {
        return Err(Error::param("r", format!("must be >= 2, got {r}")));
    }
    let mut acc = 0.0;
    for level in dyadic_levels(u.grid()) {
        let band = DyadicBand::new(level)?;
        let piece = littlewood_paley(u, &band).field;
        let norm = to_polar(&piece, pg)?.mixed_norm(pg, r, 2.0);
        acc += (level as f64).powf(2.0 * s) * norm * norm;
    }
    Ok(acc.sqrt())
}

/// Components `x_j u + 2it∂_j u` of the Galilean operator `J = x + 2it∇`.
pub fn galilean_j(u: &WaveField, t: f64) -> (WaveField, WaveField) {
    let grid = u.grid();
    let dft = grid.dft(u.samples());
    let (d1, d2) = gradient_from_dft(grid, &dft);
    let it2 = C64::new(0.0, 2.0 * t);
    let j1 = u.map(|x1, _, z| z * x1);
    let j2 = u.map(|_, x2, z| z * x2);
    (
        j1.axpy(it2, &d1).expect("same grid"),
        j2.axpy(it2, &d2).expect("same grid"),
    )
}

/// `‖Ju‖²_{L²}` summed over both components.
pub fn galilean_j_norm_sqr(u: &WaveField, t: f64) -> f64 {
    let (a, b) = galilean_j(u, t);
    a.norm_sqr() + b.norm_sqr()
}

/// `H(t) = −Im∫u ū₊`.
pub fn scattering_correlation_h(u: &WaveField, u_plus: &WaveField) -> Result<f64> {
    Ok(-u.inner(u_plus)?.im)
}

/// `4E − ½∫(x·∇K₁)|u|⁴ + ⅓∫(2K₂ − x·∇K₂)|u|⁶`.
pub fn virial_rhs(u: &WaveField, k1: &CoefficientField, k2: &CoefficientField) -> f64 {
    let e = energy(u, k1, k2);
    if k1.is_zero() && k2.is_zero() {
        return 4.0 * e;
    }
    let corr = u.integrate(|x1, x2, z| {
        let m = z.norm_sqr();
        let r = x1.hypot(x2);
        -0.5 * k1.radial_gradient_dot_at(r) * m * m
            + (2.0 * k2.value_at_radius(r) - k2.radial_gradient_dot_at(r)) * m * m * m / 3.0
    });
    4.0 * e + corr
}

/// The four terms `J₁¹, J₁², J₁³, J₂` whose sum is `Re∫(K₁|u|²u + K₂|u|⁴u)ū₊`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTerms {
    pub j11: f64,
    pub j12: f64,
    pub j13: f64,
    pub j2: f64,
}

impl CorrelationTerms {
    pub fn sum(&self) -> f64 {
        self.j11 + self.j12 + self.j13 + self.j2
    }
}

pub fn correlation_terms(
    u: &WaveField,
    u_plus: &WaveField,
    k1: &CoefficientField,
    k2: &CoefficientField,
) -> Result<CorrelationTerms> {
    u.grid().check_same(u_plus.grid())?;
    let grid = u.grid();
    let n = grid.n();
    let (a, b) = (u.samples(), u_plus.samples());
    let mut t = CorrelationTerms {
        j11: 0.0,
        j12: 0.0,
        j13: 0.0,
        j2: 0.0,
    };
    for i in 0..n {
        let x2 = grid.coord(i);
        for j in 0..n {
            let r = grid.coord(j).hypot(x2);
            let (z, w) = (a[i * n + j], b[i * n + j]);
            let (mu, mp) = (z.norm_sqr(), w.norm_sqr());
            let c1 = k1.value_at_radius(r);
            let c2 = k2.value_at_radius(r);
            t.j11 += c1 * mp * mp;
            t.j12 += c1 * (mu - mp) * mp;
            t.j13 += c1 * mu * ((z - w) * w.conj()).re;
            t.j2 += c2 * mu * mu * (z * w.conj()).re;
        }
    }
    let h2 = grid.cell_area();
    t.j11 *= h2;
    t.j12 *= h2;
    t.j13 *= h2;
    t.j2 *= h2;
    Ok(t)
}

/// Mass of `u` in the annulus `r_lo ≤ |x| ≤ r_hi`.
pub fn annulus_mass(u: &WaveField, r_lo: f64, r_hi: f64) -> f64 {
    u.integrate(|x1, x2, z| {
        let r = x1.hypot(x2);
        if r >= r_lo && r <= r_hi {
            z.norm_sqr()
        } else {
            0.0
        }
    })
}

/// Grid maximum of `|x|^θ|u|`.
pub fn weighted_sup(u: &WaveField, theta: f64) -> f64 {
    let mut best: f64 = 0.0;
    u.for_each_point(|x1, x2, z| {
        let w = if theta == 0.0 { 1.0 } else { x1.hypot(x2).powf(theta) };
        best = best.max(w * z.norm());
    });
    best
}

/// Exponent pair `(q, r)`; `f64::INFINITY` is allowed for either entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzPair {
    pub q: f64,
    pub r: f64,
}

fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

impl StrichartzPair {
    pub fn new(q: f64, r: f64) -> Self {
        Self { q, r }
    }

    /// `1/q + 1/r = 1/2`, `(q, r) ≠ (2, ∞)`.
    pub fn is_admissible(&self) -> bool {
        if !(self.q >= 2.0 && self.r >= 2.0) {
            return false;
        }
        if self.q == 2.0 && self.r.is_infinite() {
            return false;
        }
        (recip(self.q) + recip(self.r) - 0.5).abs() < 1e-12
    }

    /// `1/2 − 1/r < 1/q < (3/2)(1/2 − 1/r)`.
    pub fn is_extended(&self) -> bool {
        let a = 0.5 - recip(self.r);
        let iq = recip(self.q);
        a < iq && iq < 1.5 * a
    }

    /// `s(q, r) = 2(1/q + 1/r − 1/2)`.
    pub fn regularity(&self) -> f64 {
        2.0 * (recip(self.q) + recip(self.r) - 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{power_law_field, Sign};
    use crate::grid::Grid2D;
    use std::f64::consts::PI;

    fn gaussian(g: &Grid2D, a: f64) -> WaveField {
        WaveField::from_real_fn(g, |x, y| a * (-(x * x + y * y) / 2.0).exp())
    }

    fn ones() -> CoefficientField {
        CoefficientField::constant(1.0)
    }

    #[test]
    fn mass_examples() {
        let g = Grid2D::new(256, 12.0).unwrap();
        assert!((mass(&gaussian(&g, 1.0)) - PI).abs() < 1e-8);
        assert!((mass(&gaussian(&g, 2.0)) - 4.0 * PI).abs() < 1e-8);
        assert_eq!(mass(&WaveField::zeros(&g)), 0.0);
    }

    #[test]
    fn energy_examples() {
        let g = Grid2D::new(256, 12.0).unwrap();
        let e = energy(&gaussian(&g, 1.0), &ones(), &ones());
        assert!((e - 49.0 * PI / 72.0).abs() < 1e-8);
        let m = CoefficientField::constant(-1.0);
        let e = energy(&gaussian(&g, 2.0), &m, &m);
        assert!((e + 32.0 * PI / 9.0).abs() < 1e-8);
        let z = CoefficientField::zero();
        let u = gaussian(&g, 1.0);
        assert_eq!(energy(&u, &z, &z), 0.5 * crate::spectral::grad_norm_sqr(&u));
    }

    #[test]
    fn potential_examples() {
        let g = Grid2D::new(256, 12.0).unwrap();
        let v1 = potential_v(&gaussian(&g, 1.0), &ones(), &ones());
        assert!((v1 - (PI / 8.0 + PI / 18.0)).abs() < 1e-8);
        let z = CoefficientField::zero();
        assert_eq!(potential_v(&gaussian(&g, 1.0), &z, &z), 0.0);
        let v_quart = potential_v(&gaussian(&g, 1.0), &ones(), &z);
        let v_quart2 = potential_v(&gaussian(&g, 2.0), &ones(), &z);
        assert!((v_quart2 / v_quart - 16.0).abs() < 1e-12);
        let v_sext = potential_v(&gaussian(&g, 1.0), &z, &ones());
        let v_sext2 = potential_v(&gaussian(&g, 2.0), &z, &ones());
        assert!((v_sext2 / v_sext - 64.0).abs() < 1e-12);
    }

    #[test]
    fn dilation_examples() {
        let g = Grid2D::new(256, 12.0).unwrap();
        assert!(dilation_a(&gaussian(&g, 1.0)).abs() < 1e-10);
        let chirp = WaveField::from_fn(&g, |x, y| {
            let r2 = x * x + y * y;
            C64::from_polar((-r2 / 2.0).exp(), -r2 / 4.0)
        });
        // Im ū x·∇u = |u|²·x·∇(−r²/4) = −r²|u|²/2, integral −π/2
        assert!((dilation_a(&chirp) + PI / 2.0).abs() < 1e-8);
        let vortex = WaveField::from_fn(&g, |x, y| C64::new(x, y) * (-(x * x + y * y) / 2.0).exp());
        assert!(dilation_a(&vortex).abs() < 1e-10);
    }

    #[test]
    fn variance_examples() {
        let g = Grid2D::new(256, 12.0).unwrap();
        assert!((variance(&gaussian(&g, 1.0)) - PI).abs() < 1e-8);
        assert_eq!(variance(&WaveField::zeros(&g)), 0.0);
    }

    #[test]
    fn h_theta_examples() {
        let g = Grid2D::new(128, 12.0).unwrap();
        let f = gaussian(&g, 1.0);
        assert!((h_theta_norm(&f, 1).unwrap() - sobolev_norm(&f, 1.0)).abs() < 1e-8);
        let v = WaveField::from_fn(&g, |x, y| C64::new(x, y) * (-(x * x + y * y) / 2.0).exp());
        let h1 = sobolev_norm(&v, 1.0);
        assert!((h_theta_norm(&v, 1).unwrap() - 2.0 * h1).abs() < 1e-8 * h1);
        assert_eq!(h_theta_norm(&WaveField::zeros(&g), 2).unwrap(), 0.0);
        assert!(h_theta_norm(&f, 3).is_err());
    }

    #[test]
    fn mixed_norm_examples() {
        let g = Grid2D::new(256, 12.0).unwrap();
        let pg = PolarGrid::new(96, 11.0, 128).unwrap();
        let u = WaveField::from_fn(&g, |x, y| {
            C64::new(1.0 + 0.2 * x, 0.5 * y) * (-((x - 0.3).powi(2) + y * y) / 2.0).exp()
        });
        let m = mixed_norm(&u, &pg, 2.0, 2.0).unwrap();
        assert!((m - u.norm_l2()).abs() < 1e-4 * m);
        // radial: (2π)^{1/q} times the radial L^p(ρdρ) norm
        let f = gaussian(&g, 1.0);
        // (∫ e^{−2ρ²} ρdρ)^{1/4} = (1/4)^{1/4}
        let want = (2.0 * PI).powf(1.0 / 3.0) * 0.25f64.powf(0.25);
        let got = mixed_norm(&f, &pg, 4.0, 3.0).unwrap();
        assert!((got - want).abs() < 1e-4 * want, "{got} {want}");
        let vortex = WaveField::from_fn(&g, |x, y| C64::new(x, y) * (-(x * x + y * y)).exp());
        let got = mixed_norm(&vortex, &pg, 2.0, f64::INFINITY).unwrap();
        // ∫ (ρe^{−ρ²})² ρdρ = 1/8
        assert!((got - (1.0f64 / 8.0).sqrt()).abs() < 1e-4);
        assert!(mixed_norm(&f, &pg, 0.5, 2.0).is_err());
    }

    #[test]
    fn besov_examples() {
        let g = Grid2D::new(128, 12.0).unwrap();
        let pg = PolarGrid::new(64, 11.0, 64).unwrap();
        assert_eq!(besov_angular_norm(&WaveField::zeros(&g), &pg, 2.0, 0.5).unwrap(), 0.0);
        // s = 0, r = 2: two-sided comparable to the L² norm
        let f = gaussian(&g, 1.0);
        let b = besov_angular_norm(&f, &pg, 2.0, 0.0).unwrap();
        let ratio = b / f.norm_l2();
        assert!(ratio > 0.5 && ratio <= 1.0 + 1e-6, "{ratio}");
        assert!(besov_angular_norm(&f, &pg, 1.5, 0.0).is_err());
    }

    #[test]
    fn galilean_examples() {
        let g = Grid2D::new(256, 12.0).unwrap();
        let f = gaussian(&g, 1.0);
        let (a, b) = galilean_j(&f, 0.0);
        assert!(a.sub(&f.map(|x, _, z| z * x)).unwrap().max_abs() < 1e-15);
        assert!(b.sub(&f.map(|_, y, z| z * y)).unwrap().max_abs() < 1e-15);
        assert!((galilean_j_norm_sqr(&f, 1.0) - 5.0 * PI).abs() < 1e-8);
        let u = crate::evolve::free_propagate(&f, 0.7);
        assert!((galilean_j_norm_sqr(&u, 0.7) - PI).abs() < 1e-8);
    }

    #[test]
    fn correlation_examples() {
        let g = Grid2D::new(64, 8.0).unwrap();
        let up = WaveField::from_fn(&g, |x, y| C64::new(1.0, 0.3 * x) * (-(x * x + y * y) / 2.0).exp());
        assert!(scattering_correlation_h(&up, &up).unwrap().abs() < 1e-15);
        let iu = up.scaled(C64::new(0.0, 1.0));
        let h = scattering_correlation_h(&iu, &up).unwrap();
        assert!((h + mass(&up)).abs() < 1e-12);
        let other = Grid2D::new(32, 8.0).unwrap();
        assert!(scattering_correlation_h(&up, &WaveField::zeros(&other)).is_err());
        let k1 = power_law_field(1.0, 1.0, Sign::Defocusing, f64::INFINITY).unwrap();
        let t = correlation_terms(&up, &up, &k1, &ones()).unwrap();
        assert_eq!(t.j12, 0.0);
        assert_eq!(t.j13, 0.0);
        assert!(t.j11 > 0.0 && t.j2 > 0.0);
    }

    #[test]
    fn virial_examples() {
        let g = Grid2D::new(128, 12.0).unwrap();
        let u = gaussian(&g, 1.3);
        let z = CoefficientField::zero();
        let gn = crate::spectral::grad_norm_sqr(&u);
        assert!((virial_rhs(&u, &z, &z) - 2.0 * gn).abs() < 1e-12 * gn);
        let m = CoefficientField::constant(-1.0);
        let sext = u.integrate(|_, _, z| z.norm_sqr().powi(3));
        let want = 4.0 * energy(&u, &m, &m) - 2.0 / 3.0 * sext;
        assert!((virial_rhs(&u, &m, &m) - want).abs() < 1e-10);
        let (b1, b2) = (0.25, 1.0);
        let k1 = power_law_field(b1, 1.0, Sign::Defocusing, f64::INFINITY).unwrap();
        let k2 = power_law_field(b2, 1.0, Sign::Defocusing, f64::INFINITY).unwrap();
        let q = u.integrate(|x, y, z| x.hypot(y).powf(b1) * z.norm_sqr().powi(2));
        let s = u.integrate(|x, y, z| x.hypot(y).powf(b2) * z.norm_sqr().powi(3));
        let want = 4.0 * energy(&u, &k1, &k2) - b1 / 2.0 * q + (2.0 - b2) / 3.0 * s;
        assert!((virial_rhs(&u, &k1, &k2) - want).abs() < 1e-10);
    }

    #[test]
    fn strichartz_pairs() {
        assert!(StrichartzPair::new(4.0, 4.0).is_admissible());
        assert!(StrichartzPair::new(f64::INFINITY, 2.0).is_admissible());
        assert!(!StrichartzPair::new(2.0, f64::INFINITY).is_admissible());
        assert!(!StrichartzPair::new(3.0, 3.0).is_admissible());
        assert_eq!(StrichartzPair::new(4.0, 4.0).regularity(), 0.0);
        // r = 8: 3/8 < 1/q < 9/16, so q = 2 qualifies
        assert!(StrichartzPair::new(2.0, 8.0).is_extended());
        assert!(!StrichartzPair::new(4.0, 8.0).is_extended());
        assert!((StrichartzPair::new(2.0, 8.0).regularity() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn record_columns_consistent() {
        let g = Grid2D::new(128, 12.0).unwrap();
        let u = WaveField::from_fn(&g, |x, y| C64::new(1.0, 0.4 * x) * (-(x * x + y * y) / 2.0).exp());
        let k1 = power_law_field(0.25, 1.0, Sign::Defocusing, f64::INFINITY).unwrap();
        let r = record(0.5, &u, &k1, &ones());
        assert_eq!(r.t, 0.5);
        assert!((r.energy - energy(&u, &k1, &ones())).abs() < 1e-12);
        assert!((r.dilation_a - dilation_a(&u)).abs() < 1e-12);
        assert!((r.h_theta_11 - h_theta_norm(&u, 1).unwrap()).abs() < 1e-10);
        assert_eq!(DiagnosticsRecord::from_values(r.values()), r);
    }
}
