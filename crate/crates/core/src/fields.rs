//! Coefficient fields `K(x) = σκ·min(|x|, R_cap)^b` and checks of the
//! structural hypotheses placed on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, WaveField};

/// Sign of a coefficient: `+1` defocusing, `-1` focusing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Defocusing,
    Focusing,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Defocusing => 1.0,
            Sign::Focusing => -1.0,
        }
    }

    pub fn from_int(s: i64) -> Result<Self> {
        match s {
            1 => Ok(Sign::Defocusing),
            -1 => Ok(Sign::Focusing),
            other => Err(Error::param("sign", format!("must be +1 or -1, got {other}"))),
        }
    }
}

/// Real capped power law `σκ·min(|x|, R_cap)^b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub b: f64,
    pub kappa: f64,
    pub sign: Sign,
    /// `f64::INFINITY` for an uncapped power law.
    pub cap_radius: f64,
}

/// Builds a capped power-law coefficient. `κ = 0` gives the zero field.
pub fn power_law_field(b: f64, kappa: f64, sign: Sign, cap_radius: f64) -> Result<CoefficientField> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::param("b", format!("growth exponent must be finite and >= 0, got {b}")));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::param("kappa", format!("amplitude must be finite and >= 0, got {kappa}")));
    }
    if !(cap_radius > 0.0) || cap_radius.is_nan() {
        return Err(Error::param("cap_radius", format!("must be positive, got {cap_radius}")));
    }
    Ok(CoefficientField {
        b,
        kappa,
        sign,
        cap_radius,
    })
}

impl CoefficientField {
    pub fn zero() -> Self {
        Self {
            b: 0.0,
            kappa: 0.0,
            sign: Sign::Defocusing,
            cap_radius: f64::INFINITY,
        }
    }

    /// Constant field `σκ`.
    pub fn constant(value: f64) -> Self {
        Self {
            b: 0.0,
            kappa: value.abs(),
            sign: if value < 0.0 { Sign::Focusing } else { Sign::Defocusing },
            cap_radius: f64::INFINITY,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kappa == 0.0
    }

    fn amplitude(&self) -> f64 {
        self.sign.value() * self.kappa
    }

    /// `K` at radius `r`.
    pub fn value_at_radius(&self, r: f64) -> f64 {
        if self.kappa == 0.0 {
            return 0.0;
        }
        if self.b == 0.0 {
            return self.amplitude();
        }
        self.amplitude() * r.min(self.cap_radius).powf(self.b)
    }

    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        self.value_at_radius(x1.hypot(x2))
    }

    /// `x·∇K` at radius `r`: `σκ·b·r^b` inside the cap, zero outside.
    pub fn radial_gradient_dot_at(&self, r: f64) -> f64 {
        if self.kappa == 0.0 || self.b == 0.0 || r > self.cap_radius {
            return 0.0;
        }
        self.amplitude() * self.b * r.powf(self.b)
    }

    /// `∂_r^j K` for `j = 0, 1, 2` (inside the cap; zero derivatives outside).
    pub fn radial_derivative(&self, r: f64, order: usize) -> f64 {
        let a = self.amplitude();
        if order == 0 {
            return self.value_at_radius(r);
        }
        if self.kappa == 0.0 || r > self.cap_radius {
            return 0.0;
        }
        let b = self.b;
        match order {
            1 => a * b * r.powf(b - 1.0),
            2 => a * b * (b - 1.0) * r.powf(b - 2.0),
            _ => panic!("radial derivatives are provided up to order 2"),
        }
    }

    pub fn sample(&self, grid: &Grid2D) -> Vec<f64> {
        let n = grid.n();
        let mut out = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x2 = grid.coord(i);
            for j in 0..n {
                out.push(self.value(grid.coord(j), x2));
            }
        }
        out
    }

    pub fn sample_radial_gradient_dot(&self, grid: &Grid2D) -> Vec<f64> {
        let n = grid.n();
        let mut out = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x2 = grid.coord(i);
            for j in 0..n {
                out.push(self.radial_gradient_dot_at(grid.coord(j).hypot(x2)));
            }
        }
        out
    }
}

/// `x·∇K` sampled on the grid as a real-valued field.
pub fn radial_gradient_dot(k: &CoefficientField, grid: &Grid2D) -> WaveField {
    WaveField::from_real_fn(grid, |x1, x2| k.radial_gradient_dot_at(x1.hypot(x2)))
}

/// Log-spaced radii spanning `[h/2, L√2]`.
pub fn sample_radii(grid: &Grid2D, count: usize) -> Vec<f64> {
    let lo = grid.spacing() / 2.0;
    let hi = grid.half_width() * std::f64::consts::SQRT_2;
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InequalityWitness {
    pub passed: bool,
    /// Radius where the margin is smallest.
    pub worst_radius: f64,
    pub min_margin: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RigidityReport {
    pub alpha: f64,
    /// `αK₁ + x·∇K₁ ≥ 0`.
    pub first: InequalityWitness,
    /// `αK₂ − 2K₂ + x·∇K₂ ≥ 0`.
    pub second: InequalityWitness,
    pub passed: bool,
}

const RIGIDITY_SAMPLES: usize = 400;

fn witness(radii: &[f64], margin: impl Fn(f64) -> (f64, f64)) -> InequalityWitness {
    let mut worst = (f64::INFINITY, radii[0]);
    let mut passed = true;
    for &r in radii {
        let (m, scale) = margin(r);
        if m < -1e-12 * scale {
            passed = false;
        }
        if m < worst.0 {
            worst = (m, r);
        }
    }
    InequalityWitness {
        passed,
        worst_radius: worst.1,
        min_margin: worst.0,
    }
}

/// Checks `−x·∇K₁ ≤ αK₁` and `2K₂ − x·∇K₂ ≤ αK₂` on log-spaced radii in `[h/2, L√2]`
/// plus both sides of each cap radius.
pub fn rigidity_check(
    k1: &CoefficientField,
    k2: &CoefficientField,
    alpha: f64,
    grid: &Grid2D,
) -> Result<RigidityReport> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("must be finite and >= 0, got {alpha}")));
    }
    let mut radii = sample_radii(grid, RIGIDITY_SAMPLES);
    let hi = *radii.last().unwrap();
    for cap in [k1.cap_radius, k2.cap_radius] {
        if cap.is_finite() && cap < hi {
            radii.push(cap);
            radii.push(cap * (1.0 + 1e-9));
        }
    }
    let first = witness(&radii, |r| {
        let k = k1.value_at_radius(r);
        let xg = k1.radial_gradient_dot_at(r);
        (alpha * k + xg, alpha * k.abs() + xg.abs())
    });
    let second = witness(&radii, |r| {
        let k = k2.value_at_radius(r);
        let xg = k2.radial_gradient_dot_at(r);
        (alpha * k - 2.0 * k + xg, (alpha + 2.0) * k.abs() + xg.abs())
    });
    let passed = first.passed && second.passed;
    Ok(RigidityReport {
        alpha,
        first,
        second,
        passed,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthReport {
    /// `sup_r r^{j−b}|∂_r^j K|` for `j = 0, 1, 2` over the sampled radii.
    pub constants: [f64; 3],
    pub finite: bool,
    /// Radius of the derivative jump when the cap lies inside the sampled range.
    pub cap_kink: Option<f64>,
}

/// Empirical constants in `|∂^j K| ≲ |x|^{b−j}` using closed-form radial derivatives.
pub fn growth_condition_check(k: &CoefficientField, grid: &Grid2D) -> GrowthReport {
    let radii = sample_radii(grid, RIGIDITY_SAMPLES);
    let hi = *radii.last().unwrap();
    let mut constants = [0.0f64; 3];
    let cap_kink = (k.cap_radius.is_finite() && k.cap_radius < hi).then_some(k.cap_radius);
    let mut probe = radii.clone();
    if let Some(c) = cap_kink {
        probe.push(c);
    }
    for &r in &probe {
        for (j, c) in constants.iter_mut().enumerate() {
            let v = r.powf(j as f64 - k.b) * k.radial_derivative(r, j).abs();
            *c = c.max(v);
        }
    }
    GrowthReport {
        finite: constants.iter().all(|c| c.is_finite()),
        constants,
        cap_kink,
    }
}
