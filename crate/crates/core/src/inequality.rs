//! Empirical constants for the functional inequalities behind the
//! scattering theory: weighted decay, Hardy–Sobolev, radial interpolation,
//! Strichartz sampling and the angular commutation identities.
//!
//! "≲" is read as a bounded sup ratio over a seeded random family that stays
//! put when the grid is refined. Nothing here estimates optimal constants.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{h_theta_norm, weighted_sup, StrichartzPair};
use crate::error::{Error, Result};
use crate::evolve::free_multiplier;
use crate::grid::{Grid2D, WaveField, C64};
use crate::polar::{gauss_legendre_unit, to_polar, BicubicResampler, PolarGrid};
use crate::series::format_value;
use crate::spectral::{
    angular_derivative, apply_multiplier, fractional_derivative, grad_norm_sqr, littlewood_paley, sobolev_norm,
    DerivativeKind, DyadicBand,
};

pub const DEFAULT_BAND_FRACTION: f64 = 1.0 / 3.0;

/// Relative `‖∂_θf‖₂ / ‖f‖_{H¹}` above which an input counts as non-radial.
pub const RADIAL_TOLERANCE: f64 = 1e-6;

/// Composite Simpson step for Strichartz time integrals.
pub const STRICHARTZ_TIME_STEP: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Sums of modulated packets whose spectra sit in an annulus inside the band.
    BandLimited,
    /// Gaussian bumps with random centers, carriers and chirps.
    GaussianBumps,
    /// `e^{imθ}g(ρ)` centered at the origin, `|m| ≤ max_harmonic`.
    AngularHarmonics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    pub kind: FamilyKind,
    pub seed: u64,
    pub count: usize,
    /// Band limit as a fraction of the coarsest grid's Nyquist frequency.
    pub band_fraction: f64,
    /// Largest `|m|` for [`FamilyKind::AngularHarmonics`]; 0 gives radial members.
    pub max_harmonic: u32,
}

impl TestFunctionFamily {
    pub fn new(kind: FamilyKind, seed: u64, count: usize) -> Self {
        Self {
            kind,
            seed,
            count,
            band_fraction: DEFAULT_BAND_FRACTION,
            max_harmonic: 3,
        }
    }

    pub fn radial(seed: u64, count: usize) -> Self {
        Self {
            max_harmonic: 0,
            ..Self::new(FamilyKind::AngularHarmonics, seed, count)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::param("count", "family must have at least one member"));
        }
        if !(self.band_fraction > 0.0 && self.band_fraction <= 1.0) {
            return Err(Error::param(
                "band_fraction",
                format!("must be in (0, 1], got {}", self.band_fraction),
            ));
        }
        Ok(())
    }

    /// Absolute band limit `|ξ| ≤ k_b` on `grid`.
    pub fn band_limit(&self, grid: &Grid2D) -> f64 {
        self.band_fraction * grid.nyquist()
    }

    /// Member descriptions; they depend on the seed, `k_b` and `L` only.
    pub fn members(&self, band_limit: f64, half_width: f64) -> Vec<Member> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| match self.kind {
                FamilyKind::BandLimited => band_limited_member(&mut rng, band_limit, half_width),
                FamilyKind::GaussianBumps => bump_member(&mut rng, band_limit, half_width),
                FamilyKind::AngularHarmonics => harmonic_member(&mut rng, band_limit, self.max_harmonic),
            })
            .collect()
    }

    /// Members sampled on `grid`, with the band limit taken from `grid` itself.
    pub fn generate(&self, grid: &Grid2D) -> Vec<WaveField> {
        self.members(self.band_limit(grid), grid.half_width())
            .iter()
            .map(|m| m.sample(grid))
            .collect()
    }
}

/// Analytic description of one family member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Member {
    /// `Σ a·e^{iξ·(x−c)}·e^{(−1/(2w²) + iχ)|x−c|²}`.
    Packets(Vec<Packet>),
    /// `e^{imθ}·Σ a·(ρ/w)^{|m|}·e^{−ρ²/(2w²)}`.
    Harmonic { m: i32, terms: Vec<(C64, f64)> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub amplitude: C64,
    pub center: [f64; 2],
    pub width: f64,
    pub carrier: [f64; 2],
    pub chirp: f64,
}

impl Packet {
    fn eval(&self, x1: f64, x2: f64) -> C64 {
        let d1 = x1 - self.center[0];
        let d2 = x2 - self.center[1];
        let r2 = d1 * d1 + d2 * d2;
        let phase = self.carrier[0] * d1 + self.carrier[1] * d2 + self.chirp * r2;
        self.amplitude * C64::from_polar((-r2 / (2.0 * self.width * self.width)).exp(), phase)
    }
}

impl Member {
    pub fn eval(&self, x1: f64, x2: f64) -> C64 {
        match self {
            Member::Packets(ps) => ps.iter().map(|p| p.eval(x1, x2)).sum(),
            Member::Harmonic { m, terms } => {
                let rho = x1.hypot(x2);
                let angle = C64::from_polar(1.0, *m as f64 * x2.atan2(x1));
                let radial: C64 = terms
                    .iter()
                    .map(|&(a, w)| a * (rho / w).powi(m.abs()) * (-rho * rho / (2.0 * w * w)).exp())
                    .sum();
                angle * radial
            }
        }
    }

    pub fn sample(&self, grid: &Grid2D) -> WaveField {
        WaveField::from_fn(grid, |x1, x2| self.eval(x1, x2))
    }
}

fn random_amplitude(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(rng.random_range(0.5..1.5), rng.random_range(0.0..2.0 * PI))
}

fn random_point(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let a = rng.random_range(0.0..2.0 * PI);
    [r * a.cos(), r * a.sin()]
}

// A packet's spectrum is a Gaussian of width 1/w around its carrier. Carriers
// on |ξ₀| = 0.55k_b with w ≥ 11/k_b put five spectral widths between the
// packet and both the band edge and ξ = 0; the spectral gap at the origin
// keeps D^s f localized, which the periodic ∂_θ needs.
fn band_limited_member(rng: &mut ChaCha8Rng, kb: f64, l: f64) -> Member {
    let count = rng.random_range(1..=3);
    let w0 = 11.0 / kb;
    Member::Packets(
        (0..count)
            .map(|_| {
                let a = rng.random_range(0.0..2.0 * PI);
                Packet {
                    amplitude: random_amplitude(rng),
                    center: random_point(rng, 0.25 * l),
                    width: rng.random_range(w0..1.2 * w0),
                    carrier: [0.55 * kb * a.cos(), 0.55 * kb * a.sin()],
                    chirp: 0.0,
                }
            })
            .collect(),
    )
}

// |χ| ≤ 0.1/w² widens the spectrum by under 2%, so w ≥ 6.5/k_b with
// |ξ₀| ≤ 0.2k_b leaves about five spectral widths below the band edge.
fn bump_member(rng: &mut ChaCha8Rng, kb: f64, l: f64) -> Member {
    let w0 = 6.5 / kb;
    let width = rng.random_range(w0..1.3 * w0);
    Member::Packets(vec![Packet {
        amplitude: random_amplitude(rng),
        center: random_point(rng, 0.3 * l),
        width,
        carrier: random_point(rng, 0.2 * kb),
        chirp: rng.random_range(-0.1..0.1) / (width * width),
    }])
}

fn harmonic_member(rng: &mut ChaCha8Rng, kb: f64, max_m: u32) -> Member {
    let m = if max_m == 0 {
        0
    } else {
        rng.random_range(-(max_m as i32)..=max_m as i32)
    };
    let w0 = 6.5 / kb;
    let count = rng.random_range(1..=2);
    let terms = (0..count)
        .map(|_| (random_amplitude(rng), rng.random_range(w0..1.3 * w0)))
        .collect();
    Member::Harmonic { m, terms }
}

/// Fraction of `‖f‖²` carried by frequencies `|ξ| > k_b`.
pub fn band_excess(f: &WaveField, band_limit: f64) -> f64 {
    let total = f.norm_sqr();
    if total == 0.0 {
        return 0.0;
    }
    let outside = apply_multiplier(f, |k1, k2| {
        C64::new(if k1.hypot(k2) > band_limit { 1.0 } else { 0.0 }, 0.0)
    });
    outside.norm_sqr() / total
}

/// One grid, or a coarse/fine pair on the same box.
#[derive(Clone, Debug)]
pub struct LabGrids {
    pub coarse: Grid2D,
    pub fine: Option<Grid2D>,
}

impl LabGrids {
    pub fn single(grid: Grid2D) -> Self {
        Self { coarse: grid, fine: None }
    }

    pub fn refined(coarse: Grid2D, fine: Grid2D) -> Result<Self> {
        if fine.half_width() != coarse.half_width() || fine.n() <= coarse.n() {
            return Err(Error::param(
                "fine",
                format!(
                    "refinement needs the same box and more points: ({}, {}) vs ({}, {})",
                    coarse.n(),
                    coarse.half_width(),
                    fine.n(),
                    fine.half_width()
                ),
            ));
        }
        Ok(Self {
            coarse,
            fine: Some(fine),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementPair {
    pub coarse: f64,
    pub fine: f64,
}

impl RefinementPair {
    /// `|fine − coarse| / fine`.
    pub fn relative_change(&self) -> f64 {
        (self.fine - self.coarse).abs() / self.fine
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub id: String,
    pub params: BTreeMap<String, f64>,
    /// One entry per sample; `None` marks a skipped (zero) input.
    pub ratios: Vec<Option<f64>>,
    pub sup_ratio: f64,
    pub refinement: Option<RefinementPair>,
}

impl InequalityReport {
    fn new(id: &str, params: &[(&str, f64)], ratios: Vec<Option<f64>>) -> Self {
        let sup_ratio = sup(&ratios);
        Self {
            id: id.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            ratios,
            sup_ratio,
            refinement: None,
        }
    }

    pub fn skipped(&self) -> usize {
        self.ratios.iter().filter(|r| r.is_none()).count()
    }

    /// Every evaluated ratio is finite and positive.
    pub fn all_finite(&self) -> bool {
        self.ratios.iter().flatten().all(|r| r.is_finite() && *r > 0.0)
    }
}

fn sup(ratios: &[Option<f64>]) -> f64 {
    ratios.iter().flatten().fold(0.0, |a: f64, &b| a.max(b))
}

/// CSV with one line per report.
pub fn summary_csv(reports: &[InequalityReport]) -> String {
    let mut out = String::from("id,samples,skipped,sup_ratio,coarse_sup,fine_sup,relative_change\n");
    for r in reports {
        let (c, f, d) = match r.refinement {
            Some(p) => (p.coarse, p.fine, p.relative_change()),
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.id,
            r.ratios.len(),
            r.skipped(),
            format_value(r.sup_ratio),
            format_value(c),
            format_value(f),
            format_value(d)
        );
    }
    out
}

type RatioFn<'a> = dyn Fn(&WaveField) -> Result<Option<f64>> + Sync + 'a;

fn family_ratios(members: &[Member], grid: &Grid2D, ratio: &RatioFn) -> Result<Vec<Option<f64>>> {
    members.par_iter().map(|m| ratio(&m.sample(grid))).collect()
}

fn run_family(
    id: &str,
    params: &[(&str, f64)],
    family: &TestFunctionFamily,
    grids: &LabGrids,
    ratio: &RatioFn,
) -> Result<InequalityReport> {
    family.validate()?;
    let members = family.members(family.band_limit(&grids.coarse), grids.coarse.half_width());
    let mut report = InequalityReport::new(id, params, family_ratios(&members, &grids.coarse, ratio)?);
    if let Some(fine) = &grids.fine {
        let fine_sup = sup(&family_ratios(&members, fine, ratio)?);
        report.refinement = Some(RefinementPair {
            coarse: report.sup_ratio,
            fine: fine_sup,
        });
    }
    Ok(report)
}

fn is_zero(f: &WaveField) -> bool {
    f.samples().iter().all(|z| *z == C64::new(0.0, 0.0))
}

fn check_decay_exponent(b: f64) -> Result<()> {
    if !(b > 0.0 && b <= 0.5) {
        return Err(Error::param("b", format!("must be in (0, 1/2], got {b}")));
    }
    Ok(())
}

/// `‖|x|^b f‖_∞ / ‖f‖_{H_θ^{1,1}}`, `None` for the zero field.
pub fn angular_decay_ratio(f: &WaveField, b: f64) -> Result<Option<f64>> {
    check_decay_exponent(b)?;
    if is_zero(f) {
        return Ok(None);
    }
    Ok(Some(weighted_sup(f, b) / h_theta_norm(f, 1)?))
}

pub fn check_angular_decay(family: &TestFunctionFamily, grids: &LabGrids, b: f64) -> Result<InequalityReport> {
    check_decay_exponent(b)?;
    run_family("angular_decay", &[("b", b)], family, grids, &|f| angular_decay_ratio(f, b))
}

fn corollary_polar_grid(grid: &Grid2D) -> Result<PolarGrid> {
    PolarGrid::new(grid.n() / 2, 0.95 * grid.half_width(), 2 * grid.n().max(32))
}

/// `‖|x|^{1/2−1/p} f‖_{L_ρ^p L_θ^∞} / ‖f‖_{H_θ^{1,1}}`.
pub fn corollary_decay_ratio(f: &WaveField, pg: &PolarGrid, p: f64) -> Result<Option<f64>> {
    check_corollary_exponent(p)?;
    if is_zero(f) {
        return Ok(None);
    }
    let samples = to_polar(f, pg)?;
    let a = 0.5 - 1.0 / p;
    let s: f64 = pg
        .radii()
        .iter()
        .zip(pg.radial_weights())
        .enumerate()
        .map(|(i, (&rho, &w))| w * (rho.powf(a) * samples.angular_norm(i, f64::INFINITY)).powf(p))
        .sum();
    Ok(Some(s.powf(1.0 / p) / h_theta_norm(f, 1)?))
}

fn check_corollary_exponent(p: f64) -> Result<()> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::param("p", format!("must be in (2, ∞), got {p}")));
    }
    Ok(())
}

pub fn check_corollary_decay(family: &TestFunctionFamily, grids: &LabGrids, p: f64) -> Result<InequalityReport> {
    check_corollary_exponent(p)?;
    let pg_coarse = corollary_polar_grid(&grids.coarse)?;
    let pg_fine = grids.fine.as_ref().map(corollary_polar_grid).transpose()?;
    let ratio = |f: &WaveField| {
        let pg = if f.grid().n() == grids.coarse.n() {
            &pg_coarse
        } else {
            pg_fine.as_ref().expect("fine grid present")
        };
        corollary_decay_ratio(f, pg, p)
    };
    run_family("corollary_decay", &[("p", p)], family, grids, &ratio)
}

fn check_hardy_window(s: f64, p: f64) -> Result<()> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::param("p", format!("must be in (2, ∞), got {p}")));
    }
    if !(s > 0.0 && s < 2.0 / p) {
        return Err(Error::param("s", format!("must be in (0, 2/p) = (0, {}), got {s}", 2.0 / p)));
    }
    Ok(())
}

/// Nodes and weights for `∫₀^{ρ_max} g(ρ) ρ^{1−γ} dρ`, `0 ≤ γ < 2`.
///
/// The inner panel `[0, ρ₁]` uses `ρ = ρ₁u^k`, `k = 2/(2−γ)`, which turns the
/// weight into `u du`; the rest is composite Gauss–Legendre.
fn singular_radial_rule(rho_max: f64, gamma: f64, panel: f64) -> (Vec<f64>, Vec<f64>) {
    let rho1 = panel.min(rho_max);
    let k = 2.0 / (2.0 - gamma);
    let (u, w) = gauss_legendre_unit(48);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for (&u, &w) in u.iter().zip(&w) {
        nodes.push(rho1 * u.powf(k));
        weights.push(rho1.powf(2.0 - gamma) * k * u * w);
    }
    let (u4, w4) = gauss_legendre_unit(6);
    let panels = ((rho_max - rho1) / panel).ceil() as usize;
    let width = (rho_max - rho1) / panels.max(1) as f64;
    for j in 0..panels {
        let a = rho1 + j as f64 * width;
        for (&u, &w) in u4.iter().zip(&w4) {
            let rho = a + width * u;
            nodes.push(rho);
            weights.push(width * w * rho.powf(1.0 - gamma));
        }
    }
    (nodes, weights)
}

/// `‖|x|^{−s}f‖_{L^p} / ‖D^s f‖_{L^p}`.
///
/// The weighted norm uses a radial rule that absorbs the `ρ^{−sp}`
/// singularity and bicubic resampling on `ρ ≤ 0.95L`.
pub fn hardy_sobolev_ratio(f: &WaveField, s: f64, p: f64) -> Result<Option<f64>> {
    check_hardy_window(s, p)?;
    if is_zero(f) {
        return Ok(None);
    }
    let grid = f.grid();
    let (nodes, weights) = singular_radial_rule(0.95 * grid.half_width(), s * p, 0.5 * grid.spacing());
    let n_theta = 2 * grid.n().max(32);
    let trig: Vec<(f64, f64)> = (0..n_theta)
        .map(|k| (2.0 * PI * k as f64 / n_theta as f64).sin_cos())
        .collect();
    let resampler = BicubicResampler::new(f);
    let dtheta = 2.0 * PI / n_theta as f64;
    let mut acc = 0.0;
    for (&rho, &w) in nodes.iter().zip(&weights) {
        let ring: f64 = trig
            .iter()
            .map(|&(sn, cs)| resampler.eval(rho * cs, rho * sn).norm().powf(p))
            .sum();
        acc += w * ring * dtheta;
    }
    let lhs = acc.powf(1.0 / p);
    let rhs = fractional_derivative(f, s, DerivativeKind::Homogeneous)?.norm_lp(p);
    Ok(Some(lhs / rhs))
}

pub fn check_hardy_sobolev(family: &TestFunctionFamily, grids: &LabGrids, s: f64, p: f64) -> Result<InequalityReport> {
    check_hardy_window(s, p)?;
    run_family("hardy_sobolev", &[("s", s), ("p", p)], family, grids, &|f| {
        hardy_sobolev_ratio(f, s, p)
    })
}

/// `‖|x|^b f‖_∞ / (‖f‖₂^b ‖∇f‖₂^{1−b})` for radial `f`.
pub fn radial_interpolation_ratio(f: &WaveField, b: f64) -> Result<Option<f64>> {
    check_decay_exponent(b)?;
    if is_zero(f) {
        return Ok(None);
    }
    let angular = angular_derivative(f).norm_l2();
    let scale = sobolev_norm(f, 1.0);
    if angular > RADIAL_TOLERANCE * scale {
        return Err(Error::Precondition(format!(
            "input is not radial: ‖∂_θf‖ / ‖f‖_H¹ = {:.3e}",
            angular / scale
        )));
    }
    let rhs = f.norm_l2().powf(b) * grad_norm_sqr(f).sqrt().powf(1.0 - b);
    Ok(Some(weighted_sup(f, b) / rhs))
}

pub fn check_radial_interpolation(
    family: &TestFunctionFamily,
    grids: &LabGrids,
    b: f64,
) -> Result<InequalityReport> {
    check_decay_exponent(b)?;
    run_family("radial_interpolation", &[("b", b)], family, grids, &|f| {
        radial_interpolation_ratio(f, b)
    })
}

/// Relative commutators `‖∂_θP f − P∂_θf‖₂ / ‖Λ^{s+1}f‖₂` for `P = D^s` and `P = Λ^s`.
pub fn commutator_ratios(f: &WaveField, s: f64) -> Result<Option<(f64, f64)>> {
    if is_zero(f) {
        return Ok(None);
    }
    let scale = sobolev_norm(f, s + 1.0);
    let df = angular_derivative(f);
    let mut out = [0.0; 2];
    for (slot, kind) in out
        .iter_mut()
        .zip([DerivativeKind::Homogeneous, DerivativeKind::Inhomogeneous])
    {
        let a = angular_derivative(&fractional_derivative(f, s, kind)?);
        let b = fractional_derivative(&df, s, kind)?;
        *slot = a.sub(&b)?.norm_l2() / scale;
    }
    Ok(Some((out[0], out[1])))
}

/// Two reports, for `D^s` and then `Λ^s`.
pub fn check_commutation(family: &TestFunctionFamily, grid: &Grid2D, s: f64) -> Result<[InequalityReport; 2]> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::param("s", format!("must be finite and >= 0, got {s}")));
    }
    family.validate()?;
    let members = family.members(family.band_limit(grid), grid.half_width());
    let pairs: Vec<Option<(f64, f64)>> = members
        .par_iter()
        .map(|m| commutator_ratios(&m.sample(grid), s))
        .collect::<Result<_>>()?;
    let hom = pairs.iter().map(|p| p.map(|p| p.0)).collect();
    let inh = pairs.iter().map(|p| p.map(|p| p.1)).collect();
    Ok([
        InequalityReport::new("commutation_homogeneous", &[("s", s)], hom),
        InequalityReport::new("commutation_inhomogeneous", &[("s", s)], inh),
    ])
}

/// Composite Simpson over `[−T, T]` with step close to `step`.
fn simpson_nodes(window: f64, step: f64) -> (Vec<f64>, Vec<f64>) {
    let mut intervals = ((2.0 * window) / step).ceil() as usize;
    intervals += intervals % 2;
    intervals = intervals.max(2);
    let h = 2.0 * window / intervals as f64;
    let mut ts = Vec::with_capacity(intervals + 1);
    let mut ws = Vec::with_capacity(intervals + 1);
    for j in 0..=intervals {
        ts.push(-window + j as f64 * h);
        let c = if j == 0 || j == intervals {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        ws.push(c * h / 3.0);
    }
    (ts, ws)
}

/// Evaluates `norm(e^{itΔ}φ)` at each `t` from a single forward transform.
fn free_flow_norms(
    phi: &WaveField,
    times: &[f64],
    norm: &(dyn Fn(&WaveField) -> Result<f64> + Sync),
) -> Result<Vec<f64>> {
    let grid = phi.grid();
    let coeffs = grid.dft(phi.samples());
    times
        .par_iter()
        .map(|&t| {
            let mut c = coeffs.clone();
            for (z, m) in c.iter_mut().zip(free_multiplier(grid, t)) {
                *z *= m;
            }
            grid.idft_normalized(&mut c);
            norm(&WaveField::from_samples(grid, c)?)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzSample {
    pub window: f64,
    /// `‖e^{itΔ}φ‖_{L_t^q([−T,T]; L_x^r)} / ‖φ‖₂`.
    pub ratio: f64,
    /// Same quantity over `[−2T, 2T]`.
    pub doubled_ratio: f64,
}

impl StrichartzSample {
    pub fn window_change(&self) -> f64 {
        (self.doubled_ratio - self.ratio).abs() / self.doubled_ratio
    }
}

fn spectral_l2(f: &WaveField) -> f64 {
    let c = f.grid().dft(f.samples());
    let s: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    (s / f.grid().len() as f64 * f.grid().cell_area()).sqrt()
}

fn strichartz_ratio(phi: &WaveField, pair: StrichartzPair, window: f64, step: f64) -> Result<f64> {
    let denom = spectral_l2(phi);
    if pair.r == 2.0 {
        // |e^{−it|ξ|²}| = 1, so the spectral L² norm is the same at every t.
        return Ok(spectral_l2(phi) / denom);
    }
    let r = pair.r;
    let (ts, ws) = simpson_nodes(window, step);
    let norms = free_flow_norms(phi, &ts, &|u| {
        Ok(if r.is_infinite() { u.max_abs() } else { u.norm_lp(r) })
    })?;
    let num = if pair.q.is_infinite() {
        norms.iter().fold(0.0, |a: f64, &b| a.max(b))
    } else {
        let s: f64 = norms.iter().zip(&ws).map(|(n, w)| w * n.powf(pair.q)).sum();
        s.powf(1.0 / pair.q)
    };
    Ok(num / denom)
}

/// Finite-window Strichartz ratio with a doubling check on the window.
pub fn sample_strichartz(phi: &WaveField, pair: StrichartzPair, window: f64) -> Result<StrichartzSample> {
    if !pair.is_admissible() {
        return Err(Error::param(
            "pair",
            format!("({}, {}) is not admissible: need 1/q + 1/r = 1/2", pair.q, pair.r),
        ));
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::param("window", format!("must be positive, got {window}")));
    }
    if is_zero(phi) {
        return Err(Error::Precondition("Strichartz ratio of the zero field".into()));
    }
    Ok(StrichartzSample {
        window,
        ratio: strichartz_ratio(phi, pair, window, STRICHARTZ_TIME_STEP)?,
        doubled_ratio: strichartz_ratio(phi, pair, 2.0 * window, STRICHARTZ_TIME_STEP)?,
    })
}

/// Fixed profile `ψ = P̃[(x₁+ix₂)^m e^{−|x|²/2}]`, where `P̃` keeps the
/// annulus `1/2 ≤ |ξ| ≤ 2`. `ψ(λx)` then lives exactly in the `P_λ` block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedStrichartzSetup {
    pub harmonic: i32,
    /// Time window in rescaled units `τ = λ²t`.
    pub scaled_window: f64,
    /// Polar radius in rescaled units `λρ`, capped at `0.9L`.
    pub scaled_radius: f64,
    pub n_rho: usize,
    pub n_theta: usize,
}

impl Default for ExtendedStrichartzSetup {
    fn default() -> Self {
        Self {
            harmonic: 2,
            scaled_window: 3.0,
            scaled_radius: 18.0,
            n_rho: 128,
            n_theta: 128,
        }
    }
}

/// `ψ(λx)` projected onto `P_λ` on `grid`.
pub fn annulus_profile(grid: &Grid2D, lambda: u64, harmonic: i32) -> Result<WaveField> {
    let band = DyadicBand::new(lambda)?;
    let l = lambda as f64;
    let raw = WaveField::from_fn(grid, |x1, x2| {
        let (y1, y2) = (l * x1, l * x2);
        let z = C64::new(y1, if harmonic >= 0 { y2 } else { -y2 });
        z.powi(harmonic.abs()) * (-(y1 * y1 + y2 * y2) / 2.0).exp()
    });
    if lambda == 1 {
        return Ok(raw);
    }
    let proj = littlewood_paley(&raw, &band);
    if proj.beyond_nyquist {
        return Err(Error::param("lambda", format!("block {lambda} lies beyond the grid's Nyquist frequency")));
    }
    Ok(proj.field)
}

/// `λ^{2/r}‖e^{itΔ}φ_λ‖_{L_t²L_ρ^rL_θ²} / ‖φ_λ‖₂` on `[−τ/λ², τ/λ²]`.
pub fn extended_strichartz_ratio(
    phi: &WaveField,
    lambda: u64,
    r: f64,
    setup: &ExtendedStrichartzSetup,
    scaled_window: f64,
) -> Result<f64> {
    let l = lambda as f64;
    let rho_max = (setup.scaled_radius / l).min(0.9 * phi.grid().half_width());
    let pg = PolarGrid::new(setup.n_rho, rho_max, setup.n_theta)?;
    let (ts, ws) = simpson_nodes(scaled_window / (l * l), STRICHARTZ_TIME_STEP / (l * l));
    let norms = free_flow_norms(phi, &ts, &|u| Ok(to_polar(u, &pg)?.mixed_norm(&pg, r, 2.0)))?;
    let s: f64 = norms.iter().zip(&ws).map(|(n, w)| w * n * n).sum();
    Ok(l.powf(2.0 / r) * s.sqrt() / phi.norm_l2())
}

/// Normalized ratios across dyadic `λ`, with the log-log slope in `params["slope"]`
/// and the worst window-doubling change in `params["window_change"]`.
pub fn sample_extended_strichartz(
    grid: &Grid2D,
    lambdas: &[u64],
    r: f64,
    setup: &ExtendedStrichartzSetup,
) -> Result<InequalityReport> {
    if !(r > 6.0) {
        return Err(Error::param("r", format!("extended range needs r > 6, got {r}")));
    }
    if lambdas.is_empty() {
        return Err(Error::param("lambdas", "need at least one dyadic level"));
    }
    let mut ratios = Vec::with_capacity(lambdas.len());
    let mut worst_change: f64 = 0.0;
    for &lambda in lambdas {
        let phi = annulus_profile(grid, lambda, setup.harmonic)?;
        let a = extended_strichartz_ratio(&phi, lambda, r, setup, setup.scaled_window)?;
        let b = extended_strichartz_ratio(&phi, lambda, r, setup, 2.0 * setup.scaled_window)?;
        worst_change = worst_change.max((b - a).abs() / b);
        ratios.push(Some(a));
    }
    let xs: Vec<f64> = lambdas.iter().map(|&l| (l as f64).ln()).collect();
    let ys: Vec<f64> = ratios.iter().flatten().map(|v| v.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let mut report = InequalityReport::new(
        "extended_strichartz",
        &[("r", r), ("slope", slope), ("window_change", worst_change)],
        ratios,
    );
    for &l in lambdas {
        report.params.insert(format!("lambda_{l}"), l as f64);
    }
    Ok(report)
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Radial Schwartz mollifier `e^{−|x|²/(2ε²)}` normalized to unit integral.
pub fn radial_mollifier(grid: &Grid2D, eps: f64) -> WaveField {
    let c = 1.0 / (2.0 * PI * eps * eps);
    WaveField::from_real_fn(grid, |x, y| c * (-(x * x + y * y) / (2.0 * eps * eps)).exp())
}
