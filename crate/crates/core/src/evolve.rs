//! Time stepping: the exact free group, Strang splitting for the full
//! equation, blowup/aliasing detection and Duhamel consistency.

use serde::{Deserialize, Serialize};

use crate::diagnostics::boundary_mass_fraction;
use crate::error::{Error, Result};
use crate::fields::CoefficientField;
use crate::grid::{Grid2D, WaveField, C64};
use crate::spectral::{dealias_in_place, spectral_energy, tail_fraction_from_dft};

/// Multiplier `e^{−it|ξ|²}` in transform order.
pub(crate) fn free_multiplier(grid: &Grid2D, t: f64) -> Vec<C64> {
    let k = grid.wavenumbers();
    let mut out = Vec::with_capacity(grid.len());
    for &k2 in k {
        for &k1 in k {
            out.push(C64::from_polar(1.0, -t * (k1 * k1 + k2 * k2)));
        }
    }
    out
}

fn multiply(coeffs: &mut [C64], mult: &[C64]) {
    for (c, m) in coeffs.iter_mut().zip(mult) {
        *c *= m;
    }
}

/// `e^{itΔ}u`, exact up to roundoff for any real `t`.
pub fn free_propagate(u: &WaveField, t: f64) -> WaveField {
    if t == 0.0 {
        return u.clone();
    }
    let grid = u.grid();
    let mut c = grid.dft(u.samples());
    multiply(&mut c, &free_multiplier(grid, t));
    grid.idft_normalized(&mut c);
    WaveField::from_samples(grid, c).expect("same grid")
}

fn apply_phase(samples: &mut [C64], dt: f64, k1: &[f64], k2: &[f64]) {
    for ((z, &a), &b) in samples.iter_mut().zip(k1).zip(k2) {
        let m = z.norm_sqr();
        let phase = a * m + b * m * m;
        if phase != 0.0 {
            *z *= C64::from_polar(1.0, -dt * phase);
        }
    }
}

/// Exact solution of `iu_t = K₁|u|²u + K₂|u|⁴u` over `dt`.
pub fn nonlinear_phase_step(u: &WaveField, dt: f64, k1: &CoefficientField, k2: &CoefficientField) -> WaveField {
    let grid = u.grid();
    let a = k1.sample(grid);
    let b = k2.sample(grid);
    let mut out = u.clone();
    apply_phase(out.samples_mut(), dt, &a, &b);
    out
}

/// One Strang step: half free, full nonlinear phase, half free. Negative `dt` steps backwards.
pub fn strang_step(u: &WaveField, dt: f64, cfg: &EvolveConfig) -> WaveField {
    let half = free_propagate(u, dt / 2.0);
    let mid = nonlinear_phase_step(&half, dt, &cfg.k1, &cfg.k2);
    free_propagate(&mid, dt / 2.0)
}

/// Default blowup threshold as a multiple of `‖∇φ‖`.
pub const DEFAULT_BLOWUP_GRADIENT_FACTOR: f64 = 50.0;
pub const DEFAULT_TAIL_ENERGY_THRESHOLD: f64 = 0.01;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_final: f64,
    pub k1: CoefficientField,
    pub k2: CoefficientField,
    /// Blowup is flagged once `‖∇u‖ > factor·‖∇φ‖`.
    pub blowup_gradient_factor: f64,
    /// Absolute threshold on `‖∇u‖`, overriding the factor when set.
    pub blowup_gradient_threshold: Option<f64>,
    pub tail_energy_threshold: f64,
    pub record_stride: usize,
    /// Apply the 2/3 rule after every nonlinear substep (breaks exact mass conservation).
    pub dealias: bool,
}

impl EvolveConfig {
    pub fn new(dt: f64, t_final: f64, k1: CoefficientField, k2: CoefficientField) -> Self {
        Self {
            dt,
            t_final,
            k1,
            k2,
            blowup_gradient_factor: DEFAULT_BLOWUP_GRADIENT_FACTOR,
            blowup_gradient_threshold: None,
            tail_energy_threshold: DEFAULT_TAIL_ENERGY_THRESHOLD,
            record_stride: 1,
            dealias: false,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive and finite, got {}", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::param("T", format!("must be positive and finite, got {}", self.t_final)));
        }
        if !(self.blowup_gradient_factor > 0.0) {
            return Err(Error::param(
                "blowup_gradient_factor",
                format!("must be positive, got {}", self.blowup_gradient_factor),
            ));
        }
        if let Some(g) = self.blowup_gradient_threshold {
            if !(g > 0.0) {
                return Err(Error::param("blowup_gradient_threshold", format!("must be positive, got {g}")));
            }
        }
        let tail = self.tail_energy_threshold;
        if !(tail > 0.0 && tail < 1.0) {
            return Err(Error::param("tail_energy_threshold", format!("must lie in (0, 1), got {tail}")));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Step sizes covering `[0, T]`; the last one absorbs any remainder.
    pub fn step_sizes(&self) -> Vec<f64> {
        let ratio = self.t_final / self.dt;
        let full = (ratio + 1e-9).floor() as usize;
        let mut steps = vec![self.dt; full];
        let rem = self.t_final - full as f64 * self.dt;
        if rem > 1e-9 * self.dt {
            steps.push(rem);
        }
        if steps.is_empty() {
            steps.push(self.t_final);
        }
        steps
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "t", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowupDetected(f64),
    AliasingDetected(f64),
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BlowupDetected(_) => "blowup_detected",
            Termination::AliasingDetected(_) => "aliasing_detected",
        }
    }
}

/// Summary of a run, independent of how snapshots were consumed.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub termination: Termination,
    pub steps_taken: usize,
    pub final_time: f64,
    pub final_state: WaveField,
    /// Largest `|m(u_k) − m(φ)|/m(φ)` over all steps.
    pub max_mass_drift: f64,
    /// Largest fraction of mass in `|x| > 0.8L` over recorded snapshots.
    pub max_boundary_fraction: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, WaveField)>,
    pub termination: Termination,
    pub max_mass_drift: f64,
    pub max_boundary_fraction: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    pub fn last(&self) -> &WaveField {
        &self.snapshots.last().expect("trajectory has the initial snapshot").1
    }
}

/// Caches free-flow multipliers keyed by time increment.
struct PropagatorCache {
    grid: Grid2D,
    entries: Vec<(f64, Vec<C64>)>,
}

impl PropagatorCache {
    fn get(&mut self, t: f64) -> &[C64] {
        if let Some(pos) = self.entries.iter().position(|(s, _)| *s == t) {
            return &self.entries[pos].1;
        }
        self.entries.push((t, free_multiplier(&self.grid, t)));
        &self.entries.last().unwrap().1
    }
}

/// Runs the scheme and streams `(t, u(t))` to `observer` at `t = 0`, every
/// `record_stride` steps, and at the final (or terminal) step.
///
/// Consecutive free half steps are merged, so each step costs one forward and
/// one inverse FFT. Gradient norm and tail fraction are invariant under the
/// free group and are checked at the merge point.
pub fn evolve_with(
    phi: &WaveField,
    cfg: &EvolveConfig,
    mut observer: impl FnMut(f64, &WaveField),
) -> Result<RunSummary> {
    cfg.validate()?;
    if !phi.is_finite() {
        return Err(Error::Precondition("initial data contains non-finite samples".into()));
    }
    let grid = phi.grid().clone();
    let k1 = cfg.k1.sample(&grid);
    let k2 = cfg.k2.sample(&grid);
    let steps = cfg.step_sizes();
    let mut cache = PropagatorCache {
        grid: grid.clone(),
        entries: Vec::new(),
    };

    let dft0 = grid.dft(phi.samples());
    let grad_of = |c: &[C64]| spectral_energy(&grid, c, |a, b| a * a + b * b).sqrt();
    let mass_of = |c: &[C64]| spectral_energy(&grid, c, |_, _| 1.0);
    let mass0 = mass_of(&dft0);
    let threshold = cfg
        .blowup_gradient_threshold
        .unwrap_or(cfg.blowup_gradient_factor * grad_of(&dft0));

    observer(0.0, phi);
    let mut max_boundary = boundary_mass_fraction(phi);
    let mut max_drift: f64 = 0.0;

    let mut coeffs = dft0;
    multiply(&mut coeffs, cache.get(steps[0] / 2.0));
    grid.idft_normalized(&mut coeffs);
    let mut v = coeffs;

    let mut t = 0.0;
    let mut termination = Termination::Completed;
    let mut final_state = None;
    let mut taken = 0;
    for (k, &dt) in steps.iter().enumerate() {
        apply_phase(&mut v, dt, &k1, &k2);
        grid.fft2(&mut v, false);
        if cfg.dealias {
            dealias_in_place(&grid, &mut v);
        }
        t = if k + 1 == steps.len() { cfg.t_final } else { (k + 1) as f64 * cfg.dt };
        taken = k + 1;

        if mass0 > 0.0 {
            max_drift = max_drift.max((mass_of(&v) - mass0).abs() / mass0);
        }
        let grad = grad_of(&v);
        if !grad.is_finite() || grad > threshold {
            termination = Termination::BlowupDetected(t);
        } else if tail_fraction_from_dft(&grid, &v) > cfg.tail_energy_threshold {
            termination = Termination::AliasingDetected(t);
        }

        let last = k + 1 == steps.len() || !termination.is_completed();
        let record = last || (k + 1) % cfg.record_stride == 0;
        if record {
            multiply(&mut v, cache.get(dt / 2.0));
            let mut u = v.clone();
            grid.idft_normalized(&mut u);
            let field = WaveField::from_samples(&grid, u).expect("same grid");
            max_boundary = max_boundary.max(boundary_mass_fraction(&field));
            observer(t, &field);
            if last {
                final_state = Some(field);
                break;
            }
            multiply(&mut v, cache.get(steps[k + 1] / 2.0));
        } else {
            let next = steps[k + 1];
            multiply(&mut v, cache.get((dt + next) / 2.0));
        }
        grid.idft_normalized(&mut v);
    }

    Ok(RunSummary {
        termination,
        steps_taken: taken,
        final_time: t,
        final_state: final_state.expect("loop records the last step"),
        max_mass_drift: max_drift,
        max_boundary_fraction: max_boundary,
    })
}

/// Runs the scheme and keeps every recorded snapshot.
pub fn evolve(phi: &WaveField, cfg: &EvolveConfig) -> Result<Trajectory> {
    let mut snapshots = Vec::new();
    let summary = evolve_with(phi, cfg, |t, u| snapshots.push((t, u.clone())))?;
    Ok(Trajectory {
        snapshots,
        termination: summary.termination,
        max_mass_drift: summary.max_mass_drift,
        max_boundary_fraction: summary.max_boundary_fraction,
    })
}

/// Streaming trapezoid accumulator for the Duhamel integral in the
/// interaction picture: `∫₀ᵗ e^{−it′Δ}[K₁Q₁(u) + K₂Q₂(u)] dt′`.
pub struct DuhamelAccumulator {
    grid: Grid2D,
    k1: Vec<f64>,
    k2: Vec<f64>,
    integral: Vec<C64>,
    previous: Option<(f64, Vec<C64>)>,
}

impl DuhamelAccumulator {
    pub fn new(grid: &Grid2D, k1: &CoefficientField, k2: &CoefficientField) -> Self {
        Self {
            grid: grid.clone(),
            k1: k1.sample(grid),
            k2: k2.sample(grid),
            integral: vec![C64::new(0.0, 0.0); grid.len()],
            previous: None,
        }
    }

    /// Spectrum of `e^{−itΔ}N(u)`, with `N(u) = K₁|u|²u + K₂|u|⁴u`.
    fn pulled_back(&self, t: f64, u: &WaveField) -> Vec<C64> {
        let mut nl: Vec<C64> = u
            .samples()
            .iter()
            .zip(&self.k1)
            .zip(&self.k2)
            .map(|((z, a), b)| {
                let m = z.norm_sqr();
                z * (a * m + b * m * m)
            })
            .collect();
        self.grid.fft2(&mut nl, false);
        multiply(&mut nl, &free_multiplier(&self.grid, -t));
        nl
    }

    pub fn push(&mut self, t: f64, u: &WaveField) -> Result<()> {
        self.grid.check_same(u.grid())?;
        let term = self.pulled_back(t, u);
        if let Some((t0, prev)) = self.previous.take() {
            if t <= t0 {
                return Err(Error::Precondition(format!("snapshot times must increase ({t0} then {t})")));
            }
            let w = 0.5 * (t - t0);
            for ((acc, a), b) in self.integral.iter_mut().zip(&prev).zip(&term) {
                *acc += (a + b) * w;
            }
        }
        self.previous = Some((t, term));
        Ok(())
    }

    /// `‖u(T) − e^{iTΔ}(φ − i∫…)‖ / ‖u(T)‖` using the last pushed time as `T`.
    pub fn residual(&self, phi: &WaveField, u_final: &WaveField) -> Result<f64> {
        let (t_end, _) = self
            .previous
            .as_ref()
            .ok_or_else(|| Error::Precondition("no snapshots accumulated".into()))?;
        let grid = &self.grid;
        grid.check_same(phi.grid())?;
        let i = C64::new(0.0, 1.0);
        let mut rhs = grid.dft(phi.samples());
        for (r, acc) in rhs.iter_mut().zip(&self.integral) {
            *r -= i * acc;
        }
        multiply(&mut rhs, &free_multiplier(grid, *t_end));
        grid.idft_normalized(&mut rhs);
        let rhs = WaveField::from_samples(grid, rhs)?;
        let diff = u_final.sub(&rhs)?;
        let denom = u_final.norm_l2();
        Ok(if denom > 0.0 { diff.norm_l2() / denom } else { diff.norm_l2() })
    }
}

/// Relative Duhamel residual of a completed trajectory (trapezoid rule over snapshots).
pub fn duhamel_residual(traj: &Trajectory, cfg: &EvolveConfig) -> Result<f64> {
    if let Termination::BlowupDetected(t) | Termination::AliasingDetected(t) = traj.termination {
        return Err(Error::EarlyTermination {
            t,
            reason: traj.termination.label().into(),
        });
    }
    let (t0, phi) = traj
        .snapshots
        .first()
        .ok_or_else(|| Error::Precondition("empty trajectory".into()))?;
    if *t0 != 0.0 {
        return Err(Error::Precondition("trajectory must start at t = 0".into()));
    }
    let mut acc = DuhamelAccumulator::new(phi.grid(), &cfg.k1, &cfg.k2);
    for (t, u) in &traj.snapshots {
        acc.push(*t, u)?;
    }
    acc.residual(phi, traj.last())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{power_law_field, Sign};

    fn gaussian(grid: &Grid2D, amp: f64) -> WaveField {
        WaveField::from_real_fn(grid, |x, y| amp * (-(x * x + y * y) / 2.0).exp())
    }

    fn defocusing() -> (CoefficientField, CoefficientField) {
        (
            power_law_field(0.25, 1.0, Sign::Defocusing, f64::INFINITY).unwrap(),
            power_law_field(1.0, 1.0, Sign::Defocusing, f64::INFINITY).unwrap(),
        )
    }

    #[test]
    fn free_gaussian_peak() {
        let g = Grid2D::new(128, 12.0).unwrap();
        let u = free_propagate(&gaussian(&g, 1.0), 1.0);
        let peak = u.at(64, 64).norm();
        assert!((peak - 5f64.powf(-0.5)).abs() < 1e-10);
        assert!((free_propagate(&u, 0.0).sub(&u).unwrap().max_abs()) == 0.0);
    }

    #[test]
    fn free_group_inverse() {
        let g = Grid2D::new(64, 8.0).unwrap();
        let u = WaveField::from_fn(&g, |x, y| C64::new(x, 1.0 + y) * (-(x * x + 2.0 * y * y) / 3.0).exp());
        let back = free_propagate(&free_propagate(&u, 0.37), -0.37);
        assert!(back.sub(&u).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn phase_step_examples() {
        let g = Grid2D::new(16, 1.0).unwrap();
        let one = WaveField::from_real_fn(&g, |_, _| 1.0);
        let z = CoefficientField::zero();
        assert_eq!(nonlinear_phase_step(&one, 0.3, &z, &z).samples(), one.samples());
        let c = CoefficientField::constant(1.0);
        let out = nonlinear_phase_step(&one, 0.1, &c, &c);
        let want = C64::from_polar(1.0, -0.2);
        assert!(out.samples().iter().all(|s| (s - want).norm() < 1e-15));
    }

    #[test]
    fn strang_collapses_for_zero_coefficients() {
        let g = Grid2D::new(64, 8.0).unwrap();
        let u = gaussian(&g, 1.0);
        let z = CoefficientField::zero();
        let cfg = EvolveConfig::new(0.1, 1.0, z, z);
        let a = strang_step(&u, 0.1, &cfg);
        let b = free_propagate(&u, 0.1);
        assert!(a.sub(&b).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn strang_reversible_and_mass_preserving() {
        let g = Grid2D::new(64, 8.0).unwrap();
        let u = gaussian(&g, 1.5);
        let (k1, k2) = defocusing();
        let cfg = EvolveConfig::new(0.01, 1.0, k1, k2);
        let fwd = strang_step(&u, 0.01, &cfg);
        assert!((fwd.norm_sqr() - u.norm_sqr()).abs() < 1e-12 * u.norm_sqr());
        let back = strang_step(&fwd, -0.01, &cfg);
        assert!(back.sub(&u).unwrap().norm_l2() < 1e-10 * u.norm_l2());
    }

    #[test]
    fn merged_evolve_matches_repeated_strang() {
        let g = Grid2D::new(64, 8.0).unwrap();
        let phi = gaussian(&g, 1.0);
        let (k1, k2) = defocusing();
        let cfg = EvolveConfig::new(0.01, 0.1, k1, k2).with_stride(3);
        let traj = evolve(&phi, &cfg).unwrap();
        assert_eq!(traj.times().len(), 5);
        let mut u = phi.clone();
        for _ in 0..10 {
            u = strang_step(&u, 0.01, &cfg);
        }
        assert!(traj.last().sub(&u).unwrap().max_abs() < 1e-12);
        assert!((traj.snapshots.last().unwrap().0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn step_sizes_cover_horizon() {
        let z = CoefficientField::zero();
        let cfg = EvolveConfig::new(0.3, 1.0, z, z);
        let s = cfg.step_sizes();
        assert_eq!(s.len(), 4);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let cfg = EvolveConfig::new(1e-3, 1.0, z, z);
        assert_eq!(cfg.step_sizes().len(), 1000);
    }

    #[test]
    fn invalid_config_rejected() {
        let g = Grid2D::new(16, 4.0).unwrap();
        let phi = gaussian(&g, 1.0);
        let z = CoefficientField::zero();
        assert!(evolve(&phi, &EvolveConfig::new(0.0, 1.0, z, z)).is_err());
        assert!(evolve(&phi, &EvolveConfig::new(0.1, -1.0, z, z)).is_err());
        let mut cfg = EvolveConfig::new(0.1, 1.0, z, z);
        cfg.tail_energy_threshold = 1.5;
        assert!(evolve(&phi, &cfg).is_err());
        cfg.tail_energy_threshold = 0.01;
        cfg.record_stride = 0;
        assert!(evolve(&phi, &cfg).is_err());
    }

    #[test]
    fn linear_duhamel_is_exact() {
        let g = Grid2D::new(64, 10.0).unwrap();
        let phi = gaussian(&g, 1.0);
        let z = CoefficientField::zero();
        let cfg = EvolveConfig::new(0.05, 1.0, z, z).with_stride(2);
        let traj = evolve(&phi, &cfg).unwrap();
        assert!(duhamel_residual(&traj, &cfg).unwrap() < 1e-10);
    }
}
