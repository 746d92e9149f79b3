//! Experiment drivers: small-data scattering, variance blowup, potential
//! energy decay and the non-scattering correlation probe.

use std::collections::BTreeMap;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{
    BlowupKnobs, CorrelationSource, DecayKnobs, NonscatteringKnobs, RunConfig, ScatteringKnobs, ScenarioKind,
    ScenarioSection,
};
use crate::diagnostics::{
    annulus_mass, correlation_terms, energy, galilean_j_norm_sqr, h_theta_norm, mass, record, scattering_correlation_h,
    variance, weighted_sup, DiagnosticsRecord,
};
use crate::error::{Error, Result};
use crate::evolve::{evolve_with, free_propagate, DuhamelAccumulator, Termination};
use crate::fields::{rigidity_check, Sign};
use crate::grid::{WaveField, C64};
use crate::series::Series;

/// One named pass/fail check of a verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared against `threshold`.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            detail: detail.into(),
        }
    }

    fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value: if passed { 1.0 } else { 0.0 },
            threshold: 1.0,
            detail: detail.into(),
        }
    }
}

/// Least-squares fit of `log y = log c + p·log t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub name: String,
    pub exponent: f64,
    pub prefactor: f64,
    /// RMS residual in `log y`.
    pub residual: f64,
    pub window: [f64; 2],
    pub points: usize,
}

pub fn fit_power_law(name: &str, ts: &[f64], ys: &[f64], window: [f64; 2]) -> Option<ExponentFit> {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(ys)
        .filter(|(t, y)| **t >= window[0] - 1e-12 && **t <= window[1] + 1e-12 && **t > 0.0 && **y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Some(ExponentFit {
        name: name.into(),
        exponent: slope,
        prefactor: intercept.exp(),
        residual: (rss / n).sqrt(),
        window,
        points: pts.len(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub scenario: ScenarioKind,
    pub passed: bool,
    pub termination: Termination,
    /// Set when the run stopped early although the scenario requires completion.
    pub unexpected_termination: bool,
    pub checks: Vec<Check>,
    pub derived: BTreeMap<String, f64>,
    pub fits: Vec<ExponentFit>,
}

impl Verdict {
    fn new(scenario: ScenarioKind, termination: Termination) -> Self {
        Self {
            scenario,
            passed: false,
            termination,
            unexpected_termination: false,
            checks: Vec::new(),
            derived: BTreeMap::new(),
            fits: Vec::new(),
        }
    }

    fn finish(mut self) -> Self {
        self.passed = !self.unexpected_termination && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub verdict: Verdict,
    /// Scenario-specific columns for plotting.
    pub series: Series,
    /// Scattering state `w(T)` for scattering runs.
    pub phi_plus: Option<WaveField>,
}

/// Dispatches on the configured kind. `on_snapshot` sees every recorded state.
pub fn run_scenario(cfg: &RunConfig, on_snapshot: &mut dyn FnMut(f64, &WaveField)) -> Result<RunResult> {
    cfg.validate()?;
    match &cfg.scenario {
        ScenarioSection::Scattering(k) => scattering_with(cfg, k, on_snapshot),
        ScenarioSection::Blowup(k) => blowup_with(cfg, k, on_snapshot),
        ScenarioSection::Decay(k) => decay_with(cfg, k, on_snapshot),
        ScenarioSection::Nonscattering(k) => nonscattering_with(cfg, k, on_snapshot),
    }
}

fn wrong_kind(expected: ScenarioKind, cfg: &RunConfig) -> Error {
    Error::param(
        "scenario.kind",
        format!("expected `{}`, got `{}`", expected.label(), cfg.scenario.kind().label()),
    )
}

pub fn scattering_run(cfg: &RunConfig) -> Result<RunResult> {
    match &cfg.scenario {
        ScenarioSection::Scattering(k) => scattering_with(cfg, k, &mut |_, _| {}),
        _ => Err(wrong_kind(ScenarioKind::Scattering, cfg)),
    }
}

pub fn blowup_run(cfg: &RunConfig) -> Result<RunResult> {
    match &cfg.scenario {
        ScenarioSection::Blowup(k) => blowup_with(cfg, k, &mut |_, _| {}),
        _ => Err(wrong_kind(ScenarioKind::Blowup, cfg)),
    }
}

pub fn decay_run(cfg: &RunConfig) -> Result<RunResult> {
    match &cfg.scenario {
        ScenarioSection::Decay(k) => decay_with(cfg, k, &mut |_, _| {}),
        _ => Err(wrong_kind(ScenarioKind::Decay, cfg)),
    }
}

pub fn nonscattering_probe(cfg: &RunConfig) -> Result<RunResult> {
    match &cfg.scenario {
        ScenarioSection::Nonscattering(k) => nonscattering_with(cfg, k, &mut |_, _| {}),
        _ => Err(wrong_kind(ScenarioKind::Nonscattering, cfg)),
    }
}

fn near(t: f64, target: f64, dt: f64) -> bool {
    (t - target).abs() < 0.5 * dt
}

fn termination_check(verdict: &mut Verdict, termination: Termination) {
    if !termination.is_completed() {
        warn!("run terminated early: {termination:?}");
        verdict.unexpected_termination = true;
        verdict.checks.push(Check::flag(
            "completed",
            false,
            format!("integration stopped: {}", termination.label()),
        ));
    }
}

fn boundary_check(verdict: &mut Verdict, max_fraction: f64, limit: f64) {
    if max_fraction > limit {
        warn!("boundary mass fraction {max_fraction:e} exceeds {limit:e}");
    }
    verdict.checks.push(Check::at_most(
        "boundary_mass",
        max_fraction,
        limit,
        "max fraction of mass in |x| > 0.8L",
    ));
}

fn scattering_with(
    cfg: &RunConfig,
    knobs: &ScatteringKnobs,
    on_snapshot: &mut dyn FnMut(f64, &WaveField),
) -> Result<RunResult> {
    let ecfg = cfg.evolve_config()?;
    let (k1, k2) = (ecfg.k1, ecfg.k2);
    for (name, k, limit) in [("fields.b1", &k1, 1.0 / 3.0), ("fields.b2", &k2, 4.0 / 3.0)] {
        if !k.is_zero() && k.b >= limit {
            return Err(Error::param(name, format!("small-data scattering needs {name} < {limit:.4}, got {}", k.b)));
        }
    }
    if !(knobs.delta_small > 0.0) {
        return Err(Error::param("scenario.delta_small", "must be positive"));
    }
    if !(knobs.cauchy_interval > 0.0) {
        return Err(Error::param("scenario.cauchy_interval", "must be positive"));
    }
    let raw = cfg.initial_field()?;
    let norm0 = h_theta_norm(&raw, 1)?;
    if norm0 == 0.0 {
        return Err(Error::param("scenario.initial", "initial data vanishes"));
    }
    let phi = raw.scaled(C64::new(knobs.delta_small / norm0, 0.0));
    let delta = knobs.delta_small;
    let t_final = ecfg.t_final;
    let tail_start = t_final / 2.0;
    let monotone_after = knobs.monotone_after.unwrap_or((t_final / 4.0).min(5.0));
    let snap_dt = ecfg.dt * ecfg.record_stride as f64;

    let mut diagnostics = Vec::new();
    let mut checkpoints: Vec<(f64, WaveField)> = Vec::new();
    let mut duhamel = DuhamelAccumulator::new(phi.grid(), &k1, &k2);
    let mut push_error = None;
    let summary = evolve_with(&phi, &ecfg, |t, u| {
        diagnostics.push(record(t, u, &k1, &k2));
        if let Err(e) = duhamel.push(t, u) {
            push_error.get_or_insert(e);
        }
        let idx = (t / knobs.cauchy_interval).round();
        let on_grid = near(t, idx * knobs.cauchy_interval, snap_dt);
        if on_grid || near(t, tail_start, snap_dt) || near(t, t_final, snap_dt) {
            checkpoints.push((t, u.clone()));
        }
        on_snapshot(t, u);
    })?;
    if let Some(e) = push_error {
        return Err(e);
    }

    let mut verdict = Verdict::new(ScenarioKind::Scattering, summary.termination);
    verdict.derived.insert("delta_small".into(), delta);
    verdict.derived.insert("max_mass_drift".into(), summary.max_mass_drift);
    termination_check(&mut verdict, summary.termination);
    boundary_check(&mut verdict, summary.max_boundary_fraction, knobs.boundary_limit);

    let mut series = Series::new(&["t", "increment", "distance_to_scattering_state"]);
    let mut phi_plus = None;
    if summary.termination.is_completed() {
        // ‖w(a) − w(b)‖ = ‖u(a) − e^{i(a−b)Δ}u(b)‖ since e^{itΔ} is an isometry of
        // H_θ^{1,1}; short propagations keep dispersed high frequencies from
        // wrapping around the periodic box, where x·∇ no longer commutes with the flow.
        let gap = |a: &(f64, WaveField), b: &(f64, WaveField)| {
            let moved = free_propagate(&b.1, a.0 - b.0);
            h_theta_norm(&a.1.sub(&moved).expect("same grid"), 1).expect("order 1")
        };
        let last = (summary.final_time, summary.final_state.clone());
        let dist = |c: &(f64, WaveField)| gap(c, &last);
        let w_final = free_propagate(&summary.final_state, -summary.final_time);
        let increments: Vec<f64> = checkpoints.windows(2).map(|p| gap(&p[1], &p[0])).collect();
        let floor = 1e-10 * delta;
        // increments are compared on the regular lattice only
        let regular: Vec<(f64, f64)> = checkpoints
            .windows(2)
            .zip(&increments)
            .filter(|(p, _)| {
                let step = p[1].0 - p[0].0;
                (step - knobs.cauchy_interval).abs() < 0.5 * snap_dt
            })
            .map(|(p, d)| (p[1].0, *d))
            .collect();
        let worst_growth = regular
            .windows(2)
            .map(|w| w[1].1 - w[0].1 - floor)
            .fold(f64::NEG_INFINITY, f64::max);
        verdict.checks.push(Check::at_most(
            "increments_monotone",
            worst_growth.max(0.0),
            0.0,
            "largest growth between consecutive interaction-picture increments",
        ));

        let tail = checkpoints
            .iter()
            .find(|(t, _)| near(*t, tail_start, snap_dt))
            .map(dist)
            .unwrap_or(f64::INFINITY);
        verdict.checks.push(Check::at_most(
            "final_increment",
            tail,
            knobs.cauchy_tolerance * delta,
            format!("‖w(T) − w(T/2)‖ in H_θ^{{1,1}}, T/2 = {tail_start}"),
        ));

        let mut distances = Vec::new();
        for (i, c) in checkpoints.iter().enumerate() {
            let (t, d) = (&c.0, dist(c));
            let inc = if i == 0 { f64::NAN } else { increments[i - 1] };
            series.push(vec![*t, inc, d]);
            if *t >= monotone_after - 1e-12 && *t < summary.final_time - 0.5 * snap_dt {
                distances.push(d);
            }
        }
        let worst_rise = distances
            .windows(2)
            .map(|w| w[1] - w[0] - floor)
            .fold(0.0f64, f64::max);
        verdict.checks.push(Check::at_most(
            "distance_monotone",
            worst_rise,
            0.0,
            format!("‖u(t) − e^{{itΔ}}φ₊‖ nonincreasing for t ≥ {monotone_after}"),
        ));

        let residual = duhamel.residual(&phi, &summary.final_state)?;
        verdict.derived.insert("duhamel_residual".into(), residual);
        verdict.checks.push(Check::at_most(
            "duhamel_residual",
            residual,
            knobs.duhamel_tolerance,
            "relative L² residual of the integral equation at T",
        ));
        verdict.derived.insert("final_increment".into(), tail);
        phi_plus = Some(w_final);
    }

    info!("scattering run finished: {:?}", summary.termination);
    Ok(RunResult {
        diagnostics,
        verdict: verdict.finish(),
        series,
        phi_plus,
    })
}

/// Positive root of `a + b t + c t²` for `c < 0`.
fn parabola_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = b * b - 4.0 * a * c;
    (-b - disc.sqrt()) / (2.0 * c)
}

fn blowup_with(cfg: &RunConfig, knobs: &BlowupKnobs, on_snapshot: &mut dyn FnMut(f64, &WaveField)) -> Result<RunResult> {
    let ecfg = cfg.evolve_config()?;
    let grid = cfg.grid()?;
    let (k1, k2) = (ecfg.k1, ecfg.k2);
    let rigidity = rigidity_check(&k1, &k2, knobs.alpha, &grid)?;
    if !rigidity.passed {
        return Err(Error::param(
            "fields",
            format!(
                "rigidity condition fails for alpha = {} (margins {:.3e} at r = {:.3}, {:.3e} at r = {:.3})",
                knobs.alpha,
                rigidity.first.min_margin,
                rigidity.first.worst_radius,
                rigidity.second.min_margin,
                rigidity.second.worst_radius
            ),
        ));
    }
    let phi = cfg.initial_field()?;
    let e0 = energy(&phi, &k1, &k2);
    if !(e0 < 0.0) {
        return Err(Error::param(
            "scenario.initial",
            format!("blowup needs negative energy, E(φ) = {e0:.6e}"),
        ));
    }
    let var0 = variance(&phi);
    let a0 = crate::diagnostics::dilation_a(&phi);
    let curvature = (8.0 + 4.0 * knobs.alpha) * e0;
    let bound = |t: f64| var0 + 4.0 * a0 * t + curvature * t * t;
    let t_root = parabola_root(var0, 4.0 * a0, curvature);
    let slack = knobs.bound_tolerance * var0;

    let mut diagnostics = Vec::new();
    let summary = evolve_with(&phi, &ecfg, |t, u| {
        diagnostics.push(record(t, u, &k1, &k2));
        on_snapshot(t, u);
    })?;

    let mut verdict = Verdict::new(ScenarioKind::Blowup, summary.termination);
    verdict.derived.insert("energy".into(), e0);
    verdict.derived.insert("variance0".into(), var0);
    verdict.derived.insert("dilation0".into(), a0);
    verdict.derived.insert("bound_root".into(), t_root);

    let mut series = Series::new(&["t", "variance", "bound", "margin"]);
    let mut worst = f64::NEG_INFINITY;
    for r in &diagnostics {
        let b = bound(r.t);
        series.push(vec![r.t, r.variance, b, b + slack - r.variance]);
        worst = worst.max(r.variance - b);
    }
    verdict.checks.push(Check::at_most(
        "variance_bound",
        worst,
        slack,
        "max of variance(t) − (‖xφ‖² + 4𝒜(0)t + (8+4α)E t²)",
    ));

    // second differences of the variance against (16 + 8α)E
    let mut worst_curv = f64::NEG_INFINITY;
    for w in diagnostics.windows(3) {
        let (h1, h2) = (w[1].t - w[0].t, w[2].t - w[1].t);
        let second = 2.0 * (h1 * w[2].variance - (h1 + h2) * w[1].variance + h2 * w[0].variance) / (h1 * h2 * (h1 + h2));
        worst_curv = worst_curv.max(second - 2.0 * curvature);
    }
    if worst_curv.is_finite() {
        verdict.derived.insert("max_curvature_excess".into(), worst_curv);
    }

    match summary.termination {
        Termination::BlowupDetected(t) => {
            verdict.derived.insert("blowup_time".into(), t);
            verdict.checks.push(Check::at_most(
                "blowup_before_root",
                t,
                t_root,
                "blowup detection time against the root of the variance bound",
            ));
        }
        Termination::AliasingDetected(t) => {
            verdict.unexpected_termination = true;
            verdict.checks.push(Check::flag(
                "blowup_detected",
                false,
                format!("resolution lost at t = {t} before the gradient threshold was reached"),
            ));
        }
        Termination::Completed => {
            verdict.checks.push(Check::flag(
                "blowup_detected",
                false,
                format!("no blowup detected up to T = {}", ecfg.t_final),
            ));
        }
    }

    Ok(RunResult {
        diagnostics,
        verdict: verdict.finish(),
        series,
        phi_plus: None,
    })
}

fn decay_with(cfg: &RunConfig, knobs: &DecayKnobs, on_snapshot: &mut dyn FnMut(f64, &WaveField)) -> Result<RunResult> {
    let ecfg = cfg.evolve_config()?;
    let (k1, k2) = (ecfg.k1, ecfg.k2);
    if k1.sign != Sign::Defocusing || k2.sign != Sign::Defocusing {
        return Err(Error::param("fields", "potential decay needs sign1 = sign2 = +1"));
    }
    if !(k1.b > 0.0) {
        return Err(Error::param("fields.b1", format!("potential decay needs b1 > 0, got {}", k1.b)));
    }
    if !(k2.b <= 2.0 + k1.b) {
        return Err(Error::param("fields.b2", format!("potential decay needs b2 <= 2 + b1, got {}", k2.b)));
    }
    if !(knobs.t_start > 0.0 && knobs.t_start < ecfg.t_final) {
        return Err(Error::param("scenario.t_start", "must lie in (0, T)"));
    }
    let phi = cfg.initial_field()?;
    let exponent = 2.0 - k1.b;

    let mut diagnostics = Vec::new();
    let mut jnorm = Vec::new();
    let summary = evolve_with(&phi, &ecfg, |t, u| {
        diagnostics.push(record(t, u, &k1, &k2));
        jnorm.push(galilean_j_norm_sqr(u, t));
        on_snapshot(t, u);
    })?;

    let mut verdict = Verdict::new(ScenarioKind::Decay, summary.termination);
    termination_check(&mut verdict, summary.termination);
    boundary_check(&mut verdict, summary.max_boundary_fraction, knobs.boundary_limit);

    let ts: Vec<f64> = diagnostics.iter().map(|r| r.t).collect();
    let vs: Vec<f64> = diagnostics.iter().map(|r| r.potential_v).collect();
    let weighted: Vec<f64> = ts.iter().zip(&vs).map(|(t, v)| t.powf(exponent) * v).collect();
    let w_start = interpolate(&ts, &weighted, knobs.t_start);
    let w_max = ts
        .iter()
        .zip(&weighted)
        .filter(|(t, _)| **t >= knobs.t_start)
        .map(|(_, w)| *w)
        .fold(w_start, f64::max);
    verdict.derived.insert("w_start".into(), w_start);
    verdict.derived.insert("w_max".into(), w_max);
    verdict.checks.push(Check::at_most(
        "weighted_potential_bounded",
        w_max,
        knobs.c_margin * w_start,
        format!("max t^{exponent}·V(u(t)) for t ≥ {} against C·W(t_start)", knobs.t_start),
    ));

    // pseudo-conformal balance d/dt[‖Ju‖² + 8t²V] ≤ 8 b₁ t V
    let mut series = Series::new(&["t", "potential_V", "weighted_V", "pseudo_conformal", "pc_margin"]);
    let pc: Vec<f64> = ts.iter().zip(&vs).zip(&jnorm).map(|((t, v), j)| j + 8.0 * t * t * v).collect();
    let mut worst_margin = f64::NEG_INFINITY;
    let mut scale = 0.0f64;
    for i in 0..ts.len() {
        let margin = if i > 0 && i + 1 < ts.len() {
            let d = (pc[i + 1] - pc[i - 1]) / (ts[i + 1] - ts[i - 1]);
            let rhs = 8.0 * k1.b * ts[i] * vs[i];
            scale = scale.max(rhs.abs());
            worst_margin = worst_margin.max(d - rhs);
            d - rhs
        } else {
            f64::NAN
        };
        series.push(vec![ts[i], vs[i], weighted[i], pc[i], margin]);
    }
    if worst_margin.is_finite() {
        verdict.derived.insert("pseudo_conformal_max_margin".into(), worst_margin);
        verdict.derived.insert("pseudo_conformal_scale".into(), scale);
    }

    let fit_start = knobs.t_start.max(5.0 * ecfg.dt * ecfg.record_stride as f64);
    if let Some(fit) = fit_power_law("potential_V", &ts, &vs, [fit_start, ecfg.t_final]) {
        verdict.fits.push(fit);
    }

    Ok(RunResult {
        diagnostics,
        verdict: verdict.finish(),
        series,
        phi_plus: None,
    })
}

/// Linear interpolation of `(xs, ys)` at `x`, clamped at the ends.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.iter().position(|&t| t >= x) {
        None => *ys.last().unwrap_or(&0.0),
        Some(0) => ys[0],
        Some(i) => {
            let s = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + s * (ys[i] - ys[i - 1])
        }
    }
}

/// Weights `θ` of the decay ratios `t^{1−θ}‖|x|^θu₊‖_∞`.
pub const DECAY_THETAS: [f64; 3] = [0.0, 0.25, 0.5];

fn nonscattering_with(
    cfg: &RunConfig,
    knobs: &NonscatteringKnobs,
    on_snapshot: &mut dyn FnMut(f64, &WaveField),
) -> Result<RunResult> {
    let ecfg = cfg.evolve_config()?;
    let grid = cfg.grid()?;
    let (k1, k2) = (ecfg.k1, ecfg.k2);
    if k1.sign != Sign::Defocusing || k1.kappa <= 0.0 || k1.b < 1.0 {
        return Err(Error::param("fields.b1", "the probe needs K₁ = κ|x|^{b1} with κ > 0 and b1 >= 1"));
    }
    if k2.sign != Sign::Defocusing || k2.b > 2.0 + k1.b {
        return Err(Error::param("fields.b2", "the probe needs K₂ = κ|x|^{b2} with 0 <= b2 <= 2 + b1"));
    }
    let (t0, t1) = (knobs.t_start, ecfg.t_final);
    if !(t0 > 0.0 && t0 < t1) {
        return Err(Error::param("scenario.t_start", "must lie in (0, T)"));
    }
    if !(knobs.annulus_delta > 0.0 && knobs.annulus_delta < knobs.annulus_k) {
        return Err(Error::param("scenario.annulus_delta", "need 0 < delta < k"));
    }
    let l = grid.half_width();
    if knobs.annulus_k * t1 > l {
        return Err(Error::param(
            "evolve.T",
            format!(
                "annulus outer radius k·T = {} exceeds L = {l}; feasible window is t ∈ [{t0}, {}]",
                knobs.annulus_k * t1,
                l / knobs.annulus_k
            ),
        ));
    }
    let phi_plus = cfg.initial_field()?;
    let m_plus = mass(&phi_plus);
    let snap_dt = ecfg.dt * ecfg.record_stride as f64;

    let mut samples: Vec<(f64, WaveField, WaveField)> = Vec::new();
    let mut diagnostics = Vec::new();
    let termination = match knobs.correlation_source {
        CorrelationSource::Free => {
            let count = ((t1 - t0) / snap_dt).round() as usize;
            for i in 0..=count {
                let t = if i == count { t1 } else { t0 + i as f64 * snap_dt };
                let u = free_propagate(&phi_plus, t);
                diagnostics.push(record(t, &u, &k1, &k2));
                on_snapshot(t, &u);
                samples.push((t, u.clone(), u));
            }
            Termination::Completed
        }
        CorrelationSource::Nonlinear => {
            let summary = evolve_with(&phi_plus, &ecfg, |t, u| {
                diagnostics.push(record(t, u, &k1, &k2));
                on_snapshot(t, u);
                if t >= t0 - 0.5 * snap_dt {
                    samples.push((t, u.clone(), free_propagate(&phi_plus, t)));
                }
            })?;
            summary.termination
        }
    };

    let mut verdict = Verdict::new(ScenarioKind::Nonscattering, termination);
    termination_check(&mut verdict, termination);
    verdict.derived.insert("mass_phi_plus".into(), m_plus);

    let mut columns = vec!["t", "H", "dH_dt", "J11", "J12", "J13", "J2", "annulus_mass", "weighted_J11"];
    let ratio_names: Vec<String> = DECAY_THETAS.iter().map(|th| format!("decay_ratio_{th}")).collect();
    columns.extend(ratio_names.iter().map(String::as_str));
    let mut series = Series::new(&columns);

    let weight_exp = 2.0 - k1.b;
    let mut hs = Vec::with_capacity(samples.len());
    let mut terms = Vec::with_capacity(samples.len());
    let mut annulus = Vec::with_capacity(samples.len());
    let mut ratios = Vec::with_capacity(samples.len());
    for (t, u, up) in &samples {
        hs.push(scattering_correlation_h(u, up)?);
        terms.push(correlation_terms(u, up, &k1, &k2)?);
        annulus.push(annulus_mass(up, knobs.annulus_delta * t, knobs.annulus_k * t));
        ratios.push(
            DECAY_THETAS
                .iter()
                .map(|th| t.powf(1.0 - th) * weighted_sup(up, *th))
                .collect::<Vec<f64>>(),
        );
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();

    // centered differences of H against the term decomposition
    let sums: Vec<f64> = terms.iter().map(|j| j.sum()).collect();
    let sum_scale = sums.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let mut worst_gap = 0.0f64;
    let mut budget = 0.0f64;
    let mut dh = vec![f64::NAN; ts.len()];
    for i in 1..ts.len().saturating_sub(1) {
        let (ha, hb) = (ts[i] - ts[i - 1], ts[i + 1] - ts[i]);
        dh[i] = (hs[i + 1] - hs[i - 1]) / (ha + hb);
        worst_gap = worst_gap.max((dh[i] - sums[i]).abs());
        // truncation of the centered difference: h²/6·|H'''|, H''' estimated from the terms
        let second = 2.0 * (ha * sums[i + 1] - (ha + hb) * sums[i] + hb * sums[i - 1]) / (ha * hb * (ha + hb));
        budget = budget.max(ha * hb / 6.0 * second.abs());
    }
    let budget = budget + 1e-6 * sum_scale;
    verdict.derived.insert("fd_budget".into(), budget);
    verdict.derived.insert("max_decomposition_gap".into(), worst_gap);

    let annulus_dev = annulus
        .iter()
        .map(|a| (a - m_plus).abs() / m_plus)
        .fold(0.0f64, f64::max);
    verdict.checks.push(Check::at_most(
        "annulus_mass",
        annulus_dev,
        knobs.annulus_band,
        format!(
            "max relative deviation of the mass in δt ≤ |x| ≤ kt from m(φ₊), δ = {}, k = {}",
            knobs.annulus_delta, knobs.annulus_k
        ),
    ));

    let weighted: Vec<f64> = ts
        .iter()
        .zip(&terms)
        .map(|(t, j)| t.powf(weight_exp) * j.j11)
        .collect();
    let w_min = weighted.iter().copied().fold(f64::INFINITY, f64::min);
    let w_max = weighted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = if w_min > 0.0 { (w_max - w_min) / w_min } else { f64::INFINITY };
    verdict.derived.insert("weighted_j11_min".into(), w_min);
    verdict.checks.push(Check::at_most(
        "weighted_j11_spread",
        spread,
        knobs.spread_tolerance,
        format!("(max − min)/min of t^{weight_exp}·J₁¹ over [{t0}, {t1}]"),
    ));
    verdict.checks.push(Check::at_most(
        "decomposition",
        worst_gap,
        budget,
        format!(
            "max |dH/dt − (J₁¹+J₁²+J₁³+J₂)| against the centered-difference budget (u from {:?} flow)",
            knobs.correlation_source
        ),
    ));

    for (i, t) in ts.iter().enumerate() {
        let j = &terms[i];
        let mut row = vec![*t, hs[i], dh[i], j.j11, j.j12, j.j13, j.j2, annulus[i], weighted[i]];
        row.extend(&ratios[i]);
        series.push(row);
    }
    for th in DECAY_THETAS.iter() {
        let ys: Vec<f64> = samples.iter().map(|(_, _, up)| weighted_sup(up, *th)).collect();
        if let Some(fit) = fit_power_law(&format!("sup_weight_{th}"), &ts, &ys, [t0, t1]) {
            verdict.fits.push(fit);
        }
    }

    Ok(RunResult {
        diagnostics,
        verdict: verdict.finish(),
        series,
        phi_plus: None,
    })
}

/// Log-log slopes of `‖|x|^θ e^{itΔ}φ₊‖_∞` over `[t_lo, t_hi]`.
pub fn free_decay_fits(phi_plus: &WaveField, thetas: &[f64], t_lo: f64, t_hi: f64, samples: usize) -> Result<Vec<ExponentFit>> {
    if !(t_lo > 0.0 && t_hi > t_lo) || samples < 2 {
        return Err(Error::param("window", "need 0 < t_lo < t_hi and at least two samples"));
    }
    let ts: Vec<f64> = (0..samples)
        .map(|i| t_lo * (t_hi / t_lo).powf(i as f64 / (samples - 1) as f64))
        .collect();
    let states: Vec<WaveField> = ts.iter().map(|t| free_propagate(phi_plus, *t)).collect();
    Ok(thetas
        .iter()
        .filter_map(|th| {
            let ys: Vec<f64> = states.iter().map(|u| weighted_sup(u, *th)).collect();
            fit_power_law(&format!("sup_weight_{th}"), &ts, &ys, [t_lo, t_hi])
        })
        .collect())
}
