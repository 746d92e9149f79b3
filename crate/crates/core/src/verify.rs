//! Property suites behind the `verify` command.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::checkpoint::{decode_checkpoint, encode_checkpoint};
use crate::diagnostics::{dilation_a, energy, mass, record, variance, virial_rhs, StrichartzPair};
use crate::error::{Error, Result};
use crate::evolve::{evolve_with, free_propagate, EvolveConfig};
use crate::fields::{power_law_field, Sign};
use crate::grid::{Grid2D, SpectralField, WaveField, C64};
use crate::inequality::{
    check_angular_decay, check_commutation, check_corollary_decay, check_hardy_sobolev, check_radial_interpolation,
    sample_extended_strichartz, sample_strichartz, ExtendedStrichartzSetup, FamilyKind, InequalityReport, LabGrids,
    TestFunctionFamily,
};
use crate::series::{emit_diagnostics, parse_diagnostics};
use crate::spectral::{angular_derivative, dyadic_levels, littlewood_paley, sobolev_norm, DyadicBand};

/// Half-width of the boxes used by the suites.
pub const VERIFY_HALF_WIDTH: f64 = 16.0;

/// Samples per family in the inequality suite.
pub const VERIFY_FAMILY_SIZE: usize = 50;

/// Largest refinement change accepted for a sup ratio.
pub const REFINEMENT_TOLERANCE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Inequalities,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "inequalities" => Ok(Suite::Inequalities),
            "all" => Ok(Suite::All),
            other => Err(Error::param(
                "suite",
                format!("unknown suite `{other}`; expected identities, inequalities or all"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl SuiteCheck {
    fn at_most(suite: &str, name: &str, value: f64, threshold: f64) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub n: usize,
    pub passed: bool,
    pub checks: Vec<SuiteCheck>,
    pub inequality_reports: Vec<InequalityReport>,
}

pub fn run_verify(suite: Suite, seed: u64, n: usize) -> Result<VerifyReport> {
    if n < 64 {
        return Err(Error::param("n", format!("verify needs n >= 64, got {n}")));
    }
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    if matches!(suite, Suite::Identities | Suite::All) {
        checks.extend(identity_checks(seed, n)?);
    }
    if matches!(suite, Suite::Inequalities | Suite::All) {
        let (c, r) = inequality_checks(seed, n)?;
        checks.extend(c);
        reports.extend(r);
    }
    Ok(VerifyReport {
        suite,
        seed,
        n,
        passed: checks.iter().all(|c| c.passed),
        checks,
        inequality_reports: reports,
    })
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn identity_checks(seed: u64, n: usize) -> Result<Vec<SuiteCheck>> {
    const S: &str = "identities";
    let grid = Grid2D::new(n, VERIFY_HALF_WIDTH)?;
    let bumps = TestFunctionFamily::new(FamilyKind::GaussianBumps, seed, 4).generate(&grid);
    let mut out = Vec::new();

    let parseval = bumps
        .iter()
        .map(|f| relative(SpectralField::forward(f).norm_sqr(), f.norm_sqr()))
        .fold(0.0, f64::max);
    out.push(SuiteCheck::at_most(S, "parseval", parseval, 1e-12));

    let group = bumps
        .iter()
        .map(|f| free_propagate(&free_propagate(f, 0.7), -0.7).sub(f).map(|d| d.norm_l2() / f.norm_l2()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(SuiteCheck::at_most(S, "free_group_inverse", group, 1e-12));

    let free_mass = bumps
        .iter()
        .map(|f| relative(mass(&free_propagate(f, 3.0)), mass(f)))
        .fold(0.0, f64::max);
    out.push(SuiteCheck::at_most(S, "free_mass", free_mass, 1e-12));

    let radial = WaveField::from_real_fn(&grid, |x, y| (-(x * x + y * y) / 4.0).exp());
    let angular = angular_derivative(&radial).norm_l2() / sobolev_norm(&radial, 1.0);
    out.push(SuiteCheck::at_most(S, "radial_angular_derivative", angular, 1e-10));

    let f = &bumps[0];
    let mut sum = WaveField::zeros(&grid);
    for level in dyadic_levels(&grid) {
        sum = sum.axpy(C64::new(1.0, 0.0), &littlewood_paley(f, &DyadicBand::new(level)?).field)?;
    }
    let partition = sum.sub(f)?.norm_l2() / f.norm_l2();
    out.push(SuiteCheck::at_most(S, "littlewood_paley_partition", partition, 1e-12));

    // narrower packets on coarse grids keep the family inside the box
    let mut family = TestFunctionFamily::new(FamilyKind::BandLimited, seed, 8);
    family.band_fraction = (256.0 / (3.0 * n as f64)).min(1.0);
    let mut worst: f64 = 0.0;
    for s in [1.0 / 3.0, 0.5, 1.0] {
        for rep in check_commutation(&family, &grid, s)? {
            worst = worst.max(rep.sup_ratio);
        }
    }
    out.push(SuiteCheck::at_most(S, "angular_commutation", worst, 1e-8));

    out.extend(short_run_checks(n)?);

    let bytes = encode_checkpoint(f, 0.5);
    let (back, t) = decode_checkpoint(&bytes)?;
    let same = back.samples() == f.samples() && t == 0.5 && encode_checkpoint(&back, t) == bytes;
    out.push(SuiteCheck::at_most(S, "checkpoint_round_trip", if same { 0.0 } else { 1.0 }, 0.0));

    Ok(out)
}

/// Virial, dilation, mass and energy on a short smooth defocusing run.
fn short_run_checks(n: usize) -> Result<Vec<SuiteCheck>> {
    const S: &str = "identities";
    let l = 12.0;
    let grid = Grid2D::new(n, l)?;
    let phi = WaveField::from_real_fn(&grid, |x, y| (-(x * x + y * y) / 2.0).exp());
    let k1 = power_law_field(0.25, 1.0, Sign::Defocusing, 0.9 * l)?;
    let k2 = power_law_field(1.0, 1.0, Sign::Defocusing, 0.9 * l)?;
    let cfg = EvolveConfig::new(1e-3, 0.2, k1, k2).with_stride(10);
    let (mut ts, mut a, mut var, mut rhs, mut records) = (vec![], vec![], vec![], vec![], vec![]);
    let e0 = energy(&phi, &k1, &k2);
    let summary = evolve_with(&phi, &cfg, |t, u| {
        ts.push(t);
        a.push(dilation_a(u));
        var.push(variance(u));
        rhs.push(virial_rhs(u, &k1, &k2));
        records.push(record(t, u, &k1, &k2));
    })?;

    let mut virial: f64 = 0.0;
    for i in 1..ts.len() - 1 {
        let da = (a[i + 1] - a[i - 1]) / (ts[i + 1] - ts[i - 1]);
        virial = virial.max(relative(da, rhs[i]));
    }
    let mut integral = 0.0;
    for i in 1..ts.len() {
        integral += 0.5 * (ts[i] - ts[i - 1]) * (a[i] + a[i - 1]);
    }
    let last = ts.len() - 1;
    let dilation = relative(4.0 * integral, var[last] - var[0]);
    let drift = relative(energy(&summary.final_state, &k1, &k2), e0);

    let csv = emit_diagnostics(&records);
    let round_trip = parse_diagnostics(&csv)? == records;

    Ok(vec![
        SuiteCheck::at_most(S, "virial_identity", virial, 1e-2),
        SuiteCheck::at_most(S, "dilation_identity", dilation, 1e-3),
        SuiteCheck::at_most(S, "mass_drift", summary.max_mass_drift, 1e-10),
        SuiteCheck::at_most(S, "energy_drift", drift, 1e-4),
        SuiteCheck::at_most(S, "diagnostics_csv_round_trip", if round_trip { 0.0 } else { 1.0 }, 0.0),
    ])
}

fn refinement_check(rep: &InequalityReport) -> SuiteCheck {
    let change = rep.refinement.map(|p| p.relative_change()).unwrap_or(f64::INFINITY);
    let value = if rep.all_finite() { change } else { f64::INFINITY };
    SuiteCheck::at_most("inequalities", &format!("{}_refinement", rep.id), value, REFINEMENT_TOLERANCE)
}

fn inequality_checks(seed: u64, n: usize) -> Result<(Vec<SuiteCheck>, Vec<InequalityReport>)> {
    const S: &str = "inequalities";
    let grids = LabGrids::refined(
        Grid2D::new(n, VERIFY_HALF_WIDTH)?,
        Grid2D::new(2 * n, VERIFY_HALF_WIDTH)?,
    )?;
    let bumps = TestFunctionFamily::new(FamilyKind::GaussianBumps, seed, VERIFY_FAMILY_SIZE);
    let radial = TestFunctionFamily::radial(seed, VERIFY_FAMILY_SIZE);
    let reports = vec![
        check_angular_decay(&bumps, &grids, 0.5)?,
        check_corollary_decay(&bumps, &grids, 4.0)?,
        check_hardy_sobolev(&bumps, &grids, 0.25, 4.0)?,
        check_radial_interpolation(&radial, &grids, 0.25)?,
    ];
    let mut checks: Vec<SuiteCheck> = reports.iter().map(refinement_check).collect();

    // ‖e^{itΔ}φ‖⁴_{L⁴} = π/(2(1+4t²)) for φ = e^{−|x|²/2}
    let sg = Grid2D::new(256, 48.0)?;
    let phi = WaveField::from_real_fn(&sg, |x, y| (-(x * x + y * y) / 2.0).exp());
    let window = 2.0;
    let sample = sample_strichartz(&phi, StrichartzPair::new(4.0, 4.0), window)?;
    let oracle = (std::f64::consts::PI / 2.0 * (2.0 * window).atan()).powf(0.25) / std::f64::consts::PI.sqrt();
    checks.push(SuiteCheck::at_most(S, "strichartz_l4_oracle", relative(sample.ratio, oracle), 1e-2));
    let isometry = sample_strichartz(&phi, StrichartzPair::new(f64::INFINITY, 2.0), window)?;
    checks.push(SuiteCheck::at_most(S, "strichartz_mass_isometry", (isometry.ratio - 1.0).abs(), 0.0));

    let eg = Grid2D::new(n.max(128), 12.0)?;
    let lambdas: Vec<u64> = [2u64, 4, 8, 16]
        .into_iter()
        .filter(|&l| 2.5 * l as f64 <= eg.nyquist())
        .collect();
    let ext = sample_extended_strichartz(&eg, &lambdas, 8.0, &ExtendedStrichartzSetup::default())?;
    let vals: Vec<f64> = ext.ratios.iter().flatten().copied().collect();
    let spread = vals.iter().copied().fold(0.0, f64::max) / vals.iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(SuiteCheck::at_most(S, "extended_strichartz_spread", spread, 2.0));
    checks.push(SuiteCheck::at_most(S, "extended_strichartz_slope", ext.params["slope"].abs(), 0.15));

    let mut all = reports;
    all.push(ext);
    Ok((checks, all))
}
