//! Run configuration schema. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{EvolveConfig, DEFAULT_BLOWUP_GRADIENT_FACTOR, DEFAULT_TAIL_ENERGY_THRESHOLD};
use crate::fields::{power_law_field, CoefficientField, Sign};
use crate::grid::{Grid2D, WaveField, C64};

pub const SCHEMA_VERSION: u32 = 1;

/// Default cap radius as a fraction of the box half-width.
pub const DEFAULT_CAP_FRACTION: f64 = 0.9;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSection,
    #[serde(default)]
    pub fields: FieldsSection,
    pub evolve: EvolveSection,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

fn one() -> f64 {
    1.0
}

fn plus_one() -> i64 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsSection {
    #[serde(default)]
    pub b1: f64,
    #[serde(default)]
    pub kappa1: f64,
    #[serde(default = "plus_one")]
    pub sign1: i64,
    /// Absent means `0.9·L`; `inf` disables the cap.
    #[serde(default)]
    pub cap1: Option<f64>,
    #[serde(default)]
    pub b2: f64,
    #[serde(default)]
    pub kappa2: f64,
    #[serde(default = "plus_one")]
    pub sign2: i64,
    #[serde(default)]
    pub cap2: Option<f64>,
}

impl Default for FieldsSection {
    fn default() -> Self {
        Self {
            b1: 0.0,
            kappa1: 0.0,
            sign1: 1,
            cap1: None,
            b2: 0.0,
            kappa2: 0.0,
            sign2: 1,
            cap2: None,
        }
    }
}

fn default_stride() -> usize {
    1
}

fn default_factor() -> f64 {
    DEFAULT_BLOWUP_GRADIENT_FACTOR
}

fn default_tail() -> f64 {
    DEFAULT_TAIL_ENERGY_THRESHOLD
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_factor")]
    pub blowup_gradient_factor: f64,
    #[serde(default)]
    pub blowup_gradient_threshold: Option<f64>,
    #[serde(default = "default_tail")]
    pub tail_energy_threshold: f64,
    #[serde(default)]
    pub dealias: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    /// Write a checkpoint every this many recorded snapshots; 0 disables.
    #[serde(default)]
    pub checkpoint_stride: usize,
    #[serde(default)]
    pub emit_plots_data: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Scattering,
    Blowup,
    Decay,
    Nonscattering,
}

impl ScenarioKind {
    pub fn label(&self) -> &'static str {
        match self {
            ScenarioKind::Scattering => "scattering",
            ScenarioKind::Blowup => "blowup",
            ScenarioKind::Decay => "decay",
            ScenarioKind::Nonscattering => "nonscattering",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSection {
    Scattering(ScatteringKnobs),
    Blowup(BlowupKnobs),
    Decay(DecayKnobs),
    Nonscattering(NonscatteringKnobs),
}

impl ScenarioSection {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioSection::Scattering(_) => ScenarioKind::Scattering,
            ScenarioSection::Blowup(_) => ScenarioKind::Blowup,
            ScenarioSection::Decay(_) => ScenarioKind::Decay,
            ScenarioSection::Nonscattering(_) => ScenarioKind::Nonscattering,
        }
    }

    pub fn initial(&self) -> &InitialData {
        match self {
            ScenarioSection::Scattering(k) => &k.initial,
            ScenarioSection::Blowup(k) => &k.initial,
            ScenarioSection::Decay(k) => &k.initial,
            ScenarioSection::Nonscattering(k) => &k.initial,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringKnobs {
    pub initial: InitialData,
    /// Target `‖φ‖_{H_θ^{1,1}}`.
    #[serde(default = "ScatteringKnobs::default_delta")]
    pub delta_small: f64,
    /// Spacing of the interaction-picture checkpoints.
    #[serde(default = "one")]
    pub cauchy_interval: f64,
    /// Final increment `‖w(T) − w(T/2)‖` must stay below this multiple of `δ_small`.
    #[serde(default = "ScatteringKnobs::default_tolerance")]
    pub cauchy_tolerance: f64,
    /// Start of the monotone-distance window; defaults to `min(5, T/4)`.
    #[serde(default)]
    pub monotone_after: Option<f64>,
    #[serde(default = "default_boundary_limit")]
    pub boundary_limit: f64,
    #[serde(default = "ScatteringKnobs::default_duhamel")]
    pub duhamel_tolerance: f64,
}

impl ScatteringKnobs {
    fn default_delta() -> f64 {
        0.05
    }
    fn default_tolerance() -> f64 {
        1e-3
    }
    fn default_duhamel() -> f64 {
        1e-4
    }
}

fn default_boundary_limit() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupKnobs {
    pub initial: InitialData,
    #[serde(default)]
    pub alpha: f64,
    /// Slack on the variance bound, as a fraction of `‖xφ‖²`.
    #[serde(default = "BlowupKnobs::default_tolerance")]
    pub bound_tolerance: f64,
}

impl BlowupKnobs {
    fn default_tolerance() -> f64 {
        0.01
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayKnobs {
    pub initial: InitialData,
    #[serde(default = "DecayKnobs::default_margin")]
    pub c_margin: f64,
    #[serde(default = "one")]
    pub t_start: f64,
    #[serde(default = "default_boundary_limit")]
    pub boundary_limit: f64,
}

impl DecayKnobs {
    fn default_margin() -> f64 {
        2.0
    }
}

/// Source of the candidate nonlinear solution paired with `u₊ = e^{itΔ}φ₊`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationSource {
    /// `u` is the free flow `u₊` itself.
    Free,
    /// `u` solves the full equation with `u(0) = φ₊`.
    Nonlinear,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonscatteringKnobs {
    /// Profile `φ₊` of the free solution.
    pub initial: InitialData,
    #[serde(default = "one")]
    pub t_start: f64,
    #[serde(default = "NonscatteringKnobs::default_delta")]
    pub annulus_delta: f64,
    #[serde(default = "NonscatteringKnobs::default_k")]
    pub annulus_k: f64,
    /// Relative band around `m(φ₊)` for the annulus mass.
    #[serde(default = "NonscatteringKnobs::default_band")]
    pub annulus_band: f64,
    /// Allowed `(max − min)/min` of `t^{2−b₁}J₁¹` over the window.
    #[serde(default = "NonscatteringKnobs::default_spread")]
    pub spread_tolerance: f64,
    #[serde(default = "NonscatteringKnobs::default_source")]
    pub correlation_source: CorrelationSource,
}

impl NonscatteringKnobs {
    fn default_delta() -> f64 {
        0.05
    }
    fn default_k() -> f64 {
        20.0
    }
    fn default_band() -> f64 {
        0.05
    }
    fn default_spread() -> f64 {
        0.1
    }
    fn default_source() -> CorrelationSource {
        CorrelationSource::Free
    }
}

/// Named initial-data families.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialData {
    Gaussian(GaussianPacket),
    Checkpoint(CheckpointSource),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointSource {
    pub path: PathBuf,
}

/// `A·(z/w)^m·e^{−|x−c|²/(2w²)}·e^{i(ξ₀·x + χ|x−c|²)}` with `z = (x−c)₁ + i(x−c)₂`
/// (conjugated for negative `m`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPacket {
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default)]
    pub charge: i32,
    #[serde(default)]
    pub carrier: [f64; 2],
    #[serde(default)]
    pub chirp: f64,
}

impl Default for GaussianPacket {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            width: 1.0,
            center: [0.0, 0.0],
            charge: 0,
            carrier: [0.0, 0.0],
            chirp: 0.0,
        }
    }
}

impl GaussianPacket {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::param("initial.width", format!("must be positive, got {}", self.width)));
        }
        let finite = [self.amplitude, self.chirp, self.center[0], self.center[1], self.carrier[0], self.carrier[1]];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("initial", "parameters must be finite"));
        }
        Ok(())
    }

    pub fn sample(&self, grid: &Grid2D) -> Result<WaveField> {
        self.validate()?;
        let p = self.clone();
        Ok(WaveField::from_fn(grid, move |x1, x2| {
            let (y1, y2) = (x1 - p.center[0], x2 - p.center[1]);
            let r2 = y1 * y1 + y2 * y2;
            let envelope = p.amplitude * (-r2 / (2.0 * p.width * p.width)).exp();
            let z = C64::new(y1, if p.charge < 0 { -y2 } else { y2 }) / p.width;
            let vortex = z.powi(p.charge.abs());
            let phase = p.carrier[0] * x1 + p.carrier[1] * x2 + p.chirp * r2;
            vortex * C64::from_polar(envelope, phase)
        }))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks every section that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::param(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        self.grid()?;
        self.fields()?;
        self.evolve_config()?.validate()?;
        if let InitialData::Gaussian(p) = self.scenario.initial() {
            p.validate()?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.grid.n, self.grid.half_width)
    }

    pub fn fields(&self) -> Result<(CoefficientField, CoefficientField)> {
        let l = self.grid.half_width;
        let f = &self.fields;
        let k1 = build_field("fields.", "1", f.b1, f.kappa1, f.sign1, f.cap1, l)?;
        let k2 = build_field("fields.", "2", f.b2, f.kappa2, f.sign2, f.cap2, l)?;
        Ok((k1, k2))
    }

    pub fn evolve_config(&self) -> Result<EvolveConfig> {
        let (k1, k2) = self.fields()?;
        let e = &self.evolve;
        let mut cfg = EvolveConfig::new(e.dt, e.t_final, k1, k2);
        cfg.record_stride = e.record_stride;
        cfg.blowup_gradient_factor = e.blowup_gradient_factor;
        cfg.blowup_gradient_threshold = e.blowup_gradient_threshold;
        cfg.tail_energy_threshold = e.tail_energy_threshold;
        cfg.dealias = e.dealias;
        cfg.validate().map_err(|err| match err {
            Error::InvalidParameter { name, reason } => Error::param(format!("evolve.{name}"), reason),
            other => other,
        })?;
        Ok(cfg)
    }

    /// Samples (or loads) the initial field on the configured grid.
    pub fn initial_field(&self) -> Result<WaveField> {
        let grid = self.grid()?;
        match self.scenario.initial() {
            InitialData::Gaussian(p) => p.sample(&grid),
            InitialData::Checkpoint(src) => {
                let (field, _) = crate::checkpoint::read_checkpoint(&src.path)?;
                if field.grid() != &grid {
                    return Err(Error::GridMismatch(format!(
                        "checkpoint {} does not match the configured grid",
                        src.path.display()
                    )));
                }
                Ok(field)
            }
        }
    }

    /// Applies `key=value` with a dotted key path, e.g. `fields.b1=0.3`.
    pub fn with_override(&self, key: &str, value: &str) -> Result<RunConfig> {
        let mut doc: toml::Table = toml::from_str(&self.to_toml_string()?).map_err(|e| Error::Config(e.to_string()))?;
        let parsed: toml::Value = match format!("v = {value}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").expect("key present"),
            Err(_) => toml::Value::String(value.to_string()),
        };
        let parts: Vec<&str> = key.split('.').collect();
        let (last, path) = parts.split_last().ok_or_else(|| Error::Config("empty override key".into()))?;
        let mut table = &mut doc;
        for p in path {
            table = table
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a table")))?;
        }
        table.insert(last.to_string(), parsed);
        let text = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
        RunConfig::from_toml_str(&text)
    }
}

fn build_field(
    prefix: &str,
    index: &str,
    b: f64,
    kappa: f64,
    sign: i64,
    cap: Option<f64>,
    half_width: f64,
) -> Result<CoefficientField> {
    let rename = |err: Error| match err {
        Error::InvalidParameter { name, reason } => {
            let key = if name == "cap_radius" { "cap".to_string() } else { name };
            Error::param(format!("{prefix}{key}{index}"), reason)
        }
        other => other,
    };
    let sign = Sign::from_int(sign).map_err(rename)?;
    let cap = cap.unwrap_or(DEFAULT_CAP_FRACTION * half_width);
    power_law_field(b, kappa, sign, cap).map_err(rename)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema_version = 1
seed = 3

[grid]
n = 32
L = 8.0

[fields]
b1 = 0.25
kappa1 = 1.0
b2 = 1.0
kappa2 = 1.0

[evolve]
dt = 0.01
T = 0.1

[scenario]
kind = "scattering"

[scenario.initial]
family = "gaussian"
width = 2.0
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        assert_eq!(cfg.scenario.kind(), ScenarioKind::Scattering);
        let (k1, k2) = cfg.fields().unwrap();
        assert_eq!(k1.cap_radius, 7.2);
        assert_eq!(k2.sign, Sign::Defocusing);
        match &cfg.scenario {
            ScenarioSection::Scattering(k) => assert_eq!(k.delta_small, 0.05),
            _ => unreachable!(),
        }
        assert_eq!(cfg.evolve.record_stride, 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = BASE.replace("seed = 3", "seed = 3\nsneaky = 1");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(Error::Config(_))));
        let bad = BASE.replace("kappa2 = 1.0", "kappa2 = 1.0\nkappa3 = 2.0");
        assert!(RunConfig::from_toml_str(&bad).is_err());
        let bad = BASE.replace("width = 2.0", "width = 2.0\nheight = 1.0");
        assert!(RunConfig::from_toml_str(&bad).is_err());
        let bad = BASE.replace("kind = \"scattering\"", "kind = \"scattering\"\nalpha = 1.0");
        assert!(RunConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn negative_exponent_names_field() {
        let bad = BASE.replace("b1 = 0.25", "b1 = -1.0");
        let err = RunConfig::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("fields.b1"), "{err}");
    }

    #[test]
    fn infinite_cap_and_focusing_sign() {
        let cfg = BASE.replace("b2 = 1.0", "b2 = 1.0\ncap2 = inf\nsign2 = -1");
        let (_, k2) = RunConfig::from_toml_str(&cfg).unwrap().fields().unwrap();
        assert!(k2.cap_radius.is_infinite());
        assert_eq!(k2.sign, Sign::Focusing);
        let bad = BASE.replace("b2 = 1.0", "b2 = 1.0\nsign2 = 0");
        assert!(RunConfig::from_toml_str(&bad).unwrap_err().to_string().contains("fields.sign2"));
    }

    #[test]
    fn overrides_round_trip() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        let over = cfg.with_override("fields.b1", "0.3").unwrap();
        assert_eq!(over.fields.b1, 0.3);
        let over = over.with_override("scenario.delta_small", "0.01").unwrap();
        match &over.scenario {
            ScenarioSection::Scattering(k) => assert_eq!(k.delta_small, 0.01),
            _ => unreachable!(),
        }
        assert!(cfg.with_override("grid.nn", "3").is_err());
        let text = over.to_toml_string().unwrap();
        let again = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(again.to_toml_string().unwrap(), text);
    }

    #[test]
    fn packet_shapes() {
        let g = Grid2D::new(64, 8.0).unwrap();
        let p = GaussianPacket {
            charge: 1,
            ..Default::default()
        };
        let f = p.sample(&g).unwrap();
        // x + iy times the Gaussian
        let (i, j) = (40, 37);
        let (x, y) = (g.coord(j), g.coord(i));
        let want = C64::new(x, y) * (-(x * x + y * y) / 2.0).exp();
        assert!((f.at(i, j) - want).norm() < 1e-14);
        let bad = GaussianPacket {
            width: 0.0,
            ..Default::default()
        };
        assert!(bad.sample(&g).is_err());
    }
}
