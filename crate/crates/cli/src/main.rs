use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;

use icqnls::checkpoint::{read_header, write_checkpoint, HEADER_LEN};
use icqnls::config::RunConfig;
use icqnls::error::Error;
use icqnls::inequality::summary_csv;
use icqnls::scenarios::run_scenario;
use icqnls::series::emit_diagnostics;
use icqnls::verify::{run_verify, Suite};

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_EARLY_TERMINATION: u8 = 3;
const EXIT_VERDICT_FAIL: u8 = 4;

#[derive(Parser)]
#[command(name = "icqnls", version, about = "Inhomogeneous cubic-quintic NLS laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario from a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace outputs of a previous run in the same directory.
        #[arg(long)]
        force: bool,
    },
    /// Run the identity and/or inequality property suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 128)]
        n: usize,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the inequality summary table.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the cartesian product of overrides, one process per point.
    Sweep {
        config: PathBuf,
        /// `key=v1,v2,...`, repeatable. Keys are dotted config paths.
        #[arg(long = "set", required = true)]
        sets: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Concurrent runs; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print a checkpoint header.
    Inspect { checkpoint: PathBuf },
}

/// An error paired with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self { code, error: error.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Checkpoint(_) => EXIT_IO,
            Error::EarlyTermination { .. } => EXIT_EARLY_TERMINATION,
            _ => EXIT_VALIDATION,
        };
        Failure::new(code, e)
    }
}

fn io_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::new(EXIT_IO, e)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Cmd::Run { config, out, force } => cmd_run(&config, out, force),
        Cmd::Verify { suite, seed, n, report, csv } => cmd_verify(&suite, seed, n, report, csv),
        Cmd::Sweep { config, sets, out, jobs } => cmd_sweep(&config, &sets, &out, jobs),
        Cmd::Inspect { checkpoint } => cmd_inspect(&checkpoint),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(io_err)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(io_err)
}

fn cmd_run(config: &Path, out: Option<PathBuf>, force: bool) -> Result<(), Failure> {
    let cfg = RunConfig::load(config)?;
    let dir = out
        .or_else(|| cfg.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("icqnls-out"));
    if dir.join("verdict.json").exists() {
        if !force {
            return Err(io_err(anyhow!("{} already holds a run; pass --force to replace it", dir.display())));
        }
        fs::remove_dir_all(&dir).map_err(io_err)?;
    }
    let ckpt_dir = dir.join("checkpoints");
    fs::create_dir_all(&ckpt_dir).with_context(|| format!("creating {}", dir.display())).map_err(io_err)?;

    let started = unix_seconds();
    let clock = Instant::now();
    let stride = cfg.output.checkpoint_stride;
    let mut snapshot = 0usize;
    let mut write_error = None;
    let result = run_scenario(&cfg, &mut |t, u| {
        if stride > 0 && snapshot % stride == 0 && write_error.is_none() {
            let path = ckpt_dir.join(format!("u_{snapshot:06}.icqn"));
            if let Err(e) = write_checkpoint(&path, u, t) {
                write_error = Some(e);
            }
        }
        snapshot += 1;
    })?;
    if let Some(e) = write_error {
        return Err(e.into());
    }

    fs::write(dir.join("diagnostics.csv"), emit_diagnostics(&result.diagnostics)).map_err(io_err)?;
    if cfg.output.emit_plots_data {
        fs::write(dir.join("series.csv"), result.series.to_csv()).map_err(io_err)?;
    }
    if let Some(phi) = &result.phi_plus {
        write_checkpoint(&dir.join("phi_plus.icqn"), phi, 0.0)?;
    }
    write_json(&dir.join("verdict.json"), &result.verdict)?;
    write_json(
        &dir.join("meta.json"),
        &json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config": config.display().to_string(),
            "started_unix": started,
            "finished_unix": unix_seconds(),
            "wall_seconds": clock.elapsed().as_secs_f64(),
        }),
    )?;

    let v = &result.verdict;
    println!(
        "{} {} ({}) -> {}",
        v.scenario.label(),
        if v.passed { "PASS" } else { "FAIL" },
        v.termination.label(),
        dir.display()
    );
    for c in v.checks.iter().filter(|c| !c.passed) {
        println!("  failed check {}: {:?}", c.name, c);
    }
    if v.unexpected_termination {
        Err(Failure::new(EXIT_EARLY_TERMINATION, anyhow!("run terminated early: {}", v.termination.label())))
    } else if !v.passed {
        Err(Failure::new(EXIT_VERDICT_FAIL, anyhow!("verdict failed")))
    } else {
        Ok(())
    }
}

fn cmd_verify(suite: &str, seed: u64, n: usize, report: Option<PathBuf>, csv: Option<PathBuf>) -> Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    let rep = run_verify(suite, seed, n)?;
    for c in &rep.checks {
        eprintln!(
            "{} {}/{}: {:.3e} (threshold {:.3e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.value,
            c.threshold
        );
    }
    match report {
        Some(path) => write_json(&path, &rep)?,
        None => println!("{}", serde_json::to_string_pretty(&rep).map_err(io_err)?),
    }
    if let Some(path) = csv {
        fs::write(&path, summary_csv(&rep.inequality_reports)).map_err(io_err)?;
    }
    if rep.passed {
        Ok(())
    } else {
        Err(Failure::new(EXIT_VERDICT_FAIL, anyhow!("verify: some checks failed")))
    }
}

/// Splits `key=v1,v2` into the key and its values.
fn parse_set(spec: &str) -> anyhow::Result<(String, Vec<String>)> {
    let (key, vals) = spec.split_once('=').ok_or_else(|| anyhow!("expected key=v1,v2 in `{spec}`"))?;
    let vals: Vec<String> = vals.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if key.trim().is_empty() || vals.is_empty() {
        return Err(anyhow!("expected key=v1,v2 in `{spec}`"));
    }
    Ok((key.trim().to_string(), vals))
}

fn cartesian(axes: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    let mut points = vec![Vec::new()];
    for (key, vals) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                vals.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

fn point_name(point: &[(String, String)]) -> String {
    point
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("_")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "=._-".contains(c) { c } else { '-' })
        .collect()
}

fn cmd_sweep(config: &Path, sets: &[String], out: &Path, jobs: Option<usize>) -> Result<(), Failure> {
    let base = RunConfig::load(config)?;
    let axes = sets
        .iter()
        .map(|s| parse_set(s))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(|e| Failure::new(EXIT_VALIDATION, e))?;

    // validate every point before launching anything
    let mut runs = Vec::new();
    for point in cartesian(&axes) {
        let mut cfg = base.clone();
        for (k, v) in &point {
            cfg = cfg.with_override(k, v)?;
        }
        cfg.output.directory = None;
        let dir = out.join(point_name(&point));
        runs.push((point, dir, cfg));
    }
    fs::create_dir_all(out).map_err(io_err)?;
    let exe = std::env::current_exe().map_err(io_err)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(io_err)?;
    let codes: Vec<anyhow::Result<i32>> = pool.install(|| {
        runs.par_iter()
            .map(|(_, dir, cfg)| {
                fs::create_dir_all(dir)?;
                let cfg_path = dir.join("config.toml");
                fs::write(&cfg_path, cfg.to_toml_string()?)?;
                info!("sweep point {}", dir.display());
                let status = Command::new(&exe)
                    .arg("run")
                    .arg(&cfg_path)
                    .arg("--out")
                    .arg(dir)
                    .arg("--force")
                    .status()?;
                Ok(status.code().unwrap_or(-1))
            })
            .collect()
    });

    let mut table = String::from("point,exit_code\n");
    let mut worst = 0;
    for ((point, _, _), code) in runs.iter().zip(codes) {
        let code = code.map_err(io_err)?;
        if code != 0 {
            warn!("sweep point {} exited with {code}", point_name(point));
        }
        worst = worst.max(code);
        table.push_str(&format!("{},{code}\n", point_name(point)));
    }
    fs::write(out.join("sweep.csv"), &table).map_err(io_err)?;
    print!("{table}");
    if worst == 0 {
        Ok(())
    } else {
        Err(Failure::new(EXIT_VERDICT_FAIL, anyhow!("some sweep points did not pass")))
    }
}

fn cmd_inspect(path: &Path) -> Result<(), Failure> {
    let h = read_header(path)?;
    println!("magic      ICQN");
    println!("version    {}", h.version);
    println!("n          {}", h.n);
    println!("L          {}", h.half_width);
    println!("t          {}", h.t);
    println!("header     {HEADER_LEN} bytes");
    println!("payload    {} bytes", h.payload_len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_product_order() {
        let axes = vec![
            ("a".to_string(), vec!["1".to_string(), "2".to_string()]),
            ("b".to_string(), vec!["x".to_string(), "y".to_string(), "z".to_string()]),
        ];
        let pts = cartesian(&axes);
        assert_eq!(pts.len(), 6);
        assert_eq!(point_name(&pts[0]), "a=1_b=x");
        assert_eq!(point_name(&pts[5]), "a=2_b=z");
    }

    #[test]
    fn set_parsing() {
        let (k, v) = parse_set("fields.b1=0.25, 0.5").unwrap();
        assert_eq!(k, "fields.b1");
        assert_eq!(v, vec!["0.25", "0.5"]);
        assert!(parse_set("fields.b1").is_err());
        assert!(parse_set("=1").is_err());
    }
}
