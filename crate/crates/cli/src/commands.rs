use std::path::{Path, PathBuf};

use maskdp::audit::{
    density_ratio_bound_check_bc, g_ratio_bound_check, sphere_integral_check,
    violation_probability_mc, AuditReport, McConfig, Verdict,
};
use maskdp::calibration::{
    calibrate, diff_against_reference, parse_reference, sigma_joint_bc, sigma_sufficient_a,
    table1_rows, to_csv, CalibrationReport, CellMismatch, PrivacyBudget, ProblemShape, Table1Grid,
};
use maskdp::mechanisms::{
    gram, make_neighbor, max_abs_diff, release, release_components, sample_noise, DataMatrix,
    NeighborPair, Setting,
};
use maskdp::par::Exec;
use maskdp::quantiles::{birge_tail_check, gaussian_quantile_bracket, TailProbability};
use serde::Serialize;

use crate::config::{AuditConfig, Check, ReleaseConfig, RunConfig, SigmaChoice, RUN_CONFIG_FILE};
use crate::error::{CliError, Result};
use crate::ingest::ingest;

pub const PSEUDO_DATA_FILE: &str = "pseudo_data.csv";
pub const SIDECAR_FILE: &str = "release.json";
pub const SCALING_FILE: &str = "scaling.json";
pub const GRAM_FILE: &str = "gram.json";
pub const AUDIT_FILE: &str = "audit_report.json";

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, "write", e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, "create", e))
}

/// All bounds for one (ε, δ, n, p). Regime failures are listed in the
/// report and also returned as an error after the report is built.
pub fn run_calibrate(
    epsilon: f64,
    delta: f64,
    n: usize,
    p: usize,
) -> Result<(CalibrationReport, Option<CliError>)> {
    let budget = PrivacyBudget::new(epsilon, delta)?;
    let shape = ProblemShape::new(n, p)?;
    let report = calibrate(&budget, &shape)?;
    let err = if report.regime_errors.is_empty() {
        None
    } else {
        Some(CliError::Input(report.regime_errors.join("; ")))
    };
    Ok((report, err))
}

pub fn resolve_release_sigma(
    choice: SigmaChoice,
    setting: Setting,
    n: usize,
    p: usize,
) -> Result<f64> {
    match choice {
        SigmaChoice::Fixed { sigma } => Ok(sigma),
        SigmaChoice::Auto { epsilon, delta } => {
            let budget = PrivacyBudget::new(epsilon, delta)?;
            Ok(match setting {
                Setting::A => sigma_sufficient_a(&budget)?,
                Setting::B | Setting::C => {
                    sigma_joint_bc(&budget, &ProblemShape::new(n, p)?)?.sigma
                }
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramReport {
    pub p: usize,
    /// YᵀY of the released data, row-major.
    pub pseudo_gram: Vec<f64>,
    /// (X+C)ᵀ(X+C) of the noised, unmasked data.
    pub noised_gram: Vec<f64>,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub identity_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReleaseSummary {
    pub sigma: f64,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram_identity_holds: Option<bool>,
}

fn format_csv(values: &[f64], p: usize, header: Option<&[String]>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Input(format!("cannot format CSV: {e}"));
    if let Some(h) = header {
        w.write_record(h).map_err(fail)?;
    }
    for row in values.chunks(p) {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Input(format!("cannot format CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("ascii output"))
}

/// Ingests, releases and writes every artifact of one release into `out_dir`.
pub fn run_release(cfg: &ReleaseConfig, out_dir: &Path) -> Result<ReleaseSummary> {
    cfg.validate()?;
    let ingested = ingest(&cfg.input, cfg.header)?;
    let (n, p) = (ingested.data.n(), ingested.data.p());
    let sigma = resolve_release_sigma(cfg.sigma, cfg.setting, n, p)?;
    let art = release(&ingested.data, cfg.setting, sigma, cfg.seed)?;

    create_dir(out_dir)?;
    let mut files = Vec::new();
    let mut put = |name: &str, contents: String| -> Result<()> {
        write_file(&out_dir.join(name), &contents)?;
        files.push(name.to_string());
        Ok(())
    };
    put(
        PSEUDO_DATA_FILE,
        format_csv(&art.pseudo_data, p, ingested.header.as_deref())?,
    )?;
    put(SIDECAR_FILE, to_json(&art.sidecar()))?;
    put(SCALING_FILE, to_json(&ingested.scaling))?;
    put(RUN_CONFIG_FILE, to_json(&RunConfig::Release(cfg.clone())))?;

    let mut gram_identity_holds = None;
    if cfg.report_gram {
        let parts = release_components(n, p, cfg.setting, sigma, cfg.seed)?;
        let noisy: Vec<f64> = ingested
            .data
            .values()
            .iter()
            .zip(&parts.noise)
            .map(|(a, c)| a + c)
            .collect();
        let pseudo_gram = gram(&art.pseudo_data, n, p);
        let noised_gram = gram(&noisy, n, p);
        let diff = max_abs_diff(&pseudo_gram, &noised_gram);
        let tolerance = 1e-9 * n as f64;
        let report = GramReport {
            p,
            pseudo_gram,
            noised_gram,
            max_abs_diff: diff,
            tolerance,
            identity_holds: diff <= tolerance,
        };
        gram_identity_holds = Some(report.identity_holds);
        put(GRAM_FILE, to_json(&report))?;
    }
    Ok(ReleaseSummary {
        sigma,
        files,
        gram_identity_holds,
    })
}

/// Parses `key=v1,v2` restrictions of the default grid.
pub fn parse_grid(specs: &[String]) -> Result<Table1Grid> {
    let mut grid = Table1Grid::default();
    for spec in specs {
        let (key, vals) = spec.split_once('=').ok_or_else(|| {
            CliError::Input(format!("grid entry {spec:?} must look like key=v1,v2"))
        })?;
        let items: Vec<&str> = vals
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        if items.is_empty() {
            return Err(CliError::Input(format!(
                "grid entry {spec:?} has no values"
            )));
        }
        let bad = |v: &str| CliError::Input(format!("grid value {v:?} for {key} is not a number"));
        let floats = || {
            items
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| bad(v)))
                .collect::<Result<Vec<_>>>()
        };
        let ints = || {
            items
                .iter()
                .map(|v| v.parse::<usize>().map_err(|_| bad(v)))
                .collect::<Result<Vec<_>>>()
        };
        match key.trim() {
            "epsilon" => grid.epsilons = floats()?,
            "delta" => grid.deltas = floats()?,
            "p" => grid.ps = ints()?,
            "n" => grid.ns = ints()?,
            other => {
                return Err(CliError::Input(format!(
                    "unknown grid key {other:?}; expected epsilon, delta, p or n"
                )))
            }
        }
    }
    Ok(grid)
}

/// The table as CSV, and the mismatches against `reference` (restricted
/// to the rows of `grid`) when one is given.
pub fn run_table1(
    grid: &Table1Grid,
    reference: Option<&Path>,
    tol_sigma: f64,
    tol_ratio: f64,
    exec: Exec,
) -> Result<(String, Vec<CellMismatch>)> {
    let rows = table1_rows(grid, exec)?;
    let mut mismatches = Vec::new();
    if let Some(path) = reference {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, "read", e))?;
        let reference: Vec<_> = parse_reference(&text)?
            .into_iter()
            .filter(|r| {
                grid.epsilons.contains(&r.epsilon)
                    && grid.deltas.contains(&r.delta)
                    && grid.ps.contains(&r.p)
                    && grid.ns.contains(&r.n)
            })
            .collect();
        mismatches = diff_against_reference(&rows, &reference, tol_sigma, tol_ratio);
    }
    Ok((to_csv(&rows), mismatches))
}

/// Base data with a zero first row and all other entries 1; the neighbor
/// moves the first row by 1/√p in every coordinate (‖Δ‖ = 1).
pub fn audit_pair(n: usize, p: usize) -> Result<NeighborPair> {
    if n == 0 || p == 0 {
        return Err(CliError::Input("--n and --p must be positive".into()));
    }
    let mut values = vec![1.0; n * p];
    values[..p].fill(0.0);
    let x = DataMatrix::new(n, p, values)?;
    Ok(make_neighbor(&x, 0, &vec![1.0 / (p as f64).sqrt(); p])?)
}

fn masked_sigma(cfg: &AuditConfig) -> Result<f64> {
    match cfg.sigma {
        Some(s) => Ok(s),
        None => Ok(sigma_joint_bc(
            &PrivacyBudget::new(cfg.epsilon, cfg.delta)?,
            &ProblemShape::new(cfg.n, cfg.p)?,
        )?
        .sigma),
    }
}

fn quantile_bracket_report() -> Result<AuditReport> {
    // δ = 10^-k / 2^j below 0.05
    let mut total = 0u64;
    let mut failures = 0u64;
    for k in 0..=12 {
        for j in 0..=20 {
            let d = 10f64.powi(-k) / 2f64.powi(j);
            if d >= 0.05 {
                continue;
            }
            total += 1;
            if !gaussian_quantile_bracket(TailProbability::new(d)?)?.holds_strictly() {
                failures += 1;
            }
        }
    }
    Ok(AuditReport {
        estimate: failures as f64,
        std_error: 0.0,
        analytic_reference: None,
        bound_reference: Some(0.0),
        samples: total,
        verdict: Verdict::from_ok(failures == 0),
    })
}

fn birge_report() -> Result<AuditReport> {
    let mut worst = 0.0f64;
    let mut total = 0;
    for &k in &[1u64, 10, 100, 1000] {
        for &x in &[0.01, 0.1, 1.0, 5.0, 20.0] {
            let c = birge_tail_check(k, x)?;
            worst = worst.max(c.tail_prob / c.bound_prob);
            total += 1;
        }
    }
    Ok(AuditReport {
        estimate: worst,
        std_error: 0.0,
        analytic_reference: None,
        bound_reference: Some(1.0),
        samples: total,
        verdict: Verdict::from_ok(worst <= 1.0),
    })
}

fn with_guidance(e: maskdp::Error) -> CliError {
    match e {
        maskdp::Error::Refused(msg) => CliError::Input(format!(
            "refused: {msg}; rerun with a smaller --n and --p (the masked checks audit desk-scale shapes)"
        )),
        e => e.into(),
    }
}

pub fn run_audit(cfg: &AuditConfig, exec: Exec) -> Result<AuditReport> {
    cfg.validate()?;
    let mc = |default: usize| {
        McConfig::new(cfg.samples.unwrap_or(default), cfg.seed)
            .with_inner_samples(cfg.inner_samples)
            .with_exec(exec)
    };
    let report = match cfg.check {
        Check::ViolationA => {
            let sigma = match cfg.sigma {
                Some(s) => s,
                None => sigma_sufficient_a(&PrivacyBudget::new(cfg.epsilon, cfg.delta)?)?,
            };
            let pair = audit_pair(cfg.n, cfg.p)?;
            violation_probability_mc(&pair, Setting::A, sigma, cfg.epsilon, &mc(1_000_000))?
                .with_upper_bound(cfg.delta)
        }
        Check::ViolationBc => {
            let sigma = masked_sigma(cfg)?;
            let pair = audit_pair(cfg.n, cfg.p)?;
            violation_probability_mc(&pair, cfg.setting, sigma, cfg.epsilon, &mc(200))
                .map_err(with_guidance)?
                .with_upper_bound(cfg.delta)
        }
        Check::RatioBound => {
            let sigma = masked_sigma(cfg)?;
            density_ratio_bound_check_bc(&audit_pair(cfg.n, cfg.p)?, sigma, &mc(200))
                .map_err(with_guidance)?
        }
        Check::GRatio => g_ratio_bound_check(cfg.q.unwrap_or(5), cfg.t1, cfg.t2)?,
        Check::Sphere => {
            let v = match &cfg.v {
                Some(v) => v.clone(),
                None => sample_noise(cfg.n, 1, 1.0, cfg.seed)?,
            };
            sphere_integral_check(
                cfg.n,
                cfg.q.unwrap_or(2) as usize,
                &v,
                cfg.seed,
                cfg.samples.unwrap_or(100_000),
            )?
        }
        Check::QuantileBrackets => quantile_bracket_report()?,
        Check::Birge => birge_report()?,
    };
    Ok(report)
}

/// Runs an audit and, when `out_dir` is given, stores the report and config.
pub fn run_audit_to(
    cfg: &AuditConfig,
    out_dir: Option<&Path>,
    exec: Exec,
) -> Result<(AuditReport, Vec<String>)> {
    let report = run_audit(cfg, exec)?;
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        write_file(&dir.join(AUDIT_FILE), &to_json(&report))?;
        write_file(
            &dir.join(RUN_CONFIG_FILE),
            &to_json(&RunConfig::Audit(cfg.clone())),
        )?;
        files = vec![AUDIT_FILE.to_string(), RUN_CONFIG_FILE.to_string()];
    }
    Ok((report, files))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplaySummary {
    pub identical: bool,
    pub compared: Vec<String>,
    pub differing: Vec<String>,
    pub replay_dir: PathBuf,
}

pub fn load_run_config(dir: &Path) -> Result<RunConfig> {
    let path = dir.join(RUN_CONFIG_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, "read", e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("invalid {}: {e}", path.display())))
}

/// Re-executes the run recorded in `dir` into `out_dir` and compares every
/// artifact byte for byte.
pub fn run_replay(dir: &Path, out_dir: &Path, exec: Exec) -> Result<ReplaySummary> {
    let files = match load_run_config(dir)? {
        RunConfig::Release(cfg) => run_release(&cfg, out_dir)?.files,
        RunConfig::Audit(cfg) => run_audit_to(&cfg, Some(out_dir), exec)?.1,
    };
    let mut differing = Vec::new();
    for name in &files {
        let read = |d: &Path| {
            let path = d.join(name);
            std::fs::read(&path).map_err(|e| CliError::io(&path, "read", e))
        };
        if read(dir)? != read(out_dir)? {
            differing.push(name.clone());
        }
    }
    Ok(ReplaySummary {
        identical: differing.is_empty(),
        compared: files,
        differing,
        replay_dir: out_dir.to_path_buf(),
    })
}
