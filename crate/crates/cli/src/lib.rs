//! Batch runs over scenario files: projected region boundaries, sum-rate
//! sweeps and the validation suites, written as CSV.

pub mod config;

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use mprelay::model::ModelError;
use mprelay::region::{
    comprehensive_hull, inside_hull, outer_boundary, sum_rate_sweep, trace_boundary, Point, RegionBoundary,
    RegionError,
};
use mprelay::validate::{
    degraded_bc_grid, kernel_oracle_check, lp_equivalence_check, reduction_check, ValidateError,
};
use thiserror::Error;

pub use config::{parse_config, preset, Group, ScenarioConfig, ValidateOptions};

pub const ORACLE_TOL: f64 = 1e-9;
pub const REDUCTION_TOL: f64 = 1e-12;
pub const DEGRADED_TOL: f64 = 1e-12;
pub const LP_TOL: f64 = 1e-10;
pub const SUBSET_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}:{line}: {msg}")]
    Csv { path: PathBuf, line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Twelve significant digits, scientific notation, no locale.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, body).map_err(io_err(path))
}

pub const REGION_HEADER: &str = "theta,down_sum,up_sum,feasible";

fn region_csv(b: &RegionBoundary) -> String {
    let mut s = format!("{REGION_HEADER}\n");
    for p in &b.points {
        match &p.solution {
            Some(sol) => writeln!(s, "{},{},{},1", num(p.theta), num(sol.down_sum), num(sol.up_sum)),
            None => writeln!(s, "{},nan,nan,0", num(p.theta)),
        }
        .expect("writing to a String");
    }
    s
}

/// Feasible `(down_sum, up_sum)` points of a region CSV.
pub fn read_region_csv(path: &Path) -> Result<Vec<Point>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |line: usize, msg: &str| CliError::Csv { path: path.to_path_buf(), line, msg: msg.into() };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == REGION_HEADER => {}
        _ => return Err(bad(1, "unexpected header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad(i + 1, "expected 4 fields"));
        }
        if f[3] == "1" {
            let parse = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
            out.push([parse(f[1])?, parse(f[2])?]);
        }
    }
    Ok(out)
}

fn region_path(cfg: &ScenarioConfig, label: &str) -> PathBuf {
    cfg.out_dir.join(format!("{label}.csv"))
}

/// Traces every configured protocol and outer family, writes one CSV each
/// plus one hull CSV per group, and returns the paths written.
pub fn run_region(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut boundaries = Vec::new();
    for &p in &cfg.protocols {
        boundaries.push(trace_boundary(p, &cfg.channel, &cfg.powers, &cfg.min_rates, &cfg.search)?);
    }
    for &f in &cfg.outer_families {
        boundaries.push(outer_boundary(f, &cfg.channel, &cfg.powers, &cfg.search)?);
    }
    let mut written = Vec::new();
    for b in &boundaries {
        let path = region_path(cfg, &b.label);
        write_file(&path, &region_csv(b))?;
        written.push(path);
    }
    for g in &cfg.groups {
        let pts: Vec<Point> =
            boundaries.iter().filter(|b| g.members.contains(&b.label)).flat_map(|b| b.projected()).collect();
        let mut s = String::from("down_sum,up_sum\n");
        for p in comprehensive_hull(&pts) {
            writeln!(s, "{},{}", num(p[0]), num(p[1])).expect("writing to a String");
        }
        let path = cfg.out_dir.join(format!("hull_{}.csv", g.name));
        write_file(&path, &s)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `power_dB,protocol,sum_rate` rows for every sweep power.
pub fn run_sumrate(cfg: &ScenarioConfig) -> Result<PathBuf, CliError> {
    if cfg.sweep_db.is_empty() {
        return Err(CliError::Config("`sweep_dB` is required for sumrate".into()));
    }
    let rows = sum_rate_sweep(&cfg.protocols, &cfg.outer_families, &cfg.channel, &cfg.sweep_db, &cfg.search)?;
    let mut s = String::from("power_dB,protocol,sum_rate\n");
    for r in rows {
        writeln!(s, "{},{},{}", num(r.power_db), r.label, num(r.sum_rate)).expect("writing to a String");
    }
    let path = cfg.out_dir.join(&cfg.sumrate_file);
    write_file(&path, &s)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub suites: Vec<SuiteResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            let verdict = if s.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{verdict} {:<15} worst={:.3e} {}", s.name, s.worst, s.detail)?;
        }
        write!(f, "{}", if self.passed() { "all suites passed" } else { "validation FAILED" })
    }
}

/// Relay link magnitudes as `(stronger, weaker)`, or a fixed pair when the
/// configured channel has no strict ordering.
fn degraded_gains(cfg: &ScenarioConfig) -> (f64, f64) {
    let r = cfg.channel.relay();
    let (a, b) = (cfg.channel.gain(r, 1), cfg.channel.gain(r, 2));
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo > 0.0 && hi > lo {
        (hi, lo)
    } else {
        (1.0, 0.5)
    }
}

fn subset_suite(cfg: &ScenarioConfig) -> Result<SuiteResult, CliError> {
    let mut worst: f64 = 0.0;
    let mut checked = Vec::new();
    let mut failed = Vec::new();
    for &p in &cfg.protocols {
        let Some(family) = p.family() else { continue };
        let (inner, outer) = if cfg.validate.cached {
            (read_region_csv(&region_path(cfg, p.name()))?, read_region_csv(&region_path(cfg, family.name()))?)
        } else {
            let inner = trace_boundary(p, &cfg.channel, &cfg.powers, &cfg.min_rates, &cfg.search)?;
            let outer = outer_boundary(family, &cfg.channel, &cfg.powers, &cfg.search)?;
            (inner.projected(), outer.projected())
        };
        let hull = comprehensive_hull(&outer);
        // Smallest grow-out tolerance that admits each point, by bisection.
        for q in &inner {
            if !inside_hull(&hull, *q, 0.0) {
                let (mut lo, mut hi) = (0.0, 1.0);
                if inside_hull(&hull, *q, hi) {
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if inside_hull(&hull, *q, mid) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                }
                worst = worst.max(hi);
            }
        }
        let ok = inner.iter().all(|q| inside_hull(&hull, *q, SUBSET_TOL));
        checked.push(p.name());
        if !ok {
            failed.push(p.name());
        }
    }
    let detail = if checked.is_empty() {
        "no protocol with an outer family configured".to_string()
    } else if failed.is_empty() {
        format!("{} inside their outer bounds", checked.join(" "))
    } else {
        format!("outside: {}", failed.join(" "))
    };
    Ok(SuiteResult { name: "inner_in_outer", passed: failed.is_empty(), worst, detail })
}

/// Runs the oracle, reduction, degraded-broadcast, LP and nesting suites.
pub fn run_validate(cfg: &ScenarioConfig) -> Result<ValidationReport, CliError> {
    let seed = cfg.search.seed;
    let v = &cfg.validate;
    let mut suites = Vec::new();

    let mut worst: f64 = 0.0;
    let mut name = "";
    for s in 0..3 {
        let r = kernel_oracle_check(seed.wrapping_add(s), v.draws)?;
        if r.max_abs_error >= worst {
            worst = r.max_abs_error;
            name = r.worst;
        }
    }
    suites.push(SuiteResult {
        name: "kernel_oracle",
        passed: worst <= ORACLE_TOL,
        worst,
        detail: format!("3 seeds x {} draws, worst kernel {name}", v.draws),
    });

    let r = reduction_check(seed, 200)?;
    suites.push(SuiteResult {
        name: "reductions",
        passed: r.max_abs_error() <= REDUCTION_TOL,
        worst: r.max_abs_error(),
        detail: format!("{} identities x {} draws", r.errors.len(), r.draws),
    });

    let (h1, h2) = degraded_gains(cfg);
    let w = degraded_bc_grid(h1, h2, v.grid)?;
    suites.push(SuiteResult {
        name: "degraded_bc",
        passed: w <= DEGRADED_TOL,
        worst: w,
        detail: format!("{0}x{0} grid, h_r1={h1} h_r2={h2}", v.grid),
    });

    let r = lp_equivalence_check(seed, v.lp_sets)?;
    suites.push(SuiteResult {
        name: "lp_equivalence",
        passed: r.disagreements == 0 && r.max_abs_error <= LP_TOL,
        worst: r.max_abs_error,
        detail: format!("{} sets, {} disagreements", r.compared + r.disagreements, r.disagreements),
    });

    suites.push(subset_suite(cfg)?);
    Ok(ValidationReport { suites })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.5), "5.00000000000e-1");
        assert_eq!(num(0.0), "0.00000000000e0");
        assert_eq!(num(1234.5), "1.23450000000e3");
        assert_eq!("5.00000000000e-1".parse::<f64>().unwrap(), 0.5);
    }

    #[test]
    fn region_csv_roundtrip() {
        let dir = std::env::temp_dir().join(format!("mprelay-cli-unit-{}", std::process::id()));
        let text = "preset = \"H1\"\nprotocols = [\"Simple\"]\n[search]\ndirections = 4\nstarts = 2\niters = 50";
        let mut cfg = parse_config(text).unwrap();
        cfg.out_dir = dir.clone();
        let paths = run_region(&cfg).unwrap();
        assert_eq!(paths.len(), 1);
        let pts = read_region_csv(&paths[0]).unwrap();
        let body = fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(body.lines().count(), 5);
        assert!(body.starts_with(REGION_HEADER));
        assert_eq!(pts.len(), 4);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn sumrate_needs_sweep() {
        let cfg = parse_config("preset = \"H1\"\nprotocols = [\"Simple\"]").unwrap();
        assert!(matches!(run_sumrate(&cfg), Err(CliError::Config(_))));
    }
}
