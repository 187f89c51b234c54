//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line to stderr; run with `--nocapture` to
//! see them. Tests hold a shared lock so the timing bounds are measured
//! without contention.

use std::fs;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use mprelay::model::{ChannelGains, OuterFamily, PowerAllocation, Protocol};
use mprelay::region::{
    comprehensive_hull, inside_hull, optimize_point, outer_boundary, sum_rate_sweep, trace_boundary, Point,
    SearchOptions,
};
use mprelay::validate::{
    check_subset, degraded_bc_check, kernel_oracle_check, lp_equivalence_check, reduction_check,
};
use mprelay_cli::{parse_config, preset, run_region};

static LOCK: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, ok: bool, detail: String) {
    eprintln!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n}: {detail}");
}

const NC: [Protocol; 4] = [Protocol::FmabcN, Protocol::PmabcNr, Protocol::FtdbcNr, Protocol::PtdbcNr];

#[test]
fn c1_kernel_oracle_equality() {
    let _g = serial();
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in [1, 2, 3] {
        let r = kernel_oracle_check(seed, 1000).unwrap();
        worst = worst.max(r.max_abs_error);
    }
    let el = t.elapsed();
    report(1, worst <= 1e-9 && el <= Duration::from_secs(10), format!("max error {worst:.3e}, {el:.2?}"));
}

#[test]
fn c2_reduction_identities() {
    let _g = serial();
    let r = reduction_check(2, 200).unwrap();
    report(2, r.max_abs_error() <= 1e-12, format!("{:?}", r.errors));
}

#[test]
fn c3_degraded_broadcast_grid() {
    let _g = serial();
    let mut all = true;
    let mut cells = 0;
    for (h1, h2) in [(1.0, 0.5), (1.0, 0.2)] {
        for i in 0..10 {
            let beta1 = (i as f64 + 0.5) / 10.0;
            for j in 0..10 {
                let p_r = 10f64.powf((-10.0 + 40.0 * j as f64 / 9.0) / 10.0);
                all &= degraded_bc_check(p_r, h1, h2, beta1).unwrap();
                cells += 1;
            }
        }
    }
    report(3, all, format!("{cells} grid cells at tol 1e-12"));
}

#[test]
fn c4_lp_equivalence() {
    let _g = serial();
    let r = lp_equivalence_check(4, 100).unwrap();
    report(
        4,
        r.disagreements == 0 && r.compared == 100 && r.max_abs_error <= 1e-10,
        format!("{} sets, {} disagreements, max error {:.3e}", r.compared, r.disagreements, r.max_abs_error),
    );
}

#[test]
fn c5_inner_inside_outer() {
    let _g = serial();
    let t = Instant::now();
    let opts = SearchOptions { directions: 32, starts: 16, ..Default::default() };
    let mut bad = Vec::new();
    for name in ["H1", "H2"] {
        let ch = preset(name).unwrap();
        for db in [0.0, 20.0] {
            let pw = PowerAllocation::from_db(2, &[db; 4]).unwrap();
            for p in NC {
                let inner = trace_boundary(p, &ch, &pw, &[0.01; 4], &opts).unwrap();
                let outer = outer_boundary(p.family().unwrap(), &ch, &pw, &opts).unwrap();
                if !check_subset(&inner, &outer, 1e-6) {
                    bad.push(format!("{name}/{db}dB/{p}"));
                }
            }
        }
    }
    let el = t.elapsed();
    report(5, bad.is_empty() && el <= Duration::from_secs(300), format!("16 cases, failing {bad:?}, {el:.1?}"));
}

#[test]
fn c6_region_nesting() {
    let _g = serial();
    let ch = preset("H1").unwrap();
    let pw = PowerAllocation::from_db(2, &[0.0; 4]).unwrap();
    let opts = SearchOptions { directions: 32, starts: 16, ..Default::default() };
    let groups: [&[Protocol]; 3] = [
        &[Protocol::Simple],
        &[Protocol::Fmabc, Protocol::Pmabc, Protocol::Ftdbc, Protocol::Ptdbc],
        &NC,
    ];
    let pts: Vec<Vec<Point>> = groups
        .iter()
        .map(|g| g.iter().flat_map(|&p| trace_boundary(p, &ch, &pw, &[0.01; 4], &opts).unwrap().projected()).collect())
        .collect();
    let mut outside = [0usize; 2];
    for k in 0..2 {
        let hull = comprehensive_hull(&pts[k + 1]);
        outside[k] = pts[k].iter().filter(|p| !inside_hull(&hull, **p, 1e-3)).count();
    }
    report(6, outside == [0, 0], format!("points outside next hull: {outside:?}"));
}

#[test]
fn c7_sum_rate_crossover() {
    let _g = serial();
    let ch = preset("H1").unwrap();
    let powers = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0];
    let opts = SearchOptions { starts: 16, ..Default::default() };
    let rows = sum_rate_sweep(&NC, &OuterFamily::ALL, &ch, &powers, &opts).unwrap();
    let get = |db: f64, label: &str| {
        rows.iter().find(|r| r.power_db == db && r.label == label).map(|r| r.sum_rate).unwrap()
    };
    let mabc = |db| get(db, "FMABC_N").max(get(db, "PMABC_NR"));
    let tdbc = |db| get(db, "FTDBC_NR").max(get(db, "PTDBC_NR"));
    let low = mabc(0.0) > tdbc(0.0);
    let high = [20.0, 25.0].iter().all(|&db| tdbc(db) > mabc(db));
    let dominated = powers.iter().all(|&db| {
        NC.iter().all(|p| get(db, p.family().unwrap().name()) >= get(db, p.name()) - 1e-9)
    });
    report(
        7,
        low && high && dominated,
        format!(
            "0 dB mabc {:.4} tdbc {:.4}; 20 dB {:.4} {:.4}; 25 dB {:.4} {:.4}; outer dominates {dominated}",
            mabc(0.0),
            tdbc(0.0),
            mabc(20.0),
            tdbc(20.0),
            mabc(25.0),
            tdbc(25.0)
        ),
    );
}

#[test]
fn c8_simple_analytic_optimum() {
    let _g = serial();
    let ch = ChannelGains::uniform(2, 1.0).unwrap();
    let pw = PowerAllocation::uniform(2, 1.0).unwrap();
    let p = optimize_point(Protocol::Simple, &ch, &pw, &[1.0; 4], &[0.0; 4], &SearchOptions::default()).unwrap();
    report(8, p.value >= 0.5 - 1e-4 && p.value <= 0.5 + 1e-9, format!("sum rate {:.12}", p.value));
}

#[test]
fn c9_region_output_deterministic() {
    let _g = serial();
    let text = r#"
        preset = "H1"
        powers_dB = 0
        protocols = ["Simple", "FMABC_N", "PMABC_NRC"]
        outer_families = ["FMABC_OUT"]
        [search]
        starts = 4
        [[groups]]
        name = "nc"
        members = ["FMABC_N", "PMABC_NRC"]
    "#;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut outputs = Vec::new();
    for d in &dirs {
        let mut cfg = parse_config(text).unwrap();
        cfg.out_dir = d.path().to_path_buf();
        let files: Vec<(String, Vec<u8>)> = run_region(&cfg)
            .unwrap()
            .into_iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect();
        outputs.push(files);
    }
    let rows = outputs[0].iter().find(|f| f.0 == "Simple.csv").map(|f| f.1.split(|&b| b == b'\n').count() - 2);
    report(
        9,
        outputs[0] == outputs[1] && rows == Some(64),
        format!("{} files per run, identical {}", outputs[0].len(), outputs[0] == outputs[1]),
    );
}
