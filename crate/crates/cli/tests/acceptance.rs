//! Reproduction criteria for the four-metric benchmark and the property
//! suites. Prints one PASS/FAIL line per criterion and fails if any fails.
//!
//! Runs the release-equivalent test profile in roughly a minute on one core.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;
use shapegrad_cli::Summary;
use shapegrad_core::mesh::{circle_in_box_vertex_count, CircleInBox};

const BIN: &str = env!("CARGO_BIN_EXE_shapegrad");

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Run {
    summary: Summary,
    objectives: Vec<f64>,
    elapsed: Duration,
    history: Vec<u8>,
}

fn run(config: &str, out: &Path) -> Run {
    let start = Instant::now();
    let status = Command::new(BIN)
        .args(["run", "--config"])
        .arg(configs_dir().join(config))
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    assert!(status.status.success(), "{config}: {}", String::from_utf8_lossy(&status.stderr));
    let summary = Summary::parse(&fs::read_to_string(out.join("summary.txt")).unwrap()).unwrap();
    let history = fs::read(out.join("history.csv")).unwrap();
    let objectives = String::from_utf8_lossy(&history)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    Run { summary, objectives, elapsed, history }
}

struct Criteria {
    lines: Vec<String>,
    failed: Vec<usize>,
}

impl Criteria {
    fn record(&mut self, id: usize, passed: bool, what: String) {
        let line = format!("criterion {id:>2}: {} {what}", if passed { "PASS" } else { "FAIL" });
        // bypasses the test harness capture so the lines show in every run
        writeln!(std::io::stderr().lock(), "{line}").unwrap();
        self.lines.push(line);
        if !passed {
            self.failed.push(id);
        }
    }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn largest_rise(objectives: &[f64]) -> f64 {
    objectives.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

fn first_below(objectives: &[f64], level: f64) -> Option<usize> {
    objectives.iter().position(|&j| j <= level)
}

/// Checks in the verify report whose name starts with `prefix`.
fn verify_group(report: &Value, prefix: &str) -> (bool, String) {
    let checks: Vec<&Value> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["name"].as_str().unwrap().starts_with(prefix))
        .collect();
    assert!(!checks.is_empty(), "no checks named {prefix}*");
    let passed = checks.iter().all(|c| c["passed"].as_bool().unwrap());
    let detail = checks
        .iter()
        .map(|c| format!("{}={:.3e}", c["name"].as_str().unwrap(), c["measured"].as_f64().unwrap()))
        .collect::<Vec<_>>()
        .join(" ");
    (passed, detail)
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = Criteria { lines: Vec::new(), failed: Vec::new() };

    let sp = run("sp.cfg", &dir.path().join("sp"));
    let h2 = run("h2.cfg", &dir.path().join("h2"));
    let h3 = run("h3.cfg", &dir.path().join("h3"));
    let h4 = run("h4.cfg", &dir.path().join("h4"));
    let k = |r: &Run| r.summary.iterations;
    let j = |r: &Run| r.summary.objective;

    let vertices = circle_in_box_vertex_count(&CircleInBox::default()).unwrap();
    let vertex_ok = (vertices as f64 - 3435.0).abs() <= 0.15 * 3435.0;
    c.record(
        1,
        vertex_ok && within(j(&h2), -0.0950, -0.0920) && within(k(&h2) as f64, 25.0, 70.0) && h2.elapsed.as_secs_f64() <= 120.0,
        format!(
            "H2: vertices {vertices} (3435 +-15%), J {:.6} in [-0.0950, -0.0920], k {} in [25, 70], {:.1} s <= 120 s",
            j(&h2),
            k(&h2),
            h2.elapsed.as_secs_f64()
        ),
    );

    c.record(
        2,
        within(j(&h3), -0.0950, -0.0920)
            && within(k(&h3) as f64, 22.0, 65.0)
            && within(j(&h4), -0.0950, -0.0920)
            && within(k(&h4) as f64, 20.0, 60.0),
        format!(
            "H3: J {:.6}, k {} in [22, 65]; H4: J {:.6}, k {} in [20, 60]; J in [-0.0950, -0.0920]",
            j(&h3),
            k(&h3),
            j(&h4),
            k(&h4)
        ),
    );

    let hs_max = k(&h2).max(k(&h3)).max(k(&h4));
    c.record(
        3,
        within(j(&sp), -0.0935, -0.0910) && k(&sp) > hs_max && k(&sp) >= 2 * k(&h4),
        format!("SP: J {:.6} in [-0.0935, -0.0910], k {} > {hs_max} and >= 2 x {}", j(&sp), k(&sp), k(&h4)),
    );

    let runs = [("SP", &sp), ("H2", &h2), ("H3", &h3), ("H4", &h4)];
    let qualities: Vec<String> = runs.iter().map(|(l, r)| format!("{l} {:.3}", r.summary.msh_quality)).collect();
    c.record(
        4,
        runs.iter().all(|(_, r)| r.summary.msh_quality >= 0.35),
        format!("final quality >= 0.35: {}", qualities.join(", ")),
    );

    let rises: Vec<String> = runs.iter().map(|(l, r)| format!("{l} {:.1e}", largest_rise(&r.objectives))).collect();
    let monotone = runs.iter().all(|(_, r)| largest_rise(&r.objectives) <= 1e-6);
    let sp_reach = first_below(&sp.objectives, -0.092);
    let hs_reach: Vec<Option<usize>> = [&h2, &h3, &h4].iter().map(|r| first_below(&r.objectives, -0.092)).collect();
    let fast = match sp_reach {
        Some(s) => hs_reach.iter().all(|h| h.is_some_and(|h| 2 * h <= s)),
        None => false,
    };
    c.record(
        5,
        monotone && fast,
        format!("largest per-step rise <= 1e-6: {}; first iterate <= -0.092: SP {sp_reach:?}, H2/H3/H4 {hs_reach:?}", rises.join(", ")),
    );

    let output = Command::new(BIN).args(["verify", "--out"]).arg(dir.path().join("verify")).output().unwrap();
    let report: Value = serde_json::from_slice(&output.stdout).expect("verify prints JSON");
    for (id, prefix, what) in [
        (6, "shape_derivative.", "shape derivative vs central differences, 10 fields, t = 1e-5, <= 1e-4"),
        (7, "disk.", "disk oracles y(0) = 0.25, p(0) = -0.25 within 5e-3, error shrinks on refinement"),
        (8, "metric.", "metric symmetry <= 1e-10, positivity on 50 fields, Galerkin <= 1e-8 for SP and H1-H4"),
        (9, "quality.", "quality unit values: equilateral 1, right isosceles 2 sqrt 2 - 2 within 1e-12, degenerate 0"),
        (10, "geodesic.", "dH/dq vs FD <= 1e-5, energy drift <= 1e-3 over 100 steps, round trip <= 1e-6"),
    ] {
        let (passed, detail) = verify_group(&report, prefix);
        c.record(id, passed, format!("{what} [{detail}]"));
    }

    let again = run("h2.cfg", &dir.path().join("h2-again"));
    c.record(
        11,
        again.history == h2.history,
        format!("repeated H2 run: history.csv byte-identical ({} bytes)", h2.history.len()),
    );

    assert!(c.failed.is_empty(), "failed criteria {:?}\n{}", c.failed, c.lines.join("\n"));
}
