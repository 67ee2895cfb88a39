//! The verbs of the command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use shapegrad_core::mesh::{generate_circle_in_box, load_mesh, mesh_quality, save_mesh, validate_mesh, TriMesh};
use shapegrad_core::metrics::MetricSpec;
use shapegrad_core::optimizer::{steepest_descent, OptimizationResult, UpdateRule};

use crate::config::{MeshSource, RunConfig};
use crate::output::{geodesic_csv, history_csv, summary_table, Summary};
use crate::verify::{self, Report, VerifyOptions};
use crate::{CliError, Result};

/// Resolution of the disk oracles when the mesh comes from a file.
const DEFAULT_ORACLE_RESOLUTION: usize = 13;

pub fn build_mesh(source: &MeshSource) -> Result<TriMesh> {
    Ok(match source {
        MeshSource::Generate(params) => generate_circle_in_box(params)?,
        MeshSource::File(path) => {
            if !path.exists() {
                return Err(CliError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "mesh file not found")));
            }
            load_mesh(path)?
        }
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub struct RunOutput {
    pub summary: Summary,
    pub result: OptimizationResult,
}

/// Runs one optimization and writes `history.csv`, `final.mesh`,
/// `summary.txt` and, for geodesic updates, `geodesic.csv` into `out_dir`.
pub fn run(config: &RunConfig, label: &str, out_dir: &Path) -> Result<RunOutput> {
    let mesh = build_mesh(&config.mesh)?;
    create_dir(out_dir)?;
    let result = steepest_descent(&mesh, &config.opt)?;
    write(&out_dir.join("history.csv"), &history_csv(&result.history))?;
    save_mesh(&result.mesh, out_dir.join("final.mesh"))?;
    let summary = Summary::new(label, &config.opt.metric, &result);
    write(&out_dir.join("summary.txt"), &summary.to_text())?;
    if config.opt.update == UpdateRule::Geodesic {
        write(&out_dir.join("geodesic.csv"), &geodesic_csv(&result.shots))?;
    }
    Ok(RunOutput { summary, result })
}

/// Worker count for `compare`: `SHAPEGRAD_THREADS` if set, else the number
/// of available cores.
pub fn thread_cap() -> Result<usize> {
    match std::env::var("SHAPEGRAD_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Usage(format!("SHAPEGRAD_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(CliError::Usage("compare needs at least one config".into()));
    }
    for (i, label) in labels.iter().enumerate() {
        let safe = !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
        if !safe || label.starts_with('.') {
            return Err(CliError::Usage(format!("label `{label}` must be nonempty and use only letters, digits, `-`, `_`, `.`")));
        }
        if labels[..i].contains(label) {
            return Err(CliError::Usage(format!("duplicate label `{label}`")));
        }
    }
    Ok(())
}

/// Runs every config, each in `out_dir/<label>`, and writes
/// `history_<label>.csv` and a `summary.txt` table into `out_dir`. Rows keep
/// the input order.
pub fn compare(runs: &[(RunConfig, String)], out_dir: &Path, threads: usize) -> Result<Vec<Summary>> {
    let labels: Vec<String> = runs.iter().map(|(_, l)| l.clone()).collect();
    check_labels(&labels)?;
    create_dir(out_dir)?;

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Summary>>>> = Mutex::new((0..runs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, runs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((config, label)) = runs.get(i) else { break };
                let outcome = run(config, label, &out_dir.join(label)).map(|o| o.summary);
                results.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let mut summaries = Vec::with_capacity(runs.len());
    for (outcome, label) in results.into_inner().unwrap().into_iter().zip(&labels) {
        let summary = outcome
            .expect("every run is visited")
            .map_err(|e| CliError::Run { label: label.clone(), source: Box::new(e) })?;
        let from = out_dir.join(label).join("history.csv");
        let to = out_dir.join(format!("history_{label}.csv"));
        fs::copy(&from, &to).map_err(|e| CliError::io(&to, e))?;
        summaries.push(summary);
    }
    write(&out_dir.join("summary.txt"), &summary_table(&summaries))?;
    Ok(summaries)
}

/// Runs the property suite on the configured mesh.
pub fn verify(config: &RunConfig, corrupt_quadrature: bool) -> Result<Report> {
    let mesh = build_mesh(&config.mesh)?;
    let oracle_resolution = match &config.mesh {
        MeshSource::Generate(params) => params.resolution,
        MeshSource::File(_) => DEFAULT_ORACLE_RESOLUTION,
    };
    let options = VerifyOptions { corrupt_quadrature, oracle_resolution };
    let sp = match config.opt.metric {
        sp @ MetricSpec::SteklovPoincare { .. } => sp,
        MetricSpec::Sobolev { .. } => MetricSpec::steklov_poincare(),
    };
    Ok(verify::run_all(&mesh, &sp, config.seed, &options)?)
}

pub fn mesh_gen(config: &RunConfig, out: &Path) -> Result<TriMesh> {
    let mesh = build_mesh(&config.mesh)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    save_mesh(&mesh, out)?;
    Ok(mesh)
}

/// Human-readable mesh report; fails when any invariant is violated.
pub fn mesh_check(path: &Path) -> Result<String> {
    let mesh = build_mesh(&MeshSource::File(PathBuf::from(path)))?;
    let quality = mesh_quality(&mesh);
    let violations = validate_mesh(&mesh);
    let mut report = format!(
        "vertices {}\ntriangles {}\nboundary edges {}\nmin quality {:.6} (triangle {})\n",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.boundary_edges().len(),
        quality.min_quality,
        quality.worst_triangle
    );
    if violations.is_empty() {
        report.push_str("valid\n");
        Ok(report)
    } else {
        for v in &violations {
            report.push_str(&format!("violation: {v}\n"));
        }
        Err(CliError::Failed(format!("{report}{} violation(s)", violations.len())))
    }
}
