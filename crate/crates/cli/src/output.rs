//! History CSV, run summary and comparison table.
//!
//! Floats are written with `{:.16e}` (17 significant digits), which Rust
//! parses back to the identical `f64`.

use std::fmt::Write as _;

use shapegrad_core::geodesic::ShootDiagnostics;
use shapegrad_core::metrics::MetricSpec;
use shapegrad_core::optimizer::{HistoryRecord, OptimizationResult};

pub const HISTORY_HEADER: &str = "iter,objective,norm_felas,msh_quality";

pub fn history_csv(history: &[HistoryRecord]) -> String {
    let mut out = String::with_capacity(80 * (history.len() + 1));
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.iter, r.objective, r.norm_felas, r.msh_quality).unwrap();
    }
    out
}

/// One row per integration step of every shot: the optimizer iteration, the
/// step index (0 is the initial state), `H` and minimum quality.
pub fn geodesic_csv(shots: &[(usize, ShootDiagnostics)]) -> String {
    let mut out = String::from("iter,step,hamiltonian,min_quality\n");
    for (iter, d) in shots {
        for (step, (h, q)) in d.hamiltonian.iter().zip(&d.min_quality).enumerate() {
            writeln!(out, "{iter},{step},{h:.16e},{q:.16e}").unwrap();
        }
    }
    out
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("summary line {line}: {message}")]
pub struct SummaryParseError {
    pub line: usize,
    pub message: String,
}

/// Final state of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub label: String,
    pub metric: String,
    /// `None` for the elasticity metric, which has no `A`.
    pub a: Option<f64>,
    pub iterations: usize,
    pub objective: f64,
    pub norm_felas: f64,
    pub msh_quality: f64,
    pub termination: String,
}

impl Summary {
    pub fn new(label: &str, metric: &MetricSpec, result: &OptimizationResult) -> Self {
        let last = result.last();
        Summary {
            label: label.to_string(),
            metric: metric.label(),
            a: match metric {
                MetricSpec::Sobolev { a, .. } => Some(*a),
                MetricSpec::SteklovPoincare { .. } => None,
            },
            iterations: last.iter,
            objective: last.objective,
            norm_felas: last.norm_felas,
            msh_quality: last.msh_quality,
            termination: result.termination.as_str().to_string(),
        }
    }

    pub fn to_text(&self) -> String {
        let a = self.a.map_or("-".to_string(), |a| format!("{a:.16e}"));
        format!(
            "label = {}\nmetric = {}\nA = {a}\niterations = {}\nobjective = {:.16e}\nnorm_felas = {:.16e}\nmsh_quality = {:.16e}\ntermination = {}\n",
            self.label, self.metric, self.iterations, self.objective, self.norm_felas, self.msh_quality, self.termination
        )
    }

    pub fn parse(text: &str) -> Result<Self, SummaryParseError> {
        let mut fields: Vec<(usize, &str, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| SummaryParseError { line: i + 1, message: "expected `key = value`".into() })?;
            fields.push((i + 1, k.trim(), v.trim()));
        }
        let find = |key: &str| {
            fields
                .iter()
                .find(|(_, k, _)| *k == key)
                .map(|&(l, _, v)| (l, v))
                .ok_or_else(|| SummaryParseError { line: 0, message: format!("missing `{key}`") })
        };
        let float = |key: &str| {
            let (line, v) = find(key)?;
            v.parse::<f64>().map_err(|e| SummaryParseError { line, message: format!("{key}: {e}") })
        };
        let (a_line, a) = find("A")?;
        Ok(Summary {
            label: find("label")?.1.to_string(),
            metric: find("metric")?.1.to_string(),
            a: match a {
                "-" => None,
                v => Some(v.parse().map_err(|e| SummaryParseError { line: a_line, message: format!("A: {e}") })?),
            },
            iterations: {
                let (line, v) = find("iterations")?;
                v.parse().map_err(|e| SummaryParseError { line, message: format!("iterations: {e}") })?
            },
            objective: float("objective")?,
            norm_felas: float("norm_felas")?,
            msh_quality: float("msh_quality")?,
            termination: find("termination")?.1.to_string(),
        })
    }
}

/// Fixed-width table with one row per run.
pub fn summary_table(rows: &[Summary]) -> String {
    let mut out = format!(
        "{:<10} {:<6} {:>6} {:>6} {:>14} {:>12} {:>8}  {}\n",
        "label", "metric", "A", "k", "J", "|V|_L2", "quality", "termination"
    );
    for s in rows {
        let a = s.a.map_or("-".to_string(), |a| format!("{a}"));
        writeln!(
            out,
            "{:<10} {:<6} {:>6} {:>6} {:>14.6} {:>12.3e} {:>8.3}  {}",
            s.label, s.metric, a, s.iterations, s.objective, s.norm_felas, s.msh_quality, s.termination
        )
        .unwrap();
    }
    out
}
