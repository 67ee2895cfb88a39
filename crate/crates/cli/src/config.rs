//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use shapegrad_core::mesh::CircleInBox;
use shapegrad_core::metrics::MetricSpec;
use shapegrad_core::optimizer::{OptConfig, UpdateRule};
use shapegrad_core::Error as CoreError;

pub const KEYS: &[&str] = &[
    "mesh.radius",
    "mesh.center_x",
    "mesh.center_y",
    "mesh.box",
    "mesh.resolution",
    "mesh.file",
    "metric.kind",
    "metric.s",
    "metric.A",
    "metric.mu_min",
    "metric.mu_max",
    "metric.lambda",
    "opt.step",
    "opt.max_iter",
    "opt.window",
    "opt.tol",
    "opt.update",
    "opt.geodesic_steps",
    "out.dir",
    "seed",
];

const GENERATOR_KEYS: &[&str] = &["mesh.radius", "mesh.center_x", "mesh.center_y", "mesh.box", "mesh.resolution"];
const SP_KEYS: &[&str] = &["metric.mu_min", "metric.mu_max", "metric.lambda"];
const HS_KEYS: &[&str] = &["metric.s", "metric.A"];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    /// The offending key, if the error concerns one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey { key, .. } | ConfigError::DuplicateKey { key, .. } | ConfigError::Invalid { key, .. } => {
                Some(key)
            }
        }
    }

    fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    Generate(CircleInBox),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub opt: OptConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSource::Generate(CircleInBox::default()),
            opt: OptConfig::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn metric(&self) -> &MetricSpec {
        &self.opt.metric
    }

    /// Parses config text. A relative `mesh.file` is resolved against
    /// `base`; `out.dir` is taken as written.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let entries = entries(text)?;
        let get = |key: &str| entries.get(key).map(String::as_str);
        let mut config = RunConfig::default();

        if get("mesh.file").is_some() {
            if let Some(key) = GENERATOR_KEYS.iter().find(|k| entries.contains_key(**k)) {
                return Err(ConfigError::invalid(key, "cannot be combined with mesh.file"));
            }
        }
        config.mesh = match get("mesh.file") {
            Some(path) => MeshSource::File(base.join(path)),
            None => {
                let mut params = CircleInBox::default();
                if let Some(v) = get("mesh.radius") {
                    params.radius = number("mesh.radius", v)?;
                }
                if let Some(v) = get("mesh.center_x") {
                    params.center[0] = number("mesh.center_x", v)?;
                }
                if let Some(v) = get("mesh.center_y") {
                    params.center[1] = number("mesh.center_y", v)?;
                }
                if let Some(v) = get("mesh.box") {
                    params.box_half_width = number("mesh.box", v)?;
                }
                if let Some(v) = get("mesh.resolution") {
                    params.resolution = integer("mesh.resolution", v)?;
                }
                MeshSource::Generate(params)
            }
        };

        let kind = get("metric.kind").unwrap_or("HS");
        let foreign = match kind {
            "SP" => HS_KEYS,
            "HS" => SP_KEYS,
            other => return Err(ConfigError::invalid("metric.kind", format!("expected SP or HS, got `{other}`"))),
        };
        if let Some(key) = foreign.iter().find(|k| entries.contains_key(**k)) {
            return Err(ConfigError::invalid(key, format!("does not apply to metric.kind = {kind}")));
        }
        config.opt.metric = if kind == "SP" {
            let MetricSpec::SteklovPoincare { mut mu_min, mut mu_max, mut lambda } = MetricSpec::steklov_poincare() else {
                unreachable!()
            };
            if let Some(v) = get("metric.mu_min") {
                mu_min = number("metric.mu_min", v)?;
            }
            if let Some(v) = get("metric.mu_max") {
                mu_max = number("metric.mu_max", v)?;
            }
            if let Some(v) = get("metric.lambda") {
                lambda = number("metric.lambda", v)?;
            }
            MetricSpec::SteklovPoincare { mu_min, mu_max, lambda }
        } else {
            let order = get("metric.s").map(|v| integer("metric.s", v)).transpose()?.unwrap_or(2);
            let a = get("metric.A").map(|v| number("metric.A", v)).transpose()?.unwrap_or(0.09);
            MetricSpec::Sobolev { order: order as u32, a }
        };

        if let Some(v) = get("opt.step") {
            config.opt.step_size = number("opt.step", v)?;
        }
        if let Some(v) = get("opt.max_iter") {
            config.opt.max_iterations = integer("opt.max_iter", v)?;
        }
        if let Some(v) = get("opt.window") {
            config.opt.stop_window = integer("opt.window", v)?;
        }
        if let Some(v) = get("opt.tol") {
            config.opt.stop_tol = number("opt.tol", v)?;
        }
        if let Some(v) = get("opt.update") {
            config.opt.update = match v {
                "RETRACTION" => UpdateRule::Retraction,
                "GEODESIC" => UpdateRule::Geodesic,
                other => {
                    return Err(ConfigError::invalid("opt.update", format!("expected RETRACTION or GEODESIC, got `{other}`")))
                }
            };
        }
        if let Some(v) = get("opt.geodesic_steps") {
            config.opt.geodesic_substeps = integer("opt.geodesic_steps", v)?;
        }
        if let Some(v) = get("out.dir") {
            config.out_dir = PathBuf::from(v);
        }
        if let Some(v) = get("seed") {
            config.seed = v.parse().map_err(|_| ConfigError::invalid("seed", format!("not a non-negative integer: `{v}`")))?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, crate::CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base).map_err(|source| crate::CliError::Config { path: path.to_path_buf(), source })
    }

    /// Checks every parameter, reporting failures by config key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.opt.validate().map_err(core_to_config)?;
        if let MeshSource::Generate(params) = &self.mesh {
            shapegrad_core::mesh::circle_in_box_vertex_count(params).map_err(core_to_config)?;
        }
        Ok(())
    }

    /// Canonical text form; `parse` of the output yields an equal config
    /// when paths are absolute.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        match &self.mesh {
            MeshSource::Generate(p) => {
                put("mesh.radius", p.radius.to_string());
                put("mesh.center_x", p.center[0].to_string());
                put("mesh.center_y", p.center[1].to_string());
                put("mesh.box", p.box_half_width.to_string());
                put("mesh.resolution", p.resolution.to_string());
            }
            MeshSource::File(path) => put("mesh.file", path.display().to_string()),
        }
        match self.opt.metric {
            MetricSpec::SteklovPoincare { mu_min, mu_max, lambda } => {
                put("metric.kind", "SP".into());
                put("metric.mu_min", mu_min.to_string());
                put("metric.mu_max", mu_max.to_string());
                put("metric.lambda", lambda.to_string());
            }
            MetricSpec::Sobolev { order, a } => {
                put("metric.kind", "HS".into());
                put("metric.s", order.to_string());
                put("metric.A", a.to_string());
            }
        }
        put("opt.step", self.opt.step_size.to_string());
        put("opt.max_iter", self.opt.max_iterations.to_string());
        put("opt.window", self.opt.stop_window.to_string());
        put("opt.tol", self.opt.stop_tol.to_string());
        put(
            "opt.update",
            match self.opt.update {
                UpdateRule::Retraction => "RETRACTION",
                UpdateRule::Geodesic => "GEODESIC",
            }
            .into(),
        );
        put("opt.geodesic_steps", self.opt.geodesic_substeps.to_string());
        put("out.dir", self.out_dir.display().to_string());
        put("seed", self.seed.to_string());
        out
    }
}

fn entries(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
        }
    }
    Ok(map)
}

fn number(key: &str, value: &str) -> Result<f64, ConfigError> {
    match value.parse::<f64>() {
        Ok(x) if x.is_finite() || key == "opt.tol" => Ok(x),
        _ => Err(ConfigError::invalid(key, format!("not a number: `{value}`"))),
    }
}

fn integer(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| ConfigError::invalid(key, format!("not a non-negative integer: `{value}`")))
}

/// Maps parameter names used by the core library onto config keys.
fn core_to_config(e: CoreError) -> ConfigError {
    match e {
        CoreError::InvalidParameter { name, reason } => {
            let key = match name {
                "radius" => "mesh.radius",
                "box_half_width" => "mesh.box",
                "resolution" => "mesh.resolution",
                "center" => "mesh.center_x",
                other => other,
            };
            ConfigError::invalid(key, reason)
        }
        other => ConfigError::invalid("config", other.to_string()),
    }
}
