use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shapegrad_cli::commands;
use shapegrad_cli::output::summary_table;
use shapegrad_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "shapegrad", version, about = "Shape optimization with Sobolev and Steklov-Poincare metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory, overriding `out.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        label: Option<String>,
    },
    /// Run several configurations and tabulate their results.
    Compare {
        #[arg(long)]
        config: Vec<PathBuf>,
        /// One per config, in order; defaults to the metric label.
        #[arg(long)]
        label: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the property checks and print a JSON report.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the report to `<dir>/verify.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Integrate the shape derivative with a mismatched rule.
        #[arg(long)]
        corrupt_quadrature: bool,
    },
    /// Write the configured mesh to a file.
    MeshGen {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a mesh file and report its quality.
    MeshCheck { mesh: PathBuf },
}

fn load(config: Option<&Path>) -> Result<RunConfig, CliError> {
    config.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run { config, out, label } => {
            let config = load(config.as_deref())?;
            let label = label.unwrap_or_else(|| config.metric().label());
            let out = out.unwrap_or_else(|| config.out_dir.clone());
            let output = commands::run(&config, &label, &out)?;
            print!("{}", summary_table(&[output.summary]));
        }
        Command::Compare { config, label, out } => {
            if !label.is_empty() && label.len() != config.len() {
                return Err(CliError::Usage(format!("{} labels given for {} configs", label.len(), config.len())));
            }
            let mut runs = Vec::with_capacity(config.len());
            for (i, path) in config.iter().enumerate() {
                let c = RunConfig::load(path)?;
                let l = label.get(i).cloned().unwrap_or_else(|| c.metric().label());
                runs.push((c, l));
            }
            let summaries = commands::compare(&runs, &out, commands::thread_cap()?)?;
            print!("{}", summary_table(&summaries));
        }
        Command::Verify { config, out, corrupt_quadrature } => {
            let config = load(config.as_deref())?;
            let report = commands::verify(&config, corrupt_quadrature)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                let path = dir.join("verify.json");
                std::fs::write(&path, format!("{json}\n")).map_err(|e| CliError::io(&path, e))?;
            }
            println!("{json}");
            return Ok(report.passed);
        }
        Command::MeshGen { config, out } => {
            let mesh = commands::mesh_gen(&load(config.as_deref())?, &out)?;
            println!("wrote {} ({} vertices, {} triangles)", out.display(), mesh.num_vertices(), mesh.num_triangles());
        }
        Command::MeshCheck { mesh } => print!("{}", commands::mesh_check(&mesh)?),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
