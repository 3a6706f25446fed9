//! Command-line entry points: run, sweep, validate, extract.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acmf_cli::config::{load_config, ConfigError};
use acmf_cli::mesh::extract_interface;
use acmf_cli::runner::{
    run_scenario, EXIT_CONFIG, EXIT_DIAGNOSTICS, EXIT_IO, EXIT_OK,
};
use acmf_cli::snapshot::read_snapshot;
use acmf_cli::sweep::convergence_sweep;
use acmf_cli::vtk::write_vtk;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "acmf",
    about = "Phase-field mean curvature flow with obstacles: scenario runner and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write energy.csv, snapshots, meshes, summary.json.
    Run {
        /// Scenario file (TOML).
        config: PathBuf,
        /// Output directory; overrides the config's [output] dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a scenario across a ladder of interface widths with eps/h fixed.
    Sweep {
        /// Base scenario file (TOML); its initial surface must be one ball.
        config: PathBuf,
        /// Interface widths, e.g. --eps 0.08,0.04,0.02.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Common measurement time for every rung.
        #[arg(long, default_value_t = 0.005)]
        measure_t: f64,
        /// Cells per interface width (eps = coupling * h).
        #[arg(long, default_value_t = 8.0)]
        coupling: f64,
        /// Root directory for per-rung outputs and sweep.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario file without running it.
    Validate {
        /// Scenario file (TOML).
        config: PathBuf,
    },
    /// Extract the zero level set of a snapshot as a VTK polydata mesh.
    Extract {
        /// Snapshot file written by a run.
        snapshot: PathBuf,
        /// Output mesh path.
        #[arg(short, long, default_value = "mesh.vtk")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out.as_deref()),
        Command::Sweep { config, eps, measure_t, coupling, out } => {
            cmd_sweep(&config, &eps, measure_t, coupling, out.as_deref())
        }
        Command::Validate { config } => cmd_validate(&config),
        Command::Extract { snapshot, out } => cmd_extract(&snapshot, &out),
    };
    ExitCode::from(code as u8)
}

/// ACMF_THREADS caps the worker pool; unset means one worker per core.
fn configure_threads() {
    if let Ok(value) = std::env::var("ACMF_THREADS") {
        match value.parse::<usize>() {
            Ok(threads) if threads > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => eprintln!("ignoring ACMF_THREADS={value}: not a positive integer"),
        }
    }
}

fn load_or_report(path: &Path) -> Result<acmf_cli::config::ScenarioConfig, i32> {
    match load_config(path) {
        Ok(config) => Ok(config),
        Err(e) => {
            eprintln!("{e}");
            Err(match e {
                ConfigError::Io { .. } => EXIT_IO,
                _ => EXIT_CONFIG,
            })
        }
    }
}

fn cmd_run(config_path: &Path, out_override: Option<&Path>) -> i32 {
    let config = match load_or_report(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let outcome = run_scenario(&config, &out_dir);
    print_run_report(&outcome.summary);
    if outcome.exit_code != EXIT_OK {
        eprintln!(
            "FAILED ({}): {}",
            outcome.summary["error"]["kind"].as_str().unwrap_or("?"),
            outcome.summary["error"]["message"].as_str().unwrap_or("?"),
        );
    }
    outcome.exit_code
}

fn print_run_report(summary: &serde_json::Value) {
    println!("scenario {}", summary["name"].as_str().unwrap_or("?"));
    if let Some(run) = summary.get("run") {
        println!(
            "  steps {}  records {}  final t {}",
            run["steps_taken"], run["records"], run["final_t"]
        );
    }
    if let Some(checks) = summary.get("checks").and_then(|c| c.as_object()) {
        let mut parts = Vec::new();
        for (name, check) in checks {
            let label = if check["enabled"].as_bool() != Some(true) {
                format!("{name} -")
            } else {
                match check["passed"].as_bool() {
                    Some(true) => format!("{name} PASS"),
                    Some(false) => format!("{name} FAIL"),
                    // Report-only diagnostics carry no verdict.
                    None => format!("{name} ok"),
                }
            };
            parts.push(label);
        }
        println!("  checks: {}", parts.join("  "));
    }
    if let Some(outputs) = summary.get("outputs") {
        println!(
            "  wrote {}/energy.csv, {} snapshots, {} meshes, summary.json",
            outputs["dir"].as_str().unwrap_or("?"),
            outputs["snapshots"],
            outputs["meshes"]
        );
    }
}

fn cmd_sweep(
    config_path: &Path,
    eps: &[f64],
    measure_t: f64,
    coupling: f64,
    out_override: Option<&Path>,
) -> i32 {
    let config = match load_or_report(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let out_root = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("{}_sweep", config.output.dir)));
    match convergence_sweep(&config, eps, measure_t, coupling, &out_root) {
        Ok(table) => {
            print!("{}", table.render());
            let doc = serde_json::json!({
                "measure_t": measure_t,
                "coupling": coupling,
                "entries": table.entries,
                "failures": table.failures,
                "trends": table.trend_flags(),
            });
            if std::fs::create_dir_all(&out_root).is_err()
                || std::fs::write(
                    out_root.join("sweep.json"),
                    serde_json::to_string_pretty(&doc).expect("sweep serializes") + "\n",
                )
                .is_err()
            {
                eprintln!("could not write {}", out_root.join("sweep.json").display());
                return EXIT_IO;
            }
            if table.failures.is_empty() {
                EXIT_OK
            } else {
                // Partial table: surface the strongest per-rung failure.
                EXIT_DIAGNOSTICS
            }
        }
        Err(msg) => {
            eprintln!("sweep rejected: {msg}");
            EXIT_CONFIG
        }
    }
}

fn cmd_validate(config_path: &Path) -> i32 {
    let config = match load_or_report(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let scenario = config.validate().expect("load_config validated");
    let params = &scenario.params;
    println!(
        "{}: valid\n  d={} n={} eps={} dt={:e} steps={}",
        config.name,
        params.d,
        params.n,
        params.eps,
        params.dt,
        (params.t_end / params.dt).ceil() as u64,
    );
    println!(
        "  obstacles: {} plus, {} minus",
        scenario.obstacles.plus.len(),
        scenario.obstacles.minus.len()
    );
    EXIT_OK
}

fn cmd_extract(snapshot_path: &Path, out: &Path) -> i32 {
    let (phi, t) = match read_snapshot(snapshot_path) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("cannot read snapshot: {e}");
            return EXIT_IO;
        }
    };
    match extract_interface(&phi) {
        Ok(mesh) => {
            let title = format!("interface t={t:e}");
            if let Err(e) = write_vtk(out, &mesh, &title) {
                eprintln!("cannot write {}: {e}", out.display());
                return EXIT_IO;
            }
            println!(
                "{}: {} vertices, {} elements (t = {t:e})",
                out.display(),
                mesh.vertices.len(),
                if mesh.d == 2 { mesh.segments.len() } else { mesh.triangles.len() },
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_DIAGNOSTICS
        }
    }
}
