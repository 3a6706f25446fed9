//! Scenario execution: geometry → solver → diagnostics → files.
//!
//! A run always tries to leave a `summary.json` behind, including when it
//! fails; the exit code tells scripts which family of failure occurred
//! (io = 1, config = 2, solver = 3, barrier = 4, diagnostics = 5) and the
//! summary carries the machine-readable kind.

use std::fs;
use std::path::Path;

use acmf_core::barriers::{initial_ordering_check, Barrier, BarrierError};
use acmf_core::geometry::{signed_distance, smooth_initial_profile};
use acmf_core::grid::{torus_distance, Point, ScalarField, TorusGrid};
use acmf_core::measures::{
    brakke_series, dissipation_check, gronwall_energy_check, holder_check,
    monotonicity_check, obstacle_avoidance_check, BrakkeSeries, DiagnosticsRecord,
    MeasuresError,
};
use acmf_core::solver::{run, RunError, SolverError};
use serde_json::{json, Value};

use crate::config::ScenarioConfig;
use crate::diagnostics::DiagnosticsEngine;
use crate::mesh::{extract_interface, measure_radius, InterfaceMesh, MeshError};
use crate::snapshot::write_snapshot;
use crate::vtk::write_vtk;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_BARRIER: i32 = 4;
pub const EXIT_DIAGNOSTICS: i32 = 5;

/// What a scenario run left behind: the exit code to report and the summary
/// document (also written to `summary.json` when the output directory was
/// usable).
pub struct ScenarioOutcome {
    pub exit_code: i32,
    pub summary: Value,
}

struct Failure {
    family: &'static str,
    code: i32,
    kind: String,
    message: String,
}

impl Failure {
    fn to_json(&self) -> Value {
        json!({
            "family": self.family,
            "code": self.code,
            "kind": self.kind,
            "message": self.message,
        })
    }
}

fn solver_failure(err: &SolverError) -> Failure {
    let kind = match err {
        SolverError::Grid(_) => "INVALID_GRID",
        SolverError::Geometry(_) => "INVALID_GEOMETRY",
        SolverError::DtTooLarge { .. } => "DT_TOO_LARGE",
        SolverError::LayerUnresolved { .. } => "LAYER_UNRESOLVED",
        SolverError::BadParam { .. } => "BAD_PARAM",
        SolverError::MaxPrinciple { .. } => "MAX_PRINCIPLE_VIOLATION",
        SolverError::AssumptionsViolated(_) => "ASSUMPTIONS_VIOLATED",
    };
    Failure {
        family: "solver",
        code: EXIT_SOLVER,
        kind: kind.to_string(),
        message: err.to_string(),
    }
}

fn barrier_failure(err: &BarrierError) -> Failure {
    let kind = match err {
        BarrierError::OutOfCell { .. } => "OUT_OF_CELL",
        BarrierError::NotContained { .. } => "NOT_CONTAINED",
        BarrierError::Inadmissible { .. } => "INADMISSIBLE_BARRIER",
        BarrierError::OrderingViolation { .. } => "ORDERING_VIOLATION",
        BarrierError::ComparisonViolation { .. } => "COMPARISON_VIOLATION",
    };
    Failure {
        family: "barrier",
        code: EXIT_BARRIER,
        kind: kind.to_string(),
        message: err.to_string(),
    }
}

fn measures_failure(err: &MeasuresError) -> Failure {
    let kind = match err {
        MeasuresError::TooFewRecords { .. } => "TOO_FEW_RECORDS",
        MeasuresError::NonIncreasingTimes { .. } => "NON_INCREASING_TIMES",
        MeasuresError::ProbeNotAfterRecord { .. } => "PROBE_NOT_AFTER_RECORD",
        MeasuresError::WindowTooWide { .. } => "WINDOW_TOO_WIDE",
        MeasuresError::RadiusTooSmall { .. } => "RADIUS_TOO_SMALL",
        MeasuresError::NegativeTestFn { .. } => "NEGATIVE_TEST_FN",
        MeasuresError::SupportViolation { .. } => "SUPPORT_VIOLATION",
        MeasuresError::EmptyWindow { .. } => "EMPTY_WINDOW",
        MeasuresError::BadInterval { .. } => "BAD_INTERVAL",
    };
    Failure {
        family: "diagnostics",
        code: EXIT_DIAGNOSTICS,
        kind: kind.to_string(),
        message: err.to_string(),
    }
}

fn io_failure(context: &str, err: &std::io::Error) -> Failure {
    Failure {
        family: "io",
        code: EXIT_IO,
        kind: "IO_ERROR".to_string(),
        message: format!("{context}: {err}"),
    }
}

/// Executes one scenario, writing outputs under `out_dir`.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path) -> ScenarioOutcome {
    let mut summary = json!({
        "name": config.name,
        "error": Value::Null,
    });
    let finish = |mut summary: Value, failure: Option<Failure>, out_dir: &Path| {
        let exit_code = failure.as_ref().map_or(EXIT_OK, |f| f.code);
        if let Some(f) = failure {
            summary["error"] = f.to_json();
        }
        // Best effort: the summary is still returned if the directory is
        // unwritable.
        let _ = fs::create_dir_all(out_dir);
        let _ = fs::write(
            out_dir.join("summary.json"),
            serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
        );
        ScenarioOutcome { exit_code, summary }
    };

    let scenario = match config.validate() {
        Ok(s) => s,
        Err(e) => {
            let failure = Failure {
                family: "config",
                code: EXIT_CONFIG,
                kind: "VALIDATION_ERROR".to_string(),
                message: e.to_string(),
            };
            return finish(summary, Some(failure), out_dir);
        }
    };
    let params = scenario.params;
    let grid = match params.validate() {
        Ok(g) => g,
        Err(e) => return finish(summary, Some(solver_failure(&e)), out_dir),
    };
    summary["grid"] = json!({ "d": params.d, "n": params.n, "h": grid.h() });
    summary["physics"] = json!({
        "eps": params.eps,
        "dt": params.dt,
        "t_end": params.t_end,
        "steps_planned": (params.t_end / params.dt).ceil() as u64,
    });

    if let Err(e) = fs::create_dir_all(out_dir) {
        return finish(summary, Some(io_failure("creating output directory", &e)), out_dir);
    }

    // Strict t = 0 ordering against every barrier before spending solver
    // time; the run-time monitor only enforces the looser O(h^2) margin.
    if config.diagnostics.barriers && !scenario.obstacles.is_empty() {
        let barriers = match Barrier::for_obstacles(&scenario.obstacles, params.eps, params.d)
        {
            Ok(b) => b,
            Err(e) => return finish(summary, Some(barrier_failure(&e)), out_dir),
        };
        let phi0 = signed_distance(&scenario.surface, grid)
            .and_then(|sdist| smooth_initial_profile(&sdist, params.eps, params.r0));
        match phi0 {
            Ok(phi0) => {
                for b in &barriers {
                    if let Err(e) = initial_ordering_check(&phi0, b) {
                        return finish(summary, Some(barrier_failure(&e)), out_dir);
                    }
                }
            }
            Err(e) => {
                return finish(
                    summary,
                    Some(solver_failure(&SolverError::Geometry(e))),
                    out_dir,
                )
            }
        }
    }

    let mut engine = match DiagnosticsEngine::new(
        &params,
        &scenario.obstacles,
        grid,
        config.diagnostics.barriers,
        config.diagnostics.margin_factor,
        config.diagnostics.steady_stop,
    ) {
        Ok(e) => e,
        Err(e) => return finish(summary, Some(barrier_failure(&e)), out_dir),
    };

    let traj = match run(
        &scenario.surface,
        &scenario.obstacles,
        params,
        scenario.options,
        &mut engine,
    ) {
        Ok(t) => t,
        Err(RunError::Solver(e)) => return finish(summary, Some(solver_failure(&e)), out_dir),
        Err(RunError::Sink(e)) => return finish(summary, Some(barrier_failure(&e)), out_dir),
    };
    let records = &traj.records;
    let measured = &engine.records;
    summary["run"] = json!({
        "steps_taken": traj.steps_taken,
        "stopped_early": traj.stopped_early,
        "records": records.len(),
        "final_t": records.last().map(|r| r.t),
    });

    // ---- post-run diagnostics ----------------------------------------
    let mut failed_checks: Vec<&'static str> = Vec::new();
    let mut checks = serde_json::Map::new();

    let gronwall = gronwall_energy_check(measured, &params, config.diagnostics.tol_gronwall);
    match &gronwall {
        Ok(report) => {
            if !report.within_tol {
                failed_checks.push("gronwall");
            }
            checks.insert(
                "gronwall".to_string(),
                json!({
                    "enabled": true,
                    "passed": report.within_tol,
                    "max_excess": report.max_excess,
                    "argmax_t": report.argmax_t,
                    "tolerance": config.diagnostics.tol_gronwall,
                }),
            );
        }
        Err(e) => return finish(summary, Some(measures_failure(&e)), out_dir),
    }

    let mut worst_dissipation: Option<(f64, f64)> = None; // (excess, at t2)
    let mut dissipation_ok = true;
    for k in 1..records.len().saturating_sub(1) {
        match dissipation_check(
            &measured[k - 1],
            &measured[k + 1],
            &records[k].phi,
            &params,
            config.diagnostics.tol_dissipation,
        ) {
            Ok(report) => {
                if !report.within_tol {
                    dissipation_ok = false;
                }
                if worst_dissipation.is_none_or(|(worst, _)| report.excess > worst) {
                    worst_dissipation = Some((report.excess, report.t2));
                }
            }
            Err(e) => return finish(summary, Some(measures_failure(&e)), out_dir),
        }
    }
    if !dissipation_ok {
        failed_checks.push("dissipation");
    }
    checks.insert(
        "dissipation".to_string(),
        json!({
            "enabled": records.len() >= 3,
            "passed": dissipation_ok,
            "worst_excess": worst_dissipation.map(|(e, _)| e),
            "worst_at_t": worst_dissipation.map(|(_, t)| t),
            "tolerance": config.diagnostics.tol_dissipation,
        }),
    );

    let barrier_stats: Vec<Value> = engine
        .worst_margins()
        .iter()
        .map(|(b, margin)| {
            json!({
                "center": b.center[..params.d],
                "r0": b.r0,
                "kind": format!("{:?}", b.kind).to_lowercase(),
                "worst_margin": margin,
            })
        })
        .collect();
    checks.insert(
        "barriers".to_string(),
        json!({
            "enabled": !barrier_stats.is_empty(),
            // The run would have aborted on a violation; reaching here
            // means every margin stayed above -tolerance.
            "passed": true,
            "tolerance": engine.margin_tolerance(),
            "worst_margins": barrier_stats,
        }),
    );

    let mut monotonicity_column: Vec<Option<f64>> = vec![None; records.len()];
    if config.diagnostics.monotonicity {
        let mut probe_reports = Vec::new();
        let mut all_passed = true;
        for (i, probe) in config.monotonicity_probes().iter().enumerate() {
            match monotonicity_check(
                records,
                *probe,
                config.diagnostics.monotonicity_s,
                &params,
                config.diagnostics.tol_monotonicity,
            ) {
                Ok(report) => {
                    if !report.within_tol {
                        all_passed = false;
                    }
                    if i == 0 && report.values[0].abs() > 1e-300 {
                        for (k, v) in report.values.iter().enumerate() {
                            monotonicity_column[k] = Some(v / report.values[0]);
                        }
                    }
                    probe_reports.push(json!({
                        "probe": probe[..params.d],
                        "s": report.s,
                        "lambda": report.lambda,
                        "initial_weighted_mass": report.weighted.first(),
                        "max_increase": report.max_increase,
                        "passed": report.within_tol,
                    }));
                }
                Err(e) => return finish(summary, Some(measures_failure(&e)), out_dir),
            }
        }
        if !all_passed {
            failed_checks.push("monotonicity");
        }
        checks.insert(
            "monotonicity".to_string(),
            json!({
                "enabled": true,
                "passed": all_passed,
                "tolerance": config.diagnostics.tol_monotonicity,
                "probes": probe_reports,
            }),
        );
    } else {
        checks.insert("monotonicity".to_string(), json!({ "enabled": false }));
    }

    let mut brakke_column: Vec<Option<f64>> = vec![None; records.len()];
    if config.diagnostics.brakke {
        let test_fn = bump_test_fn(grid, config.brakke_center(), config.diagnostics.brakke_radius);
        match brakke_series(records, &test_fn, &traj.forcing, params.eps) {
            Ok(series) => {
                for k in 1..records.len() {
                    brakke_column[k] = Some(series.residual(0, k).2);
                }
                let window = config
                    .diagnostics
                    .brakke_window
                    .unwrap_or([records[0].t, records[records.len() - 1].t]);
                let report = windowed_residual(&series, window);
                checks.insert(
                    "brakke".to_string(),
                    json!({
                        "enabled": true,
                        "window": window,
                        "lhs": report.map(|(lhs, _, _)| lhs),
                        "rhs": report.map(|(_, rhs, _)| rhs),
                        "residual": report.map(|(_, _, r)| r),
                    }),
                );
            }
            Err(e) => return finish(summary, Some(measures_failure(&e)), out_dir),
        }
    } else {
        checks.insert("brakke".to_string(), json!({ "enabled": false }));
    }

    if !scenario.obstacles.is_empty() {
        let final_phi = &records.last().expect("at least the initial record").phi;
        let report = obstacle_avoidance_check(
            final_phi,
            &scenario.obstacles,
            params.eps,
            config.diagnostics.tol_avoid,
        );
        if !report.passed {
            failed_checks.push("avoidance");
        }
        checks.insert(
            "avoidance".to_string(),
            json!({
                "enabled": true,
                "passed": report.passed,
                "plus_mass": report.plus_mass,
                "minus_mass": report.minus_mass,
                "min_phi_plus": report.min_phi_plus,
                "max_phi_minus": report.max_phi_minus,
                "mass_tol": report.mass_tol,
            }),
        );
    } else {
        checks.insert("avoidance".to_string(), json!({ "enabled": false }));
    }

    match holder_check(records) {
        Ok(report) => {
            checks.insert(
                "holder".to_string(),
                json!({
                    "enabled": true,
                    "c2": report.constant,
                    "argmax_records": [report.argmax.0, report.argmax.1],
                }),
            );
        }
        Err(MeasuresError::TooFewRecords { .. }) => {
            checks.insert("holder".to_string(), json!({ "enabled": false }));
        }
        Err(e) => return finish(summary, Some(measures_failure(&e)), out_dir),
    }

    summary["checks"] = Value::Object(checks);

    // ---- files --------------------------------------------------------
    if let Err(e) = write_energy_csv(
        &out_dir.join("energy.csv"),
        measured,
        &brakke_column,
        &monotonicity_column,
    ) {
        return finish(summary, Some(io_failure("writing energy.csv", &e)), out_dir);
    }
    let mut snapshots_written = 0usize;
    let mut meshes_written = 0usize;
    let mut final_mesh: Option<InterfaceMesh> = None;
    for (i, rec) in records.iter().enumerate() {
        if config.output.snapshots {
            let path = out_dir.join(format!("snap_{:08}.bin", rec.step));
            if let Err(e) = write_snapshot(&path, &rec.phi, rec.t) {
                let msg = e.to_string();
                return finish(
                    summary,
                    Some(Failure {
                        family: "io",
                        code: EXIT_IO,
                        kind: "IO_ERROR".to_string(),
                        message: format!("writing {}: {msg}", path.display()),
                    }),
                    out_dir,
                );
            }
            snapshots_written += 1;
        }
        let want_mesh = config.output.meshes || i + 1 == records.len();
        if want_mesh {
            match extract_interface(&rec.phi) {
                Ok(mesh) => {
                    if config.output.meshes {
                        let path = out_dir.join(format!("mesh_{:08}.vtk", rec.step));
                        let title = format!("{} t={:e}", config.name, rec.t);
                        if let Err(e) = write_vtk(&path, &mesh, &title) {
                            return finish(
                                summary,
                                Some(io_failure("writing interface mesh", &e)),
                                out_dir,
                            );
                        }
                        meshes_written += 1;
                    }
                    if i + 1 == records.len() {
                        final_mesh = Some(mesh);
                    }
                }
                // A pure phase has no interface; skip the file.
                Err(MeshError::Empty) => {}
                Err(MeshError::EmptyMesh) => unreachable!("extraction never returns EmptyMesh"),
            }
        }
    }
    summary["outputs"] = json!({
        "dir": out_dir.display().to_string(),
        "energy_csv": "energy.csv",
        "snapshots": snapshots_written,
        "meshes": meshes_written,
    });

    let final_rec = measured.last().expect("at least the initial record");
    let interface_json = final_mesh.map(|mesh| {
        let center = reference_center(config, &scenario);
        let radius = measure_radius(&mesh, center).ok();
        json!({
            "vertices": mesh.vertices.len(),
            "elements": if params.d == 2 { mesh.segments.len() } else { mesh.triangles.len() },
            "measure": if params.d == 2 { mesh.total_length() } else { mesh.total_area() },
            "center": center[..params.d],
            "radius_mean": radius.map(|r| r.mean),
            "radius_std": radius.map(|r| r.std),
            "single_sphere": radius.map(|r| r.single_sphere),
        })
    });
    summary["final"] = json!({
        "t": final_rec.t,
        "energy": final_rec.energy,
        "mu_mass": final_rec.mu_mass,
        "discrepancy_l1": final_rec.discrepancy_l1,
        "min_phi": final_rec.min_phi,
        "max_phi": final_rec.max_phi,
        "interface": interface_json,
    });

    let failure = if failed_checks.is_empty() {
        None
    } else {
        Some(Failure {
            family: "diagnostics",
            code: EXIT_DIAGNOSTICS,
            kind: "CHECKS_FAILED".to_string(),
            message: format!("failed checks: {}", failed_checks.join(", ")),
        })
    };
    finish(summary, failure, out_dir)
}

/// Residual between the records closest to the window endpoints; `None`
/// when the window covers fewer than two records.
fn windowed_residual(series: &BrakkeSeries, window: [f64; 2]) -> Option<(f64, f64, f64)> {
    let slack = 1e-12;
    let i = series.times.iter().position(|&t| t >= window[0] - slack)?;
    let j = series.times.iter().rposition(|&t| t <= window[1] + slack)?;
    (i < j).then(|| series.residual(i, j))
}

/// Smooth compactly supported bump `exp(1 - 1/(1 - u^2))` of the scaled
/// torus distance u = |x - center| / radius.
pub fn bump_test_fn(grid: TorusGrid, center: Point, radius: f64) -> ScalarField {
    let d = grid.d();
    ScalarField::from_fn(grid, |x| {
        let u = torus_distance(x, center, d) / radius;
        if u >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - u * u)).exp()
        }
    })
}

/// Center for the final radius report: the single ball of the initial
/// surface when it has exactly one, else the domain center.
fn reference_center(
    config: &ScenarioConfig,
    scenario: &crate::config::ValidatedScenario,
) -> Point {
    let balls = scenario.surface.region.primitive_balls();
    if balls.len() == 1 {
        balls[0].center
    } else {
        [0.5, 0.5, if config.grid.d == 3 { 0.5 } else { 0.0 }]
    }
}

fn write_energy_csv(
    path: &Path,
    records: &[DiagnosticsRecord],
    brakke_column: &[Option<f64>],
    monotonicity_column: &[Option<f64>],
) -> std::io::Result<()> {
    let n_margins = records.first().map_or(0, |r| r.barrier_margins.len());
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = [
        "t",
        "energy",
        "discrepancy_l1",
        "mu_mass",
        "mu_tilde_mass",
        "mu_hat_mass",
        "min_phi",
        "max_phi",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for i in 1..=n_margins {
        header.push(format!("barrier_margin_{i}"));
    }
    header.push("brakke_residual".to_string());
    header.push("monotonicity_ratio".to_string());
    writer.write_record(&header)?;
    for (k, rec) in records.iter().enumerate() {
        let mut row: Vec<String> = vec![
            rec.t.to_string(),
            rec.energy.to_string(),
            rec.discrepancy_l1.to_string(),
            rec.mu_mass.to_string(),
            rec.mu_tilde_mass.to_string(),
            rec.mu_hat_mass.to_string(),
            rec.min_phi.to_string(),
            rec.max_phi.to_string(),
        ];
        for m in &rec.barrier_margins {
            row.push(m.to_string());
        }
        // Disabled diagnostics leave their cells empty rather than faking a
        // numeric value.
        row.push(brakke_column[k].map_or(String::new(), |v| v.to_string()));
        row.push(monotonicity_column[k].map_or(String::new(), |v| v.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
