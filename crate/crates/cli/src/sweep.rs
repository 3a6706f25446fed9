//! Refinement sweeps: the same scenario at a ladder of interface widths,
//! with the grid scaled to hold eps/h fixed so that layer resolution never
//! confounds the eps-trend.

use std::path::Path;

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::runner::{run_scenario, EXIT_OK};

/// Measured quantities for one sweep rung, all evaluated at the common
/// measurement time.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub n: usize,
    pub measured_t: f64,
    /// |measured interface radius − exact shrinking-sphere radius|.
    pub radius_error: f64,
    pub discrepancy_l1: f64,
    /// Empirical indicator-continuity constant over the run's records.
    pub c2: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairTrend {
    pub eps_coarse: f64,
    pub eps_fine: f64,
    pub radius_error_decreased: bool,
    pub discrepancy_decreased: bool,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct TrendFlags {
    pub pairs: Vec<PairTrend>,
    pub radius_error_monotone: Option<bool>,
    pub discrepancy_monotone: Option<bool>,
    /// max/min of the empirical c2 across entries.
    pub c2_spread: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub entries: Vec<SweepEntry>,
    /// (eps, failure message) for rungs that did not produce an entry.
    pub failures: Vec<(f64, String)>,
}

impl SweepTable {
    /// Pairwise trends between consecutive entries (sorted by decreasing
    /// eps) and the c2 stability spread.  Empty with fewer than two
    /// entries.
    pub fn trend_flags(&self) -> TrendFlags {
        let mut sorted = self.entries.clone();
        sorted.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        if sorted.len() < 2 {
            return TrendFlags::default();
        }
        let pairs: Vec<PairTrend> = sorted
            .windows(2)
            .map(|w| PairTrend {
                eps_coarse: w[0].eps,
                eps_fine: w[1].eps,
                radius_error_decreased: w[1].radius_error < w[0].radius_error,
                discrepancy_decreased: w[1].discrepancy_l1 < w[0].discrepancy_l1,
            })
            .collect();
        let c2_min = sorted.iter().map(|e| e.c2).fold(f64::INFINITY, f64::min);
        let c2_max = sorted.iter().map(|e| e.c2).fold(0.0, f64::max);
        TrendFlags {
            radius_error_monotone: Some(pairs.iter().all(|p| p.radius_error_decreased)),
            discrepancy_monotone: Some(pairs.iter().all(|p| p.discrepancy_decreased)),
            c2_spread: (c2_min > 0.0).then_some(c2_max / c2_min),
            pairs,
        }
    }

    /// Plain-text table for terminal output.
    pub fn render(&self) -> String {
        let mut out = String::from(
            "     eps      n    radius_error    discrepancy_l1        c2        energy\n",
        );
        for e in &self.entries {
            out.push_str(&format!(
                "{:8.4} {:6} {:15.6e} {:17.6e} {:9.4} {:13.6e}\n",
                e.eps, e.n, e.radius_error, e.discrepancy_l1, e.c2, e.energy
            ));
        }
        for (eps, msg) in &self.failures {
            out.push_str(&format!("{eps:8.4}  FAILED: {msg}\n"));
        }
        let flags = self.trend_flags();
        if let Some(m) = flags.radius_error_monotone {
            out.push_str(&format!(
                "radius error strictly decreasing: {m}\ndiscrepancy strictly decreasing: {}\nc2 spread (max/min): {:.3}\n",
                flags.discrepancy_monotone.unwrap(),
                flags.c2_spread.unwrap_or(f64::NAN),
            ));
        }
        out
    }
}

/// Runs `base` once per eps with n chosen so eps = `coupling`·h, all rungs
/// measured at `measure_t`.
///
/// The base scenario's initial surface must be a single ball: the exact
/// shrinking-sphere radius is the error reference.  Failed rungs are
/// reported in the table's failure list; the table stays partial rather
/// than aborting the sweep.
pub fn convergence_sweep(
    base: &ScenarioConfig,
    eps_list: &[f64],
    measure_t: f64,
    coupling: f64,
    out_root: &Path,
) -> Result<SweepTable, String> {
    let csg = crate::config::parse_csg(&base.initial.surface, base.grid.d)
        .map_err(|e| format!("initial.surface: {e}"))?;
    let balls = csg.primitive_balls();
    if balls.len() != 1 {
        return Err(format!(
            "sweep needs a single-ball initial surface for the radius oracle; got {} balls",
            balls.len()
        ));
    }
    let r_init = balls[0].radius;
    if !(measure_t > 0.0) {
        return Err(format!("measurement time must be positive, got {measure_t}"));
    }
    let shrink = 2.0 * (base.grid.d - 1) as f64 * measure_t;
    if r_init * r_init <= shrink {
        return Err(format!(
            "the exact sphere vanishes before t = {measure_t} (radius {r_init}); pick an earlier measurement time"
        ));
    }
    let r_exact = (r_init * r_init - shrink).sqrt();

    let mut table = SweepTable { entries: Vec::new(), failures: Vec::new() };
    for &eps in eps_list {
        if !(eps > 0.0) {
            table.failures.push((eps, "eps must be positive".to_string()));
            continue;
        }
        let n = (coupling / eps).round() as usize;
        let mut config = base.clone();
        config.name = format!("{}_eps{eps}", base.name);
        config.grid.n = n;
        config.physics.eps = eps;
        config.physics.t_end = measure_t;
        // Land records exactly on fractions of measure_t: pick the step
        // count as a multiple of 8 that respects the stability limit, then
        // record 8 times per run.
        let probe = config.to_params();
        let limit = probe.dt_limit();
        let per_record = (measure_t / (8.0 * limit)).ceil().max(1.0) as usize;
        config.physics.dt_override = Some(measure_t / (8 * per_record) as f64);
        config.output.record_every = per_record;
        config.output.snapshots = false;
        config.output.meshes = false;
        config.output.dir = out_root.join(format!("eps_{eps}")).display().to_string();
        // Windowed diagnostics are tuned to the base run's clock; they do
        // not transfer to the rescaled t_end.
        config.diagnostics.monotonicity = false;
        config.diagnostics.brakke = false;

        let outcome = run_scenario(&config, Path::new(&config.output.dir));
        if outcome.exit_code != EXIT_OK {
            let msg = outcome.summary["error"]["message"]
                .as_str()
                .unwrap_or("run failed")
                .to_string();
            table.failures.push((eps, msg));
            continue;
        }
        let summary = &outcome.summary;
        let radius_mean = summary["final"]["interface"]["radius_mean"].as_f64();
        let Some(radius_mean) = radius_mean else {
            table
                .failures
                .push((eps, "no interface left at the measurement time".to_string()));
            continue;
        };
        table.entries.push(SweepEntry {
            eps,
            n,
            measured_t: summary["final"]["t"].as_f64().unwrap_or(f64::NAN),
            radius_error: (radius_mean - r_exact).abs(),
            discrepancy_l1: summary["final"]["discrepancy_l1"].as_f64().unwrap_or(f64::NAN),
            c2: summary["checks"]["holder"]["c2"].as_f64().unwrap_or(f64::NAN),
            energy: summary["final"]["energy"].as_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(eps: f64, radius_error: f64, discrepancy: f64, c2: f64) -> SweepEntry {
        SweepEntry {
            eps,
            n: (8.0 / eps).round() as usize,
            measured_t: 0.005,
            radius_error,
            discrepancy_l1: discrepancy,
            c2,
            energy: 1.0,
        }
    }

    #[test]
    fn trend_flags_detect_monotone_improvement() {
        let table = SweepTable {
            entries: vec![
                entry(0.08, 3e-3, 2e-2, 5.0),
                entry(0.04, 1e-3, 9e-3, 5.5),
                entry(0.02, 4e-4, 3e-3, 5.2),
            ],
            failures: Vec::new(),
        };
        let flags = table.trend_flags();
        assert_eq!(flags.radius_error_monotone, Some(true));
        assert_eq!(flags.discrepancy_monotone, Some(true));
        assert!(flags.c2_spread.unwrap() < 2.0);
        assert_eq!(flags.pairs.len(), 2);
        assert_eq!(flags.pairs[0].eps_coarse, 0.08);
        assert_eq!(flags.pairs[1].eps_fine, 0.02);
    }

    #[test]
    fn trend_flags_flag_a_regression() {
        let table = SweepTable {
            entries: vec![
                entry(0.08, 1e-3, 2e-2, 5.0),
                entry(0.04, 2e-3, 9e-3, 5.5),
            ],
            failures: Vec::new(),
        };
        let flags = table.trend_flags();
        assert_eq!(flags.radius_error_monotone, Some(false));
        assert_eq!(flags.discrepancy_monotone, Some(true));
    }

    #[test]
    fn single_entry_has_no_trend_flags() {
        let table = SweepTable {
            entries: vec![entry(0.04, 1e-3, 1e-2, 5.0)],
            failures: Vec::new(),
        };
        let flags = table.trend_flags();
        assert!(flags.pairs.is_empty());
        assert_eq!(flags.radius_error_monotone, None);
        assert_eq!(flags.c2_spread, None);
    }

    #[test]
    fn entries_sort_by_decreasing_eps_regardless_of_input_order() {
        let table = SweepTable {
            entries: vec![
                entry(0.02, 4e-4, 3e-3, 5.0),
                entry(0.08, 3e-3, 2e-2, 5.0),
                entry(0.04, 1e-3, 9e-3, 5.0),
            ],
            failures: Vec::new(),
        };
        let flags = table.trend_flags();
        assert_eq!(flags.radius_error_monotone, Some(true));
        assert_eq!(flags.pairs[0].eps_coarse, 0.08);
        assert_eq!(flags.pairs[0].eps_fine, 0.04);
    }

    #[test]
    fn render_includes_failures() {
        let table = SweepTable {
            entries: vec![entry(0.08, 3e-3, 2e-2, 5.0)],
            failures: vec![(0.005, "interface too thin".to_string())],
        };
        let text = table.render();
        assert!(text.contains("0.0800"));
        assert!(text.contains("FAILED: interface too thin"));
    }

    #[test]
    fn sweep_rejects_multi_ball_surfaces() {
        let config: ScenarioConfig = toml::from_str(
            r#"
                name = "two"
                [grid]
                d = 2
                n = 64
                [physics]
                eps = 0.08
                r0 = 1.0
                r1 = 1.0
                t_end = 0.001
                [initial]
                surface = "union(ball(0.3,0.5,0.2), ball(0.7,0.5,0.2))"
            "#,
        )
        .unwrap();
        let err = convergence_sweep(
            &config,
            &[0.08],
            0.0005,
            8.0,
            Path::new("/tmp/nonexistent-sweep"),
        )
        .unwrap_err();
        assert!(err.contains("single-ball"), "{err}");
    }

    #[test]
    fn sweep_rejects_vanishing_reference_sphere() {
        let config: ScenarioConfig = toml::from_str(
            r#"
                name = "tiny"
                [grid]
                d = 2
                n = 64
                [physics]
                eps = 0.08
                r0 = 1.0
                r1 = 1.0
                t_end = 0.1
                [initial]
                surface = "ball(0.5,0.5,0.1)"
            "#,
        )
        .unwrap();
        let err = convergence_sweep(
            &config,
            &[0.08],
            0.01,
            8.0,
            Path::new("/tmp/nonexistent-sweep"),
        )
        .unwrap_err();
        assert!(err.contains("vanishes"), "{err}");
    }
}
