//! Per-record diagnostics collection during a run.
//!
//! The engine is the solver's record sink: each time the solver hands over a
//! state it measures energies and masses, scans barrier margins, tracks the
//! phase-indicator drift, and decides whether a steady state has been
//! reached.  Window-spanning checks (dissipation, monotonicity, the
//! integral-identity residual) need the recorded trajectory and run after
//! the solver returns, in the scenario runner.

use acmf_core::barriers::{Barrier, BarrierError, ComparisonMonitor};
use acmf_core::geometry::ObstacleSet;
use acmf_core::grid::{det_sum, ScalarField, TorusGrid};
use acmf_core::measures::{phase_indicator, DiagnosticsRecord};
use acmf_core::solver::{RecordSink, Signal, SimParams, SimState};

pub struct DiagnosticsEngine {
    eps: f64,
    steady_stop: f64,
    monitor: Option<ComparisonMonitor>,
    prev_indicator: Option<ScalarField>,
    pub records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsEngine {
    /// Builds the engine, registering one barrier pair per obstacle ball
    /// when `track_barriers` is set and obstacles exist.
    pub fn new(
        params: &SimParams,
        obstacles: &ObstacleSet,
        grid: TorusGrid,
        track_barriers: bool,
        margin_factor: f64,
        steady_stop: f64,
    ) -> Result<Self, BarrierError> {
        let monitor = if track_barriers && !obstacles.is_empty() {
            let barriers = Barrier::for_obstacles(obstacles, params.eps, params.d)?;
            let tol = margin_factor * grid.h() * grid.h();
            Some(ComparisonMonitor::new(&barriers, grid, tol)?)
        } else {
            None
        };
        Ok(Self {
            eps: params.eps,
            steady_stop,
            monitor,
            prev_indicator: None,
            records: Vec::new(),
        })
    }

    /// Barriers being monitored, with their running worst margins.
    pub fn worst_margins(&self) -> Vec<(Barrier, f64)> {
        self.monitor
            .as_ref()
            .map(|m| m.worst_margins())
            .unwrap_or_default()
    }

    pub fn margin_tolerance(&self) -> Option<f64> {
        self.monitor.as_ref().map(|m| m.tolerance())
    }
}

impl RecordSink for DiagnosticsEngine {
    type Error = BarrierError;

    fn record(&mut self, state: &SimState, _params: &SimParams) -> Result<Signal, BarrierError> {
        let mut rec = DiagnosticsRecord::measure(&state.phi, self.eps, state.t);
        if let Some(monitor) = &mut self.monitor {
            rec.barrier_margins = monitor.check(&state.phi, state.t)?;
        }
        let indicator = phase_indicator(&state.phi);
        if let Some(prev) = &self.prev_indicator {
            let diffs: Vec<f64> = indicator
                .values()
                .iter()
                .zip(prev.values())
                .map(|(a, b)| (a - b).abs())
                .collect();
            rec.w_mass_change = det_sum(&diffs) * state.phi.grid().cell_volume();
        }
        self.prev_indicator = Some(indicator);

        let steady = self.steady_stop > 0.0
            && self.records.last().is_some_and(|last| {
                let dt = rec.t - last.t;
                dt > 0.0 && (rec.energy - last.energy).abs() / dt < self.steady_stop
            });
        self.records.push(rec);
        Ok(if steady { Signal::Stop } else { Signal::Continue })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use acmf_core::geometry::{Ball, Csg, InitialSurface};
    use acmf_core::solver::{run, RunOptions};

    fn small_params() -> SimParams {
        SimParams {
            d: 2,
            n: 64,
            eps: 0.08,
            dt: 0.0,
            t_end: 2e-3,
            cfl_safety: 0.9,
            r0: 1.0,
            r1: 1.0,
            min_layer_cells: 4.0,
        }
        .with_auto_dt()
    }

    fn circle_surface() -> InitialSurface {
        InitialSurface {
            region: Csg::Ball(Ball::new([0.5, 0.5, 0.0], 0.3).unwrap()),
        }
    }

    #[test]
    fn engine_collects_one_record_per_solver_record() {
        let params = small_params();
        let grid = params.validate().unwrap();
        let obstacles = ObstacleSet::empty(0.2, 0.6);
        let mut engine =
            DiagnosticsEngine::new(&params, &obstacles, grid, true, 10.0, 0.0).unwrap();
        let traj = run(
            &circle_surface(),
            &obstacles,
            params,
            RunOptions { delta1: 0.0, record_every: 8 },
            &mut engine,
        )
        .unwrap();
        assert_eq!(engine.records.len(), traj.records.len());
        // No obstacles: nothing monitored, margins empty.
        assert!(engine.records.iter().all(|r| r.barrier_margins.is_empty()));
        assert!(engine.worst_margins().is_empty());
        // First record has no predecessor to diff against.
        assert_eq!(engine.records[0].w_mass_change, 0.0);
        assert!(engine.records[1].w_mass_change > 0.0);
        // Energy decreases without forcing.
        assert!(engine.records.last().unwrap().energy < engine.records[0].energy);
    }

    #[test]
    fn steady_stop_threshold_halts_the_run() {
        let mut params = small_params();
        params.t_end = 5e-3;
        let grid = params.validate().unwrap();
        let obstacles = ObstacleSet::empty(0.2, 0.6);
        // A threshold far above any real energy rate stops at the first
        // measurable interval: records at step 0 and the first cadence.
        let mut engine =
            DiagnosticsEngine::new(&params, &obstacles, grid, true, 10.0, 1e9).unwrap();
        let traj = run(
            &circle_surface(),
            &obstacles,
            params,
            RunOptions { delta1: 0.0, record_every: 4 },
            &mut engine,
        )
        .unwrap();
        assert!(traj.stopped_early);
        assert_eq!(engine.records.len(), 2);
        assert!(traj.records.last().unwrap().t < params.t_end);
    }

    #[test]
    fn barrier_margins_are_recorded_for_obstacle_runs() {
        let params = SimParams {
            d: 2,
            n: 256,
            eps: 0.02,
            dt: 0.0,
            t_end: 2e-4,
            cfl_safety: 0.9,
            r0: 0.12,
            r1: 1.0,
            min_layer_cells: 4.0,
        }
        .with_auto_dt();
        let grid = params.validate().unwrap();
        let obstacles = ObstacleSet::new(
            vec![Ball::new([0.5, 0.5, 0.0], 0.12).unwrap()],
            Vec::new(),
            0.12,
            1.0,
        )
        .unwrap();
        let mut engine =
            DiagnosticsEngine::new(&params, &obstacles, grid, true, 10.0, 0.0).unwrap();
        run(
            &circle_surface(),
            &obstacles,
            params,
            RunOptions { delta1: 0.01, record_every: 16 },
            &mut engine,
        )
        .unwrap();
        // One sub-barrier for the single plus ball.
        assert!(engine.records.iter().all(|r| r.barrier_margins.len() == 1));
        let worst = engine.worst_margins();
        assert_eq!(worst.len(), 1);
        assert!(worst[0].1 >= -engine.margin_tolerance().unwrap());
    }
}
