//! Explicit time integration of the forced Allen-Cahn equation
//!
//! ```text
//! phi_t = lap(phi) - W'(phi)/eps^2 + g * sqrt(2 W(phi)) / eps
//! ```
//!
//! with the double well W(s) = (1 - s^2)^2 / 2, so W'(s) = -2s(1 - s^2)
//! and sqrt(2W(s)) = 1 - s^2 on [-1, 1].  Forward Euler with a time step
//! below both the diffusion limit h^2/(2d) and the reaction limit eps^2/8
//! keeps the discrete solution strictly inside (-1, 1); leaving that band
//! is treated as an error, never silently clipped, because the comparison
//! and measure diagnostics all presuppose |phi| < 1.

use crate::geometry::{
    build_forcing, signed_distance, smooth_initial_profile, validate_assumptions,
    AssumptionReport, GeometryError, InitialSurface, ObstacleSet,
};
use crate::grid::{GridError, ScalarField, TorusGrid};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("dt = {dt:e} exceeds the stable limit {limit:e}")]
    DtTooLarge { dt: f64, limit: f64 },
    #[error("eps = {eps} spans {cells:.2} cells; need at least {min_cells} (h = {h})")]
    LayerUnresolved { eps: f64, h: f64, cells: f64, min_cells: f64 },
    #[error("parameter {name} = {value} out of range")]
    BadParam { name: &'static str, value: f64 },
    #[error("|phi| reached {max_abs} at node {node}, step {step} (t = {t:e}): dt too large")]
    MaxPrinciple { step: usize, t: f64, max_abs: f64, node: usize },
    #[error("scenario assumptions violated:\n{0}")]
    AssumptionsViolated(AssumptionReport),
}

/// Failure of a full run: either the solver itself, or the diagnostics
/// sink attached to it.
#[derive(Debug, Error)]
pub enum RunError<E: std::error::Error> {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("diagnostics sink: {0}")]
    Sink(E),
}

/// W, W' and sqrt(2W) at one state value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellValues {
    pub w: f64,
    pub wp: f64,
    pub sqrt2w: f64,
}

/// Evaluate the double well.  `sqrt2w` is 1 - s^2 for |s| <= 1; outside,
/// |1 - s^2| is returned so the value stays a usable magnitude, but the
/// solver treats such states as errors before they get this far.
pub fn double_well(s: f64) -> WellValues {
    let one_minus_s2 = 1.0 - s * s;
    WellValues {
        w: one_minus_s2 * one_minus_s2 / 2.0,
        wp: -2.0 * s * one_minus_s2,
        sqrt2w: one_minus_s2.abs(),
    }
}

/// Run parameters.  `r0` is the obstacle interior-ball scale (also the
/// forcing amplitude d/r0), `r1` the plus/minus separation scale,
/// `min_layer_cells` the required eps/h resolution (4 unless a scenario
/// explicitly loosens it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub d: usize,
    pub n: usize,
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub r0: f64,
    pub r1: f64,
    pub min_layer_cells: f64,
}

impl SimParams {
    /// Largest stable dt: cfl_safety * min(h^2/(2d), eps^2/8).
    pub fn dt_limit(&self) -> f64 {
        let h = 1.0 / self.n as f64;
        self.cfl_safety * (h * h / (2.0 * self.d as f64)).min(self.eps * self.eps / 8.0)
    }

    /// Fill in dt at the stable limit.
    pub fn with_auto_dt(mut self) -> Self {
        self.dt = self.dt_limit();
        self
    }

    /// Check the parameter invariants and hand back the grid they imply.
    pub fn validate(&self) -> Result<TorusGrid, SolverError> {
        let grid = TorusGrid::new(self.d, self.n)?;
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(SolverError::BadParam { name: "cfl_safety", value: self.cfl_safety });
        }
        if !(self.eps > 0.0) {
            return Err(SolverError::BadParam { name: "eps", value: self.eps });
        }
        if !(self.t_end >= 0.0) {
            return Err(SolverError::BadParam { name: "t_end", value: self.t_end });
        }
        let cells = self.eps / grid.h();
        if cells < self.min_layer_cells {
            return Err(SolverError::LayerUnresolved {
                eps: self.eps,
                h: grid.h(),
                cells,
                min_cells: self.min_layer_cells,
            });
        }
        // tiny slack so dt = dt_limit round-trips through serialization
        let limit = self.dt_limit();
        if !(self.dt > 0.0) || self.dt > limit * (1.0 + 1e-12) {
            return Err(SolverError::DtTooLarge { dt: self.dt, limit });
        }
        Ok(grid)
    }
}

/// The evolving field with its clock.
#[derive(Debug, Clone)]
pub struct SimState {
    pub phi: ScalarField,
    pub t: f64,
    pub step: usize,
}

impl SimState {
    pub fn initial(phi: ScalarField) -> Self {
        Self { phi, t: 0.0, step: 0 }
    }

    /// The layer coordinate r = eps * atanh(phi), the signed distance the
    /// profile tanh(r/eps) would assign to each node.  Finite because the
    /// solver keeps |phi| < 1.
    pub fn layer_coordinate(&self, eps: f64) -> ScalarField {
        let vals = self.phi.values().iter().map(|&p| eps * p.atanh()).collect();
        ScalarField::from_values(self.phi.grid(), vals).expect("|phi| < 1 keeps atanh finite")
    }
}

/// lap(phi) - W'(phi)/eps^2 + g * sqrt(2W(phi))/eps, nodewise.
pub fn rhs(state: &SimState, g: &ScalarField, params: &SimParams) -> ScalarField {
    let mut out = ScalarField::zeros(state.phi.grid());
    rhs_into(&state.phi, g, params.eps, &mut out);
    out
}

fn rhs_into(phi: &ScalarField, g: &ScalarField, eps: f64, out: &mut ScalarField) {
    phi.laplacian_into(out);
    let inv_eps2 = 1.0 / (eps * eps);
    let inv_eps = 1.0 / eps;
    let pv = phi.values();
    let gv = g.values();
    out.values_mut()
        .par_chunks_mut(4096)
        .enumerate()
        .for_each(|(chunk, slab)| {
            let base = chunk * 4096;
            for (k, lap) in slab.iter_mut().enumerate() {
                let s = pv[base + k];
                let one_minus_s2 = 1.0 - s * s;
                let wp = -2.0 * s * one_minus_s2;
                *lap = *lap - wp * inv_eps2 + gv[base + k] * one_minus_s2.abs() * inv_eps;
            }
        });
}

/// One forward Euler step.  Fails with `MaxPrinciple` if the update
/// leaves (-1, 1); the caller is expected to have validated params.
pub fn step(
    state: &SimState,
    g: &ScalarField,
    params: &SimParams,
) -> Result<SimState, SolverError> {
    let mut next = state.clone();
    let mut scratch = ScalarField::zeros(state.phi.grid());
    advance(&mut next, g, params, &mut scratch)?;
    Ok(next)
}

/// In-place step used by both `step` and the run loop.  `scratch` holds
/// the rhs so the update reads phi and writes phi with no aliasing.
fn advance(
    state: &mut SimState,
    g: &ScalarField,
    params: &SimParams,
    scratch: &mut ScalarField,
) -> Result<(), SolverError> {
    rhs_into(&state.phi, g, params.eps, scratch);
    let dt = params.dt;
    let rv = scratch.values();
    let max_abs = state
        .phi
        .values_mut()
        .par_chunks_mut(4096)
        .enumerate()
        .map(|(chunk, slab)| {
            let base = chunk * 4096;
            let mut local = 0.0f64;
            for (k, p) in slab.iter_mut().enumerate() {
                *p += dt * rv[base + k];
                local = local.max(p.abs());
            }
            local
        })
        .reduce(|| 0.0, f64::max);
    state.step += 1;
    state.t = state.step as f64 * dt;
    if max_abs >= 1.0 {
        let node = state
            .phi
            .values()
            .iter()
            .position(|p| p.abs() >= 1.0)
            .expect("a node reached the reported maximum");
        return Err(SolverError::MaxPrinciple {
            step: state.step,
            t: state.t,
            max_abs,
            node,
        });
    }
    Ok(())
}

/// Whether a recording sink wants the run to continue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    Continue,
    Stop,
}

/// Observer invoked at the recording cadence (and at the first and last
/// step).  Returning `Stop` ends the run early — used for steady-state
/// detection; returning an error aborts it — used for barrier violations.
pub trait RecordSink {
    type Error: std::error::Error;
    fn record(&mut self, state: &SimState, params: &SimParams) -> Result<Signal, Self::Error>;
}

/// Sink that records nothing and never stops the run.
pub struct NullSink;

impl RecordSink for NullSink {
    type Error = std::convert::Infallible;
    fn record(&mut self, _: &SimState, _: &SimParams) -> Result<Signal, Self::Error> {
        Ok(Signal::Continue)
    }
}

/// Knobs for `run` that are not physics: the clearance delta1 demanded by
/// the assumption checks and the recording cadence in steps.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub delta1: f64,
    pub record_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { delta1: 0.0, record_every: 100 }
    }
}

/// One recorded state.
#[derive(Debug, Clone)]
pub struct Record {
    pub step: usize,
    pub t: f64,
    pub phi: ScalarField,
}

/// Everything a run leaves behind for post-hoc diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: SimParams,
    pub forcing: ScalarField,
    pub records: Vec<Record>,
    pub steps_taken: usize,
    pub stopped_early: bool,
}

/// Build the initial data and forcing for a scenario, validate the
/// standing assumptions, and integrate to t_end (or until the sink says
/// stop).  Records land in the returned trajectory at the sink cadence,
/// always including the initial and final states.
pub fn run<S: RecordSink>(
    surface: &InitialSurface,
    obstacles: &ObstacleSet,
    params: SimParams,
    options: RunOptions,
    sink: &mut S,
) -> Result<Trajectory, RunError<S::Error>> {
    let grid = params.validate().map_err(RunError::Solver)?;
    let report = validate_assumptions(surface, obstacles, options.delta1, grid);
    if !report.all_passed() {
        return Err(RunError::Solver(SolverError::AssumptionsViolated(report)));
    }
    let sdist = signed_distance(surface, grid).map_err(SolverError::from)?;
    let phi0 = smooth_initial_profile(&sdist, params.eps, params.r0).map_err(SolverError::from)?;
    // No obstacles means no forcing; the band-width precondition only
    // matters when there are bands.
    let forcing = if obstacles.is_empty() {
        ScalarField::zeros(grid)
    } else {
        build_forcing(obstacles, params.eps, grid).map_err(SolverError::from)?
    };

    let total_steps = if params.t_end == 0.0 {
        0
    } else {
        (params.t_end / params.dt).ceil() as usize
    };
    let cadence = options.record_every.max(1);

    let mut state = SimState::initial(phi0);
    let mut scratch = ScalarField::zeros(grid);
    let mut records = Vec::new();
    let mut stopped_early = false;

    let mut record =
        |state: &SimState, records: &mut Vec<Record>| -> Result<Signal, RunError<S::Error>> {
            records.push(Record { step: state.step, t: state.t, phi: state.phi.clone() });
            sink.record(state, &params).map_err(RunError::Sink)
        };

    if record(&state, &mut records)? == Signal::Stop {
        stopped_early = total_steps > 0;
        return Ok(Trajectory {
            params,
            forcing,
            records,
            steps_taken: 0,
            stopped_early,
        });
    }

    while state.step < total_steps {
        advance(&mut state, &forcing, &params, &mut scratch).map_err(RunError::Solver)?;
        let due = state.step % cadence == 0 || state.step == total_steps;
        if due {
            if record(&state, &mut records)? == Signal::Stop {
                stopped_early = state.step < total_steps;
                break;
            }
        }
    }

    Ok(Trajectory {
        params,
        forcing,
        records,
        steps_taken: state.step,
        stopped_early,
    })
}

/// Maxima of eps |grad phi| and eps^2 |lap phi|, with the profile-scale
/// bound on the first.  Meaningful once t >= eps^2, after the initial
/// layer has relaxed onto the tanh profile.
#[derive(Debug, Clone, Copy)]
pub struct GradientBoundReport {
    pub max_eps_grad: f64,
    pub max_eps2_lap: f64,
    /// eps |grad phi| <= 1.2: the exact profile gives exactly 1 at the
    /// interface; 20% headroom covers transients.
    pub grad_within_bound: bool,
    /// Whether t >= eps^2 held when the check ran.
    pub past_initial_layer: bool,
}

pub fn gradient_bound_check(state: &SimState, params: &SimParams) -> GradientBoundReport {
    let eps = params.eps;
    let max_eps_grad = eps * state.phi.gradient().max_norm();
    let max_eps2_lap = eps * eps * state.phi.laplacian().max_abs();
    GradientBoundReport {
        max_eps_grad,
        max_eps2_lap,
        grad_within_bound: max_eps_grad <= 1.2,
        past_initial_layer: state.t >= eps * eps,
    }
}
