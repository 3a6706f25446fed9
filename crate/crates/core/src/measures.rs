//! Surface measures and a-posteriori diagnostics for phase fields.
//!
//! Everything here is normalized by the surface tension [`sigma`] so that a
//! single flat, well-prepared interface carries unit mass per unit length
//! (area in 3-d).  The checks consume either a single field or the record
//! sequence of a [`Trajectory`](crate::solver::Trajectory) and report
//! quantitative violations instead of panicking; hard input errors (probe
//! windows beyond the kernel truncation range, radii below the resolution
//! floor, test functions that touch the forcing support) come back as
//! [`MeasuresError`].

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::ObstacleSet;
use crate::grid::{det_sum, Point, ScalarField};
use crate::solver::{double_well, Record, SimParams};

/// Widest kernel window `s - t` the truncated image sum supports.
pub const KERNEL_WINDOW_CAP: f64 = 1.0 / 16.0;
/// Below this window the 3^d image set already has negligible tail.
const KERNEL_NEAR_CAP: f64 = 1.0 / 36.0;
/// How far (in units of `eps`) obstacle balls are shrunk before the phase
/// values inside them are audited.
pub const AVOIDANCE_SHRINK: f64 = 3.0;
/// Tolerance on `|phi| - 1` deep inside an obstacle.
pub const PHASE_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum MeasuresError {
    #[error("{what} needs at least {need} records, got {got}")]
    TooFewRecords {
        what: &'static str,
        need: usize,
        got: usize,
    },
    #[error("record times must be strictly increasing: t[{index}] = {t} after {prev}")]
    NonIncreasingTimes { index: usize, t: f64, prev: f64 },
    #[error("probe time {s} must lie strictly after the record at t = {t}")]
    ProbeNotAfterRecord { s: f64, t: f64 },
    #[error("kernel window s - t = {span} exceeds the truncation cap {cap}")]
    WindowTooWide { span: f64, cap: f64 },
    #[error("ball radius {radius} is below the reliability floor {floor}")]
    RadiusTooSmall { radius: f64, floor: f64 },
    #[error("test function is negative at node {node}: {value}")]
    NegativeTestFn { node: usize, value: f64 },
    #[error("test function support meets the forcing support at node {node}")]
    SupportViolation { node: usize },
    #[error("window [{lo}, {hi}] selects fewer than two records")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("record interval must have positive length: t1 = {t1}, t2 = {t2}")]
    BadInterval { t1: f64, t2: f64 },
}

/// Surface tension of the standard quartic well: integral of `sqrt(2 W)`
/// across the heteroclinic profile, exactly 4/3.
pub fn sigma() -> f64 {
    4.0 / 3.0
}

/// Deterministic sum of `a[i] * b[i]` (same chunking as [`det_sum`]).
fn weighted_sum(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let products: Vec<f64> = a
        .par_iter()
        .zip(b.par_iter())
        .map(|(x, y)| x * y)
        .collect();
    det_sum(&products)
}

/// Normalized interface measure of a field, split into its gradient and
/// well halves.
///
/// `mu_mass` is the arithmetic mean of the two halves by construction, so
/// `mu_mass == (mu_tilde_mass + mu_hat_mass) / 2` holds to the last bit.
#[derive(Debug, Clone)]
pub struct SurfaceMeasures {
    pub mu_mass: f64,
    pub mu_tilde_mass: f64,
    pub mu_hat_mass: f64,
    /// Node-wise density `(eps |grad phi|^2 / 2 + W(phi)/eps) / sigma`.
    pub density: ScalarField,
}

impl SurfaceMeasures {
    /// Unnormalized interface energy, `sigma * mu_mass`.
    pub fn energy(&self) -> f64 {
        sigma() * self.mu_mass
    }
}

pub fn surface_measures(phi: &ScalarField, eps: f64) -> SurfaceMeasures {
    assert!(eps > 0.0 && eps.is_finite(), "eps must be positive");
    let grid = phi.grid();
    let grad_sq = phi.gradient().norm_sq();
    let vol = grid.cell_volume();
    let s = sigma();

    let sum_grad = det_sum(grad_sq.values());
    let sum_well = phi.integrate_mapped(|v| double_well(v).w) / vol;
    let mu_tilde_mass = eps * sum_grad * vol / s;
    let mu_hat_mass = 2.0 * sum_well * vol / (eps * s);
    let mu_mass = 0.5 * (mu_tilde_mass + mu_hat_mass);

    let mut density = grad_sq;
    density
        .values_mut()
        .par_iter_mut()
        .zip(phi.values().par_iter())
        .for_each(|(g, &p)| {
            *g = (eps * *g / 2.0 + double_well(p).w / eps) / s;
        });
    SurfaceMeasures {
        mu_mass,
        mu_tilde_mass,
        mu_hat_mass,
        density,
    }
}

/// Pointwise discrepancy `eps |grad phi|^2 / 2 - W(phi)/eps` and its L1 norm.
///
/// The discrepancy vanishes identically on exact one-dimensional profiles;
/// on discrete fields it measures equipartition failure and enters the
/// localized monotonicity correction with the same `1/sigma` normalization
/// as the measure itself.
#[derive(Debug, Clone)]
pub struct Discrepancy {
    pub field: ScalarField,
    pub l1: f64,
}

pub fn discrepancy(phi: &ScalarField, eps: f64) -> Discrepancy {
    assert!(eps > 0.0 && eps.is_finite(), "eps must be positive");
    let mut field = phi.gradient().norm_sq();
    field
        .values_mut()
        .par_iter_mut()
        .zip(phi.values().par_iter())
        .for_each(|(g, &p)| {
            *g = eps * *g / 2.0 - double_well(p).w / eps;
        });
    let l1 = field.integrate_mapped(f64::abs);
    Discrepancy { field, l1 }
}

/// Variational derivative of the interface energy,
/// `w = -eps lap(phi) + W'(phi)/eps`.
///
/// The unforced field velocity is `-w / eps`, so `int w^2 / eps` is the
/// instantaneous energy dissipation rate of the unforced flow.
pub fn chemical_potential(phi: &ScalarField, eps: f64) -> ScalarField {
    assert!(eps > 0.0 && eps.is_finite(), "eps must be positive");
    let mut out = phi.laplacian();
    out.values_mut()
        .par_iter_mut()
        .zip(phi.values().par_iter())
        .for_each(|(l, &p)| {
            *l = -eps * *l + double_well(p).wp / eps;
        });
    out
}

/// Energy dissipation rate `int w^2 / eps` of the unforced flow.
pub fn dissipation_rate(phi: &ScalarField, eps: f64) -> f64 {
    chemical_potential(phi, eps).integrate_mapped(|w| w * w) / eps
}

/// Monotone phase indicator `(phi (3 - phi^2) + 2) / 4`, mapping
/// `[-1, 1]` onto `[0, 1]` with exact endpoint values.
pub fn phase_indicator(phi: &ScalarField) -> ScalarField {
    let mut out = phi.clone();
    out.values_mut().par_iter_mut().for_each(|p| {
        *p = (*p * (3.0 - *p * *p) + 2.0) / 4.0;
    });
    out
}

/// One row of the diagnostics table a run produces per record.
///
/// `barrier_margins` holds one worst margin per tracked barrier;
/// `brakke_residual` and `monotonicity_ratio` stay `None` unless the
/// corresponding windowed diagnostic was enabled for the run.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub discrepancy_l1: f64,
    pub dissipation: f64,
    /// L1 change of the phase indicator since the previous record.
    pub w_mass_change: f64,
    pub mu_mass: f64,
    pub mu_tilde_mass: f64,
    pub mu_hat_mass: f64,
    pub min_phi: f64,
    pub max_phi: f64,
    pub barrier_margins: Vec<f64>,
    pub brakke_residual: Option<f64>,
    pub monotonicity_ratio: Option<f64>,
}

impl DiagnosticsRecord {
    /// Measures the intrinsic per-field quantities; relational fields
    /// (`w_mass_change`, margins, windowed residuals) start empty.
    pub fn measure(phi: &ScalarField, eps: f64, t: f64) -> Self {
        let m = surface_measures(phi, eps);
        let disc = discrepancy(phi, eps);
        let (min_phi, max_phi) = phi.min_max();
        DiagnosticsRecord {
            t,
            energy: m.energy(),
            discrepancy_l1: disc.l1,
            dissipation: dissipation_rate(phi, eps),
            w_mass_change: 0.0,
            mu_mass: m.mu_mass,
            mu_tilde_mass: m.mu_tilde_mass,
            mu_hat_mass: m.mu_hat_mass,
            min_phi,
            max_phi,
            barrier_margins: Vec::new(),
            brakke_residual: None,
            monotonicity_ratio: None,
        }
    }
}

/// Energy-dissipation audit over one record interval.
///
/// Checks the discrete counterpart of
/// `dE/dt + (1/2) int w^2/eps <= (d/R0)^2 int W/eps`,
/// with the dissipation and well integrals evaluated at a state from the
/// interior of the interval (second-order accurate when that state is the
/// midpoint record).  The Young-inequality slack on the right absorbs the
/// first-order time-stepping bias.
#[derive(Debug, Clone)]
pub struct DissipationReport {
    pub t1: f64,
    pub t2: f64,
    pub energy_rate: f64,
    pub half_dissipation: f64,
    pub forcing_bound: f64,
    /// `energy_rate + half_dissipation - forcing_bound`, relative to
    /// `max(1, half_dissipation + forcing_bound)`.
    pub excess: f64,
    pub within_tol: bool,
}

pub fn dissipation_check(
    prev: &DiagnosticsRecord,
    cur: &DiagnosticsRecord,
    mid_phi: &ScalarField,
    params: &SimParams,
    tol: f64,
) -> Result<DissipationReport, MeasuresError> {
    if !(cur.t > prev.t) {
        return Err(MeasuresError::BadInterval {
            t1: prev.t,
            t2: cur.t,
        });
    }
    let energy_rate = (cur.energy - prev.energy) / (cur.t - prev.t);
    let half_dissipation = 0.5 * dissipation_rate(mid_phi, params.eps);
    let well_integral = mid_phi.integrate_mapped(|v| double_well(v).w) / params.eps;
    let rate_bound = (params.d as f64 / params.r0).powi(2);
    let forcing_bound = rate_bound * well_integral;
    let scale = (half_dissipation + forcing_bound).max(1.0);
    let excess = (energy_rate + half_dissipation - forcing_bound) / scale;
    Ok(DissipationReport {
        t1: prev.t,
        t2: cur.t,
        energy_rate,
        half_dissipation,
        forcing_bound,
        excess,
        within_tol: excess <= tol,
    })
}

/// Cumulative energy-growth audit: every recorded energy must stay below
/// `E(0) exp((d/R0)^2 (t - t0))` up to a relative tolerance.
#[derive(Debug, Clone)]
pub struct GronwallReport {
    pub max_excess: f64,
    pub argmax_t: f64,
    pub within_tol: bool,
}

pub fn gronwall_energy_check(
    records: &[DiagnosticsRecord],
    params: &SimParams,
    tol: f64,
) -> Result<GronwallReport, MeasuresError> {
    if records.is_empty() {
        return Err(MeasuresError::TooFewRecords {
            what: "gronwall_energy_check",
            need: 1,
            got: 0,
        });
    }
    let e0 = records[0].energy;
    let t0 = records[0].t;
    let rate = (params.d as f64 / params.r0).powi(2);
    let scale = e0.max(1e-12);
    let mut max_excess = f64::NEG_INFINITY;
    let mut argmax_t = t0;
    for rec in records {
        let bound = e0 * (rate * (rec.t - t0)).exp();
        let excess = (rec.energy - bound) / scale;
        if excess > max_excess {
            max_excess = excess;
            argmax_t = rec.t;
        }
    }
    Ok(GronwallReport {
        max_excess,
        argmax_t,
        within_tol: max_excess <= tol,
    })
}

/// Truncated periodic backward heat kernel centered at `(y, s)`, evaluated
/// at `x` for a record at time `t` (`smt = s - t`).  `images` is the
/// half-width of the lattice offset cube.
fn heat_kernel(x: Point, y: Point, d: usize, smt: f64, images: i64) -> f64 {
    let norm = (4.0 * std::f64::consts::PI * smt).powf(-((d as f64 - 1.0) / 2.0));
    let inv = 1.0 / (4.0 * smt);
    let mut acc = 0.0;
    let kz_range = if d == 3 { -images..=images } else { 0..=0 };
    for kz in kz_range {
        for ky in -images..=images {
            for kx in -images..=images {
                let dx = x[0] - y[0] + kx as f64;
                let dy = x[1] - y[1] + ky as f64;
                let dz = if d == 3 { x[2] - y[2] + kz as f64 } else { 0.0 };
                acc += (-(dx * dx + dy * dy + dz * dz) * inv).exp();
            }
        }
    }
    norm * acc
}

/// Localized monotonicity audit with the backward heat kernel.
///
/// For each record the Gaussian-weighted mass `A(t) = int rho dmu_t` is
/// combined into
/// `B(t) = exp(-lambda t) A(t) - int_0^t exp(-lambda tau) (2(s-tau))^-1 int rho dxi dtau`,
/// `lambda = (d/R0)^2 / 2`, with the correction integral accumulated by the
/// trapezoid rule over the records.  `B` must be nonincreasing up to
/// `tol * max(1, max |B|)`.
#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub probe: Point,
    pub s: f64,
    pub lambda: f64,
    pub times: Vec<f64>,
    /// Raw Gaussian-weighted masses `A(t_k)`.
    pub weighted: Vec<f64>,
    /// Adjusted quantities `B(t_k)`.
    pub values: Vec<f64>,
    pub max_increase: f64,
    pub within_tol: bool,
}

pub fn monotonicity_check(
    records: &[Record],
    probe: Point,
    s: f64,
    params: &SimParams,
    tol: f64,
) -> Result<MonotonicityReport, MeasuresError> {
    if records.len() < 2 {
        return Err(MeasuresError::TooFewRecords {
            what: "monotonicity_check",
            need: 2,
            got: records.len(),
        });
    }
    check_increasing(records)?;
    let d = params.d;
    let eps = params.eps;
    let lambda = 0.5 * (d as f64 / params.r0).powi(2);

    let mut times = Vec::with_capacity(records.len());
    let mut weighted = Vec::with_capacity(records.len());
    let mut correction_rates = Vec::with_capacity(records.len());
    for rec in records {
        let smt = s - rec.t;
        if smt <= 0.0 {
            return Err(MeasuresError::ProbeNotAfterRecord { s, t: rec.t });
        }
        if smt > KERNEL_WINDOW_CAP * (1.0 + 1e-12) {
            return Err(MeasuresError::WindowTooWide {
                span: smt,
                cap: KERNEL_WINDOW_CAP,
            });
        }
        let images = if smt <= KERNEL_NEAR_CAP { 1 } else { 2 };
        let rho = ScalarField::from_fn(rec.phi.grid(), |x| heat_kernel(x, probe, d, smt, images));
        let m = surface_measures(&rec.phi, eps);
        let xi = discrepancy(&rec.phi, eps);
        let vol = rec.phi.grid().cell_volume();
        let a = weighted_sum(rho.values(), m.density.values()) * vol;
        let xi_weighted = weighted_sum(rho.values(), xi.field.values()) * vol / sigma();
        times.push(rec.t);
        weighted.push(a);
        correction_rates.push((-lambda * rec.t).exp() * xi_weighted / (2.0 * smt));
    }

    let mut values = Vec::with_capacity(records.len());
    let mut correction = 0.0;
    for k in 0..records.len() {
        if k > 0 {
            let dt = times[k] - times[k - 1];
            correction += 0.5 * (correction_rates[k - 1] + correction_rates[k]) * dt;
        }
        values.push((-lambda * times[k]).exp() * weighted[k] - correction);
    }

    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let max_increase = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MonotonicityReport {
        probe,
        s,
        lambda,
        times,
        weighted,
        values,
        max_increase,
        within_tol: max_increase <= tol * scale,
    })
}

fn check_increasing(records: &[Record]) -> Result<(), MeasuresError> {
    for (k, pair) in records.windows(2).enumerate() {
        if !(pair[1].t > pair[0].t) {
            return Err(MeasuresError::NonIncreasingTimes {
                index: k + 1,
                t: pair[1].t,
                prev: pair[0].t,
            });
        }
    }
    Ok(())
}

/// Per-record localized masses and fluxes for the Brakke-type inequality
/// test.  `test_mass[k]` is the measure of the test function at record k;
/// `flux[k]` is the instantaneous right-hand side
/// `(1/sigma) int (-phi_T w^2/eps + (grad phi_T . grad phi) w) dx`.
#[derive(Debug, Clone)]
pub struct BrakkeSeries {
    pub times: Vec<f64>,
    pub test_mass: Vec<f64>,
    pub flux: Vec<f64>,
}

impl BrakkeSeries {
    /// Residual of the integrated inequality between records `i < j`:
    /// `(lhs, rhs, |lhs - rhs|)` with the flux integrated by trapezoid.
    pub fn residual(&self, i: usize, j: usize) -> (f64, f64, f64) {
        assert!(i < j && j < self.times.len());
        let lhs = self.test_mass[j] - self.test_mass[i];
        let mut rhs = 0.0;
        for k in i..j {
            let dt = self.times[k + 1] - self.times[k];
            rhs += 0.5 * (self.flux[k] + self.flux[k + 1]) * dt;
        }
        (lhs, rhs, (lhs - rhs).abs())
    }
}

pub fn brakke_series(
    records: &[Record],
    test_fn: &ScalarField,
    forcing: &ScalarField,
    eps: f64,
) -> Result<BrakkeSeries, MeasuresError> {
    if records.len() < 2 {
        return Err(MeasuresError::TooFewRecords {
            what: "brakke_series",
            need: 2,
            got: records.len(),
        });
    }
    check_increasing(records)?;
    for (node, &v) in test_fn.values().iter().enumerate() {
        if v < 0.0 {
            return Err(MeasuresError::NegativeTestFn { node, value: v });
        }
        if v > 0.0 && forcing.values()[node] != 0.0 {
            return Err(MeasuresError::SupportViolation { node });
        }
    }

    let grid = test_fn.grid();
    let vol = grid.cell_volume();
    let grad_t = test_fn.gradient();
    let s = sigma();
    let mut times = Vec::with_capacity(records.len());
    let mut test_mass = Vec::with_capacity(records.len());
    let mut flux = Vec::with_capacity(records.len());
    for rec in records {
        let m = surface_measures(&rec.phi, eps);
        let w = chemical_potential(&rec.phi, eps);
        let grad_phi = rec.phi.gradient();
        test_mass.push(weighted_sum(test_fn.values(), m.density.values()) * vol);

        let d = grid.d();
        let terms: Vec<f64> = (0..grid.num_nodes())
            .into_par_iter()
            .map(|i| {
                let wv = w.values()[i];
                let mut advect = 0.0;
                for axis in 0..d {
                    advect += grad_t.comp(axis)[i] * grad_phi.comp(axis)[i];
                }
                -test_fn.values()[i] * wv * wv / eps + advect * wv
            })
            .collect();
        flux.push(det_sum(&terms) * vol / s);
        times.push(rec.t);
    }
    Ok(BrakkeSeries {
        times,
        test_mass,
        flux,
    })
}

/// Integrated Brakke-type residual over a time window.
#[derive(Debug, Clone)]
pub struct BrakkeReport {
    pub t1: f64,
    pub t2: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn brakke_residual(
    records: &[Record],
    test_fn: &ScalarField,
    forcing: &ScalarField,
    eps: f64,
    window: (f64, f64),
) -> Result<BrakkeReport, MeasuresError> {
    let lo = window.0 - 1e-12;
    let hi = window.1 + 1e-12;
    let selected: Vec<Record> = records
        .iter()
        .filter(|r| r.t >= lo && r.t <= hi)
        .cloned()
        .collect();
    if selected.len() < 2 {
        return Err(MeasuresError::EmptyWindow {
            lo: window.0,
            hi: window.1,
        });
    }
    let series = brakke_series(&selected, test_fn, forcing, eps)?;
    let (lhs, rhs, residual) = series.residual(0, series.times.len() - 1);
    Ok(BrakkeReport {
        t1: series.times[0],
        t2: *series.times.last().unwrap(),
        lhs,
        rhs,
        residual,
    })
}

/// Mass of `mu` in balls around `x0` divided by the mass a unit-density
/// chord would carry (`2r` in 2-d, `pi r^2` in 3-d).  Radii below
/// `AVOIDANCE_SHRINK * eps` are rejected: the layer itself is thicker than
/// the ball and the ratio would be meaningless.
pub fn density_ratio(
    phi: &ScalarField,
    eps: f64,
    x0: Point,
    radii: &[f64],
) -> Result<Vec<f64>, MeasuresError> {
    let floor = AVOIDANCE_SHRINK * eps;
    for &r in radii {
        if r < floor {
            return Err(MeasuresError::RadiusTooSmall { radius: r, floor });
        }
    }
    let grid = phi.grid();
    let m = surface_measures(phi, eps);
    let vol = grid.cell_volume();
    let omega = match grid.d() {
        2 => 2.0,
        _ => std::f64::consts::PI,
    };
    Ok(radii
        .iter()
        .map(|&r| {
            let masked: Vec<f64> = (0..grid.num_nodes())
                .into_par_iter()
                .map(|i| {
                    if grid.distance(grid.position(i), x0) <= r {
                        m.density.values()[i]
                    } else {
                        0.0
                    }
                })
                .collect();
            det_sum(&masked) * vol / (omega * r.powi(grid.d() as i32 - 1))
        })
        .collect())
}

/// Audit of the obstacle constraint: interface mass and phase values deep
/// inside the obstacle balls (shrunk by `AVOIDANCE_SHRINK * eps`).
///
/// `min_phi_plus` / `max_phi_minus` are `None` when the shrunk family
/// covers no grid node.
#[derive(Debug, Clone)]
pub struct AvoidanceReport {
    pub plus_mass: f64,
    pub minus_mass: f64,
    pub min_phi_plus: Option<f64>,
    pub max_phi_minus: Option<f64>,
    pub mass_tol: f64,
    pub passed: bool,
}

pub fn obstacle_avoidance_check(
    phi: &ScalarField,
    obstacles: &ObstacleSet,
    eps: f64,
    mass_tol: f64,
) -> AvoidanceReport {
    let grid = phi.grid();
    let m = surface_measures(phi, eps);
    let vol = grid.cell_volume();
    let shrink = AVOIDANCE_SHRINK * eps;

    let audit = |plus: bool| -> (f64, Option<f64>) {
        let family = if plus { &obstacles.plus } else { &obstacles.minus };
        let per_node: Vec<(f64, f64)> = (0..grid.num_nodes())
            .into_par_iter()
            .map(|i| {
                let x = grid.position(i);
                // Depth of the node inside the family; nodes deeper than the
                // shrink margin lie in the shrunk balls.
                let depth = family
                    .iter()
                    .map(|b| b.signed_distance(x, grid.d()))
                    .fold(f64::NEG_INFINITY, f64::max);
                if depth > shrink {
                    (m.density.values()[i], phi.values()[i])
                } else {
                    (0.0, if plus { f64::INFINITY } else { f64::NEG_INFINITY })
                }
            })
            .collect();
        let masses: Vec<f64> = per_node.iter().map(|p| p.0).collect();
        let mass = det_sum(&masses) * vol;
        let extreme = per_node
            .iter()
            .map(|p| p.1)
            .fold(if plus { f64::INFINITY } else { f64::NEG_INFINITY }, |a, b| {
                if plus {
                    a.min(b)
                } else {
                    a.max(b)
                }
            });
        let witness = if extreme.is_finite() { Some(extreme) } else { None };
        (mass, witness)
    };

    let (plus_mass, min_phi_plus) = audit(true);
    let (minus_mass, max_phi_minus) = audit(false);
    let passed = plus_mass <= mass_tol
        && minus_mass <= mass_tol
        && min_phi_plus.map_or(true, |v| v >= 1.0 - PHASE_TOL)
        && max_phi_minus.map_or(true, |v| v <= -1.0 + PHASE_TOL);
    AvoidanceReport {
        plus_mass,
        minus_mass,
        min_phi_plus,
        max_phi_minus,
        mass_tol,
        passed,
    }
}

/// Empirical 1/2-Hoelder constant of the phase-indicator mass: the largest
/// `int |w(t_k) - w(t_j)| / sqrt(t_k - t_j)` over all record pairs.
#[derive(Debug, Clone)]
pub struct HolderReport {
    pub constant: f64,
    /// Record indices attaining the constant.
    pub argmax: (usize, usize),
}

pub fn holder_check(records: &[Record]) -> Result<HolderReport, MeasuresError> {
    if records.len() < 2 {
        return Err(MeasuresError::TooFewRecords {
            what: "holder_check",
            need: 2,
            got: records.len(),
        });
    }
    check_increasing(records)?;
    let indicators: Vec<ScalarField> = records.iter().map(|r| phase_indicator(&r.phi)).collect();
    let vol = records[0].phi.grid().cell_volume();
    let mut constant = f64::NEG_INFINITY;
    let mut argmax = (0, 1);
    for j in 0..records.len() {
        for k in (j + 1)..records.len() {
            let diffs: Vec<f64> = indicators[j]
                .values()
                .par_iter()
                .zip(indicators[k].values().par_iter())
                .map(|(a, b)| (a - b).abs())
                .collect();
            let change = det_sum(&diffs) * vol;
            let ratio = change / (records[k].t - records[j].t).sqrt();
            if ratio > constant {
                constant = ratio;
                argmax = (j, k);
            }
        }
    }
    Ok(HolderReport { constant, argmax })
}
