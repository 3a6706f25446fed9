//! Radial comparison profiles pinned to obstacle balls, and the runtime
//! ordering checks that certify the interface never crosses an obstacle.
//!
//! A SUB barrier for a plus ball B_{r0}(y) is phi_under = tanh(rbar/eps)
//! with rbar(x) = (r0^2 - |x-y|^2)/(2 r0): a stationary lower bound the
//! forced flow can touch but never cross, provided eps is below the
//! admissibility threshold where the forcing amplitude 2d/r0 is dominated
//! by the profile's reaction capacity (4/(sqrt(eps) r0)) tanh(1/sqrt(eps)).
//! SUPER barriers for minus balls are the sign mirror.  The discrete
//! scheme satisfies the comparison only up to truncation error, so the
//! monitor takes a tolerance (default 10 h^2, calibrated by halving h).

use crate::geometry::ObstacleSet;
use crate::grid::{torus_distance, Point, ScalarField, TorusGrid};
use rayon::prelude::*;
use thiserror::Error;

/// Cap on the tanh argument: tanh(18) is already within 5e-16 of 1, and
/// capping keeps far-field profile values strictly inside (-1, 1) instead
/// of saturating to exactly +-1.
const TANH_ARG_CAP: f64 = 18.0;

#[derive(Debug, Error)]
pub enum BarrierError {
    #[error("barrier ball (r0 = {r0}) plus band 2 sqrt(eps) spans {extent} >= 1/2, does not fit one periodic cell")]
    OutOfCell { r0: f64, extent: f64 },
    #[error("{kind:?} barrier ball at {center:?} (r0 = {r0}) is not contained in any matching obstacle ball")]
    NotContained { kind: BarrierKind, center: Point, r0: f64 },
    #[error("eps = {eps} is not admissible for d = {d}, r0 = {r0}: threshold is {threshold:.6}")]
    Inadmissible { eps: f64, d: usize, r0: f64, threshold: f64 },
    #[error("{kind:?} barrier ordering fails at node {node}: margin {margin:e} below -{tol:e}")]
    OrderingViolation { kind: BarrierKind, node: usize, margin: f64, tol: f64 },
    #[error("{kind:?} barrier crossed at t = {t:e}, node {node}: margin {margin:e} below -{tol:e}")]
    ComparisonViolation { kind: BarrierKind, node: usize, margin: f64, tol: f64, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierKind {
    /// Lower bound protecting a plus obstacle: barrier <= phi.
    Sub,
    /// Upper bound protecting a minus obstacle: phi <= barrier.
    Super,
}

/// A validated barrier: the ball B_{r0}(center) lies inside an obstacle
/// ball of the matching sign and eps is below the admissibility threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barrier {
    pub center: Point,
    pub r0: f64,
    pub eps: f64,
    pub kind: BarrierKind,
}

impl Barrier {
    pub fn new(
        center: Point,
        r0: f64,
        eps: f64,
        kind: BarrierKind,
        d: usize,
        obstacles: &ObstacleSet,
    ) -> Result<Self, BarrierError> {
        let family = match kind {
            BarrierKind::Sub => &obstacles.plus,
            BarrierKind::Super => &obstacles.minus,
        };
        let contained = family
            .iter()
            .any(|b| torus_distance(center, b.center, d) + r0 <= b.radius + 1e-12);
        if !contained {
            return Err(BarrierError::NotContained { kind, center, r0 });
        }
        let threshold = admissibility_threshold(d, r0);
        if eps >= threshold {
            return Err(BarrierError::Inadmissible { eps, d, r0, threshold });
        }
        Ok(Self { center, r0, eps, kind })
    }

    /// One barrier per obstacle ball, sized to the ball itself.
    pub fn for_obstacles(
        obstacles: &ObstacleSet,
        eps: f64,
        d: usize,
    ) -> Result<Vec<Barrier>, BarrierError> {
        let mut out = Vec::new();
        for b in &obstacles.plus {
            out.push(Barrier::new(b.center, b.radius, eps, BarrierKind::Sub, d, obstacles)?);
        }
        for b in &obstacles.minus {
            out.push(Barrier::new(b.center, b.radius, eps, BarrierKind::Super, d, obstacles)?);
        }
        Ok(out)
    }
}

/// Whether the stationary radial profile can absorb the forcing load at
/// this eps: 2d/r0 <= (4 / (sqrt(eps) r0)) tanh(1/sqrt(eps)).
pub fn is_admissible(d: usize, r0: f64, eps: f64) -> bool {
    let root = eps.sqrt();
    2.0 * d as f64 / r0 <= 4.0 / (root * r0) * (1.0 / root).tanh()
}

/// Largest admissible eps in (0, 1), by bisection to relative tolerance
/// 1e-6.  Always well defined: the capacity side blows up as eps -> 0.
/// The result does not depend on r0 (it scales out of both sides).
pub fn admissibility_threshold(d: usize, r0: f64) -> f64 {
    let mut lo = 0.01;
    while !is_admissible(d, r0, lo) {
        lo /= 2.0;
    }
    let mut hi = 1.0;
    while (hi - lo) / lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if is_admissible(d, r0, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Sample the barrier: tanh(rbar/eps) for SUB, -tanh(rbar/eps) for SUPER,
/// with rbar(x) = (r0^2 - |x - center|^2) / (2 r0) on the nearest-image
/// lift.  The ball plus its forcing band must fit in one periodic cell.
pub fn barrier_profile(b: &Barrier, grid: TorusGrid) -> Result<ScalarField, BarrierError> {
    let extent = b.r0 + 2.0 * b.eps.sqrt();
    if extent >= 0.5 {
        return Err(BarrierError::OutOfCell { r0: b.r0, extent });
    }
    let sign = match b.kind {
        BarrierKind::Sub => 1.0,
        BarrierKind::Super => -1.0,
    };
    let (center, r0, eps, d) = (b.center, b.r0, b.eps, grid.d());
    Ok(ScalarField::from_fn(grid, move |x| {
        let dist = torus_distance(x, center, d);
        let rbar = (r0 * r0 - dist * dist) / (2.0 * r0);
        sign * (rbar / eps).clamp(-TANH_ARG_CAP, TANH_ARG_CAP).tanh()
    }))
}

/// Result of an ordering scan: the worst nodewise margin and where.
/// Margin is phi - barrier for SUB, barrier - phi for SUPER; ordering
/// holds when it stays above -tolerance.
#[derive(Debug, Clone, Copy)]
pub struct OrderingReport {
    pub min_margin: f64,
    pub argmin_node: usize,
}

fn min_margin(phi: &ScalarField, profile: &ScalarField, kind: BarrierKind) -> OrderingReport {
    let pv = phi.values();
    let bv = profile.values();
    let sign = match kind {
        BarrierKind::Sub => 1.0,
        BarrierKind::Super => -1.0,
    };
    let (min_margin, argmin_node) = pv
        .par_chunks(4096)
        .zip(bv.par_chunks(4096))
        .enumerate()
        .map(|(chunk, (ps, bs))| {
            let mut min = f64::INFINITY;
            let mut arg = 0;
            for k in 0..ps.len() {
                let m = sign * (ps[k] - bs[k]);
                if m < min {
                    min = m;
                    arg = chunk * 4096 + k;
                }
            }
            (min, arg)
        })
        .reduce(
            || (f64::INFINITY, 0),
            |a, b| if b.0 < a.0 { b } else { a },
        );
    OrderingReport { min_margin, argmin_node }
}

/// Verify the barrier sits on the correct side of the initial data,
/// nodewise with slack 1e-12.
pub fn initial_ordering_check(
    phi0: &ScalarField,
    b: &Barrier,
) -> Result<OrderingReport, BarrierError> {
    const TOL: f64 = 1e-12;
    let profile = barrier_profile(b, phi0.grid())?;
    let report = min_margin(phi0, &profile, b.kind);
    if report.min_margin < -TOL {
        return Err(BarrierError::OrderingViolation {
            kind: b.kind,
            node: report.argmin_node,
            margin: report.min_margin,
            tol: TOL,
        });
    }
    Ok(report)
}

/// Repeated-use ordering monitor: profiles are sampled once, margins are
/// re-scanned against each new state, and the running worst margin per
/// barrier is kept for post-run calibration.
pub struct ComparisonMonitor {
    entries: Vec<MonitorEntry>,
    tol: f64,
}

struct MonitorEntry {
    barrier: Barrier,
    profile: ScalarField,
    worst_margin: f64,
}

impl ComparisonMonitor {
    /// Truncation-error allowance for the discrete comparison: 10 h^2.
    pub fn default_tolerance(grid: TorusGrid) -> f64 {
        10.0 * grid.h() * grid.h()
    }

    pub fn new(
        barriers: &[Barrier],
        grid: TorusGrid,
        tol: f64,
    ) -> Result<Self, BarrierError> {
        let entries = barriers
            .iter()
            .map(|&barrier| {
                Ok(MonitorEntry {
                    barrier,
                    profile: barrier_profile(&barrier, grid)?,
                    worst_margin: f64::INFINITY,
                })
            })
            .collect::<Result<Vec<_>, BarrierError>>()?;
        Ok(Self { entries, tol })
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Scan one state.  Fails on the first barrier whose margin drops
    /// below -tol; otherwise updates the running minima and returns the
    /// margins in registration order.
    pub fn check(&mut self, phi: &ScalarField, t: f64) -> Result<Vec<f64>, BarrierError> {
        let mut margins = Vec::with_capacity(self.entries.len());
        for e in &mut self.entries {
            let report = min_margin(phi, &e.profile, e.barrier.kind);
            e.worst_margin = e.worst_margin.min(report.min_margin);
            if report.min_margin < -self.tol {
                return Err(BarrierError::ComparisonViolation {
                    kind: e.barrier.kind,
                    node: report.argmin_node,
                    margin: report.min_margin,
                    tol: self.tol,
                    t,
                });
            }
            margins.push(report.min_margin);
        }
        Ok(margins)
    }

    /// Running worst margin per barrier, in registration order.
    pub fn worst_margins(&self) -> Vec<(Barrier, f64)> {
        self.entries.iter().map(|e| (e.barrier, e.worst_margin)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        signed_distance, smooth_initial_profile, Ball, Csg, InitialSurface, ObstacleSet,
    };
    use crate::grid::ScalarField;
    use crate::solver::{run, RecordSink, RunError, RunOptions, Signal, SimParams, SimState};
    use approx::assert_relative_eq;

    fn obstacle_with_plus_ball(cx: f64, cy: f64, r: f64) -> ObstacleSet {
        ObstacleSet::new(vec![Ball::new([cx, cy, 0.0], r).unwrap()], vec![], r, 0.3).unwrap()
    }

    fn sub_barrier(r0: f64, eps: f64) -> Barrier {
        let obs = obstacle_with_plus_ball(0.5, 0.5, r0);
        Barrier::new([0.5, 0.5, 0.0], r0, eps, BarrierKind::Sub, 2, &obs).unwrap()
    }

    #[test]
    fn profile_center_value_is_tanh_r0_over_2eps() {
        let g = TorusGrid::new(2, 64).unwrap();
        let b = sub_barrier(0.08, 0.02);
        let p = barrier_profile(&b, g).unwrap();
        // rbar(center) = r0/2 = 0.04, so the value is tanh(2)
        assert_relative_eq!(
            p.values()[g.index(32, 32, 0)],
            0.96402758007581688,
            max_relative = 1e-15
        );
    }

    #[test]
    fn profile_vanishes_exactly_on_the_ball_sphere() {
        let g = TorusGrid::new(2, 64).unwrap();
        for kind in [BarrierKind::Sub, BarrierKind::Super] {
            let obs = ObstacleSet::new(
                vec![Ball::new([0.5, 0.5, 0.0], 0.25).unwrap()],
                vec![Ball::new([0.5, 0.5, 0.0], 0.25).unwrap()],
                0.25,
                0.3,
            );
            // both families hold the ball so either kind validates
            let b = Barrier::new([0.5, 0.5, 0.0], 0.25, 0.01, kind, 2, &obs.unwrap()).unwrap();
            let p = barrier_profile(&b, g).unwrap();
            // node (0.75, 0.5) is at distance exactly 0.25
            assert_eq!(p.values()[g.index(48, 32, 0)], 0.0);
        }
    }

    #[test]
    fn super_profile_is_the_exact_negation_of_sub() {
        let g = TorusGrid::new(2, 64).unwrap();
        let obs = ObstacleSet::new(
            vec![Ball::new([0.4, 0.6, 0.0], 0.15).unwrap()],
            vec![Ball::new([0.4, 0.6, 0.0], 0.15).unwrap()],
            0.15,
            0.3,
        )
        .unwrap();
        let sub = Barrier::new([0.4, 0.6, 0.0], 0.15, 0.03, BarrierKind::Sub, 2, &obs).unwrap();
        let sup = Barrier::new([0.4, 0.6, 0.0], 0.15, 0.03, BarrierKind::Super, 2, &obs).unwrap();
        let ps = barrier_profile(&sub, g).unwrap();
        let pp = barrier_profile(&sup, g).unwrap();
        for i in 0..g.num_nodes() {
            assert_eq!(pp.values()[i], -ps.values()[i]);
        }
    }

    #[test]
    fn profile_stays_strictly_inside_the_wells_and_decreases_radially() {
        let g = TorusGrid::new(2, 128).unwrap();
        let b = sub_barrier(0.2, 0.02);
        let p = barrier_profile(&b, g).unwrap();
        let (lo, hi) = p.min_max();
        assert!(lo > -1.0 && hi < 1.0, "range [{lo}, {hi}]");
        // walk outward from the center along +x: values never increase
        let mut prev = f64::INFINITY;
        for ix in 64..128 {
            let v = p.values()[g.index(ix, 64, 0)];
            assert!(v <= prev + 1e-15, "ix = {ix}");
            prev = v;
        }
    }

    #[test]
    fn profile_rejects_a_ball_too_large_for_one_cell() {
        let g = TorusGrid::new(2, 64).unwrap();
        // 0.3 + 2 sqrt(0.04) = 0.7 >= 1/2
        let b = sub_barrier(0.3, 0.04);
        assert!(matches!(
            barrier_profile(&b, g),
            Err(BarrierError::OutOfCell { .. })
        ));
    }

    #[test]
    fn admissibility_threshold_matches_bisection_oracles() {
        // frozen from an independent bisection of
        // 2d <= (4/sqrt(eps)) tanh(1/sqrt(eps))
        assert_relative_eq!(admissibility_threshold(2, 0.2), 0.6948165, max_relative = 1e-5);
        assert_relative_eq!(admissibility_threshold(3, 0.2), 0.3801854, max_relative = 1e-5);
    }

    #[test]
    fn admissibility_threshold_ignores_the_radius_scale() {
        for d in [2, 3] {
            let a = admissibility_threshold(d, 0.05);
            let b = admissibility_threshold(d, 0.45);
            assert_relative_eq!(a, b, max_relative = 1e-5);
        }
    }

    #[test]
    fn threshold_brackets_the_admissibility_boundary() {
        for d in [2, 3] {
            let t = admissibility_threshold(d, 0.1);
            assert!(is_admissible(d, 0.1, t / 1.01));
            assert!(!is_admissible(d, 0.1, t * 1.01));
        }
    }

    #[test]
    fn quarter_eps_is_admissible_in_two_dimensions() {
        // 8 tanh(2) = 7.71 >= 4
        assert!(is_admissible(2, 1.0, 0.25));
    }

    #[test]
    fn barrier_construction_rejects_uncovered_or_thick_layers() {
        let obs = obstacle_with_plus_ball(0.5, 0.5, 0.15);
        // center outside every plus ball
        assert!(matches!(
            Barrier::new([0.2, 0.2, 0.0], 0.15, 0.02, BarrierKind::Sub, 2, &obs),
            Err(BarrierError::NotContained { .. })
        ));
        // no minus balls at all for a SUPER barrier
        assert!(matches!(
            Barrier::new([0.5, 0.5, 0.0], 0.15, 0.02, BarrierKind::Super, 2, &obs),
            Err(BarrierError::NotContained { .. })
        ));
        // eps above the d = 2 threshold 0.695
        assert!(matches!(
            Barrier::new([0.5, 0.5, 0.0], 0.15, 0.71, BarrierKind::Sub, 2, &obs),
            Err(BarrierError::Inadmissible { .. })
        ));
        // smaller ball strictly inside the obstacle ball is fine
        assert!(Barrier::new([0.52, 0.5, 0.0], 0.1, 0.02, BarrierKind::Sub, 2, &obs).is_ok());
    }

    fn pin_phi0(g: TorusGrid, u0_radius: f64, eps: f64) -> ScalarField {
        let surface = InitialSurface::new(Csg::Ball(Ball::new([0.5, 0.5, 0.0], u0_radius).unwrap()));
        let sd = signed_distance(&surface, g).unwrap();
        smooth_initial_profile(&sd, eps, 1.0).unwrap()
    }

    #[test]
    fn ordering_holds_with_positive_margin_for_a_cleared_pin() {
        let g = TorusGrid::new(2, 256).unwrap();
        let phi0 = pin_phi0(g, 0.3, 0.02);
        let b = sub_barrier(0.12, 0.02);
        let report = initial_ordering_check(&phi0, &b).unwrap();
        assert!(report.min_margin > 0.0, "margin {}", report.min_margin);
    }

    #[test]
    fn ordering_margin_is_tiny_for_the_zero_clearance_case() {
        // U0 equals the barrier ball: both fields share the zero set and
        // the profile curvature keeps the barrier just underneath.
        let g = TorusGrid::new(2, 256).unwrap();
        let phi0 = pin_phi0(g, 0.12, 0.02);
        let b = sub_barrier(0.12, 0.02);
        let report = initial_ordering_check(&phi0, &b).unwrap();
        assert!(report.min_margin >= 0.0);
        assert!(report.min_margin < 1e-4, "margin {}", report.min_margin);
    }

    #[test]
    fn ordering_fails_for_an_obstacle_on_the_wrong_side() {
        // minus obstacle sitting inside U0: phi0 = +1 there but the SUPER
        // barrier demands phi <= -tanh near its center
        let g = TorusGrid::new(2, 256).unwrap();
        let phi0 = pin_phi0(g, 0.3, 0.02);
        let obs = ObstacleSet::new(
            vec![],
            vec![Ball::new([0.5, 0.5, 0.0], 0.12).unwrap()],
            0.12,
            0.3,
        )
        .unwrap();
        let b = Barrier::new([0.5, 0.5, 0.0], 0.12, 0.02, BarrierKind::Super, 2, &obs).unwrap();
        match initial_ordering_check(&phi0, &b) {
            Err(BarrierError::OrderingViolation { kind: BarrierKind::Super, margin, .. }) => {
                assert!(margin < -1.0, "margin {margin}");
            }
            other => panic!("expected OrderingViolation, got {other:?}"),
        }
    }

    #[test]
    fn monitor_at_time_zero_agrees_with_the_ordering_check() {
        let g = TorusGrid::new(2, 256).unwrap();
        let phi0 = pin_phi0(g, 0.3, 0.02);
        let b = sub_barrier(0.12, 0.02);
        let mut monitor =
            ComparisonMonitor::new(&[b], g, ComparisonMonitor::default_tolerance(g)).unwrap();
        monitor.check(&phi0, 0.0).unwrap();
        let ordering = initial_ordering_check(&phi0, &b).unwrap();
        assert_eq!(monitor.worst_margins()[0].1, ordering.min_margin);
    }

    #[test]
    fn sign_involution_maps_sub_margins_to_super_margins_exactly() {
        let g = TorusGrid::new(2, 128).unwrap();
        let phi = pin_phi0(g, 0.3, 0.03);
        let neg =
            ScalarField::from_values(g, phi.values().iter().map(|&v| -v).collect()).unwrap();
        let sub = sub_barrier(0.12, 0.03);
        let obs = ObstacleSet::new(
            vec![],
            vec![Ball::new([0.5, 0.5, 0.0], 0.12).unwrap()],
            0.12,
            0.3,
        )
        .unwrap();
        let sup = Barrier::new([0.5, 0.5, 0.0], 0.12, 0.03, BarrierKind::Super, 2, &obs).unwrap();
        let a = initial_ordering_check(&phi, &sub).unwrap();
        let b = initial_ordering_check(&neg, &sup).unwrap();
        assert_eq!(a.min_margin, b.min_margin);
        assert_eq!(a.argmin_node, b.argmin_node);
    }

    /// Monitor wired into a run as its sink.
    struct MonitorSink {
        monitor: ComparisonMonitor,
    }

    impl RecordSink for MonitorSink {
        type Error = BarrierError;
        fn record(&mut self, state: &SimState, _: &SimParams) -> Result<Signal, Self::Error> {
            self.monitor.check(&state.phi, state.t)?;
            Ok(Signal::Continue)
        }
    }

    #[test]
    fn unforced_shrinking_circle_crosses_the_barrier_on_schedule() {
        // Negative control: with g = 0 the barrier is not a lower bound,
        // and the circle R(t) = sqrt(0.09 - 2t) crosses r0 = 0.08 at
        // t = 0.0418.  The monitor must fire, and fire near that time.
        let g = TorusGrid::new(2, 128).unwrap();
        let surface = InitialSurface::new(Csg::Ball(Ball::new([0.5, 0.5, 0.0], 0.3).unwrap()));
        let no_obstacles = ObstacleSet::empty(1.0, 1.0);
        let fake = obstacle_with_plus_ball(0.5, 0.5, 0.08);
        let barrier = Barrier::new([0.5, 0.5, 0.0], 0.08, 0.04, BarrierKind::Sub, 2, &fake).unwrap();
        let monitor =
            ComparisonMonitor::new(&[barrier], g, ComparisonMonitor::default_tolerance(g)).unwrap();
        let params = SimParams {
            d: 2,
            n: 128,
            eps: 0.04,
            dt: 0.0,
            t_end: 0.055,
            cfl_safety: 0.9,
            r0: 1.0,
            r1: 1.0,
            min_layer_cells: 4.0,
        }
        .with_auto_dt();
        let options = RunOptions { delta1: 0.0, record_every: 20 };
        let mut sink = MonitorSink { monitor };
        match run(&surface, &no_obstacles, params, options, &mut sink) {
            Err(RunError::Sink(BarrierError::ComparisonViolation { t, .. })) => {
                assert!(
                    (0.033..=0.048).contains(&t),
                    "crossing detected at t = {t}, expected near 0.042"
                );
            }
            other => panic!(
                "expected ComparisonViolation, got {:?}",
                other.map(|tr| tr.records.len())
            ),
        }
    }
}
