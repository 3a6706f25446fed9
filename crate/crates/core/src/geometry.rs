//! Obstacle sets, CSG initial regions, signed distances, the static
//! forcing field, and the tanh initial data built from them.
//!
//! Conventions: signed distances are positive *inside* a region.  An
//! obstacle set carries two ball families: `plus` balls must stay inside
//! the phi = +1 phase, `minus` balls inside the phi = -1 phase.  The
//! forcing field is +d/r0 on and near plus balls, -d/r0 on and near minus
//! balls, and exactly zero once both obstacle distances exceed twice the
//! band width sqrt(eps).

use crate::grid::{torus_distance, Point, ScalarField, TorusGrid};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("ball radius {0} must lie in (0, 1/2) so the ball fits in one periodic cell")]
    BadRadius(f64),
    #[error("ball radius {radius} spans only {cells:.1} cells at n = {n}; need at least 8")]
    UnresolvedBall { radius: f64, n: usize, cells: f64 },
    #[error("eps = {eps} outside (0, r0/4) with r0 = {r0}")]
    BadEps { eps: f64, r0: f64 },
    #[error("forcing bands too wide: 2*sqrt(eps) = {band} exceeds r1/3 = {limit}")]
    BandsOverlap { band: f64, limit: f64 },
    #[error("obstacle ball radius {radius} below the set's interior-ball scale r0 = {r0}")]
    RadiusBelowScale { radius: f64, r0: f64 },
    #[error("scale parameter {name} = {value} must be positive")]
    BadScale { name: &'static str, value: f64 },
}

/// Open ball on the torus, measured in the wrap-around metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius < 0.5) {
            return Err(GeometryError::BadRadius(radius));
        }
        Ok(Self { center, radius })
    }

    /// radius - dist(x, center): positive inside, negative outside.
    pub fn signed_distance(&self, x: Point, d: usize) -> f64 {
        self.radius - torus_distance(x, self.center, d)
    }

    /// Distance from x to the closed ball (zero on and inside it).
    pub fn exterior_distance(&self, x: Point, d: usize) -> f64 {
        (torus_distance(x, self.center, d) - self.radius).max(0.0)
    }
}

/// Region built from balls by union / intersection / complement.
///
/// The signed distance composes by max / min / negation.  That is exact
/// for a single ball and for disjoint unions, and only approximate near
/// seams where primitives meet; `validate_assumptions` keeps seams away
/// from everything that depends on exact distances.
#[derive(Debug, Clone, PartialEq)]
pub enum Csg {
    Ball(Ball),
    Union(Vec<Csg>),
    Intersection(Vec<Csg>),
    Complement(Box<Csg>),
}

impl Csg {
    pub fn signed_distance(&self, x: Point, d: usize) -> f64 {
        match self {
            Csg::Ball(b) => b.signed_distance(x, d),
            Csg::Union(parts) => parts
                .iter()
                .map(|p| p.signed_distance(x, d))
                .fold(f64::NEG_INFINITY, f64::max),
            Csg::Intersection(parts) => parts
                .iter()
                .map(|p| p.signed_distance(x, d))
                .fold(f64::INFINITY, f64::min),
            Csg::Complement(inner) => -inner.signed_distance(x, d),
        }
    }

    pub fn primitive_balls(&self) -> Vec<&Ball> {
        let mut out = Vec::new();
        self.collect_balls(&mut out);
        out
    }

    fn collect_balls<'a>(&'a self, out: &mut Vec<&'a Ball>) {
        match self {
            Csg::Ball(b) => out.push(b),
            Csg::Union(parts) | Csg::Intersection(parts) => {
                for p in parts {
                    p.collect_balls(out);
                }
            }
            Csg::Complement(inner) => inner.collect_balls(out),
        }
    }
}

/// The open set U0 whose boundary is the initial interface; phi starts
/// near +1 inside it and near -1 outside.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSurface {
    pub region: Csg,
}

impl InitialSurface {
    pub fn new(region: Csg) -> Self {
        Self { region }
    }
}

/// Obstacle balls with their interior-ball scale r0 and the required
/// separation r1 between the plus and minus families.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSet {
    pub plus: Vec<Ball>,
    pub minus: Vec<Ball>,
    pub r0: f64,
    pub r1: f64,
}

impl ObstacleSet {
    pub fn new(
        plus: Vec<Ball>,
        minus: Vec<Ball>,
        r0: f64,
        r1: f64,
    ) -> Result<Self, GeometryError> {
        if !(r0 > 0.0) {
            return Err(GeometryError::BadScale { name: "r0", value: r0 });
        }
        if !(r1 > 0.0) {
            return Err(GeometryError::BadScale { name: "r1", value: r1 });
        }
        for b in plus.iter().chain(minus.iter()) {
            if b.radius < r0 {
                return Err(GeometryError::RadiusBelowScale { radius: b.radius, r0 });
            }
        }
        Ok(Self { plus, minus, r0, r1 })
    }

    pub fn empty(r0: f64, r1: f64) -> Self {
        Self { plus: Vec::new(), minus: Vec::new(), r0, r1 }
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty() && self.minus.is_empty()
    }

    /// Distance to the plus family (infinite when there are no plus balls).
    pub fn dist_plus(&self, x: Point, d: usize) -> f64 {
        Self::dist_to_family(&self.plus, x, d)
    }

    pub fn dist_minus(&self, x: Point, d: usize) -> f64 {
        Self::dist_to_family(&self.minus, x, d)
    }

    fn dist_to_family(balls: &[Ball], x: Point, d: usize) -> f64 {
        balls
            .iter()
            .map(|b| b.exterior_distance(x, d))
            .fold(f64::INFINITY, f64::min)
    }

    /// Surface-to-surface separation between the closest plus/minus pair.
    /// `None` when either family is empty.
    pub fn min_pair_separation(&self, d: usize) -> Option<f64> {
        if self.plus.is_empty() || self.minus.is_empty() {
            return None;
        }
        let mut min = f64::INFINITY;
        for p in &self.plus {
            for m in &self.minus {
                let sep = torus_distance(p.center, m.center, d) - p.radius - m.radius;
                min = min.min(sep);
            }
        }
        Some(min)
    }
}

/// Quintic smoothstep S(t) = 1 - (6t^5 - 15t^4 + 10t^3): S(0) = 1,
/// S(1) = 0, monotone, C^2 at both ends, max |S'| = 15/8 at t = 1/2.
pub fn quintic_smoothstep(t: f64) -> f64 {
    1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Sample the CSG signed distance of `surface` at every grid node.
pub fn signed_distance(
    surface: &InitialSurface,
    grid: TorusGrid,
) -> Result<ScalarField, GeometryError> {
    for b in surface.region.primitive_balls() {
        let cells = b.radius * grid.n() as f64;
        if cells < 8.0 {
            return Err(GeometryError::UnresolvedBall { radius: b.radius, n: grid.n(), cells });
        }
    }
    let region = &surface.region;
    let d = grid.d();
    Ok(ScalarField::from_fn(grid, |x| region.signed_distance(x, d)))
}

/// phi0 = tanh(clamp(sdist)/eps), where the clamp maps the signed distance
/// smoothly into [-5 eps, 5 eps] via s -> 5 eps tanh(s / (5 eps)).  The
/// clamp keeps the profile's gradient and curvature bounded independently
/// of how rough the distance field is far from the interface, at the cost
/// of perturbing phi0 by less than 2e-4 where |sdist| >= 5 eps.
///
/// `r0` is the obstacle scale: eps must stay below r0/4 or the diffuse
/// layer is too thick to fit between an obstacle and the interface.
pub fn smooth_initial_profile(
    sdist: &ScalarField,
    eps: f64,
    r0: f64,
) -> Result<ScalarField, GeometryError> {
    if !(eps > 0.0 && eps < r0 / 4.0) {
        return Err(GeometryError::BadEps { eps, r0 });
    }
    let cap = 5.0 * eps;
    Ok(ScalarField::from_values(
        sdist.grid(),
        sdist
            .values()
            .iter()
            .map(|&s| ((cap * (s / cap).tanh()) / eps).tanh())
            .collect(),
    )
    .expect("same node count as input"))
}

/// The static forcing field: +d/r0 where dist(x, plus balls) <= sqrt(eps),
/// -d/r0 where dist(x, minus balls) <= sqrt(eps), smoothstep decay in the
/// annulus out to 2 sqrt(eps), and exactly zero beyond both annuli.
pub fn build_forcing(
    obstacles: &ObstacleSet,
    eps: f64,
    grid: TorusGrid,
) -> Result<ScalarField, GeometryError> {
    if !(eps > 0.0) {
        return Err(GeometryError::BadScale { name: "eps", value: eps });
    }
    let band = 2.0 * eps.sqrt();
    if band > obstacles.r1 / 3.0 {
        return Err(GeometryError::BandsOverlap { band, limit: obstacles.r1 / 3.0 });
    }
    let amp = grid.d() as f64 / obstacles.r0;
    let root = eps.sqrt();
    let d = grid.d();
    let profile = move |dist: f64| -> f64 {
        if dist <= root {
            1.0
        } else if dist >= band {
            0.0
        } else {
            quintic_smoothstep((dist - root) / root)
        }
    };
    Ok(ScalarField::from_fn(grid, move |x| {
        let mut g = 0.0;
        let dp = obstacles.dist_plus(x, d);
        if dp < band {
            g += amp * profile(dp);
        }
        let dm = obstacles.dist_minus(x, d);
        if dm < band {
            g -= amp * profile(dm);
        }
        g
    }))
}

/// One named admissibility check with an optional violating node.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub witness: Option<(usize, Point)>,
    pub detail: String,
}

/// Outcome of `validate_assumptions`: per-check pass/fail, never an abort.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl std::fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{}: {} ({})",
                c.name,
                if c.passed { "ok" } else { "FAILED" },
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Check the scenario's standing geometric assumptions:
/// (a) every plus ball sits inside U0 with clearance > delta1,
/// (b) every minus ball sits outside U0 with clearance > delta1,
/// (c) the plus and minus families are separated by more than r1.
///
/// (a) and (b) are evaluated at grid nodes; the first offending node is
/// returned as a witness.
pub fn validate_assumptions(
    surface: &InitialSurface,
    obstacles: &ObstacleSet,
    delta1: f64,
    grid: TorusGrid,
) -> AssumptionReport {
    let d = grid.d();
    let mut checks = Vec::new();

    let mut scan = |name: &'static str, inside_plus: bool| {
        let mut witness = None;
        let mut worst = f64::INFINITY;
        for idx in 0..grid.num_nodes() {
            let x = grid.position(idx);
            let on_obstacle = if inside_plus {
                obstacles.dist_plus(x, d) == 0.0
            } else {
                obstacles.dist_minus(x, d) == 0.0
            };
            if !on_obstacle {
                continue;
            }
            let s = surface.region.signed_distance(x, d);
            // clearance of the node from the interface, on the correct side
            let clearance = if inside_plus { s } else { -s };
            if clearance < worst {
                worst = clearance;
                if clearance <= delta1 {
                    witness = Some((idx, x));
                }
            }
        }
        let passed = witness.is_none();
        let detail = if worst == f64::INFINITY {
            "no obstacle nodes".to_string()
        } else {
            format!("min clearance {worst:.6}, required > {delta1}")
        };
        checks.push(AssumptionCheck { name, passed, witness, detail });
    };

    scan("plus_obstacles_inside_initial_set", true);
    scan("minus_obstacles_outside_initial_set", false);

    let (passed, detail) = match obstacles.min_pair_separation(d) {
        None => (true, "fewer than two obstacle families".to_string()),
        Some(sep) => (
            sep > obstacles.r1,
            format!("min plus/minus separation {sep:.6}, required > {}", obstacles.r1),
        ),
    };
    checks.push(AssumptionCheck {
        name: "obstacle_separation",
        passed,
        witness: None,
        detail,
    });

    AssumptionReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ball(cx: f64, cy: f64, r: f64) -> Ball {
        Ball::new([cx, cy, 0.0], r).unwrap()
    }

    #[test]
    fn ball_rejects_degenerate_radii() {
        assert_eq!(
            Ball::new([0.5, 0.5, 0.0], 0.5).unwrap_err(),
            GeometryError::BadRadius(0.5)
        );
        assert!(Ball::new([0.5, 0.5, 0.0], 0.0).is_err());
        assert!(Ball::new([0.5, 0.5, 0.0], -0.1).is_err());
    }

    #[test]
    fn ball_signed_distance_at_center_is_radius() {
        let b = ball(0.3, 0.7, 0.2);
        assert_eq!(b.signed_distance([0.3, 0.7, 0.0], 2), 0.2);
    }

    #[test]
    fn ball_signed_distance_outside_is_negative() {
        // |x - c| = 0.3, radius 0.2: signed distance 0.2 - 0.3 = -0.1
        let b = ball(0.5, 0.5, 0.2);
        assert_relative_eq!(
            b.signed_distance([0.5, 0.8, 0.0], 2),
            -0.1,
            epsilon = 1e-14
        );
    }

    #[test]
    fn ball_signed_distance_wraps_across_the_seam() {
        let b = ball(0.05, 0.5, 0.2);
        assert_relative_eq!(b.signed_distance([0.95, 0.5, 0.0], 2), 0.1, epsilon = 1e-14);
    }

    #[test]
    fn union_reports_the_inner_value_for_disjoint_balls() {
        let a = ball(0.25, 0.5, 0.1);
        let b = ball(0.75, 0.5, 0.1);
        let u = Csg::Union(vec![Csg::Ball(a), Csg::Ball(b)]);
        // x inside ball a: union max picks a's (positive) value
        let x = [0.25, 0.55, 0.0];
        assert_eq!(u.signed_distance(x, 2), a.signed_distance(x, 2));
        // x outside both: max of two negatives = distance to the nearer
        let y = [0.5, 0.5, 0.0];
        assert_relative_eq!(u.signed_distance(y, 2), -0.15, epsilon = 1e-14);
    }

    #[test]
    fn complement_negates_and_intersection_takes_min() {
        let a = ball(0.5, 0.5, 0.3);
        let b = ball(0.6, 0.5, 0.3);
        let x = [0.5, 0.6, 0.0];
        let comp = Csg::Complement(Box::new(Csg::Ball(a)));
        assert_eq!(comp.signed_distance(x, 2), -a.signed_distance(x, 2));
        let inter = Csg::Intersection(vec![Csg::Ball(a), Csg::Ball(b)]);
        assert_eq!(
            inter.signed_distance(x, 2),
            a.signed_distance(x, 2).min(b.signed_distance(x, 2))
        );
    }

    #[test]
    fn sampled_single_ball_matches_the_formula_at_every_node() {
        let g = TorusGrid::new(2, 32).unwrap();
        let b = ball(0.40625, 0.5, 0.25);
        let field = signed_distance(&InitialSurface::new(Csg::Ball(b)), g).unwrap();
        for idx in 0..g.num_nodes() {
            let x = g.position(idx);
            assert_eq!(
                field.values()[idx],
                b.radius - torus_distance(x, b.center, 2)
            );
        }
    }

    #[test]
    fn signed_distance_rejects_unresolved_balls() {
        let g = TorusGrid::new(2, 16).unwrap();
        let s = InitialSurface::new(Csg::Ball(ball(0.5, 0.5, 0.3)));
        match signed_distance(&s, g) {
            Err(GeometryError::UnresolvedBall { n: 16, .. }) => {}
            other => panic!("expected UnresolvedBall, got {other:?}"),
        }
    }

    #[test]
    fn profile_is_zero_on_the_interface_and_saturates_inside_tanh5() {
        let g = TorusGrid::new(2, 64).unwrap();
        let s = InitialSurface::new(Csg::Ball(ball(0.5, 0.5, 0.25)));
        let sd = signed_distance(&s, g).unwrap();
        let phi = smooth_initial_profile(&sd, 0.02, 1.0).unwrap();
        let cap = 5.0f64.tanh();
        let mut saw_zero = false;
        for idx in 0..g.num_nodes() {
            let v = phi.values()[idx];
            assert!(v.abs() <= cap, "profile left [-tanh 5, tanh 5] at node {idx}");
            if sd.values()[idx] == 0.0 {
                assert_eq!(v, 0.0);
                saw_zero = true;
            }
        }
        // node (0.25, 0.5) sits exactly on the sphere
        assert!(saw_zero);
    }

    #[test]
    fn profile_interior_value_matches_the_clamped_tanh() {
        // sdist = eps: the raw profile would give tanh(1) = 0.7615942; the
        // smooth clamp gives tanh(5 tanh(1/5)) instead.
        let g = TorusGrid::new(2, 64).unwrap();
        let sd = ScalarField::constant(g, 0.1);
        let phi = smooth_initial_profile(&sd, 0.1, 1.0).unwrap();
        assert_relative_eq!(phi.values()[0], 0.75602734611230493, max_relative = 1e-13);
        assert!((phi.values()[0] - 0.7615942f64).abs() < 6e-3);
    }

    #[test]
    fn profile_rejects_eps_out_of_range() {
        let g = TorusGrid::new(2, 64).unwrap();
        let sd = ScalarField::zeros(g);
        assert!(matches!(
            smooth_initial_profile(&sd, 0.0, 1.0),
            Err(GeometryError::BadEps { .. })
        ));
        // eps must stay below r0/4
        assert!(matches!(
            smooth_initial_profile(&sd, 0.05, 0.2),
            Err(GeometryError::BadEps { .. })
        ));
        assert!(smooth_initial_profile(&sd, 0.0499, 0.2).is_ok());
    }

    #[test]
    fn smoothstep_hits_exact_values_at_the_marks() {
        assert_eq!(quintic_smoothstep(0.0), 1.0);
        assert_eq!(quintic_smoothstep(0.5), 0.5);
        assert_eq!(quintic_smoothstep(1.0), 0.0);
    }

    /// Dyadic forcing fixture: every quantity is exactly representable, so
    /// the plateau, annulus midpoint, and far field admit exact asserts.
    /// eps = 0.0625 (sqrt 0.25), ball radius 0.125, amp = 2/0.125 = 16.
    fn dyadic_forcing() -> (TorusGrid, ScalarField) {
        let g = TorusGrid::new(2, 64).unwrap();
        let obs = ObstacleSet::new(vec![ball(0.5, 0.5, 0.125)], vec![], 0.125, 1.6).unwrap();
        let f = build_forcing(&obs, 0.0625, g).unwrap();
        (g, f)
    }

    #[test]
    fn forcing_plateau_value_is_exact_at_obstacle_nodes() {
        let (g, f) = dyadic_forcing();
        assert_eq!(f.values()[g.index(32, 32, 0)], 16.0);
        // dist((0.5, 0.625), ball) = 0, still on the plateau
        assert_eq!(f.values()[g.index(32, 40, 0)], 16.0);
        // dist = 0.25 = sqrt(eps): last plateau node
        assert_eq!(f.values()[g.index(32, 56, 0)], 16.0);
    }

    #[test]
    fn forcing_annulus_midpoint_is_half_amplitude() {
        let (g, f) = dyadic_forcing();
        // node (0, 0.5): dist to center 0.5, to ball 0.375 = 1.5 sqrt(eps)
        assert_eq!(f.values()[g.index(0, 32, 0)], 8.0);
    }

    #[test]
    fn forcing_vanishes_exactly_beyond_both_bands() {
        let (g, f) = dyadic_forcing();
        let obs = ObstacleSet::new(vec![ball(0.5, 0.5, 0.125)], vec![], 0.125, 1.6).unwrap();
        let mut far_nodes = 0;
        for idx in 0..g.num_nodes() {
            let x = g.position(idx);
            if obs.dist_plus(x, 2) >= 0.5 {
                assert_eq!(f.values()[idx], 0.0, "node {idx} {x:?}");
                far_nodes += 1;
            }
        }
        assert!(far_nodes > 0);
    }

    #[test]
    fn forcing_minus_obstacles_pull_negative() {
        let g = TorusGrid::new(2, 64).unwrap();
        let obs = ObstacleSet::new(vec![], vec![ball(0.25, 0.25, 0.125)], 0.125, 1.6).unwrap();
        let f = build_forcing(&obs, 0.0625, g).unwrap();
        assert_eq!(f.values()[g.index(16, 16, 0)], -16.0);
    }

    #[test]
    fn forcing_rejects_bands_wider_than_the_separation_allows() {
        let g = TorusGrid::new(2, 64).unwrap();
        let obs = ObstacleSet::new(vec![ball(0.5, 0.5, 0.125)], vec![], 0.125, 1.0).unwrap();
        assert!(matches!(
            build_forcing(&obs, 0.0625, g),
            Err(GeometryError::BandsOverlap { .. })
        ));
    }

    #[test]
    fn forcing_gradient_respects_the_band_derivative_bound() {
        let (g, f) = dyadic_forcing();
        let amp = 16.0;
        let root = 0.25;
        let bound = amp * 1.875 / root * 1.1 + 10.0 * g.h();
        assert!(f.gradient().max_norm() <= bound);
    }

    #[test]
    fn forcing_magnitude_never_exceeds_the_amplitude() {
        let (_, f) = dyadic_forcing();
        let (lo, hi) = f.min_max();
        assert!(lo >= 0.0 && hi <= 16.0);
    }

    fn pin_scenario() -> (TorusGrid, InitialSurface, ObstacleSet) {
        let g = TorusGrid::new(2, 64).unwrap();
        let surface = InitialSurface::new(Csg::Ball(ball(0.5, 0.5, 0.3)));
        let obs = ObstacleSet::new(vec![ball(0.5, 0.5, 0.15)], vec![], 0.15, 0.2).unwrap();
        (g, surface, obs)
    }

    #[test]
    fn assumptions_pass_for_a_well_separated_pin() {
        let (g, surface, obs) = pin_scenario();
        // plus ball clearance to the interface is 0.3 - 0.15 = 0.15
        let report = validate_assumptions(&surface, &obs, 0.05, g);
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn assumptions_catch_a_plus_obstacle_poking_out() {
        let g = TorusGrid::new(2, 64).unwrap();
        let surface = InitialSurface::new(Csg::Ball(ball(0.5, 0.5, 0.2)));
        let obs = ObstacleSet::new(vec![ball(0.8, 0.5, 0.1)], vec![], 0.1, 0.2).unwrap();
        let report = validate_assumptions(&surface, &obs, 0.05, g);
        let failed: Vec<_> = report.failures().map(|c| c.name).collect();
        assert_eq!(failed, vec!["plus_obstacles_inside_initial_set"]);
        assert!(report.checks[0].witness.is_some());
    }

    #[test]
    fn assumptions_catch_obstacles_closer_than_the_separation_scale() {
        let g = TorusGrid::new(2, 64).unwrap();
        let surface = InitialSurface::new(Csg::Ball(ball(0.2, 0.5, 0.12)));
        // surface-to-surface separation 0.1 = r1/2
        let obs = ObstacleSet::new(
            vec![ball(0.2, 0.5, 0.05)],
            vec![ball(0.4, 0.5, 0.05)],
            0.05,
            0.2,
        )
        .unwrap();
        let report = validate_assumptions(&surface, &obs, 0.01, g);
        assert!(!report.all_passed());
        let sep = report.checks.iter().find(|c| c.name == "obstacle_separation").unwrap();
        assert!(!sep.passed, "{}", sep.detail);
    }

    #[test]
    fn obstacle_set_rejects_balls_below_the_interior_scale() {
        assert!(matches!(
            ObstacleSet::new(vec![ball(0.5, 0.5, 0.05)], vec![], 0.1, 0.2),
            Err(GeometryError::RadiusBelowScale { .. })
        ));
    }

    proptest! {
        #[test]
        fn smoothstep_is_monotone_decreasing(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quintic_smoothstep(lo) + 1e-12 >= quintic_smoothstep(hi));
        }

        #[test]
        fn profile_stays_strictly_inside_the_wells(s in -0.8..0.8f64) {
            let g = TorusGrid::new(2, 16).unwrap();
            let sd = ScalarField::constant(g, s);
            let phi = smooth_initial_profile(&sd, 0.02, 1.0).unwrap();
            prop_assert!(phi.values()[0].abs() <= 5.0f64.tanh());
        }
    }
}
