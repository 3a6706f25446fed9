//! Scenario configuration: TOML schema, validation, and the small CSG
//! expression grammar used for obstacle balls and initial surfaces.
//!
//! Validation collects *every* violated rule before reporting, so a config
//! with three mistakes is fixed in one edit cycle, not three.

use std::path::Path;

use acmf_core::geometry::{Ball, Csg, InitialSurface, ObstacleSet};
use acmf_core::grid::Point;
use acmf_core::solver::{RunOptions, SimParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
}

/// One scenario: grid, physics, geometry, diagnostics, and output settings.
///
/// Serialization is lossless — a config written back out parses to an equal
/// value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub grid: GridSection,
    pub physics: PhysicsSection,
    #[serde(default)]
    pub obstacles: ObstaclesSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub d: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub eps: f64,
    /// Smallest obstacle ball radius; also sets the forcing amplitude d/R0.
    pub r0: f64,
    /// Minimum separation scale between obstacle balls.
    pub r1: f64,
    /// Forcing slack retained in the energy inequality; 0 disables it.
    #[serde(default)]
    pub delta1: f64,
    /// Explicit time step; omit to take 90% of the stability limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_override: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    /// Required interface resolution eps/h.
    #[serde(default = "default_min_layer_cells")]
    pub min_layer_cells: f64,
}

fn default_cfl_safety() -> f64 {
    0.9
}

fn default_min_layer_cells() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ObstaclesSection {
    /// Balls the phase must engulf (φ → 1 inside); `ball(cx,cy,r)` each.
    #[serde(default)]
    pub plus: Vec<String>,
    /// Balls the phase must avoid (φ → −1 inside).
    #[serde(default)]
    pub minus: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// CSG expression for the initial enclosed region, e.g.
    /// `union(ball(0.3,0.5,0.14), ball(0.7,0.5,0.14))`.
    pub surface: String,
    /// Seed for perturbation experiments; unused by the deterministic runs.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Track explicit sub/super barrier margins each record.
    #[serde(default = "default_true")]
    pub barriers: bool,
    /// Evaluate the weighted-kernel monotonicity quantity.
    #[serde(default)]
    pub monotonicity: bool,
    /// Probe points y; empty means the domain center.
    #[serde(default)]
    pub monotonicity_probes: Vec<Vec<f64>>,
    /// Kernel reference time s (must exceed every record time).
    #[serde(default)]
    pub monotonicity_s: f64,
    /// Evaluate the integral-identity residual on a bump test function.
    #[serde(default)]
    pub brakke: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brakke_center: Option<Vec<f64>>,
    #[serde(default = "default_brakke_radius")]
    pub brakke_radius: f64,
    /// Time window [t1, t2] for the residual; omit for the whole run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brakke_window: Option<[f64; 2]>,
    #[serde(default = "default_tol_gronwall")]
    pub tol_gronwall: f64,
    #[serde(default = "default_tol_dissipation")]
    pub tol_dissipation: f64,
    #[serde(default = "default_tol_monotonicity")]
    pub tol_monotonicity: f64,
    #[serde(default = "default_tol_avoid")]
    pub tol_avoid: f64,
    /// Comparison margin tolerance as a multiple of h².
    #[serde(default = "default_margin_factor")]
    pub margin_factor: f64,
    /// Stop when |ΔE|/Δt drops below this; 0 runs to t_end.
    #[serde(default)]
    pub steady_stop: f64,
}

fn default_true() -> bool {
    true
}

fn default_brakke_radius() -> f64 {
    0.35
}

fn default_tol_gronwall() -> f64 {
    1e-3
}

fn default_tol_dissipation() -> f64 {
    1e-2
}

fn default_tol_monotonicity() -> f64 {
    1e-3
}

fn default_tol_avoid() -> f64 {
    1e-3
}

fn default_margin_factor() -> f64 {
    10.0
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        toml::from_str("").expect("empty diagnostics section has defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_output_dir")]
    pub dir: String,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_true")]
    pub snapshots: bool,
    #[serde(default = "default_true")]
    pub meshes: bool,
}

fn default_output_dir() -> String {
    "out".to_string()
}

fn default_record_every() -> usize {
    100
}

impl Default for OutputSection {
    fn default() -> Self {
        toml::from_str("").expect("empty output section has defaults")
    }
}

/// Geometry and solver inputs resolved from a valid config.
#[derive(Debug, Clone)]
pub struct ValidatedScenario {
    pub params: SimParams,
    pub options: RunOptions,
    pub surface: InitialSurface,
    pub obstacles: ObstacleSet,
}

/// Reads, parses, and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let config: ScenarioConfig = toml::from_str(&text)?;
    config.validate().map(|_| config)
}

impl ScenarioConfig {
    pub fn to_params(&self) -> SimParams {
        let params = SimParams {
            d: self.grid.d,
            n: self.grid.n,
            eps: self.physics.eps,
            dt: self.physics.dt_override.unwrap_or(0.0),
            t_end: self.physics.t_end,
            cfl_safety: self.physics.cfl_safety,
            r0: self.physics.r0,
            r1: self.physics.r1,
            min_layer_cells: self.physics.min_layer_cells,
        };
        if self.physics.dt_override.is_some() {
            params
        } else {
            params.with_auto_dt()
        }
    }

    /// Checks every rule and reports all violations together.
    pub fn validate(&self) -> Result<ValidatedScenario, ConfigError> {
        let mut errors = Vec::new();
        let d = self.grid.d;
        let n = self.grid.n;
        if d != 2 && d != 3 {
            errors.push(format!("grid.d must be 2 or 3, got {d}"));
        }
        if n < 16 {
            errors.push(format!("grid.n must be at least 16, got {n}"));
        }
        let h = 1.0 / n.max(1) as f64;
        let eps = self.physics.eps;
        if !(eps > 0.0) {
            errors.push(format!("physics.eps must be positive, got {eps}"));
        } else if eps < self.physics.min_layer_cells * h {
            errors.push(format!(
                "interface too thin for the grid: the rule eps >= {} h requires eps >= {:.6} at n = {n}, got eps = {eps}",
                self.physics.min_layer_cells,
                self.physics.min_layer_cells * h,
            ));
        }
        for (key, value) in [
            ("physics.r0", self.physics.r0),
            ("physics.r1", self.physics.r1),
            ("physics.t_end", self.physics.t_end),
        ] {
            if !(value > 0.0) {
                errors.push(format!("{key} must be positive, got {value}"));
            }
        }
        if self.physics.delta1 < 0.0 {
            errors.push(format!(
                "physics.delta1 must be nonnegative, got {}",
                self.physics.delta1
            ));
        }
        if let Some(dt) = self.physics.dt_override {
            if !(dt > 0.0) {
                errors.push(format!("physics.dt_override must be positive, got {dt}"));
            }
        }
        if !(self.physics.cfl_safety > 0.0 && self.physics.cfl_safety <= 1.0) {
            errors.push(format!(
                "physics.cfl_safety must lie in (0, 1], got {}",
                self.physics.cfl_safety
            ));
        }
        let has_obstacles =
            !self.obstacles.plus.is_empty() || !self.obstacles.minus.is_empty();
        if has_obstacles && eps > 0.0 && 2.0 * eps.sqrt() > self.physics.r1 / 3.0 {
            errors.push(format!(
                "forcing band too wide for the obstacle separation: the standing assumption 2*sqrt(eps) <= R1/3 fails (2*sqrt({eps}) = {:.6} > {:.6})",
                2.0 * eps.sqrt(),
                self.physics.r1 / 3.0,
            ));
        }
        if eps > 0.0 && eps >= self.physics.r0 / 4.0 && self.physics.r0 > 0.0 {
            errors.push(format!(
                "interface too thick for the obstacle scale: eps must be below r0/4 = {:.6}, got {eps}",
                self.physics.r0 / 4.0,
            ));
        }

        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for (family, specs, out) in [
            ("plus", &self.obstacles.plus, &mut plus),
            ("minus", &self.obstacles.minus, &mut minus),
        ] {
            for spec in specs {
                match parse_ball(spec, d) {
                    Ok(ball) => out.push(ball),
                    Err(e) => errors.push(format!("obstacles.{family}: {e}")),
                }
            }
        }
        let surface = match parse_csg(&self.initial.surface, d) {
            Ok(region) => Some(InitialSurface::new(region)),
            Err(e) => {
                errors.push(format!("initial.surface: {e}"));
                None
            }
        };
        let obstacles = match ObstacleSet::new(plus, minus, self.physics.r0, self.physics.r1)
        {
            Ok(set) => Some(set),
            Err(e) => {
                errors.push(format!("obstacles: {e}"));
                None
            }
        };

        if self.output.record_every == 0 {
            errors.push("output.record_every must be at least 1".to_string());
        }
        for probe in &self.diagnostics.monotonicity_probes {
            if probe.len() != d {
                errors.push(format!(
                    "diagnostics.monotonicity_probes entries need {d} coordinates, got {:?}",
                    probe
                ));
            }
        }
        if self.diagnostics.monotonicity && !(self.diagnostics.monotonicity_s > 0.0) {
            errors.push(
                "diagnostics.monotonicity_s must be positive when monotonicity is enabled"
                    .to_string(),
            );
        }
        if let Some(c) = &self.diagnostics.brakke_center {
            if c.len() != d {
                errors.push(format!(
                    "diagnostics.brakke_center needs {d} coordinates, got {:?}",
                    c
                ));
            }
        }
        if let Some([t1, t2]) = self.diagnostics.brakke_window {
            if !(t1 < t2) {
                errors.push(format!(
                    "diagnostics.brakke_window must be an increasing pair, got [{t1}, {t2}]"
                ));
            }
        }
        for (key, value) in [
            ("tol_gronwall", self.diagnostics.tol_gronwall),
            ("tol_dissipation", self.diagnostics.tol_dissipation),
            ("tol_monotonicity", self.diagnostics.tol_monotonicity),
            ("tol_avoid", self.diagnostics.tol_avoid),
            ("margin_factor", self.diagnostics.margin_factor),
        ] {
            if !(value > 0.0) {
                errors.push(format!("diagnostics.{key} must be positive, got {value}"));
            }
        }
        if self.diagnostics.steady_stop < 0.0 {
            errors.push(format!(
                "diagnostics.steady_stop must be nonnegative, got {}",
                self.diagnostics.steady_stop
            ));
        }

        if !errors.is_empty() {
            return Err(ConfigError::Validation(errors));
        }
        let params = self.to_params();
        // Full solver-side validation (dt limit, layer resolution) runs at
        // launch; here we only need the pieces resolvable without a run.
        Ok(ValidatedScenario {
            params,
            options: RunOptions {
                delta1: self.physics.delta1,
                record_every: self.output.record_every,
            },
            surface: surface.expect("surface parsed"),
            obstacles: obstacles.expect("obstacles constructed"),
        })
    }

    /// Probe points for the monotonicity diagnostic, defaulting to the
    /// domain center.
    pub fn monotonicity_probes(&self) -> Vec<Point> {
        if self.diagnostics.monotonicity_probes.is_empty() {
            return vec![[0.5, 0.5, if self.grid.d == 3 { 0.5 } else { 0.0 }]];
        }
        self.diagnostics
            .monotonicity_probes
            .iter()
            .map(|p| point_from(p))
            .collect()
    }

    pub fn brakke_center(&self) -> Point {
        match &self.diagnostics.brakke_center {
            Some(c) => point_from(c),
            None => [0.5, 0.5, if self.grid.d == 3 { 0.5 } else { 0.0 }],
        }
    }
}

fn point_from(coords: &[f64]) -> Point {
    let mut p = [0.0; 3];
    for (slot, &c) in p.iter_mut().zip(coords) {
        *slot = c;
    }
    p
}

/// Parses `ball(cx,cy,r)` (d=2) or `ball(cx,cy,cz,r)` (d=3).
pub fn parse_ball(spec: &str, d: usize) -> Result<Ball, String> {
    match parse_csg(spec, d)? {
        Csg::Ball(b) => Ok(b),
        _ => Err(format!("expected a single ball, got `{}`", spec.trim())),
    }
}

/// Parses the CSG grammar:
///
/// ```text
/// expr := ball(x, y, r)            (d = 2)
///       | ball(x, y, z, r)         (d = 3)
///       | union(expr, expr, ...)
///       | inter(expr, expr, ...)
///       | not(expr)
/// ```
pub fn parse_csg(spec: &str, d: usize) -> Result<Csg, String> {
    let s = spec.trim();
    let open = s
        .find('(')
        .ok_or_else(|| format!("expected `name(...)`, got `{s}`"))?;
    if !s.ends_with(')') {
        return Err(format!("unbalanced parentheses in `{s}`"));
    }
    let name = s[..open].trim();
    let body = &s[open + 1..s.len() - 1];
    let args = split_top_level(body);
    match name {
        "ball" => {
            let want = d + 1;
            if args.len() != want {
                return Err(format!(
                    "ball takes {want} numbers in {d}D (center then radius), got {} in `{s}`",
                    args.len()
                ));
            }
            let nums: Result<Vec<f64>, _> = args
                .iter()
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("`{}` is not a number in `{s}`", a.trim()))
                })
                .collect();
            let nums = nums?;
            let mut center = [0.0; 3];
            center[..d].copy_from_slice(&nums[..d]);
            let ball = Ball::new(center, nums[d]).map_err(|e| e.to_string())?;
            Ok(Csg::Ball(ball))
        }
        "union" | "inter" => {
            if args.len() < 2 {
                return Err(format!("{name} needs at least two operands in `{s}`"));
            }
            let parts: Result<Vec<Csg>, _> =
                args.iter().map(|a| parse_csg(a, d)).collect();
            let parts = parts?;
            Ok(if name == "union" {
                Csg::Union(parts)
            } else {
                Csg::Intersection(parts)
            })
        }
        "not" => {
            if args.len() != 1 {
                return Err(format!("not takes exactly one operand in `{s}`"));
            }
            Ok(Csg::Complement(Box::new(parse_csg(args[0], d)?)))
        }
        other => Err(format!(
            "unknown shape `{other}` (expected ball, union, inter, or not)"
        )),
    }
}

/// Splits on commas not nested inside parentheses.
fn split_top_level(body: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in body.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !body[start..].trim().is_empty() || !parts.is_empty() {
        parts.push(&body[start..]);
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> String {
        r#"
            name = "test"
            [grid]
            d = 2
            n = 128
            [physics]
            eps = 0.04
            r0 = 0.2
            r1 = 1.3
            t_end = 0.01
            [initial]
            surface = "ball(0.5, 0.5, 0.3)"
        "#
        .to_string()
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: ScenarioConfig = toml::from_str(&minimal_toml()).unwrap();
        assert_eq!(config.physics.cfl_safety, 0.9);
        assert_eq!(config.physics.min_layer_cells, 4.0);
        assert!(config.physics.dt_override.is_none());
        assert!(config.diagnostics.barriers);
        assert!(!config.diagnostics.monotonicity);
        assert_eq!(config.diagnostics.tol_gronwall, 1e-3);
        assert_eq!(config.diagnostics.margin_factor, 10.0);
        assert_eq!(config.output.record_every, 100);
        assert_eq!(config.output.dir, "out");
        let scenario = config.validate().unwrap();
        assert!(scenario.obstacles.is_empty());
        assert_eq!(scenario.params.n, 128);
        // Auto dt sits at 90% of the stability limit.
        let limit = scenario.params.dt_limit() / 0.9;
        assert!(scenario.params.dt <= limit);
        assert!(scenario.params.dt > 0.0);
    }

    #[test]
    fn config_round_trips_losslessly() {
        let mut config: ScenarioConfig = toml::from_str(&minimal_toml()).unwrap();
        config.physics.dt_override = Some(2.5e-6);
        config.obstacles.plus.push("ball(0.5,0.5,0.2)".to_string());
        config.diagnostics.monotonicity = true;
        config.diagnostics.monotonicity_s = 0.035;
        config.diagnostics.monotonicity_probes = vec![vec![0.4, 0.6]];
        config.diagnostics.brakke_window = Some([0.0, 0.004]);
        let text = toml::to_string_pretty(&config).unwrap();
        let back: ScenarioConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn thin_interface_rule_is_named_in_the_error() {
        let mut config: ScenarioConfig = toml::from_str(&minimal_toml()).unwrap();
        config.grid.n = 32;
        config.physics.eps = 0.1; // 3.2 cells < 4
        let err = config.validate().unwrap_err();
        let ConfigError::Validation(errors) = err else {
            panic!("expected validation error")
        };
        assert!(errors.iter().any(|e| e.contains("eps >= 4 h")), "{errors:?}");
    }

    #[test]
    fn wide_forcing_band_cites_the_standing_assumption() {
        let mut config: ScenarioConfig = toml::from_str(&minimal_toml()).unwrap();
        config.obstacles.plus.push("ball(0.5,0.5,0.2)".to_string());
        config.physics.r1 = 0.3; // 2*sqrt(0.04) = 0.4 > 0.1
        let err = config.validate().unwrap_err();
        let ConfigError::Validation(errors) = err else {
            panic!("expected validation error")
        };
        assert!(
            errors.iter().any(|e| e.contains("2*sqrt(eps) <= R1/3")),
            "{errors:?}"
        );
    }

    #[test]
    fn all_violations_are_reported_together() {
        let mut config: ScenarioConfig = toml::from_str(&minimal_toml()).unwrap();
        config.grid.n = 8;
        config.physics.t_end = -1.0;
        config.output.record_every = 0;
        config.initial.surface = "blob(0.5)".to_string();
        let err = config.validate().unwrap_err();
        let ConfigError::Validation(errors) = err else {
            panic!("expected validation error")
        };
        assert!(errors.len() >= 4, "only got: {errors:?}");
    }

    #[test]
    fn csg_grammar_parses_nested_expressions() {
        let csg = parse_csg(
            "union(ball(0.3,0.5,0.14), inter(ball(0.7,0.5,0.2), not(ball(0.7,0.5,0.1))))",
            2,
        )
        .unwrap();
        // Union of a solid ball and an annulus: inside the annulus ring.
        assert!(csg.signed_distance([0.7, 0.35, 0.0], 2) > 0.0);
        // Carved-out core of the annulus, outside the first ball.
        assert!(csg.signed_distance([0.7, 0.5, 0.0], 2) < 0.0);
        // Inside the first ball.
        assert!(csg.signed_distance([0.3, 0.5, 0.0], 2) > 0.0);
    }

    #[test]
    fn csg_errors_name_the_offending_fragment() {
        assert!(parse_csg("ball(0.5,0.5)", 2).unwrap_err().contains("3 numbers"));
        assert!(parse_csg("ball(0.5,0.5,0.2)", 3).unwrap_err().contains("4 numbers"));
        assert!(parse_csg("ball(a,0.5,0.2)", 2).unwrap_err().contains("not a number"));
        assert!(parse_csg("pyramid(1,2,3)", 2).unwrap_err().contains("pyramid"));
        assert!(parse_csg("union(ball(0.5,0.5,0.2))", 2)
            .unwrap_err()
            .contains("two operands"));
        assert!(parse_csg("ball(0.5,0.5,0.9)", 2).unwrap_err().contains("0.9"));
    }

    #[test]
    fn three_dimensional_balls_parse() {
        let ball = parse_ball("ball(0.5, 0.5, 0.5, 0.3)", 3).unwrap();
        assert_eq!(ball.center, [0.5, 0.5, 0.5]);
        assert_eq!(ball.radius, 0.3);
    }

    #[test]
    fn probe_defaults_track_dimension() {
        let config: ScenarioConfig = toml::from_str(&minimal_toml()).unwrap();
        assert_eq!(config.monotonicity_probes(), vec![[0.5, 0.5, 0.0]]);
        let mut config3 = config.clone();
        config3.grid.d = 3;
        assert_eq!(config3.monotonicity_probes(), vec![[0.5, 0.5, 0.5]]);
        assert_eq!(config3.brakke_center(), [0.5, 0.5, 0.5]);
    }

    #[test]
    fn unknown_keys_are_rejected_at_parse_time() {
        let text = format!("{}\ntypo_key = 1\n", minimal_toml());
        assert!(toml::from_str::<ScenarioConfig>(&text).is_err());
    }
}
