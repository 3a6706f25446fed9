//! Uniform periodic grids on the flat torus [0,1)^d and the finite
//! difference / quadrature operations everything else is built from.
//!
//! Nodes sit at x_i = i/n per axis, spacing h = 1/n, and every stencil
//! wraps around the periodic boundary.  Scalar fields are stored as flat
//! `Vec<f64>` with x fastest: `idx = ix + n*(iy + n*iz)` (iz = 0 in 2-D).

use rayon::prelude::*;
use thiserror::Error;

/// A point on the torus. The z component is ignored when d = 2.
pub type Point = [f64; 3];

/// Chunk length for deterministic summation: fields are reduced chunk by
/// chunk in index order so the result does not depend on thread count.
const SUM_CHUNK: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("dimension must be 2 or 3, got {0}")]
    BadDimension(usize),
    #[error("need at least 16 nodes per axis, got {0}")]
    TooCoarse(usize),
    #[error("n = {0} does not satisfy n * (1.0/n) == 1.0 in f64 arithmetic")]
    InexactSpacing(usize),
    #[error("grids differ: {0}")]
    GridMismatch(String),
    #[error("non-finite value at node {node} ({value})")]
    NonFinite { node: usize, value: f64 },
}

/// Geometry of a periodic n^d grid with unit period per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    d: usize,
    n: usize,
    h: f64,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize) -> Result<Self, GridError> {
        if d != 2 && d != 3 {
            return Err(GridError::BadDimension(d));
        }
        if n < 16 {
            return Err(GridError::TooCoarse(n));
        }
        let h = 1.0 / n as f64;
        if n as f64 * h != 1.0 {
            return Err(GridError::InexactSpacing(n));
        }
        Ok(Self { d, n, h })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Node spacing h = 1/n.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total node count n^d.
    pub fn num_nodes(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Cell volume h^d, the weight of one node in the quadrature rule.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        debug_assert!(ix < self.n && iy < self.n && (self.d == 3 || iz == 0));
        ix + self.n * (iy + self.n * iz)
    }

    /// Per-axis integer coordinates of a node index.
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, if self.d == 3 { idx / (n * n) } else { 0 }]
    }

    /// Position of a node, computed as i/n so that positions are exact
    /// whenever i/n is representable.
    pub fn position(&self, idx: usize) -> Point {
        let [ix, iy, iz] = self.coords(idx);
        let n = self.n as f64;
        [ix as f64 / n, iy as f64 / n, iz as f64 / n]
    }

    /// Geodesic distance on the torus (minimum over periodic images).
    pub fn distance(&self, x: Point, y: Point) -> f64 {
        torus_distance(x, y, self.d)
    }
}

/// Geodesic (minimum image) distance between two points of [0,1)^d.
pub fn torus_distance(x: Point, y: Point, d: usize) -> f64 {
    let mut acc = 0.0;
    for a in 0..d {
        let diff = (x[a] - y[a]).abs();
        let wrapped = diff.min(1.0 - diff);
        acc += wrapped * wrapped;
    }
    acc.sqrt()
}

/// Scalar field sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

/// Vector field with one component array per axis (axis-major layout).
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: TorusGrid,
    comps: Vec<Vec<f64>>,
}

impl ScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, values: vec![0.0; grid.num_nodes()] }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.num_nodes()] }
    }

    /// Evaluate `f` at every node position.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(Point) -> f64 + Sync) -> Self {
        let n = grid.n;
        let mut values = vec![0.0; grid.num_nodes()];
        values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(chunk, row)| {
                let base = chunk * n;
                for (ix, v) in row.iter_mut().enumerate() {
                    *v = f(grid.position(base + ix));
                }
            });
        Self { grid, values }
    }

    pub fn from_values(grid: TorusGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.num_nodes() {
            return Err(GridError::GridMismatch(format!(
                "value count {} != node count {}",
                values.len(),
                grid.num_nodes()
            )));
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFinite { node, value });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Rotate the stored values by one node along `axis` (data relabeling;
    /// used by the translation-equivariance tests).
    pub fn shifted_by_one(&self, axis: usize) -> ScalarField {
        let n = self.grid.n;
        let mut out = Self::zeros(self.grid);
        for idx in 0..self.values.len() {
            let mut c = self.grid.coords(idx);
            c[axis] = (c[axis] + 1) % n;
            out.values[self.grid.index(c[0], c[1], c[2])] = self.values[idx];
        }
        out
    }

    /// Second-order 2d+1 point Laplacian with periodic wrap.
    pub fn laplacian(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        self.laplacian_into(&mut out);
        out
    }

    pub fn laplacian_into(&self, out: &mut ScalarField) {
        debug_assert_eq!(self.grid, out.grid);
        let n = self.grid.n;
        let d = self.grid.d;
        let inv_h2 = 1.0 / (self.grid.h * self.grid.h);
        let v = &self.values;
        let two_d = 2.0 * d as f64;
        out.values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(chunk, row_out)| {
                let (iy, iz) = (chunk % n, chunk / n);
                let base = chunk * n;
                let ym = (iy + n - 1) % n + n * iz;
                let yp = (iy + 1) % n + n * iz;
                let row = &v[base..base + n];
                let row_ym = &v[ym * n..ym * n + n];
                let row_yp = &v[yp * n..yp * n + n];
                let (row_zm, row_zp) = if d == 3 {
                    let zm = (iy + n * ((iz + n - 1) % n)) * n;
                    let zp = (iy + n * ((iz + 1) % n)) * n;
                    (&v[zm..zm + n], &v[zp..zp + n])
                } else {
                    (row, row)
                };
                for ix in 0..n {
                    let xm = row[(ix + n - 1) % n];
                    let xp = row[(ix + 1) % n];
                    let mut acc = xm + xp + row_ym[ix] + row_yp[ix] - two_d * row[ix];
                    if d == 3 {
                        acc += row_zm[ix] + row_zp[ix];
                    }
                    row_out[ix] = acc * inv_h2;
                }
            });
    }

    /// Second-order central difference gradient, one component per axis.
    pub fn gradient(&self) -> VectorField {
        let n = self.grid.n;
        let d = self.grid.d;
        let inv_2h = 1.0 / (2.0 * self.grid.h);
        let v = &self.values;
        let comps: Vec<Vec<f64>> = (0..d)
            .map(|axis| {
                let mut comp = vec![0.0; v.len()];
                comp.par_chunks_mut(n)
                    .enumerate()
                    .for_each(|(chunk, row_out)| {
                        let (iy, iz) = (chunk % n, chunk / n);
                        let base = chunk * n;
                        match axis {
                            0 => {
                                let row = &v[base..base + n];
                                for ix in 0..n {
                                    row_out[ix] =
                                        (row[(ix + 1) % n] - row[(ix + n - 1) % n]) * inv_2h;
                                }
                            }
                            1 => {
                                let ym = ((iy + n - 1) % n + n * iz) * n;
                                let yp = ((iy + 1) % n + n * iz) * n;
                                let row_ym = &v[ym..ym + n];
                                let row_yp = &v[yp..yp + n];
                                for ix in 0..n {
                                    row_out[ix] = (row_yp[ix] - row_ym[ix]) * inv_2h;
                                }
                            }
                            _ => {
                                let zm = (iy + n * ((iz + n - 1) % n)) * n;
                                let zp = (iy + n * ((iz + 1) % n)) * n;
                                let row_zm = &v[zm..zm + n];
                                let row_zp = &v[zp..zp + n];
                                for ix in 0..n {
                                    row_out[ix] = (row_zp[ix] - row_zm[ix]) * inv_2h;
                                }
                            }
                        }
                    });
                comp
            })
            .collect();
        VectorField { grid: self.grid, comps }
    }

    /// Rectangle-rule integral h^d * sum(f).  Deterministic: the chunked
    /// partial sums are combined in index order regardless of threading.
    pub fn integrate(&self) -> f64 {
        self.grid.cell_volume() * det_sum(&self.values)
    }

    /// Rectangle-rule integral of `map(f_i)` without materializing a field.
    pub fn integrate_mapped(&self, map: impl Fn(f64) -> f64 + Sync) -> f64 {
        let partials: Vec<f64> = self
            .values
            .par_chunks(SUM_CHUNK)
            .map(|c| c.iter().map(|&x| map(x)).sum::<f64>())
            .collect();
        self.grid.cell_volume() * partials.iter().sum::<f64>()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }

    pub fn max_abs(&self) -> f64 {
        let (lo, hi) = self.min_max();
        lo.abs().max(hi.abs())
    }
}

impl VectorField {
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn comp(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    /// |v|^2 at node `idx`.
    pub fn norm_sq_at(&self, idx: usize) -> f64 {
        self.comps.iter().map(|c| c[idx] * c[idx]).sum()
    }

    /// Pointwise squared norm as a scalar field.
    pub fn norm_sq(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        let comps = &self.comps;
        out.values
            .par_chunks_mut(SUM_CHUNK)
            .enumerate()
            .for_each(|(chunk, slab)| {
                let base = chunk * SUM_CHUNK;
                for (k, v) in slab.iter_mut().enumerate() {
                    *v = comps.iter().map(|c| c[base + k] * c[base + k]).sum();
                }
            });
        out
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.comps[0].len())
            .map(|i| self.norm_sq_at(i))
            .fold(0.0f64, f64::max)
            .sqrt()
    }
}

/// Deterministic chunked sum (index-ordered combination of partial sums).
pub fn det_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values
        .par_chunks(SUM_CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect();
    partials.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_dimensions_and_coarse_grids() {
        assert_eq!(TorusGrid::new(1, 32).unwrap_err(), GridError::BadDimension(1));
        assert_eq!(TorusGrid::new(4, 32).unwrap_err(), GridError::BadDimension(4));
        assert_eq!(TorusGrid::new(2, 8).unwrap_err(), GridError::TooCoarse(8));
        assert!(TorusGrid::new(2, 16).is_ok());
    }

    #[test]
    fn spacing_times_n_is_exactly_one() {
        for n in [16, 64, 100, 200, 256, 400, 448, 512, 896] {
            let g = TorusGrid::new(2, n).unwrap();
            assert_eq!(g.n() as f64 * g.h(), 1.0, "n = {n}");
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = TorusGrid::new(2, 32).unwrap();
        let f = ScalarField::constant(g, 3.25);
        for &v in f.laplacian().values() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn laplacian_of_cosine_matches_taylor_bound() {
        // f(x) = cos(2 pi x1), lap f = -(2 pi)^2 f, stencil error below
        // h^2 * max|f''''| / 12 with 50% headroom.
        for n in [64usize, 128] {
            let g = TorusGrid::new(2, n).unwrap();
            let f = ScalarField::from_fn(g, |p| (2.0 * PI * p[0]).cos());
            let lap = f.laplacian();
            let bound = (2.0 * PI).powi(4) * g.h() * g.h() / 12.0 * 1.5;
            let mut worst = 0.0f64;
            for idx in 0..g.num_nodes() {
                let exact = -(2.0 * PI).powi(2) * f.values()[idx];
                worst = worst.max((lap.values()[idx] - exact).abs());
            }
            assert!(worst <= bound, "n={n}: worst {worst} > bound {bound}");
        }
    }

    #[test]
    fn laplacian_converges_at_second_order() {
        let err = |n: usize| {
            let g = TorusGrid::new(2, n).unwrap();
            let f = ScalarField::from_fn(g, |p| (2.0 * PI * p[0]).cos());
            let lap = f.laplacian();
            (0..g.num_nodes())
                .map(|i| (lap.values()[i] + (2.0 * PI).powi(2) * f.values()[i]).abs())
                .fold(0.0f64, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn laplacian_of_kronecker_spike_has_exact_stencil_values() {
        let n = 64;
        let g = TorusGrid::new(2, n).unwrap();
        let mut f = ScalarField::zeros(g);
        let spike = g.index(10, 20, 0);
        f.values_mut()[spike] = 1.0;
        let lap = f.laplacian();
        let inv_h2 = (n * n) as f64;
        assert_eq!(lap.values()[spike], -4.0 * inv_h2);
        for nb in [g.index(9, 20, 0), g.index(11, 20, 0), g.index(10, 19, 0), g.index(10, 21, 0)] {
            assert_eq!(lap.values()[nb], inv_h2);
        }
        // away from the spike stencil: exactly zero
        assert_eq!(lap.values()[g.index(12, 20, 0)], 0.0);
    }

    #[test]
    fn gradient_of_sine_matches_central_difference_bound() {
        let g = TorusGrid::new(2, 128).unwrap();
        let f = ScalarField::from_fn(g, |p| (2.0 * PI * p[1]).sin());
        let grad = f.gradient();
        let bound = (2.0 * PI).powi(3) * g.h() * g.h() / 6.0 * 1.5;
        for idx in 0..g.num_nodes() {
            let p = g.position(idx);
            let exact = 2.0 * PI * (2.0 * PI * p[1]).cos();
            assert!((grad.comp(1)[idx] - exact).abs() <= bound);
            assert_eq!(grad.comp(0)[idx], 0.0);
        }
    }

    #[test]
    fn three_d_stencils_see_all_six_neighbors() {
        let g = TorusGrid::new(3, 16).unwrap();
        let f = ScalarField::from_fn(g, |p| {
            (2.0 * PI * p[0]).cos() + (2.0 * PI * p[1]).cos() + (2.0 * PI * p[2]).cos()
        });
        let lap = f.laplacian();
        let bound = 3.0 * (2.0 * PI).powi(4) * g.h() * g.h() / 12.0 * 1.5;
        for idx in 0..g.num_nodes() {
            let exact = -(2.0 * PI).powi(2) * f.values()[idx];
            assert!((lap.values()[idx] - exact).abs() <= bound);
        }
        let grad = f.gradient();
        let p = g.position(g.index(3, 5, 7));
        assert_relative_eq!(
            grad.comp(2)[g.index(3, 5, 7)],
            -2.0 * PI * (2.0 * PI * p[2]).sin(),
            epsilon = 0.1
        );
    }

    #[test]
    fn integral_of_squared_sine_is_exact() {
        // trig polynomial of degree 4 < n: the rectangle rule is exact
        let g = TorusGrid::new(2, 64).unwrap();
        let f = ScalarField::from_fn(g, |p| (2.0 * PI * p[0]).sin().powi(2));
        assert!((f.integrate() - 0.5).abs() <= 1e-14);
        let c = ScalarField::constant(g, 2.5);
        assert_relative_eq!(c.integrate(), 2.5, max_relative = 1e-15);
    }

    #[test]
    fn laplacian_integrates_to_zero() {
        let g = TorusGrid::new(2, 64).unwrap();
        let f = ScalarField::from_fn(g, |p| {
            (2.0 * PI * p[0]).sin() * (4.0 * PI * p[1]).cos() + 0.3 * (2.0 * PI * p[1]).cos()
        });
        let lap = f.laplacian();
        let scale = lap.max_abs();
        let tol = 1e-15 * g.num_nodes() as f64 * scale * g.cell_volume() * 10.0;
        assert!(lap.integrate().abs() <= tol.max(1e-12));
    }

    #[test]
    fn torus_distance_wraps_to_nearest_image() {
        let d = torus_distance([0.05, 0.0, 0.0], [0.95, 0.0, 0.0], 2);
        assert_relative_eq!(d, 0.1, max_relative = 1e-12);
        let far = torus_distance([0.0, 0.0, 0.0], [0.5, 0.5, 0.0], 2);
        assert_relative_eq!(far, 0.5f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn shifted_field_is_a_pure_relabeling() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = ScalarField::from_fn(g, |p| p[0] + 10.0 * p[1]);
        let s = f.shifted_by_one(0);
        for iy in 0..16 {
            for ix in 0..16 {
                assert_eq!(s.values()[g.index((ix + 1) % 16, iy, 0)], f.values()[g.index(ix, iy, 0)]);
            }
        }
    }

    proptest! {
        #[test]
        fn torus_metric_axioms(
            ax in 0.0..1.0f64, ay in 0.0..1.0f64,
            bx in 0.0..1.0f64, by in 0.0..1.0f64,
            cx in 0.0..1.0f64, cy in 0.0..1.0f64,
        ) {
            let a = [ax, ay, 0.0];
            let b = [bx, by, 0.0];
            let c = [cx, cy, 0.0];
            let dab = torus_distance(a, b, 2);
            prop_assert!(dab >= 0.0);
            prop_assert_eq!(torus_distance(a, a, 2), 0.0);
            prop_assert_eq!(dab, torus_distance(b, a, 2));
            // triangle inequality with rounding slack
            prop_assert!(dab <= torus_distance(a, c, 2) + torus_distance(c, b, 2) + 1e-12);
            // diameter of the unit 2-torus
            prop_assert!(dab <= 0.5f64.sqrt() + 1e-12);
        }
    }
}
