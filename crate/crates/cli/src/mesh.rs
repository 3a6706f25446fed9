//! Zero-level-set extraction from phase fields and mesh measurements.
//!
//! Marching squares (d=2) and marching cubes (d=3) over the periodic grid,
//! with vertices placed on sign-changing grid edges by linear interpolation.
//! Vertices are stored wrapped into `[0, 1)` and shared across cells (seam
//! cells included), so meshes close up over the periodic boundary; lengths
//! and areas use minimum-image displacements, which keeps seam-crossing
//! elements as small as their cells.

use std::collections::HashMap;

use acmf_core::grid::{torus_distance, Point, ScalarField};
use thiserror::Error;

use crate::mc_tables::{CUBE_CORNERS, CUBE_EDGES, TRIANGLE_TABLE};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("field has no sign change: the zero level set is empty")]
    Empty,
    #[error("mesh has no vertices to measure")]
    EmptyMesh,
}

/// Piecewise-linear approximation of the zero level set.
///
/// `segments` index vertex pairs when `d == 2`; `triangles` index vertex
/// triples when `d == 3`.  Vertex coordinates live in `[0, 1)`; elements
/// crossing the periodic seam are short in the torus metric even though
/// their stored endpoints sit on opposite sides of the box.
#[derive(Debug, Clone)]
pub struct InterfaceMesh {
    pub d: usize,
    pub h: f64,
    pub vertices: Vec<Point>,
    pub segments: Vec<[usize; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl InterfaceMesh {
    /// Total polyline length (d=2 meshes), in the torus metric.
    pub fn total_length(&self) -> f64 {
        self.segments
            .iter()
            .map(|&[a, b]| norm(min_image(self.vertices[a], self.vertices[b])))
            .sum()
    }

    /// Total triangle area (d=3 meshes), in the torus metric.
    pub fn total_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                let u = min_image(self.vertices[b], self.vertices[a]);
                let v = min_image(self.vertices[c], self.vertices[a]);
                let cx = u[1] * v[2] - u[2] * v[1];
                let cy = u[2] * v[0] - u[0] * v[2];
                let cz = u[0] * v[1] - u[1] * v[0];
                0.5 * (cx * cx + cy * cy + cz * cz).sqrt()
            })
            .sum()
    }
}

/// Displacement `a - b` with each component reduced to `[-1/2, 1/2)`.
fn min_image(a: Point, b: Point) -> Point {
    let mut d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    for c in &mut d {
        *c -= (*c + 0.5).floor();
    }
    d
}

fn norm(v: Point) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Segment endpoints per marching-squares case, as cell-edge indices
/// (0 bottom, 1 right, 2 top, 3 left), -1 terminated.  Corner `i` sets bit
/// `i` when the field is negative; corners wind (0,0), (1,0), (1,1), (0,1).
/// The two ambiguous saddle cases (5 and 10) consistently separate the
/// negative corners.
#[rustfmt::skip]
const SEGMENT_TABLE: [[i8; 4]; 16] = [
    [-1, -1, -1, -1],
    [3, 0, -1, -1],
    [0, 1, -1, -1],
    [3, 1, -1, -1],
    [1, 2, -1, -1],
    [3, 0, 1, 2],
    [0, 2, -1, -1],
    [3, 2, -1, -1],
    [2, 3, -1, -1],
    [2, 0, -1, -1],
    [0, 1, 2, 3],
    [2, 1, -1, -1],
    [1, 3, -1, -1],
    [1, 0, -1, -1],
    [0, 3, -1, -1],
    [-1, -1, -1, -1],
];

/// Extracts the zero level set of `phi`.
///
/// Fails with [`MeshError::Empty`] when the field has one sign everywhere
/// (pure phase — extinction).
pub fn extract_interface(phi: &ScalarField) -> Result<InterfaceMesh, MeshError> {
    let (min, max) = phi.min_max();
    if min >= 0.0 || max < 0.0 {
        return Err(MeshError::Empty);
    }
    let grid = phi.grid();
    let mut mesh = InterfaceMesh {
        d: grid.d(),
        h: grid.h(),
        vertices: Vec::new(),
        segments: Vec::new(),
        triangles: Vec::new(),
    };
    // One vertex per sign-changing grid edge, keyed by (node, axis) of the
    // low-coordinate endpoint so neighboring cells share it exactly.
    let mut edge_cache: HashMap<(usize, u8), usize> = HashMap::new();
    let mut mesh_vertices: Vec<Point> = Vec::new();
    let n = grid.n();

    if grid.d() == 2 {
        for iy in 0..n {
            for ix in 0..n {
                let corners = [
                    phi.values()[grid.index(ix, iy, 0)],
                    phi.values()[grid.index((ix + 1) % n, iy, 0)],
                    phi.values()[grid.index((ix + 1) % n, (iy + 1) % n, 0)],
                    phi.values()[grid.index(ix, (iy + 1) % n, 0)],
                ];
                let mut case = 0usize;
                for (bit, &v) in corners.iter().enumerate() {
                    if v < 0.0 {
                        case |= 1 << bit;
                    }
                }
                if case == 0 || case == 15 {
                    continue;
                }
                // Cell edge -> (low-corner offset, axis).
                let edge_key = |edge: i8| -> (usize, usize, u8) {
                    match edge {
                        0 => (ix, iy, 0),
                        1 => (ix + 1, iy, 1),
                        2 => (ix, iy + 1, 0),
                        _ => (ix, iy, 1),
                    }
                };
                let segs = SEGMENT_TABLE[case];
                let mut k = 0;
                while k < 4 && segs[k] >= 0 {
                    let (ax, ay, aaxis) = edge_key(segs[k]);
                    let (bx, by, baxis) = edge_key(segs[k + 1]);
                    let va = edge_vertex_2d(
                        phi, &mut edge_cache, &mut mesh_vertices, ax, ay, aaxis,
                    );
                    let vb = edge_vertex_2d(
                        phi, &mut edge_cache, &mut mesh_vertices, bx, by, baxis,
                    );
                    mesh.segments.push([va, vb]);
                    k += 2;
                }
            }
        }
    } else {
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let mut corners = [0.0f64; 8];
                    for (c, off) in CUBE_CORNERS.iter().enumerate() {
                        corners[c] = phi.values()[grid.index(
                            (ix + off[0]) % n,
                            (iy + off[1]) % n,
                            (iz + off[2]) % n,
                        )];
                    }
                    let mut case = 0usize;
                    for (bit, &v) in corners.iter().enumerate() {
                        if v < 0.0 {
                            case |= 1 << bit;
                        }
                    }
                    if case == 0 || case == 255 {
                        continue;
                    }
                    let tris = TRIANGLE_TABLE[case];
                    let mut k = 0;
                    while k < 16 && tris[k] >= 0 {
                        let mut ids = [0usize; 3];
                        for (slot, &edge) in tris[k..k + 3].iter().enumerate() {
                            ids[slot] = edge_vertex_3d(
                                phi,
                                &mut edge_cache,
                                &mut mesh_vertices,
                                ix,
                                iy,
                                iz,
                                edge as usize,
                            );
                        }
                        mesh.triangles.push(ids);
                        k += 3;
                    }
                }
            }
        }
    }
    mesh.vertices = mesh_vertices;
    Ok(mesh)
}

/// Vertex on the grid edge starting at offset (ix, iy) along `axis`,
/// interpolated to the zero crossing and deduplicated across cells.
fn edge_vertex_2d(
    phi: &ScalarField,
    cache: &mut HashMap<(usize, u8), usize>,
    vertices: &mut Vec<Point>,
    ix: usize,
    iy: usize,
    axis: u8,
) -> usize {
    edge_vertex(phi, cache, vertices, ix, iy, 0, axis)
}

fn edge_vertex_3d(
    phi: &ScalarField,
    cache: &mut HashMap<(usize, u8), usize>,
    vertices: &mut Vec<Point>,
    ix: usize,
    iy: usize,
    iz: usize,
    edge: usize,
) -> usize {
    let [ca, cb] = CUBE_EDGES[edge];
    let oa = CUBE_CORNERS[ca];
    let ob = CUBE_CORNERS[cb];
    // The edge axis is the coordinate where the two corner offsets differ;
    // its low corner anchors the cache key.
    let axis = (0..3).find(|&a| oa[a] != ob[a]).unwrap() as u8;
    let low = if oa[axis as usize] < ob[axis as usize] {
        oa
    } else {
        ob
    };
    edge_vertex(
        phi,
        cache,
        vertices,
        ix + low[0],
        iy + low[1],
        iz + low[2],
        axis,
    )
}

fn edge_vertex(
    phi: &ScalarField,
    cache: &mut HashMap<(usize, u8), usize>,
    vertices: &mut Vec<Point>,
    ix: usize,
    iy: usize,
    iz: usize,
    axis: u8,
) -> usize {
    let grid = phi.grid();
    let n = grid.n();
    let h = grid.h();
    let node = grid.index(ix % n, iy % n, iz % n);
    if let Some(&idx) = cache.get(&(node, axis)) {
        return idx;
    }
    let step = [
        (axis == 0) as usize,
        (axis == 1) as usize,
        (axis == 2) as usize,
    ];
    let other = grid.index(
        (ix + step[0]) % n,
        (iy + step[1]) % n,
        (iz + step[2]) % n,
    );
    let a = phi.values()[node];
    let b = phi.values()[other];
    let t = a / (a - b);
    let mut pos = [
        (ix % n) as f64 * h,
        (iy % n) as f64 * h,
        (iz % n) as f64 * h,
    ];
    pos[axis as usize] += t * h;
    // t = 1 at the far node of the last edge lands exactly on 1.0.
    pos[axis as usize] = pos[axis as usize].rem_euclid(1.0);
    let idx = vertices.len();
    vertices.push(pos);
    cache.insert((node, axis), idx);
    idx
}

/// Torus-metric distance statistics from `center` to every mesh vertex.
pub fn measure_radius(
    mesh: &InterfaceMesh,
    center: Point,
) -> Result<RadiusReport, MeshError> {
    if mesh.vertices.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    let d = mesh.d;
    let dists: Vec<f64> = mesh
        .vertices
        .iter()
        .map(|&v| torus_distance(wrap(v), center, d))
        .collect();
    let mean = dists.iter().sum::<f64>() / dists.len() as f64;
    let var = dists.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / dists.len() as f64;
    let std = var.sqrt();
    Ok(RadiusReport {
        mean,
        std,
        // Concentric shells or strongly non-spherical shapes scatter the
        // radii; 5h is the documented heuristic cut for "one sphere".
        single_sphere: std <= 5.0 * mesh.h,
    })
}

fn wrap(p: Point) -> Point {
    [p[0].rem_euclid(1.0), p[1].rem_euclid(1.0), p[2].rem_euclid(1.0)]
}

#[derive(Debug, Clone, Copy)]
pub struct RadiusReport {
    pub mean: f64,
    pub std: f64,
    pub single_sphere: bool,
}
