//! Legacy-ASCII VTK output for extracted interface meshes.
//!
//! d=2 meshes become `LINES` polydata, d=3 meshes `POLYGONS`.  Coordinates
//! are written with full double precision so meshes can be diffed across
//! runs.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use crate::mesh::InterfaceMesh;

/// Writes `mesh` as VTK polydata to `path`.
pub fn write_vtk(path: &Path, mesh: &InterfaceMesh, title: &str) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET POLYDATA")?;
    writeln!(out, "POINTS {} double", mesh.vertices.len())?;
    for v in &mesh.vertices {
        writeln!(out, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2])?;
    }
    if mesh.d == 2 {
        writeln!(out, "LINES {} {}", mesh.segments.len(), 3 * mesh.segments.len())?;
        for s in &mesh.segments {
            writeln!(out, "2 {} {}", s[0], s[1])?;
        }
    } else {
        writeln!(
            out,
            "POLYGONS {} {}",
            mesh.triangles.len(),
            4 * mesh.triangles.len()
        )?;
        for t in &mesh.triangles {
            writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
        }
    }
    out.flush()
}
