//! Legacy ASCII VTK output for meshes and discrete solutions.

use std::io::Write;

use crate::error::Result;
use crate::femspaces::{div_rt0_raw, rt0_local};
use crate::mesh::{Mesh, Point};
use crate::solver::DiscreteSolution;

fn write_grid(w: &mut impl Write, mesh: &Mesh, title: &str) -> Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for p in mesh.points() {
        writeln!(w, "{} {} 0", p.x, p.y)?;
    }
    let nt = mesh.n_triangles();
    writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        writeln!(w, "3 {a} {b} {c}")?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    Ok(())
}

fn write_scalars(w: &mut impl Write, name: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(w, "{v:.12e}")?;
    }
    Ok(())
}

fn write_vectors(w: &mut impl Write, name: &str, values: impl IntoIterator<Item = Point>) -> Result<()> {
    writeln!(w, "VECTORS {name} double")?;
    for v in values {
        writeln!(w, "{:.12e} {:.12e} 0", v.x, v.y)?;
    }
    Ok(())
}

/// Geometry and connectivity only.
pub fn write_mesh(mut w: impl Write, mesh: &Mesh) -> Result<()> {
    write_grid(&mut w, mesh, "mixed-dbc mesh")
}

/// Mesh plus `y_h`, `z_h`, `div p_h` and optionally an element indicator as
/// cell data, `p_h` and `r_h` at the centroids as cell vectors, `u_h` as
/// point data.
pub fn write_solution(mut w: impl Write, mesh: &Mesh, sol: &DiscreteSolution, indicator: Option<&[f64]>) -> Result<()> {
    sol.check_mesh(mesh)?;
    write_grid(&mut w, mesh, "mixed-dbc solution")?;
    let nt = mesh.n_triangles();
    writeln!(w, "CELL_DATA {nt}")?;
    write_scalars(&mut w, "y_h", sol.y.values().iter().copied())?;
    write_scalars(&mut w, "z_h", sol.z.values().iter().copied())?;
    write_scalars(&mut w, "div_p_h", (0..nt).map(|t| div_rt0_raw(mesh, sol.p.values(), t)))?;
    if let Some(mu) = indicator {
        write_scalars(&mut w, "indicator", mu.iter().copied())?;
    }
    write_vectors(&mut w, "p_h", (0..nt).map(|t| rt0_local(mesh, sol.p.values(), t).eval(mesh.centroid(t))))?;
    write_vectors(&mut w, "r_h", (0..nt).map(|t| rt0_local(mesh, sol.r.values(), t).eval(mesh.centroid(t))))?;
    writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
    write_scalars(&mut w, "u_h", sol.u.values().iter().copied())?;
    Ok(())
}
