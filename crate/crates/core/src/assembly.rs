//! Global matrices and load vectors of the five-field optimality system.
//!
//! | block | size           | entry                                  |
//! |-------|----------------|----------------------------------------|
//! | `M`   | `n_rt x n_rt`  | `(phi_e, phi_f)`                       |
//! | `B`   | `n_p0 x n_rt`  | `(div phi_e, 1_T)`                     |
//! | `C`   | `n_rt x n_p1`  | `<phi_e . n, lambda_a>` on the boundary |
//! | `K`   | `n_p1 x n_p1`  | `(grad lambda_a, grad lambda_b)`       |
//! | `N`   | `n_p0 x n_p0`  | `|T|` on the diagonal                  |

use crate::error::{Error, Result};
use crate::femspaces::{p1_gradients, rt0_basis, DofLayout};
use crate::mesh::{Mesh, Point};
use crate::problems::ControlProblem;
use crate::quadrature::{TRI_DEG4, TRI_DEG8};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// How the `alpha a(u_d, q_h)` load of the control equation is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TargetControlLoad {
    /// `K` applied to the nodal interpolant of `u_d`.
    #[default]
    Interpolant,
    /// `(grad u_d, grad lambda_a)` by degree-8 quadrature.
    Quadrature,
}

#[derive(Clone, Debug)]
pub struct AssembledBlocks {
    pub layout: DofLayout,
    pub mass_rt: SparseMatrix,
    pub div: SparseMatrix,
    pub trace: SparseMatrix,
    pub stiffness: SparseMatrix,
    /// Diagonal of the P0 mass matrix (element areas).
    pub mass_p0: Vec<f64>,
    /// `(f, 1_T)`.
    pub load_f: Vec<f64>,
    /// `(y_d, 1_T)`.
    pub load_yd: Vec<f64>,
    /// `a(u_d, lambda_a)`.
    pub load_ud: Vec<f64>,
}

/// Local RT0 mass matrix of triangle `t`, signs included.
pub fn rt0_local_mass(mesh: &Mesh, t: usize) -> Result<[[f64; 3]; 3]> {
    if !(mesh.area(t) > 0.0) {
        return Err(Error::DegenerateTriangle(t));
    }
    let basis = rt0_basis(mesh, t);
    let v = mesh.coords(t);
    let mut m = [[0.0; 3]; 3];
    for (x, w) in TRI_DEG4.mapped(&v) {
        let phi = basis.map(|b| b.eval(x));
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += w * phi[i].dot(phi[j]);
            }
        }
    }
    Ok(m)
}

/// Local P1 stiffness matrix of triangle `t`.
pub fn p1_local_stiffness(mesh: &Mesh, t: usize) -> [[f64; 3]; 3] {
    let g = p1_gradients(mesh, t);
    let area = mesh.area(t);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * g[i].dot(g[j]);
        }
    }
    k
}

pub fn assemble_blocks(mesh: &Mesh, layout: &DofLayout, problem: &ControlProblem) -> Result<AssembledBlocks> {
    assemble_blocks_with(mesh, layout, problem, TargetControlLoad::default())
}

pub fn assemble_blocks_with(
    mesh: &Mesh,
    layout: &DofLayout,
    problem: &ControlProblem,
    target: TargetControlLoad,
) -> Result<AssembledBlocks> {
    if !layout.matches(mesh) {
        return Err(Error::MeshMismatch(format!("layout {layout:?} does not fit the mesh")));
    }
    let nt = mesh.n_triangles();
    let mut mass = TripletBuilder::with_capacity(layout.n_rt, layout.n_rt, 9 * nt);
    let mut div = TripletBuilder::with_capacity(layout.n_p0, layout.n_rt, 3 * nt);
    let mut stiff = TripletBuilder::with_capacity(layout.n_p1, layout.n_p1, 9 * nt);
    let mut mass_p0 = Vec::with_capacity(nt);
    let mut load_f = Vec::with_capacity(nt);
    let mut load_yd = Vec::with_capacity(nt);
    let mut load_ud_quad = vec![0.0; layout.n_p1];
    let data = &problem.data;

    for t in 0..nt {
        let local = mesh.triangle_edges(t);
        let m = rt0_local_mass(mesh, t)?;
        for i in 0..3 {
            for j in 0..3 {
                mass.push(local[i].edge, local[j].edge, m[i][j]);
            }
            div.push(t, local[i].edge, local[i].sign);
        }
        let verts = mesh.triangles()[t].vertices;
        let k = p1_local_stiffness(mesh, t);
        for i in 0..3 {
            for j in 0..3 {
                stiff.push(verts[i], verts[j], k[i][j]);
            }
        }
        let v = mesh.coords(t);
        mass_p0.push(mesh.area(t));
        load_f.push(TRI_DEG8.integrate(&v, |x| data.f(x)));
        load_yd.push(TRI_DEG8.integrate(&v, |x| data.y_d(x)));
        if target == TargetControlLoad::Quadrature {
            let g = p1_gradients(mesh, t);
            for (x, w) in TRI_DEG8.mapped(&v) {
                let gu = data.grad_u_d(x);
                for i in 0..3 {
                    load_ud_quad[verts[i]] += w * gu.dot(g[i]);
                }
            }
        }
    }

    let mut trace = TripletBuilder::with_capacity(layout.n_rt, layout.n_p1, 2 * mesh.n_edges());
    for e in mesh.boundary_edges() {
        // Boundary edges carry outward canonical normals and the basis has
        // unit flux, so <phi_e . n, lambda_a> = (1/|e|) int_e lambda_a = 1/2.
        for &a in &mesh.edges()[e].vertices {
            trace.push(e, a, 0.5);
        }
    }

    let stiffness = stiff.build();
    let load_ud = match target {
        TargetControlLoad::Interpolant => {
            let ud: Vec<f64> = mesh.points().iter().map(|&p| data.u_d(p)).collect();
            stiffness.mul_vec(&ud)
        }
        TargetControlLoad::Quadrature => load_ud_quad,
    };

    Ok(AssembledBlocks {
        layout: *layout,
        mass_rt: mass.build(),
        div: div.build(),
        trace: trace.build(),
        stiffness,
        mass_p0,
        load_f,
        load_yd,
        load_ud,
    })
}

/// `(f, 1_T)` for every triangle with the degree-8 rule.
pub fn p0_load(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
    (0..mesh.n_triangles())
        .map(|t| TRI_DEG8.integrate(&mesh.coords(t), &f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example1, example2};
    use rand::{Rng, SeedableRng};

    fn reference() -> Mesh {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        Mesh::from_connectivity(pts, &[[0, 1, 2]]).unwrap()
    }

    #[test]
    fn reference_stiffness() {
        let k = p1_local_stiffness(&reference(), 0);
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reference_mass_matches_symbolic_values() {
        // Computed symbolically for phi_i = (x - x_i) / (2|T|):
        // [[1/6, 0, 0], [0, 1/3, -1/6], [0, -1/6, 1/3]], times sign_i sign_j.
        let m = reference();
        let mm = rt0_local_mass(&m, 0).unwrap();
        let golden = [[1.0 / 6.0, 0.0, 0.0], [0.0, 1.0 / 3.0, -1.0 / 6.0], [0.0, -1.0 / 6.0, 1.0 / 3.0]];
        let s = m.triangle_edges(0).map(|le| le.sign);
        for i in 0..3 {
            for j in 0..3 {
                assert!((mm[i][j] - s[i] * s[j] * golden[i][j]).abs() < 1e-13);
            }
        }
    }

    fn eig_sym3_min(a: &[[f64; 3]; 3]) -> f64 {
        // Sylvester: all leading principal minors positive iff SPD; return the
        // smallest minor scaled as a positivity witness.
        let m1 = a[0][0];
        let m2 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let m3 = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        m1.min(m2).min(m3)
    }

    #[test]
    fn local_mass_spd_and_scaling() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let mut v = [0; 3].map(|_| Point::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
            let area = 0.5 * (v[1] - v[0]).cross(v[2] - v[0]);
            if area.abs() < 1e-3 {
                continue;
            }
            if area < 0.0 {
                v.swap(1, 2);
            }
            let m = Mesh::from_connectivity(v.to_vec(), &[[0, 1, 2]]).unwrap();
            let mm = rt0_local_mass(&m, 0).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((mm[i][j] - mm[j][i]).abs() < 1e-13 * mm[i][i].abs().max(1.0));
                }
            }
            assert!(eig_sym3_min(&mm) > 0.0);
            let s = 3.0;
            let scaled = Mesh::from_connectivity(v.iter().map(|&p| p * s).collect(), &[[0, 1, 2]]).unwrap();
            let ms = rt0_local_mass(&scaled, 0).unwrap();
            // flux-normalized fields scale like 1/s, the measure like s^2
            for i in 0..3 {
                for j in 0..3 {
                    assert!((ms[i][j] - mm[i][j]).abs() < 1e-12 * (1.0 + mm[i][j].abs()));
                }
            }
        }
    }

    #[test]
    fn block_invariants() {
        for (mesh, problem) in [
            (Mesh::unit_square(4).unwrap(), example1()),
            (Mesh::lshape().uniform_refine().nvb_refine(&[0, 5]).unwrap(), example2()),
        ] {
            let layout = DofLayout::new(&mesh);
            let b = assemble_blocks(&mesh, &layout, &problem).unwrap();
            assert!(b.div.iter().all(|(_, _, v)| v == 1.0 || v == -1.0 || v == 0.0));
            let ones = vec![1.0; layout.n_p1];
            assert!(b.stiffness.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
            assert!(b.stiffness.asymmetry() < 1e-13);
            assert!(b.mass_rt.asymmetry() < 1e-13);
            assert!(b.mass_p0.iter().all(|&a| a > 0.0));
            let row_sums = b.trace.mul_vec(&ones);
            for e in 0..mesh.n_edges() {
                let expect = if mesh.edges()[e].is_boundary() { 1.0 } else { 0.0 };
                assert_eq!(row_sums[e], expect);
                for (_, v) in b.trace.row(e) {
                    assert_eq!(v, 0.5);
                }
            }
            // the interpolant load annihilates constants
            assert!(b.load_ud.iter().sum::<f64>().abs() < 1e-10);
        }
    }

    #[test]
    fn inconsistent_layout_rejected() {
        let mesh = Mesh::unit_square(2).unwrap();
        let layout = DofLayout::new(&Mesh::unit_square(3).unwrap());
        assert!(matches!(assemble_blocks(&mesh, &layout, &example1()), Err(Error::MeshMismatch(_))));
    }

    #[test]
    fn quadrature_target_load_sums_to_zero() {
        // Both variants test the same functional; they differ by a
        // consistency error that shrinks under refinement.
        let mut last = f64::INFINITY;
        for n in [4, 8, 16] {
            let mesh = Mesh::unit_square(n).unwrap();
            let layout = DofLayout::new(&mesh);
            let b = assemble_blocks_with(&mesh, &layout, &example1(), TargetControlLoad::Quadrature).unwrap();
            assert!(b.load_ud.iter().sum::<f64>().abs() < 1e-12);
            let bi = assemble_blocks(&mesh, &layout, &example1()).unwrap();
            let diff: f64 = b.load_ud.iter().zip(&bi.load_ud).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
            assert!(diff < 0.6 * last, "n={n}: {diff} vs {last}");
            last = diff;
        }
    }
}
