//! Discrete spaces: lowest-order Raviart-Thomas (one flux DOF per edge),
//! piecewise constants and continuous piecewise linears.
//!
//! The global RT0 basis function of edge `e` has unit flux through `e` in
//! the direction of the edge's canonical normal. Restricted to a triangle
//! `T` in which `e` is local edge `i`, it reads
//! `sign / (2|T|) * (x - x_i)` with `x_i` the vertex opposite `e`.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    Rt0,
    P0,
    P1,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Rt0 => "RT0",
            Space::P0 => "P0",
            Space::P1 => "P1",
        }
    }

    pub fn dim(self, mesh: &Mesh) -> usize {
        match self {
            Space::Rt0 => mesh.n_edges(),
            Space::P0 => mesh.n_triangles(),
            Space::P1 => mesh.n_vertices(),
        }
    }
}

/// Global unknown numbering for the five-field system, ordered
/// `(p, y, r, z, u)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofLayout {
    pub n_rt: usize,
    pub n_p0: usize,
    pub n_p1: usize,
}

impl DofLayout {
    pub fn new(mesh: &Mesh) -> Self {
        DofLayout {
            n_rt: mesh.n_edges(),
            n_p0: mesh.n_triangles(),
            n_p1: mesh.n_vertices(),
        }
    }

    pub fn p(&self) -> usize {
        0
    }

    pub fn y(&self) -> usize {
        self.n_rt
    }

    pub fn r(&self) -> usize {
        self.n_rt + self.n_p0
    }

    pub fn z(&self) -> usize {
        2 * self.n_rt + self.n_p0
    }

    pub fn u(&self) -> usize {
        2 * self.n_rt + 2 * self.n_p0
    }

    pub fn total(&self) -> usize {
        2 * self.n_rt + 2 * self.n_p0 + self.n_p1
    }

    /// `(offset, len)` of each block in `(p, y, r, z, u)` order.
    pub fn blocks(&self) -> [(usize, usize); 5] {
        [
            (self.p(), self.n_rt),
            (self.y(), self.n_p0),
            (self.r(), self.n_rt),
            (self.z(), self.n_p0),
            (self.u(), self.n_p1),
        ]
    }

    pub fn matches(&self, mesh: &Mesh) -> bool {
        *self == DofLayout::new(mesh)
    }
}

/// Coefficients of a discrete field in one of the three spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldCoefficients {
    space: Space,
    values: Vec<f64>,
}

impl FieldCoefficients {
    pub fn new(space: Space, values: Vec<f64>) -> Self {
        FieldCoefficients { space, values }
    }

    pub fn zeros(space: Space, mesh: &Mesh) -> Self {
        FieldCoefficients::new(space, vec![0.0; space.dim(mesh)])
    }

    /// Nodal interpolant of `f` (P1) or centroid values (P0).
    pub fn interpolate(space: Space, mesh: &Mesh, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = match space {
            Space::P1 => mesh.points().iter().map(|&p| f(p)).collect(),
            Space::P0 => (0..mesh.n_triangles()).map(|t| f(mesh.centroid(t))).collect(),
            Space::Rt0 => {
                return Err(Error::invalid("scalar interpolation into RT0 is not defined"));
            }
        };
        Ok(FieldCoefficients::new(space, values))
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn expect(&self, space: Space, mesh: &Mesh) -> Result<()> {
        if self.space != space {
            return Err(Error::WrongSpace {
                expected: space.name(),
                found: self.space.name(),
            });
        }
        if self.values.len() != space.dim(mesh) {
            return Err(Error::MeshMismatch(format!(
                "{} field has {} coefficients, mesh needs {}",
                space.name(),
                self.values.len(),
                space.dim(mesh)
            )));
        }
        Ok(())
    }
}

/// An RT0 field on one triangle in the form `a + b x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rt0Local {
    pub a: Point,
    pub b: f64,
}

impl Rt0Local {
    pub fn eval(&self, x: Point) -> Point {
        self.a + x * self.b
    }

    pub fn div(&self) -> f64 {
        2.0 * self.b
    }

    /// Jacobian `d v_i / d x_j`.
    pub fn jacobian(&self) -> [[f64; 2]; 2] {
        [[self.b, 0.0], [0.0, self.b]]
    }

    /// `d v_2 / d x_1 - d v_1 / d x_2`.
    pub fn rot(&self) -> f64 {
        let j = self.jacobian();
        j[1][0] - j[0][1]
    }
}

/// The three signed local basis fields on triangle `t`, local edge order.
pub fn rt0_basis(mesh: &Mesh, t: usize) -> [Rt0Local; 3] {
    let v = mesh.coords(t);
    let area = mesh.area(t);
    let local = mesh.triangle_edges(t);
    [0, 1, 2].map(|i| {
        let s = local[i].sign / (2.0 * area);
        Rt0Local { a: -v[i] * s, b: s }
    })
}

/// Restriction of an RT0 field to triangle `t`.
pub fn rt0_local(mesh: &Mesh, coeffs: &[f64], t: usize) -> Rt0Local {
    let basis = rt0_basis(mesh, t);
    let local = mesh.triangle_edges(t);
    let mut out = Rt0Local { a: Point::default(), b: 0.0 };
    for i in 0..3 {
        let c = coeffs[local[i].edge];
        out.a = out.a + basis[i].a * c;
        out.b += basis[i].b * c;
    }
    out
}

pub fn eval_rt0(mesh: &Mesh, coeffs: &FieldCoefficients, t: usize, x: Point) -> Result<Point> {
    coeffs.expect(Space::Rt0, mesh)?;
    Ok(rt0_local(mesh, coeffs.values(), t).eval(x))
}

/// Elementwise divergence, `sum_e c_e sign_e / |T|`.
pub fn div_rt0(mesh: &Mesh, coeffs: &FieldCoefficients, t: usize) -> Result<f64> {
    coeffs.expect(Space::Rt0, mesh)?;
    Ok(div_rt0_raw(mesh, coeffs.values(), t))
}

pub(crate) fn div_rt0_raw(mesh: &Mesh, coeffs: &[f64], t: usize) -> f64 {
    let flux: f64 = mesh
        .triangle_edges(t)
        .iter()
        .map(|le| le.sign * coeffs[le.edge])
        .sum();
    flux / mesh.area(t)
}

/// Barycentric coordinates of `x` in triangle `t`.
pub fn barycentric(mesh: &Mesh, t: usize, x: Point) -> [f64; 3] {
    let [a, b, c] = mesh.coords(t);
    let det = (b - a).cross(c - a);
    let l1 = (x - a).cross(c - a) / det;
    let l2 = (b - a).cross(x - a) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Constant gradients of the three hat functions on triangle `t`.
pub fn p1_gradients(mesh: &Mesh, t: usize) -> [Point; 3] {
    let v = mesh.coords(t);
    let two_area = 2.0 * mesh.area(t);
    [0, 1, 2].map(|i| {
        let e = v[(i + 2) % 3] - v[(i + 1) % 3];
        // inward normal of the opposite edge scaled by |e| / (2|T|)
        Point::new(-e.y, e.x) * (1.0 / two_area)
    })
}

pub(crate) fn eval_p1_raw(mesh: &Mesh, coeffs: &[f64], t: usize, x: Point) -> f64 {
    let l = barycentric(mesh, t, x);
    let v = mesh.triangles()[t].vertices;
    l[0] * coeffs[v[0]] + l[1] * coeffs[v[1]] + l[2] * coeffs[v[2]]
}

pub(crate) fn grad_p1_raw(mesh: &Mesh, coeffs: &[f64], t: usize) -> Point {
    let g = p1_gradients(mesh, t);
    let v = mesh.triangles()[t].vertices;
    g[0] * coeffs[v[0]] + g[1] * coeffs[v[1]] + g[2] * coeffs[v[2]]
}

pub fn eval_p1(mesh: &Mesh, coeffs: &FieldCoefficients, t: usize, x: Point) -> Result<f64> {
    coeffs.expect(Space::P1, mesh)?;
    Ok(eval_p1_raw(mesh, coeffs.values(), t, x))
}

pub fn grad_p1(mesh: &Mesh, coeffs: &FieldCoefficients, t: usize) -> Result<Point> {
    coeffs.expect(Space::P1, mesh)?;
    Ok(grad_p1_raw(mesh, coeffs.values(), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{EDGE_DEG3, TRI_DEG4};
    use proptest::prelude::*;

    fn reference() -> Mesh {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        Mesh::from_connectivity(pts, &[[0, 1, 2]]).unwrap()
    }

    #[test]
    fn hypotenuse_basis_value() {
        let m = reference();
        // local edge 0 is the hypotenuse (opposite the origin)
        let e = m.triangle_edges(0)[0];
        let mut c = vec![0.0; 3];
        c[e.edge] = 1.0;
        let v = eval_rt0(&m, &FieldCoefficients::new(Space::Rt0, c), 0, Point::new(1.0 / 3.0, 1.0 / 3.0)).unwrap();
        // sign / (2|T|) * (x - 0) with |T| = 1/2
        assert!((v.x - e.sign / 3.0).abs() < 1e-15 && (v.y - e.sign / 3.0).abs() < 1e-15);
        let zero = eval_rt0(&m, &FieldCoefficients::zeros(Space::Rt0, &m), 0, Point::new(0.2, 0.3)).unwrap();
        assert_eq!(zero, Point::default());
    }

    #[test]
    fn divergence_of_single_basis_field() {
        let m = reference();
        for i in 0..3 {
            let le = m.triangle_edges(0)[i];
            let mut c = vec![0.0; 3];
            c[le.edge] = 1.0;
            let d = div_rt0(&m, &FieldCoefficients::new(Space::Rt0, c), 0).unwrap();
            assert!((d - 2.0 * le.sign).abs() < 1e-15);
        }
        assert_eq!(div_rt0(&m, &FieldCoefficients::zeros(Space::Rt0, &m), 0).unwrap(), 0.0);
    }

    #[test]
    fn wrong_space_rejected() {
        let m = reference();
        let f = FieldCoefficients::zeros(Space::P1, &m);
        assert!(matches!(eval_rt0(&m, &f, 0, Point::default()), Err(Error::WrongSpace { .. })));
        let g = FieldCoefficients::zeros(Space::Rt0, &m);
        assert!(eval_p1(&m, &g, 0, Point::default()).is_err());
    }

    #[test]
    fn flux_dofs_are_unisolvent() {
        let m = Mesh::lshape().uniform_refine();
        for t in 0..m.n_triangles() {
            let basis = rt0_basis(&m, t);
            let v = m.coords(t);
            for (j, le) in m.triangle_edges(t).iter().enumerate() {
                let a = v[(j + 1) % 3];
                let b = v[(j + 2) % 3];
                let n = m.edge_normal(le.edge);
                for (i, phi) in basis.iter().enumerate() {
                    // flux along the canonical normal of edge j
                    let flux = EDGE_DEG3.integrate(a, b, |x| phi.eval(x).dot(n));
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((flux - expect).abs() < 1e-12, "t {t} basis {i} edge {j}: {flux}");
                }
            }
        }
    }

    #[test]
    fn rot_vanishes_identically() {
        let m = Mesh::unit_square(3).unwrap();
        let c: Vec<f64> = (0..m.n_edges()).map(|e| (e as f64 * 0.37).sin()).collect();
        for t in 0..m.n_triangles() {
            assert_eq!(rt0_local(&m, &c, t).rot(), 0.0);
        }
    }

    #[test]
    fn divergence_theorem_identity() {
        let m = Mesh::unit_square(2).unwrap();
        let c: Vec<f64> = (0..m.n_edges()).map(|e| (e as f64).cos()).collect();
        let f = FieldCoefficients::new(Space::Rt0, c.clone());
        for t in 0..m.n_triangles() {
            let signed: f64 = m.triangle_edges(t).iter().map(|le| le.sign * c[le.edge]).sum();
            assert!((m.area(t) * div_rt0(&m, &f, t).unwrap() - signed).abs() < 1e-14);
            assert!((rt0_local(&m, &c, t).div() - div_rt0(&m, &f, t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn p1_reproduces_linears() {
        let m = Mesh::lshape();
        let xs = FieldCoefficients::interpolate(Space::P1, &m, |p| p.x).unwrap();
        let cs = FieldCoefficients::new(Space::P1, vec![2.5; m.n_vertices()]);
        for t in 0..m.n_triangles() {
            let c = m.centroid(t);
            let q = Point::new(0.7 * c.x + 0.3 * m.coords(t)[0].x, 0.7 * c.y + 0.3 * m.coords(t)[0].y);
            assert!((eval_p1(&m, &xs, t, q).unwrap() - q.x).abs() < 1e-14);
            let g = grad_p1(&m, &xs, t).unwrap();
            assert!((g.x - 1.0).abs() < 1e-14 && g.y.abs() < 1e-14);
            let g0 = grad_p1(&m, &cs, t).unwrap();
            assert!(g0.x.abs() < 1e-14 && g0.y.abs() < 1e-14);
        }
    }

    #[test]
    fn hat_on_boundary_edge_integrates_to_half() {
        let m = reference();
        let mut c = vec![0.0; 3];
        c[0] = 1.0;
        let hat = FieldCoefficients::new(Space::P1, c);
        let q = EDGE_DEG3.integrate(Point::new(0.0, 0.0), Point::new(1.0, 0.0), |x| eval_p1(&m, &hat, 0, x).unwrap());
        assert!((q - 0.5).abs() < 1e-15);
        let area = TRI_DEG4.integrate(&m.coords(0), |x| eval_p1(&m, &hat, 0, x).unwrap());
        assert!((area - 1.0 / 6.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn normal_component_is_continuous(seed in 0u64..1000, n in 1usize..4) {
            let m = Mesh::unit_square(n).unwrap().nvb_refine(&[0]).unwrap();
            let c: Vec<f64> = (0..m.n_edges()).map(|e| ((e as u64 * 2654435761 + seed) % 1000) as f64 / 500.0 - 1.0).collect();
            for e in m.interior_edges() {
                let edge = m.edges()[e];
                let [a, b] = m.edge_endpoints(e);
                let mid = a.midpoint(b);
                let nrm = m.edge_normal(e);
                let plus = rt0_local(&m, &c, edge.neighbors[0].unwrap()).eval(mid).dot(nrm);
                let minus = rt0_local(&m, &c, edge.neighbors[1].unwrap()).eval(mid).dot(nrm);
                prop_assert!((plus - minus).abs() < 1e-12);
                // flux density equals the DOF over the edge length
                prop_assert!((plus * m.edge_length(e) - c[e]).abs() < 1e-12);
            }
        }

        #[test]
        fn hats_partition_unity(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let m = Mesh::unit_square(3).unwrap();
            let p = Point::new(x, y);
            for t in 0..m.n_triangles() {
                let s: f64 = barycentric(&m, t, p).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
