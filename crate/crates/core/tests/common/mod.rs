//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use mixed_dbc::mesh::{Mesh, Point};
use mixed_dbc::problems::{ControlProblem, Domain, FnData};
use rand::Rng;

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        assert!(a[k][k].abs() > 1e-14, "dense oracle matrix is singular");
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// `c0 + c1 x + c2 y + c3 x^2 + c4 xy + c5 y^2`.
#[derive(Clone, Copy, Debug)]
pub struct Quadratic(pub [f64; 6]);

impl Quadratic {
    pub fn random(rng: &mut impl Rng) -> Self {
        Quadratic(std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
    }

    pub fn eval(&self, p: Point) -> f64 {
        let c = self.0;
        c[0] + c[1] * p.x + c[2] * p.y + c[3] * p.x * p.x + c[4] * p.x * p.y + c[5] * p.y * p.y
    }

    pub fn grad(&self, p: Point) -> Point {
        let c = self.0;
        Point::new(c[1] + 2.0 * c[3] * p.x + c[4] * p.y, c[2] + c[4] * p.x + 2.0 * c[5] * p.y)
    }
}

pub struct OracleData {
    pub f: Quadratic,
    pub y_d: Quadratic,
    pub u_d: Quadratic,
    pub alpha: f64,
}

pub fn random_quadratic_problem(rng: &mut impl Rng) -> (ControlProblem, OracleData) {
    let data = OracleData {
        f: Quadratic::random(rng),
        y_d: Quadratic::random(rng),
        u_d: Quadratic::random(rng),
        alpha: rng.random_range(0.5..2.0),
    };
    let (f, y_d, u_d) = (data.f, data.y_d, data.u_d);
    let fns = FnData {
        f: Arc::new(move |p| f.eval(p)),
        y_d: Arc::new(move |p| y_d.eval(p)),
        u_d: Arc::new(move |p| u_d.eval(p)),
        grad_u_d: Arc::new(move |p| u_d.grad(p)),
    };
    let problem = ControlProblem::with_data("oracle", Domain::UnitSquare, data.alpha, Arc::new(fns)).unwrap();
    (problem, data)
}

pub struct OracleSystem {
    pub matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    n_edges: usize,
    n_tri: usize,
    n_vert: usize,
    /// Library edge index and sign for each oracle edge.
    edge_map: Vec<(usize, f64)>,
}

impl OracleSystem {
    /// Reorders and re-signs an oracle solution vector into the library's
    /// `(p, y, r, z, u)` layout.
    pub fn to_library_order(&self, x: &[f64]) -> Vec<f64> {
        let (ne, nt, nv) = (self.n_edges, self.n_tri, self.n_vert);
        let mut out = vec![0.0; x.len()];
        let offsets = [0, ne, ne + nt, 2 * ne + nt, 2 * ne + 2 * nt];
        for block in [0, 2] {
            for (k, &(e, s)) in self.edge_map.iter().enumerate() {
                out[offsets[block] + e] = s * x[offsets[block] + k];
            }
        }
        for block in [1, 3] {
            out[offsets[block]..offsets[block] + nt].copy_from_slice(&x[offsets[block]..offsets[block] + nt]);
        }
        out[offsets[4]..offsets[4] + nv].copy_from_slice(&x[offsets[4]..offsets[4] + nv]);
        out
    }
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Three-point rule at the edge midpoints, exact for quadratics.
fn midpoint_rule(v: [Point; 3]) -> [(Point, f64); 3] {
    let area = 0.5 * cross(v[1] - v[0], v[2] - v[0]);
    [
        (v[0].midpoint(v[1]), area / 3.0),
        (v[1].midpoint(v[2]), area / 3.0),
        (v[2].midpoint(v[0]), area / 3.0),
    ]
}

/// Assembles the dense optimality system from basis functions built by
/// solving the flux conditions on every triangle.
pub fn oracle_kkt(mesh: &Mesh, data: &OracleData) -> OracleSystem {
    let pts = mesh.points();
    let tris: Vec<[usize; 3]> = mesh.triangles().iter().map(|t| t.vertices).collect();
    let nt = tris.len();
    let nv = pts.len();

    // edges keyed by sorted pair, normal = outward normal of the first
    // triangle that lists the edge
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edge_normal: Vec<Point> = Vec::new();
    let mut edge_verts: Vec<(usize, usize)> = Vec::new();
    let mut edge_count: Vec<usize> = Vec::new();
    let mut local: Vec<[usize; 3]> = Vec::new();
    for t in &tris {
        let mut l = [0; 3];
        for j in 0..3 {
            let (a, b) = (t[j], t[(j + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let d = pts[b] - pts[a];
            let out = Point::new(d.y, -d.x) * (1.0 / d.norm());
            let idx = *edge_index.entry(key).or_insert_with(|| {
                edge_normal.push(out);
                edge_verts.push(key);
                edge_count.push(0);
                edge_normal.len() - 1
            });
            edge_count[idx] += 1;
            l[j] = idx;
        }
        local.push(l);
    }
    let ne = edge_normal.len();

    // basis on each triangle: phi_j = (a1 + b x, a2 + b y) with
    // int_{e_k} phi_j . n_k = delta_jk, n_k the oracle normal
    let mut basis: Vec<[(f64, f64, f64); 3]> = Vec::with_capacity(nt);
    for (ti, t) in tris.iter().enumerate() {
        let mut rows = vec![vec![0.0; 3]; 3];
        for k in 0..3 {
            let (a, b) = (pts[t[k]], pts[t[(k + 1) % 3]]);
            let len = (b - a).norm();
            let n = edge_normal[local[ti][k]];
            let m = a.midpoint(b);
            rows[k] = vec![len * n.x, len * n.y, len * m.dot(n)];
        }
        let mut phis = [(0.0, 0.0, 0.0); 3];
        for j in 0..3 {
            let rhs: Vec<f64> = (0..3).map(|k| if k == j { 1.0 } else { 0.0 }).collect();
            let c = dense_solve(rows.clone(), rhs);
            phis[j] = (c[0], c[1], c[2]);
        }
        basis.push(phis);
    }
    let eval = |c: (f64, f64, f64), x: Point| Point::new(c.0 + c.2 * x.x, c.1 + c.2 * x.y);

    let n = 2 * ne + 2 * nt + nv;
    let (op, oy, or, oz, ou) = (0, ne, ne + nt, 2 * ne + nt, 2 * ne + 2 * nt);
    let mut a = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    let mut stiff = vec![vec![0.0; nv]; nv];

    for (ti, t) in tris.iter().enumerate() {
        let v = [pts[t[0]], pts[t[1]], pts[t[2]]];
        let area = 0.5 * cross(v[1] - v[0], v[2] - v[0]);
        let rule = midpoint_rule(v);
        for i in 0..3 {
            let ei = local[ti][i];
            for j in 0..3 {
                let ej = local[ti][j];
                let m: f64 = rule.iter().map(|&(x, w)| w * eval(basis[ti][i], x).dot(eval(basis[ti][j], x))).sum();
                a[op + ei][op + ej] += m;
                a[or + ei][or + ej] += m;
            }
            let div = 2.0 * basis[ti][i].2 * area;
            // -B^T in rows p and r, B in rows y and z
            a[op + ei][oy + ti] -= div;
            a[or + ei][oz + ti] -= div;
            a[oy + ti][op + ei] += div;
            a[oz + ti][or + ei] += div;
        }
        a[oz + ti][oy + ti] -= area;
        rhs[oy + ti] = rule.iter().map(|&(x, w)| w * data.f.eval(x)).sum();
        rhs[oz + ti] = -rule.iter().map(|&(x, w)| w * data.y_d.eval(x)).sum::<f64>();

        // P1 gradients from the barycentric coordinate system
        let grads: Vec<Point> = (0..3)
            .map(|i| {
                let (b, c) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                let d = c - b;
                Point::new(-d.y, d.x) * (-0.5 / area)
            })
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                stiff[t[i]][t[j]] += area * grads[i].dot(grads[j]);
            }
        }
    }

    // boundary coupling <phi_e . n_out, lambda_a> with a two-point Gauss rule
    let g = 0.5 / 3f64.sqrt();
    for (ti, t) in tris.iter().enumerate() {
        for k in 0..3 {
            let e = local[ti][k];
            if edge_count[e] != 1 {
                continue;
            }
            let (ia, ib) = (t[k], t[(k + 1) % 3]);
            let (pa, pb) = (pts[ia], pts[ib]);
            let len = (pb - pa).norm();
            let d = pb - pa;
            let n_out = Point::new(d.y, -d.x) * (1.0 / len);
            for s in [0.5 - g, 0.5 + g] {
                let x = pa + d * s;
                let val = eval(basis[ti][k], x).dot(n_out) * 0.5 * len;
                a[op + e][ou + ia] += val * (1.0 - s);
                a[op + e][ou + ib] += val * s;
                a[ou + ia][or + e] += val * (1.0 - s);
                a[ou + ib][or + e] += val * s;
            }
        }
    }

    let ud: Vec<f64> = pts.iter().map(|&p| data.u_d.eval(p)).collect();
    for i in 0..nv {
        for j in 0..nv {
            a[ou + i][ou + j] += data.alpha * stiff[i][j];
            rhs[ou + i] += data.alpha * stiff[i][j] * ud[j];
        }
    }

    // match oracle edges to library edges through the vertex pair
    let lib: HashMap<(usize, usize), usize> = mesh.edges().iter().enumerate().map(|(i, e)| (e.key(), i)).collect();
    let edge_map = edge_verts
        .iter()
        .enumerate()
        .map(|(k, key)| {
            let e = lib[key];
            let s = if edge_normal[k].dot(mesh.edge_normal(e)) > 0.0 { 1.0 } else { -1.0 };
            (e, s)
        })
        .collect();

    OracleSystem {
        matrix: a,
        rhs,
        n_edges: ne,
        n_tri: nt,
        n_vert: nv,
        edge_map,
    }
}
