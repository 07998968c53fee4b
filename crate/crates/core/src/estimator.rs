//! Residual a posteriori estimator and Dörfler marking.
//!
//! Sixteen aggregate terms: six volume residuals per triangle, five jump
//! residuals per interior edge and five residuals per boundary edge. The
//! boundary control residual carries the target control,
//! `alpha d(u_h - u_d)/dn + r_h.n`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::femspaces::{div_rt0_raw, eval_p1_raw, grad_p1_raw, rt0_local};
use crate::mesh::Mesh;
use crate::problems::ControlProblem;
use crate::quadrature::{EDGE_DEG7, TRI_DEG8};
use crate::solver::DiscreteSolution;

pub const N_VOLUME: usize = 6;
pub const N_EDGE: usize = 5;
pub const N_TERMS: usize = N_VOLUME + 2 * N_EDGE;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EstimatorOptions {
    /// Use `[d(u_h - I u_d)/dn]` with the nodal interpolant `I u_d` instead
    /// of `[du_h/dn]` in the interior control jump. The exact `u_d` of a
    /// smooth target has no normal jump, so the default leaves it out.
    pub subtract_target_in_jump: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorField {
    /// Local volume residuals per triangle.
    pub volume: Vec<[f64; N_VOLUME]>,
    /// Local edge residuals per edge. Interior edges hold the five jump
    /// terms, boundary edges the five boundary terms.
    pub edge: Vec<[f64; N_EDGE]>,
    pub boundary: Vec<bool>,
    /// Aggregates `eta_1 .. eta_16` (index 0 holds `eta_1`).
    pub aggregates: [f64; N_TERMS],
    pub total: f64,
    /// Per-element marking indicator.
    pub mu: Vec<f64>,
}

impl IndicatorField {
    pub fn aggregate(&self, i: usize) -> f64 {
        assert!((1..=N_TERMS).contains(&i), "estimator terms are numbered 1..=16");
        self.aggregates[i - 1]
    }
}

pub fn compute_indicators(sol: &DiscreteSolution, problem: &ControlProblem, mesh: &Mesh) -> Result<IndicatorField> {
    compute_indicators_with(sol, problem, mesh, &EstimatorOptions::default())
}

pub fn compute_indicators_with(
    sol: &DiscreteSolution,
    problem: &ControlProblem,
    mesh: &Mesh,
    options: &EstimatorOptions,
) -> Result<IndicatorField> {
    sol.check_mesh(mesh)?;
    let data = &problem.data;
    let alpha = sol.alpha;
    let (p, y, r, z, u) = (sol.p.values(), sol.y.values(), sol.r.values(), sol.z.values(), sol.u.values());

    let ud_nodal: Option<Vec<f64>> = options
        .subtract_target_in_jump
        .then(|| mesh.points().iter().map(|&x| data.u_d(x)).collect());

    let mut volume = Vec::with_capacity(mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let v = mesh.coords(t);
        let h = mesh.diameter(t);
        let pl = rt0_local(mesh, p, t);
        let rl = rt0_local(mesh, r, t);
        let div_r = div_rt0_raw(mesh, r, t);
        let div_p = div_rt0_raw(mesh, p, t);
        let mut sq = [0.0; N_VOLUME];
        for (x, w) in TRI_DEG8.mapped(&v) {
            sq[0] += w * (y[t] - data.y_d(x) - div_r).powi(2);
            sq[3] += w * (data.f(x) - div_p).powi(2);
            // y_h and z_h are elementwise constant, so their gradients vanish
            sq[4] += w * pl.eval(x).dot(pl.eval(x));
            sq[5] += w * rl.eval(x).dot(rl.eval(x));
        }
        let area = mesh.area(t);
        sq[1] = area * rl.rot().powi(2);
        sq[2] = area * pl.rot().powi(2);
        sq[4] *= h * h;
        sq[5] *= h * h;
        volume.push(sq.map(f64::sqrt));
    }

    let mut edge = Vec::with_capacity(mesh.n_edges());
    let mut boundary = Vec::with_capacity(mesh.n_edges());
    for (e, ed) in mesh.edges().iter().enumerate() {
        let [a, b] = mesh.edge_endpoints(e);
        let len = mesh.edge_length(e);
        let tan = mesh.edge_tangent(e);
        let nrm = mesh.edge_normal(e);
        let tp = ed.plus();
        let mut sq = [0.0; N_EDGE];
        match ed.neighbors[1] {
            Some(tm) => {
                let (pp, pm) = (rt0_local(mesh, p, tp), rt0_local(mesh, p, tm));
                let (rp, rm) = (rt0_local(mesh, r, tp), rt0_local(mesh, r, tm));
                let mut du = (grad_p1_raw(mesh, u, tp) - grad_p1_raw(mesh, u, tm)).dot(nrm);
                if let Some(ud) = &ud_nodal {
                    du -= (grad_p1_raw(mesh, ud, tp) - grad_p1_raw(mesh, ud, tm)).dot(nrm);
                }
                for (x, _, w) in EDGE_DEG7.mapped(a, b) {
                    sq[0] += w * (rp.eval(x) - rm.eval(x)).dot(tan).powi(2);
                    sq[1] += w * (pp.eval(x) - pm.eval(x)).dot(tan).powi(2);
                    sq[4] += w * (alpha * du).powi(2);
                }
                sq[2] = len * (y[tp] - y[tm]).powi(2);
                sq[3] = len * (z[tp] - z[tm]).powi(2);
            }
            None => {
                let pl = rt0_local(mesh, p, tp);
                let rl = rt0_local(mesh, r, tp);
                let gu = grad_p1_raw(mesh, u, tp);
                for (x, _, w) in EDGE_DEG7.mapped(a, b) {
                    let rn = rl.eval(x).dot(nrm);
                    let control = alpha * (gu - data.grad_u_d(x)).dot(nrm) + rn;
                    sq[0] += w * control.powi(2);
                    sq[1] += w * (gu.dot(tan) + pl.eval(x).dot(tan)).powi(2);
                    sq[2] += w * (eval_p1_raw(mesh, u, tp, x) - y[tp]).powi(2);
                    sq[4] += w * rl.eval(x).dot(tan).powi(2);
                }
                sq[3] = len * z[tp].powi(2);
            }
        }
        // |e|^{1/2} ||.||_{L2(e)} squared
        edge.push(sq.map(|s| (len * s).sqrt()));
        boundary.push(ed.is_boundary());
    }

    Ok(assemble_field(mesh, volume, edge, boundary))
}

fn assemble_field(mesh: &Mesh, volume: Vec<[f64; N_VOLUME]>, edge: Vec<[f64; N_EDGE]>, boundary: Vec<bool>) -> IndicatorField {
    let mut agg_sq = [0.0; N_TERMS];
    let mut mu_sq: Vec<f64> = volume.iter().map(|v| v.iter().map(|x| x * x).sum()).collect();
    for v in &volume {
        for i in 0..N_VOLUME {
            agg_sq[i] += v[i] * v[i];
        }
    }
    for (e, ed) in mesh.edges().iter().enumerate() {
        let local: f64 = edge[e].iter().map(|x| x * x).sum();
        let offset = if boundary[e] { N_VOLUME + N_EDGE } else { N_VOLUME };
        for i in 0..N_EDGE {
            agg_sq[offset + i] += edge[e][i] * edge[e][i];
        }
        match ed.neighbors {
            [Some(a), Some(b)] => {
                mu_sq[a] += 0.5 * local;
                mu_sq[b] += 0.5 * local;
            }
            [Some(a), None] => mu_sq[a] += local,
            _ => unreachable!("edge without a first neighbor"),
        }
    }
    let total = agg_sq.iter().sum::<f64>().sqrt();
    IndicatorField {
        volume,
        edge,
        boundary,
        aggregates: agg_sq.map(f64::sqrt),
        total,
        mu: mu_sq.into_iter().map(f64::sqrt).collect(),
    }
}

/// Minimal set of elements carrying a `theta` fraction of the squared
/// indicator mass.
///
/// Elements are taken greedily by descending `mu^2`, ties broken by the
/// smaller index. The result is sorted ascending.
pub fn dorfler_mark(mu: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!("marking parameter must lie in [0, 1], got {theta}")));
    }
    if let Some(i) = mu.iter().position(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::invalid(format!("indicator {i} is {}", mu[i])));
    }
    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.sort_by(|&a, &b| (mu[b] * mu[b]).total_cmp(&(mu[a] * mu[a])).then(a.cmp(&b)));
    let mut marked = Vec::new();
    if theta == 1.0 {
        // Floating-point sums can reach the total before tiny positive
        // indicators are added; the full criterion needs every one of them.
        marked.extend(order.iter().copied().filter(|&i| mu[i] > 0.0));
    } else {
        let total: f64 = order.iter().map(|&i| mu[i] * mu[i]).sum();
        let goal = theta * total;
        let mut acc = 0.0;
        for &i in &order {
            if acc >= goal {
                break;
            }
            acc += mu[i] * mu[i];
            marked.push(i);
        }
    }
    marked.sort_unstable();
    Ok(marked)
}

pub fn aggregates_csv_header() -> String {
    let mut s = String::from("level,dofs");
    for i in 1..=N_TERMS {
        s.push_str(&format!(",eta{i}"));
    }
    s.push_str(",eta_h");
    s
}

pub fn aggregates_csv_row(level: usize, dofs: usize, field: &IndicatorField) -> String {
    let mut s = format!("{level},{dofs}");
    for v in field.aggregates {
        s.push_str(&format!(",{v:.5e}"));
    }
    s.push_str(&format!(",{:.5e}", field.total));
    s
}

/// One row of aggregates per level.
pub fn write_aggregates_csv<'a>(
    mut w: impl Write,
    rows: impl IntoIterator<Item = (usize, usize, &'a IndicatorField)>,
) -> Result<()> {
    writeln!(w, "{}", aggregates_csv_header())?;
    for (level, dofs, field) in rows {
        writeln!(w, "{}", aggregates_csv_row(level, dofs, field))?;
    }
    Ok(())
}
