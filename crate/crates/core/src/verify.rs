//! Error norms against exact solutions, convergence orders and the uniform
//! and adaptive study drivers.

use std::io::Write;

use crate::error::{Error, Result};
use crate::estimator::{compute_indicators, dorfler_mark, IndicatorField};
use crate::femspaces::{div_rt0_raw, eval_p1_raw, grad_p1_raw, rt0_local};
use crate::mesh::Mesh;
use crate::problems::{ControlProblem, ExactSolution};
use crate::quadrature::TRI_DEG8;
use crate::solver::{solve_optimality, DiscreteSolution};

/// Error norms of one discrete solution. The `H(div)` norm is
/// `||v|| + ||div v||`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    pub y_l2: f64,
    pub z_l2: f64,
    pub u_l2: f64,
    pub p_hdiv: f64,
    pub r_hdiv: f64,
    /// Full `H^1` norm `(||e||^2 + |e|_1^2)^{1/2}`.
    pub u_h1: f64,
    pub u_semi: f64,
}

impl ErrorNorms {
    /// `|u - u_h|_1 + ||z - z_h|| + ||y - y_h|| + ||p - p_h||_div + ||r - r_h||_div`,
    /// the quantity the estimator bounds.
    pub fn total(&self) -> f64 {
        self.u_semi + self.z_l2 + self.y_l2 + self.p_hdiv + self.r_hdiv
    }

    /// The six tabulated columns in CSV order.
    pub fn columns(&self) -> [f64; 6] {
        [self.y_l2, self.z_l2, self.u_l2, self.p_hdiv, self.r_hdiv, self.u_h1]
    }
}

pub const ERROR_COLUMNS: [&str; 6] = ["err_y", "err_z", "err_u", "err_p_hdiv", "err_r_hdiv", "err_u_h1"];

pub fn compute_errors(sol: &DiscreteSolution, exact: &dyn ExactSolution, mesh: &Mesh) -> Result<ErrorNorms> {
    sol.check_mesh(mesh)?;
    let (p, y, r, z, u) = (sol.p.values(), sol.y.values(), sol.r.values(), sol.z.values(), sol.u.values());
    // squared contributions: y, z, u, p, div p, r, div r, grad u
    let mut sq = [0.0f64; 8];
    for t in 0..mesh.n_triangles() {
        let v = mesh.coords(t);
        let pl = rt0_local(mesh, p, t);
        let rl = rt0_local(mesh, r, t);
        let (div_p, div_r) = (div_rt0_raw(mesh, p, t), div_rt0_raw(mesh, r, t));
        let gu = grad_p1_raw(mesh, u, t);
        for (x, w) in TRI_DEG8.mapped(&v) {
            let dp = exact.p(x) - pl.eval(x);
            let dr = exact.r(x) - rl.eval(x);
            let dg = exact.grad_u(x) - gu;
            sq[0] += w * (exact.y(x) - y[t]).powi(2);
            sq[1] += w * (exact.z(x) - z[t]).powi(2);
            sq[2] += w * (exact.u(x) - eval_p1_raw(mesh, u, t, x)).powi(2);
            sq[3] += w * dp.dot(dp);
            sq[4] += w * (exact.div_p(x) - div_p).powi(2);
            sq[5] += w * dr.dot(dr);
            sq[6] += w * (exact.div_r(x) - div_r).powi(2);
            sq[7] += w * dg.dot(dg);
        }
    }
    let s = sq.map(f64::sqrt);
    Ok(ErrorNorms {
        y_l2: s[0],
        z_l2: s[1],
        u_l2: s[2],
        p_hdiv: s[3] + s[4],
        r_hdiv: s[5] + s[6],
        u_h1: (sq[2] + sq[7]).sqrt(),
        u_semi: s[7],
    })
}

/// Empirical order between two successive halvings of `h`.
pub fn eoc(e_coarse: f64, e_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(Error::invalid(format!(
            "convergence order needs positive errors, got {e_coarse} and {e_fine}"
        )));
    }
    Ok((e_coarse / e_fine).log2())
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("slope needs at least two paired samples"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("log-log slope needs positive samples"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("log-log slope needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRecord {
    /// Uniform studies: `h = 2^-level`. Adaptive studies: refinement step.
    pub level: usize,
    /// Largest element diameter.
    pub h: f64,
    pub n_triangles: usize,
    pub dofs: usize,
    pub errors: Option<ErrorNorms>,
    pub eta: f64,
    /// Orders for the six error columns against the previous record.
    pub eoc: [Option<f64>; 6],
}

impl StudyRecord {
    pub fn total_error(&self) -> Option<f64> {
        self.errors.map(|e| e.total())
    }

    /// `eta / total error`, when both are available and the error is nonzero.
    pub fn efficiency(&self) -> Option<f64> {
        self.total_error().filter(|&e| e > 0.0).map(|e| self.eta / e)
    }
}

/// `2 n_rt + 2 n_p0 + n_p1`.
pub fn n_dofs(mesh: &Mesh) -> usize {
    2 * mesh.n_edges() + 2 * mesh.n_triangles() + mesh.n_vertices()
}

fn record(level: usize, mesh: &Mesh, problem: &ControlProblem, sol: &DiscreteSolution, eta: &IndicatorField) -> Result<StudyRecord> {
    let errors = match &problem.exact {
        Some(exact) => Some(compute_errors(sol, exact.as_ref(), mesh)?),
        None => None,
    };
    Ok(StudyRecord {
        level,
        h: mesh.h_max(),
        n_triangles: mesh.n_triangles(),
        dofs: n_dofs(mesh),
        errors,
        eta: eta.total,
        eoc: [None; 6],
    })
}

/// Solves on `levels` uniformly refined meshes, `h = 2^-2, 2^-3, ...`.
pub fn run_uniform_study(problem: &ControlProblem, levels: usize) -> Result<Vec<StudyRecord>> {
    run_uniform_study_with(problem, levels, |_, _, _, _| Ok(()))
}

/// Like [`run_uniform_study`], handing every level's mesh, solution and
/// indicators to `observe`.
pub fn run_uniform_study_with(
    problem: &ControlProblem,
    levels: usize,
    mut observe: impl FnMut(usize, &Mesh, &DiscreteSolution, &IndicatorField) -> Result<()>,
) -> Result<Vec<StudyRecord>> {
    if levels < 1 {
        return Err(Error::invalid("a uniform study needs at least one level"));
    }
    let mut out: Vec<StudyRecord> = Vec::with_capacity(levels);
    let mut mesh = problem.domain.mesh(2)?;
    for k in 2..levels + 2 {
        let mut run = || -> Result<StudyRecord> {
            let sol = solve_optimality(problem, &mesh)?;
            let eta = compute_indicators(&sol, problem, &mesh)?;
            observe(k, &mesh, &sol, &eta)?;
            record(k, &mesh, problem, &sol, &eta)
        };
        let mut rec = run().map_err(|e| e.at_level(k))?;
        if let (Some(prev), Some(cur)) = (out.last().and_then(|r| r.errors), rec.errors) {
            let (a, b) = (prev.columns(), cur.columns());
            for i in 0..6 {
                rec.eoc[i] = eoc(a[i], b[i]).ok();
            }
        }
        out.push(rec);
        if k + 1 < levels + 2 {
            mesh = mesh.uniform_refine();
        }
    }
    Ok(out)
}

/// SOLVE, ESTIMATE, MARK, REFINE from the coarse mesh of the problem's
/// domain until the number of unknowns exceeds `max_dofs`.
pub fn run_adaptive_study(problem: &ControlProblem, theta: f64, max_dofs: usize) -> Result<Vec<StudyRecord>> {
    run_adaptive_study_with(problem, theta, max_dofs, |_, _, _, _| Ok(()))
}

pub fn run_adaptive_study_with(
    problem: &ControlProblem,
    theta: f64,
    max_dofs: usize,
    mut observe: impl FnMut(usize, &Mesh, &DiscreteSolution, &IndicatorField) -> Result<()>,
) -> Result<Vec<StudyRecord>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid(format!("marking parameter must lie in (0, 1], got {theta}")));
    }
    let mut mesh = problem.domain.initial_mesh();
    if max_dofs <= n_dofs(&mesh) {
        return Err(Error::invalid(format!(
            "max_dofs = {max_dofs} does not exceed the {} unknowns of the initial mesh",
            n_dofs(&mesh)
        )));
    }
    let mut out = Vec::new();
    for step in 0.. {
        let mut run = || -> Result<(StudyRecord, Vec<usize>)> {
            let sol = solve_optimality(problem, &mesh)?;
            let eta = compute_indicators(&sol, problem, &mesh)?;
            observe(step, &mesh, &sol, &eta)?;
            let rec = record(step, &mesh, problem, &sol, &eta)?;
            Ok((rec, dorfler_mark(&eta.mu, theta)?))
        };
        let (rec, marked) = run().map_err(|e| e.at_level(step))?;
        let dofs = rec.dofs;
        out.push(rec);
        if dofs > max_dofs {
            break;
        }
        if marked.is_empty() {
            // The estimator vanished; the discrete solution is exact.
            break;
        }
        mesh = mesh.nvb_refine(&marked).map_err(|e| e.at_level(step))?;
    }
    Ok(out)
}

pub fn study_csv_header() -> String {
    let mut cols = vec!["level", "h", "n_triangles", "dofs"];
    cols.extend(ERROR_COLUMNS);
    cols.extend(["total_error", "eta", "efficiency"]);
    let eocs: Vec<String> = ERROR_COLUMNS.iter().map(|c| format!("eoc_{}", &c[4..])).collect();
    let mut s = cols.join(",");
    for e in eocs {
        s.push(',');
        s.push_str(&e);
    }
    s
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.5e}")).unwrap_or_default()
}

pub fn study_csv_row(r: &StudyRecord) -> String {
    let mut f: Vec<String> = vec![r.level.to_string(), format!("{:.5e}", r.h), r.n_triangles.to_string(), r.dofs.to_string()];
    let cols = r.errors.map(|e| e.columns());
    for i in 0..6 {
        f.push(fmt_opt(cols.map(|c| c[i])));
    }
    f.push(fmt_opt(r.total_error()));
    f.push(format!("{:.5e}", r.eta));
    f.push(fmt_opt(r.efficiency()));
    for e in r.eoc {
        f.push(e.map(|x| format!("{x:.4}")).unwrap_or_default());
    }
    f.join(",")
}

pub fn write_study_csv(mut w: impl Write, records: &[StudyRecord]) -> Result<()> {
    writeln!(w, "{}", study_csv_header())?;
    for r in records {
        writeln!(w, "{}", study_csv_row(r))?;
    }
    Ok(())
}

/// Gnuplot script plotting the columns of `csv_name` on log-log axes:
/// errors against `h` for uniform studies, estimator and total error
/// against the number of unknowns for adaptive ones.
pub fn gnuplot_script(csv_name: &str, adaptive: bool) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset logscale xy\nset key bottom right\nset grid\n");
    s.push_str("set terminal pngcairo size 900,650\n");
    let stem = csv_name.trim_end_matches(".csv");
    s.push_str(&format!("set output '{stem}.png'\n"));
    if adaptive {
        s.push_str("set xlabel 'unknowns'\n");
        s.push_str(&format!(
            "plot '{csv_name}' using 4:11 with linespoints title 'total error', \\\n     '' using 4:12 with linespoints title 'estimator', \\\n     '' using 4:(0.5*$4**-0.5) with lines dashtype 2 title 'slope -1/2'\n"
        ));
    } else {
        s.push_str("set xlabel 'h'\n");
        let mut parts = Vec::new();
        for (i, name) in ERROR_COLUMNS.iter().enumerate() {
            let src = if i == 0 { format!("'{csv_name}'") } else { "''".to_string() };
            parts.push(format!("{src} using 2:{} with linespoints title '{}'", 5 + i, &name[4..]));
        }
        s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    }
    s
}
