//! The five-field discrete optimality system and the auxiliary mixed
//! Poisson problem.
//!
//! Unknowns are ordered `(p, y, r, z, u)` and the block rows read
//!
//! ```text
//! M p - B^T y           + C u   = 0
//! B p                           = F
//!           M r - B^T z         = 0
//! -N y + B r                    = -G_d
//!        C^T r        + a K u   = a K u_d
//! ```
//!
//! where `a` is the regularization parameter. Setting `u_d = 0` gives the
//! unmodified system.

use crate::assembly::{assemble_blocks_with, AssembledBlocks, TargetControlLoad};
use crate::error::{Error, Result};
use crate::femspaces::{div_rt0_raw, DofLayout, FieldCoefficients, Space};
use crate::linsolve::{solve_sparse, LinearSystem};
use crate::mesh::{Mesh, Point};
use crate::problems::ControlProblem;
use crate::sparse::{SparseMatrix, TripletBuilder};

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSolution {
    pub p: FieldCoefficients,
    pub y: FieldCoefficients,
    pub r: FieldCoefficients,
    pub z: FieldCoefficients,
    pub u: FieldCoefficients,
    pub alpha: f64,
}

impl DiscreteSolution {
    pub fn zeros(mesh: &Mesh, alpha: f64) -> Self {
        DiscreteSolution {
            p: FieldCoefficients::zeros(Space::Rt0, mesh),
            y: FieldCoefficients::zeros(Space::P0, mesh),
            r: FieldCoefficients::zeros(Space::Rt0, mesh),
            z: FieldCoefficients::zeros(Space::P0, mesh),
            u: FieldCoefficients::zeros(Space::P1, mesh),
            alpha,
        }
    }

    /// Splits a monolithic vector in `(p, y, r, z, u)` order.
    pub fn from_monolithic(layout: &DofLayout, x: &[f64], alpha: f64) -> Self {
        let [p, y, r, z, u] = layout.blocks().map(|(o, n)| x[o..o + n].to_vec());
        DiscreteSolution {
            p: FieldCoefficients::new(Space::Rt0, p),
            y: FieldCoefficients::new(Space::P0, y),
            r: FieldCoefficients::new(Space::Rt0, r),
            z: FieldCoefficients::new(Space::P0, z),
            u: FieldCoefficients::new(Space::P1, u),
            alpha,
        }
    }

    pub fn to_monolithic(&self) -> Vec<f64> {
        [&self.p, &self.y, &self.r, &self.z, &self.u]
            .iter()
            .flat_map(|f| f.values().iter().copied())
            .collect()
    }

    /// Checks that every field fits `mesh`.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        self.p.expect(Space::Rt0, mesh)?;
        self.y.expect(Space::P0, mesh)?;
        self.r.expect(Space::Rt0, mesh)?;
        self.z.expect(Space::P0, mesh)?;
        self.u.expect(Space::P1, mesh)?;
        Ok(())
    }

    pub fn n_dofs(&self) -> usize {
        self.p.len() + self.y.len() + self.r.len() + self.z.len() + self.u.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixedPoissonSolution {
    pub s: FieldCoefficients,
    pub k: FieldCoefficients,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub target_load: TargetControlLoad,
    /// Re-check the algebraic invariants after the solve and fail if they
    /// are violated. On by default in debug builds.
    pub verify: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            target_load: TargetControlLoad::default(),
            verify: cfg!(debug_assertions),
        }
    }
}

/// Monolithic KKT matrix and right-hand side.
pub fn kkt_system(blocks: &AssembledBlocks, alpha: f64) -> Result<LinearSystem> {
    let l = blocks.layout;
    let n = l.total();
    let nnz = 2 * blocks.mass_rt.nnz() + 4 * blocks.div.nnz() + 2 * blocks.trace.nnz() + blocks.stiffness.nnz() + l.n_p0;
    let mut a = TripletBuilder::with_capacity(n, n, nnz);
    // row p
    a.push_block(l.p(), l.p(), &blocks.mass_rt, 1.0);
    a.push_block_transposed(l.p(), l.y(), &blocks.div, -1.0);
    a.push_block(l.p(), l.u(), &blocks.trace, 1.0);
    // row y
    a.push_block(l.y(), l.p(), &blocks.div, 1.0);
    // row r
    a.push_block(l.r(), l.r(), &blocks.mass_rt, 1.0);
    a.push_block_transposed(l.r(), l.z(), &blocks.div, -1.0);
    // row z
    a.push_block(l.z(), l.r(), &blocks.div, 1.0);
    for (t, &area) in blocks.mass_p0.iter().enumerate() {
        a.push(l.z() + t, l.y() + t, -area);
    }
    // row u
    a.push_block_transposed(l.u(), l.r(), &blocks.trace, 1.0);
    a.push_block(l.u(), l.u(), &blocks.stiffness, alpha);

    let mut rhs = vec![0.0; n];
    rhs[l.y()..l.y() + l.n_p0].copy_from_slice(&blocks.load_f);
    for (t, g) in blocks.load_yd.iter().enumerate() {
        rhs[l.z() + t] = -g;
    }
    for (a_i, g) in blocks.load_ud.iter().enumerate() {
        rhs[l.u() + a_i] = alpha * g;
    }
    LinearSystem::new(a.build(), rhs)
}

pub fn solve_optimality(problem: &ControlProblem, mesh: &Mesh) -> Result<DiscreteSolution> {
    solve_optimality_with(problem, mesh, &SolveOptions::default())
}

pub fn solve_optimality_with(problem: &ControlProblem, mesh: &Mesh, options: &SolveOptions) -> Result<DiscreteSolution> {
    if !(problem.alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {}", problem.alpha)));
    }
    let layout = DofLayout::new(mesh);
    let blocks = assemble_blocks_with(mesh, &layout, problem, options.target_load)?;
    let system = kkt_system(&blocks, problem.alpha)?;
    let x = solve_sparse(&system)?;
    let sol = DiscreteSolution::from_monolithic(&layout, &x, problem.alpha);
    if options.verify {
        let report = InvariantReport::new(mesh, &blocks, &sol);
        report.ensure(1e-8)?;
    }
    Ok(sol)
}

/// Deviations from the algebraic identities every discrete solution obeys.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantReport {
    /// `max_T |div p_h - (f, 1_T) / |T||`.
    pub div_p: f64,
    /// `max_T |div r_h - y_h + (y_d, 1_T) / |T||`.
    pub div_r: f64,
    /// `max_a |a K (u_h - u_d) + C^T r_h|`.
    pub control: f64,
    /// `|sum of r_h over boundary edges|`.
    pub boundary_flux: f64,
    /// Magnitude the deviations are measured against.
    pub scale: f64,
}

impl InvariantReport {
    pub fn new(mesh: &Mesh, blocks: &AssembledBlocks, sol: &DiscreteSolution) -> Self {
        let p = sol.p.values();
        let r = sol.r.values();
        let y = sol.y.values();
        let mut div_p = 0.0f64;
        let mut div_r = 0.0f64;
        let mut scale = 0.0f64;
        for t in 0..mesh.n_triangles() {
            let area = blocks.mass_p0[t];
            let mean_f = blocks.load_f[t] / area;
            let mean_yd = blocks.load_yd[t] / area;
            div_p = div_p.max((div_rt0_raw(mesh, p, t) - mean_f).abs());
            div_r = div_r.max((div_rt0_raw(mesh, r, t) - y[t] + mean_yd).abs());
            scale = scale.max(mean_f.abs()).max(mean_yd.abs()).max(y[t].abs());
        }
        let ku = blocks.stiffness.mul_vec(sol.u.values());
        let ctr = blocks.trace.mul_vec_transposed(r);
        let control = ku
            .iter()
            .zip(&blocks.load_ud)
            .zip(&ctr)
            .map(|((k, g), c)| (sol.alpha * (k - g) + c).abs())
            .fold(0.0, f64::max);
        let boundary_flux = mesh.boundary_edges().map(|e| r[e]).sum::<f64>().abs();
        scale = scale
            .max(blocks.load_ud.iter().fold(0.0, |m, v| m.max(v.abs())))
            .max(sol.u.values().iter().fold(0.0, |m, v| m.max(v.abs())))
            .max(1.0);
        InvariantReport {
            div_p,
            div_r,
            control,
            boundary_flux,
            scale,
        }
    }

    pub fn max_relative(&self) -> f64 {
        self.div_p.max(self.div_r).max(self.control).max(self.boundary_flux) / self.scale
    }

    pub fn ensure(&self, tol: f64) -> Result<()> {
        if self.max_relative() > tol {
            return Err(Error::ResidualContract(self.max_relative()));
        }
        Ok(())
    }
}

/// Relative residual of each block row of the optimality system, tested
/// against every basis function.
pub fn galerkin_residuals(blocks: &AssembledBlocks, sol: &DiscreteSolution) -> Result<[f64; 5]> {
    let system = kkt_system(blocks, sol.alpha)?;
    let x = sol.to_monolithic();
    let ax = system.matrix.mul_vec(&x);
    let layout = blocks.layout;
    let xnorm = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    Ok(layout.blocks().map(|(o, n)| {
        let res = (o..o + n).map(|i| (ax[i] - system.rhs[i]).abs()).fold(0.0, f64::max);
        let rhs = (o..o + n).map(|i| system.rhs[i].abs()).fold(0.0, f64::max);
        res / rhs.max(xnorm)
    }))
}

/// Solves `(k, v) - (s, div v) = -<v.n, g>`, `(div k, w) = (f, w)` with the
/// boundary data replaced by its piecewise linear interpolant.
pub fn solve_mixed_poisson(
    mesh: &Mesh,
    f: impl Fn(Point) -> f64,
    g: impl Fn(Point) -> f64,
) -> Result<MixedPoissonSolution> {
    let layout = DofLayout::new(mesh);
    let zero = crate::problems::zero_problem();
    let mut blocks = crate::assembly::assemble_blocks(mesh, &layout, &zero)?;
    blocks.load_f = crate::assembly::p0_load(mesh, &f);
    let (n_rt, n_p0) = (layout.n_rt, layout.n_p0);
    let n = n_rt + n_p0;
    let mut a = TripletBuilder::new(n, n);
    a.push_block(0, 0, &blocks.mass_rt, 1.0);
    a.push_block_transposed(0, n_rt, &blocks.div, -1.0);
    a.push_block(n_rt, 0, &blocks.div, 1.0);
    let gv: Vec<f64> = mesh.points().iter().map(|&p| g(p)).collect();
    let cg = blocks.trace.mul_vec(&gv);
    let mut rhs: Vec<f64> = cg.iter().map(|v| -v).collect();
    rhs.extend_from_slice(&blocks.load_f);
    let x = solve_sparse(&LinearSystem::new(a.build(), rhs)?)?;
    Ok(MixedPoissonSolution {
        k: FieldCoefficients::new(Space::Rt0, x[..n_rt].to_vec()),
        s: FieldCoefficients::new(Space::P0, x[n_rt..].to_vec()),
    })
}

/// The monolithic matrix, exposed for debugging exports.
pub fn kkt_matrix(problem: &ControlProblem, mesh: &Mesh) -> Result<SparseMatrix> {
    let layout = DofLayout::new(mesh);
    let blocks = crate::assembly::assemble_blocks(mesh, &layout, problem)?;
    Ok(kkt_system(&blocks, problem.alpha)?.matrix)
}
