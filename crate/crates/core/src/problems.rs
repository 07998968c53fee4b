//! Built-in control problems with manufactured solutions, and a registry for
//! problems defined in code.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    UnitSquare,
    LShape,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit_square",
            Domain::LShape => "lshape",
        }
    }

    /// Mesh of the domain refined `level` times; for the unit square this is
    /// the `2^level x 2^level` grid.
    pub fn mesh(self, level: u32) -> Result<Mesh> {
        match self {
            Domain::UnitSquare => Mesh::unit_square(1usize << level),
            Domain::LShape => {
                let mut m = Mesh::lshape();
                for _ in 0..level {
                    m = m.uniform_refine();
                }
                Ok(m)
            }
        }
    }

    pub fn initial_mesh(self) -> Mesh {
        match self {
            Domain::UnitSquare => Mesh::unit_square(1).expect("n = 1 is valid"),
            Domain::LShape => Mesh::lshape(),
        }
    }
}

/// Data entering the discrete optimality system.
pub trait ProblemData: Send + Sync {
    fn f(&self, x: Point) -> f64;
    fn y_d(&self, x: Point) -> f64;
    fn u_d(&self, x: Point) -> f64;
    fn grad_u_d(&self, x: Point) -> Point;
}

/// Exact optimal state, adjoint and control. Data follow from
/// `f = -lap y`, `y_d = y + lap z`, `u_d = u`.
pub trait ExactSolution: Send + Sync {
    fn y(&self, x: Point) -> f64;
    fn grad_y(&self, x: Point) -> Point;
    fn laplace_y(&self, x: Point) -> f64;
    fn z(&self, x: Point) -> f64;
    fn grad_z(&self, x: Point) -> Point;
    fn laplace_z(&self, x: Point) -> f64;
    fn u(&self, x: Point) -> f64;
    fn grad_u(&self, x: Point) -> Point;

    fn p(&self, x: Point) -> Point {
        -self.grad_y(x)
    }

    fn div_p(&self, x: Point) -> f64 {
        -self.laplace_y(x)
    }

    fn r(&self, x: Point) -> Point {
        -self.grad_z(x)
    }

    fn div_r(&self, x: Point) -> f64 {
        -self.laplace_z(x)
    }
}

/// Problem data derived from an exact solution.
pub struct Manufactured(pub Arc<dyn ExactSolution>);

impl ProblemData for Manufactured {
    fn f(&self, x: Point) -> f64 {
        -self.0.laplace_y(x)
    }

    fn y_d(&self, x: Point) -> f64 {
        self.0.y(x) + self.0.laplace_z(x)
    }

    fn u_d(&self, x: Point) -> f64 {
        self.0.u(x)
    }

    fn grad_u_d(&self, x: Point) -> Point {
        self.0.grad_u(x)
    }
}

type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;

/// Problem data given by closures.
#[derive(Clone)]
pub struct FnData {
    pub f: ScalarFn,
    pub y_d: ScalarFn,
    pub u_d: ScalarFn,
    pub grad_u_d: VectorFn,
}

impl ProblemData for FnData {
    fn f(&self, x: Point) -> f64 {
        (self.f)(x)
    }

    fn y_d(&self, x: Point) -> f64 {
        (self.y_d)(x)
    }

    fn u_d(&self, x: Point) -> f64 {
        (self.u_d)(x)
    }

    fn grad_u_d(&self, x: Point) -> Point {
        (self.grad_u_d)(x)
    }
}

#[derive(Clone)]
pub struct ControlProblem {
    pub name: String,
    pub domain: Domain,
    pub alpha: f64,
    pub data: Arc<dyn ProblemData>,
    pub exact: Option<Arc<dyn ExactSolution>>,
}

impl fmt::Debug for ControlProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("alpha", &self.alpha)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ControlProblem {
    pub fn manufactured(name: &str, domain: Domain, alpha: f64, exact: Arc<dyn ExactSolution>) -> Result<Self> {
        ControlProblem {
            name: name.to_string(),
            domain,
            alpha,
            data: Arc::new(Manufactured(exact.clone())),
            exact: Some(exact),
        }
        .validated()
    }

    pub fn with_data(name: &str, domain: Domain, alpha: f64, data: Arc<dyn ProblemData>) -> Result<Self> {
        ControlProblem {
            name: name.to_string(),
            domain,
            alpha,
            data,
            exact: None,
        }
        .validated()
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = alpha;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(self)
    }
}

/// `t^2 (1 - t^2)^2` and its first two derivatives.
fn bump(t: f64) -> (f64, f64, f64) {
    let t2 = t * t;
    let s = 1.0 - t2;
    let v = t2 * s * s;
    let d1 = 2.0 * t - 8.0 * t2 * t + 6.0 * t2 * t2 * t;
    let d2 = 2.0 - 24.0 * t2 + 30.0 * t2 * t2;
    (v, d1, d2)
}

/// `z = x1^2 (1 - x1^2)^2 x2^2 (1 - x2^2)^2`, shared by both examples.
fn bump_adjoint(x: Point) -> (f64, Point, f64) {
    let (a, da, dda) = bump(x.x);
    let (b, db, ddb) = bump(x.y);
    (a * b, Point::new(da * b, a * db), dda * b + a * ddb)
}

/// Smooth example on the unit square: `y = u = exp(x1 + x2)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExponentialSquare;

impl ExactSolution for ExponentialSquare {
    fn y(&self, x: Point) -> f64 {
        (x.x + x.y).exp()
    }

    fn grad_y(&self, x: Point) -> Point {
        let e = (x.x + x.y).exp();
        Point::new(e, e)
    }

    fn laplace_y(&self, x: Point) -> f64 {
        2.0 * (x.x + x.y).exp()
    }

    fn z(&self, x: Point) -> f64 {
        bump_adjoint(x).0
    }

    fn grad_z(&self, x: Point) -> Point {
        bump_adjoint(x).1
    }

    fn laplace_z(&self, x: Point) -> f64 {
        bump_adjoint(x).2
    }

    fn u(&self, x: Point) -> f64 {
        self.y(x)
    }

    fn grad_u(&self, x: Point) -> Point {
        self.grad_y(x)
    }
}

/// Corner singularity on the L-shape: `y = u = r^(2/3) sin(2 theta / 3)`.
///
/// Gradients blow up like `r^(-1/3)` and are not defined at the origin.
#[derive(Clone, Copy, Debug, Default)]
pub struct CornerSingularity;

impl CornerSingularity {
    /// Polar angle in `[0, 2 pi)`; the cut lies in the removed quadrant.
    pub fn angle(x: Point) -> f64 {
        let t = x.y.atan2(x.x);
        if t < 0.0 {
            t + 2.0 * PI
        } else {
            t
        }
    }

    fn value(x: Point) -> f64 {
        let r = x.norm();
        r.powf(2.0 / 3.0) * (2.0 * Self::angle(x) / 3.0).sin()
    }

    fn gradient(x: Point) -> Point {
        let r = x.norm();
        let th = Self::angle(x);
        let s = 2.0 / 3.0 * r.powf(-1.0 / 3.0);
        Point::new(-s * (th / 3.0).sin(), s * (th / 3.0).cos())
    }
}

impl ExactSolution for CornerSingularity {
    fn y(&self, x: Point) -> f64 {
        Self::value(x)
    }

    fn grad_y(&self, x: Point) -> Point {
        Self::gradient(x)
    }

    fn laplace_y(&self, _x: Point) -> f64 {
        0.0
    }

    fn z(&self, x: Point) -> f64 {
        bump_adjoint(x).0
    }

    fn grad_z(&self, x: Point) -> Point {
        bump_adjoint(x).1
    }

    fn laplace_z(&self, x: Point) -> f64 {
        bump_adjoint(x).2
    }

    fn u(&self, x: Point) -> f64 {
        Self::value(x)
    }

    fn grad_u(&self, x: Point) -> Point {
        Self::gradient(x)
    }
}

/// Zero data on the unit square; the exact solution is identically zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroSolution;

impl ExactSolution for ZeroSolution {
    fn y(&self, _: Point) -> f64 {
        0.0
    }
    fn grad_y(&self, _: Point) -> Point {
        Point::default()
    }
    fn laplace_y(&self, _: Point) -> f64 {
        0.0
    }
    fn z(&self, _: Point) -> f64 {
        0.0
    }
    fn grad_z(&self, _: Point) -> Point {
        Point::default()
    }
    fn laplace_z(&self, _: Point) -> f64 {
        0.0
    }
    fn u(&self, _: Point) -> f64 {
        0.0
    }
    fn grad_u(&self, _: Point) -> Point {
        Point::default()
    }
}

/// Smooth example on the unit square with `alpha = 1`.
pub fn example1() -> ControlProblem {
    ControlProblem::manufactured("example1", Domain::UnitSquare, 1.0, Arc::new(ExponentialSquare))
        .expect("alpha = 1 is valid")
}

/// Corner-singular example on the L-shape with `alpha = 1`.
pub fn example2() -> ControlProblem {
    ControlProblem::manufactured("example2", Domain::LShape, 1.0, Arc::new(CornerSingularity))
        .expect("alpha = 1 is valid")
}

pub fn zero_problem() -> ControlProblem {
    ControlProblem::manufactured("zero", Domain::UnitSquare, 1.0, Arc::new(ZeroSolution)).expect("alpha = 1 is valid")
}

/// Numeric parameters a registered problem may read.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProblemParams {
    pub alpha: Option<f64>,
    pub values: BTreeMap<String, f64>,
}

type Constructor = Box<dyn Fn(&ProblemParams) -> Result<ControlProblem> + Send + Sync>;

/// Problems selectable by name.
pub struct ProblemRegistry {
    entries: BTreeMap<String, Constructor>,
}

impl Default for ProblemRegistry {
    fn default() -> Self {
        let mut reg = ProblemRegistry {
            entries: BTreeMap::new(),
        };
        reg.register("example1", |p| apply_alpha(example1(), p));
        reg.register("example2", |p| apply_alpha(example2(), p));
        reg.register("zero", |p| apply_alpha(zero_problem(), p));
        reg
    }
}

fn apply_alpha(problem: ControlProblem, params: &ProblemParams) -> Result<ControlProblem> {
    match params.alpha {
        Some(a) => problem.with_alpha(a),
        None => Ok(problem),
    }
}

impl ProblemRegistry {
    pub fn register(
        &mut self,
        name: &str,
        ctor: impl Fn(&ProblemParams) -> Result<ControlProblem> + Send + Sync + 'static,
    ) {
        self.entries.insert(name.to_string(), Box::new(ctor));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, params: &ProblemParams) -> Result<ControlProblem> {
        let ctor = self
            .entries
            .get(name)
            .ok_or_else(|| Error::UnknownProblem(name.to_string()))?;
        ctor(params)
    }
}

/// Looks up a built-in problem.
pub fn by_name(name: &str, alpha: Option<f64>) -> Result<ControlProblem> {
    ProblemRegistry::default().build(
        name,
        &ProblemParams {
            alpha,
            ..Default::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_points(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<Point> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point::new(rng.random_range(lo..hi), rng.random_range(lo..hi)))
            .collect()
    }

    fn in_lshape(p: Point) -> bool {
        !(p.x > 0.0 && p.y < 0.0)
    }

    /// Five-point finite-difference Laplacian.
    fn fd_laplace(f: impl Fn(Point) -> f64, x: Point, h: f64) -> f64 {
        (f(Point::new(x.x + h, x.y)) + f(Point::new(x.x - h, x.y)) + f(Point::new(x.x, x.y + h))
            + f(Point::new(x.x, x.y - h))
            - 4.0 * f(x))
            / (h * h)
    }

    fn fd_grad(f: impl Fn(Point) -> f64, x: Point, h: f64) -> Point {
        Point::new(
            (f(Point::new(x.x + h, x.y)) - f(Point::new(x.x - h, x.y))) / (2.0 * h),
            (f(Point::new(x.x, x.y + h)) - f(Point::new(x.x, x.y - h))) / (2.0 * h),
        )
    }

    #[test]
    fn example1_data() {
        let p = example1();
        assert_eq!(p.alpha, 1.0);
        assert!((p.data.f(Point::new(0.0, 0.0)) + 2.0).abs() < 1e-15);
        let ex = p.exact.clone().unwrap();
        for t in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            for q in [Point::new(1.0, t), Point::new(0.0, t), Point::new(t, 0.0), Point::new(t, 1.0)] {
                assert_eq!(ex.z(q), 0.0);
            }
        }
        for x in random_points(100, 0.0, 1.0, 1) {
            assert_eq!(p.data.u_d(x), ex.u(x));
            let fd = -fd_laplace(|q| ex.y(q), x, 1e-3);
            assert!((fd - p.data.f(x)).abs() < 1e-5 * p.data.f(x).abs());
            assert!((-ex.laplace_y(x) - p.data.f(x)).abs() <= 1e-10);
            assert!((p.data.y_d(x) - ex.y(x) - ex.laplace_z(x)).abs() <= 1e-14);
        }
    }

    #[test]
    fn exact_gradients_match_finite_differences() {
        let ex1 = ExponentialSquare;
        for x in random_points(1000, 0.0, 1.0, 2) {
            for (g, fd) in [
                (ex1.grad_y(x), fd_grad(|q| ex1.y(q), x, 1e-5)),
                (ex1.grad_z(x), fd_grad(|q| ex1.z(q), x, 1e-5)),
                (ex1.grad_u(x), fd_grad(|q| ex1.u(q), x, 1e-5)),
            ] {
                let scale = g.norm().max(1e-3);
                assert!((g - fd).norm() <= 1e-6 * scale, "{g:?} vs {fd:?}");
            }
            assert!((ex1.laplace_z(x) - fd_laplace(|q| ex1.z(q), x, 1e-3)).abs() < 1e-4);
        }
        let ex2 = CornerSingularity;
        for x in random_points(3000, -1.0, 1.0, 3).into_iter().filter(|&p| in_lshape(p) && p.norm() > 0.1) {
            let g = ex2.grad_y(x);
            let fd = fd_grad(|q| ex2.y(q), x, 1e-6);
            assert!(g.is_finite());
            assert!((g - fd).norm() <= 1e-6 * g.norm(), "{x:?}: {g:?} vs {fd:?}");
        }
    }

    #[test]
    fn example2_data() {
        let p = example2();
        assert_eq!(p.domain, Domain::LShape);
        let ex = p.exact.clone().unwrap();
        for x in random_points(200, -1.0, 1.0, 4).into_iter().filter(|&q| in_lshape(q)) {
            assert_eq!(p.data.f(x), 0.0);
            assert!((p.data.y_d(x) - ex.y(x) - ex.laplace_z(x)).abs() <= 1e-14);
            if x.norm() > 0.1 {
                assert!(fd_laplace(|q| ex.y(q), x, 2e-4).abs() <= 1e-4);
            }
        }
        for t in [0.1, 0.5, 1.0] {
            assert!(ex.y(Point::new(t, 0.0)).abs() < 1e-15);
            assert!(ex.y(Point::new(0.0, -t)).abs() < 1e-15);
        }
        assert!((ex.y(Point::new(-1.0, 0.0)) - 3f64.sqrt() / 2.0).abs() < 1e-15);
        // the bump adjoint vanishes on the whole L-shape boundary
        for t in [-0.8, -0.3, 0.2, 0.7] {
            assert_eq!(ex.z(Point::new(t, -1.0)), 0.0);
            assert_eq!(ex.z(Point::new(-1.0, t)), 0.0);
            assert_eq!(ex.z(Point::new(t, 1.0)), 0.0);
        }
    }

    #[test]
    fn registry_lookup() {
        assert!(by_name("example1", None).is_ok());
        assert_eq!(by_name("example2", Some(0.5)).unwrap().alpha, 0.5);
        assert!(matches!(by_name("nope", None), Err(Error::UnknownProblem(_))));
        assert!(by_name("example1", Some(0.0)).is_err());
        let mut reg = ProblemRegistry::default();
        reg.register("shifted", |p| {
            let c = p.values.get("shift").copied().unwrap_or(0.0);
            ControlProblem::with_data(
                "shifted",
                Domain::UnitSquare,
                p.alpha.unwrap_or(1.0),
                Arc::new(FnData {
                    f: Arc::new(move |_| c),
                    y_d: Arc::new(|_| 0.0),
                    u_d: Arc::new(|_| 0.0),
                    grad_u_d: Arc::new(|_| Point::default()),
                }),
            )
        });
        let mut params = ProblemParams::default();
        params.values.insert("shift".into(), 2.0);
        let p = reg.build("shifted", &params).unwrap();
        assert_eq!(p.data.f(Point::new(0.3, 0.3)), 2.0);
        assert!(reg.names().any(|n| n == "shifted"));
    }
}
