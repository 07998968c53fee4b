//! Symmetric triangle rules and Gauss-Legendre edge rules.
//!
//! Triangle rules are stored in barycentric coordinates with weights
//! normalized to sum to one; the integral over a triangle is
//! `|T| * sum w_i f(x_i)`.

use crate::mesh::Point;

#[derive(Clone, Copy, Debug)]
pub struct TriangleRule {
    /// `(weight, lambda_1, lambda_2)`; `lambda_0 = 1 - lambda_1 - lambda_2`.
    pub points: &'static [(f64, f64, f64)],
    pub degree: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct EdgeRule {
    /// `(t, weight)` on `[0, 1]`, weights summing to one.
    pub points: &'static [(f64, f64)],
    pub degree: usize,
}

const DUNAVANT_4: [(f64, f64, f64); 6] = [
    (0.2233815896780114657, 0.10810301816807022736, 0.44594849091596488632),
    (0.2233815896780114657, 0.44594849091596488632, 0.10810301816807022736),
    (0.2233815896780114657, 0.44594849091596488632, 0.44594849091596488632),
    (0.10995174365532186764, 0.81684757298045851308, 0.09157621350977074346),
    (0.10995174365532186764, 0.09157621350977074346, 0.81684757298045851308),
    (0.10995174365532186764, 0.09157621350977074346, 0.09157621350977074346),
];

const DUNAVANT_8: [(f64, f64, f64); 16] = [
    (0.14431560767778716825, 0.33333333333333333333, 0.33333333333333333333),
    (0.095091634267284624794, 0.081414823414553687942, 0.45929258829272315603),
    (0.095091634267284624794, 0.45929258829272315603, 0.081414823414553687942),
    (0.095091634267284624794, 0.45929258829272315603, 0.45929258829272315603),
    (0.10321737053471825028, 0.65886138449647958676, 0.17056930775176020662),
    (0.10321737053471825028, 0.17056930775176020662, 0.65886138449647958676),
    (0.10321737053471825028, 0.17056930775176020662, 0.17056930775176020662),
    (0.032458497623198080311, 0.89890554336593804908, 0.050547228317030975458),
    (0.032458497623198080311, 0.050547228317030975458, 0.89890554336593804908),
    (0.032458497623198080311, 0.050547228317030975458, 0.050547228317030975458),
    (0.027230314174434994265, 0.0083947774099576053372, 0.26311282963463811342),
    (0.027230314174434994265, 0.26311282963463811342, 0.0083947774099576053372),
    (0.027230314174434994265, 0.0083947774099576053372, 0.72849239295540428124),
    (0.027230314174434994265, 0.72849239295540428124, 0.0083947774099576053372),
    (0.027230314174434994265, 0.26311282963463811342, 0.72849239295540428124),
    (0.027230314174434994265, 0.72849239295540428124, 0.26311282963463811342),
];

const GAUSS_2: [(f64, f64); 2] = [(0.21132486540518711775, 0.5), (0.78867513459481288225, 0.5)];

const GAUSS_4: [(f64, f64); 4] = [
    (0.069431844202973712388, 0.17392742256872692869),
    (0.3300094782075718676, 0.32607257743127307131),
    (0.6699905217924281324, 0.32607257743127307131),
    (0.93056815579702628761, 0.17392742256872692869),
];

/// Degree-4 rule used for assembly.
pub const TRI_DEG4: TriangleRule = TriangleRule {
    points: &DUNAVANT_4,
    degree: 4,
};

/// Degree-8 rule used for loads, error norms and estimator volume terms.
pub const TRI_DEG8: TriangleRule = TriangleRule {
    points: &DUNAVANT_8,
    degree: 8,
};

pub const EDGE_DEG3: EdgeRule = EdgeRule {
    points: &GAUSS_2,
    degree: 3,
};

/// Degree-7 rule used for edge norms.
pub const EDGE_DEG7: EdgeRule = EdgeRule {
    points: &GAUSS_4,
    degree: 7,
};

impl TriangleRule {
    /// Quadrature points mapped onto the triangle `v` with physical weights.
    pub fn mapped(&self, v: &[Point; 3]) -> impl Iterator<Item = (Point, f64)> + '_ {
        let area = 0.5 * (v[1] - v[0]).cross(v[2] - v[0]);
        let [a, b, c] = *v;
        self.points.iter().map(move |&(w, l1, l2)| {
            let l0 = 1.0 - l1 - l2;
            let p = Point::new(l0 * a.x + l1 * b.x + l2 * c.x, l0 * a.y + l1 * b.y + l2 * c.y);
            (p, w * area.abs())
        })
    }

    pub fn integrate(&self, v: &[Point; 3], f: impl Fn(Point) -> f64) -> f64 {
        self.mapped(v).map(|(p, w)| w * f(p)).sum()
    }
}

impl EdgeRule {
    /// `(point, parameter t in [0,1], physical weight)` along the segment `a -> b`.
    pub fn mapped(&self, a: Point, b: Point) -> impl Iterator<Item = (Point, f64, f64)> + '_ {
        let len = (b - a).norm();
        self.points
            .iter()
            .map(move |&(t, w)| (a + (b - a) * t, t, w * len))
    }

    pub fn integrate(&self, a: Point, b: Point, f: impl Fn(Point) -> f64) -> f64 {
        self.mapped(a, b).map(|(p, _, w)| w * f(p)).sum()
    }
}

/// Integral of `f` over the triangle `v`.
pub fn integrate_triangle(rule: &TriangleRule, v: &[Point; 3], f: impl Fn(Point) -> f64) -> f64 {
    rule.integrate(v, f)
}

/// Integral of `f` over the segment `a -> b` with respect to arclength.
pub fn integrate_edge(rule: &EdgeRule, a: Point, b: Point, f: impl Fn(Point) -> f64) -> f64 {
    rule.integrate(a, b, f)
}
