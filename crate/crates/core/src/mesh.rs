//! Conforming triangulations of polygonal domains.
//!
//! Triangles are stored counter-clockwise. Local edge `i` of a triangle is
//! the edge opposite local vertex `i`. Every edge carries an orientation
//! `(tail, head)`; its canonical normal is the clockwise rotation of the unit
//! vector from tail to head. Interior edges are oriented from the smaller to
//! the larger vertex index, boundary edges so that the canonical normal points
//! out of the domain.
//!
//! Refinement never mutates a mesh: both [`Mesh::uniform_refine`] and
//! [`Mesh::nvb_refine`] return a new mesh whose edge table is derived from
//! scratch.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    /// Local index of the edge bisected first by newest-vertex bisection.
    pub refinement_edge: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    /// Oriented `(tail, head)` pair.
    pub vertices: [usize; 2],
    /// `neighbors[0]` traverses the edge tail to head (orientation sign +1),
    /// `neighbors[1]` the other way. Boundary edges have no second neighbor.
    pub neighbors: [Option<usize>; 2],
}

impl Edge {
    pub fn kind(&self) -> EdgeKind {
        if self.neighbors[1].is_some() {
            EdgeKind::Interior
        } else {
            EdgeKind::Boundary
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.kind() == EdgeKind::Boundary
    }

    /// The sorted vertex pair identifying the edge.
    pub fn key(&self) -> (usize, usize) {
        sorted_pair(self.vertices[0], self.vertices[1])
    }

    pub fn plus(&self) -> usize {
        self.neighbors[0].expect("every edge has a first neighbor")
    }
}

/// An edge as seen from one triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalEdge {
    pub edge: usize,
    /// +1 if the triangle's outward normal on this edge is the edge's
    /// canonical normal, -1 otherwise.
    pub sign: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    points: Vec<Point>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[LocalEdge; 3]>,
}

fn sorted_pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * (b - a).cross(c - a)
}

/// Longest edge, ties broken by the smallest opposite vertex index.
fn longest_edge(points: &[Point], v: [usize; 3]) -> u8 {
    let mut best = 0usize;
    let mut best_len = -1.0;
    for i in 0..3 {
        let len = (points[v[(i + 1) % 3]] - points[v[(i + 2) % 3]]).norm();
        let better = len > best_len
            || (len == best_len && v[i] < v[best]);
        if better {
            best = i;
            best_len = len;
        }
    }
    best as u8
}

impl Mesh {
    /// Builds a mesh from coordinates and counter-clockwise triangles whose
    /// refinement edges are already set.
    pub fn from_parts(points: Vec<Point>, triangles: Vec<Triangle>) -> Result<Mesh> {
        if let Some(p) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("vertex {p} has non-finite coordinates")));
        }
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.vertices;
            if a.max(b).max(c) >= points.len() {
                return Err(Error::invalid(format!("triangle {t} references a missing vertex")));
            }
            if a == b || b == c || a == c {
                return Err(Error::DegenerateTriangle(t));
            }
            if tri.refinement_edge > 2 {
                return Err(Error::invalid(format!("triangle {t} has refinement edge {}", tri.refinement_edge)));
            }
            if !(signed_area(points[a], points[b], points[c]) > 0.0) {
                return Err(Error::DegenerateTriangle(t));
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 3 / 2 + 4);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [LocalEdge { edge: 0, sign: 1.0 }; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let a = tri.vertices[(i + 1) % 3];
                let b = tri.vertices[(i + 2) % 3];
                let key = sorted_pair(a, b);
                match lookup.get(&key) {
                    None => {
                        lookup.insert(key, edges.len());
                        slot.edge = edges.len();
                        edges.push(Edge {
                            vertices: [a, b],
                            neighbors: [Some(t), None],
                        });
                    }
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.neighbors[1].is_some() {
                            return Err(Error::invalid(format!("edge {key:?} is shared by more than two triangles")));
                        }
                        if edge.vertices != [b, a] {
                            return Err(Error::invalid(format!("triangles around edge {key:?} are inconsistently oriented")));
                        }
                        edge.neighbors[1] = Some(t);
                        slot.edge = e;
                    }
                }
            }
            triangle_edges.push(local);
        }

        // Interior edges are re-oriented lo -> hi; the neighbor traversing
        // lo -> hi becomes the plus side.
        for edge in edges.iter_mut() {
            if edge.neighbors[1].is_some() && edge.vertices[0] > edge.vertices[1] {
                edge.vertices.swap(0, 1);
                edge.neighbors.swap(0, 1);
            }
        }
        for (t, local) in triangle_edges.iter_mut().enumerate() {
            for slot in local.iter_mut() {
                slot.sign = if edges[slot.edge].neighbors[0] == Some(t) { 1.0 } else { -1.0 };
            }
        }

        Ok(Mesh {
            points,
            triangles,
            edges,
            triangle_edges,
        })
    }

    /// Builds a mesh assigning the initial refinement edges (longest edge,
    /// smallest opposite vertex index on ties).
    pub fn from_connectivity(points: Vec<Point>, cells: &[[usize; 3]]) -> Result<Mesh> {
        let triangles = cells
            .iter()
            .map(|&v| {
                let refinement_edge = if v.iter().all(|&i| i < points.len()) {
                    longest_edge(&points, v)
                } else {
                    0
                };
                Triangle { vertices: v, refinement_edge }
            })
            .collect();
        Mesh::from_parts(points, triangles)
    }

    /// `n x n` squares on the unit square, each split along its
    /// lower-left to upper-right diagonal.
    pub fn unit_square(n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::invalid("unit square mesh needs n >= 1"));
        }
        let h = 1.0 / n as f64;
        let mut points = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                points.push(Point::new(i as f64 * h, j as f64 * h));
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            }
        }
        Mesh::from_connectivity(points, &cells)
    }

    /// `(-1,1)^2` minus `[0,1] x [-1,0]`, as three unit squares split along
    /// their lower-left to upper-right diagonals. The reentrant corner is the
    /// origin.
    pub fn lshape() -> Mesh {
        let points = vec![
            Point::new(-1.0, -1.0),
            Point::new(0.0, -1.0),
            Point::new(-1.0, 0.0),
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(-1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
        ];
        let cells = [
            [0, 1, 3],
            [0, 3, 2],
            [2, 3, 6],
            [2, 6, 5],
            [3, 4, 7],
            [3, 7, 6],
        ];
        Mesh::from_connectivity(points, &cells).expect("L-shape connectivity is valid")
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn triangle_edges(&self, t: usize) -> &[LocalEdge; 3] {
        &self.triangle_edges[t]
    }

    pub fn n_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn coords(&self, t: usize) -> [Point; 3] {
        let v = self.triangles[t].vertices;
        [self.points[v[0]], self.points[v[1]], self.points[v[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.coords(t);
        signed_area(a, b, c)
    }

    /// Element diameter `h_T` (longest edge).
    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.coords(t);
        (b - a).norm().max((c - b).norm()).max((a - c).norm())
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.coords(t);
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Largest element diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.diameter(t)).fold(0.0, f64::max)
    }

    pub fn edge_endpoints(&self, e: usize) -> [Point; 2] {
        let [a, b] = self.edges[e].vertices;
        [self.points[a], self.points[b]]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edge_endpoints(e);
        (b - a).norm()
    }

    /// Unit vector from tail to head.
    pub fn edge_tangent(&self, e: usize) -> Point {
        let [a, b] = self.edge_endpoints(e);
        let d = b - a;
        d * (1.0 / d.norm())
    }

    /// Canonical unit normal: the tangent rotated 90 degrees clockwise.
    pub fn edge_normal(&self, e: usize) -> Point {
        let t = self.edge_tangent(e);
        Point::new(t.y, -t.x)
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.edges[e].is_boundary())
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| !self.edges[e].is_boundary())
    }

    pub fn boundary_vertex_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.points.len()];
        for e in self.boundary_edges() {
            for &v in &self.edges[e].vertices {
                flags[v] = true;
            }
        }
        flags
    }

    /// `V - E + T`.
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_triangles() as i64
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| {
                let p = self.coords(t);
                (0..3)
                    .map(|i| {
                        let u = p[(i + 1) % 3] - p[i];
                        let w = p[(i + 2) % 3] - p[i];
                        (u.dot(w) / (u.norm() * w.norm())).clamp(-1.0, 1.0).acos()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Recomputes edge incidence from scratch and checks conformity:
    /// positive areas, at most two triangles per edge, every vertex used,
    /// boundary edges forming closed loops.
    pub fn check_conformity(&self) -> Result<()> {
        let rebuilt = Mesh::from_parts(self.points.clone(), self.triangles.clone())?;
        if rebuilt.edges.len() != self.edges.len() {
            return Err(Error::MeshMismatch("edge table is stale".into()));
        }
        let mut used = vec![false; self.points.len()];
        for tri in &self.triangles {
            for &v in &tri.vertices {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::MeshMismatch(format!("vertex {v} is not used by any triangle")));
        }
        // Closed boundary loops: in-degree equals out-degree at every vertex.
        let mut balance = vec![0i64; self.points.len()];
        let boundary: Vec<usize> = rebuilt.boundary_edges().collect();
        for &e in &boundary {
            let [a, b] = rebuilt.edges[e].vertices;
            balance[a] += 1;
            balance[b] -= 1;
        }
        if let Some(v) = balance.iter().position(|&b| b != 0) {
            return Err(Error::MeshMismatch(format!("boundary does not close at vertex {v}")));
        }
        // A hanging node appears as a boundary vertex strictly inside another
        // boundary edge.
        let mut boundary_vertices: Vec<usize> = boundary.iter().flat_map(|&e| rebuilt.edges[e].vertices).collect();
        boundary_vertices.sort_unstable();
        boundary_vertices.dedup();
        for &e in &boundary {
            let [a, b] = rebuilt.edge_endpoints(e);
            let d = b - a;
            let len2 = d.dot(d);
            for &v in &boundary_vertices {
                if rebuilt.edges[e].vertices.contains(&v) {
                    continue;
                }
                let w = self.points[v] - a;
                let s = w.dot(d) / len2;
                if s > 0.0 && s < 1.0 && d.cross(w).abs() <= 1e-12 * len2 {
                    return Err(Error::MeshMismatch(format!("hanging node {v} on edge {e}")));
                }
            }
        }
        Ok(())
    }

    /// Red refinement: every triangle is split into four similar children
    /// through its edge midpoints.
    pub fn uniform_refine(&self) -> Mesh {
        let nv = self.points.len();
        let mut points = self.points.clone();
        points.extend((0..self.edges.len()).map(|e| {
            let [a, b] = self.edge_endpoints(e);
            a.midpoint(b)
        }));
        let mut cells = Vec::with_capacity(4 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let [v0, v1, v2] = tri.vertices;
            let m = self.triangle_edges[t].map(|le| nv + le.edge);
            cells.push([v0, m[2], m[1]]);
            cells.push([m[2], v1, m[0]]);
            cells.push([m[1], m[0], v2]);
            cells.push([m[0], m[1], m[2]]);
        }
        Mesh::from_connectivity(points, &cells).expect("red refinement preserves validity")
    }

    /// Newest-vertex bisection of the marked triangles plus the closure
    /// needed to keep the mesh conforming.
    pub fn nvb_refine(&self, marked: &[usize]) -> Result<Mesh> {
        if let Some(&t) = marked.iter().find(|&&t| t >= self.triangles.len()) {
            return Err(Error::invalid(format!(
                "marked triangle {t} out of range (mesh has {})",
                self.triangles.len()
            )));
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }

        let refinement_edge = |t: usize| self.triangle_edges[t][self.triangles[t].refinement_edge as usize].edge;
        let mut edge_marked = vec![false; self.edges.len()];
        let mut queue = Vec::new();
        for &t in marked {
            let e = refinement_edge(t);
            if !edge_marked[e] {
                edge_marked[e] = true;
                queue.push(e);
            }
        }
        // Closure: a triangle with any marked edge must have its refinement
        // edge marked as well.
        while let Some(e) = queue.pop() {
            for t in self.edges[e].neighbors.iter().flatten() {
                let r = refinement_edge(*t);
                if !edge_marked[r] {
                    edge_marked[r] = true;
                    queue.push(r);
                }
            }
        }

        let mut points = self.points.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, edge) in self.edges.iter().enumerate() {
            if edge_marked[e] {
                let [a, b] = self.edge_endpoints(e);
                midpoints.insert(edge.key(), points.len());
                points.push(a.midpoint(b));
            }
        }

        let mut triangles = Vec::with_capacity(self.triangles.len() + 2 * midpoints.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            if !edge_marked[refinement_edge(t)] {
                triangles.push(*tri);
                continue;
            }
            let r = tri.refinement_edge as usize;
            let v = tri.vertices;
            bisect([v[r], v[(r + 1) % 3], v[(r + 2) % 3]], &midpoints, &mut triangles);
        }
        Mesh::from_parts(points, triangles)
    }

    /// Plain-text dump: counts followed by coordinates and connectivity.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "vertices {}", self.n_vertices()).unwrap();
        for p in &self.points {
            writeln!(s, "{:.17e} {:.17e}", p.x, p.y).unwrap();
        }
        writeln!(s, "triangles {}", self.n_triangles()).unwrap();
        for t in &self.triangles {
            let [a, b, c] = t.vertices;
            writeln!(s, "{a} {b} {c} {}", t.refinement_edge).unwrap();
        }
        writeln!(s, "edges {}", self.n_edges()).unwrap();
        for e in &self.edges {
            let [a, b] = e.vertices;
            let kind = if e.is_boundary() { "b" } else { "i" };
            writeln!(s, "{a} {b} {kind}").unwrap();
        }
        s
    }
}

/// Bisects `[apex, b, c]` (refinement edge `b-c`) recursively while the
/// refinement edge carries a midpoint. Children get the new vertex as apex.
fn bisect(v: [usize; 3], midpoints: &HashMap<(usize, usize), usize>, out: &mut Vec<Triangle>) {
    let [a, b, c] = v;
    match midpoints.get(&sorted_pair(b, c)) {
        Some(&m) => {
            bisect([m, a, b], midpoints, out);
            bisect([m, c, a], midpoints, out);
        }
        None => out.push(Triangle {
            vertices: v,
            refinement_edge: 0,
        }),
    }
}
