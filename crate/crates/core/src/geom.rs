//! Model geometries, triangulated patches, and PL chains.
//!
//! Three model spaces are supported: the Euclidean plane, Euclidean
//! 3-space, and the hyperbolic plane in hyperboloid coordinates. A
//! [`TriangulatedPatch`] is a finite piece of a deck-invariant
//! triangulation of one of these models: unit grid squares split along
//! the SW-NE diagonal, unit cubes split into six Kuhn tetrahedra, or
//! regular {8,8} octagons coned from their barycenters. Chains of
//! dimension 1-3 carry coordinate pieces with integer multiplicities
//! and metric volumes.
//!
//! Points are `[f64; 3]` throughout; the plane embeds with z = 0 and
//! hyperbolic points satisfy z² − x² − y² = 1 on the upper sheet.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::filling::CellularTwoChain;
use crate::hyperbolic::{self, Mat3};
use crate::norm::{CellularOneCycle, TwoComplexView};

pub type Point = [f64; 3];

pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelGeometry {
    E2,
    E3,
    H2,
}

impl ModelGeometry {
    pub fn dim(&self) -> usize {
        match self {
            ModelGeometry::E2 | ModelGeometry::H2 => 2,
            ModelGeometry::E3 => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelGeometry::E2 => "E2",
            ModelGeometry::E3 => "E3",
            ModelGeometry::H2 => "H2",
        }
    }

    /// Sheet constraint for hyperbolic points; z = 0 for the plane.
    pub fn check_point(&self, p: &Point) -> Result<()> {
        match self {
            ModelGeometry::E2 if p[2] != 0.0 => Err(Error::NotInSkeleton(*p)),
            ModelGeometry::H2 => {
                let defect = (p[2] * p[2] - p[0] * p[0] - p[1] * p[1] - 1.0).abs();
                // relative to z² so far-out octagon layers stay checkable
                if defect <= 1e-12 * p[2].powi(2).max(1.0) && p[2] > 0.0 {
                    Ok(())
                } else {
                    Err(Error::NotInSkeleton(*p))
                }
            }
            _ => Ok(()),
        }
    }

    pub fn segment_length(&self, p: &Point, q: &Point) -> f64 {
        match self {
            ModelGeometry::E2 | ModelGeometry::E3 => norm(&sub(q, p)),
            ModelGeometry::H2 => hyperbolic::distance(p, q),
        }
    }

    pub fn triangle_area(&self, a: &Point, b: &Point, c: &Point) -> f64 {
        match self {
            ModelGeometry::E2 | ModelGeometry::E3 => norm(&cross(&sub(b, a), &sub(c, a))) / 2.0,
            ModelGeometry::H2 => hyperbolic::triangle_area(a, b, c).abs(),
        }
    }

    pub fn tet_volume_signed(&self, a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
        let (u, v, w) = (sub(b, a), sub(c, a), sub(d, a));
        dot(&u, &cross(&v, &w)) / 6.0
    }

    /// Point at parameter t in [0,1] on the geodesic segment p..q.
    pub fn interpolate(&self, p: &Point, q: &Point, t: f64) -> Point {
        match self {
            ModelGeometry::E2 | ModelGeometry::E3 => add(&scale(p, 1.0 - t), &scale(q, t)),
            ModelGeometry::H2 => hyperbolic::geodesic_point(p, q, t),
        }
    }

    pub fn midpoint(&self, p: &Point, q: &Point) -> Point {
        match self {
            ModelGeometry::E2 | ModelGeometry::E3 => scale(&add(p, q), 0.5),
            ModelGeometry::H2 => hyperbolic::midpoint(p, q),
        }
    }
}

/// Isometry generating part of the deck action on a patch.
#[derive(Clone, Debug)]
pub enum DeckGenerator {
    Translation(Point),
    Hyperbolic(Mat3),
}

impl DeckGenerator {
    pub fn apply(&self, p: &Point) -> Point {
        match self {
            DeckGenerator::Translation(t) => add(p, t),
            DeckGenerator::Hyperbolic(m) => hyperbolic::renormalize(&hyperbolic::mat_apply(m, p)),
        }
    }
}

/// Finite piece of a deck-invariant triangulation. Edges are derived
/// from the declared simplices and stored with ascending vertex ids, so
/// an oriented traversal carries a sign relative to storage order.
#[derive(Clone, Debug)]
pub struct TriangulatedPatch {
    pub model: ModelGeometry,
    pub vertices: Vec<Point>,
    pub edges: Vec<[u32; 2]>,
    pub triangles: Vec<[u32; 3]>,
    pub tets: Vec<[u32; 4]>,
    pub deck_generators: Vec<DeckGenerator>,
    edge_index: HashMap<(u32, u32), u32>,
    triangle_index: HashMap<[u32; 3], u32>,
}

impl TriangulatedPatch {
    pub fn new(
        model: ModelGeometry,
        vertices: Vec<Point>,
        triangles: Vec<[u32; 3]>,
        tets: Vec<[u32; 4]>,
        deck_generators: Vec<DeckGenerator>,
    ) -> Result<Self> {
        for v in &vertices {
            model.check_point(v)?;
        }
        let mut edges: Vec<[u32; 2]> = Vec::new();
        let mut edge_index = HashMap::new();
        let mut push_edge = |a: u32, b: u32, edges: &mut Vec<[u32; 2]>| {
            let key = (a.min(b), a.max(b));
            edge_index.entry(key).or_insert_with(|| {
                edges.push([key.0, key.1]);
                (edges.len() - 1) as u32
            });
        };
        for t in &triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                push_edge(a, b, &mut edges);
            }
        }
        for t in &tets {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    push_edge(t[i], t[j], &mut edges);
                }
            }
        }
        let mut triangle_index = HashMap::new();
        for (i, t) in triangles.iter().enumerate() {
            let mut key = *t;
            key.sort_unstable();
            triangle_index.insert(key, i as u32);
        }
        let patch = TriangulatedPatch {
            model,
            vertices,
            edges,
            triangles,
            tets,
            deck_generators,
            edge_index,
            triangle_index,
        };
        patch.check_non_degenerate()?;
        Ok(patch)
    }

    fn check_non_degenerate(&self) -> Result<()> {
        for (i, t) in self.triangles.iter().enumerate() {
            let [a, b, c] = t.map(|v| self.vertices[v as usize]);
            if self.model.triangle_area(&a, &b, &c) <= 1e-14 {
                return Err(Error::PatchParameter(format!("degenerate triangle {i}")));
            }
        }
        for (i, t) in self.tets.iter().enumerate() {
            let [a, b, c, d] = t.map(|v| self.vertices[v as usize]);
            if self.model.tet_volume_signed(&a, &b, &c, &d).abs() <= 1e-14 {
                return Err(Error::PatchParameter(format!("degenerate tetrahedron {i}")));
            }
        }
        Ok(())
    }

    pub fn top_dim(&self) -> usize {
        if self.tets.is_empty() {
            2
        } else {
            3
        }
    }

    pub fn point(&self, v: u32) -> Point {
        self.vertices[v as usize]
    }

    pub fn edge_between(&self, a: u32, b: u32) -> Option<(u32, i8)> {
        let id = *self.edge_index.get(&(a.min(b), a.max(b)))?;
        Some((id, if a < b { 1 } else { -1 }))
    }

    pub fn triangle_by_vertices(&self, mut vs: [u32; 3]) -> Option<u32> {
        vs.sort_unstable();
        self.triangle_index.get(&vs).copied()
    }

    /// Oriented boundary of triangle t as signed stored-edge traversals.
    pub fn triangle_boundary(&self, t: u32) -> [(u32, i8); 3] {
        let [a, b, c] = self.triangles[t as usize];
        [
            self.edge_between(a, b).expect("triangle edge exists"),
            self.edge_between(b, c).expect("triangle edge exists"),
            self.edge_between(c, a).expect("triangle edge exists"),
        ]
    }

    pub fn two_complex_view(&self) -> TwoComplexView {
        TwoComplexView {
            edge_count: self.edges.len(),
            cell_boundaries: (0..self.triangles.len() as u32)
                .map(|t| self.triangle_boundary(t).to_vec())
                .collect(),
        }
    }

    pub fn edge_length(&self, e: u32) -> f64 {
        let [a, b] = self.edges[e as usize];
        self.model.segment_length(&self.point(a), &self.point(b))
    }

    pub fn min_edge_length(&self) -> f64 {
        (0..self.edges.len() as u32).map(|e| self.edge_length(e)).fold(f64::INFINITY, f64::min)
    }

    pub fn triangle_points(&self, t: u32) -> [Point; 3] {
        self.triangles[t as usize].map(|v| self.vertices[v as usize])
    }

    pub fn tet_points(&self, t: u32) -> [Point; 4] {
        self.tets[t as usize].map(|v| self.vertices[v as usize])
    }

    pub fn nearest_vertex(&self, p: &Point) -> (u32, f64) {
        let mut best = (0u32, f64::INFINITY);
        for (i, v) in self.vertices.iter().enumerate() {
            let d = self.model.segment_length(p, v);
            if d < best.1 {
                best = (i as u32, d);
            }
        }
        // the hyperbolic metric resolves no finer than sqrt(eps) near
        // coincident points (acosh amplification), so report exact-hit
        // coordinate matches as distance zero
        if coord_gap(p, &self.vertices[best.0 as usize]) <= 1e-10 * p[2].abs().max(1.0) {
            best.1 = 0.0;
        }
        best
    }

    /// Nearest vertex in the coordinate max-gap sense; immune to the
    /// metric resolution floor, for bit-level identity checks.
    pub fn nearest_vertex_by_coords(&self, p: &Point) -> (u32, f64) {
        let mut best = (0u32, f64::INFINITY);
        for (i, v) in self.vertices.iter().enumerate() {
            let d = coord_gap(p, v);
            if d < best.1 {
                best = (i as u32, d);
            }
        }
        best
    }

    /// Euler characteristic V − E + F (+ cells when 3-dimensional).
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
            - self.tets.len() as i64
    }

    /// Exhaustive pairwise proper-intersection check; quadratic, meant
    /// for small patches in tests.
    pub fn validate_intersections(&self) -> Result<()> {
        let tol = 1e-9;
        for i in 0..self.triangles.len() {
            for j in (i + 1)..self.triangles.len() {
                let (ti, tj) = (self.triangles[i], self.triangles[j]);
                let shared: Vec<u32> =
                    ti.iter().filter(|v| tj.contains(v)).copied().collect();
                // geometric overlap beyond the shared face is a failure
                let pi = self.triangle_points(i as u32);
                let pj = self.triangle_points(j as u32);
                if shared.len() < 3 && triangles_overlap(&self.model, &pi, &pj, tol) {
                    return Err(Error::PatchParameter(format!(
                        "triangles {i} and {j} overlap beyond a common face"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Improper-overlap test used by the patch validator: barycenter of one
/// triangle strictly interior to another, or interiors crossing at the
/// sample grid. Conservative but exhaustive enough for unit tests.
fn triangles_overlap(model: &ModelGeometry, a: &[Point; 3], b: &[Point; 3], tol: f64) -> bool {
    let samples = |t: &[Point; 3]| -> Vec<Point> {
        let mut out = Vec::new();
        for (u, v, w) in [
            (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
            (0.5, 0.25, 0.25),
            (0.25, 0.5, 0.25),
            (0.25, 0.25, 0.5),
        ] {
            out.push(barycentric_combine(model, t, &[u, v, w]));
        }
        out
    };
    samples(a).iter().any(|p| strictly_inside(model, b, p, tol))
        || samples(b).iter().any(|p| strictly_inside(model, a, p, tol))
}

/// Flat/cone combination of triangle vertices by barycentric weights.
pub fn barycentric_combine(model: &ModelGeometry, t: &[Point; 3], l: &[f64; 3]) -> Point {
    let p = add(&add(&scale(&t[0], l[0]), &scale(&t[1], l[1])), &scale(&t[2], l[2]));
    match model {
        ModelGeometry::H2 => hyperbolic::renormalize(&scale(&p, 1.0 / minkowski_norm(&p))),
        _ => p,
    }
}

fn minkowski_norm(p: &Point) -> f64 {
    (p[2] * p[2] - p[0] * p[0] - p[1] * p[1]).max(1e-300).sqrt()
}

/// Barycentric coordinates of p in triangle t: affine solve for flat
/// models, cone (Klein) coordinates on the hyperboloid.
pub fn triangle_barycentric(model: &ModelGeometry, t: &[Point; 3], p: &Point) -> Option<[f64; 3]> {
    match model {
        ModelGeometry::H2 => {
            let mu = solve3(&[t[0], t[1], t[2]], p)?;
            let s = mu[0] + mu[1] + mu[2];
            if s.abs() < 1e-300 {
                return None;
            }
            Some([mu[0] / s, mu[1] / s, mu[2] / s])
        }
        ModelGeometry::E2 => {
            let (u, v, w) = (sub(&t[1], &t[0]), sub(&t[2], &t[0]), sub(p, &t[0]));
            let det = u[0] * v[1] - u[1] * v[0];
            if det.abs() < 1e-300 {
                return None;
            }
            let l1 = (w[0] * v[1] - w[1] * v[0]) / det;
            let l2 = (u[0] * w[1] - u[1] * w[0]) / det;
            Some([1.0 - l1 - l2, l1, l2])
        }
        ModelGeometry::E3 => {
            // in-plane solve: reject points off the triangle plane
            let (u, v, w) = (sub(&t[1], &t[0]), sub(&t[2], &t[0]), sub(p, &t[0]));
            let n = cross(&u, &v);
            let nn = dot(&n, &n);
            if nn < 1e-300 {
                return None;
            }
            if dot(&w, &n).abs() > 1e-9 * nn.sqrt().max(1.0) {
                return None;
            }
            let (uu, uv, vv) = (dot(&u, &u), dot(&u, &v), dot(&v, &v));
            let (wu, wv) = (dot(&w, &u), dot(&w, &v));
            let det = uu * vv - uv * uv;
            let l1 = (wu * vv - wv * uv) / det;
            let l2 = (uu * wv - uv * wu) / det;
            Some([1.0 - l1 - l2, l1, l2])
        }
    }
}

/// Barycentric coordinates of p in tetrahedron (columns as vertices).
pub fn tet_barycentric(t: &[Point; 4], p: &Point) -> Option<[f64; 4]> {
    let cols = [sub(&t[1], &t[0]), sub(&t[2], &t[0]), sub(&t[3], &t[0])];
    let l = solve3(&cols, &sub(p, &t[0]))?;
    Some([1.0 - l[0] - l[1] - l[2], l[0], l[1], l[2]])
}

/// Solve the 3x3 system with the given column vectors by Cramer's rule.
fn solve3(cols: &[Point; 3], rhs: &Point) -> Option<[f64; 3]> {
    let det = dot(&cols[0], &cross(&cols[1], &cols[2]));
    if det.abs() < 1e-300 {
        return None;
    }
    Some([
        dot(rhs, &cross(&cols[1], &cols[2])) / det,
        dot(&cols[0], &cross(rhs, &cols[2])) / det,
        dot(&cols[0], &cross(&cols[1], rhs)) / det,
    ])
}

fn strictly_inside(model: &ModelGeometry, t: &[Point; 3], p: &Point, tol: f64) -> bool {
    match triangle_barycentric(model, t, p) {
        Some(l) => l.iter().all(|&x| x > tol),
        None => false,
    }
}

/// Containing-simplex query result; ties on shared faces resolve to the
/// lowest-dimensional containing face.
#[derive(Clone, Debug, PartialEq)]
pub enum Located {
    Vertex { id: u32 },
    Edge { id: u32, t: f64 },
    Triangle { id: u32, bary: [f64; 3] },
    Tet { id: u32, bary: [f64; 4] },
}

pub fn locate(patch: &TriangulatedPatch, p: &Point) -> Result<Located> {
    let tol = 1e-9;
    if patch.top_dim() == 3 {
        let mut best: Option<(u32, [f64; 4], f64)> = None;
        for t in 0..patch.tets.len() as u32 {
            if let Some(b) = tet_barycentric(&patch.tet_points(t), p) {
                let margin = b.iter().cloned().fold(f64::INFINITY, f64::min);
                if best.as_ref().is_none_or(|(_, _, m)| margin > *m) {
                    best = Some((t, b, margin));
                }
            }
        }
        let Some((t, b, margin)) = best else { return Err(Error::OutsidePatch(*p)) };
        if margin < -tol {
            return Err(Error::OutsidePatch(*p));
        }
        let verts = patch.tets[t as usize];
        let support: Vec<usize> = (0..4).filter(|&i| b[i] > tol).collect();
        return Ok(match support.len() {
            1 => Located::Vertex { id: verts[support[0]] },
            2 => {
                let (a, c) = (verts[support[0]], verts[support[1]]);
                let (id, sign) = patch.edge_between(a, c).expect("tet edge");
                let t_par = if sign > 0 { b[support[1]] } else { b[support[0]] };
                Located::Edge { id, t: t_par / (b[support[0]] + b[support[1]]) }
            }
            3 => {
                let vs = [verts[support[0]], verts[support[1]], verts[support[2]]];
                let id = patch.triangle_by_vertices(vs).ok_or(Error::OutsidePatch(*p))?;
                let stored = patch.triangles[id as usize];
                let mut bary = [0.0; 3];
                for (k, &sv) in stored.iter().enumerate() {
                    let pos = support.iter().position(|&i| verts[i] == sv).unwrap();
                    bary[k] = b[support[pos]];
                }
                let s: f64 = bary.iter().sum();
                Located::Triangle { id, bary: bary.map(|x| x / s) }
            }
            _ => Located::Tet { id: t, bary: b },
        });
    }

    let mut best: Option<(u32, [f64; 3], f64)> = None;
    for t in 0..patch.triangles.len() as u32 {
        if let Some(b) = triangle_barycentric(&patch.model, &patch.triangle_points(t), p) {
            let margin = b.iter().cloned().fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|(_, _, m)| margin > *m) {
                best = Some((t, b, margin));
            }
        }
    }
    let Some((t, b, margin)) = best else { return Err(Error::OutsidePatch(*p)) };
    if margin < -tol {
        return Err(Error::OutsidePatch(*p));
    }
    let verts = patch.triangles[t as usize];
    let support: Vec<usize> = (0..3).filter(|&i| b[i] > tol).collect();
    Ok(match support.len() {
        1 => Located::Vertex { id: verts[support[0]] },
        2 => {
            let (a, c) = (verts[support[0]], verts[support[1]]);
            let (id, sign) = patch.edge_between(a, c).expect("triangle edge");
            let t_par = if sign > 0 { b[support[1]] } else { b[support[0]] };
            Located::Edge { id, t: t_par / (b[support[0]] + b[support[1]]) }
        }
        _ => Located::Triangle { id: t, bary: b },
    })
}

// ---------------------------------------------------------------------
// PL chains

/// One coordinate piece: a polyline (dim 1), an oriented triangle
/// (dim 2, three coords), or an oriented tetrahedron (dim 3).
#[derive(Clone, Debug, PartialEq)]
pub struct PLPiece {
    pub coords: Vec<Point>,
    pub multiplicity: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PLChain {
    pub dim: usize,
    pub pieces: Vec<PLPiece>,
}

impl PLChain {
    pub fn empty(dim: usize) -> Self {
        PLChain { dim, pieces: Vec::new() }
    }

    pub fn volume(&self, model: &ModelGeometry) -> f64 {
        let mut total = 0.0;
        for piece in &self.pieces {
            let v = match self.dim {
                1 => piece
                    .coords
                    .windows(2)
                    .map(|s| model.segment_length(&s[0], &s[1]))
                    .sum::<f64>(),
                2 => model.triangle_area(&piece.coords[0], &piece.coords[1], &piece.coords[2]),
                3 => model
                    .tet_volume_signed(
                        &piece.coords[0],
                        &piece.coords[1],
                        &piece.coords[2],
                        &piece.coords[3],
                    )
                    .abs(),
                _ => 0.0,
            };
            total += v * piece.multiplicity.unsigned_abs() as f64;
        }
        total
    }

    /// Subdivide until every segment / triangle edge is at most
    /// max_edge. Straight pieces keep their volume exactly; hyperbolic
    /// pieces keep it to angle-defect additivity.
    pub fn refine(&self, model: &ModelGeometry, max_edge: f64) -> PLChain {
        assert!(max_edge > 0.0, "max_edge must be positive");
        let mut out = PLChain::empty(self.dim);
        for piece in &self.pieces {
            match self.dim {
                1 => {
                    let mut coords = vec![piece.coords[0]];
                    for s in piece.coords.windows(2) {
                        let len = model.segment_length(&s[0], &s[1]);
                        let parts = (len / max_edge).ceil().max(1.0) as usize;
                        for i in 1..=parts {
                            coords.push(model.interpolate(&s[0], &s[1], i as f64 / parts as f64));
                        }
                    }
                    out.pieces.push(PLPiece { coords, multiplicity: piece.multiplicity });
                }
                2 => {
                    let mut queue = vec![[piece.coords[0], piece.coords[1], piece.coords[2]]];
                    while let Some(t) = queue.pop() {
                        let lens = [
                            model.segment_length(&t[0], &t[1]),
                            model.segment_length(&t[1], &t[2]),
                            model.segment_length(&t[2], &t[0]),
                        ];
                        let (k, &l) = lens
                            .iter()
                            .enumerate()
                            .max_by(|a, b| a.1.total_cmp(b.1))
                            .unwrap();
                        if l <= max_edge {
                            out.pieces.push(PLPiece {
                                coords: t.to_vec(),
                                multiplicity: piece.multiplicity,
                            });
                            continue;
                        }
                        let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                        let m = model.midpoint(&a, &b);
                        queue.push([a, m, c]);
                        queue.push([m, b, c]);
                    }
                }
                _ => out.pieces.push(piece.clone()),
            }
        }
        out
    }

    /// Is the dim-1 piece set a union of closed polylines?
    pub fn is_closed_loops(&self) -> bool {
        self.dim == 1
            && self.pieces.iter().all(|p| {
                p.coords.len() >= 2
                    && norm(&sub(p.coords.first().unwrap(), p.coords.last().unwrap())) <= 1e-9
            })
    }
}

// ---------------------------------------------------------------------
// Patch builders

/// Unit grid on [−extent, extent]², each square split along the SW–NE
/// diagonal. 8·extent² triangles on (2·extent+1)² vertices.
pub fn build_grid_e2(extent: usize) -> Result<TriangulatedPatch> {
    if extent == 0 {
        return Err(Error::PatchParameter("extent must be at least 1".into()));
    }
    let n = extent as i64;
    let side = 2 * n + 1;
    let vid = |x: i64, y: i64| -> u32 { ((y + n) * side + (x + n)) as u32 };
    let mut vertices = Vec::with_capacity((side * side) as usize);
    for y in -n..=n {
        for x in -n..=n {
            vertices.push([x as f64, y as f64, 0.0]);
        }
    }
    let mut triangles = Vec::with_capacity((8 * extent * extent) as usize);
    for y in -n..n {
        for x in -n..n {
            let (sw, se, ne, nw) = (vid(x, y), vid(x + 1, y), vid(x + 1, y + 1), vid(x, y + 1));
            triangles.push([sw, se, ne]);
            triangles.push([sw, ne, nw]);
        }
    }
    TriangulatedPatch::new(
        ModelGeometry::E2,
        vertices,
        triangles,
        Vec::new(),
        vec![
            DeckGenerator::Translation([1.0, 0.0, 0.0]),
            DeckGenerator::Translation([0.0, 1.0, 0.0]),
        ],
    )
}

/// Unit cubes on [−extent, extent]³, each split into the six Kuhn
/// tetrahedra sharing the main diagonal. Face-compatible across cubes;
/// every tetrahedron has volume 1/6.
pub fn build_grid_e3(extent: usize) -> Result<TriangulatedPatch> {
    if extent == 0 {
        return Err(Error::PatchParameter("extent must be at least 1".into()));
    }
    let n = extent as i64;
    let side = 2 * n + 1;
    let vid = |p: [i64; 3]| -> u32 {
        (((p[2] + n) * side + (p[1] + n)) * side + (p[0] + n)) as u32
    };
    let mut vertices = Vec::with_capacity((side * side * side) as usize);
    for z in -n..=n {
        for y in -n..=n {
            for x in -n..=n {
                vertices.push([x as f64, y as f64, z as f64]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::new();
    let mut tris = std::collections::BTreeSet::new();
    for z in -n..n {
        for y in -n..n {
            for x in -n..n {
                for perm in PERMS {
                    let mut corner = [x, y, z];
                    let mut ids = [vid(corner), 0, 0, 0];
                    for (step, &axis) in perm.iter().enumerate() {
                        corner[axis] += 1;
                        ids[step + 1] = vid(corner);
                    }
                    // orient positively so signed volumes are +1/6
                    let pts = ids.map(|i| vertices[i as usize]);
                    if ModelGeometry::E3.tet_volume_signed(&pts[0], &pts[1], &pts[2], &pts[3])
                        < 0.0
                    {
                        ids.swap(2, 3);
                    }
                    tets.push(ids);
                    for skip in 0..4 {
                        let mut f: Vec<u32> =
                            (0..4).filter(|&i| i != skip).map(|i| ids[i]).collect();
                        f.sort_unstable();
                        tris.insert([f[0], f[1], f[2]]);
                    }
                }
            }
        }
    }
    TriangulatedPatch::new(
        ModelGeometry::E3,
        vertices,
        tris.into_iter().collect(),
        tets,
        vec![
            DeckGenerator::Translation([1.0, 0.0, 0.0]),
            DeckGenerator::Translation([0.0, 1.0, 0.0]),
            DeckGenerator::Translation([0.0, 0.0, 1.0]),
        ],
    )
}

/// Regular {8,8} octagons coned from their barycenters, grown by
/// side-adjacency from the fundamental octagon for `radius` layers.
/// Radius 1 is the single central octagon (8 triangles). Guarded at 4
/// layers: the tiling grows exponentially and coordinates with it.
pub fn build_h2_tiling(radius: usize) -> Result<TriangulatedPatch> {
    if radius == 0 || radius > 4 {
        return Err(Error::PatchParameter(format!(
            "octagon layer count {radius} outside 1..=4"
        )));
    }
    // grow by the primitive side pairings: these (with inverses) carry
    // a tile exactly onto its eight side-adjacent neighbors, so shared
    // sides glue bit-for-bit; the group generators are words in them
    let pairings = hyperbolic::side_pairing_system();
    let mut steps: Vec<Mat3> = Vec::new();
    for g in &pairings {
        steps.push(*g);
        steps.push(hyperbolic::mat_lorentz_inverse(g));
    }

    let center0 = hyperbolic::ORIGIN;
    let corners0: Vec<Point> = (0..8).map(hyperbolic::octagon_vertex).collect();

    // breadth-first over tiles, deduplicated by mapped center
    let mut tiles: Vec<Mat3> = vec![hyperbolic::IDENTITY];
    let mut centers: Vec<Point> = vec![center0];
    let mut layer_start = 0;
    for _ in 1..radius {
        let layer_end = tiles.len();
        for i in layer_start..layer_end {
            for s in &steps {
                let m = hyperbolic::mat_mul(&tiles[i], s);
                let c = hyperbolic::renormalize(&hyperbolic::mat_apply(&m, &center0));
                if centers.iter().all(|e| coord_gap(e, &c) > 1e-3) {
                    tiles.push(m);
                    centers.push(c);
                }
            }
        }
        layer_start = layer_end;
    }

    let mut vertices: Vec<Point> = Vec::new();
    let vertex_of = |p: Point, vertices: &mut Vec<Point>| -> u32 {
        for (i, v) in vertices.iter().enumerate() {
            if coord_gap(v, &p) < 1e-3 {
                return i as u32;
            }
        }
        vertices.push(hyperbolic::renormalize(&p));
        (vertices.len() - 1) as u32
    };
    let mut triangles = Vec::with_capacity(8 * tiles.len());
    for m in &tiles {
        let c = vertex_of(hyperbolic::renormalize(&hyperbolic::mat_apply(m, &center0)), &mut vertices);
        let ring: Vec<u32> = corners0
            .iter()
            .map(|v| {
                vertex_of(hyperbolic::renormalize(&hyperbolic::mat_apply(m, v)), &mut vertices)
            })
            .collect();
        for k in 0..8 {
            triangles.push([c, ring[k], ring[(k + 1) % 8]]);
        }
    }
    TriangulatedPatch::new(
        ModelGeometry::H2,
        vertices,
        triangles,
        Vec::new(),
        pairings.iter().map(|g| DeckGenerator::Hyperbolic(*g)).collect(),
    )
}

fn coord_gap(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).abs().max((a[1] - b[1]).abs()).max((a[2] - b[2]).abs())
}

/// Boundary of a triangle 2-chain as a dim-1 chain: the three oriented
/// sides of every piece, with bitwise-equal opposite segments cancelled.
/// Interior walls of a coherently oriented chain cancel exactly because
/// shared vertices are shared bit patterns.
pub fn two_chain_boundary(chain: &PLChain) -> Result<PLChain> {
    if chain.dim != 2 {
        return Err(Error::PatchParameter("boundary expects a dim-2 chain".into()));
    }
    let bits = |p: &Point| [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()];
    let mut ledger: BTreeMap<([u64; 3], [u64; 3]), (Point, Point, i64)> = BTreeMap::new();
    for piece in &chain.pieces {
        if piece.coords.len() != 3 {
            return Err(Error::PatchParameter(format!(
                "2-chain piece with {} corners",
                piece.coords.len()
            )));
        }
        for i in 0..3 {
            let (a, b) = (piece.coords[i], piece.coords[(i + 1) % 3]);
            let (ka, kb) = (bits(&a), bits(&b));
            if ka <= kb {
                ledger.entry((ka, kb)).or_insert((a, b, 0)).2 += piece.multiplicity;
            } else {
                ledger.entry((kb, ka)).or_insert((b, a, 0)).2 -= piece.multiplicity;
            }
        }
    }
    let mut out = PLChain::empty(1);
    for (_, (a, b, m)) in ledger {
        if m != 0 {
            out.pieces.push(PLPiece { coords: vec![a, b], multiplicity: m });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Skeleton loops

/// Closed edge path(s) in a patch 1-skeleton. Pushed loop images can
/// fragment into several circuits, so a loop is a list of closed
/// circuits; built-in families always produce exactly one.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SkeletonLoop {
    pub circuits: Vec<Vec<(u32, i8)>>,
}

impl SkeletonLoop {
    pub fn edge_count(&self) -> usize {
        self.circuits.iter().map(Vec::len).sum()
    }

    pub fn cycle(&self) -> CellularOneCycle {
        let mut out = CellularOneCycle::default();
        for circuit in &self.circuits {
            for &(e, s) in circuit {
                out.add(e, s as i64);
            }
        }
        out
    }

    /// Endpoint-chaining invariant: every circuit closes up.
    pub fn validate(&self, patch: &TriangulatedPatch) -> Result<()> {
        for circuit in &self.circuits {
            if circuit.is_empty() {
                continue;
            }
            let mut at = circuit_start(patch, circuit[0]);
            for &(e, s) in circuit {
                let [a, b] = patch.edges[e as usize];
                let (from, to) = if s > 0 { (a, b) } else { (b, a) };
                if from != at {
                    return Err(Error::NotABoundary(format!(
                        "circuit breaks at edge {e}: expected vertex {at}, found {from}"
                    )));
                }
                at = to;
            }
            if at != circuit_start(patch, circuit[0]) {
                return Err(Error::NotABoundary("circuit does not close".into()));
            }
        }
        Ok(())
    }

    /// Geometric realization as a dim-1 chain along patch edges.
    pub fn to_chain(&self, patch: &TriangulatedPatch) -> PLChain {
        let mut chain = PLChain::empty(1);
        for circuit in &self.circuits {
            if circuit.is_empty() {
                continue;
            }
            let mut coords = vec![patch.point(circuit_start(patch, circuit[0]))];
            for &(e, s) in circuit {
                let [a, b] = patch.edges[e as usize];
                coords.push(patch.point(if s > 0 { b } else { a }));
            }
            chain.pieces.push(PLPiece { coords, multiplicity: 1 });
        }
        chain
    }

    pub fn metric_length(&self, patch: &TriangulatedPatch) -> f64 {
        self.circuits
            .iter()
            .flatten()
            .map(|&(e, _)| patch.edge_length(e))
            .sum()
    }
}

fn circuit_start(patch: &TriangulatedPatch, first: (u32, i8)) -> u32 {
    let [a, b] = patch.edges[first.0 as usize];
    if first.1 > 0 {
        a
    } else {
        b
    }
}

/// Straighten a chain lying in the 1-skeleton into an edge path:
/// pointwise backtracks collapse, every polyline corner snaps to the
/// nearest edge endpoint, and the snapped vertex walk drops repeated
/// and reversing steps. Returns the loop and the total snap length —
/// the area surrogate of the straightening homotopy, zero when the
/// input already is an edge loop.
pub fn combinatorialize_loop(
    eta: &PLChain,
    patch: &TriangulatedPatch,
) -> Result<(SkeletonLoop, f64)> {
    const SKELETON_TOL: f64 = 1e-9;
    if eta.dim != 1 {
        return Err(Error::PatchParameter("combinatorialize expects a dim-1 chain".into()));
    }
    let circuits = stitch_circuits(eta)?;
    let mut skeleton = SkeletonLoop::default();
    let mut homotopy_area = 0.0;
    let step = patch.min_edge_length() / 2.0;

    for mut pts in circuits {
        // collapse exact out-and-back spurs before any snapping
        collapse_point_backtracks(&mut pts);
        if pts.len() < 2 {
            continue;
        }
        // refine so consecutive snaps are equal or adjacent vertices;
        // corner points keep their snap cost, interpolated ones are
        // along-edge and sweep nothing
        let mut walk: Vec<u32> = Vec::new();
        let closed_len = pts.len() - 1; // last == first
        for i in 0..closed_len {
            let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
            let seg = patch.model.segment_length(&a, &b);
            let parts = (seg / step).ceil().max(1.0) as usize;
            for j in 0..parts {
                let p = patch.model.interpolate(&a, &b, j as f64 / parts as f64);
                on_skeleton(patch, &p, SKELETON_TOL)?;
                let (v, d) = patch.nearest_vertex(&p);
                if j == 0 {
                    homotopy_area += d;
                }
                if walk.last() != Some(&v) {
                    walk.push(v);
                }
            }
        }
        if let (Some(&first), Some(&last)) = (walk.first(), walk.last()) {
            if first == last {
                walk.pop();
            }
        }
        collapse_walk_backtracks(&mut walk);
        if walk.len() < 2 {
            continue;
        }
        let mut circuit = Vec::with_capacity(walk.len());
        for i in 0..walk.len() {
            let (u, v) = (walk[i], walk[(i + 1) % walk.len()]);
            let (e, s) = patch.edge_between(u, v).ok_or_else(|| {
                Error::NotABoundary(format!("snapped walk skips from vertex {u} to {v}"))
            })?;
            circuit.push((e, s));
        }
        skeleton.circuits.push(circuit);
    }
    skeleton.validate(patch)?;
    Ok((skeleton, homotopy_area))
}

/// Assemble the chain's polylines into closed coordinate circuits,
/// gluing pieces whose endpoints coincide within 1e-9.
///
/// Coincidence is a coordinate comparison: the hyperbolic metric loses
/// resolution near zero (acosh flattens at 1), so even bitwise-equal
/// hyperboloid points can report a nonzero distance.
fn stitch_circuits(eta: &PLChain) -> Result<Vec<Vec<Point>>> {
    let tol = 1e-9;
    let mut fragments: Vec<Vec<Point>> = Vec::new();
    for piece in &eta.pieces {
        if piece.coords.len() < 2 {
            continue;
        }
        match piece.multiplicity {
            0 => continue,
            m => {
                let mut coords = piece.coords.clone();
                if m < 0 {
                    coords.reverse();
                }
                for _ in 0..m.unsigned_abs() {
                    fragments.push(coords.clone());
                }
            }
        }
    }
    let mut circuits = Vec::new();
    while let Some(mut current) = fragments.pop() {
        loop {
            let head = *current.first().unwrap();
            let tail = *current.last().unwrap();
            if coord_gap(&head, &tail) <= tol {
                current.pop();
                current.push(head); // bit-close the circuit
                circuits.push(current);
                break;
            }
            let next = fragments.iter().position(|f| {
                coord_gap(f.first().unwrap(), &tail) <= tol
                    || coord_gap(f.last().unwrap(), &tail) <= tol
            });
            match next {
                Some(i) => {
                    let mut f = fragments.swap_remove(i);
                    if coord_gap(f.last().unwrap(), &tail) <= tol {
                        f.reverse();
                    }
                    current.extend_from_slice(&f[1..]);
                }
                None => {
                    return Err(Error::NotABoundary(
                        "chain endpoints do not close into circuits".into(),
                    ))
                }
            }
        }
    }
    Ok(circuits)
}

fn collapse_point_backtracks(pts: &mut Vec<Point>) {
    let tol = 1e-9;
    loop {
        if pts.len() < 3 {
            return;
        }
        let n = pts.len() - 1; // closed: last == first
        let mut removed = false;
        let mut i = 0;
        while i < n && pts.len() > 3 {
            let m = pts.len() - 1;
            let prev = pts[(i + m - 1) % m];
            let next = pts[(i + 1) % m];
            if coord_gap(&prev, &next) <= tol {
                // spur tip at i: prev -> tip -> prev retraces
                let tip = i;
                pts.remove(tip);
                let m2 = pts.len() - 1;
                pts.remove(if tip == 0 { m2 } else { tip % (m2 + 1) });
                // restore closure after index surgery
                let first = pts[0];
                *pts.last_mut().unwrap() = first;
                removed = true;
            } else {
                i += 1;
            }
        }
        if !removed {
            return;
        }
    }
}

fn collapse_walk_backtracks(walk: &mut Vec<u32>) {
    loop {
        let n = walk.len();
        if n < 3 {
            return;
        }
        let mut out: Vec<u32> = Vec::with_capacity(n);
        let mut removed = false;
        let mut i = 0;
        while i < n {
            let prev = walk[(i + n - 1) % n];
            let next = walk[(i + 1) % n];
            if prev == next && n > 2 && !removed {
                // drop the tip and one duplicate neighbour
                removed = true;
                i += 2;
                continue;
            }
            out.push(walk[i]);
            i += 1;
        }
        if !removed {
            return;
        }
        *walk = out;
        // rotation may leave the duplicate at the seam
        while walk.len() >= 2 && walk.first() == walk.last() {
            walk.pop();
        }
    }
}

fn on_skeleton(patch: &TriangulatedPatch, p: &Point, tol: f64) -> Result<()> {
    if patch.model == ModelGeometry::H2 {
        return on_skeleton_h2(patch, p, tol);
    }
    // degenerate-triangle criterion: p is within tol of segment ab iff
    // d(a,p) + d(p,b) exceeds d(a,b) by at most order tol
    for e in 0..patch.edges.len() as u32 {
        let [a, b] = patch.edges[e as usize];
        let (pa, pb) = (patch.point(a), patch.point(b));
        let excess = patch.model.segment_length(&pa, p) + patch.model.segment_length(p, &pb)
            - patch.model.segment_length(&pa, &pb);
        if excess <= tol {
            return Ok(());
        }
    }
    Err(Error::NotInSkeleton(*p))
}

/// Hyperboloid geodesics are central plane sections, so edge membership
/// is linear algebra: p lies on segment ab iff det[a, b, p] vanishes
/// and p sits in the positive cone of a and b. Metric distances cannot
/// express this — acosh flattens near 1, so even exact on-edge points
/// far from the origin report distances of order sqrt(eps)·|p|.
fn on_skeleton_h2(patch: &TriangulatedPatch, p: &Point, tol: f64) -> Result<()> {
    for e in 0..patch.edges.len() as u32 {
        let [a, b] = patch.edges[e as usize];
        let (pa, pb) = (patch.point(a), patch.point(b));
        let n = cross(&pa, &pb);
        if dot(&n, p).abs() > tol * norm(&n) * norm(p) {
            continue;
        }
        let (aa, ab, bb) = (dot(&pa, &pa), dot(&pa, &pb), dot(&pb, &pb));
        let (qa, qb) = (dot(p, &pa), dot(p, &pb));
        let det = aa * bb - ab * ab;
        if det <= 0.0 {
            continue;
        }
        let alpha = (qa * bb - qb * ab) / det;
        let beta = (qb * aa - qa * ab) / det;
        if alpha >= -tol && beta >= -tol {
            return Ok(());
        }
    }
    Err(Error::NotInSkeleton(*p))
}

// ---------------------------------------------------------------------
// JSON with fixed 17-significant-digit floats

fn fmt_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x }; // normalize -0.0
    format!("{x:.16e}")
}

fn fmt_point(p: &Point) -> String {
    format!("[{},{},{}]", fmt_float(p[0]), fmt_float(p[1]), fmt_float(p[2]))
}

pub fn write_mesh_json(patch: &TriangulatedPatch) -> String {
    let vertices: Vec<String> = patch.vertices.iter().map(fmt_point).collect();
    let d1: Vec<String> = patch.edges.iter().map(|e| format!("[{},{}]", e[0], e[1])).collect();
    let d2: Vec<String> =
        patch.triangles.iter().map(|t| format!("[{},{},{}]", t[0], t[1], t[2])).collect();
    let d3: Vec<String> = patch
        .tets
        .iter()
        .map(|t| format!("[{},{},{},{}]", t[0], t[1], t[2], t[3]))
        .collect();
    let deck: Vec<String> = patch
        .deck_generators
        .iter()
        .map(|g| match g {
            DeckGenerator::Translation(t) => format!("{{\"translation\":{}}}", fmt_point(t)),
            DeckGenerator::Hyperbolic(m) => {
                let rows: Vec<String> = m.iter().map(|r| fmt_point(r)).collect();
                format!("{{\"matrix\":[{}]}}", rows.join(","))
            }
        })
        .collect();
    format!(
        "{{\"model\":\"{}\",\"vertices\":[{}],\"simplices\":{{\"d1\":[{}],\"d2\":[{}],\"d3\":[{}]}},\"deck\":[{}]}}",
        patch.model.name(),
        vertices.join(","),
        d1.join(","),
        d2.join(","),
        d3.join(","),
        deck.join(",")
    )
}

pub fn write_chain_json(chain: &PLChain) -> String {
    let pieces: Vec<String> = chain
        .pieces
        .iter()
        .map(|p| {
            let coords: Vec<String> = p.coords.iter().map(fmt_point).collect();
            format!(
                "{{\"coords\":[{}],\"multiplicity\":{}}}",
                coords.join(","),
                p.multiplicity
            )
        })
        .collect();
    format!("{{\"dim\":{},\"pieces\":[{}]}}", chain.dim, pieces.join(","))
}

fn json_point(v: &serde_json::Value) -> Result<Point> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Serialization("coordinate is not an array".into()))?;
    if arr.len() != 2 && arr.len() != 3 {
        return Err(Error::Serialization("coordinate arity must be 2 or 3".into()));
    }
    let mut p = [0.0; 3];
    for (i, x) in arr.iter().enumerate() {
        p[i] = x
            .as_f64()
            .ok_or_else(|| Error::Serialization("coordinate is not a number".into()))?;
    }
    Ok(p)
}

fn json_ids<const N: usize>(v: &serde_json::Value) -> Result<[u32; N]> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Serialization("simplex is not an array".into()))?;
    if arr.len() != N {
        return Err(Error::Serialization(format!("simplex arity {} != {N}", arr.len())));
    }
    let mut out = [0u32; N];
    for (i, x) in arr.iter().enumerate() {
        out[i] = x
            .as_u64()
            .ok_or_else(|| Error::Serialization("vertex id is not an integer".into()))?
            as u32;
    }
    Ok(out)
}

pub fn read_mesh_json(text: &str) -> Result<TriangulatedPatch> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
    let model = match v["model"].as_str() {
        Some("E2") => ModelGeometry::E2,
        Some("E3") => ModelGeometry::E3,
        Some("H2") => ModelGeometry::H2,
        other => return Err(Error::Serialization(format!("unknown model {other:?}"))),
    };
    let vertices = v["vertices"]
        .as_array()
        .ok_or_else(|| Error::Serialization("missing vertices".into()))?
        .iter()
        .map(json_point)
        .collect::<Result<Vec<_>>>()?;
    let empty = Vec::new();
    let triangles = v["simplices"]["d2"]
        .as_array()
        .unwrap_or(&empty)
        .iter()
        .map(json_ids::<3>)
        .collect::<Result<Vec<_>>>()?;
    let tets = v["simplices"]["d3"]
        .as_array()
        .unwrap_or(&empty)
        .iter()
        .map(json_ids::<4>)
        .collect::<Result<Vec<_>>>()?;
    let mut deck = Vec::new();
    for g in v["deck"].as_array().unwrap_or(&empty) {
        if let Some(t) = g.get("translation") {
            deck.push(DeckGenerator::Translation(json_point(t)?));
        } else if let Some(m) = g.get("matrix") {
            let rows = m
                .as_array()
                .ok_or_else(|| Error::Serialization("matrix is not an array".into()))?;
            if rows.len() != 3 {
                return Err(Error::Serialization("matrix must have 3 rows".into()));
            }
            let mut mat = [[0.0; 3]; 3];
            for (i, r) in rows.iter().enumerate() {
                mat[i] = json_point(r)?;
            }
            deck.push(DeckGenerator::Hyperbolic(mat));
        } else {
            return Err(Error::Serialization("unknown deck generator form".into()));
        }
    }
    TriangulatedPatch::new(model, vertices, triangles, tets, deck)
}

pub fn read_chain_json(text: &str) -> Result<PLChain> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
    let dim = v["dim"]
        .as_u64()
        .ok_or_else(|| Error::Serialization("missing chain dim".into()))? as usize;
    if !(1..=3).contains(&dim) {
        return Err(Error::Serialization(format!("chain dim {dim} outside 1..=3")));
    }
    let mut chain = PLChain::empty(dim);
    let empty = Vec::new();
    for p in v["pieces"].as_array().unwrap_or(&empty) {
        let coords = p["coords"]
            .as_array()
            .ok_or_else(|| Error::Serialization("piece missing coords".into()))?
            .iter()
            .map(json_point)
            .collect::<Result<Vec<_>>>()?;
        let multiplicity = p["multiplicity"]
            .as_i64()
            .ok_or_else(|| Error::Serialization("piece missing multiplicity".into()))?;
        let expected = match dim {
            2 => Some(3),
            3 => Some(4),
            _ => None,
        };
        if let Some(e) = expected {
            if coords.len() != e {
                return Err(Error::Serialization(format!(
                    "dim-{dim} piece must have {e} coords, found {}",
                    coords.len()
                )));
            }
        }
        chain.pieces.push(PLPiece { coords, multiplicity });
    }
    Ok(chain)
}

/// Integer 2-chain on a patch whose cells are the patch triangles.
pub fn chain_to_pl(chain: &CellularTwoChain, patch: &TriangulatedPatch) -> PLChain {
    let mut out = PLChain::empty(2);
    for (&cell, &mult) in &chain.coefficients {
        out.pieces.push(PLPiece {
            coords: patch.triangle_points(cell).to_vec(),
            multiplicity: mult,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_e2_counts_match_closed_forms() {
        for extent in 1..=4usize {
            let patch = build_grid_e2(extent).unwrap();
            assert_eq!(patch.triangles.len(), 8 * extent * extent);
            assert_eq!(patch.vertices.len(), (2 * extent + 1) * (2 * extent + 1));
            assert_eq!(patch.euler_characteristic(), 1, "grid discs are contractible");
        }
    }

    #[test]
    fn grid_e2_validates_and_respects_deck_translations() {
        let patch = build_grid_e2(2).unwrap();
        patch.validate_intersections().unwrap();
        for g in &patch.deck_generators {
            let mut mapped_interior = 0;
            for v in &patch.vertices {
                let image = g.apply(v);
                if image[0].abs() <= 2.0 && image[1].abs() <= 2.0 {
                    let (_, d) = patch.nearest_vertex(&image);
                    assert!(d <= 1e-9, "translated vertex missing from patch");
                    mapped_interior += 1;
                }
            }
            assert!(mapped_interior > 0);
        }
    }

    #[test]
    fn grid_e3_counts_and_volumes() {
        let patch = build_grid_e3(1).unwrap();
        assert_eq!(patch.tets.len(), 48, "8 cubes, 6 Kuhn tetrahedra each");
        for t in 0..patch.tets.len() as u32 {
            let [a, b, c, d] = patch.tet_points(t);
            let vol = patch.model.tet_volume_signed(&a, &b, &c, &d);
            assert!((vol - 1.0 / 6.0).abs() < 1e-12, "Kuhn volume 1/6, got {vol}");
        }
    }

    #[test]
    fn grid_e3_faces_are_shared_consistently() {
        let patch = build_grid_e3(1).unwrap();
        // every interior triangle bounds exactly two tetrahedra
        let mut face_count: HashMap<[u32; 3], usize> = HashMap::new();
        for t in &patch.tets {
            for skip in 0..4 {
                let mut f: Vec<u32> = (0..4).filter(|&i| i != skip).map(|i| t[i]).collect();
                f.sort_unstable();
                *face_count.entry([f[0], f[1], f[2]]).or_default() += 1;
            }
        }
        for (&face, &count) in &face_count {
            assert!(count <= 2, "face {face:?} shared by {count} > 2 tets");
        }
        assert!(face_count.values().any(|&c| c == 2));
    }

    #[test]
    fn h2_tiling_radius_one_is_a_coned_octagon() {
        let patch = build_h2_tiling(1).unwrap();
        assert_eq!(patch.triangles.len(), 8);
        assert_eq!(patch.vertices.len(), 9);
        let areas: Vec<f64> = (0..8)
            .map(|t| {
                let [a, b, c] = patch.triangle_points(t);
                patch.model.triangle_area(&a, &b, &c)
            })
            .collect();
        for a in &areas {
            assert!((a - areas[0]).abs() < 1e-9, "coning is symmetric");
        }
        // interior angle pi/4 at every corner: eight tiles close a 2*pi
        // corner cycle
        for m in 0..8 {
            let v = hyperbolic::octagon_vertex(m);
            let prev = hyperbolic::octagon_vertex((m + 7) % 8);
            let next = hyperbolic::octagon_vertex((m + 1) % 8);
            let angle = hyperbolic::angle_at(&v, &prev, &next);
            assert!(
                (angle - std::f64::consts::PI / 4.0).abs() < 1e-9,
                "corner angle {angle}"
            );
        }
    }

    #[test]
    fn h2_tiling_layers_grow_by_side_adjacency() {
        let patch = build_h2_tiling(2).unwrap();
        assert_eq!(patch.triangles.len(), 72, "central octagon plus 8 side neighbours");
        // shared sides glue to shared vertex ids: Euler characteristic
        // of a disc again
        assert_eq!(patch.euler_characteristic(), 1);
    }

    #[test]
    fn h2_deck_generators_map_central_tile_onto_neighbours() {
        let patch = build_h2_tiling(2).unwrap();
        for g in &patch.deck_generators {
            for m in 0..8 {
                let image = g.apply(&hyperbolic::octagon_vertex(m));
                let (_, gap) = patch.nearest_vertex_by_coords(&image);
                assert!(gap < 1e-8, "deck image of corner {m} missing, coord gap {gap}");
            }
        }
    }

    #[test]
    fn volume_of_unit_square_loop_is_four() {
        let loop_chain = PLChain {
            dim: 1,
            pieces: vec![PLPiece {
                coords: vec![
                    [0.0, 0.0, 0.0],
                    [1.0, 0.0, 0.0],
                    [1.0, 1.0, 0.0],
                    [0.0, 1.0, 0.0],
                    [0.0, 0.0, 0.0],
                ],
                multiplicity: 1,
            }],
        };
        assert!((loop_chain.volume(&ModelGeometry::E2) - 4.0).abs() < 1e-12);
        assert!(PLChain::empty(1).volume(&ModelGeometry::E2).abs() == 0.0);
    }

    #[test]
    fn volume_of_h2_segment_is_its_rapidity() {
        let t = 1.37f64;
        let chain = PLChain {
            dim: 1,
            pieces: vec![PLPiece {
                coords: vec![[0.0, 0.0, 1.0], [t.sinh(), 0.0, t.cosh()]],
                multiplicity: 1,
            }],
        };
        assert!((chain.volume(&ModelGeometry::H2) - t).abs() < 1e-12);
    }

    #[test]
    fn locate_identifies_faces_by_dimension() {
        let patch = build_grid_e2(1).unwrap();
        // barycenter of the first triangle
        let [a, b, c] = patch.triangle_points(0);
        let bary = scale(&add(&add(&a, &b), &c), 1.0 / 3.0);
        match locate(&patch, &bary).unwrap() {
            Located::Triangle { id: 0, bary } => {
                for l in bary {
                    assert!((l - 1.0 / 3.0).abs() < 1e-12);
                }
            }
            other => panic!("expected triangle 0, got {other:?}"),
        }
        // midpoint of the diagonal shared by triangles 0 and 1
        match locate(&patch, &[-0.5, -0.5, 0.0]).unwrap() {
            Located::Edge { t, .. } => assert!((t - 0.5).abs() < 1e-12),
            other => panic!("expected shared edge, got {other:?}"),
        }
        match locate(&patch, &[1.0, 0.0, 0.0]).unwrap() {
            Located::Vertex { .. } => {}
            other => panic!("expected vertex, got {other:?}"),
        }
        assert!(matches!(
            locate(&patch, &[3.5, 0.0, 0.0]),
            Err(Error::OutsidePatch(_))
        ));
    }

    #[test]
    fn locate_in_e3_returns_tets_and_shared_faces() {
        let patch = build_grid_e3(1).unwrap();
        match locate(&patch, &[0.31, 0.47, 0.11]).unwrap() {
            Located::Tet { bary, .. } => {
                assert!((bary.iter().sum::<f64>() - 1.0).abs() < 1e-12)
            }
            other => panic!("expected tet, got {other:?}"),
        }
        match locate(&patch, &[0.5, 0.5, 0.0]).unwrap() {
            Located::Edge { .. } | Located::Triangle { .. } => {}
            other => panic!("expected a lower face, got {other:?}"),
        }
    }

    #[test]
    fn refine_splits_evenly_and_preserves_volume() {
        let seg = PLChain {
            dim: 1,
            pieces: vec![PLPiece {
                coords: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
                multiplicity: 1,
            }],
        };
        let fine = seg.refine(&ModelGeometry::E2, 0.25);
        assert_eq!(fine.pieces[0].coords.len(), 5, "four equal sub-segments");
        assert!((fine.volume(&ModelGeometry::E2) - 1.0).abs() < 1e-12);
        let again = fine.refine(&ModelGeometry::E2, 0.25);
        assert_eq!(again, fine, "idempotent once edges are short");

        let tri = PLChain {
            dim: 2,
            pieces: vec![PLPiece {
                coords: vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]],
                multiplicity: 3,
            }],
        };
        let fine = tri.refine(&ModelGeometry::E2, 0.5);
        assert!((fine.volume(&ModelGeometry::E2) - 6.0).abs() < 1e-12);
        for p in &fine.pieces {
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                assert!(
                    ModelGeometry::E2.segment_length(&p.coords[i], &p.coords[j]) <= 0.5 + 1e-12
                );
            }
        }
    }

    #[test]
    fn refine_preserves_hyperbolic_area() {
        let tri = PLChain {
            dim: 2,
            pieces: vec![PLPiece {
                coords: vec![
                    hyperbolic::ORIGIN,
                    hyperbolic::octagon_vertex(0),
                    hyperbolic::octagon_vertex(1),
                ],
                multiplicity: 1,
            }],
        };
        let before = tri.volume(&ModelGeometry::H2);
        let after = tri.refine(&ModelGeometry::H2, 0.7).volume(&ModelGeometry::H2);
        assert!(
            (before - after).abs() < 1e-9,
            "angle defect is additive under geodesic subdivision: {before} vs {after}"
        );
    }

    #[test]
    fn combinatorialize_identity_on_edge_loops() {
        let patch = build_grid_e2(2).unwrap();
        let eta = PLChain {
            dim: 1,
            pieces: vec![PLPiece {
                coords: vec![
                    [0.0, 0.0, 0.0],
                    [1.0, 0.0, 0.0],
                    [1.0, 1.0, 0.0],
                    [0.0, 1.0, 0.0],
                    [0.0, 0.0, 0.0],
                ],
                multiplicity: 1,
            }],
        };
        let (zeta, area) = combinatorialize_loop(&eta, &patch).unwrap();
        assert_eq!(area, 0.0);
        assert_eq!(zeta.edge_count(), 4);
        zeta.validate(&patch).unwrap();
    }

    #[test]
    fn combinatorialize_removes_spurs() {
        let patch = build_grid_e2(2).unwrap();
        let eta = PLChain {
            dim: 1,
            pieces: vec![PLPiece {
                coords: vec![
                    [0.0, 0.0, 0.0],
                    [1.0, 0.0, 0.0],
                    [1.0, 0.5, 0.0], // mid-edge spur tip
                    [1.0, 0.0, 0.0],
                    [1.0, 1.0, 0.0],
                    [0.0, 1.0, 0.0],
                    [0.0, 0.0, 0.0],
                ],
                multiplicity: 1,
            }],
        };
        let (zeta, area) = combinatorialize_loop(&eta, &patch).unwrap();
        assert_eq!(area, 0.0, "backtrack collapse sweeps nothing");
        assert_eq!(zeta.edge_count(), 4);
    }

    #[test]
    fn combinatorialize_snaps_fractional_corners() {
        let patch = build_grid_e2(2).unwrap();
        // square loop with corners displaced along edges by 0.2
        let eta = PLChain {
            dim: 1,
            pieces: vec![PLPiece {
                coords: vec![
                    [0.2, 0.0, 0.0],
                    [1.0, 0.0, 0.0],
                    [1.0, 1.0, 0.0],
                    [0.0, 1.0, 0.0],
                    [0.0, 0.2, 0.0],
                    [0.0, 0.0, 0.0],
                    [0.2, 0.0, 0.0],
                ],
                multiplicity: 1,
            }],
        };
        let (zeta, area) = combinatorialize_loop(&eta, &patch).unwrap();
        let eta_len = eta.volume(&ModelGeometry::E2);
        assert!(area <= eta_len, "snap area {area} exceeds loop length {eta_len}");
        assert!((area - 0.4).abs() < 1e-9, "two fractional corners snap 0.2 each");
        assert_eq!(zeta.edge_count(), 4);
        assert!(zeta.edge_count() <= eta.pieces[0].coords.len() + 1);
    }

    #[test]
    fn mesh_json_round_trips_byte_identically() {
        for patch in [build_grid_e2(1).unwrap(), build_h2_tiling(1).unwrap()] {
            let text = write_mesh_json(&patch);
            let back = read_mesh_json(&text).unwrap();
            assert_eq!(write_mesh_json(&back), text);
        }
    }

    #[test]
    fn chain_json_round_trips_byte_identically() {
        let chain = PLChain {
            dim: 2,
            pieces: vec![PLPiece {
                coords: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.25, 0.0]],
                multiplicity: -2,
            }],
        };
        let text = write_chain_json(&chain);
        let back = read_chain_json(&text).unwrap();
        assert_eq!(write_chain_json(&back), text);
        assert_eq!(back, chain);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn located_points_reconstruct_from_barycentrics(
            x in -1.9f64..1.9,
            y in -1.9f64..1.9,
        ) {
            let patch = build_grid_e2(2).unwrap();
            let p = [x, y, 0.0];
            match locate(&patch, &p).unwrap() {
                Located::Triangle { id, bary } => {
                    let t = patch.triangle_points(id);
                    let q = barycentric_combine(&patch.model, &t, &bary);
                    prop_assert!(norm(&sub(&p, &q)) < 1e-9);
                }
                Located::Edge { id, t } => {
                    let [a, b] = patch.edges[id as usize];
                    let q = patch.model.interpolate(&patch.point(a), &patch.point(b), t);
                    prop_assert!(norm(&sub(&p, &q)) < 1e-9);
                }
                Located::Vertex { id } => {
                    prop_assert!(norm(&sub(&p, &patch.point(id))) < 1e-6);
                }
                Located::Tet { .. } => prop_assert!(false, "no tets in a plane patch"),
            }
        }

        #[test]
        fn refinement_preserves_length(
            pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2..6),
            max_edge in 0.05f64..0.8,
        ) {
            let coords: Vec<Point> = pts.iter().map(|&(x, y)| [x, y, 0.0]).collect();
            let chain = PLChain {
                dim: 1,
                pieces: vec![PLPiece { coords, multiplicity: 1 }],
            };
            let before = chain.volume(&ModelGeometry::E2);
            let after = chain.refine(&ModelGeometry::E2, max_edge).volume(&ModelGeometry::E2);
            prop_assert!((before - after).abs() < 1e-9);
        }
    }
}
