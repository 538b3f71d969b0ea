//! Simplicial pushing: radial projection of low-dimensional chains off
//! simplex interiors into the skeleton, with certified volume blowup.
//!
//! A dim-k chain inside a patch of top dimension i is pushed one
//! dimension at a time: within each i-simplex the chain is centrally
//! projected to the simplex boundary from a center chosen at random in
//! a small ball around the normalized centroid. Rejection sampling
//! guarantees the chosen center inflates the chain by at most the
//! threshold v0, a constant depending only on (i, k); the swept
//! homotopy chain S satisfies dS = T - R exactly, by bitwise
//! cancellation of shared faces.
//!
//! Everything runs in affine coordinates. Hyperbolic patches are
//! handled through the projective (Klein) chart, where geodesics are
//! straight lines, so the pushed chain is geodesically correct; the
//! blowup certificate then applies to the normalized chart metric and
//! the report carries sampled chart-to-hyperboloid distortions.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{
    add, cross, dot, norm, scale, sub, ModelGeometry, PLChain, PLPiece, Point, TriangulatedPatch,
};
use crate::hyperbolic;

// ---------------------------------------------------------------------
// The blowup constant

/// Unit-sphere surface measures needed here: a circle and a 2-sphere.
fn sphere_measure(dim_minus_one: usize) -> Result<f64> {
    match dim_minus_one {
        1 => Ok(2.0 * std::f64::consts::PI),
        2 => Ok(4.0 * std::f64::consts::PI),
        _ => Err(Error::DimensionPair { i: dim_minus_one + 1, k: 0 }),
    }
}

/// Volume of the i-ball of radius r.
pub fn ball_volume(i: usize, r: f64) -> Result<f64> {
    match i {
        2 => Ok(std::f64::consts::PI * r * r),
        3 => Ok(4.0 / 3.0 * std::f64::consts::PI * r * r * r),
        _ => Err(Error::DimensionPair { i, k: 0 }),
    }
}

fn check_pair(i: usize, k: usize) -> Result<()> {
    if (i == 2 || i == 3) && k >= 1 && k < i {
        Ok(())
    } else {
        Err(Error::DimensionPair { i, k })
    }
}

/// Closed form of the swept-volume constant: a k-chain of unit volume
/// pushed from a center in B(O, r) sweeps at most K(i, k, r): the
/// radial cone term (2r)^k * w_{i-1} * (3r)^{i-k} / (i-k) plus one ball
/// volume for the initial expulsion.
pub fn compute_k(i: usize, k: usize, r: f64) -> Result<f64> {
    check_pair(i, k)?;
    let cone = (2.0 * r).powi(k as i32) * sphere_measure(i - 1)?
        * (3.0 * r).powi((i - k) as i32)
        / (i - k) as f64;
    Ok(cone + ball_volume(i, r)?)
}

/// Same constant by composite-Simpson quadrature of the radial
/// integrals; the oracle for the closed form.
pub fn compute_k_quadrature(i: usize, k: usize, r: f64, panels: usize) -> Result<f64> {
    check_pair(i, k)?;
    let omega = sphere_measure(i - 1)?;
    let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| -> f64 {
        let n = 2 * panels.max(1);
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for j in 1..n {
            acc += f(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let cone_density = |rho: f64| omega * rho.powi((i - 1 - k) as i32);
    let ball_density = |rho: f64| omega * rho.powi((i - 1) as i32);
    let cone = (2.0 * r).powi(k as i32) * simpson(&cone_density, 0.0, 3.0 * r);
    Ok(cone + simpson(&ball_density, 0.0, r))
}

/// Integer blowup threshold v0 = floor(margin * K / vol B(r)) + 1;
/// independent of r. The ratio is an exact integer for the pairs
/// supported here, so the floor is taken with a part-per-10^12 nudge to
/// keep rounding from dropping it across the boundary.
pub fn v0_threshold(i: usize, k: usize, margin: f64) -> Result<u64> {
    let r = 1.0;
    let ratio = margin * compute_k(i, k, r)? / ball_volume(i, r)?;
    Ok((ratio * (1.0 + 1e-12)).floor() as u64 + 1)
}

// ---------------------------------------------------------------------
// Configuration and report

#[derive(Clone, Debug)]
pub struct PushConfig {
    /// Center ball radius as a fraction of inradius/3; slack below 1
    /// keeps the 3r cone strictly inside the normalized simplex.
    pub r_slack: f64,
    /// Multiplier on K before the integer threshold is taken.
    pub v0_margin: f64,
    /// Center rejection-sampling budget per simplex.
    pub max_retries: u32,
    /// Minimal distance from a center to the chain.
    pub clearance_eps: f64,
    pub seed: u64,
}

impl Default for PushConfig {
    fn default() -> Self {
        PushConfig {
            r_slack: 0.99,
            v0_margin: 1.0,
            max_retries: 64,
            clearance_eps: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimplexReport {
    pub stage_dim: usize,
    pub simplex: u32,
    /// Metric volume of the chain fragments inside this simplex.
    pub vol_before: f64,
    /// Metric volume of their pushed images on the boundary.
    pub vol_after: f64,
    /// Volume ratio in the normalized regular simplex; certified <= v0.
    pub blowup: f64,
    pub centers_tried: u32,
    /// Conditioning of the normalization map (top singular value over
    /// bottom), times the sampled chart distortion for hyperbolic work.
    pub distortion: f64,
}

#[derive(Clone, Debug)]
pub struct PushOutcome {
    /// The pushed chain, supported in the k-skeleton.
    pub result: PLChain,
    /// Swept homotopy chain of dimension k+1 with dS = T - R.
    pub sweep: PLChain,
    /// The input chain subdivided along the cell walls it crosses; equal
    /// to the input as a chain, and the exact bottom of the sweep.
    pub input_clipped: PLChain,
    /// Max over stages of the leftover boundary volume after bitwise
    /// cancellation of dS against (clipped input - result).
    pub boundary_residual: f64,
    pub per_simplex: Vec<SimplexReport>,
    pub v0: u64,
    pub v0_effective: f64,
    pub vol_input: f64,
    pub vol_result: f64,
    pub vol_sweep: f64,
    pub empirical_c: f64,
    pub config: PushConfig,
}

// ---------------------------------------------------------------------
// Bit-level chain accounting

fn point_bits(p: &Point) -> [u64; 3] {
    let n = |x: f64| if x == 0.0 { 0.0f64 } else { x }.to_bits();
    [n(p[0]), n(p[1]), n(p[2])]
}

type SegKey = ([u64; 3], [u64; 3]);
type TriKey = ([u64; 3], [u64; 3], [u64; 3]);

/// Multiset ledger over canonical simplex keys; exact cancellation
/// checks reduce to "every count returns to zero".
#[derive(Default)]
struct Ledger<K: std::hash::Hash + Eq + Copy> {
    counts: HashMap<K, (i64, Vec<Point>)>,
}

impl<K: std::hash::Hash + Eq + Copy> Ledger<K> {
    fn add(&mut self, key: K, mult: i64, witness: &[Point]) {
        let entry = self.counts.entry(key).or_insert_with(|| (0, witness.to_vec()));
        entry.0 += mult;
    }

    fn residual(self) -> Vec<(Vec<Point>, i64)> {
        self.counts
            .into_values()
            .filter(|(c, _)| *c != 0)
            .map(|(c, w)| (w, c))
            .collect()
    }
}

fn seg_canonical(a: &Point, b: &Point) -> Option<(SegKey, i64)> {
    let (ka, kb) = (point_bits(a), point_bits(b));
    match ka.cmp(&kb) {
        std::cmp::Ordering::Less => Some(((ka, kb), 1)),
        std::cmp::Ordering::Greater => Some(((kb, ka), -1)),
        std::cmp::Ordering::Equal => None,
    }
}

fn tri_canonical(a: &Point, b: &Point, c: &Point) -> Option<(TriKey, i64)> {
    let mut keyed = [(point_bits(a), 0usize), (point_bits(b), 1), (point_bits(c), 2)];
    keyed.sort_unstable_by(|x, y| x.0.cmp(&y.0));
    if keyed[0].0 == keyed[1].0 || keyed[1].0 == keyed[2].0 {
        return None;
    }
    let parity = match (keyed[0].1, keyed[1].1) {
        (0, 1) | (1, 2) | (2, 0) => 1,
        _ => -1,
    };
    Some(((keyed[0].0, keyed[1].0, keyed[2].0), parity))
}

fn add_polyline(ledger: &mut Ledger<SegKey>, coords: &[Point], mult: i64) {
    for w in coords.windows(2) {
        if let Some((key, sign)) = seg_canonical(&w[0], &w[1]) {
            ledger.add(key, sign * mult, &w[..2]);
        }
    }
}

fn add_triangle(ledger: &mut Ledger<TriKey>, t: &[Point], mult: i64) {
    if let Some((key, sign)) = tri_canonical(&t[0], &t[1], &t[2]) {
        ledger.add(key, sign * mult, t);
    }
}

/// dS of a dim-2 sweep as an edge multiset.
fn sweep2_boundary(sweep: &PLChain, ledger: &mut Ledger<SegKey>) {
    for piece in &sweep.pieces {
        let t = &piece.coords;
        for (u, v) in [(0, 1), (1, 2), (2, 0)] {
            if let Some((key, sign)) = seg_canonical(&t[u], &t[v]) {
                ledger.add(key, sign * piece.multiplicity, &[t[u], t[v]]);
            }
        }
    }
}

/// dS of a dim-3 sweep as a triangle multiset, by the alternating-face
/// rule on each tetrahedron (p0 p1 p2 p3).
fn sweep3_boundary(sweep: &PLChain, ledger: &mut Ledger<TriKey>) {
    for piece in &sweep.pieces {
        let p = &piece.coords;
        let faces = [
            ([p[1], p[2], p[3]], 1i64),
            ([p[0], p[2], p[3]], -1),
            ([p[0], p[1], p[3]], 1),
            ([p[0], p[1], p[2]], -1),
        ];
        for (f, s) in faces {
            add_triangle(ledger, &f, s * piece.multiplicity);
        }
    }
}

// ---------------------------------------------------------------------
// Normalization frames

const SQRT3: f64 = 1.7320508075688772;

/// Regular unit-edge triangle and tetrahedron, with their inradii.
fn regular_simplex(i: usize) -> (Vec<Point>, f64) {
    match i {
        2 => (
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, SQRT3 / 2.0, 0.0]],
            SQRT3 / 6.0,
        ),
        _ => (
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.5, SQRT3 / 2.0, 0.0],
                [0.5, SQRT3 / 6.0, (2.0f64 / 3.0).sqrt()],
            ],
            1.0 / 24.0f64.sqrt(),
        ),
    }
}

struct Frame {
    lin: [[f64; 3]; 3],
    off: Point,
    distortion: f64,
}

impl Frame {
    fn apply(&self, p: &Point) -> Point {
        let mut out = self.off;
        for r in 0..3 {
            out[r] += dot(&self.lin[r], p);
        }
        out
    }
}

fn mat3_inverse(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let c = |r: usize, s: usize| -> f64 {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (s1, s2) = ((s + 1) % 3, (s + 2) % 3);
        m[r1][s1] * m[r2][s2] - m[r1][s2] * m[r2][s1]
    };
    let mut inv = [[0.0; 3]; 3];
    for r in 0..3 {
        for s in 0..3 {
            inv[r][s] = c(s, r) / det; // adjugate transpose
        }
    }
    Some(inv)
}

/// Eigenvalues of a symmetric 3x3 matrix, descending (trigonometric
/// closed form).
fn sym3_eigenvalues(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if p1 <= 1e-300 {
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(|x, y| y.total_cmp(x));
        return d;
    }
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for r in 0..3 {
        for s in 0..3 {
            b[r][s] = (a[r][s] - if r == s { q } else { 0.0 }) / p;
        }
    }
    let detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [e1, 3.0 * q - e1 - e3, e3]
}

/// Affine map carrying the simplex onto the regular unit-edge simplex,
/// with the conditioning of its restriction to the simplex plane.
fn normalization_frame(pts: &[Point]) -> Result<Frame> {
    let i = pts.len() - 1;
    let (reg, _) = regular_simplex(i);
    let mut cols_src = [[0.0; 3]; 3];
    let mut cols_dst = [[0.0; 3]; 3];
    for c in 0..i {
        let (s, d) = (sub(&pts[c + 1], &pts[0]), sub(&reg[c + 1], &reg[0]));
        for r in 0..3 {
            cols_src[r][c] = s[r];
            cols_dst[r][c] = d[r];
        }
    }
    if i == 2 {
        // complete both with the plane normal so the map is invertible
        let n_src = cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]));
        let ln = norm(&n_src);
        if ln < 1e-14 {
            return Err(Error::PatchParameter("degenerate simplex in push".into()));
        }
        for r in 0..3 {
            cols_src[r][2] = n_src[r] / ln;
            cols_dst[r][2] = if r == 2 { 1.0 } else { 0.0 };
        }
    }
    let inv_src = mat3_inverse(&cols_src)
        .ok_or_else(|| Error::PatchParameter("degenerate simplex in push".into()))?;
    // lin = dst * src^{-1}
    let mut lin = [[0.0; 3]; 3];
    for r in 0..3 {
        for s in 0..3 {
            for t in 0..3 {
                lin[r][s] += cols_dst[r][t] * inv_src[t][s];
            }
        }
    }
    let off = sub(&reg[0], &{
        let mut v = [0.0; 3];
        for r in 0..3 {
            v[r] = dot(&lin[r], &pts[0]);
        }
        v
    });

    // singular values restricted to the simplex plane (always the
    // whole space for tetrahedra)
    let distortion = if i == 3 {
        let mut gram = [[0.0; 3]; 3];
        for r in 0..3 {
            for s in 0..3 {
                for t in 0..3 {
                    gram[r][s] += lin[t][r] * lin[t][s];
                }
            }
        }
        let ev = sym3_eigenvalues(&gram);
        (ev[0].max(0.0) / ev[2].max(1e-300)).sqrt()
    } else {
        let u1n = {
            let u = sub(&pts[1], &pts[0]);
            scale(&u, 1.0 / norm(&u))
        };
        let mut u2 = sub(&pts[2], &pts[0]);
        let proj = dot(&u2, &u1n);
        u2 = sub(&u2, &scale(&u1n, proj));
        let u2n = scale(&u2, 1.0 / norm(&u2));
        let apply_lin = |v: &Point| -> Point {
            let mut out = [0.0; 3];
            for r in 0..3 {
                out[r] = dot(&lin[r], v);
            }
            out
        };
        let (b1, b2) = (apply_lin(&u1n), apply_lin(&u2n));
        let (e, f, g) = (dot(&b1, &b1), dot(&b1, &b2), dot(&b2, &b2));
        let tr = e + g;
        let disc = ((e - g).powi(2) + 4.0 * f * f).sqrt();
        let (s1, s2) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
        (s1.max(0.0) / s2.max(1e-300)).sqrt()
    };
    Ok(Frame { lin, off, distortion })
}

// ---------------------------------------------------------------------
// Affine barycentrics and clipping

pub(crate) fn simplex_lambda(pts: &[Point], x: &Point) -> Vec<f64> {
    if pts.len() == 4 {
        let t: [Point; 4] = [pts[0], pts[1], pts[2], pts[3]];
        crate::geom::tet_barycentric(&t, x).map_or(vec![f64::NAN; 4], |l| l.to_vec())
    } else {
        // in-plane affine coordinates; x is in the plane by construction
        let (u, v, w) = (sub(&pts[1], &pts[0]), sub(&pts[2], &pts[0]), sub(x, &pts[0]));
        let (uu, uv, vv) = (dot(&u, &u), dot(&u, &v), dot(&v, &v));
        let (wu, wv) = (dot(&w, &u), dot(&w, &v));
        let det = uu * vv - uv * uv;
        let l1 = (wu * vv - wv * uv) / det;
        let l2 = (uu * wv - uv * wu) / det;
        vec![1.0 - l1 - l2, l1, l2]
    }
}

fn lerp(a: &Point, b: &Point, t: f64) -> Point {
    add(&scale(a, 1.0 - t), &scale(b, t))
}

/// Zero crossing of the affine function on segment ab, evaluated in a
/// canonical endpoint order so that the two triangles sharing the edge
/// compute the identical point bit for bit.
fn crossing(a: &Point, fa: f64, b: &Point, fb: f64) -> Point {
    if point_bits(a) <= point_bits(b) {
        lerp(a, b, fa / (fa - fb))
    } else {
        lerp(b, a, fb / (fb - fa))
    }
}

/// Clip a convex polygon by the halfspace {value >= 0}, where values
/// are the affine function sampled at the polygon vertices.
fn clip_polygon(poly: &[(Point, f64)]) -> Vec<Point> {
    let mut out = Vec::new();
    let n = poly.len();
    for s in 0..n {
        let (a, fa) = poly[s];
        let (b, fb) = poly[(s + 1) % n];
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa > 0.0 && fb < 0.0) || (fa < 0.0 && fb > 0.0) {
            out.push(crossing(&a, fa, &b, fb));
        }
    }
    out
}

pub(crate) fn polygon_area(poly: &[Point]) -> f64 {
    let mut acc = [0.0; 3];
    for t in 1..poly.len().saturating_sub(1) {
        acc = add(&acc, &cross(&sub(&poly[t], &poly[0]), &sub(&poly[t + 1], &poly[0])));
    }
    norm(&acc) / 2.0
}

/// Intersect a work-coordinate triangle with a cell's barycentric
/// halfspaces; returns fan triangles of the overlap when it has real
/// interior (and none for slivers resting on the cell walls).
pub(crate) fn clip_triangle_to_cell(tri: &[Point], verts: &[Point]) -> Vec<[Point; 3]> {
    let mut poly: Vec<Point> = tri.to_vec();
    for j in 0..verts.len() {
        let with_values: Vec<(Point, f64)> =
            poly.iter().map(|p| (*p, simplex_lambda(verts, p)[j])).collect();
        poly = clip_polygon(&with_values);
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    if polygon_area(&poly) < 1e-14 {
        return Vec::new();
    }
    let mut barycenter = [0.0; 3];
    for p in &poly {
        barycenter = add(&barycenter, p);
    }
    barycenter = scale(&barycenter, 1.0 / poly.len() as f64);
    let lam = simplex_lambda(verts, &barycenter);
    if lam.iter().cloned().fold(f64::INFINITY, f64::min) <= 1e-12 {
        return Vec::new();
    }
    (1..poly.len() - 1).map(|t| [poly[0], poly[t], poly[t + 1]]).collect()
}

// ---------------------------------------------------------------------
// The per-simplex push

struct SimplexPush<'a> {
    verts: &'a [Point],
    lam_center: Vec<f64>,
    center: Point,
    memo: HashMap<[u64; 3], Point>,
}

impl<'a> SimplexPush<'a> {
    fn new(verts: &'a [Point], center: Point) -> Self {
        let lam_center = simplex_lambda(verts, &center);
        SimplexPush { verts, lam_center, center, memo: HashMap::new() }
    }

    /// Central projection to the simplex boundary; boundary points map
    /// to themselves bitwise, and every distinct input point maps
    /// consistently no matter which fragment asks.
    fn project(&mut self, x: &Point) -> Point {
        let key = point_bits(x);
        if let Some(p) = self.memo.get(&key) {
            return *p;
        }
        let lam = simplex_lambda(self.verts, x);
        let image = if lam.iter().cloned().fold(f64::INFINITY, f64::min) <= 1e-12 {
            *x
        } else {
            let mut t_exit = f64::INFINITY;
            for j in 0..lam.len() {
                let mu = lam[j] - self.lam_center[j];
                if mu < 0.0 {
                    t_exit = t_exit.min(self.lam_center[j] / -mu);
                }
            }
            add(&self.center, &scale(&sub(x, &self.center), t_exit))
        };
        self.memo.insert(key, image);
        image
    }

    /// Sector functions: the ray through x exits at facet j iff
    /// h_jl(x) = lam_j(c) mu_l - lam_l(c) mu_j >= 0 for every l.
    fn sector_values(&self, x: &Point, j: usize) -> Vec<f64> {
        let lam = simplex_lambda(self.verts, x);
        let mu: Vec<f64> = lam
            .iter()
            .zip(&self.lam_center)
            .map(|(l, c)| l - c)
            .collect();
        (0..lam.len())
            .filter(|&l| l != j)
            .map(|l| self.lam_center[j] * mu[l] - self.lam_center[l] * mu[j])
            .collect()
    }

    /// Split a segment at the parameters where its exit facet changes.
    fn segment_breakpoints(&self, a: &Point, b: &Point) -> Vec<f64> {
        let lam_a = simplex_lambda(self.verts, a);
        let lam_b = simplex_lambda(self.verts, b);
        let n = lam_a.len();
        let mut cuts = vec![0.0, 1.0];
        for j in 0..n {
            for l in (j + 1)..n {
                let h = |lam: &[f64]| -> f64 {
                    let (mj, ml) = (lam[j] - self.lam_center[j], lam[l] - self.lam_center[l]);
                    self.lam_center[j] * ml - self.lam_center[l] * mj
                };
                let (ha, hb) = (h(&lam_a), h(&lam_b));
                if (ha > 0.0 && hb < 0.0) || (ha < 0.0 && hb > 0.0) {
                    let s = ha / (ha - hb);
                    if s > 1e-12 && s < 1.0 - 1e-12 {
                        cuts.push(s);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        cuts
    }

    /// Subdivide a triangle into sub-triangles each projecting into a
    /// single facet.
    fn triangle_sectors(&self, tri: &[Point; 3]) -> Vec<[Point; 3]> {
        let mut out = Vec::new();
        for j in 0..self.verts.len() {
            let mut poly: Vec<Point> = tri.to_vec();
            let mut alive = true;
            for l in 0..self.sector_values(&tri[0], j).len() {
                let with_values: Vec<(Point, f64)> = poly
                    .iter()
                    .map(|p| (*p, self.sector_values(p, j)[l]))
                    .collect();
                poly = clip_polygon(&with_values);
                if poly.len() < 3 {
                    alive = false;
                    break;
                }
            }
            // positive-area sectors must all be kept: dropping one would
            // orphan its neighbors' lateral walls in the sweep
            if !alive || polygon_area(&poly) == 0.0 {
                continue;
            }
            for t in 1..poly.len() - 1 {
                out.push([poly[0], poly[t], poly[t + 1]]);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------
// Fragment assignment

/// Distance from p to the solid simplex spanned by pts (2 or 3 of
/// them), by barycentric clamping onto faces.
pub(crate) fn dist_to_simplex(p: &Point, pts: &[Point]) -> f64 {
    match pts.len() {
        2 => {
            let d = sub(&pts[1], &pts[0]);
            let t = (dot(&sub(p, &pts[0]), &d) / dot(&d, &d)).clamp(0.0, 1.0);
            norm(&sub(p, &lerp(&pts[0], &pts[1], t)))
        }
        3 => {
            let lam = simplex_lambda(pts, p);
            if lam.iter().all(|&l| l >= 0.0) {
                // distance to the plane
                let n = cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]));
                (dot(&sub(p, &pts[0]), &n) / norm(&n)).abs()
            } else {
                let mut best = f64::INFINITY;
                for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                    best = best.min(dist_to_simplex(p, &[pts[a], pts[b]]));
                }
                best
            }
        }
        _ => f64::INFINITY,
    }
}

/// Does the whole piece lie within tol of the (i-1)-skeleton? Checked
/// at the corners, edge subdivision points, and the barycenter against
/// actual faces, not just face planes, so pieces crossing an interior
/// cannot slip through.
fn piece_in_skeleton(
    piece: &[Point],
    faces: &[Vec<Point>],
    tol: f64,
) -> bool {
    let mut samples: Vec<Point> = piece.to_vec();
    for w in piece.windows(2).chain(std::iter::once(piece)) {
        let (a, b) = (w[0], w[w.len() - 1]);
        for t in [0.25, 0.5, 0.75] {
            samples.push(lerp(&a, &b, t));
        }
    }
    let mut barycenter = [0.0; 3];
    for p in piece {
        barycenter = add(&barycenter, p);
    }
    samples.push(scale(&barycenter, 1.0 / piece.len() as f64));
    samples.iter().all(|s| faces.iter().any(|f| dist_to_simplex(s, f) <= tol))
}

fn piece_volume(coords: &[Point], dim: usize) -> f64 {
    match dim {
        1 => coords.windows(2).map(|w| norm(&sub(&w[1], &w[0]))).sum(),
        2 => polygon_area(coords),
        _ => 0.0,
    }
}

// ---------------------------------------------------------------------
// Stage driver

struct StageOutput {
    next: Vec<PLPiece>,
    sweep: Vec<PLPiece>,
    /// The stage input, subdivided along cell walls: passthrough pieces
    /// plus every clipped fragment. Equal to the input as a chain, and
    /// the exact multiset against which dS cancels.
    t_clipped: Vec<PLPiece>,
    reports: Vec<SimplexReport>,
    max_distortion: f64,
}

struct StageContext<'a> {
    simplices: Vec<Vec<Point>>, // i-simplices, by id
    faces: Vec<Vec<Point>>,     // (i-1)-simplices for the skeleton test
    stage_dim: usize,
    config: &'a PushConfig,
    v0: u64,
}

fn stage_push(pieces: &[PLPiece], k: usize, ctx: &StageContext) -> Result<StageOutput> {
    // explode polylines into bare segments so skeleton membership and
    // clipping decisions never mix parts of one piece
    let work: Vec<PLPiece> = pieces
        .iter()
        .filter(|p| p.multiplicity != 0)
        .flat_map(|p| {
            if k == 1 {
                p.coords
                    .windows(2)
                    .filter(|w| point_bits(&w[0]) != point_bits(&w[1]))
                    .map(|w| PLPiece { coords: w.to_vec(), multiplicity: p.multiplicity })
                    .collect::<Vec<_>>()
            } else {
                vec![p.clone()]
            }
        })
        .collect();

    let mut passthrough: Vec<PLPiece> = Vec::new();
    // fragments[sid] = (coords, multiplicity)
    let mut fragments: Vec<Vec<(Vec<Point>, i64)>> = vec![Vec::new(); ctx.simplices.len()];

    for piece in &work {
        if piece_in_skeleton(&piece.coords, &ctx.faces, 1e-9) {
            passthrough.push(piece.clone());
            continue;
        }
        let mut covered = 0.0;
        let total = piece_volume(&piece.coords, k);
        for (sid, verts) in ctx.simplices.iter().enumerate() {
            if k == 1 {
                for seg in piece.coords.windows(2) {
                    if verts.len() == 3 {
                        // a triangle cell only owns segments lying in its
                        // plane; the in-plane coordinates would otherwise
                        // silently project from afar
                        let n = cross(&sub(&verts[1], &verts[0]), &sub(&verts[2], &verts[0]));
                        let nn = norm(&n);
                        let off = seg
                            .iter()
                            .map(|p| dot(&sub(p, &verts[0]), &n).abs() / nn)
                            .fold(0.0f64, f64::max);
                        if off > 1e-9 {
                            continue;
                        }
                    }
                    let lam_a = simplex_lambda(verts, &seg[0]);
                    let lam_b = simplex_lambda(verts, &seg[1]);
                    // feasible interval of lambda_j >= 0 along the segment
                    let (mut lo, mut hi) = (0.0f64, 1.0f64);
                    for (la, lb) in lam_a.iter().zip(&lam_b) {
                        let (la, lb) = (*la, *lb);
                        if (la - lb).abs() < 1e-15 {
                            if la < -1e-12 {
                                lo = 1.0;
                                hi = 0.0;
                            }
                            continue;
                        }
                        let s = la / (la - lb);
                        if lb < la {
                            hi = hi.min(s);
                        } else {
                            lo = lo.max(s);
                        }
                    }
                    if hi - lo <= 1e-12 {
                        continue;
                    }
                    let (a, b) = (lerp(&seg[0], &seg[1], lo), lerp(&seg[0], &seg[1], hi));
                    // keep original endpoints bitwise when uncut
                    let a = if lo == 0.0 { seg[0] } else { a };
                    let b = if hi == 1.0 { seg[1] } else { b };
                    let mid = lerp(&a, &b, 0.5);
                    let lam_mid = simplex_lambda(verts, &mid);
                    if lam_mid.iter().cloned().fold(f64::INFINITY, f64::min) <= 1e-12 {
                        continue; // runs along the boundary; owned by a face
                    }
                    covered += norm(&sub(&b, &a));
                    fragments[sid].push((vec![a, b], piece.multiplicity));
                }
            } else {
                for tri in clip_triangle_to_cell(&piece.coords, verts) {
                    covered += polygon_area(&tri);
                    fragments[sid].push((tri.to_vec(), piece.multiplicity));
                }
            }
        }
        if covered < total - 1e-7 * total.max(1.0) {
            let mut barycenter = [0.0; 3];
            for p in &piece.coords {
                barycenter = add(&barycenter, p);
            }
            return Err(Error::OutsidePatch(scale(
                &barycenter,
                1.0 / piece.coords.len() as f64,
            )));
        }
    }

    // t_clipped collects the exact sweep bottoms: passthrough pieces
    // plus every fragment, subdivided further at the sector boundaries
    // chosen for each accepted center
    let mut t_clipped: Vec<PLPiece> = passthrough.clone();
    let mut next = passthrough;
    let mut sweep: Vec<PLPiece> = Vec::new();
    let mut reports = Vec::new();
    let mut max_distortion: f64 = 1.0;

    for (sid, frags) in fragments.iter().enumerate() {
        if frags.is_empty() {
            continue;
        }
        let verts = &ctx.simplices[sid];
        let i = verts.len() - 1;
        let frame = normalization_frame(verts)?;
        max_distortion = max_distortion.max(frame.distortion);
        let (reg, inradius) = regular_simplex(i);
        let r = inradius / 3.0 * ctx.config.r_slack;
        let mut reg_centroid = [0.0; 3];
        for p in &reg {
            reg_centroid = add(&reg_centroid, p);
        }
        reg_centroid = scale(&reg_centroid, 1.0 / reg.len() as f64);

        let norm_frags: Vec<(Vec<Point>, i64)> = frags
            .iter()
            .map(|(c, m)| (c.iter().map(|p| frame.apply(p)).collect(), *m))
            .collect();
        let norm_vol: f64 = norm_frags.iter().map(|(c, _)| piece_volume(c, k)).sum();
        let inv_lin = mat3_inverse(&frame.lin).expect("frame is invertible");

        let mut rng = ChaCha8Rng::seed_from_u64(
            ctx.config
                .seed
                .wrapping_add((ctx.stage_dim as u64) << 56)
                .wrapping_add((sid as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let mut accepted: Option<(Point, f64, u32)> = None;
        for attempt in 1..=ctx.config.max_retries {
            // uniform in the i-ball of radius r around the centroid
            let cand_norm = loop {
                let v: Point = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    if i == 3 { rng.gen_range(-1.0..1.0) } else { 0.0 },
                ];
                if dot(&v, &v) <= 1.0 {
                    break add(&reg_centroid, &scale(&v, r));
                }
            };
            // clearance in normalized coordinates
            let clear = norm_frags
                .iter()
                .flat_map(|(c, _)| {
                    if k == 1 {
                        c.windows(2)
                            .map(|w| dist_to_simplex(&cand_norm, w))
                            .collect::<Vec<_>>()
                    } else {
                        vec![dist_to_simplex(&cand_norm, c)]
                    }
                })
                .fold(f64::INFINITY, f64::min);
            if clear < ctx.config.clearance_eps {
                continue;
            }
            if norm_vol == 0.0 {
                accepted = Some((cand_norm, 0.0, attempt));
                break;
            }
            // trial blowup in normalized coordinates
            let mut trial = SimplexPush::new(&reg, cand_norm);
            let mut vol_after = 0.0;
            for (c, _) in &norm_frags {
                if k == 1 {
                    for w in c.windows(2) {
                        for cut in trial.segment_breakpoints(&w[0], &w[1]).windows(2) {
                            let (a, b) = (lerp(&w[0], &w[1], cut[0]), lerp(&w[0], &w[1], cut[1]));
                            vol_after += norm(&sub(&trial.project(&b), &trial.project(&a)));
                        }
                    }
                } else {
                    let t: [Point; 3] = [c[0], c[1], c[2]];
                    for sector in trial.triangle_sectors(&t) {
                        let img: Vec<Point> = sector.iter().map(|p| trial.project(p)).collect();
                        vol_after += polygon_area(&img);
                    }
                }
            }
            let blowup = vol_after / norm_vol;
            if blowup <= ctx.v0 as f64 {
                accepted = Some((cand_norm, blowup, attempt));
                break;
            }
        }
        let Some((cand_norm, blowup, tried)) = accepted else {
            return Err(Error::CenterSelection {
                simplex: sid,
                tries: ctx.config.max_retries,
            });
        };
        // map the accepted center back to stage coordinates
        let shifted = sub(&cand_norm, &frame.off);
        let mut center = [0.0; 3];
        for rr in 0..3 {
            center[rr] = dot(&inv_lin[rr], &shifted);
        }

        let mut push = SimplexPush::new(verts, center);
        let mut vol_before = 0.0;
        let mut vol_after = 0.0;
        for (coords, mult) in frags {
            vol_before += piece_volume(coords, k);
            if k == 1 {
                for w in coords.windows(2) {
                    let cuts = push.segment_breakpoints(&w[0], &w[1]);
                    let mut chain_pts: Vec<Point> = Vec::with_capacity(cuts.len());
                    let mut prev: Option<Point> = None;
                    for s in cuts.iter() {
                        let x = if *s == 0.0 {
                            w[0]
                        } else if *s == 1.0 {
                            w[1]
                        } else {
                            lerp(&w[0], &w[1], *s)
                        };
                        let px = push.project(&x);
                        if let Some(a) = prev {
                            t_clipped.push(PLPiece {
                                coords: vec![a, x],
                                multiplicity: *mult,
                            });
                            let pa = *chain_pts.last().unwrap();
                            // sweep quad (a, x, px, pa) split along (a, px)
                            for t in [[a, x, px], [a, px, pa]] {
                                if tri_canonical(&t[0], &t[1], &t[2]).is_some() {
                                    sweep.push(PLPiece {
                                        coords: t.to_vec(),
                                        multiplicity: *mult,
                                    });
                                }
                            }
                        }
                        prev = Some(x);
                        chain_pts.push(px);
                    }
                    chain_pts.dedup_by(|a, b| point_bits(a) == point_bits(b));
                    if chain_pts.len() >= 2 {
                        vol_after += piece_volume(&chain_pts, 1);
                        next.push(PLPiece { coords: chain_pts, multiplicity: *mult });
                    }
                }
            } else {
                let t: [Point; 3] = [coords[0], coords[1], coords[2]];
                for sector in push.triangle_sectors(&t) {
                    t_clipped.push(PLPiece {
                        coords: sector.to_vec(),
                        multiplicity: *mult,
                    });
                    let img: Vec<Point> = sector.iter().map(|p| push.project(p)).collect();
                    // prism cone: apex at the corner average, one tet
                    // per oriented surface triangle
                    let mut apex = [0.0; 3];
                    for p in sector.iter().chain(img.iter()) {
                        apex = add(&apex, p);
                    }
                    apex = scale(&apex, 1.0 / 6.0);
                    let mut surface: Vec<[Point; 3]> = Vec::with_capacity(8);
                    surface.push([sector[0], sector[1], sector[2]]);
                    surface.push([img[2], img[1], img[0]]);
                    for (u, v) in [(0usize, 1usize), (1, 2), (2, 0)] {
                        // lateral quad (v, u, img[u], img[v]), canonical diagonal
                        let quad = [sector[v], sector[u], img[u], img[v]];
                        let keys: Vec<[u64; 3]> = quad.iter().map(point_bits).collect();
                        let m = (0..4).min_by(|&a, &b| keys[a].cmp(&keys[b])).unwrap();
                        if m == 0 || m == 2 {
                            surface.push([quad[0], quad[1], quad[2]]);
                            surface.push([quad[0], quad[2], quad[3]]);
                        } else {
                            surface.push([quad[1], quad[2], quad[3]]);
                            surface.push([quad[1], quad[3], quad[0]]);
                        }
                    }
                    for tri in surface {
                        if tri_canonical(&tri[0], &tri[1], &tri[2]).is_none() {
                            continue;
                        }
                        sweep.push(PLPiece {
                            coords: vec![apex, tri[0], tri[1], tri[2]],
                            multiplicity: *mult,
                        });
                    }
                    if tri_canonical(&img[0], &img[1], &img[2]).is_some() {
                        vol_after += polygon_area(&img);
                        next.push(PLPiece { coords: img, multiplicity: *mult });
                    }
                }
            }
        }
        reports.push(SimplexReport {
            stage_dim: ctx.stage_dim,
            simplex: sid as u32,
            vol_before,
            vol_after,
            blowup,
            centers_tried: tried,
            distortion: frame.distortion,
        });
    }

    Ok(StageOutput { next, sweep, t_clipped, reports, max_distortion })
}

// ---------------------------------------------------------------------
// dS = T - R verification

/// Cancel dS against (T - R); returns the total volume of whatever
/// fails to cancel (0 when the identity holds bitwise).
fn boundary_residual(
    sweep: &[PLPiece],
    t_pieces: &[PLPiece],
    r_pieces: &[PLPiece],
    k: usize,
) -> f64 {
    if k == 1 {
        let mut ledger: Ledger<SegKey> = Ledger::default();
        sweep2_boundary(&PLChain { dim: 2, pieces: sweep.to_vec() }, &mut ledger);
        for p in t_pieces {
            add_polyline(&mut ledger, &p.coords, -p.multiplicity);
        }
        for p in r_pieces {
            add_polyline(&mut ledger, &p.coords, p.multiplicity);
        }
        ledger
            .residual()
            .iter()
            .map(|(w, c)| norm(&sub(&w[1], &w[0])) * c.unsigned_abs() as f64)
            .sum()
    } else {
        let mut ledger: Ledger<TriKey> = Ledger::default();
        sweep3_boundary(&PLChain { dim: 3, pieces: sweep.to_vec() }, &mut ledger);
        for p in t_pieces {
            add_triangle(&mut ledger, &p.coords, -p.multiplicity);
        }
        for p in r_pieces {
            add_triangle(&mut ledger, &p.coords, p.multiplicity);
        }
        ledger
            .residual()
            .iter()
            .map(|(w, c)| polygon_area(w) * c.unsigned_abs() as f64)
            .sum()
    }
}

// ---------------------------------------------------------------------
// Hyperbolic chart conversion

pub(crate) fn to_klein(p: &Point) -> Point {
    [p[0] / p[2], p[1] / p[2], 0.0]
}

pub(crate) fn from_klein(p: &Point) -> Point {
    let r2 = p[0] * p[0] + p[1] * p[1];
    let s = 1.0 / (1.0 - r2).max(1e-300).sqrt();
    hyperbolic::renormalize(&[p[0] * s, p[1] * s, s])
}

/// Local metric distortion of the chart at a point: the Klein metric
/// stretches radially by 1/(1-r^2) and tangentially by 1/sqrt(1-r^2).
fn klein_distortion(p: &Point) -> f64 {
    let r2 = p[0] * p[0] + p[1] * p[1];
    1.0 / (1.0 - r2).max(1e-300).sqrt()
}

fn convert_chain(chain: &PLChain, f: impl Fn(&Point) -> Point) -> PLChain {
    PLChain {
        dim: chain.dim,
        pieces: chain
            .pieces
            .iter()
            .map(|p| PLPiece {
                coords: p.coords.iter().map(&f).collect(),
                multiplicity: p.multiplicity,
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------
// Entry point

pub fn push_chain(
    chain: &PLChain,
    patch: &TriangulatedPatch,
    config: &PushConfig,
) -> Result<PushOutcome> {
    let k = chain.dim;
    let top = patch.top_dim();
    if k >= top || k == 0 {
        return Err(Error::DimensionPair { i: top, k });
    }
    let v0 = v0_threshold(top, k, config.v0_margin)?;
    let hyperbolic_patch = patch.model == ModelGeometry::H2;

    // stage coordinates: the Klein chart for hyperbolic patches, model
    // coordinates otherwise
    let work_chain = if hyperbolic_patch {
        convert_chain(chain, to_klein)
    } else {
        chain.clone()
    };
    let work_vertex = |v: u32| -> Point {
        let p = patch.point(v);
        if hyperbolic_patch {
            to_klein(&p)
        } else {
            p
        }
    };

    let vol_input = chain.volume(&patch.model);
    let mut pieces = work_chain.pieces;
    let mut sweep_all: Vec<PLPiece> = Vec::new();
    let mut input_clipped_pieces: Vec<PLPiece> = Vec::new();
    let mut reports: Vec<SimplexReport> = Vec::new();
    let mut max_distortion: f64 = 1.0;
    let mut chart_factor: f64 = 1.0;
    let mut residual_max: f64 = 0.0;

    for i in ((k + 1)..=top).rev() {
        let simplices: Vec<Vec<Point>> = if i == 3 {
            (0..patch.tets.len() as u32)
                .map(|t| patch.tets[t as usize].iter().map(|&v| work_vertex(v)).collect())
                .collect()
        } else {
            (0..patch.triangles.len() as u32)
                .map(|t| {
                    patch.triangles[t as usize]
                        .iter()
                        .map(|&v| work_vertex(v))
                        .collect()
                })
                .collect()
        };
        let faces: Vec<Vec<Point>> = if i == 3 {
            (0..patch.triangles.len() as u32)
                .map(|t| {
                    patch.triangles[t as usize]
                        .iter()
                        .map(|&v| work_vertex(v))
                        .collect()
                })
                .collect()
        } else {
            patch
                .edges
                .iter()
                .map(|e| e.iter().map(|&v| work_vertex(v)).collect())
                .collect()
        };
        let ctx = StageContext { simplices, faces, stage_dim: i, config, v0 };
        let out = stage_push(&pieces, k, &ctx)?;
        max_distortion = max_distortion.max(out.max_distortion);

        // dS = T - R for this stage, where T is the stage input
        // subdivided along the cell walls (the same chain, cut where the
        // sweep bottoms are cut)
        let residual = boundary_residual(&out.sweep, &out.t_clipped, &out.next, k);
        residual_max = residual_max.max(residual);
        if residual > 1e-9 {
            return Err(Error::Certification(format!(
                "sweep boundary residual {residual:.3e} in stage {i}"
            )));
        }
        if i == top {
            input_clipped_pieces = out.t_clipped;
        }
        sweep_all.extend(out.sweep);
        reports.extend(out.reports);
        pieces = out.next;
    }

    if hyperbolic_patch {
        // sampled ratio of largest to smallest metric stretch of the
        // chart over the chain and its images; the radial stretch is the
        // square of the tangential one and the minimum is 1 at the origin
        for piece in pieces.iter().chain(sweep_all.iter()) {
            for p in &piece.coords {
                let s = klein_distortion(p);
                chart_factor = chart_factor.max(s * s);
            }
        }
    }

    let (result, sweep, input_clipped) = if hyperbolic_patch {
        (
            convert_chain(&PLChain { dim: k, pieces }, from_klein),
            convert_chain(&PLChain { dim: k + 1, pieces: sweep_all }, from_klein),
            convert_chain(&PLChain { dim: k, pieces: input_clipped_pieces }, from_klein),
        )
    } else {
        (
            PLChain { dim: k, pieces },
            PLChain { dim: k + 1, pieces: sweep_all },
            PLChain { dim: k, pieces: input_clipped_pieces },
        )
    };

    let vol_result = result.volume(&patch.model);
    let vol_sweep = sweep.volume(&patch.model);
    let v0_effective = v0 as f64 * (max_distortion * chart_factor).powi(k as i32);
    Ok(PushOutcome {
        result,
        sweep,
        input_clipped,
        boundary_residual: residual_max,
        per_simplex: reports,
        v0,
        v0_effective,
        vol_input,
        vol_result,
        vol_sweep,
        empirical_c: if vol_input > 0.0 { vol_result / vol_input } else { 0.0 },
        config: config.clone(),
    })
}

// ---------------------------------------------------------------------
// Deterministic report serialization

fn fmt_f(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

pub fn write_push_report(outcome: &PushOutcome) -> String {
    let mut rows: BTreeMap<(usize, u32), &SimplexReport> = BTreeMap::new();
    for r in &outcome.per_simplex {
        rows.insert((r.stage_dim, r.simplex), r);
    }
    let per: Vec<String> = rows
        .values()
        .map(|r| {
            format!(
                "{{\"stage_dim\":{},\"simplex\":{},\"vol_before\":{},\"vol_after\":{},\"blowup\":{},\"centers_tried\":{},\"distortion\":{}}}",
                r.stage_dim,
                r.simplex,
                fmt_f(r.vol_before),
                fmt_f(r.vol_after),
                fmt_f(r.blowup),
                r.centers_tried,
                fmt_f(r.distortion)
            )
        })
        .collect();
    format!(
        "{{\"config\":{{\"r_slack\":{},\"v0_margin\":{},\"max_retries\":{},\"clearance_eps\":{},\"seed\":{}}},\"v0\":{},\"v0_effective\":{},\"vol_input\":{},\"vol_result\":{},\"vol_sweep\":{},\"empirical_c\":{},\"per_simplex\":[{}]}}",
        fmt_f(outcome.config.r_slack),
        fmt_f(outcome.config.v0_margin),
        outcome.config.max_retries,
        fmt_f(outcome.config.clearance_eps),
        outcome.config.seed,
        outcome.v0,
        fmt_f(outcome.v0_effective),
        fmt_f(outcome.vol_input),
        fmt_f(outcome.vol_result),
        fmt_f(outcome.vol_sweep),
        fmt_f(outcome.empirical_c),
        per.join(",")
    )
}
