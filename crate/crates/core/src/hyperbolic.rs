//! Hyperboloid-model primitives for the hyperbolic plane.
//!
//! Points live on the upper sheet z^2 - x^2 - y^2 = 1, z > 0, with the
//! Lorentz form <p,q> = p.x q.x + p.y q.y - p.z q.z and distance
//! d(p,q) = arccosh(-<p,q>). Orientation-preserving isometries are 3x3
//! matrices preserving the form.
//!
//! The module also carries the regular-octagon data for the {8,8}
//! tiling: interior angle 2*pi/8, so eight octagons meet at each vertex
//! and the side-pairing pattern a b a' b' c d c' d' presents the
//! genus-2 surface group. The right triangle spanned by the center, an
//! edge midpoint and a vertex has angles pi/8, pi/2, pi/8, giving
//! cosh(half_edge) = cosh(inradius) = cot(pi/8) = 1 + sqrt(2) and
//! cosh(circumradius) = cot^2(pi/8) = 3 + 2 sqrt(2).

pub type Mat3 = [[f64; 3]; 3];
pub type Vec3 = [f64; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
pub const ORIGIN: Vec3 = [0.0, 0.0, 1.0];

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub fn mat_apply(m: &Mat3, v: &Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

/// Inverse of a Lorentz isometry: J M^T J with J = diag(1,1,-1).
pub fn mat_lorentz_inverse(m: &Mat3) -> Mat3 {
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let sign = if (i == 2) ^ (j == 2) { -1.0 } else { 1.0 };
            inv[i][j] = sign * m[j][i];
        }
    }
    inv
}

pub fn rotation(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Boost along the x axis by rapidity t: translation of the geodesic
/// y = 0 through distance t.
pub fn boost_x(t: f64) -> Mat3 {
    let (s, c) = (t.sinh(), t.cosh());
    [[c, 0.0, s], [0.0, 1.0, 0.0], [s, 0.0, c]]
}

pub fn lorentz_dot(p: &Vec3, q: &Vec3) -> f64 {
    p[0] * q[0] + p[1] * q[1] - p[2] * q[2]
}

pub fn distance(p: &Vec3, q: &Vec3) -> f64 {
    let c = -lorentz_dot(p, q);
    c.max(1.0).acosh()
}

/// Project a near-hyperboloid point back onto the sheet by recomputing
/// z from x and y. Keeps accumulated isometry round-off below 1e-12 for
/// desk-scale patches.
pub fn renormalize(p: &Vec3) -> Vec3 {
    [p[0], p[1], (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt()]
}

/// Geodesic midpoint: normalize the Lorentz sum to the sheet.
pub fn midpoint(p: &Vec3, q: &Vec3) -> Vec3 {
    let s = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
    let norm = (-lorentz_dot(&s, &s)).sqrt();
    [s[0] / norm, s[1] / norm, s[2] / norm]
}

/// Point at parameter t in [0,1] along the geodesic from p to q.
pub fn geodesic_point(p: &Vec3, q: &Vec3, t: f64) -> Vec3 {
    let d = distance(p, q);
    if d < 1e-15 {
        return *p;
    }
    let (a, b) = (((1.0 - t) * d).sinh() / d.sinh(), (t * d).sinh() / d.sinh());
    let s = [a * p[0] + b * q[0], a * p[1] + b * q[1], a * p[2] + b * q[2]];
    renormalize(&s)
}

/// Interior angle at vertex a of the geodesic triangle (a,b,c).
pub fn angle_at(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    // hyperbolic law of cosines: cos A = (cosh b' cosh c' - cosh a') / (sinh b' sinh c')
    let ab = distance(a, b);
    let ac = distance(a, c);
    let bc = distance(b, c);
    let cos_a = (ab.cosh() * ac.cosh() - bc.cosh()) / (ab.sinh() * ac.sinh());
    cos_a.clamp(-1.0, 1.0).acos()
}

/// Area of the geodesic triangle by angle defect.
pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    std::f64::consts::PI - angle_at(a, b, c) - angle_at(b, a, c) - angle_at(c, a, b)
}

/// Orientation sign of the ordered triple as seen on the sheet:
/// determinant of the three position vectors.
pub fn orientation(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Octagon geometry for the {8,8} tiling.
pub struct OctagonGeometry {
    pub inradius: f64,
    pub circumradius: f64,
    pub edge_length: f64,
}

pub fn octagon_geometry() -> OctagonGeometry {
    let cot8 = 1.0 + 2.0f64.sqrt();
    OctagonGeometry {
        inradius: cot8.acosh(),
        circumradius: (cot8 * cot8).acosh(),
        edge_length: 2.0 * cot8.acosh(),
    }
}

/// Vertex m (0..8) of the base octagon centered at the origin: angle
/// (2m-1) pi/8 at circumradius distance.
pub fn octagon_vertex(m: usize) -> Vec3 {
    let geo = octagon_geometry();
    let angle = (2.0 * m as f64 - 1.0) * std::f64::consts::PI / 8.0;
    let m = mat_mul(&rotation(angle), &boost_x(geo.circumradius));
    renormalize(&mat_apply(&m, &ORIGIN))
}

/// Isometry carrying ordered side (v_j, v_{j+1}) of the base octagon
/// onto (v_{k+1}, v_k) and the octagon onto its neighbor across side k.
pub fn side_pairing(j: usize, k: usize) -> Mat3 {
    let geo = octagon_geometry();
    let phi = std::f64::consts::PI / 4.0;
    let m = mat_mul(&rotation(phi * k as f64), &boost_x(geo.inradius));
    let m = mat_mul(&m, &rotation(std::f64::consts::PI));
    let m = mat_mul(&m, &boost_x(-geo.inradius));
    mat_mul(&m, &rotation(-phi * j as f64))
}

/// Deck matrices of the four surface-group generators for the standard
/// one-relator presentation a b a' b' c d c' d', evaluated from the
/// exact field arithmetic in [`crate::numberfield`] (see
/// `exact_surface_generators` there for the derivation). Each entry is
/// correct to f64 rounding, so the defining relation holds to machine
/// precision rather than to accumulated solve error.
pub fn surface_generator_matrices() -> [Mat3; 4] {
    let exact = crate::numberfield::exact_surface_generators();
    std::array::from_fn(|i| exact[i].to_f64())
}

/// The four primitive side pairings (2,0), (3,1), (6,4), (7,5) of the
/// base octagon, exactly evaluated. With their inverses these carry the
/// octagon onto its eight side-adjacent neighbors; the group generators
/// above are words in them, so both sets span the same deck action.
pub fn side_pairing_system() -> [Mat3; 4] {
    [(2, 0), (3, 1), (6, 4), (7, 5)]
        .map(|(j, k)| crate::numberfield::exact_side_pairing(j, k).to_f64())
}
