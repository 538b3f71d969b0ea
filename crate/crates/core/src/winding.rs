//! Winding-number fillings in flat planar patches.
//!
//! In a contractible plane patch the boundary operator on 2-chains is
//! injective, so a skeleton loop has at most one filling and its
//! coefficient on a triangle equals the loop's winding number around
//! any interior point of that triangle. Winding is computed by ray
//! casting and is additive over the loop's signed edges, so no path
//! ordering is needed. The resulting chain is re-verified against the
//! boundary operator before it is returned.

use crate::error::{Error, Result};
use crate::filling::CellularTwoChain;
use crate::geom::{scale as vscale, sub, add, ModelGeometry, Point, SkeletonLoop, TriangulatedPatch};

/// Signed crossing count of the segment set around q; the classic
/// half-open rule (count an upward crossing when a.y <= q.y < b.y and q
/// lies strictly left of a->b) never double-counts a vertex hit.
/// Fails only when q lies on a segment, where winding is undefined.
pub fn winding_of_segments(segments: &[(Point, Point, i64)], q: &Point) -> Result<i64> {
    let mut w = 0i64;
    for (a, b, mult) in segments {
        let (u, v) = (sub(a, q), sub(b, q));
        let cross = u[0] * v[1] - u[1] * v[0];
        let span = u[0].abs().max(u[1].abs()).max(v[0].abs()).max(v[1].abs()).max(1.0);
        if cross.abs() <= 1e-12 * span * span && u[0] * v[0] + u[1] * v[1] <= 1e-12 * span * span
        {
            return Err(Error::DegenerateSample(*q));
        }
        if a[1] <= q[1] && b[1] > q[1] && cross > 0.0 {
            w += mult;
        } else if b[1] <= q[1] && a[1] > q[1] && cross < 0.0 {
            w -= mult;
        }
    }
    Ok(w)
}

fn loop_segments(lp: &SkeletonLoop, patch: &TriangulatedPatch) -> Vec<(Point, Point, i64)> {
    let mut segments = Vec::with_capacity(lp.edge_count());
    for circuit in &lp.circuits {
        for &(e, s) in circuit {
            let [a, b] = patch.edges[e as usize];
            let (pa, pb) = (patch.point(a), patch.point(b));
            if s > 0 {
                segments.push((pa, pb, 1));
            } else {
                segments.push((pb, pa, 1));
            }
        }
    }
    segments
}

/// Fill a skeleton loop in a flat contractible patch by per-triangle
/// winding numbers. Barycenters that land degenerately on the loop are
/// retried at three interior perturbations before giving up.
pub fn winding_filling(lp: &SkeletonLoop, patch: &TriangulatedPatch) -> Result<CellularTwoChain> {
    if patch.model != ModelGeometry::E2 {
        return Err(Error::PatchParameter(
            "winding filling requires a flat plane patch".into(),
        ));
    }
    if patch.top_dim() != 2 || patch.euler_characteristic() != 1 {
        return Err(Error::PatchParameter(
            "winding filling requires a contractible surface patch".into(),
        ));
    }
    lp.validate(patch)?;
    let segments = loop_segments(lp, patch);

    let mut chain = CellularTwoChain::default();
    for t in 0..patch.triangles.len() as u32 {
        let [a, b, c] = patch.triangle_points(t);
        let barycenter = vscale(&add(&add(&a, &b), &c), 1.0 / 3.0);
        let mut sample = Err(Error::DegenerateSample(barycenter));
        for retry in 0..4 {
            let q = if retry == 0 {
                barycenter
            } else {
                // slide toward a vertex: stays interior, deterministic
                let v = [a, b, c][retry - 1];
                add(&barycenter, &vscale(&sub(&v, &barycenter), 1e-6 * retry as f64))
            };
            match winding_of_segments(&segments, &q) {
                Ok(w) => {
                    sample = Ok(w);
                    break;
                }
                Err(e @ Error::DegenerateSample(_)) => sample = Err(e),
                Err(e) => return Err(e),
            }
        }
        let w = sample?;
        // stored orientation: winding counts CCW turns, so a CW-stored
        // triangle fills with the opposite sign
        let signed2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        let orient = if signed2 >= 0.0 { 1 } else { -1 };
        if w != 0 {
            chain.set(t, w * orient);
        }
    }

    // injectivity makes this the only candidate; certify it really
    // bounds the loop before handing it out
    let view = patch.two_complex_view();
    if view.boundary(&chain) != lp.cycle() {
        return Err(Error::Certification(
            "winding chain does not bound the loop".into(),
        ));
    }
    Ok(chain)
}
