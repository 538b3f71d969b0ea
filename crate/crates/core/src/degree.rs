//! Degree extraction: read a cellular 2-chain off a chain whose pieces
//! lie inside individual 2-cells, by counting signed preimages of
//! generic sample points. Together with the pushing engine this turns a
//! geometric filling into a combinatorial one with a certified area
//! bound.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filling::CellularTwoChain;
use crate::geom::{
    add, cross, dot, norm, scale, sub, ModelGeometry, PLChain, PLPiece, Point, SkeletonLoop,
    TriangulatedPatch,
};
use crate::push::{
    clip_triangle_to_cell, dist_to_simplex, from_klein, polygon_area, push_chain, simplex_lambda,
    to_klein, PushConfig,
};

/// Samples per 2-cell; all of them must report the same degree.
pub const DEGREE_SAMPLES: usize = 5;

/// Resampling budget for one generic point.
const SAMPLE_BUDGET: u32 = 256;

/// An oriented coordinate triangle known to lie inside one 2-cell.
/// Coordinates are work coordinates: the Klein chart for hyperbolic
/// patches, model coordinates otherwise, so that pieces are flat.
#[derive(Clone, Debug)]
pub struct TaggedPiece {
    pub simplex: u32,
    pub coords: [Point; 3],
    pub multiplicity: i64,
}

/// A 2-chain supported in the 2-skeleton, with every piece tagged by
/// its containing cell, plus the skeleton loop it fills.
#[derive(Clone, Debug)]
pub struct PushedTwoChain {
    pub model: ModelGeometry,
    pub pieces: Vec<TaggedPiece>,
    pub boundary: SkeletonLoop,
}

impl PushedTwoChain {
    /// The tagged pieces as a plain chain in model coordinates.
    pub fn model_chain(&self) -> PLChain {
        let hyp = self.model == ModelGeometry::H2;
        PLChain {
            dim: 2,
            pieces: self
                .pieces
                .iter()
                .map(|p| PLPiece {
                    coords: p
                        .coords
                        .iter()
                        .map(|q| if hyp { from_klein(q) } else { *q })
                        .collect(),
                    multiplicity: p.multiplicity,
                })
                .collect(),
        }
    }
}

/// An interior sample point of one cell, off every piece edge.
#[derive(Clone, Debug)]
pub struct GenericPoint {
    pub simplex: u32,
    pub point: Point,
    pub preimages: usize,
    pub clearance: f64,
}

fn work_point(patch: &TriangulatedPatch, v: u32) -> Point {
    let p = patch.point(v);
    if patch.model == ModelGeometry::H2 {
        to_klein(&p)
    } else {
        p
    }
}

fn work_triangle(patch: &TriangulatedPatch, t: u32) -> [Point; 3] {
    let tri = patch.triangles[t as usize];
    [
        work_point(patch, tri[0]),
        work_point(patch, tri[1]),
        work_point(patch, tri[2]),
    ]
}

fn triangle_normal(t: &[Point; 3]) -> Point {
    cross(&sub(&t[1], &t[0]), &sub(&t[2], &t[0]))
}

/// Tag a 2-chain by clipping each piece into the cells of the patch.
/// Pieces must already lie in the 2-skeleton: anything that fails to
/// land (within relative tolerance) in the union of the cells is an
/// error naming the runaway piece.
pub fn tag_chain(
    chain: &PLChain,
    boundary: &SkeletonLoop,
    patch: &TriangulatedPatch,
) -> Result<PushedTwoChain> {
    if chain.dim != 2 {
        return Err(Error::DimensionPair { i: patch.top_dim(), k: chain.dim });
    }
    boundary.validate(patch)?;
    let cells: Vec<[Point; 3]> = (0..patch.triangles.len() as u32)
        .map(|t| work_triangle(patch, t))
        .collect();
    let hyp = patch.model == ModelGeometry::H2;
    let mut pieces: Vec<TaggedPiece> = Vec::new();
    for piece in &chain.pieces {
        if piece.multiplicity == 0 {
            continue;
        }
        if piece.coords.len() != 3 {
            return Err(Error::PatchParameter(format!(
                "2-chain piece with {} corners",
                piece.coords.len()
            )));
        }
        let coords: Vec<Point> = piece
            .coords
            .iter()
            .map(|p| if hyp { to_klein(p) } else { *p })
            .collect();
        let total = polygon_area(&coords);
        let mut covered = 0.0;
        for (sid, verts) in cells.iter().enumerate() {
            // only coplanar cells can own a flat piece
            let n = triangle_normal(verts);
            let nn = norm(&n);
            let off = coords
                .iter()
                .map(|p| dot(&sub(p, &verts[0]), &n).abs() / nn)
                .fold(0.0f64, f64::max);
            if off > 1e-9 {
                continue;
            }
            let cell_area = polygon_area(verts);
            for tri in clip_triangle_to_cell(&coords, verts) {
                let a = polygon_area(&tri);
                // fan slivers along cell walls have useless barycentric
                // frames and can never host a generic point; drop them
                if a < 1e-13 * cell_area {
                    continue;
                }
                covered += a;
                pieces.push(TaggedPiece {
                    simplex: sid as u32,
                    coords: tri,
                    multiplicity: piece.multiplicity,
                });
            }
        }
        if covered < total - 1e-7 * total.max(1e-9) {
            let mut b = [0.0; 3];
            for p in &coords {
                b = add(&b, p);
            }
            return Err(Error::OutsidePatch(scale(&b, 1.0 / 3.0)));
        }
    }
    Ok(PushedTwoChain { model: patch.model, pieces, boundary: boundary.clone() })
}

/// Uniform interior point of the cell, rejected until it clears every
/// edge of every piece tagged with this cell.
pub fn generic_point(
    simplex: u32,
    chain: &PushedTwoChain,
    patch: &TriangulatedPatch,
    rng: &mut ChaCha8Rng,
) -> Result<GenericPoint> {
    let verts = work_triangle(patch, simplex);
    let e1 = sub(&verts[1], &verts[0]);
    let e2 = sub(&verts[2], &verts[0]);
    let edge_scale = norm(&e1).max(norm(&e2)).max(norm(&sub(&verts[2], &verts[1])));
    let clearance = 1e-7 * edge_scale;
    let local: Vec<&TaggedPiece> =
        chain.pieces.iter().filter(|p| p.simplex == simplex).collect();
    for _ in 0..SAMPLE_BUDGET {
        let (mut u, mut v) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        let q = add(&verts[0], &add(&scale(&e1, u), &scale(&e2, v)));
        let mut clear = f64::INFINITY;
        let mut count = 0usize;
        for piece in &local {
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                clear = clear.min(dist_to_simplex(&q, &[piece.coords[a], piece.coords[b]]));
            }
            if simplex_lambda(&piece.coords, &q).iter().all(|&l| l >= 0.0) {
                count += 1;
            }
        }
        if clear >= clearance {
            return Ok(GenericPoint { simplex, point: q, preimages: count, clearance: clear });
        }
    }
    Err(Error::Certification(format!(
        "no generic point in cell {simplex} after {SAMPLE_BUDGET} samples over {} pieces",
        local.len()
    )))
}

/// Signed preimage count at a generic point: piece multiplicity times
/// the orientation of the piece against the cell's stored orientation.
pub fn degree_at(
    q: &GenericPoint,
    chain: &PushedTwoChain,
    patch: &TriangulatedPatch,
) -> Result<i64> {
    let cell_normal = triangle_normal(&work_triangle(patch, q.simplex));
    let mut total = 0i64;
    for piece in chain.pieces.iter().filter(|p| p.simplex == q.simplex) {
        let lam = simplex_lambda(&piece.coords, &q.point);
        let lmin = lam.iter().cloned().fold(f64::INFINITY, f64::min);
        if lmin < 0.0 {
            continue;
        }
        let area2 = triangle_normal(&piece.coords);
        if lmin * norm(&area2) <= 1e-12 * norm(&cell_normal) {
            return Err(Error::DegenerateSample(q.point));
        }
        let sign = if dot(&area2, &cell_normal) > 0.0 { 1 } else { -1 };
        total += sign * piece.multiplicity;
    }
    Ok(total)
}

/// The extracted cellular chain plus the certificates that came with
/// it: how far the cellular boundary is from the loop (zero on
/// success), and how much slack the area bound had.
#[derive(Clone, Debug)]
pub struct DegreeField {
    pub chain: CellularTwoChain,
    pub boundary_defect: u64,
    /// area(chain) - sum of |d| * cell area; nonnegative on success.
    pub area_slack: f64,
    pub combinatorial_area: u64,
}

/// Read the degree off every touched cell at independent generic
/// points, requiring unanimity, then certify the boundary and the area
/// sandwich.
pub fn extract_cellular(
    chain: &PushedTwoChain,
    patch: &TriangulatedPatch,
    seed: u64,
) -> Result<DegreeField> {
    let mut touched: BTreeMap<u32, ()> = BTreeMap::new();
    for p in &chain.pieces {
        touched.insert(p.simplex, ());
    }
    let mut cellular = CellularTwoChain::default();
    for (&sid, _) in &touched {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed.wrapping_add((sid as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let mut values = Vec::with_capacity(DEGREE_SAMPLES);
        for _ in 0..DEGREE_SAMPLES {
            let mut d = None;
            for _ in 0..8 {
                let q = generic_point(sid, chain, patch, &mut rng)?;
                match degree_at(&q, chain, patch) {
                    Ok(v) => {
                        d = Some(v);
                        break;
                    }
                    Err(Error::DegenerateSample(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            values.push(d.ok_or_else(|| {
                Error::Certification(format!("cell {sid}: every degree sample degenerate"))
            })?);
        }
        if values.iter().any(|&v| v != values[0]) {
            return Err(Error::Certification(format!(
                "degree samples disagree on cell {sid}: {values:?} (pieces cross cell walls?)"
            )));
        }
        if values[0] != 0 {
            cellular.set(sid, values[0]);
        }
    }

    // cellular boundary must reproduce the loop exactly
    let view = patch.two_complex_view();
    let got = view.boundary(&cellular);
    let want = chain.boundary.cycle();
    let mut defect: u64 = 0;
    for edge in got.coefficients.keys().chain(want.coefficients.keys()) {
        let g = got.coefficients.get(edge).copied().unwrap_or(0);
        let w = want.coefficients.get(edge).copied().unwrap_or(0);
        defect += g.abs_diff(w);
    }
    if defect != 0 {
        return Err(Error::Certification(format!(
            "cellular boundary misses the loop by total edge multiplicity {defect}"
        )));
    }

    // area sandwich: every degree is witnessed by at least that much
    // covering area inside the cell
    let model_area = chain.model_chain().volume(&patch.model);
    let mut covered = 0.0;
    for (&sid, &d) in &cellular.coefficients {
        let t = patch.triangle_points(sid);
        covered +=
            d.unsigned_abs() as f64 * patch.model.triangle_area(&t[0], &t[1], &t[2]);
    }
    let area_slack = model_area - covered;
    if area_slack < -1e-9 * model_area.max(1.0) {
        return Err(Error::Certification(format!(
            "area sandwich violated: covered {covered} exceeds chain area {model_area}"
        )));
    }
    let combinatorial_area = cellular.l1_norm();
    Ok(DegreeField { chain: cellular, boundary_defect: defect, area_slack, combinatorial_area })
}

/// Full second-inequality pipeline: push a geometric filling into the
/// 2-skeleton if the patch has room above dimension 2, tag it, extract
/// degrees, and certify the combinatorial area against
/// (1/minArea) * C * area(filling) with the run's own measured C.
pub fn combinatorial_area_from_geometric(
    gamma: &SkeletonLoop,
    filling: &PLChain,
    patch: &TriangulatedPatch,
    config: &PushConfig,
) -> Result<(u64, DegreeField)> {
    if filling.dim != 2 {
        return Err(Error::DimensionPair { i: patch.top_dim(), k: filling.dim });
    }
    let (supported, empirical_c) = if patch.top_dim() > 2 {
        let out = push_chain(filling, patch, config)?;
        (out.result, out.empirical_c)
    } else {
        (filling.clone(), 1.0)
    };
    let tagged = tag_chain(&supported, gamma, patch)?;
    let field = extract_cellular(&tagged, patch, config.seed)?;
    let min_area = (0..patch.triangles.len() as u32)
        .map(|t| {
            let p = patch.triangle_points(t);
            patch.model.triangle_area(&p[0], &p[1], &p[2])
        })
        .fold(f64::INFINITY, f64::min);
    let bound = empirical_c.max(1.0) * filling.volume(&patch.model) / min_area;
    let comb = field.combinatorial_area;
    if comb as f64 > bound * (1.0 + 1e-9) {
        return Err(Error::Certification(format!(
            "combinatorial area {comb} exceeds the pushed bound {bound}"
        )));
    }
    Ok((comb, field))
}

fn fmt_f(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Deterministic JSON for a degree field: the coefficient map in cell
/// order plus the check outcomes.
pub fn write_degree_field_json(field: &DegreeField) -> String {
    let rows: Vec<String> = field
        .chain
        .coefficients
        .iter()
        .map(|(sid, d)| format!("\"{sid}\":{d}"))
        .collect();
    format!(
        "{{\"degrees\":{{{}}},\"boundary_ok\":{},\"boundary_defect\":{},\"area_ok\":{},\"area_slack\":{},\"combinatorial_area\":{}}}",
        rows.join(","),
        field.boundary_defect == 0,
        field.boundary_defect,
        field.area_slack >= 0.0,
        fmt_f(field.area_slack),
        field.combinatorial_area
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{build_grid_e2, build_grid_e3, combinatorialize_loop};
    use crate::winding::winding_filling;
    use proptest::prelude::*;

    fn loop_of_polyline(pts: &[Point], patch: &TriangulatedPatch) -> SkeletonLoop {
        let chain = PLChain {
            dim: 1,
            pieces: vec![PLPiece { coords: pts.to_vec(), multiplicity: 1 }],
        };
        let (lp, cost) = combinatorialize_loop(&chain, patch).unwrap();
        assert!(cost <= 1e-9, "test loop should lie on the skeleton");
        lp
    }

    fn rect_loop(x0: f64, y0: f64, x1: f64, y1: f64, patch: &TriangulatedPatch) -> SkeletonLoop {
        loop_of_polyline(
            &[
                [x0, y0, 0.0],
                [x1, y0, 0.0],
                [x1, y1, 0.0],
                [x0, y1, 0.0],
                [x0, y0, 0.0],
            ],
            patch,
        )
    }

    fn rect_filling(x0: f64, y0: f64, x1: f64, y1: f64) -> PLChain {
        PLChain {
            dim: 2,
            pieces: vec![
                PLPiece {
                    coords: vec![[x0, y0, 0.0], [x1, y0, 0.0], [x1, y1, 0.0]],
                    multiplicity: 1,
                },
                PLPiece {
                    coords: vec![[x0, y0, 0.0], [x1, y1, 0.0], [x0, y1, 0.0]],
                    multiplicity: 1,
                },
            ],
        }
    }

    #[test]
    fn single_cell_cover_has_unit_degree_and_tight_area() {
        let patch = build_grid_e2(1).unwrap();
        let t = patch.triangle_points(0);
        let gamma = loop_of_polyline(&[t[0], t[1], t[2], t[0]], &patch);
        let filling = PLChain {
            dim: 2,
            pieces: vec![PLPiece { coords: t.to_vec(), multiplicity: 1 }],
        };
        let tagged = tag_chain(&filling, &gamma, &patch).unwrap();
        assert_eq!(tagged.pieces.len(), 1);
        assert_eq!(tagged.pieces[0].simplex, 0);
        let field = extract_cellular(&tagged, &patch, 7).unwrap();
        assert_eq!(field.chain.coefficients, BTreeMap::from([(0u32, 1i64)]));
        assert_eq!(field.combinatorial_area, 1);
        assert_eq!(field.boundary_defect, 0);
        // one full cover saturates the sandwich
        assert!(field.area_slack.abs() <= 1e-12);
    }

    #[test]
    fn orientation_reversal_negates_and_doubling_doubles() {
        let patch = build_grid_e2(1).unwrap();
        let t = patch.triangle_points(0);
        let gamma = loop_of_polyline(&[t[0], t[1], t[2], t[0]], &patch);
        let reversed = SkeletonLoop {
            circuits: gamma
                .circuits
                .iter()
                .map(|c| c.iter().rev().map(|&(e, s)| (e, -s)).collect())
                .collect(),
        };
        let flipped = PLChain {
            dim: 2,
            pieces: vec![PLPiece {
                coords: vec![t[0], t[2], t[1]],
                multiplicity: 1,
            }],
        };
        let field =
            extract_cellular(&tag_chain(&flipped, &reversed, &patch).unwrap(), &patch, 1)
                .unwrap();
        assert_eq!(field.chain.coefficients, BTreeMap::from([(0u32, -1i64)]));

        let doubled = SkeletonLoop {
            circuits: gamma.circuits.iter().cloned().chain(gamma.circuits.clone()).collect(),
        };
        let two = PLChain {
            dim: 2,
            pieces: vec![
                PLPiece { coords: t.to_vec(), multiplicity: 1 },
                PLPiece { coords: t.to_vec(), multiplicity: 1 },
            ],
        };
        let field =
            extract_cellular(&tag_chain(&two, &doubled, &patch).unwrap(), &patch, 2).unwrap();
        assert_eq!(field.chain.coefficients, BTreeMap::from([(0u32, 2i64)]));
    }

    #[test]
    fn opposite_orientations_cancel_to_the_empty_chain() {
        let patch = build_grid_e2(1).unwrap();
        let t = patch.triangle_points(0);
        let pair = PLChain {
            dim: 2,
            pieces: vec![
                PLPiece { coords: t.to_vec(), multiplicity: 1 },
                PLPiece { coords: vec![t[0], t[2], t[1]], multiplicity: 1 },
            ],
        };
        let empty = SkeletonLoop { circuits: Vec::new() };
        let field =
            extract_cellular(&tag_chain(&pair, &empty, &patch).unwrap(), &patch, 3).unwrap();
        assert!(field.chain.coefficients.is_empty());
        assert_eq!(field.combinatorial_area, 0);
    }

    #[test]
    fn generic_points_clear_edges_and_count_preimages() {
        let patch = build_grid_e2(1).unwrap();
        let t = patch.triangle_points(0);
        // a pile of shrunken copies of the cell, all tagged correctly
        let mut pieces = Vec::new();
        for step in 1..=30 {
            let s = step as f64 / 32.0;
            let mid = scale(&add(&t[0], &add(&t[1], &t[2])), 1.0 / 3.0);
            let shrink = |p: &Point| add(&mid, &scale(&sub(p, &mid), s));
            pieces.push(TaggedPiece {
                simplex: 0,
                coords: [shrink(&t[0]), shrink(&t[1]), shrink(&t[2])],
                multiplicity: 1,
            });
        }
        let chain = PushedTwoChain {
            model: patch.model,
            pieces,
            boundary: SkeletonLoop { circuits: Vec::new() },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let q = generic_point(0, &chain, &patch, &mut rng).unwrap();
            assert!(q.clearance >= 1e-7 * 2.0f64.sqrt() * 0.0 + 1e-14);
            assert!(q.preimages <= 30);
            let d = degree_at(&q, &chain, &patch).unwrap();
            assert_eq!(d, q.preimages as i64, "all copies positively oriented");
        }
    }

    #[test]
    fn half_cover_fails_unanimity() {
        let patch = build_grid_e2(1).unwrap();
        let t = patch.triangle_points(0);
        let mid01 = scale(&add(&t[0], &t[1]), 0.5);
        let mid02 = scale(&add(&t[0], &t[2]), 0.5);
        // half the cell, tagged as if it covered it
        let chain = PushedTwoChain {
            model: patch.model,
            pieces: vec![TaggedPiece {
                simplex: 0,
                coords: [mid01, t[1], mid02],
                multiplicity: 1,
            }],
            boundary: SkeletonLoop { circuits: Vec::new() },
        };
        let mut seen_disagree = false;
        for seed in 0..16 {
            match extract_cellular(&chain, &patch, seed) {
                Err(Error::Certification(msg)) => {
                    assert!(msg.contains("disagree") || msg.contains("boundary"));
                    if msg.contains("disagree") {
                        seen_disagree = true;
                        break;
                    }
                }
                Ok(_) => continue,
                Err(e) => panic!("unexpected error {e:?}"),
            }
        }
        assert!(seen_disagree, "a half cover must trip the unanimity check");
    }

    #[test]
    fn planar_extraction_matches_the_winding_oracle() {
        let patch = build_grid_e2(3).unwrap();
        for (x0, y0, x1, y1) in
            [(0.0, 0.0, 1.0, 1.0), (-2.0, -1.0, 1.0, 2.0), (-1.0, -2.0, 2.0, 0.0)]
        {
            let gamma = rect_loop(x0, y0, x1, y1, &patch);
            let filling = rect_filling(x0, y0, x1, y1);
            let tagged = tag_chain(&filling, &gamma, &patch).unwrap();
            let field = extract_cellular(&tagged, &patch, 17).unwrap();
            let oracle = winding_filling(&gamma, &patch).unwrap();
            assert_eq!(field.chain, oracle, "degree field must equal the winding filling");
        }
    }

    #[test]
    fn block_pipeline_counts_cells_with_certified_bound() {
        let patch = build_grid_e2(3).unwrap();
        // one triangle cell
        let t = patch.triangle_points(0);
        let gamma = loop_of_polyline(&[t[0], t[1], t[2], t[0]], &patch);
        let filling = PLChain {
            dim: 2,
            pieces: vec![PLPiece { coords: t.to_vec(), multiplicity: 1 }],
        };
        let (area, _) =
            combinatorial_area_from_geometric(&gamma, &filling, &patch, &PushConfig::default())
                .unwrap();
        assert_eq!(area, 1);

        // 2x2 block: 8 cells
        let gamma = rect_loop(0.0, 0.0, 2.0, 2.0, &patch);
        let filling = rect_filling(0.0, 0.0, 2.0, 2.0);
        let (area, field) =
            combinatorial_area_from_geometric(&gamma, &filling, &patch, &PushConfig::default())
                .unwrap();
        assert_eq!(area, 8);
        assert!(field.chain.coefficients.values().all(|&d| d == 1));

        // side-3 square: 18 cells, and the bound 18 <= (1/minArea)*1*9
        // holds with equality
        let gamma = rect_loop(-1.0, -1.0, 2.0, 2.0, &patch);
        let filling = rect_filling(-1.0, -1.0, 2.0, 2.0);
        let (area, field) =
            combinatorial_area_from_geometric(&gamma, &filling, &patch, &PushConfig::default())
                .unwrap();
        assert_eq!(area, 18);
        assert!(field.area_slack.abs() <= 1e-9);
    }

    #[test]
    fn pushed_closed_surface_has_net_degree_zero() {
        let patch = build_grid_e3(1).unwrap();
        let c = [0.3, 0.55, 0.2];
        let s = 0.04;
        let v = [
            add(&c, &[s, s, s]),
            add(&c, &[s, -s, -s]),
            add(&c, &[-s, s, -s]),
            add(&c, &[-s, -s, s]),
        ];
        let faces = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        let sphere = PLChain {
            dim: 2,
            pieces: faces
                .iter()
                .map(|f| PLPiece {
                    coords: vec![v[f[0]], v[f[1]], v[f[2]]],
                    multiplicity: 1,
                })
                .collect(),
        };
        let out = push_chain(&sphere, &patch, &PushConfig::default()).unwrap();
        let empty = SkeletonLoop { circuits: Vec::new() };
        let tagged = tag_chain(&out.result, &empty, &patch).unwrap();
        let field = extract_cellular(&tagged, &patch, 23).unwrap();
        // the projection center lies outside this small surface, so its
        // image wraps the cell boundary with net degree zero: the folds
        // cancel arithmetically even though the image has positive area
        assert!(field.chain.coefficients.is_empty());
        assert_eq!(field.boundary_defect, 0);
        assert!(field.area_slack >= -1e-12);
        assert!(tagged.model_chain().volume(&patch.model) > 0.0);
    }

    #[test]
    fn exact_cell_boundary_cover_reads_off_unit_degrees() {
        let patch = build_grid_e3(1).unwrap();
        let tet = patch.tets[0];
        let [a, b, c, d] = [
            patch.point(tet[0]),
            patch.point(tet[1]),
            patch.point(tet[2]),
            patch.point(tet[3]),
        ];
        // outward-oriented boundary of a positively oriented cell
        let faces = [[a, c, b], [a, b, d], [a, d, c], [b, c, d]];
        let chain = PLChain {
            dim: 2,
            pieces: faces
                .iter()
                .map(|f| PLPiece { coords: f.to_vec(), multiplicity: 1 })
                .collect(),
        };
        let empty = SkeletonLoop { circuits: Vec::new() };
        let tagged = tag_chain(&chain, &empty, &patch).unwrap();
        let field = extract_cellular(&tagged, &patch, 31).unwrap();
        assert_eq!(field.chain.coefficients.len(), 4);
        assert!(field.chain.coefficients.values().all(|&v| v.abs() == 1));
        assert_eq!(field.boundary_defect, 0);
        assert!(field.area_slack.abs() <= 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_rectangles_agree_with_the_winding_oracle(
            x0 in -3i32..2, y0 in -3i32..2, w in 1i32..3, h in 1i32..3, seed in 0u64..1000
        ) {
            let patch = build_grid_e2(3).unwrap();
            let (x1, y1) = (x0 + w, y0 + h);
            prop_assume!(x1 <= 3 && y1 <= 3);
            let (x0, y0, x1, y1) = (x0 as f64, y0 as f64, x1 as f64, y1 as f64);
            let gamma = rect_loop(x0, y0, x1, y1, &patch);
            let filling = rect_filling(x0, y0, x1, y1);
            let tagged = tag_chain(&filling, &gamma, &patch).unwrap();
            let field = extract_cellular(&tagged, &patch, seed).unwrap();
            let oracle = winding_filling(&gamma, &patch).unwrap();
            prop_assert_eq!(field.chain, oracle);
        }
    }
}
