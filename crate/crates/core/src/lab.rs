//! Growth-profile tables for filling areas, the `f(n) ≤ A·g(Bn+C)+Dn+E`
//! comparison search, and the two built-in combinatorial/geometric
//! equivalence experiments (flat pair and hyperbolic pair) with their
//! JSON / CSV / SVG report emitters.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filling::{dehn_function, greedy_lattice_witness, lattice_winding_norm, Area};
use crate::geom::{
    build_grid_e2, build_h2_tiling, combinatorialize_loop, SkeletonLoop, TriangulatedPatch,
};
use crate::model::GroupModel;
use crate::norm::{filling_norm, CellularOneCycle};
use crate::push::{push_chain, PushConfig};
use crate::winding::winding_filling;
use crate::word::Word;
use crate::geom::ModelGeometry;

// ---------------------------------------------------------------------
// Profile tables

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    Combinatorial,
    Geometric,
}

impl ProfileKind {
    fn label(&self) -> &'static str {
        match self {
            ProfileKind::Combinatorial => "combinatorial",
            ProfileKind::Geometric => "geometric",
        }
    }
}

/// One row of a growth profile: the largest filling area found among
/// all inputs of size at most `n`. `exact` marks rows whose value is a
/// proven maximum (exhaustive search); unset rows are lower bounds
/// attained by a designed family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub n: u64,
    pub value: f64,
    pub exact: bool,
    pub witness: String,
}

/// Nondecreasing table of max filling areas, one kind per table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileTable {
    pub kind: ProfileKind,
    pub rows: Vec<ProfileRow>,
}

impl ProfileTable {
    pub fn new(kind: ProfileKind) -> Self {
        ProfileTable { kind, rows: Vec::new() }
    }

    /// Append a row keeping the running maximum; the stored value never
    /// decreases and the witness travels with the value that set it.
    fn push_cumulative(&mut self, n: u64, value: f64, exact: bool, witness: String) {
        let (value, witness) = match self.rows.last() {
            Some(prev) if prev.value >= value => (prev.value, prev.witness.clone()),
            _ => (value, witness),
        };
        self.rows.push(ProfileRow { n, value, exact, witness });
    }

    pub fn max_n(&self) -> Option<u64> {
        self.rows.last().map(|r| r.n)
    }

    /// Value at the smallest tabulated argument ≥ `x`; None past the end.
    pub fn value_at_least(&self, x: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.n as f64 >= x - 1e-9).map(|r| r.value)
    }

    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].n < w[1].n && w[0].value <= w[1].value)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value,kind,witness\n");
        for row in &self.rows {
            let kind = if row.exact {
                self.kind.label().to_string()
            } else {
                format!("{}-sampled", self.kind.label())
            };
            let witness = row.witness.replace(',', ";");
            let _ = writeln!(out, "{},{},{},{}", row.n, row.value, kind, witness);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ProfileTable> {
        let mut lines = text.lines();
        match lines.next() {
            Some("n,value,kind,witness") => {}
            other => {
                return Err(Error::Serialization(format!(
                    "profile csv header missing, got {other:?}"
                )))
            }
        }
        let mut kind: Option<ProfileKind> = None;
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(4, ',');
            let bad = || Error::Serialization(format!("profile csv row {} malformed", i + 2));
            let n: u64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let value: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let kind_cell = parts.next().ok_or_else(bad)?;
            let witness = parts.next().unwrap_or("").to_string();
            let (row_kind, exact) = match kind_cell {
                "combinatorial" => (ProfileKind::Combinatorial, true),
                "combinatorial-sampled" => (ProfileKind::Combinatorial, false),
                "geometric" => (ProfileKind::Geometric, true),
                "geometric-sampled" => (ProfileKind::Geometric, false),
                other => {
                    return Err(Error::Serialization(format!(
                        "profile csv row {}: unknown kind {other}",
                        i + 2
                    )))
                }
            };
            match kind {
                None => kind = Some(row_kind),
                Some(k) if k == row_kind => {}
                Some(_) => {
                    return Err(Error::Serialization(
                        "profile csv mixes combinatorial and geometric rows".into(),
                    ))
                }
            }
            rows.push(ProfileRow { n, value, exact, witness });
        }
        let table = ProfileTable {
            kind: kind.unwrap_or(ProfileKind::Combinatorial),
            rows,
        };
        if !table.is_monotone() {
            return Err(Error::Serialization("profile csv rows are not monotone".into()));
        }
        Ok(table)
    }
}

// ---------------------------------------------------------------------
// Combinatorial profiles

/// Largest word length per built-in group for which enumerating every
/// freely reduced null word stays affordable; beyond it the table
/// continues with designed word families and rows flip to sampled.
fn exhaustive_horizon(model: &GroupModel) -> usize {
    match model.name() {
        "free-abelian" => 12,
        "surface-genus2" => 5,
        _ => 8,
    }
}

/// Max-filling-area table for a group: exhaustive over all null words
/// up to the model's horizon (exact rows), then extended by designed
/// families whose areas are certified per word (sampled rows).
pub fn combinatorial_profile(
    model: &GroupModel,
    n_max: usize,
    budget: u64,
) -> Result<ProfileTable> {
    let mut table = ProfileTable::new(ProfileKind::Combinatorial);
    if model.presentation().relators().is_empty() {
        // no relators: only the freely trivial word is null, so every
        // row is an exact zero and no enumeration is needed
        for n in 1..=n_max {
            table.push_cumulative(n as u64, 0.0, true, String::new());
        }
        return Ok(table);
    }

    let horizon = exhaustive_horizon(model).min(n_max);
    let exhaustive = dehn_function(model, horizon, budget)?;
    for row in &exhaustive.rows {
        let (value, exact) = match row.value {
            Area::Exact(v) => (v as f64, true),
            Area::Exceeded(b) => (b as f64, false),
        };
        table.push_cumulative(row.n as u64, value, exact, row.witness.to_string());
    }

    for n in horizon + 1..=n_max {
        let mut best: Option<(u64, Word)> = None;
        for (area, word) in sampled_words(model, n)? {
            if best.as_ref().is_none_or(|(a, _)| area > *a) {
                best = Some((area, word));
            }
        }
        match best {
            Some((area, word)) => {
                table.push_cumulative(n as u64, area as f64, false, word.to_string())
            }
            None => table.push_cumulative(n as u64, 0.0, false, String::new()),
        }
    }
    Ok(table)
}

/// Designed null-word families with per-word certified areas, used past
/// the exhaustive horizon. Free abelian rank 2: rectangle commutators
/// aᵖbᵠa⁻ᵖb⁻ᵠ of perimeter n, area pq certified by the winding norm
/// (lower bound) and the greedy diagram (matching upper bound). Surface
/// genus 2: relator rotations, area = reduction step count, which is 1
/// and minimal since the word is nontrivial.
fn sampled_words(model: &GroupModel, n: usize) -> Result<Vec<(u64, Word)>> {
    let mut out = Vec::new();
    match model.name() {
        "free-abelian" => {
            if n % 2 != 0 || n < 4 {
                return Ok(out); // null words in rank 2 have even length ≥ 4
            }
            let half = n / 2;
            for p in 1..half {
                let q = half - p;
                let mut letters = Vec::with_capacity(n);
                letters.extend(std::iter::repeat_n(1, p));
                letters.extend(std::iter::repeat_n(2, q));
                letters.extend(std::iter::repeat_n(-1, p));
                letters.extend(std::iter::repeat_n(-2, q));
                let w = Word::from_letters(&letters)?;
                let area = lattice_winding_norm(&w);
                debug_assert_eq!(area, (p * q) as u64);
                debug_assert!(greedy_lattice_witness(&w, model.presentation()).is_some());
                out.push((area, w));
            }
        }
        "surface-genus2" => {
            // one- and two-cell boundary words: relator rotations, and
            // products of two rotations (two octagons glued along a
            // piece, which has length 1, so products reduce to length
            // 14 or 16 or collapse entirely)
            let p = model.presentation();
            let rotations = p.relator_rotations();
            let mut candidates: Vec<Word> = rotations.to_vec();
            for u in rotations {
                for v in rotations {
                    candidates.push(u.concat(v));
                }
            }
            let mut seen = std::collections::BTreeSet::new();
            for w in candidates {
                if w.is_empty() || w.len() > n || !seen.insert(w.clone()) {
                    continue;
                }
                let reduction = p.dehn_reduce(&w)?;
                if reduction.word.is_empty() {
                    out.push((reduction.steps as u64, w));
                }
            }
        }
        _ => {}
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Geometric profiles

/// Built-in loop generator families. Each yields closed edge loops of
/// prescribed edge counts inside the given patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopFamily {
    /// Axis rectangles (balanced and seeded-random splits) plus seeded
    /// monotone staircase loops on the flat unit grid.
    GridLoops,
    /// Center fans inside the fundamental octagon, the octagon
    /// boundary, and the two-octagon boundary on the {8,8} tiling.
    OctagonLoops,
}

struct FamilyLoop {
    n: u64,
    name: String,
    lp: SkeletonLoop,
}

/// Max filling area over a loop family, one row per length bound from
/// the shortest family loop up to n_max. Every loop runs the full
/// pipeline: push into the 1-skeleton, straighten to an edge loop, then
/// fill minimally (winding chain on the plane, exact L1 program
/// elsewhere). Values are lower bounds for the true geometric maximum
/// since the family is finite, so all rows are flagged sampled.
pub fn geometric_profile(
    patch: &TriangulatedPatch,
    family: LoopFamily,
    n_max: usize,
    seed: u64,
    config: &PushConfig,
) -> Result<ProfileTable> {
    let loops = match family {
        LoopFamily::GridLoops => grid_loops(patch, n_max, seed)?,
        LoopFamily::OctagonLoops => octagon_loops(patch, n_max)?,
    };
    let view = patch.two_complex_view();
    let mut best: BTreeMap<u64, (f64, String)> = BTreeMap::new();
    for fam in &loops {
        let chain = fam.lp.to_chain(patch);
        let outcome = push_chain(&chain, patch, config)?;
        let (pushed, _snap) = combinatorialize_loop(&outcome.result, patch)?;
        let value = match patch.model {
            ModelGeometry::E2 => winding_filling(&pushed, patch)?.l1_norm() as f64,
            _ => filling_norm(&pushed.cycle(), &view)?
                .norm
                .to_f64()
                .ok_or_else(|| Error::Serialization("filling norm overflows f64".into()))?,
        };
        let entry = best.entry(fam.n).or_insert((f64::NEG_INFINITY, String::new()));
        if value > entry.0 {
            *entry = (value, fam.name.clone());
        }
    }
    let mut table = ProfileTable::new(ProfileKind::Geometric);
    if let Some(&first) = best.keys().next() {
        for n in first..=n_max as u64 {
            match best.get(&n) {
                Some((v, w)) => table.push_cumulative(n, *v, false, w.clone()),
                None => {
                    let prev = table.rows.last().expect("first key seeds the table").clone();
                    table.push_cumulative(n, prev.value, false, prev.witness);
                }
            }
        }
    }
    Ok(table)
}

fn grid_extent(patch: &TriangulatedPatch) -> i64 {
    patch
        .vertices
        .iter()
        .map(|v| (v[0].abs().max(v[1].abs())).round() as i64)
        .max()
        .unwrap_or(0)
}

fn lattice_walk_loop(patch: &TriangulatedPatch, walk: &[(i64, i64)]) -> Result<SkeletonLoop> {
    let mut index: BTreeMap<(i64, i64), u32> = BTreeMap::new();
    for (i, v) in patch.vertices.iter().enumerate() {
        index.insert((v[0].round() as i64, v[1].round() as i64), i as u32);
    }
    let vid = |xy: (i64, i64)| -> Result<u32> {
        index
            .get(&xy)
            .copied()
            .ok_or_else(|| Error::OutsidePatch([xy.0 as f64, xy.1 as f64, 0.0]))
    };
    let mut circuit = Vec::with_capacity(walk.len());
    for i in 0..walk.len() {
        let a = vid(walk[i])?;
        let b = vid(walk[(i + 1) % walk.len()])?;
        let (e, s) = patch
            .edge_between(a, b)
            .ok_or_else(|| Error::NotABoundary(format!("no lattice edge {a}->{b}")))?;
        circuit.push((e, s));
    }
    Ok(SkeletonLoop { circuits: vec![circuit] })
}

/// Closed rectangle walk of width `a`, height `b`, lower-left corner
/// `(x0, y0)`, traversed counterclockwise in unit steps.
fn rect_walk(a: i64, b: i64, x0: i64, y0: i64) -> Vec<(i64, i64)> {
    let mut walk = Vec::with_capacity(2 * (a + b) as usize);
    for i in 0..a {
        walk.push((x0 + i, y0));
    }
    for j in 0..b {
        walk.push((x0 + a, y0 + j));
    }
    for i in 0..a {
        walk.push((x0 + a - i, y0 + b));
    }
    for j in 0..b {
        walk.push((x0, y0 + b - j));
    }
    walk
}

fn grid_loops(patch: &TriangulatedPatch, n_max: usize, seed: u64) -> Result<Vec<FamilyLoop>> {
    let extent = grid_extent(patch);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x6c6f6f70));
    let mut out = Vec::new();
    let add_rect = |out: &mut Vec<FamilyLoop>, a: i64, b: i64, tag: &str| -> Result<()> {
        if a > 2 * extent || b > 2 * extent {
            eprintln!("warning: dropping {a}x{b} rectangle loop, exceeds patch extent {extent}");
            return Ok(());
        }
        let (x0, y0) = (-(a / 2), -(b / 2));
        let lp = lattice_walk_loop(patch, &rect_walk(a, b, x0, y0))?;
        out.push(FamilyLoop {
            n: 2 * (a + b) as u64,
            name: format!("{tag}-{a}x{b}"),
            lp,
        });
        Ok(())
    };
    for n in (4..=n_max).step_by(2) {
        let half = (n / 2) as i64;
        // balanced rectangle: the area maximizer at this perimeter
        let a = half / 2;
        add_rect(&mut out, a, half - a, "rect")?;
        // seeded random aspect ratio
        let ar = rng.gen_range(1..half);
        add_rect(&mut out, ar, half - ar, "rect")?;
        // seeded monotone staircase: north-east path closed by the
        // west-south corner return; encloses at most the rectangle
        let p = rng.gen_range(1..half);
        let q = half - p;
        if p <= 2 * extent && q <= 2 * extent {
            let (x0, y0) = (-(p / 2), -(q / 2));
            let mut walk = vec![(x0, y0)];
            let (mut dx, mut dy) = (0i64, 0i64);
            for _ in 0..half {
                let go_right = dx < p && (dy == q || rng.gen_bool(0.5));
                if go_right {
                    dx += 1;
                } else {
                    dy += 1;
                }
                walk.push((x0 + dx, y0 + dy));
            }
            for i in 0..p {
                walk.push((x0 + p - 1 - i, y0 + q));
            }
            for j in 0..q {
                walk.push((x0, y0 + q - 1 - j));
            }
            walk.pop(); // closing vertex is implicit
            let lp = lattice_walk_loop(patch, &walk)?;
            out.push(FamilyLoop { n: n as u64, name: format!("stair-{p}+{q}"), lp });
        } else {
            eprintln!("warning: dropping staircase loop {p}+{q}, exceeds patch extent {extent}");
        }
    }
    Ok(out)
}

fn octagon_loops(patch: &TriangulatedPatch, n_max: usize) -> Result<Vec<FamilyLoop>> {
    if patch.triangles.len() < 8 {
        return Err(Error::PatchParameter("octagon loops need at least one full tile".into()));
    }
    // tile 0 occupies triangles 0..8 as [center, ring_k, ring_{k+1}]
    let center = patch.triangles[0][0];
    let ring: Vec<u32> = (0..8).map(|k| patch.triangles[k][1]).collect();
    let mut out = Vec::new();
    let add_walk = |out: &mut Vec<FamilyLoop>, verts: &[u32], name: String| -> Result<()> {
        if verts.len() > n_max {
            return Ok(());
        }
        let mut circuit = Vec::with_capacity(verts.len());
        for i in 0..verts.len() {
            let (a, b) = (verts[i], verts[(i + 1) % verts.len()]);
            let (e, s) = patch
                .edge_between(a, b)
                .ok_or_else(|| Error::NotABoundary(format!("no tile edge {a}->{b}")))?;
            circuit.push((e, s));
        }
        out.push(FamilyLoop {
            n: verts.len() as u64,
            name,
            lp: SkeletonLoop { circuits: vec![circuit] },
        });
        Ok(())
    };
    for k in 1..8usize {
        // spoke, k ring edges, spoke back: k+2 edges filling k cells
        let mut verts = vec![center];
        verts.extend(&ring[..=k]);
        add_walk(&mut out, &verts, format!("fan-{k}"))?;
    }
    add_walk(&mut out, &ring.clone(), "octagon".into())?;
    if patch.triangles.len() >= 16 {
        // boundary of the first two tiles glued along their shared side
        let mut pair = crate::filling::CellularTwoChain::default();
        for t in 0..16u32 {
            pair.set(t, 1);
        }
        let cycle = patch.two_complex_view().boundary(&pair);
        let lp = loop_from_cycle(&cycle, patch)?;
        let n = lp.edge_count() as u64;
        if n as usize <= n_max {
            out.push(FamilyLoop { n, name: "octagon-pair".into(), lp });
        }
    } else {
        eprintln!("warning: dropping two-octagon loop, patch has a single tile");
    }
    Ok(out)
}

/// Stitch the oriented edges of a 1-cycle into closed circuits
/// (Hierholzer); fails if some vertex has unbalanced degree.
pub fn loop_from_cycle(
    cycle: &CellularOneCycle,
    patch: &TriangulatedPatch,
) -> Result<SkeletonLoop> {
    let mut adjacency: BTreeMap<u32, Vec<(u32, u32, i8)>> = BTreeMap::new();
    for (&e, &c) in &cycle.coefficients {
        if c == 0 {
            continue;
        }
        let [u, v] = patch.edges[e as usize];
        let (from, to, sign) = if c > 0 { (u, v, 1i8) } else { (v, u, -1i8) };
        for _ in 0..c.unsigned_abs() {
            adjacency.entry(from).or_default().push((to, e, sign));
        }
    }
    for lst in adjacency.values_mut() {
        lst.sort_unstable();
    }
    let mut skeleton = SkeletonLoop::default();
    loop {
        let Some((&start, _)) = adjacency.iter().find(|(_, lst)| !lst.is_empty()) else {
            break;
        };
        let mut stack: Vec<(u32, Option<(u32, i8)>)> = vec![(start, None)];
        let mut trail: Vec<(u32, i8)> = Vec::new();
        while let Some(&(v, came_by)) = stack.last() {
            let next = adjacency.get_mut(&v).and_then(|lst| lst.pop());
            match next {
                Some((to, e, s)) => stack.push((to, Some((e, s)))),
                None => {
                    stack.pop();
                    if let Some(edge) = came_by {
                        trail.push(edge);
                    }
                }
            }
        }
        if adjacency.values().any(|lst| !lst.is_empty()) && trail.is_empty() {
            return Err(Error::NotABoundary("cycle does not decompose into circuits".into()));
        }
        trail.reverse();
        if !trail.is_empty() {
            skeleton.circuits.push(trail);
        }
    }
    skeleton.validate(patch)?;
    Ok(skeleton)
}

// ---------------------------------------------------------------------
// The comparison relation

/// Finite constant grid for the comparison search.
#[derive(Clone, Debug, Serialize)]
pub struct SearchGrid {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl SearchGrid {
    /// Powers of two keep the search exact and the constants existential.
    pub fn default_grid() -> SearchGrid {
        SearchGrid {
            a: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            b: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            c: vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            d: vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            e: vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        }
    }

    fn is_empty(&self) -> bool {
        self.a.is_empty()
            || self.b.is_empty()
            || self.c.is_empty()
            || self.d.is_empty()
            || self.e.is_empty()
    }
}

/// Witness that f(n) ≤ A·g(Bn+C) + Dn + E at every tabulated n of f,
/// with g read at the smallest tabulated argument ≥ Bn+C. Valid only on
/// the recorded sample range; finite tables cannot certify asymptotics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecedesCertificate {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub n_lo: u64,
    pub n_hi: u64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecedesFailure {
    /// Sample with the largest violation under the best grid point.
    pub n: u64,
    pub violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PrecedesOutcome {
    Certified(PrecedesCertificate),
    Failed(PrecedesFailure),
}

impl PrecedesOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, PrecedesOutcome::Certified(_))
    }
}

/// Minimum slack of RHS − LHS over all samples of f, or Err when g is
/// not tabulated far enough to evaluate some sample.
pub fn certificate_slack(
    f: &ProfileTable,
    g: &ProfileTable,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
) -> Result<f64> {
    let g_max = g.max_n().ok_or_else(|| Error::PatchParameter("empty g table".into()))?;
    let mut slack = f64::INFINITY;
    for row in &f.rows {
        let arg = b * row.n as f64 + c;
        let g_val = g.value_at_least(arg).ok_or(Error::RangeShortfall {
            needed: arg.ceil() as u64,
            max_n: g_max,
        })?;
        slack = slack.min(a * g_val + d * row.n as f64 + e - row.value);
    }
    Ok(slack)
}

/// Grid search for the comparison constants, minimizing A, then D, then
/// E (then B, C for determinism). Grid points that would read g beyond
/// its tabulated range are skipped; if every point is out of range the
/// search reports the shortfall. When no point certifies, the returned
/// failure carries the worst sample of the best (least-violating) point.
pub fn check_precedes(
    f: &ProfileTable,
    g: &ProfileTable,
    grid: &SearchGrid,
) -> Result<PrecedesOutcome> {
    if grid.is_empty() {
        return Err(Error::PatchParameter("comparison search grid is empty".into()));
    }
    if f.rows.is_empty() || g.rows.is_empty() {
        return Err(Error::PatchParameter("comparison needs two nonempty tables".into()));
    }
    let (n_lo, n_hi) = (f.rows[0].n, f.rows[f.rows.len() - 1].n);
    let mut best_fail: Option<(f64, u64)> = None; // (max violation, its n)
    let mut shortfall: Option<Error> = None;
    for &a in &grid.a {
        for &d in &grid.d {
            for &e in &grid.e {
                for &b in &grid.b {
                    for &c in &grid.c {
                        let mut min_slack = f64::INFINITY;
                        let mut worst: Option<(f64, u64)> = None;
                        let mut out_of_range = false;
                        for row in &f.rows {
                            let arg = b * row.n as f64 + c;
                            match g.value_at_least(arg) {
                                Some(gv) => {
                                    let slack = a * gv + d * row.n as f64 + e - row.value;
                                    min_slack = min_slack.min(slack);
                                    if slack < 0.0
                                        && worst.is_none_or(|(v, _)| -slack > v)
                                    {
                                        worst = Some((-slack, row.n));
                                    }
                                }
                                None => {
                                    out_of_range = true;
                                    if shortfall.is_none() {
                                        shortfall = Some(Error::RangeShortfall {
                                            needed: arg.ceil() as u64,
                                            max_n: g.max_n().unwrap_or(0),
                                        });
                                    }
                                    break;
                                }
                            }
                        }
                        if out_of_range {
                            continue;
                        }
                        if min_slack >= 0.0 {
                            return Ok(PrecedesOutcome::Certified(PrecedesCertificate {
                                a,
                                b,
                                c,
                                d,
                                e,
                                n_lo,
                                n_hi,
                                slack: min_slack,
                            }));
                        }
                        if let Some((viol, n)) = worst {
                            if best_fail.is_none_or(|(v, _)| viol < v) {
                                best_fail = Some((viol, n));
                            }
                        }
                    }
                }
            }
        }
    }
    match best_fail {
        Some((violation, n)) => Ok(PrecedesOutcome::Failed(PrecedesFailure { n, violation })),
        None => Err(shortfall.unwrap_or(Error::PatchParameter(
            "comparison search evaluated no grid point".into(),
        ))),
    }
}

/// Least-squares slope of log(value) against log(n), fitted over the
/// rows where the running maximum strictly increased (with value ≥ 1);
/// carried rows only echo earlier data and would bias the slope down.
pub fn fit_exponent(table: &ProfileTable) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for row in &table.rows {
        if row.value > prev {
            if row.value >= 1.0 && row.n >= 1 {
                pts.push(((row.n as f64).ln(), row.value.ln()));
            }
            prev = row.value;
        }
    }
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / m,
        pts.iter().map(|p| p.1).sum::<f64>() / m,
    );
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

// ---------------------------------------------------------------------
// Equivalence experiments

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    /// Rank-2 free abelian group against the flat unit grid.
    Flat,
    /// Genus-2 surface group against the {8,8} octagon tiling.
    Hyperbolic,
}

impl PairKind {
    pub fn label(&self) -> &'static str {
        match self {
            PairKind::Flat => "flat",
            PairKind::Hyperbolic => "hyperbolic",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub pair: &'static str,
    pub n_max: usize,
    pub seed: u64,
    pub comb: ProfileTable,
    pub geom: ProfileTable,
    pub comb_precedes_geom: PrecedesOutcome,
    pub geom_precedes_comb: PrecedesOutcome,
    /// Both directions certified on the sampled range.
    pub equivalent: bool,
    pub comb_exponent: Option<f64>,
    pub geom_exponent: Option<f64>,
    /// Cell-area normalization record: combinatorial values count
    /// cells, geometric cells need not be congruent, and any metric
    /// comparison multiplies by an area in this range.
    pub min_cell_area: f64,
    pub max_cell_area: f64,
}

/// Run one built-in pair end to end: both profiles, both comparison
/// directions on the default grid, growth exponents, and the cell-area
/// normalization constants of the geometric side.
pub fn equivalence_report(pair: PairKind, n_max: usize, seed: u64) -> Result<EquivalenceReport> {
    let (model, patch, family) = match pair {
        PairKind::Flat => (GroupModel::free_abelian(2), build_grid_e2(7)?, LoopFamily::GridLoops),
        PairKind::Hyperbolic => {
            (GroupModel::surface_genus2(), build_h2_tiling(2)?, LoopFamily::OctagonLoops)
        }
    };
    let comb = combinatorial_profile(&model, n_max, 2_000_000)?;
    let config = PushConfig { seed, ..PushConfig::default() };
    let geom = geometric_profile(&patch, family, n_max, seed, &config)?;

    let trivial = || {
        PrecedesOutcome::Certified(PrecedesCertificate {
            a: 1.0,
            b: 1.0,
            c: 0.0,
            d: 0.0,
            e: 0.0,
            n_lo: 0,
            n_hi: 0,
            slack: 0.0,
        })
    };
    let (cg, gc) = if comb.rows.is_empty() || geom.rows.is_empty() {
        (trivial(), trivial())
    } else {
        let grid = SearchGrid::default_grid();
        (check_precedes(&comb, &geom, &grid)?, check_precedes(&geom, &comb, &grid)?)
    };

    let mut min_cell = f64::INFINITY;
    let mut max_cell: f64 = 0.0;
    for t in 0..patch.triangles.len() as u32 {
        let [p, q, r] = patch.triangle_points(t);
        let area = patch.model.triangle_area(&p, &q, &r);
        min_cell = min_cell.min(area);
        max_cell = max_cell.max(area);
    }

    let equivalent = cg.is_certified() && gc.is_certified();
    Ok(EquivalenceReport {
        pair: pair.label(),
        n_max,
        seed,
        comb_exponent: fit_exponent(&comb),
        geom_exponent: fit_exponent(&geom),
        comb,
        geom,
        comb_precedes_geom: cg,
        geom_precedes_comb: gc,
        equivalent,
        min_cell_area: min_cell,
        max_cell_area: max_cell,
    })
}

pub fn report_json(report: &EquivalenceReport) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Serialization(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn outcome_label(direction: &str, outcome: &PrecedesOutcome) -> String {
    match outcome {
        PrecedesOutcome::Certified(c) => format!(
            "{direction}: A={} B={} C={} D={} E={} slack={:.3} on n in [{}, {}]",
            c.a, c.b, c.c, c.d, c.e, c.slack, c.n_lo, c.n_hi
        ),
        PrecedesOutcome::Failed(f) => {
            format!("{direction}: not certified, worst n={} violation={:.3}", f.n, f.violation)
        }
    }
}

/// Static overlay plot of the two profiles with the certificate lines
/// in the footer. Pure generated markup, byte-deterministic.
pub fn profiles_svg(report: &EquivalenceReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const ML: f64 = 56.0;
    const MR: f64 = 16.0;
    const MT: f64 = 34.0;
    const MB: f64 = 92.0;
    let n_hi = report
        .comb
        .max_n()
        .unwrap_or(1)
        .max(report.geom.max_n().unwrap_or(1))
        .max(1) as f64;
    let v_hi = report
        .comb
        .rows
        .iter()
        .chain(report.geom.rows.iter())
        .map(|r| r.value)
        .fold(1.0f64, f64::max);
    let x = |n: f64| ML + n / n_hi * (W - ML - MR);
    let y = |v: f64| H - MB - v / v_hi * (H - MT - MB);

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"monospace\" font-size=\"11\">\n"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{ML}\" y=\"20\" font-size=\"13\">{} pair: max filling area vs length bound \
         (seed {})</text>",
        report.pair, report.seed
    );
    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>",
        H - MB,
        W - MR
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB
    );
    for i in 0..=4 {
        let fx = n_hi * i as f64 / 4.0;
        let fv = v_hi * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.0}</text>",
            x(fx),
            H - MB + 14.0,
            fx
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{:.0}</text>",
            ML - 6.0,
            y(fv) + 4.0,
            fv
        );
    }
    for (table, color, label, dy) in [
        (&report.comb, "#1f77b4", "combinatorial", 0.0),
        (&report.geom, "#d62728", "geometric", 14.0),
    ] {
        if !table.rows.is_empty() {
            let pts: Vec<String> = table
                .rows
                .iter()
                .map(|r| format!("{:.1},{:.1}", x(r.n as f64), y(r.value)))
                .collect();
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                pts.join(" ")
            );
            for r in &table.rows {
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.2\" fill=\"{color}\"/>",
                    x(r.n as f64),
                    y(r.value)
                );
            }
        }
        let ly = MT + 10.0 + dy;
        let _ = writeln!(
            svg,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
            ML + 8.0,
            ly - 9.0
        );
        let _ = writeln!(svg, "<text x=\"{:.1}\" y=\"{ly:.1}\">{label}</text>", ML + 24.0);
    }
    let foot1 = outcome_label("comb \u{227a} geom", &report.comb_precedes_geom);
    let foot2 = outcome_label("geom \u{227a} comb", &report.geom_precedes_comb);
    let _ = writeln!(svg, "<text x=\"{ML}\" y=\"{:.1}\">{foot1}</text>", H - MB + 34.0);
    let _ = writeln!(svg, "<text x=\"{ML}\" y=\"{:.1}\">{foot2}</text>", H - MB + 50.0);
    let _ = writeln!(
        svg,
        "<text x=\"{ML}\" y=\"{:.1}\">equivalent on sampled range: {} | exponents comb={} \
         geom={} | cell area in [{:.6}, {:.6}]</text>",
        H - MB + 66.0,
        report.equivalent,
        report.comb_exponent.map_or("n/a".into(), |e| format!("{e:.3}")),
        report.geom_exponent.map_or("n/a".into(), |e| format!("{e:.3}")),
        report.min_cell_area,
        report.max_cell_area
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table_of(kind: ProfileKind, rows: &[(u64, f64)]) -> ProfileTable {
        let mut t = ProfileTable::new(kind);
        for &(n, v) in rows {
            t.push_cumulative(n, v, true, String::new());
        }
        t
    }

    #[test]
    fn identity_certificate_is_minimal() {
        let f = table_of(
            ProfileKind::Combinatorial,
            &[(1, 1.0), (2, 4.0), (3, 9.0), (4, 16.0)],
        );
        let out = check_precedes(&f, &f, &SearchGrid::default_grid()).unwrap();
        match out {
            PrecedesOutcome::Certified(c) => {
                assert_eq!((c.a, c.b, c.c, c.d, c.e), (1.0, 1.0, 0.0, 0.0, 0.0));
                assert_eq!(c.slack, 0.0);
                assert_eq!((c.n_lo, c.n_hi), (1, 4));
            }
            other => panic!("expected certificate, got {other:?}"),
        }
    }

    #[test]
    fn affine_shift_is_found_exactly() {
        // f = 2g + 3 on n = 1..10; with 3 available the best point is
        // A=2, E=3 and everything else zero
        let g_rows: Vec<(u64, f64)> = (1..=10).map(|n| (n, (n * n) as f64)).collect();
        let f_rows: Vec<(u64, f64)> =
            (1..=10).map(|n| (n, 2.0 * (n * n) as f64 + 3.0)).collect();
        let f = table_of(ProfileKind::Combinatorial, &f_rows);
        let g = table_of(ProfileKind::Combinatorial, &g_rows);
        let grid = SearchGrid {
            a: vec![1.0, 2.0, 4.0],
            b: vec![1.0],
            c: vec![0.0],
            d: vec![0.0, 1.0],
            e: vec![0.0, 3.0],
        };
        match check_precedes(&f, &g, &grid).unwrap() {
            PrecedesOutcome::Certified(c) => {
                assert_eq!((c.a, c.b, c.c, c.d, c.e), (2.0, 1.0, 0.0, 0.0, 3.0));
                assert_eq!(c.slack, 0.0);
            }
            other => panic!("expected certificate, got {other:?}"),
        }
    }

    #[test]
    fn quadratic_never_precedes_linear_and_worst_sample_is_last() {
        let f_rows: Vec<(u64, f64)> = (4..=40).map(|n| (n, (n * n) as f64)).collect();
        let g_rows: Vec<(u64, f64)> = (4..=40).map(|n| (n, n as f64)).collect();
        let f = table_of(ProfileKind::Combinatorial, &f_rows);
        let g = table_of(ProfileKind::Combinatorial, &g_rows);
        let grid = SearchGrid {
            a: vec![1.0],
            b: vec![1.0],
            c: vec![0.0, 1.0],
            d: vec![0.0, 1.0],
            e: vec![0.0, 1.0],
        };
        match check_precedes(&f, &g, &grid).unwrap() {
            PrecedesOutcome::Failed(fail) => {
                assert_eq!(fail.n, 40);
                // best in-range point is C=0, D=1, E=1: 1600 - (40+40+1)
                assert_eq!(fail.violation, 1519.0);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn shortfall_when_g_cannot_reach_any_sample() {
        let f = table_of(ProfileKind::Combinatorial, &[(50, 1.0)]);
        let g = table_of(ProfileKind::Combinatorial, &[(10, 5.0)]);
        match check_precedes(&f, &g, &SearchGrid::default_grid()) {
            Err(Error::RangeShortfall { needed, max_n }) => {
                assert_eq!(needed, 50);
                assert_eq!(max_n, 10);
            }
            other => panic!("expected range shortfall, got {other:?}"),
        }
    }

    #[test]
    fn flat_combinatorial_profile_matches_enumeration_and_family() {
        let model = GroupModel::free_abelian(2);
        let table = combinatorial_profile(&model, 16, 2_000_000).unwrap();
        assert!(table.is_monotone());
        let val = |n: u64| table.rows.iter().find(|r| r.n == n).unwrap();
        for (n, v) in [(4, 1.0), (8, 4.0), (10, 6.0), (12, 9.0), (14, 12.0), (16, 16.0)] {
            assert_eq!(val(n).value, v, "row {n}");
        }
        assert!(val(12).exact);
        assert!(!val(14).exact);
        assert_eq!(val(13).value, 9.0, "odd lengths have no new null words");
    }

    #[test]
    fn free_profile_is_identically_zero() {
        let table = combinatorial_profile(&GroupModel::free(2), 10, 1000).unwrap();
        assert_eq!(table.rows.len(), 10);
        assert!(table.rows.iter().all(|r| r.value == 0.0 && r.exact));
    }

    #[test]
    fn surface_profile_sees_relator_and_glued_pairs() {
        let model = GroupModel::surface_genus2();
        let table = combinatorial_profile(&model, 16, 100_000).unwrap();
        assert!(table.is_monotone());
        let val = |n: u64| table.rows.iter().find(|r| r.n == n).unwrap().value;
        for row in &table.rows {
            assert!(row.value <= row.n as f64, "area within reduction-step bound");
        }
        assert_eq!(val(7), 0.0, "no null words shorter than the relator");
        assert_eq!(val(8), 1.0, "the relator itself");
        assert_eq!(val(13), 1.0, "two cells cannot bound fewer than 14 edges");
        assert_eq!(val(14), 2.0, "two octagons glued along a length-1 piece");
        assert_eq!(val(16), 2.0);
    }

    #[test]
    fn grid_family_attains_the_balanced_rectangle_and_no_more() {
        let patch = build_grid_e2(7).unwrap();
        let table =
            geometric_profile(&patch, LoopFamily::GridLoops, 12, 3, &PushConfig::default())
                .unwrap();
        assert!(table.is_monotone());
        assert_eq!(table.rows.first().unwrap().n, 4);
        for row in &table.rows {
            if row.n % 2 == 0 {
                let cells = (row.n * row.n / 16) as f64;
                assert_eq!(row.value, 2.0 * cells, "two triangles per unit cell at n={}", row.n);
            }
            assert!(!row.exact, "family maxima are lower bounds");
        }
    }

    #[test]
    fn octagon_family_fans_tiles_and_pairs() {
        let patch = build_h2_tiling(2).unwrap();
        let table =
            geometric_profile(&patch, LoopFamily::OctagonLoops, 16, 0, &PushConfig::default())
                .unwrap();
        assert!(table.is_monotone());
        let val = |n: u64| table.rows.iter().find(|r| r.n == n).unwrap().value;
        for k in 1..=5u64 {
            assert_eq!(val(k + 2), k as f64, "fan of {k} cells");
        }
        assert_eq!(val(8), 8.0, "full tile boundary beats the fan of six");
        assert_eq!(val(14), 16.0, "two glued tiles");
        assert_eq!(val(16), 16.0, "carried to the length bound");
    }

    #[test]
    fn two_tile_boundary_stitches_into_one_circuit() {
        let patch = build_h2_tiling(2).unwrap();
        let mut pair = crate::filling::CellularTwoChain::default();
        for t in 0..16u32 {
            pair.set(t, 1);
        }
        let cycle = patch.two_complex_view().boundary(&pair);
        let lp = loop_from_cycle(&cycle, &patch).unwrap();
        assert_eq!(lp.circuits.len(), 1);
        assert_eq!(lp.edge_count(), 14);
        assert_eq!(lp.cycle(), cycle);
    }

    #[test]
    fn exponents_of_the_flat_pair_are_quadratic() {
        let model = GroupModel::free_abelian(2);
        let comb = combinatorial_profile(&model, 24, 2_000_000).unwrap();
        let patch = build_grid_e2(7).unwrap();
        let geom =
            geometric_profile(&patch, LoopFamily::GridLoops, 24, 5, &PushConfig::default())
                .unwrap();
        let ec = fit_exponent(&comb).unwrap();
        let eg = fit_exponent(&geom).unwrap();
        assert!((ec - 2.0).abs() < 0.05, "combinatorial exponent {ec}");
        assert!((eg - 2.0).abs() < 0.05, "geometric exponent {eg}");
    }

    #[test]
    fn hyperbolic_report_certifies_both_directions() {
        let report = equivalence_report(PairKind::Hyperbolic, 16, 11).unwrap();
        assert!(report.comb_precedes_geom.is_certified());
        assert!(report.geom_precedes_comb.is_certified());
        assert!(report.equivalent);
        if let PrecedesOutcome::Certified(c) = &report.geom_precedes_comb {
            assert!(c.d <= 2.0, "linear envelope, got D={}", c.d);
        }
    }

    #[test]
    fn reports_are_reproducible_byte_for_byte() {
        let r1 = equivalence_report(PairKind::Flat, 8, 7).unwrap();
        let r2 = equivalence_report(PairKind::Flat, 8, 7).unwrap();
        assert_eq!(report_json(&r1).unwrap(), report_json(&r2).unwrap());
        assert_eq!(r1.comb.to_csv(), r2.comb.to_csv());
        assert_eq!(r1.geom.to_csv(), r2.geom.to_csv());
        assert_eq!(profiles_svg(&r1), profiles_svg(&r2));
        assert!(r1.equivalent);
    }

    #[test]
    fn csv_round_trips() {
        let model = GroupModel::free_abelian(2);
        let table = combinatorial_profile(&model, 14, 2_000_000).unwrap();
        let parsed = ProfileTable::from_csv(&table.to_csv()).unwrap();
        assert_eq!(parsed, table);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Building f pointwise as A·g(n)+D·n+E from grid constants must
        /// certify, and doubling f's values transforms the certificate by
        /// A→2A, D→2D, E→2E, which the direct slack check accepts.
        #[test]
        fn certificates_scale_with_the_table(
            raw in proptest::collection::vec(0u32..40, 4..10),
            a in prop_oneof![Just(1.0f64), Just(2.0), Just(4.0), Just(8.0)],
            d in prop_oneof![Just(0.0f64), Just(1.0), Just(4.0), Just(16.0)],
            e in prop_oneof![Just(0.0f64), Just(2.0), Just(16.0)],
        ) {
            let mut g = ProfileTable::new(ProfileKind::Combinatorial);
            let mut acc = 0u64;
            for (i, step) in raw.iter().enumerate() {
                acc += *step as u64;
                g.push_cumulative(i as u64 + 1, acc as f64, true, String::new());
            }
            let mut f = ProfileTable::new(ProfileKind::Combinatorial);
            for row in &g.rows {
                f.push_cumulative(row.n, a * row.value + d * row.n as f64 + e, true, String::new());
            }
            let out = check_precedes(&f, &g, &SearchGrid::default_grid()).unwrap();
            prop_assert!(out.is_certified());

            let mut f2 = ProfileTable::new(ProfileKind::Combinatorial);
            for row in &f.rows {
                f2.push_cumulative(row.n, 2.0 * row.value, true, String::new());
            }
            let slack = certificate_slack(&f2, &g, 2.0 * a, 1.0, 0.0, 2.0 * d, 2.0 * e).unwrap();
            prop_assert!(slack >= 0.0);
        }
    }
}
