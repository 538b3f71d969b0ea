//! Exact van Kampen areas and combinatorial Dehn-function tables.
//!
//! The minimal diagram area of a null word equals the length of the
//! shortest insertion sequence turning the word into the empty word,
//! where one move splices a cyclic conjugate of a relator (or its
//! inverse) into the word at some position and freely reduces: pasting
//! one 2-cell onto the diagram boundary. Area search is therefore a
//! shortest-path problem over freely reduced words, run here as A*
//! with an exact, consistent heuristic for the standard rank-2 abelian
//! presentation and a zero heuristic otherwise.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::GroupModel;
use crate::presentation::Presentation;
use crate::word::{free_reduce, Letter, Word};

/// Exact minimal area, or proof that it exceeds the given budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Area {
    Exact(u64),
    Exceeded(u64),
}

/// One relator-cell paste: splice `rotation(relator)` (inverted first
/// when `inverted`) into the word before letter index `position`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Insertion {
    pub position: usize,
    pub relator: usize,
    pub rotation: usize,
    pub inverted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FillingResult {
    pub area: Area,
    /// Insertion sequence whose replay kills the word; present exactly
    /// when `area` is `Exact`.
    pub witness: Option<Vec<Insertion>>,
}

/// Integer 2-chain on a cell complex, keyed by 2-cell id. BTreeMap keeps
/// serialization order deterministic.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CellularTwoChain {
    pub coefficients: BTreeMap<u32, i64>,
}

impl CellularTwoChain {
    pub fn l1_norm(&self) -> u64 {
        self.coefficients.values().map(|c| c.unsigned_abs()).sum()
    }

    pub fn set(&mut self, cell: u32, coeff: i64) {
        if coeff == 0 {
            self.coefficients.remove(&cell);
        } else {
            self.coefficients.insert(cell, coeff);
        }
    }
}

/// Word-length cap for intermediate search states.
pub fn default_length_cap(w: &Word, p: &Presentation) -> usize {
    3 * w.len() + p.relators().iter().map(Word::len).max().unwrap_or(0)
}

pub fn vk_area(w: &Word, p: &Presentation, budget: u64) -> Result<FillingResult> {
    vk_area_with_cap(w, p, budget, default_length_cap(w, p))
}

/// A* over freely reduced words. Deterministic: the frontier orders by
/// (f, deeper-first, insertion counter), and neighbors are generated
/// position first, then relator, rotation, orientation. Preferring the
/// deeper node on f-ties drives the search straight down one optimal
/// filling instead of fanning across every peeling order of the same
/// diagram.
pub fn vk_area_with_cap(
    w: &Word,
    p: &Presentation,
    budget: u64,
    cap: usize,
) -> Result<FillingResult> {
    p.validate_word(w)?;
    let heuristic = Heuristic::for_presentation(p);
    let splices = relator_splices(p);

    if w.is_empty() {
        return Ok(FillingResult { area: Area::Exact(0), witness: Some(Vec::new()) });
    }
    // insertions never change the group element, so a nonzero
    // abelianization can be rejected before any search
    if matches!(heuristic, Heuristic::LatticeWinding) && w.exponent_vector(2) != vec![0, 0] {
        return Err(Error::NotFillable { cap, budget });
    }
    let h0 = heuristic.lower_bound(w);
    if h0 > budget {
        return Ok(FillingResult { area: Area::Exceeded(budget), witness: None });
    }

    // parent links index into `nodes` for witness reconstruction
    struct Node {
        word: Word,
        parent: Option<(usize, Insertion)>,
    }
    let mut nodes: Vec<Node> = vec![Node { word: w.clone(), parent: None }];
    let mut best: HashMap<Word, u64> = HashMap::from([(w.clone(), 0)]);
    let mut frontier: BinaryHeap<Reverse<(u64, Reverse<u64>, usize)>> = BinaryHeap::new();
    frontier.push(Reverse((h0, Reverse(0), 0)));
    let mut hit_budget = false;

    while let Some(Reverse((_, Reverse(g), id))) = frontier.pop() {
        let cur = nodes[id].word.clone();
        if best.get(&cur).is_some_and(|&b| b < g) {
            continue; // a cheaper path to this word was found meanwhile
        }
        if cur.is_empty() {
            let mut path = Vec::new();
            let mut at = id;
            while let Some((prev, ins)) = nodes[at].parent {
                path.push(ins);
                at = prev;
            }
            path.reverse();
            return Ok(FillingResult { area: Area::Exact(g), witness: Some(path) });
        }
        for position in 0..=cur.len() {
            for (relator, rotation, inverted, splice) in splices.iter().map(unpack_splice) {
                let next = splice_at(&cur, splice, position);
                if next.len() > cap {
                    continue;
                }
                let ng = g + 1;
                if ng > budget {
                    hit_budget = true;
                    continue;
                }
                if best.get(&next).is_some_and(|&old| old <= ng) {
                    continue;
                }
                let nh = heuristic.lower_bound(&next);
                if ng + nh > budget {
                    hit_budget = true;
                    continue;
                }
                best.insert(next.clone(), ng);
                let nid = nodes.len();
                nodes.push(Node {
                    word: next,
                    parent: Some((id, Insertion { position, relator, rotation, inverted })),
                });
                frontier.push(Reverse((ng + nh, Reverse(ng), nid)));
            }
        }
    }

    if hit_budget {
        Ok(FillingResult { area: Area::Exceeded(budget), witness: None })
    } else {
        Err(Error::NotFillable { cap, budget })
    }
}

/// Apply one insertion (splice + free reduction) to a word.
pub fn apply_insertion(w: &Word, p: &Presentation, ins: &Insertion) -> Result<Word> {
    let relators = p.relators();
    let r = relators.get(ins.relator).ok_or(Error::PresentationParse(
        "witness references a relator outside the presentation".into(),
    ))?;
    let base = if ins.inverted { r.inverse() } else { r.clone() };
    if ins.rotation >= base.len() || ins.position > w.len() {
        return Err(Error::PresentationParse("witness indices out of range".into()));
    }
    Ok(splice_at(w, &base.rotate(ins.rotation), ins.position))
}

/// Replay a witness; returns the final word (empty iff the witness
/// fills completely).
pub fn replay_witness(w: &Word, p: &Presentation, witness: &[Insertion]) -> Result<Word> {
    let mut cur = w.clone();
    for ins in witness {
        cur = apply_insertion(&cur, p, ins)?;
    }
    Ok(cur)
}

fn splice_at(w: &Word, splice: &Word, position: usize) -> Word {
    let letters = w.letters();
    let mut raw: Vec<Letter> = Vec::with_capacity(letters.len() + splice.len());
    raw.extend_from_slice(&letters[..position]);
    raw.extend_from_slice(splice.letters());
    raw.extend_from_slice(&letters[position..]);
    Word::from_letters(&free_reduce(&raw)).expect("free reduction preserves validity")
}

type Splice = (usize, usize, bool, Word);

fn unpack_splice(s: &Splice) -> (usize, usize, bool, &Word) {
    (s.0, s.1, s.2, &s.3)
}

/// All distinct cyclic rotations of every relator and its inverse,
/// tagged with (relator index, rotation, inverted).
fn relator_splices(p: &Presentation) -> Vec<Splice> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (t, r) in p.relators().iter().enumerate() {
        for (inverted, base) in [(false, r.clone()), (true, r.inverse())] {
            for k in 0..base.len() {
                let rot = base.rotate(k);
                if seen.insert(rot.clone()) {
                    out.push((t, k, inverted, rot));
                }
            }
        }
    }
    out
}

enum Heuristic {
    /// Exact filling norm for the standard presentation of the rank-2
    /// lattice: the loop's winding chain is the unique real filling, so
    /// its L1 norm is a consistent lower bound for diagram area
    /// (inserting one relator conjugate shifts the winding of exactly
    /// one unit square by ±1).
    LatticeWinding,
    Zero,
}

impl Heuristic {
    fn for_presentation(p: &Presentation) -> Heuristic {
        let is_z2 = p.generator_count() == 2
            && p.relators().len() == 1
            && p.relators()[0].len() == 4
            && p.relators()[0].exponent_vector(2) == vec![0, 0];
        if is_z2 {
            Heuristic::LatticeWinding
        } else {
            Heuristic::Zero
        }
    }

    fn lower_bound(&self, w: &Word) -> u64 {
        match self {
            Heuristic::Zero => 0,
            Heuristic::LatticeWinding => lattice_winding_norm(w),
        }
    }
}

/// Sum of |winding number| of the lattice loop traced by w over all
/// unit squares. Column-wise prefix sums of horizontal edge
/// multiplicities: W(x, y) - W(x, y-1) equals the net multiplicity of
/// the directed edge (x, y) -> (x+1, y). The word must trace a closed
/// loop (zero exponent vector); open paths have no winding function.
pub fn lattice_winding_norm(w: &Word) -> u64 {
    let mut h_edges: BTreeMap<(i64, i64), i64> = BTreeMap::new();
    let (mut x, mut y) = (0i64, 0i64);
    for &l in w.letters() {
        match l {
            1 => {
                *h_edges.entry((x, y)).or_default() += 1;
                x += 1;
            }
            -1 => {
                x -= 1;
                *h_edges.entry((x, y)).or_default() -= 1;
            }
            2 => y += 1,
            -2 => y -= 1,
            _ => {} // letters beyond rank 2 do not occur for this heuristic
        }
    }
    // BTreeMap iterates (x, y) ascending, so each column's entries come
    // in increasing y: running prefix sum is the winding of the square
    // just below the next horizontal edge... accumulate per column
    let mut total = 0u64;
    let mut col = i64::MIN;
    let mut acc = 0i64;
    let mut prev_y = 0i64;
    for (&(cx, cy), &mult) in &h_edges {
        if cx != col {
            debug_assert_eq!(acc, 0, "closed loop has zero net column flux");
            col = cx;
            acc = 0;
        } else if acc != 0 {
            total += acc.unsigned_abs() * (cy - prev_y) as u64;
        }
        acc += mult;
        prev_y = cy;
    }
    debug_assert_eq!(acc, 0);
    total
}

/// Greedy filling for the rank-2 lattice presentation: repeatedly take
/// the first insertion that strictly lowers the winding norm. When it
/// reaches the empty word the step count equals the starting norm,
/// which certifies the area exactly (norm is also a lower bound).
pub fn greedy_lattice_witness(w: &Word, p: &Presentation) -> Option<(u64, Vec<Insertion>)> {
    if w.exponent_vector(2) != vec![0, 0] {
        return None;
    }
    let splices = relator_splices(p);
    let mut cur = w.clone();
    let mut path = Vec::new();
    let target = lattice_winding_norm(w);
    let mut h = target;
    while !cur.is_empty() {
        let mut advanced = false;
        'outer: for position in 0..=cur.len() {
            for (relator, rotation, inverted, splice) in splices.iter().map(unpack_splice) {
                let next = splice_at(&cur, splice, position);
                let nh = lattice_winding_norm(&next);
                if nh < h && next.len() <= cur.len() + 2 {
                    path.push(Insertion { position, relator, rotation, inverted });
                    cur = next;
                    h = nh;
                    advanced = true;
                    break 'outer;
                }
            }
        }
        if !advanced {
            return None;
        }
    }
    (path.len() as u64 == target).then_some((target, path))
}

#[derive(Clone, Debug, Serialize)]
pub struct DehnRow {
    pub n: usize,
    pub value: Area,
    /// Word attaining the maximum (empty when the max is 0).
    pub witness: Word,
}

#[derive(Clone, Debug, Serialize)]
pub struct DehnTable {
    pub rows: Vec<DehnRow>,
}

impl DehnTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,area,witness\n");
        for row in &self.rows {
            let area = match row.value {
                Area::Exact(v) => v.to_string(),
                Area::Exceeded(b) => format!(">{b}"),
            };
            out.push_str(&format!("{},{},{}\n", row.n, area, row.witness));
        }
        out
    }
}

/// Max-over-null-words table by exhaustive enumeration of freely
/// reduced words up to each length bound. Words are canonicalized by
/// cyclic rotation and inversion first (area is invariant under both),
/// then filled with `vk_area`. Rows become `Exceeded` when any area
/// search hits the budget.
pub fn dehn_function(model: &GroupModel, n_max: usize, budget: u64) -> Result<DehnTable> {
    let p = model.presentation();
    let mut canonical: HashSet<Word> = HashSet::new();
    let mut rows = Vec::new();
    let mut running: u64 = 0;
    let mut running_witness = Word::empty();
    let mut exceeded = false;

    for n in 1..=n_max {
        // enumerate freely reduced words of length exactly n
        let mut stack: Vec<Vec<Letter>> = vec![Vec::new()];
        let k = model.generator_count() as Letter;
        while let Some(prefix) = stack.pop() {
            if prefix.len() == n {
                let w = Word::from_letters(&prefix)?;
                if !model.is_null(&w)? {
                    continue;
                }
                let c = canonical_null_form(&w);
                if !canonical.insert(c.clone()) {
                    continue;
                }
                match vk_area(&c, p, budget)? {
                    FillingResult { area: Area::Exact(a), .. } => {
                        if a > running {
                            running = a;
                            running_witness = c;
                        }
                    }
                    FillingResult { area: Area::Exceeded(_), .. } => exceeded = true,
                }
                continue;
            }
            for g in (1..=k).flat_map(|g| [g, -g]) {
                if prefix.last().is_some_and(|&last| last == -g) {
                    continue;
                }
                let mut next = prefix.clone();
                next.push(g);
                stack.push(next);
            }
        }
        rows.push(DehnRow {
            n,
            value: if exceeded { Area::Exceeded(budget) } else { Area::Exact(running) },
            witness: running_witness.clone(),
        });
    }
    Ok(DehnTable { rows })
}

/// Minimal representative of a word among all cyclic rotations of
/// itself and its inverse; area-invariant canonical form for dedup.
pub fn canonical_null_form(w: &Word) -> Word {
    let mut best = w.clone();
    for base in [w.clone(), w.inverse()] {
        for k in 0..base.len().max(1) {
            let rot = base.rotate(k);
            if rot < best {
                best = rot;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::{presentation_surface_genus2, presentation_zk};
    use proptest::prelude::*;

    fn z2() -> Presentation {
        presentation_zk(2)
    }

    #[test]
    fn empty_word_has_area_zero() {
        let res = vk_area(&Word::empty(), &z2(), 10).unwrap();
        assert_eq!(res.area, Area::Exact(0));
    }

    #[test]
    fn relator_has_area_one() {
        let res = vk_area(&Word::parse("abAB").unwrap(), &z2(), 10).unwrap();
        assert_eq!(res.area, Area::Exact(1));
        let w = Word::parse("abAB").unwrap();
        let end = replay_witness(&w, &z2(), &res.witness.unwrap()).unwrap();
        assert!(end.is_empty());
    }

    #[test]
    fn two_by_two_commutator_has_area_four() {
        let w = Word::parse("aabbAABB").unwrap();
        let res = vk_area(&w, &z2(), 10).unwrap();
        assert_eq!(res.area, Area::Exact(4));
        let end = replay_witness(&w, &z2(), &res.witness.unwrap()).unwrap();
        assert!(end.is_empty());
    }

    #[test]
    fn three_by_three_commutator_has_area_nine() {
        let w = Word::parse("aaabbbAAABBB").unwrap();
        let res = vk_area(&w, &z2(), 20).unwrap();
        assert_eq!(res.area, Area::Exact(9));
    }

    #[test]
    fn budget_exceeded_is_reported() {
        let w = Word::parse("aabbAABB").unwrap();
        let res = vk_area(&w, &z2(), 3).unwrap();
        assert_eq!(res.area, Area::Exceeded(3));
        assert!(res.witness.is_none());
    }

    #[test]
    fn non_null_word_is_not_fillable() {
        let w = Word::parse("ab").unwrap();
        match vk_area(&w, &z2(), 5) {
            Err(Error::NotFillable { .. }) => {}
            other => panic!("expected NotFillable, got {other:?}"),
        }
    }

    #[test]
    fn winding_norm_examples() {
        assert_eq!(lattice_winding_norm(&Word::parse("abAB").unwrap()), 1);
        assert_eq!(lattice_winding_norm(&Word::parse("aabbAABB").unwrap()), 4);
        assert_eq!(lattice_winding_norm(&Word::parse("aaabbbAAABBB").unwrap()), 9);
        // doubled loop winds twice over one square
        assert_eq!(lattice_winding_norm(&Word::parse("abABabAB").unwrap()), 2);
        // figure-eight: adjacent squares with opposite winding
        assert_eq!(lattice_winding_norm(&Word::parse("abABAbaB").unwrap()), 2);
    }

    #[test]
    fn surface_relator_area_one() {
        let p = presentation_surface_genus2();
        let w = Word::parse("abABcdCD").unwrap();
        let res = vk_area(&w, &p, 4).unwrap();
        assert_eq!(res.area, Area::Exact(1));
    }

    #[test]
    fn greedy_witness_matches_exact_area_on_square_commutators() {
        let p = z2();
        for s in 1..=4usize {
            let w = Word::parse(&format!(
                "{}{}{}{}",
                "a".repeat(s),
                "b".repeat(s),
                "A".repeat(s),
                "B".repeat(s)
            ))
            .unwrap();
            let (area, path) = greedy_lattice_witness(&w, &p).expect("greedy succeeds");
            assert_eq!(area, (s * s) as u64);
            let end = replay_witness(&w, &p, &path).unwrap();
            assert!(end.is_empty(), "greedy path fills completely for s={s}");
        }
    }

    #[test]
    fn dehn_table_z2_matches_enumeration_oracle() {
        let m = GroupModel::free_abelian(2);
        let table = dehn_function(&m, 8, 16).unwrap();
        let values: Vec<Area> = table.rows.iter().map(|r| r.value).collect();
        // odd lengths add nothing; maxima are the square commutators
        assert_eq!(values[3], Area::Exact(1), "n=4");
        assert_eq!(values[5], Area::Exact(2), "n=6");
        assert_eq!(values[7], Area::Exact(4), "n=8");
        for pair in table.rows.windows(2) {
            let (Area::Exact(a), Area::Exact(b)) = (pair[0].value, pair[1].value) else {
                panic!("budget not hit in this range")
            };
            assert!(a <= b, "monotone");
        }
    }

    #[test]
    fn dehn_table_free_group_is_zero() {
        let m = GroupModel::free(2);
        let table = dehn_function(&m, 6, 4).unwrap();
        assert!(table.rows.iter().all(|r| r.value == Area::Exact(0)));
    }

    #[test]
    fn csv_shape() {
        let m = GroupModel::free_abelian(2);
        let table = dehn_function(&m, 4, 8).unwrap();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,area,witness"));
        assert_eq!(csv.lines().count(), 5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn subadditive_under_concatenation(
            a in prop::collection::vec((1i16..=2, prop::bool::ANY), 1..5),
            b in prop::collection::vec((1i16..=2, prop::bool::ANY), 1..5),
        ) {
            let p = z2();
            let m = GroupModel::free_abelian(2);
            let to_word = |raw: Vec<(i16, bool)>| {
                let letters: Vec<Letter> =
                    raw.into_iter().map(|(g, i)| if i { -g } else { g }).collect();
                Word::from_letters(&letters).unwrap()
            };
            // close each word up into a null word by appending the
            // inverse of its exponent drift
            let close = |w: Word| -> Word {
                let e = w.exponent_vector(2);
                let mut tail: Vec<Letter> = Vec::new();
                for _ in 0..e[0].abs() { tail.push(if e[0] > 0 { -1 } else { 1 }); }
                for _ in 0..e[1].abs() { tail.push(if e[1] > 0 { -2 } else { 2 }); }
                w.concat(&Word::from_letters(&tail).unwrap())
            };
            let wa = close(to_word(a));
            let wb = close(to_word(b));
            prop_assume!(m.is_null(&wa).unwrap() && m.is_null(&wb).unwrap());
            let area = |w: &Word| match vk_area(w, &p, 30).unwrap().area {
                Area::Exact(v) => v,
                Area::Exceeded(_) => panic!("budget hit"),
            };
            prop_assert!(area(&wa.concat(&wb)) <= area(&wa) + area(&wb));
        }

        #[test]
        fn witness_replay_round_trips(
            raw in prop::collection::vec((1i16..=2, prop::bool::ANY), 0..6),
        ) {
            let p = z2();
            let letters: Vec<Letter> =
                raw.into_iter().map(|(g, i)| if i { -g } else { g }).collect();
            let w0 = Word::from_letters(&letters).unwrap();
            let e = w0.exponent_vector(2);
            prop_assume!(e == vec![0, 0]);
            let res = vk_area(&w0, &p, 20).unwrap();
            if let (Area::Exact(n), Some(path)) = (res.area, res.witness) {
                prop_assert_eq!(path.len() as u64, n);
                let end = replay_witness(&w0, &p, &path).unwrap();
                prop_assert!(end.is_empty());
            }
        }
    }
}
