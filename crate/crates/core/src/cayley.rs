//! Balls in the Cayley 2-complex of a group model.
//!
//! Vertices are group elements found by breadth-first search from the
//! identity, so each carries its exact word-metric distance and a
//! witnessing geodesic word. Edges are the induced generator edges;
//! 2-cells are relator cells whose entire boundary lies in the ball,
//! stored once per geometric cell (spellings that differ by starting
//! corner are identified).

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{Element, GroupModel};
use crate::word::{Letter, Word};

#[derive(Clone, Debug)]
pub struct BallVertex {
    pub repr: Element,
    pub distance: usize,
    /// A geodesic word from the identity to this element.
    pub word: Word,
}

/// Undirected generator edge, stored with its positive-letter
/// orientation: src · letter = dst with letter > 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BallEdge {
    pub src: u32,
    pub letter: Letter,
    pub dst: u32,
}

/// One geometric relator cell. `corners[i]` is the vertex reached after
/// i letters of the relator read from the canonical base corner;
/// `boundary` lists (edge index, ±1) with sign −1 where the relator
/// traverses the stored edge against its orientation.
#[derive(Clone, Debug)]
pub struct BallTwoCell {
    pub base: u32,
    pub relator: usize,
    pub corners: Vec<u32>,
    pub boundary: Vec<(u32, i8)>,
}

#[derive(Debug)]
pub struct CayleyBall {
    pub radius: usize,
    pub elements: Vec<BallVertex>,
    pub edges: Vec<BallEdge>,
    pub two_cells: Vec<BallTwoCell>,
    index: HashMap<Element, u32>,
    edge_index: HashMap<(u32, Letter), u32>,
    reverse_index: HashMap<(u32, Letter), u32>,
}

impl CayleyBall {
    pub fn vertex_of(&self, e: &Element) -> Option<u32> {
        self.index.get(e).copied()
    }

    /// Edge index and orientation sign for the step `from · letter`.
    pub fn edge_of(&self, from: u32, letter: Letter, to: u32) -> Option<(u32, i8)> {
        if letter > 0 {
            self.edge_index.get(&(from, letter)).map(|&e| (e, 1))
        } else {
            self.edge_index.get(&(to, -letter)).map(|&e| (e, -1))
        }
    }

    /// Follow a word edge by edge from the identity vertex; `None` when
    /// the walk leaves the ball.
    pub fn walk_from_origin(&self, w: &Word) -> Option<u32> {
        let mut at = 0u32;
        for &l in w.letters() {
            at = self.step(at, l)?;
        }
        Some(at)
    }

    pub fn step(&self, from: u32, letter: Letter) -> Option<u32> {
        if letter > 0 {
            self.edge_index.get(&(from, letter)).map(|&e| self.edges[e as usize].dst)
        } else {
            self.reverse_index.get(&(from, -letter)).copied()
        }
    }
}

pub fn cayley_ball(model: &GroupModel, radius: usize) -> Result<CayleyBall> {
    cayley_ball_with_budget(model, radius, 2_000_000)
}

/// Breadth-first construction. Fails with the radius actually reached
/// when the vertex budget runs out, so callers can retry smaller.
pub fn cayley_ball_with_budget(
    model: &GroupModel,
    radius: usize,
    max_elements: usize,
) -> Result<CayleyBall> {
    let k = model.generator_count() as Letter;
    let letters: Vec<Letter> = (1..=k).flat_map(|g| [g, -g]).collect();

    let mut elements: Vec<BallVertex> = Vec::new();
    let mut index: HashMap<Element, u32> = HashMap::new();
    let id = model.identity();
    elements.push(BallVertex { repr: id.clone(), distance: 0, word: Word::empty() });
    index.insert(id, 0);

    let mut queue: VecDeque<u32> = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        let (dist, word) = (elements[v as usize].distance, elements[v as usize].word.clone());
        if dist == radius {
            continue;
        }
        for &l in &letters {
            let next_word = word.concat(&Word::from_letters(&[l])?);
            let repr = model.normal_form(&next_word)?;
            if index.contains_key(&repr) {
                continue;
            }
            if elements.len() >= max_elements {
                return Err(Error::BallBudget { budget: max_elements, radius_reached: dist });
            }
            let id = elements.len() as u32;
            elements.push(BallVertex { repr: repr.clone(), distance: dist + 1, word: next_word });
            index.insert(repr, id);
            queue.push_back(id);
        }
    }

    // induced edges: positive-letter orientation only, scanned in vertex
    // order for determinism
    let mut edges: Vec<BallEdge> = Vec::new();
    let mut edge_index: HashMap<(u32, Letter), u32> = HashMap::new();
    let mut reverse_index: HashMap<(u32, Letter), u32> = HashMap::new();
    for v in 0..elements.len() as u32 {
        for g in 1..=k {
            let next_word = elements[v as usize].word.concat(&Word::from_letters(&[g])?);
            let repr = model.normal_form(&next_word)?;
            if let Some(&w) = index.get(&repr) {
                let e = edges.len() as u32;
                edges.push(BallEdge { src: v, letter: g, dst: w });
                edge_index.insert((v, g), e);
                reverse_index.insert((w, g), v);
            }
        }
    }

    let mut ball = CayleyBall {
        radius,
        elements,
        edges,
        two_cells: Vec::new(),
        index,
        edge_index,
        reverse_index,
    };
    attach_two_cells(model, &mut ball)?;
    Ok(ball)
}

/// Attach every relator cell whose boundary walk stays inside the ball.
/// A geometric cell admits one spelling per boundary corner (rotating
/// the relator); the canonical spelling starts at the smallest corner
/// id, so each cell is recorded exactly once.
fn attach_two_cells(model: &GroupModel, ball: &mut CayleyBall) -> Result<()> {
    let relators = model.presentation().relators().to_vec();
    let mut seen: BTreeSet<(usize, Vec<u32>)> = BTreeSet::new();
    let mut cells = Vec::new();
    for base in 0..ball.elements.len() as u32 {
        'rel: for (t, r) in relators.iter().enumerate() {
            let mut corners = Vec::with_capacity(r.len());
            let mut at = base;
            for &l in r.letters() {
                corners.push(at);
                match ball.step(at, l) {
                    Some(next) => at = next,
                    None => continue 'rel,
                }
            }
            if at != base {
                return Err(Error::ModelEvaluation(format!(
                    "relator {t} does not close up at vertex {base}"
                )));
            }
            let mut key = corners.clone();
            key.sort_unstable();
            if !seen.insert((t, key)) {
                continue;
            }
            // canonical base: smallest corner id, earliest rotation on ties
            let (shift, _) = corners
                .iter()
                .enumerate()
                .min_by_key(|&(i, &c)| (c, i))
                .expect("relators are nonempty");
            let rot = r.rotate(shift);
            let canon_base = corners[shift];
            let mut canon_corners = Vec::with_capacity(r.len());
            let mut boundary = Vec::with_capacity(r.len());
            let mut at = canon_base;
            for &l in rot.letters() {
                canon_corners.push(at);
                let next = ball.step(at, l).expect("cell boundary stays in ball");
                let (e, sign) = ball.edge_of(at, l, next).expect("edge exists");
                boundary.push((e, sign));
                at = next;
            }
            cells.push(BallTwoCell { base: canon_base, relator: t, corners: canon_corners, boundary });
        }
    }
    ball.two_cells = cells;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GroupModel;

    #[test]
    fn z2_ball_counts_match_lattice_closed_form() {
        let m = GroupModel::free_abelian(2);
        for r in 0..=5usize {
            let ball = cayley_ball(&m, r).unwrap();
            assert_eq!(ball.elements.len(), 2 * r * r + 2 * r + 1, "radius {r}");
        }
    }

    #[test]
    fn z3_ball_counts_match_independent_lattice_scan() {
        let m = GroupModel::free_abelian(3);
        for r in 0..=3i64 {
            let mut count = 0usize;
            for x in -r..=r {
                for y in -r..=r {
                    for z in -r..=r {
                        if x.abs() + y.abs() + z.abs() <= r {
                            count += 1;
                        }
                    }
                }
            }
            let ball = cayley_ball(&m, r as usize).unwrap();
            assert_eq!(ball.elements.len(), count, "radius {r}");
        }
    }

    #[test]
    fn free_group_ball_is_a_tree() {
        let m = GroupModel::free(2);
        let ball = cayley_ball(&m, 2).unwrap();
        assert_eq!(ball.elements.len(), 17); // 1 + 4 + 12
        assert_eq!(ball.edges.len(), 16); // tree: n - 1 edges
        assert!(ball.two_cells.is_empty());
    }

    #[test]
    fn surface_ball_counts() {
        let m = GroupModel::surface_genus2();
        let expect = [1usize, 9, 65, 457];
        for (r, want) in expect.iter().enumerate() {
            let ball = cayley_ball(&m, r).unwrap();
            assert_eq!(ball.elements.len(), *want, "radius {r}");
        }
    }

    #[test]
    fn z2_two_cells_match_independent_square_scan() {
        let m = GroupModel::free_abelian(2);
        for r in 1..=4i64 {
            let ball = cayley_ball(&m, r as usize).unwrap();
            let mut count = 0usize;
            for x in -r - 1..=r {
                for y in -r - 1..=r {
                    let corners =
                        [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)];
                    if corners.iter().all(|&(a, b)| a.abs() + b.abs() <= r) {
                        count += 1;
                    }
                }
            }
            assert_eq!(ball.two_cells.len(), count, "radius {r}");
        }
    }

    #[test]
    fn cell_boundaries_close_up() {
        let m = GroupModel::free_abelian(2);
        let ball = cayley_ball(&m, 3).unwrap();
        assert!(!ball.two_cells.is_empty());
        for cell in &ball.two_cells {
            assert_eq!(cell.corners.len(), 4);
            assert_eq!(cell.boundary.len(), 4);
            // the signed sum of boundary edges has zero vertex boundary
            let mut delta: HashMap<u32, i64> = HashMap::new();
            for &(e, sign) in &cell.boundary {
                let edge = ball.edges[e as usize];
                *delta.entry(edge.dst).or_default() += sign as i64;
                *delta.entry(edge.src).or_default() -= sign as i64;
            }
            assert!(delta.values().all(|&v| v == 0), "cell at {} leaks", cell.base);
            assert_eq!(cell.base, *cell.corners.iter().min().unwrap());
        }
    }

    #[test]
    fn surface_ball_carries_the_base_octagon() {
        let m = GroupModel::surface_genus2();
        let ball = cayley_ball(&m, 4).unwrap();
        assert!(!ball.two_cells.is_empty());
        for cell in &ball.two_cells {
            assert_eq!(cell.corners.len(), 8);
            let distinct: BTreeSet<u32> = cell.corners.iter().copied().collect();
            assert_eq!(distinct.len(), 8, "octagon corners are distinct");
        }
        // eight octagons meet at each tiling vertex, but only those with
        // every corner inside distance 4 are attached here
        let through_origin =
            ball.two_cells.iter().filter(|c| c.corners.contains(&0)).count();
        assert!(through_origin >= 1);
    }

    #[test]
    fn walk_oracle_agrees_with_nullity() {
        let m = GroupModel::free_abelian(2);
        let ball = cayley_ball(&m, 12).unwrap();
        for text in ["abAB", "aabbAABB", "abba", "aA", "abcABC"] {
            let Ok(w) = Word::parse(text) else { continue };
            if w.max_generator() > 2 {
                continue;
            }
            let is_null = m.is_null(&w).unwrap();
            let end = ball.walk_from_origin(&w).unwrap();
            assert_eq!(is_null, end == 0, "word {text}");
        }
    }

    #[test]
    fn budget_error_reports_partial_radius() {
        let m = GroupModel::free_abelian(2);
        match cayley_ball_with_budget(&m, 6, 10) {
            Err(Error::BallBudget { budget: 10, radius_reached }) => {
                assert!(radius_reached < 6)
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
