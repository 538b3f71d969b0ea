//! Exact L1-minimal fillings of cellular 1-cycles in finite
//! 2-complexes.
//!
//! The filling norm of a cycle y is min Σ|x_c| over real 2-chains with
//! ∂₂x = y. Every patch this lab builds (lattice balls, hyperbolic
//! tiling balls, triangulated discs) has trivial second homology, so
//! ∂₂ is injective and the filling — when one exists — is unique; a
//! fraction-free elimination finds it and the norm is just its L1
//! size. For rank-deficient complexes the exact two-phase simplex
//! below solves the general linear program over rationals, so results
//! remain exact integers whenever the acceptance assertions need them.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::cayley::CayleyBall;
use crate::error::{Error, Result};
use crate::filling::CellularTwoChain;
use crate::word::Word;

/// Integer 1-chain keyed by edge id; cycles have zero vertex boundary.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CellularOneCycle {
    pub coefficients: BTreeMap<u32, i64>,
}

impl CellularOneCycle {
    pub fn add(&mut self, edge: u32, mult: i64) {
        let slot = self.coefficients.entry(edge).or_default();
        *slot += mult;
        if *slot == 0 {
            self.coefficients.remove(&edge);
        }
    }

    pub fn negated(&self) -> Self {
        CellularOneCycle {
            coefficients: self.coefficients.iter().map(|(&e, &c)| (e, -c)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Edge/2-cell incidence view of a finite 2-complex: everything the
/// filling LP needs, independent of where the complex came from.
#[derive(Clone, Debug)]
pub struct TwoComplexView {
    pub edge_count: usize,
    /// Boundary of each 2-cell as (edge id, ±1) traversals.
    pub cell_boundaries: Vec<Vec<(u32, i8)>>,
}

impl TwoComplexView {
    pub fn from_ball(ball: &CayleyBall) -> Self {
        TwoComplexView {
            edge_count: ball.edges.len(),
            cell_boundaries: ball.two_cells.iter().map(|c| c.boundary.clone()).collect(),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cell_boundaries.len()
    }

    /// ∂₂ of an integer 2-chain.
    pub fn boundary(&self, chain: &CellularTwoChain) -> CellularOneCycle {
        let mut out = CellularOneCycle::default();
        for (&cell, &coeff) in &chain.coefficients {
            for &(edge, sign) in &self.cell_boundaries[cell as usize] {
                out.add(edge, coeff * sign as i64);
            }
        }
        out
    }
}

/// Trace a null word from the ball's origin and collect its edge cycle.
pub fn cycle_of_word(ball: &CayleyBall, w: &Word) -> Result<CellularOneCycle> {
    let mut out = CellularOneCycle::default();
    let mut at = 0u32;
    for &l in w.letters() {
        let next = ball
            .step(at, l)
            .ok_or_else(|| Error::NotABoundary(format!("walk leaves the ball at vertex {at}")))?;
        let (edge, sign) =
            ball.edge_of(at, l, next).expect("step implies the edge exists");
        out.add(edge, sign as i64);
        at = next;
    }
    if at != 0 {
        return Err(Error::NotABoundary("open path: the word is not a cycle".into()));
    }
    Ok(out)
}

/// Exact filling of a cycle: the minimizing rational 2-chain, its L1
/// norm, and whether the optimum is integral / the unique filling.
#[derive(Clone, Debug)]
pub struct FillingNormResult {
    pub norm: BigRational,
    pub coefficients: BTreeMap<u32, BigRational>,
    pub integral: bool,
    pub unique: bool,
}

impl FillingNormResult {
    pub fn to_integer_chain(&self) -> Option<CellularTwoChain> {
        if !self.integral {
            return None;
        }
        let mut chain = CellularTwoChain::default();
        for (&cell, coeff) in &self.coefficients {
            let n: BigInt = coeff.to_integer();
            let as_i64 = i64::try_from(&n).ok()?;
            chain.set(cell, as_i64);
        }
        Some(chain)
    }
}

pub fn filling_norm(y: &CellularOneCycle, complex: &TwoComplexView) -> Result<FillingNormResult> {
    let m = complex.edge_count;
    let n = complex.cell_count();
    for &edge in y.coefficients.keys() {
        if edge as usize >= m {
            return Err(Error::NotABoundary(format!("cycle uses unknown edge {edge}")));
        }
    }
    // dense incidence: rows = edges, cols = cells
    let mut b = vec![vec![0i64; n]; m];
    for (c, boundary) in complex.cell_boundaries.iter().enumerate() {
        for &(edge, sign) in boundary {
            b[edge as usize][c] += sign as i64;
        }
    }
    let mut rhs = vec![0i64; m];
    for (&edge, &coeff) in &y.coefficients {
        rhs[edge as usize] = coeff;
    }

    if let Some(solution) = solve_unique(&b, &rhs)? {
        let norm = solution.iter().map(|v| v.abs()).fold(BigRational::zero(), |a, b| a + b);
        let integral = solution.iter().all(|v| v.is_integer());
        let coefficients = solution
            .into_iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(c, v)| (c as u32, v))
            .collect();
        return Ok(FillingNormResult { norm, coefficients, integral, unique: true });
    }

    let solution = simplex_min_l1(&b, &rhs)?;
    let norm = solution.iter().map(|v| v.abs()).fold(BigRational::zero(), |a, b| a + b);
    let integral = solution.iter().all(|v| v.is_integer());
    let coefficients = solution
        .into_iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(c, v)| (c as u32, v))
        .collect();
    Ok(FillingNormResult { norm, coefficients, integral, unique: false })
}

/// Convenience: norm of the cycle a null word traces in a Cayley ball.
pub fn filling_norm_of_word(ball: &CayleyBall, w: &Word) -> Result<FillingNormResult> {
    let y = cycle_of_word(ball, w)?;
    filling_norm(&y, &TwoComplexView::from_ball(ball))
}

/// Fraction-free (Bareiss) elimination on [B | y]. Returns the unique
/// solution when B has full column rank and the system is consistent;
/// `Ok(None)` when the rank is deficient (caller falls back to the LP);
/// `Err(Infeasible)` when full rank but inconsistent (no filling).
fn solve_unique(b: &[Vec<i64>], rhs: &[i64]) -> Result<Option<Vec<BigRational>>> {
    let m = b.len();
    let n = if m > 0 { b[0].len() } else { 0 };
    if n == 0 {
        return if rhs.iter().all(|&v| v == 0) {
            Ok(Some(Vec::new()))
        } else {
            Err(Error::Infeasible("cycle is nonzero but the complex has no 2-cells".into()))
        };
    }
    let mut a: Vec<Vec<BigInt>> = (0..m)
        .map(|i| {
            let mut row: Vec<BigInt> = b[i].iter().map(|&v| BigInt::from(v)).collect();
            row.push(BigInt::from(rhs[i]));
            row
        })
        .collect();
    let cols = n + 1;
    let mut pivot_rows: Vec<usize> = Vec::new(); // pivot row of column k
    let mut prev = BigInt::one();
    let mut row = 0usize;
    for col in 0..n {
        let Some(p) = (row..m).find(|&r| !a[r][col].is_zero()) else {
            return Ok(None); // rank deficient: no pivot in this column
        };
        a.swap(row, p);
        for r in 0..m {
            if r == row {
                continue;
            }
            // Bareiss step keeps every entry an integer minor
            for c in 0..cols {
                if c == col {
                    continue;
                }
                let num = &a[row][col] * &a[r][c] - &a[r][col] * &a[row][c];
                a[r][c] = num / &prev;
            }
            a[r][col] = BigInt::zero();
        }
        prev = a[row][col].clone();
        pivot_rows.push(row);
        row += 1;
    }
    // zero rows must have zero rhs, else y is not a boundary
    for r in row..m {
        if !a[r][n].is_zero() {
            return Err(Error::Infeasible(
                "cycle does not bound in this patch; enlarge the patch".into(),
            ));
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for (col, &r) in pivot_rows.iter().enumerate() {
        x[col] = BigRational::new(a[r][n].clone(), a[r][col].clone());
    }
    Ok(Some(x))
}

/// Exact L1 minimization: min Σ|x| subject to Bx = y, via the split
/// x = u − v, u,v ≥ 0 and a two-phase primal simplex with Bland's rule
/// over BigRational. Small and slow, but exact and terminating; only
/// rank-deficient complexes reach it.
fn simplex_min_l1(b: &[Vec<i64>], rhs: &[i64]) -> Result<Vec<BigRational>> {
    let m = b.len();
    let n = if m > 0 { b[0].len() } else { 0 };
    let vars = 2 * n; // u then v
    let total = vars + m; // plus artificials
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(m);
    for i in 0..m {
        let flip = rhs[i] < 0;
        let s = if flip { -1i64 } else { 1 };
        let mut row: Vec<BigRational> = Vec::with_capacity(total + 1);
        for j in 0..n {
            row.push(BigRational::from(BigInt::from(s * b[i][j])));
        }
        for j in 0..n {
            row.push(BigRational::from(BigInt::from(-s * b[i][j])));
        }
        for j in 0..m {
            row.push(if j == i { BigRational::one() } else { BigRational::zero() });
        }
        row.push(BigRational::from(BigInt::from(s * rhs[i])));
        t.push(row);
    }
    let mut basis: Vec<usize> = (vars..total).collect();

    // phase 1: minimize the artificial sum
    let mut cost1 = vec![BigRational::zero(); total];
    for c in cost1.iter_mut().take(total).skip(vars) {
        *c = BigRational::one();
    }
    let opt1 = run_simplex(&mut t, &mut basis, &cost1, total);
    if !opt1.is_zero() {
        return Err(Error::Infeasible(
            "cycle does not bound in this patch; enlarge the patch".into(),
        ));
    }
    // pivot lingering artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= vars {
            if let Some(col) = (0..vars).find(|&c| !t[i][c].is_zero()) {
                pivot(&mut t, &mut basis, i, col);
            }
        }
    }

    // phase 2: minimize Σu + Σv, artificials pinned at zero
    let mut cost2 = vec![BigRational::zero(); total];
    for c in cost2.iter_mut().take(vars) {
        *c = BigRational::one();
    }
    run_simplex(&mut t, &mut basis, &cost2, vars);

    let mut x = vec![BigRational::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        let val = t[i].last().unwrap().clone();
        if bv < n {
            x[bv] += val;
        } else if bv < 2 * n {
            x[bv - n] -= val;
        }
    }
    Ok(x)
}

/// Primal simplex with Bland's anti-cycling rule; returns the optimal
/// objective value. Only columns < `active_cols` may enter the basis.
fn run_simplex(
    t: &mut [Vec<BigRational>],
    basis: &mut [usize],
    cost: &[BigRational],
    active_cols: usize,
) -> BigRational {
    let m = t.len();
    loop {
        // reduced costs: c_j - c_B · B⁻¹A_j (tableau rows are already B⁻¹A)
        let mut entering = None;
        for j in 0..active_cols {
            if basis.contains(&j) {
                continue;
            }
            let mut red = cost[j].clone();
            for i in 0..m {
                if !t[i][j].is_zero() {
                    red -= &cost[basis[i]] * &t[i][j];
                }
            }
            if red.is_negative() {
                entering = Some(j);
                break; // Bland: first improving index
            }
        }
        let Some(col) = entering else { break };
        let mut leave: Option<(usize, BigRational)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[col].is_positive() {
                let ratio = row.last().unwrap() / &row[col];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && basis[i] < basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((row, _)) = leave else { break }; // unbounded: cannot happen for L1
        pivot(t, basis, row, col);
    }
    let mut obj = BigRational::zero();
    for (i, &bv) in basis.iter().enumerate() {
        obj += &cost[bv] * t[i].last().unwrap();
    }
    obj
}

fn pivot(t: &mut [Vec<BigRational>], basis: &mut [usize], row: usize, col: usize) {
    let p = t[row][col].clone();
    for v in t[row].iter_mut() {
        *v /= &p;
    }
    for i in 0..t.len() {
        if i == row || t[i][col].is_zero() {
            continue;
        }
        let f = t[i][col].clone();
        for j in 0..t[i].len() {
            let delta = &f * &t[row][j];
            t[i][j] -= delta;
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::cayley_ball;
    use crate::filling::{lattice_winding_norm, vk_area, Area};
    use crate::model::GroupModel;
    use proptest::prelude::*;

    fn ball_z2(r: usize) -> CayleyBall {
        cayley_ball(&GroupModel::free_abelian(2), r).unwrap()
    }

    #[test]
    fn single_cell_boundary_has_norm_one() {
        let ball = ball_z2(2);
        let view = TwoComplexView::from_ball(&ball);
        let mut chain = CellularTwoChain::default();
        chain.set(0, 1);
        let y = view.boundary(&chain);
        let res = filling_norm(&y, &view).unwrap();
        assert_eq!(res.norm, BigRational::from(BigInt::from(1)));
        assert!(res.integral);
        assert!(res.unique);
        assert_eq!(res.to_integer_chain().unwrap(), chain);
    }

    #[test]
    fn square_commutators_fill_to_exact_squares() {
        for s in 1..=3usize {
            let ball = ball_z2(2 * s);
            let w = Word::parse(&format!(
                "{}{}{}{}",
                "a".repeat(s),
                "b".repeat(s),
                "A".repeat(s),
                "B".repeat(s)
            ))
            .unwrap();
            let res = filling_norm_of_word(&ball, &w).unwrap();
            assert_eq!(res.norm, BigRational::from(BigInt::from((s * s) as i64)));
            assert!(res.integral, "s={s}");
            assert!(res.unique, "lattice balls have injective boundary");
        }
    }

    #[test]
    fn orientation_reversal_preserves_norm() {
        let ball = ball_z2(4);
        let w = Word::parse("aabbAABB").unwrap();
        let y = cycle_of_word(&ball, &w).unwrap();
        let view = TwoComplexView::from_ball(&ball);
        let a = filling_norm(&y, &view).unwrap();
        let b = filling_norm(&y.negated(), &view).unwrap();
        assert_eq!(a.norm, b.norm);
    }

    #[test]
    fn zero_cycle_has_zero_norm() {
        let ball = ball_z2(2);
        let view = TwoComplexView::from_ball(&ball);
        let res = filling_norm(&CellularOneCycle::default(), &view).unwrap();
        assert!(res.norm.is_zero());
        assert!(res.integral);
    }

    #[test]
    fn cycle_without_cells_is_infeasible() {
        // a digon 1-complex: two parallel edges, no 2-cells
        let view = TwoComplexView { edge_count: 2, cell_boundaries: Vec::new() };
        let mut y = CellularOneCycle::default();
        y.add(0, 1);
        y.add(1, -1);
        match filling_norm(&y, &view) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_cells_route_through_the_simplex() {
        // two 2-cells glued to the same square boundary: rank deficient,
        // optimum is any split; the LP must still report norm 1
        let boundary = vec![(0u32, 1i8), (1, 1), (2, 1), (3, 1)];
        let view =
            TwoComplexView { edge_count: 4, cell_boundaries: vec![boundary.clone(), boundary] };
        let mut y = CellularOneCycle::default();
        for e in 0..4 {
            y.add(e, 1);
        }
        let res = filling_norm(&y, &view).unwrap();
        assert_eq!(res.norm, BigRational::from(BigInt::from(1)));
        assert!(!res.unique);
        assert!(res.integral);
    }

    #[test]
    fn opposite_duplicate_cell_needs_negative_coefficient() {
        // same square, second cell glued with reversed orientation
        let fwd = vec![(0u32, 1i8), (1, 1), (2, 1), (3, 1)];
        let rev = vec![(3u32, -1i8), (2, -1), (1, -1), (0, -1)];
        let view = TwoComplexView { edge_count: 4, cell_boundaries: vec![fwd, rev] };
        let mut y = CellularOneCycle::default();
        for e in 0..4 {
            y.add(e, 1);
        }
        let res = filling_norm(&y, &view).unwrap();
        assert_eq!(res.norm, BigRational::from(BigInt::from(1)));
    }

    #[test]
    fn surface_relator_cycle_fills_with_one_octagon() {
        let m = GroupModel::surface_genus2();
        let ball = cayley_ball(&m, 4).unwrap();
        let w = Word::parse("abABcdCD").unwrap();
        let res = filling_norm_of_word(&ball, &w).unwrap();
        assert_eq!(res.norm, BigRational::from(BigInt::from(1)));
        assert!(res.integral);
        assert!(res.unique);
    }

    #[test]
    fn open_path_is_rejected() {
        let ball = ball_z2(3);
        match cycle_of_word(&ball, &Word::parse("ab").unwrap()) {
            Err(Error::NotABoundary(_)) => {}
            other => panic!("expected NotABoundary, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn norm_is_sandwiched_by_winding_and_area(
            raw in prop::collection::vec((1i16..=2, prop::bool::ANY), 0..8),
        ) {
            let letters: Vec<i16> =
                raw.into_iter().map(|(g, i)| if i { -g } else { g }).collect();
            let w = Word::from_letters(&letters).unwrap();
            prop_assume!(w.exponent_vector(2) == vec![0, 0]);
            let ball = ball_z2(5);
            let res = filling_norm_of_word(&ball, &w).unwrap();
            let winding = lattice_winding_norm(&w);
            prop_assert_eq!(
                res.norm.clone(),
                BigRational::from(BigInt::from(winding)),
                "norm equals the winding filling exactly"
            );
            let p = GroupModel::free_abelian(2);
            let area = match vk_area(&w, p.presentation(), 40).unwrap().area {
                Area::Exact(a) => a,
                Area::Exceeded(_) => return Err(TestCaseError::fail("budget")),
            };
            prop_assert!(res.norm <= BigRational::from(BigInt::from(area)));
        }
    }
}
