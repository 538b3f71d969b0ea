//! Finite presentations and the small-cancellation reducer.
//!
//! Relators are stored cyclically reduced. `dehn_reduce` implements the
//! classical greedy algorithm: while the word contains more than half of
//! some cyclic rotation of a relator or its inverse, replace that
//! subword by the inverse of the complement, which is strictly shorter.
//! For C'(1/6) presentations the algorithm reaches the empty word
//! exactly on null words, and each replacement step corresponds to one
//! disc cell, so the step count bounds the filling area from above.

use crate::error::{Error, Result};
use crate::word::{free_reduce, Letter, Word};

#[derive(Clone, Debug)]
pub struct Presentation {
    generator_count: usize,
    relators: Vec<Word>,
    /// All distinct cyclic rotations of every relator and of its inverse.
    rotation_table: Vec<Word>,
    max_piece: usize,
}

impl Presentation {
    pub fn new(generator_count: usize, relators: Vec<Word>) -> Result<Self> {
        if generator_count == 0 || generator_count > 26 {
            return Err(Error::PresentationParse(format!(
                "generator count {generator_count} outside 1..=26"
            )));
        }
        let mut reduced = Vec::with_capacity(relators.len());
        for (i, r) in relators.into_iter().enumerate() {
            let r = r.cyclically_reduced();
            if r.is_empty() {
                return Err(Error::EmptyRelator(i));
            }
            if r.max_generator() > generator_count {
                return Err(Error::InvalidGenerator(r.max_generator() as i32, generator_count));
            }
            reduced.push(r);
        }
        let rotation_table = rotation_closure(&reduced);
        let max_piece = max_piece_length(&rotation_table);
        Ok(Presentation { generator_count, relators: reduced, rotation_table, max_piece })
    }

    /// Text format:
    /// ```text
    /// gens: a b
    /// rels: abAB
    /// ```
    /// Generators must be the first `n` lowercase letters in order;
    /// relator words may only use declared letters.
    pub fn parse(text: &str) -> Result<Self> {
        let mut gens: Option<usize> = None;
        let mut rels: Vec<Word> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("gens:") {
                let names: Vec<&str> = rest.split_whitespace().collect();
                for (i, name) in names.iter().enumerate() {
                    let expect = ((b'a' + i as u8) as char).to_string();
                    if **name != expect {
                        return Err(Error::PresentationParse(format!(
                            "generator {i} must be named {expect:?}, got {name:?}"
                        )));
                    }
                }
                gens = Some(names.len());
            } else if let Some(rest) = line.strip_prefix("rels:") {
                for tok in rest.split_whitespace() {
                    rels.push(Word::parse(tok)?);
                }
            } else {
                return Err(Error::PresentationParse(format!("unrecognized line {line:?}")));
            }
        }
        let n = gens.ok_or_else(|| Error::PresentationParse("missing gens: line".into()))?;
        for r in &rels {
            if r.max_generator() > n {
                return Err(Error::InvalidGenerator(r.max_generator() as i32, n));
            }
        }
        Presentation::new(n, rels)
    }

    pub fn generator_count(&self) -> usize {
        self.generator_count
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn max_relator_length(&self) -> usize {
        self.relators.iter().map(Word::len).max().unwrap_or(0)
    }

    pub fn min_relator_length(&self) -> usize {
        self.relators.iter().map(Word::len).min().unwrap_or(0)
    }

    /// Distinct cyclic rotations of all relators and their inverses: the
    /// words that a single disc cell can contribute at any position.
    pub fn relator_rotations(&self) -> &[Word] {
        &self.rotation_table
    }

    pub fn validate_word(&self, w: &Word) -> Result<()> {
        let m = w.max_generator();
        if m > self.generator_count {
            return Err(Error::InvalidGenerator(m as i32, self.generator_count));
        }
        Ok(())
    }

    /// Longest common subword of two distinct entries of the rotation
    /// table, the classical "piece" length.
    pub fn max_piece(&self) -> usize {
        self.max_piece
    }

    /// C'(1/6): every piece is shorter than one sixth of the shortest
    /// relator. This is the hypothesis under which `dehn_reduce` decides
    /// the word problem.
    pub fn is_sixth_small_cancellation(&self) -> bool {
        !self.relators.is_empty() && 6 * self.max_piece < self.min_relator_length()
    }

    /// Greedy relator-majority reduction. Each step finds the leftmost
    /// (then longest) subword that covers more than half of a rotation
    /// of some relator or inverse relator and swaps it for the shorter
    /// complement. Returns the fixed point and the step count.
    pub fn dehn_reduce(&self, w: &Word) -> Result<DehnReduction> {
        if !self.is_sixth_small_cancellation() {
            return Err(Error::NotSmallCancellation {
                max_piece: self.max_piece,
                min_relator: self.min_relator_length(),
            });
        }
        self.validate_word(w)?;
        let mut cur = w.clone();
        let mut steps = 0usize;
        'outer: loop {
            let letters = cur.letters();
            let n = letters.len();
            if n == 0 {
                break;
            }
            // leftmost start position, then longest match wins
            for start in 0..n {
                let mut best: Option<(usize, &Word, usize)> = None; // (match len, rotation, rot idx)
                for rot in &self.rotation_table {
                    let half = rot.len() / 2;
                    let max_take = rot.len().min(n - start);
                    let mut take = 0;
                    while take < max_take && letters[start + take] == rot.letters()[take] {
                        take += 1;
                    }
                    if take > half && best.map_or(true, |(l, _, _)| take > l) {
                        best = Some((take, rot, 0));
                    }
                }
                if let Some((take, rot, _)) = best {
                    // rot = s t with s the matched prefix; replace s by t^-1
                    let complement =
                        Word::from_letters(&rot.letters()[take..]).expect("tail of reduced word");
                    let mut raw: Vec<Letter> = Vec::with_capacity(n);
                    raw.extend_from_slice(&letters[..start]);
                    raw.extend_from_slice(complement.inverse().letters());
                    raw.extend_from_slice(&letters[start + take..]);
                    cur = Word::from_letters(&free_reduce(&raw)).expect("reduced");
                    steps += 1;
                    continue 'outer;
                }
            }
            break;
        }
        Ok(DehnReduction { word: cur, steps })
    }
}

/// Result of `dehn_reduce`: the irreducible word and how many relator
/// replacement steps were taken (an upper bound for the filling area of
/// a null word).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DehnReduction {
    pub word: Word,
    pub steps: usize,
}

fn rotation_closure(relators: &[Word]) -> Vec<Word> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for r in relators {
        for base in [r.clone(), r.inverse()] {
            for k in 0..base.len().max(1) {
                let rot = base.rotate(k);
                if seen.insert(rot.clone()) {
                    out.push(rot);
                }
            }
        }
    }
    out
}

fn max_piece_length(rotations: &[Word]) -> usize {
    // A piece is a common prefix of two distinct rotation-table entries:
    // every common subword occurrence extends to such a prefix pair.
    let mut best = 0usize;
    for (i, u) in rotations.iter().enumerate() {
        for v in rotations.iter().skip(i + 1) {
            let mut k = 0usize;
            while k < u.len() && k < v.len() && u.letters()[k] == v.letters()[k] {
                k += 1;
            }
            best = best.max(k);
        }
    }
    best
}

/// The standard presentations used across the test suites.
pub fn presentation_zk(rank: usize) -> Presentation {
    let mut rels = Vec::new();
    for i in 1..=rank as i16 {
        for j in (i + 1)..=rank as i16 {
            rels.push(Word::from_letters(&[i, j, -i, -j]).unwrap());
        }
    }
    Presentation::new(rank, rels).unwrap()
}

pub fn presentation_free(rank: usize) -> Presentation {
    Presentation::new(rank, Vec::new()).unwrap()
}

pub fn presentation_surface_genus2() -> Presentation {
    Presentation::new(4, vec![Word::parse("abABcdCD").unwrap()]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_text_format() {
        let p = Presentation::parse("gens: a b\nrels: abAB\n").unwrap();
        assert_eq!(p.generator_count(), 2);
        assert_eq!(p.relators().len(), 1);
        assert_eq!(p.relators()[0].to_string(), "abAB");
    }

    #[test]
    fn rejects_undeclared_letters() {
        assert!(Presentation::parse("gens: a b\nrels: abc").is_err());
        assert!(Presentation::parse("rels: ab").is_err());
        assert!(Presentation::parse("gens: a b\nrels: aA").is_err());
    }

    #[test]
    fn rotation_table_of_commutator() {
        let p = presentation_zk(2);
        // 4 rotations of abAB plus 4 of its inverse, all distinct
        assert_eq!(p.relator_rotations().len(), 8);
    }

    #[test]
    fn surface_presentation_is_small_cancellation_and_grid_is_not() {
        let surf = presentation_surface_genus2();
        assert_eq!(surf.max_piece(), 1);
        assert!(surf.is_sixth_small_cancellation());
        let grid = presentation_zk(2);
        assert!(!grid.is_sixth_small_cancellation());
        assert!(grid.dehn_reduce(&Word::parse("abAB").unwrap()).is_err());
    }

    #[test]
    fn dehn_reduce_kills_relator_and_fixes_irreducible() {
        let p = presentation_surface_genus2();
        let r = p.dehn_reduce(&Word::parse("abABcdCD").unwrap()).unwrap();
        assert!(r.word.is_empty());
        assert_eq!(r.steps, 1);
        let fixed = p.dehn_reduce(&Word::parse("a").unwrap()).unwrap();
        assert_eq!(fixed.word.to_string(), "a");
        assert_eq!(fixed.steps, 0);
    }

    #[test]
    fn dehn_reduce_kills_conjugates_of_relator() {
        let p = presentation_surface_genus2();
        let r = Word::parse("abABcdCD").unwrap();
        for u in ["c", "dA", "bca", "DbCa", "abcda"] {
            let u = Word::parse(u).unwrap();
            let w = r.conjugate_by(&u);
            let res = p.dehn_reduce(&w).unwrap();
            assert!(res.word.is_empty(), "conjugate by {u} did not reduce");
            assert!(res.steps <= w.len());
        }
    }

    #[test]
    fn dehn_step_count_shortens_each_time() {
        let p = presentation_surface_genus2();
        let r = Word::parse("abABcdCD").unwrap();
        let w = r.conjugate_by(&Word::parse("ba").unwrap()).concat(&r.rotate(3));
        let res = p.dehn_reduce(&w).unwrap();
        assert!(res.word.is_empty());
        assert!(res.steps <= w.len());
    }
}
