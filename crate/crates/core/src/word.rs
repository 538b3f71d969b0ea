//! Words in a free group on a finite alphabet.
//!
//! A letter is a nonzero signed integer: `+k` is the k-th generator
//! (1-based), `-k` its inverse. The textual form maps generator k to the
//! k-th lowercase letter and its inverse to the uppercase letter, so
//! `abAB` is the commutator of the first two generators. A `Word` is
//! always freely reduced; construction reduces eagerly.

use crate::error::{Error, Result};

pub type Letter = i16;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<Letter>,
}

/// Free reduction of a raw letter sequence: cancel adjacent `x x^-1`
/// pairs until none remain. Stack based, single pass, O(n).
pub fn free_reduce(raw: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(raw.len());
    for &l in raw {
        if let Some(&top) = out.last() {
            if top == -l {
                out.pop();
                continue;
            }
        }
        out.push(l);
    }
    out
}

impl Word {
    pub fn empty() -> Self {
        Word { letters: Vec::new() }
    }

    /// Build a word from raw letters, freely reducing. Rejects the zero
    /// letter; range checking against a generator count is the caller's
    /// concern (see `Presentation::validate_word`).
    pub fn from_letters(raw: &[Letter]) -> Result<Self> {
        if raw.iter().any(|&l| l == 0) {
            return Err(Error::InvalidGenerator(0, 0));
        }
        Ok(Word { letters: free_reduce(raw) })
    }

    /// Parse `aBc` style text. Lowercase = generator, uppercase = inverse.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Vec::with_capacity(text.len());
        for ch in text.chars() {
            if ch.is_whitespace() {
                continue;
            }
            let l = letter_of_char(ch)?;
            raw.push(l);
        }
        Word::from_letters(&raw)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|&l| -l).collect() }
    }

    /// Concatenation followed by free reduction.
    pub fn concat(&self, other: &Word) -> Word {
        let mut raw = Vec::with_capacity(self.len() + other.len());
        raw.extend_from_slice(&self.letters);
        raw.extend_from_slice(&other.letters);
        Word { letters: free_reduce(&raw) }
    }

    pub fn conjugate_by(&self, u: &Word) -> Word {
        u.concat(self).concat(&u.inverse())
    }

    /// Strip matching first/last inverse pairs; the result is cyclically
    /// reduced and conjugate to `self`.
    pub fn cyclically_reduced(&self) -> Word {
        let mut lo = 0usize;
        let mut hi = self.letters.len();
        while hi - lo >= 2 && self.letters[lo] == -self.letters[hi - 1] {
            lo += 1;
            hi -= 1;
        }
        Word { letters: self.letters[lo..hi].to_vec() }
    }

    /// Rotation by `k`: `w[k..] + w[..k]`, freely reduced. For a
    /// cyclically reduced word every rotation is already reduced.
    pub fn rotate(&self, k: usize) -> Word {
        if self.letters.is_empty() {
            return self.clone();
        }
        let k = k % self.letters.len();
        let mut raw = Vec::with_capacity(self.letters.len());
        raw.extend_from_slice(&self.letters[k..]);
        raw.extend_from_slice(&self.letters[..k]);
        Word { letters: free_reduce(&raw) }
    }

    /// Net exponent of each of the first `rank` generators.
    pub fn exponent_vector(&self, rank: usize) -> Vec<i64> {
        let mut v = vec![0i64; rank];
        for &l in &self.letters {
            let idx = (l.unsigned_abs() as usize) - 1;
            if idx < rank {
                v[idx] += if l > 0 { 1 } else { -1 };
            }
        }
        v
    }

    pub fn max_generator(&self) -> usize {
        self.letters.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

pub fn letter_of_char(ch: char) -> Result<Letter> {
    if ch.is_ascii_lowercase() {
        Ok((ch as u8 - b'a') as Letter + 1)
    } else if ch.is_ascii_uppercase() {
        Ok(-(((ch as u8 - b'A') as Letter) + 1))
    } else {
        Err(Error::WordParse(format!("unexpected character {ch:?}")))
    }
}

pub fn char_of_letter(l: Letter) -> char {
    let idx = (l.unsigned_abs() - 1) as u8;
    if l > 0 {
        (b'a' + idx) as char
    } else {
        (b'A' + idx) as char
    }
}

impl serde::Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Word::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &l in &self.letters {
            write!(f, "{}", char_of_letter(l))?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Word({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduce_examples() {
        assert_eq!(Word::parse("aA").unwrap(), Word::empty());
        assert_eq!(Word::parse("abBA").unwrap(), Word::empty());
        assert_eq!(Word::parse("abAB").unwrap().to_string(), "abAB");
        assert_eq!(Word::parse("aabBAc").unwrap().to_string(), "ac");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Word::parse("a b1").is_err());
        assert!(Word::from_letters(&[1, 0, 2]).is_err());
    }

    #[test]
    fn cyclic_reduce_examples() {
        assert_eq!(Word::parse("aBcbA").unwrap().cyclically_reduced().to_string(), "c");
        assert_eq!(Word::parse("aBcCbA").unwrap().cyclically_reduced().to_string(), "");
        assert_eq!(Word::parse("abAB").unwrap().cyclically_reduced().to_string(), "abAB");
        assert_eq!(Word::parse("aba").unwrap().cyclically_reduced().to_string(), "aba");
    }

    #[test]
    fn inverse_and_concat() {
        let w = Word::parse("abC").unwrap();
        assert_eq!(w.inverse().to_string(), "cBA");
        assert_eq!(w.concat(&w.inverse()), Word::empty());
        assert_eq!(Word::parse("ab").unwrap().concat(&Word::parse("Bc").unwrap()).to_string(), "ac");
    }

    fn raw_letters() -> impl Strategy<Value = Vec<Letter>> {
        prop::collection::vec((1i16..=4, prop::bool::ANY).prop_map(|(g, inv)| if inv { -g } else { g }), 0..60)
    }

    proptest! {
        #[test]
        fn reduction_is_idempotent(raw in raw_letters()) {
            let once = free_reduce(&raw);
            let twice = free_reduce(&once);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn reduction_has_no_adjacent_cancellation(raw in raw_letters()) {
            let red = free_reduce(&raw);
            for pair in red.windows(2) {
                prop_assert_ne!(pair[0], -pair[1]);
            }
        }

        #[test]
        fn reduction_preserves_length_parity(raw in raw_letters()) {
            let red = free_reduce(&raw);
            prop_assert_eq!(red.len() % 2, raw.len() % 2);
        }

        #[test]
        fn reduction_preserves_exponents(raw in raw_letters()) {
            let w = Word::from_letters(&raw).unwrap();
            let mut direct = vec![0i64; 4];
            for &l in &raw {
                direct[(l.unsigned_abs() as usize) - 1] += if l > 0 { 1 } else { -1 };
            }
            prop_assert_eq!(w.exponent_vector(4), direct);
        }

        #[test]
        fn double_inverse_is_identity(raw in raw_letters()) {
            let w = Word::from_letters(&raw).unwrap();
            prop_assert_eq!(w.inverse().inverse(), w);
        }

        #[test]
        fn cyclic_reduction_is_fixed_by_rotation_closure(raw in raw_letters()) {
            let w = Word::from_letters(&raw).unwrap().cyclically_reduced();
            if !w.is_empty() {
                // every rotation of a cyclically reduced word keeps its length
                for k in 0..w.len() {
                    prop_assert_eq!(w.rotate(k).len(), w.len());
                }
            }
        }
    }
}
