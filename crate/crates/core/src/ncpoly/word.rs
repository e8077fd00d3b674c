use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A monomial in the free algebra: a finite sequence of generator indices
/// (0-based). The empty word is the unit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn unit() -> Self {
        Word(Vec::new())
    }

    pub fn letter(i: usize) -> Self {
        Word(vec![letter_byte(i)])
    }

    pub fn from_letters<I: IntoIterator<Item = usize>>(letters: I) -> Self {
        Word(letters.into_iter().map(letter_byte).collect())
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        Word(bytes.to_vec())
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_letter(&self) -> Option<usize> {
        self.0.iter().max().map(|&b| b as usize)
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn concat3(a: &Word, b: &Word, c: &Word) -> Word {
        let mut v = Vec::with_capacity(a.0.len() + b.0.len() + c.0.len());
        v.extend_from_slice(&a.0);
        v.extend_from_slice(&b.0);
        v.extend_from_slice(&c.0);
        Word(v)
    }

    /// Every split `self = u X_i v`, yielding `(u, v)`.
    pub fn splits_at(&self, i: usize) -> impl Iterator<Item = (Word, Word)> + '_ {
        let target = letter_byte(i);
        self.0
            .iter()
            .enumerate()
            .filter(move |(_, &b)| b == target)
            .map(move |(k, _)| (Word(self.0[..k].to_vec()), Word(self.0[k + 1..].to_vec())))
    }

    /// All words of length exactly `len` over `n` letters, in lexicographic order.
    pub fn all_of_length(n: usize, len: usize) -> Vec<Word> {
        let mut out = vec![Word::unit()];
        for _ in 0..len {
            let mut next = Vec::with_capacity(out.len() * n);
            for w in &out {
                for i in 0..n {
                    let mut v = w.0.clone();
                    v.push(letter_byte(i));
                    next.push(Word(v));
                }
            }
            out = next;
        }
        out
    }

    /// All words of length at most `degree`, graded-lexicographic.
    pub fn all_up_to(n: usize, degree: usize) -> Vec<Word> {
        (0..=degree).flat_map(|k| Word::all_of_length(n, k)).collect()
    }
}

fn letter_byte(i: usize) -> u8 {
    u8::try_from(i).expect("generator index must fit in u8")
}

// Graded order: shorter words first, then lexicographic.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, b) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            write!(f, "X{}", *b as usize + 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_order() {
        let a = Word::from_letters([1]);
        let b = Word::from_letters([0, 0]);
        assert!(Word::unit() < a);
        assert!(a < b);
        assert!(Word::from_letters([0, 1]) < Word::from_letters([1, 0]));
    }

    #[test]
    fn splits_enumerate_occurrences() {
        let w = Word::from_letters([0, 1, 0]);
        let s: Vec<_> = w.splits_at(0).collect();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0], (Word::unit(), Word::from_letters([1, 0])));
        assert_eq!(s[1], (Word::from_letters([0, 1]), Word::unit()));
        assert_eq!(w.splits_at(2).count(), 0);
    }

    #[test]
    fn basis_counts() {
        assert_eq!(Word::all_up_to(2, 4).len(), 31);
        assert_eq!(Word::all_up_to(3, 3).len(), 40);
        assert_eq!(Word::all_up_to(1, 3).len(), 4);
        let b = Word::all_up_to(2, 3);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn display() {
        assert_eq!(Word::unit().to_string(), "1");
        assert_eq!(Word::from_letters([0, 2]).to_string(), "X1*X3");
    }
}
