//! Words over an index alphabet and the shift-space metric
//! `d(α, β) = Σ_n [α_n ≠ β_n] / 3^n`.
//!
//! Infinite words are only ever handled through finite prefixes of a
//! declared depth; the metric between two prefixes is reported as an exact
//! rational interval that contains the distance of every pair of infinite
//! words extending them.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::One;

use crate::error::{Error, Result};
use crate::rational::{inv_pow3, Rational};

/// A finite word; the empty word is λ. Letters are opaque index symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<String>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new<S: Into<String>>(letters: impl IntoIterator<Item = S>) -> Self {
        Self(letters.into_iter().map(Into::into).collect())
    }

    pub fn letters(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, letter: impl Into<String>) {
        self.0.push(letter.into());
    }

    /// `[ω]_n`, the first `n` letters (clamped to the word length).
    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    /// True if `self` is a prefix of `other` (λ is a prefix of everything).
    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("."))
    }
}

/// Literal syntax: letters joined by `.`; the empty string is λ.
impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Ok(Word::empty());
        }
        let letters: Vec<String> = s.split('.').map(str::to_owned).collect();
        if letters.iter().any(String::is_empty) {
            return Err(Error::InvalidArgument(format!(
                "word literal `{s}` has an empty letter"
            )));
        }
        Ok(Word(letters))
    }
}

/// `αβ`.
pub fn concat(a: &Word, b: &Word) -> Word {
    let mut letters = a.0.clone();
    letters.extend(b.0.iter().cloned());
    Word(letters)
}

/// The prefix `[ω]_n` of a conceptual infinite word `ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WordPrefix {
    word: Word,
}

impl WordPrefix {
    pub fn new(word: Word, depth: usize) -> Result<Self> {
        if word.len() != depth {
            return Err(Error::InvalidArgument(format!(
                "prefix `{word}` has length {} but declared depth {depth}",
                word.len()
            )));
        }
        Ok(Self { word })
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn letters(&self) -> &[String] {
        self.word.letters()
    }
}

impl From<Word> for WordPrefix {
    fn from(word: Word) -> Self {
        Self { word }
    }
}

impl fmt::Display for WordPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.word.fmt(f)
    }
}

/// Exact bounds on the shift-space distance between two infinite words with
/// the given prefixes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricBounds {
    pub lower: Rational,
    pub upper: Rational,
}

/// `lower` is the sum over the first `N` positions; `upper` adds the tail
/// bound `Σ_{n>N} 3^-n = 1/(2·3^N)`.
pub fn word_metric(a: &WordPrefix, b: &WordPrefix) -> Result<MetricBounds> {
    let n = check_depths(a, b)?;
    // lower = (Σ_{k mismatched} 3^(N-k)) / 3^N
    let mut numer = BigInt::from(0);
    let mut weight = BigInt::one();
    for k in (0..n).rev() {
        if a.letters()[k] != b.letters()[k] {
            numer += &weight;
        }
        weight *= 3;
    }
    let lower = Rational::new(numer, weight);
    let upper = &lower + tail_bound(n);
    Ok(MetricBounds { lower, upper })
}

/// `1/(2·3^N)`.
pub fn tail_bound(depth: usize) -> Rational {
    inv_pow3(depth) / BigInt::from(2)
}

fn check_depths(a: &WordPrefix, b: &WordPrefix) -> Result<usize> {
    if a.depth() != b.depth() {
        return Err(Error::DepthMismatch(a.depth(), b.depth()));
    }
    Ok(a.depth())
}

/// `F_i(ω) = iω`.
pub fn right_shift(letter: &str, w: &WordPrefix) -> WordPrefix {
    let mut letters = Vec::with_capacity(w.depth() + 1);
    letters.push(letter.to_owned());
    letters.extend(w.letters().iter().cloned());
    WordPrefix {
        word: Word(letters),
    }
}

/// `sup{n ≥ 0 : [α]_n = [β]_n}` for prefixes that differ within their depth.
pub fn first_mismatch(a: &WordPrefix, b: &WordPrefix) -> Result<usize> {
    let n = check_depths(a, b)?;
    a.letters()
        .iter()
        .zip(b.letters())
        .position(|(x, y)| x != y)
        .ok_or(Error::MismatchBeyondDepth(n))
}
