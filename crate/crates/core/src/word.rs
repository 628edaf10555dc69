//! Words over the alphabet `{1, ..., d}`: concatenation, left/right quotients,
//! transpose and length-lexicographic enumeration.
//!
//! The empty word plays the role of the vacuum `Ω`. Letters are stored as
//! 1-based `u16` values, and a word is the plain letter sequence; the
//! run-length form `i₁^{k₁} ⋯ iₙ^{kₙ}` is computed on demand by [`Word::runs`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("invalid letter token {0:?}")]
    BadToken(String),
    #[error("letter {letter} outside alphabet 1..={d}")]
    LetterOutOfRange { letter: u16, d: usize },
}

/// A letter `i ∈ {1, ..., d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(u16);

impl Letter {
    /// Panics on `0`; letters are 1-based.
    pub fn new(index: u16) -> Self {
        assert!(index >= 1, "letters are 1-based");
        Letter(index)
    }

    pub fn index(self) -> u16 {
        self.0
    }

    /// 0-based position, convenient for array indexing.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Element of the free monoid `[d]^*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<Letter>);

/// Result of a word quotient: either a word or the absorbing `Zero`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Quotient {
    Word(Word),
    Zero,
}

impl Quotient {
    pub fn word(&self) -> Option<&Word> {
        match self {
            Quotient::Word(w) => Some(w),
            Quotient::Zero => None,
        }
    }

    pub fn into_word(self) -> Option<Word> {
        match self {
            Quotient::Word(w) => Some(w),
            Quotient::Zero => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Quotient::Zero)
    }

    /// `self · w⁻¹`, with `Zero` absorbing.
    pub fn right_quotient(&self, w: &Word) -> Quotient {
        match self {
            Quotient::Word(v) => right_quotient(v, w),
            Quotient::Zero => Quotient::Zero,
        }
    }

    /// `w⁻¹ · self`, with `Zero` absorbing.
    pub fn left_quotient(&self, w: &Word) -> Quotient {
        match self {
            Quotient::Word(v) => left_quotient(w, v),
            Quotient::Zero => Quotient::Zero,
        }
    }
}

impl Word {
    /// The empty word `Ω`.
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters<I: IntoIterator<Item = u16>>(letters: I) -> Self {
        Word(letters.into_iter().map(Letter::new).collect())
    }

    pub fn single(letter: Letter) -> Self {
        Word(vec![letter])
    }

    /// `i^n`.
    pub fn power(letter: Letter, n: usize) -> Self {
        Word(vec![letter; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn push(&mut self, letter: Letter) {
        self.0.push(letter);
    }

    /// Largest letter index, or 0 for `Ω`.
    pub fn max_letter(&self) -> u16 {
        self.0.iter().map(|l| l.0).max().unwrap_or(0)
    }

    pub fn check_alphabet(&self, d: usize) -> Result<(), WordError> {
        match self.0.iter().find(|l| l.0 as usize > d) {
            Some(l) => Err(WordError::LetterOutOfRange { letter: l.0, d }),
            None => Ok(()),
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        concat(self, other)
    }

    pub fn transpose(&self) -> Word {
        transpose(self)
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n].to_vec())
    }

    pub fn suffix_from(&self, n: usize) -> Word {
        Word(self.0[n..].to_vec())
    }

    /// Run-length form: `(letter, exponent)` pairs with adjacent letters distinct.
    pub fn runs(&self) -> Vec<(Letter, usize)> {
        let mut out: Vec<(Letter, usize)> = Vec::new();
        for &l in &self.0 {
            match out.last_mut() {
                Some((prev, k)) if *prev == l => *k += 1,
                _ => out.push((l, 1)),
            }
        }
        out
    }

    /// Length-lexicographic comparison key.
    pub fn shortlex_cmp(&self, other: &Word) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Length-lexicographic order.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.shortlex_cmp(other)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for l in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = WordError;

    /// Space-separated decimal letters; the empty (or blank) string is `Ω`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split_whitespace()
            .map(|tok| match tok.parse::<u16>() {
                Ok(v) if v >= 1 => Ok(Letter(v)),
                _ => Err(WordError::BadToken(tok.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn concat(u: &Word, w: &Word) -> Word {
    let mut letters = Vec::with_capacity(u.len() + w.len());
    letters.extend_from_slice(&u.0);
    letters.extend_from_slice(&w.0);
    Word(letters)
}

/// `v w⁻¹`: the word `v'` with `v = v' w`, or `Zero` when `w` is not a suffix of `v`.
pub fn right_quotient(v: &Word, w: &Word) -> Quotient {
    if v.0.ends_with(&w.0) {
        Quotient::Word(Word(v.0[..v.len() - w.len()].to_vec()))
    } else {
        Quotient::Zero
    }
}

/// `w⁻¹ v`: the word `v'` with `v = w v'`, or `Zero` when `w` is not a prefix of `v`.
pub fn left_quotient(w: &Word, v: &Word) -> Quotient {
    if v.0.starts_with(&w.0) {
        Quotient::Word(Word(v.0[w.len()..].to_vec()))
    } else {
        Quotient::Zero
    }
}

pub fn transpose(w: &Word) -> Word {
    Word(w.0.iter().rev().copied().collect())
}

/// Number of words of length at most `max_len` over `d` letters.
pub fn count_words(d: usize, max_len: usize) -> usize {
    (0..=max_len).map(|k| d.pow(k as u32)).sum()
}

/// All words of length `len`, in lexicographic order.
pub fn words_of_length(d: usize, len: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * d);
        for w in &out {
            for i in 1..=d {
                let mut x = w.clone();
                x.push(Letter(i as u16));
                next.push(x);
            }
        }
        out = next;
    }
    out
}

/// All words of length `≤ max_len` in length-lexicographic order.
pub fn enumerate_words(d: usize, max_len: usize) -> Vec<Word> {
    assert!(d >= 1, "alphabet must be non-empty");
    let mut out = Vec::with_capacity(count_words(d, max_len));
    for len in 0..=max_len {
        out.extend(words_of_length(d, len));
    }
    out
}
