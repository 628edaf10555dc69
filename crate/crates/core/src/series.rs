//! Noncommutative power series `Σ α_v X^v` tabulated up to a degree bound.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hankel::{classical_rationality, ClassicalStatus};
use crate::scalar::{parse_pair, q_to_f64, ParseScalarError, Q};
use crate::word::{enumerate_words, Word, WordError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("word of length {len} exceeds degree bound {bound}")]
    DegreeOutOfRange { len: usize, bound: usize },
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("level sums do not decay (fitted ratio {c})")]
    NotDecaying { c: f64 },
    #[error("decay estimate needs degree bound >= 4, got {0}")]
    TooShort(usize),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Scalar(#[from] ParseScalarError),
}

/// Finite tabulation of a series over `[d]`: every stored word has length `≤ max_degree`.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    d: usize,
    max_degree: usize,
    coeffs: BTreeMap<Word, Q>,
}

impl SeriesTable {
    pub fn zero(d: usize, max_degree: usize) -> Self {
        SeriesTable {
            d,
            max_degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// The series with every coefficient equal to one (the Hadamard unit).
    pub fn all_ones(d: usize, max_degree: usize) -> Self {
        let coeffs = enumerate_words(d, max_degree)
            .into_iter()
            .map(|w| (w, Q::from_integer(1.into())))
            .collect();
        SeriesTable {
            d,
            max_degree,
            coeffs,
        }
    }

    pub fn from_terms<I>(d: usize, max_degree: usize, terms: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (Word, Q)>,
    {
        let mut t = SeriesTable::zero(d, max_degree);
        for (w, c) in terms {
            t.set(w, c)?;
        }
        Ok(t)
    }

    /// Builds a table from a coefficient function evaluated on every word `|v| ≤ max_degree`.
    pub fn from_fn(d: usize, max_degree: usize, mut f: impl FnMut(&Word) -> Q) -> Self {
        let mut t = SeriesTable::zero(d, max_degree);
        for w in enumerate_words(d, max_degree) {
            let c = f(&w);
            if !c.is_zero() {
                t.coeffs.insert(w, c);
            }
        }
        t
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn set(&mut self, w: Word, c: Q) -> Result<(), SeriesError> {
        w.check_alphabet(self.d)?;
        if w.len() > self.max_degree {
            return Err(SeriesError::DegreeOutOfRange {
                len: w.len(),
                bound: self.max_degree,
            });
        }
        if c.is_zero() {
            self.coeffs.remove(&w);
        } else {
            self.coeffs.insert(w, c);
        }
        Ok(())
    }

    pub fn coefficient(&self, v: &Word) -> Result<Q, SeriesError> {
        if v.len() > self.max_degree {
            return Err(SeriesError::DegreeOutOfRange {
                len: v.len(),
                bound: self.max_degree,
            });
        }
        Ok(self.coeff(v))
    }

    /// Coefficient without the range check (absent means zero).
    pub fn coeff(&self, v: &Word) -> Q {
        self.coeffs.get(v).cloned().unwrap_or_else(Q::zero)
    }

    /// Non-zero terms in length-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Q)> {
        self.coeffs.iter()
    }

    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    pub fn truncate(&self, max_degree: usize) -> SeriesTable {
        SeriesTable {
            d: self.d,
            max_degree: max_degree.min(self.max_degree),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(w, _)| w.len() <= max_degree)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    /// Pointwise product; the degree bound is the smaller of the two.
    pub fn hadamard(&self, other: &SeriesTable) -> Result<SeriesTable, SeriesError> {
        if self.d != other.d {
            return Err(SeriesError::AlphabetMismatch(self.d, other.d));
        }
        let max_degree = self.max_degree.min(other.max_degree);
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(w, _)| w.len() <= max_degree)
            .filter_map(|(w, a)| other.coeffs.get(w).map(|b| (w.clone(), a * b)))
            .collect();
        Ok(SeriesTable {
            d: self.d,
            max_degree,
            coeffs,
        })
    }

    /// Exact level sums `σ_m = Σ_{|v|=m} α_v²`, `m = 0..=max_degree`.
    pub fn level_square_sums(&self) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.max_degree + 1];
        for (w, c) in &self.coeffs {
            out[w.len()] += c * c;
        }
        out
    }

    /// `ℓ²` norm of each level, in floating point.
    pub fn level_l2_norms(&self) -> Vec<f64> {
        self.level_square_sums()
            .iter()
            .map(|s| q_to_f64(s).sqrt())
            .collect()
    }

    /// Largest `|α_v - β_v|` over the common range, in floating point.
    pub fn max_abs_difference(&self, other: &SeriesTable) -> f64 {
        let bound = self.max_degree.min(other.max_degree);
        self.coeffs
            .keys()
            .chain(other.coeffs.keys())
            .filter(|w| w.len() <= bound)
            .map(|w| q_to_f64(&(self.coeff(w) - other.coeff(w)).abs()))
            .fold(0.0, f64::max)
    }

    /// Geometric envelope `σ_m ≤ M c^m` for the level sums.
    ///
    /// The level-sum sequence is first run through the one-variable Hankel
    /// analysis; if its rank stabilises, `c` is the largest root modulus of the
    /// detected recursion and `M` the smallest constant covering the data.
    /// Otherwise `log σ_m` is fitted by least squares and the estimate is
    /// flagged as `fitted`.
    pub fn decay_estimate(&self) -> Result<DecayEstimate, SeriesError> {
        if self.max_degree < 4 {
            return Err(SeriesError::TooShort(self.max_degree));
        }
        decay_from_level_sums(&self.level_square_sums())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEstimate {
    pub m: f64,
    pub c: f64,
    pub fitted: bool,
}

impl DecayEstimate {
    pub fn bound(&self, level: usize) -> f64 {
        if self.c == 0.0 {
            if level == 0 {
                self.m
            } else {
                0.0
            }
        } else {
            self.m * self.c.powi(level as i32)
        }
    }
}

pub(crate) fn decay_from_level_sums(sigma: &[Q]) -> Result<DecayEstimate, SeriesError> {
    let sig_f: Vec<f64> = sigma.iter().map(q_to_f64).collect();
    let max_sigma = sig_f.iter().cloned().fold(0.0, f64::max);
    if sigma.iter().all(Zero::is_zero) {
        return Ok(DecayEstimate {
            m: 0.0,
            c: 0.0,
            fitted: false,
        });
    }
    let envelope = |c: f64| -> f64 {
        sig_f
            .iter()
            .enumerate()
            .map(|(m, s)| s / c.powi(m as i32))
            .fold(0.0, f64::max)
    };
    if let Ok(analysis) = classical_rationality(sigma) {
        if analysis.status == ClassicalStatus::Stabilized {
            let c = analysis.pole_moduli.iter().cloned().fold(0.0, f64::max);
            if c >= 1.0 {
                return Err(SeriesError::NotDecaying { c });
            }
            if c < 1e-300 {
                // all poles at the origin: finitely many non-zero levels
                return Ok(DecayEstimate {
                    m: max_sigma,
                    c: 0.0,
                    fitted: false,
                });
            }
            return Ok(DecayEstimate {
                m: envelope(c),
                c,
                fitted: false,
            });
        }
    }
    fit_decay(&sig_f)
}

/// Least-squares fit of `log σ_m`, for level sums that carry truncation error
/// (an exact recursion would pick up the error's own growth).
pub(crate) fn fitted_decay(sigma: &[Q]) -> Result<DecayEstimate, SeriesError> {
    fit_decay(&sigma.iter().map(q_to_f64).collect::<Vec<_>>())
}

fn fit_decay(sig_f: &[f64]) -> Result<DecayEstimate, SeriesError> {
    let max_sigma = sig_f.iter().cloned().fold(0.0, f64::max);
    let envelope = |c: f64| -> f64 {
        sig_f
            .iter()
            .enumerate()
            .map(|(m, s)| s / c.powi(m as i32))
            .fold(0.0, f64::max)
    };
    let pts: Vec<(f64, f64)> = sig_f
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > 0.0)
        .map(|(m, s)| (m as f64, s.ln()))
        .collect();
    let c = if pts.len() < 2 {
        0.0
    } else {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxy / sxx).exp()
    };
    if c >= 1.0 {
        return Err(SeriesError::NotDecaying { c });
    }
    if c == 0.0 {
        return Ok(DecayEstimate {
            m: max_sigma,
            c,
            fitted: true,
        });
    }
    Ok(DecayEstimate {
        m: envelope(c),
        c,
        fitted: true,
    })
}

/// Wire format: `{"d", "L", "terms": [{"word", "num", "den"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub d: usize,
    #[serde(rename = "L")]
    pub max_degree: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub word: String,
    pub num: String,
    pub den: String,
}

impl From<&SeriesTable> for SeriesJson {
    fn from(t: &SeriesTable) -> Self {
        SeriesJson {
            d: t.d,
            max_degree: t.max_degree,
            terms: t
                .coeffs
                .iter()
                .map(|(w, c)| TermJson {
                    word: w.to_string(),
                    num: c.numer().to_string(),
                    den: c.denom().to_string(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&SeriesJson> for SeriesTable {
    type Error = SeriesError;

    fn try_from(j: &SeriesJson) -> Result<Self, Self::Error> {
        let mut t = SeriesTable::zero(j.d, j.max_degree);
        for term in &j.terms {
            let w: Word = term.word.parse()?;
            let c = parse_pair(&term.num, &term.den)?;
            let prev = t.coeff(&w);
            t.set(w, prev + c)?;
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};
    use crate::word::Letter;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    /// `α_{1^n} = 2^{-(n+1)}` over `d = 2`.
    fn resolvent(max_degree: usize) -> SeriesTable {
        let terms = (0..=max_degree).map(|n| {
            (
                Word::power(Letter::new(1), n),
                Q::new(
                    1.into(),
                    num_traits::pow(num_bigint::BigInt::from(2), n + 1),
                ),
            )
        });
        SeriesTable::from_terms(2, max_degree, terms).unwrap()
    }

    #[test]
    fn coefficient_lookup() {
        let z = SeriesTable::from_terms(2, 3, [(w("1"), qi(1))]).unwrap();
        assert_eq!(z.coefficient(&w("1")).unwrap(), qi(1));
        assert_eq!(z.coefficient(&w("2")).unwrap(), qi(0));
        assert!(matches!(
            z.coefficient(&w("1 1 1 1")),
            Err(SeriesError::DegreeOutOfRange { len: 4, bound: 3 })
        ));
        assert_eq!(resolvent(4).coefficient(&w("1 1")).unwrap(), q(1, 8));
    }

    #[test]
    fn zero_is_not_stored() {
        let mut z = SeriesTable::zero(2, 2);
        z.set(w("1"), qi(0)).unwrap();
        assert_eq!(z.nnz(), 0);
        assert!(z.set(w("3"), qi(1)).is_err());
    }

    #[test]
    fn hadamard_examples() {
        let z = resolvent(6);
        assert_eq!(
            z.hadamard(&SeriesTable::all_ones(2, 4)).unwrap(),
            z.truncate(4)
        );
        let sq = z.hadamard(&z).unwrap();
        for n in 0..=6 {
            let want = Q::new(
                1.into(),
                num_traits::pow(num_bigint::BigInt::from(4), n + 1),
            );
            assert_eq!(sq.coeff(&Word::power(Letter::new(1), n)), want);
        }
        assert_eq!(z.hadamard(&SeriesTable::zero(2, 6)).unwrap().nnz(), 0);
        assert!(z.hadamard(&SeriesTable::zero(3, 6)).is_err());
    }

    #[test]
    fn level_norms() {
        let unit = SeriesTable::from_terms(2, 3, [(Word::empty(), qi(1))]).unwrap();
        assert_eq!(unit.level_l2_norms(), vec![1.0, 0.0, 0.0, 0.0]);
        let t = SeriesTable::from_terms(2, 1, [(w("1"), qi(3)), (w("2"), qi(4))]).unwrap();
        assert_eq!(t.level_l2_norms()[1], 5.0);
        for (m, v) in resolvent(8).level_l2_norms().iter().enumerate() {
            assert!((v - 0.5f64.powi(m as i32 + 1)).abs() < 1e-16);
        }
    }

    #[test]
    fn decay_examples() {
        let est = resolvent(10).decay_estimate().unwrap();
        assert!(!est.fitted);
        assert!((est.c - 0.25).abs() < 1e-12);
        assert!((est.m - 0.25).abs() < 1e-12);

        let poly = SeriesTable::from_terms(2, 8, [(w("1 2"), qi(3)), (w(""), qi(1))]).unwrap();
        let est = poly.decay_estimate().unwrap();
        assert_eq!(est.c, 0.0);
        assert_eq!(est.m, 9.0);

        let ones = SeriesTable::from_fn(1, 8, |_| qi(1));
        assert!(matches!(
            ones.decay_estimate(),
            Err(SeriesError::NotDecaying { .. })
        ));
        assert!(matches!(
            resolvent(3).decay_estimate(),
            Err(SeriesError::TooShort(3))
        ));
    }

    #[test]
    fn json_round_trip() {
        let z = resolvent(3);
        let j = SeriesJson::from(&z);
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.contains("\"L\":3"));
        let back: SeriesJson = serde_json::from_str(&text).unwrap();
        assert_eq!(SeriesTable::try_from(&back).unwrap(), z);
    }
}
