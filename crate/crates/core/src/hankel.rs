//! Hankel blocks `H[u, w] = α_{uw}` of noncommutative series, their ranks, and
//! the classical one-variable case `H[m][n] = α_{m+n}`.

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, QMatrix};
use crate::scalar::{q_to_f64, Q};
use crate::series::SeriesTable;
use crate::word::{enumerate_words, Word};

pub use crate::linalg::numeric_rank;

pub const DEFAULT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HankelError {
    #[error("block needs degree {needed} but the series is tabulated to {available}")]
    InsufficientDepth { needed: usize, available: usize },
    #[error("classical analysis needs at least 3 coefficients, got {0}")]
    TooFewCoefficients(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HankelBlock {
    pub prefixes: Vec<Word>,
    pub suffixes: Vec<Word>,
    pub entries: QMatrix,
}

impl HankelBlock {
    pub fn to_f64(&self) -> DMatrix<f64> {
        linalg::to_dmatrix(&self.entries)
    }

    pub fn entry(&self, i: usize, j: usize) -> &Q {
        &self.entries[i][j]
    }
}

/// Block over arbitrary prefix and suffix lists.
pub fn block_from_words(
    z: &SeriesTable,
    prefixes: &[Word],
    suffixes: &[Word],
) -> Result<HankelBlock, HankelError> {
    let needed = prefixes.iter().map(Word::len).max().unwrap_or(0)
        + suffixes.iter().map(Word::len).max().unwrap_or(0);
    if needed > z.max_degree() {
        return Err(HankelError::InsufficientDepth {
            needed,
            available: z.max_degree(),
        });
    }
    let entries = prefixes
        .iter()
        .map(|u| suffixes.iter().map(|w| z.coeff(&u.concat(w))).collect())
        .collect();
    Ok(HankelBlock {
        prefixes: prefixes.to_vec(),
        suffixes: suffixes.to_vec(),
        entries,
    })
}

/// All prefixes `|u| ≤ max_prefix` against all suffixes `|w| ≤ max_suffix`, length-lex ordered.
pub fn build_block(
    z: &SeriesTable,
    max_prefix: usize,
    max_suffix: usize,
) -> Result<HankelBlock, HankelError> {
    block_from_words(
        z,
        &enumerate_words(z.d(), max_prefix),
        &enumerate_words(z.d(), max_suffix),
    )
}

pub fn exact_rank(b: &HankelBlock) -> usize {
    linalg::rank(&b.entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    Exact,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RankStatus {
    Stabilized,
    Growing,
}

/// Outcome of the stabilization test on square blocks of depth `1, 2, …`.
///
/// `Stabilized` means `rank(k) = rank(k+1)` at `at_depth = k`. It is a
/// certificate under the stabilization promise, not a proof of finite rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub mode: RankMode,
    pub ranks: Vec<usize>,
    pub status: RankStatus,
    pub rank: Option<usize>,
    pub at_depth: Option<usize>,
}

impl RankReport {
    pub fn is_stabilized(&self) -> bool {
        self.status == RankStatus::Stabilized
    }
}

fn certify_with(
    z: &SeriesTable,
    k_max: usize,
    mode: RankMode,
    mut rank_at: impl FnMut(&HankelBlock) -> usize,
) -> Result<RankReport, HankelError> {
    let needed = 2 * k_max + 2;
    if z.max_degree() < needed {
        return Err(HankelError::InsufficientDepth {
            needed,
            available: z.max_degree(),
        });
    }
    let mut ranks = Vec::new();
    let mut prev = rank_at(&build_block(z, 1, 1)?);
    ranks.push(prev);
    for k in 1..=k_max {
        let next = rank_at(&build_block(z, k + 1, k + 1)?);
        if next == prev {
            ranks.push(next);
            return Ok(RankReport {
                mode,
                ranks,
                status: RankStatus::Stabilized,
                rank: Some(next),
                at_depth: Some(k),
            });
        }
        if k < k_max {
            ranks.push(next);
        }
        prev = next;
    }
    Ok(RankReport {
        mode,
        rank: ranks.last().copied(),
        ranks,
        status: RankStatus::Growing,
        at_depth: None,
    })
}

/// Exact ranks of the depth-`k` square blocks, `k = 1..=k_max`, stopping at the
/// first `k` with `rank(k) = rank(k+1)`.
pub fn certify_finite_rank(z: &SeriesTable, k_max: usize) -> Result<RankReport, HankelError> {
    certify_with(z, k_max, RankMode::Exact, exact_rank)
}

/// Same test with singular-value ranks, for tables that carry truncation error.
pub fn certify_finite_rank_numeric(
    z: &SeriesTable,
    k_max: usize,
    rel_tol: f64,
) -> Result<RankReport, HankelError> {
    certify_with(z, k_max, RankMode::Numeric, |b| {
        numeric_rank(&b.to_f64(), rel_tol)
    })
}

/// `H[m][n] = α_{m+n}` for `0 ≤ m, n < size`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalHankel {
    coeffs: Vec<Q>,
    size: usize,
}

impl ClassicalHankel {
    /// Uses `α_0 … α_{2 size - 2}`; returns `None` when `coeffs` is too short.
    pub fn new(coeffs: &[Q], size: usize) -> Option<Self> {
        if size == 0 || coeffs.len() < 2 * size - 1 {
            return None;
        }
        Some(ClassicalHankel {
            coeffs: coeffs[..2 * size - 1].to_vec(),
            size,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn matrix(&self) -> QMatrix {
        (0..self.size)
            .map(|m| (0..self.size).map(|n| self.coeffs[m + n].clone()).collect())
            .collect()
    }
}

pub fn classical_rank(h: &ClassicalHankel) -> usize {
    linalg::rank(&h.matrix())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassicalStatus {
    Stabilized,
    Growing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalAnalysis {
    pub rank: usize,
    pub status: ClassicalStatus,
    /// `λ_0 … λ_q` with `λ_q = 1` and `Σ_k λ_k α_{n+k} = 0` on all available `n`.
    #[serde(skip)]
    pub recursion: Option<Vec<Q>>,
    /// Root moduli of `Σ_k λ_k z^k`, largest first.
    pub pole_moduli: Vec<f64>,
}

/// Shortest monic recursion of order `q ≤ max_order` consistent with every
/// available coefficient.
fn minimal_recursion(coeffs: &[Q], max_order: usize) -> Option<Vec<Q>> {
    let len = coeffs.len();
    for q in 0..=max_order.min(len.saturating_sub(1)) {
        // rows n = 0 .. len-1-q: Σ_{k<q} λ_k α_{n+k} = -α_{n+q}
        let a: QMatrix = (0..len - q)
            .map(|n| (0..q).map(|k| coeffs[n + k].clone()).collect())
            .collect();
        let b: Vec<Q> = (0..len - q).map(|n| -coeffs[n + q].clone()).collect();
        let sol = if q == 0 {
            b.iter().all(Zero::is_zero).then(Vec::new)
        } else {
            linalg::solve(&a, &b)
        };
        if let Some(mut lam) = sol {
            lam.push(Q::one());
            return Some(lam);
        }
    }
    None
}

fn root_moduli(lambda: &[Q]) -> Vec<f64> {
    let zeros = lambda.iter().take_while(|x| x.is_zero()).count();
    let rest: Vec<f64> = lambda[zeros..].iter().map(q_to_f64).collect();
    let mut out: Vec<f64> = linalg::polynomial_roots(&rest)
        .iter()
        .map(|z| z.norm())
        .collect();
    out.extend(std::iter::repeat_n(0.0, zeros));
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// One-variable Kronecker analysis of `Σ α_n z^n` from `α_0 … α_{len-1}`.
///
/// The rank is taken on the largest square block `K+1` with `2K ≤ len - 1`;
/// the sequence counts as stabilized when blocks `K` and `K+1` have equal rank
/// and a recursion of order at most `K` fits every coefficient.
pub fn classical_rationality(coeffs: &[Q]) -> Result<ClassicalAnalysis, HankelError> {
    if coeffs.len() < 3 {
        return Err(HankelError::TooFewCoefficients(coeffs.len()));
    }
    let k = (coeffs.len() - 1) / 2;
    let big = classical_rank(&ClassicalHankel::new(coeffs, k + 1).expect("length checked"));
    let small = classical_rank(&ClassicalHankel::new(coeffs, k).expect("length checked"));
    let recursion = if big == small {
        minimal_recursion(coeffs, k)
    } else {
        None
    };
    let status = if recursion.is_some() {
        ClassicalStatus::Stabilized
    } else {
        ClassicalStatus::Growing
    };
    let pole_moduli = recursion.as_deref().map(root_moduli).unwrap_or_default();
    Ok(ClassicalAnalysis {
        rank: big,
        status,
        recursion,
        pole_moduli,
    })
}
