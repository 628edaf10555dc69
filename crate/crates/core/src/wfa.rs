//! Linear representations `(λ, μ, γ)` with `α_v = ᵗλ μ(v) γ`.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DVector;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hankel::{self, build_block, HankelError};
use crate::linalg::{self, QMatrix, Span};
use crate::scalar::{q_to_f64, ParseScalarError, RationalJson, Q};
use crate::series::SeriesTable;
use crate::word::{enumerate_words, Letter, Word};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WfaError {
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("inconsistent dimensions: {0}")]
    Shape(String),
    #[error("series has non-zero constant term")]
    NotProper,
    #[error("Hankel ranks differ at depths k and k+1: {rank_k} vs {rank_k1}")]
    NotLowRank { rank_k: usize, rank_k1: usize },
    #[error("need the series to degree {needed}, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("learned representation disagrees with the data at {word:?}")]
    Inconsistent { word: String },
    #[error("no invertible {m}x{m} Hankel block found ({found} independent words)")]
    NotMinimal { m: usize, found: usize },
    #[error(transparent)]
    Hankel(#[from] HankelError),
    #[error(transparent)]
    Scalar(#[from] ParseScalarError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRepresentation {
    d: usize,
    lambda: Vec<Q>,
    mu: Vec<QMatrix>,
    gamma: Vec<Q>,
}

impl LinearRepresentation {
    /// `mu[a]` is the matrix of letter `a + 1`.
    pub fn new(lambda: Vec<Q>, mu: Vec<QMatrix>, gamma: Vec<Q>) -> Result<Self, WfaError> {
        let m = lambda.len();
        if gamma.len() != m {
            return Err(WfaError::Shape(format!(
                "lambda has {m} entries, gamma {}",
                gamma.len()
            )));
        }
        for (a, mat) in mu.iter().enumerate() {
            if mat.len() != m || mat.iter().any(|r| r.len() != m) {
                return Err(WfaError::Shape(format!("mu({}) is not {m}x{m}", a + 1)));
            }
        }
        if mu.is_empty() {
            return Err(WfaError::Shape("alphabet is empty".into()));
        }
        Ok(LinearRepresentation {
            d: mu.len(),
            lambda,
            mu,
            gamma,
        })
    }

    /// Dimension 0: the zero series.
    pub fn zero(d: usize) -> Self {
        LinearRepresentation {
            d,
            lambda: Vec::new(),
            mu: vec![Vec::new(); d],
            gamma: Vec::new(),
        }
    }

    /// The constant series `c`.
    pub fn constant(d: usize, c: Q) -> Self {
        LinearRepresentation {
            d,
            lambda: vec![c],
            mu: vec![vec![vec![Q::zero()]]; d],
            gamma: vec![Q::one()],
        }
    }

    /// Every coefficient equal to one.
    pub fn all_ones(d: usize) -> Self {
        LinearRepresentation {
            d,
            lambda: vec![Q::one()],
            mu: vec![vec![vec![Q::one()]]; d],
            gamma: vec![Q::one()],
        }
    }

    /// The monomial `X^w`, as a path automaton with `|w| + 1` states.
    pub fn monomial(d: usize, w: &Word) -> Self {
        let m = w.len() + 1;
        let mut mu = vec![linalg::zeros(m, m); d];
        for (k, a) in w.letters().iter().enumerate() {
            mu[a.slot()][k][k + 1] = Q::one();
        }
        let mut lambda = vec![Q::zero(); m];
        lambda[0] = Q::one();
        let mut gamma = vec![Q::zero(); m];
        gamma[m - 1] = Q::one();
        LinearRepresentation {
            d,
            lambda,
            mu,
            gamma,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[Q] {
        &self.lambda
    }

    pub fn gamma(&self) -> &[Q] {
        &self.gamma
    }

    pub fn mu(&self, a: Letter) -> &QMatrix {
        &self.mu[a.slot()]
    }

    /// Letters whose matrix is not identically zero.
    pub fn active_letters(&self) -> Vec<Letter> {
        (0..self.d)
            .filter(|a| self.mu[*a].iter().flatten().any(|x| !x.is_zero()))
            .map(|a| Letter::new(a as u16 + 1))
            .collect()
    }

    /// `ᵗλ μ(v)`.
    pub fn row(&self, v: &Word) -> Vec<Q> {
        v.letters().iter().fold(self.lambda.clone(), |r, a| {
            linalg::vec_mat(&r, &self.mu[a.slot()])
        })
    }

    /// `μ(v) γ`.
    pub fn column(&self, v: &Word) -> Vec<Q> {
        v.letters().iter().rev().fold(self.gamma.clone(), |c, a| {
            linalg::mat_vec(&self.mu[a.slot()], &c)
        })
    }

    pub fn mu_word(&self, v: &Word) -> QMatrix {
        v.letters()
            .iter()
            .fold(linalg::identity(self.dim()), |acc, a| {
                linalg::mat_mul(&acc, &self.mu[a.slot()])
            })
    }

    pub fn eval(&self, v: &Word) -> Q {
        linalg::dot(&self.row(v), &self.gamma)
    }

    /// Coefficients for every `|v| ≤ max_degree`, computed level by level from
    /// cached prefix rows.
    pub fn tabulate(&self, max_degree: usize) -> SeriesTable {
        let mut table = SeriesTable::zero(self.d, max_degree);
        let mut level: Vec<(Word, Vec<Q>)> = vec![(Word::empty(), self.lambda.clone())];
        for len in 0..=max_degree {
            for (w, r) in &level {
                table
                    .set(w.clone(), linalg::dot(r, &self.gamma))
                    .expect("word within range");
            }
            if len == max_degree {
                break;
            }
            level = level
                .iter()
                .flat_map(|(w, r)| {
                    (0..self.d).map(move |a| {
                        let mut next = w.clone();
                        next.push(Letter::new(a as u16 + 1));
                        (next, linalg::vec_mat(r, &self.mu[a]))
                    })
                })
                .collect();
        }
        table
    }

    fn check_alphabet(&self, other: &Self) -> Result<(), WfaError> {
        if self.d != other.d {
            return Err(WfaError::AlphabetMismatch(self.d, other.d));
        }
        Ok(())
    }

    /// Block-diagonal sum.
    pub fn sum(&self, other: &Self) -> Result<Self, WfaError> {
        self.check_alphabet(other)?;
        let (m1, m2) = (self.dim(), other.dim());
        let mu = (0..self.d)
            .map(|a| {
                let mut mat = linalg::zeros(m1 + m2, m1 + m2);
                for (row, src) in mat.iter_mut().zip(&self.mu[a]) {
                    row[..m1].clone_from_slice(src);
                }
                for i in 0..m2 {
                    mat[m1 + i][m1..].clone_from_slice(&other.mu[a][i]);
                }
                mat
            })
            .collect();
        Ok(LinearRepresentation {
            d: self.d,
            lambda: [self.lambda.clone(), other.lambda.clone()].concat(),
            mu,
            gamma: [self.gamma.clone(), other.gamma.clone()].concat(),
        })
    }

    /// Cauchy product `Σ_{v = uw} α_u β_w`.
    pub fn product(&self, other: &Self) -> Result<Self, WfaError> {
        self.check_alphabet(other)?;
        let (m1, m2) = (self.dim(), other.dim());
        let beta0 = linalg::dot(&other.lambda, &other.gamma);
        let mu = (0..self.d)
            .map(|a| {
                let mut mat = linalg::zeros(m1 + m2, m1 + m2);
                let coupling = linalg::vec_mat(&other.lambda, &other.mu[a]);
                for (i, row) in mat.iter_mut().take(m1).enumerate() {
                    row[..m1].clone_from_slice(&self.mu[a][i]);
                    for (x, c) in row[m1..].iter_mut().zip(&coupling) {
                        *x = &self.gamma[i] * c;
                    }
                }
                for i in 0..m2 {
                    mat[m1 + i][m1..].clone_from_slice(&other.mu[a][i]);
                }
                mat
            })
            .collect();
        let mut lambda = self.lambda.clone();
        lambda.resize(m1 + m2, Q::zero());
        let mut gamma: Vec<Q> = self.gamma.iter().map(|g| g * &beta0).collect();
        gamma.extend(other.gamma.iter().cloned());
        Ok(LinearRepresentation {
            d: self.d,
            lambda,
            mu,
            gamma,
        })
    }

    pub fn scalar_mul(&self, c: &Q) -> Self {
        LinearRepresentation {
            lambda: self.lambda.iter().map(|x| x * c).collect(),
            ..self.clone()
        }
    }

    /// `Σ_{n ≥ 0} Zⁿ` for a series without constant term.
    pub fn star(&self) -> Result<Self, WfaError> {
        if !linalg::dot(&self.lambda, &self.gamma).is_zero() {
            return Err(WfaError::NotProper);
        }
        let m = self.dim();
        let mu = self
            .mu
            .iter()
            .map(|mat| {
                // (I + γ ᵗλ) μ(a), padded with a zero row and column
                let lam_mu = linalg::vec_mat(&self.lambda, mat);
                let mut out = linalg::zeros(m + 1, m + 1);
                for i in 0..m {
                    for j in 0..m {
                        out[i][j] = &mat[i][j] + &self.gamma[i] * &lam_mu[j];
                    }
                }
                out
            })
            .collect();
        let mut lambda = self.lambda.clone();
        lambda.push(Q::one());
        let mut gamma = self.gamma.clone();
        gamma.push(Q::one());
        Ok(LinearRepresentation {
            d: self.d,
            lambda,
            mu,
            gamma,
        })
    }

    /// Kronecker-product representation of the coefficient-wise product.
    pub fn hadamard(&self, other: &Self) -> Result<Self, WfaError> {
        self.check_alphabet(other)?;
        Ok(LinearRepresentation {
            d: self.d,
            lambda: linalg::kron_vec(&self.lambda, &other.lambda),
            mu: self
                .mu
                .iter()
                .zip(&other.mu)
                .map(|(a, b)| linalg::kron(a, b))
                .collect(),
            gamma: linalg::kron_vec(&self.gamma, &other.gamma),
        })
    }

    /// Forward then backward basis reduction.
    ///
    /// The forward pass keeps the span of the reachable rows `ᵗλ μ(v)`, the
    /// backward pass the span of the observable columns `μ(v) γ`; words are
    /// explored breadth-first in length-lex order.
    pub fn minimize(&self) -> Self {
        self.reduce_forward().reduce_backward()
    }

    fn reduce_forward(&self) -> Self {
        let m = self.dim();
        let mut span = Span::new(m);
        let mut queue = VecDeque::new();
        if span.insert(self.lambda.clone()) {
            queue.push_back(self.lambda.clone());
        }
        while let Some(r) = queue.pop_front() {
            for a in 0..self.d {
                let next = linalg::vec_mat(&r, &self.mu[a]);
                if span.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        let basis = span.members().to_vec();
        let k = basis.len();
        let coords = |v: &[Q]| span.coordinates(v).expect("row lies in the reachable span");
        let mu = self
            .mu
            .iter()
            .map(|mat| {
                basis
                    .iter()
                    .map(|b| coords(&linalg::vec_mat(b, mat)))
                    .collect()
            })
            .collect();
        let mut lambda = vec![Q::zero(); k];
        if k > 0 {
            lambda[0] = Q::one();
        }
        let gamma = basis.iter().map(|b| linalg::dot(b, &self.gamma)).collect();
        LinearRepresentation {
            d: self.d,
            lambda,
            mu,
            gamma,
        }
    }

    fn transposed(&self) -> Self {
        LinearRepresentation {
            d: self.d,
            lambda: self.gamma.clone(),
            mu: self.mu.iter().map(linalg::transpose).collect(),
            gamma: self.lambda.clone(),
        }
    }

    fn reduce_backward(&self) -> Self {
        self.transposed().reduce_forward().transposed()
    }
}

/// Learns a representation from the Hankel blocks of depth `k` and `k + 1`.
///
/// Rows are picked greedily among prefixes `|p| ≤ k` in length-lex order, then
/// columns among suffixes `|s| ≤ k`, giving an invertible block `H[P, S]`.
/// The result reproduces every tabulated coefficient or the call fails.
pub fn learn_from_hankel(z: &SeriesTable, k: usize) -> Result<LinearRepresentation, WfaError> {
    check_depth(z, k)?;
    let small = build_block(z, k, k)?;
    let big = build_block(z, k + 1, k + 1)?;
    let (rank_k, rank_k1) = (hankel::exact_rank(&small), hankel::exact_rank(&big));
    if rank_k != rank_k1 {
        return Err(WfaError::NotLowRank { rank_k, rank_k1 });
    }
    let mut rows = Span::new(small.suffixes.len());
    let mut picked_rows = Vec::new();
    for (i, r) in small.entries.iter().enumerate() {
        if rows.insert(r.clone()) {
            picked_rows.push(i);
        }
    }
    let mut cols = Span::new(picked_rows.len());
    let mut picked_cols = Vec::new();
    for j in 0..small.suffixes.len() {
        let c: Vec<Q> = picked_rows
            .iter()
            .map(|&i| small.entries[i][j].clone())
            .collect();
        if cols.insert(c) {
            picked_cols.push(j);
        }
    }
    let prefixes: Vec<Word> = picked_rows
        .iter()
        .map(|&i| small.prefixes[i].clone())
        .collect();
    let suffixes: Vec<Word> = picked_cols
        .iter()
        .map(|&j| small.suffixes[j].clone())
        .collect();
    let rep = representation_from_basis(z, &prefixes, &suffixes)?;
    let learned = rep.tabulate(z.max_degree());
    if let Some((w, _)) = learned
        .terms()
        .chain(z.terms())
        .find(|(w, _)| learned.coeff(w) != z.coeff(w))
    {
        return Err(WfaError::Inconsistent {
            word: w.to_string(),
        });
    }
    Ok(rep)
}

fn check_depth(z: &SeriesTable, k: usize) -> Result<(), WfaError> {
    let needed = 2 * k + 2;
    if z.max_degree() < needed {
        return Err(WfaError::InsufficientData {
            needed,
            available: z.max_degree(),
        });
    }
    Ok(())
}

fn representation_from_basis(
    z: &SeriesTable,
    prefixes: &[Word],
    suffixes: &[Word],
) -> Result<LinearRepresentation, WfaError> {
    let h = |u: &Word| -> Vec<Q> { suffixes.iter().map(|s| z.coeff(&u.concat(s))).collect() };
    let h_ps: QMatrix = prefixes.iter().map(h).collect();
    let inv = linalg::inverse(&h_ps)
        .ok_or_else(|| WfaError::Shape("selected block is singular".into()))?;
    let lambda = linalg::vec_mat(&h(&Word::empty()), &inv);
    let mu = (1..=z.d())
        .map(|a| {
            prefixes
                .iter()
                .map(|p| {
                    let mut pa = p.clone();
                    pa.push(Letter::new(a as u16));
                    linalg::vec_mat(&h(&pa), &inv)
                })
                .collect()
        })
        .collect();
    let gamma = prefixes.iter().map(|p| z.coeff(p)).collect();
    LinearRepresentation::new(lambda, mu, gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericLearnReport {
    pub ranks: (usize, usize),
    pub prefixes: Vec<String>,
    pub suffixes: Vec<String>,
    /// Largest `|tabulated - data|` over the whole table.
    pub max_error: f64,
}

/// Greedy pivoted Gram-Schmidt: repeatedly takes the vector with the largest
/// residual (earliest on ties) until `count` are chosen.
fn pivoted_selection(vectors: &[DVector<f64>], count: usize) -> Vec<usize> {
    let mut residual: Vec<DVector<f64>> = vectors.to_vec();
    let mut chosen = Vec::new();
    for _ in 0..count {
        let Some((best, norm)) = residual
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(i, r)| (i, r.norm()))
            .fold(None, |acc: Option<(usize, f64)>, (i, n)| match acc {
                Some((_, bn)) if bn >= n => acc,
                _ => Some((i, n)),
            })
        else {
            break;
        };
        if norm == 0.0 {
            break;
        }
        chosen.push(best);
        let q = &residual[best] / norm;
        for r in residual.iter_mut() {
            let c = q.dot(r);
            *r -= &q * c;
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Learning for tables that carry truncation error: ranks come from singular
/// values, the basis from pivoted Gram-Schmidt, and the representation is then
/// built over `Q` from the tabulated data. The fit is reported, not enforced.
pub fn learn_from_hankel_numeric(
    z: &SeriesTable,
    k: usize,
    rel_tol: f64,
) -> Result<(LinearRepresentation, NumericLearnReport), WfaError> {
    check_depth(z, k)?;
    let small = build_block(z, k, k)?;
    let big = build_block(z, k + 1, k + 1)?;
    let rank_k = hankel::numeric_rank(&small.to_f64(), rel_tol);
    let rank_k1 = hankel::numeric_rank(&big.to_f64(), rel_tol);
    if rank_k != rank_k1 {
        return Err(WfaError::NotLowRank { rank_k, rank_k1 });
    }
    let dense = small.to_f64();
    let row_vecs: Vec<DVector<f64>> = (0..dense.nrows())
        .map(|i| dense.row(i).transpose())
        .collect();
    let picked_rows = pivoted_selection(&row_vecs, rank_k);
    let col_vecs: Vec<DVector<f64>> = (0..dense.ncols())
        .map(|j| {
            DVector::from_iterator(
                picked_rows.len(),
                picked_rows.iter().map(|&i| dense[(i, j)]),
            )
        })
        .collect();
    let picked_cols = pivoted_selection(&col_vecs, rank_k);
    let prefixes: Vec<Word> = picked_rows
        .iter()
        .map(|&i| small.prefixes[i].clone())
        .collect();
    let suffixes: Vec<Word> = picked_cols
        .iter()
        .map(|&j| small.suffixes[j].clone())
        .collect();
    let rep = representation_from_basis(z, &prefixes, &suffixes)?;
    let max_error = rep.tabulate(z.max_degree()).max_abs_difference(z);
    let report = NumericLearnReport {
        ranks: (rank_k, rank_k1),
        prefixes: prefixes.iter().map(Word::to_string).collect(),
        suffixes: suffixes.iter().map(Word::to_string).collect(),
        max_error,
    };
    Ok((rep, report))
}

/// Witness for `μ(v)_{ij} = Σ_{kl} c_{ij}^{kl} α_{u_k v w_l}` with
/// `c_{ij}^{kl} = (A⁻¹)_{ik} (B⁻¹)_{lj}`, where `A` has rows `ᵗλ μ(u_k)` and
/// `B` has columns `μ(w_l) γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalCoeffReport {
    pub prefixes: Vec<Word>,
    pub suffixes: Vec<Word>,
    pub a_inv: QMatrix,
    pub b_inv: QMatrix,
    pub checked_words: usize,
    pub max_checked_len: usize,
    pub failures: Vec<Word>,
}

impl MinimalCoeffReport {
    pub fn constant(&self, i: usize, j: usize, k: usize, l: usize) -> Q {
        &self.a_inv[i][k] * &self.b_inv[l][j]
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn bfs_words(
    m: usize,
    d: usize,
    start: Vec<Q>,
    step: impl Fn(&[Q], usize) -> Vec<Q>,
    append_left: bool,
) -> Vec<(Word, Vec<Q>)> {
    let mut span = Span::new(m);
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    if span.insert(start.clone()) {
        queue.push_back((Word::empty(), start));
    }
    while let Some((w, v)) = queue.pop_front() {
        out.push((w.clone(), v.clone()));
        for a in 0..d {
            let next = step(&v, a);
            if span.insert(next.clone()) {
                let letter = Word::single(Letter::new(a as u16 + 1));
                let nw = if append_left {
                    letter.concat(&w)
                } else {
                    w.concat(&letter)
                };
                queue.push_back((nw, next));
            }
        }
    }
    out
}

pub fn check_minimal_coeff_property(
    r: &LinearRepresentation,
    z: &SeriesTable,
) -> Result<MinimalCoeffReport, WfaError> {
    if r.d != z.d() {
        return Err(WfaError::AlphabetMismatch(r.d, z.d()));
    }
    let m = r.dim();
    let fwd = bfs_words(
        m,
        r.d,
        r.lambda.clone(),
        |v, a| linalg::vec_mat(v, &r.mu[a]),
        false,
    );
    let bwd = bfs_words(
        m,
        r.d,
        r.gamma.clone(),
        |v, a| linalg::mat_vec(&r.mu[a], v),
        true,
    );
    if fwd.len() < m || bwd.len() < m {
        return Err(WfaError::NotMinimal {
            m,
            found: fwd.len().min(bwd.len()),
        });
    }
    let prefixes: Vec<Word> = fwd.iter().map(|x| x.0.clone()).collect();
    let suffixes: Vec<Word> = bwd.iter().map(|x| x.0.clone()).collect();
    let reach = prefixes.iter().map(Word::len).max().unwrap_or(0)
        + suffixes.iter().map(Word::len).max().unwrap_or(0);
    if reach > z.max_degree() {
        return Err(WfaError::InsufficientData {
            needed: reach,
            available: z.max_degree(),
        });
    }
    let block = hankel::block_from_words(z, &prefixes, &suffixes)?;
    if linalg::determinant(&block.entries).is_none_or(|det| det.is_zero()) {
        return Err(WfaError::NotMinimal { m, found: 0 });
    }
    let a: QMatrix = fwd.into_iter().map(|x| x.1).collect();
    let b: QMatrix = linalg::transpose(&bwd.into_iter().map(|x| x.1).collect());
    let a_inv = linalg::inverse(&a).ok_or(WfaError::NotMinimal { m, found: 0 })?;
    let b_inv = linalg::inverse(&b).ok_or(WfaError::NotMinimal { m, found: 0 })?;
    let max_len = z.max_degree() - reach;
    let mut failures = Vec::new();
    let words = enumerate_words(r.d, max_len);
    for v in &words {
        let inner: QMatrix = prefixes
            .iter()
            .map(|u| {
                suffixes
                    .iter()
                    .map(|w| z.coeff(&u.concat(v).concat(w)))
                    .collect()
            })
            .collect();
        let predicted = linalg::mat_mul(&linalg::mat_mul(&a_inv, &inner), &b_inv);
        if predicted != r.mu_word(v) {
            failures.push(v.clone());
        }
    }
    Ok(MinimalCoeffReport {
        prefixes,
        suffixes,
        a_inv,
        b_inv,
        checked_words: words.len(),
        max_checked_len: max_len,
        failures,
    })
}

/// Wire format `{"d", "m", "lambda", "gamma", "mu": {"1": [[…]], …}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationJson {
    pub d: usize,
    pub m: usize,
    pub lambda: Vec<RationalJson>,
    pub gamma: Vec<RationalJson>,
    pub mu: BTreeMap<String, Vec<Vec<RationalJson>>>,
}

impl From<&LinearRepresentation> for RepresentationJson {
    fn from(r: &LinearRepresentation) -> Self {
        let vec = |v: &[Q]| v.iter().map(RationalJson::from).collect();
        RepresentationJson {
            d: r.d,
            m: r.dim(),
            lambda: vec(&r.lambda),
            gamma: vec(&r.gamma),
            mu: r
                .mu
                .iter()
                .enumerate()
                .map(|(a, mat)| {
                    (
                        (a + 1).to_string(),
                        mat.iter().map(|row| vec(row)).collect(),
                    )
                })
                .collect(),
        }
    }
}

impl TryFrom<&RepresentationJson> for LinearRepresentation {
    type Error = WfaError;

    fn try_from(j: &RepresentationJson) -> Result<Self, Self::Error> {
        let vec = |v: &[RationalJson]| -> Result<Vec<Q>, WfaError> {
            v.iter()
                .map(|x| Q::try_from(x).map_err(WfaError::from))
                .collect()
        };
        let mut mu = Vec::with_capacity(j.d);
        for a in 1..=j.d {
            let rows = match j.mu.get(&a.to_string()) {
                Some(rows) => rows
                    .iter()
                    .map(|r| vec(r))
                    .collect::<Result<QMatrix, _>>()?,
                None => linalg::zeros(j.m, j.m),
            };
            mu.push(rows);
        }
        if let Some(extra) =
            j.mu.keys()
                .find(|k| k.parse::<usize>().map_or(true, |a| a == 0 || a > j.d))
        {
            return Err(WfaError::Shape(format!("unknown letter {extra:?} in mu")));
        }
        let rep = LinearRepresentation::new(vec(&j.lambda)?, mu, vec(&j.gamma)?)?;
        if rep.dim() != j.m {
            return Err(WfaError::Shape(format!(
                "m = {} but lambda has {} entries",
                j.m,
                rep.dim()
            )));
        }
        Ok(rep)
    }
}

/// Largest absolute coefficient difference between `r` and the table.
pub fn max_table_error(r: &LinearRepresentation, z: &SeriesTable) -> f64 {
    enumerate_words(z.d(), z.max_degree())
        .iter()
        .map(|v| q_to_f64(&(r.eval(v) - z.coeff(v))).abs())
        .fold(0.0, f64::max)
}
