//! The full Fock space over `[d]`, truncated at word length `N`.
//!
//! Basis vectors `e_v` are indexed in length-lex order: `index(v) =
//! offset(|v|) + r(v)` where `r(v)` reads the letters `1..d` as base-`d`
//! digits `0..d-1`. Creation and annihilation operators act on these indices
//! directly.
//!
//! Every operator carries a shift profile and the largest column length on
//! which it is known to agree with the untruncated operator (`interior`).
//! Identities are only ever compared on those columns.

use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::expr::RationalExpr;
use crate::hankel::RankMode;
use crate::linalg;
use crate::scalar::{q_to_f64, Scalar, Q};
use crate::series::{fitted_decay, DecayEstimate, SeriesTable};
use crate::sparse::{SparseLu, SparseMatrix};
use crate::word::{right_quotient, Letter, Quotient, Word};

/// Largest basis on which dense vectors are allocated.
pub const MAX_DIM: usize = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("alphabet must be non-empty")]
    EmptyAlphabet,
    #[error("letter {letter} outside alphabet of size {d}")]
    LetterOutOfRange { letter: u16, d: usize },
    #[error("Fock basis of dimension {dim} is too large")]
    TooLarge { dim: usize },
    #[error("word of length {len} exceeds truncation {n}")]
    WordTooLong { len: usize, n: usize },
    #[error("polynomial degree {degree} exceeds truncation {n}")]
    DegreeTooHigh { degree: usize, n: usize },
    #[error("expression contains an inverse; use the truncated solver")]
    ContainsInverse,
    #[error("truncated operand is singular at N = {truncation} (no pivot for e_{{{word}}})")]
    NotInvertible { truncation: usize, word: String },
    #[error(
        "margin {margin} too small: interior columns must have length <= {exact} (shift up {up})"
    )]
    MarginTooSmall {
        margin: usize,
        exact: isize,
        up: usize,
    },
    #[error("interior rank is not stable: {rank_n} at N, {rank_n1} at N+1")]
    Unstable { rank_n: usize, rank_n1: usize },
    #[error("coefficient family mixes word lengths {0} and {1}")]
    NotHomogeneous(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    d: usize,
    n: usize,
    // offsets[k] = number of words shorter than k, for k = 0..=n+1
    offsets: Vec<usize>,
    powers: Vec<usize>,
}

impl FockBasis {
    pub fn new(d: usize, n: usize) -> Result<Self, FockError> {
        if d == 0 {
            return Err(FockError::EmptyAlphabet);
        }
        let mut powers = vec![1usize];
        let mut offsets = vec![0usize, 1];
        for k in 1..=n {
            let p = powers[k - 1]
                .checked_mul(d)
                .ok_or(FockError::TooLarge { dim: usize::MAX })?;
            powers.push(p);
            let o = offsets[k]
                .checked_add(p)
                .ok_or(FockError::TooLarge { dim: usize::MAX })?;
            offsets.push(o);
        }
        Ok(FockBasis {
            d,
            n,
            offsets,
            powers,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Truncation length `N`.
    pub fn truncation(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.offsets[self.n + 1]
    }

    /// Number of basis words of length `≤ len`.
    pub fn count_up_to(&self, len: usize) -> usize {
        self.offsets[len.min(self.n) + 1]
    }

    fn require_dense(&self) -> Result<(), FockError> {
        if self.dim() > MAX_DIM {
            return Err(FockError::TooLarge { dim: self.dim() });
        }
        Ok(())
    }

    fn check_letter(&self, i: Letter) -> Result<(), FockError> {
        if i.index() as usize > self.d {
            return Err(FockError::LetterOutOfRange {
                letter: i.index(),
                d: self.d,
            });
        }
        Ok(())
    }

    pub fn index(&self, w: &Word) -> Option<usize> {
        if w.len() > self.n || w.max_letter() as usize > self.d {
            return None;
        }
        let r = w.letters().iter().fold(0, |acc, a| acc * self.d + a.slot());
        Some(self.offsets[w.len()] + r)
    }

    pub fn len_of(&self, idx: usize) -> usize {
        self.offsets.partition_point(|&o| o <= idx) - 1
    }

    fn split(&self, idx: usize) -> (usize, usize) {
        let len = self.len_of(idx);
        (len, idx - self.offsets[len])
    }

    pub fn word(&self, idx: usize) -> Word {
        let (len, mut r) = self.split(idx);
        let mut digits = vec![0u16; len];
        for k in (0..len).rev() {
            digits[k] = (r % self.d) as u16 + 1;
            r /= self.d;
        }
        Word::from_letters(digits)
    }

    /// `l_i e_v = e_{iv}`.
    pub fn l_create(&self, i: Letter, idx: usize) -> Option<usize> {
        let (len, r) = self.split(idx);
        (len < self.n).then(|| self.offsets[len + 1] + i.slot() * self.powers[len] + r)
    }

    /// `l_i^* e_v = e_{i⁻¹v}`.
    pub fn l_annihilate(&self, i: Letter, idx: usize) -> Option<usize> {
        let (len, r) = self.split(idx);
        if len == 0 {
            return None;
        }
        let p = self.powers[len - 1];
        (r / p == i.slot()).then(|| self.offsets[len - 1] + r % p)
    }

    /// `r_i e_v = e_{vi}`.
    pub fn r_create(&self, i: Letter, idx: usize) -> Option<usize> {
        let (len, r) = self.split(idx);
        (len < self.n).then(|| self.offsets[len + 1] + r * self.d + i.slot())
    }

    /// `r_i^* e_v = e_{vi⁻¹}`.
    pub fn r_annihilate(&self, i: Letter, idx: usize) -> Option<usize> {
        let (len, r) = self.split(idx);
        if len == 0 {
            return None;
        }
        (r % self.d == i.slot()).then(|| self.offsets[len - 1] + r / self.d)
    }

    /// `e_{u w}` for the word `u` (given by its length and digit value) and basis index `w`.
    fn prepend(&self, u_len: usize, u_r: usize, idx: usize) -> Option<usize> {
        let (len, r) = self.split(idx);
        (len + u_len <= self.n).then(|| self.offsets[len + u_len] + u_r * self.powers[len] + r)
    }
}

/// Sparse vector on a truncated Fock space, keyed by word.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector<T> {
    d: usize,
    n: usize,
    entries: BTreeMap<Word, T>,
}

impl<T: Scalar> FockVector<T> {
    pub fn zero(basis: &FockBasis) -> Self {
        FockVector {
            d: basis.d,
            n: basis.n,
            entries: BTreeMap::new(),
        }
    }

    pub fn basis_vector(basis: &FockBasis, w: &Word) -> Self {
        let mut v = Self::zero(basis);
        v.entries.insert(w.clone(), T::one());
        v
    }

    fn from_dense(d: usize, n: usize, work: &FockBasis, data: &[T], red: &Reduction) -> Self {
        let entries = data
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(i, x)| (red.word_back(&work.word(i)), x.clone()))
            .filter(|(w, _)| w.len() <= n)
            .collect();
        FockVector { d, n, entries }
    }

    pub(crate) fn from_entries(d: usize, n: usize, entries: BTreeMap<Word, T>) -> Self {
        FockVector { d, n, entries }
    }

    pub fn coeff(&self, w: &Word) -> T {
        self.entries.get(w).cloned().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &T)> {
        self.entries.iter()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `ℓ²` norm of each length level `0..=N`.
    pub fn level_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        for (w, x) in &self.entries {
            out[w.len()] += x.to_f64().powi(2);
        }
        out.iter().map(|s| s.sqrt()).collect()
    }
}

impl FockVector<Q> {
    /// Coefficients of degree `≤ max_degree` as a series table.
    pub fn to_series(&self, max_degree: usize) -> SeriesTable {
        SeriesTable::from_terms(
            self.d,
            max_degree,
            self.entries
                .iter()
                .filter(|(w, _)| w.len() <= max_degree)
                .map(|(w, x)| (w.clone(), x.clone())),
        )
        .expect("words lie in the alphabet")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShiftProfile {
    pub up: usize,
    pub down: usize,
}

impl ShiftProfile {
    pub const fn new(up: usize, down: usize) -> Self {
        ShiftProfile { up, down }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator<T> {
    basis: FockBasis,
    matrix: SparseMatrix<T>,
    profile: ShiftProfile,
    // largest column length on which truncation changes nothing (-1: none)
    interior: isize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    LCreate(Letter),
    LAnnihilate(Letter),
    RCreate(Letter),
    RAnnihilate(Letter),
    Semicircular(Letter),
    VacuumProjection,
}

/// Scalars whose spans can be measured: exactly over `Q`, by singular values over `f64`.
pub trait Rankable: Scalar {
    fn rank_of(vectors: &[Vec<(usize, Self)>], rel_tol: f64) -> usize;
}

fn support(vectors: &[Vec<(usize, impl Clone)>]) -> BTreeMap<usize, usize> {
    let rows: BTreeSet<usize> = vectors.iter().flatten().map(|e| e.0).collect();
    rows.into_iter().enumerate().map(|(k, r)| (r, k)).collect()
}

impl Rankable for Q {
    fn rank_of(vectors: &[Vec<(usize, Q)>], _rel_tol: f64) -> usize {
        let pos = support(vectors);
        let dense: Vec<Vec<Q>> = vectors
            .iter()
            .map(|v| {
                let mut row = vec![Q::zero(); pos.len()];
                for (i, x) in v {
                    row[pos[i]] = x.clone();
                }
                row
            })
            .collect();
        linalg::rank(&dense)
    }
}

impl Rankable for f64 {
    fn rank_of(vectors: &[Vec<(usize, f64)>], rel_tol: f64) -> usize {
        let pos = support(vectors);
        let mut m = DMatrix::zeros(pos.len(), vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            for (i, x) in v {
                m[(pos[i], j)] = *x;
            }
        }
        linalg::numeric_rank(&m, rel_tol)
    }
}

impl<T: Scalar> FockOperator<T> {
    pub fn scalar(basis: &FockBasis, c: T) -> Result<Self, FockError> {
        basis.require_dense()?;
        Ok(FockOperator {
            basis: basis.clone(),
            matrix: SparseMatrix::scalar(basis.dim(), c),
            profile: ShiftProfile::new(0, 0),
            interior: basis.n as isize,
        })
    }

    pub fn identity(basis: &FockBasis) -> Result<Self, FockError> {
        Self::scalar(basis, T::one())
    }

    #[cfg(test)]
    pub(crate) fn from_parts(
        basis: &FockBasis,
        matrix: SparseMatrix<T>,
        profile: ShiftProfile,
        interior: isize,
    ) -> Self {
        FockOperator {
            basis: basis.clone(),
            matrix,
            profile,
            interior,
        }
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &SparseMatrix<T> {
        &self.matrix
    }

    pub fn profile(&self) -> ShiftProfile {
        self.profile
    }

    /// Largest column length on which this operator is truncation-exact, if any.
    pub fn interior(&self) -> Option<usize> {
        (self.interior >= 0).then_some(self.interior as usize)
    }

    pub fn mul(&self, other: &Self) -> Self {
        FockOperator {
            basis: self.basis.clone(),
            matrix: self.matrix.matmul(&other.matrix),
            profile: ShiftProfile::new(
                self.profile.up + other.profile.up,
                self.profile.down + other.profile.down,
            ),
            interior: other
                .interior
                .min(self.interior - other.profile.up as isize),
        }
    }

    fn combine(&self, other: &Self, matrix: SparseMatrix<T>) -> Self {
        FockOperator {
            basis: self.basis.clone(),
            matrix,
            profile: ShiftProfile::new(
                self.profile.up.max(other.profile.up),
                self.profile.down.max(other.profile.down),
            ),
            interior: self.interior.min(other.interior),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, self.matrix.add(&other.matrix))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, self.matrix.sub(&other.matrix))
    }

    pub fn scale(&self, c: &T) -> Self {
        FockOperator {
            matrix: self.matrix.scale(c),
            ..self.clone()
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.matrix.mul_vec(x)
    }

    pub fn to_f64(&self) -> FockOperator<f64> {
        FockOperator {
            basis: self.basis.clone(),
            matrix: self.matrix.to_f64(),
            profile: self.profile,
            interior: self.interior,
        }
    }

    /// Columns for every word of length `≤ max_len`, as sparse lists.
    pub fn columns_up_to(&self, max_len: usize) -> Vec<Vec<(usize, T)>> {
        let count = self.basis.count_up_to(max_len);
        let t = self.matrix.transpose();
        (0..count).map(|j| t.row(j).to_vec()).collect()
    }

    /// Entrywise equality on every column of length `≤ max_len`.
    pub fn agrees_on_columns(&self, other: &Self, max_len: usize) -> bool {
        self.columns_up_to(max_len) == other.columns_up_to(max_len)
    }

    /// `τ_Ω(A) = ⟨A Ω, Ω⟩`.
    pub fn vacuum_expectation(&self) -> T {
        self.matrix.get(0, 0)
    }

    fn check_margin(&self, margin: usize) -> Result<Option<usize>, FockError> {
        let last = self.basis.n as isize - margin as isize - 1;
        if margin < self.profile.up || last > self.interior {
            return Err(FockError::MarginTooSmall {
                margin,
                exact: self.interior,
                up: self.profile.up,
            });
        }
        Ok((last >= 0).then_some(last as usize))
    }
}

impl<T: Rankable> FockOperator<T> {
    /// Rank of the columns indexed by words of length `≤ N - margin - 1`.
    pub fn interior_rank(&self, margin: usize, rel_tol: f64) -> Result<usize, FockError> {
        let Some(last) = self.check_margin(margin)? else {
            return Ok(0);
        };
        Ok(T::rank_of(&self.columns_up_to(last), rel_tol))
    }
}

pub fn build_operator<T: Scalar>(
    basis: &FockBasis,
    kind: OperatorKind,
) -> Result<FockOperator<T>, FockError> {
    basis.require_dense()?;
    let n = basis.n as isize;
    let dim = basis.dim();
    let map = |f: &dyn Fn(usize) -> Option<usize>| {
        SparseMatrix::from_triplets(
            dim,
            dim,
            (0..dim).filter_map(|j| f(j).map(|i| (i, j, T::one()))),
        )
    };
    let (matrix, profile, interior) = match kind {
        OperatorKind::LCreate(i) => {
            basis.check_letter(i)?;
            (
                map(&|j| basis.l_create(i, j)),
                ShiftProfile::new(1, 0),
                n - 1,
            )
        }
        OperatorKind::LAnnihilate(i) => {
            basis.check_letter(i)?;
            (
                map(&|j| basis.l_annihilate(i, j)),
                ShiftProfile::new(0, 1),
                n,
            )
        }
        OperatorKind::RCreate(i) => {
            basis.check_letter(i)?;
            (
                map(&|j| basis.r_create(i, j)),
                ShiftProfile::new(1, 0),
                n - 1,
            )
        }
        OperatorKind::RAnnihilate(i) => {
            basis.check_letter(i)?;
            (
                map(&|j| basis.r_annihilate(i, j)),
                ShiftProfile::new(0, 1),
                n,
            )
        }
        OperatorKind::Semicircular(i) => {
            basis.check_letter(i)?;
            let m = map(&|j| basis.l_create(i, j)).add(&map(&|j| basis.l_annihilate(i, j)));
            (m, ShiftProfile::new(1, 1), n - 1)
        }
        OperatorKind::VacuumProjection => (
            SparseMatrix::from_triplets(dim, dim, [(0, 0, T::one())]),
            ShiftProfile::new(0, 0),
            n,
        ),
    };
    Ok(FockOperator {
        basis: basis.clone(),
        matrix,
        profile,
        interior,
    })
}

/// `U_k(s_i)` from `U_{k+1} = s U_k - U_{k-1}`.
pub fn chebyshev_power<T: Scalar>(
    basis: &FockBasis,
    i: Letter,
    k: usize,
) -> Result<FockOperator<T>, FockError> {
    let s = build_operator::<T>(basis, OperatorKind::Semicircular(i))?;
    let mut prev = FockOperator::identity(basis)?;
    if k == 0 {
        return Ok(prev);
    }
    let mut cur = s.clone();
    for _ in 1..k {
        let next = s.mul(&cur).sub(&prev);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

fn check_word(basis: &FockBasis, v: &Word) -> Result<(), FockError> {
    if v.len() > basis.n {
        return Err(FockError::WordTooLong {
            len: v.len(),
            n: basis.n,
        });
    }
    if v.max_letter() as usize > basis.d {
        return Err(FockError::LetterOutOfRange {
            letter: v.max_letter(),
            d: basis.d,
        });
    }
    Ok(())
}

/// `U_v = U_{k_1}(s_{i_1}) ⋯ U_{k_n}(s_{i_n})` over the runs of `v`, as a product of
/// truncated matrices.
pub fn chebyshev_operator_recursive<T: Scalar>(
    basis: &FockBasis,
    v: &Word,
) -> Result<FockOperator<T>, FockError> {
    check_word(basis, v)?;
    let mut acc = FockOperator::identity(basis)?;
    for (i, k) in v.runs() {
        acc = acc.mul(&chebyshev_power(basis, i, k)?);
    }
    Ok(acc)
}

/// Column `w` of `U_v` as a word map: `Σ_k e_{v_1⋯v_k w'}` over the `k` for which
/// `w = v_m v_{m-1} ⋯ v_{k+1} w'`.
fn chebyshev_column(basis: &FockBasis, v: &Word, prefix_r: &[usize], w: usize) -> Vec<usize> {
    let m = v.len();
    let mut out = Vec::new();
    let mut cur = Some(w);
    for k in (0..=m).rev() {
        let Some(c) = cur else { break };
        if let Some(idx) = basis.prepend(k, prefix_r[k], c) {
            out.push(idx);
        }
        if k > 0 {
            cur = basis.l_annihilate(v.letters()[k - 1], c);
        }
    }
    out
}

fn prefix_values(basis: &FockBasis, v: &Word) -> Vec<usize> {
    let mut out = vec![0usize];
    for a in v.letters() {
        let last = *out.last().expect("non-empty");
        out.push(last * basis.d + a.slot());
    }
    out
}

/// `U_v = Σ_{k=0}^{m} l_{v_1}⋯l_{v_k} l^*_{v_{k+1}}⋯l^*_{v_m}` applied column by column.
pub fn chebyshev_operator<T: Scalar>(
    basis: &FockBasis,
    v: &Word,
) -> Result<FockOperator<T>, FockError> {
    check_word(basis, v)?;
    basis.require_dense()?;
    let dim = basis.dim();
    let pr = prefix_values(basis, v);
    let matrix = SparseMatrix::from_triplets(
        dim,
        dim,
        (0..dim).flat_map(|j| {
            chebyshev_column(basis, v, &pr, j)
                .into_iter()
                .map(move |i| (i, j, T::one()))
        }),
    );
    Ok(FockOperator {
        basis: basis.clone(),
        matrix,
        profile: ShiftProfile::new(v.len(), v.len()),
        interior: basis.n as isize - v.len() as isize,
    })
}

/// `Σ_v α_v U_v` from the word-map form.
pub fn chebyshev_combination<T: Scalar>(
    basis: &FockBasis,
    alpha: &[(Word, T)],
) -> Result<FockOperator<T>, FockError> {
    basis.require_dense()?;
    let dim = basis.dim();
    let mut triplets = Vec::new();
    let mut up = 0;
    for (v, a) in alpha {
        check_word(basis, v)?;
        up = up.max(v.len());
        let pr = prefix_values(basis, v);
        for j in 0..dim {
            for i in chebyshev_column(basis, v, &pr, j) {
                triplets.push((i, j, a.clone()));
            }
        }
    }
    Ok(FockOperator {
        basis: basis.clone(),
        matrix: SparseMatrix::from_triplets(dim, dim, triplets),
        profile: ShiftProfile::new(up, up),
        interior: basis.n as isize - up as isize,
    })
}

/// `s_i x` on a dense vector.
pub fn semicircular_apply<T: Scalar>(basis: &FockBasis, i: Letter, x: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); x.len()];
    for (j, xj) in x.iter().enumerate() {
        if xj.is_zero() {
            continue;
        }
        if let Some(k) = basis.l_create(i, j) {
            y[k] = y[k].clone() + xj.clone();
        }
        if let Some(k) = basis.l_annihilate(i, j) {
            y[k] = y[k].clone() + xj.clone();
        }
    }
    y
}

/// `U_v x` by running the three-term recursion run by run on vectors.
pub fn apply_chebyshev<T: Scalar>(basis: &FockBasis, v: &Word, x: &[T]) -> Vec<T> {
    let mut cur = x.to_vec();
    for (i, k) in v.runs().into_iter().rev() {
        let mut prev = cur.clone();
        let mut now = semicircular_apply(basis, i, &cur);
        for _ in 1..k {
            let s = semicircular_apply(basis, i, &now);
            let next: Vec<T> = s
                .into_iter()
                .zip(&prev)
                .map(|(a, b)| a - b.clone())
                .collect();
            prev = now;
            now = next;
        }
        cur = now;
    }
    cur
}

pub fn vacuum<T: Scalar>(basis: &FockBasis) -> Result<Vec<T>, FockError> {
    basis.require_dense()?;
    let mut x = vec![T::zero(); basis.dim()];
    x[0] = T::one();
    Ok(x)
}

/// Operator of an inverse-free expression, built from truncated `s_i`.
pub fn operator_of_expr<T: Scalar>(
    basis: &FockBasis,
    expr: &RationalExpr,
) -> Result<FockOperator<T>, FockError> {
    Ok(match expr {
        RationalExpr::Constant(c) => FockOperator::scalar(basis, T::from_q(c))?,
        RationalExpr::Generator(i) => build_operator(basis, OperatorKind::Semicircular(*i))?,
        RationalExpr::Sum(a, b) => operator_of_expr(basis, a)?.add(&operator_of_expr(basis, b)?),
        RationalExpr::Product(a, b) => {
            operator_of_expr(basis, a)?.mul(&operator_of_expr(basis, b)?)
        }
        RationalExpr::Negation(a) => operator_of_expr(basis, a)?.scale(&-T::one()),
        RationalExpr::Inverse(_) => return Err(FockError::ContainsInverse),
    })
}

/// `[r_i^*, A]`.
pub fn commutator<T: Scalar>(i: Letter, a: &FockOperator<T>) -> Result<FockOperator<T>, FockError> {
    let r = build_operator::<T>(a.basis(), OperatorKind::RAnnihilate(i))?;
    Ok(r.mul(a).sub(&a.mul(&r)))
}

/// `[r_i, A]`.
pub fn creation_commutator<T: Scalar>(
    i: Letter,
    a: &FockOperator<T>,
) -> Result<FockOperator<T>, FockError> {
    let r = build_operator::<T>(a.basis(), OperatorKind::RCreate(i))?;
    Ok(r.mul(a).sub(&a.mul(&r)))
}

/// The sub-alphabet an expression actually uses, relabelled `1..k`.
///
/// The span of `{e_u : u ∈ A*}` is invariant under every `s_i` with `i ∈ A`, so
/// evaluating on the smaller Fock space and renaming the letters back is exact.
#[derive(Debug, Clone)]
struct Reduction {
    letters: Vec<Letter>,
}

impl Reduction {
    fn of(used: impl IntoIterator<Item = Letter>) -> Self {
        let letters: BTreeSet<Letter> = used.into_iter().collect();
        Reduction {
            letters: letters.into_iter().collect(),
        }
    }

    fn d(&self) -> usize {
        self.letters.len().max(1)
    }

    fn forward(&self, a: Letter) -> Option<Letter> {
        self.letters
            .iter()
            .position(|x| *x == a)
            .map(|p| Letter::new(p as u16 + 1))
    }

    fn expr(&self, e: &RationalExpr) -> RationalExpr {
        e.map_letters(&|a| self.forward(a).expect("letter in reduction"))
    }

    fn word_back(&self, w: &Word) -> Word {
        Word::from_letters(
            w.letters()
                .iter()
                .map(|a| match self.letters.get(a.slot()) {
                    Some(orig) => orig.index(),
                    None => a.index(),
                }),
        )
    }
}

fn check_expr_letters(expr: &RationalExpr, d: usize) -> Result<(), FockError> {
    let m = expr.max_letter();
    if m as usize > d {
        return Err(FockError::LetterOutOfRange { letter: m, d });
    }
    Ok(())
}

enum Node {
    Const(Q),
    Gen(Letter),
    Sum(Box<Node>, Box<Node>),
    Prod(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Inv(
        Box<Node>,
        RationalExpr,
        OnceCell<Result<SparseLu, FockError>>,
    ),
}

/// Exact evaluator for expressions with inverses on one truncated basis.
/// Each inverse is a sparse LU of its truncated operand, factored on first use.
struct Evaluator {
    basis: FockBasis,
    root: Node,
}

impl Evaluator {
    fn new(basis: FockBasis, expr: &RationalExpr) -> Result<Self, FockError> {
        basis.require_dense()?;
        Ok(Evaluator {
            basis,
            root: Self::compile(expr),
        })
    }

    fn compile(e: &RationalExpr) -> Node {
        match e {
            RationalExpr::Constant(c) => Node::Const(c.clone()),
            RationalExpr::Generator(i) => Node::Gen(*i),
            RationalExpr::Sum(a, b) => {
                Node::Sum(Box::new(Self::compile(a)), Box::new(Self::compile(b)))
            }
            RationalExpr::Product(a, b) => {
                Node::Prod(Box::new(Self::compile(a)), Box::new(Self::compile(b)))
            }
            RationalExpr::Negation(a) => Node::Neg(Box::new(Self::compile(a))),
            RationalExpr::Inverse(a) => {
                Node::Inv(Box::new(Self::compile(a)), (**a).clone(), OnceCell::new())
            }
        }
    }

    fn apply(&self, x: &[Q]) -> Result<Vec<Q>, FockError> {
        self.apply_node(&self.root, x)
    }

    fn apply_node(&self, node: &Node, x: &[Q]) -> Result<Vec<Q>, FockError> {
        Ok(match node {
            Node::Const(c) => x.iter().map(|v| v * c).collect(),
            Node::Gen(i) => semicircular_apply(&self.basis, *i, x),
            Node::Sum(a, b) => {
                let (ya, yb) = (self.apply_node(a, x)?, self.apply_node(b, x)?);
                ya.into_iter().zip(yb).map(|(p, q)| p + q).collect()
            }
            Node::Prod(a, b) => {
                let y = self.apply_node(b, x)?;
                self.apply_node(a, &y)?
            }
            Node::Neg(a) => self.apply_node(a, x)?.into_iter().map(|v| -v).collect(),
            Node::Inv(a, expr, cell) => {
                let lu = cell.get_or_init(|| self.factor(a, expr));
                lu.as_ref().map_err(Clone::clone)?.solve(x)
            }
        })
    }

    fn factor(&self, node: &Node, expr: &RationalExpr) -> Result<SparseLu, FockError> {
        let matrix = if expr.has_inverse() {
            let dim = self.basis.dim();
            let mut triplets = Vec::new();
            for j in 0..dim {
                let mut e = vec![Q::zero(); dim];
                e[j] = Q::one();
                for (i, v) in self.apply_node(node, &e)?.into_iter().enumerate() {
                    if !v.is_zero() {
                        triplets.push((i, j, v));
                    }
                }
            }
            SparseMatrix::from_triplets(dim, dim, triplets)
        } else {
            operator_of_expr::<Q>(&self.basis, expr)?.matrix
        };
        SparseLu::factor(&matrix).map_err(|col| FockError::NotInvertible {
            truncation: self.basis.n,
            word: self.basis.word(col).to_string(),
        })
    }
}

/// `â = aΩ` for an inverse-free expression, exactly.
pub fn apply_to_vacuum(expr: &RationalExpr, basis: &FockBasis) -> Result<FockVector<Q>, FockError> {
    check_expr_letters(expr, basis.d)?;
    let degree = expr.degree().ok_or(FockError::ContainsInverse)?;
    if degree > basis.n {
        return Err(FockError::DegreeTooHigh { degree, n: basis.n });
    }
    let red = Reduction::of(expr.letters());
    let work = FockBasis::new(red.d(), basis.n.min(degree))?;
    let ev = Evaluator::new(work.clone(), &red.expr(expr))?;
    let y = ev.apply(&vacuum(&work)?)?;
    Ok(FockVector::from_dense(basis.d, basis.n, &work, &y, &red))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VacuumSolution {
    pub vector: FockVector<Q>,
    /// `ℓ²` norm of the top level `|v| = N` of the truncated solution.
    pub boundary_mass: f64,
    /// Alphabet size of the invariant subspace the solve ran on.
    pub working_d: usize,
}

/// `aΩ` for an expression that may contain inverses: every inverse is an exact
/// solve of the truncated operand. The result approximates the untruncated
/// vector; see [`expr_to_series`] for the error model.
pub fn solve_on_vacuum(
    expr: &RationalExpr,
    basis: &FockBasis,
) -> Result<VacuumSolution, FockError> {
    solve_reduced(expr, basis.d, basis.n)
}

// Only the used letters need a dense basis, so `d^n` may be far beyond the budget.
fn solve_reduced(expr: &RationalExpr, d: usize, n: usize) -> Result<VacuumSolution, FockError> {
    check_expr_letters(expr, d)?;
    let red = Reduction::of(expr.letters());
    let work = FockBasis::new(red.d(), n)?;
    let ev = Evaluator::new(work.clone(), &red.expr(expr))?;
    let y = ev.apply(&vacuum(&work)?)?;
    let top = work.offsets[work.n];
    let boundary_mass = y[top..]
        .iter()
        .map(|v| q_to_f64(v).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(VacuumSolution {
        vector: FockVector::from_dense(d, n, &work, &y, &red),
        boundary_mass,
        working_d: red.d(),
    })
}

/// Knobs for truncated evaluation of expressions with inverses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalOptions {
    /// Largest working basis dimension.
    pub budget: usize,
    /// Target for the reported coefficient error bound.
    pub tol: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            budget: 4096,
            tol: 1e-8,
        }
    }
}

/// Largest truncation `N ≤ cap` whose basis over `d` letters fits the budget.
fn truncation_for_budget(d: usize, budget: usize, cap: usize) -> usize {
    let mut n = 0;
    while n < cap {
        match FockBasis::new(d, n + 1) {
            Ok(b) if b.dim() <= budget => n += 1,
            _ => break,
        }
    }
    n
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEval {
    #[serde(skip)]
    pub table: SeriesTable,
    pub exact: bool,
    /// Uniform bound on `|computed - true|` over the table (zero when exact).
    pub error_bound: f64,
    /// Working truncation used for the solve.
    pub truncation: usize,
    pub boundary_mass: f64,
    pub decay: Option<DecayEstimate>,
}

/// Chebyshev-basis coefficients of `aΩ` up to degree `max_degree`.
///
/// Inverse-free expressions are evaluated exactly. Otherwise the truncation
/// grows (within `opts.budget`) until `√(M c^{N-L}) + boundary ≤ tol`, where
/// `(M, c)` is the fitted decay of the level sums on the trustworthy lower
/// half of the levels.
pub fn expr_to_series(
    expr: &RationalExpr,
    d: usize,
    max_degree: usize,
    opts: &EvalOptions,
) -> Result<SeriesEval, FockError> {
    check_expr_letters(expr, d)?;
    if let Some(degree) = expr.degree() {
        let n = degree.max(1);
        let v = apply_to_vacuum(expr, &FockBasis::new(d, n)?)?;
        return Ok(SeriesEval {
            table: v.to_series(max_degree).truncate(max_degree),
            exact: true,
            error_bound: 0.0,
            truncation: n,
            boundary_mass: 0.0,
            decay: None,
        });
    }
    let wd = Reduction::of(expr.letters()).d();
    let cap = truncation_for_budget(wd, opts.budget, 4 * max_degree + 32).max(max_degree);
    let mut n = (max_degree + 8).min(cap);
    loop {
        let sol = solve_reduced(expr, d, n)?;
        let trusted = sol.vector.to_series(n / 2);
        let decay = fitted_decay(&trusted.level_square_sums()).ok();
        let tail = decay
            .as_ref()
            .map_or(f64::INFINITY, |e| e.bound(n - max_degree.min(n)).sqrt());
        let error_bound = tail + sol.boundary_mass;
        if error_bound <= opts.tol || n >= cap {
            let table = sol.vector.to_series(max_degree.min(n));
            let table = SeriesTable::from_terms(
                d,
                max_degree,
                table.terms().map(|(w, c)| (w.clone(), c.clone())),
            )
            .expect("words fit");
            return Ok(SeriesEval {
                table,
                exact: false,
                error_bound,
                truncation: n,
                boundary_mass: sol.boundary_mass,
                decay,
            });
        }
        n = (2 * n).min(cap);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorRank {
    pub letter: u16,
    pub mode: RankMode,
    pub rank_n: usize,
    pub rank_n1: usize,
    pub stable: bool,
    /// Largest column length used.
    pub interior: usize,
}

/// Interior ranks of `[r_i^*, a]` for every letter, at truncations `N` and `N + 1`.
///
/// Letters outside the expression's alphabet give the zero commutator. For
/// inverse-free `a` the ranks are exact with margin `deg a`; otherwise the
/// columns `|w| ≤ N` of `a` are computed at a larger working truncation and
/// the rank is taken from singular values.
pub fn expr_commutator_ranks(
    expr: &RationalExpr,
    d: usize,
    n: usize,
    rel_tol: f64,
    opts: &EvalOptions,
) -> Result<Vec<CommutatorRank>, FockError> {
    check_expr_letters(expr, d)?;
    let red = Reduction::of(expr.letters());
    let mut out = Vec::new();
    let per_truncation = |nn: usize| -> Result<(Vec<usize>, usize, RankMode), FockError> {
        let mut ranks = vec![0; d];
        if let Some(g) = expr.degree() {
            let work = FockBasis::new(red.d(), nn)?;
            let a = operator_of_expr::<Q>(&work, &red.expr(expr))?;
            for (k, orig) in red.letters.iter().enumerate() {
                let c = commutator(Letter::new(k as u16 + 1), &a)?;
                ranks[orig.slot()] = c.interior_rank(g, 0.0)?;
            }
            let interior = nn.saturating_sub(g + 1);
            Ok((ranks, interior, RankMode::Exact))
        } else {
            let cols = inverse_columns(expr, &red, nn, opts)?;
            for (k, orig) in red.letters.iter().enumerate() {
                let c = commutator_columns(&cols, Letter::new(k as u16 + 1));
                ranks[orig.slot()] = f64::rank_of(&c.columns, rel_tol);
            }
            Ok((ranks, nn, RankMode::Numeric))
        }
    };
    let (r0, interior, mode) = per_truncation(n)?;
    let (r1, _, _) = per_truncation(n + 1)?;
    for a in 0..d {
        out.push(CommutatorRank {
            letter: a as u16 + 1,
            mode,
            rank_n: r0[a],
            rank_n1: r1[a],
            stable: r0[a] == r1[a],
            interior,
        });
    }
    Ok(out)
}

struct InverseColumns {
    work: FockBasis,
    // a e_w for every |w| ≤ interior, as f64 vectors on the working basis
    columns: Vec<Vec<f64>>,
    interior: usize,
}

fn inverse_columns(
    expr: &RationalExpr,
    red: &Reduction,
    interior: usize,
    opts: &EvalOptions,
) -> Result<InverseColumns, FockError> {
    let cap = truncation_for_budget(red.d(), opts.budget, 4 * interior + 32).max(interior + 1);
    let work = FockBasis::new(red.d(), cap)?;
    let ev = Evaluator::new(work.clone(), &red.expr(expr))?;
    let count = work.count_up_to(interior);
    let mut columns = Vec::with_capacity(count);
    for j in 0..count {
        let mut e = vec![Q::zero(); work.dim()];
        e[j] = Q::one();
        columns.push(ev.apply(&e)?.iter().map(q_to_f64).collect());
    }
    Ok(InverseColumns {
        work,
        columns,
        interior,
    })
}

struct SparseColumns {
    columns: Vec<Vec<(usize, f64)>>,
}

/// `[r_i^*, a] e_w = r_i^*(a e_w) - [w ends in i] a e_{w i⁻¹}`.
fn commutator_columns(cols: &InverseColumns, i: Letter) -> SparseColumns {
    let work = &cols.work;
    let columns = (0..work.count_up_to(cols.interior))
        .map(|j| {
            let mut y = vec![0.0; work.dim()];
            for (k, v) in cols.columns[j].iter().enumerate() {
                if let Some(t) = work.r_annihilate(i, k) {
                    y[t] += v;
                }
            }
            if let Some(jj) = work.r_annihilate(i, j) {
                for (t, v) in cols.columns[jj].iter().enumerate() {
                    y[t] -= v;
                }
            }
            y.into_iter()
                .enumerate()
                .filter(|(_, v)| *v != 0.0)
                .collect()
        })
        .collect();
    SparseColumns { columns }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSpan {
    /// Rank of the interior image of `[r_i^*, a]`, per letter.
    pub image_ranks: Vec<usize>,
    /// Dimension of the span of all commutator images together with `â`.
    pub span_dim: usize,
}

/// Dimension of the span of the right quotients of `â`, read off from commutator images.
///
/// `[r_i^*, a] e_w` is the right quotient of `â` by `i w^*`, so the images over
/// all `i` together with `â` itself span every right shift of the series.
pub fn shift_span_dimension(
    expr: &RationalExpr,
    d: usize,
    n: usize,
) -> Result<ShiftSpan, FockError> {
    check_expr_letters(expr, d)?;
    let g = expr.degree().ok_or(FockError::ContainsInverse)?;
    let red = Reduction::of(expr.letters());
    let work = FockBasis::new(red.d(), n)?;
    let a = operator_of_expr::<Q>(&work, &red.expr(expr))?;
    let mut image_ranks = vec![0; d];
    let mut all: Vec<Vec<(usize, Q)>> = vec![a.columns_up_to(0).remove(0)];
    for (k, orig) in red.letters.iter().enumerate() {
        let c = commutator(Letter::new(k as u16 + 1), &a)?;
        let Some(last) = c.check_margin(g)? else {
            continue;
        };
        let cols = c.columns_up_to(last);
        image_ranks[orig.slot()] = Q::rank_of(&cols, 0.0);
        all.extend(cols);
    }
    Ok(ShiftSpan {
        image_ranks,
        span_dim: Q::rank_of(&all, 0.0),
    })
}

/// `Û_v = U_v Ω = e_v`, with `U_v` built as a product of truncated `U_k(s_i)`.
pub fn chebyshev_vacuum_check(v: &Word, basis: &FockBasis) -> Result<bool, FockError> {
    let u = chebyshev_operator_recursive::<Q>(basis, v)?;
    let idx = basis.index(v).expect("checked length");
    Ok(u.matrix.column(0) == vec![(idx, Q::one())])
}

/// `[r_i^*, U_v] Û_w = Û_{v (i w*)⁻¹}` for every `|w| ≤ N - |v|`, where `w*` is
/// `w` reversed and a `Zero` quotient means the left side vanishes.
pub fn fundamental_equality_check(
    i: Letter,
    v: &Word,
    basis: &FockBasis,
) -> Result<bool, FockError> {
    basis.check_letter(i)?;
    let c = commutator(i, &chebyshev_operator::<Q>(basis, v)?)?;
    let cols = c.columns_up_to(basis.n - v.len());
    Ok(cols.iter().enumerate().all(|(col, got)| {
        let w = basis.word(col);
        let expected = match right_quotient(v, &Word::single(i).concat(&w.transpose())) {
            Quotient::Word(u) => vec![(basis.index(&u).expect("shorter than v"), Q::one())],
            Quotient::Zero => Vec::new(),
        };
        *got == expected
    }))
}

/// `[r_i^*, U_k(s_j)] = δ_{ij} Σ_{l=1}^{k} U_{l-1}(s_j) P_Ω U_{k-l}(s_j)` on columns `|w| ≤ N - k - 1`.
pub fn dual_system_check(
    i: Letter,
    j: Letter,
    k: usize,
    basis: &FockBasis,
) -> Result<bool, FockError> {
    if k + 1 > basis.n {
        return Err(FockError::DegreeTooHigh {
            degree: k + 1,
            n: basis.n,
        });
    }
    let lhs = commutator(i, &chebyshev_power::<Q>(basis, j, k)?)?;
    let p = build_operator::<Q>(basis, OperatorKind::VacuumProjection)?;
    let mut rhs = FockOperator::scalar(basis, Q::zero())?;
    if i == j {
        for l in 1..=k {
            let term = chebyshev_power::<Q>(basis, j, l - 1)?
                .mul(&p)
                .mul(&chebyshev_power(basis, j, k - l)?);
            rhs = rhs.add(&term);
        }
    }
    Ok(lhs.agrees_on_columns(&rhs, basis.n - k - 1))
}

/// `[r_i, A] = -[r_i^*, A]` on columns `|w| ≤ N - g - 1`, `g` the upward shift of `A`.
pub fn creation_antisymmetry_check(i: Letter, a: &FockOperator<Q>) -> Result<bool, FockError> {
    let g = a.profile().up;
    let n = a.basis().n;
    if g + 1 > n {
        return Err(FockError::DegreeTooHigh { degree: g + 1, n });
    }
    let sum = creation_commutator(i, a)?.add(&commutator(i, a)?);
    let zero = FockOperator::scalar(a.basis(), Q::zero())?;
    Ok(sum.agrees_on_columns(&zero, n - g - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffiliatedRank {
    pub letter: u16,
    pub margin: usize,
    pub rank: usize,
}

/// Interior rank of `f r_i^* b - a r_i^* g` for inverse-free `f, a, b, g`, required
/// to agree at truncations `N` and `N + 1`.
pub fn affiliated_rank_check(
    f: &RationalExpr,
    a: &RationalExpr,
    b: &RationalExpr,
    g: &RationalExpr,
    i: Letter,
    basis: &FockBasis,
) -> Result<AffiliatedRank, FockError> {
    let deg = |e: &RationalExpr| e.degree().ok_or(FockError::ContainsInverse);
    let margin = (deg(f)? + deg(b)?).max(deg(a)? + deg(g)?);
    for e in [f, a, b, g] {
        check_expr_letters(e, basis.d)?;
    }
    basis.check_letter(i)?;
    let rank_at = |n: usize| -> Result<usize, FockError> {
        let basis = FockBasis::new(basis.d, n)?;
        let op = |e: &RationalExpr| operator_of_expr::<Q>(&basis, e);
        let r = build_operator::<Q>(&basis, OperatorKind::RAnnihilate(i))?;
        let x = op(f)?
            .mul(&r)
            .mul(&op(b)?)
            .sub(&op(a)?.mul(&r).mul(&op(g)?));
        x.interior_rank(margin, 0.0)
    };
    let (rank_n, rank_n1) = (rank_at(basis.n)?, rank_at(basis.n + 1)?);
    if rank_n != rank_n1 {
        return Err(FockError::Unstable { rank_n, rank_n1 });
    }
    Ok(AffiliatedRank {
        letter: i.index(),
        margin,
        rank: rank_n,
    })
}

/// `τ_Ω(A) = ⟨AΩ, Ω⟩`.
pub fn vacuum_expectation<T: Scalar>(a: &FockOperator<T>) -> T {
    a.vacuum_expectation()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::qi;
    use crate::word::{enumerate_words, right_quotient};

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn l(i: u16) -> Letter {
        Letter::new(i)
    }

    fn e(s: &str) -> RationalExpr {
        s.parse().unwrap()
    }

    fn column_words(op: &FockOperator<Q>, v: &Word) -> Vec<(Word, Q)> {
        let b = op.basis();
        let j = b.index(v).unwrap();
        op.matrix()
            .column(j)
            .into_iter()
            .map(|(i, x)| (b.word(i), x))
            .collect()
    }

    #[test]
    fn basis_indexing() {
        let b = FockBasis::new(2, 3).unwrap();
        assert_eq!(b.dim(), 15);
        assert_eq!(b.index(&Word::empty()), Some(0));
        for (k, v) in enumerate_words(2, 3).iter().enumerate() {
            assert_eq!(b.index(v), Some(k));
            assert_eq!(&b.word(k), v);
            assert_eq!(b.len_of(k), v.len());
        }
        assert_eq!(b.index(&w("1 1 1 1")), None);
        assert_eq!(FockBasis::new(1, 30).unwrap().dim(), 31);
        assert_eq!(FockBasis::new(2, 30).unwrap().dim(), (1 << 31) - 1);
    }

    #[test]
    fn generator_actions() {
        let b = FockBasis::new(2, 4).unwrap();
        let r2 = build_operator::<Q>(&b, OperatorKind::RAnnihilate(l(2))).unwrap();
        assert_eq!(column_words(&r2, &w("1 2")), vec![(w("1"), qi(1))]);
        let l1s = build_operator::<Q>(&b, OperatorKind::LAnnihilate(l(1))).unwrap();
        assert!(column_words(&l1s, &Word::empty()).is_empty());
        let s1 = build_operator::<Q>(&b, OperatorKind::Semicircular(l(1))).unwrap();
        assert_eq!(column_words(&s1, &Word::empty()), vec![(w("1"), qi(1))]);
        assert_eq!(
            column_words(&s1, &w("1 2")),
            vec![(w("2"), qi(1)), (w("1 1 2"), qi(1))]
        );
        assert!(build_operator::<Q>(&b, OperatorKind::LCreate(l(3))).is_err());
    }

    #[test]
    fn adjoint_pairs() {
        let b = FockBasis::new(3, 3).unwrap();
        for i in 1..=3 {
            let pairs = [
                (OperatorKind::LCreate(l(i)), OperatorKind::LAnnihilate(l(i))),
                (OperatorKind::RCreate(l(i)), OperatorKind::RAnnihilate(l(i))),
            ];
            for (c, a) in pairs {
                let c = build_operator::<Q>(&b, c).unwrap();
                let a = build_operator::<Q>(&b, a).unwrap();
                assert_eq!(c.matrix().transpose(), *a.matrix());
            }
        }
    }

    #[test]
    fn left_and_right_commute_inside() {
        let b = FockBasis::new(2, 5).unwrap();
        for i in 1..=2 {
            for j in 1..=2 {
                let li = build_operator::<Q>(&b, OperatorKind::LCreate(l(i))).unwrap();
                let rj = build_operator::<Q>(&b, OperatorKind::RCreate(l(j))).unwrap();
                assert!(li.mul(&rj).agrees_on_columns(&rj.mul(&li), 3));
                let ls = build_operator::<Q>(&b, OperatorKind::LAnnihilate(l(i))).unwrap();
                let rs = build_operator::<Q>(&b, OperatorKind::RAnnihilate(l(j))).unwrap();
                assert!(ls.mul(&rj).agrees_on_columns(&rj.mul(&ls), 3) || i == j);
                assert!(li.mul(&rs).agrees_on_columns(&rs.mul(&li), 3) || i == j);
            }
        }
    }

    #[test]
    fn chebyshev_examples() {
        let b = FockBasis::new(2, 4).unwrap();
        let s1 = build_operator::<Q>(&b, OperatorKind::Semicircular(l(1))).unwrap();
        assert_eq!(
            chebyshev_operator::<Q>(&b, &w("1")).unwrap().matrix(),
            s1.matrix()
        );
        let omega = vacuum::<Q>(&b).unwrap();
        for v in ["1 1", "1 2", "2 1 1"] {
            let y = apply_chebyshev(&b, &w(v), &omega);
            let mut want = vec![qi(0); b.dim()];
            want[b.index(&w(v)).unwrap()] = qi(1);
            assert_eq!(y, want, "{v}");
        }
        assert!(matches!(
            chebyshev_operator::<Q>(&b, &w("1 1 1 1 1")),
            Err(FockError::WordTooLong { len: 5, n: 4 })
        ));
    }

    #[test]
    fn chebyshev_routes_agree_inside() {
        let b = FockBasis::new(2, 6).unwrap();
        for v in enumerate_words(2, 4) {
            let a = chebyshev_operator::<Q>(&b, &v).unwrap();
            let r = chebyshev_operator_recursive::<Q>(&b, &v).unwrap();
            assert_eq!(a.profile(), ShiftProfile::new(v.len(), v.len()));
            assert_eq!(r.interior(), Some(6 - v.len()));
            assert!(a.agrees_on_columns(&r, 6 - v.len()), "{v}");
        }
    }

    #[test]
    fn vacuum_images() {
        let b = FockBasis::new(2, 4).unwrap();
        let v = apply_to_vacuum(&e("s1*s1"), &b).unwrap();
        assert_eq!(v.terms().count(), 2);
        assert_eq!(v.coeff(&Word::empty()), qi(1));
        assert_eq!(v.coeff(&w("1 1")), qi(1));
        let v = apply_to_vacuum(&e("1"), &b).unwrap();
        assert_eq!(
            v.terms().collect::<Vec<_>>(),
            vec![(&Word::empty(), &qi(1))]
        );
        let v = apply_to_vacuum(&e("s1*s2"), &b).unwrap();
        assert_eq!(v.terms().collect::<Vec<_>>(), vec![(&w("1 2"), &qi(1))]);
        assert!(matches!(
            apply_to_vacuum(&e("s1^5"), &b),
            Err(FockError::DegreeTooHigh { degree: 5, n: 4 })
        ));
        assert_eq!(
            apply_to_vacuum(&e("(1 - s1)^-1"), &b),
            Err(FockError::ContainsInverse)
        );
    }

    #[test]
    fn solves() {
        let b = FockBasis::new(2, 30).unwrap();
        let sol = solve_on_vacuum(&e("(5/2 - s1)^-1"), &b).unwrap();
        assert_eq!(sol.working_d, 1);
        for n in 0..=10 {
            let got = q_to_f64(&sol.vector.coeff(&Word::power(l(1), n)));
            assert!((got - 0.5f64.powi(n as i32 + 1)).abs() < 1e-8);
        }
        assert_eq!(sol.vector.coeff(&w("2")), qi(0));
        let one = solve_on_vacuum(&e("1^-1"), &b).unwrap();
        assert_eq!(
            one.vector.terms().collect::<Vec<_>>(),
            vec![(&Word::empty(), &qi(1))]
        );
        assert!(matches!(
            solve_on_vacuum(&e("(0)^-1"), &b),
            Err(FockError::NotInvertible { .. })
        ));
    }

    #[test]
    fn expectations_are_catalan() {
        let catalan = [1, 1, 2, 5, 14, 42];
        for (n, c) in catalan.iter().enumerate() {
            let b = FockBasis::new(2, 2 * n).unwrap();
            let s = build_operator::<Q>(&b, OperatorKind::Semicircular(l(1))).unwrap();
            let mut p = FockOperator::identity(&b).unwrap();
            for _ in 0..2 * n {
                p = p.mul(&s);
            }
            assert_eq!(vacuum_expectation(&p), qi(*c));
        }
        let b = FockBasis::new(1, 3).unwrap();
        assert_eq!(
            vacuum_expectation(&FockOperator::<Q>::identity(&b).unwrap()),
            qi(1)
        );
    }

    #[test]
    fn commutator_examples() {
        let b = FockBasis::new(2, 6).unwrap();
        let s1 = build_operator::<Q>(&b, OperatorKind::Semicircular(l(1))).unwrap();
        let c = commutator(l(1), &s1).unwrap();
        let p = build_operator::<Q>(&b, OperatorKind::VacuumProjection).unwrap();
        assert!(c.agrees_on_columns(&p, 4));
        assert_eq!(c.interior_rank(1, 0.0).unwrap(), 1);
        assert_eq!(
            commutator(l(2), &s1)
                .unwrap()
                .interior_rank(1, 0.0)
                .unwrap(),
            0
        );
        let u2 = chebyshev_power::<Q>(&b, l(1), 2).unwrap();
        assert_eq!(
            commutator(l(1), &u2)
                .unwrap()
                .interior_rank(2, 0.0)
                .unwrap(),
            2
        );
        assert!(matches!(
            commutator(l(1), &u2).unwrap().interior_rank(1, 0.0),
            Err(FockError::MarginTooSmall { .. })
        ));
    }

    #[test]
    fn packaged_checks() {
        let b = FockBasis::new(2, 5).unwrap();
        for v in enumerate_words(2, 5) {
            assert!(chebyshev_vacuum_check(&v, &b).unwrap());
            for i in 1..=2 {
                assert!(fundamental_equality_check(l(i), &v, &b).unwrap());
            }
        }
        assert!(fundamental_equality_check(l(3), &w("1"), &b).is_err());
    }

    #[test]
    fn action_formula_small() {
        let b = FockBasis::new(2, 6).unwrap();
        for v in enumerate_words(2, 3) {
            for wd in enumerate_words(2, 5 - v.len()) {
                for i in 1..=2 {
                    let mut x = vec![qi(0); b.dim()];
                    x[b.index(&wd).unwrap()] = qi(1);
                    let r = build_operator::<Q>(&b, OperatorKind::RAnnihilate(l(i))).unwrap();
                    let lhs: Vec<Q> = r
                        .apply(&apply_chebyshev(&b, &v, &x))
                        .into_iter()
                        .zip(apply_chebyshev(&b, &v, &r.apply(&x)))
                        .map(|(p, q)| p - q)
                        .collect();
                    let iw = Word::single(l(i)).concat(&wd.transpose());
                    let mut rhs = vec![qi(0); b.dim()];
                    if let Some(u) = right_quotient(&v, &iw).into_word() {
                        rhs[b.index(&u).unwrap()] = qi(1);
                    }
                    assert_eq!(lhs, rhs, "v={v} w={wd} i={i}");
                }
            }
        }
    }

    #[test]
    fn dual_system_examples() {
        let b6 = FockBasis::new(2, 6).unwrap();
        assert!(dual_system_check(l(1), l(1), 1, &b6).unwrap());
        for k in 1..=4 {
            assert!(dual_system_check(l(1), l(2), k, &b6).unwrap());
        }
        let b8 = FockBasis::new(2, 8).unwrap();
        assert!(dual_system_check(l(1), l(1), 4, &b8).unwrap());
    }

    #[test]
    fn antisymmetry_examples() {
        let b = FockBasis::new(2, 6).unwrap();
        for s in ["s1", "s1*s2 + s2*s1"] {
            let a = operator_of_expr::<Q>(&b, &e(s)).unwrap();
            for i in 1..=2 {
                assert!(creation_antisymmetry_check(l(i), &a).unwrap(), "{s}");
            }
        }
        let u3 = chebyshev_power::<Q>(&b, l(1), 3).unwrap();
        assert!(creation_antisymmetry_check(l(1), &u3).unwrap());
    }

    #[test]
    fn affiliated_examples() {
        let b = FockBasis::new(2, 8).unwrap();
        let one = e("1");
        let s1 = e("s1");
        let r = affiliated_rank_check(&one, &s1, &s1, &one, l(1), &b).unwrap();
        assert_eq!(r.rank, 1);
        let f = e("5/2 - s1");
        let a = e("(5/2 - s1) * s1");
        assert_eq!(
            affiliated_rank_check(&f, &a, &s1, &one, l(1), &b)
                .unwrap()
                .rank,
            1
        );
        assert_eq!(
            affiliated_rank_check(&one, &s1, &s1, &one, l(2), &b)
                .unwrap()
                .rank,
            0
        );
    }

    #[test]
    fn series_from_expressions() {
        let opts = EvalOptions::default();
        let z = expr_to_series(&e("s1"), 2, 4, &opts).unwrap();
        assert!(z.exact);
        assert_eq!(z.table.nnz(), 1);
        assert_eq!(z.table.coeff(&w("1")), qi(1));
        let z = expr_to_series(&e("s1*s1"), 2, 4, &opts).unwrap();
        assert_eq!(z.table.coeff(&Word::empty()), qi(1));
        assert_eq!(z.table.coeff(&w("1 1")), qi(1));
        assert_eq!(z.table.nnz(), 2);

        let z = expr_to_series(&e("(5/2 - s1)^-1"), 2, 10, &opts).unwrap();
        assert!(!z.exact);
        assert!(z.error_bound < 1e-8, "{}", z.error_bound);
        for n in 0..=10 {
            let got = q_to_f64(&z.table.coeff(&Word::power(l(1), n)));
            assert!((got - 0.5f64.powi(n as i32 + 1)).abs() < 1e-8);
        }
        assert!(expr_to_series(&e("s3"), 2, 4, &opts).is_err());
    }

    #[test]
    fn truncation_independence() {
        let a = e("s1*s2*s1 - 2*s2 + s1*s1");
        let v1 = apply_to_vacuum(&a, &FockBasis::new(2, 5).unwrap()).unwrap();
        let v2 = apply_to_vacuum(&a, &FockBasis::new(2, 7).unwrap()).unwrap();
        assert_eq!(v1, FockVector { n: 5, ..v2 });
    }

    #[test]
    fn commutator_ranks_of_expressions() {
        let opts = EvalOptions::default();
        let ranks = expr_commutator_ranks(&e("s1"), 2, 6, 1e-9, &opts).unwrap();
        assert_eq!(
            ranks.iter().map(|r| r.rank_n).collect::<Vec<_>>(),
            vec![1, 0]
        );
        let ranks = expr_commutator_ranks(&e("(5/2 - s1)^-1"), 2, 8, 1e-9, &opts).unwrap();
        assert_eq!(ranks[0].mode, RankMode::Numeric);
        assert_eq!((ranks[0].rank_n, ranks[0].rank_n1), (1, 1));
        assert_eq!(ranks[1].rank_n, 0);
        let span = shift_span_dimension(&e("s1*s2"), 2, 6).unwrap();
        assert_eq!(span.span_dim, 3);
    }
}
