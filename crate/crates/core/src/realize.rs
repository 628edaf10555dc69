//! Block realization of the free generators and the reconstruction of a
//! rational element from a linear representation.
//!
//! `S_i` acts on `C^d ⊗ C^2 ⊗ F_N`; its only non-zero column block is `i`,
//! where row block `j` is `[[s_i, -1], [δ_{ji}, 0]]`. Products of the `S_i`
//! reproduce the Chebyshev operators `U_v` in the top-left corner, so
//! `ᵗλ (1 - Σ_i μ(i) ⊗ S_i)^{-1} γ` corner-extracts `Σ_v α_v U_v`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::fock::{
    build_operator, chebyshev_combination, FockBasis, FockError, FockOperator, FockVector,
    OperatorKind,
};
use crate::scalar::{q_to_f64, Scalar, Q};
use crate::sparse::SparseMatrix;
use crate::wfa::LinearRepresentation;
use crate::word::{Letter, Word};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealizeError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("representation is over {rep} letters, basis over {basis}")]
    AlphabetMismatch { rep: usize, basis: usize },
    #[error("level norms do not decay (fitted c' = {c})")]
    NotConverging { c: f64 },
    #[error("m_max must be at least 1")]
    EmptyRange,
    #[error("coefficient family mixes word lengths {0} and {1}")]
    NotHomogeneous(usize, usize),
}

// (j, c, f) -> (j·2 + c)·D + f
fn slot(j: usize, c: usize, f: usize, dim: usize) -> usize {
    (j * 2 + c) * dim + f
}

/// `S_i` as one sparse matrix on `C^d ⊗ C^2 ⊗ F_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SBlock<T> {
    d: usize,
    letter: Letter,
    basis: FockBasis,
    matrix: SparseMatrix<T>,
}

impl<T: Scalar> SBlock<T> {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn letter(&self) -> Letter {
        self.letter
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &SparseMatrix<T> {
        &self.matrix
    }

    /// Operator entry at block row `r = 2j + a`, block column `c = 2k + b` (0-based).
    pub fn entry(&self, r: usize, c: usize) -> SparseMatrix<T> {
        sub_block(&self.matrix, self.basis.dim(), r, c)
    }
}

fn sub_block<T: Scalar>(m: &SparseMatrix<T>, dim: usize, r: usize, c: usize) -> SparseMatrix<T> {
    let cols = c * dim..(c + 1) * dim;
    SparseMatrix::from_triplets(
        dim,
        dim,
        (0..dim).flat_map(|f| {
            m.row(r * dim + f)
                .iter()
                .filter(|(k, _)| cols.contains(k))
                .map(move |(k, v)| (f, k - c * dim, v.clone()))
                .collect::<Vec<_>>()
        }),
    )
}

fn check_letter(basis: &FockBasis, i: Letter) -> Result<(), FockError> {
    if i.slot() >= basis.d() {
        return Err(FockError::LetterOutOfRange {
            letter: i.index(),
            d: basis.d(),
        });
    }
    Ok(())
}

pub fn build_s_block<T: Scalar>(basis: &FockBasis, i: Letter) -> Result<SBlock<T>, RealizeError> {
    check_letter(basis, i)?;
    let s = build_operator::<T>(basis, OperatorKind::Semicircular(i))?;
    let (d, dim) = (basis.d(), basis.dim());
    let k = i.slot();
    let mut triplets = Vec::new();
    for j in 0..d {
        for (r, c, v) in s.matrix().triplets() {
            triplets.push((slot(j, 0, r, dim), slot(k, 0, c, dim), v.clone()));
        }
        for f in 0..dim {
            triplets.push((slot(j, 0, f, dim), slot(k, 1, f, dim), -T::one()));
            if j == k {
                triplets.push((slot(j, 1, f, dim), slot(k, 0, f, dim), T::one()));
            }
        }
    }
    Ok(SBlock {
        d,
        letter: i,
        basis: basis.clone(),
        matrix: SparseMatrix::from_triplets(2 * d * dim, 2 * d * dim, triplets),
    })
}

/// `S^v = S_{v_1} ⋯ S_{v_m}` in closed form.
///
/// Only column block `i = last(v)` is non-zero; row block `j` holds
/// `[[U_v, -U_{v i⁻¹}], [δ_{j, first(v)} U_{v'}, -δ_{j, first(v)} U_{v' i⁻¹}]]`
/// with `v' = first(v)⁻¹ v`, and `S^Ω = 1`.
pub fn s_word<T: Scalar>(basis: &FockBasis, v: &Word) -> Result<SparseMatrix<T>, RealizeError> {
    s_combination(basis, &[(v.clone(), T::one())])
}

/// `Σ_v α_v S^v` from the closed form of each `S^v`.
pub fn s_combination<T: Scalar>(
    basis: &FockBasis,
    alpha: &[(Word, T)],
) -> Result<SparseMatrix<T>, RealizeError> {
    let (d, dim) = (basis.d(), basis.dim());
    let n = 2 * d * dim;
    let mut triplets = Vec::new();
    let mut place = |op: &FockOperator<T>, j: usize, a: usize, k: usize, b: usize, sign: &T| {
        for (r, c, v) in op.matrix().triplets() {
            triplets.push((
                slot(j, a, r, dim),
                slot(k, b, c, dim),
                sign.clone() * v.clone(),
            ));
        }
    };
    let (one, minus) = (T::one(), -T::one());
    let constant: Vec<(Word, T)> = alpha
        .iter()
        .filter(|(v, _)| v.is_empty())
        .cloned()
        .collect();
    let id = chebyshev_combination(basis, &constant)?;
    for j in 0..d {
        for b in 0..2 {
            place(&id, j, b, j, b, &one);
        }
    }
    for k in 0..d {
        let ends: Vec<&(Word, T)> = alpha
            .iter()
            .filter(|(v, _)| v.last().is_some_and(|l| l.slot() == k))
            .collect();
        if ends.is_empty() {
            continue;
        }
        let full: Vec<(Word, T)> = ends.iter().map(|(v, a)| (v.clone(), a.clone())).collect();
        let head: Vec<(Word, T)> = ends
            .iter()
            .map(|(v, a)| (v.prefix(v.len() - 1), a.clone()))
            .collect();
        let top_left = chebyshev_combination(basis, &full)?;
        let top_right = chebyshev_combination(basis, &head)?;
        for j in 0..d {
            place(&top_left, j, 0, k, 0, &one);
            place(&top_right, j, 0, k, 1, &minus);
            let starts: Vec<&&(Word, T)> = ends
                .iter()
                .filter(|(v, _)| v.first().is_some_and(|l| l.slot() == j))
                .collect();
            if starts.is_empty() {
                continue;
            }
            let tail: Vec<(Word, T)> = starts
                .iter()
                .map(|(v, a)| (v.suffix_from(1), a.clone()))
                .collect();
            let middle: Vec<(Word, T)> = starts
                .iter()
                .filter(|(v, _)| v.len() >= 2)
                .map(|(v, a)| (v.suffix_from(1).prefix(v.len() - 2), a.clone()))
                .collect();
            place(&chebyshev_combination(basis, &tail)?, j, 1, k, 0, &one);
            place(&chebyshev_combination(basis, &middle)?, j, 1, k, 1, &minus);
        }
    }
    Ok(SparseMatrix::from_triplets(n, n, triplets))
}

/// An operator on `C^m ⊗ C^d ⊗ C^2 ⊗ F_N`, index `((s·d + j)·2 + c)·D + f`.
#[derive(Debug, Clone, PartialEq)]
pub struct BigOperator<T> {
    pub m: usize,
    pub d: usize,
    pub fock_dim: usize,
    pub matrix: SparseMatrix<T>,
}

impl<T: Scalar> BigOperator<T> {
    pub fn dim(&self) -> usize {
        self.m * 2 * self.d * self.fock_dim
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = SparseMatrix::identity(self.dim());
        for _ in 0..k {
            acc = acc.matmul(&self.matrix);
        }
        BigOperator {
            matrix: acc,
            ..self.clone()
        }
    }

    fn state(&self, s: usize, j: usize, c: usize, f: usize) -> usize {
        ((s * self.d + j) * 2 + c) * self.fock_dim + f
    }

    /// `(ᵗλ ⊗ ᵗe_1 ⊗ (1 0)) A (γ ⊗ e ⊗ (1 0)ᵗ)` as an operator on `F_N`.
    pub fn corner(&self, lambda: &[T], gamma: &[T]) -> SparseMatrix<T> {
        let dim = self.fock_dim;
        let left = SparseMatrix::from_triplets(
            dim,
            self.dim(),
            (0..self.m).flat_map(|s| {
                (0..dim).map(move |f| (f, self.state(s, 0, 0, f), lambda[s].clone()))
            }),
        );
        let right = SparseMatrix::from_triplets(
            self.dim(),
            dim,
            (0..self.m).flat_map(|s| {
                (0..self.d).flat_map(move |j| {
                    (0..dim).map(move |f| (self.state(s, j, 0, f), f, gamma[s].clone()))
                })
            }),
        );
        left.matmul(&self.matrix).matmul(&right)
    }
}

/// `V = Σ_i μ(i) ⊗ S_i`.
pub fn build_v<T: Scalar>(
    r: &LinearRepresentation,
    basis: &FockBasis,
) -> Result<BigOperator<T>, RealizeError> {
    if r.d() != basis.d() {
        return Err(RealizeError::AlphabetMismatch {
            rep: r.d(),
            basis: basis.d(),
        });
    }
    let (m, d, dim) = (r.dim(), basis.d(), basis.dim());
    let block = 2 * d * dim;
    let mut triplets = Vec::new();
    for i in r.active_letters() {
        let s = build_s_block::<T>(basis, i)?;
        for (a, row) in r.mu(i).iter().enumerate() {
            for (b, x) in row.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                let x = T::from_q(x);
                for (p, c, v) in s.matrix().triplets() {
                    triplets.push((a * block + p, b * block + c, x.clone() * v.clone()));
                }
            }
        }
    }
    Ok(BigOperator {
        m,
        d,
        fock_dim: dim,
        matrix: SparseMatrix::from_triplets(m * block, m * block, triplets),
    })
}

fn check_word(basis: &FockBasis, v: &Word) -> Result<(), FockError> {
    if v.len() > basis.truncation() {
        return Err(FockError::WordTooLong {
            len: v.len(),
            n: basis.truncation(),
        });
    }
    if v.max_letter() as usize > basis.d() {
        return Err(FockError::LetterOutOfRange {
            letter: v.max_letter(),
            d: basis.d(),
        });
    }
    Ok(())
}

/// Exact check that the corner of `S_{v_1} ⋯ S_{v_m}` is `U_v` on every column
/// `e_w` with `|w| ≤ N - |v|`.
pub fn corner_identity_check(v: &Word, basis: &FockBasis) -> Result<bool, RealizeError> {
    check_word(basis, v)?;
    let (d, dim) = (basis.d(), basis.dim());
    let mut blocks: BTreeMap<Letter, SBlock<Q>> = BTreeMap::new();
    for &a in v.letters() {
        if let std::collections::btree_map::Entry::Vacant(e) = blocks.entry(a) {
            e.insert(build_s_block(basis, a)?);
        }
    }
    let u = chebyshev_combination(basis, &[(v.clone(), Q::one())])?;
    let last = basis.count_up_to(basis.truncation() - v.len());
    for w in 0..last {
        let mut x = vec![Q::zero(); 2 * d * dim];
        for j in 0..d {
            x[slot(j, 0, w, dim)] = Q::one();
        }
        for a in v.letters().iter().rev() {
            x = blocks[a].matrix().mul_vec(&x);
        }
        let expected = u.matrix().column(w);
        let mut got: Vec<(usize, Q)> = (0..dim)
            .filter(|f| !x[slot(0, 0, *f, dim)].is_zero())
            .map(|f| (f, x[slot(0, 0, f, dim)].clone()))
            .collect();
        got.sort_by_key(|e| e.0);
        if got != expected {
            return Ok(false);
        }
    }
    Ok(true)
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(t, s)| *t += a * s);
}

/// Largest singular value: restarted Lanczos on `ᵗA A` (power iteration
/// accelerated by a 30-step Krylov space, restarted from the Ritz vector), from
/// a fixed start vector. Stops when the estimate changes by less than `1e-10`
/// (relative) between restarts, or after `10⁴` products with `ᵗA A`.
pub fn operator_norm(a: &SparseMatrix<f64>) -> f64 {
    const KRYLOV: usize = 30;
    let n = a.ncols();
    if n == 0 || a.is_zero() {
        return 0.0;
    }
    let at = a.transpose();
    let gram = |x: &[f64]| at.mul_vec(&a.mul_vec(x));
    let mut x: Vec<f64> = (0..n).map(|k| 1.0 + (k % 7) as f64 / 10.0).collect();
    let mut est = 0.0;
    let mut products = 0;
    while products < 10_000 {
        let nx = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|t| *t /= nx);
        let mut basis = vec![x.clone()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut exhausted = false;
        for j in 0..KRYLOV.min(n) {
            let mut w = gram(&basis[j]);
            products += 1;
            alpha.push(dot(&w, &basis[j]));
            // full reorthogonalization, twice
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(&w, v);
                    axpy(&mut w, -c, v);
                }
            }
            let b = dot(&w, &w).sqrt();
            if b <= 1e-13 * alpha[0].abs().max(alpha[j].abs()) || j + 1 == n {
                exhausted = true;
                break;
            }
            if j + 1 < KRYLOV.min(n) {
                beta.push(b);
                w.iter_mut().for_each(|t| *t /= b);
                basis.push(w);
            }
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let top = eig.eigenvalues.imax();
        let next = eig.eigenvalues[top].max(0.0).sqrt();
        x = vec![0.0; n];
        for (coef, v) in eig.eigenvectors.column(top).iter().zip(&basis) {
            axpy(&mut x, *coef, v);
        }
        if exhausted || (next - est).abs() <= 1e-10 * next {
            return next;
        }
        est = next;
    }
    est
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaagerupReport {
    pub m: usize,
    pub d: usize,
    pub truncation: usize,
    pub terms: usize,
    pub l2: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

fn homogeneous_degree(alpha: &[(Word, Q)]) -> Result<usize, RealizeError> {
    let m = alpha.first().map_or(0, |(v, _)| v.len());
    match alpha.iter().find(|(v, _)| v.len() != m) {
        Some((v, _)) => Err(RealizeError::NotHomogeneous(m, v.len())),
        None => Ok(m),
    }
}

fn haagerup_report(
    alpha: &[(Word, Q)],
    basis: &FockBasis,
    factor: f64,
    op: impl FnOnce(&[(Word, f64)]) -> Result<SparseMatrix<f64>, RealizeError>,
) -> Result<HaagerupReport, RealizeError> {
    let m = homogeneous_degree(alpha)?;
    for (v, _) in alpha {
        check_word(basis, v)?;
    }
    let float: Vec<(Word, f64)> = alpha
        .iter()
        .map(|(v, a)| (v.clone(), q_to_f64(a)))
        .collect();
    let l2 = float.iter().map(|(_, a)| a * a).sum::<f64>().sqrt();
    let lhs = operator_norm(&op(&float)?);
    let rhs = factor * (m as f64 + 1.0) * l2;
    Ok(HaagerupReport {
        m,
        d: basis.d(),
        truncation: basis.truncation(),
        terms: alpha.len(),
        l2,
        lhs,
        rhs,
        ok: lhs <= rhs + 1e-9,
    })
}

/// `‖Σ_{|v|=m} α_v U_v‖ ≤ (m+1) ‖α‖_2` on the truncated space.
pub fn haagerup_check(
    alpha: &[(Word, Q)],
    basis: &FockBasis,
) -> Result<HaagerupReport, RealizeError> {
    haagerup_report(alpha, basis, 1.0, |a| {
        Ok(chebyshev_combination(basis, a)?.matrix().clone())
    })
}

/// `‖Σ_{|v|=m} α_v S^v‖ ≤ 4d² (m+1) ‖α‖_2` on the truncated space.
pub fn haagerup_matrix_check(
    alpha: &[(Word, Q)],
    basis: &FockBasis,
) -> Result<HaagerupReport, RealizeError> {
    let d = basis.d() as f64;
    haagerup_report(alpha, basis, 4.0 * d * d, |a| s_combination(basis, a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeumannReport {
    pub truncation: usize,
    pub m_max: usize,
    /// Dimension of the representation as given, and after minimization.
    pub input_dim: usize,
    pub dim: usize,
    pub minimal: bool,
    /// `ℓ²` norm of level `m` of the series, `m = 0..=m_max`.
    pub level_l2: Vec<f64>,
    /// `(m+1) ℓ²_m`, the bound on `‖Σ_{|v|=m} α_v U_v‖`.
    pub level_norm_bounds: Vec<f64>,
    pub m_prime: f64,
    pub c_prime: f64,
    /// Bound on `Σ_{m > m_max} ‖Σ_{|v|=m} α_v U_v‖`.
    pub tail_bound: f64,
    /// Largest `|computed_v - α_v|` over `|v| ≤ N - 2`.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub vector: FockVector<f64>,
    pub report: NeumannReport,
}

// ℓ²_m = ((λ⊗λ)ᵗ (Σ_i μ(i)⊗μ(i))^m (γ⊗γ))^{1/2}
fn level_l2_norms(r: &LinearRepresentation, m_max: usize) -> Vec<f64> {
    let k = r.dim();
    let f = |x: &[Q]| DVector::from_iterator(k, x.iter().map(q_to_f64));
    let (lam, gam) = (f(r.lambda()), f(r.gamma()));
    let lam2 = lam.kronecker(&lam);
    let mut w = DMatrix::<f64>::zeros(k * k, k * k);
    for i in r.active_letters() {
        let mu = DMatrix::from_fn(k, k, |a, b| q_to_f64(&r.mu(i)[a][b]));
        w += mu.kronecker(&mu);
    }
    let mut x = gam.kronecker(&gam);
    (0..=m_max)
        .map(|m| {
            if m > 0 {
                x = &w * &x;
            }
            lam2.dot(&x).max(0.0).sqrt()
        })
        .collect()
}

/// `(M', c')` with `ℓ²_m ≤ M' c'^m` over the last half of the levels.
fn fit_envelope(l2: &[f64]) -> Result<(f64, f64), RealizeError> {
    let m_max = l2.len() - 1;
    let start = m_max / 2;
    let window = &l2[start..];
    let last = *window.last().expect("non-empty window");
    if last > 0.0 && last >= window[0] {
        let c = if window[0] > 0.0 {
            (last / window[0]).powf(1.0 / (m_max - start).max(1) as f64)
        } else {
            f64::INFINITY
        };
        return Err(RealizeError::NotConverging { c });
    }
    let pts: Vec<(f64, f64)> = window
        .iter()
        .enumerate()
        .filter(|(_, x)| **x > 0.0)
        .map(|(k, x)| ((start + k) as f64, x.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok((window.iter().cloned().fold(0.0, f64::max), 0.0));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let c = (sxy / sxx).exp();
    if c >= 1.0 {
        return Err(RealizeError::NotConverging { c });
    }
    let m = window
        .iter()
        .enumerate()
        .map(|(k, x)| x / c.powi((start + k) as i32))
        .fold(0.0, f64::max);
    Ok((m, c))
}

/// `ᵗλ (Σ_{m ≤ m_max} V^m) γ` corner-applied to `Ω`, with a tail bound from the
/// envelope `‖Σ_{|v|=m} α_v U_v‖ ≤ M' (m+1) c'^m`.
///
/// The representation is minimized first. Levels above `N` of the partial
/// sums do not reach `F_N`, so only `V^m`, `m ≤ min(N, m_max)`, is applied;
/// the level norms for all `m ≤ m_max` come from `R ⊙ R` in closed form.
pub fn neumann_reconstruct(
    r: &LinearRepresentation,
    basis: &FockBasis,
    m_max: usize,
    tol: f64,
) -> Result<Reconstruction, RealizeError> {
    if r.d() != basis.d() {
        return Err(RealizeError::AlphabetMismatch {
            rep: r.d(),
            basis: basis.d(),
        });
    }
    if m_max == 0 {
        return Err(RealizeError::EmptyRange);
    }
    let input_dim = r.dim();
    let r = r.minimize();
    let n = basis.truncation();
    let level_l2 = level_l2_norms(&r, m_max);
    let (m_prime, c_prime) = fit_envelope(&level_l2)?;
    let k = (m_max + 1) as f64;
    let tail_bound = if c_prime == 0.0 {
        0.0
    } else {
        m_prime * c_prime.powf(k) * ((k + 1.0) - k * c_prime) / (1.0 - c_prime).powi(2)
    };

    // V on the Fock space of the letters the representation uses
    let active = r.active_letters();
    let work = FockBasis::new(active.len().max(1), n)?;
    let relabel =
        |w: &Word| Word::from_letters(w.letters().iter().map(|a| active[a.slot()].index()));
    let reduced = LinearRepresentation::new(
        r.lambda().to_vec(),
        (0..work.d())
            .map(|a| match active.get(a) {
                Some(&l) => r.mu(l).clone(),
                None => vec![vec![Q::zero(); r.dim()]; r.dim()],
            })
            .collect(),
        r.gamma().to_vec(),
    )
    .expect("relabelled representation is well formed");
    let v = build_v::<f64>(&reduced, &work)?;
    let lambda: Vec<f64> = r.lambda().iter().map(q_to_f64).collect();
    let gamma: Vec<f64> = r.gamma().iter().map(q_to_f64).collect();
    let dim = work.dim();
    let mut y = vec![0.0; v.dim()];
    for (s, g) in gamma.iter().enumerate() {
        for j in 0..v.d {
            y[v.state(s, j, 0, 0)] = *g;
        }
    }
    let mut out = vec![0.0; dim];
    for step in 0..=m_max.min(n) {
        for (s, l) in lambda.iter().enumerate() {
            for (f, o) in out.iter_mut().enumerate() {
                *o += l * y[v.state(s, 0, 0, f)];
            }
        }
        if step < m_max.min(n) {
            y = v.matrix.mul_vec(&y);
        }
    }

    let mut entries = BTreeMap::new();
    let mut residual: f64 = 0.0;
    for (f, x) in out.iter().enumerate() {
        if active.is_empty() && f > 0 {
            break;
        }
        let w = relabel(&work.word(f));
        if w.len() + 2 <= n || (n < 2 && w.is_empty()) {
            residual = residual.max((x - q_to_f64(&r.eval(&w))).abs());
        }
        if *x != 0.0 {
            entries.insert(w, *x);
        }
    }
    let report = NeumannReport {
        truncation: n,
        m_max,
        input_dim,
        dim: r.dim(),
        minimal: r.dim() == input_dim,
        level_norm_bounds: level_l2
            .iter()
            .enumerate()
            .map(|(m, x)| (m as f64 + 1.0) * x)
            .collect(),
        level_l2,
        m_prime,
        c_prime,
        tail_bound,
        residual,
        converged: tail_bound < tol,
    };
    Ok(Reconstruction {
        vector: FockVector::from_entries(basis.d(), n, entries),
        report,
    })
}
