//! Dense linear algebra over `Q` plus the few floating-point routines the
//! crate needs (SVD rank, polynomial roots).
//!
//! Ranks over `Q` use fraction-free (Bareiss) elimination on rows scaled to
//! integers, scanning columns left to right and taking the first non-zero
//! row as pivot. Results never depend on a threshold.

use nalgebra::Complex;
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::Q;

pub type QMatrix = Vec<Vec<Q>>;

pub fn zeros(rows: usize, cols: usize) -> QMatrix {
    vec![vec![Q::zero(); cols]; rows]
}

pub fn identity(n: usize) -> QMatrix {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Q::one();
    }
    m
}

pub fn mat_mul(a: &QMatrix, b: &QMatrix) -> QMatrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            debug_assert_eq!(row.len(), inner);
            let mut out = vec![Q::zero(); cols];
            for (k, a_ik) in row.iter().enumerate() {
                if a_ik.is_zero() {
                    continue;
                }
                for (o, b_kj) in out.iter_mut().zip(&b[k]) {
                    if !b_kj.is_zero() {
                        *o += a_ik * b_kj;
                    }
                }
            }
            out
        })
        .collect()
}

pub fn mat_vec(a: &QMatrix, x: &[Q]) -> Vec<Q> {
    a.iter().map(|row| dot(row, x)).collect()
}

/// Row vector times matrix, `xᵗ A`.
pub fn vec_mat(x: &[Q], a: &QMatrix) -> Vec<Q> {
    let cols = a.first().map_or(0, Vec::len);
    let mut out = vec![Q::zero(); cols];
    for (xi, row) in x.iter().zip(a) {
        if xi.is_zero() {
            continue;
        }
        for (o, v) in out.iter_mut().zip(row) {
            if !v.is_zero() {
                *o += xi * v;
            }
        }
    }
    out
}

pub fn dot(x: &[Q], y: &[Q]) -> Q {
    x.iter()
        .zip(y)
        .filter(|(a, b)| !a.is_zero() && !b.is_zero())
        .fold(Q::zero(), |acc, (a, b)| acc + a * b)
}

pub fn transpose(a: &QMatrix) -> QMatrix {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &QMatrix, b: &QMatrix) -> QMatrix {
    let (ra, ca) = (a.len(), a.first().map_or(0, Vec::len));
    let (rb, cb) = (b.len(), b.first().map_or(0, Vec::len));
    let mut out = zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            if a[i][j].is_zero() {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = &a[i][j] * &b[k][l];
                }
            }
        }
    }
    out
}

pub fn kron_vec(x: &[Q], y: &[Q]) -> Vec<Q> {
    x.iter()
        .flat_map(|a| y.iter().map(move |b| a * b))
        .collect()
}

/// Scales a rational row by the lcm of its denominators.
pub fn integer_row(row: &[Q]) -> Vec<BigInt> {
    let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect()
}

/// Rank over `Q` by fraction-free elimination.
pub fn rank(rows: &[Vec<Q>]) -> usize {
    let m: Vec<Vec<BigInt>> = rows
        .iter()
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .map(|r| integer_row(r))
        .collect();
    bareiss_rank(m)
}

/// Bareiss elimination on an integer matrix; every division is exact.
pub fn bareiss_rank(mut m: Vec<Vec<BigInt>>) -> usize {
    let nrows = m.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = m[0].len();
    let mut prev = BigInt::one();
    let mut row = 0;
    for col in 0..ncols {
        if row == nrows {
            break;
        }
        let Some(p) = (row..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let (top, rest) = m.split_at_mut(row + 1);
        let pivot_row = &top[row];
        let pivot = &pivot_row[col];
        for r in rest.iter_mut() {
            let factor = r[col].clone();
            for j in col + 1..ncols {
                let v = &r[j] * pivot - &factor * &pivot_row[j];
                r[j] = v / &prev;
            }
            r[col] = BigInt::zero();
        }
        prev = m[row][col].clone();
        row += 1;
    }
    row
}

/// Determinant by fraction-free elimination; `None` only for non-square input.
pub fn determinant(a: &QMatrix) -> Option<Q> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return None;
    }
    if n == 0 {
        return Some(Q::one());
    }
    let mut scale = BigInt::one();
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for row in a {
        let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        m.push(row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect());
        scale *= lcm;
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&r| !m[r][k].is_zero()) else {
            return Some(Q::zero());
        };
        if p != k {
            m.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    Some(Q::new(sign * &m[n - 1][n - 1], scale))
}

/// Solves `A x = b`. Returns some solution if the system is consistent
/// (free variables set to zero), `None` otherwise.
pub fn solve(a: &QMatrix, b: &[Q]) -> Option<Vec<Q>> {
    let nrows = a.len();
    let ncols = a.first().map_or(0, Vec::len);
    let mut aug: QMatrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..nrows).find(|&r| !aug[r][col].is_zero()) else {
            continue;
        };
        aug.swap(row, p);
        let inv = aug[row][col].recip();
        for x in aug[row].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = aug[row].clone();
        for (r, other) in aug.iter_mut().enumerate() {
            if r == row || other[col].is_zero() {
                continue;
            }
            let f = other[col].clone();
            for (o, p) in other.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *o -= &f * p;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == nrows {
            break;
        }
    }
    if aug[row..].iter().any(|r| !r[ncols].is_zero()) {
        return None;
    }
    let mut x = vec![Q::zero(); ncols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][ncols].clone();
    }
    Some(x)
}

pub fn inverse(a: &QMatrix) -> Option<QMatrix> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return None;
    }
    let mut aug: QMatrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, p);
        let inv = aug[col][col].recip();
        for x in aug[col].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = aug[col].clone();
        for (r, other) in aug.iter_mut().enumerate() {
            if r == col || other[col].is_zero() {
                continue;
            }
            let f = other[col].clone();
            for (o, p) in other.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *o -= &f * p;
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Basis of the kernel `{x : A x = 0}`, one vector per free column.
pub fn kernel(a: &QMatrix, ncols: usize) -> Vec<Vec<Q>> {
    let nrows = a.len();
    let mut m = a.clone();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[row].clone();
        for (r, other) in m.iter_mut().enumerate() {
            if r == row || other[col].is_zero() {
                continue;
            }
            let f = other[col].clone();
            for (o, p) in other.iter_mut().zip(&pivot_row) {
                *o -= &f * p;
            }
        }
        pivots.push(col);
        row += 1;
        if row == nrows {
            break;
        }
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Q::zero(); ncols];
            x[f] = Q::one();
            for (r, &c) in pivots.iter().enumerate() {
                x[c] = -m[r][f].clone();
            }
            x
        })
        .collect()
}

/// Incrementally built subspace of `Q^n` that remembers how each echelon
/// row decomposes over the vectors that were inserted.
#[derive(Debug, Clone)]
pub struct Span {
    dim: usize,
    members: Vec<Vec<Q>>,
    // (pivot column, echelon row with unit pivot, combination of members)
    echelon: Vec<(usize, Vec<Q>, Vec<Q>)>,
}

impl Span {
    pub fn new(dim: usize) -> Self {
        Span {
            dim,
            members: Vec::new(),
            echelon: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[Vec<Q>] {
        &self.members
    }

    fn reduce(&self, v: &[Q]) -> (Vec<Q>, Vec<Q>) {
        let mut residual = v.to_vec();
        let mut comb = vec![Q::zero(); self.members.len()];
        for (pivot, row, t) in &self.echelon {
            if residual[*pivot].is_zero() {
                continue;
            }
            let f = residual[*pivot].clone();
            for (r, x) in residual.iter_mut().zip(row) {
                if !x.is_zero() {
                    *r -= &f * x;
                }
            }
            for (c, x) in comb.iter_mut().zip(t) {
                if !x.is_zero() {
                    *c += &f * x;
                }
            }
        }
        (residual, comb)
    }

    /// Adds `v` if it is independent of the current members; returns whether it was added.
    pub fn insert(&mut self, v: Vec<Q>) -> bool {
        assert_eq!(v.len(), self.dim);
        let (residual, comb) = self.reduce(&v);
        let Some(pivot) = residual.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = residual[pivot].recip();
        let row: Vec<Q> = residual.iter().map(|x| x * &inv).collect();
        let n = self.members.len();
        let mut t: Vec<Q> = comb.iter().map(|c| -(c * &inv)).collect();
        t.push(inv);
        for (_, _, old) in self.echelon.iter_mut() {
            old.resize(n + 1, Q::zero());
        }
        self.echelon.push((pivot, row, t));
        self.members.push(v);
        true
    }

    /// Coefficients `c` with `v = Σ c_k members[k]`, or `None` if `v` is outside the span.
    pub fn coordinates(&self, v: &[Q]) -> Option<Vec<Q>> {
        let (residual, comb) = self.reduce(v);
        residual.iter().all(Zero::is_zero).then_some(comb)
    }
}

/// Number of singular values above `rel_tol × σ_max`.
pub fn numeric_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

pub fn to_dmatrix(a: &QMatrix) -> DMatrix<f64> {
    let r = a.len();
    let c = a.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| crate::scalar::q_to_f64(&a[i][j]))
}

/// Roots of `Σ c_k z^k` (coefficients in increasing degree) as companion-matrix
/// eigenvalues. Leading zero coefficients are dropped.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let Some(deg) = coeffs.iter().rposition(|c| *c != 0.0) else {
        return Vec::new();
    };
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -coeffs[i] / lead;
    }
    comp.complex_eigenvalues().iter().cloned().collect()
}

pub fn max_abs(x: &[Q]) -> Q {
    x.iter()
        .map(|v| v.abs())
        .fold(Q::zero(), |a, b| if b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    fn m(rows: &[&[i64]]) -> QMatrix {
        rows.iter()
            .map(|r| r.iter().map(|&x| qi(x)).collect())
            .collect()
    }

    #[test]
    fn rank_of_simple_matrices() {
        assert_eq!(rank(&m(&[&[1, 2], &[2, 4]])), 1);
        assert_eq!(rank(&m(&[&[0, 0], &[0, 0]])), 0);
        assert_eq!(rank(&identity(4)), 4);
        assert_eq!(rank(&m(&[&[0, 1, 2], &[0, 2, 4], &[1, 0, 0]])), 2);
        let half = vec![vec![q(1, 2), q(1, 3)], vec![q(3, 2), qi(1)]];
        assert_eq!(rank(&half), 1);
    }

    #[test]
    fn determinant_matches_cofactor() {
        let a = m(&[&[2, -1, 0], &[-1, 2, -1], &[0, -1, 2]]);
        assert_eq!(determinant(&a), Some(qi(4)));
        let b = vec![vec![q(1, 2), q(1, 3)], vec![q(1, 4), q(1, 5)]];
        assert_eq!(determinant(&b), Some(q(1, 10) - q(1, 12)));
        assert_eq!(determinant(&m(&[&[0, 1], &[1, 0]])), Some(qi(-1)));
    }

    #[test]
    fn solve_and_inverse() {
        let a = m(&[&[2, 1], &[1, 3]]);
        let x = solve(&a, &[qi(3), qi(5)]).unwrap();
        assert_eq!(mat_vec(&a, &x), vec![qi(3), qi(5)]);
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv), identity(2));
        assert!(inverse(&m(&[&[1, 2], &[2, 4]])).is_none());
        assert!(solve(&m(&[&[1, 2], &[2, 4]]), &[qi(1), qi(3)]).is_none());
    }

    #[test]
    fn kernel_vectors_annihilate() {
        let a = m(&[&[1, 1, 0], &[0, 0, 1]]);
        let k = kernel(&a, 3);
        assert_eq!(k.len(), 1);
        assert!(mat_vec(&a, &k[0]).iter().all(Zero::is_zero));
    }

    #[test]
    fn span_coordinates() {
        let mut s = Span::new(3);
        assert!(s.insert(vec![qi(1), qi(1), qi(0)]));
        assert!(s.insert(vec![qi(0), qi(1), qi(1)]));
        assert!(!s.insert(vec![qi(1), qi(2), qi(1)]));
        let c = s.coordinates(&[qi(2), qi(3), qi(1)]).unwrap();
        assert_eq!(c, vec![qi(2), qi(1)]);
        assert!(s.coordinates(&[qi(0), qi(0), qi(1)]).is_none());
    }

    #[test]
    fn roots_of_quadratic() {
        // (z - 1/2)(z + 1/4) = z² - z/4 - 1/8
        let mut r: Vec<f64> = polynomial_roots(&[-0.125, -0.25, 1.0])
            .iter()
            .map(|z| z.re)
            .collect();
        r.sort_by(f64::total_cmp);
        assert!((r[0] + 0.25).abs() < 1e-12 && (r[1] - 0.5).abs() < 1e-12);
        assert!(polynomial_roots(&[3.0]).is_empty());
    }

    #[test]
    fn numeric_rank_basics() {
        assert_eq!(numeric_rank(&DMatrix::identity(3, 3), 1e-9), 3);
        assert_eq!(numeric_rank(&DMatrix::zeros(3, 3), 1e-9), 0);
    }
}
