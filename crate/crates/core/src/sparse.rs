//! Row-compressed sparse matrices over any [`Scalar`], and an exact sparse
//! LU factorisation over `Q`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::scalar::{Scalar, Q};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    // each row sorted by column, no explicit zeros
    rows: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, T::one())
    }

    pub fn scalar(n: usize, c: T) -> Self {
        if c.is_zero() {
            return Self::zeros(n, n);
        }
        SparseMatrix {
            nrows: n,
            ncols: n,
            rows: (0..n).map(|i| vec![(i, c.clone())]).collect(),
        }
    }

    /// Duplicates are summed; zeros are dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut acc: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); nrows];
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of range");
            let e = acc[i].entry(j).or_insert_with(T::zero);
            *e = e.clone() + v;
        }
        let rows = acc
            .into_iter()
            .map(|r| r.into_iter().filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        SparseMatrix { nrows, ncols, rows }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, i: usize) -> &[(usize, T)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(k) => self.rows[i][k].1.clone(),
            Err(_) => T::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(j, v)| (i, *j, v)))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .filter(|(j, _)| !x[*j].is_zero())
                    .fold(T::zero(), |acc, (j, v)| acc + v.clone() * x[*j].clone())
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); self.ncols];
        for (i, r) in self.rows.iter().enumerate() {
            for (j, v) in r {
                rows[*j].push((i, v.clone()));
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            rows,
        }
    }

    /// Column `j` as a sparse list; costs a scan of every row.
    pub fn column(&self, j: usize) -> Vec<(usize, T)> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                r.binary_search_by_key(&j, |e| e.0)
                    .ok()
                    .map(|k| (i, r[k].1.clone()))
            })
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut acc: Vec<Option<T>> = vec![None; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                for (k, a) in r {
                    for (j, b) in &other.rows[*k] {
                        let prod = a.clone() * b.clone();
                        match &mut acc[*j] {
                            Some(v) => *v = v.clone() + prod,
                            slot @ None => {
                                *slot = Some(prod);
                                touched.push(*j);
                            }
                        }
                    }
                }
                touched.sort_unstable();
                let row = touched
                    .drain(..)
                    .filter_map(|j| acc[j].take().filter(|v| !v.is_zero()).map(|v| (j, v)))
                    .collect();
                row
            })
            .collect();
        SparseMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            rows,
        }
    }

    fn merge(&self, other: &Self, sign: T) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() || j < b.len() {
                    let ca = a.get(i).map_or(usize::MAX, |e| e.0);
                    let cb = b.get(j).map_or(usize::MAX, |e| e.0);
                    if ca < cb {
                        out.push(a[i].clone());
                        i += 1;
                    } else if cb < ca {
                        out.push((cb, sign.clone() * b[j].1.clone()));
                        j += 1;
                    } else {
                        let v = a[i].1.clone() + sign.clone() * b[j].1.clone();
                        if !v.is_zero() {
                            out.push((ca, v));
                        }
                        i += 1;
                        j += 1;
                    }
                }
                out
            })
            .collect();
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            rows,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.merge(other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.merge(other, -T::one())
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zeros(self.nrows, self.ncols);
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|(j, v)| (*j, c.clone() * v.clone())).collect())
                .collect(),
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SparseMatrix<U> {
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            rows: self
                .rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|(j, v)| (*j, f(v)))
                        .filter(|(_, v)| !v.is_zero())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }

    pub fn to_f64(&self) -> SparseMatrix<f64> {
        self.map(Scalar::to_f64)
    }
}

/// Exact LU factorisation of a square sparse matrix over `Q`.
///
/// Columns are eliminated from the highest index down. For operators built
/// from `s_i` on a Fock basis in length-lex order this peels off the longest
/// words first, which keeps tree-shaped systems free of fill-in. The pivot is
/// the diagonal entry when it is non-zero, otherwise the sparsest candidate row.
// (column, pivot row, remaining row entries)
type Pivot = (usize, usize, Vec<(usize, Q)>);

#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    // row updates b[target] -= f * b[pivot], in elimination order
    ops: Vec<(usize, usize, Q)>,
    // in elimination order
    pivots: Vec<Pivot>,
}

impl SparseLu {
    /// On a singular matrix, returns the column that found no pivot.
    pub fn factor(a: &SparseMatrix<Q>) -> Result<SparseLu, usize> {
        assert_eq!(a.nrows, a.ncols);
        let n = a.nrows;
        let mut rows: Vec<BTreeMap<usize, Q>> =
            a.rows.iter().map(|r| r.iter().cloned().collect()).collect();
        let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (i, r) in rows.iter().enumerate() {
            for j in r.keys() {
                col_rows[*j].insert(i);
            }
        }
        let mut used = vec![false; n];
        let mut ops = Vec::new();
        let mut pivots = Vec::with_capacity(n);
        for col in (0..n).rev() {
            let candidates: Vec<usize> = col_rows[col]
                .iter()
                .copied()
                .filter(|r| !used[*r])
                .collect();
            if candidates.is_empty() {
                return Err(col);
            }
            let p = if candidates.contains(&col) {
                col
            } else {
                *candidates
                    .iter()
                    .min_by_key(|r| (rows[**r].len(), **r))
                    .expect("non-empty")
            };
            used[p] = true;
            let pivot_row = rows[p].clone();
            let pv = pivot_row[&col].clone();
            for r in candidates.into_iter().filter(|r| *r != p) {
                let f = &rows[r][&col] / &pv;
                for (j, v) in &pivot_row {
                    let entry = rows[r].entry(*j).or_insert_with(Q::zero);
                    *entry -= &f * v;
                    if entry.is_zero() {
                        rows[r].remove(j);
                        col_rows[*j].remove(&r);
                    } else {
                        col_rows[*j].insert(r);
                    }
                }
                ops.push((r, p, f));
            }
            for j in pivot_row.keys() {
                col_rows[*j].remove(&p);
            }
            pivots.push((col, p, std::mem::take(&mut rows[p]).into_iter().collect()));
        }
        Ok(SparseLu { n, ops, pivots })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Q]) -> Vec<Q> {
        assert_eq!(b.len(), self.n);
        let mut b = b.to_vec();
        for (r, p, f) in &self.ops {
            if !b[*p].is_zero() {
                let delta = f * &b[*p];
                b[*r] -= delta;
            }
        }
        let mut x = vec![Q::zero(); self.n];
        for (col, p, row) in self.pivots.iter().rev() {
            let mut acc = b[*p].clone();
            let mut diag = Q::zero();
            for (j, v) in row {
                if j == col {
                    diag = v.clone();
                } else if !x[*j].is_zero() {
                    acc -= v * &x[*j];
                }
            }
            x[*col] = acc / diag;
        }
        x
    }
}
