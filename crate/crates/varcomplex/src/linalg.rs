//! Exact sparse linear algebra over the rationals.
//!
//! Matrices are stored column-major; rank, kernel and solving go through a
//! fraction-free row elimination: rows are scaled to integers, combined by
//! cross-multiplication `p*r - a*r_pivot`, and stripped of their content
//! after every update so entries stay small. Pivots are chosen on the
//! sparsest column, then the sparsest row with the smallest leading entry,
//! which keeps the elimination deterministic.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Sparse column: `(row, value)` pairs sorted by row, values nonzero.
pub type SparseCol = Vec<(usize, BigRational)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMatrix {
    nrows: usize,
    cols: Vec<SparseCol>,
}

/// Result of an exact linear solve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Solution(Vec<BigRational>),
    /// No solution exists; `partial` solves the consistent sub-system and
    /// `residual = b - A partial` is the unreachable component.
    Inconsistent {
        partial: Vec<BigRational>,
        residual: Vec<BigRational>,
    },
}

impl QMatrix {
    pub fn from_columns(nrows: usize, cols: Vec<SparseCol>) -> Self {
        for col in &cols {
            debug_assert!(col.windows(2).all(|w| w[0].0 < w[1].0));
            debug_assert!(col.iter().all(|(r, v)| *r < nrows && !v.is_zero()));
        }
        QMatrix { nrows, cols }
    }

    pub fn zero(nrows: usize, ncols: usize) -> Self {
        QMatrix {
            nrows,
            cols: vec![Vec::new(); ncols],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, j: usize) -> &SparseCol {
        &self.cols[j]
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(|c| c.is_empty())
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }

    /// `self * rhs`; panics on shape mismatch.
    pub fn mul(&self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.ncols(), rhs.nrows, "matrix shapes do not compose");
        let cols = rhs
            .cols
            .iter()
            .map(|rcol| {
                let mut acc: BTreeMap<usize, BigRational> = BTreeMap::new();
                for (k, v) in rcol {
                    for (r, a) in &self.cols[*k] {
                        let entry = acc.entry(*r).or_insert_with(BigRational::zero);
                        *entry += a * v;
                    }
                }
                acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
            })
            .collect();
        QMatrix {
            nrows: self.nrows,
            cols,
        }
    }

    /// Matrix-vector product with a dense vector.
    pub fn apply(&self, x: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(x.len(), self.ncols());
        let mut out = vec![BigRational::zero(); self.nrows];
        for (j, col) in self.cols.iter().enumerate() {
            if x[j].is_zero() {
                continue;
            }
            for (r, v) in col {
                out[*r] += v * &x[j];
            }
        }
        out
    }

    /// Appends the columns of `extra` on the right.
    pub fn augmented_with(&self, extra: &QMatrix) -> QMatrix {
        assert_eq!(self.nrows, extra.nrows);
        let mut cols = self.cols.clone();
        cols.extend(extra.cols.iter().cloned());
        QMatrix {
            nrows: self.nrows,
            cols,
        }
    }

    fn to_int_rows(&self, aug: Option<&[BigRational]>) -> Vec<IntRow> {
        let mut rows: Vec<BTreeMap<usize, BigRational>> = vec![BTreeMap::new(); self.nrows];
        for (j, col) in self.cols.iter().enumerate() {
            for (r, v) in col {
                rows[*r].insert(j, v.clone());
            }
        }
        if let Some(b) = aug {
            assert_eq!(b.len(), self.nrows);
            for (r, v) in b.iter().enumerate() {
                if !v.is_zero() {
                    rows[r].insert(self.ncols(), v.clone());
                }
            }
        }
        rows.into_iter()
            .map(|row| {
                let mut denom_lcm = BigInt::one();
                for v in row.values() {
                    denom_lcm = denom_lcm.lcm(v.denom());
                }
                let entries: Vec<(usize, BigInt)> = row
                    .into_iter()
                    .map(|(j, v)| {
                        let scaled = v.numer() * (&denom_lcm / v.denom());
                        (j, scaled)
                    })
                    .collect();
                IntRow { entries }.stripped()
            })
            .collect()
    }

    fn echelon(&self, aug: Option<&[BigRational]>) -> Echelon {
        let ncols = self.ncols();
        let mut rows = self.to_int_rows(aug);
        rows.retain(|r| !r.entries.is_empty());
        let mut pivot_rows: Vec<IntRow> = Vec::new();
        let mut pivot_cols: Vec<usize> = Vec::new();
        let mut is_pivot_col = vec![false; ncols + 1];

        loop {
            // column occupancy among the remaining rows (main columns only)
            let mut occupancy: BTreeMap<usize, usize> = BTreeMap::new();
            for row in &rows {
                for (j, _) in &row.entries {
                    if *j < ncols {
                        *occupancy.entry(*j).or_insert(0) += 1;
                    }
                }
            }
            let Some((&col, _)) = occupancy.iter().min_by_key(|(j, c)| (**c, **j)) else {
                break;
            };
            // sparsest row with the smallest pivot magnitude
            let pick = rows
                .iter()
                .enumerate()
                .filter_map(|(idx, row)| row.get(col).map(|v| (row.entries.len(), v.abs(), idx)))
                .min()
                .map(|(_, _, idx)| idx)
                .expect("occupied column has a row");
            let pivot = rows.swap_remove(pick);
            let p = pivot.get(col).expect("pivot entry nonzero");
            for row in &mut rows {
                if let Some(a) = row.get(col) {
                    *row = row.eliminate(&pivot, &p, &a);
                }
            }
            rows.retain(|r| !r.entries.is_empty());
            pivot_cols.push(col);
            is_pivot_col[col] = true;
            pivot_rows.push(pivot);
        }

        // rows reduced to nothing but a nonzero augmented entry mark the
        // inconsistent part of a solve
        let inconsistent = rows
            .iter()
            .any(|r| r.entries.iter().any(|(j, _)| *j == ncols));
        Echelon {
            ncols,
            pivot_rows,
            pivot_cols,
            is_pivot_col,
            inconsistent,
        }
    }

    /// Exact rank over the rationals.
    pub fn rank(&self) -> usize {
        self.echelon(None).pivot_cols.len()
    }

    /// Basis of the right kernel as dense coordinate vectors.
    pub fn kernel(&self) -> Vec<Vec<BigRational>> {
        let ech = self.echelon(None);
        let ncols = self.ncols();
        let mut basis = Vec::new();
        for free in 0..ncols {
            if ech.is_pivot_col[free] {
                continue;
            }
            let mut x = vec![BigRational::zero(); ncols];
            x[free] = BigRational::one();
            ech.back_substitute(&mut x, None);
            basis.push(x);
        }
        basis
    }

    /// Solves `A x = b` exactly, reporting the residual when inconsistent.
    pub fn solve(&self, b: &[BigRational]) -> SolveOutcome {
        let ech = self.echelon(Some(b));
        let ncols = self.ncols();
        let mut x = vec![BigRational::zero(); ncols];
        ech.back_substitute(&mut x, Some(()));
        if ech.inconsistent {
            let ax = self.apply(&x);
            let residual: Vec<BigRational> =
                b.iter().zip(ax.iter()).map(|(bi, ai)| bi - ai).collect();
            SolveOutcome::Inconsistent {
                partial: x,
                residual,
            }
        } else {
            SolveOutcome::Solution(x)
        }
    }

    /// True when every column of `vectors` lies in the column span of
    /// `self`.
    pub fn spans(&self, vectors: &QMatrix) -> bool {
        let base = self.rank();
        self.augmented_with(vectors).rank() == base
    }
}

#[derive(Clone, Debug)]
struct IntRow {
    entries: Vec<(usize, BigInt)>,
}

impl IntRow {
    fn get(&self, col: usize) -> Option<BigInt> {
        self.entries
            .binary_search_by_key(&col, |(j, _)| *j)
            .ok()
            .map(|i| self.entries[i].1.clone())
    }

    /// Divides by the gcd of the entries, normalizing the leading sign.
    fn stripped(mut self) -> IntRow {
        self.entries.retain(|(_, v)| !v.is_zero());
        if self.entries.is_empty() {
            return self;
        }
        let mut g = BigInt::zero();
        for (_, v) in &self.entries {
            g = g.gcd(v);
        }
        if self.entries[0].1.is_negative() {
            g = -g;
        }
        if !g.is_one() {
            for (_, v) in &mut self.entries {
                *v = &*v / &g;
            }
        }
        self
    }

    /// `p * self - a * pivot`, content-stripped.
    fn eliminate(&self, pivot: &IntRow, p: &BigInt, a: &BigInt) -> IntRow {
        let mut out = Vec::with_capacity(self.entries.len() + pivot.entries.len());
        let mut i = 0;
        let mut j = 0;
        while i < self.entries.len() || j < pivot.entries.len() {
            let take_self = match (self.entries.get(i), pivot.entries.get(j)) {
                (Some((ci, _)), Some((cj, _))) => {
                    if ci == cj {
                        let v = p * &self.entries[i].1 - a * &pivot.entries[j].1;
                        if !v.is_zero() {
                            out.push((*ci, v));
                        }
                        i += 1;
                        j += 1;
                        continue;
                    }
                    ci < cj
                }
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_self {
                out.push((self.entries[i].0, p * &self.entries[i].1));
                i += 1;
            } else {
                out.push((pivot.entries[j].0, -(a * &pivot.entries[j].1)));
                j += 1;
            }
        }
        IntRow { entries: out }.stripped()
    }
}

struct Echelon {
    ncols: usize,
    pivot_rows: Vec<IntRow>,
    pivot_cols: Vec<usize>,
    is_pivot_col: Vec<bool>,
    inconsistent: bool,
}

impl Echelon {
    /// Resolves the pivot coordinates of `x` in reverse elimination order.
    /// Free coordinates (and, for kernel vectors, the designated one) must be
    /// set beforehand; with `aug` present the augmented column acts as the
    /// right-hand side.
    fn back_substitute(&self, x: &mut [BigRational], aug: Option<()>) {
        for k in (0..self.pivot_rows.len()).rev() {
            let row = &self.pivot_rows[k];
            let col = self.pivot_cols[k];
            let p = row.get(col).expect("pivot entry nonzero");
            let mut acc = BigRational::zero();
            for (j, v) in &row.entries {
                if *j == col {
                    continue;
                }
                if *j == self.ncols {
                    if aug.is_some() {
                        // p x_c + sum = aug  =>  move to the other side
                        acc -= BigRational::from_integer(v.clone());
                    }
                    continue;
                }
                if !x[*j].is_zero() {
                    acc += BigRational::from_integer(v.clone()) * &x[*j];
                }
            }
            x[col] = -acc / BigRational::from_integer(p);
        }
    }
}
