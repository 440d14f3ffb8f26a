//! Small dense helpers that do not warrant a dependency.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::Scalar;

/// Frobenius inner product `<A, B> = sum_ij A_ij B_ij`.
pub(crate) fn frobenius_inner<S: Scalar>(a: ArrayView2<S>, b: ArrayView2<S>) -> S {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn max_abs<S: Scalar>(a: ArrayView2<S>) -> S {
    a.iter().fold(S::zero(), |acc, &x| acc.max(x.abs()))
}

/// `max |A - A^T|`.
pub(crate) fn asymmetry<S: Scalar>(a: ArrayView2<S>) -> S {
    let n = a.nrows();
    let mut worst = S::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize<S: Scalar>(a: &mut Array2<S>) {
    let n = a.nrows();
    let half = S::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (a[[i, j]] + a[[j, i]]) * half;
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
}

/// `max |V^T V - I|` for a matrix with orthonormal columns.
pub(crate) fn orthonormality_defect<S: Scalar>(v: ArrayView2<S>) -> S {
    let gram = v.t().dot(&v);
    let mut worst = S::zero();
    for ((i, j), &x) in gram.indexed_iter() {
        let target = if i == j { S::one() } else { S::zero() };
        worst = worst.max((x - target).abs());
    }
    worst
}

/// Quadratic form `u^T C u` for column `j` of `basis`.
pub(crate) fn column_quadratic<S: Scalar>(c: ArrayView2<S>, basis: ArrayView2<S>, j: usize) -> S {
    let u = basis.column(j);
    u.dot(&c.dot(&u))
}

/// `V diag(w) V^T`.
pub(crate) fn weighted_outer<S: Scalar>(basis: ArrayView2<S>, weights: &[S]) -> Array2<S> {
    let mut scaled = basis.to_owned();
    for (mut col, &w) in scaled.axis_iter_mut(Axis(1)).zip(weights) {
        col.mapv_inplace(|x| x * w);
    }
    let mut out = scaled.dot(&basis.t());
    symmetrize(&mut out);
    out
}

/// Solves the square system `A x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when `A` is numerically singular.
pub(crate) fn solve<S: Scalar>(mut a: Array2<S>, mut b: Array1<S>) -> Option<Array1<S>> {
    let n = a.nrows();
    let scale = max_abs(a.view()).max(S::one());
    let singular = S::tol(1e-12) * scale;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[[i, col]]
                .abs()
                .partial_cmp(&a[[j, col]].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[[pivot, col]].abs() <= singular {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap([pivot, k], [col, k]);
            }
            b.swap(pivot, col);
        }
        for row in (col + 1)..n {
            let f = a[[row, col]] / a[[col, col]];
            if f == S::zero() {
                continue;
            }
            for k in col..n {
                let v = a[[col, k]];
                a[[row, k]] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[[row, k]] * x[k];
        }
        x[row] = acc / a[[row, row]];
    }
    Some(x)
}

/// Returns a nonzero vector in the null space of `a` (rows x cols), or
/// `None` when the null space is trivial at tolerance `tol` (relative to the
/// largest entry).
pub(crate) fn null_vector<S: Scalar>(a: ArrayView2<S>, tol: S) -> Option<Array1<S>> {
    let (rows, cols) = a.dim();
    let mut m = a.to_owned();
    let threshold = tol * max_abs(a).max(S::one());
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let best = (r..rows)
            .max_by(|&i, &j| {
                m[[i, c]]
                    .abs()
                    .partial_cmp(&m[[j, c]].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty row range");
        if m[[best, c]].abs() <= threshold {
            continue;
        }
        for k in 0..cols {
            m.swap([best, k], [r, k]);
        }
        let p = m[[r, c]];
        for k in 0..cols {
            m[[r, k]] /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = m[[i, c]];
                if f != S::zero() {
                    for k in 0..cols {
                        let v = m[[r, k]];
                        m[[i, k]] -= f * v;
                    }
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let free = (0..cols).find(|c| !pivot_cols.contains(c))?;
    let mut x = Array1::zeros(cols);
    x[free] = S::one();
    for (row, &pc) in pivot_cols.iter().enumerate() {
        x[pc] = -m[[row, free]];
    }
    Some(x)
}
