//! Best convex combination of a set of loss vectors.
//!
//! Given columns `z_1..z_T` in `R^k`, finds the mixture `mu` on the simplex
//! minimizing `max_i sum_t mu_t z_t[i]`. After shifting every entry to be at
//! least 1 this is the LP `max 1^T y  s.t.  Z y <= 1, y >= 0` (origin
//! feasible), solved by a dense tableau simplex with Bland's rule. `k` is the
//! number of groups, so the tableau has only `k` rows.

use ndarray::{Array1, Array2};

use crate::Scalar;

#[derive(Debug, Clone)]
pub(crate) struct Mixture<S> {
    pub weights: Vec<S>,
    pub value: S,
}

pub(crate) fn minmax_mixture<S: Scalar>(columns: &[Array1<S>]) -> Mixture<S> {
    let t_count = columns.len();
    assert!(t_count > 0, "mixture of zero columns");
    let k = columns[0].len();
    let lowest = columns
        .iter()
        .flat_map(|c| c.iter().copied())
        .fold(S::infinity(), S::min);
    let shift = S::one() - lowest;

    let width = t_count + k;
    let rhs = width;
    let mut tab = Array2::<S>::zeros((k, width + 1));
    for (t, col) in columns.iter().enumerate() {
        for i in 0..k {
            tab[[i, t]] = col[i] + shift;
        }
    }
    for i in 0..k {
        tab[[i, t_count + i]] = S::one();
        tab[[i, rhs]] = S::one();
    }
    let mut reduced = vec![S::zero(); width + 1];
    for r in reduced.iter_mut().take(t_count) {
        *r = S::one();
    }
    let mut basis: Vec<usize> = (t_count..width).collect();

    let eps = S::tol(1e-12);
    let max_pivots = 50 * (width + 1);
    for _ in 0..max_pivots {
        let Some(enter) = (0..width).find(|&j| reduced[j] > eps) else {
            break;
        };
        let mut leave: Option<(usize, S)> = None;
        for i in 0..k {
            let a = tab[[i, enter]];
            if a > eps {
                let ratio = tab[[i, rhs]] / a;
                let better = match leave {
                    None => true,
                    Some((li, lr)) => ratio < lr || (ratio == lr && basis[i] < basis[li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // bounded: every column has entries >= 1
        let Some((row, _)) = leave else { break };
        pivot(&mut tab, &mut reduced, row, enter);
        basis[row] = enter;
    }

    let mut y = vec![S::zero(); t_count];
    for (i, &b) in basis.iter().enumerate() {
        if b < t_count {
            y[b] = tab[[i, rhs]].max(S::zero());
        }
    }
    let total: S = y.iter().copied().sum();
    let weights: Vec<S> = if total > S::zero() {
        y.iter().map(|&v| v / total).collect()
    } else {
        let mut w = vec![S::zero(); t_count];
        w[t_count - 1] = S::one();
        w
    };
    let value = mixed_max(columns, &weights);
    Mixture { weights, value }
}

fn pivot<S: Scalar>(tab: &mut Array2<S>, reduced: &mut [S], row: usize, col: usize) {
    let p = tab[[row, col]];
    tab.row_mut(row).mapv_inplace(|x| x / p);
    let pivot_row = tab.row(row).to_owned();
    for i in 0..tab.nrows() {
        if i != row {
            let f = tab[[i, col]];
            if f != S::zero() {
                tab.row_mut(i).scaled_add(-f, &pivot_row);
            }
        }
    }
    let f = reduced[col];
    for (r, &x) in reduced.iter_mut().zip(pivot_row.iter()) {
        *r -= f * x;
    }
}

/// `max_i sum_t w_t z_t[i]`.
pub(crate) fn mixed_max<S: Scalar>(columns: &[Array1<S>], weights: &[S]) -> S {
    mixed(columns, weights).iter().copied().fold(S::neg_infinity(), S::max)
}

pub(crate) fn mixed<S: Scalar>(columns: &[Array1<S>], weights: &[S]) -> Array1<S> {
    let mut acc = Array1::zeros(columns[0].len());
    for (col, &w) in columns.iter().zip(weights) {
        if w != S::zero() {
            acc.scaled_add(w, col);
        }
    }
    acc
}
