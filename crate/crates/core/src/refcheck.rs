//! Brute-force reference solvers for small instances.
//!
//! [`grid_search_d1`] evaluates the one-dimensional fair PCA objective over a
//! covering of the unit sphere and serves as an independent check on the
//! relaxation pipeline. [`exhaustive_vertex_enum`] solves a small LP face by
//! listing its basic points; rounding falls back to it when purification
//! stalls.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::losses::GroupStats;
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct GridResult<S> {
    pub best_direction: Array1<S>,
    /// Min over the grid of the max per-group average loss.
    pub z_grid: S,
    pub resolution: f64,
}

/// Points on the unit circle (`n = 2`, half-turn suffices since `v` and `-v`
/// give the same projection) or a Fibonacci covering of the sphere (`n = 3`).
pub fn grid_points(n: usize, resolution: f64) -> Result<Vec<[f64; 3]>> {
    if !(resolution > 0.0) {
        return Err(Error::usage("grid resolution must be positive"));
    }
    match n {
        2 => {
            let count = (PI / resolution).ceil() as usize;
            Ok((0..count)
                .map(|i| {
                    let th = i as f64 * resolution;
                    [th.cos(), th.sin(), 0.0]
                })
                .collect())
        }
        3 => {
            let count = (4.0 * PI / (resolution * resolution)).ceil() as usize;
            let golden = PI * (3.0 - 5f64.sqrt());
            Ok((0..count)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * i as f64;
                    [r * phi.cos(), r * phi.sin(), z]
                })
                .collect())
        }
        other => Err(Error::usage(format!("grid search supports n in {{2, 3}}, got {other}"))),
    }
}

/// Exhaustive `d = 1` fair PCA over a grid of directions. Ties go to the
/// lowest grid index.
pub fn grid_search_d1<S: Scalar>(stats: &[GroupStats<S>], resolution: f64) -> Result<GridResult<S>> {
    if stats.is_empty() {
        return Err(Error::usage("no groups"));
    }
    let n = stats[0].dim();
    let points = grid_points(n, resolution)?;
    let groups: Vec<([[f64; 3]; 3], f64, f64)> = stats
        .iter()
        .map(|g| {
            let m = g.rows as f64;
            let mut cov = [[0.0; 3]; 3];
            for i in 0..n {
                for j in 0..n {
                    cov[i][j] = g.gram[[i, j]].as_f64() / m;
                }
            }
            (cov, g.best_energy_at(1).as_f64() / m, m)
        })
        .collect();
    let objective = |v: &[f64; 3]| {
        groups
            .iter()
            .map(|(cov, alpha, _)| {
                let mut q = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        q += v[i] * cov[i][j] * v[j];
                    }
                }
                alpha - q
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (best_idx, best_val) = points
        .par_iter()
        .enumerate()
        .map(|(i, v)| (i, objective(v)))
        .reduce(
            || (usize::MAX, f64::INFINITY),
            |a, b| {
                if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let v = points[best_idx];
    Ok(GridResult {
        best_direction: (0..n).map(|i| S::lit(v[i])).collect(),
        z_grid: S::lit(best_val),
        resolution,
    })
}

/// Basic point of the face LP.
#[derive(Debug, Clone)]
pub struct FaceVertex<S> {
    pub lambda: Array1<S>,
    pub z: S,
}

/// Optimal vertex of
///
/// ```text
/// min z  s.t.  z >= alpha_i - sum_j c_ij lambda_j,  sum_j lambda_j <= budget,  0 <= lambda_j <= 1
/// ```
///
/// by enumerating every choice of active constraints. `c` is `k x f` with
/// `f <= 6`.
pub fn exhaustive_vertex_enum<S: Scalar>(
    c: ArrayView2<S>,
    alpha: &[S],
    budget: S,
) -> Result<FaceVertex<S>> {
    let (k, f) = c.dim();
    if f > 6 {
        return Err(Error::usage(format!("face of {f} coordinates too large to enumerate")));
    }
    if alpha.len() != k || k == 0 {
        return Err(Error::usage("alpha length must match constraint rows"));
    }
    let tol = S::tol(1e-9);
    if budget < -tol {
        return Err(Error::Numerical(format!("face budget {budget} is negative")));
    }
    let objective = |lambda: &Array1<S>| -> S {
        (0..k)
            .map(|i| alpha[i] - c.row(i).dot(lambda))
            .fold(S::neg_infinity(), S::max)
    };
    if f == 0 {
        let lambda = Array1::zeros(0);
        let z = objective(&lambda);
        return Ok(FaceVertex { lambda, z });
    }

    // constraint rows over (lambda_1..lambda_f, z) with right-hand sides
    let vars = f + 1;
    let mut rows: Vec<(Array1<S>, S)> = Vec::new();
    for j in 0..f {
        let mut a = Array1::zeros(vars);
        a[j] = S::one();
        rows.push((a.clone(), S::zero()));
        rows.push((a, S::one()));
    }
    let mut trace = Array1::from_elem(vars, S::one());
    trace[f] = S::zero();
    rows.push((trace, budget));
    for i in 0..k {
        let mut a = Array1::zeros(vars);
        for j in 0..f {
            a[j] = c[[i, j]];
        }
        a[f] = S::one();
        rows.push((a, alpha[i]));
    }

    let mut best: Option<FaceVertex<S>> = None;
    for subset in combinations(rows.len(), vars) {
        let mut a = Array2::zeros((vars, vars));
        let mut b = Array1::zeros(vars);
        for (r, &idx) in subset.iter().enumerate() {
            a.row_mut(r).assign(&rows[idx].0);
            b[r] = rows[idx].1;
        }
        let Some(x) = linalg::solve(a, b) else {
            continue;
        };
        let lambda = x.slice(ndarray::s![..f]).to_owned();
        if lambda.iter().any(|&l| l < -tol || l > S::one() + tol) || lambda.sum() > budget + tol {
            continue;
        }
        let z = objective(&lambda);
        if x[f] < z - tol * z.abs().max(S::one()) {
            continue;
        }
        if best.as_ref().is_none_or(|b| z < b.z) {
            best = Some(FaceVertex {
                lambda: lambda.mapv(|l| l.max(S::zero()).min(S::one())),
                z,
            });
        }
    }
    best.ok_or_else(|| Error::Internal("face LP has no basic feasible point".into()))
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..r).rev().find(|&i| idx[i] != i + n - r) else {
            return out;
        };
        idx[i] += 1;
        for j in (i + 1)..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
