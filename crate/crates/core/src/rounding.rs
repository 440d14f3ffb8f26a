//! From the relaxed solution to a low-rank fair projection.
//!
//! In the eigenbasis `u_j` of the relaxed `P`, the relaxation becomes the LP
//!
//! ```text
//! min z  s.t.  z >= alpha_i - sum_j lambda_j c_ij,   sum_j lambda_j <= d,   0 <= lambda_j <= 1
//! ```
//!
//! with `c_ij = u_j^T A_i^T A_i u_j / m_i`. Purification walks from the
//! relaxed eigenvalues to an extreme point of this LP without raising the
//! objective; an extreme point has at most `k` fractional coordinates. The
//! coefficients `lambda*_j = 1 - sqrt(1 - lambda_j)` then define the affine
//! map `P* = sum_j lambda*_j u_j u_j^T`, whose losses equal the LP's because
//! `2 lambda* - lambda*^2 = lambda`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::losses::{loss_affine, GroupStats};
use crate::refcheck::exhaustive_vertex_enum;
use crate::spectra::SymmetricSpectrum;
use crate::Scalar;

const FRACTIONAL: f64 = 1e-9;
const TIGHT: f64 = 1e-9;
const MAX_ENUM_FACE: usize = 6;

/// Final fair projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairProjection<S> {
    /// `n x r`, orthonormal columns `u_j`.
    pub basis: Array2<S>,
    pub lambda_bar: Array1<S>,
    pub lambda_star: Array1<S>,
    pub d: usize,
    pub k: usize,
    /// Max per-group average loss.
    pub objective: S,
    pub per_group_loss: Array1<S>,
}

impl<S: Scalar> FairProjection<S> {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    /// `P* = sum_j lambda*_j u_j u_j^T` as a dense matrix.
    pub fn matrix(&self) -> Array2<S> {
        linalg::weighted_outer(self.basis.view(), self.lambda_star.as_slice().expect("contiguous"))
    }

    /// Number of `lambda_bar` strictly inside `(0, 1)`.
    pub fn fractional_count(&self) -> usize {
        fractional_indices(&self.lambda_bar).len()
    }

    /// Loss figures multiplied by `factor` (used to undo width scaling).
    pub fn with_loss_scale(mut self, factor: S) -> Self {
        self.objective *= factor;
        self.per_group_loss.mapv_inplace(|x| x * factor);
        self
    }

    /// Orthogonal rank-`d` projection onto the leading columns of `basis`.
    pub fn orthogonal(basis: Array2<S>, stats: &[GroupStats<S>], d: usize) -> Result<Self> {
        let r = basis.ncols();
        let ones = Array1::from_elem(r, S::one());
        assemble_from(basis, ones.clone(), ones, stats, d)
    }
}

/// Extreme point of the eigenbasis LP.
#[derive(Debug, Clone, PartialEq)]
pub struct LpVertex<S> {
    pub lambda_bar: Array1<S>,
    /// LP objective at `lambda_bar`.
    pub objective: S,
}

/// Coefficients `c_ij` and offsets `alpha_i` of the eigenbasis LP.
pub fn lp_coefficients<S: Scalar>(
    basis: ArrayView2<S>,
    stats: &[GroupStats<S>],
    d: usize,
) -> (Array2<S>, Array1<S>) {
    let r = basis.ncols();
    let mut c = Array2::zeros((stats.len(), r));
    let mut alpha = Array1::zeros(stats.len());
    for (i, g) in stats.iter().enumerate() {
        let m = g.count();
        alpha[i] = g.best_energy_at(d) / m;
        for j in 0..r {
            c[[i, j]] = linalg::column_quadratic(g.gram.view(), basis, j) / m;
        }
    }
    (c, alpha)
}

fn losses_at<S: Scalar>(c: &Array2<S>, alpha: &Array1<S>, lambda: &Array1<S>) -> Array1<S> {
    alpha - &c.dot(lambda)
}

fn max_of<S: Scalar>(v: &Array1<S>) -> S {
    v.iter().copied().fold(S::neg_infinity(), S::max)
}

fn fractional_indices<S: Scalar>(lambda: &Array1<S>) -> Vec<usize> {
    let eps = S::tol(FRACTIONAL);
    lambda
        .iter()
        .enumerate()
        .filter_map(|(j, &x)| (x > eps && x < S::one() - eps).then_some(j))
        .collect()
}

fn snap<S: Scalar>(lambda: &mut Array1<S>) {
    let eps = S::tol(FRACTIONAL);
    lambda.mapv_inplace(|x| {
        if x <= eps {
            S::zero()
        } else if x >= S::one() - eps {
            S::one()
        } else {
            x
        }
    });
}

/// Purifies the relaxed eigenvalues into an LP extreme point whose objective
/// is no worse than the starting one.
pub fn lp_extreme<S: Scalar>(
    spectrum: &SymmetricSpectrum<S>,
    stats: &[GroupStats<S>],
    d: usize,
) -> Result<LpVertex<S>> {
    let n = spectrum.dim();
    if stats.is_empty() || stats.iter().any(|g| g.dim() != n) {
        return Err(Error::usage("statistics do not match the spectrum dimension"));
    }
    let budget = S::from_usize(d).expect("dimension representable");
    let bound_tol = S::tol(1e-8);
    if spectrum
        .eigenvalues
        .iter()
        .any(|&x| x < -bound_tol || x > S::one() + bound_tol)
        || spectrum.eigenvalues.sum() > budget + bound_tol
    {
        return Err(Error::usage("relaxed solution outside 0 <= P <= I, tr(P) <= d"));
    }
    let (c, alpha) = lp_coefficients(spectrum.eigenvectors.view(), stats, d);
    let mut lambda = spectrum.eigenvalues.mapv(|x| x.max(S::zero()).min(S::one()));
    snap(&mut lambda);
    let total = lambda.sum();
    if total > budget {
        lambda.mapv_inplace(|x| x * budget / total);
    }
    let start = max_of(&losses_at(&c, &alpha, &lambda));
    let k = stats.len();

    for _ in 0..(n + k + 1) {
        let losses = losses_at(&c, &alpha, &lambda);
        let objective = max_of(&losses);
        let tight_gap = S::tol(TIGHT) * objective.abs().max(S::one());
        let tight: Vec<usize> = (0..k).filter(|&i| objective - losses[i] <= tight_gap).collect();
        let frac = fractional_indices(&lambda);
        if frac.is_empty() {
            break;
        }
        let sub = c.select(Axis(0), &tight).select(Axis(1), &frac);
        let Some(dir) = linalg::null_vector(sub.view(), S::tol(1e-10)) else {
            break;
        };
        let mut delta = Array1::zeros(n);
        for (&j, &v) in frac.iter().zip(dir.iter()) {
            delta[j] = v;
        }
        if delta.sum() > S::zero() {
            delta.mapv_inplace(|x| -x);
        }
        let step = max_step(&lambda, &delta, &frac, &c, &losses, objective, &tight);
        if !(step > S::zero()) || !step.is_finite() {
            break;
        }
        lambda.scaled_add(step, &delta);
        snap(&mut lambda);
    }

    if fractional_indices(&lambda).len() > k {
        lambda = enumerate_face(&lambda, &c, &alpha, budget)?;
    }
    let objective = max_of(&losses_at(&c, &alpha, &lambda));
    if objective > start + S::tol(1e-9) * start.abs().max(S::one()) {
        return Err(Error::Internal(format!(
            "purification raised the objective from {start} to {objective}"
        )));
    }
    Ok(LpVertex {
        lambda_bar: lambda,
        objective,
    })
}

/// Largest `t` keeping `lambda + t delta` in the box and every slack group
/// loss at or below the current objective.
fn max_step<S: Scalar>(
    lambda: &Array1<S>,
    delta: &Array1<S>,
    frac: &[usize],
    c: &Array2<S>,
    losses: &Array1<S>,
    objective: S,
    tight: &[usize],
) -> S {
    let mut step = S::infinity();
    for &j in frac {
        let dj = delta[j];
        if dj > S::zero() {
            step = step.min((S::one() - lambda[j]) / dj);
        } else if dj < S::zero() {
            step = step.min(lambda[j] / -dj);
        }
    }
    let rates = c.dot(delta).mapv(|x| -x);
    for i in 0..losses.len() {
        if !tight.contains(&i) && rates[i] > S::zero() {
            step = step.min((objective - losses[i]) / rates[i]);
        }
    }
    step
}

fn enumerate_face<S: Scalar>(
    lambda: &Array1<S>,
    c: &Array2<S>,
    alpha: &Array1<S>,
    budget: S,
) -> Result<Array1<S>> {
    let frac = fractional_indices(lambda);
    if frac.len() > MAX_ENUM_FACE {
        return Err(Error::Internal(format!(
            "purification stalled with {} fractional coordinates",
            frac.len()
        )));
    }
    let mut fixed = lambda.clone();
    for &j in &frac {
        fixed[j] = S::zero();
    }
    let face_alpha = losses_at(c, alpha, &fixed);
    let face_budget = budget - fixed.sum();
    let face_c = c.select(Axis(1), &frac);
    let vertex = exhaustive_vertex_enum(face_c.view(), face_alpha.as_slice().expect("contiguous"), face_budget)?;
    let mut out = fixed;
    for (&j, &v) in frac.iter().zip(vertex.lambda.iter()) {
        out[j] = v;
    }
    snap(&mut out);
    Ok(out)
}

/// `lambda* = 1 - sqrt(1 - lambda)`, so that `2 lambda* - lambda*^2 = lambda`.
pub fn sqrt_transform<S: Scalar>(lambda_bar: &Array1<S>) -> Result<Array1<S>> {
    let eps = S::tol(1e-9);
    if let Some(x) = lambda_bar.iter().find(|&&x| !(x >= -eps && x <= S::one() + eps)) {
        return Err(Error::usage(format!("coefficient {x} outside [0, 1]")));
    }
    Ok(lambda_bar.mapv(|x| {
        let x = x.max(S::zero()).min(S::one());
        S::one() - (S::one() - x).sqrt()
    }))
}

/// Builds the fair projection from the eigenbasis and LP vertex, dropping
/// directions whose coefficient vanishes.
pub fn assemble<S: Scalar>(
    eigenvectors: ArrayView2<S>,
    lambda_bar: &Array1<S>,
    lambda_star: &Array1<S>,
    stats: &[GroupStats<S>],
    d: usize,
) -> Result<FairProjection<S>> {
    let keep: Vec<usize> = lambda_star
        .iter()
        .enumerate()
        .filter_map(|(j, &x)| (x > S::tol(FRACTIONAL)).then_some(j))
        .collect();
    let k = stats.len();
    if keep.len() > d + k.saturating_sub(1) {
        return Err(Error::Internal(format!(
            "rank {} exceeds d + k - 1 = {}",
            keep.len(),
            d + k - 1
        )));
    }
    assemble_from(
        eigenvectors.select(Axis(1), &keep),
        lambda_bar.select(Axis(0), &keep),
        lambda_star.select(Axis(0), &keep),
        stats,
        d,
    )
}

fn assemble_from<S: Scalar>(
    basis: Array2<S>,
    lambda_bar: Array1<S>,
    lambda_star: Array1<S>,
    stats: &[GroupStats<S>],
    d: usize,
) -> Result<FairProjection<S>> {
    let coeffs = lambda_star.as_slice().expect("contiguous");
    let per_group_loss = stats
        .iter()
        .map(|g| Ok(loss_affine(g, basis.view(), coeffs, d)? / g.count()))
        .collect::<Result<Array1<S>>>()?;
    Ok(FairProjection {
        objective: max_of(&per_group_loss).max(S::zero()),
        basis,
        lambda_bar,
        lambda_star,
        d,
        k: stats.len(),
        per_group_loss,
    })
}

/// Coordinates `sqrt(lambda*_j) * (x . u_j)` for each row `x`.
pub fn embed<S: Scalar>(x: ArrayView2<S>, projection: &FairProjection<S>) -> Result<Array2<S>> {
    if x.ncols() != projection.n() {
        return Err(Error::usage(format!(
            "rows have {} columns, projection expects {}",
            x.ncols(),
            projection.n()
        )));
    }
    let mut out = x.dot(&projection.basis);
    for (mut col, &l) in out.axis_iter_mut(Axis(1)).zip(projection.lambda_star.iter()) {
        let s = l.sqrt();
        col.mapv_inplace(|v| v * s);
    }
    Ok(out)
}
