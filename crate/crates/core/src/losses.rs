//! Reconstruction error and marginal loss accounting.
//!
//! For `V` with orthonormal columns, `||A - A V V^T||_F^2 = ||A||_F^2 - <A^T A, V V^T>`,
//! so every per-group quantity is a linear functional of the projection
//! evaluated against the group's Gram matrix. Nothing here materializes an
//! `m x n` reconstruction.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::GroupedDataset;
use crate::linalg;
use crate::rounding::FairProjection;
use crate::spectra::{eig_sym, gram};
use crate::Scalar;

/// Per-group sufficient statistics.
#[derive(Debug, Clone)]
pub struct GroupStats<S> {
    pub label: String,
    /// Number of rows in the group.
    pub rows: usize,
    /// `A_i^T A_i`.
    pub gram: Array2<S>,
    /// `||A_i||_F^2`.
    pub total_energy: S,
    // prefix[d] = sum of the top d eigenvalues of `gram`
    prefix: Vec<S>,
}

impl<S: Scalar> GroupStats<S> {
    pub fn from_rows(label: impl Into<String>, rows: ArrayView2<S>) -> Result<Self> {
        Self::from_gram(label, rows.nrows(), gram(rows))
    }

    pub fn from_gram(label: impl Into<String>, rows: usize, gram: Array2<S>) -> Result<Self> {
        let label = label.into();
        if rows == 0 {
            return Err(Error::data(format!("group {label:?} has no rows")));
        }
        let spectrum = eig_sym(gram.view())?;
        let mut prefix = Vec::with_capacity(spectrum.dim() + 1);
        let mut acc = S::zero();
        prefix.push(acc);
        for &lambda in spectrum.eigenvalues.iter() {
            acc += lambda.max(S::zero());
            prefix.push(acc);
        }
        let total_energy = gram.diag().sum();
        Ok(Self {
            label,
            rows,
            gram,
            total_energy,
            prefix,
        })
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    /// `||Â_i||_F^2` for the best rank-`d` approximation; saturates at `n`.
    pub fn best_energy_at(&self, d: usize) -> S {
        self.prefix[d.min(self.prefix.len() - 1)]
    }

    /// `(||A_i||_F^2 - ||Â_i||_F^2) / m_i`, the group's own optimal average error.
    pub fn optimal_avg_error(&self, d: usize) -> S {
        (self.total_energy - self.best_energy_at(d)) / self.count()
    }

    pub(crate) fn count(&self) -> S {
        S::from_usize(self.rows).expect("row count representable")
    }

    /// Scales the underlying data by `c` (Gram by `c^2`).
    pub fn scaled(&self, c: S) -> Self {
        let c2 = c * c;
        Self {
            label: self.label.clone(),
            rows: self.rows,
            gram: self.gram.mapv(|x| x * c2),
            total_energy: self.total_energy * c2,
            prefix: self.prefix.iter().map(|&x| x * c2).collect(),
        }
    }
}

/// `||Y - Z||_F^2`.
pub fn reconstruction_error<S: Scalar>(y: ArrayView2<S>, z: ArrayView2<S>) -> Result<S> {
    if y.dim() != z.dim() {
        return Err(Error::usage(format!(
            "shape mismatch: {:?} vs {:?}",
            y.dim(),
            z.dim()
        )));
    }
    Ok(y.iter().zip(z.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum())
}

/// `loss(A, A V V^T) = ||Â||_F^2 - <A^T A, V V^T>`.
pub fn loss_projection<S: Scalar>(stats: &GroupStats<S>, v: ArrayView2<S>, d: usize) -> Result<S> {
    check_basis(stats, v)?;
    let captured: S = (0..v.ncols())
        .map(|j| linalg::column_quadratic(stats.gram.view(), v, j))
        .sum();
    Ok(stats.best_energy_at(d) - captured)
}

/// Loss of the affine map `P* = sum_j c_j u_j u_j^T`:
/// `||Â||_F^2 - sum_j (2 c_j - c_j^2) <A^T A, u_j u_j^T>`.
pub fn loss_affine<S: Scalar>(
    stats: &GroupStats<S>,
    basis: ArrayView2<S>,
    coeffs: &[S],
    d: usize,
) -> Result<S> {
    check_basis(stats, basis)?;
    if coeffs.len() != basis.ncols() {
        return Err(Error::usage(format!(
            "{} coefficients for {} basis vectors",
            coeffs.len(),
            basis.ncols()
        )));
    }
    if let Some(c) = coeffs.iter().find(|&&c| !(c > S::zero() && c <= S::one())) {
        return Err(Error::usage(format!("affine coefficient {c} outside (0, 1]")));
    }
    Ok(stats.best_energy_at(d) - captured_energy(stats, basis, &effective_weights(coeffs)))
}

/// `2c - c^2` per coordinate: the weight each direction carries in `(I - P*)^2`.
pub(crate) fn effective_weights<S: Scalar>(coeffs: &[S]) -> Vec<S> {
    coeffs
        .iter()
        .map(|&c| S::lit(2.0) * c - c * c)
        .collect()
}

fn captured_energy<S: Scalar>(stats: &GroupStats<S>, basis: ArrayView2<S>, weights: &[S]) -> S {
    weights
        .iter()
        .enumerate()
        .map(|(j, &w)| w * linalg::column_quadratic(stats.gram.view(), basis, j))
        .sum()
}

fn check_basis<S: Scalar>(stats: &GroupStats<S>, v: ArrayView2<S>) -> Result<()> {
    if v.nrows() != stats.dim() {
        return Err(Error::usage(format!(
            "basis has {} rows, data has {} columns",
            v.nrows(),
            stats.dim()
        )));
    }
    if linalg::orthonormality_defect(v) > S::tol(1e-8) {
        return Err(Error::usage("basis columns are not orthonormal"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Vanilla,
    Fair,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Vanilla => "vanilla",
            Method::Fair => "fair",
        })
    }
}

/// A projection to audit: an orthonormal `V` (applied as `V V^T`) or a fair
/// affine projection.
#[derive(Debug, Clone, Copy)]
pub enum Projector<'a, S> {
    Vanilla(ArrayView2<'a, S>),
    Fair(&'a FairProjection<S>),
}

impl<'a, S: Scalar> Projector<'a, S> {
    fn method(&self) -> Method {
        match self {
            Projector::Vanilla(_) => Method::Vanilla,
            Projector::Fair(_) => Method::Fair,
        }
    }

    fn basis(&self) -> ArrayView2<'a, S> {
        match self {
            Projector::Vanilla(v) => *v,
            Projector::Fair(p) => p.basis.view(),
        }
    }

    fn weights(&self) -> Vec<S> {
        match self {
            Projector::Vanilla(v) => vec![S::one(); v.ncols()],
            Projector::Fair(p) => effective_weights(p.lambda_star.as_slice().expect("contiguous")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLoss<S> {
    pub label: String,
    pub avg_error: S,
    pub avg_loss: S,
}

/// Per-group average error and loss for one method at one dimension.
///
/// Values are in the units of the preprocessed data before width
/// normalization; `width_factor` converts them back (`raw * s^2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport<S> {
    pub method: Method,
    pub d: usize,
    pub per_group: Vec<GroupLoss<S>>,
    pub width_factor: S,
}

impl<S: Scalar> LossReport<S> {
    pub fn max_avg_loss(&self) -> S {
        self.per_group
            .iter()
            .map(|g| g.avg_loss)
            .fold(S::neg_infinity(), S::max)
    }

    /// The same report in width-normalized units.
    pub fn normalized(&self) -> Self {
        let s2 = self.width_factor * self.width_factor;
        Self {
            per_group: self
                .per_group
                .iter()
                .map(|g| GroupLoss {
                    label: g.label.clone(),
                    avg_error: g.avg_error * s2,
                    avg_loss: g.avg_loss * s2,
                })
                .collect(),
            width_factor: S::one(),
            ..self.clone()
        }
    }

    /// Rows of the report CSV: `method,d,group,avg_error,avg_loss`.
    pub fn csv_records(&self) -> Vec<[String; 5]> {
        self.per_group
            .iter()
            .map(|g| {
                [
                    self.method.to_string(),
                    self.d.to_string(),
                    g.label.clone(),
                    g.avg_error.to_string(),
                    g.avg_loss.to_string(),
                ]
            })
            .collect()
    }
}

pub const REPORT_HEADER: [&str; 5] = ["method", "d", "group", "avg_error", "avg_loss"];

/// Audits a projection on every group of `dataset`.
pub fn audit<S: Scalar>(
    dataset: &GroupedDataset<S>,
    d: usize,
    projector: Projector<'_, S>,
) -> Result<LossReport<S>> {
    let stats = dataset.group_stats()?;
    audit_stats(&stats, d, projector, dataset.scale_record.width_factor)
}

/// [`audit`] on precomputed statistics.
pub fn audit_stats<S: Scalar>(
    stats: &[GroupStats<S>],
    d: usize,
    projector: Projector<'_, S>,
    width_factor: S,
) -> Result<LossReport<S>> {
    let basis = projector.basis();
    let weights = projector.weights();
    let unscale = S::one() / (width_factor * width_factor);
    let mut per_group = Vec::with_capacity(stats.len());
    for g in stats {
        check_basis(g, basis)?;
        let captured = captured_energy(g, basis, &weights);
        let m = g.count();
        let avg_error = (g.total_energy - captured) / m;
        let avg_loss = (g.best_energy_at(d) - captured) / m;
        per_group.push(GroupLoss {
            label: g.label.clone(),
            avg_error: avg_error * unscale,
            avg_loss: avg_loss * unscale,
        });
    }
    Ok(LossReport {
        method: projector.method(),
        d,
        per_group,
        width_factor,
    })
}

/// Average loss vector over groups for a projection given by `basis` and
/// effective weights; solver-unit helper for the MW loop and rounding.
pub(crate) fn avg_losses<S: Scalar>(
    stats: &[GroupStats<S>],
    basis: ArrayView2<S>,
    weights: &[S],
    d: usize,
) -> Array1<S> {
    stats
        .iter()
        .map(|g| (g.best_energy_at(d) - captured_energy(g, basis, weights)) / g.count())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_matrix, random_orthonormal, rng};
    use ndarray::array;

    fn axis_group() -> GroupStats<f64> {
        let a = array![[1.0, 0.0], [-1.0, 0.0], [2.0, 0.0], [-2.0, 0.0]];
        GroupStats::from_rows("a", a.view()).unwrap()
    }

    #[test]
    fn reconstruction_error_examples() {
        let y = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(reconstruction_error(y.view(), y.view()).unwrap(), 0.0);
        assert_eq!(
            reconstruction_error(array![[1.0, 0.0]].view(), array![[0.0, 0.0]].view()).unwrap(),
            1.0
        );
        assert!(reconstruction_error(y.view(), array![[1.0, 2.0]].view()).is_err());

        let mut r = rng(4);
        let a = random_matrix(&mut r, 4, 3);
        let b = random_matrix(&mut r, 4, 3);
        let mut oracle = 0.0;
        for i in 0..4 {
            for j in 0..3 {
                oracle += (a[[i, j]] - b[[i, j]]).powi(2);
            }
        }
        let got = reconstruction_error(a.view(), b.view()).unwrap();
        assert!((got - oracle).abs() <= 1e-14 * oracle);
    }

    #[test]
    fn axis_group_projection_losses() {
        let g = axis_group();
        assert_eq!(g.best_energy_at(1), 10.0);
        assert_eq!(loss_projection(&g, array![[1.0], [0.0]].view(), 1).unwrap(), 0.0);
        assert_eq!(loss_projection(&g, array![[0.0], [1.0]].view(), 1).unwrap(), 10.0);
        assert!(loss_projection(&g, array![[1.0], [1.0]].view(), 1).is_err());
    }

    #[test]
    fn closed_form_matches_definition() {
        let mut r = rng(8);
        for _ in 0..50 {
            let a = random_matrix(&mut r, 9, 5);
            let g = GroupStats::from_rows("g", a.view()).unwrap();
            let v = random_orthonormal(&mut r, 5, 2);
            let projected = a.dot(&v).dot(&v.t());
            let err_v = reconstruction_error(a.view(), projected.view()).unwrap();
            let best = crate::spectra::pca_top_d(g.gram.view(), 2).unwrap();
            let err_best =
                reconstruction_error(a.view(), a.dot(&best).dot(&best.t()).view()).unwrap();
            let definitional = err_v - err_best;
            let closed = loss_projection(&g, v.view(), 2).unwrap();
            assert!((closed - definitional).abs() <= 1e-9 * definitional.abs().max(1e-12));
            assert!(closed >= -1e-9);
        }
    }

    #[test]
    fn affine_with_unit_coefficients_is_projection() {
        let mut r = rng(13);
        let a = random_matrix(&mut r, 6, 4);
        let g = GroupStats::from_rows("g", a.view()).unwrap();
        let v = random_orthonormal(&mut r, 4, 2);
        let via_affine = loss_affine(&g, v.view(), &[1.0, 1.0], 2).unwrap();
        let via_proj = loss_projection(&g, v.view(), 2).unwrap();
        assert!((via_affine - via_proj).abs() < 1e-12);
        assert!(loss_affine(&g, v.view(), &[0.0, 1.0], 2).is_err());
        assert!(loss_affine(&g, v.view(), &[1.2, 1.0], 2).is_err());
    }

    #[test]
    fn affine_cross_example() {
        // group a of the cross fixture, rank-2 basis with both coefficients 1 - sqrt(1/2)
        let g = axis_group();
        let c = 1.0 - 0.5f64.sqrt();
        let basis = Array2::<f64>::eye(2);
        let loss = loss_affine(&g, basis.view(), &[c, c], 1).unwrap();
        assert!((loss - 5.0).abs() < 1e-12);
        assert!((loss / 4.0 - 1.25).abs() < 1e-12);
    }

    #[test]
    fn affine_matches_explicit_matrix() {
        let mut r = rng(17);
        for _ in 0..20 {
            let a = random_matrix(&mut r, 8, 4);
            let g = GroupStats::from_rows("g", a.view()).unwrap();
            let u = random_orthonormal(&mut r, 4, 3);
            let coeffs = [0.9, 0.4, 0.15];
            let p_star = linalg::weighted_outer(u.view(), &coeffs);
            let err = reconstruction_error(a.view(), a.dot(&p_star).view()).unwrap();
            let oracle = err - (g.total_energy - g.best_energy_at(2));
            let got = loss_affine(&g, u.view(), &coeffs, 2).unwrap();
            assert!((got - oracle).abs() <= 1e-8 * (1.0 + oracle.abs()));
        }
    }

    #[test]
    fn sqrt_coefficients_reproduce_linear_value() {
        let mut r = rng(19);
        let a = random_matrix(&mut r, 7, 3);
        let g = GroupStats::from_rows("g", a.view()).unwrap();
        let u = random_orthonormal(&mut r, 3, 3);
        let lambda_bar: [f64; 3] = [1.0, 0.6, 0.25];
        let star: Vec<f64> = lambda_bar.iter().map(|l| 1.0 - (1.0 - l).sqrt()).collect();
        let linear = g.best_energy_at(1)
            - (0..3)
                .map(|j| lambda_bar[j] * linalg::column_quadratic(g.gram.view(), u.view(), j))
                .sum::<f64>();
        let got = loss_affine(&g, u.view(), &star, 1).unwrap();
        assert!((got - linear).abs() <= 1e-10);
    }

    #[test]
    fn stats_invariants() {
        let mut r = rng(23);
        let a = random_matrix(&mut r, 3, 5);
        let g = GroupStats::from_rows("g", a.view()).unwrap();
        assert!((g.total_energy - g.gram.diag().sum()).abs() <= 1e-12 * g.total_energy);
        for d in 0..5 {
            assert!(g.best_energy_at(d + 1) >= g.best_energy_at(d));
        }
        // rank 3
        assert!((g.best_energy_at(3) - g.total_energy).abs() <= 1e-9 * g.total_energy);
        assert!(GroupStats::<f64>::from_gram("e", 0, Array2::zeros((2, 2))).is_err());
    }
}
