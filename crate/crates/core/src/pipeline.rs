//! End-to-end fitting: statistics, MW relaxation, purification,
//! square-root transform and assembly, plus the vanilla PCA baseline.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{GroupedDataset, ScaleRecord};
use crate::losses::{audit_stats, GroupStats, LossReport, Projector};
use crate::mw::{mixture_losses, mw_solve, MwConfig, MwError, SdpSolution};
use crate::rounding::{assemble, lp_extreme, sqrt_transform, FairProjection};
use crate::spectra::{eig_sym, pca_top_d};
use crate::Scalar;

/// Preprocessing needed to map new raw rows into the fitted space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessEcho<S> {
    pub columns: Vec<String>,
    pub center_vector: Array1<S>,
    pub scale_record: ScaleRecord<S>,
}

#[derive(Debug, Clone)]
pub struct FitResult<S> {
    /// Fair projection; losses in preprocessed (not width-normalized) units.
    pub projection: FairProjection<S>,
    /// Relaxation solve, in width-normalized units.
    pub sdp: SdpSolution<S>,
    pub fair_report: LossReport<S>,
    pub vanilla_report: LossReport<S>,
    pub group_labels: Vec<String>,
    pub preprocess_echo: PreprocessEcho<S>,
    /// False when MW hit its iteration cap before the gap closed.
    pub converged: bool,
    /// True when the pooled PCA projection beat the rounded relaxation and
    /// was returned instead.
    pub vanilla_fallback: bool,
}

fn echo<S: Scalar>(dataset: &GroupedDataset<S>) -> PreprocessEcho<S> {
    PreprocessEcho {
        columns: dataset.columns.clone(),
        center_vector: dataset.center_vector.clone(),
        scale_record: dataset.scale_record.clone(),
    }
}

/// Fair PCA at target dimension `d` for a dataset with at least two groups.
pub fn fit<S: Scalar>(dataset: &GroupedDataset<S>, d: usize, cfg: &MwConfig) -> Result<FitResult<S>> {
    dataset.require_groups(2)?;
    let stats = dataset.group_stats()?;
    fit_stats(&stats, d, cfg, dataset.scale_record.width_factor, echo(dataset))
}

/// [`fit`] on precomputed statistics. `width_factor` is the global scale
/// already applied to the data behind `stats`.
pub fn fit_stats<S: Scalar>(
    stats: &[GroupStats<S>],
    d: usize,
    cfg: &MwConfig,
    width_factor: S,
    preprocess_echo: PreprocessEcho<S>,
) -> Result<FitResult<S>> {
    if stats.len() < 2 {
        return Err(Error::usage(format!("fair PCA needs at least 2 groups, got {}", stats.len())));
    }
    let n = stats[0].dim();
    if d == 0 || d > n {
        return Err(Error::usage(format!("target dimension {d} outside 1..={n}")));
    }
    let unscale = S::one() / (width_factor * width_factor);
    let labels: Vec<String> = stats.iter().map(|g| g.label.clone()).collect();
    let (vanilla_basis, vanilla_report) = vanilla_stats(stats, d, width_factor)?;

    if d == n {
        let projection = FairProjection::orthogonal(Array2::eye(n), stats, n)?.with_loss_scale(unscale);
        let sdp = identity_solution(stats, n);
        let fair_report = audit_stats(stats, n, Projector::Fair(&projection), width_factor)?;
        return Ok(FitResult {
            projection,
            sdp,
            fair_report,
            vanilla_report,
            group_labels: labels,
            preprocess_echo,
            converged: true,
            vanilla_fallback: false,
        });
    }

    let (sdp, converged) = match mw_solve(stats, d, cfg) {
        Ok(sol) => (sol, true),
        Err(MwError::NotConverged { solution, .. }) => (*solution, false),
        Err(MwError::Invalid(e)) => return Err(e),
    };
    let spectrum = eig_sym(sdp.p_hat.view())?;
    let vertex = lp_extreme(&spectrum, stats, d)?;
    let lambda_star = sqrt_transform(&vertex.lambda_bar)?;
    let mut projection = assemble(spectrum.eigenvectors.view(), &vertex.lambda_bar, &lambda_star, stats, d)?;

    let mut vanilla_fallback = false;
    let vanilla_max = vanilla_report.max_avg_loss() / unscale;
    if vanilla_max < projection.objective {
        projection = FairProjection::orthogonal(vanilla_basis, stats, d)?;
        vanilla_fallback = true;
    }
    let projection = projection.with_loss_scale(unscale);
    let fair_report = audit_stats(stats, d, Projector::Fair(&projection), width_factor)?;
    Ok(FitResult {
        projection,
        sdp,
        fair_report,
        vanilla_report,
        group_labels: labels,
        preprocess_echo,
        converged,
        vanilla_fallback,
    })
}

fn identity_solution<S: Scalar>(stats: &[GroupStats<S>], n: usize) -> SdpSolution<S> {
    let p_hat = Array2::eye(n);
    let group_losses = mixture_losses(stats, &p_hat, n);
    let z_hat = group_losses.iter().copied().fold(S::zero(), S::max);
    let k = stats.len();
    SdpSolution {
        p_hat,
        z_hat,
        lower_bound: z_hat,
        iterations: 0,
        gap_trace: Vec::new(),
        group_losses,
        weights: Array1::from_elem(k, S::one() / S::from_usize(k).expect("k representable")),
        converged: true,
    }
}

/// Pooled-data PCA at dimension `d` and its per-group report.
pub fn fit_vanilla<S: Scalar>(dataset: &GroupedDataset<S>, d: usize) -> Result<(Array2<S>, LossReport<S>)> {
    let stats = dataset.group_stats()?;
    vanilla_stats(&stats, d, dataset.scale_record.width_factor)
}

/// [`fit_vanilla`] on precomputed statistics.
pub fn vanilla_stats<S: Scalar>(
    stats: &[GroupStats<S>],
    d: usize,
    width_factor: S,
) -> Result<(Array2<S>, LossReport<S>)> {
    let n = stats[0].dim();
    let mut pooled = Array2::<S>::zeros((n, n));
    for g in stats {
        pooled += &g.gram;
    }
    let v = pca_top_d(pooled.view(), d)?;
    let report = audit_stats(stats, d, Projector::Vanilla(v.view()), width_factor)?;
    Ok((v, report))
}

/// One dimension of a sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry<S> {
    pub d: usize,
    pub vanilla: LossReport<S>,
    /// `None` when the fair fit failed at this dimension; see `error`.
    pub fair: Option<LossReport<S>>,
    pub fair_objective: Option<S>,
    pub converged: bool,
    pub error: Option<String>,
}

/// Fair and vanilla reports for each `d`. Dimensions are evaluated
/// concurrently; output order follows `dims`.
pub fn sweep<S: Scalar>(dataset: &GroupedDataset<S>, dims: &[usize], cfg: &MwConfig) -> Result<Vec<SweepEntry<S>>> {
    if dims.is_empty() {
        return Err(Error::usage("empty dimension range"));
    }
    let n = dataset.n();
    if let Some(&bad) = dims.iter().find(|&&d| d == 0 || d > n) {
        return Err(Error::usage(format!("dimension {bad} outside 1..={n}")));
    }
    let stats = dataset.group_stats()?;
    let width = dataset.scale_record.width_factor;
    let echo = echo(dataset);
    let entries: Vec<SweepEntry<S>> = dims
        .par_iter()
        .map(|&d| -> Result<SweepEntry<S>> {
            let (_, vanilla) = vanilla_stats(&stats, d, width)?;
            Ok(match fit_stats(&stats, d, cfg, width, echo.clone()) {
                Ok(fit) => SweepEntry {
                    d,
                    vanilla,
                    fair_objective: Some(fit.projection.objective),
                    fair: Some(fit.fair_report),
                    converged: fit.converged,
                    error: (!fit.converged).then(|| "multiplicative weights did not converge".to_string()),
                },
                Err(e) => SweepEntry {
                    d,
                    vanilla,
                    fair: None,
                    fair_objective: None,
                    converged: false,
                    error: Some(e.to_string()),
                },
            })
        })
        .collect::<Result<_>>()?;
    debug_assert!(vanilla_errors_nonincreasing(&entries));
    Ok(entries)
}

fn vanilla_errors_nonincreasing<S: Scalar>(entries: &[SweepEntry<S>]) -> bool {
    let mut sorted: Vec<&SweepEntry<S>> = entries.iter().collect();
    sorted.sort_by_key(|e| e.d);
    sorted.windows(2).all(|w| {
        w[0].vanilla
            .per_group
            .iter()
            .zip(&w[1].vanilla.per_group)
            .all(|(a, b)| b.avg_error <= a.avg_error + S::tol(1e-9) * (S::one() + a.avg_error.abs()))
    })
}
