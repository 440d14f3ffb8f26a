//! Multiplicative-weights solver for the fair PCA semidefinite relaxation
//!
//! ```text
//! min z  s.t.  z >= ||Â_i||^2/m_i - <A_i^T A_i, P>/m_i   for every group i
//!              0 <= P <= I,  tr(P) <= d
//! ```
//!
//! Each iteration weights the group constraints by `p`, and the oracle answers
//! with a standard PCA of `sum_i (p_i/m_i) A_i^T A_i`. The oracle's weighted
//! value is a lower bound on the optimum; the max loss of a convex
//! combination of oracle answers is an upper bound. The loop stops when the
//! two meet within `tol`.

use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::game::minmax_mixture;
use crate::linalg;
use crate::losses::{avg_losses, GroupStats};
use crate::spectra::pca_top_d;
use crate::Scalar;

/// Which primal point the solver reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IterateMode {
    /// Uniform average of all oracle answers.
    Average,
    /// The most recent oracle answer.
    Last,
    /// Lowest max-loss among the running average, the last iterate and the
    /// best mixture of all iterates, tracked across iterations.
    Best,
}

impl FromStr for IterateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(IterateMode::Average),
            "last" => Ok(IterateMode::Last),
            "best" => Ok(IterateMode::Best),
            other => Err(Error::usage(format!("unknown iterate mode {other:?}"))),
        }
    }
}

/// How the learning rate is chosen each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Constant `eta`.
    Fixed,
    /// Line search on `eta` maximizing the cutting-plane model of the dual
    /// (the minimum over all oracle loss vectors seen so far) along the
    /// multiplicative update. Falls back to `eta` when the search stalls.
    ModelSearch,
}

impl FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(StepRule::Fixed),
            "model-search" => Ok(StepRule::ModelSearch),
            other => Err(Error::usage(format!("unknown step rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwConfig {
    pub eta: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub iterate_mode: IterateMode,
    pub step_rule: StepRule,
}

impl Default for MwConfig {
    fn default() -> Self {
        Self {
            eta: 1.0,
            max_iters: 200,
            tol: 1e-5,
            iterate_mode: IterateMode::Best,
            step_rule: StepRule::ModelSearch,
        }
    }
}

impl MwConfig {
    /// Parameters from the worst-case analysis with a (1,1)-bounded oracle:
    /// `eta = eps / 8`, fixed, returning the average iterate.
    pub fn theory(eps: f64) -> Self {
        Self {
            eta: eps / 8.0,
            tol: eps,
            iterate_mode: IterateMode::Average,
            step_rule: StepRule::Fixed,
            ..Self::default()
        }
    }
}

/// Iteration count sufficient for additive error `eps` with `k` groups and a
/// (1,1)-bounded oracle: `32 ln(k) / eps^2`.
pub fn theory_iterations(eps: f64, k: usize) -> usize {
    (32.0 * (k.max(2) as f64).ln() / (eps * eps)).ceil() as usize
}

/// Oracle answer for one weight vector.
#[derive(Debug, Clone)]
pub struct OracleAnswer<S> {
    /// `n x d` orthonormal basis; the answer is `P = V V^T`.
    pub basis: Array2<S>,
    /// Per-group average losses of `P`.
    pub losses: Array1<S>,
    /// `sum_i p_i losses_i`, a lower bound on the relaxation optimum.
    pub weighted: S,
}

/// Solves `min_P sum_i p_i z_i(P)` over the relaxed feasible set by one PCA
/// of the weighted Gram sum.
pub fn oracle<S: Scalar>(weights: &[S], stats: &[GroupStats<S>], d: usize) -> Result<OracleAnswer<S>> {
    if weights.len() != stats.len() || stats.is_empty() {
        return Err(Error::usage(format!(
            "{} weights for {} groups",
            weights.len(),
            stats.len()
        )));
    }
    if weights.iter().any(|&w| w < S::zero() || !w.is_finite()) {
        return Err(Error::usage("weights must be nonnegative"));
    }
    let total: S = weights.iter().copied().sum();
    if (total - S::one()).abs() > S::tol(1e-12) * S::lit(weights.len() as f64) {
        return Err(Error::usage(format!("weights sum to {total}, expected 1")));
    }
    let n = check_stats(stats)?;
    let mut combined = Array2::<S>::zeros((n, n));
    for (g, &w) in stats.iter().zip(weights) {
        if w != S::zero() {
            combined.scaled_add(w / g.count(), &g.gram);
        }
    }
    linalg::symmetrize(&mut combined);
    let basis = pca_top_d(combined.view(), d)?;
    let losses = avg_losses(stats, basis.view(), &vec![S::one(); d], d);
    let weighted = losses.iter().zip(weights).map(|(&z, &w)| z * w).sum();
    Ok(OracleAnswer {
        basis,
        losses,
        weighted,
    })
}

fn check_stats<S: Scalar>(stats: &[GroupStats<S>]) -> Result<usize> {
    let n = stats[0].dim();
    if stats.iter().any(|g| g.dim() != n) {
        return Err(Error::usage("groups disagree on feature count"));
    }
    Ok(n)
}

/// Output of [`mw_solve`]. Values are in the units of the statistics passed
/// in (width-normalized when the caller normalized).
#[derive(Debug, Clone)]
pub struct SdpSolution<S> {
    pub p_hat: Array2<S>,
    /// Max per-group average loss of `p_hat`.
    pub z_hat: S,
    /// Best oracle weighted value seen.
    pub lower_bound: S,
    pub iterations: usize,
    /// `(upper, lower)` after each iteration.
    pub gap_trace: Vec<(S, S)>,
    /// Per-group average losses of `p_hat`.
    pub group_losses: Array1<S>,
    /// Final weight vector.
    pub weights: Array1<S>,
    pub converged: bool,
}

impl<S: Scalar> SdpSolution<S> {
    pub fn gap(&self) -> S {
        self.z_hat - self.lower_bound
    }

    /// Rows `iter,upper,lower,gap` for the convergence trace CSV.
    pub fn trace_records(&self) -> Vec<[String; 4]> {
        self.gap_trace
            .iter()
            .enumerate()
            .map(|(i, &(u, l))| {
                [
                    (i + 1).to_string(),
                    u.to_string(),
                    l.to_string(),
                    (u - l).to_string(),
                ]
            })
            .collect()
    }
}

pub const TRACE_HEADER: [&str; 4] = ["iter", "upper", "lower", "gap"];

#[derive(Debug, Error)]
pub enum MwError<S: Scalar> {
    #[error(transparent)]
    Invalid(#[from] Error),
    /// Iteration cap hit before the gap closed; carries the best solution.
    #[error("multiplicative weights stopped after {iterations} iterations with gap {gap}")]
    NotConverged {
        gap: S,
        iterations: usize,
        solution: Box<SdpSolution<S>>,
    },
}

/// Multiplicative-weights solve of the relaxation for `k >= 2` groups.
pub fn mw_solve<S: Scalar>(
    stats: &[GroupStats<S>],
    d: usize,
    cfg: &MwConfig,
) -> std::result::Result<SdpSolution<S>, MwError<S>> {
    if stats.len() < 2 {
        return Err(Error::usage(format!("fair PCA needs at least 2 groups, got {}", stats.len())).into());
    }
    let n = check_stats(stats)?;
    if d == 0 || d > n {
        return Err(Error::usage(format!("target dimension {d} outside 1..={n}")).into());
    }
    if !(cfg.eta > 0.0) || cfg.max_iters == 0 || !(cfg.tol >= 0.0) {
        return Err(Error::usage("eta must be positive, max_iters nonzero, tol nonnegative").into());
    }
    let k = stats.len();
    let eta = S::lit(cfg.eta);
    let tol = S::lit(cfg.tol);
    let log_floor = -S::min_positive_value().ln() * S::lit(0.9);

    let mut log_w = Array1::<S>::zeros(k);
    let mut bases: Vec<Array2<S>> = Vec::new();
    let mut history: Vec<Array1<S>> = Vec::new();
    let mut loss_sum = Array1::<S>::zeros(k);
    let mut lower = S::neg_infinity();
    let mut gap_trace = Vec::new();
    // Best mode: mixture over iterates and its max loss
    let mut best: Option<(Vec<S>, S)> = None;
    let mut mix = Vec::new();
    let mut weights = softmax(&log_w);
    let mut converged = false;

    for t in 1..=cfg.max_iters {
        weights = softmax(&log_w);
        let answer = oracle(weights.as_slice().expect("contiguous"), stats, d)?;
        lower = lower.max(answer.weighted);
        loss_sum += &answer.losses;
        bases.push(answer.basis);
        history.push(answer.losses.clone());

        let count = S::from_usize(t).expect("iteration count representable");
        let average = (vec![S::one() / count; t], max_of(&loss_sum.mapv(|x| x / count)));
        let mut last_w = vec![S::zero(); t];
        last_w[t - 1] = S::one();
        let last = (last_w, max_of(&answer.losses));
        let upper;
        (mix, upper) = match cfg.iterate_mode {
            IterateMode::Average => average,
            IterateMode::Last => last,
            IterateMode::Best => {
                let master = minmax_mixture(&history);
                let mut cands = vec![average, last, (master.weights, master.value)];
                if let Some((mut w, v)) = best.take() {
                    w.resize(t, S::zero());
                    cands.push((w, v));
                }
                let chosen = cands
                    .into_iter()
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                    .expect("non-empty candidates");
                best = Some(chosen.clone());
                chosen
            }
        };
        gap_trace.push((upper, lower));
        if upper - lower <= tol {
            converged = true;
            break;
        }

        let step = match cfg.step_rule {
            StepRule::Fixed => eta,
            StepRule::ModelSearch => model_search_step(&log_w, &answer.losses, &history).unwrap_or(eta),
        };
        log_w.scaled_add(step, &answer.losses);
        let top = max_of(&log_w);
        log_w.mapv_inplace(|x| (x - top).max(-log_floor));
    }

    let mut p_hat = Array2::<S>::zeros((n, n));
    for (basis, &w) in bases.iter().zip(&mix) {
        if w != S::zero() {
            p_hat.scaled_add(w, &basis.dot(&basis.t()));
        }
    }
    linalg::symmetrize(&mut p_hat);
    let group_losses = mixture_losses(stats, &p_hat, d);
    let z_hat = max_of(&group_losses);
    let solution = SdpSolution {
        p_hat,
        z_hat,
        lower_bound: lower,
        iterations: gap_trace.len(),
        gap_trace,
        group_losses,
        weights,
        converged,
    };
    if converged {
        Ok(solution)
    } else {
        Err(MwError::NotConverged {
            gap: solution.gap(),
            iterations: solution.iterations,
            solution: Box::new(solution),
        })
    }
}

/// Per-group average losses of an arbitrary relaxed `P`.
pub fn mixture_losses<S: Scalar>(stats: &[GroupStats<S>], p: &Array2<S>, d: usize) -> Array1<S> {
    stats
        .iter()
        .map(|g| (g.best_energy_at(d) - linalg::frobenius_inner(g.gram.view(), p.view())) / g.count())
        .collect()
}

fn softmax<S: Scalar>(log_w: &Array1<S>) -> Array1<S> {
    let top = max_of(log_w);
    let mut w = log_w.mapv(|x| (x - top).exp());
    let total = w.sum();
    w.mapv_inplace(|x| x / total);
    w
}

fn max_of<S: Scalar>(v: &Array1<S>) -> S {
    v.iter().copied().fold(S::neg_infinity(), S::max)
}

const GRID_POINTS: usize = 160;
const MAX_LOG_STEP: f64 = 30.0;

/// Learning rate maximizing `min_s <p(eta), z_s>` where
/// `p(eta) ∝ exp(log_w + eta * losses)`. `None` when the best step is zero.
fn model_search_step<S: Scalar>(log_w: &Array1<S>, losses: &Array1<S>, history: &[Array1<S>]) -> Option<S> {
    let spread = max_of(losses) + max_of(&losses.mapv(|x| -x));
    if !(spread > S::zero()) {
        return None;
    }
    let model = |eta: S| {
        let mut lw = log_w.clone();
        lw.scaled_add(eta, losses);
        let p = softmax(&lw);
        history
            .iter()
            .map(|z| z.dot(&p))
            .fold(S::infinity(), S::min)
    };
    let hi = S::lit(MAX_LOG_STEP) / spread;
    let mut grid = Vec::with_capacity(GRID_POINTS + 1);
    grid.push(S::zero());
    for i in 0..GRID_POINTS {
        let e = -9.0 + 9.0 * i as f64 / (GRID_POINTS - 1) as f64;
        grid.push(hi * S::lit(10f64.powf(e)));
    }
    let values: Vec<S> = grid.iter().map(|&e| model(e)).collect();
    let (j, &best_val) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("non-empty grid");

    // golden-section refinement between the neighbours of the grid maximum
    let ratio = S::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut a = grid[j.saturating_sub(1)];
    let mut b = grid[(j + 1).min(grid.len() - 1)];
    for _ in 0..60 {
        let c = b - ratio * (b - a);
        let e = a + ratio * (b - a);
        if model(c) >= model(e) {
            b = e;
        } else {
            a = c;
        }
    }
    let mid = (a + b) * S::lit(0.5);
    let step = if model(mid) >= best_val { mid } else { grid[j] };
    (step > hi * S::lit(1e-12)).then_some(step)
}
