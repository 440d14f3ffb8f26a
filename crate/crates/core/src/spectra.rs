//! Symmetric eigendecomposition and the vanilla PCA primitives built on it.
//!
//! Every spectral quantity in the crate is computed from a Gram matrix
//! `A^T A`; rectangular SVDs are never needed.

use ndarray::{s, Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::Scalar;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
///
/// Column `j` of `eigenvectors` pairs with `eigenvalues[j]`. Each eigenvector
/// is sign-normalized so its first component with magnitude above `1e-12`
/// is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSpectrum<S> {
    pub eigenvalues: Array1<S>,
    pub eigenvectors: Array2<S>,
}

impl<S: Scalar> SymmetricSpectrum<S> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Leading `d` eigenvectors as an `n x d` matrix.
    pub fn top(&self, d: usize) -> Array2<S> {
        self.eigenvectors.slice(s![.., ..d]).to_owned()
    }

    /// Sum of the leading `d` eigenvalues.
    pub fn top_sum(&self, d: usize) -> S {
        self.eigenvalues.iter().take(d).copied().sum()
    }
}

/// `A^T A` for a data block with rows as samples.
pub fn gram<S: Scalar>(a: ArrayView2<S>) -> Array2<S> {
    let mut g = a.t().dot(&a);
    linalg::symmetrize(&mut g);
    g
}

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps until the off-diagonal Frobenius norm falls below
/// `1e-12 * ||C||_F`, up to 100 sweeps. Eigenvalues in `[-1e-10, 0)`
/// (scaled by the matrix magnitude) are reported as zero since they arise
/// from roundoff on PSD inputs.
pub fn eig_sym<S: Scalar>(c: ArrayView2<S>) -> Result<SymmetricSpectrum<S>> {
    let (rows, cols) = c.dim();
    if rows != cols {
        return Err(Error::usage(format!("eig_sym needs a square matrix, got {rows}x{cols}")));
    }
    let n = rows;
    let magnitude = linalg::max_abs(c).max(S::one());
    if linalg::asymmetry(c) > S::tol(1e-8) * magnitude {
        return Err(Error::usage("eig_sym input is not symmetric"));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("eig_sym input has non-finite entries".into()));
    }

    let mut a = c.to_owned();
    linalg::symmetrize(&mut a);
    let mut v = Array2::<S>::eye(n);
    let frob = a.iter().map(|&x| x * x).sum::<S>().sqrt();
    let threshold = S::tol(1e-12) * frob;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > threshold {
        return Err(Error::Numerical(format!(
            "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps; input is ill-conditioned"
        )));
    }

    let clip = S::tol(1e-10) * magnitude;
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep ascending index order
    order.sort_by(|&i, &j| {
        a[[j, j]]
            .partial_cmp(&a[[i, i]])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut eigenvalues = Array1::zeros(n);
    let mut eigenvectors = Array2::zeros((n, n));
    let sign_eps = S::tol(1e-12);
    for (dst, &src) in order.iter().enumerate() {
        let mut lambda = a[[src, src]];
        if lambda < S::zero() && lambda >= -clip {
            lambda = S::zero();
        }
        eigenvalues[dst] = lambda;
        let mut col = v.column(src).to_owned();
        if let Some(&lead) = col.iter().find(|x| x.abs() > sign_eps) {
            if lead < S::zero() {
                col.mapv_inplace(|x| -x);
            }
        }
        eigenvectors.column_mut(dst).assign(&col);
    }
    Ok(SymmetricSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm<S: Scalar>(a: &Array2<S>) -> S {
    let n = a.nrows();
    let mut acc = S::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[[i, j]] * a[[i, j]];
            }
        }
    }
    acc.sqrt()
}

fn rotate<S: Scalar>(a: &mut Array2<S>, v: &mut Array2<S>, p: usize, q: usize) {
    let apq = a[[p, q]];
    if apq == S::zero() {
        return;
    }
    let app = a[[p, p]];
    let aqq = a[[q, q]];
    let two = S::lit(2.0);
    let theta = (aqq - app) / (two * apq);
    let t = {
        let t = S::one() / (theta.abs() + (theta * theta + S::one()).sqrt());
        if theta < S::zero() {
            -t
        } else {
            t
        }
    };
    let c = S::one() / (t * t + S::one()).sqrt();
    let s = t * c;
    let n = a.nrows();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[[k, p]];
        let akq = a[[k, q]];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a[[k, p]] = new_kp;
        a[[p, k]] = new_kp;
        a[[k, q]] = new_kq;
        a[[q, k]] = new_kq;
    }
    a[[p, p]] = app - t * apq;
    a[[q, q]] = aqq + t * apq;
    a[[p, q]] = S::zero();
    a[[q, p]] = S::zero();
    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}

/// Top-`d` principal directions of a PSD matrix as an `n x d` orthonormal
/// matrix. Ties between equal eigenvalues go to the lower eigenvector index.
pub fn pca_top_d<S: Scalar>(c: ArrayView2<S>, d: usize) -> Result<Array2<S>> {
    check_dim(c.nrows(), d)?;
    Ok(eig_sym(c)?.top(d))
}

/// Energy of the best rank-`d` approximation, `||Â||_F^2`: the sum of the
/// top `d` eigenvalues of the Gram matrix.
pub fn best_rank_d_energy<S: Scalar>(c: ArrayView2<S>, d: usize) -> Result<S> {
    check_dim(c.nrows(), d)?;
    Ok(eig_sym(c)?.top_sum(d))
}

fn check_dim(n: usize, d: usize) -> Result<()> {
    if d == 0 || d > n {
        return Err(Error::usage(format!("target dimension {d} outside 1..={n}")));
    }
    Ok(())
}
