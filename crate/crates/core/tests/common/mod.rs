//! Fixtures and independent reference computations shared by the
//! integration tests.
#![allow(dead_code)]

use fairpca_core::{Dataset, ScaleMode};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labeled(rows: Vec<(&str, Vec<f64>)>) -> Dataset {
    let n = rows[0].1.len();
    let labels: Vec<String> = rows.iter().map(|(l, _)| l.to_string()).collect();
    let flat: Vec<f64> = rows.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let raw = Array2::from_shape_vec((rows.len(), n), flat).unwrap();
    let columns = (1..=n).map(|j| format!("x{j}")).collect();
    Dataset::from_labeled_rows(raw, &labels, columns, ScaleMode::None).unwrap()
}

/// Two groups of four points on the coordinate axes of the plane.
pub fn cross() -> Dataset {
    labeled(vec![
        ("a", vec![1.0, 0.0]),
        ("a", vec![-1.0, 0.0]),
        ("a", vec![2.0, 0.0]),
        ("a", vec![-2.0, 0.0]),
        ("b", vec![0.0, 1.0]),
        ("b", vec![0.0, -1.0]),
        ("b", vec![0.0, 2.0]),
        ("b", vec![0.0, -2.0]),
    ])
}

/// Group `a` spread over both axes, group `b` on the first axis only.
pub fn skew() -> Dataset {
    labeled(vec![
        ("a", vec![1.0, 0.0]),
        ("a", vec![-1.0, 0.0]),
        ("a", vec![0.0, 1.0]),
        ("a", vec![0.0, -1.0]),
        ("b", vec![3.0, 0.0]),
        ("b", vec![-3.0, 0.0]),
    ])
}

/// Three groups in 3-space, each two points `±sqrt(3) e_i`.
pub fn kaxes() -> Dataset {
    let r = 3f64.sqrt();
    let mut rows = Vec::new();
    for (axis, label) in ["a", "b", "c"].into_iter().enumerate() {
        for sign in [1.0, -1.0] {
            let mut p = vec![0.0; 3];
            p[axis] = sign * r;
            rows.push((label, p));
        }
    }
    labeled(rows)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Random dataset with `k` groups in `R^n`; every group has its own random
/// linear mixing, so group spectra differ.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Dataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for g in 0..k {
        let m = rng.random_range(n.max(3)..=3 * n.max(3));
        let mix = uniform_matrix(rng, n, n);
        let stretch = Array1::from_shape_fn(n, |_| rng.random_range(0.1..2.0));
        let z = uniform_matrix(rng, m, n) * &stretch;
        let a = z.dot(&mix);
        for row in a.rows() {
            rows.extend(row.iter().copied());
            labels.push(format!("g{g}"));
        }
    }
    let m = labels.len();
    let raw = Array2::from_shape_vec((m, n), rows).unwrap();
    let columns = (1..=n).map(|j| format!("x{j}")).collect();
    Dataset::from_labeled_rows(raw, &labels, columns, ScaleMode::None).unwrap()
}

/// Random `n x d` matrix with orthonormal columns (modified Gram-Schmidt).
pub fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    loop {
        let mut q = uniform_matrix(rng, n, d);
        if gram_schmidt(&mut q) {
            return q;
        }
    }
}

/// Orthonormalizes columns in place; false if they were (nearly) dependent.
pub fn gram_schmidt(q: &mut Array2<f64>) -> bool {
    for j in 0..q.ncols() {
        for i in 0..j {
            let dot = q.column(i).dot(&q.column(j));
            let qi = q.column(i).to_owned();
            q.column_mut(j).scaled_add(-dot, &qi);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if norm < 1e-8 {
            return false;
        }
        q.column_mut(j).mapv_inplace(|x| x / norm);
    }
    true
}

/// Top-`d` right singular subspace of `a` by orthogonal iteration on
/// `a^T a`, independent of the library's eigensolver.
pub fn top_subspace(a: &Array2<f64>, d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let c = a.t().dot(a);
    let mut q = random_orthonormal(rng, a.ncols(), d);
    for _ in 0..5000 {
        let mut next = c.dot(&q);
        if !gram_schmidt(&mut next) {
            return q;
        }
        let change = (&next - &q).mapv(f64::abs).fold(0.0f64, |m, &x| m.max(x));
        q = next;
        if change < 1e-15 {
            break;
        }
    }
    q
}

/// `||A - Â||_F^2` for the best rank-`d` approximation `Â`. When `A` has at
/// most `d` rows it is its own best approximation.
pub fn best_rank_error(a: &Array2<f64>, d: usize, rng: &mut ChaCha8Rng) -> f64 {
    if d >= a.nrows().min(a.ncols()) {
        return 0.0;
    }
    let w = top_subspace(a, d, rng);
    frobenius_sq(&(a - &a.dot(&w).dot(&w.t())))
}

pub fn frobenius_sq(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum()
}
