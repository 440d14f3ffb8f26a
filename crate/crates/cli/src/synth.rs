//! Demonstration datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::Preset;

/// Largest absolute perturbation added for a nonzero seed.
pub const NOISE: f64 = 1e-6;

/// Name of the label column in generated files.
pub const GROUP_COLUMN: &str = "g";

/// Column names, then `(label, point)` rows.
pub struct Synthetic {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

pub fn generate(preset: Preset, seed: u64) -> Synthetic {
    let (n, mut rows) = match preset {
        Preset::Cross => (
            2,
            vec![
                ("a", vec![1.0, 0.0]),
                ("a", vec![-1.0, 0.0]),
                ("a", vec![2.0, 0.0]),
                ("a", vec![-2.0, 0.0]),
                ("b", vec![0.0, 1.0]),
                ("b", vec![0.0, -1.0]),
                ("b", vec![0.0, 2.0]),
                ("b", vec![0.0, -2.0]),
            ],
        ),
        Preset::Skew => (
            2,
            vec![
                ("a", vec![1.0, 0.0]),
                ("a", vec![-1.0, 0.0]),
                ("a", vec![0.0, 1.0]),
                ("a", vec![0.0, -1.0]),
                ("b", vec![3.0, 0.0]),
                ("b", vec![-3.0, 0.0]),
            ],
        ),
        Preset::Kaxes => {
            let r = 3f64.sqrt();
            let mut rows = Vec::new();
            for (axis, label) in ["a", "b", "c"].into_iter().enumerate() {
                for sign in [1.0, -1.0] {
                    let mut p = vec![0.0; 3];
                    p[axis] = sign * r;
                    rows.push((label, p));
                }
            }
            (3, rows)
        }
    };
    if seed != 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (_, p) in &mut rows {
            for x in p.iter_mut() {
                *x += rng.random_range(-NOISE..=NOISE);
            }
        }
    }
    Synthetic {
        columns: (1..=n).map(|j| format!("x{j}")).collect(),
        rows: rows.into_iter().map(|(l, p)| (l.to_string(), p)).collect(),
    }
}
