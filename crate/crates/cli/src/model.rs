//! Versioned JSON model file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use fairpca_core::{FairProjection, Fit, Method, ScaleRecord};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MODEL_VERSION: u32 = 1;

/// A fitted fair projection plus the preprocessing needed to apply it.
///
/// `basis` is stored row-major as `r x n`: row `j` is the direction `u_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub group_labels: Vec<String>,
    pub columns: Vec<String>,
    pub basis: Vec<Vec<f64>>,
    pub lambda_bar: Vec<f64>,
    pub lambda_star: Vec<f64>,
    pub objective: f64,
    pub per_group_loss: Vec<f64>,
    pub center_vector: Vec<f64>,
    pub scale_record: ScaleRecord<f64>,
    pub converged: bool,
    /// `vanilla` when pooled PCA already met the fair objective and was kept.
    pub method: Method,
    pub iterations: usize,
    /// Final duality gap, in width-normalized units.
    pub gap: f64,
}

impl ModelFile {
    pub fn from_fit(fit: &Fit) -> Self {
        let p = &fit.projection;
        ModelFile {
            version: MODEL_VERSION,
            n: p.n(),
            d: p.d,
            k: p.k,
            group_labels: fit.group_labels.clone(),
            columns: fit.preprocess_echo.columns.clone(),
            basis: p.basis.columns().into_iter().map(|c| c.to_vec()).collect(),
            lambda_bar: p.lambda_bar.to_vec(),
            lambda_star: p.lambda_star.to_vec(),
            objective: p.objective,
            per_group_loss: p.per_group_loss.to_vec(),
            center_vector: fit.preprocess_echo.center_vector.to_vec(),
            scale_record: fit.preprocess_echo.scale_record.clone(),
            converged: fit.converged,
            method: if fit.vanilla_fallback { Method::Vanilla } else { Method::Fair },
            iterations: fit.sdp.iterations,
            gap: fit.sdp.gap(),
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// The projection as the core library represents it (`n x r` basis).
    pub fn projection(&self) -> CliResult<FairProjection<f64>> {
        self.validate()?;
        let r = self.rank();
        let basis = Array2::from_shape_fn((self.n, r), |(i, j)| self.basis[j][i]);
        Ok(FairProjection {
            basis,
            lambda_bar: Array1::from(self.lambda_bar.clone()),
            lambda_star: Array1::from(self.lambda_star.clone()),
            d: self.d,
            k: self.k,
            objective: self.objective,
            per_group_loss: Array1::from(self.per_group_loss.clone()),
        })
    }

    pub fn center(&self) -> Array1<f64> {
        Array1::from(self.center_vector.clone())
    }

    fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Data(format!("malformed model: {msg}")));
        if self.version != MODEL_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        let r = self.rank();
        if self.basis.iter().any(|row| row.len() != self.n) {
            return bad(format!("basis rows must have length n = {}", self.n));
        }
        if self.lambda_bar.len() != r || self.lambda_star.len() != r {
            return bad(format!("lambda vectors must have length r = {r}"));
        }
        if self.center_vector.len() != self.n
            || self.columns.len() != self.n
            || self.scale_record.column_factors.len() != self.n
        {
            return bad(format!("preprocessing must cover n = {} columns", self.n));
        }
        if self.group_labels.len() != self.k || self.per_group_loss.len() != self.k {
            return bad(format!("group fields must have length k = {}", self.k));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self).map_err(|source| CliError::Model {
            path: path.display().to_string(),
            source,
        })?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
        w.flush().map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let model: ModelFile =
            serde_json::from_reader(BufReader::new(file)).map_err(|source| CliError::Model {
                path: path.display().to_string(),
                source,
            })?;
        model.validate()?;
        Ok(model)
    }
}
