//! Kernel extreme learning machine over pooled segment statistics.
//!
//! Training solves `(Ω + I/C) A = T` where `Ω` is the training Gram matrix
//! and `T` the (optionally class-weighted) one-hot targets. Scores for new
//! points are `K(x, X_train) A`, decoded by argmax.

mod kernel;
mod solve;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::ClassMap;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::ClassWeights;
use crate::scalar::Scalar;
use crate::temporal::PooledSegment;
use crate::textio::write_atomic;

pub use self::kernel::{cross_kernel, gram_matrix, kernel_eval, KernelKind, KernelSpec};
pub use self::solve::solve;

pub const MODEL_FORMAT: &str = "latefuse-kelm";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct KelmParams<T> {
    pub kernel: KernelSpec<T>,
    pub regularization_c: T,
    pub class_map: ClassMap,
    /// Z-score every feature dimension with training statistics first.
    pub standardize: bool,
}

impl<T: Scalar> Default for KelmParams<T> {
    fn default() -> Self {
        KelmParams {
            kernel: KernelSpec::default(),
            regularization_c: T::of(3.0),
            class_map: ClassMap::default(),
            standardize: false,
        }
    }
}

/// Per-dimension affine map `(x - mean) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(x: &Matrix<T>) -> Self {
        let n = T::of(x.rows() as f64);
        let d = x.cols();
        let mut mean = vec![T::zero(); d];
        for row in x.row_iter() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); d];
        for row in x.row_iter() {
            for j in 0..d {
                var[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
            }
        }
        // constant dimensions are centred but left unscaled
        let scale = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > T::zero() {
                    s
                } else {
                    T::one()
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KelmModel<T> {
    pub kernel: KernelSpec<T>,
    pub regularization_c: T,
    /// Training points after standardization, if any.
    pub training_points: Matrix<T>,
    pub coefficients: Matrix<T>,
    pub class_map: ClassMap,
    pub standardizer: Option<Standardizer<T>>,
}

impl<T: Scalar> KelmModel<T> {
    pub fn num_classes(&self) -> usize {
        self.coefficients.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.training_points.cols()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        #[serde(bound = "T: Scalar")]
        struct Envelope<'a, T> {
            format: &'static str,
            version: u32,
            model: &'a KelmModel<T>,
        }
        let mut text = serde_json::to_string(&Envelope {
            format: MODEL_FORMAT,
            version: MODEL_VERSION,
            model: self,
        })?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(bound = "T: Scalar")]
        struct Envelope<T> {
            format: String,
            version: u32,
            model: KelmModel<T>,
        }
        let env: Envelope<T> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if env.format != MODEL_FORMAT || env.version != MODEL_VERSION {
            return Err(Error::InvalidArgument(format!(
                "{}: unsupported model container {} v{}",
                path.display(),
                env.format,
                env.version
            )));
        }
        let m = env.model;
        m.kernel.validate()?;
        if m.coefficients.rows() != m.training_points.rows() {
            return Err(Error::Invariant(format!(
                "{} coefficient rows for {} training points",
                m.coefficients.rows(),
                m.training_points.rows()
            )));
        }
        Ok(m)
    }
}

/// Fits a KELM classifier on `features` (one row per sample) with class
/// labels in `0..class_map.len()`.
pub fn kelm_fit<T: Scalar>(
    features: &Matrix<T>,
    labels: &[usize],
    params: &KelmParams<T>,
    class_weights: Option<&ClassWeights>,
) -> Result<KelmModel<T>> {
    params.kernel.validate()?;
    let c = params.regularization_c;
    if !(c.is_finite() && c > T::zero()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
    }
    let n = features.rows();
    if n == 0 {
        return Err(Error::Empty("no training samples".into()));
    }
    if labels.len() != n {
        return Err(Error::Dimension(format!("{} labels for {n} samples", labels.len())));
    }
    let k = params.class_map.len();
    if let Some(bad) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::InvalidArgument(format!("label {bad} outside 0..{k}")));
    }
    if let Some(w) = class_weights {
        if w.weights.len() != k {
            return Err(Error::Dimension(format!("{} class weights for {k} classes", w.weights.len())));
        }
    }

    let standardizer = params.standardize.then(|| Standardizer::fit(features));
    let points = match &standardizer {
        Some(s) => s.apply(features),
        None => features.clone(),
    };

    let mut system = gram_matrix(&points, &params.kernel);
    let ridge = T::one() / c;
    for i in 0..n {
        let v = system.get(i, i) + ridge;
        system.set(i, i, v);
    }
    let mut targets = Matrix::filled(n, k, T::zero());
    for (i, &y) in labels.iter().enumerate() {
        let w = class_weights.map_or(T::one(), |cw| T::of(cw.weights[y]));
        targets.set(i, y, w);
    }
    let coefficients = solve(&system, &targets)?;
    Ok(KelmModel {
        kernel: params.kernel,
        regularization_c: c,
        training_points: points,
        coefficients,
        class_map: params.class_map.clone(),
        standardizer,
    })
}

/// `m x K` decision scores; not probabilities and possibly negative.
pub fn kelm_predict<T: Scalar>(model: &KelmModel<T>, features: &Matrix<T>) -> Result<Matrix<T>> {
    let k = model.num_classes();
    if features.rows() == 0 {
        return Ok(Matrix::filled(0, k, T::zero()));
    }
    if features.cols() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "query dimension {} differs from training dimension {}",
            features.cols(),
            model.input_dim()
        )));
    }
    let queries = match &model.standardizer {
        Some(s) => s.apply(features),
        None => features.clone(),
    };
    let rows: Vec<Vec<T>> = (0..queries.rows())
        .into_par_iter()
        .map(|i| {
            let q = queries.row(i);
            let mut out = vec![T::zero(); k];
            for (p, coef) in model.training_points.row_iter().zip(model.coefficients.row_iter()) {
                let kv = model.kernel.apply(q, p);
                for (o, &a) in out.iter_mut().zip(coef) {
                    *o += kv * a;
                }
            }
            out
        })
        .collect();
    Matrix::from_rows(&rows, k)
}

/// Stacks the labelled segments into a training matrix, skipping ignored ones.
pub fn segments_to_training<T: Scalar>(segments: &[PooledSegment<T>]) -> Result<(Matrix<T>, Vec<usize>)> {
    let kept: Vec<&PooledSegment<T>> = segments.iter().filter(|s| s.label.is_some()).collect();
    let dim = kept.first().map_or(0, |s| s.pooled.len());
    let rows: Vec<Vec<T>> = kept.iter().map(|s| s.pooled.clone()).collect();
    let labels = kept.iter().filter_map(|s| s.label).collect();
    Ok((Matrix::from_rows(&rows, dim)?, labels))
}

/// Matrix of all segment vectors, labelled or not.
pub fn segments_matrix<T: Scalar>(segments: &[PooledSegment<T>]) -> Result<Matrix<T>> {
    let dim = segments.first().map_or(0, |s| s.pooled.len());
    let rows: Vec<Vec<T>> = segments.iter().map(|s| s.pooled.clone()).collect();
    Matrix::from_rows(&rows, dim)
}
