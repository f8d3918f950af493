//! Weighted late fusion of per-model class scores.
//!
//! Simple weighted fusion (SWF) gives each model one weight; model- and
//! class-based weighted fusion (MCWF) gives each (model, class) pair its own
//! weight with every class column summing to one over models. Weights are
//! fitted by random search over Dirichlet draws.

mod io;
mod search;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{AlignedDataset, ScoreTrack};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::simplex::symmetric_dirichlet;

pub use self::io::{load_weights, read_weights_json, weights_json, write_search_trace, write_weights, SavedWeights};
pub use self::search::{
    apply_fusion, candidate_weights, num_seeded, optimize_fusion, score_weights, SearchConfig,
    SearchResult,
};

/// Decimal digits kept in fitted and serialized weights.
pub const WEIGHT_DECIMALS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    Swf,
    Mcwf,
}

impl std::str::FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "swf" => Ok(FusionMode::Swf),
            "mcwf" => Ok(FusionMode::Mcwf),
            other => Err(Error::InvalidArgument(format!("unknown fusion mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for FusionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FusionMode::Swf => "swf",
            FusionMode::Mcwf => "mcwf",
        })
    }
}

fn check_simplex<T: Scalar>(w: &[T], what: &str) -> Result<()> {
    if w.is_empty() {
        return Err(Error::Empty(format!("{what} has no weights")));
    }
    if let Some(v) = w.iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
        return Err(Error::Invariant(format!("{what} has weight {v}")));
    }
    let sum: f64 = w.iter().map(|v| v.as_f64()).sum();
    if (sum - 1.0).abs() > T::SIMPLEX_TOL {
        return Err(Error::Invariant(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

/// Rounds a simplex vector to [`WEIGHT_DECIMALS`] decimals; the last entry
/// absorbs the rounding so the sum stays at one.
fn quantize_simplex(w: &[f64]) -> Vec<f64> {
    let round = |x: f64| -> f64 {
        format!("{:.*}", WEIGHT_DECIMALS, x).parse::<f64>().unwrap().max(0.0)
    };
    let mut out: Vec<f64> = w[..w.len() - 1].iter().map(|&x| round(x)).collect();
    let head: f64 = out.iter().sum();
    out.push(round(1.0 - head));
    out
}

/// One weight per model.
#[derive(Clone, Debug, PartialEq)]
pub struct SwfWeights<T> {
    w: Vec<T>,
}

impl<T: Scalar> SwfWeights<T> {
    pub fn new(w: Vec<T>) -> Result<Self> {
        check_simplex(&w, "SWF weight vector")?;
        Ok(SwfWeights { w })
    }

    pub fn uniform(num_models: usize) -> Result<Self> {
        if num_models == 0 {
            return Err(Error::InvalidArgument("no models to weight".into()));
        }
        Self::from_f64(&quantize_simplex(&vec![1.0 / num_models as f64; num_models]))
    }

    /// All weight on model `l`.
    pub fn corner(num_models: usize, l: usize) -> Result<Self> {
        if l >= num_models {
            return Err(Error::InvalidArgument(format!("corner {l} of {num_models} models")));
        }
        Self::new((0..num_models).map(|i| if i == l { T::one() } else { T::zero() }).collect())
    }

    fn from_f64(w: &[f64]) -> Result<Self> {
        Self::new(w.iter().map(|&x| T::of(x)).collect())
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn num_models(&self) -> usize {
        self.w.len()
    }

    pub(crate) fn quantized(&self) -> Result<Self> {
        let raw: Vec<f64> = self.w.iter().map(|v| v.as_f64()).collect();
        Self::from_f64(&quantize_simplex(&raw))
    }
}

/// `L x K` weights whose class columns each sum to one over models.
#[derive(Clone, Debug, PartialEq)]
pub struct McwfWeights<T> {
    w: Matrix<T>,
}

impl<T: Scalar> McwfWeights<T> {
    pub fn new(w: Matrix<T>) -> Result<Self> {
        if w.rows() == 0 || w.cols() == 0 {
            return Err(Error::Empty("MCWF matrix has a zero dimension".into()));
        }
        for k in 0..w.cols() {
            let col: Vec<T> = (0..w.rows()).map(|l| w.get(l, k)).collect();
            check_simplex(&col, &format!("MCWF column {k}"))?;
        }
        Ok(McwfWeights { w })
    }

    /// Every class column equal to `swf`.
    pub fn from_swf(swf: &SwfWeights<T>, num_classes: usize) -> Result<Self> {
        let l = swf.num_models();
        let mut w = Matrix::filled(l, num_classes, T::zero());
        for (i, &v) in swf.as_slice().iter().enumerate() {
            w.row_mut(i).fill(v);
        }
        Self::new(w)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.w
    }

    pub fn num_models(&self) -> usize {
        self.w.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.w.cols()
    }

    pub(crate) fn quantized(&self) -> Result<Self> {
        let mut w = self.w.clone();
        for k in 0..w.cols() {
            let col: Vec<f64> = (0..w.rows()).map(|l| w.get(l, k).as_f64()).collect();
            for (l, v) in quantize_simplex(&col).into_iter().enumerate() {
                w.set(l, k, T::of(v));
            }
        }
        Self::new(w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FusionWeights<T> {
    Swf(SwfWeights<T>),
    Mcwf(McwfWeights<T>),
}

impl<T: Scalar> FusionWeights<T> {
    pub fn mode(&self) -> FusionMode {
        match self {
            FusionWeights::Swf(_) => FusionMode::Swf,
            FusionWeights::Mcwf(_) => FusionMode::Mcwf,
        }
    }

    pub fn num_models(&self) -> usize {
        match self {
            FusionWeights::Swf(w) => w.num_models(),
            FusionWeights::Mcwf(w) => w.num_models(),
        }
    }

    pub fn fuse(&self, dataset: &AlignedDataset<T>) -> Result<ScoreTrack<T>> {
        match self {
            FusionWeights::Swf(w) => fuse_swf(dataset, w),
            FusionWeights::Mcwf(w) => fuse_mcwf(dataset, w),
        }
    }
}

fn fused_track<T: Scalar>(
    dataset: &AlignedDataset<T>,
    row_preserving: bool,
    weight: impl Fn(usize, usize) -> T,
) -> Result<ScoreTrack<T>> {
    let (frames, k) = (dataset.num_frames(), dataset.num_classes());
    let mut out = Matrix::filled(frames, k, T::zero());
    for t in 0..frames {
        let row = out.row_mut(t);
        for (l, model) in dataset.model_scores().iter().enumerate() {
            for (j, (acc, &s)) in row.iter_mut().zip(model.row(t)).enumerate() {
                *acc += weight(l, j) * s;
            }
        }
    }
    // only a class-independent convex weighting keeps rows on the simplex
    let normalized = row_preserving && dataset.model_scores().iter().all(ScoreTrack::normalized);
    let slack = if normalized {
        dataset.model_scores().iter().map(max_row_deviation).fold(0.0, f64::max)
    } else {
        0.0
    };
    ScoreTrack::with_row_tolerance(
        "fused",
        dataset.video_id(),
        dataset.rate_hz(),
        normalized,
        out,
        slack + T::ROW_SUM_TOL,
    )
}

fn max_row_deviation<T: Scalar>(track: &ScoreTrack<T>) -> f64 {
    track
        .scores()
        .row_iter()
        .map(|row| (row.iter().map(|v| v.as_f64()).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `fused(t, k) = sum_l w_l * s_l(t, k)`.
pub fn fuse_swf<T: Scalar>(dataset: &AlignedDataset<T>, w: &SwfWeights<T>) -> Result<ScoreTrack<T>> {
    if w.num_models() != dataset.num_models() {
        return Err(Error::Dimension(format!(
            "{} SWF weights for {} models",
            w.num_models(),
            dataset.num_models()
        )));
    }
    let w = w.as_slice();
    fused_track(dataset, true, |l, _| w[l])
}

/// `fused(t, k) = sum_l W[l][k] * s_l(t, k)`.
pub fn fuse_mcwf<T: Scalar>(dataset: &AlignedDataset<T>, w: &McwfWeights<T>) -> Result<ScoreTrack<T>> {
    if w.num_models() != dataset.num_models() || w.num_classes() != dataset.num_classes() {
        return Err(Error::Dimension(format!(
            "{}x{} MCWF matrix for {} models and {} classes",
            w.num_models(),
            w.num_classes(),
            dataset.num_models(),
            dataset.num_classes()
        )));
    }
    let m = w.matrix();
    fused_track(dataset, false, |l, k| m.get(l, k))
}

pub fn sample_swf<T: Scalar, R: Rng + ?Sized>(num_models: usize, alpha: f64, rng: &mut R) -> Result<SwfWeights<T>> {
    SwfWeights::from_f64(&symmetric_dirichlet(rng, num_models, alpha)?)
}

/// Independent Dirichlet draw per class column.
pub fn sample_mcwf<T: Scalar, R: Rng + ?Sized>(
    num_models: usize,
    num_classes: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<McwfWeights<T>> {
    if num_models == 0 || num_classes == 0 {
        return Err(Error::InvalidArgument("MCWF needs at least one model and one class".into()));
    }
    let mut w = Matrix::filled(num_models, num_classes, T::zero());
    for k in 0..num_classes {
        for (l, v) in symmetric_dirichlet(rng, num_models, alpha)?.into_iter().enumerate() {
            w.set(l, k, T::of(v));
        }
    }
    McwfWeights::new(w)
}
