use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::datamodel::{AlignedDataset, ScoreTrack};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalReport};
use crate::scalar::Scalar;

use super::{sample_mcwf, sample_swf, FusionMode, FusionWeights, McwfWeights, SwfWeights};

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Random candidates evaluated after the seeded ones.
    pub num_draws: usize,
    pub seed: u64,
    /// Symmetric Dirichlet concentration; 1 is uniform on the simplex.
    pub alpha: f64,
    /// Evaluate every one-hot model corner and the uniform weighting first.
    pub seed_corners: bool,
    pub record_trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            num_draws: 10_000,
            seed: 0,
            alpha: 1.0,
            seed_corners: true,
            record_trace: false,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.num_draws == 0 {
            return Err(Error::InvalidArgument("num_draws must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult<T> {
    pub best_weights: FusionWeights<T>,
    pub best_report: EvalReport,
    pub candidate_index: usize,
    /// `(candidate_index, cpm)` for every candidate, when requested.
    pub trace: Option<Vec<(usize, f64)>>,
}

/// Seeded candidates that precede the random draws: `L` corners plus uniform.
pub fn num_seeded(num_models: usize, config: &SearchConfig) -> usize {
    if config.seed_corners {
        num_models + 1
    } else {
        0
    }
}

/// Candidate `index` of the search, a pure function of the index and config.
///
/// Random candidate `j` draws from its own ChaCha stream `j`, so the set of
/// candidates does not depend on evaluation order or worker count. Weights are
/// rounded to the serialization grid so that saved weights replay exactly.
pub fn candidate_weights<T: Scalar>(
    num_models: usize,
    num_classes: usize,
    mode: FusionMode,
    config: &SearchConfig,
    index: usize,
) -> Result<FusionWeights<T>> {
    let seeded = num_seeded(num_models, config);
    let swf = if index < seeded {
        Some(if index < num_models {
            SwfWeights::corner(num_models, index)?
        } else {
            SwfWeights::uniform(num_models)?
        })
    } else {
        None
    };
    let weights = match (mode, swf) {
        (FusionMode::Swf, Some(w)) => FusionWeights::Swf(w),
        (FusionMode::Mcwf, Some(w)) => FusionWeights::Mcwf(McwfWeights::from_swf(&w, num_classes)?),
        (mode, None) => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream((index - seeded) as u64);
            match mode {
                FusionMode::Swf => {
                    FusionWeights::Swf(sample_swf::<T, _>(num_models, config.alpha, &mut rng)?.quantized()?)
                }
                FusionMode::Mcwf => FusionWeights::Mcwf(
                    sample_mcwf::<T, _>(num_models, num_classes, config.alpha, &mut rng)?.quantized()?,
                ),
            }
        }
    };
    Ok(weights)
}

/// Fuses, argmax-decodes and evaluates one weighting against the dataset labels.
pub fn score_weights<T: Scalar>(dataset: &AlignedDataset<T>, weights: &FusionWeights<T>) -> Result<EvalReport> {
    let fused = weights.fuse(dataset)?;
    evaluate(&fused.decode(), dataset.labels())
}

/// Random search for the fusion weights with the highest challenge measure on
/// `dataset`. Ties go to the lowest candidate index.
///
/// Candidates are scored in parallel on the current rayon pool; the result is
/// identical for any pool size.
pub fn optimize_fusion<T: Scalar>(
    dataset: &AlignedDataset<T>,
    mode: FusionMode,
    config: &SearchConfig,
) -> Result<SearchResult<T>> {
    config.validate()?;
    if dataset.labels().labels().iter().all(Option::is_none) {
        return Err(Error::Empty("validation labels are all ignored".into()));
    }
    let (l, k) = (dataset.num_models(), dataset.num_classes());
    let total = num_seeded(l, config) + config.num_draws;

    let scores: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| {
            let w = candidate_weights::<T>(l, k, mode, config, i)?;
            Ok(score_weights(dataset, &w)?.cpm)
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    let best_weights = candidate_weights::<T>(l, k, mode, config, best)?;
    let best_report = score_weights(dataset, &best_weights)?;
    let trace = config
        .record_trace
        .then(|| scores.iter().copied().enumerate().collect());
    Ok(SearchResult {
        best_weights,
        best_report,
        candidate_index: best,
        trace,
    })
}

/// Applies fitted weights to a dataset whose model order is `model_ids`.
pub fn apply_fusion<T: Scalar>(
    dataset: &AlignedDataset<T>,
    weights: &FusionWeights<T>,
    model_ids: &[String],
) -> Result<ScoreTrack<T>> {
    let ids = dataset.model_ids();
    if ids != model_ids {
        return Err(Error::InvalidArgument(format!(
            "weights were fitted for models {model_ids:?}, dataset provides {ids:?}"
        )));
    }
    weights.fuse(dataset)
}
