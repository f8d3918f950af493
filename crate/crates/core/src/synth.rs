//! Synthetic aligned datasets with controlled per-model, per-class reliability.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{write_label_track, write_score_track, AlignedDataset, Label, LabelTrack, ScoreTrack, DEFAULT_RATE_HZ};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{argmax, Scalar};
use crate::simplex::symmetric_dirichlet;

fn default_rate() -> f64 {
    DEFAULT_RATE_HZ
}

fn default_video() -> String {
    "synthetic".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub num_frames: usize,
    /// Truth label distribution over the `K` classes.
    pub class_priors: Vec<f64>,
    /// `reliability[l][k]`: probability that model `l` ranks the true class
    /// first on a frame of class `k`.
    pub reliability: Vec<Vec<f64>>,
    /// Mass placed on the intended argmax relative to unit-mass noise.
    pub confidence_sharpness: f64,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    #[serde(default = "default_video")]
    pub video_id: String,
}

impl ScenarioConfig {
    /// Uniform priors over `num_classes` and the same reliability everywhere.
    pub fn uniform(seed: u64, num_frames: usize, num_models: usize, num_classes: usize, reliability: f64) -> Self {
        ScenarioConfig {
            seed,
            num_frames,
            class_priors: vec![1.0 / num_classes as f64; num_classes],
            reliability: vec![vec![reliability; num_classes]; num_models],
            confidence_sharpness: 1.0,
            rate_hz: DEFAULT_RATE_HZ,
            video_id: default_video(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    fn validate(&self) -> Result<()> {
        let k = self.class_priors.len();
        if k == 0 {
            return Err(Error::InvalidArgument("no class priors".into()));
        }
        if self.class_priors.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(Error::InvalidArgument("class priors must be finite and non-negative".into()));
        }
        let total: f64 = self.class_priors.iter().sum();
        if total == 0.0 {
            return Err(Error::InvalidArgument("class priors have zero total".into()));
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("class priors sum to {total}, not 1")));
        }
        if self.num_frames == 0 {
            return Err(Error::InvalidArgument("num_frames must be positive".into()));
        }
        if self.reliability.is_empty() {
            return Err(Error::InvalidArgument("scenario needs at least one model".into()));
        }
        for (l, row) in self.reliability.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Dimension(format!("model {l} has {} reliabilities for {k} classes", row.len())));
            }
            if row.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
                return Err(Error::InvalidArgument(format!("model {l} reliability outside [0, 1]")));
            }
        }
        if !(self.confidence_sharpness.is_finite() && self.confidence_sharpness > 0.0) {
            return Err(Error::InvalidArgument("confidence_sharpness must be positive".into()));
        }
        Ok(())
    }
}

/// Normalized row with `intended` as its strict argmax.
fn score_row<R: Rng>(rng: &mut R, k: usize, intended: usize, sharpness: f64) -> Result<Vec<f64>> {
    let mut row = symmetric_dirichlet(rng, k, 1.0)?;
    let denom = 1.0 + sharpness;
    for (j, v) in row.iter_mut().enumerate() {
        *v = (*v + if j == intended { sharpness } else { 0.0 }) / denom;
    }
    let top = argmax(&row);
    if top != intended {
        row.swap(top, intended);
    }
    Ok(row)
}

/// Draws truth labels from the priors and, per model and frame, a score row
/// that ranks the truth first with the configured reliability (otherwise a
/// uniformly chosen wrong class). Frame `t` uses ChaCha stream `t`.
pub fn generate_scenario<T: Scalar>(config: &ScenarioConfig) -> Result<AlignedDataset<T>> {
    config.validate()?;
    let k = config.class_priors.len();
    let num_models = config.reliability.len();
    let cumulative: Vec<f64> = config
        .class_priors
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    let frames: Vec<(usize, Vec<Vec<f64>>)> = (0..config.num_frames)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let u: f64 = rng.random();
            let truth = cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or_else(|| config.class_priors.iter().rposition(|&p| p > 0.0).unwrap());
            let rows = (0..num_models)
                .map(|l| {
                    let hit = rng.random::<f64>() < config.reliability[l][truth];
                    let intended = if hit || k == 1 {
                        truth
                    } else {
                        let j = rng.random_range(0..k - 1);
                        if j >= truth {
                            j + 1
                        } else {
                            j
                        }
                    };
                    score_row(&mut rng, k, intended, config.confidence_sharpness)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((truth, rows))
        })
        .collect::<Result<_>>()?;

    let labels: Vec<Label> = frames.iter().map(|(y, _)| Some(*y)).collect();
    let labels = LabelTrack::new(config.video_id.clone(), config.rate_hz, labels)?;
    let tracks = (0..num_models)
        .map(|l| {
            let data: Vec<T> = frames.iter().flat_map(|(_, rows)| rows[l].iter().map(|&v| T::of(v))).collect();
            ScoreTrack::new(
                format!("model_{l}"),
                config.video_id.clone(),
                config.rate_hz,
                true,
                Matrix::from_vec(config.num_frames, k, data)?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    AlignedDataset::new(labels, tracks)
}

const EXPERT_CORRECT: f64 = 0.7;
const EXPERT_WRONG: f64 = 0.9;

fn peaked_row(k: usize, peak: usize, mass: f64) -> Vec<f64> {
    let rest = (1.0 - mass) / (k - 1) as f64;
    (0..k).map(|j| if j == peak { mass } else { rest }).collect()
}

/// Two seven-class experts with disjoint competence.
///
/// `expert_a` is right on classes 0-3 with peak 0.7 and, on classes 4-6,
/// confidently (0.9) picks another class from 4-6. `expert_b` mirrors this:
/// right on 4-6, confidently wrong inside 0-3 on the rest. Per-class weights
/// can route each class column to its expert; a single weight per model cannot.
pub fn complementary_experts<T: Scalar>(frames_per_class: usize) -> Result<AlignedDataset<T>> {
    if frames_per_class == 0 {
        return Err(Error::InvalidArgument("frames_per_class must be positive".into()));
    }
    let k = 7;
    let n = frames_per_class * k;
    let truth: Vec<usize> = (0..n).map(|t| t % k).collect();
    let mut a = Vec::with_capacity(n * k);
    let mut b = Vec::with_capacity(n * k);
    for &y in &truth {
        if y < 4 {
            a.extend(peaked_row(k, y, EXPERT_CORRECT));
            b.extend(peaked_row(k, (y + 1) % 4, EXPERT_WRONG));
        } else {
            a.extend(peaked_row(k, 4 + (y - 4 + 1) % 3, EXPERT_WRONG));
            b.extend(peaked_row(k, y, EXPERT_CORRECT));
        }
    }
    let mk = |id: &str, data: Vec<f64>| -> Result<ScoreTrack<T>> {
        ScoreTrack::new(
            id,
            "complementary",
            DEFAULT_RATE_HZ,
            true,
            Matrix::from_vec(n, k, data.into_iter().map(T::of).collect())?,
        )
    };
    let labels = LabelTrack::new("complementary", DEFAULT_RATE_HZ, truth.into_iter().map(Some).collect())?;
    AlignedDataset::new(labels, vec![mk("expert_a", a)?, mk("expert_b", b)?])
}

/// Writes `labels.csv` and one `<model_id>.csv` per model into `dir`.
pub fn write_dataset<T: Scalar>(dir: &Path, dataset: &AlignedDataset<T>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = vec![dir.join("labels.csv")];
    write_label_track(&written[0], dataset.labels())?;
    for s in dataset.model_scores() {
        let p = dir.join(format!("{}.csv", s.model_id()));
        write_score_track(&p, s)?;
        written.push(p);
    }
    Ok(written)
}
