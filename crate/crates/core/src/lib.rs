//! Post-network toolkit for frame-level emotion recognition: timebase
//! alignment of score and label streams, windowed mean/STD pooling, the
//! challenge performance measure, kernel extreme learning machines, and
//! simplex-constrained weighted late fusion fitted by Dirichlet random search.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the common double-precision instantiations.

pub mod datamodel;
pub mod error;
pub mod fusion;
pub mod kelm;
pub mod matrix;
pub mod metrics;
pub mod scalar;
pub mod simplex;
pub mod synth;
pub mod temporal;
mod textio;

pub use datamodel::{
    align, expand_window_predictions, load_label_track, load_score_track, resample_track, write_label_track,
    write_score_track, ClassMap, EmotionClass, Label, LabelTrack, Resample, WindowScores, NUM_CLASSES,
};
pub use error::{Error, Result};
pub use fusion::{
    fuse_mcwf, fuse_swf, optimize_fusion, sample_mcwf, sample_swf, FusionMode, SearchConfig,
};
pub use kelm::{kelm_fit, kelm_predict, kernel_eval, KelmParams, KernelKind};
pub use matrix::Matrix;
pub use metrics::{evaluate, log_class_weights, ClassWeights, EvalReport};
pub use scalar::{argmax, Scalar};
pub use synth::{complementary_experts, generate_scenario, ScenarioConfig};
pub use temporal::{majority_label, pool_mean_std, pool_track, segment_windows, WindowSpec};
pub use textio::write_atomic;

pub type ScoreTrack = datamodel::ScoreTrack<f64>;
pub type ScoreTrack32 = datamodel::ScoreTrack<f32>;
pub type AlignedDataset = datamodel::AlignedDataset<f64>;
pub type AlignedDataset32 = datamodel::AlignedDataset<f32>;
pub type FeatureTrack = temporal::FeatureTrack<f64>;
pub type FeatureTrack32 = temporal::FeatureTrack<f32>;
pub type PooledSegment = temporal::PooledSegment<f64>;
pub type PooledSegment32 = temporal::PooledSegment<f32>;
pub type SwfWeights = fusion::SwfWeights<f64>;
pub type McwfWeights = fusion::McwfWeights<f64>;
pub type FusionWeights = fusion::FusionWeights<f64>;
pub type SearchResult = fusion::SearchResult<f64>;
pub type KernelSpec = kelm::KernelSpec<f64>;
pub type KelmModel = kelm::KelmModel<f64>;
pub type KelmModel32 = kelm::KelmModel<f32>;
