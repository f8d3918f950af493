//! Fixed-length windowing of frame tracks, mean/STD statistical pooling and
//! majority window labels.

mod io;

use rayon::prelude::*;

use crate::datamodel::{check_rate, resample_indices, Label, LabelTrack, Resample};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub use self::io::{
    load_feature_track, load_pooled_segments, write_feature_track, write_pooled_segments,
};

const TIME_EPS: f64 = 1e-9;

/// Window length and overlap, both in terms of time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowSpec {
    length_s: f64,
    overlap_fraction: f64,
}

impl Default for WindowSpec {
    /// 4 s non-overlapping windows.
    fn default() -> Self {
        WindowSpec {
            length_s: 4.0,
            overlap_fraction: 0.0,
        }
    }
}

impl WindowSpec {
    pub fn new(length_s: f64, overlap_fraction: f64) -> Result<Self> {
        if !(length_s.is_finite() && length_s > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "window length must be positive, got {length_s}"
            )));
        }
        if !(0.0..1.0).contains(&overlap_fraction) {
            return Err(Error::InvalidArgument(format!(
                "overlap fraction must lie in [0, 1), got {overlap_fraction}"
            )));
        }
        Ok(WindowSpec {
            length_s,
            overlap_fraction,
        })
    }

    /// 4 s windows where consecutive windows share 2/5 of their length.
    pub fn audio_default() -> Self {
        WindowSpec {
            length_s: 4.0,
            overlap_fraction: 0.4,
        }
    }

    pub fn length_s(&self) -> f64 {
        self.length_s
    }

    pub fn overlap_fraction(&self) -> f64 {
        self.overlap_fraction
    }

    pub fn hop_s(&self) -> f64 {
        self.length_s * (1.0 - self.overlap_fraction)
    }
}

/// Frame-level embeddings of one video.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTrack<T> {
    video_id: String,
    rate_hz: f64,
    features: Matrix<T>,
}

impl<T: Scalar> FeatureTrack<T> {
    pub fn new(video_id: impl Into<String>, rate_hz: f64, features: Matrix<T>) -> Result<Self> {
        check_rate(rate_hz)?;
        if features.rows() == 0 {
            return Err(Error::Empty("feature track has no frames".into()));
        }
        if features.cols() == 0 {
            return Err(Error::Dimension("feature rows have dimension 0".into()));
        }
        Ok(FeatureTrack {
            video_id: video_id.into(),
            rate_hz,
            features,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn truncated(mut self, len: usize) -> Self {
        self.features.truncate_rows(len);
        self
    }
}

impl<T: Scalar> Resample for FeatureTrack<T> {
    fn resample(&self, target_hz: f64) -> Result<Self> {
        let idx = resample_indices(self.len(), self.rate_hz, target_hz)?;
        Ok(FeatureTrack {
            video_id: self.video_id.clone(),
            rate_hz: target_hz,
            features: self.features.select_rows(&idx),
        })
    }
}

/// Summary of one window: per-dimension means followed by per-dimension
/// population standard deviations, plus the window's majority label.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledSegment<T> {
    pub start_s: f64,
    pub end_s: f64,
    pub pooled: Vec<T>,
    pub label: Label,
}

impl<T> PooledSegment<T> {
    /// Dimension of the underlying frame features.
    pub fn frame_dim(&self) -> usize {
        self.pooled.len() / 2
    }
}

/// Window boundaries covering `total_duration_s`.
///
/// Windows start every hop while they end within the duration. A duration
/// shorter than one window yields the single window `[0, total_duration_s)`.
pub fn segment_windows(total_duration_s: f64, spec: &WindowSpec) -> Result<Vec<(f64, f64)>> {
    if !(total_duration_s.is_finite() && total_duration_s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "duration must be positive, got {total_duration_s}"
        )));
    }
    let hop = spec.hop_s();
    let mut windows = Vec::new();
    for n in 0.. {
        let start = n as f64 * hop;
        if start + spec.length_s > total_duration_s + TIME_EPS {
            break;
        }
        windows.push((start, start + spec.length_s));
    }
    if windows.is_empty() {
        windows.push((0.0, total_duration_s));
    }
    Ok(windows)
}

/// Per-dimension mean and population STD over the rows of `frames`,
/// concatenated as `means ‖ stds`.
pub fn pool_mean_std<T: Scalar>(frames: &Matrix<T>) -> Result<Vec<T>> {
    if frames.rows() == 0 {
        return Err(Error::Empty("cannot pool an empty window".into()));
    }
    let d = frames.cols();
    let mut mean = vec![T::zero(); d];
    let mut m2 = vec![T::zero(); d];
    // Welford's update keeps constant columns at exactly zero spread.
    for (i, row) in frames.row_iter().enumerate() {
        let n = T::of((i + 1) as f64);
        for j in 0..d {
            let delta = row[j] - mean[j];
            mean[j] += delta / n;
            m2[j] += delta * (row[j] - mean[j]);
        }
    }
    let s = T::of(frames.rows() as f64);
    let mut out = mean;
    out.extend(m2.into_iter().map(|v| (v.max(T::zero()) / s).sqrt()));
    Ok(out)
}

/// Most frequent non-ignored class; ties go to the smallest class index and
/// an all-ignored window stays ignored.
pub fn majority_label(labels: &[Label]) -> Result<Label> {
    if labels.is_empty() {
        return Err(Error::Empty("cannot take the majority of no labels".into()));
    }
    let size = labels.iter().flatten().max().map_or(0, |&m| m + 1);
    let mut counts = vec![0usize; size];
    for &k in labels.iter().flatten() {
        counts[k] += 1;
    }
    let mut best: Label = None;
    for (k, &c) in counts.iter().enumerate() {
        if c > 0 && best.is_none_or(|b| c > counts[b]) {
            best = Some(k);
        }
    }
    Ok(best)
}

/// Frame index range `[first, last)` whose timestamps fall in `[start, end)`.
pub fn frame_range(start_s: f64, end_s: f64, rate_hz: f64, len: usize) -> (usize, usize) {
    let first = ((start_s * rate_hz) - TIME_EPS).ceil().max(0.0) as usize;
    let last = ((end_s * rate_hz) - TIME_EPS).ceil().max(0.0) as usize;
    (first.min(len), last.min(len))
}

/// Windows the aligned feature and label tracks and pools every window.
pub fn pool_track<T: Scalar>(
    features: &FeatureTrack<T>,
    labels: &LabelTrack,
    spec: &WindowSpec,
) -> Result<Vec<PooledSegment<T>>> {
    if features.rate_hz() != labels.rate_hz() || features.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "features have {} frames at {} Hz, labels have {} at {} Hz",
            features.len(),
            features.rate_hz(),
            labels.len(),
            labels.rate_hz()
        )));
    }
    let rate = features.rate_hz();
    let duration = features.len() as f64 / rate;
    let windows = segment_windows(duration, spec)?;
    windows
        .par_iter()
        .map(|&(start, end)| {
            let (first, last) = frame_range(start, end, rate, features.len());
            let idx: Vec<usize> = (first..last).collect();
            let pooled = pool_mean_std(&features.features().select_rows(&idx))?;
            let label = majority_label(&labels.labels()[first..last])?;
            Ok(PooledSegment {
                start_s: start,
                end_s: end,
                pooled,
                label,
            })
        })
        .collect()
}
