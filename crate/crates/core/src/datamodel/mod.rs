//! Score and label tracks, their alignment onto a common timebase, and the
//! mapping of window-level predictions back to frame rate.

mod io;
mod resample;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub use self::io::{
    load_label_track, load_score_track, read_class_map, write_label_track, write_score_track,
};
pub use self::resample::{resample_indices, resample_track, Resample};

/// Number of expression classes: six basic emotions plus neutral.
pub const NUM_CLASSES: usize = 7;

/// Default common timebase in Hz.
pub const DEFAULT_RATE_HZ: f64 = 5.0;

/// A frame label: `Some(class index)` or `None` for a frame excluded from
/// training and scoring. Stored on disk as `-1`.
pub type Label = Option<usize>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmotionClass {
    Neutral,
    Anger,
    Disgust,
    Fear,
    Happiness,
    Sadness,
    Surprise,
}

impl EmotionClass {
    pub const ALL: [EmotionClass; NUM_CLASSES] = [
        EmotionClass::Neutral,
        EmotionClass::Anger,
        EmotionClass::Disgust,
        EmotionClass::Fear,
        EmotionClass::Happiness,
        EmotionClass::Sadness,
        EmotionClass::Surprise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmotionClass::Neutral => "Neutral",
            EmotionClass::Anger => "Anger",
            EmotionClass::Disgust => "Disgust",
            EmotionClass::Fear => "Fear",
            EmotionClass::Happiness => "Happiness",
            EmotionClass::Sadness => "Sadness",
            EmotionClass::Surprise => "Surprise",
        }
    }
}

impl fmt::Display for EmotionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EmotionClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown emotion class '{s}'")))
    }
}

/// Bijection between class indices and emotion names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMap {
    order: Vec<EmotionClass>,
}

impl Default for ClassMap {
    fn default() -> Self {
        ClassMap {
            order: EmotionClass::ALL.to_vec(),
        }
    }
}

impl ClassMap {
    /// Builds a map from classes listed in index order; each of the seven
    /// classes must appear exactly once.
    pub fn new(order: Vec<EmotionClass>) -> Result<Self> {
        if order.len() != NUM_CLASSES {
            return Err(Error::InvalidArgument(format!(
                "class map needs {NUM_CLASSES} classes, got {}",
                order.len()
            )));
        }
        for c in EmotionClass::ALL {
            if order.iter().filter(|&&o| o == c).count() != 1 {
                return Err(Error::InvalidArgument(format!(
                    "class map must list {c} exactly once"
                )));
            }
        }
        Ok(ClassMap { order })
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_class_map(path)
    }

    pub fn class(&self, index: usize) -> Option<EmotionClass> {
        self.order.get(index).copied()
    }

    pub fn index_of(&self, class: EmotionClass) -> usize {
        self.order.iter().position(|&c| c == class).expect("class map is a bijection")
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.order.iter().map(|c| c.name()).collect()
    }
}

/// Per-frame class confidences from one model on one video.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTrack<T> {
    model_id: String,
    video_id: String,
    rate_hz: f64,
    normalized: bool,
    scores: Matrix<T>,
}

impl<T: Scalar> ScoreTrack<T> {
    pub fn new(
        model_id: impl Into<String>,
        video_id: impl Into<String>,
        rate_hz: f64,
        normalized: bool,
        scores: Matrix<T>,
    ) -> Result<Self> {
        Self::with_row_tolerance(model_id, video_id, rate_hz, normalized, scores, T::ROW_SUM_TOL)
    }

    pub(crate) fn with_row_tolerance(
        model_id: impl Into<String>,
        video_id: impl Into<String>,
        rate_hz: f64,
        normalized: bool,
        scores: Matrix<T>,
        row_tol: f64,
    ) -> Result<Self> {
        check_rate(rate_hz)?;
        if scores.rows() == 0 {
            return Err(Error::Empty("score track has no frames".into()));
        }
        if scores.cols() == 0 {
            return Err(Error::Dimension("score rows have no classes".into()));
        }
        for (t, row) in scores.row_iter().enumerate() {
            if let Some(k) = row.iter().position(|v| !(v.is_finite() && *v >= T::zero())) {
                return Err(Error::Invariant(format!(
                    "score at frame {t}, class {k} is {} (must be finite and >= 0)",
                    row[k]
                )));
            }
            if normalized {
                let sum: f64 = row.iter().map(|v| v.as_f64()).sum();
                if (sum - 1.0).abs() > row_tol {
                    return Err(Error::Invariant(format!(
                        "normalized track has row {t} summing to {sum}"
                    )));
                }
            }
        }
        Ok(ScoreTrack {
            model_id: model_id.into(),
            video_id: video_id.into(),
            rate_hz,
            normalized,
            scores,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn scores(&self) -> &Matrix<T> {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.rows() == 0
    }

    pub fn num_classes(&self) -> usize {
        self.scores.cols()
    }

    pub fn row(&self, t: usize) -> &[T] {
        self.scores.row(t)
    }

    /// Per-frame argmax, ties to the smallest class index.
    pub fn decode(&self) -> Vec<usize> {
        self.scores.row_iter().map(crate::scalar::argmax).collect()
    }

    pub fn with_model_id(mut self, model_id: impl Into<String>) -> Self {
        self.model_id = model_id.into();
        self
    }

    pub(crate) fn truncated(mut self, len: usize) -> Self {
        self.scores.truncate_rows(len);
        self
    }
}

/// Per-frame ground-truth labels for one video.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelTrack {
    video_id: String,
    rate_hz: f64,
    labels: Vec<Label>,
}

impl LabelTrack {
    pub fn new(video_id: impl Into<String>, rate_hz: f64, labels: Vec<Label>) -> Result<Self> {
        check_rate(rate_hz)?;
        if let Some(t) = labels.iter().position(|l| matches!(l, Some(k) if *k >= NUM_CLASSES)) {
            return Err(Error::Invariant(format!(
                "label {:?} at frame {t} is outside 0..{NUM_CLASSES}",
                labels[t]
            )));
        }
        Ok(LabelTrack {
            video_id: video_id.into(),
            rate_hz,
            labels,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub(crate) fn truncated(mut self, len: usize) -> Self {
        self.labels.truncate(len);
        self
    }
}

/// Ground truth plus `L` model score tracks sharing video, rate and length.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedDataset<T> {
    rate_hz: f64,
    labels: LabelTrack,
    model_scores: Vec<ScoreTrack<T>>,
}

impl<T: Scalar> AlignedDataset<T> {
    /// Wraps tracks that are already co-indexed. Use [`align`] to resample first.
    pub fn new(labels: LabelTrack, model_scores: Vec<ScoreTrack<T>>) -> Result<Self> {
        if model_scores.is_empty() {
            return Err(Error::Empty("aligned dataset needs at least one model".into()));
        }
        if labels.is_empty() {
            return Err(Error::Empty("aligned dataset has no frames".into()));
        }
        let rate = labels.rate_hz();
        let k = model_scores[0].num_classes();
        for s in &model_scores {
            if s.video_id() != labels.video_id() {
                return Err(Error::Invariant(format!(
                    "model '{}' covers video '{}' but labels cover '{}'",
                    s.model_id(),
                    s.video_id(),
                    labels.video_id()
                )));
            }
            if s.rate_hz() != rate || s.len() != labels.len() {
                return Err(Error::Invariant(format!(
                    "model '{}' has {} frames at {} Hz, labels have {} at {} Hz",
                    s.model_id(),
                    s.len(),
                    s.rate_hz(),
                    labels.len(),
                    rate
                )));
            }
            if s.num_classes() != k {
                return Err(Error::Dimension(format!(
                    "model '{}' has {} classes, expected {k}",
                    s.model_id(),
                    s.num_classes()
                )));
            }
        }
        Ok(AlignedDataset {
            rate_hz: rate,
            labels,
            model_scores,
        })
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn labels(&self) -> &LabelTrack {
        &self.labels
    }

    pub fn model_scores(&self) -> &[ScoreTrack<T>] {
        &self.model_scores
    }

    pub fn model(&self, l: usize) -> &ScoreTrack<T> {
        &self.model_scores[l]
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.model_scores.iter().map(|s| s.model_id().to_string()).collect()
    }

    pub fn num_models(&self) -> usize {
        self.model_scores.len()
    }

    pub fn num_frames(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.model_scores[0].num_classes()
    }

    pub fn video_id(&self) -> &str {
        self.labels.video_id()
    }
}

/// Resamples every track to `rate_hz` and truncates all of them to the
/// shortest resulting length. Model order is preserved.
pub fn align<T: Scalar>(
    labels: &LabelTrack,
    scores: &[ScoreTrack<T>],
    rate_hz: f64,
) -> Result<AlignedDataset<T>> {
    check_rate(rate_hz)?;
    if scores.is_empty() {
        return Err(Error::Empty("align needs at least one score track".into()));
    }
    if let Some(s) = scores.iter().find(|s| s.video_id() != labels.video_id()) {
        return Err(Error::InvalidArgument(format!(
            "score track '{}' is for video '{}', labels are for '{}'",
            s.model_id(),
            s.video_id(),
            labels.video_id()
        )));
    }
    let labels = resample_track(labels, rate_hz)?;
    let scores = scores
        .iter()
        .map(|s| resample_track(s, rate_hz))
        .collect::<Result<Vec<_>>>()?;
    let len = scores.iter().map(ScoreTrack::len).fold(labels.len(), usize::min);
    if len == 0 {
        return Err(Error::Empty("a track is empty after alignment".into()));
    }
    AlignedDataset::new(
        labels.truncated(len),
        scores.into_iter().map(|s| s.truncated(len)).collect(),
    )
}

/// One window-level prediction over `[start_s, end_s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowScores<T> {
    pub start_s: f64,
    pub end_s: f64,
    pub scores: Vec<T>,
}

/// Broadcasts window-level score rows to frames at `rate_hz`.
///
/// A frame covered by several windows takes the latest-starting one; an
/// uncovered frame takes the row of the nearest window (earlier window on
/// equal distance).
pub fn expand_window_predictions<T: Scalar>(
    windows: &[WindowScores<T>],
    rate_hz: f64,
    total_frames: usize,
    model_id: &str,
    video_id: &str,
) -> Result<ScoreTrack<T>> {
    check_rate(rate_hz)?;
    let first = windows
        .first()
        .ok_or_else(|| Error::Empty("no window predictions to expand".into()))?;
    let k = first.scores.len();
    for (i, w) in windows.iter().enumerate() {
        if !(w.start_s >= 0.0 && w.end_s > w.start_s) {
            return Err(Error::InvalidArgument(format!(
                "window {i} [{}, {}) is not a non-negative interval",
                w.start_s, w.end_s
            )));
        }
        if i > 0 && w.start_s < windows[i - 1].start_s {
            return Err(Error::InvalidArgument("windows must be sorted by start".into()));
        }
        if w.scores.len() != k {
            return Err(Error::Dimension(format!(
                "window {i} has {} scores, expected {k}",
                w.scores.len()
            )));
        }
    }
    if total_frames == 0 {
        return Err(Error::Empty("total_frames must be positive".into()));
    }

    let mut rows = Vec::with_capacity(total_frames);
    for t in 0..total_frames {
        let time = t as f64 / rate_hz;
        let covering = windows
            .iter()
            .rposition(|w| w.start_s <= time && time < w.end_s);
        let chosen = match covering {
            Some(i) => i,
            None => {
                let mut best = 0;
                let mut best_dist = f64::INFINITY;
                for (i, w) in windows.iter().enumerate() {
                    let dist = if time < w.start_s {
                        w.start_s - time
                    } else {
                        time - w.end_s
                    };
                    if dist < best_dist {
                        best = i;
                        best_dist = dist;
                    }
                }
                best
            }
        };
        rows.push(windows[chosen].scores.clone());
    }
    ScoreTrack::new(
        model_id,
        video_id,
        rate_hz,
        false,
        Matrix::from_rows(&rows, k)?,
    )
}

pub(crate) fn check_rate(rate_hz: f64) -> Result<()> {
    if rate_hz.is_finite() && rate_hz > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("rate_hz must be positive, got {rate_hz}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(rows: &[Vec<f64>], rate: f64) -> ScoreTrack<f64> {
        ScoreTrack::new("m", "v", rate, false, Matrix::from_rows(rows, rows[0].len()).unwrap())
            .unwrap()
    }

    #[test]
    fn class_map_round_trips_names() {
        let map = ClassMap::default();
        assert_eq!(map.class(4), Some(EmotionClass::Happiness));
        assert_eq!(map.index_of(EmotionClass::Surprise), 6);
        let mut order = EmotionClass::ALL.to_vec();
        order.swap(0, 6);
        let custom = ClassMap::new(order).unwrap();
        assert_eq!(custom.class(0), Some(EmotionClass::Surprise));
        assert!(ClassMap::new(vec![EmotionClass::Anger; 7]).is_err());
        assert_eq!("happiness".parse::<EmotionClass>().unwrap(), EmotionClass::Happiness);
    }

    #[test]
    fn score_track_rejects_negative_and_unnormalized_rows() {
        let bad = Matrix::from_rows(&[vec![0.5, -0.1]], 2).unwrap();
        assert!(ScoreTrack::new("m", "v", 5.0, false, bad).is_err());
        let unnorm = Matrix::from_rows(&[vec![0.5, 0.6]], 2).unwrap();
        assert!(ScoreTrack::new("m", "v", 5.0, true, unnorm.clone()).is_err());
        assert!(ScoreTrack::new("m", "v", 5.0, false, unnorm).is_ok());
        let ok = Matrix::from_rows(&[vec![0.5, 0.5]], 2).unwrap();
        assert!(ScoreTrack::new("m", "v", 0.0, false, ok).is_err());
    }

    #[test]
    fn label_track_rejects_out_of_range() {
        assert!(LabelTrack::new("v", 5.0, vec![Some(7)]).is_err());
        assert!(LabelTrack::new("v", 5.0, vec![Some(6), None]).is_ok());
    }

    #[test]
    fn align_resamples_and_truncates() {
        let rows: Vec<Vec<f64>> = (0..30).map(|t| vec![t as f64, 1.0]).collect();
        let labels = LabelTrack::new("v", 30.0, vec![Some(1); 30]).unwrap();
        let ds = align(&labels, &[track(&rows, 30.0)], 5.0).unwrap();
        assert_eq!(ds.num_frames(), 5);
        assert_eq!(ds.model(0).row(1), &[6.0, 1.0]);

        let short = track(&rows[..24], 30.0); // resamples to 4 frames
        let ds = align(&labels, &[track(&rows, 30.0), short], 5.0).unwrap();
        assert_eq!(ds.num_frames(), 4);
        assert!(ds.model_scores().iter().all(|s| s.len() == 4 && s.rate_hz() == 5.0));
    }

    #[test]
    fn align_identity_at_target_rate() {
        let rows: Vec<Vec<f64>> = (0..6).map(|t| vec![t as f64 * 0.1, 0.3]).collect();
        let labels = LabelTrack::new("v", 5.0, vec![Some(0), None, Some(2), Some(3), Some(4), Some(5)]).unwrap();
        let scores = track(&rows, 5.0);
        let ds = align(&labels, std::slice::from_ref(&scores), 5.0).unwrap();
        assert_eq!(ds.labels(), &labels);
        assert_eq!(ds.model(0), &scores);
    }

    #[test]
    fn align_rejects_mismatched_video() {
        let labels = LabelTrack::new("other", 5.0, vec![Some(0)]).unwrap();
        assert!(align(&labels, &[track(&[vec![1.0]], 5.0)], 5.0).is_err());
        assert!(align::<f64>(&labels, &[], 5.0).is_err());
    }

    fn win(start: f64, end: f64, v: f64) -> WindowScores<f64> {
        WindowScores {
            start_s: start,
            end_s: end,
            scores: vec![v, 1.0 - v],
        }
    }

    #[test]
    fn expand_single_window_broadcasts() {
        let t = expand_window_predictions(&[win(0.0, 4.0, 0.3)], 5.0, 20, "m", "v").unwrap();
        assert_eq!(t.len(), 20);
        assert!(t.scores().row_iter().all(|r| r == [0.3, 0.7]));
    }

    #[test]
    fn expand_overlap_takes_latest_start_and_nearest_outside() {
        let ws = [win(0.0, 4.0, 0.1), win(2.4, 6.4, 0.9)];
        let t = expand_window_predictions(&ws, 5.0, 40, "m", "v").unwrap();
        for f in 0..40 {
            let time = f as f64 / 5.0;
            // latest-start coverage oracle, nearest window beyond the end
            let expected = if time < 2.4 { 0.1 } else { 0.9 };
            assert_eq!(t.row(f)[0], expected, "frame {f}");
        }
        assert!(expand_window_predictions::<f64>(&[], 5.0, 4, "m", "v").is_err());
    }

    #[test]
    fn expand_gap_uses_nearest_window() {
        let ws = [win(0.0, 1.0, 0.1), win(3.0, 4.0, 0.9)];
        let t = expand_window_predictions(&ws, 5.0, 20, "m", "v").unwrap();
        assert_eq!(t.row(6)[0], 0.1); // 1.2 s: 0.2 from the first, 1.8 from the second
        assert_eq!(t.row(14)[0], 0.9); // 2.8 s
        assert_eq!(t.row(10)[0], 0.1); // 2.0 s: equidistant, earlier wins
    }
}
