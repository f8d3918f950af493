use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{check_rate, LabelTrack, ScoreTrack};

// Slack for timestamp comparisons so that exact ties computed in floating
// point (e.g. 1.5 source periods) resolve to the earlier entry.
const TIME_EPS: f64 = 1e-9;

/// Source index chosen for each output frame when resampling a track of
/// `len` entries from `source_hz` to `target_hz`.
///
/// Output frame `n` sits at `n / target_hz`; it takes the source entry with
/// the nearest timestamp, preferring the earlier entry on ties. The output
/// has `ceil(len * target_hz / source_hz)` frames.
pub fn resample_indices(len: usize, source_hz: f64, target_hz: f64) -> Result<Vec<usize>> {
    check_rate(source_hz)?;
    check_rate(target_hz)?;
    if len == 0 {
        return Err(Error::Empty("cannot resample an empty track".into()));
    }
    if source_hz == target_hz {
        return Ok((0..len).collect());
    }
    let ratio = source_hz / target_hz;
    let out_len = ((len as f64 * target_hz / source_hz) - TIME_EPS).ceil().max(1.0) as usize;
    Ok((0..out_len)
        .map(|n| {
            let pos = n as f64 * ratio;
            let below = pos.floor();
            let idx = if pos - below <= 0.5 + TIME_EPS {
                below
            } else {
                below + 1.0
            };
            (idx as usize).min(len - 1)
        })
        .collect())
}

/// Tracks that can be moved to another frame rate by nearest-timestamp selection.
pub trait Resample: Sized {
    fn resample(&self, target_hz: f64) -> Result<Self>;
}

impl<T: Scalar> Resample for ScoreTrack<T> {
    fn resample(&self, target_hz: f64) -> Result<Self> {
        let idx = resample_indices(self.len(), self.rate_hz, target_hz)?;
        if target_hz == self.rate_hz {
            return Ok(self.clone());
        }
        Ok(ScoreTrack {
            model_id: self.model_id.clone(),
            video_id: self.video_id.clone(),
            rate_hz: target_hz,
            normalized: self.normalized,
            scores: self.scores.select_rows(&idx),
        })
    }
}

impl Resample for LabelTrack {
    fn resample(&self, target_hz: f64) -> Result<Self> {
        let idx = resample_indices(self.len(), self.rate_hz, target_hz)?;
        Ok(LabelTrack {
            video_id: self.video_id.clone(),
            rate_hz: target_hz,
            labels: idx.into_iter().map(|i| self.labels[i]).collect(),
        })
    }
}

pub fn resample_track<R: Resample>(track: &R, target_hz: f64) -> Result<R> {
    track.resample(target_hz)
}
