//! Score and label CSV formats.
//!
//! Score files:
//! ```text
//! # model=<id> video=<id> rate_hz=<r> normalized=<0|1>
//! frame,score_0,...,score_6
//! 0,0.125000000,...
//! ```
//! Label files carry `# video=<id> rate_hz=<r>` and `frame,label`, with `-1`
//! marking ignored frames.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::textio::{check_frame, check_id, write_atomic, Lines};

use super::{ClassMap, EmotionClass, Label, LabelTrack, ScoreTrack, NUM_CLASSES};

/// Decimal digits used when serializing scores.
pub const SCORE_DECIMALS: usize = 9;

// Each serialized entry may be off by half a unit in the last digit, so a
// row that summed to one in memory can drift by up to K of those on reload.
const QUANTIZATION_SLACK: f64 = NUM_CLASSES as f64 * 0.5e-9;

fn score_header(k: usize) -> String {
    let mut h = String::from("frame");
    for j in 0..k {
        write!(h, ",score_{j}").unwrap();
    }
    h
}

/// Reads a score CSV. `model_id` overrides the id recorded in the file.
pub fn load_score_track<T: Scalar>(path: &Path, model_id: Option<&str>) -> Result<ScoreTrack<T>> {
    let mut lines = Lines::read(path)?;
    let meta = lines.metadata()?;
    let file_model = meta.text(&lines, "model")?;
    let video = meta.text(&lines, "video")?;
    let rate = meta.rate(&lines)?;
    let normalized = match meta.text(&lines, "normalized")?.as_str() {
        "0" => false,
        "1" => true,
        other => {
            return Err(lines.parse_err(meta.line, format!("normalized must be 0 or 1, got '{other}'")))
        }
    };
    lines.header(&score_header(NUM_CLASSES))?;

    let records = lines.records();
    let mut data = Vec::with_capacity(records.len() * NUM_CLASSES);
    for (t, (no, fields)) in records.iter().enumerate() {
        if fields.len() != NUM_CLASSES + 1 {
            return Err(lines.parse_err(
                *no,
                format!("expected {} columns, found {}", NUM_CLASSES + 1, fields.len()),
            ));
        }
        check_frame(&lines, *no, &fields[0], t)?;
        for (j, raw) in fields[1..].iter().enumerate() {
            let v: T = lines.field(*no, j + 2, raw, "score")?;
            if !v.is_finite() || v < T::zero() {
                return Err(lines.value_err(*no, j + 2, format!("score {raw} must be finite and >= 0")));
            }
            data.push(v);
        }
    }
    if records.is_empty() {
        return Err(lines.parse_err(meta.line, "score file has no data lines"));
    }
    let scores = Matrix::from_vec(records.len(), NUM_CLASSES, data)?;
    ScoreTrack::with_row_tolerance(
        model_id.unwrap_or(&file_model),
        video,
        rate,
        normalized,
        scores,
        T::ROW_SUM_TOL.max(QUANTIZATION_SLACK + 1e-9),
    )
    .map_err(|e| lines.parse_err(meta.line, e.to_string()))
}

pub fn format_score_track<T: Scalar>(track: &ScoreTrack<T>) -> Result<String> {
    check_id(track.model_id(), "model id")?;
    check_id(track.video_id(), "video id")?;
    let mut out = String::new();
    writeln!(
        out,
        "# model={} video={} rate_hz={} normalized={}",
        track.model_id(),
        track.video_id(),
        track.rate_hz(),
        u8::from(track.normalized())
    )
    .unwrap();
    out.push_str(&score_header(track.num_classes()));
    out.push('\n');
    for (t, row) in track.scores().row_iter().enumerate() {
        write!(out, "{t}").unwrap();
        for v in row {
            write!(out, ",{:.*}", SCORE_DECIMALS, v).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_score_track<T: Scalar>(path: &Path, track: &ScoreTrack<T>) -> Result<()> {
    write_atomic(path, format_score_track(track)?.as_bytes())
}

pub fn load_label_track(path: &Path) -> Result<LabelTrack> {
    let mut lines = Lines::read(path)?;
    let meta = lines.metadata()?;
    let video = meta.text(&lines, "video")?;
    let rate = meta.rate(&lines)?;
    lines.header("frame,label")?;
    let mut labels = Vec::new();
    for (t, (no, fields)) in lines.records().iter().enumerate() {
        if fields.len() != 2 {
            return Err(lines.parse_err(*no, format!("expected 2 columns, found {}", fields.len())));
        }
        check_frame(&lines, *no, &fields[0], t)?;
        let raw: i64 = lines.field(*no, 2, &fields[1], "label")?;
        let label: Label = match raw {
            -1 => None,
            k if (0..NUM_CLASSES as i64).contains(&k) => Some(k as usize),
            k => {
                return Err(lines.value_err(
                    *no,
                    2,
                    format!("label {k} outside {{-1, 0..{}}}", NUM_CLASSES - 1),
                ))
            }
        };
        labels.push(label);
    }
    LabelTrack::new(video, rate, labels)
}

pub fn format_label_track(track: &LabelTrack) -> Result<String> {
    check_id(track.video_id(), "video id")?;
    let mut out = String::new();
    writeln!(out, "# video={} rate_hz={}", track.video_id(), track.rate_hz()).unwrap();
    out.push_str("frame,label\n");
    for (t, l) in track.labels().iter().enumerate() {
        writeln!(out, "{t},{}", label_code(*l)).unwrap();
    }
    Ok(out)
}

pub fn write_label_track(path: &Path, track: &LabelTrack) -> Result<()> {
    write_atomic(path, format_label_track(track)?.as_bytes())
}

pub(crate) fn label_code(label: Label) -> i64 {
    label.map_or(-1, |k| k as i64)
}

/// Reads a class-order file: one emotion name per line, in index order.
pub fn read_class_map(path: &Path) -> Result<ClassMap> {
    let text = std::fs::read_to_string(path)?;
    let order = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse::<EmotionClass>)
        .collect::<Result<Vec<_>>>()?;
    ClassMap::new(order).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}
