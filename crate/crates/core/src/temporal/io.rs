//! Feature CSV (`# video=<id> rate_hz=<r> dim=<D>`, `frame,f_0,...`) and
//! pooled-segment CSV (`start_s,end_s,label,p_0,...,p_{2D-1}`).

use std::fmt::Write as _;
use std::path::Path;

use crate::datamodel::{Label, NUM_CLASSES};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::textio::{check_frame, check_id, write_atomic, Lines};

use super::{FeatureTrack, PooledSegment};

fn feature_header(dim: usize) -> String {
    let mut h = String::from("frame");
    for j in 0..dim {
        write!(h, ",f_{j}").unwrap();
    }
    h
}

fn pooled_header(dim: usize) -> String {
    let mut h = String::from("start_s,end_s,label");
    for j in 0..dim {
        write!(h, ",p_{j}").unwrap();
    }
    h
}

pub fn load_feature_track<T: Scalar>(path: &Path) -> Result<FeatureTrack<T>> {
    let mut lines = Lines::read(path)?;
    let meta = lines.metadata()?;
    let video = meta.text(&lines, "video")?;
    let rate = meta.rate(&lines)?;
    let dim: usize = meta.parsed(&lines, "dim")?;
    if dim == 0 {
        return Err(lines.parse_err(meta.line, "dim must be positive"));
    }
    lines.header(&feature_header(dim))?;
    let records = lines.records();
    let mut data = Vec::with_capacity(records.len() * dim);
    for (t, (no, fields)) in records.iter().enumerate() {
        if fields.len() != dim + 1 {
            return Err(lines.parse_err(*no, format!("expected {} columns, found {}", dim + 1, fields.len())));
        }
        check_frame(&lines, *no, &fields[0], t)?;
        for (j, raw) in fields[1..].iter().enumerate() {
            let v: T = lines.field(*no, j + 2, raw, "feature")?;
            if !v.is_finite() {
                return Err(lines.value_err(*no, j + 2, format!("feature {raw} is not finite")));
            }
            data.push(v);
        }
    }
    if records.is_empty() {
        return Err(lines.parse_err(meta.line, "feature file has no data lines"));
    }
    FeatureTrack::new(video, rate, Matrix::from_vec(records.len(), dim, data)?)
}

pub fn write_feature_track<T: Scalar>(path: &Path, track: &FeatureTrack<T>) -> Result<()> {
    check_id(track.video_id(), "video id")?;
    let mut out = String::new();
    writeln!(
        out,
        "# video={} rate_hz={} dim={}",
        track.video_id(),
        track.rate_hz(),
        track.dim()
    )
    .unwrap();
    out.push_str(&feature_header(track.dim()));
    out.push('\n');
    for (t, row) in track.features().row_iter().enumerate() {
        write!(out, "{t}").unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn write_pooled_segments<T: Scalar>(path: &Path, segments: &[PooledSegment<T>]) -> Result<()> {
    let dim = segments.first().map_or(0, |s| s.pooled.len());
    let mut out = pooled_header(dim);
    out.push('\n');
    for s in segments {
        write!(out, "{},{},{}", s.start_s, s.end_s, s.label.map_or(-1, |k| k as i64)).unwrap();
        for v in &s.pooled {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn load_pooled_segments<T: Scalar>(path: &Path) -> Result<Vec<PooledSegment<T>>> {
    let mut lines = Lines::read(path)?;
    let mut records = lines.records();
    if records.is_empty() {
        return Err(lines.parse_err(1, "missing header line"));
    }
    let (hno, header) = records.remove(0);
    let dim = header.len().saturating_sub(3);
    if dim == 0 || dim % 2 != 0 || header.join(",") != pooled_header(dim) {
        return Err(lines.parse_err(hno, "expected header 'start_s,end_s,label,p_0,...,p_{2D-1}'"));
    }
    let mut segments = Vec::with_capacity(records.len());
    for (no, fields) in records {
        if fields.len() != dim + 3 {
            return Err(lines.parse_err(no, format!("expected {} columns, found {}", dim + 3, fields.len())));
        }
        let start_s: f64 = lines.field(no, 1, &fields[0], "start_s")?;
        let end_s: f64 = lines.field(no, 2, &fields[1], "end_s")?;
        if !(start_s >= 0.0 && end_s > start_s) {
            return Err(lines.value_err(no, 2, format!("[{start_s}, {end_s}) is not a valid window")));
        }
        let code: i64 = lines.field(no, 3, &fields[2], "label")?;
        let label: Label = match code {
            -1 => None,
            k if (0..NUM_CLASSES as i64).contains(&k) => Some(k as usize),
            k => return Err(lines.value_err(no, 3, format!("label {k} outside {{-1, 0..6}}"))),
        };
        let pooled = fields[3..]
            .iter()
            .enumerate()
            .map(|(j, raw)| lines.field(no, j + 4, raw, "pooled value"))
            .collect::<Result<Vec<T>>>()?;
        segments.push(PooledSegment {
            start_s,
            end_s,
            pooled,
            label,
        });
    }
    Ok(segments)
}
