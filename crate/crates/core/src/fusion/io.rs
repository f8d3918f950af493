//! Weights JSON and search-trace CSV.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::textio::write_atomic;

use super::{FusionMode, FusionWeights, McwfWeights, SwfWeights, WEIGHT_DECIMALS};

/// Fitted weights together with the model order they apply to.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedWeights<T> {
    pub model_ids: Vec<String>,
    pub weights: FusionWeights<T>,
}

#[derive(Deserialize)]
struct RawWeights {
    mode: FusionMode,
    model_ids: Vec<String>,
    weights: serde_json::Value,
}

fn fixed<T: Scalar>(v: &[T]) -> String {
    v.iter()
        .map(|x| format!("{:.*}", WEIGHT_DECIMALS, x))
        .collect::<Vec<_>>()
        .join(",")
}

/// `{"mode":..,"model_ids":[..],"weights":[..] | [[..]]}`; MCWF rows are models.
pub fn weights_json<T: Scalar>(weights: &FusionWeights<T>, model_ids: &[String]) -> Result<String> {
    if model_ids.len() != weights.num_models() {
        return Err(Error::Dimension(format!(
            "{} model ids for {} weighted models",
            model_ids.len(),
            weights.num_models()
        )));
    }
    let ids = serde_json::to_string(model_ids)?;
    let body = match weights {
        FusionWeights::Swf(w) => format!("[{}]", fixed(w.as_slice())),
        FusionWeights::Mcwf(w) => {
            let rows: Vec<String> = w.matrix().row_iter().map(|r| format!("[{}]", fixed(r))).collect();
            format!("[{}]", rows.join(","))
        }
    };
    Ok(format!(
        "{{\"mode\":\"{}\",\"model_ids\":{ids},\"weights\":{body}}}",
        weights.mode()
    ))
}

pub fn write_weights<T: Scalar>(path: &Path, weights: &FusionWeights<T>, model_ids: &[String]) -> Result<()> {
    let mut s = weights_json(weights, model_ids)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn parse_row<T: Scalar>(v: &serde_json::Value) -> Result<Vec<T>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::InvalidArgument("weights must be an array".into()))?;
    arr.iter()
        .map(|x| {
            // Parse from the literal text so the value matches a direct `str::parse`.
            let text = x.to_string();
            text.parse::<T>()
                .map_err(|_| Error::InvalidArgument(format!("weight '{text}' is not a number")))
        })
        .collect()
}

pub fn read_weights_json<T: Scalar>(text: &str) -> Result<SavedWeights<T>> {
    let raw: RawWeights = serde_json::from_str(text)?;
    let weights = match raw.mode {
        FusionMode::Swf => FusionWeights::Swf(SwfWeights::new(parse_row(&raw.weights)?)?),
        FusionMode::Mcwf => {
            let rows = raw
                .weights
                .as_array()
                .ok_or_else(|| Error::InvalidArgument("MCWF weights must be a matrix".into()))?
                .iter()
                .map(parse_row)
                .collect::<Result<Vec<Vec<T>>>>()?;
            let cols = rows.first().map_or(0, Vec::len);
            FusionWeights::Mcwf(McwfWeights::new(Matrix::from_rows(&rows, cols)?)?)
        }
    };
    if raw.model_ids.len() != weights.num_models() {
        return Err(Error::Dimension(format!(
            "{} model ids for {} weighted models",
            raw.model_ids.len(),
            weights.num_models()
        )));
    }
    Ok(SavedWeights {
        model_ids: raw.model_ids,
        weights,
    })
}

pub fn load_weights<T: Scalar>(path: &Path) -> Result<SavedWeights<T>> {
    read_weights_json(&std::fs::read_to_string(path)?)
}

/// `candidate_index,cpm` rows; cpm written in shortest round-trip form.
pub fn write_search_trace(path: &Path, trace: &[(usize, f64)]) -> Result<()> {
    let mut out = String::from("candidate_index,cpm\n");
    for (i, c) in trace {
        writeln!(out, "{i},{c}").unwrap();
    }
    write_atomic(path, out.as_bytes())
}
