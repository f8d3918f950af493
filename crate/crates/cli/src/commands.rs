use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use log::info;
use serde_json::{json, Value};

use latefuse::datamodel::{resample_track, LabelTrack};
use latefuse::fusion::{self, FusionMode, SearchConfig};
use latefuse::kelm::{self, KelmParams, KernelKind, KernelSpec};
use latefuse::metrics::{class_counts, evaluate, log_class_weights};
use latefuse::synth::{self, ScenarioConfig};
use latefuse::temporal::{self, WindowSpec};
use latefuse::{
    align, load_label_track, load_score_track, write_score_track, AlignedDataset, ClassMap, KelmModel, ScoreTrack,
    WindowScores,
};

use crate::{
    Cli, Command, EvaluateArgs, FuseApplyArgs, FuseOptimizeArgs, KelmPredictArgs, KelmTrainArgs, PoolArgs, SynthArgs,
};

/// Runs one subcommand on a pool of `--jobs` workers and returns its summary line.
pub fn run(cli: Cli) -> Result<Value> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .context("building worker pool")?;
    pool.install(|| match cli.command {
        Command::Pool(a) => pool_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::FuseOptimize(a) => fuse_optimize(a),
        Command::FuseApply(a) => fuse_apply(a),
        Command::KelmTrain(a) => kelm_train(a),
        Command::KelmPredict(a) => kelm_predict(a),
        Command::Synth(a) => synth_cmd(a),
    })
}

fn ctx(path: &Path) -> String {
    format!("reading {}", path.display())
}

fn load_dataset(labels: &Path, scores: &[std::path::PathBuf], rate_hz: f64) -> Result<AlignedDataset> {
    let labels = load_label_track(labels).with_context(|| ctx(labels))?;
    let tracks = scores
        .iter()
        .map(|p| load_score_track::<f64>(p, None).with_context(|| ctx(p)))
        .collect::<Result<Vec<ScoreTrack>>>()?;
    check_unique_ids(&tracks)?;
    Ok(align(&labels, &tracks, rate_hz)?)
}

fn check_unique_ids(tracks: &[ScoreTrack]) -> Result<()> {
    for (i, t) in tracks.iter().enumerate() {
        if tracks[..i].iter().any(|o| o.model_id() == t.model_id()) {
            bail!("model id '{}' appears more than once", t.model_id());
        }
    }
    Ok(())
}

fn pool_cmd(a: PoolArgs) -> Result<Value> {
    let spec = WindowSpec::new(a.length_s, a.overlap_fraction)?;
    let features = temporal::load_feature_track::<f64>(&a.features).with_context(|| ctx(&a.features))?;
    let labels = load_label_track(&a.labels).with_context(|| ctx(&a.labels))?;
    if labels.video_id() != features.video_id() {
        bail!("features cover '{}' but labels cover '{}'", features.video_id(), labels.video_id());
    }
    let labels = resample_track(&labels, features.rate_hz())?;
    let len = labels.len().min(features.len());
    let labels = LabelTrack::new(labels.video_id(), labels.rate_hz(), labels.labels()[..len].to_vec())?;
    let features = features.truncated(len);
    let segments = temporal::pool_track(&features, &labels, &spec)?;
    temporal::write_pooled_segments(&a.out, &segments)?;
    info!("pooled {} windows from {}", segments.len(), a.features.display());
    Ok(json!({
        "command": "pool",
        "video": features.video_id(),
        "segments": segments.len(),
        "dim": segments.first().map_or(0, |s| s.pooled.len()),
        "out": a.out,
    }))
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<Value> {
    let truth = load_label_track(&a.labels).with_context(|| ctx(&a.labels))?;
    let (video, rate, predicted) = match (&a.predictions, &a.scores) {
        (Some(p), _) => {
            let t = load_label_track(p).with_context(|| ctx(p))?;
            if let Some(i) = t.labels().iter().position(Option::is_none) {
                bail!("{}: prediction at frame {i} is -1", p.display());
            }
            let t = resample_track(&t, a.rate_hz)?;
            let pred: Vec<usize> = t.labels().iter().flatten().copied().collect();
            (t.video_id().to_string(), t.rate_hz(), pred)
        }
        (None, Some(s)) => {
            let t = resample_track(&load_score_track::<f64>(s, None).with_context(|| ctx(s))?, a.rate_hz)?;
            (t.video_id().to_string(), t.rate_hz(), t.decode())
        }
        (None, None) => bail!("one of --predictions or --scores is required"),
    };
    if video != truth.video_id() {
        bail!("predictions cover '{video}' but labels cover '{}'", truth.video_id());
    }
    let truth = resample_track(&truth, rate)?;
    let len = truth.len().min(predicted.len());
    let report = evaluate(&predicted[..len], &LabelTrack::new(truth.video_id(), rate, truth.labels()[..len].to_vec())?)?;
    if let Some(p) = &a.report {
        report.write_json(p)?;
    }
    Ok(json!({
        "command": "evaluate",
        "frames": report.total(),
        "accuracy": report.accuracy,
        "weighted_f1": report.weighted_f1,
        "cpm": report.cpm,
    }))
}

fn fuse_optimize(a: FuseOptimizeArgs) -> Result<Value> {
    let mode: FusionMode = a.mode.parse()?;
    let dataset = load_dataset(&a.labels, &a.scores, a.rate_hz)?;
    let config = SearchConfig {
        num_draws: a.num_draws,
        seed: a.seed,
        alpha: a.alpha,
        seed_corners: a.seed_corners,
        record_trace: a.trace.is_some(),
    };
    info!(
        "searching {} candidates over {} models, {} frames",
        fusion::num_seeded(dataset.num_models(), &config) + config.num_draws,
        dataset.num_models(),
        dataset.num_frames()
    );
    let result = fusion::optimize_fusion(&dataset, mode, &config)?;
    let ids = dataset.model_ids();
    // serialize everything before touching the filesystem
    let weights_text = fusion::weights_json(&result.best_weights, &ids)? + "\n";
    latefuse::write_atomic(&a.out, weights_text.as_bytes())?;
    if let (Some(p), Some(trace)) = (&a.trace, &result.trace) {
        fusion::write_search_trace(p, trace)?;
    }
    if let Some(p) = &a.report {
        result.best_report.write_json(p)?;
    }
    Ok(json!({
        "command": "fuse-optimize",
        "mode": mode.to_string(),
        "models": ids,
        "frames": dataset.num_frames(),
        "candidate_index": result.candidate_index,
        "accuracy": result.best_report.accuracy,
        "weighted_f1": result.best_report.weighted_f1,
        "cpm": result.best_report.cpm,
    }))
}

fn fuse_apply(a: FuseApplyArgs) -> Result<Value> {
    let saved = fusion::load_weights::<f64>(&a.weights).with_context(|| ctx(&a.weights))?;
    let tracks = a
        .scores
        .iter()
        .map(|p| load_score_track::<f64>(p, None).with_context(|| ctx(p)))
        .collect::<Result<Vec<ScoreTrack>>>()?;
    check_unique_ids(&tracks)?;
    let labels = match &a.labels {
        Some(p) => load_label_track(p).with_context(|| ctx(p))?,
        // without ground truth, align against an all-ignored track spanning the first model
        None => {
            let first = tracks.first().ok_or_else(|| anyhow!("no score tracks"))?;
            LabelTrack::new(first.video_id(), first.rate_hz(), vec![None; first.len()])?
        }
    };
    let dataset = align(&labels, &tracks, a.rate_hz)?;
    let fused = fusion::apply_fusion(&dataset, &saved.weights, &saved.model_ids)?;
    let mut summary = json!({
        "command": "fuse-apply",
        "mode": saved.weights.mode().to_string(),
        "models": saved.model_ids,
        "frames": fused.len(),
    });
    let report = match a.labels {
        Some(_) => Some(evaluate(&fused.decode(), dataset.labels())?),
        None => None,
    };
    write_score_track(&a.out, &fused)?;
    if let Some(r) = report {
        if let Some(p) = &a.report {
            r.write_json(p)?;
        }
        summary["accuracy"] = json!(r.accuracy);
        summary["weighted_f1"] = json!(r.weighted_f1);
        summary["cpm"] = json!(r.cpm);
    }
    Ok(summary)
}

fn kelm_train(a: KelmTrainArgs) -> Result<Value> {
    let kind: KernelKind = a.kernel.parse()?;
    let class_map = match &a.class_map {
        Some(p) => ClassMap::load(p)?,
        None => ClassMap::default(),
    };
    let mut segments = Vec::new();
    for p in &a.pooled {
        segments.extend(temporal::load_pooled_segments::<f64>(p).with_context(|| ctx(p))?);
    }
    let (features, labels) = kelm::segments_to_training(&segments)?;
    if labels.is_empty() {
        bail!("no labelled segments to train on");
    }
    let weights = match a.log_weight_r {
        Some(r) => Some(log_class_weights(&class_counts(&labels.iter().map(|&k| Some(k)).collect::<Vec<_>>(), class_map.len()).iter().map(|&c| c.max(1)).collect::<Vec<_>>(), r)?),
        None => None,
    };
    let params = KelmParams {
        kernel: KernelSpec::new(kind, a.gamma, a.degree, a.coef0)?,
        regularization_c: a.regularization_c,
        class_map,
        standardize: a.standardize,
    };
    let model = kelm::kelm_fit(&features, &labels, &params, weights.as_ref())?;
    model.save(&a.out)?;
    Ok(json!({
        "command": "kelm-train",
        "samples": labels.len(),
        "dim": features.cols(),
        "kernel": a.kernel,
        "out": a.out,
    }))
}

fn kelm_predict(a: KelmPredictArgs) -> Result<Value> {
    let model = KelmModel::load(&a.model).with_context(|| ctx(&a.model))?;
    let segments = temporal::load_pooled_segments::<f64>(&a.pooled).with_context(|| ctx(&a.pooled))?;
    if segments.is_empty() {
        bail!("{}: no segments to score", a.pooled.display());
    }
    let scores = kelm::kelm_predict(&model, &kelm::segments_matrix(&segments)?)?;
    let windows: Vec<WindowScores<f64>> = segments
        .iter()
        .zip(scores.row_iter())
        .map(|(s, row)| WindowScores {
            start_s: s.start_s,
            end_s: s.end_s,
            scores: row.to_vec(),
        })
        .collect();
    // negative decision values are clipped since score tracks hold non-negative confidences
    let windows: Vec<WindowScores<f64>> = windows
        .into_iter()
        .map(|mut w| {
            w.scores.iter_mut().for_each(|v| *v = v.max(0.0));
            w
        })
        .collect();
    let last_end = segments.iter().map(|s| s.end_s).fold(0.0, f64::max);
    let total = a
        .total_frames
        .unwrap_or_else(|| ((last_end * a.rate_hz) - 1e-9).ceil().max(1.0) as usize);
    let track = latefuse::expand_window_predictions(&windows, a.rate_hz, total, &a.model_id, &a.video_id)?;

    let predicted: Vec<usize> = scores.row_iter().map(latefuse::argmax).collect();
    let window_labels: Vec<_> = segments.iter().map(|s| s.label).collect();
    let window_report = if window_labels.iter().any(Option::is_some) {
        Some(latefuse::metrics::evaluate_labels(&predicted, &window_labels, model.num_classes())?)
    } else {
        None
    };
    write_score_track(&a.out, &track)?;
    let mut summary = json!({
        "command": "kelm-predict",
        "segments": segments.len(),
        "frames": track.len(),
    });
    if let Some(r) = window_report {
        summary["window_cpm"] = json!(r.cpm);
    }
    Ok(summary)
}

fn synth_cmd(a: SynthArgs) -> Result<Value> {
    let dataset: AlignedDataset = match (&a.config, a.preset.as_deref()) {
        (Some(p), _) => {
            let mut cfg = ScenarioConfig::load(p).with_context(|| ctx(p))?;
            if let Some(seed) = a.seed {
                cfg.seed = seed;
            }
            synth::generate_scenario(&cfg)?
        }
        (None, Some("complementary")) => synth::complementary_experts(a.frames_per_class)?,
        (None, Some(other)) => bail!("unknown preset '{other}'"),
        (None, None) => bail!("one of --config or --preset is required"),
    };
    let files = synth::write_dataset(&a.out_dir, &dataset)?;
    Ok(json!({
        "command": "synth",
        "frames": dataset.num_frames(),
        "models": dataset.model_ids(),
        "files": files,
    }))
}
