//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use latefuse::datamodel::{resample_indices, write_label_track, LabelTrack};
use latefuse::fusion::{fuse_mcwf, fuse_swf, optimize_fusion, score_weights, FusionMode, SearchConfig};
use latefuse::kelm::{kelm_fit, kelm_predict, KelmParams, KernelKind, KernelSpec};
use latefuse::metrics::evaluate_labels;
use latefuse::simplex::symmetric_dirichlet;
use latefuse::temporal::{frame_range, write_feature_track};
use latefuse::{
    complementary_experts, evaluate, generate_scenario, pool_mean_std, segment_windows, ClassMap,
    FeatureTrack, FusionWeights, Matrix, McwfWeights, ScenarioConfig, SwfWeights, WindowSpec,
};

const K: usize = 7;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    check(elapsed < Duration::from_secs(limit_s), || {
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

// ---------------------------------------------------------------- 1

struct OracleScores {
    accuracy: f64,
    per_class_f1: Vec<f64>,
    weighted_f1: f64,
}

fn metric_oracle(pred: &[usize], truth: &[Option<usize>]) -> OracleScores {
    let pairs: Vec<(usize, usize)> = pred
        .iter()
        .zip(truth)
        .filter_map(|(&p, t)| t.map(|t| (p, t)))
        .collect();
    let n = pairs.len() as f64;
    let correct = pairs.iter().filter(|(p, t)| p == t).count() as f64;
    let mut per_class_f1 = Vec::new();
    let mut weighted = 0.0;
    for k in 0..K {
        let tp = pairs.iter().filter(|&&(p, t)| p == k && t == k).count() as f64;
        let predicted = pairs.iter().filter(|&&(p, _)| p == k).count() as f64;
        let actual = pairs.iter().filter(|&&(_, t)| t == k).count() as f64;
        let f1 = if tp == 0.0 {
            0.0
        } else {
            let precision = tp / predicted;
            let recall = tp / actual;
            2.0 * precision * recall / (precision + recall)
        };
        per_class_f1.push(f1);
        weighted += f1 * actual / n;
    }
    OracleScores {
        accuracy: correct / n,
        per_class_f1,
        weighted_f1: weighted,
    }
}

fn metric_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = rng.random_range(1..400);
        // skew towards a few classes so that some classes are absent
        let active = rng.random_range(1..=K);
        let truth: Vec<Option<usize>> = (0..n)
            .map(|_| (!rng.random_bool(0.1)).then(|| rng.random_range(0..active)))
            .collect();
        let pred: Vec<usize> = truth
            .iter()
            .map(|t| match t {
                Some(t) if rng.random_bool(0.5) => *t,
                _ => rng.random_range(0..K),
            })
            .collect();
        if truth.iter().all(Option::is_none) {
            continue;
        }
        let report = evaluate_labels(&pred, &truth, K).map_err(|e| format!("case {case}: {e}"))?;
        let oracle = metric_oracle(&pred, &truth);
        let mut diffs = vec![
            (report.accuracy - oracle.accuracy).abs(),
            (report.weighted_f1 - oracle.weighted_f1).abs(),
            (report.cpm - (0.67 * oracle.weighted_f1 + 0.33 * oracle.accuracy)).abs(),
        ];
        diffs.extend(report.per_class_f1.iter().zip(&oracle.per_class_f1).map(|(a, b)| (a - b).abs()));
        let diff = diffs.into_iter().fold(0.0, f64::max);
        worst = worst.max(diff);
        check(diff <= 1e-12, || format!("case {case}: deviation {diff:e}"))?;
        let exact = 0.67 * report.weighted_f1 + 0.33 * report.accuracy;
        check(report.cpm.to_bits() == exact.to_bits(), || {
            format!("case {case}: cpm {} != 0.67*wF1 + 0.33*acc = {exact}", report.cpm)
        })?;
    }
    within(start.elapsed(), 5)?;
    Ok(format!("max deviation {worst:.1e}, {:.2}s", start.elapsed().as_secs_f64()))
}

// ---------------------------------------------------------------- 2

fn random_scenario(rng: &mut ChaCha8Rng, seed: u64, num_models: usize, frames: usize) -> ScenarioConfig {
    let priors = symmetric_dirichlet(rng, K, 2.0).unwrap();
    let floor = 0.02;
    let priors: Vec<f64> = priors.iter().map(|p| floor / K as f64 + (1.0 - floor) * p).collect();
    let sum: f64 = priors.iter().sum();
    let mut priors: Vec<f64> = priors.iter().map(|p| p / sum).collect();
    let head: f64 = priors[..K - 1].iter().sum();
    priors[K - 1] = 1.0 - head;
    ScenarioConfig {
        seed,
        num_frames: frames,
        class_priors: priors,
        reliability: (0..num_models)
            .map(|_| (0..K).map(|_| rng.random_range(0.15..0.95)).collect())
            .collect(),
        confidence_sharpness: rng.random_range(0.3..3.0),
        ..ScenarioConfig::uniform(seed, frames, num_models, K, 0.5)
    }
}

fn fusion_dominance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut min_gain = f64::INFINITY;
    let mut strict = 0;
    for i in 0..50u64 {
        let num_models = 2 + (i as usize % 4);
        let cfg = random_scenario(&mut rng, 100 + i, num_models, 2000);
        let ds = generate_scenario::<f64>(&cfg).map_err(|e| format!("scenario {i}: {e}"))?;
        let best_single = (0..num_models)
            .map(|l| evaluate(&ds.model(l).decode(), ds.labels()).unwrap().cpm)
            .fold(f64::NEG_INFINITY, f64::max);
        let search = SearchConfig {
            num_draws: 1000,
            seed: i,
            ..SearchConfig::default()
        };
        let result = optimize_fusion(&ds, FusionMode::Swf, &search).map_err(|e| format!("scenario {i}: {e}"))?;
        let gain = result.best_report.cpm - best_single;
        check(gain >= 0.0, || {
            format!("scenario {i}: fused {} < best single {best_single}", result.best_report.cpm)
        })?;
        min_gain = min_gain.min(gain);
        if gain > 0.0 {
            strict += 1;
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!(
        "50/50 dominate (min gain {min_gain:.4}, {strict} strict), {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 3

fn mcwf_contains_swf() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..100u64 {
        let num_models = rng.random_range(2..=5);
        let cfg = random_scenario(&mut rng, 300 + i, num_models, 200);
        let ds = generate_scenario::<f64>(&cfg).map_err(|e| e.to_string())?;
        let w = symmetric_dirichlet(&mut rng, num_models, 1.0).map_err(|e| e.to_string())?;
        let swf = SwfWeights::new(w.clone()).map_err(|e| e.to_string())?;
        let columns: Vec<f64> = w.iter().flat_map(|&v| std::iter::repeat_n(v, K)).collect();
        let mcwf = McwfWeights::new(Matrix::from_vec(num_models, K, columns).unwrap()).map_err(|e| e.to_string())?;
        let a = fuse_swf(&ds, &swf).map_err(|e| e.to_string())?;
        let b = fuse_mcwf(&ds, &mcwf).map_err(|e| e.to_string())?;
        let same = a
            .scores()
            .as_slice()
            .iter()
            .zip(b.scores().as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits());
        check(same, || format!("vector {i}: SWF and constant-column MCWF differ"))?;
    }
    within(start.elapsed(), 5)?;
    Ok(format!("100/100 bit-equal, {:.2}s", start.elapsed().as_secs_f64()))
}

// ---------------------------------------------------------------- 4

fn complementary_separation() -> Outcome {
    let start = Instant::now();
    let ds = complementary_experts::<f64>(20).map_err(|e| e.to_string())?;
    let search = SearchConfig {
        seed: 4,
        ..SearchConfig::default()
    };
    let mcwf = optimize_fusion(&ds, FusionMode::Mcwf, &search).map_err(|e| e.to_string())?;
    check(mcwf.best_report.cpm == 1.0, || format!("MCWF cpm {}", mcwf.best_report.cpm))?;

    let swf_cpm = |w: Vec<f64>| -> Result<f64, String> {
        let w = FusionWeights::Swf(SwfWeights::new(w).map_err(|e| e.to_string())?);
        Ok(score_weights(&ds, &w).map_err(|e| e.to_string())?.cpm)
    };
    let seeded = [swf_cpm(vec![1.0, 0.0])?, swf_cpm(vec![0.0, 1.0])?, swf_cpm(vec![0.5, 0.5])?];
    for (name, v) in ["corner a", "corner b", "uniform"].iter().zip(seeded) {
        check(v < 0.9, || format!("SWF {name} cpm {v}"))?;
    }
    let mut ceiling = f64::NEG_INFINITY;
    for step in 0..=1000 {
        let w = step as f64 / 1000.0;
        ceiling = ceiling.max(swf_cpm(vec![w, 1.0 - w])?);
    }
    check(ceiling < 1.0, || format!("SWF grid reaches {ceiling}"))?;
    let swf = optimize_fusion(&ds, FusionMode::Swf, &search).map_err(|e| e.to_string())?;
    check(swf.best_report.cpm < 1.0, || format!("SWF search reaches {}", swf.best_report.cpm))?;
    within(start.elapsed(), 30)?;
    Ok(format!(
        "MCWF 1.0; SWF corners {:.4}/{:.4}, uniform {:.4}, grid ceiling {ceiling:.4}, {:.2}s",
        seeded[0],
        seeded[1],
        seeded[2],
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 5

fn pooling_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let rows = rng.random_range(1..60);
        let dim = rng.random_range(1..10);
        let offset = rng.random_range(-50.0..50.0);
        let spread = 10f64.powf(rng.random_range(-3.0..2.0));
        let data: Vec<f64> = (0..rows * dim).map(|_| offset + spread * rng.random_range(-1.0..1.0)).collect();
        let pooled = pool_mean_std(&Matrix::from_vec(rows, dim, data.clone()).unwrap()).map_err(|e| e.to_string())?;
        check(pooled.len() == 2 * dim, || format!("window {i}: {} outputs", pooled.len()))?;
        for d in 0..dim {
            let col: Vec<f64> = (0..rows).map(|r| data[r * dim + d]).collect();
            let mean = col.iter().sum::<f64>() / rows as f64;
            let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / rows as f64;
            let diff = (pooled[d] - mean).abs().max((pooled[dim + d] - var.sqrt()).abs());
            worst = worst.max(diff);
            check(diff <= 1e-10, || format!("window {i}, dim {d}: deviation {diff:e}"))?;
        }
    }
    for value in [0.1, -3.7, 1e6 + 0.3, 0.0] {
        for rows in [1, 2, 3, 7, 30, 101] {
            let pooled = pool_mean_std(&Matrix::filled(rows, 3, value)).map_err(|e| e.to_string())?;
            check(pooled[3..].iter().all(|&s| s == 0.0), || {
                format!("constant {value} over {rows} rows has STD {:?}", &pooled[3..])
            })?;
        }
    }
    let wide = pool_mean_std(&Matrix::filled(30, 1024, 0.5)).map_err(|e| e.to_string())?;
    check(wide.len() == 2048, || format!("D=1024 yields {}", wide.len()))?;
    Ok(format!("max deviation {worst:.1e}; constant STD 0; 1024 -> 2048"))
}

// ---------------------------------------------------------------- 6

fn windowing_counts() -> Outcome {
    let spec = WindowSpec::new(4.0, 0.4).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for ms in 4000..=60000u64 {
        let duration = ms as f64 / 1000.0;
        let windows = segment_windows(duration, &spec).map_err(|e| e.to_string())?;
        let expected: Vec<(u64, u64)> = (0..)
            .map(|n| (n * 2400, n * 2400 + 4000))
            .take_while(|&(_, end)| end <= ms)
            .collect();
        check(windows.len() == expected.len(), || {
            format!("{duration}s: {} windows, expected {}", windows.len(), expected.len())
        })?;
        for ((s, e), (es, ee)) in windows.iter().zip(&expected) {
            check((s * 1000.0 - *es as f64).abs() < 1e-6 && (e * 1000.0 - *ee as f64).abs() < 1e-6, || {
                format!("{duration}s: window ({s}, {e}) expected ({es}ms, {ee}ms)")
            })?;
        }
        checked += 1;
    }
    let visual = frame_range(0.0, 4.0, 7.5, usize::MAX);
    check(visual.1 - visual.0 == 30, || format!("4 s at 7.5 Hz covers {visual:?}"))?;
    let labels = frame_range(0.0, 4.0, 5.0, usize::MAX);
    check(labels.1 - labels.0 == 20, || format!("4 s at 5 Hz covers {labels:?}"))?;
    for (start, end) in segment_windows(600.0, &spec).map_err(|e| e.to_string())? {
        let (a, b) = frame_range(start, end, 7.5, usize::MAX);
        check(b - a == 30, || format!("window [{start}, {end}) covers {} frames at 7.5 Hz", b - a))?;
        let (a, b) = frame_range(start, end, 5.0, usize::MAX);
        check(b - a == 20, || format!("window [{start}, {end}) covers {} labels at 5 Hz", b - a))?;
    }
    Ok(format!("{checked} durations match enumeration; 30 frames at 7.5 Hz; 20 labels at 5 Hz"))
}

// ---------------------------------------------------------------- 7

fn oracle_kernel(kind: KernelKind, gamma: f64, degree: u32, coef0: f64, x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    match kind {
        KernelKind::Linear => dot,
        KernelKind::Polynomial => (gamma * dot + coef0).powi(degree as i32),
        KernelKind::Rbf => (-gamma * x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp(),
    }
}

fn kelm_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = rng.random_range(1..=50);
        let d = rng.random_range(1..=8);
        let kind = [KernelKind::Linear, KernelKind::Polynomial, KernelKind::Rbf][i % 3];
        let gamma = rng.random_range(0.05..0.5);
        let degree = rng.random_range(1..=3);
        let coef0 = rng.random_range(0.0..1.0);
        let c = 10f64.powf(rng.random_range(-1.0..2.0));
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..K)).collect();
        let queries: Vec<Vec<f64>> = (0..10).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();

        let params = KelmParams {
            kernel: KernelSpec::new(kind, gamma, degree, coef0).map_err(|e| e.to_string())?,
            regularization_c: c,
            class_map: ClassMap::default(),
            standardize: false,
        };
        let features = Matrix::from_rows(&x, d).unwrap();
        let model = kelm_fit(&features, &y, &params, None).map_err(|e| format!("instance {i}: {e}"))?;
        let scores = kelm_predict(&model, &Matrix::from_rows(&queries, d).unwrap()).map_err(|e| e.to_string())?;

        let kern = |a: &[f64], b: &[f64]| oracle_kernel(kind, gamma, degree, coef0, a, b);
        let system = DMatrix::from_fn(n, n, |r, s| kern(&x[r], &x[s]) + if r == s { 1.0 / c } else { 0.0 });
        let targets = DMatrix::from_fn(n, K, |r, k| if y[r] == k { 1.0 } else { 0.0 });
        let alpha = system.lu().solve(&targets).ok_or_else(|| format!("instance {i}: oracle singular"))?;
        let cross = DMatrix::from_fn(queries.len(), n, |q, r| kern(&queries[q], &x[r]));
        let expected = cross * alpha;
        for q in 0..queries.len() {
            for k in 0..K {
                let diff = (scores.get(q, k) - expected[(q, k)]).abs();
                worst = worst.max(diff);
                check(diff <= 1e-6, || format!("instance {i} ({kind:?}, n={n}): deviation {diff:e}"))?;
            }
        }
    }

    let single = kelm_fit(
        &Matrix::from_vec(1, 2, vec![0.3, -1.2]).unwrap(),
        &[2],
        &KelmParams {
            kernel: KernelSpec::rbf(0.7).map_err(|e| e.to_string())?,
            ..KelmParams::default()
        },
        None,
    )
    .map_err(|e| e.to_string())?;
    let coef: f64 = single.coefficients.get(0, 2);
    check((coef - 0.75).abs() <= 1e-12, || format!("n=1 coefficient {coef}"))?;
    within(start.elapsed(), 10)?;
    Ok(format!(
        "max deviation {worst:.1e}; n=1 coefficient {coef}; {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 8

fn cli(dir: &Path, jobs: usize, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_latefuse"))
        .current_dir(dir)
        .arg("--jobs")
        .arg(jobs.to_string())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`latefuse {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn json_f64(line: &str, key: &str) -> Result<f64, String> {
    let v: serde_json::Value = serde_json::from_str(line.trim()).map_err(|e| format!("{e}: {line}"))?;
    v[key].as_f64().ok_or_else(|| format!("no {key} in {line}"))
}

fn write_pipeline_inputs(dir: &Path) -> Result<(), String> {
    let scenario = ScenarioConfig {
        class_priors: vec![0.3, 0.05, 0.05, 0.1, 0.25, 0.15, 0.1],
        reliability: vec![
            vec![0.8, 0.3, 0.3, 0.5, 0.7, 0.4, 0.6],
            vec![0.4, 0.7, 0.6, 0.5, 0.5, 0.8, 0.3],
            vec![0.6, 0.5, 0.5, 0.7, 0.3, 0.4, 0.7],
        ],
        confidence_sharpness: 1.5,
        ..ScenarioConfig::uniform(21, 1500, 3, K, 0.5)
    };
    fs::write(dir.join("scenario.json"), serde_json::to_string(&scenario).unwrap()).map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let labels: Vec<Option<usize>> = (0..300)
        .map(|t| if t % 53 == 7 { None } else { Some((t / 23) % K) })
        .collect();
    let label_track = LabelTrack::new("clip", 5.0, labels.clone()).unwrap();
    write_label_track(&dir.join("clip_labels.csv"), &label_track).map_err(|e| e.to_string())?;
    let dim = 12;
    let rows: Vec<Vec<f64>> = (0..450)
        .map(|f| {
            let y = labels[(f * 2 / 3).min(299)].unwrap_or(0) as f64;
            (0..dim).map(|j| (y * (j as f64 + 1.0)).sin() + rng.random_range(-0.4..0.4)).collect()
        })
        .collect();
    let features = FeatureTrack::new("clip", 7.5, Matrix::from_rows(&rows, dim).unwrap()).unwrap();
    write_feature_track(&dir.join("clip_features.csv"), &features).map_err(|e| e.to_string())
}

/// Runs every subcommand in `dir`; returns the stdout of each run in order.
fn run_pipeline(dir: &Path, jobs: usize) -> Result<Vec<String>, String> {
    write_pipeline_inputs(dir)?;
    let scen = ["--scores", "scen/model_0.csv", "--scores", "scen/model_1.csv", "--scores", "scen/model_2.csv"];
    let mut outs = Vec::new();
    let mut run = |args: &[&str]| -> Result<String, String> {
        let s = cli(dir, jobs, args)?;
        outs.push(s.clone());
        Ok(s)
    };
    run(&["synth", "--preset", "complementary", "--frames-per-class", "25", "--out-dir", "comp"])?;
    run(&["synth", "--config", "scenario.json", "--seed", "33", "--out-dir", "scen"])?;
    let mut optimized = Vec::new();
    for mode in ["swf", "mcwf"] {
        let (w, t, r) = (format!("{mode}.json"), format!("{mode}_trace.csv"), format!("{mode}_report.json"));
        let mut args = vec!["fuse-optimize", "--labels", "scen/labels.csv", "--mode", mode];
        args.extend(scen);
        args.extend(["--num-draws", "2000", "--seed", "9", "--out", &w, "--trace", &t, "--report", &r]);
        let opt = json_f64(&run(&args)?, "cpm")?;
        let (f, fr) = (format!("fused_{mode}.csv"), format!("fused_{mode}_report.json"));
        let mut args = vec!["fuse-apply", "--weights", &w, "--labels", "scen/labels.csv"];
        args.extend(scen);
        args.extend(["--out", &f, "--report", &fr]);
        let applied = json_f64(&run(&args)?, "cpm")?;
        check(opt.to_bits() == applied.to_bits(), || {
            format!("{mode}: fuse-apply cpm {applied} differs from fuse-optimize cpm {opt}")
        })?;
        optimized.push(opt);
    }
    let comp = run(&[
        "fuse-optimize", "--labels", "comp/labels.csv", "--scores", "comp/expert_a.csv", "--scores",
        "comp/expert_b.csv", "--mode", "mcwf", "--seed", "1", "--out", "comp_mcwf.json",
    ])?;
    check(json_f64(&comp, "cpm")? == 1.0, || format!("complementary MCWF: {comp}"))?;
    let same = run(&["evaluate", "--labels", "scen/labels.csv", "--predictions", "scen/labels.csv"])?;
    check(json_f64(&same, "cpm")? == 1.0, || format!("identical files: {same}"))?;
    run(&["evaluate", "--labels", "scen/labels.csv", "--scores", "fused_mcwf.csv", "--report", "eval.json"])?;
    run(&[
        "pool", "--features", "clip_features.csv", "--labels", "clip_labels.csv", "--length-s", "4",
        "--overlap-fraction", "0.4", "--out", "pooled.csv",
    ])?;
    run(&[
        "kelm-train", "--pooled", "pooled.csv", "--kernel", "poly", "--standardize", "--log-weight-r", "0.47",
        "--out", "model.json",
    ])?;
    run(&["kelm-predict", "--model", "model.json", "--pooled", "pooled.csv", "--video-id", "clip", "--out", "kelm.csv"])?;
    Ok(outs)
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for (name, jobs) in [("a", 1), ("b", 8), ("c", 8), ("d", 1)] {
        let dir = root.path().join(name);
        fs::create_dir(&dir).map_err(|e| e.to_string())?;
        let stdout = run_pipeline(&dir, jobs)?;
        runs.push((name, jobs, stdout, snapshot(&dir)));
    }
    let (_, _, ref_out, ref_files) = &runs[0];
    for (name, jobs, stdout, files) in &runs[1..] {
        check(stdout == ref_out, || format!("run {name} (--jobs {jobs}): summaries differ"))?;
        check(files.keys().eq(ref_files.keys()), || format!("run {name}: different file sets"))?;
        for (path, bytes) in files {
            check(bytes == &ref_files[path], || format!("run {name} (--jobs {jobs}): {path} differs"))?;
        }
    }
    Ok(format!(
        "{} commands x 4 runs (--jobs 1/8), {} files bit-identical",
        ref_out.len(),
        ref_files.len()
    ))
}

// ---------------------------------------------------------------- 9

fn nearest_oracle(len: usize, source: f64, target: f64) -> Vec<usize> {
    let out_len = (len as f64 * target / source - 1e-9).ceil() as usize;
    (0..out_len)
        .map(|n| {
            let t = n as f64 / target;
            let dist = |i: usize| -> f64 { (i as f64 / source - t).abs() };
            let best = (0..len).map(dist).fold(f64::INFINITY, f64::min);
            (0..len).find(|&i| dist(i) <= best + 1e-9).unwrap()
        })
        .collect()
}

fn resampling() -> Outcome {
    let idx = resample_indices(300, 30.0, 5.0).map_err(|e| e.to_string())?;
    check(idx == (0..50).map(|n| 6 * n).collect::<Vec<_>>(), || format!("30->5 Hz gives {:?}", &idx[..8]))?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rates = [5.0, 7.5, 10.0, 15.0, 25.0, 29.97, 30.0, 48.0];
    let mut cases = 0;
    for _ in 0..500 {
        let len = rng.random_range(1..400);
        let pick = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.6) {
                rates[rng.random_range(0..rates.len())]
            } else {
                rng.random_range(1.0..60.0)
            }
        };
        let (source, target) = (pick(&mut rng), pick(&mut rng));
        let identity = resample_indices(len, source, source).map_err(|e| e.to_string())?;
        check(identity == (0..len).collect::<Vec<_>>(), || format!("{source} Hz -> itself is not the identity"))?;
        let got = resample_indices(len, source, target).map_err(|e| e.to_string())?;
        let expected = nearest_oracle(len, source, target);
        check(got == expected, || format!("{len} frames {source} -> {target} Hz differs from oracle"))?;
        cases += 1;
    }
    for (len, target) in [(450, 5.0), (451, 5.0), (7, 5.0), (300, 30.0)] {
        let got = resample_indices(len, 7.5, target).map_err(|e| e.to_string())?;
        check(got == nearest_oracle(len, 7.5, target), || format!("7.5 -> {target} Hz, {len} frames"))?;
        cases += 1;
    }
    Ok(format!("{{0,6,12,..}} at 30->5 Hz; identity; {cases} random cases match oracle"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("metric identity", metric_identity),
        ("fusion dominance", fusion_dominance),
        ("MCWF contains SWF", mcwf_contains_swf),
        ("complementary-experts separation", complementary_separation),
        ("pooling correctness", pooling_correctness),
        ("windowing counts", windowing_counts),
        ("KELM oracle equivalence", kelm_oracle),
        ("CLI determinism", determinism),
        ("label resampling", resampling),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
