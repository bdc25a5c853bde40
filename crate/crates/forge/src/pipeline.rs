//! The batch workflows behind each command: generation, seed sweeps,
//! evaluation and the per-bin accuracy study.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use illusion_forge_core::analysis::{aggregate_seeds, band_rows, polyfit_with, Fit, SeedSummary};
use illusion_forge_core::dataset::{mix, split, DatasetSpec, SampleRecord, Source, Split, StrengthSampling};
use illusion_forge_core::fusion::{batch_loss, encode_label, FusionMode, LossReport, Strategy};
use illusion_forge_core::trainer::{binary_mode, evaluate, train, Metrics, Mlp, Predictor, Samples};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::build::{build, load_class_folders, with_pool, write_toy_targets, BuildReport};
use crate::config::{Axis, RunConfig};
use crate::manifest::{read_manifest, MANIFEST_FILE};
use crate::params::{load_params, save_params};
use crate::plot::{export_plot_data, svg_fit_plot};
use crate::preprocess::{load_samples_from, LabelView};

pub const RUN_FILE: &str = "run.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const PARAMS_FILE: &str = "params.bin";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const POINTS_FILE: &str = "points.json";
pub const FIT_JSON: &str = "fit.json";
pub const FIT_CSV: &str = "fit.csv";
pub const FIT_SVG: &str = "fit.svg";

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Builds `cfg.dataset` into `cfg.out` and persists the resolved config there.
pub fn generate(cfg: &RunConfig) -> Result<BuildReport> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let report = build(&cfg.dataset, &cfg.out, cfg.jobs)?;
    cfg.persist(&cfg.out)?;
    Ok(report)
}

/// Target records and the directory their paths are relative to.
pub struct TargetSet {
    pub root: PathBuf,
    pub records: Vec<SampleRecord>,
    pub n_classes: usize,
}

/// Generates the toy task under `<out>/target` or indexes `target.root`.
pub fn prepare_target(cfg: &RunConfig) -> Result<Option<TargetSet>> {
    let t = &cfg.target;
    if let Some(task) = t.toy {
        let root = cfg.out.join("target");
        let records = write_toy_targets(task, t.per_class, t.seed, &root, cfg.jobs)?;
        return Ok(Some(TargetSet { root, records, n_classes: task.n_classes() }));
    }
    if let Some(root) = &t.root {
        let records = load_class_folders(root)?;
        let n_classes = records.iter().map(|r| r.label as usize + 1).max().unwrap_or(0);
        return Ok(Some(TargetSet { root: root.clone(), records, n_classes }));
    }
    Ok(None)
}

/// Loaded train and test samples with the label space they are encoded in.
pub struct TrainData {
    pub mode: FusionMode,
    pub train: Samples,
    pub test: Samples,
}

fn illusion_records(cfg: &RunConfig) -> Result<(PathBuf, Vec<SampleRecord>)> {
    let Some(root) = &cfg.data else { bail!("no dataset directory: set `data` or pass --data") };
    let records = read_manifest(&root.join(MANIFEST_FILE))?;
    Ok((root.clone(), records.into_iter().filter(|r| r.source == Source::Illusion).collect()))
}

/// Assembles the training and test sets the configured strategy needs.
///
/// Without target data the run is a binary illusion classifier and the
/// strategy must be `base`. With target data, `base` uses only the target
/// set; the fusion strategies train on the target train split mixed with
/// illusion train samples per `mix`, and test on the target test split plus
/// every illusion test sample.
pub fn load_data(cfg: &RunConfig) -> Result<TrainData> {
    let spec = cfg.model.preproc();
    let strategy = cfg.train.mode;
    let Some(target) = prepare_target(cfg)? else {
        if strategy != Strategy::Base {
            bail!("mode {} needs target data: set [target] root or toy", strategy.name());
        }
        let (root, records) = illusion_records(cfg)?;
        let (tr, te): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.split == Split::Train);
        let root_of = |_: &SampleRecord| root.clone();
        let train = load_samples_from(&root_of, &tr, spec, LabelView::Binary, cfg.jobs)?;
        let test = load_samples_from(&root_of, &te, spec, LabelView::Binary, cfg.jobs)?;
        return Ok(TrainData { mode: binary_mode(), train, test });
    };

    let mode = FusionMode::new(strategy, target.n_classes);
    let (t_train, t_test) = split(&target.records, cfg.target.train_fraction, cfg.target.seed)?;
    let (train_recs, test_recs, ill_root) = if strategy == Strategy::Base {
        (t_train, t_test, PathBuf::new())
    } else {
        let (root, records) = illusion_records(cfg)?;
        let (i_train, i_test): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.split == Split::Train);
        let train = mix(&t_train, &i_train, &cfg.mix, cfg.train.seed)?;
        let mut test = t_test;
        test.extend(i_test);
        (train, test, root)
    };
    let root_of = |r: &SampleRecord| if r.source == Source::Target { target.root.clone() } else { ill_root.clone() };
    let train = load_samples_from(&root_of, &train_recs, spec, LabelView::Fusion, cfg.jobs)?;
    let test = load_samples_from(&root_of, &test_recs, spec, LabelView::Fusion, cfg.jobs)?;
    Ok(TrainData { mode, train, test })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub metrics: Metrics,
    pub dir: PathBuf,
}

/// Mean, standard deviation and best value of each headline metric over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mode: FusionMode,
    pub seeds: Vec<u64>,
    pub top1: Option<SeedSummary>,
    pub top5: Option<SeedSummary>,
    pub illusion_accuracy: Option<SeedSummary>,
}

fn summarize(results: &[SeedResult], pick: impl Fn(&Metrics) -> Option<f64>) -> Result<Option<SeedSummary>> {
    let values: Option<Vec<f64>> = results.iter().map(|r| pick(&r.metrics)).collect();
    Ok(match values {
        Some(v) if !v.is_empty() => Some(aggregate_seeds(&v)?),
        _ => None,
    })
}

/// One training run per seed under `<out>/seed_<s>/`, plus the aggregate.
pub fn train_seeds(cfg: &RunConfig) -> Result<(Vec<SeedResult>, Aggregate)> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    let seeds = cfg.train.seed_list();
    let results = with_pool(cfg.jobs, || {
        seeds
            .par_iter()
            .map(|&seed| -> Result<SeedResult> {
                let config = cfg.model.mlp(data.mode, seed);
                let clock = Instant::now();
                let (net, mut run) = train(&config, &data.train, None)?;
                run.wall_clock_secs = Some(clock.elapsed().as_secs_f64());
                let metrics = evaluate(&net, &data.test, data.mode)?;
                let dir = cfg.out.join(format!("seed_{seed}"));
                write_json(&dir.join(RUN_FILE), &run)?;
                write_json(&dir.join(METRICS_FILE), &metrics)?;
                save_params(&dir.join(PARAMS_FILE), &net)?;
                Ok(SeedResult { seed, metrics, dir })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let aggregate = Aggregate {
        mode: data.mode,
        seeds,
        top1: summarize(&results, |m| m.top1)?,
        top5: summarize(&results, |m| m.top5)?,
        illusion_accuracy: summarize(&results, |m| m.illusion_accuracy)?,
    };
    write_json(&cfg.out.join(AGGREGATE_FILE), &aggregate)?;
    cfg.persist(&cfg.out)?;
    Ok((results, aggregate))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: FusionMode,
    pub trained: bool,
    pub metrics: Metrics,
    /// Mean loss over the test split.
    pub loss: LossReport,
    /// Share of the most frequent label among illusion test samples.
    pub illusion_majority_share: Option<f64>,
}

/// Mean fusion loss of `net` over every sample.
pub fn mean_loss(net: &impl Predictor, data: &Samples, mode: FusionMode) -> Result<LossReport> {
    let batch = (0..data.len())
        .map(|i| Ok((net.predict(data.row(i)), encode_label(mode, data.origins[i])?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(batch_loss(mode, &batch)?.mean)
}

/// Scores saved parameters, or a freshly initialized network when `params`
/// is `None`, on the test split. Writes `<out>/metrics.json`.
pub fn eval(cfg: &RunConfig, params: Option<&Path>) -> Result<EvalReport> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    let net = match params {
        Some(p) => load_params(p)?,
        None => Mlp::new(&cfg.model.mlp(data.mode, cfg.train.seed))?,
    };
    if net.input_dim() != data.test.dim || net.mode != data.mode {
        bail!("parameters do not match the configured resolution or mode");
    }
    let metrics = evaluate(&net, &data.test, data.mode)?;
    let report = EvalReport {
        mode: data.mode,
        trained: params.is_some(),
        loss: mean_loss(&net, &data.test, data.mode)?,
        illusion_majority_share: majority_share(&data.test, data.mode),
        metrics,
    };
    write_json(&cfg.out.join(METRICS_FILE), &report)?;
    cfg.persist(&cfg.out)?;
    Ok(report)
}

/// Accuracy of always answering the more frequent illusion label.
pub fn majority_share(data: &Samples, mode: FusionMode) -> Option<f64> {
    use illusion_forge_core::fusion::SampleOrigin;
    let labels: Vec<bool> = data
        .origins
        .iter()
        .filter_map(|o| match (*o, mode == binary_mode()) {
            (SampleOrigin::Illusion(b), _) => Some(b),
            (SampleOrigin::Target(k), true) => Some(k == 1),
            _ => None,
        })
        .collect();
    if labels.is_empty() {
        return None;
    }
    let pos = labels.iter().filter(|&&b| b).count();
    Some(pos.max(labels.len() - pos) as f64 / labels.len() as f64)
}

/// One (bin, seed) measurement of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub bin: usize,
    pub x: f64,
    pub seed: u64,
    pub accuracy: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoints {
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
}

/// The dataset of bin `value`: the swept parameter pinned, everything else
/// from `cfg.dataset`. The master seed is shared, so bins differ only in the
/// swept parameter.
pub fn bin_spec(cfg: &RunConfig, value: f64) -> DatasetSpec {
    let mut spec = DatasetSpec { pairs_per_family: cfg.sweep.pairs_per_family, ..cfg.dataset.clone() };
    match cfg.fit.x {
        Axis::Strength => spec.strength = StrengthSampling::Uniform { lo: value, hi: value },
        Axis::PerceptionDiff => {
            spec.diff_lo = value;
            spec.diff_hi = value;
        }
    }
    spec
}

/// Builds every bin under `<out>/bin_<k>`, trains a binary classifier per
/// (bin, seed) and records held-out illusion accuracy, then fits. No wall
/// clock is recorded, so two runs produce identical trees.
pub fn sweep(cfg: &RunConfig) -> Result<(SweepPoints, FitReport)> {
    cfg.validate()?;
    let spec = cfg.model.preproc();
    let mut sets = Vec::with_capacity(cfg.sweep.bins.len());
    for (k, &value) in cfg.sweep.bins.iter().enumerate() {
        let dir = cfg.out.join(format!("bin_{k}"));
        std::fs::create_dir_all(&dir)?;
        let report = build(&bin_spec(cfg, value), &dir, cfg.jobs)?;
        let (tr, te): (Vec<_>, Vec<_>) = report.records.into_iter().partition(|r| r.split == Split::Train);
        let root_of = |_: &SampleRecord| dir.clone();
        let train = load_samples_from(&root_of, &tr, spec, LabelView::Binary, cfg.jobs)?;
        let test = load_samples_from(&root_of, &te, spec, LabelView::Binary, cfg.jobs)?;
        sets.push((train, test));
    }
    let jobs: Vec<(usize, u64)> =
        (0..sets.len()).flat_map(|k| cfg.train.seed_list().into_iter().map(move |s| (k, s))).collect();
    let points = with_pool(cfg.jobs, || {
        jobs.par_iter()
            .map(|&(k, seed)| -> Result<SweepPoint> {
                let (train_set, test_set) = &sets[k];
                let (net, _) = train(&cfg.model.mlp(binary_mode(), seed), train_set, None)?;
                let m = evaluate(&net, test_set, binary_mode())?;
                Ok(SweepPoint {
                    bin: k,
                    x: cfg.sweep.bins[k],
                    seed,
                    accuracy: m.binary_accuracy().unwrap_or(0.0),
                    n_test: m.n_samples,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let points = SweepPoints { axis: cfg.fit.x, points };
    write_json(&cfg.out.join(POINTS_FILE), &points)?;
    let report = fit_points(cfg, &points, &cfg.out)?;
    cfg.persist(&cfg.out)?;
    Ok((points, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub axis: Axis,
    pub confidence: f64,
    pub fit: Fit,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Fits accuracy against the swept axis and writes JSON, CSV and SVG.
pub fn fit_points(cfg: &RunConfig, points: &SweepPoints, out: &Path) -> Result<FitReport> {
    if points.axis != cfg.fit.x {
        bail!("points were swept over {} but the fit asks for {}", points.axis.name(), cfg.fit.x.name());
    }
    let x: Vec<f64> = points.points.iter().map(|p| p.x).collect();
    let y: Vec<f64> = points.points.iter().map(|p| p.accuracy).collect();
    let fit = polyfit_with(&x, &y, cfg.fit.degree, cfg.fit.seed, cfg.fit.permutations)?;
    let rows = band_rows(&fit, &x, &y, cfg.fit.confidence);
    std::fs::create_dir_all(out)?;
    export_plot_data(&rows, &out.join(FIT_CSV))?;
    let title = format!("accuracy vs {} (degree {})", cfg.fit.x.name(), cfg.fit.degree);
    std::fs::write(out.join(FIT_SVG), svg_fit_plot(&rows, &title, cfg.fit.x.name(), "illusion accuracy"))?;
    let report = FitReport { axis: cfg.fit.x, confidence: cfg.fit.confidence, fit, x, y };
    write_json(&out.join(FIT_JSON), &report)?;
    Ok(report)
}

/// The `fit` command: reads `<data>/points.json`, writes into `out`.
pub fn fit(cfg: &RunConfig) -> Result<FitReport> {
    cfg.validate()?;
    let Some(data) = &cfg.data else { bail!("no sweep directory: set `data` or pass --data") };
    let points: SweepPoints = read_json(&data.join(POINTS_FILE))?;
    let report = fit_points(cfg, &points, &cfg.out)?;
    cfg.persist(&cfg.out)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use illusion_forge_core::fusion::SampleOrigin;

    #[test]
    fn majority_share_of_forty_sixty() {
        let mut s = Samples::new(1);
        for i in 0..10 {
            s.push(&[0.0], SampleOrigin::Illusion(i < 4));
        }
        for k in 0..5 {
            s.push(&[0.0], SampleOrigin::Target(k));
        }
        let mode = FusionMode::new(Strategy::Mix, 5);
        assert_eq!(majority_share(&s, mode), Some(0.6));
    }

    #[test]
    fn bin_spec_pins_only_the_swept_axis() {
        let mut cfg = RunConfig::default();
        let s = bin_spec(&cfg, 0.3);
        assert_eq!(s.strength, StrengthSampling::Uniform { lo: 0.3, hi: 0.3 });
        assert_eq!((s.diff_lo, s.diff_hi), (cfg.dataset.diff_lo, cfg.dataset.diff_hi));
        cfg.fit.x = Axis::PerceptionDiff;
        let d = bin_spec(&cfg, 0.7);
        assert_eq!((d.diff_lo, d.diff_hi), (0.7, 0.7));
        assert_eq!(d.strength, cfg.dataset.strength);
    }

    #[test]
    fn fusion_mode_without_target_is_rejected() {
        let mut cfg = RunConfig::default();
        cfg.train.mode = Strategy::Mix;
        let err = load_data(&cfg).err().unwrap().to_string();
        assert!(err.contains("needs target data"), "{err}");
    }
}
