//! The pipeline stages. Each reads its inputs below the output directory and
//! writes its artifacts plus `manifests/<stage>.json`.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use jumpcast_core::dataset::io::{read_dataset, write_dataset};
use jumpcast_core::dataset::{minute_classes, plan_samples, split, SplitSet, StreamingExtractor};
use jumpcast_core::eval::{direction_labels, direction_report, random_baseline, rolling_grid, EvalReport};
use jumpcast_core::features::io::{read_features, write_features};
use jumpcast_core::features::slot_names;
use jumpcast_core::jump::{detect_jumps, read_labels, write_labels};
use jumpcast_core::lob::io::{read_snapshots, write_event, write_event_header, write_snapshot, EventReader};
use jumpcast_core::lob::OrderEvent;
use jumpcast_core::models::{three_class_variant, train, Model, OutputMode};
use jumpcast_core::nn::checkpoint::{read_checkpoint, write_checkpoint};
use jumpcast_core::synth::{write_truth, ScenarioStream};
use jumpcast_core::{ModelSpec, Sample, N_SLOTS};
use serde::Serialize;

use crate::artifacts::{day_file, display_rel, file_sha256, Manifest, OutputRecord, StageOutputs};
use crate::config::PipelineConfig;
use crate::session::{minute_mids, FeatureDays, SessionReplay};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Synth,
    Replay,
    Detect,
    Features,
    Dataset,
    Train,
    Eval,
    Attention,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Synth,
        Stage::Replay,
        Stage::Detect,
        Stage::Features,
        Stage::Dataset,
        Stage::Train,
        Stage::Eval,
        Stage::Attention,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Replay => "replay",
            Stage::Detect => "detect",
            Stage::Features => "features",
            Stage::Dataset => "dataset",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Attention => "attention",
        }
    }
}

/// Runs one stage. On failure every file it wrote is removed and the error
/// names the stage.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig, out_dir: &Path) -> Result<()> {
    let mut outs = StageOutputs::new(out_dir);
    let result = cfg.validate().and_then(|_| {
        match stage {
            Stage::Synth => synth(cfg, &mut outs),
            Stage::Replay => replay(cfg, &mut outs),
            Stage::Detect => detect(cfg, &mut outs),
            Stage::Features => features(cfg, &mut outs),
            Stage::Dataset => dataset(cfg, &mut outs),
            Stage::Train => train_sets(cfg, &mut outs),
            Stage::Eval => eval(cfg, &mut outs),
            Stage::Attention => attention(cfg, &mut outs),
        }?;
        write_manifest(stage, cfg, &mut outs)
    });
    result.map_err(|e| {
        outs.rollback();
        e.context(format!("stage {}", stage.name()))
    })
}

/// Every stage in order. Attention is skipped for models without an
/// attention layer.
pub fn run_pipeline(cfg: &PipelineConfig, out_dir: &Path) -> Result<()> {
    for stage in Stage::ALL {
        if stage == Stage::Attention && !has_attention(cfg) {
            continue;
        }
        run_stage(stage, cfg, out_dir)?;
    }
    Ok(())
}

fn has_attention(cfg: &PipelineConfig) -> bool {
    cfg.model.architecture == jumpcast_core::Architecture::CnnLstmA
}

fn write_manifest(stage: Stage, cfg: &PipelineConfig, outs: &mut StageOutputs) -> Result<()> {
    let mut outputs = Vec::new();
    for rel in outs.written() {
        outputs.push(OutputRecord { path: display_rel(rel), sha256: file_sha256(&outs.path(rel))? });
    }
    let m = Manifest {
        stage: stage.name().into(),
        seed: cfg.seed,
        config_sha256: cfg.hash(),
        jumpcast_version: env!("CARGO_PKG_VERSION").into(),
        outputs,
    };
    let rel = cfg.paths.manifests.join(format!("{}.json", stage.name()));
    let text = serde_json::to_string_pretty(&m)? + "\n";
    outs.write_bytes(&rel, text.as_bytes())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("missing input {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn read_events(path: &Path) -> Result<Vec<OrderEvent>> {
    let reader = EventReader::new(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    reader.collect::<Result<Vec<_>, _>>().with_context(|| format!("reading {}", path.display()))
}

fn input(outs: &StageOutputs, rel: &Path) -> PathBuf {
    outs.path(rel)
}

fn synth(cfg: &PipelineConfig, outs: &mut StageOutputs) -> Result<()> {
    let mut stream = ScenarioStream::new(&cfg.scenario)?;
    let mut day = 0;
    while let Some(events) = stream.next_day() {
        outs.write(&day_file(&cfg.paths.events, day, "txt"), |w| {
            write_event_header(w, cfg.scenario.tick_size)?;
            for e in &events {
                write_event(w, e)?;
            }
            Ok(())
        })?;
        day += 1;
    }
    let jumps = stream.jumps().to_vec();
    outs.write(&cfg.paths.truth, |w| Ok(write_truth(w, &jumps)?))
}

fn replay(cfg: &PipelineConfig, outs: &mut StageOutputs) -> Result<()> {
    let sc = &cfg.scenario;
    let mut session = SessionReplay::new(sc.seconds_per_day, sc.days);
    for day in 0..sc.days {
        let events = read_events(&input(outs, &day_file(&cfg.paths.events, day, "txt")))?;
        let snaps = session.next_day(&events)?;
        outs.write(&day_file(&cfg.paths.snapshots, day, "bin"), |w| {
            for s in &snaps {
                write_snapshot(w, s)?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn read_day_snapshots(cfg: &PipelineConfig, outs: &StageOutputs, day: u32) -> Result<Vec<jumpcast_core::BookSnapshot>> {
    let path = input(outs, &day_file(&cfg.paths.snapshots, day, "bin"));
    let snaps = read_snapshots(&mut open(&path)?).with_context(|| format!("reading {}", path.display()))?;
    if snaps.len() != cfg.scenario.seconds_per_day as usize {
        bail!("{} holds {} snapshots, expected {}", path.display(), snaps.len(), cfg.scenario.seconds_per_day);
    }
    Ok(snaps)
}

fn detect(cfg: &PipelineConfig, outs: &mut StageOutputs) -> Result<()> {
    let mut prices = Vec::new();
    for day in 0..cfg.scenario.days {
        prices.extend(minute_mids(&read_day_snapshots(cfg, outs, day)?, day)?);
    }
    let labels = detect_jumps(&prices, &cfg.detector)?;
    outs.write(&cfg.paths.labels, |w| Ok(write_labels(w, &labels)?))
}

fn features(cfg: &PipelineConfig, outs: &mut StageOutputs) -> Result<()> {
    let mut days = FeatureDays::new(&cfg.features);
    for day in 0..cfg.scenario.days {
        let snaps = read_day_snapshots(cfg, outs, day)?;
        let events = read_events(&input(outs, &day_file(&cfg.paths.events, day, "txt")))?;
        let m = days.next_day(&snaps, &events)?;
        outs.write(&day_file(&cfg.paths.features, day, "bin"), |w| Ok(write_features(w, &m, slot_names())?))?;
    }
    Ok(())
}

fn read_jump_labels(cfg: &PipelineConfig, outs: &StageOutputs) -> Result<Vec<jumpcast_core::JumpLabel>> {
    let path = input(outs, &cfg.paths.labels);
    read_labels(open(&path)?).with_context(|| format!("reading {}", path.display()))
}

fn dataset(cfg: &PipelineConfig, outs: &mut StageOutputs) -> Result<()> {
    let labels = read_jump_labels(cfg, outs)?;
    let classes = minute_classes(&labels, cfg.dataset.n_classes);
    let n_frames = cfg.scenario.total_seconds();
    let plan = plan_samples(&classes, n_frames, 0, cfg.minutes_per_day(), &cfg.dataset)?;
    let mut extractor = StreamingExtractor::new(plan, N_SLOTS, cfg.dataset.clone());
    let mut samples = Vec::new();
    for day in 0..cfg.scenario.days {
        if extractor.remaining() == 0 {
            break;
        }
        let path = input(outs, &day_file(&cfg.paths.features, day, "bin"));
        let (m, _) = read_features(&mut open(&path)?).with_context(|| format!("reading {}", path.display()))?;
        if m.n_slots() != N_SLOTS || m.n_frames() != cfg.scenario.seconds_per_day as usize {
            bail!("{} has shape {}x{}", path.display(), m.n_frames(), m.n_slots());
        }
        samples.extend(extractor.push(&m)?);
    }
    if samples.is_empty() {
        bail!("no samples: the stream is too short for {}-step windows", cfg.dataset.steps);
    }
    outs.write(&cfg.paths.dataset, |w| Ok(write_dataset(w, &samples, cfg.dataset.n_classes)?))
}

/// The model spec a config trains.
pub fn model_spec(cfg: &PipelineConfig) -> ModelSpec {
    let spec = cfg.model.architecture.full_spec(cfg.dataset.steps);
    match cfg.model.output {
        OutputMode::Binary => spec,
        OutputMode::ThreeClass => three_class_variant(&spec),
    }
}

fn load_dataset(cfg: &PipelineConfig, outs: &StageOutputs) -> Result<(Vec<Sample>, Vec<SplitSet>)> {
    let path = input(outs, &cfg.paths.dataset);
    let (header, samples) = read_dataset(&mut open(&path)?).with_context(|| format!("reading {}", path.display()))?;
    let want = cfg.model.output.n_classes() as u8;
    if header.n_classes != want {
        bail!("dataset has {} classes, the model predicts {want}", header.n_classes);
    }
    let metas: Vec<_> = samples.iter().map(|s| s.meta).collect();
    let sets = split(&metas, &cfg.split, cfg.scenario.days)?;
    if sets.is_empty() {
        bail!("no split set fits in {} days", cfg.scenario.days);
    }
    Ok((samples, sets))
}

fn checkpoint_path(cfg: &PipelineConfig, set: usize) -> PathBuf {
    cfg.paths.checkpoints.join(format!("set_{set}.ckpt"))
}

fn pick<'a>(samples: &'a [Sample], idx: &[usize]) -> Vec<&'a Sample> {
    idx.iter().map(|&i| &samples[i]).collect()
}

fn train_sets(cfg: &PipelineConfig, outs: &mut StageOutputs) -> Result<()> {
    let (samples, sets) = load_dataset(cfg, outs)?;
    let spec = model_spec(cfg);
    for set in &sets {
        let mut model = Model::new(spec.clone(), cfg.seed.wrapping_add(set.index as u64))?;
        let tc = jumpcast_core::TrainConfig { seed: cfg.train.seed.wrapping_add(set.index as u64), ..cfg.train.clone() };
        let history = train(&mut model, &pick(&samples, &set.train), &pick(&samples, &set.validation), &tc)
            .with_context(|| format!("set {}", set.index))?;
        outs.write(&checkpoint_path(cfg, set.index), |w| Ok(write_checkpoint(w, &model.net, spec.arch_hash())?))?;
        let text = serde_json::to_string_pretty(&history)? + "\n";
        outs.write_bytes(&cfg.paths.checkpoints.join(format!("set_{}.history.json", set.index)), text.as_bytes())?;
    }
    Ok(())
}

fn load_model(cfg: &PipelineConfig, outs: &StageOutputs, set: usize) -> Result<Model> {
    let spec = model_spec(cfg);
    let hash = spec.arch_hash();
    let mut model = Model::new(spec, 0)?;
    let path = input(outs, &checkpoint_path(cfg, set));
    read_checkpoint(&mut open(&path)?, &mut model.net, hash).with_context(|| format!("reading {}", path.display()))?;
    Ok(model)
}

#[derive(Debug, Serialize)]
struct Baselines {
    random: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    direction: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    direction_random: Option<EvalReport>,
}

fn eval(cfg: &PipelineConfig, outs: &mut StageOutputs) -> Result<()> {
    let (samples, sets) = load_dataset(cfg, outs)?;
    let stocks = vec![cfg.stock.clone()];
    let indices: Vec<usize> = sets.iter().map(|s| s.index).collect();
    let mut classes: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    let grid = rolling_grid(&indices, &stocks, |set, _| {
        let s = &sets[set];
        if s.test.is_empty() {
            return Err("no test samples".into());
        }
        let mut model = load_model(cfg, outs, set).map_err(|e| format!("{e:#}"))?;
        let test = pick(&samples, &s.test);
        let pred = test.iter().map(|x| model.predict_class(x)).collect::<Result<Vec<u8>, _>>().map_err(|e| e.to_string())?;
        let labels: Vec<u8> = test.iter().map(|x| x.label).collect();
        classes.push((pred.clone(), labels.clone()));
        // The grid scores jump versus no jump for either output mode.
        Ok((pred.iter().map(|&p| (p != 0) as u8).collect(), labels.iter().map(|&l| (l != 0) as u8).collect()))
    });
    if !grid.is_complete() {
        let missing: Vec<String> = grid.errors.iter().map(|e| e.to_string()).collect();
        bail!("incomplete grid: {}", missing.join("; "));
    }
    let (pred, labels): (Vec<u8>, Vec<u8>) =
        classes.iter().flat_map(|(p, l)| p.iter().copied().zip(l.iter().copied())).unzip();
    let binary: Vec<u8> = labels.iter().map(|&l| (l != 0) as u8).collect();
    let trials = cfg.eval.baseline_trials;
    let random = random_baseline(&binary, cfg.seed, trials)?;
    let (direction, direction_random) = if cfg.model.output == OutputMode::ThreeClass {
        let dir = direction_report(&pred, &labels).ok();
        let dl = direction_labels(&pred, &labels);
        let dr = if dl.is_empty() { None } else { Some(random_baseline(&dl, cfg.seed, trials)?) };
        (dir, dr)
    } else {
        (None, None)
    };
    let reports = &cfg.paths.reports;
    outs.write_bytes(&reports.join("grid.csv"), grid.to_csv().as_bytes())?;
    let mut table = grid.to_table();
    table.push_str(&format!("Random baseline F1 {:.2} over {trials} coin-flip classifiers\n", random.f1));
    outs.write_bytes(&reports.join("grid.txt"), table.as_bytes())?;
    let text = serde_json::to_string_pretty(&Baselines { random, direction, direction_random })? + "\n";
    outs.write_bytes(&reports.join("baseline.json"), text.as_bytes())
}

fn attention(cfg: &PipelineConfig, outs: &mut StageOutputs) -> Result<()> {
    let (samples, sets) = load_dataset(cfg, outs)?;
    let set = sets.last().expect("load_dataset checks for sets");
    let mut model = load_model(cfg, outs, set.index)?;
    let test = pick(&samples, &set.test);
    if test.is_empty() {
        bail!("set {} has no test samples", set.index);
    }
    let mut mean = Vec::new();
    let mut names = Vec::new();
    for s in &test {
        let r = model.export_attention(s)?;
        if mean.is_empty() {
            mean = vec![0.0; r.weights.len()];
            names = r.names;
        }
        for (m, w) in mean.iter_mut().zip(&r.weights) {
            *m += w / test.len() as f64;
        }
    }
    let report = jumpcast_core::models::AttentionReport { weights: mean, names };
    let mut text = format!("# mean attention over {} test samples of set {}\nrank,feature,weight\n", test.len(), set.index);
    for (rank, k) in report.top(cfg.eval.attention_top).into_iter().enumerate() {
        text.push_str(&format!("{},{},{:.6}\n", rank + 1, report.names[k], report.weights[k]));
    }
    outs.write_bytes(&cfg.paths.reports.join("attention.txt"), text.as_bytes())
}
