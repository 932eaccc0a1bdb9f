use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Model, ModelError, OutputMode};
use crate::dataset::Sample;
use crate::nn::loss::{bce, categorical};
use crate::nn::{Adam, AdamConfig, Mode, NnError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    /// Train on consecutive blocks of this many days, oldest first, carrying
    /// weights from block to block. `None` trains on everything at once and
    /// is written as `0` in config files.
    #[serde(with = "zero_is_none")]
    pub curriculum_days: Option<u32>,
    pub learning_rate: f64,
    /// Weight each class by `N / (C * N_c)` in the loss.
    pub balance_classes: bool,
}

mod zero_is_none {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<u32>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(v.unwrap_or(0))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u32>, D::Error> {
        Ok(Some(u32::deserialize(d)?).filter(|&v| v != 0))
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            seed: 0,
            patience: 10,
            curriculum_days: Some(50),
            learning_rate: 1e-3,
            balance_classes: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.patience == 0 {
            return bad("patience must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.curriculum_days == Some(0) {
            return bad("curriculum_days must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub block: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Index into `epochs` of the snapshot kept at the end of each block.
    pub best: Vec<usize>,
}

/// Loss weight per class so that every class carries equal total weight.
/// Classes absent from `labels` get weight 0.
pub fn balanced_class_weights(labels: &[u8], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l as usize] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { labels.len() as f64 / (present as f64 * c as f64) })
        .collect()
}

/// Consecutive day ranges of width `width` covering `days`, oldest first;
/// ranges that contain no day are dropped.
pub fn curriculum_blocks(days: &[u32], width: u32) -> Vec<Range<u32>> {
    let (Some(&lo), Some(&hi)) = (days.iter().min(), days.iter().max()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut start = lo;
    while start <= hi {
        let r = start..start.saturating_add(width);
        if days.iter().any(|d| r.contains(d)) {
            out.push(r.clone());
        }
        start = r.end;
    }
    out
}

struct Objective {
    mode: OutputMode,
    weights: Vec<f64>,
}

impl Objective {
    fn check_label(&self, label: u8) -> Result<(), ModelError> {
        if (label as usize) < self.mode.n_classes() {
            Ok(())
        } else {
            Err(ModelError::InvalidConfig(format!("label {label} out of range for {:?} output", self.mode)))
        }
    }

    /// Weighted loss and the gradient on the output layer's pre-activation.
    fn loss_and_grad(&self, out: &[f64], label: u8) -> (f64, f64, Vec<f64>) {
        let w = self.weights[label as usize];
        match self.mode {
            OutputMode::Binary => {
                let y = label as f64;
                (w, w * bce(y, out[0]), vec![w * (out[0] - y)])
            }
            OutputMode::ThreeClass => {
                let mut t = vec![0.0; out.len()];
                t[label as usize] = 1.0;
                let dz = out.iter().zip(&t).map(|(q, y)| w * (q - y)).collect();
                (w, w * categorical(&t, out), dz)
            }
        }
    }
}

fn diverged(epoch: usize, e: ModelError) -> ModelError {
    match e {
        ModelError::Nn(NnError::NonFinite(what)) => ModelError::DivergenceDetected { epoch, reason: what },
        other => other,
    }
}

/// Weighted mean loss in evaluation mode.
fn mean_loss(model: &mut Model, set: &[&Sample], obj: &Objective, epoch: usize) -> Result<f64, ModelError> {
    let (mut total, mut weight) = (0.0, 0.0);
    for s in set {
        let out = model.predict(s).map_err(|e| diverged(epoch, e))?;
        let (w, l, _) = obj.loss_and_grad(&out, s.label);
        total += l;
        weight += w;
    }
    Ok(if weight > 0.0 { total / weight } else { 0.0 })
}

/// Trains `model` in place with Adam and early stopping on validation loss,
/// leaving the best snapshot loaded. Calling it again on a trained model
/// warm-starts from the current weights.
///
/// With an empty validation set the training loss drives model selection.
pub fn train(
    model: &mut Model,
    train_set: &[&Sample],
    validation: &[&Sample],
    cfg: &TrainConfig,
) -> Result<TrainHistory, ModelError> {
    cfg.validate()?;
    for s in train_set.iter().chain(validation) {
        model.input(s)?;
    }
    let n_classes = model.spec.output.n_classes();
    let labels: Vec<u8> = train_set.iter().map(|s| s.label).collect();
    let weights = if cfg.balance_classes {
        balanced_class_weights(&labels, n_classes)
    } else {
        vec![1.0; n_classes]
    };
    let obj = Objective { mode: model.spec.output, weights };
    for s in train_set.iter().chain(validation) {
        obj.check_label(s.label)?;
    }
    let mut history = TrainHistory::default();
    if cfg.epochs == 0 || train_set.is_empty() {
        return Ok(history);
    }

    let blocks: Vec<Vec<usize>> = match cfg.curriculum_days {
        Some(w) => {
            let days: Vec<u32> = train_set.iter().map(|s| s.meta.day).collect();
            curriculum_blocks(&days, w)
                .into_iter()
                .map(|r| (0..train_set.len()).filter(|&i| r.contains(&train_set[i].meta.day)).collect())
                .collect()
        }
        None => vec![(0..train_set.len()).collect()],
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    model.net.reseed_dropout(cfg.seed ^ 0x5EED_D409);
    let sizes: Vec<usize> = model.net.params().iter().map(|p| p.len()).collect();
    let adam_cfg = AdamConfig { lr: cfg.learning_rate, ..Default::default() };

    for (b, block) in blocks.iter().enumerate() {
        let mut opt = Adam::new(adam_cfg, &sizes);
        let day_range = block.iter().map(|&i| train_set[i].meta.day);
        let (lo, hi) = (day_range.clone().min().unwrap(), day_range.max().unwrap());
        let mut val: Vec<&Sample> =
            validation.iter().copied().filter(|s| (lo..=hi).contains(&s.meta.day)).collect();
        if val.is_empty() {
            val = validation.to_vec();
        }

        let mut order = block.clone();
        let mut best: Option<(f64, usize, Vec<Vec<f64>>)> = None;
        let mut stale = 0;
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut rng);
            let (mut total, mut weight) = (0.0, 0.0);
            for batch in order.chunks(cfg.batch_size) {
                model.net.zero_grad();
                let scale = 1.0 / batch.len() as f64;
                for &i in batch {
                    let s = train_set[i];
                    let x = model.input(s)?;
                    let out = model.net.forward(&x, Mode::Train).map_err(|e| diverged(epoch, e.into()))?;
                    let (w, l, mut dz) = obj.loss_and_grad(&out.data, s.label);
                    total += l;
                    weight += w;
                    dz.iter_mut().for_each(|g| *g *= scale);
                    model.net.backward_from_logits(&dz)?;
                }
                opt.step(&mut model.net.params_mut())?;
            }
            let train_loss = if weight > 0.0 { total / weight } else { 0.0 };
            if !train_loss.is_finite() {
                return Err(ModelError::DivergenceDetected { epoch, reason: "training loss is not finite".into() });
            }
            let val_loss = if val.is_empty() { train_loss } else { mean_loss(model, &val, &obj, epoch)? };
            history.epochs.push(EpochStats { block: b, epoch, train_loss, val_loss });
            let idx = history.epochs.len() - 1;
            if best.as_ref().map_or(true, |(l, _, _)| val_loss < *l) {
                best = Some((val_loss, idx, model.net.param_values()));
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        }
        let (_, idx, values) = best.expect("at least one epoch ran");
        model.net.set_param_values(&values)?;
        history.best.push(idx);
    }
    Ok(history)
}
