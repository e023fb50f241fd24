use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Tensor4, Var};
use crate::error::{invalid, Error, Result};
use crate::hsdata::PatchPair;
use crate::model::{cube_to_tensor, forward, forward_graph, init_weights, ModelConfig, ModelWeights};

use super::adam::{AdamHyper, AdamState};
use super::checkpoint::Checkpoint;
use super::plateau::PlateauState;

/// Training hyperparameters, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub factor: f64,
    pub rel_threshold: f64,
    pub min_lr: f64,
    /// Training stops once the learning rate falls below this value.
    pub stop_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Seed for weight initialization.
    pub init_seed: u64,
    /// Seed for the per-epoch batch shuffle.
    pub shuffle_seed: u64,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let hyper = AdamHyper::default();
        TrainConfig {
            lr: 1e-3,
            batch_size: 16,
            max_epochs: 50,
            patience: 3,
            factor: 0.1,
            rel_threshold: 1e-4,
            min_lr: 1e-7,
            stop_lr: 1e-6,
            beta1: hyper.beta1,
            beta2: hyper.beta2,
            eps: hyper.eps,
            init_seed: 0,
            shuffle_seed: 0,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(invalid("batch_size must be >= 1"));
        }
        if !(self.lr > 0.0) || !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(invalid(format!("bad lr {} or factor {}", self.lr, self.factor)));
        }
        if self.patience == 0 {
            return Err(invalid("patience must be >= 1"));
        }
        Ok(())
    }

    pub fn adam_hyper(&self) -> AdamHyper {
        AdamHyper { beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }

    pub fn plateau(&self) -> PlateauState {
        PlateauState {
            factor: self.factor,
            patience: self.patience,
            rel_threshold: self.rel_threshold,
            min_lr: self.min_lr,
            ..PlateauState::new(self.lr)
        }
    }
}

/// Patch pairs of one band, already split.
#[derive(Debug, Clone, Default)]
pub struct BandDataset {
    pub band_id: u16,
    pub train: Vec<PatchPair>,
    pub val: Vec<PatchPair>,
    pub test: Vec<PatchPair>,
}

impl BandDataset {
    pub fn check_splits(&self) -> Result<()> {
        for (name, split) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            if split.is_empty() {
                return Err(invalid(format!("{name} split is empty")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

/// Summary of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainRun {
    pub band_id: u16,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub history: Vec<EpochRecord>,
    pub best_val_loss: Option<f64>,
    pub best_epoch: Option<usize>,
    pub best_checkpoint: Option<PathBuf>,
    pub last_checkpoint: Option<PathBuf>,
    pub wall_clock_secs: f64,
    #[serde(skip)]
    pub best_weights: Option<ModelWeights>,
}

impl TrainRun {
    pub fn history_csv(&self) -> String {
        history_csv(&self.history)
    }
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,lr\n");
    for r in history {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_loss, r.val_loss, r.lr));
    }
    out
}

fn stack(patches: &[&PatchPair]) -> Result<(Tensor4<f32>, Tensor4<f32>)> {
    let lr: Vec<_> = patches.iter().map(|p| &p.lr).collect();
    let hr: Vec<_> = patches.iter().map(|p| &p.hr).collect();
    Ok((cube_to_tensor(&lr)?, cube_to_tensor(&hr)?))
}

/// Loss and parameter gradients for one batch.
pub fn batch_gradients(weights: &ModelWeights, lr: &Tensor4<f32>, hr: &Tensor4<f32>) -> Result<(f64, Vec<Tensor4<f32>>)> {
    let mut tape = Tape::new();
    let params: Vec<Var> = weights.tensors().into_iter().map(|t| tape.param(t.clone())).collect();
    let pred = forward_graph(&mut tape, &weights.config, &params, lr)?;
    let target = tape.constant(hr.clone());
    let loss = tape.mse_loss(pred, target)?;
    let value = tape.value(loss).item() as f64;
    let mut grads = tape.backward(loss)?;
    let g = params
        .iter()
        .zip(weights.tensors())
        .map(|(&v, t)| grads.take(v).unwrap_or_else(|| Tensor4::zeros(t.dims())))
        .collect();
    Ok((value, g))
}

/// One pass over `patches` in an order shuffled by `rng`. Returns the mean batch loss.
pub fn train_epoch(
    weights: &mut ModelWeights,
    adam: &mut AdamState,
    patches: &[PatchPair],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if patches.is_empty() {
        return Err(invalid("no training patches"));
    }
    if batch_size == 0 {
        return Err(invalid("batch_size must be >= 1"));
    }
    let mut order: Vec<usize> = (0..patches.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    let mut n_batches = 0;
    for (batch, idx) in order.chunks(batch_size).enumerate() {
        let refs: Vec<&PatchPair> = idx.iter().map(|&i| &patches[i]).collect();
        let (lr, hr) = stack(&refs)?;
        let (loss, grads) = batch_gradients(weights, &lr, &hr)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { batch });
        }
        adam.step(&mut weights.tensors_mut(), &grads)?;
        total += loss;
        n_batches += 1;
    }
    Ok(total / n_batches as f64)
}

/// Mean squared error of the network over `patches`, averaged per element.
pub fn evaluate_loss(weights: &ModelWeights, patches: &[PatchPair], batch_size: usize) -> Result<f64> {
    if patches.is_empty() {
        return Err(invalid("no patches to evaluate"));
    }
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for chunk in patches.chunks(batch_size.max(1)) {
        let refs: Vec<&PatchPair> = chunk.iter().collect();
        let (lr, hr) = stack(&refs)?;
        let pred = forward(weights, &lr)?;
        sum += pred
            .data()
            .iter()
            .zip(hr.data())
            .map(|(&p, &t)| {
                let d = p as f64 - t as f64;
                d * d
            })
            .sum::<f64>();
        count += hr.len();
    }
    Ok(sum / count as f64)
}

/// Shuffle generator for a given epoch; derived from the seed so that a
/// resumed run sees the same order as an uninterrupted one.
pub fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Mutable training state; everything needed to resume.
#[derive(Debug, Clone, PartialEq)]
pub struct Trainer {
    pub weights: ModelWeights,
    pub adam: AdamState,
    pub plateau: PlateauState,
    /// Index of the next epoch to run.
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
    pub best_val_loss: Option<f64>,
    pub best_epoch: Option<usize>,
}

impl Trainer {
    pub fn new(model: &ModelConfig, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let weights = init_weights(model, cfg.init_seed)?;
        let sizes: Vec<usize> = weights.tensors().iter().map(|t| t.len()).collect();
        Ok(Trainer {
            adam: AdamState::new(&sizes, cfg.lr, cfg.adam_hyper()),
            plateau: cfg.plateau(),
            weights,
            epoch: 0,
            history: Vec::new(),
            best_val_loss: None,
            best_epoch: None,
        })
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Self {
        ckpt.into_trainer()
    }

    /// Train, validate and update the schedule for one epoch.
    /// Returns `true` when the validation loss is the best so far.
    pub fn run_epoch(&mut self, data: &BandDataset, cfg: &TrainConfig) -> Result<bool> {
        self.adam.lr = self.plateau.current_lr;
        let lr_used = self.plateau.current_lr;
        let mut rng = epoch_rng(cfg.shuffle_seed, self.epoch);
        let train_loss = train_epoch(&mut self.weights, &mut self.adam, &data.train, cfg.batch_size, &mut rng)?;
        let val_loss = evaluate_loss(&self.weights, &data.val, cfg.batch_size)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss { batch: 0 });
        }
        self.plateau.step(val_loss)?;
        self.history.push(EpochRecord { epoch: self.epoch, train_loss, val_loss, lr: lr_used });
        self.epoch += 1;
        let best = self.best_val_loss.is_none_or(|b| val_loss < b);
        if best {
            self.best_val_loss = Some(val_loss);
            self.best_epoch = Some(self.epoch - 1);
        }
        Ok(best)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::from_trainer(self)
    }
}

/// Full training loop with reduce-on-plateau scheduling and best-model checkpoints.
pub fn fit(data: &BandDataset, model: &ModelConfig, cfg: &TrainConfig) -> Result<TrainRun> {
    let trainer = Trainer::new(model, cfg)?;
    fit_from(trainer, data, cfg)
}

/// Continues training from an existing state (fresh or resumed).
pub fn fit_from(mut trainer: Trainer, data: &BandDataset, cfg: &TrainConfig) -> Result<TrainRun> {
    cfg.validate()?;
    data.check_splits()?;
    let start = Instant::now();
    let model = trainer.weights.config;
    if let Some(first) = data.train.first() {
        trainer.weights.check_channels(first.lr.channels())?;
    }

    let paths = cfg.checkpoint_dir.as_deref().map(|dir| {
        (dir.join("best"), dir.join("last"))
    });
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut best_weights = trainer.weights.clone();
    let mut best_ckpt: Option<PathBuf> = None;

    if trainer.history.is_empty() {
        if let Some((best, _)) = &paths {
            trainer.checkpoint().save(best)?;
            best_ckpt = Some(best.clone());
        }
    } else if let Some((best, _)) = &paths {
        if Checkpoint::exists(best) {
            best_weights = Checkpoint::load(best)?.weights;
            best_ckpt = Some(best.clone());
        }
    }

    while trainer.epoch < cfg.max_epochs && trainer.plateau.current_lr >= cfg.stop_lr {
        let improved = trainer.run_epoch(data, cfg)?;
        let rec = trainer.history.last().unwrap();
        log::info!(
            "epoch {:>3}  train {:.6e}  val {:.6e}  lr {:.1e}{}",
            rec.epoch,
            rec.train_loss,
            rec.val_loss,
            rec.lr,
            if improved { "  *" } else { "" }
        );
        if improved {
            best_weights = trainer.weights.clone();
        }
        if let Some((best, last)) = &paths {
            let ckpt = trainer.checkpoint();
            if improved {
                ckpt.save(best)?;
                best_ckpt = Some(best.clone());
            }
            ckpt.save(last)?;
        }
    }

    Ok(TrainRun {
        band_id: data.band_id,
        model,
        train: cfg.clone(),
        history: trainer.history.clone(),
        best_val_loss: trainer.best_val_loss,
        best_epoch: trainer.best_epoch,
        best_checkpoint: best_ckpt.map(|p| Checkpoint::weights_path(&p)),
        last_checkpoint: paths.filter(|_| !trainer.history.is_empty()).map(|(_, l)| Checkpoint::weights_path(&l)),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        best_weights: Some(best_weights),
    })
}

pub fn write_history_csv(history: &[EpochRecord], path: &Path) -> Result<()> {
    std::fs::write(path, history_csv(history)).map_err(|e| Error::io(path, e))
}
