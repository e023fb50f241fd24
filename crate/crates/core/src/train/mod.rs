//! Optimization: Adam, reduce-on-plateau scheduling, the epoch loop and checkpoints.

mod adam;
mod checkpoint;
mod plateau;
mod trainer;

pub use adam::{AdamHyper, AdamState, BETA1, BETA2, EPSILON};
pub use checkpoint::Checkpoint;
pub use plateau::PlateauState;
pub use trainer::{
    batch_gradients, epoch_rng, evaluate_loss, fit, fit_from, history_csv, train_epoch, write_history_csv,
    BandDataset, EpochRecord, TrainConfig, TrainRun, Trainer,
};
