//! Attention-based autoencoder over network representations: one encoder
//! and one decoder per depth, trained so that decoded networks compute the
//! same function as their sources.

mod checkpoint;
mod loss;
mod model;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use loss::{
    argmin, branch_losses, combine, functional_loss, functional_loss_with, BranchLosses, LossConfig, MinObjective,
};
pub use model::{
    interleave, parameter_shapes, sample_rows, AutoencoderConfig, AutoencoderModel, Bound, ParamSet, Precision,
};
pub use train::{
    default_sampler, mean_min_loss, sample_batch, train_autoencoder, EpochMetrics, NetworkBatch, TrainObserver,
    TrainReport, TrainSpec,
};
