//! Small message-passing models, reverse-mode differentiation, ego-network
//! sampling and the training loop.

mod checkpoint;
mod experiment;
mod model;
mod optim;
mod sample;
mod tape;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use experiment::{run_setting, sweep_settings, ExperimentRow, Setting};
pub use model::{argmax_rows, forward, Arch, Forward, ForwardOptions, ModelConfig, ModelParams};
pub use optim::AdamW;
pub use sample::{sample_blocks, sample_ego, EgoBatch, EgoBlock};
pub use tape::{softmax, softmax_jacobian, Gradients, SparseOp, Tape, Var};
pub use train::{
    accuracy, evaluate, predict, train, write_history, HistoryRow, TrainConfig, TrainOutcome,
};
