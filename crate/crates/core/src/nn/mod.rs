//! Policy/value network: a residual convolutional trunk, a fully
//! convolutional policy head over the move-channel stack, and a globally
//! pooled value head. Forward and backward passes are written out by hand.

mod checkpoint;
pub mod layers;
mod network;
mod optim;
pub mod real;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use network::{
    masked_softmax, LossBreakdown, NetDims, Network, NetworkConfig, Param, Prediction, Sample, VALUE_BOUND,
};
pub use optim::{Sgd, SgdConfig};
pub use real::Real;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid network configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid training target: {0}")]
    Target(String),
    #[error("non-finite gradient in {0}")]
    NonFinite(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("checkpoint does not match this game: {0}")]
    LayoutMismatch(String),
}

#[cfg(test)]
mod tests;
