//! Graph-attention influence regressor.
//!
//! Stacked attention layers use GATv2 scoring over each node's neighbourhood
//! plus itself, with ELU between layers; a two-layer head maps the final
//! embedding to an influence fraction through a sigmoid. Gradients are
//! computed by hand-written backpropagation.

mod model;
mod params;
mod train;

pub use model::{attention_weights, backward, forward, forward_cached, ForwardCache, Neighborhoods, LEAKY_SLOPE};
pub use params::{AttentionHead, ModelDims, PredictorParams};
pub use train::{
    finetune, fraction_labels, loss, loss_and_gradients, predict_influence, pretrain, LabeledGraph, Stage,
    TrainConfig, TrainReport,
};
