//! Reference tensor engine: instantiates a graph, runs forward and backward
//! in double precision, and certifies itself with finite differences.

pub mod checkpoint;
mod gradcheck;
mod model;
mod tensor;
mod train;

pub use gradcheck::{
    branching_micrograph, compare_gradients, grad_check, numeric_gradients, relative_error,
    unit_chain_micrograph, GradCheckReport, WorstCase, FD_EPSILON,
};
pub use model::{
    cross_entropy, init_weights, logits_node, BnState, ModelInstance, BN_EPSILON, BN_MOMENTUM,
};
pub use tensor::Tensor;
pub use train::{synthetic_dataset, trace_to_csv, train_toy};

use crate::arch::NodeId;
use std::fmt;

/// Engine failure modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngineError {
    /// Shape mismatch or numeric fault while running a node.
    Execution { node: Option<NodeId>, message: String },
    /// A training label is outside `0..classes`.
    InvalidLabel { index: usize, label: usize, classes: usize },
    /// The graph has no fully-connected classifier to read logits from.
    MissingClassifier,
    /// Training produced a non-finite loss at the given step.
    Diverged { step: usize },
    /// Checkpoint I/O or format failure.
    Checkpoint(String),
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::Execution { node: Some(id), message } => {
                write!(f, "execution failed at node {id}: {message}")
            }
            EngineError::Execution { node: None, message } => {
                write!(f, "execution failed: {message}")
            }
            EngineError::InvalidLabel { index, label, classes } => {
                write!(f, "label {label} at position {index} is outside 0..{classes}")
            }
            EngineError::MissingClassifier => {
                write!(f, "graph has no fully-connected classifier")
            }
            EngineError::Diverged { step } => write!(f, "loss became non-finite at step {step}"),
            EngineError::Checkpoint(msg) => write!(f, "checkpoint: {msg}"),
        }
    }
}

impl std::error::Error for EngineError {}
