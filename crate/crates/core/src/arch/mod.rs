//! Architecture recipes and the operator graphs built from them.

mod config;
mod dot;
mod graph;

pub use config::{
    toy, ArchConfig, BlockConfig, ConfigError, ConvSpec, PoolSpec, Preset, ReductionRule,
    UnitOrder,
};
pub use dot::export_dot;
pub use graph::{
    block_output_members, build_network, layer_out_channels, validate_graph, GraphError,
    NetworkGraph, Node, NodeId, OpKind, Shape, Stage, Violation,
};
