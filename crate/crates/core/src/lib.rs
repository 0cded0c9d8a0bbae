//! Threshold-pruned dense CNN topologies: synthesis, verification and cost
//! analysis, numerically certified by a small reference tensor engine.
//!
//! Dense blocks connect every layer to all of its predecessors; pruned
//! variants thin those connections out. This crate implements the
//! threshold family of pruning rules — dense or sparse-window wiring below
//! a threshold layer, harmonic wiring above it — plus the dense, sparse
//! and harmonic baselines, and everything needed to reason about the
//! resulting networks:
//!
//! * [`topology`] — per-block connection-set generators for every rule,
//!   with embedded reference tables ([`tables`]) to diff against.
//! * [`arch`] — recipes ([`arch::ArchConfig`], three built-in presets) and
//!   the lowering to a concrete operator DAG with exact channel arithmetic
//!   and shape inference, exportable as JSON or Graphviz.
//! * [`cost`] — per-node and aggregate parameters, MACs, FLOPs and a
//!   convolution memory-traffic proxy.
//! * [`engine`] — a double-precision forward/backward executor that
//!   cross-validates the builder and cost model: analytic parameter totals
//!   equal allocated scalars, and every gradient is checked against
//!   central finite differences.
//! * [`sweep`] — sensitivity of the preset cost figures to their
//!   under-specified recipe parameters.
//!
//! The `examples/` directory holds one runnable example per capability;
//! the `thresholdnet` binary fronts the same functionality as subcommands.
//!
//! ```
//! use thresholdnet::topology::{build_block_topology, ConnectionMode};
//!
//! let block = build_block_topology(16, ConnectionMode::ThresholdBc { threshold: 8 }).unwrap();
//! assert_eq!(block.connection_count(), 51);
//! assert_eq!(block.inputs(10), &[2, 6, 8, 9]);
//! ```

pub mod arch;
pub mod cli;
pub mod cost;
pub mod engine;
pub mod sweep;
pub mod tables;
pub mod topology;
