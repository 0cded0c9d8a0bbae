//! Build a preset into a concrete operator graph, validate it, and walk the
//! stage shapes.
//!
//! ```bash
//! cargo run -p thresholdnet --example build_graph
//! ```

use thresholdnet::arch::{build_network, validate_graph, Preset};

fn main() {
    for preset in Preset::ALL {
        let cfg = preset.config();
        let graph = build_network(&cfg).expect("preset builds");
        let violations = validate_graph(&graph);
        assert!(violations.is_empty(), "{violations:?}");

        println!(
            "{}: {} nodes, {} weighted layers, input {}",
            preset.name(),
            graph.nodes.len(),
            graph.weighted_layer_count(),
            graph.input_shape
        );
        for stage in &graph.stages {
            println!("  {:<20} {}", stage.name, stage.output_shape);
        }
        println!();
    }
}
