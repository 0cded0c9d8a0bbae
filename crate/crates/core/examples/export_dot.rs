//! Render an architecture as Graphviz DOT on stdout.
//!
//! ```bash
//! cargo run -p thresholdnet --example export_dot > thresholdnet_v1.dot
//! dot -Tsvg thresholdnet_v1.dot -o thresholdnet_v1.svg
//! ```

use thresholdnet::arch::{export_dot, Preset};

fn main() {
    let preset = Preset::ThresholdnetV1;
    let dot = export_dot(&preset.config(), preset.name()).unwrap();
    print!("{dot}");
}
