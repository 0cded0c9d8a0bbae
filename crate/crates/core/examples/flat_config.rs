//! The flat key-value recipe format: write a preset out, read it back, and
//! parse a hand-written recipe.
//!
//! ```bash
//! cargo run -p thresholdnet --example flat_config
//! ```

use thresholdnet::arch::{build_network, ArchConfig, Preset};

fn main() {
    let cfg = Preset::ThresholdnetV1.config();
    let text = cfg.to_flat();
    println!("# thresholdnet_v1 in the flat format\n{text}");
    assert_eq!(ArchConfig::from_flat(&text).unwrap(), cfg);

    let custom = "\
# a 3-block recipe mixing the pruning rules
input_height = 64
input_width = 64
classes = 10
stem = conv3x3/2p1:16, conv3x3/1p1:32, maxpool3x3/2p1
block1.depth = 6
block1.mode = threshold-bc:4
block1.growth = 8
block2.depth = 8
block2.mode = threshold-ab:4
block2.growth = 8
block3.depth = 4
block3.mode = harmonic
block3.growth = 8
block3.pool = false
";
    let parsed = ArchConfig::from_flat(custom).unwrap();
    let graph = build_network(&parsed).unwrap();
    println!("# custom recipe builds {} nodes; stages:", graph.nodes.len());
    for stage in &graph.stages {
        println!("#   {:<20} {}", stage.name, stage.output_shape);
    }
}
