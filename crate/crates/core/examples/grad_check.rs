//! Certify the engine's analytic gradients against central finite
//! differences, op kind by op kind.
//!
//! ```bash
//! cargo run -p thresholdnet --example grad_check
//! ```

use thresholdnet::arch::{build_network, toy, ConvSpec};
use thresholdnet::engine::{branching_micrograph, grad_check, unit_chain_micrograph};

fn main() {
    // Two micro-graphs cover every op: conv, batchnorm, relu, max pool,
    // global average pool, concat, fully-connected.
    for (name, graph) in
        [("unit chain", unit_chain_micrograph()), ("branching concat", branching_micrograph())]
    {
        let report = grad_check(&graph, 1e-4, 7).unwrap();
        println!("{name:<18} {report}");
    }

    // A shrunken two-block threshold net: every one of its weights gets the
    // two-forward-pass treatment, so keep it tiny.
    let mut cfg = toy();
    cfg.input_height = 8;
    cfg.input_width = 8;
    cfg.stem_convs = vec![ConvSpec { kernel: 3, stride: 1, padding: 1, out_channels: 4 }];
    cfg.blocks[0].growth_rate = 2;
    cfg.blocks[1].growth_rate = 2;
    cfg.classifier_classes = 4;
    let graph = build_network(&cfg).unwrap();
    let report = grad_check(&graph, 1e-4, 7).unwrap();
    println!("{:<18} {report}", "tiny threshold net");
}
