//! Parameter / MAC / FLOP / traffic accounting for the built-in presets,
//! with deltas against the published reference rows.
//!
//! ```bash
//! cargo run -p thresholdnet --example cost_summary
//! ```

use thresholdnet::arch::{build_network, Preset};
use thresholdnet::cost::{format_count, reference_cost, relative_to_reference, summarize};

fn main() {
    println!(
        "{:<16} {:>10} {:>10} {:>10} {:>12}  {}",
        "network", "#Params", "#MAdds", "#FLOPS", "traffic", "vs published"
    );
    for preset in Preset::ALL {
        let graph = build_network(&preset.config()).unwrap();
        let report = summarize(&graph).unwrap();
        let reference = reference_cost(preset);
        println!(
            "{:<16} {:>10} {:>10} {:>10} {:>12}  params {:+.1}%, madds {:+.1}%",
            preset.name(),
            format_count(report.totals.params),
            format_count(report.totals.macs),
            format_count(report.totals.flops),
            format!("{} elem", format_count(report.totals.traffic_elements)),
            100.0 * relative_to_reference(report.totals.params, reference.params),
            100.0 * relative_to_reference(report.totals.macs, reference.madds),
        );
    }

    // The densenet121 row is the oracle; the threshold rows depend on
    // under-specified recipe details (see the sensitivity_sweep example).
    let graph = build_network(&Preset::Densenet121.config()).unwrap();
    let report = summarize(&graph).unwrap();
    println!("\nheaviest nodes of densenet121 by MACs:");
    let mut nodes = report.per_node.clone();
    nodes.sort_by_key(|n| std::cmp::Reverse(n.macs));
    for node in nodes.iter().take(5) {
        println!("  {:<28} {:>10} MACs, {:>8} params", node.name, format_count(node.macs), node.params);
    }
}
