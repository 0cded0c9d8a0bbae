//! Side-by-side cost comparison: the dense baseline against the pruned
//! threshold recipe, and how pruning moves each metric.
//!
//! ```bash
//! cargo run -p thresholdnet --example compare_presets
//! ```

use thresholdnet::arch::{build_network, Preset};
use thresholdnet::cost::{compare_reports, format_count, summarize};

fn main() {
    let a = Preset::Densenet121;
    let b = Preset::ThresholdnetV1;
    let report_a = summarize(&build_network(&a.config()).unwrap()).unwrap();
    let report_b = summarize(&build_network(&b.config()).unwrap()).unwrap();

    println!("{:<10} {:>14} {:>16} {:>9}", "metric", a.name(), b.name(), "relative");
    for metric in compare_reports(&report_a, &report_b).metrics {
        println!(
            "{:<10} {:>14} {:>16} {:>8.1}%",
            metric.metric,
            format_count(metric.a),
            format_count(metric.b),
            100.0 * metric.relative
        );
    }

    let traffic_ratio =
        report_b.totals.traffic_elements as f64 / report_a.totals.traffic_elements as f64;
    println!(
        "\nthe pruned recipe moves {:.0}% of the baseline's convolution traffic",
        100.0 * traffic_ratio
    );
}
