//! Generate the three reference connection tables and verify them against
//! the embedded fixtures.
//!
//! ```bash
//! cargo run -p thresholdnet --example topology_tables
//! ```

use thresholdnet::tables::{RowOutcome, ALL_TABLES};
use thresholdnet::topology::{build_block_topology, ConnectionMode};

fn main() {
    for table in ALL_TABLES {
        let topo = build_block_topology(table.layers, table.mode).unwrap();
        println!("{} ({}, {} layers)", table.name, table.mode, table.layers);
        for (i, row) in topo.to_table().lines().enumerate() {
            println!("  layer {:>2}: {row}", i + 1);
        }
        println!("  connections: {}", topo.connection_count());

        let report = table.verify();
        println!(
            "  verification: {}/{} rows match the printed table",
            report.matched,
            report.rows.len()
        );
        for (layer, outcome) in &report.rows {
            if let RowOutcome::DocumentedDeviation { printed, generated } = outcome {
                println!(
                    "  note: layer {layer} prints '{printed}' but the canonical rule gives '{generated}' (documented deviation)"
                );
            }
        }
        println!();
    }

    // Pruning strength is monotone in the threshold.
    print!("threshold-bc totals at 16 layers:");
    for t in [4, 8, 12, 16] {
        let topo = build_block_topology(16, ConnectionMode::ThresholdBc { threshold: t }).unwrap();
        print!(" t={t} -> {}", topo.connection_count());
    }
    println!(" (dense = 136)");
}
