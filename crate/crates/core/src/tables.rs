//! Embedded reference connection tables and their verification.
//!
//! Three published fixture tables describe a 16-layer block under the two
//! threshold rules: Table I (`threshold-ab:4`), Table II (`threshold-bc:8`)
//! and Table III (`threshold-bc:12`). They are embedded verbatim so the
//! generators can be diffed against them offline.
//!
//! Table I carries one documented deviation: its printed row for layer 6
//! reads `4-5`, while the power-of-two rule that reproduces every other
//! harmonic row yields `2-4-5`. The row is kept as printed and the
//! generator's form is recorded alongside it. The printed table also sums
//! to 39 connections while its accompanying text claims 38; the canonical
//! rule gives 40. All three figures are reported, none is asserted.

use crate::topology::{build_block_topology, row_to_string, ConnectionMode};

/// A printed row that disagrees with the canonical generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deviation {
    /// 1-based layer index of the row.
    pub layer: usize,
    /// The row as printed in the reference table.
    pub printed: &'static str,
    /// The row the canonical rule produces.
    pub canonical: &'static str,
    pub note: &'static str,
}

/// One embedded fixture table.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceTable {
    pub name: &'static str,
    pub layers: usize,
    pub mode: ConnectionMode,
    /// Rows exactly as printed, index 0 = layer 1.
    pub rows: [&'static str; 16],
    pub deviations: &'static [Deviation],
    /// Connection total claimed by the accompanying text, if any.
    pub claimed_total: Option<usize>,
}

pub const TABLE_I: ReferenceTable = ReferenceTable {
    name: "Table I",
    layers: 16,
    mode: ConnectionMode::ThresholdAb { threshold: 4 },
    rows: [
        "0",
        "0-1",
        "0-1-2",
        "0-1-2-3",
        "4",
        "4-5",
        "6",
        "0-4-6-7",
        "8",
        "2-6-8-9",
        "10",
        "4-8-10-11",
        "12",
        "6-10-12-13",
        "14",
        "0-8-12-14-15",
    ],
    deviations: &[Deviation {
        layer: 6,
        printed: "4-5",
        canonical: "2-4-5",
        note: "printed row omits the power-of-two offset 6-4=2 kept by every other even row",
    }],
    claimed_total: Some(38),
};

pub const TABLE_II: ReferenceTable = ReferenceTable {
    name: "Table II",
    layers: 16,
    mode: ConnectionMode::ThresholdBc { threshold: 8 },
    rows: [
        "0",
        "0-1",
        "0-1-2",
        "0-1-2-3",
        "0-1-2-3-4",
        "0-1-2-4-5",
        "0-1-2-5-6",
        "0-1-2-6-7",
        "8",
        "2-6-8-9",
        "10",
        "4-8-10-11",
        "12",
        "6-10-12-13",
        "14",
        "0-8-12-14-15",
    ],
    deviations: &[],
    claimed_total: Some(51),
};

pub const TABLE_III: ReferenceTable = ReferenceTable {
    name: "Table III",
    layers: 16,
    mode: ConnectionMode::ThresholdBc { threshold: 12 },
    rows: [
        "0",
        "0-1",
        "0-1-2",
        "0-1-2-3",
        "0-1-2-3-4",
        "0-1-2-3-4-5",
        "0-1-2-3-4-5-6",
        "0-1-2-3-5-6-7",
        "0-1-2-3-6-7-8",
        "0-1-2-3-7-8-9",
        "0-1-2-3-8-9-10",
        "0-1-2-3-9-10-11",
        "12",
        "6-10-12-13",
        "14",
        "0-8-12-14-15",
    ],
    deviations: &[],
    claimed_total: Some(74),
};

pub const ALL_TABLES: [&ReferenceTable; 3] = [&TABLE_I, &TABLE_II, &TABLE_III];

/// Outcome of one row comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowOutcome {
    Match,
    /// Generated row differs as documented and equals the recorded canonical form.
    DocumentedDeviation { printed: String, generated: String },
    /// Generated row differs and no deviation record explains it.
    Mismatch { printed: String, generated: String },
}

/// Verification result for one table.
#[derive(Debug, Clone)]
pub struct TableReport {
    pub name: &'static str,
    pub mode: ConnectionMode,
    pub rows: Vec<(usize, RowOutcome)>,
    pub matched: usize,
    pub documented_deviations: usize,
    pub unexpected_mismatches: usize,
    /// Sum of the printed rows' input-set sizes.
    pub printed_total: usize,
    /// Connection count of the generated topology.
    pub generated_total: usize,
    pub claimed_total: Option<usize>,
}

impl TableReport {
    pub fn passed(&self) -> bool {
        self.unexpected_mismatches == 0
    }
}

impl ReferenceTable {
    /// Sum of input-set sizes over the printed rows.
    pub fn printed_total(&self) -> usize {
        self.rows.iter().map(|r| r.split('-').count()).sum()
    }

    /// Regenerates the table and diffs it row by row against the print.
    pub fn verify(&self) -> TableReport {
        let topo = build_block_topology(self.layers, self.mode)
            .expect("embedded table parameters are valid");
        let mut rows = Vec::with_capacity(self.layers);
        let mut matched = 0;
        let mut documented = 0;
        let mut unexpected = 0;
        for (i, set) in topo.iter() {
            let generated = row_to_string(set);
            let printed = self.rows[i - 1];
            let outcome = if generated == printed {
                matched += 1;
                RowOutcome::Match
            } else if self
                .deviations
                .iter()
                .any(|d| d.layer == i && d.printed == printed && d.canonical == generated)
            {
                documented += 1;
                RowOutcome::DocumentedDeviation {
                    printed: printed.to_string(),
                    generated,
                }
            } else {
                unexpected += 1;
                RowOutcome::Mismatch { printed: printed.to_string(), generated }
            };
            rows.push((i, outcome));
        }
        TableReport {
            name: self.name,
            mode: self.mode,
            rows,
            matched,
            documented_deviations: documented,
            unexpected_mismatches: unexpected,
            printed_total: self.printed_total(),
            generated_total: topo.connection_count(),
            claimed_total: self.claimed_total,
        }
    }
}

/// Verifies all embedded tables.
pub fn verify_all() -> Vec<TableReport> {
    ALL_TABLES.iter().map(|t| t.verify()).collect()
}
