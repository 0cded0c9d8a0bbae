//! Cost sensitivity of the threshold-net recipes to their open parameters.
//!
//! The published cost rows for the two threshold-net presets cannot be
//! pinned down analytically: the even-layer multiplier, the reduction
//! semantics, the stem width and the per-block mode assignment are all
//! unstated. This sweep quantifies how far each reading lands from the
//! published figures instead of pretending one reading is exact.

use crate::arch::{build_network, Preset, ReductionRule};
use crate::cost::{format_count, reference_cost, summarize};

pub const MULTIPLIER_GRID: [f64; 4] = [1.0, 1.6, 1.7, 1.9];
pub const REDUCTION_GRID: [ReductionRule; 2] = [ReductionRule::KeepTheta, ReductionRule::DropTheta];

/// One sweep cell.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub preset: Preset,
    pub multiplier: f64,
    pub reduction_rule: ReductionRule,
    pub params: u64,
    pub macs: u64,
    /// Relative deviation of the computed values from the published row.
    pub params_vs_reference: f64,
    pub macs_vs_reference: f64,
}

/// Evaluates the full grid for one preset.
pub fn sweep_preset(preset: Preset) -> Vec<SweepPoint> {
    let reference = reference_cost(preset);
    let mut points = Vec::new();
    for &multiplier in &MULTIPLIER_GRID {
        for &rule in &REDUCTION_GRID {
            let mut cfg = preset.config();
            for block in &mut cfg.blocks {
                block.even_multiplier = multiplier;
            }
            cfg.reduction_rule = rule;
            let report = summarize(&build_network(&cfg).expect("preset variants build"))
                .expect("preset variants validate");
            points.push(SweepPoint {
                preset,
                multiplier,
                reduction_rule: rule,
                params: report.totals.params,
                macs: report.totals.macs,
                params_vs_reference: (report.totals.params as f64 - reference.params)
                    / reference.params,
                macs_vs_reference: (report.totals.macs as f64 - reference.madds) / reference.madds,
            });
        }
    }
    points
}

/// Renders the committed markdown report. Deterministic.
pub fn sensitivity_report() -> String {
    let mut out = String::new();
    out.push_str("# Cost sensitivity of the threshold-net recipes\n\n");
    out.push_str(
        "The published cost rows for `thresholdnet_v1` (15.32M params, 6.90G MAdds) and\n\
         `thresholdnet_v2` (17.14M params, 8.12G MAdds) depend on recipe details that are\n\
         not stated: the even-layer channel multiplier `m`, whether a transition keeps\n\
         `theta` or `1 - theta` of its input channels, the stem width, and the per-block\n\
         connection-mode assignment. They are therefore reproduction *targets*, not\n\
         oracles. This report sweeps `m` over {1.0, 1.6, 1.7, 1.9} and both reduction\n\
         readings, holding everything else at the preset defaults (stem 32/64 channels,\n\
         dense blocks 1-3 with theta 0.5, harmonic blocks 4-5 with theta 0.1, growth 32,\n\
         224x224 input). Deviations are relative to the published row.\n\n\
         Regenerate with `cargo run -p thresholdnet --example sensitivity_sweep`.\n",
    );

    for preset in [Preset::ThresholdnetV1, Preset::ThresholdnetV2] {
        let reference = reference_cost(preset);
        out.push_str(&format!(
            "\n## {} (published: {} params, {} MAdds)\n\n",
            preset.name(),
            format_count(reference.params as u64),
            format_count(reference.madds as u64),
        ));
        out.push_str("| m | reduction | params | MAdds | params dev | MAdds dev |\n");
        out.push_str("|-----|------------|---------|--------|-----------|-----------|\n");
        for point in sweep_preset(preset) {
            out.push_str(&format!(
                "| {:.1} | {} | {} | {} | {:+.1}% | {:+.1}% |\n",
                point.multiplier,
                point.reduction_rule,
                format_count(point.params),
                format_count(point.macs),
                100.0 * point.params_vs_reference,
                100.0 * point.macs_vs_reference,
            ));
        }
    }

    out.push_str(
        "\n## Reading\n\n\
         No cell reaches the published rows. The literal `keep-theta` reading starves\n\
         the harmonic tail (theta 0.1 keeps a tenth of the concatenated channels);\n\
         `drop-theta` keeps nine tenths there and adds one to two million parameters,\n\
         but even the most generous cell (`drop-theta`, m = 1.9) sits at roughly half\n\
         the published parameter count, with MAdds showing the same gap. Within one\n\
         reading, `m` moves the totals by only a few percent. The remaining distance\n\
         must come from recipe details outside this sweep's axes - most plausibly a\n\
         wider stem or a different per-block mode and width assignment - which is why\n\
         the published threshold-net rows are treated as reproduction targets, not\n\
         oracles. The dense-net baseline, which has no open parameters, lands within\n\
         2% of its published row under the same counting conventions.\n",
    );
    out
}
