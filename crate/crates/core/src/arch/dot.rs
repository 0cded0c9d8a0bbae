//! Graphviz export of a network recipe.
//!
//! Renders a unit-level view: one node per composite operator (stem convs,
//! in-block layers, transitions, classifier stages), one subgraph cluster
//! per block, and one edge per connection, labeled with the channel count
//! it carries. Output is built from sorted structures only, so identical
//! configs produce byte-identical files.

use crate::arch::config::{ArchConfig, UnitOrder};
use crate::arch::graph::{build_network, layer_out_channels, GraphError};
use crate::topology::build_block_topology;
use crate::arch::graph::block_output_members;
use std::fmt::Write;

/// Renders `cfg` as a DOT digraph named `name`.
pub fn export_dot(cfg: &ArchConfig, name: &str) -> Result<String, GraphError> {
    // Building the full graph first validates the recipe and resolves the
    // per-stage spatial sizes used in the labels.
    let graph = build_network(cfg)?;
    let spatial = |stage: &str| {
        graph.stage(stage).map(|s| (s.output_shape.height, s.output_shape.width))
    };

    let mut out = String::new();
    let id = sanitize(name);
    let push = |out: &mut String, line: &str| {
        out.push_str(line);
        out.push('\n');
    };

    push(&mut out, &format!("digraph {id} {{"));
    push(&mut out, "  rankdir=TB;");
    push(&mut out, "  node [shape=box, fontname=\"monospace\"];");
    push(
        &mut out,
        &format!(
            "  input [label=\"input {}x{}x{}\"];",
            cfg.input_channels, cfg.input_height, cfg.input_width
        ),
    );

    let mut prev = String::from("input");
    let mut prev_ch = cfg.input_channels;
    for (i, conv) in cfg.stem_convs.iter().enumerate() {
        let node = format!("stem_conv{}", i + 1);
        push(
            &mut out,
            &format!(
                "  {node} [label=\"conv {k}x{k}/{s} {c}ch\"];",
                k = conv.kernel,
                s = conv.stride,
                c = conv.out_channels
            ),
        );
        push(&mut out, &format!("  {prev} -> {node} [label=\"{prev_ch}\"];"));
        prev = node;
        prev_ch = conv.out_channels;
    }
    if let Some(pool) = &cfg.stem_pool {
        push(
            &mut out,
            &format!("  stem_pool [label=\"maxpool {k}x{k}/{s}\"];", k = pool.kernel, s = pool.stride),
        );
        push(&mut out, &format!("  {prev} -> stem_pool [label=\"{prev_ch}\"];"));
        prev = "stem_pool".into();
    }

    let last_block = cfg.blocks.len() - 1;
    for (bi, block) in cfg.blocks.iter().enumerate() {
        let bnum = bi + 1;
        let topo = build_block_topology(block.depth, block.mode).map_err(|e| GraphError {
            context: format!("block{bnum}"),
            message: e.to_string(),
        })?;
        let (h, w) = spatial(&format!("block{bnum}")).unwrap_or((0, 0));

        // Channels carried by each in-block producer; index 0 is the input.
        let mut channels = vec![prev_ch];
        for i in 1..=block.depth {
            channels.push(layer_out_channels(i, block.mode, block.growth_rate, block.even_multiplier));
        }

        push(&mut out, &format!("  subgraph cluster_block{bnum} {{"));
        push(
            &mut out,
            &format!("    label=\"block {bnum}: {} x{} @{h}x{w}\";", block.mode, block.depth),
        );
        push(&mut out, &format!("    b{bnum}_l0 [label=\"x0 {prev_ch}ch\"];"));
        for i in 1..=block.depth {
            push(
                &mut out,
                &format!("    b{bnum}_l{i} [label=\"x{i} conv3x3 {}ch\"];", channels[i]),
            );
        }
        for (i, inputs) in topo.iter() {
            for &j in inputs {
                push(
                    &mut out,
                    &format!("    b{bnum}_l{j} -> b{bnum}_l{i} [label=\"{}\"];", channels[j]),
                );
            }
        }
        push(&mut out, "  }");
        push(&mut out, &format!("  {prev} -> b{bnum}_l0 [label=\"{prev_ch}\"];"));

        let members = block_output_members(&topo, block.mode);
        let member_ch: usize = members.iter().map(|&m| channels[m]).sum();

        if bi < last_block {
            let out_ch = cfg.reduction_rule.apply(block.transition_reduction, member_ch);
            let node = format!("t{bnum}_conv");
            push(
                &mut out,
                &format!("  {node} [label=\"transition {bnum} conv1x1 {member_ch}->{out_ch}\"];"),
            );
            for &m in &members {
                push(&mut out, &format!("  b{bnum}_l{m} -> {node} [label=\"{}\"];", channels[m]));
            }
            prev = node;
            prev_ch = out_ch;
            if block.transition_pool {
                let pool = format!("t{bnum}_pool");
                push(&mut out, &format!("  {pool} [label=\"maxpool 2x2/2\"];"));
                push(&mut out, &format!("  {prev} -> {pool} [label=\"{prev_ch}\"];"));
                prev = pool;
            }
        } else {
            let pool_label = match cfg.unit_order {
                UnitOrder::BnReluConv => "bn-relu + global avg pool",
                UnitOrder::ConvBnRelu => "global avg pool",
            };
            push(&mut out, &format!("  classifier_pool [label=\"{pool_label} {member_ch}ch\"];"));
            for &m in &members {
                push(
                    &mut out,
                    &format!("  b{bnum}_l{m} -> classifier_pool [label=\"{}\"];", channels[m]),
                );
            }
            push(
                &mut out,
                &format!(
                    "  classifier_fc [label=\"fc {member_ch}->{}\"];",
                    cfg.classifier_classes
                ),
            );
            push(&mut out, &format!("  classifier_pool -> classifier_fc [label=\"{member_ch}\"];"));
            push(&mut out, "  classifier_softmax [label=\"softmax\"];");
            push(
                &mut out,
                &format!("  classifier_fc -> classifier_softmax [label=\"{}\"];", cfg.classifier_classes),
            );
        }
    }

    push(&mut out, "}");
    Ok(out)
}

fn sanitize(name: &str) -> String {
    let cleaned: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if cleaned.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        let mut s = String::from("g_");
        let _ = write!(s, "{cleaned}");
        s
    } else if cleaned.is_empty() {
        "network".into()
    } else {
        cleaned
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::config::{toy, BlockConfig, ConvSpec, Preset, ReductionRule};
    use crate::topology::ConnectionMode;

    fn single_dense_block() -> ArchConfig {
        ArchConfig {
            input_height: 8,
            input_width: 8,
            input_channels: 3,
            stem_convs: vec![ConvSpec { kernel: 3, stride: 1, padding: 1, out_channels: 8 }],
            stem_pool: None,
            blocks: vec![BlockConfig {
                depth: 4,
                mode: ConnectionMode::Dense,
                growth_rate: 4,
                even_multiplier: 1.7,
                transition_reduction: 0.5,
                transition_pool: false,
            }],
            classifier_classes: 4,
            unit_order: UnitOrder::ConvBnRelu,
            bottleneck: false,
            reduction_rule: ReductionRule::KeepTheta,
        }
    }

    #[test]
    fn dense_block_has_triangular_edge_count() {
        let dot = export_dot(&single_dense_block(), "test").unwrap();
        let intra = dot
            .lines()
            .filter(|l| {
                let l = l.trim_start();
                l.starts_with("b1_l") && l.contains("-> b1_l")
            })
            .count();
        assert_eq!(intra, 10); // 1+2+3+4
    }

    #[test]
    fn output_is_byte_identical_across_runs() {
        let cfg = Preset::ThresholdnetV1.config();
        let a = export_dot(&cfg, "thresholdnet_v1").unwrap();
        let b = export_dot(&cfg, "thresholdnet_v1").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn output_is_structurally_valid_dot() {
        let dot = export_dot(&toy(), "toy").unwrap();
        assert!(dot.starts_with("digraph toy {"));
        assert!(dot.trim_end().ends_with('}'));
        let opens = dot.matches('{').count();
        let closes = dot.matches('}').count();
        assert_eq!(opens, closes);
        // One cluster per block.
        assert_eq!(dot.matches("subgraph cluster_block").count(), 2);
        // Every edge is labeled.
        for line in dot.lines().filter(|l| l.contains("->")) {
            assert!(line.contains("[label=\""), "unlabeled edge: {line}");
        }
    }

    #[test]
    fn graph_names_are_sanitized() {
        let dot = export_dot(&toy(), "2-blocks net").unwrap();
        assert!(dot.starts_with("digraph g_2_blocks_net {"));
    }
}
