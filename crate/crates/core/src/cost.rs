//! Analytic parameter, MAC, FLOP and memory-traffic accounting.
//!
//! Counting conventions, fixed across the crate:
//!
//! * params — conv: `in_ch * out_ch * kh * kw` (+ `out_ch` if biased);
//!   batchnorm: `2 * ch` (scale and shift; running statistics are state,
//!   not parameters); fully-connected: `in * out + out`; everything else 0.
//! * MACs — conv: `in_ch * out_ch * kh * kw * H_out * W_out`;
//!   fully-connected: `in * out`. Element-wise ops, normalization and
//!   pooling are excluded. This is the convention under which the
//!   121-layer dense baseline lands at 2.88G.
//! * FLOPs — exactly `2 * MACs` per node.
//! * traffic — per convolution, input elements (concat inputs expanded,
//!   counted once per consuming conv) plus output elements. A comparative
//!   proxy for DRAM pressure, not a cache model.

use crate::arch::{NetworkGraph, Node, NodeId, OpKind};
use crate::arch::{validate_graph, Preset};
use serde::Serialize;
use std::fmt;

/// Accounting failure, always tagged with the offending node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostError {
    pub node: Option<NodeId>,
    pub message: String,
}

impl fmt::Display for CostError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(id) => write!(f, "cost accounting at node {id}: {}", self.message),
            None => write!(f, "cost accounting: {}", self.message),
        }
    }
}

impl std::error::Error for CostError {}

/// Per-node cost line.
#[derive(Debug, Clone, Serialize)]
pub struct NodeCost {
    pub node: NodeId,
    pub name: String,
    pub op: &'static str,
    pub params: u64,
    pub macs: u64,
    pub flops: u64,
    pub traffic_elements: u64,
}

/// Aggregate totals; always the exact sums of the per-node lines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CostTotals {
    pub params: u64,
    pub macs: u64,
    pub flops: u64,
    pub traffic_elements: u64,
}

/// Full cost breakdown for one graph.
#[derive(Debug, Clone, Serialize)]
pub struct CostReport {
    pub per_node: Vec<NodeCost>,
    pub totals: CostTotals,
}

/// Trainable parameter count of one node.
pub fn node_params(node: &Node) -> u64 {
    match node.op {
        OpKind::Conv { kh, kw, in_ch, out_ch, has_bias, .. } => {
            let weights = in_ch as u64 * out_ch as u64 * kh as u64 * kw as u64;
            weights + if has_bias { out_ch as u64 } else { 0 }
        }
        OpKind::BatchNorm { ch } => 2 * ch as u64,
        OpKind::FullyConnected { in_features, out_features } => {
            in_features as u64 * out_features as u64 + out_features as u64
        }
        _ => 0,
    }
}

/// Multiply-accumulate count of one node.
pub fn node_macs(node: &Node) -> u64 {
    match node.op {
        OpKind::Conv { kh, kw, in_ch, out_ch, .. } => {
            in_ch as u64
                * out_ch as u64
                * kh as u64
                * kw as u64
                * node.output_shape.height as u64
                * node.output_shape.width as u64
        }
        OpKind::FullyConnected { in_features, out_features } => {
            in_features as u64 * out_features as u64
        }
        _ => 0,
    }
}

fn node_traffic(graph: &NetworkGraph, node: &Node) -> Result<u64, CostError> {
    match node.op {
        OpKind::Conv { .. } => {
            let producer = *node.inputs.first().ok_or_else(|| CostError {
                node: Some(node.id),
                message: "conv has no producer".into(),
            })?;
            let read = graph.node(producer).output_shape.elements();
            Ok(read + node.output_shape.elements())
        }
        _ => Ok(0),
    }
}

/// Full per-node and aggregate accounting. The graph must validate cleanly.
pub fn summarize(graph: &NetworkGraph) -> Result<CostReport, CostError> {
    let violations = validate_graph(graph);
    if let Some(first) = violations.first() {
        return Err(CostError {
            node: Some(first.node),
            message: format!("graph failed validation ({} findings): {first}", violations.len()),
        });
    }
    let mut per_node = Vec::with_capacity(graph.nodes.len());
    let mut totals = CostTotals::default();
    for node in &graph.nodes {
        let params = node_params(node);
        let macs = node_macs(node);
        let flops = 2 * macs;
        let traffic = node_traffic(graph, node)?;
        totals.params += params;
        totals.macs += macs;
        totals.flops += flops;
        totals.traffic_elements += traffic;
        per_node.push(NodeCost {
            node: node.id,
            name: node.name.clone(),
            op: node.op.name(),
            params,
            macs,
            flops,
            traffic_elements: traffic,
        });
    }
    Ok(CostReport { per_node, totals })
}

/// Convolution read+write element total for the whole graph.
pub fn memory_traffic(graph: &NetworkGraph) -> u64 {
    graph.nodes.iter().map(|n| node_traffic(graph, n).unwrap_or(0)).sum()
}

impl CostReport {
    /// Traffic in bytes at the given element width (4 for single precision).
    pub fn traffic_bytes(&self, element_size: u64) -> u64 {
        self.totals.traffic_elements * element_size
    }

    /// MAC total over convolution nodes only.
    pub fn conv_macs(&self) -> u64 {
        self.per_node.iter().filter(|n| n.op == "conv").map(|n| n.macs).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// CSV with one row per node: id, op, params, macs, flops, traffic.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,op,params,macs,flops,traffic\n");
        for line in &self.per_node {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                line.node, line.op, line.params, line.macs, line.flops, line.traffic_elements
            ));
        }
        out.push_str(&format!(
            "total,,{},{},{},{}\n",
            self.totals.params, self.totals.macs, self.totals.flops, self.totals.traffic_elements
        ));
        out
    }
}

/// Formats a count with two-decimal M/G/K suffixes: `7978856` -> `"7.98M"`.
pub fn format_count(value: u64) -> String {
    let v = value as f64;
    if v >= 1e9 {
        format!("{:.2}G", v / 1e9)
    } else if v >= 1e6 {
        format!("{:.2}M", v / 1e6)
    } else if v >= 1e3 {
        format!("{:.2}K", v / 1e3)
    } else {
        value.to_string()
    }
}

/// One metric of a side-by-side comparison.
#[derive(Debug, Clone, Serialize)]
pub struct MetricDelta {
    pub metric: &'static str,
    pub a: u64,
    pub b: u64,
    /// `b - a`.
    pub delta: i128,
    /// `(b - a) / a`, or 0 when `a` is 0.
    pub relative: f64,
}

/// Totals of two reports compared metric by metric.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub metrics: Vec<MetricDelta>,
}

/// Side-by-side deltas of two reports' totals.
pub fn compare_reports(a: &CostReport, b: &CostReport) -> Comparison {
    let one = |metric: &'static str, a: u64, b: u64| {
        let delta = b as i128 - a as i128;
        let relative = if a == 0 { 0.0 } else { delta as f64 / a as f64 };
        MetricDelta { metric, a, b, delta, relative }
    };
    Comparison {
        metrics: vec![
            one("params", a.totals.params, b.totals.params),
            one("macs", a.totals.macs, b.totals.macs),
            one("flops", a.totals.flops, b.totals.flops),
            one("traffic", a.totals.traffic_elements, b.totals.traffic_elements),
        ],
    }
}

/// Published reference figures for the presets, as reported: params and
/// multiply-adds. The threshold-net rows depend on under-specified recipe
/// details (even multiplier, reduction semantics, stem width, per-block
/// modes), so they are reproduction targets for sensitivity analysis, not
/// oracles; the dense-net row is an oracle.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceCost {
    pub preset: Preset,
    pub params: f64,
    pub madds: f64,
}

pub const REFERENCE_COSTS: [ReferenceCost; 3] = [
    ReferenceCost { preset: Preset::Densenet121, params: 7.97e6, madds: 2.88e9 },
    ReferenceCost { preset: Preset::ThresholdnetV1, params: 15.32e6, madds: 6.90e9 },
    ReferenceCost { preset: Preset::ThresholdnetV2, params: 17.14e6, madds: 8.12e9 },
];

/// Reference row for a preset, if one is published.
pub fn reference_cost(preset: Preset) -> ReferenceCost {
    REFERENCE_COSTS
        .iter()
        .copied()
        .find(|r| r.preset == preset)
        .expect("every preset has a reference row")
}

/// Relative deviation of `computed` from `reference`.
pub fn relative_to_reference(computed: u64, reference: f64) -> f64 {
    (computed as f64 - reference) / reference
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{build_network, toy, ArchConfig, BlockConfig, ConvSpec, ReductionRule, Shape, UnitOrder};
    use crate::topology::ConnectionMode;

    fn conv_node(in_ch: usize, out_ch: usize, k: usize, out_hw: usize, has_bias: bool) -> Node {
        Node {
            id: 1,
            name: "conv".into(),
            op: OpKind::Conv { kh: k, kw: k, stride: 1, pad: k / 2, in_ch, out_ch, has_bias },
            inputs: vec![0],
            output_shape: Shape { channels: out_ch, height: out_hw, width: out_hw },
        }
    }

    #[test]
    fn param_counting() {
        assert_eq!(node_params(&conv_node(1, 1, 1, 1, false)), 1);
        assert_eq!(node_params(&conv_node(64, 32, 3, 56, false)), 18432);
        assert_eq!(node_params(&conv_node(64, 32, 3, 56, true)), 18464);
        let bn = Node {
            id: 1,
            name: "bn".into(),
            op: OpKind::BatchNorm { ch: 32 },
            inputs: vec![0],
            output_shape: Shape { channels: 32, height: 56, width: 56 },
        };
        assert_eq!(node_params(&bn), 64);
        let fc = Node {
            id: 1,
            name: "fc".into(),
            op: OpKind::FullyConnected { in_features: 1024, out_features: 1000 },
            inputs: vec![0],
            output_shape: Shape { channels: 1000, height: 1, width: 1 },
        };
        assert_eq!(node_params(&fc), 1_025_000);
    }

    #[test]
    fn mac_counting() {
        assert_eq!(node_macs(&conv_node(1, 1, 1, 1, false)), 1);
        assert_eq!(node_macs(&conv_node(3, 32, 3, 112, false)), 10_838_016);
        let fc = Node {
            id: 1,
            name: "fc".into(),
            op: OpKind::FullyConnected { in_features: 1024, out_features: 1000 },
            inputs: vec![0],
            output_shape: Shape { channels: 1000, height: 1, width: 1 },
        };
        assert_eq!(node_macs(&fc), 1_024_000);
        let pool = Node {
            id: 1,
            name: "pool".into(),
            op: OpKind::MaxPool { kernel: 2, stride: 2, pad: 0 },
            inputs: vec![0],
            output_shape: Shape { channels: 8, height: 4, width: 4 },
        };
        assert_eq!(node_macs(&pool), 0);
    }

    #[test]
    fn flops_are_twice_macs_per_node() {
        let report = summarize(&build_network(&toy()).unwrap()).unwrap();
        for line in &report.per_node {
            assert_eq!(line.flops, 2 * line.macs, "at {}", line.name);
        }
        assert_eq!(report.totals.flops, 2 * report.totals.macs);
    }

    #[test]
    fn totals_are_sums() {
        let report = summarize(&build_network(&toy()).unwrap()).unwrap();
        assert_eq!(report.totals.params, report.per_node.iter().map(|n| n.params).sum::<u64>());
        assert_eq!(report.totals.macs, report.per_node.iter().map(|n| n.macs).sum::<u64>());
        assert_eq!(
            report.totals.traffic_elements,
            report.per_node.iter().map(|n| n.traffic_elements).sum::<u64>()
        );
    }

    #[test]
    fn densenet121_matches_its_published_size() {
        let graph = build_network(&Preset::Densenet121.config()).unwrap();
        let report = summarize(&graph).unwrap();
        // Exact closed-form value; the published rounding is 7.97M.
        assert_eq!(report.totals.params, 7_978_856);
        let reference = reference_cost(Preset::Densenet121);
        assert!(relative_to_reference(report.totals.params, reference.params).abs() < 0.01);
        assert!(relative_to_reference(report.totals.macs, reference.madds).abs() < 0.02);
    }

    #[test]
    fn doubling_resolution_quadruples_conv_macs() {
        let cfg = Preset::ThresholdnetV1.config();
        let base = summarize(&build_network(&cfg).unwrap()).unwrap();
        let doubled =
            summarize(&build_network(&cfg.clone().with_resolution(448)).unwrap()).unwrap();
        assert_eq!(doubled.conv_macs(), 4 * base.conv_macs());
        assert_eq!(doubled.totals.params, base.totals.params);
    }

    fn single_block_config(mode: ConnectionMode) -> ArchConfig {
        ArchConfig {
            input_height: 14,
            input_width: 14,
            input_channels: 3,
            stem_convs: vec![ConvSpec { kernel: 3, stride: 1, padding: 1, out_channels: 32 }],
            stem_pool: None,
            blocks: vec![BlockConfig {
                depth: 16,
                mode,
                growth_rate: 32,
                even_multiplier: 1.7,
                transition_reduction: 0.5,
                transition_pool: false,
            }],
            classifier_classes: 10,
            unit_order: UnitOrder::ConvBnRelu,
            bottleneck: false,
            reduction_rule: ReductionRule::KeepTheta,
        }
    }

    #[test]
    fn mac_totals_follow_connection_density() {
        let macs = |mode| {
            summarize(&build_network(&single_block_config(mode)).unwrap()).unwrap().totals.macs
        };
        let dense = macs(ConnectionMode::Dense);
        let bc12 = macs(ConnectionMode::ThresholdBc { threshold: 12 });
        let bc8 = macs(ConnectionMode::ThresholdBc { threshold: 8 });
        assert!(dense > bc12 && bc12 > bc8, "{dense} > {bc12} > {bc8}");
    }

    #[test]
    fn dense_block_reads_more_than_pruned_block() {
        let traffic = |mode| memory_traffic(&build_network(&single_block_config(mode)).unwrap());
        assert!(traffic(ConnectionMode::Dense) > traffic(ConnectionMode::ThresholdBc { threshold: 8 }));
    }

    #[test]
    fn traffic_counts_reads_per_consumer() {
        // Two convs reading one 4-element tensor, each writing 4 elements.
        let shape = Shape { channels: 1, height: 2, width: 2 };
        let nodes = vec![
            Node { id: 0, name: "input".into(), op: OpKind::Input, inputs: vec![], output_shape: shape },
            Node {
                id: 1,
                name: "a".into(),
                op: OpKind::Conv { kh: 1, kw: 1, stride: 1, pad: 0, in_ch: 1, out_ch: 1, has_bias: false },
                inputs: vec![0],
                output_shape: shape,
            },
            Node {
                id: 2,
                name: "b".into(),
                op: OpKind::Conv { kh: 1, kw: 1, stride: 1, pad: 0, in_ch: 1, out_ch: 1, has_bias: false },
                inputs: vec![0],
                output_shape: shape,
            },
        ];
        let graph = NetworkGraph { input_shape: shape, nodes, stages: vec![] };
        assert_eq!(memory_traffic(&graph), 16);

        let tiny = Shape { channels: 1, height: 1, width: 1 };
        let nodes = vec![
            Node { id: 0, name: "input".into(), op: OpKind::Input, inputs: vec![], output_shape: tiny },
            Node {
                id: 1,
                name: "conv".into(),
                op: OpKind::Conv { kh: 1, kw: 1, stride: 1, pad: 0, in_ch: 1, out_ch: 1, has_bias: false },
                inputs: vec![0],
                output_shape: tiny,
            },
        ];
        let graph = NetworkGraph { input_shape: tiny, nodes, stages: vec![] };
        assert_eq!(memory_traffic(&graph), 2);
    }

    #[test]
    fn summarize_rejects_invalid_graphs() {
        let mut graph = build_network(&toy()).unwrap();
        graph.nodes[1].output_shape.channels += 1;
        assert!(summarize(&graph).is_err());
    }

    #[test]
    fn comparison_deltas() {
        let report = summarize(&build_network(&toy()).unwrap()).unwrap();
        let self_cmp = compare_reports(&report, &report);
        assert!(self_cmp.metrics.iter().all(|m| m.delta == 0 && m.relative == 0.0));

        let mut bigger = report.clone();
        bigger.totals.params = report.totals.params + report.totals.params / 10;
        let cmp = compare_reports(&report, &bigger);
        let params = &cmp.metrics[0];
        assert!(params.delta > 0);
        assert!((params.relative - 0.1).abs() < 0.01);
    }

    #[test]
    fn count_formatting() {
        assert_eq!(format_count(7_978_856), "7.98M");
        assert_eq!(format_count(2_880_000_000), "2.88G");
        assert_eq!(format_count(12_345), "12.35K");
        assert_eq!(format_count(999), "999");
    }
}
