//! Concrete operator DAG with resolved channel counts and spatial shapes.
//!
//! [`build_network`] lowers an [`ArchConfig`] into a [`NetworkGraph`]: a
//! topologically ordered node list where every tensor shape is already
//! resolved. Each in-block layer becomes one composite unit (concat of its
//! topology inputs, then conv/batchnorm/relu in the configured order); block
//! outputs are the channel-concatenation of the block's output members;
//! transitions compress with a 1x1 convolution and optionally downsample.

use crate::arch::config::{ArchConfig, UnitOrder};
use crate::topology::{build_block_topology, BlockTopology, ConnectionMode, LayerId};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use std::collections::VecDeque;
use std::fmt;

pub type NodeId = usize;

/// Tensor shape without the batch dimension. Vector-valued nodes
/// (fully-connected, softmax) use `height = width = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub fn elements(&self) -> u64 {
        self.channels as u64 * self.height as u64 * self.width as u64
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

impl Serialize for Shape {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(3))?;
        seq.serialize_element(&self.channels)?;
        seq.serialize_element(&self.height)?;
        seq.serialize_element(&self.width)?;
        seq.end()
    }
}

/// Operator kinds the graph can hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OpKind {
    /// Source node carrying the network input tensor.
    Input,
    Conv {
        kh: usize,
        kw: usize,
        stride: usize,
        pad: usize,
        in_ch: usize,
        out_ch: usize,
        has_bias: bool,
    },
    BatchNorm {
        ch: usize,
    },
    Relu,
    MaxPool {
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    GlobalAvgPool,
    Concat,
    FullyConnected {
        in_features: usize,
        out_features: usize,
    },
    Softmax,
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Input => "input",
            OpKind::Conv { .. } => "conv",
            OpKind::BatchNorm { .. } => "batchnorm",
            OpKind::Relu => "relu",
            OpKind::MaxPool { .. } => "maxpool",
            OpKind::GlobalAvgPool => "globalavgpool",
            OpKind::Concat => "concat",
            OpKind::FullyConnected { .. } => "fullyconnected",
            OpKind::Softmax => "softmax",
        }
    }
}

/// One operator with resolved output shape.
#[derive(Debug, Clone, Serialize)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    #[serde(flatten)]
    pub op: OpKind,
    pub inputs: Vec<NodeId>,
    pub output_shape: Shape,
}

/// Named checkpoint in the construction order, used for shape reports.
#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub output_shape: Shape,
}

/// Immutable operator DAG. Nodes are stored in topological order: every
/// input id is smaller than the node's own id.
#[derive(Debug, Clone, Serialize)]
pub struct NetworkGraph {
    pub input_shape: Shape,
    pub nodes: Vec<Node>,
    pub stages: Vec<Stage>,
}

/// Graph construction failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphError {
    pub context: String,
    pub message: String,
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.message)
    }
}

impl std::error::Error for GraphError {}

/// One validation finding; an empty finding list means the graph is valid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: NodeId,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}: {}", self.node, self.message)
    }
}

impl NetworkGraph {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Weighted-layer count under the conv + fully-connected convention.
    pub fn weighted_layer_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.op, OpKind::Conv { .. } | OpKind::FullyConnected { .. }))
            .count()
    }

    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// Serializes the graph to JSON: input shape plus a node array with op
    /// parameters, edges and output shapes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization cannot fail")
    }
}

/// Output channels of in-block layer `i`: the growth rate, widened to
/// `floor(k * m)` for even layers inside the mode's harmonic region.
pub fn layer_out_channels(
    i: LayerId,
    mode: ConnectionMode,
    growth_rate: usize,
    even_multiplier: f64,
) -> usize {
    if i % 2 == 0 && mode.in_harmonic_region(i) {
        (growth_rate as f64 * even_multiplier).floor() as usize
    } else {
        growth_rate
    }
}

/// Which layer outputs (plus the block input, index 0) a block emits.
///
/// Dense and sparse-window blocks emit everything. Harmonic regions emit
/// only odd layers, except that the final layer is always emitted so the
/// deepest features are never discarded.
pub fn block_output_members(topo: &BlockTopology, mode: ConnectionMode) -> Vec<LayerId> {
    let depth = topo.layer_count();
    let emit_all_up_to = match mode {
        ConnectionMode::Dense | ConnectionMode::SparseWindow { .. } => depth,
        ConnectionMode::Harmonic => 0,
        ConnectionMode::ThresholdAb { threshold } | ConnectionMode::ThresholdBc { threshold } => {
            threshold.min(depth)
        }
    };
    let mut members = vec![0];
    for i in 1..=depth {
        if i <= emit_all_up_to || i % 2 == 1 || i == depth {
            members.push(i);
        }
    }
    members
}

fn conv_out_size(input: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = input + 2 * pad;
    if padded < kernel || stride == 0 {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

struct Builder {
    nodes: Vec<Node>,
    stages: Vec<Stage>,
}

impl Builder {
    fn push(&mut self, name: String, op: OpKind, inputs: Vec<NodeId>, shape: Shape) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node { id, name, op, inputs, output_shape: shape });
        id
    }

    fn stage(&mut self, name: impl Into<String>, shape: Shape) {
        self.stages.push(Stage { name: name.into(), output_shape: shape });
    }

    fn shape(&self, id: NodeId) -> Shape {
        self.nodes[id].output_shape
    }

    fn conv(
        &mut self,
        name: String,
        src: NodeId,
        kernel: usize,
        stride: usize,
        pad: usize,
        out_ch: usize,
    ) -> Result<NodeId, GraphError> {
        let input = self.shape(src);
        let fail = |message: String| GraphError { context: name.clone(), message };
        if out_ch == 0 {
            return Err(fail("derived channel count is zero".into()));
        }
        let height = conv_out_size(input.height, kernel, stride, pad)
            .ok_or_else(|| fail(format!("kernel {kernel} does not fit height {}", input.height)))?;
        let width = conv_out_size(input.width, kernel, stride, pad)
            .ok_or_else(|| fail(format!("kernel {kernel} does not fit width {}", input.width)))?;
        let op = OpKind::Conv {
            kh: kernel,
            kw: kernel,
            stride,
            pad,
            in_ch: input.channels,
            out_ch,
            has_bias: false,
        };
        Ok(self.push(name, op, vec![src], Shape { channels: out_ch, height, width }))
    }

    fn batchnorm(&mut self, name: String, src: NodeId) -> NodeId {
        let shape = self.shape(src);
        self.push(name, OpKind::BatchNorm { ch: shape.channels }, vec![src], shape)
    }

    fn relu(&mut self, name: String, src: NodeId) -> NodeId {
        let shape = self.shape(src);
        self.push(name, OpKind::Relu, vec![src], shape)
    }

    fn maxpool(
        &mut self,
        name: String,
        src: NodeId,
        kernel: usize,
        stride: usize,
        pad: usize,
    ) -> Result<NodeId, GraphError> {
        let input = self.shape(src);
        let fail = |message: String| GraphError { context: name.clone(), message };
        let height = conv_out_size(input.height, kernel, stride, pad)
            .ok_or_else(|| fail(format!("pool {kernel} does not fit height {}", input.height)))?;
        let width = conv_out_size(input.width, kernel, stride, pad)
            .ok_or_else(|| fail(format!("pool {kernel} does not fit width {}", input.width)))?;
        let op = OpKind::MaxPool { kernel, stride, pad };
        Ok(self.push(name, op, vec![src], Shape { channels: input.channels, height, width }))
    }

    /// Concatenates `sources` along channels; a single source passes through.
    fn concat(&mut self, name: String, sources: &[NodeId]) -> Result<NodeId, GraphError> {
        if sources.len() == 1 {
            return Ok(sources[0]);
        }
        let first = self.shape(sources[0]);
        let mut channels = 0;
        for &src in sources {
            let s = self.shape(src);
            if (s.height, s.width) != (first.height, first.width) {
                return Err(GraphError {
                    context: name,
                    message: format!("spatial mismatch: {s} vs {first}"),
                });
            }
            channels += s.channels;
        }
        let shape = Shape { channels, height: first.height, width: first.width };
        Ok(self.push(name, OpKind::Concat, sources.to_vec(), shape))
    }

    /// One composite in-block unit; returns the node whose output the block
    /// records as this layer's feature map.
    fn unit(
        &mut self,
        prefix: &str,
        src: NodeId,
        out_ch: usize,
        order: UnitOrder,
        bottleneck: Option<usize>,
    ) -> Result<NodeId, GraphError> {
        match order {
            UnitOrder::ConvBnRelu => {
                let mut cur = src;
                if let Some(width) = bottleneck {
                    cur = self.conv(format!("{prefix}.conv1"), cur, 1, 1, 0, width)?;
                    cur = self.batchnorm(format!("{prefix}.bn1"), cur);
                    cur = self.relu(format!("{prefix}.relu1"), cur);
                    cur = self.conv(format!("{prefix}.conv2"), cur, 3, 1, 1, out_ch)?;
                    cur = self.batchnorm(format!("{prefix}.bn2"), cur);
                    Ok(self.relu(format!("{prefix}.relu2"), cur))
                } else {
                    cur = self.conv(format!("{prefix}.conv"), cur, 3, 1, 1, out_ch)?;
                    cur = self.batchnorm(format!("{prefix}.bn"), cur);
                    Ok(self.relu(format!("{prefix}.relu"), cur))
                }
            }
            UnitOrder::BnReluConv => {
                let mut cur = self.batchnorm(format!("{prefix}.bn1"), src);
                cur = self.relu(format!("{prefix}.relu1"), cur);
                if let Some(width) = bottleneck {
                    cur = self.conv(format!("{prefix}.conv1"), cur, 1, 1, 0, width)?;
                    cur = self.batchnorm(format!("{prefix}.bn2"), cur);
                    cur = self.relu(format!("{prefix}.relu2"), cur);
                    self.conv(format!("{prefix}.conv2"), cur, 3, 1, 1, out_ch)
                } else {
                    self.conv(format!("{prefix}.conv"), cur, 3, 1, 1, out_ch)
                }
            }
        }
    }
}

/// Lowers a validated config into an operator graph.
pub fn build_network(cfg: &ArchConfig) -> Result<NetworkGraph, GraphError> {
    cfg.validate().map_err(|e| GraphError { context: "config".into(), message: e.to_string() })?;

    let mut b = Builder { nodes: Vec::new(), stages: Vec::new() };
    let input_shape =
        Shape { channels: cfg.input_channels, height: cfg.input_height, width: cfg.input_width };
    let mut cur = b.push("input".into(), OpKind::Input, vec![], input_shape);

    for (i, conv) in cfg.stem_convs.iter().enumerate() {
        let prefix = format!("stem.conv{}", i + 1);
        cur = b.conv(prefix.clone(), cur, conv.kernel, conv.stride, conv.padding, conv.out_channels)?;
        b.stage(prefix.clone(), b.shape(cur));
        cur = b.batchnorm(format!("{prefix}.bn"), cur);
        cur = b.relu(format!("{prefix}.relu"), cur);
    }
    if let Some(pool) = &cfg.stem_pool {
        cur = b.maxpool("stem.pool".into(), cur, pool.kernel, pool.stride, pool.padding)?;
        b.stage("stem.pool", b.shape(cur));
    }

    let last_block = cfg.blocks.len() - 1;
    for (bi, block) in cfg.blocks.iter().enumerate() {
        let bnum = bi + 1;
        let topo = build_block_topology(block.depth, block.mode).map_err(|e| GraphError {
            context: format!("block{bnum}"),
            message: e.to_string(),
        })?;

        // producers[i] = node carrying layer i's output (0 = block input).
        let mut producers: Vec<NodeId> = vec![cur];
        for i in 1..=block.depth {
            let prefix = format!("block{bnum}.layer{i}");
            let sources: Vec<NodeId> = topo.inputs(i).iter().map(|&j| producers[j]).collect();
            let src = b.concat(format!("{prefix}.concat"), &sources)?;
            let out_ch = layer_out_channels(i, block.mode, block.growth_rate, block.even_multiplier);
            let bottleneck = cfg.bottleneck.then(|| 4 * block.growth_rate);
            let unit_out = b.unit(&prefix, src, out_ch, cfg.unit_order, bottleneck)?;
            producers.push(unit_out);
        }

        let members = block_output_members(&topo, block.mode);
        let member_nodes: Vec<NodeId> = members.iter().map(|&m| producers[m]).collect();
        cur = b.concat(format!("block{bnum}.out"), &member_nodes)?;
        b.stage(format!("block{bnum}"), b.shape(cur));

        if bi < last_block {
            let prefix = format!("transition{bnum}");
            let in_ch = b.shape(cur).channels;
            let out_ch = cfg.reduction_rule.apply(block.transition_reduction, in_ch);
            if out_ch == 0 {
                return Err(GraphError {
                    context: prefix,
                    message: format!(
                        "reduction {} of {in_ch} channels leaves none",
                        block.transition_reduction
                    ),
                });
            }
            match cfg.unit_order {
                UnitOrder::ConvBnRelu => {
                    cur = b.conv(format!("{prefix}.conv"), cur, 1, 1, 0, out_ch)?;
                    b.stage(format!("{prefix}.conv"), b.shape(cur));
                    cur = b.batchnorm(format!("{prefix}.bn"), cur);
                    cur = b.relu(format!("{prefix}.relu"), cur);
                }
                UnitOrder::BnReluConv => {
                    cur = b.batchnorm(format!("{prefix}.bn"), cur);
                    cur = b.relu(format!("{prefix}.relu"), cur);
                    cur = b.conv(format!("{prefix}.conv"), cur, 1, 1, 0, out_ch)?;
                    b.stage(format!("{prefix}.conv"), b.shape(cur));
                }
            }
            if block.transition_pool {
                cur = b.maxpool(format!("{prefix}.pool"), cur, 2, 2, 0)?;
                b.stage(format!("{prefix}.pool"), b.shape(cur));
            }
        }
    }

    if cfg.unit_order == UnitOrder::BnReluConv {
        cur = b.batchnorm("classifier.bn".into(), cur);
        cur = b.relu("classifier.relu".into(), cur);
    }
    let pooled_shape = Shape { channels: b.shape(cur).channels, height: 1, width: 1 };
    cur = b.push("classifier.pool".into(), OpKind::GlobalAvgPool, vec![cur], pooled_shape);
    b.stage("classifier.pool", pooled_shape);
    let in_features = pooled_shape.channels;
    let fc_shape = Shape { channels: cfg.classifier_classes, height: 1, width: 1 };
    cur = b.push(
        "classifier.fc".into(),
        OpKind::FullyConnected { in_features, out_features: cfg.classifier_classes },
        vec![cur],
        fc_shape,
    );
    b.stage("classifier.fc", fc_shape);
    b.push("classifier.softmax".into(), OpKind::Softmax, vec![cur], fc_shape);

    Ok(NetworkGraph { input_shape, nodes: b.nodes, stages: b.stages })
}

/// Structural validation: topological order, per-op arity, shape and
/// channel arithmetic, and classifier reachability. Returns every finding
/// instead of stopping at the first.
pub fn validate_graph(graph: &NetworkGraph) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut fail = |node: NodeId, message: String| violations.push(Violation { node, message });

    for (idx, node) in graph.nodes.iter().enumerate() {
        if node.id != idx {
            fail(node.id, format!("id {} does not match position {idx}", node.id));
        }
        for &input in &node.inputs {
            if input >= idx {
                fail(node.id, format!("input {input} does not precede the node"));
            }
        }
        let arity_ok = match node.op {
            OpKind::Input => node.inputs.is_empty(),
            OpKind::Concat => node.inputs.len() >= 2,
            _ => node.inputs.len() == 1,
        };
        if !arity_ok {
            fail(node.id, format!("{} has {} inputs", node.op.name(), node.inputs.len()));
            continue;
        }
        if node.output_shape.channels == 0 {
            fail(node.id, "zero output channels".into());
        }
        let in_shape = node.inputs.first().map(|&i| graph.nodes[i].output_shape);
        match node.op {
            OpKind::Input => {
                if node.output_shape != graph.input_shape {
                    fail(node.id, "input node shape differs from graph input shape".into());
                }
            }
            OpKind::Conv { kh, kw, stride, pad, in_ch, out_ch, .. } => {
                let s = in_shape.unwrap();
                if s.channels != in_ch {
                    fail(node.id, format!("channel mismatch: in_ch {in_ch} vs producer {}", s.channels));
                }
                let expect = conv_out_size(s.height, kh, stride, pad)
                    .zip(conv_out_size(s.width, kw, stride, pad));
                match expect {
                    Some((h, w)) => {
                        let want = Shape { channels: out_ch, height: h, width: w };
                        if node.output_shape != want {
                            fail(node.id, format!("shape mismatch: {} vs expected {want}", node.output_shape));
                        }
                    }
                    None => fail(node.id, format!("kernel {kh}x{kw} does not fit input {s}")),
                }
            }
            OpKind::BatchNorm { ch } => {
                let s = in_shape.unwrap();
                if s.channels != ch {
                    fail(node.id, format!("channel mismatch: ch {ch} vs producer {}", s.channels));
                }
                if node.output_shape != s {
                    fail(node.id, "batchnorm must preserve shape".into());
                }
            }
            OpKind::Relu | OpKind::Softmax => {
                let s = in_shape.unwrap();
                if node.output_shape != s {
                    fail(node.id, format!("{} must preserve shape", node.op.name()));
                }
            }
            OpKind::MaxPool { kernel, stride, pad } => {
                let s = in_shape.unwrap();
                match conv_out_size(s.height, kernel, stride, pad)
                    .zip(conv_out_size(s.width, kernel, stride, pad))
                {
                    Some((h, w)) => {
                        let want = Shape { channels: s.channels, height: h, width: w };
                        if node.output_shape != want {
                            fail(node.id, format!("shape mismatch: {} vs expected {want}", node.output_shape));
                        }
                    }
                    None => fail(node.id, format!("pool {kernel} does not fit input {s}")),
                }
            }
            OpKind::GlobalAvgPool => {
                let s = in_shape.unwrap();
                let want = Shape { channels: s.channels, height: 1, width: 1 };
                if node.output_shape != want {
                    fail(node.id, format!("shape mismatch: {} vs expected {want}", node.output_shape));
                }
            }
            OpKind::Concat => {
                let first = in_shape.unwrap();
                let mut channels = 0;
                for &i in &node.inputs {
                    let s = graph.nodes[i].output_shape;
                    if (s.height, s.width) != (first.height, first.width) {
                        fail(node.id, format!("spatial mismatch: {s} vs {first}"));
                    }
                    channels += s.channels;
                }
                let want = Shape { channels, height: first.height, width: first.width };
                if node.output_shape != want {
                    fail(node.id, format!("channel sum mismatch: {} vs expected {want}", node.output_shape));
                }
            }
            OpKind::FullyConnected { in_features, out_features } => {
                let s = in_shape.unwrap();
                if s.elements() != in_features as u64 {
                    fail(
                        node.id,
                        format!("channel mismatch: in_features {in_features} vs producer {} elements", s.elements()),
                    );
                }
                if node.output_shape.channels != out_features {
                    fail(node.id, "output channels must equal out_features".into());
                }
            }
        }
    }

    // The classifier must be reachable from the input source.
    let input_nodes: Vec<NodeId> = graph
        .nodes
        .iter()
        .filter(|n| matches!(n.op, OpKind::Input))
        .map(|n| n.id)
        .collect();
    if input_nodes.len() != 1 {
        violations.push(Violation {
            node: 0,
            message: format!("expected exactly one input node, found {}", input_nodes.len()),
        });
    } else {
        let mut reachable = vec![false; graph.nodes.len()];
        let mut queue = VecDeque::from([input_nodes[0]]);
        reachable[input_nodes[0]] = true;
        while let Some(id) = queue.pop_front() {
            for node in &graph.nodes {
                if !reachable[node.id] && node.inputs.contains(&id) {
                    reachable[node.id] = true;
                    queue.push_back(node.id);
                }
            }
        }
        let classifier_reached = graph
            .nodes
            .iter()
            .any(|n| matches!(n.op, OpKind::FullyConnected { .. }) && reachable[n.id]);
        if !classifier_reached {
            violations.push(Violation {
                node: input_nodes[0],
                message: "no fully-connected classifier reachable from the input".into(),
            });
        }
    }

    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::config::{toy, Preset};

    #[test]
    fn layer_out_channels_rules() {
        let bc8 = ConnectionMode::ThresholdBc { threshold: 8 };
        assert_eq!(layer_out_channels(9, bc8, 32, 1.7), 32);
        assert_eq!(layer_out_channels(10, bc8, 32, 1.7), 54);
        assert_eq!(layer_out_channels(4, ConnectionMode::ThresholdAb { threshold: 8 }, 32, 1.7), 32);
        assert_eq!(layer_out_channels(4, ConnectionMode::Harmonic, 32, 1.7), 54);
        assert_eq!(layer_out_channels(4, ConnectionMode::Dense, 32, 1.7), 32);
    }

    #[test]
    fn block_output_member_rules() {
        let bc8 = ConnectionMode::ThresholdBc { threshold: 8 };
        let topo = build_block_topology(16, bc8).unwrap();
        assert_eq!(
            block_output_members(&topo, bc8),
            vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 13, 15, 16]
        );

        let dense = build_block_topology(4, ConnectionMode::Dense).unwrap();
        assert_eq!(block_output_members(&dense, ConnectionMode::Dense), vec![0, 1, 2, 3, 4]);

        let harm = build_block_topology(2, ConnectionMode::Harmonic).unwrap();
        assert_eq!(block_output_members(&harm, ConnectionMode::Harmonic), vec![0, 1, 2]);
    }

    #[test]
    fn presets_build_and_validate() {
        for preset in Preset::ALL {
            let graph = build_network(&preset.config()).unwrap();
            let violations = validate_graph(&graph);
            assert!(violations.is_empty(), "{}: {:?}", preset.name(), violations);
        }
        let graph = build_network(&toy()).unwrap();
        assert!(validate_graph(&graph).is_empty());
    }

    #[test]
    fn densenet121_has_121_weighted_layers() {
        let graph = build_network(&Preset::Densenet121.config()).unwrap();
        assert_eq!(graph.weighted_layer_count(), 121);
    }

    #[test]
    fn thresholdnet_stage_sizes_follow_the_layout_table() {
        for preset in [Preset::ThresholdnetV1, Preset::ThresholdnetV2] {
            let graph = build_network(&preset.config()).unwrap();
            let side = |name: &str| {
                let s = graph.stage(name).unwrap_or_else(|| panic!("missing stage {name}"));
                assert_eq!(s.output_shape.height, s.output_shape.width);
                s.output_shape.height
            };
            assert_eq!(side("stem.conv1"), 112);
            assert_eq!(side("stem.conv2"), 112);
            assert_eq!(side("stem.pool"), 56);
            assert_eq!(side("block1"), 56);
            assert_eq!(side("transition1.pool"), 28);
            assert_eq!(side("block2"), 28);
            assert_eq!(side("transition2.pool"), 14);
            assert_eq!(side("block3"), 14);
            assert_eq!(side("transition3.conv"), 14);
            assert!(graph.stage("transition3.pool").is_none());
            assert_eq!(side("block4"), 14);
            assert_eq!(side("transition4.pool"), 7);
            assert_eq!(side("block5"), 7);
            assert_eq!(side("classifier.pool"), 1);
        }
    }

    #[test]
    fn densenet121_stage_channels() {
        let graph = build_network(&Preset::Densenet121.config()).unwrap();
        let ch = |name: &str| graph.stage(name).unwrap().output_shape.channels;
        assert_eq!(ch("block1"), 256);
        assert_eq!(ch("transition1.conv"), 128);
        assert_eq!(ch("block2"), 512);
        assert_eq!(ch("block3"), 1024);
        assert_eq!(ch("transition3.conv"), 512);
        assert_eq!(ch("block4"), 1024);
        assert_eq!(ch("classifier.fc"), 1000);
    }

    #[test]
    fn changing_block_modes_preserves_spatial_sizes() {
        let base = Preset::ThresholdnetV1.config();
        let mut alt = base.clone();
        alt.blocks[0].mode = ConnectionMode::ThresholdBc { threshold: 4 };
        alt.blocks[3].mode = ConnectionMode::ThresholdAb { threshold: 8 };
        let g0 = build_network(&base).unwrap();
        let g1 = build_network(&alt).unwrap();
        for (a, b) in g0.stages.iter().zip(g1.stages.iter()) {
            assert_eq!(a.name, b.name);
            assert_eq!(
                (a.output_shape.height, a.output_shape.width),
                (b.output_shape.height, b.output_shape.width),
                "stage {}",
                a.name
            );
        }
    }

    #[test]
    fn concat_channels_match_consumer_in_ch() {
        let graph = build_network(&Preset::ThresholdnetV1.config()).unwrap();
        for node in &graph.nodes {
            if let OpKind::Conv { in_ch, .. } = node.op {
                let producer = graph.node(node.inputs[0]);
                assert_eq!(producer.output_shape.channels, in_ch, "at {}", node.name);
            }
        }
    }

    #[test]
    fn validator_flags_spatial_mismatch() {
        let mut graph = build_network(&toy()).unwrap();
        // Corrupt a concat output shape.
        let concat = graph
            .nodes
            .iter()
            .position(|n| matches!(n.op, OpKind::Concat))
            .expect("toy net concatenates");
        graph.nodes[concat].output_shape.channels += 1;
        let violations = validate_graph(&graph);
        assert!(violations.iter().any(|v| v.message.contains("mismatch")));
    }

    #[test]
    fn validator_flags_channel_mismatch() {
        let mut graph = build_network(&toy()).unwrap();
        let conv = graph
            .nodes
            .iter()
            .position(|n| matches!(n.op, OpKind::Conv { .. }))
            .unwrap();
        if let OpKind::Conv { ref mut in_ch, .. } = graph.nodes[conv].op {
            *in_ch += 3;
        }
        let violations = validate_graph(&graph);
        assert!(violations.iter().any(|v| v.message.contains("channel mismatch")));
    }

    #[test]
    fn build_reports_offending_stage_on_zero_channels() {
        let mut cfg = toy();
        cfg.blocks[0].transition_reduction = 0.01;
        let result = build_network(&cfg);
        let error = result.unwrap_err();
        assert_eq!(error.context, "transition1");
    }

    #[test]
    fn graph_json_is_deterministic_and_lists_all_nodes() {
        let cfg = toy();
        let a = build_network(&cfg).unwrap().to_json();
        let b = build_network(&cfg).unwrap().to_json();
        assert_eq!(a, b);
        let value: serde_json::Value = serde_json::from_str(&a).unwrap();
        let nodes = value["nodes"].as_array().unwrap();
        assert_eq!(nodes.len(), build_network(&cfg).unwrap().nodes.len());
        assert_eq!(nodes[0]["kind"], "input");
    }
}
