//! Connection-set generation for pruned dense blocks.
//!
//! A block is a chain of `L` convolutional layers. Index `0` denotes the
//! block input tensor and indices `1..=L` denote the layers. Each layer `i`
//! consumes the channel-concatenation of a subset of `{0..i-1}`; the subset
//! is decided by a [`ConnectionMode`]:
//!
//! * `Dense` — every predecessor: `{0, 1, .., i-1}`.
//! * `SparseWindow(n)` — the first `floor(n/2)+1` and last `floor(n/2)`
//!   predecessors.
//! * `Harmonic` — odd layers keep only the immediate predecessor; even
//!   layers keep predecessors at power-of-two offsets (`i - 2^m`).
//! * `ThresholdAb(t)` — dense up to layer `t`, harmonic above it.
//! * `ThresholdBc(t)` — a sparse window of width `t` (with `floor(t/4)`
//!   margins) up to layer `t`, harmonic above it.
//!
//! All functions here are pure; a [`BlockTopology`] is immutable once built.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// In-block layer index. `0` is the block input, `1..=L` are layers.
pub type LayerId = usize;

/// Errors from topology generation and parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyError {
    /// Layer 0 is the block input; it has no inputs of its own.
    InvalidLayer(LayerId),
    /// A block must contain at least one layer.
    EmptyBlock,
    /// A mode parameter (window width or threshold) must be >= 1.
    InvalidModeParameter(&'static str, usize),
    /// A textual table or JSON document did not describe a valid topology.
    Malformed(String),
}

impl fmt::Display for TopologyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyError::InvalidLayer(i) => {
                write!(f, "layer {i} has no input set (0 denotes the block input)")
            }
            TopologyError::EmptyBlock => write!(f, "block must contain at least one layer"),
            TopologyError::InvalidModeParameter(name, v) => {
                write!(f, "{name} must be >= 1 (got {v})")
            }
            TopologyError::Malformed(msg) => write!(f, "malformed topology: {msg}"),
        }
    }
}

impl std::error::Error for TopologyError {}

/// Which rule wires a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ConnectionMode {
    /// Every layer consumes all predecessors.
    Dense,
    /// Keep the first `floor(window/2)+1` and last `floor(window/2)` predecessors.
    SparseWindow { window: usize },
    /// Odd layers keep `{i-1}`; even layers keep `{i - 2^m}` offsets.
    Harmonic,
    /// Dense below the threshold, harmonic above it.
    ThresholdAb { threshold: usize },
    /// Sparse window (margins `floor(threshold/4)`) below the threshold,
    /// harmonic above it. The window width and the switch point are the
    /// same number.
    ThresholdBc { threshold: usize },
}

impl ConnectionMode {
    /// Checks the mode's parameter constraints.
    pub fn validate(&self) -> Result<(), TopologyError> {
        match *self {
            ConnectionMode::SparseWindow { window: 0 } => {
                Err(TopologyError::InvalidModeParameter("window", 0))
            }
            ConnectionMode::ThresholdAb { threshold: 0 } => {
                Err(TopologyError::InvalidModeParameter("threshold", 0))
            }
            ConnectionMode::ThresholdBc { threshold: 0 } => {
                Err(TopologyError::InvalidModeParameter("threshold", 0))
            }
            _ => Ok(()),
        }
    }

    /// True when layer `i` falls in the harmonic region of this mode.
    ///
    /// For the threshold modes that is `i > t`; for `Harmonic` it is every
    /// layer; `Dense` and `SparseWindow` have no harmonic region.
    pub fn in_harmonic_region(&self, i: LayerId) -> bool {
        match *self {
            ConnectionMode::Dense | ConnectionMode::SparseWindow { .. } => false,
            ConnectionMode::Harmonic => true,
            ConnectionMode::ThresholdAb { threshold } | ConnectionMode::ThresholdBc { threshold } => {
                i > threshold
            }
        }
    }
}

// Display and FromStr share one canonical spelling: "dense", "sparse:4",
// "harmonic", "threshold-ab:8", "threshold-bc:8".
impl fmt::Display for ConnectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ConnectionMode::Dense => write!(f, "dense"),
            ConnectionMode::SparseWindow { window } => write!(f, "sparse:{window}"),
            ConnectionMode::Harmonic => write!(f, "harmonic"),
            ConnectionMode::ThresholdAb { threshold } => write!(f, "threshold-ab:{threshold}"),
            ConnectionMode::ThresholdBc { threshold } => write!(f, "threshold-bc:{threshold}"),
        }
    }
}

impl FromStr for ConnectionMode {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let parse_param = |p: Option<&str>| -> Result<usize, TopologyError> {
            let raw = p.ok_or_else(|| {
                TopologyError::Malformed(format!("mode '{name}' needs a parameter, e.g. '{name}:8'"))
            })?;
            raw.parse::<usize>()
                .map_err(|_| TopologyError::Malformed(format!("bad mode parameter '{raw}'")))
        };
        let mode = match name {
            "dense" => ConnectionMode::Dense,
            "sparse" => ConnectionMode::SparseWindow { window: parse_param(param)? },
            "harmonic" => ConnectionMode::Harmonic,
            "threshold-ab" => ConnectionMode::ThresholdAb { threshold: parse_param(param)? },
            "threshold-bc" => ConnectionMode::ThresholdBc { threshold: parse_param(param)? },
            other => return Err(TopologyError::Malformed(format!("unknown mode '{other}'"))),
        };
        mode.validate()?;
        Ok(mode)
    }
}

/// Input sets for every layer of one block.
///
/// `inputs[i - 1]` is the ascending, duplicate-free input set of layer `i`.
/// Every set is non-empty, contains only indices `< i`, and contains `i - 1`
/// (each rule keeps the immediate predecessor).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTopology {
    layer_count: usize,
    inputs: Vec<Vec<LayerId>>,
}

impl BlockTopology {
    /// Builds a topology from explicit input sets, validating the invariants.
    pub fn new(layer_count: usize, inputs: Vec<Vec<LayerId>>) -> Result<Self, TopologyError> {
        if layer_count == 0 {
            return Err(TopologyError::EmptyBlock);
        }
        if inputs.len() != layer_count {
            return Err(TopologyError::Malformed(format!(
                "expected {} input sets, got {}",
                layer_count,
                inputs.len()
            )));
        }
        for (idx, set) in inputs.iter().enumerate() {
            let i = idx + 1;
            if set.is_empty() {
                return Err(TopologyError::Malformed(format!("layer {i} has no inputs")));
            }
            if !set.windows(2).all(|w| w[0] < w[1]) {
                return Err(TopologyError::Malformed(format!(
                    "layer {i} inputs are not strictly ascending"
                )));
            }
            if *set.last().unwrap() != i - 1 {
                return Err(TopologyError::Malformed(format!(
                    "layer {i} must list its immediate predecessor {} last",
                    i - 1
                )));
            }
        }
        Ok(BlockTopology { layer_count, inputs })
    }

    pub fn layer_count(&self) -> usize {
        self.layer_count
    }

    /// Input set of layer `i` (1-based).
    pub fn inputs(&self, i: LayerId) -> &[LayerId] {
        &self.inputs[i - 1]
    }

    /// Iterator over `(layer, inputs)` pairs in layer order.
    pub fn iter(&self) -> impl Iterator<Item = (LayerId, &[LayerId])> {
        self.inputs.iter().enumerate().map(|(idx, set)| (idx + 1, set.as_slice()))
    }

    /// Total number of connections, `sum_i |inputs(i)|`.
    pub fn connection_count(&self) -> usize {
        self.inputs.iter().map(Vec::len).sum()
    }

    /// Renders the block as hyphen-joined rows, one per layer: `"0-4-6-7"`.
    pub fn to_table(&self) -> String {
        self.iter().map(|(_, set)| row_to_string(set)).collect::<Vec<_>>().join("\n")
    }

    /// Parses the output of [`BlockTopology::to_table`].
    pub fn parse_table(text: &str) -> Result<Self, TopologyError> {
        let rows: Vec<Vec<LayerId>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(parse_row)
            .collect::<Result<_, _>>()?;
        BlockTopology::new(rows.len(), rows)
    }

    /// Serializes to the documented JSON shape:
    /// `{"layer_count": L, "inputs": [[..], ..]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serialization cannot fail")
    }

    /// Renders the block as a standalone DOT digraph, one node per layer
    /// and one edge per connection.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph block {\n  rankdir=LR;\n  node [shape=circle];\n");
        out.push_str("  x0 [label=\"x0\"];\n");
        for (i, _) in self.iter() {
            out.push_str(&format!("  x{i} [label=\"x{i}\"];\n"));
        }
        for (i, inputs) in self.iter() {
            for &j in inputs {
                out.push_str(&format!("  x{j} -> x{i};\n"));
            }
        }
        out.push_str("}\n");
        out
    }

    /// Parses and validates the JSON produced by [`BlockTopology::to_json`].
    pub fn from_json(text: &str) -> Result<Self, TopologyError> {
        let raw: BlockTopology = serde_json::from_str(text)
            .map_err(|e| TopologyError::Malformed(format!("bad topology JSON: {e}")))?;
        BlockTopology::new(raw.layer_count, raw.inputs)
    }
}

/// One table row: ascending indices joined by hyphens.
pub fn row_to_string(set: &[LayerId]) -> String {
    set.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-")
}

fn parse_row(row: &str) -> Result<Vec<LayerId>, TopologyError> {
    row.split('-')
        .map(|tok| {
            tok.trim()
                .parse::<LayerId>()
                .map_err(|_| TopologyError::Malformed(format!("bad table row '{row}'")))
        })
        .collect()
}

/// Dense rule: layer `i` consumes every predecessor `{0, .., i-1}`.
pub fn dense_inputs(i: LayerId) -> Result<Vec<LayerId>, TopologyError> {
    if i == 0 {
        return Err(TopologyError::InvalidLayer(0));
    }
    Ok((0..i).collect())
}

/// Sparse rule with half-window margins: keeps `{0..floor(n/2)}` and
/// `{i-floor(n/2)..i-1}`, clipped to valid predecessors.
pub fn sparse_inputs(i: LayerId, window: usize) -> Result<Vec<LayerId>, TopologyError> {
    if i == 0 {
        return Err(TopologyError::InvalidLayer(0));
    }
    if window == 0 {
        return Err(TopologyError::InvalidModeParameter("window", 0));
    }
    Ok(two_window(i, window / 2))
}

/// Sparse rule with quarter-window margins: keeps `{0..floor(n/4)}` and
/// `{i-floor(n/4)..i-1}`, clipped to valid predecessors.
pub fn window_inputs(i: LayerId, window: usize) -> Result<Vec<LayerId>, TopologyError> {
    if i == 0 {
        return Err(TopologyError::InvalidLayer(0));
    }
    if window == 0 {
        return Err(TopologyError::InvalidModeParameter("window", 0));
    }
    Ok(two_window(i, window / 4))
}

/// `{0..=margin} ∪ {i-margin..=i-1}`, intersected with `{0..=i-1}`.
fn two_window(i: LayerId, margin: usize) -> Vec<LayerId> {
    let mut set: Vec<LayerId> = (0..=margin.min(i - 1)).collect();
    for j in i.saturating_sub(margin)..i {
        if set.last().is_none_or(|&last| j > last) {
            set.push(j);
        }
    }
    set
}

/// Harmonic rule: odd layers keep `{i-1}`; even layers keep every
/// `i - 2^m >= 0`.
pub fn harmonic_inputs(i: LayerId) -> Result<Vec<LayerId>, TopologyError> {
    if i == 0 {
        return Err(TopologyError::InvalidLayer(0));
    }
    if i % 2 == 1 {
        return Ok(vec![i - 1]);
    }
    let mut set = Vec::new();
    let mut offset = 1usize;
    while offset <= i {
        set.push(i - offset);
        offset *= 2;
    }
    set.reverse();
    Ok(set)
}

/// Input set of layer `i` under `mode`.
///
/// Unlike the raw window rules, this always keeps the immediate predecessor:
/// a degenerate window (margin 0 under a tiny threshold) would otherwise drop
/// the one connection every rule shares.
pub fn mode_inputs(i: LayerId, mode: ConnectionMode) -> Result<Vec<LayerId>, TopologyError> {
    mode.validate()?;
    let mut set = match mode {
        ConnectionMode::Dense => dense_inputs(i)?,
        ConnectionMode::SparseWindow { window } => sparse_inputs(i, window)?,
        ConnectionMode::Harmonic => harmonic_inputs(i)?,
        ConnectionMode::ThresholdAb { threshold } => {
            if i <= threshold {
                dense_inputs(i)?
            } else {
                harmonic_inputs(i)?
            }
        }
        ConnectionMode::ThresholdBc { threshold } => {
            if i <= threshold {
                window_inputs(i, threshold)?
            } else {
                harmonic_inputs(i)?
            }
        }
    };
    if *set.last().unwrap() != i - 1 {
        set.push(i - 1);
    }
    Ok(set)
}

/// Generates the full input-set table for a block of `layers` layers.
pub fn build_block_topology(
    layers: usize,
    mode: ConnectionMode,
) -> Result<BlockTopology, TopologyError> {
    if layers == 0 {
        return Err(TopologyError::EmptyBlock);
    }
    mode.validate()?;
    let inputs = (1..=layers).map(|i| mode_inputs(i, mode)).collect::<Result<Vec<_>, _>>()?;
    BlockTopology::new(layers, inputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_rule_examples() {
        assert_eq!(dense_inputs(4).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(dense_inputs(1).unwrap(), vec![0]);
        assert_eq!(dense_inputs(7).unwrap(), vec![0, 1, 2, 3, 4, 5, 6]);
        assert_eq!(dense_inputs(0), Err(TopologyError::InvalidLayer(0)));
    }

    #[test]
    fn sparse_rule_examples() {
        // Overlapping windows collapse to dense.
        assert_eq!(sparse_inputs(3, 4).unwrap(), vec![0, 1, 2]);
        assert_eq!(sparse_inputs(8, 4).unwrap(), vec![0, 1, 2, 6, 7]);
        assert_eq!(sparse_inputs(10, 6).unwrap(), vec![0, 1, 2, 3, 7, 8, 9]);
        assert_eq!(sparse_inputs(0, 4), Err(TopologyError::InvalidLayer(0)));
    }

    #[test]
    fn window_rule_examples() {
        assert_eq!(window_inputs(6, 8).unwrap(), vec![0, 1, 2, 4, 5]);
        assert_eq!(window_inputs(8, 12).unwrap(), vec![0, 1, 2, 3, 5, 6, 7]);
        // Windows overlap below the cutoff, so the row equals dense.
        assert_eq!(window_inputs(5, 8).unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(window_inputs(0, 8), Err(TopologyError::InvalidLayer(0)));
    }

    #[test]
    fn harmonic_rule_examples() {
        assert_eq!(harmonic_inputs(8).unwrap(), vec![0, 4, 6, 7]);
        assert_eq!(harmonic_inputs(16).unwrap(), vec![0, 8, 12, 14, 15]);
        assert_eq!(harmonic_inputs(9).unwrap(), vec![8]);
        assert_eq!(harmonic_inputs(10).unwrap(), vec![2, 6, 8, 9]);
        // Canonical power-of-two rule; the printed reference row for layer 6
        // omits the offset 2 and is tracked as a fixture deviation.
        assert_eq!(harmonic_inputs(6).unwrap(), vec![2, 4, 5]);
        assert_eq!(harmonic_inputs(0), Err(TopologyError::InvalidLayer(0)));
    }

    #[test]
    fn odd_harmonic_layers_have_exactly_one_input() {
        for i in (1..=63).step_by(2) {
            assert_eq!(harmonic_inputs(i).unwrap().len(), 1);
        }
    }

    #[test]
    fn threshold_at_or_above_depth_degenerates_to_dense() {
        let ab = build_block_topology(5, ConnectionMode::ThresholdAb { threshold: 5 }).unwrap();
        let dense = build_block_topology(5, ConnectionMode::Dense).unwrap();
        assert_eq!(ab, dense);
    }

    #[test]
    fn connection_totals() {
        let count = |mode| build_block_topology(16, mode).unwrap().connection_count();
        assert_eq!(count(ConnectionMode::ThresholdBc { threshold: 8 }), 51);
        assert_eq!(count(ConnectionMode::ThresholdBc { threshold: 12 }), 74);
        assert_eq!(count(ConnectionMode::Dense), 136);
        // The printed reference table sums to 39; its accompanying text
        // claims 38. The generator agrees with the printed rows.
        assert_eq!(count(ConnectionMode::ThresholdBc { threshold: 4 }), 39);
    }

    #[test]
    fn degenerate_windows_keep_the_immediate_predecessor() {
        // Raw quarter-window with margin 0 drops layer i-1; the block
        // generator must not.
        assert_eq!(window_inputs(2, 2).unwrap(), vec![0]);
        let topo = build_block_topology(4, ConnectionMode::ThresholdBc { threshold: 2 }).unwrap();
        assert_eq!(topo.inputs(2), &[0, 1]);
        for (i, set) in topo.iter() {
            assert!(set.contains(&(i - 1)));
        }
    }

    #[test]
    fn empty_block_rejected() {
        assert_eq!(
            build_block_topology(0, ConnectionMode::Dense),
            Err(TopologyError::EmptyBlock)
        );
    }

    #[test]
    fn zero_parameters_rejected() {
        assert!(build_block_topology(4, ConnectionMode::ThresholdBc { threshold: 0 }).is_err());
        assert!(build_block_topology(4, ConnectionMode::SparseWindow { window: 0 }).is_err());
        assert!(sparse_inputs(3, 0).is_err());
    }

    #[test]
    fn table_rendering() {
        let topo = build_block_topology(16, ConnectionMode::ThresholdAb { threshold: 4 }).unwrap();
        let table = topo.to_table();
        let rows: Vec<&str> = table.lines().collect();
        assert_eq!(rows[7], "0-4-6-7");
        assert_eq!(rows[0], "0");
        assert_eq!(rows[15], "0-8-12-14-15");
    }

    #[test]
    fn table_round_trip() {
        for mode in [
            ConnectionMode::Dense,
            ConnectionMode::Harmonic,
            ConnectionMode::SparseWindow { window: 6 },
            ConnectionMode::ThresholdAb { threshold: 4 },
            ConnectionMode::ThresholdBc { threshold: 8 },
        ] {
            let topo = build_block_topology(16, mode).unwrap();
            let parsed = BlockTopology::parse_table(&topo.to_table()).unwrap();
            assert_eq!(parsed, topo);
        }
    }

    #[test]
    fn json_round_trip() {
        let topo = build_block_topology(16, ConnectionMode::ThresholdBc { threshold: 12 }).unwrap();
        let parsed = BlockTopology::from_json(&topo.to_json()).unwrap();
        assert_eq!(parsed, topo);
    }

    #[test]
    fn json_validation_rejects_corrupt_documents() {
        assert!(BlockTopology::from_json(r#"{"layer_count":2,"inputs":[[0]]}"#).is_err());
        assert!(BlockTopology::from_json(r#"{"layer_count":2,"inputs":[[0],[0]]}"#).is_err());
        assert!(BlockTopology::from_json(r#"{"layer_count":2,"inputs":[[0],[1,0]]}"#).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("dense".parse::<ConnectionMode>().unwrap(), ConnectionMode::Dense);
        assert_eq!(
            "threshold-bc:8".parse::<ConnectionMode>().unwrap(),
            ConnectionMode::ThresholdBc { threshold: 8 }
        );
        assert_eq!(
            "sparse:6".parse::<ConnectionMode>().unwrap(),
            ConnectionMode::SparseWindow { window: 6 }
        );
        assert!("threshold-ab".parse::<ConnectionMode>().is_err());
        assert!("woven".parse::<ConnectionMode>().is_err());
        assert!("sparse:0".parse::<ConnectionMode>().is_err());
        for mode in ["dense", "harmonic", "sparse:3", "threshold-ab:4", "threshold-bc:12"] {
            let parsed: ConnectionMode = mode.parse().unwrap();
            assert_eq!(parsed.to_string(), mode);
        }
    }
}
