//! Network recipes: stem, blocks, transitions, classifier.
//!
//! An [`ArchConfig`] is everything needed to build a concrete operator
//! graph. Three presets are built in, plus a desk-scale toy recipe used by
//! the training and gradient-check tooling. Configs can also be read from
//! and written to a flat `key = value` text format (see [`ArchConfig::from_flat`]).

use crate::topology::ConnectionMode;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

/// One stem convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConvSpec {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_channels: usize,
}

/// Stem pooling window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PoolSpec {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

/// Order of the per-layer composite unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnitOrder {
    /// Conv -> BatchNorm -> ReLU (threshold nets).
    ConvBnRelu,
    /// BatchNorm -> ReLU -> Conv (classic dense nets).
    BnReluConv,
}

impl fmt::Display for UnitOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitOrder::ConvBnRelu => write!(f, "conv-bn-relu"),
            UnitOrder::BnReluConv => write!(f, "bn-relu-conv"),
        }
    }
}

/// How a transition's reduction factor is applied to its input width.
///
/// The literal reading keeps `floor(theta * in)` channels. The alternative
/// reading removes that share instead, keeping `floor((1 - theta) * in)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReductionRule {
    KeepTheta,
    DropTheta,
}

impl ReductionRule {
    /// Transition output width for `input` channels under factor `theta`.
    pub fn apply(&self, theta: f64, input: usize) -> usize {
        let ratio = match self {
            ReductionRule::KeepTheta => theta,
            ReductionRule::DropTheta => 1.0 - theta,
        };
        (ratio * input as f64).floor() as usize
    }
}

impl fmt::Display for ReductionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionRule::KeepTheta => write!(f, "keep-theta"),
            ReductionRule::DropTheta => write!(f, "drop-theta"),
        }
    }
}

/// One block plus the transition that follows it.
///
/// The transition fields of the final block are ignored: the classifier
/// consumes that block's output directly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockConfig {
    pub depth: usize,
    pub mode: ConnectionMode,
    /// Channels appended by each layer (k).
    pub growth_rate: usize,
    /// Widening factor for even layers in the harmonic region (1 <= m < 2).
    pub even_multiplier: f64,
    /// Transition reduction factor theta (0 < theta <= 1).
    pub transition_reduction: f64,
    /// Whether the transition downsamples with a 2x2/2 max pool.
    pub transition_pool: bool,
}

/// Full network recipe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchConfig {
    pub input_height: usize,
    pub input_width: usize,
    pub input_channels: usize,
    pub stem_convs: Vec<ConvSpec>,
    pub stem_pool: Option<PoolSpec>,
    pub blocks: Vec<BlockConfig>,
    pub classifier_classes: usize,
    pub unit_order: UnitOrder,
    /// DenseNet-style 1x1 reduction to `4k` channels before each 3x3 conv.
    pub bottleneck: bool,
    pub reduction_rule: ReductionRule,
}

/// Configuration validation or parse failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

impl ArchConfig {
    /// Checks every field constraint. Builders call this first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.blocks.is_empty() {
            return Err(err("at least one block is required"));
        }
        if self.input_height == 0 || self.input_width == 0 || self.input_channels == 0 {
            return Err(err("input dimensions must be positive"));
        }
        if self.classifier_classes == 0 {
            return Err(err("classifier needs at least one class"));
        }
        for (i, conv) in self.stem_convs.iter().enumerate() {
            if conv.kernel == 0 || conv.stride == 0 || conv.out_channels == 0 {
                return Err(err(format!("stem conv {} has a zero dimension", i + 1)));
            }
        }
        if let Some(pool) = &self.stem_pool {
            if pool.kernel == 0 || pool.stride == 0 {
                return Err(err("stem pool has a zero dimension"));
            }
        }
        for (i, block) in self.blocks.iter().enumerate() {
            let b = i + 1;
            if block.depth == 0 {
                return Err(err(format!("block {b} has depth 0")));
            }
            if block.growth_rate == 0 {
                return Err(err(format!("block {b} has growth rate 0")));
            }
            if !(1.0..2.0).contains(&block.even_multiplier) {
                return Err(err(format!(
                    "block {b}: even multiplier must satisfy 1 <= m < 2, got {}",
                    block.even_multiplier
                )));
            }
            if !(block.transition_reduction > 0.0 && block.transition_reduction <= 1.0) {
                return Err(err(format!(
                    "block {b}: reduction must satisfy 0 < theta <= 1, got {}",
                    block.transition_reduction
                )));
            }
            block.mode.validate().map_err(|e| err(format!("block {b}: {e}")))?;
        }
        Ok(())
    }

    /// Overrides the input resolution (square).
    pub fn with_resolution(mut self, size: usize) -> Self {
        self.input_height = size;
        self.input_width = size;
        self
    }

    pub fn block_depths(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.depth).collect()
    }
}

/// Built-in recipe names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Densenet121,
    ThresholdnetV1,
    ThresholdnetV2,
}

impl Preset {
    pub const ALL: [Preset; 3] =
        [Preset::Densenet121, Preset::ThresholdnetV1, Preset::ThresholdnetV2];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Densenet121 => "densenet121",
            Preset::ThresholdnetV1 => "thresholdnet_v1",
            Preset::ThresholdnetV2 => "thresholdnet_v2",
        }
    }

    pub fn config(&self) -> ArchConfig {
        match self {
            Preset::Densenet121 => densenet121(),
            Preset::ThresholdnetV1 => thresholdnet(&[6, 8, 12, 16, 4]),
            Preset::ThresholdnetV2 => thresholdnet(&[6, 12, 16, 16, 4]),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "densenet121" => Ok(Preset::Densenet121),
            "thresholdnet_v1" => Ok(Preset::ThresholdnetV1),
            "thresholdnet_v2" => Ok(Preset::ThresholdnetV2),
            other => Err(err(format!(
                "unknown preset '{other}' (expected densenet121, thresholdnet_v1 or thresholdnet_v2)"
            ))),
        }
    }
}

/// Classic 121-layer dense net: 7x7/2 stem, blocks (6, 12, 24, 16) with
/// bottlenecks, growth 32, 0.5 transitions.
fn densenet121() -> ArchConfig {
    let block = |depth| BlockConfig {
        depth,
        mode: ConnectionMode::Dense,
        growth_rate: 32,
        even_multiplier: 1.0,
        transition_reduction: 0.5,
        transition_pool: true,
    };
    ArchConfig {
        input_height: 224,
        input_width: 224,
        input_channels: 3,
        stem_convs: vec![ConvSpec { kernel: 7, stride: 2, padding: 3, out_channels: 64 }],
        stem_pool: Some(PoolSpec { kernel: 3, stride: 2, padding: 1 }),
        blocks: vec![block(6), block(12), block(24), block(16)],
        classifier_classes: 1000,
        unit_order: UnitOrder::BnReluConv,
        bottleneck: true,
        reduction_rule: ReductionRule::KeepTheta,
    }
}

/// Threshold net skeleton shared by v1 and v2: two 3x3 stem convs
/// (32 then 64 channels), growth 32, dense blocks 1-3 with theta 0.5,
/// harmonic blocks 4-5 with theta 0.1, no pool after block 3.
fn thresholdnet(depths: &[usize]) -> ArchConfig {
    let blocks = depths
        .iter()
        .enumerate()
        .map(|(i, &depth)| {
            let harmonic = i >= 3;
            BlockConfig {
                depth,
                mode: if harmonic { ConnectionMode::Harmonic } else { ConnectionMode::Dense },
                growth_rate: 32,
                even_multiplier: 1.7,
                transition_reduction: if harmonic { 0.1 } else { 0.5 },
                transition_pool: i != 2 && i + 1 != depths.len(),
            }
        })
        .collect();
    ArchConfig {
        input_height: 224,
        input_width: 224,
        input_channels: 3,
        stem_convs: vec![
            ConvSpec { kernel: 3, stride: 2, padding: 1, out_channels: 32 },
            ConvSpec { kernel: 3, stride: 1, padding: 1, out_channels: 64 },
        ],
        stem_pool: Some(PoolSpec { kernel: 3, stride: 2, padding: 1 }),
        blocks,
        classifier_classes: 1000,
        unit_order: UnitOrder::ConvBnRelu,
        bottleneck: false,
        reduction_rule: ReductionRule::KeepTheta,
    }
}

/// Desk-scale threshold net: 32x32 input, blocks (2, 2) with a harmonic
/// second block, growth 4. Small enough to train and finite-difference in
/// seconds.
pub fn toy() -> ArchConfig {
    ArchConfig {
        input_height: 32,
        input_width: 32,
        input_channels: 3,
        stem_convs: vec![
            ConvSpec { kernel: 3, stride: 2, padding: 1, out_channels: 8 },
            ConvSpec { kernel: 3, stride: 1, padding: 1, out_channels: 16 },
        ],
        stem_pool: Some(PoolSpec { kernel: 3, stride: 2, padding: 1 }),
        blocks: vec![
            BlockConfig {
                depth: 2,
                mode: ConnectionMode::Dense,
                growth_rate: 4,
                even_multiplier: 1.7,
                transition_reduction: 0.5,
                transition_pool: true,
            },
            BlockConfig {
                depth: 2,
                mode: ConnectionMode::Harmonic,
                growth_rate: 4,
                even_multiplier: 1.7,
                transition_reduction: 0.5,
                transition_pool: false,
            },
        ],
        classifier_classes: 8,
        unit_order: UnitOrder::ConvBnRelu,
        bottleneck: false,
        reduction_rule: ReductionRule::KeepTheta,
    }
}

// ---------------------------------------------------------------------------
// Flat key-value format
// ---------------------------------------------------------------------------

impl ArchConfig {
    /// Parses the flat `key = value` format. `#` starts a comment; keys are:
    ///
    /// ```text
    /// input_height = 224
    /// input_width = 224
    /// input_channels = 3
    /// classes = 1000
    /// unit_order = conv-bn-relu        # or bn-relu-conv
    /// bottleneck = false
    /// reduction_rule = keep-theta      # or drop-theta
    /// stem = conv3x3/2p1:32, conv3x3/1p1:64, maxpool3x3/2p1
    /// block1.depth = 6
    /// block1.mode = dense              # dense | harmonic | sparse:N |
    ///                                  # threshold-ab:T | threshold-bc:T
    /// block1.growth = 32
    /// block1.multiplier = 1.7
    /// block1.reduction = 0.5
    /// block1.pool = true
    /// ```
    ///
    /// Blocks must be numbered contiguously from 1.
    pub fn from_flat(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ArchConfig {
            input_height: 224,
            input_width: 224,
            input_channels: 3,
            stem_convs: Vec::new(),
            stem_pool: None,
            blocks: Vec::new(),
            classifier_classes: 1000,
            unit_order: UnitOrder::ConvBnRelu,
            bottleneck: false,
            reduction_rule: ReductionRule::KeepTheta,
        };
        let mut block_fields: Vec<(usize, String, String)> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "input_height" => cfg.input_height = parse_num(key, value)?,
                "input_width" => cfg.input_width = parse_num(key, value)?,
                "input_channels" => cfg.input_channels = parse_num(key, value)?,
                "classes" => cfg.classifier_classes = parse_num(key, value)?,
                "unit_order" => {
                    cfg.unit_order = match value {
                        "conv-bn-relu" => UnitOrder::ConvBnRelu,
                        "bn-relu-conv" => UnitOrder::BnReluConv,
                        other => return Err(err(format!("unknown unit_order '{other}'"))),
                    }
                }
                "bottleneck" => cfg.bottleneck = parse_bool(key, value)?,
                "reduction_rule" => {
                    cfg.reduction_rule = match value {
                        "keep-theta" => ReductionRule::KeepTheta,
                        "drop-theta" => ReductionRule::DropTheta,
                        other => return Err(err(format!("unknown reduction_rule '{other}'"))),
                    }
                }
                "stem" => parse_stem(value, &mut cfg)?,
                _ => {
                    let (block_key, field) = key
                        .split_once('.')
                        .ok_or_else(|| err(format!("unknown key '{key}'")))?;
                    let index: usize = block_key
                        .strip_prefix("block")
                        .and_then(|n| n.parse().ok())
                        .ok_or_else(|| err(format!("unknown key '{key}'")))?;
                    block_fields.push((index, field.to_string(), value.to_string()));
                }
            }
        }

        let block_count = block_fields.iter().map(|(i, _, _)| *i).max().unwrap_or(0);
        if block_count == 0 {
            return Err(err("no blockN.* keys found"));
        }
        let mut blocks = vec![
            BlockConfig {
                depth: 0,
                mode: ConnectionMode::Dense,
                growth_rate: 32,
                even_multiplier: 1.7,
                transition_reduction: 0.5,
                transition_pool: false,
            };
            block_count
        ];
        for (index, field, value) in block_fields {
            let block = &mut blocks[index - 1];
            match field.as_str() {
                "depth" => block.depth = parse_num(&field, &value)?,
                "mode" => {
                    block.mode = value
                        .parse()
                        .map_err(|e| err(format!("block{index}.mode: {e}")))?
                }
                "growth" => block.growth_rate = parse_num(&field, &value)?,
                "multiplier" => block.even_multiplier = parse_float(&field, &value)?,
                "reduction" => block.transition_reduction = parse_float(&field, &value)?,
                "pool" => block.transition_pool = parse_bool(&field, &value)?,
                other => return Err(err(format!("unknown block field '{other}'"))),
            }
        }
        for (i, block) in blocks.iter().enumerate() {
            if block.depth == 0 {
                return Err(err(format!("block{}.depth missing", i + 1)));
            }
        }
        cfg.blocks = blocks;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Writes the flat format; `from_flat` round-trips it.
    pub fn to_flat(&self) -> String {
        let mut out = String::new();
        let mut push = |line: String| {
            out.push_str(&line);
            out.push('\n');
        };
        push(format!("input_height = {}", self.input_height));
        push(format!("input_width = {}", self.input_width));
        push(format!("input_channels = {}", self.input_channels));
        push(format!("classes = {}", self.classifier_classes));
        push(format!("unit_order = {}", self.unit_order));
        push(format!("bottleneck = {}", self.bottleneck));
        push(format!("reduction_rule = {}", self.reduction_rule));
        let mut stem: Vec<String> = self
            .stem_convs
            .iter()
            .map(|c| {
                format!("conv{k}x{k}/{s}p{p}:{c_out}", k = c.kernel, s = c.stride, p = c.padding, c_out = c.out_channels)
            })
            .collect();
        if let Some(pool) = &self.stem_pool {
            stem.push(format!(
                "maxpool{k}x{k}/{s}p{p}",
                k = pool.kernel,
                s = pool.stride,
                p = pool.padding
            ));
        }
        push(format!("stem = {}", stem.join(", ")));
        for (i, block) in self.blocks.iter().enumerate() {
            let b = i + 1;
            push(format!("block{b}.depth = {}", block.depth));
            push(format!("block{b}.mode = {}", block.mode));
            push(format!("block{b}.growth = {}", block.growth_rate));
            push(format!("block{b}.multiplier = {}", block.even_multiplier));
            push(format!("block{b}.reduction = {}", block.transition_reduction));
            push(format!("block{b}.pool = {}", block.transition_pool));
        }
        out
    }
}

fn parse_num(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| err(format!("{key}: expected an integer, got '{value}'")))
}

fn parse_float(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse().map_err(|_| err(format!("{key}: expected a number, got '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(err(format!("{key}: expected true or false, got '{value}'"))),
    }
}

/// Grammar: `conv{K}x{K}/{S}[p{P}]:{C}` entries, optionally ending with
/// `maxpool{K}x{K}/{S}[p{P}]`. Conv padding defaults to `K/2`, pool to 0.
fn parse_stem(value: &str, cfg: &mut ArchConfig) -> Result<(), ConfigError> {
    cfg.stem_convs.clear();
    cfg.stem_pool = None;
    for entry in value.split(',').map(str::trim).filter(|e| !e.is_empty()) {
        if let Some(rest) = entry.strip_prefix("conv") {
            if cfg.stem_pool.is_some() {
                return Err(err("stem pool must be the last stem entry"));
            }
            let (geom, channels) = rest
                .split_once(':')
                .ok_or_else(|| err(format!("stem conv '{entry}' missing ':channels'")))?;
            let (kernel, stride, padding) = parse_geometry(geom)?;
            cfg.stem_convs.push(ConvSpec {
                kernel,
                stride,
                padding: padding.unwrap_or(kernel / 2),
                out_channels: parse_num("stem channels", channels)?,
            });
        } else if let Some(geom) = entry.strip_prefix("maxpool") {
            let (kernel, stride, padding) = parse_geometry(geom)?;
            cfg.stem_pool = Some(PoolSpec { kernel, stride, padding: padding.unwrap_or(0) });
        } else {
            return Err(err(format!("unknown stem entry '{entry}'")));
        }
    }
    Ok(())
}

/// Parses `{K}x{K}/{S}[p{P}]` and returns (kernel, stride, padding).
fn parse_geometry(geom: &str) -> Result<(usize, usize, Option<usize>), ConfigError> {
    let (kernels, rest) =
        geom.split_once('/').ok_or_else(|| err(format!("geometry '{geom}' missing '/stride'")))?;
    let (kh, kw) =
        kernels.split_once('x').ok_or_else(|| err(format!("bad kernel spec '{kernels}'")))?;
    if kh != kw {
        return Err(err(format!("only square kernels are supported, got '{kernels}'")));
    }
    let kernel = parse_num("kernel", kh)?;
    let (stride, padding) = match rest.split_once('p') {
        Some((s, p)) => (parse_num("stride", s)?, Some(parse_num("padding", p)?)),
        None => (parse_num("stride", rest)?, None),
    };
    Ok((kernel, stride, padding))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for preset in Preset::ALL {
            preset.config().validate().unwrap();
        }
        toy().validate().unwrap();
    }

    #[test]
    fn preset_depths_and_rates() {
        let v1 = Preset::ThresholdnetV1.config();
        assert_eq!(v1.block_depths(), vec![6, 8, 12, 16, 4]);
        let v2 = Preset::ThresholdnetV2.config();
        assert_eq!(v2.block_depths(), vec![6, 12, 16, 16, 4]);
        let d121 = Preset::Densenet121.config();
        assert_eq!(d121.block_depths(), vec![6, 12, 24, 16]);
        assert!(d121.bottleneck);
        assert_eq!(d121.classifier_classes, 1000);
        for cfg in [&v1, &v2, &d121] {
            assert!(cfg.blocks.iter().all(|b| b.growth_rate == 32));
        }
    }

    #[test]
    fn thresholdnet_reductions_split_by_mode() {
        let v1 = Preset::ThresholdnetV1.config();
        for (i, block) in v1.blocks.iter().enumerate() {
            if i < 3 {
                assert_eq!(block.mode, ConnectionMode::Dense);
                assert_eq!(block.transition_reduction, 0.5);
            } else {
                assert_eq!(block.mode, ConnectionMode::Harmonic);
                assert_eq!(block.transition_reduction, 0.1);
            }
        }
        // No pooling between blocks 3 and 4.
        assert!(!v1.blocks[2].transition_pool);
        assert!(v1.blocks[0].transition_pool && v1.blocks[1].transition_pool);
        assert!(v1.blocks[3].transition_pool);
    }

    #[test]
    fn unknown_preset_rejected() {
        assert!("resnet50".parse::<Preset>().is_err());
        for preset in Preset::ALL {
            assert_eq!(preset.name().parse::<Preset>().unwrap(), preset);
        }
    }

    #[test]
    fn flat_round_trip() {
        for cfg in [
            Preset::Densenet121.config(),
            Preset::ThresholdnetV1.config(),
            Preset::ThresholdnetV2.config(),
            toy(),
        ] {
            let text = cfg.to_flat();
            let parsed = ArchConfig::from_flat(&text).unwrap();
            assert_eq!(parsed, cfg);
        }
    }

    #[test]
    fn flat_parse_diagnostics() {
        assert!(ArchConfig::from_flat("").is_err());
        assert!(ArchConfig::from_flat("volume = 11").is_err());
        assert!(ArchConfig::from_flat("block1.depth = -3").is_err());
        let missing_depth = "stem = conv3x3/1p1:8\nblock1.mode = dense\n";
        assert!(ArchConfig::from_flat(missing_depth).is_err());
        let bad_mode = "stem = conv3x3/1p1:8\nblock1.depth = 2\nblock1.mode = woven\n";
        assert!(ArchConfig::from_flat(bad_mode).is_err());
    }

    #[test]
    fn flat_accepts_comments_and_defaults() {
        let text = "\
# tiny two-block recipe
input_height = 32
input_width = 32
stem = conv3x3/1:8, maxpool3x3/2p1
classes = 4
block1.depth = 2
block2.depth = 2
block2.mode = threshold-bc:1
";
        let cfg = ArchConfig::from_flat(text).unwrap();
        assert_eq!(cfg.stem_convs[0].padding, 1); // defaulted to kernel/2
        assert_eq!(cfg.blocks.len(), 2);
        assert_eq!(cfg.blocks[1].mode, ConnectionMode::ThresholdBc { threshold: 1 });
        assert!(!cfg.blocks[0].transition_pool);
    }

    #[test]
    fn validation_catches_out_of_range_fields() {
        let mut cfg = toy();
        cfg.blocks[0].even_multiplier = 2.0;
        assert!(cfg.validate().is_err());
        let mut cfg = toy();
        cfg.blocks[0].transition_reduction = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = toy();
        cfg.blocks.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn reduction_rules() {
        assert_eq!(ReductionRule::KeepTheta.apply(0.5, 256), 128);
        assert_eq!(ReductionRule::KeepTheta.apply(0.1, 598), 59);
        assert_eq!(ReductionRule::DropTheta.apply(0.1, 598), 538);
        assert_eq!(ReductionRule::KeepTheta.apply(1.0, 64), 64);
    }
}
