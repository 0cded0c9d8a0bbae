//! Flat binary weight checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   4 bytes  "TNET"
//! version u32      1
//! records u32      number of node records
//! record: node id u32, scalar count u64, then count f64 values
//! ```
//!
//! Conv and fully-connected records hold their trainable scalars. Batchnorm
//! records hold `[gamma.., beta.., running_mean.., running_var..]` so a
//! reloaded model evaluates identically.

use crate::arch::{NetworkGraph, OpKind};
use crate::engine::model::{init_weights, BnState, ModelInstance};
use crate::engine::EngineError;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: [u8; 4] = *b"TNET";
const VERSION: u32 = 1;

fn corrupt(message: impl Into<String>) -> EngineError {
    EngineError::Checkpoint(message.into())
}

/// Serializes weights and batchnorm state.
pub fn save(model: &ModelInstance, writer: &mut impl Write) -> Result<(), EngineError> {
    let io = |e: std::io::Error| corrupt(format!("write failed: {e}"));
    let records: Vec<(u32, Vec<f64>)> = model
        .graph
        .nodes
        .iter()
        .filter_map(|node| {
            let mut scalars = model.weights[node.id].clone();
            if let Some(state) = &model.bn_state[node.id] {
                scalars.extend_from_slice(&state.mean);
                scalars.extend_from_slice(&state.var);
            }
            (!scalars.is_empty()).then_some((node.id as u32, scalars))
        })
        .collect();

    writer.write_all(&MAGIC).map_err(io)?;
    writer.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    writer.write_all(&(records.len() as u32).to_le_bytes()).map_err(io)?;
    for (id, scalars) in records {
        writer.write_all(&id.to_le_bytes()).map_err(io)?;
        writer.write_all(&(scalars.len() as u64).to_le_bytes()).map_err(io)?;
        for value in scalars {
            writer.write_all(&value.to_le_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

/// Restores a model for `graph`, validating ids and scalar counts.
pub fn load(graph: &NetworkGraph, reader: &mut impl Read) -> Result<ModelInstance, EngineError> {
    let io = |e: std::io::Error| corrupt(format!("read failed: {e}"));
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic).map_err(io)?;
    if magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut u32buf = [0u8; 4];
    reader.read_exact(&mut u32buf).map_err(io)?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    reader.read_exact(&mut u32buf).map_err(io)?;
    let records = u32::from_le_bytes(u32buf);

    let mut model = init_weights(graph, 0);
    let mut seen = vec![false; graph.nodes.len()];
    for _ in 0..records {
        reader.read_exact(&mut u32buf).map_err(io)?;
        let id = u32::from_le_bytes(u32buf) as usize;
        let mut u64buf = [0u8; 8];
        reader.read_exact(&mut u64buf).map_err(io)?;
        let count = u64::from_le_bytes(u64buf) as usize;
        if id >= graph.nodes.len() {
            return Err(corrupt(format!("record for unknown node {id}")));
        }
        if seen[id] {
            return Err(corrupt(format!("duplicate record for node {id}")));
        }
        seen[id] = true;
        let expected = expected_scalars(graph, id);
        if count != expected {
            return Err(corrupt(format!("node {id}: expected {expected} scalars, found {count}")));
        }
        let mut scalars = vec![0.0f64; count];
        let mut f64buf = [0u8; 8];
        for value in &mut scalars {
            reader.read_exact(&mut f64buf).map_err(io)?;
            *value = f64::from_le_bytes(f64buf);
        }
        let weight_len = model.weights[id].len();
        model.weights[id].copy_from_slice(&scalars[..weight_len]);
        if let OpKind::BatchNorm { ch } = graph.nodes[id].op {
            let rest = &scalars[weight_len..];
            model.bn_state[id] =
                Some(BnState { mean: rest[..ch].to_vec(), var: rest[ch..].to_vec() });
        }
    }
    for (id, node) in graph.nodes.iter().enumerate() {
        if expected_scalars(graph, id) > 0 && !seen[id] {
            return Err(corrupt(format!("missing record for node {id} ({})", node.name)));
        }
    }
    Ok(model)
}

fn expected_scalars(graph: &NetworkGraph, id: usize) -> usize {
    match graph.nodes[id].op {
        OpKind::Conv { kh, kw, in_ch, out_ch, has_bias, .. } => {
            out_ch * in_ch * kh * kw + if has_bias { out_ch } else { 0 }
        }
        OpKind::BatchNorm { ch } => 4 * ch,
        OpKind::FullyConnected { in_features, out_features } => {
            out_features * in_features + out_features
        }
        _ => 0,
    }
}

pub fn save_file(model: &ModelInstance, path: &Path) -> Result<(), EngineError> {
    let file = File::create(path).map_err(|e| corrupt(format!("create {path:?}: {e}")))?;
    let mut writer = BufWriter::new(file);
    save(model, &mut writer)?;
    writer.flush().map_err(|e| corrupt(format!("flush {path:?}: {e}")))
}

pub fn load_file(graph: &NetworkGraph, path: &Path) -> Result<ModelInstance, EngineError> {
    let file = File::open(path).map_err(|e| corrupt(format!("open {path:?}: {e}")))?;
    load(graph, &mut BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{build_network, toy};
    use crate::engine::tensor::Tensor;
    use crate::engine::train::{synthetic_dataset, train_toy};

    fn trained_model() -> (NetworkGraph, ModelInstance, Tensor) {
        let graph = build_network(&toy()).unwrap();
        let mut model = init_weights(&graph, 13);
        let (inputs, labels) = synthetic_dataset(4, 8, 3, 32, 32, 13);
        train_toy(&mut model, &inputs, &labels, 3, 0.05).unwrap();
        (graph, model, inputs)
    }

    #[test]
    fn round_trip_preserves_eval_output_bit_exactly() {
        let (graph, model, inputs) = trained_model();
        let mut buffer = Vec::new();
        save(&model, &mut buffer).unwrap();
        let restored = load(&graph, &mut buffer.as_slice()).unwrap();
        assert_eq!(model.weights, restored.weights);
        assert_eq!(model.bn_state, restored.bn_state);
        let a = model.forward_eval(&inputs).unwrap();
        let b = restored.forward_eval(&inputs).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn truncated_and_corrupt_files_are_rejected() {
        let (graph, model, _) = trained_model();
        let mut buffer = Vec::new();
        save(&model, &mut buffer).unwrap();

        let truncated = &buffer[..buffer.len() / 2];
        assert!(load(&graph, &mut &truncated[..]).is_err());

        let mut bad_magic = buffer.clone();
        bad_magic[0] = b'X';
        assert!(load(&graph, &mut bad_magic.as_slice()).is_err());

        let mut bad_version = buffer.clone();
        bad_version[4] = 9;
        assert!(load(&graph, &mut bad_version.as_slice()).is_err());
    }

    #[test]
    fn wrong_graph_is_rejected() {
        let (_, model, _) = trained_model();
        let mut buffer = Vec::new();
        save(&model, &mut buffer).unwrap();
        let mut other = toy();
        other.blocks[0].growth_rate = 6;
        let other_graph = build_network(&other).unwrap();
        assert!(load(&other_graph, &mut buffer.as_slice()).is_err());
    }
}
