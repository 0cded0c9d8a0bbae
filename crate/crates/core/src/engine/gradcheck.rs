//! Central-difference certification of the analytic gradients.
//!
//! The numeric side perturbs one trainable scalar at a time and re-runs the
//! training-mode forward pass; it never touches the reverse-mode code it
//! certifies. Cost is two forward passes per scalar, so keep graphs at
//! desk scale.

use crate::arch::NetworkGraph;
use crate::engine::model::{init_weights, ModelInstance};
use crate::engine::tensor::Tensor;
use crate::engine::EngineError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central-difference step.
pub const FD_EPSILON: f64 = 1e-5;

/// Worst disagreement between analytic and numeric gradients.
#[derive(Debug, Clone, Copy)]
pub struct WorstCase {
    pub node: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

/// Result of a gradient check; failure is a result, not an error.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checked: usize,
    pub tolerance: f64,
    pub max_rel_error: f64,
    pub worst: Option<WorstCase>,
    pub passed: bool,
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} gradients checked, max relative error {:.3e} (tolerance {:.1e})",
            if self.passed { "pass" } else { "FAIL" },
            self.checked,
            self.max_rel_error,
            self.tolerance
        )?;
        if let Some(w) = &self.worst {
            write!(
                f,
                "; worst at node {} index {}: analytic {:.6e} vs numeric {:.6e}",
                w.node, w.index, w.analytic, w.numeric
            )?;
        }
        Ok(())
    }
}

/// Central finite differences of the loss for every trainable scalar.
/// Perturbs weights in place and restores them bit-exactly.
pub fn numeric_gradients(
    model: &mut ModelInstance,
    input: &Tensor,
    labels: &[usize],
    epsilon: f64,
) -> Result<Vec<Vec<f64>>, EngineError> {
    let mut grads: Vec<Vec<f64>> = model.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    for (node, node_grads) in grads.iter_mut().enumerate() {
        for (index, grad) in node_grads.iter_mut().enumerate() {
            let original = model.weights[node][index];
            model.weights[node][index] = original + epsilon;
            let plus = model.loss_only(input, labels)?;
            model.weights[node][index] = original - epsilon;
            let minus = model.loss_only(input, labels)?;
            model.weights[node][index] = original;
            *grad = (plus - minus) / (2.0 * epsilon);
        }
    }
    Ok(grads)
}

/// Relative error with a floor on the denominator, so vanishing gradients
/// are compared near-absolutely.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares two gradient sets and reports the worst relative error.
pub fn compare_gradients(
    analytic: &[Vec<f64>],
    numeric: &[Vec<f64>],
    tolerance: f64,
) -> GradCheckReport {
    let mut checked = 0;
    let mut max_rel_error: f64 = 0.0;
    let mut worst = None;
    for (node, (a_node, n_node)) in analytic.iter().zip(numeric.iter()).enumerate() {
        for (index, (&a, &n)) in a_node.iter().zip(n_node.iter()).enumerate() {
            checked += 1;
            let rel = relative_error(a, n);
            if rel > max_rel_error {
                max_rel_error = rel;
                worst = Some(WorstCase { node, index, analytic: a, numeric: n, rel_error: rel });
            }
        }
    }
    GradCheckReport { checked, tolerance, max_rel_error, worst, passed: max_rel_error <= tolerance }
}

/// Micro-graph exercising the sequential ops: conv, batchnorm, relu,
/// max pool, global average pool and the fully-connected classifier.
pub fn unit_chain_micrograph() -> NetworkGraph {
    use crate::arch::{Node, OpKind, Shape};
    let input = Shape { channels: 2, height: 6, width: 6 };
    let conv = Shape { channels: 3, height: 6, width: 6 };
    let pooled = Shape { channels: 3, height: 3, width: 3 };
    let gap = Shape { channels: 3, height: 1, width: 1 };
    let logits = Shape { channels: 4, height: 1, width: 1 };
    let nodes = vec![
        Node { id: 0, name: "input".into(), op: OpKind::Input, inputs: vec![], output_shape: input },
        Node {
            id: 1,
            name: "conv".into(),
            op: OpKind::Conv { kh: 3, kw: 3, stride: 1, pad: 1, in_ch: 2, out_ch: 3, has_bias: false },
            inputs: vec![0],
            output_shape: conv,
        },
        Node { id: 2, name: "bn".into(), op: OpKind::BatchNorm { ch: 3 }, inputs: vec![1], output_shape: conv },
        Node { id: 3, name: "relu".into(), op: OpKind::Relu, inputs: vec![2], output_shape: conv },
        Node {
            id: 4,
            name: "pool".into(),
            op: OpKind::MaxPool { kernel: 2, stride: 2, pad: 0 },
            inputs: vec![3],
            output_shape: pooled,
        },
        Node { id: 5, name: "gap".into(), op: OpKind::GlobalAvgPool, inputs: vec![4], output_shape: gap },
        Node {
            id: 6,
            name: "fc".into(),
            op: OpKind::FullyConnected { in_features: 3, out_features: 4 },
            inputs: vec![5],
            output_shape: logits,
        },
        Node { id: 7, name: "softmax".into(), op: OpKind::Softmax, inputs: vec![6], output_shape: logits },
    ];
    NetworkGraph { input_shape: input, nodes, stages: vec![] }
}

/// Micro-graph with two convolution branches joined by a concat, so the
/// gradient split across branches is exercised.
pub fn branching_micrograph() -> NetworkGraph {
    use crate::arch::{Node, OpKind, Shape};
    let input = Shape { channels: 2, height: 5, width: 5 };
    let a = Shape { channels: 2, height: 5, width: 5 };
    let b = Shape { channels: 3, height: 5, width: 5 };
    let joined = Shape { channels: 5, height: 5, width: 5 };
    let gap = Shape { channels: 5, height: 1, width: 1 };
    let logits = Shape { channels: 3, height: 1, width: 1 };
    let nodes = vec![
        Node { id: 0, name: "input".into(), op: OpKind::Input, inputs: vec![], output_shape: input },
        Node {
            id: 1,
            name: "branch_a".into(),
            op: OpKind::Conv { kh: 1, kw: 1, stride: 1, pad: 0, in_ch: 2, out_ch: 2, has_bias: false },
            inputs: vec![0],
            output_shape: a,
        },
        Node {
            id: 2,
            name: "branch_b".into(),
            op: OpKind::Conv { kh: 3, kw: 3, stride: 1, pad: 1, in_ch: 2, out_ch: 3, has_bias: false },
            inputs: vec![0],
            output_shape: b,
        },
        Node { id: 3, name: "concat".into(), op: OpKind::Concat, inputs: vec![1, 2], output_shape: joined },
        Node { id: 4, name: "relu".into(), op: OpKind::Relu, inputs: vec![3], output_shape: joined },
        Node { id: 5, name: "gap".into(), op: OpKind::GlobalAvgPool, inputs: vec![4], output_shape: gap },
        Node {
            id: 6,
            name: "fc".into(),
            op: OpKind::FullyConnected { in_features: 5, out_features: 3 },
            inputs: vec![5],
            output_shape: logits,
        },
        Node { id: 7, name: "softmax".into(), op: OpKind::Softmax, inputs: vec![6], output_shape: logits },
    ];
    NetworkGraph { input_shape: input, nodes, stages: vec![] }
}

/// Seeds a model on `graph`, drives it with a synthetic batch of two, and
/// checks every analytic gradient against central differences.
pub fn grad_check(
    graph: &NetworkGraph,
    tolerance: f64,
    seed: u64,
) -> Result<GradCheckReport, EngineError> {
    let mut model = init_weights(graph, seed);
    let batch = 2;
    let shape = graph.input_shape;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e3779b9));
    let data: Vec<f64> = (0..batch * shape.channels * shape.height * shape.width)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let input = Tensor::from_vec(batch, shape.channels, shape.height, shape.width, data);
    let classes = model.classes()?;
    let labels: Vec<usize> = (0..batch).map(|b| b % classes).collect();

    let (_, analytic) = model.clone().loss_and_grad(&input, &labels)?;
    let numeric = numeric_gradients(&mut model, &input, &labels, FD_EPSILON)?;
    Ok(compare_gradients(&analytic, &numeric, tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn micrographs_pass_at_default_tolerance() {
        for (name, graph) in
            [("unit chain", unit_chain_micrograph()), ("branching", branching_micrograph())]
        {
            let report = grad_check(&graph, 1e-4, 7).unwrap();
            assert!(report.passed, "{name}: {report}");
            assert!(report.checked > 0);
        }
    }

    #[test]
    fn corrupted_gradients_fail_with_localized_report() {
        let graph = unit_chain_micrograph();
        let mut model = init_weights(&graph, 7);
        let input = Tensor::from_vec(
            2,
            2,
            6,
            6,
            (0..2 * 2 * 36).map(|i| ((i * 37 % 101) as f64 / 50.5) - 1.0).collect(),
        );
        let labels = [0usize, 1];
        let (_, mut analytic) = model.clone().loss_and_grad(&input, &labels).unwrap();
        let numeric = numeric_gradients(&mut model, &input, &labels, FD_EPSILON).unwrap();
        // Fault injection: break one conv weight gradient.
        analytic[1][4] += 0.5;
        let report = compare_gradients(&analytic, &numeric, 1e-4);
        assert!(!report.passed);
        let worst = report.worst.unwrap();
        assert_eq!((worst.node, worst.index), (1, 4));
    }

    #[test]
    fn relative_error_floors_tiny_denominators() {
        assert!(relative_error(0.0, 0.0) == 0.0);
        assert!(relative_error(1e-9, -1e-9) < 1e-2);
        assert!(relative_error(1.0, 2.0) == 0.5);
    }
}
