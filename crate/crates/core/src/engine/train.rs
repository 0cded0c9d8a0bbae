//! Plain SGD on a fixed in-memory batch, used as a desk-scale trainability
//! check: a correct engine must be able to memorize a handful of points.

use crate::engine::model::ModelInstance;
use crate::engine::tensor::Tensor;
use crate::engine::EngineError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Standard-normal pixels with round-robin labels; deterministic in `seed`.
pub fn synthetic_dataset(
    samples: usize,
    classes: usize,
    channels: usize,
    height: usize,
    width: usize,
    seed: u64,
) -> (Tensor, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = samples * channels * height * width;
    let data = StandardNormal.sample_iter(&mut rng).take(count).collect();
    let labels = (0..samples).map(|i| i % classes).collect();
    (Tensor::from_vec(samples, channels, height, width, data), labels)
}

/// Full-batch SGD without momentum or weight decay. Returns the per-step
/// loss trace (the loss *before* each update). Aborts with the step index
/// if the loss stops being finite.
pub fn train_toy(
    model: &mut ModelInstance,
    inputs: &Tensor,
    labels: &[usize],
    steps: usize,
    learning_rate: f64,
) -> Result<Vec<f64>, EngineError> {
    let mut trace = Vec::with_capacity(steps);
    for step in 0..steps {
        let (loss, grads) = model.loss_and_grad(inputs, labels)?;
        if !loss.is_finite() {
            return Err(EngineError::Diverged { step });
        }
        trace.push(loss);
        for (weights, grad) in model.weights.iter_mut().zip(grads.iter()) {
            for (w, g) in weights.iter_mut().zip(grad.iter()) {
                *w -= learning_rate * g;
            }
        }
    }
    Ok(trace)
}

/// Renders a loss trace as CSV: a `step,loss` header plus one row per step.
pub fn trace_to_csv(trace: &[f64]) -> String {
    let mut out = String::from("step,loss\n");
    for (step, loss) in trace.iter().enumerate() {
        out.push_str(&format!("{step},{loss:.12}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{build_network, toy};
    use crate::engine::model::init_weights;

    fn toy_setup(seed: u64) -> (ModelInstance, Tensor, Vec<usize>) {
        let graph = build_network(&toy()).unwrap();
        let model = init_weights(&graph, seed);
        let (inputs, labels) = synthetic_dataset(8, 8, 3, 32, 32, seed);
        (model, inputs, labels)
    }

    #[test]
    fn zero_steps_give_an_empty_trace() {
        let (mut model, inputs, labels) = toy_setup(7);
        let trace = train_toy(&mut model, &inputs, &labels, 0, 0.05).unwrap();
        assert!(trace.is_empty());
    }

    #[test]
    fn zero_learning_rate_keeps_the_loss_constant() {
        let (mut model, inputs, labels) = toy_setup(7);
        let trace = train_toy(&mut model, &inputs, &labels, 5, 0.0).unwrap();
        assert!(trace.windows(2).all(|w| w[0] == w[1]), "{trace:?}");
    }

    #[test]
    fn same_seed_gives_identical_traces() {
        let (mut a, inputs, labels) = toy_setup(7);
        let (mut b, _, _) = toy_setup(7);
        let ta = train_toy(&mut a, &inputs, &labels, 10, 0.05).unwrap();
        let tb = train_toy(&mut b, &inputs, &labels, 10, 0.05).unwrap();
        assert_eq!(ta, tb);
    }

    #[test]
    fn loss_decreases_on_the_toy_batch() {
        let (mut model, inputs, labels) = toy_setup(7);
        let trace = train_toy(&mut model, &inputs, &labels, 30, 0.05).unwrap();
        assert!(trace.last().unwrap() < trace.first().unwrap(), "{trace:?}");
    }

    #[test]
    fn trace_csv_shape() {
        let csv = trace_to_csv(&[2.0794, 1.5]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,loss");
        assert!(lines[1].starts_with("0,2.0794"));
        assert_eq!(lines.len(), 3);
    }
}
