//! Graph instantiation, forward execution and reverse-mode gradients.
//!
//! Everything runs in double precision with direct (loop-nest) convolution.
//! Batchnorm uses biased batch variance, epsilon 1e-5 and running-stat
//! momentum 0.1. Max-pool ties are broken by the first (lowest scan index)
//! element so backward routing is deterministic. The trailing softmax node
//! is evaluated for completeness but gradients start at the logits; the
//! cross-entropy loss applies a stable log-softmax itself.

// Index loops mirror the tensor arithmetic; iterator rewrites obscure it.
#![allow(clippy::needless_range_loop)]

use crate::arch::{NetworkGraph, NodeId, OpKind};
use crate::engine::tensor::Tensor;
use crate::engine::EngineError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Running batchnorm statistics (state, not parameters).
#[derive(Debug, Clone, PartialEq)]
pub struct BnState {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// A graph plus its trainable scalars and batchnorm state.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub graph: NetworkGraph,
    /// Per-node trainable scalars, indexed by node id; empty for
    /// parameter-free ops. Layouts: conv `[out][in][kh][kw]` (+ bias),
    /// batchnorm `[gamma..][beta..]`, fully-connected `[out][in]` + bias.
    pub weights: Vec<Vec<f64>>,
    pub bn_state: Vec<Option<BnState>>,
    pub seed: u64,
}

/// Saved forward context a node needs for its backward pass.
enum Aux {
    None,
    /// Batch statistics actually used to normalize.
    Bn { mean: Vec<f64>, var: Vec<f64> },
    /// Flat input offset of the winning element per output element.
    Pool { argmax: Vec<usize> },
}

/// Scaled-normal initialization (variance `2 / fan_in`) for conv and
/// fully-connected weights, zero biases, identity batchnorm. Deterministic
/// in `seed`.
pub fn init_weights(graph: &NetworkGraph, seed: u64) -> ModelInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(graph.nodes.len());
    let mut bn_state = Vec::with_capacity(graph.nodes.len());
    for node in &graph.nodes {
        let mut w = Vec::new();
        let mut state = None;
        match node.op {
            OpKind::Conv { kh, kw, in_ch, out_ch, has_bias, .. } => {
                let fan_in = (in_ch * kh * kw) as f64;
                let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).unwrap();
                w.extend((0..out_ch * in_ch * kh * kw).map(|_| normal.sample(&mut rng)));
                if has_bias {
                    w.extend(std::iter::repeat_n(0.0, out_ch));
                }
            }
            OpKind::BatchNorm { ch } => {
                w.extend(std::iter::repeat_n(1.0, ch)); // gamma
                w.extend(std::iter::repeat_n(0.0, ch)); // beta
                state = Some(BnState { mean: vec![0.0; ch], var: vec![1.0; ch] });
            }
            OpKind::FullyConnected { in_features, out_features } => {
                let normal = Normal::new(0.0, (2.0 / in_features as f64).sqrt()).unwrap();
                w.extend((0..out_features * in_features).map(|_| normal.sample(&mut rng)));
                w.extend(std::iter::repeat_n(0.0, out_features));
            }
            _ => {}
        }
        weights.push(w);
        bn_state.push(state);
    }
    ModelInstance { graph: graph.clone(), weights, bn_state, seed }
}

/// Id of the node whose activation is the logits: the input of the final
/// softmax, or the final fully-connected node when no softmax is present.
pub fn logits_node(graph: &NetworkGraph) -> Result<NodeId, EngineError> {
    if let Some(softmax) = graph.nodes.iter().rev().find(|n| matches!(n.op, OpKind::Softmax)) {
        return Ok(softmax.inputs[0]);
    }
    graph
        .nodes
        .iter()
        .rev()
        .find(|n| matches!(n.op, OpKind::FullyConnected { .. }))
        .map(|n| n.id)
        .ok_or(EngineError::MissingClassifier)
}

impl ModelInstance {
    /// Total count of trainable scalars; equals the analytic parameter total.
    pub fn trainable_scalar_count(&self) -> u64 {
        self.weights.iter().map(|w| w.len() as u64).sum()
    }

    pub fn classes(&self) -> Result<usize, EngineError> {
        let id = logits_node(&self.graph)?;
        Ok(self.graph.node(id).output_shape.channels)
    }

    /// Forward pass returning logits of shape `(batch, classes, 1, 1)`.
    /// In training mode batchnorm normalizes with batch statistics and
    /// updates the running state; in eval mode it uses the running state.
    pub fn forward(&mut self, input: &Tensor, training: bool) -> Result<Tensor, EngineError> {
        let logits = logits_node(&self.graph)?;
        let (acts, _aux, updates) = self.execute(input, training)?;
        if training {
            self.apply_bn_updates(updates);
        }
        Ok(acts[logits].clone().expect("logits activation present"))
    }

    /// Pure eval-mode forward; repeated calls are bit-identical.
    pub fn forward_eval(&self, input: &Tensor) -> Result<Tensor, EngineError> {
        let logits = logits_node(&self.graph)?;
        let (acts, _aux, _updates) = self.execute(input, false)?;
        Ok(acts[logits].clone().expect("logits activation present"))
    }

    /// Runs the graph and returns every node's activation, indexed by node
    /// id. Does not commit batchnorm running updates.
    pub fn activations(&self, input: &Tensor, training: bool) -> Result<Vec<Tensor>, EngineError> {
        let (acts, _aux, _updates) = self.execute(input, training)?;
        Ok(acts.into_iter().map(|a| a.expect("every node executed")).collect())
    }

    /// Training-mode loss without committing running-stat updates. This is
    /// the probe the finite-difference oracle uses.
    pub fn loss_only(&self, input: &Tensor, labels: &[usize]) -> Result<f64, EngineError> {
        let logits_id = logits_node(&self.graph)?;
        self.check_labels(labels, input.batch)?;
        let (acts, _aux, _updates) = self.execute(input, true)?;
        let logits = acts[logits_id].as_ref().unwrap();
        Ok(cross_entropy(logits, labels).0)
    }

    /// Mean softmax cross-entropy and the gradient of every trainable
    /// scalar, via reverse-mode accumulation. Commits batchnorm running
    /// updates, as one training step should.
    pub fn loss_and_grad(
        &mut self,
        input: &Tensor,
        labels: &[usize],
    ) -> Result<(f64, Vec<Vec<f64>>), EngineError> {
        let logits_id = logits_node(&self.graph)?;
        self.check_labels(labels, input.batch)?;
        let (acts, aux, updates) = self.execute(input, true)?;
        let logits = acts[logits_id].as_ref().unwrap();
        let (loss, dlogits) = cross_entropy(logits, labels);
        let grads = self.backward(logits_id, dlogits, &acts, &aux)?;
        self.apply_bn_updates(updates);
        Ok((loss, grads))
    }

    fn check_labels(&self, labels: &[usize], batch: usize) -> Result<(), EngineError> {
        let classes = self.classes()?;
        if labels.len() != batch {
            return Err(EngineError::Execution {
                node: None,
                message: format!("{} labels for batch {batch}", labels.len()),
            });
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(EngineError::InvalidLabel { index, label, classes });
        }
        Ok(())
    }

    fn apply_bn_updates(&mut self, updates: Vec<Option<BnState>>) {
        for (id, update) in updates.into_iter().enumerate() {
            if let (Some(update), Some(state)) = (update, self.bn_state[id].as_mut()) {
                for c in 0..state.mean.len() {
                    state.mean[c] = (1.0 - BN_MOMENTUM) * state.mean[c] + BN_MOMENTUM * update.mean[c];
                    state.var[c] = (1.0 - BN_MOMENTUM) * state.var[c] + BN_MOMENTUM * update.var[c];
                }
            }
        }
    }

    /// Runs every node, returning activations, backward context, and the
    /// batch statistics training mode would fold into the running state.
    #[allow(clippy::type_complexity)]
    fn execute(
        &self,
        input: &Tensor,
        training: bool,
    ) -> Result<(Vec<Option<Tensor>>, Vec<Aux>, Vec<Option<BnState>>), EngineError> {
        let n = self.graph.nodes.len();
        let mut acts: Vec<Option<Tensor>> = vec![None; n];
        let mut aux: Vec<Aux> = Vec::with_capacity(n);
        let mut updates: Vec<Option<BnState>> = vec![None; n];

        for node in &self.graph.nodes {
            let id = node.id;
            let exec_err = |message: String| EngineError::Execution {
                node: Some(id),
                message: format!("{}: {message}", node.name),
            };
            let get =
                |slot: &Vec<Option<Tensor>>, src: NodeId| -> Tensor { slot[src].clone().unwrap() };

            let (out, node_aux) = match node.op {
                OpKind::Input => {
                    let want = self.graph.input_shape;
                    if (input.channels, input.height, input.width)
                        != (want.channels, want.height, want.width)
                        || input.batch == 0
                    {
                        return Err(exec_err(format!("input {input} does not match {want}")));
                    }
                    (input.clone(), Aux::None)
                }
                OpKind::Conv { kh, kw, stride, pad, in_ch, out_ch, has_bias } => {
                    let x = acts[node.inputs[0]].as_ref().unwrap();
                    if x.channels != in_ch {
                        return Err(exec_err(format!("expected {in_ch} channels, got {}", x.channels)));
                    }
                    let y = conv_forward(
                        x,
                        &self.weights[id],
                        kh,
                        kw,
                        stride,
                        pad,
                        out_ch,
                        has_bias,
                        node.output_shape.height,
                        node.output_shape.width,
                    );
                    (y, Aux::None)
                }
                OpKind::BatchNorm { ch } => {
                    let x = acts[node.inputs[0]].as_ref().unwrap();
                    let w = &self.weights[id];
                    let (gamma, beta) = w.split_at(ch);
                    if training {
                        let (mean, var) = batch_stats(x);
                        let y = bn_normalize(x, &mean, &var, gamma, beta);
                        updates[id] = Some(BnState { mean: mean.clone(), var: var.clone() });
                        (y, Aux::Bn { mean, var })
                    } else {
                        let state = self.bn_state[id].as_ref().unwrap();
                        let y = bn_normalize(x, &state.mean, &state.var, gamma, beta);
                        (y, Aux::None)
                    }
                }
                OpKind::Relu => {
                    let mut y = get(&acts, node.inputs[0]);
                    for v in &mut y.data {
                        if *v < 0.0 {
                            *v = 0.0;
                        }
                    }
                    (y, Aux::None)
                }
                OpKind::MaxPool { kernel, stride, pad } => {
                    let x = acts[node.inputs[0]].as_ref().unwrap();
                    let (y, argmax) = maxpool_forward(
                        x,
                        kernel,
                        stride,
                        pad,
                        node.output_shape.height,
                        node.output_shape.width,
                    );
                    (y, Aux::Pool { argmax })
                }
                OpKind::GlobalAvgPool => {
                    let x = acts[node.inputs[0]].as_ref().unwrap();
                    let mut y = Tensor::zeros(x.batch, x.channels, 1, 1);
                    let scale = 1.0 / (x.height * x.width) as f64;
                    for b in 0..x.batch {
                        for c in 0..x.channels {
                            let mut sum = 0.0;
                            for h in 0..x.height {
                                for w in 0..x.width {
                                    sum += x.at(b, c, h, w);
                                }
                            }
                            *y.at_mut(b, c, 0, 0) = sum * scale;
                        }
                    }
                    (y, Aux::None)
                }
                OpKind::Concat => {
                    let parts: Vec<&Tensor> =
                        node.inputs.iter().map(|&s| acts[s].as_ref().unwrap()).collect();
                    let channels: usize = parts.iter().map(|t| t.channels).sum();
                    let (h, w) = (parts[0].height, parts[0].width);
                    let batch = parts[0].batch;
                    let mut y = Tensor::zeros(batch, channels, h, w);
                    for b in 0..batch {
                        let mut c_off = 0;
                        for part in &parts {
                            for c in 0..part.channels {
                                for hh in 0..h {
                                    for ww in 0..w {
                                        *y.at_mut(b, c_off + c, hh, ww) = part.at(b, c, hh, ww);
                                    }
                                }
                            }
                            c_off += part.channels;
                        }
                    }
                    (y, Aux::None)
                }
                OpKind::FullyConnected { in_features, out_features } => {
                    let x = acts[node.inputs[0]].as_ref().unwrap();
                    if x.features() != in_features {
                        return Err(exec_err(format!(
                            "expected {in_features} features, got {}",
                            x.features()
                        )));
                    }
                    let w = &self.weights[id];
                    let (matrix, bias) = w.split_at(out_features * in_features);
                    let mut y = Tensor::zeros(x.batch, out_features, 1, 1);
                    for b in 0..x.batch {
                        for o in 0..out_features {
                            let mut sum = bias[o];
                            let row = &matrix[o * in_features..(o + 1) * in_features];
                            for (f, wf) in row.iter().enumerate() {
                                sum += wf * x.at2(b, f);
                            }
                            *y.at_mut(b, o, 0, 0) = sum;
                        }
                    }
                    (y, Aux::None)
                }
                OpKind::Softmax => {
                    let x = acts[node.inputs[0]].as_ref().unwrap();
                    let mut y = x.clone();
                    let f = x.features();
                    for b in 0..x.batch {
                        let row = &mut y.data[b * f..(b + 1) * f];
                        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let mut sum = 0.0;
                        for v in row.iter_mut() {
                            *v = (*v - max).exp();
                            sum += *v;
                        }
                        for v in row.iter_mut() {
                            *v /= sum;
                        }
                    }
                    (y, Aux::None)
                }
            };
            if !out.all_finite() {
                return Err(exec_err("non-finite activation".into()));
            }
            acts[id] = Some(out);
            aux.push(node_aux);
        }
        Ok((acts, aux, updates))
    }

    /// Reverse-mode accumulation from the logits gradient down to every
    /// trainable scalar.
    fn backward(
        &self,
        logits_id: NodeId,
        dlogits: Tensor,
        acts: &[Option<Tensor>],
        aux: &[Aux],
    ) -> Result<Vec<Vec<f64>>, EngineError> {
        let n = self.graph.nodes.len();
        let mut act_grads: Vec<Option<Tensor>> = vec![None; n];
        let mut weight_grads: Vec<Vec<f64>> =
            self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        act_grads[logits_id] = Some(dlogits);

        for id in (0..=logits_id).rev() {
            let Some(gy) = act_grads[id].take() else { continue };
            let node = &self.graph.nodes[id];
            match node.op {
                OpKind::Input | OpKind::Softmax => {}
                OpKind::Conv { kh, kw, stride, pad, in_ch, out_ch, has_bias } => {
                    let src = node.inputs[0];
                    let x = acts[src].as_ref().unwrap();
                    let (dx, dw) = conv_backward(
                        x,
                        &self.weights[id],
                        &gy,
                        kh,
                        kw,
                        stride,
                        pad,
                        in_ch,
                        out_ch,
                        has_bias,
                    );
                    weight_grads[id] = dw;
                    accumulate(&mut act_grads[src], dx);
                }
                OpKind::BatchNorm { ch } => {
                    let src = node.inputs[0];
                    let x = acts[src].as_ref().unwrap();
                    let Aux::Bn { mean, var } = &aux[id] else {
                        return Err(EngineError::Execution {
                            node: Some(id),
                            message: "missing batch statistics for backward".into(),
                        });
                    };
                    let (gamma, _beta) = self.weights[id].split_at(ch);
                    let (dx, dgamma, dbeta) = bn_backward(x, &gy, mean, var, gamma);
                    let wg = &mut weight_grads[id];
                    wg[..ch].copy_from_slice(&dgamma);
                    wg[ch..].copy_from_slice(&dbeta);
                    accumulate(&mut act_grads[src], dx);
                }
                OpKind::Relu => {
                    let src = node.inputs[0];
                    let x = acts[src].as_ref().unwrap();
                    let mut dx = gy;
                    for (g, &xv) in dx.data.iter_mut().zip(x.data.iter()) {
                        if xv <= 0.0 {
                            *g = 0.0;
                        }
                    }
                    accumulate(&mut act_grads[src], dx);
                }
                OpKind::MaxPool { .. } => {
                    let src = node.inputs[0];
                    let x = acts[src].as_ref().unwrap();
                    let Aux::Pool { argmax } = &aux[id] else {
                        return Err(EngineError::Execution {
                            node: Some(id),
                            message: "missing pool routing for backward".into(),
                        });
                    };
                    let mut dx = Tensor::zeros(x.batch, x.channels, x.height, x.width);
                    for (cell, &src_off) in argmax.iter().enumerate() {
                        dx.data[src_off] += gy.data[cell];
                    }
                    accumulate(&mut act_grads[src], dx);
                }
                OpKind::GlobalAvgPool => {
                    let src = node.inputs[0];
                    let x = acts[src].as_ref().unwrap();
                    let scale = 1.0 / (x.height * x.width) as f64;
                    let mut dx = Tensor::zeros(x.batch, x.channels, x.height, x.width);
                    for b in 0..x.batch {
                        for c in 0..x.channels {
                            let g = gy.at(b, c, 0, 0) * scale;
                            for h in 0..x.height {
                                for w in 0..x.width {
                                    *dx.at_mut(b, c, h, w) = g;
                                }
                            }
                        }
                    }
                    accumulate(&mut act_grads[src], dx);
                }
                OpKind::Concat => {
                    let mut c_off = 0;
                    for &src in &node.inputs {
                        let part = acts[src].as_ref().unwrap();
                        let mut dx = Tensor::zeros(part.batch, part.channels, part.height, part.width);
                        for b in 0..part.batch {
                            for c in 0..part.channels {
                                for h in 0..part.height {
                                    for w in 0..part.width {
                                        *dx.at_mut(b, c, h, w) = gy.at(b, c_off + c, h, w);
                                    }
                                }
                            }
                        }
                        c_off += part.channels;
                        accumulate(&mut act_grads[src], dx);
                    }
                }
                OpKind::FullyConnected { in_features, out_features } => {
                    let src = node.inputs[0];
                    let x = acts[src].as_ref().unwrap();
                    let w = &self.weights[id];
                    let (matrix, _bias) = w.split_at(out_features * in_features);
                    let wg = &mut weight_grads[id];
                    let mut dx = Tensor::zeros(x.batch, x.channels, x.height, x.width);
                    for b in 0..x.batch {
                        for o in 0..out_features {
                            let g = gy.at2(b, o);
                            let row = o * in_features;
                            for f in 0..in_features {
                                wg[row + f] += g * x.at2(b, f);
                                dx.data[b * in_features + f] += g * matrix[row + f];
                            }
                            wg[out_features * in_features + o] += g;
                        }
                    }
                    accumulate(&mut act_grads[src], dx);
                }
            }
        }
        Ok(weight_grads)
    }
}

fn accumulate(slot: &mut Option<Tensor>, add: Tensor) {
    match slot {
        None => *slot = Some(add),
        Some(existing) => {
            for (dst, src) in existing.data.iter_mut().zip(add.data.iter()) {
                *dst += src;
            }
        }
    }
}

/// Mean cross-entropy over the batch and its gradient at the logits.
/// Softmax is folded into the loss via a stable log-sum-exp.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> (f64, Tensor) {
    let classes = logits.features();
    let batch = logits.batch;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(batch, logits.channels, logits.height, logits.width);
    let inv_batch = 1.0 / batch as f64;
    for b in 0..batch {
        let row = &logits.data[b * classes..(b + 1) * classes];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let lse = max + sum_exp.ln();
        loss += lse - row[labels[b]];
        for c in 0..classes {
            let softmax = (row[c] - max).exp() / sum_exp;
            let indicator = if c == labels[b] { 1.0 } else { 0.0 };
            grad.data[b * classes + c] = (softmax - indicator) * inv_batch;
        }
    }
    (loss * inv_batch, grad)
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    x: &Tensor,
    weights: &[f64],
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    out_ch: usize,
    has_bias: bool,
    out_h: usize,
    out_w: usize,
) -> Tensor {
    let in_ch = x.channels;
    let mut y = Tensor::zeros(x.batch, out_ch, out_h, out_w);
    let bias_base = out_ch * in_ch * kh * kw;
    for b in 0..x.batch {
        for oc in 0..out_ch {
            for oh in 0..out_h {
                for ow in 0..out_w {
                    let mut sum = if has_bias { weights[bias_base + oc] } else { 0.0 };
                    for ic in 0..in_ch {
                        let w_base = ((oc * in_ch) + ic) * kh * kw;
                        for r in 0..kh {
                            let ih = oh * stride + r;
                            if ih < pad || ih - pad >= x.height {
                                continue;
                            }
                            for s in 0..kw {
                                let iw = ow * stride + s;
                                if iw < pad || iw - pad >= x.width {
                                    continue;
                                }
                                sum += weights[w_base + r * kw + s] * x.at(b, ic, ih - pad, iw - pad);
                            }
                        }
                    }
                    *y.at_mut(b, oc, oh, ow) = sum;
                }
            }
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    x: &Tensor,
    weights: &[f64],
    gy: &Tensor,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    in_ch: usize,
    out_ch: usize,
    has_bias: bool,
) -> (Tensor, Vec<f64>) {
    let mut dx = Tensor::zeros(x.batch, x.channels, x.height, x.width);
    let mut dw = vec![0.0; weights.len()];
    let bias_base = out_ch * in_ch * kh * kw;
    for b in 0..x.batch {
        for oc in 0..out_ch {
            for oh in 0..gy.height {
                for ow in 0..gy.width {
                    let g = gy.at(b, oc, oh, ow);
                    if has_bias {
                        dw[bias_base + oc] += g;
                    }
                    for ic in 0..in_ch {
                        let w_base = ((oc * in_ch) + ic) * kh * kw;
                        for r in 0..kh {
                            let ih = oh * stride + r;
                            if ih < pad || ih - pad >= x.height {
                                continue;
                            }
                            for s in 0..kw {
                                let iw = ow * stride + s;
                                if iw < pad || iw - pad >= x.width {
                                    continue;
                                }
                                let xi = x.offset(b, ic, ih - pad, iw - pad);
                                dw[w_base + r * kw + s] += g * x.data[xi];
                                dx.data[xi] += g * weights[w_base + r * kw + s];
                            }
                        }
                    }
                }
            }
        }
    }
    (dx, dw)
}

/// Per-channel mean and biased variance over batch and spatial dims.
fn batch_stats(x: &Tensor) -> (Vec<f64>, Vec<f64>) {
    let n = (x.batch * x.height * x.width) as f64;
    let mut mean = vec![0.0; x.channels];
    let mut var = vec![0.0; x.channels];
    for b in 0..x.batch {
        for c in 0..x.channels {
            for h in 0..x.height {
                for w in 0..x.width {
                    mean[c] += x.at(b, c, h, w);
                }
            }
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    for b in 0..x.batch {
        for c in 0..x.channels {
            for h in 0..x.height {
                for w in 0..x.width {
                    let d = x.at(b, c, h, w) - mean[c];
                    var[c] += d * d;
                }
            }
        }
    }
    for v in &mut var {
        *v /= n;
    }
    (mean, var)
}

fn bn_normalize(x: &Tensor, mean: &[f64], var: &[f64], gamma: &[f64], beta: &[f64]) -> Tensor {
    let mut y = x.clone();
    for b in 0..x.batch {
        for c in 0..x.channels {
            let inv_std = 1.0 / (var[c] + BN_EPSILON).sqrt();
            for h in 0..x.height {
                for w in 0..x.width {
                    let xhat = (x.at(b, c, h, w) - mean[c]) * inv_std;
                    *y.at_mut(b, c, h, w) = gamma[c] * xhat + beta[c];
                }
            }
        }
    }
    y
}

/// Training-mode batchnorm backward through the batch statistics.
fn bn_backward(
    x: &Tensor,
    gy: &Tensor,
    mean: &[f64],
    var: &[f64],
    gamma: &[f64],
) -> (Tensor, Vec<f64>, Vec<f64>) {
    let ch = x.channels;
    let n = (x.batch * x.height * x.width) as f64;
    let mut dgamma = vec![0.0; ch];
    let mut dbeta = vec![0.0; ch];
    let mut sum_dxhat = vec![0.0; ch];
    let mut sum_dxhat_xhat = vec![0.0; ch];

    for b in 0..x.batch {
        for c in 0..ch {
            let inv_std = 1.0 / (var[c] + BN_EPSILON).sqrt();
            for h in 0..x.height {
                for w in 0..x.width {
                    let g = gy.at(b, c, h, w);
                    let xhat = (x.at(b, c, h, w) - mean[c]) * inv_std;
                    dgamma[c] += g * xhat;
                    dbeta[c] += g;
                    let dxhat = g * gamma[c];
                    sum_dxhat[c] += dxhat;
                    sum_dxhat_xhat[c] += dxhat * xhat;
                }
            }
        }
    }

    // dx = (1/N) * inv_std * (N*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
    let mut dx = Tensor::zeros(x.batch, x.channels, x.height, x.width);
    for b in 0..x.batch {
        for c in 0..ch {
            let inv_std = 1.0 / (var[c] + BN_EPSILON).sqrt();
            for h in 0..x.height {
                for w in 0..x.width {
                    let g = gy.at(b, c, h, w);
                    let xhat = (x.at(b, c, h, w) - mean[c]) * inv_std;
                    let dxhat = g * gamma[c];
                    *dx.at_mut(b, c, h, w) =
                        inv_std / n * (n * dxhat - sum_dxhat[c] - xhat * sum_dxhat_xhat[c]);
                }
            }
        }
    }
    (dx, dgamma, dbeta)
}

fn maxpool_forward(
    x: &Tensor,
    kernel: usize,
    stride: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
) -> (Tensor, Vec<usize>) {
    let mut y = Tensor::zeros(x.batch, x.channels, out_h, out_w);
    let mut argmax = vec![0usize; y.numel()];
    for b in 0..x.batch {
        for c in 0..x.channels {
            for oh in 0..out_h {
                for ow in 0..out_w {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_off = usize::MAX;
                    for r in 0..kernel {
                        let ih = oh * stride + r;
                        if ih < pad || ih - pad >= x.height {
                            continue;
                        }
                        for s in 0..kernel {
                            let iw = ow * stride + s;
                            if iw < pad || iw - pad >= x.width {
                                continue;
                            }
                            let off = x.offset(b, c, ih - pad, iw - pad);
                            // Strict comparison keeps the first maximum.
                            if x.data[off] > best {
                                best = x.data[off];
                                best_off = off;
                            }
                        }
                    }
                    let cell = y.offset(b, c, oh, ow);
                    y.data[cell] = best;
                    argmax[cell] = best_off;
                }
            }
        }
    }
    (y, argmax)
}
