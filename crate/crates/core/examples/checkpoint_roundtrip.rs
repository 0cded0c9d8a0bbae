//! Train briefly, checkpoint the weights to the flat binary format, reload,
//! and show the reloaded model evaluates bit-identically.
//!
//! ```bash
//! cargo run -p thresholdnet --example checkpoint_roundtrip
//! ```

use thresholdnet::arch::{build_network, toy};
use thresholdnet::engine::checkpoint::{load_file, save_file};
use thresholdnet::engine::{init_weights, synthetic_dataset, train_toy};

fn main() {
    let graph = build_network(&toy()).unwrap();
    let mut model = init_weights(&graph, 7);
    let (inputs, labels) = synthetic_dataset(8, 8, 3, 32, 32, 7);
    train_toy(&mut model, &inputs, &labels, 20, 0.05).unwrap();

    let path = std::env::temp_dir().join("thresholdnet_toy.tnet");
    save_file(&model, &path).unwrap();
    let bytes = std::fs::metadata(&path).unwrap().len();
    println!(
        "saved {} trainable scalars (+ batchnorm state) to {} ({bytes} bytes)",
        model.trainable_scalar_count(),
        path.display()
    );

    let restored = load_file(&graph, &path).unwrap();
    let before = model.forward_eval(&inputs).unwrap();
    let after = restored.forward_eval(&inputs).unwrap();
    assert_eq!(before.data, after.data);
    println!("reloaded model reproduces eval logits bit-exactly");
    std::fs::remove_file(&path).ok();
}
