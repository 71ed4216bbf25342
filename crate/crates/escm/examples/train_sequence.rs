//! Full pipeline on one evolving sequence: train the recurrent coefficient
//! model, infer self-expressions at every step, cluster spectrally, and
//! score against ground truth.
//!
//! ```text
//! cargo run --example train_sequence
//! ```
//!
//! The model is a single LSTM cell: at step t it reads the vectorized
//! snapshot and emits the N(N-1) off-diagonal entries of the coefficient
//! matrix C_t (the diagonal is structurally zero). Training minimizes
//! 1/2 tr(G_t (I-C_t)(I-C_t)^T) + lambda ||C_t||_1 over sliding windows by
//! backpropagation through time, so C_t carries memory of earlier
//! snapshots instead of being re-solved from scratch.

use escm::bench::clustering_error;
use escm::data::{derive_seed, normalize_columns, synth_evolving, EvolvingSequence, SynthConfig};
use escm::lstm::{default_hidden, train_sequence, Optimizer, TrainConfig};
use escm::spectral::{affinity, spectral_cluster, ClusterLabels};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Two drifting 3-dimensional subspaces in ambient dimension 7: enough
    // overlap that per-snapshot sparse coding makes mistakes.
    let cfg = SynthConfig {
        ambient_dim: 7,
        points_per_subspace: vec![30, 30],
        subspace_dims: vec![3, 3],
        steps: 12,
        rotation_rate: 0.05,
        noise_sigma: 0.01,
        seed: 3,
    };
    let raw = synth_evolving(&cfg)?;
    let snaps = raw
        .snapshots
        .iter()
        .map(|s| normalize_columns(s).0)
        .collect();
    let seq = EvolvingSequence::new(snaps, raw.n_motions, raw.name.clone())?;
    let n = seq.n_points();
    println!(
        "sequence: {} steps, {} points, {} motions",
        seq.len(),
        n,
        seq.n_motions
    );

    let train_cfg = TrainConfig {
        lambda: 0.1,
        learning_rate: 1e-3,
        epochs: 100,
        hidden: default_hidden(n), // ceil(N / 5)
        grad_clip: 5.0,
        seed: 0,
        optimizer: Optimizer::default_adam(),
    };
    println!(
        "training: hidden {}, window 8, stride 1, {} epochs",
        train_cfg.hidden, train_cfg.epochs
    );
    let outcome = train_sequence(&seq, 8, 1, &train_cfg)?;

    let losses = &outcome.epoch_losses;
    println!(
        "epoch loss: {:.4} -> {:.4} -> {:.4} (epochs 1, {}, {})",
        losses[0],
        losses[losses.len() / 2],
        losses[losses.len() - 1],
        losses.len() / 2 + 1,
        losses.len()
    );
    println!(
        "final reconstruction loss over the sequence: {:.6}",
        outcome.final_recon_loss
    );

    // Cluster each step from the inferred coefficients and score it.
    println!("\n  t | error %");
    let mut total = 0.0;
    for (idx, coeff) in outcome.coeffs.iter().enumerate() {
        let pred = spectral_cluster(
            &affinity(coeff),
            seq.n_motions,
            derive_seed(0, idx as u64 + 1),
        )?;
        let truth = ClusterLabels::new(
            seq.snapshots[idx]
                .labels
                .clone()
                .expect("synthetic data is labeled"),
            seq.n_motions,
        )?;
        let err = clustering_error(&pred, &truth)?;
        total += err;
        println!("  {:>2} | {:>6.2}", idx + 1, err);
    }
    println!("mean | {:>6.2}", total / seq.len() as f64);
    Ok(())
}
