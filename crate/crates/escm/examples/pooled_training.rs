//! Train one recurrent model on several sequences that share the same
//! subspace dynamics, then evaluate it on a sequence it never saw.
//!
//! ```text
//! cargo run --example pooled_training
//! ```
//!
//! All five sequences here use identical evolving subspaces; only the
//! point draws differ (`synth_evolving_variant` re-samples coefficients
//! and noise while keeping the bases). The model pools training windows
//! from the first four and is scored on the fifth, so any accuracy it
//! shows is generalization across point sets, not memorization.

use escm::bench::{chance_level, clustering_error};
use escm::data::{
    derive_seed, normalize_columns, synth_evolving_variant, windows, EvolvingSequence, SynthConfig,
};
use escm::lstm::{infer_coeffs, train_pooled, TrainConfig};
use escm::spectral::{affinity, spectral_cluster, ClusterLabels};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        ambient_dim: 7,
        points_per_subspace: vec![30, 30],
        subspace_dims: vec![3, 3],
        steps: 12,
        rotation_rate: 0.05,
        noise_sigma: 0.01,
        seed: 42,
    };

    // Five variants of the same dynamics, one per sample seed.
    let mut sequences: Vec<EvolvingSequence> = (1..=5u64)
        .map(|sample_seed| {
            let seq = synth_evolving_variant(&cfg, sample_seed)?;
            let snaps = seq
                .snapshots
                .iter()
                .map(|sn| normalize_columns(sn).0)
                .collect();
            EvolvingSequence::new(snaps, seq.n_motions, format!("variant-{sample_seed}"))
        })
        .collect::<escm::Result<_>>()?;
    let held_out = sequences.pop().expect("five variants");

    let n = held_out.snapshots[0].n_points();
    println!(
        "pool: {} sequences x {} steps, {} points each; held out: {}",
        sequences.len(),
        cfg.steps,
        n,
        held_out.name
    );

    // Pool training windows from every remaining sequence.
    let mut pool = Vec::new();
    for seq in &sequences {
        pool.extend(windows(seq, 8, 1)?);
    }
    println!("training windows: {} (length 8, stride 1)", pool.len());

    let train_cfg = TrainConfig {
        epochs: 100,
        seed: 5,
        hidden: 12,
        ..TrainConfig::for_points(n)
    };
    let model = train_pooled(&pool, &train_cfg)?;
    println!(
        "trained {} epochs (hidden size {})",
        train_cfg.epochs, train_cfg.hidden
    );

    // Run the frozen model over the unseen sequence and cluster each step.
    let coeffs = infer_coeffs(&model, &held_out)?;
    let k = held_out.n_motions;
    let truth_ids = held_out.snapshots[0]
        .labels
        .clone()
        .expect("synthetic sequences carry labels");
    let truth = ClusterLabels::new(truth_ids, k)?;

    let mut errors = Vec::new();
    println!("\n  t   error%");
    for (idx, c) in coeffs.iter().enumerate() {
        let aff = affinity(c);
        let pred = spectral_cluster(&aff, k, derive_seed(0, idx as u64 + 1))?;
        let err = clustering_error(&pred, &truth)?;
        println!("{:>3}   {:>6.2}", idx + 1, err);
        errors.push(err);
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let chance = chance_level(&truth);
    println!("\nheld-out mean error {mean:.2}% (chance level {chance:.2}%)");
    Ok(())
}
