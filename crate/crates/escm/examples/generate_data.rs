//! Generate a synthetic evolving union of subspaces and round-trip it
//! through the trajectory file format.
//!
//! ```text
//! cargo run --example generate_data
//! ```
//!
//! Two 2-dimensional subspaces drift inside an 8-dimensional ambient space;
//! each snapshot holds 20 unit-norm points whose cluster memberships stay
//! fixed while the subspaces rotate. The sequence is exported to the plain
//! text trajectory format (`frames=.. points=.. motions=..` header, one
//! labels line, then one row of floats per coordinate) and read back
//! bit-exactly.

use escm::data::{
    load_sequence, save_sequence, snapshotize, synth_config_text, synth_evolving, to_trajectories,
    SynthConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        ambient_dim: 8,
        points_per_subspace: vec![10, 10],
        subspace_dims: vec![2, 2],
        steps: 6,
        rotation_rate: 0.05,
        noise_sigma: 0.01,
        seed: 7,
    };
    println!(
        "config (the `escm synth` file format):\n{}",
        synth_config_text(&cfg)
    );

    let seq = synth_evolving(&cfg)?;
    println!(
        "generated '{}': {} snapshots, {} points in {} motions, feature dim {}",
        seq.name,
        seq.len(),
        seq.n_points(),
        seq.n_motions,
        seq.snapshots[0].feature_dim()
    );

    // How far does the union drift? Compare the first and last snapshots.
    let drift = (&seq.snapshots[seq.len() - 1].data - &seq.snapshots[0].data).norm();
    println!("total drift ||X_T - X_1||_F = {drift:.4}");

    // Export: snapshots stack into a 2F x N trajectory matrix.
    let traj = to_trajectories(&seq)?;
    let dir = std::env::temp_dir().join("escm-generate-data");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("drifting.traj");
    save_sequence(&path, &traj)?;
    println!(
        "wrote {} ({} frames, {} points)",
        path.display(),
        traj.frames(),
        traj.n_points()
    );

    // Round trip: floats use shortest round-trip formatting, so the
    // reloaded matrix is bit-identical.
    let reloaded = load_sequence(&path)?;
    assert_eq!(reloaded.data, traj.data);
    assert_eq!(reloaded.labels, traj.labels);
    println!("reloaded bit-exactly");

    // Snapshot extraction partitions frames into blocks of 2 * motions.
    let resnap = snapshotize(&reloaded, seq.n_motions)?;
    println!(
        "re-snapshotted into {} blocks of feature dim {}",
        resnap.len(),
        resnap.snapshots[0].feature_dim()
    );
    Ok(())
}
