//! Benchmark real motion-segmentation trajectories from a directory of
//! `.traj` files.
//!
//! ```text
//! cargo run --example hopkins_pipeline -- /path/to/traj_dir
//! ```
//!
//! Each file holds tracked feature points over video frames (see the
//! `data::traj` module docs for the exact layout). Frames are grouped
//! into snapshots, projected to a low dimension, and scored under both
//! the smoothing protocol (errors at every step after the first) and
//! the held-out-last-snapshot protocol. Only two-motion sequences with
//! at least three snapshots are kept so every method has history to
//! work with.
//!
//! Without an argument the example explains how to lay the data out and
//! exits cleanly, so it is safe to run in any environment.

use std::path::Path;

use escm::bench::{emit_report, run_benchmark, MethodSpec, Protocol, ReportFormat};
use escm::data::{load_sequence, preprocess, EvolvingSequence};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let Some(dir) = std::env::args().nth(1) else {
        println!("usage: cargo run --example hopkins_pipeline -- <directory>");
        println!();
        println!("The directory should contain motion-capture trajectory files");
        println!("(*.traj), one per video sequence:");
        println!();
        println!("    frames=<F> points=<N> motions=<k>");
        println!("    labels=<l1> <l2> ... <lN>");
        println!("    <2F rows of N floats: x then y per frame>");
        println!();
        println!("Export your own with `escm synth <config> <out.traj>` or");
        println!("convert an existing dataset to this layout. No directory was");
        println!("given, so there is nothing to score — exiting.");
        return Ok(());
    };
    let dir = Path::new(&dir);

    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "traj"))
        .collect();
    files.sort();
    if files.is_empty() {
        println!("no *.traj files under {}", dir.display());
        return Ok(());
    }
    println!("found {} trajectory files", files.len());

    // Load, snapshot, project; keep two-motion sequences long enough to
    // leave at least two evaluated steps.
    let mut dataset: Vec<EvolvingSequence> = Vec::new();
    for path in &files {
        let traj = load_sequence(path)?;
        if traj.n_motions != 2 {
            continue;
        }
        let seq = preprocess(&traj, 2)?;
        if seq.snapshots.len() >= 3 {
            dataset.push(seq);
        }
    }
    if dataset.is_empty() {
        println!("no two-motion sequences with >= 3 snapshots; nothing to score");
        return Ok(());
    }
    println!(
        "kept {} two-motion sequences ({} snapshots each on average)",
        dataset.len(),
        dataset.iter().map(|s| s.snapshots.len()).sum::<usize>() / dataset.len()
    );

    let methods = MethodSpec::parse_list("static,affect,cesm,lstm")?;

    println!("\n--- smoothing protocol ---");
    let smooth = run_benchmark(&dataset, &methods, Protocol::Smoothing, 7)?;
    print!("{}", emit_report(&smooth, ReportFormat::Markdown));

    println!("\n--- held-out last snapshot ---");
    let test = run_benchmark(&dataset, &methods, Protocol::TestLast(1), 7)?;
    print!("{}", emit_report(&test, ReportFormat::Markdown));
    Ok(())
}
