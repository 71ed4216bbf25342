//! Run the benchmark harness over a small synthetic dataset and emit both
//! report formats.
//!
//! ```text
//! cargo run --example benchmark_report
//! ```
//!
//! Four drifting sequences are scored under the smoothing protocol (errors
//! averaged over t = 2..T; the first step has no history, so smoothed and
//! static methods coincide there and it is excluded). Error columns are
//! bitwise reproducible for a fixed seed; runtime columns are wall clock
//! around representation learning + spectral clustering and naturally
//! vary. The markdown table round-trips through the bundled parser.

use escm::bench::{
    emit_report, parse_markdown_report, run_benchmark, MethodSpec, Protocol, ReportFormat,
};
use escm::data::{normalize_columns, synth_evolving, EvolvingSequence, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dataset: Vec<EvolvingSequence> = (1..=4u64)
        .map(|s| {
            let cfg = SynthConfig {
                ambient_dim: 7,
                points_per_subspace: vec![30, 30],
                subspace_dims: vec![3, 3],
                steps: 8,
                rotation_rate: 0.05,
                noise_sigma: 0.01,
                seed: 200 + s,
            };
            let seq = synth_evolving(&cfg)?;
            let snaps = seq
                .snapshots
                .iter()
                .map(|sn| normalize_columns(sn).0)
                .collect();
            EvolvingSequence::new(snaps, seq.n_motions, seq.name.clone())
        })
        .collect::<escm::Result<_>>()?;

    // Token expansion mirrors the `escm benchmark --methods` flag: bare
    // family names fan out to both learners, `lstm` is a single row.
    let methods = MethodSpec::parse_list("static,cesm-omp,lstm")?;
    let mut methods = methods;
    // Keep the example snappy: fewer epochs than the training default
    // (enough for this drift rate; the CLI default of 300 is conservative).
    for spec in &mut methods {
        if let MethodSpec::LstmEscm { epochs, .. } = spec {
            *epochs = 100;
        }
    }

    let report = run_benchmark(&dataset, &methods, Protocol::Smoothing, 7)?;

    println!("--- csv ---");
    print!("{}", emit_report(&report, ReportFormat::Csv));

    println!("\n--- markdown ---");
    let markdown = emit_report(&report, ReportFormat::Markdown);
    print!("{markdown}");

    let parsed = parse_markdown_report(&markdown)?;
    println!(
        "\nparser round-trip: {} rows, protocol {}, seed {}",
        parsed.rows.len(),
        parsed.protocol.name(),
        parsed.seed
    );

    // The same dataset under a test protocol: train on t = 1..T-1, score
    // only the held-out last snapshot.
    let test = run_benchmark(&dataset, &methods, Protocol::TestLast(1), 7)?;
    println!("\n--- held-out last snapshot ---");
    for row in &test.rows {
        println!(
            "{:<16} {:<6} {:>6.2}%",
            row.method, row.learner, row.mean_error_pct
        );
    }
    Ok(())
}
