//! Compare the per-snapshot and temporally smoothed baselines on one
//! drifting sequence.
//!
//! ```text
//! cargo run --example baselines_comparison
//! ```
//!
//! Methods:
//! - static: sparse self-expression solved independently at every step
//!   (greedy OMP or l1 proximal gradient), no temporal coupling;
//! - AFFECT: convex combination of the fresh coefficients with the
//!   previous step's, C_t = alpha C_fresh + (1 - alpha) C_{t-1};
//! - CESM: alternating scheme that re-solves the sparse step against
//!   the smoothed coefficients and picks alpha on a grid;
//! - AFFECT (dist): the same smoothing recursion applied to raw distance
//!   affinities instead of self-expressions (no sparse coding at all).
//!   Subspaces through the origin interleave in space, so a distance
//!   kernel sits near chance here — that contrast is the point: the
//!   structure is visible to self-expression, not to proximity.

use escm::baselines::{smooth_cluster, DistanceKernel, LearnerConfig, LearnerKind, Method};
use escm::bench::clustering_error;
use escm::data::{normalize_columns, synth_evolving, EvolvingSequence, SynthConfig};
use escm::spectral::ClusterLabels;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        ambient_dim: 7,
        points_per_subspace: vec![30, 30],
        subspace_dims: vec![3, 3],
        steps: 10,
        rotation_rate: 0.05,
        noise_sigma: 0.01,
        seed: 14,
    };
    let raw = synth_evolving(&cfg)?;
    let snaps = raw
        .snapshots
        .iter()
        .map(|s| normalize_columns(s).0)
        .collect();
    let seq = EvolvingSequence::new(snaps, raw.n_motions, raw.name.clone())?;
    let k = seq.n_motions;

    let omp = LearnerConfig::omp_default(k);
    let l1 = LearnerConfig {
        kind: LearnerKind::L1Pg,
        ..LearnerConfig::l1pg_default()
    };
    let methods: Vec<(&str, Method)> = vec![
        ("static omp", Method::Static { learner: omp }),
        ("static l1pg", Method::Static { learner: l1 }),
        (
            "AFFECT omp",
            Method::Affect {
                learner: omp,
                alpha: 0.5,
            },
        ),
        (
            "CESM omp",
            Method::Cesm {
                learner: omp,
                outer_iters: 3,
            },
        ),
        (
            "AFFECT dist",
            Method::AffectDistance {
                kernel: DistanceKernel::ExpNegSqEuclidean,
                alpha: 0.5,
            },
        ),
    ];

    // Per-step error table. Step 1 is shown but has no history to smooth,
    // so the smoothed methods coincide with static there.
    print!("{:<12}", "t");
    for t in 1..=seq.len() {
        print!(" {t:>6}");
    }
    println!("   mean");
    for (name, method) in &methods {
        let preds = smooth_cluster(&seq, method, k, 7, None)?;
        let mut errs = Vec::with_capacity(seq.len());
        for (idx, pred) in preds.iter().enumerate() {
            let truth = ClusterLabels::new(seq.snapshots[idx].labels.clone().expect("labeled"), k)?;
            errs.push(clustering_error(pred, &truth)?);
        }
        print!("{name:<12}");
        for e in &errs {
            print!(" {e:>6.2}");
        }
        println!("  {:>5.2}", errs.iter().sum::<f64>() / errs.len() as f64);
    }
    println!("\n(errors in %, lower is better; smoothing helps once drift accumulates;");
    println!(" the distance-kernel row sits near chance because interleaved subspaces");
    println!(" are invisible to spatial proximity — only self-expression separates them)");
    Ok(())
}
