//! Spectral clustering from the ground up: affinity, normalized Laplacian
//! embedding, seeded k-means.
//!
//! ```text
//! cargo run --example spectral_demo
//! ```
//!
//! Part 1 clusters an exactly block-diagonal affinity (three components)
//! and recovers the blocks perfectly: the normalized Laplacian has one
//! zero eigenvalue per connected component and the embedding separates
//! them. Part 2 builds the affinity |C| + |C|^T from a self-expression
//! of subspace data with both sparse learners and shows why density
//! matters: greedy pursuit stops after ~2 exact atoms per point, and a
//! graph that sparse can fall apart *inside* a block even when every
//! edge stays in the right block, while the l1-regularized learner
//! spreads weight over many in-block neighbours and keeps each block
//! connected.

use escm::baselines::{l1pg_selfexpr, omp_selfexpr, LearnerConfig};
use escm::bench::clustering_error;
use escm::data::{normalize_columns, synth_evolving, SynthConfig};
use escm::spectral::{affinity, spectral_cluster, spectral_embedding, Affinity, ClusterLabels};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // --- Part 1: block-diagonal oracle -----------------------------------
    let sizes = [4usize, 3, 5];
    let n: usize = sizes.iter().sum();
    let mut a = DMatrix::zeros(n, n);
    let mut offset = 0;
    for &size in &sizes {
        for j in offset..offset + size {
            for i in offset..j {
                // Any positive within-block weight keeps the block connected.
                let w = 0.2 + 0.6 * (((i * 7 + j * 13) % 10) as f64) / 10.0;
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
        offset += size;
    }
    let aff = Affinity::from_matrix(a)?;
    let embedding = spectral_embedding(&aff, 3)?;
    println!(
        "block-diagonal affinity: {} points -> embedding {}x{}",
        n,
        embedding.nrows(),
        embedding.ncols()
    );
    let pred = spectral_cluster(&aff, 3, 1)?;
    let truth: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b + 1, s))
        .collect();
    let truth = ClusterLabels::new(truth, 3)?;
    println!(
        "recovered blocks with {:.2}% error (labels: {:?})",
        clustering_error(&pred, &truth)?,
        pred.labels
    );

    // --- Part 2: affinity from self-expression ---------------------------
    // Two 2-dimensional subspaces in R^8, 30 points each, noiseless so
    // every greedy support is provably confined to its own subspace.
    let cfg = SynthConfig {
        ambient_dim: 8,
        points_per_subspace: vec![30, 30],
        subspace_dims: vec![2, 2],
        steps: 1,
        rotation_rate: 0.0,
        noise_sigma: 0.0,
        seed: 9,
    };
    let seq = synth_evolving(&cfg)?;
    let snap = normalize_columns(&seq.snapshots[0]).0;
    let truth = ClusterLabels::new(snap.labels.clone().expect("labeled"), 2)?;

    let learners: [(&str, escm::lstm::SelfExpression); 2] = [
        (
            "greedy pursuit ",
            omp_selfexpr(&snap, &LearnerConfig::omp_default(2))?,
        ),
        (
            "l1-regularized ",
            l1pg_selfexpr(&snap, &LearnerConfig::l1pg_default())?,
        ),
    ];
    println!("\nself-expression of {} subspace points:", snap.n_points());
    println!("learner           nonzeros  in-block  error");
    for (name, coeff) in &learners {
        let m = coeff.matrix();
        let labels = truth.labels.as_slice();
        let (mut nnz, mut pure) = (0usize, 0usize);
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != 0.0 {
                    nnz += 1;
                    pure += usize::from(labels[i] == labels[j]);
                }
            }
        }
        let pred = spectral_cluster(&affinity(coeff), 2, 2)?;
        println!(
            "{name}  {nnz:>8}  {:>7.1}%  {:>4.1}%",
            100.0 * pure as f64 / nnz as f64,
            clustering_error(&pred, &truth)?
        );
    }
    println!();
    println!("Both supports stay 100% inside their own block, but the greedy");
    println!("graph is so sparse a block can split internally under spectral");
    println!("clustering; the denser l1 graph keeps each block connected.");
    Ok(())
}
