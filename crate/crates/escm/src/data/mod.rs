//! Dataset representation and preprocessing.
//!
//! The unit of data is a [`Snapshot`]: the `D_t x N` matrix observed at one
//! time step, columns are points. An [`EvolvingSequence`] is the ordered list
//! of snapshots sharing a fixed point count `N`. Preprocessing follows the
//! motion-segmentation recipe: partition raw 2F x N trajectories into
//! snapshots ([`snapshotize`]), project each snapshot onto its top `4n` left
//! singular vectors ([`pca_project`]), and scale every column to unit length
//! ([`normalize_columns`]). [`windows`] slices a sequence into the fixed-length
//! training windows consumed by the recurrent model.
//!
//! Everything here is a pure function of its inputs (plus explicit seeds in
//! [`synth`]); values are immutable after construction and safe to share
//! across threads.

mod synth;
mod traj;

pub use synth::{
    parse_synth_config, synth_config_text, synth_evolving, synth_evolving_detailed,
    synth_evolving_variant, SynthConfig, SynthDetail,
};
pub use traj::{load_sequence, save_sequence, snapshotize, to_trajectories, EvolvingTrajectories};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// One time step of data: a `D_t x N_t` real matrix whose columns are points,
/// with optional 1-based cluster labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Feature-dim x points matrix; all entries finite.
    pub data: DMatrix<f64>,
    /// Per-point cluster ids in `1..=n_t`, every cluster non-empty.
    pub labels: Option<Vec<usize>>,
    /// 1-based time index within the owning sequence.
    pub t: usize,
}

impl Snapshot {
    /// Validating constructor: finite entries, labels of length `N` covering
    /// `1..=max` without gaps.
    pub fn new(data: DMatrix<f64>, labels: Option<Vec<usize>>, t: usize) -> Result<Self> {
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Input("snapshot contains non-finite entries".into()));
        }
        if let Some(ref l) = labels {
            validate_snapshot_labels(l, data.ncols())?;
        }
        Ok(Snapshot { data, labels, t })
    }

    pub fn feature_dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.data.ncols()
    }
}

fn validate_snapshot_labels(labels: &[usize], n_points: usize) -> Result<()> {
    if labels.len() != n_points {
        return Err(Error::Label(format!(
            "label count {} does not match point count {}",
            labels.len(),
            n_points
        )));
    }
    let max = *labels.iter().max().expect("non-empty label vector");
    if labels.contains(&0) {
        return Err(Error::Label("labels are 1-based; found 0".into()));
    }
    for c in 1..=max {
        if !labels.contains(&c) {
            return Err(Error::Label(format!(
                "cluster {c} is empty (labels go up to {max})"
            )));
        }
    }
    Ok(())
}

/// An ordered sequence of snapshots with a fixed point count.
#[derive(Debug, Clone)]
pub struct EvolvingSequence {
    pub snapshots: Vec<Snapshot>,
    /// Number of motions/clusters `n` the sequence is annotated with.
    pub n_motions: usize,
    pub name: String,
}

impl EvolvingSequence {
    /// Validating constructor: non-empty, uniform `N`, time indices `1..=T`.
    pub fn new(snapshots: Vec<Snapshot>, n_motions: usize, name: String) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::Dimension("sequence has no snapshots".into()));
        }
        let n = snapshots[0].n_points();
        for (i, s) in snapshots.iter().enumerate() {
            if s.n_points() != n {
                return Err(Error::Dimension(format!(
                    "snapshot {} has {} points, expected {}",
                    i + 1,
                    s.n_points(),
                    n
                )));
            }
            if s.t != i + 1 {
                return Err(Error::Dimension(format!(
                    "snapshot at position {} carries time index {}, expected consecutive 1..T",
                    i + 1,
                    s.t
                )));
            }
        }
        Ok(EvolvingSequence {
            snapshots,
            n_motions,
            name,
        })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn n_points(&self) -> usize {
        self.snapshots[0].n_points()
    }

    /// First `len` snapshots as a sequence of their own (training prefix for
    /// the held-out-snapshot protocols).
    pub fn prefix(&self, len: usize) -> Result<EvolvingSequence> {
        if len == 0 || len > self.len() {
            return Err(Error::Parameter(format!(
                "prefix length {len} out of range 1..={}",
                self.len()
            )));
        }
        EvolvingSequence::new(
            self.snapshots[..len].to_vec(),
            self.n_motions,
            self.name.clone(),
        )
    }
}

/// A contiguous run of `S` snapshots, vectorized for the recurrent model:
/// column `s` of `inputs` is `vec(X_{t+s})`, column `s` of `targets` is
/// `vec(X_{t+s}^T X_{t+s})`.
#[derive(Debug, Clone)]
pub struct SequenceWindow {
    /// `(D*N) x S`.
    pub inputs: DMatrix<f64>,
    /// `(N*N) x S` Gram vectorizations.
    pub targets: DMatrix<f64>,
    /// `(sequence name, 1-based start index)`.
    pub origin: (String, usize),
}

impl SequenceWindow {
    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.ncols() == 0
    }

    /// Point count recovered from the Gram-column height.
    pub fn n_points(&self) -> usize {
        (self.targets.nrows() as f64).sqrt().round() as usize
    }

    pub fn feature_dim(&self) -> usize {
        self.inputs.nrows() / self.n_points()
    }
}

/// Column-major vectorization `vec(M)`.
pub fn vec_mat(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_mat`] for a known shape.
pub fn unvec(v: &[f64], nrows: usize, ncols: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), nrows * ncols, "unvec: length/shape mismatch");
    DMatrix::from_column_slice(nrows, ncols, v)
}

/// Canonical seed derivation: mix a base seed with a stream index through a
/// splitmix64-style finalizer, so independent components (per-time-step
/// clustering, per-cell benchmark runs) get decorrelated but reproducible
/// seeds. Never identity on either argument.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scale every nonzero column to unit Euclidean norm. Zero columns are left
/// untouched and their indices returned as flags; they are not an error.
pub fn normalize_columns(snap: &Snapshot) -> (Snapshot, Vec<usize>) {
    let mut data = snap.data.clone();
    let mut zero_cols = Vec::new();
    for j in 0..data.ncols() {
        let norm = data.column(j).norm();
        if norm == 0.0 {
            zero_cols.push(j);
        } else {
            data.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    (
        Snapshot {
            data,
            labels: snap.labels.clone(),
            t: snap.t,
        },
        zero_cols,
    )
}

/// Project a snapshot onto its top `r = min(4n, D_t)` left singular vectors
/// without rescaling columns. Mostly useful for inspecting the projection
/// itself; the pipeline entry point is [`pca_project`].
pub fn pca_project_unnormalized(snap: &Snapshot, n: usize) -> Result<Snapshot> {
    if n == 0 {
        return Err(Error::Parameter("motion count must be >= 1".into()));
    }
    if snap.data.norm() == 0.0 {
        return Err(Error::DegenerateData(
            "all-zero snapshot cannot be PCA-projected".into(),
        ));
    }
    let r = (4 * n).min(snap.data.nrows());
    let svd = snap.data.clone().svd(true, false);
    let u = svd.u.expect("svd requested u");
    // Singular values come back in decreasing order, so the leading r
    // columns of u are the top left singular vectors.
    let ur = u.columns(0, r);
    let projected = ur.transpose() * &snap.data;
    Snapshot::new(projected, snap.labels.clone(), snap.t)
}

/// PCA projection to `r = min(4n, D_t)` dimensions followed by column
/// normalization: the standard preprocessing for one snapshot.
pub fn pca_project(snap: &Snapshot, n: usize) -> Result<Snapshot> {
    let projected = pca_project_unnormalized(snap, n)?;
    let (normalized, _zero_cols) = normalize_columns(&projected);
    Ok(normalized)
}

/// Full preprocessing for a raw trajectory set: snapshotize with `n` motions,
/// then PCA-project and normalize every snapshot. All snapshots end up with
/// the same feature dimension `min(4n, 2*F_t)` (equal to `4n` whenever every
/// block has at least `2n` frames, which snapshotize guarantees).
pub fn preprocess(traj: &EvolvingTrajectories, n: usize) -> Result<EvolvingSequence> {
    let raw = snapshotize(traj, n)?;
    let snapshots = raw
        .snapshots
        .iter()
        .map(|s| pca_project(s, n))
        .collect::<Result<Vec<_>>>()?;
    EvolvingSequence::new(snapshots, raw.n_motions, raw.name)
}

/// Slice a sequence into fixed-length windows starting at `t = 1, 1+stride,
/// ...` while the window fits. Snapshots must share one feature dimension
/// (run [`pca_project`] first on raw trajectory data).
pub fn windows(seq: &EvolvingSequence, s: usize, stride: usize) -> Result<Vec<SequenceWindow>> {
    if s == 0 || stride == 0 {
        return Err(Error::Parameter(
            "window length and stride must be >= 1".into(),
        ));
    }
    let t_total = seq.len();
    if s > t_total {
        return Err(Error::WindowTooLong {
            window: s,
            steps: t_total,
        });
    }
    let d = seq.snapshots[0].feature_dim();
    for snap in &seq.snapshots {
        if snap.feature_dim() != d {
            return Err(Error::Dimension(format!(
                "snapshot {} has feature dim {}, expected uniform {} (apply pca_project first)",
                snap.t,
                snap.feature_dim(),
                d
            )));
        }
    }
    let n = seq.n_points();
    let mut out = Vec::new();
    let mut start = 0; // 0-based start offset
    while start + s <= t_total {
        let mut inputs = DMatrix::zeros(d * n, s);
        let mut targets = DMatrix::zeros(n * n, s);
        for offset in 0..s {
            let x = &seq.snapshots[start + offset].data;
            inputs.column_mut(offset).copy_from(&vec_mat(x));
            let gram = x.transpose() * x;
            targets.column_mut(offset).copy_from(&vec_mat(&gram));
        }
        out.push(SequenceWindow {
            inputs,
            targets,
            origin: (seq.name.clone(), start + 1),
        });
        start += stride;
    }
    Ok(out)
}
