//! Trajectory file ingestion and snapshot extraction.
//!
//! The on-disk format is plain UTF-8 text with LF line endings:
//!
//! ```text
//! frames=<F> points=<N> motions=<n>
//! labels=<N space-separated integers in 1..n>     (or `labels=none`)
//! <row 1: N floats>                                (x-coordinates of frame 1)
//! <row 2: N floats>                                (y-coordinates of frame 1)
//! ...                                              (2F body rows total)
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces the matrix bit-exactly.

use std::path::Path;

use crate::data::{EvolvingSequence, Snapshot};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Raw tracked trajectories: a `2F x N` matrix (rows alternate x/y per
/// frame), optional per-point motion labels, and the annotated motion count.
#[derive(Debug, Clone)]
pub struct EvolvingTrajectories {
    /// `2F x N`; row `2k-1` holds x-coordinates of frame `k`, row `2k` the
    /// y-coordinates (1-based).
    pub data: DMatrix<f64>,
    pub labels: Option<Vec<usize>>,
    pub n_motions: usize,
    pub name: String,
}

impl EvolvingTrajectories {
    /// Validating constructor: even row count, finite entries, labels of
    /// length `N` within `1..=n_motions`.
    pub fn new(
        data: DMatrix<f64>,
        labels: Option<Vec<usize>>,
        n_motions: usize,
        name: String,
    ) -> Result<Self> {
        if data.nrows() == 0 || !data.nrows().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "trajectory matrix needs a positive even row count (2 per frame), got {}",
                data.nrows()
            )));
        }
        if n_motions == 0 {
            return Err(Error::Parameter("motion count must be >= 1".into()));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Input(
                "trajectory contains non-finite entries".into(),
            ));
        }
        if let Some(ref l) = labels {
            if l.len() != data.ncols() {
                return Err(Error::Label(format!(
                    "label count {} does not match point count {}",
                    l.len(),
                    data.ncols()
                )));
            }
            if let Some(&bad) = l.iter().find(|&&v| v == 0 || v > n_motions) {
                return Err(Error::Label(format!("label {bad} outside 1..={n_motions}")));
            }
        }
        Ok(EvolvingTrajectories {
            data,
            labels,
            n_motions,
            name,
        })
    }

    pub fn frames(&self) -> usize {
        self.data.nrows() / 2
    }

    pub fn n_points(&self) -> usize {
        self.data.ncols()
    }
}

/// Parse a trajectory file. Rejects malformed headers, wrong row/column
/// counts, non-finite values, and labels outside `1..n`.
pub fn load_sequence(path: impl AsRef<Path>) -> Result<EvolvingTrajectories> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into());
    parse_trajectories(&text, name)
}

fn parse_trajectories(text: &str, name: String) -> Result<EvolvingTrajectories> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty trajectory file".into()))?;
    let (frames, n_points, n_motions) = parse_header(header)?;

    let labels_line = lines
        .next()
        .ok_or_else(|| Error::Format("missing labels line".into()))?;
    let labels = parse_labels_line(labels_line, n_points, n_motions)?;

    let body: Vec<&str> = lines.collect();
    // Trailing blank lines are tolerated; blank lines inside the body are not.
    let mut rows: Vec<&str> = body
        .iter()
        .copied()
        .take_while(|l| !l.trim().is_empty())
        .collect();
    if body[rows.len()..].iter().any(|l| !l.trim().is_empty()) {
        return Err(Error::Format("blank line inside trajectory body".into()));
    }
    if rows.len() != 2 * frames {
        return Err(Error::Dimension(format!(
            "body has {} rows, header demands 2F = {}",
            rows.len(),
            2 * frames
        )));
    }

    let mut data = DMatrix::zeros(2 * frames, n_points);
    for (i, row) in rows.drain(..).enumerate() {
        let values: Vec<&str> = row.split_whitespace().collect();
        if values.len() != n_points {
            return Err(Error::Dimension(format!(
                "body row {} has {} values, header demands N = {}",
                i + 1,
                values.len(),
                n_points
            )));
        }
        for (j, v) in values.iter().enumerate() {
            let parsed: f64 = v.parse().map_err(|_| {
                Error::Format(format!(
                    "body row {} column {}: invalid float {v:?}",
                    i + 1,
                    j + 1
                ))
            })?;
            if !parsed.is_finite() {
                return Err(Error::Format(format!(
                    "body row {} column {}: non-finite value {v:?}",
                    i + 1,
                    j + 1
                )));
            }
            data[(i, j)] = parsed;
        }
    }
    EvolvingTrajectories::new(data, labels, n_motions, name)
}

fn parse_header(line: &str) -> Result<(usize, usize, usize)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Format(format!(
            "header must be `frames=<F> points=<N> motions=<n>`, got {line:?}"
        )));
    }
    let parse = |field: &str, key: &str| -> Result<usize> {
        let value = field
            .strip_prefix(&format!("{key}="))
            .ok_or_else(|| Error::Format(format!("expected `{key}=<int>`, got {field:?}")))?;
        let v: usize = value
            .parse()
            .map_err(|_| Error::Format(format!("{key}: invalid integer {value:?}")))?;
        if v == 0 {
            return Err(Error::Format(format!("{key} must be >= 1")));
        }
        Ok(v)
    };
    Ok((
        parse(fields[0], "frames")?,
        parse(fields[1], "points")?,
        parse(fields[2], "motions")?,
    ))
}

fn parse_labels_line(line: &str, n_points: usize, n_motions: usize) -> Result<Option<Vec<usize>>> {
    let rest = line
        .strip_prefix("labels=")
        .ok_or_else(|| Error::Format(format!("expected `labels=...`, got {line:?}")))?;
    if rest.trim() == "none" {
        return Ok(None);
    }
    let labels = rest
        .split_whitespace()
        .map(|v| {
            v.parse::<usize>()
                .map_err(|_| Error::Format(format!("labels: invalid integer {v:?}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    if labels.len() != n_points {
        return Err(Error::Label(format!(
            "label count {} does not match point count {}",
            labels.len(),
            n_points
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&v| v == 0 || v > n_motions) {
        return Err(Error::Label(format!("label {bad} outside 1..={n_motions}")));
    }
    Ok(Some(labels))
}

/// Write a trajectory file in the canonical format accepted by
/// [`load_sequence`]. Floats use shortest round-trip formatting.
pub fn save_sequence(path: impl AsRef<Path>, traj: &EvolvingTrajectories) -> Result<()> {
    std::fs::write(path, serialize_trajectories(traj))?;
    Ok(())
}

pub(crate) fn serialize_trajectories(traj: &EvolvingTrajectories) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "frames={} points={} motions={}\n",
        traj.frames(),
        traj.n_points(),
        traj.n_motions
    ));
    match &traj.labels {
        Some(l) => {
            out.push_str("labels=");
            let rendered: Vec<String> = l.iter().map(|v| v.to_string()).collect();
            out.push_str(&rendered.join(" "));
            out.push('\n');
        }
        None => out.push_str("labels=none\n"),
    }
    for i in 0..traj.data.nrows() {
        let row: Vec<String> = (0..traj.data.ncols())
            .map(|j| format!("{}", traj.data[(i, j)]))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Partition `F` frames into `T = floor(F / 2n)` contiguous snapshots. All
/// snapshots hold exactly `2n` frames except the last, which absorbs the
/// remainder (`F_T = 2n + F mod 2n`). Snapshot `t` stacks the x/y rows of its
/// frames into a `2F_t x N` matrix.
pub fn snapshotize(traj: &EvolvingTrajectories, n: usize) -> Result<EvolvingSequence> {
    if n == 0 {
        return Err(Error::Parameter("motion count must be >= 1".into()));
    }
    let f = traj.frames();
    if f < 2 * n {
        return Err(Error::InsufficientFrames {
            frames: f,
            needed: 2 * n,
        });
    }
    let t_total = f / (2 * n);
    let mut snapshots = Vec::with_capacity(t_total);
    let mut frame = 0;
    for t in 1..=t_total {
        let count = if t < t_total {
            2 * n
        } else {
            2 * n + f % (2 * n)
        };
        let rows = traj.data.rows(2 * frame, 2 * count).into_owned();
        snapshots.push(Snapshot::new(rows, traj.labels.clone(), t)?);
        frame += count;
    }
    EvolvingSequence::new(snapshots, n, traj.name.clone())
}

/// Re-concatenate a sequence whose snapshots still hold raw frame rows into
/// a trajectory set (inverse of [`snapshotize`]; also the export path for
/// synthetic data, whose feature dimension must then be even).
pub fn to_trajectories(seq: &EvolvingSequence) -> Result<EvolvingTrajectories> {
    let total_rows: usize = seq.snapshots.iter().map(|s| s.feature_dim()).sum();
    if !total_rows.is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "stacked snapshot rows {total_rows} are odd; cannot form x/y frame pairs"
        )));
    }
    let n = seq.n_points();
    let mut data = DMatrix::zeros(total_rows, n);
    let mut row = 0;
    for snap in &seq.snapshots {
        data.rows_mut(row, snap.feature_dim()).copy_from(&snap.data);
        row += snap.feature_dim();
    }
    EvolvingTrajectories::new(
        data,
        seq.snapshots[0].labels.clone(),
        seq.n_motions,
        seq.name.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_traj(frames: usize, points: usize) -> EvolvingTrajectories {
        let data = DMatrix::from_fn(2 * frames, points, |i, j| {
            (i as f64 * 1.37 - j as f64 * 0.61).sin() * 10.0
        });
        let labels = (0..points).map(|j| 1 + j % 2).collect();
        EvolvingTrajectories::new(data, Some(labels), 2, "sample".into()).unwrap()
    }

    #[test]
    fn header_dimensions_are_respected() {
        let mut text = String::from("frames=15 points=39 motions=2\nlabels=none\n");
        for i in 0..30 {
            let row: Vec<String> = (0..39)
                .map(|j| format!("{}", (i * 39 + j) as f64))
                .collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        let traj = parse_trajectories(&text, "t".into()).unwrap();
        assert_eq!(traj.data.nrows(), 30);
        assert_eq!(traj.data.ncols(), 39);
        assert_eq!(traj.frames(), 15);
    }

    #[test]
    fn short_body_is_a_dimension_error() {
        let mut text = String::from("frames=15 points=3 motions=2\nlabels=none\n");
        for i in 0..29 {
            text.push_str(&format!("{i} {i} {i}\n"));
        }
        assert!(matches!(
            parse_trajectories(&text, "t".into()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let traj = sample_traj(6, 9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.traj");
        save_sequence(&path, &traj).unwrap();
        let reloaded = load_sequence(&path).unwrap();
        assert_eq!(reloaded.data, traj.data);
        assert_eq!(reloaded.labels, traj.labels);
        // Oracle: canonical re-serialization matches byte for byte.
        let original_bytes = serialize_trajectories(&traj);
        let reloaded_bytes = serialize_trajectories(&reloaded);
        assert_eq!(original_bytes, reloaded_bytes);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), original_bytes);
    }

    #[test]
    fn round_trip_survives_awkward_floats() {
        // Shortest round-trip printing must reproduce subnormals, negative
        // zero, and long mantissas exactly.
        let data = DMatrix::from_row_slice(
            2,
            3,
            &[
                0.1 + 0.2,
                -0.0,
                1.0 / 3.0,
                f64::MIN_POSITIVE,
                1e300,
                -2.5e-17,
            ],
        );
        let traj = EvolvingTrajectories::new(data, None, 1, "odd".into()).unwrap();
        let text = serialize_trajectories(&traj);
        let back = parse_trajectories(&text, "odd".into()).unwrap();
        for (a, b) in traj.data.iter().zip(back.data.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn bad_header_and_labels_are_rejected() {
        assert!(matches!(
            parse_trajectories("frames=two points=3 motions=1\nlabels=none\n", "t".into()),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_trajectories(
                "frames=1 points=2 motions=1\nlabels=1 5\n1 1\n1 1\n",
                "t".into()
            ),
            Err(Error::Label(_))
        ));
        assert!(matches!(
            parse_trajectories(
                "frames=1 points=2 motions=1\nlabels=none\n1 nan\n1 1\n",
                "t".into()
            ),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn snapshot_partition_follows_remainder_rule() {
        let traj = sample_traj(15, 5);
        let seq = snapshotize(&traj, 2).unwrap();
        // F=15, n=2: T = 3 blocks of 4 frames, last absorbs 15 mod 4 = 3.
        assert_eq!(seq.len(), 3);
        let frame_counts: Vec<usize> = seq.snapshots.iter().map(|s| s.feature_dim() / 2).collect();
        assert_eq!(frame_counts, vec![4, 4, 7]);
    }

    #[test]
    fn thirty_frames_two_motions_gives_seven_snapshots() {
        let traj = sample_traj(30, 4);
        let seq = snapshotize(&traj, 2).unwrap();
        assert_eq!(seq.len(), 7);
        let frame_counts: Vec<usize> = seq.snapshots.iter().map(|s| s.feature_dim() / 2).collect();
        assert_eq!(frame_counts, vec![4, 4, 4, 4, 4, 4, 6]);
    }

    #[test]
    fn boundary_and_insufficient_frames() {
        let traj = sample_traj(4, 3);
        let seq = snapshotize(&traj, 2).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.snapshots[0].feature_dim(), 8);

        let traj = sample_traj(3, 3);
        assert!(matches!(
            snapshotize(&traj, 2),
            Err(Error::InsufficientFrames {
                frames: 3,
                needed: 4
            })
        ));
    }

    #[test]
    fn snapshot_blocks_reconcatenate_to_original() {
        let traj = sample_traj(17, 6);
        let seq = snapshotize(&traj, 2).unwrap();
        let rebuilt = to_trajectories(&seq).unwrap();
        assert_eq!(rebuilt.data, traj.data);
        assert_eq!(rebuilt.labels, traj.labels);
    }
}
