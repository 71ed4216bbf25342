//! Metrics, benchmark orchestration, and report emission.
//!
//! [`clustering_error`] scores predicted against ground-truth labels as
//! `100 * (1 - best-bijection matched fraction)`, enumerating cluster-id
//! bijections outright for up to 5 clusters and switching to a Hungarian
//! assignment above. [`run_benchmark`] runs a set of methods over a labeled
//! dataset under a [`Protocol`] — errors averaged over `t = 2..T` for
//! smoothing (the first step is excluded: static and smoothed methods
//! coincide there), or train-on-prefix/score-last-m for the test protocols —
//! and [`emit_report`] renders the result as CSV or a markdown table.

use std::time::Instant;

use crate::baselines::{DistanceKernel, LearnerConfig, LearnerKind, Method, MethodKind};
use crate::data::{derive_seed, EvolvingSequence};
use crate::error::{Error, Result};
use crate::lstm::{default_hidden, Optimizer, TrainConfig};
use crate::spectral::{spectral_cluster, ClusterLabels};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

/// How benchmark errors are scored against time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Score every step the methods smoothed over, excluding `t = 1`.
    Smoothing,
    /// Train/recurse on `1..T-m`, score only the last `m` (1 or 2) steps.
    TestLast(usize),
}

impl Protocol {
    pub fn parse(token: &str) -> Result<Protocol> {
        match token {
            "smoothing" => Ok(Protocol::Smoothing),
            "test1" | "test_last_1" => Ok(Protocol::TestLast(1)),
            "test2" | "test_last_2" => Ok(Protocol::TestLast(2)),
            other => Err(Error::Parameter(format!(
                "unknown protocol '{other}' (expected smoothing | test1 | test2)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Smoothing => "smoothing",
            Protocol::TestLast(1) => "test_last_1",
            Protocol::TestLast(2) => "test_last_2",
            Protocol::TestLast(_) => "test_last_m",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Protocol::TestLast(m) if !(1..=2).contains(m) => Err(Error::Parameter(format!(
                "test protocol holds out 1 or 2 snapshots, not {m}"
            ))),
            _ => Ok(()),
        }
    }

    /// 1-based evaluated time steps for a sequence of length `t_total`,
    /// and the training prefix length handed to learned methods.
    fn split(&self, t_total: usize, name: &str) -> Result<(Vec<usize>, Option<usize>)> {
        match *self {
            Protocol::Smoothing => {
                if t_total < 2 {
                    return Err(Error::Protocol(format!(
                        "smoothing protocol needs T >= 2, sequence '{name}' has T = {t_total}"
                    )));
                }
                Ok(((2..=t_total).collect(), None))
            }
            Protocol::TestLast(m) => {
                if t_total < m + 1 {
                    return Err(Error::Protocol(format!(
                        "test protocol holds out {m} of {t_total} snapshots of '{name}' leaving no training data"
                    )));
                }
                Ok(((t_total - m + 1..=t_total).collect(), Some(t_total - m)))
            }
        }
    }
}

/// Static-learner template: `k_max` resolves to `2 * clusters` per sequence
/// when unset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerTemplate {
    pub kind: LearnerKind,
    pub k_max: Option<usize>,
    pub epsilon: f64,
    pub lambda_bp: f64,
    pub iters: usize,
}

impl LearnerTemplate {
    pub fn new(kind: LearnerKind) -> Self {
        LearnerTemplate {
            kind,
            k_max: None,
            epsilon: 1e-6,
            lambda_bp: 0.1,
            iters: 500,
        }
    }

    fn resolve(&self, clusters: usize) -> LearnerConfig {
        LearnerConfig {
            kind: self.kind,
            k_max: self.k_max.unwrap_or((2 * clusters).max(1)),
            epsilon: self.epsilon,
            lambda_bp: self.lambda_bp,
            iters: self.iters,
        }
    }
}

/// A method template: per-sequence quantities (`k_max`, hidden size, window
/// length) stay symbolic until [`MethodSpec::resolve`] binds them to one
/// sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Static {
        learner: LearnerTemplate,
    },
    Affect {
        learner: LearnerTemplate,
        alpha: f64,
    },
    Cesm {
        learner: LearnerTemplate,
        outer_iters: usize,
    },
    LstmEscm {
        lambda: f64,
        learning_rate: f64,
        epochs: usize,
        /// `ceil(N / 5)` when unset.
        hidden: Option<usize>,
        grad_clip: f64,
        /// `min(8, training steps)` when unset.
        window: Option<usize>,
        stride: usize,
    },
    AffectDistance {
        kernel: DistanceKernel,
        alpha: f64,
    },
}

impl MethodSpec {
    pub fn lstm_default() -> Self {
        MethodSpec::LstmEscm {
            lambda: 0.1,
            learning_rate: 1e-3,
            epochs: 300,
            hidden: None,
            grad_clip: 5.0,
            window: None,
            stride: 1,
        }
    }

    /// Expand one `--methods` token into specs. Bare family names expand to
    /// both learners (`static` → OMP and l1pg rows, matching the reference
    /// report shape); suffixed names (`static-omp`) pick one. `affect-dist`
    /// expands to both distance kernels.
    pub fn parse_token(token: &str) -> Result<Vec<MethodSpec>> {
        let both = |f: &dyn Fn(LearnerTemplate) -> MethodSpec| {
            vec![
                f(LearnerTemplate::new(LearnerKind::Omp)),
                f(LearnerTemplate::new(LearnerKind::L1Pg)),
            ]
        };
        let learner_of = |suffix: &str| -> Result<LearnerTemplate> {
            match suffix {
                "omp" => Ok(LearnerTemplate::new(LearnerKind::Omp)),
                "l1pg" => Ok(LearnerTemplate::new(LearnerKind::L1Pg)),
                other => Err(Error::Parameter(format!(
                    "unknown learner suffix '{other}' in method token '{token}' (expected omp | l1pg)"
                ))),
            }
        };
        match token {
            "static" => Ok(both(&|learner| MethodSpec::Static { learner })),
            "affect" => Ok(both(&|learner| MethodSpec::Affect {
                learner,
                alpha: 0.5,
            })),
            "cesm" => Ok(both(&|learner| MethodSpec::Cesm {
                learner,
                outer_iters: 3,
            })),
            "lstm" | "lstm-escm" => Ok(vec![MethodSpec::lstm_default()]),
            "affect-dist" => Ok(vec![
                MethodSpec::AffectDistance {
                    kernel: DistanceKernel::NegSqEuclidean,
                    alpha: 0.5,
                },
                MethodSpec::AffectDistance {
                    kernel: DistanceKernel::ExpNegSqEuclidean,
                    alpha: 0.5,
                },
            ]),
            other => match other.rsplit_once('-') {
                Some(("static", s)) => Ok(vec![MethodSpec::Static {
                    learner: learner_of(s)?,
                }]),
                Some(("affect", s)) => Ok(vec![MethodSpec::Affect {
                    learner: learner_of(s)?,
                    alpha: 0.5,
                }]),
                Some(("cesm", s)) => Ok(vec![MethodSpec::Cesm {
                    learner: learner_of(s)?,
                    outer_iters: 3,
                }]),
                Some(("affect-dist", "neg")) => Ok(vec![MethodSpec::AffectDistance {
                    kernel: DistanceKernel::NegSqEuclidean,
                    alpha: 0.5,
                }]),
                Some(("affect-dist", "exp")) => Ok(vec![MethodSpec::AffectDistance {
                    kernel: DistanceKernel::ExpNegSqEuclidean,
                    alpha: 0.5,
                }]),
                _ => {
                    // Reuse the canonical kind parser for its error message.
                    MethodKind::parse(other)?;
                    unreachable!("tokens accepted by MethodKind::parse are handled above")
                }
            },
        }
    }

    /// Parse a comma-separated `--methods` list.
    pub fn parse_list(list: &str) -> Result<Vec<MethodSpec>> {
        let mut specs = Vec::new();
        for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            specs.extend(MethodSpec::parse_token(token)?);
        }
        Ok(specs)
    }

    /// Bind the template to one sequence. `train_len` is the training-prefix
    /// length under test protocols; `seed` drives recurrent-model training.
    pub fn resolve(
        &self,
        seq: &EvolvingSequence,
        train_len: Option<usize>,
        seed: u64,
    ) -> Result<Method> {
        let clusters = seq.n_motions;
        Ok(match self {
            MethodSpec::Static { learner } => Method::Static {
                learner: learner.resolve(clusters),
            },
            MethodSpec::Affect { learner, alpha } => Method::Affect {
                learner: learner.resolve(clusters),
                alpha: *alpha,
            },
            MethodSpec::Cesm {
                learner,
                outer_iters,
            } => Method::Cesm {
                learner: learner.resolve(clusters),
                outer_iters: *outer_iters,
            },
            MethodSpec::LstmEscm {
                lambda,
                learning_rate,
                epochs,
                hidden,
                grad_clip,
                window,
                stride,
            } => {
                let steps = train_len.unwrap_or(seq.len());
                Method::LstmEscm {
                    train: TrainConfig {
                        lambda: *lambda,
                        learning_rate: *learning_rate,
                        epochs: *epochs,
                        hidden: hidden.unwrap_or_else(|| default_hidden(seq.n_points())),
                        grad_clip: *grad_clip,
                        seed,
                        optimizer: Optimizer::default_adam(),
                    },
                    window: window.unwrap_or_else(|| steps.min(8)),
                    stride: *stride,
                }
            }
            MethodSpec::AffectDistance { kernel, alpha } => Method::AffectDistance {
                kernel: *kernel,
                alpha: *alpha,
            },
        })
    }
}

/// Misclassification percentage under the best cluster-id bijection:
/// `100 * (1 - max_matching fraction)`. Exhaustive over bijections for up to
/// 5 clusters, Hungarian assignment above.
pub fn clustering_error(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Input(format!(
            "label lengths differ: {} predicted vs {} true",
            pred.len(),
            truth.len()
        )));
    }
    let n = pred.len();
    if n == 0 {
        return Err(Error::Input("cannot score empty label vectors".into()));
    }
    let kk = pred.k.max(truth.k);
    // Contingency table, zero-padded to square.
    let mut counts = vec![vec![0usize; kk]; kk];
    for (&p, &t) in pred.labels.iter().zip(truth.labels.iter()) {
        counts[p - 1][t - 1] += 1;
    }
    let matched = if kk <= 5 {
        best_match_enumerate(&counts)
    } else {
        best_match_hungarian(&counts)
    };
    // Integer mismatch count first: 1 flip in 10 points is exactly 10%.
    Ok(100.0 * ((n - matched) as f64) / n as f64)
}

/// Chance level for a labeling: the error of the best constant predictor,
/// `100 * (1 - max cluster fraction)`.
pub fn chance_level(truth: &ClusterLabels) -> f64 {
    let n = truth.len();
    if n == 0 {
        return 0.0;
    }
    let mut counts = vec![0usize; truth.k];
    for &t in &truth.labels {
        counts[t - 1] += 1;
    }
    let max = counts.into_iter().max().unwrap_or(0);
    100.0 * ((n - max) as f64) / n as f64
}

fn best_match_enumerate(counts: &[Vec<usize>]) -> usize {
    let k = counts.len();
    let mut best = 0usize;
    let mut perm = Vec::with_capacity(k);
    let mut used = vec![false; k];
    enumerate_rec(counts, k, &mut perm, &mut used, &mut best);
    best
}

fn enumerate_rec(
    counts: &[Vec<usize>],
    k: usize,
    perm: &mut Vec<usize>,
    used: &mut Vec<bool>,
    best: &mut usize,
) {
    if perm.len() == k {
        let matched: usize = perm.iter().enumerate().map(|(i, &j)| counts[i][j]).sum();
        *best = (*best).max(matched);
        return;
    }
    for j in 0..k {
        if !used[j] {
            used[j] = true;
            perm.push(j);
            enumerate_rec(counts, k, perm, used, best);
            perm.pop();
            used[j] = false;
        }
    }
}

/// Maximum-weight perfect matching on a square nonnegative integer matrix
/// (Hungarian algorithm with potentials, O(k^3)).
fn best_match_hungarian(counts: &[Vec<usize>]) -> usize {
    let n = counts.len();
    let max_w = counts
        .iter()
        .flat_map(|r| r.iter())
        .copied()
        .max()
        .unwrap_or(0) as i64;
    // Minimize cost = max_w - weight; potentials over a virtual 0 row/col.
    let cost = |i: usize, j: usize| -> i64 { max_w - counts[i][j] as i64 };
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut assigned_row = vec![0usize; n + 1]; // column j -> row (1-based; 0 = free)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| counts[assigned_row[j] - 1][j - 1]).sum()
}

/// Per-sequence outcome of one method.
#[derive(Debug, Clone)]
pub struct SequenceResult {
    pub sequence: String,
    /// Mean error over this sequence's evaluated steps.
    pub error_pct: f64,
    /// Wall clock around representation + spectral clustering.
    pub runtime_s: f64,
    /// Wall clock around representation learning alone.
    pub repr_runtime_s: f64,
    /// `(t, error)` for each evaluated step.
    pub per_step_errors: Vec<(usize, f64)>,
}

/// One method's aggregate line in the report.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub method: String,
    pub learner: String,
    /// Mean over every evaluated (sequence, step) cell.
    pub mean_error_pct: f64,
    /// Mean per-sequence wall clock (representation + spectral).
    pub mean_runtime_s: f64,
    /// Mean per-sequence wall clock of representation learning alone.
    pub mean_repr_runtime_s: f64,
    pub per_sequence: Vec<SequenceResult>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    pub protocol: Protocol,
    pub seed: u64,
    /// SHA-256 over the resolved benchmark configuration.
    pub config_hash: String,
    /// Seconds since the Unix epoch at report creation.
    pub timestamp: u64,
}

/// Run every method over every sequence under the protocol. Cells run in
/// parallel on the current rayon pool; all randomness is derived from `seed`
/// (per cell, then per time step), so error columns are reproducible
/// bitwise — runtimes, of course, are not.
pub fn run_benchmark(
    dataset: &[EvolvingSequence],
    methods: &[MethodSpec],
    protocol: Protocol,
    seed: u64,
) -> Result<BenchmarkReport> {
    protocol.validate()?;
    if dataset.is_empty() {
        return Err(Error::Input("benchmark dataset is empty".into()));
    }
    for seq in dataset {
        for snap in &seq.snapshots {
            if snap.labels.is_none() {
                return Err(Error::Protocol(format!(
                    "sequence '{}' has no ground-truth labels at t = {}",
                    seq.name, snap.t
                )));
            }
        }
    }

    let cells: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..dataset.len()).map(move |s| (m, s)))
        .collect();
    let mut results: Vec<(usize, usize, SequenceResult)> = cells
        .into_par_iter()
        .map(|(m, s)| {
            let cell_seed = derive_seed(derive_seed(seed, m as u64 + 1), s as u64 + 1);
            let result = run_cell(&dataset[s], &methods[m], protocol, cell_seed)?;
            Ok((m, s, result))
        })
        .collect::<Result<_>>()?;
    results.sort_by_key(|&(m, s, _)| (m, s));

    let mut rows: Vec<ReportRow> = Vec::with_capacity(methods.len());
    for (m, spec) in methods.iter().enumerate() {
        let per_sequence: Vec<SequenceResult> = results
            .iter()
            .filter(|&&(rm, _, _)| rm == m)
            .map(|(_, _, r)| r.clone())
            .collect();
        let all_steps: Vec<f64> = per_sequence
            .iter()
            .flat_map(|r| r.per_step_errors.iter().map(|&(_, e)| e))
            .collect();
        let mean_error_pct = all_steps.iter().sum::<f64>() / all_steps.len() as f64;
        let count = per_sequence.len() as f64;
        let mean_runtime_s = per_sequence.iter().map(|r| r.runtime_s).sum::<f64>() / count;
        let mean_repr_runtime_s =
            per_sequence.iter().map(|r| r.repr_runtime_s).sum::<f64>() / count;
        // Resolve against the first sequence only to name the row.
        let named = spec.resolve(&dataset[0], None, 0)?;
        rows.push(ReportRow {
            method: named.report_name().to_string(),
            learner: named.learner_name().to_string(),
            mean_error_pct,
            mean_runtime_s,
            mean_repr_runtime_s,
            per_sequence,
        });
    }

    Ok(BenchmarkReport {
        rows,
        protocol,
        seed,
        config_hash: config_hash(dataset, methods, protocol, seed),
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    })
}

fn run_cell(
    seq: &EvolvingSequence,
    spec: &MethodSpec,
    protocol: Protocol,
    cell_seed: u64,
) -> Result<SequenceResult> {
    let (eval_steps, train_len) = protocol.split(seq.len(), &seq.name)?;
    let method = spec.resolve(seq, train_len, derive_seed(cell_seed, 0xA11CE))?;

    let repr_start = Instant::now();
    let affinities = crate::baselines::method_affinities(seq, &method, train_len)?;
    let repr_runtime_s = repr_start.elapsed().as_secs_f64();

    let mut spectral_elapsed = 0.0;
    let mut per_step_errors = Vec::with_capacity(eval_steps.len());
    for &t in &eval_steps {
        let snap = &seq.snapshots[t - 1];
        let spectral_start = Instant::now();
        let pred = spectral_cluster(
            &affinities[t - 1],
            seq.n_motions,
            derive_seed(cell_seed, t as u64),
        )?;
        spectral_elapsed += spectral_start.elapsed().as_secs_f64();
        let truth = ClusterLabels::new(
            snap.labels
                .clone()
                .expect("labels checked by run_benchmark"),
            seq.n_motions,
        )?;
        per_step_errors.push((t, clustering_error(&pred, &truth)?));
    }

    let error_pct =
        per_step_errors.iter().map(|&(_, e)| e).sum::<f64>() / per_step_errors.len() as f64;
    Ok(SequenceResult {
        sequence: seq.name.clone(),
        error_pct,
        runtime_s: repr_runtime_s + spectral_elapsed,
        repr_runtime_s,
        per_step_errors,
    })
}

fn config_hash(
    dataset: &[EvolvingSequence],
    methods: &[MethodSpec],
    protocol: Protocol,
    seed: u64,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("{protocol:?}|{seed}|{methods:?}|"));
    for seq in dataset {
        hasher.update(&seq.name);
        hasher.update("|");
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Two-decimal rendering used for all report floats (Rust's formatter
/// rounds ties to even digits).
pub fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Render a report. CSV carries the fixed header
/// `method,learner,protocol,error_pct,runtime_s`; markdown mirrors the
/// reference table layout (method/learner rows, error and runtime columns,
/// plus the internal representation-only runtime column) and round-trips
/// through [`parse_markdown_report`].
pub fn emit_report(report: &BenchmarkReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("method,learner,protocol,error_pct,runtime_s\n");
            for row in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.method,
                    row.learner,
                    report.protocol.name(),
                    fmt2(row.mean_error_pct),
                    fmt2(row.mean_runtime_s)
                ));
            }
            out
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            out.push_str("# Benchmark report\n\n");
            out.push_str(&format!("protocol: {}\n", report.protocol.name()));
            out.push_str(&format!("seed: {}\n", report.seed));
            out.push_str(&format!("config: {}\n", report.config_hash));
            out.push_str(&format!("generated: {}\n\n", report.timestamp));
            out.push_str("| Method | Learner | Error (%) | Runtime (s) | Repr time (s) |\n");
            out.push_str("|---|---|---|---|---|\n");
            for row in &report.rows {
                out.push_str(&format!(
                    "| {} | {} | {} | {} | {} |\n",
                    row.method,
                    row.learner,
                    fmt2(row.mean_error_pct),
                    fmt2(row.mean_runtime_s),
                    fmt2(row.mean_repr_runtime_s)
                ));
            }
            out
        }
    }
}

/// One parsed markdown-report line.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub method: String,
    pub learner: String,
    pub error_pct: f64,
    pub runtime_s: f64,
    pub repr_runtime_s: f64,
}

/// A markdown report read back by [`parse_markdown_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub protocol: Protocol,
    pub seed: u64,
    pub rows: Vec<ParsedRow>,
}

/// Parse the output of [`emit_report`] with [`ReportFormat::Markdown`].
pub fn parse_markdown_report(text: &str) -> Result<ParsedReport> {
    let mut protocol = None;
    let mut seed = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("protocol: ") {
            protocol = Some(Protocol::parse(rest.trim())?);
        } else if let Some(rest) = line.strip_prefix("seed: ") {
            seed =
                Some(rest.trim().parse::<u64>().map_err(|e| {
                    Error::Format(format!("bad seed line in markdown report: {e}"))
                })?);
        } else if line.starts_with('|') && !line.starts_with("|-") && !line.contains("Method") {
            let cells: Vec<&str> = line.trim_matches('|').split('|').map(str::trim).collect();
            if cells.len() != 5 {
                return Err(Error::Format(format!(
                    "markdown report row has {} cells, expected 5: {line}",
                    cells.len()
                )));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number '{s}' in report row: {e}")))
            };
            rows.push(ParsedRow {
                method: cells[0].to_string(),
                learner: cells[1].to_string(),
                error_pct: num(cells[2])?,
                runtime_s: num(cells[3])?,
                repr_runtime_s: num(cells[4])?,
            });
        }
    }
    Ok(ParsedReport {
        protocol: protocol
            .ok_or_else(|| Error::Format("markdown report lacks a protocol line".into()))?,
        seed: seed.ok_or_else(|| Error::Format("markdown report lacks a seed line".into()))?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{normalize_columns, synth_evolving, SynthConfig};
    use crate::error::Error;

    fn labels(v: &[usize], k: usize) -> ClusterLabels {
        ClusterLabels::new(v.to_vec(), k).unwrap()
    }

    #[test]
    fn identical_labelings_have_zero_error() {
        let a = labels(&[1, 1, 2, 2, 3], 3);
        assert_eq!(clustering_error(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn error_is_invariant_under_id_swaps() {
        let truth = labels(&[1, 1, 2, 2, 3, 3], 3);
        let swapped = labels(&[3, 3, 1, 1, 2, 2], 3);
        assert_eq!(clustering_error(&swapped, &truth).unwrap(), 0.0);
    }

    #[test]
    fn one_flip_in_ten_is_ten_percent() {
        let truth = labels(&[1, 1, 1, 1, 1, 2, 2, 2, 2, 2], 2);
        let pred = labels(&[1, 1, 1, 1, 2, 2, 2, 2, 2, 2], 2);
        // Oracle: both bijections by hand — identity matches 9/10, the swap
        // matches 1/10; best is 9/10.
        assert_eq!(clustering_error(&pred, &truth).unwrap(), 10.0);
    }

    #[test]
    fn constant_predictor_hits_the_chance_bound_on_balanced_data() {
        let truth = labels(&[1, 1, 1, 2, 2, 2, 3, 3, 3], 3);
        let constant = labels(&[1; 9], 3);
        let err = clustering_error(&constant, &truth).unwrap();
        let bound = 100.0 * (1.0 - 1.0 / 3.0);
        assert!((err - bound).abs() < 1e-12);
        assert!((chance_level(&truth) - bound).abs() < 1e-12);
    }

    #[test]
    fn error_rejects_mismatched_lengths() {
        let a = labels(&[1, 2], 2);
        let b = labels(&[1, 2, 1], 2);
        assert!(matches!(clustering_error(&a, &b), Err(Error::Input(_))));
    }

    #[test]
    fn relabeling_either_side_never_changes_the_error() {
        let truth = labels(&[1, 2, 3, 1, 2, 3, 1, 1, 2, 3, 3, 3], 3);
        let pred = labels(&[2, 2, 1, 1, 3, 3, 2, 1, 3, 1, 1, 2], 3);
        let base = clustering_error(&pred, &truth).unwrap();
        // Apply every permutation of ids to pred; the error must not move.
        let perms: [[usize; 3]; 6] = [
            [1, 2, 3],
            [1, 3, 2],
            [2, 1, 3],
            [2, 3, 1],
            [3, 1, 2],
            [3, 2, 1],
        ];
        for p in perms {
            let relabeled: Vec<usize> = pred.labels.iter().map(|&l| p[l - 1]).collect();
            let r = labels(&relabeled, 3);
            assert_eq!(clustering_error(&r, &truth).unwrap(), base);
        }
    }

    #[test]
    fn hungarian_agrees_with_exhaustive_enumeration() {
        // Pseudo-random contingency tables at sizes that force the
        // Hungarian path (k > 5), checked against brute force (k! <= 5040).
        for trial in 0..40u64 {
            for k in [6usize, 7] {
                let mut state = trial.wrapping_mul(0x9E37_79B9).wrapping_add(k as u64);
                let mut next = || {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    (state >> 33) as usize % 17
                };
                let counts: Vec<Vec<usize>> =
                    (0..k).map(|_| (0..k).map(|_| next()).collect()).collect();
                assert_eq!(
                    best_match_hungarian(&counts),
                    best_match_enumerate(&counts),
                    "counts {counts:?}"
                );
            }
        }
    }

    #[test]
    fn large_k_error_uses_the_assignment_path() {
        // 6 clusters of 2 points, predictions are a cyclic id shift: still 0%.
        let truth_v: Vec<usize> = (1..=6).flat_map(|c| [c, c]).collect();
        let pred_v: Vec<usize> = truth_v.iter().map(|&c| c % 6 + 1).collect();
        let truth = labels(&truth_v, 6);
        let pred = labels(&pred_v, 6);
        assert_eq!(clustering_error(&pred, &truth).unwrap(), 0.0);
    }

    fn tiny_dataset(n_seqs: usize, steps: usize) -> Vec<EvolvingSequence> {
        (0..n_seqs)
            .map(|i| {
                let cfg = SynthConfig {
                    ambient_dim: 8,
                    points_per_subspace: vec![8, 8],
                    subspace_dims: vec![2, 2],
                    steps,
                    rotation_rate: 0.05,
                    noise_sigma: 0.0,
                    seed: 100 + i as u64,
                };
                let seq = synth_evolving(&cfg).unwrap();
                let snaps = seq
                    .snapshots
                    .iter()
                    .map(|s| normalize_columns(s).0)
                    .collect();
                EvolvingSequence::new(snaps, seq.n_motions, seq.name.clone()).unwrap()
            })
            .collect()
    }

    #[test]
    fn benchmark_produces_rows_with_full_per_sequence_breakdowns() {
        let data = tiny_dataset(2, 4);
        let methods = [
            MethodSpec::Static {
                learner: LearnerTemplate::new(LearnerKind::Omp),
            },
            MethodSpec::Cesm {
                learner: LearnerTemplate::new(LearnerKind::Omp),
                outer_iters: 2,
            },
        ];
        let report = run_benchmark(&data, &methods, Protocol::Smoothing, 7).unwrap();
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert_eq!(row.per_sequence.len(), data.len());
            assert!((0.0..=100.0).contains(&row.mean_error_pct));
            assert!(row.mean_runtime_s >= 0.0);
            assert!(row.mean_repr_runtime_s <= row.mean_runtime_s);
            for sr in &row.per_sequence {
                // Smoothing evaluates t = 2..T.
                assert_eq!(sr.per_step_errors.len(), 3);
                assert!(sr.per_step_errors.iter().all(|&(t, _)| t >= 2));
            }
        }
        assert_eq!(report.rows[0].method, "static");
        assert_eq!(report.rows[1].method, "CESM (reimpl.)");
        assert_eq!(report.rows[1].learner, "omp");
    }

    #[test]
    fn benchmark_error_columns_are_reproducible_bitwise() {
        let data = tiny_dataset(2, 3);
        let methods = MethodSpec::parse_list("static-omp,affect-omp").unwrap();
        let a = run_benchmark(&data, &methods, Protocol::Smoothing, 42).unwrap();
        let b = run_benchmark(&data, &methods, Protocol::Smoothing, 42).unwrap();
        for (ra, rb) in a.rows.iter().zip(b.rows.iter()) {
            assert_eq!(ra.mean_error_pct.to_bits(), rb.mean_error_pct.to_bits());
            for (sa, sb) in ra.per_sequence.iter().zip(rb.per_sequence.iter()) {
                assert_eq!(sa.error_pct.to_bits(), sb.error_pct.to_bits());
            }
        }
    }

    #[test]
    fn test_protocol_scores_only_the_held_out_tail() {
        let data = tiny_dataset(1, 5);
        let methods = MethodSpec::parse_list("static-omp").unwrap();
        let report = run_benchmark(&data, &methods, Protocol::TestLast(2), 3).unwrap();
        let steps: Vec<usize> = report.rows[0].per_sequence[0]
            .per_step_errors
            .iter()
            .map(|&(t, _)| t)
            .collect();
        assert_eq!(steps, vec![4, 5]);
    }

    #[test]
    fn too_short_sequences_fail_the_test_protocol() {
        let data = tiny_dataset(1, 2);
        let methods = MethodSpec::parse_list("static-omp").unwrap();
        assert!(matches!(
            run_benchmark(&data, &methods, Protocol::TestLast(2), 3),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn unlabeled_sequences_are_a_protocol_error() {
        let mut data = tiny_dataset(1, 3);
        for snap in &mut data[0].snapshots {
            snap.labels = None;
        }
        let methods = MethodSpec::parse_list("static-omp").unwrap();
        assert!(matches!(
            run_benchmark(&data, &methods, Protocol::Smoothing, 3),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn empty_method_list_yields_empty_rows_with_metadata() {
        let data = tiny_dataset(1, 3);
        let report = run_benchmark(&data, &[], Protocol::Smoothing, 9).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.seed, 9);
        assert_eq!(report.config_hash.len(), 64);
        let csv = emit_report(&report, ReportFormat::Csv);
        assert_eq!(csv, "method,learner,protocol,error_pct,runtime_s\n");
    }

    #[test]
    fn csv_has_exactly_header_plus_one_line_per_row() {
        let data = tiny_dataset(1, 3);
        let methods = MethodSpec::parse_list("static-omp").unwrap();
        let report = run_benchmark(&data, &methods, Protocol::Smoothing, 5).unwrap();
        let csv = emit_report(&report, ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "method,learner,protocol,error_pct,runtime_s");
        assert!(lines[1].starts_with("static,omp,smoothing,"));
    }

    #[test]
    fn report_floats_round_to_two_decimals_half_even() {
        assert_eq!(fmt2(5.6049), "5.60");
        assert_eq!(fmt2(0.125), "0.12");
        assert_eq!(fmt2(0.375), "0.38");
        assert_eq!(fmt2(31.655), "31.66");
    }

    #[test]
    fn markdown_report_round_trips_through_the_parser() {
        let data = tiny_dataset(2, 3);
        let methods = MethodSpec::parse_list("static,cesm-omp").unwrap();
        let report = run_benchmark(&data, &methods, Protocol::Smoothing, 11).unwrap();
        let md = emit_report(&report, ReportFormat::Markdown);
        let parsed = parse_markdown_report(&md).unwrap();
        assert_eq!(parsed.protocol, report.protocol);
        assert_eq!(parsed.seed, report.seed);
        assert_eq!(parsed.rows.len(), report.rows.len());
        for (p, r) in parsed.rows.iter().zip(report.rows.iter()) {
            assert_eq!(p.method, r.method);
            assert_eq!(p.learner, r.learner);
            // Values identical to what was printed (2-decimal rounding).
            assert_eq!(p.error_pct, fmt2(r.mean_error_pct).parse::<f64>().unwrap());
            assert_eq!(p.runtime_s, fmt2(r.mean_runtime_s).parse::<f64>().unwrap());
        }
    }

    #[test]
    fn protocol_tokens_parse_and_reject() {
        assert_eq!(Protocol::parse("smoothing").unwrap(), Protocol::Smoothing);
        assert_eq!(Protocol::parse("test1").unwrap(), Protocol::TestLast(1));
        assert_eq!(Protocol::parse("test2").unwrap(), Protocol::TestLast(2));
        assert_eq!(
            Protocol::parse("test_last_1").unwrap(),
            Protocol::TestLast(1)
        );
        assert!(Protocol::parse("test3").is_err());
    }

    #[test]
    fn method_tokens_expand_to_the_reference_shape() {
        let specs = MethodSpec::parse_list("static,affect,cesm,lstm").unwrap();
        // static and affect and cesm expand x2 (omp, l1pg); lstm is one row.
        assert_eq!(specs.len(), 7);
        assert!(matches!(specs[6], MethodSpec::LstmEscm { .. }));
        let single = MethodSpec::parse_list("cesm-l1pg").unwrap();
        assert_eq!(single.len(), 1);
        assert!(matches!(
            single[0],
            MethodSpec::Cesm {
                learner: LearnerTemplate {
                    kind: LearnerKind::L1Pg,
                    ..
                },
                ..
            }
        ));
        let dist = MethodSpec::parse_list("affect-dist").unwrap();
        assert_eq!(dist.len(), 2);
        assert!(MethodSpec::parse_list("bogus").is_err());
        assert!(MethodSpec::parse_list("static-qr").is_err());
    }

    #[test]
    fn resolve_fills_per_sequence_defaults() {
        let data = tiny_dataset(1, 6);
        let seq = &data[0];
        let spec = MethodSpec::Static {
            learner: LearnerTemplate::new(LearnerKind::Omp),
        };
        match spec.resolve(seq, None, 0).unwrap() {
            Method::Static { learner } => {
                assert_eq!(learner.k_max, 4); // 2 * n_motions
            }
            other => panic!("unexpected {other:?}"),
        }
        match MethodSpec::lstm_default()
            .resolve(seq, Some(4), 99)
            .unwrap()
        {
            Method::LstmEscm { train, window, .. } => {
                assert_eq!(train.hidden, 4); // ceil(16 / 5)
                assert_eq!(window, 4); // min(8, train_len)
                assert_eq!(train.seed, 99);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
