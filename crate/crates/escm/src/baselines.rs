//! Reference methods for the benchmark harness.
//!
//! Two static per-snapshot self-expression learners — greedy orthogonal
//! matching pursuit ([`omp_selfexpr`]) and L1 proximal gradient
//! ([`l1pg_selfexpr`]) — plus two temporal smoothers built on them:
//!
//! * AFFECT ([`affect_smooth`]): the fixed convex combination
//!   `C_t = alpha * C'_t + (1 - alpha) * C_{t-1}` of the fresh static
//!   solution `C'_t` and the previous coefficients.
//! * CESM ([`cesm`]): alternating minimization of an innovation matrix `U`
//!   and a mixing weight `alpha` per step, giving
//!   `C_t = alpha * U + (1 - alpha) * C_{t-1}`; reports label this
//!   reconstruction "CESM (reimpl.)".
//!
//! [`Method`] names one end-to-end representation method (including the
//! recurrent model) and [`smooth_cluster`] runs representation → affinity →
//! spectral clustering for every time step. Distance-based affinities
//! ([`distance_affinity`]) are available for AFFECT as a non-default variant.

use crate::data::{derive_seed, EvolvingSequence, Snapshot};
use crate::error::{Error, Result};
use crate::lstm::{infer_coeffs, train_sequence, SelfExpression, TrainConfig};
use crate::spectral::{affinity, spectral_cluster, Affinity, ClusterLabels};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Which static learner produces per-snapshot coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    /// Greedy orthogonal matching pursuit per column.
    Omp,
    /// L1 proximal gradient (ISTA) on the whole coefficient matrix.
    L1Pg,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Omp => "omp",
            LearnerKind::L1Pg => "l1pg",
        }
    }
}

/// Static learner hyperparameters. OMP reads `k_max`/`epsilon`; the L1
/// learner reads `lambda_bp`/`iters`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// Max atoms selected per column (OMP); >= 1.
    pub k_max: usize,
    /// Residual-norm early-stop tolerance (OMP); >= 0.
    pub epsilon: f64,
    /// L1 weight (l1pg); > 0.
    pub lambda_bp: f64,
    /// Max ISTA iterations (l1pg); >= 1.
    pub iters: usize,
}

impl LearnerConfig {
    /// OMP defaults: `k_max = 2 * clusters`, `epsilon = 1e-6`.
    pub fn omp_default(clusters: usize) -> Self {
        LearnerConfig {
            kind: LearnerKind::Omp,
            k_max: (2 * clusters).max(1),
            epsilon: 1e-6,
            lambda_bp: 0.1,
            iters: 500,
        }
    }

    /// L1 proximal-gradient defaults: `lambda_bp = 0.1`, `iters = 500`.
    pub fn l1pg_default() -> Self {
        LearnerConfig {
            kind: LearnerKind::L1Pg,
            k_max: 1,
            epsilon: 1e-6,
            lambda_bp: 0.1,
            iters: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::Parameter("k_max: must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Parameter(format!(
                "epsilon: must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.lambda_bp > 0.0) || !self.lambda_bp.is_finite() {
            return Err(Error::Parameter(format!(
                "lambda_bp: must be > 0, got {}",
                self.lambda_bp
            )));
        }
        if self.iters == 0 {
            return Err(Error::Parameter("iters: must be >= 1".into()));
        }
        Ok(())
    }
}

/// Dispatch to the configured static learner.
pub fn learn_selfexpr(x: &Snapshot, cfg: &LearnerConfig) -> Result<SelfExpression> {
    match cfg.kind {
        LearnerKind::Omp => omp_selfexpr(x, cfg),
        LearnerKind::L1Pg => l1pg_selfexpr(x, cfg),
    }
}

/// Greedy self-expression: each column is approximated by atoms picked from
/// the *other* columns (self always excluded), with an orthogonal-projection
/// (least-squares) refit after every pick, stopping at `k_max` atoms or
/// residual norm `<= epsilon`. Columns are expected unit-normalized.
pub fn omp_selfexpr(x: &Snapshot, cfg: &LearnerConfig) -> Result<SelfExpression> {
    cfg.validate()?;
    let c = omp_columns(&x.data, &x.data, cfg);
    SelfExpression::from_hollow(c, x.t)
}

/// OMP against a general target matrix: column `j` of `target` is fit with
/// atoms from `dict`, excluding atom `j` (so the result is hollow whenever
/// `dict` and `target` have matching widths).
fn omp_columns(dict: &DMatrix<f64>, target: &DMatrix<f64>, cfg: &LearnerConfig) -> DMatrix<f64> {
    let n_atoms = dict.ncols();
    let cols: Vec<DVector<f64>> = (0..target.ncols())
        .into_par_iter()
        .map(|j| omp_single(dict, &target.column(j).into_owned(), j, cfg))
        .collect();
    let mut c = DMatrix::zeros(n_atoms, target.ncols());
    for (j, col) in cols.into_iter().enumerate() {
        c.set_column(j, &col);
    }
    c
}

fn omp_single(
    dict: &DMatrix<f64>,
    y: &DVector<f64>,
    exclude: usize,
    cfg: &LearnerConfig,
) -> DVector<f64> {
    let n = dict.ncols();
    let mut support: Vec<usize> = Vec::new();
    let mut coeffs = DVector::zeros(0);
    let mut residual = y.clone();
    for _ in 0..cfg.k_max {
        if residual.norm() <= cfg.epsilon {
            break;
        }
        // Most correlated unused atom; ties break to the lowest index.
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            if i == exclude || support.contains(&i) {
                continue;
            }
            let corr = dict.column(i).dot(&residual).abs();
            if best.is_none_or(|(b, _)| corr > b) {
                best = Some((corr, i));
            }
        }
        let Some((corr, pick)) = best else { break };
        if corr == 0.0 {
            break; // residual orthogonal to every remaining atom
        }
        support.push(pick);
        let sub = dict.select_columns(support.iter());
        coeffs = sub
            .clone()
            .svd(true, true)
            .solve(y, 1e-12)
            .expect("SVD least squares with computed factors");
        residual = y - &sub * &coeffs;
    }
    let mut col = DVector::zeros(n);
    for (s, &idx) in support.iter().enumerate() {
        col[idx] = coeffs[s];
    }
    col
}

/// L1 proximal-gradient self-expression. See [`l1pg_selfexpr_traced`].
pub fn l1pg_selfexpr(x: &Snapshot, cfg: &LearnerConfig) -> Result<SelfExpression> {
    Ok(l1pg_selfexpr_traced(x, cfg)?.0)
}

/// ISTA on `1/2 ||X - XC||_F^2 + lambda_bp ||C||_1` with the diagonal
/// projected to zero after every iterate. The step size is `1/L` with `L`
/// the largest eigenvalue of `X^T X` (power iteration); soft-threshold level
/// `lambda_bp / L`. Stops after `iters` iterations or when the relative
/// objective change drops below 1e-8. Also returns the objective trace
/// (initial value plus one entry per iteration), which is non-increasing.
pub fn l1pg_selfexpr_traced(
    x: &Snapshot,
    cfg: &LearnerConfig,
) -> Result<(SelfExpression, Vec<f64>)> {
    cfg.validate()?;
    let (c, trace) = l1pg_columns(&x.data, &x.data, cfg.lambda_bp, cfg.iters);
    Ok((SelfExpression::from_hollow(c, x.t)?, trace))
}

/// ISTA against a general target: `1/2 ||Y - XC||_F^2 + lambda ||C||_1`,
/// hollow iterates. Returns the solution and its objective trace.
fn l1pg_columns(
    dict: &DMatrix<f64>,
    target: &DMatrix<f64>,
    lambda: f64,
    iters: usize,
) -> (DMatrix<f64>, Vec<f64>) {
    let n = dict.ncols();
    let gram = dict.transpose() * dict;
    let b = dict.transpose() * target;
    let mut c = DMatrix::zeros(n, target.ncols());
    let objective = |c: &DMatrix<f64>| -> f64 {
        0.5 * (target - dict * c).norm_squared() + lambda * c.iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut trace = vec![objective(&c)];
    // Lipschitz constant, inflated one part in 1e9 so the step 1/L stays on
    // the convergent side of the power-iteration estimate.
    let lip = power_iteration_lmax(&gram) * (1.0 + 1e-9);
    if !(lip > 0.0) || !lip.is_finite() {
        return (c, trace); // X = 0: the zero matrix is already optimal
    }
    let step = 1.0 / lip;
    let thr = lambda * step;
    let hollow_dim = n.min(target.ncols());
    for _ in 0..iters {
        let grad = &gram * &c - &b;
        c.zip_apply(&grad, |cv, gv| *cv = soft_threshold(*cv - step * gv, thr));
        for k in 0..hollow_dim {
            c[(k, k)] = 0.0;
        }
        let obj = objective(&c);
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if (prev - obj).abs() < 1e-8 * prev.abs().max(1e-12) {
            break;
        }
    }
    (c, trace)
}

fn soft_threshold(v: f64, thr: f64) -> f64 {
    if v > thr {
        v - thr
    } else if v < -thr {
        v + thr
    } else {
        0.0
    }
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration. The
/// start vector is all-ones plus a small index-dependent tilt so it is not
/// orthogonal to the leading eigenspace for structured inputs.
fn power_iteration_lmax(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 1e-3 * (i as f64 + 1.0) / n as f64);
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..300 {
        let gv = g * &v;
        let norm = gv.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = gv / norm;
        if (norm - est).abs() <= 1e-13 * norm.max(1.0) {
            est = norm;
            break;
        }
        est = norm;
    }
    // Rayleigh quotient of the converged direction is at least as accurate.
    let rayleigh = (g * &v).dot(&v);
    est.max(rayleigh)
}

/// AFFECT smoothing with a fixed mixing weight: `C_1 = C'_1` and
/// `C_t = alpha * C'_t + (1 - alpha) * C_{t-1}` for `t >= 2`, where `C'_t`
/// is the static learner's solution on snapshot `t` alone.
pub fn affect_smooth(
    seq: &EvolvingSequence,
    learner: &LearnerConfig,
    alpha: f64,
) -> Result<Vec<SelfExpression>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!(
            "alpha: must be in [0, 1], got {alpha}"
        )));
    }
    let mut out: Vec<SelfExpression> = Vec::with_capacity(seq.len());
    for snap in &seq.snapshots {
        let fresh = learn_selfexpr(snap, learner)?;
        let smoothed = match out.last() {
            Some(prev) => SelfExpression::from_hollow(
                fresh.matrix() * alpha + prev.matrix() * (1.0 - alpha),
                snap.t,
            )?,
            None => fresh,
        };
        out.push(smoothed);
    }
    Ok(out)
}

/// One step's CESM unknowns: the innovation matrix `U` (hollow) and the
/// mixing weight `alpha` in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct CesmState {
    pub u: DMatrix<f64>,
    pub alpha: f64,
}

/// Grid searched by CESM's alpha step: `{0, 0.05, ..., 1}`.
fn alpha_grid() -> impl Iterator<Item = f64> {
    (0..=20).map(|i| if i == 20 { 1.0 } else { i as f64 * 0.05 })
}

/// CESM smoothing. See [`cesm_traced`]; this drops the objective traces.
pub fn cesm(
    seq: &EvolvingSequence,
    learner: &LearnerConfig,
    outer_iters: usize,
) -> Result<Vec<SelfExpression>> {
    Ok(cesm_traced(seq, learner, outer_iters)?.0)
}

/// CESM smoothing by alternating minimization. `C_1` is the static solution;
/// for each `t >= 2` (starting from `alpha = 0.5`) it alternates
/// `outer_iters` times between
///
/// 1. fitting the innovation `U` with the learner against the residual
///    target `X_t - (1 - alpha) X_t C_{t-1}` over the dictionary `X_t`, and
/// 2. picking `alpha` from the grid `{0, 0.05, ..., 1}` to minimize
///    `1/2 ||X_t - X_t (alpha U + (1 - alpha) C_{t-1})||_F^2`
///    (ascending scan; ties keep the smallest alpha),
///
/// then sets `C_t = alpha U + (1 - alpha) C_{t-1}`. An iterate that fails to
/// improve the step objective is discarded and the alternation stops, so the
/// per-step objective trace (second return value, one inner vector per
/// `t >= 2`) is non-increasing.
pub fn cesm_traced(
    seq: &EvolvingSequence,
    learner: &LearnerConfig,
    outer_iters: usize,
) -> Result<(Vec<SelfExpression>, Vec<Vec<f64>>)> {
    if seq.len() < 2 {
        return Err(Error::Parameter(format!(
            "smoothing needs at least 2 snapshots, sequence has {}",
            seq.len()
        )));
    }
    if outer_iters == 0 {
        return Err(Error::Parameter("outer_iters: must be >= 1".into()));
    }
    learner.validate()?;

    let mut coeffs = vec![learn_selfexpr(&seq.snapshots[0], learner)?];
    let mut traces = Vec::with_capacity(seq.len() - 1);
    for snap in &seq.snapshots[1..] {
        let x = &snap.data;
        let c_prev = coeffs.last().expect("non-empty").matrix().clone();
        let xc_prev = x * &c_prev;
        let mut alpha = 0.5;
        let mut best: Option<(f64, CesmState)> = None;
        let mut trace = Vec::with_capacity(outer_iters);
        for _ in 0..outer_iters {
            let residual_target = x - &xc_prev * (1.0 - alpha);
            let u = learn_matrix(x, &residual_target, learner);
            let xu = x * &u;
            let mut pick = (f64::INFINITY, 0.0);
            for g in alpha_grid() {
                let obj = 0.5 * (x - (&xu * g + &xc_prev * (1.0 - g))).norm_squared();
                if obj < pick.0 {
                    pick = (obj, g);
                }
            }
            let (obj, g) = pick;
            if best.as_ref().is_none_or(|(b, _)| obj <= *b) {
                alpha = g;
                best = Some((obj, CesmState { u, alpha: g }));
                trace.push(obj);
            } else {
                trace.push(best.as_ref().expect("previous iterate").0);
                break;
            }
        }
        let (_, state) = best.expect("outer_iters >= 1");
        let combined = state.u * state.alpha + &c_prev * (1.0 - state.alpha);
        coeffs.push(SelfExpression::from_hollow(combined, snap.t)?);
        traces.push(trace);
    }
    Ok((coeffs, traces))
}

/// Run the configured learner against an arbitrary target matrix (used by
/// CESM's innovation step). Output is hollow by construction.
fn learn_matrix(dict: &DMatrix<f64>, target: &DMatrix<f64>, cfg: &LearnerConfig) -> DMatrix<f64> {
    match cfg.kind {
        LearnerKind::Omp => omp_columns(dict, target, cfg),
        LearnerKind::L1Pg => l1pg_columns(dict, target, cfg.lambda_bp, cfg.iters).0,
    }
}

/// Affinity kernels computed from pairwise point distances rather than
/// self-expression (the non-default AFFECT variant).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKernel {
    /// `max_pq d^2_pq - d^2_ij`: negative squared Euclidean distance,
    /// shifted so entries are nonnegative.
    NegSqEuclidean,
    /// `exp(-d^2_ij / (2 sigma^2))` with `sigma^2` the median off-diagonal
    /// squared distance (median heuristic).
    ExpNegSqEuclidean,
}

impl DistanceKernel {
    pub fn name(self) -> &'static str {
        match self {
            DistanceKernel::NegSqEuclidean => "neg-sq-euclid",
            DistanceKernel::ExpNegSqEuclidean => "exp-sq-euclid",
        }
    }
}

/// Pairwise distance affinity of one snapshot; symmetric, nonnegative,
/// hollow by construction.
pub fn distance_affinity(x: &Snapshot, kernel: DistanceKernel) -> Affinity {
    let n = x.n_points();
    let mut d2 = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let d = (x.data.column(i) - x.data.column(j)).norm_squared();
            d2[(i, j)] = d;
            d2[(j, i)] = d;
        }
    }
    let a = match kernel {
        DistanceKernel::NegSqEuclidean => {
            let max = d2.max();
            DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { max - d2[(i, j)] })
        }
        DistanceKernel::ExpNegSqEuclidean => {
            let mut off: Vec<f64> = Vec::with_capacity(n * n - n);
            for j in 0..n {
                for i in 0..n {
                    if i != j {
                        off.push(d2[(i, j)]);
                    }
                }
            }
            off.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            let median = off.get(off.len() / 2).copied().unwrap_or(0.0);
            let sigma2 = if median > 0.0 { median } else { 1.0 };
            DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    0.0
                } else {
                    (-d2[(i, j)] / (2.0 * sigma2)).exp()
                }
            })
        }
    };
    Affinity::from_matrix(a).expect("kernel affinities satisfy the invariants")
}

/// AFFECT smoothing applied directly to distance affinities:
/// `A_t = alpha * A'_t + (1 - alpha) * A_{t-1}`.
pub fn affect_distance_affinities(
    seq: &EvolvingSequence,
    kernel: DistanceKernel,
    alpha: f64,
) -> Result<Vec<Affinity>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!(
            "alpha: must be in [0, 1], got {alpha}"
        )));
    }
    let mut out: Vec<Affinity> = Vec::with_capacity(seq.len());
    for snap in &seq.snapshots {
        let fresh = distance_affinity(snap, kernel);
        let smoothed = match out.last() {
            Some(prev) => {
                let n = fresh.n();
                let m = DMatrix::from_fn(n, n, |i, j| {
                    alpha * fresh.matrix()[(i, j)] + (1.0 - alpha) * prev.matrix()[(i, j)]
                });
                Affinity::from_matrix(m)?
            }
            None => fresh,
        };
        out.push(smoothed);
    }
    Ok(out)
}

/// Method name tokens accepted by the benchmark harness and CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Static,
    Affect,
    Cesm,
    LstmEscm,
    AffectDistance,
}

impl MethodKind {
    pub fn parse(token: &str) -> Result<MethodKind> {
        match token {
            "static" => Ok(MethodKind::Static),
            "affect" => Ok(MethodKind::Affect),
            "cesm" => Ok(MethodKind::Cesm),
            "lstm-escm" => Ok(MethodKind::LstmEscm),
            "affect-dist" => Ok(MethodKind::AffectDistance),
            other => Err(Error::Parameter(format!(
                "unknown method '{other}' (expected static | affect | cesm | lstm-escm | affect-dist)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Static => "static",
            MethodKind::Affect => "affect",
            MethodKind::Cesm => "cesm",
            MethodKind::LstmEscm => "lstm-escm",
            MethodKind::AffectDistance => "affect-dist",
        }
    }
}

/// A fully resolved representation method, ready to run on one sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// Static learner applied independently at every time step.
    Static { learner: LearnerConfig },
    /// AFFECT smoothing of per-step learner output.
    Affect { learner: LearnerConfig, alpha: f64 },
    /// CESM alternating innovation/mixing-weight smoothing.
    Cesm {
        learner: LearnerConfig,
        outer_iters: usize,
    },
    /// The recurrent model: train on the sequence, then replay it to infer
    /// per-step coefficients.
    LstmEscm {
        train: TrainConfig,
        window: usize,
        stride: usize,
    },
    /// AFFECT over distance-kernel affinities (no self-expression).
    AffectDistance { kernel: DistanceKernel, alpha: f64 },
}

impl Method {
    pub fn kind(&self) -> MethodKind {
        match self {
            Method::Static { .. } => MethodKind::Static,
            Method::Affect { .. } => MethodKind::Affect,
            Method::Cesm { .. } => MethodKind::Cesm,
            Method::LstmEscm { .. } => MethodKind::LstmEscm,
            Method::AffectDistance { .. } => MethodKind::AffectDistance,
        }
    }

    /// Method label used in benchmark reports.
    pub fn report_name(&self) -> &'static str {
        match self {
            Method::Static { .. } => "static",
            Method::Affect { .. } => "AFFECT",
            Method::Cesm { .. } => "CESM (reimpl.)",
            Method::LstmEscm { .. } => "LSTM-ESCM",
            Method::AffectDistance { .. } => "AFFECT (dist)",
        }
    }

    /// Learner label used in benchmark reports.
    pub fn learner_name(&self) -> &'static str {
        match self {
            Method::Static { learner }
            | Method::Affect { learner, .. }
            | Method::Cesm { learner, .. } => learner.kind.name(),
            Method::LstmEscm { .. } => "lstm",
            Method::AffectDistance { kernel, .. } => kernel.name(),
        }
    }
}

/// One affinity per time step under the given method.
///
/// For [`Method::LstmEscm`], `train_len` restricts *training* to the first
/// `train_len` snapshots (held-out evaluation) while coefficients are still
/// inferred for the whole sequence; the recurrent model's seed comes from
/// its [`TrainConfig`]. The instance-based methods ignore `train_len` — they
/// involve no fitting across time steps.
pub fn method_affinities(
    seq: &EvolvingSequence,
    method: &Method,
    train_len: Option<usize>,
) -> Result<Vec<Affinity>> {
    match method {
        Method::Static { learner } => seq
            .snapshots
            .iter()
            .map(|s| Ok(affinity(&learn_selfexpr(s, learner)?)))
            .collect(),
        Method::Affect { learner, alpha } => Ok(affect_smooth(seq, learner, *alpha)?
            .iter()
            .map(affinity)
            .collect()),
        Method::Cesm {
            learner,
            outer_iters,
        } => Ok(cesm(seq, learner, *outer_iters)?
            .iter()
            .map(affinity)
            .collect()),
        Method::LstmEscm {
            train,
            window,
            stride,
        } => {
            let outcome = match train_len {
                Some(len) => train_sequence(&seq.prefix(len)?, *window, *stride, train)?,
                None => train_sequence(seq, *window, *stride, train)?,
            };
            let coeffs = infer_coeffs(&outcome.model, seq)?;
            Ok(coeffs.iter().map(affinity).collect())
        }
        Method::AffectDistance { kernel, alpha } => {
            affect_distance_affinities(seq, *kernel, *alpha)
        }
    }
}

/// Full pipeline for one sequence: representation → affinity → spectral
/// clustering at every time step. `seed` drives the spectral k-means (one
/// derived seed per time step); the recurrent method's training seed lives
/// in its own config.
pub fn smooth_cluster(
    seq: &EvolvingSequence,
    method: &Method,
    k: usize,
    seed: u64,
    train_len: Option<usize>,
) -> Result<Vec<ClusterLabels>> {
    let affinities = method_affinities(seq, method, train_len)?;
    affinities
        .iter()
        .enumerate()
        .map(|(idx, a)| spectral_cluster(a, k, derive_seed(seed, idx as u64 + 1)))
        .collect()
}

/// [`smooth_cluster`] with the static method.
pub fn static_cluster(
    seq: &EvolvingSequence,
    learner: &LearnerConfig,
    k: usize,
    seed: u64,
) -> Result<Vec<ClusterLabels>> {
    smooth_cluster(seq, &Method::Static { learner: *learner }, k, seed, None)
}
