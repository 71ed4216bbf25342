//! Recurrent self-expression engine.
//!
//! A single LSTM cell consumes the vectorized snapshot `x_t = vec(X_t)` and
//! its own previous state, and a fully connected layer maps the hidden
//! vector to the `N^2 - N` off-diagonal entries of the coefficient matrix
//! `C_t`; [`pad_diagonal`] reinserts the structurally zero diagonal. With
//! `z_t = [hidden_{t-1}; x_t]` the step computes
//!
//! ```text
//! f_t = sigma(W_f z_t + b_f)         (forget gate)
//! i_t = sigma(W_i z_t + b_i)         (input gate)
//! m~_t = tanh(W_m z_t + b_m)         (candidate memory)
//! M_t = f_t . M_{t-1} + i_t . m~_t   (cell state, "." elementwise)
//! o_t = sigma(W_o z_t + b_o)         (output gate)
//! hidden_t = o_t . tanh(M_t)
//! raw_t = W_fc hidden_t + b_fc
//! ```
//!
//! Training minimizes, per step, the closed-form self-expressive loss
//!
//! ```text
//! L(C) = 1/2 tr(G (I-C)(I-C)^T) + lambda * sum|c_ij|,   G = X^T X,
//! ```
//!
//! which equals `1/2 ||X - XC||_F^2 + lambda ||C||_1`; its gradient is
//! `G(C - I) + lambda sign(C)` with `sign(0) = 0` and the diagonal dropped
//! (the diagonal is not a parameter). Gradients flow through the whole
//! recurrence by backpropagation through time (see [`bptt`]).

mod train;

pub use train::{
    bptt, infer_coeffs, train_pooled, train_sequence, window_loss, BpttOutcome, LstmGrads,
    TrainOutcome,
};

use std::io::Read;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Training aborts once a window loss exceeds this or turns non-finite.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Gate and projection parameters of the recurrent coefficient model.
///
/// Gate weights are `h x (h + D*N)`, acting on `[hidden; vec(X_t)]`; the
/// projection maps the hidden vector to the `N^2 - N` off-diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub feature_dim: usize,
    pub n_points: usize,
    pub hidden: usize,
    pub w_f: DMatrix<f64>,
    pub b_f: DVector<f64>,
    pub w_i: DMatrix<f64>,
    pub b_i: DVector<f64>,
    pub w_m: DMatrix<f64>,
    pub b_m: DVector<f64>,
    pub w_o: DMatrix<f64>,
    pub b_o: DVector<f64>,
    pub w_fc: DMatrix<f64>,
    pub b_fc: DVector<f64>,
}

impl LstmModel {
    /// Seeded initialization: gate and projection weights uniform in
    /// `(-1/sqrt(h), 1/sqrt(h))`, forget bias 1 (open at the start of
    /// training), all other biases 0.
    pub fn init(feature_dim: usize, n_points: usize, hidden: usize, seed: u64) -> Result<Self> {
        if feature_dim == 0 || hidden == 0 {
            return Err(Error::Parameter(
                "feature_dim and hidden size must be >= 1".into(),
            ));
        }
        if n_points < 2 {
            return Err(Error::Parameter(
                "self-expression needs at least 2 points".into(),
            ));
        }
        let input = hidden + feature_dim * n_points;
        let raw_len = n_points * n_points - n_points;
        let scale = 1.0 / (hidden as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = move |r: usize, c: usize| {
            DMatrix::from_fn(r, c, |_, _| (rng.gen::<f64>() * 2.0 - 1.0) * scale)
        };
        Ok(LstmModel {
            feature_dim,
            n_points,
            hidden,
            w_f: uniform(hidden, input),
            b_f: DVector::from_element(hidden, 1.0),
            w_i: uniform(hidden, input),
            b_i: DVector::zeros(hidden),
            w_m: uniform(hidden, input),
            b_m: DVector::zeros(hidden),
            w_o: uniform(hidden, input),
            b_o: DVector::zeros(hidden),
            w_fc: uniform(raw_len, hidden),
            b_fc: DVector::zeros(raw_len),
        })
    }

    /// Length of the vectorized snapshot input.
    pub fn input_len(&self) -> usize {
        self.feature_dim * self.n_points
    }

    /// Length of the off-diagonal output vector.
    pub fn raw_len(&self) -> usize {
        self.n_points * self.n_points - self.n_points
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// All parameters as flat slices in checkpoint order
    /// (`W_f, b_f, W_i, b_i, W_m, b_m, W_o, b_o, W_fc, b_fc`).
    pub fn param_slices(&self) -> [&[f64]; 10] {
        [
            self.w_f.as_slice(),
            self.b_f.as_slice(),
            self.w_i.as_slice(),
            self.b_i.as_slice(),
            self.w_m.as_slice(),
            self.b_m.as_slice(),
            self.w_o.as_slice(),
            self.b_o.as_slice(),
            self.w_fc.as_slice(),
            self.b_fc.as_slice(),
        ]
    }

    pub fn param_slices_mut(&mut self) -> [&mut [f64]; 10] {
        let LstmModel {
            w_f,
            b_f,
            w_i,
            b_i,
            w_m,
            b_m,
            w_o,
            b_o,
            w_fc,
            b_fc,
            ..
        } = self;
        [
            w_f.as_mut_slice(),
            b_f.as_mut_slice(),
            w_i.as_mut_slice(),
            b_i.as_mut_slice(),
            w_m.as_mut_slice(),
            b_m.as_mut_slice(),
            w_o.as_mut_slice(),
            b_o.as_mut_slice(),
            w_fc.as_mut_slice(),
            b_fc.as_mut_slice(),
        ]
    }

    /// Serialize to the flat binary checkpoint format: magic `ESCM`,
    /// format version, dimensions `(D, N, h)` as little-endian u32, then the
    /// parameters in checkpoint order as row-major little-endian f64.
    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(CHECKPOINT_MAGIC)?;
        out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        for dim in [self.feature_dim, self.n_points, self.hidden] {
            let d = u32::try_from(dim)
                .map_err(|_| Error::Format("model dimension exceeds u32".into()))?;
            out.write_all(&d.to_le_bytes())?;
        }
        for mat in [&self.w_f, &self.w_i, &self.w_m, &self.w_o, &self.w_fc] {
            let bias = self.bias_for(mat);
            write_row_major(&mut out, mat)?;
            for v in bias.iter() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    fn bias_for(&self, mat: &DMatrix<f64>) -> &DVector<f64> {
        if std::ptr::eq(mat, &self.w_f) {
            &self.b_f
        } else if std::ptr::eq(mat, &self.w_i) {
            &self.b_i
        } else if std::ptr::eq(mat, &self.w_m) {
            &self.b_m
        } else if std::ptr::eq(mat, &self.w_o) {
            &self.b_o
        } else {
            &self.b_fc
        }
    }

    /// Load a checkpoint written by [`LstmModel::save_checkpoint`].
    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut cursor = 0usize;
        let take = |cursor: &mut usize, len: usize| -> Result<&[u8]> {
            if *cursor + len > bytes.len() {
                return Err(Error::Format("checkpoint truncated".into()));
            }
            let slice = &bytes[*cursor..*cursor + len];
            *cursor += len;
            Ok(slice)
        };
        if take(&mut cursor, 4)? != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a model checkpoint (bad magic)".into()));
        }
        let version = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
            )));
        }
        let mut dim = || -> Result<usize> {
            Ok(u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize)
        };
        let (feature_dim, n_points, hidden) = (dim()?, dim()?, dim()?);
        if feature_dim == 0 || n_points < 2 || hidden == 0 {
            return Err(Error::Format(
                "checkpoint carries degenerate dimensions".into(),
            ));
        }
        let input = hidden + feature_dim * n_points;
        let raw_len = n_points * n_points - n_points;

        let mut read_mat = |rows: usize, cols: usize| -> Result<DMatrix<f64>> {
            let raw = take(&mut cursor, rows * cols * 8)?;
            let mut m = DMatrix::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    let off = (r * cols + c) * 8;
                    m[(r, c)] = f64::from_le_bytes(raw[off..off + 8].try_into().unwrap());
                }
            }
            Ok(m)
        };
        let mut read_pair = |rows: usize, cols: usize| -> Result<(DMatrix<f64>, DVector<f64>)> {
            let w = read_mat(rows, cols)?;
            let b_mat = read_mat(rows, 1)?;
            Ok((w, DVector::from_column_slice(b_mat.as_slice())))
        };
        let (w_f, b_f) = read_pair(hidden, input)?;
        let (w_i, b_i) = read_pair(hidden, input)?;
        let (w_m, b_m) = read_pair(hidden, input)?;
        let (w_o, b_o) = read_pair(hidden, input)?;
        let (w_fc, b_fc) = read_pair(raw_len, hidden)?;
        if cursor != bytes.len() {
            return Err(Error::Format(format!(
                "checkpoint has {} trailing bytes",
                bytes.len() - cursor
            )));
        }
        Ok(LstmModel {
            feature_dim,
            n_points,
            hidden,
            w_f,
            b_f,
            w_i,
            b_i,
            w_m,
            b_m,
            w_o,
            b_o,
            w_fc,
            b_fc,
        })
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"ESCM";
const CHECKPOINT_VERSION: u32 = 1;

fn write_row_major(out: &mut impl Write, m: &DMatrix<f64>) -> Result<()> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.write_all(&m[(r, c)].to_le_bytes())?;
        }
    }
    Ok(())
}

/// Recurrent state: cell memory `M_t` and the hidden output vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub cell: DVector<f64>,
    pub hidden: DVector<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            cell: DVector::zeros(hidden),
            hidden: DVector::zeros(hidden),
        }
    }
}

/// Per-step activations cached for backpropagation through time.
#[derive(Debug, Clone)]
pub struct StepCache {
    /// `[hidden_{t-1}; x_t]`.
    pub(crate) z: DVector<f64>,
    pub(crate) f: DVector<f64>,
    pub(crate) i: DVector<f64>,
    pub(crate) m_tilde: DVector<f64>,
    pub(crate) o: DVector<f64>,
    pub(crate) cell_prev: DVector<f64>,
    pub(crate) tau: DVector<f64>,
    pub(crate) hidden: DVector<f64>,
}

/// One recurrence step. Returns the next state, the raw off-diagonal output
/// `W_fc hidden_t + b_fc`, and the activation cache for BPTT.
pub fn lstm_forward(
    model: &LstmModel,
    x: &DVector<f64>,
    state: &LstmState,
) -> Result<(LstmState, DVector<f64>, StepCache)> {
    let h = model.hidden;
    if x.len() != model.input_len() {
        return Err(Error::Shape(format!(
            "input length {} does not match D*N = {}",
            x.len(),
            model.input_len()
        )));
    }
    if state.cell.len() != h || state.hidden.len() != h {
        return Err(Error::Shape(format!(
            "state length {} does not match hidden size {h}",
            state.cell.len()
        )));
    }

    let mut z = DVector::zeros(h + x.len());
    z.rows_mut(0, h).copy_from(&state.hidden);
    z.rows_mut(h, x.len()).copy_from(x);

    let gate = |w: &DMatrix<f64>, b: &DVector<f64>| -> DVector<f64> {
        let mut a = b.clone();
        a.gemv(1.0, w, &z, 1.0);
        a
    };
    let f = gate(&model.w_f, &model.b_f).map(sigmoid);
    let i = gate(&model.w_i, &model.b_i).map(sigmoid);
    let m_tilde = gate(&model.w_m, &model.b_m).map(f64::tanh);
    let o = gate(&model.w_o, &model.b_o).map(sigmoid);

    let cell = f.component_mul(&state.cell) + i.component_mul(&m_tilde);
    let tau = cell.map(f64::tanh);
    let hidden = o.component_mul(&tau);

    let mut raw = model.b_fc.clone();
    raw.gemv(1.0, &model.w_fc, &hidden, 1.0);

    if !raw.iter().all(|v| v.is_finite()) || !cell.iter().all(|v| v.is_finite()) {
        return Err(Error::Divergence {
            epoch: 0,
            window: 0,
            loss: f64::INFINITY,
        });
    }

    let next = LstmState {
        cell: cell.clone(),
        hidden: hidden.clone(),
    };
    let cache = StepCache {
        z,
        f,
        i,
        m_tilde,
        o,
        cell_prev: state.cell.clone(),
        tau,
        hidden,
    };
    Ok((next, raw, cache))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A zero-diagonal coefficient matrix. The diagonal is structurally exact
/// zero: both constructors ([`pad_diagonal`] and
/// [`SelfExpression::from_hollow`]) guarantee it, and the matrix is only
/// exposed read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfExpression {
    c: DMatrix<f64>,
    /// 1-based time index; 0 when unattached to a sequence.
    pub t: usize,
}

impl SelfExpression {
    /// Wrap an existing matrix, rejecting anything whose diagonal is not
    /// exactly zero or that contains non-finite entries.
    pub fn from_hollow(c: DMatrix<f64>, t: usize) -> Result<Self> {
        if c.nrows() != c.ncols() {
            return Err(Error::Shape(format!(
                "coefficient matrix must be square, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        for k in 0..c.nrows() {
            if c[(k, k)] != 0.0 {
                return Err(Error::Input(format!(
                    "diagonal entry ({k},{k}) = {} must be exactly zero",
                    c[(k, k)]
                )));
            }
        }
        if !c.iter().all(|v| v.is_finite()) {
            return Err(Error::Input(
                "coefficients contain non-finite entries".into(),
            ));
        }
        Ok(SelfExpression { c, t })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.c
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }
}

/// Rebuild the `N x N` coefficient matrix from its `N^2 - N` off-diagonal
/// entries: positions fill in column-major order, skipping the diagonal,
/// which is set to exactly zero. For `N = 2`, `raw = (a, b)` fills `(2,1)`
/// first and then `(1,2)`, yielding `[[0, b], [a, 0]]`.
pub fn pad_diagonal(raw: &DVector<f64>) -> Result<SelfExpression> {
    let n = infer_points(raw.len())?;
    if !raw.iter().all(|v| v.is_finite()) {
        return Err(Error::Input(
            "raw coefficients contain non-finite entries".into(),
        ));
    }
    let mut c = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                c[(i, j)] = raw[k];
                k += 1;
            }
        }
    }
    Ok(SelfExpression { c, t: 0 })
}

/// Inverse of [`pad_diagonal`]: collect off-diagonal entries column-major.
pub fn unpad_diagonal(c: &SelfExpression) -> DVector<f64> {
    unpad_matrix(c.matrix())
}

pub(crate) fn unpad_matrix(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut raw = DVector::zeros(n * n - n);
    let mut k = 0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                raw[k] = m[(i, j)];
                k += 1;
            }
        }
    }
    raw
}

fn infer_points(raw_len: usize) -> Result<usize> {
    // Solve n^2 - n = raw_len for integer n >= 2.
    let n = (1.0 + (1.0 + 4.0 * raw_len as f64).sqrt()) / 2.0;
    let n = n.round() as usize;
    if n < 2 || n * n - n != raw_len {
        return Err(Error::Shape(format!(
            "raw length {raw_len} is not N^2 - N for any integer N"
        )));
    }
    Ok(n)
}

/// Evaluate the closed-form loss and its matrix gradient at `C` for the Gram
/// matrix `G = X^T X`:
///
/// ```text
/// L = 1/2 tr(G (I-C)(I-C)^T) + lambda sum|c_ij|
/// dL/dC = G (C - I) + lambda sign(C)      (sign(0) = 0, diagonal zeroed)
/// ```
pub fn loss_and_grad(
    c: &SelfExpression,
    g: &DMatrix<f64>,
    lambda: f64,
) -> Result<(f64, DMatrix<f64>)> {
    let n = c.n();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::Dimension(format!(
            "Gram matrix is {}x{}, expected {n}x{n}",
            g.nrows(),
            g.ncols()
        )));
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::Parameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let mut asym: f64 = 0.0;
    for j in 0..n {
        for i in 0..j {
            asym = asym.max((g[(i, j)] - g[(j, i)]).abs());
        }
    }
    if asym > 1e-9 {
        return Err(Error::Input(format!(
            "Gram matrix is not symmetric (max |G - G^T| = {asym:.3e})"
        )));
    }

    // E = I - C; smooth part = 1/2 <G E, E>, gradient = -G E.
    let mut e = -c.matrix();
    for k in 0..n {
        e[(k, k)] += 1.0;
    }
    let ge = g * &e;
    let smooth = 0.5 * ge.dot(&e);
    let l1: f64 = c.matrix().iter().map(|v| v.abs()).sum();
    let loss = smooth + lambda * l1;

    let mut grad = -ge;
    if lambda > 0.0 {
        for (gv, cv) in grad.iter_mut().zip(c.matrix().iter()) {
            *gv += lambda * sign0(*cv);
        }
    }
    for k in 0..n {
        grad[(k, k)] = 0.0;
    }
    Ok((loss, grad))
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Hyperparameters of the training loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// L1 weight in the loss; `>= 0`.
    pub lambda: f64,
    /// Optimizer step size; `> 0`.
    pub learning_rate: f64,
    /// Optimizer passes over the window set; `>= 1`.
    pub epochs: usize,
    /// Hidden size `h`; `>= 1`.
    pub hidden: usize,
    /// Global-norm gradient clip threshold; `> 0` (`inf` disables).
    pub grad_clip: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, eps: f64 },
    Sgd,
}

impl Optimizer {
    pub fn default_adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Hidden-size default: `ceil(N / 5)`.
pub fn default_hidden(n_points: usize) -> usize {
    n_points.div_ceil(5).max(1)
}

impl TrainConfig {
    /// Defaults for a sequence with `n_points` points: `lambda = 0.1`,
    /// `learning_rate = 0.001`, `epochs = 300`, `hidden = ceil(N/5)`,
    /// `grad_clip = 5`, Adam.
    pub fn for_points(n_points: usize) -> Self {
        TrainConfig {
            lambda: 0.1,
            learning_rate: 1e-3,
            epochs: 300,
            hidden: default_hidden(n_points),
            grad_clip: 5.0,
            seed: 0,
            optimizer: Optimizer::default_adam(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "lambda: must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning_rate: must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs: must be >= 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden: must be >= 1".into()));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::Config(format!(
                "grad_clip: must be > 0, got {}",
                self.grad_clip
            )));
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
                return Err(Error::Config(
                    "optimizer: adam needs 0 <= beta < 1 and eps > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny_model(seed: u64) -> LstmModel {
        // h=3, D=2, N=2 -> input len 4, raw len 2.
        LstmModel::init(2, 2, 3, seed).unwrap()
    }

    #[test]
    fn zero_model_forward_matches_hand_values() {
        let mut model = tiny_model(1);
        for s in model.param_slices_mut() {
            for v in s.iter_mut() {
                *v = 0.0;
            }
        }
        let x = DVector::from_element(4, 0.7);
        let (state, raw, cache) = lstm_forward(&model, &x, &LstmState::zeros(3)).unwrap();
        for k in 0..3 {
            assert_eq!(cache.f[k], 0.5);
            assert_eq!(cache.i[k], 0.5);
            assert_eq!(cache.o[k], 0.5);
            assert_eq!(state.cell[k], 0.0);
            assert_eq!(state.hidden[k], 0.0);
        }
        assert!(raw.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_input_ignores_input_columns_of_gate_weights() {
        let model = tiny_model(2);
        let mut perturbed = model.clone();
        // Rewrite only the x-facing columns (h..) of every gate weight.
        for w in [
            &mut perturbed.w_f,
            &mut perturbed.w_i,
            &mut perturbed.w_m,
            &mut perturbed.w_o,
        ] {
            let h = 3;
            for c in h..w.ncols() {
                for r in 0..w.nrows() {
                    w[(r, c)] += 17.5 * ((r + c) as f64);
                }
            }
        }
        let state = LstmState {
            cell: DVector::from_column_slice(&[0.3, -0.2, 0.9]),
            hidden: DVector::from_column_slice(&[-0.5, 0.1, 0.4]),
        };
        let x = DVector::zeros(4);
        let (s1, r1, _) = lstm_forward(&model, &x, &state).unwrap();
        let (s2, r2, _) = lstm_forward(&perturbed, &x, &state).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn forward_matches_naive_scalar_loop() {
        // Independent oracle: recompute every activation with bare scalar
        // loops, no linear algebra library involved.
        let model = LstmModel::init(2, 2, 3, 42).unwrap();
        let x = DVector::from_column_slice(&[0.3, -1.2, 0.05, 0.8]);
        let state = LstmState {
            cell: DVector::from_column_slice(&[0.2, -0.4, 0.6]),
            hidden: DVector::from_column_slice(&[-0.1, 0.25, 0.33]),
        };
        let (next, raw, _) = lstm_forward(&model, &x, &state).unwrap();

        let h = 3;
        let z: Vec<f64> = state.hidden.iter().chain(x.iter()).copied().collect();
        let act = |w: &DMatrix<f64>, b: &DVector<f64>, k: usize| -> f64 {
            let mut acc = b[k];
            for (j, zj) in z.iter().enumerate() {
                acc += w[(k, j)] * zj;
            }
            acc
        };
        for k in 0..h {
            let f = 1.0 / (1.0 + (-act(&model.w_f, &model.b_f, k)).exp());
            let i = 1.0 / (1.0 + (-act(&model.w_i, &model.b_i, k)).exp());
            let m = act(&model.w_m, &model.b_m, k).tanh();
            let o = 1.0 / (1.0 + (-act(&model.w_o, &model.b_o, k)).exp());
            let cell = f * state.cell[k] + i * m;
            let hid = o * cell.tanh();
            assert!((next.cell[k] - cell).abs() < 1e-12);
            assert!((next.hidden[k] - hid).abs() < 1e-12);
        }
        for r in 0..model.raw_len() {
            let mut acc = model.b_fc[r];
            for k in 0..h {
                acc += model.w_fc[(r, k)] * next.hidden[k];
            }
            assert!((raw[r] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn pad_fills_column_major_off_diagonals() {
        let raw = DVector::from_column_slice(&[5.0, 7.0]);
        let c = pad_diagonal(&raw).unwrap();
        assert_eq!(c.matrix()[(0, 0)], 0.0);
        assert_eq!(c.matrix()[(1, 1)], 0.0);
        assert_eq!(c.matrix()[(1, 0)], 5.0);
        assert_eq!(c.matrix()[(0, 1)], 7.0);

        let zeros = pad_diagonal(&DVector::zeros(6)).unwrap();
        assert!(zeros.matrix().iter().all(|&v| v == 0.0));
        assert_eq!(zeros.n(), 3);
    }

    #[test]
    fn pad_rejects_wrong_lengths() {
        for bad in [1usize, 3, 4, 5, 7] {
            assert!(matches!(
                pad_diagonal(&DVector::zeros(bad)),
                Err(Error::Shape(_))
            ));
        }
    }

    #[test]
    fn loss_at_zero_coefficients_is_half_trace() {
        // Unit columns: G has unit diagonal, so L = N/2 and grad = -G.
        let x = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.6, 0.8]);
        let g = x.transpose() * &x;
        let c = SelfExpression::from_hollow(DMatrix::zeros(2, 2), 0).unwrap();
        let (loss, grad) = loss_and_grad(&c, &g, 0.0).unwrap();
        assert!((loss - 1.0).abs() < 1e-14);
        // Diagonal of the reported gradient is zeroed by contract.
        assert_eq!(grad[(0, 0)], 0.0);
        assert!((grad[(0, 1)] - -g[(0, 1)]).abs() < 1e-14);
        assert!((grad[(1, 0)] - -g[(1, 0)]).abs() < 1e-14);
    }

    #[test]
    fn duplicate_columns_reach_zero_loss() {
        let x = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let g = x.transpose() * &x;
        let c =
            SelfExpression::from_hollow(DMatrix::from_column_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), 0)
                .unwrap();
        let (loss, _) = loss_and_grad(&c, &g, 0.0).unwrap();
        assert!(loss.abs() < 1e-14);
    }

    #[test]
    fn trace_loss_equals_direct_frobenius_form() {
        let x = DMatrix::from_fn(4, 4, |i, j| ((i * 3 + j * 5) as f64 * 0.41).sin());
        let g = x.transpose() * &x;
        let mut cm = DMatrix::from_fn(4, 4, |i, j| ((i + 7 * j) as f64 * 0.23).cos() * 0.5);
        for k in 0..4 {
            cm[(k, k)] = 0.0;
        }
        let c = SelfExpression::from_hollow(cm.clone(), 0).unwrap();
        let lambda = 0.37;
        let (loss, _) = loss_and_grad(&c, &g, lambda).unwrap();
        let direct =
            0.5 * (&x - &x * &cm).norm_squared() + lambda * cm.iter().map(|v| v.abs()).sum::<f64>();
        assert!((loss - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn gradient_matches_finite_differences_on_smooth_coordinates() {
        let x = DMatrix::from_fn(5, 6, |i, j| ((i * 11 + j * 3) as f64 * 0.31).sin());
        let g = x.transpose() * &x;
        let n = 6;
        let mut cm = DMatrix::from_fn(n, n, |i, j| ((i * 5 + j) as f64 * 0.7).cos() * 0.4);
        for k in 0..n {
            cm[(k, k)] = 0.0;
        }
        let lambda = 0.1;
        let c = SelfExpression::from_hollow(cm.clone(), 0).unwrap();
        let (_, grad) = loss_and_grad(&c, &g, lambda).unwrap();
        let eval = |m: &DMatrix<f64>| -> f64 {
            let c = SelfExpression::from_hollow(m.clone(), 0).unwrap();
            loss_and_grad(&c, &g, lambda).unwrap().0
        };
        let step = 1e-6;
        for j in 0..n {
            for i in 0..n {
                if i == j || cm[(i, j)].abs() <= 1e-4 {
                    continue;
                }
                let mut plus = cm.clone();
                plus[(i, j)] += step;
                let mut minus = cm.clone();
                minus[(i, j)] -= step;
                let fd = (eval(&plus) - eval(&minus)) / (2.0 * step);
                let denom = grad[(i, j)].abs().max(fd.abs()).max(1e-3);
                assert!(
                    (fd - grad[(i, j)]).abs() / denom < 1e-5,
                    "({i},{j}): analytic {} vs fd {fd}",
                    grad[(i, j)]
                );
            }
        }
    }

    #[test]
    fn asymmetric_gram_is_rejected() {
        let mut g = DMatrix::identity(3, 3);
        g[(0, 1)] = 0.5;
        let c = SelfExpression::from_hollow(DMatrix::zeros(3, 3), 0).unwrap();
        assert!(matches!(loss_and_grad(&c, &g, 0.0), Err(Error::Input(_))));
    }

    #[test]
    fn from_hollow_rejects_nonzero_diagonal() {
        let mut m = DMatrix::zeros(3, 3);
        m[(1, 1)] = 1e-300;
        assert!(matches!(
            SelfExpression::from_hollow(m, 0),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let model = LstmModel::init(3, 5, 4, 99).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        model.save_checkpoint(&path).unwrap();
        let loaded = LstmModel::load_checkpoint(&path).unwrap();
        assert_eq!(model, loaded);
        for (a, b) in model
            .param_slices()
            .iter()
            .zip(loaded.param_slices().iter())
        {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"MhouseholderQR").unwrap();
        assert!(matches!(
            LstmModel::load_checkpoint(&path),
            Err(Error::Format(_))
        ));

        let model = LstmModel::init(2, 3, 2, 0).unwrap();
        let good = dir.path().join("good.ckpt");
        model.save_checkpoint(&good).unwrap();
        let mut bytes = std::fs::read(&good).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&good, &bytes).unwrap();
        assert!(matches!(
            LstmModel::load_checkpoint(&good),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let ok = TrainConfig::for_points(60);
        assert_eq!(ok.hidden, 12);
        assert!(ok.validate().is_ok());
        assert!(TrainConfig {
            epochs: 0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            lambda: -0.1,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            grad_clip: 0.0,
            ..ok
        }
        .validate()
        .is_err());
    }

    proptest! {
        // unpad is the exact inverse of pad for every valid length.
        #[test]
        fn unpad_inverts_pad(n in 2usize..7, seed in 0u64..500) {
            let len = n * n - n;
            let raw = DVector::from_fn(len, |k, _| {
                ((seed as usize * 31 + k * 17) % 1000) as f64 / 123.0 - 4.0
            });
            let c = pad_diagonal(&raw).unwrap();
            prop_assert_eq!(c.n(), n);
            let back = unpad_diagonal(&c);
            for (a, b) in raw.iter().zip(back.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
