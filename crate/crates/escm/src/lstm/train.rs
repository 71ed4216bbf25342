//! Backpropagation through time and the training loops.
//!
//! [`bptt`] runs the recurrence over one [`SequenceWindow`], accumulates the
//! mean per-step loss, and walks the cached activations backwards to produce
//! exact parameter gradients. With `a_g` denoting a gate's pre-activation and
//! `.` elementwise multiplication, the step-local backward pass is
//!
//! ```text
//! d_raw    = unpad(dL/dC_t)
//! d_hidden = W_fc^T d_raw + carry from t+1
//! d_o      = d_hidden . tanh(M_t)          d_a_o = d_o . o . (1 - o)
//! d_M      = d_hidden . o . (1 - tanh(M_t)^2) + carry from t+1
//! d_f      = d_M . M_{t-1}                 d_a_f = d_f . f . (1 - f)
//! d_i      = d_M . m~                      d_a_i = d_i . i . (1 - i)
//! d_m~     = d_M . i                       d_a_m = d_m~ . (1 - m~^2)
//! carry_M  = d_M . f
//! d_z      = sum_g W_g^T d_a_g             carry_hidden = d_z[..h]
//! dW_g += d_a_g z^T,  db_g += d_a_g,  dW_fc += d_raw hidden^T,  db_fc += d_raw
//! ```
//!
//! The gradient is clipped to a global norm bound before the optimizer step.

use crate::data::{unvec, vec_mat, EvolvingSequence, SequenceWindow};
use crate::error::{Error, Result};
use crate::lstm::{
    loss_and_grad, lstm_forward, pad_diagonal, unpad_matrix, LstmModel, LstmState, Optimizer,
    SelfExpression, StepCache, TrainConfig, DIVERGENCE_THRESHOLD,
};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Parameter gradients, mirroring [`LstmModel`]'s layout.
#[derive(Debug, Clone)]
pub struct LstmGrads {
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

impl LstmGrads {
    pub fn zeros_like(model: &LstmModel) -> Self {
        LstmGrads {
            w_f: DMatrix::zeros(model.w_f.nrows(), model.w_f.ncols()),
            b_f: DVector::zeros(model.b_f.len()),
            w_i: DMatrix::zeros(model.w_i.nrows(), model.w_i.ncols()),
            b_i: DVector::zeros(model.b_i.len()),
            w_m: DMatrix::zeros(model.w_m.nrows(), model.w_m.ncols()),
            b_m: DVector::zeros(model.b_m.len()),
            w_o: DMatrix::zeros(model.w_o.nrows(), model.w_o.ncols()),
            b_o: DVector::zeros(model.b_o.len()),
            w_fc: DMatrix::zeros(model.w_fc.nrows(), model.w_fc.ncols()),
            b_fc: DVector::zeros(model.b_fc.len()),
        }
    }

    /// Flat slices in the same order as [`LstmModel::param_slices`].
    pub fn slices(&self) -> [&[f64]; 10] {
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

    pub fn global_norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale_mut(&mut self, factor: f64) {
        let LstmGrads {
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
        } = self;
        w_f.iter_mut()
            .chain(b_f.iter_mut())
            .chain(w_i.iter_mut())
            .chain(b_i.iter_mut())
            .chain(w_m.iter_mut())
            .chain(b_m.iter_mut())
            .chain(w_o.iter_mut())
            .chain(b_o.iter_mut())
            .chain(w_fc.iter_mut())
            .chain(b_fc.iter_mut())
            .for_each(|v| *v *= factor);
    }
}

/// Result of one window pass: clipped gradients and the mean step loss.
#[derive(Debug, Clone)]
pub struct BpttOutcome {
    pub grads: LstmGrads,
    pub loss: f64,
}

/// Forward over the window, then exact backpropagation through time.
/// The loss is the mean over the window's steps; gradients are clipped to
/// `cfg.grad_clip` in global norm.
pub fn bptt(model: &LstmModel, window: &SequenceWindow, cfg: &TrainConfig) -> Result<BpttOutcome> {
    let steps = window.len();
    if steps == 0 {
        return Err(Error::Shape("window has no steps".into()));
    }
    let n = window.n_points();
    if n != model.n_points || window.feature_dim() != model.feature_dim {
        return Err(Error::Shape(format!(
            "window is D={} N={} but model expects D={} N={}",
            window.feature_dim(),
            n,
            model.feature_dim,
            model.n_points
        )));
    }

    // Forward pass, caching activations and per-step loss gradients dL_t/dC_t.
    let mut state = LstmState::zeros(model.hidden);
    let mut caches: Vec<StepCache> = Vec::with_capacity(steps);
    let mut dldc: Vec<DMatrix<f64>> = Vec::with_capacity(steps);
    let mut total_loss = 0.0;
    for s in 0..steps {
        let x = window.inputs.column(s).into_owned();
        let (next, raw, cache) = lstm_forward(model, &x, &state)?;
        let c = pad_diagonal(&raw)?;
        let g = unvec(window.targets.column(s).as_slice(), n, n);
        let (loss, grad) = loss_and_grad(&c, &g, cfg.lambda)?;
        total_loss += loss;
        caches.push(cache);
        dldc.push(grad);
        state = next;
    }
    let mean_loss = total_loss / steps as f64;
    if !mean_loss.is_finite() {
        return Err(Error::Divergence {
            epoch: 0,
            window: 0,
            loss: mean_loss,
        });
    }

    // Backward pass.
    let h = model.hidden;
    let mut grads = LstmGrads::zeros_like(model);
    let mut dh_carry = DVector::zeros(h);
    let mut dcell_carry = DVector::zeros(h);
    let inv_steps = 1.0 / steps as f64;
    for s in (0..steps).rev() {
        let cache = &caches[s];
        // Mean over steps: each step's loss gradient is scaled by 1/S.
        let draw = unpad_matrix(&dldc[s]) * inv_steps;

        grads.w_fc.ger(1.0, &draw, &cache.hidden, 1.0);
        grads.b_fc += &draw;

        let mut dh = dh_carry;
        dh.gemv_tr(1.0, &model.w_fc, &draw, 1.0);

        let do_ = dh.component_mul(&cache.tau);
        let da_o = do_.zip_map(&cache.o, |d, o| d * o * (1.0 - o));

        let mut dcell = dh.component_mul(&cache.o);
        dcell
            .iter_mut()
            .zip(cache.tau.iter())
            .for_each(|(d, tau)| *d *= 1.0 - tau * tau);
        dcell += &dcell_carry;

        let df = dcell.component_mul(&cache.cell_prev);
        let da_f = df.zip_map(&cache.f, |d, f| d * f * (1.0 - f));
        let di = dcell.component_mul(&cache.m_tilde);
        let da_i = di.zip_map(&cache.i, |d, i| d * i * (1.0 - i));
        let dm = dcell.component_mul(&cache.i);
        let da_m = dm.zip_map(&cache.m_tilde, |d, m| d * (1.0 - m * m));

        dcell_carry = dcell.component_mul(&cache.f);

        let mut dz = DVector::zeros(cache.z.len());
        dz.gemv_tr(1.0, &model.w_f, &da_f, 1.0);
        dz.gemv_tr(1.0, &model.w_i, &da_i, 1.0);
        dz.gemv_tr(1.0, &model.w_m, &da_m, 1.0);
        dz.gemv_tr(1.0, &model.w_o, &da_o, 1.0);
        dh_carry = dz.rows(0, h).into_owned();

        grads.w_f.ger(1.0, &da_f, &cache.z, 1.0);
        grads.b_f += &da_f;
        grads.w_i.ger(1.0, &da_i, &cache.z, 1.0);
        grads.b_i += &da_i;
        grads.w_m.ger(1.0, &da_m, &cache.z, 1.0);
        grads.b_m += &da_m;
        grads.w_o.ger(1.0, &da_o, &cache.z, 1.0);
        grads.b_o += &da_o;
    }

    let norm = grads.global_norm();
    if norm > cfg.grad_clip {
        grads.scale_mut(cfg.grad_clip / norm);
    }
    Ok(BpttOutcome {
        grads,
        loss: mean_loss,
    })
}

/// Optimizer state across steps.
enum OptState {
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
        m: Vec<f64>,
        v: Vec<f64>,
        t: u64,
    },
    Sgd,
}

impl OptState {
    fn new(optimizer: Optimizer, param_count: usize) -> Self {
        match optimizer {
            Optimizer::Adam { beta1, beta2, eps } => OptState::Adam {
                beta1,
                beta2,
                eps,
                m: vec![0.0; param_count],
                v: vec![0.0; param_count],
                t: 0,
            },
            Optimizer::Sgd => OptState::Sgd,
        }
    }

    fn step(&mut self, model: &mut LstmModel, grads: &LstmGrads, lr: f64) {
        match self {
            OptState::Sgd => {
                for (params, gs) in model.param_slices_mut().into_iter().zip(grads.slices()) {
                    for (p, g) in params.iter_mut().zip(gs.iter()) {
                        *p -= lr * g;
                    }
                }
            }
            OptState::Adam {
                beta1,
                beta2,
                eps,
                m,
                v,
                t,
            } => {
                *t += 1;
                let b1 = *beta1;
                let b2 = *beta2;
                let bc1 = 1.0 - b1.powi(*t as i32);
                let bc2 = 1.0 - b2.powi(*t as i32);
                let mut off = 0;
                for (params, gs) in model.param_slices_mut().into_iter().zip(grads.slices()) {
                    for (p, g) in params.iter_mut().zip(gs.iter()) {
                        let mk = &mut m[off];
                        let vk = &mut v[off];
                        *mk = b1 * *mk + (1.0 - b1) * g;
                        *vk = b2 * *vk + (1.0 - b2) * g * g;
                        let m_hat = *mk / bc1;
                        let v_hat = *vk / bc2;
                        *p -= lr * m_hat / (v_hat.sqrt() + *eps);
                        off += 1;
                    }
                }
            }
        }
    }
}

impl Error {
    /// Stamp divergence errors with their epoch and window (both 1-based).
    fn with_train_context(self, epoch: usize, window: usize) -> Error {
        match self {
            Error::Divergence { loss, .. } => Error::Divergence {
                epoch,
                window,
                loss,
            },
            other => other,
        }
    }
}

/// Optimize a fresh model over a set of windows. Returns the trained model
/// and the mean window loss per epoch. `shuffle` reshuffles the window order
/// each epoch (seeded from `cfg.seed`); the update itself is per-window.
fn train_windows(
    windows: &[SequenceWindow],
    cfg: &TrainConfig,
    shuffle: bool,
) -> Result<(LstmModel, Vec<f64>)> {
    cfg.validate()?;
    let first = windows
        .first()
        .ok_or_else(|| Error::Shape("no training windows".into()))?;
    let (d, n) = (first.feature_dim(), first.n_points());
    for w in windows {
        if w.feature_dim() != d || w.n_points() != n {
            return Err(Error::Shape(format!(
                "window from {:?} is D={} N={}, expected D={d} N={n}",
                w.origin,
                w.feature_dim(),
                w.n_points()
            )));
        }
    }

    let mut model = LstmModel::init(d, n, cfg.hidden, cfg.seed)?;
    let mut opt = OptState::new(cfg.optimizer, model.param_count());
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5851_F42D_4C95_7F2D);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        if shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut epoch_loss = 0.0;
        for (slot, &w) in order.iter().enumerate() {
            let outcome = bptt(&model, &windows[w], cfg)
                .map_err(|e| e.with_train_context(epoch, slot + 1))?;
            if !outcome.loss.is_finite() || outcome.loss > DIVERGENCE_THRESHOLD {
                return Err(Error::Divergence {
                    epoch,
                    window: slot + 1,
                    loss: outcome.loss,
                });
            }
            epoch_loss += outcome.loss;
            opt.step(&mut model, &outcome.grads, cfg.learning_rate);
        }
        epoch_losses.push(epoch_loss / windows.len() as f64);
    }
    Ok((model, epoch_losses))
}

/// Train one model on windows pooled from several sequences (shuffled each
/// epoch). All windows must share `D` and `N`.
pub fn train_pooled(windows: &[SequenceWindow], cfg: &TrainConfig) -> Result<LstmModel> {
    Ok(train_windows(windows, cfg, true)?.0)
}

/// Everything produced by training on a single sequence.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LstmModel,
    /// One coefficient matrix per snapshot, from a clean replay of the
    /// trained model over the full sequence.
    pub coeffs: Vec<SelfExpression>,
    /// Mean window loss after each epoch.
    pub epoch_losses: Vec<f64>,
    /// Mean reconstruction loss `1/2 ||X_t - X_t C_t||_F^2` over the
    /// sequence (no L1 term), measuring final self-expression quality.
    pub final_recon_loss: f64,
}

/// Slice the sequence into windows, train, then replay the trained model
/// over the whole sequence to extract one coefficient matrix per snapshot.
pub fn train_sequence(
    seq: &EvolvingSequence,
    window: usize,
    stride: usize,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let windows = crate::data::windows(seq, window, stride)?;
    let (model, epoch_losses) = train_windows(&windows, cfg, false)?;
    let coeffs = infer_coeffs(&model, seq)?;
    let mut recon = 0.0;
    for (snap, c) in seq.snapshots.iter().zip(&coeffs) {
        let g = snap.data.transpose() * &snap.data;
        recon += loss_and_grad(c, &g, 0.0)?.0;
    }
    Ok(TrainOutcome {
        model,
        coeffs,
        epoch_losses,
        final_recon_loss: recon / seq.len() as f64,
    })
}

/// Replay a trained model over a sequence from zero state, returning one
/// coefficient matrix per snapshot (with its 1-based time index).
pub fn infer_coeffs(model: &LstmModel, seq: &EvolvingSequence) -> Result<Vec<SelfExpression>> {
    let mut state = LstmState::zeros(model.hidden);
    let mut out = Vec::with_capacity(seq.len());
    for snap in &seq.snapshots {
        if snap.feature_dim() != model.feature_dim || snap.n_points() != model.n_points {
            return Err(Error::Shape(format!(
                "snapshot t={} is D={} N={} but model expects D={} N={}",
                snap.t,
                snap.feature_dim(),
                snap.n_points(),
                model.feature_dim,
                model.n_points
            )));
        }
        let x = vec_mat(&snap.data);
        let (next, raw, _) = lstm_forward(model, &x, &state)?;
        let mut c = pad_diagonal(&raw)?;
        c.t = snap.t;
        out.push(c);
        state = next;
    }
    Ok(out)
}

/// Mean per-step loss of a window under the current parameters, with no
/// gradient work. This is the quantity [`bptt`] reports as `loss`.
pub fn window_loss(model: &LstmModel, window: &SequenceWindow, lambda: f64) -> Result<f64> {
    let steps = window.len();
    if steps == 0 {
        return Err(Error::Shape("window has no steps".into()));
    }
    let n = window.n_points();
    let mut state = LstmState::zeros(model.hidden);
    let mut total = 0.0;
    for s in 0..steps {
        let x = window.inputs.column(s).into_owned();
        let (next, raw, _) = lstm_forward(model, &x, &state)?;
        let c = pad_diagonal(&raw)?;
        let g = unvec(window.targets.column(s).as_slice(), n, n);
        total += loss_and_grad(&c, &g, lambda)?.0;
        state = next;
    }
    Ok(total / steps as f64)
}
