//! Training objectives.
//!
//! The base objective is `mean_batch[ 1/(2σ²_vae)·Σ_i (f_i − f̂_i)² + KL ]`,
//! reconstruction summed over output dimensions, averaged over the batch;
//! `σ²_vae` trades reconstruction fidelity against the KL pull toward the
//! standard-normal latent prior. The integral-augmented variant adds a
//! matching penalty on the log of the quadrature integral `∫exp(f)`,
//! computed from the reconstruction rather than a separate decoder head.

use super::model::CvaeModel;
use crate::error::CoreError;
use crate::neural::MlpGrads;
use crate::Result;
use ndarray::{concatenate, Array1, Array2, ArrayView1, Axis};

/// Which objective the training loop optimises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Standard,
    /// Adds `1/(2σ²_I)·(log Î − log I)²` with the integral taken by grid
    /// quadrature of `exp(f)`.
    IntegralAugmented { sigma2_int: f64 },
}

/// Loss decomposed into its batch-mean terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub reconstruction: f64,
    pub kl: f64,
    pub integral: f64,
}

/// Gradients for both networks, scaled to the batch-mean objective.
pub struct CvaeGrads {
    pub encoder: MlpGrads,
    pub decoder: MlpGrads,
}

/// Numerically stable `log Σ exp(v_i)`.
pub fn log_sum_exp(v: ArrayView1<f64>) -> Result<f64> {
    if v.is_empty() {
        return Err(CoreError::InsufficientData(
            "log-sum-exp of an empty vector".into(),
        ));
    }
    let m = v.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !m.is_finite() {
        return Ok(m);
    }
    let s: f64 = v.iter().map(|&x| (x - m).exp()).sum();
    Ok(m + s.ln())
}

/// Quadrature estimate of `log ∫ exp(f)` over the unit domain:
/// `−log n + log-sum-exp(f)`.
pub fn quadrature_log_integral(f: ArrayView1<f64>) -> Result<f64> {
    Ok(log_sum_exp(f)? - (f.len() as f64).ln())
}

fn softmax_row(v: ArrayView1<f64>) -> Array1<f64> {
    let m = v.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut e = v.mapv(|x| (x - m).exp());
    let s = e.sum();
    e.mapv_inplace(|x| x / s);
    e
}

fn check_batch(model: &CvaeModel, y: &Array2<f64>, c: &Array2<f64>, eps: &Array2<f64>) -> Result<usize> {
    let b = y.nrows();
    if b == 0 {
        return Err(CoreError::InsufficientData("empty batch".into()));
    }
    if c.nrows() != b || eps.nrows() != b {
        return Err(CoreError::ShapeMismatch(format!(
            "batch rows disagree: y {}, c {}, eps {}",
            b,
            c.nrows(),
            eps.nrows()
        )));
    }
    if y.ncols() != model.n() || c.ncols() != model.condition_dim() || eps.ncols() != model.latent_dim() {
        return Err(CoreError::ShapeMismatch(format!(
            "batch widths (y {}, c {}, eps {}) vs model (n {}, k {}, d {})",
            y.ncols(),
            c.ncols(),
            eps.ncols(),
            model.n(),
            model.condition_dim(),
            model.latent_dim()
        )));
    }
    Ok(b)
}

struct BatchForward {
    mu: Array2<f64>,
    logvar: Array2<f64>,
    z: Array2<f64>,
    recon: Array2<f64>,
}

fn batch_forward(
    model: &CvaeModel,
    y: &Array2<f64>,
    c: &Array2<f64>,
    eps: &Array2<f64>,
) -> Result<(BatchForward, crate::neural::MlpTrace, crate::neural::MlpTrace)> {
    let (mu, logvar, enc_trace) = model.encode_batch_trace(y, c)?;
    let z = &mu + &(logvar.mapv(|lv| (0.5 * lv).exp()) * eps);
    let (recon, dec_trace) = model.decode_batch_trace(&z, c)?;
    Ok((
        BatchForward {
            mu,
            logvar,
            z,
            recon,
        },
        enc_trace,
        dec_trace,
    ))
}

fn loss_terms(
    fwd: &BatchForward,
    y: &Array2<f64>,
    sigma2_f: f64,
    kind: LossKind,
) -> Result<(LossValue, Array2<f64>)> {
    let b = y.nrows() as f64;
    let resid = &fwd.recon - y;
    let recon = resid.iter().map(|r| r * r).sum::<f64>() / (2.0 * sigma2_f * b);
    let kl = fwd
        .mu
        .iter()
        .zip(fwd.logvar.iter())
        .map(|(&m, &lv)| 0.5 * (m * m + lv.exp() - 1.0 - lv))
        .sum::<f64>()
        / b;
    // cotangent with respect to the reconstruction
    let mut drecon = resid.mapv(|r| r / (sigma2_f * b));
    let mut integral = 0.0;
    if let LossKind::IntegralAugmented { sigma2_int } = kind {
        if !(sigma2_int > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "sigma2_int must be positive, got {sigma2_int}"
            )));
        }
        for i in 0..y.nrows() {
            let target = quadrature_log_integral(y.row(i))?;
            let got = quadrature_log_integral(fwd.recon.row(i))?;
            let diff = got - target;
            integral += diff * diff / (2.0 * sigma2_int * b);
            let sm = softmax_row(fwd.recon.row(i));
            let scale = diff / (sigma2_int * b);
            let mut row = drecon.row_mut(i);
            row.scaled_add(scale, &sm);
        }
    }
    Ok((
        LossValue {
            total: recon + kl + integral,
            reconstruction: recon,
            kl,
            integral,
        },
        drecon,
    ))
}

fn loss_and_grads(
    model: &CvaeModel,
    y: &Array2<f64>,
    c: &Array2<f64>,
    eps: &Array2<f64>,
    sigma2_f: f64,
    kind: LossKind,
) -> Result<(LossValue, CvaeGrads)> {
    let b = check_batch(model, y, c, eps)? as f64;
    let (fwd, enc_trace, dec_trace) = batch_forward(model, y, c, eps)?;
    let (value, drecon) = loss_terms(&fwd, y, sigma2_f, kind)?;

    let (dec_grads, ddec_in) = model.decoder.backward_batch(&dec_trace, &drecon)?;
    let d = model.latent_dim();
    let dz = ddec_in.slice(ndarray::s![.., ..d]);

    // μ cotangent: through z plus the KL term
    let dmu = &dz + &fwd.mu.mapv(|m| m / b);
    // log-variance cotangent: through z's scale plus the KL term
    let half_sigma_eps = fwd.logvar.mapv(|lv| 0.5 * (0.5 * lv).exp()) * eps;
    let dlogvar = &dz * &half_sigma_eps + fwd.logvar.mapv(|lv| (lv.exp() - 1.0) / (2.0 * b));

    let enc_cot = concatenate(Axis(1), &[dmu.view(), dlogvar.view()])
        .map_err(|e| CoreError::ShapeMismatch(e.to_string()))?;
    let (enc_grads, _) = model.encoder.backward_batch(&enc_trace, &enc_cot)?;

    let _ = &fwd.z;
    Ok((
        value,
        CvaeGrads {
            encoder: enc_grads,
            decoder: dec_grads,
        },
    ))
}

/// Loss value without gradients (held-out evaluation).
pub fn loss_value(
    model: &CvaeModel,
    y: &Array2<f64>,
    c: &Array2<f64>,
    eps: &Array2<f64>,
    kind: LossKind,
) -> Result<LossValue> {
    check_batch(model, y, c, eps)?;
    let (fwd, _, _) = batch_forward(model, y, c, eps)?;
    let (value, _) = loss_terms(&fwd, y, model.sigma2_vae(), kind)?;
    Ok(value)
}

/// The conditional objective `1/(2σ²_vae)·MSE + KL` with exact gradients for
/// both networks; one `eps` row per batch row.
pub fn priorcvae_loss(
    model: &CvaeModel,
    y: &Array2<f64>,
    c: &Array2<f64>,
    eps: &Array2<f64>,
) -> Result<(LossValue, CvaeGrads)> {
    loss_and_grads(model, y, c, eps, model.sigma2_vae(), LossKind::Standard)
}

/// The integral-augmented objective: reconstruction at weight `1/(2σ²_f)`,
/// log-integral match at `1/(2σ²_I)`, plus the KL term.
pub fn lgcp_loss(
    model: &CvaeModel,
    y: &Array2<f64>,
    c: &Array2<f64>,
    eps: &Array2<f64>,
    sigma2_f: f64,
    sigma2_int: f64,
) -> Result<(LossValue, CvaeGrads)> {
    if !(sigma2_f > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "sigma2_f must be positive, got {sigma2_f}"
        )));
    }
    loss_and_grads(
        model,
        y,
        c,
        eps,
        sigma2_f,
        LossKind::IntegralAugmented { sigma2_int },
    )
}
