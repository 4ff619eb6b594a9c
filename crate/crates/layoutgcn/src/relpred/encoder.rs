//! One post-norm transformer encoder layer with a fully hand-derived
//! backward pass.
//!
//! Forward over R rows of width d_model:
//!
//!   Q = X Wq + bq,  K = X Wk + bk,  V = X Wv + bv
//!   per head: A = softmax(Q_h K_h^T / sqrt(d_model)),  C_h = A V_h
//!   O  = concat(C_h) Wo + bo
//!   X1 = LayerNorm(X + O)
//!   F  = relu(X1 Wf1 + bf1) Wf2 + bf2
//!   X2 = LayerNorm(X1 + F)
//!
//! Attention scores divide by sqrt(d_model), not sqrt(d_head). LayerNorm is
//! per row with learned gain and bias, epsilon 1e-5, biased variance.

use ndarray::{s, Array2, Axis};

use crate::math::{glorot_uniform, relu, softmax_rows};
use crate::{Error, Result};

pub const LN_EPS: f64 = 1e-5;

/// Row-wise layer normalization cache: normalized rows and 1/sigma per row.
pub struct LnCache {
    pub xhat: Array2<f64>,
    pub inv_sigma: Vec<f64>,
}

/// y = g * (x - mean) / sqrt(var + eps) + b, per row.
pub fn ln_forward(x: &Array2<f64>, g: &Array2<f64>, b: &Array2<f64>) -> (Array2<f64>, LnCache) {
    let (rows, cols) = x.dim();
    let mut xhat = Array2::zeros((rows, cols));
    let mut inv_sigma = Vec::with_capacity(rows);
    for i in 0..rows {
        let row = x.row(i);
        let mean = row.sum() / cols as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        inv_sigma.push(inv);
        for j in 0..cols {
            xhat[[i, j]] = (x[[i, j]] - mean) * inv;
        }
    }
    let y = &xhat * g + b;
    (y, LnCache { xhat, inv_sigma })
}

/// Backward through layer normalization. Returns (dX, dG, dB).
pub fn ln_backward(
    cache: &LnCache,
    g: &Array2<f64>,
    d_y: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let (rows, cols) = cache.xhat.dim();
    let d_g = (d_y * &cache.xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
    let d_b = d_y.sum_axis(Axis(0)).insert_axis(Axis(0));
    let u = d_y * g;
    let mut d_x = Array2::zeros((rows, cols));
    for i in 0..rows {
        let mean_u = u.row(i).sum() / cols as f64;
        let mean_ux = u
            .row(i)
            .iter()
            .zip(cache.xhat.row(i).iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / cols as f64;
        for j in 0..cols {
            d_x[[i, j]] =
                cache.inv_sigma[i] * (u[[i, j]] - mean_u - cache.xhat[[i, j]] * mean_ux);
        }
    }
    (d_x, d_g, d_b)
}

/// Softmax-backward per row: dS = A * (dA - rowsum(dA * A)).
fn softmax_backward(a: &Array2<f64>, d_a: &Array2<f64>) -> Array2<f64> {
    let mut out = d_a * a;
    for i in 0..a.nrows() {
        let dot: f64 = out.row(i).sum();
        for j in 0..a.ncols() {
            out[[i, j]] -= a[[i, j]] * dot;
        }
    }
    out
}

/// Parameters of the encoder layer.
#[derive(Debug, Clone)]
pub struct EncoderLayer {
    pub d_model: usize,
    pub heads: usize,
    pub wq: Array2<f64>,
    pub bq: Array2<f64>,
    pub wk: Array2<f64>,
    pub bk: Array2<f64>,
    pub wv: Array2<f64>,
    pub bv: Array2<f64>,
    pub wo: Array2<f64>,
    pub bo: Array2<f64>,
    pub ln1_g: Array2<f64>,
    pub ln1_b: Array2<f64>,
    pub wf1: Array2<f64>,
    pub bf1: Array2<f64>,
    pub wf2: Array2<f64>,
    pub bf2: Array2<f64>,
    pub ln2_g: Array2<f64>,
    pub ln2_b: Array2<f64>,
}

/// Forward intermediates needed for the backward pass.
pub struct EncoderCache {
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Vec<Array2<f64>>,
    context: Array2<f64>,
    ln1: LnCache,
    x1: Array2<f64>,
    f1: Array2<f64>,
    f1r: Array2<f64>,
    ln2: LnCache,
}

/// Gradients in `params_mut` order.
pub struct EncoderGrads(pub Vec<Array2<f64>>);

impl EncoderLayer {
    pub fn new(
        d_model: usize,
        heads: usize,
        ff_dim: usize,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> Result<EncoderLayer> {
        if heads == 0 || d_model % heads != 0 {
            return Err(Error::Contract(format!(
                "head count {heads} must divide d_model {d_model}"
            )));
        }
        Ok(EncoderLayer {
            d_model,
            heads,
            wq: glorot_uniform(rng, d_model, d_model),
            bq: Array2::zeros((1, d_model)),
            wk: glorot_uniform(rng, d_model, d_model),
            bk: Array2::zeros((1, d_model)),
            wv: glorot_uniform(rng, d_model, d_model),
            bv: Array2::zeros((1, d_model)),
            wo: glorot_uniform(rng, d_model, d_model),
            bo: Array2::zeros((1, d_model)),
            ln1_g: Array2::from_elem((1, d_model), 1.0),
            ln1_b: Array2::zeros((1, d_model)),
            wf1: glorot_uniform(rng, d_model, ff_dim),
            bf1: Array2::zeros((1, ff_dim)),
            wf2: glorot_uniform(rng, ff_dim, d_model),
            bf2: Array2::zeros((1, d_model)),
            ln2_g: Array2::from_elem((1, d_model), 1.0),
            ln2_b: Array2::zeros((1, d_model)),
        })
    }

    pub fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        vec![
            &mut self.wq,
            &mut self.bq,
            &mut self.wk,
            &mut self.bk,
            &mut self.wv,
            &mut self.bv,
            &mut self.wo,
            &mut self.bo,
            &mut self.ln1_g,
            &mut self.ln1_b,
            &mut self.wf1,
            &mut self.bf1,
            &mut self.wf2,
            &mut self.bf2,
            &mut self.ln2_g,
            &mut self.ln2_b,
        ]
    }

    fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, EncoderCache) {
        let dh = self.head_dim();
        let scale = 1.0 / (self.d_model as f64).sqrt();
        let q = x.dot(&self.wq) + &self.bq;
        let k = x.dot(&self.wk) + &self.bk;
        let v = x.dot(&self.wv) + &self.bv;
        let rows = x.nrows();
        let mut context = Array2::zeros((rows, self.d_model));
        let mut attn = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let qh = q.slice(cols);
            let kh = k.slice(cols);
            let vh = v.slice(cols);
            let scores = qh.dot(&kh.t()) * scale;
            let a = softmax_rows(&scores);
            let ch = a.dot(&vh);
            context.slice_mut(cols).assign(&ch);
            attn.push(a);
        }
        let o = context.dot(&self.wo) + &self.bo;
        let r1 = x + &o;
        let (x1, ln1) = ln_forward(&r1, &self.ln1_g, &self.ln1_b);
        let f1 = x1.dot(&self.wf1) + &self.bf1;
        let f1r = relu(&f1);
        let f2 = f1r.dot(&self.wf2) + &self.bf2;
        let r2 = &x1 + &f2;
        let (x2, ln2) = ln_forward(&r2, &self.ln2_g, &self.ln2_b);
        (
            x2,
            EncoderCache {
                q,
                k,
                v,
                attn,
                context,
                ln1,
                x1,
                f1,
                f1r,
                ln2,
            },
        )
    }

    /// Backward through the layer. Returns gradients for the sixteen
    /// parameter tensors plus the gradient with respect to the input.
    pub fn backward(
        &self,
        x: &Array2<f64>,
        cache: &EncoderCache,
        d_out: &Array2<f64>,
    ) -> (EncoderGrads, Array2<f64>) {
        let dh = self.head_dim();
        let scale = 1.0 / (self.d_model as f64).sqrt();

        // LN2 then the feed-forward block.
        let (d_r2, d_ln2_g, d_ln2_b) = ln_backward(&cache.ln2, &self.ln2_g, d_out);
        let mut d_x1 = d_r2.clone(); // residual branch
        let d_f2 = d_r2;
        let d_wf2 = cache.f1r.t().dot(&d_f2);
        let d_bf2 = d_f2.sum_axis(Axis(0)).insert_axis(Axis(0));
        let mut d_f1 = d_f2.dot(&self.wf2.t());
        for (df, f) in d_f1.iter_mut().zip(cache.f1.iter()) {
            if *f <= 0.0 {
                *df = 0.0;
            }
        }
        let d_wf1 = cache.x1.t().dot(&d_f1);
        let d_bf1 = d_f1.sum_axis(Axis(0)).insert_axis(Axis(0));
        d_x1 = d_x1 + d_f1.dot(&self.wf1.t());

        // LN1 then the attention block.
        let (d_r1, d_ln1_g, d_ln1_b) = ln_backward(&cache.ln1, &self.ln1_g, &d_x1);
        let mut d_x = d_r1.clone(); // residual branch
        let d_o = d_r1;
        let d_wo = cache.context.t().dot(&d_o);
        let d_bo = d_o.sum_axis(Axis(0)).insert_axis(Axis(0));
        let d_context = d_o.dot(&self.wo.t());

        let rows = x.nrows();
        let mut d_q = Array2::zeros((rows, self.d_model));
        let mut d_k = Array2::zeros((rows, self.d_model));
        let mut d_v = Array2::zeros((rows, self.d_model));
        for h in 0..self.heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let a = &cache.attn[h];
            let d_ch = d_context.slice(cols);
            let vh = cache.v.slice(cols);
            let qh = cache.q.slice(cols);
            let kh = cache.k.slice(cols);
            let d_a = d_ch.dot(&vh.t());
            let d_vh = a.t().dot(&d_ch);
            let d_scores = softmax_backward(a, &d_a);
            let d_qh = d_scores.dot(&kh) * scale;
            let d_kh = d_scores.t().dot(&qh) * scale;
            d_q.slice_mut(cols).assign(&d_qh);
            d_k.slice_mut(cols).assign(&d_kh);
            d_v.slice_mut(cols).assign(&d_vh);
        }
        let d_wq = x.t().dot(&d_q);
        let d_bq = d_q.sum_axis(Axis(0)).insert_axis(Axis(0));
        let d_wk = x.t().dot(&d_k);
        let d_bk = d_k.sum_axis(Axis(0)).insert_axis(Axis(0));
        let d_wv = x.t().dot(&d_v);
        let d_bv = d_v.sum_axis(Axis(0)).insert_axis(Axis(0));
        d_x = d_x + d_q.dot(&self.wq.t()) + d_k.dot(&self.wk.t()) + d_v.dot(&self.wv.t());

        (
            EncoderGrads(vec![
                d_wq, d_bq, d_wk, d_bk, d_wv, d_bv, d_wo, d_bo, d_ln1_g, d_ln1_b, d_wf1, d_bf1,
                d_wf2, d_bf2, d_ln2_g, d_ln2_b,
            ]),
            d_x,
        )
    }
}
