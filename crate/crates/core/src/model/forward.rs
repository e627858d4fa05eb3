//! Encoder forward pass, hand-derived backward pass, and the dual-ordering
//! pair head.
//!
//! The encoder is a post-layer-norm residual stack: embeddings (token +
//! learned position, layer-normed), then per layer multi-head self-attention
//! and a GELU feed-forward block, each followed by residual add and layer
//! norm. Padded key positions are masked out of every attention row; the
//! pooled output is the hidden state at position 0. Because masked keys
//! contribute exactly zero, outputs are bitwise independent of how much
//! trailing padding a sequence carries.

use ndarray::{s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{HeadMode, ModelConfig};
use super::params::{LayerNormParams, ParameterStore};
use super::scalar::Scalar;
use super::ModelError;
use crate::tokenizer::PAD_ID;

const LN_EPS: f64 = 1e-5;
const MASK_BIAS: f64 = -1e30;

/// The two raw class scores for a pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairLogits<T> {
    pub logits: [T; 2],
}

/// Numerically stable softmax over the two logits; sums to one.
pub fn predict_probabilities<T: Scalar>(logits: &PairLogits<T>) -> [T; 2] {
    let [a, b] = logits.logits;
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    let sum = ea + eb;
    [ea / sum, eb / sum]
}

/// Mean cross-entropy of one sample plus its logit gradient.
fn cross_entropy<T: Scalar>(logits: [T; 2], label: u8) -> (T, [T; 2]) {
    let [a, b] = logits;
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    let sum = ea + eb;
    let lse = m + sum.ln();
    let picked = if label == 1 { b } else { a };
    let loss = lse - picked;
    let mut grad = [ea / sum, eb / sum];
    grad[label as usize] = grad[label as usize] - T::one();
    (loss, grad)
}

fn gelu<T: Scalar>(x: T) -> T {
    let c = T::from_f64(0.797_884_560_802_865_4); // sqrt(2/pi)
    let a = T::from_f64(0.044_715);
    let u = c * (x + a * x * x * x);
    T::from_f64(0.5) * x * (T::one() + u.tanh())
}

fn gelu_grad<T: Scalar>(x: T) -> T {
    let c = T::from_f64(0.797_884_560_802_865_4);
    let a = T::from_f64(0.044_715);
    let half = T::from_f64(0.5);
    let u = c * (x + a * x * x * x);
    let t = u.tanh();
    let du = c * (T::one() + T::from_f64(3.0) * a * x * x);
    half * (T::one() + t) + half * x * (T::one() - t * t) * du
}

fn softmax_rows_inplace<T: Scalar>(m: &mut Array2<T>) {
    for mut row in m.outer_iter_mut() {
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
}

/// Inverted-dropout mask: entries are 0 with probability `rate`, else
/// `1/(1-rate)`.
fn dropout_mask2<T: Scalar>(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Array2<T> {
    let keep = T::from_f64(1.0 / (1.0 - rate));
    let mut mask = Array2::zeros((rows, cols));
    for v in mask.iter_mut() {
        *v = if rng.random::<f64>() < rate {
            T::zero()
        } else {
            keep
        };
    }
    mask
}

fn dropout_mask1<T: Scalar>(len: usize, rate: f64, rng: &mut ChaCha8Rng) -> Array1<T> {
    let keep = T::from_f64(1.0 / (1.0 - rate));
    let mut mask = Array1::zeros(len);
    for v in mask.iter_mut() {
        *v = if rng.random::<f64>() < rate {
            T::zero()
        } else {
            keep
        };
    }
    mask
}

struct LnCache<T> {
    xhat: Array2<T>,
    inv_std: Vec<T>,
}

fn layer_norm_forward<T: Scalar>(
    x: &Array2<T>,
    ln: &LayerNormParams<T>,
) -> (Array2<T>, LnCache<T>) {
    let (rows, d) = x.dim();
    let dt = T::from_f64(d as f64);
    let eps = T::from_f64(LN_EPS);
    let mut xhat = Array2::zeros((rows, d));
    let mut y = Array2::zeros((rows, d));
    let mut inv_std = Vec::with_capacity(rows);
    for i in 0..rows {
        let row = x.row(i);
        let mean = row.sum() / dt;
        let mut var = T::zero();
        for &v in row {
            let c = v - mean;
            var += c * c;
        }
        var = var / dt;
        let istd = T::one() / (var + eps).sqrt();
        inv_std.push(istd);
        for j in 0..d {
            let h = (x[[i, j]] - mean) * istd;
            xhat[[i, j]] = h;
            y[[i, j]] = h * ln.gain[j] + ln.bias[j];
        }
    }
    (y, LnCache { xhat, inv_std })
}

/// Backward through layer norm; accumulates gain/bias gradients and
/// returns the input gradient.
fn layer_norm_backward<T: Scalar>(
    dy: &Array2<T>,
    cache: &LnCache<T>,
    ln: &LayerNormParams<T>,
    d_ln: &mut LayerNormParams<T>,
) -> Array2<T> {
    let (rows, d) = dy.dim();
    let dt = T::from_f64(d as f64);
    let mut dx = Array2::zeros((rows, d));
    for i in 0..rows {
        let istd = cache.inv_std[i];
        let mut sum_dyh = T::zero();
        let mut sum_dyh_xhat = T::zero();
        for j in 0..d {
            let dyh = dy[[i, j]] * ln.gain[j];
            let xh = cache.xhat[[i, j]];
            sum_dyh += dyh;
            sum_dyh_xhat += dyh * xh;
            d_ln.gain[j] += dy[[i, j]] * xh;
            d_ln.bias[j] += dy[[i, j]];
        }
        let mean_dyh = sum_dyh / dt;
        let mean_dyh_xhat = sum_dyh_xhat / dt;
        for j in 0..d {
            let dyh = dy[[i, j]] * ln.gain[j];
            let xh = cache.xhat[[i, j]];
            dx[[i, j]] = istd * (dyh - mean_dyh - xh * mean_dyh_xhat);
        }
    }
    dx
}

struct AttnCache<T> {
    q: Array2<T>,
    k: Array2<T>,
    v: Array2<T>,
    /// per head, post-softmax, pre-dropout
    probs: Vec<Array2<T>>,
    prob_masks: Option<Vec<Array2<T>>>,
    ctx: Array2<T>,
}

struct LayerCache<T> {
    x_in: Array2<T>,
    attn: AttnCache<T>,
    attn_drop_mask: Option<Array2<T>>,
    ln1: LnCache<T>,
    x_mid: Array2<T>,
    ff_pre: Array2<T>,
    ff_act: Array2<T>,
    ff_drop_mask: Option<Array2<T>>,
    ln2: LnCache<T>,
}

pub(crate) struct SeqCache<T> {
    ids: Vec<u32>,
    emb_ln: LnCache<T>,
    emb_drop_mask: Option<Array2<T>>,
    layers: Vec<LayerCache<T>>,
    /// final hidden states (L, d)
    pub out: Array2<T>,
}

fn validate_ids(ids: &[u32], cfg: &ModelConfig) -> Result<(), ModelError> {
    if ids.is_empty() {
        return Err(ModelError::BadInput("empty token sequence".into()));
    }
    if ids.len() > cfg.max_len {
        return Err(ModelError::BadInput(format!(
            "sequence length {} exceeds max_len {}",
            ids.len(),
            cfg.max_len
        )));
    }
    if let Some(&bad) = ids.iter().find(|&&id| id as usize >= cfg.vocab_size) {
        return Err(ModelError::BadInput(format!(
            "token id {bad} out of range for vocab size {}",
            cfg.vocab_size
        )));
    }
    Ok(())
}

/// Full encoder forward. `dropout_rng` enables inverted dropout (training
/// mode); masks are recorded in the cache for the backward pass.
pub(crate) fn encode_with_cache<T: Scalar>(
    ids: &[u32],
    params: &ParameterStore<T>,
    cfg: &ModelConfig,
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<SeqCache<T>, ModelError> {
    validate_ids(ids, cfg)?;
    let len = ids.len();
    let d = cfg.model_dim;
    let rate = cfg.dropout_rate;
    let dropping = dropout_rng.is_some() && rate > 0.0;

    // key-side mask bias: 0 for real tokens, a large negative for padding
    let mask_bias: Array1<T> = Array1::from_iter(ids.iter().map(|&id| {
        if id == PAD_ID {
            T::from_f64(MASK_BIAS)
        } else {
            T::zero()
        }
    }));

    let mut emb = Array2::zeros((len, d));
    for (t, &id) in ids.iter().enumerate() {
        let tok = params.token_embed.row(id as usize);
        let pos = params.pos_embed.row(t);
        for j in 0..d {
            emb[[t, j]] = tok[j] + pos[j];
        }
    }
    let (mut x, emb_ln) = layer_norm_forward(&emb, &params.embed_ln);
    let emb_drop_mask = if dropping {
        let mask = dropout_mask2(len, d, rate, dropout_rng.as_deref_mut().unwrap());
        x = &x * &mask;
        Some(mask)
    } else {
        None
    };

    let heads = cfg.num_heads;
    let dh = cfg.head_dim();
    let scale = T::from_f64(1.0 / (dh as f64).sqrt());
    let mut layers = Vec::with_capacity(cfg.num_layers);

    for layer in &params.layers {
        let x_in = x.clone();
        let q = layer.attn.query.forward(&x_in);
        let k = layer.attn.key.forward(&x_in);
        let v = layer.attn.value.forward(&x_in);
        let mut ctx = Array2::zeros((len, d));
        let mut probs = Vec::with_capacity(heads);
        let mut prob_masks = if dropping {
            Some(Vec::with_capacity(heads))
        } else {
            None
        };
        for h in 0..heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let qh = q.slice(cols);
            let kh = k.slice(cols);
            let vh = v.slice(cols);
            let mut scores = qh.dot(&kh.t());
            scores = scores * scale;
            scores += &mask_bias;
            softmax_rows_inplace(&mut scores);
            let applied = if dropping {
                let mask = dropout_mask2(len, len, rate, dropout_rng.as_deref_mut().unwrap());
                let dropped = &scores * &mask;
                prob_masks.as_mut().unwrap().push(mask);
                dropped
            } else {
                scores.clone()
            };
            ctx.slice_mut(cols).assign(&applied.dot(&vh));
            probs.push(scores);
        }
        let mut attn_out = layer.attn.output.forward(&ctx);
        let attn_drop_mask = if dropping {
            let mask = dropout_mask2(len, d, rate, dropout_rng.as_deref_mut().unwrap());
            attn_out = &attn_out * &mask;
            Some(mask)
        } else {
            None
        };
        let r1 = &x_in + &attn_out;
        let (x_mid, ln1) = layer_norm_forward(&r1, &layer.attn_ln);

        let ff_pre = layer.ff1.forward(&x_mid);
        let ff_act = ff_pre.mapv(gelu);
        let mut ff_out = layer.ff2.forward(&ff_act);
        let ff_drop_mask = if dropping {
            let mask = dropout_mask2(len, d, rate, dropout_rng.as_deref_mut().unwrap());
            ff_out = &ff_out * &mask;
            Some(mask)
        } else {
            None
        };
        let r2 = &x_mid + &ff_out;
        let (x_next, ln2) = layer_norm_forward(&r2, &layer.ff_ln);

        layers.push(LayerCache {
            x_in,
            attn: AttnCache {
                q,
                k,
                v,
                probs,
                prob_masks,
                ctx,
            },
            attn_drop_mask,
            ln1,
            x_mid,
            ff_pre,
            ff_act,
            ff_drop_mask,
            ln2,
        });
        x = x_next;
    }

    Ok(SeqCache {
        ids: ids.to_vec(),
        emb_ln,
        emb_drop_mask,
        layers,
        out: x,
    })
}

/// Backward through the encoder given the gradient of the final hidden
/// states; accumulates parameter gradients into `grads`.
pub(crate) fn encoder_backward<T: Scalar>(
    mut d_out: Array2<T>,
    cache: &SeqCache<T>,
    params: &ParameterStore<T>,
    cfg: &ModelConfig,
    grads: &mut ParameterStore<T>,
) {
    let heads = cfg.num_heads;
    let dh = cfg.head_dim();
    let scale = T::from_f64(1.0 / (dh as f64).sqrt());

    for (li, layer) in params.layers.iter().enumerate().rev() {
        let lc = &cache.layers[li];
        let lg = &mut grads.layers[li];

        // layer output = LN2(x_mid + dropout(FF(x_mid)))
        let d_r2 = layer_norm_backward(&d_out, &lc.ln2, &layer.ff_ln, &mut lg.ff_ln);
        let d_ff_out = match &lc.ff_drop_mask {
            Some(mask) => &d_r2 * mask,
            None => d_r2.clone(),
        };
        // ff2
        let d_ff_act = d_ff_out.dot(&layer.ff2.weight.t());
        lg.ff2.weight += &lc.ff_act.t().dot(&d_ff_out);
        lg.ff2.bias += &d_ff_out.sum_axis(Axis(0));
        // gelu
        let d_ff_pre = &d_ff_act * &lc.ff_pre.mapv(gelu_grad);
        // ff1
        let d_x_mid_ff = d_ff_pre.dot(&layer.ff1.weight.t());
        lg.ff1.weight += &lc.x_mid.t().dot(&d_ff_pre);
        lg.ff1.bias += &d_ff_pre.sum_axis(Axis(0));
        // residual
        let d_x_mid = &d_r2 + &d_x_mid_ff;

        // x_mid = LN1(x_in + dropout(Attn(x_in)))
        let d_r1 = layer_norm_backward(&d_x_mid, &lc.ln1, &layer.attn_ln, &mut lg.attn_ln);
        let d_attn_out = match &lc.attn_drop_mask {
            Some(mask) => &d_r1 * mask,
            None => d_r1.clone(),
        };
        // output projection
        let d_ctx = d_attn_out.dot(&layer.attn.output.weight.t());
        lg.attn.output.weight += &lc.attn.ctx.t().dot(&d_attn_out);
        lg.attn.output.bias += &d_attn_out.sum_axis(Axis(0));

        let len = d_ctx.nrows();
        let mut d_q = Array2::zeros((len, cfg.model_dim));
        let mut d_k = Array2::zeros((len, cfg.model_dim));
        let mut d_v = Array2::zeros((len, cfg.model_dim));
        for h in 0..heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let d_ctx_h = d_ctx.slice(cols);
            let probs = &lc.attn.probs[h];
            let vh = lc.attn.v.slice(cols);
            // ctx_h = dropped_probs . v_h
            let (d_dropped, dropped): (Array2<T>, Array2<T>) =
                match &lc.attn.prob_masks {
                    Some(masks) => {
                        let dropped = probs * &masks[h];
                        (d_ctx_h.dot(&vh.t()), dropped)
                    }
                    None => (d_ctx_h.dot(&vh.t()), probs.clone()),
                };
            d_v.slice_mut(cols).assign(&dropped.t().dot(&d_ctx_h));
            let d_probs = match &lc.attn.prob_masks {
                Some(masks) => &d_dropped * &masks[h],
                None => d_dropped,
            };
            // softmax backward, row-wise
            let mut d_scores = Array2::zeros((len, len));
            for i in 0..len {
                let p_row = probs.row(i);
                let dp_row = d_probs.row(i);
                let dot = p_row
                    .iter()
                    .zip(dp_row.iter())
                    .fold(T::zero(), |acc, (&p, &dp)| acc + p * dp);
                for j in 0..len {
                    d_scores[[i, j]] = p_row[j] * (dp_row[j] - dot);
                }
            }
            let qh = lc.attn.q.slice(cols);
            let kh = lc.attn.k.slice(cols);
            d_q.slice_mut(cols).assign(&(d_scores.dot(&kh) * scale));
            d_k.slice_mut(cols).assign(&(d_scores.t().dot(&qh) * scale));
        }

        // q/k/v projections
        let mut d_x_in = d_q.dot(&layer.attn.query.weight.t());
        d_x_in += &d_k.dot(&layer.attn.key.weight.t());
        d_x_in += &d_v.dot(&layer.attn.value.weight.t());
        lg.attn.query.weight += &lc.x_in.t().dot(&d_q);
        lg.attn.query.bias += &d_q.sum_axis(Axis(0));
        lg.attn.key.weight += &lc.x_in.t().dot(&d_k);
        lg.attn.key.bias += &d_k.sum_axis(Axis(0));
        lg.attn.value.weight += &lc.x_in.t().dot(&d_v);
        lg.attn.value.bias += &d_v.sum_axis(Axis(0));

        // residual into the layer input
        d_out = &d_r1 + &d_x_in;
    }

    // embeddings: x0 = dropout(LN(token + pos))
    let d_ln_out = match &cache.emb_drop_mask {
        Some(mask) => &d_out * mask,
        None => d_out,
    };
    let d_emb = layer_norm_backward(
        &d_ln_out,
        &cache.emb_ln,
        &params.embed_ln,
        &mut grads.embed_ln,
    );
    for (t, &id) in cache.ids.iter().enumerate() {
        let mut tok = grads.token_embed.row_mut(id as usize);
        let mut pos = grads.pos_embed.row_mut(t);
        for j in 0..d_emb.ncols() {
            tok[j] += d_emb[[t, j]];
            pos[j] += d_emb[[t, j]];
        }
    }
}

/// Evaluation-mode encoder: returns the pooled hidden state at position 0.
pub fn encode_sequence<T: Scalar>(
    ids: &[u32],
    params: &ParameterStore<T>,
    cfg: &ModelConfig,
) -> Result<Array1<T>, ModelError> {
    let cache = encode_with_cache(ids, params, cfg, None)?;
    Ok(cache.out.row(0).to_owned())
}

struct HeadCache<T> {
    z: Array1<T>,
    t: Array1<T>,
    drop_mask: Option<Array1<T>>,
    t_dropped: Array1<T>,
}

fn head_forward<T: Scalar>(
    pooled_ab: &Array1<T>,
    pooled_ba: &Array1<T>,
    params: &ParameterStore<T>,
    cfg: &ModelConfig,
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> (PairLogits<T>, HeadCache<T>) {
    let z: Array1<T> = match cfg.head_mode {
        HeadMode::Concat => {
            let mut z = Array1::zeros(2 * cfg.model_dim);
            z.slice_mut(s![..cfg.model_dim]).assign(pooled_ab);
            z.slice_mut(s![cfg.model_dim..]).assign(pooled_ba);
            z
        }
        HeadMode::Symmetric => pooled_ab + pooled_ba,
    };
    let pre = z.dot(&params.head.dense.weight) + &params.head.dense.bias;
    let t = pre.mapv(|v| v.tanh());
    let (t_dropped, drop_mask) = match dropout_rng {
        Some(rng) if cfg.dropout_rate > 0.0 => {
            let mask = dropout_mask1(t.len(), cfg.dropout_rate, rng);
            (&t * &mask, Some(mask))
        }
        _ => (t.clone(), None),
    };
    let logits_vec = t_dropped.dot(&params.head.out.weight) + &params.head.out.bias;
    let logits = PairLogits {
        logits: [logits_vec[0], logits_vec[1]],
    };
    (
        logits,
        HeadCache {
            z,
            t,
            drop_mask,
            t_dropped,
        },
    )
}

/// Backward through the head; returns gradients of the two pooled vectors.
fn head_backward<T: Scalar>(
    d_logits: [T; 2],
    cache: &HeadCache<T>,
    params: &ParameterStore<T>,
    cfg: &ModelConfig,
    grads: &mut ParameterStore<T>,
) -> (Array1<T>, Array1<T>) {
    let d = cfg.model_dim;
    let dl = Array1::from_vec(d_logits.to_vec());
    // out layer
    for i in 0..d {
        for j in 0..2 {
            grads.head.out.weight[[i, j]] += cache.t_dropped[i] * dl[j];
        }
    }
    grads.head.out.bias += &dl;
    let d_t_dropped = params.head.out.weight.dot(&dl);
    let d_t = match &cache.drop_mask {
        Some(mask) => &d_t_dropped * mask,
        None => d_t_dropped,
    };
    // tanh
    let d_pre = &d_t * &cache.t.mapv(|v| T::one() - v * v);
    // dense layer
    let z_len = cache.z.len();
    for i in 0..z_len {
        for j in 0..d {
            grads.head.dense.weight[[i, j]] += cache.z[i] * d_pre[j];
        }
    }
    grads.head.dense.bias += &d_pre;
    let d_z = params.head.dense.weight.dot(&d_pre);
    match cfg.head_mode {
        HeadMode::Concat => (
            d_z.slice(s![..d]).to_owned(),
            d_z.slice(s![d..]).to_owned(),
        ),
        HeadMode::Symmetric => (d_z.clone(), d_z),
    }
}

/// Evaluation-mode pair classification: encodes both concatenation orders
/// and feeds the pooled outputs to the head.
pub fn pair_forward<T: Scalar>(
    alpha_beta_ids: &[u32],
    beta_alpha_ids: &[u32],
    params: &ParameterStore<T>,
    cfg: &ModelConfig,
) -> Result<PairLogits<T>, ModelError> {
    let u = encode_sequence(alpha_beta_ids, params, cfg)?;
    let w = encode_sequence(beta_alpha_ids, params, cfg)?;
    let (logits, _) = head_forward(&u, &w, params, cfg, None);
    Ok(logits)
}

/// One training example: both pair orderings plus the target class.
#[derive(Clone, Debug)]
pub struct BatchItem {
    pub id: u64,
    pub ab: Vec<u32>,
    pub ba: Vec<u32>,
    pub label: u8,
}

/// Mean cross-entropy over the batch and exact gradients for every
/// parameter tensor.
///
/// `dropout_seed` enables dropout (training mode); each sample's masks are
/// drawn from a stream derived from (seed, sample index), so results do not
/// depend on thread scheduling. Per-sample gradients are reduced in sample
/// order, keeping the result bitwise deterministic.
pub fn loss_and_gradients<T: Scalar>(
    batch: &[BatchItem],
    params: &ParameterStore<T>,
    cfg: &ModelConfig,
    dropout_seed: Option<u64>,
) -> Result<(T, ParameterStore<T>), ModelError> {
    use rayon::prelude::*;

    if batch.is_empty() {
        return Err(ModelError::BadInput("empty batch".into()));
    }

    let per_sample: Vec<(T, ParameterStore<T>)> = batch
        .par_iter()
        .enumerate()
        .map(|(idx, item)| -> Result<(T, ParameterStore<T>), ModelError> {
            let mut rng = dropout_seed.map(|s| {
                ChaCha8Rng::seed_from_u64(crate::generator::derive_seed(s, idx as u64))
            });
            let cache_ab = encode_with_cache(&item.ab, params, cfg, rng.as_mut())?;
            let cache_ba = encode_with_cache(&item.ba, params, cfg, rng.as_mut())?;
            let u = cache_ab.out.row(0).to_owned();
            let w = cache_ba.out.row(0).to_owned();
            let (logits, head_cache) = head_forward(&u, &w, params, cfg, rng.as_mut());
            let (loss, d_logits) = cross_entropy(logits.logits, item.label);

            let mut grads = ParameterStore::zeros(cfg);
            let (du, dw) = head_backward(d_logits, &head_cache, params, cfg, &mut grads);
            let mut d_out_ab: Array2<T> = Array2::zeros(cache_ab.out.raw_dim());
            d_out_ab.row_mut(0).assign(&du);
            encoder_backward(d_out_ab, &cache_ab, params, cfg, &mut grads);
            let mut d_out_ba: Array2<T> = Array2::zeros(cache_ba.out.raw_dim());
            d_out_ba.row_mut(0).assign(&dw);
            encoder_backward(d_out_ba, &cache_ba, params, cfg, &mut grads);
            Ok((loss, grads))
        })
        .collect::<Result<_, _>>()?;

    let bad: Vec<u64> = batch
        .iter()
        .zip(&per_sample)
        .filter(|(_, (loss, _))| !loss.is_finite())
        .map(|(item, _)| item.id)
        .collect();
    if !bad.is_empty() {
        return Err(ModelError::NonFiniteLoss { sample_ids: bad });
    }

    let inv_b = T::one() / T::from_f64(batch.len() as f64);
    let mut total_loss = T::zero();
    let mut total = ParameterStore::zeros(cfg);
    for (loss, grads) in &per_sample {
        total_loss += *loss;
        total.add_assign(grads);
    }
    total.scale(inv_b);
    Ok((total_loss * inv_b, total))
}
