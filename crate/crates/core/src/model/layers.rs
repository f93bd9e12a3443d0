//! Tape-level building blocks: character CNN, token embedding, Bi-LSTM and
//! multi-head self-attention.

use super::config::ModelConfig;
use super::params::{AttnIds, ConvIds, LstmIds, ParamIds};
use super::ModelError;
use crate::autodiff::{Real, Tape, Var};
use crate::text::EncodedText;

/// Character-level word features for `L` words given as `L × K` char ids:
/// per filter width, relu convolution over char-embedding windows and max
/// pooling; the pooled maps of all widths are concatenated. `L × Σmaps`.
pub fn char_cnn_embed<F: Real>(
    tape: &mut Tape<'_, F>,
    char_emb: crate::autodiff::ParamId,
    conv: &[ConvIds],
    char_ids: &[u32],
    max_chars: usize,
) -> Var {
    let ids: Vec<usize> = char_ids.iter().map(|&c| c as usize).collect();
    let chars = tape.gather(char_emb, &ids);
    let pooled: Vec<Var> = conv
        .iter()
        .map(|c| {
            let windows = tape.unfold(chars, max_chars, c.width);
            let w = tape.param(c.weight);
            let b = tape.param(c.bias);
            let lin = tape.matmul(windows, w);
            let pre = tape.add_row(lin, b);
            let act = tape.relu(pre);
            tape.block_max(act, max_chars - c.width + 1)
        })
        .collect();
    if pooled.len() == 1 {
        pooled[0]
    } else {
        tape.concat_cols(&pooled)
    }
}

/// `[word embedding ; char-CNN feature]` per position, `L × 2D`; padded
/// positions are zero rows. With the char-CNN ablated the second half is
/// zero.
pub fn embed_tokens<F: Real>(
    tape: &mut Tape<'_, F>,
    ids: &ParamIds,
    cfg: &ModelConfig,
    text: &EncodedText,
    max_chars: usize,
) -> Var {
    let len = text.len();
    let d = cfg.dim;
    let real: Vec<usize> = (0..len).filter(|&i| text.mask[i]).collect();
    if real.is_empty() {
        return tape.zeros(len, 2 * d);
    }
    let word_ids: Vec<usize> = real.iter().map(|&i| text.ids[i] as usize).collect();
    let words = tape.gather(ids.word_emb, &word_ids);
    let words = tape.scatter_rows(words, &real, len);
    let chars = if cfg.ablation.no_charcnn {
        tape.zeros(len, d)
    } else {
        let mut char_ids = Vec::with_capacity(real.len() * max_chars);
        for &i in &real {
            char_ids.extend_from_slice(&text.chars[i * max_chars..(i + 1) * max_chars]);
        }
        let feats = char_cnn_embed(tape, ids.char_emb, &ids.conv, &char_ids, max_chars);
        tape.scatter_rows(feats, &real, len)
    };
    tape.concat_cols(&[words, chars])
}

fn lstm_direction<F: Real>(
    tape: &mut Tape<'_, F>,
    x: Var,
    mask: &[bool],
    p: &LstmIds,
    dim: usize,
    reverse: bool,
) -> Var {
    let len = mask.len();
    let w_in = tape.param(p.w_input);
    let w_h = tape.param(p.w_hidden);
    let bias = tape.param(p.bias);
    let xw = tape.matmul(x, w_in);
    let proj = tape.add_row(xw, bias);
    let zero = tape.zeros(1, dim);
    let mut state: Option<(Var, Var)> = None;
    let mut outs = vec![zero; len];
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..len).rev())
    } else {
        Box::new(0..len)
    };
    for t in order {
        if !mask[t] {
            continue;
        }
        let xt = tape.row(proj, t);
        let z = match state {
            Some((h, _)) => {
                let hw = tape.matmul(h, w_h);
                tape.add(xt, hw)
            }
            None => xt,
        };
        let zi = tape.slice_cols(z, 0, dim);
        let zf = tape.slice_cols(z, dim, 2 * dim);
        let zg = tape.slice_cols(z, 2 * dim, 3 * dim);
        let zo = tape.slice_cols(z, 3 * dim, 4 * dim);
        let i = tape.sigmoid(zi);
        let g = tape.tanh(zg);
        let o = tape.sigmoid(zo);
        let ig = tape.mul(i, g);
        let c = match state {
            Some((_, c_prev)) => {
                let f = tape.sigmoid(zf);
                let fc = tape.mul(f, c_prev);
                tape.add(fc, ig)
            }
            None => ig,
        };
        let tc = tape.tanh(c);
        let h = tape.mul(o, tc);
        outs[t] = h;
        state = Some((h, c));
    }
    tape.concat_rows(&outs)
}

/// Bidirectional LSTM over `L × 2D` inputs, `L × 2D` outputs
/// `[forward ; backward]`. Masked steps emit zero rows and carry the
/// previous state through unchanged. Initial states are zero.
pub fn bilstm_encode<F: Real>(
    tape: &mut Tape<'_, F>,
    x: Var,
    mask: &[bool],
    ids: &ParamIds,
    dim: usize,
) -> Var {
    let fwd = lstm_direction(tape, x, mask, &ids.lstm_fwd, dim, false);
    let bwd = lstm_direction(tape, x, mask, &ids.lstm_bwd, dim, true);
    tape.concat_cols(&[fwd, bwd])
}

/// Output of one attention layer together with each head's attention matrix.
pub struct AttentionOutput {
    pub output: Var,
    pub heads: Vec<Var>,
}

/// Multi-head scaled dot-product self-attention over the rows of `h`. Keys
/// whose mask is false receive zero weight.
pub fn multi_head_attention<F: Real>(
    tape: &mut Tape<'_, F>,
    h: Var,
    mask: &[bool],
    p: &AttnIds,
    cfg: &ModelConfig,
) -> Result<AttentionOutput, ModelError> {
    if !mask.iter().any(|&m| m) {
        return Err(ModelError::AllMasked);
    }
    let dk = cfg.head_dim();
    let wq = tape.param(p.w_query);
    let wk = tape.param(p.w_key);
    let wv = tape.param(p.w_value);
    let wo = tape.param(p.w_output);
    let q_all = tape.matmul(h, wq);
    let k_all = tape.matmul(h, wk);
    let v_all = tape.matmul(h, wv);
    let scale = F::of(1.0 / (dk as f64).sqrt());
    let mut heads = Vec::with_capacity(cfg.heads);
    let mut weights = Vec::with_capacity(cfg.heads);
    for i in 0..cfg.heads {
        let (a, b) = (i * dk, (i + 1) * dk);
        let q = tape.slice_cols(q_all, a, b);
        let k = tape.slice_cols(k_all, a, b);
        let v = tape.slice_cols(v_all, a, b);
        let scores = tape.matmul_bt(q, k);
        let scores = tape.scale(scores, scale);
        let attn = tape.masked_softmax(scores, 1, Some(mask))?;
        weights.push(attn);
        let attn = tape.dropout(attn, cfg.dropout);
        heads.push(tape.matmul(attn, v));
    }
    let cat = if heads.len() == 1 {
        heads[0]
    } else {
        tape.concat_cols(&heads)
    };
    let output = tape.matmul(cat, wo);
    Ok(AttentionOutput {
        output,
        heads: weights,
    })
}
