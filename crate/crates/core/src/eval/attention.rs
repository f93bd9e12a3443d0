use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::autodiff::{Real, Tensor};
use crate::model::Hsan;
use crate::text::{tokenize, EncodedText, EncodedUser, UserRecord};

/// Per-key importance from one attention layer: the head-averaged attention
/// matrix is reduced to the mean attention each key receives over the
/// unmasked query rows, then renormalized over the unmasked keys. Masked
/// positions get zero.
pub fn key_importance<F: Real>(heads: &[Tensor<F>], mask: &[bool]) -> Vec<f64> {
    let n = mask.len();
    let mut received = vec![0.0; n];
    let queries: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    for h in heads {
        for &q in &queries {
            for (k, r) in received.iter_mut().enumerate() {
                *r += h.data()[q * n + k].as_f64();
            }
        }
    }
    for (r, &m) in received.iter_mut().zip(mask) {
        if !m {
            *r = 0.0;
        }
    }
    let total: f64 = received.iter().sum();
    if total > 0.0 {
        received.iter_mut().for_each(|r| *r /= total);
    }
    received
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextImportance {
    pub tokens: Vec<String>,
    /// Aligned with `tokens`; sums to 1.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetImportance {
    /// Position of the tweet in the user's (truncated) tweet list.
    pub slot: usize,
    /// Tweet-level weight, when tweet attention is enabled.
    pub weight: Option<f64>,
    /// Word-level weights, when word attention is enabled.
    pub words: Option<TextImportance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionReport {
    pub user_id: String,
    pub probs: Vec<f64>,
    pub description: Option<TextImportance>,
    pub tweets: Vec<TweetImportance>,
    /// `[description, tweets]`, when field attention is enabled.
    pub fields: Option<[f64; 2]>,
}

fn text_importance<F: Real>(
    heads: &Option<Vec<Tensor<F>>>,
    text: &EncodedText,
    raw: Option<&str>,
) -> Option<TextImportance> {
    let heads = heads.as_ref()?;
    let w = key_importance(heads, &text.mask);
    let toks = raw.map(tokenize).unwrap_or_default();
    let (tokens, weights) = (0..text.len())
        .filter(|&i| text.mask[i])
        .map(|i| {
            let t = toks.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
            (t, w[i])
        })
        .unzip();
    Some(TextImportance { tokens, weights })
}

/// Evaluation-mode importance weights at word level (description and each
/// tweet) and at tweet and field level. `record` supplies the token strings;
/// without it tokens are shown by position.
pub fn attention_importance<F: Real>(
    model: &Hsan<F>,
    user: &EncodedUser,
    record: Option<&UserRecord>,
) -> Result<AttentionReport, EvalError> {
    let (out, trace) = model.trace_attention(user)?;
    let description = text_importance(
        &trace.description,
        &user.description,
        record.map(|r| r.description.as_str()),
    );
    let tweet_weights = trace
        .tweet_level
        .as_ref()
        .map(|h| key_importance(h, &user.tweet_mask));
    let tweets = (0..user.tweets.len())
        .filter(|&t| user.tweet_mask[t])
        .map(|t| TweetImportance {
            slot: t,
            weight: tweet_weights.as_ref().map(|w| w[t]),
            words: trace.tweets.get(t).and_then(|h| {
                text_importance(
                    h,
                    &user.tweets[t],
                    record.and_then(|r| r.tweets.get(t)).map(|s| s.as_str()),
                )
            }),
        })
        .collect();
    let fields = trace.field_level.as_ref().map(|h| {
        let w = key_importance(h, &[true, true]);
        [w[0], w[1]]
    });
    Ok(AttentionReport {
        user_id: user.id.clone(),
        probs: out.probs.iter().map(|p| p.as_f64()).collect(),
        description,
        tweets,
        fields,
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn shade(weight: f64, max: f64) -> String {
    let a = if max > 0.0 { weight / max } else { 0.0 };
    format!("background-color: rgba(220, 40, 40, {a:.3})")
}

fn words_html(t: &TextImportance) -> String {
    let max = t.weights.iter().cloned().fold(0.0, f64::max);
    t.tokens
        .iter()
        .zip(&t.weights)
        .map(|(tok, &w)| {
            format!(
                "<span style=\"{}\" title=\"{w:.4}\">{}</span>",
                shade(w, max),
                escape(tok)
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Static HTML page shading each word by its importance within its text and
/// each tweet header by the tweet's importance.
pub fn render_heatmap(reports: &[AttentionReport], labels: &[String]) -> String {
    let mut s = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>attention</title>\n\
         <style>body{font-family:sans-serif;max-width:60em;margin:auto}\
         .user{border-bottom:1px solid #ccc;padding:1em 0}\
         .tweet{margin:.3em 0 .3em 1em}span{padding:0 .1em}</style></head><body>\n",
    );
    for r in reports {
        let best = r
            .probs
            .iter()
            .enumerate()
            .fold(0, |b, (i, &p)| if p > r.probs[b] { i } else { b });
        let label = labels.get(best).cloned().unwrap_or_else(|| best.to_string());
        s.push_str(&format!(
            "<div class=\"user\"><h3>{} &rarr; {} ({:.3})</h3>\n",
            escape(&r.user_id),
            escape(&label),
            r.probs.get(best).copied().unwrap_or(0.0)
        ));
        if let Some(f) = r.fields {
            s.push_str(&format!(
                "<p>field weights: description {:.3}, tweets {:.3}</p>\n",
                f[0], f[1]
            ));
        }
        if let Some(d) = &r.description {
            s.push_str(&format!("<p><b>description</b>: {}</p>\n", words_html(d)));
        }
        let max = r
            .tweets
            .iter()
            .filter_map(|t| t.weight)
            .fold(0.0, f64::max);
        for t in &r.tweets {
            let style = t.weight.map(|w| shade(w, max)).unwrap_or_default();
            let header = match t.weight {
                Some(w) => format!("tweet {} ({w:.3})", t.slot + 1),
                None => format!("tweet {}", t.slot + 1),
            };
            let body = t.words.as_ref().map(words_html).unwrap_or_default();
            s.push_str(&format!(
                "<div class=\"tweet\"><b style=\"{style}\">{header}</b>: {body}</div>\n"
            ));
        }
        s.push_str("</div>\n");
    }
    s.push_str("</body></html>\n");
    s
}
