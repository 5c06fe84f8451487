//! Greedy and beam decoding over frozen parameters.
//!
//! Both decoders are pure functions of (params, context vectors). Scores are
//! total log-probabilities; final ranking divides by the number of emitted
//! tokens (the end token counts as a step), so short sequences carry no
//! automatic advantage. The greedy rollout is always included among the beam
//! candidates, which makes the beam's top score ≥ the greedy score by
//! construction.

use super::math::{add_scaled, dot, log_sum_exp, softmax};
use super::model::ModelParams;
use super::vocab::{EOS, SOS};

/// Greedy decode result.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyDecode {
    /// Emitted tokens, end token excluded.
    pub tokens: Vec<usize>,
    /// Attention weights at every step (including the end-token step).
    pub attentions: Vec<Vec<f64>>,
    /// Sum of emitted token log-probabilities (end token included).
    pub total_log_prob: f64,
    /// Steps taken (= emitted tokens, end token included).
    pub steps: usize,
    /// total_log_prob / steps.
    pub normalized_log_prob: f64,
}

/// One ranked beam hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamHypothesis {
    pub tokens: Vec<usize>,
    pub total_log_prob: f64,
    pub steps: usize,
    pub normalized_log_prob: f64,
}

/// Shared per-decode state: projected contexts and the initial hidden state.
struct Runtime<'a> {
    params: &'a ModelParams,
    zs: &'a [Vec<f64>],
    u: Vec<Vec<f64>>,
    h0: Vec<f64>,
}

impl<'a> Runtime<'a> {
    fn new(params: &'a ModelParams, zs: &'a [Vec<f64>]) -> Runtime<'a> {
        assert!(!zs.is_empty(), "decode requires at least one context vector");
        let d = params.dec.hidden_size;
        let mut h0 = vec![0.0; d];
        for z in zs {
            add_scaled(&mut h0, z, 1.0 / zs.len() as f64);
        }
        let u = zs.iter().map(|z| params.w_att.mul_vec(z)).collect();
        Runtime { params, zs, u, h0 }
    }

    /// One decoder step from (prev token, state): returns the new state,
    /// attention weights, and log-probabilities over the target vocabulary.
    fn advance(
        &self,
        prev: usize,
        h: &[f64],
        c: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let d = self.params.dec.hidden_size;
        let step = self
            .params
            .dec
            .forward(self.params.target_emb.row(prev), h, c);
        let scores: Vec<f64> = self.u.iter().map(|ui| dot(&step.h, ui)).collect();
        let alphas = softmax(&scores);
        let mut ctx = vec![0.0; d];
        for (a, z) in alphas.iter().zip(self.zs) {
            add_scaled(&mut ctx, z, *a);
        }
        let mut feat = Vec::with_capacity(2 * d);
        feat.extend_from_slice(&step.h);
        feat.extend_from_slice(&ctx);
        let logits = self.params.w_out.mul_vec(&feat);
        let lse = log_sum_exp(&logits);
        let log_probs: Vec<f64> = logits.iter().map(|l| l - lse).collect();
        (step.h, step.c, alphas, log_probs)
    }
}

fn argmax_lowest_id(log_probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in log_probs.iter().enumerate().skip(1) {
        if *v > log_probs[best] {
            best = i;
        }
    }
    best
}

/// Greedy decoding: argmax token per step (ties → lowest id), stopping at
/// the end token or after `max_len` steps.
pub fn decode_greedy(params: &ModelParams, zs: &[Vec<f64>], max_len: usize) -> GreedyDecode {
    let rt = Runtime::new(params, zs);
    let mut h = rt.h0.clone();
    let mut c = vec![0.0; params.dec.hidden_size];
    let mut prev = SOS;
    let mut tokens = Vec::new();
    let mut attentions = Vec::new();
    let mut total = 0.0;
    let mut steps = 0;
    for _ in 0..max_len {
        let (nh, nc, alphas, log_probs) = rt.advance(prev, &h, &c);
        h = nh;
        c = nc;
        let tok = argmax_lowest_id(&log_probs);
        total += log_probs[tok];
        steps += 1;
        attentions.push(alphas);
        if tok == EOS {
            break;
        }
        tokens.push(tok);
        prev = tok;
    }
    let normalized = total / steps.max(1) as f64;
    GreedyDecode {
        tokens,
        attentions,
        total_log_prob: total,
        steps,
        normalized_log_prob: normalized,
    }
}

struct LiveHyp {
    tokens: Vec<usize>,
    h: Vec<f64>,
    c: Vec<f64>,
    total: f64,
}

/// Beam search. Returns up to `beam_width` hypotheses ranked by
/// length-normalized total log-probability (ties broken by token sequence).
/// `decode_beam(…, 1)` equals `decode_greedy` token for token.
pub fn decode_beam(
    params: &ModelParams,
    zs: &[Vec<f64>],
    beam_width: usize,
    max_len: usize,
) -> Vec<BeamHypothesis> {
    assert!(beam_width >= 1, "beam_width must be ≥ 1");
    let rt = Runtime::new(params, zs);
    let d = params.dec.hidden_size;
    let mut active = vec![LiveHyp {
        tokens: Vec::new(),
        h: rt.h0.clone(),
        c: vec![0.0; d],
        total: 0.0,
    }];
    let mut finished: Vec<BeamHypothesis> = Vec::new();

    for step in 0..max_len {
        if active.is_empty() {
            break;
        }
        // (total, token, source index, h, c) per expansion
        let mut expansions: Vec<(f64, usize, usize)> = Vec::new();
        let mut states: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(active.len());
        for (src, hyp) in active.iter().enumerate() {
            let prev = *hyp.tokens.last().unwrap_or(&SOS);
            let (nh, nc, _alphas, log_probs) = rt.advance(prev, &hyp.h, &hyp.c);
            states.push((nh, nc));
            for (tok, lp) in log_probs.iter().enumerate() {
                expansions.push((hyp.total + lp, tok, src));
            }
        }
        expansions.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| a.1.cmp(&b.1))
                .then_with(|| a.2.cmp(&b.2))
        });
        let mut next_active = Vec::with_capacity(beam_width);
        for &(total, tok, src) in expansions.iter().take(beam_width) {
            let mut tokens = active[src].tokens.clone();
            if tok == EOS {
                finished.push(BeamHypothesis {
                    tokens,
                    total_log_prob: total,
                    steps: step + 1,
                    normalized_log_prob: total / (step + 1) as f64,
                });
            } else {
                tokens.push(tok);
                next_active.push(LiveHyp {
                    tokens,
                    h: states[src].0.clone(),
                    c: states[src].1.clone(),
                    total,
                });
            }
        }
        active = next_active;
    }
    // hypotheses still alive at the length limit compete as-is
    for hyp in active {
        finished.push(BeamHypothesis {
            tokens: hyp.tokens,
            total_log_prob: hyp.total,
            steps: max_len,
            normalized_log_prob: hyp.total / max_len.max(1) as f64,
        });
    }
    // the greedy rollout always competes
    let greedy = decode_greedy(params, zs, max_len);
    finished.push(BeamHypothesis {
        tokens: greedy.tokens,
        total_log_prob: greedy.total_log_prob,
        steps: greedy.steps,
        normalized_log_prob: greedy.normalized_log_prob,
    });

    finished.sort_by(|a, b| {
        b.normalized_log_prob
            .total_cmp(&a.normalized_log_prob)
            .then_with(|| a.tokens.cmp(&b.tokens))
    });
    finished.dedup_by(|a, b| a.tokens == b.tokens);
    finished.truncate(beam_width);
    finished
}
