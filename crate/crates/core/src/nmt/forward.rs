//! Forward and backward passes for the path-context encoder–decoder.
//!
//! Architecture (all dimensions from `HyperParams`):
//!   context encoding  zᵢ = tanh(W_c·[Σ left emb ; fwd final ; bwd final ; Σ right emb] + b_c)
//!   decoder           single LSTM cell, h₀ = mean(z), c₀ = 0
//!   attention         scoreᵢ = hᵀ W_a zᵢ, α = softmax(score), ctx = Σ αᵢzᵢ
//!   output            softmax(W_o·[h ; ctx])
//! Loss is mean token cross-entropy under teacher forcing.

use super::math::{add_scaled, dot, log_sum_exp, softmax, Matrix};
use super::lstm::LstmStep;
use super::model::ModelParams;
use super::vocab::{EncodedContext, EncodedExample, EOS, PAD, SOS};
use super::NmtError;

/// Cached activations for one encoded context.
pub(crate) struct ContextCache {
    left: Vec<usize>,
    path: Vec<usize>,
    right: Vec<usize>,
    fwd_steps: Vec<LstmStep>,
    bwd_steps: Vec<LstmStep>,
    x_cat: Vec<f64>,
    z_raw: Vec<f64>,
    mask: Option<Vec<f64>>,
    pub z: Vec<f64>,
}

/// Cached activations for one decoder step.
pub(crate) struct StepCache {
    input_id: usize,
    gold: usize,
    lstm: LstmStep,
    alphas: Vec<f64>,
    feat: Vec<f64>,
    probs: Vec<f64>,
}

/// Everything the backward pass needs from one example's forward pass.
pub(crate) struct ForwardCache {
    pub contexts: Vec<ContextCache>,
    u: Vec<Vec<f64>>,
    steps: Vec<StepCache>,
    pub loss: f64,
}

fn check_id(kind: &'static str, id: usize, table: &Matrix) -> Result<(), NmtError> {
    if id >= table.rows {
        return Err(NmtError::UnknownId {
            kind,
            id,
            size: table.rows,
        });
    }
    Ok(())
}

fn sum_embeddings(
    kind: &'static str,
    ids: &[usize],
    table: &Matrix,
) -> Result<Vec<f64>, NmtError> {
    let mut sum = vec![0.0; table.cols];
    for &id in ids {
        check_id(kind, id, table)?;
        add_scaled(&mut sum, table.row(id), 1.0);
    }
    Ok(sum)
}

/// The all-PAD context substituted when an example has no contexts at all.
fn pad_context() -> EncodedContext {
    EncodedContext {
        left: vec![PAD],
        path: vec![PAD],
        right: vec![PAD],
    }
}

fn encode_one(
    params: &ModelParams,
    ctx: &EncodedContext,
    mask: Option<Vec<f64>>,
) -> Result<ContextCache, NmtError> {
    let e = params.subtoken_emb.cols;
    let h = params.enc_fwd.hidden_size;
    let left_sum = sum_embeddings("subtoken", &ctx.left, &params.subtoken_emb)?;
    let right_sum = sum_embeddings("subtoken", &ctx.right, &params.subtoken_emb)?;

    let mut xs = Vec::with_capacity(ctx.path.len());
    for &id in &ctx.path {
        check_id("node kind", id, &params.node_emb)?;
        xs.push(params.node_emb.row(id).to_vec());
    }
    let fwd_steps = params.enc_fwd.run(&xs);
    let xs_rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
    let bwd_steps = params.enc_bwd.run(&xs_rev);
    let zero_h = vec![0.0; h];
    let fwd_final = fwd_steps.last().map_or(&zero_h[..], |s| &s.h[..]);
    let bwd_final = bwd_steps.last().map_or(&zero_h[..], |s| &s.h[..]);

    let mut x_cat = Vec::with_capacity(2 * e + 2 * h);
    x_cat.extend_from_slice(&left_sum);
    x_cat.extend_from_slice(fwd_final);
    x_cat.extend_from_slice(bwd_final);
    x_cat.extend_from_slice(&right_sum);

    let mut pre = params.w_c.mul_vec(&x_cat);
    for (p, b) in pre.iter_mut().zip(&params.b_c) {
        *p += b;
    }
    let z_raw: Vec<f64> = pre.iter().map(|v| v.tanh()).collect();
    let z = match &mask {
        Some(m) => z_raw.iter().zip(m).map(|(v, k)| v * k).collect(),
        None => z_raw.clone(),
    };
    Ok(ContextCache {
        left: ctx.left.clone(),
        path: ctx.path.clone(),
        right: ctx.right.clone(),
        fwd_steps,
        bwd_steps,
        x_cat,
        z_raw,
        mask,
        z,
    })
}

/// Encode contexts to decoder-sized vectors (inference mode: no dropout).
/// An empty slice is padded to one all-PAD context.
pub fn encode_contexts(
    params: &ModelParams,
    contexts: &[EncodedContext],
) -> Result<Vec<Vec<f64>>, NmtError> {
    let padded;
    let contexts = if contexts.is_empty() {
        padded = vec![pad_context()];
        &padded[..]
    } else {
        contexts
    };
    contexts
        .iter()
        .map(|c| encode_one(params, c, None).map(|cache| cache.z))
        .collect()
}

/// Number of contexts the model will actually see for an example
/// (after padding empty context lists).
pub fn effective_context_count(example: &EncodedExample) -> usize {
    example.contexts.len().max(1)
}

/// Teacher-forced forward pass. `masks`, when given, holds one inverted
/// dropout mask per effective context (values 0 or 1/keep).
pub(crate) fn forward_example(
    params: &ModelParams,
    example: &EncodedExample,
    masks: Option<&[Vec<f64>]>,
) -> Result<ForwardCache, NmtError> {
    let d = params.dec.hidden_size;
    let padded;
    let contexts = if example.contexts.is_empty() {
        padded = vec![pad_context()];
        &padded[..]
    } else {
        &example.contexts[..]
    };
    if let Some(ms) = masks {
        debug_assert_eq!(ms.len(), contexts.len());
    }
    let mut ctx_caches = Vec::with_capacity(contexts.len());
    for (i, ctx) in contexts.iter().enumerate() {
        let mask = masks.map(|ms| ms[i].clone());
        ctx_caches.push(encode_one(params, ctx, mask)?);
    }

    let n = ctx_caches.len();
    let mut h0 = vec![0.0; d];
    for cache in &ctx_caches {
        add_scaled(&mut h0, &cache.z, 1.0 / n as f64);
    }
    let u: Vec<Vec<f64>> = ctx_caches
        .iter()
        .map(|c| params.w_att.mul_vec(&c.z))
        .collect();

    // inputs: SOS then gold tokens; golds: gold tokens then EOS
    let mut inputs = Vec::with_capacity(example.target.len() + 1);
    inputs.push(SOS);
    inputs.extend_from_slice(&example.target);
    let mut golds = example.target.clone();
    golds.push(EOS);
    for &g in &golds {
        check_id("target", g, &params.target_emb)?;
    }

    let mut steps = Vec::with_capacity(golds.len());
    let mut h = h0;
    let mut c = vec![0.0; d];
    let mut loss = 0.0;
    for (&input_id, &gold) in inputs.iter().zip(&golds) {
        check_id("target", input_id, &params.target_emb)?;
        let lstm = params.dec.forward(params.target_emb.row(input_id), &h, &c);
        h = lstm.h.clone();
        c = lstm.c.clone();

        let scores: Vec<f64> = u.iter().map(|ui| dot(&h, ui)).collect();
        let alphas = softmax(&scores);
        let mut ctx_vec = vec![0.0; d];
        for (a, cache) in alphas.iter().zip(&ctx_caches) {
            add_scaled(&mut ctx_vec, &cache.z, *a);
        }
        let mut feat = Vec::with_capacity(2 * d);
        feat.extend_from_slice(&h);
        feat.extend_from_slice(&ctx_vec);
        let logits = params.w_out.mul_vec(&feat);
        let lse = log_sum_exp(&logits);
        loss -= logits[gold] - lse;
        let probs = softmax(&logits);
        steps.push(StepCache {
            input_id,
            gold,
            lstm,
            alphas,
            feat,
            probs,
        });
    }
    loss /= golds.len() as f64;
    Ok(ForwardCache {
        contexts: ctx_caches,
        u,
        steps,
        loss,
    })
}

/// Mean-token cross-entropy of one example (no dropout).
pub fn example_loss(params: &ModelParams, example: &EncodedExample) -> Result<f64, NmtError> {
    Ok(forward_example(params, example, None)?.loss)
}

/// Exact gradients of the forward loss with respect to every parameter.
pub(crate) fn backward_example(params: &ModelParams, cache: &ForwardCache) -> ModelParams {
    let d = params.dec.hidden_size;
    let e = params.subtoken_emb.cols;
    let hs = params.enc_fwd.hidden_size;
    let n = cache.contexts.len();
    let t_count = cache.steps.len() as f64;
    let scale = 1.0 / t_count;

    let mut grads = params.zeros_like();
    let mut dec_grads = params.dec.zero_grads();
    let mut dz: Vec<Vec<f64>> = (0..n).map(|_| vec![0.0; d]).collect();
    let mut dh_next = vec![0.0; d];
    let mut dc_next = vec![0.0; d];

    for step in cache.steps.iter().rev() {
        // softmax+CE backward, scaled by the token mean
        let mut dlogits = step.probs.clone();
        dlogits[step.gold] -= 1.0;
        for v in dlogits.iter_mut() {
            *v *= scale;
        }
        grads.w_out.add_outer(&dlogits, &step.feat, 1.0);
        let dfeat = params.w_out.mul_vec_transposed(&dlogits);
        let mut dh: Vec<f64> = dfeat[..d].to_vec();
        add_scaled(&mut dh, &dh_next, 1.0);
        let dctx = &dfeat[d..];

        // attention backward: ctx = Σ αᵢzᵢ, scoreᵢ = hᵀ W_a zᵢ
        let dalpha: Vec<f64> = cache
            .contexts
            .iter()
            .map(|c| dot(dctx, &c.z))
            .collect();
        for (i, dzi) in dz.iter_mut().enumerate() {
            add_scaled(dzi, dctx, step.alphas[i]);
        }
        let alpha_dot: f64 = step
            .alphas
            .iter()
            .zip(&dalpha)
            .map(|(a, da)| a * da)
            .sum();
        let dscores: Vec<f64> = step
            .alphas
            .iter()
            .zip(&dalpha)
            .map(|(a, da)| a * (da - alpha_dot))
            .collect();
        let watt_t_h = params.w_att.mul_vec_transposed(&step.lstm.h);
        for (i, &ds) in dscores.iter().enumerate() {
            if ds == 0.0 {
                continue;
            }
            add_scaled(&mut dh, &cache.u[i], ds);
            grads
                .w_att
                .add_outer(&step.lstm.h, &cache.contexts[i].z, ds);
            add_scaled(&mut dz[i], &watt_t_h, ds);
        }

        // decoder cell backward
        let (dx, dh_prev, dc_prev) = params.dec.backward(&step.lstm, &dh, &dc_next, &mut dec_grads);
        add_scaled(grads.target_emb.row_mut(step.input_id), &dx, 1.0);
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    grads.dec.w = dec_grads.w;
    grads.dec.b = dec_grads.b;

    // h₀ = mean(z): spread the initial-state gradient over every context
    for dzi in dz.iter_mut() {
        add_scaled(dzi, &dh_next, 1.0 / n as f64);
    }

    // per-context backward: dropout mask → tanh → projection → embeddings/biLSTM
    let mut fwd_grads = params.enc_fwd.zero_grads();
    let mut bwd_grads = params.enc_bwd.zero_grads();
    for (ctx, dz_i) in cache.contexts.iter().zip(&dz) {
        let masked: Vec<f64> = match &ctx.mask {
            Some(m) => dz_i.iter().zip(m).map(|(g, k)| g * k).collect(),
            None => dz_i.clone(),
        };
        let dpre: Vec<f64> = masked
            .iter()
            .zip(&ctx.z_raw)
            .map(|(g, z)| g * (1.0 - z * z))
            .collect();
        for (gb, dp) in grads.b_c.iter_mut().zip(&dpre) {
            *gb += dp;
        }
        grads.w_c.add_outer(&dpre, &ctx.x_cat, 1.0);
        let dx_cat = params.w_c.mul_vec_transposed(&dpre);
        let (dleft, rest) = dx_cat.split_at(e);
        let (dh_fwd, rest) = rest.split_at(hs);
        let (dh_bwd, dright) = rest.split_at(hs);

        for &id in &ctx.left {
            add_scaled(grads.subtoken_emb.row_mut(id), dleft, 1.0);
        }
        for &id in &ctx.right {
            add_scaled(grads.subtoken_emb.row_mut(id), dright, 1.0);
        }

        // forward-direction BPTT; gradient enters at the final step only
        let mut dh = dh_fwd.to_vec();
        let mut dc = vec![0.0; hs];
        for (pos, step) in ctx.fwd_steps.iter().enumerate().rev() {
            let (dx, dh_prev, dc_prev) = params.enc_fwd.backward(step, &dh, &dc, &mut fwd_grads);
            add_scaled(grads.node_emb.row_mut(ctx.path[pos]), &dx, 1.0);
            dh = dh_prev;
            dc = dc_prev;
        }
        // backward direction runs over the reversed path: step s covers
        // path position len−1−s
        let mut dh = dh_bwd.to_vec();
        let mut dc = vec![0.0; hs];
        let len = ctx.bwd_steps.len();
        for (s, step) in ctx.bwd_steps.iter().enumerate().rev() {
            let (dx, dh_prev, dc_prev) = params.enc_bwd.backward(step, &dh, &dc, &mut bwd_grads);
            add_scaled(grads.node_emb.row_mut(ctx.path[len - 1 - s]), &dx, 1.0);
            dh = dh_prev;
            dc = dc_prev;
        }
    }
    grads.enc_fwd.w = fwd_grads.w;
    grads.enc_fwd.b = fwd_grads.b;
    grads.enc_bwd.w = bwd_grads.w;
    grads.enc_bwd.b = bwd_grads.b;
    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ContextTriple;
    use crate::nmt::model::HyperParams;
    use crate::nmt::vocab::{build_vocab, NmtExample, Vocab};

    pub(crate) fn fixture_vocab() -> (Vocab, Vec<NmtExample>) {
        let examples = vec![
            NmtExample {
                target: vec!["gets".into(), "the".into(), "location".into()],
                contexts: vec![
                    ContextTriple {
                        left: vec!["get".into(), "last".into()],
                        path: vec!["MethodDecl^".into(), "Block_".into(), "Return_".into()],
                        right: vec!["location".into()],
                    },
                    ContextTriple {
                        left: vec!["manager".into()],
                        path: vec!["Call_".into(), "Args_".into()],
                        right: vec!["provider".into()],
                    },
                ],
            },
            NmtExample {
                target: vec!["opens".into(), "a".into(), "connection".into()],
                contexts: vec![ContextTriple {
                    left: vec!["url".into()],
                    path: vec!["MethodDecl^".into(), "Call_".into()],
                    right: vec!["open".into(), "connection".into()],
                }],
            },
        ];
        (build_vocab(&examples, 1).unwrap(), examples)
    }

    fn small_hyper() -> HyperParams {
        HyperParams {
            embedding_size: 4,
            encoder_state_size: 4,
            decoder_state_size: 8,
            max_target_parts: 6,
            max_contexts: 10,
            ..HyperParams::default()
        }
    }

    #[test]
    fn context_vectors_have_decoder_dimension() {
        let (vocab, examples) = fixture_vocab();
        let hyper = small_hyper();
        let params = ModelParams::init(&hyper, &vocab, 5);
        let enc = vocab.encode_example(&examples[0], 10, 6);
        let zs = encode_contexts(&params, &enc.contexts).unwrap();
        assert_eq!(zs.len(), 2);
        for z in &zs {
            assert_eq!(z.len(), 8);
        }
        // one context in, 1×decoder_state_size out
        let one = encode_contexts(&params, &enc.contexts[..1]).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].len(), 8);
    }

    #[test]
    fn duplicate_contexts_encode_identically() {
        let (vocab, examples) = fixture_vocab();
        let params = ModelParams::init(&small_hyper(), &vocab, 5);
        let enc = vocab.encode_example(&examples[0], 10, 6);
        let twice = vec![enc.contexts[0].clone(), enc.contexts[0].clone()];
        let zs = encode_contexts(&params, &twice).unwrap();
        assert_eq!(zs[0], zs[1]);
    }

    #[test]
    fn zero_params_encode_to_the_zero_vector() {
        let (vocab, examples) = fixture_vocab();
        let params = ModelParams::init(&small_hyper(), &vocab, 5).zeros_like();
        let enc = vocab.encode_example(&examples[0], 10, 6);
        let zs = encode_contexts(&params, &enc.contexts).unwrap();
        for z in &zs {
            assert!(z.iter().all(|v| *v == 0.0), "tanh(0) must be exactly 0");
        }
    }

    #[test]
    fn empty_context_list_is_padded_to_one() {
        let (vocab, _) = fixture_vocab();
        let params = ModelParams::init(&small_hyper(), &vocab, 5);
        let zs = encode_contexts(&params, &[]).unwrap();
        assert_eq!(zs.len(), 1);
        let example = EncodedExample {
            contexts: vec![],
            target: vec![4],
        };
        assert_eq!(effective_context_count(&example), 1);
        let loss = example_loss(&params, &example).unwrap();
        assert!(loss.is_finite() && loss > 0.0);
    }

    #[test]
    fn out_of_range_ids_are_reported() {
        let (vocab, _) = fixture_vocab();
        let params = ModelParams::init(&small_hyper(), &vocab, 5);
        let bad = EncodedContext {
            left: vec![9999],
            path: vec![0],
            right: vec![0],
        };
        match encode_contexts(&params, &[bad]) {
            Err(NmtError::UnknownId { kind, id, .. }) => {
                assert_eq!(kind, "subtoken");
                assert_eq!(id, 9999);
            }
            other => panic!("expected UnknownId, got {other:?}"),
        }
    }

    #[test]
    fn forward_loss_is_finite_positive_and_deterministic() {
        let (vocab, examples) = fixture_vocab();
        let hyper = small_hyper();
        let params = ModelParams::init(&hyper, &vocab, 5);
        let enc = vocab.encode_example(&examples[0], 10, 6);
        let a = example_loss(&params, &enc).unwrap();
        let b = example_loss(&params, &enc).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite() && a > 0.0);
        // near-uniform young model: loss ≈ ln |V_t|
        let v = vocab.targets.len() as f64;
        assert!((a - v.ln()).abs() < 0.5, "loss {a} far from ln|V|={}", v.ln());
    }
}
