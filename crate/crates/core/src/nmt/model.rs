//! Model parameters, initialization, and the JSON checkpoint format.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::LstmCell;
use super::math::Matrix;
use super::vocab::Vocab;
use super::NmtError;

pub const CHECKPOINT_VERSION: &str = "nmt-checkpoint-v1";
const INIT_SCALE: f64 = 0.1;

/// Model configuration. Desk-scale defaults; larger research-scale values
/// stay legal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub embedding_size: usize,
    pub encoder_state_size: usize,
    pub decoder_state_size: usize,
    pub max_target_parts: usize,
    pub max_contexts: usize,
    pub beam_width: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub dropout_keep: f64,
}

impl Default for HyperParams {
    fn default() -> HyperParams {
        HyperParams {
            embedding_size: 64,
            encoder_state_size: 64,
            decoder_state_size: 128,
            max_target_parts: 37,
            max_contexts: 200,
            beam_width: 3,
            learning_rate: 1e-3,
            epochs: 20,
            batch_size: 32,
            seed: 1,
            dropout_keep: 0.75,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), NmtError> {
        let sizes = [
            ("embedding_size", self.embedding_size),
            ("encoder_state_size", self.encoder_state_size),
            ("decoder_state_size", self.decoder_state_size),
            ("max_contexts", self.max_contexts),
            ("beam_width", self.beam_width),
            ("batch_size", self.batch_size),
        ];
        for (name, value) in sizes {
            if value < 1 {
                return Err(NmtError::BadHyper(format!("{name} must be ≥ 1")));
            }
        }
        if self.max_target_parts < 2 {
            return Err(NmtError::BadHyper(
                "max_target_parts must be ≥ 2 (room for the end token)".into(),
            ));
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return Err(NmtError::BadHyper("dropout_keep must lie in (0, 1]".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(NmtError::BadHyper("learning_rate must be finite and ≥ 0".into()));
        }
        Ok(())
    }
}

/// All trainable parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// |subtoken vocab| × embedding_size
    pub subtoken_emb: Matrix,
    /// |node-kind vocab| × embedding_size
    pub node_emb: Matrix,
    /// |target vocab| × embedding_size (decoder input embeddings)
    pub target_emb: Matrix,
    pub enc_fwd: LstmCell,
    pub enc_bwd: LstmCell,
    /// decoder_state_size × (2·embedding + 2·encoder_state)
    pub w_c: Matrix,
    pub b_c: Vec<f64>,
    /// Decoder cell: input embedding_size, hidden decoder_state_size.
    pub dec: LstmCell,
    /// decoder_state_size × decoder_state_size bilinear attention.
    pub w_att: Matrix,
    /// |target vocab| × 2·decoder_state_size output projection (no bias).
    pub w_out: Matrix,
}

impl ModelParams {
    /// Uniform [−0.1, 0.1] initialization from `seed`.
    pub fn init(hyper: &HyperParams, vocab: &Vocab, seed: u64) -> ModelParams {
        let e = hyper.embedding_size;
        let h = hyper.encoder_state_size;
        let d = hyper.decoder_state_size;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ModelParams {
            subtoken_emb: Matrix::uniform(vocab.subtokens.len(), e, INIT_SCALE, &mut rng),
            node_emb: Matrix::uniform(vocab.node_kinds.len(), e, INIT_SCALE, &mut rng),
            target_emb: Matrix::uniform(vocab.targets.len(), e, INIT_SCALE, &mut rng),
            enc_fwd: LstmCell::uniform(e, h, INIT_SCALE, &mut rng),
            enc_bwd: LstmCell::uniform(e, h, INIT_SCALE, &mut rng),
            w_c: Matrix::uniform(d, 2 * e + 2 * h, INIT_SCALE, &mut rng),
            b_c: (0..d).map(|_| rng_range(&mut rng)).collect(),
            dec: LstmCell::uniform(e, d, INIT_SCALE, &mut rng),
            w_att: Matrix::uniform(d, d, INIT_SCALE, &mut rng),
            w_out: Matrix::uniform(vocab.targets.len(), 2 * d, INIT_SCALE, &mut rng),
        }
    }

    /// Same shapes, all zeros — used as a gradient/optimizer-state buffer.
    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            subtoken_emb: Matrix::zeros(self.subtoken_emb.rows, self.subtoken_emb.cols),
            node_emb: Matrix::zeros(self.node_emb.rows, self.node_emb.cols),
            target_emb: Matrix::zeros(self.target_emb.rows, self.target_emb.cols),
            enc_fwd: LstmCell::zeros(self.enc_fwd.input_size, self.enc_fwd.hidden_size),
            enc_bwd: LstmCell::zeros(self.enc_bwd.input_size, self.enc_bwd.hidden_size),
            w_c: Matrix::zeros(self.w_c.rows, self.w_c.cols),
            b_c: vec![0.0; self.b_c.len()],
            dec: LstmCell::zeros(self.dec.input_size, self.dec.hidden_size),
            w_att: Matrix::zeros(self.w_att.rows, self.w_att.cols),
            w_out: Matrix::zeros(self.w_out.rows, self.w_out.cols),
        }
    }

    /// Named views of every parameter group, in a fixed order.
    pub fn groups(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("subtoken_emb", &self.subtoken_emb.data[..]),
            ("node_emb", &self.node_emb.data[..]),
            ("target_emb", &self.target_emb.data[..]),
            ("enc_fwd_w", &self.enc_fwd.w.data[..]),
            ("enc_fwd_b", &self.enc_fwd.b[..]),
            ("enc_bwd_w", &self.enc_bwd.w.data[..]),
            ("enc_bwd_b", &self.enc_bwd.b[..]),
            ("w_c", &self.w_c.data[..]),
            ("b_c", &self.b_c[..]),
            ("dec_w", &self.dec.w.data[..]),
            ("dec_b", &self.dec.b[..]),
            ("w_att", &self.w_att.data[..]),
            ("w_out", &self.w_out.data[..]),
        ]
    }

    pub fn groups_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("subtoken_emb", &mut self.subtoken_emb.data[..]),
            ("node_emb", &mut self.node_emb.data[..]),
            ("target_emb", &mut self.target_emb.data[..]),
            ("enc_fwd_w", &mut self.enc_fwd.w.data[..]),
            ("enc_fwd_b", &mut self.enc_fwd.b[..]),
            ("enc_bwd_w", &mut self.enc_bwd.w.data[..]),
            ("enc_bwd_b", &mut self.enc_bwd.b[..]),
            ("w_c", &mut self.w_c.data[..]),
            ("b_c", &mut self.b_c[..]),
            ("dec_w", &mut self.dec.w.data[..]),
            ("dec_b", &mut self.dec.b[..]),
            ("w_att", &mut self.w_att.data[..]),
            ("w_out", &mut self.w_out.data[..]),
        ]
    }

    /// self += scale · other, group by group.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        for ((_, dst), (_, src)) in self.groups_mut().into_iter().zip(other.groups()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.groups().iter().map(|(_, g)| g.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.groups()
            .iter()
            .all(|(_, g)| g.iter().all(|v| v.is_finite()))
    }

    /// Validate shape consistency against hyperparameters and vocab sizes.
    pub fn check_shapes(&self, hyper: &HyperParams, vocab: &Vocab) -> Result<(), NmtError> {
        let e = hyper.embedding_size;
        let h = hyper.encoder_state_size;
        let d = hyper.decoder_state_size;
        let expect = |name: &str, ok: bool| -> Result<(), NmtError> {
            if ok {
                Ok(())
            } else {
                Err(NmtError::ShapeMismatch(name.to_string()))
            }
        };
        expect(
            "subtoken_emb",
            self.subtoken_emb.rows == vocab.subtokens.len()
                && self.subtoken_emb.cols == e
                && self.subtoken_emb.data.len() == self.subtoken_emb.rows * e,
        )?;
        expect(
            "node_emb",
            self.node_emb.rows == vocab.node_kinds.len()
                && self.node_emb.cols == e
                && self.node_emb.data.len() == self.node_emb.rows * e,
        )?;
        expect(
            "target_emb",
            self.target_emb.rows == vocab.targets.len()
                && self.target_emb.cols == e
                && self.target_emb.data.len() == self.target_emb.rows * e,
        )?;
        for (name, cell, input, hidden) in [
            ("enc_fwd", &self.enc_fwd, e, h),
            ("enc_bwd", &self.enc_bwd, e, h),
            ("dec", &self.dec, e, d),
        ] {
            expect(
                name,
                cell.input_size == input
                    && cell.hidden_size == hidden
                    && cell.w.rows == 4 * hidden
                    && cell.w.cols == input + hidden
                    && cell.w.data.len() == cell.w.rows * cell.w.cols
                    && cell.b.len() == 4 * hidden,
            )?;
        }
        expect(
            "w_c",
            self.w_c.rows == d
                && self.w_c.cols == 2 * e + 2 * h
                && self.w_c.data.len() == d * (2 * e + 2 * h),
        )?;
        expect("b_c", self.b_c.len() == d)?;
        expect(
            "w_att",
            self.w_att.rows == d && self.w_att.cols == d && self.w_att.data.len() == d * d,
        )?;
        expect(
            "w_out",
            self.w_out.rows == vocab.targets.len()
                && self.w_out.cols == 2 * d
                && self.w_out.data.len() == self.w_out.rows * 2 * d,
        )?;
        Ok(())
    }
}

fn rng_range(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    rng.gen_range(-INIT_SCALE..=INIT_SCALE)
}

/// Everything needed to resume or serve a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub hyper: HyperParams,
    pub vocab: Vocab,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(hyper: HyperParams, vocab: Vocab, params: ModelParams) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION.to_string(),
            hyper,
            vocab,
            params,
        }
    }

    pub fn write_to(&self, writer: impl Write) -> Result<(), NmtError> {
        serde_json::to_writer(writer, self).map_err(|e| NmtError::Checkpoint(e.to_string()))
    }

    pub fn read_from(reader: impl Read) -> Result<Checkpoint, NmtError> {
        let checkpoint: Checkpoint =
            serde_json::from_reader(reader).map_err(|e| NmtError::Checkpoint(e.to_string()))?;
        if checkpoint.version != CHECKPOINT_VERSION {
            return Err(NmtError::Checkpoint(format!(
                "unsupported checkpoint version {:?} (expected {CHECKPOINT_VERSION:?})",
                checkpoint.version
            )));
        }
        checkpoint.hyper.validate()?;
        checkpoint
            .params
            .check_shapes(&checkpoint.hyper, &checkpoint.vocab)?;
        if !checkpoint.params.is_finite() {
            return Err(NmtError::Checkpoint("non-finite parameter value".into()));
        }
        Ok(checkpoint)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NmtError> {
        let file = std::fs::File::create(path).map_err(|e| NmtError::Checkpoint(e.to_string()))?;
        self.write_to(BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint, NmtError> {
        let file = std::fs::File::open(path).map_err(|e| NmtError::Checkpoint(e.to_string()))?;
        Checkpoint::read_from(BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ContextTriple;
    use crate::nmt::vocab::{build_vocab, NmtExample};

    fn tiny_vocab() -> Vocab {
        let examples = vec![NmtExample {
            target: vec!["gets".into(), "location".into()],
            contexts: vec![ContextTriple {
                left: vec!["get".into(), "loc".into()],
                path: vec!["MethodDecl^".into(), "Block_".into()],
                right: vec!["mgr".into()],
            }],
        }];
        build_vocab(&examples, 1).unwrap()
    }

    fn tiny_hyper() -> HyperParams {
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
    fn init_is_seed_deterministic_and_bounded() {
        let vocab = tiny_vocab();
        let hyper = tiny_hyper();
        let a = ModelParams::init(&hyper, &vocab, 42);
        let b = ModelParams::init(&hyper, &vocab, 42);
        assert_eq!(a, b);
        let c = ModelParams::init(&hyper, &vocab, 43);
        assert_ne!(a, c);
        for (_, group) in a.groups() {
            for v in group {
                assert!(v.abs() <= INIT_SCALE);
            }
        }
        a.check_shapes(&hyper, &vocab).unwrap();
    }

    #[test]
    fn checkpoint_round_trips_exactly() {
        let vocab = tiny_vocab();
        let hyper = tiny_hyper();
        let params = ModelParams::init(&hyper, &vocab, 7);
        let ckpt = Checkpoint::new(hyper, vocab, params);
        let mut buf = Vec::new();
        ckpt.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(&buf[..]).unwrap();
        assert_eq!(back, ckpt);
    }

    #[test]
    fn checkpoint_rejects_shape_mismatch() {
        let vocab = tiny_vocab();
        let hyper = tiny_hyper();
        let params = ModelParams::init(&hyper, &vocab, 7);
        let mut ckpt = Checkpoint::new(hyper, vocab, params);
        ckpt.params.w_att.data.pop();
        let mut buf = Vec::new();
        ckpt.write_to(&mut buf).unwrap();
        match Checkpoint::read_from(&buf[..]) {
            Err(NmtError::ShapeMismatch(name)) => assert_eq!(name, "w_att"),
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn checkpoint_rejects_unknown_version() {
        let vocab = tiny_vocab();
        let hyper = tiny_hyper();
        let params = ModelParams::init(&hyper, &vocab, 7);
        let mut ckpt = Checkpoint::new(hyper, vocab, params);
        ckpt.version = "nmt-checkpoint-v999".into();
        let mut buf = Vec::new();
        ckpt.write_to(&mut buf).unwrap();
        assert!(matches!(
            Checkpoint::read_from(&buf[..]),
            Err(NmtError::Checkpoint(_))
        ));
    }

    #[test]
    fn hyper_validation_catches_bad_values() {
        let mut h = HyperParams::default();
        h.max_target_parts = 1;
        assert!(h.validate().is_err());
        let mut h = HyperParams::default();
        h.dropout_keep = 0.0;
        assert!(h.validate().is_err());
        let mut h = HyperParams::default();
        h.dropout_keep = 1.5;
        assert!(h.validate().is_err());
        assert!(HyperParams::default().validate().is_ok());
    }

    #[test]
    fn add_scaled_updates_every_group() {
        let vocab = tiny_vocab();
        let hyper = tiny_hyper();
        let a = ModelParams::init(&hyper, &vocab, 1);
        let mut sum = a.zeros_like();
        sum.add_scaled(&a, 2.0);
        for ((_, s), (_, orig)) in sum.groups().into_iter().zip(a.groups()) {
            for (x, y) in s.iter().zip(orig) {
                assert!((x - 2.0 * y).abs() < 1e-15);
            }
        }
        assert_eq!(sum.parameter_count(), a.parameter_count());
    }
}
