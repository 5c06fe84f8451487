//! Token vocabularies with reserved ids and deterministic assignment.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::NmtError;
use crate::corpus::ContextTriple;

pub const PAD: usize = 0;
pub const SOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;

pub const RESERVED: [&str; 4] = ["<PAD>", "<SOS>", "<EOS>", "<UNK>"];

/// One token table: id 0–3 reserved, the rest assigned by descending
/// frequency then lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct TokenTable {
    tokens: Vec<String>,
    #[serde(skip)]
    id_of: HashMap<String, usize>,
}

impl From<Vec<String>> for TokenTable {
    fn from(tokens: Vec<String>) -> TokenTable {
        let id_of = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        TokenTable { tokens, id_of }
    }
}

impl From<TokenTable> for Vec<String> {
    fn from(table: TokenTable) -> Vec<String> {
        table.tokens
    }
}

impl TokenTable {
    fn build(counts: HashMap<String, u64>, min_count: u64) -> TokenTable {
        let mut kept: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(token, n)| *n >= min_count && !RESERVED.contains(&token.as_str()))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        tokens.extend(kept.into_iter().map(|(t, _)| t));
        TokenTable::from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Id of `token`, or UNK.
    pub fn id(&self, token: &str) -> usize {
        self.id_of.get(token).copied().unwrap_or(UNK)
    }

    /// Token for `id`, or the UNK marker for out-of-range ids.
    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map_or(RESERVED[UNK], String::as_str)
    }
}

/// The three vocabularies the model needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub subtokens: TokenTable,
    pub node_kinds: TokenTable,
    pub targets: TokenTable,
}

/// One training/evaluation example before id mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NmtExample {
    pub target: Vec<String>,
    pub contexts: Vec<ContextTriple>,
}

/// Context with every token replaced by its vocabulary id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedContext {
    pub left: Vec<usize>,
    pub path: Vec<usize>,
    pub right: Vec<usize>,
}

/// Example with ids, truncated to the model's limits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    pub contexts: Vec<EncodedContext>,
    /// Gold caption ids, end token not included.
    pub target: Vec<usize>,
}

/// Build vocabularies over a training set. Tokens with frequency below
/// `min_count` are dropped (they map to UNK later).
pub fn build_vocab(examples: &[NmtExample], min_count: u64) -> Result<Vocab, NmtError> {
    if examples.is_empty() {
        return Err(NmtError::EmptyTrainingSet);
    }
    let mut sub: HashMap<String, u64> = HashMap::new();
    let mut node: HashMap<String, u64> = HashMap::new();
    let mut tgt: HashMap<String, u64> = HashMap::new();
    for ex in examples {
        for t in &ex.target {
            *tgt.entry(t.clone()).or_insert(0) += 1;
        }
        for ctx in &ex.contexts {
            for t in ctx.left.iter().chain(&ctx.right) {
                *sub.entry(t.clone()).or_insert(0) += 1;
            }
            for t in &ctx.path {
                *node.entry(t.clone()).or_insert(0) += 1;
            }
        }
    }
    Ok(Vocab {
        subtokens: TokenTable::build(sub, min_count),
        node_kinds: TokenTable::build(node, min_count),
        targets: TokenTable::build(tgt, min_count),
    })
}

impl Vocab {
    /// Map an example to ids, truncating to `max_contexts` contexts and
    /// `max_target_parts − 1` target tokens (room for the end token).
    pub fn encode_example(
        &self,
        example: &NmtExample,
        max_contexts: usize,
        max_target_parts: usize,
    ) -> EncodedExample {
        let contexts = example
            .contexts
            .iter()
            .take(max_contexts)
            .map(|ctx| EncodedContext {
                left: ctx.left.iter().map(|t| self.subtokens.id(t)).collect(),
                path: ctx.path.iter().map(|t| self.node_kinds.id(t)).collect(),
                right: ctx.right.iter().map(|t| self.subtokens.id(t)).collect(),
            })
            .collect();
        let target = example
            .target
            .iter()
            .take(max_target_parts.saturating_sub(1))
            .map(|t| self.targets.id(t))
            .collect();
        EncodedExample { contexts, target }
    }

    /// Render decoded target ids back to tokens.
    pub fn decode_target(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&id| self.targets.token(id).to_string()).collect()
    }
}
