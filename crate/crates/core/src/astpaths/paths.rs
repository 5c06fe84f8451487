//! AST path-context extraction.
//!
//! A path context pairs two terminals with the chain of internal nodes
//! between them: up from the left terminal's parent to the lowest common
//! ancestor, then down to the right terminal's parent. Terminals themselves
//! never appear on the path. Rendering marks direction per node: `Kind^`
//! while ascending (the LCA is the last `^` node) and `Kind_` while
//! descending.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ast::{Ast, NodeId};
use super::subtokenize;

/// Extraction limits. `max_length` bounds the number of internal nodes on a
/// path, `max_width` the child-index spread at the LCA, and `max_contexts`
/// the number of contexts kept per method (seeded sampling when exceeded).
#[derive(Debug, Clone, Copy)]
pub struct PathLimits {
    pub max_length: usize,
    pub max_width: usize,
    pub max_contexts: usize,
}

impl Default for PathLimits {
    fn default() -> Self {
        PathLimits {
            max_length: 9,
            max_width: 2,
            max_contexts: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathContext {
    pub left_subtokens: Vec<String>,
    /// Internal-node kinds with traversal direction, left terminal to right.
    pub path: Vec<(&'static str, Direction)>,
    pub right_subtokens: Vec<String>,
    /// Source-order token positions of the two terminals; fixes output order.
    pub left_pos: usize,
    pub right_pos: usize,
}

impl PathContext {
    /// `Kind^` / `Kind_` rendering of the internal path, joined by spaces.
    pub fn render_path(&self) -> String {
        let mut out = String::new();
        for (i, (kind, dir)) in self.path.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(kind);
            out.push(match dir {
                Direction::Up => '^',
                Direction::Down => '_',
            });
        }
        out
    }
}

/// Subtokens for a terminal, with a kind-based fallback so no side of a
/// context is ever empty (e.g. a string literal of punctuation only).
fn terminal_subtokens(ast: &Ast, id: NodeId) -> Vec<String> {
    let node = ast.node(id);
    let lexeme = &node.terminal.as_ref().expect("terminal node").lexeme;
    let subs = subtokenize(lexeme);
    if !subs.is_empty() {
        return subs;
    }
    let fallback = match node.kind {
        "StringLit" => "str",
        "CharLit" => "chr",
        "IntLit" | "FloatLit" => "num",
        _ => "id",
    };
    vec![fallback.to_string()]
}

fn ancestor_chain(ast: &Ast, id: NodeId) -> Vec<NodeId> {
    let mut chain = Vec::new();
    let mut cur = ast.node(id).parent;
    while let Some(p) = cur {
        chain.push(p);
        cur = ast.node(p).parent;
    }
    chain
}

/// Build the path context for one ordered terminal pair, or `None` when it
/// exceeds the length or width limits.
fn pair_context(
    ast: &Ast,
    left: NodeId,
    right: NodeId,
    limits: &PathLimits,
) -> Option<PathContext> {
    // chains run parent -> root; align the tails to find the deepest common node
    let left_chain = ancestor_chain(ast, left);
    let right_chain = ancestor_chain(ast, right);
    let mut li = left_chain.len();
    let mut ri = right_chain.len();
    while li > 0 && ri > 0 && left_chain[li - 1] == right_chain[ri - 1] {
        li -= 1;
        ri -= 1;
    }
    // tails were equal from (li, ri) onward; the LCA is the first shared node
    debug_assert!(li < left_chain.len() && ri < right_chain.len());
    let lca = left_chain[li];

    let mut path: Vec<(&'static str, Direction)> = Vec::new();
    // ascend: parent(left) .. lca, inclusive
    for &node in &left_chain[..=li] {
        path.push((ast.node(node).kind, Direction::Up));
    }
    // descend: the strictly-below-lca part of the right chain, top-down
    for &node in right_chain[..ri].iter().rev() {
        path.push((ast.node(node).kind, Direction::Down));
    }
    if path.len() > limits.max_length {
        return None;
    }

    // width: child-index spread at the LCA between the two branches
    let left_branch = if li == 0 { left } else { left_chain[li - 1] };
    let right_branch = if ri == 0 { right } else { right_chain[ri - 1] };
    let pos_of = |branch: NodeId| {
        ast.node(lca)
            .children
            .iter()
            .position(|&c| c == branch)
            .expect("branch is a child of its LCA")
    };
    let width = pos_of(right_branch).abs_diff(pos_of(left_branch));
    if width > limits.max_width {
        return None;
    }

    let lp = ast.node(left).terminal.as_ref().unwrap().pos;
    let rp = ast.node(right).terminal.as_ref().unwrap().pos;
    Some(PathContext {
        left_subtokens: terminal_subtokens(ast, left),
        path,
        right_subtokens: terminal_subtokens(ast, right),
        left_pos: lp,
        right_pos: rp,
    })
}

/// Extract path contexts for every source-ordered terminal pair, apply the
/// limits, and — when more than `max_contexts` survive — sample without
/// replacement using a ChaCha8 generator seeded with `seed`. Output is
/// always sorted by the terminals' source positions.
pub fn extract_paths(ast: &Ast, limits: &PathLimits, seed: u64) -> Vec<PathContext> {
    let terminals = ast.terminals();
    let mut contexts = Vec::new();
    for i in 0..terminals.len() {
        for j in (i + 1)..terminals.len() {
            if let Some(ctx) = pair_context(ast, terminals[i], terminals[j], limits) {
                contexts.push(ctx);
            }
        }
    }
    if contexts.len() > limits.max_contexts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut indices: Vec<usize> = (0..contexts.len()).collect();
        indices.shuffle(&mut rng);
        indices.truncate(limits.max_contexts);
        indices.sort_unstable();
        contexts = indices.into_iter().map(|i| contexts[i].clone()).collect();
    }
    contexts.sort_by_key(|c| (c.left_pos, c.right_pos));
    contexts
}
