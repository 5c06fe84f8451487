//! Corpus preparation: dedup, obfuscation filtering, splits, and the
//! path-context dataset line format.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astpaths::{Direction, PathContext};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid split fractions {train}/{validation}/{test}: {reason}")]
    InvalidSplit {
        train: f64,
        validation: f64,
        test: f64,
        reason: String,
    },
    #[error("malformed dataset line: {reason}")]
    LineFormat { reason: String },
}

/// One corpus example flowing through dedup/filter/split and out to dataset
/// lines. `target_caption` holds lowercase caption tokens and stays empty
/// for examples that only exist to be predicted on.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorpusExample {
    pub example_id: String,
    pub source_text: String,
    #[serde(default)]
    pub target_caption: Vec<String>,
    #[serde(default)]
    pub contexts: Vec<ContextTriple>,
    #[serde(default)]
    pub loc: usize,
    #[serde(default)]
    pub obfuscation_score: f64,
}

/// A rendered path context: subtokens on both sides, internal-node kinds
/// (with direction markers) in the middle. All parts are space-free.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ContextTriple {
    pub left: Vec<String>,
    pub path: Vec<String>,
    pub right: Vec<String>,
}

impl From<&PathContext> for ContextTriple {
    fn from(ctx: &PathContext) -> Self {
        ContextTriple {
            left: ctx.left_subtokens.clone(),
            path: ctx
                .path
                .iter()
                .map(|&(kind, dir)| {
                    let mark = match dir {
                        Direction::Up => '^',
                        Direction::Down => '_',
                    };
                    format!("{kind}{mark}")
                })
                .collect(),
            right: ctx.right_subtokens.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DuplicateWitness {
    pub removed_id: String,
    pub kept_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

const JAVA_KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
    "true",
    "false",
    "null",
];

/// Code tokens for shingling and identifier scanning: word runs
/// (`[A-Za-z0-9_$]+`) plus every other non-whitespace char as its own token.
fn code_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() || c == '_' || c == '$' {
            word.push(c);
        } else {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if !c.is_whitespace() {
                tokens.push(c.to_string());
            }
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

/// Token shingle set. Texts shorter than `size` tokens collapse to a single
/// whole-sequence shingle so short methods still compare meaningfully.
fn shingle_set(tokens: &[String], size: usize) -> HashSet<String> {
    let mut set = HashSet::new();
    if tokens.is_empty() {
        return set;
    }
    if tokens.len() < size {
        set.insert(tokens.join("\u{1f}"));
        return set;
    }
    for window in tokens.windows(size) {
        set.insert(window.join("\u{1f}"));
    }
    set
}

fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Token-shingle Jaccard similarity between two source texts.
pub fn shingle_similarity(a: &str, b: &str, shingle_size: usize) -> f64 {
    let sa = shingle_set(&code_tokens(a), shingle_size);
    let sb = shingle_set(&code_tokens(b), shingle_size);
    jaccard(&sa, &sb)
}

/// Greedy in-order dedup: an example is removed when its shingle Jaccard
/// similarity to any already-kept example reaches `jaccard_threshold`; the
/// first kept example it matched becomes the witness. The first occurrence
/// of a duplicate group is always kept.
pub fn dedup(
    examples: Vec<CorpusExample>,
    shingle_size: usize,
    jaccard_threshold: f64,
) -> (Vec<CorpusExample>, Vec<DuplicateWitness>) {
    assert!(shingle_size >= 1, "shingle_size must be at least 1");
    assert!(
        jaccard_threshold > 0.0 && jaccard_threshold <= 1.0,
        "jaccard_threshold must be in (0, 1]"
    );
    let mut kept: Vec<CorpusExample> = Vec::new();
    let mut kept_shingles: Vec<HashSet<String>> = Vec::new();
    let mut removed = Vec::new();
    for example in examples {
        let shingles = shingle_set(&code_tokens(&example.source_text), shingle_size);
        let mut witness = None;
        for (i, kept_set) in kept_shingles.iter().enumerate() {
            let sim = jaccard(&shingles, kept_set);
            if sim >= jaccard_threshold {
                witness = Some((kept[i].example_id.clone(), sim));
                break;
            }
        }
        match witness {
            Some((kept_id, similarity)) => removed.push(DuplicateWitness {
                removed_id: example.example_id.clone(),
                kept_id,
                similarity,
            }),
            None => {
                kept.push(example);
                kept_shingles.push(shingles);
            }
        }
    }
    (kept, removed)
}

/// Fraction of identifier tokens (keywords and `known_names` excluded) whose
/// length is at most 2. A text without identifiers scores 0.
pub fn obfuscation_score_with_known(source_text: &str, known_names: &HashSet<String>) -> f64 {
    let mut identifiers = 0usize;
    let mut short = 0usize;
    for token in code_tokens(source_text) {
        let first = token.chars().next().unwrap();
        if !(first.is_ascii_alphabetic() || first == '_' || first == '$') {
            continue;
        }
        if JAVA_KEYWORDS.contains(&token.as_str()) || known_names.contains(&token) {
            continue;
        }
        identifiers += 1;
        if token.chars().count() <= 2 {
            short += 1;
        }
    }
    if identifiers == 0 {
        0.0
    } else {
        short as f64 / identifiers as f64
    }
}

pub fn obfuscation_score(source_text: &str) -> f64 {
    obfuscation_score_with_known(source_text, &HashSet::new())
}

/// Keep exactly the examples whose stored obfuscation score is ≤ `max_score`.
pub fn filter_obfuscated(examples: Vec<CorpusExample>, max_score: f64) -> Vec<CorpusExample> {
    examples
        .into_iter()
        .filter(|e| e.obfuscation_score <= max_score)
        .collect()
}

/// Seeded shuffle, then a contiguous cut: validation and test take
/// floor(n·fraction) each, train takes the remainder (and comes first).
pub fn split(
    examples: Vec<CorpusExample>,
    spec: &SplitSpec,
) -> Result<(Vec<CorpusExample>, Vec<CorpusExample>, Vec<CorpusExample>), CorpusError> {
    let sum = spec.train_fraction + spec.validation_fraction + spec.test_fraction;
    let fractions_valid = [
        spec.train_fraction,
        spec.validation_fraction,
        spec.test_fraction,
    ]
    .iter()
    .all(|f| (0.0..=1.0).contains(f));
    if !fractions_valid || (sum - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidSplit {
            train: spec.train_fraction,
            validation: spec.validation_fraction,
            test: spec.test_fraction,
            reason: if fractions_valid {
                format!("fractions sum to {sum}, expected 1")
            } else {
                "each fraction must lie in [0, 1]".to_string()
            },
        });
    }
    let mut shuffled = examples;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    shuffled.shuffle(&mut rng);
    let n = shuffled.len();
    let n_val = (n as f64 * spec.validation_fraction).floor() as usize;
    let n_test = (n as f64 * spec.test_fraction).floor() as usize;
    let n_train = n - n_val - n_test;
    let test = shuffled.split_off(n_train + n_val);
    let validation = shuffled.split_off(n_train);
    Ok((shuffled, validation, test))
}

/// Render one dataset line: `<target> <ctx> <ctx> ...` with `|`-joined
/// fields and `,`-separated context parts. An empty target becomes `-`.
pub fn format_dataset_line(target: &[String], contexts: &[ContextTriple]) -> String {
    let mut line = if target.is_empty() {
        "-".to_string()
    } else {
        target.join("|")
    };
    debug_assert!(!line.contains(char::is_whitespace));
    for ctx in contexts {
        line.push(' ');
        line.push_str(&ctx.left.join("|"));
        line.push(',');
        line.push_str(&ctx.path.join("|"));
        line.push(',');
        line.push_str(&ctx.right.join("|"));
    }
    line
}

/// Parse one dataset line back into target tokens and context triples.
/// The `-` placeholder parses as an empty target.
pub fn parse_dataset_line(line: &str) -> Result<(Vec<String>, Vec<ContextTriple>), CorpusError> {
    let mut parts = line.split_whitespace();
    let target_field = parts.next().ok_or(CorpusError::LineFormat {
        reason: "empty line".to_string(),
    })?;
    let target: Vec<String> = if target_field == "-" {
        Vec::new()
    } else {
        target_field.split('|').map(str::to_string).collect()
    };
    if target.iter().any(|t| t.is_empty()) {
        return Err(CorpusError::LineFormat {
            reason: format!("empty target token in {target_field:?}"),
        });
    }
    let mut contexts = Vec::new();
    for (i, part) in parts.enumerate() {
        let fields: Vec<&str> = part.split(',').collect();
        if fields.len() != 3 {
            return Err(CorpusError::LineFormat {
                reason: format!(
                    "context {i} has {} comma-separated fields, expected 3",
                    fields.len()
                ),
            });
        }
        let split_field = |field: &str, what: &str| -> Result<Vec<String>, CorpusError> {
            if field.is_empty() {
                return Err(CorpusError::LineFormat {
                    reason: format!("context {i} has an empty {what} field"),
                });
            }
            Ok(field.split('|').map(str::to_string).collect())
        };
        contexts.push(ContextTriple {
            left: split_field(fields[0], "left")?,
            path: split_field(fields[1], "path")?,
            right: split_field(fields[2], "right")?,
        });
    }
    Ok((target, contexts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: &str, source: &str) -> CorpusExample {
        CorpusExample {
            example_id: id.to_string(),
            source_text: source.to_string(),
            target_caption: Vec::new(),
            contexts: Vec::new(),
            loc: 1,
            obfuscation_score: 0.0,
        }
    }

    #[test]
    fn identical_sources_are_removed_with_first_as_witness() {
        let src = "int add(int a, int b) { return a + b; }";
        let (kept, removed) = dedup(vec![ex("m1", src), ex("m2", src)], 5, 0.8);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].example_id, "m1");
        assert_eq!(removed.len(), 1);
        assert_eq!(removed[0].removed_id, "m2");
        assert_eq!(removed[0].kept_id, "m1");
        assert!((removed[0].similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_sources_are_both_kept() {
        let (kept, removed) = dedup(
            vec![
                ex("m1", "int add(int a, int b) { return a + b; }"),
                ex("m2", "void log() { print(); }"),
            ],
            5,
            0.8,
        );
        assert_eq!(kept.len(), 2);
        assert!(removed.is_empty());
    }

    /// Independent pairwise oracle: recompute every pairwise similarity with
    /// a from-scratch shingle/Jaccard implementation, replay the greedy
    /// keep/remove decisions, and compare.
    fn oracle_dedup(sources: &[(String, String)], k: usize, threshold: f64) -> Vec<String> {
        fn toks(s: &str) -> Vec<String> {
            let mut out = Vec::new();
            let mut w = String::new();
            for c in s.chars() {
                if c.is_ascii_alphanumeric() || c == '_' || c == '$' {
                    w.push(c);
                } else {
                    if !w.is_empty() {
                        out.push(std::mem::take(&mut w));
                    }
                    if !c.is_whitespace() {
                        out.push(c.to_string());
                    }
                }
            }
            if !w.is_empty() {
                out.push(w);
            }
            out
        }
        let sets: Vec<HashSet<Vec<String>>> = sources
            .iter()
            .map(|(_, s)| {
                let t = toks(s);
                if t.is_empty() {
                    HashSet::new()
                } else if t.len() < k {
                    std::iter::once(t).collect()
                } else {
                    t.windows(k).map(|w| w.to_vec()).collect()
                }
            })
            .collect();
        let mut kept_idx: Vec<usize> = Vec::new();
        let mut removed_ids = Vec::new();
        'outer: for (i, (id, _)) in sources.iter().enumerate() {
            for &j in &kept_idx {
                let inter = sets[i].intersection(&sets[j]).count() as f64;
                let union = (sets[i].len() + sets[j].len()) as f64 - inter;
                let sim = if union == 0.0 { 1.0 } else { inter / union };
                if sim >= threshold {
                    removed_ids.push(id.clone());
                    continue 'outer;
                }
            }
            kept_idx.push(i);
        }
        removed_ids
    }

    #[test]
    fn planted_near_duplicates_match_pairwise_oracle() {
        // distinct bases plus three near-duplicates (small edits that keep
        // shingle overlap high)
        let mut corpus: Vec<CorpusExample> = prigen_testutil::generate_corpus(7, 11)
            .into_iter()
            .map(|g| ex(&g.id, &g.source))
            .collect();
        let dup_of = |e: &CorpusExample, id: &str, tweak: &str| CorpusExample {
            example_id: id.to_string(),
            source_text: format!("{}{}", e.source_text, tweak),
            ..e.clone()
        };
        corpus.push(dup_of(&corpus[0].clone(), "dup0", " "));
        corpus.push(dup_of(&corpus[2].clone(), "dup2", "\n"));
        corpus.push(dup_of(&corpus[4].clone(), "dup4", "  \n"));

        let (kept, removed) = dedup(corpus.clone(), 5, 0.8);
        let removed_ids: Vec<String> = removed.iter().map(|w| w.removed_id.clone()).collect();
        assert_eq!(removed_ids, vec!["dup0", "dup2", "dup4"]);
        assert_eq!(kept.len(), 7);

        let sources: Vec<(String, String)> = corpus
            .iter()
            .map(|e| (e.example_id.clone(), e.source_text.clone()))
            .collect();
        assert_eq!(removed_ids, oracle_dedup(&sources, 5, 0.8));
    }

    #[test]
    fn dedup_of_kept_set_is_a_fixed_point() {
        let mut corpus: Vec<CorpusExample> = prigen_testutil::generate_corpus(10, 3)
            .into_iter()
            .map(|g| ex(&g.id, &g.source))
            .collect();
        let clone = corpus[1].clone();
        corpus.push(CorpusExample {
            example_id: "extra".into(),
            ..clone
        });
        let (kept, removed) = dedup(corpus, 5, 0.8);
        assert_eq!(removed.len(), 1);
        let (kept2, removed2) = dedup(kept.clone(), 5, 0.8);
        assert_eq!(kept2, kept);
        assert!(removed2.is_empty());
    }

    #[test]
    fn obfuscation_score_extremes() {
        assert!((obfuscation_score("int a = b.c(d);") - 1.0).abs() < 1e-12);
        assert_eq!(
            obfuscation_score("int total = count.apply(value);"),
            0.0
        );
        assert_eq!(obfuscation_score("1 + 2;"), 0.0); // no identifiers at all
    }

    #[test]
    fn obfuscation_score_mixed_hand_count() {
        // identifier tokens: update value helper apply value count id x = 8, short: id x = 2
        let src = "void update(int value) { helper.apply(value); count = id + x; }";
        assert!((obfuscation_score(src) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn known_api_names_are_excluded() {
        // identifiers: go(2) url(3) -> 1/2; excluding "go" leaves 0/1
        let src = "void f() { go(url); }";
        let known: HashSet<String> = ["f".to_string()].into_iter().collect();
        let _ = known;
        let base = obfuscation_score_with_known(src, &HashSet::new());
        // identifiers f, go, url -> short f, go = 2/3
        assert!((base - 2.0 / 3.0).abs() < 1e-12);
        let known: HashSet<String> = ["go".to_string(), "f".to_string()].into_iter().collect();
        let scored = obfuscation_score_with_known(src, &known);
        assert_eq!(scored, 0.0);
    }

    #[test]
    fn filter_keeps_scores_at_or_below_cutoff() {
        let mut examples = vec![ex("a", "x"), ex("b", "y"), ex("c", "z")];
        examples[0].obfuscation_score = 0.0;
        examples[1].obfuscation_score = 0.25;
        examples[2].obfuscation_score = 1.0;
        let kept = filter_obfuscated(examples, 0.5);
        let ids: Vec<&str> = kept.iter().map(|e| e.example_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
        assert!(filter_obfuscated(Vec::new(), 0.5).is_empty());
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let examples: Vec<CorpusExample> =
            (0..10).map(|i| ex(&format!("m{i}"), &format!("code {i}"))).collect();
        let spec = SplitSpec {
            train_fraction: 0.9,
            validation_fraction: 0.1,
            test_fraction: 0.0,
            seed: 7,
        };
        let (train, val, test) = split(examples, &spec).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (9, 1, 0));
    }

    #[test]
    fn split_is_deterministic_and_partitions_input() {
        let examples: Vec<CorpusExample> =
            (0..25).map(|i| ex(&format!("m{i}"), &format!("code {i}"))).collect();
        let spec = SplitSpec {
            train_fraction: 0.8,
            validation_fraction: 0.1,
            test_fraction: 0.1,
            seed: 99,
        };
        let (t1, v1, s1) = split(examples.clone(), &spec).unwrap();
        let (t2, v2, s2) = split(examples.clone(), &spec).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(v1, v2);
        assert_eq!(s1, s2);
        assert_eq!((t1.len(), v1.len(), s1.len()), (21, 2, 2));

        let mut all_ids: Vec<String> = t1
            .iter()
            .chain(&v1)
            .chain(&s1)
            .map(|e| e.example_id.clone())
            .collect();
        all_ids.sort();
        let mut want: Vec<String> = examples.iter().map(|e| e.example_id.clone()).collect();
        want.sort();
        assert_eq!(all_ids, want);

        let other = SplitSpec { seed: 100, ..spec };
        let (t3, _, _) = split(examples, &other).unwrap();
        assert_ne!(
            t1.iter().map(|e| &e.example_id).collect::<Vec<_>>(),
            t3.iter().map(|e| &e.example_id).collect::<Vec<_>>()
        );
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let spec = SplitSpec {
            train_fraction: 0.8,
            validation_fraction: 0.1,
            test_fraction: 0.2,
            seed: 0,
        };
        assert!(matches!(
            split(vec![ex("a", "x")], &spec),
            Err(CorpusError::InvalidSplit { .. })
        ));
    }

    #[test]
    fn split_of_empty_input_is_three_empty_partitions() {
        let spec = SplitSpec {
            train_fraction: 0.8,
            validation_fraction: 0.1,
            test_fraction: 0.1,
            seed: 0,
        };
        let (t, v, s) = split(Vec::new(), &spec).unwrap();
        assert!(t.is_empty() && v.is_empty() && s.is_empty());
    }

    #[test]
    fn dataset_line_roundtrip() {
        let target = vec!["gets".to_string(), "the".to_string(), "location".to_string()];
        let contexts = vec![
            ContextTriple {
                left: vec!["get".into(), "location".into()],
                path: vec!["MethodDecl^".into(), "Block_".into()],
                right: vec!["return".into()],
            },
            ContextTriple {
                left: vec!["x".into()],
                path: vec!["Return^".into()],
                right: vec!["1".into()],
            },
        ];
        let line = format_dataset_line(&target, &contexts);
        assert_eq!(
            line,
            "gets|the|location get|location,MethodDecl^|Block_,return x,Return^,1"
        );
        let (t, c) = parse_dataset_line(&line).unwrap();
        assert_eq!(t, target);
        assert_eq!(c, contexts);
    }

    #[test]
    fn placeholder_target_roundtrips_as_empty() {
        let contexts = vec![ContextTriple {
            left: vec!["a".into()],
            path: vec!["Return^".into()],
            right: vec!["b".into()],
        }];
        let line = format_dataset_line(&[], &contexts);
        assert!(line.starts_with("- "));
        let (t, c) = parse_dataset_line(&line).unwrap();
        assert!(t.is_empty());
        assert_eq!(c, contexts);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_dataset_line("").is_err());
        assert!(parse_dataset_line("target a,b").is_err()); // two fields
        assert!(parse_dataset_line("target a,b,c,d").is_err()); // four fields
        assert!(parse_dataset_line("target ,b,c").is_err()); // empty left
    }
}
