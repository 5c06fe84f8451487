//! Application call graph over one or more parsed dex files.
//!
//! Nodes are [`MethodId`]s: every method defined in any input dex plus every
//! external callee named by an invoke instruction. Edges are deduplicated
//! (caller, callee) pairs derived from the five invoke kinds and their
//! `/range` forms; `invoke-polymorphic` and `invoke-custom` targets are left
//! out of the graph and only surface in rendered listings.

use std::collections::{BTreeMap, BTreeSet};

use crate::dex::{CodeItem, DexFile, DexInsn, MethodId};

/// Directed call graph with both adjacency directions indexed.
#[derive(Debug, Default, Clone)]
pub struct CallGraph {
    /// Every method seen: defined or external callee.
    pub nodes: BTreeSet<MethodId>,
    /// Methods defined (owning a class_def entry) in any input dex.
    pub defined: BTreeSet<MethodId>,
    forward: BTreeMap<MethodId, BTreeSet<MethodId>>,
    reverse: BTreeMap<MethodId, BTreeSet<MethodId>>,
}

static EMPTY: BTreeSet<MethodId> = BTreeSet::new();

impl CallGraph {
    /// Callees of `caller` (empty set if none recorded).
    pub fn callees_of(&self, caller: &MethodId) -> &BTreeSet<MethodId> {
        self.forward.get(caller).unwrap_or(&EMPTY)
    }

    /// Callers of `callee` (empty set if none recorded).
    pub fn callers_of(&self, callee: &MethodId) -> &BTreeSet<MethodId> {
        self.reverse.get(callee).unwrap_or(&EMPTY)
    }

    pub fn contains_edge(&self, caller: &MethodId, callee: &MethodId) -> bool {
        self.forward
            .get(caller)
            .is_some_and(|set| set.contains(callee))
    }

    /// All edges in (caller, callee) order, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (&MethodId, &MethodId)> {
        self.forward
            .iter()
            .flat_map(|(caller, callees)| callees.iter().map(move |callee| (caller, callee)))
    }

    pub fn edge_count(&self) -> usize {
        self.forward.values().map(BTreeSet::len).sum()
    }

    fn add_edge(&mut self, caller: MethodId, callee: MethodId) {
        self.nodes.insert(callee.clone());
        self.reverse
            .entry(callee.clone())
            .or_default()
            .insert(caller.clone());
        self.forward.entry(caller).or_default().insert(callee);
    }
}

/// Invocation targets of one code item, in body order with repeats, covering
/// the five invoke kinds and their `/range` forms only.
pub fn invoke_sites<'a>(
    dex: &'a DexFile,
    code: &'a CodeItem,
) -> impl Iterator<Item = MethodId> + 'a {
    code.insns.iter().filter_map(move |insn| match insn {
        DexInsn::Invoke { method_idx, .. } => {
            dex.method_ref(*method_idx as u32).map(|r| r.id())
        }
        _ => None,
    })
}

/// Build the combined call graph of all dexes in an application. Cross-dex
/// calls unify through string identity of (class, name, descriptor).
pub fn build_call_graph(dexes: &[DexFile]) -> CallGraph {
    let mut graph = CallGraph::default();
    for dex in dexes {
        for (id, method) in dex.defined_methods() {
            graph.defined.insert(id.clone());
            graph.nodes.insert(id.clone());
            if let Some(code) = &method.code {
                for callee in invoke_sites(dex, code) {
                    graph.add_edge(id.clone(), callee);
                }
            }
        }
    }
    graph
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dex::parse_dex;
    use prigen_testutil::{
        CodeSpec, DexBuilder, Insn, InvokeKind, MethodKey, MethodLedger,
    };

    fn mid(class_dotted: &str, name: &str, descriptor: &str) -> MethodId {
        MethodId {
            class_name: class_dotted.to_string(),
            method_name: name.to_string(),
            descriptor: descriptor.to_string(),
        }
    }

    /// Independent edge oracle: the builder's own ledger of emitted invokes.
    fn ledger_edges(ledgers: &[MethodLedger]) -> BTreeSet<(MethodId, MethodId)> {
        let mut edges = BTreeSet::new();
        for entry in ledgers {
            let caller = mid(&entry.class_dotted, &entry.name, &entry.descriptor);
            for (callee, _mnemonic) in &entry.invokes {
                edges.insert((
                    caller.clone(),
                    mid(&callee.class_dotted, &callee.name, &callee.descriptor),
                ));
            }
        }
        edges
    }

    fn graph_edges(graph: &CallGraph) -> BTreeSet<(MethodId, MethodId)> {
        graph
            .edges()
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect()
    }

    #[test]
    fn chain_fixture_yields_expected_edges() {
        let mut b = DexBuilder::new();
        let a_f = MethodKey::new("Lcom/app/A;", "f", &[], "V");
        let b_g = MethodKey::new("Lcom/app/B;", "g", &[], "V");
        let api_x = MethodKey::new("Landroid/api/X;", "x", &[], "V");
        b.method_calling(a_f, &[(InvokeKind::Virtual, b_g.clone())]);
        b.method_calling(b_g, &[(InvokeKind::Virtual, api_x)]);
        let (bytes, _) = b.build();
        let dex = parse_dex(&bytes).unwrap();
        let graph = build_call_graph(std::slice::from_ref(&dex));

        let expected: BTreeSet<(MethodId, MethodId)> = [
            (mid("com.app.A", "f", "()V"), mid("com.app.B", "g", "()V")),
            (
                mid("com.app.B", "g", "()V"),
                mid("android.api.X", "x", "()V"),
            ),
        ]
        .into_iter()
        .collect();
        assert_eq!(graph_edges(&graph), expected);
        // the external callee is a node but not defined
        let x = mid("android.api.X", "x", "()V");
        assert!(graph.nodes.contains(&x));
        assert!(!graph.defined.contains(&x));
        assert!(graph.defined.contains(&mid("com.app.A", "f", "()V")));
    }

    #[test]
    fn repeated_callee_dedups_to_one_edge() {
        let mut b = DexBuilder::new();
        let caller = MethodKey::new("Lp/C;", "thrice", &[], "V");
        let target = MethodKey::new("Lp/T;", "t", &[], "V");
        b.method_calling(
            caller,
            &[
                (InvokeKind::Virtual, target.clone()),
                (InvokeKind::Virtual, target.clone()),
                (InvokeKind::Virtual, target.clone()),
            ],
        );
        let (bytes, _) = b.build();
        let dex = parse_dex(&bytes).unwrap();
        let graph = build_call_graph(std::slice::from_ref(&dex));
        assert_eq!(graph.edge_count(), 1);
        assert!(graph.contains_edge(&mid("p.C", "thrice", "()V"), &mid("p.T", "t", "()V")));
        // multiplicity is still visible at the instruction level
        let code = dex.classes[0].methods[0].code.as_ref().unwrap();
        assert_eq!(invoke_sites(&dex, code).count(), 3);
    }

    #[test]
    fn codeless_methods_give_nodes_without_edges() {
        let mut b = DexBuilder::new();
        b.method(MethodKey::new("La/A;", "abstract1", &[], "V"), None);
        b.method(MethodKey::new("La/A;", "abstract2", &["I"], "I"), None);
        let (bytes, _) = b.build();
        let dex = parse_dex(&bytes).unwrap();
        let graph = build_call_graph(std::slice::from_ref(&dex));
        assert_eq!(graph.nodes.len(), 2);
        assert_eq!(graph.edge_count(), 0);
        assert_eq!(graph.defined.len(), 2);
    }

    #[test]
    fn cross_dex_calls_unify_by_string_identity() {
        let mut b1 = DexBuilder::new();
        let a_f = MethodKey::new("Lx/A;", "f", &[], "V");
        let b_g = MethodKey::new("Ly/B;", "g", &[], "V");
        b1.method_calling(a_f, &[(InvokeKind::Static, b_g.clone())]);
        let (bytes1, _) = b1.build();

        let mut b2 = DexBuilder::new();
        b2.method_calling(b_g, &[]);
        let (bytes2, _) = b2.build();

        let dexes = vec![parse_dex(&bytes1).unwrap(), parse_dex(&bytes2).unwrap()];
        let graph = build_call_graph(&dexes);
        let g = mid("y.B", "g", "()V");
        assert!(graph.defined.contains(&g), "g is defined in the second dex");
        assert!(graph.contains_edge(&mid("x.A", "f", "()V"), &g));
        assert_eq!(graph.nodes.len(), 2);
    }

    #[test]
    fn graph_matches_ledger_oracle_on_mixed_fixture() {
        // ≤50 methods, all five kinds, /range forms, shared targets,
        // call cycles, and a codeless method.
        let mut b = DexBuilder::new();
        let kinds = [
            InvokeKind::Virtual,
            InvokeKind::Super,
            InvokeKind::Direct,
            InvokeKind::Static,
            InvokeKind::Interface,
        ];
        let helper = MethodKey::new("Lm/Helper;", "help", &["I"], "I");
        for (i, kind) in kinds.iter().enumerate() {
            let caller = MethodKey::new(&format!("Lm/C{i};"), "run", &[], "V");
            let other = MethodKey::new(&format!("Lm/C{};", (i + 1) % kinds.len()), "run", &[], "V");
            b.method_calling(
                caller,
                &[(*kind, helper.clone()), (*kind, other), (*kind, helper.clone())],
            );
        }
        // range forms through an explicit body
        b.method(
            MethodKey::new("Lm/R;", "ranged", &[], "V"),
            Some(CodeSpec::simple(vec![
                Insn::Const4 { reg: 0, value: 0 },
                Insn::Invoke {
                    kind: InvokeKind::Virtual,
                    range: true,
                    args: vec![0],
                    target: helper.clone(),
                },
                Insn::Invoke {
                    kind: InvokeKind::Static,
                    range: true,
                    args: vec![0],
                    target: MethodKey::new("Lm/C0;", "run", &[], "V"),
                },
                Insn::ReturnVoid,
            ])),
        );
        b.method(MethodKey::new("Lm/R;", "bodyless", &[], "V"), None);
        let (bytes, ledgers) = b.build();
        let dex = parse_dex(&bytes).unwrap();
        let graph = build_call_graph(std::slice::from_ref(&dex));
        assert_eq!(graph_edges(&graph), ledger_edges(&ledgers));
        assert!(graph.edge_count() > 0);
    }

    #[test]
    fn adjacency_directions_are_consistent() {
        let mut b = DexBuilder::new();
        let f = MethodKey::new("Lq/F;", "f", &[], "V");
        let g = MethodKey::new("Lq/G;", "g", &[], "V");
        let h = MethodKey::new("Lq/H;", "h", &[], "V");
        b.method_calling(f, &[(InvokeKind::Virtual, g.clone()), (InvokeKind::Virtual, h.clone())]);
        b.method_calling(g, &[(InvokeKind::Virtual, h.clone())]);
        b.method_calling(h, &[]);
        let (bytes, _) = b.build();
        let dex = parse_dex(&bytes).unwrap();
        let graph = build_call_graph(std::slice::from_ref(&dex));

        let h_id = mid("q.H", "h", "()V");
        let callers: Vec<&MethodId> = graph.callers_of(&h_id).iter().collect();
        assert_eq!(callers.len(), 2);
        for (caller, callee) in graph.edges() {
            assert!(graph.callers_of(callee).contains(caller));
            assert!(graph.callees_of(caller).contains(callee));
            assert!(graph.nodes.contains(caller));
            assert!(graph.nodes.contains(callee));
        }
    }
}
