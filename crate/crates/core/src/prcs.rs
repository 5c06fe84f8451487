//! Permission-Requiring Code Segment (PRCS) extraction.
//!
//! A hop-1 PRCS is a defined method whose body directly invokes at least one
//! permission-requiring API from the database. For `max_hops` = k > 1, a
//! method is a hop-h PRCS (2 ≤ h ≤ k) when its shortest caller-direction
//! path to any hop-1 method is h−1 steps. Each record carries the rendered
//! body, its line count, and the APIs it is credited with, annotated with
//! call-site counts inside that body.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::callgraph::{invoke_sites, CallGraph};
use crate::dex::{dotted_class, render_method, DexError, DexFile, MethodId};
use crate::manifest::ManifestInfo;
use crate::permdb::{ApiDb, ApiSpec, PermissionGroup};

#[derive(Debug, Error)]
pub enum PrcsError {
    #[error("max_hops must be at least 1, got {0}")]
    BadMaxHops(u32),
    #[error(transparent)]
    Dex(#[from] DexError),
}

/// One permission-requiring API credited to a code segment. For hop-1
/// segments `call_sites` counts invoke instructions resolving to the API;
/// for deeper hops it counts invoke instructions targeting the next-closer
/// methods through which the API is reached.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CalledApi {
    pub class: String,
    pub method: String,
    pub permissions: Vec<String>,
    pub group: PermissionGroup,
    pub description: String,
    pub sensitive_info: String,
    pub call_sites: u32,
}

impl CalledApi {
    fn key_of(spec: &ApiSpec) -> CalledApi {
        CalledApi {
            class: spec.class_name.clone(),
            method: spec.method_name.clone(),
            permissions: spec.permissions.clone(),
            group: spec.permission_group,
            description: spec.description.clone(),
            sensitive_info: spec.sensitive_info.clone(),
            call_sites: 0,
        }
    }
}

/// One extracted code segment, serialized as a JSON Lines record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prcs {
    pub apk_id: String,
    pub class: String,
    pub method: String,
    pub descriptor: String,
    pub hop: u32,
    pub loc: usize,
    pub apis: Vec<CalledApi>,
    pub code: String,
}

impl Prcs {
    pub fn method_id(&self) -> MethodId {
        MethodId {
            class_name: self.class.clone(),
            method_name: self.method.clone(),
            descriptor: self.descriptor.clone(),
        }
    }
}

/// Permission cross-check between manifest declarations and extracted PRCS.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionReport {
    /// Permissions required by called APIs but absent from the manifest.
    pub undeclared_use: Vec<String>,
    /// Declared permissions no extracted API call accounts for
    /// (informational: the database covers only part of the platform).
    pub unmatched_declaration: Vec<String>,
}

// Aggregation key: a CalledApi with call_sites zeroed, so identical API
// references merge and counts add.
type ApiCounts = BTreeMap<CalledApi, u32>;

/// Extract all PRCS up to `max_hops` from an application's dexes.
///
/// Results are sorted by (class, method, descriptor); a method appears at
/// most once, at its smallest hop distance.
pub fn find_prcs(
    apk_id: &str,
    graph: &CallGraph,
    dexes: &[DexFile],
    db: &ApiDb,
    max_hops: u32,
) -> Result<Vec<Prcs>, PrcsError> {
    if max_hops < 1 {
        return Err(PrcsError::BadMaxHops(max_hops));
    }

    // First definition wins for methods defined in several dexes.
    let mut defined_in: BTreeMap<MethodId, usize> = BTreeMap::new();
    for (dex_index, dex) in dexes.iter().enumerate() {
        for (id, _) in dex.defined_methods() {
            defined_in.entry(id).or_insert(dex_index);
        }
    }

    let lookup_spec = |callee: &MethodId| -> Option<&ApiSpec> {
        db.lookup(&callee.class_name, &callee.method_name, &callee.descriptor)
    };

    // Hop 1: direct database hits, with per-API call-site counts.
    let mut hop_of: BTreeMap<MethodId, u32> = BTreeMap::new();
    let mut apis_of: BTreeMap<MethodId, ApiCounts> = BTreeMap::new();
    for (&ref id, &dex_index) in &defined_in {
        let dex = &dexes[dex_index];
        let Some(code) = dex.find_method(id).and_then(|m| m.code.as_ref()) else {
            continue;
        };
        let mut counts = ApiCounts::new();
        for callee in invoke_sites(dex, code) {
            if let Some(spec) = lookup_spec(&callee) {
                *counts.entry(CalledApi::key_of(spec)).or_insert(0) += 1;
            }
        }
        if !counts.is_empty() {
            hop_of.insert(id.clone(), 1);
            apis_of.insert(id.clone(), counts);
        }
    }

    // Hops 2..=max_hops: breadth-first in the caller direction. A hop-h
    // method inherits the APIs of each hop-(h−1) callee, one call site per
    // invoke instruction targeting such a callee.
    let mut frontier: Vec<MethodId> = hop_of.keys().cloned().collect();
    for hop in 2..=max_hops {
        let mut next: Vec<MethodId> = Vec::new();
        for reached in &frontier {
            for caller in graph.callers_of(reached) {
                if !hop_of.contains_key(caller) && defined_in.contains_key(caller) {
                    hop_of.insert(caller.clone(), hop);
                    next.push(caller.clone());
                }
            }
        }
        for id in &next {
            let dex = &dexes[defined_in[id]];
            let Some(code) = dex.find_method(id).and_then(|m| m.code.as_ref()) else {
                continue;
            };
            let mut counts = ApiCounts::new();
            for callee in invoke_sites(dex, code) {
                if hop_of.get(&callee) != Some(&(hop - 1)) {
                    continue;
                }
                if let Some(callee_apis) = apis_of.get(&callee) {
                    for key in callee_apis.keys() {
                        *counts.entry(key.clone()).or_insert(0) += 1;
                    }
                }
            }
            apis_of.insert(id.clone(), counts);
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }

    let mut records = Vec::with_capacity(hop_of.len());
    for (id, hop) in &hop_of {
        let dex = &dexes[defined_in[id]];
        let code = render_method(dex, id)?;
        let apis = apis_of
            .remove(id)
            .unwrap_or_default()
            .into_iter()
            .map(|(mut api, call_sites)| {
                api.call_sites = call_sites;
                api
            })
            .collect();
        records.push(Prcs {
            apk_id: apk_id.to_string(),
            class: id.class_name.clone(),
            method: id.method_name.clone(),
            descriptor: id.descriptor.clone(),
            hop: *hop,
            loc: code.lines().count(),
            apis,
            code,
        });
    }
    // BTreeMap iteration already yields (class, method, descriptor) order.
    Ok(records)
}

/// Compare manifest-declared permissions against the permissions demanded by
/// the APIs the extracted segments call.
pub fn cross_check_permissions(manifest: &ManifestInfo, prcs: &[Prcs]) -> PermissionReport {
    let mut used: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
    for record in prcs {
        for api in &record.apis {
            used.extend(api.permissions.iter().map(String::as_str));
        }
    }
    let declared: std::collections::BTreeSet<&str> = manifest
        .declared_permissions
        .iter()
        .map(String::as_str)
        .collect();
    PermissionReport {
        undeclared_use: used
            .difference(&declared)
            .map(|p| p.to_string())
            .collect(),
        unmatched_declaration: declared
            .difference(&used)
            .map(|p| p.to_string())
            .collect(),
    }
}

/// Helper for callers that track class identity in Dalvik descriptor form.
pub fn descriptor_to_dotted(descriptor: &str) -> String {
    dotted_class(descriptor)
}
