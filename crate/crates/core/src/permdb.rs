//! The permission-requiring API knowledge base.
//!
//! Maps Android system APIs to the permissions they need, a prose
//! description, and the category of sensitive information they expose. The
//! database is a JSON document (see `data/api_db.json` at the repo root for
//! the curated one shipped with this project); completeness is a data
//! concern, not a code concern.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PermDbError {
    #[error("api db parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid api db entry {entry}: {reason}")]
    Validation { entry: String, reason: String },
    #[error("duplicate api db entry for {class}.{method} with descriptor {descriptor:?}")]
    Duplicate {
        class: String,
        method: String,
        descriptor: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PermissionGroup {
    Internet,
    Network,
    Location,
    Other,
}

/// One permission-requiring API.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSpec {
    #[serde(rename = "class")]
    pub class_name: String,
    #[serde(rename = "method")]
    pub method_name: String,
    /// Dalvik method signature; `None` matches any overload.
    pub descriptor: Option<String>,
    pub description: String,
    pub sensitive_info: String,
    pub permissions: Vec<String>,
    #[serde(rename = "group")]
    pub permission_group: PermissionGroup,
    pub deprecated: bool,
}

/// Loaded, validated database with a (class, method) lookup index.
///
/// Immutable after load; share freely across analysis workers.
#[derive(Debug, Clone)]
pub struct ApiDb {
    entries: Vec<ApiSpec>,
    index: HashMap<(String, String), Vec<usize>>,
}

fn valid_permission(s: &str) -> bool {
    if let Some(rest) = s.strip_prefix("android.permission.") {
        return !rest.is_empty()
            && rest
                .chars()
                .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_');
    }
    // vendor-prefixed dotted name
    let segments: Vec<&str> = s.split('.').collect();
    segments.len() >= 2
        && segments
            .iter()
            .all(|seg| !seg.is_empty() && seg.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
}

impl ApiDb {
    /// Parse and validate the JSON document described in the schema notes.
    pub fn from_json_str(text: &str) -> Result<ApiDb, PermDbError> {
        let entries: Vec<ApiSpec> =
            serde_json::from_str(text).map_err(|e| PermDbError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        ApiDb::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<ApiSpec>) -> Result<ApiDb, PermDbError> {
        let mut index: HashMap<(String, String), Vec<usize>> = HashMap::new();
        for (i, spec) in entries.iter().enumerate() {
            let entry_name = format!("{}.{}", spec.class_name, spec.method_name);
            if spec.class_name.is_empty() {
                return Err(PermDbError::Validation {
                    entry: entry_name,
                    reason: "empty class name".into(),
                });
            }
            if spec.method_name.is_empty() {
                return Err(PermDbError::Validation {
                    entry: entry_name,
                    reason: "empty method name".into(),
                });
            }
            if spec.permissions.is_empty() {
                return Err(PermDbError::Validation {
                    entry: entry_name,
                    reason: "empty permissions list".into(),
                });
            }
            for p in &spec.permissions {
                if !valid_permission(p) {
                    return Err(PermDbError::Validation {
                        entry: entry_name,
                        reason: format!("malformed permission string {p:?}"),
                    });
                }
            }
            let key = (spec.class_name.clone(), spec.method_name.clone());
            let bucket = index.entry(key).or_default();
            for &other in bucket.iter() {
                if entries[other].descriptor == spec.descriptor {
                    return Err(PermDbError::Duplicate {
                        class: spec.class_name.clone(),
                        method: spec.method_name.clone(),
                        descriptor: spec.descriptor.clone(),
                    });
                }
            }
            bucket.push(i);
        }
        Ok(ApiDb { entries, index })
    }

    pub fn entries(&self) -> &[ApiSpec] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Match a call target against the database.
    ///
    /// An entry matches when class and method names are equal and its
    /// descriptor is either absent (any overload) or equal to the query
    /// descriptor. An exact descriptor match wins over a wildcard entry.
    pub fn lookup(&self, class_name: &str, method_name: &str, descriptor: &str) -> Option<&ApiSpec> {
        let key = (class_name.to_string(), method_name.to_string());
        let bucket = self.index.get(&key)?;
        let mut wildcard = None;
        for &i in bucket {
            match &self.entries[i].descriptor {
                Some(d) if d == descriptor => return Some(&self.entries[i]),
                None => wildcard = Some(&self.entries[i]),
                Some(_) => {}
            }
        }
        wildcard
    }

    /// Stable serialization of the validated entries (round-trips through
    /// `from_json_str`).
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("api specs always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = include_str!("../../../data/api_db.json");
    /// Entry count recorded when the bundled database was curated.
    const FIXTURE_ENTRY_COUNT: usize = 24;

    fn fixture_db() -> ApiDb {
        ApiDb::from_json_str(FIXTURE).unwrap()
    }

    #[test]
    fn empty_document_loads_empty_db() {
        let db = ApiDb::from_json_str("[]").unwrap();
        assert_eq!(db.len(), 0);
        assert!(db.lookup("a.B", "c", "()V").is_none());
    }

    #[test]
    fn bundled_fixture_loads_with_recorded_count() {
        let db = fixture_db();
        assert_eq!(db.len(), FIXTURE_ENTRY_COUNT);
        for group in [
            PermissionGroup::Internet,
            PermissionGroup::Network,
            PermissionGroup::Location,
        ] {
            assert!(
                db.entries().iter().any(|e| e.permission_group == group),
                "fixture db must cover {group:?}"
            );
        }
    }

    #[test]
    fn duplicate_triple_is_rejected() {
        let doc = r#"[
          {"class":"a.B","method":"m","descriptor":"()V","description":"d",
           "sensitive_info":"s","permissions":["android.permission.INTERNET"],
           "group":"INTERNET","deprecated":false},
          {"class":"a.B","method":"m","descriptor":"()V","description":"d2",
           "sensitive_info":"s2","permissions":["android.permission.INTERNET"],
           "group":"INTERNET","deprecated":false}
        ]"#;
        assert!(matches!(
            ApiDb::from_json_str(doc),
            Err(PermDbError::Duplicate { .. })
        ));
    }

    #[test]
    fn malformed_json_reports_position() {
        match ApiDb::from_json_str("[{") {
            Err(PermDbError::Parse { line, .. }) => assert!(line >= 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_permission_string_is_rejected() {
        let doc = r#"[
          {"class":"a.B","method":"m","descriptor":null,"description":"d",
           "sensitive_info":"s","permissions":["not a permission"],
           "group":"OTHER","deprecated":false}
        ]"#;
        assert!(matches!(
            ApiDb::from_json_str(doc),
            Err(PermDbError::Validation { .. })
        ));
    }

    #[test]
    fn empty_class_name_is_rejected() {
        let doc = r#"[
          {"class":"","method":"m","descriptor":null,"description":"d",
           "sensitive_info":"s","permissions":["android.permission.INTERNET"],
           "group":"INTERNET","deprecated":false}
        ]"#;
        assert!(matches!(
            ApiDb::from_json_str(doc),
            Err(PermDbError::Validation { .. })
        ));
    }

    #[test]
    fn lookup_finds_location_entry_by_exact_descriptor() {
        let db = fixture_db();
        let spec = db
            .lookup(
                "android.location.LocationManager",
                "getLastKnownLocation",
                "(Ljava/lang/String;)Landroid/location/Location;",
            )
            .expect("fixture entry");
        assert_eq!(spec.permission_group, PermissionGroup::Location);
        assert!(spec
            .permissions
            .contains(&"android.permission.ACCESS_FINE_LOCATION".to_string()));
    }

    #[test]
    fn lookup_misses_non_permission_api() {
        let db = fixture_db();
        assert!(db.lookup("java.lang.String", "length", "()I").is_none());
    }

    #[test]
    fn wildcard_descriptor_matches_multiple_overloads() {
        let db = fixture_db();
        let a = db.lookup(
            "android.location.LocationManager",
            "requestLocationUpdates",
            "(Ljava/lang/String;JFLandroid/location/LocationListener;)V",
        );
        let b = db.lookup(
            "android.location.LocationManager",
            "requestLocationUpdates",
            "(JFLandroid/location/Criteria;Landroid/app/PendingIntent;)V",
        );
        assert!(a.is_some());
        assert_eq!(a.map(|s| &s.description), b.map(|s| &s.description));
    }

    #[test]
    fn every_concrete_entry_is_reachable_via_lookup() {
        let db = fixture_db();
        for spec in db.entries() {
            if let Some(d) = &spec.descriptor {
                let found = db
                    .lookup(&spec.class_name, &spec.method_name, d)
                    .expect("entry must be reachable");
                assert_eq!(found, spec);
            }
        }
    }

    #[test]
    fn serialization_round_trip_is_stable() {
        let db = fixture_db();
        let text = db.to_json_string();
        let again = ApiDb::from_json_str(&text).unwrap();
        assert_eq!(db.entries(), again.entries());
    }
}
