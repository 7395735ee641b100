//! Core domain types shared across the pipeline: entities, object values,
//! provenance, stored triples, and candidate facts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_newtype!(
    /// Opaque entity identifier, unique within a store.
    EntityId
);
id_newtype!(
    /// Predicate identifier from the ontology.
    PredicateId
);
id_newtype!(
    /// Entity-type identifier from the ontology type hierarchy.
    TypeId
);

/// An entity known to the store: display name, per-source external
/// identifiers, and its ontology types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: EntityId,
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub external_ids: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub types: BTreeSet<TypeId>,
}

impl EntityRef {
    pub fn new(id: impl Into<EntityId>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            external_ids: BTreeMap::new(),
            types: BTreeSet::new(),
        }
    }

    pub fn with_type(mut self, ty: impl Into<TypeId>) -> Self {
        self.types.insert(ty.into());
        self
    }

    pub fn with_external_id(mut self, system: impl Into<String>, id: impl Into<String>) -> Self {
        self.external_ids.insert(system.into(), id.into());
        self
    }
}

/// Calendar date with explicit precision: year, year-month, or full date.
/// Values at different precisions are distinct; comparisons across
/// precisions happen at the coarser one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DateValue {
    pub year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub month: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DatePrecision {
    Year,
    YearMonth,
    Day,
}

impl DateValue {
    pub fn year(year: i32) -> Self {
        Self { year, month: None, day: None }
    }

    pub fn year_month(year: i32, month: u32) -> Self {
        Self { year, month: Some(month), day: None }
    }

    pub fn full(year: i32, month: u32, day: u32) -> Self {
        Self { year, month: Some(month), day: Some(day) }
    }

    pub fn precision(&self) -> DatePrecision {
        match (self.month, self.day) {
            (Some(_), Some(_)) => DatePrecision::Day,
            (Some(_), None) => DatePrecision::YearMonth,
            _ => DatePrecision::Year,
        }
    }

    /// ISO-8601 rendering truncated to the value's precision.
    pub fn to_iso(&self) -> String {
        match (self.month, self.day) {
            (Some(m), Some(d)) => format!("{:04}-{:02}-{:02}", self.year, m, d),
            (Some(m), None) => format!("{:04}-{:02}", self.year, m),
            _ => format!("{:04}", self.year),
        }
    }

    /// Compare two dates at the coarser of their two precisions.
    pub fn compare_at_coarser(&self, other: &DateValue) -> std::cmp::Ordering {
        let precision = self.precision().min(other.precision());
        let project = |d: &DateValue| match precision {
            DatePrecision::Year => (d.year, 0, 0),
            DatePrecision::YearMonth => (d.year, d.month.unwrap_or(0), 0),
            DatePrecision::Day => (d.year, d.month.unwrap_or(0), d.day.unwrap_or(0)),
        };
        project(self).cmp(&project(other))
    }
}

impl fmt::Display for DateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso())
    }
}

/// The object of a triple. The `kind` discriminant must match the
/// predicate's declared range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObjectValue {
    /// Reference to another entity in the store.
    EntityRef { id: EntityId },
    /// Plain string literal (also used for unresolved entity mentions
    /// before linking).
    String { value: String },
    /// Numeric value with a unit name.
    Quantity { value: f64, unit: String },
    /// Calendar date, possibly partial.
    Date {
        #[serde(flatten)]
        value: DateValue,
    },
    /// Non-negative integer count.
    Count { value: i64 },
}

/// Value-kind discriminant, used for range checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    EntityRef,
    String,
    Quantity,
    Date,
    Count,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueKind::EntityRef => "entity-ref",
            ValueKind::String => "string",
            ValueKind::Quantity => "quantity",
            ValueKind::Date => "date",
            ValueKind::Count => "count",
        };
        f.write_str(s)
    }
}

impl ObjectValue {
    pub fn entity(id: impl Into<EntityId>) -> Self {
        ObjectValue::EntityRef { id: id.into() }
    }

    pub fn text(value: impl Into<String>) -> Self {
        ObjectValue::String { value: value.into() }
    }

    pub fn quantity(value: f64, unit: impl Into<String>) -> Self {
        ObjectValue::Quantity { value, unit: unit.into() }
    }

    pub fn date(value: DateValue) -> Self {
        ObjectValue::Date { value }
    }

    pub fn count(value: i64) -> Self {
        ObjectValue::Count { value }
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            ObjectValue::EntityRef { .. } => ValueKind::EntityRef,
            ObjectValue::String { .. } => ValueKind::String,
            ObjectValue::Quantity { .. } => ValueKind::Quantity,
            ObjectValue::Date { .. } => ValueKind::Date,
            ObjectValue::Count { .. } => ValueKind::Count,
        }
    }

    /// Canonical single-line rendering used for logical fact identity and
    /// deterministic ordering. Floats print in shortest round-trip form.
    pub fn canonical_string(&self) -> String {
        match self {
            ObjectValue::EntityRef { id } => format!("entity:{id}"),
            ObjectValue::String { value } => value.clone(),
            ObjectValue::Quantity { value, unit } => format!("{value} {unit}"),
            ObjectValue::Date { value } => value.to_iso(),
            ObjectValue::Count { value } => value.to_string(),
        }
    }
}

/// Which extractor family produced a fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorKind {
    Pattern,
    Llm,
}

impl fmt::Display for ExtractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractorKind::Pattern => f.write_str("pattern"),
            ExtractorKind::Llm => f.write_str("llm"),
        }
    }
}

/// Where in the source document a fact's evidence lives.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EvidenceSpan {
    /// Key of the infobox row the value came from.
    InfoboxRow { key: String },
    /// Character offsets into the rendered passage text.
    CharOffsets { start: usize, end: usize },
}

/// Source attribution attached to every fact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Provenance {
    pub source_url: String,
    pub locale: String,
    pub evidence_span: EvidenceSpan,
    pub extractor: ExtractorKind,
    pub extracted_at: DateTime<Utc>,
}

/// A stored fact: subject–predicate–object with qualifiers, provenance,
/// confidence, and freshness timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub subject: EntityId,
    pub predicate: PredicateId,
    pub object: ObjectValue,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub qualifiers: BTreeMap<PredicateId, ObjectValue>,
    pub provenance: Vec<Provenance>,
    pub confidence: f64,
    pub updated_at: DateTime<Utc>,
}

/// Logical identity of a fact: subject, predicate, and the canonical
/// serialization of object and qualifiers. Provenance accumulates under
/// this key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactKey {
    pub subject: EntityId,
    pub predicate: PredicateId,
    pub object: String,
    pub qualifiers: String,
}

pub fn canonical_qualifiers(qualifiers: &BTreeMap<PredicateId, ObjectValue>) -> String {
    qualifiers
        .iter()
        .map(|(k, v)| format!("{}={}", k, v.canonical_string()))
        .collect::<Vec<_>>()
        .join("|")
}

impl Triple {
    pub fn logical_key(&self) -> FactKey {
        FactKey {
            subject: self.subject.clone(),
            predicate: self.predicate.clone(),
            object: self.object.canonical_string(),
            qualifiers: canonical_qualifiers(&self.qualifiers),
        }
    }
}

/// Hint emitted by the LLM alongside an answer; advisory only, the
/// corroborator's normalizer is authoritative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedHint {
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

/// An extracted-but-unvalidated fact flowing between extraction,
/// grounding, corroboration, and ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFact {
    /// Subject entity name or id.
    pub subject: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subject_types: Vec<TypeId>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub subject_external_ids: BTreeMap<String, String>,
    pub predicate: PredicateId,
    pub raw_value: String,
    pub value: ObjectValue,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub qualifiers: BTreeMap<PredicateId, ObjectValue>,
    pub extractor: ExtractorKind,
    pub extractor_confidence: f64,
    pub provenance: Provenance,
    /// Unset until the grounder runs; pattern facts are born grounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grounded: Option<bool>,
    /// Set when the answer was not found verbatim in the rendered passage.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub not_in_passage: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_hint: Option<NormalizedHint>,
}

impl CandidateFact {
    /// Stable identifier for audit logs, derived from the fact's content.
    pub fn fact_id(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.subject.as_bytes());
        hasher.update([0x1f]);
        hasher.update(self.predicate.as_str().as_bytes());
        hasher.update([0x1f]);
        hasher.update(self.value.canonical_string().as_bytes());
        hasher.update([0x1f]);
        hasher.update(canonical_qualifiers(&self.qualifiers).as_bytes());
        hasher.update([0x1f]);
        hasher.update(self.extractor.to_string().as_bytes());
        hasher.update([0x1f]);
        hasher.update(self.provenance.source_url.as_bytes());
        let digest = hasher.finalize();
        hex_string(&digest[..8])
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 hex digest of a string, used for fixture keys and cache names.
pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hex_string(&hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn date_precision_and_iso() {
        assert_eq!(DateValue::year(1927).to_iso(), "1927");
        assert_eq!(DateValue::year_month(1927, 5).to_iso(), "1927-05");
        assert_eq!(DateValue::full(1927, 5, 9).to_iso(), "1927-05-09");
        assert_eq!(DateValue::full(1927, 5, 9).precision(), DatePrecision::Day);
        assert_eq!(DateValue::year(1927).precision(), DatePrecision::Year);
    }

    #[test]
    fn cross_precision_compare_uses_coarser() {
        let full = DateValue::full(1927, 5, 9);
        let year = DateValue::year(1927);
        assert_eq!(full.compare_at_coarser(&year), std::cmp::Ordering::Equal);
        let later = DateValue::year(1930);
        assert_eq!(full.compare_at_coarser(&later), std::cmp::Ordering::Less);
    }

    #[test]
    fn canonical_strings_are_stable() {
        assert_eq!(ObjectValue::quantity(198.0, "centimetre").canonical_string(), "198 centimetre");
        assert_eq!(ObjectValue::quantity(182.88, "centimetre").canonical_string(), "182.88 centimetre");
        assert_eq!(ObjectValue::date(DateValue::full(1776, 7, 4)).canonical_string(), "1776-07-04");
        assert_eq!(ObjectValue::count(5).canonical_string(), "5");
        assert_eq!(ObjectValue::entity("q1").canonical_string(), "entity:q1");
    }

    #[test]
    fn object_value_serializes_with_kind_tags() {
        let v = ObjectValue::quantity(184.0, "centimetre");
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"kind":"quantity","value":184.0,"unit":"centimetre"}"#);
        let d = ObjectValue::date(DateValue::year(1927));
        assert_eq!(serde_json::to_string(&d).unwrap(), r#"{"kind":"date","year":1927}"#);
        let e: ObjectValue = serde_json::from_str(r#"{"kind":"entity-ref","id":"q1"}"#).unwrap();
        assert_eq!(e, ObjectValue::entity("q1"));
    }

    #[test]
    fn fact_key_ignores_provenance() {
        let q = ObjectValue::quantity(198.0, "centimetre");
        let mk = |conf: f64| Triple {
            subject: "michael_jordan".into(),
            predicate: "height".into(),
            object: q.clone(),
            qualifiers: BTreeMap::new(),
            provenance: vec![],
            confidence: conf,
            updated_at: chrono::Utc::now(),
        };
        assert_eq!(mk(0.5).logical_key(), mk(0.9).logical_key());
    }
}
