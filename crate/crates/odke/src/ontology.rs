//! Ontology loading, predicate ranking and enrichment, normalization
//! config generation, and rendering of token-budgeted ontology snippets
//! for extraction prompts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{sha256_hex, PredicateId, TypeId};

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("unknown entity type: {0}")]
    UnknownType(TypeId),
    #[error("token budget {budget} too small: top-ranked line alone needs {needed} tokens")]
    BudgetTooSmall { budget: usize, needed: usize },
    #[error("invalid ontology: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Declared value kind of a predicate's object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Range {
    /// Object must be an entity carrying one of these types.
    Entity { types: BTreeSet<TypeId> },
    Quantity,
    Date,
    String,
    Count,
}

impl Range {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Range::Entity { .. } => "entity-ref",
            Range::Quantity => "quantity",
            Range::Date => "date",
            Range::String => "string",
            Range::Count => "count",
        }
    }
}

/// Reference to a qualifier predicate; `required` qualifiers survive
/// usage-based pruning even at zero usage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualifierRef {
    pub id: PredicateId,
    pub required: bool,
}

impl Serialize for QualifierRef {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.required {
            #[derive(Serialize)]
            struct Full<'a> {
                id: &'a PredicateId,
                required: bool,
            }
            Full { id: &self.id, required: true }.serialize(serializer)
        } else {
            self.id.serialize(serializer)
        }
    }
}

impl<'de> Deserialize<'de> for QualifierRef {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Plain(PredicateId),
            Full {
                id: PredicateId,
                #[serde(default)]
                required: bool,
            },
        }
        Ok(match Repr::deserialize(deserializer)? {
            Repr::Plain(id) => QualifierRef { id, required: false },
            Repr::Full { id, required } => QualifierRef { id, required },
        })
    }
}

/// Ontology predicate definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateSpec {
    pub id: PredicateId,
    /// Canonical label, used in snippets and LLM responses.
    pub name: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub domain: BTreeSet<TypeId>,
    pub range: Range,
    /// `None` means unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cardinality: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qualifiers: Vec<QualifierRef>,
    /// External property id, e.g. a Wikidata-style P-number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_map: Option<String>,
    /// Allowed units for quantity ranges; first entry is canonical.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub units: Vec<String>,
    /// Manual ranking boost added to KG usage frequency.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub boost: i64,
}

fn is_zero(v: &i64) -> bool {
    *v == 0
}

/// Entity type with optional parent for subtype checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDef {
    pub id: TypeId,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<TypeId>,
}

/// The loaded schema: predicates plus a type hierarchy.
#[derive(Debug, Clone)]
pub struct Ontology {
    predicates: BTreeMap<PredicateId, PredicateSpec>,
    types: BTreeMap<TypeId, TypeDef>,
    /// SHA-256 of the source file bytes; keys snippet caches.
    hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct OntologyFile {
    types: Vec<TypeDef>,
    predicates: Vec<PredicateSpec>,
}

impl Ontology {
    pub fn from_json(json: &str) -> Result<Self, OntologyError> {
        let file: OntologyFile = serde_json::from_str(json)?;
        let mut types = BTreeMap::new();
        for ty in file.types {
            if types.insert(ty.id.clone(), ty.clone()).is_some() {
                return Err(OntologyError::Invalid(format!("duplicate type id: {}", ty.id)));
            }
        }
        let mut predicates = BTreeMap::new();
        for spec in file.predicates {
            if predicates.insert(spec.id.clone(), spec.clone()).is_some() {
                return Err(OntologyError::Invalid(format!("duplicate predicate id: {}", spec.id)));
            }
        }
        let ontology = Ontology { predicates, types, hash: sha256_hex(json) };
        ontology.validate()?;
        Ok(ontology)
    }

    pub fn load(path: &Path) -> Result<Self, OntologyError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<(), OntologyError> {
        for ty in self.types.values() {
            if let Some(parent) = &ty.parent {
                if !self.types.contains_key(parent) {
                    return Err(OntologyError::Invalid(format!(
                        "type {} has unknown parent {parent}",
                        ty.id
                    )));
                }
            }
        }
        for spec in self.predicates.values() {
            for ty in &spec.domain {
                if !self.types.contains_key(ty) {
                    return Err(OntologyError::Invalid(format!(
                        "predicate {} domain references unknown type {ty}",
                        spec.id
                    )));
                }
            }
            if let Range::Entity { types } = &spec.range {
                if types.is_empty() {
                    return Err(OntologyError::Invalid(format!(
                        "predicate {} has an empty entity range",
                        spec.id
                    )));
                }
                for ty in types {
                    if !self.types.contains_key(ty) {
                        return Err(OntologyError::Invalid(format!(
                            "predicate {} range references unknown type {ty}",
                            spec.id
                        )));
                    }
                }
            }
            if matches!(spec.range, Range::Quantity) && spec.units.is_empty() {
                return Err(OntologyError::Invalid(format!(
                    "quantity predicate {} lists no expected units",
                    spec.id
                )));
            }
            for qual in &spec.qualifiers {
                if !self.predicates.contains_key(&qual.id) {
                    return Err(OntologyError::Invalid(format!(
                        "predicate {} references unknown qualifier {}",
                        spec.id, qual.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn predicate(&self, id: &PredicateId) -> Option<&PredicateSpec> {
        self.predicates.get(id)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &PredicateSpec> {
        self.predicates.values()
    }

    pub fn predicate_by_name(&self, name: &str) -> Option<&PredicateSpec> {
        self.predicates.values().find(|p| p.name == name)
    }

    pub fn has_type(&self, ty: &TypeId) -> bool {
        self.types.contains_key(ty)
    }

    pub fn type_ids(&self) -> impl Iterator<Item = &TypeId> {
        self.types.keys()
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// True when `ty` equals `ancestor` or `ancestor` is reachable through
    /// parent links.
    pub fn is_subtype_of(&self, ty: &TypeId, ancestor: &TypeId) -> bool {
        let mut current = Some(ty.clone());
        let mut hops = 0;
        while let Some(t) = current {
            if &t == ancestor {
                return true;
            }
            hops += 1;
            if hops > self.types.len() {
                return false;
            }
            current = self.types.get(&t).and_then(|d| d.parent.clone());
        }
        false
    }

    /// True when any of `entity_types` satisfies any of the range types.
    pub fn types_satisfy(&self, entity_types: &BTreeSet<TypeId>, range_types: &BTreeSet<TypeId>) -> bool {
        entity_types
            .iter()
            .any(|ety| range_types.iter().any(|rty| self.is_subtype_of(ety, rty)))
    }

    /// True when the predicate's domain admits the given entity type
    /// (subtype-aware).
    pub fn domain_admits(&self, spec: &PredicateSpec, entity_type: &TypeId) -> bool {
        spec.domain.iter().any(|d| self.is_subtype_of(entity_type, d))
    }
}

/// KG usage statistics consumed by ranking and enrichment; produced by the
/// store so these operations stay pure.
#[derive(Debug, Clone, Default)]
pub struct KgStats {
    /// Stored-triple count per predicate.
    pub predicate_usage: BTreeMap<PredicateId, u64>,
    /// Usage count per (predicate, qualifier) pair.
    pub qualifier_usage: BTreeMap<(PredicateId, PredicateId), u64>,
    /// Example object strings per predicate, first K by subject id.
    pub value_examples: BTreeMap<PredicateId, Vec<String>>,
    /// Hash of the canonical store snapshot; keys snippet caches.
    pub snapshot_hash: String,
}

/// External metadata merged during enrichment (e.g. from a Wikidata-style
/// property registry).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExternalMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// Enriched predicate record driving prompting and validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate360 {
    pub spec: PredicateSpec,
    pub enriched_description: String,
    pub value_examples: Vec<String>,
    pub usage_count: u64,
    pub ranked_qualifiers: Vec<PredicateId>,
}

/// All predicates applicable to `entity_type`, ordered by KG usage (plus
/// any manual boost) descending, predicate id ascending.
pub fn rank_properties(
    ontology: &Ontology,
    entity_type: &TypeId,
    stats: &KgStats,
) -> Result<Vec<PredicateId>, OntologyError> {
    if !ontology.has_type(entity_type) {
        return Err(OntologyError::UnknownType(entity_type.clone()));
    }
    let mut applicable: Vec<&PredicateSpec> = ontology
        .predicates()
        .filter(|spec| ontology.domain_admits(spec, entity_type))
        .collect();
    applicable.sort_by(|a, b| {
        let score = |s: &PredicateSpec| {
            stats.predicate_usage.get(&s.id).copied().unwrap_or(0) as i64 + s.boost
        };
        score(b).cmp(&score(a)).then_with(|| a.id.cmp(&b.id))
    });
    Ok(applicable.into_iter().map(|s| s.id.clone()).collect())
}

/// Build the enriched view of one predicate from KG usage and optional
/// external metadata.
pub fn enrich_predicate(
    spec: &PredicateSpec,
    stats: &KgStats,
    external_meta: Option<&ExternalMeta>,
) -> Predicate360 {
    let usage_count = stats.predicate_usage.get(&spec.id).copied().unwrap_or(0);
    let value_examples = stats.value_examples.get(&spec.id).cloned().unwrap_or_default();
    let enriched_description = external_meta
        .and_then(|m| m.description.clone())
        .unwrap_or_else(|| spec.description.clone());

    // Qualifiers ranked by usage (stable on ties, preserving spec order);
    // zero-usage qualifiers are pruned unless marked required.
    let mut ranked: Vec<(&QualifierRef, u64)> = spec
        .qualifiers
        .iter()
        .map(|q| {
            let usage = stats
                .qualifier_usage
                .get(&(spec.id.clone(), q.id.clone()))
                .copied()
                .unwrap_or(0);
            (q, usage)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    let ranked_qualifiers = ranked
        .into_iter()
        .filter(|(q, usage)| *usage > 0 || q.required)
        .map(|(q, _)| q.id.clone())
        .collect();

    Predicate360 {
        spec: spec.clone(),
        enriched_description,
        value_examples,
        usage_count,
        ranked_qualifiers,
    }
}

/// How raw values for a predicate are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatRule {
    IsoDate,
    DecimalQuantity,
    IntegerCount,
    None,
}

/// Per-predicate normalization requirements derived from the spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationConfig {
    pub predicate: PredicateId,
    pub needs_normalization: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected_units: Vec<String>,
    pub format_rule: FormatRule,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub examples: Vec<(String, String)>,
}

impl NormalizationConfig {
    pub fn canonical_unit(&self) -> Option<&str> {
        self.expected_units.first().map(|s| s.as_str())
    }
}

fn quantity_examples(canonical_unit: &str) -> Vec<(String, String)> {
    match crate::values::resolve_unit(canonical_unit).map(|u| u.family) {
        Some(crate::values::UnitFamily::Length) => vec![
            ("6 ft".into(), "182.88 centimetre".into()),
            ("184 cm".into(), "184 centimetre".into()),
        ],
        Some(crate::values::UnitFamily::Mass) => {
            vec![("201 lb".into(), "91.172066 kilogram".into())]
        }
        Some(crate::values::UnitFamily::Currency) => {
            vec![("$3.1 billion".into(), "3100000000 USD".into())]
        }
        None => vec![],
    }
}

/// Derive the normalization config for a predicate from its range and
/// unit metadata.
pub fn generate_normalization_config(spec: &PredicateSpec) -> NormalizationConfig {
    match &spec.range {
        Range::Quantity => NormalizationConfig {
            predicate: spec.id.clone(),
            needs_normalization: true,
            expected_units: spec.units.clone(),
            format_rule: FormatRule::DecimalQuantity,
            examples: spec.units.first().map(|u| quantity_examples(u)).unwrap_or_default(),
        },
        Range::Date => NormalizationConfig {
            predicate: spec.id.clone(),
            needs_normalization: true,
            expected_units: vec![],
            format_rule: FormatRule::IsoDate,
            examples: vec![("July 4, 1776".into(), "1776-07-04".into())],
        },
        Range::Count => NormalizationConfig {
            predicate: spec.id.clone(),
            needs_normalization: true,
            expected_units: vec![],
            format_rule: FormatRule::IntegerCount,
            examples: vec![("41,936".into(), "41936".into())],
        },
        Range::Entity { .. } | Range::String => NormalizationConfig {
            predicate: spec.id.clone(),
            needs_normalization: false,
            expected_units: vec![],
            format_rule: FormatRule::None,
            examples: vec![],
        },
    }
}

/// One rendered snippet line plus the structured data it was rendered
/// from, so downstream schema mapping does not have to re-parse text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetLine {
    pub predicate: PredicateId,
    pub name: String,
    /// Qualifier display name -> qualifier predicate id, in rank order.
    pub qualifiers: Vec<(String, PredicateId)>,
    pub need_normalization: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization_unit: Option<String>,
    pub rendered: String,
}

/// Token-budgeted textual schema fragment for one entity type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OntologySnippet {
    pub entity_type: TypeId,
    pub lines: Vec<SnippetLine>,
    pub token_estimate: usize,
    pub generated_at: DateTime<Utc>,
}

impl OntologySnippet {
    pub fn text(&self) -> String {
        self.lines.iter().map(|l| l.rendered.as_str()).collect::<Vec<_>>().join("\n")
    }

    pub fn line_by_name(&self, name: &str) -> Option<&SnippetLine> {
        self.lines.iter().find(|l| l.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

fn estimate_tokens(chars: usize) -> usize {
    chars.div_ceil(4)
}

fn render_line(ontology: &Ontology, p360: &Predicate360, config: &NormalizationConfig) -> SnippetLine {
    let mut rendered = format!("{}: {}", p360.spec.name, p360.enriched_description);
    let qualifiers: Vec<(String, PredicateId)> = p360
        .ranked_qualifiers
        .iter()
        .map(|q| {
            let name = ontology.predicate(q).map(|s| s.name.clone()).unwrap_or_else(|| q.0.clone());
            (name, q.clone())
        })
        .collect();
    if !qualifiers.is_empty() {
        let names: Vec<&str> = qualifiers.iter().map(|(n, _)| n.as_str()).collect();
        rendered.push_str(&format!(", qualifiers: [{}]", names.join(", ")));
    }
    let mut need_normalization = false;
    let mut normalization_unit = None;
    if config.format_rule == FormatRule::DecimalQuantity {
        need_normalization = true;
        rendered.push_str(", need_normalization: True");
        if let Some(unit) = config.canonical_unit() {
            normalization_unit = Some(unit.to_string());
            rendered.push_str(&format!(", normalization_unit: {unit}"));
        }
    }
    SnippetLine {
        predicate: p360.spec.id.clone(),
        name: p360.spec.name.clone(),
        qualifiers,
        need_normalization,
        normalization_unit,
        rendered,
    }
}

/// Render an ontology snippet, greedily including whole lines in rank
/// order until the next line would exceed the token budget.
///
/// `predicate_360s` must already be in rank order (see
/// [`rank_properties`]); configs are matched by predicate id.
pub fn render_snippet(
    ontology: &Ontology,
    entity_type: &TypeId,
    predicate_360s: &[Predicate360],
    configs: &[NormalizationConfig],
    token_budget: usize,
    generated_at: DateTime<Utc>,
) -> Result<OntologySnippet, OntologyError> {
    let config_for = |id: &PredicateId| {
        configs
            .iter()
            .find(|c| &c.predicate == id)
            .cloned()
            .unwrap_or_else(|| generate_normalization_config(ontology.predicate(id).unwrap()))
    };

    let mut lines: Vec<SnippetLine> = Vec::new();
    let mut chars = 0usize;
    for p360 in predicate_360s {
        let line = render_line(ontology, p360, &config_for(&p360.spec.id));
        let candidate_chars = chars + line.rendered.len() + if lines.is_empty() { 0 } else { 1 };
        if estimate_tokens(candidate_chars) > token_budget {
            if lines.is_empty() {
                return Err(OntologyError::BudgetTooSmall {
                    budget: token_budget,
                    needed: estimate_tokens(line.rendered.len()),
                });
            }
            break;
        }
        chars = candidate_chars;
        lines.push(line);
    }
    Ok(OntologySnippet {
        entity_type: entity_type.clone(),
        lines,
        token_estimate: estimate_tokens(chars),
        generated_at,
    })
}

/// Structured view recovered from one rendered snippet line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSnippetLine {
    pub name: String,
    pub description: String,
    pub qualifiers: Vec<String>,
    pub need_normalization: bool,
    pub normalization_unit: Option<String>,
}

/// Parse a rendered snippet line back into its parts. Inverse of the
/// renderer for every line the renderer produces.
pub fn parse_snippet_line(line: &str) -> Option<ParsedSnippetLine> {
    let mut rest = line;
    let mut normalization_unit = None;
    if let Some(idx) = rest.rfind(", normalization_unit: ") {
        normalization_unit = Some(rest[idx + ", normalization_unit: ".len()..].to_string());
        rest = &rest[..idx];
    }
    let mut need_normalization = false;
    if let Some(stripped) = rest.strip_suffix(", need_normalization: True") {
        need_normalization = true;
        rest = stripped;
    }
    let mut qualifiers = Vec::new();
    if let Some(idx) = rest.rfind(", qualifiers: [") {
        let inner = rest[idx + ", qualifiers: [".len()..].strip_suffix(']')?;
        qualifiers = inner.split(", ").map(|s| s.to_string()).collect();
        rest = &rest[..idx];
    }
    let (name, description) = rest.split_once(": ")?;
    Some(ParsedSnippetLine {
        name: name.to_string(),
        description: description.to_string(),
        qualifiers,
        need_normalization,
        normalization_unit,
    })
}

/// Disk cache of rendered snippets, keyed by entity type plus the
/// ontology and KG snapshot hashes; a hash change is the refresh signal.
#[derive(Debug, Clone)]
pub struct SnippetCache {
    dir: PathBuf,
}

impl SnippetCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn cache_key(ontology_hash: &str, kg_snapshot_hash: &str) -> String {
        sha256_hex(&format!("{ontology_hash}\n{kg_snapshot_hash}"))[..16].to_string()
    }

    fn path_for(&self, entity_type: &TypeId, key: &str) -> PathBuf {
        self.dir.join(format!("{entity_type}.{key}.txt"))
    }

    pub fn load(&self, entity_type: &TypeId, key: &str) -> Option<String> {
        fs::read_to_string(self.path_for(entity_type, key)).ok()
    }

    pub fn store(&self, entity_type: &TypeId, key: &str, text: &str) -> std::io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(entity_type, key);
        let mut file = fs::File::create(&path)?;
        file.write_all(text.as_bytes())?;
        Ok(path)
    }
}
