//! Immutable in-memory triple store.
//!
//! A [`KnowledgeGraph`] keeps four multi-map indexes next to the raw triple
//! set: subject→predicate→objects, object→predicate→subjects, type→entities
//! and entity→types. Every grammar action reduces to lookups on these.
//! Lookups are total: unknown ids map to the empty set.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;

use thiserror::Error;

use crate::Symbol;

type Adjacency = BTreeMap<Symbol, BTreeMap<Symbol, BTreeSet<Symbol>>>;

static EMPTY: BTreeSet<Symbol> = BTreeSet::new();

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KgError {
    #[error("triple has an empty {0} field")]
    EmptyField(&'static str),
    #[error("type assertion has an empty {0} field")]
    EmptyTypeField(&'static str),
    #[error("label entry has an empty id")]
    EmptyLabelId,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Symbol,
    pub predicate: Symbol,
    pub object: Symbol,
}

impl Triple {
    pub fn new(
        subject: impl Into<Symbol>,
        predicate: impl Into<Symbol>,
        object: impl Into<Symbol>,
    ) -> Result<Self, KgError> {
        let t = Triple {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        };
        if t.subject.is_empty() {
            return Err(KgError::EmptyField("subject"));
        }
        if t.predicate.is_empty() {
            return Err(KgError::EmptyField("predicate"));
        }
        if t.object.is_empty() {
            return Err(KgError::EmptyField("object"));
        }
        Ok(t)
    }
}

/// Counters collected while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Triples seen more than once (kept once).
    pub duplicate_triples: usize,
    /// Label ids seen more than once (last one wins).
    pub duplicate_labels: usize,
}

#[derive(Debug, Default, Clone)]
pub struct KnowledgeGraphBuilder {
    triples: BTreeSet<Triple>,
    entity_types: BTreeMap<Symbol, BTreeSet<Symbol>>,
    labels: BTreeMap<Symbol, String>,
    stats: BuildStats,
}

impl KnowledgeGraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_triple(&mut self, triple: Triple) -> &mut Self {
        if !self.triples.insert(triple) {
            self.stats.duplicate_triples += 1;
        }
        self
    }

    /// Convenience for tests and generators: builds and inserts a triple.
    pub fn triple(&mut self, s: &str, p: &str, o: &str) -> Result<&mut Self, KgError> {
        let t = Triple::new(s, p, o)?;
        Ok(self.add_triple(t))
    }

    pub fn add_type(&mut self, entity: &str, type_id: &str) -> Result<&mut Self, KgError> {
        if entity.is_empty() {
            return Err(KgError::EmptyTypeField("entity"));
        }
        if type_id.is_empty() {
            return Err(KgError::EmptyTypeField("type"));
        }
        self.entity_types
            .entry(Symbol::new(entity))
            .or_default()
            .insert(Symbol::new(type_id));
        Ok(self)
    }

    pub fn add_label(&mut self, id: &str, label: &str) -> Result<&mut Self, KgError> {
        if id.is_empty() {
            return Err(KgError::EmptyLabelId);
        }
        if self.labels.insert(Symbol::new(id), String::from(label)).is_some() {
            self.stats.duplicate_labels += 1;
        }
        Ok(self)
    }

    pub fn build(self) -> KnowledgeGraph {
        let mut sp: Adjacency = BTreeMap::new();
        let mut op: Adjacency = BTreeMap::new();
        let mut predicates = BTreeSet::new();
        let mut entities = BTreeSet::new();
        for t in &self.triples {
            sp.entry(t.subject.clone())
                .or_default()
                .entry(t.predicate.clone())
                .or_default()
                .insert(t.object.clone());
            op.entry(t.object.clone())
                .or_default()
                .entry(t.predicate.clone())
                .or_default()
                .insert(t.subject.clone());
            predicates.insert(t.predicate.clone());
            entities.insert(t.subject.clone());
            entities.insert(t.object.clone());
        }
        let mut type_index: BTreeMap<Symbol, BTreeSet<Symbol>> = BTreeMap::new();
        for (entity, types) in &self.entity_types {
            entities.insert(entity.clone());
            for tp in types {
                type_index
                    .entry(tp.clone())
                    .or_default()
                    .insert(entity.clone());
            }
        }
        KnowledgeGraph {
            triples: self.triples,
            sp,
            op,
            type_index,
            entity_types: self.entity_types,
            labels: self.labels,
            predicates,
            entities,
            stats: self.stats,
        }
    }
}

/// Immutable triple store with subject/object/type indexes.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    triples: BTreeSet<Triple>,
    sp: Adjacency,
    op: Adjacency,
    type_index: BTreeMap<Symbol, BTreeSet<Symbol>>,
    entity_types: BTreeMap<Symbol, BTreeSet<Symbol>>,
    labels: BTreeMap<Symbol, String>,
    predicates: BTreeSet<Symbol>,
    entities: BTreeSet<Symbol>,
    stats: BuildStats,
}

impl KnowledgeGraph {
    pub fn builder() -> KnowledgeGraphBuilder {
        KnowledgeGraphBuilder::new()
    }

    /// `{o | (e, p, o) ∈ triples}`.
    pub fn objects_of(&self, entity: &str, predicate: &str) -> &BTreeSet<Symbol> {
        lookup(&self.sp, entity, predicate)
    }

    /// `{s | (s, p, e) ∈ triples}`.
    pub fn subjects_of(&self, entity: &str, predicate: &str) -> &BTreeSet<Symbol> {
        lookup(&self.op, entity, predicate)
    }

    pub fn entities_of_type(&self, type_id: &str) -> &BTreeSet<Symbol> {
        self.type_index.get(type_id).unwrap_or(&EMPTY)
    }

    pub fn types_of(&self, entity: &str) -> &BTreeSet<Symbol> {
        self.entity_types.get(entity).unwrap_or(&EMPTY)
    }

    pub fn has_type(&self, entity: &str, type_id: &str) -> bool {
        self.types_of(entity).contains(type_id)
    }

    /// Predicates on outgoing triples of `entity`.
    pub fn outgoing_predicates(&self, entity: &str) -> impl Iterator<Item = &Symbol> {
        self.sp.get(entity).into_iter().flat_map(|m| m.keys())
    }

    /// Predicates on incoming triples of `entity`.
    pub fn incoming_predicates(&self, entity: &str) -> impl Iterator<Item = &Symbol> {
        self.op.get(entity).into_iter().flat_map(|m| m.keys())
    }

    /// Entities that appear as subject of at least one triple.
    pub fn subjects(&self) -> impl Iterator<Item = &Symbol> {
        self.sp.keys()
    }

    /// Entities that appear as object of at least one triple.
    pub fn objects(&self) -> impl Iterator<Item = &Symbol> {
        self.op.keys()
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Every entity that occurs in a triple or carries a type.
    pub fn entities(&self) -> &BTreeSet<Symbol> {
        &self.entities
    }

    pub fn predicates(&self) -> &BTreeSet<Symbol> {
        &self.predicates
    }

    pub fn types(&self) -> impl Iterator<Item = &Symbol> {
        self.type_index.keys()
    }

    pub fn type_count(&self) -> usize {
        self.type_index.len()
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> impl Iterator<Item = (&Symbol, &str)> {
        self.labels.iter().map(|(k, v)| (k, v.as_str()))
    }

    /// Display string for an id: its label when present, the id otherwise.
    pub fn display<'a>(&'a self, id: &'a str) -> &'a str {
        self.label(id).unwrap_or(id)
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }
}

fn lookup<'a>(index: &'a Adjacency, key: &str, predicate: &str) -> &'a BTreeSet<Symbol> {
    index
        .get(key)
        .and_then(|m| m.get(predicate))
        .unwrap_or(&EMPTY)
}
