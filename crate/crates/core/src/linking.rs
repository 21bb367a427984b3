//! Deterministic entity recognition: BIO+type tags become spans, spans are
//! resolved against a label index, and slot tags order the resolved
//! entities into the logical form's entity positions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::kg::KnowledgeGraph;
use crate::Symbol;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("duplicate type id `{0}` in tag vocabulary")]
    DuplicateType(Symbol),
    #[error("tag sequence lengths differ: {tokens} tokens, {ed_tags} entity tags, {slot_tags} slot tags")]
    LengthMismatch {
        tokens: usize,
        ed_tags: usize,
        slot_tags: usize,
    },
    #[error("token {position} carries slot {slot} outside any entity span")]
    SlotOutsideSpan { position: usize, slot: u32 },
    #[error("invalid entity tag `{0}`")]
    BadTag(String),
    #[error("span [{start}, {end}) is outside the {len} input tokens")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("no index candidates for `{0}`")]
    NoCandidate(String),
    #[error("slot {0} has no entity")]
    MissingSlot(u32),
    #[error("slot {slot} is claimed by both `{first}` and `{second}`")]
    DuplicateSlot {
        slot: u32,
        first: Symbol,
        second: Symbol,
    },
}

/// One entity-detection tag: `O`, `B-<type>` or `I-<type>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdTag {
    Outside,
    Begin(Symbol),
    Inside(Symbol),
}

impl fmt::Display for EdTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdTag::Outside => f.write_str("O"),
            EdTag::Begin(t) => write!(f, "B-{t}"),
            EdTag::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for EdTag {
    type Err = LinkError;

    fn from_str(s: &str) -> Result<Self, LinkError> {
        if s == "O" {
            return Ok(EdTag::Outside);
        }
        match s.split_once('-') {
            Some(("B", t)) if !t.is_empty() => Ok(EdTag::Begin(Symbol::new(t))),
            Some(("I", t)) if !t.is_empty() => Ok(EdTag::Inside(Symbol::new(t))),
            _ => Err(LinkError::BadTag(String::from(s))),
        }
    }
}

/// The entity-detection vocabulary `{O} ∪ {B-tp, I-tp}`, in that order.
pub fn ed_vocab<'a>(type_ids: impl IntoIterator<Item = &'a str>) -> Result<Vec<EdTag>, LinkError> {
    let mut seen = BTreeSet::new();
    let mut vocab = alloc::vec![EdTag::Outside];
    for t in type_ids {
        let t = Symbol::new(t);
        if !seen.insert(t.clone()) {
            return Err(LinkError::DuplicateType(t));
        }
        vocab.push(EdTag::Begin(t.clone()));
        vocab.push(EdTag::Inside(t));
    }
    Ok(vocab)
}

/// Per-token entity tags and slot tags for one utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSequence {
    tokens: Vec<String>,
    ed_tags: Vec<EdTag>,
    slot_tags: Vec<u32>,
}

impl TagSequence {
    pub fn new(tokens: Vec<String>, ed_tags: Vec<EdTag>, slot_tags: Vec<u32>) -> Result<Self, LinkError> {
        if tokens.len() != ed_tags.len() || tokens.len() != slot_tags.len() {
            return Err(LinkError::LengthMismatch {
                tokens: tokens.len(),
                ed_tags: ed_tags.len(),
                slot_tags: slot_tags.len(),
            });
        }
        for (position, (tag, &slot)) in ed_tags.iter().zip(&slot_tags).enumerate() {
            if slot != 0 && *tag == EdTag::Outside {
                return Err(LinkError::SlotOutsideSpan { position, slot });
            }
        }
        Ok(TagSequence {
            tokens,
            ed_tags,
            slot_tags,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn ed_tags(&self) -> &[EdTag] {
        &self.ed_tags
    }

    pub fn slot_tags(&self) -> &[u32] {
        &self.slot_tags
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Largest slot index present; 0 when none.
    pub fn max_slot(&self) -> u32 {
        self.slot_tags.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub predicted_type: Symbol,
    pub slot: u32,
}

/// Maximal `B I*` runs.
///
/// An `I-tp` that does not continue a span of the same type opens a new
/// span instead of failing. The span slot is the largest slot tag inside it.
pub fn extract_spans(tags: &TagSequence) -> Vec<Span> {
    let mut spans: Vec<Span> = Vec::new();
    let mut open = false;
    for (i, (tag, &slot)) in tags.ed_tags.iter().zip(&tags.slot_tags).enumerate() {
        match tag {
            EdTag::Outside => open = false,
            EdTag::Inside(t) if open && spans.last().is_some_and(|s| s.predicted_type == *t) => {
                let last = spans.last_mut().expect("open span");
                last.end = i + 1;
                last.slot = last.slot.max(slot);
            }
            EdTag::Begin(t) | EdTag::Inside(t) => {
                spans.push(Span {
                    start: i,
                    end: i + 1,
                    predicted_type: t.clone(),
                    slot,
                });
                open = true;
            }
        }
    }
    spans
}

/// Lowercases and collapses runs of whitespace to one space.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Normalized label → entity ids, each list in ascending id order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvertedIndex {
    entries: BTreeMap<String, Vec<Symbol>>,
}

impl InvertedIndex {
    /// Indexes the full label of every labeled entity of `kg`.
    ///
    /// Labels of predicates and types are not indexed.
    pub fn build(kg: &KnowledgeGraph) -> Self {
        let mut entries: BTreeMap<String, BTreeSet<Symbol>> = BTreeMap::new();
        for (id, label) in kg.labels() {
            if !kg.entities().contains(id) {
                continue;
            }
            let key = normalize(label);
            if key.is_empty() {
                continue;
            }
            entries.entry(key).or_default().insert(id.clone());
        }
        InvertedIndex {
            entries: entries
                .into_iter()
                .map(|(k, v)| (k, v.into_iter().collect()))
                .collect(),
        }
    }

    pub fn lookup(&self, text: &str) -> &[Symbol] {
        self.entries
            .get(&normalize(text))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Symbol])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkedEntity {
    pub span: Span,
    pub entity: Symbol,
    pub candidates_considered: usize,
    /// Set when no candidate had the predicted type and the first
    /// unfiltered candidate was taken instead.
    pub type_fallback: bool,
}

/// Resolves a span to the first index candidate carrying its predicted type.
pub fn link_span(
    span: &Span,
    tokens: &[String],
    index: &InvertedIndex,
    kg: &KnowledgeGraph,
) -> Result<LinkedEntity, LinkError> {
    if span.start >= span.end || span.end > tokens.len() {
        return Err(LinkError::SpanOutOfRange {
            start: span.start,
            end: span.end,
            len: tokens.len(),
        });
    }
    let text = tokens[span.start..span.end].join(" ");
    let candidates = index.lookup(&text);
    let first = candidates
        .first()
        .ok_or_else(|| LinkError::NoCandidate(normalize(&text)))?;
    let typed = candidates
        .iter()
        .find(|c| kg.has_type(c, &span.predicted_type));
    Ok(LinkedEntity {
        span: span.clone(),
        entity: typed.unwrap_or(first).clone(),
        candidates_considered: candidates.len(),
        type_fallback: typed.is_none(),
    })
}

/// Drops slot-0 entities and orders the rest by slot.
///
/// Repeated mentions of the same entity under one slot collapse to the
/// first occurrence; two different entities under one slot are an error, as
/// is any gap in `1..=k`.
pub fn apply_permutation(linked: &[LinkedEntity]) -> Result<Vec<Symbol>, LinkError> {
    let mut by_slot: BTreeMap<u32, &Symbol> = BTreeMap::new();
    for l in linked.iter().filter(|l| l.span.slot > 0) {
        match by_slot.get(&l.span.slot) {
            Some(&first) if *first != l.entity => {
                return Err(LinkError::DuplicateSlot {
                    slot: l.span.slot,
                    first: first.clone(),
                    second: l.entity.clone(),
                })
            }
            Some(_) => {}
            None => {
                by_slot.insert(l.span.slot, &l.entity);
            }
        }
    }
    for (expected, &slot) in (1u32..).zip(by_slot.keys()) {
        if slot != expected {
            return Err(LinkError::MissingSlot(expected));
        }
    }
    Ok(by_slot.into_values().cloned().collect())
}
