//! Question templates: a surface pattern with `<e1>`/`<p1>`/`<tp1>`/`<num1>`
//! placeholders paired with an LF skeleton using `?e1`/`?p1`/`?tp1`/`?num1`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use lasagne_core::lf::{parse_lf, print_lf, typecheck, Hole, HoleKind, LfNode, ParseError, Sort, SortError};
use lasagne_core::metrics::{AnswerKind, QuestionType};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{EngineError, Result};
use crate::io::{format_versioned_json, read_versioned_json};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("unknown question type `{0}`")]
    UnknownQuestionType(String),
    #[error("skeleton: {0}")]
    Parse(#[from] ParseError),
    #[error("skeleton: {0}")]
    Sort(#[from] SortError),
    #[error("`{question_type}` needs a {expected} answer but the skeleton yields {found}")]
    WrongSort {
        question_type: QuestionType,
        expected: Sort,
        found: Sort,
    },
    #[error("placeholder `{0}` must be numbered")]
    Anonymous(Hole),
    #[error("malformed placeholder `{0}` in pattern; placeholders must be separate words")]
    BadPlaceholder(String),
    #[error("pattern placeholder `<{0}>` does not occur in the skeleton")]
    UnknownPlaceholder(String),
    #[error("entity placeholder `{0}` is not mentioned in the pattern")]
    EntityNotMentioned(Hole),
    #[error("entity placeholders must be numbered 1..k; `?e{0}` is missing")]
    EntityGap(u32),
}

/// One word of a pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternToken {
    Word(String),
    Slot(Hole),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub question_type: QuestionType,
    pub pattern: Vec<PatternToken>,
    pub lf_skeleton: LfNode,
    /// Tree paths (child indices from the root) of every placeholder.
    pub slot_map: BTreeMap<Hole, Vec<Vec<usize>>>,
}

fn parse_placeholder(word: &str) -> Option<Hole> {
    let inner = word.strip_prefix('<')?.strip_suffix('>')?;
    let split = inner.find(|c: char| c.is_ascii_digit())?;
    let (prefix, digits) = inner.split_at(split);
    let kind = [HoleKind::Entity, HoleKind::Predicate, HoleKind::Type, HoleKind::Number]
        .into_iter()
        .find(|k| k.prefix() == prefix)?;
    let index: u32 = digits.parse().ok().filter(|i| *i > 0)?;
    Some(Hole {
        kind,
        index: Some(index),
    })
}

pub fn parse_pattern(pattern: &str) -> Result<Vec<PatternToken>, TemplateError> {
    pattern
        .split_whitespace()
        .map(|w| match parse_placeholder(w) {
            Some(h) => Ok(PatternToken::Slot(h)),
            None if w.contains('<') || w.contains('>') => Err(TemplateError::BadPlaceholder(w.into())),
            None => Ok(PatternToken::Word(w.into())),
        })
        .collect()
}

fn hole_name(h: Hole) -> String {
    format!("{}{}", h.kind.prefix(), h.index.unwrap_or(0))
}

fn collect_paths(node: &LfNode, path: &mut Vec<usize>, out: &mut BTreeMap<Hole, Vec<Vec<usize>>>) {
    if let LfNode::Hole(h) = node {
        out.entry(*h).or_default().push(path.clone());
    }
    for (i, c) in node.children().iter().enumerate() {
        path.push(i);
        collect_paths(c, path, out);
        path.pop();
    }
}

pub fn expected_sort(q: QuestionType) -> Sort {
    match q.answer_kind() {
        AnswerKind::Entities => Sort::EntitySet,
        AnswerKind::Number => Sort::Number,
        AnswerKind::Boolean => Sort::Boolean,
    }
}

impl Template {
    pub fn new(question_type: QuestionType, pattern: &str, lf_skeleton: &str) -> Result<Self, TemplateError> {
        let skeleton = parse_lf(lf_skeleton)?;
        let found = typecheck(&skeleton)?;
        let expected = expected_sort(question_type);
        if found != expected {
            return Err(TemplateError::WrongSort {
                question_type,
                expected,
                found,
            });
        }
        let mut slot_map = BTreeMap::new();
        collect_paths(&skeleton, &mut Vec::new(), &mut slot_map);
        if let Some(h) = slot_map.keys().find(|h| h.index.is_none()) {
            return Err(TemplateError::Anonymous(*h));
        }

        let pattern = parse_pattern(pattern)?;
        let mentioned: BTreeSet<Hole> = pattern
            .iter()
            .filter_map(|t| match t {
                PatternToken::Slot(h) => Some(*h),
                PatternToken::Word(_) => None,
            })
            .collect();
        if let Some(h) = mentioned.iter().find(|h| !slot_map.contains_key(h)) {
            return Err(TemplateError::UnknownPlaceholder(hole_name(*h)));
        }
        let entity_slots: Vec<u32> = slot_map
            .keys()
            .filter(|h| h.kind == HoleKind::Entity)
            .filter_map(|h| h.index)
            .collect();
        if let Some(h) = slot_map
            .keys()
            .find(|h| h.kind == HoleKind::Entity && !mentioned.contains(h))
        {
            return Err(TemplateError::EntityNotMentioned(*h));
        }
        // BTreeMap order makes entity indices ascending
        for (expected, &got) in (1u32..).zip(&entity_slots) {
            if got != expected {
                return Err(TemplateError::EntityGap(expected));
            }
        }
        Ok(Template {
            question_type,
            pattern,
            lf_skeleton: skeleton,
            slot_map,
        })
    }

    /// Number of entity placeholders, `k` in `?e1 .. ?ek`.
    pub fn entity_slots(&self) -> u32 {
        self.slot_map
            .keys()
            .filter(|h| h.kind == HoleKind::Entity)
            .count() as u32
    }

    pub fn pattern_text(&self) -> String {
        self.pattern
            .iter()
            .map(|t| match t {
                PatternToken::Word(w) => w.clone(),
                PatternToken::Slot(h) => format!("<{}>", hole_name(*h)),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TemplateLine {
    question_type: String,
    pattern: String,
    lf_skeleton: String,
}

pub fn read_templates(path: &Path) -> Result<Vec<Template>> {
    read_versioned_json::<TemplateLine>(path)?
        .into_iter()
        .map(|(n, line)| {
            line.question_type
                .parse()
                .map_err(|_| TemplateError::UnknownQuestionType(line.question_type.clone()))
                .and_then(|q| Template::new(q, &line.pattern, &line.lf_skeleton))
                .map_err(|e| EngineError::format(path, n, e.to_string()))
        })
        .collect()
}

pub fn format_templates(templates: &[Template]) -> String {
    let lines: Vec<TemplateLine> = templates
        .iter()
        .map(|t| TemplateLine {
            question_type: t.question_type.name().into(),
            pattern: t.pattern_text(),
            lf_skeleton: print_lf(&t.lf_skeleton),
        })
        .collect();
    format_versioned_json(&lines)
}
