//! Template-driven synthetic question generation.
//!
//! Placeholders are bound while walking the skeleton left to right, each
//! choice drawn from what the graph supports at that point: a `find`
//! subject has the predicate, a filter type occurs among the set being
//! filtered, a comparison number is one of the counts being compared. Any
//! `find` that comes out empty rejects the attempt.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use lasagne_core::lf::{execute, print_lf, Action, Hole, HoleKind, LfNode};
use lasagne_core::linking::{EdTag, TagSequence};
use lasagne_core::metrics::{Answer, EvalRecord, MetricFamily, QuestionType};
use lasagne_core::{ApproxPolicy, KnowledgeGraph, Symbol, Value};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{EngineError, Result};
use crate::io::{decode_answer, encode_answer, format_eval_records, format_tagged_utterance, format_versioned_json, parse_tagged_utterance, read_versioned_json, value_to_answer, write_text};
use crate::templates::{PatternToken, Template};

/// Attempts allowed per requested example.
pub const ATTEMPTS_PER_EXAMPLE: usize = 100;

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const GOLD_FILE: &str = "gold.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("no templates given")]
    NoTemplates,
    #[error("the knowledge graph has no triples")]
    EmptyGraph,
    #[error("gave up after {attempts} attempts; the graph cannot support the `{question_type}` template")]
    AttemptExhausted {
        question_type: QuestionType,
        attempts: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub question_type: QuestionType,
    pub question: String,
    pub lf: LfNode,
    /// The gold LF with entity positions left as `?e1 .. ?ek`.
    pub lf_sketch: LfNode,
    pub answer: Answer,
    pub utterance: TagSequence,
}

impl Example {
    pub fn eval_record(&self) -> EvalRecord {
        EvalRecord {
            question_id: self.id.clone(),
            question_type: self.question_type,
            answer: self.answer.clone(),
        }
    }
}

/// Precomputed per-graph lookups used while binding placeholders.
struct GraphView<'a> {
    kg: &'a KnowledgeGraph,
    triples: Vec<(Symbol, Symbol, Symbol)>,
    predicates: Vec<Symbol>,
    types: Vec<Symbol>,
    entities: Vec<Symbol>,
    subjects_by_predicate: BTreeMap<Symbol, Vec<Symbol>>,
    objects_by_predicate: BTreeMap<Symbol, Vec<Symbol>>,
}

impl<'a> GraphView<'a> {
    fn new(kg: &'a KnowledgeGraph) -> Self {
        let mut subjects: BTreeMap<Symbol, BTreeSet<Symbol>> = BTreeMap::new();
        let mut objects: BTreeMap<Symbol, BTreeSet<Symbol>> = BTreeMap::new();
        for t in kg.triples() {
            subjects.entry(t.predicate.clone()).or_default().insert(t.subject.clone());
            objects.entry(t.predicate.clone()).or_default().insert(t.object.clone());
        }
        let flatten = |m: BTreeMap<Symbol, BTreeSet<Symbol>>| m.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect();
        GraphView {
            kg,
            triples: kg
                .triples()
                .iter()
                .map(|t| (t.subject.clone(), t.predicate.clone(), t.object.clone()))
                .collect(),
            predicates: kg.predicates().iter().cloned().collect(),
            types: kg.types().cloned().collect(),
            entities: kg.entities().iter().cloned().collect(),
            subjects_by_predicate: flatten(subjects),
            objects_by_predicate: flatten(objects),
        }
    }

    fn types_of_all<'b>(&self, entities: impl IntoIterator<Item = &'b Symbol>) -> Vec<Symbol> {
        let mut out = BTreeSet::new();
        for e in entities {
            out.extend(self.kg.types_of(e).iter().cloned());
        }
        out.into_iter().collect()
    }
}

struct Binder<'v, 'a, R> {
    view: &'v GraphView<'a>,
    rng: &'v mut R,
    bound: BTreeMap<Hole, LfNode>,
}

fn terminal_id(node: &LfNode) -> Option<&Symbol> {
    match node {
        LfNode::Entity(s) | LfNode::Predicate(s) | LfNode::Type(s) => Some(s),
        _ => None,
    }
}

impl<R: Rng> Binder<'_, '_, R> {
    /// The id a terminal or an already bound placeholder stands for.
    fn known(&self, node: &LfNode) -> Option<Symbol> {
        match node {
            LfNode::Hole(h) => self.bound.get(h).and_then(terminal_id).cloned(),
            other => terminal_id(other).cloned(),
        }
    }

    fn used(&self, kind: HoleKind) -> BTreeSet<Symbol> {
        self.bound
            .iter()
            .filter(|(h, _)| h.kind == kind)
            .filter_map(|(_, n)| terminal_id(n).cloned())
            .collect()
    }

    /// Picks from `pool`, preferring values not yet bound to another
    /// placeholder of the same kind.
    fn pick_fresh(&mut self, pool: &[Symbol], kind: HoleKind) -> Option<Symbol> {
        let used = self.used(kind);
        let fresh: Vec<&Symbol> = pool.iter().filter(|s| !used.contains(*s)).collect();
        match fresh.choose(self.rng) {
            Some(s) => Some((*s).clone()),
            None => pool.choose(self.rng).cloned(),
        }
    }

    /// Binds `node` to `value` if it is an unbound placeholder and returns
    /// the filled node.
    fn bind(&mut self, node: &LfNode, value: LfNode) -> LfNode {
        if let LfNode::Hole(h) = node {
            self.bound.entry(*h).or_insert(value).clone()
        } else {
            node.clone()
        }
    }

    fn fill_generic(&mut self, node: &LfNode) -> Option<LfNode> {
        let LfNode::Hole(h) = node else {
            return Some(node.clone());
        };
        if let Some(b) = self.bound.get(h) {
            return Some(b.clone());
        }
        let view = self.view;
        let value = match h.kind {
            HoleKind::Entity => LfNode::Entity(self.pick_fresh(&view.entities, HoleKind::Entity)?),
            HoleKind::Predicate => LfNode::Predicate(view.predicates.choose(self.rng)?.clone()),
            HoleKind::Type => LfNode::Type(self.pick_fresh(&view.types, HoleKind::Type)?),
            HoleKind::Number => LfNode::Number(self.rng.random_range(0..=5)),
        };
        Some(self.bind(node, value))
    }

    fn evaluate(&self, node: &LfNode) -> Option<Value> {
        execute(node, self.view.kg, ApproxPolicy::default()).ok()
    }

    fn entities(&self, node: &LfNode) -> Option<BTreeSet<Symbol>> {
        match self.evaluate(node)? {
            Value::Entities(s) => Some(s),
            _ => None,
        }
    }

    fn instantiate(&mut self, node: &LfNode) -> Option<LfNode> {
        let LfNode::Call(action, args) = node else {
            return match node {
                LfNode::TypeSet(elems) => {
                    let filled = elems.iter().map(|e| self.fill_generic(e)).collect::<Option<_>>()?;
                    Some(LfNode::TypeSet(filled))
                }
                other => self.fill_generic(other),
            };
        };
        let view = self.view;
        match action {
            Action::Find | Action::FindReverse => {
                let forward = *action == Action::Find;
                let (e, p) = match (self.known(&args[0]), self.known(&args[1])) {
                    (Some(e), Some(p)) => (e, p),
                    (Some(e), None) => {
                        let preds: Vec<Symbol> = if forward {
                            view.kg.outgoing_predicates(&e).cloned().collect()
                        } else {
                            view.kg.incoming_predicates(&e).cloned().collect()
                        };
                        let p = preds.choose(self.rng)?.clone();
                        (e, p)
                    }
                    (None, Some(p)) => {
                        let by = if forward { &view.subjects_by_predicate } else { &view.objects_by_predicate };
                        let e = self.pick_fresh(by.get(&p)?, HoleKind::Entity)?;
                        (e, p)
                    }
                    (None, None) => {
                        let (s, p, o) = view.triples.choose(self.rng)?.clone();
                        (if forward { s } else { o }, p)
                    }
                };
                let call = LfNode::Call(
                    *action,
                    vec![self.bind(&args[0], LfNode::Entity(e)), self.bind(&args[1], LfNode::Predicate(p))],
                );
                (!self.entities(&call)?.is_empty()).then_some(call)
            }
            Action::FilterType => {
                let set = self.instantiate(&args[0])?;
                let members = self.entities(&set)?;
                let tp = match self.known(&args[1]) {
                    Some(tp) => tp,
                    None => {
                        let pool = view.types_of_all(&members);
                        self.pick_fresh(&pool, HoleKind::Type)?
                    }
                };
                Some(LfNode::Call(*action, vec![set, self.bind(&args[1], LfNode::Type(tp))]))
            }
            Action::FilterMultiTypes => {
                let set = self.instantiate(&args[0])?;
                let members = self.entities(&set)?;
                let pool = view.types_of_all(&members);
                let mut elems = Vec::new();
                for e in args[1].children() {
                    let tp = match self.known(e) {
                        Some(tp) => tp,
                        None => match self.pick_fresh(&pool, HoleKind::Type) {
                            Some(tp) => tp,
                            None => self.pick_fresh(&view.types, HoleKind::Type)?,
                        },
                    };
                    elems.push(self.bind(e, LfNode::Type(tp)));
                }
                Some(LfNode::Call(*action, vec![set, LfNode::TypeSet(elems)]))
            }
            Action::FindTupleCounts | Action::FindReverseTupleCounts => {
                let forward = *action == Action::FindTupleCounts;
                let p = match self.known(&args[0]) {
                    Some(p) => p,
                    None => view.predicates.choose(self.rng)?.clone(),
                };
                let subjects = view.subjects_by_predicate.get(&p)?;
                let objects = view.objects_by_predicate.get(&p)?;
                let (keys, values) = if forward { (subjects, objects) } else { (objects, subjects) };
                let tp1 = match self.known(&args[1]) {
                    Some(t) => t,
                    None => self.pick_fresh(&view.types_of_all(keys), HoleKind::Type)?,
                };
                let p_node = self.bind(&args[0], LfNode::Predicate(p));
                let tp1_node = self.bind(&args[1], LfNode::Type(tp1));
                let tp2 = match self.known(&args[2]) {
                    Some(t) => t,
                    None => self.pick_fresh(&view.types_of_all(values), HoleKind::Type)?,
                };
                let tp2_node = self.bind(&args[2], LfNode::Type(tp2));
                Some(LfNode::Call(*action, vec![p_node, tp1_node, tp2_node]))
            }
            a if a.is_comparison() => {
                let is_open_number = |n: &LfNode| matches!(n, LfNode::Hole(h) if h.kind == HoleKind::Number);
                let mut filled: Vec<Option<LfNode>> = vec![None, None];
                for (i, arg) in args.iter().enumerate() {
                    let open = is_open_number(arg) && !self.bound.contains_key(&hole_of(arg));
                    if !open {
                        filled[i] = Some(self.instantiate(arg)?);
                    }
                }
                for i in 0..2 {
                    if filled[i].is_none() {
                        let dict = filled[1 - i].as_ref()?;
                        let Value::Counts(counts) = self.evaluate(dict)? else {
                            return None;
                        };
                        let values: BTreeSet<u64> = counts.values().copied().collect();
                        let values: Vec<u64> = values.into_iter().collect();
                        let n = *values.choose(self.rng)?;
                        filled[i] = Some(self.bind(&args[i], LfNode::Number(n)));
                    }
                }
                Some(LfNode::Call(*action, filled.into_iter().collect::<Option<_>>()?))
            }
            Action::IsIn => {
                let entity_pos = args.iter().position(|a| {
                    matches!(a, LfNode::Entity(_)) || matches!(a, LfNode::Hole(h) if h.kind == HoleKind::Entity)
                })?;
                let set_pos = 1 - entity_pos;
                let set = self.instantiate(&args[set_pos])?;
                let members: Vec<Symbol> = self.entities(&set)?.into_iter().collect();
                let e = match self.known(&args[entity_pos]) {
                    Some(e) => e,
                    None if self.rng.random_bool(0.5) => members.choose(self.rng)?.clone(),
                    None => {
                        // a same-typed entity keeps negative questions plausible
                        let pool: Vec<Symbol> = view
                            .types_of_all(&members)
                            .iter()
                            .flat_map(|t| view.kg.entities_of_type(t).iter().cloned())
                            .collect::<BTreeSet<_>>()
                            .into_iter()
                            .collect();
                        let pool = if pool.is_empty() { view.entities.clone() } else { pool };
                        pool.choose(self.rng)?.clone()
                    }
                };
                let e_node = self.bind(&args[entity_pos], LfNode::Entity(e));
                let mut out = vec![LfNode::Number(0), LfNode::Number(0)];
                out[entity_pos] = e_node;
                out[set_pos] = set;
                Some(LfNode::Call(*action, out))
            }
            _ => {
                let filled = args.iter().map(|a| self.instantiate(a)).collect::<Option<_>>()?;
                Some(LfNode::Call(*action, filled))
            }
        }
    }
}

fn hole_of(node: &LfNode) -> Hole {
    match node {
        LfNode::Hole(h) => *h,
        _ => unreachable!("checked by caller"),
    }
}

/// Surface text and tagged utterance for a bound template.
fn render(kg: &KnowledgeGraph, template: &Template, bound: &BTreeMap<Hole, LfNode>) -> Option<(String, TagSequence)> {
    let mut words: Vec<String> = Vec::new();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let mut slots = Vec::new();
    let mut push = |word: &str, tag: EdTag, slot: u32| {
        words.push(word.to_string());
        tokens.push(word.to_lowercase());
        tags.push(tag);
        slots.push(slot);
    };
    for token in &template.pattern {
        match token {
            PatternToken::Word(w) => push(w, EdTag::Outside, 0),
            PatternToken::Slot(h) => match bound.get(h)? {
                LfNode::Entity(e) => {
                    // the tag carries the entity's first type; untyped
                    // entities cannot be tagged
                    let tp = kg.types_of(e).iter().next()?.clone();
                    let label = kg.display(e);
                    for (i, w) in label.split_whitespace().enumerate() {
                        let tag = if i == 0 { EdTag::Begin(tp.clone()) } else { EdTag::Inside(tp.clone()) };
                        push(w, tag, h.index.unwrap_or(0));
                    }
                }
                LfNode::Predicate(s) | LfNode::Type(s) => push(s, EdTag::Outside, 0),
                LfNode::Number(n) => push(&n.to_string(), EdTag::Outside, 0),
                _ => return None,
            },
        }
    }
    let question = words.join(" ");
    let seq = TagSequence::new(tokens, tags, slots).ok()?;
    Some((question, seq))
}

fn try_example<R: Rng>(view: &GraphView<'_>, template: &Template, rng: &mut R, id: &str) -> Option<Example> {
    let mut binder = Binder {
        view,
        rng,
        bound: BTreeMap::new(),
    };
    let lf = binder.instantiate(&template.lf_skeleton)?;
    if !lf.holes().is_empty() {
        return None;
    }
    let value = execute(&lf, view.kg, ApproxPolicy::default()).ok()?;
    let answer = value_to_answer(&value)?;
    if template.question_type.family() == MetricFamily::F1 && matches!(&answer, Answer::Entities(s) if s.is_empty()) {
        return None;
    }
    let bound = binder.bound;
    let (question, utterance) = render(view.kg, template, &bound)?;
    let lf_sketch = template
        .lf_skeleton
        .fill_holes(&mut |h| if h.kind == HoleKind::Entity { None } else { bound.get(&h).cloned() });
    Some(Example {
        id: id.to_string(),
        question_type: template.question_type,
        question,
        lf,
        lf_sketch,
        answer,
        utterance,
    })
}

/// Generates `n` examples, cycling through `templates` in order.
///
/// Example `i` draws from its own ChaCha stream (`seed`, stream `i`), so
/// the output depends only on the inputs. At most
/// `ATTEMPTS_PER_EXAMPLE · n` attempts are made in total.
pub fn generate_dataset(
    kg: &KnowledgeGraph,
    templates: &[Template],
    n: usize,
    seed: u64,
) -> Result<Vec<Example>, GenerateError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if templates.is_empty() {
        return Err(GenerateError::NoTemplates);
    }
    if kg.is_empty() {
        return Err(GenerateError::EmptyGraph);
    }
    let view = GraphView::new(kg);
    let budget = ATTEMPTS_PER_EXAMPLE * n;
    let mut attempts = 0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let template = &templates[i % templates.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let id = format!("q{i:05}");
        loop {
            if attempts == budget {
                return Err(GenerateError::AttemptExhausted {
                    question_type: template.question_type,
                    attempts,
                });
            }
            attempts += 1;
            if let Some(ex) = try_example(&view, template, &mut rng, &id) {
                out.push(ex);
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct ExampleLine {
    id: String,
    question_type: String,
    question: String,
    lf: String,
    lf_sketch: String,
    answer_kind: String,
    answer: String,
    utterance: String,
}

impl From<&Example> for ExampleLine {
    fn from(e: &Example) -> Self {
        ExampleLine {
            id: e.id.clone(),
            question_type: e.question_type.name().into(),
            question: e.question.clone(),
            lf: print_lf(&e.lf),
            lf_sketch: print_lf(&e.lf_sketch),
            answer_kind: e.answer.kind().name().into(),
            answer: encode_answer(&e.answer),
            utterance: format_tagged_utterance(&e.utterance),
        }
    }
}

pub fn format_dataset(examples: &[Example]) -> String {
    let lines: Vec<ExampleLine> = examples.iter().map(ExampleLine::from).collect();
    format_versioned_json(&lines)
}

/// Writes `dataset.jsonl` and `gold.jsonl` into `dir`, creating it if needed.
pub fn write_dataset(dir: &Path, examples: &[Example]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| EngineError::io(dir, e))?;
    write_text(&dir.join(DATASET_FILE), &format_dataset(examples))?;
    let gold: Vec<EvalRecord> = examples.iter().map(Example::eval_record).collect();
    write_text(&dir.join(GOLD_FILE), &format_eval_records(&gold))
}

pub fn read_dataset(path: &Path) -> Result<Vec<Example>> {
    read_versioned_json::<ExampleLine>(path)?
        .into_iter()
        .map(|(n, l)| {
            let bad = |m: String| EngineError::format(path, n, m);
            Ok(Example {
                question_type: l.question_type.parse().map_err(|e: lasagne_core::metrics::MetricError| bad(e.to_string()))?,
                question: l.question,
                lf: lasagne_core::lf::parse_lf(&l.lf).map_err(|e| bad(format!("lf: {e}")))?,
                lf_sketch: lasagne_core::lf::parse_lf(&l.lf_sketch).map_err(|e| bad(format!("lf_sketch: {e}")))?,
                answer: decode_answer(&l.answer_kind, &l.answer).map_err(bad)?,
                utterance: parse_tagged_utterance(&l.utterance).map_err(bad)?,
                id: l.id,
            })
        })
        .collect()
}
