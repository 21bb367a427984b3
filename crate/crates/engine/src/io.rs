//! Text file formats: the knowledge-graph TSV files, LF batch files, tagged
//! utterances, embeddings, graph dumps and evaluation records.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use lasagne_core::gat::NodeEmbeddings;
use lasagne_core::graph::{GraphNode, TypePredicateGraph};
use lasagne_core::linking::{EdTag, TagSequence};
use lasagne_core::matrix::Matrix;
use lasagne_core::metrics::{Answer, EvalRecord, QuestionType};
use lasagne_core::{KnowledgeGraph, Symbol, Value};
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

/// First line of every versioned file written by this crate.
pub const FORMAT_HEADER: &str = "format: lasagne-engine/1";

pub const TRIPLES_FILE: &str = "triples.tsv";
pub const LABELS_FILE: &str = "labels.tsv";
pub const TYPES_FILE: &str = "types.tsv";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| EngineError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| EngineError::io(path, e))
}

/// Non-blank lines with their 1-based line numbers, `\r` stripped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Content lines of a versioned file, minus its header.
///
/// A missing header is accepted; a header naming another format is not.
fn versioned_lines<'a>(path: &Path, text: &'a str) -> Result<Vec<(usize, &'a str)>> {
    let mut lines: Vec<(usize, &str)> = content_lines(text).collect();
    if let Some(&(n, first)) = lines.first() {
        if first.starts_with("format:") {
            if first.trim() != FORMAT_HEADER {
                return Err(EngineError::format(
                    path,
                    n,
                    format!("unsupported format `{}`, expected `{FORMAT_HEADER}`", first.trim()),
                ));
            }
            lines.remove(0);
        }
    }
    Ok(lines)
}

fn tab_fields<'a>(path: &Path, line_no: usize, line: &'a str, want: usize) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != want {
        return Err(EngineError::format(
            path,
            line_no,
            format!("expected {want} tab-separated fields, found {}", fields.len()),
        ));
    }
    Ok(fields)
}

// ---------------------------------------------------------------------------
// knowledge graph

/// Loads a knowledge graph from its three TSV files.
///
/// Duplicate labels keep the last value; the count is available through
/// [`KnowledgeGraph::stats`].
pub fn load_kg(triples: &Path, labels: &Path, types: &Path) -> Result<KnowledgeGraph> {
    let mut b = KnowledgeGraph::builder();
    let text = read_text(triples)?;
    for (n, line) in content_lines(&text) {
        let f = tab_fields(triples, n, line, 3)?;
        b.triple(f[0], f[1], f[2])
            .map_err(|e| EngineError::format(triples, n, e.to_string()))?;
    }
    let text = read_text(types)?;
    for (n, line) in content_lines(&text) {
        let f = tab_fields(types, n, line, 2)?;
        b.add_type(f[0], f[1])
            .map_err(|e| EngineError::format(types, n, e.to_string()))?;
    }
    let text = read_text(labels)?;
    for (n, line) in content_lines(&text) {
        let f = tab_fields(labels, n, line, 2)?;
        b.add_label(f[0], f[1])
            .map_err(|e| EngineError::format(labels, n, e.to_string()))?;
    }
    Ok(b.build())
}

/// Loads `triples.tsv`, `labels.tsv` and `types.tsv` from `dir`.
pub fn load_kg_dir(dir: &Path) -> Result<KnowledgeGraph> {
    load_kg(&dir.join(TRIPLES_FILE), &dir.join(LABELS_FILE), &dir.join(TYPES_FILE))
}

// ---------------------------------------------------------------------------
// logical forms

/// One LF per line; blank lines and `#` comments are skipped.
pub fn read_lf_batch(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = read_text(path)?;
    Ok(content_lines(&text)
        .filter(|(_, l)| !l.trim_start().starts_with('#'))
        .map(|(n, l)| (n, l.trim().to_string()))
        .collect())
}

// ---------------------------------------------------------------------------
// tagged utterances

/// Parses `token|edtag|slot` triples separated by spaces.
///
/// Each triple is split from the right, so tokens may contain `|`.
pub fn parse_tagged_utterance(line: &str) -> std::result::Result<TagSequence, String> {
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let mut slots = Vec::new();
    for item in line.split_whitespace() {
        let mut parts = item.rsplitn(3, '|');
        let (Some(slot), Some(tag), Some(token)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("`{item}` is not token|tag|slot"));
        };
        if token.is_empty() {
            return Err(format!("`{item}` has an empty token"));
        }
        let slot: u32 = slot.parse().map_err(|_| format!("bad slot index `{slot}` in `{item}`"))?;
        let tag: EdTag = tag.parse().map_err(|e| format!("{e}"))?;
        tokens.push(token.to_string());
        tags.push(tag);
        slots.push(slot);
    }
    TagSequence::new(tokens, tags, slots).map_err(|e| e.to_string())
}

pub fn format_tagged_utterance(seq: &TagSequence) -> String {
    seq.tokens()
        .iter()
        .zip(seq.ed_tags())
        .zip(seq.slot_tags())
        .map(|((t, tag), slot)| format!("{t}|{tag}|{slot}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn read_utterances(path: &Path) -> Result<Vec<(usize, TagSequence)>> {
    let text = read_text(path)?;
    content_lines(&text)
        .filter(|(_, l)| !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            parse_tagged_utterance(l)
                .map(|s| (n, s))
                .map_err(|m| EngineError::format(path, n, m))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// graph dump and embeddings

/// One directed link per line, `node_a<TAB>node_b`; a node without links is
/// written alone on its line so the dump keeps the full node set.
pub fn format_graph(graph: &TypePredicateGraph) -> String {
    let mut out = String::new();
    for (a, b) in graph.links() {
        out.push_str(&format!("{a}\t{b}\n"));
    }
    for n in graph.isolated() {
        out.push_str(&format!("{n}\n"));
    }
    out
}

pub fn write_graph(path: &Path, graph: &TypePredicateGraph) -> Result<()> {
    write_text(path, &format_graph(graph))
}

pub fn read_graph(path: &Path) -> Result<TypePredicateGraph> {
    let text = read_text(path)?;
    let mut nodes = BTreeSet::new();
    let mut links = Vec::new();
    let node = |n: usize, s: &str| -> Result<GraphNode> {
        s.trim()
            .parse::<GraphNode>()
            .map_err(|e| EngineError::format(path, n, e.to_string()))
    };
    for (n, line) in content_lines(&text) {
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            [single] => {
                nodes.insert(node(n, single)?);
            }
            [a, b] => links.push((node(n, a)?, node(n, b)?)),
            _ => {
                return Err(EngineError::format(
                    path,
                    n,
                    format!("expected 1 or 2 tab-separated nodes, found {}", fields.len()),
                ))
            }
        }
    }
    TypePredicateGraph::from_links(nodes, links).map_err(|e| EngineError::format(path, 0, e.to_string()))
}

/// `node_id` followed by space-separated decimals, one row per node.
pub fn format_embeddings(graph: &TypePredicateGraph, h: &NodeEmbeddings) -> String {
    let mut out = String::new();
    for (i, node) in graph.nodes().iter().enumerate() {
        out.push_str(&node.to_string());
        for v in h.row(i) {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_embeddings(path: &Path, graph: &TypePredicateGraph, h: &NodeEmbeddings) -> Result<()> {
    write_text(path, &format_embeddings(graph, h))
}

/// Reads an embeddings file and orders its rows by the graph's nodes.
///
/// Rows for nodes outside the graph are ignored; a graph node without a row
/// is an error naming that node.
pub fn read_embeddings(path: &Path, graph: &TypePredicateGraph) -> Result<NodeEmbeddings> {
    let text = read_text(path)?;
    let mut rows: BTreeMap<String, (usize, Vec<f64>)> = BTreeMap::new();
    let mut dim: Option<usize> = None;
    for (n, line) in content_lines(&text) {
        let mut fields = line.split_whitespace();
        let id = fields.next().unwrap_or_default();
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| EngineError::format(path, n, format!("`{f}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(EngineError::format(
                    path,
                    n,
                    format!("row has {} values, earlier rows have {d}", values.len()),
                ))
            }
            Some(_) => {}
        }
        if values.is_empty() {
            return Err(EngineError::format(path, n, "row has no values"));
        }
        if rows.insert(id.to_string(), (n, values)).is_some() {
            return Err(EngineError::format(path, n, format!("second row for `{id}`")));
        }
    }
    let d = dim.unwrap_or(0);
    let mut data = Vec::with_capacity(graph.len() * d);
    for node in graph.nodes() {
        let name = node.to_string();
        let (_, row) = rows
            .get(&name)
            .ok_or_else(|| EngineError::Invalid(format!("{}: no embedding for node `{name}`", path.display())))?;
        data.extend_from_slice(row);
    }
    let m = Matrix::from_vec(graph.len(), d, data).expect("row lengths checked above");
    Ok(NodeEmbeddings::new(m)?)
}

// ---------------------------------------------------------------------------
// evaluation records

#[derive(Debug, Serialize, Deserialize)]
struct EvalLine {
    question_id: String,
    question_type: String,
    answer_kind: String,
    answer: String,
}

/// Comma-separated ids, an integer, or `true`/`false`.
pub fn encode_answer(answer: &Answer) -> String {
    match answer {
        Answer::Entities(s) => s.iter().map(Symbol::as_str).collect::<Vec<_>>().join(","),
        Answer::Number(n) => n.to_string(),
        Answer::Boolean(b) => b.to_string(),
    }
}

pub fn decode_answer(kind: &str, text: &str) -> std::result::Result<Answer, String> {
    match kind {
        "entities" => Ok(Answer::Entities(
            text.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(Symbol::from)
                .collect(),
        )),
        "number" => text
            .trim()
            .parse()
            .map(Answer::Number)
            .map_err(|_| format!("`{text}` is not a count")),
        "boolean" => match text.trim() {
            "true" => Ok(Answer::Boolean(true)),
            "false" => Ok(Answer::Boolean(false)),
            other => Err(format!("`{other}` is not true or false")),
        },
        other => Err(format!("unknown answer kind `{other}`")),
    }
}

/// Converts an execution result to an answer; count maps are not answers.
pub fn value_to_answer(value: &Value) -> Option<Answer> {
    match value {
        Value::Entities(s) => Some(Answer::Entities(s.clone())),
        Value::Number(n) => Some(Answer::Number(*n)),
        Value::Bool(b) => Some(Answer::Boolean(*b)),
        Value::Counts(_) => None,
    }
}

pub fn eval_record_json(r: &EvalRecord) -> String {
    let line = EvalLine {
        question_id: r.question_id.clone(),
        question_type: r.question_type.name().to_string(),
        answer_kind: r.answer.kind().name().to_string(),
        answer: encode_answer(&r.answer),
    };
    serde_json::to_string(&line).expect("plain strings serialize")
}

pub fn format_eval_records(records: &[EvalRecord]) -> String {
    let mut out = format!("{FORMAT_HEADER}\n");
    for r in records {
        out.push_str(&eval_record_json(r));
        out.push('\n');
    }
    out
}

pub fn write_eval_records(path: &Path, records: &[EvalRecord]) -> Result<()> {
    write_text(path, &format_eval_records(records))
}

pub fn read_eval_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let text = read_text(path)?;
    versioned_lines(path, &text)?
        .into_iter()
        .map(|(n, l)| {
            let line: EvalLine = serde_json::from_str(l).map_err(|e| EngineError::format(path, n, e.to_string()))?;
            let question_type: QuestionType = line
                .question_type
                .parse()
                .map_err(|e: lasagne_core::metrics::MetricError| EngineError::format(path, n, e.to_string()))?;
            let answer = decode_answer(&line.answer_kind, &line.answer).map_err(|m| EngineError::format(path, n, m))?;
            Ok(EvalRecord {
                question_id: line.question_id,
                question_type,
                answer,
            })
        })
        .collect()
}

/// JSON lines of a versioned file, parsed into `T`.
pub fn read_versioned_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>> {
    let text = read_text(path)?;
    versioned_lines(path, &text)?
        .into_iter()
        .map(|(n, l)| {
            serde_json::from_str(l)
                .map(|v| (n, v))
                .map_err(|e| EngineError::format(path, n, e.to_string()))
        })
        .collect()
}

pub fn format_versioned_json<T: Serialize>(items: &[T]) -> String {
    let mut out = format!("{FORMAT_HEADER}\n");
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable"));
        out.push('\n');
    }
    out
}
