//! Per-question-type scoring: F1 over answer sets for entity questions,
//! exact-match accuracy for count and yes/no questions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::Symbol;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("length mismatch: {0} predictions, {1} gold values")]
    LengthMismatch(usize, usize),
    #[error("question `{0}` has a gold record but no prediction")]
    MissingPrediction(String),
    #[error("question `{0}` has a prediction but no gold record")]
    UnmatchedPrediction(String),
    #[error("question `{0}` appears more than once")]
    DuplicateQuestion(String),
    #[error("question `{id}`: predicted type `{pred}` differs from gold type `{gold}`")]
    CategoryMismatch {
        id: String,
        pred: QuestionType,
        gold: QuestionType,
    },
    #[error("question `{id}`: a {kind} answer does not fit category `{category}`")]
    FamilyMismatch {
        id: String,
        kind: AnswerKind,
        category: QuestionType,
    },
    #[error("unknown question type `{0}`")]
    UnknownQuestionType(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricFamily {
    F1,
    Accuracy,
}

/// The ten question categories, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuestionType {
    Clarification,
    ComparativeAll,
    LogicalAll,
    QuantitativeAll,
    SimpleCoreferenced,
    SimpleDirect,
    SimpleEllipsis,
    Verification,
    QuantitativeCount,
    ComparativeCount,
}

impl QuestionType {
    pub const ALL: [QuestionType; 10] = [
        QuestionType::Clarification,
        QuestionType::ComparativeAll,
        QuestionType::LogicalAll,
        QuestionType::QuantitativeAll,
        QuestionType::SimpleCoreferenced,
        QuestionType::SimpleDirect,
        QuestionType::SimpleEllipsis,
        QuestionType::Verification,
        QuestionType::QuantitativeCount,
        QuestionType::ComparativeCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QuestionType::Clarification => "Clarification",
            QuestionType::ComparativeAll => "Comparative Reasoning (All)",
            QuestionType::LogicalAll => "Logical Reasoning (All)",
            QuestionType::QuantitativeAll => "Quantitative Reasoning (All)",
            QuestionType::SimpleCoreferenced => "Simple Question (Coreferenced)",
            QuestionType::SimpleDirect => "Simple Question (Direct)",
            QuestionType::SimpleEllipsis => "Simple Question (Ellipsis)",
            QuestionType::Verification => "Verification (Boolean)",
            QuestionType::QuantitativeCount => "Quantitative Reasoning (Count)",
            QuestionType::ComparativeCount => "Comparative Reasoning (Count)",
        }
    }

    pub fn family(self) -> MetricFamily {
        match self {
            QuestionType::Verification
            | QuestionType::QuantitativeCount
            | QuestionType::ComparativeCount => MetricFamily::Accuracy,
            _ => MetricFamily::F1,
        }
    }

    /// The answer kind gold records of this category carry.
    pub fn answer_kind(self) -> AnswerKind {
        match self {
            QuestionType::Verification => AnswerKind::Boolean,
            QuestionType::QuantitativeCount | QuestionType::ComparativeCount => AnswerKind::Number,
            _ => AnswerKind::Entities,
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuestionType {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, MetricError> {
        QuestionType::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| MetricError::UnknownQuestionType(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnswerKind {
    Entities,
    Number,
    Boolean,
}

impl AnswerKind {
    pub fn name(self) -> &'static str {
        match self {
            AnswerKind::Entities => "entities",
            AnswerKind::Number => "number",
            AnswerKind::Boolean => "boolean",
        }
    }
}

impl fmt::Display for AnswerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Entities(BTreeSet<Symbol>),
    Number(u64),
    Boolean(bool),
}

impl Answer {
    pub fn kind(&self) -> AnswerKind {
        match self {
            Answer::Entities(_) => AnswerKind::Entities,
            Answer::Number(_) => AnswerKind::Number,
            Answer::Boolean(_) => AnswerKind::Boolean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalRecord {
    pub question_id: String,
    pub question_type: QuestionType,
    pub answer: Answer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Set precision, recall and F1.
///
/// An empty prediction scores 1 against an empty gold set and 0 otherwise;
/// recall mirrors this for an empty gold set.
pub fn f1_set<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> PrecisionRecall {
    let hits = pred.intersection(gold).count() as f64;
    let ratio = |denominator: usize| match (pred.is_empty() && gold.is_empty(), denominator) {
        (true, _) => 1.0,
        (false, 0) => 0.0,
        (false, d) => hits / d as f64,
    };
    let precision = ratio(pred.len());
    let recall = ratio(gold.len());
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    PrecisionRecall {
        precision,
        recall,
        f1,
    }
}

/// Fraction of exact matches; 1.0 for two empty lists.
pub fn accuracy<T: PartialEq>(preds: &[T], golds: &[T]) -> Result<f64, MetricError> {
    if preds.len() != golds.len() {
        return Err(MetricError::LengthMismatch(preds.len(), golds.len()));
    }
    if preds.is_empty() {
        return Ok(1.0);
    }
    let hits = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryScore {
    pub question_type: QuestionType,
    pub examples: usize,
    /// Mean F1 or accuracy in `[0, 1]`; `None` without examples.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub categories: Vec<CategoryScore>,
    /// Example-weighted mean over the F1 categories.
    pub overall_f1: CategoryTotals,
    /// Example-weighted mean over the accuracy categories.
    pub overall_accuracy: CategoryTotals,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryTotals {
    pub examples: usize,
    pub score: Option<f64>,
}

impl Report {
    pub fn category(&self, q: QuestionType) -> Option<&CategoryScore> {
        self.categories.iter().find(|c| c.question_type == q)
    }
}

/// Scores predictions against gold records joined on `question_id`.
pub fn aggregate(preds: &[EvalRecord], golds: &[EvalRecord]) -> Result<Report, MetricError> {
    let mut pred_by_id: BTreeMap<&str, &EvalRecord> = BTreeMap::new();
    for p in preds {
        if pred_by_id.insert(&p.question_id, p).is_some() {
            return Err(MetricError::DuplicateQuestion(p.question_id.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    // per category: (examples, score sum)
    let mut sums: BTreeMap<QuestionType, (usize, f64)> = BTreeMap::new();
    for g in golds {
        if !seen.insert(g.question_id.as_str()) {
            return Err(MetricError::DuplicateQuestion(g.question_id.clone()));
        }
        let p = pred_by_id
            .get(g.question_id.as_str())
            .ok_or_else(|| MetricError::MissingPrediction(g.question_id.clone()))?;
        let category = g.question_type;
        if p.question_type != category {
            return Err(MetricError::CategoryMismatch {
                id: g.question_id.clone(),
                pred: p.question_type,
                gold: category,
            });
        }
        for r in [g, *p] {
            let fits = match category.family() {
                MetricFamily::F1 => r.answer.kind() == AnswerKind::Entities,
                MetricFamily::Accuracy => r.answer.kind() != AnswerKind::Entities,
            };
            if !fits {
                return Err(MetricError::FamilyMismatch {
                    id: g.question_id.clone(),
                    kind: r.answer.kind(),
                    category,
                });
            }
        }
        let score = match (&p.answer, &g.answer) {
            (Answer::Entities(ps), Answer::Entities(gs)) => f1_set(ps, gs).f1,
            (pa, ga) => f64::from(u8::from(pa == ga)),
        };
        let entry = sums.entry(category).or_insert((0, 0.0));
        entry.0 += 1;
        entry.1 += score;
    }
    if let Some(extra) = preds.iter().find(|p| !seen.contains(p.question_id.as_str())) {
        return Err(MetricError::UnmatchedPrediction(extra.question_id.clone()));
    }

    let categories = QuestionType::ALL
        .iter()
        .map(|&q| {
            let (n, total) = sums.get(&q).copied().unwrap_or((0, 0.0));
            CategoryScore {
                question_type: q,
                examples: n,
                score: (n > 0).then(|| total / n as f64),
            }
        })
        .collect();
    let overall = |family: MetricFamily| {
        let (n, total) = sums
            .iter()
            .filter(|(q, _)| q.family() == family)
            .fold((0, 0.0), |(n, t), (_, (cn, ct))| (n + cn, t + ct));
        CategoryTotals {
            examples: n,
            score: (n > 0).then(|| total / n as f64),
        }
    };
    Ok(Report {
        categories,
        overall_f1: overall(MetricFamily::F1),
        overall_accuracy: overall(MetricFamily::Accuracy),
    })
}

fn write_row(f: &mut fmt::Formatter<'_>, name: &str, n: usize, score: Option<f64>) -> fmt::Result {
    match score {
        Some(s) => writeln!(f, "{name:<32} {n:>9} {:>9.2}%", 100.0 * s),
        None => writeln!(f, "{name:<32} {n:>9} {:>10}", "n/a"),
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (family, header, totals) in [
            (MetricFamily::F1, "F1 Score", self.overall_f1),
            (MetricFamily::Accuracy, "Accuracy", self.overall_accuracy),
        ] {
            writeln!(f, "{:<32} {:>9} {:>10}", "Question Type", "#Examples", header)?;
            write_row(f, "Overall", totals.examples, totals.score)?;
            for c in self.categories.iter().filter(|c| c.question_type.family() == family) {
                write_row(f, c.question_type.name(), c.examples, c.score)?;
            }
            if family == MetricFamily::F1 {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}
