//! Executor for well-sorted logical forms.
//!
//! Children are evaluated depth-first, left to right, before their parent
//! action is applied.

use alloc::collections::{BTreeMap, BTreeSet};
use core::fmt;

use thiserror::Error;

use super::ast::{Action, Hole, LfNode, Sort};
use super::typecheck::{typecheck, SortError};
use crate::kg::KnowledgeGraph;
use crate::Symbol;

pub type EntitySet = BTreeSet<Symbol>;
pub type CountMap = BTreeMap<Symbol, u64>;

/// Result of executing a logical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Entities(EntitySet),
    Counts(CountMap),
    Bool(bool),
    Number(u64),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Entities(_) => Sort::EntitySet,
            Value::Counts(_) => Sort::CountMap,
            Value::Bool(_) => Sort::Boolean,
            Value::Number(_) => Sort::Number,
        }
    }

    pub fn as_entities(&self) -> Option<&EntitySet> {
        match self {
            Value::Entities(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Entities(s) => {
                f.write_str("{")?;
                for (i, e) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(e)?;
                }
                f.write_str("}")
            }
            Value::Counts(d) => {
                f.write_str("{")?;
                for (i, (k, v)) in d.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                f.write_str("}")
            }
            Value::Bool(b) => write!(f, "{b}"),
            Value::Number(n) => write!(f, "{n}"),
        }
    }
}

/// Tolerance used by `approx(dict, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxPolicy {
    /// `max(floor, round(percent · n / 100))`.
    Scaled { percent: u64, floor: u64 },
    /// A constant absolute tolerance.
    Fixed(u64),
}

impl Default for ApproxPolicy {
    fn default() -> Self {
        ApproxPolicy::Scaled {
            percent: 10,
            floor: 1,
        }
    }
}

impl ApproxPolicy {
    pub fn tolerance(self, n: u64) -> u64 {
        match self {
            ApproxPolicy::Scaled { percent, floor } => {
                // integer round-half-up of percent·n/100
                let scaled = (u128::from(percent) * u128::from(n) + 50) / 100;
                floor.max(u64::try_from(scaled).unwrap_or(u64::MAX))
            }
            ApproxPolicy::Fixed(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error("unfilled placeholder `{0}`")]
    Unbound(Hole),
}

/// Type-checks `node` and evaluates it against `kg`.
pub fn execute(node: &LfNode, kg: &KnowledgeGraph, policy: ApproxPolicy) -> Result<Value, ExecError> {
    typecheck(node)?;
    if let Some(h) = node.holes().first() {
        return Err(ExecError::Unbound(*h));
    }
    Ok(Executor { kg, policy }.eval(node))
}

struct Executor<'a> {
    kg: &'a KnowledgeGraph,
    policy: ApproxPolicy,
}

// The tree has been sort-checked and contains no placeholders, so every
// pattern below that falls through is unreachable in practice; those arms
// return the empty value of the expected sort.
impl Executor<'_> {
    fn eval(&self, node: &LfNode) -> Value {
        match node {
            LfNode::Number(n) => Value::Number(*n),
            LfNode::Call(action, args) => self.apply(*action, args),
            _ => Value::Entities(EntitySet::new()),
        }
    }

    fn set(&self, node: &LfNode) -> EntitySet {
        match self.eval(node) {
            Value::Entities(s) => s,
            _ => EntitySet::new(),
        }
    }

    fn counts(&self, node: &LfNode) -> CountMap {
        match self.eval(node) {
            Value::Counts(d) => d,
            _ => CountMap::new(),
        }
    }

    fn apply(&self, action: Action, args: &[LfNode]) -> Value {
        let kg = self.kg;
        match action {
            Action::Find => {
                Value::Entities(kg.objects_of(id(&args[0]), id(&args[1])).clone())
            }
            Action::FindReverse => {
                Value::Entities(kg.subjects_of(id(&args[0]), id(&args[1])).clone())
            }
            Action::FilterType => {
                let set = self.set(&args[0]);
                let tp = id(&args[1]);
                Value::Entities(set.into_iter().filter(|e| kg.has_type(e, tp)).collect())
            }
            Action::FilterMultiTypes => {
                let set = self.set(&args[0]);
                let types: BTreeSet<&str> = args[1].children().iter().map(id).collect();
                Value::Entities(
                    set.into_iter()
                        .filter(|e| kg.types_of(e).iter().any(|t| types.contains(t.as_str())))
                        .collect(),
                )
            }
            Action::FindTupleCounts | Action::FindReverseTupleCounts => {
                let (p, tp1, tp2) = (id(&args[0]), id(&args[1]), id(&args[2]));
                let counts = kg
                    .entities_of_type(tp1)
                    .iter()
                    .map(|e| {
                        let related = if action == Action::FindTupleCounts {
                            kg.objects_of(e, p)
                        } else {
                            kg.subjects_of(e, p)
                        };
                        let n = related.iter().filter(|x| kg.has_type(x, tp2)).count();
                        (e.clone(), n as u64)
                    })
                    .collect();
                Value::Counts(counts)
            }
            Action::Argmin | Action::Argmax => {
                let d = self.counts(&args[0]);
                let best = if action == Action::Argmax {
                    d.values().max()
                } else {
                    d.values().min()
                };
                let set = match best {
                    Some(&b) => d.iter().filter(|(_, &v)| v == b).map(|(k, _)| k.clone()).collect(),
                    None => EntitySet::new(),
                };
                Value::Entities(set)
            }
            Action::IsIn => {
                let (set, entity) = match (&args[0], &args[1]) {
                    (LfNode::Entity(e), other) | (other, LfNode::Entity(e)) => (self.set(other), e),
                    _ => return Value::Bool(false),
                };
                Value::Bool(set.contains(entity))
            }
            Action::Count => Value::Number(self.set(&args[0]).len() as u64),
            a if a.is_comparison() => {
                let (left, right) = (self.eval(&args[0]), self.eval(&args[1]));
                let (d, n) = match (left, right) {
                    (Value::Counts(d), Value::Number(n)) | (Value::Number(n), Value::Counts(d)) => (d, n),
                    _ => return Value::Entities(EntitySet::new()),
                };
                Value::Entities(compare(a, &d, n, self.policy))
            }
            // union / intersection / difference
            a => match (self.eval(&args[0]), self.eval(&args[1])) {
                (Value::Entities(x), Value::Entities(y)) => Value::Entities(match a {
                    Action::Union => x.union(&y).cloned().collect(),
                    Action::Intersection => x.intersection(&y).cloned().collect(),
                    _ => x.difference(&y).cloned().collect(),
                }),
                (Value::Counts(x), Value::Counts(y)) => Value::Counts(merge_counts(a, x, &y)),
                _ => Value::Entities(EntitySet::new()),
            },
        }
    }
}

fn id(node: &LfNode) -> &str {
    match node {
        LfNode::Entity(s) | LfNode::Predicate(s) | LfNode::Type(s) => s,
        _ => "",
    }
}

/// Keys of `d` whose count satisfies the comparison against `n`.
pub fn compare(action: Action, d: &CountMap, n: u64, policy: ApproxPolicy) -> EntitySet {
    let tol = policy.tolerance(n);
    d.iter()
        .filter(|(_, &v)| match action {
            Action::Greater => v > n,
            Action::Lesser => v < n,
            Action::Equal => v == n,
            Action::Atmost => v <= n,
            Action::Atleast => v >= n,
            Action::Approx => v.abs_diff(n) <= tol,
            _ => false,
        })
        .map(|(k, _)| k.clone())
        .collect()
}

/// Union sums counts, intersection keeps common keys at the smaller count,
/// difference keeps keys only present on the left.
pub fn merge_counts(action: Action, mut left: CountMap, right: &CountMap) -> CountMap {
    match action {
        Action::Union => {
            for (k, v) in right {
                *left.entry(k.clone()).or_insert(0) += v;
            }
            left
        }
        Action::Intersection => left
            .into_iter()
            .filter_map(|(k, v)| right.get(&k).map(|w| (k, v.min(*w))))
            .collect(),
        _ => left.into_iter().filter(|(k, _)| !right.contains_key(k)).collect(),
    }
}
