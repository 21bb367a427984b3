//! Independent reference implementations used as test oracles.
//!
//! Nothing in here calls into the executor or the GAT code; the reference
//! interpreter re-scans the raw triple list at every step and the GAT oracle
//! evaluates the attention equations with plain nested vectors.

#![allow(dead_code)]

pub mod checks;

use std::collections::{BTreeMap, BTreeSet};

use lasagne_core::lf::{Action, LfNode};
use lasagne_core::{KnowledgeGraph, Value};
use rand::seq::IndexedRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// random knowledge graphs

#[derive(Debug, Clone)]
pub struct RawKg {
    pub triples: Vec<(String, String, String)>,
    pub types: Vec<(String, String)>,
    pub entities: Vec<String>,
    pub predicates: Vec<String>,
    pub type_ids: Vec<String>,
}

impl RawKg {
    pub fn build(&self) -> KnowledgeGraph {
        let mut b = KnowledgeGraph::builder();
        for (s, p, o) in &self.triples {
            b.triple(s, p, o).unwrap();
        }
        for (e, t) in &self.types {
            b.add_type(e, t).unwrap();
        }
        b.build()
    }
}

/// Up to 50 entities, 5 predicates, 6 types; triples and type assertions
/// are deduplicated.
pub fn random_kg(rng: &mut impl Rng) -> RawKg {
    let n_entities = rng.random_range(2..=50);
    let n_predicates = rng.random_range(1..=5);
    let n_types = rng.random_range(1..=6);
    let entities: Vec<String> = (0..n_entities).map(|i| format!("e{i}")).collect();
    let predicates: Vec<String> = (0..n_predicates).map(|i| format!("p{i}")).collect();
    let type_ids: Vec<String> = (0..n_types).map(|i| format!("t{i}")).collect();
    let n_triples = rng.random_range(0..=3 * n_entities);
    let mut triples = BTreeSet::new();
    for _ in 0..n_triples {
        triples.insert((
            entities.choose(rng).unwrap().clone(),
            predicates.choose(rng).unwrap().clone(),
            entities.choose(rng).unwrap().clone(),
        ));
    }
    let mut types = BTreeSet::new();
    for e in &entities {
        for _ in 0..rng.random_range(0..=2) {
            types.insert((e.clone(), type_ids.choose(rng).unwrap().clone()));
        }
    }
    RawKg {
        triples: triples.into_iter().collect(),
        types: types.into_iter().collect(),
        entities,
        predicates,
        type_ids,
    }
}

// ---------------------------------------------------------------------------
// random well-typed trees

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Want {
    Set,
    Dict,
    Bool,
    Num,
}

pub struct TreeGen<'a> {
    pub kg: &'a RawKg,
    /// Probability of picking an id that is not in the graph.
    pub unknown_rate: f64,
    /// Use ids that need quoting in text form.
    pub exotic_ids: bool,
}

impl TreeGen<'_> {
    fn pick(&self, rng: &mut impl Rng, pool: &[String], unknown: &str) -> String {
        if pool.is_empty() || rng.random_bool(self.unknown_rate) {
            return unknown.to_string();
        }
        let id = pool.choose(rng).unwrap().clone();
        if self.exotic_ids && rng.random_bool(0.2) {
            let decorations = ["has space", "quo\"te", "back\\slash", "ünï", "9lives", "a,b"];
            return format!("{id} {}", decorations.choose(rng).unwrap());
        }
        id
    }

    fn entity(&self, rng: &mut impl Rng) -> LfNode {
        LfNode::entity(&self.pick(rng, &self.kg.entities, "ghost"))
    }

    fn predicate(&self, rng: &mut impl Rng) -> LfNode {
        LfNode::predicate(&self.pick(rng, &self.kg.predicates, "no_such_predicate"))
    }

    fn type_id(&self, rng: &mut impl Rng) -> LfNode {
        LfNode::type_id(&self.pick(rng, &self.kg.type_ids, "no_such_type"))
    }

    pub fn any(&self, rng: &mut impl Rng, max_depth: usize) -> LfNode {
        let want = *[Want::Set, Want::Dict, Want::Bool, Want::Num].choose(rng).unwrap();
        self.tree(rng, want, max_depth)
    }

    /// A tree of sort `want` whose depth does not exceed `depth` (≥ 2 for
    /// anything but numbers).
    pub fn tree(&self, rng: &mut impl Rng, want: Want, depth: usize) -> LfNode {
        use Action::*;
        match want {
            Want::Num => {
                if depth >= 3 && rng.random_bool(0.5) {
                    LfNode::call(Count, vec![self.tree(rng, Want::Set, depth - 1)])
                } else {
                    LfNode::Number(rng.random_range(0..=6))
                }
            }
            Want::Dict => {
                if depth >= 3 && rng.random_bool(0.3) {
                    let op = *[Union, Intersection, Difference].choose(rng).unwrap();
                    LfNode::call(
                        op,
                        vec![
                            self.tree(rng, Want::Dict, depth - 1),
                            self.tree(rng, Want::Dict, depth - 1),
                        ],
                    )
                } else {
                    let op = *[FindTupleCounts, FindReverseTupleCounts].choose(rng).unwrap();
                    LfNode::call(op, vec![self.predicate(rng), self.type_id(rng), self.type_id(rng)])
                }
            }
            Want::Bool => {
                let set = self.tree(rng, Want::Set, depth.max(3) - 1);
                let e = self.entity(rng);
                if rng.random_bool(0.5) {
                    LfNode::call(IsIn, vec![e, set])
                } else {
                    LfNode::call(IsIn, vec![set, e])
                }
            }
            Want::Set => {
                let mut options = vec![0, 1];
                if depth >= 3 {
                    options.extend([2, 3, 4, 5, 6]);
                }
                let d = depth.saturating_sub(1);
                match *options.choose(rng).unwrap() {
                    0 => LfNode::call(Find, vec![self.entity(rng), self.predicate(rng)]),
                    1 => LfNode::call(FindReverse, vec![self.entity(rng), self.predicate(rng)]),
                    2 => LfNode::call(FilterType, vec![self.tree(rng, Want::Set, d), self.type_id(rng)]),
                    3 => {
                        let n = rng.random_range(0..=3);
                        let types = (0..n).map(|_| self.type_id(rng)).collect();
                        LfNode::call(FilterMultiTypes, vec![self.tree(rng, Want::Set, d), LfNode::TypeSet(types)])
                    }
                    4 => {
                        let op = *[Greater, Lesser, Equal, Approx, Atmost, Atleast].choose(rng).unwrap();
                        let dict = self.tree(rng, Want::Dict, d);
                        let num = self.tree(rng, Want::Num, d);
                        if rng.random_bool(0.5) {
                            LfNode::call(op, vec![dict, num])
                        } else {
                            LfNode::call(op, vec![num, dict])
                        }
                    }
                    5 => {
                        let op = *[Argmin, Argmax].choose(rng).unwrap();
                        LfNode::call(op, vec![self.tree(rng, Want::Dict, d)])
                    }
                    _ => {
                        let op = *[Union, Intersection, Difference].choose(rng).unwrap();
                        LfNode::call(op, vec![self.tree(rng, Want::Set, d), self.tree(rng, Want::Set, d)])
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// naive reference interpreter

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefValue {
    Set(BTreeSet<String>),
    Dict(BTreeMap<String, u64>),
    Bool(bool),
    Num(u64),
}

impl From<&Value> for RefValue {
    fn from(v: &Value) -> Self {
        match v {
            Value::Entities(s) => RefValue::Set(s.iter().map(|x| x.to_string()).collect()),
            Value::Counts(d) => RefValue::Dict(d.iter().map(|(k, v)| (k.to_string(), *v)).collect()),
            Value::Bool(b) => RefValue::Bool(*b),
            Value::Number(n) => RefValue::Num(*n),
        }
    }
}

pub struct Reference<'a> {
    pub triples: &'a [(String, String, String)],
    pub types: &'a [(String, String)],
}

fn term(node: &LfNode) -> String {
    match node {
        LfNode::Entity(s) | LfNode::Predicate(s) | LfNode::Type(s) => s.to_string(),
        other => panic!("not a terminal: {other:?}"),
    }
}

impl Reference<'_> {
    fn has_type(&self, e: &str, t: &str) -> bool {
        self.types.iter().any(|(x, y)| x == e && y == t)
    }

    fn objects(&self, e: &str, p: &str) -> BTreeSet<String> {
        self.triples
            .iter()
            .filter(|(s, q, _)| s == e && q == p)
            .map(|(_, _, o)| o.clone())
            .collect()
    }

    fn subjects(&self, e: &str, p: &str) -> BTreeSet<String> {
        self.triples
            .iter()
            .filter(|(_, q, o)| o == e && q == p)
            .map(|(s, _, _)| s.clone())
            .collect()
    }

    fn set(&self, n: &LfNode) -> BTreeSet<String> {
        match self.eval(n) {
            RefValue::Set(s) => s,
            other => panic!("expected set, got {other:?}"),
        }
    }

    pub fn eval(&self, node: &LfNode) -> RefValue {
        let LfNode::Call(action, args) = node else {
            if let LfNode::Number(n) = node {
                return RefValue::Num(*n);
            }
            panic!("cannot evaluate terminal {node:?}");
        };
        use Action::*;
        match action {
            Find => RefValue::Set(self.objects(&term(&args[0]), &term(&args[1]))),
            FindReverse => RefValue::Set(self.subjects(&term(&args[0]), &term(&args[1]))),
            FilterType => {
                let t = term(&args[1]);
                RefValue::Set(self.set(&args[0]).into_iter().filter(|e| self.has_type(e, &t)).collect())
            }
            FilterMultiTypes => {
                let ts: Vec<String> = args[1].children().iter().map(term).collect();
                RefValue::Set(
                    self.set(&args[0])
                        .into_iter()
                        .filter(|e| ts.iter().any(|t| self.has_type(e, t)))
                        .collect(),
                )
            }
            FindTupleCounts | FindReverseTupleCounts => {
                let (p, t1, t2) = (term(&args[0]), term(&args[1]), term(&args[2]));
                let mut d = BTreeMap::new();
                for (e, t) in self.types {
                    if *t != t1 {
                        continue;
                    }
                    let related = if *action == FindTupleCounts {
                        self.objects(e, &p)
                    } else {
                        self.subjects(e, &p)
                    };
                    let n = related.iter().filter(|x| self.has_type(x, &t2)).count() as u64;
                    d.insert(e.clone(), n);
                }
                RefValue::Dict(d)
            }
            Greater | Lesser | Equal | Approx | Atmost | Atleast => {
                let (d, n) = match (self.eval(&args[0]), self.eval(&args[1])) {
                    (RefValue::Dict(d), RefValue::Num(n)) | (RefValue::Num(n), RefValue::Dict(d)) => (d, n),
                    other => panic!("bad comparison operands {other:?}"),
                };
                let tol = ((0.1 * n as f64).round() as u64).max(1);
                let keep = |v: u64| match action {
                    Greater => v > n,
                    Lesser => v < n,
                    Equal => v == n,
                    Atmost => v <= n,
                    Atleast => v >= n,
                    _ => (v as i64 - n as i64).unsigned_abs() <= tol,
                };
                RefValue::Set(d.into_iter().filter(|(_, v)| keep(*v)).map(|(k, _)| k).collect())
            }
            Argmin | Argmax => {
                let RefValue::Dict(d) = self.eval(&args[0]) else { panic!() };
                let mut best: Option<u64> = None;
                for v in d.values() {
                    best = Some(match best {
                        None => *v,
                        Some(b) if *action == Argmax => b.max(*v),
                        Some(b) => b.min(*v),
                    });
                }
                RefValue::Set(
                    d.into_iter()
                        .filter(|(_, v)| Some(*v) == best)
                        .map(|(k, _)| k)
                        .collect(),
                )
            }
            IsIn => {
                let (e, s) = match (&args[0], &args[1]) {
                    (LfNode::Entity(e), s) | (s, LfNode::Entity(e)) => (e.to_string(), s),
                    _ => panic!("is_in without entity"),
                };
                RefValue::Bool(self.set(s).contains(&e))
            }
            Count => RefValue::Num(self.set(&args[0]).len() as u64),
            Union | Intersection | Difference => match (self.eval(&args[0]), self.eval(&args[1])) {
                (RefValue::Set(a), RefValue::Set(b)) => RefValue::Set(match action {
                    Union => a.union(&b).cloned().collect(),
                    Intersection => a.intersection(&b).cloned().collect(),
                    _ => a.difference(&b).cloned().collect(),
                }),
                (RefValue::Dict(a), RefValue::Dict(b)) => {
                    let mut out = BTreeMap::new();
                    match action {
                        Union => {
                            for k in a.keys().chain(b.keys()) {
                                let v = a.get(k).copied().unwrap_or(0) + b.get(k).copied().unwrap_or(0);
                                out.insert(k.clone(), v);
                            }
                        }
                        Intersection => {
                            for (k, v) in &a {
                                if let Some(w) = b.get(k) {
                                    out.insert(k.clone(), (*v).min(*w));
                                }
                            }
                        }
                        _ => {
                            for (k, v) in &a {
                                if !b.contains_key(k) {
                                    out.insert(k.clone(), *v);
                                }
                            }
                        }
                    }
                    RefValue::Dict(out)
                }
                other => panic!("mixed set operation {other:?}"),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// literal GAT and scoring oracles

pub struct OracleHead {
    pub w: Vec<Vec<f64>>,
    pub a: Vec<f64>,
}

fn lrelu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

/// Evaluates the attention equations term by term.
///
/// `neighbors[i]` must include `i`. Returns the head-averaged aggregation
/// before the nonlinearity.
pub fn gat_oracle_pre(
    neighbors: &[Vec<usize>],
    h: &[Vec<f64>],
    heads: &[OracleHead],
    slope: f64,
) -> Vec<Vec<f64>> {
    let n = h.len();
    let d_out = heads[0].w.len();
    let mut out = vec![vec![0.0; d_out]; n];
    for head in heads {
        let wh: Vec<Vec<f64>> = h
            .iter()
            .map(|hj| head.w.iter().map(|row| row.iter().zip(hj).map(|(a, b)| a * b).sum()).collect())
            .collect();
        for i in 0..n {
            let mut e = Vec::new();
            for &j in &neighbors[i] {
                let concat: Vec<f64> = wh[i].iter().chain(&wh[j]).copied().collect();
                let s: f64 = head.a.iter().zip(&concat).map(|(x, y)| x * y).sum();
                e.push(lrelu(s, slope));
            }
            let denom: f64 = e.iter().map(|v| v.exp()).sum();
            for (m, &j) in neighbors[i].iter().enumerate() {
                let alpha = e[m].exp() / denom;
                for c in 0..d_out {
                    out[i][c] += alpha * wh[j][c] / heads.len() as f64;
                }
            }
        }
    }
    out
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

/// `softmax(h_bar · LeakyReLU(W_g [ctx ‖ dec]))`, term by term.
pub fn score_oracle(h_bar: &[Vec<f64>], ctx: &[f64], dec: &[f64], w_g: &[Vec<f64>], slope: f64) -> Vec<f64> {
    let joined: Vec<f64> = ctx.iter().chain(dec).copied().collect();
    let hc: Vec<f64> = w_g
        .iter()
        .map(|row| lrelu(row.iter().zip(&joined).map(|(a, b)| a * b).sum(), slope))
        .collect();
    let logits: Vec<f64> = h_bar.iter().map(|r| r.iter().zip(&hc).map(|(a, b)| a * b).sum()).collect();
    let total: f64 = logits.iter().map(|l| l.exp()).sum();
    logits.iter().map(|l| l.exp() / total).collect()
}

/// Random connected-ish undirected edge list over `n` nodes.
pub fn random_edges(rng: &mut impl Rng, n: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random_bool(0.25) {
                edges.push((a, b));
            }
        }
    }
    edges
}

pub fn neighbor_lists(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut nb: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
    for &(a, b) in edges {
        nb[a].insert(b);
        nb[b].insert(a);
    }
    nb.into_iter().map(|s| s.into_iter().collect()).collect()
}
