use alloc::vec::Vec;
use core::fmt;

use crate::Symbol;

/// Result and argument sorts of the grammar.
///
/// `CountMap` is the grammar's `dict`: entity → non-negative count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    EntitySet,
    CountMap,
    Boolean,
    Number,
    Entity,
    Predicate,
    Type,
    TypeSet,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::EntitySet => "set",
            Sort::CountMap => "dict",
            Sort::Boolean => "boolean",
            Sort::Number => "number",
            Sort::Entity => "entity",
            Sort::Predicate => "predicate",
            Sort::Type => "type",
            Sort::TypeSet => "type-set",
        })
    }
}

/// The nineteen grammar actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Find,
    FindReverse,
    FilterType,
    FilterMultiTypes,
    FindTupleCounts,
    FindReverseTupleCounts,
    Greater,
    Lesser,
    Equal,
    Approx,
    Atmost,
    Atleast,
    Argmin,
    Argmax,
    IsIn,
    Count,
    Union,
    Intersection,
    Difference,
}

/// What a call argument position accepts syntactically.
///
/// The parser uses this to decide which terminal a bare id denotes; sort
/// agreement is checked later by the typechecker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgSlot {
    Entity,
    Predicate,
    Type,
    TypeSet,
    /// A sub-expression. A bare id here is read as an entity terminal.
    Expr,
}

impl Action {
    pub const ALL: [Action; 19] = [
        Action::Find,
        Action::FindReverse,
        Action::FilterType,
        Action::FilterMultiTypes,
        Action::FindTupleCounts,
        Action::FindReverseTupleCounts,
        Action::Greater,
        Action::Lesser,
        Action::Equal,
        Action::Approx,
        Action::Atmost,
        Action::Atleast,
        Action::Argmin,
        Action::Argmax,
        Action::IsIn,
        Action::Count,
        Action::Union,
        Action::Intersection,
        Action::Difference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::Find => "find",
            Action::FindReverse => "find_reverse",
            Action::FilterType => "filter_type",
            Action::FilterMultiTypes => "filter_multi_types",
            Action::FindTupleCounts => "find_tuple_counts",
            Action::FindReverseTupleCounts => "find_reverse_tuple_counts",
            Action::Greater => "greater",
            Action::Lesser => "lesser",
            Action::Equal => "equal",
            Action::Approx => "approx",
            Action::Atmost => "atmost",
            Action::Atleast => "atleast",
            Action::Argmin => "argmin",
            Action::Argmax => "argmax",
            Action::IsIn => "is_in",
            Action::Count => "count",
            Action::Union => "union",
            Action::Intersection => "intersection",
            Action::Difference => "difference",
        }
    }

    pub fn from_name(name: &str) -> Option<Action> {
        Action::ALL.iter().copied().find(|a| a.name() == name)
    }

    pub fn arg_slots(self) -> &'static [ArgSlot] {
        use ArgSlot::*;
        match self {
            Action::Find | Action::FindReverse => &[Entity, Predicate],
            Action::FilterType => &[Expr, Type],
            Action::FilterMultiTypes => &[Expr, TypeSet],
            Action::FindTupleCounts | Action::FindReverseTupleCounts => &[Predicate, Type, Type],
            Action::Argmin | Action::Argmax | Action::Count => &[Expr],
            _ => &[Expr, Expr],
        }
    }

    pub fn arity(self) -> usize {
        self.arg_slots().len()
    }

    pub fn result_sort(self) -> Sort {
        match self {
            Action::FindTupleCounts | Action::FindReverseTupleCounts => Sort::CountMap,
            Action::IsIn => Sort::Boolean,
            Action::Count => Sort::Number,
            // union/intersection/difference may also yield a CountMap; see typecheck
            _ => Sort::EntitySet,
        }
    }

    /// `true` for the six threshold comparisons over a count-map.
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            Action::Greater
                | Action::Lesser
                | Action::Equal
                | Action::Approx
                | Action::Atmost
                | Action::Atleast
        )
    }

    pub fn is_set_operation(self) -> bool {
        matches!(self, Action::Union | Action::Intersection | Action::Difference)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Kind of value a template placeholder stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HoleKind {
    Entity,
    Predicate,
    Type,
    Number,
}

impl HoleKind {
    pub fn prefix(self) -> &'static str {
        match self {
            HoleKind::Entity => "e",
            HoleKind::Predicate => "p",
            HoleKind::Type => "tp",
            HoleKind::Number => "num",
        }
    }

    pub fn sort(self) -> Sort {
        match self {
            HoleKind::Entity => Sort::Entity,
            HoleKind::Predicate => Sort::Predicate,
            HoleKind::Type => Sort::Type,
            HoleKind::Number => Sort::Number,
        }
    }
}

/// A placeholder terminal such as `?e1` or `?tp`.
///
/// `index: None` is an anonymous placeholder, filled positionally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hole {
    pub kind: HoleKind,
    pub index: Option<u32>,
}

/// A logical-form tree node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LfNode {
    Call(Action, Vec<LfNode>),
    Entity(Symbol),
    Predicate(Symbol),
    Type(Symbol),
    Number(u64),
    /// Elements are `Type` terminals or type placeholders.
    TypeSet(Vec<LfNode>),
    Hole(Hole),
}

impl LfNode {
    pub fn call(action: Action, args: Vec<LfNode>) -> Self {
        LfNode::Call(action, args)
    }

    pub fn entity(id: &str) -> Self {
        LfNode::Entity(Symbol::new(id))
    }

    pub fn predicate(id: &str) -> Self {
        LfNode::Predicate(Symbol::new(id))
    }

    pub fn type_id(id: &str) -> Self {
        LfNode::Type(Symbol::new(id))
    }

    pub fn type_set<'a>(ids: impl IntoIterator<Item = &'a str>) -> Self {
        LfNode::TypeSet(ids.into_iter().map(LfNode::type_id).collect())
    }

    pub fn hole(kind: HoleKind, index: Option<u32>) -> Self {
        LfNode::Hole(Hole { kind, index })
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self, LfNode::Call(..))
    }

    pub fn children(&self) -> &[LfNode] {
        match self {
            LfNode::Call(_, args) | LfNode::TypeSet(args) => args,
            _ => &[],
        }
    }

    /// Number of nodes in the tree, type-set elements included.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(LfNode::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(LfNode::depth).max().unwrap_or(0)
    }

    /// Placeholders in left-to-right (printed) order.
    pub fn holes(&self) -> Vec<Hole> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let LfNode::Hole(h) = n {
                out.push(*h);
            }
        });
        out
    }

    /// Pre-order traversal, children left to right.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a LfNode)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Rebuilds the tree, replacing every placeholder for which `fill`
    /// returns a node.
    pub fn fill_holes(&self, fill: &mut impl FnMut(Hole) -> Option<LfNode>) -> LfNode {
        match self {
            LfNode::Hole(h) => fill(*h).unwrap_or_else(|| self.clone()),
            LfNode::Call(a, args) => {
                LfNode::Call(*a, args.iter().map(|c| c.fill_holes(fill)).collect())
            }
            LfNode::TypeSet(elems) => {
                LfNode::TypeSet(elems.iter().map(|c| c.fill_holes(fill)).collect())
            }
            _ => self.clone(),
        }
    }
}
