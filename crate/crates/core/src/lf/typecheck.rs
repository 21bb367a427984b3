use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use super::ast::{Action, LfNode, Sort};

/// Position of a subtree as child indices from the root.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodePath(pub Vec<usize>);

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for i in &self.0 {
            write!(f, ".{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sort error at {path}: expected {expected}, found {found}")]
pub struct SortError {
    pub path: NodePath,
    pub expected: String,
    pub found: Sort,
}

/// Returns the root sort of a tree, or the first ill-sorted subtree.
///
/// Comparisons accept `(dict, num)` and `(num, dict)`; `is_in` accepts
/// `(entity, set)` and `(set, entity)`; union, intersection and difference
/// accept two sets or two dicts.
pub fn typecheck(node: &LfNode) -> Result<Sort, SortError> {
    let mut path = Vec::new();
    check(node, &mut path)
}

fn mismatch(path: &[usize], child: usize, expected: &str, found: Sort) -> SortError {
    let mut p = path.to_vec();
    p.push(child);
    SortError {
        path: NodePath(p),
        expected: String::from(expected),
        found,
    }
}

fn check(node: &LfNode, path: &mut Vec<usize>) -> Result<Sort, SortError> {
    match node {
        LfNode::Entity(_) => Ok(Sort::Entity),
        LfNode::Predicate(_) => Ok(Sort::Predicate),
        LfNode::Type(_) => Ok(Sort::Type),
        LfNode::Number(_) => Ok(Sort::Number),
        LfNode::Hole(h) => Ok(h.kind.sort()),
        LfNode::TypeSet(elems) => {
            for (i, e) in elems.iter().enumerate() {
                let s = sort_of_child(e, i, path)?;
                if s != Sort::Type {
                    return Err(mismatch(path, i, "type", s));
                }
            }
            Ok(Sort::TypeSet)
        }
        LfNode::Call(action, args) => {
            if args.len() != action.arity() {
                // only reachable for hand-built trees; the parser rejects these
                return Err(SortError {
                    path: NodePath(path.clone()),
                    expected: alloc::format!("{} argument(s) for {action}", action.arity()),
                    found: action.result_sort(),
                });
            }
            let sorts = args
                .iter()
                .enumerate()
                .map(|(i, a)| sort_of_child(a, i, path))
                .collect::<Result<Vec<_>, _>>()?;
            call_sort(*action, &sorts, path)
        }
    }
}

fn sort_of_child(child: &LfNode, i: usize, path: &mut Vec<usize>) -> Result<Sort, SortError> {
    path.push(i);
    let r = check(child, path);
    path.pop();
    r
}

fn expect(path: &[usize], sorts: &[Sort], wanted: &[Sort]) -> Result<(), SortError> {
    for (i, (got, want)) in sorts.iter().zip(wanted).enumerate() {
        if got != want {
            return Err(mismatch(path, i, &alloc::format!("{want}"), *got));
        }
    }
    Ok(())
}

fn call_sort(action: Action, sorts: &[Sort], path: &[usize]) -> Result<Sort, SortError> {
    use Sort::*;
    match action {
        Action::Find | Action::FindReverse => {
            expect(path, sorts, &[Entity, Predicate])?;
            Ok(EntitySet)
        }
        Action::FilterType => {
            expect(path, sorts, &[EntitySet, Type])?;
            Ok(EntitySet)
        }
        Action::FilterMultiTypes => {
            expect(path, sorts, &[EntitySet, TypeSet])?;
            Ok(EntitySet)
        }
        Action::FindTupleCounts | Action::FindReverseTupleCounts => {
            expect(path, sorts, &[Predicate, Type, Type])?;
            Ok(CountMap)
        }
        Action::Argmin | Action::Argmax => {
            expect(path, sorts, &[CountMap])?;
            Ok(EntitySet)
        }
        Action::Count => {
            expect(path, sorts, &[EntitySet])?;
            Ok(Number)
        }
        Action::IsIn => match (sorts[0], sorts[1]) {
            (Entity, EntitySet) | (EntitySet, Entity) => Ok(Boolean),
            (Entity, other) => Err(mismatch(path, 1, "set", other)),
            (EntitySet, other) => Err(mismatch(path, 1, "entity", other)),
            (other, _) => Err(mismatch(path, 0, "entity or set", other)),
        },
        a if a.is_comparison() => match (sorts[0], sorts[1]) {
            (CountMap, Number) | (Number, CountMap) => Ok(EntitySet),
            (CountMap, other) => Err(mismatch(path, 1, "number", other)),
            (Number, other) => Err(mismatch(path, 1, "dict", other)),
            (other, _) => Err(mismatch(path, 0, "dict", other)),
        },
        // union / intersection / difference
        _ => match (sorts[0], sorts[1]) {
            (EntitySet, EntitySet) => Ok(EntitySet),
            (CountMap, CountMap) => Ok(CountMap),
            (EntitySet, other) => Err(mismatch(path, 1, "set", other)),
            (CountMap, other) => Err(mismatch(path, 1, "dict", other)),
            (other, _) => Err(mismatch(path, 0, "set or dict", other)),
        },
    }
}
