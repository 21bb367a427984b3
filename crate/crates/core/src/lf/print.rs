//! Canonical text form: `action(arg, arg)` with a single space after each
//! comma, bare ids where the id is a plain word and double-quoted ids
//! otherwise.

use alloc::string::String;
use core::fmt::{self, Write};

use super::ast::{Hole, LfNode};
use super::parse::{is_id_char, is_id_start};

pub fn print_lf(node: &LfNode) -> String {
    alloc::format!("{node}")
}

fn write_id(f: &mut fmt::Formatter<'_>, id: &str) -> fmt::Result {
    let mut chars = id.chars();
    let bare = chars.next().is_some_and(is_id_start) && chars.all(is_id_char);
    if bare {
        return f.write_str(id);
    }
    f.write_char('"')?;
    for c in id.chars() {
        if c == '"' || c == '\\' {
            f.write_char('\\')?;
        }
        f.write_char(c)?;
    }
    f.write_char('"')
}

impl fmt::Display for Hole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.kind.prefix())?;
        if let Some(i) = self.index {
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl fmt::Display for LfNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LfNode::Call(action, args) => {
                write!(f, "{action}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.fmt(f)?;
                }
                f.write_char(')')
            }
            LfNode::Entity(id) | LfNode::Predicate(id) | LfNode::Type(id) => write_id(f, id),
            LfNode::Number(n) => write!(f, "{n}"),
            LfNode::TypeSet(elems) => {
                f.write_char('{')?;
                for (i, e) in elems.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    e.fmt(f)?;
                }
                f.write_char('}')
            }
            LfNode::Hole(h) => h.fmt(f),
        }
    }
}
