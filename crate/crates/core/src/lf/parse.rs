//! Reader for the call-notation logical-form text.
//!
//! ```text
//! node   := action '(' node (',' node)* ')' | id | "quoted id" | integer
//!         | '{' [elem (',' elem)*] '}' | '?' [kind] [index]
//! ```
//!
//! Which terminal a bare id denotes is decided by the argument position it
//! occupies (see [`ArgSlot`]). Offsets in errors are character offsets.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use super::ast::{Action, ArgSlot, Hole, HoleKind, LfNode};
use crate::Symbol;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown action `{name}` at offset {offset}")]
    UnknownAction { name: String, offset: usize },
    #[error("`{action}` takes {expected} argument(s), found {found} (offset {offset})")]
    Arity {
        action: &'static str,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("unbalanced `{delimiter}` at offset {offset}")]
    Unbalanced { delimiter: char, offset: usize },
    #[error("expected {expected} at offset {offset}, found {found}")]
    Unexpected {
        expected: &'static str,
        found: String,
        offset: usize,
    },
    #[error("invalid integer literal at offset {offset}")]
    BadNumber { offset: usize },
    #[error("invalid placeholder `{text}` at offset {offset}")]
    BadHole { text: String, offset: usize },
    #[error("unterminated string starting at offset {offset}")]
    UnterminatedString { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::UnknownAction { offset, .. }
            | ParseError::Arity { offset, .. }
            | ParseError::Unbalanced { offset, .. }
            | ParseError::Unexpected { offset, .. }
            | ParseError::BadNumber { offset }
            | ParseError::BadHole { offset, .. }
            | ParseError::UnterminatedString { offset } => *offset,
        }
    }
}

pub(crate) fn is_id_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

pub(crate) fn is_id_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '/')
}

/// Parses one logical form.
pub fn parse_lf(text: &str) -> Result<LfNode, ParseError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
    };
    let node = p.node(ArgSlot::Expr)?;
    p.skip_ws();
    match p.peek() {
        None => Ok(node),
        Some(')') => Err(ParseError::Unbalanced {
            delimiter: ')',
            offset: p.pos,
        }),
        Some('}') => Err(ParseError::Unbalanced {
            delimiter: '}',
            offset: p.pos,
        }),
        Some(c) => Err(ParseError::Unexpected {
            expected: "end of input",
            found: c.to_string(),
            offset: p.pos,
        }),
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(c) => c.to_string(),
            None => "end of input".to_string(),
        }
    }

    fn node(&mut self, slot: ArgSlot) -> Result<LfNode, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some('{') => self.type_set(),
            Some('"') => {
                let id = self.quoted()?;
                Ok(terminal(slot, Symbol::from(id)))
            }
            Some('?') => self.hole(slot),
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if is_id_start(c) => {
                let word = self.word();
                self.skip_ws();
                if self.peek() == Some('(') {
                    self.call(&word, start)
                } else {
                    Ok(terminal(slot, Symbol::from(word)))
                }
            }
            Some(')') => Err(ParseError::Unbalanced {
                delimiter: ')',
                offset: start,
            }),
            Some('}') => Err(ParseError::Unbalanced {
                delimiter: '}',
                offset: start,
            }),
            _ => Err(ParseError::Unexpected {
                expected: "an action, id, number, type set or placeholder",
                found: self.found(),
                offset: start,
            }),
        }
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(is_id_char) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn call(&mut self, name: &str, start: usize) -> Result<LfNode, ParseError> {
        let action = Action::from_name(name).ok_or_else(|| ParseError::UnknownAction {
            name: name.to_string(),
            offset: start,
        })?;
        let open = self.pos;
        self.pos += 1; // '('
        let slots = action.arg_slots();
        let mut args = Vec::with_capacity(slots.len());
        self.skip_ws();
        if self.peek() == Some(')') {
            self.pos += 1;
        } else {
            loop {
                let slot = slots.get(args.len()).copied().unwrap_or(ArgSlot::Expr);
                args.push(self.node(slot)?);
                self.skip_ws();
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(')') => {
                        self.pos += 1;
                        break;
                    }
                    None => {
                        return Err(ParseError::Unbalanced {
                            delimiter: '(',
                            offset: open,
                        })
                    }
                    Some(_) => {
                        return Err(ParseError::Unexpected {
                            expected: "`,` or `)`",
                            found: self.found(),
                            offset: self.pos,
                        })
                    }
                }
            }
        }
        if args.len() != slots.len() {
            return Err(ParseError::Arity {
                action: action.name(),
                expected: slots.len(),
                found: args.len(),
                offset: start,
            });
        }
        Ok(LfNode::Call(action, args))
    }

    fn type_set(&mut self) -> Result<LfNode, ParseError> {
        let open = self.pos;
        self.pos += 1; // '{'
        let mut elems = Vec::new();
        self.skip_ws();
        if self.peek() == Some('}') {
            self.pos += 1;
            return Ok(LfNode::TypeSet(elems));
        }
        loop {
            self.skip_ws();
            let at = self.pos;
            let elem = match self.peek() {
                Some('"') => LfNode::Type(Symbol::from(self.quoted()?)),
                Some('?') => self.hole(ArgSlot::Type)?,
                Some(c) if is_id_start(c) => LfNode::Type(Symbol::from(self.word())),
                None => {
                    return Err(ParseError::Unbalanced {
                        delimiter: '{',
                        offset: open,
                    })
                }
                Some(_) => {
                    return Err(ParseError::Unexpected {
                        expected: "a type id",
                        found: self.found(),
                        offset: at,
                    })
                }
            };
            if matches!(elem, LfNode::Hole(h) if h.kind != HoleKind::Type) {
                return Err(ParseError::Unexpected {
                    expected: "a type placeholder",
                    found: elem_text(&elem),
                    offset: at,
                });
            }
            elems.push(elem);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some('}') => {
                    self.pos += 1;
                    return Ok(LfNode::TypeSet(elems));
                }
                None => {
                    return Err(ParseError::Unbalanced {
                        delimiter: '{',
                        offset: open,
                    })
                }
                Some(_) => {
                    return Err(ParseError::Unexpected {
                        expected: "`,` or `}`",
                        found: self.found(),
                        offset: self.pos,
                    })
                }
            }
        }
    }

    fn quoted(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return Err(ParseError::UnterminatedString { offset: start }),
                Some('"') => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some('\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(c) => {
                            out.push(c);
                            self.pos += 1;
                        }
                        None => return Err(ParseError::UnterminatedString { offset: start }),
                    }
                }
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn number(&mut self) -> Result<LfNode, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        // `12abc` is not a number
        if self.peek().is_some_and(is_id_char) {
            return Err(ParseError::BadNumber { offset: start });
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<u64>()
            .map(LfNode::Number)
            .map_err(|_| ParseError::BadNumber { offset: start })
    }

    fn hole(&mut self, slot: ArgSlot) -> Result<LfNode, ParseError> {
        let start = self.pos;
        self.pos += 1; // '?'
        let mut text = String::new();
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
            text.push(self.chars[self.pos]);
            self.pos += 1;
        }
        let digits_at = text.find(|c: char| c.is_ascii_digit()).unwrap_or(text.len());
        let (prefix, digits) = text.split_at(digits_at);
        let kind = match prefix {
            "" => match slot {
                ArgSlot::Predicate => HoleKind::Predicate,
                ArgSlot::Type | ArgSlot::TypeSet => HoleKind::Type,
                ArgSlot::Entity | ArgSlot::Expr => HoleKind::Entity,
            },
            "e" => HoleKind::Entity,
            "p" => HoleKind::Predicate,
            "tp" => HoleKind::Type,
            "num" => HoleKind::Number,
            _ => {
                return Err(ParseError::BadHole {
                    text: alloc::format!("?{text}"),
                    offset: start,
                })
            }
        };
        let index = if digits.is_empty() {
            None
        } else {
            match digits.parse::<u32>() {
                Ok(i) if !prefix.is_empty() && i > 0 => Some(i),
                _ => {
                    return Err(ParseError::BadHole {
                        text: alloc::format!("?{text}"),
                        offset: start,
                    })
                }
            }
        };
        Ok(LfNode::Hole(Hole { kind, index }))
    }
}

fn terminal(slot: ArgSlot, id: Symbol) -> LfNode {
    match slot {
        ArgSlot::Predicate => LfNode::Predicate(id),
        ArgSlot::Type => LfNode::Type(id),
        ArgSlot::Entity | ArgSlot::Expr | ArgSlot::TypeSet => LfNode::Entity(id),
    }
}

fn elem_text(node: &LfNode) -> String {
    alloc::format!("{node}")
}
