//! RDF terms and their dense identifiers.

use alloc::string::String;
use core::fmt::{self, Write};

/// Dense identifier of a term inside one [`Graph`](crate::Graph)'s dictionary.
///
/// Ids are assigned in first-appearance order while loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(pub u32);

impl TermId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A literal value. Datatype and language tag are part of its identity, so
/// `"1"` and `"1"^^xsd:integer` are distinct terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub value: String,
    pub datatype: Option<String>,
    pub language: Option<String>,
}

impl Literal {
    pub fn plain(value: impl Into<String>) -> Self {
        Literal {
            value: value.into(),
            datatype: None,
            language: None,
        }
    }

    pub fn typed(value: impl Into<String>, datatype: impl Into<String>) -> Self {
        Literal {
            value: value.into(),
            datatype: Some(datatype.into()),
            language: None,
        }
    }

    pub fn lang(value: impl Into<String>, language: impl Into<String>) -> Self {
        Literal {
            value: value.into(),
            datatype: None,
            language: Some(language.into()),
        }
    }
}

/// An RDF term.
///
/// Blank nodes keep their file-scoped label and behave as ordinary constants
/// everywhere downstream.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    BlankNode(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Self {
        Term::Iri(iri.into())
    }

    pub fn blank(label: impl Into<String>) -> Self {
        Term::BlankNode(label.into())
    }

    pub fn literal(value: impl Into<String>) -> Self {
        Term::Literal(Literal::plain(value))
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    /// Human-oriented short label: the local name of an IRI, the label of a
    /// blank node, or the lexical value of a literal.
    pub fn short_label(&self) -> &str {
        match self {
            Term::Iri(iri) => {
                let cut = iri.rfind(['#', '/']).map(|i| i + 1).unwrap_or(0);
                if cut < iri.len() {
                    &iri[cut..]
                } else {
                    iri
                }
            }
            Term::BlankNode(label) => label,
            Term::Literal(lit) => &lit.value,
        }
    }
}

/// N-Triples serialization of the term.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => {
                f.write_char('<')?;
                write_escaped_iri(f, iri)?;
                f.write_char('>')
            }
            Term::BlankNode(label) => write!(f, "_:{label}"),
            Term::Literal(lit) => {
                f.write_char('"')?;
                write_escaped_literal(f, &lit.value)?;
                f.write_char('"')?;
                if let Some(lang) = &lit.language {
                    write!(f, "@{lang}")
                } else if let Some(dt) = &lit.datatype {
                    f.write_str("^^<")?;
                    write_escaped_iri(f, dt)?;
                    f.write_char('>')
                } else {
                    Ok(())
                }
            }
        }
    }
}

fn write_escaped_iri(f: &mut fmt::Formatter<'_>, iri: &str) -> fmt::Result {
    for c in iri.chars() {
        match c {
            '\u{00}'..='\u{20}' | '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' => {
                write!(f, "\\u{:04X}", c as u32)?
            }
            _ => f.write_char(c)?,
        }
    }
    Ok(())
}

fn write_escaped_literal(f: &mut fmt::Formatter<'_>, value: &str) -> fmt::Result {
    for c in value.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            _ => f.write_char(c)?,
        }
    }
    Ok(())
}
