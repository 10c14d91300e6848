//! Line-oriented N-Triples reader.
//!
//! Supports absolute IRIs, blank nodes, and literals with an optional
//! datatype or language tag. Input is fed one line at a time through
//! [`NTriplesLoader`] so that callers can stream from any source.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::graph::{Graph, GraphBuilder};
use crate::term::{Literal, Term};

/// What to do with a malformed line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Abort on the first malformed line.
    #[default]
    Strict,
    /// Record the malformed line and keep going.
    Skip,
}

/// A malformed N-Triples line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}: {text}")]
pub struct NtError {
    /// 1-based line number.
    pub line: usize,
    pub text: String,
    pub message: String,
}

/// Counters collected while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub lines: usize,
    pub statements: usize,
    /// Lines skipped in [`ParseMode::Skip`].
    pub skipped: Vec<NtError>,
}

/// Incremental loader: push lines, then [`finish`](Self::finish).
#[derive(Debug, Default)]
pub struct NTriplesLoader {
    mode: ParseMode,
    builder: GraphBuilder,
    report: LoadReport,
}

impl NTriplesLoader {
    pub fn new(mode: ParseMode) -> Self {
        NTriplesLoader {
            mode,
            builder: GraphBuilder::new(),
            report: LoadReport::default(),
        }
    }

    /// Feeds one line (without or with its trailing newline).
    pub fn push_line(&mut self, line: &str) -> Result<(), NtError> {
        self.report.lines += 1;
        let line_no = self.report.lines;
        match parse_line(line) {
            Ok(Some((s, p, o))) => {
                self.report.statements += 1;
                self.builder.insert(s, p, o);
                Ok(())
            }
            Ok(None) => Ok(()),
            Err(message) => {
                let err = NtError {
                    line: line_no,
                    text: line.trim_end_matches(['\n', '\r']).to_string(),
                    message,
                };
                match self.mode {
                    ParseMode::Strict => Err(err),
                    ParseMode::Skip => {
                        self.report.skipped.push(err);
                        Ok(())
                    }
                }
            }
        }
    }

    pub fn finish(self) -> (Graph, LoadReport) {
        (self.builder.build(), self.report)
    }
}

/// Parses a complete N-Triples document held in memory.
pub fn parse_ntriples(input: &str, mode: ParseMode) -> Result<(Graph, LoadReport), NtError> {
    let mut loader = NTriplesLoader::new(mode);
    for line in input.lines() {
        loader.push_line(line)?;
    }
    Ok(loader.finish())
}

/// Parses a single line. Blank lines and comments yield `Ok(None)`.
pub fn parse_line(line: &str) -> Result<Option<(Term, Term, Term)>, String> {
    let mut cur = Cursor::new(line);
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }
    let s = match cur.peek() {
        Some('<') => Term::Iri(cur.iri()?),
        Some('_') => Term::BlankNode(cur.blank()?),
        _ => return Err("subject must be an IRI or blank node".into()),
    };
    cur.skip_ws();
    let p = match cur.peek() {
        Some('<') => Term::Iri(cur.iri()?),
        _ => return Err("predicate must be an IRI".into()),
    };
    cur.skip_ws();
    let o = match cur.peek() {
        Some('<') => Term::Iri(cur.iri()?),
        Some('_') => Term::BlankNode(cur.blank()?),
        Some('"') => Term::Literal(cur.literal()?),
        _ => return Err("object must be an IRI, blank node or literal".into()),
    };
    cur.skip_ws();
    if cur.bump() != Some('.') {
        return Err("expected '.' after object".into());
    }
    cur.skip_ws();
    if !cur.at_end() && cur.peek() != Some('#') {
        return Err("trailing characters after '.'".into());
    }
    Ok(Some((s, p, o)))
}

/// Parses one term in N-Triples syntax, e.g. `<http://x/a>`, `_:b0` or
/// `"v"@en`.
pub fn parse_term(text: &str) -> Result<Term, String> {
    let mut cur = Cursor::new(text);
    cur.skip_ws();
    let term = match cur.peek() {
        Some('<') => Term::Iri(cur.iri()?),
        Some('_') => Term::BlankNode(cur.blank()?),
        Some('"') => Term::Literal(cur.literal()?),
        _ => return Err("expected an IRI, blank node or literal".into()),
    };
    cur.skip_ws();
    if !cur.at_end() {
        return Err("trailing characters after term".into());
    }
    Ok(term)
}

struct Cursor<'a> {
    rest: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str) -> Self {
        Cursor { rest: s }
    }

    fn at_end(&self) -> bool {
        self.rest.is_empty()
    }

    fn peek(&self) -> Option<char> {
        self.rest.chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.rest = &self.rest[c.len_utf8()..];
        Some(c)
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t', '\r', '\n']);
    }

    fn iri(&mut self) -> Result<String, String> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated IRI".into()),
                Some('>') => break,
                Some('\\') => out.push(self.uchar()?),
                Some(c) if c <= ' ' || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    return Err("invalid character in IRI".into())
                }
                Some(c) => out.push(c),
            }
        }
        if !is_absolute_iri(&out) {
            return Err("IRI is not absolute".into());
        }
        Ok(out)
    }

    fn uchar(&mut self) -> Result<char, String> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err("invalid escape".into()),
        };
        self.hex(width)
    }

    fn hex(&mut self, width: usize) -> Result<char, String> {
        if self.rest.len() < width || !self.rest.is_char_boundary(width) {
            return Err("truncated unicode escape".into());
        }
        let (digits, rest) = self.rest.split_at(width);
        let code =
            u32::from_str_radix(digits, 16).map_err(|_| String::from("invalid unicode escape"))?;
        self.rest = rest;
        char::from_u32(code).ok_or_else(|| "escape is not a scalar value".into())
    }

    fn blank(&mut self) -> Result<String, String> {
        self.bump();
        if self.bump() != Some(':') {
            return Err("expected ':' in blank node label".into());
        }
        let end = self
            .rest
            .find(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '-' | '.')))
            .unwrap_or(self.rest.len());
        // a trailing '.' belongs to the statement terminator
        let label = self.rest[..end].trim_end_matches('.');
        if label.is_empty() {
            return Err("empty blank node label".into());
        }
        let label = label.to_string();
        self.rest = &self.rest[label.len()..];
        Ok(label)
    }

    fn literal(&mut self) -> Result<Literal, String> {
        self.bump();
        let mut value = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated literal".into()),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.peek() {
                        Some('t') => '\t',
                        Some('b') => '\u{08}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{0C}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') | Some('U') => {
                            value.push(self.uchar()?);
                            continue;
                        }
                        _ => return Err("invalid escape in literal".into()),
                    };
                    self.bump();
                    value.push(c);
                }
                Some(c) => value.push(c),
            }
        }
        match self.peek() {
            Some('@') => {
                self.bump();
                let end = self
                    .rest
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                    .unwrap_or(self.rest.len());
                if end == 0 {
                    return Err("empty language tag".into());
                }
                let lang = self.rest[..end].to_string();
                self.rest = &self.rest[end..];
                Ok(Literal::lang(value, lang))
            }
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') || self.peek() != Some('<') {
                    return Err("expected '^^<datatype>'".into());
                }
                let dt = self.iri()?;
                Ok(Literal::typed(value, dt))
            }
            _ => Ok(Literal::plain(value)),
        }
    }
}

/// `scheme ":" ...` with an RFC 3986 scheme.
fn is_absolute_iri(iri: &str) -> bool {
    match iri.find(':') {
        Some(0) | None => false,
        Some(i) => {
            let scheme = &iri[..i];
            scheme.starts_with(|c: char| c.is_ascii_alphabetic())
                && scheme
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::format;

    #[test]
    fn empty_input_gives_empty_graph() {
        let (g, report) = parse_ntriples("", ParseMode::Strict).unwrap();
        assert_eq!(g.len(), 0);
        assert_eq!(g.term_count(), 0);
        assert_eq!(report.statements, 0);
    }

    #[test]
    fn single_triple_sets_all_counts_to_one() {
        let (g, _) = parse_ntriples(
            "<http://x/a> <http://x/p> <http://x/b> .\n",
            ParseMode::Strict,
        )
        .unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.term_count(), 3);
        let p = g.lookup(&Term::iri("http://x/p")).unwrap();
        assert_eq!(g.dom(p), 1);
        assert_eq!(g.ran(p), 1);
    }

    #[test]
    fn duplicate_lines_are_stored_once() {
        let lines: Vec<String> = (0..9)
            .map(|i| format!("<http://x/s{}> <http://x/p> \"v{}\" .", i % 4, i))
            .chain(core::iter::once(String::from(
                "<http://x/s1> <http://x/p> \"v1\" .",
            )))
            .collect();
        let doc = lines.join("\n");
        let distinct: BTreeSet<&String> = lines.iter().collect();
        let (g, report) = parse_ntriples(&doc, ParseMode::Strict).unwrap();
        assert_eq!(report.statements, 10);
        assert_eq!(g.len(), distinct.len());
        assert_eq!(g.len(), 9);
    }

    #[test]
    fn literals_blank_nodes_and_comments() {
        let doc = r#"
# a comment
_:b1 <http://x/name> "Alice"@en . # trailing
_:b1 <http://x/age> "30"^^<http://www.w3.org/2001/XMLSchema#integer> .
<http://x/a> <http://x/says> "tab\there é \"q\"" .
"#;
        let (g, _) = parse_ntriples(doc, ParseMode::Strict).unwrap();
        assert_eq!(g.len(), 3);
        assert!(g.lookup(&Term::blank("b1")).is_some());
        assert!(g
            .lookup(&Term::Literal(Literal::lang("Alice", "en")))
            .is_some());
        assert!(g
            .lookup(&Term::Literal(Literal::typed(
                "30",
                "http://www.w3.org/2001/XMLSchema#integer"
            )))
            .is_some());
        assert!(g.lookup(&Term::literal("tab\there \u{e9} \"q\"")).is_some());
    }

    #[test]
    fn strict_mode_reports_line_and_text() {
        let doc = "<http://x/a> <http://x/p> <http://x/b> .\n<http://x/a> \"lit\" <http://x/b> .\n";
        let err = parse_ntriples(doc, ParseMode::Strict).unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.text, "<http://x/a> \"lit\" <http://x/b> .");
    }

    #[test]
    fn skip_mode_keeps_going() {
        let doc = "<http://x/a> <http://x/p> <http://x/b> .\nnonsense\n<http://x/c> <http://x/p> <http://x/b> .\n";
        let (g, report) = parse_ntriples(doc, ParseMode::Skip).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.skipped[0].line, 2);
    }

    #[test]
    fn rejects_malformed_lines() {
        for bad in [
            "<http://x/a> <http://x/p> <http://x/b>",
            "<relative> <http://x/p> <http://x/b> .",
            "<http://x/a> <http://x/p> \"open .",
            "<http://x/a> <http://x/p> <http://x/b> . extra",
            "\"lit\" <http://x/p> <http://x/b> .",
            "<http://x/a> _:p <http://x/b> .",
        ] {
            assert!(parse_line(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn blank_node_followed_directly_by_dot() {
        let (s, _, o) = parse_line("_:a <http://x/p> _:b.").unwrap().unwrap();
        assert_eq!(s, Term::blank("a"));
        assert_eq!(o, Term::blank("b"));
    }

    #[test]
    fn single_terms_roundtrip() {
        for t in [
            Term::iri("http://x/a"),
            Term::blank("b0"),
            Term::Literal(Literal::lang("chat \"x\"", "fr")),
            Term::Literal(Literal::typed(
                "5",
                "http://www.w3.org/2001/XMLSchema#integer",
            )),
        ] {
            assert_eq!(parse_term(&t.to_string()).unwrap(), t);
        }
        assert!(parse_term("<http://x/a> <http://x/b>").is_err());
        assert!(parse_term("plain").is_err());
    }

    #[test]
    fn display_output_reparses() {
        let doc = "<http://x/a> <http://x/p> \"x\\\\y\\n\\\"z\\\"\"@en-GB .";
        let (s, p, o) = parse_line(doc).unwrap().unwrap();
        let again = format!("{s} {p} {o} .");
        assert_eq!(parse_line(&again).unwrap().unwrap(), (s, p, o));
    }
}
