use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{variables_of, PatternTerm, Query, QueryForm, SparqlError, TriplePattern};
use crate::term::{Literal, Term};
use crate::RDF_TYPE;

const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

/// Keywords that open a construct outside the supported fragment.
const UNSUPPORTED: &[&str] = &[
    "OPTIONAL",
    "FILTER",
    "UNION",
    "MINUS",
    "BIND",
    "VALUES",
    "GRAPH",
    "SERVICE",
    "ORDER",
    "GROUP",
    "HAVING",
    "LIMIT",
    "OFFSET",
    "CONSTRUCT",
    "DESCRIBE",
    "FROM",
    "BASE",
    "REDUCED",
    "INSERT",
    "DELETE",
    "LOAD",
    "CLEAR",
    "CREATE",
    "DROP",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Var(String),
    Iri(String),
    PName(String, String),
    /// Literal, plus a prefixed-name datatype still to be expanded.
    Str(Literal, Option<String>),
    Number(String),
    Blank(String),
    Punct(char),
}

/// Parses a query in the supported fragment. Prefixed names are expanded
/// and `?x` / `$x` both name variable `x`.
pub fn parse_query(text: &str) -> Result<Query, SparqlError> {
    let toks = lex(text)?;
    Parser {
        text,
        toks,
        at: 0,
        prefixes: BTreeMap::new(),
    }
    .query()
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rsplit('\n')
        .next()
        .map(|l| l.chars().count())
        .unwrap_or(0)
        + 1;
    (line, column)
}

fn syntax(text: &str, offset: usize, message: impl Into<String>) -> SparqlError {
    let (line, column) = position(text, offset);
    SparqlError::Syntax {
        offset,
        line,
        column,
        message: message.into(),
    }
}

fn unsupported(feature: impl Into<String>) -> SparqlError {
    SparqlError::Unsupported {
        feature: feature.into(),
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SparqlError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < text.len() {
        let c = text[i..].chars().next().unwrap();
        let start = i;
        match c {
            c if c.is_whitespace() => i += c.len_utf8(),
            '#' => i = text[i..].find('\n').map(|n| i + n).unwrap_or(text.len()),
            '?' | '$' => {
                let rest = &text[i + 1..];
                let n = rest.find(|c: char| !is_name_char(c)).unwrap_or(rest.len());
                if n == 0 {
                    out.push((Tok::Punct(c), start));
                    i += 1;
                } else {
                    out.push((Tok::Var(rest[..n].to_string()), start));
                    i += 1 + n;
                }
            }
            '<' => {
                let rest = &text[i + 1..];
                match rest.find(|c: char| c == '>' || c.is_whitespace() || c == '<') {
                    Some(n) if rest.as_bytes()[n] == b'>' => {
                        out.push((Tok::Iri(rest[..n].to_string()), start));
                        i += n + 2;
                    }
                    _ => {
                        out.push((Tok::Punct('<'), start));
                        i += 1;
                    }
                }
            }
            '"' | '\'' => {
                let (lit, pname_dt, next) = lex_string(text, i, c)?;
                out.push((Tok::Str(lit, pname_dt), start));
                i = next;
            }
            '0'..='9' => {
                let rest = &text[i..];
                let mut n = rest
                    .find(|c: char| !(c.is_ascii_digit() || c == '.'))
                    .unwrap_or(rest.len());
                // a trailing '.' terminates the triple
                while n > 0 && rest.as_bytes()[n - 1] == b'.' {
                    n -= 1;
                }
                out.push((Tok::Number(rest[..n].to_string()), start));
                i += n;
            }
            '_' if bytes.get(i + 1) == Some(&b':') => {
                let rest = &text[i + 2..];
                let n = rest
                    .find(|c: char| !(is_name_char(c) || c == '-'))
                    .unwrap_or(rest.len());
                out.push((Tok::Blank(rest[..n].to_string()), start));
                i += 2 + n;
            }
            c if c.is_alphabetic() || c == ':' || c == '_' => {
                let rest = &text[i..];
                let mut n = rest
                    .find(|c: char| !(is_name_char(c) || matches!(c, '-' | '.' | ':' | '%')))
                    .unwrap_or(rest.len());
                while n > 0 && rest.as_bytes()[n - 1] == b'.' {
                    n -= 1;
                }
                let word = &rest[..n];
                match word.find(':') {
                    Some(colon) => out.push((
                        Tok::PName(word[..colon].to_string(), word[colon + 1..].to_string()),
                        start,
                    )),
                    None => out.push((Tok::Word(word.to_string()), start)),
                }
                i += n;
            }
            c => {
                out.push((Tok::Punct(c), start));
                i += c.len_utf8();
            }
        }
    }
    Ok(out)
}

fn lex_string(
    text: &str,
    start: usize,
    quote: char,
) -> Result<(Literal, Option<String>, usize), SparqlError> {
    let mut value = String::new();
    let mut chars = text[start + 1..].char_indices();
    let end = loop {
        match chars.next() {
            None => return Err(syntax(text, start, "unterminated string")),
            Some((n, c)) if c == quote => break start + 1 + n + 1,
            Some((_, '\\')) => match chars.next() {
                Some((_, 't')) => value.push('\t'),
                Some((_, 'n')) => value.push('\n'),
                Some((_, 'r')) => value.push('\r'),
                Some((_, 'b')) => value.push('\u{08}'),
                Some((_, 'f')) => value.push('\u{0C}'),
                Some((_, '"')) => value.push('"'),
                Some((_, '\'')) => value.push('\''),
                Some((_, '\\')) => value.push('\\'),
                Some((n, u @ ('u' | 'U'))) => {
                    let width = if u == 'u' { 4 } else { 8 };
                    let from = start + 1 + n + 1;
                    let code = text
                        .get(from..from + width)
                        .and_then(|h| u32::from_str_radix(h, 16).ok())
                        .and_then(char::from_u32)
                        .ok_or_else(|| syntax(text, from, "invalid unicode escape"))?;
                    value.push(code);
                    for _ in 0..width {
                        chars.next();
                    }
                }
                _ => return Err(syntax(text, start, "invalid escape in string")),
            },
            Some((_, '\n')) => return Err(syntax(text, start, "newline in string")),
            Some((_, c)) => value.push(c),
        }
    };
    let rest = &text[end..];
    if let Some(tag) = rest.strip_prefix('@') {
        let n = tag
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
            .unwrap_or(tag.len());
        if n == 0 {
            return Err(syntax(text, end, "empty language tag"));
        }
        return Ok((Literal::lang(value, &tag[..n]), None, end + 1 + n));
    }
    if rest.starts_with("^^") {
        let dt_start = end + 2;
        let dt_rest = &text[dt_start..];
        if let Some(body) = dt_rest.strip_prefix('<') {
            let n = body
                .find('>')
                .ok_or_else(|| syntax(text, dt_start, "unterminated datatype IRI"))?;
            return Ok((Literal::typed(value, &body[..n]), None, dt_start + n + 2));
        }
        let n = dt_rest
            .find(|c: char| !(is_name_char(c) || matches!(c, '-' | ':')))
            .unwrap_or(dt_rest.len());
        if n == 0 || !dt_rest[..n].contains(':') {
            return Err(syntax(text, dt_start, "expected datatype after '^^'"));
        }
        return Ok((
            Literal::plain(value),
            Some(dt_rest[..n].to_string()),
            dt_start + n,
        ));
    }
    Ok((Literal::plain(value), None, end))
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    at: usize,
    prefixes: BTreeMap<String, String>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.at)
            .map(|&(_, o)| o)
            .unwrap_or(self.text.len())
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(t, _)| t.clone());
        self.at += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> SparqlError {
        syntax(self.text, self.offset(), message)
    }

    fn peek_keyword(&self) -> Option<String> {
        match self.peek() {
            Some(Tok::Word(w)) => Some(w.to_ascii_uppercase()),
            _ => None,
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword().as_deref() == Some(kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), SparqlError> {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn reject_unsupported_keyword(&self) -> Result<(), SparqlError> {
        if let Some(kw) = self.peek_keyword() {
            if UNSUPPORTED.contains(&kw.as_str()) {
                return Err(unsupported(kw));
            }
        }
        Ok(())
    }

    fn query(mut self) -> Result<Query, SparqlError> {
        loop {
            self.reject_unsupported_keyword()?;
            if !self.eat_keyword("PREFIX") {
                break;
            }
            let name = match self.next() {
                Some(Tok::PName(p, l)) if l.is_empty() => p,
                _ => {
                    return Err(syntax(
                        self.text,
                        self.toks[self.at - 1].1,
                        "expected 'prefix:' after PREFIX",
                    ))
                }
            };
            let base = match self.next() {
                Some(Tok::Iri(iri)) => iri,
                _ => {
                    return Err(syntax(
                        self.text,
                        self.toks[self.at - 1].1,
                        "expected <IRI> in PREFIX",
                    ))
                }
            };
            self.prefixes.insert(name, base);
        }
        self.reject_unsupported_keyword()?;
        let (form, distinct, mut projected, star) = if self.eat_keyword("SELECT") {
            self.select_clause()?
        } else if self.eat_keyword("ASK") {
            (QueryForm::Ask, false, Vec::new(), false)
        } else {
            return Err(self.err("expected SELECT or ASK"));
        };
        self.eat_keyword("WHERE");
        let patterns = self.group()?;
        if self.at < self.toks.len() {
            self.reject_unsupported_keyword()?;
            return Err(self.err("unexpected input after the graph pattern"));
        }
        if patterns.is_empty() {
            return Err(SparqlError::EmptyPattern);
        }
        let vars = variables_of(&patterns);
        if star {
            projected = vars.clone();
        }
        for v in &projected {
            if !vars.contains(v) {
                return Err(SparqlError::UnboundVariable(v.clone()));
            }
        }
        Ok(Query {
            form,
            projected,
            distinct,
            patterns,
            prefixes: self.prefixes,
        })
    }

    fn select_clause(&mut self) -> Result<(QueryForm, bool, Vec<String>, bool), SparqlError> {
        self.reject_unsupported_keyword()?;
        let distinct = self.eat_keyword("DISTINCT");
        self.reject_unsupported_keyword()?;
        // COUNT(DISTINCT ?v), optionally wrapped as (COUNT(DISTINCT ?v) AS ?n)
        let wrapped = self.peek() == Some(&Tok::Punct('('));
        if wrapped || self.peek_keyword().as_deref() == Some("COUNT") {
            if wrapped {
                self.at += 1;
            }
            match self.peek_keyword().as_deref() {
                Some("COUNT") => self.at += 1,
                Some(other) => return Err(unsupported(format!("aggregate {other}"))),
                None => return Err(unsupported("projection expressions")),
            }
            self.expect_punct('(')?;
            if !self.eat_keyword("DISTINCT") {
                return Err(unsupported("COUNT without DISTINCT"));
            }
            let var = match self.next() {
                Some(Tok::Var(v)) => v,
                Some(Tok::Punct('*')) => return Err(unsupported("COUNT(DISTINCT *)")),
                _ => {
                    return Err(syntax(
                        self.text,
                        self.toks[self.at - 1].1,
                        "expected a variable in COUNT",
                    ))
                }
            };
            self.expect_punct(')')?;
            if self.eat_keyword("AS") {
                match self.next() {
                    Some(Tok::Var(_)) => {}
                    _ => {
                        return Err(syntax(
                            self.text,
                            self.toks[self.at - 1].1,
                            "expected a variable after AS",
                        ))
                    }
                }
            }
            if wrapped {
                self.expect_punct(')')?;
            }
            if matches!(self.peek(), Some(Tok::Var(_)) | Some(Tok::Punct('('))) {
                return Err(unsupported("COUNT alongside other projections"));
            }
            return Ok((QueryForm::CountDistinct, true, alloc::vec![var], false));
        }
        if self.peek() == Some(&Tok::Punct('*')) {
            self.at += 1;
            return Ok((QueryForm::Select, distinct, Vec::new(), true));
        }
        let mut vars = Vec::new();
        while let Some(Tok::Var(v)) = self.peek() {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
            self.at += 1;
        }
        if vars.is_empty() {
            return Err(self.err("expected projected variables"));
        }
        Ok((QueryForm::Select, distinct, vars, false))
    }

    fn group(&mut self) -> Result<Vec<TriplePattern>, SparqlError> {
        self.expect_punct('{')?;
        let mut patterns = Vec::new();
        loop {
            self.reject_unsupported_keyword()?;
            match self.peek() {
                Some(Tok::Punct('}')) => {
                    self.at += 1;
                    return Ok(patterns);
                }
                Some(Tok::Punct('{')) => return Err(unsupported("nested group patterns")),
                Some(Tok::Punct('.')) if !patterns.is_empty() => {
                    self.at += 1;
                    continue;
                }
                None => return Err(self.err("unterminated graph pattern")),
                _ => {}
            }
            let s = self.subject()?;
            loop {
                let p = self.predicate()?;
                loop {
                    let o = self.object()?;
                    patterns.push(TriplePattern::new(s.clone(), p.clone(), o));
                    if self.peek() == Some(&Tok::Punct(',')) {
                        self.at += 1;
                    } else {
                        break;
                    }
                }
                if self.peek() == Some(&Tok::Punct(';')) {
                    while self.peek() == Some(&Tok::Punct(';')) {
                        self.at += 1;
                    }
                    if matches!(self.peek(), Some(Tok::Punct('.')) | Some(Tok::Punct('}'))) {
                        break;
                    }
                } else {
                    break;
                }
            }
            match self.peek() {
                Some(Tok::Punct('.')) => self.at += 1,
                Some(Tok::Punct('}')) => {}
                _ => {
                    self.reject_unsupported_keyword()?;
                    return Err(self.err("expected '.' or '}' after triple pattern"));
                }
            }
        }
    }

    fn iri_of(&self, prefix: &str, local: &str) -> Result<String, SparqlError> {
        match self.prefixes.get(prefix) {
            Some(base) => Ok(format!("{base}{local}")),
            None => Err(SparqlError::UnknownPrefix(prefix.to_string())),
        }
    }

    fn subject(&mut self) -> Result<PatternTerm, SparqlError> {
        match self.next() {
            Some(Tok::Var(v)) => Ok(PatternTerm::Var(v)),
            Some(Tok::Iri(iri)) => Ok(PatternTerm::Const(Term::Iri(iri))),
            Some(Tok::PName(p, l)) => Ok(PatternTerm::Const(Term::Iri(self.iri_of(&p, &l)?))),
            Some(Tok::Blank(_)) => Err(unsupported("blank nodes in graph patterns")),
            Some(Tok::Punct('[')) => Err(unsupported("blank node property lists")),
            Some(Tok::Punct('(')) => Err(unsupported("RDF collections")),
            _ => {
                self.at -= 1;
                Err(self.err("expected a subject"))
            }
        }
    }

    fn predicate(&mut self) -> Result<PatternTerm, SparqlError> {
        let p = match self.next() {
            Some(Tok::Var(v)) => PatternTerm::Var(v),
            Some(Tok::Iri(iri)) => PatternTerm::Const(Term::Iri(iri)),
            Some(Tok::PName(p, l)) => PatternTerm::Const(Term::Iri(self.iri_of(&p, &l)?)),
            Some(Tok::Word(w)) if w == "a" => PatternTerm::Const(Term::iri(RDF_TYPE)),
            Some(Tok::Punct('^' | '!' | '(')) => return Err(unsupported("property paths")),
            _ => {
                self.at -= 1;
                return Err(self.err("expected a predicate"));
            }
        };
        if let Some(Tok::Punct('/' | '|' | '^' | '*' | '+' | '?')) = self.peek() {
            return Err(unsupported("property paths"));
        }
        Ok(p)
    }

    fn object(&mut self) -> Result<PatternTerm, SparqlError> {
        match self.next() {
            Some(Tok::Var(v)) => Ok(PatternTerm::Var(v)),
            Some(Tok::Iri(iri)) => Ok(PatternTerm::Const(Term::Iri(iri))),
            Some(Tok::PName(p, l)) => Ok(PatternTerm::Const(Term::Iri(self.iri_of(&p, &l)?))),
            Some(Tok::Str(mut lit, pname_dt)) => {
                if let Some(dt) = pname_dt {
                    let (p, l) = dt.split_once(':').unwrap_or(("", &dt));
                    lit.datatype = Some(self.iri_of(p, l)?);
                }
                Ok(PatternTerm::Const(Term::Literal(lit)))
            }
            Some(Tok::Number(n)) => {
                let dt = if n.contains('.') {
                    "decimal"
                } else {
                    "integer"
                };
                Ok(PatternTerm::Const(Term::Literal(Literal::typed(
                    n,
                    format!("{XSD}{dt}"),
                ))))
            }
            Some(Tok::Word(w)) if w == "true" || w == "false" => Ok(PatternTerm::Const(
                Term::Literal(Literal::typed(w, format!("{XSD}boolean"))),
            )),
            Some(Tok::Blank(_)) => Err(unsupported("blank nodes in graph patterns")),
            Some(Tok::Punct('[')) => Err(unsupported("blank node property lists")),
            Some(Tok::Punct('(')) => Err(unsupported("RDF collections")),
            _ => {
                self.at -= 1;
                Err(self.err("expected an object"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const Q_A: &str = "PREFIX dbo: <http://dbpedia.org/ontology/>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT DISTINCT ?film ?actor1 ?actor2
WHERE {
    ?film dbo:starring ?actor1.
    ?film dbo:starring ?actor2.
    ?actor1 dbo:spouse ?actor2.
    ?film rdf:type dbo:Film.
    ?actor1 dbo:child ?child.
    ?actor2 dbo:child ?child.
    ?child rdf:type dbo:ScreenWriter.
}";

    #[test]
    fn parses_the_film_couple_query() {
        let q = parse_query(Q_A).unwrap();
        assert_eq!(q.form, QueryForm::Select);
        assert!(q.distinct);
        assert_eq!(q.projected, ["film", "actor1", "actor2"]);
        assert_eq!(q.patterns.len(), 7);
        assert_eq!(q.variables(), ["film", "actor1", "actor2", "child"]);
        assert_eq!(
            q.patterns[3],
            TriplePattern::new(
                PatternTerm::var("film"),
                PatternTerm::iri(RDF_TYPE),
                PatternTerm::iri("http://dbpedia.org/ontology/Film")
            )
        );
    }

    #[test]
    fn ask_with_one_ground_pattern() {
        let q = parse_query("ASK { <http://x/a> <http://x/p> <http://x/b> . }").unwrap();
        assert_eq!(q.form, QueryForm::Ask);
        assert_eq!(q.patterns.len(), 1);
        assert!(q.variables().is_empty());
    }

    #[test]
    fn count_distinct_forms() {
        let text = "PREFIX dbo: <http://dbpedia.org/ontology/>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT COUNT(DISTINCT ?film)
WHERE { ?film rdf:type dbo:Film. }";
        let q = parse_query(text).unwrap();
        assert_eq!(q.form, QueryForm::CountDistinct);
        assert_eq!(q.projected, ["film"]);
        let q =
            parse_query("SELECT (COUNT(DISTINCT ?x) AS ?n) WHERE { ?x <http://x/p> ?y }").unwrap();
        assert_eq!(q.form, QueryForm::CountDistinct);
        assert_eq!(q.projected, ["x"]);
    }

    #[test]
    fn unsupported_features_are_named() {
        let cases = [
            (
                "SELECT ?x WHERE { ?x <http://x/p> ?y OPTIONAL { ?y <http://x/q> ?z } }",
                "OPTIONAL",
            ),
            (
                "SELECT ?x WHERE { ?x <http://x/p> ?y . FILTER(?y > 3) }",
                "FILTER",
            ),
            (
                "SELECT ?x WHERE { { ?x <http://x/p> ?y } UNION { ?x <http://x/q> ?y } }",
                "nested group patterns",
            ),
            (
                "SELECT ?x WHERE { ?x <http://x/p>/<http://x/q> ?y }",
                "property paths",
            ),
            ("SELECT ?x WHERE { ?x <http://x/p>* ?y }", "property paths"),
            ("SELECT ?x WHERE { ?x <http://x/p> ?y } LIMIT 10", "LIMIT"),
            (
                "SELECT COUNT(?x) WHERE { ?x <http://x/p> ?y }",
                "COUNT without DISTINCT",
            ),
            (
                "CONSTRUCT { ?x <http://x/p> ?y } WHERE { ?x <http://x/p> ?y }",
                "CONSTRUCT",
            ),
        ];
        for (text, feature) in cases {
            match parse_query(text) {
                Err(SparqlError::Unsupported { feature: f }) => assert_eq!(f, feature, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_query("SELECT ?x WHERE {\n  ?x <http://x/p> \n}") {
            Err(SparqlError::Syntax { line, column, .. }) => assert_eq!((line, column), (3, 1)),
            other => panic!("{other:?}"),
        }
        assert!(
            matches!(parse_query("SELECT ?x WHERE { ?x foo:p ?y }"), Err(SparqlError::UnknownPrefix(p)) if p == "foo")
        );
        assert!(
            matches!(parse_query("SELECT ?z WHERE { ?x <http://x/p> ?y }"), Err(SparqlError::UnboundVariable(v)) if v == "z")
        );
        assert_eq!(parse_query("ASK { }"), Err(SparqlError::EmptyPattern));
    }

    #[test]
    fn dollar_and_question_mark_name_the_same_variable() {
        let q = parse_query("SELECT ?x WHERE { $x <http://x/p> ?y . ?x <http://x/q> $y }").unwrap();
        assert_eq!(q.variables(), ["x", "y"]);
    }

    #[test]
    fn abbreviations_literals_and_keyword_a() {
        let q = parse_query(
            "PREFIX x: <http://x/>
PREFIX xsd: <http://www.w3.org/2001/XMLSchema#>
select * { ?s a x:C ; x:name \"Bob\"@en, 'B' ; x:age 42 ; x:w \"1.5\"^^xsd:decimal . }",
        )
        .unwrap();
        assert_eq!(q.patterns.len(), 5);
        assert_eq!(q.projected, ["s"]);
        assert_eq!(q.patterns[0].p, PatternTerm::iri(RDF_TYPE));
        assert_eq!(
            q.patterns[1].o,
            PatternTerm::Const(Term::Literal(Literal::lang("Bob", "en")))
        );
        assert_eq!(q.patterns[2].o, PatternTerm::Const(Term::literal("B")));
        assert_eq!(
            q.patterns[3].o,
            PatternTerm::Const(Term::Literal(Literal::typed("42", format!("{XSD}integer"))))
        );
        assert_eq!(
            q.patterns[4].o,
            PatternTerm::Const(Term::Literal(Literal::typed(
                "1.5",
                format!("{XSD}decimal")
            )))
        );
    }
}
