//! The SPARQL fragment: prefixed `SELECT [DISTINCT]`, `ASK` and
//! `SELECT COUNT(DISTINCT ?v)` over a single basic graph pattern.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::term::{Term, TermId};

mod eval;
mod parser;

pub use eval::{ask, count_distinct, evaluate_bgp, solve, BgpSolutions, SelectResult};
pub use parser::parse_query;

/// Subject, predicate or object slot of a triple pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternTerm {
    /// Variable name without the leading `?` / `$`.
    Var(String),
    Const(Term),
}

impl PatternTerm {
    pub fn var(name: impl Into<String>) -> Self {
        PatternTerm::Var(name.into())
    }

    pub fn iri(iri: impl Into<String>) -> Self {
        PatternTerm::Const(Term::iri(iri))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<&Term> {
        match self {
            PatternTerm::Const(t) => Some(t),
            PatternTerm::Var(_) => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, PatternTerm::Var(_))
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => write!(f, "?{v}"),
            PatternTerm::Const(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub s: PatternTerm,
    pub p: PatternTerm,
    pub o: PatternTerm,
}

impl TriplePattern {
    pub fn new(s: PatternTerm, p: PatternTerm, o: PatternTerm) -> Self {
        TriplePattern { s, p, o }
    }

    pub fn terms(&self) -> [&PatternTerm; 3] {
        [&self.s, &self.p, &self.o]
    }

    /// Variables in s, p, o order (may repeat).
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms().into_iter().filter_map(PatternTerm::as_var)
    }

    /// Ground triple under `binding`; `None` when a constant is not in the
    /// graph or a variable has no binding.
    pub fn instantiate(
        &self,
        lookup: impl Fn(&Term) -> Option<TermId>,
        binding: impl Fn(&str) -> Option<TermId>,
    ) -> Option<crate::Triple> {
        let resolve = |t: &PatternTerm| match t {
            PatternTerm::Var(v) => binding(v),
            PatternTerm::Const(c) => lookup(c),
        };
        Some(crate::Triple::new(
            resolve(&self.s)?,
            resolve(&self.p)?,
            resolve(&self.o)?,
        ))
    }

    /// Renders the pattern using the shortest declared prefix for IRIs.
    pub fn display_with<'a>(
        &'a self,
        prefixes: &'a BTreeMap<String, String>,
    ) -> impl fmt::Display + 'a {
        PatternDisplay {
            pattern: self,
            prefixes,
        }
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.s, self.p, self.o)
    }
}

struct PatternDisplay<'a> {
    pattern: &'a TriplePattern,
    prefixes: &'a BTreeMap<String, String>,
}

impl fmt::Display for PatternDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.pattern.terms().into_iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match t {
                PatternTerm::Const(Term::Iri(iri)) => {
                    let best = self
                        .prefixes
                        .iter()
                        .filter(|(_, base)| iri.starts_with(base.as_str()))
                        .max_by_key(|(_, base)| base.len());
                    match best {
                        Some((pfx, base)) if is_pn_local(&iri[base.len()..]) => {
                            write!(f, "{pfx}:{}", &iri[base.len()..])?
                        }
                        _ => write!(f, "{t}")?,
                    }
                }
                _ => write!(f, "{t}")?,
            }
        }
        f.write_str(" .")
    }
}

fn is_pn_local(local: &str) -> bool {
    !local.is_empty()
        && !local.ends_with('.')
        && local
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryForm {
    Select,
    Ask,
    CountDistinct,
}

/// A parsed query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub form: QueryForm,
    /// Projected variables (`Select`) or the counted variable (`CountDistinct`).
    pub projected: Vec<String>,
    pub distinct: bool,
    pub patterns: Vec<TriplePattern>,
    pub prefixes: BTreeMap<String, String>,
}

impl Query {
    pub fn parse(text: &str) -> Result<Query, SparqlError> {
        parse_query(text)
    }

    /// A `SELECT DISTINCT` over `patterns` projecting every variable.
    pub fn select_all(patterns: Vec<TriplePattern>) -> Query {
        let projected = variables_of(&patterns);
        Query {
            form: QueryForm::Select,
            projected,
            distinct: true,
            patterns,
            prefixes: BTreeMap::new(),
        }
    }

    /// `var(Q)`: every variable in first-appearance order (s, p, o per
    /// pattern, patterns in textual order).
    pub fn variables(&self) -> Vec<String> {
        variables_of(&self.patterns)
    }
}

/// Distinct variables of `patterns` in first-appearance order.
pub fn variables_of(patterns: &[TriplePattern]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in patterns.iter().flat_map(TriplePattern::vars) {
        if !out.iter().any(|x| x == v) {
            out.push(v.into());
        }
    }
    out
}

/// A total assignment of variables to graph terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SolutionMapping {
    pub vars: Arc<[String]>,
    pub values: Vec<TermId>,
}

impl SolutionMapping {
    pub fn new(vars: Arc<[String]>, values: Vec<TermId>) -> Self {
        debug_assert_eq!(vars.len(), values.len());
        SolutionMapping { vars, values }
    }

    pub fn get(&self, var: &str) -> Option<TermId> {
        self.vars
            .iter()
            .position(|v| v == var)
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, TermId)> {
        self.vars
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
    }

    /// Values of `vars`, in that order.
    pub fn project(&self, vars: &[String]) -> Option<Vec<TermId>> {
        vars.iter().map(|v| self.get(v)).collect()
    }

    /// The mapped triple of `pattern`.
    pub fn instantiate(
        &self,
        graph: &crate::Graph,
        pattern: &TriplePattern,
    ) -> Option<crate::Triple> {
        pattern.instantiate(|t| graph.lookup(t), |v| self.get(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SparqlError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported SPARQL feature: {feature}")]
    Unsupported { feature: String },
    #[error("undeclared prefix '{0}:'")]
    UnknownPrefix(String),
    #[error("variable ?{0} is not used in the graph pattern")]
    UnboundVariable(String),
    #[error("query has no triple patterns")]
    EmptyPattern,
    #[error("expected a {expected} query")]
    WrongForm { expected: &'static str },
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn display_with_prefixes() {
        let mut prefixes = BTreeMap::new();
        prefixes.insert(
            String::from("dbo"),
            String::from("http://dbpedia.org/ontology/"),
        );
        let p = TriplePattern::new(
            PatternTerm::var("film"),
            PatternTerm::iri("http://dbpedia.org/ontology/starring"),
            PatternTerm::iri("http://other/x"),
        );
        assert_eq!(
            p.display_with(&prefixes).to_string(),
            "?film dbo:starring <http://other/x> ."
        );
        assert_eq!(
            p.to_string(),
            "?film <http://dbpedia.org/ontology/starring> <http://other/x> ."
        );
    }

    #[test]
    fn variables_in_first_appearance_order() {
        let q = Query::select_all(alloc::vec![
            TriplePattern::new(
                PatternTerm::var("b"),
                PatternTerm::var("p"),
                PatternTerm::var("a")
            ),
            TriplePattern::new(
                PatternTerm::var("a"),
                PatternTerm::iri("http://x/q"),
                PatternTerm::var("c")
            ),
        ]);
        assert_eq!(q.variables(), ["b", "p", "a", "c"]);
    }
}
