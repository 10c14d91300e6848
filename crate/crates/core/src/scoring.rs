//! Selectivity-based edge weights and solution scores.
//!
//! Every pattern `e` with a constant relation `r` gets a selectivity
//! `δ(e)`: the mean of `|dom(r)|` and `|ran(r)|` when both ends are
//! variables, the restricted count when one end is a constant, and 1 when the
//! pattern is ground. δ is clamped to at least 1. The index `I(Q)` is the sum
//! of δ over all patterns, the weight of an edge is `I(Q) / δ(e)` and the
//! graph score is the sum of weights.
//!
//! A mapping μ is scored as `Σ w(Q, e) · f(μ(e))` over every pattern of the
//! query, where `f` is 1 for triples in the graph and the normalized
//! plausibility otherwise.

use alloc::vec::Vec;

use thiserror::Error;

use crate::embedding::Plausibility;
use crate::graph::Graph;
use crate::sparql::{PatternTerm, SolutionMapping, TriplePattern};
use crate::term::TermId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeForm {
    VarVar,
    VarConst,
    ConstVar,
    ConstConst,
    VarPredicate,
}

impl EdgeForm {
    pub fn classify(e: &TriplePattern) -> EdgeForm {
        match (&e.s, &e.p, &e.o) {
            (_, PatternTerm::Var(_), _) => EdgeForm::VarPredicate,
            (PatternTerm::Var(_), _, PatternTerm::Var(_)) => EdgeForm::VarVar,
            (PatternTerm::Var(_), _, PatternTerm::Const(_)) => EdgeForm::VarConst,
            (PatternTerm::Const(_), _, PatternTerm::Var(_)) => EdgeForm::ConstVar,
            (PatternTerm::Const(_), _, PatternTerm::Const(_)) => EdgeForm::ConstConst,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("pattern {index} has a variable predicate")]
    VariablePredicate { index: usize },
    #[error("empty pattern list")]
    Empty,
}

/// δ(e), clamped to at least 1.
pub fn delta(g: &Graph, e: &TriplePattern) -> Result<f64, ScoringError> {
    let form = EdgeForm::classify(e);
    if form == EdgeForm::VarPredicate {
        return Err(ScoringError::VariablePredicate { index: 0 });
    }
    let id = |t: &PatternTerm| t.as_const().and_then(|c| g.lookup(c));
    let raw = match id(&e.p) {
        None => 0.0,
        Some(r) => match form {
            EdgeForm::VarVar => (g.dom(r) + g.ran(r)) as f64 / 2.0,
            EdgeForm::VarConst => id(&e.o).map_or(0, |c| g.dom_at(r, c)) as f64,
            EdgeForm::ConstVar => id(&e.s).map_or(0, |c| g.ran_at(c, r)) as f64,
            EdgeForm::ConstConst | EdgeForm::VarPredicate => 1.0,
        },
    };
    Ok(raw.max(1.0))
}

/// δ, `I(Q)` and weights of a pattern list, computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryWeights {
    pub deltas: Vec<f64>,
    pub index: f64,
    pub weights: Vec<f64>,
}

impl QueryWeights {
    pub fn compute(g: &Graph, patterns: &[TriplePattern]) -> Result<Self, ScoringError> {
        if patterns.is_empty() {
            return Err(ScoringError::Empty);
        }
        let deltas = patterns
            .iter()
            .enumerate()
            .map(|(index, e)| delta(g, e).map_err(|_| ScoringError::VariablePredicate { index }))
            .collect::<Result<Vec<f64>, _>>()?;
        let index: f64 = deltas.iter().sum();
        let weights = deltas.iter().map(|d| index / d).collect();
        Ok(QueryWeights {
            deltas,
            index,
            weights,
        })
    }

    /// `Score(Q)`.
    pub fn graph_score(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `I(Q)`.
pub fn index_of(g: &Graph, patterns: &[TriplePattern]) -> Result<f64, ScoringError> {
    QueryWeights::compute(g, patterns).map(|w| w.index)
}

/// `w(Q, e)` for the pattern at `edge`.
pub fn weight(g: &Graph, patterns: &[TriplePattern], edge: usize) -> Result<f64, ScoringError> {
    QueryWeights::compute(g, patterns).map(|w| w.weights[edge])
}

/// `Score(Q)`.
pub fn score_graph(g: &Graph, patterns: &[TriplePattern]) -> Result<f64, ScoringError> {
    QueryWeights::compute(g, patterns).map(|w| w.graph_score())
}

/// Number of patterns whose instantiation under `mapping` is not in `g`.
pub fn edit_distance(g: &Graph, patterns: &[TriplePattern], mapping: &SolutionMapping) -> usize {
    patterns
        .iter()
        .filter(|e| !mapping.instantiate(g, e).is_some_and(|t| g.contains(t)))
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeScore {
    pub pattern: usize,
    pub weight: f64,
    pub f: f64,
    pub member: bool,
    /// False when `f` is the fallback for a term without an embedding.
    pub embedded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSolution {
    pub mapping: SolutionMapping,
    pub edit_distance: usize,
    pub score: f64,
    pub per_edge: Vec<EdgeScore>,
}

impl ScoredSolution {
    pub fn is_exact(&self) -> bool {
        self.edit_distance == 0
    }

    pub fn bindings(&self) -> &[TermId] {
        &self.mapping.values
    }
}

/// Scores `mapping` against every pattern.
pub fn score_solution(
    g: &Graph,
    patterns: &[TriplePattern],
    weights: &QueryWeights,
    mapping: SolutionMapping,
    plausibility: &(impl Plausibility + ?Sized),
) -> ScoredSolution {
    let mut per_edge = Vec::with_capacity(patterns.len());
    let mut score = 0.0;
    let mut missing = 0;
    for (i, e) in patterns.iter().enumerate() {
        let triple = mapping.instantiate(g, e);
        let member = triple.is_some_and(|t| g.contains(t));
        let (f, embedded) = if member {
            (1.0, true)
        } else {
            missing += 1;
            match triple.map(|t| plausibility.normalized(t.s, t.p, t.o)) {
                Some(Ok(f)) => (f, true),
                _ => (plausibility.fallback(), false),
            }
        };
        let weight = weights.weights[i];
        score += weight * f;
        per_edge.push(EdgeScore {
            pattern: i,
            weight,
            f,
            member,
            embedded,
        });
    }
    ScoredSolution {
        mapping,
        edit_distance: missing,
        score,
        per_edge,
    }
}
