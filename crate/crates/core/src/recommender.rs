//! Ranked approximate answers.
//!
//! Every subquery tree of the query is evaluated exactly. The resulting
//! mappings are merged across trees, filtered to edit distance below the
//! threshold, scored against the full query and ranked.

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::clock::Clock;
use crate::embedding::Plausibility;
use crate::graph::Graph;
use crate::qparser::{enumerate_subquery_trees, PlanError, DEFAULT_MAX_EDGES};
use crate::scoring::{edit_distance, score_solution, QueryWeights, ScoredSolution, ScoringError};
use crate::sparql::{solve, Query, SolutionMapping, SparqlError, TriplePattern};
use crate::term::TermId;

pub const DEFAULT_THRESHOLD: usize = 2;
pub const DEFAULT_PER_TREE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecommendRequest {
    pub query: Query,
    /// Keep mappings whose edit distance is strictly below this.
    pub threshold: usize,
    pub top_k: usize,
    /// Rows kept per subquery tree before evaluation stops.
    pub per_tree_limit: usize,
    pub max_edges: usize,
}

impl RecommendRequest {
    pub fn new(query: Query, top_k: usize) -> Self {
        RecommendRequest {
            query,
            threshold: DEFAULT_THRESHOLD,
            top_k,
            per_tree_limit: DEFAULT_PER_TREE_LIMIT,
            max_edges: DEFAULT_MAX_EDGES,
        }
    }
}

/// Phase durations in nanoseconds, as reported by the injected clock.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseTimings {
    pub parse: u64,
    pub plan: u64,
    pub evaluate: u64,
    pub score: u64,
    pub rank: u64,
}

impl PhaseTimings {
    pub fn total(&self) -> u64 {
        self.parse + self.plan + self.evaluate + self.score + self.rank
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    /// Projection order of `mapping` values in every solution.
    pub variables: Arc<[alloc::string::String]>,
    pub solutions: Vec<ScoredSolution>,
    /// Distinct mappings produced by all trees, before the threshold.
    pub candidates_seen: usize,
    pub trees_evaluated: usize,
    /// Some tree hit `per_tree_limit`.
    pub truncated: bool,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecommendError {
    #[error(transparent)]
    Sparql(#[from] SparqlError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("query unmatchable: it reduces to a single node with no edges")]
    QueryUnmatchable,
    #[error(
        "pattern {index} has a variable predicate, which approximate answering does not support"
    )]
    VariablePredicate { index: usize },
    #[error("threshold must be at least 1")]
    InvalidThreshold,
    #[error("top-k must be at least 1")]
    InvalidTopK,
}

impl From<ScoringError> for RecommendError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::VariablePredicate { index } => {
                RecommendError::VariablePredicate { index }
            }
            ScoringError::Empty => RecommendError::Sparql(SparqlError::EmptyPattern),
        }
    }
}

/// Parses `text` and recommends, attributing parse time too.
pub fn parse_and_recommend(
    g: &Graph,
    text: &str,
    configure: impl FnOnce(Query) -> RecommendRequest,
    plausibility: &(impl Plausibility + ?Sized),
    clock: &impl Clock,
) -> Result<Recommendation, RecommendError> {
    let start = clock.now_nanos();
    let query = Query::parse(text)?;
    let parsed = clock.now_nanos();
    let mut rec = recommend_from(g, &configure(query), plausibility, clock, parsed)?;
    rec.timings.parse = parsed.saturating_sub(start);
    Ok(rec)
}

pub fn recommend(
    g: &Graph,
    req: &RecommendRequest,
    plausibility: &(impl Plausibility + ?Sized),
    clock: &impl Clock,
) -> Result<Recommendation, RecommendError> {
    let start = clock.now_nanos();
    recommend_from(g, req, plausibility, clock, start)
}

fn recommend_from(
    g: &Graph,
    req: &RecommendRequest,
    plausibility: &(impl Plausibility + ?Sized),
    clock: &impl Clock,
    start: u64,
) -> Result<Recommendation, RecommendError> {
    if req.threshold == 0 {
        return Err(RecommendError::InvalidThreshold);
    }
    if req.top_k == 0 {
        return Err(RecommendError::InvalidTopK);
    }
    let q = &req.query;
    if q.patterns.is_empty() {
        return Err(SparqlError::EmptyPattern.into());
    }
    if let Some(index) = q.patterns.iter().position(|p| p.p.is_var()) {
        return Err(RecommendError::VariablePredicate { index });
    }
    let weights = QueryWeights::compute(g, &q.patterns)?;
    let trees = enumerate_subquery_trees(q, req.max_edges)?;
    if trees.iter().all(|t| t.is_degenerate()) {
        return Err(RecommendError::QueryUnmatchable);
    }
    let planned = clock.now_nanos();

    let vars = q.variables();
    let shared: Arc<[alloc::string::String]> = vars.clone().into();
    let mut seen: BTreeSet<Vec<TermId>> = BTreeSet::new();
    let mut candidates = Vec::new();
    let mut truncated = false;
    for tree in &trees {
        let patterns: Vec<TriplePattern> = tree.patterns(q).into_iter().cloned().collect();
        let rows = solve(g, &patterns, &vars, Some(req.per_tree_limit))?;
        truncated |= rows.truncated;
        for row in rows.rows {
            if seen.contains(&row) {
                continue;
            }
            seen.insert(row.clone());
            let mapping = SolutionMapping::new(shared.clone(), row);
            if edit_distance(g, &q.patterns, &mapping) < req.threshold {
                candidates.push(mapping);
            }
        }
    }
    let evaluated = clock.now_nanos();

    let scored: Vec<ScoredSolution> = candidates
        .into_iter()
        .map(|m| score_solution(g, &q.patterns, &weights, m, plausibility))
        .collect();
    let score_done = clock.now_nanos();

    let solutions = rank(scored, req.top_k);
    let ranked = clock.now_nanos();

    Ok(Recommendation {
        variables: shared,
        solutions,
        candidates_seen: seen.len(),
        trees_evaluated: trees.len(),
        truncated,
        timings: PhaseTimings {
            parse: 0,
            plan: planned.saturating_sub(start),
            evaluate: evaluated.saturating_sub(planned),
            score: score_done.saturating_sub(evaluated),
            rank: ranked.saturating_sub(score_done),
        },
    })
}

/// Score descending, then edit distance ascending, then binding tuple.
pub fn compare(a: &ScoredSolution, b: &ScoredSolution) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.edit_distance.cmp(&b.edit_distance))
        .then_with(|| a.mapping.values.cmp(&b.mapping.values))
}

/// Stable sort by [`compare`], truncated to `k`.
pub fn rank(mut solutions: Vec<ScoredSolution>, k: usize) -> Vec<ScoredSolution> {
    solutions.sort_by(compare);
    solutions.truncate(k);
    solutions
}
