//! Effectiveness metrics and the fact-deletion benchmark.
//!
//! A benchmark case deletes triples from a graph so that a query loses its
//! exact solutions, recommends over the corrupted graph and measures where
//! the original answers land.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::embedding::{
    train, EmbeddingConfig, EmbeddingSet, Plausibility, Scorer, UniformPlausibility,
};
use crate::graph::{Graph, Triple};
use crate::qparser::DEFAULT_MAX_EDGES;
use crate::recommender::{
    recommend, RecommendError, RecommendRequest, DEFAULT_PER_TREE_LIMIT, DEFAULT_THRESHOLD,
};
use crate::sparql::{solve, Query, SparqlError};
use crate::term::TermId;
use crate::NoClock;

/// Binding tuples, in projection order, that count as correct.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    correct: BTreeSet<Vec<TermId>>,
}

impl GroundTruth {
    pub fn new(tuples: impl IntoIterator<Item = Vec<TermId>>) -> Self {
        GroundTruth {
            correct: tuples.into_iter().collect(),
        }
    }

    /// The projected exact solutions of `q` over `g`.
    pub fn from_exact(g: &Graph, q: &Query) -> Result<Self, SparqlError> {
        let vars = q.variables();
        let rows = solve(g, &q.patterns, &vars, None)?;
        let idx: Vec<usize> = q
            .projected
            .iter()
            .map(|p| {
                vars.iter()
                    .position(|v| v == p)
                    .ok_or_else(|| SparqlError::UnboundVariable(p.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(GroundTruth::new(
            rows.rows
                .into_iter()
                .map(|r| idx.iter().map(|&i| r[i]).collect()),
        ))
    }

    pub fn contains(&self, tuple: &[TermId]) -> bool {
        self.correct.contains(tuple)
    }

    pub fn len(&self) -> usize {
        self.correct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correct.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<TermId>> {
        self.correct.iter()
    }
}

/// `1 / r` for the first correct tuple at 1-based position `r`, else 0.
pub fn reciprocal_rank(ranked: &[Vec<TermId>], truth: &GroundTruth) -> f64 {
    ranked
        .iter()
        .position(|t| truth.contains(t))
        .map_or(0.0, |p| 1.0 / (p + 1) as f64)
}

/// Mean rank with earlier correct tuples removed from the count, so that
/// correct answers filling the top of the list give exactly 1.0. Correct
/// tuples absent from `ranked` count as rank `ranked.len() + 1`.
pub fn mean_rank(ranked: &[Vec<TermId>], truth: &GroundTruth) -> f64 {
    mean_rank_by(ranked, truth, true)
}

/// Plain mean of the 1-based positions of the correct tuples, missing ones
/// counting as `ranked.len() + 1`.
pub fn raw_mean_rank(ranked: &[Vec<TermId>], truth: &GroundTruth) -> f64 {
    mean_rank_by(ranked, truth, false)
}

fn mean_rank_by(ranked: &[Vec<TermId>], truth: &GroundTruth, filtered: bool) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let mut seen: BTreeSet<&[TermId]> = BTreeSet::new();
    let mut total = 0.0;
    let mut above = 0usize;
    for (pos, t) in ranked.iter().enumerate() {
        if truth.contains(t) && seen.insert(t) {
            let rank = if filtered { pos + 1 - above } else { pos + 1 };
            total += rank as f64;
            above += 1;
        }
    }
    let missing = truth.len() - seen.len();
    total += (missing * (ranked.len() + 1)) as f64;
    total / truth.len() as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{} deletion(s) not present in the graph, first: {first}", .missing.len())]
    MissingDeletions { missing: Vec<Triple>, first: String },
    #[error("query still has exact solutions after the deletions")]
    StillExact,
    #[error("ground truth is empty")]
    EmptyTruth,
    #[error(transparent)]
    Sparql(#[from] SparqlError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Embedding(#[from] crate::embedding::EmbeddingError),
}

/// `g` without `deletions`.
pub fn corrupt_graph(g: &Graph, deletions: &[Triple]) -> Result<Graph, EvalError> {
    g.without(deletions).map_err(|missing| {
        let t = missing[0];
        let first = alloc::format!("{} {} {} .", g.term(t.s), g.term(t.p), g.term(t.o));
        EvalError::MissingDeletions { missing, first }
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchCase {
    pub name: String,
    pub query: Query,
    pub deletions: Vec<Triple>,
    /// Projected correct tuples; computed on the uncorrupted graph when
    /// absent.
    pub truth: Option<GroundTruth>,
}

/// Where the plausibility of missing triples comes from.
#[derive(Debug, Clone)]
pub enum PlausibilitySource<'a> {
    /// Train fresh embeddings on each corrupted graph.
    TrainOnCorrupted(EmbeddingConfig),
    /// Use one embedding set for every case.
    Fixed(&'a EmbeddingSet),
    /// Constant f for every missing triple (ablation baseline).
    Uniform(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchSettings {
    pub threshold: usize,
    pub top_k: usize,
    pub per_tree_limit: usize,
    pub max_edges: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            threshold: DEFAULT_THRESHOLD,
            top_k: 100,
            per_tree_limit: DEFAULT_PER_TREE_LIMIT,
            max_edges: DEFAULT_MAX_EDGES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseMetrics {
    pub rr: f64,
    pub mr: f64,
    pub raw_mr: f64,
    pub truth: usize,
    pub returned: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub name: String,
    pub outcome: Result<CaseMetrics, String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    fn successes(&self) -> impl Iterator<Item = &CaseMetrics> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Mean RR over successful cases.
    pub fn mean_rr(&self) -> Option<f64> {
        mean(self.successes().map(|m| m.rr))
    }

    /// Mean MR over successful cases.
    pub fn mean_mr(&self) -> Option<f64> {
        mean(self.successes().map(|m| m.mr))
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| sum / n as f64)
}

/// Runs every case, recording failures instead of stopping.
pub fn run_benchmark(
    g: &Graph,
    cases: &[BenchCase],
    source: &PlausibilitySource<'_>,
    settings: &BenchSettings,
) -> BenchReport {
    let rows = cases
        .iter()
        .map(|case| BenchRow {
            name: case.name.clone(),
            outcome: run_case(g, case, source, settings).map_err(|e| e.to_string()),
        })
        .collect();
    BenchReport { rows }
}

pub fn run_case(
    g: &Graph,
    case: &BenchCase,
    source: &PlausibilitySource<'_>,
    settings: &BenchSettings,
) -> Result<CaseMetrics, EvalError> {
    let truth = match &case.truth {
        Some(t) => t.clone(),
        None => GroundTruth::from_exact(g, &case.query)?,
    };
    if truth.is_empty() {
        return Err(EvalError::EmptyTruth);
    }
    let corrupted = corrupt_graph(g, &case.deletions)?;
    if !GroundTruth::from_exact(&corrupted, &case.query)?.is_empty() {
        return Err(EvalError::StillExact);
    }
    let req = RecommendRequest {
        query: case.query.clone(),
        threshold: settings.threshold,
        top_k: settings.top_k,
        per_tree_limit: settings.per_tree_limit,
        max_edges: settings.max_edges,
    };
    let rec = match source {
        PlausibilitySource::TrainOnCorrupted(cfg) => {
            let set = train(&corrupted, cfg)?.embeddings;
            recommend_with(&corrupted, &req, &Scorer::new(&set, &corrupted))?
        }
        PlausibilitySource::Fixed(set) => {
            recommend_with(&corrupted, &req, &Scorer::new(set, &corrupted))?
        }
        PlausibilitySource::Uniform(c) => {
            recommend_with(&corrupted, &req, &UniformPlausibility(*c))?
        }
    };
    let ranked = projected_ranking(&case.query, &rec);
    Ok(CaseMetrics {
        rr: reciprocal_rank(&ranked, &truth),
        mr: mean_rank(&ranked, &truth),
        raw_mr: raw_mean_rank(&ranked, &truth),
        truth: truth.len(),
        returned: ranked.len(),
    })
}

fn recommend_with(
    g: &Graph,
    req: &RecommendRequest,
    p: &impl Plausibility,
) -> Result<crate::recommender::Recommendation, RecommendError> {
    recommend(g, req, p, &NoClock)
}

/// Projected tuples of a recommendation, first occurrence kept.
pub fn projected_ranking(q: &Query, rec: &crate::recommender::Recommendation) -> Vec<Vec<TermId>> {
    let mut seen = BTreeSet::new();
    rec.solutions
        .iter()
        .filter_map(|s| s.mapping.project(&q.projected))
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::example_one;
    use alloc::vec;

    fn t(ids: &[u32]) -> Vec<TermId> {
        ids.iter().map(|&i| TermId(i)).collect()
    }

    #[test]
    fn reciprocal_rank_cases() {
        let ranked = vec![t(&[1]), t(&[2]), t(&[3])];
        assert_eq!(reciprocal_rank(&ranked, &GroundTruth::new([t(&[1])])), 1.0);
        assert_eq!(
            reciprocal_rank(&ranked, &GroundTruth::new([t(&[3])])),
            1.0 / 3.0
        );
        assert_eq!(reciprocal_rank(&ranked, &GroundTruth::new([t(&[9])])), 0.0);
    }

    #[test]
    fn mean_rank_conventions() {
        let ranked = vec![t(&[1]), t(&[2]), t(&[3])];
        let one = GroundTruth::new([t(&[1])]);
        assert_eq!(mean_rank(&ranked, &one), 1.0);
        let split = GroundTruth::new([t(&[1]), t(&[3])]);
        assert_eq!(raw_mean_rank(&ranked, &split), 2.0);
        assert_eq!(mean_rank(&ranked, &split), 1.5);
        let prefix = GroundTruth::new([t(&[1]), t(&[2])]);
        assert_eq!(mean_rank(&ranked, &prefix), 1.0);
        assert_eq!(raw_mean_rank(&ranked, &prefix), 1.5);
        let missing = GroundTruth::new([t(&[1]), t(&[7])]);
        assert_eq!(raw_mean_rank(&ranked, &missing), (1.0 + 4.0) / 2.0);
        assert_eq!(mean_rank(&ranked, &missing), (1.0 + 4.0) / 2.0);
    }

    #[test]
    fn corruption_leaves_original_untouched() {
        let toy = example_one();
        let g = toy.graph.with_triples(&toy.missing);
        let n = g.len();
        let c = corrupt_graph(&g, &toy.missing[..1]).unwrap();
        assert_eq!(c.len(), n - 1);
        assert_eq!(g.len(), n);
        assert_eq!(
            c.with_triples(&toy.missing[..1])
                .triples()
                .collect::<Vec<_>>(),
            g.triples().collect::<Vec<_>>()
        );
        assert!(
            matches!(corrupt_graph(&toy.graph, &toy.missing), Err(EvalError::MissingDeletions { missing, .. }) if missing.len() == 3)
        );
    }

    #[test]
    fn benchmark_rows_and_failures() {
        let toy = example_one();
        let g = toy.graph.with_triples(&toy.missing);
        let good = BenchCase {
            name: "all".into(),
            query: toy.query.clone(),
            deletions: toy.missing.clone(),
            truth: None,
        };
        let still_exact = BenchCase {
            name: "partial".into(),
            deletions: toy.missing[..1].to_vec(),
            ..good.clone()
        };
        let report = run_benchmark(
            &g,
            &[good, still_exact],
            &PlausibilitySource::Uniform(0.5),
            &BenchSettings::default(),
        );
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.failures(), 1);
        let m = report.rows[0].outcome.as_ref().unwrap();
        assert_eq!((m.truth, m.returned), (3, 3));
        assert_eq!(m.rr, 1.0);
        assert_eq!(m.mr, 1.0);
        assert_eq!(
            report.rows[1].outcome,
            Err(EvalError::StillExact.to_string())
        );
    }
}
