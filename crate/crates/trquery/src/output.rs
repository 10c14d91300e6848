//! TSV and JSON renderings of query, plan, stats and benchmark results.
//!
//! Every JSON document carries `schema_version`. TSV output starts with a
//! header row whose column order is fixed per document kind.

use std::io::{self, Write};

use serde::Serialize;
use trquery_core::evalkit::BenchReport;
use trquery_core::recommender::{PhaseTimings, Recommendation};
use trquery_core::sparql::Query;
use trquery_core::Graph;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Tsv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct Binding {
    pub variable: String,
    pub term: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeOut {
    /// 1-based position of the pattern in the query.
    pub pattern: usize,
    pub weight: f64,
    pub f: f64,
    pub member: bool,
    pub embedded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub rank: usize,
    pub score: f64,
    pub edit_distance: usize,
    pub bindings: Vec<Binding>,
    pub per_edge: Vec<EdgeOut>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimingsOut {
    pub parse_ns: u64,
    pub plan_ns: u64,
    pub evaluate_ns: u64,
    pub score_ns: u64,
    pub rank_ns: u64,
    pub total_ns: u64,
    pub wall_ns: u64,
}

impl TimingsOut {
    pub fn new(t: &PhaseTimings, wall_ns: u64) -> Self {
        TimingsOut {
            parse_ns: t.parse,
            plan_ns: t.plan,
            evaluate_ns: t.evaluate,
            score_ns: t.score,
            rank_ns: t.rank,
            total_ns: t.total(),
            wall_ns,
        }
    }

    /// One human-readable line with per-phase milliseconds and shares.
    pub fn summary(&self) -> String {
        let total = self.total_ns.max(1) as f64;
        let phase = |name: &str, ns: u64| {
            format!(
                "{name} {:.3} ms ({:.1}%)",
                ns as f64 / 1e6,
                100.0 * ns as f64 / total
            )
        };
        format!(
            "timings: {}, {}, {}, {}, {}; total {:.3} ms, wall {:.3} ms",
            phase("parse", self.parse_ns),
            phase("plan", self.plan_ns),
            phase("evaluate", self.evaluate_ns),
            phase("score", self.score_ns),
            phase("rank", self.rank_ns),
            self.total_ns as f64 / 1e6,
            self.wall_ns as f64 / 1e6,
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryReport {
    pub schema_version: u32,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub candidates_seen: usize,
    pub trees_evaluated: usize,
    pub truncated: bool,
    pub timings: TimingsOut,
}

impl QueryReport {
    /// Columns are the projected variables followed, unless
    /// `projected_only`, by the remaining variables of the query.
    pub fn new(
        g: &Graph,
        q: &Query,
        rec: &Recommendation,
        projected_only: bool,
        timings: TimingsOut,
    ) -> Self {
        let mut columns: Vec<String> = q.projected.clone();
        if !projected_only {
            for v in rec.variables.iter() {
                if !columns.contains(v) {
                    columns.push(v.clone());
                }
            }
        }
        let rows = rec
            .solutions
            .iter()
            .enumerate()
            .map(|(i, s)| Row {
                rank: i + 1,
                score: s.score,
                edit_distance: s.edit_distance,
                bindings: columns
                    .iter()
                    .map(|v| Binding {
                        variable: v.clone(),
                        term: s
                            .mapping
                            .get(v)
                            .map_or_else(String::new, |id| g.term(id).to_string()),
                    })
                    .collect(),
                per_edge: s
                    .per_edge
                    .iter()
                    .map(|e| EdgeOut {
                        pattern: e.pattern + 1,
                        weight: e.weight,
                        f: e.f,
                        member: e.member,
                        embedded: e.embedded,
                    })
                    .collect(),
            })
            .collect();
        QueryReport {
            schema_version: SCHEMA_VERSION,
            columns,
            rows,
            candidates_seen: rec.candidates_seen,
            trees_evaluated: rec.trees_evaluated,
            truncated: rec.truncated,
            timings,
        }
    }

    /// `rank score edit_distance ?var...`
    pub fn write_tsv(&self, w: &mut dyn Write) -> io::Result<()> {
        write!(w, "rank\tscore\tedit_distance")?;
        for c in &self.columns {
            write!(w, "\t?{c}")?;
        }
        writeln!(w)?;
        for r in &self.rows {
            write!(w, "{}\t{:.6}\t{}", r.rank, r.score, r.edit_distance)?;
            for b in &r.bindings {
                write!(w, "\t{}", b.term)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Exact answers for `ask` over a `SELECT` query.
#[derive(Debug, Clone, Serialize)]
pub struct SelectOut {
    pub schema_version: u32,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub truncated: bool,
}

impl SelectOut {
    pub fn write_tsv(&self, w: &mut dyn Write) -> io::Result<()> {
        let header: Vec<String> = self.columns.iter().map(|c| format!("?{c}")).collect();
        writeln!(w, "{}", header.join("\t"))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join("\t"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeOut {
    pub patterns: Vec<String>,
    /// 1-based positions of query patterns the tree leaves out.
    pub dropped: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanOut {
    pub schema_version: u32,
    pub trees: Vec<TreeOut>,
}

impl PlanOut {
    /// Each tree as a `{ ... }` block preceded by a comment header.
    pub fn write_text(&self, w: &mut dyn Write) -> io::Result<()> {
        for (i, t) in self.trees.iter().enumerate() {
            let dropped: Vec<String> = t.dropped.iter().map(usize::to_string).collect();
            let dropped = if dropped.is_empty() {
                String::from("none")
            } else {
                dropped.join(", ")
            };
            writeln!(w, "# tree {} (dropped patterns: {dropped})", i + 1)?;
            writeln!(w, "{{")?;
            for p in &t.patterns {
                writeln!(w, "  {p}")?;
            }
            writeln!(w, "}}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PredicateStats {
    pub predicate: String,
    pub triples: usize,
    pub dom: usize,
    pub ran: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsOut {
    pub schema_version: u32,
    pub triples: usize,
    pub terms: usize,
    pub entities: usize,
    pub predicates: Vec<PredicateStats>,
}

impl StatsOut {
    pub fn new(g: &Graph) -> Self {
        StatsOut {
            schema_version: SCHEMA_VERSION,
            triples: g.len(),
            terms: g.term_count(),
            entities: g.entities().len(),
            predicates: g
                .predicates()
                .map(|p| PredicateStats {
                    predicate: g.term(p).to_string(),
                    triples: g.count(None, Some(p), None),
                    dom: g.dom(p),
                    ran: g.ran(p),
                })
                .collect(),
        }
    }

    pub fn write_tsv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(
            w,
            "# {} triples, {} terms, {} entities",
            self.triples, self.terms, self.entities
        )?;
        writeln!(w, "predicate\ttriples\tdom\tran")?;
        for p in &self.predicates {
            writeln!(w, "{}\t{}\t{}\t{}", p.predicate, p.triples, p.dom, p.ran)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseOut {
    pub name: String,
    pub status: &'static str,
    pub rr: Option<f64>,
    pub mr: Option<f64>,
    pub raw_mr: Option<f64>,
    pub truth: Option<usize>,
    pub returned: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSummary {
    pub cases: usize,
    pub failures: usize,
    pub mean_rr: Option<f64>,
    pub mean_mr: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchOut {
    pub schema_version: u32,
    pub cases: Vec<CaseOut>,
    pub summary: BenchSummary,
}

impl BenchOut {
    pub fn new(report: &BenchReport) -> Self {
        let cases = report
            .rows
            .iter()
            .map(|r| match &r.outcome {
                Ok(m) => CaseOut {
                    name: r.name.clone(),
                    status: "ok",
                    rr: Some(m.rr),
                    mr: Some(m.mr),
                    raw_mr: Some(m.raw_mr),
                    truth: Some(m.truth),
                    returned: Some(m.returned),
                    error: None,
                },
                Err(e) => CaseOut {
                    name: r.name.clone(),
                    status: "error",
                    rr: None,
                    mr: None,
                    raw_mr: None,
                    truth: None,
                    returned: None,
                    error: Some(e.clone()),
                },
            })
            .collect();
        BenchOut {
            schema_version: SCHEMA_VERSION,
            cases,
            summary: BenchSummary {
                cases: report.rows.len(),
                failures: report.failures(),
                mean_rr: report.mean_rr(),
                mean_mr: report.mean_mr(),
            },
        }
    }

    /// `name status rr mr raw_mr truth returned error`, then a `mean` row.
    pub fn write_tsv(&self, w: &mut dyn Write) -> io::Result<()> {
        fn num(x: Option<f64>) -> String {
            x.map_or_else(|| String::from("-"), |x| format!("{x:.6}"))
        }
        fn count(x: Option<usize>) -> String {
            x.map_or_else(|| String::from("-"), |x| x.to_string())
        }
        writeln!(w, "name\tstatus\trr\tmr\traw_mr\ttruth\treturned\terror")?;
        for c in &self.cases {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                c.name,
                c.status,
                num(c.rr),
                num(c.mr),
                num(c.raw_mr),
                count(c.truth),
                count(c.returned),
                c.error.as_deref().unwrap_or("-").replace(['\t', '\n'], " ")
            )?;
        }
        let s = &self.summary;
        writeln!(
            w,
            "mean\t{}/{} ok\t{}\t{}\t-\t-\t-\t-",
            s.cases - s.failures,
            s.cases,
            num(s.mean_rr),
            num(s.mean_mr)
        )
    }
}

pub fn write_json(w: &mut dyn Write, value: &impl Serialize) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
    writeln!(w)
}
