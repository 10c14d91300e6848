//! Seeded graph and query generators for tests and benchmarks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::evalkit::{BenchCase, GroundTruth};
use crate::graph::{Graph, GraphBuilder, Triple};
use crate::sparql::{solve, PatternTerm, Query, QueryForm, TriplePattern};
use crate::term::{Term, TermId};
use crate::RDF_TYPE;

pub const EX: &str = "http://example.org/";

fn ex(local: &str) -> Term {
    Term::iri(format!("{EX}{local}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypedGraphConfig {
    pub classes: usize,
    pub entities_per_class: usize,
    pub relations: usize,
    /// Attempted edges per relation; duplicates collapse.
    pub edges_per_relation: usize,
    pub seed: u64,
}

/// A knowledge graph with planted structure: every relation links a fixed
/// domain class to a fixed range class, and only entities of the same
/// community (index modulo `communities`) are linked.
#[derive(Debug, Clone)]
pub struct PlantedKg {
    pub graph: Graph,
    pub classes: Vec<TermId>,
    /// Members of each class.
    pub members: Vec<Vec<TermId>>,
    /// Relation id with its domain and range class index.
    pub relations: Vec<(TermId, usize, usize)>,
}

pub const COMMUNITIES: usize = 4;

pub fn planted_kg(cfg: &TypedGraphConfig) -> PlantedKg {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut b = GraphBuilder::new();
    let ty = ex_type();
    let classes: Vec<TermId> = (0..cfg.classes)
        .map(|c| b.intern(ex(&format!("Class{c}"))))
        .collect();
    let members: Vec<Vec<TermId>> = (0..cfg.classes)
        .map(|c| {
            (0..cfg.entities_per_class)
                .map(|k| {
                    let e = ex(&format!("c{c}_e{k}"));
                    b.insert(e.clone(), ty.clone(), ex(&format!("Class{c}")));
                    b.intern(e)
                })
                .collect()
        })
        .collect();
    let mut relations = Vec::new();
    for j in 0..cfg.relations {
        let dom = j % cfg.classes;
        let ran = rng.random_range(0..cfg.classes);
        let r = ex(&format!("rel{j}"));
        let rid = b.intern(r.clone());
        relations.push((rid, dom, ran));
        let communities = COMMUNITIES.min(cfg.entities_per_class).max(1);
        for _ in 0..cfg.edges_per_relation {
            let k = rng.random_range(0..cfg.entities_per_class);
            let same: Vec<usize> = (0..cfg.entities_per_class)
                .filter(|m| m % communities == k % communities)
                .collect();
            let m = *same.choose(&mut rng).expect("community is non-empty");
            if dom == ran && k == m {
                continue;
            }
            b.insert(
                ex(&format!("c{dom}_e{k}")),
                r.clone(),
                ex(&format!("c{ran}_e{m}")),
            );
        }
    }
    PlantedKg {
        graph: b.build(),
        classes,
        members,
        relations,
    }
}

pub fn typed_graph(cfg: &TypedGraphConfig) -> Graph {
    planted_kg(cfg).graph
}

fn ex_type() -> Term {
    Term::iri(RDF_TYPE)
}

/// Uniformly random triples over `entities` nodes and `relations`
/// predicates; duplicates collapse.
pub fn random_graph(entities: usize, relations: usize, triples: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new();
    for _ in 0..triples {
        let s = rng.random_range(0..entities);
        let p = rng.random_range(0..relations);
        let o = rng.random_range(0..entities);
        b.insert(
            ex(&format!("n{s}")),
            ex(&format!("p{p}")),
            ex(&format!("n{o}")),
        );
    }
    b.build()
}

/// The three-family film graph: each family has a film starring a married
/// couple whose shared child is not typed as a screenwriter, so the
/// film/actor/child query has no exact solution and three candidates one
/// triple away.
#[derive(Debug, Clone)]
pub struct ExampleOne {
    pub graph: Graph,
    pub query: Query,
    /// The `(child, rdf:type, ScreenWriter)` triples that would make each
    /// candidate exact.
    pub missing: Vec<Triple>,
    /// Bindings of the film, actor1, actor2, child variables per family.
    pub families: Vec<[TermId; 4]>,
}

pub const EXAMPLE_ONE_QUERY: &str = "PREFIX ex: <http://example.org/>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT ?film ?actor1 ?actor2 WHERE {
  ?film ex:starring ?actor1 .
  ?film ex:starring ?actor2 .
  ?actor1 ex:spouse ?actor2 .
  ?film rdf:type ex:Film .
  ?actor1 ex:child ?child .
  ?actor2 ex:child ?child .
  ?child rdf:type ex:ScreenWriter .
}";

pub fn example_one() -> ExampleOne {
    let mut b = GraphBuilder::new();
    let ty = ex_type();
    let mut families = Vec::new();
    let mut missing_terms = Vec::new();
    for i in 0..3 {
        let film = ex(&format!("film{i}"));
        let a = ex(&format!("actor{i}a"));
        let bb = ex(&format!("actor{i}b"));
        let child = ex(&format!("child{i}"));
        b.insert(film.clone(), ex("starring"), a.clone());
        b.insert(film.clone(), ex("starring"), bb.clone());
        b.insert(a.clone(), ex("spouse"), bb.clone());
        b.insert(film.clone(), ty.clone(), ex("Film"));
        b.insert(a.clone(), ex("child"), child.clone());
        b.insert(bb.clone(), ex("child"), child.clone());
        b.insert(child.clone(), ty.clone(), ex("Person"));
        families.push([film, a, bb, child.clone()].map(|t| b.intern(t)));
        missing_terms.push(child);
    }
    for j in 0..5 {
        let w = ex(&format!("writer{j}"));
        b.insert(w.clone(), ty.clone(), ex("ScreenWriter"));
        b.insert(w.clone(), ty.clone(), ex("Person"));
        b.insert(ex(&format!("film{}", j % 3)), ex("writer"), w);
    }
    let ty_id = b.intern(ty);
    let sw = b.intern(ex("ScreenWriter"));
    let missing = missing_terms
        .into_iter()
        .map(|c| Triple::new(b.intern(c), ty_id, sw))
        .collect();
    ExampleOne {
        graph: b.build(),
        query: Query::parse(EXAMPLE_ONE_QUERY).expect("fixed query parses"),
        missing,
        families,
    }
}

/// A path query read off a random walk of `len` non-type edges, with every
/// node a variable. When `anchor` is set the start node stays a constant.
/// `typed` adds an `rdf:type` pattern for the last node.
pub fn walk_query(
    kg: &PlantedKg,
    len: usize,
    anchor: bool,
    typed: bool,
    rng: &mut impl Rng,
) -> Option<Query> {
    let g = &kg.graph;
    let ty = g.rdf_type();
    let start: Vec<Triple> = g.triples().filter(|t| Some(t.p) != ty).collect();
    let first = *start.choose(rng)?;
    let mut nodes = alloc::vec![first.s, first.o];
    let mut preds = alloc::vec![first.p];
    while preds.len() < len {
        let here = *nodes.last().expect("walk is non-empty");
        let next: Vec<Triple> = g
            .match_pattern(Some(here), None, None)
            .filter(|t| Some(t.p) != ty && !nodes.contains(&t.o))
            .collect();
        let step = next.choose(rng)?;
        preds.push(step.p);
        nodes.push(step.o);
    }
    let node_term = |i: usize| {
        if anchor && i == 0 {
            PatternTerm::Const(g.term(nodes[0]).clone())
        } else {
            PatternTerm::var(format!("v{i}"))
        }
    };
    let mut patterns: Vec<TriplePattern> = preds
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            TriplePattern::new(
                node_term(i),
                PatternTerm::Const(g.term(p).clone()),
                node_term(i + 1),
            )
        })
        .collect();
    if typed {
        let last = nodes.len() - 1;
        let class = g.match_pattern(Some(nodes[last]), ty, None).next()?.o;
        patterns.push(TriplePattern::new(
            node_term(last),
            PatternTerm::Const(Term::iri(RDF_TYPE)),
            PatternTerm::Const(g.term(class).clone()),
        ));
    }
    let mut q = Query::select_all(patterns);
    q.form = QueryForm::Select;
    Some(q)
}

/// Deletion cases over a planted KG: an anchored, typed two-edge path whose
/// exact solutions are few, with the first edge of every exact solution
/// deleted.
pub fn deletion_cases(kg: &PlantedKg, count: usize, max_truth: usize, seed: u64) -> Vec<BenchCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = &kg.graph;
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < count * 200 {
        attempts += 1;
        let Some(q) = walk_query(kg, 2, true, true, &mut rng) else {
            continue;
        };
        let vars = q.variables();
        let Ok(rows) = solve(g, &q.patterns, &vars, None) else {
            continue;
        };
        if rows.rows.is_empty() || rows.rows.len() > max_truth {
            continue;
        }
        let mut deletions: Vec<Triple> = rows
            .mappings()
            .filter_map(|m| m.instantiate(g, &q.patterns[0]))
            .collect();
        deletions.sort_unstable();
        deletions.dedup();
        let truth = GroundTruth::from_exact(g, &q).expect("query is over its own variables");
        let name: String = format!("case{}", out.len());
        out.push(BenchCase {
            name,
            query: q,
            deletions,
            truth: Some(truth),
        });
    }
    out
}
