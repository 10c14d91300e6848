//! Exact BGP evaluation: greedy selectivity ordering followed by
//! pattern-at-a-time index nested-loop joins.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use super::{PatternTerm, Query, QueryForm, SolutionMapping, SparqlError, TriplePattern};
use crate::graph::Graph;
use crate::term::TermId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Var(usize),
    Const(TermId),
}

#[derive(Debug, Clone, Copy)]
struct Compiled {
    s: Slot,
    p: Slot,
    o: Slot,
}

impl Compiled {
    fn slots(&self) -> [Slot; 3] {
        [self.s, self.p, self.o]
    }
}

/// Full mappings of a pattern list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BgpSolutions {
    pub vars: Arc<[String]>,
    /// One row per mapping, values aligned with `vars`.
    pub rows: Vec<Vec<TermId>>,
    /// Evaluation stopped at the row limit.
    pub truncated: bool,
}

impl BgpSolutions {
    pub fn mappings(&self) -> impl Iterator<Item = SolutionMapping> + '_ {
        self.rows
            .iter()
            .map(|r| SolutionMapping::new(self.vars.clone(), r.clone()))
    }
}

/// Result of [`evaluate_bgp`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectResult {
    /// Mappings over `var(Q)`; with `DISTINCT`, one per projected tuple.
    pub solutions: Vec<SolutionMapping>,
    pub truncated: bool,
}

/// Every mapping over `vars` that sends each pattern into `g`.
///
/// Each variable in `vars` must occur in `patterns`. Stops after `limit`
/// rows and flags the result as truncated.
pub fn solve(
    g: &Graph,
    patterns: &[TriplePattern],
    vars: &[String],
    limit: Option<usize>,
) -> Result<BgpSolutions, SparqlError> {
    let mut rows = Vec::new();
    let mut truncated = false;
    for_each_solution(g, patterns, vars, |row| {
        if limit.is_some_and(|l| rows.len() >= l) {
            truncated = true;
            return ControlFlow::Break(());
        }
        rows.push(row.to_vec());
        ControlFlow::Continue(())
    })?;
    Ok(BgpSolutions {
        vars: vars.into(),
        rows,
        truncated,
    })
}

fn for_each_solution(
    g: &Graph,
    patterns: &[TriplePattern],
    vars: &[String],
    mut emit: impl FnMut(&[TermId]) -> ControlFlow<()>,
) -> Result<(), SparqlError> {
    for v in vars {
        if !patterns.iter().any(|p| p.vars().any(|x| x == v)) {
            return Err(SparqlError::UnboundVariable(v.clone()));
        }
    }
    let mut compiled = Vec::with_capacity(patterns.len());
    for p in patterns {
        let slot = |t: &PatternTerm| -> Option<Slot> {
            match t {
                PatternTerm::Var(v) => Some(Slot::Var(
                    vars.iter().position(|x| x == v).unwrap_or(usize::MAX),
                )),
                PatternTerm::Const(c) => g.lookup(c).map(Slot::Const),
            }
        };
        match (slot(&p.s), slot(&p.p), slot(&p.o)) {
            (Some(s), Some(p), Some(o)) => compiled.push(Compiled { s, p, o }),
            // a constant unknown to the graph matches nothing
            _ => return Ok(()),
        }
    }
    // variables of `patterns` missing from `vars` still need a slot
    let mut width = vars.len();
    let mut extra: Vec<(usize, &str)> = Vec::new();
    for (c, p) in compiled.iter_mut().zip(patterns) {
        for (slot, term) in [(&mut c.s, &p.s), (&mut c.p, &p.p), (&mut c.o, &p.o)] {
            if *slot == Slot::Var(usize::MAX) {
                let name = term.as_var().unwrap_or_default();
                let idx = match extra.iter().find(|(_, n)| *n == name) {
                    Some(&(i, _)) => i,
                    None => {
                        extra.push((width, name));
                        width += 1;
                        width - 1
                    }
                };
                *slot = Slot::Var(idx);
            }
        }
    }
    let order = join_order(g, &compiled);
    let ordered: Vec<Compiled> = order.iter().map(|&i| compiled[i]).collect();
    let mut binding: Vec<Option<TermId>> = alloc::vec![None; width];
    let mut out: Vec<TermId> = Vec::with_capacity(vars.len());
    let _ = join(g, &ordered, &mut binding, &mut |b| {
        out.clear();
        out.extend(
            b[..vars.len()]
                .iter()
                .map(|v| v.expect("all variables bound")),
        );
        emit(&out)
    });
    Ok(())
}

/// Greedy ordering by estimated cardinality: among the patterns sharing a
/// variable with what is already bound (any pattern when none does), take
/// the one with the smallest estimate.
fn join_order(g: &Graph, patterns: &[Compiled]) -> Vec<usize> {
    let mut bound: BTreeSet<usize> = BTreeSet::new();
    let mut remaining: Vec<usize> = (0..patterns.len()).collect();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let connected = |i: &usize| {
            patterns[*i]
                .slots()
                .iter()
                .any(|s| matches!(s, Slot::Var(v) if bound.contains(v)))
        };
        let any_connected = remaining.iter().any(connected);
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .filter(|(_, i)| !any_connected || connected(i))
            .map(|(pos, &i)| (pos, estimate(g, &patterns[i], &bound)))
            .fold((usize::MAX, f64::INFINITY), |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            });
        let chosen = remaining.remove(pos);
        for s in patterns[chosen].slots() {
            if let Slot::Var(v) = s {
                bound.insert(v);
            }
        }
        order.push(chosen);
    }
    order
}

fn estimate(g: &Graph, p: &Compiled, bound: &BTreeSet<usize>) -> f64 {
    let konst = |s: Slot| match s {
        Slot::Const(c) => Some(c),
        Slot::Var(_) => None,
    };
    let is_bound = |s: Slot| matches!(s, Slot::Var(v) if bound.contains(&v));
    let mut est = g.count(konst(p.s), konst(p.p), konst(p.o)) as f64;
    if let Slot::Const(r) = p.p {
        if is_bound(p.s) {
            est /= g.dom(r).max(1) as f64;
        }
        if is_bound(p.o) {
            est /= g.ran(r).max(1) as f64;
        }
    } else if is_bound(p.s) || is_bound(p.o) {
        est /= g.term_count().max(1) as f64;
    }
    est
}

fn join(
    g: &Graph,
    patterns: &[Compiled],
    binding: &mut [Option<TermId>],
    emit: &mut dyn FnMut(&[Option<TermId>]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let Some((first, rest)) = patterns.split_first() else {
        return emit(binding);
    };
    let resolve = |s: Slot, b: &[Option<TermId>]| match s {
        Slot::Const(c) => Some(c),
        Slot::Var(v) => b[v],
    };
    let (s, p, o) = (
        resolve(first.s, binding),
        resolve(first.p, binding),
        resolve(first.o, binding),
    );
    for t in g.match_pattern(s, p, o) {
        let mut newly: [Option<usize>; 3] = [None; 3];
        let mut ok = true;
        for (k, (slot, value)) in [(first.s, t.s), (first.p, t.p), (first.o, t.o)]
            .into_iter()
            .enumerate()
        {
            if let Slot::Var(v) = slot {
                match binding[v] {
                    None => {
                        binding[v] = Some(value);
                        newly[k] = Some(v);
                    }
                    // repeated variable inside one pattern
                    Some(b) if b != value => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                }
            }
        }
        let flow = if ok {
            join(g, rest, binding, emit)
        } else {
            ControlFlow::Continue(())
        };
        for v in newly.into_iter().flatten() {
            binding[v] = None;
        }
        flow?;
    }
    ControlFlow::Continue(())
}

/// Evaluates a `SELECT` query. With `DISTINCT`, duplicates of the projected
/// tuple are dropped (the first full mapping is kept) and `limit` counts
/// distinct projected tuples.
pub fn evaluate_bgp(
    g: &Graph,
    q: &Query,
    limit: Option<usize>,
) -> Result<SelectResult, SparqlError> {
    if q.form != QueryForm::Select {
        return Err(SparqlError::WrongForm { expected: "SELECT" });
    }
    let vars: Arc<[String]> = q.variables().into();
    let proj: Vec<usize> = q
        .projected
        .iter()
        .map(|p| {
            vars.iter()
                .position(|v| v == p)
                .ok_or_else(|| SparqlError::UnboundVariable(p.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut seen: BTreeSet<Vec<TermId>> = BTreeSet::new();
    let mut solutions = Vec::new();
    let mut truncated = false;
    for_each_solution(g, &q.patterns, &vars, |row| {
        if q.distinct {
            let key: Vec<TermId> = proj.iter().map(|&i| row[i]).collect();
            if seen.contains(&key) {
                return ControlFlow::Continue(());
            }
            if limit.is_some_and(|l| solutions.len() >= l) {
                truncated = true;
                return ControlFlow::Break(());
            }
            seen.insert(key);
        } else if limit.is_some_and(|l| solutions.len() >= l) {
            truncated = true;
            return ControlFlow::Break(());
        }
        solutions.push(SolutionMapping::new(vars.clone(), row.to_vec()));
        ControlFlow::Continue(())
    })?;
    Ok(SelectResult {
        solutions,
        truncated,
    })
}

/// `ASK`: whether the pattern has at least one solution.
pub fn ask(g: &Graph, q: &Query) -> Result<bool, SparqlError> {
    if q.form != QueryForm::Ask {
        return Err(SparqlError::WrongForm { expected: "ASK" });
    }
    if let [p] = q.patterns.as_slice() {
        if let Some(t) = p.instantiate(|t| g.lookup(t), |_| None) {
            return Ok(g.contains(t));
        }
    }
    let mut found = false;
    for_each_solution(g, &q.patterns, &q.variables(), |_| {
        found = true;
        ControlFlow::Break(())
    })?;
    Ok(found)
}

/// `SELECT COUNT(DISTINCT ?v)`.
pub fn count_distinct(g: &Graph, q: &Query) -> Result<usize, SparqlError> {
    if q.form != QueryForm::CountDistinct {
        return Err(SparqlError::WrongForm {
            expected: "COUNT(DISTINCT)",
        });
    }
    let target = q.projected.first().ok_or(SparqlError::EmptyPattern)?;
    let vars = q.variables();
    let idx = vars
        .iter()
        .position(|v| v == target)
        .ok_or_else(|| SparqlError::UnboundVariable(target.clone()))?;
    let mut seen = BTreeSet::new();
    for_each_solution(g, &q.patterns, &vars, |row| {
        seen.insert(row[idx]);
        ControlFlow::Continue(())
    })?;
    Ok(seen.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use crate::sparql::parse_query;
    use crate::term::Term;
    use alloc::format;
    use proptest::prelude::*;

    fn x(s: &str) -> Term {
        Term::iri(format!("http://x/{s}"))
    }

    fn graph(triples: &[(&str, &str, &str)]) -> Graph {
        let mut b = GraphBuilder::new();
        for (s, p, o) in triples {
            b.insert(x(s), x(p), x(o));
        }
        b.build()
    }

    #[test]
    fn single_pattern() {
        let g = graph(&[("a", "p", "b")]);
        let q = parse_query("SELECT ?x ?y WHERE { ?x <http://x/p> ?y }").unwrap();
        let r = evaluate_bgp(&g, &q, None).unwrap();
        assert_eq!(r.solutions.len(), 1);
        assert_eq!(r.solutions[0].get("x"), g.lookup(&x("a")));
        assert_eq!(r.solutions[0].get("y"), g.lookup(&x("b")));
        assert!(!r.truncated);
    }

    #[test]
    fn unknown_constant_gives_no_solutions() {
        let g = graph(&[("a", "p", "b")]);
        let q = parse_query("SELECT ?x WHERE { ?x <http://x/p> <http://x/zzz> }").unwrap();
        assert!(evaluate_bgp(&g, &q, None).unwrap().solutions.is_empty());
    }

    #[test]
    fn repeated_variable_within_a_pattern() {
        let g = graph(&[("a", "p", "a"), ("a", "p", "b")]);
        let q = parse_query("SELECT ?x WHERE { ?x <http://x/p> ?x }").unwrap();
        let r = evaluate_bgp(&g, &q, None).unwrap();
        assert_eq!(r.solutions.len(), 1);
        assert_eq!(r.solutions[0].get("x"), g.lookup(&x("a")));
    }

    #[test]
    fn distinct_projection_and_limit() {
        let g = graph(&[("a", "p", "b"), ("a", "p", "c"), ("d", "p", "c")]);
        let q = parse_query("SELECT DISTINCT ?x WHERE { ?x <http://x/p> ?y }").unwrap();
        assert_eq!(evaluate_bgp(&g, &q, None).unwrap().solutions.len(), 2);
        let r = evaluate_bgp(&g, &q, Some(1)).unwrap();
        assert_eq!(r.solutions.len(), 1);
        assert!(r.truncated);
        // limit equal to the result size is not a truncation
        assert!(!evaluate_bgp(&g, &q, Some(2)).unwrap().truncated);
        let all = parse_query("SELECT ?x WHERE { ?x <http://x/p> ?y }").unwrap();
        assert_eq!(evaluate_bgp(&g, &all, None).unwrap().solutions.len(), 3);
    }

    #[test]
    fn ask_forms() {
        let g = graph(&[("a", "p", "b")]);
        assert!(ask(
            &g,
            &parse_query("ASK { <http://x/a> <http://x/p> <http://x/b> }").unwrap()
        )
        .unwrap());
        assert!(!ask(
            &g,
            &parse_query("ASK { <http://x/b> <http://x/p> <http://x/a> }").unwrap()
        )
        .unwrap());
        let with_var = parse_query("ASK { ?s <http://x/p> <http://x/b> }").unwrap();
        assert!(ask(&g, &with_var).unwrap());
        let select = parse_query("SELECT ?s WHERE { ?s <http://x/p> <http://x/b> }").unwrap();
        assert!(!evaluate_bgp(&g, &select, None)
            .unwrap()
            .solutions
            .is_empty());
        assert!(matches!(
            ask(&g, &select),
            Err(SparqlError::WrongForm { .. })
        ));
    }

    #[test]
    fn count_distinct_counts_bindings() {
        let g = graph(&[("a", "p", "b"), ("a", "p", "c")]);
        let q = parse_query("SELECT COUNT(DISTINCT ?x) WHERE { ?x <http://x/p> ?y }").unwrap();
        assert_eq!(count_distinct(&g, &q).unwrap(), 1);
        let q = parse_query("SELECT COUNT(DISTINCT ?y) WHERE { ?x <http://x/p> ?y }").unwrap();
        assert_eq!(count_distinct(&g, &q).unwrap(), 2);
        let q = parse_query("SELECT COUNT(DISTINCT ?x) WHERE { ?x <http://x/q> ?y }").unwrap();
        assert_eq!(count_distinct(&g, &q).unwrap(), 0);
        let q = parse_query("SELECT COUNT(DISTINCT ?x) WHERE { ?x <http://x/p> <http://x/c> }")
            .unwrap();
        assert_eq!(count_distinct(&g, &q).unwrap(), 1);
    }

    #[test]
    fn count_distinct_of_type_equals_restricted_domain() {
        let mut b = GraphBuilder::new();
        let ty = Term::iri(crate::RDF_TYPE);
        for i in 0..5 {
            b.insert(x(&format!("f{i}")), ty.clone(), x("Film"));
        }
        b.insert(x("f0"), ty.clone(), x("Thing"));
        let g = b.build();
        let q = parse_query(
            "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT COUNT(DISTINCT ?film) WHERE { ?film rdf:type <http://x/Film> . }",
        )
        .unwrap();
        let r = g.rdf_type().unwrap();
        assert_eq!(
            count_distinct(&g, &q).unwrap(),
            g.dom_at(r, g.lookup(&x("Film")).unwrap())
        );
        assert_eq!(count_distinct(&g, &q).unwrap(), 5);
    }

    // --- exhaustive-assignment oracle -------------------------------------

    fn brute_force(
        g: &Graph,
        patterns: &[TriplePattern],
        vars: &[String],
    ) -> BTreeSet<Vec<TermId>> {
        let domain: Vec<TermId> = (0..g.term_count() as u32).map(TermId).collect();
        let mut out = BTreeSet::new();
        let mut assignment = alloc::vec![TermId(0); vars.len()];
        fn rec(
            g: &Graph,
            patterns: &[TriplePattern],
            vars: &[String],
            domain: &[TermId],
            assignment: &mut Vec<TermId>,
            depth: usize,
            out: &mut BTreeSet<Vec<TermId>>,
        ) {
            if depth == vars.len() {
                let ok = patterns.iter().all(|p| {
                    p.instantiate(
                        |t| g.lookup(t),
                        |v| vars.iter().position(|x| x == v).map(|i| assignment[i]),
                    )
                    .is_some_and(|t| g.contains(t))
                });
                if ok {
                    out.insert(assignment.clone());
                }
                return;
            }
            for &d in domain {
                assignment[depth] = d;
                rec(g, patterns, vars, domain, assignment, depth + 1, out);
            }
        }
        rec(g, patterns, vars, &domain, &mut assignment, 0, &mut out);
        out
    }

    fn arb_graph() -> impl Strategy<Value = Vec<(u8, u8, u8)>> {
        proptest::collection::vec((0u8..8, 0u8..3, 0u8..8), 1..50)
    }

    fn arb_pattern() -> impl Strategy<Value = (u8, u8, u8, u8, u8)> {
        // (s var/const, s id, p id, o var/const, o id)
        (0u8..6, 0u8..3, 0u8..6, 0u8..8, 0u8..8)
    }

    fn build_graph(raw: &[(u8, u8, u8)]) -> Graph {
        let mut b = GraphBuilder::new();
        for &(s, p, o) in raw {
            b.insert(
                x(&format!("e{s}")),
                x(&format!("r{p}")),
                x(&format!("e{o}")),
            );
        }
        b.build()
    }

    fn to_pattern(&(s, p, o, sc, oc): &(u8, u8, u8, u8, u8)) -> TriplePattern {
        let node = |v: u8, c: u8| {
            if v < 4 {
                PatternTerm::var(format!("v{}", v % 4))
            } else {
                PatternTerm::Const(x(&format!("e{c}")))
            }
        };
        TriplePattern::new(
            node(s, sc),
            PatternTerm::Const(x(&format!("r{p}"))),
            node(o, oc),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn evaluation_matches_exhaustive_assignment(raw in arb_graph(), pats in proptest::collection::vec(arb_pattern(), 1..4)) {
            let g = build_graph(&raw);
            let patterns: Vec<TriplePattern> = pats.iter().map(to_pattern).collect();
            let vars = crate::sparql::variables_of(&patterns);
            let got: BTreeSet<Vec<TermId>> = solve(&g, &patterns, &vars, None).unwrap().rows.into_iter().collect();
            prop_assert_eq!(&got, &brute_force(&g, &patterns, &vars));
            // every solution instantiates into the graph
            for row in &got {
                for p in &patterns {
                    let t = p.instantiate(|t| g.lookup(t), |v| vars.iter().position(|x| x == v).map(|i| row[i]));
                    prop_assert!(t.is_some_and(|t| g.contains(t)));
                }
            }
            // join-order independence
            let mut reversed = patterns.clone();
            reversed.reverse();
            let again: BTreeSet<Vec<TermId>> = solve(&g, &reversed, &vars, None).unwrap().rows.into_iter().collect();
            prop_assert_eq!(got, again);
        }
    }

    #[test]
    fn star_query_over_a_fifty_triple_graph() {
        let raw: Vec<(u8, u8, u8)> = (0..50u32)
            .map(|i| ((i % 9) as u8, ((i / 9) % 3) as u8, ((i * 5 + 1) % 9) as u8))
            .collect();
        let g = build_graph(&raw);
        assert!(g.len() <= 50);
        let q = parse_query(
            "SELECT ?c ?a ?b ?d WHERE { ?c <http://x/r0> ?a . ?c <http://x/r1> ?b . ?c <http://x/r2> ?d . }",
        )
        .unwrap();
        let vars = q.variables();
        let got: BTreeSet<Vec<TermId>> = solve(&g, &q.patterns, &vars, None)
            .unwrap()
            .rows
            .into_iter()
            .collect();
        let expected = brute_force(&g, &q.patterns, &vars);
        assert!(!expected.is_empty());
        assert_eq!(got, expected);
        let twice: BTreeSet<Vec<TermId>> = solve(&g, &q.patterns, &vars, None)
            .unwrap()
            .rows
            .into_iter()
            .collect();
        assert_eq!(got, twice);
    }
}
