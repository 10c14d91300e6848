//! Query graphs and subquery tree enumeration.
//!
//! A query is viewed as a directed multigraph whose nodes are its distinct
//! subject/object terms. Constant leaves are stripped (they only restrict,
//! never bind), every spanning tree of what remains is enumerated by
//! checking all `|V| - 1` edge combinations for connectivity, each tree is
//! stripped again, and duplicates are removed by canonical form.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::sparql::{variables_of, PatternTerm, Query, TriplePattern};
use crate::term::Term;

/// Edge-count ceiling accepted by [`enumerate_subquery_trees`] by default.
pub const DEFAULT_MAX_EDGES: usize = 16;
/// Largest number of edge combinations the enumerator will examine.
pub const COMBINATION_BUDGET: u128 = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeLabel {
    Var(String),
    Const(Term),
}

impl NodeLabel {
    fn from_pattern(t: &PatternTerm) -> Self {
        match t {
            PatternTerm::Var(v) => NodeLabel::Var(v.clone()),
            PatternTerm::Const(c) => NodeLabel::Const(c.clone()),
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, NodeLabel::Const(_))
    }

    fn key(&self) -> String {
        match self {
            NodeLabel::Var(v) => format!("?{v}"),
            NodeLabel::Const(c) => format!("{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryEdge {
    pub from: usize,
    pub to: usize,
    pub predicate: PatternTerm,
    /// Index of the source pattern in the original query.
    pub origin: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryGraph {
    pub nodes: Vec<NodeLabel>,
    pub edges: Vec<QueryEdge>,
}

impl QueryGraph {
    /// Variables on nodes and edge labels.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                NodeLabel::Var(v) => Some(v.clone()),
                NodeLabel::Const(_) => None,
            })
            .collect();
        out.extend(
            self.edges
                .iter()
                .filter_map(|e| e.predicate.as_var().map(String::from)),
        );
        out
    }

    /// Undirected degree of each node; a self-loop counts twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = alloc::vec![0; self.nodes.len()];
        for e in &self.edges {
            deg[e.from] += 1;
            deg[e.to] += 1;
        }
        deg
    }

    /// Connectivity of the undirected view. The empty graph counts as
    /// connected.
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut uf = UnionFind::new(self.nodes.len());
        for e in &self.edges {
            uf.union(e.from, e.to);
        }
        let root = uf.find(0);
        (1..self.nodes.len()).all(|i| uf.find(i) == root)
    }

    pub fn origins(&self) -> BTreeSet<usize> {
        self.edges.iter().map(|e| e.origin).collect()
    }

    /// The patterns of `q` this graph still covers, in origin order.
    pub fn patterns<'q>(&self, q: &'q Query) -> Vec<&'q TriplePattern> {
        self.origins().into_iter().map(|i| &q.patterns[i]).collect()
    }

    /// Keeps the listed edges, the nodes they touch and the nodes flagged in
    /// `keep`.
    fn restrict(&self, edges: &[usize], keep: &[bool]) -> QueryGraph {
        let mut used = keep.to_vec();
        for &i in edges {
            used[self.edges[i].from] = true;
            used[self.edges[i].to] = true;
        }
        let mut remap = alloc::vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if used[i] {
                remap[i] = nodes.len();
                nodes.push(n.clone());
            }
        }
        let edges = edges
            .iter()
            .map(|&i| {
                let e = &self.edges[i];
                QueryEdge {
                    from: remap[e.from],
                    to: remap[e.to],
                    predicate: e.predicate.clone(),
                    origin: e.origin,
                }
            })
            .collect();
        QueryGraph { nodes, edges }
    }
}

/// A spanning tree of the reduced query graph, after a second strip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubqueryTree {
    pub graph: QueryGraph,
    /// Patterns of the original query this tree does not cover.
    pub dropped_origins: BTreeSet<usize>,
}

impl SubqueryTree {
    pub fn patterns<'q>(&self, q: &'q Query) -> Vec<&'q TriplePattern> {
        self.graph.patterns(q)
    }

    /// True for the zero-edge tree of a query that reduces to one node.
    pub fn is_degenerate(&self) -> bool {
        self.graph.edges.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("query graph disconnected")]
    Disconnected,
    #[error("combinatorial budget exceeded: {edges} edges, C({edges},{choose}) = {combinations} combinations")]
    BudgetExceeded {
        edges: usize,
        choose: usize,
        combinations: u128,
    },
}

/// One node per distinct subject/object term, one edge per pattern.
pub fn build_query_graph(q: &Query) -> QueryGraph {
    build_from_patterns(&q.patterns)
}

pub fn build_from_patterns(patterns: &[TriplePattern]) -> QueryGraph {
    let mut index: BTreeMap<NodeLabel, usize> = BTreeMap::new();
    let mut g = QueryGraph::default();
    let mut node = |g: &mut QueryGraph, label: NodeLabel| -> usize {
        *index.entry(label.clone()).or_insert_with(|| {
            g.nodes.push(label);
            g.nodes.len() - 1
        })
    };
    for (origin, p) in patterns.iter().enumerate() {
        let from = node(&mut g, NodeLabel::from_pattern(&p.s));
        let to = node(&mut g, NodeLabel::from_pattern(&p.o));
        g.edges.push(QueryEdge {
            from,
            to,
            predicate: p.p.clone(),
            origin,
        });
    }
    g
}

/// Repeatedly removes every degree-1 constant node with its edge until no
/// constant leaf is left. Returns the reduced graph and the origins of the
/// removed edges.
pub fn del_constant_leaf(g: &QueryGraph) -> (QueryGraph, BTreeSet<usize>) {
    let mut cur = g.clone();
    let mut removed = BTreeSet::new();
    loop {
        let deg = cur.degrees();
        let leaves: Vec<bool> = cur
            .nodes
            .iter()
            .zip(&deg)
            .map(|(n, &d)| d == 1 && n.is_const())
            .collect();
        if !leaves.iter().any(|&l| l) {
            return (cur, removed);
        }
        let mut kept_edges = Vec::new();
        for (i, e) in cur.edges.iter().enumerate() {
            if leaves[e.from] || leaves[e.to] {
                removed.insert(e.origin);
            } else {
                kept_edges.push(i);
            }
        }
        // nodes left isolated by the removal stay (variables keep the domain)
        let keep: Vec<bool> = leaves.iter().map(|l| !l).collect();
        let next = cur.restrict(&kept_edges, &keep);
        cur = next;
    }
}

/// Order-independent key: sorted node labels plus the sorted multiset of
/// `(from, predicate, to)` label triples.
pub fn canonical_form(g: &QueryGraph) -> String {
    let mut nodes: Vec<String> = g.nodes.iter().map(NodeLabel::key).collect();
    nodes.sort();
    let mut edges: Vec<String> = g
        .edges
        .iter()
        .map(|e| {
            format!(
                "{} {} {}",
                g.nodes[e.from].key(),
                e.predicate,
                g.nodes[e.to].key()
            )
        })
        .collect();
    edges.sort();
    let mut out = String::new();
    let _ = write!(out, "{}|{}", nodes.join(","), edges.join(";"));
    out
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All distinct subquery trees of `q`.
///
/// The graph is stripped of constant leaves; every combination of
/// `|V| - 1` of its edges that connects all of its nodes (undirected) is a
/// spanning tree, which is stripped again. Trees that would lose a variable
/// (possible only through variable predicates) are not returned.
pub fn enumerate_subquery_trees(
    q: &Query,
    max_edges: usize,
) -> Result<Vec<SubqueryTree>, PlanError> {
    let full = build_query_graph(q);
    let all_origins: BTreeSet<usize> = (0..q.patterns.len()).collect();
    let (reduced, _) = del_constant_leaf(&full);
    if !reduced.is_connected() {
        return Err(PlanError::Disconnected);
    }
    let n_edges = reduced.edges.len();
    let choose = reduced.nodes.len().saturating_sub(1);
    let combinations = binomial(n_edges, choose);
    if n_edges > max_edges || combinations > COMBINATION_BUDGET {
        return Err(PlanError::BudgetExceeded {
            edges: n_edges,
            choose,
            combinations,
        });
    }
    let vars: BTreeSet<String> = variables_of(&q.patterns).into_iter().collect();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    let mut push = |tree: QueryGraph, out: &mut Vec<SubqueryTree>| {
        if tree.variables() != vars {
            return;
        }
        if seen.insert(canonical_form(&tree)) {
            let covered = tree.origins();
            let dropped_origins = all_origins.difference(&covered).copied().collect();
            out.push(SubqueryTree {
                graph: tree,
                dropped_origins,
            });
        }
    };
    let all_nodes = alloc::vec![true; reduced.nodes.len()];
    if choose == 0 {
        // a single remaining node: the one degenerate tree
        push(reduced.restrict(&[], &all_nodes), &mut out);
        return Ok(out);
    }
    for combo in Combinations::new(n_edges, choose) {
        let mut uf = UnionFind::new(reduced.nodes.len());
        // |V| - 1 edges without a cycle span all |V| nodes
        let acyclic = combo
            .iter()
            .all(|&i| uf.union(reduced.edges[i].from, reduced.edges[i].to));
        if !acyclic {
            continue;
        }
        let tree = reduced.restrict(&combo, &all_nodes);
        let (tree, _) = del_constant_leaf(&tree);
        push(tree, &mut out);
    }
    Ok(out)
}

/// Lexicographic `k`-subsets of `0..n`.
struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(current)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}
