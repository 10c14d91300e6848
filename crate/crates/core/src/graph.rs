//! Dictionary-encoded, immutable RDF graph with SPO, POS and OSP indexes.
//!
//! Every access pattern `(s?, p?, o?)` is answered by a binary-searched range
//! of one of the three sorted permutations, so pattern counts are `O(log n)`
//! and restricted domain/range counts need no cache: with set semantics,
//! `|dom(r, c)|` is the length of the POS range `(r, c, *)`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::Range;

use crate::term::{Term, TermId};
use crate::RDF_TYPE;

/// A triple of dictionary ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub s: TermId,
    pub p: TermId,
    pub o: TermId,
}

impl Triple {
    pub const fn new(s: TermId, p: TermId, o: TermId) -> Self {
        Triple { s, p, o }
    }
}

/// Bidirectional term ↔ id map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    terms: Vec<Term>,
    ids: BTreeMap<Term, TermId>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `term`, assigning the next free id on first sight.
    pub fn intern(&mut self, term: Term) -> TermId {
        if let Some(&id) = self.ids.get(&term) {
            return id;
        }
        let id = TermId(u32::try_from(self.terms.len()).expect("more than u32::MAX terms"));
        self.terms.push(term.clone());
        self.ids.insert(term, id);
        id
    }

    pub fn lookup(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> Option<&Term> {
        self.terms.get(id.index())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in id order.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }
}

/// Collects triples and freezes them into a [`Graph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    dict: Dictionary,
    triples: Vec<Triple>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, s: Term, p: Term, o: Term) -> Triple {
        let t = Triple::new(
            self.dict.intern(s),
            self.dict.intern(p),
            self.dict.intern(o),
        );
        self.triples.push(t);
        t
    }

    /// Pre-registers a term so it gets an id even if no triple uses it.
    pub fn intern(&mut self, term: Term) -> TermId {
        self.dict.intern(term)
    }

    pub fn build(self) -> Graph {
        Graph::from_parts(Arc::new(self.dict), self.triples)
    }
}

/// Which bound position restricts a degree count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Restriction {
    /// Distinct subjects and distinct objects of the relation.
    None,
    /// `dom(r, c)`: distinct subjects `s` with `(s, r, c)`.
    Object(TermId),
    /// `ran(c, r)`: distinct objects `o` with `(c, r, o)`.
    Subject(TermId),
}

/// Immutable RDF graph.
#[derive(Debug, Clone)]
pub struct Graph {
    dict: Arc<Dictionary>,
    // (s, p, o), (p, o, s) and (o, s, p) keys, each sorted and deduplicated.
    spo: Vec<[u32; 3]>,
    pos: Vec<[u32; 3]>,
    osp: Vec<[u32; 3]>,
    dom_count: Vec<u32>,
    ran_count: Vec<u32>,
    rdf_type: Option<TermId>,
}

#[derive(Clone, Copy)]
enum Order {
    Spo,
    Pos,
    Osp,
}

impl Graph {
    /// Builds the indexes over `triples`, which must only use ids of `dict`.
    /// Duplicates are dropped.
    pub fn from_parts(dict: Arc<Dictionary>, triples: Vec<Triple>) -> Self {
        let n_terms = dict.len();
        let mut spo: Vec<[u32; 3]> = triples
            .iter()
            .map(|t| {
                assert!(
                    t.s.index() < n_terms && t.p.index() < n_terms && t.o.index() < n_terms,
                    "triple uses an id outside the dictionary"
                );
                [t.s.0, t.p.0, t.o.0]
            })
            .collect();
        spo.sort_unstable();
        spo.dedup();
        let mut pos: Vec<[u32; 3]> = spo.iter().map(|&[s, p, o]| [p, o, s]).collect();
        pos.sort_unstable();
        let mut osp: Vec<[u32; 3]> = spo.iter().map(|&[s, p, o]| [o, s, p]).collect();
        osp.sort_unstable();

        let mut dom_count = alloc::vec![0u32; n_terms];
        let mut ran_count = alloc::vec![0u32; n_terms];
        // distinct (s, p) pairs are contiguous in SPO, distinct (p, o) in POS
        for (i, k) in spo.iter().enumerate() {
            if i == 0 || spo[i - 1][..2] != k[..2] {
                dom_count[k[1] as usize] += 1;
            }
        }
        for (i, k) in pos.iter().enumerate() {
            if i == 0 || pos[i - 1][..2] != k[..2] {
                ran_count[k[0] as usize] += 1;
            }
        }
        let rdf_type = dict.lookup(&Term::iri(RDF_TYPE));
        Graph {
            dict,
            spo,
            pos,
            osp,
            dom_count,
            ran_count,
            rdf_type,
        }
    }

    pub fn dictionary(&self) -> &Arc<Dictionary> {
        &self.dict
    }

    /// Number of stored triples.
    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.dict.len()
    }

    pub fn term(&self, id: TermId) -> &Term {
        self.dict.term(id).expect("id from this graph's dictionary")
    }

    pub fn lookup(&self, term: &Term) -> Option<TermId> {
        self.dict.lookup(term)
    }

    /// Id of `rdf:type`, if the dictionary has it.
    pub fn rdf_type(&self) -> Option<TermId> {
        self.rdf_type
    }

    /// All triples in SPO order.
    pub fn triples(&self) -> Matches<'_> {
        Matches {
            keys: self.spo.iter(),
            order: Order::Spo,
        }
    }

    pub fn contains(&self, t: Triple) -> bool {
        self.spo.binary_search(&[t.s.0, t.p.0, t.o.0]).is_ok()
    }

    /// Membership by terms; a term unknown to the dictionary means `false`.
    pub fn contains_terms(&self, s: &Term, p: &Term, o: &Term) -> bool {
        match (self.lookup(s), self.lookup(p), self.lookup(o)) {
            (Some(s), Some(p), Some(o)) => self.contains(Triple::new(s, p, o)),
            _ => false,
        }
    }

    /// Triples matching every bound position, read from the index whose key
    /// prefix covers the bound positions.
    pub fn match_pattern(
        &self,
        s: Option<TermId>,
        p: Option<TermId>,
        o: Option<TermId>,
    ) -> Matches<'_> {
        let (keys, order, prefix): (&[[u32; 3]], Order, Vec<u32>) = match (s, p, o) {
            (None, None, None) => (&self.spo, Order::Spo, Vec::new()),
            (Some(s), None, None) => (&self.spo, Order::Spo, alloc::vec![s.0]),
            (Some(s), Some(p), None) => (&self.spo, Order::Spo, alloc::vec![s.0, p.0]),
            (Some(s), Some(p), Some(o)) => (&self.spo, Order::Spo, alloc::vec![s.0, p.0, o.0]),
            (None, Some(p), None) => (&self.pos, Order::Pos, alloc::vec![p.0]),
            (None, Some(p), Some(o)) => (&self.pos, Order::Pos, alloc::vec![p.0, o.0]),
            (None, None, Some(o)) => (&self.osp, Order::Osp, alloc::vec![o.0]),
            (Some(s), None, Some(o)) => (&self.osp, Order::Osp, alloc::vec![o.0, s.0]),
        };
        let range = prefix_range(keys, &prefix);
        Matches {
            keys: keys[range].iter(),
            order,
        }
    }

    /// Number of triples [`match_pattern`](Self::match_pattern) would yield.
    pub fn count(&self, s: Option<TermId>, p: Option<TermId>, o: Option<TermId>) -> usize {
        self.match_pattern(s, p, o).len()
    }

    /// `|dom(r)|`: distinct subjects of `r`.
    pub fn dom(&self, r: TermId) -> usize {
        self.dom_count.get(r.index()).copied().unwrap_or(0) as usize
    }

    /// `|ran(r)|`: distinct objects of `r`.
    pub fn ran(&self, r: TermId) -> usize {
        self.ran_count.get(r.index()).copied().unwrap_or(0) as usize
    }

    /// `|dom(r, c)|`: distinct subjects `s` with `(s, r, c)` in the graph.
    pub fn dom_at(&self, r: TermId, c: TermId) -> usize {
        self.count(None, Some(r), Some(c))
    }

    /// `|ran(c, r)|`: distinct objects `o` with `(c, r, o)` in the graph.
    pub fn ran_at(&self, c: TermId, r: TermId) -> usize {
        self.count(Some(c), Some(r), None)
    }

    /// Degree statistics of relation `r`, returned as `(domain, range)`
    /// counts. A restricted count fills only its own side.
    pub fn degree_stats(&self, r: TermId, restrict: Restriction) -> (usize, usize) {
        match restrict {
            Restriction::None => (self.dom(r), self.ran(r)),
            Restriction::Object(c) => (self.dom_at(r, c), 0),
            Restriction::Subject(c) => (0, self.ran_at(c, r)),
        }
    }

    /// Distinct predicates in id order.
    pub fn predicates(&self) -> impl Iterator<Item = TermId> + '_ {
        self.dom_count
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| TermId(i as u32))
    }

    /// Distinct terms occurring in subject or object position, in id order.
    pub fn entities(&self) -> Vec<TermId> {
        let mut seen = alloc::vec![false; self.term_count()];
        for &[s, _, o] in &self.spo {
            seen[s as usize] = true;
            seen[o as usize] = true;
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| TermId(i as u32))
            .collect()
    }

    /// A new graph over the same dictionary without `deletions`. Fails with
    /// the deletions that are not present.
    pub fn without(&self, deletions: &[Triple]) -> Result<Graph, Vec<Triple>> {
        let missing: Vec<Triple> = deletions
            .iter()
            .copied()
            .filter(|&t| !self.contains(t))
            .collect();
        if !missing.is_empty() {
            return Err(missing);
        }
        let mut drop: Vec<[u32; 3]> = deletions.iter().map(|t| [t.s.0, t.p.0, t.o.0]).collect();
        drop.sort_unstable();
        let kept = self
            .spo
            .iter()
            .filter(|k| drop.binary_search(k).is_err())
            .map(|&[s, p, o]| Triple::new(TermId(s), TermId(p), TermId(o)))
            .collect();
        Ok(Graph::from_parts(self.dict.clone(), kept))
    }

    /// A new graph over the same dictionary with `extra` added.
    pub fn with_triples(&self, extra: &[Triple]) -> Graph {
        let all = self.triples().chain(extra.iter().copied()).collect();
        Graph::from_parts(self.dict.clone(), all)
    }
}

fn prefix_range(keys: &[[u32; 3]], prefix: &[u32]) -> Range<usize> {
    let n = prefix.len();
    if n == 0 {
        return 0..keys.len();
    }
    let start = keys.partition_point(|k| k[..n] < *prefix);
    let end = start + keys[start..].partition_point(|k| k[..n] == *prefix);
    start..end
}

/// Iterator over matching triples.
#[derive(Debug, Clone)]
pub struct Matches<'a> {
    keys: core::slice::Iter<'a, [u32; 3]>,
    order: Order,
}

impl core::fmt::Debug for Order {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Order::Spo => "spo",
            Order::Pos => "pos",
            Order::Osp => "osp",
        })
    }
}

impl Iterator for Matches<'_> {
    type Item = Triple;

    fn next(&mut self) -> Option<Triple> {
        let &[a, b, c] = self.keys.next()?;
        Some(match self.order {
            Order::Spo => Triple::new(TermId(a), TermId(b), TermId(c)),
            Order::Pos => Triple::new(TermId(c), TermId(a), TermId(b)),
            Order::Osp => Triple::new(TermId(b), TermId(c), TermId(a)),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.keys.size_hint()
    }
}

impl ExactSizeIterator for Matches<'_> {}
