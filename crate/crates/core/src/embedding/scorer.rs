use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::model::{norm_of, Parameters};
use super::{EmbeddingError, EmbeddingSet, Norm};
use crate::graph::Graph;
use crate::term::TermId;

/// Plausibility of a triple that may be missing from the graph.
pub trait Plausibility {
    /// A value in `(0, 1]`, larger meaning more plausible.
    fn normalized(&self, h: TermId, r: TermId, t: TermId) -> Result<f64, EmbeddingError>;

    /// Value used when [`Plausibility::normalized`] fails because a term has
    /// no embedding.
    fn fallback(&self) -> f64;
}

/// Every non-member triple gets the same plausibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformPlausibility(pub f64);

impl Plausibility for UniformPlausibility {
    fn normalized(&self, _: TermId, _: TermId, _: TermId) -> Result<f64, EmbeddingError> {
        Ok(self.0)
    }

    fn fallback(&self) -> f64 {
        self.0
    }
}

/// Mean embedding of the instances of a class.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeVector {
    pub vector: Vec<f64>,
    /// Number of embedded instances averaged. Zero means the vector is the
    /// class's own embedding, or all zeros when it has none.
    pub instances: usize,
}

/// An [`EmbeddingSet`] bound to the ids of one graph.
#[derive(Debug, Clone)]
pub struct Scorer {
    params: Parameters,
    norm: Norm,
    margin: f64,
    entity_rows: Vec<Option<usize>>,
    relation_rows: Vec<Option<usize>>,
    rdf_type: Option<TermId>,
    types: BTreeMap<TermId, TypeVector>,
    ids: alloc::sync::Arc<crate::graph::Dictionary>,
}

impl Scorer {
    /// Resolves every graph term against the set and precomputes the type
    /// vector of every object of an `rdf:type` triple.
    pub fn new(set: &EmbeddingSet, graph: &Graph) -> Self {
        let n = graph.term_count();
        let mut entity_rows = vec![None; n];
        let mut relation_rows = vec![None; n];
        for (i, term) in graph.dictionary().terms().iter().enumerate() {
            entity_rows[i] = set.entity_row(term);
            relation_rows[i] = set.relation_row(term);
        }
        let params = Parameters::from_set(set);
        let rdf_type = graph.rdf_type();
        let mut sums: BTreeMap<TermId, (Vec<f64>, usize)> = BTreeMap::new();
        if let Some(ty) = rdf_type {
            for t in graph.match_pattern(None, Some(ty), None) {
                let entry = sums
                    .entry(t.o)
                    .or_insert_with(|| (vec![0.0; params.dim], 0));
                if let Some(row) = entity_rows[t.s.index()] {
                    for (acc, x) in entry.0.iter_mut().zip(params.entity(row)) {
                        *acc += x;
                    }
                    entry.1 += 1;
                }
            }
        }
        let types = sums
            .into_iter()
            .map(|(class, (sum, m))| {
                let vector = if m > 0 {
                    sum.iter().map(|x| x / m as f64).collect()
                } else {
                    match entity_rows[class.index()] {
                        Some(row) => params.entity(row).to_vec(),
                        None => sum,
                    }
                };
                (
                    class,
                    TypeVector {
                        vector,
                        instances: m,
                    },
                )
            })
            .collect();
        Scorer {
            norm: set.norm(),
            margin: set.margin(),
            params,
            entity_rows,
            relation_rows,
            rdf_type,
            types,
            ids: graph.dictionary().clone(),
        }
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    fn unembedded(&self, id: TermId) -> EmbeddingError {
        let label = self
            .ids
            .term(id)
            .map_or_else(|| id.to_string(), |t| t.to_string());
        EmbeddingError::Unembedded(label)
    }

    fn entity(&self, id: TermId) -> Result<&[f64], EmbeddingError> {
        self.entity_rows
            .get(id.index())
            .copied()
            .flatten()
            .map(|row| self.params.entity(row))
            .ok_or_else(|| self.unembedded(id))
    }

    fn relation(&self, id: TermId) -> Result<usize, EmbeddingError> {
        self.relation_rows
            .get(id.index())
            .copied()
            .flatten()
            .ok_or_else(|| self.unembedded(id))
    }

    /// The raw model score `g(h, r, t)`; lower is more plausible.
    pub fn score_triple(&self, h: TermId, r: TermId, t: TermId) -> Result<f64, EmbeddingError> {
        let hv = self.entity(h)?;
        let tv = self.entity(t)?;
        let rr = self.relation(r)?;
        Ok(self.params.score_vectors(self.norm, hv, rr, tv))
    }

    /// The type vector of `class`. Classes without instances in the graph
    /// fall back to their own embedding, or zeros.
    pub fn type_vector(&self, class: TermId) -> TypeVector {
        if let Some(tv) = self.types.get(&class) {
            return tv.clone();
        }
        let vector = match self.entity(class) {
            Ok(v) => v.to_vec(),
            Err(_) => vec![0.0; self.params.dim],
        };
        TypeVector {
            vector,
            instances: 0,
        }
    }

    /// `g*`: the distance to the class's type vector for `rdf:type`
    /// triples, the model score otherwise.
    pub fn extended_score(&self, h: TermId, r: TermId, t: TermId) -> Result<f64, EmbeddingError> {
        if Some(r) == self.rdf_type {
            let hv = self.entity(h)?;
            let tv = self.type_vector(t);
            let diff: Vec<f64> = hv.iter().zip(&tv.vector).map(|(a, b)| a - b).collect();
            return Ok(norm_of(self.norm, &diff));
        }
        self.score_triple(h, r, t)
    }
}

impl Plausibility for Scorer {
    /// `1 / (1 + g*)`.
    fn normalized(&self, h: TermId, r: TermId, t: TermId) -> Result<f64, EmbeddingError> {
        Ok(1.0 / (1.0 + self.extended_score(h, r, t)?))
    }

    /// `1 / (1 + γ)`: the plausibility of a triple sitting exactly at the
    /// margin.
    fn fallback(&self) -> f64 {
        1.0 / (1.0 + self.margin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{EmbeddingTables, Model};
    use crate::{GraphBuilder, Term};

    fn iri(s: &str) -> Term {
        Term::iri(alloc::format!("http://x/{s}"))
    }

    fn fixture() -> (Graph, EmbeddingSet) {
        let mut b = GraphBuilder::new();
        b.insert(iri("a"), iri("p"), iri("b"));
        b.insert(iri("a"), Term::iri(crate::RDF_TYPE), iri("C"));
        b.insert(iri("b"), Term::iri(crate::RDF_TYPE), iri("C"));
        b.insert(iri("u"), Term::iri(crate::RDF_TYPE), iri("D"));
        b.intern(iri("lonely"));
        let g = b.build();
        let set = EmbeddingSet::from_tables(EmbeddingTables {
            model: Model::TransE,
            norm: Norm::L1,
            dim: 2,
            rel_dim: 2,
            margin: 1.0,
            entities: alloc::vec![iri("a"), iri("b"), iri("C"), iri("D")],
            relations: alloc::vec![iri("p")],
            entity_vecs: alloc::vec![1.0, 0.0, 0.0, 1.0, 0.25, 0.25, -0.5, 0.5],
            relation_vecs: alloc::vec![-1.0, 1.0],
            hyperplanes: Vec::new(),
            projections: Vec::new(),
        })
        .unwrap();
        (g, set)
    }

    #[test]
    fn raw_and_extended_scores() {
        let (g, set) = fixture();
        let s = Scorer::new(&set, &g);
        let id = |t: &str| g.lookup(&iri(t)).unwrap();
        let ty = g.rdf_type().unwrap();
        assert_eq!(s.score_triple(id("a"), id("p"), id("b")).unwrap(), 0.0);
        assert_eq!(s.score_triple(id("b"), id("p"), id("a")).unwrap(), 4.0);
        let c = s.type_vector(id("C"));
        assert_eq!(c.instances, 2);
        assert_eq!(c.vector, [0.5, 0.5]);
        assert_eq!(s.extended_score(id("a"), ty, id("C")).unwrap(), 1.0);
        assert_eq!(s.normalized(id("a"), ty, id("C")).unwrap(), 0.5);
        // D has no embedded instance, so its own row stands in.
        let d = s.type_vector(id("D"));
        assert_eq!(
            (d.instances, d.vector.as_slice()),
            (0, [-0.5, 0.5].as_slice())
        );
        assert!(
            matches!(s.score_triple(id("u"), id("p"), id("a")), Err(EmbeddingError::Unembedded(t)) if t == "<http://x/u>")
        );
        assert_eq!(s.type_vector(id("lonely")).vector, [0.0, 0.0]);
        assert_eq!(s.fallback(), 0.5);
    }

    #[test]
    fn uniform_plausibility() {
        let u = UniformPlausibility(0.3);
        assert_eq!(u.normalized(TermId(0), TermId(1), TermId(2)).unwrap(), 0.3);
        assert_eq!(u.fallback(), 0.3);
    }
}
