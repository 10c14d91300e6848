//! Translation-based knowledge graph embeddings.
//!
//! [`train`] fits TransE, TransH or TransR parameters with minibatch SGD on
//! the margin ranking loss `max(0, γ + g(pos) - g(neg))` using uniformly
//! corrupted heads or tails. Parameters are kept in `f64` while training and
//! frozen into an [`EmbeddingSet`] with `f32` storage, which is what the
//! embedding file holds. A [`Scorer`] binds a set to a graph and evaluates
//! raw scores, type vectors, the type-aware extended score and its `(0, 1]`
//! normalization.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::term::Term;

mod model;
mod scorer;
mod train;

pub use model::{norm_of, Parameters};
pub use scorer::{Plausibility, Scorer, TypeVector, UniformPlausibility};
pub use train::{train, train_with, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Model {
    TransE,
    TransH,
    TransR,
}

impl Model {
    pub fn tag(self) -> u8 {
        match self {
            Model::TransE => 0,
            Model::TransH => 1,
            Model::TransR => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Model> {
        match tag {
            0 => Some(Model::TransE),
            1 => Some(Model::TransH),
            2 => Some(Model::TransR),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::TransE => "transe",
            Model::TransH => "transh",
            Model::TransR => "transr",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Model {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "transe" => Ok(Model::TransE),
            "transh" => Ok(Model::TransH),
            "transr" => Ok(Model::TransR),
            _ => Err(EmbeddingError::UnsupportedModel(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn tag(self) -> u8 {
        match self {
            Norm::L1 => 1,
            Norm::L2 => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Norm> {
        match tag {
            1 => Some(Norm::L1),
            2 => Some(Norm::L2),
            _ => None,
        }
    }
}

impl core::str::FromStr for Norm {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            _ => Err(EmbeddingError::InvalidConfig("norm must be l1 or l2")),
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub model: Model,
    pub dim: usize,
    /// Relation space dimension; only TransR may differ from `dim`.
    pub rel_dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub negatives_per_positive: usize,
    pub norm: Norm,
    pub seed: u64,
    /// Train on `rdf:type` triples too. Off by default: types are handled
    /// through type vectors instead.
    pub include_type_triples: bool,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            model: Model::TransE,
            dim: 50,
            rel_dim: 50,
            margin: 1.0,
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 128,
            negatives_per_positive: 1,
            norm: Norm::L1,
            seed: 42,
            include_type_triples: false,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.dim == 0 || self.rel_dim == 0 {
            return Err(EmbeddingError::InvalidConfig(
                "dimensions must be at least 1",
            ));
        }
        if self.model != Model::TransR && self.rel_dim != self.dim {
            return Err(EmbeddingError::InvalidConfig(
                "rel_dim must equal dim for TransE and TransH",
            ));
        }
        if self.margin.is_nan() || self.margin <= 0.0 {
            return Err(EmbeddingError::InvalidConfig("margin must be positive"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(EmbeddingError::InvalidConfig(
                "learning rate must be positive",
            ));
        }
        if self.batch_size == 0 {
            return Err(EmbeddingError::InvalidConfig(
                "batch size must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbeddingError {
    #[error("unembedded term {0}")]
    Unembedded(String),
    #[error("cannot train on a graph with zero triples")]
    EmptyGraph,
    #[error("invalid embedding configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("unsupported model '{0}' (expected transe, transh or transr)")]
    UnsupportedModel(String),
    #[error("model mismatch: expected {expected}, found {found}")]
    ModelMismatch { expected: Model, found: Model },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("inconsistent embedding tables: {0}")]
    Inconsistent(&'static str),
}

/// Trained, immutable embeddings keyed by term.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    model: Model,
    norm: Norm,
    dim: usize,
    rel_dim: usize,
    margin: f64,
    entities: Vec<Term>,
    relations: Vec<Term>,
    entity_vecs: Vec<f32>,
    relation_vecs: Vec<f32>,
    hyperplanes: Vec<f32>,
    projections: Vec<f32>,
    entity_index: BTreeMap<Term, usize>,
    relation_index: BTreeMap<Term, usize>,
}

/// Raw tables of an [`EmbeddingSet`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTables {
    pub model: Model,
    pub norm: Norm,
    pub dim: usize,
    pub rel_dim: usize,
    pub margin: f64,
    pub entities: Vec<Term>,
    pub relations: Vec<Term>,
    /// `entities.len() × dim`
    pub entity_vecs: Vec<f32>,
    /// `relations.len() × rel_dim`
    pub relation_vecs: Vec<f32>,
    /// TransH normals, `relations.len() × dim`; empty otherwise.
    pub hyperplanes: Vec<f32>,
    /// TransR matrices, `relations.len() × rel_dim × dim`; empty otherwise.
    pub projections: Vec<f32>,
}

impl EmbeddingSet {
    /// Validates table shapes and builds the term indexes.
    pub fn from_tables(t: EmbeddingTables) -> Result<Self, EmbeddingError> {
        let ne = t.entities.len();
        let nr = t.relations.len();
        if t.dim == 0 || t.rel_dim == 0 {
            return Err(EmbeddingError::Inconsistent("zero dimension"));
        }
        if t.model != Model::TransR && t.dim != t.rel_dim {
            return Err(EmbeddingError::Inconsistent("rel_dim differs from dim"));
        }
        if t.entity_vecs.len() != ne * t.dim || t.relation_vecs.len() != nr * t.rel_dim {
            return Err(EmbeddingError::Inconsistent("vector table size"));
        }
        let hyper = if t.model == Model::TransH {
            nr * t.dim
        } else {
            0
        };
        let proj = if t.model == Model::TransR {
            nr * t.rel_dim * t.dim
        } else {
            0
        };
        if t.hyperplanes.len() != hyper || t.projections.len() != proj {
            return Err(EmbeddingError::Inconsistent("projection table size"));
        }
        let entity_index: BTreeMap<Term, usize> = t.entities.iter().cloned().zip(0..).collect();
        let relation_index: BTreeMap<Term, usize> = t.relations.iter().cloned().zip(0..).collect();
        if entity_index.len() != ne || relation_index.len() != nr {
            return Err(EmbeddingError::Inconsistent("duplicate term"));
        }
        Ok(EmbeddingSet {
            model: t.model,
            norm: t.norm,
            dim: t.dim,
            rel_dim: t.rel_dim,
            margin: t.margin,
            entities: t.entities,
            relations: t.relations,
            entity_vecs: t.entity_vecs,
            relation_vecs: t.relation_vecs,
            hyperplanes: t.hyperplanes,
            projections: t.projections,
            entity_index,
            relation_index,
        })
    }

    pub fn tables(&self) -> EmbeddingTables {
        EmbeddingTables {
            model: self.model,
            norm: self.norm,
            dim: self.dim,
            rel_dim: self.rel_dim,
            margin: self.margin,
            entities: self.entities.clone(),
            relations: self.relations.clone(),
            entity_vecs: self.entity_vecs.clone(),
            relation_vecs: self.relation_vecs.clone(),
            hyperplanes: self.hyperplanes.clone(),
            projections: self.projections.clone(),
        }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rel_dim(&self) -> usize {
        self.rel_dim
    }

    /// The margin γ used in training.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn entities(&self) -> &[Term] {
        &self.entities
    }

    pub fn relations(&self) -> &[Term] {
        &self.relations
    }

    pub fn entity_row(&self, term: &Term) -> Option<usize> {
        self.entity_index.get(term).copied()
    }

    pub fn relation_row(&self, term: &Term) -> Option<usize> {
        self.relation_index.get(term).copied()
    }

    pub fn entity_vec(&self, row: usize) -> &[f32] {
        &self.entity_vecs[row * self.dim..(row + 1) * self.dim]
    }

    pub fn relation_vec(&self, row: usize) -> &[f32] {
        &self.relation_vecs[row * self.rel_dim..(row + 1) * self.rel_dim]
    }

    pub fn hyperplane(&self, row: usize) -> Option<&[f32]> {
        (self.model == Model::TransH)
            .then(|| &self.hyperplanes[row * self.dim..(row + 1) * self.dim])
    }

    pub fn projection(&self, row: usize) -> Option<&[f32]> {
        let size = self.rel_dim * self.dim;
        (self.model == Model::TransR).then(|| &self.projections[row * size..(row + 1) * size])
    }

    /// Checks that the set was trained with `model` and `dim`.
    pub fn expect(&self, model: Model, dim: usize) -> Result<(), EmbeddingError> {
        if self.model != model {
            return Err(EmbeddingError::ModelMismatch {
                expected: model,
                found: self.model,
            });
        }
        if self.dim != dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: dim,
                found: self.dim,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(EmbeddingConfig::default().validate().is_ok());
        let bad = EmbeddingConfig {
            margin: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = EmbeddingConfig {
            rel_dim: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let ok = EmbeddingConfig {
            model: Model::TransR,
            rel_dim: 10,
            ..Default::default()
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn model_names() {
        assert_eq!("TransH".parse::<Model>().unwrap(), Model::TransH);
        assert!(
            matches!("transd".parse::<Model>(), Err(EmbeddingError::UnsupportedModel(m)) if m == "transd")
        );
        for m in [Model::TransE, Model::TransH, Model::TransR] {
            assert_eq!(Model::from_tag(m.tag()), Some(m));
        }
    }

    #[test]
    fn table_shapes_are_checked() {
        let t = EmbeddingTables {
            model: Model::TransE,
            norm: Norm::L1,
            dim: 2,
            rel_dim: 2,
            margin: 1.0,
            entities: alloc::vec![Term::iri("http://x/a")],
            relations: alloc::vec![Term::iri("http://x/p")],
            entity_vecs: alloc::vec![0.0, 1.0],
            relation_vecs: alloc::vec![0.5],
            hyperplanes: Vec::new(),
            projections: Vec::new(),
        };
        assert!(EmbeddingSet::from_tables(t.clone()).is_err());
        let t = EmbeddingTables {
            relation_vecs: alloc::vec![0.5, 0.5],
            ..t
        };
        let set = EmbeddingSet::from_tables(t).unwrap();
        assert_eq!(
            set.expect(Model::TransR, 2),
            Err(EmbeddingError::ModelMismatch {
                expected: Model::TransR,
                found: Model::TransE
            })
        );
        assert!(set.expect(Model::TransE, 3).is_err());
        assert!(set.expect(Model::TransE, 2).is_ok());
    }
}
