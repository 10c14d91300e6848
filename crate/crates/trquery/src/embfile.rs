//! The `TRQE` embedding file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      b"TRQE"
//! version    u16 (= 1)
//! model      u8   0 TransE, 1 TransH, 2 TransR
//! norm       u8   1 L1, 2 L2
//! dim        u32
//! rel_dim    u32
//! margin     f64
//! entities   u32
//! relations  u32
//! entities × string    row index → term, in N-Triples lexical form
//! relations × string
//! entity matrix        entities × dim f32
//! relation matrix      relations × rel_dim f32
//! hyperplanes          relations × dim f32 (TransH only)
//! projections          relations × rel_dim × dim f32 (TransR only)
//! ```
//!
//! Matrices are row-major. Strings are a `u32` byte length followed by
//! UTF-8.

use std::fs;
use std::path::Path;

use trquery_core::embedding::{EmbeddingSet, EmbeddingTables, Model, Norm};
use trquery_core::ntriples::parse_term;
use trquery_core::Term;

use crate::codec::{header, Decoder, Encoder};
use crate::error::{Error, FormatError};

pub const MAGIC: &[u8; 4] = b"TRQE";
pub const VERSION: u16 = 1;

pub fn encode(set: &EmbeddingSet) -> Vec<u8> {
    let t = set.tables();
    let mut e = Encoder::default();
    e.bytes(MAGIC);
    e.u16(VERSION);
    e.u8(t.model.tag());
    e.u8(t.norm.tag());
    e.u32(t.dim as u32);
    e.u32(t.rel_dim as u32);
    e.f64(t.margin);
    e.u32(t.entities.len() as u32);
    e.u32(t.relations.len() as u32);
    for term in t.entities.iter().chain(&t.relations) {
        e.str(&term.to_string());
    }
    for x in t
        .entity_vecs
        .iter()
        .chain(&t.relation_vecs)
        .chain(&t.hyperplanes)
        .chain(&t.projections)
    {
        e.f32(*x);
    }
    e.buf
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingSet, FormatError> {
    let mut d = Decoder::new(bytes);
    header(&mut d, MAGIC, VERSION)?;
    let tag = d.u8()?;
    let model = Model::from_tag(tag)
        .ok_or_else(|| FormatError::Invalid(format!("unknown model tag {tag}")))?;
    let tag = d.u8()?;
    let norm = Norm::from_tag(tag)
        .ok_or_else(|| FormatError::Invalid(format!("unknown norm tag {tag}")))?;
    let dim = d.u32()? as usize;
    let rel_dim = d.u32()? as usize;
    let margin = d.f64()?;
    let n_ent = d.u32()? as usize;
    let n_rel = d.u32()? as usize;
    let mut terms = |n: usize| -> Result<Vec<Term>, FormatError> {
        (0..n)
            .map(|_| {
                let s = d.str()?;
                parse_term(&s).map_err(|m| FormatError::Invalid(format!("bad term {s}: {m}")))
            })
            .collect()
    };
    let entities = terms(n_ent)?;
    let relations = terms(n_rel)?;
    let entity_vecs = d.f32s(n_ent.saturating_mul(dim))?;
    let relation_vecs = d.f32s(n_rel.saturating_mul(rel_dim))?;
    let hyperplanes = if model == Model::TransH {
        d.f32s(n_rel.saturating_mul(dim))?
    } else {
        Vec::new()
    };
    let projections = if model == Model::TransR {
        d.f32s(n_rel.saturating_mul(rel_dim).saturating_mul(dim))?
    } else {
        Vec::new()
    };
    d.finish()?;
    EmbeddingSet::from_tables(EmbeddingTables {
        model,
        norm,
        dim,
        rel_dim,
        margin,
        entities,
        relations,
        entity_vecs,
        relation_vecs,
        hyperplanes,
        projections,
    })
    .map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn write(set: &EmbeddingSet, path: &Path) -> Result<(), Error> {
    fs::write(path, encode(set)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<EmbeddingSet, Error> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| Error::format(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use trquery_core::embedding::{train, EmbeddingConfig};
    use trquery_core::synthetic::{typed_graph, TypedGraphConfig};

    #[test]
    fn roundtrip_every_model() {
        let g = typed_graph(&TypedGraphConfig {
            classes: 2,
            entities_per_class: 5,
            relations: 2,
            edges_per_relation: 8,
            seed: 3,
        });
        for model in [Model::TransE, Model::TransH, Model::TransR] {
            let cfg = EmbeddingConfig {
                model,
                dim: 4,
                rel_dim: if model == Model::TransR { 3 } else { 4 },
                epochs: 2,
                norm: Norm::L2,
                ..Default::default()
            };
            let set = train(&g, &cfg).unwrap().embeddings;
            let bytes = encode(&set);
            assert_eq!(bytes[6], model.tag());
            let back = decode(&bytes).unwrap();
            assert_eq!(back, set);
            assert_eq!(encode(&back), bytes);
            assert_eq!(
                decode(&bytes[..bytes.len() - 2]).unwrap_err(),
                FormatError::Truncated
            );
        }
    }
}
