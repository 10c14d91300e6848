//! The `TRQG` graph snapshot.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    b"TRQG"
//! version  u16 (= 1)
//! terms    u64
//! triples  u64
//! terms × { tag u8, strings }   tag 0 IRI, 1 blank node, 2 plain literal,
//!                               3 typed literal (value, datatype),
//!                               4 language literal (value, tag)
//! triples × { s u32, p u32, o u32 }   sorted in SPO order, no duplicates
//! ```
//!
//! Strings are a `u32` byte length followed by UTF-8. Term ids are the
//! position in the dictionary. The POS and OSP indexes are rebuilt on load.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use trquery_core::graph::Dictionary;
use trquery_core::{Graph, Literal, Term, TermId, Triple};

use crate::codec::{header, Decoder, Encoder};
use crate::error::{Error, FormatError};

pub const MAGIC: &[u8; 4] = b"TRQG";
pub const VERSION: u16 = 1;

pub fn encode(g: &Graph) -> Vec<u8> {
    let mut e = Encoder::default();
    e.bytes(MAGIC);
    e.u16(VERSION);
    e.u64(g.term_count() as u64);
    e.u64(g.len() as u64);
    for term in g.dictionary().terms() {
        match term {
            Term::Iri(s) => {
                e.u8(0);
                e.str(s);
            }
            Term::BlankNode(s) => {
                e.u8(1);
                e.str(s);
            }
            Term::Literal(Literal {
                value,
                datatype: None,
                language: None,
            }) => {
                e.u8(2);
                e.str(value);
            }
            Term::Literal(Literal {
                value,
                datatype: Some(dt),
                ..
            }) => {
                e.u8(3);
                e.str(value);
                e.str(dt);
            }
            Term::Literal(Literal {
                value,
                language: Some(lang),
                ..
            }) => {
                e.u8(4);
                e.str(value);
                e.str(lang);
            }
        }
    }
    for t in g.triples() {
        e.u32(t.s.0);
        e.u32(t.p.0);
        e.u32(t.o.0);
    }
    e.buf
}

pub fn decode(bytes: &[u8]) -> Result<Graph, FormatError> {
    let mut d = Decoder::new(bytes);
    header(&mut d, MAGIC, VERSION)?;
    let n_terms = d.u64()?;
    let n_triples = d.u64()?;
    if n_terms > u32::MAX as u64 || n_triples.saturating_mul(12) > bytes.len() as u64 {
        return Err(FormatError::Invalid("implausible counts".into()));
    }
    let mut dict = Dictionary::new();
    for i in 0..n_terms {
        let term = match d.u8()? {
            0 => Term::Iri(d.str()?),
            1 => Term::BlankNode(d.str()?),
            2 => Term::Literal(Literal::plain(d.str()?)),
            3 => {
                let value = d.str()?;
                Term::Literal(Literal::typed(value, d.str()?))
            }
            4 => {
                let value = d.str()?;
                Term::Literal(Literal::lang(value, d.str()?))
            }
            tag => return Err(FormatError::Invalid(format!("unknown term tag {tag}"))),
        };
        if dict.intern(term) != TermId(i as u32) {
            return Err(FormatError::Invalid(format!("duplicate term at index {i}")));
        }
    }
    let mut triples = Vec::with_capacity(n_triples as usize);
    let mut prev: Option<[u32; 3]> = None;
    for _ in 0..n_triples {
        let key = [d.u32()?, d.u32()?, d.u32()?];
        if key.iter().any(|&id| id as u64 >= n_terms) {
            return Err(FormatError::Invalid("term id out of range".into()));
        }
        if prev.is_some_and(|p| p >= key) {
            return Err(FormatError::Invalid(
                "triples are not sorted and unique".into(),
            ));
        }
        prev = Some(key);
        triples.push(Triple::new(TermId(key[0]), TermId(key[1]), TermId(key[2])));
    }
    d.finish()?;
    Ok(Graph::from_parts(Arc::new(dict), triples))
}

pub fn write(g: &Graph, path: &Path) -> Result<(), Error> {
    fs::write(path, encode(g)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Graph, Error> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| Error::format(path, e))
}

/// True when `bytes` starts with the snapshot magic.
pub fn is_snapshot(bytes: &[u8]) -> bool {
    bytes.starts_with(MAGIC)
}
