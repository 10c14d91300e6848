//! Reading graphs, queries and triple lists from disk.

use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;

use trquery_core::ntriples::{parse_line, LoadReport, NTriplesLoader, NtError, ParseMode};
use trquery_core::sparql::Query;
use trquery_core::{Graph, Term};

use crate::error::Error;
use crate::snapshot;

/// Streams N-Triples from `reader` line by line.
pub fn read_ntriples(
    reader: impl BufRead,
    mode: ParseMode,
    path: &Path,
) -> Result<(Graph, LoadReport), Error> {
    let mut loader = NTriplesLoader::new(mode);
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        loader.push_line(&line).map_err(|source| Error::NTriples {
            path: path.into(),
            source,
        })?;
    }
    Ok(loader.finish())
}

pub fn load_ntriples(path: &Path, mode: ParseMode) -> Result<(Graph, LoadReport), Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ntriples(BufReader::new(file), mode, path)
}

/// Loads a `TRQG` snapshot, or parses N-Triples strictly when the file does
/// not start with the snapshot magic.
pub fn load_graph(path: &Path) -> Result<Graph, Error> {
    let mut file = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let head = file.fill_buf().map_err(|e| Error::io(path, e))?;
    if snapshot::is_snapshot(head) {
        drop(file);
        return snapshot::read(path);
    }
    read_ntriples(file, ParseMode::Strict, path).map(|(g, _)| g)
}

pub fn load_query(path: &Path) -> Result<Query, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(Query::parse(&text)?)
}

pub type TermTriple = (Term, Term, Term);

/// Every statement of an N-Triples file with its 1-based line number.
pub fn load_term_triples(path: &Path) -> Result<Vec<(usize, TermTriple)>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(t)) => out.push((i + 1, t)),
            Ok(None) => {}
            Err(message) => {
                return Err(Error::NTriples {
                    path: path.into(),
                    source: NtError {
                        line: i + 1,
                        text: line.to_string(),
                        message,
                    },
                })
            }
        }
    }
    Ok(out)
}
