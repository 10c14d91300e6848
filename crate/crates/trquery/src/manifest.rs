//! Benchmark manifests.
//!
//! One case per line, tab-separated:
//!
//! ```text
//! name <TAB> query file <TAB> deletions (.nt) <TAB> truth file or -
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the manifest's directory. A truth file holds one
//! correct tuple per line: tab-separated terms in N-Triples syntax, one per
//! projected variable. With `-` the truth is the exact answer set of the
//! query on the uncorrupted graph.

use std::fs;
use std::path::{Path, PathBuf};

use trquery_core::evalkit::{BenchCase, GroundTruth};
use trquery_core::ntriples::parse_term;
use trquery_core::{Graph, Term, TermId, Triple};

use crate::error::Error;
use crate::load::{load_query, load_term_triples};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub query: PathBuf,
    pub deletions: PathBuf,
    pub truth: Option<PathBuf>,
}

pub fn parse_manifest(text: &str, base: &Path, path: &Path) -> Result<Vec<ManifestEntry>, Error> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 4 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Manifest {
                path: path.into(),
                line: i + 1,
                message: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        out.push(ManifestEntry {
            name: fields[0].to_string(),
            query: base.join(fields[1]),
            deletions: base.join(fields[2]),
            truth: (fields[3] != "-").then(|| base.join(fields[3])),
        });
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base, path)
}

fn resolve(g: &Graph, term: &Term, what: &str) -> Result<TermId, String> {
    g.lookup(term)
        .ok_or_else(|| format!("{what} term {term} is not in the graph"))
}

/// Loads the files of `entry` and resolves their terms against `g`.
pub fn load_case(g: &Graph, entry: &ManifestEntry) -> Result<BenchCase, Error> {
    let query = load_query(&entry.query)?;
    let deletions = load_term_triples(&entry.deletions)?
        .iter()
        .map(|(line, (s, p, o))| {
            let triple = resolve(g, s, "deletion").and_then(|s| {
                Ok(Triple::new(
                    s,
                    resolve(g, p, "deletion")?,
                    resolve(g, o, "deletion")?,
                ))
            });
            triple.map_err(|message| Error::Manifest {
                path: entry.deletions.clone(),
                line: *line,
                message,
            })
        })
        .collect::<Result<Vec<Triple>, Error>>()?;
    let truth = entry
        .truth
        .as_deref()
        .map(|p| load_truth(g, p, query.projected.len()))
        .transpose()?;
    Ok(BenchCase {
        name: entry.name.clone(),
        query,
        deletions,
        truth,
    })
}

pub fn load_truth(g: &Graph, path: &Path, arity: usize) -> Result<GroundTruth, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut tuples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Manifest {
            path: path.into(),
            line: i + 1,
            message,
        };
        let tuple = line
            .split('\t')
            .map(|f| parse_term(f.trim()).and_then(|t| resolve(g, &t, "truth")))
            .collect::<Result<Vec<TermId>, String>>()
            .map_err(err)?;
        if tuple.len() != arity {
            return Err(err(format!(
                "expected {arity} terms, found {}",
                tuple.len()
            )));
        }
        tuples.push(tuple);
    }
    Ok(GroundTruth::new(tuples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_and_comments() {
        let text = "# cases\nq1\tq1.rq\tq1.nt\t-\n\nq2\tsub/q2.rq\tq2.nt\tq2.tsv\n";
        let m = parse_manifest(text, Path::new("/base"), Path::new("/base/m.tsv")).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].truth, None);
        assert_eq!(m[1].query, Path::new("/base/sub/q2.rq"));
        assert_eq!(m[1].truth.as_deref(), Some(Path::new("/base/q2.tsv")));
        let bad = parse_manifest("q1\tq1.rq\n", Path::new("."), Path::new("m.tsv")).unwrap_err();
        assert!(bad.to_string().contains("m.tsv:1"));
        assert!(parse_manifest("", Path::new("."), Path::new("m.tsv"))
            .unwrap()
            .is_empty());
    }
}
