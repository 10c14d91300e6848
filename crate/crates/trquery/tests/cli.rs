use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;
use trquery::cli;
use trquery::core::synthetic::example_one;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("trquery").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p: PathBuf = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

const LINE_GRAPH: &str = "\
<http://example.org/a> <http://example.org/p> <http://example.org/b> .
<http://example.org/b> <http://example.org/p> <http://example.org/c> .
<http://example.org/c> <http://example.org/q> <http://example.org/d> .
<http://example.org/x> <http://example.org/p> <http://example.org/y> .
<http://example.org/y> <http://example.org/p> <http://example.org/z> .
";

const LINE_QUERY: &str = "PREFIX ex: <http://example.org/>
SELECT ?s ?m ?o WHERE { ?s ex:p ?m . ?m ex:p ?o . ?o ex:q ex:d . }";

#[test]
fn ingest_empty_file_gives_empty_snapshot() {
    let dir = TempDir::new().unwrap();
    let nt = write(&dir, "empty.nt", "");
    let snap = path(&dir, "g.trqg");
    let r = run(&["ingest", &nt, "-o", &snap]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.err.starts_with("0 triples"));
    let stats = run(&["stats", "--store", &snap]);
    assert_eq!(stats.code, 0);
    assert!(stats.out.starts_with("# 0 triples"));
}

#[test]
fn ingest_strict_rejects_malformed_line() {
    let dir = TempDir::new().unwrap();
    let nt = write(
        &dir,
        "bad.nt",
        "<http://e/a> <http://e/p> <http://e/b> .\n<http://e/a> <http://e/p> .\n",
    );
    let snap = path(&dir, "g.trqg");
    let r = run(&["ingest", &nt, "-o", &snap]);
    assert_ne!(r.code, 0);
    assert!(r.err.contains("line 2"), "{}", r.err);
    assert!(!Path::new(&snap).exists());

    let r = run(&["ingest", &nt, "-o", &snap, "--skip-invalid"]);
    assert_eq!(r.code, 0);
    assert!(r.err.contains("warning: skipped"));
    assert!(r.err.contains("1 triples"));
}

#[test]
fn ingest_collapses_duplicates_and_snapshot_matches_source() {
    let dir = TempDir::new().unwrap();
    let mut text = String::new();
    for i in 0..9 {
        text.push_str(&format!("<http://e/s{i}> <http://e/p> \"v{}\" .\n", i % 4));
    }
    text.push_str("<http://e/s0> <http://e/p> \"v0\" .\n# comment\n\n");
    let nt = write(&dir, "g.nt", &text);
    let snap = path(&dir, "g.trqg");
    let r = run(&["ingest", &nt, "-o", &snap]);
    assert_eq!(r.code, 0);
    assert!(r.err.starts_with("9 triples"), "{}", r.err);
    let from_nt = run(&["--format", "json", "stats", "--store", &nt]);
    let from_snap = run(&["--format", "json", "stats", "--store", &snap]);
    assert_eq!(from_nt.out, from_snap.out);
}

#[test]
fn train_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let store = data("film_slice.nt");
    let mut files = Vec::new();
    for (name, seed) in [("a.trqe", "5"), ("b.trqe", "5"), ("c.trqe", "6")] {
        let out = path(&dir, name);
        let r = run(&[
            "train", "--store", &store, "-o", &out, "--dim", "8", "--epochs", "5", "--seed", seed,
        ]);
        assert_eq!(r.code, 0, "{}", r.err);
        assert_eq!(r.err.lines().filter(|l| l.starts_with("epoch ")).count(), 5);
        files.push(fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_ne!(files[0], files[2]);
}

#[test]
fn train_rejects_unknown_model_and_bad_dimensions() {
    let dir = TempDir::new().unwrap();
    let store = data("film_slice.nt");
    let out = path(&dir, "e.trqe");
    let r = run(&["train", "--store", &store, "-o", &out, "--model", "transd"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("unsupported model 'transd'"));
    let r = run(&[
        "train",
        "--store",
        &store,
        "-o",
        &out,
        "--model",
        "transh",
        "--dim",
        "8",
        "--rel-dim",
        "4",
    ]);
    assert_eq!(r.code, 1);
    assert!(!Path::new(&out).exists());
}

#[test]
fn plan_counts_trees() {
    let dir = TempDir::new().unwrap();
    let line = write(&dir, "line.rq", LINE_QUERY);
    let r = run(&["plan", &line]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out.matches("# tree ").count(), 1);
    assert!(r.out.contains("dropped patterns: 3"), "{}", r.out);

    let r = run(&["--format", "json", "plan", &data("qa.rq")]);
    let doc: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["trees"].as_array().unwrap().len(), 8);
}

#[test]
fn plan_reports_oversized_queries() {
    let dir = TempDir::new().unwrap();
    let mut body = String::new();
    for a in 0..6 {
        for b in a + 1..6 {
            body.push_str(&format!("?v{a} <http://e/p> ?v{b} . "));
        }
    }
    let q = write(&dir, "k6.rq", &format!("SELECT * WHERE {{ {body} }}"));
    let r = run(&["plan", &q, "--max-edges", "10"]);
    assert_eq!(r.code, 1);
    assert!(r.err.starts_with("error:"), "{}", r.err);
}

#[test]
fn query_puts_exact_solutions_first() {
    let dir = TempDir::new().unwrap();
    let store = write(&dir, "g.nt", LINE_GRAPH);
    let q = write(&dir, "q.rq", LINE_QUERY);
    let r = run(&[
        "query",
        "--store",
        &store,
        "--uniform",
        "0.5",
        "--top-k",
        "5",
        &q,
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let rows: Vec<Vec<&str>> = r.out.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(
        rows[0],
        ["rank", "score", "edit_distance", "?s", "?m", "?o"]
    );
    assert_eq!(rows[1][2], "0");
    assert_eq!(
        &rows[1][3..],
        [
            "<http://example.org/a>",
            "<http://example.org/b>",
            "<http://example.org/c>"
        ]
    );
    assert!(rows[2..].iter().all(|r| r[2] == "1"));
    assert!(r.err.contains("timings: parse"));
}

fn toy_files(dir: &TempDir) -> (String, String) {
    let toy = example_one();
    let g = &toy.graph;
    let text: String = g
        .triples()
        .map(|t| format!("{} {} {} .\n", g.term(t.s), g.term(t.p), g.term(t.o)))
        .collect();
    (
        write(dir, "toy.nt", &text),
        write(dir, "toy.rq", trquery::core::synthetic::EXAMPLE_ONE_QUERY),
    )
}

#[test]
fn query_on_film_toy_returns_three_near_misses() {
    let dir = TempDir::new().unwrap();
    let (store, q) = toy_files(&dir);
    let emb = path(&dir, "toy.trqe");
    let r = run(&[
        "train", "--store", &store, "-o", &emb, "--dim", "8", "--epochs", "20", "--quiet",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let r = run(&[
        "--format",
        "json",
        "query",
        "--store",
        &store,
        "--embeddings",
        &emb,
        &q,
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let doc: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(doc["schema_version"], 1);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(row["edit_distance"], 1);
        let missing: Vec<u64> = row["per_edge"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|e| e["member"] == false)
            .map(|e| e["pattern"].as_u64().unwrap())
            .collect();
        assert_eq!(missing, [7]);
    }

    let r = run(&[
        "query",
        "--store",
        &store,
        "--uniform",
        "0.5",
        "--projected-only",
        &q,
    ]);
    assert_eq!(
        r.out.lines().next().unwrap(),
        "rank\tscore\tedit_distance\t?film\t?actor1\t?actor2"
    );
}

#[test]
fn query_needs_a_plausibility_source() {
    let dir = TempDir::new().unwrap();
    let store = write(&dir, "g.nt", LINE_GRAPH);
    let q = write(&dir, "q.rq", LINE_QUERY);
    let r = run(&["query", "--store", &store, &q]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("--embeddings or --uniform"));
    let r = run(&[
        "query",
        "--store",
        &store,
        "--uniform",
        "0.5",
        "--top-k",
        "0",
        &q,
    ]);
    assert_eq!(r.code, 1);
}

#[test]
fn ask_handles_every_form() {
    let store = data("film_slice.nt");
    assert_eq!(
        run(&["ask", "--store", &store, &data("ask.rq")]).out.trim(),
        "true"
    );
    let count: usize = run(&["ask", "--store", &store, &data("count.rq")])
        .out
        .trim()
        .parse()
        .unwrap();
    assert!(count > 0);
    let r = run(&["ask", "--store", &store, &data("path.rq"), "--limit", "2"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.lines().count() <= 3);
}

#[test]
fn bench_with_no_cases_succeeds() {
    let dir = TempDir::new().unwrap();
    let store = write(&dir, "g.nt", LINE_GRAPH);
    let manifest = write(&dir, "m.tsv", "# nothing yet\n");
    let r = run(&["bench", "--store", &store, &manifest, "--uniform", "0.5"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.lines().last().unwrap().starts_with("mean\t0/0 ok"));
}

#[test]
fn bench_scores_cases_and_reports_failures() {
    let dir = TempDir::new().unwrap();
    let store = write(&dir, "g.nt", LINE_GRAPH);
    write(&dir, "q.rq", LINE_QUERY);
    write(
        &dir,
        "del.nt",
        "<http://example.org/c> <http://example.org/q> <http://example.org/d> .\n",
    );
    write(
        &dir,
        "absent.nt",
        "<http://example.org/a> <http://example.org/q> <http://example.org/b> .\n",
    );
    let manifest = write(
        &dir,
        "m.tsv",
        "ok\tq.rq\tdel.nt\t-\nbroken\tq.rq\tabsent.nt\t-\n",
    );
    let r = run(&["bench", "--store", &store, &manifest, "--uniform", "0.5"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("case broken failed"), "{}", r.err);
    let ok = r.out.lines().find(|l| l.starts_with("ok\t")).unwrap();
    assert!(ok.starts_with("ok\tok\t1.000000\t1.000000"), "{ok}");

    let manifest = write(&dir, "good.tsv", "ok\tq.rq\tdel.nt\t-\n");
    let r = run(&[
        "--format",
        "json",
        "bench",
        "--store",
        &store,
        &manifest,
        "--uniform",
        "0.5",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let doc: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["summary"]["failures"], 0);
}

#[test]
fn binary_reads_environment_overrides() {
    let dir = TempDir::new().unwrap();
    let store = write(&dir, "g.nt", LINE_GRAPH);
    let q = write(&dir, "q.rq", LINE_QUERY);
    let out = Command::new(env!("CARGO_BIN_EXE_trquery"))
        .args(["query", "--uniform", "0.5", &q])
        .env("TRQ_STORE", &store)
        .env("TRQ_TOP_K", "2")
        .env("TRQ_FORMAT", "json")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);

    let out = Command::new(env!("CARGO_BIN_EXE_trquery"))
        .arg("frobnicate")
        .output()
        .unwrap();
    assert!(!out.status.success());
}
