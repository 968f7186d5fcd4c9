use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use stag_core::demo;
use stag_core::graphstore::import_snapshot;
use stag_core::pipeline::{run_pipeline, PipelineConfig, PipelineError};

fn demo_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo")
}

fn demo_config(output: &Path, workers: usize) -> PipelineConfig {
    let mut config = PipelineConfig::load(&demo_dir().join("pipeline.toml")).unwrap();
    config.output = output.to_owned();
    config.workers = workers;
    config
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_owned()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn committed_demo_files_match_generator() {
    let tmp = tempfile::tempdir().unwrap();
    demo::write_demo(&demo::demo_dataset(), tmp.path()).unwrap();
    let committed = read_tree(&demo_dir());
    for (name, bytes) in read_tree(tmp.path()) {
        assert_eq!(committed.get(&name), Some(&bytes), "{name} differs from the generator");
    }
}

#[test]
fn demo_run_matches_golden_counts_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_pipeline(&demo_config(a.path(), 1)).unwrap();
    let second = run_pipeline(&demo_config(b.path(), 2)).unwrap();
    assert_eq!(read_tree(a.path()), read_tree(b.path()));
    assert_eq!(first.report, second.report);

    let counts = first.report.flat_counts();
    if std::env::var_os("STAG_BLESS").is_some() {
        std::fs::write(demo_dir().join("golden_counts.json"), serde_json::to_string_pretty(&counts).unwrap()).unwrap();
    }
    let golden: BTreeMap<String, u64> =
        serde_json::from_str(&std::fs::read_to_string(demo_dir().join("golden_counts.json")).unwrap()).unwrap();
    assert_eq!(counts, golden);
    for key in ["graph.papers", "graph.authors", "graph.citations"] {
        assert!(counts[key] > 0, "{key}");
    }
    assert_eq!(counts["ingest.accepted"] + counts["ingest.rejected"], counts["ingest.read"]);
    assert_eq!(counts["graph.paper_author_edges"], counts["authors.mentions"]);

    let g = import_snapshot(&first.release_dir).unwrap();
    assert_eq!(g.data().papers.len() as u64, counts["graph.papers"]);
}

#[test]
fn missing_venue_kb_is_a_config_error() {
    let out = tempfile::tempdir().unwrap();
    let mut config = demo_config(out.path(), 1);
    config.venue_kb = out.path().join("nope.jsonl");
    assert!(matches!(run_pipeline(&config), Err(PipelineError::Config(m)) if m.contains("venue_kb")));
    assert_eq!(std::fs::read_dir(out.path()).unwrap().count(), 0);
}
