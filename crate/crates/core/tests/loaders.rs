use std::fs;
use std::path::{Path, PathBuf};

use gnet::graph::{load_sequence_dataset, load_tu_dataset, write_sequence_dataset, write_tu_dataset};
use gnet::synth::{generate, SynthSpec};
use gnet::Error;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[test]
fn tu_fixture_contents() {
    let ds = load_tu_dataset(&fixtures(), "mini").unwrap();
    assert_eq!(ds.len(), 5);
    assert_eq!(ds.num_graph_classes, 3);
    assert_eq!(ds.graph_labels, vec!["-1", "1", "3"]);
    assert_eq!(ds.num_node_classes, 3);
    assert_eq!(ds.node_labels, vec!["2", "5", "7"]);
    let labels: Vec<usize> = ds.samples.iter().map(|s| s.recognition_label).collect();
    assert_eq!(labels, vec![1, 0, 2, 1, 0]);
    // self-loop on node 1 dropped, reverse duplicates collapsed
    assert_eq!(ds.samples[0].graph.num_edges(), 2);
    assert_eq!(ds.samples[2].graph.num_edges(), 4);
    assert_eq!(ds.samples[3].graph.num_nodes(), 1);
    // one-directional listing still yields the edge
    assert_eq!(ds.samples[4].graph.num_edges(), 1);
    assert_eq!(ds.samples[1].graph.node_class(), &[2, 0]);
}

#[test]
fn tu_round_trip() {
    let ds = load_tu_dataset(&fixtures(), "mini").unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_tu_dataset(dir.path(), "mini", &ds).unwrap();
    let again = load_tu_dataset(dir.path(), "mini").unwrap();
    assert_eq!(again, ds);
}

#[test]
fn sequence_fixture_contents() {
    let store = load_sequence_dataset(&fixtures().join("mini_sequences.json")).unwrap();
    assert_eq!(store.name, "mini_sequences");
    assert_eq!(store.sequences.len(), 2);
    assert_eq!(store.num_frames(), 6);
    assert_eq!(store.num_node_classes, 3);
    let cut = &store.sequences[0];
    let actions: Vec<usize> = cut.frames.iter().map(|f| f.action).collect();
    assert_eq!(actions, vec![0, 0, 0, 1]);
    assert_eq!(store.sequences[1].frames[1].graph.frame_index, Some(9));
}

#[test]
fn sequence_round_trip() {
    let path = fixtures().join("mini_sequences.json");
    let store = load_sequence_dataset(&path).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mini_sequences.json");
    write_sequence_dataset(&out, &store).unwrap();
    assert_eq!(load_sequence_dataset(&out).unwrap(), store);
}

#[test]
fn synthetic_round_trip() {
    let spec = SynthSpec {
        classes: 3,
        seqs_per_class: 4,
        frames: 6,
        strength: 0.7,
        seed: 5,
    };
    let mut store = generate(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("synthetic.json");
    write_sequence_dataset(&out, &store).unwrap();
    let again = load_sequence_dataset(&out).unwrap();
    store.name = again.name.clone();
    assert_eq!(again, store);
}

#[test]
fn missing_tu_file_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_tu_dataset(dir.path(), "nothing").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("nothing_"), "{err}");
}

#[test]
fn cross_graph_edge_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    for suffix in ["graph_indicator", "graph_labels", "node_labels"] {
        let name = format!("mini_{suffix}.txt");
        fs::copy(fixtures().join(&name), dir.path().join(&name)).unwrap();
    }
    fs::write(dir.path().join("mini_A.txt"), "1, 2\n2, 1\n3, 4\n").unwrap();
    let err = load_tu_dataset(dir.path(), "mini").unwrap_err();
    match err {
        Error::Consistency { line, .. } => assert_eq!(line, 3),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn unknown_action_lists_known_labels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = fs::read_to_string(fixtures().join("mini_sequences.json"))
        .unwrap()
        .replace("\"action_label\": \"stir\"}", "\"action_label\": \"pour\"}");
    fs::write(&path, text).unwrap();
    let err = load_sequence_dataset(&path).unwrap_err().to_string();
    assert!(err.contains("pour") && err.contains("cut") && err.contains("stir"), "{err}");
}

#[test]
fn non_monotone_frames_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = fs::read_to_string(fixtures().join("mini_sequences.json"))
        .unwrap()
        .replace("\"frame_index\": 9", "\"frame_index\": 5");
    fs::write(&path, text).unwrap();
    let err = load_sequence_dataset(&path).unwrap_err().to_string();
    assert!(err.contains("frame index 5"), "{err}");
}

/// Runs only when `GNET_MSRC9_DIR` points at the TU release of MSRC-9.
#[test]
fn msrc9_shape_when_present() {
    let Some(dir) = std::env::var_os("GNET_MSRC9_DIR") else {
        eprintln!("GNET_MSRC9_DIR not set; skipping");
        return;
    };
    let ds = load_tu_dataset(Path::new(&dir), "MSRC_9").unwrap();
    assert_eq!(ds.len(), 221);
    assert_eq!(ds.num_graph_classes, 8);
    assert_eq!(ds.num_node_classes, 10);
}
