//! Multi-file plain-text benchmark format:
//!
//! - `{name}_A.txt`: one directed edge per line, `i, j`, 1-based global node ids
//! - `{name}_graph_indicator.txt`: line `k` holds the 1-based graph id of node `k`
//! - `{name}_graph_labels.txt`: one integer label per graph
//! - `{name}_node_labels.txt`: one integer label per node
//!
//! Both directions of an undirected edge are listed in `_A.txt`; the loader
//! keeps the first occurrence. Self-loops are dropped.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Dataset, Graph, Sample};
use crate::error::{Error, Result};

fn file_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_int(path: &Path, line: usize, s: &str) -> Result<i64> {
    s.trim().parse().map_err(|_| Error::Consistency {
        file: path.to_path_buf(),
        line,
        message: format!("expected an integer, found `{s}`"),
    })
}

fn read_ints(path: &Path) -> Result<Vec<(usize, i64)>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, s)| Ok((line, parse_int(path, line, &s)?)))
        .collect()
}

/// Maps raw integer labels to contiguous ids in ascending value order.
fn remap(values: &[i64]) -> (Vec<usize>, Vec<String>) {
    let distinct: Vec<i64> = values.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let ids = values
        .iter()
        .map(|v| distinct.binary_search(v).expect("value present"))
        .collect();
    (ids, distinct.iter().map(i64::to_string).collect())
}

pub fn load_tu_dataset(dir: &Path, name: &str) -> Result<Dataset> {
    let a_path = file_path(dir, name, "A");
    let gi_path = file_path(dir, name, "graph_indicator");
    let gl_path = file_path(dir, name, "graph_labels");
    let nl_path = file_path(dir, name, "node_labels");

    let indicator = read_ints(&gi_path)?;
    let graph_labels = read_ints(&gl_path)?;
    let node_labels = read_ints(&nl_path)?;
    let edge_lines = read_lines(&a_path)?;

    let num_graphs = graph_labels.len();
    if node_labels.len() != indicator.len() {
        return Err(Error::format(
            &nl_path,
            format!(
                "{} node labels for {} nodes in the graph indicator",
                node_labels.len(),
                indicator.len()
            ),
        ));
    }

    // Node k (0-based global) belongs to graph graph_of[k] (0-based); nodes of
    // a graph must form one contiguous block in ascending graph order.
    let mut graph_of = Vec::with_capacity(indicator.len());
    let mut first_node = vec![usize::MAX; num_graphs];
    let mut sizes = vec![0usize; num_graphs];
    let mut prev: Option<usize> = None;
    for (k, &(line, gid)) in indicator.iter().enumerate() {
        if gid < 1 || gid as usize > num_graphs {
            return Err(Error::Consistency {
                file: gi_path,
                line,
                message: format!("graph id {gid} outside [1, {num_graphs}]"),
            });
        }
        let g = gid as usize - 1;
        match prev {
            Some(p) if g < p => {
                return Err(Error::Consistency {
                    file: gi_path,
                    line,
                    message: format!("graph id {gid} appears after graph {}", p + 1),
                })
            }
            Some(p) if g > p + 1 => {
                return Err(Error::Consistency {
                    file: gi_path,
                    line,
                    message: format!("graph {} has no nodes", p + 2),
                })
            }
            None if g != 0 => {
                return Err(Error::Consistency {
                    file: gi_path,
                    line,
                    message: "graph 1 has no nodes".into(),
                })
            }
            _ => {}
        }
        if first_node[g] == usize::MAX {
            first_node[g] = k;
        }
        sizes[g] += 1;
        graph_of.push(g);
        prev = Some(g);
    }
    if let Some(g) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::format(&gi_path, format!("graph {} has no nodes", g + 1)));
    }

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    let mut seen = HashSet::new();
    let num_nodes = graph_of.len();
    for (line, text) in &edge_lines {
        let mut parts = text.split(',');
        let (Some(i), Some(j), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Consistency {
                file: a_path,
                line: *line,
                message: format!("expected `i, j`, found `{text}`"),
            });
        };
        let i = parse_int(&a_path, *line, i)?;
        let j = parse_int(&a_path, *line, j)?;
        for v in [i, j] {
            if v < 1 || v as usize > num_nodes {
                return Err(Error::Consistency {
                    file: a_path,
                    line: *line,
                    message: format!("node id {v} outside [1, {num_nodes}]"),
                });
            }
        }
        let (i, j) = (i as usize - 1, j as usize - 1);
        let g = graph_of[i];
        if graph_of[j] != g {
            return Err(Error::Consistency {
                file: a_path,
                line: *line,
                message: format!(
                    "edge joins node {} of graph {} with node {} of graph {}",
                    i + 1,
                    g + 1,
                    j + 1,
                    graph_of[j] + 1
                ),
            });
        }
        if i == j || !seen.insert((i.min(j), i.max(j))) {
            continue;
        }
        edges[g].push((i - first_node[g], j - first_node[g]));
    }

    let (node_ids, node_names) = remap(&node_labels.iter().map(|&(_, v)| v).collect::<Vec<_>>());
    let (graph_ids, graph_names) =
        remap(&graph_labels.iter().map(|&(_, v)| v).collect::<Vec<_>>());

    let mut samples = Vec::with_capacity(num_graphs);
    for (g, edges) in edges.into_iter().enumerate() {
        let start = first_node[g];
        let classes = node_ids[start..start + sizes[g]].to_vec();
        let graph = Graph::new(classes, edges)?;
        samples.push(Sample {
            graph,
            recognition_label: graph_ids[g],
            prediction_label: graph_ids[g],
            window_ids: Vec::new(),
        });
    }

    Ok(Dataset {
        name: name.to_string(),
        samples,
        num_node_classes: node_names.len(),
        num_graph_classes: graph_names.len(),
        graph_labels: graph_names,
        node_labels: node_names,
    })
}

fn label_value(names: &[String], id: usize, what: &str) -> Result<i64> {
    let name = names
        .get(id)
        .ok_or_else(|| Error::Argument(format!("{what} id {id} has no label name")))?;
    name.parse()
        .map_err(|_| Error::Argument(format!("{what} label `{name}` is not an integer")))
}

/// Writes `dataset` in the same four-file layout [`load_tu_dataset`] reads.
/// Labels are written as their original integer values.
pub fn write_tu_dataset(dir: &Path, name: &str, dataset: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut a = String::new();
    let mut gi = String::new();
    let mut gl = String::new();
    let mut nl = String::new();
    let mut offset = 0usize;
    for (g, sample) in dataset.samples.iter().enumerate() {
        let graph = &sample.graph;
        for &c in graph.node_class() {
            writeln!(gi, "{}", g + 1).unwrap();
            writeln!(nl, "{}", label_value(&dataset.node_labels, c, "node")?).unwrap();
        }
        for &(i, j) in graph.edges() {
            let (i, j) = (i + offset + 1, j + offset + 1);
            writeln!(a, "{i}, {j}").unwrap();
            writeln!(a, "{j}, {i}").unwrap();
        }
        writeln!(
            gl,
            "{}",
            label_value(&dataset.graph_labels, sample.recognition_label, "graph")?
        )
        .unwrap();
        offset += graph.num_nodes();
    }
    for (suffix, body) in [
        ("A", a),
        ("graph_indicator", gi),
        ("graph_labels", gl),
        ("node_labels", nl),
    ] {
        let path = file_path(dir, name, suffix);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
