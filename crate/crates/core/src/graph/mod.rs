//! Graph data model, dataset ingestion, temporal windowing and splitting.
//!
//! A [`Graph`] is an undirected, unweighted graph whose nodes carry a single
//! categorical class id. Node features are the one-hot encoding of that id.

mod sequence;
mod split;
mod tu;
mod window;

use std::collections::HashSet;

pub use sequence::{
    load_sequence_dataset, parse_sequence_dataset, write_sequence_dataset, Frame, Sequence,
    SequenceFile, SequenceStore, SEQUENCE_FORMAT, SEQUENCE_VERSION,
};
pub use split::{split_dataset, split_indices, split_sequences, Split, SplitRatios};
pub use tu::{load_tu_dataset, write_tu_dataset};
pub use window::{build_windows, Windows};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    node_class: Vec<usize>,
    edges: Vec<(usize, usize)>,
    pub frame_index: Option<i64>,
    pub sequence_id: Option<String>,
}

impl Graph {
    /// Validates endpoints, self-loops and duplicate unordered pairs.
    pub fn new(node_class: Vec<usize>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = node_class.len();
        let mut seen = HashSet::with_capacity(edges.len());
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(Error::Argument(format!(
                    "edge ({a}, {b}) references a node outside [0, {n})"
                )));
            }
            if a == b {
                return Err(Error::Argument(format!("self-loop on node {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::Argument(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(Graph {
            node_class,
            edges,
            frame_index: None,
            sequence_id: None,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.node_class.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node_class(&self) -> &[usize] {
        &self.node_class
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.num_nodes();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::Argument("not a permutation of the node ids".into()));
        }
        let mut classes = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            classes[new] = self.node_class[old];
        }
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| (perm[a], perm[b]))
            .collect();
        let mut g = Graph::new(classes, edges)?;
        g.frame_index = self.frame_index;
        g.sequence_id = self.sequence_id.clone();
        Ok(g)
    }
}

/// One training unit: a (possibly merged) graph and its two labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub graph: Graph,
    pub recognition_label: usize,
    pub prediction_label: usize,
    /// Frame indices the graph was merged from; empty for single graphs.
    pub window_ids: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub samples: Vec<Sample>,
    pub num_node_classes: usize,
    pub num_graph_classes: usize,
    /// Original label of each contiguous graph class id.
    pub graph_labels: Vec<String>,
    /// Original label of each contiguous node class id.
    pub node_labels: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Copy of this dataset restricted to `indices`, metadata preserved.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            ..self.empty_like()
        }
    }

    pub(crate) fn empty_like(&self) -> Dataset {
        Dataset {
            name: self.name.clone(),
            samples: Vec::new(),
            num_node_classes: self.num_node_classes,
            num_graph_classes: self.num_graph_classes,
            graph_labels: self.graph_labels.clone(),
            node_labels: self.node_labels.clone(),
        }
    }
}

/// Disjoint union: graph `k`'s node ids are shifted by the node count of
/// all graphs before it. No edges are added between parts.
pub fn merge_graphs(graphs: &[Graph]) -> Result<Graph> {
    let Some(first) = graphs.first() else {
        return Err(Error::Argument("cannot merge an empty list of graphs".into()));
    };
    let mut classes = Vec::with_capacity(graphs.iter().map(Graph::num_nodes).sum());
    let mut edges = Vec::with_capacity(graphs.iter().map(Graph::num_edges).sum());
    for g in graphs {
        let offset = classes.len();
        edges.extend(g.edges.iter().map(|&(a, b)| (a + offset, b + offset)));
        classes.extend_from_slice(&g.node_class);
    }
    let mut merged = Graph {
        node_class: classes,
        edges,
        frame_index: None,
        sequence_id: first.sequence_id.clone(),
    };
    if graphs.len() == 1 {
        merged.frame_index = first.frame_index;
    }
    Ok(merged)
}

/// One row per node with a single 1.0 at the node's class column.
pub fn one_hot_features(graph: &Graph, num_classes: usize) -> Result<Tensor> {
    let mut x = Tensor::zeros(graph.num_nodes(), num_classes);
    for (i, &c) in graph.node_class.iter().enumerate() {
        if c >= num_classes {
            return Err(Error::Argument(format!(
                "node {i} has class {c}, outside [0, {num_classes})"
            )));
        }
        x.set(i, c, 1.0);
    }
    Ok(x)
}
