//! Sequence Graph Format: ordered per-frame graphs grouped into labelled
//! demonstrations, stored as JSON.
//!
//! ```json
//! {
//!   "format": "gnet-sequences",
//!   "version": 1,
//!   "actions": ["cutting", "stirring"],
//!   "num_node_classes": 21,
//!   "sequences": [
//!     {
//!       "id": "cutting_01",
//!       "action_label": "cutting",
//!       "frames": [
//!         { "frame_index": 0, "node_classes": [3, 7, 0], "edges": [[0, 1], [1, 2]] },
//!         { "frame_index": 1, "node_classes": [3, 7], "edges": [[0, 1]], "action_label": "stirring" }
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! `actions` fixes the label alphabet and the contiguous id of each label.
//! `num_node_classes` is optional and defaults to the largest class id + 1.
//! A frame's `action_label` overrides the sequence label, which is how
//! chained multi-action recordings are expressed. Edge ids are 0-based and
//! local to the frame; frame indices must increase strictly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

pub const SEQUENCE_FORMAT: &str = "gnet-sequences";
pub const SEQUENCE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    pub format: String,
    pub version: u32,
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_node_classes: Option<usize>,
    pub sequences: Vec<SequenceRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceRecord {
    pub id: String,
    pub action_label: String,
    pub frames: Vec<FrameRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_index: i64,
    pub node_classes: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_label: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub graph: Graph,
    pub action: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub id: String,
    pub action: usize,
    pub frames: Vec<Frame>,
}

/// Demonstrations grouped by sequence, frames in recorded order.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceStore {
    pub name: String,
    pub actions: Vec<String>,
    pub num_node_classes: usize,
    pub sequences: Vec<Sequence>,
}

impl SequenceStore {
    pub fn num_frames(&self) -> usize {
        self.sequences.iter().map(|s| s.frames.len()).sum()
    }

    pub fn to_file(&self) -> SequenceFile {
        SequenceFile {
            format: SEQUENCE_FORMAT.into(),
            version: SEQUENCE_VERSION,
            actions: self.actions.clone(),
            num_node_classes: Some(self.num_node_classes),
            sequences: self
                .sequences
                .iter()
                .map(|s| SequenceRecord {
                    id: s.id.clone(),
                    action_label: self.actions[s.action].clone(),
                    frames: s
                        .frames
                        .iter()
                        .map(|f| FrameRecord {
                            frame_index: f.graph.frame_index.unwrap_or_default(),
                            node_classes: f.graph.node_class().to_vec(),
                            edges: f.graph.edges().iter().map(|&(a, b)| [a, b]).collect(),
                            action_label: (f.action != s.action)
                                .then(|| self.actions[f.action].clone()),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> SequenceStore {
        SequenceStore {
            name: self.name.clone(),
            actions: self.actions.clone(),
            num_node_classes: self.num_node_classes,
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
        }
    }
}

fn action_id(file: &Path, actions: &[String], label: &str) -> Result<usize> {
    actions.iter().position(|a| a == label).ok_or_else(|| {
        Error::format(
            file,
            format!("unknown action `{label}`; known labels: {}", actions.join(", ")),
        )
    })
}

/// Validates a parsed file. `origin` is only used in error messages.
pub fn parse_sequence_dataset(origin: &Path, file: SequenceFile) -> Result<SequenceStore> {
    if file.format != SEQUENCE_FORMAT {
        return Err(Error::format(
            origin,
            format!("expected format `{SEQUENCE_FORMAT}`, found `{}`", file.format),
        ));
    }
    if file.version != SEQUENCE_VERSION {
        return Err(Error::format(origin, format!("unsupported version {}", file.version)));
    }
    if file.actions.is_empty() {
        return Err(Error::format(origin, "empty action list"));
    }
    for (i, a) in file.actions.iter().enumerate() {
        if file.actions[..i].contains(a) {
            return Err(Error::format(origin, format!("duplicate action `{a}`")));
        }
    }

    let mut max_class = None;
    let mut sequences = Vec::with_capacity(file.sequences.len());
    for rec in file.sequences {
        let action = action_id(origin, &file.actions, &rec.action_label)?;
        let mut frames = Vec::with_capacity(rec.frames.len());
        let mut last_index = None;
        for fr in rec.frames {
            if let Some(prev) = last_index {
                if fr.frame_index <= prev {
                    return Err(Error::format(
                        origin,
                        format!(
                            "sequence `{}`: frame index {} does not follow {prev}",
                            rec.id, fr.frame_index
                        ),
                    ));
                }
            }
            last_index = Some(fr.frame_index);
            let frame_action = match &fr.action_label {
                Some(label) => action_id(origin, &file.actions, label)?,
                None => action,
            };
            if let Some(&m) = fr.node_classes.iter().max() {
                max_class = Some(max_class.map_or(m, |c: usize| c.max(m)));
            }
            let edges = fr.edges.iter().map(|&[a, b]| (a, b)).collect();
            let mut graph = Graph::new(fr.node_classes, edges).map_err(|e| {
                Error::format(
                    origin,
                    format!("sequence `{}`, frame {}: {e}", rec.id, fr.frame_index),
                )
            })?;
            graph.frame_index = Some(fr.frame_index);
            graph.sequence_id = Some(rec.id.clone());
            frames.push(Frame {
                graph,
                action: frame_action,
            });
        }
        sequences.push(Sequence {
            id: rec.id,
            action,
            frames,
        });
    }

    let needed = max_class.map_or(1, |m| m + 1);
    let num_node_classes = match file.num_node_classes {
        Some(n) if n < needed => {
            return Err(Error::format(
                origin,
                format!("num_node_classes is {n} but class id {} occurs", needed - 1),
            ))
        }
        Some(n) => n,
        None => needed,
    };

    Ok(SequenceStore {
        name: origin
            .file_stem()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
        actions: file.actions,
        num_node_classes,
        sequences,
    })
}

pub fn load_sequence_dataset(path: &Path) -> Result<SequenceStore> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SequenceFile =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    parse_sequence_dataset(path, file)
}

pub fn write_sequence_dataset(path: &Path, store: &SequenceStore) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&store.to_file())
        .map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(i: i64, classes: &[usize], edges: &[[usize; 2]]) -> FrameRecord {
        FrameRecord {
            frame_index: i,
            node_classes: classes.to_vec(),
            edges: edges.to_vec(),
            action_label: None,
        }
    }

    fn file(seqs: Vec<SequenceRecord>) -> SequenceFile {
        SequenceFile {
            format: SEQUENCE_FORMAT.into(),
            version: 1,
            actions: vec!["push".into(), "pull".into()],
            num_node_classes: None,
            sequences: seqs,
        }
    }

    #[test]
    fn minimal_one_frame_sequence() {
        let f = file(vec![SequenceRecord {
            id: "s".into(),
            action_label: "pull".into(),
            frames: vec![frame(0, &[0], &[])],
        }]);
        let store = parse_sequence_dataset(Path::new("mem.json"), f).unwrap();
        assert_eq!(store.sequences.len(), 1);
        assert_eq!(store.sequences[0].frames.len(), 1);
        assert_eq!(store.sequences[0].action, 1);
        assert_eq!(store.num_node_classes, 1);
    }

    #[test]
    fn non_monotone_frames_rejected() {
        let f = file(vec![SequenceRecord {
            id: "s".into(),
            action_label: "push".into(),
            frames: vec![frame(3, &[0], &[]), frame(3, &[0], &[])],
        }]);
        let err = parse_sequence_dataset(Path::new("x.json"), f).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
    }

    #[test]
    fn unknown_action_lists_known() {
        let f = file(vec![SequenceRecord {
            id: "s".into(),
            action_label: "stir".into(),
            frames: vec![],
        }]);
        let err = parse_sequence_dataset(Path::new("x.json"), f).unwrap_err().to_string();
        assert!(err.contains("stir") && err.contains("push, pull"), "{err}");
    }

    #[test]
    fn declared_class_count_must_cover_ids() {
        let mut f = file(vec![SequenceRecord {
            id: "s".into(),
            action_label: "push".into(),
            frames: vec![frame(0, &[4], &[])],
        }]);
        f.num_node_classes = Some(3);
        assert!(parse_sequence_dataset(Path::new("x.json"), f).is_err());
    }

    #[test]
    fn write_then_read_two_sequences() {
        let mk = |id: &str, action: &str| SequenceRecord {
            id: id.into(),
            action_label: action.into(),
            frames: (0..6).map(|i| frame(i, &[0, 1, 2], &[[0, 1], [2, 1]])).collect(),
        };
        let f = file(vec![mk("a", "push"), mk("b", "pull")]);
        let store = parse_sequence_dataset(Path::new("x.json"), f).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        write_sequence_dataset(&path, &store).unwrap();
        let back = load_sequence_dataset(&path).unwrap();
        assert_eq!(back, store);
        assert_eq!(back.num_frames(), 12);
        let order: Vec<_> = back.sequences[1].frames.iter().map(|f| f.graph.frame_index).collect();
        assert_eq!(order, (0..6).map(Some).collect::<Vec<_>>());
    }
}
