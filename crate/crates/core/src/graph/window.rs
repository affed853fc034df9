use super::{merge_graphs, Dataset, Sample, SequenceStore};
use crate::error::{Error, Result};

/// Samples cut from a sequence store, plus how many sequences were too short.
#[derive(Clone, Debug, PartialEq)]
pub struct Windows {
    pub dataset: Dataset,
    pub skipped_sequences: usize,
}

/// Slides a window of `window` consecutive frames over every sequence with
/// stride 1 and merges each window into one graph.
///
/// The recognition label is the action of the window's last frame. The
/// prediction label is the action of the frame `horizon` windows further on,
/// clamped to the sequence's last frame.
pub fn build_windows(store: &SequenceStore, window: usize, horizon: usize) -> Result<Windows> {
    if window == 0 {
        return Err(Error::Argument("window must be at least 1".into()));
    }
    let mut samples = Vec::new();
    let mut skipped = 0;
    for seq in &store.sequences {
        let len = seq.frames.len();
        if len < window {
            skipped += 1;
            continue;
        }
        for t in 0..=len - window {
            let frames = &seq.frames[t..t + window];
            let graphs: Vec<_> = frames.iter().map(|f| f.graph.clone()).collect();
            let last = t + window - 1;
            let ahead = (last + horizon * window).min(len - 1);
            samples.push(Sample {
                graph: merge_graphs(&graphs)?,
                recognition_label: seq.frames[last].action,
                prediction_label: seq.frames[ahead].action,
                window_ids: frames
                    .iter()
                    .map(|f| f.graph.frame_index.unwrap_or_default())
                    .collect(),
            });
        }
    }
    Ok(Windows {
        dataset: Dataset {
            name: store.name.clone(),
            samples,
            num_node_classes: store.num_node_classes,
            num_graph_classes: store.actions.len(),
            graph_labels: store.actions.clone(),
            node_labels: (0..store.num_node_classes).map(|c| c.to_string()).collect(),
        },
        skipped_sequences: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Frame, Graph, Sequence};

    fn store(labels: &[usize]) -> SequenceStore {
        let frames = labels
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let mut g = Graph::new(vec![i % 2, 1], vec![(0, 1)]).unwrap();
                g.frame_index = Some(i as i64);
                Frame { graph: g, action: a }
            })
            .collect();
        SequenceStore {
            name: "t".into(),
            actions: vec!["A".into(), "B".into()],
            num_node_classes: 2,
            sequences: vec![Sequence {
                id: "s".into(),
                action: labels[0],
                frames,
            }],
        }
    }

    #[test]
    fn eight_frames_window_four() {
        let w = build_windows(&store(&[0; 8]), 4, 1).unwrap();
        assert_eq!(w.dataset.len(), 5);
        assert_eq!(w.dataset.samples[0].graph.num_nodes(), 8);
        assert_eq!(w.dataset.samples[4].window_ids, vec![4, 5, 6, 7]);
    }

    #[test]
    fn window_one_is_identity() {
        let s = store(&[1; 3]);
        let w = build_windows(&s, 1, 0).unwrap();
        assert_eq!(w.dataset.len(), 3);
        for (sample, frame) in w.dataset.samples.iter().zip(&s.sequences[0].frames) {
            assert_eq!(sample.graph, frame.graph);
            assert_eq!(sample.prediction_label, 1);
        }
    }

    #[test]
    fn chained_sequence_labels() {
        let labels: Vec<usize> = (0..12).map(|i| usize::from(i >= 6)).collect();
        let w = build_windows(&store(&labels), 4, 1).unwrap();
        let got: Vec<_> = w
            .dataset
            .samples
            .iter()
            .map(|s| (s.recognition_label, s.prediction_label))
            .collect();
        // last frame t+3, target frame min(t+7, 11)
        let expected = vec![
            (0, 1), // t=0: frame 3 A, frame 7 B
            (0, 1),
            (0, 1),
            (1, 1), // t=3: frame 6 B
            (1, 1),
            (1, 1),
            (1, 1),
            (1, 1),
            (1, 1),
        ];
        assert_eq!(got, expected);
        assert_eq!(got[2], (0, 1));
    }

    #[test]
    fn short_sequences_are_counted() {
        let w = build_windows(&store(&[0; 3]), 4, 1).unwrap();
        assert!(w.dataset.is_empty());
        assert_eq!(w.skipped_sequences, 1);
    }
}
