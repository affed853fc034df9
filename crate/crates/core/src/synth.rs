//! Synthetic manipulation-like sequences whose action classes differ only
//! in a structural motif.
//!
//! Every frame holds 3 to 6 background nodes joined by random edges
//! (probability 0.25 per pair). With probability `strength` a frame of
//! class `k` additionally contains a clique of `k + 2` motif nodes.
//! Background nodes draw their class uniformly from `1..SYNTH_NODE_CLASSES`;
//! motif nodes use class [`MOTIF_NODE_CLASS`]. With `strength = 0` every
//! action class is identically distributed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Frame, Graph, Sequence, SequenceStore};

pub const SYNTH_NODE_CLASSES: usize = 5;
pub const MOTIF_NODE_CLASS: usize = 0;
const BACKGROUND_NODES: (usize, usize) = (3, 6);
const NOISE_EDGE_P: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub classes: usize,
    pub seqs_per_class: usize,
    pub frames: usize,
    /// Probability that a frame contains its class motif, in [0, 1].
    pub strength: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Argument(format!(
                "synthetic data needs at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.seqs_per_class == 0 || self.frames == 0 {
            return Err(Error::Argument("sequence and frame counts must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(Error::Argument(format!(
                "motif strength {} outside [0, 1]",
                self.strength
            )));
        }
        Ok(())
    }
}

fn frame<R: Rng>(class: usize, strength: f64, rng: &mut R) -> Result<Graph> {
    let background = rng.gen_range(BACKGROUND_NODES.0..=BACKGROUND_NODES.1);
    let mut edges = Vec::new();
    for i in 0..background {
        for j in i + 1..background {
            if rng.gen_bool(NOISE_EDGE_P) {
                edges.push((i, j));
            }
        }
    }
    let mut classes: Vec<usize> = (0..background)
        .map(|_| rng.gen_range(MOTIF_NODE_CLASS + 1..SYNTH_NODE_CLASSES))
        .collect();
    if rng.gen_bool(strength) {
        let n = background;
        let size = class + 2;
        for i in 0..size {
            for j in i + 1..size {
                edges.push((n + i, n + j));
            }
        }
        classes.resize(n + size, MOTIF_NODE_CLASS);
    }
    Graph::new(classes, edges)
}

pub fn generate(spec: &SynthSpec) -> Result<SequenceStore> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut sequences = Vec::with_capacity(spec.classes * spec.seqs_per_class);
    for class in 0..spec.classes {
        for s in 0..spec.seqs_per_class {
            let id = format!("action_{class}_{s:03}");
            let frames = (0..spec.frames)
                .map(|f| {
                    let mut graph = frame(class, spec.strength, &mut rng)?;
                    graph.frame_index = Some(f as i64);
                    graph.sequence_id = Some(id.clone());
                    Ok(Frame {
                        graph,
                        action: class,
                    })
                })
                .collect::<Result<_>>()?;
            sequences.push(Sequence {
                id,
                action: class,
                frames,
            });
        }
    }
    Ok(SequenceStore {
        name: "synthetic".into(),
        actions: (0..spec.classes).map(|k| format!("action_{k}")).collect(),
        num_node_classes: SYNTH_NODE_CLASSES,
        sequences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(strength: f64) -> SynthSpec {
        SynthSpec {
            classes: 3,
            seqs_per_class: 4,
            frames: 5,
            strength,
            seed: 9,
        }
    }

    #[test]
    fn counts() {
        let s = generate(&spec(1.0)).unwrap();
        assert_eq!(s.sequences.len(), 12);
        assert_eq!(s.num_frames(), 60);
        assert_eq!(s.actions.len(), 3);
    }

    #[test]
    fn full_strength_always_has_clique() {
        let s = generate(&spec(1.0)).unwrap();
        for seq in &s.sequences {
            let k = seq.action + 2;
            for f in &seq.frames {
                let deg = f.graph.degrees();
                let n = f.graph.num_nodes();
                // the clique occupies the last k nodes
                assert!(deg[n - k..].iter().all(|&d| d == k - 1));
                let motif = f.graph.node_class().iter().filter(|&&c| c == MOTIF_NODE_CLASS).count();
                assert_eq!(motif, k);
            }
        }
    }

    #[test]
    fn zero_strength_has_background_only() {
        let s = generate(&spec(0.0)).unwrap();
        for f in s.sequences.iter().flat_map(|q| &q.frames) {
            assert!((3..=6).contains(&f.graph.num_nodes()));
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&spec(0.5)).unwrap(), generate(&spec(0.5)).unwrap());
    }

    #[test]
    fn needs_two_classes() {
        let mut sp = spec(1.0);
        sp.classes = 1;
        assert!(generate(&sp).is_err());
    }
}
