use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, SequenceStore};
use crate::error::{Error, Result};

/// Integer train/val/test weights, e.g. `[10, 3, 2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRatios(pub [u32; 3]);

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|&r| r == 0) {
            return Err(Error::Split(format!("ratios must be positive, got {:?}", self.0)));
        }
        Ok(())
    }

    /// Largest-remainder allocation of `n` items. Ties on the remainder go
    /// to the earlier split.
    pub fn allocate(&self, n: usize) -> [usize; 3] {
        let total: u64 = self.0.iter().map(|&r| u64::from(r)).sum();
        let mut counts = [0usize; 3];
        let mut rem = [0u64; 3];
        for i in 0..3 {
            let q = n as u64 * u64::from(self.0[i]);
            counts[i] = (q / total) as usize;
            rem[i] = q % total;
        }
        let mut left = n - counts.iter().sum::<usize>();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| rem[b].cmp(&rem[a]).then(a.cmp(&b)));
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            counts[i] += 1;
            left -= 1;
        }
        counts
    }
}

/// Index sets of the three partitions, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions item indices by `labels`.
///
/// Items are shuffled with a seeded RNG, then cut by largest remainder,
/// either within each class (classes visited in ascending id order) or
/// over the whole set. A group with at least three items never leaves a
/// partition empty.
pub fn split_indices(labels: &[usize], ratios: SplitRatios, seed: u64, per_class: bool) -> Result<Split> {
    ratios.validate()?;
    let mut groups: Vec<(Option<usize>, Vec<usize>)> = if per_class {
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        (0..num_classes)
            .map(|c| {
                let members = (0..labels.len()).filter(|&i| labels[i] == c).collect();
                (Some(c), members)
            })
            .filter(|(_, m): &(_, Vec<usize>)| !m.is_empty())
            .collect()
    } else {
        vec![(None, (0..labels.len()).collect())]
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (class, members) in &mut groups {
        if let Some(c) = class {
            if members.len() < 3 {
                return Err(Error::Split(format!(
                    "class {c} has {} members; a per-class split needs at least 3",
                    members.len()
                )));
            }
        }
        members.shuffle(&mut rng);
        let mut counts = ratios.allocate(members.len());
        if members.len() >= 3 {
            for i in 0..3 {
                if counts[i] == 0 {
                    let donor = (0..3).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a))).unwrap();
                    counts[donor] -= 1;
                    counts[i] += 1;
                }
            }
        }
        let mut start = 0;
        for (part, &count) in parts.iter_mut().zip(&counts) {
            part.extend_from_slice(&members[start..start + count]);
            start += count;
        }
    }
    for (part, name) in parts.iter_mut().zip(["train", "val", "test"]) {
        if part.is_empty() {
            return Err(Error::Split(format!("{name} split would be empty")));
        }
        part.sort_unstable();
    }
    let [train, val, test] = parts;
    Ok(Split { train, val, test })
}

/// Splits samples by recognition label.
pub fn split_dataset(
    dataset: &Dataset,
    ratios: SplitRatios,
    seed: u64,
    per_class: bool,
) -> Result<(Dataset, Dataset, Dataset)> {
    let labels: Vec<usize> = dataset.samples.iter().map(|s| s.recognition_label).collect();
    let split = split_indices(&labels, ratios, seed, per_class)?;
    Ok((
        dataset.subset(&split.train),
        dataset.subset(&split.val),
        dataset.subset(&split.test),
    ))
}

/// Splits whole sequences by action so that windows of one demonstration
/// never straddle partitions.
pub fn split_sequences(
    store: &SequenceStore,
    ratios: SplitRatios,
    seed: u64,
    per_class: bool,
) -> Result<(SequenceStore, SequenceStore, SequenceStore)> {
    let labels: Vec<usize> = store.sequences.iter().map(|s| s.action).collect();
    let split = split_indices(&labels, ratios, seed, per_class)?;
    Ok((
        store.subset(&split.train),
        store.subset(&split.val),
        store.subset(&split.test),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder_221() {
        assert_eq!(SplitRatios([8, 1, 1]).allocate(221), [177, 22, 22]);
    }

    #[test]
    fn fifteen_per_class_exact() {
        assert_eq!(SplitRatios([10, 3, 2]).allocate(15), [10, 3, 2]);
    }

    #[test]
    fn per_class_counts() {
        let labels: Vec<usize> = (0..8).flat_map(|c| std::iter::repeat(c).take(15)).collect();
        let s = split_indices(&labels, SplitRatios([10, 3, 2]), 7, true).unwrap();
        for c in 0..8 {
            let count = |v: &[usize]| v.iter().filter(|&&i| labels[i] == c).count();
            assert_eq!((count(&s.train), count(&s.val), count(&s.test)), (10, 3, 2));
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let labels = vec![0; 50];
        let a = split_indices(&labels, SplitRatios([8, 1, 1]), 3, false).unwrap();
        let b = split_indices(&labels, SplitRatios([8, 1, 1]), 3, false).unwrap();
        let c = split_indices(&labels, SplitRatios([8, 1, 1]), 4, false).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn small_class_rejected() {
        let err = split_indices(&[0, 0, 0, 1, 1], SplitRatios([1, 1, 1]), 0, true).unwrap_err();
        assert!(err.to_string().contains("class 1"), "{err}");
    }

    #[test]
    fn three_members_fill_every_split() {
        let s = split_indices(&[0, 0, 0], SplitRatios([10, 3, 2]), 0, true).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (1, 1, 1));
    }

    #[test]
    fn zero_ratio_rejected() {
        assert!(split_indices(&[0; 9], SplitRatios([1, 0, 1]), 0, false).is_err());
    }
}
