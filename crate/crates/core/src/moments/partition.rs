//! Set partitions of `{1..p}` and their enumeration in restricted-growth order.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Largest moment order the engine supports.
pub const MAX_ORDER: usize = 12;

/// Maps any integer index onto `1..=p` cyclically: `[p] = p`, `[p+1] = 1`, `[0] = p`.
pub fn cyclic_index(i: i64, p: usize) -> usize {
    let p = p as i64;
    ((i - 1).rem_euclid(p) + 1) as usize
}

/// Partition of `{1..p}` into `k` nonempty blocks, ordered by smallest element.
///
/// Internally stored as a restricted growth string: `labels[i-1]` is the block of
/// element `i`, labels start at 0 and each new label is one more than the largest
/// seen so far. This is the path of the partition in the labelled enumeration tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    labels: Vec<u8>,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// From a restricted growth string (0-based labels).
    pub fn from_labels(labels: Vec<u8>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("partition of an empty set".into()));
        }
        let mut next = 0u8;
        for &l in &labels {
            if l > next {
                return Err(Error::InvalidArgument(format!("{labels:?} is not a restricted growth string")));
            }
            if l == next {
                next += 1;
            }
        }
        Ok(Self::from_labels_unchecked(labels))
    }

    pub(crate) fn from_labels_unchecked(labels: Vec<u8>) -> Self {
        let k = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut blocks = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            blocks[l as usize].push(i + 1);
        }
        Self { labels, blocks }
    }

    /// Partition induced by equal entries of `q`, blocks in order of first appearance.
    pub fn from_index_vector<T: Eq + Hash>(q: &[T]) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidArgument("index vector must not be empty".into()));
        }
        if q.len() > u8::MAX as usize {
            return Err(Error::InvalidArgument("index vector too long".into()));
        }
        let mut seen: HashMap<&T, u8> = HashMap::new();
        let labels = q
            .iter()
            .map(|v| {
                let n = seen.len() as u8;
                *seen.entry(v).or_insert(n)
            })
            .collect();
        Ok(Self::from_labels_unchecked(labels))
    }

    /// From explicit 1-based blocks; they must be disjoint, nonempty and cover `1..=p`.
    pub fn from_blocks(blocks: &[Vec<usize>]) -> Result<Self> {
        let p: usize = blocks.iter().map(Vec::len).sum();
        if p == 0 || blocks.iter().any(Vec::is_empty) {
            return Err(Error::InvalidArgument("blocks must be nonempty".into()));
        }
        let mut owner = vec![usize::MAX; p];
        for (j, block) in blocks.iter().enumerate() {
            for &i in block {
                if i == 0 || i > p || owner[i - 1] != usize::MAX {
                    return Err(Error::InvalidArgument(format!("blocks do not partition 1..={p}")));
                }
                owner[i - 1] = j;
            }
        }
        Self::from_index_vector(&owner)
    }

    /// Size of the ground set.
    pub fn p(&self) -> usize {
        self.labels.len()
    }

    /// Number of blocks.
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    /// Blocks of 1-based elements, sorted by smallest element.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Restricted growth string (0-based block label per element).
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// 0-based block index of the 1-based element `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.labels[i - 1] as usize
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (j, block) in self.blocks.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (n, i) in block.iter().enumerate() {
                if n > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{i}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// Streaming enumeration of all partitions of `{1..p}` in tree order: the children
/// of a node are labelled `0..=m` where `m` is the number of distinct labels on the
/// path so far, which is lexicographic order on restricted growth strings.
#[derive(Debug, Clone)]
pub struct Partitions {
    labels: Vec<u8>,
    /// `prefix_max[i] = max(labels[..=i])`.
    prefix_max: Vec<u8>,
    started: bool,
    done: bool,
}

pub fn enumerate_partitions(p: usize) -> Result<Partitions> {
    if p == 0 || p > MAX_ORDER {
        return Err(Error::InvalidArgument(format!("partition size must be in 1..={MAX_ORDER}, got {p}")));
    }
    Ok(Partitions { labels: vec![0; p], prefix_max: vec![0; p], started: false, done: false })
}

impl Partitions {
    /// Advances and returns the next restricted growth string without allocating.
    pub fn next_labels(&mut self) -> Option<&[u8]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.labels);
        }
        let p = self.labels.len();
        let Some(i) = (1..p).rev().find(|&i| self.labels[i] <= self.prefix_max[i - 1]) else {
            self.done = true;
            return None;
        };
        self.labels[i] += 1;
        self.prefix_max[i] = self.prefix_max[i - 1].max(self.labels[i]);
        for j in i + 1..p {
            self.labels[j] = 0;
            self.prefix_max[j] = self.prefix_max[i];
        }
        Some(&self.labels)
    }
}

impl Iterator for Partitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        self.next_labels().map(|l| SetPartition::from_labels_unchecked(l.to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn example_index_vector() {
        let tau = SetPartition::from_index_vector(&[4, 9, 5, 5, 4, 3]).unwrap();
        assert_eq!(tau.blocks(), &[vec![1, 5], vec![2], vec![3, 4], vec![6]]);
        assert_eq!(tau.k(), 4);
        assert_eq!(tau.to_string(), "{{1,5},{2},{3,4},{6}}");
    }

    #[test]
    fn trivial_index_vectors() {
        let one = SetPartition::from_index_vector(&[7, 7, 7]).unwrap();
        assert_eq!(one.blocks(), &[vec![1, 2, 3]]);
        let singles = SetPartition::from_index_vector(&[1, 2, 3]).unwrap();
        assert_eq!(singles.k(), 3);
        assert!(SetPartition::from_index_vector::<i32>(&[]).is_err());
    }

    #[test]
    fn tree_path_maps_to_blocks() {
        // path [a, b, a, a]
        let tau = SetPartition::from_labels(vec![0, 1, 0, 0]).unwrap();
        assert_eq!(tau.blocks(), &[vec![1, 3, 4], vec![2]]);
        assert!(enumerate_partitions(4).unwrap().any(|t| t == tau));
    }

    #[test]
    fn labels_and_blocks_validation() {
        assert!(SetPartition::from_labels(vec![1, 0]).is_err());
        assert!(SetPartition::from_labels(vec![0, 2]).is_err());
        let b = SetPartition::from_blocks(&[vec![3, 4], vec![1, 5], vec![2], vec![6]]).unwrap();
        assert_eq!(b, SetPartition::from_index_vector(&[4, 9, 5, 5, 4, 3]).unwrap());
        assert!(SetPartition::from_blocks(&[vec![1, 1]]).is_err());
        assert!(SetPartition::from_blocks(&[vec![1, 3]]).is_err());
    }

    #[test]
    fn enumeration_is_lexicographic_and_distinct() {
        let all: Vec<Vec<u8>> = enumerate_partitions(5).unwrap().map(|t| t.labels().to_vec()).collect();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        let set: HashSet<_> = all.iter().collect();
        assert_eq!(set.len(), all.len());
        assert_eq!(all.first().unwrap(), &vec![0; 5]);
        assert_eq!(all.last().unwrap(), &vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn enumeration_bounds() {
        assert!(enumerate_partitions(0).is_err());
        assert!(enumerate_partitions(13).is_err());
        assert_eq!(enumerate_partitions(1).unwrap().count(), 1);
    }

    #[test]
    fn cyclic_index_convention() {
        assert_eq!(cyclic_index(6, 6), 6);
        assert_eq!(cyclic_index(7, 6), 1);
        assert_eq!(cyclic_index(0, 6), 6);
        assert_eq!(cyclic_index(3, 6), 3);
    }
}
