//! Partition representation shared by metrics and clustering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A k-partition stored as one cluster id per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    labels: Vec<usize>,
    k: usize,
}

impl Labeling {
    /// Wraps `labels`, checking every id is below `k`. Empty clusters are allowed here;
    /// operations that need nonempty clusters check for themselves.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some((position, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::LabelOutOfRange { position, label, k });
        }
        Ok(Self { labels, k })
    }

    /// Infers `k` as `max + 1`.
    pub fn from_vec(labels: Vec<usize>) -> Self {
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        Self { labels, k }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.labels
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// First empty cluster id, if any.
    pub fn first_empty_cluster(&self) -> Option<usize> {
        self.cluster_sizes().iter().position(|&s| s == 0)
    }

    pub fn require_nonempty(&self) -> Result<()> {
        match self.first_empty_cluster() {
            Some(cluster) => Err(Error::EmptyCluster { cluster }),
            None => Ok(()),
        }
    }

    /// Member lists per cluster, each in increasing order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        let err = Labeling::new(vec![0, 2], 2).unwrap_err();
        assert_eq!(
            err,
            Error::LabelOutOfRange {
                position: 1,
                label: 2,
                k: 2
            }
        );
    }

    #[test]
    fn reports_first_empty_cluster() {
        let l = Labeling::new(vec![0, 0, 2], 3).unwrap();
        assert_eq!(l.first_empty_cluster(), Some(1));
        assert_eq!(l.require_nonempty(), Err(Error::EmptyCluster { cluster: 1 }));
        assert_eq!(l.members(), vec![vec![0, 1], vec![], vec![2]]);
    }
}
