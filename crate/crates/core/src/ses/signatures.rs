//! Enumeration of signatures: one member from every equivalence queue.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signatures {
    pub signatures: Vec<Vec<usize>>,
    /// Product of queue sizes (saturating).
    pub total: u64,
    pub truncated: bool,
}

/// Product of queue sizes, saturating at `u64::MAX`.
pub fn signature_count(queues: &[Vec<usize>]) -> u64 {
    queues
        .iter()
        .fold(1u64, |acc, q| acc.saturating_mul(q.len() as u64))
}

/// Mixed-radix decoding of signature number `index`; the last queue varies
/// fastest.
fn decode(queues: &[Vec<usize>], mut index: u64) -> Vec<usize> {
    let mut sig = vec![0; queues.len()];
    for (slot, q) in sig.iter_mut().zip(queues).rev() {
        let len = q.len() as u64;
        *slot = q[(index % len) as usize];
        index /= len;
    }
    sig
}

/// Cartesian product of the queues in order, truncated after `limit`
/// signatures. The first signature takes every queue's first member.
pub fn enumerate_queues(queues: &[Vec<usize>], limit: usize) -> Signatures {
    let total = signature_count(queues);
    if queues.iter().any(|q| q.is_empty()) {
        return Signatures {
            signatures: Vec::new(),
            total: 0,
            truncated: false,
        };
    }
    let take = total.min(limit as u64);
    Signatures {
        signatures: (0..take).map(|i| decode(queues, i)).collect(),
        total,
        truncated: total > take,
    }
}

/// Up to `count` distinct signatures drawn uniformly without replacement,
/// returned in enumeration order. All of them when `count >= total`.
pub fn sample_queues<R: Rng>(queues: &[Vec<usize>], count: usize, rng: &mut R) -> Signatures {
    let total = signature_count(queues);
    if total <= count as u64 {
        return enumerate_queues(queues, count);
    }
    let mut picked = std::collections::BTreeSet::new();
    while picked.len() < count {
        picked.insert(rng.gen_range(0..total));
    }
    Signatures {
        signatures: picked.into_iter().map(|i| decode(queues, i)).collect(),
        total,
        truncated: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn product_of_three_queues() {
        // Q1 = {1, 4}, Q3 = {3}, Q7 = {7, 2}
        let queues = vec![vec![1, 4], vec![3], vec![7, 2]];
        let s = enumerate_queues(&queues, 100);
        assert_eq!(
            s.signatures,
            vec![vec![1, 3, 7], vec![1, 3, 2], vec![4, 3, 7], vec![4, 3, 2]]
        );
        assert_eq!(s.total, 4);
        assert!(!s.truncated);
    }

    #[test]
    fn singletons_give_one_signature() {
        let s = enumerate_queues(&[vec![5], vec![9]], 10);
        assert_eq!(s.signatures, vec![vec![5, 9]]);
    }

    #[test]
    fn truncation_flagged() {
        let s = enumerate_queues(&[vec![0, 1], vec![2], vec![3, 4, 5]], 2);
        assert_eq!(s.signatures.len(), 2);
        assert_eq!(s.total, 6);
        assert!(s.truncated);
    }

    #[test]
    fn sampling_is_distinct_and_valid() {
        let queues = vec![vec![0, 1, 2], vec![3, 4, 5, 6], vec![7, 8]];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let s = sample_queues(&queues, 5, &mut rng);
        assert_eq!(s.signatures.len(), 5);
        let unique: std::collections::HashSet<_> = s.signatures.iter().collect();
        assert_eq!(unique.len(), 5);
        for sig in &s.signatures {
            for (m, q) in sig.iter().zip(&queues) {
                assert!(q.contains(m));
            }
        }
    }
}
