use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::rng::{rng_for, tag};

/// A permutation of `0..n` derived from `(seed, epoch)`, cut into chunks of
/// `batch_size`; the final partial chunk is kept.
pub fn batches(n: usize, batch_size: usize, epoch: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch size must be positive");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, &[tag::BATCH, epoch as u64]));
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_small_set() {
        let b = batches(4, 2, 0, 1);
        assert_eq!(b.len(), 2);
        let mut all: Vec<usize> = b.concat();
        all.sort_unstable();
        assert_eq!(all, [0, 1, 2, 3]);
    }

    #[test]
    fn keeps_partial_batch_and_is_deterministic() {
        let a = batches(10, 4, 3, 9);
        assert_eq!(a.iter().map(Vec::len).collect::<Vec<_>>(), [4, 4, 2]);
        assert_eq!(a, batches(10, 4, 3, 9));
    }

    #[test]
    fn epochs_give_different_orders() {
        let orders: Vec<Vec<usize>> = (0..10).map(|e| batches(16, 16, e, 7).concat()).collect();
        for i in 0..orders.len() {
            for j in i + 1..orders.len() {
                assert_ne!(orders[i], orders[j]);
            }
        }
    }
}
