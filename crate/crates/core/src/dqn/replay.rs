use super::Experience;
use alloc::collections::VecDeque;
use alloc::vec::Vec;
use rand::Rng;

/// Fixed-capacity FIFO of experiences.
#[derive(Clone, Debug)]
pub struct ReplayMemory {
    capacity: usize,
    buffer: VecDeque<Experience>,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        ReplayMemory {
            capacity: capacity.max(1),
            buffer: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn push(&mut self, e: Experience) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(e);
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.buffer.iter()
    }

    /// Up to `count` distinct experiences chosen uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<&Experience> {
        let amount = count.min(self.buffer.len());
        rand::seq::index::sample(rng, self.buffer.len(), amount)
            .into_iter()
            .map(|i| &self.buffer[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use alloc::vec;

    fn exp(tag: f64) -> Experience {
        Experience {
            state: vec![tag],
            action: 0,
            reward: tag,
            next_state: vec![tag],
            terminal: false,
        }
    }

    #[test]
    fn evicts_oldest_first() {
        let n = 10;
        let k = 4;
        let mut mem = ReplayMemory::new(n);
        for i in 0..n + k {
            mem.push(exp(i as f64));
        }
        assert_eq!(mem.len(), n);
        let rewards: Vec<f64> = mem.iter().map(|e| e.reward).collect();
        let expected: Vec<f64> = (k..n + k).map(|i| i as f64).collect();
        assert_eq!(rewards, expected);
    }

    #[test]
    fn samples_are_distinct() {
        let mut mem = ReplayMemory::new(50);
        for i in 0..50 {
            mem.push(exp(i as f64));
        }
        let mut rng = substream(3, Stream::Replay, 0);
        let batch = mem.sample(32, &mut rng);
        let mut seen: Vec<f64> = batch.iter().map(|e| e.reward).collect();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        assert_eq!(seen.len(), 32);
        assert_eq!(mem.sample(100, &mut rng).len(), 50);
    }
}
