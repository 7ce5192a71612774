use rand::seq::index;
use rand::Rng;

use crate::env::CampaignState;
use crate::error::{Error, Result};

/// One single-debunker stage: `(s, u, r, s')`, with `done` marking the
/// final stage of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: CampaignState,
    pub action: usize,
    pub reward: f64,
    pub next_state: CampaignState,
    pub done: bool,
}

/// Training triple for the future-state predictor. `actions` holds the
/// debunkers fed to the recurrence one step at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct FspSample {
    pub state: CampaignState,
    pub actions: Vec<usize>,
    pub next_state: CampaignState,
}

/// Bounded ring buffer; once full, the oldest entry is overwritten.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    next: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("replay_capacity", "must be at least 1"));
        }
        Ok(Self {
            capacity,
            items: Vec::new(),
            next: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// `batch` distinct entries drawn uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, batch: usize) -> Result<Vec<&T>> {
        if batch > self.items.len() {
            return Err(Error::InsufficientSamples {
                needed: batch,
                available: self.items.len(),
            });
        }
        Ok(index::sample(rng, self.items.len(), batch)
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ring_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(3).unwrap();
        for i in 0..5 {
            buf.push(i);
        }
        assert_eq!(buf.len(), 3);
        let mut items: Vec<_> = buf.iter().copied().collect();
        items.sort();
        assert_eq!(items, vec![2, 3, 4]);
    }

    #[test]
    fn zero_capacity_and_short_buffers_are_errors() {
        assert!(ReplayBuffer::<u8>::new(0).is_err());
        let mut buf = ReplayBuffer::new(4).unwrap();
        buf.push(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            buf.sample(&mut rng, 2),
            Err(Error::InsufficientSamples {
                needed: 2,
                available: 1
            })
        ));
    }

    #[test]
    fn minibatch_has_no_repeats() {
        let mut buf = ReplayBuffer::new(50).unwrap();
        for i in 0..50 {
            buf.push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let mut s: Vec<i32> = buf
                .sample(&mut rng, 32)
                .unwrap()
                .into_iter()
                .copied()
                .collect();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), 32);
        }
    }
}
