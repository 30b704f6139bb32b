//! Bounded FIFO experience store.
//!
//! [`SharedReplayBuffer`] wraps one buffer behind a mutex for the
//! many-producers / one-consumer pattern of parallel rollout workers.

use std::sync::{Arc, Mutex, MutexGuard};

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Continuous(Vec<f64>),
    Discrete(usize),
}

impl Action {
    pub fn continuous(&self) -> &[f64] {
        match self {
            Action::Continuous(v) => v,
            Action::Discrete(_) => &[],
        }
    }

    pub fn index(&self) -> Option<usize> {
        match self {
            Action::Discrete(i) => Some(*i),
            Action::Continuous(_) => None,
        }
    }
}

/// Where a transition came from: the environment stream (worker index or
/// environment copy) and the acting agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Tag {
    pub stream: u32,
    pub agent: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
    pub tag: Tag,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Slot the next push overwrites once full.
    head: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(4096)),
            head: 0,
            inserted: 0,
        }
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

    /// Total pushes over the buffer's lifetime.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
        self.inserted += 1;
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<Transition>> {
        if self.items.len() < batch || self.items.is_empty() {
            return Err(Error::NotReady {
                len: self.items.len(),
                needed: batch,
            });
        }
        let n = self.items.len();
        Ok((0..batch)
            .map(|_| self.items[rng.random_range(0..n)].clone())
            .collect())
    }

    /// Stored transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = self.items.split_at(self.head);
        older.iter().chain(newer.iter())
    }
}

#[derive(Debug, Clone)]
pub struct SharedReplayBuffer(Arc<Mutex<ReplayBuffer>>);

impl SharedReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        SharedReplayBuffer(Arc::new(Mutex::new(ReplayBuffer::new(capacity))))
    }

    pub fn lock(&self) -> MutexGuard<'_, ReplayBuffer> {
        self.0.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn push(&self, t: Transition) {
        self.lock().push(t);
    }

    pub fn push_all(&self, ts: impl IntoIterator<Item = Transition>) {
        let mut buf = self.lock();
        for t in ts {
            buf.push(t);
        }
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inserted(&self) -> u64 {
        self.lock().inserted()
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<Transition>> {
        self.lock().sample(batch, rng)
    }

    /// Detaches the buffer contents.
    pub fn snapshot(&self) -> ReplayBuffer {
        self.lock().clone()
    }
}
