//! Fixed-capacity FIFO image memory.

use alloc::vec::Vec;

use crate::{Error, Result};

/// An image held in an album. Adversarial copies carry no identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageToken {
    Benign(u32),
    Adversarial,
}

impl ImageToken {
    pub fn is_adversarial(self) -> bool {
        matches!(self, ImageToken::Adversarial)
    }
}

/// Ring buffer of images. Pushing onto a full album evicts the oldest entry.
/// Keeps a running count of adversarial copies so carrier checks are O(1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Album {
    slots: Vec<ImageToken>,
    capacity: usize,
    head: usize,
    adversarial: usize,
}

impl Album {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::ZeroCapacity);
        }
        Ok(Self {
            slots: Vec::with_capacity(capacity),
            capacity,
            head: 0,
            adversarial: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.slots.len() == self.capacity
    }

    pub fn adversarial_count(&self) -> usize {
        self.adversarial
    }

    pub fn benign_count(&self) -> usize {
        self.slots.len() - self.adversarial
    }

    pub fn carries_adversarial(&self) -> bool {
        self.adversarial > 0
    }

    /// Append `token`; returns the evicted oldest entry when full.
    pub fn push(&mut self, token: ImageToken) -> Option<ImageToken> {
        if token.is_adversarial() {
            self.adversarial += 1;
        }
        if self.slots.len() < self.capacity {
            self.slots.push(token);
            return None;
        }
        let evicted = core::mem::replace(&mut self.slots[self.head], token);
        self.head = (self.head + 1) % self.capacity;
        if evicted.is_adversarial() {
            self.adversarial -= 1;
        }
        Some(evicted)
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &ImageToken> + '_ {
        let (newer, older) = self.slots.split_at(self.head);
        older.iter().chain(newer.iter())
    }

    pub fn oldest(&self) -> Option<ImageToken> {
        self.iter().next().copied()
    }

    /// The `index`-th benign image in FIFO order.
    pub fn nth_benign(&self, index: usize) -> Option<ImageToken> {
        self.iter()
            .copied()
            .filter(|t| !t.is_adversarial())
            .nth(index)
    }
}
