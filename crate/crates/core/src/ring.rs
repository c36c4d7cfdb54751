//! Fixed-capacity circular sample store feeding the always-on detector.

use std::sync::{Arc, Mutex};

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct RingBuffer {
    data: Vec<f64>,
    /// Total number of samples ever written; the next write lands at
    /// `write_head % capacity`.
    write_head: u64,
    sample_rate_hz: u32,
}

impl RingBuffer {
    pub fn new(capacity_seconds: f64, sample_rate_hz: u32) -> Self {
        let capacity = (capacity_seconds * sample_rate_hz as f64).round() as usize;
        Self::with_capacity(capacity.max(1), sample_rate_hz)
    }

    pub fn with_capacity(capacity: usize, sample_rate_hz: u32) -> Self {
        Self { data: vec![0.0; capacity], write_head: 0, sample_rate_hz }
    }

    pub fn capacity(&self) -> usize {
        self.data.len()
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn write_head(&self) -> u64 {
        self.write_head
    }

    /// Number of valid samples currently held.
    pub fn len(&self) -> usize {
        (self.write_head as usize).min(self.capacity())
    }

    pub fn is_empty(&self) -> bool {
        self.write_head == 0
    }

    /// Stream time of the newest sample boundary, in seconds.
    pub fn stream_time(&self) -> f64 {
        self.write_head as f64 / self.sample_rate_hz as f64
    }

    pub fn push(&mut self, chunk: &[f64]) -> Result<()> {
        let cap = self.capacity();
        if chunk.len() > cap {
            return Err(Error::ChunkTooLarge { len: chunk.len(), capacity: cap });
        }
        let start = (self.write_head % cap as u64) as usize;
        let first = chunk.len().min(cap - start);
        self.data[start..start + first].copy_from_slice(&chunk[..first]);
        self.data[..chunk.len() - first].copy_from_slice(&chunk[first..]);
        self.write_head += chunk.len() as u64;
        Ok(())
    }

    /// Copy of the most recent `min(n, len())` samples, oldest first.
    pub fn snapshot(&self, n: usize) -> Vec<f64> {
        let n = n.min(self.len());
        let cap = self.capacity();
        let end = (self.write_head % cap as u64) as usize;
        let mut out = Vec::with_capacity(n);
        if n <= end {
            out.extend_from_slice(&self.data[end - n..end]);
        } else {
            out.extend_from_slice(&self.data[cap - (n - end)..]);
            out.extend_from_slice(&self.data[..end]);
        }
        out
    }
}

/// One writer, many snapshot readers; snapshots are value copies taken
/// under a short lock.
#[derive(Debug, Clone)]
pub struct SharedRingBuffer {
    inner: Arc<Mutex<RingBuffer>>,
}

impl SharedRingBuffer {
    pub fn new(ring: RingBuffer) -> Self {
        Self { inner: Arc::new(Mutex::new(ring)) }
    }

    pub fn push(&self, chunk: &[f64]) -> Result<()> {
        self.inner.lock().expect("ring lock poisoned").push(chunk)
    }

    pub fn snapshot(&self, n: usize) -> Vec<f64> {
        self.inner.lock().expect("ring lock poisoned").snapshot(n)
    }

    /// Full copy of the ring state, for handing to a detector.
    pub fn clone_ring(&self) -> RingBuffer {
        self.inner.lock().expect("ring lock poisoned").clone()
    }
}
