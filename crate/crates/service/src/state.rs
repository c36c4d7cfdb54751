use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Instant;

use tokio::sync::{broadcast, watch};
use wristgest_core::eval::NmsConfig;
use wristgest_core::wire::{StateResponse, WireEvent};

use crate::{Result, ServiceError};

/// Events a subscriber may fall behind before it is dropped.
pub const DEFAULT_CHANNEL_CAPACITY: usize = 256;

/// Shared between the HTTP handlers and the pipeline task.
#[derive(Debug)]
pub struct ServiceState {
    model_id: String,
    detector_mode: String,
    started: Instant,
    events: broadcast::Sender<WireEvent>,
    emitted: AtomicU64,
    epsilon: watch::Sender<f64>,
    closing: AtomicBool,
}

impl ServiceState {
    pub fn new(model_id: impl Into<String>, detector_mode: impl Into<String>, epsilon: f64, capacity: usize) -> Self {
        let (events, _) = broadcast::channel(capacity.max(1));
        let (epsilon, _) = watch::channel(epsilon);
        Self {
            model_id: model_id.into(),
            detector_mode: detector_mode.into(),
            started: Instant::now(),
            events,
            emitted: AtomicU64::new(0),
            epsilon,
            closing: AtomicBool::new(false),
        }
    }

    /// Receives every event published after this call.
    pub fn subscribe(&self) -> broadcast::Receiver<WireEvent> {
        self.events.subscribe()
    }

    pub fn subscribers(&self) -> usize {
        self.events.receiver_count()
    }

    pub fn publish(&self, event: WireEvent) {
        self.emitted.fetch_add(1, Ordering::Relaxed);
        // No subscribers is not an error; the event is simply unobserved.
        let _ = self.events.send(event);
    }

    pub fn epsilon(&self) -> f64 {
        *self.epsilon.borrow()
    }

    pub fn watch_epsilon(&self) -> watch::Receiver<f64> {
        self.epsilon.subscribe()
    }

    pub fn set_epsilon(&self, epsilon: f64) -> Result<()> {
        NmsConfig::default().with_epsilon(epsilon).validate().map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        self.epsilon.send_replace(epsilon);
        Ok(())
    }

    /// Asks the pipeline task to stop after its current chunk.
    pub fn close(&self) {
        self.closing.store(true, Ordering::Relaxed);
    }

    pub fn is_closing(&self) -> bool {
        self.closing.load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> StateResponse {
        StateResponse {
            model_id: self.model_id.clone(),
            epsilon: self.epsilon(),
            uptime_s: self.started.elapsed().as_secs_f64(),
            events_emitted: self.emitted.load(Ordering::Relaxed),
            detector_mode: self.detector_mode.clone(),
        }
    }
}
