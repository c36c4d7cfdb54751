//! JSON shapes shared by the service, its client and the CLI.

use serde::{Deserialize, Serialize};

use crate::gesture::{GestureClass, NUM_CLASSES};
use crate::pipeline::{Action, ActionMapping, GestureEvent};

/// One server-sent event payload. Field order is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEvent {
    pub seq: u64,
    pub t: f64,
    pub gesture: GestureClass,
    pub p: f64,
    pub probs: [f64; NUM_CLASSES],
    pub action: Action,
}

impl WireEvent {
    pub fn from_event(e: &GestureEvent, mapping: &ActionMapping) -> Self {
        Self { seq: e.seq, t: e.t, gesture: e.gesture, p: e.p, probs: e.probs, action: mapping.map(e.gesture) }
    }

    /// The `data:` line plus the blank line that ends an SSE message.
    pub fn to_sse(&self) -> String {
        format!("data: {}\n\n", serde_json::to_string(self).expect("event serialises"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateResponse {
    pub model_id: String,
    pub epsilon: f64,
    pub uptime_s: f64,
    pub events_emitted: u64,
    pub detector_mode: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}
