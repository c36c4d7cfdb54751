use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

pub const NUM_CLASSES: usize = 5;

/// The five finger gestures, in model output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureClass {
    Pinch,
    RubUp,
    RubDown,
    Flick,
    OpenPalm,
}

impl GestureClass {
    pub const ALL: [GestureClass; NUM_CLASSES] =
        [GestureClass::Pinch, GestureClass::RubUp, GestureClass::RubDown, GestureClass::Flick, GestureClass::OpenPalm];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GestureClass::Pinch => "pinch",
            GestureClass::RubUp => "rub_up",
            GestureClass::RubDown => "rub_down",
            GestureClass::Flick => "flick",
            GestureClass::OpenPalm => "open_palm",
        }
    }
}

impl fmt::Display for GestureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for GestureClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        // "pitching"/"pinching" are accepted as spellings of pinch.
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "pinch" | "pinching" | "pitching" => Ok(GestureClass::Pinch),
            "rub_up" | "rubbing_up" => Ok(GestureClass::RubUp),
            "rub_down" | "rubbing_down" => Ok(GestureClass::RubDown),
            "flick" | "flicking" => Ok(GestureClass::Flick),
            "open_palm" | "opening_up" => Ok(GestureClass::OpenPalm),
            _ => Err(Error::UnknownClass(s.to_string())),
        }
    }
}
