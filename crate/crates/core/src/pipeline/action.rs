//! Gesture-to-control mappings for the two demo applications.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::gesture::GestureClass;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    ZoomIn,
    ZoomOut,
    RotateLeft,
    RotateRight,
    DefaultView,
    ScrollUp,
    ScrollDown,
    GoBack,
    Exit,
    Reserved,
}

impl Action {
    pub const ALL: [Action; 10] = [
        Action::ZoomIn,
        Action::ZoomOut,
        Action::RotateLeft,
        Action::RotateRight,
        Action::DefaultView,
        Action::ScrollUp,
        Action::ScrollDown,
        Action::GoBack,
        Action::Exit,
        Action::Reserved,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::ZoomIn => "zoom_in",
            Action::ZoomOut => "zoom_out",
            Action::RotateLeft => "rotate_left",
            Action::RotateRight => "rotate_right",
            Action::DefaultView => "default_view",
            Action::ScrollUp => "scroll_up",
            Action::ScrollDown => "scroll_down",
            Action::GoBack => "go_back",
            Action::Exit => "exit",
            Action::Reserved => "reserved",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppContext {
    #[default]
    ObjectViewer,
    WebBrowser,
}

impl AppContext {
    pub fn as_str(self) -> &'static str {
        match self {
            AppContext::ObjectViewer => "object_viewer",
            AppContext::WebBrowser => "web_browser",
        }
    }
}

impl fmt::Display for AppContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for AppContext {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "object_viewer" => Ok(AppContext::ObjectViewer),
            "web_browser" => Ok(AppContext::WebBrowser),
            other => Err(Error::InvalidConfig(format!("unknown application context '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMapping {
    pub context: AppContext,
}

impl ActionMapping {
    pub fn new(context: AppContext) -> Self {
        Self { context }
    }

    pub fn map(&self, gesture: GestureClass) -> Action {
        use GestureClass::*;
        match (self.context, gesture) {
            (AppContext::ObjectViewer, Pinch) => Action::ZoomIn,
            (AppContext::ObjectViewer, RubUp) => Action::RotateRight,
            (AppContext::ObjectViewer, RubDown) => Action::RotateLeft,
            (AppContext::ObjectViewer, Flick) => Action::ZoomOut,
            (AppContext::ObjectViewer, OpenPalm) => Action::DefaultView,
            (AppContext::WebBrowser, Pinch) => Action::Reserved,
            (AppContext::WebBrowser, RubUp) => Action::ScrollUp,
            (AppContext::WebBrowser, RubDown) => Action::ScrollDown,
            (AppContext::WebBrowser, Flick) => Action::GoBack,
            (AppContext::WebBrowser, OpenPalm) => Action::Exit,
        }
    }
}

pub fn map_action(gesture: GestureClass, mapping: &ActionMapping) -> Action {
    mapping.map(gesture)
}
