//! Event store written by `extract` and read by `fit` and `plot-data`.
//!
//! ```text
//! { "schema_version": 1, "kind": "etiquette-events", "trips": 12,
//!   "episodes": [...], "cut_ins": [...] }
//! ```
//!
//! Episodes and cut-ins use the serde layout of the core event types.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use etiquette_core::{CarFollowingEpisode, LaneChangeEvent};

use crate::error::{CliError, CliResult, ResultExt};

pub const EVENTS_SCHEMA_VERSION: u64 = 1;
pub const EVENTS_KIND: &str = "etiquette-events";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStore {
    pub schema_version: u64,
    pub kind: String,
    /// Trips in the source log.
    pub trips: usize,
    pub episodes: Vec<CarFollowingEpisode>,
    pub cut_ins: Vec<LaneChangeEvent>,
}

impl EventStore {
    pub fn new(trips: usize, episodes: Vec<CarFollowingEpisode>, cut_ins: Vec<LaneChangeEvent>) -> Self {
        Self {
            schema_version: EVENTS_SCHEMA_VERSION,
            kind: EVENTS_KIND.into(),
            trips,
            episodes,
            cut_ins,
        }
    }

    pub fn is_event_store(value: &Value) -> bool {
        value.get("kind").and_then(Value::as_str) == Some(EVENTS_KIND)
    }

    pub fn from_value(value: Value) -> CliResult<Self> {
        if !Self::is_event_store(&value) {
            return Err(CliError::data(format!(
                "not an event store: missing \"kind\": \"{EVENTS_KIND}\""
            )));
        }
        let found = value.get("schema_version").and_then(Value::as_u64);
        if found != Some(EVENTS_SCHEMA_VERSION) {
            return Err(CliError::data(format!(
                "unsupported event store schema_version {found:?}; expected {EVENTS_SCHEMA_VERSION}"
            )));
        }
        serde_json::from_value(value).data("malformed event store")
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let value: Value = serde_json::from_str(text).data("event store is not valid JSON")?;
        Self::from_value(value)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let what = || format!("writing '{}'", path.display());
        let mut w = BufWriter::new(File::create(path).internal(what())?);
        serde_json::to_writer(&mut w, self).internal(what())?;
        w.write_all(b"\n").internal(what())?;
        w.flush().internal(what())
    }
}
