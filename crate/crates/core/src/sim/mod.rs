//! Synthetic scenarios, data generation and the end-to-end simulation.

pub mod accel_gen;
pub mod config;
pub mod io;
pub mod run;
pub mod scenario;
pub mod video_gen;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::channel::ChannelError;
use crate::codec::{ActivityLabel, CodecError};
use crate::controller::ControllerError;
use crate::posture::PostureError;
use crate::weights::FormatError;

pub use accel_gen::{gen_accel_trace, posture_features, AccelTrace};
pub use config::SimConfig;
pub use run::{run_simulation, Models, SimReport};
pub use scenario::{NoiseParams, Scenario, TimelineEntry};
pub use video_gen::{codec_dataset, ScenarioVideo};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("codec: {0}")]
    Codec(#[from] CodecError),
    #[error("posture: {0}")]
    Posture(#[from] PostureError),
    #[error("controller: {0}")]
    Controller(#[from] ControllerError),
    #[error("channel: {0}")]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(into = "&'static str")]
pub enum Room {
    Bedroom = 0,
    LivingRoom = 1,
    Kitchen = 2,
}

impl From<Room> for &'static str {
    fn from(r: Room) -> Self {
        r.name()
    }
}
impl Room {
    pub const ALL: [Room; 3] = [Room::Bedroom, Room::LivingRoom, Room::Kitchen];

    pub fn name(self) -> &'static str {
        match self {
            Room::Bedroom => "bedroom",
            Room::LivingRoom => "living_room",
            Room::Kitchen => "kitchen",
        }
    }
}

impl fmt::Display for Room {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Room {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Room::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown room '{s}'"))
    }
}

/// Where each activity takes place.
pub fn home_room(activity: ActivityLabel) -> Room {
    match activity {
        ActivityLabel::Sleeping | ActivityLabel::DressUp => Room::Bedroom,
        ActivityLabel::Resting | ActivityLabel::Calling => Room::LivingRoom,
        ActivityLabel::Eating => Room::Kitchen,
    }
}
