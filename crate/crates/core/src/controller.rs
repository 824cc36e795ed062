//! Server-side transmission controller: debounces posture transitions and
//! issues positive ACKs that gate camera uploads.

use std::fmt;

use crate::overhead::OverheadLedger;
use crate::posture::PostureLabel;
use crate::sim::Room;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ControllerError {
    #[error("window index {got} does not follow {previous}")]
    NonConsecutive { previous: usize, got: usize },
    #[error("camera '{0}' is not deployed")]
    UnknownCamera(Room),
    #[error("invalid policy: {0}")]
    Policy(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Targets {
    Broadcast,
    Subset(Vec<Room>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AckPolicy {
    /// Consecutive windows a new posture must be seen in, the change window
    /// included.
    pub validation_windows: usize,
    pub targets: Targets,
    pub segments_per_ack: usize,
}

impl Default for AckPolicy {
    fn default() -> Self {
        Self {
            validation_windows: 3,
            targets: Targets::Broadcast,
            segments_per_ack: 1,
        }
    }
}

impl AckPolicy {
    pub fn validate(&self) -> Result<(), ControllerError> {
        if self.validation_windows == 0 {
            return Err(ControllerError::Policy("validation_windows must be >= 1".into()));
        }
        if self.segments_per_ack == 0 {
            return Err(ControllerError::Policy("segments_per_ack must be >= 1".into()));
        }
        if matches!(&self.targets, Targets::Subset(s) if s.is_empty()) {
            return Err(ControllerError::Policy("target subset is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Nothing observed yet.
    Start,
    Stable(PostureLabel),
    Pending {
        stable: PostureLabel,
        candidate: PostureLabel,
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControllerState {
    pub mode: Mode,
    pub last_window: Option<usize>,
    pub last_event: Option<usize>,
}

impl ControllerState {
    pub fn new() -> Self {
        Self {
            mode: Mode::Start,
            last_window: None,
            last_event: None,
        }
    }
}

impl Default for ControllerState {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    PositiveAck,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlEvent {
    /// Window index (seconds) at which the transition was validated.
    pub t: usize,
    pub kind: EventKind,
    pub from: PostureLabel,
    pub to: PostureLabel,
    pub targets: Targets,
}

/// One state-machine transition. Emits a [`ControlEvent`] exactly when a
/// new posture completes its validation period.
pub fn step(
    state: ControllerState,
    p: PostureLabel,
    window_index: usize,
    policy: &AckPolicy,
) -> Result<(ControllerState, Option<ControlEvent>), ControllerError> {
    if let Some(prev) = state.last_window {
        if prev.checked_add(1) != Some(window_index) {
            return Err(ControllerError::NonConsecutive {
                previous: prev,
                got: window_index,
            });
        }
    }
    let vw = policy.validation_windows.max(1);
    let pending_or_ack = |stable: PostureLabel, candidate: PostureLabel, count: usize| {
        if count >= vw {
            let event = ControlEvent {
                t: window_index,
                kind: EventKind::PositiveAck,
                from: stable,
                to: candidate,
                targets: policy.targets.clone(),
            };
            (Mode::Stable(candidate), Some(event))
        } else {
            (
                Mode::Pending {
                    stable,
                    candidate,
                    count,
                },
                None,
            )
        }
    };
    let (mode, event) = match state.mode {
        Mode::Start => (Mode::Stable(p), None),
        Mode::Stable(s) if s == p => (Mode::Stable(s), None),
        Mode::Stable(s) => pending_or_ack(s, p, 1),
        Mode::Pending {
            stable,
            candidate,
            count,
        } => {
            if p == candidate {
                pending_or_ack(stable, candidate, count + 1)
            } else if p == stable {
                (Mode::Stable(stable), None)
            } else {
                pending_or_ack(stable, p, 1)
            }
        }
    };
    let next = ControllerState {
        mode,
        last_window: Some(window_index),
        last_event: if event.is_some() {
            Some(window_index)
        } else {
            state.last_event
        },
    };
    Ok((next, event))
}

/// Folds [`step`] over a sequence whose window indices start at 0.
pub fn fold_events(sequence: &[PostureLabel], policy: &AckPolicy) -> Vec<ControlEvent> {
    let mut state = ControllerState::new();
    let mut events = Vec::new();
    for (i, &p) in sequence.iter().enumerate() {
        let (next, event) = step(state, p, i, policy).expect("indices are consecutive");
        state = next;
        events.extend(event);
    }
    events
}

/// Declarative statement of the validation rule, used to check [`step`]:
/// split the sequence into maximal runs of equal labels; a run of a label
/// other than the last validated posture that lasts at least
/// `validation_windows` produces one event at its
/// `validation_windows`-th window.
pub fn oracle_events(sequence: &[PostureLabel], policy: &AckPolicy) -> Vec<ControlEvent> {
    let vw = policy.validation_windows.max(1);
    let mut events = Vec::new();
    let Some(&first) = sequence.first() else {
        return events;
    };
    let mut stable = first;
    let mut start = 0;
    while start < sequence.len() {
        let label = sequence[start];
        let len = sequence[start..].iter().take_while(|&&p| p == label).count();
        if label != stable && len >= vw {
            events.push(ControlEvent {
                t: start + vw - 1,
                kind: EventKind::PositiveAck,
                from: stable,
                to: label,
                targets: policy.targets.clone(),
            });
            stable = label;
        }
        start += len;
    }
    events
}

/// Stateful wrapper around [`step`] for online use.
#[derive(Debug, Clone)]
pub struct TransmissionController {
    policy: AckPolicy,
    state: ControllerState,
}

impl TransmissionController {
    pub fn new(policy: AckPolicy) -> Result<Self, ControllerError> {
        policy.validate()?;
        Ok(Self {
            policy,
            state: ControllerState::new(),
        })
    }

    pub fn policy(&self) -> &AckPolicy {
        &self.policy
    }

    pub fn state(&self) -> ControllerState {
        self.state
    }

    pub fn observe(
        &mut self,
        p: PostureLabel,
        window_index: usize,
    ) -> Result<Option<ControlEvent>, ControllerError> {
        let (next, event) = step(self.state, p, window_index, &self.policy)?;
        self.state = next;
        Ok(event)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UploadCommand {
    pub camera: Room,
    /// Window index the upload starts from.
    pub start_window: usize,
    pub segments: usize,
}

/// Resolves `event`'s targets against the deployed cameras and issues one
/// upload command per camera. Adds `targets × segments_per_ack` to the
/// ledger's `N_t`.
pub fn dispatch(
    event: &ControlEvent,
    policy: &AckPolicy,
    deployed: &[Room],
    ledger: &mut OverheadLedger,
) -> Result<Vec<UploadCommand>, ControllerError> {
    let cameras: Vec<Room> = match &event.targets {
        Targets::Broadcast => deployed.to_vec(),
        Targets::Subset(subset) => {
            if let Some(&missing) = subset.iter().find(|c| !deployed.contains(c)) {
                return Err(ControllerError::UnknownCamera(missing));
            }
            subset.clone()
        }
    };
    let commands: Vec<UploadCommand> = cameras
        .into_iter()
        .map(|camera| UploadCommand {
            camera,
            start_window: event.t,
            segments: policy.segments_per_ack,
        })
        .collect();
    ledger.record_uploads(commands.iter().map(|c| c.segments as u64).sum());
    ledger.record_ack();
    Ok(commands)
}

/// `ACK t=<window_index> from=<posture> to=<posture> targets=<comma list>`
pub struct EventLogLine<'a> {
    pub event: &'a ControlEvent,
    pub commands: &'a [UploadCommand],
}

impl fmt::Display for EventLogLine<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let targets: Vec<&str> = self.commands.iter().map(|c| c.camera.name()).collect();
        write!(
            f,
            "ACK t={} from={} to={} targets={}",
            self.event.t,
            self.event.from,
            self.event.to,
            targets.join(",")
        )
    }
}
