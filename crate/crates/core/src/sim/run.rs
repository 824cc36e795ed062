//! The end-to-end loop: accelerometer → raw link → posture → controller →
//! gated camera uploads → semantic link → activity.

use std::fmt::Write as _;

use serde::Serialize;

use super::accel_gen::gen_accel_trace;
use super::config::SimConfig;
use super::scenario::Scenario;
use super::video_gen::ScenarioVideo;
use super::{Room, SimError};
use crate::channel::AwgnLink;
use crate::codec::{classify, ActivityLabel, CodecModel, SYMBOLS_PER_FRAME};
use crate::controller::{dispatch, EventLogLine, TransmissionController};
use crate::overhead::{report, OverheadLedger, OverheadReport};
use crate::posture::{
    decode_raw, encode_raw, gravity_feature, AccelWindow, GravityFilter, PostureLabel, RandomForest,
    SAMPLE_RATE_HZ,
};
use crate::rng::derive_seed;

/// Windows right after a ground-truth posture change that are left out of
/// the posture accuracy while the 0.3 Hz gravity filter catches up.
pub const SETTLE_WINDOWS: usize = 2;

pub struct Models {
    pub codec: CodecModel,
    pub forest: RandomForest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UploadRecord {
    /// Window index of the ACK that triggered the upload.
    pub ack_t: usize,
    pub camera: Room,
    pub segment: usize,
    /// Activity in the camera's room at the segment, if occupied.
    pub truth: Option<ActivityLabel>,
    pub predicted: ActivityLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableCell {
    pub activity: ActivityLabel,
    pub room: Room,
    pub detections: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoomAccuracy {
    pub room: Room,
    pub detections: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub scenario: String,
    pub duration_s: f64,
    pub windows: usize,
    /// Posture changes in the ground truth.
    pub ground_truth_transitions: usize,
    pub validated_transitions: usize,
    pub posture_windows_scored: usize,
    pub posture_accuracy: Option<f64>,
    pub ledger: OverheadLedger,
    pub overhead: OverheadReport,
    /// Uploads from the occupied room, by true activity and room.
    pub table: Vec<TableCell>,
    pub rooms: Vec<RoomAccuracy>,
    /// Uploads from rooms nobody was in.
    pub unoccupied_uploads: usize,
    /// Commanded segments that fell past the end of the video.
    pub uploads_past_end: usize,
    pub clamped_values: usize,
    pub uploads: Vec<UploadRecord>,
    pub events: Vec<String>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn event_log(&self) -> String {
        self.events.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn cell(&self, activity: ActivityLabel, room: Room) -> &TableCell {
        self.table
            .iter()
            .find(|c| c.activity == activity && c.room == room)
            .expect("table covers every activity and room")
    }

    /// Activity × room grid of `detections(accuracy%)`.
    pub fn table_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<10}", "activity");
        for room in Room::ALL {
            let _ = write!(out, " {:>14}", room.name());
        }
        out.push('\n');
        for activity in ActivityLabel::ALL {
            let _ = write!(out, "{:<10}", activity.name());
            for room in Room::ALL {
                let c = self.cell(activity, room);
                let text = if c.detections == 0 {
                    "0".to_string()
                } else {
                    format!("{}({:.0}%)", c.detections, 100.0 * c.correct as f64 / c.detections as f64)
                };
                let _ = write!(out, " {text:>14}");
            }
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |a| format!("{:.2}%", 100.0 * a));
        let _ = writeln!(
            out,
            "scenario {} ({:.1} s, {} windows): {} ground-truth transitions, {} validated",
            self.scenario, self.duration_s, self.windows, self.ground_truth_transitions, self.validated_transitions
        );
        let _ = writeln!(
            out,
            "posture accuracy {} over {} windows",
            pct(self.posture_accuracy),
            self.posture_windows_scored
        );
        for r in &self.rooms {
            let _ = writeln!(out, "{}: {} detections, accuracy {}", r.room, r.detections, pct(r.accuracy));
        }
        let _ = writeln!(out, "unoccupied uploads {}", self.unoccupied_uploads);
        out.push_str(&self.table_text());
        out.push_str(&self.overhead.to_text());
        out
    }
}

/// First segment index whose start frame is at or after `frame`.
fn first_segment_at(frame: usize, stride: usize) -> usize {
    frame.div_ceil(stride)
}

fn settling(truth: &[PostureLabel], w: usize) -> bool {
    (w.saturating_sub(SETTLE_WINDOWS - 1)..=w).any(|k| k > 0 && truth[k] != truth[k - 1])
}

pub fn run_simulation(config: &SimConfig, scenario: &Scenario, models: &Models) -> Result<SimReport, SimError> {
    scenario.validate(config.policy.validation_windows as f64)?;
    let trace = gen_accel_trace(scenario);
    let video = ScenarioVideo::new(scenario);
    let mut controller = TransmissionController::new(config.policy.clone())?;
    let mut ledger = OverheadLedger {
        l: SYMBOLS_PER_FRAME as u64,
        n_f: video.segment_count(config.stride) as u64,
        n_b: config.video_bits,
        ..OverheadLedger::default()
    };
    let mut accel_link = AwgnLink::new(config.snr_accel_db, derive_seed(config.channel_seed, &[1]));
    let mut video_link = AwgnLink::new(config.snr_video_db, derive_seed(config.channel_seed, &[2]));
    let mut filter = GravityFilter::default();

    let raw = encode_raw(&trace.samples);
    let truth = &trace.window_postures;
    let (mut scored, mut correct_windows) = (0usize, 0usize);
    let mut uploads = Vec::new();
    let mut events = Vec::new();
    let mut past_end = 0;

    for (w, frame) in raw.frames.iter().enumerate() {
        ledger.record_raw_symbols(frame.len() as u64);
        let received = accel_link.send(frame)?;
        let columns = decode_raw(std::slice::from_ref(&received))?
            .into_iter()
            .map(|s| filter.push(s).a)
            .collect();
        let feature = gravity_feature(&AccelWindow { index: w, columns })?;
        let posture = models.forest.classify(feature.u);
        if !settling(truth, w) {
            scored += 1;
            correct_windows += usize::from(posture == truth[w]);
        }
        let Some(event) = controller.observe(posture, w)? else {
            continue;
        };
        let commands = dispatch(&event, controller.policy(), &Room::ALL, &mut ledger)?;
        events.push(EventLogLine { event: &event, commands: &commands }.to_string());
        let first = first_segment_at((event.t + 1) * SAMPLE_RATE_HZ, config.stride);
        for cmd in &commands {
            for j in first..first + cmd.segments {
                let Some(segment) = video.segment(cmd.camera, j, config.stride) else {
                    past_end += 1;
                    continue;
                };
                let tx = models.codec.encode(&segment)?;
                let rx = video_link.send(&tx)?;
                uploads.push(UploadRecord {
                    ack_t: event.t,
                    camera: cmd.camera,
                    segment: j,
                    truth: video.segment_truth(cmd.camera, j, config.stride),
                    predicted: classify(&models.codec.decode(&rx)?.logits),
                });
            }
        }
    }

    let mut table = Vec::new();
    for activity in ActivityLabel::ALL {
        for room in Room::ALL {
            let hits: Vec<_> = uploads
                .iter()
                .filter(|u| u.camera == room && u.truth == Some(activity))
                .collect();
            table.push(TableCell {
                activity,
                room,
                detections: hits.len(),
                correct: hits.iter().filter(|u| u.predicted == activity).count(),
            });
        }
    }
    let rooms = Room::ALL
        .into_iter()
        .map(|room| {
            let (detections, correct) = table
                .iter()
                .filter(|c| c.room == room)
                .fold((0, 0), |(d, c), cell| (d + cell.detections, c + cell.correct));
            RoomAccuracy {
                room,
                detections,
                correct,
                accuracy: (detections > 0).then(|| correct as f64 / detections as f64),
            }
        })
        .collect();

    Ok(SimReport {
        scenario: scenario.name.clone(),
        duration_s: scenario.total_seconds(),
        windows: raw.frames.len(),
        ground_truth_transitions: truth.windows(2).filter(|p| p[0] != p[1]).count(),
        validated_transitions: ledger.acks as usize,
        posture_windows_scored: scored,
        posture_accuracy: (scored > 0).then(|| correct_windows as f64 / scored as f64),
        overhead: report(&scenario.name, &ledger, &config.snr_grid),
        ledger,
        table,
        rooms,
        unoccupied_uploads: uploads.iter().filter(|u| u.truth.is_none()).count(),
        uploads_past_end: past_end,
        clamped_values: raw.clamped,
        uploads,
        events,
    })
}
