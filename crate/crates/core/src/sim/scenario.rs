use super::{home_room, Room, SimError};
use crate::codec::ActivityLabel;
use crate::posture::{PostureLabel, SAMPLE_RATE_HZ};

/// Seconds spent walking between two consecutive activities.
pub const WALK_SECONDS: usize = 4;

/// Posture held during an activity.
pub fn activity_posture(activity: ActivityLabel) -> PostureLabel {
    match activity {
        ActivityLabel::Sleeping => PostureLabel::Lying,
        ActivityLabel::DressUp => PostureLabel::Standing,
        ActivityLabel::Resting | ActivityLabel::Eating | ActivityLabel::Calling => PostureLabel::Sitting,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimelineEntry {
    pub activity: ActivityLabel,
    pub room: Room,
    /// Activity duration in seconds, excluding the walk that precedes it.
    pub duration_s: f64,
}

impl TimelineEntry {
    pub fn new(activity: ActivityLabel, duration_s: f64) -> Self {
        Self {
            activity,
            room: home_room(activity),
            duration_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// White noise per axis, in g.
    pub accel_sigma: f64,
    /// Vertical bounce amplitude while walking, in g.
    pub walk_bounce: f64,
    /// Pixel noise std on the [0, 1] intensity scale.
    pub pixel_sigma: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            accel_sigma: 0.1,
            walk_bounce: 0.25,
            pixel_sigma: 0.08,
        }
    }
}

impl NoiseParams {
    pub fn none() -> Self {
        Self {
            accel_sigma: 0.0,
            walk_bounce: 0.0,
            pixel_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub timeline: Vec<TimelineEntry>,
    pub seed: u64,
    pub noise: NoiseParams,
}

/// What is happening during one stretch of the scenario, in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phase {
    pub start: usize,
    pub len: usize,
    pub posture: PostureLabel,
    /// `None` while walking between rooms.
    pub activity: Option<ActivityLabel>,
    pub room: Option<Room>,
}

fn whole_samples(seconds: f64) -> Option<usize> {
    let s = seconds * SAMPLE_RATE_HZ as f64;
    (s.is_finite() && s >= 0.0 && (s - s.round()).abs() < 1e-6).then(|| s.round() as usize)
}

impl Scenario {
    pub fn new(name: impl Into<String>, timeline: Vec<TimelineEntry>, seed: u64, noise: NoiseParams) -> Self {
        Self {
            name: name.into(),
            timeline,
            seed,
            noise,
        }
    }

    /// Seven activities with six changes, 592.8 s in total: the length of
    /// a 29,640-frame video at 50 fps. Every change produces two postural
    /// transitions (into walking and out of it), twelve in all.
    pub fn paper(seed: u64, noise: NoiseParams) -> Self {
        use ActivityLabel::*;
        let timeline = [
            (Sleeping, 120.0),
            (Eating, 80.0),
            (Resting, 90.0),
            (DressUp, 60.0),
            (Calling, 70.0),
            (Eating, 80.0),
            (Resting, 68.8),
        ]
        .into_iter()
        .map(|(a, d)| TimelineEntry::new(a, d))
        .collect();
        Self::new("paper", timeline, seed, noise)
    }

    pub fn validate(&self, min_duration_s: f64) -> Result<(), SimError> {
        if self.timeline.is_empty() {
            return Err(SimError::Scenario("timeline is empty".into()));
        }
        for (i, e) in self.timeline.iter().enumerate() {
            if e.room != home_room(e.activity) {
                return Err(SimError::Scenario(format!(
                    "entry {i}: {} happens in the {}, not the {}",
                    e.activity,
                    home_room(e.activity),
                    e.room
                )));
            }
            if whole_samples(e.duration_s).is_none() {
                return Err(SimError::Scenario(format!(
                    "entry {i}: duration {} s is not a whole number of samples",
                    e.duration_s
                )));
            }
            if e.duration_s < min_duration_s {
                return Err(SimError::Scenario(format!(
                    "entry {i}: duration {} s is shorter than the validation period {min_duration_s} s",
                    e.duration_s
                )));
            }
        }
        Ok(())
    }

    /// Walks inserted before every activity but the first.
    pub fn phases(&self) -> Vec<Phase> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, e) in self.timeline.iter().enumerate() {
            if i > 0 {
                let len = WALK_SECONDS * SAMPLE_RATE_HZ;
                out.push(Phase {
                    start,
                    len,
                    posture: PostureLabel::Walking,
                    activity: None,
                    room: None,
                });
                start += len;
            }
            let len = whole_samples(e.duration_s).unwrap_or(0);
            out.push(Phase {
                start,
                len,
                posture: activity_posture(e.activity),
                activity: Some(e.activity),
                room: Some(e.room),
            });
            start += len;
        }
        out
    }

    pub fn total_samples(&self) -> usize {
        self.phases().last().map_or(0, |p| p.start + p.len)
    }

    pub fn total_seconds(&self) -> f64 {
        self.total_samples() as f64 / SAMPLE_RATE_HZ as f64
    }

    /// Phase active at sample (or video frame) `k`; both run at 50 Hz.
    pub fn phase_at(&self, k: usize) -> Option<Phase> {
        self.phases().into_iter().find(|p| k >= p.start && k < p.start + p.len)
    }

    /// Ground-truth posture of each whole one-second window.
    pub fn window_postures(&self) -> Vec<PostureLabel> {
        let phases = self.phases();
        let windows = self.total_samples() / SAMPLE_RATE_HZ;
        (0..windows)
            .map(|w| {
                let mid = w * SAMPLE_RATE_HZ + SAMPLE_RATE_HZ / 2;
                phases
                    .iter()
                    .find(|p| mid >= p.start && mid < p.start + p.len)
                    .expect("window lies inside the scenario")
                    .posture
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scenario_shape() {
        let s = Scenario::paper(1, NoiseParams::default());
        s.validate(3.0).unwrap();
        assert_eq!(s.total_samples(), 29_640);
        assert!((s.total_seconds() - 592.8).abs() < 1e-9);
        let postures = s.window_postures();
        assert_eq!(postures.len(), 592);
        let changes = postures.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 12);
        assert_eq!(postures[0], PostureLabel::Lying);
        assert_eq!(postures[120], PostureLabel::Walking);
        assert_eq!(postures[124], PostureLabel::Sitting);
    }

    #[test]
    fn phases_tile_the_timeline() {
        let s = Scenario::paper(1, NoiseParams::none());
        let phases = s.phases();
        assert_eq!(phases.len(), 13);
        for w in phases.windows(2) {
            assert_eq!(w[0].start + w[0].len, w[1].start);
        }
        assert_eq!(s.phase_at(0).unwrap().activity, Some(ActivityLabel::Sleeping));
        assert_eq!(s.phase_at(6000).unwrap().room, None);
        assert!(s.phase_at(29_640).is_none());
    }

    #[test]
    fn validation_errors() {
        let bad_room = Scenario::new(
            "x",
            vec![TimelineEntry {
                activity: ActivityLabel::Eating,
                room: Room::Bedroom,
                duration_s: 10.0,
            }],
            0,
            NoiseParams::none(),
        );
        assert!(bad_room.validate(3.0).is_err());
        let short = Scenario::new("x", vec![TimelineEntry::new(ActivityLabel::Eating, 2.0)], 0, NoiseParams::none());
        assert!(short.validate(3.0).is_err());
        let ragged = Scenario::new("x", vec![TimelineEntry::new(ActivityLabel::Eating, 10.001)], 0, NoiseParams::none());
        assert!(ragged.validate(3.0).is_err());
        assert!(Scenario::new("x", vec![], 0, NoiseParams::none()).validate(3.0).is_err());
    }
}
