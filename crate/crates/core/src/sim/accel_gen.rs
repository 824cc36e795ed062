//! Synthetic wearable accelerometer.

use std::f64::consts::TAU;

use super::scenario::{NoiseParams, Scenario};
use crate::posture::{
    gravity_feature, lowpass_gravity, make_windows, sample_time, AccelSample, PostureError, PostureLabel,
    SAMPLE_RATE_HZ,
};
use crate::rng::{derive_seed, seeded, Gaussian};

/// Step frequency while walking.
const WALK_HZ: f64 = 2.0;

/// Cosine between the sensor's gravity reading and the upright axis.
pub fn posture_cosine(p: PostureLabel) -> f64 {
    match p {
        PostureLabel::Lying => 0.05,
        PostureLabel::Sitting => 0.60,
        PostureLabel::Standing => 0.95,
        PostureLabel::Walking => 0.85,
    }
}

/// Unit gravity vector with the posture's cosine to `[0, 0, 1]`.
pub fn posture_gravity(p: PostureLabel) -> [f64; 3] {
    let c = posture_cosine(p);
    [(1.0 - c * c).sqrt(), 0.0, c]
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelTrace {
    pub samples: Vec<AccelSample>,
    /// Ground truth per whole one-second window.
    pub window_postures: Vec<PostureLabel>,
}

fn sample(p: PostureLabel, k: usize, noise: &NoiseParams, g: &mut Gaussian) -> AccelSample {
    let t = sample_time(k);
    let mut a = posture_gravity(p);
    if p == PostureLabel::Walking {
        a[2] += noise.walk_bounce * (TAU * WALK_HZ * t).sin();
    }
    if noise.accel_sigma > 0.0 {
        for v in &mut a {
            *v += noise.accel_sigma * g.sample();
        }
    }
    AccelSample::new(t, a)
}

/// 50 Hz trace following the scenario's posture timeline.
pub fn gen_accel_trace(scenario: &Scenario) -> AccelTrace {
    let mut g = Gaussian::new(seeded(derive_seed(scenario.seed, &[0xacce1]), 0));
    let mut samples = Vec::with_capacity(scenario.total_samples());
    for phase in scenario.phases() {
        for k in phase.start..phase.start + phase.len {
            samples.push(sample(phase.posture, k, &scenario.noise, &mut g));
        }
    }
    AccelTrace {
        samples,
        window_postures: scenario.window_postures(),
    }
}

/// `seconds` of a single held posture.
pub fn posture_trace(p: PostureLabel, seconds: usize, noise: &NoiseParams, seed: u64) -> Vec<AccelSample> {
    let mut g = Gaussian::new(seeded(derive_seed(seed, &[p.code() as u64]), 0));
    (0..seconds * SAMPLE_RATE_HZ).map(|k| sample(p, k, noise, &mut g)).collect()
}

/// Labelled orientation features for forest training: `seconds` windows of
/// each posture, filtered the same way the receiver does.
pub fn posture_features(
    seconds: usize,
    noise: &NoiseParams,
    seed: u64,
) -> Result<Vec<(f64, PostureLabel)>, PostureError> {
    let mut out = Vec::with_capacity(4 * seconds);
    for p in PostureLabel::ALL {
        let filtered = lowpass_gravity(&posture_trace(p, seconds, noise, seed));
        for w in make_windows(&filtered) {
            out.push((gravity_feature(&w)?.u, p));
        }
    }
    Ok(out)
}
