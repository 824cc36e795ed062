//! Second-order Butterworth low-pass used to pull the gravity component out
//! of the raw acceleration.

use std::f64::consts::{PI, SQRT_2};

use super::{AccelSample, SAMPLE_RATE_HZ};

pub const GRAVITY_CUTOFF_HZ: f64 = 0.3;

/// Direct-form-II-transposed biquad with `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
    z: [f64; 2],
}

impl Biquad {
    /// Bilinear-transform Butterworth low-pass with the cutoff prewarped so
    /// the -3 dB point lands exactly at `cutoff_hz`.
    pub fn butterworth_lowpass(cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        let k = (PI * cutoff_hz / sample_rate_hz).tan();
        let k2 = k * k;
        let norm = 1.0 / (1.0 + SQRT_2 * k + k2);
        let b0 = k2 * norm;
        Self {
            b: [b0, 2.0 * b0, b0],
            a: [2.0 * (k2 - 1.0) * norm, (1.0 - SQRT_2 * k + k2) * norm],
            z: [0.0; 2],
        }
    }

    /// Puts the filter in the steady state it would reach after an infinite
    /// run of `x0`, so a constant input passes through with no transient.
    pub fn warm_start(&mut self, x0: f64) {
        let dc = (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1]);
        let y0 = dc * x0;
        self.z[0] = y0 - self.b[0] * x0;
        self.z[1] = self.b[2] * x0 - self.a[1] * y0;
    }

    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.z[0];
        self.z[0] = self.b[1] * x - self.a[0] * y + self.z[1];
        self.z[1] = self.b[2] * x - self.a[1] * y;
        y
    }

    /// |H(e^{jω})| evaluated from the coefficients.
    pub fn magnitude_at(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        use num_complex::Complex64;
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = self.b[0] + self.b[1] * z1 + self.b[2] * z2;
        let den = 1.0 + self.a[0] * z1 + self.a[1] * z2;
        (num / den).norm()
    }
}

/// Closed-form magnitude of the bilinear Butterworth low-pass of order 2:
/// `1 / sqrt(1 + (tan(πf/fs) / tan(πfc/fs))^4)`.
pub fn butterworth_magnitude(freq_hz: f64, cutoff_hz: f64, sample_rate_hz: f64) -> f64 {
    let r = (PI * freq_hz / sample_rate_hz).tan() / (PI * cutoff_hz / sample_rate_hz).tan();
    1.0 / (1.0 + r.powi(4)).sqrt()
}

/// Streaming three-axis gravity filter. The first sample warm-starts every
/// axis.
#[derive(Debug, Clone)]
pub struct GravityFilter {
    prototype: Biquad,
    axes: Option<[Biquad; 3]>,
}

impl GravityFilter {
    pub fn new(cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        Self {
            prototype: Biquad::butterworth_lowpass(cutoff_hz, sample_rate_hz),
            axes: None,
        }
    }

    pub fn push(&mut self, sample: AccelSample) -> AccelSample {
        let proto = self.prototype;
        let axes = self.axes.get_or_insert_with(|| {
            [0, 1, 2].map(|c| {
                let mut f = proto;
                f.warm_start(sample.a[c]);
                f
            })
        });
        let mut a = [0.0; 3];
        for (c, f) in axes.iter_mut().enumerate() {
            a[c] = f.process(sample.a[c]);
        }
        AccelSample::new(sample.t, a)
    }
}

impl Default for GravityFilter {
    fn default() -> Self {
        Self::new(GRAVITY_CUTOFF_HZ, SAMPLE_RATE_HZ as f64)
    }
}

/// Filters a whole trace with the default 0.3 Hz / 50 Hz filter.
pub fn lowpass_gravity(samples: &[AccelSample]) -> Vec<AccelSample> {
    let mut f = GravityFilter::default();
    samples.iter().map(|&s| f.push(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posture::sample_time;

    const FS: f64 = SAMPLE_RATE_HZ as f64;

    fn axis_trace(f: impl Fn(f64) -> f64, n: usize) -> Vec<AccelSample> {
        (0..n)
            .map(|k| {
                let t = sample_time(k);
                AccelSample::new(t, [f(t), -f(t), 0.5])
            })
            .collect()
    }

    #[test]
    fn constant_passes_from_first_sample() {
        let out = lowpass_gravity(&axis_trace(|_| 0.6, 500));
        for s in &out {
            assert!((s.a[0] - 0.6).abs() < 1e-9);
            assert!((s.a[1] + 0.6).abs() < 1e-9);
            assert!((s.a[2] - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn coefficients_match_closed_form_response() {
        let f = Biquad::butterworth_lowpass(GRAVITY_CUTOFF_HZ, FS);
        assert!((f.magnitude_at(0.0, FS) - 1.0).abs() < 1e-9);
        for freq in [0.05, 0.3, 1.0, 5.0, 20.0] {
            let a = f.magnitude_at(freq, FS);
            let b = butterworth_magnitude(freq, GRAVITY_CUTOFF_HZ, FS);
            assert!((a - b).abs() < 1e-9 * b.max(1e-6), "{freq}: {a} vs {b}");
        }
        let cut = f.magnitude_at(GRAVITY_CUTOFF_HZ, FS);
        assert!((cut - SQRT_2.recip()).abs() < 1e-12);
    }

    #[test]
    fn five_hz_attenuated_by_40_db() {
        let freq = 5.0;
        let n = 50 * 60;
        let out = lowpass_gravity(&axis_trace(|t| (2.0 * PI * freq * t).sin(), n));
        // After 20 s of settling, amplitude from the RMS over whole cycles.
        let tail = &out[50 * 20..];
        let rms = (tail.iter().map(|s| s.a[0] * s.a[0]).sum::<f64>() / tail.len() as f64).sqrt();
        let peak = rms * SQRT_2;
        let analytic = butterworth_magnitude(freq, GRAVITY_CUTOFF_HZ, FS);
        assert!(analytic < 0.01);
        assert!((peak / analytic - 1.0).abs() < 0.02, "{peak} vs {analytic}");
        assert!(20.0 * peak.log10() <= -40.0);
    }

    #[test]
    fn step_response_settles_without_large_overshoot() {
        let out = lowpass_gravity(&axis_trace(|t| if t < 1.0 { 0.0 } else { 1.0 }, 50 * 10));
        let after = &out[50..];
        let max = after.iter().map(|s| s.a[0]).fold(f64::MIN, f64::max);
        assert!(max <= 1.25, "overshoot {max}");
        // Rising monotonically until the peak.
        let peak_at = after.iter().position(|s| s.a[0] == max).unwrap();
        assert!(after[..=peak_at].windows(2).all(|w| w[1].a[0] >= w[0].a[0]));
        // Within 2% of the target 5 s after the step.
        let settled = &after[50 * 5..];
        assert!(settled.iter().all(|s| (s.a[0] - 1.0).abs() < 0.02));
    }
}
