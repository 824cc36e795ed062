//! Symbol-level AWGN channel.
//!
//! The noise variance follows `SNR = 10·log10(P / σ²)` with `P` measured on
//! the frame being sent, so normalized feature frames and unnormalized raw
//! sensor frames go through the same code path. Each quadrature gets
//! `σ²/2`, giving total complex noise power `σ²`.

use num_complex::Complex64;

use crate::rng::{derive_seed, seeded, Gaussian};
use crate::symbols::{mean_power, SymbolFrame};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("cannot transmit an empty frame")]
    EmptyFrame,
    #[error("frame has zero average power; noise variance undefined at finite SNR")]
    ZeroPower,
    #[error("invalid SNR {0} dB")]
    InvalidSnr(f64),
    #[error("frame lengths differ: {clean} vs {noisy}")]
    LengthMismatch { clean: usize, noisy: usize },
}

/// `snr_db = +∞` is the noiseless sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub rng_seed: u64,
}

impl ChannelConfig {
    pub fn new(snr_db: f64, rng_seed: u64) -> Self {
        Self { snr_db, rng_seed }
    }

    pub fn noiseless() -> Self {
        Self::new(f64::INFINITY, 0)
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    /// Noise variance for a frame of average power `p`.
    pub fn noise_variance(&self, p: f64) -> f64 {
        p / 10f64.powf(self.snr_db / 10.0)
    }
}

/// Adds complex Gaussian noise to a copy of `frame`.
pub fn transmit(frame: &SymbolFrame, config: &ChannelConfig) -> Result<SymbolFrame, ChannelError> {
    if frame.is_empty() {
        return Err(ChannelError::EmptyFrame);
    }
    if config.snr_db.is_nan() || config.snr_db == f64::NEG_INFINITY {
        return Err(ChannelError::InvalidSnr(config.snr_db));
    }
    if config.is_noiseless() {
        return Ok(frame.clone());
    }
    let p = frame.avg_power();
    if p == 0.0 {
        return Err(ChannelError::ZeroPower);
    }
    let std = (config.noise_variance(p) / 2.0).sqrt();
    let mut g = Gaussian::new(seeded(config.rng_seed, 0));
    let noisy = frame
        .symbols()
        .iter()
        .map(|s| {
            let re = g.sample();
            let im = g.sample();
            s + Complex64::new(std * re, std * im)
        })
        .collect();
    Ok(frame.with_symbols(noisy))
}

/// SNR in dB estimated from a clean frame and its received copy. Returns
/// `+∞` when the two are identical.
pub fn measured_snr(clean: &SymbolFrame, noisy: &SymbolFrame) -> Result<f64, ChannelError> {
    if clean.len() != noisy.len() {
        return Err(ChannelError::LengthMismatch {
            clean: clean.len(),
            noisy: noisy.len(),
        });
    }
    let p_signal = clean.avg_power();
    if p_signal == 0.0 {
        return Err(ChannelError::ZeroPower);
    }
    let diff: Vec<Complex64> = noisy
        .symbols()
        .iter()
        .zip(clean.symbols())
        .map(|(n, c)| n - c)
        .collect();
    let p_noise = mean_power(&diff);
    if p_noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (p_signal / p_noise).log10())
}

/// A link that draws fresh, reproducible noise for every frame it carries.
#[derive(Debug, Clone)]
pub struct AwgnLink {
    snr_db: f64,
    seed: u64,
    sent: u64,
}

impl AwgnLink {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        Self {
            snr_db,
            seed,
            sent: 0,
        }
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn frames_sent(&self) -> u64 {
        self.sent
    }

    pub fn send(&mut self, frame: &SymbolFrame) -> Result<SymbolFrame, ChannelError> {
        let config = ChannelConfig::new(self.snr_db, derive_seed(self.seed, &[self.sent]));
        self.sent += 1;
        transmit(frame, &config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::pack_pairs;

    fn unit_frame(n: usize) -> SymbolFrame {
        // QPSK-like constellation at unit power.
        let a = std::f64::consts::FRAC_1_SQRT_2;
        SymbolFrame::raw(
            (0..n)
                .map(|i| Complex64::new(if i % 2 == 0 { a } else { -a }, if i % 3 == 0 { a } else { -a }))
                .collect(),
        )
    }

    #[test]
    fn noiseless_is_identity() {
        let f = unit_frame(100);
        assert_eq!(transmit(&f, &ChannelConfig::noiseless()).unwrap(), f);
    }

    #[test]
    fn noise_power_matches_snr() {
        let f = unit_frame(1_000_000);
        let out = transmit(&f, &ChannelConfig::new(7.0, 3)).unwrap();
        let diff: Vec<Complex64> = out.symbols().iter().zip(f.symbols()).map(|(a, b)| a - b).collect();
        let measured = mean_power(&diff);
        let expected = 10f64.powf(-0.7);
        assert!((measured / expected - 1.0).abs() < 0.01, "{measured} vs {expected}");
    }

    #[test]
    fn deterministic_and_non_mutating() {
        let f = unit_frame(64);
        let copy = f.clone();
        let a = transmit(&f, &ChannelConfig::new(10.0, 9)).unwrap();
        let b = transmit(&f, &ChannelConfig::new(10.0, 9)).unwrap();
        let c = transmit(&f, &ChannelConfig::new(10.0, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(f, copy);
    }

    #[test]
    fn error_cases() {
        let zero = SymbolFrame::raw(pack_pairs(&[0.0; 8]));
        assert_eq!(
            transmit(&zero, &ChannelConfig::new(7.0, 1)),
            Err(ChannelError::ZeroPower)
        );
        assert_eq!(
            transmit(&SymbolFrame::raw(vec![]), &ChannelConfig::new(7.0, 1)),
            Err(ChannelError::EmptyFrame)
        );
        let f = unit_frame(4);
        assert_eq!(measured_snr(&f, &f), Ok(f64::INFINITY));
        assert_eq!(measured_snr(&zero, &zero), Err(ChannelError::ZeroPower));
        assert!(measured_snr(&f, &unit_frame(5)).is_err());
        assert!(transmit(&f, &ChannelConfig::new(f64::NAN, 1)).is_err());
    }

    #[test]
    fn link_draws_fresh_noise_per_frame() {
        let f = unit_frame(16);
        let mut link = AwgnLink::new(10.0, 4);
        let a = link.send(&f).unwrap();
        let b = link.send(&f).unwrap();
        assert_ne!(a, b);
        assert_eq!(link.frames_sent(), 2);
        let mut again = AwgnLink::new(10.0, 4);
        assert_eq!(again.send(&f).unwrap(), a);
    }
}
