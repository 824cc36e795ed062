use num_complex::Complex64;

/// A block of complex channel symbols as it goes on air.
///
/// `gain` is the factor the transmitter multiplied the source values by
/// (1.0 when the frame was not power-normalized); receivers divide by it to
/// get back to source units.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    symbols: Vec<Complex64>,
    gain: f64,
}

impl SymbolFrame {
    /// Frame sent as-is, without power normalization.
    pub fn raw(symbols: Vec<Complex64>) -> Self {
        Self { symbols, gain: 1.0 }
    }

    /// Scales `symbols` to unit average power. An all-zero block is left
    /// untouched (gain 1, average power 0).
    pub fn normalized(symbols: Vec<Complex64>) -> Self {
        let p = mean_power(&symbols);
        if p == 0.0 || !p.is_finite() {
            return Self::raw(symbols);
        }
        let gain = 1.0 / p.sqrt();
        Self {
            symbols: symbols.into_iter().map(|s| s * gain).collect(),
            gain,
        }
    }

    /// Reassembles a frame received elsewhere from its symbols and the
    /// transmitter's gain.
    pub fn from_parts(symbols: Vec<Complex64>, gain: f64) -> Self {
        Self { symbols, gain }
    }

    pub fn with_symbols(&self, symbols: Vec<Complex64>) -> Self {
        Self {
            symbols,
            gain: self.gain,
        }
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Mean of `re² + im²` over the frame.
    pub fn avg_power(&self) -> f64 {
        mean_power(&self.symbols)
    }

    /// Symbols divided by the transmit gain, i.e. back in source units.
    pub fn denormalized(&self) -> Vec<Complex64> {
        if self.gain == 1.0 {
            return self.symbols.clone();
        }
        self.symbols.iter().map(|s| s / self.gain).collect()
    }
}

pub(crate) fn mean_power(symbols: &[Complex64]) -> f64 {
    if symbols.is_empty() {
        return 0.0;
    }
    symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / symbols.len() as f64
}

/// Row-major pairing: element `2t` becomes the real part and `2t + 1` the
/// imaginary part of symbol `t`. `values` must have even length.
pub fn pack_pairs(values: &[f64]) -> Vec<Complex64> {
    debug_assert!(values.len().is_multiple_of(2));
    values
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect()
}

/// Inverse of [`pack_pairs`].
pub fn unpack_pairs(symbols: &[Complex64]) -> Vec<f64> {
    symbols.iter().flat_map(|s| [s.re, s.im]).collect()
}
