//! Communication-overhead accounting in channel symbols.

use std::fmt::Write as _;

use serde::Serialize;

use crate::codec::SYMBOLS_PER_FRAME;

/// Segments in the reference test video (29,640 frames at stride 16).
pub const PAPER_N_F: u64 = 1_852;
/// Feature uploads in the reference run.
pub const PAPER_N_T: u64 = 36;
/// The 110 MB reference video in bits, taking MB as MiB.
pub const PAPER_N_B: u64 = 110 * 1024 * 1024 * 8;
pub const PAPER_SNR_GRID: [f64; 4] = [7.0, 13.0, 19.0, 25.0];

pub const METHOD_MPEG: &str = "MPEG-4";
pub const METHOD_SC: &str = "HAR-SC";
pub const METHOD_TC: &str = "HAR-SC-TC";

/// Symbols to send every segment's feature frame. Saturates at `u64::MAX`.
pub fn c_sc(l: u64, n_f: u64) -> u64 {
    l.saturating_mul(n_f)
}

/// Symbols to send only the commanded feature frames.
pub fn c_tc(l: u64, n_t: u64) -> u64 {
    l.saturating_mul(n_t)
}

/// Channel uses for `n_b` bits at the Shannon capacity of a `gamma_db`
/// AWGN channel.
pub fn c_mpeg(n_b: u64, gamma_db: f64) -> f64 {
    n_b as f64 / (1.0 + 10f64.powf(gamma_db / 10.0)).log2()
}

/// Fraction of the always-on cost saved by gating, `1 − C_TC / C_SC`.
/// `None` when `C_SC` is zero.
pub fn reduction(c_tc: u64, c_sc: u64) -> Option<f64> {
    (c_sc > 0).then(|| 1.0 - c_tc as f64 / c_sc as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OverheadLedger {
    /// Symbols per feature frame.
    pub l: u64,
    /// Feature frames available (segments at the sampling stride).
    pub n_f: u64,
    /// Feature frames actually uploaded.
    pub n_t: u64,
    /// Reference video size in bits.
    pub n_b: u64,
    /// Accelerometer symbols sent.
    pub raw_symbols: u64,
    pub acks: u64,
}

impl Default for OverheadLedger {
    fn default() -> Self {
        Self {
            l: SYMBOLS_PER_FRAME as u64,
            n_f: 0,
            n_t: 0,
            n_b: 0,
            raw_symbols: 0,
            acks: 0,
        }
    }
}

impl OverheadLedger {
    /// The reference scenario's counts.
    pub fn paper() -> Self {
        Self {
            l: SYMBOLS_PER_FRAME as u64,
            n_f: PAPER_N_F,
            n_t: PAPER_N_T,
            n_b: PAPER_N_B,
            raw_symbols: 0,
            acks: 0,
        }
    }

    pub fn record_uploads(&mut self, frames: u64) {
        self.n_t += frames;
    }

    pub fn record_ack(&mut self) {
        self.acks += 1;
    }

    pub fn record_raw_symbols(&mut self, symbols: u64) {
        self.raw_symbols += symbols;
    }

    pub fn c_sc(&self) -> u64 {
        c_sc(self.l, self.n_f)
    }

    pub fn c_tc(&self) -> u64 {
        c_tc(self.l, self.n_t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverheadRow {
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    /// Rounded to the nearest integer for the MPEG-4 rows.
    pub overhead_symbols: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverheadReport {
    pub scenario: String,
    #[serde(rename = "L")]
    pub l: u64,
    #[serde(rename = "N_f")]
    pub n_f: u64,
    #[serde(rename = "N_t")]
    pub n_t: u64,
    #[serde(rename = "N_b")]
    pub n_b: u64,
    pub rows: Vec<OverheadRow>,
}

/// MPEG-4 rows for each SNR in `snr_grid`, then HAR-SC and HAR-SC-TC.
pub fn report(scenario: &str, ledger: &OverheadLedger, snr_grid: &[f64]) -> OverheadReport {
    let mut rows: Vec<OverheadRow> = snr_grid
        .iter()
        .map(|&g| OverheadRow {
            method: METHOD_MPEG.into(),
            snr_db: Some(g),
            overhead_symbols: c_mpeg(ledger.n_b, g).round() as u64,
        })
        .collect();
    rows.push(OverheadRow {
        method: METHOD_SC.into(),
        snr_db: None,
        overhead_symbols: ledger.c_sc(),
    });
    rows.push(OverheadRow {
        method: METHOD_TC.into(),
        snr_db: None,
        overhead_symbols: ledger.c_tc(),
    });
    OverheadReport {
        scenario: scenario.into(),
        l: ledger.l,
        n_f: ledger.n_f,
        n_t: ledger.n_t,
        n_b: ledger.n_b,
        rows,
    }
}

impl OverheadReport {
    pub fn symbols(&self, method: &str, snr_db: Option<f64>) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.snr_db == snr_db)
            .map(|r| r.overhead_symbols)
    }

    pub fn reduction(&self) -> Option<f64> {
        reduction(self.symbols(METHOD_TC, None)?, self.symbols(METHOD_SC, None)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario {}: L={} N_f={} N_t={} N_b={}",
            self.scenario, self.l, self.n_f, self.n_t, self.n_b
        );
        let _ = writeln!(out, "{:<10} {:>8} {:>16}", "method", "SNR(dB)", "symbols");
        for r in &self.rows {
            let snr = r.snr_db.map_or_else(|| "-".to_string(), |s| format!("{s}"));
            let _ = writeln!(out, "{:<10} {:>8} {:>16}", r.method, snr, r.overhead_symbols);
        }
        if let Some(red) = self.reduction() {
            let _ = writeln!(out, "HAR-SC-TC reduction vs HAR-SC: {:.2}%", 100.0 * red);
        }
        out
    }
}
