//! Simulation config: flat `key = value` lines, `#` starts a comment.
//!
//! Keys (all optional):
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `seed` | 1 | scenario generators |
//! | `channel_seed` | 2 | channel noise on both links |
//! | `snr_video_db`, `snr_accel_db` | 25 | link SNR; `inf` for noiseless |
//! | `stride` | 16 | frames between segment starts |
//! | `validation_windows` | 3 | windows a new posture must persist |
//! | `targets` | `broadcast` | or a comma list of rooms |
//! | `segments_per_ack` | 1 | segments each camera uploads per ACK |
//! | `codec_model`, `forest_model` | none | SEMW files, relative to the config |
//! | `accel_noise`, `walk_bounce`, `pixel_noise` | 0.1, 0.25, 0.08 | generator noise |
//! | `timeline` | `paper` | or `activity:seconds, ...` |
//! | `snr_grid` | `7,13,19,25` | MPEG-4 rows of the overhead table |
//! | `video_bits` | 922746880 | reference video size for the MPEG-4 rows |
//! | `report_json`, `event_log` | none | output paths, relative to the config |

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use super::scenario::{NoiseParams, Scenario, TimelineEntry};
use super::{Room, SimError};
use crate::codec::{ActivityLabel, DEFAULT_STRIDE};
use crate::controller::{AckPolicy, Targets};
use crate::overhead::{PAPER_N_B, PAPER_SNR_GRID};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub channel_seed: u64,
    pub snr_video_db: f64,
    pub snr_accel_db: f64,
    pub stride: usize,
    pub policy: AckPolicy,
    pub codec_model: Option<PathBuf>,
    pub forest_model: Option<PathBuf>,
    pub noise: NoiseParams,
    /// `None` selects the built-in paper-length scenario.
    pub timeline: Option<Vec<TimelineEntry>>,
    pub snr_grid: Vec<f64>,
    pub video_bits: u64,
    pub report_json: Option<PathBuf>,
    pub event_log: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            channel_seed: 2,
            snr_video_db: 25.0,
            snr_accel_db: 25.0,
            stride: DEFAULT_STRIDE,
            policy: AckPolicy::default(),
            codec_model: None,
            forest_model: None,
            noise: NoiseParams::default(),
            timeline: None,
            snr_grid: PAPER_SNR_GRID.to_vec(),
            video_bits: PAPER_N_B,
            report_json: None,
            event_log: None,
        }
    }
}

fn parse_snr(v: &str) -> Result<f64, String> {
    match v {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => {
            let x: f64 = v.parse().map_err(|_| format!("bad SNR '{v}'"))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(format!("bad SNR '{v}'"))
            }
        }
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("bad number '{v}'"))
}

fn parse_noise(v: &str) -> Result<f64, String> {
    let x: f64 = parse_num(v)?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("noise level must be >= 0, got '{v}'"))
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

pub fn parse_timeline(v: &str) -> Result<Vec<TimelineEntry>, String> {
    list(v)
        .map(|item| {
            let (a, d) = item
                .split_once(':')
                .ok_or_else(|| format!("timeline entry '{item}' is not activity:seconds"))?;
            let activity: ActivityLabel = a.trim().parse()?;
            Ok(TimelineEntry::new(activity, parse_num(d.trim())?))
        })
        .collect()
}

impl SimConfig {
    /// Parses config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, SimError> {
        let mut cfg = SimConfig::default();
        let mut seen = HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| SimError::Config { line: n + 1, msg };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key '{key}'")));
            }
            let path = || Some(base.join(value));
            cfg.apply(key, value, path).map_err(err)?;
        }
        cfg.policy.validate()?;
        if cfg.stride == 0 {
            return Err(SimError::Config {
                line: 0,
                msg: "stride must be >= 1".into(),
            });
        }
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, v: &str, path: impl Fn() -> Option<PathBuf>) -> Result<(), String> {
        match key {
            "seed" => self.seed = parse_num(v)?,
            "channel_seed" => self.channel_seed = parse_num(v)?,
            "snr_video_db" => self.snr_video_db = parse_snr(v)?,
            "snr_accel_db" => self.snr_accel_db = parse_snr(v)?,
            "stride" => self.stride = parse_num(v)?,
            "validation_windows" => self.policy.validation_windows = parse_num(v)?,
            "segments_per_ack" => self.policy.segments_per_ack = parse_num(v)?,
            "targets" => {
                self.policy.targets = if v == "broadcast" {
                    Targets::Broadcast
                } else {
                    Targets::Subset(list(v).map(str::parse::<Room>).collect::<Result<_, _>>()?)
                }
            }
            "codec_model" => self.codec_model = path(),
            "forest_model" => self.forest_model = path(),
            "report_json" => self.report_json = path(),
            "event_log" => self.event_log = path(),
            "accel_noise" => self.noise.accel_sigma = parse_noise(v)?,
            "walk_bounce" => self.noise.walk_bounce = parse_noise(v)?,
            "pixel_noise" => self.noise.pixel_sigma = parse_noise(v)?,
            "timeline" => self.timeline = if v == "paper" { None } else { Some(parse_timeline(v)?) },
            "snr_grid" => self.snr_grid = list(v).map(parse_snr).collect::<Result<_, _>>()?,
            "video_bits" => self.video_bits = parse_num(v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::File {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Fails if a referenced input file is missing.
    pub fn check_inputs(&self) -> Result<(), SimError> {
        for p in [&self.codec_model, &self.forest_model].into_iter().flatten() {
            if !p.is_file() {
                return Err(SimError::File {
                    path: p.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                });
            }
        }
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        match &self.timeline {
            None => Scenario::paper(self.seed, self.noise),
            Some(t) => Scenario::new("custom", t.clone(), self.seed, self.noise),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_key() {
        let text = "\
# links
seed = 5
channel_seed = 6
snr_video_db = inf
snr_accel_db = 13   # trailing comment
stride = 8
validation_windows = 2
targets = kitchen, bedroom
segments_per_ack = 2
codec_model = models/codec.semw
forest_model = /abs/forest.semw
accel_noise = 0
walk_bounce = 0
pixel_noise = 0.01
timeline = sleeping:30, eating:12.5
snr_grid = 7, 25
video_bits = 1000
report_json = out/report.json
event_log = out/events.log
";
        let c = SimConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.snr_video_db, f64::INFINITY);
        assert_eq!(c.snr_accel_db, 13.0);
        assert_eq!(c.stride, 8);
        assert_eq!(c.policy.targets, Targets::Subset(vec![Room::Kitchen, Room::Bedroom]));
        assert_eq!(c.codec_model.as_deref(), Some(Path::new("/base/models/codec.semw")));
        assert_eq!(c.forest_model.as_deref(), Some(Path::new("/abs/forest.semw")));
        assert_eq!(c.noise.pixel_sigma, 0.01);
        let t = c.timeline.as_ref().unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].duration_s, 12.5);
        assert_eq!(c.snr_grid, vec![7.0, 25.0]);
        assert_eq!(c.scenario().name, "custom");
    }

    #[test]
    fn defaults_and_errors() {
        let c = SimConfig::parse("# nothing\n\n", Path::new(".")).unwrap();
        assert_eq!(c, SimConfig::default());
        assert_eq!(c.scenario().name, "paper");
        for bad in [
            "colour = red",
            "seed = x",
            "seed = 1\nseed = 2",
            "no equals sign",
            "targets = garage",
            "validation_windows = 0",
            "timeline = sleeping-30",
            "snr_video_db = nan",
            "accel_noise = -1",
        ] {
            assert!(SimConfig::parse(bad, Path::new(".")).is_err(), "{bad}");
        }
        match SimConfig::parse("a = 1\nseed = q", Path::new(".")) {
            Err(SimError::Config { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_inputs_are_reported() {
        let c = SimConfig::parse("codec_model = /definitely/not/here.semw", Path::new(".")).unwrap();
        assert!(matches!(c.check_inputs(), Err(SimError::File { .. })));
        assert!(matches!(SimConfig::load("/definitely/missing.cfg"), Err(SimError::File { .. })));
    }
}
