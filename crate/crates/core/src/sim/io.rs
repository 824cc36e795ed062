//! On-disk formats: "SEMF" frame files and accelerometer CSV traces.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::codec::{
    ActivityLabel, Frame, LabeledSegment, VideoSegment, COLOR_CHANNELS, FRAMES_PER_SEGMENT, FRAME_SIZE,
};
use crate::posture::{AccelSample, PostureLabel};
use crate::weights::FormatError;

pub const FRAMES_MAGIC: [u8; 4] = *b"SEMF";
pub const FRAMES_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 2 + 2;

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::File {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `count` frames pulled from `frames`: magic, u32 version, u32
/// count, u16 height, u16 width (little-endian), then 8-bit RGB row-major.
pub fn write_frames(
    path: impl AsRef<Path>,
    count: usize,
    frames: impl IntoIterator<Item = Frame>,
) -> Result<(), SimError> {
    let path = path.as_ref();
    let count32 = u32::try_from(count)
        .map_err(|_| SimError::Format(FormatError::Malformed(format!("{count} frames do not fit a u32"))))?;
    let mut w = BufWriter::new(File::create(path).map_err(file_err(path))?);
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&FRAMES_MAGIC);
    header.extend_from_slice(&FRAMES_VERSION.to_le_bytes());
    header.extend_from_slice(&count32.to_le_bytes());
    header.extend_from_slice(&(FRAME_SIZE as u16).to_le_bytes());
    header.extend_from_slice(&(FRAME_SIZE as u16).to_le_bytes());
    w.write_all(&header).map_err(file_err(path))?;
    let mut written = 0;
    for f in frames.into_iter().take(count) {
        w.write_all(f.pixels()).map_err(file_err(path))?;
        written += 1;
    }
    if written != count {
        return Err(SimError::Format(FormatError::Malformed(format!(
            "expected {count} frames, iterator gave {written}"
        ))));
    }
    w.flush().map_err(file_err(path))
}

pub fn frames_from_bytes(bytes: &[u8]) -> Result<Vec<Frame>, FormatError> {
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Truncated {
            offset: 0,
            needed: HEADER_LEN,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != FRAMES_MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let u16_at = |o: usize| u16::from_le_bytes(bytes[o..o + 2].try_into().expect("2 bytes"));
    let version = u32_at(4);
    if version != FRAMES_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let count = u32_at(8) as usize;
    let (h, w) = (u16_at(12) as usize, u16_at(14) as usize);
    if h != FRAME_SIZE || w != FRAME_SIZE {
        return Err(FormatError::Malformed(format!(
            "frames are {h}x{w}, expected {FRAME_SIZE}x{FRAME_SIZE}"
        )));
    }
    let frame_len = h * w * COLOR_CHANNELS;
    let body = &bytes[HEADER_LEN..];
    if body.len() < count * frame_len {
        return Err(FormatError::Truncated {
            offset: HEADER_LEN + body.len(),
            needed: count * frame_len - body.len(),
        });
    }
    if body.len() > count * frame_len {
        return Err(FormatError::Malformed("trailing bytes after last frame".into()));
    }
    Ok(body
        .chunks_exact(frame_len)
        .map(|c| Frame::new(c.to_vec()).expect("length checked"))
        .collect())
}

pub fn read_frames(path: impl AsRef<Path>) -> Result<Vec<Frame>, SimError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(file_err(path))?)
        .read_to_end(&mut bytes)
        .map_err(file_err(path))?;
    Ok(frames_from_bytes(&bytes)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct AccelRow {
    t_sec: f64,
    ax: f64,
    ay: f64,
    az: f64,
}

/// CSV with header `t_sec,ax,ay,az`, accelerations in g.
pub fn write_accel_csv(path: impl AsRef<Path>, samples: &[AccelSample]) -> Result<(), SimError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for s in samples {
        w.serialize(AccelRow {
            t_sec: s.t,
            ax: s.a[0],
            ay: s.a[1],
            az: s.a[2],
        })?;
    }
    w.flush().map_err(file_err(path))
}

pub fn read_accel_csv(path: impl AsRef<Path>) -> Result<Vec<AccelSample>, SimError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<AccelRow>()
        .map(|row| {
            let row = row?;
            Ok(AccelSample::new(row.t_sec, [row.ax, row.ay, row.az]))
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct WindowRow {
    window: usize,
    posture: String,
}

/// Ground-truth posture per window: header `window,posture`.
pub fn write_window_labels(path: impl AsRef<Path>, postures: &[PostureLabel]) -> Result<(), SimError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for (window, p) in postures.iter().enumerate() {
        w.serialize(WindowRow {
            window,
            posture: p.name().into(),
        })?;
    }
    w.flush().map_err(file_err(path))
}

pub fn read_window_labels(path: impl AsRef<Path>) -> Result<Vec<PostureLabel>, SimError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<WindowRow>().enumerate() {
        let row = row?;
        if row.window != i {
            return Err(SimError::Scenario(format!("window labels out of order at row {i}")));
        }
        out.push(row.posture.parse().map_err(SimError::Scenario)?);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentRow {
    segment: usize,
    activity: String,
}

/// Labelled segments as one frame file (segment `i` = frames `16i..16i+16`)
/// plus a `segment,activity` CSV.
pub fn write_labeled_segments(
    frames_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    data: &[LabeledSegment],
) -> Result<(), SimError> {
    let frames = data.iter().flat_map(|s| s.segment.frames().iter().cloned());
    write_frames(frames_path, data.len() * FRAMES_PER_SEGMENT, frames)?;
    let labels_path = labels_path.as_ref();
    let mut w = csv::Writer::from_path(labels_path)?;
    for (segment, s) in data.iter().enumerate() {
        w.serialize(SegmentRow {
            segment,
            activity: s.label.name().into(),
        })?;
    }
    w.flush().map_err(file_err(labels_path))
}

pub fn read_labeled_segments(
    frames_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Vec<LabeledSegment>, SimError> {
    let frames = read_frames(frames_path)?;
    let mut r = csv::Reader::from_path(labels_path)?;
    let labels = r
        .deserialize::<SegmentRow>()
        .map(|row| -> Result<ActivityLabel, SimError> { row?.activity.parse().map_err(SimError::Scenario) })
        .collect::<Result<Vec<_>, _>>()?;
    if frames.len() != labels.len() * FRAMES_PER_SEGMENT {
        return Err(SimError::Scenario(format!(
            "{} frames do not match {} labelled segments",
            frames.len(),
            labels.len()
        )));
    }
    Ok(frames
        .chunks_exact(FRAMES_PER_SEGMENT)
        .zip(labels)
        .enumerate()
        .map(|(i, (chunk, label))| LabeledSegment {
            segment: VideoSegment::new(i, chunk.to_vec()).expect("16 frames"),
            label,
        })
        .collect())
}
