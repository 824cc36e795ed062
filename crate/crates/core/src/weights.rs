//! The "SEMW" weights container shared by the codec and the posture forest.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "SEMW"  u32 version (=1)  u32 array_count
//! per array: u16 name_len, name bytes (UTF-8), u8 rank, rank × u32 dims,
//!            product(dims) × f32 payload
//! ```

use std::fs;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"SEMW";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes {0:?}, expected \"SEMW\"")]
    BadMagic([u8; 4]),
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("file truncated: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("malformed container: {0}")]
    Malformed(String),
    #[error("missing array {0:?}")]
    MissingArray(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

impl NamedArray {
    pub fn new(name: impl Into<String>, dims: &[usize], data: &[f64]) -> Self {
        Self {
            name: name.into(),
            dims: dims.iter().map(|&d| d as u32).collect(),
            data: data.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn dims_usize(&self) -> Vec<usize> {
        self.dims.iter().map(|&d| d as usize).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightFile {
    pub arrays: Vec<NamedArray>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.bytes.len() - self.pos < n {
            return Err(FormatError::Truncated {
                offset: self.pos,
                needed: n,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

impl WeightFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, array: NamedArray) {
        self.arrays.push(array);
    }

    pub fn get(&self, name: &str) -> Result<&NamedArray, FormatError> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| FormatError::MissingArray(name.to_string()))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, FormatError> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for a in &self.arrays {
            let name = a.name.as_bytes();
            let name_len = u16::try_from(name.len())
                .map_err(|_| FormatError::Malformed(format!("array name too long: {}", a.name)))?;
            let rank = u8::try_from(a.dims.len())
                .map_err(|_| FormatError::Malformed(format!("rank too large for {}", a.name)))?;
            let count: u64 = a.dims.iter().map(|&d| u64::from(d)).product();
            if count != a.data.len() as u64 {
                return Err(FormatError::Malformed(format!(
                    "array {} has {} values for dims {:?}",
                    a.name,
                    a.data.len(),
                    a.dims
                )));
            }
            out.extend_from_slice(&name_len.to_le_bytes());
            out.extend_from_slice(name);
            out.push(rank);
            for d in &a.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            for v in &a.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = match r.take(4) {
            Ok(m) => m.try_into().unwrap(),
            Err(_) if bytes.len() < 4 && MAGIC.starts_with(bytes) => {
                return Err(FormatError::Truncated {
                    offset: 0,
                    needed: 4,
                })
            }
            Err(_) => {
                let mut m = [0u8; 4];
                m[..bytes.len()].copy_from_slice(bytes);
                return Err(FormatError::BadMagic(m));
            }
        };
        if magic != MAGIC {
            return Err(FormatError::BadMagic(magic));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let count = r.u32()?;
        let mut arrays = Vec::new();
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| FormatError::Malformed("array name is not UTF-8".into()))?
                .to_string();
            let rank = r.u8()? as usize;
            let dims = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
            let n: u64 = dims.iter().map(|&d| u64::from(d)).product();
            let n = usize::try_from(n)
                .ok()
                .and_then(|n| n.checked_mul(4).map(|b| (n, b)))
                .ok_or_else(|| FormatError::Malformed(format!("array {name} too large")))?;
            let payload = r.take(n.1)?;
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            arrays.push(NamedArray { name, dims, data });
        }
        if r.pos != bytes.len() {
            return Err(FormatError::Malformed(format!(
                "{} trailing bytes after last array",
                bytes.len() - r.pos
            )));
        }
        Ok(Self { arrays })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Rounds through `f32` so a value survives the container unchanged.
pub fn snap(v: f64) -> f64 {
    f64::from(v as f32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> WeightFile {
        let mut w = WeightFile::new();
        w.push(NamedArray::new("a", &[2, 3], &[1.0, -2.0, 3.5, 0.0, 1e-3, 7.0]));
        w.push(NamedArray::new("scalar", &[1], &[42.0]));
        w
    }

    #[test]
    fn byte_layout_header() {
        let bytes = sample().to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"SEMW");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        // first array: name_len=1, 'a', rank=2, dims 2,3
        assert_eq!(&bytes[12..14], &[1, 0]);
        assert_eq!(bytes[14], b'a');
        assert_eq!(bytes[15], 2);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 3);
        assert_eq!(f32::from_le_bytes(bytes[24..28].try_into().unwrap()), 1.0);
    }

    #[test]
    fn round_trip_and_errors() {
        let w = sample();
        let bytes = w.to_bytes().unwrap();
        assert_eq!(WeightFile::from_bytes(&bytes).unwrap(), w);

        for cut in [2, 6, 13, bytes.len() - 1] {
            assert!(
                matches!(
                    WeightFile::from_bytes(&bytes[..cut]),
                    Err(FormatError::Truncated { .. })
                ),
                "cut at {cut}"
            );
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            WeightFile::from_bytes(&bad),
            Err(FormatError::BadMagic(_))
        ));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(
            WeightFile::from_bytes(&bad),
            Err(FormatError::UnsupportedVersion(9))
        ));
        let mut long = bytes;
        long.push(0);
        assert!(matches!(
            WeightFile::from_bytes(&long),
            Err(FormatError::Malformed(_))
        ));
        assert!(matches!(w.get("nope"), Err(FormatError::MissingArray(_))));
    }
}
