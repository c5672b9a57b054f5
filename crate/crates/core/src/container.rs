//! Versioned little-endian binary container shared by persisted models.
//!
//! Layout: 4-byte magic, `u32` format version, `u64` payload length, payload
//! bytes, trailing CRC-32 (IEEE) over everything before it.

use thiserror::Error;

/// Current container format version.
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 8;
const CRC_LEN: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("truncated file: needed {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("malformed payload: {0}")]
    Malformed(String),
}

impl FormatError {
    /// Stable numeric code for each failure kind.
    pub fn code(&self) -> u32 {
        match self {
            FormatError::BadMagic { .. } => 1,
            FormatError::VersionMismatch { .. } => 2,
            FormatError::Truncated { .. } => 3,
            FormatError::ChecksumMismatch { .. } => 4,
            FormatError::Malformed(_) => 5,
        }
    }
}

/// Wraps `payload` in a container tagged with `magic`.
pub fn seal(magic: [u8; 4], payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + CRC_LEN);
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Validates a container and returns its payload.
pub fn open(magic: [u8; 4], bytes: &[u8]) -> Result<&[u8], FormatError> {
    if bytes.len() < 4 {
        return Err(FormatError::Truncated { needed: HEADER_LEN + CRC_LEN, have: bytes.len() });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != magic {
        return Err(FormatError::BadMagic { expected: magic, found });
    }
    if bytes.len() < HEADER_LEN + CRC_LEN {
        return Err(FormatError::Truncated { needed: HEADER_LEN + CRC_LEN, have: bytes.len() });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(FormatError::VersionMismatch { expected: FORMAT_VERSION, found: version });
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let needed = HEADER_LEN.saturating_add(len).saturating_add(CRC_LEN);
    if bytes.len() < needed {
        return Err(FormatError::Truncated { needed, have: bytes.len() });
    }
    if bytes.len() > needed {
        return Err(FormatError::Malformed(format!("{} trailing bytes", bytes.len() - needed)));
    }
    let body_end = HEADER_LEN + len;
    let stored = u32::from_le_bytes(bytes[body_end..needed].try_into().unwrap());
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(FormatError::ChecksumMismatch { stored, computed });
    }
    Ok(&bytes[HEADER_LEN..body_end])
}

/// Little-endian payload writer.
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }
    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

/// Little-endian payload reader; every read is bounds-checked.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            FormatError::Malformed(format!("payload ends at byte {} while reading {n} bytes", self.buf.len()))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }
    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>, FormatError> {
        (0..n).map(|_| self.f64()).collect()
    }
    pub fn finish(self) -> Result<(), FormatError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(FormatError::Malformed(format!("{} unread payload bytes", self.buf.len() - self.pos)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seal_open_roundtrip() {
        let sealed = seal(*b"TEST", b"hello");
        assert_eq!(open(*b"TEST", &sealed).unwrap(), b"hello");
    }

    #[test]
    fn rejects_corruption() {
        let sealed = seal(*b"TEST", b"hello world");
        assert_eq!(open(*b"TEST", &[]).unwrap_err().code(), 3);
        assert_eq!(open(*b"NOPE", &sealed).unwrap_err().code(), 1);
        let mut v = sealed.clone();
        v[4] = 9;
        assert_eq!(open(*b"TEST", &v).unwrap_err().code(), 2);
        let mut v = sealed.clone();
        v[18] ^= 0x40;
        assert_eq!(open(*b"TEST", &v).unwrap_err().code(), 4);
        assert_eq!(open(*b"TEST", &sealed[..sealed.len() - 2]).unwrap_err().code(), 3);
    }

    #[test]
    fn reader_bounds() {
        let mut w = Writer::new();
        w.u32(7);
        w.f64(1.5);
        let bytes = w.into_bytes();
        let mut r = Reader::new(&bytes);
        assert_eq!(r.u32().unwrap(), 7);
        assert_eq!(r.f64().unwrap(), 1.5);
        assert!(r.u8().is_err());
    }
}
