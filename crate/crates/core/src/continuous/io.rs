//! Flat binary sample batches with a JSON sidecar.
//!
//! Layout: the 8-byte magic, then θ (f64), N, k (u64), a−, a+ (f64), count,
//! seed (u64), all little-endian; then the body level by level (N first),
//! each level holding every sample's j coordinates in sample order.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{Diagnostics, SampleBatch};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CORNERS1";
const HEADER: usize = 8 + 8 * 7;

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `path` and `path.json`.
pub fn write_batch(path: &Path, b: &SampleBatch) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&b.theta.to_le_bytes())?;
    w.write_all(&(b.n as u64).to_le_bytes())?;
    w.write_all(&(b.k as u64).to_le_bytes())?;
    w.write_all(&b.a_minus.to_le_bytes())?;
    w.write_all(&b.a_plus.to_le_bytes())?;
    w.write_all(&(b.count as u64).to_le_bytes())?;
    w.write_all(&b.seed.to_le_bytes())?;
    for j in (b.k..=b.n).rev() {
        for s in 0..b.count {
            for y in b.level(s, j) {
                w.write_all(&y.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(b).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(sidecar(path), json)?;
    Ok(())
}

/// Reads a batch; diagnostics come from the sidecar when it exists.
pub fn read_batch(path: &Path) -> Result<SampleBatch> {
    let mut raw = Vec::new();
    fs::File::open(path)?.read_to_end(&mut raw)?;
    if raw.len() < HEADER || &raw[..8] != MAGIC {
        return Err(Error::Format("missing CORNERS1 header".into()));
    }
    let word = |i: usize| -> [u8; 8] { raw[8 + 8 * i..16 + 8 * i].try_into().unwrap() };
    let theta = f64::from_le_bytes(word(0));
    let n = u64::from_le_bytes(word(1)) as usize;
    let k = u64::from_le_bytes(word(2)) as usize;
    let a_minus = f64::from_le_bytes(word(3));
    let a_plus = f64::from_le_bytes(word(4));
    let count = u64::from_le_bytes(word(5)) as usize;
    let seed = u64::from_le_bytes(word(6));
    if !(1 <= k && k <= n && n < 1 << 16) {
        return Err(Error::Format(format!("bad level range N={n}, k={k}")));
    }
    let width: usize = (k..=n).sum();
    let body = &raw[HEADER..];
    if body.len() != count * width * 8 {
        return Err(Error::Format(format!("body has {} bytes, expected {}", body.len(), count * width * 8)));
    }
    let vals: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let mut data = vec![0.0; count * width];
    let mut src = 0;
    for j in (k..=n).rev() {
        let off = super::level_offset(n, j);
        for s in 0..count {
            data[s * width + off..s * width + off + j].copy_from_slice(&vals[src..src + j]);
            src += j;
        }
    }
    let diagnostics = match fs::read_to_string(sidecar(path)) {
        Ok(txt) => {
            let side: SampleBatch = serde_json::from_str(&txt).map_err(|e| Error::Format(e.to_string()))?;
            side.diagnostics
        }
        Err(_) => Diagnostics::default(),
    };
    Ok(SampleBatch { theta, n, k, a_minus, a_plus, seed, count, data, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuous::{sample, ContinuousSpec, Potential};

    #[test]
    fn round_trip() {
        let spec = ContinuousSpec::new(0.7, 3, 1, -2.0, 2.0, Potential::quadratic()).unwrap();
        let b = sample(&spec, 50, 20, 6);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("batch.bin");
        write_batch(&p, &b).unwrap();
        let r = read_batch(&p).unwrap();
        assert_eq!(r.data, b.data);
        assert_eq!((r.n, r.k, r.count, r.seed), (3, 1, 50, 6));
        assert_eq!(r.diagnostics.acceptance_rate, b.diagnostics.acceptance_rate);
        let raw = fs::read(&p).unwrap();
        assert_eq!(&raw[..8], MAGIC);
        // Level-major: the first body value is sample 0's y₁³.
        assert_eq!(f64::from_le_bytes(raw[HEADER..HEADER + 8].try_into().unwrap()), b.level(0, 3)[0]);
        assert_eq!(f64::from_le_bytes(raw[HEADER + 24..HEADER + 32].try_into().unwrap()), b.level(1, 3)[0]);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        fs::write(&p, b"NOTCORNERS").unwrap();
        assert!(matches!(read_batch(&p), Err(Error::Format(_))));
        let mut raw = MAGIC.to_vec();
        raw.extend([0u8; 56]);
        fs::write(&p, raw).unwrap();
        assert!(read_batch(&p).is_err());
    }
}
