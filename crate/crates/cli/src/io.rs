//! Distribution files.
//!
//! Two formats, picked by extension:
//!
//! * `.json` — sparse: `{"n": 4, "entries": [{"x": "000000000000000a", "p": 0.25}, ...]}`.
//!   Points are fixed-width lowercase hex (an optional `0x` prefix is
//!   accepted on input); masses are plain JSON numbers, which round-trip
//!   f64 exactly.
//! * `.bin` — dense: magic `PEDL`, a format version byte (0x01), `n` as
//!   little-endian u32, then all `2^n` masses as little-endian f64.

use crate::{HarnessError, Result};
use pedl_core::Distribution;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"PEDL";
const VERSION: u8 = 0x01;

#[derive(Serialize, Deserialize)]
struct DistFile {
    n: u32,
    entries: Vec<DistEntry>,
}

#[derive(Serialize, Deserialize)]
struct DistEntry {
    #[serde(with = "pedl_core::serde_hex")]
    x: u64,
    p: f64,
}

enum Format {
    Json,
    Binary,
}

fn format_of(path: &Path) -> Result<Format> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(Format::Json),
        Some("bin") => Ok(Format::Binary),
        other => Err(HarnessError::Format(format!(
            "unsupported distribution file extension {:?} for {}; use .json or .bin",
            other.unwrap_or(""),
            path.display()
        ))),
    }
}

pub fn read_distribution(path: &Path) -> Result<Distribution> {
    match format_of(path)? {
        Format::Json => {
            let text = std::fs::read_to_string(path)?;
            let file: DistFile = serde_json::from_str(&text)?;
            let entries = file.entries.into_iter().map(|e| (e.x, e.p)).collect();
            Ok(Distribution::from_sparse(file.n, entries)?)
        }
        Format::Binary => {
            let mut reader = std::io::BufReader::new(std::fs::File::open(path)?);
            let mut head = [0u8; 9];
            reader.read_exact(&mut head)?;
            if &head[0..4] != MAGIC {
                return Err(HarnessError::Format(format!(
                    "{} is not a distribution file (bad magic)",
                    path.display()
                )));
            }
            if head[4] != VERSION {
                return Err(HarnessError::Format(format!(
                    "unsupported distribution file version {}",
                    head[4]
                )));
            }
            let n = u32::from_le_bytes(head[5..9].try_into().unwrap());
            if n == 0 || n > 24 {
                return Err(HarnessError::Format(format!("bad domain exponent {n} in header")));
            }
            let count = 1usize << n;
            let mut buf = vec![0u8; count * 8];
            reader.read_exact(&mut buf)?;
            let probs: Vec<f64> = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(Distribution::from_dense(n, probs)?)
        }
    }
}

pub fn write_distribution(path: &Path, dist: &Distribution) -> Result<()> {
    match format_of(path)? {
        Format::Json => {
            let file = DistFile {
                n: dist.n(),
                entries: dist.support().map(|(x, p)| DistEntry { x, p }).collect(),
            };
            let mut text = serde_json::to_string_pretty(&file)?;
            text.push('\n');
            std::fs::write(path, text)?;
        }
        Format::Binary => {
            let probs = dist.dense_probs()?;
            let mut writer = std::io::BufWriter::new(std::fs::File::create(path)?);
            writer.write_all(MAGIC)?;
            writer.write_all(&[VERSION])?;
            writer.write_all(&dist.n().to_le_bytes())?;
            for p in probs {
                writer.write_all(&p.to_le_bytes())?;
            }
            writer.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        let entries: Vec<(u64, f64)> =
            (0..20).map(|i| (i * 7 + 3, 0.05)).chain([(999, 0.0)]).collect();
        let dist = Distribution::from_sparse(10, entries).unwrap();
        write_distribution(&path, &dist).unwrap();
        let back = read_distribution(&path).unwrap();
        assert_eq!(dist, back);
        // Hex points with 0x prefixes parse too.
        let text = std::fs::read_to_string(&path).unwrap().replace("\"00000", "\"0x00000");
        let path2 = dir.path().join("y.json");
        std::fs::write(&path2, text).unwrap();
        assert_eq!(read_distribution(&path2).unwrap(), dist);
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        let dist = Distribution::spiked_uniform(8, 0.3, 17).unwrap();
        write_distribution(&path, &dist).unwrap();
        let back = read_distribution(&path).unwrap();
        assert_eq!(dist, back);
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, 4 + 1 + 4 + 256 * 8);
    }

    #[test]
    fn rejects_unknown_extension_and_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.weird");
        assert!(matches!(
            read_distribution(&path),
            Err(HarnessError::Format(_))
        ));
        let bad = dir.path().join("bad.bin");
        std::fs::write(&bad, b"NOPE\x01\x04\x00\x00\x00").unwrap();
        assert!(matches!(read_distribution(&bad), Err(HarnessError::Format(_))));
    }
}
