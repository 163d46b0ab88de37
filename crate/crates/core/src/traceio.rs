//! Binary trace files.
//!
//! Little-endian layout:
//!
//! ```text
//! "SCTRACE1"            8 bytes
//! version               u32 (= 1)
//! trace_count           u32
//! samples_per_trace     u32
//! mode                  u8  (0 unprotected, 1 protected)
//! decoys                u8
//! noise_sigma           f64
//! target_byte           u8
//! key fingerprint       16 bytes, SHA-256(key)[..16]
//! per trace:            16-byte plaintext, 16-byte ciphertext,
//!                       samples_per_trace × f32
//! ```
//!
//! The algorithmic-noise and exposed-output flags are not stored; a protected
//! file with 9 samples per trace is read back with `expose_sbox_output` set.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::aes::BLOCK_LEN;
use crate::error::{Error, Result};
use crate::leakage::{LeakConfig, Mode, Trace, TraceSet};

pub const MAGIC: &[u8; 8] = b"SCTRACE1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 8 + 4 + 4 + 4 + 1 + 1 + 8 + 1 + 16;

pub fn write_traces<W: Write>(ts: &TraceSet, mut w: W) -> std::io::Result<()> {
    let cfg = &ts.config;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(ts.traces.len() as u32).to_le_bytes())?;
    w.write_all(&(cfg.samples_per_trace() as u32).to_le_bytes())?;
    w.write_all(&[cfg.mode.code(), cfg.decoys as u8])?;
    w.write_all(&cfg.noise_sigma.to_le_bytes())?;
    w.write_all(&[cfg.target_byte])?;
    w.write_all(&ts.key_fingerprint)?;
    for t in &ts.traces {
        w.write_all(&t.plaintext)?;
        w.write_all(&t.ciphertext)?;
        for s in &t.samples {
            w.write_all(&s.to_le_bytes())?;
        }
    }
    w.flush()
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::TraceFormat(msg.into())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| format_err(format!("truncated file while reading {what}")))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }
}

pub fn parse_traces(bytes: &[u8]) -> Result<TraceSet> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(8, "magic")? != MAGIC {
        return Err(format_err("not a trace file (bad magic)"));
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    let count = c.u32("trace count")? as usize;
    let samples = c.u32("samples per trace")? as usize;
    let mode = c.u8("mode")?;
    let mode = Mode::from_code(mode).ok_or_else(|| format_err(format!("unknown mode {mode}")))?;
    let decoys = match c.u8("decoy flag")? {
        0 => false,
        1 => true,
        d => return Err(format_err(format!("invalid decoy flag {d}"))),
    };
    let noise_sigma = f64::from_le_bytes(c.array("noise sigma")?);
    let target_byte = c.u8("target byte")?;
    let key_fingerprint = c.array("key fingerprint")?;

    let expose_sbox_output = match (mode, samples) {
        (Mode::Unprotected, 2) | (Mode::Protected, 8) => false,
        (Mode::Protected, 9) => true,
        _ => {
            return Err(format_err(format!(
                "{samples} samples per trace is not valid for {} mode",
                mode.name()
            )))
        }
    };
    let config = LeakConfig {
        mode,
        decoys,
        noise_sigma,
        target_byte,
        algorithmic_noise: false,
        expose_sbox_output,
    };
    config.validate()?;

    let record = 2 * BLOCK_LEN + 4 * samples;
    let expected = count
        .checked_mul(record)
        .and_then(|b| b.checked_add(HEADER_LEN))
        .ok_or_else(|| format_err("trace count overflows"))?;
    if bytes.len() != expected {
        return Err(format_err(format!(
            "expected {expected} bytes for {count} traces, file has {}",
            bytes.len()
        )));
    }
    let mut traces = Vec::with_capacity(count);
    for _ in 0..count {
        let plaintext = c.array("plaintext")?;
        let ciphertext = c.array("ciphertext")?;
        let samples = c
            .take(4 * samples, "samples")?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("chunk of 4")))
            .collect();
        traces.push(Trace {
            plaintext,
            ciphertext,
            samples,
        });
    }
    Ok(TraceSet {
        config,
        key_fingerprint,
        seed: None,
        traces,
    })
}

pub fn read_traces<R: Read>(mut r: R) -> Result<TraceSet> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| format_err(format!("read failed: {e}")))?;
    parse_traces(&bytes)
}

pub fn save(ts: &TraceSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_traces(ts, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<TraceSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    parse_traces(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iso::Catalog;
    use crate::leakage::generate_set;
    use std::sync::Arc;

    fn encode(ts: &TraceSet) -> Vec<u8> {
        let mut out = Vec::new();
        write_traces(ts, &mut out).unwrap();
        out
    }

    #[test]
    fn header_layout() {
        let key = [7u8; 16];
        let ts = generate_set(3, &key, &LeakConfig::unprotected(1.5), 9, None).unwrap();
        let bytes = encode(&ts);
        assert_eq!(bytes.len(), HEADER_LEN + 3 * (32 + 8));
        assert_eq!(&bytes[..8], b"SCTRACE1");
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[3, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &[2, 0, 0, 0]);
        assert_eq!(&bytes[20..22], &[0, 0]);
        assert_eq!(&bytes[22..30], &1.5f64.to_le_bytes());
        assert_eq!(bytes[30], 0);
        assert_eq!(&bytes[31..47], &ts.key_fingerprint);
        assert_eq!(&bytes[47..63], &ts.traces[0].plaintext);
    }

    #[test]
    fn roundtrip_both_modes() {
        let key = [0x3Cu8; 16];
        let cat = Arc::new(Catalog::low_cost(32).unwrap());
        let mut exposed = LeakConfig::protected(0.5, true);
        exposed.expose_sbox_output = true;
        for cfg in [
            LeakConfig::unprotected(2.0),
            LeakConfig::protected(3.0, true),
            exposed,
        ] {
            let ts = generate_set(50, &key, &cfg, 0x0203_0405, Some(Arc::clone(&cat))).unwrap();
            let back = parse_traces(&encode(&ts)).unwrap();
            assert_eq!(back.traces, ts.traces);
            assert_eq!(back.config, ts.config);
            assert_eq!(back.key_fingerprint, ts.key_fingerprint);
            assert_eq!(back.seed, None);
        }
    }

    #[test]
    fn rejects_corruption() {
        let ts = generate_set(4, &[1u8; 16], &LeakConfig::unprotected(1.0), 2, None).unwrap();
        let good = encode(&ts);
        assert!(parse_traces(&good[..good.len() - 1]).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(parse_traces(&extra).is_err());
        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(parse_traces(&magic).is_err());
        let mut version = good.clone();
        version[8] = 2;
        assert!(parse_traces(&version).is_err());
        let mut mode = good.clone();
        mode[20] = 5;
        assert!(parse_traces(&mode).is_err());
        let mut spt = good;
        spt[16] = 3;
        assert!(parse_traces(&spt).is_err());
        assert!(parse_traces(&[]).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        let ts = generate_set(10, &[2u8; 16], &LeakConfig::unprotected(1.0), 5, None).unwrap();
        save(&ts, &path).unwrap();
        assert_eq!(load(&path).unwrap().traces, ts.traces);
        assert!(matches!(
            load(&dir.path().join("missing.bin")),
            Err(Error::Io { .. })
        ));
    }
}
