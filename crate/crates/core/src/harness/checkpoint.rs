//! Binary checkpoint: magic, a version byte, length-prefixed records
//! (configuration JSON, progress JSON) and a trailing SHA-256 of
//! everything before it.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::{write_atomic, ExperimentConfig, Progress};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SPCK";
pub const VERSION: u8 = 1;

fn push_record(buf: &mut Vec<u8>, body: &[u8]) {
    buf.extend_from_slice(&(body.len() as u32).to_le_bytes());
    buf.extend_from_slice(body);
}

pub(crate) fn encode(cfg: &ExperimentConfig, pr: &Progress) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    push_record(&mut buf, &serde_json::to_vec(cfg)?);
    push_record(&mut buf, &serde_json::to_vec(pr)?);
    let sum = Sha256::digest(&buf);
    buf.extend_from_slice(&sum);
    Ok(buf)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<(ExperimentConfig, Progress)> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    if bytes.len() < MAGIC.len() + 1 + 32 {
        return Err(bad("file too short"));
    }
    let (body, sum) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != sum {
        return Err(bad("checksum mismatch"));
    }
    if &body[..4] != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    if body[4] != VERSION {
        return Err(bad(&format!("unsupported version {}", body[4])));
    }
    let mut rest = &body[5..];
    let mut records = Vec::new();
    while !rest.is_empty() {
        if rest.len() < 4 {
            return Err(bad("truncated record header"));
        }
        let len = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
        rest = &rest[4..];
        if rest.len() < len {
            return Err(bad("truncated record"));
        }
        records.push(&rest[..len]);
        rest = &rest[len..];
    }
    let [cfg, pr] = records[..] else {
        return Err(bad("expected two records"));
    };
    let mut cfg: ExperimentConfig = serde_json::from_slice(cfg)?;
    cfg.workers = 1;
    Ok((cfg, serde_json::from_slice(pr)?))
}

pub(crate) fn write(path: &Path, cfg: &ExperimentConfig, pr: &Progress) -> Result<()> {
    write_atomic(path, &encode(cfg, pr)?)
}

pub(crate) fn read(path: &Path) -> Result<(ExperimentConfig, Progress)> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{CorankCheck, Experiment};
    use crate::model::ModelParams;

    fn sample() -> (ExperimentConfig, Progress) {
        let cfg = ExperimentConfig::new(Experiment::ZeroProb, ModelParams::new(4, 0.5, 1, 3).unwrap());
        let pr = Progress {
            done: 7,
            acc: serde_json::json!({"hits": 2}),
            digest: "00".repeat(32),
            matrices: 7,
            corank: CorankCheck::default(),
            complete: false,
        };
        (cfg, pr)
    }

    #[test]
    fn round_trip() {
        let (cfg, pr) = sample();
        let bytes = encode(&cfg, &pr).unwrap();
        let (c2, p2) = decode(&bytes).unwrap();
        assert_eq!(c2, cfg);
        assert_eq!(p2.done, 7);
    }

    #[test]
    fn corruption_detected() {
        let (cfg, pr) = sample();
        let mut bytes = encode(&cfg, &pr).unwrap();
        bytes[10] ^= 1;
        assert!(matches!(decode(&bytes), Err(Error::Checkpoint(m)) if m.contains("checksum")));
        assert!(decode(&bytes[..20]).is_err());
    }
}
