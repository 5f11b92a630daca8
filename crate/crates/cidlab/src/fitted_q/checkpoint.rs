//! Versioned binary container for a fitted policy.
//!
//! Layout, all integers little-endian, floats as IEEE-754 bit patterns:
//!
//! ```text
//! magic "CIDQ" | u32 version | u32 stages | u32 input_width | u32 window
//! u8 has_stats | [input_width f64 means, input_width f64 stds]
//! per stage: u8 present | f64 target_mean | f64 target_std
//!            u8 kind | u64 param_len | param bytes
//! ```
//!
//! Writing the same ensemble twice yields identical bytes, so checkpoint
//! files can be compared by hash.

use std::path::Path;

use super::regressor::{load_regressor, RegressorKind};
use super::{Normalizer, QEnsemble, TargetScale};
use thiserror::Error;

const MAGIC: &[u8; 4] = b"CIDQ";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a policy checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint corrupt: {0}")]
    Corrupt(String),
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_bits().to_le_bytes());
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.buf.len() {
            return Err(CheckpointError::Corrupt(format!(
                "wanted {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub(crate) fn is_done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Serializes a policy to its canonical byte form.
pub fn write_ensemble(ensemble: &QEnsemble) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, ensemble.stages.len() as u32);
    put_u32(&mut out, ensemble.input_width as u32);
    put_u32(&mut out, ensemble.window as u32);
    match &ensemble.norm {
        None => out.push(0),
        Some(norm) => {
            out.push(1);
            for &m in &norm.mean {
                put_f64(&mut out, m);
            }
            for &s in &norm.std {
                put_f64(&mut out, s);
            }
        }
    }
    for (t, stage) in ensemble.stages.iter().enumerate() {
        match stage {
            None => out.push(0),
            Some(reg) => {
                out.push(1);
                let scale = ensemble.scales[t];
                put_f64(&mut out, scale.mean);
                put_f64(&mut out, scale.std);
                out.push(reg.kind().tag());
                let mut params = Vec::new();
                reg.write_params(&mut params);
                put_u64(&mut out, params.len() as u64);
                out.extend_from_slice(&params);
            }
        }
    }
    out
}

/// Parses a policy from checkpoint bytes.
pub fn read_ensemble(bytes: &[u8]) -> Result<QEnsemble, CheckpointError> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let stages = r.u32()? as usize;
    let input_width = r.u32()? as usize;
    let window = r.u32()? as usize;
    let norm = match r.u8()? {
        0 => None,
        1 => {
            let mut mean = Vec::with_capacity(input_width);
            for _ in 0..input_width {
                mean.push(r.f64()?);
            }
            let mut std = Vec::with_capacity(input_width);
            for _ in 0..input_width {
                std.push(r.f64()?);
            }
            Some(Normalizer { mean, std })
        }
        v => return Err(CheckpointError::Corrupt(format!("bad stats flag {v}"))),
    };
    let mut out = QEnsemble {
        stages: Vec::with_capacity(stages),
        norm,
        scales: Vec::with_capacity(stages),
        input_width,
        window,
    };
    for t in 0..stages {
        match r.u8()? {
            0 => {
                out.stages.push(None);
                out.scales.push(TargetScale { mean: 0.0, std: 1.0 });
            }
            1 => {
                let mean = r.f64()?;
                let std = r.f64()?;
                let kind = RegressorKind::from_tag(r.u8()?)
                    .ok_or_else(|| CheckpointError::Corrupt(format!("stage {t}: bad kind")))?;
                let len = r.u64()? as usize;
                let params = r.take(len)?;
                out.stages.push(Some(load_regressor(kind, params)?));
                out.scales.push(TargetScale { mean, std });
            }
            v => return Err(CheckpointError::Corrupt(format!("stage {t}: bad flag {v}"))),
        }
    }
    if !r.is_done() {
        return Err(CheckpointError::Corrupt("trailing bytes".into()));
    }
    Ok(out)
}

pub fn save_checkpoint(path: &Path, ensemble: &QEnsemble) -> Result<(), CheckpointError> {
    Ok(std::fs::write(path, write_ensemble(ensemble))?)
}

pub fn load_checkpoint(path: &Path) -> Result<QEnsemble, CheckpointError> {
    read_ensemble(&std::fs::read(path)?)
}
