//! Versioned binary persistence of softness models.
//!
//! Layout: magic "SGMD", version u16, then a length-prefixed JSON record of
//! the whole model followed by a CRC32 of that record. JSON keeps the format
//! self-describing; the float values round-trip exactly.

use super::{weight_function, SoftnessModel, TrainError};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: [u8; 4] = *b"SGMD";
const VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    VersionMismatch(u16),
    #[error("model file truncated")]
    Truncated,
    #[error("model record checksum mismatch")]
    ChecksumMismatch,
    #[error("corrupt model record: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn save_model(model: &SoftnessModel, path: &Path) -> Result<(), ModelFileError> {
    let record =
        serde_json::to_vec(model).map_err(|e| ModelFileError::Corrupt(e.to_string()))?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(record.len() as u64).to_le_bytes())?;
    out.write_all(&record)?;
    out.write_all(&crc32fast::hash(&record).to_le_bytes())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SoftnessModel, ModelFileError> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| ModelFileError::Truncated)?;
    if magic != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let mut vbuf = [0u8; 2];
    r.read_exact(&mut vbuf).map_err(|_| ModelFileError::Truncated)?;
    let version = u16::from_le_bytes(vbuf);
    if version != VERSION {
        return Err(ModelFileError::VersionMismatch(version));
    }
    let mut lbuf = [0u8; 8];
    r.read_exact(&mut lbuf).map_err(|_| ModelFileError::Truncated)?;
    let len = u64::from_le_bytes(lbuf) as usize;
    if len > 1 << 30 {
        return Err(ModelFileError::Corrupt("record length".into()));
    }
    let mut record = vec![0u8; len];
    r.read_exact(&mut record).map_err(|_| ModelFileError::Truncated)?;
    let mut cbuf = [0u8; 4];
    r.read_exact(&mut cbuf).map_err(|_| ModelFileError::Truncated)?;
    if crc32fast::hash(&record) != u32::from_le_bytes(cbuf) {
        return Err(ModelFileError::ChecksumMismatch);
    }
    serde_json::from_slice(&record).map_err(|e| ModelFileError::Corrupt(e.to_string()))
}

/// CSV export of the learned weight function: `species,r,w,w_tilde`.
pub fn write_weight_csv<W: Write>(
    model: &SoftnessModel,
    dim: usize,
    mut out: W,
) -> Result<(), std::io::Error> {
    writeln!(out, "species,r,w,w_tilde")?;
    for row in weight_function(model, dim) {
        writeln!(out, "{},{},{},{}", row.species, row.r, row.w_raw, row.w_tilde)?;
    }
    Ok(())
}

impl SoftnessModel {
    pub fn save(&self, path: &Path) -> Result<(), ModelFileError> {
        save_model(self, path)
    }

    pub fn load(path: &Path) -> Result<SoftnessModel, ModelFileError> {
        load_model(path)
    }
}

impl From<ModelFileError> for TrainError {
    fn from(e: ModelFileError) -> TrainError {
        TrainError::InvalidConfig(e.to_string())
    }
}
