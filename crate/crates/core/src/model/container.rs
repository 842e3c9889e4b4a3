//! Binary model file.
//!
//! ```text
//! "GRVM"  u32 version  u64 header_len  header (JSON)
//! u64 block_count
//! per block: u32 name_len  name  u64 ndims  u64 dims[ndims]  f64 values[..]
//! ```
//! All integers and floats are little-endian; values are row-major.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::ModelParameters;
use super::ModelError;
use crate::tensor::Matrix;

pub const MAGIC: &[u8; 4] = b"GRVM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    config: ModelConfig,
    portfolio: Vec<String>,
    vocab_fingerprint: String,
    vocab_len: usize,
}

pub fn to_bytes(params: &ModelParameters) -> Vec<u8> {
    let header = Header {
        format_version: FORMAT_VERSION,
        config: params.config.clone(),
        portfolio: params.portfolio.clone(),
        vocab_fingerprint: params.vocab_fingerprint.clone(),
        vocab_len: params.vocab_len,
    };
    let value = serde_json::to_value(&header).expect("header serializes");
    let json = serde_json::to_vec(&value).expect("header serializes");

    let mut out = Vec::with_capacity(64 + json.len() + params.num_scalars() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(params.blocks().len() as u64).to_le_bytes());
    for (name, block) in params.names().iter().zip(params.blocks()) {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&2u64.to_le_bytes());
        out.extend_from_slice(&(block.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(block.cols() as u64).to_le_bytes());
        for x in block.as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| ModelError::Container(format!("truncated at byte {}", self.at)))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize, ModelError> {
        usize::try_from(self.u64()?).map_err(|_| ModelError::Container("length overflow".into()))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelParameters, ModelError> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(ModelError::Container("not a model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let header_len = r.len()?;
    let header: Header = serde_json::from_slice(r.take(header_len)?)
        .map_err(|e| ModelError::Container(format!("header: {e}")))?;
    if header.format_version != version {
        return Err(ModelError::Container("header version disagrees with preamble".into()));
    }
    let mut params = ModelParameters::empty(
        header.config,
        header.vocab_fingerprint,
        header.vocab_len,
        header.portfolio,
    )?;

    let count = r.len()?;
    if count != params.blocks().len() {
        return Err(ModelError::Container(format!(
            "expected {} parameter blocks, found {count}",
            params.blocks().len()
        )));
    }
    let mut blocks = Vec::with_capacity(count);
    for (expected, template) in params.names().iter().zip(params.blocks()) {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| ModelError::Container("block name is not UTF-8".into()))?;
        if name != expected {
            return Err(ModelError::Container(format!(
                "expected block '{expected}', found '{name}'"
            )));
        }
        let ndims = r.len()?;
        let dims = (0..ndims).map(|_| r.len()).collect::<Result<Vec<_>, _>>()?;
        let shape = match dims[..] {
            [rows, cols] => (rows, cols),
            [n] => (1, n),
            _ => {
                return Err(ModelError::Container(format!("block '{name}': {ndims} dims")));
            }
        };
        if shape != template.shape() {
            return Err(ModelError::Container(format!(
                "block '{name}': shape {shape:?}, expected {:?}",
                template.shape()
            )));
        }
        let raw = r.take(shape.0 * shape.1 * 8)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        blocks.push(Matrix::from_vec(shape.0, shape.1, values));
    }
    if r.at != bytes.len() {
        return Err(ModelError::Container("trailing bytes after last block".into()));
    }
    params.set_blocks(blocks)?;
    Ok(params)
}

pub fn save(params: &ModelParameters, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, to_bytes(params)).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load(path: &Path) -> Result<ModelParameters, ModelError> {
    let bytes = std::fs::read(path).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    from_bytes(&bytes)
}
