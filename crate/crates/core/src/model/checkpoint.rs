//! Binary checkpoint format.
//!
//! ```text
//! magic        8 bytes   "ALERTACK"
//! version      u32 LE
//! config_len   u64 LE
//! config       config_len bytes of JSON (ModelConfig)
//! n_params     u32 LE
//! per parameter:
//!   name_len   u32 LE
//!   name       UTF-8
//!   rows, cols u64 LE each
//!   values     rows*cols f64 LE, row-major
//! ```
//! All integers and floats are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{AlertaNet, ModelConfig};
use crate::numerics::Matrix;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ALERTACK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode(net: &AlertaNet) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let config = serde_json::to_vec(&net.config)?;
    buf.extend_from_slice(&(config.len() as u64).to_le_bytes());
    buf.extend_from_slice(&config);
    buf.extend_from_slice(&(net.params.len() as u32).to_le_bytes());
    for (name, m) in net.params.iter() {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(m.rows() as u64).to_le_bytes());
        buf.extend_from_slice(&(m.cols() as u64).to_le_bytes());
        for v in m.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(buf)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<AlertaNet> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "format version {version} is not supported (expected {CHECKPOINT_VERSION})"
        )));
    }
    let config_len = c.u64()? as usize;
    let config: ModelConfig = serde_json::from_slice(c.take(config_len)?)?;
    let mut net = AlertaNet::zeros(config)?;
    let n = c.u32()? as usize;
    if n != net.params.len() {
        return Err(Error::Checkpoint(format!(
            "{n} parameters stored, configuration expects {}",
            net.params.len()
        )));
    }
    for _ in 0..n {
        let name_len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?)
            .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?
            .to_string();
        let rows = c.u64()? as usize;
        let cols = c.u64()? as usize;
        let id = net
            .params
            .id(&name)
            .map_err(|_| Error::Checkpoint(format!("unexpected parameter '{name}'")))?;
        if net.params.value(id).shape() != (rows, cols) {
            return Err(Error::Checkpoint(format!(
                "parameter '{name}' is {rows}x{cols}, configuration expects {}x{}",
                net.params.value(id).rows(),
                net.params.value(id).cols()
            )));
        }
        let raw = c.take(rows * cols * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        *net.params.value_mut(id) = Matrix::from_vec(rows, cols, data)?;
    }
    if c.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(net)
}

pub fn save(net: &AlertaNet, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(net)?)?;
    f.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<AlertaNet> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut cfg = ModelConfig::new(3, 2, 4);
        cfg.tda_normalize = true;
        let net = AlertaNet::init(cfg, 5).unwrap();
        let bytes = encode(&net).unwrap();
        let back = decode(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(encode(&back).unwrap(), bytes);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let net = AlertaNet::init(ModelConfig::new(3, 2, 4), 5).unwrap();
        let bytes = encode(&net).unwrap();
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(decode(&extra).is_err());
    }
}
