//! Binary weight checkpoint.
//!
//! Layout (little-endian): magic `JCKP`, `u32` version, `u64` architecture
//! hash, `u32` tensor count, per tensor `u32` rank and `u32` dims, then every
//! tensor's `f64` values in order.

use std::io::{Read, Write};

use super::{Network, NnError};

const MAGIC: &[u8; 4] = b"JCKP";
const VERSION: u32 = 1;

pub fn write_checkpoint(w: &mut impl Write, net: &Network, arch_hash: u64) -> Result<(), NnError> {
    let params = net.params();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&arch_hash.to_le_bytes());
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in &params {
        buf.extend_from_slice(&(p.shape.len() as u32).to_le_bytes());
        for d in &p.shape {
            buf.extend_from_slice(&(*d as u32).to_le_bytes());
        }
    }
    for p in &params {
        for v in &p.value {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32, NnError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Loads weights into `net`, which must have the same architecture hash and
/// tensor shapes.
pub fn read_checkpoint(r: &mut impl Read, net: &mut Network, arch_hash: u64) -> Result<(), NnError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let mut hb = [0u8; 8];
    r.read_exact(&mut hb)?;
    let hash = u64::from_le_bytes(hb);
    if hash != arch_hash {
        return Err(NnError::Checkpoint(format!("architecture hash {hash:016x} != {arch_hash:016x}")));
    }
    let n = read_u32(r)? as usize;
    let expected: Vec<Vec<usize>> = net.params().iter().map(|p| p.shape.clone()).collect();
    if n != expected.len() {
        return Err(NnError::Checkpoint(format!("{n} tensors, network has {}", expected.len())));
    }
    for (k, want) in expected.iter().enumerate() {
        let rank = read_u32(r)? as usize;
        let dims = (0..rank).map(|_| read_u32(r).map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        if &dims != want {
            return Err(NnError::Checkpoint(format!("tensor {k} has shape {dims:?}, expected {want:?}")));
        }
    }
    let mut values = Vec::with_capacity(n);
    for shape in &expected {
        let len: usize = shape.iter().product();
        let mut raw = vec![0u8; len * 8];
        r.read_exact(&mut raw)?;
        values.push(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect());
    }
    net.set_param_values(&values)
}
