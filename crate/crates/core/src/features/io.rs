//! Binary feature file: `u32 n_frames`, `u32 n_slots`, a slot-name table
//! (`u16` byte length + UTF-8 per name), then row-major little-endian `f64`.

use std::io::{Read, Write};

use super::{FeatureError, FeatureMatrix};

pub fn write_features(w: &mut impl Write, m: &FeatureMatrix, names: &[String]) -> Result<(), FeatureError> {
    if names.len() != m.n_slots() {
        return Err(FeatureError::Format(format!("{} names for {} slots", names.len(), m.n_slots())));
    }
    w.write_all(&(m.n_frames() as u32).to_le_bytes())?;
    w.write_all(&(m.n_slots() as u32).to_le_bytes())?;
    for n in names {
        w.write_all(&(n.len() as u16).to_le_bytes())?;
        w.write_all(n.as_bytes())?;
    }
    let mut buf = Vec::with_capacity(m.data().len() * 8);
    for x in m.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_features(r: &mut impl Read) -> Result<(FeatureMatrix, Vec<String>), FeatureError> {
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let n_frames = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let n_slots = u32::from_le_bytes(u32buf) as usize;
    if n_slots == 0 {
        return Err(FeatureError::Format("zero slots".into()));
    }
    let mut names = Vec::with_capacity(n_slots);
    for _ in 0..n_slots {
        let mut lb = [0u8; 2];
        r.read_exact(&mut lb)?;
        let mut s = vec![0u8; u16::from_le_bytes(lb) as usize];
        r.read_exact(&mut s)?;
        names.push(String::from_utf8(s).map_err(|_| FeatureError::Format("slot name is not UTF-8".into()))?);
    }
    let mut raw = vec![0u8; n_frames * n_slots * 8];
    r.read_exact(&mut raw)?;
    let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((FeatureMatrix::from_data(n_slots, data)?, names))
}
