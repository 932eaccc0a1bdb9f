//! Binary dataset file.
//!
//! Header: `u32 n_samples`, `u32 steps`, `u32 features`, `u8 n_classes`.
//! Each sample: row-major `f32` matrix, `u8` label, then the metadata record
//! `u32 stock`, `u32 day`, `u32 end_minute`, `u32 shift_seconds`, `u8 kind`.
//! All integers and floats are little-endian.

use std::io::{Read, Write};

use super::{DatasetError, Sample, SampleKind, SampleMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub n_samples: u32,
    pub steps: u32,
    pub features: u32,
    pub n_classes: u8,
}

pub fn write_dataset(w: &mut impl Write, samples: &[Sample], n_classes: u8) -> Result<(), DatasetError> {
    let (steps, features) = samples.first().map(|s| (s.steps, s.features)).unwrap_or((0, 0));
    w.write_all(&(samples.len() as u32).to_le_bytes())?;
    w.write_all(&(steps as u32).to_le_bytes())?;
    w.write_all(&(features as u32).to_le_bytes())?;
    w.write_all(&[n_classes])?;
    let mut buf = Vec::with_capacity(steps * features * 4 + 32);
    for s in samples {
        if s.steps != steps || s.features != features {
            return Err(DatasetError::Format("samples have differing shapes".into()));
        }
        buf.clear();
        for x in &s.matrix {
            buf.extend_from_slice(&(*x as f32).to_le_bytes());
        }
        buf.push(s.label);
        for v in [s.meta.stock, s.meta.day, s.meta.end_minute, s.meta.shift_seconds] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.push(s.meta.kind.code());
        w.write_all(&buf)?;
    }
    Ok(())
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

pub fn read_dataset(r: &mut impl Read) -> Result<(DatasetHeader, Vec<Sample>), DatasetError> {
    let mut h = [0u8; 13];
    r.read_exact(&mut h)?;
    let header = DatasetHeader { n_samples: u32_at(&h, 0), steps: u32_at(&h, 4), features: u32_at(&h, 8), n_classes: h[12] };
    let cells = header.steps as usize * header.features as usize;
    let record = cells * 4 + 1 + 16 + 1;
    let mut buf = vec![0u8; record];
    let mut samples = Vec::with_capacity(header.n_samples as usize);
    for _ in 0..header.n_samples {
        r.read_exact(&mut buf)?;
        let matrix = buf[..cells * 4].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        let o = cells * 4;
        let kind = SampleKind::from_code(buf[o + 17]).ok_or(DatasetError::Format(format!("bad kind {}", buf[o + 17])))?;
        let meta = SampleMeta {
            stock: u32_at(&buf, o + 1),
            day: u32_at(&buf, o + 5),
            end_minute: u32_at(&buf, o + 9),
            shift_seconds: u32_at(&buf, o + 13),
            kind,
        };
        samples.push(Sample {
            steps: header.steps as usize,
            features: header.features as usize,
            matrix,
            label: buf[o],
            meta,
        });
    }
    Ok((header, samples))
}
