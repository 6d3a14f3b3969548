//! `params.bin`: little-endian header (`CGNN`, version, F, H, flags) followed
//! by row-major f64 tensors in the order w_enc, slope, [w_stack, slope_stack],
//! w_reg.

use std::fs;
use std::path::Path;

use crate::encoder::ModelParams;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

const MAGIC: &[u8; 4] = b"CGNN";
const VERSION: u32 = 1;
const FLAG_STACK: u32 = 1;

pub fn encode_params(p: &ModelParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * p.num_scalars());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(p.feature_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(p.hidden_dim() as u32).to_le_bytes());
    let flags = if p.has_stack() { FLAG_STACK } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    for (_, t) in p.tensors() {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint(format!("truncated at byte {} (file has {})", self.pos, self.bytes.len())));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DenseMatrix> {
        let data = (0..rows * cols).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        DenseMatrix::from_vec(rows, cols, data)
    }
}

pub fn decode_params(bytes: &[u8]) -> Result<ModelParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let f = r.u32()? as usize;
    let h = r.u32()? as usize;
    let flags = r.u32()?;
    if flags & !FLAG_STACK != 0 {
        return Err(Error::Checkpoint(format!("unknown flags {flags:#x}")));
    }
    let w_enc = r.matrix(f, h)?;
    let slope = r.f64()?;
    let (w_stack, slope_stack) = if flags & FLAG_STACK != 0 {
        (Some(r.matrix(h, h)?), r.f64()?)
    } else {
        (None, crate::encoder::DEFAULT_PRELU_SLOPE)
    };
    let w_reg = r.matrix(h, h)?;
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let p = ModelParams { w_enc, slope, w_stack, slope_stack, w_reg };
    if !p.is_finite() {
        return Err(Error::Checkpoint("non-finite parameter".into()));
    }
    Ok(p)
}

pub fn save_checkpoint(p: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_params(p)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    decode_params(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::init_params;
    use crate::rng::Prng;

    #[test]
    fn round_trip_is_bit_exact() {
        for stack in [false, true] {
            let p = init_params(&mut Prng::new(2), 5, 3, stack).unwrap();
            let bytes = encode_params(&p);
            let back = decode_params(&bytes).unwrap();
            assert_eq!(back, p);
            assert_eq!(encode_params(&back), bytes);
        }
    }

    #[test]
    fn rejects_damage() {
        let p = init_params(&mut Prng::new(2), 2, 2, false).unwrap();
        let bytes = encode_params(&p);
        assert!(decode_params(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_params(&bad).is_err());
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(decode_params(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(decode_params(&long).is_err());
    }
}
