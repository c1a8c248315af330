//! Bit-exact binary frame for quantized tensors, used for message logging,
//! replay, and cross-implementation interchange.
//!
//! Layout (all little-endian):
//!
//! ```text
//! offset size  field
//! 0      4     magic "QT01"
//! 4      1     k (bit width, 2..=16)
//! 5      4     len (u32, number of codes)
//! 9      8     scale (IEEE-754 binary64)
//! 17     ...   ceil(len*k/8) bytes of packed codes
//! ```
//!
//! Codes are packed LSB-first: code j starts at bit j*k of the payload, least
//! significant bit first. Trailing pad bits must be zero; decoding is strict.

use crate::error::{Error, Result};
use crate::quantize::{MidpointGrid, QuantizedTensor};

pub const MAGIC: [u8; 4] = *b"QT01";
pub const HEADER_BYTES: usize = 17;

/// Total frame size in bits for a message of `len` codes at bit width `k`.
pub fn bits_for_message(len: usize, k: u8) -> u64 {
    let payload_bytes = (len as u64 * k as u64).div_ceil(8);
    8 * (HEADER_BYTES as u64 + payload_bytes)
}

pub fn frame_bytes(len: usize, k: u8) -> usize {
    HEADER_BYTES + ((len * k as usize).div_ceil(8))
}

pub fn encode(q: &QuantizedTensor) -> Result<Vec<u8>> {
    let grid = q.grid()?;
    if q.len() > u32::MAX as usize {
        return Err(Error::Config(format!("tensor too long for frame: {}", q.len())));
    }
    let mut out = Vec::with_capacity(frame_bytes(q.len(), q.k));
    out.extend_from_slice(&MAGIC);
    out.push(q.k);
    out.extend_from_slice(&(q.len() as u32).to_le_bytes());
    out.extend_from_slice(&q.scale.to_le_bytes());

    let payload_bytes = (q.len() * q.k as usize).div_ceil(8);
    let mut payload = vec![0u8; payload_bytes];
    for (j, &code) in q.codes.iter().enumerate() {
        if !grid.code_in_range(code) {
            return Err(Error::Corruption(format!(
                "code {code} out of range for k={} at index {j}",
                q.k
            )));
        }
        let bit = j * q.k as usize;
        let mut c = code as u32;
        for b in 0..q.k as usize {
            if c & 1 == 1 {
                payload[(bit + b) / 8] |= 1 << ((bit + b) % 8);
            }
            c >>= 1;
        }
    }
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<QuantizedTensor> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::Format(format!(
            "frame too short: {} bytes, header needs {HEADER_BYTES}",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let k = bytes[4];
    let grid = MidpointGrid::new(k).map_err(|_| Error::Format(format!("bad bit width {k}")))?;
    let len = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let scale = f64::from_le_bytes(bytes[9..17].try_into().unwrap());

    let payload_bytes = (len * k as usize).div_ceil(8);
    if bytes.len() != HEADER_BYTES + payload_bytes {
        return Err(Error::Format(format!(
            "payload length mismatch: got {} bytes, expected {}",
            bytes.len() - HEADER_BYTES,
            payload_bytes
        )));
    }
    let payload = &bytes[HEADER_BYTES..];

    let mut codes = Vec::with_capacity(len);
    for j in 0..len {
        let bit = j * k as usize;
        let mut c = 0u32;
        for b in 0..k as usize {
            if payload[(bit + b) / 8] >> ((bit + b) % 8) & 1 == 1 {
                c |= 1 << b;
            }
        }
        if !grid.code_in_range(c as u16) {
            return Err(Error::Corruption(format!(
                "code {c} out of range for k={k} at index {j}"
            )));
        }
        codes.push(c as u16);
    }
    // strict: pad bits beyond len*k must be zero
    let used_bits = len * k as usize;
    for bit in used_bits..payload_bytes * 8 {
        if payload[bit / 8] >> (bit % 8) & 1 == 1 {
            return Err(Error::Corruption("nonzero pad bits".into()));
        }
    }
    Ok(QuantizedTensor { scale, k, codes })
}
