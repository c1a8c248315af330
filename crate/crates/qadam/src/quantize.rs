//! Quantization operators over a symmetric midpoint grid, plus the ternary
//! operator and empirical contraction-factor measurement.
//!
//! A k-bit grid holds the 2^k - 1 uniformly spaced levels
//! {-1, ..., -1/(2^(k-1)-1), 0, 1/(2^(k-1)-1), ..., 1}. A quantized vector is
//! the pair (scale, codes) with scale = max-abs of the source and codes the
//! grid indices of the nearest levels.

use crate::error::{Error, Result};
use crate::tensor::{Norm, Tensor};
use serde::{Deserialize, Serialize};

pub const MIN_BITS: u8 = 2;
pub const MAX_BITS: u8 = 16;

/// The symmetric level set for a k-bit quantizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MidpointGrid {
    k: u8,
}

impl MidpointGrid {
    pub fn new(k: u8) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&k) {
            return Err(Error::Config(format!(
                "bit width k must be in [{MIN_BITS},{MAX_BITS}], got {k}"
            )));
        }
        Ok(MidpointGrid { k })
    }

    pub fn bits(&self) -> u8 {
        self.k
    }

    /// Number of levels, 2^k - 1.
    pub fn level_count(&self) -> u32 {
        (1u32 << self.k) - 1
    }

    /// Half the index range: 2^(k-1) - 1, also the index of level 0.
    pub fn half(&self) -> u32 {
        (1u32 << (self.k - 1)) - 1
    }

    pub fn zero_code(&self) -> u16 {
        self.half() as u16
    }

    /// Level value at a code, (code - half) / half in [-1, 1].
    pub fn level(&self, code: u16) -> f64 {
        let half = self.half() as f64;
        (code as f64 - half) / half
    }

    pub fn code_in_range(&self, code: u16) -> bool {
        (code as u32) < self.level_count()
    }
}

/// Scale factor plus packed grid indices; the only payload that crosses the
/// server/worker boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedTensor {
    pub scale: f64,
    pub k: u8,
    pub codes: Vec<u16>,
}

impl QuantizedTensor {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn grid(&self) -> Result<MidpointGrid> {
        MidpointGrid::new(self.k)
    }
}

/// Nearest-level quantization against the k-bit grid. Scale is the max-abs
/// of the input; grid ties round away from zero. The all-zero vector maps to
/// scale 0 with every code at the zero level.
pub fn quantize_midpoint(x: &Tensor, k: u8) -> Result<QuantizedTensor> {
    let grid = MidpointGrid::new(k)?;
    let scale = x.norm(Norm::LInf);
    if scale == 0.0 {
        return Ok(QuantizedTensor {
            scale: 0.0,
            k,
            codes: vec![grid.zero_code(); x.len()],
        });
    }
    let half = grid.half() as f64;
    let codes = x
        .as_slice()
        .iter()
        .map(|&xi| {
            // f64::round breaks .5 ties away from zero, the convention the
            // multi-worker sign symmetry relies on.
            let u = (xi / scale) * half;
            (u.round() as i64 + grid.half() as i64) as u16
        })
        .collect();
    Ok(QuantizedTensor { scale, k, codes })
}

/// Three-level quantizer: coordinates above half the max-abs snap to
/// +/- max-abs, the rest to zero. Boundary equality maps to zero. Emitted on
/// the k=2 grid {-1, 0, 1}.
pub fn quantize_ternary(x: &Tensor) -> QuantizedTensor {
    let scale = x.norm(Norm::LInf);
    let threshold = scale / 2.0;
    let codes = x
        .as_slice()
        .iter()
        .map(|&xi| {
            if xi > threshold {
                2u16
            } else if xi < -threshold {
                0u16
            } else {
                1u16
            }
        })
        .collect();
    QuantizedTensor { scale, k: 2, codes }
}

/// Reconstructs scale * level for every code.
pub fn dequantize(q: &QuantizedTensor) -> Result<Tensor> {
    let grid = q.grid()?;
    let mut data = Vec::with_capacity(q.codes.len());
    for (i, &code) in q.codes.iter().enumerate() {
        if !grid.code_in_range(code) {
            return Err(Error::Corruption(format!(
                "code {code} out of range for k={} at index {i}",
                q.k
            )));
        }
        data.push(q.scale * grid.level(code));
    }
    Tensor::from_vec(data)
}

/// Empirical contraction factor delta = 1 - |x - dq|_2 / |x|_2 in (0, 1];
/// 1 means the quantization was exact. Undefined for a zero input.
pub fn contraction_factor(x: &Tensor, dequantized: &Tensor) -> Result<f64> {
    let xn = x.norm(Norm::L2);
    if xn == 0.0 {
        return Err(Error::Domain(
            "contraction factor undefined for zero input".into(),
        ));
    }
    let err = x.sub(dequantized)?.norm(Norm::L2);
    Ok(1.0 - err / xn)
}

/// Quantizer mode: exact pass-through, the three-level operator, or a k-bit
/// midpoint grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantizer {
    Identity,
    Ternary,
    Midpoint(u8),
}

impl std::fmt::Display for Quantizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Quantizer::Identity => write!(f, "fp"),
            Quantizer::Ternary => write!(f, "ternary"),
            Quantizer::Midpoint(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for Quantizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fp" => Ok(Quantizer::Identity),
            "ternary" => Ok(Quantizer::Ternary),
            _ => {
                let k: u8 = s.parse().map_err(|_| {
                    Error::Config(format!(
                        "quantizer must be \"fp\", \"ternary\", or a bit width in \
                         [{MIN_BITS},{MAX_BITS}], got {s:?}"
                    ))
                })?;
                let q = Quantizer::Midpoint(k);
                q.validate()?;
                Ok(q)
            }
        }
    }
}

/// A vector prepared for the wire: either full precision (identity mode,
/// counted at 64 bits per coordinate) or a quantized payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CompressedTensor {
    Fp(Tensor),
    Quantized(QuantizedTensor),
}

impl Quantizer {
    pub fn validate(&self) -> Result<()> {
        if let Quantizer::Midpoint(k) = self {
            MidpointGrid::new(*k)?;
        }
        Ok(())
    }

    pub fn compress(&self, x: &Tensor) -> Result<CompressedTensor> {
        match self {
            Quantizer::Identity => Ok(CompressedTensor::Fp(x.clone())),
            Quantizer::Ternary => Ok(CompressedTensor::Quantized(quantize_ternary(x))),
            Quantizer::Midpoint(k) => Ok(CompressedTensor::Quantized(quantize_midpoint(x, *k)?)),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Quantizer::Identity)
    }
}

impl CompressedTensor {
    pub fn decompress(&self) -> Result<Tensor> {
        match self {
            CompressedTensor::Fp(t) => Ok(t.clone()),
            CompressedTensor::Quantized(q) => dequantize(q),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            CompressedTensor::Fp(t) => t.len(),
            CompressedTensor::Quantized(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Message size in bits: the wire-frame size for quantized payloads,
    /// 64 bits per coordinate for full precision.
    pub fn bits(&self) -> u64 {
        match self {
            CompressedTensor::Fp(t) => 64 * t.len() as u64,
            CompressedTensor::Quantized(q) => crate::wire::bits_for_message(q.len(), q.k),
        }
    }

    /// Empirical contraction factor against the source vector; None when the
    /// source is zero (delta undefined) or the payload is exact.
    pub fn measure_contraction(&self, source: &Tensor) -> Result<Option<f64>> {
        match self {
            CompressedTensor::Fp(_) => Ok(Some(1.0)),
            CompressedTensor::Quantized(_) => {
                if source.norm(Norm::L2) == 0.0 {
                    Ok(None)
                } else {
                    Ok(Some(contraction_factor(source, &self.decompress()?)?))
                }
            }
        }
    }
}
