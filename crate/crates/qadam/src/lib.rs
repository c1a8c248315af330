//! Quantized Adam with error feedback, plus a synchronous parameter-server
//! simulator, a bit-exact wire codec for quantized tensors, and verification
//! of the analysis constants and per-step invariants.
//!
//! Module map:
//! - [`tensor`]: dense `f64` vectors with the norms used throughout
//! - [`quantize`]: midpoint-grid and ternary quantizers, contraction measures
//! - [`wire`]: byte-level encode/decode of quantized tensors
//! - [`optimizer`]: the quantized Adam step with error feedback
//! - [`problems`]: test objectives with seeded stochastic gradient oracles
//! - [`distributed`]: server/worker rounds over the wire codec
//! - [`trace`]: per-round records, CSV/JSON export
//! - [`verify`]: analysis constants and inequality checks over traces
//! - [`harness`]: run/sweep/verify entry points behind the CLI

pub mod distributed;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod problems;
pub mod quantize;
pub mod tensor;
pub mod trace;
pub mod verify;
pub mod wire;

pub use error::{Error, Result};
