//! Lossless compression with an ensemble next-token predictor driving a
//! 32-bit arithmetic coder.
//!
//! A pluggable backend (an in-process byte-bigram stub, or an external
//! process speaking a small binary protocol) is combined with an online
//! token n-gram, an adaptive bias head and an exponential-weights mixer.
//! Each predicted distribution is quantized to an integer CDF and coded.
//! Output is packed into the NC05 (text) or NC06 (mixed text/binary)
//! container.
//!
//! ```
//! use lmzip::{compress_file, decompress_file, Config};
//!
//! let cfg = Config { workers: Some(2), ..Config::default() };
//! let text = b"to be or not to be, that is the question\n".repeat(8);
//! let packed = compress_file(&text, &cfg).unwrap();
//! assert!(packed.len() < text.len());
//! assert_eq!(decompress_file(&packed, &cfg).unwrap(), text);
//! ```
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! pipeline runs in `f64`.

pub mod arith;
pub mod cdf;
pub mod container;
pub mod ensemble;
pub mod error;
pub mod ngram;
pub mod pipeline;
pub mod predictor;
pub mod scalar;
pub mod segmenter;
pub mod shannon;

pub use arith::{Decoder, EncodedStream, Encoder};
pub use cdf::{quantize, Distribution, QuantizedCdf, CDF_16, CDF_24};
pub use container::Settings;
pub use ensemble::{BiasHead, Ensemble, EnsembleConfig, Features, MixerState};
pub use error::{Error, Result};
pub use ngram::NgramModel;
pub use pipeline::{compress_file, compress_text, decompress_file, decompress_text, Config};
pub use predictor::{Backend, BackendSpec, Session};
pub use scalar::Scalar;
pub use shannon::shannon_entropy;

pub type Distribution64 = Distribution<f64>;
pub type Distribution32 = Distribution<f32>;
pub type Mixer64 = MixerState<f64>;
pub type Mixer32 = MixerState<f32>;
pub type BiasHead64 = BiasHead<f64>;
pub type BiasHead32 = BiasHead<f32>;
pub type Ensemble64 = Ensemble<f64>;
pub type Ensemble32 = Ensemble<f32>;
