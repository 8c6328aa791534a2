//! Next-token predictor backends.
//!
//! A [`Backend`] tokenizes text and scores the next token given everything
//! it has been fed since its last reset. A [`Session`] sits on top and owns
//! the sliding context window: once the window would exceed `L` tokens the
//! oldest `C` are dropped and the backend is re-primed with the survivors.
//! Temperature scaling and softmax happen here, in `f64`, so every backend
//! shares one numeric path.

mod stub;
pub mod wire;

use std::fmt;
use std::str::FromStr;

pub use stub::StubBackend;
pub use wire::{ExternalBackend, WireClient};

use crate::cdf::Distribution;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_CONTEXT_WINDOW: usize = 2048;
pub const DEFAULT_SLIDE: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Stub,
    External,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackendDescriptor {
    pub vocab_size: usize,
    /// Window length `L`.
    pub context_window: usize,
    /// Tokens dropped per slide, `C`.
    pub slide_amount: usize,
    pub kind: BackendKind,
}

impl BackendDescriptor {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 {
            return Err(Error::Backend("empty vocabulary".into()));
        }
        if self.slide_amount == 0 || self.slide_amount >= self.context_window {
            return Err(Error::Backend(format!(
                "slide {} must lie in (0, {})",
                self.slide_amount, self.context_window
            )));
        }
        Ok(())
    }
}

/// Raw next-token scores as produced by a backend.
#[derive(Clone, Debug, PartialEq)]
pub enum Scores {
    /// Pre-softmax logits.
    Logits(Vec<f32>),
    /// Non-negative integer weights; `softmax(ln w / t)`, which at `t = 1`
    /// reduces to `w / sum(w)` without any transcendental calls.
    Weights(Vec<u64>),
}

impl Scores {
    pub fn len(&self) -> usize {
        match self {
            Scores::Logits(v) => v.len(),
            Scores::Weights(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Temperature-scaled softmax in `f64`.
    pub fn to_distribution<F: Scalar>(&self, temperature: f64) -> Result<Distribution<F>> {
        if !temperature.is_finite() || temperature <= 0.0 {
            return Err(Error::Backend(format!("temperature {temperature} is not positive")));
        }
        let probs: Vec<f64> = match self {
            Scores::Logits(logits) => {
                if logits.iter().any(|l| !l.is_finite()) {
                    return Err(Error::Backend("non-finite logit".into()));
                }
                softmax(logits.iter().map(|&l| f64::from(l) / temperature))
            }
            Scores::Weights(w) if temperature == 1.0 => {
                let total: u64 = w.iter().sum();
                if total == 0 {
                    return Err(Error::Backend("all weights are zero".into()));
                }
                let total = total as f64;
                w.iter().map(|&x| x as f64 / total).collect()
            }
            Scores::Weights(w) => {
                if w.iter().all(|&x| x == 0) {
                    return Err(Error::Backend("all weights are zero".into()));
                }
                softmax(w.iter().map(|&x| (x as f64).ln() / temperature))
            }
        };
        Ok(Distribution::from_vec_unchecked(
            probs.into_iter().map(|p| F::from_f64(p).unwrap()).collect(),
        ))
    }
}

/// Softmax with max subtraction; `-inf` inputs get probability zero.
pub fn softmax(logits: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let max = logits.clone().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub trait Backend: Send {
    fn descriptor(&self) -> &BackendDescriptor;

    fn tokenize(&mut self, text: &[u8]) -> Result<Vec<u32>>;

    fn detokenize(&mut self, tokens: &[u32]) -> Result<Vec<u8>>;

    /// Forget all context.
    fn reset(&mut self) -> Result<()>;

    /// Append `tokens` to the context and score the token that follows.
    fn eval(&mut self, tokens: &[u32]) -> Result<Scores>;
}

/// Which backend to instantiate, one instance per worker.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum BackendSpec {
    #[default]
    Stub,
    /// Command line of a child process speaking the wire protocol.
    External(String),
}

impl BackendSpec {
    pub fn create(&self) -> Result<Box<dyn Backend>> {
        match self {
            BackendSpec::Stub => Ok(Box::new(StubBackend::new())),
            BackendSpec::External(cmd) => Ok(Box::new(ExternalBackend::spawn(cmd)?)),
        }
    }
}

impl FromStr for BackendSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "stub" => Ok(BackendSpec::Stub),
            Some(("external", cmd)) if !cmd.trim().is_empty() => Ok(BackendSpec::External(cmd.to_string())),
            _ => Err(Error::Backend(format!(
                "unknown backend {s:?}, expected `stub` or `external:<command>`"
            ))),
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Stub => f.write_str("stub"),
            BackendSpec::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

/// Per-worker prediction state over a backend.
pub struct Session {
    backend: Box<dyn Backend>,
    desc: BackendDescriptor,
    window: Vec<u32>,
    /// Tail of `window` the backend has not been fed yet.
    unsent: usize,
    needs_reprime: bool,
    advanced: u64,
    slides: u64,
}

impl Session {
    pub fn new(backend: Box<dyn Backend>) -> Result<Self> {
        let desc = backend.descriptor().clone();
        desc.validate()?;
        Ok(Self {
            backend,
            window: Vec::with_capacity(desc.context_window + 1),
            desc,
            unsent: 0,
            needs_reprime: false,
            advanced: 0,
            slides: 0,
        })
    }

    pub fn descriptor(&self) -> &BackendDescriptor {
        &self.desc
    }

    pub fn backend_mut(&mut self) -> &mut dyn Backend {
        self.backend.as_mut()
    }

    /// Tokens the next prediction conditions on.
    pub fn window(&self) -> &[u32] {
        &self.window
    }

    pub fn advanced(&self) -> u64 {
        self.advanced
    }

    pub fn slides(&self) -> u64 {
        self.slides
    }

    pub fn advance(&mut self, token: u32) -> Result<()> {
        if token as usize >= self.desc.vocab_size {
            return Err(Error::Backend(format!(
                "token {token} outside vocabulary of {}",
                self.desc.vocab_size
            )));
        }
        self.window.push(token);
        self.unsent += 1;
        self.advanced += 1;
        if self.window.len() > self.desc.context_window {
            self.window.drain(..self.desc.slide_amount);
            self.needs_reprime = true;
            self.slides += 1;
        }
        Ok(())
    }

    pub fn next_distribution<F: Scalar>(&mut self, temperature: f64) -> Result<Distribution<F>> {
        let scores = if self.needs_reprime {
            self.backend.reset()?;
            let scores = self.backend.eval(&self.window)?;
            self.needs_reprime = false;
            scores
        } else {
            let start = self.window.len() - self.unsent;
            self.backend.eval(&self.window[start..])?
        };
        self.unsent = 0;
        if scores.len() != self.desc.vocab_size {
            return Err(Error::VocabMismatch {
                expected: self.desc.vocab_size,
                got: scores.len(),
            });
        }
        scores.to_distribution(temperature)
    }
}
