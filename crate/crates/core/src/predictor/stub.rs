use super::{Backend, BackendDescriptor, BackendKind, Scores, DEFAULT_CONTEXT_WINDOW, DEFAULT_SLIDE};
use crate::error::{Error, Result};

const VOCAB: usize = 256;

/// Byte-level bigram predictor used when no neural model is available.
///
/// Tokens are bytes. The score for byte `x` after byte `b` is
/// `1 + 256 * count(b -> x)`, i.e. a uniform prior of weight one mixed with
/// the empirical bigram counts since the last reset. Everything is integer
/// arithmetic, so predictions are identical on every platform.
#[derive(Clone, Debug)]
pub struct StubBackend {
    desc: BackendDescriptor,
    bigrams: Vec<u32>,
    last: Option<u32>,
}

impl Default for StubBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl StubBackend {
    pub fn new() -> Self {
        Self::with_window(DEFAULT_CONTEXT_WINDOW, DEFAULT_SLIDE)
    }

    pub fn with_window(context_window: usize, slide_amount: usize) -> Self {
        Self {
            desc: BackendDescriptor {
                vocab_size: VOCAB,
                context_window,
                slide_amount,
                kind: BackendKind::Stub,
            },
            bigrams: vec![0; VOCAB * VOCAB],
            last: None,
        }
    }
}

impl Backend for StubBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.desc
    }

    fn tokenize(&mut self, text: &[u8]) -> Result<Vec<u32>> {
        Ok(text.iter().map(|&b| u32::from(b)).collect())
    }

    fn detokenize(&mut self, tokens: &[u32]) -> Result<Vec<u8>> {
        tokens
            .iter()
            .map(|&t| u8::try_from(t).map_err(|_| Error::Backend(format!("token {t} is not a byte"))))
            .collect()
    }

    fn reset(&mut self) -> Result<()> {
        self.bigrams.fill(0);
        self.last = None;
        Ok(())
    }

    fn eval(&mut self, tokens: &[u32]) -> Result<Scores> {
        for &t in tokens {
            if t as usize >= VOCAB {
                return Err(Error::Backend(format!("token {t} is not a byte")));
            }
            if let Some(prev) = self.last {
                let cell = &mut self.bigrams[prev as usize * VOCAB + t as usize];
                *cell = cell.saturating_add(1);
            }
            self.last = Some(t);
        }
        let weights = match self.last {
            None => vec![1; VOCAB],
            Some(prev) => {
                let row = &self.bigrams[prev as usize * VOCAB..][..VOCAB];
                row.iter().map(|&c| 1 + VOCAB as u64 * u64::from(c)).collect()
            }
        };
        Ok(Scores::Weights(weights))
    }
}
