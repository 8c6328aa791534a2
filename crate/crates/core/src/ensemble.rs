//! Per-token ensemble prediction.
//!
//! Each step picks one of three routes:
//!
//! * **warmup**: the first `warmup_tokens` positions use the backend alone,
//!   passed through the bias head;
//! * **skip**: when the n-gram entropy is below the threshold its
//!   distribution is used directly and the backend is not queried;
//! * **full**: the head-adjusted backend distribution is linearly mixed
//!   with the n-gram distribution.
//!
//! After the token is known, every component that produced a distribution
//! on this step is updated, in a fixed order, so that compressor and
//! decompressor stay in lockstep.

use crate::cdf::{entropy_bits, Distribution};
use crate::error::Result;
use crate::ngram::NgramModel;
use crate::predictor::Session;
use crate::scalar::Scalar;

pub const DEFAULT_WARMUP: u64 = 100;
pub const DEFAULT_SKIP_THRESHOLD: f64 = 1.5;
pub const DEFAULT_PRIMARY_WEIGHT: f64 = 0.85;
pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_HEAD_RATE: f64 = 0.001;

/// Probabilities below this are clamped before taking logs in the mixer.
pub const LOG_FLOOR: f64 = 1e-12;

/// Linear mixture with exponential-weights updates, kept in log space.
#[derive(Clone, Debug, PartialEq)]
pub struct MixerState<F = f64> {
    log_weights: Vec<F>,
    eta: F,
}

impl<F: Scalar> MixerState<F> {
    /// The first model gets `primary_weight`, the rest share the remainder.
    pub fn new(models: usize, primary_weight: f64, eta: f64) -> Self {
        assert!(models >= 1);
        let weights: Vec<f64> = if models == 1 {
            vec![1.0]
        } else {
            let rest = (1.0 - primary_weight) / (models - 1) as f64;
            std::iter::once(primary_weight)
                .chain(std::iter::repeat_n(rest, models - 1))
                .collect()
        };
        Self::with_weights(&weights, eta)
    }

    pub fn with_weights(weights: &[f64], eta: f64) -> Self {
        let mut state = Self {
            log_weights: weights.iter().map(|&w| F::lit(w.ln())).collect(),
            eta: F::lit(eta),
        };
        state.normalize();
        state
    }

    pub fn models(&self) -> usize {
        self.log_weights.len()
    }

    pub fn log_weights(&self) -> &[F] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<F> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn mix(&self, preds: &[&Distribution<F>]) -> Distribution<F> {
        assert_eq!(preds.len(), self.models());
        let mut out = vec![F::zero(); preds[0].len()];
        for (p, w) in preds.iter().zip(self.weights()) {
            for (o, &x) in out.iter_mut().zip(p.probs()) {
                *o = *o + w * x;
            }
        }
        Distribution::from_vec_unchecked(out)
    }

    pub fn update(&mut self, preds: &[&Distribution<F>], observed: usize) {
        let floor = F::lit(LOG_FLOOR);
        for (lw, p) in self.log_weights.iter_mut().zip(preds) {
            *lw = *lw + self.eta * p.get(observed).max(floor).ln();
        }
        self.normalize();
    }

    fn normalize(&mut self) {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(F::neg_infinity(), F::max);
        let lse = max + self.log_weights.iter().map(|&w| (w - max).exp()).sum::<F>().ln();
        self.log_weights.iter_mut().for_each(|w| *w = *w - lse);
    }
}

/// Per-token additive bias on the backend's log-probabilities, trained by
/// online SGD on the coding loss.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasHead<F = f64> {
    bias: Vec<F>,
    rate: F,
}

impl<F: Scalar> BiasHead<F> {
    pub fn new(vocab: usize, rate: f64) -> Self {
        Self {
            bias: vec![F::zero(); vocab],
            rate: F::lit(rate),
        }
    }

    pub fn with_bias(bias: Vec<F>, rate: f64) -> Self {
        Self {
            bias,
            rate: F::lit(rate),
        }
    }

    pub fn bias(&self) -> &[F] {
        &self.bias
    }

    /// `softmax(log p + b)`; zero-probability tokens stay at zero.
    pub fn adjust(&self, p: &Distribution<F>) -> Distribution<F> {
        let max = self.bias.iter().copied().fold(F::neg_infinity(), F::max);
        let scaled: Vec<F> = p
            .probs()
            .iter()
            .zip(&self.bias)
            .map(|(&x, &b)| x * (b - max).exp())
            .collect();
        Distribution::from_weights(scaled).unwrap_or_else(|| p.clone())
    }

    /// `b_t -= rate * (p_adj(t) - [t == observed])`.
    pub fn update(&mut self, adjusted: &Distribution<F>, observed: usize) {
        for (t, (b, &q)) in self.bias.iter_mut().zip(adjusted.probs()).enumerate() {
            let target = if t == observed { F::one() } else { F::zero() };
            *b = *b - self.rate * (q - target);
        }
    }
}

/// True when the n-gram is confident enough to bypass the backend.
pub fn should_skip<F: Scalar>(ngram: &Distribution<F>, threshold_bits: f64) -> bool {
    entropy_bits(ngram) < F::lit(threshold_bits)
}

/// Toggleable ensemble components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Features {
    pub ngram: bool,
    pub adaptive_head: bool,
    /// Only takes effect together with `ngram`.
    pub skip: bool,
}

impl Features {
    pub const ALL: Features = Features {
        ngram: true,
        adaptive_head: true,
        skip: true,
    };

    pub const NONE: Features = Features {
        ngram: false,
        adaptive_head: false,
        skip: false,
    };
}

impl Default for Features {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub features: Features,
    pub temperature: f64,
    pub warmup_tokens: u64,
    pub skip_threshold: f64,
    pub primary_weight: f64,
    pub eta: f64,
    pub head_rate: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            features: Features::ALL,
            temperature: 1.0,
            warmup_tokens: DEFAULT_WARMUP,
            skip_threshold: DEFAULT_SKIP_THRESHOLD,
            primary_weight: DEFAULT_PRIMARY_WEIGHT,
            eta: DEFAULT_ETA,
            head_rate: DEFAULT_HEAD_RATE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Warmup,
    Skip,
    Full,
}

/// One step's output plus the intermediate distributions the updates need.
#[derive(Clone, Debug)]
pub struct Prediction<F = f64> {
    pub dist: Distribution<F>,
    pub route: Route,
    adjusted: Option<Distribution<F>>,
    ngram: Option<Distribution<F>>,
}

impl<F> Prediction<F> {
    pub fn skipped(&self) -> bool {
        self.route == Route::Skip
    }

    /// Whether the backend was queried on this step.
    pub fn used_backend(&self) -> bool {
        self.adjusted.is_some()
    }
}

pub struct Ensemble<F: Scalar = f64> {
    cfg: EnsembleConfig,
    session: Session,
    ngram: Option<NgramModel>,
    mixer: MixerState<F>,
    head: Option<BiasHead<F>>,
    position: u64,
}

impl<F: Scalar> Ensemble<F> {
    pub fn new(cfg: EnsembleConfig, session: Session) -> Self {
        let vocab = session.descriptor().vocab_size;
        let features = cfg.features;
        Self {
            ngram: features.ngram.then(|| NgramModel::new(vocab)),
            mixer: MixerState::new(if features.ngram { 2 } else { 1 }, cfg.primary_weight, cfg.eta),
            head: features.adaptive_head.then(|| BiasHead::new(vocab, cfg.head_rate)),
            cfg,
            session,
            position: 0,
        }
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.cfg
    }

    pub fn session_mut(&mut self) -> &mut Session {
        &mut self.session
    }

    pub fn mixer(&self) -> &MixerState<F> {
        &self.mixer
    }

    pub fn head(&self) -> Option<&BiasHead<F>> {
        self.head.as_ref()
    }

    /// Tokens observed so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    fn backend_prediction(&mut self) -> Result<Distribution<F>> {
        let raw = self.session.next_distribution::<F>(self.cfg.temperature)?;
        Ok(match &self.head {
            Some(head) => head.adjust(&raw),
            None => raw,
        })
    }

    pub fn predict_next(&mut self) -> Result<Prediction<F>> {
        if self.position < self.cfg.warmup_tokens {
            let adjusted = self.backend_prediction()?;
            return Ok(Prediction {
                dist: adjusted.clone(),
                route: Route::Warmup,
                adjusted: Some(adjusted),
                ngram: None,
            });
        }

        let ngram = self.ngram.as_ref().map(|m| m.predict::<F>());
        if let Some(p_ng) = &ngram {
            if self.cfg.features.skip && should_skip(p_ng, self.cfg.skip_threshold) {
                return Ok(Prediction {
                    dist: p_ng.clone(),
                    route: Route::Skip,
                    adjusted: None,
                    ngram,
                });
            }
        }

        let adjusted = self.backend_prediction()?;
        let dist = match &ngram {
            Some(p_ng) => self.mixer.mix(&[&adjusted, p_ng]),
            None => adjusted.clone(),
        };
        Ok(Prediction {
            dist,
            route: Route::Full,
            adjusted: Some(adjusted),
            ngram,
        })
    }

    pub fn observe(&mut self, pred: &Prediction<F>, token: u32) -> Result<()> {
        self.session.advance(token)?;
        let t = token as usize;
        if let (Some(head), Some(adjusted)) = (&mut self.head, &pred.adjusted) {
            head.update(adjusted, t);
        }
        if let (Route::Full, Some(adjusted), Some(p_ng)) = (pred.route, &pred.adjusted, &pred.ngram) {
            self.mixer.update(&[adjusted, p_ng], t);
        }
        if let Some(m) = &mut self.ngram {
            m.update(token);
        }
        self.position += 1;
        Ok(())
    }
}
