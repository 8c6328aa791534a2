//! End-to-end compression: chunking, parallel workers, the per-token
//! predict → quantize → encode loop and its decoding mirror, and
//! text/hybrid dispatch at the file level.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::arith::{Decoder, Encoder};
use crate::cdf::quantize;
use crate::container::{
    compress_blob, decompress_blob, read_nc05, read_nc06, write_nc05, write_nc06, CodedChunk, Entry, Nc05, Nc06,
    Settings, MAX_ENTRIES, NC05_MAGIC, NC06_MAGIC,
};
use crate::ensemble::{Ensemble, EnsembleConfig, Features};
use crate::error::{Error, Result};
use crate::predictor::{BackendSpec, Session};
use crate::segmenter::{segment, Region, RegionKind};

pub const MAX_WORKERS: usize = 8;
/// Per-worker memory model, in MB: fixed model footprint, per-worker cost
/// and reserve kept free.
pub const MODEL_MB: u64 = 1169;
pub const WORKER_MB: u64 = 660;
pub const RESERVE_MB: u64 = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Chunk count for compression; `None` derives it from free memory.
    pub workers: Option<usize>,
    /// Cap on concurrently running chunk jobs; `None` runs one thread per chunk.
    pub max_threads: Option<usize>,
    pub temperature: f64,
    pub cdf_bits: u8,
    pub features: Features,
    pub backend: BackendSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            workers: None,
            max_threads: None,
            temperature: 1.0,
            cdf_bits: 24,
            features: Features::ALL,
            backend: BackendSpec::Stub,
        }
    }
}

impl Config {
    pub fn settings(&self) -> Result<Settings> {
        Settings::new(self.features, self.cdf_bits, self.temperature)
    }

    pub fn resolved_workers(&self) -> usize {
        match self.workers {
            Some(n) => n.clamp(1, MAX_WORKERS),
            None => available_memory_mb().map_or(1, worker_count),
        }
    }
}

/// `min(8, 1 + ⌊(free − reserve − model) / per_worker⌋)`, at least 1.
pub fn worker_count(free_mb: u64) -> usize {
    let spare = free_mb.saturating_sub(RESERVE_MB + MODEL_MB);
    (1 + (spare / WORKER_MB) as usize).min(MAX_WORKERS)
}

/// `MemAvailable` from `/proc/meminfo`, where present.
pub fn available_memory_mb() -> Option<u64> {
    let info = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = info.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024)
}

/// Splits after the first newline at or after each target `i·⌈len/n⌉`,
/// or exactly at the target when no newline follows it.
pub fn split_chunks(text: &[u8], n: usize) -> Vec<&[u8]> {
    assert!(n >= 1);
    let len = text.len();
    if len == 0 {
        return Vec::new();
    }
    let step = len.div_ceil(n);
    let mut cuts = vec![0];
    for i in 1..n {
        let target = i * step;
        if target >= len {
            break;
        }
        let cut = match text[target..].iter().position(|&b| b == b'\n') {
            Some(p) => target + p + 1,
            None => target,
        };
        if cut > *cuts.last().unwrap() && cut < len {
            cuts.push(cut);
        }
    }
    cuts.push(len);
    cuts.windows(2).map(|w| &text[w[0]..w[1]]).collect()
}

/// Counters gathered while compressing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub tokens: u64,
    /// Tokens coded from the n-gram alone without querying the backend.
    pub skipped: u64,
    pub chunks: usize,
}

impl Stats {
    pub fn skip_rate(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.skipped as f64 / self.tokens as f64
        }
    }

    fn add(&mut self, other: Stats) {
        self.tokens += other.tokens;
        self.skipped += other.skipped;
        self.chunks += other.chunks;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Compressed {
    pub bytes: Vec<u8>,
    pub stats: Stats,
}

fn ensemble_config(settings: &Settings) -> EnsembleConfig {
    EnsembleConfig {
        features: settings.features,
        temperature: settings.temperature(),
        ..Default::default()
    }
}

fn to_u32(n: u64, what: &'static str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Overflow {
        what,
        count: n as usize,
        max: u32::MAX as usize,
    })
}

fn encode_chunk(chunk: &[u8], settings: &Settings, spec: &BackendSpec) -> Result<(CodedChunk, Stats)> {
    let mut backend = spec.create()?;
    let tokens = backend.tokenize(chunk)?;
    if backend.detokenize(&tokens)? != chunk {
        return Err(Error::TokenizerRoundTrip { len: chunk.len() });
    }
    let mut ensemble = Ensemble::<f64>::new(ensemble_config(settings), Session::new(backend)?);
    let total = settings.cdf_total();
    let mut enc = Encoder::new();
    let mut stats = Stats {
        chunks: 1,
        ..Default::default()
    };
    for &t in &tokens {
        let pred = ensemble.predict_next()?;
        enc.encode(&quantize(&pred.dist, total)?, t as usize)?;
        ensemble.observe(&pred, t)?;
        stats.tokens += 1;
        stats.skipped += u64::from(pred.skipped());
    }
    let stream = enc.finish();
    let coded = CodedChunk {
        token_count: to_u32(tokens.len() as u64, "tokens in a chunk")?,
        bit_count: to_u32(stream.bit_count, "bits in a chunk")?,
        stream: stream.bytes,
    };
    Ok((coded, stats))
}

fn decode_chunk(chunk: &CodedChunk, settings: &Settings, spec: &BackendSpec) -> Result<Vec<u8>> {
    let session = Session::new(spec.create()?)?;
    let mut ensemble = Ensemble::<f64>::new(ensemble_config(settings), session);
    let total = settings.cdf_total();
    let mut dec = Decoder::new(&chunk.stream, u64::from(chunk.bit_count))?;
    let mut tokens = Vec::with_capacity(chunk.token_count as usize);
    for _ in 0..chunk.token_count {
        let pred = ensemble.predict_next()?;
        let t = dec.decode(&quantize(&pred.dist, total)?)? as u32;
        ensemble.observe(&pred, t)?;
        tokens.push(t);
    }
    dec.finish()?;
    ensemble.session_mut().backend_mut().detokenize(&tokens)
}

/// Runs `f` over `items` on up to `threads` scoped threads, keeping input
/// order in the output. The first error in item order wins.
fn parallel_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> Result<R> + Sync) -> Result<Vec<R>> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<R>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock().unwrap() = Some(f(item));
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot is filled"))
        .collect()
}

fn code_text(text: &[u8], cfg: &Config, settings: &Settings) -> Result<(Vec<CodedChunk>, Stats)> {
    let parts = split_chunks(text, cfg.resolved_workers());
    let threads = cfg.max_threads.unwrap_or(parts.len());
    let coded = parallel_map(&parts, threads, |c| encode_chunk(c, settings, &cfg.backend))?;
    let mut stats = Stats::default();
    let chunks = coded
        .into_iter()
        .map(|(c, s)| {
            stats.add(s);
            c
        })
        .collect();
    Ok((chunks, stats))
}

fn decode_text(chunks: &[CodedChunk], cfg: &Config, settings: &Settings) -> Result<Vec<u8>> {
    let threads = cfg.max_threads.unwrap_or(chunks.len());
    Ok(parallel_map(chunks, threads, |c| decode_chunk(c, settings, &cfg.backend))?.concat())
}

pub fn compress_text(text: &[u8], cfg: &Config) -> Result<Vec<u8>> {
    Ok(compress_text_report(text, cfg)?.bytes)
}

pub fn compress_text_report(text: &[u8], cfg: &Config) -> Result<Compressed> {
    let settings = cfg.settings()?;
    let (chunks, stats) = code_text(text, cfg, &settings)?;
    Ok(Compressed {
        bytes: write_nc05(&Nc05 { settings, chunks })?,
        stats,
    })
}

/// Feature flags, precision and temperature come from the header; only the
/// backend and thread settings are taken from `cfg`.
pub fn decompress_text(nc05: &[u8], cfg: &Config) -> Result<Vec<u8>> {
    let c = read_nc05(nc05)?;
    decode_text(&c.chunks, cfg, &c.settings)
}

pub fn compress_file(data: &[u8], cfg: &Config) -> Result<Vec<u8>> {
    Ok(compress_file_report(data, cfg)?.bytes)
}

/// NC05 when the whole input is one text region (or empty), NC06 otherwise.
pub fn compress_file_report(data: &[u8], cfg: &Config) -> Result<Compressed> {
    let regions = segment(data);
    let settings = cfg.settings()?;
    let all_text = match regions.as_slice() {
        [] => true,
        [r] => r.kind == RegionKind::Text,
        _ => false,
    };
    if all_text {
        match compress_text_report(data, cfg) {
            Err(Error::TokenizerRoundTrip { .. }) => return hybrid(data, &[], &settings, Vec::new(), Stats::default()),
            other => return other,
        }
    }
    if regions.len() > MAX_ENTRIES {
        return hybrid(data, &[], &settings, Vec::new(), Stats::default());
    }
    let text: Vec<u8> = regions
        .iter()
        .filter(|r| r.kind == RegionKind::Text)
        .flat_map(|r| &data[r.range()])
        .copied()
        .collect();
    match code_text(&text, cfg, &settings) {
        Ok((chunks, stats)) => hybrid(data, &regions, &settings, chunks, stats),
        Err(Error::TokenizerRoundTrip { .. }) => hybrid(data, &[], &settings, Vec::new(), Stats::default()),
        Err(e) => Err(e),
    }
}

/// Builds an NC06 container around already coded text. With no regions the
/// whole input is stored as one binary entry.
fn hybrid(
    data: &[u8],
    regions: &[Region],
    settings: &Settings,
    chunks: Vec<CodedChunk>,
    stats: Stats,
) -> Result<Compressed> {
    let whole = [Region {
        kind: RegionKind::Binary,
        offset: 0,
        len: data.len(),
    }];
    let regions = if regions.is_empty() { &whole[..] } else { regions };
    let entries = regions
        .iter()
        .map(|r| {
            Ok(Entry {
                kind: r.kind,
                original_len: to_u32(r.len as u64, "bytes in a region")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let binary: Vec<u8> = regions
        .iter()
        .filter(|r| r.kind == RegionKind::Binary)
        .flat_map(|r| &data[r.range()])
        .copied()
        .collect();
    let (method, blob) = compress_blob(&binary);
    let c = Nc06 {
        settings: *settings,
        entries,
        method,
        blob,
        chunks,
    };
    Ok(Compressed {
        bytes: write_nc06(&c)?,
        stats,
    })
}

pub fn decompress_file(bytes: &[u8], cfg: &Config) -> Result<Vec<u8>> {
    let magic: [u8; 4] = bytes
        .get(..4)
        .ok_or(Error::TruncatedContainer("magic"))?
        .try_into()
        .unwrap();
    match magic {
        NC05_MAGIC => decompress_text(bytes, cfg),
        NC06_MAGIC => decompress_hybrid(&read_nc06(bytes)?, cfg),
        other => Err(Error::BadMagic(other)),
    }
}

fn decompress_hybrid(c: &Nc06, cfg: &Config) -> Result<Vec<u8>> {
    let binary_len = c.total_len(Some(RegionKind::Binary)) as usize;
    let text_len = c.total_len(Some(RegionKind::Text)) as usize;
    let binary = decompress_blob(c.method, &c.blob, binary_len)?;
    let text = decode_text(&c.chunks, cfg, &c.settings)?;
    if text.len() != text_len {
        return Err(Error::Malformed(format!(
            "text section decodes to {} bytes, entries declare {text_len}",
            text.len()
        )));
    }
    let mut out = Vec::with_capacity(binary_len + text_len);
    let (mut b, mut t) = (0, 0);
    for e in &c.entries {
        let n = e.original_len as usize;
        match e.kind {
            RegionKind::Binary => {
                out.extend_from_slice(&binary[b..b + n]);
                b += n;
            }
            RegionKind::Text => {
                out.extend_from_slice(&text[t..t + n]);
                t += n;
            }
        }
    }
    Ok(out)
}
