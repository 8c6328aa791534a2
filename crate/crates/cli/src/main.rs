use std::fs;
use std::io::{self, BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use lmzip::container::{deflate, lzma};
use lmzip::pipeline::{compress_file_report, Config};
use lmzip::predictor::{wire, BackendSpec, StubBackend};
use lmzip::{decompress_file, shannon_entropy, Features};

#[derive(Parser)]
#[command(name = "lmzip", version, about = "Lossless compression driven by next-token prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a file to NC05 (text) or NC06 (mixed) format.
    Compress {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Restore a file written by `compress`.
    Decompress {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Report bits per byte against gzip, LZMA and byte-level entropy.
    Bench {
        input: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Serve the stub predictor over stdin/stdout.
    #[command(hide = true)]
    ServeStub {
        #[arg(long, default_value_t = lmzip::predictor::DEFAULT_CONTEXT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = lmzip::predictor::DEFAULT_SLIDE)]
        slide: usize,
    },
}

#[derive(Args)]
struct Options {
    /// Parallel chunks; derived from free memory when omitted.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 24, value_parser = parse_cdf_bits)]
    cdf_bits: u8,
    #[arg(long)]
    no_ngram: bool,
    /// Disable the adaptive bias head.
    #[arg(long)]
    no_adaptive: bool,
    #[arg(long)]
    no_skip: bool,
    /// `stub` or `external:<command>`.
    #[arg(long, default_value = "stub")]
    backend: BackendSpec,
}

fn parse_cdf_bits(s: &str) -> std::result::Result<u8, String> {
    match s {
        "16" => Ok(16),
        "24" => Ok(24),
        _ => Err("expected 16 or 24".into()),
    }
}

impl Options {
    fn config(&self) -> Config {
        Config {
            workers: self.workers,
            max_threads: None,
            temperature: self.temperature,
            cdf_bits: self.cdf_bits,
            features: Features {
                ngram: !self.no_ngram,
                adaptive_head: !self.no_adaptive,
                skip: !self.no_skip,
            },
            backend: self.backend.clone(),
        }
    }
}

fn read(path: &PathBuf) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &PathBuf, data: &[u8]) -> Result<()> {
    fs::write(path, data).with_context(|| format!("writing {}", path.display()))
}

fn bpb(compressed: usize, original: usize) -> f64 {
    if original == 0 {
        0.0
    } else {
        compressed as f64 * 8.0 / original as f64
    }
}

fn bench(input: &PathBuf, cfg: &Config) -> Result<()> {
    let data = read(input)?;
    let n = data.len();
    let start = Instant::now();
    let report = compress_file_report(&data, cfg)?;
    let elapsed = start.elapsed();
    let restored = decompress_file(&report.bytes, cfg)?;
    anyhow::ensure!(restored == data, "round trip mismatch");

    println!("{}: {n} bytes", input.display());
    println!("{:<18} {:>12} {:>8}", "method", "bytes", "bpb");
    let row = |name: &str, size: usize| println!("{name:<18} {size:>12} {:>8.4}", bpb(size, n));
    row("lmzip", report.bytes.len());
    row("gzip -9 (deflate)", deflate(&data).len());
    row("lzma -9", lzma(&data).len());
    for k in 0..3 {
        let h = shannon_entropy(&data, k);
        println!("{:<18} {:>12.0} {h:>8.4}", format!("shannon order-{k}"), h * n as f64 / 8.0);
    }
    println!(
        "tokens {}  skipped {} ({:.1}%)  chunks {}  time {:.2}s",
        report.stats.tokens,
        report.stats.skipped,
        100.0 * report.stats.skip_rate(),
        report.stats.chunks,
        elapsed.as_secs_f64()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compress { input, output, opts } => {
            let data = read(&input)?;
            let packed = compress_file_report(&data, &opts.config())?;
            write(&output, &packed.bytes)
        }
        Command::Decompress { input, output, opts } => {
            let data = read(&input)?;
            write(&output, &decompress_file(&data, &opts.config())?)
        }
        Command::Bench { input, opts } => bench(&input, &opts.config()),
        Command::ServeStub { window, slide } => {
            let mut backend = StubBackend::with_window(window, slide);
            let stdin = BufReader::new(io::stdin().lock());
            let stdout = BufWriter::new(io::stdout().lock());
            Ok(wire::serve(&mut backend, stdin, stdout)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lmzip: {e:#}");
            let code = e.downcast_ref::<lmzip::Error>().map_or(1, lmzip::Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
