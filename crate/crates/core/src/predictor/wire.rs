//! Length-prefixed binary protocol for out-of-process predictors.
//!
//! All integers are little-endian.
//!
//! | request      | layout                                | response                     |
//! |--------------|---------------------------------------|------------------------------|
//! | `HANDSHAKE`  | `0u8`                                 | `V u32, L u32, C u32`        |
//! | `EVAL`       | `1u8, count u32, token u32 * count`   | `logit f32 * V`              |
//! | `TOKENIZE`   | `2u8, len u32, byte * len`            | `count u32, token u32 * count` |
//! | `DETOKENIZE` | `3u8, count u32, token u32 * count`   | `len u32, byte * len`        |
//! | `RESET`      | `4u8`                                 | none                         |
//!
//! `EVAL` appends its tokens to the backend's context before scoring, so
//! `count = 0` scores the current context again. After a window slide the
//! client sends `RESET` followed by one `EVAL` carrying the whole surviving
//! window; otherwise it sends only the tokens observed since the last call,
//! usually exactly one.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use super::{Backend, BackendDescriptor, BackendKind, Scores};
use crate::error::{Error, Result};

pub const OP_HANDSHAKE: u8 = 0;
pub const OP_EVAL: u8 = 1;
pub const OP_TOKENIZE: u8 = 2;
pub const OP_DETOKENIZE: u8 = 3;
pub const OP_RESET: u8 = 4;

/// Upper bound on any length prefix, to fail fast on a desynchronized peer.
const MAX_FRAME_ITEMS: u32 = 1 << 28;

fn backend_io(err: io::Error) -> Error {
    Error::Backend(format!("wire protocol: {err}"))
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_len(r: &mut impl Read) -> io::Result<usize> {
    let n = read_u32(r)?;
    if n > MAX_FRAME_ITEMS {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame length {n}")));
    }
    Ok(n as usize)
}

fn read_tokens(r: &mut impl Read) -> io::Result<Vec<u32>> {
    let n = read_len(r)?;
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
}

fn read_bytes(r: &mut impl Read) -> io::Result<Vec<u8>> {
    let n = read_len(r)?;
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn write_tokens(w: &mut impl Write, tokens: &[u32]) -> io::Result<()> {
    w.write_all(&(tokens.len() as u32).to_le_bytes())?;
    for t in tokens {
        w.write_all(&t.to_le_bytes())?;
    }
    Ok(())
}

fn write_bytes(w: &mut impl Write, bytes: &[u8]) -> io::Result<()> {
    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
    w.write_all(bytes)
}

/// Protocol client over any byte channel.
pub struct WireClient<R, W> {
    reader: R,
    writer: W,
    desc: BackendDescriptor,
}

impl<R: Read, W: Write> WireClient<R, W> {
    /// Performs the handshake.
    pub fn connect(mut reader: R, mut writer: W) -> Result<Self> {
        writer.write_all(&[OP_HANDSHAKE]).map_err(backend_io)?;
        writer.flush().map_err(backend_io)?;
        let vocab = read_u32(&mut reader).map_err(backend_io)?;
        let window = read_u32(&mut reader).map_err(backend_io)?;
        let slide = read_u32(&mut reader).map_err(backend_io)?;
        let desc = BackendDescriptor {
            vocab_size: vocab as usize,
            context_window: window as usize,
            slide_amount: slide as usize,
            kind: BackendKind::External,
        };
        desc.validate()?;
        Ok(Self { reader, writer, desc })
    }

    fn request(&mut self, frame: impl FnOnce(&mut W) -> io::Result<()>) -> Result<()> {
        frame(&mut self.writer).map_err(backend_io)?;
        self.writer.flush().map_err(backend_io)
    }
}

impl<R: Read + Send, W: Write + Send> Backend for WireClient<R, W> {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.desc
    }

    fn tokenize(&mut self, text: &[u8]) -> Result<Vec<u32>> {
        self.request(|w| {
            w.write_all(&[OP_TOKENIZE])?;
            write_bytes(w, text)
        })?;
        read_tokens(&mut self.reader).map_err(backend_io)
    }

    fn detokenize(&mut self, tokens: &[u32]) -> Result<Vec<u8>> {
        self.request(|w| {
            w.write_all(&[OP_DETOKENIZE])?;
            write_tokens(w, tokens)
        })?;
        read_bytes(&mut self.reader).map_err(backend_io)
    }

    fn reset(&mut self) -> Result<()> {
        self.request(|w| w.write_all(&[OP_RESET]))
    }

    fn eval(&mut self, tokens: &[u32]) -> Result<Scores> {
        self.request(|w| {
            w.write_all(&[OP_EVAL])?;
            write_tokens(w, tokens)
        })?;
        let mut buf = vec![0u8; self.desc.vocab_size * 4];
        self.reader.read_exact(&mut buf).map_err(backend_io)?;
        Ok(Scores::Logits(
            buf.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect(),
        ))
    }
}

/// A predictor child process. The command line is split on whitespace; the
/// child must speak the protocol on stdin/stdout and log to stderr only.
pub struct ExternalBackend {
    child: Child,
    client: WireClient<BufReader<ChildStdout>, BufWriter<ChildStdin>>,
}

impl ExternalBackend {
    pub fn spawn(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| Error::Backend("empty backend command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Backend(format!("spawning {program:?}: {e}")))?;
        let stdin = child.stdin.take().unwrap();
        let stdout = child.stdout.take().unwrap();
        match WireClient::connect(BufReader::new(stdout), BufWriter::new(stdin)) {
            Ok(client) => Ok(Self { child, client }),
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(e)
            }
        }
    }
}

impl Drop for ExternalBackend {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Backend for ExternalBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        self.client.descriptor()
    }

    fn tokenize(&mut self, text: &[u8]) -> Result<Vec<u32>> {
        self.client.tokenize(text)
    }

    fn detokenize(&mut self, tokens: &[u32]) -> Result<Vec<u8>> {
        self.client.detokenize(tokens)
    }

    fn reset(&mut self) -> Result<()> {
        self.client.reset()
    }

    fn eval(&mut self, tokens: &[u32]) -> Result<Scores> {
        self.client.eval(tokens)
    }
}

/// Answers protocol requests with `backend` until the reader hits EOF.
/// Integer weights are shipped as `ln w` logits.
pub fn serve(backend: &mut dyn Backend, mut reader: impl Read, mut writer: impl Write) -> Result<()> {
    loop {
        let mut op = [0u8; 1];
        match reader.read(&mut op) {
            Ok(0) => return Ok(()),
            Ok(_) => {}
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(backend_io(e)),
        }
        match op[0] {
            OP_HANDSHAKE => {
                let d = backend.descriptor();
                for x in [d.vocab_size, d.context_window, d.slide_amount] {
                    writer.write_all(&(x as u32).to_le_bytes())?;
                }
            }
            OP_EVAL => {
                let tokens = read_tokens(&mut reader).map_err(backend_io)?;
                let logits: Vec<f32> = match backend.eval(&tokens)? {
                    Scores::Logits(l) => l,
                    Scores::Weights(w) => w.iter().map(|&x| (x as f32).ln()).collect(),
                };
                for l in logits {
                    writer.write_all(&l.to_le_bytes())?;
                }
            }
            OP_TOKENIZE => {
                let text = read_bytes(&mut reader).map_err(backend_io)?;
                write_tokens(&mut writer, &backend.tokenize(&text)?)?;
            }
            OP_DETOKENIZE => {
                let tokens = read_tokens(&mut reader).map_err(backend_io)?;
                write_bytes(&mut writer, &backend.detokenize(&tokens)?)?;
            }
            OP_RESET => backend.reset()?,
            other => return Err(Error::Backend(format!("unknown opcode {other}"))),
        }
        writer.flush()?;
    }
}
