//! NC05 (text) and NC06 (hybrid) container formats.
//!
//! All integers are little-endian.
//!
//! ```text
//! NC05:  "NC05" flags:u8 temp_milli:u16 chunk_count:u16
//!        chunk_count × (token_count:u32 bit_count:u32 stream_len:u32)
//!        streams...
//!
//! NC06:  "NC06" version:u8 flags:u8 temp_milli:u16 entry_count:u16
//!        entry_count × (kind:u8 original_len:u32)
//!        method:u8 blob_len:u32 blob
//!        chunk_count:u16 chunk table, streams...
//! ```
//!
//! Flag bits: 0 n-gram, 1 adaptive head, 2 skip, 3 coarse 16-bit CDF.
//! Bits 4-7 are reserved and must be zero.

use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use xz2::stream::{LzmaOptions, Stream};

use crate::cdf::{CDF_16, CDF_24};
use crate::ensemble::Features;
use crate::error::{Error, Result};
use crate::segmenter::RegionKind;

pub const NC05_MAGIC: [u8; 4] = *b"NC05";
pub const NC06_MAGIC: [u8; 4] = *b"NC06";
pub const NC06_VERSION: u8 = 1;
pub const NC05_HEADER_LEN: usize = 9;
pub const CHUNK_ENTRY_LEN: usize = 12;
pub const MAX_CHUNKS: usize = u16::MAX as usize;
pub const MAX_ENTRIES: usize = u16::MAX as usize;

/// Blobs at least this long are offered to LZMA, shorter ones to DEFLATE.
pub const LZMA_MIN_LEN: usize = 4096;

const FLAG_NGRAM: u8 = 1 << 0;
const FLAG_HEAD: u8 = 1 << 1;
const FLAG_SKIP: u8 = 1 << 2;
const FLAG_COARSE_CDF: u8 = 1 << 3;
const FLAG_RESERVED: u8 = 0xF0;

/// Everything the decoder needs to rebuild the encode-time predictor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Settings {
    pub features: Features,
    /// 16 or 24.
    pub cdf_bits: u8,
    pub temperature_milli: u16,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            features: Features::ALL,
            cdf_bits: 24,
            temperature_milli: 1000,
        }
    }
}

impl Settings {
    pub fn new(features: Features, cdf_bits: u8, temperature: f64) -> Result<Self> {
        if cdf_bits != 16 && cdf_bits != 24 {
            return Err(Error::Malformed(format!("CDF precision must be 16 or 24 bits, got {cdf_bits}")));
        }
        Ok(Self {
            features,
            cdf_bits,
            temperature_milli: temperature_to_milli(temperature)?,
        })
    }

    pub fn temperature(&self) -> f64 {
        f64::from(self.temperature_milli) / 1000.0
    }

    pub fn cdf_total(&self) -> u32 {
        if self.cdf_bits == 16 {
            CDF_16
        } else {
            CDF_24
        }
    }

    pub fn flags(&self) -> u8 {
        let f = self.features;
        let mut b = 0;
        if f.ngram {
            b |= FLAG_NGRAM;
        }
        if f.adaptive_head {
            b |= FLAG_HEAD;
        }
        if f.skip {
            b |= FLAG_SKIP;
        }
        if self.cdf_bits == 16 {
            b |= FLAG_COARSE_CDF;
        }
        b
    }

    pub fn from_header(flags: u8, temperature_milli: u16) -> Result<Self> {
        if flags & FLAG_RESERVED != 0 {
            return Err(Error::Malformed(format!("reserved flag bits set in {flags:#04x}")));
        }
        if temperature_milli == 0 {
            return Err(Error::Malformed("zero temperature".into()));
        }
        Ok(Self {
            features: Features {
                ngram: flags & FLAG_NGRAM != 0,
                adaptive_head: flags & FLAG_HEAD != 0,
                skip: flags & FLAG_SKIP != 0,
            },
            cdf_bits: if flags & FLAG_COARSE_CDF != 0 { 16 } else { 24 },
            temperature_milli,
        })
    }
}

/// Rounds `t × 1000` to the stored fixed-point form.
pub fn temperature_to_milli(t: f64) -> Result<u16> {
    let milli = (t * 1000.0).round();
    if !(1.0..=f64::from(u16::MAX)).contains(&milli) {
        return Err(Error::Malformed(format!(
            "temperature {t} outside the representable range 0.001..=65.535"
        )));
    }
    Ok(milli as u16)
}

/// One independently coded chunk.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CodedChunk {
    pub token_count: u32,
    pub bit_count: u32,
    pub stream: Vec<u8>,
}

impl CodedChunk {
    pub fn stream_len_for(bit_count: u32) -> usize {
        (bit_count as usize).div_ceil(8)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Nc05 {
    pub settings: Settings,
    pub chunks: Vec<CodedChunk>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlobMethod {
    Raw = 0,
    Deflate = 1,
    Lzma = 2,
}

impl BlobMethod {
    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Self::Raw),
            1 => Ok(Self::Deflate),
            2 => Ok(Self::Lzma),
            _ => Err(Error::Malformed(format!("unknown blob method {b}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Entry {
    pub kind: RegionKind,
    pub original_len: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nc06 {
    pub settings: Settings,
    pub entries: Vec<Entry>,
    pub method: BlobMethod,
    /// The binary regions, concatenated and compressed with `method`.
    pub blob: Vec<u8>,
    /// The text regions, concatenated and coded like an NC05 body.
    pub chunks: Vec<CodedChunk>,
}

impl Nc06 {
    pub fn total_len(&self, kind: Option<RegionKind>) -> u64 {
        self.entries
            .iter()
            .filter(|e| kind.is_none_or(|k| e.kind == k))
            .map(|e| u64::from(e.original_len))
            .sum()
    }
}

pub fn write_nc05(c: &Nc05) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(NC05_HEADER_LEN + c.chunks.iter().map(|k| k.stream.len() + 12).sum::<usize>());
    out.extend_from_slice(&NC05_MAGIC);
    out.push(c.settings.flags());
    out.extend_from_slice(&c.settings.temperature_milli.to_le_bytes());
    write_chunks(&mut out, &c.chunks)?;
    Ok(out)
}

pub fn read_nc05(bytes: &[u8]) -> Result<Nc05> {
    let mut r = Cursor::new(bytes);
    expect_magic(&mut r, NC05_MAGIC)?;
    let flags = r.u8("flags")?;
    let temp = r.u16("temperature")?;
    let settings = Settings::from_header(flags, temp)?;
    let chunks = read_chunks(&mut r)?;
    r.finish()?;
    Ok(Nc05 { settings, chunks })
}

pub fn write_nc06(c: &Nc06) -> Result<Vec<u8>> {
    check_entries(&c.entries)?;
    if c.entries.len() > MAX_ENTRIES {
        return Err(Error::Overflow {
            what: "entries",
            count: c.entries.len(),
            max: MAX_ENTRIES,
        });
    }
    let mut out = Vec::new();
    out.extend_from_slice(&NC06_MAGIC);
    out.push(NC06_VERSION);
    out.push(c.settings.flags());
    out.extend_from_slice(&c.settings.temperature_milli.to_le_bytes());
    out.extend_from_slice(&(c.entries.len() as u16).to_le_bytes());
    for e in &c.entries {
        out.push(e.kind as u8);
        out.extend_from_slice(&e.original_len.to_le_bytes());
    }
    out.push(c.method as u8);
    out.extend_from_slice(&u32_len(c.blob.len(), "blob bytes")?.to_le_bytes());
    out.extend_from_slice(&c.blob);
    write_chunks(&mut out, &c.chunks)?;
    Ok(out)
}

pub fn read_nc06(bytes: &[u8]) -> Result<Nc06> {
    let mut r = Cursor::new(bytes);
    expect_magic(&mut r, NC06_MAGIC)?;
    let version = r.u8("version")?;
    if version != NC06_VERSION {
        return Err(Error::Malformed(format!("unsupported NC06 version {version}")));
    }
    let flags = r.u8("flags")?;
    let temp = r.u16("temperature")?;
    let settings = Settings::from_header(flags, temp)?;
    let count = r.u16("entry count")? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let kind = r.u8("entry table")?;
        let kind = RegionKind::from_byte(kind).ok_or_else(|| Error::Malformed(format!("unknown entry kind {kind}")))?;
        entries.push(Entry {
            kind,
            original_len: r.u32("entry table")?,
        });
    }
    check_entries(&entries)?;
    let method = BlobMethod::from_byte(r.u8("blob method")?)?;
    let blob_len = r.u32("blob length")? as usize;
    let blob = r.take(blob_len, "blob")?.to_vec();
    let chunks = read_chunks(&mut r)?;
    r.finish()?;

    let c = Nc06 {
        settings,
        entries,
        method,
        blob,
        chunks,
    };
    let binary = c.total_len(Some(RegionKind::Binary));
    if method == BlobMethod::Raw && c.blob.len() as u64 != binary {
        return Err(Error::Malformed(format!(
            "raw blob holds {} bytes but entries declare {binary}",
            c.blob.len()
        )));
    }
    if binary == 0 && !c.blob.is_empty() {
        return Err(Error::Malformed("blob present without binary entries".into()));
    }
    if c.total_len(Some(RegionKind::Text)) == 0 && !c.chunks.is_empty() {
        return Err(Error::Malformed("coded chunks present without text entries".into()));
    }
    Ok(c)
}

fn check_entries(entries: &[Entry]) -> Result<()> {
    if entries.iter().any(|e| e.original_len == 0) {
        return Err(Error::Malformed("empty entry".into()));
    }
    if entries.windows(2).any(|w| w[0].kind == w[1].kind) {
        return Err(Error::Malformed("entries do not alternate".into()));
    }
    Ok(())
}

fn write_chunks(out: &mut Vec<u8>, chunks: &[CodedChunk]) -> Result<()> {
    if chunks.len() > MAX_CHUNKS {
        return Err(Error::Overflow {
            what: "chunks",
            count: chunks.len(),
            max: MAX_CHUNKS,
        });
    }
    out.extend_from_slice(&(chunks.len() as u16).to_le_bytes());
    for c in chunks {
        if c.stream.len() != CodedChunk::stream_len_for(c.bit_count) {
            return Err(Error::Malformed(format!(
                "{}-byte stream does not match {} bits",
                c.stream.len(),
                c.bit_count
            )));
        }
        out.extend_from_slice(&c.token_count.to_le_bytes());
        out.extend_from_slice(&c.bit_count.to_le_bytes());
        out.extend_from_slice(&(c.stream.len() as u32).to_le_bytes());
    }
    for c in chunks {
        out.extend_from_slice(&c.stream);
    }
    Ok(())
}

fn read_chunks(r: &mut Cursor<'_>) -> Result<Vec<CodedChunk>> {
    let count = r.u16("chunk count")? as usize;
    let mut table = Vec::with_capacity(count);
    for _ in 0..count {
        let token_count = r.u32("chunk table")?;
        let bit_count = r.u32("chunk table")?;
        let stream_len = r.u32("chunk table")? as usize;
        if stream_len != CodedChunk::stream_len_for(bit_count) {
            return Err(Error::Malformed(format!(
                "stream length {stream_len} does not match {bit_count} bits"
            )));
        }
        table.push((token_count, bit_count, stream_len));
    }
    table
        .into_iter()
        .map(|(token_count, bit_count, len)| {
            Ok(CodedChunk {
                token_count,
                bit_count,
                stream: r.take(len, "coded streams")?.to_vec(),
            })
        })
        .collect()
}

fn expect_magic(r: &mut Cursor<'_>, magic: [u8; 4]) -> Result<()> {
    let got: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if got != magic {
        return Err(Error::BadMagic(got));
    }
    Ok(())
}

fn u32_len(n: usize, what: &'static str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Overflow {
        what,
        count: n,
        max: u32::MAX as usize,
    })
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or(Error::TruncatedContainer(what))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn finish(self) -> Result<()> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(Error::Malformed(format!("{n} trailing bytes"))),
        }
    }
}

/// Picks LZMA for long inputs and DEFLATE for short ones, keeping the raw
/// bytes unless the codec output is strictly smaller.
pub fn compress_blob(data: &[u8]) -> (BlobMethod, Vec<u8>) {
    if data.is_empty() {
        return (BlobMethod::Raw, Vec::new());
    }
    let (method, packed) = if data.len() >= LZMA_MIN_LEN {
        (BlobMethod::Lzma, lzma(data))
    } else {
        (BlobMethod::Deflate, deflate(data))
    };
    if packed.len() < data.len() {
        (method, packed)
    } else {
        (BlobMethod::Raw, data.to_vec())
    }
}

pub fn decompress_blob(method: BlobMethod, blob: &[u8], expected_len: usize) -> Result<Vec<u8>> {
    let out = match method {
        BlobMethod::Raw => blob.to_vec(),
        BlobMethod::Deflate => {
            let mut out = Vec::with_capacity(expected_len);
            DeflateDecoder::new(blob)
                .take(expected_len as u64 + 1)
                .read_to_end(&mut out)
                .map_err(|e| Error::Malformed(format!("DEFLATE blob: {e}")))?;
            out
        }
        BlobMethod::Lzma => {
            let stream = Stream::new_lzma_decoder(u64::MAX)
                .map_err(|e| Error::Malformed(format!("LZMA decoder: {e}")))?;
            let mut out = Vec::with_capacity(expected_len);
            xz2::read::XzDecoder::new_stream(blob, stream)
                .take(expected_len as u64 + 1)
                .read_to_end(&mut out)
                .map_err(|e| Error::Malformed(format!("LZMA blob: {e}")))?;
            out
        }
    };
    if out.len() != expected_len {
        return Err(Error::Malformed(format!(
            "blob expands to {} bytes, entries declare {expected_len}",
            out.len()
        )));
    }
    Ok(out)
}

/// Raw DEFLATE at the highest level.
pub fn deflate(data: &[u8]) -> Vec<u8> {
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::best());
    enc.write_all(data).expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail")
}

/// Legacy `.lzma` stream at preset 9.
pub fn lzma(data: &[u8]) -> Vec<u8> {
    let opts = LzmaOptions::new_preset(9).expect("preset 9 is valid");
    let stream = Stream::new_lzma_encoder(&opts).expect("LZMA encoder init");
    let mut enc = xz2::write::XzEncoder::new_stream(Vec::new(), stream);
    enc.write_all(data).expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nc05_golden_header() {
        let c = Nc05::default();
        assert_eq!(write_nc05(&c).unwrap(), [0x4E, 0x43, 0x30, 0x35, 0x07, 0xE8, 0x03, 0x00, 0x00]);
    }

    #[test]
    fn nc05_golden_entry() {
        let c = Nc05 {
            settings: Settings::default(),
            chunks: vec![CodedChunk {
                token_count: 5,
                bit_count: 17,
                stream: vec![0xAA, 0xBB, 0x80],
            }],
        };
        let bytes = write_nc05(&c).unwrap();
        assert_eq!(&bytes[7..9], &[1, 0]);
        assert_eq!(&bytes[9..21], &[5, 0, 0, 0, 0x11, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&bytes[21..], &[0xAA, 0xBB, 0x80]);
        assert_eq!(read_nc05(&bytes).unwrap(), c);
    }

    #[test]
    fn nc06_golden_layout() {
        let c = Nc06 {
            settings: Settings::new(Features::NONE, 16, 0.5).unwrap(),
            entries: vec![Entry {
                kind: RegionKind::Binary,
                original_len: 3,
            }],
            method: BlobMethod::Raw,
            blob: vec![0, 1, 2],
            chunks: vec![],
        };
        let bytes = write_nc06(&c).unwrap();
        #[rustfmt::skip]
        let expect = [
            0x4E, 0x43, 0x30, 0x36, 0x01, 0x08, 0xF4, 0x01, 0x01, 0x00,
            0x00, 0x03, 0x00, 0x00, 0x00,
            0x00, 0x03, 0x00, 0x00, 0x00, 0x00, 0x01, 0x02,
            0x00, 0x00,
        ];
        assert_eq!(bytes, expect);
        assert_eq!(read_nc06(&bytes).unwrap(), c);
    }

    #[test]
    fn flags_roundtrip_every_combination() {
        for bits in 0u8..16 {
            let s = Settings::from_header(bits, 1000).unwrap();
            assert_eq!(s.flags(), bits);
        }
        assert!(Settings::from_header(0x10, 1000).is_err());
        assert!(Settings::from_header(0, 0).is_err());
    }

    #[test]
    fn temperature_fixed_point() {
        assert_eq!(temperature_to_milli(1.0).unwrap(), 1000);
        assert_eq!(temperature_to_milli(0.8).unwrap(), 800);
        assert_eq!(temperature_to_milli(0.0004).ok(), None);
        assert_eq!(temperature_to_milli(70.0).ok(), None);
        assert_eq!(temperature_to_milli(f64::NAN).ok(), None);
    }

    #[test]
    fn nc05_rejects_corruption() {
        assert!(matches!(read_nc05(b"NC99\x07\xe8\x03\x00\x00"), Err(Error::BadMagic(m)) if &m == b"NC99"));
        assert!(matches!(
            read_nc05(b"NC05\x07\xe8\x03\x01\x00"),
            Err(Error::TruncatedContainer(_))
        ));
        assert!(matches!(read_nc05(b"NC05\x07\xe8"), Err(Error::TruncatedContainer(_))));
        assert!(matches!(read_nc05(b"NC05\x87\xe8\x03\x00\x00"), Err(Error::Malformed(_))));
        assert!(matches!(read_nc05(b"NC05\x07\xe8\x03\x00\x00\x00"), Err(Error::Malformed(_))));
        let mut bad_len = b"NC05\x07\xe8\x03\x01\x00".to_vec();
        bad_len.extend([1, 0, 0, 0, 17, 0, 0, 0, 2, 0, 0, 0, 0, 0]);
        assert!(matches!(read_nc05(&bad_len), Err(Error::Malformed(_))));
    }

    #[test]
    fn writer_rejects_inconsistent_chunks() {
        let c = Nc05 {
            settings: Settings::default(),
            chunks: vec![CodedChunk {
                token_count: 1,
                bit_count: 9,
                stream: vec![0],
            }],
        };
        assert!(write_nc05(&c).is_err());
        let many = Nc05 {
            settings: Settings::default(),
            chunks: vec![CodedChunk::default(); MAX_CHUNKS + 1],
        };
        assert!(matches!(write_nc05(&many), Err(Error::Overflow { .. })));
    }

    #[test]
    fn nc06_rejects_inconsistent_entries() {
        let base = Nc06 {
            settings: Settings::default(),
            entries: vec![Entry {
                kind: RegionKind::Binary,
                original_len: 4,
            }],
            method: BlobMethod::Raw,
            blob: vec![1, 2, 3, 4],
            chunks: vec![],
        };
        let mut short = write_nc06(&base).unwrap();
        short[11] = 5;
        assert!(read_nc06(&short).is_err());

        let mut repeated = base.clone();
        repeated.entries.push(repeated.entries[0]);
        assert!(write_nc06(&repeated).is_err());

        let mut bad_version = write_nc06(&base).unwrap();
        bad_version[4] = 2;
        assert!(read_nc06(&bad_version).is_err());
    }

    #[test]
    fn blob_codec_choice() {
        let (m, b) = compress_blob(&[0u8; 8192]);
        assert_eq!(m, BlobMethod::Lzma);
        assert!(b.len() < 200);
        assert_eq!(decompress_blob(m, &b, 8192).unwrap(), vec![0u8; 8192]);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut noise = vec![0u8; 100];
        rng.fill_bytes(&mut noise);
        assert_eq!(compress_blob(&noise), (BlobMethod::Raw, noise.clone()));

        assert_eq!(compress_blob(&[]), (BlobMethod::Raw, vec![]));

        let text = b"abcabcabcabcabcabcabcabcabcabcabcabcabc".repeat(10);
        let (m, b) = compress_blob(&text);
        assert_eq!(m, BlobMethod::Deflate);
        assert_eq!(decompress_blob(m, &b, text.len()).unwrap(), text);
    }

    #[test]
    fn blob_length_is_checked() {
        let (m, b) = compress_blob(&[7u8; 500]);
        assert!(decompress_blob(m, &b, 499).is_err());
        assert!(decompress_blob(m, &b, 501).is_err());
        assert!(decompress_blob(BlobMethod::Lzma, &[1, 2, 3], 3).is_err());
    }

    fn settings() -> impl Strategy<Value = Settings> {
        (0u8..16, 1u16..=u16::MAX).prop_map(|(f, t)| Settings::from_header(f, t).unwrap())
    }

    fn chunks() -> impl Strategy<Value = Vec<CodedChunk>> {
        prop::collection::vec(
            (any::<u32>(), 0u32..200).prop_flat_map(|(token_count, bit_count)| {
                prop::collection::vec(any::<u8>(), CodedChunk::stream_len_for(bit_count)).prop_map(move |stream| {
                    CodedChunk {
                        token_count,
                        bit_count,
                        stream,
                    }
                })
            }),
            0..6,
        )
    }

    proptest! {
        #[test]
        fn nc05_roundtrip(settings in settings(), chunks in chunks()) {
            let c = Nc05 { settings, chunks };
            let bytes = write_nc05(&c).unwrap();
            prop_assert_eq!(read_nc05(&bytes).unwrap(), c);
            for cut in 0..bytes.len() {
                prop_assert!(read_nc05(&bytes[..cut]).is_err());
            }
        }

        #[test]
        fn nc06_roundtrip(
            settings in settings(),
            lens in prop::collection::vec(1u32..1000, 1..6),
            first_text in any::<bool>(),
            chunks in chunks(),
            blob in prop::collection::vec(any::<u8>(), 0..50),
        ) {
            let entries: Vec<Entry> = lens.iter().enumerate().map(|(i, &original_len)| Entry {
                kind: if (i % 2 == 0) == first_text { RegionKind::Text } else { RegionKind::Binary },
                original_len,
            }).collect();
            let has_binary = entries.iter().any(|e| e.kind == RegionKind::Binary);
            let has_text = entries.iter().any(|e| e.kind == RegionKind::Text);
            let c = Nc06 {
                settings,
                entries,
                method: BlobMethod::Deflate,
                blob: if has_binary { blob } else { vec![] },
                chunks: if has_text { chunks } else { vec![] },
            };
            let bytes = write_nc06(&c).unwrap();
            prop_assert_eq!(read_nc06(&bytes).unwrap(), c);
            for cut in 0..bytes.len() {
                prop_assert!(read_nc06(&bytes[..cut]).is_err());
            }
        }

        #[test]
        fn blob_roundtrip(data in prop::collection::vec(prop::sample::select(vec![0u8, 1, 2, 255]), 0..6000)) {
            let (m, b) = compress_blob(&data);
            prop_assert!(b.len() <= data.len());
            prop_assert_eq!(decompress_blob(m, &b, data.len()).unwrap(), data);
        }
    }
}
