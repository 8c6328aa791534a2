//! 32-bit binary arithmetic coder in the Witten/Neal/Cleary style.
//!
//! Bits are written most-significant-bit first within each byte. The
//! encoder flush emits one quarter-selection bit plus `pending + 1` opposite
//! bits, so a finished stream always carries exactly `shifts + 2` bits, where
//! `shifts` is the number of renormalization doublings. The decoder mirrors
//! the shift count and checks it against the declared bit count on finish.

use crate::cdf::QuantizedCdf;
use crate::error::{Error, Result};

const HALF: u32 = 1 << 31;
const QUARTER: u32 = 1 << 30;
const THREE_QUARTERS: u32 = 3 << 30;

/// Maximum number of zero bits the decoder may read past the declared end.
/// The value register runs 32 bits ahead and every stream ends with at
/// least two flush bits.
const MAX_OVERRUN: u64 = 30;

/// A finished arithmetic-coded stream.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EncodedStream {
    pub bytes: Vec<u8>,
    /// Meaningful bits before the zero padding.
    pub bit_count: u64,
}

#[derive(Debug, Default)]
struct BitWriter {
    bytes: Vec<u8>,
    bits: u64,
}

impl BitWriter {
    fn push(&mut self, bit: bool) {
        let offset = (self.bits % 8) as u32;
        if offset == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> offset;
        }
        self.bits += 1;
    }

    fn push_run(&mut self, bit: bool, count: u64) {
        for _ in 0..count {
            self.push(bit);
        }
    }
}

#[derive(Debug)]
pub struct Encoder {
    low: u32,
    high: u32,
    pending: u64,
    out: BitWriter,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            high: u32::MAX,
            pending: 0,
            out: BitWriter::default(),
        }
    }

    /// Current `high - low + 1`.
    pub fn range(&self) -> u64 {
        u64::from(self.high - self.low) + 1
    }

    /// Bits emitted so far, not counting pending underflow bits.
    pub fn bits_written(&self) -> u64 {
        self.out.bits
    }

    pub fn encode(&mut self, cdf: &QuantizedCdf, sym: usize) -> Result<()> {
        if sym >= cdf.vocab() {
            return Err(Error::CoderIntegrity(format!(
                "symbol {sym} outside vocabulary of {}",
                cdf.vocab()
            )));
        }
        let (lo, hi) = cdf.interval(sym);
        let (low, high) = narrow(self.low, self.high, lo, hi, cdf.total())?;
        self.low = low;
        self.high = high;

        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
        Ok(())
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        self.out.push_run(!bit, self.pending);
        self.pending = 0;
    }

    pub fn finish(mut self) -> EncodedStream {
        self.pending += 1;
        let bit = self.low >= QUARTER;
        self.emit(bit);
        EncodedStream {
            bit_count: self.out.bits,
            bytes: self.out.bytes,
        }
    }
}

/// Narrows `[low, high]` to the sub-interval `[lo, hi)` of a CDF with total
/// `total`. Products are formed in 64 bits: `range * total` can reach 2^64
/// only for totals above 2^32, which `QuantizedCdf` cannot represent.
fn narrow(low: u32, high: u32, lo: u32, hi: u32, total: u32) -> Result<(u32, u32)> {
    let range = u64::from(high - low) + 1;
    let total = u64::from(total);
    let top = range * u64::from(hi) / total;
    let bottom = range * u64::from(lo) / total;
    if top <= bottom {
        return Err(Error::CoderIntegrity(format!(
            "zero-width interval [{lo}, {hi}) at range {range}"
        )));
    }
    let new_low = u64::from(low) + bottom;
    let new_high = u64::from(low) + top - 1;
    Ok((new_low as u32, new_high as u32))
}

#[derive(Debug)]
pub struct Decoder<'a> {
    low: u32,
    high: u32,
    value: u32,
    input: &'a [u8],
    bit_count: u64,
    cursor: u64,
    shifts: u64,
}

impl<'a> Decoder<'a> {
    /// Primes the value register with the first 32 bits of `input`.
    pub fn new(input: &'a [u8], bit_count: u64) -> Result<Self> {
        if (input.len() as u64) < bit_count.div_ceil(8) {
            return Err(Error::TruncatedStream(format!(
                "{} bytes cannot hold {bit_count} bits",
                input.len()
            )));
        }
        let used = bit_count.div_ceil(8) as usize;
        let padding_clean = match bit_count % 8 {
            0 => true,
            r => input[used - 1] & (0xFF >> r) == 0,
        };
        if !padding_clean || input[used..].iter().any(|&b| b != 0) {
            return Err(Error::CoderIntegrity("non-zero bits after the declared end".into()));
        }
        let mut dec = Self {
            low: 0,
            high: u32::MAX,
            value: 0,
            input,
            bit_count,
            cursor: 0,
            shifts: 0,
        };
        for _ in 0..32 {
            let bit = dec.next_bit()?;
            dec.value = (dec.value << 1) | bit;
        }
        Ok(dec)
    }

    fn next_bit(&mut self) -> Result<u32> {
        let pos = self.cursor;
        self.cursor += 1;
        if pos < self.bit_count {
            let byte = self.input[(pos / 8) as usize];
            Ok(u32::from(byte >> (7 - pos % 8)) & 1)
        } else if self.cursor <= self.bit_count + MAX_OVERRUN {
            Ok(0)
        } else {
            Err(Error::TruncatedStream(format!(
                "read past {} declared bits",
                self.bit_count
            )))
        }
    }

    pub fn decode(&mut self, cdf: &QuantizedCdf) -> Result<usize> {
        let range = u64::from(self.high - self.low) + 1;
        let total = u64::from(cdf.total());
        let offset = u64::from(self.value - self.low);
        let scaled = ((offset + 1) * total - 1) / range;
        let sym = cdf.find(scaled as u32);

        let (lo, hi) = cdf.interval(sym);
        let (low, high) = narrow(self.low, self.high, lo, hi, cdf.total())?;
        self.low = low;
        self.high = high;
        if self.value < self.low || self.value > self.high {
            return Err(Error::CoderIntegrity("value register left the interval".into()));
        }

        loop {
            if self.high < HALF {
                // nothing to subtract
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.value -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.value -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | self.next_bit()?;
            self.shifts += 1;
        }
        Ok(sym)
    }

    /// Verifies the declared bit count and the flush bits match what the
    /// encoder must have produced for the symbols decoded so far.
    pub fn finish(self) -> Result<()> {
        if self.shifts + 2 != self.bit_count {
            return Err(Error::CoderIntegrity(format!(
                "stream declares {} bits, decoded symbols account for {}",
                self.bit_count,
                self.shifts + 2
            )));
        }
        // The flush writes the point `01` or `10` (in interval coordinates)
        // followed by padding, so anything else was not written by `Encoder`.
        let flushed = if self.low >= QUARTER { HALF } else { QUARTER };
        if self.value != flushed {
            return Err(Error::CoderIntegrity("stream tail is not a valid flush".into()));
        }
        Ok(())
    }
}
