//! Fixed-width bit strings and enumerative coding of multiset types.
//!
//! Fields are packed big-endian: the most significant bit of a field sits at
//! the lowest bit position. A [`BitMessage`] serializes to bytes with bit 0 as
//! the MSB of byte 0 and zero padding in the tail of the last byte.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{contract, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitMessage {
    bytes: Vec<u8>,
    width: usize,
}

impl BitMessage {
    /// An all-zero message of `width` bits. The width never changes afterwards.
    pub fn zeros(width: usize) -> Self {
        Self {
            bytes: vec![0; width.div_ceil(8)],
            width,
        }
    }

    /// Rebuild a message from its serialized bytes. The byte count must be
    /// exactly `ceil(width / 8)` and padding bits must be zero.
    pub fn from_bytes(bytes: &[u8], width: usize) -> Result<Self> {
        if bytes.len() != width.div_ceil(8) {
            return Err(Error::Corrupt(format!(
                "{} bytes cannot hold a {width}-bit message",
                bytes.len()
            )));
        }
        let msg = Self {
            bytes: bytes.to_vec(),
            width,
        };
        if width % 8 != 0 {
            let tail = bytes[bytes.len() - 1] & (0xff >> (width % 8));
            if tail != 0 {
                return Err(Error::Corrupt("nonzero padding bits".into()));
            }
        }
        Ok(msg)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit(&self, pos: usize) -> Result<bool> {
        if pos >= self.width {
            return Err(contract(format!("bit {pos} outside width {}", self.width)));
        }
        Ok(self.get(pos))
    }

    fn get(&self, pos: usize) -> bool {
        self.bytes[pos / 8] & (0x80 >> (pos % 8)) != 0
    }

    fn set(&mut self, pos: usize, on: bool) {
        let mask = 0x80 >> (pos % 8);
        if on {
            self.bytes[pos / 8] |= mask;
        } else {
            self.bytes[pos / 8] &= !mask;
        }
    }

    fn check_range(&self, offset: usize, width: usize) -> Result<()> {
        match offset.checked_add(width) {
            Some(end) if end <= self.width => Ok(()),
            _ => Err(contract(format!(
                "field [{offset}, {offset}+{width}) outside a {}-bit message",
                self.width
            ))),
        }
    }

    /// Store `value` big-endian in bits `[offset, offset + width)`.
    pub fn write_field(&mut self, offset: usize, width: usize, value: u64) -> Result<()> {
        if width > 64 {
            return Err(contract(format!("{width}-bit field does not fit in u64")));
        }
        if width < 64 && value >> width != 0 {
            return Err(contract(format!("{value} does not fit in {width} bits")));
        }
        self.check_range(offset, width)?;
        for i in 0..width {
            self.set(offset + i, (value >> (width - 1 - i)) & 1 == 1);
        }
        Ok(())
    }

    pub fn read_field(&self, offset: usize, width: usize) -> Result<u64> {
        if width > 64 {
            return Err(contract(format!("{width}-bit field does not fit in u64")));
        }
        self.check_range(offset, width)?;
        Ok((0..width).fold(0u64, |acc, i| (acc << 1) | self.get(offset + i) as u64))
    }

    /// Arbitrary-width variant of [`write_field`](Self::write_field).
    pub fn write_big(&mut self, offset: usize, width: usize, value: &BigUint) -> Result<()> {
        if value.bits() > width as u64 {
            return Err(contract(format!(
                "{}-bit integer does not fit in {width} bits",
                value.bits()
            )));
        }
        self.check_range(offset, width)?;
        for i in 0..width {
            self.set(offset + i, value.bit((width - 1 - i) as u64));
        }
        Ok(())
    }

    pub fn read_big(&self, offset: usize, width: usize) -> Result<BigUint> {
        self.check_range(offset, width)?;
        let mut acc = BigUint::zero();
        let mut pos = offset;
        while pos < offset + width {
            let chunk = (offset + width - pos).min(32);
            let bits = self.read_field(pos, chunk)?;
            acc = (acc << chunk) | BigUint::from(bits);
            pos += chunk;
        }
        Ok(acc)
    }

    /// Bits as a `0`/`1` string, handy in tests and diagnostics.
    pub fn to_bit_string(&self) -> String {
        (0..self.width)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }
}

/// Sequential field writer over a fixed-width message.
#[derive(Debug)]
pub struct BitWriter {
    msg: BitMessage,
    pos: usize,
}

impl BitWriter {
    pub fn new(width: usize) -> Self {
        Self {
            msg: BitMessage::zeros(width),
            pos: 0,
        }
    }

    pub fn put(&mut self, width: usize, value: u64) -> Result<()> {
        self.msg.write_field(self.pos, width, value)?;
        self.pos += width;
        Ok(())
    }

    pub fn put_big(&mut self, width: usize, value: &BigUint) -> Result<()> {
        self.msg.write_big(self.pos, width, value)?;
        self.pos += width;
        Ok(())
    }

    /// Finish, insisting that every bit was accounted for.
    pub fn finish(self) -> Result<BitMessage> {
        if self.pos != self.msg.width {
            return Err(Error::Internal(format!(
                "wrote {} of {} bits",
                self.pos, self.msg.width
            )));
        }
        Ok(self.msg)
    }
}

/// Sequential field reader; the counterpart of [`BitWriter`].
#[derive(Debug)]
pub struct BitReader<'a> {
    msg: &'a BitMessage,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(msg: &'a BitMessage) -> Self {
        Self { msg, pos: 0 }
    }

    pub fn take(&mut self, width: usize) -> Result<u64> {
        let v = self
            .msg
            .read_field(self.pos, width)
            .map_err(|_| Error::Corrupt("message shorter than its layout".into()))?;
        self.pos += width;
        Ok(v)
    }

    pub fn take_big(&mut self, width: usize) -> Result<BigUint> {
        let v = self
            .msg
            .read_big(self.pos, width)
            .map_err(|_| Error::Corrupt("message shorter than its layout".into()))?;
        self.pos += width;
        Ok(v)
    }

    pub fn position(&self) -> usize {
        self.pos
    }
}

/// Exact binomial coefficient; zero when `r > n`.
pub fn binomial(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `ceil(log2(n))` for a positive big integer.
pub fn ceil_log2_big(n: &BigUint) -> u64 {
    assert!(!n.is_zero(), "ceil_log2 of zero");
    if n.is_one() {
        0
    } else {
        (n - 1u32).bits()
    }
}

/// Number of bits needed to index every type of `k` draws from `d + 1` symbols.
pub fn type_rank_width(d: usize, k: usize) -> u64 {
    ceil_log2_big(&binomial((d + k) as u64, k as u64))
}

/// The type of a sequence over the alphabet `{0, ..., d}`: how many times each
/// symbol occurs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultisetType {
    counts: Vec<u64>,
}

impl MultisetType {
    /// `counts[i]` is the multiplicity of symbol `i`; the alphabet size is
    /// `counts.len() = d + 1`.
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(contract("a type needs an alphabet of at least one symbol"));
        }
        Ok(Self { counts })
    }

    /// Type of a sequence of symbols drawn from `{0, ..., d}`.
    pub fn from_symbols(symbols: impl IntoIterator<Item = usize>, d: usize) -> Result<Self> {
        let mut counts = vec![0u64; d + 1];
        for s in symbols {
            if s > d {
                return Err(contract(format!("symbol {s} outside alphabet 0..={d}")));
            }
            counts[s] += 1;
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Largest symbol `d`.
    pub fn d(&self) -> usize {
        self.counts.len() - 1
    }

    /// Total number of draws.
    pub fn k(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Rank of a type among all types with the same `(d, k)`.
///
/// The sorted draws `a_1 <= ... <= a_k` map to the strictly increasing
/// `b_j = a_j + j - 1` in `{0, ..., d+k-1}` (stars and bars), and the rank is
/// the colexicographic rank of that k-subset, `sum_j C(b_j, j)`. The type with
/// every draw on symbol 0 has rank 0.
pub fn multiset_rank(t: &MultisetType) -> BigUint {
    let mut rank = BigUint::zero();
    // (b, j, C(b, j)) for the last nonzero term, with b >= j
    let mut last: Option<(u64, u64, BigUint)> = None;
    let mut j = 0u64;
    for (symbol, &count) in t.counts.iter().enumerate() {
        for _ in 0..count {
            j += 1;
            if symbol == 0 {
                // b_j = j - 1 < j, so C(b_j, j) = 0
                continue;
            }
            let b = symbol as u64 + j - 1;
            let term = match last.take() {
                None => binomial(b, j),
                Some((pb, pj, c)) => {
                    // C(pb+1, pj+1) = C(pb, pj) (pb+1) / (pj+1), then walk b upward
                    let mut c = c * (pb + 1) / (pj + 1);
                    let mut cb = pb + 1;
                    while cb < b {
                        c = c * (cb + 1) / (cb + 1 - j);
                        cb += 1;
                    }
                    c
                }
            };
            rank += &term;
            last = Some((b, j, term));
        }
    }
    rank
}

/// Inverse of [`multiset_rank`] for types of `k` draws over `{0, ..., d}`.
pub fn multiset_unrank(rank: &BigUint, d: usize, k: usize) -> Result<MultisetType> {
    let total = binomial((d + k) as u64, k as u64);
    if *rank >= total {
        return Err(contract(format!(
            "rank {rank} outside [0, C({}, {k}))",
            d + k
        )));
    }
    let mut counts = vec![0u64; d + 1];
    if k == 0 {
        return Ok(MultisetType { counts });
    }
    let mut rem = rank.clone();
    let mut j = k as u64;
    let mut b = (d + k - 1) as u64;
    let mut c = binomial(b, j);
    loop {
        // largest b with C(b, j) <= rem; C(b-1, j) = C(b, j) (b-j) / b
        while c > rem {
            c = c * (b - j) / b;
            b -= 1;
        }
        let symbol = (b + 1 - j) as usize;
        counts[symbol] += 1;
        rem -= &c;
        if j == 1 {
            break;
        }
        // C(b-1, j-1) = C(b, j) j / b
        c = c * j / b;
        b -= 1;
        j -= 1;
    }
    debug_assert!(rem.is_zero());
    Ok(MultisetType { counts })
}

/// Small-value convenience used by tests and the CLI.
pub fn to_u64(n: &BigUint) -> Option<u64> {
    n.to_u64()
}
