use std::fmt;

use crate::error::{Error, Result};

/// Largest node count a configuration can hold.
pub const MAX_NODES: usize = 128;

/// A Boolean state vector, bit-packed. Node `i` (0-based) lives in bit `i`.
///
/// The owning system supplies the length; textual forms put node 1 leftmost.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Config(pub u128);

impl Config {
    pub const ZERO: Config = Config(0);

    #[inline]
    pub fn bit(self, i: usize) -> bool {
        (self.0 >> i) & 1 == 1
    }

    #[inline]
    pub fn with(self, i: usize, b: bool) -> Config {
        if b {
            Config(self.0 | (1u128 << i))
        } else {
            Config(self.0 & !(1u128 << i))
        }
    }

    pub fn from_bits(bits: &[bool]) -> Config {
        assert!(bits.len() <= MAX_NODES);
        let mut v = 0u128;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v |= 1 << i;
            }
        }
        Config(v)
    }

    pub fn to_bits(self, n: usize) -> Vec<bool> {
        (0..n).map(|i| self.bit(i)).collect()
    }

    /// Parses a bit string such as `0110`; its length is the node count.
    pub fn parse(s: &str) -> Result<(Config, usize)> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Config("empty bit string".into()));
        }
        if s.len() > MAX_NODES {
            return Err(Error::Config(format!("bit string longer than {MAX_NODES}")));
        }
        let mut v = 0u128;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => v |= 1 << i,
                other => {
                    return Err(Error::Config(format!("unexpected character {other:?} in {s:?}")))
                }
            }
        }
        Ok((Config(v), s.len()))
    }

    /// Parses a bit string that must have exactly `n` characters.
    pub fn parse_len(s: &str, n: usize) -> Result<Config> {
        let (c, len) = Config::parse(s)?;
        if len != n {
            return Err(Error::Config(format!(
                "configuration {s:?} has length {len}, expected {n}"
            )));
        }
        Ok(c)
    }

    pub fn render(self, n: usize) -> String {
        (0..n).map(|i| if self.bit(i) { '1' } else { '0' }).collect()
    }

    /// Position of this configuration in ascending textual binary order.
    pub fn rank(self, n: usize) -> u128 {
        if n == 0 {
            0
        } else {
            self.0.reverse_bits() >> (128 - n)
        }
    }

    /// Inverse of [`Config::rank`].
    pub fn from_rank(rank: u128, n: usize) -> Config {
        if n == 0 {
            Config(0)
        } else {
            Config((rank << (128 - n)).reverse_bits())
        }
    }

    /// Bits `[offset, offset + len)` shifted down to position 0.
    pub fn slice(self, offset: usize, len: usize) -> Config {
        Config((self.0 >> offset) & mask(len))
    }

    /// Writes `len` low bits of `part` at `offset`.
    pub fn splice(self, offset: usize, len: usize, part: Config) -> Config {
        let m = mask(len) << offset;
        Config((self.0 & !m) | ((part.0 << offset) & m))
    }

    pub fn complement(self, n: usize) -> Config {
        Config(!self.0 & mask(n))
    }

    pub fn count_ones(self) -> u32 {
        self.0.count_ones()
    }

    /// Every configuration of length `n`, in ascending textual order.
    pub fn all(n: usize) -> impl Iterator<Item = Config> {
        assert!(n < 128, "cannot enumerate 2^{n} configurations");
        (0..(1u128 << n)).map(move |r| Config::from_rank(r, n))
    }
}

#[inline]
pub(crate) fn mask(len: usize) -> u128 {
    if len >= 128 {
        u128::MAX
    } else {
        (1u128 << len) - 1
    }
}

impl fmt::Debug for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Config({:#x})", self.0)
    }
}
