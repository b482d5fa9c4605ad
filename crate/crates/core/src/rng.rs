//! Seeded, labelled random bit streams.
//!
//! Every stream is ChaCha8 (rand_chacha 0.9.0, pinned in the workspace
//! manifest) keyed with `SHA-256("pdlog/stream/v1" || seed_le || label)`.
//! Bits are handed out least-significant first from successive `u64`
//! outputs, and `bits_consumed` counts exactly the bits handed out.
//!
//! The threshold of the short-walk solver comes from the `"threshold"`
//! stream and everything else from other labels, so the influential bits
//! can be pinned while the rest is redrawn.

use num_bigint::BigUint;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Version tag folded into every stream key.
pub const STREAM_DOMAIN: &[u8] = b"pdlog/stream/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Seed(pub u64);

#[derive(Debug, Clone)]
pub struct Stream {
    seed: Seed,
    label: String,
    rng: ChaCha8Rng,
    buf: u64,
    avail: u32,
    bits_consumed: u64,
}

/// Opens the stream named `label` under `seed`.
pub fn substream(seed: Seed, label: &str) -> Stream {
    let mut h = Sha256::new();
    h.update(STREAM_DOMAIN);
    h.update(seed.0.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    Stream {
        seed,
        label: label.to_owned(),
        rng: ChaCha8Rng::from_seed(key),
        buf: 0,
        avail: 0,
        bits_consumed: 0,
    }
}

impl Stream {
    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn bits_consumed(&self) -> u64 {
        self.bits_consumed
    }

    /// A fresh stream named `<label>/<sub>` under the same seed. Does not
    /// touch this stream's state.
    pub fn fork(&self, sub: &str) -> Stream {
        substream(self.seed, &format!("{}/{}", self.label, sub))
    }

    /// Takes `b` bits (`b <= 64`) as an integer.
    #[inline]
    pub fn take_bits(&mut self, b: u32) -> u64 {
        debug_assert!(b <= 64);
        if b == 0 {
            return 0;
        }
        self.bits_consumed += u64::from(b);
        if b <= self.avail {
            let out = if b == 64 { self.buf } else { self.buf & ((1u64 << b) - 1) };
            self.buf = if b == 64 { 0 } else { self.buf >> b };
            self.avail -= b;
            return out;
        }
        // Low part from what is left, high part from a fresh word.
        let low_bits = self.avail;
        let low = self.buf;
        let fresh = self.rng.next_u64();
        let need = b - low_bits;
        let high = if need == 64 { fresh } else { fresh & ((1u64 << need) - 1) };
        self.buf = if need == 64 { 0 } else { fresh >> need };
        self.avail = 64 - need;
        if low_bits == 0 {
            high
        } else {
            low | (high << low_bits)
        }
    }

    /// Uniform index in `[0, m)` by rejection on `ceil(log2 m)`-bit draws.
    pub fn uniform_index(&mut self, m: u64) -> Result<u64> {
        if m == 0 {
            return Err(Error::domain("uniform_index needs m >= 1"));
        }
        Ok(self.below(m))
    }

    /// [`Stream::uniform_index`] without the range check, for hot loops.
    #[inline]
    pub fn below(&mut self, m: u64) -> u64 {
        debug_assert!(m >= 1);
        if m == 1 {
            return 0;
        }
        let b = 64 - (m - 1).leading_zeros();
        loop {
            let x = self.take_bits(b);
            if x < m {
                return x;
            }
        }
    }

    /// Uniform value in `[0, m)` for arbitrarily large `m`.
    pub fn uniform_biguint(&mut self, m: &BigUint) -> Result<BigUint> {
        if m == &BigUint::ZERO {
            return Err(Error::domain("uniform range must be non-empty"));
        }
        let one = BigUint::from(1u8);
        if m == &one {
            return Ok(BigUint::ZERO);
        }
        let bits = (m - &one).bits();
        loop {
            let mut digits = Vec::with_capacity(bits.div_ceil(64) as usize);
            let mut left = bits;
            while left > 0 {
                let take = left.min(64) as u32;
                digits.push(self.take_bits(take));
                left -= u64::from(take);
            }
            let x = BigUint::from_slice(
                &digits
                    .iter()
                    .flat_map(|d| [*d as u32, (*d >> 32) as u32])
                    .collect::<Vec<_>>(),
            );
            if &x < m {
                return Ok(x);
            }
        }
    }

    /// Bernoulli draw with probability `num/den`, exact.
    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        debug_assert!(den > 0);
        self.below(den) < num
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }

    /// A fresh 64-bit seed drawn from this stream.
    pub fn next_seed(&mut self) -> Seed {
        Seed(self.take_bits(64))
    }
}
