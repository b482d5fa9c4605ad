//! Mutable-workspace accounting.
//!
//! Algorithms declare the registers they keep live, each by the largest
//! value it may hold. The meter tracks the live register count and their
//! total bit width and remembers the peaks. The graph, random streams and
//! emitted output are never charged.

use std::cell::Cell;

#[derive(Debug, Default)]
pub struct WorkspaceMeter {
    live_words: Cell<usize>,
    live_bits: Cell<u64>,
    peak_words: Cell<usize>,
    peak_bits: Cell<u64>,
}

/// Bits needed to hold any value in `0..=max`.
pub fn bit_width(max: u64) -> u64 {
    u64::from(64 - max.leading_zeros()).max(1)
}

impl WorkspaceMeter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Charges one register per entry of `maxima` until the scope drops.
    #[must_use]
    pub fn scope(&self, maxima: &[u64]) -> Scope<'_> {
        let bits: u64 = maxima.iter().map(|&m| bit_width(m)).sum();
        let words = maxima.len();
        self.live_words.set(self.live_words.get() + words);
        self.live_bits.set(self.live_bits.get() + bits);
        if self.live_words.get() > self.peak_words.get() {
            self.peak_words.set(self.live_words.get());
        }
        if self.live_bits.get() > self.peak_bits.get() {
            self.peak_bits.set(self.live_bits.get());
        }
        Scope {
            meter: self,
            words,
            bits,
        }
    }

    pub fn peak_words(&self) -> usize {
        self.peak_words.get()
    }

    pub fn peak_bits(&self) -> u64 {
        self.peak_bits.get()
    }

    pub fn live_words(&self) -> usize {
        self.live_words.get()
    }
}

pub struct Scope<'a> {
    meter: &'a WorkspaceMeter,
    words: usize,
    bits: u64,
}

impl Drop for Scope<'_> {
    fn drop(&mut self) {
        self.meter
            .live_words
            .set(self.meter.live_words.get() - self.words);
        self.meter.live_bits.set(self.meter.live_bits.get() - self.bits);
    }
}
