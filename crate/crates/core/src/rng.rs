//! Counter-based random streams.
//!
//! Every stream is a Philox-2×64-10 keyed by a 64-bit key; the 128-bit
//! counter is `(draw index, substream)`. A stream therefore has no hidden
//! state beyond the draw index, and any pair `(key, substream)` names an
//! independent sequence. Run keys are derived as
//! `philox(master_seed; method_index, run_index)`, so adding a method or a
//! run never perturbs the draws of another one.

use rand_core::{impls, RngCore};
use rand_distr::{Distribution, StandardNormal};

const PHILOX_M: u64 = 0xD2B7_4407_B1CE_6E93;
const PHILOX_W: u64 = 0x9E37_79B9_7F4A_7C15;
const ROUNDS: usize = 10;

/// One Philox-2×64 block with 10 rounds.
pub fn philox2x64(counter: [u64; 2], key: u64) -> [u64; 2] {
    let mut ctr = counter;
    let mut k = key;
    for round in 0..ROUNDS {
        if round > 0 {
            k = k.wrapping_add(PHILOX_W);
        }
        let prod = (PHILOX_M as u128) * (ctr[0] as u128);
        let hi = (prod >> 64) as u64;
        let lo = prod as u64;
        ctr = [hi ^ k ^ ctr[1], lo];
    }
    ctr
}

/// Key of run `run_index` of method `method_index` under `master_seed`.
pub fn derive_key(master_seed: u64, method_index: u64, run_index: u64) -> u64 {
    philox2x64([method_index, run_index], master_seed)[0]
}

/// A reproducible random stream addressed by `(key, substream, draw index)`.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    substream: u64,
    counter: u64,
    buffered: Option<u64>,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self::with_substream(key, 0)
    }

    pub fn with_substream(key: u64, substream: u64) -> Self {
        CounterRng {
            key,
            substream,
            counter: 0,
            buffered: None,
        }
    }

    /// Stream for run `run_index` of method `method_index`.
    pub fn for_run(master_seed: u64, method_index: u64, run_index: u64) -> Self {
        Self::new(derive_key(master_seed, method_index, run_index))
    }

    /// An independent child stream sharing this stream's key.
    pub fn split(&self, substream: u64) -> Self {
        let child = philox2x64([self.substream, substream], self.key ^ PHILOX_M)[0];
        Self::with_substream(self.key, child)
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Number of Philox blocks consumed so far.
    pub fn blocks_drawn(&self) -> u64 {
        self.counter
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        // 53 high bits → [0, 1)
        let u = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * u
    }

    pub fn fill_uniform(&mut self, out: &mut [f64], lo: f64, hi: f64) {
        for x in out.iter_mut() {
            *x = self.uniform(lo, hi);
        }
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        if let Some(v) = self.buffered.take() {
            return v;
        }
        let [a, b] = philox2x64([self.counter, self.substream], self.key);
        self.counter = self.counter.wrapping_add(1);
        self.buffered = Some(b);
        a
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors published with the Random123 reference suite.
    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox2x64([0, 0], 0),
            [0xca00a0459843d731, 0x66c24222c9a845b5]
        );
        assert_eq!(
            philox2x64([u64::MAX, u64::MAX], u64::MAX),
            [0x65b021d60cd8310f, 0x4d02f3222f86df20]
        );
        assert_eq!(
            philox2x64([0x243f6a8885a308d3, 0x13198a2e03707344], 0xa4093822299f31d0),
            [0x0a5e742c2997341c, 0xb0f883d38000de5d]
        );
    }

    #[test]
    fn same_key_same_stream() {
        let mut a = CounterRng::for_run(7, 1, 3);
        let mut b = CounterRng::for_run(7, 1, 3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derived_keys_differ() {
        let keys: Vec<u64> = (0..4)
            .flat_map(|m| (0..50).map(move |r| derive_key(11, m, r)))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), keys.len());
    }

    #[test]
    fn split_streams_are_distinct() {
        let parent = CounterRng::new(42);
        let mut a = parent.split(0);
        let mut b = parent.split(1);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn uniform_in_range() {
        let mut r = CounterRng::new(1);
        for _ in 0..10_000 {
            let x = r.uniform(-2.0, 3.0);
            assert!((-2.0..3.0).contains(&x));
        }
    }

    #[test]
    fn normal_moments() {
        let mut r = CounterRng::new(5);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = r.standard_normal();
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }
}
