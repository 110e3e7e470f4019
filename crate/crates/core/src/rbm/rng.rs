//! Counter-based noise: every `(master seed, replica, purpose)` selects an
//! independent ChaCha8 stream, and each simulation step reads a fixed number
//! of words from it, so the normals of step `k` are determined by
//! `(seed, replica, k)` alone and replicas can run in any order.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sub-stream selector; distinct purposes never share words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Increments = 1,
    Start = 2,
    Sampling = 3,
}

pub fn replica_rng(seed: u64, replica: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replica << 8) | purpose as u64);
    rng
}

/// Uniform on `(0, 1]` from the top 53 bits.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal increments, `dim` per step, drawn by Box–Muller with a
/// fixed budget of two `u64` words per pair.
pub struct StepNoise {
    rng: ChaCha8Rng,
    dim: usize,
    next_step: u64,
}

impl StepNoise {
    pub fn new(seed: u64, replica: u64, dim: usize) -> Self {
        Self { rng: replica_rng(seed, replica, StreamPurpose::Increments), dim, next_step: 0 }
    }

    /// 32-bit words consumed by one step.
    fn words_per_step(&self) -> u128 {
        4 * self.dim.div_ceil(2) as u128
    }

    /// Positions the stream at step `k`.
    pub fn seek(&mut self, step: u64) {
        self.rng.set_word_pos(step as u128 * self.words_per_step());
        self.next_step = step;
    }

    /// Fills `out` with the normals of the next step.
    pub fn fill_next(&mut self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        let mut i = 0;
        while i < self.dim {
            let r = (-2.0 * open_unit(&mut self.rng).ln()).sqrt();
            let theta = TAU * ((self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64));
            out[i] = r * theta.cos();
            if i + 1 < self.dim {
                out[i + 1] = r * theta.sin();
            }
            i += 2;
        }
        self.next_step += 1;
    }

    /// Normals of step `k`, by random access.
    pub fn at(&mut self, step: u64) -> Vec<f64> {
        self.seek(step);
        let mut out = vec![0.0; self.dim];
        self.fill_next(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_random_access_agree() {
        let mut seq = StepNoise::new(42, 3, 3);
        let mut buf = vec![0.0; 3];
        let mut draws = Vec::new();
        for _ in 0..10 {
            seq.fill_next(&mut buf);
            draws.push(buf.clone());
        }
        let mut random = StepNoise::new(42, 3, 3);
        for k in [7u64, 2, 9, 0] {
            assert_eq!(random.at(k), draws[k as usize]);
        }
    }

    #[test]
    fn replicas_use_distinct_streams() {
        assert_ne!(StepNoise::new(1, 0, 2).at(0), StepNoise::new(1, 1, 2).at(0));
        assert_ne!(StepNoise::new(1, 0, 2).at(0), StepNoise::new(2, 0, 2).at(0));
    }

    #[test]
    fn moments_are_standard() {
        let mut noise = StepNoise::new(9, 0, 2);
        let mut buf = [0.0; 2];
        let (mut sum, mut sq) = (0.0, 0.0);
        let n = 200_000;
        for _ in 0..n / 2 {
            noise.fill_next(&mut buf);
            sum += buf[0] + buf[1];
            sq += buf[0] * buf[0] + buf[1] * buf[1];
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01 && (var - 1.0).abs() < 0.01, "mean {mean}, var {var}");
    }
}
