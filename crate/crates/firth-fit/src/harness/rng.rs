//! Seeded, stream-stable random number generation for the verification
//! harness. All scenario generation and sphere sampling flows through this
//! wrapper so that a fixed seed reproduces byte-identical reports.

use ndarray::Array1;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Derive an independent child stream; used to give each scenario or
    /// scan its own deterministic stream regardless of evaluation order.
    pub fn child(&self, salt: u64) -> Self {
        let mut seed_bytes = [0u8; 32];
        let base = self.inner.get_seed();
        seed_bytes.copy_from_slice(&base);
        for (i, b) in salt.to_le_bytes().iter().enumerate() {
            seed_bytes[i] ^= b.wrapping_add(0x9e).rotate_left(i as u32);
        }
        seed_bytes[31] ^= 0xA5;
        Self {
            inner: ChaCha8Rng::from_seed(seed_bytes),
        }
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1].
    pub fn unit_open_zero(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // n is tiny here; modulo bias is negligible for n << 2^64
        (self.inner.next_u64() % n as u64) as usize
    }

    /// Standard normal pair via Box-Muller.
    pub fn gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = self.unit_open_zero();
        let u2 = self.unit();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (r * theta.cos(), r * theta.sin())
    }

    pub fn gaussian(&mut self) -> f64 {
        self.gaussian_pair().0
    }

    /// Uniformly distributed point on the unit sphere in R^p.
    pub fn unit_vector(&mut self, p: usize) -> Array1<f64> {
        loop {
            let mut v = Array1::<f64>::zeros(p);
            for j in 0..p {
                v[j] = self.gaussian();
            }
            let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            if norm > 1e-8 {
                v.mapv_inplace(|t| t / norm);
                return v;
            }
        }
    }

    pub fn bernoulli(&mut self, prob: f64) -> bool {
        self.unit() < prob
    }

    /// Binomial draw as m Bernoulli trials (m is small throughout).
    pub fn binomial(&mut self, m: u64, prob: f64) -> u64 {
        (0..m).filter(|_| self.bernoulli(prob)).count() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(7);
        let mut b = SeededRng::new(7);
        for _ in 0..100 {
            assert_eq!(a.unit().to_bits(), b.unit().to_bits());
        }
    }

    #[test]
    fn children_are_decorrelated_and_deterministic() {
        let root = SeededRng::new(7);
        let mut c1 = root.child(1);
        let mut c2 = root.child(2);
        let mut c1_again = SeededRng::new(7).child(1);
        let x1 = c1.unit();
        assert_ne!(x1.to_bits(), c2.unit().to_bits());
        assert_eq!(x1.to_bits(), c1_again.unit().to_bits());
    }

    #[test]
    fn unit_vectors_are_normalized() {
        let mut rng = SeededRng::new(3);
        for p in 1..=4 {
            let u = rng.unit_vector(p);
            let norm: f64 = u.iter().map(|t| t * t).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}
