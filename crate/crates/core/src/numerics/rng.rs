use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded sampling stream backed by ChaCha8.
///
/// Independent streams for the same seed are selected with [`SimRng::stream`],
/// so separate noise sources never share samples.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Draw from `N(mean, std^2)`; `std == 0` returns `mean` without consuming randomness.
    pub fn gauss(&mut self, mean: f64, std: f64) -> f64 {
        if std == 0.0 {
            mean
        } else {
            mean + std * self.standard_normal()
        }
    }

    pub fn gauss_vec(&mut self, len: usize, mean: f64, std: f64) -> Vec<f64> {
        (0..len).map(|_| self.gauss(mean, std)).collect()
    }

    /// Circularly symmetric complex Gaussian with unit total variance.
    pub fn complex_normal(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(s * self.standard_normal(), s * self.standard_normal())
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }
}
