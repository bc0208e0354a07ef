use num_complex::Complex32;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Portable Gaussian generator.
///
/// Word source: ChaCha8 seeded through `seed_from_u64`. Each normal pair
/// takes two 64-bit words `w1`, `w2`:
///
/// ```text
/// u1 = ((w1 >> 11) + 1) * 2^-53      in (0, 1]
/// u2 =  (w2 >> 11)      * 2^-53      in [0, 1)
/// r  = sqrt(-2 ln u1)
/// (z0, z1) = (r cos 2πu2, r sin 2πu2)
/// ```
#[derive(Debug, Clone)]
pub struct GaussianRng {
    words: ChaCha8Rng,
}

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

impl GaussianRng {
    pub fn new(seed: u64) -> Self {
        Self {
            words: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_word(&mut self) -> u64 {
        self.words.next_u64()
    }

    /// Two independent standard normal draws.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let w1 = self.words.next_u64();
        let w2 = self.words.next_u64();
        let u1 = ((w1 >> 11) + 1) as f64 * INV_2_53;
        let u2 = (w2 >> 11) as f64 * INV_2_53;
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        (r * theta.cos(), r * theta.sin())
    }

    /// Circularly-symmetric complex normal with per-component std `sigma`.
    pub fn complex(&mut self, sigma: f64) -> Complex32 {
        let (a, b) = self.normal_pair();
        Complex32::new((a * sigma) as f32, (b * sigma) as f32)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.words.next_u64() >> 11) as f64 * INV_2_53
    }
}
