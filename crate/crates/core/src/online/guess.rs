use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `6 / pi^2`, the normalizer making `sum_k 1/(k+1)^2` a distribution.
pub const GUESS_MASS: f64 = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);

/// Past this many terms the inverse-CDF walk switches to the tail asymptote.
const WALK_LIMIT: u32 = 1 << 20;

/// A sampled doubly-exponential guess `2^(2^k)`, stored by its exponent `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessSample {
    pub k: u32,
    pub probability: f64,
}

impl GuessSample {
    pub fn new(k: u32) -> Self {
        Self { k, probability: guess_probability(k) }
    }

    /// `log2 log2` of the guessed bound; the bound itself is `2^(2^k)`.
    pub fn log2_log2_bound(&self) -> u32 {
        self.k
    }
}

/// `P(k) = 6 / (pi^2 (k+1)^2)`.
pub fn guess_probability(k: u32) -> f64 {
    let j = k as f64 + 1.0;
    GUESS_MASS / (j * j)
}

/// Draws `k` by walking the CDF, using a ChaCha8 stream seeded with `seed`.
pub fn sample_guess(seed: u64) -> GuessSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: f64 = rng.random();
    let mut cdf = 0.0;
    for k in 0..WALK_LIMIT {
        cdf += guess_probability(k);
        if cdf > u {
            return GuessSample::new(k);
        }
    }
    // P(K >= k) ~ 6 / (pi^2 (k + 1/2)); only reachable for u within ~6e-7 of 1.
    let k = (GUESS_MASS / (1.0 - u) - 0.5).floor().clamp(WALK_LIMIT as f64, u32::MAX as f64);
    GuessSample::new(k as u32)
}
