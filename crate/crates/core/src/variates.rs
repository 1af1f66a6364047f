//! Seeded, splittable random streams and the Gaussian / χ variates built on
//! top of them.
//!
//! A [`RandomStream`] is identified by a 64-bit key derived from
//! `(seed, index)` through a SplitMix64 mix. The key seeds a ChaCha8
//! generator, so the tape is a pure function of the key and the number of
//! draws. Child streams are derived with [`RandomStream::split`], which
//! mixes the parent key with the child index; the parent's draw position
//! does not influence the child.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn derive_key(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index.wrapping_add(GOLDEN)))
}

#[derive(Clone, Debug)]
pub struct RandomStream {
    key: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    fn from_key(key: u64) -> Self {
        let mut seed = [0u8; 32];
        for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
            let word = mix64(key.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN)));
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self {
            key,
            rng: ChaCha8Rng::from_seed(seed),
        }
    }

    /// The 64-bit state key this stream was started from.
    pub fn key(&self) -> u64 {
        self.key
    }

    /// Child stream `index`. Independent of how far `self` has advanced.
    pub fn split(&self, index: u64) -> Self {
        Self::from_key(derive_key(self.key, index))
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_position(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Deterministic substream `index` of the experiment seeded with `seed`.
pub fn split_stream(seed: u64, index: u64) -> RandomStream {
    RandomStream::from_key(derive_key(mix64(seed), index))
}

/// Degrees-of-freedom parameter of a χ variate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiParam(f64);

impl ChiParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "chi parameter must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(Self(alpha))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

/// One standard normal variate.
pub fn gaussian(stream: &mut RandomStream) -> f64 {
    StandardNormal.sample(stream)
}

/// One χ_α variate with E[χ²] = α, i.e. the square root of a gamma variate
/// with shape α/2 and scale 2. χ_0 is exactly 0.
pub fn chi(stream: &mut RandomStream, param: ChiParam) -> f64 {
    let alpha = param.alpha();
    if alpha == 0.0 {
        return 0.0;
    }
    let shape = 0.5 * alpha;
    if shape >= 1.0 {
        let g = Gamma::new(shape, 2.0).expect("shape and scale are positive");
        return g.sample(stream).sqrt();
    }
    // Shape < 1: G(a) = G(a + 1)·U^(1/a), carried in log space so tiny
    // shapes do not underflow to zero.
    let boosted = Gamma::new(shape + 1.0, 2.0).expect("shape and scale are positive");
    let y: f64 = boosted.sample(stream);
    let u: f64 = stream.random::<f64>();
    // random::<f64>() is in [0, 1); map to (0, 1].
    let log_u = (1.0 - u).ln();
    let log_chi = 0.5 * (y.ln() + log_u / shape);
    log_chi.exp().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_of_squares(alpha: f64, draws: usize, seed: u64) -> (f64, f64) {
        let mut s = split_stream(seed, 0);
        let p = ChiParam::new(alpha).unwrap();
        let xs: Vec<f64> = (0..draws).map(|_| chi(&mut s, p).powi(2)).collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        (mean, (var / draws as f64).sqrt())
    }

    #[test]
    fn gaussian_moments() {
        let mut s = split_stream(1, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| gaussian(&mut s)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 5.0 * (1.0 / n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn replay_is_identical() {
        let mut a = split_stream(42, 0);
        let mut b = split_stream(42, 0);
        for _ in 0..3 {
            assert_eq!(gaussian(&mut a).to_bits(), gaussian(&mut b).to_bits());
        }
    }

    #[test]
    fn chi_zero_is_exactly_zero() {
        let mut s = split_stream(3, 3);
        let p = ChiParam::new(0.0).unwrap();
        assert_eq!(chi(&mut s, p), 0.0);
        // Degenerate draws do not advance the stream.
        assert_eq!(s.word_position(), 0);
    }

    #[test]
    fn chi_rejects_negative() {
        assert!(ChiParam::new(-0.1).is_err());
        assert!(ChiParam::new(f64::NAN).is_err());
    }

    #[test]
    fn chi_square_moment_alpha_3() {
        let (m, _) = mean_of_squares(3.0, 100_000, 11);
        assert!((m - 3.0).abs() < 0.05, "mean {m}");
    }

    #[test]
    fn chi_square_moment_alpha_half() {
        let (m, _) = mean_of_squares(0.5, 100_000, 12);
        assert!((m - 0.5).abs() < 0.02, "mean {m}");
    }

    #[test]
    fn chi_square_moment_grid() {
        for (k, &alpha) in [0.5, 1.0, 2.0, 8.0, 64.0].iter().enumerate() {
            let (m, se) = mean_of_squares(alpha, 100_000, 100 + k as u64);
            assert!((m - alpha).abs() < 5.0 * se, "alpha {alpha}: {m} ± {se}");
        }
    }

    #[test]
    fn chi_strictly_positive_for_small_alpha() {
        let mut s = split_stream(5, 0);
        for &alpha in &[1e-3, 0.01, 0.3, 1.0, 7.0] {
            let p = ChiParam::new(alpha).unwrap();
            for _ in 0..10_000 {
                assert!(chi(&mut s, p) > 0.0);
            }
        }
    }

    #[test]
    fn same_substream_same_tape() {
        let mut a = split_stream(7, 0);
        let mut b = split_stream(7, 0);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn neighbouring_substreams_differ_everywhere() {
        let mut a = split_stream(7, 0);
        let mut b = split_stream(7, 1);
        for _ in 0..100 {
            assert_ne!(gaussian(&mut a), gaussian(&mut b));
        }
    }

    #[test]
    fn thousand_substreams_have_distinct_first_values() {
        let mut firsts: Vec<u64> = (0..1000)
            .map(|k| gaussian(&mut split_stream(7, k)).to_bits())
            .collect();
        firsts.sort_unstable();
        firsts.dedup();
        assert_eq!(firsts.len(), 1000);
    }

    #[test]
    fn key_derivation_avalanches() {
        let mut total = 0u32;
        let mut trials = 0u32;
        for base in 0..64u64 {
            let k0 = split_stream(base, 17).key();
            for bit in 0..64 {
                total += (k0 ^ split_stream(base ^ (1 << bit), 17).key()).count_ones();
                total += (k0 ^ split_stream(base, 17 ^ (1 << bit)).key()).count_ones();
                trials += 2;
            }
        }
        let avg = total as f64 / trials as f64;
        assert!((avg - 32.0).abs() < 0.5, "average flipped bits {avg}");
    }

    #[test]
    fn split_ignores_parent_position() {
        let parent = split_stream(9, 4);
        let mut advanced = parent.clone();
        for _ in 0..10 {
            advanced.next_u64();
        }
        let mut a = parent.split(3);
        let mut b = advanced.split(3);
        assert_eq!(a.next_u64(), b.next_u64());
    }
}
