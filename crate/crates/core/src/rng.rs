//! Seeded random streams.
//!
//! Every stochastic routine in the crate draws from a [`Stream`], a ChaCha8
//! generator seeded from a 64-bit value. Independent runs and trials get
//! their own stream through [`derive_seed`], a SplitMix64 finalizer applied to
//! the pair `(base_seed, index)`; adding more runs therefore never changes the
//! streams of earlier ones.
//!
//! Gaussian variates are produced by the ziggurat sampler behind
//! [`rand_distr::StandardNormal`] (rand_distr 0.5) and then shifted and scaled
//! to the requested mean and standard deviation. One call to [`normal`] is one
//! "draw" for the purposes of stream-consumption accounting; uniform draws use
//! `Rng::random::<f64>()`, which maps 53 random bits to `[0, 1)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// The random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pure mixing function giving the seed of sub-stream `index` of `base_seed`.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ index.wrapping_mul(GOLDEN_GAMMA))
}

/// A stream seeded directly from `seed`.
pub fn stream(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

/// Sub-stream `index` of `base_seed`.
pub fn sub_stream(base_seed: u64, index: u64) -> Stream {
    stream(derive_seed(base_seed, index))
}

/// One draw from `Normal(mean, sd^2)`.
#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + sd * z
}

/// One uniform draw in `[0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
