use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Deterministic generator for replicate `stream` of a run seeded with `seed`.
///
/// Every independent draw sequence (one dataset point, one bootstrap
/// replicate) gets its own ChaCha8 stream, so results do not depend on the
/// order or thread in which replicates are evaluated.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    let draw: f64 = dist.sample(rng);
    draw as u64
}
