use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream keyed by a master seed and two indices.
pub(crate) fn stream(master: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((a << 32) | (b & 0xffff_ffff));
    rng
}
