use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent, reproducible substream `stream` of the generator seeded with
/// `seed`. Work item `i` of a parallel batch uses stream `i`, so results do
/// not depend on the thread count or scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
