use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent ChaCha8 streams per consumer, so one seed drives every sampler
/// without the draws of one leaking into another.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub(crate) enum Stream {
    RandomPixels = 1,
    Noise = 2,
    KeypointTies = 3,
    KeypointFill = 4,
    LidarCap = 5,
    LossAnchors = 6,
}

pub(crate) fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
