use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator handed out by [`RngStream`].
pub type StreamRng = ChaCha20Rng;

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// The pair maps to a ChaCha20 key and stream number, so distinct ids never
/// share a keystream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut r = ChaCha20Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream_id);
        r
    }

    /// Child stream for sub-task `index`. Children of different parents or
    /// different indices get different keys.
    pub fn derive(&self, index: u64) -> RngStream {
        let key = splitmix(splitmix(self.seed) ^ self.stream_id.rotate_left(17));
        RngStream { seed: key, stream_id: index }
    }
}
