//! Deterministic random streams.
//!
//! Every random draw in the simulator comes from a ChaCha8 stream keyed by
//! `(master_seed, purpose)` and selected by a stream id (usually the user
//! id). Streams never share state, so an episode's outcome depends only on
//! its own key and not on how episodes are scheduled across threads.
//!
//! Splitting draws by purpose is what makes common random numbers work: two
//! rollouts of the same user that differ only in the recommended actions
//! consume exactly the same chain, organic, click and sale draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a stream is used for. The discriminant is mixed into the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Catalog = 1,
    UserInit = 2,
    Chain = 3,
    Organic = 4,
    Click = 5,
    Sale = 6,
    Policy = 7,
    Training = 8,
    Bootstrap = 9,
    Harness = 10,
}

/// Independent stream for `(master_seed, purpose, stream_id)`.
pub fn substream(master_seed: u64, purpose: Purpose, stream_id: u64) -> SimRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_id);
    rng
}

/// splitmix64 finalizer, used to derive child seeds from a parent seed.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The per-purpose streams owned by one simulated user.
#[derive(Debug, Clone)]
pub struct UserStreams {
    pub init: SimRng,
    pub chain: SimRng,
    pub organic: SimRng,
    pub click: SimRng,
    pub sale: SimRng,
    pub policy: SimRng,
}

impl UserStreams {
    pub fn new(master_seed: u64, user_id: u64) -> Self {
        Self {
            init: substream(master_seed, Purpose::UserInit, user_id),
            chain: substream(master_seed, Purpose::Chain, user_id),
            organic: substream(master_seed, Purpose::Organic, user_id),
            click: substream(master_seed, Purpose::Click, user_id),
            sale: substream(master_seed, Purpose::Sale, user_id),
            policy: substream(master_seed, Purpose::Policy, user_id),
        }
    }
}
