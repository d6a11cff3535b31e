//! Counter-based random streams.
//!
//! One master seed keys a ChaCha generator; every `(trial, purpose)` pair
//! selects its own ChaCha stream under that key. Draws in one trial never
//! depend on how many draws another trial (or another purpose in the same
//! trial) consumed, so parallel runs are bitwise reproducible regardless of
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// What a stream is used for. The discriminant is part of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    OfflineContexts = 0,
    SamplerContexts = 1,
    SamplerActions = 2,
    Rewards = 3,
    TrueFunction = 4,
    Adaptive = 5,
    Aux = 6,
}

impl Purpose {
    pub const ALL: [Purpose; 7] = [
        Purpose::OfflineContexts,
        Purpose::SamplerContexts,
        Purpose::SamplerActions,
        Purpose::Rewards,
        Purpose::TrueFunction,
        Purpose::Adaptive,
        Purpose::Aux,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Purpose::OfflineContexts => "offline_contexts",
            Purpose::SamplerContexts => "sampler_contexts",
            Purpose::SamplerActions => "sampler_actions",
            Purpose::Rewards => "rewards",
            Purpose::TrueFunction => "true_function",
            Purpose::Adaptive => "adaptive",
            Purpose::Aux => "aux",
        }
    }
}

const PURPOSE_SLOTS: u64 = 16;

/// Derives independent generators from a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Substreams {
    master: u64,
}

impl Substreams {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// ChaCha stream id used for `(trial, purpose)`.
    pub fn stream_id(trial: u64, purpose: Purpose) -> u64 {
        trial
            .wrapping_mul(PURPOSE_SLOTS)
            .wrapping_add(purpose as u64)
    }

    pub fn rng(&self, trial: u64, purpose: Purpose) -> StreamRng {
        let mut rng = ChaCha12Rng::from_seed(expand_seed(self.master));
        rng.set_stream(Self::stream_id(trial, purpose));
        rng
    }

    /// The three sampler streams of one trial.
    pub fn sampler(&self, trial: u64) -> SamplerStreams {
        SamplerStreams {
            contexts: self.rng(trial, Purpose::SamplerContexts),
            actions: self.rng(trial, Purpose::SamplerActions),
            rewards: self.rng(trial, Purpose::Rewards),
        }
    }
}

/// SplitMix64 expansion of a 64-bit seed into a 256-bit ChaCha key.
fn expand_seed(master: u64) -> [u8; 32] {
    let mut state = master;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    key
}

/// Separate streams for contexts, uniform action draws and reward noise.
/// Keeping them apart means two plans deployed on the same streams see the
/// same context sequence.
#[derive(Debug, Clone)]
pub struct SamplerStreams {
    pub contexts: StreamRng,
    pub actions: StreamRng,
    pub rewards: StreamRng,
}

impl SamplerStreams {
    pub fn from_seed(seed: u64) -> Self {
        Substreams::new(seed).sampler(0)
    }
}
