//! Seeded synthetic days, IMU sessions and recognition noise.
//!
//! Every generator is a pure function of its inputs and a `u64` seed.

mod noise;
mod signals;
mod template;

pub use noise::{corrupt_observations, corrupt_trace, NoiseChannel};
pub use signals::{synthesize_signals, ActivitySignal, ChannelSignal, SignalRecipe, Tone};
pub use template::{generate_corpus, generate_day, GeneratedDay, ScheduleEntry, ScheduleTemplate};

/// Derives an independent stream seed for item `index` of a seeded batch.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
