//! Non-learning reference policies.

use rand::Rng;

use crate::env::Channel;
use crate::rng::SimRng;

/// Picks a channel uniformly at random every slot.
#[derive(Debug, Clone, Copy)]
pub struct UniformRandom {
    pub channels: usize,
}

impl UniformRandom {
    pub fn pick(&self, rng: &mut SimRng) -> Channel {
        rng.gen_range(0..self.channels)
    }
}

/// Always the same channel.
#[derive(Debug, Clone, Copy)]
pub struct FixedChannel {
    pub channel: Channel,
}

impl FixedChannel {
    pub fn pick(&self) -> Channel {
        self.channel
    }
}
