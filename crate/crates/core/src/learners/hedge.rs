//! Full-information exponential weights for the secondary user.

use super::{uniform_draw, LearnerError, WeightState};
use crate::env::Channel;
use crate::rng::SimRng;

/// `sqrt(8 ln K / T)`.
pub fn hedge_default_eta(channels: usize, horizon: u64) -> f64 {
    (8.0 * (channels as f64).ln() / horizon as f64).sqrt()
}

/// Samples a channel from `w_t / W_t`. The learning rate plays no part in sampling.
pub fn hedge_decide(state: &WeightState, _eta: f64, rng: &mut SimRng) -> Channel {
    state.sample(uniform_draw(rng))
}

/// `log w(j) += eta r(j)` for every channel, then `t += 1`.
pub fn hedge_update(
    state: &WeightState,
    eta: f64,
    rewards: &[u8],
) -> Result<WeightState, LearnerError> {
    let mut next = state.clone();
    apply(&mut next, eta, eta.exp(), rewards)?;
    Ok(next)
}

fn apply(
    state: &mut WeightState,
    eta: f64,
    factor: f64,
    rewards: &[u8],
) -> Result<(), LearnerError> {
    if rewards.len() != state.channels() {
        return Err(LearnerError::RewardLength {
            got: rewards.len(),
            expected: state.channels(),
        });
    }
    if let Some(&r) = rewards.iter().find(|&&r| r > 1) {
        return Err(LearnerError::BadReward(r));
    }
    for (j, &r) in rewards.iter().enumerate() {
        if r != 0 {
            state.add_scaled(j, eta, factor);
        }
    }
    state.advance();
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Hedge {
    eta: f64,
    factor: f64,
    state: WeightState,
}

impl Hedge {
    pub fn new(channels: usize, eta: f64) -> Self {
        Self {
            eta,
            factor: eta.exp(),
            state: WeightState::uniform(channels),
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn state(&self) -> &WeightState {
        &self.state
    }

    pub fn decide(&self, rng: &mut SimRng) -> Channel {
        hedge_decide(&self.state, self.eta, rng)
    }

    pub fn update(&mut self, rewards: &[u8]) -> Result<(), LearnerError> {
        apply(&mut self.state, self.eta, self.factor, rewards)
    }
}
