//! Slotted cognitive-radio environment.
//!
//! Each slot the primary users switch on or off, the secondary user (SU)
//! senses one channel and the attacker emulates a primary user on at most one
//! channel. A channel's attacker reward `x_t(j)` is 1 exactly when the SU
//! attempted `j` while its primary user was idle, i.e. the SU would have
//! occupied `j` had nobody attacked it. The reward on the attacked channel is
//! kept inside [`SlotOutcome`] and only leaves it through
//! [`SlotOutcome::attacker_hidden_reward`]; attackers get [`Feedback`] built
//! from the observed channels alone.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::Feedback;
use crate::rng::SimRng;

/// Channel index, zero-based.
pub type Channel = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("need at least 2 channels, got {0}")]
    TooFewChannels(usize),
    #[error("{field} has length {got}, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("{field}[{channel}] = {value} is not a probability in [0, 1]")]
    BadProbability {
        field: &'static str,
        channel: Channel,
        value: f64,
    },
    #[error("channel {channel} out of range for {channels} channels")]
    ChannelOutOfRange { channel: Channel, channels: usize },
    #[error("observation set contains the attacked channel {0}")]
    ObservesAttackedChannel(Channel),
    #[error("observation set lists channel {0} twice")]
    DuplicateObservation(Channel),
}

/// Primary-user activity process, one independent chain per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PuModel {
    /// Channel `k` is idle in every slot with probability `idle_prob[k]`.
    Iid { idle_prob: Vec<f64> },
    /// Two-state chain: `p01` busy->idle, `p10` idle->busy, `p1` initial idle probability.
    Markov {
        p01: Vec<f64>,
        p10: Vec<f64>,
        p1: Vec<f64>,
    },
}

impl PuModel {
    pub fn channels(&self) -> usize {
        match self {
            PuModel::Iid { idle_prob } => idle_prob.len(),
            PuModel::Markov { p01, .. } => p01.len(),
        }
    }

    /// Checks every vector has `channels` entries in `[0, 1]`.
    pub fn validate(self, channels: usize) -> Result<Self, EnvError> {
        if channels < 2 {
            return Err(EnvError::TooFewChannels(channels));
        }
        match &self {
            PuModel::Iid { idle_prob } => check_probs("idle_prob", idle_prob, channels)?,
            PuModel::Markov { p01, p10, p1 } => {
                check_probs("p01", p01, channels)?;
                check_probs("p10", p10, channels)?;
                check_probs("p1", p1, channels)?;
            }
        }
        Ok(self)
    }

    /// Long-run fraction of idle slots per channel.
    pub fn stationary_idle(&self) -> Vec<f64> {
        match self {
            PuModel::Iid { idle_prob } => idle_prob.clone(),
            PuModel::Markov { p01, p10, p1 } => p01
                .iter()
                .zip(p10)
                .zip(p1)
                .map(|((&on_off, &off_on), &init)| {
                    let s = on_off + off_on;
                    // a frozen chain keeps its initial distribution
                    if s == 0.0 {
                        init
                    } else {
                        on_off / s
                    }
                })
                .collect(),
        }
    }
}

fn check_probs(field: &'static str, v: &[f64], channels: usize) -> Result<(), EnvError> {
    if v.len() != channels {
        return Err(EnvError::LengthMismatch {
            field,
            got: v.len(),
            expected: channels,
        });
    }
    match v.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(channel) => Err(EnvError::BadProbability {
            field,
            channel,
            value: v[channel],
        }),
        None => Ok(()),
    }
}

/// Validates a model against a channel count.
pub fn validate_pu_model(model: PuModel, channels: usize) -> Result<PuModel, EnvError> {
    model.validate(channels)
}

/// PU activity in one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelState {
    /// Slot index, starting at 1.
    pub t: u64,
    /// `true` when the primary user is inactive.
    pub pu_idle: Vec<bool>,
}

impl ChannelState {
    /// Draws the first slot.
    pub fn initial(model: &PuModel, rng: &mut SimRng) -> Self {
        let pu_idle = match model {
            PuModel::Iid { idle_prob } => idle_prob.iter().map(|&p| rng.gen::<f64>() < p).collect(),
            PuModel::Markov { p1, .. } => p1.iter().map(|&p| rng.gen::<f64>() < p).collect(),
        };
        Self { t: 1, pu_idle }
    }

    /// Moves to the next slot in place.
    pub fn advance(&mut self, model: &PuModel, rng: &mut SimRng) {
        match model {
            PuModel::Iid { idle_prob } => {
                for (idle, &p) in self.pu_idle.iter_mut().zip(idle_prob) {
                    *idle = rng.gen::<f64>() < p;
                }
            }
            PuModel::Markov { p01, p10, .. } => {
                for (k, idle) in self.pu_idle.iter_mut().enumerate() {
                    let u = rng.gen::<f64>();
                    *idle = if *idle { u >= p10[k] } else { u < p01[k] };
                }
            }
        }
        self.t += 1;
    }

    pub fn channels(&self) -> usize {
        self.pu_idle.len()
    }
}

/// Produces the PU state of the next slot (`prev = None` for slot 1).
pub fn step_pu(model: &PuModel, prev: Option<&ChannelState>, rng: &mut SimRng) -> ChannelState {
    match prev {
        None => ChannelState::initial(model, rng),
        Some(prev) => {
            let mut next = prev.clone();
            next.advance(model, rng);
            next
        }
    }
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub su_channel: Channel,
    pub su_transmitted: bool,
    hidden_reward: u8,
    /// `(channel, x_t(channel))` for every observed channel.
    pub observations: Vec<(Channel, u8)>,
    /// Full-information reward vector for the SU learner.
    pub su_rewards: Vec<u8>,
}

impl SlotOutcome {
    /// `x_t(I_t)`: what the attack earned. Zero when nothing was attacked.
    pub fn attacker_hidden_reward(&self) -> u8 {
        self.hidden_reward
    }

    /// The only view of the slot an attacker learner may consume.
    pub fn attacker_feedback(&self) -> Feedback {
        Feedback::new(self.observations.clone())
    }

    #[cfg(test)]
    pub(crate) fn set_hidden_reward(&mut self, r: u8) {
        self.hidden_reward = r;
    }
}

/// Attacker reward `x_t(j)` given the PU state and the SU's attempted channel.
pub fn attacker_reward(state: &ChannelState, su_choice: Channel, channel: Channel) -> u8 {
    u8::from(channel == su_choice && state.pu_idle[channel])
}

/// Resolves sensing, attack, transmission and observation for one slot.
///
/// `attack = None` means no PUE signal is sent this slot (a POLA observe slot
/// or the no-attacker baseline).
pub fn resolve_slot(
    state: &ChannelState,
    su_choice: Channel,
    attack: Option<Channel>,
    observe_set: &[Channel],
) -> Result<SlotOutcome, EnvError> {
    let channels = state.channels();
    let in_range = |channel: Channel| {
        if channel < channels {
            Ok(())
        } else {
            Err(EnvError::ChannelOutOfRange { channel, channels })
        }
    };
    in_range(su_choice)?;
    if let Some(a) = attack {
        in_range(a)?;
    }
    let mut seen = vec![0u64; channels.div_ceil(64)];
    for &j in observe_set {
        in_range(j)?;
        if Some(j) == attack {
            return Err(EnvError::ObservesAttackedChannel(j));
        }
        let (word, bit) = (j / 64, 1u64 << (j % 64));
        if seen[word] & bit != 0 {
            return Err(EnvError::DuplicateObservation(j));
        }
        seen[word] |= bit;
    }

    let su_transmitted = state.pu_idle[su_choice] && Some(su_choice) != attack;
    let hidden_reward = attack.map_or(0, |a| attacker_reward(state, su_choice, a));
    let observations = observe_set
        .iter()
        .map(|&j| (j, attacker_reward(state, su_choice, j)))
        .collect();
    let su_rewards = state
        .pu_idle
        .iter()
        .enumerate()
        .map(|(j, &idle)| u8::from(idle && Some(j) != attack))
        .collect();

    Ok(SlotOutcome {
        su_channel: su_choice,
        su_transmitted,
        hidden_reward,
        observations,
        su_rewards,
    })
}

/// Realized `T x K` attacker-reward table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RewardMatrix {
    channels: usize,
    rows: Vec<Vec<u8>>,
}

impl RewardMatrix {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            rows: Vec::new(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<u8>>) -> Self {
        let channels = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == channels),
            "ragged reward matrix"
        );
        Self { channels, rows }
    }

    /// Appends the row `x_t(.)` for a slot where the SU attempted `su_choice`.
    pub fn push_slot(&mut self, state: &ChannelState, su_choice: Channel) {
        let row = (0..self.channels)
            .map(|j| attacker_reward(state, su_choice, j))
            .collect();
        self.rows.push(row);
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn slots(&self) -> usize {
        self.rows.len()
    }

    /// Row for slot `t` (1-based).
    pub fn row(&self, t: usize) -> &[u8] {
        &self.rows[t - 1]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.rows.iter().map(Vec::as_slice)
    }
}
