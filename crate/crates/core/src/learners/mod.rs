//! Exponential-weights learners for the attacker and the secondary user.
//!
//! * [`pola`]: play-or-observe, for an attacker that can either attack or
//!   observe in a slot but not both.
//! * [`prola`]: play-and-random-observe, for an attacker that attacks one
//!   channel and then observes `m` other channels picked uniformly at random.
//! * [`hedge`]: full-information exponential weights run by the SU.
//! * [`baseline`]: uniform-random and fixed-channel policies.
//!
//! All weight vectors live in the log domain ([`WeightState`]); sampling
//! uses inverse-CDF over ascending channel index with one uniform draw.

pub mod baseline;
pub mod hedge;
pub mod pola;
pub mod prola;

use rand::Rng;
use thiserror::Error;

use crate::env::Channel;
use crate::rng::SimRng;

pub use baseline::{FixedChannel, UniformRandom};
pub use hedge::{hedge_decide, hedge_default_eta, hedge_update, Hedge};
pub use pola::{
    pola_decide, pola_default_eta, pola_delta, pola_estimates, pola_eta_cap,
    pola_horizon_threshold, pola_update, Pola, PolaParams,
};
pub use prola::{
    prola_decide, prola_default_params, prola_estimates, prola_horizon_threshold, prola_probs,
    prola_update, Prola, ProlaParams,
};

/// A log-weight above this triggers renormalization (subtract the max).
pub const RENORM_THRESHOLD: f64 = 500.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    #[error("need at least 2 channels, got {0}")]
    TooFewChannels(usize),
    #[error("horizon T = {horizon} is too short for the default learning rate: needs T {rule} = {threshold:.3}; supply eta explicitly")]
    HorizonTooShort {
        horizon: u64,
        threshold: f64,
        rule: &'static str,
    },
    #[error("learning rate {eta} outside admissible range (0, {cap}]")]
    InadmissibleEta { eta: f64, cap: f64 },
    #[error("exploration rate {0} outside (0, 1)")]
    BadGamma(f64),
    #[error("observation count m = {m} outside [1, {max}]")]
    BadObservationCount { m: usize, max: usize },
    #[error("log-weight {index} is not finite")]
    NonFiniteWeight { index: usize },
    #[error("reward {0} is not 0 or 1")]
    BadReward(u8),
    #[error("feedback does not match the decision: {0}")]
    FeedbackMismatch(String),
    #[error("reward vector has length {got}, expected {expected}")]
    RewardLength { got: usize, expected: usize },
}

/// Exponential-weights state: `log_weights[i] = ln w_t(i)` plus the slot counter.
///
/// A cache of `exp(log_weights)` is kept alongside so sampling costs one pass.
/// Whenever a log-weight exceeds [`RENORM_THRESHOLD`] the maximum is
/// subtracted from every entry; only weight ratios matter to the learners.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightState {
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    t: u64,
}

impl WeightState {
    /// `w_1(i) = 1` for every channel, `t = 1`.
    pub fn uniform(channels: usize) -> Self {
        Self {
            log_weights: vec![0.0; channels],
            weights: vec![1.0; channels],
            t: 1,
        }
    }

    pub fn from_log_weights(log_weights: Vec<f64>, t: u64) -> Result<Self, LearnerError> {
        if let Some(index) = log_weights.iter().position(|w| !w.is_finite()) {
            return Err(LearnerError::NonFiniteWeight { index });
        }
        let weights = log_weights.iter().map(|w| w.exp()).collect();
        let mut s = Self {
            log_weights,
            weights,
            t: t.max(1),
        };
        let max = s.max_log_weight();
        if !(-RENORM_THRESHOLD..=RENORM_THRESHOLD).contains(&max) {
            s.renormalize();
        }
        Ok(s)
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Unnormalized weights, `exp(log_weights)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn channels(&self) -> usize {
        self.log_weights.len()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `w_t(i) / sum_j w_t(j)`.
    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total();
        self.weights.iter().map(|w| w / total).collect()
    }

    /// Inverse-CDF draw from the normalized weights.
    pub fn sample(&self, u: f64) -> Channel {
        sample_index(&self.weights, self.total(), u)
    }

    pub(crate) fn add(&mut self, index: usize, delta: f64) {
        self.log_weights[index] += delta;
        self.weights[index] = self.log_weights[index].exp();
        if self.log_weights[index] > RENORM_THRESHOLD {
            self.renormalize();
        }
    }

    /// `add(index, delta)` with `factor = exp(delta)` precomputed by the caller.
    pub(crate) fn add_scaled(&mut self, index: usize, delta: f64, factor: f64) {
        self.log_weights[index] += delta;
        self.weights[index] *= factor;
        if self.log_weights[index] > RENORM_THRESHOLD {
            self.renormalize();
        }
    }

    pub(crate) fn advance(&mut self) {
        self.t += 1;
    }

    fn max_log_weight(&self) -> f64 {
        self.log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn renormalize(&mut self) {
        let max = self.max_log_weight();
        for (lw, w) in self.log_weights.iter_mut().zip(&mut self.weights) {
            *lw -= max;
            *w = lw.exp();
        }
    }
}

/// Inverse-CDF sampling over ascending index: the first `i` whose cumulative
/// weight exceeds `u * total`. Rounding past the end falls back to the last
/// index with positive weight.
pub fn sample_index(weights: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if acc > target {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

pub(crate) fn uniform_draw(rng: &mut SimRng) -> f64 {
    rng.gen::<f64>()
}

/// What the attacker does in one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    /// POLA attack slot: emulate a PU on `channel`, observe nothing.
    PolaAttack { channel: Channel },
    /// POLA observe slot: no attack, watch `channel`.
    PolaObserve { channel: Channel },
    /// PROLA: attack `attack`, then observe every channel in `observe`.
    ProlaAct {
        attack: Channel,
        observe: Vec<Channel>,
    },
}

impl Decision {
    pub fn attacked(&self) -> Option<Channel> {
        match self {
            Decision::PolaAttack { channel } => Some(*channel),
            Decision::PolaObserve { .. } => None,
            Decision::ProlaAct { attack, .. } => Some(*attack),
        }
    }

    pub fn observed(&self) -> &[Channel] {
        match self {
            Decision::PolaAttack { .. } => &[],
            Decision::PolaObserve { channel } => std::slice::from_ref(channel),
            Decision::ProlaAct { observe, .. } => observe,
        }
    }
}

/// Observed `(channel, reward)` pairs; empty after a POLA attack slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Feedback {
    observations: Vec<(Channel, u8)>,
}

impl Feedback {
    pub fn new(observations: Vec<(Channel, u8)>) -> Self {
        Self { observations }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn observations(&self) -> &[(Channel, u8)] {
        &self.observations
    }

    /// Checks the feedback covers exactly the decision's observed channels
    /// (same order) and every reward is binary.
    pub(crate) fn check_against(&self, decision: &Decision) -> Result<(), LearnerError> {
        let want = decision.observed();
        if self.observations.len() != want.len()
            || self
                .observations
                .iter()
                .zip(want)
                .any(|(&(c, _), &w)| c != w)
        {
            return Err(LearnerError::FeedbackMismatch(format!(
                "observed {:?}, feedback for {:?}",
                want,
                self.observations.iter().map(|o| o.0).collect::<Vec<_>>()
            )));
        }
        match self.observations.iter().find(|o| o.1 > 1) {
            Some(&(_, r)) => Err(LearnerError::BadReward(r)),
            None => Ok(()),
        }
    }
}
