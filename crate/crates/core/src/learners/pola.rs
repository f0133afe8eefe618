//! Play-or-observe learner.
//!
//! Each slot is either an observation (probability `delta_t`, channel drawn
//! uniformly) or an attack drawn from the normalized weights. Only
//! observations move the weights; an attack slot earns reward that is never
//! seen.

use std::f64::consts::E;

use rand::Rng;

use super::{uniform_draw, Decision, Feedback, LearnerError, WeightState};
use crate::rng::SimRng;

/// Default-eta horizon threshold, as a multiple of `K ln K`.
pub const HORIZON_FACTOR: f64 = 2.577;

/// Observation probability `min{1, (K ln K / t)^(1/3)}`.
pub fn pola_delta(channels: usize, t: u64) -> f64 {
    let k = channels as f64;
    (k * k.ln() / t as f64).cbrt().min(1.0)
}

/// Largest admissible learning rate, `(ln K / (K^2 T))^(1/3)`.
pub fn pola_eta_cap(channels: usize, horizon: u64) -> f64 {
    let k = channels as f64;
    (k.ln() / (k * k * horizon as f64)).cbrt()
}

/// `2.577 K ln K`; the default learning rate needs `T` strictly above it.
pub fn pola_horizon_threshold(channels: usize) -> f64 {
    let k = channels as f64;
    HORIZON_FACTOR * k * k.ln()
}

/// Horizon-tuned learning rate
/// `sqrt(ln K / ((e-2) K (3/4 ((T+1)^4 / (K ln K))^(1/3) + K ln K / 4)))`.
pub fn pola_default_eta(channels: usize, horizon: u64) -> Result<f64, LearnerError> {
    if channels < 2 {
        return Err(LearnerError::TooFewChannels(channels));
    }
    let threshold = pola_horizon_threshold(channels);
    if horizon as f64 <= threshold {
        return Err(LearnerError::HorizonTooShort {
            horizon,
            threshold,
            rule: "> 2.577 K ln K",
        });
    }
    let k = channels as f64;
    let k_ln_k = k * k.ln();
    let inv_delta_sum = 0.75 * ((horizon as f64 + 1.0).powi(4) / k_ln_k).cbrt() + k_ln_k / 4.0;
    Ok((k.ln() / ((E - 2.0) * k * inv_delta_sum)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaParams {
    pub channels: usize,
    pub horizon: u64,
    pub eta: f64,
}

impl PolaParams {
    /// Rejects `eta` outside `(0, pola_eta_cap(K, T)]`.
    pub fn new(channels: usize, horizon: u64, eta: f64) -> Result<Self, LearnerError> {
        if channels < 2 {
            return Err(LearnerError::TooFewChannels(channels));
        }
        let cap = pola_eta_cap(channels, horizon);
        if !(eta > 0.0 && eta <= cap * (1.0 + 1e-12)) {
            return Err(LearnerError::InadmissibleEta { eta, cap });
        }
        Ok(Self {
            channels,
            horizon,
            eta,
        })
    }

    pub fn with_default_eta(channels: usize, horizon: u64) -> Result<Self, LearnerError> {
        Self::new(channels, horizon, pola_default_eta(channels, horizon)?)
    }
}

/// One POLA draw: observe with probability `delta_t`, otherwise attack.
pub fn pola_decide(state: &WeightState, params: &PolaParams, rng: &mut SimRng) -> Decision {
    let delta = pola_delta(params.channels, state.t());
    if uniform_draw(rng) < delta {
        Decision::PolaObserve {
            channel: rng.gen_range(0..params.channels),
        }
    } else {
        Decision::PolaAttack {
            channel: state.sample(uniform_draw(rng)),
        }
    }
}

/// Importance-weighted estimates `x_hat_t(.)` for the slot `t`.
///
/// Observe slot on `J`: `x_hat(J) = x K / delta_t`, zero elsewhere.
/// Attack slot: all zero.
pub fn pola_estimates(
    channels: usize,
    t: u64,
    decision: &Decision,
    feedback: &Feedback,
) -> Result<Vec<f64>, LearnerError> {
    feedback.check_against(decision)?;
    let mut est = vec![0.0; channels];
    match decision {
        Decision::PolaObserve { .. } => {
            let delta = pola_delta(channels, t);
            for &(j, x) in feedback.observations() {
                est[j] = f64::from(x) * channels as f64 / delta;
            }
        }
        Decision::PolaAttack { .. } => {}
        Decision::ProlaAct { .. } => {
            return Err(LearnerError::FeedbackMismatch(
                "POLA cannot consume a PROLA decision".into(),
            ))
        }
    }
    Ok(est)
}

/// `log w(j) += eta x_hat(j)`, then `t += 1`.
pub fn pola_update(
    state: &WeightState,
    params: &PolaParams,
    decision: &Decision,
    feedback: &Feedback,
) -> Result<WeightState, LearnerError> {
    let mut next = state.clone();
    apply_update(&mut next, params, decision, feedback)?;
    Ok(next)
}

fn apply_update(
    state: &mut WeightState,
    params: &PolaParams,
    decision: &Decision,
    feedback: &Feedback,
) -> Result<(), LearnerError> {
    if let Decision::PolaObserve { channel } = decision {
        feedback.check_against(decision)?;
        let x = feedback.observations()[0].1;
        if x != 0 {
            let delta = pola_delta(params.channels, state.t());
            let est = f64::from(x) * params.channels as f64 / delta;
            state.add(*channel, params.eta * est);
        }
    } else {
        pola_estimates(params.channels, state.t(), decision, feedback)?;
    }
    state.advance();
    Ok(())
}

/// POLA attacker: parameters plus its evolving weights.
#[derive(Debug, Clone)]
pub struct Pola {
    params: PolaParams,
    state: WeightState,
}

impl Pola {
    pub fn new(params: PolaParams) -> Self {
        Self {
            state: WeightState::uniform(params.channels),
            params,
        }
    }

    pub fn params(&self) -> &PolaParams {
        &self.params
    }

    pub fn state(&self) -> &WeightState {
        &self.state
    }

    pub fn decide(&self, rng: &mut SimRng) -> Decision {
        pola_decide(&self.state, &self.params, rng)
    }

    pub fn update(&mut self, decision: &Decision, feedback: &Feedback) -> Result<(), LearnerError> {
        apply_update(&mut self.state, &self.params, decision, feedback)
    }
}
