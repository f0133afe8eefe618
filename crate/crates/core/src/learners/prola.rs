//! Play-and-random-observe learner, with `m` observations per slot.
//!
//! The attacked channel is drawn from `p_t = (1-gamma) w / W + gamma / K`.
//! The observed set is a uniform `m`-subset of the remaining `K-1` channels,
//! so channel `j` is observed with probability `(1 - p_t(j)) m / (K-1)` and
//! the estimate divides the observed reward by exactly that.

use std::f64::consts::E;

use rand::Rng;

use super::{sample_index, uniform_draw, Decision, Feedback, LearnerError, WeightState};
use crate::env::Channel;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProlaParams {
    pub channels: usize,
    pub horizon: u64,
    pub gamma: f64,
    pub eta: f64,
    /// Channels observed per slot, `1 <= m <= K-1`.
    pub observations: usize,
}

impl ProlaParams {
    pub fn new(
        channels: usize,
        horizon: u64,
        gamma: f64,
        eta: f64,
        observations: usize,
    ) -> Result<Self, LearnerError> {
        if channels < 2 {
            return Err(LearnerError::TooFewChannels(channels));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(LearnerError::BadGamma(gamma));
        }
        let cap = eta_cap(channels, gamma);
        if !(eta > 0.0 && eta <= cap * (1.0 + 1e-12)) {
            return Err(LearnerError::InadmissibleEta { eta, cap });
        }
        if observations == 0 || observations >= channels {
            return Err(LearnerError::BadObservationCount {
                m: observations,
                max: channels - 1,
            });
        }
        Ok(Self {
            channels,
            horizon,
            gamma,
            eta,
            observations,
        })
    }

    /// Same `gamma` and `eta`, different observation count.
    pub fn with_observations(self, m: usize) -> Result<Self, LearnerError> {
        Self::new(self.channels, self.horizon, self.gamma, self.eta, m)
    }

    pub fn with_eta(self, eta: f64) -> Result<Self, LearnerError> {
        Self::new(
            self.channels,
            self.horizon,
            self.gamma,
            eta,
            self.observations,
        )
    }
}

fn eta_cap(channels: usize, gamma: f64) -> f64 {
    gamma / (2.0 * (channels - 1) as f64)
}

/// `8 (K-1) ln K / (e-2)`.
pub fn prola_horizon_threshold(channels: usize) -> f64 {
    let k = channels as f64;
    8.0 * (k - 1.0) * k.ln() / (E - 2.0)
}

/// `gamma = 1/2`, `eta = sqrt(ln K / (2 (e-2) (K-1) T))`, `m = 1`.
pub fn prola_default_params(channels: usize, horizon: u64) -> Result<ProlaParams, LearnerError> {
    if channels < 2 {
        return Err(LearnerError::TooFewChannels(channels));
    }
    let threshold = prola_horizon_threshold(channels);
    if (horizon as f64) < threshold {
        return Err(LearnerError::HorizonTooShort {
            horizon,
            threshold,
            rule: ">= 8 (K-1) ln K / (e-2)",
        });
    }
    let k = channels as f64;
    let eta = (k.ln() / (2.0 * (E - 2.0) * (k - 1.0) * horizon as f64)).sqrt();
    ProlaParams::new(channels, horizon, 0.5, eta, 1)
}

/// Attack distribution `(1-gamma) w_t(i) / W_t + gamma / K`.
pub fn prola_probs(state: &WeightState, params: &ProlaParams) -> Vec<f64> {
    let mut p = Vec::with_capacity(params.channels);
    fill_probs(state, params, &mut p);
    p
}

fn fill_probs(state: &WeightState, params: &ProlaParams, out: &mut Vec<f64>) {
    let scale = (1.0 - params.gamma) / state.total();
    let floor = params.gamma / params.channels as f64;
    out.clear();
    out.extend(state.weights().iter().map(|w| w * scale + floor));
}

fn prob_of(state: &WeightState, params: &ProlaParams, total: f64, j: Channel) -> f64 {
    (1.0 - params.gamma) * state.weights()[j] / total + params.gamma / params.channels as f64
}

/// Draws `I_t ~ p_t`, then a uniform `m`-subset of the other channels by
/// partial Fisher-Yates.
pub fn prola_decide(state: &WeightState, params: &ProlaParams, rng: &mut SimRng) -> Decision {
    let mut probs = Vec::with_capacity(params.channels);
    fill_probs(state, params, &mut probs);
    let attack = sample_index(&probs, probs.iter().sum(), uniform_draw(rng));
    let observe = random_subset_excluding(params.channels, attack, params.observations, rng);
    Decision::ProlaAct { attack, observe }
}

fn random_subset_excluding(
    channels: usize,
    skip: Channel,
    m: usize,
    rng: &mut SimRng,
) -> Vec<Channel> {
    let n = channels - 1;
    let mut pool: Vec<Channel> = (0..n).map(|c| c + usize::from(c >= skip)).collect();
    for i in 0..m {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool
}

/// Estimates `x_hat_t(j) = x / ((m/(K-1)) (1 - p_t(j)))` for observed `j`, zero elsewhere.
pub fn prola_estimates(
    state: &WeightState,
    params: &ProlaParams,
    decision: &Decision,
    feedback: &Feedback,
) -> Result<Vec<f64>, LearnerError> {
    check_decision(params, decision, feedback)?;
    let total = state.total();
    let obs_rate = params.observations as f64 / (params.channels - 1) as f64;
    let mut est = vec![0.0; params.channels];
    for &(j, x) in feedback.observations() {
        est[j] = f64::from(x) / (obs_rate * (1.0 - prob_of(state, params, total, j)));
    }
    Ok(est)
}

fn check_decision(
    params: &ProlaParams,
    decision: &Decision,
    feedback: &Feedback,
) -> Result<(), LearnerError> {
    match decision {
        Decision::ProlaAct { observe, .. } if observe.len() == params.observations => {
            feedback.check_against(decision)
        }
        Decision::ProlaAct { observe, .. } => Err(LearnerError::FeedbackMismatch(format!(
            "decision observes {} channels, expected m = {}",
            observe.len(),
            params.observations
        ))),
        _ => Err(LearnerError::FeedbackMismatch(
            "PROLA cannot consume a POLA decision".into(),
        )),
    }
}

/// `log w(j) += eta x_hat(j)` using `p_t` from before the update, then `t += 1`.
pub fn prola_update(
    state: &WeightState,
    params: &ProlaParams,
    decision: &Decision,
    feedback: &Feedback,
) -> Result<WeightState, LearnerError> {
    let mut next = state.clone();
    apply_update(&mut next, params, decision, feedback)?;
    Ok(next)
}

fn apply_update(
    state: &mut WeightState,
    params: &ProlaParams,
    decision: &Decision,
    feedback: &Feedback,
) -> Result<(), LearnerError> {
    check_decision(params, decision, feedback)?;
    let total = state.total();
    let obs_rate = params.observations as f64 / (params.channels - 1) as f64;
    // p_t must be read for every observed channel before any weight moves
    let bumps: Vec<(Channel, f64)> = feedback
        .observations()
        .iter()
        .filter(|o| o.1 != 0)
        .map(|&(j, x)| {
            let est = f64::from(x) / (obs_rate * (1.0 - prob_of(state, params, total, j)));
            (j, params.eta * est)
        })
        .collect();
    for (j, d) in bumps {
        state.add(j, d);
    }
    state.advance();
    Ok(())
}

/// PROLA attacker: parameters plus its evolving weights.
#[derive(Debug, Clone)]
pub struct Prola {
    params: ProlaParams,
    state: WeightState,
}

impl Prola {
    pub fn new(params: ProlaParams) -> Self {
        Self {
            state: WeightState::uniform(params.channels),
            params,
        }
    }

    pub fn params(&self) -> &ProlaParams {
        &self.params
    }

    pub fn state(&self) -> &WeightState {
        &self.state
    }

    pub fn decide(&self, rng: &mut SimRng) -> Decision {
        prola_decide(&self.state, &self.params, rng)
    }

    pub fn update(&mut self, decision: &Decision, feedback: &Feedback) -> Result<(), LearnerError> {
        apply_update(&mut self.state, &self.params, decision, feedback)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(k: usize, m: usize) -> ProlaParams {
        prola_default_params(k, 100_000)
            .unwrap()
            .with_observations(m)
            .unwrap()
    }

    #[test]
    fn default_params_k10() {
        let p = prola_default_params(10, 100_000).unwrap();
        assert_eq!(p.gamma, 0.5);
        assert_eq!(p.observations, 1);
        assert_relative_eq!(p.eta, 1.3346e-3, max_relative = 1e-4);
        assert!(p.eta <= p.gamma / 18.0);
    }

    #[test]
    fn default_params_threshold() {
        assert_relative_eq!(prola_horizon_threshold(10), 230.81, max_relative = 1e-4);
        assert!(prola_default_params(10, 231).is_ok());
        match prola_default_params(10, 230) {
            Err(LearnerError::HorizonTooShort { threshold, .. }) => assert!(threshold > 230.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        assert!(ProlaParams::new(10, 1000, 1.0, 1e-3, 1).is_err());
        assert!(ProlaParams::new(10, 1000, 0.5, 0.5 / 18.0, 1).is_ok());
        assert!(ProlaParams::new(10, 1000, 0.5, 0.03, 1).is_err());
        assert!(ProlaParams::new(10, 1000, 0.5, 1e-3, 10).is_err());
        assert!(ProlaParams::new(10, 1000, 0.5, 1e-3, 0).is_err());
    }

    #[test]
    fn uniform_weights_give_uniform_probs() {
        let p = prola_probs(&WeightState::uniform(10), &params(10, 1));
        for x in p {
            assert_relative_eq!(x, 0.1, max_relative = 1e-12);
        }
    }

    #[test]
    fn dominant_weight_probs() {
        let s = WeightState::from_log_weights(vec![50.0, 0.0, 0.0, 0.0], 1).unwrap();
        let p = prola_probs(&s, &params(4, 1));
        assert_relative_eq!(p[0], 0.625, max_relative = 1e-12);
        for &x in &p[1..] {
            assert_relative_eq!(x, 0.125, max_relative = 1e-12);
        }
    }

    #[test]
    fn two_channels_always_observe_the_other() {
        let p = params(2, 1);
        let s = WeightState::from_log_weights(vec![0.4, -0.2], 5).unwrap();
        let mut rng = seeded(21);
        for _ in 0..1000 {
            match prola_decide(&s, &p, &mut rng) {
                Decision::ProlaAct { attack, observe } => assert_eq!(observe, vec![1 - attack]),
                d => panic!("unexpected {d:?}"),
            }
        }
    }

    #[test]
    fn single_observation_is_uniform_over_the_rest() {
        let mut rng = seeded(22);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let s = random_subset_excluding(4, 2, 1, &mut rng);
            counts[s[0]] += 1;
        }
        assert_eq!(counts[2], 0);
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / n as f64).sqrt();
        for c in [0, 1, 3] {
            let f = counts[c] as f64 / n as f64;
            assert!((f - 1.0 / 3.0).abs() < 3.0 * sigma, "freq {f}");
        }
    }

    #[test]
    fn many_observations_never_include_attack() {
        let p = params(40, 35);
        let s = WeightState::uniform(40);
        let mut rng = seeded(23);
        for _ in 0..2000 {
            let d = prola_decide(&s, &p, &mut rng);
            let obs = d.observed();
            assert_eq!(obs.len(), 35);
            assert!(!obs.contains(&d.attacked().unwrap()));
            let mut sorted = obs.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 35);
        }
    }

    #[test]
    fn zero_rewards_leave_weights() {
        let p = params(6, 3);
        let s = WeightState::from_log_weights(vec![0.1, 0.0, 0.3, 0.0, 0.0, 0.2], 9).unwrap();
        let d = Decision::ProlaAct {
            attack: 0,
            observe: vec![4, 1, 5],
        };
        let fb = Feedback::new(vec![(4, 0), (1, 0), (5, 0)]);
        let next = prola_update(&s, &p, &d, &fb).unwrap();
        assert_eq!(next.log_weights(), s.log_weights());
        assert_eq!(next.t(), 10);
    }

    #[test]
    fn estimate_k4_m1() {
        let p = params(4, 1);
        let s = WeightState::uniform(4);
        let d = Decision::ProlaAct {
            attack: 0,
            observe: vec![2],
        };
        let est = prola_estimates(&s, &p, &d, &Feedback::new(vec![(2, 1)])).unwrap();
        assert_relative_eq!(est[2], 4.0, max_relative = 1e-12);
        assert_eq!(est[0], 0.0);
        let next = prola_update(&s, &p, &d, &Feedback::new(vec![(2, 1)])).unwrap();
        assert_relative_eq!(next.log_weights()[2], 4.0 * p.eta, max_relative = 1e-12);
    }

    #[test]
    fn update_reads_probabilities_before_moving_weights() {
        // two rewarded observations: the second must use the pre-update p_t
        let p = params(5, 2).with_eta(0.05).unwrap();
        let s = WeightState::uniform(5);
        let d = Decision::ProlaAct {
            attack: 0,
            observe: vec![1, 2],
        };
        let next = prola_update(&s, &p, &d, &Feedback::new(vec![(1, 1), (2, 1)])).unwrap();
        assert_relative_eq!(
            next.log_weights()[1],
            next.log_weights()[2],
            max_relative = 1e-15
        );
    }

    #[test]
    fn mismatched_feedback_is_rejected() {
        let p = params(5, 2);
        let s = WeightState::uniform(5);
        let d = Decision::ProlaAct {
            attack: 0,
            observe: vec![1, 2],
        };
        assert!(prola_update(&s, &p, &d, &Feedback::new(vec![(1, 1)])).is_err());
        let short = Decision::ProlaAct {
            attack: 0,
            observe: vec![1],
        };
        assert!(prola_update(&s, &p, &short, &Feedback::new(vec![(1, 1)])).is_err());
        assert!(prola_update(
            &s,
            &p,
            &Decision::PolaAttack { channel: 0 },
            &Feedback::empty()
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn probs_are_a_floored_distribution(
            lw in prop::collection::vec(-40.0f64..40.0, 2..12),
            gamma in 0.01f64..0.99,
        ) {
            let k = lw.len();
            let p = ProlaParams::new(k, 1000, gamma, gamma / (2.0 * (k - 1) as f64), 1).unwrap();
            let s = WeightState::from_log_weights(lw, 1).unwrap();
            let probs = prola_probs(&s, &p);
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for &x in &probs {
                prop_assert!(x >= gamma / k as f64 * (1.0 - 1e-12));
                prop_assert!(x <= 1.0 - gamma + gamma / k as f64 + 1e-12);
            }
        }

        #[test]
        fn capped_eta_keeps_steps_bounded(
            lw in prop::collection::vec(-40.0f64..40.0, 2..12),
            m_frac in 0.0f64..1.0,
        ) {
            let k = lw.len();
            let m = 1 + ((k - 2) as f64 * m_frac) as usize;
            let p = ProlaParams::new(k, 1000, 0.5, 0.5 / (2.0 * (k - 1) as f64), m).unwrap();
            let s = WeightState::from_log_weights(lw, 1).unwrap();
            let mut rng = seeded(0);
            let d = prola_decide(&s, &p, &mut rng);
            let fb = Feedback::new(d.observed().iter().map(|&j| (j, 1)).collect());
            for e in prola_estimates(&s, &p, &d, &fb).unwrap() {
                prop_assert!(p.eta * e <= 1.0 + 1e-12);
            }
        }
    }
}
