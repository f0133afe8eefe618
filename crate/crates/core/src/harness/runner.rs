//! Seeded Monte-Carlo execution and aggregation.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AttackerSpec, ExperimentConfig, SuPolicy};
use super::HarnessError;
use crate::env::{attacker_reward, resolve_slot, Channel, ChannelState, SlotOutcome};
use crate::learners::{Decision, Feedback, FixedChannel, Hedge, Pola, Prola, UniformRandom};
use crate::metrics::{Algorithm, BoundCurve, RegretTrace, RegretTracker};
use crate::rng::{RunStreams, SimRng, SEED_RULE};

/// Per-run output: regret/gain plus the SU's cumulative successful transmissions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub regret: RegretTrace,
    pub su_traffic: Vec<f64>,
}

enum SuAgent {
    Hedge(Hedge),
    Fixed(FixedChannel),
    Uniform(UniformRandom),
}

impl SuAgent {
    fn new(policy: SuPolicy, channels: usize) -> Self {
        match policy {
            SuPolicy::Hedge { eta } => SuAgent::Hedge(Hedge::new(channels, eta)),
            SuPolicy::FixedChannel { channel } => SuAgent::Fixed(FixedChannel { channel }),
            SuPolicy::UniformRandom => SuAgent::Uniform(UniformRandom { channels }),
        }
    }

    fn pick(&self, rng: &mut SimRng) -> Channel {
        match self {
            SuAgent::Hedge(h) => h.decide(rng),
            SuAgent::Fixed(f) => f.pick(),
            SuAgent::Uniform(u) => u.pick(rng),
        }
    }

    fn learn(&mut self, rewards: &[u8]) -> Result<(), HarnessError> {
        if let SuAgent::Hedge(h) = self {
            h.update(rewards).map_err(HarnessError::su)?;
        }
        Ok(())
    }
}

/// What the attacker committed to in a slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Learner(Decision),
    Attack(Channel),
    Idle,
}

impl Move {
    pub fn attacked(&self) -> Option<Channel> {
        match self {
            Move::Learner(d) => d.attacked(),
            Move::Attack(c) => Some(*c),
            Move::Idle => None,
        }
    }

    pub fn observed(&self) -> &[Channel] {
        match self {
            Move::Learner(d) => d.observed(),
            _ => &[],
        }
    }
}

enum AttackerAgent {
    Pola(Pola),
    Prola(Prola),
    Uniform(UniformRandom),
    Fixed(FixedChannel),
    Idle,
}

impl AttackerAgent {
    fn new(config: &ExperimentConfig) -> Self {
        match config.attacker {
            AttackerSpec::Pola { .. } => {
                AttackerAgent::Pola(Pola::new(config.pola_params().unwrap()))
            }
            AttackerSpec::Prola { .. } => {
                AttackerAgent::Prola(Prola::new(config.prola_params().unwrap()))
            }
            AttackerSpec::UniformRandom => AttackerAgent::Uniform(UniformRandom {
                channels: config.channels,
            }),
            AttackerSpec::FixedChannel { channel } => {
                AttackerAgent::Fixed(FixedChannel { channel })
            }
            AttackerSpec::None => AttackerAgent::Idle,
        }
    }

    fn act(&self, rng: &mut SimRng) -> Move {
        match self {
            AttackerAgent::Pola(p) => Move::Learner(p.decide(rng)),
            AttackerAgent::Prola(p) => Move::Learner(p.decide(rng)),
            AttackerAgent::Uniform(u) => Move::Attack(u.pick(rng)),
            AttackerAgent::Fixed(f) => Move::Attack(f.pick()),
            AttackerAgent::Idle => Move::Idle,
        }
    }

    /// Learners only ever see the observation feedback.
    fn learn(&mut self, mv: &Move, feedback: &Feedback) -> Result<(), HarnessError> {
        match (self, mv) {
            (AttackerAgent::Pola(p), Move::Learner(d)) => p.update(d, feedback),
            (AttackerAgent::Prola(p), Move::Learner(d)) => p.update(d, feedback),
            _ => Ok(()),
        }
        .map_err(HarnessError::attacker)
    }
}

/// Runs one seeded replication of the slot loop.
pub fn run_one(config: &ExperimentConfig, run_index: usize) -> Result<RunTrace, HarnessError> {
    run_one_with(config, run_index, |_, _| {}).map_err(|e| e.in_run(run_index))
}

/// Slot loop with an inspection hook called after the environment resolves each
/// slot and before anyone learns from it.
pub(crate) fn run_one_with(
    config: &ExperimentConfig,
    run_index: usize,
    mut hook: impl FnMut(&Move, &mut SlotOutcome),
) -> Result<RunTrace, HarnessError> {
    let k = config.channels;
    let mut streams = RunStreams::new(config.base_seed, run_index as u64);
    let mut su = SuAgent::new(config.su_policy, k);
    let mut attacker = AttackerAgent::new(config);
    let mut tracker = RegretTracker::new(k);
    let mut traffic = 0u64;

    let n = config.checkpoints.len();
    let mut trace = RunTrace {
        regret: RegretTrace {
            checkpoints: config.checkpoints.clone(),
            regret: Vec::with_capacity(n),
            gain: Vec::with_capacity(n),
        },
        su_traffic: Vec::with_capacity(n),
    };
    let mut next_checkpoint = 0;

    let mut state = ChannelState::initial(&config.pu, &mut streams.pu);
    for t in 1..=config.horizon {
        if t > 1 {
            state.advance(&config.pu, &mut streams.pu);
        }
        let su_choice = su.pick(&mut streams.su);
        let mv = attacker.act(&mut streams.attacker);
        let mut outcome = resolve_slot(&state, su_choice, mv.attacked(), mv.observed())?;
        hook(&mv, &mut outcome);

        su.learn(&outcome.su_rewards)?;
        attacker.learn(&mv, &outcome.attacker_feedback())?;

        let rewarded = (attacker_reward(&state, su_choice, su_choice) == 1).then_some(su_choice);
        tracker.record(rewarded, outcome.attacker_hidden_reward());
        traffic += u64::from(outcome.su_transmitted);

        if next_checkpoint < n && config.checkpoints[next_checkpoint] == t {
            trace.regret.regret.push(tracker.regret());
            trace.regret.gain.push(tracker.gain() as f64);
            trace.su_traffic.push(traffic as f64);
            next_checkpoint += 1;
        }
    }
    Ok(trace)
}

/// Runs replications `runs` (by index) in parallel on `threads` workers.
/// Output order follows the run index regardless of scheduling.
pub fn run_traces(
    config: &ExperimentConfig,
    runs: std::ops::Range<usize>,
    threads: Option<usize>,
) -> Result<Vec<RunTrace>, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    pool.install(|| runs.into_par_iter().map(|i| run_one(config, i)).collect())
}

/// Everything needed to reproduce a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config: ExperimentConfig,
    pub seed_rule: String,
    pub runs: usize,
    pub wall_time_secs: f64,
    pub version: String,
}

/// Per-checkpoint averages over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub checkpoints: Vec<u64>,
    pub mean_regret: Vec<f64>,
    pub std_regret: Vec<f64>,
    pub mean_gain: Vec<f64>,
    pub mean_su_traffic: Vec<f64>,
    pub upper_bound: Option<BoundCurve>,
    pub lower_bound: Option<BoundCurve>,
    pub metadata: Metadata,
}

impl AggregateResult {
    /// Mean regret as a trace, for slope fits.
    pub fn mean_trace(&self) -> RegretTrace {
        RegretTrace {
            checkpoints: self.checkpoints.clone(),
            regret: self.mean_regret.clone(),
            gain: self.mean_gain.clone(),
        }
    }

    /// Standard error of the mean regret at checkpoint `i`.
    pub fn stderr_regret(&self, i: usize) -> f64 {
        self.std_regret[i] / (self.metadata.runs as f64).sqrt()
    }
}

/// Averages traces (pairwise summation, so the result does not depend on
/// how runs were scheduled) and attaches bound curves.
pub fn aggregate(
    config: &ExperimentConfig,
    traces: &[RunTrace],
    wall_time_secs: f64,
) -> AggregateResult {
    let n = config.checkpoints.len();
    let column = |f: &dyn Fn(&RunTrace) -> f64| -> Vec<f64> { traces.iter().map(f).collect() };
    let mut mean_regret = Vec::with_capacity(n);
    let mut std_regret = Vec::with_capacity(n);
    let mut mean_gain = Vec::with_capacity(n);
    let mut mean_su_traffic = Vec::with_capacity(n);
    for i in 0..n {
        let regrets = column(&|r| r.regret.regret[i]);
        let (m, s) = mean_std(&regrets);
        mean_regret.push(m);
        std_regret.push(s);
        mean_gain.push(mean(&column(&|r| r.regret.gain[i])));
        mean_su_traffic.push(mean(&column(&|r| r.su_traffic[i])));
    }

    let (upper_bound, lower_bound) = match config.attacker {
        AttackerSpec::Pola { .. } => (
            Some(BoundCurve::upper(
                Algorithm::Pola,
                config.channels,
                0,
                &config.checkpoints,
            )),
            Some(BoundCurve::lower(
                Algorithm::Pola,
                config.channels,
                config.lower_bound_constant,
                &config.checkpoints,
            )),
        ),
        AttackerSpec::Prola { m, .. } => (
            Some(BoundCurve::upper(
                Algorithm::Prola,
                config.channels,
                m,
                &config.checkpoints,
            )),
            Some(BoundCurve::lower(
                Algorithm::Prola,
                config.channels,
                config.lower_bound_constant,
                &config.checkpoints,
            )),
        ),
        _ => (None, None),
    };

    AggregateResult {
        checkpoints: config.checkpoints.clone(),
        mean_regret,
        std_regret,
        mean_gain,
        mean_su_traffic,
        upper_bound,
        lower_bound,
        metadata: Metadata {
            config: config.clone(),
            seed_rule: SEED_RULE.to_string(),
            runs: traces.len(),
            wall_time_secs,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    }
}

/// Runs every replication and aggregates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateResult, HarnessError> {
    let start = Instant::now();
    let traces = run_traces(config, 0..config.runs, config.threads)?;
    Ok(aggregate(config, &traces, start.elapsed().as_secs_f64()))
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Mean and sample standard deviation (zero for a single value).
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    (m, (pairwise_sum(&sq) / (xs.len() - 1) as f64).sqrt())
}
