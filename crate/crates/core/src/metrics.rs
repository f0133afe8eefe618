//! Regret bookkeeping and the closed-form bound curves drawn next to it.

use std::f64::consts::E;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Channel, RewardMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("slope fit needs at least 5 checkpoints in the window, got {0}")]
    TooFewPoints(usize),
    #[error("regret {value} at t = {t} is not positive; log-log slope undefined")]
    NonPositiveRegret { t: u64, value: f64 },
}

/// Best single channel in hindsight over slots `1..=upto`.
pub fn gmax(matrix: &RewardMatrix, upto: usize) -> f64 {
    let mut cols = vec![0u64; matrix.channels()];
    for row in matrix.rows().take(upto) {
        for (c, &x) in cols.iter_mut().zip(row) {
            *c += u64::from(x);
        }
    }
    cols.into_iter().max().unwrap_or(0) as f64
}

/// Running column sums of the reward matrix and the attacker's realized gain.
///
/// A slot's row has at most one non-zero entry (the SU's channel when its PU
/// is idle), so the tracker never needs the full row.
#[derive(Debug, Clone)]
pub struct RegretTracker {
    columns: Vec<u64>,
    best: u64,
    gain: u64,
}

impl RegretTracker {
    pub fn new(channels: usize) -> Self {
        Self {
            columns: vec![0; channels],
            best: 0,
            gain: 0,
        }
    }

    /// `rewarded` is the channel with `x_t = 1`, if any.
    pub fn record(&mut self, rewarded: Option<Channel>, attacker_reward: u8) {
        if let Some(j) = rewarded {
            self.columns[j] += 1;
            self.best = self.best.max(self.columns[j]);
        }
        self.gain += u64::from(attacker_reward);
    }

    pub fn gmax(&self) -> u64 {
        self.best
    }

    pub fn gain(&self) -> u64 {
        self.gain
    }

    pub fn regret(&self) -> f64 {
        self.best as f64 - self.gain as f64
    }
}

/// Regret and realized gain sampled at checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub checkpoints: Vec<u64>,
    pub regret: Vec<f64>,
    pub gain: Vec<f64>,
}

/// `(sqrt(3(e-2)) + 3/2) (T^2 K ln K)^(1/3)`.
pub fn pola_upper_bound(channels: usize, t: u64) -> f64 {
    let k = channels as f64;
    let t = t as f64;
    ((3.0 * (E - 2.0)).sqrt() + 1.5) * (t * t * k * k.ln()).cbrt()
}

/// `2 sqrt(2(e-2)) sqrt(T (K-1) ln K)` for one observation;
/// `4 sqrt(e-2) sqrt(T (K-1)/m ln K)` for `m >= 2`.
pub fn prola_upper_bound(channels: usize, t: u64, m: usize) -> f64 {
    let k = channels as f64;
    let t = t as f64;
    if m <= 1 {
        2.0 * (2.0 * (E - 2.0)).sqrt() * (t * (k - 1.0) * k.ln()).sqrt()
    } else {
        4.0 * (E - 2.0).sqrt() * (t * (k - 1.0) / m as f64 * k.ln()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pola,
    Prola,
}

/// `c (K T^2)^(1/3)` for POLA, `c sqrt(K T)` for PROLA. The constant is a
/// plotting choice.
pub fn lower_bound(kind: Algorithm, channels: usize, t: u64, constant: f64) -> f64 {
    let k = channels as f64;
    let t = t as f64;
    match kind {
        Algorithm::Pola => constant * (k * t * t).cbrt(),
        Algorithm::Prola => constant * (k * t).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    PolaUpper,
    PolaLower,
    ProlaUpper,
    ProlaLower,
    ProlaMUpper,
}

/// A bound evaluated on a checkpoint grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub values: Vec<f64>,
    pub constant: Option<f64>,
}

impl BoundCurve {
    pub fn upper(kind: Algorithm, channels: usize, m: usize, checkpoints: &[u64]) -> Self {
        let (kind, values) = match kind {
            Algorithm::Pola => (
                BoundKind::PolaUpper,
                checkpoints
                    .iter()
                    .map(|&t| pola_upper_bound(channels, t))
                    .collect(),
            ),
            Algorithm::Prola => (
                if m <= 1 {
                    BoundKind::ProlaUpper
                } else {
                    BoundKind::ProlaMUpper
                },
                checkpoints
                    .iter()
                    .map(|&t| prola_upper_bound(channels, t, m))
                    .collect(),
            ),
        };
        Self {
            kind,
            values,
            constant: None,
        }
    }

    pub fn lower(kind: Algorithm, channels: usize, constant: f64, checkpoints: &[u64]) -> Self {
        Self {
            kind: match kind {
                Algorithm::Pola => BoundKind::PolaLower,
                Algorithm::Prola => BoundKind::ProlaLower,
            },
            values: checkpoints
                .iter()
                .map(|&t| lower_bound(kind, channels, t, constant))
                .collect(),
            constant: Some(constant),
        }
    }
}

/// Least-squares slope of `ln regret` against `ln t` over checkpoints in `window`.
pub fn loglog_slope(trace: &RegretTrace, window: RangeInclusive<u64>) -> Result<f64, MetricsError> {
    let points: Vec<(u64, f64)> = trace
        .checkpoints
        .iter()
        .zip(&trace.regret)
        .filter(|(t, _)| window.contains(t))
        .map(|(&t, &r)| (t, r))
        .collect();
    if points.len() < 5 {
        return Err(MetricsError::TooFewPoints(points.len()));
    }
    if let Some(&(t, value)) = points.iter().find(|p| p.1 <= 0.0) {
        return Err(MetricsError::NonPositiveRegret { t, value });
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Number of log-spaced checkpoints used when a config gives none.
pub const DEFAULT_CHECKPOINTS: usize = 200;

/// `n` log-spaced slots in `[10, horizon]`, rounded, deduplicated, always ending at `horizon`.
pub fn log_checkpoints(horizon: u64, n: usize) -> Vec<u64> {
    let lo = 10u64.min(horizon).max(1);
    let (a, b) = ((lo as f64).ln(), (horizon as f64).ln());
    let mut out: Vec<u64> = (0..n)
        .map(|i| {
            let f = if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                1.0
            };
            ((a + f * (b - a)).exp().round() as u64).clamp(lo, horizon)
        })
        .collect();
    out.push(horizon);
    out.dedup();
    out
}
