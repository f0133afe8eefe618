//! Primary-user-emulation attackers that learn which channel to attack.
//!
//! A secondary user (SU) hops between `K` licensed channels; an attacker
//! emulates a primary user on one channel per slot to scare the SU away, but
//! can never see whether that attack hit anything. The crate provides
//!
//! * [`env`]: the slotted channel model and the hidden reward table,
//! * [`learners`]: the play-or-observe and play-and-random-observe attackers,
//!   Hedge for the SU, and simple baselines,
//! * [`metrics`]: regret traces and the closed-form bound curves,
//! * [`harness`]: config-driven, seeded, parallel Monte-Carlo experiments with
//!   CSV output.

pub mod env;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod rng;
