//! Infection dynamics for populations of memory-bearing agents that talk in
//! randomized questioner/answerer pairs.
//!
//! The crate has three layers that are meant to be checked against each
//! other:
//!
//! * [`dynamics`]: closed-form solutions of the carrier-ratio ODE, the
//!   mean-field recurrence and a fixed-step RK4 cross-check.
//! * [`sir`]: population-level stochastic simulation, either with an explicit
//!   pairing every round or with the aggregated binomial update.
//! * [`agent`]: a mechanistic model where every agent owns a FIFO image
//!   album, and transmission and recovery fall out of enqueue/dequeue.
//!
//! [`metrics`] turns traces into infection ratios, threshold rounds and rate
//! estimates. Everything is `no_std` with `alloc`; IO lives in the `pairchat`
//! crate.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod agent;
pub mod album;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod pairing;
pub mod rng;
pub mod sir;

pub use agent::{
    init_mech_population, inject_adversarial, mech_chat_round, mech_run, AgentState,
    BehaviorParams, MechCounters, MechScenario, MechTrace,
};
pub use album::{Album, ImageToken};
pub use dynamics::{
    classify_regime, closed_form_ct, gap_at, limit_ct, meanfield_curve, meanfield_step,
    ode_integrate, ode_sample, rounds_to_reach, DynamicsParams, Limit, Regime, TheoryCurve,
};
pub use error::Error;
pub use metrics::{estimate_rates, pooled_rates, summarize, Estimate, PooledRates, RoundSummary};
pub use pairing::{random_partition, PairingPlan};
pub use sir::{
    binomial_step, init_population, pairwise_step, run, sequential_baseline, Mode, PopulationState,
    SirMode, Trace, TraceRow,
};

pub type Result<T, E = Error> = core::result::Result<T, E>;
