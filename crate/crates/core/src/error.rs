use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfUnitRange { name: &'static str, value: f64 },

    #[error("{name} = {value} is not a finite non-negative number")]
    NegativeOrNonFinite { name: &'static str, value: f64 },

    #[error("population needs at least 2 agents, got {0}")]
    TooFewAgents(usize),

    #[error("operation requires beta > 2*gamma (beta = {beta}, gamma = {gamma})")]
    NotSupercritical { beta: f64, gamma: f64 },

    #[error("initial carrying ratio must be positive for this operation")]
    ZeroInitialRatio,

    #[error("target ratio {target} is not below the equilibrium {limit}")]
    TargetUnreachable { target: f64, limit: f64 },

    #[error("target ratio {target} is below the initial ratio {c0}")]
    TargetBelowStart { target: f64, c0: f64 },

    #[error("{requested} initial carriers requested for {n_agents} agents")]
    TooManyCarriers { requested: usize, n_agents: usize },

    #[error("state is at round {state} but step was asked for round {requested}")]
    RoundMismatch { state: u64, requested: u64 },

    #[error("album capacity must be at least 1")]
    ZeroCapacity,

    #[error("benign image pool must hold at least 1 image")]
    EmptyBenignPool,

    #[error("agent id {id} is out of range for {n_agents} agents")]
    AgentOutOfRange { id: usize, n_agents: usize },

    #[error("agent id {0} is listed more than once")]
    DuplicateAgent(usize),

    #[error("round {round} is outside the trace (length {len})")]
    RoundOutOfRange { round: usize, len: usize },

    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<(), Error> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfUnitRange { name, value })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<(), Error> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeOrNonFinite { name, value })
    }
}
