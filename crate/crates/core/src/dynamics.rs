//! Deterministic theory for the carrier ratio `c_t`.
//!
//! The mean-field recurrence `c' = (1 - gamma) c + beta c (1 - c) / 2` is the
//! large-population limit of the pairwise process. Its continuous-time
//! counterpart `dc/dt = beta c (1 - c) / 2 - gamma c` has a closed-form
//! solution in each of the three regimes (`beta` above, at, or below
//! `2 gamma`). The recurrence and the ODE are different models; the gap
//! between them is measured by the tests rather than assumed away.

use alloc::vec::Vec;

use crate::error::{check_non_negative, check_unit};
use crate::{Error, Result};

/// Model constants for one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
    c0: f64,
    n_agents: usize,
}

impl DynamicsParams {
    /// `alpha`: symptom probability per round for a carrier.
    /// `beta`: transmission probability for a carrier questioner and benign answerer.
    /// `gamma`: recovery probability per round.
    /// `c0`: initial carrying ratio.
    pub fn new(alpha: f64, beta: f64, gamma: f64, c0: f64, n_agents: usize) -> Result<Self> {
        check_unit("alpha", alpha)?;
        check_unit("beta", beta)?;
        check_unit("gamma", gamma)?;
        check_unit("c0", c0)?;
        if n_agents < 2 {
            return Err(Error::TooFewAgents(n_agents));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            c0,
            n_agents,
        })
    }

    /// Defaults used throughout the theory figures: alpha 0.95, beta 0.8,
    /// gamma 0.1, c0 0.5, 2^14 agents.
    pub fn figure_defaults() -> Self {
        Self {
            alpha: 0.95,
            beta: 0.8,
            gamma: 0.1,
            c0: 0.5,
            n_agents: 1 << 14,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.beta, self.gamma, self.c0, self.n_agents)
    }
    pub fn with_beta(self, beta: f64) -> Result<Self> {
        Self::new(self.alpha, beta, self.gamma, self.c0, self.n_agents)
    }
    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.alpha, self.beta, gamma, self.c0, self.n_agents)
    }
    pub fn with_c0(self, c0: f64) -> Result<Self> {
        Self::new(self.alpha, self.beta, self.gamma, c0, self.n_agents)
    }
    pub fn with_n_agents(self, n_agents: usize) -> Result<Self> {
        Self::new(self.alpha, self.beta, self.gamma, self.c0, n_agents)
    }

    pub fn regime(&self) -> Regime {
        regime_of(self.beta, self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `beta > 2 gamma`: converges to `1 - 2 gamma / beta`.
    SupercriticalGrowth,
    /// `beta == 2 gamma`: algebraic decay to zero.
    Marginal,
    /// `beta < 2 gamma`: exponential decay to zero.
    SubcriticalDecay,
}

impl Regime {
    /// Whether the carrying ratio is guaranteed to vanish.
    pub fn is_contained(self) -> bool {
        !matches!(self, Regime::SupercriticalGrowth)
    }
}

fn regime_of(beta: f64, gamma: f64) -> Regime {
    let threshold = 2.0 * gamma;
    if beta > threshold {
        Regime::SupercriticalGrowth
    } else if beta == threshold {
        Regime::Marginal
    } else {
        Regime::SubcriticalDecay
    }
}

/// Three-way classification by exact comparison of `beta` against `2 gamma`.
/// Callers that want a tolerance band apply it before calling.
pub fn classify_regime(beta: f64, gamma: f64) -> Result<Regime> {
    check_unit("beta", beta)?;
    check_unit("gamma", gamma)?;
    Ok(regime_of(beta, gamma))
}

/// Sampled deterministic curve: `infected[i] = alpha * carrying[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryCurve {
    pub params: DynamicsParams,
    pub times: Vec<f64>,
    pub carrying: Vec<f64>,
    pub infected: Vec<f64>,
}

impl TheoryCurve {
    fn from_carrying(params: DynamicsParams, times: Vec<f64>, carrying: Vec<f64>) -> Self {
        let infected = carrying.iter().map(|c| params.alpha * c).collect();
        Self {
            params,
            times,
            carrying,
            infected,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Solution of `dc/dt = beta c (1 - c) / 2 - gamma c` at time `t`.
///
/// `c0 = 0` is absorbing and `beta = gamma = 0` is the constant solution.
/// Negative or non-finite `t` is treated as 0.
pub fn closed_form_ct(params: &DynamicsParams, t: f64) -> f64 {
    let t = if t.is_finite() && t > 0.0 { t } else { 0.0 };
    let (beta, gamma, c0) = (params.beta, params.gamma, params.c0);
    if c0 == 0.0 {
        return 0.0;
    }
    if beta == 0.0 && gamma == 0.0 {
        return c0;
    }
    match params.regime() {
        Regime::SupercriticalGrowth => {
            let d = beta - 2.0 * gamma;
            c0 * d / ((d - c0 * beta) * libm::exp(-d * t / 2.0) + c0 * beta)
        }
        Regime::Marginal => 2.0 * c0 / (c0 * beta * t + 2.0),
        Regime::SubcriticalDecay => {
            let d = 2.0 * gamma - beta;
            c0 * d / ((d + c0 * beta) * libm::exp(d * t / 2.0) - c0 * beta)
        }
    }
}

/// Long-run carrying ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limit {
    pub value: f64,
    /// False when `c0 = 0`: the process never starts, so the regime limit
    /// does not apply and `value` is 0.
    pub precondition_holds: bool,
}

pub fn limit_ct(params: &DynamicsParams) -> Limit {
    let (beta, gamma, c0) = (params.beta, params.gamma, params.c0);
    if c0 == 0.0 {
        return Limit {
            value: 0.0,
            precondition_holds: false,
        };
    }
    let value = if beta == 0.0 {
        if gamma == 0.0 {
            c0
        } else {
            0.0
        }
    } else {
        (1.0 - 2.0 * gamma / beta).clamp(0.0, 1.0)
    };
    Limit {
        value,
        precondition_holds: true,
    }
}

fn require_supercritical(params: &DynamicsParams) -> Result<f64> {
    if params.regime() != Regime::SupercriticalGrowth {
        return Err(Error::NotSupercritical {
            beta: params.beta,
            gamma: params.gamma,
        });
    }
    Ok(params.beta - 2.0 * params.gamma)
}

/// Distance `|c_t - (1 - 2 gamma / beta)|` from the equilibrium, evaluated
/// directly rather than by subtracting two nearly equal numbers.
pub fn gap_at(params: &DynamicsParams, t: f64) -> Result<f64> {
    check_non_negative("t", t)?;
    let d = require_supercritical(params)?;
    let (beta, c0) = (params.beta, params.c0);
    if c0 == 0.0 {
        return Err(Error::ZeroInitialRatio);
    }
    let offset = d - c0 * beta;
    let num = d * offset;
    let den = beta * offset + c0 * beta * beta * libm::exp(d * t / 2.0);
    Ok((num / den).abs())
}

/// Real-valued time at which the closed-form curve reaches `c_target`.
pub fn rounds_to_reach(params: &DynamicsParams, c_target: f64) -> Result<f64> {
    check_unit("c_target", c_target)?;
    let d = require_supercritical(params)?;
    let (beta, c0) = (params.beta, params.c0);
    if c0 == 0.0 {
        return Err(Error::ZeroInitialRatio);
    }
    if c_target == c0 {
        return Ok(0.0);
    }
    if c_target < c0 {
        return Err(Error::TargetBelowStart {
            target: c_target,
            c0,
        });
    }
    let limit = 1.0 - 2.0 * params.gamma / beta;
    if c_target >= limit {
        return Err(Error::TargetUnreachable {
            target: c_target,
            limit,
        });
    }
    let ratio = (c_target * (d - c0 * beta)) / (c0 * (d - c_target * beta));
    Ok(2.0 / d * libm::log(ratio))
}

/// One round of the mean-field recurrence.
pub fn meanfield_step(c: f64, beta: f64, gamma: f64) -> Result<f64> {
    check_unit("c", c)?;
    check_unit("beta", beta)?;
    check_unit("gamma", gamma)?;
    Ok(meanfield_step_unchecked(c, beta, gamma))
}

#[inline]
pub(crate) fn meanfield_step_unchecked(c: f64, beta: f64, gamma: f64) -> f64 {
    (1.0 - gamma) * c + beta * c * (1.0 - c) / 2.0
}

/// Iterate the recurrence from `c0` for `rounds` rounds (`rounds + 1` points).
pub fn meanfield_curve(params: &DynamicsParams, rounds: usize) -> TheoryCurve {
    let mut carrying = Vec::with_capacity(rounds + 1);
    let mut c = params.c0;
    carrying.push(c);
    for _ in 0..rounds {
        c = meanfield_step_unchecked(c, params.beta, params.gamma);
        carrying.push(c);
    }
    let times = (0..=rounds).map(|t| t as f64).collect();
    TheoryCurve::from_carrying(*params, times, carrying)
}

#[inline]
fn ode_rhs(c: f64, beta: f64, gamma: f64) -> f64 {
    beta * c * (1.0 - c) / 2.0 - gamma * c
}

fn rk4_step(c: f64, h: f64, beta: f64, gamma: f64) -> f64 {
    let k1 = ode_rhs(c, beta, gamma);
    let k2 = ode_rhs(c + 0.5 * h * k1, beta, gamma);
    let k3 = ode_rhs(c + 0.5 * h * k2, beta, gamma);
    let k4 = ode_rhs(c + h * k3, beta, gamma);
    c + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Fixed-step RK4 on the grid `0, dt, 2 dt, ...`, with a final partial step
/// that lands exactly on `t_end`.
pub fn ode_integrate(params: &DynamicsParams, t_end: f64, dt: f64) -> Result<TheoryCurve> {
    check_non_negative("t_end", t_end)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::NonPositiveStep(dt));
    }
    let full_steps = libm::floor(t_end / dt) as usize;
    let mut times: Vec<f64> = (0..=full_steps).map(|i| i as f64 * dt).collect();
    if let Some(&last) = times.last() {
        if t_end - last > dt * 1e-9 {
            times.push(t_end);
        }
    }
    ode_sample(params, &times, dt)
}

/// RK4 with nominal step `dt`, clipped so that every requested time is hit
/// exactly. `sample_times` must be non-decreasing and non-negative.
pub fn ode_sample(params: &DynamicsParams, sample_times: &[f64], dt: f64) -> Result<TheoryCurve> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::NonPositiveStep(dt));
    }
    let (beta, gamma) = (params.beta, params.gamma);
    let mut carrying = Vec::with_capacity(sample_times.len());
    let mut t = 0.0;
    let mut c = params.c0;
    for &target in sample_times {
        check_non_negative("sample time", target)?;
        while target - t > dt * 1e-9 {
            let h = dt.min(target - t);
            c = rk4_step(c, h, beta, gamma);
            t += h;
        }
        t = t.max(target);
        carrying.push(c);
    }
    Ok(TheoryCurve::from_carrying(
        *params,
        sample_times.to_vec(),
        carrying,
    ))
}
