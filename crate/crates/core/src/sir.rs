//! Population-level stochastic simulation.
//!
//! [`pairwise_step`] plays one round of the indicator model over an explicit
//! [`PairingPlan`](crate::PairingPlan): a carrier questioner converts a benign
//! answerer with probability `beta` (never the other way round), every agent
//! carrying at round start recovers with probability `gamma`, and symptoms
//! for the next round are drawn per carrier with probability `alpha`.
//! Transmission reads round-start flags and only round-start carriers can
//! recover, so an agent infected this round keeps the virus at least one
//! round.
//!
//! [`binomial_step`] is the aggregated update: `Binomial(N/2, beta c (1-c))`
//! new carriers and `Binomial(cN, gamma)` recoveries, with no pairing. It
//! samples with replacement, so for small `N` its law differs from the
//! pairwise one; both are kept.

use alloc::vec;
use alloc::vec::Vec;
use core::num::NonZeroU64;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::dynamics::DynamicsParams;
use crate::error::check_unit;
use crate::pairing::random_partition;
use crate::rng::{Domain, StreamRng};
use crate::{Error, Result};

/// Which model produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    PerPair,
    Binomial,
    Mechanistic,
    Sequential,
}

/// Simulation modes of [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SirMode {
    PerPair,
    Binomial,
}

impl From<SirMode> for Mode {
    fn from(m: SirMode) -> Self {
        match m {
            SirMode::PerPair => Mode::PerPair,
            SirMode::Binomial => Mode::Binomial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationState {
    pub round: u64,
    pub carrying: Vec<bool>,
    /// Valid for `round` only; always a subset of `carrying`.
    pub symptomatic: Vec<bool>,
}

impl PopulationState {
    pub fn n_agents(&self) -> usize {
        self.carrying.len()
    }

    pub fn carriers(&self) -> u64 {
        self.carrying.iter().filter(|&&c| c).count() as u64
    }

    pub fn symptomatic_count(&self) -> u64 {
        self.symptomatic.iter().filter(|&&s| s).count() as u64
    }
}

/// One round of a trace.
///
/// `carriers` is the count at the start of the round and
/// `symptomatic_current` the agents showing symptoms during it.
/// `transmissions` and `recoveries` happen during the round, so the next
/// row starts from `carriers - recoveries + transmissions`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceRow {
    pub round: u64,
    pub carriers: u64,
    pub symptomatic_current: u64,
    pub symptomatic_cumulative: u64,
    pub transmissions: u64,
    pub recoveries: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub mode: Mode,
    pub n_agents: usize,
    pub seed: u64,
    /// Absent for traces whose rates are not dialed in (mechanistic, sequential).
    pub params: Option<DynamicsParams>,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn carrier_ratios(&self) -> Vec<f64> {
        let n = self.n_agents as f64;
        self.rows.iter().map(|r| r.carriers as f64 / n).collect()
    }

    pub fn current_ratios(&self) -> Vec<f64> {
        let n = self.n_agents as f64;
        self.rows
            .iter()
            .map(|r| r.symptomatic_current as f64 / n)
            .collect()
    }

    pub fn cumulative_ratios(&self) -> Vec<f64> {
        let n = self.n_agents as f64;
        self.rows
            .iter()
            .map(|r| r.symptomatic_cumulative as f64 / n)
            .collect()
    }
}

/// Seed `initial_carriers` uniformly chosen agents. Symptoms start unsampled.
pub fn init_population(
    n_agents: usize,
    initial_carriers: usize,
    seed: u64,
) -> Result<PopulationState> {
    if n_agents < 2 {
        return Err(Error::TooFewAgents(n_agents));
    }
    if initial_carriers > n_agents {
        return Err(Error::TooManyCarriers {
            requested: initial_carriers,
            n_agents,
        });
    }
    let mut carrying = vec![false; n_agents];
    let mut rng = StreamRng::keyed(seed, 0, Domain::Seeding, 0);
    for i in rand::seq::index::sample(&mut rng, n_agents, initial_carriers) {
        carrying[i] = true;
    }
    Ok(PopulationState {
        round: 0,
        carrying,
        symptomatic: vec![false; n_agents],
    })
}

/// Redraw symptom flags for `state.round`: each carrier independently with
/// probability `alpha`.
pub fn sample_symptoms(state: &mut PopulationState, alpha: f64, seed: u64) {
    let round = state.round;
    for (i, (sym, &carrying)) in state
        .symptomatic
        .iter_mut()
        .zip(&state.carrying)
        .enumerate()
    {
        *sym =
            carrying && StreamRng::keyed(seed, round, Domain::Symptom, i as u64).random_bool(alpha);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepEvents {
    pub transmissions: u64,
    pub recoveries: u64,
}

/// What happened in one pair during a [`pairwise_step_logged`] round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairOutcome {
    pub questioner: u32,
    pub answerer: u32,
    pub questioner_carrying: bool,
    pub answerer_carrying: bool,
    pub transmitted: bool,
}

impl PairOutcome {
    /// Carrier questioner facing a benign answerer: the only configuration
    /// where transmission can happen.
    pub fn at_risk(&self) -> bool {
        self.questioner_carrying && !self.answerer_carrying
    }
}

pub fn pairwise_step(
    state: &PopulationState,
    params: &DynamicsParams,
    round: u64,
    seed: u64,
) -> Result<(PopulationState, StepEvents)> {
    step_inner(state, params, round, seed, None)
}

/// [`pairwise_step`] that also appends one [`PairOutcome`] per pair to `log`.
pub fn pairwise_step_logged(
    state: &PopulationState,
    params: &DynamicsParams,
    round: u64,
    seed: u64,
    log: &mut Vec<PairOutcome>,
) -> Result<(PopulationState, StepEvents)> {
    step_inner(state, params, round, seed, Some(log))
}

fn step_inner(
    state: &PopulationState,
    params: &DynamicsParams,
    round: u64,
    seed: u64,
    mut log: Option<&mut Vec<PairOutcome>>,
) -> Result<(PopulationState, StepEvents)> {
    if state.round != round {
        return Err(Error::RoundMismatch {
            state: state.round,
            requested: round,
        });
    }
    let n = state.n_agents();
    let plan = random_partition(n, round, seed)?;
    let start = &state.carrying;
    let mut next = start.clone();
    let mut events = StepEvents::default();

    for (k, &(q, a)) in plan.pairs.iter().enumerate() {
        let (qc, ac) = (start[q as usize], start[a as usize]);
        let transmitted = qc
            && !ac
            && StreamRng::keyed(seed, round, Domain::Transmission, k as u64)
                .random_bool(params.beta());
        if transmitted {
            next[a as usize] = true;
            events.transmissions += 1;
        }
        if let Some(log) = log.as_deref_mut() {
            log.push(PairOutcome {
                questioner: q,
                answerer: a,
                questioner_carrying: qc,
                answerer_carrying: ac,
                transmitted,
            });
        }
    }

    for (i, &was_carrying) in start.iter().enumerate() {
        if was_carrying
            && StreamRng::keyed(seed, round, Domain::Recovery, i as u64).random_bool(params.gamma())
        {
            next[i] = false;
            events.recoveries += 1;
        }
    }

    let mut out = PopulationState {
        round: round + 1,
        carrying: next,
        symptomatic: vec![false; n],
    };
    sample_symptoms(&mut out, params.alpha(), seed);
    Ok((out, events))
}

/// Counts from one aggregated update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregateStep {
    pub carriers: u64,
    pub new_carriers: u64,
    pub recoveries: u64,
    pub next_carriers: u64,
}

/// Aggregated update on integer counts: `Delta ~ B(floor(N/2), beta c (1-c))`,
/// `R ~ B(carriers, gamma)`, next count clamped to `[0, N]`.
pub fn binomial_step_counts<R: Rng + ?Sized>(
    carriers: u64,
    params: &DynamicsParams,
    rng: &mut R,
) -> AggregateStep {
    let n = params.n_agents() as u64;
    let carriers = carriers.min(n);
    let c = carriers as f64 / n as f64;
    let q = params.beta() * c * (1.0 - c);
    let new_carriers = draw_binomial(n / 2, q, rng);
    let recoveries = draw_binomial(carriers, params.gamma(), rng);
    let next_carriers = (carriers - recoveries + new_carriers).min(n);
    AggregateStep {
        carriers,
        new_carriers,
        recoveries,
        next_carriers,
    }
}

/// Ratio form of [`binomial_step_counts`]; `c` is snapped to the nearest
/// multiple of `1/N`.
pub fn binomial_step<R: Rng + ?Sized>(c: f64, params: &DynamicsParams, rng: &mut R) -> Result<f64> {
    check_unit("c", c)?;
    let n = params.n_agents() as f64;
    let carriers = libm::round(c * n) as u64;
    let step = binomial_step_counts(carriers, params, rng);
    Ok((step.next_carriers as f64 / n).clamp(0.0, 1.0))
}

fn draw_binomial<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    // p is in (0, 1) here, so construction cannot fail
    Binomial::new(trials, p).map(|b| b.sample(rng)).unwrap_or(0)
}

/// Simulate `rounds + 1` rounds (0 through `rounds`) from
/// `round(c0 * N)` seeded carriers.
pub fn run(params: &DynamicsParams, rounds: u64, seed: u64, mode: SirMode) -> Result<Trace> {
    let n = params.n_agents();
    let initial = libm::round(params.c0() * n as f64) as usize;
    let rows = match mode {
        SirMode::PerPair => run_per_pair(params, rounds, seed, initial)?,
        SirMode::Binomial => run_binomial(params, rounds, seed, initial as u64),
    };
    Ok(Trace {
        mode: mode.into(),
        n_agents: n,
        seed,
        params: Some(*params),
        rows,
    })
}

fn run_per_pair(
    params: &DynamicsParams,
    rounds: u64,
    seed: u64,
    initial: usize,
) -> Result<Vec<TraceRow>> {
    let n = params.n_agents();
    let mut state = init_population(n, initial, seed)?;
    sample_symptoms(&mut state, params.alpha(), seed);
    let mut ever = state.symptomatic.clone();
    let mut cumulative = state.symptomatic_count();
    let mut rows = Vec::with_capacity(rounds as usize + 1);
    for t in 0..=rounds {
        let (next, events) = pairwise_step(&state, params, t, seed)?;
        rows.push(TraceRow {
            round: t,
            carriers: state.carriers(),
            symptomatic_current: state.symptomatic_count(),
            symptomatic_cumulative: cumulative,
            transmissions: events.transmissions,
            recoveries: events.recoveries,
        });
        state = next;
        for (e, &s) in ever.iter_mut().zip(&state.symptomatic) {
            if s && !*e {
                *e = true;
                cumulative += 1;
            }
        }
    }
    Ok(rows)
}

/// Without agent identities the ever-symptomatic count cannot be tracked;
/// the running maximum of the current count is reported as a lower bound.
fn run_binomial(params: &DynamicsParams, rounds: u64, seed: u64, initial: u64) -> Vec<TraceRow> {
    let mut carriers = initial;
    let mut cumulative = 0;
    let mut rows = Vec::with_capacity(rounds as usize + 1);
    for t in 0..=rounds {
        let mut sym_rng = StreamRng::keyed(seed, t, Domain::Symptom, 0);
        let symptomatic = draw_binomial(carriers, params.alpha(), &mut sym_rng);
        cumulative = cumulative.max(symptomatic);
        let mut rng = StreamRng::keyed(seed, t, Domain::Aggregate, 0);
        let step = binomial_step_counts(carriers, params, &mut rng);
        rows.push(TraceRow {
            round: t,
            carriers,
            symptomatic_current: symptomatic,
            symptomatic_cumulative: cumulative,
            transmissions: step.next_carriers - (carriers - step.recoveries),
            recoveries: step.recoveries,
        });
        carriers = step.next_carriers;
    }
    rows
}

/// Non-infectious baseline: the adversary jailbreaks one fresh agent per
/// round, starting with one at round 0. With `recover_after = Some(k)` each
/// jailbroken agent stays infected for exactly `k` rounds.
pub fn sequential_baseline(
    n_agents: usize,
    rounds: u64,
    recover_after: Option<NonZeroU64>,
) -> Result<Trace> {
    if n_agents < 2 {
        return Err(Error::TooFewAgents(n_agents));
    }
    let n = n_agents as u64;
    // agents infected at rounds 0..n, each present from row s to row s + k - 1
    let present = |s: u64, t: u64| s < n && s <= t && recover_after.is_none_or(|k| t < s + k.get());
    let rows = (0..=rounds)
        .map(|t| {
            let carriers = match recover_after {
                None => (t + 1).min(n),
                Some(k) => {
                    let first = (t + 1).saturating_sub(k.get());
                    (first..=t).filter(|&s| present(s, t)).count() as u64
                }
            };
            let transmissions = u64::from(t + 1 < n);
            let recoveries = match recover_after {
                Some(k) => {
                    let leaving = (t + 1).checked_sub(k.get());
                    u64::from(leaving.is_some_and(|s| s < n))
                }
                None => 0,
            };
            TraceRow {
                round: t,
                carriers,
                symptomatic_current: carriers,
                symptomatic_cumulative: (t + 1).min(n),
                transmissions,
                recoveries,
            }
        })
        .collect();
    Ok(Trace {
        mode: Mode::Sequential,
        n_agents,
        seed: 0,
        params: None,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::meanfield_curve;

    fn p(alpha: f64, beta: f64, gamma: f64, c0: f64, n: usize) -> DynamicsParams {
        DynamicsParams::new(alpha, beta, gamma, c0, n).unwrap()
    }

    #[test]
    fn init_examples() {
        let s = init_population(256, 1, 3).unwrap();
        assert_eq!(s.carriers(), 1);
        assert_eq!(s.symptomatic_count(), 0);
        assert_eq!(init_population(50, 0, 3).unwrap().carriers(), 0);
        let big = init_population(1 << 20, 1024, 3).unwrap();
        assert_eq!(big.carriers() as f64 / (1 << 20) as f64, 1.0 / 1024.0);
        assert!(init_population(10, 11, 0).is_err());
        assert!(init_population(1, 0, 0).is_err());
    }

    #[test]
    fn step_extremes() {
        let full = PopulationState {
            round: 0,
            carrying: vec![true; 40],
            symptomatic: vec![false; 40],
        };
        let (next, ev) = pairwise_step(&full, &p(1.0, 1.0, 0.0, 1.0, 40), 0, 1).unwrap();
        assert_eq!(next.carriers(), 40);
        assert_eq!(ev, StepEvents::default());
        assert_eq!(next.symptomatic_count(), 40);

        let (next, ev) = pairwise_step(&full, &p(1.0, 0.0, 1.0, 1.0, 40), 0, 1).unwrap();
        assert_eq!(next.carriers(), 0);
        assert_eq!(ev.recoveries, 40);

        assert!(matches!(
            pairwise_step(&full, &p(1.0, 0.0, 1.0, 1.0, 40), 3, 1),
            Err(Error::RoundMismatch { .. })
        ));
    }

    #[test]
    fn transmission_is_unidirectional() {
        let params = p(0.5, 1.0, 0.0, 0.5, 64);
        let mut state = init_population(64, 32, 8).unwrap();
        for t in 0..20 {
            let mut log = Vec::new();
            let (next, _) = pairwise_step_logged(&state, &params, t, 8, &mut log).unwrap();
            for o in &log {
                if !o.questioner_carrying {
                    assert!(!next.carrying[o.questioner as usize]);
                }
                assert_eq!(o.transmitted, o.at_risk(), "beta = 1 always transmits");
            }
            state = next;
        }
    }

    #[test]
    fn symptoms_only_on_carriers() {
        let params = p(0.7, 0.6, 0.2, 0.3, 500);
        let mut state = init_population(500, 150, 2).unwrap();
        for t in 0..30 {
            state = pairwise_step(&state, &params, t, 2).unwrap().0;
            for (s, c) in state.symptomatic.iter().zip(&state.carrying) {
                assert!(!s || *c);
            }
        }
    }

    #[test]
    fn binomial_step_examples() {
        let params = p(0.9, 0.8, 0.1, 0.5, 1000);
        let mut rng = StreamRng::keyed(1, 0, Domain::Aggregate, 0);
        for _ in 0..100 {
            assert_eq!(binomial_step(0.0, &params, &mut rng).unwrap(), 0.0);
        }
        assert!(binomial_step(1.1, &params, &mut rng).is_err());
    }

    #[test]
    fn binomial_small_n_law() {
        // N = 2, c = 0.5, beta = 1: Delta ~ B(1, 0.25), nothing recovers
        let params = p(1.0, 1.0, 0.0, 0.5, 2);
        let draws = 100_000;
        let mut full = 0u32;
        for i in 0..draws {
            let mut rng = StreamRng::keyed(99, i, Domain::Aggregate, 0);
            let c = binomial_step(0.5, &params, &mut rng).unwrap();
            assert!(c == 0.5 || c == 1.0);
            full += u32::from(c == 1.0);
        }
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        assert!((full as f64 - 0.25 * draws as f64).abs() <= 3.0 * sigma);
    }

    #[test]
    fn binomial_mean_of_delta() {
        let params = p(1.0, 0.8, 0.0, 0.3, 1000);
        let mut rng = StreamRng::keyed(5, 0, Domain::Aggregate, 0);
        let draws = 100_000;
        let total: u64 = (0..draws)
            .map(|_| binomial_step_counts(300, &params, &mut rng).new_carriers)
            .sum();
        let mean = total as f64 / draws as f64 / 1000.0;
        let q: f64 = 0.8 * 0.3 * 0.7;
        let expected = q / 2.0;
        let se = (q * (1.0 - q) / 2000.0 / draws as f64).sqrt();
        assert!((mean - expected).abs() <= 3.0 * se, "{mean} vs {expected}");
    }

    #[test]
    fn run_zero_rounds_is_initial_row() {
        let params = p(0.95, 0.8, 0.1, 0.25, 400);
        for mode in [SirMode::PerPair, SirMode::Binomial] {
            let trace = run(&params, 0, 4, mode).unwrap();
            assert_eq!(trace.rows.len(), 1);
            assert_eq!(trace.rows[0].carriers, 100);
            assert_eq!(trace.rows[0].round, 0);
        }
    }

    #[test]
    fn per_pair_conservation_and_monotone_cumulative() {
        let params = p(0.6, 0.7, 0.2, 0.1, 3001);
        let trace = run(&params, 50, 12, SirMode::PerPair).unwrap();
        for w in trace.rows.windows(2) {
            assert_eq!(
                w[1].carriers,
                w[0].carriers - w[0].recoveries + w[0].transmissions
            );
            assert!(w[1].symptomatic_cumulative >= w[0].symptomatic_cumulative);
        }
        for r in &trace.rows {
            assert!(r.carriers <= 3001);
            assert!(r.symptomatic_current <= r.carriers);
            assert!(r.symptomatic_current <= r.symptomatic_cumulative);
        }
    }

    #[test]
    fn binomial_conservation() {
        let params = p(0.6, 0.7, 0.2, 0.1, 3000);
        let trace = run(&params, 50, 12, SirMode::Binomial).unwrap();
        for w in trace.rows.windows(2) {
            assert_eq!(
                w[1].carriers,
                w[0].carriers - w[0].recoveries + w[0].transmissions
            );
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let params = p(0.6, 0.7, 0.2, 0.1, 2000);
        for mode in [SirMode::PerPair, SirMode::Binomial] {
            assert_eq!(run(&params, 30, 77, mode), run(&params, 30, 77, mode));
            assert_ne!(run(&params, 30, 77, mode), run(&params, 30, 78, mode));
        }
    }

    #[test]
    fn seed_mean_tracks_meanfield_in_both_modes() {
        let params = DynamicsParams::figure_defaults();
        let theory = meanfield_curve(&params, 64);
        let n = params.n_agents() as f64;
        for mode in [SirMode::PerPair, SirMode::Binomial] {
            let traces: Vec<_> = (1..=8)
                .map(|s| run(&params, 64, s, mode).unwrap())
                .collect();
            for t in 0..=64 {
                let mean = traces
                    .iter()
                    .map(|tr| tr.rows[t].carriers as f64 / n)
                    .sum::<f64>()
                    / 8.0;
                assert!((mean - theory.carrying[t]).abs() <= 0.02, "{mode:?} t={t}");
            }
        }
    }

    #[test]
    fn marginal_regime_dies_out() {
        let params = p(0.95, 0.2, 0.1, 0.5, 1 << 14);
        let trace = run(&params, 300, 3, SirMode::PerPair).unwrap();
        let ratios = trace.carrier_ratios();
        assert!(ratios[300] < ratios[100] && ratios[100] < ratios[0]);
    }

    #[test]
    fn sequential_examples() {
        let tr = sequential_baseline(256, 32, None).unwrap();
        assert_eq!(tr.rows[32].symptomatic_cumulative, 33);
        assert_eq!(tr.rows.len(), 33);
        let zero = sequential_baseline(256, 0, None).unwrap();
        assert_eq!(zero.rows[0].symptomatic_cumulative, 1);

        let k = NonZeroU64::new(5).unwrap();
        let tr = sequential_baseline(256, 40, Some(k)).unwrap();
        for r in &tr.rows[4..] {
            assert_eq!(r.carriers, 5);
        }
        for w in tr.rows.windows(2) {
            assert_eq!(
                w[1].carriers,
                w[0].carriers - w[0].recoveries + w[0].transmissions
            );
        }
        // population exhausted
        let tr = sequential_baseline(4, 10, None).unwrap();
        assert_eq!(tr.rows[10].symptomatic_cumulative, 4);
        assert_eq!(tr.rows[10].carriers, 4);
    }
}
