//! Statistics over traces: infection ratios, threshold rounds, deviation from
//! theory and per-round rate estimates.

use alloc::vec::Vec;

use crate::agent::MechTrace;
use crate::dynamics::{closed_form_ct, DynamicsParams};
use crate::sir::{PairOutcome, Trace};
use crate::{Error, Result};

fn row_at(trace: &Trace, t: usize) -> Result<&crate::sir::TraceRow> {
    trace.rows.get(t).ok_or(Error::RoundOutOfRange {
        round: t,
        len: trace.rows.len(),
    })
}

/// Fraction of agents symptomatic at least once in rounds `0..=t`.
pub fn cumulative_ratio(trace: &Trace, t: usize) -> Result<f64> {
    Ok(row_at(trace, t)?.symptomatic_cumulative as f64 / trace.n_agents as f64)
}

/// Fraction of agents symptomatic in round `t`.
pub fn current_ratio(trace: &Trace, t: usize) -> Result<f64> {
    Ok(row_at(trace, t)?.symptomatic_current as f64 / trace.n_agents as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RatioKind {
    Cumulative,
    Current,
}

/// First round whose ratio of the given kind is at least `threshold`.
pub fn first_round_reaching(trace: &Trace, threshold: f64, kind: RatioKind) -> Option<u64> {
    let ratios = match kind {
        RatioKind::Cumulative => trace.cumulative_ratios(),
        RatioKind::Current => trace.current_ratios(),
    };
    first_index_reaching(&ratios, threshold).map(|i| trace.rows[i].round)
}

pub fn first_index_reaching(series: &[f64], threshold: f64) -> Option<usize> {
    series.iter().position(|&x| x >= threshold)
}

/// Max-norm distance between the trace's carrier ratio and the closed-form
/// solution at the same rounds.
pub fn deviation_from_theory(trace: &Trace, params: &DynamicsParams) -> f64 {
    let n = trace.n_agents as f64;
    trace
        .rows
        .iter()
        .map(|r| (r.carriers as f64 / n - closed_form_ct(params, r.round as f64)).abs())
        .fold(0.0, f64::max)
}

/// Max-norm distance of an arbitrary carrier-ratio series indexed by round.
pub fn series_deviation(series: &[f64], params: &DynamicsParams) -> f64 {
    series
        .iter()
        .enumerate()
        .map(|(t, c)| (c - closed_form_ct(params, t as f64)).abs())
        .fold(0.0, f64::max)
}

/// A ratio with the sample size of its denominator. `value` is `None` when
/// the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Option<f64>,
    pub samples: u64,
}

impl Estimate {
    pub fn ratio(successes: u64, trials: u64) -> Self {
        Self {
            value: (trials > 0).then(|| successes as f64 / trials as f64),
            samples: trials,
        }
    }

    fn product(a: Estimate, b: Estimate) -> Self {
        Self {
            value: a.value.zip(b.value).map(|(x, y)| x * y),
            samples: a.samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRates {
    pub round: u64,
    /// Retrieval success rate among carrier questioners.
    pub beta_hat: Estimate,
    /// Retrieval rate times harmful-question rate given retrieval.
    pub alpha_q_hat: Estimate,
    /// Retrieval rate times harmful-answer rate given reception.
    pub alpha_a_hat: Estimate,
    /// Evictions of the last adversarial copy over round-start carriers.
    pub gamma_hat: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledRates {
    pub beta_hat: Estimate,
    pub alpha_q_hat: Estimate,
    pub alpha_a_hat: Estimate,
    pub gamma_hat: Estimate,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateEstimates {
    pub rounds: Vec<RoundRates>,
    pooled_counts: crate::agent::MechCounters,
}

impl RateEstimates {
    /// Estimates from counts summed over every round.
    pub fn pooled(&self) -> PooledRates {
        rates_from_counts(&self.pooled_counts)
    }
}

fn rates_from_counts(c: &crate::agent::MechCounters) -> PooledRates {
    let retrieval = Estimate::ratio(c.retrieval_successes, c.retrieval_attempts);
    PooledRates {
        beta_hat: retrieval,
        alpha_q_hat: Estimate::product(
            retrieval,
            Estimate::ratio(c.q_symptoms, c.retrieval_successes),
        ),
        alpha_a_hat: Estimate::product(
            retrieval,
            Estimate::ratio(c.a_symptoms, c.adversarial_receptions),
        ),
        gamma_hat: Estimate::ratio(c.dequeued_recoveries, c.round_start_carriers),
    }
}

pub fn estimate_rates(mech: &MechTrace) -> RateEstimates {
    let mut total = crate::agent::MechCounters::default();
    let rounds = mech
        .trace
        .rows
        .iter()
        .zip(&mech.counters)
        .map(|(row, c)| {
            total.round_start_carriers += c.round_start_carriers;
            total.retrieval_attempts += c.retrieval_attempts;
            total.retrieval_successes += c.retrieval_successes;
            total.q_symptoms += c.q_symptoms;
            total.a_symptoms += c.a_symptoms;
            total.adversarial_receptions += c.adversarial_receptions;
            total.dequeued_recoveries += c.dequeued_recoveries;
            let r = rates_from_counts(c);
            RoundRates {
                round: row.round,
                beta_hat: r.beta_hat,
                alpha_q_hat: r.alpha_q_hat,
                alpha_a_hat: r.alpha_a_hat,
                gamma_hat: r.gamma_hat,
            }
        })
        .collect();
    RateEstimates {
        rounds,
        pooled_counts: total,
    }
}

/// Estimates from counts summed over every round of every trace.
pub fn pooled_rates<'a, I>(traces: I) -> PooledRates
where
    I: IntoIterator<Item = &'a MechTrace>,
{
    let mut total = crate::agent::MechCounters::default();
    for c in traces.into_iter().flat_map(|m| &m.counters) {
        total.round_start_carriers += c.round_start_carriers;
        total.retrieval_attempts += c.retrieval_attempts;
        total.retrieval_successes += c.retrieval_successes;
        total.q_symptoms += c.q_symptoms;
        total.a_symptoms += c.a_symptoms;
        total.adversarial_receptions += c.adversarial_receptions;
        total.dequeued_recoveries += c.dequeued_recoveries;
    }
    rates_from_counts(&total)
}

/// Transmission rate among at-risk pairs (carrier questioner, benign
/// answerer) of a population-level pair log.
pub fn estimate_beta_from_pairs(log: &[PairOutcome]) -> Estimate {
    let at_risk = log.iter().filter(|o| o.at_risk()).count() as u64;
    let transmitted = log.iter().filter(|o| o.transmitted).count() as u64;
    Estimate::ratio(transmitted, at_risk)
}

/// Per-round mean and sample standard deviation across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedStat {
    pub mean: f64,
    /// `None` with fewer than two samples.
    pub std: Option<f64>,
}

impl SeedStat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                std: None,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = (n > 1).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            libm::sqrt(ss / (n - 1) as f64)
        });
        Self { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSummary {
    pub round: u64,
    pub n_seeds: usize,
    pub carrying: SeedStat,
    pub current: SeedStat,
    pub cumulative: SeedStat,
}

/// Seed-averaged summary over traces of equal length and population.
pub fn summarize<'a, I>(traces: I) -> Vec<RoundSummary>
where
    I: IntoIterator<Item = &'a Trace>,
{
    let traces: Vec<&Trace> = traces.into_iter().collect();
    let Some(len) = traces.iter().map(|t| t.rows.len()).min() else {
        return Vec::new();
    };
    (0..len)
        .map(|i| {
            let collect =
                |f: &dyn Fn(&Trace) -> f64| -> Vec<f64> { traces.iter().map(|t| f(t)).collect() };
            let n = |t: &Trace| t.n_agents as f64;
            RoundSummary {
                round: traces[0].rows[i].round,
                n_seeds: traces.len(),
                carrying: SeedStat::of(&collect(&|t| t.rows[i].carriers as f64 / n(t))),
                current: SeedStat::of(&collect(&|t| t.rows[i].symptomatic_current as f64 / n(t))),
                cumulative: SeedStat::of(&collect(&|t| {
                    t.rows[i].symptomatic_cumulative as f64 / n(t)
                })),
            }
        })
        .collect()
}

/// Exact (Clopper-Pearson) two-sided interval for a binomial proportion.
pub fn binomial_exact_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let tail = (1.0 - confidence) / 2.0;
    let (k, n) = (successes as f64, trials as f64);
    // P(X >= k | p) = I_p(k, n - k + 1), increasing in p
    let lower = if successes == 0 {
        0.0
    } else {
        bisect(|p| regularized_beta(p, k, n - k + 1.0) - tail)
    };
    let upper = if successes == trials {
        1.0
    } else {
        bisect(|p| regularized_beta(p, k + 1.0, n - k) - (1.0 - tail))
    };
    (lower, upper)
}

fn bisect(f: impl Fn(f64) -> f64) -> f64 {
    // f is increasing on [0, 1]
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log(1.0 - x);
    if x < (a + 1.0) / (a + b + 2.0) {
        libm::exp(ln_front) * beta_cf(x, a, b) / a
    } else {
        1.0 - libm::exp(ln_front) * beta_cf(1.0 - x, b, a) / b
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{mech_run, BehaviorParams, MechScenario};
    use crate::dynamics::{meanfield_curve, rounds_to_reach};
    use crate::sir::{
        init_population, pairwise_step_logged, run, sample_symptoms, sequential_baseline, Mode,
        SirMode, TraceRow,
    };
    use proptest::prelude::*;

    fn synthetic(current: &[u64], cumulative: &[u64], n: usize) -> Trace {
        Trace {
            mode: Mode::PerPair,
            n_agents: n,
            seed: 0,
            params: None,
            rows: current
                .iter()
                .zip(cumulative)
                .enumerate()
                .map(|(t, (&c, &cum))| TraceRow {
                    round: t as u64,
                    carriers: c,
                    symptomatic_current: c,
                    symptomatic_cumulative: cum,
                    ..TraceRow::default()
                })
                .collect(),
        }
    }

    fn scenario(r: f64, cap: usize) -> MechScenario {
        MechScenario {
            n_agents: 512,
            album_capacity: cap,
            benign_pool: 500,
            history_len: 3,
            behavior: BehaviorParams::new(r, 1.0, 1.0).unwrap(),
            initial_targets: 4,
            rounds: 30,
        }
    }

    #[test]
    fn ratio_examples() {
        let tr = synthetic(&[1, 3, 2], &[1, 4, 5], 10);
        assert_eq!(cumulative_ratio(&tr, 0).unwrap(), 0.1);
        assert_eq!(current_ratio(&tr, 2).unwrap(), 0.2);
        assert!(matches!(
            cumulative_ratio(&tr, 3),
            Err(Error::RoundOutOfRange { .. })
        ));
        let seq = sequential_baseline(256, 32, None).unwrap();
        let r = cumulative_ratio(&seq, 32).unwrap();
        assert_eq!(r, 33.0 / 256.0);
        assert!((r - 0.129).abs() < 1e-3);
    }

    #[test]
    fn threshold_examples() {
        let tr = synthetic(&[0, 50, 95], &[0, 50, 95], 100);
        assert_eq!(first_round_reaching(&tr, 0.9, RatioKind::Current), Some(2));
        assert_eq!(first_round_reaching(&tr, 0.96, RatioKind::Cumulative), None);

        let p = DynamicsParams::figure_defaults().with_c0(0.01).unwrap();
        let curve = meanfield_curve(&p, 0);
        assert_eq!(first_index_reaching(&curve.infected, 0.7), None);
        // theory: p_t = alpha c_t, so threshold 0.7 on p is c = 0.7 / alpha
        let t = rounds_to_reach(&p, 0.7 / 0.95).unwrap();
        let times: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let p_closed: Vec<f64> = times
            .iter()
            .map(|&s| 0.95 * closed_form_ct(&p, s))
            .collect();
        assert_eq!(
            first_index_reaching(&p_closed, 0.7),
            Some(libm::ceil(t) as usize)
        );
    }

    #[test]
    fn rate_estimates_with_certain_retrieval() {
        let est = estimate_rates(&mech_run(&scenario(1.0, 6), 3).unwrap());
        for r in &est.rounds {
            match r.beta_hat.value {
                Some(v) => assert_eq!(v, 1.0),
                None => assert_eq!(r.beta_hat.samples, 0),
            }
        }
    }

    #[test]
    fn rate_estimates_with_zero_behaviour() {
        let mut s = scenario(0.0, 6);
        s.behavior = BehaviorParams::new(0.0, 0.0, 0.0).unwrap();
        let est = estimate_rates(&mech_run(&s, 3).unwrap());
        for r in &est.rounds {
            if let Some(v) = r.beta_hat.value {
                assert_eq!(v, 0.0);
            }
            // no retrieval means no successes to condition on
            assert_eq!(r.alpha_q_hat.value, None);
        }
    }

    #[test]
    fn undefined_instead_of_zero() {
        let mut s = scenario(1.0, 4);
        s.initial_targets = 0;
        let est = estimate_rates(&mech_run(&s, 1).unwrap());
        for r in &est.rounds {
            assert_eq!(
                r.beta_hat,
                Estimate {
                    value: None,
                    samples: 0
                }
            );
            assert_eq!(r.gamma_hat.value, None);
        }
    }

    #[test]
    fn estimates_lie_in_unit_interval() {
        let est = estimate_rates(&mech_run(&scenario(0.6, 3), 8).unwrap());
        for r in &est.rounds {
            for e in [r.beta_hat, r.alpha_q_hat, r.alpha_a_hat, r.gamma_hat] {
                if let Some(v) = e.value {
                    assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }

    #[test]
    fn retrieval_rate_is_recovered() {
        // large album keeps duplicates from saturating
        let r = 0.6;
        let est = estimate_rates(&mech_run(&scenario(r, 40), 5).unwrap());
        let pooled = est.pooled().beta_hat;
        let n = pooled.samples as f64;
        let v = pooled.value.unwrap();
        assert!(
            (v - r).abs() <= 3.0 * (r * (1.0 - r) / n).sqrt(),
            "{v} over {n}"
        );
        let (lo, hi) = binomial_exact_interval((v * n).round() as u64, pooled.samples, 0.997);
        assert!(lo <= r && r <= hi);
    }

    #[test]
    fn sir_pair_log_recovers_beta() {
        let params = DynamicsParams::new(0.9, 0.8, 0.1, 0.2, 4000).unwrap();
        let mut state = init_population(4000, 800, 31).unwrap();
        sample_symptoms(&mut state, 0.9, 31);
        let mut log = Vec::new();
        for t in 0..20 {
            state = pairwise_step_logged(&state, &params, t, 31, &mut log)
                .unwrap()
                .0;
        }
        let est = estimate_beta_from_pairs(&log);
        let (n, v) = (est.samples as f64, est.value.unwrap());
        assert!((v - 0.8).abs() <= 3.0 * (0.8 * 0.2 / n).sqrt());
        let k = log.iter().filter(|o| o.transmitted).count() as u64;
        let (lo, hi) = binomial_exact_interval(k, est.samples, 0.997);
        assert!(lo <= 0.8 && 0.8 <= hi, "[{lo}, {hi}]");
    }

    #[test]
    fn synthetic_gamma_inside_exact_interval() {
        let params = DynamicsParams::new(0.9, 0.0, 0.3, 0.5, 5000).unwrap();
        let trace = run(&params, 3, 77, SirMode::PerPair).unwrap();
        let (rec, car) = trace.rows[..3]
            .iter()
            .fold((0, 0), |(r, c), row| (r + row.recoveries, c + row.carriers));
        let (lo, hi) = binomial_exact_interval(rec, car, 0.997);
        assert!(lo <= 0.3 && 0.3 <= hi);
    }

    #[test]
    fn deviation_of_exact_curve_is_zero() {
        let p = DynamicsParams::new(0.95, 0.8, 0.1, 0.5, 1 << 20).unwrap();
        let series: Vec<f64> = (0..50).map(|t| closed_form_ct(&p, t as f64)).collect();
        assert_eq!(series_deviation(&series, &p), 0.0);
    }

    #[test]
    fn small_population_deviates_from_theory() {
        let p = DynamicsParams::new(0.95, 0.8, 0.1, 0.5, 16).unwrap();
        let worst = (0..20)
            .map(|s| deviation_from_theory(&run(&p, 64, s, SirMode::PerPair).unwrap(), &p))
            .fold(0.0, f64::max);
        assert!(worst > 0.1, "worst small-N deviation {worst}");
    }

    #[test]
    fn summary_statistics() {
        let a = synthetic(&[2, 4], &[2, 4], 10);
        let b = synthetic(&[4, 4], &[4, 6], 10);
        let s = summarize([&a, &b]);
        assert_eq!(s.len(), 2);
        assert!((s[0].carrying.mean - 0.3).abs() < 1e-15);
        assert!((s[0].carrying.std.unwrap() - libm::sqrt(0.02)).abs() < 1e-15);
        assert_eq!(s[1].current.std, Some(0.0));
        assert_eq!(summarize([&a])[0].carrying.std, None);
    }

    #[test]
    fn incomplete_beta_reference_values() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a; I_0.5(a, a) = 0.5
        assert!((regularized_beta(0.3, 1.0, 1.0) - 0.3).abs() < 1e-14);
        assert!((regularized_beta(0.7, 3.0, 1.0) - 0.343).abs() < 1e-14);
        assert!((regularized_beta(0.5, 7.5, 7.5) - 0.5).abs() < 1e-13);
        // binomial CDF: P(X <= 2 | n=5, p=0.4) = I_0.6(3, 3) = 0.68256
        assert!((regularized_beta(0.6, 3.0, 3.0) - 0.68256).abs() < 1e-12);
    }

    #[test]
    fn exact_interval_edges() {
        assert_eq!(binomial_exact_interval(0, 0, 0.95), (0.0, 1.0));
        let (lo, hi) = binomial_exact_interval(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        // 1 - 0.025^(1/10)
        assert!((hi - 0.308_497_2).abs() < 1e-6);
        let (lo, hi) = binomial_exact_interval(50, 100, 0.95);
        assert!((lo - 0.398_321).abs() < 1e-5 && (hi - 0.601_679).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn cumulative_monotone_and_bounds_current(seed in 0u64..200) {
            let p = DynamicsParams::new(0.7, 0.9, 0.2, 0.05, 300).unwrap();
            let trace = run(&p, 20, seed, SirMode::PerPair).unwrap();
            for t in 0..trace.rows.len() {
                prop_assert!(current_ratio(&trace, t).unwrap() <= cumulative_ratio(&trace, t).unwrap());
                if t > 0 {
                    prop_assert!(cumulative_ratio(&trace, t).unwrap() >= cumulative_ratio(&trace, t - 1).unwrap());
                }
            }
        }

        #[test]
        fn threshold_round_monotone_in_threshold(series in proptest::collection::vec(0.0f64..=1.0, 1..40), a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            match (first_index_reaching(&series, lo), first_index_reaching(&series, hi)) {
                (Some(x), Some(y)) => prop_assert!(x <= y),
                (None, Some(_)) => prop_assert!(false),
                _ => {}
            }
        }
    }

    #[test]
    fn empty_summary() {
        assert!(summarize([].iter()).is_empty());
    }

    #[test]
    fn pooling_across_traces() {
        let a = mech_run(&scenario(0.6, 3), 8).unwrap();
        let b = mech_run(&scenario(0.6, 3), 9).unwrap();
        assert_eq!(pooled_rates([&a]), estimate_rates(&a).pooled());
        let both = pooled_rates([&a, &b]);
        let ca: u64 = a
            .counters
            .iter()
            .chain(&b.counters)
            .map(|c| c.retrieval_attempts)
            .sum();
        assert_eq!(both.beta_hat.samples, ca);
    }
}
