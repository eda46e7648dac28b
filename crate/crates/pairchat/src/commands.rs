//! Subcommand implementations. Each returns in-memory tables so tests can
//! inspect results without going through files.

use pairchat_core::dynamics::{
    closed_form_ct, limit_ct, meanfield_curve, ode_sample, rounds_to_reach,
};
use pairchat_core::metrics::series_deviation;
use pairchat_core::{
    estimate_rates, mech_run, pooled_rates, run, summarize, DynamicsParams, MechTrace, Regime,
    RoundSummary, SirMode, Trace,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ModeName, ScenarioConfig};
use crate::output::{fmt_sig, Cell, Table};
use crate::CliError;

pub const TRACE_COLUMNS: [&str; 14] = [
    "round",
    "seed",
    "n_carriers",
    "n_symptomatic_current",
    "n_symptomatic_cumulative",
    "c_current",
    "p_current",
    "p_cumulative",
    "transmissions",
    "recoveries",
    "beta_hat",
    "alpha_q_hat",
    "alpha_a_hat",
    "gamma_hat",
];

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "round",
    "n_seeds",
    "c_mean",
    "c_std",
    "p_current_mean",
    "p_current_std",
    "p_cumulative_mean",
    "p_cumulative_std",
    "c_theory",
];

pub fn theory(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    cfg.validate()?;
    let params = cfg.dynamics_params()?;
    let rounds = cfg.rounds as usize;
    let times: Vec<f64> = (0..=rounds).map(|t| t as f64).collect();
    let meanfield = meanfield_curve(&params, rounds);
    let rk4 = ode_sample(&params, &times, cfg.theory.dt)?;
    let mut table = Table::new(["t", "c_closed", "c_meanfield", "c_rk4", "p_closed"]);
    for (i, &t) in times.iter().enumerate() {
        let c = closed_form_ct(&params, t);
        table.push(vec![
            Cell::Float(t),
            Cell::Float(c),
            Cell::Float(meanfield.carrying[i]),
            Cell::Float(rk4.carrying[i]),
            Cell::Float(params.alpha() * c),
        ]);
    }
    Ok(table)
}

/// Per-seed runs of one scenario.
#[derive(Debug, Clone)]
pub enum Runs {
    Sir(Vec<Trace>),
    Mech(Vec<MechTrace>),
}

impl Runs {
    pub fn traces(&self) -> Vec<&Trace> {
        match self {
            Runs::Sir(t) => t.iter().collect(),
            Runs::Mech(m) => m.iter().map(|m| &m.trace).collect(),
        }
    }
}

pub fn run_seeds(cfg: &ScenarioConfig) -> Result<Runs, CliError> {
    cfg.validate()?;
    let runtime = |e: pairchat_core::Error| CliError::Runtime(e.to_string());
    Ok(match cfg.mode {
        ModeName::Perpair | ModeName::Binomial => {
            let params = cfg.dynamics_params()?;
            let mode = if cfg.mode == ModeName::Perpair {
                SirMode::PerPair
            } else {
                SirMode::Binomial
            };
            let traces = cfg
                .seeds
                .par_iter()
                .map(|&s| run(&params, cfg.rounds, s, mode).map_err(runtime))
                .collect::<Result<Vec<_>, _>>()?;
            Runs::Sir(traces)
        }
        ModeName::Mechanistic => {
            let scenario = cfg.mech_scenario()?;
            let traces = cfg
                .seeds
                .par_iter()
                .map(|&s| mech_run(&scenario, s).map_err(runtime))
                .collect::<Result<Vec<_>, _>>()?;
            Runs::Mech(traces)
        }
    })
}

/// Carrier-ratio theory matching the mode: the closed form for the SIR
/// modes, and for the mechanistic mode the mean-field recurrence driven by
/// rates pooled over all seeds. `None` when the rates are undefined.
pub fn theory_curve(cfg: &ScenarioConfig, runs: &Runs) -> Result<Option<Vec<f64>>, CliError> {
    let rounds = cfg.rounds as usize;
    match runs {
        Runs::Sir(_) => {
            let params = cfg.dynamics_params()?;
            Ok(Some(
                (0..=rounds)
                    .map(|t| closed_form_ct(&params, t as f64))
                    .collect(),
            ))
        }
        Runs::Mech(m) => {
            let Some(params) = fitted_params(cfg, m)? else {
                return Ok(None);
            };
            Ok(Some(meanfield_curve(&params, rounds).carrying))
        }
    }
}

/// Mean-field parameters with the pooled (β̂, γ̂) of a set of mechanistic runs.
pub fn fitted_params(
    cfg: &ScenarioConfig,
    runs: &[MechTrace],
) -> Result<Option<DynamicsParams>, CliError> {
    let pooled = pooled_rates(runs);
    let (Some(beta), Some(gamma)) = (pooled.beta_hat.value, pooled.gamma_hat.value) else {
        return Ok(None);
    };
    let n = cfg.dynamics.n_agents;
    let c0 = cfg.initial_targets() as f64 / n as f64;
    Ok(Some(DynamicsParams::new(1.0, beta, gamma, c0, n)?))
}

pub fn trace_table(runs: &Runs) -> Table {
    let mut table = Table::new(TRACE_COLUMNS);
    let push_rows =
        |table: &mut Table, trace: &Trace, rates: Option<&[pairchat_core::metrics::RoundRates]>| {
            let n = trace.n_agents as f64;
            for (i, r) in trace.rows.iter().enumerate() {
                let est = |f: fn(&pairchat_core::metrics::RoundRates) -> Option<f64>| {
                    Cell::opt(rates.and_then(|rs| f(&rs[i])))
                };
                table.push(vec![
                    Cell::Int(r.round),
                    Cell::Int(trace.seed),
                    Cell::Int(r.carriers),
                    Cell::Int(r.symptomatic_current),
                    Cell::Int(r.symptomatic_cumulative),
                    Cell::Float(r.carriers as f64 / n),
                    Cell::Float(r.symptomatic_current as f64 / n),
                    Cell::Float(r.symptomatic_cumulative as f64 / n),
                    Cell::Int(r.transmissions),
                    Cell::Int(r.recoveries),
                    est(|x| x.beta_hat.value),
                    est(|x| x.alpha_q_hat.value),
                    est(|x| x.alpha_a_hat.value),
                    est(|x| x.gamma_hat.value),
                ]);
            }
        };
    match runs {
        Runs::Sir(traces) => traces.iter().for_each(|t| push_rows(&mut table, t, None)),
        Runs::Mech(mechs) => mechs.iter().for_each(|m| {
            let rates = estimate_rates(m).rounds;
            push_rows(&mut table, &m.trace, Some(&rates));
        }),
    }
    table
}

pub fn summary_rows(summary: &[RoundSummary], theory: Option<&[f64]>) -> Vec<Vec<Cell>> {
    summary
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                Cell::Int(s.round),
                Cell::Int(s.n_seeds as u64),
                Cell::Float(s.carrying.mean),
                Cell::opt(s.carrying.std),
                Cell::Float(s.current.mean),
                Cell::opt(s.current.std),
                Cell::Float(s.cumulative.mean),
                Cell::opt(s.cumulative.std),
                Cell::opt(theory.and_then(|t| t.get(i).copied())),
            ]
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub runs: Runs,
    pub rows: Table,
    pub summary: Table,
    /// Max-norm distance between the seed-mean carrier ratio and the theory
    /// curve; `None` when no theory is available.
    pub deviation: Option<f64>,
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<Simulation, CliError> {
    let runs = run_seeds(cfg)?;
    let rows = trace_table(&runs);
    let summary = summarize(runs.traces());
    let theory = theory_curve(cfg, &runs)?;
    let mut table = Table::new(SUMMARY_COLUMNS);
    for r in summary_rows(&summary, theory.as_deref()) {
        table.push(r);
    }
    let deviation = theory.map(|th| {
        summary
            .iter()
            .zip(&th)
            .map(|(s, c)| (s.carrying.mean - c).abs())
            .fold(0.0, f64::max)
    });
    Ok(Simulation {
        runs,
        rows,
        summary: table,
        deviation,
    })
}

/// Seed-mean carrier deviation from the closed form; same quantity as
/// `Simulation::deviation` for the SIR modes.
pub fn closed_form_deviation(cfg: &ScenarioConfig, runs: &Runs) -> Result<f64, CliError> {
    let params = cfg.dynamics_params()?;
    let means: Vec<f64> = summarize(runs.traces())
        .iter()
        .map(|s| s.carrying.mean)
        .collect();
    Ok(series_deviation(&means, &params))
}

pub fn simulation_json(cfg: &ScenarioConfig, sim: &Simulation) -> Value {
    json!({
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "rows": sim.rows.to_json(),
        "summary": sim.summary.to_json(),
        "deviation": sim.deviation.map(|d| fmt_sig(d).parse::<f64>().unwrap_or(d)),
    })
}

/// One simulation per point of the cross product of `axes`; cells are
/// numbered in row-major order with the first axis varying slowest.
pub fn sweep(cfg: &ScenarioConfig, axes: &[(String, Vec<f64>)]) -> Result<Table, CliError> {
    if axes.is_empty() {
        return Err(CliError::Config("sweep needs at least one --axis".into()));
    }
    let mut cells: Vec<Vec<f64>> = vec![Vec::new()];
    for (key, values) in axes {
        if values.is_empty() {
            return Err(CliError::Config(format!("axis `{key}` has no values")));
        }
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    let configs = cells
        .iter()
        .map(|point| {
            let mut c = cfg.clone();
            for ((key, _), &v) in axes.iter().zip(point) {
                c.set_key(key, v)?;
            }
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let results = configs
        .par_iter()
        .map(simulate)
        .collect::<Result<Vec<_>, _>>()?;

    let mut headers = vec!["cell".to_string()];
    headers.extend(axes.iter().map(|(k, _)| k.clone()));
    headers.extend(SUMMARY_COLUMNS.iter().map(|s| s.to_string()));
    let mut table = Table::new(headers);
    for (i, (point, sim)) in cells.iter().zip(&results).enumerate() {
        for row in &sim.summary.rows {
            let mut r = vec![Cell::Int(i as u64)];
            r.extend(point.iter().map(|&v| Cell::Float(v)));
            r.extend(row.iter().copied());
            table.push(r);
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefenseQuery {
    pub beta: f64,
    pub gamma: f64,
    pub c0: Option<f64>,
    /// Population sizes to compare from a single seeded agent (c0 = 1/N).
    pub populations: Vec<usize>,
    /// Carrier ratio to reach; defaults to half the equilibrium.
    pub target: Option<f64>,
}

pub fn defense(q: &DefenseQuery) -> Result<String, CliError> {
    let base = DynamicsParams::new(1.0, q.beta, q.gamma, q.c0.unwrap_or(1.0), 2)?;
    let regime = base.regime();
    let limit = limit_ct(&base).value;
    let mut out = String::new();
    match regime {
        Regime::SupercriticalGrowth => {
            out.push_str(&format!(
                "supercritical; equilibrium c∞ = {}; containment requires γ ≥ {}\n",
                fmt_sig(limit),
                fmt_sig(q.beta / 2.0)
            ));
        }
        Regime::Marginal => out.push_str("marginal; extinction guaranteed\n"),
        Regime::SubcriticalDecay => out.push_str("subcritical; extinction guaranteed\n"),
    }
    if regime != Regime::SupercriticalGrowth {
        return Ok(out);
    }
    let target = q.target.unwrap_or(limit / 2.0);
    let reach =
        |c0: f64| -> Result<f64, CliError> { Ok(rounds_to_reach(&base.with_c0(c0)?, target)?) };
    if let Some(c0) = q.c0 {
        out.push_str(&format!(
            "rounds to reach c = {} from c0 = {}: {}\n",
            fmt_sig(target),
            fmt_sig(c0),
            fmt_sig(reach(c0)?)
        ));
    }
    let mut previous: Option<(usize, f64)> = None;
    for &n in &q.populations {
        if n < 2 {
            return Err(pairchat_core::Error::TooFewAgents(n).into());
        }
        let t = reach(1.0 / n as f64)?;
        out.push_str(&format!(
            "N = {n}: rounds to reach c = {} from one carrier: {}\n",
            fmt_sig(target),
            fmt_sig(t)
        ));
        if let Some((m, tm)) = previous {
            out.push_str(&format!("ΔT(N = {m} → {n}) = {}\n", fmt_sig(t - tm)));
        }
        previous = Some((n, t));
    }
    Ok(out)
}
