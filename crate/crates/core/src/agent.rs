//! Mechanistic simulation of chats between agents with FIFO image albums.
//!
//! In each pair the questioner picks an image from its album and the image is
//! enqueued into the answerer's album only. A questioner holding the
//! adversarial image picks it with probability `retrieval_rate`; otherwise it
//! picks a uniformly random benign entry (or the adversarial image anyway when
//! nothing benign is left). An agent carries the virus while at least one
//! adversarial copy is in its album, so recovery happens when FIFO pressure
//! pushes the last copy out. Neither `beta` nor `gamma` is a parameter here;
//! both are measured from the trace.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::album::{Album, ImageToken};
use crate::error::check_unit;
use crate::pairing::random_partition;
use crate::rng::{Domain, StreamRng};
use crate::sir::{Mode, Trace, TraceRow};
use crate::{Error, Result};

/// Per-chat behaviour of an agent holding or receiving the adversarial image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorParams {
    retrieval_rate: f64,
    symptom_q_rate: f64,
    symptom_a_rate: f64,
}

impl BehaviorParams {
    pub fn new(retrieval_rate: f64, symptom_q_rate: f64, symptom_a_rate: f64) -> Result<Self> {
        check_unit("retrieval_rate", retrieval_rate)?;
        check_unit("symptom_q_rate", symptom_q_rate)?;
        check_unit("symptom_a_rate", symptom_a_rate)?;
        Ok(Self {
            retrieval_rate,
            symptom_q_rate,
            symptom_a_rate,
        })
    }

    pub fn retrieval_rate(&self) -> f64 {
        self.retrieval_rate
    }
    pub fn symptom_q_rate(&self) -> f64 {
        self.symptom_q_rate
    }
    pub fn symptom_a_rate(&self) -> f64 {
        self.symptom_a_rate
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    pub id: u32,
    pub album: Album,
    /// Text history length. Recorded for bookkeeping, has no effect.
    pub history_len: usize,
    pub symptomatic_this_round: bool,
}

impl AgentState {
    pub fn carrying(&self) -> bool {
        self.album.carries_adversarial()
    }
}

/// Fill every album to capacity with benign images drawn uniformly (with
/// replacement) from a pool of `benign_pool` images.
pub fn init_mech_population(
    n_agents: usize,
    album_capacity: usize,
    benign_pool: usize,
    seed: u64,
) -> Result<Vec<AgentState>> {
    if n_agents < 2 {
        return Err(Error::TooFewAgents(n_agents));
    }
    if album_capacity == 0 {
        return Err(Error::ZeroCapacity);
    }
    if benign_pool == 0 {
        return Err(Error::EmptyBenignPool);
    }
    let pool = benign_pool as u32;
    (0..n_agents)
        .map(|i| {
            let mut rng = StreamRng::keyed(seed, 0, Domain::AlbumFill, i as u64);
            let mut album = Album::new(album_capacity)?;
            for _ in 0..album_capacity {
                album.push(ImageToken::Benign(rng.random_range(0..pool)));
            }
            Ok(AgentState {
                id: i as u32,
                album,
                history_len: 0,
                symptomatic_this_round: false,
            })
        })
        .collect()
}

/// Enqueue one adversarial copy into each target's album.
pub fn inject_adversarial(agents: &mut [AgentState], target_ids: &[usize]) -> Result<()> {
    let n = agents.len();
    let mut seen = vec![false; n];
    for &id in target_ids {
        if id >= n {
            return Err(Error::AgentOutOfRange { id, n_agents: n });
        }
        if seen[id] {
            return Err(Error::DuplicateAgent(id));
        }
        seen[id] = true;
    }
    for &id in target_ids {
        agents[id].album.push(ImageToken::Adversarial);
    }
    Ok(())
}

/// Raw per-round counts behind the rate estimators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MechCounters {
    pub round_start_carriers: u64,
    /// Chats whose questioner carried the adversarial image.
    pub retrieval_attempts: u64,
    pub retrieval_successes: u64,
    pub q_symptoms: u64,
    pub a_symptoms: u64,
    /// Answerers that received the adversarial image.
    pub adversarial_receptions: u64,
    /// Carriers whose last adversarial copy was evicted this round.
    pub dequeued_recoveries: u64,
}

/// Outcome of one [`mech_chat_round`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MechRound {
    pub round: u64,
    pub carriers: u64,
    pub symptomatic: u64,
    pub transmissions: u64,
    pub counters: MechCounters,
}

pub fn mech_chat_round(
    agents: &mut [AgentState],
    behavior: &BehaviorParams,
    round: u64,
    seed: u64,
) -> Result<MechRound> {
    let plan = random_partition(agents.len(), round, seed)?;
    let mut counters = MechCounters {
        round_start_carriers: agents.iter().filter(|a| a.carrying()).count() as u64,
        ..MechCounters::default()
    };
    for agent in agents.iter_mut() {
        agent.symptomatic_this_round = false;
    }
    let mut transmissions = 0;

    for (k, &(q, a)) in plan.pairs.iter().enumerate() {
        let mut rng = StreamRng::keyed(seed, round, Domain::Chat, k as u64);
        let questioner = &agents[q as usize];
        let q_carrying = questioner.carrying();

        let image = if q_carrying {
            counters.retrieval_attempts += 1;
            let benign = questioner.album.benign_count();
            if benign == 0 || rng.random_bool(behavior.retrieval_rate) {
                Some(ImageToken::Adversarial)
            } else {
                questioner.album.nth_benign(rng.random_range(0..benign))
            }
        } else {
            match questioner.album.len() {
                0 => None,
                len => questioner.album.nth_benign(rng.random_range(0..len)),
            }
        };
        let Some(image) = image else { continue };

        if image.is_adversarial() {
            counters.retrieval_successes += 1;
            if rng.random_bool(behavior.symptom_q_rate) {
                counters.q_symptoms += 1;
                agents[q as usize].symptomatic_this_round = true;
            }
        }

        let answerer = &mut agents[a as usize];
        let a_was_carrying = answerer.carrying();
        answerer.album.push(image);
        if image.is_adversarial() {
            counters.adversarial_receptions += 1;
            if !a_was_carrying {
                transmissions += 1;
            }
            if rng.random_bool(behavior.symptom_a_rate) {
                counters.a_symptoms += 1;
                answerer.symptomatic_this_round = true;
            }
        } else if a_was_carrying && !answerer.carrying() {
            counters.dequeued_recoveries += 1;
        }
    }

    Ok(MechRound {
        round,
        carriers: counters.round_start_carriers,
        symptomatic: counters.q_symptoms + counters.a_symptoms,
        transmissions,
        counters,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechScenario {
    pub n_agents: usize,
    pub album_capacity: usize,
    pub benign_pool: usize,
    pub history_len: usize,
    pub behavior: BehaviorParams,
    /// Number of agents that receive the adversarial image at round 0.
    pub initial_targets: usize,
    pub rounds: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechTrace {
    pub scenario: MechScenario,
    pub trace: Trace,
    /// One entry per row of `trace`.
    pub counters: Vec<MechCounters>,
}

/// Seed the population, inject the adversarial image into
/// `initial_targets` uniformly chosen agents, and play rounds
/// `0..=rounds`.
pub fn mech_run(scenario: &MechScenario, seed: u64) -> Result<MechTrace> {
    let n = scenario.n_agents;
    let mut agents = init_mech_population(n, scenario.album_capacity, scenario.benign_pool, seed)?;
    if scenario.initial_targets > n {
        return Err(Error::TooManyCarriers {
            requested: scenario.initial_targets,
            n_agents: n,
        });
    }
    for agent in &mut agents {
        agent.history_len = scenario.history_len;
    }
    let mut rng = StreamRng::keyed(seed, 0, Domain::Seeding, 0);
    let targets = rand::seq::index::sample(&mut rng, n, scenario.initial_targets).into_vec();
    inject_adversarial(&mut agents, &targets)?;

    let mut ever = vec![false; n];
    let mut cumulative = 0u64;
    let mut rows = Vec::with_capacity(scenario.rounds as usize + 1);
    let mut counters = Vec::with_capacity(scenario.rounds as usize + 1);
    for t in 0..=scenario.rounds {
        let r = mech_chat_round(&mut agents, &scenario.behavior, t, seed)?;
        for (e, agent) in ever.iter_mut().zip(&agents) {
            if agent.symptomatic_this_round && !*e {
                *e = true;
                cumulative += 1;
            }
        }
        rows.push(TraceRow {
            round: t,
            carriers: r.carriers,
            symptomatic_current: r.symptomatic,
            symptomatic_cumulative: cumulative,
            transmissions: r.transmissions,
            recoveries: r.counters.dequeued_recoveries,
        });
        counters.push(r.counters);
    }
    Ok(MechTrace {
        scenario: *scenario,
        trace: Trace {
            mode: Mode::Mechanistic,
            n_agents: n,
            seed,
            params: None,
            rows,
        },
        counters,
    })
}
