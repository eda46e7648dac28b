use alloc::vec::Vec;
use rand::seq::SliceRandom;

use crate::rng::{Domain, StreamRng};
use crate::{Error, Result};

/// One round's partition of agents into `(questioner, answerer)` pairs.
/// With an odd population one agent sits the round out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingPlan {
    pub round: u64,
    pub pairs: Vec<(u32, u32)>,
    pub idle: Option<u32>,
}

impl PairingPlan {
    pub fn n_agents(&self) -> usize {
        self.pairs.len() * 2 + usize::from(self.idle.is_some())
    }
}

/// Uniform random matching with roles: Fisher-Yates shuffle of the identity
/// permutation, then consecutive elements form pairs with the even position
/// asking. The stream is keyed by `(seed, round)` only.
pub fn random_partition(n_agents: usize, round: u64, seed: u64) -> Result<PairingPlan> {
    if n_agents < 2 {
        return Err(Error::TooFewAgents(n_agents));
    }
    let mut rng = StreamRng::keyed(seed, round, Domain::Partition, 0);
    let mut order: Vec<u32> = (0..n_agents as u32).collect();
    order.shuffle(&mut rng);
    let pairs = order.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    let idle = (n_agents % 2 == 1).then(|| order[n_agents - 1]);
    Ok(PairingPlan { round, pairs, idle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn covers_everyone(plan: &PairingPlan, n: usize) -> bool {
        let mut seen = alloc::vec![false; n];
        for &(q, a) in &plan.pairs {
            if q == a || seen[q as usize] || seen[a as usize] {
                return false;
            }
            seen[q as usize] = true;
            seen[a as usize] = true;
        }
        if let Some(i) = plan.idle {
            if seen[i as usize] {
                return false;
            }
            seen[i as usize] = true;
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn small_examples() {
        let two = random_partition(2, 0, 9).unwrap();
        assert_eq!(two.pairs.len(), 1);
        assert!(two.idle.is_none());
        assert!(covers_everyone(&two, 2));

        let six = random_partition(6, 3, 9).unwrap();
        assert_eq!(six.pairs.len(), 3);
        assert!(covers_everyone(&six, 6));

        let seven = random_partition(7, 3, 9).unwrap();
        assert_eq!(seven.pairs.len(), 3);
        assert!(seven.idle.is_some());
        assert!(covers_everyone(&seven, 7));
        assert_eq!(seven.n_agents(), 7);

        assert_eq!(random_partition(1, 0, 0), Err(Error::TooFewAgents(1)));
    }

    #[test]
    fn deterministic_per_seed_and_round() {
        assert_eq!(random_partition(101, 5, 42), random_partition(101, 5, 42));
        assert_ne!(random_partition(101, 5, 42), random_partition(101, 6, 42));
        assert_ne!(random_partition(101, 5, 42), random_partition(101, 5, 43));
    }

    #[test]
    fn role_frequency_is_one_half() {
        let n = 8;
        let draws = 100_000u64;
        let mut asked = [0u64; 8];
        for round in 0..draws {
            for (q, _) in random_partition(n, round, 17).unwrap().pairs {
                asked[q as usize] += 1;
            }
        }
        let sigma = (draws as f64 * 0.25).sqrt();
        for count in asked {
            assert!(
                (count as f64 - draws as f64 / 2.0).abs() <= 3.0 * sigma,
                "{count}"
            );
        }
    }

    #[test]
    fn partner_of_agent_zero_is_uniform() {
        let draws = 100_000u64;
        let mut partner = [0u64; 4];
        for round in 0..draws {
            let plan = random_partition(4, round, 23).unwrap();
            for (q, a) in plan.pairs {
                if q == 0 {
                    partner[a as usize] += 1;
                } else if a == 0 {
                    partner[q as usize] += 1;
                }
            }
        }
        assert_eq!(partner[0], 0);
        let p = 1.0 / 3.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for &count in &partner[1..] {
            assert!(
                (count as f64 - draws as f64 * p).abs() <= 3.0 * sigma,
                "{partner:?}"
            );
        }
    }

    #[test]
    fn idle_agent_is_uniform() {
        let draws = 60_000u64;
        let mut idle = [0u64; 5];
        for round in 0..draws {
            idle[random_partition(5, round, 5).unwrap().idle.unwrap() as usize] += 1;
        }
        let p = 0.2;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for count in idle {
            assert!((count as f64 - draws as f64 * p).abs() <= 3.0 * sigma);
        }
    }

    proptest! {
        #[test]
        fn partition_invariant(n in 2usize..300, round in 0u64..1000, seed in any::<u64>()) {
            let plan = random_partition(n, round, seed).unwrap();
            prop_assert_eq!(plan.pairs.len(), n / 2);
            prop_assert_eq!(plan.idle.is_some(), n % 2 == 1);
            prop_assert!(covers_everyone(&plan, n));
        }
    }
}
