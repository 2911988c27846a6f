use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::FlagEvent;
use crate::party::PerParty;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackOutcome {
    #[default]
    NotAttempted,
    Succeeded,
    Failed,
}

/// One join-or-follow decision by the rational party.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpDecision {
    pub round: u64,
    pub k: u32,
    pub rho: u32,
    /// Largest honest lead over the fork seen up to the decision.
    pub max_lead_seen: u64,
    pub v_deviate: f64,
    pub v_follow: f64,
    pub guard_passed: bool,
    pub joined: bool,
}

/// Inclusion-filter evaluations while building blocks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterStats {
    pub evaluations: u64,
    pub passes: u64,
}

/// Proof-of-invalidity bookkeeping for one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PoiStats {
    pub commits_made: u64,
    /// Commitments that landed in a fork block mined by an honest miner.
    pub placed_by_mining: u64,
    /// Commitments that landed in a fork block mined by someone else.
    pub placed_by_broadcast: u64,
    pub reveals_valid: u64,
    pub reveals_invalid: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub seed: u64,
    pub rounds: u64,
    /// Theta-weighted value of rewards, fees and bribes, minus query costs.
    pub per_party_payoff: PerParty<f64>,
    /// The same income in coins, before theta weighting and costs.
    pub per_party_coin: PerParty<f64>,
    pub per_party_cost: PerParty<f64>,
    /// Fee income in coins (part of `per_party_coin`).
    pub per_party_fees: PerParty<f64>,
    /// Blocks on the final chain.
    pub blocks_by_party: PerParty<u64>,
    /// Blocks off the final chain, including never-published ones.
    pub orphans_by_party: PerParty<u64>,
    pub final_height: u64,
    /// Theta change points, starting with `(0, 1.0)`.
    pub theta_trace: Vec<(u64, f64)>,
    pub theta_final: f64,
    pub flagged_events: Vec<FlagEvent>,
    pub attack_outcome: AttackOutcome,
    pub outcome_round: Option<u64>,
    pub rp_decisions: Vec<RpDecision>,
    pub goldfinger_value: Option<f64>,
    /// Workload fees not on the final chain when the run stopped.
    pub pending_fees: f64,
    pub filter: FilterStats,
    pub poi: PoiStats,
    /// Every retarget factor applied anywhere in the tree.
    pub taus_applied: Vec<f64>,
    pub miner_counts: PerParty<u32>,
    pub rounding_residue: f64,
    pub notes: Vec<String>,
    pub chain_export: Option<PathBuf>,
}

impl ScenarioResult {
    /// Share of final-chain coin income that went to the adversary.
    pub fn adversary_revenue_share(&self) -> f64 {
        let total = self.per_party_coin.total();
        if total > 0.0 {
            self.per_party_coin.adversary / total
        } else {
            0.0
        }
    }

    pub fn adversary_block_share(&self) -> f64 {
        let total = self.blocks_by_party.total();
        if total > 0 {
            self.blocks_by_party.adversary as f64 / total as f64
        } else {
            0.0
        }
    }

    pub fn theta_at(&self, round: u64) -> f64 {
        theta_at(&self.theta_trace, round)
    }
}

pub(crate) fn theta_at(trace: &[(u64, f64)], round: u64) -> f64 {
    match trace.partition_point(|(r, _)| *r <= round) {
        0 => 1.0,
        i => trace[i - 1].1,
    }
}
