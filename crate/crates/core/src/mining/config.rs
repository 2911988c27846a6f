use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::chain::{EpochParams, RewardSchedule};
use crate::party::{Party, PerParty};
use crate::strategies::StrategyKind;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinerPopulation {
    pub beta_hon: f64,
    pub beta_rat: f64,
    pub beta_adv: f64,
    pub n: u32,
    /// Queries per miner per round.
    pub q: u32,
}

impl MinerPopulation {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, b) in [
            ("beta_hon", self.beta_hon),
            ("beta_rat", self.beta_rat),
            ("beta_adv", self.beta_adv),
        ] {
            if !(0.0..=1.0).contains(&b) {
                return Err(SimError::ConfigInvalid(format!(
                    "population.{name} = {b} is not in [0, 1]"
                )));
            }
        }
        let sum = self.beta_hon + self.beta_rat + self.beta_adv;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(SimError::ConfigInvalid(format!(
                "population betas must sum to 1 (within 1e-12), got {sum}"
            )));
        }
        if self.n == 0 || self.q == 0 {
            return Err(SimError::ConfigInvalid(
                "population.n and population.q must be positive".into(),
            ));
        }
        let c = self.counts();
        if c.honest > self.n {
            return Err(SimError::ConfigInvalid(
                "rounded party sizes exceed n".into(),
            ));
        }
        Ok(())
    }

    pub fn betas(&self) -> PerParty<f64> {
        PerParty {
            honest: self.beta_hon,
            rational: self.beta_rat,
            adversary: self.beta_adv,
        }
    }

    /// Miners per party: rational and adversarial sizes are rounded, honest
    /// takes the rest.
    pub fn counts(&self) -> PerParty<u32> {
        let n = self.n as f64;
        let rational = (self.beta_rat * n).round() as u32;
        let adversary = (self.beta_adv * n).round() as u32;
        PerParty {
            honest: self.n.saturating_sub(rational + adversary),
            rational,
            adversary,
        }
    }

    /// Honest count minus its unrounded size.
    pub fn rounding_residue(&self) -> f64 {
        self.counts().honest as f64 - self.beta_hon * self.n as f64
    }

    /// Party of each miner id, honest first.
    pub fn assignment(&self) -> Vec<Party> {
        let c = self.counts();
        let mut v = Vec::with_capacity(self.n as usize);
        v.extend(std::iter::repeat_n(Party::Honest, c.honest as usize));
        v.extend(std::iter::repeat_n(Party::Rational, c.rational as usize));
        v.extend(std::iter::repeat_n(Party::Adversary, c.adversary as usize));
        v
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkMode {
    #[default]
    Immediate,
    FrontRunning,
}

/// Which declared timestamps honest validators accept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimestampRule {
    /// Any monotone timestamp is accepted.
    #[default]
    Unchecked,
    /// A block may not claim a round later than the one it is broadcast in.
    NotAfterBroadcast,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalityConfig {
    pub e_fairness: f64,
    pub e_security: f64,
    /// Fork tolerance in blocks.
    pub rho: u32,
    /// Bribes of at least this many block rewards count as a fairness event.
    pub fairness_bribe_multiple: f64,
    /// Rounds a fairness flag lasts; `None` keeps it for the rest of the run.
    pub fairness_window: Option<u64>,
}

impl Default for ExternalityConfig {
    fn default() -> Self {
        Self {
            e_fairness: 0.5,
            e_security: 0.01,
            rho: 6,
            fairness_bribe_multiple: 10.0,
            fairness_window: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PragthosConfig {
    pub pc_mod: bool,
    pub tau_clamp: bool,
    pub tx_inclusion: bool,
    /// Tolerated failure probability for the proof-of-invalidity trigger.
    pub mu: f64,
    /// Suffix bits compared by the inclusion filter.
    pub l: u32,
    /// Share of honest miners moved onto a lagging fork to plant a commitment.
    pub diversion: f64,
}

impl Default for PragthosConfig {
    fn default() -> Self {
        Self {
            pc_mod: false,
            tau_clamp: false,
            tx_inclusion: false,
            mu: 0.2,
            l: 8,
            diversion: 1.0,
        }
    }
}

/// Fee-paying transactions injected at round 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TxWorkload {
    pub count: u32,
    pub fee: f64,
    /// Party whose miners hear the transactions first.
    pub recipient: Party,
    /// Per-round chance that a withheld transaction reaches the public pool anyway.
    pub resend_prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyBindings {
    pub rational: StrategyKind,
    pub adversary: StrategyKind,
    pub overlay: Option<StrategyKind>,
}

impl Default for StrategyBindings {
    fn default() -> Self {
        Self {
            rational: StrategyKind::Honest,
            adversary: StrategyKind::Honest,
            overlay: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub population: MinerPopulation,
    pub epoch: EpochParams,
    pub initial_difficulty: f64,
    pub rewards: RewardSchedule,
    pub externality: ExternalityConfig,
    /// System cost of one block, used by the closed-form payoffs.
    pub mining_cost_per_block: f64,
    /// Cost of one query, charged in the simulation.
    pub cost_per_query: f64,
    /// Per-query success probability at difficulty 1.
    pub base_rate: f64,
    pub max_rounds: u64,
    /// Stop once the public chain reaches this height.
    pub stop_at_height: Option<u64>,
    /// Stop as soon as an attack reports an outcome.
    pub stop_on_outcome: bool,
    pub rng_seed: u64,
    pub network: NetworkMode,
    pub timestamp_rule: TimestampRule,
    /// Honest miners split uniformly over tied tips instead of using the tie-break.
    pub smb_tie_split: bool,
    /// Miners abstain when participation is unprofitable.
    pub participation_check: bool,
    pub strategies: StrategyBindings,
    pub pragthos: PragthosConfig,
    pub transactions: Option<TxWorkload>,
    pub export_chain: Option<PathBuf>,
}

impl SimConfig {
    /// A small all-honest configuration; mostly useful as a starting point.
    pub fn baseline(n: u32) -> Self {
        let epoch = EpochParams {
            lambda: 2016,
            tau_min: 0.25,
            tau_max: 4.0,
            target_block_interval: 10.0,
        };
        Self {
            population: MinerPopulation {
                beta_hon: 1.0,
                beta_rat: 0.0,
                beta_adv: 0.0,
                n,
                q: 1,
            },
            epoch,
            initial_difficulty: 1.0,
            rewards: RewardSchedule::constant(50.0),
            externality: ExternalityConfig::default(),
            mining_cost_per_block: 0.0,
            cost_per_query: 0.0,
            base_rate: 1.0 / (epoch.target_block_interval * n as f64),
            max_rounds: 10_000,
            stop_at_height: None,
            stop_on_outcome: true,
            rng_seed: 0,
            network: NetworkMode::Immediate,
            timestamp_rule: TimestampRule::Unchecked,
            smb_tie_split: false,
            participation_check: true,
            strategies: StrategyBindings::default(),
            pragthos: PragthosConfig::default(),
            transactions: None,
            export_chain: None,
        }
    }

    /// Base rate that yields one block per `target_block_interval` rounds at
    /// difficulty 1 with every miner active.
    pub fn calibrated_base_rate(population: &MinerPopulation, epoch: &EpochParams) -> f64 {
        1.0 / (epoch.target_block_interval * population.n as f64 * population.q as f64)
    }

    /// Epoch parameters after the optional tau_min clamp.
    pub fn effective_epoch(&self) -> EpochParams {
        let mut e = self.epoch;
        if self.pragthos.tau_clamp {
            e.tau_min = e.tau_min.max(0.5);
        }
        e
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::ConfigInvalid(m));
        self.population.validate()?;
        self.epoch
            .validate()
            .map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
        self.rewards
            .validate()
            .map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
        let x = &self.externality;
        if !(0.0 < x.e_security && x.e_security < x.e_fairness && x.e_fairness < 1.0) {
            return bad(format!(
                "need 0 < e_security < e_fairness < 1, got e_security = {}, e_fairness = {}",
                x.e_security, x.e_fairness
            ));
        }
        if x.rho == 0 {
            return bad("externality.rho must be at least 1".into());
        }
        if !(x.fairness_bribe_multiple > 0.0) {
            return bad("externality.fairness_bribe_multiple must be positive".into());
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be positive".into());
        }
        if !(self.mining_cost_per_block >= 0.0 && self.cost_per_query >= 0.0) {
            return bad("costs must be non-negative".into());
        }
        if !(self.initial_difficulty > 0.0) {
            return bad("initial_difficulty must be positive".into());
        }
        if !(self.base_rate > 0.0 && self.base_rate / self.initial_difficulty <= 1.0) {
            return bad(format!(
                "base_rate {} gives no valid success probability",
                self.base_rate
            ));
        }
        let p = &self.pragthos;
        if !(p.mu > 0.0 && p.mu < 1.0) {
            return bad(format!("pragthos.mu = {} must lie in (0, 1)", p.mu));
        }
        if !(0.0..=1.0).contains(&p.diversion) {
            return bad(format!(
                "pragthos.diversion = {} must lie in [0, 1]",
                p.diversion
            ));
        }
        if p.l > 64 {
            return bad("pragthos.l must be at most 64".into());
        }
        if let Some(t) = &self.transactions {
            if !(t.fee >= 0.0) || !(0.0..=1.0).contains(&t.resend_prob) {
                return bad("transactions need fee >= 0 and resend_prob in [0, 1]".into());
            }
        }
        self.strategies.validate()
    }
}

impl StrategyBindings {
    pub fn validate(&self) -> Result<(), SimError> {
        use StrategyKind as K;
        let bad = |m: String| Err(SimError::ConfigInvalid(m));
        match &self.rational {
            K::Honest | K::RationalConditional | K::TransactionWithholding => {}
            other => {
                return bad(format!(
                    "strategy {} cannot be bound to rational miners",
                    other.name()
                ))
            }
        }
        match &self.adversary {
            K::Honest
            | K::DifficultyAltering { .. }
            | K::QuickFork { .. }
            | K::SelfishMiningBribing { .. } => {}
            other => {
                return bad(format!(
                    "strategy {} cannot be bound to adversarial miners",
                    other.name()
                ))
            }
        }
        if let Some(o) = &self.overlay {
            if !matches!(o, K::GoldfingerOverlay { .. }) {
                return bad(format!("strategy {} is not an overlay", o.name()));
            }
        }
        for k in [
            Some(&self.rational),
            Some(&self.adversary),
            self.overlay.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            k.validate().map_err(SimError::ConfigInvalid)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_put_residue_on_honest() {
        let p = MinerPopulation {
            beta_hon: 0.33,
            beta_rat: 0.33,
            beta_adv: 0.34,
            n: 10,
            q: 1,
        };
        let c = p.counts();
        assert_eq!((c.honest, c.rational, c.adversary), (4, 3, 3));
        assert!((p.rounding_residue() - 0.7).abs() < 1e-12);
        assert_eq!(p.assignment().len(), 10);
    }

    #[test]
    fn betas_must_sum_to_one() {
        let mut p = SimConfig::baseline(10).population;
        p.beta_hon = 0.8;
        p.beta_adv = 0.3;
        let e = p.validate().unwrap_err().to_string();
        assert!(e.contains("sum to 1"), "{e}");
    }

    #[test]
    fn baseline_is_valid() {
        SimConfig::baseline(20).validate().unwrap();
    }
}
