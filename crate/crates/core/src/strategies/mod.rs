//! Miner behaviour: honest, rational, the four attacks and the short-position
//! overlay.
//!
//! Each party runs one [`Strategy`] object for all of its miners. Every round
//! the engine asks the adversary, then the rational party, then the honest
//! party for a [`Plan`]; directives from all three are mined in that order.

mod daa;
mod honest;
mod pcmod;
mod quickfork;
mod rational;
mod smb;

pub use daa::DifficultyAltering;
pub use honest::HonestStrategy;
pub use quickfork::QuickFork;
pub use rational::RationalConditional;
pub use smb::SelfishMiningBribing;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{BlockId, ChainTree, MinerId, Transaction};
use crate::hash::KeyedHash;
use crate::mining::{AttackOutcome, Evidence, ExternalitySignal, PoiStats, RpDecision, SimConfig};
use crate::party::Party;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StrategyKind {
    Honest,
    RationalConditional,
    DifficultyAltering {
        r1: f64,
        r2: f64,
        /// Timestamp stretch factor.
        alpha: f64,
        /// Epoch in which the fork starts.
        #[serde(default)]
        start_epoch: u64,
    },
    QuickFork {
        k: u32,
        #[serde(default)]
        bribe: f64,
    },
    SelfishMiningBribing {
        z: f64,
    },
    TransactionWithholding,
    GoldfingerOverlay {
        c1: f64,
        theta_init: f64,
    },
}

impl StrategyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Honest => "honest",
            StrategyKind::RationalConditional => "rational-conditional",
            StrategyKind::DifficultyAltering { .. } => "difficulty-altering",
            StrategyKind::QuickFork { .. } => "quick-fork",
            StrategyKind::SelfishMiningBribing { .. } => "selfish-mining-bribing",
            StrategyKind::TransactionWithholding => "transaction-withholding",
            StrategyKind::GoldfingerOverlay { .. } => "goldfinger-overlay",
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            StrategyKind::DifficultyAltering { r1, r2, alpha, .. } => {
                if !(0.0..=1.0).contains(&r1) || !(0.0..=1.0).contains(&r2) {
                    return Err(format!(
                        "difficulty-altering needs r1, r2 in [0, 1], got {r1}, {r2}"
                    ));
                }
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(format!("difficulty-altering needs alpha > 0, got {alpha}"));
                }
            }
            StrategyKind::QuickFork { k, bribe } => {
                if k == 0 {
                    return Err("quick-fork needs k >= 1".into());
                }
                if !(bribe >= 0.0) {
                    return Err(format!(
                        "quick-fork bribe must be non-negative, got {bribe}"
                    ));
                }
            }
            StrategyKind::SelfishMiningBribing { z } => {
                // z = 0 is allowed so the attack can run as plain selfish mining.
                if !(0.0..1.0).contains(&z) {
                    return Err(format!("selfish-mining-bribing needs z in [0, 1), got {z}"));
                }
            }
            StrategyKind::GoldfingerOverlay { c1, theta_init } => {
                if !(c1 >= 0.0) {
                    return Err(format!("goldfinger c1 must be non-negative, got {c1}"));
                }
                if !(theta_init > 0.0 && theta_init <= 1.0) {
                    return Err(format!(
                        "goldfinger theta_init must be in (0, 1], got {theta_init}"
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// What a miner does with a transaction it hears first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TxPolicy {
    Gossip,
    Withhold,
}

/// Withholding miners keep heard transactions to themselves; everyone else
/// relays them.
pub fn txwithhold_filter(_incoming: &Transaction, policy: &StrategyKind) -> TxPolicy {
    match policy {
        StrategyKind::TransactionWithholding => TxPolicy::Withhold,
        _ => TxPolicy::Gossip,
    }
}

/// Fiat value of coin income plus a short position of size `c1` opened at
/// `theta_init`.
pub fn goldfinger_value(theta_init: f64, theta_now: f64, c1: f64, coin_payoff: f64) -> f64 {
    theta_now * coin_payoff + (theta_init - theta_now) * c1
}

/// Timestamp a directive asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stamp {
    /// The mining round, but never below the parent's timestamp.
    Truthful,
    Declared(u64),
}

/// Mine on `parent` with `miners` this round.
#[derive(Clone, Debug, PartialEq)]
pub struct Directive {
    pub parent: BlockId,
    pub miners: Vec<MinerId>,
    pub stamp: Stamp,
    /// Attach a bribe of this fraction of the block reward (0 for none).
    pub bribe_fraction: f64,
    pub extra_txs: Vec<Transaction>,
    /// Keep resulting blocks off the network.
    pub private: bool,
}

impl Directive {
    pub fn public(parent: BlockId, miners: Vec<MinerId>) -> Self {
        Self {
            parent,
            miners,
            stamp: Stamp::Truthful,
            bribe_fraction: 0.0,
            extra_txs: Vec::new(),
            private: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Plan {
    pub directives: Vec<Directive>,
    /// Private blocks to release now, parents first.
    pub publish: Vec<BlockId>,
    /// Transactions to put in the public pool.
    pub broadcast_txs: Vec<Transaction>,
    pub outcome: Option<AttackOutcome>,
}

/// A public fork started `k` blocks below the tip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForkNotice {
    pub fork_point: BlockId,
    /// First block of the honest branch above the fork point.
    pub honest_child: BlockId,
    pub k: u32,
    pub started: u64,
    pub fork_tip: BlockId,
    pub honest_tip: BlockId,
    pub max_lead: u64,
    pub active: bool,
}

impl ForkNotice {
    /// True for blocks on the forked branch (excluding the fork point) that
    /// were mined after the fork was announced.
    pub fn on_fork(&self, tree: &ChainTree, id: BlockId) -> bool {
        let fp = tree.height(&self.fork_point);
        let Some(b) = tree.get(&id) else { return false };
        b.height > fp
            && b.actual_round >= self.started
            && tree.ancestor_at(id, fp) == Some(self.fork_point)
            && tree.ancestor_at(id, fp + 1) != Some(self.honest_child)
    }

    /// First fork block on the path to `fork_tip`, if the fork has any.
    pub fn root(&self, tree: &ChainTree) -> Option<BlockId> {
        if self.fork_tip == self.fork_point {
            None
        } else {
            tree.ancestor_at(self.fork_tip, tree.height(&self.fork_point) + 1)
        }
    }

    /// Recomputes both tips from the public tree.
    pub fn refresh(&mut self, tree: &ChainTree, excluded: &[BlockId]) {
        let on_fork_tip =
            tree.best_tip_where(|t| self.on_fork(tree, *t) && !is_excluded(tree, excluded, *t));
        self.fork_tip = if self.on_fork(tree, on_fork_tip) {
            on_fork_tip
        } else {
            self.fork_point
        };
        self.honest_tip =
            tree.best_tip_where(|t| !self.on_fork(tree, *t) && !is_excluded(tree, excluded, *t));
        self.max_lead = self.max_lead.max(self.lead(tree).max(0) as u64);
    }

    /// Honest branch height minus fork height.
    pub fn lead(&self, tree: &ChainTree) -> i64 {
        tree.height(&self.honest_tip) as i64 - tree.height(&self.fork_tip) as i64
    }
}

/// Public coordination state: announcements every party can derive from the
/// public chain, plus per-run bookkeeping.
#[derive(Clone, Debug, Default)]
pub struct Board {
    pub fork: Option<ForkNotice>,
    /// Roots of branches proven invalid; compliant miners avoid them.
    pub excluded: Vec<BlockId>,
    pub rp_decisions: Vec<RpDecision>,
    pub poi: PoiStats,
    pub notes: Vec<String>,
}

pub(crate) fn is_excluded(tree: &ChainTree, excluded: &[BlockId], id: BlockId) -> bool {
    excluded.iter().any(|r| tree.is_ancestor(*r, id))
}

/// Fork-choice tip for compliant miners.
pub fn compliant_tip(tree: &ChainTree, excluded: &[BlockId]) -> BlockId {
    if excluded.is_empty() {
        tree.best_tip()
    } else {
        tree.best_tip_where(|t| !is_excluded(tree, excluded, *t))
    }
}

/// All compliant tips at the maximal height, in fork-choice order.
pub fn tied_tips(tree: &ChainTree, excluded: &[BlockId]) -> Vec<BlockId> {
    if excluded.is_empty() {
        return tree.max_height_tips();
    }
    let best = compliant_tip(tree, excluded);
    let h = tree.height(&best);
    let mut v: Vec<BlockId> = tree
        .tips_from(h)
        .filter(|t| tree.height(t) == h && !is_excluded(tree, excluded, **t))
        .copied()
        .collect();
    v.sort_by_key(|t| (tree.arrival(t), *t));
    v
}

/// Everything a strategy may look at in one round.
pub struct Ctx<'a> {
    pub round: u64,
    pub party: Party,
    pub miners: &'a [MinerId],
    pub public: &'a ChainTree,
    /// Ground truth including private blocks; only the adversary reads it.
    pub full: &'a ChainTree,
    pub signal: &'a ExternalitySignal,
    pub config: &'a SimConfig,
    pub board: &'a mut Board,
    pub rng: &'a mut ChaCha8Rng,
    pub hasher: &'a KeyedHash,
}

pub trait Strategy: Send {
    fn kind(&self) -> StrategyKind;

    /// Called after deliveries and before anyone acts.
    fn reveal(&mut self, _ctx: &mut Ctx<'_>) -> Vec<Evidence> {
        Vec::new()
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) -> Plan;

    /// Blocks this party's directives produced this round.
    fn on_mined(&mut self, _blocks: &[BlockId], _ctx: &mut Ctx<'_>) {}

    fn outcome(&self) -> AttackOutcome {
        AttackOutcome::NotAttempted
    }
}

/// Builds the strategy object for `kind`.
pub fn build(kind: &StrategyKind, party: Party, config: &SimConfig) -> Box<dyn Strategy> {
    match kind {
        StrategyKind::Honest
        | StrategyKind::TransactionWithholding
        | StrategyKind::GoldfingerOverlay { .. } => {
            Box::new(HonestStrategy::new(party, kind.clone(), config))
        }
        StrategyKind::RationalConditional => Box::new(RationalConditional::new(config)),
        StrategyKind::DifficultyAltering {
            r1,
            r2,
            alpha,
            start_epoch,
        } => Box::new(DifficultyAltering::new(*r1, *r2, *alpha, *start_epoch)),
        StrategyKind::QuickFork { k, bribe } => Box::new(QuickFork::new(*k, *bribe)),
        StrategyKind::SelfishMiningBribing { z } => Box::new(SelfishMiningBribing::new(*z)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::TxId;

    #[test]
    fn filter_policies() {
        let tx = Transaction::normal(TxId([0; 32]), 1.0, vec![]).unwrap();
        assert_eq!(
            txwithhold_filter(&tx, &StrategyKind::Honest),
            TxPolicy::Gossip
        );
        assert_eq!(
            txwithhold_filter(&tx, &StrategyKind::RationalConditional),
            TxPolicy::Gossip
        );
        assert_eq!(
            txwithhold_filter(&tx, &StrategyKind::TransactionWithholding),
            TxPolicy::Withhold
        );
    }

    #[test]
    fn goldfinger_examples() {
        assert_eq!(goldfinger_value(0.5, 0.5, 1000.0, 50.0), 25.0);
        assert!((goldfinger_value(1.0, 0.01, 1000.0, 50.0) - 990.5).abs() < 1e-9);
        assert_eq!(goldfinger_value(1.0, 0.01, 0.0, 50.0), 0.5);
    }

    #[test]
    fn kind_validation() {
        assert!(StrategyKind::QuickFork { k: 0, bribe: 0.0 }
            .validate()
            .is_err());
        assert!(StrategyKind::SelfishMiningBribing { z: 1.0 }
            .validate()
            .is_err());
        assert!(StrategyKind::DifficultyAltering {
            r1: 0.0,
            r2: 1.5,
            alpha: 2.0,
            start_epoch: 0
        }
        .validate()
        .is_err());
        assert!(StrategyKind::GoldfingerOverlay {
            c1: 1000.0,
            theta_init: 1.0
        }
        .validate()
        .is_ok());
    }
}
