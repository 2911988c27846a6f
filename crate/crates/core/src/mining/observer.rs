use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ExternalityConfig;
use crate::chain::{block_reward_at, BlockId, ChainTree, RewardSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlagKind {
    Fairness,
    Security,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagEvent {
    pub round: u64,
    pub kind: FlagKind,
}

/// The externality multiplier and the events that set it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalitySignal {
    pub theta: f64,
    pub e_fairness: f64,
    pub e_security: f64,
    pub rho: u32,
    /// Conversion rate, held constant.
    pub cr: f64,
    pub flagged_events: Vec<FlagEvent>,
    fairness_window: Option<u64>,
}

impl ExternalitySignal {
    pub fn new(cfg: &ExternalityConfig) -> Self {
        Self {
            theta: 1.0,
            e_fairness: cfg.e_fairness,
            e_security: cfg.e_security,
            rho: cfg.rho,
            cr: 1.0,
            flagged_events: Vec::new(),
            fairness_window: cfg.fairness_window,
        }
    }

    pub fn security_flagged(&self) -> bool {
        self.flagged_events
            .iter()
            .any(|e| e.kind == FlagKind::Security)
    }

    fn flag(&mut self, round: u64, kind: FlagKind) {
        // One entry per kind and round is enough; repeated evidence adds nothing.
        if !self
            .flagged_events
            .iter()
            .any(|e| e.round == round && e.kind == kind)
        {
            self.flagged_events.push(FlagEvent { round, kind });
        }
    }

    /// Recomputes theta for `round`: security dominates and persists;
    /// fairness lasts for its window.
    fn settle(&mut self, round: u64) {
        self.theta = if self.security_flagged() {
            self.e_security
        } else if self.flagged_events.iter().any(|e| {
            e.kind == FlagKind::Fairness && self.fairness_window.is_none_or(|w| round < e.round + w)
        }) {
            self.e_fairness
        } else {
            1.0
        };
    }
}

/// Publicly observable facts fed to the observer.
#[derive(Clone, Debug, PartialEq)]
pub enum Evidence {
    /// A block became public in `round`.
    BlockPublished { id: BlockId, round: u64 },
    /// A revealed proof of invalidity checked out against the accused branch.
    PoiRevealed { round: u64, accused_root: BlockId },
}

/// Watches public chains and flags forks that overtook after trailing by at
/// least `rho` blocks.
///
/// It works only from block ids, parents, heights, publication rounds and
/// transaction contents; the miner field is never read.
#[derive(Clone, Debug)]
pub struct ExternalObserver {
    first_seen: HashMap<BlockId, u64>,
    leader: BlockId,
    rho: u32,
    bribe_multiple: f64,
    rewards: RewardSchedule,
}

impl ExternalObserver {
    pub fn new(cfg: &ExternalityConfig, rewards: RewardSchedule) -> Self {
        let mut first_seen = HashMap::new();
        first_seen.insert(BlockId::GENESIS, 0);
        Self {
            first_seen,
            leader: BlockId::GENESIS,
            rho: cfg.rho,
            bribe_multiple: cfg.fairness_bribe_multiple,
            rewards,
        }
    }

    pub fn leader(&self) -> BlockId {
        self.leader
    }

    /// Processes one round of evidence against the public tree.
    pub fn update(
        &mut self,
        tree: &ChainTree,
        signal: &mut ExternalitySignal,
        evidence: &[Evidence],
        round: u64,
    ) {
        for ev in evidence {
            match ev {
                Evidence::BlockPublished { id, round: r } => {
                    self.first_seen.entry(*id).or_insert(*r);
                    if let Some(b) = tree.get(id) {
                        let reward = block_reward_at(&self.rewards, b.height).unwrap_or(0.0);
                        let threshold = self.bribe_multiple * reward;
                        if b.txs
                            .iter()
                            .filter_map(|t| t.public_bribe())
                            .any(|a| a >= threshold && a > 0.0)
                        {
                            signal.flag(*r, FlagKind::Fairness);
                        }
                    }
                }
                Evidence::PoiRevealed { round: r, .. } => signal.flag(*r, FlagKind::Security),
            }
        }

        let candidate = self.preferred_tip(tree);
        if candidate != self.leader && !tree.is_ancestor(self.leader, candidate) {
            if tree.height(&candidate) > tree.height(&self.leader)
                && self.trailed(tree, self.leader, candidate)
            {
                signal.flag(round, FlagKind::Security);
            }
            if tree.height(&candidate) > tree.height(&self.leader) {
                self.leader = candidate;
            }
        } else if candidate != self.leader {
            self.leader = candidate;
        }
        signal.settle(round);
    }

    /// Highest public tip, first-seen first.
    fn preferred_tip(&self, tree: &ChainTree) -> BlockId {
        let top = tree.max_height_tips();
        *top.iter()
            .min_by_key(|t| (self.first_seen.get(t).copied().unwrap_or(u64::MAX), **t))
            .unwrap_or(&BlockId::GENESIS)
    }

    /// Did the branch ending at `challenger` ever trail the branch ending at
    /// `incumbent` by `rho` or more, judging by publication rounds?
    fn trailed(&self, tree: &ChainTree, incumbent: BlockId, challenger: BlockId) -> bool {
        let rho = self.rho as u64;
        let fork = tree.lca(incumbent, challenger);
        let base = tree.height(&fork);
        let seen = |id: &BlockId| self.first_seen.get(id).copied().unwrap_or(u64::MAX);
        // (round, height, branch) events; branch 0 = incumbent.
        let mut events: Vec<(u64, u64, u8)> = Vec::new();
        for (tip, side) in [(incumbent, 0u8), (challenger, 1u8)] {
            let mut cur = tip;
            while cur != fork {
                let b = tree.block(&cur);
                events.push((seen(&cur), b.height, side));
                cur = b.parent;
            }
        }
        events.sort_unstable();
        let (mut h_inc, mut h_ch) = (base, base);
        let mut i = 0;
        while i < events.len() {
            let r = events[i].0;
            while i < events.len() && events[i].0 == r {
                let (_, h, side) = events[i];
                if side == 0 {
                    h_inc = h_inc.max(h);
                } else {
                    h_ch = h_ch.max(h);
                }
                i += 1;
            }
            if h_inc >= h_ch + rho {
                return true;
            }
        }
        false
    }
}

/// Feeds one round of evidence to `observer`, updating `signal` in place.
pub fn observer_update(
    observer: &mut ExternalObserver,
    tree: &ChainTree,
    signal: &mut ExternalitySignal,
    evidence: &[Evidence],
    round: u64,
) {
    observer.update(tree, signal, evidence, round);
}
