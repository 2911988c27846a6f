use std::collections::BTreeMap;

use rand::Rng;

use super::pcmod::PcModAgent;
use super::{compliant_tip, tied_tips, Ctx, Directive, Plan, Strategy, StrategyKind};
use crate::analytics::ahp_check;
use crate::chain::{block_reward_at, BlockId, MinerId};
use crate::mining::Evidence;
use crate::party::Party;

/// Follows the fork-choice rule. Also used for withholding miners and the
/// short-position overlay, whose mining is honest.
pub struct HonestStrategy {
    kind: StrategyKind,
    pcmod: Option<PcModAgent>,
}

impl HonestStrategy {
    pub fn new(party: Party, kind: StrategyKind, config: &crate::mining::SimConfig) -> Self {
        let pcmod =
            (party == Party::Honest && config.pragthos.pc_mod).then(|| PcModAgent::new(config));
        Self { kind, pcmod }
    }
}

/// Whether mining on `parent` is worth its query cost right now.
pub(crate) fn participates(ctx: &Ctx<'_>, parent: &BlockId) -> bool {
    let cfg = ctx.config;
    if !cfg.participation_check || cfg.cost_per_query == 0.0 {
        return true;
    }
    let h = ctx.public.height(parent) + 1;
    let r = block_reward_at(&cfg.rewards, h).unwrap_or(0.0);
    let p = cfg.base_rate / ctx.public.difficulty_for_child(parent);
    ahp_check(ctx.signal.theta, r, p, cfg.cost_per_query)
}

/// Plain honest mining for `miners`, splitting them over tied tips when the
/// configuration asks for it.
pub(crate) fn honest_directives(
    ctx: &mut Ctx<'_>,
    miners: Vec<MinerId>,
    split: bool,
) -> Vec<Directive> {
    if miners.is_empty() {
        return Vec::new();
    }
    if split {
        let tips = tied_tips(ctx.public, &ctx.board.excluded);
        if tips.len() > 1 {
            let mut groups: BTreeMap<usize, Vec<MinerId>> = BTreeMap::new();
            for m in miners {
                groups
                    .entry(ctx.rng.random_range(0..tips.len()))
                    .or_default()
                    .push(m);
            }
            return groups
                .into_iter()
                .map(|(i, ms)| Directive::public(tips[i], ms))
                .collect();
        }
    }
    vec![Directive::public(
        compliant_tip(ctx.public, &ctx.board.excluded),
        miners,
    )]
}

impl Strategy for HonestStrategy {
    fn kind(&self) -> StrategyKind {
        self.kind.clone()
    }

    fn reveal(&mut self, ctx: &mut Ctx<'_>) -> Vec<Evidence> {
        match &mut self.pcmod {
            Some(agent) => agent.reveal(ctx),
            None => Vec::new(),
        }
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) -> Plan {
        let tip = compliant_tip(ctx.public, &ctx.board.excluded);
        if !participates(ctx, &tip) {
            return Plan::default();
        }
        let mut plan = Plan::default();
        let mut miners = ctx.miners.to_vec();
        if let Some(agent) = &mut self.pcmod {
            agent.plan(ctx, &mut miners, &mut plan);
        }
        let split = ctx.config.smb_tie_split && ctx.party == Party::Honest;
        plan.directives
            .extend(honest_directives(ctx, miners, split));
        plan
    }

    fn on_mined(&mut self, blocks: &[BlockId], _ctx: &mut Ctx<'_>) {
        if let Some(agent) = &mut self.pcmod {
            agent.record_own(blocks);
        }
    }
}
