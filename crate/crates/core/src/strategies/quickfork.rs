use super::honest::honest_directives;
use super::{Ctx, Directive, ForkNotice, Plan, Strategy, StrategyKind};
use crate::chain::{block_reward_at, Transaction, TxId};
use crate::mining::AttackOutcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Warmup,
    Attacking,
    Done,
}

/// Publicly forks `k` blocks below the tip and mines on the fork until it
/// draws level (success) or falls `rho` behind (failure).
pub struct QuickFork {
    k: u32,
    bribe: f64,
    phase: Phase,
    outcome: AttackOutcome,
    nonce: u64,
}

impl QuickFork {
    pub fn new(k: u32, bribe: f64) -> Self {
        Self {
            k,
            bribe,
            phase: Phase::Warmup,
            outcome: AttackOutcome::NotAttempted,
            nonce: 0,
        }
    }

    fn start(&mut self, ctx: &mut Ctx<'_>) {
        let tip = ctx.public.best_tip();
        let h = ctx.public.height(&tip);
        let fork_point = ctx
            .public
            .ancestor_at(tip, h - self.k as u64)
            .expect("height checked");
        let honest_child = ctx
            .public
            .ancestor_at(tip, h - self.k as u64 + 1)
            .expect("height checked");
        let mut notice = ForkNotice {
            fork_point,
            honest_child,
            k: self.k,
            started: ctx.round,
            fork_tip: fork_point,
            honest_tip: tip,
            max_lead: 0,
            active: true,
        };
        notice.refresh(ctx.public, &ctx.board.excluded);
        ctx.board.fork = Some(notice);
        self.phase = Phase::Attacking;
    }

    fn finish(&mut self, ctx: &mut Ctx<'_>, outcome: AttackOutcome, plan: &mut Plan) {
        self.outcome = outcome;
        self.phase = Phase::Done;
        if let Some(f) = ctx.board.fork.as_mut() {
            f.active = false;
        }
        plan.outcome = Some(outcome);
    }
}

impl Strategy for QuickFork {
    fn kind(&self) -> StrategyKind {
        StrategyKind::QuickFork {
            k: self.k,
            bribe: self.bribe,
        }
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) -> Plan {
        let mut plan = Plan::default();
        if self.phase == Phase::Warmup
            && !ctx.miners.is_empty()
            && ctx.public.height(&ctx.public.best_tip()) > self.k as u64
        {
            self.start(ctx);
        }
        if self.phase != Phase::Attacking {
            plan.directives = honest_directives(ctx, ctx.miners.to_vec(), false);
            return plan;
        }

        let mut f = ctx.board.fork.expect("attacking implies a notice");
        let excluded = f
            .root(ctx.public)
            .is_some_and(|r| ctx.board.excluded.contains(&r));
        if excluded || !f.active {
            self.finish(ctx, AttackOutcome::Failed, &mut plan);
            plan.directives = honest_directives(ctx, ctx.miners.to_vec(), false);
            return plan;
        }
        f.refresh(ctx.public, &ctx.board.excluded);
        ctx.board.fork = Some(f);
        let lead = f.lead(ctx.public);
        let rho = ctx.config.externality.rho as i64;
        if lead <= 0 {
            self.finish(ctx, AttackOutcome::Succeeded, &mut plan);
            return plan;
        }
        if lead >= rho {
            self.finish(ctx, AttackOutcome::Failed, &mut plan);
            plan.directives = honest_directives(ctx, ctx.miners.to_vec(), false);
            return plan;
        }

        let mut d = Directive::public(f.fork_tip, ctx.miners.to_vec());
        if self.bribe > 0.0 {
            let h = ctx.public.height(&f.fork_tip) + 1;
            let amount = self.bribe * block_reward_at(&ctx.config.rewards, h).unwrap_or(0.0);
            if amount > 0.0 {
                self.nonce += 1;
                let id = TxId(ctx.hasher.hash(&[
                    b"qf-bribe",
                    &self.nonce.to_be_bytes(),
                    &ctx.round.to_be_bytes(),
                ]));
                if let Ok(tx) = Transaction::bribe(id, amount) {
                    d.extra_txs.push(tx);
                }
            }
        }
        plan.directives.push(d);
        plan
    }

    fn outcome(&self) -> AttackOutcome {
        self.outcome
    }
}
