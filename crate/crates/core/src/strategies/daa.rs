use super::honest::honest_directives;
use super::{Ctx, Directive, Plan, Stamp, Strategy, StrategyKind};
use crate::chain::BlockId;
use crate::mining::{AttackOutcome, TimestampRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Waiting,
    Private,
    Done,
}

/// Forks at `r1` into epoch `start_epoch`, mines privately with timestamps
/// stretched by `alpha` so the branch retargets to `tau_min`, and publishes
/// once past the retarget and strictly longer than the public chain. Fails if the public chain
/// completes `r2` of the following epoch first.
pub struct DifficultyAltering {
    r1: f64,
    r2: f64,
    alpha: f64,
    start_epoch: u64,
    phase: Phase,
    fork_point: BlockId,
    fork_ts: u64,
    fork_round: u64,
    tip: BlockId,
    outcome: AttackOutcome,
}

impl DifficultyAltering {
    pub fn new(r1: f64, r2: f64, alpha: f64, start_epoch: u64) -> Self {
        Self {
            r1,
            r2,
            alpha,
            start_epoch,
            phase: Phase::Waiting,
            fork_point: BlockId::GENESIS,
            fork_ts: 0,
            fork_round: 0,
            tip: BlockId::GENESIS,
            outcome: AttackOutcome::NotAttempted,
        }
    }

    fn lambda(ctx: &Ctx<'_>) -> u64 {
        ctx.public.epoch().lambda
    }

    fn fork_height(&self, lambda: u64) -> u64 {
        self.start_epoch * lambda + (self.r1 * lambda as f64).floor() as u64
    }

    /// Public height at which the attack is declared lost.
    fn deadline(&self, lambda: u64) -> u64 {
        (self.start_epoch + 1) * lambda + (self.r2 * lambda as f64).ceil() as u64
    }

    fn stamp(&self, ctx: &Ctx<'_>) -> Stamp {
        let lambda = Self::lambda(ctx);
        let parent_ts = ctx.full.block(&self.tip).declared_timestamp;
        let next = ctx.full.height(&self.tip) + 1;
        let mut ts = if next <= (self.start_epoch + 1) * lambda {
            let elapsed = ctx.round.saturating_sub(self.fork_round) as f64;
            self.fork_ts + (self.alpha * elapsed).floor() as u64
        } else {
            ctx.round
        };
        if ctx.config.timestamp_rule == TimestampRule::NotAfterBroadcast {
            ts = ts.min(ctx.round);
        }
        Stamp::Declared(ts.max(parent_ts))
    }
}

impl Strategy for DifficultyAltering {
    fn kind(&self) -> StrategyKind {
        StrategyKind::DifficultyAltering {
            r1: self.r1,
            r2: self.r2,
            alpha: self.alpha,
            start_epoch: self.start_epoch,
        }
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) -> Plan {
        let mut plan = Plan::default();
        let lambda = Self::lambda(ctx);
        let public_tip = ctx.public.best_tip();
        let hc = ctx.public.height(&public_tip);

        // Without hash power there is no attack to launch.
        if self.phase == Phase::Waiting && !ctx.miners.is_empty() && hc >= self.fork_height(lambda)
        {
            self.fork_point = ctx
                .public
                .ancestor_at(public_tip, self.fork_height(lambda))
                .expect("height checked");
            self.fork_ts = ctx.public.block(&self.fork_point).declared_timestamp;
            self.fork_round = ctx.round;
            self.tip = self.fork_point;
            self.phase = Phase::Private;
        }
        match self.phase {
            Phase::Waiting | Phase::Done => {
                plan.directives = honest_directives(ctx, ctx.miners.to_vec(), false);
            }
            Phase::Private => {
                let ha = ctx.full.height(&self.tip);
                // Only a branch that already mines at the lowered difficulty counts.
                let retargeted = ha > (self.start_epoch + 1) * lambda;
                if retargeted && ha > hc {
                    let base = ctx.full.height(&self.fork_point);
                    plan.publish = ctx.full.path_to(self.tip).split_off(base as usize + 1);
                    self.outcome = AttackOutcome::Succeeded;
                    self.phase = Phase::Done;
                    plan.outcome = Some(self.outcome);
                    // Keep mining on the branch just released.
                    plan.directives
                        .push(Directive::public(self.tip, ctx.miners.to_vec()));
                } else if hc >= self.deadline(lambda) {
                    self.outcome = AttackOutcome::Failed;
                    self.phase = Phase::Done;
                    plan.outcome = Some(self.outcome);
                    plan.directives = honest_directives(ctx, ctx.miners.to_vec(), false);
                } else {
                    plan.directives.push(Directive {
                        parent: self.tip,
                        miners: ctx.miners.to_vec(),
                        stamp: self.stamp(ctx),
                        bribe_fraction: 0.0,
                        extra_txs: Vec::new(),
                        private: true,
                    });
                }
            }
        }
        plan
    }

    fn on_mined(&mut self, blocks: &[BlockId], ctx: &mut Ctx<'_>) {
        if self.phase != Phase::Private {
            return;
        }
        for b in blocks {
            if ctx.full.block(b).parent == self.tip {
                self.tip = *b;
                break;
            }
        }
    }

    fn outcome(&self) -> AttackOutcome {
        self.outcome
    }
}
