use super::{compliant_tip, Ctx, Directive, Plan, Strategy, StrategyKind};
use crate::chain::BlockId;

/// Selfish mining in which every withheld block carries a bribe of `z` times
/// the block reward, payable to whoever extends it.
///
/// Release rules, with `hc` the best competing public height, `p` our
/// published height and `lead = h_priv - hc`:
/// adopt when `hc > h_priv`; release everything when a competitor at or
/// above `p` leaves `lead` at 0 or 1; match the competitor otherwise.
pub struct SelfishMiningBribing {
    z: f64,
    tip: Option<BlockId>,
    unpublished: Vec<BlockId>,
}

impl SelfishMiningBribing {
    pub fn new(z: f64) -> Self {
        Self {
            z,
            tip: None,
            unpublished: Vec::new(),
        }
    }
}

impl Strategy for SelfishMiningBribing {
    fn kind(&self) -> StrategyKind {
        StrategyKind::SelfishMiningBribing { z: self.z }
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) -> Plan {
        let mut plan = Plan::default();
        let public = ctx.public;
        let tip = *self.tip.get_or_insert_with(|| public.best_tip());
        let ha = ctx.full.height(&tip);
        let p = ha - self.unpublished.len() as u64;
        // Only tips at or above our published height can compete.
        let hc = public
            .tips_from(p)
            .filter(|t| !ctx.full.is_ancestor(**t, tip))
            .map(|t| public.height(t))
            .max();

        match hc {
            Some(hc) if hc > ha => {
                self.tip = Some(compliant_tip(public, &ctx.board.excluded));
                self.unpublished.clear();
            }
            Some(hc) if hc >= p && ha - hc <= 1 => {
                plan.publish = std::mem::take(&mut self.unpublished);
            }
            Some(hc) if hc > p => {
                let keep = self.unpublished.split_off((hc - p) as usize);
                plan.publish = std::mem::replace(&mut self.unpublished, keep);
            }
            _ => {}
        }

        plan.directives.push(Directive {
            parent: self.tip.expect("set above"),
            miners: ctx.miners.to_vec(),
            stamp: super::Stamp::Truthful,
            bribe_fraction: self.z,
            extra_txs: Vec::new(),
            private: true,
        });
        plan
    }

    fn on_mined(&mut self, blocks: &[BlockId], ctx: &mut Ctx<'_>) {
        let Some(tip) = self.tip else { return };
        if let Some(b) = blocks.iter().find(|b| ctx.full.block(b).parent == tip) {
            self.tip = Some(*b);
            self.unpublished.push(*b);
        }
    }
}
