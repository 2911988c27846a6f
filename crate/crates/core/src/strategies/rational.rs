use super::honest::{honest_directives, participates};
use super::{compliant_tip, tied_tips, Ctx, Directive, ForkNotice, Plan, Strategy, StrategyKind};
use crate::analytics::{m_min, qf_deviation_payoff, qf_deviation_payoff_pcmod, QfPayoffInput};
use crate::chain::{block_reward_at, BlockId};
use crate::mining::{RpDecision, SimConfig};
use crate::pragthos::{k_th_compute, poi_inclusion_probability};

/// Joins a public fork only when the closed-form payoff favours it and the
/// fork can still finish before the observer would call it an attack.
/// In ties it prefers tips that pay a bribe.
pub struct RationalConditional {
    decided: Option<(u64, bool)>,
    p_poi: Option<f64>,
}

impl RationalConditional {
    pub fn new(config: &SimConfig) -> Self {
        let p_poi = config.pragthos.pc_mod.then(|| {
            k_th_compute(
                config.population.beta_hon,
                config.externality.rho,
                config.pragthos.mu,
            )
            .map(|k| poi_inclusion_probability(config.population.beta_hon, k.floor as f64).exact)
            .unwrap_or(0.0)
        });
        Self {
            decided: None,
            p_poi,
        }
    }

    fn decide(&self, ctx: &Ctx<'_>, f: &ForkNotice) -> RpDecision {
        let cfg = ctx.config;
        let pop = &cfg.population;
        let rho = cfg.externality.rho;
        let max_lead = f.max_lead.max(f.lead(ctx.public).max(0) as u64);
        let guard = f.k < rho && max_lead < (rho as u64) && !ctx.signal.security_flagged();
        let h = ctx.public.height(&f.honest_tip) + 1;
        let input = QfPayoffInput {
            n: pop.n as u64,
            beta_hon: pop.beta_hon,
            beta_rat: pop.beta_rat,
            beta_adv: pop.beta_adv,
            beta_par: pop.beta_rat,
            r_block: block_reward_at(&cfg.rewards, h).unwrap_or(0.0),
            chi1: cfg.mining_cost_per_block,
            vartheta: cfg.rewards.next_phase_ratio(h).unwrap_or(1.0),
            k: f.k,
            m: m_min(f.k, pop.beta_hon),
        };
        let payoff = match self.p_poi {
            Some(p) => qf_deviation_payoff_pcmod(&input, p, cfg.externality.e_security),
            None => qf_deviation_payoff(&input),
        };
        let (v_deviate, v_follow) = payoff.unwrap_or((f64::NAN, f64::NAN));
        RpDecision {
            round: ctx.round,
            k: f.k,
            rho,
            max_lead_seen: max_lead,
            v_deviate,
            v_follow,
            guard_passed: guard,
            // NaN compares false, so analytics errors mean staying out.
            joined: guard && v_deviate > v_follow,
        }
    }

    /// Among tied tips, the one carrying the largest bribe.
    fn bribe_tip(ctx: &Ctx<'_>) -> Option<BlockId> {
        let tips = tied_tips(ctx.public, &ctx.board.excluded);
        if tips.len() < 2 {
            return None;
        }
        let mut best: Option<(f64, BlockId)> = None;
        for t in tips {
            let b = ctx.public.block(&t).bribe_total();
            if b > 0.0 && best.is_none_or(|(x, _)| b > x) {
                best = Some((b, t));
            }
        }
        best.map(|(_, t)| t)
    }
}

impl Strategy for RationalConditional {
    fn kind(&self) -> StrategyKind {
        StrategyKind::RationalConditional
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) -> Plan {
        let mut plan = Plan::default();
        if let Some(f) = ctx.board.fork.filter(|f| f.active) {
            if self.decided.is_none_or(|(r, _)| r != f.started) {
                let d = self.decide(ctx, &f);
                self.decided = Some((f.started, d.joined));
                ctx.board.rp_decisions.push(d);
            }
            if self.decided == Some((f.started, true)) {
                plan.directives
                    .push(Directive::public(f.fork_tip, ctx.miners.to_vec()));
                return plan;
            }
        }
        if let Some(t) = Self::bribe_tip(ctx) {
            plan.directives
                .push(Directive::public(t, ctx.miners.to_vec()));
            return plan;
        }
        let tip = compliant_tip(ctx.public, &ctx.board.excluded);
        if participates(ctx, &tip) {
            plan.directives = honest_directives(ctx, ctx.miners.to_vec(), false);
        }
        plan
    }
}
