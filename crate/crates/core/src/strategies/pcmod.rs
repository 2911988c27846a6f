use std::collections::HashSet;

use super::{Ctx, Directive, Plan};
use crate::chain::{BlockId, MinerId, Transaction, TxId};
use crate::mining::{Evidence, SimConfig};
use crate::pragthos::{
    k_th_compute, make_poi, verify_poi_reveal, PoICommit, PoIReveal, PoiLocation, PoiVerdict,
};

struct Commit {
    commit: PoICommit,
    secret: [u8; 32],
    referenced: BlockId,
    ref_height: u64,
    tx: Transaction,
    tx_id: TxId,
    /// Lowest block on the current fork chain carrying the commitment.
    holder: Option<BlockId>,
    counted: bool,
    revealed: bool,
}

/// Honest-side proof-of-invalidity defence against public forks.
///
/// While the fork trails by more than `k_th`, part of the honest power mines
/// one block on the fork carrying a commitment to the honest tip. If the fork
/// later catches up, the commitment is opened and the fork is excluded.
pub(crate) struct PcModAgent {
    k_th: Option<u64>,
    diversion: f64,
    commits: Vec<Commit>,
    own: HashSet<BlockId>,
    fork_started: Option<u64>,
}

impl PcModAgent {
    pub fn new(config: &SimConfig) -> Self {
        let k_th = k_th_compute(
            config.population.beta_hon,
            config.externality.rho,
            config.pragthos.mu,
        )
        .ok()
        .map(|k| k.floor);
        Self {
            k_th,
            diversion: config.pragthos.diversion,
            commits: Vec::new(),
            own: HashSet::new(),
            fork_started: None,
        }
    }

    pub fn record_own(&mut self, blocks: &[BlockId]) {
        self.own.extend(blocks.iter().copied());
    }

    fn sync(&mut self, ctx: &mut Ctx<'_>) -> bool {
        let Some(mut f) = ctx.board.fork.filter(|f| f.active) else {
            return false;
        };
        f.refresh(ctx.public, &ctx.board.excluded);
        ctx.board.fork = Some(f);
        if self.fork_started != Some(f.started) {
            self.commits.clear();
            self.fork_started = Some(f.started);
        }
        let tree = ctx.public;
        let base = tree.height(&f.fork_point);
        for c in &mut self.commits {
            c.holder = None;
        }
        let mut cur = f.fork_tip;
        while tree.height(&cur) > base {
            let b = tree.block(&cur);
            for c in &mut self.commits {
                if b.txs.iter().any(|t| t.id == c.tx_id) {
                    c.holder = Some(cur);
                }
            }
            cur = b.parent;
        }
        for c in &mut self.commits {
            if let (Some(h), false) = (c.holder, c.counted) {
                c.counted = true;
                if self.own.contains(&h) {
                    ctx.board.poi.placed_by_mining += 1;
                } else {
                    ctx.board.poi.placed_by_broadcast += 1;
                }
            }
        }
        true
    }

    pub fn plan(&mut self, ctx: &mut Ctx<'_>, miners: &mut Vec<MinerId>, plan: &mut Plan) {
        let Some(k_th) = self.k_th else { return };
        if miners.is_empty() || !self.sync(ctx) {
            return;
        }
        let f = ctx.board.fork.expect("synced");
        let tree = ctx.public;
        let ca = tree.height(&f.fork_tip);
        let a_par = tree.height(&f.honest_tip);

        let placed = self
            .commits
            .iter()
            .filter_map(|c| c.holder)
            .map(|h| tree.height(&h))
            .min();
        let extra = match placed {
            // Buried under one more block: done.
            Some(h) if ca > h => return,
            // Sitting at the fork tip: keep the fork moving without another copy.
            Some(_) => Vec::new(),
            None => {
                let need = ca + 1 + k_th;
                if need > a_par {
                    return;
                }
                let tx = match self.commits.iter().find(|c| c.ref_height >= need) {
                    Some(c) => c.tx.clone(),
                    None => {
                        let (commit, secret) =
                            make_poi(ctx.rng, ctx.hasher, f.honest_tip, a_par, miners[0]);
                        let tx = commit.to_transaction(ctx.hasher);
                        ctx.board.poi.commits_made += 1;
                        plan.broadcast_txs.push(tx.clone());
                        self.commits.push(Commit {
                            commit,
                            secret,
                            referenced: f.honest_tip,
                            ref_height: a_par,
                            tx_id: tx.id,
                            tx: tx.clone(),
                            holder: None,
                            counted: false,
                            revealed: false,
                        });
                        tx
                    }
                };
                vec![tx]
            }
        };
        let n_div = ((self.diversion * miners.len() as f64).ceil() as usize).min(miners.len());
        if n_div == 0 {
            return;
        }
        let diverted = miners.split_off(miners.len() - n_div);
        let mut d = Directive::public(f.fork_tip, diverted);
        d.extra_txs = extra;
        plan.directives.push(d);
    }

    pub fn reveal(&mut self, ctx: &mut Ctx<'_>) -> Vec<Evidence> {
        let Some(k_th) = self.k_th else {
            return Vec::new();
        };
        if !self.sync(ctx) {
            return Vec::new();
        }
        let f = ctx.board.fork.expect("synced");
        let tree = ctx.public;
        if tree.height(&f.fork_tip) < tree.height(&f.honest_tip) {
            return Vec::new();
        }
        for c in self.commits.iter_mut().filter(|c| !c.revealed) {
            let Some(holder) = c.holder else { continue };
            c.revealed = true;
            let reveal = PoIReveal {
                m_secret: c.secret,
                referenced_block: c.referenced,
                poi_tx_location: PoiLocation {
                    chain_tip: f.fork_tip,
                    height: tree.height(&holder),
                },
            };
            match verify_poi_reveal(ctx.hasher, &c.commit, &reveal, tree, k_th) {
                Ok(PoiVerdict::ValidInvalidation) => {
                    ctx.board.poi.reveals_valid += 1;
                    let root = f
                        .root(tree)
                        .expect("a fork holding a commitment is non-empty");
                    ctx.board.excluded.push(root);
                    if let Some(n) = ctx.board.fork.as_mut() {
                        n.active = false;
                    }
                    return vec![Evidence::PoiRevealed {
                        round: ctx.round,
                        accused_root: root,
                    }];
                }
                _ => ctx.board.poi.reveals_invalid += 1,
            }
        }
        Vec::new()
    }
}
