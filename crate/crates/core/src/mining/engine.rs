use std::collections::HashSet;
use std::fs::File;
use std::io::BufWriter;

use log::{debug, info};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::observer::ExternalObserver;
use super::result::theta_at;
use super::{
    attempt_mine, AttackOutcome, Evidence, ExternalitySignal, FilterStats, NetworkModel,
    ScenarioResult, SimConfig, SimError, TimestampRule,
};
use crate::chain::{
    block_reward_at, Block, BlockId, ChainTree, MinerId, Transaction, TxId, TxKind,
};
use crate::hash::KeyedHash;
use crate::party::{Party, PerParty};
use crate::pragthos::{c1_filter, miner_dest};
use crate::strategies::{
    self, compliant_tip, txwithhold_filter, Board, Ctx, Directive, Stamp, Strategy, StrategyKind,
    TxPolicy,
};

/// A transaction everyone can include, with the blocks that already did.
struct PoolTx {
    tx: Transaction,
    holders: Vec<BlockId>,
}

impl PoolTx {
    fn new(tx: Transaction) -> Self {
        Self {
            tx,
            holders: Vec::new(),
        }
    }

    fn on_chain(&self, full: &ChainTree, parent: BlockId) -> bool {
        self.holders.iter().any(|h| full.is_ancestor(*h, parent))
    }
}

/// One seeded run. Drive it with [`Simulation::step`] or [`Simulation::run`].
pub struct Simulation {
    config: SimConfig,
    round: u64,
    rng: ChaCha8Rng,
    tx_rng: ChaCha8Rng,
    hasher: KeyedHash,
    full: ChainTree,
    public: ChainTree,
    network: NetworkModel,
    signal: ExternalitySignal,
    observer: ExternalObserver,
    board: Board,
    strategies: PerParty<Box<dyn Strategy>>,
    miners: PerParty<Vec<MinerId>>,
    owner: Vec<Party>,
    /// Workload and broadcast transactions anyone may include.
    pool: Vec<PoolTx>,
    /// Workload transactions only the recipient party knows about.
    withheld: Vec<PoolTx>,
    workload_ids: HashSet<TxId>,
    theta_trace: Vec<(u64, f64)>,
    cost: PerParty<f64>,
    outcome: AttackOutcome,
    outcome_round: Option<u64>,
    filter: FilterStats,
    nonce: u64,
    notes: Vec<String>,
    finished: bool,
}

macro_rules! ctx {
    ($s:ident, $party:expr) => {
        Ctx {
            round: $s.round,
            party: $party,
            miners: &$s.miners[$party],
            public: &$s.public,
            full: &$s.full,
            signal: &$s.signal,
            config: &$s.config,
            board: &mut $s.board,
            rng: &mut $s.rng,
            hasher: &$s.hasher,
        }
    };
}

const ACT_ORDER: [Party; 3] = [Party::Adversary, Party::Rational, Party::Honest];

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let epoch = config.effective_epoch();
        let full = ChainTree::new(epoch, config.initial_difficulty);
        let public = full.clone();
        let owner = config.population.assignment();
        let mut miners: PerParty<Vec<MinerId>> = PerParty::default();
        for (i, p) in owner.iter().enumerate() {
            miners[*p].push(MinerId(i as u32));
        }
        let strategies = PerParty {
            honest: strategies::build(&StrategyKind::Honest, Party::Honest, &config),
            rational: strategies::build(&config.strategies.rational, Party::Rational, &config),
            adversary: strategies::build(&config.strategies.adversary, Party::Adversary, &config),
        };
        let rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let mut tx_rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        tx_rng.set_stream(1);
        let mut notes = Vec::new();
        let residue = config.population.rounding_residue();
        if residue > 0.0 {
            notes.push(format!("miner rounding residue {residue:.3e}"));
        }
        Ok(Self {
            round: 0,
            rng,
            tx_rng,
            hasher: KeyedHash::new(config.rng_seed),
            full,
            public,
            network: NetworkModel::new(config.network),
            signal: ExternalitySignal::new(&config.externality),
            observer: ExternalObserver::new(&config.externality, config.rewards.clone()),
            board: Board::default(),
            strategies,
            miners,
            owner,
            pool: Vec::new(),
            withheld: Vec::new(),
            workload_ids: HashSet::new(),
            theta_trace: Vec::new(),
            cost: PerParty::default(),
            outcome: AttackOutcome::NotAttempted,
            outcome_round: None,
            filter: FilterStats::default(),
            nonce: 0,
            notes,
            finished: false,
            config,
        })
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn public(&self) -> &ChainTree {
        &self.public
    }

    /// Every block ever mined, private ones included.
    pub fn full(&self) -> &ChainTree {
        &self.full
    }

    pub fn signal(&self) -> &ExternalitySignal {
        &self.signal
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn party_of(&self, miner: MinerId) -> Option<Party> {
        self.owner.get(miner.0 as usize).copied()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Runs to completion and settles payoffs.
    pub fn run(mut self) -> Result<ScenarioResult, SimError> {
        while self.step()? {}
        self.finish()
    }

    /// Plays one round. Returns false once the run is over.
    pub fn step(&mut self) -> Result<bool, SimError> {
        if self.finished || self.round >= self.config.max_rounds {
            self.finished = true;
            return Ok(false);
        }
        let round = self.round;
        let mut evidence = Vec::new();

        for b in self.network.due(round) {
            self.publish(b, &mut evidence)?;
        }
        self.release_transactions();

        for party in [Party::Honest, Party::Rational, Party::Adversary] {
            let ev = self.strategies[party].reveal(&mut ctx!(self, party));
            evidence.extend(ev);
        }

        let mut directives: Vec<(Party, Directive)> = Vec::new();
        for party in ACT_ORDER {
            let plan = self.strategies[party].act(&mut ctx!(self, party));
            for id in plan.publish {
                if !self.public.contains(&id) {
                    let b = self
                        .full
                        .get(&id)
                        .cloned()
                        .ok_or_else(|| SimError::Strategy {
                            round,
                            message: format!("{party:?} asked to publish unknown block {id}"),
                        })?;
                    self.publish(b, &mut evidence)?;
                }
            }
            self.pool
                .extend(plan.broadcast_txs.into_iter().map(PoolTx::new));
            if let (Some(o), None) = (plan.outcome, self.outcome_round) {
                self.outcome = o;
                self.outcome_round = Some(round);
                debug!("round {round}: attack outcome {o:?}");
            }
            directives.extend(plan.directives.into_iter().map(|d| (party, d)));
        }

        let stop = self.outcome_round.is_some() && self.config.stop_on_outcome;
        if !stop {
            let mut mined: PerParty<Vec<BlockId>> = PerParty::default();
            for (party, d) in &directives {
                let ids = self.mine(*party, d, &mut evidence)?;
                mined[*party].extend(ids);
            }
            for party in ACT_ORDER {
                if !mined[party].is_empty() {
                    let ids = std::mem::take(&mut mined[party]);
                    self.strategies[party].on_mined(&ids, &mut ctx!(self, party));
                }
            }
        }

        let before = self.signal.theta;
        self.observer
            .update(&self.public, &mut self.signal, &evidence, round);
        if self.signal.theta != before {
            self.theta_trace.push((round, self.signal.theta));
        }

        self.round += 1;
        let height_reached = self
            .config
            .stop_at_height
            .is_some_and(|h| self.public.height(&self.public.best_tip()) >= h);
        if stop || height_reached || self.round >= self.config.max_rounds {
            self.finished = true;
        }
        Ok(!self.finished)
    }

    fn publish(&mut self, block: Block, evidence: &mut Vec<Evidence>) -> Result<(), SimError> {
        let round = self.round;
        if self.config.timestamp_rule == TimestampRule::NotAfterBroadcast
            && block.declared_timestamp > round
        {
            self.notes.push(format!(
                "round {round}: rejected {} stamped {}",
                block.id, block.declared_timestamp
            ));
            return Ok(());
        }
        if !self.public.contains(&block.parent) {
            self.notes.push(format!(
                "round {round}: dropped {} with unknown parent",
                block.id
            ));
            return Ok(());
        }
        let id = block.id;
        self.public
            .append_block(block)
            .map_err(|source| SimError::Chain { round, source })?;
        evidence.push(Evidence::BlockPublished { id, round });
        Ok(())
    }

    fn release_transactions(&mut self) {
        let Some(w) = self.config.transactions else {
            return;
        };
        if self.round == 0 {
            let policy = match w.recipient {
                Party::Honest => StrategyKind::Honest,
                Party::Rational => self.config.strategies.rational.clone(),
                Party::Adversary => self.config.strategies.adversary.clone(),
            };
            for i in 0..w.count {
                let id = TxId(self.hasher.hash(&[b"workload", &i.to_be_bytes()]));
                let tx = Transaction::normal(id, w.fee, i.to_be_bytes().to_vec())
                    .expect("fee validated");
                self.workload_ids.insert(id);
                match txwithhold_filter(&tx, &policy) {
                    TxPolicy::Gossip => self.pool.push(PoolTx::new(tx)),
                    TxPolicy::Withhold => self.withheld.push(PoolTx::new(tx)),
                }
            }
            return;
        }
        // Senders of withheld transactions eventually resend them to everyone.
        let mut i = 0;
        while i < self.withheld.len() {
            if self.tx_rng.random::<f64>() < w.resend_prob {
                let t = self.withheld.remove(i);
                self.pool.push(t);
            } else {
                i += 1;
            }
        }
    }

    fn mine(
        &mut self,
        party: Party,
        d: &Directive,
        evidence: &mut Vec<Evidence>,
    ) -> Result<Vec<BlockId>, SimError> {
        let round = self.round;
        if d.miners.is_empty() {
            return Ok(Vec::new());
        }
        let parent = self.full.get(&d.parent).ok_or_else(|| SimError::Strategy {
            round,
            message: format!("{party:?} mines on unknown block {}", d.parent),
        })?;
        let (parent_height, parent_ts) = (parent.height, parent.declared_timestamp);
        let q = self.config.population.q as u64;
        let queries = d.miners.len() as u64 * q;
        self.cost[party] += queries as f64 * self.config.cost_per_query;
        let difficulty = self.full.difficulty_for_child(&d.parent);
        let wins = attempt_mine(&mut self.rng, difficulty, queries, self.config.base_rate)?;
        if wins == 0 {
            return Ok(Vec::new());
        }
        let slots = sample(&mut self.rng, queries as usize, wins as usize).into_vec();
        let mut out = Vec::with_capacity(slots.len());
        for slot in slots {
            let miner = d.miners[slot / q as usize];
            let height = parent_height + 1;
            let declared = match d.stamp {
                Stamp::Truthful => round.max(parent_ts),
                Stamp::Declared(t) => t,
            };
            self.nonce += 1;
            let nonce = self.nonce;
            let id = BlockId(self.hasher.hash(&[
                &d.parent.0,
                &height.to_be_bytes(),
                &miner.0.to_be_bytes(),
                &round.to_be_bytes(),
                &nonce.to_be_bytes(),
                &declared.to_be_bytes(),
            ]));
            let txs = self.assemble(party, miner, d, height, nonce);
            let block = Block {
                id,
                parent: d.parent,
                height,
                miner,
                declared_timestamp: declared,
                actual_round: round,
                difficulty_target: difficulty,
                txs,
                nonce,
            };
            for p in self.pool.iter_mut().chain(self.withheld.iter_mut()) {
                if block.txs.iter().any(|t| t.id == p.tx.id) {
                    p.holders.push(id);
                }
            }
            self.full
                .append_block(block.clone())
                .map_err(|source| SimError::Chain { round, source })?;
            if !d.private {
                if party == Party::Adversary {
                    self.publish(block, evidence)?;
                } else {
                    self.network.broadcast(round, block);
                }
            }
            out.push(id);
        }
        Ok(out)
    }

    /// Body of a block mined by `miner` on `d.parent`.
    fn assemble(
        &mut self,
        party: Party,
        miner: MinerId,
        d: &Directive,
        height: u64,
        nonce: u64,
    ) -> Vec<Transaction> {
        let mut txs = d.extra_txs.clone();
        if d.bribe_fraction > 0.0 {
            let amount =
                d.bribe_fraction * block_reward_at(&self.config.rewards, height).unwrap_or(0.0);
            let id = TxId(self.hasher.hash(&[b"bribe", &nonce.to_be_bytes()]));
            if let Ok(tx) = Transaction::bribe(id, amount) {
                txs.push(tx);
            }
        }
        let recipient = self.config.transactions.map(|w| w.recipient);
        let filter_on = self.config.pragthos.tx_inclusion;
        let l = self.config.pragthos.l;
        let dest = filter_on.then(|| miner_dest(&self.hasher, miner));
        let own = if recipient == Some(party) {
            &self.withheld[..]
        } else {
            &[]
        };
        for p in self.pool.iter().chain(own.iter()) {
            if txs.iter().any(|t| t.id == p.tx.id) || p.on_chain(&self.full, d.parent) {
                continue;
            }
            if let (Some(dest), TxKind::Normal) = (&dest, &p.tx.kind) {
                self.filter.evaluations += 1;
                if !c1_filter(&self.hasher, &p.tx, dest, &d.parent, l) {
                    continue;
                }
                self.filter.passes += 1;
            }
            txs.push(p.tx.clone());
        }
        txs
    }

    /// Settles payoffs on the final chain.
    pub fn finish(mut self) -> Result<ScenarioResult, SimError> {
        // Anything still in flight lands before settlement.
        let mut evidence = Vec::new();
        for r in self.round..self.round + self.network.delay() + 1 {
            for b in self.network.due(r) {
                self.publish(b, &mut evidence)?;
            }
        }

        let tip = compliant_tip(&self.public, &self.board.excluded);
        let chain = self.public.path_to(tip);
        let on_chain: HashSet<BlockId> = chain.iter().copied().collect();
        let trace = &self.theta_trace;

        let mut coin = PerParty::<f64>::default();
        let mut fees = PerParty::<f64>::default();
        let mut fiat = PerParty::<f64>::default();
        let mut blocks = PerParty::<u64>::default();
        let mut included: HashSet<TxId> = HashSet::new();
        for (i, id) in chain.iter().enumerate().skip(1) {
            let b = self.public.block(id);
            let party = self.owner[b.miner.0 as usize];
            let theta = theta_at(trace, b.actual_round);
            let reward = block_reward_at(&self.config.rewards, b.height).map_err(|source| {
                SimError::Chain {
                    round: b.actual_round,
                    source,
                }
            })?;
            let fee = b.fee_total();
            blocks[party] += 1;
            coin[party] += reward + fee;
            fees[party] += fee;
            fiat[party] += theta * (reward + fee);
            included.extend(b.txs.iter().map(|t| t.id));
            let bribe = b.bribe_total();
            if bribe > 0.0 {
                if let Some(child) = chain.get(i + 1) {
                    let taker = self.owner[self.public.block(child).miner.0 as usize];
                    coin[party] -= bribe;
                    coin[taker] += bribe;
                    fiat[party] -= theta * bribe;
                    fiat[taker] += theta * bribe;
                }
            }
        }

        let mut orphans = PerParty::<u64>::default();
        for b in self.full.blocks() {
            if !b.is_genesis() && !on_chain.contains(&b.id) {
                orphans[self.owner[b.miner.0 as usize]] += 1;
            }
        }

        let theta_final = self.signal.theta;
        let mut pending = 0.0;
        if let Some(w) = self.config.transactions {
            let left = self
                .workload_ids
                .iter()
                .filter(|id| !included.contains(id))
                .count();
            pending = left as f64 * w.fee;
            // Unconfirmed fees still have value: a party expects its hash
            // share of them.
            fiat.rational += theta_final * self.config.population.beta_rat * pending;
        }
        for p in Party::ALL {
            fiat[p] -= self.cost[p];
        }

        let goldfinger_value = match self.config.strategies.overlay {
            Some(StrategyKind::GoldfingerOverlay { c1, theta_init }) => Some(
                strategies::goldfinger_value(theta_init, theta_final, c1, coin.adversary),
            ),
            _ => None,
        };
        let outcome = match self.outcome_round {
            Some(_) => self.outcome,
            None => self.strategies.adversary.outcome(),
        };

        let chain_export = match &self.config.export_chain {
            Some(path) => {
                let f = File::create(path)
                    .map_err(|e| SimError::Export(format!("{}: {e}", path.display())))?;
                self.full
                    .export_jsonl(BufWriter::new(f))
                    .map_err(|e| SimError::Export(format!("{}: {e}", path.display())))?;
                Some(path.clone())
            }
            None => None,
        };

        info!(
            "seed {} finished after {} rounds at height {}, outcome {:?}",
            self.config.rng_seed,
            self.round,
            self.public.height(&tip),
            outcome
        );
        let mut notes = std::mem::take(&mut self.notes);
        notes.append(&mut self.board.notes);
        Ok(ScenarioResult {
            seed: self.config.rng_seed,
            rounds: self.round,
            per_party_payoff: fiat,
            per_party_coin: coin,
            per_party_cost: self.cost,
            per_party_fees: fees,
            blocks_by_party: blocks,
            orphans_by_party: orphans,
            final_height: self.public.height(&tip),
            theta_trace: self.theta_trace,
            theta_final,
            flagged_events: self.signal.flagged_events.clone(),
            attack_outcome: outcome,
            outcome_round: self.outcome_round,
            rp_decisions: std::mem::take(&mut self.board.rp_decisions),
            goldfinger_value,
            pending_fees: pending,
            filter: self.filter,
            poi: self.board.poi,
            taus_applied: self
                .full
                .retargets()
                .iter()
                .map(|r| r.tau_applied)
                .collect(),
            miner_counts: self.config.population.counts(),
            rounding_residue: self.config.population.rounding_residue(),
            notes,
            chain_export,
        })
    }
}

/// Runs `config` to completion.
pub fn run(config: &SimConfig) -> Result<ScenarioResult, SimError> {
    Simulation::new(config.clone())?.run()
}
