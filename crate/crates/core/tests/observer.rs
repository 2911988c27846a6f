use powsec::chain::{
    Block, BlockId, ChainTree, EpochParams, MinerId, RewardSchedule, Transaction, TxId,
};
use powsec::mining::{
    observer_update, Evidence, ExternalObserver, ExternalityConfig, ExternalitySignal, FlagKind,
};

fn id(n: u32) -> BlockId {
    let mut b = [0u8; 32];
    b[..4].copy_from_slice(&n.to_le_bytes());
    b[31] = 1;
    BlockId(b)
}

struct World {
    tree: ChainTree,
    obs: ExternalObserver,
    sig: ExternalitySignal,
    next: u32,
    miner_offset: u32,
}

impl World {
    fn new(rho: u32, miner_offset: u32) -> Self {
        let cfg = ExternalityConfig {
            rho,
            ..ExternalityConfig::default()
        };
        let epoch = EpochParams {
            lambda: 1_000_000,
            tau_min: 0.25,
            tau_max: 4.0,
            target_block_interval: 10.0,
        };
        Self {
            tree: ChainTree::new(epoch, 1.0),
            obs: ExternalObserver::new(&cfg, RewardSchedule::constant(50.0)),
            sig: ExternalitySignal::new(&cfg),
            next: 1,
            miner_offset,
        }
    }

    /// Publishes a child of `parent` in `round` and runs the observer.
    fn publish(&mut self, parent: BlockId, round: u64, txs: Vec<Transaction>) -> BlockId {
        let b = Block {
            id: id(self.next),
            parent,
            height: self.tree.height(&parent) + 1,
            miner: MinerId(self.next + self.miner_offset),
            declared_timestamp: round,
            actual_round: round,
            difficulty_target: 1.0,
            txs,
            nonce: 0,
        };
        self.next += 1;
        let bid = b.id;
        self.tree.append_block(b).unwrap();
        let ev = [Evidence::BlockPublished { id: bid, round }];
        observer_update(&mut self.obs, &self.tree, &mut self.sig, &ev, round);
        bid
    }

    fn chain(&mut self, mut parent: BlockId, rounds: std::ops::Range<u64>) -> BlockId {
        for r in rounds {
            parent = self.publish(parent, r, vec![]);
        }
        parent
    }
}

#[test]
fn honest_run_keeps_theta_at_one() {
    let mut w = World::new(3, 0);
    let mut tip = BlockId::GENESIS;
    for r in 1..50 {
        tip = w.publish(tip, r, vec![]);
        assert_eq!(w.sig.theta, 1.0);
    }
    assert!(w.sig.flagged_events.is_empty());
}

/// A fork published all at once after the honest branch led by `lead`.
fn late_fork(rho: u32, lead: u64, offset: u32) -> ExternalitySignal {
    let mut w = World::new(rho, offset);
    let base = w.chain(BlockId::GENESIS, 1..4);
    w.chain(base, 4..4 + lead);
    // The private branch appears in one round, one block longer.
    let r = 4 + lead;
    let mut tip = base;
    for _ in 0..=lead {
        tip = w.publish(tip, r, vec![]);
    }
    // Keep going for a while to show persistence.
    w.chain(tip, r + 1..r + 10);
    w.sig
}

#[test]
fn overtaking_after_trailing_by_rho_is_a_security_attack() {
    let sig = late_fork(3, 3, 0);
    assert_eq!(sig.theta, sig.e_security);
    assert_eq!(sig.flagged_events.len(), 1);
    assert_eq!(sig.flagged_events[0].kind, FlagKind::Security);
}

#[test]
fn short_forks_are_tolerated() {
    let sig = late_fork(3, 2, 0);
    assert_eq!(sig.theta, 1.0);
    assert!(sig.flagged_events.is_empty());
}

#[test]
fn miner_labels_do_not_matter() {
    for lead in 1..5 {
        assert_eq!(late_fork(3, lead, 0), late_fork(3, lead, 1000));
    }
}

#[test]
fn whale_bribe_is_a_fairness_event() {
    let mut w = World::new(6, 0);
    let tip = w.chain(BlockId::GENESIS, 1..5);
    // Threshold: 10 x 50.
    let small = Transaction::bribe(TxId([7; 32]), 499.0).unwrap();
    let tip = w.publish(tip, 5, vec![small]);
    assert_eq!(w.sig.theta, 1.0);
    let big = Transaction::bribe(TxId([8; 32]), 500.0).unwrap();
    w.publish(tip, 6, vec![big]);
    assert_eq!(w.sig.theta, w.sig.e_fairness);
    assert_eq!(w.sig.flagged_events[0].kind, FlagKind::Fairness);
}

#[test]
fn revealed_proof_sets_security() {
    let mut w = World::new(6, 0);
    let tip = w.chain(BlockId::GENESIS, 1..5);
    let ev = [Evidence::PoiRevealed {
        round: 5,
        accused_root: tip,
    }];
    observer_update(&mut w.obs, &w.tree, &mut w.sig, &ev, 5);
    assert_eq!(w.sig.theta, w.sig.e_security);
    w.chain(tip, 6..20);
    assert_eq!(w.sig.theta, w.sig.e_security);
}
