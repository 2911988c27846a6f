//! Chain-core invariants shared by the proptest target and the acceptance run.

#![allow(dead_code)]

use powsec::chain::{
    block_reward_at, is_inflationary, recalc_difficulty, Block, BlockId, ChainError, ChainTree,
    EpochParams, MinerId, RewardFamily, RewardSchedule,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn block_id(n: u32) -> BlockId {
    let mut b = [0u8; 32];
    b[..4].copy_from_slice(&n.to_le_bytes());
    b[31] = 0xab;
    BlockId(b)
}

/// Each step picks a parent among the blocks so far and a timestamp step.
pub fn tree_steps() -> impl Strategy<Value = (u64, Vec<(prop::sample::Index, u64)>)> {
    (
        1u64..6,
        prop::collection::vec((any::<prop::sample::Index>(), 0u64..60), 1..40),
    )
}

pub fn tree_invariants(
    lambda: u64,
    steps: &[(prop::sample::Index, u64)],
) -> Result<(), TestCaseError> {
    let epoch = EpochParams {
        lambda,
        tau_min: 0.25,
        tau_max: 4.0,
        target_block_interval: 10.0,
    };
    let mut tree = ChainTree::new(epoch, 1.0);
    let mut ids = vec![tree.genesis()];
    for (i, (pick, dt)) in steps.iter().enumerate() {
        let parent = ids[pick.index(ids.len())];
        let p = tree.block(&parent).clone();
        let n = i as u32 + 1;
        let difficulty = tree.difficulty_for_child(&parent);
        let mk = |height| Block {
            id: block_id(n),
            parent,
            height,
            miner: MinerId(n % 7),
            declared_timestamp: p.declared_timestamp + dt,
            actual_round: p.actual_round + dt,
            difficulty_target: difficulty,
            txs: vec![],
            nonce: 0,
        };
        // A wrong height or a missing parent never gets in.
        let wrong = mk(p.height + 2);
        let e = tree.append_block(wrong);
        prop_assert!(
            matches!(e, Err(ChainError::HeightMismatch { .. })),
            "{:?}",
            e
        );
        let mut orphan = mk(p.height + 1);
        orphan.parent = block_id(u32::MAX);
        let e = tree.append_block(orphan);
        prop_assert!(
            matches!(e, Err(ChainError::UnknownParent { .. })),
            "{:?}",
            e
        );

        tree.append_block(mk(p.height + 1))
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        ids.push(block_id(n));
    }
    prop_assert_eq!(tree.len(), ids.len());
    let mut max_h = 0;
    for b in tree.blocks() {
        if b.is_genesis() {
            continue;
        }
        prop_assert!(tree.contains(&b.parent));
        prop_assert_eq!(b.height, tree.height(&b.parent) + 1);
        max_h = max_h.max(b.height);
    }
    let best = tree.best_tip();
    prop_assert_eq!(tree.height(&best), max_h);
    let path = tree.path_to(best);
    prop_assert_eq!(path.len() as u64, max_h + 1);
    for w in path.windows(2) {
        prop_assert_eq!(tree.block(&w[1]).parent, w[0]);
    }
    for r in tree.retargets() {
        prop_assert!(r.tau_applied >= 0.25 && r.tau_applied <= 4.0);
        prop_assert_eq!(r.height % lambda, 0);
    }
    Ok(())
}

pub fn clamp_invariant(
    lambda: u64,
    steps: &[u64],
    tau_min: f64,
    tau_max: f64,
    old: f64,
) -> Result<(), TestCaseError> {
    let params = EpochParams {
        lambda,
        tau_min,
        tau_max,
        target_block_interval: 10.0,
    };
    let mut ts = 1_000;
    let blocks: Vec<Block> = (0..lambda)
        .map(|i| {
            ts += steps[i as usize % steps.len()];
            let mut b = Block::genesis();
            b.id = block_id(i as u32 + 1);
            b.height = i + 1;
            b.declared_timestamp = ts;
            b
        })
        .collect();
    let r = recalc_difficulty(1_000, &blocks, &params, old)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(r.tau_applied >= tau_min && r.tau_applied <= tau_max);
    prop_assert_eq!(r.new_difficulty, old * r.tau_applied);
    prop_assert_eq!(r.declared_duration, ts - 1_000);
    if r.tau_raw >= tau_min && r.tau_raw <= tau_max {
        prop_assert_eq!(r.tau_applied, r.tau_raw);
    }
    Ok(())
}

pub fn reward_sums(r0: f64, vartheta: f64, horizon: u64) -> Result<(), TestCaseError> {
    let s = RewardSchedule {
        r0,
        capital_lambda: 3,
        family: RewardFamily::Geometric { vartheta },
    };
    let rep = is_inflationary(&s, horizon);
    prop_assert_eq!(rep.partial_sums.len() as u64, horizon);
    let mut prev = 0.0;
    for (i, sum) in rep.partial_sums.iter().enumerate() {
        // Phase i covers heights 3i..3i+3.
        let step = block_reward_at(&s, 3 * i as u64 + 2).unwrap();
        prop_assert!((sum - prev - step).abs() <= 1e-9 * r0.max(1.0));
        prop_assert!(*sum >= prev);
        prev = *sum;
    }
    let closed = if vartheta == 1.0 {
        r0 * horizon as f64
    } else {
        r0 * (1.0 - vartheta.powi(horizon as i32)) / (1.0 - vartheta)
    };
    prop_assert!(
        (prev - closed).abs() <= 1e-9 * closed.max(1.0),
        "{prev} vs {closed}"
    );
    Ok(())
}
