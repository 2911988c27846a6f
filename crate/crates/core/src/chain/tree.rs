use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{recalc_difficulty, Block, BlockId, ChainError, EpochParams, MinerId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetargetRecord {
    pub block: BlockId,
    pub height: u64,
    pub tau_raw: f64,
    pub tau_applied: f64,
    pub new_difficulty: f64,
}

/// One line of the chain export stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub id: BlockId,
    pub parent: BlockId,
    pub height: u64,
    pub miner: MinerId,
    pub declared_timestamp: u64,
    pub actual_round: u64,
    pub difficulty_target: f64,
}

/// Append-only block tree with per-branch difficulty.
///
/// Epoch boundaries sit at heights that are multiples of `lambda`; each
/// branch retargets from its own declared timestamps, so a private fork can
/// drift to a different difficulty than the chain it forked from.
#[derive(Clone, Debug)]
pub struct ChainTree {
    blocks: HashMap<BlockId, Block>,
    children: HashMap<BlockId, Vec<BlockId>>,
    tips: BTreeSet<BlockId>,
    tips_by_height: BTreeMap<u64, BTreeSet<BlockId>>,
    /// Difficulty for mining a child of the key block.
    child_difficulty: HashMap<BlockId, f64>,
    epoch: EpochParams,
    retargets: Vec<RetargetRecord>,
    /// Insertion sequence number; the first-received block wins ties.
    arrival: HashMap<BlockId, u64>,
    best: BlockId,
}

impl ChainTree {
    pub fn new(epoch: EpochParams, initial_difficulty: f64) -> Self {
        let genesis = Block {
            difficulty_target: initial_difficulty,
            ..Block::genesis()
        };
        let mut blocks = HashMap::new();
        blocks.insert(BlockId::GENESIS, genesis);
        let mut child_difficulty = HashMap::new();
        child_difficulty.insert(BlockId::GENESIS, initial_difficulty);
        Self {
            blocks,
            children: HashMap::new(),
            tips: BTreeSet::from([BlockId::GENESIS]),
            tips_by_height: BTreeMap::from([(0, BTreeSet::from([BlockId::GENESIS]))]),
            child_difficulty,
            epoch,
            retargets: Vec::new(),
            arrival: HashMap::from([(BlockId::GENESIS, 0)]),
            best: BlockId::GENESIS,
        }
    }

    /// Fork-choice order: higher, then received earlier, then smaller id.
    fn tip_key(&self, id: &BlockId) -> (u64, Reverse<u64>, Reverse<BlockId>) {
        (
            self.blocks[id].height,
            Reverse(self.arrival[id]),
            Reverse(*id),
        )
    }

    /// Position of `id` in insertion order (genesis is 0).
    pub fn arrival(&self, id: &BlockId) -> u64 {
        self.arrival[id]
    }

    pub fn genesis(&self) -> BlockId {
        BlockId::GENESIS
    }

    pub fn epoch(&self) -> &EpochParams {
        &self.epoch
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, id: &BlockId) -> Option<&Block> {
        self.blocks.get(id)
    }

    pub fn contains(&self, id: &BlockId) -> bool {
        self.blocks.contains_key(id)
    }

    pub fn block(&self, id: &BlockId) -> &Block {
        &self.blocks[id]
    }

    pub fn height(&self, id: &BlockId) -> u64 {
        self.blocks[id].height
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.values()
    }

    pub fn children(&self, id: &BlockId) -> &[BlockId] {
        self.children.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn tips(&self) -> &BTreeSet<BlockId> {
        &self.tips
    }

    pub fn retargets(&self) -> &[RetargetRecord] {
        &self.retargets
    }

    /// Difficulty a new child of `parent` must meet.
    pub fn difficulty_for_child(&self, parent: &BlockId) -> f64 {
        self.child_difficulty[parent]
    }

    /// Next-block difficulty on every branch, keyed by tip.
    pub fn per_branch_difficulty(&self) -> BTreeMap<BlockId, f64> {
        self.tips
            .iter()
            .map(|t| (*t, self.child_difficulty[t]))
            .collect()
    }

    pub fn append_block(&mut self, block: Block) -> Result<(), ChainError> {
        if self.blocks.contains_key(&block.id) {
            return Err(ChainError::DuplicateBlock(block.id));
        }
        let parent = self
            .blocks
            .get(&block.parent)
            .ok_or(ChainError::UnknownParent {
                block: block.id,
                parent: block.parent,
            })?;
        if block.height != parent.height + 1 {
            return Err(ChainError::HeightMismatch {
                block: block.id,
                got: block.height,
                expected: parent.height + 1,
            });
        }

        let inherited = self.child_difficulty[&block.parent];
        let lambda = self.epoch.lambda;
        let next_difficulty = if block.height.is_multiple_of(lambda) {
            let mut epoch_blocks = Vec::with_capacity(lambda as usize);
            epoch_blocks.push(block.clone());
            let mut cur = block.parent;
            for _ in 1..lambda {
                let b = &self.blocks[&cur];
                epoch_blocks.push(b.clone());
                cur = b.parent;
            }
            epoch_blocks.reverse();
            let boundary = self.blocks[&cur].declared_timestamp;
            let r = recalc_difficulty(boundary, &epoch_blocks, &self.epoch, inherited)?;
            self.retargets.push(RetargetRecord {
                block: block.id,
                height: block.height,
                tau_raw: r.tau_raw,
                tau_applied: r.tau_applied,
                new_difficulty: r.new_difficulty,
            });
            r.new_difficulty
        } else {
            inherited
        };

        let id = block.id;
        if self.tips.remove(&block.parent) {
            let ph = block.height - 1;
            let level = self.tips_by_height.get_mut(&ph).expect("tip indexed");
            level.remove(&block.parent);
            if level.is_empty() {
                self.tips_by_height.remove(&ph);
            }
        }
        self.tips.insert(id);
        self.tips_by_height
            .entry(block.height)
            .or_default()
            .insert(id);
        self.children.entry(block.parent).or_default().push(id);
        self.child_difficulty.insert(id, next_difficulty);
        self.arrival.insert(id, self.arrival.len() as u64);
        self.blocks.insert(id, block);
        if self.tip_key(&id) > self.tip_key(&self.best) {
            self.best = id;
        }
        Ok(())
    }

    /// Tip selected by the fork-choice rule.
    pub fn best_tip(&self) -> BlockId {
        self.best
    }

    /// Best tip among those accepted by `keep`; genesis if none is.
    pub fn best_tip_where(&self, mut keep: impl FnMut(&BlockId) -> bool) -> BlockId {
        for level in self.tips_by_height.values().rev() {
            if let Some(t) = level
                .iter()
                .filter(|t| keep(t))
                .max_by_key(|t| self.tip_key(t))
            {
                return *t;
            }
        }
        BlockId::GENESIS
    }

    /// Every tip at the maximal height, in fork-choice order.
    pub fn max_height_tips(&self) -> Vec<BlockId> {
        let mut v: Vec<BlockId> = self
            .tips_by_height
            .values()
            .next_back()
            .map(|l| l.iter().copied().collect())
            .unwrap_or_default();
        v.sort_by_key(|t| Reverse(self.tip_key(t)));
        v
    }

    /// Tips at height `min_height` or above, lowest first.
    pub fn tips_from(&self, min_height: u64) -> impl Iterator<Item = &BlockId> {
        self.tips_by_height
            .range(min_height..)
            .flat_map(|(_, l)| l.iter())
    }

    /// Genesis-to-tip path of the selected chain.
    pub fn longest_chain(&self) -> Vec<BlockId> {
        self.path_to(self.best)
    }

    pub fn path_to(&self, tip: BlockId) -> Vec<BlockId> {
        let mut path = Vec::with_capacity(self.blocks[&tip].height as usize + 1);
        let mut cur = tip;
        loop {
            path.push(cur);
            if cur == BlockId::GENESIS {
                break;
            }
            cur = self.blocks[&cur].parent;
        }
        path.reverse();
        path
    }

    /// Ancestor of `id` at `height` (itself if heights match).
    pub fn ancestor_at(&self, id: BlockId, height: u64) -> Option<BlockId> {
        let mut cur = self.blocks.get(&id)?;
        if cur.height < height {
            return None;
        }
        while cur.height > height {
            cur = &self.blocks[&cur.parent];
        }
        Some(cur.id)
    }

    /// True when `anc` lies on the path from genesis to `desc` (inclusive).
    pub fn is_ancestor(&self, anc: BlockId, desc: BlockId) -> bool {
        match self.blocks.get(&anc) {
            Some(a) => self.ancestor_at(desc, a.height) == Some(anc),
            None => false,
        }
    }

    /// Lowest common ancestor.
    pub fn lca(&self, a: BlockId, b: BlockId) -> BlockId {
        let (ha, hb) = (self.height(&a), self.height(&b));
        let h = ha.min(hb);
        let mut x = self.ancestor_at(a, h).unwrap();
        let mut y = self.ancestor_at(b, h).unwrap();
        while x != y {
            x = self.blocks[&x].parent;
            y = self.blocks[&y].parent;
        }
        x
    }

    /// Writes one JSON object per block, ordered by height then id.
    pub fn export_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut all: Vec<&Block> = self.blocks.values().collect();
        all.sort_by(|a, b| match a.height.cmp(&b.height) {
            Ordering::Equal => a.id.cmp(&b.id),
            o => o,
        });
        for b in all {
            let rec = ExportRecord {
                id: b.id,
                parent: b.parent,
                height: b.height,
                miner: b.miner,
                declared_timestamp: b.declared_timestamp,
                actual_round: b.actual_round,
                difficulty_target: b.difficulty_target,
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: u64) -> EpochParams {
        EpochParams {
            lambda,
            tau_min: 0.25,
            tau_max: 4.0,
            target_block_interval: 10.0,
        }
    }

    fn blk(tag: u8, parent: BlockId, height: u64, round: u64) -> Block {
        Block {
            id: BlockId([tag; 32]),
            parent,
            height,
            miner: MinerId(tag as u32),
            declared_timestamp: round,
            actual_round: round,
            difficulty_target: 1.0,
            txs: vec![],
            nonce: 0,
        }
    }

    fn id(tag: u8) -> BlockId {
        BlockId([tag; 32])
    }

    #[test]
    fn append_grows_and_forks() {
        let mut t = ChainTree::new(params(100), 1.0);
        t.append_block(blk(1, BlockId::GENESIS, 1, 1)).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.tips().len(), 1);
        t.append_block(blk(2, BlockId::GENESIS, 1, 2)).unwrap();
        assert_eq!(t.tips().len(), 2);
        assert!(t.tips().iter().all(|x| t.height(x) == 1));
    }

    #[test]
    fn append_errors() {
        let mut t = ChainTree::new(params(100), 1.0);
        assert!(matches!(
            t.append_block(blk(1, id(9), 1, 1)),
            Err(ChainError::UnknownParent { .. })
        ));
        t.append_block(blk(1, BlockId::GENESIS, 1, 1)).unwrap();
        assert_eq!(
            t.append_block(blk(1, BlockId::GENESIS, 1, 1)),
            Err(ChainError::DuplicateBlock(id(1)))
        );
        assert!(matches!(
            t.append_block(blk(2, id(1), 3, 1)),
            Err(ChainError::HeightMismatch { expected: 2, .. })
        ));
    }

    #[test]
    fn longest_chain_rules() {
        let mut t = ChainTree::new(params(100), 1.0);
        let mut prev = BlockId::GENESIS;
        for i in 1..=5u8 {
            t.append_block(blk(i, prev, i as u64, i as u64)).unwrap();
            prev = id(i);
        }
        assert_eq!(t.longest_chain().len(), 6);
        assert_eq!(*t.longest_chain().last().unwrap(), id(5));

        // Height 6 fork from block 3 beats the height-5 tip.
        t.append_block(blk(20, id(3), 4, 30)).unwrap();
        t.append_block(blk(21, id(20), 5, 31)).unwrap();
        t.append_block(blk(22, id(21), 6, 32)).unwrap();
        assert_eq!(t.best_tip(), id(22));

        // Equal heights: the first one received wins, whatever its round.
        let mut u = ChainTree::new(params(100), 1.0);
        u.append_block(blk(1, BlockId::GENESIS, 1, 12)).unwrap();
        u.append_block(blk(2, BlockId::GENESIS, 1, 10)).unwrap();
        assert_eq!(u.best_tip(), id(1));
        u.append_block(blk(3, BlockId::GENESIS, 1, 10)).unwrap();
        assert_eq!(u.best_tip(), id(1));
        assert_eq!(u.max_height_tips(), vec![id(1), id(2), id(3)]);
        assert_eq!(u.arrival(&id(3)), 3);
    }

    #[test]
    fn branches_retarget_independently() {
        let mut t = ChainTree::new(params(2), 1.0);
        // Branch a: on schedule (20 rounds per 2 blocks).
        t.append_block(blk(1, BlockId::GENESIS, 1, 10)).unwrap();
        t.append_block(blk(2, id(1), 2, 20)).unwrap();
        // Branch b: declares 160 rounds.
        t.append_block(blk(3, BlockId::GENESIS, 1, 80)).unwrap();
        t.append_block(blk(4, id(3), 2, 160)).unwrap();
        let d = t.per_branch_difficulty();
        assert_eq!(d[&id(2)], 1.0);
        assert_eq!(d[&id(4)], 0.25);
        assert_eq!(t.retargets().len(), 2);
    }

    #[test]
    fn ancestry_queries() {
        let mut t = ChainTree::new(params(100), 1.0);
        t.append_block(blk(1, BlockId::GENESIS, 1, 1)).unwrap();
        t.append_block(blk(2, id(1), 2, 2)).unwrap();
        t.append_block(blk(3, id(1), 2, 3)).unwrap();
        assert_eq!(t.lca(id(2), id(3)), id(1));
        assert!(t.is_ancestor(id(1), id(3)));
        assert!(!t.is_ancestor(id(2), id(3)));
        assert_eq!(t.ancestor_at(id(3), 0), Some(BlockId::GENESIS));
        assert_eq!(t.best_tip_where(|x| *x != id(2)), id(3));
    }

    #[test]
    fn export_is_one_line_per_block() {
        let mut t = ChainTree::new(params(100), 1.0);
        t.append_block(blk(1, BlockId::GENESIS, 1, 1)).unwrap();
        let mut buf = Vec::new();
        t.export_jsonl(&mut buf).unwrap();
        let lines: Vec<ExportRecord> = String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].id, id(1));
        assert_eq!(lines[1].parent, BlockId::GENESIS);
    }
}
