use std::collections::BTreeMap;

use super::NetworkMode;
use crate::chain::Block;

/// Per-round delivery queues for non-adversarial broadcasts.
///
/// A block mined in round `t` is visible to everyone from round `t + 1` in
/// [`NetworkMode::Immediate`] and from round `t + 2` under front-running, i.e.
/// one extra round of delay. Adversarial broadcasts bypass the queue.
#[derive(Clone, Debug, Default)]
pub struct NetworkModel {
    pub mode: NetworkMode,
    pending: BTreeMap<u64, Vec<Block>>,
}

impl NetworkModel {
    pub fn new(mode: NetworkMode) -> Self {
        Self {
            mode,
            pending: BTreeMap::new(),
        }
    }

    pub fn delay(&self) -> u64 {
        match self.mode {
            NetworkMode::Immediate => 1,
            NetworkMode::FrontRunning => 2,
        }
    }

    pub fn broadcast(&mut self, mined_round: u64, block: Block) {
        self.pending
            .entry(mined_round + self.delay())
            .or_default()
            .push(block);
    }

    /// Removes and returns everything due by `round`, oldest first.
    pub fn due(&mut self, round: u64) -> Vec<Block> {
        let later = self.pending.split_off(&(round + 1));
        let now = std::mem::replace(&mut self.pending, later);
        now.into_values().flatten().collect()
    }

    pub fn in_flight(&self) -> usize {
        self.pending.values().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::BlockId;

    fn b(tag: u8) -> Block {
        Block {
            id: BlockId([tag; 32]),
            ..Block::genesis()
        }
    }

    #[test]
    fn front_running_adds_one_round() {
        let mut n = NetworkModel::new(NetworkMode::FrontRunning);
        n.broadcast(5, b(1));
        assert!(n.due(6).is_empty());
        assert_eq!(n.due(7).len(), 1);
        let mut i = NetworkModel::new(NetworkMode::Immediate);
        i.broadcast(5, b(1));
        i.broadcast(5, b(2));
        assert_eq!(i.due(6).len(), 2);
        assert_eq!(i.in_flight(), 0);
    }
}
