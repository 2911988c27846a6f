use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// The three miner populations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Party {
    Honest,
    Rational,
    Adversary,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::Honest, Party::Rational, Party::Adversary];
}

/// One value per party, serialized with fixed field names.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerParty<T> {
    pub honest: T,
    pub rational: T,
    pub adversary: T,
}

impl<T: Copy + std::ops::Add<Output = T>> PerParty<T> {
    pub fn total(&self) -> T {
        self.honest + self.rational + self.adversary
    }
}

impl<T> Index<Party> for PerParty<T> {
    type Output = T;
    fn index(&self, p: Party) -> &T {
        match p {
            Party::Honest => &self.honest,
            Party::Rational => &self.rational,
            Party::Adversary => &self.adversary,
        }
    }
}

impl<T> IndexMut<Party> for PerParty<T> {
    fn index_mut(&mut self, p: Party) -> &mut T {
        match p {
            Party::Honest => &mut self.honest,
            Party::Rational => &mut self.rational,
            Party::Adversary => &mut self.adversary,
        }
    }
}
