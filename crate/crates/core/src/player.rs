use std::fmt;

use serde::{Deserialize, Serialize};

/// A seat at the table. Stored zero-based, displayed one-based (`P1`, `P2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Player(u8);

impl Player {
    pub const ONE: Player = Player(0);
    pub const TWO: Player = Player(1);

    /// Builds a player from its one-based number as written in game files.
    pub fn from_number(number: u32) -> Option<Player> {
        (1..=u8::MAX as u32)
            .contains(&number)
            .then(|| Player((number - 1) as u8))
    }

    pub fn from_index(index: usize) -> Player {
        Player(index as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn number(self) -> u32 {
        self.0 as u32 + 1
    }

    /// The opponent in a two-player game.
    pub fn other(self) -> Player {
        Player(1 - self.0.min(1))
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.number())
    }
}
