use std::fmt;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::player::Player;

/// Global site index: containers concatenated in declaration order.
pub type SiteId = usize;
/// Index into [`crate::dsl::GameSpec::piece_types`].
pub type PieceId = u16;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Empty,
    /// A single piece type, `count` copies (1 outside count games).
    Piece { piece: PieceId, count: u32 },
    /// Bottom to top; never empty.
    Stack(Vec<PieceId>),
}

impl Cell {
    pub fn is_empty(&self) -> bool {
        matches!(self, Cell::Empty)
    }

    pub fn top(&self) -> Option<PieceId> {
        match self {
            Cell::Empty => None,
            Cell::Piece { piece, .. } => Some(*piece),
            Cell::Stack(s) => s.last().copied(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Cell::Empty => 0,
            Cell::Piece { .. } => 1,
            Cell::Stack(s) => s.len(),
        }
    }

    pub fn count(&self) -> u32 {
        match self {
            Cell::Empty => 0,
            Cell::Piece { count, .. } => *count,
            Cell::Stack(s) => s.len() as u32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    Pass,
    Swap,
    Play,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Effect {
    /// Capture order matters for multi-jumps, so effects are part of the
    /// move's identity.
    Capture(SiteId),
    Remove(SiteId),
    Place(PieceId),
}

/// A complete decision. Field order is the documented sort order of
/// legal move lists: kind, from, to, level range, then effects.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    pub from: Option<SiteId>,
    pub to: Option<SiteId>,
    pub level_min: u32,
    pub level_max: u32,
    pub effects: SmallVec<[Effect; 2]>,
}

impl Move {
    pub fn pass() -> Move {
        Move {
            kind: MoveKind::Pass,
            from: None,
            to: None,
            level_min: 0,
            level_max: 0,
            effects: SmallVec::new(),
        }
    }

    pub fn swap() -> Move {
        Move {
            kind: MoveKind::Swap,
            ..Move::pass()
        }
    }

    pub fn play(from: Option<SiteId>, to: SiteId, effects: &[Effect]) -> Move {
        Move {
            kind: MoveKind::Play,
            from,
            to: Some(to),
            level_min: 0,
            level_max: 0,
            effects: SmallVec::from_slice(effects),
        }
    }

    /// Parses `pass`, `swap`, `<to>` or `<from>-<to>`. Effects are not part
    /// of the notation, so the result only carries the spatial fields.
    pub fn parse_notation(text: &str) -> Option<Move> {
        match text {
            "pass" => Some(Move::pass()),
            "swap" => Some(Move::swap()),
            _ => match text.split_once('-') {
                Some((a, b)) => Some(Move::play(Some(a.parse().ok()?), b.parse().ok()?, &[])),
                None => Some(Move::play(None, text.parse().ok()?, &[])),
            },
        }
    }

    /// True when the spatial notation of both moves agrees.
    pub fn same_notation(&self, other: &Move) -> bool {
        self.kind == other.kind && self.from == other.from && self.to == other.to
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.from, self.to) {
            (MoveKind::Pass, ..) => f.write_str("pass"),
            (MoveKind::Swap, ..) => f.write_str("swap"),
            (MoveKind::Play, Some(from), Some(to)) => write!(f, "{from}-{to}"),
            (MoveKind::Play, None, Some(to)) => write!(f, "{to}"),
            (MoveKind::Play, _, None) => f.write_str("?"),
        }
    }
}

/// Terminal result of a two-player zero-sum game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Win(Player),
    Draw,
}

impl Outcome {
    /// +1 for the winner, -1 for the loser, 0 for both on a draw.
    pub fn score(self, player: Player) -> f64 {
        match self {
            Outcome::Win(w) if w == player => 1.0,
            Outcome::Win(_) => -1.0,
            Outcome::Draw => 0.0,
        }
    }

    pub fn scores(self) -> [f64; 2] {
        [self.score(Player::ONE), self.score(Player::TWO)]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    /// Seat to move. Seats alternate on every move, including swap and pass.
    pub mover: Player,
    pub cells: Vec<Cell>,
    pub local_state: Vec<u32>,
    pub amounts: Vec<i64>,
    pub swap_occurred: bool,
    /// Most recent last.
    pub last_moves: ArrayVec<Move, 2>,
    pub move_number: u32,
    pub(crate) consecutive_passes: u8,
    pub(crate) outcome: Option<Outcome>,
}

impl GameState {
    /// An empty, non-terminal state with player 1 to move.
    pub fn blank(total_sites: usize, num_players: usize) -> GameState {
        GameState {
            mover: Player::ONE,
            cells: vec![Cell::Empty; total_sites],
            local_state: vec![0; total_sites],
            amounts: vec![0; num_players],
            swap_occurred: false,
            last_moves: ArrayVec::new(),
            move_number: 0,
            consecutive_passes: 0,
            outcome: None,
        }
    }

    /// Piece colour (the seat that owned it before any swap) controlled by `player`.
    pub fn role_of(&self, player: Player) -> Player {
        if self.swap_occurred {
            player.other()
        } else {
            player
        }
    }

    /// Seat currently controlling the pieces of `role`.
    pub fn controller(&self, role: Player) -> Player {
        self.role_of(role)
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn notation_round_trip() {
        for text in ["pass", "swap", "17", "3-15", "7-7"] {
            let m = Move::parse_notation(text).unwrap();
            assert_eq!(m.to_string(), text);
        }
        assert!(Move::parse_notation("x-1").is_none());
        assert!(Move::parse_notation("").is_none());
    }

    #[test]
    fn move_order_is_kind_from_to() {
        let mut moves = vec![
            Move::play(Some(3), 1, &[]),
            Move::play(None, 5, &[]),
            Move::swap(),
            Move::play(Some(2), 9, &[]),
            Move::pass(),
        ];
        moves.sort();
        let text: Vec<String> = moves.iter().map(Move::to_string).collect();
        assert_eq!(text, ["pass", "swap", "5", "2-9", "3-1"]);
    }

    #[test]
    fn outcome_is_zero_sum() {
        for o in [Outcome::Win(Player::ONE), Outcome::Win(Player::TWO), Outcome::Draw] {
            let [a, b] = o.scores();
            assert_eq!(a + b, 0.0);
        }
    }

    #[test]
    fn seat_exchange() {
        let mut s = GameState::blank(4, 2);
        assert_eq!(s.role_of(Player::TWO), Player::TWO);
        s.swap_occurred = true;
        assert_eq!(s.role_of(Player::TWO), Player::ONE);
        assert_eq!(s.controller(Player::ONE), Player::TWO);
    }
}
