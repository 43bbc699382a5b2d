//! The `.lgd` game description language.
//!
//! A game is one S-expression: `(game "name" clause...)`. Clauses declare
//! players, equipment (one board, optional hands), piece types, and a rule
//! tree built from a small vocabulary of ludemes. See `docs/lgd-grammar.md`
//! for the full grammar.

mod builtins;
mod parser;
mod printer;
pub mod sexp;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Container};
use crate::player::Player;

pub use builtins::{builtin_game, builtin_games};
pub use parser::{parse_game, parse_game_bytes};
pub use printer::print_game;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    UnknownLudeme,
    Arity,
    Semantic,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Lexical => "lexical error",
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UnknownLudeme => "unknown ludeme",
            ParseErrorKind::Arity => "arity mismatch",
            ParseErrorKind::Semantic => "invalid game",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{line}:{column}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source.
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoardShape {
    Square { rows: usize, cols: usize },
    HexRhombus { size: usize },
    HexHex { side: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContainerDecl {
    Board(BoardShape),
    Hand { capacity: usize, owner: Player },
}

impl ContainerDecl {
    pub fn build(&self) -> Container {
        match *self {
            ContainerDecl::Board(BoardShape::Square { rows, cols }) => {
                geometry::generate_square(rows, cols)
            }
            ContainerDecl::Board(BoardShape::HexRhombus { size }) => {
                geometry::generate_hex_rhombus(size)
            }
            ContainerDecl::Board(BoardShape::HexHex { side }) => geometry::generate_hex_hex(side),
            ContainerDecl::Hand { capacity, owner } => geometry::make_hand(capacity, owner),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Owner {
    Each,
    Player(Player),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceDecl {
    pub name: String,
    pub owner: Owner,
}

/// A concrete piece type: `each` declarations expand to one type per player.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PieceType {
    pub name: String,
    pub owner: Player,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    North,
    South,
    East,
    West,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    All,
    Edge(Edge),
    /// Inclusive lattice row range.
    Rows(i32, i32),
    Cols(i32, i32),
    /// Sites whose `row + col` has this parity.
    Parity(u8),
    Sites(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionSet {
    /// Towards increasing rows for player 1, decreasing for player 2.
    Forward,
    ForwardDiagonal,
    Orthogonal,
    Diagonal,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepTarget {
    Empty,
    /// Captures the enemy piece on the target.
    Enemy,
    EmptyOrEnemy,
    /// Stacking games: move on top of whatever is there.
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpChain {
    Single,
    /// Continue jumping in the same direction.
    Straight,
    /// Continue jumping in any direction.
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Opening {
    /// First player removes an own piece from a central or corner site; the
    /// second removes an own piece orthogonally adjacent to it.
    CenterOrCorner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Win,
    Lose,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoMovesResult {
    Win,
    Lose,
    Draw,
    /// The stuck player must pass; two passes in a row end in a draw.
    Pass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LudemeKind {
    PlaceEmpty,
    StepMove,
    HopCapture,
    LineEnd,
    ConnectEnd,
    ReachEnd,
    NoMovesEnd,
    SwapMeta,
    StartPlace,
}

impl LudemeKind {
    pub fn keyword(self) -> &'static str {
        match self {
            LudemeKind::PlaceEmpty => "place-empty",
            LudemeKind::StepMove => "step-move",
            LudemeKind::HopCapture => "hop-capture",
            LudemeKind::LineEnd => "line-end",
            LudemeKind::ConnectEnd => "connect-end",
            LudemeKind::ReachEnd => "reach-end",
            LudemeKind::NoMovesEnd => "no-moves-end",
            LudemeKind::SwapMeta => "swap",
            LudemeKind::StartPlace => "start-place",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Ludeme {
    StartPlace {
        piece: String,
        owner: Player,
        region: Region,
        local_state: u32,
    },
    PlaceEmpty {
        piece: String,
    },
    StepMove {
        piece: String,
        directions: Vec<DirectionSet>,
        target: StepTarget,
    },
    HopCapture {
        piece: String,
        chain: JumpChain,
        opening: Option<Opening>,
    },
    LineEnd {
        length: usize,
        result: Polarity,
    },
    ConnectEnd {
        owner: Player,
        regions: [Region; 2],
    },
    ReachEnd {
        owner: Player,
        region: Region,
    },
    NoMovesEnd {
        result: NoMovesResult,
    },
    SwapMeta,
}

impl Ludeme {
    pub fn kind(&self) -> LudemeKind {
        match self {
            Ludeme::StartPlace { .. } => LudemeKind::StartPlace,
            Ludeme::PlaceEmpty { .. } => LudemeKind::PlaceEmpty,
            Ludeme::StepMove { .. } => LudemeKind::StepMove,
            Ludeme::HopCapture { .. } => LudemeKind::HopCapture,
            Ludeme::LineEnd { .. } => LudemeKind::LineEnd,
            Ludeme::ConnectEnd { .. } => LudemeKind::ConnectEnd,
            Ludeme::ReachEnd { .. } => LudemeKind::ReachEnd,
            Ludeme::NoMovesEnd { .. } => LudemeKind::NoMovesEnd,
            Ludeme::SwapMeta => LudemeKind::SwapMeta,
        }
    }

    /// Whether moves produced by this ludeme can leave from a site other
    /// than the one they land on.
    pub fn moves_pieces(&self) -> bool {
        matches!(self, Ludeme::StepMove { .. } | Ludeme::HopCapture { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleTree {
    pub start: Vec<Ludeme>,
    pub play: Vec<Ludeme>,
    pub end: Vec<Ludeme>,
    pub meta: Vec<Ludeme>,
}

impl RuleTree {
    pub fn ludemes(&self) -> impl Iterator<Item = &Ludeme> {
        self.start
            .iter()
            .chain(&self.play)
            .chain(&self.end)
            .chain(&self.meta)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameFlags {
    pub uses_swap_rule: bool,
    pub is_stacking: bool,
    pub uses_counts: bool,
    pub uses_amounts: bool,
    pub placement_only: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub name: String,
    pub num_players: usize,
    pub equipment: Vec<ContainerDecl>,
    /// Built from `equipment`, main board first.
    pub containers: Vec<Container>,
    pub piece_decls: Vec<PieceDecl>,
    pub piece_types: Vec<PieceType>,
    pub rules: RuleTree,
    pub flags: GameFlags,
}

impl GameSpec {
    pub fn board(&self) -> &Container {
        &self.containers[0]
    }

    pub fn total_sites(&self) -> usize {
        self.containers.iter().map(Container::len).sum()
    }

    /// Global id of the first site of each container.
    pub fn container_offsets(&self) -> Vec<usize> {
        self.containers
            .iter()
            .scan(0, |acc, c| {
                let start = *acc;
                *acc += c.len();
                Some(start)
            })
            .collect()
    }

    pub fn piece_id(&self, name: &str, owner: Player) -> Option<usize> {
        self.piece_types
            .iter()
            .position(|p| p.name == name && p.owner == owner)
    }

    /// Assembles a spec from parts, deriving concrete piece types and flags.
    /// Used by the parser and by tests that build synthetic specs.
    pub fn assemble(
        name: String,
        num_players: usize,
        equipment: Vec<ContainerDecl>,
        piece_decls: Vec<PieceDecl>,
        rules: RuleTree,
        stacking: bool,
        counts: bool,
        amounts: bool,
    ) -> GameSpec {
        let containers = equipment.iter().map(ContainerDecl::build).collect();
        let mut piece_types = Vec::new();
        for decl in &piece_decls {
            match decl.owner {
                Owner::Each => piece_types.extend((0..num_players).map(|p| PieceType {
                    name: decl.name.clone(),
                    owner: Player::from_index(p),
                })),
                Owner::Player(p) => piece_types.push(PieceType {
                    name: decl.name.clone(),
                    owner: p,
                }),
            }
        }
        let flags = GameFlags {
            uses_swap_rule: rules.meta.iter().any(|l| l.kind() == LudemeKind::SwapMeta),
            is_stacking: stacking,
            uses_counts: counts,
            uses_amounts: amounts,
            placement_only: !rules.ludemes().any(Ludeme::moves_pieces),
        };
        GameSpec {
            name,
            num_players,
            equipment,
            containers,
            piece_decls,
            piece_types,
            rules,
            flags,
        }
    }
}
