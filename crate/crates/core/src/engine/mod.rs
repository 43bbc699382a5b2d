//! Forward model: initial state, legal moves, move application and
//! terminal detection, interpreted from a parsed [`GameSpec`].

mod dump;
mod rules;
mod state;

use std::sync::Arc;

use thiserror::Error;

use crate::dsl::{self, GameSpec, ParseError};
use crate::player::Player;

pub use dump::{dump_state, parse_state_dump};
pub use rules::Rules;
pub use state::{Cell, Effect, GameState, Move, MoveKind, Outcome, PieceId, SiteId};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unsupported player count {0}; the engine plays two-player games only")]
    UnsupportedPlayers(usize),
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("state is terminal; no legal moves")]
    Terminal,
    #[error("illegal move {mv} (mover {mover}, move number {move_number})")]
    IllegalMove {
        mv: String,
        mover: Player,
        move_number: u32,
    },
    #[error("malformed state dump: {0}")]
    Dump(String),
}

/// A parsed game together with its compiled rule tables. Cheap to clone.
#[derive(Clone, Debug)]
pub struct Game {
    inner: Arc<GameInner>,
}

#[derive(Debug)]
struct GameInner {
    spec: GameSpec,
    rules: Rules,
}

impl Game {
    pub fn new(spec: GameSpec) -> Result<Game, EngineError> {
        if spec.num_players != 2 {
            return Err(EngineError::UnsupportedPlayers(spec.num_players));
        }
        let rules = Rules::compile(&spec);
        Ok(Game {
            inner: Arc::new(GameInner { spec, rules }),
        })
    }

    pub fn from_source(text: &str) -> Result<Game, EngineError> {
        Game::new(dsl::parse_game(text)?)
    }

    pub fn builtin(name: &str) -> Result<Game, EngineError> {
        let src = dsl::builtin_game(name).ok_or_else(|| EngineError::UnknownGame(name.into()))?;
        Game::from_source(src)
    }

    pub fn spec(&self) -> &GameSpec {
        &self.inner.spec
    }

    pub fn rules(&self) -> &Rules {
        &self.inner.rules
    }

    pub fn name(&self) -> &str {
        &self.inner.spec.name
    }

    pub fn total_sites(&self) -> usize {
        self.inner.rules.total_sites
    }
}

pub fn initial_state(game: &Game) -> GameState {
    game.rules().initial_state(game.spec())
}

/// Legal moves in sorted order. Errors on terminal states.
pub fn legal_moves(game: &Game, state: &GameState) -> Result<Vec<Move>, EngineError> {
    if state.is_terminal() {
        return Err(EngineError::Terminal);
    }
    let mut out = Vec::new();
    game.rules().legal_moves_into(game.spec(), state, &mut out);
    Ok(out)
}

/// Applies a move after checking that it is legal.
pub fn apply(game: &Game, state: &GameState, mv: &Move) -> Result<GameState, EngineError> {
    let legal = legal_moves(game, state)?;
    if legal.binary_search(mv).is_err() {
        return Err(EngineError::IllegalMove {
            mv: mv.to_string(),
            mover: state.mover,
            move_number: state.move_number,
        });
    }
    Ok(apply_trusted(game, state, mv))
}

/// Applies a move taken from [`legal_moves`] for this state, without
/// re-validating it.
pub fn apply_trusted(game: &Game, state: &GameState, mv: &Move) -> GameState {
    let mut next = state.clone();
    game.rules().apply_in_place(game.spec(), &mut next, mv);
    next
}

/// In-place variant of [`apply_trusted`] for hot loops.
pub fn apply_in_place(game: &Game, state: &mut GameState, mv: &Move) {
    game.rules().apply_in_place(game.spec(), state, mv);
}

pub fn outcome(_game: &Game, state: &GameState) -> Option<Outcome> {
    state.outcome()
}

/// Leaf count of the game tree truncated at `depth`; terminal nodes count
/// as leaves wherever they occur.
pub fn perft(game: &Game, state: &GameState, depth: u32) -> u64 {
    if depth == 0 || state.is_terminal() {
        return 1;
    }
    let mut moves = Vec::new();
    game.rules().legal_moves_into(game.spec(), state, &mut moves);
    if depth == 1 {
        return moves.len() as u64;
    }
    moves
        .iter()
        .map(|m| perft(game, &apply_trusted(game, state, m), depth - 1))
        .sum()
}
