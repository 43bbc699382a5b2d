//! Plain-text state dumps used by golden fixtures and the CLI.
//!
//! ```text
//! mover 1
//! move 2
//! swap 0
//! passes 0
//! amounts 0 0
//! last 12 swap
//! sites . 0 . 1@2 0x3 0/1/1 ...
//! ```
//!
//! `sites` lists one token per global site in id order (row-major on square
//! boards): `.` for empty, a piece id, `<id>x<count>` for counted pieces,
//! `<id>/<id>/...` for stacks bottom to top, each optionally followed by
//! `@<local state>`.

use std::fmt::Write;

use super::state::{Cell, GameState, Move};
use super::{EngineError, Game};
use crate::player::Player;

pub fn dump_state(state: &GameState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mover {}", state.mover.number());
    let _ = writeln!(out, "move {}", state.move_number);
    let _ = writeln!(out, "swap {}", state.swap_occurred as u8);
    let _ = writeln!(out, "passes {}", state.consecutive_passes);
    let amounts: Vec<String> = state.amounts.iter().map(i64::to_string).collect();
    let _ = writeln!(out, "amounts {}", amounts.join(" "));
    let last: Vec<String> = state.last_moves.iter().map(Move::to_string).collect();
    let _ = writeln!(out, "last {}", last.join(" "));
    out.push_str("sites");
    for (cell, local) in state.cells.iter().zip(&state.local_state) {
        out.push(' ');
        match cell {
            Cell::Empty => out.push('.'),
            Cell::Piece { piece, count: 1 } => {
                let _ = write!(out, "{piece}");
            }
            Cell::Piece { piece, count } => {
                let _ = write!(out, "{piece}x{count}");
            }
            Cell::Stack(s) => {
                let ids: Vec<String> = s.iter().map(u16::to_string).collect();
                out.push_str(&ids.join("/"));
            }
        }
        if *local > 0 {
            let _ = write!(out, "@{local}");
        }
    }
    out.push('\n');
    out
}

fn bad(msg: impl Into<String>) -> EngineError {
    EngineError::Dump(msg.into())
}

fn parse_cell(token: &str, stacking: bool) -> Result<(Cell, u32), EngineError> {
    let (body, local) = match token.split_once('@') {
        Some((b, l)) => (b, l.parse().map_err(|_| bad(format!("bad local state in `{token}`")))?),
        None => (token, 0),
    };
    let num = |s: &str| s.parse::<u16>().map_err(|_| bad(format!("bad site token `{token}`")));
    let cell = if body == "." {
        Cell::Empty
    } else if stacking {
        Cell::Stack(body.split('/').map(num).collect::<Result<_, _>>()?)
    } else if let Some((p, c)) = body.split_once('x') {
        let count = c.parse().map_err(|_| bad(format!("bad count in `{token}`")))?;
        Cell::Piece { piece: num(p)?, count }
    } else {
        Cell::Piece { piece: num(body)?, count: 1 }
    };
    Ok((cell, local))
}

/// Parses a dump produced by [`dump_state`]. Last moves are restored from
/// notation, so capture effects of historical moves are not preserved; the
/// terminal status is recomputed from the position.
pub fn parse_state_dump(game: &Game, text: &str) -> Result<GameState, EngineError> {
    let spec = game.spec();
    let mut state = GameState::blank(game.total_sites(), spec.num_players);
    let mut saw_sites = false;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        let mut fields = rest.split_whitespace();
        match key {
            "mover" => {
                let n = fields.next().and_then(|t| t.parse().ok());
                state.mover = n
                    .and_then(Player::from_number)
                    .filter(|p| p.index() < spec.num_players)
                    .ok_or_else(|| bad("bad mover"))?;
            }
            "move" => {
                state.move_number = fields
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad("bad move number"))?
            }
            "swap" => state.swap_occurred = fields.next() == Some("1"),
            "passes" => {
                state.consecutive_passes = fields
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad("bad pass count"))?
            }
            "amounts" => {
                state.amounts = fields
                    .map(|t| t.parse().map_err(|_| bad("bad amount")))
                    .collect::<Result<_, _>>()?;
                if state.amounts.len() != spec.num_players {
                    return Err(bad("amount count does not match player count"));
                }
            }
            "last" => {
                state.last_moves.clear();
                for t in fields {
                    let m = Move::parse_notation(t).ok_or_else(|| bad(format!("bad move `{t}`")))?;
                    if m.to.is_some_and(|s| s >= game.total_sites())
                        || m.from.is_some_and(|s| s >= game.total_sites())
                    {
                        return Err(bad(format!("move `{t}` out of range")));
                    }
                    state
                        .last_moves
                        .try_push(m)
                        .map_err(|_| bad("more than two last moves"))?;
                }
            }
            "sites" => {
                let tokens: Vec<&str> = fields.collect();
                if tokens.len() != game.total_sites() {
                    return Err(bad(format!(
                        "expected {} sites, found {}",
                        game.total_sites(),
                        tokens.len()
                    )));
                }
                for (i, t) in tokens.iter().enumerate() {
                    let (cell, local) = parse_cell(t, spec.flags.is_stacking)?;
                    if let Some(p) = cell.top() {
                        if p as usize >= spec.piece_types.len() {
                            return Err(bad(format!("unknown piece id {p}")));
                        }
                    }
                    state.cells[i] = cell;
                    state.local_state[i] = local;
                }
                saw_sites = true;
            }
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }
    if !saw_sites {
        return Err(bad("missing sites line"));
    }
    state.outcome = game.rules().evaluate_end(&state);
    Ok(state)
}
