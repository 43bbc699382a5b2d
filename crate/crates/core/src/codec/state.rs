use std::fmt;

use serde::Serialize;

use super::grid::GridMap;
use crate::dsl::GameSpec;
use crate::engine::{Cell, GameState, Move};
use crate::player::Player;

/// Bottom and top stack layers encoded per piece type in stacking games.
pub const STACK_BOTTOM_LAYERS: usize = 5;
pub const STACK_TOP_LAYERS: usize = 5;
/// Local-state values 0..4 get their own channel; larger values share one.
pub const LOCAL_STATE_BUCKETS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LastMoveEnd {
    From,
    To,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChannelSpec {
    Piece { piece: usize },
    PieceBottom { piece: usize, layer: usize },
    PieceTop { piece: usize, layer: usize },
    StackHeight,
    PieceCount,
    Amount { player: Player },
    Mover { player: Player },
    LocalState { bucket: usize },
    Swap,
    Container { index: usize },
    /// `age` 0 is the most recent move.
    LastMove { age: usize, end: LastMoveEnd },
}

impl ChannelSpec {
    pub fn is_binary(self) -> bool {
        !matches!(
            self,
            ChannelSpec::StackHeight | ChannelSpec::PieceCount | ChannelSpec::Amount { .. }
        )
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ChannelSpec::Piece { piece } => write!(f, "piece {piece}"),
            ChannelSpec::PieceBottom { piece, layer } => write!(f, "piece {piece} bottom layer {layer}"),
            ChannelSpec::PieceTop { piece, layer } => write!(f, "piece {piece} top layer {layer}"),
            ChannelSpec::StackHeight => f.write_str("stack height"),
            ChannelSpec::PieceCount => f.write_str("piece count"),
            ChannelSpec::Amount { player } => write!(f, "amount {player}"),
            ChannelSpec::Mover { player } => write!(f, "mover {player}"),
            ChannelSpec::LocalState { bucket } if bucket + 1 == LOCAL_STATE_BUCKETS => {
                write!(f, "local state >= {bucket}")
            }
            ChannelSpec::LocalState { bucket } => write!(f, "local state {bucket}"),
            ChannelSpec::Swap => f.write_str("swap occurred"),
            ChannelSpec::Container { index } => write!(f, "container {index}"),
            ChannelSpec::LastMove { age, end } => write!(
                f,
                "{} move {}",
                if age == 0 { "last" } else { "previous" },
                match end {
                    LastMoveEnd::From => "from",
                    LastMoveEnd::To => "to",
                }
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateChannelLayout {
    pub channels: Vec<ChannelSpec>,
    pub bottom_layers: usize,
    pub top_layers: usize,
}

impl StateChannelLayout {
    /// Channel count `C`.
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }
}

pub fn state_layout(spec: &GameSpec) -> StateChannelLayout {
    let flags = &spec.flags;
    let mut ch = Vec::new();
    for piece in 0..spec.piece_types.len() {
        if flags.is_stacking {
            ch.extend((0..STACK_BOTTOM_LAYERS).map(|layer| ChannelSpec::PieceBottom { piece, layer }));
            ch.extend((0..STACK_TOP_LAYERS).map(|layer| ChannelSpec::PieceTop { piece, layer }));
        } else {
            ch.push(ChannelSpec::Piece { piece });
        }
    }
    if flags.is_stacking {
        ch.push(ChannelSpec::StackHeight);
    }
    if flags.uses_counts {
        ch.push(ChannelSpec::PieceCount);
    }
    if flags.uses_amounts {
        ch.extend((0..spec.num_players).map(|p| ChannelSpec::Amount { player: Player::from_index(p) }));
    }
    if spec.num_players > 1 {
        ch.extend((0..spec.num_players).map(|p| ChannelSpec::Mover { player: Player::from_index(p) }));
    }
    ch.extend((0..LOCAL_STATE_BUCKETS).map(|bucket| ChannelSpec::LocalState { bucket }));
    if flags.uses_swap_rule {
        ch.push(ChannelSpec::Swap);
    }
    ch.extend((0..spec.containers.len()).map(|index| ChannelSpec::Container { index }));
    for age in 0..2 {
        for end in [LastMoveEnd::From, LastMoveEnd::To] {
            ch.push(ChannelSpec::LastMove { age, end });
        }
    }
    StateChannelLayout {
        channels: ch,
        bottom_layers: STACK_BOTTOM_LAYERS,
        top_layers: STACK_TOP_LAYERS,
    }
}

/// Dense `(C, H, W)` tensor, channel-major then row then column.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl StateTensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> StateTensor {
        StateTensor {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn plane(&self, channel: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.data[(channel * self.height + row) * self.width + col]
    }
}

/// Encodes a state. Site-derived channels are zero on cells without a site;
/// player-wide channels (amounts, mover, swap) fill the whole plane.
pub fn encode_state(
    spec: &GameSpec,
    grid: &GridMap,
    layout: &StateChannelLayout,
    state: &GameState,
) -> StateTensor {
    let mut t = StateTensor::zeros(layout.len(), grid.height, grid.width);
    encode_state_into(spec, grid, layout, state, &mut t.data);
    t
}

/// Writes the encoding into a zeroed buffer of length `C·H·W`.
pub fn encode_state_into(
    spec: &GameSpec,
    grid: &GridMap,
    layout: &StateChannelLayout,
    state: &GameState,
    out: &mut [f32],
) {
    let plane = grid.cells();
    debug_assert_eq!(out.len(), layout.len() * plane);
    let offsets = spec.container_offsets();
    let container_of = |site: usize| offsets.iter().rposition(|&o| o <= site).unwrap_or(0);
    let last_cell = |age: usize, end: LastMoveEnd| -> Option<usize> {
        let n = state.last_moves.len();
        let m: &Move = state.last_moves.get(n.checked_sub(age + 1)?)?;
        let site = match end {
            LastMoveEnd::From => m.from?,
            LastMoveEnd::To => m.to?,
        };
        Some(grid.flat_cell(site))
    };
    for (c, spec_c) in layout.channels.iter().enumerate() {
        let dst = &mut out[c * plane..(c + 1) * plane];
        match *spec_c {
            ChannelSpec::Piece { piece } => {
                for (site, cell) in state.cells.iter().enumerate() {
                    if cell.top() == Some(piece as u16) {
                        dst[grid.flat_cell(site)] = 1.0;
                    }
                }
            }
            ChannelSpec::PieceBottom { piece, layer } => {
                for (site, cell) in state.cells.iter().enumerate() {
                    if let Cell::Stack(s) = cell {
                        if s.get(layer) == Some(&(piece as u16)) {
                            dst[grid.flat_cell(site)] = 1.0;
                        }
                    } else if layer == 0 && cell.top() == Some(piece as u16) {
                        dst[grid.flat_cell(site)] = 1.0;
                    }
                }
            }
            ChannelSpec::PieceTop { piece, layer } => {
                for (site, cell) in state.cells.iter().enumerate() {
                    if let Cell::Stack(s) = cell {
                        let idx = s.len().checked_sub(layer + 1);
                        if idx.map(|i| s[i]) == Some(piece as u16) {
                            dst[grid.flat_cell(site)] = 1.0;
                        }
                    } else if layer == 0 && cell.top() == Some(piece as u16) {
                        dst[grid.flat_cell(site)] = 1.0;
                    }
                }
            }
            ChannelSpec::StackHeight => {
                for (site, cell) in state.cells.iter().enumerate() {
                    dst[grid.flat_cell(site)] = cell.height() as f32;
                }
            }
            ChannelSpec::PieceCount => {
                for (site, cell) in state.cells.iter().enumerate() {
                    dst[grid.flat_cell(site)] = cell.count() as f32;
                }
            }
            ChannelSpec::Amount { player } => {
                dst.fill(state.amounts.get(player.index()).copied().unwrap_or(0) as f32);
            }
            ChannelSpec::Mover { player } => {
                if state.mover == player {
                    dst.fill(1.0);
                }
            }
            ChannelSpec::LocalState { bucket } => {
                for (site, &v) in state.local_state.iter().enumerate() {
                    if (v as usize).min(LOCAL_STATE_BUCKETS - 1) == bucket {
                        dst[grid.flat_cell(site)] = 1.0;
                    }
                }
            }
            ChannelSpec::Swap => {
                if state.swap_occurred {
                    dst.fill(1.0);
                }
            }
            ChannelSpec::Container { index } => {
                for site in 0..grid.placement.len() {
                    if container_of(site) == index {
                        dst[grid.flat_cell(site)] = 1.0;
                    }
                }
            }
            ChannelSpec::LastMove { age, end } => {
                if let Some(cell) = last_cell(age, end) {
                    dst[cell] = 1.0;
                }
            }
        }
    }
}
