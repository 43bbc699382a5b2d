use std::collections::BTreeMap;

use serde::Serialize;

use super::grid::GridMap;
use crate::dsl::GameSpec;
use crate::engine::{Move, MoveKind};

pub const PASS_CHANNEL: usize = 0;
pub const SWAP_CHANNEL: usize = 1;
/// Largest encoded row/column displacement of a from-to move.
pub const DELTA_CLIP: i64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MoveMode {
    /// One channel indexed by the destination only.
    Placement,
    /// Channels indexed by clipped displacement and stack levels.
    FromTo,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MoveChannelLayout {
    pub mode: MoveMode,
    /// Total logit channels `A`.
    pub channels: usize,
    pub delta_clip: i64,
    pub level_clip: i64,
}

impl MoveChannelLayout {
    pub fn pass_channel(&self) -> usize {
        PASS_CHANNEL
    }

    pub fn swap_channel(&self) -> usize {
        SWAP_CHANNEL
    }

    /// Number of movement channels following pass and swap.
    pub fn movement_channels(&self) -> usize {
        self.channels - 2
    }
}

pub fn move_layout(spec: &GameSpec) -> MoveChannelLayout {
    if spec.flags.placement_only {
        return MoveChannelLayout {
            mode: MoveMode::Placement,
            channels: 3,
            delta_clip: DELTA_CLIP,
            level_clip: 0,
        };
    }
    let level_clip = if spec.flags.is_stacking { 2 } else { 0 };
    let span = (2 * DELTA_CLIP + 1) as usize;
    let levels = (level_clip + 1) as usize;
    MoveChannelLayout {
        mode: MoveMode::FromTo,
        channels: 2 + span * span * levels * levels,
        delta_clip: DELTA_CLIP,
        level_clip,
    }
}

/// Position of a move in the `(A, H, W)` policy output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LogitIndex {
    pub channel: usize,
    pub row: usize,
    pub col: usize,
}

impl LogitIndex {
    pub fn flat(self, grid: &GridMap) -> usize {
        (self.channel * grid.height + self.row) * grid.width + self.col
    }
}

/// Movement channel offset (0-based, before the pass and swap channels) of
/// a displacement and level range.
pub fn movement_offset(layout: &MoveChannelLayout, dx: i64, dy: i64, l_min: i64, l_max: i64) -> usize {
    let m = layout.delta_clip;
    let n = layout.level_clip;
    let span = 2 * m + 1;
    let dx = dx.clamp(-m, m) + m;
    let dy = dy.clamp(-m, m) + m;
    let lo = l_min.clamp(0, n);
    let range = (l_max - l_min).clamp(0, n);
    (((dx * span + dy) * (n + 1) + lo) * (n + 1) + range) as usize
}

pub fn encode_move(grid: &GridMap, layout: &MoveChannelLayout, mv: &Move) -> LogitIndex {
    match mv.kind {
        MoveKind::Pass => LogitIndex { channel: PASS_CHANNEL, row: 0, col: 0 },
        MoveKind::Swap => LogitIndex { channel: SWAP_CHANNEL, row: 0, col: 0 },
        MoveKind::Play => {
            let to = mv.to.expect("play moves have a destination");
            let (row, col) = grid.cell_of(to);
            let channel = match layout.mode {
                MoveMode::Placement => 2,
                MoveMode::FromTo => {
                    let (fr, fc) = grid.cell_of(mv.from.unwrap_or(to));
                    let dx = row as i64 - fr as i64;
                    let dy = col as i64 - fc as i64;
                    2 + movement_offset(layout, dx, dy, mv.level_min as i64, mv.level_max as i64)
                }
            };
            LogitIndex { channel, row, col }
        }
    }
}

/// Flat logit of each move, in input order.
pub fn move_logits(grid: &GridMap, layout: &MoveChannelLayout, moves: &[Move]) -> Vec<usize> {
    moves.iter().map(|m| encode_move(grid, layout, m).flat(grid)).collect()
}

/// Groups moves by shared logit; any group with more than one member is an
/// alias class.
pub fn logit_partition(grid: &GridMap, layout: &MoveChannelLayout, moves: &[Move]) -> BTreeMap<usize, Vec<Move>> {
    let mut out: BTreeMap<usize, Vec<Move>> = BTreeMap::new();
    for m in moves {
        out.entry(encode_move(grid, layout, m).flat(grid))
            .or_default()
            .push(m.clone());
    }
    out
}
