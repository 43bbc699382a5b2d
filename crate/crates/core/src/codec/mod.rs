//! Tensor encodings: sites onto a grid, states into channel stacks, and
//! moves into policy-logit positions. Nothing in here is game specific.

mod grid;
mod moves;
mod state;

use std::fmt::Write;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dsl::GameSpec;
use crate::engine::{GameState, Move};

pub use grid::{build_grid, GridMap, Separator, COORD_TOLERANCE};
pub use moves::{
    encode_move, logit_partition, move_layout, move_logits, movement_offset, LogitIndex,
    MoveChannelLayout, MoveMode, DELTA_CLIP, PASS_CHANNEL, SWAP_CHANNEL,
};
pub use state::{
    encode_state, encode_state_into, state_layout, ChannelSpec, LastMoveEnd, StateChannelLayout,
    StateTensor, LOCAL_STATE_BUCKETS, STACK_BOTTOM_LAYERS, STACK_TOP_LAYERS,
};

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("game has no containers")]
    NoContainers,
    #[error("container of {capacity} sites does not fit beside a board of extent {limit}")]
    UnsupportedLayout { capacity: usize, limit: usize },
    #[error("site {site} collides with another site at grid cell ({row}, {col})")]
    Collision { site: usize, row: usize, col: usize },
}

/// Grid and both layouts of one game, computed once and shared.
#[derive(Clone, Debug)]
pub struct Codec {
    pub grid: GridMap,
    pub state_layout: StateChannelLayout,
    pub move_layout: MoveChannelLayout,
}

impl Codec {
    pub fn new(spec: &GameSpec) -> Result<Codec, CodecError> {
        Ok(Codec {
            grid: build_grid(&spec.containers)?,
            state_layout: state_layout(spec),
            move_layout: move_layout(spec),
        })
    }

    /// Input channels `C`.
    pub fn channels(&self) -> usize {
        self.state_layout.len()
    }

    /// Policy channels `A`.
    pub fn actions(&self) -> usize {
        self.move_layout.channels
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    /// Length of the flattened policy output `A·H·W`.
    pub fn logit_count(&self) -> usize {
        self.actions() * self.grid.cells()
    }

    pub fn encode_state(&self, spec: &GameSpec, state: &GameState) -> StateTensor {
        encode_state(spec, &self.grid, &self.state_layout, state)
    }

    pub fn move_logits(&self, moves: &[Move]) -> Vec<usize> {
        move_logits(&self.grid, &self.move_layout, moves)
    }

    /// Human-readable channel table; also the input to the layout hashes.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "grid {} rows x {} columns", self.grid.height, self.grid.width);
        match self.grid.dummy_separator {
            Some(Separator::Row(r)) => {
                let _ = writeln!(out, "separator row {r}");
            }
            Some(Separator::Col(c)) => {
                let _ = writeln!(out, "separator column {c}");
            }
            None => {}
        }
        let _ = writeln!(out, "state channels C = {}", self.channels());
        for (i, c) in self.state_layout.channels.iter().enumerate() {
            let _ = writeln!(out, "  {i:>3}  {c}");
        }
        let mode = match self.move_layout.mode {
            MoveMode::Placement => "placement",
            MoveMode::FromTo => "from-to",
        };
        let _ = writeln!(
            out,
            "move channels A = {} ({mode}, delta clip {}, level clip {})",
            self.actions(),
            self.move_layout.delta_clip,
            self.move_layout.level_clip
        );
        out
    }

    /// SHA-256 (hex) over the state layout and grid.
    pub fn state_layout_hash(&self) -> String {
        let mut text = format!("grid {} {} {:?}\n", self.grid.height, self.grid.width, self.grid.dummy_separator);
        for (i, (r, c)) in self.grid.placement.iter().enumerate() {
            let _ = writeln!(text, "site {i} {r} {c}");
        }
        for c in &self.state_layout.channels {
            let _ = writeln!(text, "{c}");
        }
        hex_digest(&text)
    }

    /// SHA-256 (hex) over the move layout and grid extent.
    pub fn move_layout_hash(&self) -> String {
        hex_digest(&format!(
            "{:?} {} {} {} {} {}",
            self.move_layout.mode,
            self.move_layout.channels,
            self.move_layout.delta_clip,
            self.move_layout.level_clip,
            self.grid.height,
            self.grid.width
        ))
    }
}

fn hex_digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Golden fixture text: a game name, a state dump, and the tensor values one
/// per token in channel-major order.
///
/// ```text
/// game hex-5
/// state
/// <state dump lines>
/// tensor 16 5 13
/// 0 0 1 0 ...
/// ```
pub fn format_golden(game: &str, state_dump: &str, tensor: &StateTensor) -> String {
    let mut out = format!("game {game}\nstate\n{state_dump}");
    if !state_dump.ends_with('\n') {
        out.push('\n');
    }
    let _ = writeln!(out, "tensor {} {} {}", tensor.channels, tensor.height, tensor.width);
    let plane = tensor.height * tensor.width;
    for ch in tensor.data.chunks(plane.max(1)) {
        let vals: Vec<String> = ch.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", vals.join(" "));
    }
    out
}

/// Inverse of [`format_golden`]: `(game, state dump, tensor)`.
pub fn parse_golden(text: &str) -> Option<(String, String, StateTensor)> {
    let mut lines = text.lines();
    let game = lines.next()?.strip_prefix("game ")?.trim().to_string();
    if lines.next()?.trim() != "state" {
        return None;
    }
    let mut dump = String::new();
    let header = loop {
        let line = lines.next()?;
        if let Some(rest) = line.strip_prefix("tensor ") {
            break rest;
        }
        dump.push_str(line);
        dump.push('\n');
    };
    let dims: Vec<usize> = header.split_whitespace().map(|t| t.parse().ok()).collect::<Option<_>>()?;
    let [channels, height, width] = dims[..] else { return None };
    let data: Vec<f32> = lines
        .flat_map(str::split_whitespace)
        .map(|t| t.parse().ok())
        .collect::<Option<_>>()?;
    if data.len() != channels * height * width {
        return None;
    }
    Some((game, dump, StateTensor { channels, height, width, data }))
}

#[cfg(test)]
mod tests;
