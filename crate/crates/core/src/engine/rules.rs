use crate::dsl::{
    DirectionSet, Edge, GameSpec, JumpChain, Ludeme, NoMovesResult, Opening, Polarity, Region,
    StepTarget,
};
use smallvec::SmallVec;

use crate::geometry::{Adjacency, Container};
use crate::player::Player;

use super::state::{Cell, Effect, GameState, Move, MoveKind, Outcome, PieceId, SiteId};

/// Compiled lookup tables for one game.
#[derive(Debug)]
pub struct Rules {
    pub(crate) total_sites: usize,
    board_len: usize,
    board: Container,
    /// Every neighbour on the board regardless of adjacency class.
    orthogonal: Vec<Vec<SiteId>>,
    /// (positive, negative) direction indices for each line axis.
    axes: Vec<(usize, usize)>,
    start: Vec<(PieceId, Vec<SiteId>, u32)>,
    play: Vec<PlayRule>,
    end: Vec<EndRule>,
    uses_swap: bool,
    stacking: bool,
    counts: bool,
    /// Piece id -> owning colour.
    piece_owner: Vec<Player>,
}

#[derive(Debug)]
enum PlayRule {
    Place {
        piece: [Option<PieceId>; 2],
    },
    Step {
        piece: [Option<PieceId>; 2],
        /// Direction indices per colour.
        dirs: [Vec<usize>; 2],
        target: StepTarget,
    },
    Hop {
        piece: [Option<PieceId>; 2],
        chain: JumpChain,
        opening: Option<Vec<SiteId>>,
    },
}

#[derive(Debug)]
enum EndRule {
    /// All line clauses are evaluated together: a losing line beats a
    /// winning line made by the same placement.
    Lines(Vec<(usize, Polarity)>),
    Connect {
        role: Player,
        a: Vec<bool>,
        b: Vec<bool>,
    },
    Reach {
        role: Player,
        mask: Vec<bool>,
    },
    NoMoves(NoMovesResult),
}

fn region_mask(board: &Container, region: &Region) -> Vec<bool> {
    let sites = &board.sites;
    let min_row = sites.iter().map(|s| s.row).min().unwrap_or(0);
    let max_row = sites.iter().map(|s| s.row).max().unwrap_or(0);
    let row_extent = |row: i32| {
        let cols = sites.iter().filter(|s| s.row == row).map(|s| s.col);
        let lo = cols.clone().min().unwrap_or(0);
        (lo, cols.max().unwrap_or(0))
    };
    sites
        .iter()
        .map(|s| match region {
            Region::All => true,
            Region::Edge(Edge::North) => s.row == max_row,
            Region::Edge(Edge::South) => s.row == min_row,
            Region::Edge(Edge::West) => s.col == row_extent(s.row).0,
            Region::Edge(Edge::East) => s.col == row_extent(s.row).1,
            Region::Rows(a, b) => (*a..=*b).contains(&s.row),
            Region::Cols(a, b) => (*a..=*b).contains(&s.col),
            Region::Parity(p) => (s.row + s.col).rem_euclid(2) == *p as i32,
            Region::Sites(ids) => ids.contains(&s.id),
        })
        .collect()
}

fn center_or_corner(board: &Container) -> Vec<SiteId> {
    let max_row = board.sites.iter().map(|s| s.row).max().unwrap_or(0);
    let max_col = board.sites.iter().map(|s| s.col).max().unwrap_or(0);
    let center_rows = [max_row / 2, (max_row + 1) / 2];
    let center_cols = [max_col / 2, (max_col + 1) / 2];
    board
        .sites
        .iter()
        .filter(|s| {
            let corner = (s.row == 0 || s.row == max_row) && (s.col == 0 || s.col == max_col);
            let center = center_rows.contains(&s.row) && center_cols.contains(&s.col);
            corner || center
        })
        .map(|s| s.id)
        .collect()
}

impl Rules {
    pub(crate) fn compile(spec: &GameSpec) -> Rules {
        let board = spec.board().clone();
        let dirs = board.directions();
        let find_dir = |dr: i32, dc: i32| dirs.iter().position(|d| d.dr == dr && d.dc == dc);
        let pieces_for = |name: &str| {
            [
                spec.piece_id(name, Player::ONE).map(|p| p as PieceId),
                spec.piece_id(name, Player::TWO).map(|p| p as PieceId),
            ]
        };
        let axes = board
            .tiling
            .line_axes()
            .iter()
            .filter_map(|&(dr, dc)| Some((find_dir(dr, dc)?, find_dir(-dr, -dc)?)))
            .collect();
        let orthogonal = board
            .sites
            .iter()
            .map(|s| s.orthogonal_neighbors.clone())
            .collect();

        let mut start = Vec::new();
        for l in &spec.rules.start {
            if let Ludeme::StartPlace {
                piece,
                owner,
                region,
                local_state,
            } = l
            {
                let id = spec.piece_id(piece, *owner).expect("validated piece") as PieceId;
                let mask = region_mask(&board, region);
                let sites = (0..board.len()).filter(|&i| mask[i]).collect();
                start.push((id, sites, *local_state));
            }
        }

        let mut play = Vec::new();
        for l in &spec.rules.play {
            match l {
                Ludeme::PlaceEmpty { piece } => play.push(PlayRule::Place {
                    piece: pieces_for(piece),
                }),
                Ludeme::StepMove {
                    piece,
                    directions,
                    target,
                } => {
                    let mut per_role: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
                    for (role, fwd) in [(0usize, 1i32), (1, -1)] {
                        let out = &mut per_role[role];
                        for set in directions {
                            let found: Vec<usize> = match set {
                                DirectionSet::Forward => find_dir(fwd, 0).into_iter().collect(),
                                DirectionSet::ForwardDiagonal => [find_dir(fwd, 1), find_dir(fwd, -1)]
                                    .into_iter()
                                    .flatten()
                                    .collect(),
                                DirectionSet::Orthogonal => (0..dirs.len())
                                    .filter(|&d| dirs[d].class == Adjacency::Orthogonal)
                                    .collect(),
                                DirectionSet::Diagonal => (0..dirs.len())
                                    .filter(|&d| dirs[d].class == Adjacency::Diagonal)
                                    .collect(),
                                DirectionSet::All => (0..dirs.len()).collect(),
                            };
                            for d in found {
                                if !out.contains(&d) {
                                    out.push(d);
                                }
                            }
                        }
                    }
                    play.push(PlayRule::Step {
                        piece: pieces_for(piece),
                        dirs: per_role,
                        target: *target,
                    });
                }
                Ludeme::HopCapture {
                    piece,
                    chain,
                    opening,
                } => play.push(PlayRule::Hop {
                    piece: pieces_for(piece),
                    chain: *chain,
                    opening: opening.map(|Opening::CenterOrCorner| center_or_corner(&board)),
                }),
                _ => {}
            }
        }

        let mut end = Vec::new();
        for l in &spec.rules.end {
            match l {
                Ludeme::LineEnd { length, result } => {
                    if let Some(EndRule::Lines(group)) =
                        end.iter_mut().find(|e| matches!(e, EndRule::Lines(_)))
                    {
                        group.push((*length, *result));
                    } else {
                        end.push(EndRule::Lines(vec![(*length, *result)]));
                    }
                }
                Ludeme::ConnectEnd { owner, regions } => end.push(EndRule::Connect {
                    role: *owner,
                    a: region_mask(&board, &regions[0]),
                    b: region_mask(&board, &regions[1]),
                }),
                Ludeme::ReachEnd { owner, region } => end.push(EndRule::Reach {
                    role: *owner,
                    mask: region_mask(&board, region),
                }),
                Ludeme::NoMovesEnd { result } => end.push(EndRule::NoMoves(*result)),
                _ => {}
            }
        }

        Rules {
            total_sites: spec.total_sites(),
            board_len: board.len(),
            orthogonal,
            axes,
            start,
            play,
            end,
            uses_swap: spec.flags.uses_swap_rule,
            stacking: spec.flags.is_stacking,
            counts: spec.flags.uses_counts,
            piece_owner: spec.piece_types.iter().map(|p| p.owner).collect(),
            board,
        }
    }

    fn owner_of(&self, cell: &Cell) -> Option<Player> {
        cell.top().map(|p| self.piece_owner[p as usize])
    }

    fn put(&self, cell: &mut Cell, piece: PieceId) {
        match cell {
            Cell::Empty if self.stacking => *cell = Cell::Stack(vec![piece]),
            Cell::Empty => *cell = Cell::Piece { piece, count: 1 },
            Cell::Stack(s) => s.push(piece),
            Cell::Piece { piece: p, count } if self.counts && *p == piece => *count += 1,
            Cell::Piece { .. } => *cell = Cell::Piece { piece, count: 1 },
        }
    }

    fn take_top(&self, cell: &mut Cell) -> Option<PieceId> {
        match cell {
            Cell::Empty => None,
            Cell::Piece { piece, count } => {
                let p = *piece;
                if *count > 1 {
                    *count -= 1;
                } else {
                    *cell = Cell::Empty;
                }
                Some(p)
            }
            Cell::Stack(s) => {
                let p = s.pop();
                if s.is_empty() {
                    *cell = Cell::Empty;
                }
                p
            }
        }
    }

    pub(crate) fn initial_state(&self, spec: &GameSpec) -> GameState {
        let mut state = GameState::blank(self.total_sites, spec.num_players);
        for (piece, sites, local) in &self.start {
            for &s in sites {
                self.put(&mut state.cells[s], *piece);
                state.local_state[s] = *local;
            }
        }
        state.outcome = self.evaluate_end(&state);
        state
    }

    /// Generates play moves (no swap or pass) in unspecified order. With
    /// `first_only` it stops as soon as one move is found.
    fn play_moves(&self, state: &GameState, out: &mut Vec<Move>, first_only: bool) {
        let role = state.role_of(state.mover);
        let r = role.index().min(1);
        for rule in &self.play {
            match rule {
                PlayRule::Place { piece } => {
                    let Some(piece) = piece[r] else { continue };
                    for site in 0..self.board_len {
                        if state.cells[site].is_empty() {
                            out.push(Move::play(None, site, &[Effect::Place(piece)]));
                            if first_only {
                                return;
                            }
                        }
                    }
                }
                PlayRule::Step {
                    piece,
                    dirs,
                    target,
                } => {
                    let Some(piece) = piece[r] else { continue };
                    for site in 0..self.board_len {
                        let cell = &state.cells[site];
                        if cell.top() != Some(piece) {
                            continue;
                        }
                        let level = if self.stacking { cell.height() as u32 - 1 } else { 0 };
                        for &d in &dirs[r] {
                            let Some(to) = self.board.step(site, d) else { continue };
                            let dest = &state.cells[to];
                            let enemy = self.owner_of(dest).is_some_and(|o| o != role);
                            let effects: &[Effect] = match target {
                                StepTarget::Empty if dest.is_empty() => &[],
                                StepTarget::Enemy if enemy => &[Effect::Capture(to)],
                                StepTarget::EmptyOrEnemy if dest.is_empty() => &[],
                                StepTarget::EmptyOrEnemy if enemy => &[Effect::Capture(to)],
                                StepTarget::Any => &[],
                                _ => continue,
                            };
                            let mut m = Move::play(Some(site), to, effects);
                            m.level_min = level;
                            m.level_max = level;
                            out.push(m);
                            if first_only {
                                return;
                            }
                        }
                    }
                }
                PlayRule::Hop {
                    piece,
                    chain,
                    opening,
                } => {
                    let Some(piece) = piece[r] else { continue };
                    if let Some(candidates) = opening {
                        if state.move_number == 0 {
                            for &s in candidates {
                                if state.cells[s].top() == Some(piece) {
                                    out.push(Move::play(Some(s), s, &[Effect::Remove(s)]));
                                }
                            }
                            continue;
                        }
                        if state.move_number == 1 {
                            let hole = state.last_moves.last().and_then(|m| m.to);
                            if let Some(hole) = hole.filter(|&h| h < self.board_len) {
                                for &s in &self.orthogonal[hole] {
                                    if state.cells[s].top() == Some(piece) {
                                        out.push(Move::play(Some(s), s, &[Effect::Remove(s)]));
                                    }
                                }
                            }
                            continue;
                        }
                    }
                    for site in 0..self.board_len {
                        if state.cells[site].top() != Some(piece) {
                            continue;
                        }
                        let mut captured = Vec::new();
                        self.hops(state, role, site, site, None, *chain, &mut captured, out);
                        if first_only && !out.is_empty() {
                            return;
                        }
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn hops(
        &self,
        state: &GameState,
        role: Player,
        start: SiteId,
        at: SiteId,
        heading: Option<usize>,
        chain: JumpChain,
        captured: &mut Vec<SiteId>,
        out: &mut Vec<Move>,
    ) {
        let dirs = self.board.directions();
        for d in 0..dirs.len() {
            if dirs[d].class != Adjacency::Orthogonal {
                continue;
            }
            if chain == JumpChain::Straight && heading.is_some_and(|h| h != d) {
                continue;
            }
            let Some(over) = self.board.step(at, d) else { continue };
            let Some(land) = self.board.step(over, d) else { continue };
            let jumpable = self.owner_of(&state.cells[over]).is_some_and(|o| o != role)
                && !captured.contains(&over);
            let free = land == start || state.cells[land].is_empty();
            if !jumpable || !free {
                continue;
            }
            captured.push(over);
            let effects: Vec<Effect> = captured.iter().map(|&c| Effect::Capture(c)).collect();
            out.push(Move::play(Some(start), land, &effects));
            if chain != JumpChain::Single {
                self.hops(state, role, start, land, Some(d), chain, captured, out);
            }
            captured.pop();
        }
    }

    pub(crate) fn legal_moves_into(&self, _spec: &GameSpec, state: &GameState, out: &mut Vec<Move>) {
        out.clear();
        self.play_moves(state, out, false);
        if self.uses_swap && state.move_number == 1 && !state.swap_occurred {
            out.push(Move::swap());
        }
        if out.is_empty() {
            out.push(Move::pass());
        }
        out.sort_unstable();
        out.dedup();
    }

    fn has_play_move(&self, state: &GameState) -> bool {
        let mut buf = Vec::new();
        self.play_moves(state, &mut buf, true);
        !buf.is_empty() || (self.uses_swap && state.move_number == 1 && !state.swap_occurred)
    }

    pub(crate) fn apply_in_place(&self, _spec: &GameSpec, state: &mut GameState, mv: &Move) {
        match mv.kind {
            MoveKind::Pass => state.consecutive_passes = state.consecutive_passes.saturating_add(1),
            MoveKind::Swap => {
                state.swap_occurred = true;
                state.consecutive_passes = 0;
            }
            MoveKind::Play => {
                state.consecutive_passes = 0;
                for e in &mv.effects {
                    if let Effect::Capture(s) | Effect::Remove(s) = *e {
                        state.cells[s] = Cell::Empty;
                        state.local_state[s] = 0;
                    }
                }
                if let (Some(from), Some(to)) = (mv.from, mv.to) {
                    if from != to {
                        if let Some(p) = self.take_top(&mut state.cells[from]) {
                            self.put(&mut state.cells[to], p);
                        }
                        if state.cells[from].is_empty() {
                            state.local_state[from] = 0;
                        }
                        state.local_state[to] = 0;
                    }
                }
                for e in &mv.effects {
                    if let (Effect::Place(p), Some(to)) = (*e, mv.to) {
                        self.put(&mut state.cells[to], p);
                        state.local_state[to] = 0;
                    }
                }
            }
        }
        if state.last_moves.is_full() {
            state.last_moves.remove(0);
        }
        state.last_moves.push(mv.clone());
        state.move_number += 1;
        state.mover = state.mover.other();
        state.outcome = self.evaluate_end(state);
    }

    /// Length of the run of `role` pieces through `site` along one axis.
    fn run_length(&self, state: &GameState, role: Player, site: SiteId, axis: (usize, usize)) -> usize {
        let mut n = 1;
        for d in [axis.0, axis.1] {
            let mut at = site;
            while let Some(next) = self.board.step(at, d) {
                if self.owner_of(&state.cells[next]) != Some(role) {
                    break;
                }
                n += 1;
                at = next;
            }
        }
        n
    }

    fn connects(&self, state: &GameState, role: Player, from: SiteId, a: &[bool], b: &[bool]) -> bool {
        let mut seen: SmallVec<[bool; 256]> = SmallVec::from_elem(false, self.board_len);
        let mut stack = vec![from];
        seen[from] = true;
        let (mut hit_a, mut hit_b) = (false, false);
        while let Some(s) = stack.pop() {
            hit_a |= a[s];
            hit_b |= b[s];
            if hit_a && hit_b {
                return true;
            }
            for &n in &self.orthogonal[s] {
                if !seen[n] && self.owner_of(&state.cells[n]) == Some(role) {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        false
    }

    /// Terminal check after the last move (or for a fresh state).
    pub(crate) fn evaluate_end(&self, state: &GameState) -> Option<Outcome> {
        let landed = state
            .last_moves
            .last()
            .filter(|m| m.kind == MoveKind::Play)
            .and_then(|m| m.to)
            .filter(|&to| to < self.board_len);
        for rule in &self.end {
            match rule {
                EndRule::Lines(group) => {
                    let Some(to) = landed else { continue };
                    let Some(role) = self.owner_of(&state.cells[to]) else { continue };
                    let runs: Vec<usize> = self
                        .axes
                        .iter()
                        .map(|&ax| self.run_length(state, role, to, ax))
                        .collect();
                    let lose = group
                        .iter()
                        .any(|&(len, p)| p == Polarity::Lose && runs.contains(&len));
                    let win = group
                        .iter()
                        .any(|&(len, p)| p == Polarity::Win && runs.iter().any(|&r| r >= len));
                    let owner = state.controller(role);
                    if lose {
                        return Some(Outcome::Win(owner.other()));
                    }
                    if win {
                        return Some(Outcome::Win(owner));
                    }
                }
                EndRule::Connect { role, a, b } => {
                    let Some(to) = landed else { continue };
                    if self.owner_of(&state.cells[to]) == Some(*role)
                        && self.connects(state, *role, to, a, b)
                    {
                        return Some(Outcome::Win(state.controller(*role)));
                    }
                }
                EndRule::Reach { role, mask } => {
                    let Some(to) = landed else { continue };
                    if mask[to] && self.owner_of(&state.cells[to]) == Some(*role) {
                        return Some(Outcome::Win(state.controller(*role)));
                    }
                }
                EndRule::NoMoves(result) => {
                    if *result == NoMovesResult::Pass {
                        if state.consecutive_passes >= 2 {
                            return Some(Outcome::Draw);
                        }
                        continue;
                    }
                    if !self.has_play_move(state) {
                        let stuck = state.mover;
                        return Some(match result {
                            NoMovesResult::Win => Outcome::Win(stuck),
                            NoMovesResult::Lose => Outcome::Win(stuck.other()),
                            NoMovesResult::Draw | NoMovesResult::Pass => Outcome::Draw,
                        });
                    }
                }
            }
        }
        // Without a no-moves clause a stuck player ends the game in a draw.
        let handles_stuck = self.end.iter().any(|e| matches!(e, EndRule::NoMoves(_)));
        if !handles_stuck && !self.has_play_move(state) {
            return Some(Outcome::Draw);
        }
        None
    }
}
