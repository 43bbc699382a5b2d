//! Head-to-head match evaluation between agents.
//!
//! Draws score half a win in every reported percentage.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Codec, CodecError};
use crate::engine::{self, EngineError, Game, GameState, Move, Outcome};
use crate::nn::{load_checkpoint, Network, NnError};
use crate::search::{search, SearchConfig, SearchError};
use crate::Player;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("checkpoint {path}: {source}")]
    Checkpoint { path: PathBuf, source: NnError },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid match: {0}")]
    Config(String),
}

/// Iterations of the trained agent under the reference protocol.
pub const REFERENCE_TRAINED_ITERATIONS: u32 = 40;
/// Iterations and rollouts per iteration of the untrained baseline.
pub const REFERENCE_BASELINE_ITERATIONS: u32 = 800;
pub const REFERENCE_BASELINE_ROLLOUTS: u32 = 10;
pub const REFERENCE_GAMES: usize = 300;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AgentSpec {
    Random,
    PureUct { iterations: u32, rollouts: u32 },
    PuctCheckpoint { iterations: u32, checkpoint: PathBuf },
}

impl AgentSpec {
    pub fn reference_trained(checkpoint: impl Into<PathBuf>) -> AgentSpec {
        AgentSpec::PuctCheckpoint {
            iterations: REFERENCE_TRAINED_ITERATIONS,
            checkpoint: checkpoint.into(),
        }
    }

    pub fn reference_baseline() -> AgentSpec {
        AgentSpec::PureUct {
            iterations: REFERENCE_BASELINE_ITERATIONS,
            rollouts: REFERENCE_BASELINE_ROLLOUTS,
        }
    }

    pub fn label(&self) -> String {
        match self {
            AgentSpec::Random => "random".into(),
            AgentSpec::PureUct { iterations, rollouts } => format!("pure-uct {iterations}x{rollouts}"),
            AgentSpec::PuctCheckpoint { iterations, checkpoint } => {
                format!("puct {iterations} ({})", checkpoint.display())
            }
        }
    }

    /// Resolves checkpoints and checks them against the game's layouts.
    pub fn load(&self, codec: &Codec) -> Result<Agent, HarnessError> {
        Ok(match self {
            AgentSpec::Random => Agent::Random,
            AgentSpec::PureUct { iterations, rollouts } => Agent::Search {
                config: SearchConfig::pure_uct(*iterations, *rollouts),
                net: None,
            },
            AgentSpec::PuctCheckpoint { iterations, checkpoint } => {
                let wrap = |source| HarnessError::Checkpoint { path: checkpoint.clone(), source };
                let ckpt = load_checkpoint(checkpoint).map_err(wrap)?;
                ckpt.verify(codec).map_err(wrap)?;
                Agent::Search {
                    config: SearchConfig::puct(*iterations),
                    net: Some(Arc::new(ckpt.network)),
                }
            }
        })
    }
}

/// A ready-to-play agent. Search agents always pick the most visited move.
#[derive(Clone, Debug)]
pub enum Agent {
    Random,
    Search {
        config: SearchConfig,
        net: Option<Arc<Network<f32>>>,
    },
}

impl Agent {
    pub fn puct(iterations: u32, net: Arc<Network<f32>>) -> Agent {
        Agent::Search {
            config: SearchConfig::puct(iterations),
            net: Some(net),
        }
    }

    pub fn select(&self, game: &Game, codec: &Codec, state: &GameState, seed: u64) -> Result<Move, HarnessError> {
        match self {
            Agent::Random => {
                let moves = engine::legal_moves(game, state)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(moves.choose(&mut rng).expect("non-terminal").clone())
            }
            Agent::Search { config, net } => {
                let eval = net.as_deref().map(|n| n as &dyn crate::search::Evaluator);
                let result = search(game, codec, state, config, eval, seed)?;
                Ok(result.chosen_move().clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub index: usize,
    pub seed: u64,
    /// Seat number (1 or 2) of agent A.
    pub a_seat: u32,
    /// Winning seat number, or `None` for a draw.
    pub winner_seat: Option<u32>,
    /// A's score: 1 for a win, 0.5 for a draw, 0 for a loss.
    pub a_score: f64,
    pub moves: Vec<String>,
    /// Stopped at the ply cap and scored as a draw.
    pub capped: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeatStats {
    pub games: usize,
    pub wins_a: usize,
    pub wins_b: usize,
    pub draws: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchStats {
    pub games: usize,
    pub wins_a: usize,
    pub wins_b: usize,
    pub draws: usize,
    /// A's score in percent, draws counted as half a win.
    pub win_percentage_a: f64,
    /// Wilson 95% interval on `win_percentage_a`.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Index 0: A in seat 1; index 1: A in seat 2.
    pub per_seat: [SeatStats; 2],
    pub mean_length: f64,
}

impl MatchStats {
    pub fn from_records(records: &[GameRecord]) -> MatchStats {
        let mut s = MatchStats {
            games: records.len(),
            wins_a: 0,
            wins_b: 0,
            draws: 0,
            win_percentage_a: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
            per_seat: [SeatStats::default(); 2],
            mean_length: 0.0,
        };
        let mut score = 0.0;
        for r in records {
            let seat = &mut s.per_seat[(r.a_seat - 1) as usize];
            seat.games += 1;
            match r.winner_seat {
                None => {
                    s.draws += 1;
                    seat.draws += 1;
                }
                Some(w) if w == r.a_seat => {
                    s.wins_a += 1;
                    seat.wins_a += 1;
                }
                Some(_) => {
                    s.wins_b += 1;
                    seat.wins_b += 1;
                }
            }
            score += r.a_score;
            s.mean_length += r.moves.len() as f64;
        }
        if !records.is_empty() {
            let n = records.len() as f64;
            s.mean_length /= n;
            s.win_percentage_a = 100.0 * score / n;
            let (lo, hi) = wilson_interval(score, n, 1.96);
            s.ci_low = 100.0 * lo;
            s.ci_high = 100.0 * hi;
        }
        s
    }

    pub fn table(&self, label_a: &str, label_b: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "A: {label_a}");
        let _ = writeln!(out, "B: {label_b}");
        let _ = writeln!(out, "{:<12}{:>8}{:>8}{:>8}{:>8}", "", "games", "A wins", "B wins", "draws");
        for (name, seat) in [("A as seat 1", &self.per_seat[0]), ("A as seat 2", &self.per_seat[1])] {
            let _ = writeln!(out, "{name:<12}{:>8}{:>8}{:>8}{:>8}", seat.games, seat.wins_a, seat.wins_b, seat.draws);
        }
        let _ = writeln!(out, "{:<12}{:>8}{:>8}{:>8}{:>8}", "total", self.games, self.wins_a, self.wins_b, self.draws);
        let _ = writeln!(
            out,
            "A win rate {:.2}% (95% CI {:.2}% to {:.2}%, draws count half), mean length {:.1} plies",
            self.win_percentage_a, self.ci_low, self.ci_high, self.mean_length
        );
        out
    }
}

/// Wilson score interval for `successes` out of `n` trials, as fractions.
pub fn wilson_interval(successes: f64, n: f64, z: f64) -> (f64, f64) {
    if n <= 0.0 {
        return (0.0, 1.0);
    }
    let p = successes / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchOptions {
    pub games: usize,
    pub base_seed: u64,
    /// Games `2k` and `2k + 1` share a seed so that each pair differs only
    /// in seat assignment.
    pub mirror_seeds: bool,
    pub threads: usize,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            games: REFERENCE_GAMES,
            base_seed: 0,
            mirror_seeds: false,
            threads: 1,
        }
    }
}

/// Plays one game; `a_seat` is the seat agent A occupies.
pub fn play_game(
    game: &Game,
    codec: &Codec,
    a: &Agent,
    b: &Agent,
    a_seat: Player,
    seed: u64,
) -> Result<(Vec<Move>, Option<Outcome>), HarnessError> {
    let mut state = engine::initial_state(game);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut moves = Vec::new();
    let cap = 4 * game.total_sites();
    while state.outcome().is_none() && moves.len() < cap {
        let agent = if state.mover == a_seat { a } else { b };
        let mv = agent.select(game, codec, &state, rng.random())?;
        engine::apply_in_place(game, &mut state, &mv);
        moves.push(mv);
    }
    Ok((moves, state.outcome()))
}

/// Plays `options.games` games, alternating seats, on `options.threads`
/// threads. Results depend only on the agents and seeds.
pub fn run_match(
    game: &Game,
    a: &AgentSpec,
    b: &AgentSpec,
    options: &MatchOptions,
) -> Result<(MatchStats, Vec<GameRecord>), HarnessError> {
    if options.games == 0 {
        return Err(HarnessError::Config("games must be at least 1".into()));
    }
    let codec = Codec::new(game.spec())?;
    let agent_a = a.load(&codec)?;
    let agent_b = b.load(&codec)?;
    run_match_with(game, &codec, &agent_a, &agent_b, options)
}

pub fn run_match_with(
    game: &Game,
    codec: &Codec,
    a: &Agent,
    b: &Agent,
    options: &MatchOptions,
) -> Result<(MatchStats, Vec<GameRecord>), HarnessError> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<GameRecord, HarnessError>>>> =
        Mutex::new((0..options.games).map(|_| None).collect());
    let play = |index: usize| -> Result<GameRecord, HarnessError> {
        let seed = options.base_seed + if options.mirror_seeds { index / 2 } else { index } as u64;
        let a_seat = if index % 2 == 0 { Player::ONE } else { Player::TWO };
        let (moves, outcome) = play_game(game, codec, a, b, a_seat, seed)?;
        let winner_seat = match outcome {
            Some(Outcome::Win(p)) => Some(p.number()),
            _ => None,
        };
        Ok(GameRecord {
            index,
            seed,
            a_seat: a_seat.number(),
            winner_seat,
            a_score: outcome.map_or(0.0, |o| o.score(a_seat)) * 0.5 + 0.5,
            moves: moves.iter().map(|m| m.to_string()).collect(),
            capped: outcome.is_none(),
        })
    };
    std::thread::scope(|scope| {
        for _ in 0..options.threads.max(1) {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= options.games {
                    break;
                }
                let r = play(index);
                results.lock().expect("results lock")[index] = Some(r);
            });
        }
    });
    let records = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every game was played"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((MatchStats::from_records(&records), records))
}

/// Writes one JSON line per game followed by a summary line.
pub fn write_report_jsonl(path: &Path, stats: &MatchStats, records: &[GameRecord]) -> Result<(), HarnessError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, &serde_json::json!({ "type": "game", "game": r }))
            .map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut out, &serde_json::json!({ "type": "summary", "stats": stats }))
        .map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
