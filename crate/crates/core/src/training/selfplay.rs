use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{TrainConfig, TrainError};
use crate::codec::Codec;
use crate::engine::{self, Game, Move, Outcome};
use crate::nn::Sample;
use crate::search::{search, Evaluator, SearchConfig};
use crate::Player;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryStep {
    /// Encoded state before the move.
    pub input: Vec<f32>,
    /// Logit of every legal move, in engine order.
    pub legal: Vec<usize>,
    /// Root visit distribution over distinct logits.
    pub targets: Vec<(usize, f32)>,
    pub mover: Player,
    pub played: Move,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub game_name: String,
    pub seed: u64,
    pub steps: Vec<TrajectoryStep>,
    pub outcome: Outcome,
    /// The game hit the ply cap and was scored as a draw.
    pub capped: bool,
}

impl Trajectory {
    /// Outcome seen from the mover at step `i`.
    pub fn z(&self, i: usize) -> f32 {
        self.outcome.score(self.steps[i].mover) as f32
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample> + '_ {
        self.steps.iter().enumerate().map(|(i, s)| Sample {
            input: s.input.clone(),
            legal: s.legal.clone(),
            targets: s.targets.clone(),
            z: self.z(i),
        })
    }
}

/// Plays one game against itself with noisy PUCT search.
pub fn selfplay_game(
    game: &Game,
    codec: &Codec,
    evaluator: &dyn Evaluator,
    config: &TrainConfig,
    seed: u64,
) -> Result<Trajectory, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = engine::initial_state(game);
    let cap = 4 * game.total_sites();
    let mut steps = Vec::new();
    let mut search_cfg = SearchConfig::puct(config.selfplay_iterations);
    search_cfg.exploration = config.exploration;
    search_cfg.root_noise = Some(config.root_noise);

    while state.outcome().is_none() && steps.len() < cap {
        search_cfg.temperature = if (steps.len() as u32) < config.temperature_plies {
            config.temperature
        } else {
            0.0
        };
        let result = search(game, codec, &state, &search_cfg, Some(evaluator), rng.random())?;
        let played = result.chosen_move().clone();
        steps.push(TrajectoryStep {
            input: codec.encode_state(game.spec(), &state).data,
            legal: result.logits,
            targets: result.logit_targets,
            mover: state.mover,
            played: played.clone(),
        });
        engine::apply_in_place(game, &mut state, &played);
    }
    let outcome = state.outcome();
    Ok(Trajectory {
        game_name: game.name().to_string(),
        seed,
        steps,
        capped: outcome.is_none(),
        outcome: outcome.unwrap_or(Outcome::Draw),
    })
}
