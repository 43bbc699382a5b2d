//! Monte-Carlo tree search: pure UCT with random rollouts, and PUCT guided
//! by a policy/value evaluator.
//!
//! The tree keeps every legal move as its own branch, so moves that share a
//! policy logit are still searched separately; only the training targets
//! merge them.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::Codec;
use crate::engine::{self, Game, GameState, Move};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("cannot search from a terminal state")]
    Terminal,
    #[error("PUCT search needs an evaluator")]
    MissingEvaluator,
    #[error("evaluator does not match this game: {0}")]
    Incompatible(String),
    #[error("invalid search configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    PureUct,
    Puct,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootNoise {
    /// Dirichlet concentration is `alpha_scale / number of root moves`.
    pub alpha_scale: f64,
    pub weight: f64,
}

impl Default for RootNoise {
    fn default() -> Self {
        RootNoise {
            alpha_scale: 10.0,
            weight: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub mode: SearchMode,
    pub iterations: u32,
    /// Random playouts averaged per expansion; pure UCT only.
    pub rollouts_per_iteration: u32,
    pub exploration: f64,
    pub root_noise: Option<RootNoise>,
    /// 0 picks the most visited move (first in move order on ties).
    pub temperature: f64,
}

impl SearchConfig {
    pub fn pure_uct(iterations: u32, rollouts: u32) -> SearchConfig {
        SearchConfig {
            mode: SearchMode::PureUct,
            iterations,
            rollouts_per_iteration: rollouts,
            exploration: std::f64::consts::SQRT_2,
            root_noise: None,
            temperature: 0.0,
        }
    }

    pub fn puct(iterations: u32) -> SearchConfig {
        SearchConfig {
            mode: SearchMode::Puct,
            iterations,
            rollouts_per_iteration: 1,
            exploration: 1.5,
            root_noise: None,
            temperature: 0.0,
        }
    }

    fn validate(&self) -> Result<(), SearchError> {
        if self.iterations == 0 {
            return Err(SearchError::Config("iterations must be positive".into()));
        }
        if self.mode == SearchMode::PureUct && self.rollouts_per_iteration == 0 {
            return Err(SearchError::Config("rollouts per iteration must be positive".into()));
        }
        if !(self.exploration > 0.0) || !(self.temperature >= 0.0) {
            return Err(SearchError::Config("exploration must be positive and temperature non-negative".into()));
        }
        Ok(())
    }
}

/// Policy and value for one state.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Prior per legal move, in move order. Moves sharing a logit share its
    /// probability, so these need not sum to 1.
    pub priors: Vec<f64>,
    /// Value for the player to move, in (-1, 1).
    pub value: f64,
}

/// Something that scores states; must be callable from many threads.
pub trait Evaluator: Sync {
    /// `logits[i]` is the flat policy index of `moves[i]`.
    fn evaluate(&self, game: &Game, codec: &Codec, state: &GameState, moves: &[Move], logits: &[usize]) -> Evaluation;

    /// Checks that this evaluator was built for the given layouts.
    fn check(&self, _codec: &Codec) -> Result<(), SearchError> {
        Ok(())
    }
}

/// Equal probability per distinct logit, value 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformEvaluator;

impl Evaluator for UniformEvaluator {
    fn evaluate(&self, _: &Game, _: &Codec, _: &GameState, _: &[Move], logits: &[usize]) -> Evaluation {
        let distinct = logits.iter().collect::<std::collections::BTreeSet<_>>().len();
        Evaluation {
            priors: vec![1.0 / distinct as f64; logits.len()],
            value: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    /// Root legal moves in engine order.
    pub moves: Vec<Move>,
    pub visits: Vec<u32>,
    /// Index into `moves`.
    pub chosen: usize,
    /// Root value for the player to move, in [-1, 1].
    pub value_estimate: f64,
    /// Flat policy logit of each root move.
    pub logits: Vec<usize>,
    /// Visit distribution over distinct logits, aliased moves summed.
    pub logit_targets: Vec<(usize, f32)>,
}

impl SearchResult {
    pub fn chosen_move(&self) -> &Move {
        &self.moves[self.chosen]
    }

    pub fn total_visits(&self) -> u32 {
        self.visits.iter().sum()
    }
}

/// Sums visits per logit and normalises.
pub fn alias_targets(logits: &[usize], visits: &[u32]) -> Vec<(usize, f32)> {
    let mut sums: BTreeMap<usize, u64> = BTreeMap::new();
    for (&l, &v) in logits.iter().zip(visits) {
        *sums.entry(l).or_default() += v as u64;
    }
    let total: u64 = sums.values().sum();
    if total == 0 {
        return Vec::new();
    }
    sums.into_iter()
        .map(|(l, v)| (l, (v as f64 / total as f64) as f32))
        .collect()
}

struct Node {
    state: GameState,
    parent: Option<usize>,
    moves: Vec<Move>,
    children: Vec<Option<usize>>,
    priors: Vec<f64>,
    visits: u32,
    /// Sum of backed-up values from the perspective of the player who moved
    /// into this node.
    value_sum: f64,
    /// Exact value for the player who moved into this node, if terminal.
    terminal: Option<f64>,
    expanded: bool,
    untried: Vec<usize>,
}

impl Node {
    fn new(state: GameState, parent: Option<usize>) -> Node {
        let terminal = state.outcome().map(|o| o.score(state.mover.other()));
        Node {
            state,
            parent,
            moves: Vec::new(),
            children: Vec::new(),
            priors: Vec::new(),
            visits: 0,
            value_sum: 0.0,
            terminal,
            expanded: false,
            untried: Vec::new(),
        }
    }

    fn q(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.value_sum / self.visits as f64
        }
    }
}

/// Plays uniformly random moves until the game ends or `4 · sites` plies
/// pass, returning the score for `perspective` (0 at the cap).
pub fn random_rollout<R: Rng>(game: &Game, state: &GameState, perspective: crate::Player, rng: &mut R) -> f64 {
    if let Some(o) = state.outcome() {
        return o.score(perspective);
    }
    let cap = 4 * game.total_sites();
    let mut s = state.clone();
    let mut buf = Vec::new();
    for _ in 0..cap {
        game.rules().legal_moves_into(game.spec(), &s, &mut buf);
        let mv = buf.choose(rng).expect("non-terminal states have moves");
        engine::apply_in_place(game, &mut s, mv);
        if let Some(o) = s.outcome() {
            return o.score(perspective);
        }
    }
    0.0
}

struct Tree<'a> {
    game: &'a Game,
    codec: &'a Codec,
    config: &'a SearchConfig,
    evaluator: Option<&'a dyn Evaluator>,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
}

impl Tree<'_> {
    /// Prepares move lists and priors; returns the leaf value for the
    /// player who moved into the node.
    fn expand(&mut self, id: usize, with_rollouts: bool) -> f64 {
        let node = &self.nodes[id];
        let mut moves = Vec::new();
        self.game.rules().legal_moves_into(self.game.spec(), &node.state, &mut moves);
        let n = moves.len();
        let (priors, value) = match self.config.mode {
            SearchMode::PureUct => {
                let mover = node.state.mover;
                let mut total = 0.0;
                let rollouts = if with_rollouts { self.config.rollouts_per_iteration } else { 0 };
                for _ in 0..rollouts {
                    total += random_rollout(self.game, &node.state, mover.other(), &mut self.rng);
                }
                (Vec::new(), total / rollouts.max(1) as f64)
            }
            SearchMode::Puct => {
                let logits = self.codec.move_logits(&moves);
                let eval = self
                    .evaluator
                    .expect("checked before search")
                    .evaluate(self.game, self.codec, &node.state, &moves, &logits);
                debug_assert_eq!(eval.priors.len(), n);
                (eval.priors, -eval.value)
            }
        };
        let node = &mut self.nodes[id];
        node.moves = moves;
        node.children = vec![None; n];
        node.priors = priors;
        node.untried = (0..n).collect();
        // Pure UCT tries unvisited moves in random order.
        if self.config.mode == SearchMode::PureUct {
            node.untried.shuffle(&mut self.rng);
        }
        node.expanded = true;
        value
    }

    fn child(&mut self, id: usize, k: usize) -> usize {
        if let Some(c) = self.nodes[id].children[k] {
            return c;
        }
        let state = engine::apply_trusted(self.game, &self.nodes[id].state, &self.nodes[id].moves[k]);
        let c = self.nodes.len();
        self.nodes.push(Node::new(state, Some(id)));
        self.nodes[id].children[k] = Some(c);
        c
    }

    fn select_uct(&mut self, id: usize) -> usize {
        let node = &self.nodes[id];
        let ln = (node.visits.max(1) as f64).ln();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, c) in node.children.iter().enumerate() {
            let c = &self.nodes[c.expect("fully expanded")];
            let score = c.q() + self.config.exploration * (ln / c.visits as f64).sqrt();
            if score > best_score {
                best_score = score;
                best = k;
            }
        }
        best
    }

    fn select_puct(&self, id: usize) -> usize {
        let node = &self.nodes[id];
        let sqrt_n = (node.visits as f64).sqrt();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for k in 0..node.moves.len() {
            let (q, n) = match node.children[k] {
                Some(c) => (self.nodes[c].q(), self.nodes[c].visits),
                None => (0.0, 0),
            };
            let score = q + self.config.exploration * node.priors[k] * sqrt_n / (1.0 + n as f64);
            if score > best_score {
                best_score = score;
                best = k;
            }
        }
        best
    }

    fn iterate(&mut self) {
        let mut id = 0;
        let value = loop {
            if let Some(v) = self.nodes[id].terminal {
                break v;
            }
            if !self.nodes[id].expanded {
                break self.expand(id, true);
            }
            match self.config.mode {
                SearchMode::PureUct => {
                    if let Some(k) = self.nodes[id].untried.pop() {
                        id = self.child(id, k);
                        continue;
                    }
                    let k = self.select_uct(id);
                    id = self.child(id, k);
                }
                SearchMode::Puct => {
                    let k = self.select_puct(id);
                    id = self.child(id, k);
                }
            }
        };
        // Back up, flipping perspective at every ply.
        let mut v = value;
        let mut at = Some(id);
        while let Some(n) = at {
            let node = &mut self.nodes[n];
            node.visits += 1;
            node.value_sum += v;
            v = -v;
            at = node.parent;
        }
    }

    fn add_root_noise(&mut self, noise: RootNoise) {
        let n = self.nodes[0].priors.len();
        if n < 2 {
            return;
        }
        let alpha = noise.alpha_scale / n as f64;
        let gamma = Gamma::new(alpha, 1.0).expect("positive alpha");
        let mut eta: Vec<f64> = (0..n).map(|_| gamma.sample(&mut self.rng)).collect();
        let sum: f64 = eta.iter().sum();
        if sum > 0.0 {
            eta.iter_mut().for_each(|e| *e /= sum);
        } else {
            eta.fill(1.0 / n as f64);
        }
        for (p, e) in self.nodes[0].priors.iter_mut().zip(eta) {
            *p = (1.0 - noise.weight) * *p + noise.weight * e;
        }
    }
}

/// Runs one search from `state`.
pub fn search(
    game: &Game,
    codec: &Codec,
    state: &GameState,
    config: &SearchConfig,
    evaluator: Option<&dyn Evaluator>,
    seed: u64,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    if state.is_terminal() {
        return Err(SearchError::Terminal);
    }
    if config.mode == SearchMode::Puct {
        evaluator.ok_or(SearchError::MissingEvaluator)?.check(codec)?;
    }
    let mut tree = Tree {
        game,
        codec,
        config,
        evaluator,
        nodes: vec![Node::new(state.clone(), None)],
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    // The root is expanded up front; its own evaluation is not an iteration.
    tree.expand(0, false);
    if config.mode == SearchMode::Puct {
        if let Some(noise) = config.root_noise {
            tree.add_root_noise(noise);
        }
    }
    for _ in 0..config.iterations {
        tree.iterate();
    }

    let root = &tree.nodes[0];
    let visits: Vec<u32> = root
        .children
        .iter()
        .map(|c| c.map_or(0, |c| tree.nodes[c].visits))
        .collect();
    let total: u32 = visits.iter().sum();
    let value_estimate = if total == 0 {
        0.0
    } else {
        let s: f64 = root
            .children
            .iter()
            .flatten()
            .map(|&c| tree.nodes[c].value_sum)
            .sum();
        (s / total as f64).clamp(-1.0, 1.0)
    };
    let chosen = choose(&visits, config.temperature, &mut tree.rng);
    let logits = codec.move_logits(&root.moves);
    let logit_targets = alias_targets(&logits, &visits);
    Ok(SearchResult {
        moves: root.moves.clone(),
        visits,
        chosen,
        value_estimate,
        logits,
        logit_targets,
    })
}

fn choose<R: Rng>(visits: &[u32], temperature: f64, rng: &mut R) -> usize {
    let argmax = visits
        .iter()
        .enumerate()
        .fold(0, |best, (k, &v)| if v > visits[best] { k } else { best });
    if temperature <= 0.0 || visits[argmax] == 0 {
        return argmax;
    }
    let max = visits[argmax] as f64;
    let weights: Vec<f64> = visits
        .iter()
        .map(|&v| (v as f64 / max).powf(1.0 / temperature))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if x < *w {
            return k;
        }
        x -= w;
    }
    argmax
}
