//! Self-play data generation, a FIFO replay buffer, and the optimization
//! loop that turns both into checkpoints.

mod buffer;
mod selfplay;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Codec, CodecError};
use crate::engine::{EngineError, Game};
use crate::nn::{save_checkpoint, Checkpoint, Network, NetworkConfig, NnError, Sgd, SgdConfig};
use crate::search::{RootNoise, SearchError};

pub use buffer::ReplayBuffer;
pub use selfplay::{selfplay_game, Trajectory, TrajectoryStep};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid training configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    /// PUCT iterations per self-play move.
    pub selfplay_iterations: u32,
    pub exploration: f64,
    pub root_noise: RootNoise,
    /// Moves are sampled with this temperature for the first
    /// `temperature_plies` plies, then chosen by visit count.
    pub temperature: f64,
    pub temperature_plies: u32,
    pub workers: usize,
    /// Trajectories that may wait for the trainer before workers block.
    pub queue_capacity: usize,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Self-play games to consume; optimizer steps are spread evenly over them.
    pub games: u64,
    pub total_steps: u64,
    pub steps_per_checkpoint: u64,
    /// Steps averaged into one metrics record.
    pub log_interval: u64,
    /// Wall-clock budget; training stops early and checkpoints when it runs out.
    pub time_limit_secs: Option<f64>,
    pub network: NetworkConfig,
    pub optimizer: SgdConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            selfplay_iterations: 400,
            exploration: 1.5,
            root_noise: RootNoise::default(),
            temperature: 1.0,
            temperature_plies: 8,
            workers: 1,
            queue_capacity: 16,
            buffer_capacity: 20_000,
            batch_size: 64,
            games: 600,
            total_steps: 3000,
            steps_per_checkpoint: 500,
            log_interval: 10,
            time_limit_secs: None,
            network: NetworkConfig::default(),
            optimizer: SgdConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<TrainConfig, TrainError> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| TrainError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [
            ("selfplay_iterations", self.selfplay_iterations as u64),
            ("workers", self.workers as u64),
            ("queue_capacity", self.queue_capacity as u64),
            ("buffer_capacity", self.buffer_capacity as u64),
            ("batch_size", self.batch_size as u64),
            ("steps_per_checkpoint", self.steps_per_checkpoint),
            ("log_interval", self.log_interval),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(TrainError::Config(format!("{name} must be positive")));
        }
        if self.total_steps > 0 && self.games == 0 {
            return Err(TrainError::Config("games must be positive when total_steps is".into()));
        }
        if !(self.exploration > 0.0) || !(self.temperature >= 0.0) {
            return Err(TrainError::Config("exploration must be positive, temperature non-negative".into()));
        }
        Ok(())
    }

    /// Optimizer steps that should have happened once `games_done` games
    /// have been consumed.
    fn step_target(&self, games_done: u64) -> u64 {
        if self.games == 0 {
            return 0;
        }
        (self.total_steps as u128 * games_done.min(self.games) as u128 / self.games as u128) as u64
    }
}

/// One metrics-log line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: u64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub total_loss: f64,
    pub buffer_size: usize,
    pub games: u64,
    pub snapshot: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub steps: u64,
    pub games: u64,
    pub metrics: Vec<MetricsRecord>,
    pub checkpoints: Vec<PathBuf>,
    pub final_checkpoint: PathBuf,
    pub timed_out: bool,
}

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CONFIG_FILE: &str = "config.toml";
pub const LATEST_CHECKPOINT: &str = "latest.lpgc";

pub fn checkpoint_name(step: u64) -> String {
    format!("ckpt-{step:08}.lpgc")
}

struct Trainer<'a> {
    game: &'a Game,
    codec: &'a Codec,
    config: &'a TrainConfig,
    out_dir: &'a Path,
    net: Network<f32>,
    opt: Sgd<f32>,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    step: u64,
    games: u64,
    snapshot: u64,
    pending: Vec<crate::nn::LossBreakdown>,
    metrics: Vec<MetricsRecord>,
    metrics_out: BufWriter<fs::File>,
    checkpoints: Vec<PathBuf>,
}

impl Trainer<'_> {
    fn consume(&mut self, traj: Trajectory) {
        self.games += 1;
        self.buffer.extend(traj.samples());
    }

    fn train_to(&mut self, target: u64) -> Result<(), TrainError> {
        while self.step < target && !self.buffer.is_empty() {
            let batch = self.buffer.sample(self.config.batch_size, &mut self.rng);
            let (loss, grads) = self.net.loss_and_gradients(&batch, self.config.optimizer.weight_decay)?;
            self.opt.step(&mut self.net, &grads)?;
            self.step += 1;
            self.pending.push(loss);
            if self.step % self.config.log_interval == 0 {
                self.flush_metrics()?;
            }
            if self.step % self.config.steps_per_checkpoint == 0 {
                self.checkpoint()?;
            }
        }
        Ok(())
    }

    fn flush_metrics(&mut self) -> Result<(), TrainError> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let k = self.pending.len() as f64;
        let mean = |f: fn(&crate::nn::LossBreakdown) -> f64| self.pending.iter().map(f).sum::<f64>() / k;
        let rec = MetricsRecord {
            step: self.step,
            policy_loss: mean(|l| l.policy),
            value_loss: mean(|l| l.value),
            total_loss: mean(|l| l.total),
            buffer_size: self.buffer.len(),
            games: self.games,
            snapshot: self.snapshot,
        };
        self.pending.clear();
        serde_json::to_writer(&mut self.metrics_out, &rec).map_err(std::io::Error::from)?;
        self.metrics_out.write_all(b"\n")?;
        self.metrics_out.flush()?;
        self.metrics.push(rec);
        Ok(())
    }

    fn checkpoint(&mut self) -> Result<(), TrainError> {
        let ckpt = Checkpoint::new(self.game.name(), self.codec, self.step, self.net.clone(), Some(self.opt.clone()));
        let path = self.out_dir.join(checkpoint_name(self.step));
        save_checkpoint(&ckpt, &path)?;
        save_checkpoint(&ckpt, &self.out_dir.join(LATEST_CHECKPOINT))?;
        if self.checkpoints.last() != Some(&path) {
            self.checkpoints.push(path);
        }
        Ok(())
    }
}

/// Runs self-play and optimization, writing `config.toml`, `metrics.jsonl`
/// and checkpoints into `out_dir`.
///
/// With one worker, games are played inline between optimizer steps and the
/// whole run is a pure function of the configuration. With more, workers
/// play against the most recently published network and hand trajectories
/// to the trainer through a bounded queue.
pub fn train(game: &Game, config: &TrainConfig, out_dir: &Path) -> Result<TrainReport, TrainError> {
    config.validate()?;
    let codec = Codec::new(game.spec())?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(CONFIG_FILE), config.to_toml())?;
    let net = Network::<f32>::for_codec(&codec, config.network, config.seed)?;
    let opt = Sgd::new(config.optimizer, &net);
    let mut trainer = Trainer {
        game,
        codec: &codec,
        config,
        out_dir,
        net,
        opt,
        buffer: ReplayBuffer::new(config.buffer_capacity),
        rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0f_7a11),
        step: 0,
        games: 0,
        snapshot: 0,
        pending: Vec::new(),
        metrics: Vec::new(),
        metrics_out: BufWriter::new(fs::File::create(out_dir.join(METRICS_FILE))?),
        checkpoints: Vec::new(),
    };
    trainer.checkpoint()?;
    let deadline = config.time_limit_secs.map(|s| Instant::now() + Duration::from_secs_f64(s));
    let expired = || deadline.is_some_and(|d| Instant::now() >= d);
    let mut timed_out = false;

    if config.total_steps > 0 {
        if config.workers == 1 {
            while trainer.step < config.total_steps && trainer.games < config.games {
                if expired() {
                    timed_out = true;
                    break;
                }
                let traj = selfplay_game(game, &codec, &trainer.net, config, game_seed(config.seed, trainer.games))?;
                trainer.consume(traj);
                let target = config.step_target(trainer.games);
                trainer.train_to(target)?;
                trainer.snapshot += 1;
            }
        } else {
            timed_out = train_threaded(game, &codec, config, &mut trainer, &expired)?;
        }
        if !timed_out {
            trainer.train_to(config.total_steps)?;
        }
        trainer.flush_metrics()?;
        if trainer.checkpoints.last() != Some(&out_dir.join(checkpoint_name(trainer.step))) {
            trainer.checkpoint()?;
        }
    }

    Ok(TrainReport {
        steps: trainer.step,
        games: trainer.games,
        final_checkpoint: trainer.checkpoints.last().cloned().expect("initial checkpoint written"),
        metrics: trainer.metrics,
        checkpoints: trainer.checkpoints,
        timed_out,
    })
}

/// Seed of the `index`-th self-play game of a run.
pub fn game_seed(base: u64, index: u64) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index)
}

fn train_threaded(
    game: &Game,
    codec: &Codec,
    config: &TrainConfig,
    trainer: &mut Trainer<'_>,
    expired: &dyn Fn() -> bool,
) -> Result<bool, TrainError> {
    let snapshot = RwLock::new(Arc::new(trainer.net.clone()));
    let next_game = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = crossbeam_channel::bounded::<Result<Trajectory, TrainError>>(config.queue_capacity);
    let mut timed_out = false;

    std::thread::scope(|scope| -> Result<(), TrainError> {
        for _ in 0..config.workers {
            let tx = tx.clone();
            let (snapshot, next_game, stop) = (&snapshot, &next_game, &stop);
            scope.spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    let index = next_game.fetch_add(1, Ordering::Relaxed);
                    let net = Arc::clone(&snapshot.read().expect("snapshot lock"));
                    let result = selfplay_game(game, codec, &*net, config, game_seed(config.seed, index));
                    if tx.send(result).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        let result = (|| {
            while trainer.step < config.total_steps && trainer.games < config.games {
                if expired() {
                    timed_out = true;
                    break;
                }
                let traj = rx
                    .recv_timeout(Duration::from_millis(200))
                    .map(Some)
                    .or_else(|e| if e.is_timeout() { Ok(None) } else { Err(e) })
                    .map_err(|_| TrainError::Config("all self-play workers exited".into()))?;
                let Some(traj) = traj else { continue };
                trainer.consume(traj?);
                trainer.train_to(config.step_target(trainer.games))?;
                trainer.snapshot += 1;
                *snapshot.write().expect("snapshot lock") = Arc::new(trainer.net.clone());
            }
            Ok(())
        })();
        stop.store(true, Ordering::Relaxed);
        // Unblock workers waiting on a full queue.
        drop(rx);
        result
    })?;
    Ok(timed_out)
}

#[cfg(test)]
mod tests;
