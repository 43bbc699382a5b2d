use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::nn::{load_checkpoint, Sample};

fn tiny_net() -> NetworkConfig {
    NetworkConfig { trunk_channels: 4, residual_blocks: 1, value_hidden: 4 }
}

fn quick_config() -> TrainConfig {
    TrainConfig {
        seed: 3,
        selfplay_iterations: 8,
        batch_size: 8,
        games: 4,
        total_steps: 12,
        steps_per_checkpoint: 5,
        log_interval: 2,
        network: tiny_net(),
        ..TrainConfig::default()
    }
}

fn sample(tag: f32) -> Sample {
    Sample { input: vec![tag], legal: vec![0], targets: vec![(0, 1.0)], z: 0.0 }
}

#[test]
fn buffer_is_bounded_fifo() {
    let mut buf = ReplayBuffer::new(3);
    assert!(buf.sample(4, &mut ChaCha8Rng::seed_from_u64(0)).is_empty());
    for i in 0..5 {
        buf.push(sample(i as f32));
        assert!(buf.len() <= 3);
    }
    let kept: Vec<f32> = buf.iter().map(|s| s.input[0]).collect();
    assert_eq!(kept, vec![2.0, 3.0, 4.0]);
    let drawn = buf.sample(50, &mut ChaCha8Rng::seed_from_u64(1));
    assert_eq!(drawn.len(), 50);
    assert!(drawn.iter().all(|s| s.input[0] >= 2.0));
}

#[test]
fn selfplay_trajectories_are_consistent() {
    let game = Game::builtin("gomoku-9").unwrap();
    let codec = Codec::new(game.spec()).unwrap();
    let net = Network::<f32>::for_codec(&codec, tiny_net(), 0).unwrap();
    let cfg = quick_config();
    let a = selfplay_game(&game, &codec, &net, &cfg, 42).unwrap();
    let b = selfplay_game(&game, &codec, &net, &cfg, 42).unwrap();
    assert_eq!(a, b);
    assert!(a.steps.len() <= 81);
    assert!(!a.capped);
    for (i, step) in a.steps.iter().enumerate() {
        let z = a.z(i);
        assert!([-1.0, 0.0, 1.0].contains(&z));
        if i > 0 {
            assert_ne!(step.mover, a.steps[i - 1].mover);
            assert_eq!(z, -a.z(i - 1));
        }
        let total: f32 = step.targets.iter().map(|t| t.1).sum();
        assert!((total - 1.0).abs() < 1e-5);
        assert!(step.targets.iter().all(|t| step.legal.contains(&t.0)));
        assert_eq!(step.input.len(), codec.channels() * codec.height() * codec.width());
    }
}

#[test]
fn zero_steps_writes_only_initial_checkpoint() {
    let game = Game::builtin("hex-5").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainConfig { total_steps: 0, ..quick_config() };
    let report = train(&game, &cfg, dir.path()).unwrap();
    assert_eq!(report.steps, 0);
    assert_eq!(report.games, 0);
    assert_eq!(report.checkpoints, vec![dir.path().join(checkpoint_name(0))]);
    let ckpts: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("ckpt-"))
        .collect();
    assert_eq!(ckpts.len(), 1);
    assert_eq!(fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap(), "");
    let saved = TrainConfig::from_toml(&fs::read_to_string(dir.path().join(CONFIG_FILE)).unwrap()).unwrap();
    assert_eq!(saved, cfg);
}

#[test]
fn single_worker_runs_are_identical() {
    let game = Game::builtin("hex-5").unwrap();
    let cfg = quick_config();
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let r1 = train(&game, &cfg, d1.path()).unwrap();
    let r2 = train(&game, &cfg, d2.path()).unwrap();
    assert_eq!(r1.steps, 12);
    assert_eq!(r1.games, 4);
    assert_eq!(r1.metrics, r2.metrics);
    assert_eq!(r1.metrics.len(), 6);
    assert_eq!(
        fs::read(d1.path().join(METRICS_FILE)).unwrap(),
        fs::read(d2.path().join(METRICS_FILE)).unwrap()
    );
    let names: Vec<String> = r1
        .checkpoints
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["ckpt-00000000.lpgc", "ckpt-00000005.lpgc", "ckpt-00000010.lpgc", "ckpt-00000012.lpgc"]);
    for name in &names {
        assert_eq!(fs::read(d1.path().join(name)).unwrap(), fs::read(d2.path().join(name)).unwrap());
    }
    let last = load_checkpoint(&r1.final_checkpoint).unwrap();
    assert_eq!(last.step(), 12);
    last.verify(&Codec::new(game.spec()).unwrap()).unwrap();
    assert_eq!(fs::read(d1.path().join(LATEST_CHECKPOINT)).unwrap(), fs::read(&r1.final_checkpoint).unwrap());
    for rec in &r1.metrics {
        assert!(rec.buffer_size <= cfg.buffer_capacity);
        assert!(rec.total_loss.is_finite());
    }
}

#[test]
fn threaded_workers_complete_the_schedule() {
    let game = Game::builtin("hex-5").unwrap();
    let cfg = TrainConfig { workers: 3, queue_capacity: 2, ..quick_config() };
    let dir = tempfile::tempdir().unwrap();
    let report = train(&game, &cfg, dir.path()).unwrap();
    assert_eq!(report.steps, 12);
    assert_eq!(report.games, 4);
    assert_eq!(load_checkpoint(&report.final_checkpoint).unwrap().step(), 12);
}

#[test]
fn config_parsing_and_validation() {
    let cfg = TrainConfig::from_toml("seed = 9\nworkers = 2\n[network]\ntrunk_channels = 8\n").unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.network.trunk_channels, 8);
    assert_eq!(cfg.network.residual_blocks, 4);
    assert_eq!(cfg.selfplay_iterations, 400);
    assert!(TrainConfig::from_toml("bogus = 1").is_err());
    assert!(TrainConfig::from_toml("batch_size = 0").is_err());
    assert_eq!(TrainConfig::from_toml(&TrainConfig::default().to_toml()).unwrap(), TrainConfig::default());
}

#[test]
fn step_schedule_spreads_evenly() {
    let cfg = TrainConfig { games: 200, total_steps: 2000, ..TrainConfig::default() };
    assert_eq!(cfg.step_target(0), 0);
    assert_eq!(cfg.step_target(1), 10);
    assert_eq!(cfg.step_target(200), 2000);
    assert_eq!(cfg.step_target(500), 2000);
}
