use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use ggp_core::codec::Codec;
use ggp_core::dsl::{builtin_games, parse_game};
use ggp_core::engine::{self, dump_state, Game};
use ggp_core::harness::{self, Agent, AgentSpec, MatchOptions};
use ggp_core::nn::load_checkpoint;
use ggp_core::training::{train, TrainConfig};

#[derive(Parser)]
#[command(name = "ggp", version, about = "General game playing: rules, search, self-play training, evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List built-in games.
    Games,
    /// Parse and validate a game description file.
    Parse { file: PathBuf },
    /// Show the grid and channel layouts of a game.
    Inspect { game: String },
    /// Count leaf nodes of the game tree to a fixed depth.
    Perft { game: String, depth: u32 },
    /// Self-play training.
    Train {
        game: String,
        /// TOML training configuration; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for checkpoints and metrics.
        #[arg(long, default_value = "runs/latest")]
        out: PathBuf,
    },
    /// Play a match between two agents.
    Eval {
        game: String,
        /// Checkpoint used by `puct` agents.
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// Trained PUCT (40 iterations) against pure UCT (800 iterations x 10 rollouts), 300 games.
        #[arg(long, conflicts_with_all = ["agent_a", "agent_b"])]
        paper_protocol: bool,
        /// `random`, `pure-uct:ITERSxROLLOUTS` or `puct:ITERS[:PATH]`.
        #[arg(long)]
        agent_a: Option<String>,
        #[arg(long)]
        agent_b: Option<String>,
        #[arg(long)]
        games: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Pair games so each seed is played from both seats.
        #[arg(long)]
        mirror_seeds: bool,
        /// Write per-game JSON lines and a summary line here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Play against an agent in the terminal.
    Play {
        game: String,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// Seat of the human player (1 or 2).
        #[arg(long, default_value_t = 1)]
        seat: u32,
        /// Search iterations of the computer player.
        #[arg(long, default_value_t = 200)]
        iterations: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_game(name: &str) -> Result<Game> {
    if builtin_games().contains_key(name) {
        return Ok(Game::builtin(name)?);
    }
    let path = Path::new(name);
    if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(Game::from_source(&text)?);
    }
    bail!("unknown game `{name}` (not a built-in name or an existing file)")
}

fn parse_agent(text: &str, ckpt: Option<&Path>) -> Result<AgentSpec> {
    let mut parts = text.splitn(3, ':');
    let kind = parts.next().unwrap_or_default();
    let arg = parts.next();
    match kind {
        "random" => Ok(AgentSpec::Random),
        "pure-uct" => {
            let (it, ro) = arg
                .and_then(|a| a.split_once('x'))
                .ok_or_else(|| anyhow!("expected pure-uct:ITERSxROLLOUTS, got `{text}`"))?;
            Ok(AgentSpec::PureUct {
                iterations: it.parse().context("pure-uct iterations")?,
                rollouts: ro.parse().context("pure-uct rollouts")?,
            })
        }
        "puct" => {
            let iterations = arg.ok_or_else(|| anyhow!("expected puct:ITERS[:PATH]"))?.parse().context("puct iterations")?;
            let checkpoint = match parts.next() {
                Some(p) => PathBuf::from(p),
                None => ckpt.ok_or_else(|| anyhow!("puct agent needs --ckpt or puct:ITERS:PATH"))?.to_path_buf(),
            };
            Ok(AgentSpec::PuctCheckpoint { iterations, checkpoint })
        }
        _ => bail!("unknown agent `{text}`"),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Games => {
            for (name, src) in builtin_games() {
                let spec = parse_game(src)?;
                println!("{name:<16} {} sites, {} players", spec.total_sites(), spec.num_players);
            }
        }
        Command::Parse { file } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let game = Game::from_source(&text)?;
            let spec = game.spec();
            let f = &spec.flags;
            println!("ok: {} ({} sites, {} containers, {} piece types)", spec.name, spec.total_sites(), spec.containers.len(), spec.piece_types.len());
            println!(
                "flags: swap={} stacking={} counts={} amounts={} placement_only={}",
                f.uses_swap_rule, f.is_stacking, f.uses_counts, f.uses_amounts, f.placement_only
            );
        }
        Command::Inspect { game } => {
            let game = load_game(&game)?;
            let codec = Codec::new(game.spec())?;
            println!("game {}", game.name());
            println!("grid {} columns x {} rows", codec.width(), codec.height());
            println!("C = {}", codec.channels());
            println!("A = {}", codec.actions());
            print!("{}", codec.describe());
            println!("state layout sha256 {}", codec.state_layout_hash());
            println!("move layout sha256 {}", codec.move_layout_hash());
        }
        Command::Perft { game, depth } => {
            let game = load_game(&game)?;
            println!("{}", engine::perft(&game, &engine::initial_state(&game), depth));
        }
        Command::Train { game, config, out } => {
            let game = load_game(&game)?;
            let cfg = match config {
                Some(path) => TrainConfig::from_toml(
                    &std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?,
                )?,
                None => TrainConfig::default(),
            };
            let report = train(&game, &cfg, &out)?;
            if let Some(last) = report.metrics.last() {
                println!(
                    "step {} games {} total loss {:.4} (policy {:.4}, value {:.4})",
                    last.step, last.games, last.total_loss, last.policy_loss, last.value_loss
                );
            }
            if report.timed_out {
                println!("stopped at the time limit");
            }
            println!("final checkpoint {}", report.final_checkpoint.display());
        }
        Command::Eval { game, ckpt, paper_protocol, agent_a, agent_b, games, seed, threads, mirror_seeds, report } => {
            let game = load_game(&game)?;
            let (a, b, default_games) = if paper_protocol {
                let ckpt = ckpt.ok_or_else(|| anyhow!("--paper-protocol needs --ckpt"))?;
                (AgentSpec::reference_trained(ckpt), AgentSpec::reference_baseline(), harness::REFERENCE_GAMES)
            } else {
                let a = match agent_a {
                    Some(t) => parse_agent(&t, ckpt.as_deref())?,
                    None => AgentSpec::reference_trained(ckpt.clone().ok_or_else(|| anyhow!("--agent-a or --ckpt required"))?),
                };
                let b = match agent_b {
                    Some(t) => parse_agent(&t, ckpt.as_deref())?,
                    None => AgentSpec::reference_baseline(),
                };
                (a, b, harness::REFERENCE_GAMES)
            };
            let options = MatchOptions { games: games.unwrap_or(default_games), base_seed: seed, mirror_seeds, threads };
            let (stats, records) = harness::run_match(&game, &a, &b, &options)?;
            print!("{}", stats.table(&a.label(), &b.label()));
            if let Some(path) = report {
                harness::write_report_jsonl(&path, &stats, &records)?;
            }
        }
        Command::Play { game, ckpt, seat, iterations, seed } => {
            let game = load_game(&game)?;
            let codec = Codec::new(game.spec())?;
            let human = ggp_core::Player::from_number(seat).ok_or_else(|| anyhow!("seat must be 1 or 2"))?;
            let agent = match ckpt {
                Some(path) => {
                    let c = load_checkpoint(&path)?;
                    c.verify(&codec)?;
                    Agent::puct(iterations, Arc::new(c.network))
                }
                None => AgentSpec::PureUct { iterations, rollouts: 1 }.load(&codec)?,
            };
            play(&game, &codec, &agent, human, seed)?;
        }
    }
    Ok(())
}

fn play(game: &Game, codec: &Codec, agent: &Agent, human: ggp_core::Player, seed: u64) -> Result<()> {
    let mut state = engine::initial_state(game);
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let mut ply = 0u64;
    while state.outcome().is_none() {
        print!("{}", dump_state(&state));
        let mv = if state.mover == human {
            let moves = engine::legal_moves(game, &state)?;
            for (i, m) in moves.iter().enumerate() {
                print!("{i}:{m}  ");
            }
            println!();
            loop {
                print!("move> ");
                io::stdout().flush()?;
                let Some(line) = lines.next() else { bail!("input closed") };
                let line = line?;
                let t = line.trim();
                if let Some(m) = t.parse::<usize>().ok().and_then(|i| moves.get(i)) {
                    break m.clone();
                }
                if let Some(m) = moves.iter().find(|m| m.to_string() == t) {
                    break m.clone();
                }
                println!("not a legal move: {t}");
            }
        } else {
            let m = agent.select(game, codec, &state, seed.wrapping_add(ply))?;
            println!("computer plays {m}");
            m
        };
        state = engine::apply(game, &state, &mv)?;
        ply += 1;
    }
    print!("{}", dump_state(&state));
    println!("result: {:?}", state.outcome().expect("loop ends at a terminal state"));
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
