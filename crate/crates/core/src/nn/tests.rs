use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{self, Geometry};
use super::*;
use crate::codec::Codec;
use crate::engine::Game;
use crate::search::alias_targets;

const STEP: f64 = 1e-4;
const TOL: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

fn randv(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central differences of `f` at `x`, one coordinate at a time.
fn numeric_grad(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + STEP;
            let up = f(&x);
            x[i] = orig - STEP;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

fn assert_close(what: &str, analytic: &[f64], numeric: &[f64]) {
    assert_eq!(analytic.len(), numeric.len(), "{what}: length");
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        assert!(rel_err(*a, *n) < TOL, "{what}[{i}]: analytic {a} vs numeric {n}");
    }
}

fn tiny_geometry() -> Geometry {
    Geometry { batch: 2, height: 3, width: 4 }
}

#[test]
fn conv_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in [1, 3] {
        let g = tiny_geometry();
        let (cin, cout) = (2, 3);
        let x = randv(&mut rng, cin * g.n());
        let w = randv(&mut rng, cout * cin * k * k);
        let b = randv(&mut rng, cout);
        let r = randv(&mut rng, cout * g.n());
        let loss = |x: &[f64], w: &[f64], b: &[f64]| dot(&layers::conv_forward(x, cin, cout, k, g, w, b).0, &r);
        let (_, col) = layers::conv_forward(&x, cin, cout, k, g, &w, &b);
        let grads = layers::conv_backward(&r, &col, cin, cout, k, g, &w);
        assert_close("conv input", &grads.input, &numeric_grad(&x, |x| loss(x, &w, &b)));
        assert_close("conv weight", &grads.weight, &numeric_grad(&w, |w| loss(&x, w, &b)));
        assert_close("conv bias", &grads.bias, &numeric_grad(&b, |b| loss(&x, &w, b)));
    }
}

#[test]
fn conv_matches_direct_convolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = tiny_geometry();
    let (cin, cout, k) = (2, 2, 3);
    let x = randv(&mut rng, cin * g.n());
    let w = randv(&mut rng, cout * cin * 9);
    let b = randv(&mut rng, cout);
    let (y, _) = layers::conv_forward(&x, cin, cout, k, g, &w, &b);
    let n = g.n();
    for co in 0..cout {
        for bi in 0..g.batch {
            for yy in 0..g.height as isize {
                for xx in 0..g.width as isize {
                    let mut s = b[co];
                    for ci in 0..cin {
                        for ky in -1..=1isize {
                            for kx in -1..=1isize {
                                let (sy, sx) = (yy + ky, xx + kx);
                                if sy < 0 || sx < 0 || sy >= g.height as isize || sx >= g.width as isize {
                                    continue;
                                }
                                let wi = ((co * cin + ci) * 3 + (ky + 1) as usize) * 3 + (kx + 1) as usize;
                                let xi = ci * n + bi * g.plane() + sy as usize * g.width + sx as usize;
                                s += w[wi] * x[xi];
                            }
                        }
                    }
                    let yi = co * n + bi * g.plane() + yy as usize * g.width + xx as usize;
                    assert!((y[yi] - s).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn affine_relu_pool_dense_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = tiny_geometry();
    let ch = 3;
    let n = g.n();

    let x = randv(&mut rng, ch * n);
    let s = randv(&mut rng, ch);
    let o = randv(&mut rng, ch);
    let r = randv(&mut rng, ch * n);
    let (dx, ds, doff) = layers::affine_backward(&r, &x, &s, n);
    let f = |x: &[f64], s: &[f64], o: &[f64]| dot(&layers::affine_forward(x, s, o, n), &r);
    assert_close("affine x", &dx, &numeric_grad(&x, |x| f(x, &s, &o)));
    assert_close("affine scale", &ds, &numeric_grad(&s, |s| f(&x, s, &o)));
    assert_close("affine offset", &doff, &numeric_grad(&o, |o| f(&x, &s, o)));

    // Keep inputs away from the kink.
    let xr: Vec<f64> = x.iter().map(|v| if v.abs() < 0.01 { 0.5 } else { *v }).collect();
    let mut y = xr.clone();
    layers::relu_forward(&mut y);
    let mut dr = r.clone();
    layers::relu_backward(&mut dr, &y);
    let relu_loss = |x: &[f64]| {
        let mut y = x.to_vec();
        layers::relu_forward(&mut y);
        dot(&y, &r)
    };
    assert_close("relu", &dr, &numeric_grad(&xr, relu_loss));

    let rp = randv(&mut rng, ch * g.batch);
    let dp = layers::pool_backward(&rp, ch, g);
    assert_close("pool", &dp, &numeric_grad(&x, |x| dot(&layers::pool_forward(x, ch, g), &rp)));

    let (fin, fout, batch) = (4, 3, 2);
    let xd = randv(&mut rng, fin * batch);
    let w = randv(&mut rng, fout * fin);
    let b = randv(&mut rng, fout);
    let rd = randv(&mut rng, fout * batch);
    let (dx, dw, db) = layers::dense_backward(&rd, &xd, fin, fout, batch, &w);
    let f = |x: &[f64], w: &[f64], b: &[f64]| dot(&layers::dense_forward(x, fin, fout, batch, w, b), &rd);
    assert_close("dense x", &dx, &numeric_grad(&xd, |x| f(x, &w, &b)));
    assert_close("dense weight", &dw, &numeric_grad(&w, |w| f(&xd, w, &b)));
    assert_close("dense bias", &db, &numeric_grad(&b, |b| f(&xd, &w, b)));
}

fn tiny_dims() -> NetDims {
    NetDims { channels: 2, actions: 3, height: 3, width: 3 }
}

fn tiny_config() -> NetworkConfig {
    NetworkConfig { trunk_channels: 4, residual_blocks: 2, value_hidden: 3 }
}

fn random_samples(dims: NetDims, count: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let input = (0..dims.input_len()).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            let legal: Vec<usize> = (0..dims.logit_count()).filter(|_| rng.random_bool(0.5)).chain([0]).collect();
            let raw: Vec<f32> = legal.iter().map(|_| rng.random_range(0.0f32..1.0)).collect();
            let total: f32 = raw.iter().sum();
            let mut targets: Vec<(usize, f32)> = legal.iter().zip(&raw).map(|(&l, &r)| (l, r / total)).collect();
            targets.sort_by_key(|t| t.0);
            targets.dedup_by_key(|t| t.0);
            let total: f32 = targets.iter().map(|t| t.1).sum();
            for t in &mut targets {
                t.1 /= total;
            }
            Sample { input, legal, targets, z: [-1.0, 0.0, 1.0][rng.random_range(0..3)] }
        })
        .collect()
}

#[test]
fn composed_network_gradient_check() {
    let dims = tiny_dims();
    let mut net = Network::<f64>::new(dims, tiny_config(), 7).unwrap();
    // Perturb the identity normalization and zero biases so every parameter matters.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for p in &mut net.params {
        if !p.is_weight() {
            for v in &mut p.data {
                *v += rng.random_range(-0.2..0.2);
            }
        }
        if p.name == "value/dense2/weight" {
            for v in &mut p.data {
                *v *= 50.0;
            }
        }
    }
    let samples = random_samples(dims, 2, 9);
    let batch: Vec<&Sample> = samples.iter().collect();
    let wd = 0.01;
    let (_, grads) = net.loss_and_gradients(&batch, wd).unwrap();
    for (i, p) in net.params.iter().enumerate() {
        let numeric = numeric_grad(&p.data, |x| {
            let mut probe = net.clone();
            probe.params[i].data.copy_from_slice(x);
            probe.loss_and_gradients(&batch, wd).unwrap().0.total
        });
        assert_close(&p.name, &grads[i], &numeric);
    }
}

#[test]
fn softmax_examples() {
    let probs = masked_softmax(&[0.0, 3f64.ln(), 5.0], &[0, 1]);
    assert!((probs[&0] - 0.25).abs() < 1e-12);
    assert!((probs[&1] - 0.75).abs() < 1e-12);

    let probs = masked_softmax(&[2.5; 7], &[0, 2, 4, 6, 6]);
    assert_eq!(probs.len(), 4);
    for p in probs.values() {
        assert!((p - 0.25).abs() < 1e-15);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let logits = randv(&mut rng, 20).iter().map(|v| v * 30.0).collect::<Vec<_>>();
        let legal: Vec<usize> = (0..20).filter(|_| rng.random_bool(0.6)).chain([3]).collect();
        let p = masked_softmax(&logits, &legal);
        assert!((p.values().sum::<f64>() - 1.0).abs() < 1e-9);
        let shifted: Vec<f64> = logits.iter().map(|v| v + 123.25).collect();
        let q = masked_softmax(&shifted, &legal);
        for (a, b) in p.values().zip(q.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn initialization_is_seeded_and_board_independent() {
    let dims = tiny_dims();
    let a = Network::<f32>::new(dims, tiny_config(), 5).unwrap();
    let b = Network::<f32>::new(dims, tiny_config(), 5).unwrap();
    let c = Network::<f32>::new(dims, tiny_config(), 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let big = Network::<f32>::new(NetDims { height: 11, width: 31, ..dims }, tiny_config(), 5).unwrap();
    assert_eq!(a.parameter_count(), big.parameter_count());
    // Closed form for the default shapes.
    let (cc, aa, f, h, blocks) = (2, 3, 4, 3, 2);
    let expected = (f * cc * 9 + 3 * f) + blocks * 2 * (f * f * 9 + 3 * f) + (f * f + f) + (aa * f + aa) + (h * f + h) + (h + 1);
    assert_eq!(a.parameter_count(), expected);
    assert!(Network::<f32>::new(dims, NetworkConfig { trunk_channels: 0, ..tiny_config() }, 0).is_err());
}

#[test]
fn hex11_policy_output_shape() {
    let game = Game::builtin("hex-11").unwrap();
    let codec = Codec::new(game.spec()).unwrap();
    let net = Network::<f32>::for_codec(&codec, NetworkConfig { trunk_channels: 4, residual_blocks: 1, value_hidden: 4 }, 1)
        .unwrap();
    let state = crate::engine::initial_state(&game);
    let tensor = codec.encode_state(game.spec(), &state);
    let (logits, values) = net.forward_batch(&[&tensor.data]).unwrap();
    assert_eq!(net.dims.actions, 3);
    assert_eq!(logits[0].len(), 3 * codec.height() * codec.width());
    assert!(values[0].abs() < 0.1, "value head starts near zero, got {}", values[0]);
    assert!(net.forward_batch(&[&tensor.data[1..]]).is_err());
}

#[test]
fn value_stays_inside_open_interval() {
    let dims = tiny_dims();
    let mut net = Network::<f32>::new(dims, tiny_config(), 2).unwrap();
    let last = net.params.len() - 1;
    for bias in [1e6f32, -1e6] {
        net.params[last].data[0] = bias;
        let p = net.predict(&vec![0.5; dims.input_len()], &[0, 1]).unwrap();
        assert!(p.value.abs() < 1.0, "value {}", p.value);
    }
}

#[test]
fn alias_targets_feed_the_loss_exactly() {
    // Four root moves, two of which share logit 1.
    let logits = [0usize, 1, 1, 2];
    let visits = [2u32, 3, 1, 2];
    let targets = alias_targets(&logits, &visits);
    assert_eq!(targets, vec![(0, 0.25), (1, 0.5), (2, 0.25)]);
    assert_eq!(targets.iter().map(|t| t.1).sum::<f32>(), 1.0);

    let dims = NetDims { channels: 1, actions: 3, height: 1, width: 1 };
    let mut net = Network::<f64>::new(dims, NetworkConfig { trunk_channels: 2, residual_blocks: 1, value_hidden: 2 }, 0)
        .unwrap();
    for p in &mut net.params {
        p.data.fill(0.0);
        if p.name == "policy/conv2/bias" {
            p.data.copy_from_slice(&[0.0, 3f64.ln(), 2f64.ln()]);
        }
    }
    let sample = Sample { input: vec![0.3], legal: logits.to_vec(), targets, z: 1.0 };
    let (loss, _) = net.loss_and_gradients(&[&sample], 0.0).unwrap();
    // Distinct logits (0, ln 3, ln 2) give probabilities (1/6, 1/2, 1/3); V = 0.
    let hand_policy = -(0.25 * (1.0f64 / 6.0).ln() + 0.5 * 0.5f64.ln() + 0.25 * (1.0f64 / 3.0).ln());
    assert!((loss.policy - hand_policy).abs() < 1e-9, "{} vs {hand_policy}", loss.policy);
    assert!((loss.value - 1.0).abs() < 1e-9);
    assert!((loss.total - hand_policy - 1.0).abs() < 1e-9);
}

#[test]
fn target_equal_to_policy_gives_entropy() {
    let dims = tiny_dims();
    let net = Network::<f64>::new(dims, tiny_config(), 3).unwrap();
    let input = vec![0.25f32; dims.input_len()];
    let legal = vec![0, 4, 9, 13];
    let p = net.cast::<f32>().predict(&input, &legal).unwrap();
    let p64 = net.predict(&input, &legal).unwrap();
    assert!(p.probs.values().zip(p64.probs.values()).all(|(a, b)| (a - b).abs() < 1e-5));
    let targets: Vec<(usize, f32)> = p64.probs.iter().map(|(&l, &q)| (l, q as f32)).collect();
    let sample = Sample { input, legal, targets: targets.clone(), z: 0.0 };
    let (loss, _) = net.loss_and_gradients(&[&sample], 0.0).unwrap();
    let entropy: f64 = -p64.probs.values().map(|q| q * q.ln()).sum::<f64>();
    assert!((loss.policy - entropy).abs() < 1e-6);

    let bad = Sample { targets: vec![(1, 1.0)], ..sample.clone() };
    assert!(matches!(net.loss_and_gradients(&[&bad], 0.0), Err(NnError::Target(_))));
    let unnormalized = Sample { targets: vec![(0, 0.5)], ..sample };
    assert!(matches!(net.loss_and_gradients(&[&unnormalized], 0.0), Err(NnError::Target(_))));
}

#[test]
fn optimizer_examples() {
    let dims = tiny_dims();
    let mut net = Network::<f64>::new(dims, tiny_config(), 1).unwrap();
    let before = net.clone();
    let mut opt = Sgd::new(SgdConfig::default(), &net);
    let zeros: Vec<Vec<f64>> = net.params.iter().map(|p| vec![0.0; p.data.len()]).collect();
    opt.step(&mut net, &zeros).unwrap();
    assert_eq!(net, before);

    // Quadratic (w - 3)² on a single coordinate moves toward 3.
    let w0 = net.params[1].data[0];
    let mut grads = zeros.clone();
    grads[1][0] = 2.0 * (w0 - 3.0);
    opt.step(&mut net, &grads).unwrap();
    let w1 = net.params[1].data[0];
    assert!((w1 - 3.0).abs() < (w0 - 3.0).abs());
    assert!((w1 - (w0 - 0.01 * grads[1][0])).abs() < 1e-15);

    let snapshot = net.clone();
    grads[2][1] = f64::NAN;
    assert!(matches!(opt.step(&mut net, &grads), Err(NnError::NonFinite(_))));
    assert_eq!(net, snapshot);
}

#[test]
fn training_steps_are_deterministic_and_reduce_loss() {
    let dims = tiny_dims();
    let samples = random_samples(dims, 8, 11);
    let batch: Vec<&Sample> = samples.iter().collect();
    let run = || {
        let mut net = Network::<f32>::new(dims, tiny_config(), 4).unwrap();
        let mut opt = Sgd::new(SgdConfig::default(), &net);
        let mut losses = Vec::new();
        for _ in 0..60 {
            let (loss, grads) = net.loss_and_gradients(&batch, 1e-4).unwrap();
            losses.push(loss.total);
            opt.step(&mut net, &grads).unwrap();
        }
        (net, losses)
    };
    let (a, la) = run();
    let (b, lb) = run();
    assert_eq!(a, b);
    assert_eq!(la, lb);
    assert!(la.last().unwrap() < &la[0]);
}

fn hex_codec() -> (Game, Codec) {
    let game = Game::builtin("hex-5").unwrap();
    let codec = Codec::new(game.spec()).unwrap();
    (game, codec)
}

#[test]
fn checkpoint_round_trip_and_failures() {
    let (_, codec) = hex_codec();
    let cfg = NetworkConfig { trunk_channels: 4, residual_blocks: 1, value_hidden: 4 };
    let mut net = Network::<f32>::for_codec(&codec, cfg, 9).unwrap();
    let mut opt = Sgd::new(SgdConfig::default(), &net);
    opt.velocity[0][0] = 0.125;
    net.params[0].data[1] = f32::MIN_POSITIVE;
    let ckpt = Checkpoint::new("hex-5", &codec, 17, net, Some(opt));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.lpgc");
    save_checkpoint(&ckpt, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded, ckpt);
    assert_eq!(loaded.step(), 17);
    assert_eq!(loaded.game(), Some("hex-5"));
    loaded.verify(&codec).unwrap();
    assert_eq!(loaded.to_bytes(), ckpt.to_bytes());
    assert_eq!(&ckpt.to_bytes()[..5], b"LPGC\x01");

    let no_opt = Checkpoint { optimizer: None, ..ckpt.clone() };
    assert_eq!(Checkpoint::from_bytes(&no_opt.to_bytes()).unwrap(), no_opt);

    let bt = Game::builtin("breakthrough-6").unwrap();
    let bt_codec = Codec::new(bt.spec()).unwrap();
    assert!(matches!(loaded.verify(&bt_codec), Err(NnError::LayoutMismatch(_))));

    let bytes = ckpt.to_bytes();
    for cut in [0, 3, 5, 40, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(NnError::Format(_))), "cut at {cut}");
    }
    let mut corrupt = bytes.clone();
    corrupt[60] ^= 1;
    assert!(Checkpoint::from_bytes(&corrupt).is_err());
    let mut wrong_version = bytes;
    wrong_version[4] = 9;
    assert!(matches!(Checkpoint::from_bytes(&wrong_version), Err(NnError::Format(_))));
}

#[test]
fn network_drives_puct_search() {
    use crate::search::{search, SearchConfig};
    let (game, codec) = hex_codec();
    let net = Network::<f32>::for_codec(&codec, NetworkConfig { trunk_channels: 4, residual_blocks: 1, value_hidden: 4 }, 3)
        .unwrap();
    let state = crate::engine::initial_state(&game);
    let a = search(&game, &codec, &state, &SearchConfig::puct(40), Some(&net), 1).unwrap();
    let b = search(&game, &codec, &state, &SearchConfig::puct(40), Some(&net), 1).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.total_visits(), 40);

    let other = Network::<f32>::new(NetDims { channels: 1, actions: 3, height: 5, width: 13 }, net.config, 0).unwrap();
    assert!(search(&game, &codec, &state, &SearchConfig::puct(10), Some(&other), 1).is_err());
}
