use std::collections::BTreeSet;

use super::*;
use crate::dsl::{builtin_games, parse_game};
use crate::engine::{self, Cell, Effect, Game, MoveKind};
use crate::player::Player;

const STACKING_SRC: &str = r#"(game "stacks" (players 2)
  (equipment (board (square 5 5)))
  (pieces (disc each))
  (start (start-place disc 1 (rows 0 0)) (start-place disc 2 (rows 4 4)))
  (play (step-move disc (directions all) (to any)))
  (end (no-moves-end lose))
  (flags stacking))"#;

fn codec_for(name: &str) -> (Game, Codec) {
    let g = Game::builtin(name).unwrap();
    let c = Codec::new(g.spec()).unwrap();
    (g, c)
}

/// Channel count from the layout rules, written out independently.
fn closed_form_c(spec: &GameSpec) -> usize {
    let f = &spec.flags;
    let per_piece = if f.is_stacking { 10 } else { 1 };
    let n = spec.num_players;
    spec.piece_types.len() * per_piece
        + f.is_stacking as usize
        + f.uses_counts as usize
        + if f.uses_amounts { n } else { 0 }
        + if n > 1 { n } else { 0 }
        + 6
        + f.uses_swap_rule as usize
        + spec.containers.len()
        + 4
}

#[test]
fn channel_counts_for_builtins() {
    let (_, hex11) = codec_for("hex-11");
    assert_eq!(hex11.channels(), 2 + 2 + 6 + 1 + 1 + 4);
    assert_eq!(hex11.actions(), 3);
    let (_, gomoku) = codec_for("gomoku-9");
    assert_eq!(gomoku.channels(), 15);
    let (_, bt) = codec_for("breakthrough-6");
    assert_eq!(bt.actions(), 2 + 7 * 7);
    assert_eq!(bt.move_layout.mode, MoveMode::FromTo);
    for (name, src) in builtin_games() {
        let spec = parse_game(src).unwrap();
        let c = Codec::new(&spec).unwrap();
        assert_eq!(c.channels(), closed_form_c(&spec), "{name}");
    }
}

#[test]
fn stacking_layout() {
    let spec = parse_game(STACKING_SRC).unwrap();
    let c = Codec::new(&spec).unwrap();
    assert_eq!(c.channels(), 2 * 10 + 1 + 2 + 6 + 1 + 4);
    assert_eq!(c.actions(), 2 + 49 * 9);
    assert_eq!(c.move_layout.level_clip, 2);
}

#[test]
fn hex_grids() {
    let (_, hex5) = codec_for("hex-5");
    assert_eq!((hex5.height(), hex5.width()), (5, 13));
    let (_, hex11) = codec_for("hex-11");
    let distinct: BTreeSet<usize> = (0..11).flat_map(|r| (0..11).map(move |c| 2 * c + r)).collect();
    assert_eq!((hex11.height(), hex11.width()), (11, distinct.len()));
    let (_, yav) = codec_for("yavalath");
    assert_eq!(yav.height(), 9);
}

#[test]
fn grids_are_dense_and_injective() {
    for name in builtin_games().keys() {
        let (g, c) = codec_for(name);
        let grid = &c.grid;
        assert_eq!(grid.placement.len(), g.total_sites());
        let cells: BTreeSet<_> = grid.placement.iter().copied().collect();
        assert_eq!(cells.len(), grid.placement.len(), "{name}");
        for r in 0..grid.height {
            assert!((0..grid.width).any(|col| grid.site_at(r, col).is_some()), "{name} row {r}");
        }
        for col in 0..grid.width {
            assert!((0..grid.height).any(|r| grid.site_at(r, col).is_some()), "{name} col {col}");
        }
    }
}

#[test]
fn movement_formula_is_a_bijection() {
    for level_clip in [0i64, 2] {
        let layout = MoveChannelLayout {
            mode: MoveMode::FromTo,
            channels: 2 + 49 * ((level_clip + 1) * (level_clip + 1)) as usize,
            delta_clip: 3,
            level_clip,
        };
        let mut seen = BTreeSet::new();
        for dx in -3..=3 {
            for dy in -3..=3 {
                for lo in 0..=level_clip {
                    for range in 0..=level_clip {
                        seen.insert(movement_offset(&layout, dx, dy, lo, lo + range));
                    }
                }
            }
        }
        let n = layout.movement_channels();
        assert_eq!(seen.len(), n);
        assert_eq!(seen.iter().copied().collect::<Vec<_>>(), (0..n).collect::<Vec<_>>());
    }
}

#[test]
fn movement_examples() {
    let (g, c) = codec_for("breakthrough-6");
    let layout = &c.move_layout;
    assert_eq!(movement_offset(layout, 0, 0, 0, 0), 24);
    assert_eq!(movement_offset(layout, -5, 2, 0, 0), 5);
    let mv = crate::engine::Move::play(Some(7), 7, &[]);
    let idx = encode_move(&c.grid, layout, &mv);
    assert_eq!(idx.channel, 26);
    // Placement without a source counts as zero displacement.
    let idx = encode_move(&c.grid, layout, &crate::engine::Move::play(None, 7, &[]));
    assert_eq!(idx.channel, 26);
    let pass = encode_move(&c.grid, layout, &crate::engine::Move::pass());
    assert_eq!((pass.channel, pass.row, pass.col), (0, 0, 0));
    let swap = encode_move(&c.grid, layout, &crate::engine::Move::swap());
    assert_eq!(swap.channel, 1);
    // A forward step for player 1 is one row up, no column change.
    let s = engine::initial_state(&g);
    let fwd = engine::legal_moves(&g, &s)
        .unwrap()
        .into_iter()
        .find(|m| m.to.unwrap() == m.from.unwrap() + 6)
        .unwrap();
    assert_eq!(encode_move(&c.grid, layout, &fwd).channel, 2 + (1 + 3) * 7 + 3);
}

#[test]
fn flat_indices_in_range_and_unique_for_builtin_openings() {
    for name in builtin_games().keys() {
        let (g, c) = codec_for(name);
        let s = engine::initial_state(&g);
        let moves = engine::legal_moves(&g, &s).unwrap();
        let logits = c.move_logits(&moves);
        assert!(logits.iter().all(|&l| l < c.logit_count()));
        let distinct: BTreeSet<_> = logits.iter().collect();
        assert_eq!(distinct.len(), logits.len(), "{name}");
    }
}

#[test]
fn gomoku_partition_is_singletons() {
    let (g, c) = codec_for("gomoku-9");
    let moves = engine::legal_moves(&g, &engine::initial_state(&g)).unwrap();
    let part = logit_partition(&c.grid, &c.move_layout, &moves);
    assert_eq!(part.len(), 81);
    assert!(part.values().all(|v| v.len() == 1));
    let pass = logit_partition(&c.grid, &c.move_layout, &[crate::engine::Move::pass()]);
    assert_eq!(pass.keys().copied().collect::<Vec<_>>(), vec![0]);
}

#[test]
fn konane_paths_alias() {
    let src = crate::dsl::builtin_game("konane-6")
        .unwrap()
        .replace("(chain straight) (opening center-or-corner)", "(chain any)");
    let g = Game::from_source(&src).unwrap();
    let c = Codec::new(g.spec()).unwrap();
    let mut s = crate::engine::GameState::blank(36, 2);
    s.move_number = 5;
    let p1 = g.spec().piece_id("stone", Player::ONE).unwrap() as u16;
    let p2 = g.spec().piece_id("stone", Player::TWO).unwrap() as u16;
    s.cells[0] = Cell::Piece { piece: p1, count: 1 };
    for site in [1, 8, 6, 13] {
        s.cells[site] = Cell::Piece { piece: p2, count: 1 };
    }
    let moves = engine::legal_moves(&g, &s).unwrap();
    let part = logit_partition(&c.grid, &c.move_layout, &moves);
    let class = part
        .values()
        .find(|v| v.iter().any(|m| m.from == Some(0) && m.to == Some(14)))
        .unwrap();
    assert_eq!(class.len(), 2);
    assert_ne!(class[0].effects, class[1].effects);
    // Longer chains that loop back onto the first landing cells alias too.
    assert!(part.values().all(|v| v.iter().all(|m| m.from == v[0].from && m.to == v[0].to)));
}

#[test]
fn gomoku_initial_encoding() {
    let (g, c) = codec_for("gomoku-9");
    let s = engine::initial_state(&g);
    let t = c.encode_state(g.spec(), &s);
    let find = |want: ChannelSpec| c.state_layout.channels.iter().position(|&x| x == want).unwrap();
    for p in 0..2 {
        assert!(t.plane(find(ChannelSpec::Piece { piece: p })).iter().all(|&v| v == 0.0));
    }
    assert!(t.plane(find(ChannelSpec::Mover { player: Player::ONE })).iter().all(|&v| v == 1.0));
    assert!(t.plane(find(ChannelSpec::Mover { player: Player::TWO })).iter().all(|&v| v == 0.0));
    assert_eq!(
        t.plane(find(ChannelSpec::LocalState { bucket: 0 })),
        t.plane(find(ChannelSpec::Container { index: 0 }))
    );
    for age in 0..2 {
        for end in [LastMoveEnd::From, LastMoveEnd::To] {
            assert!(t.plane(find(ChannelSpec::LastMove { age, end })).iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn hex_swap_encoding() {
    let (g, c) = codec_for("hex-5");
    let s0 = engine::initial_state(&g);
    let first = engine::legal_moves(&g, &s0).unwrap()[12].clone();
    let s1 = engine::apply(&g, &s0, &first).unwrap();
    let s2 = engine::apply(&g, &s1, &crate::engine::Move::swap()).unwrap();
    let t1 = c.encode_state(g.spec(), &s1);
    let t2 = c.encode_state(g.spec(), &s2);
    let find = |want: ChannelSpec| c.state_layout.channels.iter().position(|&x| x == want).unwrap();
    let swap = find(ChannelSpec::Swap);
    assert!(t1.plane(swap).iter().all(|&v| v == 0.0));
    assert!(t2.plane(swap).iter().all(|&v| v == 1.0));
    let m1 = find(ChannelSpec::Mover { player: Player::ONE });
    let m2 = find(ChannelSpec::Mover { player: Player::TWO });
    assert!(t1.plane(m2).iter().all(|&v| v == 1.0) && t1.plane(m1).iter().all(|&v| v == 0.0));
    assert!(t2.plane(m1).iter().all(|&v| v == 1.0) && t2.plane(m2).iter().all(|&v| v == 0.0));
    for p in 0..2 {
        let ch = find(ChannelSpec::Piece { piece: p });
        assert_eq!(t1.plane(ch), t2.plane(ch));
    }
    // The swap has no cell, so the latest-move planes are empty and the
    // opening placement moved to the previous-move slot.
    let last_to = find(ChannelSpec::LastMove { age: 0, end: LastMoveEnd::To });
    let prev_to = find(ChannelSpec::LastMove { age: 1, end: LastMoveEnd::To });
    assert!(t2.plane(last_to).iter().all(|&v| v == 0.0));
    assert_eq!(t2.plane(prev_to), t1.plane(last_to));
    assert_eq!(t1.plane(last_to).iter().sum::<f32>(), 1.0);
}

#[test]
fn tall_stack_encoding() {
    let spec = parse_game(STACKING_SRC).unwrap();
    let g = Game::new(spec).unwrap();
    let c = Codec::new(g.spec()).unwrap();
    let mut s = crate::engine::GameState::blank(25, 2);
    // Layers alternate colours from the bottom: 0 1 0 1 ...
    s.cells[12] = Cell::Stack((0..12).map(|i| (i % 2) as u16).collect());
    let t = c.encode_state(g.spec(), &s);
    let find = |want: ChannelSpec| c.state_layout.channels.iter().position(|&x| x == want).unwrap();
    let (row, col) = c.grid.cell_of(12);
    for layer in 0..5 {
        let bottom_owner = layer % 2;
        let top_owner = (11 - layer) % 2;
        for p in 0..2 {
            let b = t.get(find(ChannelSpec::PieceBottom { piece: p, layer }), row, col);
            let tp = t.get(find(ChannelSpec::PieceTop { piece: p, layer }), row, col);
            assert_eq!(b, (p == bottom_owner) as u8 as f32);
            assert_eq!(tp, (p == top_owner) as u8 as f32);
        }
    }
    assert_eq!(t.get(find(ChannelSpec::StackHeight), row, col), 12.0);
    let total_piece_marks: f32 = (0..20).map(|ch| t.plane(ch).iter().sum::<f32>()).sum();
    assert_eq!(total_piece_marks, 10.0);
}

#[test]
fn amounts_and_counts_fill() {
    let src = r#"(game "bank" (players 2)
      (equipment (board (square 3 3)) (hand 3 1) (hand 3 2))
      (pieces (seed each))
      (play (place-empty seed))
      (end (no-moves-end draw))
      (flags counts amounts))"#;
    let g = Game::from_source(src).unwrap();
    let c = Codec::new(g.spec()).unwrap();
    assert_eq!((c.height(), c.width()), (6, 3));
    let mut s = engine::initial_state(&g);
    s.amounts = vec![7, -2];
    s.cells[4] = Cell::Piece { piece: 0, count: 5 };
    s.cells[9] = Cell::Piece { piece: 1, count: 2 };
    let t = c.encode_state(g.spec(), &s);
    let find = |want: ChannelSpec| c.state_layout.channels.iter().position(|&x| x == want).unwrap();
    assert!(t.plane(find(ChannelSpec::Amount { player: Player::ONE })).iter().all(|&v| v == 7.0));
    assert!(t.plane(find(ChannelSpec::Amount { player: Player::TWO })).iter().all(|&v| v == -2.0));
    let count = find(ChannelSpec::PieceCount);
    assert_eq!(t.get(count, 1, 1), 5.0);
    assert_eq!(t.get(count, 4, 0), 2.0);
    // Masks partition exactly the mapped cells; the separator row is blank.
    let masks: Vec<usize> = (0..3).map(|i| find(ChannelSpec::Container { index: i })).collect();
    for r in 0..6 {
        for col in 0..3 {
            let sum: f32 = masks.iter().map(|&m| t.get(m, r, col)).sum();
            let mapped = c.grid.site_at(r, col).is_some();
            assert_eq!(sum, mapped as u8 as f32);
        }
    }
    assert!(masks.iter().all(|&m| (0..3).all(|col| t.get(m, 3, col) == 0.0)));
}

#[test]
fn binary_channels_stay_binary_in_play() {
    use rand::seq::IndexedRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    for name in builtin_games().keys() {
        let (g, c) = codec_for(name);
        let mut s = engine::initial_state(&g);
        while !s.is_terminal() {
            let t = c.encode_state(g.spec(), &s);
            for (i, ch) in c.state_layout.channels.iter().enumerate() {
                if ch.is_binary() {
                    assert!(t.plane(i).iter().all(|&v| v == 0.0 || v == 1.0), "{name} {ch}");
                }
                if let ChannelSpec::LastMove { .. } = ch {
                    assert!(t.plane(i).iter().sum::<f32>() <= 1.0);
                }
            }
            assert_eq!(t, c.encode_state(g.spec(), &s.clone()));
            let moves = engine::legal_moves(&g, &s).unwrap();
            s = engine::apply_trusted(&g, &s, moves.choose(&mut rng).unwrap());
        }
    }
}

#[test]
fn last_move_channels_track_history() {
    let (g, c) = codec_for("breakthrough-6");
    let s0 = engine::initial_state(&g);
    let m1 = engine::legal_moves(&g, &s0).unwrap()[0].clone();
    let s1 = engine::apply(&g, &s0, &m1).unwrap();
    let m2 = engine::legal_moves(&g, &s1).unwrap()[0].clone();
    let s2 = engine::apply(&g, &s1, &m2).unwrap();
    let t = c.encode_state(g.spec(), &s2);
    let find = |want: ChannelSpec| c.state_layout.channels.iter().position(|&x| x == want).unwrap();
    let at = |site: usize| c.grid.cell_of(site);
    for (age, m) in [(0, &m2), (1, &m1)] {
        let (r, col) = at(m.from.unwrap());
        assert_eq!(t.get(find(ChannelSpec::LastMove { age, end: LastMoveEnd::From }), r, col), 1.0);
        let (r, col) = at(m.to.unwrap());
        assert_eq!(t.get(find(ChannelSpec::LastMove { age, end: LastMoveEnd::To }), r, col), 1.0);
    }
    assert!(m1.kind == MoveKind::Play && m1.effects.iter().all(|e| !matches!(e, Effect::Place(_))));
}

#[test]
fn layout_hashes_distinguish_games() {
    let (_, a) = codec_for("hex-5");
    let (_, b) = codec_for("breakthrough-6");
    let (_, a2) = codec_for("hex-5");
    assert_eq!(a.state_layout_hash(), a2.state_layout_hash());
    assert_ne!(a.state_layout_hash(), b.state_layout_hash());
    assert_ne!(a.move_layout_hash(), b.move_layout_hash());
    assert_eq!(a.state_layout_hash().len(), 64);
}

#[test]
fn golden_format_round_trip() {
    let (g, c) = codec_for("hex-5");
    let s = engine::initial_state(&g);
    let t = c.encode_state(g.spec(), &s);
    let dump = engine::dump_state(&s);
    let text = format_golden("hex-5", &dump, &t);
    let (name, d, back) = parse_golden(&text).unwrap();
    assert_eq!(name, "hex-5");
    assert_eq!(d, dump);
    assert_eq!(back, t);
}
