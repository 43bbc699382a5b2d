use std::fmt::Write;

use super::*;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn region(r: &Region) -> String {
    match r {
        Region::All => "all".into(),
        Region::Edge(e) => format!(
            "(edge {})",
            match e {
                Edge::North => "north",
                Edge::South => "south",
                Edge::East => "east",
                Edge::West => "west",
            }
        ),
        Region::Rows(a, b) => format!("(rows {a} {b})"),
        Region::Cols(a, b) => format!("(cols {a} {b})"),
        Region::Parity(p) => format!("(parity {p})"),
        Region::Sites(s) => {
            let ids: Vec<String> = s.iter().map(usize::to_string).collect();
            format!("(sites {})", ids.join(" "))
        }
    }
}

fn ludeme(l: &Ludeme) -> String {
    match l {
        Ludeme::StartPlace {
            piece,
            owner,
            region: r,
            local_state,
        } => {
            let state = if *local_state > 0 {
                format!(" (state {local_state})")
            } else {
                String::new()
            };
            format!("(start-place {piece} {} {}{state})", owner.number(), region(r))
        }
        Ludeme::PlaceEmpty { piece } => format!("(place-empty {piece})"),
        Ludeme::StepMove {
            piece,
            directions,
            target,
        } => {
            let dirs: Vec<&str> = directions
                .iter()
                .map(|d| match d {
                    DirectionSet::Forward => "forward",
                    DirectionSet::ForwardDiagonal => "forward-diagonal",
                    DirectionSet::Orthogonal => "orthogonal",
                    DirectionSet::Diagonal => "diagonal",
                    DirectionSet::All => "all",
                })
                .collect();
            let to = match target {
                StepTarget::Empty => "empty",
                StepTarget::Enemy => "enemy",
                StepTarget::EmptyOrEnemy => "empty-or-enemy",
                StepTarget::Any => "any",
            };
            format!("(step-move {piece} (directions {}) (to {to}))", dirs.join(" "))
        }
        Ludeme::HopCapture {
            piece,
            chain,
            opening,
        } => {
            let chain = match chain {
                JumpChain::Single => "single",
                JumpChain::Straight => "straight",
                JumpChain::Any => "any",
            };
            let opening = match opening {
                Some(Opening::CenterOrCorner) => " (opening center-or-corner)",
                None => "",
            };
            format!("(hop-capture {piece} (chain {chain}){opening})")
        }
        Ludeme::LineEnd { length, result } => format!(
            "(line-end {length} {})",
            match result {
                Polarity::Win => "win",
                Polarity::Lose => "lose",
            }
        ),
        Ludeme::ConnectEnd { owner, regions } => format!(
            "(connect-end {} {} {})",
            owner.number(),
            region(&regions[0]),
            region(&regions[1])
        ),
        Ludeme::ReachEnd { owner, region: r } => {
            format!("(reach-end {} {})", owner.number(), region(r))
        }
        Ludeme::NoMovesEnd { result } => format!(
            "(no-moves-end {})",
            match result {
                NoMovesResult::Win => "win",
                NoMovesResult::Lose => "lose",
                NoMovesResult::Draw => "draw",
                NoMovesResult::Pass => "pass",
            }
        ),
        Ludeme::SwapMeta => "(swap)".into(),
    }
}

fn section(out: &mut String, head: &str, ludemes: &[Ludeme]) {
    if ludemes.is_empty() {
        return;
    }
    let _ = write!(out, "\n  ({head}");
    for l in ludemes {
        let _ = write!(out, "\n    {}", ludeme(l));
    }
    out.push(')');
}

/// Canonical text form of a spec; `parse_game(&print_game(s)) == s`.
pub fn print_game(spec: &GameSpec) -> String {
    let mut out = format!("(game {}", quote(&spec.name));
    let _ = write!(out, "\n  (players {})", spec.num_players);
    out.push_str("\n  (equipment");
    for decl in &spec.equipment {
        let text = match decl {
            ContainerDecl::Board(BoardShape::Square { rows, cols }) => {
                format!("(board (square {rows} {cols}))")
            }
            ContainerDecl::Board(BoardShape::HexRhombus { size }) => {
                format!("(board (hex-rhombus {size}))")
            }
            ContainerDecl::Board(BoardShape::HexHex { side }) => {
                format!("(board (hex-hex {side}))")
            }
            ContainerDecl::Hand { capacity, owner } => {
                format!("(hand {capacity} {})", owner.number())
            }
        };
        let _ = write!(out, "\n    {text}");
    }
    out.push(')');
    out.push_str("\n  (pieces");
    for p in &spec.piece_decls {
        let owner = match p.owner {
            Owner::Each => "each".to_string(),
            Owner::Player(p) => p.number().to_string(),
        };
        let _ = write!(out, " ({} {owner})", p.name);
    }
    out.push(')');
    section(&mut out, "start", &spec.rules.start);
    section(&mut out, "play", &spec.rules.play);
    section(&mut out, "end", &spec.rules.end);
    section(&mut out, "meta", &spec.rules.meta);
    let f = &spec.flags;
    let flags: Vec<&str> = [
        (f.is_stacking, "stacking"),
        (f.uses_counts, "counts"),
        (f.uses_amounts, "amounts"),
    ]
    .iter()
    .filter(|(on, _)| *on)
    .map(|&(_, name)| name)
    .collect();
    if !flags.is_empty() {
        let _ = write!(out, "\n  (flags {})", flags.join(" "));
    }
    out.push_str(")\n");
    out
}
