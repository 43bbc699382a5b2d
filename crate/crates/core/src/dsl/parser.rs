use super::sexp::{read_one, Sexp, SexpKind, Span};
use super::*;

const MAX_BOARD_EXTENT: usize = 64;
const MAX_PLAYERS: usize = 8;

/// Parses raw bytes, rejecting invalid UTF-8 with a lexical error.
pub fn parse_game_bytes(bytes: &[u8]) -> Result<GameSpec, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_game(text),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            let text = std::str::from_utf8(valid).unwrap_or_default();
            let line = text.matches('\n').count() + 1;
            let column = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            Err(ParseError {
                kind: ParseErrorKind::Lexical,
                offset: e.valid_up_to(),
                line,
                column,
                message: "input is not valid UTF-8".into(),
            })
        }
    }
}

/// Parses and validates one game description.
pub fn parse_game(text: &str) -> Result<GameSpec, ParseError> {
    let form = read_one(text)?;
    Parser::default().game(&form)
}

fn error(span: Span, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
    ParseError {
        kind,
        offset: span.offset,
        line: span.line,
        column: span.column,
        message: message.into(),
    }
}

fn semantic(span: Span, message: impl Into<String>) -> ParseError {
    error(span, ParseErrorKind::Semantic, message)
}

#[derive(Default)]
struct Parser {
    players: Option<(usize, Span)>,
    equipment: Option<(Vec<(ContainerDecl, Span)>, Span)>,
    pieces: Option<(Vec<(PieceDecl, Span)>, Span)>,
    start: Vec<(Ludeme, Span)>,
    play: Option<(Vec<(Ludeme, Span)>, Span)>,
    end: Option<(Vec<(Ludeme, Span)>, Span)>,
    meta: Vec<(Ludeme, Span)>,
    flags: Option<(bool, bool, bool)>,
}

/// Splits `(head args...)` and checks the argument count range.
fn form<'a>(
    sexp: &'a Sexp,
    head: &str,
    min: usize,
    max: usize,
) -> Result<&'a [Sexp], ParseError> {
    let items = sexp.as_list().ok_or_else(|| {
        error(
            sexp.span,
            ParseErrorKind::Syntax,
            format!("expected ({head} ...), found {}", sexp.describe()),
        )
    })?;
    let args = &items[1..];
    if args.len() < min || args.len() > max {
        let expected = if min == max {
            format!("{min}")
        } else if max == usize::MAX {
            format!("at least {min}")
        } else {
            format!("{min} to {max}")
        };
        return Err(error(
            sexp.span,
            ParseErrorKind::Arity,
            format!("({head} ...) takes {expected} argument(s), got {}", args.len()),
        ));
    }
    Ok(args)
}

fn symbol(sexp: &Sexp) -> Result<&str, ParseError> {
    sexp.as_atom().ok_or_else(|| {
        error(
            sexp.span,
            ParseErrorKind::Syntax,
            format!("expected a symbol, found {}", sexp.describe()),
        )
    })
}

fn integer(sexp: &Sexp) -> Result<i64, ParseError> {
    let atom = sexp.as_atom().ok_or_else(|| {
        error(
            sexp.span,
            ParseErrorKind::Syntax,
            format!("expected an integer, found {}", sexp.describe()),
        )
    })?;
    atom.parse::<i64>().map_err(|_| {
        error(
            sexp.span,
            ParseErrorKind::Syntax,
            format!("expected an integer, found `{atom}`"),
        )
    })
}

fn positive(sexp: &Sexp, limit: usize) -> Result<usize, ParseError> {
    let v = integer(sexp)?;
    if v < 1 || v as u64 > limit as u64 {
        return Err(semantic(sexp.span, format!("value {v} must be between 1 and {limit}")));
    }
    Ok(v as usize)
}

fn player(sexp: &Sexp) -> Result<Player, ParseError> {
    let v = integer(sexp)?;
    u32::try_from(v)
        .ok()
        .filter(|&n| n as usize <= MAX_PLAYERS)
        .and_then(Player::from_number)
        .ok_or_else(|| semantic(sexp.span, format!("invalid player number {v}")))
}

fn head_of(sexp: &Sexp) -> Result<&str, ParseError> {
    sexp.head().ok_or_else(|| {
        error(
            sexp.span,
            ParseErrorKind::Syntax,
            format!("expected a (keyword ...) form, found {}", sexp.describe()),
        )
    })
}

fn choice<T: Copy>(sexp: &Sexp, what: &str, options: &[(&str, T)]) -> Result<T, ParseError> {
    let s = symbol(sexp)?;
    options
        .iter()
        .find(|(name, _)| *name == s)
        .map(|&(_, v)| v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            semantic(
                sexp.span,
                format!("unknown {what} `{s}` (expected one of {})", names.join(", ")),
            )
        })
}

fn region(sexp: &Sexp) -> Result<Region, ParseError> {
    if sexp.as_atom() == Some("all") {
        return Ok(Region::All);
    }
    match head_of(sexp)? {
        "edge" => {
            let args = form(sexp, "edge", 1, 1)?;
            Ok(Region::Edge(choice(
                &args[0],
                "edge",
                &[
                    ("north", Edge::North),
                    ("south", Edge::South),
                    ("east", Edge::East),
                    ("west", Edge::West),
                ],
            )?))
        }
        h @ ("rows" | "cols") => {
            let args = form(sexp, h, 2, 2)?;
            let (a, b) = (integer(&args[0])?, integer(&args[1])?);
            if a < 0 || b < a || b > MAX_BOARD_EXTENT as i64 {
                return Err(semantic(sexp.span, format!("invalid {h} range {a}..{b}")));
            }
            Ok(if h == "rows" {
                Region::Rows(a as i32, b as i32)
            } else {
                Region::Cols(a as i32, b as i32)
            })
        }
        "parity" => {
            let args = form(sexp, "parity", 1, 1)?;
            match integer(&args[0])? {
                p @ (0 | 1) => Ok(Region::Parity(p as u8)),
                p => Err(semantic(args[0].span, format!("parity must be 0 or 1, got {p}"))),
            }
        }
        "sites" => {
            let args = form(sexp, "sites", 1, usize::MAX)?;
            let mut sites = Vec::with_capacity(args.len());
            for a in args {
                let v = integer(a)?;
                if v < 0 {
                    return Err(semantic(a.span, "site index must be non-negative"));
                }
                sites.push(v as usize);
            }
            Ok(Region::Sites(sites))
        }
        other => Err(semantic(sexp.span, format!("unknown region form `{other}`"))),
    }
}

/// Optional `(key value...)` sub-forms following positional arguments.
fn option<'a>(args: &'a [Sexp], key: &str) -> Option<&'a Sexp> {
    args.iter().find(|a| a.head() == Some(key))
}

fn ludeme(sexp: &Sexp) -> Result<Ludeme, ParseError> {
    let head = head_of(sexp)?;
    match head {
        "start-place" => {
            let args = form(sexp, head, 3, 4)?;
            let local_state = match args.get(3) {
                Some(opt) if opt.head() == Some("state") => {
                    let v = integer(&form(opt, "state", 1, 1)?[0])?;
                    u32::try_from(v)
                        .map_err(|_| semantic(opt.span, "local state must be non-negative"))?
                }
                Some(other) => {
                    return Err(semantic(other.span, "expected (state <n>)"));
                }
                None => 0,
            };
            Ok(Ludeme::StartPlace {
                piece: symbol(&args[0])?.to_string(),
                owner: player(&args[1])?,
                region: region(&args[2])?,
                local_state,
            })
        }
        "place-empty" => {
            let args = form(sexp, head, 1, 1)?;
            Ok(Ludeme::PlaceEmpty {
                piece: symbol(&args[0])?.to_string(),
            })
        }
        "step-move" => {
            let args = form(sexp, head, 3, 3)?;
            let dirs = option(args, "directions")
                .ok_or_else(|| semantic(sexp.span, "step-move needs (directions ...)"))?;
            let directions = form(dirs, "directions", 1, usize::MAX)?
                .iter()
                .map(|d| {
                    choice(
                        d,
                        "direction set",
                        &[
                            ("forward", DirectionSet::Forward),
                            ("forward-diagonal", DirectionSet::ForwardDiagonal),
                            ("orthogonal", DirectionSet::Orthogonal),
                            ("diagonal", DirectionSet::Diagonal),
                            ("all", DirectionSet::All),
                        ],
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            let to = option(args, "to")
                .ok_or_else(|| semantic(sexp.span, "step-move needs (to ...)"))?;
            let target = choice(
                &form(to, "to", 1, 1)?[0],
                "step target",
                &[
                    ("empty", StepTarget::Empty),
                    ("enemy", StepTarget::Enemy),
                    ("empty-or-enemy", StepTarget::EmptyOrEnemy),
                    ("any", StepTarget::Any),
                ],
            )?;
            Ok(Ludeme::StepMove {
                piece: symbol(&args[0])?.to_string(),
                directions,
                target,
            })
        }
        "hop-capture" => {
            let args = form(sexp, head, 2, 3)?;
            let chain = option(args, "chain")
                .ok_or_else(|| semantic(sexp.span, "hop-capture needs (chain ...)"))?;
            let chain = choice(
                &form(chain, "chain", 1, 1)?[0],
                "jump chain",
                &[
                    ("single", JumpChain::Single),
                    ("straight", JumpChain::Straight),
                    ("any", JumpChain::Any),
                ],
            )?;
            let opening = match option(args, "opening") {
                Some(o) => Some(choice(
                    &form(o, "opening", 1, 1)?[0],
                    "opening",
                    &[("center-or-corner", Opening::CenterOrCorner)],
                )?),
                None if args.len() == 3 => {
                    return Err(semantic(args[2].span, "expected (opening ...)"));
                }
                None => None,
            };
            Ok(Ludeme::HopCapture {
                piece: symbol(&args[0])?.to_string(),
                chain,
                opening,
            })
        }
        "line-end" => {
            let args = form(sexp, head, 2, 2)?;
            let length = positive(&args[0], MAX_BOARD_EXTENT)?;
            if length < 2 {
                return Err(semantic(args[0].span, "line length must be at least 2"));
            }
            Ok(Ludeme::LineEnd {
                length,
                result: choice(
                    &args[1],
                    "line result",
                    &[("win", Polarity::Win), ("lose", Polarity::Lose)],
                )?,
            })
        }
        "connect-end" => {
            let args = form(sexp, head, 3, 3)?;
            Ok(Ludeme::ConnectEnd {
                owner: player(&args[0])?,
                regions: [region(&args[1])?, region(&args[2])?],
            })
        }
        "reach-end" => {
            let args = form(sexp, head, 2, 2)?;
            Ok(Ludeme::ReachEnd {
                owner: player(&args[0])?,
                region: region(&args[1])?,
            })
        }
        "no-moves-end" => {
            let args = form(sexp, head, 1, 1)?;
            Ok(Ludeme::NoMovesEnd {
                result: choice(
                    &args[0],
                    "no-moves result",
                    &[
                        ("win", NoMovesResult::Win),
                        ("lose", NoMovesResult::Lose),
                        ("draw", NoMovesResult::Draw),
                        ("pass", NoMovesResult::Pass),
                    ],
                )?,
            })
        }
        "swap" => {
            form(sexp, head, 0, 0)?;
            Ok(Ludeme::SwapMeta)
        }
        other => Err(error(
            sexp.span,
            ParseErrorKind::UnknownLudeme,
            format!("unknown ludeme `{other}`"),
        )),
    }
}

fn section(
    sexp: &Sexp,
    head: &str,
    allowed: &[LudemeKind],
) -> Result<Vec<(Ludeme, Span)>, ParseError> {
    let args = form(sexp, head, 1, usize::MAX)?;
    args.iter()
        .map(|a| {
            let l = ludeme(a)?;
            if !allowed.contains(&l.kind()) {
                return Err(semantic(
                    a.span,
                    format!("`{}` is not allowed in ({head} ...)", l.kind().keyword()),
                ));
            }
            Ok((l, a.span))
        })
        .collect()
}

fn once<T>(slot: &mut Option<T>, value: T, span: Span, name: &str) -> Result<(), ParseError> {
    if slot.is_some() {
        return Err(semantic(span, format!("duplicate ({name} ...) clause")));
    }
    *slot = Some(value);
    Ok(())
}

impl Parser {
    fn game(mut self, sexp: &Sexp) -> Result<GameSpec, ParseError> {
        if sexp.head() != Some("game") {
            return Err(error(sexp.span, ParseErrorKind::Syntax, "expected (game \"name\" ...)"));
        }
        let args = form(sexp, "game", 1, usize::MAX)?;
        let name = match &args[0].kind {
            SexpKind::Str(s) if !s.is_empty() => s.clone(),
            _ => {
                return Err(error(
                    args[0].span,
                    ParseErrorKind::Syntax,
                    "game name must be a non-empty string",
                ))
            }
        };
        for clause in &args[1..] {
            self.clause(clause)?;
        }
        self.finish(name, sexp.span)
    }

    fn clause(&mut self, sexp: &Sexp) -> Result<(), ParseError> {
        let span = sexp.span;
        match head_of(sexp)? {
            "players" => {
                let args = form(sexp, "players", 1, 1)?;
                let n = positive(&args[0], MAX_PLAYERS)?;
                once(&mut self.players, (n, span), span, "players")
            }
            "equipment" => {
                let args = form(sexp, "equipment", 1, usize::MAX)?;
                let decls = args
                    .iter()
                    .map(|a| Ok((container(a)?, a.span)))
                    .collect::<Result<Vec<_>, ParseError>>()?;
                once(&mut self.equipment, (decls, span), span, "equipment")
            }
            "pieces" => {
                let args = form(sexp, "pieces", 1, usize::MAX)?;
                let decls = args
                    .iter()
                    .map(|a| Ok((piece(a)?, a.span)))
                    .collect::<Result<Vec<_>, ParseError>>()?;
                once(&mut self.pieces, (decls, span), span, "pieces")
            }
            "start" => {
                let ls = section(sexp, "start", &[LudemeKind::StartPlace])?;
                self.start.extend(ls);
                Ok(())
            }
            "play" => {
                let ls = section(
                    sexp,
                    "play",
                    &[
                        LudemeKind::PlaceEmpty,
                        LudemeKind::StepMove,
                        LudemeKind::HopCapture,
                    ],
                )?;
                once(&mut self.play, (ls, span), span, "play")
            }
            "end" => {
                let ls = section(
                    sexp,
                    "end",
                    &[
                        LudemeKind::LineEnd,
                        LudemeKind::ConnectEnd,
                        LudemeKind::ReachEnd,
                        LudemeKind::NoMovesEnd,
                    ],
                )?;
                once(&mut self.end, (ls, span), span, "end")
            }
            "meta" => {
                let ls = section(sexp, "meta", &[LudemeKind::SwapMeta])?;
                self.meta.extend(ls);
                Ok(())
            }
            "flags" => {
                let args = form(sexp, "flags", 1, usize::MAX)?;
                let mut flags = (false, false, false);
                for a in args {
                    match symbol(a)? {
                        "stacking" => flags.0 = true,
                        "counts" => flags.1 = true,
                        "amounts" => flags.2 = true,
                        other => return Err(semantic(a.span, format!("unknown flag `{other}`"))),
                    }
                }
                once(&mut self.flags, flags, span, "flags")
            }
            other => Err(error(
                span,
                ParseErrorKind::UnknownLudeme,
                format!("unknown clause `{other}`"),
            )),
        }
    }

    fn finish(self, name: String, span: Span) -> Result<GameSpec, ParseError> {
        let (num_players, _) = self
            .players
            .ok_or_else(|| semantic(span, "missing (players ...) clause"))?;
        let (equipment, _) = self
            .equipment
            .ok_or_else(|| semantic(span, "missing (equipment ...) clause"))?;
        if !matches!(equipment[0].0, ContainerDecl::Board(_)) {
            return Err(semantic(equipment[0].1, "the first container must be the board"));
        }
        for (decl, s) in &equipment[1..] {
            match decl {
                ContainerDecl::Board(_) => {
                    return Err(semantic(*s, "only one board is allowed"));
                }
                ContainerDecl::Hand { owner, .. } if owner.index() >= num_players => {
                    return Err(semantic(*s, format!("hand owner {owner} is not a player")));
                }
                _ => {}
            }
        }
        let (pieces, pieces_span) = self
            .pieces
            .ok_or_else(|| semantic(span, "missing (pieces ...) clause"))?;
        let (play, _) = self
            .play
            .ok_or_else(|| semantic(span, "missing (play ...) clause"))?;
        let (end, _) = self
            .end
            .ok_or_else(|| semantic(span, "missing (end ...) clause"))?;
        let (stacking, counts, amounts) = self.flags.unwrap_or_default();
        if stacking && counts {
            return Err(semantic(span, "a game cannot use both stacking and counts"));
        }
        for (decl, s) in &pieces {
            if let Owner::Player(p) = decl.owner {
                if p.index() >= num_players {
                    return Err(semantic(*s, format!("piece owner {p} is not a player")));
                }
            }
        }
        let spec = GameSpec::assemble(
            name,
            num_players,
            equipment.into_iter().map(|(d, _)| d).collect(),
            pieces.iter().map(|(d, _)| d.clone()).collect(),
            RuleTree {
                start: self.start.iter().map(|(l, _)| l.clone()).collect(),
                play: play.iter().map(|(l, _)| l.clone()).collect(),
                end: end.iter().map(|(l, _)| l.clone()).collect(),
                meta: self.meta.iter().map(|(l, _)| l.clone()).collect(),
            },
            stacking,
            counts,
            amounts,
        );
        let mut seen = std::collections::HashSet::new();
        for p in &spec.piece_types {
            if !seen.insert((p.name.as_str(), p.owner)) {
                return Err(semantic(
                    pieces_span,
                    format!("piece `{}` declared twice for {}", p.name, p.owner),
                ));
            }
        }
        let all = self
            .start
            .iter()
            .chain(&play)
            .chain(&end)
            .chain(&self.meta);
        for (l, s) in all {
            validate_ludeme(&spec, l, *s)?;
        }
        Ok(spec)
    }
}

fn container(sexp: &Sexp) -> Result<ContainerDecl, ParseError> {
    match head_of(sexp)? {
        "board" => {
            let args = form(sexp, "board", 1, 1)?;
            let shape = &args[0];
            let decl = match head_of(shape)? {
                "square" => {
                    let a = form(shape, "square", 2, 2)?;
                    BoardShape::Square {
                        rows: positive(&a[0], MAX_BOARD_EXTENT)?,
                        cols: positive(&a[1], MAX_BOARD_EXTENT)?,
                    }
                }
                "hex-rhombus" => {
                    let a = form(shape, "hex-rhombus", 1, 1)?;
                    BoardShape::HexRhombus {
                        size: positive(&a[0], MAX_BOARD_EXTENT)?,
                    }
                }
                "hex-hex" => {
                    let a = form(shape, "hex-hex", 1, 1)?;
                    BoardShape::HexHex {
                        side: positive(&a[0], MAX_BOARD_EXTENT / 2)?,
                    }
                }
                other => {
                    return Err(semantic(shape.span, format!("unknown board shape `{other}`")))
                }
            };
            Ok(ContainerDecl::Board(decl))
        }
        "hand" => {
            let args = form(sexp, "hand", 2, 2)?;
            Ok(ContainerDecl::Hand {
                capacity: positive(&args[0], MAX_BOARD_EXTENT)?,
                owner: player(&args[1])?,
            })
        }
        other => Err(semantic(sexp.span, format!("unknown container `{other}`"))),
    }
}

fn piece(sexp: &Sexp) -> Result<PieceDecl, ParseError> {
    let items = sexp
        .as_list()
        .ok_or_else(|| error(sexp.span, ParseErrorKind::Syntax, "expected (name owner)"))?;
    if items.len() != 2 {
        return Err(error(
            sexp.span,
            ParseErrorKind::Arity,
            "piece declarations take the form (name owner)",
        ));
    }
    let name = symbol(&items[0])?.to_string();
    let owner = if items[1].as_atom() == Some("each") {
        Owner::Each
    } else {
        Owner::Player(player(&items[1])?)
    };
    Ok(PieceDecl { name, owner })
}

fn validate_region(spec: &GameSpec, r: &Region, span: Span) -> Result<(), ParseError> {
    let board = spec.board();
    let max_row = board.sites.iter().map(|s| s.row).max().unwrap_or(0);
    let max_col = board.sites.iter().map(|s| s.col).max().unwrap_or(0);
    match r {
        Region::Rows(_, b) if *b > max_row => {
            Err(semantic(span, format!("row {b} is outside the board")))
        }
        Region::Cols(_, b) if *b > max_col => {
            Err(semantic(span, format!("column {b} is outside the board")))
        }
        Region::Sites(sites) => match sites.iter().find(|&&s| s >= board.len()) {
            Some(s) => Err(semantic(span, format!("site {s} is outside the board"))),
            None => Ok(()),
        },
        _ => Ok(()),
    }
}

fn validate_piece(spec: &GameSpec, name: &str, span: Span) -> Result<(), ParseError> {
    if spec.piece_types.iter().any(|p| p.name == name) {
        Ok(())
    } else {
        Err(semantic(span, format!("undefined piece `{name}`")))
    }
}

fn validate_owner(spec: &GameSpec, p: Player, span: Span) -> Result<(), ParseError> {
    if p.index() < spec.num_players {
        Ok(())
    } else {
        Err(semantic(span, format!("{p} is not a player in this game")))
    }
}

fn validate_ludeme(spec: &GameSpec, l: &Ludeme, span: Span) -> Result<(), ParseError> {
    let tiling = spec.board().tiling;
    match l {
        Ludeme::StartPlace {
            piece,
            owner,
            region,
            ..
        } => {
            validate_owner(spec, *owner, span)?;
            if spec.piece_id(piece, *owner).is_none() {
                return Err(semantic(span, format!("undefined piece `{piece}` for {owner}")));
            }
            validate_region(spec, region, span)
        }
        Ludeme::PlaceEmpty { piece } => validate_piece(spec, piece, span),
        Ludeme::StepMove {
            piece,
            directions,
            target,
        } => {
            validate_piece(spec, piece, span)?;
            let square_only = directions.iter().any(|d| {
                matches!(
                    d,
                    DirectionSet::Forward | DirectionSet::ForwardDiagonal | DirectionSet::Diagonal
                )
            });
            if square_only && tiling != crate::geometry::Tiling::Square {
                return Err(semantic(span, "forward and diagonal steps need a square board"));
            }
            if *target == StepTarget::Any && !spec.flags.is_stacking {
                return Err(semantic(span, "(to any) is only valid in stacking games"));
            }
            if spec.num_players != 2 {
                return Err(semantic(span, "step-move needs exactly two players"));
            }
            Ok(())
        }
        Ludeme::HopCapture { piece, opening, .. } => {
            validate_piece(spec, piece, span)?;
            if opening.is_some() && tiling != crate::geometry::Tiling::Square {
                return Err(semantic(span, "center-or-corner opening needs a square board"));
            }
            if spec.num_players != 2 {
                return Err(semantic(span, "hop-capture needs exactly two players"));
            }
            Ok(())
        }
        Ludeme::LineEnd { .. } | Ludeme::NoMovesEnd { .. } => Ok(()),
        Ludeme::ConnectEnd { owner, regions } => {
            validate_owner(spec, *owner, span)?;
            validate_region(spec, &regions[0], span)?;
            validate_region(spec, &regions[1], span)
        }
        Ludeme::ReachEnd { owner, region } => {
            validate_owner(spec, *owner, span)?;
            validate_region(spec, region, span)
        }
        Ludeme::SwapMeta => {
            if spec.num_players != 2 {
                return Err(semantic(span, "the swap rule needs exactly two players"));
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        (game "tiny"
          (players 2)
          (equipment (board (square 3 3)))
          (pieces (stone each))
          (play (place-empty stone))
          (end (line-end 3 win) (no-moves-end draw)))
    "#;

    fn err_kind(text: &str) -> ParseErrorKind {
        parse_game(text).unwrap_err().kind
    }

    #[test]
    fn minimal_game_parses() {
        let spec = parse_game(MINIMAL).unwrap();
        assert_eq!(spec.name, "tiny");
        assert_eq!(spec.num_players, 2);
        assert_eq!(spec.piece_types.len(), 2);
        assert!(spec.flags.placement_only);
        assert!(!spec.flags.uses_swap_rule);
        assert_eq!(spec.total_sites(), 9);
    }

    #[test]
    fn unbalanced_input() {
        let err = parse_game("(game").unwrap_err();
        assert_eq!(err.offset, 5);
        assert_eq!(err.kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn unknown_ludeme() {
        let text = MINIMAL.replace("(line-end 3 win)", "(capture-all)");
        assert_eq!(err_kind(&text), ParseErrorKind::UnknownLudeme);
    }

    #[test]
    fn arity_mismatch() {
        let text = MINIMAL.replace("(line-end 3 win)", "(line-end 3)");
        assert_eq!(err_kind(&text), ParseErrorKind::Arity);
        let text = MINIMAL.replace("(players 2)", "(players 2 3)");
        assert_eq!(err_kind(&text), ParseErrorKind::Arity);
    }

    #[test]
    fn undefined_piece() {
        let text = MINIMAL.replace("(place-empty stone)", "(place-empty pawn)");
        let err = parse_game(&text).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Semantic);
        assert!(err.message.contains("pawn"));
    }

    #[test]
    fn region_outside_board() {
        let text = MINIMAL.replace(
            "(line-end 3 win)",
            "(reach-end 1 (rows 3 3))",
        );
        assert_eq!(err_kind(&text), ParseErrorKind::Semantic);
    }

    #[test]
    fn ludeme_in_wrong_section() {
        let text = MINIMAL.replace("(place-empty stone)", "(line-end 3 win)");
        assert_eq!(err_kind(&text), ParseErrorKind::Semantic);
    }

    #[test]
    fn missing_clauses() {
        let text = MINIMAL.replace("(play (place-empty stone))", "");
        assert_eq!(err_kind(&text), ParseErrorKind::Semantic);
        let text = MINIMAL.replace("(end (line-end 3 win) (no-moves-end draw))", "");
        assert_eq!(err_kind(&text), ParseErrorKind::Semantic);
    }

    #[test]
    fn error_positions_point_at_the_form() {
        let text = "(game \"x\"\n  (players 2)\n  (bogus 1))";
        let err = parse_game(text).unwrap_err();
        assert_eq!((err.line, err.column), (3, 3));
    }

    #[test]
    fn invalid_utf8() {
        let err = parse_game_bytes(b"(game \xff)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Lexical);
        assert_eq!(err.offset, 6);
    }

    #[test]
    fn movement_game_is_not_placement_only() {
        let text = r#"
            (game "steps"
              (players 2)
              (equipment (board (square 4 4)))
              (pieces (pawn each))
              (start (start-place pawn 1 (rows 0 0)) (start-place pawn 2 (rows 3 3)))
              (play (step-move pawn (directions forward) (to empty)))
              (end (reach-end 1 (edge north)) (reach-end 2 (edge south)) (no-moves-end lose)))
        "#;
        let spec = parse_game(text).unwrap();
        assert!(!spec.flags.placement_only);
    }
}
