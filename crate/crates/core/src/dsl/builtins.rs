use std::collections::BTreeMap;

const GAMES: &[(&str, &str)] = &[
    ("breakthrough-6", include_str!("../../games/breakthrough-6.lgd")),
    ("breakthrough-8", include_str!("../../games/breakthrough-8.lgd")),
    ("gomoku-9", include_str!("../../games/gomoku-9.lgd")),
    ("hex-11", include_str!("../../games/hex-11.lgd")),
    ("hex-5", include_str!("../../games/hex-5.lgd")),
    ("konane-6", include_str!("../../games/konane-6.lgd")),
    ("squava", include_str!("../../games/squava.lgd")),
    ("yavalath", include_str!("../../games/yavalath.lgd")),
];

/// Sources of every built-in game, keyed by name.
pub fn builtin_games() -> BTreeMap<&'static str, &'static str> {
    GAMES.iter().copied().collect()
}

pub fn builtin_game(name: &str) -> Option<&'static str> {
    GAMES.iter().find(|(n, _)| *n == name).map(|&(_, src)| src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_game, print_game};

    #[test]
    fn required_games_present() {
        let games = builtin_games();
        for name in [
            "hex-5",
            "hex-11",
            "gomoku-9",
            "yavalath",
            "squava",
            "breakthrough-6",
            "breakthrough-8",
            "konane-6",
        ] {
            assert!(games.contains_key(name), "missing {name}");
        }
    }

    #[test]
    fn all_parse_and_names_match() {
        for (name, src) in builtin_games() {
            let spec = parse_game(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(spec.name, name);
            assert_eq!(spec.num_players, 2);
        }
    }

    #[test]
    fn print_round_trip() {
        for (name, src) in builtin_games() {
            let spec = parse_game(src).unwrap();
            let printed = print_game(&spec);
            let again = parse_game(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
            assert_eq!(again, spec, "{name}");
        }
    }

    #[test]
    fn flag_inference() {
        let flags = |n: &str| parse_game(builtin_game(n).unwrap()).unwrap().flags;
        for n in ["hex-5", "hex-11", "gomoku-9", "yavalath", "squava"] {
            assert!(flags(n).placement_only, "{n}");
        }
        for n in ["breakthrough-6", "breakthrough-8", "konane-6"] {
            assert!(!flags(n).placement_only, "{n}");
        }
        assert!(flags("hex-11").uses_swap_rule);
        assert!(!flags("breakthrough-6").uses_swap_rule);
        assert!(!flags("gomoku-9").uses_swap_rule);
    }
}
