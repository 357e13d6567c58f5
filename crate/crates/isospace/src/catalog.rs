//! The worked catalogue of games.
//!
//! Every game the solver is exercised on lives here: the extensive forms,
//! the named families of constrained spaces each player may commit to, and
//! the reference comparison tables the solver is expected to reproduce.
//! The registry is read-only — callers obtain fresh [`GameDefinition`]
//! values from [`get_game`] and space lists from [`family_specs`], and the
//! embedded [`ReferenceTable`] values double as a regression oracle via
//! [`check_reference`].

use crate::error::Error;
use crate::gamemodel::{GameBuilder, GameDefinition, NodeTag, ObsEdge, PlayerRef, SpaceSpec};
use crate::infomeasures;
use crate::poly::MultilinearPolynomial as Poly;
use crate::probspace::{MoveVar, ObservableMap};
use crate::solver::{self, EquilibriumKind};
use crate::{rat, rat_to_f64, rint, Rat};

/// One registry row: the game's name, a one-line description, and the space
/// families and reference tables defined for it.
#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub players: &'static [&'static str],
    /// Human-readable note on the size parameters the game accepts.
    pub params: &'static str,
    pub families: &'static [&'static str],
    pub tables: &'static [&'static str],
}

const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "twostage",
        summary: "Leader-follower coin pair; the follower's reply coins can be pinned to either leader outcome",
        players: &["X", "Y"],
        params: "",
        families: &["unit", "nine", "correlation"],
        tables: &["nine", "correlation"],
    },
    CatalogEntry {
        name: "dtree",
        summary: "One decision maker, two sequential binary moves, optionally correlated",
        players: &["Z"],
        params: "",
        families: &["unit", "correlation"],
        tables: &["correlation"],
    },
    CatalogEntry {
        name: "chainstore",
        summary: "Entry deterrence; the incumbent's fight coin exists only after entry",
        players: &["X", "Y"],
        params: "",
        families: &["unit", "deterrence"],
        tables: &["deterrence"],
    },
    CatalogEntry {
        name: "trust",
        summary: "A binary advance followed by a four-way split decision",
        players: &["X", "Y"],
        params: "",
        families: &["unit", "threshold"],
        tables: &["threshold"],
    },
    CatalogEntry {
        name: "ultimatum",
        summary: "Offers 1..=M answered by an accept coin per offer",
        players: &["X", "Y"],
        params: "M: pot size, 2..=64 (default 10)",
        families: &["unit", "threshold"],
        tables: &["threshold"],
    },
    CatalogEntry {
        name: "publicgoods",
        summary: "Two simultaneous contribution rounds; second moves may be anti-tied to the first",
        players: &["X", "Y"],
        params: "",
        families: &["unit", "anticorr-x", "anticorr-y"],
        tables: &["anticorr"],
    },
    CatalogEntry {
        name: "aumann27",
        summary: "A 2x2 coordination game with two strict corners and a mixed point",
        players: &["X", "Y"],
        params: "",
        families: &["unit"],
        tables: &[],
    },
    CatalogEntry {
        name: "aumann-device",
        summary: "The coordination game mediated by a three-state chance signal with partitioned views",
        players: &["X", "Y"],
        params: "",
        families: &["unit"],
        tables: &[],
    },
    CatalogEntry {
        name: "centipede",
        summary: "Six-legged alternating take-or-pass chain",
        players: &["X", "Y"],
        params: "",
        families: &["unit", "markov-x", "markov-y"],
        tables: &["markov"],
    },
    CatalogEntry {
        name: "ipd",
        summary: "N-stage repeated prisoner's dilemma with copy-the-opponent space families",
        players: &["X", "Y"],
        params: "N: stages, 1..=8 (default 2)",
        families: &[
            "unit",
            "named-x",
            "named-y",
            "extended-x",
            "extended-y",
            "reduced-x",
            "reduced-y",
            "nstage-x",
            "nstage-y",
            "endgame-x",
            "endgame-y",
        ],
        tables: &["named", "extended", "reduced", "nstage", "endgame"],
    },
    CatalogEntry {
        name: "dice",
        summary: "A single categorical toss; face counts compared by volume-weighted entropy",
        players: &["Z"],
        params: "n: faces, 2..=12 (default 2)",
        families: &["unit"],
        tables: &[],
    },
    CatalogEntry {
        name: "twocoin",
        summary: "Two independent coins observed only through their parity",
        players: &["Z"],
        params: "",
        families: &["unit"],
        tables: &[],
    },
];

/// The full registry, in display order.
pub fn list() -> &'static [CatalogEntry] {
    CATALOG
}

/// Look up one registry row.
pub fn entry(name: &str) -> Result<&'static CatalogEntry, Error> {
    CATALOG
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownGame(name.to_string()))
}

/// Size parameters accepted by [`get_game`].  Games without a free size
/// ignore both fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct GameParams {
    /// Stage count for `ipd`, face count for `dice`.
    pub n: Option<u32>,
    /// Pot size for `ultimatum`.
    pub m: Option<u32>,
}

/// Construct a catalogued game by name.
pub fn get_game(name: &str, params: &GameParams) -> Result<GameDefinition, Error> {
    match name {
        "twostage" => Ok(twostage()),
        "dtree" => Ok(dtree()),
        "chainstore" => Ok(chainstore()),
        "trust" => Ok(trust()),
        "ultimatum" => {
            let m = params.m.unwrap_or(10);
            if !(2..=64).contains(&m) {
                return Err(Error::BadParams(format!("ultimatum pot must be 2..=64, got {m}")));
            }
            Ok(ultimatum(m))
        }
        "publicgoods" => Ok(publicgoods()),
        "aumann27" => Ok(aumann27()),
        "aumann-device" => Ok(aumann_device()),
        "centipede" => Ok(centipede()),
        "ipd" => {
            let n = params.n.unwrap_or(2);
            if !(1..=8).contains(&n) {
                return Err(Error::BadParams(format!("ipd stage count must be 1..=8, got {n}")));
            }
            Ok(ipd(n))
        }
        "dice" => {
            let n = params.n.unwrap_or(2);
            if !(2..=12).contains(&n) {
                return Err(Error::BadParams(format!("dice face count must be 2..=12, got {n}")));
            }
            Ok(dice(n))
        }
        "twocoin" => Ok(twocoin()),
        _ => Err(Error::UnknownGame(name.to_string())),
    }
}

/// `c + a·x + b·y + d·x·y` over two binary moves.
fn bilinear(c: i64, a: i64, b: i64, d: i64, x: usize, y: usize) -> Poly {
    let xv = Poly::move_value(x, 1, &[0, 1]);
    let yv = Poly::move_value(y, 1, &[0, 1]);
    Poly::int(c)
        + xv.scale(&rint(a))
        + yv.scale(&rint(b))
        + (xv * yv).scale(&rint(d))
}

fn twostage() -> GameDefinition {
    let mut b = GameBuilder::new("twostage", &["X", "Y"]);
    let x = b.binary_move("x", 0, 0);
    let y = b.binary_move("y", 1, 1);
    b.names(x, &[], &["p", "p0"]);
    b.names(y, &[(x, 0)], &["q", "q0"]);
    b.names(y, &[(x, 1)], &["r", "r0"]);
    b.payoff(0, bilinear(3, -2, -1, 4, x, y));
    b.payoff(1, bilinear(1, 3, 1, -2, x, y));
    b.build()
}

fn dtree() -> GameDefinition {
    let mut b = GameBuilder::new("dtree", &["Z"]);
    let x = b.binary_move("x", 0, 0);
    let y = b.binary_move("y", 0, 1);
    b.names(x, &[], &["p", "p0"]);
    b.names(y, &[(x, 0)], &["q", "q0"]);
    b.names(y, &[(x, 1)], &["r", "r0"]);
    b.payoff(0, bilinear(0, 2, 3, -4, x, y));
    b.build()
}

fn chainstore() -> GameDefinition {
    let mut b = GameBuilder::new("chainstore", &["X", "Y"]);
    let x = b.binary_move("x", 0, 0);
    let y = b.binary_move("y", 1, 1);
    b.condition(y, vec![(x, 1)]);
    b.names(x, &[], &["p", "p0"]);
    b.names(y, &[(x, 1)], &["q", "q0"]);
    b.payoff(0, bilinear(0, 1, 0, -2, x, y));
    b.payoff(1, bilinear(1, -1, 0, -1, x, y));
    b.build()
}

fn trust() -> GameDefinition {
    let mut b = GameBuilder::new("trust", &["X", "Y"]);
    let x = b.binary_move("x", 0, 0);
    let y = b.add_move("y", vec![0, 1, 2, 3], PlayerRef::Player(1), 1);
    b.condition(y, vec![(x, 1)]);
    b.names(x, &[], &["p", "p0"]);
    b.names(y, &[(x, 1)], &["y0", "y1", "y2", "y3"]);
    let xv = Poly::move_value(x, 1, &[0, 1]);
    let yl = Poly::move_linear(y, &[0, 1, 2, 3]);
    b.payoff(0, Poly::int(1) + xv.scale(&rint(2)) - (xv.clone() * yl.clone()));
    b.payoff(1, xv * yl);
    b.build()
}

fn ultimatum(m: u32) -> GameDefinition {
    let mut b = GameBuilder::new("ultimatum", &["X", "Y"]);
    let offers: Vec<u8> = (1..=m as u8).collect();
    let x = b.add_move("x", offers.clone(), PlayerRef::Player(0), 0);
    let a = b.binary_move("a", 1, 1);
    let offer_names: Vec<String> = offers.iter().map(|v| format!("x{v}")).collect();
    let refs: Vec<&str> = offer_names.iter().map(String::as_str).collect();
    b.names(x, &[], &refs);
    for &v in &offers {
        let accept = format!("a{v}");
        let reject = format!("a{v}c");
        b.names(a, &[(x, v)], &[&accept, &reject]);
    }
    let av = Poly::move_value(a, 1, &[0, 1]);
    let xl = Poly::move_linear(x, &offers);
    b.payoff(0, (Poly::int(m as i64) - xl.clone()) * av.clone());
    b.payoff(1, xl * av);
    b.build()
}

fn publicgoods() -> GameDefinition {
    let mut b = GameBuilder::new("publicgoods", &["X", "Y"]);
    let x1 = b.binary_move("x1", 0, 0);
    let y1 = b.binary_move("y1", 1, 0);
    let x2 = b.binary_move("x2", 0, 1);
    let y2 = b.binary_move("y2", 1, 1);
    b.names(x1, &[], &["px1", "px1c"]);
    b.names(y1, &[], &["py1", "py1c"]);
    let v = |m: usize| Poly::move_value(m, 1, &[0, 1]);
    b.payoff(
        0,
        Poly::int(4) - v(x1) + v(y1).scale(&rint(3)) - v(x2).scale(&rint(4))
            - v(y2).scale(&rint(8)),
    );
    b.payoff(
        1,
        Poly::int(4) - v(y1) + v(x1).scale(&rint(3)) - v(y2).scale(&rint(4))
            - v(x2).scale(&rint(8)),
    );
    b.build()
}

fn aumann27() -> GameDefinition {
    let mut b = GameBuilder::new("aumann27", &["X", "Y"]);
    let x = b.binary_move("x", 0, 0);
    let y = b.binary_move("y", 1, 0);
    b.names(x, &[], &["p", "p0"]);
    b.names(y, &[], &["q", "q0"]);
    b.payoff(0, bilinear(6, 1, -4, -3, x, y));
    b.payoff(1, bilinear(6, -4, 1, -3, x, y));
    b.build()
}

fn aumann_device() -> GameDefinition {
    let mut b = GameBuilder::new("aumann-device", &["X", "Y"]);
    let third = rat(1, 3);
    let e = b.chance_move("e", vec![0, 1, 2], vec![third.clone(), third.clone(), third], 0);
    let x = b.binary_move("x", 0, 1);
    let y = b.binary_move("y", 1, 1);
    b.observes(x, vec![ObsEdge::coarse(e, vec![vec![0], vec![1, 2]])]);
    b.observes(y, vec![ObsEdge::coarse(e, vec![vec![2], vec![0, 1]])]);
    b.names_coarse(x, &[(e, &[0])], &["pA", "pA0"]);
    b.names_coarse(x, &[(e, &[1, 2])], &["pN", "pN0"]);
    b.names_coarse(y, &[(e, &[0, 1])], &["qN", "qN0"]);
    b.names_coarse(y, &[(e, &[2])], &["qC", "qC0"]);
    b.payoff(0, bilinear(6, 1, -4, -3, x, y));
    b.payoff(1, bilinear(6, -4, 1, -3, x, y));
    b.build()
}

fn centipede() -> GameDefinition {
    let mut b = GameBuilder::new("centipede", &["X", "Y"]);
    let x1 = b.binary_move("x1", 0, 0);
    let y1 = b.binary_move("y1", 1, 1);
    let x2 = b.binary_move("x2", 0, 2);
    let y2 = b.binary_move("y2", 1, 3);
    let x3 = b.binary_move("x3", 0, 4);
    let y3 = b.binary_move("y3", 1, 5);
    b.condition(y1, vec![(x1, 1)]);
    b.condition(x2, vec![(x1, 1), (y1, 1)]);
    b.condition(y2, vec![(x1, 1), (y1, 1), (x2, 1)]);
    b.condition(x3, vec![(x1, 1), (y1, 1), (x2, 1), (y2, 1)]);
    b.condition(y3, vec![(x1, 1), (y1, 1), (x2, 1), (y2, 1), (x3, 1)]);
    b.names(x1, &[], &["px1", "px1c"]);
    b.names(y1, &[(x1, 1)], &["py1", "py1c"]);
    b.names(x2, &[(x1, 1), (y1, 1)], &["px2", "px2c"]);
    b.names(y2, &[(x1, 1), (y1, 1), (x2, 1)], &["py2", "py2c"]);
    b.names(x3, &[(x1, 1), (y1, 1), (x2, 1), (y2, 1)], &["px3", "px3c"]);
    b.names(y3, &[(x1, 1), (y1, 1), (x2, 1), (y2, 1), (x3, 1)], &["py3", "py3c"]);
    let on = |m: usize| Poly::move_value(m, 1, &[0, 1]);
    let off = |m: usize| Poly::move_value(m, 0, &[0, 1]);
    // Leaf payoffs in play order: stopping at the k-th chance to continue,
    // then the full pass-through path.
    let turn = [x1, y1, x2, y2, x3, y3];
    let stop_x = [1, 0, 3, 2, 5, 4];
    let stop_y = [0, 2, 1, 4, 3, 6];
    let mut px = Poly::zero();
    let mut py = Poly::zero();
    let mut reach = Poly::int(1);
    for (k, &mv) in turn.iter().enumerate() {
        px = px + (reach.clone() * off(mv)).scale(&rint(stop_x[k]));
        py = py + (reach.clone() * off(mv)).scale(&rint(stop_y[k]));
        reach = reach * on(mv);
    }
    px = px + reach.clone().scale(&rint(6));
    py = py + reach.scale(&rint(5));
    b.payoff(0, px);
    b.payoff(1, py);
    b.build()
}

fn ipd(n: u32) -> GameDefinition {
    let mut b = GameBuilder::new("ipd", &["X", "Y"]);
    let mut px = Poly::zero();
    let mut py = Poly::zero();
    let mut first = (0, 0);
    for k in 1..=n {
        let x = b.binary_move(&format!("x{k}"), 0, (k - 1) as usize);
        let y = b.binary_move(&format!("y{k}"), 1, (k - 1) as usize);
        if k == 1 {
            first = (x, y);
        }
        px = px + bilinear(2, 1, -2, 0, x, y);
        py = py + bilinear(2, -2, 1, 0, x, y);
    }
    b.names(first.0, &[], &["px1", "px1c"]);
    b.names(first.1, &[], &["py1", "py1c"]);
    b.payoff(0, px);
    b.payoff(1, py);
    b.build()
}

fn dice(n: u32) -> GameDefinition {
    let mut b = GameBuilder::new("dice", &["Z"]);
    let faces: Vec<u8> = (0..n as u8).collect();
    let x = b.add_move("x", faces, PlayerRef::Player(0), 0);
    let face_names: Vec<String> = (0..n).map(|v| format!("f{v}")).collect();
    let refs: Vec<&str> = face_names.iter().map(String::as_str).collect();
    b.names(x, &[], &refs);
    b.payoff(0, Poly::zero());
    b.build()
}

fn twocoin() -> GameDefinition {
    let mut b = GameBuilder::new("twocoin", &["Z"]);
    let c1 = b.binary_move("c1", 0, 0);
    let c2 = b.binary_move("c2", 0, 0);
    b.names(c1, &[], &["p", "p0"]);
    b.names(c2, &[], &["q", "q0"]);
    b.payoff(0, bilinear(0, 1, 1, -2, c1, c2));
    b.observables(ObservableMap::Table {
        moves: vec![MoveVar { name: "s".into(), domain: vec![0, 1] }],
        map: vec![
            (vec![0, 0], vec![0]),
            (vec![0, 1], vec![1]),
            (vec![1, 0], vec![1]),
            (vec![1, 1], vec![0]),
        ],
    });
    b.build()
}

/// The spaces of a named family, in canonical row order.
///
/// Every game accepts the one-element family `"unit"` (the unconstrained
/// behavioural space), used as the trivial axis of one-dimensional tables.
pub fn family_specs(game: &GameDefinition, family: &str) -> Result<Vec<SpaceSpec>, Error> {
    if family == "unit" {
        return Ok(vec![SpaceSpec::free("B")]);
    }
    match (game.name.as_str(), family) {
        ("twostage", "nine") => Ok(nine_specs()),
        ("twostage", "correlation") | ("dtree", "correlation") => Ok(vec![
            SpaceSpec::free("B"),
            SpaceSpec::free("rho=-1").with_correlation("x", "y", -1.0),
            SpaceSpec::free("rho=0").with_correlation("x", "y", 0.0),
            SpaceSpec::free("rho=+1").with_correlation("x", "y", 1.0),
        ]),
        ("chainstore", "deterrence") => Ok(vec![
            SpaceSpec::free("B"),
            SpaceSpec::free("q=0").with_fix("q", rint(0)),
            SpaceSpec::free("q=1").with_fix("q", rint(1)),
        ]),
        ("trust", "threshold") => {
            let mut out = vec![SpaceSpec::free("B")];
            for v in 0..=3u8 {
                out.push(SpaceSpec::free(&format!("y={v}")).with_uniform("y", NodeTag::Value(v)));
            }
            Ok(out)
        }
        ("ultimatum", "threshold") => {
            let x = game.move_index("x")?;
            let m = game.moves[x].domain.len() as u8;
            let mut out = vec![SpaceSpec::free("B")];
            for bar in 2..=m {
                let mut s = SpaceSpec::free(&format!("ybar={bar}"));
                for v in 1..=m {
                    s = s.with_fix(&format!("a{v}"), rint(i64::from(v >= bar)));
                }
                if bar == m {
                    // Every offer is then worth zero to the proposer; resolve
                    // the indifference toward meeting the threshold.
                    s = s.with_prefer("x", m);
                }
                out.push(s);
            }
            Ok(out)
        }
        ("publicgoods", "anticorr-x") => Ok(vec![
            SpaceSpec::free("B"),
            SpaceSpec::free("x2=1-y1").with_uniform("x2", NodeTag::Anti("y1".into())),
        ]),
        ("publicgoods", "anticorr-y") => Ok(vec![
            SpaceSpec::free("B"),
            SpaceSpec::free("y2=1-x1").with_uniform("y2", NodeTag::Anti("x1".into())),
        ]),
        ("centipede", "markov-x") => Ok(markov_specs("x", "y", 2)),
        ("centipede", "markov-y") => Ok(markov_specs("y", "x", 3)),
        ("ipd", _) => ipd_family(game, family),
        _ => Err(Error::UnknownFamily(format!("{family} (game `{}`)", game.name))),
    }
}

/// The nine joint spaces of the twostage game: the follower's reply coin
/// after each leader outcome is anti-pinned, free, or pinned, written as a
/// sign pair over (q, r).
fn nine_specs() -> Vec<SpaceSpec> {
    let signs = ['-', '0', '+'];
    let mut out = Vec::new();
    for &u in &signs {
        for &v in &signs {
            let mut s = SpaceSpec::free(&format!("{u}{v}"));
            s = match u {
                '-' => s.with_fix("q", rint(1)),
                '+' => s.with_fix("q", rint(0)),
                _ => s,
            };
            s = match v {
                '-' => s.with_fix("r", rint(0)),
                '+' => s.with_fix("r", rint(1)),
                _ => s,
            };
            out.push(s);
        }
    }
    out
}

/// Copy-the-opponent families for the centipede: each of `me`'s later moves
/// may be pinned to the opponent move one turn earlier.  Rows run from the
/// fully pinned space down to the free one, dropping the latest-pinned move
/// first.
fn markov_specs(me: &str, opp: &str, count: u32) -> Vec<SpaceSpec> {
    let mut out = Vec::new();
    for mask in (0..1u32 << count).rev() {
        let mut s = SpaceSpec::free("");
        let mut label = Vec::new();
        for k in 1..=count {
            if mask & (1 << (k - 1)) != 0 {
                let (mv, src) = if me == "x" {
                    (format!("{me}{}", k + 1), format!("{opp}{k}"))
                } else {
                    (format!("{me}{k}"), format!("{opp}{k}"))
                };
                label.push(format!("{mv}={src}"));
                s = s.with_uniform(&mv, NodeTag::Copy(src));
            }
        }
        s.label = if label.is_empty() { "B".to_string() } else { label.join(",") };
        out.push(s);
    }
    out
}

fn ipd_family(game: &GameDefinition, family: &str) -> Result<Vec<SpaceSpec>, Error> {
    let n = (game.moves.len() / 2) as u32;
    let (base, me, opp) = if let Some(b) = family.strip_suffix("-x") {
        (b, "x", "y")
    } else if let Some(b) = family.strip_suffix("-y") {
        (b, "y", "x")
    } else {
        return Err(Error::UnknownFamily(format!("{family} (game `ipd`)")));
    };
    let copy_from = |s: SpaceSpec, stage: u32| {
        s.with_uniform(&format!("{me}{stage}"), NodeTag::Copy(format!("{opp}{}", stage - 1)))
    };
    match base {
        "named" if n == 2 => Ok(vec![
            copy_from(SpaceSpec::free("MKV"), 2),
            SpaceSpec::free("B"),
            copy_from(SpaceSpec::free("TFT").with_uniform(&format!("{me}1"), NodeTag::Value(0)), 2),
            SpaceSpec::free("ALLD")
                .with_uniform(&format!("{me}1"), NodeTag::Value(1))
                .with_uniform(&format!("{me}2"), NodeTag::Value(1)),
        ]),
        "extended" if n == 2 => Ok((0..16u8).rev().map(|code| second_move_spec(code, me, opp)).collect()),
        "reduced" if n == 2 => {
            Ok([15u8, 8, 7, 0].iter().map(|&code| second_move_spec(code, me, opp)).collect())
        }
        "nstage" if n >= 2 => {
            let mut mkv = SpaceSpec::free("MKV");
            for stage in 2..=n {
                mkv = copy_from(mkv, stage);
            }
            Ok(vec![mkv, SpaceSpec::free("B")])
        }
        "endgame" if n >= 2 => {
            let mut out = Vec::new();
            for k in 0..n {
                let mut s = SpaceSpec::free(&format!("k={k}"));
                for stage in 2..=(n - k) {
                    s = copy_from(s, stage);
                }
                out.push(s);
            }
            Ok(out)
        }
        _ => Err(Error::UnknownFamily(format!("{family} (game `ipd`, N={n})"))),
    }
}

/// One of the sixteen second-move commitment patterns of the two-stage
/// prisoner's dilemma.  The label runs over the four first-round histories
/// (0,0), (0,1), (1,0), (1,1): `+` pins `me`'s second move to the opponent's
/// first at that history, `0` leaves it free.
fn second_move_spec(code: u8, me: &str, opp: &str) -> SpaceSpec {
    let mut label = String::new();
    let mut rows = Vec::new();
    for pos in 0..4u8 {
        let pinned = code & (1 << (3 - pos)) != 0;
        label.push(if pinned { '+' } else { '0' });
        if pinned {
            let history = vec![
                ("x1".to_string(), (pos >> 1) & 1),
                ("y1".to_string(), pos & 1),
            ];
            rows.push((history, NodeTag::Copy(format!("{opp}1"))));
        }
    }
    SpaceSpec::free(&label).with_tag(&format!("{me}2"), crate::gamemodel::MoveTag::PerHistory(rows))
}

/// A comparison table the solver must reproduce, with the payoffs of the
/// first (canonical) equilibrium in each listed cell.
#[derive(Debug, Clone)]
pub struct ReferenceTable {
    pub name: &'static str,
    pub rows: &'static str,
    pub cols: &'static str,
    /// Which player's commitment varies along the rows (used when marking
    /// meta-stable cells on a rendered table).
    pub row_player: usize,
    /// Whether `cells` covers the whole grid.
    pub complete: bool,
    pub source: &'static str,
    pub cells: Vec<((usize, usize), Vec<Rat>)>,
}

fn int_cells(grid: &[&[(i64, i64)]]) -> Vec<((usize, usize), Vec<Rat>)> {
    let mut cells = Vec::new();
    for (i, row) in grid.iter().enumerate() {
        for (j, &(x, y)) in row.iter().enumerate() {
            cells.push(((i, j), vec![rint(x), rint(y)]));
        }
    }
    cells
}

/// The reference tables defined for `game` (possibly none).  Entries whose
/// `complete` flag is false pin only a subset of cells.
pub fn reference_tables(game: &GameDefinition) -> Result<Vec<ReferenceTable>, Error> {
    match game.name.as_str() {
        "twostage" => Ok(vec![
            ReferenceTable {
                name: "nine",
                rows: "nine",
                cols: "unit",
                row_player: 1,
                complete: true,
                source: "table.twostage-nine",
                cells: [(2, 2), (2, 2), (4, 3), (2, 2), (2, 2), (4, 3), (3, 1), (3, 1), (4, 3)]
                    .iter()
                    .enumerate()
                    .map(|(i, &(x, y))| ((i, 0), vec![rint(x), rint(y)]))
                    .collect(),
            },
            ReferenceTable {
                name: "correlation",
                rows: "correlation",
                cols: "unit",
                row_player: 0,
                complete: true,
                source: "table.twostage-rho",
                cells: vec![
                    ((0, 0), vec![rint(2), rint(2)]),
                    ((1, 0), vec![rint(2), rint(2)]),
                    ((2, 0), vec![rat(5, 2), rat(5, 2)]),
                    ((3, 0), vec![rint(4), rint(3)]),
                ],
            },
        ]),
        "dtree" => Ok(vec![ReferenceTable {
            name: "correlation",
            rows: "correlation",
            cols: "unit",
            row_player: 0,
            complete: true,
            source: "table.dtree-rho",
            cells: vec![
                ((0, 0), vec![rint(3)]),
                ((1, 0), vec![rint(3)]),
                ((2, 0), vec![rint(3)]),
                ((3, 0), vec![rint(1)]),
            ],
        }]),
        "chainstore" => Ok(vec![ReferenceTable {
            name: "deterrence",
            rows: "deterrence",
            cols: "unit",
            row_player: 1,
            complete: true,
            source: "table.chainstore-deterrence",
            cells: int_cells(&[&[(1, 0)], &[(1, 0)], &[(0, 1)]]),
        }]),
        "trust" => Ok(vec![ReferenceTable {
            name: "threshold",
            rows: "threshold",
            cols: "unit",
            row_player: 1,
            complete: true,
            source: "table.trust-threshold",
            cells: int_cells(&[&[(1, 0)], &[(3, 0)], &[(2, 1)], &[(1, 0)], &[(1, 0)]]),
        }]),
        "ultimatum" => {
            let x = game.move_index("x")?;
            let m = game.moves[x].domain.len() as i64;
            let mut cells = vec![((0usize, 0usize), vec![rint(m - 1), rint(1)])];
            for bar in 2..=m {
                cells.push(((bar as usize - 1, 0), vec![rint(m - bar), rint(bar)]));
            }
            Ok(vec![ReferenceTable {
                name: "threshold",
                rows: "threshold",
                cols: "unit",
                row_player: 1,
                complete: true,
                source: "table.ultimatum-threshold",
                cells,
            }])
        }
        "publicgoods" => Ok(vec![ReferenceTable {
            name: "anticorr",
            rows: "anticorr-x",
            cols: "anticorr-y",
            row_player: 0,
            complete: true,
            source: "table.publicgoods-anticorr",
            cells: int_cells(&[&[(4, 4), (3, 7)], &[(7, 3), (6, 6)]]),
        }]),
        "centipede" => Ok(vec![ReferenceTable {
            name: "markov",
            rows: "markov-y",
            cols: "markov-x",
            row_player: 1,
            complete: true,
            source: "table.centipede-markov",
            cells: int_cells(&[
                &[(6, 5), (6, 5), (6, 5), (6, 5)],
                &[(6, 5), (6, 5), (6, 5), (6, 5)],
                &[(6, 5), (6, 5), (6, 5), (6, 5)],
                &[(6, 5), (6, 5), (6, 5), (6, 5)],
                &[(4, 6), (4, 6), (5, 3), (5, 3)],
                &[(4, 6), (4, 6), (5, 3), (5, 3)],
                &[(4, 6), (4, 6), (2, 4), (3, 1)],
                &[(4, 6), (4, 6), (2, 4), (1, 0)],
            ]),
        }]),
        "ipd" => {
            let n = (game.moves.len() / 2) as i64;
            let mut out = Vec::new();
            if n == 2 {
                out.push(ReferenceTable {
                    name: "named",
                    rows: "named-x",
                    cols: "named-y",
                    row_player: 0,
                    complete: true,
                    source: "table.ipd-named",
                    cells: int_cells(&[
                        &[(4, 4), (3, 3), (4, 4), (2, 2)],
                        &[(3, 3), (2, 2), (5, 2), (2, 2)],
                        &[(4, 4), (2, 5), (4, 4), (1, 4)],
                        &[(2, 2), (2, 2), (4, 1), (2, 2)],
                    ]),
                });
                let class_of_code = |xside: bool, code: u8| -> (u8, u8) {
                    if xside {
                        ((code >> 3) & 1, (code >> 1) & 1)
                    } else {
                        ((code >> 3) & 1, (code >> 2) & 1)
                    }
                };
                let mut extended = Vec::new();
                for i in 0..16usize {
                    for j in 0..16usize {
                        let xc = class_of_code(true, 15 - i as u8);
                        let yc = class_of_code(false, 15 - j as u8);
                        extended.push(((i, j), second_move_class_value(xc, yc)));
                    }
                }
                out.push(ReferenceTable {
                    name: "extended",
                    rows: "extended-x",
                    cols: "extended-y",
                    row_player: 0,
                    complete: true,
                    source: "table.ipd-extended",
                    cells: extended,
                });
                let reps = [15u8, 8, 7, 0];
                let mut reduced = Vec::new();
                for (i, &ci) in reps.iter().enumerate() {
                    for (j, &cj) in reps.iter().enumerate() {
                        let xc = class_of_code(true, ci);
                        let yc = class_of_code(false, cj);
                        reduced.push(((i, j), second_move_class_value(xc, yc)));
                    }
                }
                out.push(ReferenceTable {
                    name: "reduced",
                    rows: "reduced-x",
                    cols: "reduced-y",
                    row_player: 0,
                    complete: true,
                    source: "table.ipd-reduced",
                    cells: reduced,
                });
            }
            if n >= 2 {
                out.push(ReferenceTable {
                    name: "nstage",
                    rows: "nstage-x",
                    cols: "nstage-y",
                    row_player: 0,
                    complete: true,
                    source: "table.ipd-nstage",
                    cells: int_cells(&[
                        &[(2 * n, 2 * n), (2 * n - 1, 2 * n - 1)],
                        &[(2 * n - 1, 2 * n - 1), (n, n)],
                    ]),
                });
            }
            if n >= 2 {
                // Spot values are pinned at the six-stage size only.
                let cells = if n == 6 {
                    vec![
                        ((0, 1), vec![rint(10), rint(13)]),
                        ((1, 0), vec![rint(13), rint(10)]),
                        ((1, 1), vec![rint(11), rint(11)]),
                        ((5, 5), vec![rint(6), rint(6)]),
                    ]
                } else {
                    Vec::new()
                };
                out.push(ReferenceTable {
                    name: "endgame",
                    rows: "endgame-x",
                    cols: "endgame-y",
                    row_player: 0,
                    complete: false,
                    source: "table.ipd-endgame",
                    cells,
                });
            }
            Ok(out)
        }
        "aumann27" | "aumann-device" | "dice" | "twocoin" => Ok(Vec::new()),
        other => Err(Error::UnknownGame(other.to_string())),
    }
}

/// The equilibrium payoff pair of one sixteen-family cell, which depends
/// only on each side's pinning pattern at the two histories where the
/// opponent cooperated first.
fn second_move_class_value(xc: (u8, u8), yc: (u8, u8)) -> Vec<Rat> {
    match (xc, yc) {
        ((1, 1) | (1, 0), (1, 1) | (1, 0)) => vec![rint(4), rint(4)],
        ((1, 0), (0, 1)) => vec![rat(8, 3), rat(7, 3)],
        ((0, 1), (1, 0)) => vec![rat(7, 3), rat(8, 3)],
        ((1, 0), (0, 0)) | ((0, 0), (1, 0)) | ((0, 0), (0, 0)) => vec![rint(2), rint(2)],
        _ => vec![rint(3), rint(3)],
    }
}

/// Re-derive every pinned cell of `table` with the solver and compare the
/// canonical equilibrium payoffs exactly.
pub fn check_reference(game: &GameDefinition, table: &ReferenceTable) -> Result<(), Error> {
    let mismatch = |i: usize, j: usize, want: &[Rat], got: &[Rat]| {
        Error::invalid(format!(
            "{} `{}` cell ({i},{j}): expected [{}], computed [{}]",
            game.name,
            table.name,
            want.iter().map(crate::poly::format_rat).collect::<Vec<_>>().join(", "),
            got.iter().map(crate::poly::format_rat).collect::<Vec<_>>().join(", "),
        ))
    };
    if table.complete {
        let computed = solver::comparison_table(game, table.rows, table.cols)?;
        for ((i, j), want) in &table.cells {
            let got = computed
                .cell(*i, *j)
                .first()
                .ok_or_else(|| Error::invalid(format!("{} `{}`: empty cell ({i},{j})", game.name, table.name)))?;
            if &got.payoffs != want {
                return Err(mismatch(*i, *j, want, &got.payoffs));
            }
        }
    } else {
        let rows = family_specs(game, table.rows)?;
        let cols = family_specs(game, table.cols)?;
        for ((i, j), want) in &table.cells {
            let spec = rows[*i].merge(&cols[*j]);
            let got = solver::constrained_equilibrium(game, &spec)?;
            if &got.payoffs != want {
                return Err(mismatch(*i, *j, want, &got.payoffs));
            }
        }
    }
    Ok(())
}

/// The optimal decision-tree payoff as a function of the imposed
/// correlation, on a nine-step sweep of the closed interval.  Values below
/// the independence point sit on the unconstrained optimum; above it the
/// admissible region tightens.  Numeric entries are accurate to about 1e-5.
pub fn rho_sweep_reference() -> Vec<(f64, f64)> {
    vec![
        (-1.0, 3.0),
        (-0.75, 3.0),
        (-0.5, 3.0),
        (-0.25, 3.0),
        (0.0, 3.0),
        (0.25, 2.02693),
        (0.5, 1.40068),
        (0.75, 1.03032),
        (1.0, 1.0),
    ]
}

/// Summary of one dice space: its free-parameter simplex volume, maximal
/// outcome entropy, and the volume-squared-weighted objective.
#[derive(Debug, Clone)]
pub struct DiceSpace {
    pub faces: u32,
    pub label: &'static str,
    pub volume: Rat,
    pub entropy_max: f64,
    pub objective: f64,
    /// The uniform distribution over faces, where both maxima sit.
    pub argmax: Vec<Rat>,
}

/// Compare the coin, triangle, and square dice under the volume-weighted
/// entropy objective.  Entropy alone grows with the face count; the
/// objective shrinks, so the coin wins it.
pub fn dice_summary() -> Result<Vec<DiceSpace>, Error> {
    let mut out = Vec::new();
    for (faces, label) in [(2u32, "coin"), (3, "triangle"), (4, "square")] {
        let g = dice(faces);
        let rs = g.resolve_spec(&SpaceSpec::free("B"))?;
        let volume = rs.simplex_volume();
        let uniform = vec![1.0 / f64::from(faces); faces as usize];
        let entropy_max = infomeasures::entropy(&uniform)?;
        let objective = rat_to_f64(&(&volume * &volume)) * entropy_max;
        out.push(DiceSpace {
            faces,
            label,
            volume,
            entropy_max,
            objective,
            argmax: vec![rat(1, i64::from(faces)); faces as usize],
        });
    }
    Ok(out)
}

/// The strict stable points of the chance-device coordination game, keyed by
/// the two informative device parameters (the probability of playing 1 when
/// told nothing), in ascending order.
pub fn aumann_device_stable_points() -> Result<Vec<((Rat, Rat), Vec<Rat>)>, Error> {
    let g = aumann_device();
    let eqs = solver::best_response_equilibria(&g, &SpaceSpec::free("B"))?;
    let mut out = Vec::new();
    for eq in &eqs {
        if eq.kind != EquilibriumKind::Pure {
            continue;
        }
        let coord = |name: &str| {
            eq.point
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::UnknownParam(name.to_string()))
        };
        out.push(((coord("pN")?, coord("qN")?), eq.payoffs.clone()));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Expand a named strategy preset into a space spec for one player.
/// `B`, `IND`, `identity`, and `free` mean the unconstrained space for any
/// game; `MKV`, `TFT`, and `ALLD` are the repeated-dilemma commitments.
pub fn preset_spec(game: &GameDefinition, player: usize, name: &str) -> Result<SpaceSpec, Error> {
    match name {
        "B" | "IND" | "identity" | "free" => Ok(SpaceSpec::free(name)),
        "MKV" | "TFT" | "ALLD" if game.name == "ipd" => {
            let n = (game.moves.len() / 2) as u32;
            let (me, opp) = if player == 0 { ("x", "y") } else { ("y", "x") };
            let mut s = SpaceSpec::free(name);
            if name == "TFT" {
                s = s.with_uniform(&format!("{me}1"), NodeTag::Value(0));
            }
            for stage in 1..=n {
                if name == "ALLD" {
                    s = s.with_uniform(&format!("{me}{stage}"), NodeTag::Value(1));
                } else if stage >= 2 {
                    s = s.with_uniform(
                        &format!("{me}{stage}"),
                        NodeTag::Copy(format!("{opp}{}", stage - 1)),
                    );
                }
            }
            Ok(s)
        }
        _ => Err(Error::invalid(format!("unknown preset `{name}` for game `{}`", game.name))),
    }
}

/// The move pair a scalar correlation constraint applies to, for games where
/// the later move observes the earlier one.
pub fn correlation_moves(game: &GameDefinition) -> Option<(&'static str, &'static str)> {
    match game.name.as_str() {
        "twostage" | "dtree" => Some(("x", "y")),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_game(name: &str) -> GameDefinition {
        get_game(name, &GameParams::default()).unwrap()
    }

    fn check_tables(game: &GameDefinition) {
        for table in reference_tables(game).unwrap() {
            check_reference(game, &table).unwrap();
        }
    }

    #[test]
    fn registry_is_consistent() {
        for entry in list() {
            let params = GameParams::default();
            let g = get_game(entry.name, &params).unwrap();
            assert_eq!(g.name, entry.name);
            assert_eq!(g.players.len(), entry.players.len());
            for family in entry.families {
                assert!(!family_specs(&g, family).unwrap().is_empty(), "{family}");
            }
            let tables = reference_tables(&g).unwrap();
            for name in entry.tables {
                assert!(tables.iter().any(|t| t.name == *name), "missing table {name}");
            }
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(
            get_game("poker", &GameParams::default()),
            Err(Error::UnknownGame(_))
        ));
        assert!(matches!(
            get_game("ipd", &GameParams { n: Some(0), m: None }),
            Err(Error::BadParams(_))
        ));
        assert!(matches!(
            get_game("ultimatum", &GameParams { n: None, m: Some(1) }),
            Err(Error::BadParams(_))
        ));
        let g = default_game("twostage");
        assert!(matches!(family_specs(&g, "markov-x"), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn family_sizes() {
        let sizes = [
            ("twostage", "nine", 9),
            ("twostage", "correlation", 4),
            ("chainstore", "deterrence", 3),
            ("trust", "threshold", 5),
            ("ultimatum", "threshold", 10),
            ("publicgoods", "anticorr-x", 2),
            ("publicgoods", "anticorr-y", 2),
            ("centipede", "markov-x", 4),
            ("centipede", "markov-y", 8),
            ("ipd", "named-x", 4),
            ("ipd", "extended-y", 16),
            ("ipd", "reduced-x", 4),
            ("ipd", "nstage-y", 2),
            ("ipd", "endgame-x", 2),
        ];
        for (game, family, size) in sizes {
            let g = default_game(game);
            assert_eq!(family_specs(&g, family).unwrap().len(), size, "{game}/{family}");
        }
        let six = get_game("ipd", &GameParams { n: Some(6), m: None }).unwrap();
        assert_eq!(family_specs(&six, "endgame-y").unwrap().len(), 6);
    }

    #[test]
    fn twostage_tables() {
        check_tables(&default_game("twostage"));
    }

    #[test]
    fn dtree_correlation_rows() {
        check_tables(&default_game("dtree"));
    }

    #[test]
    fn chainstore_deterrence_rows() {
        check_tables(&default_game("chainstore"));
    }

    #[test]
    fn trust_threshold_rows() {
        check_tables(&default_game("trust"));
    }

    #[test]
    fn ultimatum_threshold_rows() {
        check_tables(&default_game("ultimatum"));
        let small = get_game("ultimatum", &GameParams { n: None, m: Some(4) }).unwrap();
        check_tables(&small);
    }

    #[test]
    fn publicgoods_anticorr_grid() {
        check_tables(&default_game("publicgoods"));
    }

    #[test]
    fn centipede_markov_grid() {
        check_tables(&default_game("centipede"));
    }

    #[test]
    fn ipd_named_and_reduced() {
        let g = default_game("ipd");
        for table in reference_tables(&g).unwrap() {
            if table.name == "named" || table.name == "reduced" || table.name == "nstage" {
                check_reference(&g, &table).unwrap();
            }
        }
    }

    #[test]
    fn ipd_extended_grid() {
        let g = default_game("ipd");
        let table = reference_tables(&g)
            .unwrap()
            .into_iter()
            .find(|t| t.name == "extended")
            .unwrap();
        check_reference(&g, &table).unwrap();
    }

    #[test]
    fn ipd_three_stage_closed_form() {
        let g = get_game("ipd", &GameParams { n: Some(3), m: None }).unwrap();
        check_tables(&g);
    }

    #[test]
    fn ipd_endgame_pins_at_six_stages() {
        let g = get_game("ipd", &GameParams { n: Some(6), m: None }).unwrap();
        let table = reference_tables(&g)
            .unwrap()
            .into_iter()
            .find(|t| t.name == "endgame")
            .unwrap();
        assert!(!table.cells.is_empty());
        check_reference(&g, &table).unwrap();
    }

    #[test]
    fn device_stable_points() {
        let pts = aumann_device_stable_points().unwrap();
        let want = [
            ((rint(0), rint(0)), vec![rint(5), rint(5)]),
            ((rint(0), rint(1)), vec![rint(2), rint(7)]),
            ((rint(1), rint(0)), vec![rint(7), rint(2)]),
        ];
        assert_eq!(pts.len(), 3);
        for (got, want) in pts.iter().zip(&want) {
            assert_eq!(got.0, want.0);
            assert_eq!(got.1, want.1);
        }
    }

    #[test]
    fn dice_spaces_summary() {
        let spaces = dice_summary().unwrap();
        assert_eq!(spaces.len(), 3);
        assert_eq!(spaces[0].volume, rint(1));
        assert_eq!(spaces[1].volume, rat(1, 2));
        assert_eq!(spaces[2].volume, rat(1, 6));
        let ln = |k: f64| k.ln();
        assert!((spaces[0].objective - ln(2.0)).abs() < 1e-12);
        assert!((spaces[1].objective - ln(3.0) / 4.0).abs() < 1e-12);
        assert!((spaces[2].objective - ln(4.0) / 36.0).abs() < 1e-12);
        // Bare entropy prefers the square; the weighted objective the coin.
        assert!(spaces[2].entropy_max > spaces[1].entropy_max);
        assert!(spaces[0].objective > spaces[1].objective);
        assert!(spaces[1].objective > spaces[2].objective);
    }

    #[test]
    fn twocoin_parity_optima() {
        let g = default_game("twocoin");
        let eqs = solver::solve_all(&g, &SpaceSpec::free("B")).unwrap();
        let points: Vec<Vec<Rat>> = eqs
            .iter()
            .map(|eq| eq.point.iter().map(|(_, v)| v.clone()).collect())
            .collect();
        assert_eq!(points, vec![vec![rint(0), rint(1)], vec![rint(1), rint(0)]]);
        for eq in &eqs {
            assert_eq!(eq.payoffs, vec![rint(1)]);
        }
    }

    #[test]
    fn presets_resolve() {
        let g = default_game("ipd");
        let both = preset_spec(&g, 0, "MKV")
            .unwrap()
            .merge(&preset_spec(&g, 1, "MKV").unwrap());
        let eq = solver::constrained_equilibrium(&g, &both).unwrap();
        assert_eq!(eq.payoffs, vec![rint(4), rint(4)]);
        let tft = preset_spec(&g, 0, "TFT")
            .unwrap()
            .merge(&preset_spec(&g, 1, "ALLD").unwrap());
        let eq = solver::constrained_equilibrium(&g, &tft).unwrap();
        assert_eq!(eq.payoffs, vec![rint(1), rint(4)]);
        assert!(preset_spec(&default_game("twostage"), 0, "MKV").is_err());
    }
}
