//! Finite games over move variables, and the probability spaces they induce.
//!
//! A [`GameDefinition`] lists the move variables of a finite game — who plays
//! them, at which stage, what each mover has observed, and when a move exists
//! at all — together with one exact payoff polynomial per player, written over
//! the move variables themselves.  From a definition one can build the
//! behavioural probability space of the game (one conditional distribution per
//! information class), impose a [`SpaceSpec`] describing a constrained joint
//! space, and compute exact expected payoffs as polynomials over the free
//! parameters that remain.
//!
//! The central objects:
//!
//! * [`GameDefinition::behavioural_space`] — the unconstrained behavioural
//!   space, with one simplex of parameters per reachable information class.
//! * [`SpaceSpec`] — a label plus per-move tags (independent, copy, anti-copy,
//!   fixed value, or an explicit per-history table), optional parameter fixes
//!   and ties, and an optional correlation constraint.  Lowered onto the
//!   behavioural space it yields a [`ConstraintSet`].
//! * [`GameDefinition::expected_payoff`] — exact per-player expected payoff
//!   polynomials over the free parameters of the constrained space.
//! * [`GameDefinition::apply_space_spec`] — the reduced game in which every
//!   functionally determined move has been substituted into the payoffs and
//!   deleted from the move list.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::poly::{MultilinearPolynomial as Poly, Var};
use crate::probspace::{
    Constraint, ConstraintSet, ObservableMap, ProbabilitySpace, ResolvedSpace, SpaceBuilder,
};
use crate::Rat;

/// Who decides a move: a named player (by index into the player list) or
/// chance, with fixed probabilities aligned with the move's domain.
#[derive(Debug, Clone, PartialEq)]
pub enum PlayerRef {
    Player(usize),
    Chance(Vec<Rat>),
}

/// One observation edge: the mover sees `source`, either exactly
/// (`partition: None`) or only up to the given partition of its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsEdge {
    pub source: usize,
    pub partition: Option<Vec<Vec<u8>>>,
}

impl ObsEdge {
    pub fn full(source: usize) -> Self {
        ObsEdge { source, partition: None }
    }

    pub fn coarse(source: usize, partition: Vec<Vec<u8>>) -> Self {
        ObsEdge { source, partition: Some(partition) }
    }
}

/// Suggested parameter names for the node of a move reached at a given
/// history pattern.  `names` follows the node builder convention: for a
/// binary move `[P(=1), P(=0)]`, for a categorical move one name per domain
/// value in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeNameHint {
    pub history: Vec<(usize, Vec<u8>)>,
    pub names: Vec<String>,
}

/// Declaration of one move variable.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveDecl {
    pub name: String,
    pub domain: Vec<u8>,
    pub owner: PlayerRef,
    /// Stage number; moves in the same stage are mutually unobserved.
    pub stage: usize,
    /// What this mover conditions on.  Filled with all earlier-stage moves
    /// (fully observed) by the builder unless overridden.
    pub observes: Vec<ObsEdge>,
    /// The move exists only on paths where every listed earlier move has the
    /// listed value; on other paths it is unplayed and reads as 0.
    pub condition: Vec<(usize, u8)>,
    pub node_names: Vec<NodeNameHint>,
}

/// A finite game: players, moves in stage order, and one exact payoff
/// polynomial per player over the move variables.
#[derive(Debug, Clone, PartialEq)]
pub struct GameDefinition {
    pub name: String,
    pub players: Vec<String>,
    pub moves: Vec<MoveDecl>,
    pub payoffs: Vec<Poly>,
    /// Map of observed outcomes, if coarser than the identity.
    pub observables: Option<ObservableMap>,
}

/// Incremental construction of a [`GameDefinition`].
pub struct GameBuilder {
    name: String,
    players: Vec<String>,
    moves: Vec<MoveDecl>,
    payoffs: Vec<Poly>,
    observables: Option<ObservableMap>,
}

impl GameBuilder {
    pub fn new(name: &str, players: &[&str]) -> Self {
        GameBuilder {
            name: name.to_string(),
            players: players.iter().map(|s| s.to_string()).collect(),
            moves: Vec::new(),
            payoffs: Vec::new(),
            observables: None,
        }
    }

    /// Add a binary move for `player` at `stage`; returns its index.
    pub fn binary_move(&mut self, name: &str, player: usize, stage: usize) -> usize {
        self.add_move(name, vec![0, 1], PlayerRef::Player(player), stage)
    }

    /// Add a move with an arbitrary domain; returns its index.
    pub fn add_move(
        &mut self,
        name: &str,
        domain: Vec<u8>,
        owner: PlayerRef,
        stage: usize,
    ) -> usize {
        let idx = self.moves.len();
        self.moves.push(MoveDecl {
            name: name.to_string(),
            domain,
            owner,
            stage,
            observes: Vec::new(),
            condition: Vec::new(),
            node_names: Vec::new(),
        });
        idx
    }

    /// Add a chance move with the given value probabilities.
    pub fn chance_move(&mut self, name: &str, domain: Vec<u8>, probs: Vec<Rat>, stage: usize) -> usize {
        self.add_move(name, domain, PlayerRef::Chance(probs), stage)
    }

    /// Restrict what move `mv` observes (replacing the default of full
    /// observation of all earlier stages).
    pub fn observes(&mut self, mv: usize, edges: Vec<ObsEdge>) -> &mut Self {
        self.moves[mv].observes = edges;
        self.moves[mv].node_names.clear();
        self
    }

    /// Make move `mv` exist only where each `(source, value)` pair holds.
    pub fn condition(&mut self, mv: usize, cond: Vec<(usize, u8)>) -> &mut Self {
        self.moves[mv].condition = cond;
        self
    }

    /// Name the parameters of the node of `mv` reached at `history`
    /// (conjunction of exact source values).
    pub fn names(&mut self, mv: usize, history: &[(usize, u8)], names: &[&str]) -> &mut Self {
        self.moves[mv].node_names.push(NodeNameHint {
            history: history.iter().map(|&(s, v)| (s, vec![v])).collect(),
            names: names.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    /// Name the parameters of the node of `mv` reached at a coarse history
    /// pattern (conjunction of source-value sets).
    pub fn names_coarse(&mut self, mv: usize, history: &[(usize, &[u8])], names: &[&str]) -> &mut Self {
        self.moves[mv].node_names.push(NodeNameHint {
            history: history.iter().map(|&(s, vs)| (s, vs.to_vec())).collect(),
            names: names.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    /// Set the payoff polynomial of `player`.
    pub fn payoff(&mut self, player: usize, poly: Poly) -> &mut Self {
        if self.payoffs.len() <= player {
            self.payoffs.resize(player + 1, Poly::zero());
        }
        self.payoffs[player] = poly;
        self
    }

    /// Observe outcomes only through the given map.
    pub fn observables(&mut self, map: ObservableMap) -> &mut Self {
        self.observables = Some(map);
        self
    }

    pub fn build(mut self) -> GameDefinition {
        // Default observation: every earlier-stage move, fully.
        for i in 0..self.moves.len() {
            if self.moves[i].observes.is_empty() {
                let stage = self.moves[i].stage;
                let edges: Vec<ObsEdge> = (0..i)
                    .filter(|&j| self.moves[j].stage < stage)
                    .map(ObsEdge::full)
                    .collect();
                self.moves[i].observes = edges;
            }
        }
        self.payoffs.resize(self.players.len(), Poly::zero());
        GameDefinition {
            name: self.name,
            players: self.players,
            moves: self.moves,
            payoffs: self.payoffs,
            observables: self.observables,
        }
    }
}

/// How one move is constrained inside a [`SpaceSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeTag {
    /// Free conditional distribution (the behavioural default).
    Independent,
    /// Deterministically equal to an observed earlier binary move.
    Copy(String),
    /// Deterministically opposite to an observed earlier binary move.
    Anti(String),
    /// Fixed to a constant value of the domain.
    Value(u8),
}

/// Tag assignment for a move: one tag for all its nodes, or an explicit
/// per-history table (histories given as exact `(move, value)` conjunctions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveTag {
    Uniform(NodeTag),
    PerHistory(Vec<(Vec<(String, u8)>, NodeTag)>),
}

/// A constrained joint probability space for a game: a display label,
/// per-move tags (unmentioned moves stay independent), direct parameter
/// fixes and ties by name, an optional correlation constraint between two
/// binary moves, and optional tie-break preferences used by solvers when a
/// player is exactly indifferent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<(String, MoveTag)>,
    #[serde(default, with = "rat_pairs", skip_serializing_if = "Vec::is_empty")]
    pub fixes: Vec<(String, Rat)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ties: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<(String, String, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prefer: Vec<(String, u8)>,
}

/// Serialise `(name, rational)` fix lists with the same number-or-string
/// convention as constraint values.
mod rat_pairs {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &[(String, Rat)],
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let items: Vec<(String, serde_json::Value)> = v
            .iter()
            .map(|(name, value)| (name.clone(), crate::probspace::rat_to_json(value)))
            .collect();
        items.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Vec<(String, Rat)>, D::Error> {
        let items = Vec::<(String, serde_json::Value)>::deserialize(deserializer)?;
        items
            .into_iter()
            .map(|(name, value)| {
                crate::probspace::rat_from_json(&value)
                    .map(|r| (name, r))
                    .map_err(D::Error::custom)
            })
            .collect()
    }
}

impl SpaceSpec {
    /// The fully unconstrained space.
    pub fn free(label: &str) -> Self {
        SpaceSpec { label: label.to_string(), ..Default::default() }
    }

    pub fn with_tag(mut self, mv: &str, tag: MoveTag) -> Self {
        self.tags.push((mv.to_string(), tag));
        self
    }

    pub fn with_uniform(self, mv: &str, tag: NodeTag) -> Self {
        self.with_tag(mv, MoveTag::Uniform(tag))
    }

    pub fn with_fix(mut self, param: &str, value: Rat) -> Self {
        self.fixes.push((param.to_string(), value));
        self
    }

    pub fn with_tie(mut self, a: &str, b: &str) -> Self {
        self.ties.push((a.to_string(), b.to_string()));
        self
    }

    pub fn with_correlation(mut self, x: &str, y: &str, rho: f64) -> Self {
        self.correlation = Some((x.to_string(), y.to_string(), rho));
        self
    }

    pub fn with_prefer(mut self, mv: &str, value: u8) -> Self {
        self.prefer.push((mv.to_string(), value));
        self
    }

    /// Join two specs (typically one per player's moves) into one, labelled
    /// `"rowlabel/collabel"`.
    pub fn merge(&self, other: &SpaceSpec) -> SpaceSpec {
        let mut out = self.clone();
        out.label = format!("{}/{}", self.label, other.label);
        out.tags.extend(other.tags.iter().cloned());
        out.fixes.extend(other.fixes.iter().cloned());
        out.ties.extend(other.ties.iter().cloned());
        if out.correlation.is_none() {
            out.correlation = other.correlation.clone();
        }
        out.prefer.extend(other.prefer.iter().cloned());
        out
    }

    /// Lower the spec to constraints on the game's behavioural space.
    pub fn lower(&self, game: &GameDefinition) -> Result<ConstraintSet, Error> {
        let mut cs = game.chance_constraints();
        for (mv_name, tag) in &self.tags {
            let mv = game.move_index(mv_name)?;
            match tag {
                MoveTag::Uniform(NodeTag::Independent) => {}
                MoveTag::Uniform(NodeTag::Copy(src)) => {
                    game.move_index(src)?;
                    cs = cs.move_copy(mv_name, src);
                }
                MoveTag::Uniform(NodeTag::Anti(src)) => {
                    game.move_index(src)?;
                    cs = cs.move_anti(mv_name, src);
                }
                MoveTag::Uniform(NodeTag::Value(v)) => {
                    if !game.moves[mv].domain.contains(v) {
                        return Err(Error::invalid(format!(
                            "value {v} not in the domain of move {mv_name}"
                        )));
                    }
                    cs = cs.move_const(mv_name, *v);
                }
                MoveTag::PerHistory(rows) => {
                    let mut table: Vec<(Vec<(String, u8)>, u8)> = Vec::new();
                    for (pattern, tag) in rows {
                        let value = match tag {
                            NodeTag::Independent => continue,
                            NodeTag::Value(v) => *v,
                            NodeTag::Copy(src) => {
                                lookup_in_pattern(pattern, src).ok_or_else(|| {
                                    Error::invalid(format!(
                                        "copy source {src} not pinned by the history pattern"
                                    ))
                                })?
                            }
                            NodeTag::Anti(src) => {
                                let v = lookup_in_pattern(pattern, src).ok_or_else(|| {
                                    Error::invalid(format!(
                                        "anti source {src} not pinned by the history pattern"
                                    ))
                                })?;
                                flip_binary(v)?
                            }
                        };
                        table.push((pattern.clone(), value));
                    }
                    if !table.is_empty() {
                        cs.items.push(Constraint::MoveAssign {
                            mv: mv_name.clone(),
                            table,
                        });
                    }
                }
            }
        }
        for (param, value) in &self.fixes {
            cs = cs.fix(param, value.clone());
        }
        for (a, b) in &self.ties {
            cs = cs.tie(a, b);
        }
        if let Some((x, y, rho)) = &self.correlation {
            cs = cs.correlation(x, y, *rho);
        }
        Ok(cs)
    }
}

fn lookup_in_pattern(pattern: &[(String, u8)], src: &str) -> Option<u8> {
    pattern.iter().find(|(m, _)| m == src).map(|&(_, v)| v)
}

fn flip_binary(v: u8) -> Result<u8, Error> {
    match v {
        0 => Ok(1),
        1 => Ok(0),
        _ => Err(Error::invalid("anti-copy needs a binary source")),
    }
}

impl GameDefinition {
    pub fn move_index(&self, name: &str) -> Result<usize, Error> {
        self.moves
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| Error::UnknownMove(name.to_string()))
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    /// Fixes pinning every chance move's node parameters.
    pub fn chance_constraints(&self) -> ConstraintSet {
        let mut cs = ConstraintSet::new();
        let space = self.behavioural_space();
        for node in &space.nodes {
            let decl = &self.moves[node.move_idx];
            if let PlayerRef::Chance(probs) = &decl.owner {
                // Node parameter groups follow the builder convention:
                // binary [P(=1), P(=0)], categorical ascending with the last
                // dependent.  Fix every independent slot.
                if decl.domain.len() == 2 {
                    let p1 = &space.params[node.params[0]];
                    cs = cs.fix(&p1.name, probs[1].clone());
                } else {
                    for (k, &pidx) in node.params.iter().enumerate().take(decl.domain.len() - 1) {
                        cs = cs.fix(&space.params[pidx].name, probs[k].clone());
                    }
                }
            }
        }
        cs
    }

    /// The player owning a move, if any.
    pub fn owner_of(&self, mv: usize) -> Option<usize> {
        match self.moves[mv].owner {
            PlayerRef::Player(p) => Some(p),
            PlayerRef::Chance(_) => None,
        }
    }

    /// Enumerate the reachable full histories of the game, as assignments
    /// over all moves with unplayed moves set to 0.
    pub fn paths(&self) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        let mut current = vec![0u8; self.moves.len()];
        self.walk_paths(0, &mut current, &mut out);
        out
    }

    fn walk_paths(&self, idx: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if idx == self.moves.len() {
            out.push(current.clone());
            return;
        }
        let decl = &self.moves[idx];
        let played = decl.condition.iter().all(|&(src, v)| current[src] == v);
        if !played {
            current[idx] = 0;
            self.walk_paths(idx + 1, current, out);
            return;
        }
        for &v in &decl.domain {
            current[idx] = v;
            self.walk_paths(idx + 1, current, out);
        }
        current[idx] = 0;
    }

    /// Build the behavioural probability space of the game: one node per
    /// reachable information class of each move, with free parameters on
    /// every node (chance nodes included; see [`chance_constraints`]).
    ///
    /// [`chance_constraints`]: GameDefinition::chance_constraints
    pub fn behavioural_space(&self) -> ProbabilitySpace {
        let mut b = SpaceBuilder::new(&self.name);
        for decl in &self.moves {
            b.add_move(&decl.name, &decl.domain);
        }
        // Enumerate full paths once; each path reaching a move induces one
        // information class, keyed by the observed block per observation
        // edge (intersected with the existence condition).
        let paths = self.paths();
        for (idx, decl) in self.moves.iter().enumerate() {
            let mut seen: Vec<Vec<(usize, Vec<u8>)>> = Vec::new();
            for path in &paths {
                if !decl.condition.iter().all(|&(src, v)| path[src] == v) {
                    continue;
                }
                let mut pattern: BTreeMap<usize, Vec<u8>> = BTreeMap::new();
                for &(src, v) in &decl.condition {
                    pattern.insert(src, vec![v]);
                }
                for edge in &decl.observes {
                    let val = path[edge.source];
                    let block = match &edge.partition {
                        None => vec![val],
                        Some(blocks) => blocks
                            .iter()
                            .find(|b| b.contains(&val))
                            .cloned()
                            .unwrap_or_else(|| vec![val]),
                    };
                    pattern
                        .entry(edge.source)
                        .and_modify(|e| e.retain(|v| block.contains(v)))
                        .or_insert(block);
                }
                // Drop entries that do not restrict anything.
                let pattern: Vec<(usize, Vec<u8>)> = pattern
                    .into_iter()
                    .filter(|(src, vs)| vs.len() < self.moves[*src].domain.len())
                    .collect();
                if !seen.contains(&pattern) {
                    seen.push(pattern);
                }
            }
            let n_classes = seen.len();
            for (ordinal, pattern) in seen.iter().enumerate() {
                let names = self.node_param_names(idx, pattern, ordinal, n_classes);
                let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                let hist: Vec<(usize, &[u8])> =
                    pattern.iter().map(|(src, vs)| (*src, vs.as_slice())).collect();
                if decl.domain.len() == 2 {
                    b.binary_node_with_sets(idx, &hist, name_refs[0], name_refs[1]);
                } else {
                    b.categorical_node_with_sets(idx, &hist, &name_refs);
                }
            }
        }
        if let Some(ObservableMap::Table { moves, map }) = &self.observables {
            b.observables(moves.clone(), map.clone());
        }
        b.build()
    }

    fn node_param_names(
        &self,
        mv: usize,
        pattern: &[(usize, Vec<u8>)],
        ordinal: usize,
        n_classes: usize,
    ) -> Vec<String> {
        let decl = &self.moves[mv];
        for hint in &decl.node_names {
            let mut sorted = hint.history.clone();
            sorted.sort();
            let mut pat = pattern.to_vec();
            pat.sort();
            let restrictive: Vec<(usize, Vec<u8>)> = pat
                .iter()
                .filter(|(src, vs)| vs.len() < self.moves[*src].domain.len())
                .cloned()
                .collect();
            if sorted == restrictive {
                return hint.names.clone();
            }
        }
        // Systematic fallback: move name, an ordinal when several classes
        // exist, and the builder's slot convention.
        let base = if n_classes == 1 {
            decl.name.clone()
        } else {
            format!("{}.{}", decl.name, ordinal)
        };
        if decl.domain.len() == 2 {
            vec![format!("p({base})"), format!("p({base})0")]
        } else {
            decl.domain.iter().map(|v| format!("p({base}={v})")).collect()
        }
    }

    /// Resolve the constrained space described by `spec`.
    pub fn resolve_spec(&self, spec: &SpaceSpec) -> Result<ResolvedSpace, Error> {
        let space = self.behavioural_space();
        let cs = spec.lower(self)?;
        space.resolve(&cs)
    }

    /// Exact payoff vector on one full history (unplayed moves read 0).
    pub fn payoff_on_path(&self, assignment: &[u8]) -> Vec<Rat> {
        self.payoffs.iter().map(|p| p.eval_assignment(assignment)).collect()
    }

    /// Expected payoff per player over the free parameters of the resolved
    /// space: exact polynomials, one per player.
    pub fn expected_payoff_resolved(&self, rs: &ResolvedSpace) -> Vec<Poly> {
        let mut out = vec![Poly::zero(); self.players.len()];
        for (assignment, probability) in &rs.events {
            let pay = self.payoff_on_path(assignment);
            for (pl, v) in pay.iter().enumerate() {
                if !v.is_zero() {
                    out[pl] += &probability.scale(v);
                }
            }
        }
        out
    }

    /// Expected payoff per player in the space described by `spec`.
    pub fn expected_payoff(&self, spec: &SpaceSpec) -> Result<Vec<Poly>, Error> {
        Ok(self.expected_payoff_resolved(&self.resolve_spec(spec)?))
    }

    /// The reduced game in which every move that `spec` determines
    /// functionally (copy, anti-copy, fixed value, or a full per-history
    /// table) is substituted into the payoffs and deleted.
    pub fn apply_space_spec(&self, spec: &SpaceSpec) -> Result<GameDefinition, Error> {
        let mut determined: Vec<Option<MoveTag>> = vec![None; self.moves.len()];
        for (name, tag) in &spec.tags {
            let idx = self.move_index(name)?;
            match tag {
                MoveTag::Uniform(NodeTag::Independent) => {}
                _ => determined[idx] = Some(tag.clone()),
            }
        }
        let mut payoffs = self.payoffs.clone();
        // Substitute latest-first so formulas over earlier moves survive.
        for idx in (0..self.moves.len()).rev() {
            let Some(tag) = &determined[idx] else { continue };
            let decl = &self.moves[idx];
            let cond = self.condition_indicator(idx);
            for &v in &decl.domain {
                if v == *decl.domain.iter().min().unwrap() {
                    continue; // the canonical encoding has no lowest-value indicator
                }
                let replacement = self.indicator_formula(idx, v, tag, &cond)?;
                for p in payoffs.iter_mut() {
                    *p = p.substitute(Var::Move { mv: idx as u32, value: v }, &replacement);
                }
            }
        }
        // Delete the determined moves and renumber the survivors.
        let mut remap: Vec<Option<u32>> = Vec::with_capacity(self.moves.len());
        let mut kept = Vec::new();
        for (idx, decl) in self.moves.iter().enumerate() {
            if determined[idx].is_some() {
                remap.push(None);
            } else {
                remap.push(Some(kept.len() as u32));
                kept.push(decl.clone());
            }
        }
        for decl in kept.iter_mut() {
            for &(src, _) in &decl.condition {
                if remap[src].is_none() {
                    return Err(Error::invalid(format!(
                        "cannot reduce {}: a surviving move's condition references a substituted move",
                        self.name
                    )));
                }
            }
            decl.condition = decl
                .condition
                .iter()
                .map(|&(src, v)| (remap[src].unwrap() as usize, v))
                .collect();
            decl.observes.retain(|e| remap[e.source].is_some());
            for e in decl.observes.iter_mut() {
                e.source = remap[e.source].unwrap() as usize;
            }
            decl.node_names.retain(|h| h.history.iter().all(|(src, _)| remap[*src].is_some()));
            for h in decl.node_names.iter_mut() {
                for (src, _) in h.history.iter_mut() {
                    *src = remap[*src].unwrap() as usize;
                }
            }
        }
        let map = |mv: u32| -> u32 {
            remap[mv as usize].expect("substituted move survived in a payoff")
        };
        let payoffs = payoffs.iter().map(|p| p.remap_moves(&map)).collect();
        Ok(GameDefinition {
            name: format!("{}[{}]", self.name, spec.label),
            players: self.players.clone(),
            moves: kept,
            payoffs,
            observables: None,
        })
    }

    /// Product of indicators for the move's existence condition (1 if none).
    fn condition_indicator(&self, mv: usize) -> Poly {
        let mut p = Poly::one();
        for &(src, v) in &self.moves[mv].condition {
            p = p * Poly::move_value(src, v, &self.moves[src].domain);
        }
        p
    }

    /// Polynomial over earlier moves equal to the indicator `[mv = value]`
    /// under the given determination tag, honouring the unplayed-reads-0
    /// convention on paths where the condition fails.
    fn indicator_formula(
        &self,
        mv: usize,
        value: u8,
        tag: &MoveTag,
        cond: &Poly,
    ) -> Result<Poly, Error> {
        let decl = &self.moves[mv];
        let played: Poly = match tag {
            MoveTag::Uniform(NodeTag::Value(v)) => {
                if *v == value {
                    Poly::one()
                } else {
                    Poly::zero()
                }
            }
            MoveTag::Uniform(NodeTag::Copy(src)) => {
                let s = self.move_index(src)?;
                Poly::move_value(s, value, &self.moves[s].domain)
            }
            MoveTag::Uniform(NodeTag::Anti(src)) => {
                let s = self.move_index(src)?;
                if decl.domain != [0, 1] || self.moves[s].domain != [0, 1] {
                    return Err(Error::invalid("anti-copy needs binary moves"));
                }
                let anti_value = 1 - value;
                Poly::move_value(s, anti_value, &self.moves[s].domain)
            }
            MoveTag::Uniform(NodeTag::Independent) => unreachable!(),
            MoveTag::PerHistory(rows) => {
                let mut acc = Poly::zero();
                for (pattern, tag) in rows {
                    let row_value = match tag {
                        NodeTag::Independent => {
                            return Err(Error::invalid(format!(
                                "spec leaves move {} only partially determined",
                                decl.name
                            )))
                        }
                        NodeTag::Value(v) => *v,
                        NodeTag::Copy(src) => lookup_in_pattern(pattern, src)
                            .ok_or_else(|| Error::invalid("copy source not pinned"))?,
                        NodeTag::Anti(src) => flip_binary(
                            lookup_in_pattern(pattern, src)
                                .ok_or_else(|| Error::invalid("anti source not pinned"))?,
                        )?,
                    };
                    if row_value != value {
                        continue;
                    }
                    let mut ind = Poly::one();
                    for (m, v) in pattern {
                        let s = self.move_index(m)?;
                        ind = ind * Poly::move_value(s, *v, &self.moves[s].domain);
                    }
                    acc += &ind;
                }
                acc
            }
        };
        // On paths where the move is unplayed it reads 0, so the indicator
        // [mv = 0] gains the complement of the condition.  The canonical
        // encoding never stores lowest-value indicators, and every domain
        // here starts at 0, so `value` is nonzero and only the played part
        // contributes.
        Ok(cond.clone() * played)
    }

    /// Stages in ascending order with the moves of each.
    pub fn stages(&self) -> Vec<(usize, Vec<usize>)> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, decl) in self.moves.iter().enumerate() {
            map.entry(decl.stage).or_default().push(idx);
        }
        map.into_iter().collect()
    }
}

/// Evaluate an expected-payoff polynomial at a free-parameter point.
pub fn payoff_at(poly: &Poly, point: &[Rat]) -> Result<Rat, Error> {
    let needed = poly
        .vars()
        .iter()
        .filter_map(|v| match v {
            Var::Param(i) => Some(*i as usize + 1),
            Var::Move { .. } => None,
        })
        .max()
        .unwrap_or(0);
    if point.len() < needed {
        return Err(Error::DimensionMismatch { expected: needed, got: point.len() });
    }
    Ok(poly.eval_params(point))
}

/// Evaluate an expected-payoff polynomial at an `f64` point.
pub fn payoff_at_f64(poly: &Poly, point: &[f64]) -> f64 {
    poly.eval_params_f64(point)
}

// ---------------------------------------------------------------------------
// JSON form
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ObsEdgeRepr {
    source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<Vec<Vec<u8>>>,
}

#[derive(Serialize, Deserialize)]
struct CondRepr {
    #[serde(rename = "move")]
    mv: String,
    value: u8,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OwnerRepr {
    Named(String),
    Chance { chance: Vec<String> },
}

#[derive(Serialize, Deserialize)]
struct MoveRepr {
    name: String,
    domain: Vec<u8>,
    player: OwnerRepr,
    stage: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    observes: Option<Vec<ObsEdgeRepr>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    condition: Vec<CondRepr>,
}

#[derive(Serialize, Deserialize)]
struct TermVarRepr {
    #[serde(rename = "move")]
    mv: String,
    value: u8,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coeff: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    vars: Vec<TermVarRepr>,
}

#[derive(Serialize, Deserialize)]
struct PayoffRepr {
    player: String,
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
struct GameRepr {
    name: String,
    players: Vec<String>,
    moves: Vec<MoveRepr>,
    payoffs: Vec<PayoffRepr>,
}

impl Serialize for GameDefinition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let moves = self
            .moves
            .iter()
            .map(|m| MoveRepr {
                name: m.name.clone(),
                domain: m.domain.clone(),
                player: match &m.owner {
                    PlayerRef::Player(p) => OwnerRepr::Named(self.players[*p].clone()),
                    PlayerRef::Chance(probs) => OwnerRepr::Chance {
                        chance: probs.iter().map(|r| r.to_string()).collect(),
                    },
                },
                stage: m.stage,
                observes: Some(
                    m.observes
                        .iter()
                        .map(|e| ObsEdgeRepr {
                            source: self.moves[e.source].name.clone(),
                            partition: e.partition.clone(),
                        })
                        .collect(),
                ),
                condition: m
                    .condition
                    .iter()
                    .map(|&(src, v)| CondRepr { mv: self.moves[src].name.clone(), value: v })
                    .collect(),
            })
            .collect();
        let payoffs = self
            .payoffs
            .iter()
            .enumerate()
            .map(|(pl, poly)| PayoffRepr {
                player: self.players[pl].clone(),
                terms: poly
                    .terms()
                    .map(|(vars, coeff)| TermRepr {
                        coeff: coeff.to_string(),
                        vars: vars
                            .iter()
                            .filter_map(|&(v, _)| match v {
                                Var::Move { mv, value } => Some(TermVarRepr {
                                    mv: self.moves[mv as usize].name.clone(),
                                    value,
                                }),
                                Var::Param(_) => None,
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        GameRepr {
            name: self.name.clone(),
            players: self.players.clone(),
            moves,
            payoffs,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GameDefinition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = GameRepr::deserialize(deserializer)?;
        let mut b = GameBuilder::new(&repr.name, &repr.players.iter().map(|s| s.as_str()).collect::<Vec<_>>());
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        for m in &repr.moves {
            let owner = match &m.player {
                OwnerRepr::Named(p) => PlayerRef::Player(
                    repr.players
                        .iter()
                        .position(|q| q == p)
                        .ok_or_else(|| D::Error::custom(format!("unknown player {p}")))?,
                ),
                OwnerRepr::Chance { chance } => PlayerRef::Chance(
                    chance
                        .iter()
                        .map(|s| crate::parse_rat(s).map_err(|e| D::Error::custom(e.to_string())))
                        .collect::<Result<Vec<_>, _>>()?,
                ),
            };
            let idx = b.add_move(&m.name, m.domain.clone(), owner, m.stage);
            index.insert(m.name.clone(), idx);
        }
        for (i, m) in repr.moves.iter().enumerate() {
            if let Some(edges) = &m.observes {
                let parsed = edges
                    .iter()
                    .map(|e| {
                        let src = *index
                            .get(&e.source)
                            .ok_or_else(|| D::Error::custom(format!("unknown move {}", e.source)))?;
                        Ok(ObsEdge { source: src, partition: e.partition.clone() })
                    })
                    .collect::<Result<Vec<_>, D::Error>>()?;
                b.observes(i, parsed);
            }
            if !m.condition.is_empty() {
                let cond = m
                    .condition
                    .iter()
                    .map(|c| {
                        let src = *index
                            .get(&c.mv)
                            .ok_or_else(|| D::Error::custom(format!("unknown move {}", c.mv)))?;
                        Ok((src, c.value))
                    })
                    .collect::<Result<Vec<_>, D::Error>>()?;
                b.condition(i, cond);
            }
        }
        // Domains must be known before payoff terms can be canonicalised.
        let domains: BTreeMap<usize, Vec<u8>> =
            repr.moves.iter().enumerate().map(|(i, m)| (i, m.domain.clone())).collect();
        for pay in &repr.payoffs {
            let pl = repr
                .players
                .iter()
                .position(|q| *q == pay.player)
                .ok_or_else(|| D::Error::custom(format!("unknown player {}", pay.player)))?;
            let mut poly = Poly::zero();
            for term in &pay.terms {
                let coeff =
                    crate::parse_rat(&term.coeff).map_err(|e| D::Error::custom(e.to_string()))?;
                let mut t = Poly::constant(coeff);
                for var in &term.vars {
                    let mv = *index
                        .get(&var.mv)
                        .ok_or_else(|| D::Error::custom(format!("unknown move {}", var.mv)))?;
                    t = t * Poly::move_value(mv, var.value, &domains[&mv]);
                }
                poly += &t;
            }
            b.payoff(pl, poly);
        }
        Ok(b.build())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultilinearPolynomial as Poly;
    use crate::rint;

    fn rat(n: i64, d: i64) -> Rat {
        crate::rat(n, d)
    }

    /// The two-stage game used throughout: X moves first (x ∈ {0,1}), Y
    /// observes x and replies, payoffs Π^X = 3 − 2x − y + 4xy and
    /// Π^Y = 1 + 3x + y − 2xy.
    fn twostage() -> GameDefinition {
        let mut b = GameBuilder::new("twostage", &["X", "Y"]);
        let x = b.binary_move("x", 0, 0);
        let y = b.binary_move("y", 1, 1);
        b.names(x, &[], &["p", "p0"]);
        b.names(y, &[(x, 0)], &["q", "q0"]);
        b.names(y, &[(x, 1)], &["r", "r0"]);
        let xv = Poly::move_value(x, 1, &[0, 1]);
        let yv = Poly::move_value(y, 1, &[0, 1]);
        b.payoff(
            0,
            Poly::int(3) - xv.scale(&rint(2)) - yv.clone() + (xv.clone() * yv.clone()).scale(&rint(4)),
        );
        b.payoff(
            1,
            Poly::int(1) + xv.scale(&rint(3)) + yv.clone() - (xv * yv).scale(&rint(2)),
        );
        b.build()
    }

    /// Two simultaneous contribution rounds; the stage-2 moves see stage 1.
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

    #[test]
    fn twostage_expected_payoff_unconstrained() {
        let g = twostage();
        let pays = g.expected_payoff(&SpaceSpec::free("behavioural")).unwrap();
        let rs = g.resolve_spec(&SpaceSpec::free("behavioural")).unwrap();
        assert_eq!(rs.free_names(), vec!["p", "q", "r"]);
        // ⟨Π^X⟩ = 3 − 2p − q + pq + 3pr
        let p = Poly::param(0);
        let q = Poly::param(1);
        let r = Poly::param(2);
        let expected = Poly::int(3) - p.scale(&rint(2)) - q.clone() + (p.clone() * q)
            + (p * r).scale(&rint(3));
        assert_eq!(pays[0], expected);
    }

    #[test]
    fn twostage_copy_constraint_payoffs() {
        let g = twostage();
        let spec = SpaceSpec::free("y=x").with_uniform("y", NodeTag::Copy("x".into()));
        let pays = g.expected_payoff(&spec).unwrap();
        let p = Poly::param(0);
        // y = x collapses the space to one parameter:
        // ⟨Π^X⟩ = 3 + p and ⟨Π^Y⟩ = 1 + 2p.
        assert_eq!(pays[0], Poly::int(3) + p.clone());
        assert_eq!(pays[1], Poly::int(1) + p.scale(&rint(2)));
    }

    #[test]
    fn payoff_at_point() {
        let g = twostage();
        let pays = g.expected_payoff(&SpaceSpec::free("behavioural")).unwrap();
        let v = payoff_at(&pays[0], &[rint(0), rint(1), rint(0)]).unwrap();
        assert_eq!(v, rint(2));
        assert!(matches!(
            payoff_at(&pays[0], &[rint(0)]),
            Err(Error::DimensionMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn conditioned_move_space() {
        // Market entry: y is only played after x = 1.
        let mut b = GameBuilder::new("chainstore", &["X", "Y"]);
        let x = b.binary_move("x", 0, 0);
        let y = b.binary_move("y", 1, 1);
        b.condition(y, vec![(x, 1)]);
        b.names(x, &[], &["p", "p0"]);
        b.names(y, &[(x, 1)], &["q", "q0"]);
        let xv = Poly::move_value(x, 1, &[0, 1]);
        let yv = Poly::move_value(y, 1, &[0, 1]);
        b.payoff(0, xv.clone() - (xv.clone() * yv.clone()).scale(&rint(2)));
        b.payoff(1, Poly::int(1) - xv.clone() - (xv * yv));
        let g = b.build();

        let rs = g.resolve_spec(&SpaceSpec::free("free")).unwrap();
        assert_eq!(rs.free_names(), vec!["p", "q"]);
        // ⟨Π^X⟩ = p − 2pq, ⟨Π^Y⟩ = 1 − p − pq.
        let pays = g.expected_payoff_resolved(&rs);
        let p = Poly::param(0);
        let q = Poly::param(1);
        assert_eq!(pays[0], p.clone() - (p.clone() * q.clone()).scale(&rint(2)));
        assert_eq!(pays[1], Poly::int(1) - p.clone() - p * q);

        // Always-fight incumbent: q = 1 gives ⟨Π^X⟩ = −p, ⟨Π^Y⟩ = 1 − 2p.
        let spec = SpaceSpec::free("q=1").with_fix("q", rint(1));
        let pays = g.expected_payoff(&spec).unwrap();
        let p = Poly::param(0);
        assert_eq!(pays[0], Poly::zero() - p.clone());
        assert_eq!(pays[1], Poly::int(1) - p.scale(&rint(2)));
    }

    #[test]
    fn publicgoods_reduction() {
        let g = publicgoods();
        let spec = SpaceSpec::free("anti/anti")
            .with_uniform("x2", NodeTag::Anti("y1".into()))
            .with_uniform("y2", NodeTag::Anti("x1".into()));
        let reduced = g.apply_space_spec(&spec).unwrap();
        assert_eq!(reduced.moves.len(), 2);
        // Both payoffs collapse to −8 + 7x₁ + 7y₁.
        let v = |m: usize| Poly::move_value(m, 1, &[0, 1]);
        let expected = Poly::int(-8) + v(0).scale(&rint(7)) + v(1).scale(&rint(7));
        assert_eq!(reduced.payoffs[0], expected);
        assert_eq!(reduced.payoffs[1], expected);

        // The expected payoff of the reduced game matches the constrained
        // expected payoff of the full game.
        let full = g.expected_payoff(&spec).unwrap();
        let red = reduced.expected_payoff(&SpaceSpec::free("free")).unwrap();
        assert_eq!(full, red);
    }

    #[test]
    fn simultaneous_stage_space() {
        let g = publicgoods();
        let rs = g.resolve_spec(&SpaceSpec::free("free")).unwrap();
        // x1 and y1 are mutually unobserved; each stage-2 move sees both.
        assert_eq!(rs.n_free(), 2 + 4 + 4);
        let space = g.behavioural_space();
        let x2 = space.move_index("x2").unwrap();
        let node = space.node_for(x2, &[1, 0, 0, 0]).unwrap();
        assert_eq!(space.nodes[node].history.len(), 2);
    }

    #[test]
    fn condition_substitution_reads_zero() {
        // Trust-shaped game: y ∈ {0..3} exists only after x = 1, and the
        // payoffs multiply y's contribution by x.
        let mut b = GameBuilder::new("trust", &["X", "Y"]);
        let x = b.binary_move("x", 0, 0);
        let y = b.add_move("y", vec![0, 1, 2, 3], PlayerRef::Player(1), 1);
        b.condition(y, vec![(x, 1)]);
        let xv = Poly::move_value(x, 1, &[0, 1]);
        let ylin = Poly::move_linear(y, &[0, 1, 2, 3]);
        b.payoff(0, Poly::int(1) + xv.scale(&rint(2)) - (xv.clone() * ylin.clone()));
        b.payoff(1, xv * ylin);
        let g = b.build();

        let spec = SpaceSpec::free("ybar=2").with_uniform("y", NodeTag::Value(2));
        let reduced = g.apply_space_spec(&spec).unwrap();
        assert_eq!(reduced.moves.len(), 1);
        // Π^X = 1 + 2x − 2x = 1, Π^Y = 2x.
        assert_eq!(reduced.payoffs[0], Poly::int(1));
        assert_eq!(
            reduced.payoffs[1],
            Poly::move_value(0, 1, &[0, 1]).scale(&rint(2))
        );
    }

    #[test]
    fn gradient_is_conditional_difference() {
        // For a multilinear expected payoff, ∂f/∂θ = f|θ=1 − f|θ=0 exactly;
        // semantically the bracket is the conditional-payoff difference at
        // the node that θ parametrises.
        let g = twostage();
        let pays = g.expected_payoff(&SpaceSpec::free("behavioural")).unwrap();
        for poly in &pays {
            for slot in 0..3 {
                let v = Var::Param(slot);
                let diff = poly.substitute(v, &Poly::one()) - poly.substitute(v, &Poly::zero());
                assert_eq!(poly.partial(v), diff);
            }
        }
    }

    #[test]
    fn path_sum_identity() {
        // Expected payoff = Σ paths P(path)·Π(path) exactly, and the path
        // probabilities sum to one.
        let g = publicgoods();
        let rs = g.resolve_spec(&SpaceSpec::free("free")).unwrap();
        let mut total = Poly::zero();
        for (_, probability) in &rs.events {
            total += probability;
        }
        assert_eq!(total, Poly::one());
        let pays = g.expected_payoff_resolved(&rs);
        let pt: Vec<Rat> = (0..rs.n_free()).map(|i| rat(1 + i as i64, 17)).collect();
        let mut by_hand = vec![Rat::from_integer(0.into()); 2];
        for (assignment, probability) in &rs.events {
            let prob = probability.eval_params(&pt);
            let pay = g.payoff_on_path(assignment);
            for (pl, v) in pay.iter().enumerate() {
                by_hand[pl] += &prob * v;
            }
        }
        for pl in 0..2 {
            assert_eq!(pays[pl].eval_params(&pt), by_hand[pl]);
        }
    }

    #[test]
    fn coarse_observation_classes() {
        // A chance move E ∈ {0,1,2}; x sees only whether E = 0.
        let mut b = GameBuilder::new("signal", &["X"]);
        let e = b.chance_move("E", vec![0, 1, 2], vec![rat(1, 3), rat(1, 3), rat(1, 3)], 0);
        let x = b.binary_move("x", 0, 1);
        b.observes(x, vec![ObsEdge::coarse(e, vec![vec![0], vec![1, 2]])]);
        b.names_coarse(x, &[(e, &[0])], &["u", "u0"]);
        b.names_coarse(x, &[(e, &[1, 2])], &["v", "v0"]);
        b.payoff(0, Poly::move_value(x, 1, &[0, 1]));
        let g = b.build();
        let rs = g.resolve_spec(&SpaceSpec::free("free")).unwrap();
        assert_eq!(rs.free_names(), vec!["u", "v"]);
        let pays = g.expected_payoff_resolved(&rs);
        // ⟨x⟩ = (1/3)u + (2/3)v.
        let expected = Poly::param(0).scale(&rat(1, 3)) + Poly::param(1).scale(&rat(2, 3));
        assert_eq!(pays[0], expected);
    }

    #[test]
    fn per_history_table_lowering() {
        // Tit-for-tat-shaped table: stage-2 x copies stage-1 y.
        let mut b = GameBuilder::new("repeat", &["X", "Y"]);
        let x1 = b.binary_move("x1", 0, 0);
        let y1 = b.binary_move("y1", 1, 0);
        let x2 = b.binary_move("x2", 0, 1);
        b.names(x1, &[], &["a", "a0"]);
        b.names(y1, &[], &["b", "b0"]);
        b.payoff(0, Poly::move_value(x2, 1, &[0, 1]));
        let g = b.build();
        let spec = SpaceSpec::free("tft").with_tag(
            "x2",
            MoveTag::PerHistory(vec![
                (vec![("x1".into(), 0), ("y1".into(), 0)], NodeTag::Value(0)),
                (vec![("x1".into(), 0), ("y1".into(), 1)], NodeTag::Copy("y1".into())),
                (vec![("x1".into(), 1), ("y1".into(), 0)], NodeTag::Value(0)),
                (vec![("x1".into(), 1), ("y1".into(), 1)], NodeTag::Value(1)),
            ]),
        );
        let rs = g.resolve_spec(&spec).unwrap();
        assert_eq!(rs.free_names(), vec!["a", "b"]);
        let pays = g.expected_payoff_resolved(&rs);
        // ⟨x₂⟩ = P(y₁ = 1) = b.
        assert_eq!(pays[0], Poly::param(1));
    }

    #[test]
    fn json_round_trip() {
        let g = twostage();
        let json = serde_json::to_string_pretty(&g).unwrap();
        let back: GameDefinition = serde_json::from_str(&json).unwrap();
        assert_eq!(back.players, g.players);
        assert_eq!(back.payoffs, g.payoffs);
        assert_eq!(back.moves.len(), g.moves.len());
        let pays = back.expected_payoff(&SpaceSpec::free("behavioural")).unwrap();
        let orig = g.expected_payoff(&SpaceSpec::free("behavioural")).unwrap();
        assert_eq!(pays, orig);
    }

    #[test]
    fn spec_merge_and_labels() {
        let row = SpaceSpec::free("MKV").with_uniform("x2", NodeTag::Copy("y1".into()));
        let col = SpaceSpec::free("ALLD").with_uniform("y2", NodeTag::Value(1));
        let joint = row.merge(&col);
        assert_eq!(joint.label, "MKV/ALLD");
        assert_eq!(joint.tags.len(), 2);
    }
}
