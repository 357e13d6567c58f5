//! Equilibria and numeric optimisation on constrained spaces.
//!
//! Two exact solvers cover the catalogue: [`backwards_induction`] walks a
//! sequential game stage by stage, solving each reachable decision cell
//! against exact continuation values, and [`best_response_equilibria`]
//! enumerates corner profiles (plus the fully mixed interior point of a 2×2
//! block) when moves are simultaneous or parameters are entangled across
//! nodes.  [`solve_all`] dispatches between them.  Both return
//! [`EquilibriumResult`]s whose points and payoffs are rational, so every
//! downstream table comparison is an exact equality test.
//!
//! The numeric half of the module handles the quantities that have no
//! polynomial form: grid-plus-pattern-search maximisation over a box
//! ([`numeric_box_maximize`]), payoff maximisation restricted to a fixed
//! correlation surface ([`correlated_payoff_maximum`]), the entropy ceiling
//! under a correlation constraint ([`entropy_max_under_rho`]), and the
//! non-polylinear conservation objective ([`nonpolylinear_objective`]).
//!
//! [`gradient_relation_suite`] re-derives the tangent-space comparison for
//! the mixed/behavioural space pair in both the correlated and the
//! independent regime: constrained entries are checked as polynomial
//! identities, limit entries against their closed forms at exact rational
//! locus points.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::corrgeom;
use crate::gamemodel::{GameDefinition, MoveTag, NodeTag, SpaceSpec};
use crate::infomeasures::{binary_entropy, entropy};
use crate::poly::{format_rat_human, MultilinearPolynomial as Poly};
use crate::probspace::{
    ConstraintSet, MoveVar, ParamState, ProbabilitySpace, ResolvedSpace, SpaceBuilder,
};
use crate::{rat_to_f64, rint, Error, Rat};

/// How an equilibrium point sits in its space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    /// Every free node puts all its mass on one value.
    Pure,
    /// At least one decision is a strictly interior indifference point.
    Mixed,
    /// A decider was exactly indifferent and the tie-break picked the point.
    Indifferent,
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquilibriumKind::Pure => "pure",
            EquilibriumKind::Mixed => "mixed",
            EquilibriumKind::Indifferent => "indifferent",
        })
    }
}

/// One equilibrium of a game on one constrained space.
///
/// `point` lists the free parameters of the resolved space in slot order
/// with their equilibrium values.  `pure_profile` is the induced move
/// assignment when every node is deterministic at the point (unplayed moves
/// read 0), and `None` otherwise.  Payoffs are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub spec: SpaceSpec,
    pub point: Vec<(String, Rat)>,
    pub pure_profile: Option<Vec<u8>>,
    pub payoffs: Vec<Rat>,
    pub kind: EquilibriumKind,
}

impl fmt::Display for EquilibriumResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pays: Vec<String> = self.payoffs.iter().map(format_rat_human).collect();
        write!(f, "({}) {}", pays.join(", "), self.kind)?;
        if !self.point.is_empty() {
            let pt: Vec<String> = self
                .point
                .iter()
                .map(|(n, v)| format!("{n}={}", format_rat_human(v)))
                .collect();
            write!(f, " at {}", pt.join(", "))?;
        }
        Ok(())
    }
}

impl Serialize for EquilibriumResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("EquilibriumResult", 5)?;
        st.serialize_field("spec", &self.spec)?;
        let point: Vec<(String, String)> = self
            .point
            .iter()
            .map(|(n, v)| (n.clone(), format_rat_human(v)))
            .collect();
        st.serialize_field("point", &point)?;
        st.serialize_field("pure_profile", &self.pure_profile)?;
        let payoffs: Vec<String> = self.payoffs.iter().map(format_rat_human).collect();
        st.serialize_field("payoffs", &payoffs)?;
        st.serialize_field("kind", &self.kind)?;
        st.end()
    }
}

/// A cross table of equilibria: row spaces for one player's family, column
/// spaces for the other's, and in each cell every equilibrium of the game
/// on the merged space.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonTable {
    pub game: String,
    pub players: Vec<String>,
    pub rows: Vec<SpaceSpec>,
    pub cols: Vec<SpaceSpec>,
    pub cells: Vec<Vec<Vec<EquilibriumResult>>>,
}

impl ComparisonTable {
    pub fn cell(&self, row: usize, col: usize) -> &[EquilibriumResult] {
        &self.cells[row][col]
    }

    /// CSV with one record per equilibrium:
    /// `rowSpec,colSpec,payoff<player>...,kind`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["rowSpec".to_string(), "colSpec".to_string()];
        header.extend(self.players.iter().map(|p| format!("payoff{p}")));
        header.push("kind".to_string());
        w.write_record(&header).expect("csv header");
        for (i, row) in self.rows.iter().enumerate() {
            for (j, col) in self.cols.iter().enumerate() {
                for eq in &self.cells[i][j] {
                    let mut rec = vec![row.label.clone(), col.label.clone()];
                    rec.extend(eq.payoffs.iter().map(format_rat_human));
                    rec.push(eq.kind.to_string());
                    w.write_record(&rec).expect("csv record");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
    }

    /// Markdown grid with payoff pairs in the cells; alternates separated
    /// by `;`.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| |");
        for col in &self.cols {
            out.push_str(&format!(" {} |", col.label));
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &self.cols {
            out.push_str("---|");
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&format!("| {} |", row.label));
            for j in 0..self.cols.len() {
                let cell: Vec<String> = self.cells[i][j]
                    .iter()
                    .map(|eq| {
                        let pays: Vec<String> =
                            eq.payoffs.iter().map(format_rat_human).collect();
                        format!("({})", pays.join(", "))
                    })
                    .collect();
                out.push_str(&format!(" {} |", cell.join("; ")));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("table serialises")
    }
}

/// Cells where some listed payoff pair is weakly unbeaten against every
/// unilateral switch of row (first player) or column (second player) space.
///
/// A deviation cell blocks the candidate only when *all* of its listed
/// payoff pairs strictly beat the candidate's pair for the deviating
/// player, so ties never destabilise and multi-equilibrium cells block only
/// when they are unambiguously better.
pub fn meta_equilibria(table: &ComparisonTable) -> Vec<(usize, usize)> {
    let pair = |eq: &EquilibriumResult| -> (Rat, Rat) {
        let u = eq.payoffs.first().cloned().unwrap_or_else(Rat::zero);
        let v = eq.payoffs.get(1).cloned().unwrap_or_else(|| u.clone());
        (u, v)
    };
    let mut out = Vec::new();
    for i in 0..table.rows.len() {
        for j in 0..table.cols.len() {
            let stable = table.cells[i][j].iter().any(|eq| {
                let (u, v) = pair(eq);
                let row_ok = (0..table.rows.len()).filter(|&i2| i2 != i).all(|i2| {
                    table.cells[i2][j].iter().any(|alt| pair(alt).0 <= u)
                });
                let col_ok = (0..table.cols.len()).filter(|&j2| j2 != j).all(|j2| {
                    table.cells[i][j2].iter().any(|alt| pair(alt).1 <= v)
                });
                row_ok && col_ok
            });
            if stable {
                out.push((i, j));
            }
        }
    }
    out
}

/// Replace an exact correlation constraint by the structural constraints
/// that realise it: ρ=1 copies the later move from the earlier, ρ=−1
/// anti-copies, ρ=0 ties the later move's conditionals across its nodes.
/// Fractional targets have no reduced space and are rejected; they belong
/// to the numeric surface optimiser.
pub fn rewrite_correlation(game: &GameDefinition, spec: &SpaceSpec) -> Result<SpaceSpec, Error> {
    let Some((a, b, rho)) = spec.correlation.clone() else {
        return Ok(spec.clone());
    };
    let mut out = spec.clone();
    out.correlation = None;
    let ai = game.move_index(&a)?;
    let bi = game.move_index(&b)?;
    let (src, dst) = if game.moves[ai].stage <= game.moves[bi].stage {
        (a, b)
    } else {
        (b, a)
    };
    if (rho - 1.0).abs() < 1e-9 {
        out.tags.push((dst, MoveTag::Uniform(NodeTag::Copy(src))));
    } else if (rho + 1.0).abs() < 1e-9 {
        out.tags.push((dst, MoveTag::Uniform(NodeTag::Anti(src))));
    } else if rho.abs() < 1e-9 {
        let space = game.behavioural_space();
        let di = game.move_index(&dst)?;
        let nodes: Vec<&crate::probspace::Node> =
            space.nodes.iter().filter(|n| n.move_idx == di).collect();
        if let Some((first, rest)) = nodes.split_first() {
            for other in rest {
                // Tie every non-dependent slot of the group.
                for k in 0..first.params.len() - 1 {
                    out.ties.push((
                        space.params[first.params[k]].name.clone(),
                        space.params[other.params[k]].name.clone(),
                    ));
                }
            }
        }
    } else {
        return Err(Error::UnsupportedConstraint(format!(
            "correlation {rho} admits no exact reduced space; only -1, 0, 1 \
             rewrite structurally — use the correlation-surface optimiser \
             for fractional targets"
        )));
    }
    Ok(out)
}

const ALT_CAP: usize = 16;

/// One candidate solution of a subgame: exact expected payoffs, the values
/// chosen for every free slot decided inside it (off-path branches
/// included), and whether any decision was tied or mixed.
#[derive(Debug, Clone)]
struct Alt {
    payoffs: Vec<Rat>,
    decisions: BTreeMap<usize, Rat>,
    indifferent: bool,
    mixed: bool,
}

impl Alt {
    fn leaf(payoffs: Vec<Rat>) -> Self {
        Alt {
            payoffs,
            decisions: BTreeMap::new(),
            indifferent: false,
            mixed: false,
        }
    }
}

fn merge_decisions(into: &mut BTreeMap<usize, Rat>, from: &BTreeMap<usize, Rat>) {
    for (k, v) in from {
        let prev = into.insert(*k, v.clone());
        debug_assert!(prev.is_none() || prev.as_ref() == Some(v), "slot decided twice");
    }
}

/// Weighted combination of branch solutions.  `parts` carry probability
/// mass (payoffs accumulate, alternatives multiply), `offpath` branches
/// carry none but still contribute their first alternative's decisions.
fn mix(n_players: usize, parts: &[(Rat, &[Alt])], offpath: &[&[Alt]]) -> Vec<Alt> {
    let mut acc = vec![Alt::leaf(vec![Rat::zero(); n_players])];
    for (w, alts) in parts {
        let mut next = Vec::new();
        'grow: for a in &acc {
            for b in *alts {
                let mut c = a.clone();
                for (cp, bp) in c.payoffs.iter_mut().zip(&b.payoffs) {
                    *cp += w * bp;
                }
                merge_decisions(&mut c.decisions, &b.decisions);
                c.indifferent |= b.indifferent;
                c.mixed |= b.mixed;
                next.push(c);
                if next.len() >= ALT_CAP {
                    break 'grow;
                }
            }
        }
        acc = next;
    }
    for off in offpath {
        if let Some(first) = off.first() {
            for a in &mut acc {
                merge_decisions(&mut a.decisions, &first.decisions);
            }
        }
    }
    acc
}

fn dedup_cap(alts: Vec<Alt>) -> Vec<Alt> {
    let mut seen: BTreeSet<(Vec<Rat>, Vec<(usize, Rat)>)> = BTreeSet::new();
    let mut out = Vec::new();
    for a in alts {
        let key = (
            a.payoffs.clone(),
            a.decisions.iter().map(|(k, v)| (*k, v.clone())).collect(),
        );
        if seen.insert(key) {
            out.push(a);
        }
        if out.len() >= ALT_CAP {
            break;
        }
    }
    out
}

/// A move at the current cell whose node still has free mass to place.
struct Mover {
    mv: usize,
    owner: usize,
    /// Pinned values with their constant probabilities.
    fixed: Vec<(u8, Rat)>,
    /// Values the owner may put mass on; `None` marks the dependent one.
    open: Vec<(u8, Option<usize>)>,
    /// 1 minus the pinned probability.
    mass: Rat,
}

enum Status {
    Unplayed,
    Dist(Vec<(u8, Rat)>),
    Decide(Mover),
}

struct BiCtx<'a> {
    game: &'a GameDefinition,
    rs: &'a ResolvedSpace,
    stages: Vec<Vec<usize>>,
    /// Whether any free parameter sits at stage index ≥ i.
    free_deeper: Vec<bool>,
    prefer: BTreeMap<usize, u8>,
}

/// Backwards induction needs each live free node to know the exact path:
/// coarse observation or cross-node ties leave no per-cell decision
/// problem to solve.
fn bi_check(rs: &ResolvedSpace) -> Result<(), Error> {
    for (pi, state) in rs.states.iter().enumerate() {
        let node = rs.space.params[pi].node;
        if !rs.live_nodes[node] {
            continue;
        }
        match state {
            ParamState::Tied(_) => {
                return Err(Error::NonSequentialFreeNodes(format!(
                    "parameter {} is tied across nodes",
                    rs.space.params[pi].name
                )));
            }
            ParamState::Free(_) => {
                if rs.space.nodes[node].history.iter().any(|(_, set)| set.len() > 1) {
                    return Err(Error::NonSequentialFreeNodes(format!(
                        "free node of {} observes a coarsened history",
                        rs.space.moves[rs.space.nodes[node].move_idx].name
                    )));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

impl BiCtx<'_> {
    fn classify(&self, mv: usize, assignment: &[u8]) -> Result<Status, Error> {
        let decl = &self.game.moves[mv];
        if !decl.condition.iter().all(|&(src, v)| assignment[src] == v) {
            return Ok(Status::Unplayed);
        }
        let Some(node) = self.rs.space.node_for(mv, assignment) else {
            return Ok(Status::Unplayed);
        };
        let mut frees: Vec<(u8, usize)> = Vec::new();
        let mut others: Vec<(u8, Rat)> = Vec::new();
        let mut dep: Option<u8> = None;
        for &pi in &self.rs.space.nodes[node].params {
            let value = self.rs.space.params[pi].value;
            match self.rs.states[pi] {
                ParamState::Free(slot) => frees.push((value, slot)),
                ParamState::Dependent => dep = Some(value),
                _ => {
                    let c = self.rs.subst[pi].as_constant().ok_or_else(|| {
                        Error::NonSequentialFreeNodes(format!(
                            "parameter {} depends on another node",
                            self.rs.space.params[pi].name
                        ))
                    })?;
                    others.push((value, c));
                }
            }
        }
        let pinned: Rat = others.iter().map(|(_, w)| w.clone()).sum();
        if frees.is_empty() {
            let mut dist = others;
            if let Some(v) = dep {
                dist.push((v, &Rat::one() - &pinned));
            }
            return Ok(Status::Dist(dist));
        }
        let owner = self.game.owner_of(mv).ok_or_else(|| {
            Error::UnsupportedShape(format!("chance move {} has free parameters", decl.name))
        })?;
        let mut open: Vec<(u8, Option<usize>)> =
            frees.into_iter().map(|(v, s)| (v, Some(s))).collect();
        if let Some(v) = dep {
            open.push((v, None));
        }
        Ok(Status::Decide(Mover {
            mv,
            owner,
            fixed: others,
            open,
            mass: &Rat::one() - &pinned,
        }))
    }

    fn rec(&self, si: usize, assignment: &mut Vec<u8>) -> Result<Vec<Alt>, Error> {
        let n_players = self.game.players.len();
        let Some(stage_moves) = self.stages.get(si) else {
            return Ok(vec![Alt::leaf(self.game.payoff_on_path(assignment))]);
        };
        let mut dists: Vec<(usize, Vec<(u8, Rat)>)> = Vec::new();
        let mut movers: Vec<Mover> = Vec::new();
        for &mv in stage_moves {
            match self.classify(mv, assignment)? {
                Status::Unplayed => {}
                Status::Dist(d) => dists.push((mv, d)),
                Status::Decide(m) => movers.push(m),
            }
        }
        // Zero-probability branches still need their subtrees solved while
        // free decisions remain deeper; otherwise one representative path
        // is enough to reach the leaves.
        let explore_zero = self.free_deeper.get(si + 1).copied().unwrap_or(false);
        struct Axis {
            mv: usize,
            choices: Vec<(u8, Rat)>,
            mover: bool,
        }
        let mut axes: Vec<Axis> = Vec::new();
        for (mv, dist) in &dists {
            let choices = if explore_zero {
                dist.clone()
            } else {
                let nz: Vec<(u8, Rat)> =
                    dist.iter().filter(|(_, w)| !w.is_zero()).cloned().collect();
                if nz.is_empty() {
                    vec![dist[0].clone()]
                } else {
                    nz
                }
            };
            axes.push(Axis { mv: *mv, choices, mover: false });
        }
        for m in &movers {
            let choices = self.game.moves[m.mv]
                .domain
                .iter()
                .map(|&v| (v, Rat::zero()))
                .collect();
            axes.push(Axis { mv: m.mv, choices, mover: true });
        }
        // Solve every combination of this stage's values.
        let mut table: BTreeMap<Vec<u8>, Vec<(Rat, Vec<Alt>)>> = BTreeMap::new();
        let mut idx = vec![0usize; axes.len()];
        loop {
            let mut weight = Rat::one();
            let mut key = Vec::new();
            for (axis, &i) in axes.iter().zip(&idx) {
                let (v, w) = &axis.choices[i];
                assignment[axis.mv] = *v;
                if axis.mover {
                    key.push(*v);
                } else {
                    weight *= w;
                }
            }
            let sub = self.rec(si + 1, assignment)?;
            table.entry(key).or_default().push((weight, sub));
            for axis in &axes {
                assignment[axis.mv] = 0;
            }
            let mut k = axes.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < axes[k].choices.len() {
                    break;
                }
                idx[k] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
        let blend = |branches: &[(Rat, Vec<Alt>)]| -> Vec<Alt> {
            let parts: Vec<(Rat, &[Alt])> = branches
                .iter()
                .filter(|(w, _)| !w.is_zero())
                .map(|(w, a)| (w.clone(), a.as_slice()))
                .collect();
            let off: Vec<&[Alt]> = branches
                .iter()
                .filter(|(w, _)| w.is_zero())
                .map(|(_, a)| a.as_slice())
                .collect();
            mix(n_players, &parts, &off)
        };
        let alts = match movers.len() {
            0 => {
                let branches = table.into_values().next().expect("one combination");
                blend(&branches)
            }
            1 => {
                let m = &movers[0];
                let evals: BTreeMap<u8, Vec<Alt>> = table
                    .into_iter()
                    .map(|(key, branches)| (key[0], blend(&branches)))
                    .collect();
                self.decide_single(m, &evals, n_players)
            }
            2 => {
                let ok = movers.iter().all(|m| {
                    m.fixed.is_empty()
                        && m.mass.is_one()
                        && m.open.len() == 2
                        && m.open.iter().map(|(v, _)| *v).collect::<BTreeSet<_>>()
                            == BTreeSet::from([0, 1])
                }) && movers[0].owner != movers[1].owner;
                if !ok {
                    return Err(Error::UnsupportedShape(
                        "simultaneous stage is not a clean two-player binary block".into(),
                    ));
                }
                let evals: BTreeMap<(u8, u8), Vec<Alt>> = table
                    .into_iter()
                    .map(|(key, branches)| ((key[0], key[1]), blend(&branches)))
                    .collect();
                self.decide_pair(&movers[0], &movers[1], &evals, n_players)
            }
            n => {
                return Err(Error::UnsupportedShape(format!(
                    "{n} simultaneous free movers in one stage"
                )));
            }
        };
        Ok(dedup_cap(alts))
    }

    /// One decider: put the free mass on a best continuation value, break
    /// exact ties by the spec's preference and then by the lowest value.
    fn decide_single(
        &self,
        m: &Mover,
        evals: &BTreeMap<u8, Vec<Alt>>,
        n_players: usize,
    ) -> Vec<Alt> {
        let score = |v: u8| evals[&v][0].payoffs[m.owner].clone();
        let best = m
            .open
            .iter()
            .map(|(v, _)| score(*v))
            .max()
            .expect("open values");
        let winners: Vec<u8> =
            m.open.iter().map(|(v, _)| *v).filter(|v| score(*v) == best).collect();
        let v_star = match self.prefer.get(&m.mv) {
            Some(p) if winners.contains(p) => *p,
            _ => *winners.iter().min().expect("a winner"),
        };
        let indifferent = winners.len() > 1 && !m.mass.is_zero();
        let mut parts: Vec<(Rat, &[Alt])> = Vec::new();
        let mut off: Vec<&[Alt]> = Vec::new();
        for (v, w) in &m.fixed {
            if w.is_zero() {
                off.push(&evals[v]);
            } else {
                parts.push((w.clone(), &evals[v]));
            }
        }
        if !m.mass.is_zero() {
            parts.push((m.mass.clone(), &evals[&v_star]));
        }
        for (v, _) in &m.open {
            if *v != v_star || m.mass.is_zero() {
                off.push(&evals[v]);
            }
        }
        let mut alts = mix(n_players, &parts, &off);
        for alt in &mut alts {
            for (v, slot) in &m.open {
                if let Some(s) = slot {
                    let chosen =
                        if *v == v_star { m.mass.clone() } else { Rat::zero() };
                    alt.decisions.insert(*s, chosen);
                }
            }
            alt.indifferent |= indifferent;
        }
        alts
    }

    /// A clean 2×2 simultaneous block: all weak pure cells, and the interior
    /// indifference point when no pure cell exists.
    fn decide_pair(
        &self,
        ma: &Mover,
        mb: &Mover,
        evals: &BTreeMap<(u8, u8), Vec<Alt>>,
        n_players: usize,
    ) -> Vec<Alt> {
        let pay = |pl: usize, va: u8, vb: u8| evals[&(va, vb)][0].payoffs[pl].clone();
        let slot_of = |m: &Mover| {
            m.open
                .iter()
                .find_map(|(v, s)| if *v == 1 { *s } else { None })
                .expect("binary node keeps the value-1 slot free")
        };
        let sa = slot_of(ma);
        let sb = slot_of(mb);
        let mut out: Vec<Alt> = Vec::new();
        for va in [0u8, 1] {
            for vb in [0u8, 1] {
                let a_best = pay(ma.owner, va, vb) >= pay(ma.owner, 1 - va, vb);
                let b_best = pay(mb.owner, va, vb) >= pay(mb.owner, va, 1 - vb);
                if !(a_best && b_best) {
                    continue;
                }
                let tied = pay(ma.owner, va, vb) == pay(ma.owner, 1 - va, vb)
                    || pay(mb.owner, va, vb) == pay(mb.owner, va, 1 - vb);
                let off: Vec<&[Alt]> = evals
                    .iter()
                    .filter(|((a, b), _)| !(*a == va && *b == vb))
                    .map(|(_, alts)| alts.as_slice())
                    .collect();
                let mut alts =
                    mix(n_players, &[(Rat::one(), &evals[&(va, vb)])], &off);
                for alt in &mut alts {
                    alt.decisions.insert(sa, rint(i64::from(va)));
                    alt.decisions.insert(sb, rint(i64::from(vb)));
                    alt.indifferent |= tied;
                }
                out.extend(alts);
            }
        }
        if !out.is_empty() {
            return out;
        }
        // No pure cell: interior indifference.  t = P(a=1), u = P(b=1).
        let da = &(&pay(ma.owner, 0, 0) - &pay(ma.owner, 0, 1))
            - &(&pay(ma.owner, 1, 0) - &pay(ma.owner, 1, 1));
        let db = &(&pay(mb.owner, 0, 0) - &pay(mb.owner, 0, 1))
            - &(&pay(mb.owner, 1, 0) - &pay(mb.owner, 1, 1));
        let interior = |x: &Rat| x > &Rat::zero() && x < &Rat::one();
        if !da.is_zero() && !db.is_zero() {
            let u = &(&pay(ma.owner, 0, 0) - &pay(ma.owner, 1, 0)) / &da;
            let t = &(&pay(mb.owner, 0, 0) - &pay(mb.owner, 0, 1)) / &db;
            if interior(&t) && interior(&u) {
                let wa = [&Rat::one() - &t, t.clone()];
                let wb = [&Rat::one() - &u, u.clone()];
                let mut parts: Vec<(Rat, &[Alt])> = Vec::new();
                for va in [0u8, 1] {
                    for vb in [0u8, 1] {
                        parts.push((
                            &wa[va as usize] * &wb[vb as usize],
                            &evals[&(va, vb)],
                        ));
                    }
                }
                let mut alts = mix(n_players, &parts, &[]);
                for alt in &mut alts {
                    alt.decisions.insert(sa, t.clone());
                    alt.decisions.insert(sb, u.clone());
                    alt.mixed = true;
                }
                return alts;
            }
        }
        // Degenerate block: no pure cell and no interior point.  Keep the
        // all-zero cell as an explicitly tied representative.
        let off: Vec<&[Alt]> = evals
            .iter()
            .filter(|((a, b), _)| !(*a == 0 && *b == 0))
            .map(|(_, alts)| alts.as_slice())
            .collect();
        let mut alts = mix(n_players, &[(Rat::one(), &evals[&(0, 0)])], &off);
        for alt in &mut alts {
            alt.decisions.insert(sa, Rat::zero());
            alt.decisions.insert(sb, Rat::zero());
            alt.indifferent = true;
        }
        alts
    }
}

/// The move assignment induced by a point where every played node is
/// deterministic; `None` as soon as any reachable node mixes.
fn induced_profile(
    game: &GameDefinition,
    rs: &ResolvedSpace,
    point: &[Rat],
) -> Option<Vec<u8>> {
    let mut a = vec![0u8; game.moves.len()];
    for (_, stage_moves) in game.stages() {
        for mv in stage_moves {
            let decl = &game.moves[mv];
            if !decl.condition.iter().all(|&(src, v)| a[src] == v) {
                continue;
            }
            let node = rs.space.node_for(mv, &a)?;
            let mut chosen: Option<u8> = None;
            for &pi in &rs.space.nodes[node].params {
                let p = rs.subst[pi].eval_params(point);
                if p.is_one() {
                    chosen = Some(rs.space.params[pi].value);
                } else if !p.is_zero() {
                    return None;
                }
            }
            a[mv] = chosen?;
        }
    }
    Some(a)
}

fn finalize(
    game: &GameDefinition,
    rs: &ResolvedSpace,
    spec: &SpaceSpec,
    alts: Vec<Alt>,
) -> Vec<EquilibriumResult> {
    let names = rs.free_names();
    alts.into_iter()
        .map(|alt| {
            let point: Vec<(String, Rat)> = names
                .iter()
                .enumerate()
                .map(|(slot, name)| {
                    let v = alt.decisions.get(&slot).cloned().unwrap_or_else(|| {
                        debug_assert!(false, "free slot {slot} undecided");
                        Rat::zero()
                    });
                    (name.to_string(), v)
                })
                .collect();
            let values: Vec<Rat> = point.iter().map(|(_, v)| v.clone()).collect();
            let kind = if alt.mixed {
                EquilibriumKind::Mixed
            } else if alt.indifferent {
                EquilibriumKind::Indifferent
            } else {
                EquilibriumKind::Pure
            };
            EquilibriumResult {
                spec: spec.clone(),
                point,
                pure_profile: induced_profile(game, rs, &values),
                payoffs: alt.payoffs,
                kind,
            }
        })
        .collect()
}

/// Solve a sequential game on a constrained space by exact backwards
/// induction and return every surviving alternative (ties explored at
/// simultaneous 2×2 blocks; single-decider ties broken by preference, then
/// lowest value, and flagged indifferent).
pub fn backwards_induction_all(
    game: &GameDefinition,
    spec: &SpaceSpec,
) -> Result<Vec<EquilibriumResult>, Error> {
    let rewritten = rewrite_correlation(game, spec)?;
    let rs = game.resolve_spec(&rewritten)?;
    bi_check(&rs)?;
    let stages: Vec<Vec<usize>> = game.stages().into_iter().map(|(_, ms)| ms).collect();
    let mut stage_pos = vec![0usize; game.moves.len()];
    for (i, ms) in stages.iter().enumerate() {
        for &m in ms {
            stage_pos[m] = i;
        }
    }
    let mut free_deeper = vec![false; stages.len() + 1];
    for &pi in &rs.free {
        let node = rs.space.params[pi].node;
        free_deeper[stage_pos[rs.space.nodes[node].move_idx]] = true;
    }
    for i in (0..stages.len()).rev() {
        free_deeper[i] = free_deeper[i] || free_deeper[i + 1];
    }
    let mut prefer = BTreeMap::new();
    for (name, v) in &rewritten.prefer {
        prefer.insert(game.move_index(name)?, *v);
    }
    let ctx = BiCtx { game, rs: &rs, stages, free_deeper, prefer };
    let mut assignment = vec![0u8; game.moves.len()];
    let alts = ctx.rec(0, &mut assignment)?;
    Ok(finalize(game, &rs, spec, alts))
}

/// First alternative of [`backwards_induction_all`].
pub fn backwards_induction(
    game: &GameDefinition,
    spec: &SpaceSpec,
) -> Result<EquilibriumResult, Error> {
    backwards_induction_all(game, spec)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::invalid("backwards induction produced no solution"))
}

/// A live node carrying free mass, as seen by the corner enumerator.
struct FreeNode {
    owner: usize,
    mass: Rat,
    options: Vec<(u8, Option<usize>)>,
}

fn free_node_structure(
    game: &GameDefinition,
    rs: &ResolvedSpace,
) -> Result<Vec<FreeNode>, Error> {
    let mut out = Vec::new();
    for (ni, node) in rs.space.nodes.iter().enumerate() {
        if !rs.live_nodes[ni] {
            continue;
        }
        let mut frees: Vec<(u8, usize)> = Vec::new();
        let mut pinned = Rat::zero();
        let mut dep: Option<u8> = None;
        let mut entangled = false;
        for &pi in &node.params {
            let value = rs.space.params[pi].value;
            match rs.states[pi] {
                ParamState::Free(slot) => frees.push((value, slot)),
                ParamState::Dependent => dep = Some(value),
                _ => match rs.subst[pi].as_constant() {
                    Some(c) => pinned += c,
                    None => entangled = true,
                },
            }
        }
        if frees.is_empty() {
            continue;
        }
        if entangled {
            return Err(Error::UnsupportedShape(format!(
                "node of {} mixes free and cross-tied parameters",
                rs.space.moves[node.move_idx].name
            )));
        }
        let owner = game.owner_of(node.move_idx).ok_or_else(|| {
            Error::UnsupportedShape(format!(
                "chance move {} has free parameters",
                rs.space.moves[node.move_idx].name
            ))
        })?;
        let mut options: Vec<(u8, Option<usize>)> =
            frees.into_iter().map(|(v, s)| (v, Some(s))).collect();
        if let Some(v) = dep {
            options.push((v, None));
        }
        out.push(FreeNode { owner, mass: &Rat::one() - &pinned, options });
    }
    Ok(out)
}

/// Pure corner profiles plus the fully mixed interior point of a two-player
/// binary block.  Corners place each free node's mass on one value; a
/// corner is kept when no unilateral re-placement over the owner's own
/// nodes improves that owner's exact payoff (weak inequalities, ties
/// flagged indifferent).  Requires at most two players with free
/// parameters.
pub fn best_response_equilibria(
    game: &GameDefinition,
    spec: &SpaceSpec,
) -> Result<Vec<EquilibriumResult>, Error> {
    let rewritten = rewrite_correlation(game, spec)?;
    let rs = game.resolve_spec(&rewritten)?;
    let pays = game.expected_payoff_resolved(&rs);
    let names = rs.free_names();
    if rs.n_free() == 0 {
        let payoffs: Vec<Rat> = pays.iter().map(|p| p.eval_params(&[])).collect();
        return Ok(vec![EquilibriumResult {
            spec: spec.clone(),
            point: Vec::new(),
            pure_profile: induced_profile(game, &rs, &[]),
            payoffs,
            kind: EquilibriumKind::Pure,
        }]);
    }
    let fnodes = free_node_structure(game, &rs)?;
    let players: Vec<usize> = {
        let set: BTreeSet<usize> = fnodes.iter().map(|n| n.owner).collect();
        set.into_iter().collect()
    };
    if players.len() > 2 {
        return Err(Error::UnsupportedShape(format!(
            "{} players hold free parameters; at most two are supported",
            players.len()
        )));
    }
    let corner_count: usize = fnodes.iter().map(|n| n.options.len()).product();
    if corner_count > 1 << 14 {
        return Err(Error::UnsupportedShape(format!(
            "{corner_count} corner profiles exceed the enumeration bound"
        )));
    }
    let point_for = |choices: &[usize]| -> Vec<Rat> {
        let mut pt = vec![Rat::zero(); rs.n_free()];
        for (node, &c) in fnodes.iter().zip(choices) {
            for (k, (_, slot)) in node.options.iter().enumerate() {
                if let Some(s) = slot {
                    pt[*s] = if k == c { node.mass.clone() } else { Rat::zero() };
                }
            }
        }
        pt
    };
    let mut corners: Vec<(Vec<usize>, Vec<Rat>)> = Vec::new();
    let mut choices = vec![0usize; fnodes.len()];
    loop {
        corners.push((choices.clone(), point_for(&choices)));
        let mut k = fnodes.len();
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            choices[k] += 1;
            if choices[k] < fnodes[k].options.len() {
                break;
            }
            choices[k] = 0;
        }
        if choices.iter().all(|&c| c == 0) {
            break;
        }
    }
    corners.sort_by(|a, b| a.1.cmp(&b.1));
    let payoff_at = |pl: usize, pt: &[Rat]| pays[pl].eval_params(pt);
    let mut results = Vec::new();
    for (choice, pt) in &corners {
        let mut is_eq = true;
        let mut tied = false;
        for &pl in &players {
            let own = payoff_at(pl, pt);
            for (other, opt) in &corners {
                let unilateral = fnodes
                    .iter()
                    .enumerate()
                    .all(|(k, n)| n.owner == pl || other[k] == choice[k]);
                if !unilateral || other == choice {
                    continue;
                }
                let dev = payoff_at(pl, opt);
                if dev > own {
                    is_eq = false;
                    break;
                }
                if dev == own {
                    tied = true;
                }
            }
            if !is_eq {
                break;
            }
        }
        if !is_eq {
            continue;
        }
        let payoffs: Vec<Rat> = (0..game.players.len()).map(|pl| payoff_at(pl, pt)).collect();
        results.push(EquilibriumResult {
            spec: spec.clone(),
            point: names.iter().map(|n| n.to_string()).zip(pt.iter().cloned()).collect(),
            pure_profile: induced_profile(game, &rs, pt),
            payoffs,
            kind: if tied { EquilibriumKind::Indifferent } else { EquilibriumKind::Pure },
        });
    }
    // Fully mixed interior point of a one-node-per-player binary block.
    if players.len() == 2 && fnodes.len() == 2 {
        let clean = fnodes.iter().all(|n| {
            n.mass.is_one()
                && n.options.len() == 2
                && n.options.iter().map(|(v, _)| *v).collect::<BTreeSet<_>>()
                    == BTreeSet::from([0, 1])
        }) && fnodes[0].owner != fnodes[1].owner;
        if clean {
            let slot_of = |n: &FreeNode| {
                n.options
                    .iter()
                    .find_map(|(v, s)| if *v == 1 { *s } else { None })
                    .expect("value-1 slot")
            };
            let (sa, sb) = (slot_of(&fnodes[0]), slot_of(&fnodes[1]));
            let (pa, pb) = (fnodes[0].owner, fnodes[1].owner);
            let at = |pl: usize, va: u8, vb: u8| {
                let mut pt = vec![Rat::zero(); rs.n_free()];
                pt[sa] = rint(i64::from(va));
                pt[sb] = rint(i64::from(vb));
                payoff_at(pl, &pt)
            };
            let da = &(&at(pa, 0, 0) - &at(pa, 0, 1)) - &(&at(pa, 1, 0) - &at(pa, 1, 1));
            let db = &(&at(pb, 0, 0) - &at(pb, 0, 1)) - &(&at(pb, 1, 0) - &at(pb, 1, 1));
            let interior = |x: &Rat| x > &Rat::zero() && x < &Rat::one();
            if !da.is_zero() && !db.is_zero() {
                let u = &(&at(pa, 0, 0) - &at(pa, 1, 0)) / &da;
                let t = &(&at(pb, 0, 0) - &at(pb, 0, 1)) / &db;
                if interior(&t) && interior(&u) {
                    let mut pt = vec![Rat::zero(); rs.n_free()];
                    pt[sa] = t;
                    pt[sb] = u;
                    let payoffs: Vec<Rat> =
                        (0..game.players.len()).map(|pl| payoff_at(pl, &pt)).collect();
                    results.push(EquilibriumResult {
                        spec: spec.clone(),
                        point: names
                            .iter()
                            .map(|n| n.to_string())
                            .zip(pt.iter().cloned())
                            .collect(),
                        pure_profile: None,
                        payoffs,
                        kind: EquilibriumKind::Mixed,
                    });
                }
            }
        }
    }
    Ok(results)
}

/// Backwards induction where its preconditions hold, best-response corner
/// enumeration where they fail.
pub fn solve_all(
    game: &GameDefinition,
    spec: &SpaceSpec,
) -> Result<Vec<EquilibriumResult>, Error> {
    match backwards_induction_all(game, spec) {
        Ok(r) => Ok(r),
        Err(Error::NonSequentialFreeNodes(_)) | Err(Error::UnsupportedShape(_)) => {
            best_response_equilibria(game, spec)
        }
        Err(e) => Err(e),
    }
}

/// The canonical equilibrium of a game on one constrained space: the first
/// alternative of [`solve_all`] (deterministic order — lowest values win
/// ties).
pub fn constrained_equilibrium(
    game: &GameDefinition,
    spec: &SpaceSpec,
) -> Result<EquilibriumResult, Error> {
    solve_all(game, spec)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::invalid("no equilibrium found on this space"))
}

/// The named space family of a game, in its canonical order.
pub fn enumerate_spaces(
    game: &GameDefinition,
    family: &str,
) -> Result<Vec<SpaceSpec>, Error> {
    crate::catalog::family_specs(game, family)
}

/// Cross table over two space families: cell (i, j) solves the game on
/// `rows[i].merge(cols[j])`.  Rows are solved in parallel; the result
/// order is deterministic.
pub fn comparison_table(
    game: &GameDefinition,
    family_rows: &str,
    family_cols: &str,
) -> Result<ComparisonTable, Error> {
    let rows = enumerate_spaces(game, family_rows)?;
    let cols = enumerate_spaces(game, family_cols)?;
    let cells: Result<Vec<Vec<Vec<EquilibriumResult>>>, Error> = rows
        .par_iter()
        .map(|row| cols.iter().map(|col| solve_all(game, &row.merge(col))).collect())
        .collect();
    Ok(ComparisonTable {
        game: game.name.clone(),
        players: game.players.clone(),
        rows,
        cols,
        cells: cells?,
    })
}

/// Check that no owner gains more than `1e-9` by re-placing any one of
/// their nodes' mass on a single value, and that the recorded payoffs are
/// exactly the expected payoffs at the recorded point.
pub fn verify_equilibrium(
    game: &GameDefinition,
    spec: &SpaceSpec,
    eq: &EquilibriumResult,
) -> Result<(), Error> {
    let rewritten = rewrite_correlation(game, spec)?;
    let rs = game.resolve_spec(&rewritten)?;
    let pays = game.expected_payoff_resolved(&rs);
    let names = rs.free_names();
    let by_name: BTreeMap<&str, &Rat> =
        eq.point.iter().map(|(n, v)| (n.as_str(), v)).collect();
    let point: Vec<Rat> = names
        .iter()
        .map(|n| {
            by_name
                .get(n)
                .map(|v| (*v).clone())
                .ok_or_else(|| Error::UnknownParam((*n).to_string()))
        })
        .collect::<Result<_, _>>()?;
    rs.check_point(&point)?;
    for (pl, poly) in pays.iter().enumerate() {
        let got = poly.eval_params(&point);
        if eq.payoffs.get(pl) != Some(&got) {
            return Err(Error::invalid(format!(
                "recorded payoff of {} differs from the expectation at the point",
                game.players[pl]
            )));
        }
    }
    for node in free_node_structure(game, &rs)? {
        let own = rat_to_f64(&pays[node.owner].eval_params(&point));
        for k in 0..node.options.len() {
            let mut dev = point.clone();
            for (j, (_, slot)) in node.options.iter().enumerate() {
                if let Some(s) = slot {
                    dev[*s] = if j == k { node.mass.clone() } else { Rat::zero() };
                }
            }
            let dev_pay = rat_to_f64(&pays[node.owner].eval_params(&dev));
            if dev_pay > own + 1e-9 {
                return Err(Error::invalid(format!(
                    "{} improves from {own} to {dev_pay} by re-placing a node",
                    game.players[node.owner]
                )));
            }
        }
    }
    Ok(())
}

/// Simulate `n` plays of the game at an exact point and return each
/// player's sample mean and standard error.  The generator is explicit and
/// seeded, so results are reproducible across platforms.
pub fn monte_carlo_verify(
    game: &GameDefinition,
    spec: &SpaceSpec,
    point: &[Rat],
    n: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>, Error> {
    if n == 0 {
        return Err(Error::BadParams("need at least one play".into()));
    }
    let rewritten = rewrite_correlation(game, spec)?;
    let rs = game.resolve_spec(&rewritten)?;
    rs.check_point(point)?;
    let pf: Vec<f64> = point.iter().map(rat_to_f64).collect();
    let node_dist: Vec<Vec<(u8, f64)>> = rs
        .space
        .nodes
        .iter()
        .map(|node| {
            node.params
                .iter()
                .map(|&pi| (rs.space.params[pi].value, rs.subst[pi].eval_params_f64(&pf)))
                .collect()
        })
        .collect();
    let stage_moves = game.stages();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let players = game.players.len();
    let mut sums = vec![0.0f64; players];
    let mut sumsq = vec![0.0f64; players];
    for _ in 0..n {
        let mut a = vec![0u8; game.moves.len()];
        for (_, ms) in &stage_moves {
            for &mv in ms {
                let decl = &game.moves[mv];
                if !decl.condition.iter().all(|&(src, v)| a[src] == v) {
                    continue;
                }
                let Some(node) = rs.space.node_for(mv, &a) else {
                    continue;
                };
                let tick: f64 = rng.gen();
                let mut acc = 0.0;
                let dist = &node_dist[node];
                let mut chosen = dist.last().map(|(v, _)| *v).unwrap_or(0);
                for (v, p) in dist {
                    acc += p;
                    if tick < acc {
                        chosen = *v;
                        break;
                    }
                }
                a[mv] = chosen;
            }
        }
        for (pl, pay) in game.payoff_on_path(&a).iter().enumerate() {
            let x = rat_to_f64(pay);
            sums[pl] += x;
            sumsq[pl] += x * x;
        }
    }
    Ok((0..players)
        .map(|pl| {
            let mean = sums[pl] / n as f64;
            let stderr = if n > 1 {
                let var = ((sumsq[pl] - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0);
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            (mean, stderr)
        })
        .collect())
}

/// Maximise `objective` over an axis-aligned box: a full grid scan
/// (`grid` points per axis, endpoints included) keeps only points passing
/// `feasible`, then a shrinking pattern search polishes the best grid
/// point.  Ties prefer the lexicographically smallest point, so the result
/// is deterministic under parallel evaluation.
pub fn numeric_box_maximize<F>(
    objective: F,
    bounds: &[(f64, f64)],
    feasible: Option<&(dyn Fn(&[f64]) -> bool + Sync)>,
    grid: usize,
) -> Result<(Vec<f64>, f64), Error>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if bounds.is_empty() || grid < 2 {
        return Err(Error::BadParams(
            "need a nonempty box and at least two grid points per axis".into(),
        ));
    }
    let d = bounds.len();
    match grid.checked_pow(d as u32) {
        Some(total) if total <= 50_000_000 => {}
        _ => return Err(Error::BadParams("grid too large".into())),
    }
    let spacing: Vec<f64> = bounds
        .iter()
        .map(|(lo, hi)| if grid > 1 { (hi - lo) / (grid - 1) as f64 } else { 0.0 })
        .collect();
    let coord = |axis: usize, k: usize| bounds[axis].0 + spacing[axis] * k as f64;
    let admit = |pt: &[f64]| feasible.map_or(true, |f| f(pt));
    type Best = Option<(f64, Vec<f64>)>;
    let better = |cur: &Best, v: f64, pt: &[f64]| -> bool {
        match cur {
            None => true,
            Some((bv, bp)) => {
                v > *bv || (v == *bv && pt < bp.as_slice())
            }
        }
    };
    let best: Best = (0..grid)
        .into_par_iter()
        .map(|i0| {
            let mut local: Best = None;
            let mut pt = vec![0.0; d];
            pt[0] = coord(0, i0);
            let mut idx = vec![0usize; d - 1];
            loop {
                for (k, &i) in idx.iter().enumerate() {
                    pt[k + 1] = coord(k + 1, i);
                }
                if admit(&pt) {
                    let v = objective(&pt);
                    if v.is_finite() && better(&local, v, &pt) {
                        local = Some((v, pt.clone()));
                    }
                }
                let mut k = idx.len();
                loop {
                    if k == 0 {
                        return local;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < grid {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .reduce(
            || None,
            |a, b| match (&a, &b) {
                (None, _) => b,
                (_, None) => a,
                (Some((va, pa)), Some(_)) => {
                    if better(&b, *va, pa) {
                        a
                    } else {
                        b
                    }
                }
            },
        );
    let Some((mut value, mut point)) = best else {
        return Err(Error::EmptyFeasibleSet);
    };
    let max_spacing = spacing.iter().cloned().fold(0.0f64, f64::max);
    let mut scale = 1.0f64;
    while scale * max_spacing > 1e-7 {
        let mut improved = false;
        for axis in 0..d {
            for dir in [-1.0, 1.0] {
                let mut cand = point.clone();
                cand[axis] =
                    (point[axis] + dir * scale * spacing[axis]).clamp(bounds[axis].0, bounds[axis].1);
                if cand[axis] == point[axis] || !admit(&cand) {
                    continue;
                }
                let v = objective(&cand);
                if v.is_finite() && v > value {
                    value = v;
                    point = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            scale *= 0.5;
        }
    }
    Ok((point, value))
}

/// The point of the behavioural surface with correlation `rho` over the
/// marginal pair `(p, q)`, or `None` when that column leaves the surface.
///
/// The solved conditional comes from the principal branch at `p` clamped
/// away from its degenerate endpoints, and is accepted only where the
/// correlation it realises matches `rho` to `1e-6` — this rejects the
/// spurious root line at `q = 1` (where the second marginal degenerates)
/// while keeping the genuine boundary columns.  `rho = 0` is the full
/// square `r = q`, faces included.
pub fn correlation_surface_point(rho: f64, p: f64, q: f64) -> Option<[f64; 3]> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) || !(-1.0..=1.0).contains(&rho) {
        return None;
    }
    if rho == 0.0 {
        return Some([p, q, q]);
    }
    let pc = p.clamp(1e-12, 1.0 - 1e-12);
    let r = corrgeom::r_plus(pc, q, rho);
    if !corrgeom::in_range(r) {
        return None;
    }
    match corrgeom::rho_behavioural(pc, q, r) {
        Ok(got) if (got - rho).abs() <= 1e-6 => Some([p, q, r]),
        _ => None,
    }
}

/// Maximise a payoff polynomial in `(p, q, r)` over the correlation-`rho`
/// surface.  Returns the argmax as a surface point and the value.
pub fn correlated_payoff_maximum(
    payoff: &Poly,
    rho: f64,
    grid: usize,
) -> Result<([f64; 3], f64), Error> {
    let obj = |pt: &[f64]| match correlation_surface_point(rho, pt[0], pt[1]) {
        Some([p, q, r]) => payoff.eval_params_f64(&[p, q, r]),
        None => f64::NAN,
    };
    let feas = |pt: &[f64]| correlation_surface_point(rho, pt[0], pt[1]).is_some();
    let (pq, value) =
        numeric_box_maximize(obj, &[(0.0, 1.0), (0.0, 1.0)], Some(&feas), grid)?;
    let point = correlation_surface_point(rho, pq[0], pq[1]).expect("argmax is feasible");
    Ok((point, value))
}

/// Joint-entropy ceiling over the correlation-`rho` surface, with the
/// argmax surface point.
pub fn entropy_max_under_rho_argmax(rho: f64) -> ([f64; 3], f64) {
    let h = |pt: &[f64]| match correlation_surface_point(rho, pt[0], pt[1]) {
        Some([p, q, r]) => {
            binary_entropy(p) + (1.0 - p) * binary_entropy(q) + p * binary_entropy(r)
        }
        None => f64::NAN,
    };
    let feas = |pt: &[f64]| correlation_surface_point(rho, pt[0], pt[1]).is_some();
    let (pq, value) = numeric_box_maximize(h, &[(0.0, 1.0), (0.0, 1.0)], Some(&feas), 201)
        .expect("the correlation surface is never empty");
    let point = correlation_surface_point(rho, pq[0], pq[1]).expect("argmax is feasible");
    (point, value)
}

/// Maximum joint entropy attainable at correlation `rho`: `2 ln 2` at
/// independence, decaying to `ln 2` at `rho = ±1` where only the perfectly
/// aligned columns remain.
pub fn entropy_max_under_rho(rho: f64) -> f64 {
    entropy_max_under_rho_argmax(rho).1
}

/// The conservation objective `1 − |∇(P00 + P11)|²` of a game whose
/// observable pair is binary, as polynomials over one resolved space.
pub struct NonpolylinearObjective {
    grads: Vec<Poly>,
}

impl NonpolylinearObjective {
    pub fn new(game: &GameDefinition, spec: &SpaceSpec) -> Result<Self, Error> {
        let rewritten = rewrite_correlation(game, spec)?;
        let rs = game.resolve_spec(&rewritten)?;
        let obs = rs.space.observable_moves();
        if obs.len() != 2 || obs.iter().any(|m| m.domain.len() != 2) {
            return Err(Error::UnsupportedShape(
                "the conservation objective needs exactly two binary observables".into(),
            ));
        }
        let mut diag = Poly::zero();
        for (out, poly) in rs.observable_polynomials()? {
            if out[0] == out[1] {
                diag = &diag + &poly;
            }
        }
        Ok(NonpolylinearObjective { grads: rs.gradient(&diag) })
    }

    pub fn dim(&self) -> usize {
        self.grads.len()
    }

    pub fn value(&self, point: &[f64]) -> f64 {
        let g2: f64 = self
            .grads
            .iter()
            .map(|g| {
                let v = g.eval_params_f64(point);
                v * v
            })
            .sum();
        1.0 - g2
    }
}

/// `1 − |∇(P00 + P11)|²` at one point of the resolved space: identically 1
/// on a fully aligned space (the sum is conserved), and bounded by 1/2 on
/// the free space.
pub fn nonpolylinear_objective(
    game: &GameDefinition,
    spec: &SpaceSpec,
    point: &[f64],
) -> Result<f64, Error> {
    let obj = NonpolylinearObjective::new(game, spec)?;
    if point.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), got: point.len() });
    }
    Ok(obj.value(point))
}

/// Which of the paired spaces the gradient suite inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Mixed,
    Behavioural,
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceKind::Mixed => "mixed",
            SpaceKind::Behavioural => "behavioural",
        })
    }
}

/// Which constraint regime: full alignment (`y = x`) or independence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationRegime {
    Correlated,
    Independent,
}

impl fmt::Display for CorrelationRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationRegime::Correlated => "correlated",
            CorrelationRegime::Independent => "independent",
        })
    }
}

/// One quantity of the tangent-space comparison.
#[derive(Debug, Clone, Serialize)]
pub struct GradientRow {
    pub label: String,
    pub constrained_form: String,
    pub constrained_ok: bool,
    pub limit_form: String,
    pub limit_ok: bool,
}

/// The full comparison for one space and regime.
#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    pub space: SpaceKind,
    pub regime: CorrelationRegime,
    pub points: usize,
    pub rows: Vec<GradientRow>,
}

impl GradientReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.constrained_ok && r.limit_ok)
    }
}

impl fmt::Display for GradientReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "tangent gradients — {} space, {} regime ({} locus points)",
            self.space, self.regime, self.points
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "  {:<24} constrained {} [{}]  limit {} [{}]",
                r.label,
                r.constrained_form,
                if r.constrained_ok { "ok" } else { "FAIL" },
                r.limit_form,
                if r.limit_ok { "ok" } else { "FAIL" },
            )?;
        }
        Ok(())
    }
}

fn behavioural_pair_space() -> ProbabilitySpace {
    let mut b = SpaceBuilder::new("behavioural pair");
    let x = b.add_binary_move("x");
    let y = b.add_binary_move("y");
    b.binary_node(x, &[], "p", "p0");
    b.binary_node(y, &[(x, 0)], "q", "q0");
    b.binary_node(y, &[(x, 1)], "r", "r0");
    b.build()
}

/// The mixed pair: `x`, plus a response *plan* with values `0 ↦ always 0`,
/// `1 ↦ copy x`, `2 ↦ oppose x`, `3 ↦ always 1`, projected onto the
/// observable `(x, y)`.
fn mixed_pair_space() -> ProbabilitySpace {
    let mut b = SpaceBuilder::new("mixed pair");
    let x = b.add_binary_move("x");
    let u = b.add_move("u", &[0, 1, 2, 3]);
    b.binary_node(x, &[], "a", "a0");
    b.ordered_node(u, &[], &[("b1", 1), ("b2", 2), ("b3", 3), ("b0", 0)]);
    let moves = vec![
        MoveVar { name: "x".into(), domain: vec![0, 1] },
        MoveVar { name: "y".into(), domain: vec![0, 1] },
    ];
    let mut map = Vec::new();
    for vx in 0..2u8 {
        for vu in 0..4u8 {
            let y = match vu {
                0 => 0,
                1 => vx,
                2 => 1 - vx,
                _ => 1,
            };
            map.push((vec![vx, vu], vec![vx, y]));
        }
    }
    b.observables(moves, map);
    b.build()
}

/// Observable cell polynomials of a binary pair, indexed `x·2 + y`.
struct PairStats {
    c: [Poly; 4],
}

impl PairStats {
    fn from(rs: &ResolvedSpace) -> Self {
        let mut c = [Poly::zero(), Poly::zero(), Poly::zero(), Poly::zero()];
        for (out, poly) in rs.observable_polynomials().expect("observable cells") {
            let k = usize::from(out[0]) * 2 + usize::from(out[1]);
            c[k] = &c[k] + &poly;
        }
        PairStats { c }
    }

    fn cell(&self, vx: u8, vy: u8) -> &Poly {
        &self.c[usize::from(vx) * 2 + usize::from(vy)]
    }

    fn px(&self, v: u8) -> Poly {
        &self.c[usize::from(v) * 2] + &self.c[usize::from(v) * 2 + 1]
    }

    fn py(&self, v: u8) -> Poly {
        &self.c[usize::from(v)] + &self.c[2 + usize::from(v)]
    }

    fn ex(&self) -> Poly {
        self.px(1)
    }

    fn ey(&self) -> Poly {
        self.py(1)
    }

    fn exy(&self) -> Poly {
        self.c[3].clone()
    }

    fn cov(&self) -> Poly {
        &self.exy() - &(&self.ex() * &self.ey())
    }

    /// `V(x) + V(y) − 2 cov(x, y)`.
    fn variance_combo(&self) -> Poly {
        let vx = &self.ex() - &(&self.ex() * &self.ex());
        let vy = &self.ey() - &(&self.ey() * &self.ey());
        &(&vx + &vy) - &self.cov().scale(&rint(2))
    }
}

/// Exact gradient of `num/den` (or of `num` when `den` is `None`) at a
/// point, by the quotient rule on the polynomial gradients.
fn exact_gradient(
    rs: &ResolvedSpace,
    num: &Poly,
    den: Option<&Poly>,
    pt: &[Rat],
) -> Vec<Rat> {
    let gn = rs.gradient_at(num, pt);
    match den {
        None => gn,
        Some(d) => {
            let dv = d.eval_params(pt);
            let nv = num.eval_params(pt);
            let gd = rs.gradient_at(d, pt);
            gn.iter()
                .zip(&gd)
                .map(|(ni, di)| &(&(ni * &dv) - &(&nv * di)) / &(&dv * &dv))
                .collect()
        }
    }
}

/// Whether the gradient of `num/den` vanishes identically on the space.
fn ratio_gradient_is_zero(rs: &ResolvedSpace, num: &Poly, den: Option<&Poly>) -> bool {
    match den {
        None => rs.gradient(num).iter().all(Poly::is_zero),
        Some(d) => rs
            .gradient(num)
            .iter()
            .zip(rs.gradient(d))
            .all(|(ni, di)| (&(ni * d) - &(num * &di)).is_zero()),
    }
}

fn same_multiset(xs: &[Poly], ys: &[Poly]) -> bool {
    if xs.len() != ys.len() {
        return false;
    }
    let mut used = vec![false; ys.len()];
    xs.iter().all(|x| {
        ys.iter().enumerate().any(|(j, y)| {
            if !used[j] && x == y {
                used[j] = true;
                true
            } else {
                false
            }
        })
    })
}

fn fd_gradient_norm(f: &dyn Fn(&[f64]) -> f64, pt: &[f64]) -> f64 {
    let h = 1e-6;
    let mut acc = 0.0;
    for k in 0..pt.len() {
        let mut hi = pt.to_vec();
        let mut lo = pt.to_vec();
        hi[k] += h;
        lo[k] -= h;
        let g = (f(&hi) - f(&lo)) / (2.0 * h);
        acc += g * g;
    }
    acc.sqrt()
}

fn mutual_information_f64(c: &[f64; 4]) -> f64 {
    let ex = entropy(&[c[0] + c[1], c[2] + c[3]]).unwrap_or(f64::NAN);
    let ey = entropy(&[c[0] + c[2], c[1] + c[3]]).unwrap_or(f64::NAN);
    let exy = entropy(c).unwrap_or(f64::NAN);
    ex + ey - exy
}

fn joint_minus_x_entropy_f64(c: &[f64; 4]) -> f64 {
    let ex = entropy(&[c[0] + c[1], c[2] + c[3]]).unwrap_or(f64::NAN);
    let exy = entropy(c).unwrap_or(f64::NAN);
    exy - ex
}

fn correlation_f64(c: &[f64; 4]) -> f64 {
    let ex = c[2] + c[3];
    let ey = c[1] + c[3];
    let cov = c[3] - ex * ey;
    let vx = ex * (1.0 - ex);
    let vy = ey * (1.0 - ey);
    cov / (vx * vy).sqrt()
}

/// A symbolic row: a quantity on the free space and on the constrained
/// space, the expected constrained gradient (`None` means identically
/// zero), and the closed limit form to match at each locus point.
struct SymRow {
    label: &'static str,
    num: Poly,
    den: Option<Poly>,
    cnum: Poly,
    cden: Option<Poly>,
    cexpect: Option<Vec<Poly>>,
    form: String,
    limit: Box<dyn Fn(&[Rat]) -> Vec<Rat>>,
}

fn run_sym_rows(
    urs: &ResolvedSpace,
    crs: &ResolvedSpace,
    pts: &[Vec<Rat>],
    rows: Vec<SymRow>,
) -> Vec<GradientRow> {
    rows.into_iter()
        .map(|row| {
            let constrained_ok = match &row.cexpect {
                None => ratio_gradient_is_zero(crs, &row.cnum, row.cden.as_ref()),
                Some(expected) => {
                    row.cden.is_none() && crs.gradient(&row.cnum) == *expected
                }
            };
            let limit_ok = pts.iter().all(|pt| {
                exact_gradient(urs, &row.num, row.den.as_ref(), pt) == (row.limit)(pt)
            });
            GradientRow {
                label: row.label.to_string(),
                constrained_form: if row.cexpect.is_some() {
                    "(1)".to_string()
                } else {
                    "0".to_string()
                },
                constrained_ok,
                limit_form: row.form,
                limit_ok,
            }
        })
        .collect()
}

/// Re-derive the tangent-space table for one space and regime.
///
/// Constrained entries are polynomial identities on the constrained space;
/// limit entries are exact rational gradients on the free space at points
/// of the constraint locus, compared to their closed forms.  The entropy
/// and correlation rows, whose limit forms are not rational functions, are
/// checked numerically just off the locus, where their gradients stay
/// bounded away from zero (divergently so in the correlated regime).
pub fn gradient_relation_suite(
    space: SpaceKind,
    regime: CorrelationRegime,
) -> GradientReport {
    let rows = match regime {
        CorrelationRegime::Correlated => correlated_rows(space),
        CorrelationRegime::Independent => independent_rows(space),
    };
    GradientReport { space, regime, points: 20, rows }
}

fn correlated_rows(space: SpaceKind) -> Vec<GradientRow> {
    let one = || Some(vec![Poly::one()]);
    match space {
        SpaceKind::Behavioural => {
            let sp = behavioural_pair_space();
            let urs = sp.resolve(&ConstraintSet::new()).expect("free pair");
            let crs = sp
                .resolve(&ConstraintSet::new().fix("q", rint(0)).fix("r", rint(1)))
                .expect("aligned pair");
            let u = PairStats::from(&urs);
            let c = PairStats::from(&crs);
            let pts: Vec<Vec<Rat>> =
                (1..=20).map(|k| vec![crate::rat(k, 21), rint(0), rint(1)]).collect();
            // Shorthands: pt = (p, q, r), locus q = 0, r = 1.
            let p = |pt: &[Rat]| pt[0].clone();
            let z = Rat::zero;
            let mut rows = run_sym_rows(
                &urs,
                &crs,
                &pts,
                vec![
                    SymRow {
                        label: "P00 + P11",
                        num: u.cell(0, 0) + u.cell(1, 1),
                        den: None,
                        cnum: c.cell(0, 0) + c.cell(1, 1),
                        cden: None,
                        cexpect: None,
                        form: "(0, -(1-p), p)".into(),
                        limit: Box::new(move |pt| {
                            vec![z(), &p(pt) - &Rat::one(), p(pt)]
                        }),
                    },
                    SymRow {
                        label: "P01 + P10",
                        num: u.cell(0, 1) + u.cell(1, 0),
                        den: None,
                        cnum: c.cell(0, 1) + c.cell(1, 0),
                        cden: None,
                        cexpect: None,
                        form: "(0, 1-p, -p)".into(),
                        limit: Box::new(move |pt| {
                            vec![z(), &Rat::one() - &p(pt), -p(pt)]
                        }),
                    },
                    SymRow {
                        label: "P(x=0|y=0)",
                        num: u.cell(0, 0).clone(),
                        den: Some(u.py(0)),
                        cnum: c.cell(0, 0).clone(),
                        cden: Some(c.py(0)),
                        cexpect: None,
                        form: "(0, 0, p/(1-p))".into(),
                        limit: Box::new(move |pt| {
                            vec![z(), z(), &p(pt) / &(&Rat::one() - &p(pt))]
                        }),
                    },
                    SymRow {
                        label: "P(x=0|y=1)",
                        num: u.cell(0, 1).clone(),
                        den: Some(u.py(1)),
                        cnum: c.cell(0, 1).clone(),
                        cden: Some(c.py(1)),
                        cexpect: None,
                        form: "(0, (1-p)/p, 0)".into(),
                        limit: Box::new(move |pt| {
                            vec![z(), &(&Rat::one() - &p(pt)) / &p(pt), z()]
                        }),
                    },
                    SymRow {
                        label: "<x>",
                        num: u.ex(),
                        den: None,
                        cnum: c.ex(),
                        cden: None,
                        cexpect: one(),
                        form: "(1, 0, 0)".into(),
                        limit: Box::new(move |_| vec![Rat::one(), z(), z()]),
                    },
                    SymRow {
                        label: "<y>",
                        num: u.ey(),
                        den: None,
                        cnum: c.ey(),
                        cden: None,
                        cexpect: one(),
                        form: "(1, 1-p, p)".into(),
                        limit: Box::new(move |pt| {
                            vec![Rat::one(), &Rat::one() - &p(pt), p(pt)]
                        }),
                    },
                    SymRow {
                        label: "<xy>",
                        num: u.exy(),
                        den: None,
                        cnum: c.exy(),
                        cden: None,
                        cexpect: one(),
                        form: "(1, 0, p)".into(),
                        limit: Box::new(move |pt| vec![Rat::one(), z(), p(pt)]),
                    },
                    SymRow {
                        label: "V(x)+V(y)-2cov",
                        num: u.variance_combo(),
                        den: None,
                        cnum: c.variance_combo(),
                        cden: None,
                        cexpect: None,
                        form: "(0, 1-p, -p)".into(),
                        limit: Box::new(move |pt| {
                            vec![z(), &Rat::one() - &p(pt), -p(pt)]
                        }),
                    },
                ],
            );
            let near = vec![0.37, 0.001, 0.999];
            rows.push(corr_entropy_row(&c, &near, behavioural_cells_f64));
            rows.push(corr_rho_row(&c, &near, behavioural_cells_f64));
            rows
        }
        SpaceKind::Mixed => {
            let sp = mixed_pair_space();
            let urs = sp.resolve(&ConstraintSet::new()).expect("free pair");
            let crs = sp
                .resolve(&ConstraintSet::new().fix("b1", rint(1)))
                .expect("aligned pair");
            let u = PairStats::from(&urs);
            let c = PairStats::from(&crs);
            // Free order (a, b1, b2, b3); locus b1 = 1.
            let pts: Vec<Vec<Rat>> = (1..=20)
                .map(|k| vec![crate::rat(k, 21), rint(1), rint(0), rint(0)])
                .collect();
            let a = |pt: &[Rat]| pt[0].clone();
            let z = Rat::zero;
            let mut rows = run_sym_rows(
                &urs,
                &crs,
                &pts,
                vec![
                    SymRow {
                        label: "P00 + P11",
                        num: u.cell(0, 0) + u.cell(1, 1),
                        den: None,
                        cnum: c.cell(0, 0) + c.cell(1, 1),
                        cden: None,
                        cexpect: None,
                        form: "(0, a, -(1-a), 2a-1)".into(),
                        limit: Box::new(move |pt| {
                            vec![
                                z(),
                                a(pt),
                                &a(pt) - &Rat::one(),
                                &(&a(pt) * &rint(2)) - &Rat::one(),
                            ]
                        }),
                    },
                    SymRow {
                        label: "P01 + P10",
                        num: u.cell(0, 1) + u.cell(1, 0),
                        den: None,
                        cnum: c.cell(0, 1) + c.cell(1, 0),
                        cden: None,
                        cexpect: None,
                        form: "(0, -a, 1-a, 1-2a)".into(),
                        limit: Box::new(move |pt| {
                            vec![
                                z(),
                                -a(pt),
                                &Rat::one() - &a(pt),
                                &Rat::one() - &(&a(pt) * &rint(2)),
                            ]
                        }),
                    },
                    SymRow {
                        label: "P(x=0|y=0)",
                        num: u.cell(0, 0).clone(),
                        den: Some(u.py(0)),
                        cnum: c.cell(0, 0).clone(),
                        cden: Some(c.py(0)),
                        cexpect: None,
                        form: "(0, a/(1-a), 0, a/(1-a))".into(),
                        limit: Box::new(move |pt| {
                            let g = &a(pt) / &(&Rat::one() - &a(pt));
                            vec![z(), g.clone(), z(), g]
                        }),
                    },
                    SymRow {
                        label: "P(x=0|y=1)",
                        num: u.cell(0, 1).clone(),
                        den: Some(u.py(1)),
                        cnum: c.cell(0, 1).clone(),
                        cden: Some(c.py(1)),
                        cexpect: None,
                        form: "(0, 0, (1-a)/a, (1-a)/a)".into(),
                        limit: Box::new(move |pt| {
                            let g = &(&Rat::one() - &a(pt)) / &a(pt);
                            vec![z(), z(), g.clone(), g]
                        }),
                    },
                    SymRow {
                        label: "<x>",
                        num: u.ex(),
                        den: None,
                        cnum: c.ex(),
                        cden: None,
                        cexpect: one(),
                        form: "(1, 0, 0, 0)".into(),
                        limit: Box::new(move |_| vec![Rat::one(), z(), z(), z()]),
                    },
                    SymRow {
                        label: "<y>",
                        num: u.ey(),
                        den: None,
                        cnum: c.ey(),
                        cden: None,
                        cexpect: one(),
                        form: "(1, a, 1-a, 1)".into(),
                        limit: Box::new(move |pt| {
                            vec![Rat::one(), a(pt), &Rat::one() - &a(pt), Rat::one()]
                        }),
                    },
                    SymRow {
                        label: "<xy>",
                        num: u.exy(),
                        den: None,
                        cnum: c.exy(),
                        cden: None,
                        cexpect: one(),
                        form: "(1, a, 0, a)".into(),
                        limit: Box::new(move |pt| {
                            vec![Rat::one(), a(pt), z(), a(pt)]
                        }),
                    },
                    SymRow {
                        label: "V(x)+V(y)-2cov",
                        num: u.variance_combo(),
                        den: None,
                        cnum: c.variance_combo(),
                        cden: None,
                        cexpect: None,
                        form: "(0, -a, 1-a, 1-2a)".into(),
                        limit: Box::new(move |pt| {
                            vec![
                                z(),
                                -a(pt),
                                &Rat::one() - &a(pt),
                                &Rat::one() - &(&a(pt) * &rint(2)),
                            ]
                        }),
                    },
                ],
            );
            let near = vec![0.37, 0.997, 0.0015, 0.0015];
            rows.push(corr_entropy_row(&c, &near, mixed_cells_f64));
            rows.push(corr_rho_row(&c, &near, mixed_cells_f64));
            rows
        }
    }
}

fn behavioural_cells_f64(pt: &[f64]) -> [f64; 4] {
    let (p, q, r) = (pt[0], pt[1], pt[2]);
    [(1.0 - p) * (1.0 - q), (1.0 - p) * q, p * (1.0 - r), p * r]
}

fn mixed_cells_f64(pt: &[f64]) -> [f64; 4] {
    let (a, b1, b2, b3) = (pt[0], pt[1], pt[2], pt[3]);
    [
        (1.0 - a) * (1.0 - b2 - b3),
        (1.0 - a) * (b2 + b3),
        a * (1.0 - b1 - b3),
        a * (b1 + b3),
    ]
}

/// Correlated-regime entropy row: on the constrained space the nonzero
/// cells are exactly the first marginal's cells, so `E(x,y) − E(x)` is
/// identically zero; off the locus the free-space gradient diverges, so
/// its finite-difference norm near the locus stays large.
fn corr_entropy_row(
    c: &PairStats,
    near: &[f64],
    cells: impl Fn(&[f64]) -> [f64; 4],
) -> GradientRow {
    let nonzero: Vec<Poly> = c.c.iter().filter(|p| !p.is_zero()).cloned().collect();
    let marginals = vec![c.px(0), c.px(1)];
    let constrained_ok = same_multiset(&nonzero, &marginals);
    let f = |pt: &[f64]| joint_minus_x_entropy_f64(&cells(pt));
    let limit_ok = fd_gradient_norm(&f, near) > 0.1;
    GradientRow {
        label: "E(x,y) - E(x)".into(),
        constrained_form: "0".into(),
        constrained_ok,
        limit_form: "divergent near the locus".into(),
        limit_ok,
    }
}

fn corr_rho_row(
    c: &PairStats,
    near: &[f64],
    cells: impl Fn(&[f64]) -> [f64; 4],
) -> GradientRow {
    let constrained_ok = c.cell(0, 1).is_zero() && c.cell(1, 0).is_zero();
    let f = |pt: &[f64]| correlation_f64(&cells(pt));
    let limit_ok = fd_gradient_norm(&f, near) > 0.05;
    GradientRow {
        label: "rho(x,y)".into(),
        constrained_form: "1 identically".into(),
        constrained_ok,
        limit_form: "steep near the locus".into(),
        limit_ok,
    }
}

fn independent_rows(space: SpaceKind) -> Vec<GradientRow> {
    match space {
        SpaceKind::Behavioural => {
            let sp = behavioural_pair_space();
            let urs = sp.resolve(&ConstraintSet::new()).expect("free pair");
            let crs =
                sp.resolve(&ConstraintSet::new().tie("q", "r")).expect("independent pair");
            let u = PairStats::from(&urs);
            let c = PairStats::from(&crs);
            let pts: Vec<Vec<Rat>> = (1..=20)
                .map(|k| {
                    let q = crate::rat(2 * k + 1, 50);
                    vec![crate::rat(k, 21), q.clone(), q]
                })
                .collect();
            let z = Rat::zero;
            // pp1 = p(1−p) at the point.
            let pp = |pt: &[Rat]| &pt[0] * &(&Rat::one() - &pt[0]);
            let mut rows = run_sym_rows(
                &urs,
                &crs,
                &pts,
                vec![
                    SymRow {
                        label: "P00 - Px(0)Py(0)",
                        num: &u.cell(0, 0).clone() - &(&u.px(0) * &u.py(0)),
                        den: None,
                        cnum: &c.cell(0, 0).clone() - &(&c.px(0) * &c.py(0)),
                        cden: None,
                        cexpect: None,
                        form: "p(1-p) (0, -1, 1)".into(),
                        limit: Box::new(move |pt| vec![z(), -pp(pt), pp(pt)]),
                    },
                    SymRow {
                        label: "P11 - Px(1)Py(1)",
                        num: &u.cell(1, 1).clone() - &(&u.px(1) * &u.py(1)),
                        den: None,
                        cnum: &c.cell(1, 1).clone() - &(&c.px(1) * &c.py(1)),
                        cden: None,
                        cexpect: None,
                        form: "p(1-p) (0, -1, 1)".into(),
                        limit: Box::new(move |pt| vec![z(), -pp(pt), pp(pt)]),
                    },
                    SymRow {
                        label: "P01 - Px(0)Py(1)",
                        num: &u.cell(0, 1).clone() - &(&u.px(0) * &u.py(1)),
                        den: None,
                        cnum: &c.cell(0, 1).clone() - &(&c.px(0) * &c.py(1)),
                        cden: None,
                        cexpect: None,
                        form: "p(1-p) (0, 1, -1)".into(),
                        limit: Box::new(move |pt| vec![z(), pp(pt), -pp(pt)]),
                    },
                    SymRow {
                        label: "P10 - Px(1)Py(0)",
                        num: &u.cell(1, 0).clone() - &(&u.px(1) * &u.py(0)),
                        den: None,
                        cnum: &c.cell(1, 0).clone() - &(&c.px(1) * &c.py(0)),
                        cden: None,
                        cexpect: None,
                        form: "p(1-p) (0, 1, -1)".into(),
                        limit: Box::new(move |pt| vec![z(), pp(pt), -pp(pt)]),
                    },
                    SymRow {
                        label: "P(x=0|y=0) - Px(0)",
                        num: &u.cell(0, 0).clone() - &(&u.px(0) * &u.py(0)),
                        den: Some(u.py(0)),
                        cnum: &c.cell(0, 0).clone() - &(&c.px(0) * &c.py(0)),
                        cden: Some(c.py(0)),
                        cexpect: None,
                        form: "p(1-p)/(1-q) (0, -1, 1)".into(),
                        limit: Box::new(move |pt| {
                            let s = &pp(pt) / &(&Rat::one() - &pt[1]);
                            vec![z(), -s.clone(), s]
                        }),
                    },
                    SymRow {
                        label: "P(x=0|y=1) - Px(0)",
                        num: &u.cell(0, 1).clone() - &(&u.px(0) * &u.py(1)),
                        den: Some(u.py(1)),
                        cnum: &c.cell(0, 1).clone() - &(&c.px(0) * &c.py(1)),
                        cden: Some(c.py(1)),
                        cexpect: None,
                        form: "p(1-p)/q (0, 1, -1)".into(),
                        limit: Box::new(move |pt| {
                            let s = &pp(pt) / &pt[1];
                            vec![z(), s.clone(), -s]
                        }),
                    },
                    SymRow {
                        label: "<xy> - <x><y>",
                        num: u.cov(),
                        den: None,
                        cnum: c.cov(),
                        cden: None,
                        cexpect: None,
                        form: "p(1-p) (0, -1, 1)".into(),
                        limit: Box::new(move |pt| vec![z(), -pp(pt), pp(pt)]),
                    },
                ],
            );
            let near = vec![0.37, 0.25, 0.35];
            rows.push(indep_entropy_row(&c, &near, behavioural_cells_f64));
            rows.push(indep_rho_row(&c, &near, behavioural_cells_f64));
            rows
        }
        SpaceKind::Mixed => {
            let sp = mixed_pair_space();
            let urs = sp.resolve(&ConstraintSet::new()).expect("free pair");
            let crs = sp
                .resolve(&ConstraintSet::new().tie("b1", "b2"))
                .expect("independent pair");
            let u = PairStats::from(&urs);
            let c = PairStats::from(&crs);
            let pts: Vec<Vec<Rat>> = (1..=20)
                .map(|k| {
                    let b = crate::rat(k, 61);
                    vec![crate::rat(k, 21), b.clone(), b, crate::rat(k + 1, 67)]
                })
                .collect();
            let z = Rat::zero;
            let aa = |pt: &[Rat]| &pt[0] * &(&Rat::one() - &pt[0]);
            let mut rows = run_sym_rows(
                &urs,
                &crs,
                &pts,
                vec![
                    SymRow {
                        label: "P00 - Px(0)Py(0)",
                        num: &u.cell(0, 0).clone() - &(&u.px(0) * &u.py(0)),
                        den: None,
                        cnum: &c.cell(0, 0).clone() - &(&c.px(0) * &c.py(0)),
                        cden: None,
                        cexpect: None,
                        form: "a(1-a) (0, 1, -1, 0)".into(),
                        limit: Box::new(move |pt| vec![z(), aa(pt), -aa(pt), z()]),
                    },
                    SymRow {
                        label: "P11 - Px(1)Py(1)",
                        num: &u.cell(1, 1).clone() - &(&u.px(1) * &u.py(1)),
                        den: None,
                        cnum: &c.cell(1, 1).clone() - &(&c.px(1) * &c.py(1)),
                        cden: None,
                        cexpect: None,
                        form: "a(1-a) (0, 1, -1, 0)".into(),
                        limit: Box::new(move |pt| vec![z(), aa(pt), -aa(pt), z()]),
                    },
                    SymRow {
                        label: "P01 - Px(0)Py(1)",
                        num: &u.cell(0, 1).clone() - &(&u.px(0) * &u.py(1)),
                        den: None,
                        cnum: &c.cell(0, 1).clone() - &(&c.px(0) * &c.py(1)),
                        cden: None,
                        cexpect: None,
                        form: "a(1-a) (0, -1, 1, 0)".into(),
                        limit: Box::new(move |pt| vec![z(), -aa(pt), aa(pt), z()]),
                    },
                    SymRow {
                        label: "P10 - Px(1)Py(0)",
                        num: &u.cell(1, 0).clone() - &(&u.px(1) * &u.py(0)),
                        den: None,
                        cnum: &c.cell(1, 0).clone() - &(&c.px(1) * &c.py(0)),
                        cden: None,
                        cexpect: None,
                        form: "a(1-a) (0, -1, 1, 0)".into(),
                        limit: Box::new(move |pt| vec![z(), -aa(pt), aa(pt), z()]),
                    },
                    SymRow {
                        label: "P(x=0|y=0) - Px(0)",
                        num: &u.cell(0, 0).clone() - &(&u.px(0) * &u.py(0)),
                        den: Some(u.py(0)),
                        cnum: &c.cell(0, 0).clone() - &(&c.px(0) * &c.py(0)),
                        cden: Some(c.py(0)),
                        cexpect: None,
                        form: "a(1-a)/(1-b1-b3) (0, 1, -1, 0)".into(),
                        limit: Box::new(move |pt| {
                            let den = &(&Rat::one() - &pt[1]) - &pt[3];
                            let s = &aa(pt) / &den;
                            vec![z(), s.clone(), -s, z()]
                        }),
                    },
                    SymRow {
                        label: "P(x=0|y=1) - Px(0)",
                        num: &u.cell(0, 1).clone() - &(&u.px(0) * &u.py(1)),
                        den: Some(u.py(1)),
                        cnum: &c.cell(0, 1).clone() - &(&c.px(0) * &c.py(1)),
                        cden: Some(c.py(1)),
                        cexpect: None,
                        form: "a(1-a)/(b1+b3) (0, -1, 1, 0)".into(),
                        limit: Box::new(move |pt| {
                            let den = &pt[1] + &pt[3];
                            let s = &aa(pt) / &den;
                            vec![z(), -s.clone(), s, z()]
                        }),
                    },
                    SymRow {
                        label: "<xy> - <x><y>",
                        num: u.cov(),
                        den: None,
                        cnum: c.cov(),
                        cden: None,
                        cexpect: None,
                        form: "a(1-a) (0, 1, -1, 0)".into(),
                        limit: Box::new(move |pt| vec![z(), aa(pt), -aa(pt), z()]),
                    },
                ],
            );
            let near = vec![0.37, 0.25, 0.35, 0.2];
            rows.push(indep_entropy_row(&c, &near, mixed_cells_f64));
            rows.push(indep_rho_row(&c, &near, mixed_cells_f64));
            rows
        }
    }
}

/// Independent-regime entropy row: the constrained cells factorise into
/// marginal products, so `E(x,y) − E(x) − E(y)` vanishes identically; on
/// the free space its gradient is nonzero anywhere off the locus (on the
/// locus itself the mutual information sits at its interior minimum).
fn indep_entropy_row(
    c: &PairStats,
    near: &[f64],
    cells: impl Fn(&[f64]) -> [f64; 4],
) -> GradientRow {
    let constrained_ok =
        (0..2u8).all(|vx| (0..2u8).all(|vy| *c.cell(vx, vy) == &c.px(vx) * &c.py(vy)));
    let f = |pt: &[f64]| mutual_information_f64(&cells(pt));
    let limit_ok = fd_gradient_norm(&f, near) > 1e-4;
    GradientRow {
        label: "E(x,y) - E(x) - E(y)".into(),
        constrained_form: "0 (cells factorise)".into(),
        constrained_ok,
        limit_form: "nonzero off the locus".into(),
        limit_ok,
    }
}

fn indep_rho_row(
    c: &PairStats,
    near: &[f64],
    cells: impl Fn(&[f64]) -> [f64; 4],
) -> GradientRow {
    let constrained_ok = c.cov().is_zero();
    let f = |pt: &[f64]| correlation_f64(&cells(pt));
    let limit_ok = fd_gradient_norm(&f, near) > 1e-3;
    GradientRow {
        label: "rho(x,y)".into(),
        constrained_form: "0 identically".into(),
        constrained_ok,
        limit_form: "nonzero off the locus".into(),
        limit_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamemodel::GameBuilder;
    use crate::rat;

    /// `c0 + cx·x + cy·y + cxy·xy` over two binary moves.
    fn lin(c0: i64, cx: i64, cy: i64, cxy: i64, x: usize, y: usize) -> Poly {
        let vx = Poly::move_value(x, 1, &[0, 1]);
        let vy = Poly::move_value(y, 1, &[0, 1]);
        &(&(&Poly::int(c0) + &vx.scale(&rint(cx))) + &vy.scale(&rint(cy)))
            + &(&vx * &vy).scale(&rint(cxy))
    }

    fn twostage() -> GameDefinition {
        let mut b = GameBuilder::new("twostage", &["X", "Y"]);
        let x = b.binary_move("x", 0, 0);
        let y = b.binary_move("y", 1, 1);
        b.names(x, &[], &["p", "p0"]);
        b.names(y, &[(x, 0)], &["q", "q0"]);
        b.names(y, &[(x, 1)], &["r", "r0"]);
        b.payoff(0, lin(3, -2, -1, 4, x, y));
        b.payoff(1, lin(1, 3, 1, -2, x, y));
        b.build()
    }

    fn chainstore() -> GameDefinition {
        let mut b = GameBuilder::new("chainstore", &["X", "Y"]);
        let x = b.binary_move("x", 0, 0);
        let y = b.binary_move("y", 1, 1);
        b.condition(y, vec![(x, 1)]);
        b.names(x, &[], &["p", "p0"]);
        b.names(y, &[(x, 1)], &["q", "q0"]);
        b.payoff(0, lin(0, 1, 0, -2, x, y));
        b.payoff(1, lin(1, -1, 0, -1, x, y));
        b.build()
    }

    fn aumann() -> GameDefinition {
        let mut b = GameBuilder::new("aumann", &["X", "Y"]);
        let x = b.binary_move("x", 0, 0);
        let y = b.binary_move("y", 1, 0);
        b.names(x, &[], &["p", "p0"]);
        b.names(y, &[], &["q", "q0"]);
        b.payoff(0, lin(6, 1, -4, -3, x, y));
        b.payoff(1, lin(6, -4, 1, -3, x, y));
        b.build()
    }

    fn pennies() -> GameDefinition {
        let mut b = GameBuilder::new("pennies", &["X", "Y"]);
        let x = b.binary_move("x", 0, 0);
        let y = b.binary_move("y", 1, 0);
        b.names(x, &[], &["p", "p0"]);
        b.names(y, &[], &["q", "q0"]);
        b.payoff(0, lin(0, 1, 1, -2, x, y));
        b.payoff(1, lin(1, -1, -1, 2, x, y));
        b.build()
    }

    fn free_spec() -> SpaceSpec {
        SpaceSpec { label: "free".into(), ..SpaceSpec::default() }
    }

    fn fix_spec(fixes: &[(&str, Rat)]) -> SpaceSpec {
        SpaceSpec {
            label: "fixed".into(),
            fixes: fixes.iter().map(|(n, v)| (n.to_string(), v.clone())).collect(),
            ..SpaceSpec::default()
        }
    }

    fn rho_spec(rho: f64) -> SpaceSpec {
        SpaceSpec {
            label: format!("rho={rho}"),
            correlation: Some(("x".into(), "y".into(), rho)),
            ..SpaceSpec::default()
        }
    }

    fn pt(pairs: &[(&str, Rat)]) -> Vec<(String, Rat)> {
        pairs.iter().map(|(n, v)| (n.to_string(), v.clone())).collect()
    }

    #[test]
    fn twostage_free_backwards_induction() {
        let g = twostage();
        let eq = backwards_induction(&g, &free_spec()).unwrap();
        assert_eq!(eq.point, pt(&[("p", rint(0)), ("q", rint(1)), ("r", rint(0))]));
        assert_eq!(eq.payoffs, vec![rint(2), rint(2)]);
        assert_eq!(eq.kind, EquilibriumKind::Pure);
        assert_eq!(eq.pure_profile, Some(vec![0, 1]));
    }

    #[test]
    fn twostage_aligned_copies_the_first_move() {
        let g = twostage();
        let eq = backwards_induction(&g, &rho_spec(1.0)).unwrap();
        assert_eq!(eq.point, pt(&[("p", rint(1))]));
        assert_eq!(eq.payoffs, vec![rint(4), rint(3)]);
        assert_eq!(eq.pure_profile, Some(vec![1, 1]));
    }

    #[test]
    fn twostage_anti_aligned() {
        let g = twostage();
        let eq = backwards_induction(&g, &rho_spec(-1.0)).unwrap();
        assert_eq!(eq.point, pt(&[("p", rint(0))]));
        assert_eq!(eq.payoffs, vec![rint(2), rint(2)]);
    }

    #[test]
    fn twostage_independent_is_interior_mixed() {
        let g = twostage();
        let all = solve_all(&g, &rho_spec(0.0)).unwrap();
        assert_eq!(all.len(), 1);
        let eq = &all[0];
        assert_eq!(eq.kind, EquilibriumKind::Mixed);
        assert_eq!(eq.point, pt(&[("p", rat(1, 2)), ("q", rat(1, 2))]));
        assert_eq!(eq.payoffs, vec![rat(5, 2), rat(5, 2)]);
        assert_eq!(eq.pure_profile, None);
    }

    #[test]
    fn chainstore_free_and_deterred() {
        let g = chainstore();
        let eq = backwards_induction(&g, &free_spec()).unwrap();
        assert_eq!(eq.point, pt(&[("p", rint(1)), ("q", rint(0))]));
        assert_eq!(eq.payoffs, vec![rint(1), rint(0)]);

        let deterred = backwards_induction(&g, &fix_spec(&[("q", rint(1))])).unwrap();
        assert_eq!(deterred.point, pt(&[("p", rint(0))]));
        assert_eq!(deterred.payoffs, vec![rint(0), rint(1)]);
        assert_eq!(deterred.pure_profile, Some(vec![0, 0]));
    }

    #[test]
    fn aumann_simultaneous_pure_pair() {
        let g = aumann();
        let all = backwards_induction_all(&g, &free_spec()).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].point, pt(&[("p", rint(0)), ("q", rint(1))]));
        assert_eq!(all[0].payoffs, vec![rint(2), rint(7)]);
        assert_eq!(all[1].point, pt(&[("p", rint(1)), ("q", rint(0))]));
        assert_eq!(all[1].payoffs, vec![rint(7), rint(2)]);
    }

    #[test]
    fn aumann_best_response_adds_the_interior_point() {
        let g = aumann();
        let all = best_response_equilibria(&g, &free_spec()).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[0].payoffs, vec![rint(2), rint(7)]);
        assert_eq!(all[1].payoffs, vec![rint(7), rint(2)]);
        assert_eq!(all[2].kind, EquilibriumKind::Mixed);
        assert_eq!(all[2].point, pt(&[("p", rat(1, 3)), ("q", rat(1, 3))]));
        assert_eq!(all[2].payoffs, vec![rat(14, 3), rat(14, 3)]);
    }

    #[test]
    fn pennies_has_only_the_mixed_point() {
        let g = pennies();
        let all = solve_all(&g, &free_spec()).unwrap();
        assert_eq!(all.len(), 1);
        let eq = &all[0];
        assert_eq!(eq.kind, EquilibriumKind::Mixed);
        assert_eq!(eq.point, pt(&[("p", rat(1, 2)), ("q", rat(1, 2))]));
        assert_eq!(eq.payoffs, vec![rat(1, 2), rat(1, 2)]);
    }

    #[test]
    fn constant_payoffs_are_indifferent() {
        let mut b = GameBuilder::new("flat", &["X", "Y"]);
        let x = b.binary_move("x", 0, 0);
        b.names(x, &[], &["p", "p0"]);
        b.payoff(0, Poly::int(5));
        b.payoff(1, Poly::int(5));
        let g = b.build();
        let eq = backwards_induction(&g, &free_spec()).unwrap();
        assert_eq!(eq.kind, EquilibriumKind::Indifferent);
        assert_eq!(eq.point, pt(&[("p", rint(0))]));

        let preferred = SpaceSpec {
            label: "prefer 1".into(),
            prefer: vec![("x".into(), 1)],
            ..SpaceSpec::default()
        };
        let eq = backwards_induction(&g, &preferred).unwrap();
        assert_eq!(eq.point, pt(&[("p", rint(1))]));

        let corners = best_response_equilibria(&g, &free_spec()).unwrap();
        assert_eq!(corners.len(), 2);
        assert!(corners.iter().all(|e| e.kind == EquilibriumKind::Indifferent));
    }

    #[test]
    fn three_free_players_are_rejected() {
        let mut b = GameBuilder::new("triple", &["X", "Y", "Z"]);
        let x = b.binary_move("x", 0, 0);
        let y = b.binary_move("y", 1, 0);
        let z = b.binary_move("z", 2, 0);
        b.payoff(0, &lin(0, 1, 1, 0, x, y) + &Poly::move_value(z, 1, &[0, 1]));
        b.payoff(1, lin(0, 1, -1, 2, y, z));
        b.payoff(2, lin(1, -1, 1, 0, z, x));
        let g = b.build();
        match solve_all(&g, &free_spec()) {
            Err(Error::UnsupportedShape(_)) => {}
            other => panic!("expected an unsupported-shape error, got {other:?}"),
        }
    }

    #[test]
    fn fractional_correlation_target_is_rejected() {
        let g = twostage();
        match solve_all(&g, &rho_spec(0.5)) {
            Err(Error::UnsupportedConstraint(_)) => {}
            other => panic!("expected an unsupported-constraint error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_family_is_reported() {
        let g = twostage();
        match enumerate_spaces(&g, "no-such-family") {
            Err(Error::UnknownFamily(_)) => {}
            other => panic!("expected an unknown-family error, got {other:?}"),
        }
    }

    #[test]
    fn box_maximize_finds_an_off_grid_peak() {
        let f = |pt: &[f64]| {
            -(pt[0] - 1.0 / 3.0).powi(2) - (pt[1] - 0.7).powi(2)
        };
        let (point, value) =
            numeric_box_maximize(f, &[(0.0, 1.0), (0.0, 1.0)], None, 201).unwrap();
        assert!((point[0] - 1.0 / 3.0).abs() < 1e-6);
        assert!((point[1] - 0.7).abs() < 1e-6);
        assert!(value > -1e-10);
    }

    #[test]
    fn box_maximize_reports_an_empty_feasible_set() {
        let never = |_: &[f64]| false;
        match numeric_box_maximize(|p: &[f64]| p[0], &[(0.0, 1.0)], Some(&never), 11) {
            Err(Error::EmptyFeasibleSet) => {}
            other => panic!("expected an empty feasible set, got {other:?}"),
        }
    }

    #[test]
    fn surface_points_respect_the_correlation() {
        assert_eq!(correlation_surface_point(0.0, 0.3, 0.8), Some([0.3, 0.8, 0.8]));
        assert!(correlation_surface_point(1.0, 0.4, 0.5).is_none());
        let aligned = correlation_surface_point(1.0, 0.4, 0.0).unwrap();
        assert!((aligned[2] - 1.0).abs() < 1e-9);
        let anti = correlation_surface_point(-1.0, 0.4, 1.0).unwrap();
        assert!(anti[2].abs() < 1e-9);
    }

    #[test]
    fn decision_tree_payoff_over_the_surface() {
        let p = Poly::param(0);
        let q = Poly::param(1);
        let r = Poly::param(2);
        let obj = &(&(&p.scale(&rint(2)) + &q.scale(&rint(3))) - &(&p * &q).scale(&rint(3)))
            - &(&p * &r);

        let (point, value) = correlated_payoff_maximum(&obj, 1.0, 201).unwrap();
        assert!((value - 1.0).abs() < 2e-4);
        assert!((point[0] - 1.0).abs() < 2e-3);

        let (point, value) = correlated_payoff_maximum(&obj, -0.5, 201).unwrap();
        assert!((value - 3.0).abs() < 2e-4);
        assert!(point[0] < 2e-3 && (point[1] - 1.0).abs() < 2e-3);

        let (point, value) = correlated_payoff_maximum(&obj, 0.25, 201).unwrap();
        assert!((value - 2.02693).abs() < 2e-4);
        assert!((point[0] - 0.2590).abs() < 2e-3);
        assert!((point[1] - 0.7953).abs() < 2e-3);
    }

    #[test]
    fn entropy_ceiling_endpoints() {
        let ln2 = std::f64::consts::LN_2;
        assert!((entropy_max_under_rho(0.0) - 2.0 * ln2).abs() < 1e-6);
        assert!((entropy_max_under_rho(1.0) - ln2).abs() < 1e-6);
        assert!((entropy_max_under_rho(-1.0) - ln2).abs() < 1e-6);
        let (argmax, _) = entropy_max_under_rho_argmax(0.0);
        assert!((argmax[0] - 0.5).abs() < 1e-6 && (argmax[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn conservation_objective_values() {
        let g = twostage();
        assert_eq!(nonpolylinear_objective(&g, &free_spec(), &[0.0, 0.0, 0.0]).unwrap(), -1.0);

        let obj = NonpolylinearObjective::new(&g, &rho_spec(1.0)).unwrap();
        assert_eq!(obj.dim(), 1);
        for k in 0..=10 {
            assert_eq!(obj.value(&[k as f64 / 10.0]), 1.0);
        }

        let free = NonpolylinearObjective::new(&g, &free_spec()).unwrap();
        let (point, value) = numeric_box_maximize(
            |pt: &[f64]| free.value(pt),
            &[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
            None,
            101,
        )
        .unwrap();
        assert!((value - 0.5).abs() < 1e-6);
        assert!((point[0] - 0.5).abs() < 1e-6);
        assert!((point[1] + point[2] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gradient_suite_holds_in_all_four_arms() {
        for space in [SpaceKind::Behavioural, SpaceKind::Mixed] {
            for regime in [CorrelationRegime::Correlated, CorrelationRegime::Independent] {
                let report = gradient_relation_suite(space, regime);
                assert!(report.all_ok(), "{report}");
            }
        }
    }

    #[test]
    fn monte_carlo_tracks_the_exact_expectation() {
        let g = twostage();
        let half = [rat(1, 2), rat(1, 2), rat(1, 2)];
        let stats = monte_carlo_verify(&g, &free_spec(), &half, 20_000, 7).unwrap();
        for &(mean, stderr) in &stats {
            assert!(stderr > 0.0);
            assert!((mean - 2.5).abs() <= 4.0 * stderr, "mean {mean} stderr {stderr}");
        }
        let again = monte_carlo_verify(&g, &free_spec(), &half, 20_000, 7).unwrap();
        assert_eq!(stats, again);

        let pure = [rint(0), rint(1), rint(0)];
        let stats = monte_carlo_verify(&g, &free_spec(), &pure, 500, 1).unwrap();
        assert_eq!(stats, vec![(2.0, 0.0), (2.0, 0.0)]);
    }

    #[test]
    fn verification_accepts_the_solution_and_rejects_a_tampered_point() {
        let g = twostage();
        let eq = backwards_induction(&g, &free_spec()).unwrap();
        verify_equilibrium(&g, &free_spec(), &eq).unwrap();

        let tampered = EquilibriumResult {
            spec: free_spec(),
            point: pt(&[("p", rint(0)), ("q", rint(0)), ("r", rint(0))]),
            pure_profile: Some(vec![0, 0]),
            payoffs: vec![rint(3), rint(1)],
            kind: EquilibriumKind::Pure,
        };
        assert!(verify_equilibrium(&g, &free_spec(), &tampered).is_err());
    }

    fn labelled(label: &str) -> SpaceSpec {
        SpaceSpec { label: label.into(), ..SpaceSpec::default() }
    }

    fn cell(ux: i64, uy: i64) -> Vec<EquilibriumResult> {
        vec![EquilibriumResult {
            spec: SpaceSpec::default(),
            point: Vec::new(),
            pure_profile: None,
            payoffs: vec![rint(ux), rint(uy)],
            kind: EquilibriumKind::Pure,
        }]
    }

    fn dilemma_table() -> ComparisonTable {
        ComparisonTable {
            game: "dilemma".into(),
            players: vec!["X".into(), "Y".into()],
            rows: vec![labelled("cooperate"), labelled("defect")],
            cols: vec![labelled("cooperate"), labelled("defect")],
            cells: vec![vec![cell(3, 3), cell(0, 5)], vec![cell(5, 0), cell(1, 1)]],
        }
    }

    #[test]
    fn meta_equilibria_of_a_dilemma() {
        assert_eq!(meta_equilibria(&dilemma_table()), vec![(1, 1)]);
    }

    #[test]
    fn table_export_formats() {
        let table = dilemma_table();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("rowSpec,colSpec,payoffX,payoffY,kind"));
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.contains("defect,cooperate,5,0,pure"));

        let md = table.to_markdown();
        assert!(md.starts_with("| |"));
        assert!(md.contains("| defect | (5, 0) | (1, 1) |"));

        let json = table.to_json();
        assert_eq!(json["game"], "dilemma");
        assert_eq!(json["cells"][0][1][0]["payoffs"][1], "5");
    }
}
