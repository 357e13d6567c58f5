//! Finite probability spaces over sequences of moves, and constraint
//! resolution into reduced parameter spaces.
//!
//! A [`ProbabilitySpace`] is a factorised distribution over a sequence of
//! discrete moves: each move has one *node* per class of conditioning
//! histories, and each node carries one probability parameter per attainable
//! value. Constraints ([`Constraint`]) either pin parameters, tie them
//! together, or restrict whole moves (constant, copy of an earlier move,
//! anti-copy, or an explicit response table). [`ProbabilitySpace::resolve`]
//! turns a space plus a constraint set into a [`ResolvedSpace`]: a reduced
//! space with an explicit list of free parameters and, for every original
//! parameter, an exact polynomial in the free ones.
//!
//! The distinction that matters downstream: a resolved space is a genuine
//! parameter space in its own right — gradients, Fisher information and
//! equilibria are computed *within* it — not merely a subset of the parent
//! space. Constraining first and differentiating after is what makes
//! constrained tangent spaces differ from limits of unconstrained ones.

use std::collections::{BTreeMap, HashMap};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::poly::{MultilinearPolynomial as Poly, Var};
use crate::{parse_rat, rat_to_f64, Error, Rat};
use num_traits::{One, Signed, Zero};

/// A discrete move variable with a finite value domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveVar {
    pub name: String,
    pub domain: Vec<u8>,
}

/// One probability parameter: `P(move = value | node history)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub node: usize,
    pub value: u8,
}

/// A decision node: one conditioning-history class of one move.
///
/// `history` is a conjunction of predicates `move ∈ set`; the sets are
/// singletons in fully sequential games and larger for coarse observation.
/// `params` lists this node's parameter indices in *group order*: the last
/// entry is the dependent one, always equal to one minus the sum of the
/// others, and never a free parameter of any resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub move_idx: usize,
    pub history: Vec<(usize, Vec<u8>)>,
    pub params: Vec<usize>,
}

/// How internal move assignments project onto observable outcomes.
///
/// Most spaces expose their moves directly (`Identity`). Spaces whose
/// internal structure is richer than what is observed — a mixed-strategy
/// space whose second coordinate is a response *plan*, or a parity bit of
/// two hidden coins — provide a table from internal assignments to
/// observable ones; probabilities of internal assignments mapping to the
/// same observable outcome are summed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObservableMap {
    Identity,
    Table {
        moves: Vec<MoveVar>,
        map: Vec<(Vec<u8>, Vec<u8>)>,
    },
}

/// A finite factorised probability space.
#[derive(Debug, Clone)]
pub struct ProbabilitySpace {
    pub name: String,
    pub moves: Vec<MoveVar>,
    pub nodes: Vec<Node>,
    pub params: Vec<Param>,
    pub observables: ObservableMap,
}

/// Builder for [`ProbabilitySpace`]; nodes are added in move order and
/// parameters take their group order from the chosen node constructor.
pub struct SpaceBuilder {
    space: ProbabilitySpace,
}

impl SpaceBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        SpaceBuilder {
            space: ProbabilitySpace {
                name: name.into(),
                moves: Vec::new(),
                nodes: Vec::new(),
                params: Vec::new(),
                observables: ObservableMap::Identity,
            },
        }
    }

    /// Declare a move with the given value domain; returns its index.
    pub fn add_move(&mut self, name: impl Into<String>, domain: &[u8]) -> usize {
        self.space.moves.push(MoveVar {
            name: name.into(),
            domain: domain.to_vec(),
        });
        self.space.moves.len() - 1
    }

    /// Shorthand for a binary move with domain `{0, 1}`.
    pub fn add_binary_move(&mut self, name: impl Into<String>) -> usize {
        self.add_move(name, &[0, 1])
    }

    /// A node for a binary move. The group is ordered `[P(=1), P(=0)]`, so
    /// the kept parameter is the probability of value 1 (named `p_name`) and
    /// the dependent complement is named `comp_name`.
    pub fn binary_node(
        &mut self,
        mv: usize,
        history: &[(usize, u8)],
        p_name: impl Into<String>,
        comp_name: impl Into<String>,
    ) -> usize {
        let node = self.push_node(mv, history);
        self.push_param(node, p_name, 1);
        self.push_param(node, comp_name, 0);
        node
    }

    /// A node for a move with any domain: one parameter per value in
    /// ascending value order, the last one dependent. `names` must match the
    /// move's domain length.
    pub fn categorical_node(
        &mut self,
        mv: usize,
        history: &[(usize, u8)],
        names: &[&str],
    ) -> usize {
        let domain = self.space.moves[mv].domain.clone();
        assert_eq!(names.len(), domain.len(), "one parameter name per value");
        let mut order: Vec<usize> = (0..domain.len()).collect();
        order.sort_by_key(|&i| domain[i]);
        let node = self.push_node(mv, history);
        for &i in &order {
            self.push_param(node, names[i], domain[i]);
        }
        node
    }

    /// A node with an explicit parameter order: `pairs` lists `(name,
    /// value)` in the desired group order, and the *last* pair becomes the
    /// dependent parameter. Useful when the natural ascending order would
    /// make the wrong parameter dependent.
    pub fn ordered_node(
        &mut self,
        mv: usize,
        history: &[(usize, u8)],
        pairs: &[(&str, u8)],
    ) -> usize {
        let domain = self.space.moves[mv].domain.clone();
        assert_eq!(pairs.len(), domain.len(), "one parameter per value");
        let node = self.push_node(mv, history);
        for &(name, value) in pairs {
            assert!(domain.contains(&value), "value outside the move's domain");
            self.push_param(node, name, value);
        }
        node
    }

    /// A node whose history uses value *sets* (coarse observation).
    pub fn binary_node_with_sets(
        &mut self,
        mv: usize,
        history: &[(usize, &[u8])],
        p_name: impl Into<String>,
        comp_name: impl Into<String>,
    ) -> usize {
        self.space.nodes.push(Node {
            move_idx: mv,
            history: history
                .iter()
                .map(|&(m, s)| (m, s.to_vec()))
                .collect(),
            params: Vec::new(),
        });
        let node = self.space.nodes.len() - 1;
        self.push_param(node, p_name, 1);
        self.push_param(node, comp_name, 0);
        node
    }

    /// The categorical counterpart of [`binary_node_with_sets`]: ascending
    /// value order, last parameter dependent.
    ///
    /// [`binary_node_with_sets`]: SpaceBuilder::binary_node_with_sets
    pub fn categorical_node_with_sets(
        &mut self,
        mv: usize,
        history: &[(usize, &[u8])],
        names: &[&str],
    ) -> usize {
        let domain = self.space.moves[mv].domain.clone();
        assert_eq!(names.len(), domain.len(), "one parameter name per value");
        let mut order: Vec<usize> = (0..domain.len()).collect();
        order.sort_by_key(|&i| domain[i]);
        self.space.nodes.push(Node {
            move_idx: mv,
            history: history.iter().map(|&(m, s)| (m, s.to_vec())).collect(),
            params: Vec::new(),
        });
        let node = self.space.nodes.len() - 1;
        for &i in &order {
            self.push_param(node, names[i], domain[i]);
        }
        node
    }

    fn push_node(&mut self, mv: usize, history: &[(usize, u8)]) -> usize {
        self.space.nodes.push(Node {
            move_idx: mv,
            history: history.iter().map(|&(m, v)| (m, vec![v])).collect(),
            params: Vec::new(),
        });
        self.space.nodes.len() - 1
    }

    fn push_param(&mut self, node: usize, name: impl Into<String>, value: u8) {
        let idx = self.space.params.len();
        self.space.params.push(Param {
            name: name.into(),
            node,
            value,
        });
        self.space.nodes[node].params.push(idx);
    }

    /// Project internal assignments onto distinct observable moves.
    pub fn observables(
        &mut self,
        moves: Vec<MoveVar>,
        map: Vec<(Vec<u8>, Vec<u8>)>,
    ) {
        self.space.observables = ObservableMap::Table { moves, map };
    }

    pub fn build(self) -> ProbabilitySpace {
        self.space
    }
}

/// A constraint on a probability space.
///
/// Parameter- and move-level constraints are resolved exactly by
/// [`ProbabilitySpace::resolve`]. Correlation constraints are a different
/// kind of object — they restrict a *derived* statistic, not the
/// factorisation — and are dispatched by the solver layer; `resolve` rejects
/// them.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// Pin a named parameter to an exact value.
    ParamFix { param: String, value: Rat },
    /// Identify two named parameters (they remain a single free parameter).
    ParamTie { a: String, b: String },
    /// The move takes a fixed value at every node.
    MoveConst { mv: String, value: u8 },
    /// The move copies an earlier move it observes.
    MoveCopy { mv: String, source: String },
    /// The move plays the opposite of an earlier binary move it observes.
    MoveAnti { mv: String, source: String },
    /// An explicit (possibly partial) response table: each row fixes the
    /// move's value at nodes whose histories satisfy the row's conditions.
    MoveAssign {
        mv: String,
        table: Vec<(Vec<(String, u8)>, u8)>,
    },
    /// Fix the correlation coefficient between two observable binary moves.
    CorrelationFix { x: String, y: String, rho: f64 },
}

/// An ordered collection of constraints with builder-style helpers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    pub items: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fix(mut self, param: &str, value: Rat) -> Self {
        self.items.push(Constraint::ParamFix {
            param: param.into(),
            value,
        });
        self
    }

    pub fn tie(mut self, a: &str, b: &str) -> Self {
        self.items.push(Constraint::ParamTie {
            a: a.into(),
            b: b.into(),
        });
        self
    }

    pub fn move_const(mut self, mv: &str, value: u8) -> Self {
        self.items.push(Constraint::MoveConst {
            mv: mv.into(),
            value,
        });
        self
    }

    pub fn move_copy(mut self, mv: &str, source: &str) -> Self {
        self.items.push(Constraint::MoveCopy {
            mv: mv.into(),
            source: source.into(),
        });
        self
    }

    pub fn move_anti(mut self, mv: &str, source: &str) -> Self {
        self.items.push(Constraint::MoveAnti {
            mv: mv.into(),
            source: source.into(),
        });
        self
    }

    pub fn correlation(mut self, x: &str, y: &str, rho: f64) -> Self {
        self.items.push(Constraint::CorrelationFix {
            x: x.into(),
            y: y.into(),
            rho,
        });
        self
    }

    pub fn push(&mut self, c: Constraint) {
        self.items.push(c);
    }

    /// The correlation constraints, if any (the solver peels these off
    /// before calling `resolve`).
    pub fn correlations(&self) -> Vec<(String, String, f64)> {
        self.items
            .iter()
            .filter_map(|c| match c {
                Constraint::CorrelationFix { x, y, rho } => {
                    Some((x.clone(), y.clone(), *rho))
                }
                _ => None,
            })
            .collect()
    }

    /// A copy without the correlation constraints.
    pub fn without_correlations(&self) -> ConstraintSet {
        ConstraintSet {
            items: self
                .items
                .iter()
                .filter(|c| !matches!(c, Constraint::CorrelationFix { .. }))
                .cloned()
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Serialisation: constraints have a JSON form tagged by "kind". Exact values
// serialise as integers or "n/d" strings; on input, numbers and fraction or
// decimal strings are all accepted and converted exactly.

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ConstraintRepr {
    Fix {
        param: String,
        value: serde_json::Value,
    },
    Tie {
        a: String,
        b: String,
    },
    MoveConst {
        #[serde(rename = "move")]
        mv: String,
        value: u8,
    },
    MoveCopy {
        #[serde(rename = "move")]
        mv: String,
        source: String,
    },
    MoveAnti {
        #[serde(rename = "move")]
        mv: String,
        source: String,
    },
    MoveAssign {
        #[serde(rename = "move")]
        mv: String,
        table: Vec<AssignRow>,
    },
    Correlation {
        x: String,
        y: String,
        rho: f64,
    },
}

#[derive(Serialize, Deserialize)]
struct AssignRow {
    when: BTreeMap<String, u8>,
    value: u8,
}

/// Convert a JSON value (number or string) into an exact rational. Decimal
/// number literals are read back through their shortest decimal rendering,
/// so `0.1` means exactly 1/10.
pub fn rat_from_json(v: &serde_json::Value) -> Result<Rat, Error> {
    match v {
        serde_json::Value::Number(n) => parse_rat(&n.to_string()),
        serde_json::Value::String(s) => parse_rat(s),
        _ => Err(Error::invalid(format!("expected number or fraction, got {v}"))),
    }
}

pub(crate) fn rat_to_json(x: &Rat) -> serde_json::Value {
    if x.is_integer() {
        if let Some(i) = num_traits::ToPrimitive::to_i64(x.numer()) {
            return serde_json::Value::Number(i.into());
        }
    }
    serde_json::Value::String(crate::poly::format_rat(x))
}

impl Serialize for Constraint {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            Constraint::ParamFix { param, value } => ConstraintRepr::Fix {
                param: param.clone(),
                value: rat_to_json(value),
            },
            Constraint::ParamTie { a, b } => ConstraintRepr::Tie {
                a: a.clone(),
                b: b.clone(),
            },
            Constraint::MoveConst { mv, value } => ConstraintRepr::MoveConst {
                mv: mv.clone(),
                value: *value,
            },
            Constraint::MoveCopy { mv, source } => ConstraintRepr::MoveCopy {
                mv: mv.clone(),
                source: source.clone(),
            },
            Constraint::MoveAnti { mv, source } => ConstraintRepr::MoveAnti {
                mv: mv.clone(),
                source: source.clone(),
            },
            Constraint::MoveAssign { mv, table } => ConstraintRepr::MoveAssign {
                mv: mv.clone(),
                table: table
                    .iter()
                    .map(|(when, value)| AssignRow {
                        when: when.iter().cloned().collect(),
                        value: *value,
                    })
                    .collect(),
            },
            Constraint::CorrelationFix { x, y, rho } => ConstraintRepr::Correlation {
                x: x.clone(),
                y: y.clone(),
                rho: *rho,
            },
        };
        repr.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Constraint {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let repr = ConstraintRepr::deserialize(de)?;
        Ok(match repr {
            ConstraintRepr::Fix { param, value } => Constraint::ParamFix {
                param,
                value: rat_from_json(&value).map_err(D::Error::custom)?,
            },
            ConstraintRepr::Tie { a, b } => Constraint::ParamTie { a, b },
            ConstraintRepr::MoveConst { mv, value } => Constraint::MoveConst { mv, value },
            ConstraintRepr::MoveCopy { mv, source } => Constraint::MoveCopy { mv, source },
            ConstraintRepr::MoveAnti { mv, source } => Constraint::MoveAnti { mv, source },
            ConstraintRepr::MoveAssign { mv, table } => Constraint::MoveAssign {
                mv,
                table: table
                    .into_iter()
                    .map(|row| (row.when.into_iter().collect(), row.value))
                    .collect(),
            },
            ConstraintRepr::Correlation { x, y, rho } => {
                Constraint::CorrelationFix { x, y, rho }
            }
        })
    }
}

impl Serialize for ConstraintSet {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        self.items.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ConstraintSet {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        Ok(ConstraintSet {
            items: Vec::<Constraint>::deserialize(de)?,
        })
    }
}

// ---------------------------------------------------------------------------
// Resolution

/// Resolution state of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamState {
    /// A free parameter of the resolved space, at the given slot.
    Free(usize),
    /// Pinned to an exact value.
    Fixed(Rat),
    /// Identified with the free parameter at the given global index.
    Tied(usize),
    /// Dependent (last of its group): one minus the sum of the others.
    Dependent,
    /// Its node is unreachable under the constraints.
    Pruned,
}

/// A space together with a resolved constraint set: the reduced parameter
/// space, exact substitution polynomials, and the reachable event list.
#[derive(Debug, Clone)]
pub struct ResolvedSpace {
    pub space: ProbabilitySpace,
    pub states: Vec<ParamState>,
    /// Global indices of the free parameters, in space order.
    pub free: Vec<usize>,
    /// Every original parameter as a polynomial in the free ones.
    pub subst: Vec<Poly>,
    /// Reachable full internal assignments with their probability
    /// polynomials (in the free parameters).
    pub events: Vec<(Vec<u8>, Poly)>,
    /// Nodes reachable under the constraints.
    pub live_nodes: Vec<bool>,
}

#[derive(Clone, PartialEq)]
enum St {
    Free,
    Fixed(Rat),
    Tied(usize),
    Dependent,
}

struct Resolver<'a> {
    space: &'a ProbabilitySpace,
    st: Vec<St>,
    /// Fixes requested on dependent parameters, handled once their groups
    /// are determined enough.
    deferred: Vec<(usize, Rat)>,
}

impl<'a> Resolver<'a> {
    fn find(&self, mut i: usize) -> usize {
        while let St::Tied(j) = self.st[i] {
            i = j;
        }
        i
    }

    fn pname(&self, i: usize) -> &str {
        &self.space.params[i].name
    }

    fn fix(&mut self, i: usize, v: Rat) -> Result<(), Error> {
        if v.is_negative() || v > Rat::one() {
            return Err(Error::OutOfRangeParam(format!(
                "{} = {} is outside [0, 1]",
                self.pname(i),
                crate::poly::format_rat(&v)
            )));
        }
        let r = self.find(i);
        match &self.st[r] {
            St::Free => {
                self.st[r] = St::Fixed(v);
                Ok(())
            }
            St::Fixed(w) => {
                if *w == v {
                    Ok(())
                } else {
                    Err(Error::ContradictoryConstraints(format!(
                        "{} fixed to both {} and {}",
                        self.pname(r),
                        crate::poly::format_rat(w),
                        crate::poly::format_rat(&v)
                    )))
                }
            }
            St::Dependent => {
                self.deferred.push((r, v));
                Ok(())
            }
            St::Tied(_) => unreachable!("find returns a representative"),
        }
    }

    fn tie(&mut self, a: usize, b: usize) -> Result<(), Error> {
        for &e in &[a, b] {
            if matches!(self.st[self.find(e)], St::Dependent) {
                return Err(Error::UnsupportedConstraint(format!(
                    "cannot tie dependent parameter {}",
                    self.pname(self.find(e))
                )));
            }
        }
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        let (keep, drop) = (ra.min(rb), ra.max(rb));
        match (self.st[keep].clone(), self.st[drop].clone()) {
            (St::Free, St::Fixed(v)) => {
                self.st[keep] = St::Fixed(v);
            }
            (St::Fixed(v), St::Fixed(w)) if v != w => {
                return Err(Error::ContradictoryConstraints(format!(
                    "tie of {} and {} but they are fixed to {} and {}",
                    self.pname(keep),
                    self.pname(drop),
                    crate::poly::format_rat(&v),
                    crate::poly::format_rat(&w)
                )));
            }
            _ => {}
        }
        self.st[drop] = St::Tied(keep);
        Ok(())
    }

    fn fixed_value(&self, i: usize) -> Option<Rat> {
        match &self.st[self.find(i)] {
            St::Fixed(v) => Some(v.clone()),
            _ => None,
        }
    }

    /// Propagate group-sum consequences to a fixpoint: a group whose fixed
    /// kept parameters already sum to one forces its remaining kept
    /// parameters to zero, and a deferred fix on a dependent parameter is
    /// lowered once at most one kept parameter of its group is still open.
    fn settle(&mut self) -> Result<(), Error> {
        loop {
            let mut changed = false;
            for node in &self.space.nodes {
                let kept = &node.params[..node.params.len() - 1];
                let mut sum = Rat::zero();
                let mut open: Vec<usize> = Vec::new();
                for &p in kept {
                    match self.fixed_value(p) {
                        Some(v) => sum += v,
                        None => open.push(p),
                    }
                }
                if sum > Rat::one() {
                    return Err(Error::ContradictoryConstraints(format!(
                        "values fixed at node of move {} sum to {} > 1",
                        self.space.moves[node.move_idx].name,
                        crate::poly::format_rat(&sum)
                    )));
                }
                if sum.is_one() && !open.is_empty() {
                    for p in open {
                        self.fix(p, Rat::zero())?;
                    }
                    changed = true;
                }
            }
            let deferred = std::mem::take(&mut self.deferred);
            for (dep, v) in deferred {
                let node = &self.space.nodes[self.space.params[dep].node];
                let kept = &node.params[..node.params.len() - 1];
                let mut sum = Rat::zero();
                let mut open: Vec<usize> = Vec::new();
                for &p in kept {
                    match self.fixed_value(p) {
                        Some(w) => sum += w,
                        None => open.push(p),
                    }
                }
                match open.len() {
                    0 => {
                        let derived = Rat::one() - sum;
                        if derived != v {
                            return Err(Error::ContradictoryConstraints(format!(
                                "{} is determined as {} but fixed to {}",
                                self.pname(dep),
                                crate::poly::format_rat(&derived),
                                crate::poly::format_rat(&v)
                            )));
                        }
                        changed = true;
                    }
                    1 => {
                        // One open kept parameter: the fix on the dependent
                        // one pins it exactly.
                        self.fix(open[0], Rat::one() - sum - v)?;
                        changed = true;
                    }
                    _ => self.deferred.push((dep, v)),
                }
            }
            if !changed {
                break;
            }
        }
        if let Some(&(dep, _)) = self.deferred.first() {
            return Err(Error::UnsupportedConstraint(format!(
                "fix on dependent parameter {} leaves its group underdetermined",
                self.pname(dep)
            )));
        }
        Ok(())
    }
}

impl ProbabilitySpace {
    pub fn move_index(&self, name: &str) -> Result<usize, Error> {
        self.moves
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| Error::UnknownMove(name.into()))
    }

    pub fn param_index(&self, name: &str) -> Result<usize, Error> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::UnknownParam(name.into()))
    }

    /// The node of `mv` whose history matches the assignment prefix, if any.
    /// `None` means the move is not played on this history.
    pub fn node_for(&self, mv: usize, assignment: &[u8]) -> Option<usize> {
        self.nodes.iter().position(|n| {
            n.move_idx == mv
                && n.history
                    .iter()
                    .all(|(src, set)| set.contains(&assignment[*src]))
        })
    }

    /// Observable move variables (the internal ones unless a table remaps).
    pub fn observable_moves(&self) -> &[MoveVar] {
        match &self.observables {
            ObservableMap::Identity => &self.moves,
            ObservableMap::Table { moves, .. } => moves,
        }
    }

    /// Project an internal assignment onto the observable outcome.
    pub fn observe(&self, internal: &[u8]) -> Result<Vec<u8>, Error> {
        match &self.observables {
            ObservableMap::Identity => Ok(internal.to_vec()),
            ObservableMap::Table { map, .. } => map
                .iter()
                .find(|(int, _)| int == internal)
                .map(|(_, obs)| obs.clone())
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "assignment {internal:?} missing from observable table"
                    ))
                }),
        }
    }

    /// Resolve a constraint set into a reduced parameter space.
    pub fn resolve(&self, constraints: &ConstraintSet) -> Result<ResolvedSpace, Error> {
        let mut st: Vec<St> = vec![St::Free; self.params.len()];
        for node in &self.nodes {
            let &last = node.params.last().expect("nonempty group");
            st[last] = St::Dependent;
        }
        let mut rs = Resolver {
            space: self,
            st,
            deferred: Vec::new(),
        };

        // Lower move-level constraints to per-node parameter fixes, and
        // apply parameter fixes and ties.
        for c in &constraints.items {
            match c {
                Constraint::ParamFix { param, value } => {
                    let i = self.param_index(param)?;
                    rs.fix(i, value.clone())?;
                }
                Constraint::ParamTie { a, b } => {
                    let (i, j) = (self.param_index(a)?, self.param_index(b)?);
                    rs.tie(i, j)?;
                }
                Constraint::MoveConst { mv, value } => {
                    let m = self.move_index(mv)?;
                    if !self.moves[m].domain.contains(value) {
                        return Err(Error::invalid(format!(
                            "{mv} cannot take value {value}"
                        )));
                    }
                    for (ni, node) in self.nodes.iter().enumerate() {
                        if node.move_idx != m {
                            continue;
                        }
                        self.fix_node_to(&mut rs, ni, *value)?;
                    }
                }
                Constraint::MoveCopy { mv, source } | Constraint::MoveAnti { mv, source } => {
                    let anti = matches!(c, Constraint::MoveAnti { .. });
                    let m = self.move_index(mv)?;
                    let s = self.move_index(source)?;
                    if anti && self.moves[s].domain != [0, 1] {
                        return Err(Error::UnsupportedConstraint(format!(
                            "anti-copy of non-binary move {source}"
                        )));
                    }
                    for (ni, node) in self.nodes.iter().enumerate() {
                        if node.move_idx != m {
                            continue;
                        }
                        let sv = node
                            .history
                            .iter()
                            .find(|(src, set)| *src == s && set.len() == 1)
                            .map(|(_, set)| set[0]);
                        let sv = sv.ok_or_else(|| {
                            Error::UnsupportedConstraint(format!(
                                "{mv} does not observe {source} exactly at every node"
                            ))
                        })?;
                        let target = if anti { 1 - sv } else { sv };
                        self.fix_node_to(&mut rs, ni, target)?;
                    }
                }
                Constraint::MoveAssign { mv, table } => {
                    let m = self.move_index(mv)?;
                    let table: Vec<(Vec<(usize, u8)>, u8)> = table
                        .iter()
                        .map(|(when, v)| {
                            let when = when
                                .iter()
                                .map(|(name, val)| Ok((self.move_index(name)?, *val)))
                                .collect::<Result<Vec<_>, Error>>()?;
                            Ok((when, *v))
                        })
                        .collect::<Result<Vec<_>, Error>>()?;
                    for (ni, node) in self.nodes.iter().enumerate() {
                        if node.move_idx != m {
                            continue;
                        }
                        let matches_row = |when: &[(usize, u8)]| {
                            when.iter().all(|&(src, val)| {
                                node.history
                                    .iter()
                                    .any(|(h, set)| *h == src && set == &vec![val])
                            })
                        };
                        let mut hit = None;
                        for (when, v) in &table {
                            if matches_row(when) {
                                if hit.is_some() {
                                    return Err(Error::invalid(format!(
                                        "response table for {mv} matches a node twice"
                                    )));
                                }
                                hit = Some(*v);
                            }
                        }
                        if let Some(v) = hit {
                            self.fix_node_to(&mut rs, ni, v)?;
                        }
                    }
                }
                Constraint::CorrelationFix { x, y, .. } => {
                    return Err(Error::UnsupportedConstraint(format!(
                        "correlation constraint on ({x}, {y}) must be dispatched by the solver"
                    )));
                }
            }
        }

        rs.settle()?;

        // Reachability: walk the assignment tree following values whose
        // probability is not identically zero; unreached nodes are pruned.
        let mut live_nodes = vec![false; self.nodes.len()];
        let mut stack: Vec<Vec<u8>> = vec![Vec::new()];
        while let Some(prefix) = stack.pop() {
            let mv = prefix.len();
            if mv == self.moves.len() {
                continue;
            }
            let mut padded = prefix.clone();
            padded.resize(self.moves.len(), 0);
            match self.node_for(mv, &padded) {
                None => {
                    let mut next = prefix.clone();
                    next.push(0);
                    stack.push(next);
                }
                Some(ni) => {
                    live_nodes[ni] = true;
                    let node = &self.nodes[ni];
                    let kept = &node.params[..node.params.len() - 1];
                    let open: Vec<usize> = kept
                        .iter()
                        .copied()
                        .filter(|&p| rs.fixed_value(p).is_none())
                        .collect();
                    let kept_sum: Rat = kept
                        .iter()
                        .filter_map(|&p| rs.fixed_value(p))
                        .sum();
                    for &p in &node.params {
                        let possible = if p == *node.params.last().unwrap() {
                            // Dependent value: impossible only when the kept
                            // parameters are all fixed and sum to one.
                            !open.is_empty() || !kept_sum.is_one()
                        } else {
                            match rs.fixed_value(p) {
                                Some(v) => !v.is_zero(),
                                None => true,
                            }
                        };
                        if possible {
                            let mut next = prefix.clone();
                            next.push(self.params[p].value);
                            stack.push(next);
                        }
                    }
                }
            }
        }

        // Free-parameter slots, in space order. A tie class is represented
        // by its earliest member whose node is live; if none is live the
        // whole class is pruned.
        let mut final_states: Vec<ParamState> = Vec::with_capacity(self.params.len());
        let mut classes: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..self.params.len() {
            classes.entry(rs.find(i)).or_default().push(i);
        }
        let mut rep_of: HashMap<usize, usize> = HashMap::new();
        for (&r, members) in &classes {
            let live_member = members
                .iter()
                .copied()
                .find(|&m| live_nodes[self.params[m].node]);
            rep_of.insert(r, live_member.unwrap_or(*members.first().unwrap()));
        }
        let mut free: Vec<usize> = Vec::new();
        for i in 0..self.params.len() {
            let r = rs.find(i);
            let rep = rep_of[&r];
            let state = match &rs.st[r] {
                St::Fixed(v) => ParamState::Fixed(v.clone()),
                St::Dependent => {
                    if live_nodes[self.params[i].node] {
                        ParamState::Dependent
                    } else {
                        ParamState::Pruned
                    }
                }
                St::Free => {
                    if !live_nodes[self.params[rep].node] {
                        ParamState::Pruned
                    } else if i == rep {
                        let slot = free.len();
                        free.push(i);
                        ParamState::Free(slot)
                    } else {
                        ParamState::Tied(rep)
                    }
                }
                St::Tied(_) => unreachable!(),
            };
            final_states.push(state);
        }

        // Substitution polynomials, dependents resolved recursively.
        let mut subst: Vec<Option<Poly>> = vec![None; self.params.len()];
        fn poly_of(
            space: &ProbabilitySpace,
            states: &[ParamState],
            subst: &mut Vec<Option<Poly>>,
            i: usize,
        ) -> Poly {
            if let Some(p) = &subst[i] {
                return p.clone();
            }
            let p = match &states[i] {
                ParamState::Fixed(v) => Poly::constant(v.clone()),
                ParamState::Free(slot) => Poly::param(*slot),
                ParamState::Tied(rep) => poly_of(space, states, subst, *rep),
                ParamState::Pruned => Poly::zero(),
                ParamState::Dependent => {
                    let node = &space.nodes[space.params[i].node];
                    let kept = &node.params[..node.params.len() - 1];
                    let mut p = Poly::one();
                    for &k in kept {
                        p = p - poly_of(space, states, subst, k);
                    }
                    p
                }
            };
            subst[i] = Some(p.clone());
            p
        }
        for i in 0..self.params.len() {
            poly_of(self, &final_states, &mut subst, i);
        }
        let subst: Vec<Poly> = subst.into_iter().map(Option::unwrap).collect();

        // Event list: reachable full assignments with exact probability
        // polynomials.
        let mut events: Vec<(Vec<u8>, Poly)> = Vec::new();
        let mut walk: Vec<(Vec<u8>, Poly)> = vec![(Vec::new(), Poly::one())];
        while let Some((prefix, prob)) = walk.pop() {
            let mv = prefix.len();
            if mv == self.moves.len() {
                events.push((prefix, prob));
                continue;
            }
            let mut padded = prefix.clone();
            padded.resize(self.moves.len(), 0);
            match self.node_for(mv, &padded) {
                None => {
                    let mut next = prefix.clone();
                    next.push(0);
                    walk.push((next, prob));
                }
                Some(ni) => {
                    for &p in &self.nodes[ni].params {
                        let factor = &subst[p];
                        if factor.is_zero() {
                            continue;
                        }
                        let mut next = prefix.clone();
                        next.push(self.params[p].value);
                        walk.push((next, &prob * factor));
                    }
                }
            }
        }
        events.sort_by(|a, b| a.0.cmp(&b.0));

        Ok(ResolvedSpace {
            space: self.clone(),
            states: final_states,
            free,
            subst,
            events,
            live_nodes,
        })
    }

    fn fix_node_to(&self, rs: &mut Resolver, ni: usize, value: u8) -> Result<(), Error> {
        let node = &self.nodes[ni];
        if !self.moves[node.move_idx].domain.contains(&value) {
            return Err(Error::invalid(format!(
                "{} cannot take value {value}",
                self.moves[node.move_idx].name
            )));
        }
        for &p in &node.params {
            let want = if self.params[p].value == value {
                Rat::one()
            } else {
                Rat::zero()
            };
            rs.fix(p, want)?;
        }
        Ok(())
    }
}

impl ResolvedSpace {
    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Names of the free parameters, in slot order.
    pub fn free_names(&self) -> Vec<&str> {
        self.free
            .iter()
            .map(|&i| self.space.params[i].name.as_str())
            .collect()
    }

    /// The polynomial (in free parameters) for a named original parameter.
    pub fn param_poly(&self, name: &str) -> Result<&Poly, Error> {
        Ok(&self.subst[self.space.param_index(name)?])
    }

    /// Slot of a named free parameter.
    pub fn free_slot(&self, name: &str) -> Result<usize, Error> {
        let i = self.space.param_index(name)?;
        match self.states[i] {
            ParamState::Free(slot) => Ok(slot),
            _ => Err(Error::invalid(format!("{name} is not free here"))),
        }
    }

    /// Check that a free-parameter point is admissible: every original
    /// parameter evaluates into `[0, 1]`.
    pub fn check_point(&self, point: &[Rat]) -> Result<(), Error> {
        if point.len() != self.n_free() {
            return Err(Error::DimensionMismatch {
                expected: self.n_free(),
                got: point.len(),
            });
        }
        for (i, poly) in self.subst.iter().enumerate() {
            if matches!(self.states[i], ParamState::Pruned) {
                continue;
            }
            let v = poly.eval_params(point);
            if v.is_negative() || v > Rat::one() {
                return Err(Error::OutOfRangeParam(format!(
                    "{} = {} at this point",
                    self.space.params[i].name,
                    crate::poly::format_rat(&v)
                )));
            }
        }
        Ok(())
    }

    /// Exact joint distribution over *observable* outcomes at a point.
    pub fn joint_distribution(&self, point: &[Rat]) -> Result<Vec<(Vec<u8>, Rat)>, Error> {
        self.check_point(point)?;
        let mut acc: BTreeMap<Vec<u8>, Rat> = BTreeMap::new();
        for (assignment, prob) in &self.events {
            let obs = self.space.observe(assignment)?;
            *acc.entry(obs).or_insert_with(Rat::zero) += prob.eval_params(point);
        }
        Ok(acc.into_iter().collect())
    }

    /// Joint distribution in floating point (no admissibility check beyond
    /// clamping nothing — callers pass valid points).
    pub fn joint_distribution_f64(&self, point: &[f64]) -> Result<Vec<(Vec<u8>, f64)>, Error> {
        let mut acc: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
        for (assignment, prob) in &self.events {
            let obs = self.space.observe(assignment)?;
            *acc.entry(obs).or_insert(0.0) += prob.eval_params_f64(point);
        }
        Ok(acc.into_iter().collect())
    }

    /// Exact probability polynomials over observable outcomes.
    pub fn observable_polynomials(&self) -> Result<Vec<(Vec<u8>, Poly)>, Error> {
        let mut acc: BTreeMap<Vec<u8>, Poly> = BTreeMap::new();
        for (assignment, prob) in &self.events {
            let obs = self.space.observe(assignment)?;
            let slot = acc.entry(obs).or_insert_with(Poly::zero);
            *slot += prob;
        }
        Ok(acc.into_iter().collect())
    }

    /// Volume of the free-parameter polytope: the product over live nodes of
    /// the simplex volume `1/k!` spanned by each node's `k` free parameters.
    pub fn simplex_volume(&self) -> Rat {
        let mut vol = Rat::one();
        for (ni, node) in self.space.nodes.iter().enumerate() {
            if !self.live_nodes[ni] {
                continue;
            }
            let k = node
                .params
                .iter()
                .filter(|&&p| matches!(self.states[p], ParamState::Free(_)))
                .count();
            let mut fact = Rat::one();
            for j in 1..=k as i64 {
                fact *= crate::rint(j);
            }
            vol /= fact;
        }
        vol
    }

    /// Exact symbolic gradient of a polynomial in the free parameters.
    pub fn gradient(&self, f: &Poly) -> Vec<Poly> {
        (0..self.n_free())
            .map(|i| f.partial(Var::Param(i as u32)))
            .collect()
    }

    /// Gradient evaluated exactly at a point.
    pub fn gradient_at(&self, f: &Poly, point: &[Rat]) -> Vec<Rat> {
        self.gradient(f)
            .iter()
            .map(|g| g.eval_params(point))
            .collect()
    }

    /// Directional derivative `∇f · d` at a point (d need not be a unit
    /// vector; callers normalise when they mean a direction).
    pub fn directed_gradient(&self, f: &Poly, point: &[Rat], direction: &[Rat]) -> Rat {
        self.gradient_at(f, point)
            .iter()
            .zip(direction)
            .map(|(g, d)| g * d)
            .sum()
    }

    /// Human-readable description of the resolution outcome.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("space {}\n", self.space.name));
        out.push_str(&format!(
            "  moves: {}\n",
            self.space
                .moves
                .iter()
                .map(|m| {
                    let dom: Vec<String> =
                        m.domain.iter().map(|v| v.to_string()).collect();
                    format!("{}:{{{}}}", m.name, dom.join(","))
                })
                .collect::<Vec<_>>()
                .join(" ")
        ));
        out.push_str(&format!(
            "  free parameters ({}): {}\n",
            self.n_free(),
            self.free_names().join(", ")
        ));
        let namer = self.namer();
        for (i, p) in self.space.params.iter().enumerate() {
            let desc = match &self.states[i] {
                ParamState::Free(_) => continue,
                ParamState::Fixed(v) => crate::poly::format_rat(v),
                ParamState::Tied(r) => self.space.params[*r].name.clone(),
                ParamState::Dependent => self.subst[i].display_with(&namer),
                ParamState::Pruned => "unreachable".into(),
            };
            out.push_str(&format!("  {} = {}\n", p.name, desc));
        }
        out
    }

    /// A namer mapping free-parameter slots back to parameter names, for
    /// polynomial display.
    pub fn namer(&self) -> impl Fn(Var) -> String + '_ {
        move |v: Var| match v {
            Var::Param(i) => self.space.params[self.free[i as usize]].name.clone(),
            Var::Move { mv, value } => {
                let m = &self.space.moves[mv as usize];
                if m.domain == [0, 1] {
                    m.name.clone()
                } else {
                    format!("[{}={}]", m.name, value)
                }
            }
        }
    }
}

/// Central-difference gradient of a black-box function on the unit box,
/// falling back to one-sided differences at the boundary.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, point: &[f64], h: f64) -> Vec<f64> {
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let mut lo = point.to_vec();
        let mut hi = point.to_vec();
        let (a, b) = (point[i] - h, point[i] + h);
        let (a, b) = if a < 0.0 {
            (point[i], b)
        } else if b > 1.0 {
            (a, point[i])
        } else {
            (a, b)
        };
        lo[i] = a;
        hi[i] = b;
        grad.push((f(&hi) - f(&lo)) / (b - a));
    }
    grad
}

/// Evaluate each gradient component of `f` at `point` in floating point.
pub fn gradient_f64(resolved: &ResolvedSpace, f: &Poly, point: &[f64]) -> Vec<f64> {
    resolved
        .gradient(f)
        .iter()
        .map(|g| g.eval_params_f64(point))
        .collect()
}

/// Exact-to-float conversion of a rational point.
pub fn point_to_f64(point: &[Rat]) -> Vec<f64> {
    point.iter().map(rat_to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, rint};

    /// The three-parameter two-move space used throughout the tests:
    /// x ~ p, then y ~ q after x=0 and y ~ r after x=1.
    fn behavioural() -> ProbabilitySpace {
        let mut b = SpaceBuilder::new("behavioural");
        let x = b.add_binary_move("x");
        let y = b.add_binary_move("y");
        b.binary_node(x, &[], "p", "p0");
        b.binary_node(y, &[(x, 0)], "q", "q0");
        b.binary_node(y, &[(x, 1)], "r", "r0");
        b.build()
    }

    #[test]
    fn unconstrained_resolution() {
        let sp = behavioural();
        let rs = sp.resolve(&ConstraintSet::new()).unwrap();
        assert_eq!(rs.free_names(), vec!["p", "q", "r"]);
        assert_eq!(rs.events.len(), 4);
        let pt = [rat(1, 2), rat(1, 4), rat(3, 4)];
        let joint = rs.joint_distribution(&pt).unwrap();
        let want = [
            (vec![0, 0], rat(3, 8)),
            (vec![0, 1], rat(1, 8)),
            (vec![1, 0], rat(1, 8)),
            (vec![1, 1], rat(3, 8)),
        ];
        assert_eq!(joint, want);
    }

    #[test]
    fn fixes_ties_and_complement_rewrites() {
        let sp = behavioural();
        // Fixing the complement q0 = 1/4 pins q = 3/4.
        let rs = sp
            .resolve(&ConstraintSet::new().fix("q0", rat(1, 4)))
            .unwrap();
        assert_eq!(rs.free_names(), vec!["p", "r"]);
        assert_eq!(rs.param_poly("q").unwrap().as_constant(), Some(rat(3, 4)));

        // Tying r to q leaves two free parameters and r tracks q.
        let rs = sp.resolve(&ConstraintSet::new().tie("r", "q")).unwrap();
        assert_eq!(rs.free_names(), vec!["p", "q"]);
        assert_eq!(rs.param_poly("r").unwrap(), rs.param_poly("q").unwrap());

        // Contradiction.
        let err = sp
            .resolve(
                &ConstraintSet::new()
                    .fix("q", rat(1, 2))
                    .fix("q0", rat(1, 4)),
            )
            .unwrap_err();
        assert!(matches!(err, Error::ContradictoryConstraints(_)));
    }

    #[test]
    fn move_constraints_lower_to_fixes() {
        let sp = behavioural();
        // y copies x: q = 0, r = 1.
        let rs = sp
            .resolve(&ConstraintSet::new().move_copy("y", "x"))
            .unwrap();
        assert_eq!(rs.free_names(), vec!["p"]);
        assert_eq!(rs.param_poly("q").unwrap().as_constant(), Some(rint(0)));
        assert_eq!(rs.param_poly("r").unwrap().as_constant(), Some(rint(1)));

        // y anti-copies x.
        let rs = sp
            .resolve(&ConstraintSet::new().move_anti("y", "x"))
            .unwrap();
        assert_eq!(rs.param_poly("q").unwrap().as_constant(), Some(rint(1)));
        assert_eq!(rs.param_poly("r").unwrap().as_constant(), Some(rint(0)));

        // x constant at 1 prunes the x=0 branch and its node.
        let rs = sp
            .resolve(&ConstraintSet::new().move_const("x", 1))
            .unwrap();
        assert_eq!(rs.free_names(), vec!["r"]);
        assert!(matches!(
            rs.states[sp.param_index("q").unwrap()],
            ParamState::Pruned
        ));
        assert_eq!(rs.events.len(), 2);
    }

    #[test]
    fn forced_collapse_on_saturated_groups() {
        let mut b = SpaceBuilder::new("die3");
        let d = b.add_move("d", &[0, 1, 2]);
        b.categorical_node(d, &[], &["a", "b", "c"]);
        let sp = b.build();
        // a = 1 forces b = 0 and the dependent c = 0.
        let rs = sp.resolve(&ConstraintSet::new().fix("a", rint(1))).unwrap();
        assert_eq!(rs.n_free(), 0);
        assert_eq!(rs.param_poly("b").unwrap().as_constant(), Some(rint(0)));
        assert_eq!(rs.param_poly("c").unwrap().as_constant(), Some(rint(0)));
        assert_eq!(rs.events.len(), 1);

        // Over-saturation is contradictory.
        let err = sp
            .resolve(
                &ConstraintSet::new()
                    .fix("a", rat(3, 4))
                    .fix("b", rat(1, 2)),
            )
            .unwrap_err();
        assert!(matches!(err, Error::ContradictoryConstraints(_)));

        // Fixing the dependent parameter works once the group determines it.
        let rs = sp
            .resolve(
                &ConstraintSet::new()
                    .fix("a", rat(1, 2))
                    .fix("c", rat(1, 3)),
            )
            .unwrap();
        assert_eq!(rs.n_free(), 0);
        assert_eq!(rs.param_poly("b").unwrap().as_constant(), Some(rat(1, 6)));
    }

    #[test]
    fn dependent_parameters_expand_to_complements() {
        let sp = behavioural();
        let rs = sp.resolve(&ConstraintSet::new()).unwrap();
        let namer = rs.namer();
        assert_eq!(rs.param_poly("p0").unwrap().display_with(&namer), "1 - p");
        // Event (x=0, y=1) has probability (1-p) q.
        let ev = rs.events.iter().find(|(a, _)| a == &vec![0, 1]).unwrap();
        assert_eq!(
            ev.1.eval_params(&[rat(1, 3), rat(1, 5), rat(1, 7)]),
            rat(2, 3) * rat(1, 5)
        );
    }

    #[test]
    fn simplex_volumes() {
        let mut b = SpaceBuilder::new("die4");
        let d = b.add_move("d", &[0, 1, 2, 3]);
        b.categorical_node(d, &[], &["a", "b", "c", "e"]);
        let sp = b.build();
        let rs = sp.resolve(&ConstraintSet::new()).unwrap();
        assert_eq!(rs.simplex_volume(), rat(1, 6));
        let rs = behavioural().resolve(&ConstraintSet::new()).unwrap();
        assert_eq!(rs.simplex_volume(), rint(1));
    }

    #[test]
    fn conditional_moves_default_to_zero() {
        // y exists only after x = 1 (as in the entry-deterrence games).
        let mut b = SpaceBuilder::new("entry");
        let x = b.add_binary_move("x");
        let y = b.add_binary_move("y");
        b.binary_node(x, &[], "p", "p0");
        b.binary_node(y, &[(x, 1)], "r", "r0");
        let sp = b.build();
        let rs = sp.resolve(&ConstraintSet::new()).unwrap();
        assert_eq!(rs.free_names(), vec!["p", "r"]);
        let evs: Vec<Vec<u8>> = rs.events.iter().map(|(a, _)| a.clone()).collect();
        assert_eq!(evs, vec![vec![0, 0], vec![1, 0], vec![1, 1]]);
        let pt = [rat(1, 2), rat(1, 3)];
        let joint = rs.joint_distribution(&pt).unwrap();
        assert_eq!(
            joint,
            vec![
                (vec![0, 0], rat(1, 2)),
                (vec![1, 0], rat(1, 3)),
                (vec![1, 1], rat(1, 6)),
            ]
        );
    }

    #[test]
    fn observable_tables_aggregate() {
        // Two hidden coins, one observable parity bit.
        let mut b = SpaceBuilder::new("parity");
        let c1 = b.add_binary_move("c1");
        let c2 = b.add_binary_move("c2");
        b.binary_node(c1, &[], "a", "a0");
        b.binary_node(c2, &[], "b", "b0");
        b.observables(
            vec![MoveVar {
                name: "parity".into(),
                domain: vec![0, 1],
            }],
            vec![
                (vec![0, 0], vec![0]),
                (vec![0, 1], vec![1]),
                (vec![1, 0], vec![1]),
                (vec![1, 1], vec![0]),
            ],
        );
        let sp = b.build();
        let rs = sp.resolve(&ConstraintSet::new()).unwrap();
        let joint = rs.joint_distribution(&[rat(1, 2), rat(1, 4)]).unwrap();
        assert_eq!(
            joint,
            vec![(vec![0], rat(1, 2)), (vec![1], rat(1, 2))]
        );
    }

    #[test]
    fn correlation_constraints_are_rejected_here() {
        let sp = behavioural();
        let err = sp
            .resolve(&ConstraintSet::new().correlation("x", "y", 0.5))
            .unwrap_err();
        assert!(matches!(err, Error::UnsupportedConstraint(_)));
    }

    #[test]
    fn constraint_json_round_trip() {
        let cs = ConstraintSet::new()
            .fix("q", rint(1))
            .fix("r", rat(1, 3))
            .tie("r", "q")
            .move_copy("y", "x")
            .correlation("x", "y", -1.0);
        let json = serde_json::to_string(&cs).unwrap();
        let back: ConstraintSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cs);
        // Decimal literals deserialise exactly.
        let parsed: ConstraintSet = serde_json::from_str(
            r#"[{"kind":"fix","param":"q","value":1.0},
                {"kind":"fix","param":"r","value":"2/7"}]"#,
        )
        .unwrap();
        assert_eq!(
            parsed.items[0],
            Constraint::ParamFix {
                param: "q".into(),
                value: rint(1)
            }
        );
        assert_eq!(
            parsed.items[1],
            Constraint::ParamFix {
                param: "r".into(),
                value: rat(2, 7)
            }
        );
    }

    #[test]
    fn gradients_and_directed_gradients() {
        let sp = behavioural();
        let rs = sp.resolve(&ConstraintSet::new()).unwrap();
        // <xy> = p r with slots (p, q, r) = (0, 1, 2).
        let f = &Poly::param(0) * &Poly::param(2);
        let grad = rs.gradient_at(&f, &[rat(1, 2), rat(1, 4), rat(1, 3)]);
        assert_eq!(grad, vec![rat(1, 3), rint(0), rat(1, 2)]);
        let d = rs.directed_gradient(
            &f,
            &[rat(1, 2), rat(1, 4), rat(1, 3)],
            &[rint(1), rint(0), rint(1)],
        );
        assert_eq!(d, rat(1, 3) + rat(1, 2));
        // Finite differences agree.
        let fd = fd_gradient(&|x| f.eval_params_f64(x), &[0.5, 0.25, 1.0 / 3.0], 1e-5);
        assert!((fd[0] - 1.0 / 3.0).abs() < 1e-9);
        assert!((fd[2] - 0.5).abs() < 1e-9);
    }
}
