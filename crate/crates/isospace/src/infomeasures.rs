//! Entropy, mutual information, correlation, Fisher information and
//! maximum-likelihood estimation over resolved spaces.
//!
//! Aggregations over outcomes (marginals, covariances, the inner sums of
//! Fisher and likelihood gradients) are exact rational arithmetic; only the
//! transcendental step — logarithms, square roots — moves to floating
//! point. Fisher matrices and likelihood gradients at rational points are
//! therefore exact, which is what lets tests assert closed forms like
//! `1/(a(1−a))` symbolically rather than numerically.
//!
//! All information quantities use natural logarithms, with `0·log 0 = 0`.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::probspace::{ObservableMap, ParamState, ResolvedSpace};
use crate::{rat_to_f64, Error, Rat};

/// A joint distribution as produced by
/// [`ResolvedSpace::joint_distribution`]: outcomes with exact weights.
pub type Joint = Vec<(Vec<u8>, Rat)>;

/// Shannon entropy of a probability vector (or the von Neumann entropy of a
/// density matrix's eigenvalue vector — same formula, same function).
pub fn entropy(probs: &[f64]) -> Result<f64, Error> {
    let mut h = 0.0;
    for &p in probs {
        if p < -1e-15 {
            return Err(Error::invalid(format!("negative probability {p}")));
        }
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    Ok(h)
}

/// Entropy of an exact joint distribution.
pub fn entropy_dist(dist: &[(Vec<u8>, Rat)]) -> Result<f64, Error> {
    let probs: Vec<f64> = dist.iter().map(|(_, p)| rat_to_f64(p)).collect();
    entropy(&probs)
}

/// Binary entropy `h(p) = −p ln p − (1−p) ln(1−p)`.
pub fn binary_entropy(p: f64) -> f64 {
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    h
}

/// Exact marginal of one variable of a joint distribution.
pub fn marginal(dist: &[(Vec<u8>, Rat)], var: usize) -> Vec<(u8, Rat)> {
    let mut acc: BTreeMap<u8, Rat> = BTreeMap::new();
    for (outcome, p) in dist {
        *acc.entry(outcome[var]).or_insert_with(Rat::zero) += p;
    }
    acc.into_iter().collect()
}

/// Exact joint marginal of a pair of variables.
pub fn pair_marginal(dist: &[(Vec<u8>, Rat)], x: usize, y: usize) -> Vec<((u8, u8), Rat)> {
    let mut acc: BTreeMap<(u8, u8), Rat> = BTreeMap::new();
    for (outcome, p) in dist {
        *acc.entry((outcome[x], outcome[y])).or_insert_with(Rat::zero) += p;
    }
    acc.into_iter().collect()
}

/// Conditional entropy `H(of | given)`; conditioning values of probability
/// zero contribute nothing.
pub fn conditional_entropy(dist: &[(Vec<u8>, Rat)], of: usize, given: usize) -> Result<f64, Error> {
    let pair = pair_marginal(dist, of, given);
    let giv = marginal(dist, given);
    let mut h = 0.0;
    for (gv, gp) in &giv {
        if gp.is_zero() {
            continue;
        }
        let conditional: Vec<f64> = pair
            .iter()
            .filter(|((_, g), _)| g == gv)
            .map(|(_, p)| rat_to_f64(&(p / gp)))
            .collect();
        h += rat_to_f64(gp) * entropy(&conditional)?;
    }
    Ok(h)
}

/// Mutual information `H(x) − H(x|y)` (symmetric in its arguments).
pub fn mutual_information(dist: &[(Vec<u8>, Rat)], x: usize, y: usize) -> Result<f64, Error> {
    let mx: Vec<f64> = marginal(dist, x).iter().map(|(_, p)| rat_to_f64(p)).collect();
    Ok(entropy(&mx)? - conditional_entropy(dist, x, y)?)
}

/// Closed form of the mutual information between the two moves of the
/// behavioural parameterisation `(p, q, r)`.
pub fn behavioural_mutual_information(p: f64, q: f64, r: f64) -> f64 {
    let ybar = q + p * (r - q);
    binary_entropy(ybar) - (1.0 - p) * binary_entropy(q) - p * binary_entropy(r)
}

/// Pearson correlation between two variables of a joint distribution,
/// treating outcome labels as numeric values. The moments are exact; only
/// the final square root is floating point.
pub fn correlation(dist: &[(Vec<u8>, Rat)], x: usize, y: usize) -> Result<f64, Error> {
    let mut ex = Rat::zero();
    let mut ey = Rat::zero();
    let mut exx = Rat::zero();
    let mut eyy = Rat::zero();
    let mut exy = Rat::zero();
    for (outcome, p) in dist {
        let xv = crate::rint(i64::from(outcome[x]));
        let yv = crate::rint(i64::from(outcome[y]));
        ex += p * &xv;
        ey += p * &yv;
        exx += p * &xv * &xv;
        eyy += p * &yv * &yv;
        exy += p * &xv * &yv;
    }
    let vx = &exx - &ex * &ex;
    let vy = &eyy - &ey * &ey;
    if vx.is_zero() || vy.is_zero() {
        return Err(Error::DegenerateMarginal(
            "correlation undefined: a marginal has zero variance".into(),
        ));
    }
    let cov = &exy - &ex * &ey;
    Ok(rat_to_f64(&cov) / (rat_to_f64(&vx) * rat_to_f64(&vy)).sqrt())
}

/// Fisher information matrix over the free parameters of a resolved space.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub dim: usize,
    /// Row-major exact entries.
    pub entries: Vec<Rat>,
}

impl FisherMatrix {
    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.entries[i * self.dim + j]
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| rat_to_f64(self.get(i, j))).collect())
            .collect()
    }
}

/// Exact Fisher information `F_ij = Σ_e (∂_i P_e)(∂_j P_e) / P_e` over the
/// observable outcomes of a resolved space, at a rational point.
pub fn fisher_information(resolved: &ResolvedSpace, point: &[Rat]) -> Result<FisherMatrix, Error> {
    resolved.check_point(point)?;
    let dim = resolved.n_free();
    let obs = resolved.observable_polynomials()?;
    let mut entries = vec![Rat::zero(); dim * dim];
    for (outcome, poly) in &obs {
        let p = poly.eval_params(point);
        if p.is_zero() {
            return Err(Error::SingularFisher(format!(
                "outcome {outcome:?} has probability zero at this point"
            )));
        }
        let grad = resolved.gradient_at(poly, point);
        for i in 0..dim {
            for j in i..dim {
                let term = &grad[i] * &grad[j] / &p;
                entries[i * dim + j] += &term;
                if j > i {
                    entries[j * dim + i] += &term;
                }
            }
        }
    }
    Ok(FisherMatrix { dim, entries })
}

/// Observed counts per joint outcome (internal move assignments).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountVector {
    pub counts: Vec<(Vec<u8>, u64)>,
}

impl CountVector {
    pub fn new(counts: Vec<(Vec<u8>, u64)>) -> Self {
        CountVector { counts }
    }

    /// Total number of observations.
    pub fn n(&self) -> u64 {
        self.counts.iter().map(|(_, c)| c).sum()
    }
}

fn check_support(resolved: &ResolvedSpace, counts: &CountVector) -> Result<(), Error> {
    let support: std::collections::HashSet<&Vec<u8>> =
        resolved.events.iter().map(|(a, _)| a).collect();
    for (outcome, c) in &counts.counts {
        if *c > 0 && !support.contains(outcome) {
            return Err(Error::CountOnPrunedEvent(format!(
                "{c} observations of impossible outcome {outcome:?}"
            )));
        }
    }
    Ok(())
}

/// Exact gradient of the log-likelihood `Σ_e n_e log P_e(θ)` at a point.
pub fn log_likelihood_gradient(
    resolved: &ResolvedSpace,
    counts: &CountVector,
    point: &[Rat],
) -> Result<Vec<Rat>, Error> {
    resolved.check_point(point)?;
    check_support(resolved, counts)?;
    let by_outcome: HashMap<&Vec<u8>, u64> =
        counts.counts.iter().map(|(o, c)| (o, *c)).collect();
    let mut grad = vec![Rat::zero(); resolved.n_free()];
    for (outcome, poly) in &resolved.events {
        let Some(&n) = by_outcome.get(outcome) else {
            continue;
        };
        if n == 0 {
            continue;
        }
        let p = poly.eval_params(point);
        if p.is_zero() {
            return Err(Error::CountOnPrunedEvent(format!(
                "outcome {outcome:?} observed {n} times but has probability zero here"
            )));
        }
        let nf = Rat::from_integer(n.into());
        for (i, g) in resolved.gradient_at(poly, point).into_iter().enumerate() {
            grad[i] += nf.clone() * g / &p;
        }
    }
    Ok(grad)
}

/// Closed-form maximum-likelihood estimate of the free parameters from
/// counts.
///
/// Works for spaces whose outcomes identify every decision node on the path
/// (identity observables, no parameter ties): the per-node conditional
/// frequencies maximize the likelihood exactly, scaled by whatever mass the
/// node's fixed values leave available. Anything else — aggregated
/// observables, ties coupling nodes — has no per-node closed form and
/// reports `MlUnsupported`.
pub fn ml_estimate(resolved: &ResolvedSpace, counts: &CountVector) -> Result<Vec<Rat>, Error> {
    if !matches!(resolved.space.observables, ObservableMap::Identity) {
        return Err(Error::MlUnsupported(
            "aggregated observables: node frequencies are not identified".into(),
        ));
    }
    if resolved
        .states
        .iter()
        .any(|s| matches!(s, ParamState::Tied(_)))
    {
        return Err(Error::MlUnsupported(
            "tied parameters couple nodes: no per-node closed form".into(),
        ));
    }
    check_support(resolved, counts)?;

    // Attribute each observation to the node it passed through, per move.
    let n_nodes = resolved.space.nodes.len();
    let mut node_value_counts: Vec<HashMap<u8, u64>> = vec![HashMap::new(); n_nodes];
    for (outcome, c) in &counts.counts {
        if *c == 0 {
            continue;
        }
        for mv in 0..resolved.space.moves.len() {
            if let Some(ni) = resolved.space.node_for(mv, outcome) {
                *node_value_counts[ni].entry(outcome[mv]).or_insert(0) += c;
            }
        }
    }

    let mut point = vec![Rat::zero(); resolved.n_free()];
    for (ni, node) in resolved.space.nodes.iter().enumerate() {
        let open_slots: Vec<(usize, u8)> = node
            .params
            .iter()
            .filter_map(|&p| match resolved.states[p] {
                ParamState::Free(slot) => Some((slot, resolved.space.params[p].value)),
                _ => None,
            })
            .collect();
        if open_slots.is_empty() {
            continue;
        }
        // Mass left over after the fixed values of this node.
        let mut fixed_mass = Rat::zero();
        let mut open_values: Vec<u8> = Vec::new();
        for &p in &node.params {
            match &resolved.states[p] {
                ParamState::Fixed(v) => fixed_mass += v,
                ParamState::Free(_) | ParamState::Dependent => {
                    open_values.push(resolved.space.params[p].value)
                }
                ParamState::Tied(_) => unreachable!("rejected above"),
                ParamState::Pruned => {}
            }
        }
        let open_total: u64 = open_values
            .iter()
            .map(|v| node_value_counts[ni].get(v).copied().unwrap_or(0))
            .sum();
        if open_total == 0 {
            return Err(Error::MlUnsupported(format!(
                "no observations reach the free node of move {}",
                resolved.space.moves[node.move_idx].name
            )));
        }
        let scale = (Rat::one() - fixed_mass) / Rat::from_integer(open_total.into());
        for (slot, value) in open_slots {
            let c = node_value_counts[ni].get(&value).copied().unwrap_or(0);
            point[slot] = Rat::from_integer(c.into()) * &scale;
        }
    }
    Ok(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::{ConstraintSet, SpaceBuilder};
    use crate::{rat, rint};

    /// One four-valued move, one node: the joint square with parameters
    /// a, b, c and dependent d.
    fn square() -> crate::probspace::ProbabilitySpace {
        let mut bld = SpaceBuilder::new("square");
        let cell = bld.add_move("cell", &[0, 1, 2, 3]);
        bld.categorical_node(cell, &[], &["a", "b", "c", "d"]);
        bld.build()
    }

    fn behavioural() -> crate::probspace::ProbabilitySpace {
        let mut b = SpaceBuilder::new("behavioural");
        let x = b.add_binary_move("x");
        let y = b.add_binary_move("y");
        b.binary_node(x, &[], "p", "p0");
        b.binary_node(y, &[(x, 0)], "q", "q0");
        b.binary_node(y, &[(x, 1)], "r", "r0");
        b.build()
    }

    #[test]
    fn entropy_basics() {
        assert!((entropy(&[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((entropy(&[0.25; 4]).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(entropy(&[-0.1, 1.1]).is_err());
    }

    #[test]
    fn mutual_information_of_a_square_of_x() {
        // x uniform on three values, y = [x is an endpoint]: knowing y
        // resolves x only when it is the middle value.
        let third = rat(1, 3);
        let dist = vec![
            (vec![0, 1], third.clone()),
            (vec![1, 0], third.clone()),
            (vec![2, 1], third.clone()),
        ];
        let mi = mutual_information(&dist, 0, 1).unwrap();
        let expect = 3f64.ln() - (2.0 / 3.0) * 2f64.ln();
        assert!((mi - expect).abs() < 1e-14);
        // Symmetry.
        let mi2 = mutual_information(&dist, 1, 0).unwrap();
        assert!((mi - mi2).abs() < 1e-14);
    }

    #[test]
    fn mutual_information_extremes() {
        // Independent product: zero.
        let dist = vec![
            (vec![0, 0], rat(3, 8)),
            (vec![0, 1], rat(1, 8)),
            (vec![1, 0], rat(3, 8)),
            (vec![1, 1], rat(1, 8)),
        ];
        assert!(mutual_information(&dist, 0, 1).unwrap().abs() < 1e-14);
        // Perfectly correlated (a, 0, 0, 1−a): equals H(x).
        let dist = vec![(vec![0, 0], rat(3, 10)), (vec![1, 1], rat(7, 10))];
        let mi = mutual_information(&dist, 0, 1).unwrap();
        assert!((mi - binary_entropy(0.3)).abs() < 1e-14);
    }

    #[test]
    fn behavioural_mi_matches_generic() {
        let sp = behavioural();
        let rs = sp.resolve(&ConstraintSet::new()).unwrap();
        for (p, q, r) in [(0.5, 0.0, 1.0), (0.3, 0.2, 0.9), (0.8, 0.5, 0.5)] {
            let point = [
                crate::parse_rat(&p.to_string()).unwrap(),
                crate::parse_rat(&q.to_string()).unwrap(),
                crate::parse_rat(&r.to_string()).unwrap(),
            ];
            let dist = rs.joint_distribution(&point).unwrap();
            let generic = mutual_information(&dist, 0, 1).unwrap();
            let closed = behavioural_mutual_information(p, q, r);
            assert!(
                (generic - closed).abs() < 1e-9,
                "MI mismatch at ({p}, {q}, {r}): {generic} vs {closed}"
            );
        }
        // Anti-correlation duplicates the perfect-correlation value.
        for p in [0.2, 0.5, 0.66] {
            let a = behavioural_mutual_information(p, 0.0, 1.0);
            let b = behavioural_mutual_information(p, 1.0, 0.0);
            assert!((a - b).abs() < 1e-12);
            assert!((a - binary_entropy(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_from_joint_tables() {
        let dist = vec![(vec![0, 0], rat(1, 2)), (vec![1, 1], rat(1, 2))];
        assert!((correlation(&dist, 0, 1).unwrap() - 1.0).abs() < 1e-15);
        let product = vec![
            (vec![0, 0], rat(1, 4)),
            (vec![0, 1], rat(1, 4)),
            (vec![1, 0], rat(1, 4)),
            (vec![1, 1], rat(1, 4)),
        ];
        assert!(correlation(&product, 0, 1).unwrap().abs() < 1e-15);
        let degenerate = vec![(vec![0, 0], rat(1, 2)), (vec![0, 1], rat(1, 2))];
        assert!(correlation(&degenerate, 0, 1).is_err());
    }

    #[test]
    fn fisher_of_the_constrained_pair() {
        // b = c = 0 leaves one free parameter with F = 1/(a(1−a)).
        let sp = square();
        let rs = sp
            .resolve(&ConstraintSet::new().fix("b", rint(0)).fix("c", rint(0)))
            .unwrap();
        assert_eq!(rs.free_names(), vec!["a"]);
        for a in [rat(1, 2), rat(3, 10), rat(9, 10), rat(1, 7)] {
            let f = fisher_information(&rs, &[a.clone()]).unwrap();
            let expect = rint(1) / (&a * (rint(1) - &a));
            assert_eq!(f.get(0, 0), &expect);
        }
        // Boundary: zero-probability surviving outcome.
        assert!(matches!(
            fisher_information(&rs, &[rint(1)]),
            Err(Error::SingularFisher(_))
        ));
    }

    #[test]
    fn fisher_of_the_full_square() {
        let sp = square();
        let rs = sp.resolve(&ConstraintSet::new()).unwrap();
        let quarter = rat(1, 4);
        let f = fisher_information(&rs, &[quarter.clone(), quarter.clone(), quarter]).unwrap();
        // At the uniform point: diagonal 1/p + 1/d = 8, off-diagonal 1/d = 4.
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { rint(8) } else { rint(4) };
                assert_eq!(f.get(i, j), &expect, "entry ({i}, {j})");
            }
        }
    }

    #[test]
    fn ml_estimates_are_frequencies() {
        let sp = square();
        let rs = sp.resolve(&ConstraintSet::new()).unwrap();
        let counts = CountVector::new(vec![
            (vec![0], 2),
            (vec![1], 3),
            (vec![2], 1),
            (vec![3], 4),
        ]);
        let est = ml_estimate(&rs, &counts).unwrap();
        assert_eq!(est, vec![rat(2, 10), rat(3, 10), rat(1, 10)]);
        // The likelihood gradient vanishes exactly at the estimate.
        let grad = log_likelihood_gradient(&rs, &counts, &est).unwrap();
        assert!(grad.iter().all(|g| g.is_zero()));

        // Constrained pair: a* = n_a / n.
        let rs = sp
            .resolve(&ConstraintSet::new().fix("b", rint(0)).fix("c", rint(0)))
            .unwrap();
        let counts = CountVector::new(vec![(vec![0], 3), (vec![3], 7)]);
        assert_eq!(ml_estimate(&rs, &counts).unwrap(), vec![rat(3, 10)]);
        // An observation of a pruned outcome is rejected.
        let bad = CountVector::new(vec![(vec![0], 3), (vec![1], 1), (vec![3], 6)]);
        assert!(matches!(
            ml_estimate(&rs, &bad),
            Err(Error::CountOnPrunedEvent(_))
        ));
    }

    #[test]
    fn ml_on_sequential_nodes() {
        let sp = behavioural();
        let rs = sp.resolve(&ConstraintSet::new()).unwrap();
        let counts = CountVector::new(vec![
            (vec![0, 0], 30),
            (vec![0, 1], 10),
            (vec![1, 0], 20),
            (vec![1, 1], 40),
        ]);
        let est = ml_estimate(&rs, &counts).unwrap();
        // p* = 60/100, q* = 10/40, r* = 40/60.
        assert_eq!(est, vec![rat(3, 5), rat(1, 4), rat(2, 3)]);
        let grad = log_likelihood_gradient(&rs, &counts, &est).unwrap();
        assert!(grad.iter().all(|g| g.is_zero()));
    }

    #[test]
    fn fisher_positive_semidefinite_spot_check() {
        let sp = behavioural();
        let rs = sp.resolve(&ConstraintSet::new()).unwrap();
        let f = fisher_information(&rs, &[rat(1, 3), rat(1, 4), rat(2, 3)])
            .unwrap()
            .to_f64();
        // Leading principal minors of a PSD (here PD) matrix are positive.
        let m1 = f[0][0];
        let m2 = f[0][0] * f[1][1] - f[0][1] * f[1][0];
        let m3 = f[0][0] * (f[1][1] * f[2][2] - f[1][2] * f[2][1])
            - f[0][1] * (f[1][0] * f[2][2] - f[1][2] * f[2][0])
            + f[0][2] * (f[1][0] * f[2][1] - f[1][1] * f[2][0]);
        assert!(m1 > 0.0 && m2 > 0.0 && m3 > 0.0);
    }
}
