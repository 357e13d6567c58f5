//! Exact multivariate polynomials over move indicators and free parameters.
//!
//! [`MultilinearPolynomial`] is the universal carrier for payoffs and
//! expectations: coefficients are arbitrary-precision rationals, and the
//! variables are either *move indicators* `[m = v]` (with the idempotent
//! algebra of indicators: `[m=v]·[m=v] = [m=v]`, `[m=v]·[m=w] = 0` for
//! `v ≠ w`) or *free probability parameters* of a resolved space.
//!
//! # Design notes
//!
//! - Binary moves use the single indicator `[m=1]`, printed as the bare move
//!   name, so payoffs read exactly like their textbook forms (`3−2x−y+4xy`);
//!   `1−x` is the value-0 indicator. Larger domains use one indicator per
//!   value with the smallest value's indicator eliminated
//!   (`[m=v0] = 1 − Σ others`), which keeps representations canonical and
//!   makes equality testing meaningful.
//! - Every payoff or probability polynomial built by this crate is
//!   multilinear by construction: indicators square to themselves and each
//!   conditional parameter enters a path product at most once. The type
//!   nevertheless stores general exponents so that analysis code can form
//!   exact products such as `Var(x)·Var(y)` when proving that a constrained
//!   gradient vanishes identically, without leaving rational arithmetic.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::{rat_to_f64, Rat};

/// A polynomial variable: a move indicator or a free parameter slot.
///
/// Parameter indices refer to the free-parameter ordering of the
/// [`crate::probspace::ResolvedSpace`] the polynomial was built against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// Indicator `[move = value]`, 1 on assignments where the move takes the
    /// value and 0 otherwise.
    Move { mv: u32, value: u8 },
    /// Free probability parameter (slot index in a resolved space).
    Param(u32),
}

/// Product of variables with positive exponents, kept sorted by variable.
type Monomial = Vec<(Var, u32)>;

/// Merge two sorted monomials; `None` means the product is identically zero
/// (two different indicators of the same move).
fn mul_monomials(a: &Monomial, b: &Monomial) -> Option<Monomial> {
    let mut out: Monomial = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j == b.len() || (i < a.len() && a[i].0 <= b[j].0);
        let (var, exp) = if take_a {
            let e = a[i];
            i += 1;
            e
        } else {
            let e = b[j];
            j += 1;
            e
        };
        match out.last_mut() {
            Some((last, last_exp)) if *last == var => {
                // Same variable twice: indicators are idempotent, parameters
                // accumulate exponent.
                match var {
                    Var::Move { .. } => {}
                    Var::Param(_) => *last_exp += exp,
                }
            }
            Some((Var::Move { mv: m1, .. }, _)) => {
                if let Var::Move { mv: m2, .. } = var {
                    if *m1 == m2 {
                        // Different values of one move cannot co-occur.
                        return None;
                    }
                }
                out.push((var, exp));
            }
            _ => out.push((var, exp)),
        }
    }
    Some(out)
}

/// Exact polynomial with rational coefficients over [`Var`]s.
///
/// All carriers of payoffs and expectations in this crate are multilinear
/// (see the module notes); [`MultilinearPolynomial::is_multilinear`] checks
/// the invariant where tests want to assert it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultilinearPolynomial {
    terms: BTreeMap<Monomial, Rat>,
}

impl MultilinearPolynomial {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The constant polynomial `1`.
    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    /// A constant polynomial.
    pub fn constant(c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Self { terms }
    }

    /// A constant integer polynomial.
    pub fn int(n: i64) -> Self {
        Self::constant(crate::rint(n))
    }

    /// The polynomial consisting of the single variable `v`.
    pub fn var(v: Var) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(v, 1)], Rat::one());
        Self { terms }
    }

    /// The free-parameter variable at slot `i`.
    pub fn param(i: usize) -> Self {
        Self::var(Var::Param(i as u32))
    }

    /// The canonical indicator polynomial `[mv = value]` for a move with the
    /// given domain: the smallest domain value's indicator is eliminated via
    /// `[mv=v0] = 1 − Σ others`, binary moves therefore use the single
    /// variable `[mv=1]`.
    pub fn move_value(mv: usize, value: u8, domain: &[u8]) -> Self {
        let v0 = *domain.iter().min().expect("nonempty domain");
        if value != v0 {
            return Self::var(Var::Move { mv: mv as u32, value });
        }
        let mut p = Self::one();
        for &v in domain.iter().filter(|&&v| v != v0) {
            p = p - Self::var(Var::Move { mv: mv as u32, value: v });
        }
        p
    }

    /// The move's integer value as a polynomial: `Σ v·[mv=v]` in canonical
    /// form. For a binary move this is just the variable `[mv=1]`.
    pub fn move_linear(mv: usize, domain: &[u8]) -> Self {
        let v0 = *domain.iter().min().expect("nonempty domain") as i64;
        let mut p = Self::int(v0);
        for &v in domain.iter().filter(|&&v| i64::from(v) != v0) {
            let ind = Self::var(Var::Move { mv: mv as u32, value: v });
            p = p + ind.scale(&crate::rint(i64::from(v) - v0));
        }
        p
    }

    fn insert_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    /// Multiply by a scalar.
    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    /// `self^n` by repeated multiplication (used only by analysis code).
    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(c)` iff the polynomial is the constant `c`.
    pub fn as_constant(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// All variables appearing with nonzero coefficient.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms
            .keys()
            .flat_map(|m| m.iter().map(|&(v, _)| v))
            .collect()
    }

    /// True iff no variable carries an exponent above 1.
    pub fn is_multilinear(&self) -> bool {
        self.terms
            .keys()
            .all(|m| m.iter().all(|&(_, e)| e <= 1))
    }

    /// Exact partial derivative with respect to `v`.
    pub fn partial(&self, v: Var) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if let Some(pos) = m.iter().position(|&(w, _)| w == v) {
                let (_, e) = m[pos];
                let mut reduced = m.clone();
                if e == 1 {
                    reduced.remove(pos);
                } else {
                    reduced[pos].1 = e - 1;
                }
                out.insert_term(reduced, c * crate::rint(i64::from(e)));
            }
        }
        out
    }

    /// Replace `v` everywhere by the polynomial `rep`.
    pub fn substitute(&self, v: Var, rep: &Self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            match m.iter().position(|&(w, _)| w == v) {
                None => out.insert_term(m.clone(), c.clone()),
                Some(pos) => {
                    let (_, e) = m[pos];
                    let mut rest = m.clone();
                    rest.remove(pos);
                    let rest_poly = Self {
                        terms: BTreeMap::from([(rest, c.clone())]),
                    };
                    out += &(&rest_poly * &rep.pow(e));
                }
            }
        }
        out
    }

    /// Exact evaluation with a value per variable.
    pub fn eval_with(&self, value_of: &mut dyn FnMut(Var) -> Rat) -> Rat {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for &(v, e) in m {
                let val = value_of(v);
                for _ in 0..e {
                    term *= &val;
                }
            }
            acc += term;
        }
        acc
    }

    /// Exact evaluation of a parameter polynomial at a free-parameter point.
    /// Panics if the polynomial mentions move indicators.
    pub fn eval_params(&self, point: &[Rat]) -> Rat {
        self.clone().eval_with(&mut |v| match v {
            Var::Param(i) => point[i as usize].clone(),
            Var::Move { .. } => panic!("move indicator in parameter polynomial"),
        })
    }

    /// Floating-point evaluation at a free-parameter point.
    pub fn eval_params_f64(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut term = rat_to_f64(c);
            for &(v, e) in m {
                match v {
                    Var::Param(i) => term *= point[i as usize].powi(e as i32),
                    Var::Move { .. } => panic!("move indicator in parameter polynomial"),
                }
            }
            acc += term;
        }
        acc
    }

    /// Exact evaluation of a payoff polynomial on a full move assignment
    /// (`assignment[mv]` is the value taken by move `mv`).
    pub fn eval_assignment(&self, assignment: &[u8]) -> Rat {
        let mut acc = Rat::zero();
        'terms: for (m, c) in &self.terms {
            for &(v, _) in m {
                match v {
                    Var::Move { mv, value } => {
                        if assignment[mv as usize] != value {
                            continue 'terms;
                        }
                    }
                    Var::Param(_) => panic!("parameter in payoff polynomial"),
                }
            }
            acc += c;
        }
        acc
    }

    /// Renumber move variables (used when a game is reduced and moves are
    /// deleted). The mapping must be injective on the moves present.
    pub fn remap_moves(&self, f: &dyn Fn(u32) -> u32) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut mapped: Monomial = m
                .iter()
                .map(|&(v, e)| match v {
                    Var::Move { mv, value } => (Var::Move { mv: f(mv), value }, e),
                    Var::Param(_) => (v, e),
                })
                .collect();
            mapped.sort();
            out.insert_term(mapped, c.clone());
        }
        out
    }

    /// Number of terms (for tests and size diagnostics).
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Iterate terms as (monomial, coefficient) pairs in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&[(Var, u32)], &Rat)> {
        self.terms.iter().map(|(m, c)| (m.as_slice(), c))
    }

    /// Render with a caller-supplied variable namer, e.g. `3 - 2*p + 3*p*r`.
    pub fn display_with(&self, name_of: &dyn Fn(Var) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let coeff_is_one = abs.is_one();
            if !coeff_is_one || m.is_empty() {
                out.push_str(&format_rat(&abs));
            }
            for (j, &(v, e)) in m.iter().enumerate() {
                if j > 0 || !coeff_is_one {
                    out.push('*');
                }
                out.push_str(&name_of(v));
                if e > 1 {
                    out.push_str(&format!("^{e}"));
                }
            }
        }
        out
    }
}

/// Exact rational rendered as `n` or `n/d`.
pub fn format_rat(x: &Rat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Rational rendered exactly when the denominator is small (≤ 1000), else as
/// 6 significant digits — the convention used by all table/report output.
pub fn format_rat_human(x: &Rat) -> String {
    if x.denom() <= &num_bigint::BigInt::from(1000) {
        format_rat(x)
    } else {
        format_sig6(rat_to_f64(x))
    }
}

/// Render a float with 6 significant digits.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let s = format!("{v:.*e}", 5);
    // Re-parse the exponent form into plain decimal where reasonable.
    let parsed: f64 = s.parse().unwrap_or(v);
    let mag = parsed.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let t = format!("{parsed:.*}", decimals);
        // Trim trailing zeros but keep at least one digit after the point.
        let t = t.trim_end_matches('0').trim_end_matches('.').to_string();
        if t == "-0" {
            "0".to_string()
        } else {
            t
        }
    } else {
        s
    }
}

impl Add for &MultilinearPolynomial {
    type Output = MultilinearPolynomial;
    fn add(self, rhs: Self) -> MultilinearPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert_term(m.clone(), c.clone());
        }
        out
    }
}

impl Add for MultilinearPolynomial {
    type Output = MultilinearPolynomial;
    fn add(self, rhs: Self) -> MultilinearPolynomial {
        &self + &rhs
    }
}

impl AddAssign<&MultilinearPolynomial> for MultilinearPolynomial {
    fn add_assign(&mut self, rhs: &MultilinearPolynomial) {
        for (m, c) in &rhs.terms {
            self.insert_term(m.clone(), c.clone());
        }
    }
}

impl Sub for &MultilinearPolynomial {
    type Output = MultilinearPolynomial;
    fn sub(self, rhs: Self) -> MultilinearPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Sub for MultilinearPolynomial {
    type Output = MultilinearPolynomial;
    fn sub(self, rhs: Self) -> MultilinearPolynomial {
        &self - &rhs
    }
}

impl Neg for MultilinearPolynomial {
    type Output = MultilinearPolynomial;
    fn neg(self) -> MultilinearPolynomial {
        MultilinearPolynomial::zero() - self
    }
}

impl Mul for &MultilinearPolynomial {
    type Output = MultilinearPolynomial;
    fn mul(self, rhs: Self) -> MultilinearPolynomial {
        let mut out = MultilinearPolynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                if let Some(m) = mul_monomials(ma, mb) {
                    out.insert_term(m, ca * cb);
                }
            }
        }
        out
    }
}

impl Mul for MultilinearPolynomial {
    type Output = MultilinearPolynomial;
    fn mul(self, rhs: Self) -> MultilinearPolynomial {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, rint};

    fn x() -> MultilinearPolynomial {
        MultilinearPolynomial::var(Var::Move { mv: 0, value: 1 })
    }
    fn y() -> MultilinearPolynomial {
        MultilinearPolynomial::var(Var::Move { mv: 1, value: 1 })
    }

    #[test]
    fn indicator_idempotence_and_annihilation() {
        let xx = &x() * &x();
        assert_eq!(xx, x(), "x^2 = x for binary moves");
        let a = MultilinearPolynomial::var(Var::Move { mv: 2, value: 1 });
        let b = MultilinearPolynomial::var(Var::Move { mv: 2, value: 2 });
        assert!((&a * &b).is_zero(), "[m=1][m=2] = 0");
    }

    #[test]
    fn textbook_payoff_arithmetic() {
        // 3 - 2x - y + 4xy evaluated on the four binary assignments.
        let p = MultilinearPolynomial::int(3) - x().scale(&rint(2)) - y()
            + (&x() * &y()).scale(&rint(4));
        let cases = [((0, 0), 3), ((0, 1), 2), ((1, 0), 1), ((1, 1), 4)];
        for ((a, b), want) in cases {
            assert_eq!(p.eval_assignment(&[a, b]), rint(want));
        }
    }

    #[test]
    fn categorical_indicators_sum_to_one() {
        let domain = [0u8, 1, 2, 3];
        let mut sum = MultilinearPolynomial::zero();
        for &v in &domain {
            sum += &MultilinearPolynomial::move_value(0, v, &domain);
        }
        assert_eq!(sum, MultilinearPolynomial::one());
    }

    #[test]
    fn move_linear_matches_values() {
        let domain = [1u8, 2, 3];
        let p = MultilinearPolynomial::move_linear(0, &domain);
        for &v in &domain {
            assert_eq!(p.eval_assignment(&[v]), rint(i64::from(v)));
        }
    }

    #[test]
    fn substitution_reduces_via_idempotence() {
        // Trust-style reduction: 1 + 2x - x*y with y := 3(1-x) + 2x gives
        // 1 + 2x - x*(3 - x) = 1 + 2x - 2x after x^2 = x.
        let yv = Var::Move { mv: 1, value: 1 };
        let p = MultilinearPolynomial::int(1) + x().scale(&rint(2))
            - (&x() * &MultilinearPolynomial::var(yv));
        let rep = MultilinearPolynomial::int(3) - x().scale(&rint(3)) + x().scale(&rint(2));
        let q = p.substitute(yv, &rep);
        let expect = MultilinearPolynomial::int(1);
        assert_eq!(q, expect);
    }

    #[test]
    fn partials_are_exact() {
        // d/dp (3 - 2p - q + pq + 3pr) = -2 + q + 3r
        let p = MultilinearPolynomial::param(0);
        let q = MultilinearPolynomial::param(1);
        let r = MultilinearPolynomial::param(2);
        let f = MultilinearPolynomial::int(3) - p.scale(&rint(2)) - q.clone()
            + (&p * &q)
            + (&p * &r).scale(&rint(3));
        let df = f.partial(Var::Param(0));
        let want = MultilinearPolynomial::int(-2) + q + r.scale(&rint(3));
        assert_eq!(df, want);
        assert_eq!(f.partial(Var::Param(1)), MultilinearPolynomial::int(-1) + p);
    }

    #[test]
    fn general_exponents_for_analysis_products() {
        let p = MultilinearPolynomial::param(0);
        let sq = &p * &p;
        assert!(!sq.is_multilinear());
        assert_eq!(sq.eval_params(&[rat(1, 2)]), rat(1, 4));
        assert_eq!(
            sq.partial(Var::Param(0)),
            p.scale(&rint(2)),
            "d(p^2) = 2p"
        );
    }

    #[test]
    fn display_matches_convention() {
        let p = MultilinearPolynomial::param(0);
        let r = MultilinearPolynomial::param(2);
        let f = MultilinearPolynomial::int(3) - p.scale(&rint(2)) + (&p * &r).scale(&rint(3));
        let names = |v: Var| match v {
            Var::Param(0) => "p".to_string(),
            Var::Param(2) => "r".to_string(),
            _ => "?".to_string(),
        };
        assert_eq!(f.display_with(&names), "3 - 2*p + 3*p*r");
    }

    #[test]
    fn human_formatting() {
        assert_eq!(format_rat_human(&rat(8, 3)), "8/3");
        assert_eq!(format_rat_human(&rat(5, 2)), "5/2");
        assert_eq!(format_sig6(1.0303191), "1.03032");
        assert_eq!(format_sig6(3.0), "3");
    }
}
