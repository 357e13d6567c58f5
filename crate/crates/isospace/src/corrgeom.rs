//! Correlation geometry of a binary pair: the behavioural and mixed
//! correlation formulas, the r± surfaces that realise a prescribed
//! correlation, their permissible regions, and the Hotelling decorrelating
//! transform.
//!
//! Conventions: `x` is drawn first with `P(x=1) = p`; `y` follows with
//! `P(y=1 | x=0) = q` and `P(y=1 | x=1) = r`. In the mixed parameterisation
//! a pure plan is a pair (response to x=0, response to x=1), with `β1` the
//! weight of the copying plan `y=x`, `β2` of the inverting plan `y=1−x`,
//! `β3` of the constant plan `y=1`, and the remainder on `y=0`.

use crate::Error;

/// Pearson correlation of the behavioural parameterisation `(p, q, r)`.
pub fn rho_behavioural(p: f64, q: f64, r: f64) -> Result<f64, Error> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DegenerateMarginal(format!(
            "x marginal degenerate at p = {p}"
        )));
    }
    let ybar = q + p * (r - q);
    let vy = ybar * (1.0 - ybar);
    if vy <= 0.0 {
        return Err(Error::DegenerateMarginal(format!(
            "y marginal degenerate at <y> = {ybar}"
        )));
    }
    Ok((p * (1.0 - p)).sqrt() * (r - q) / vy.sqrt())
}

/// Pearson correlation of the mixed parameterisation `(α1; β1, β2, β3)`.
pub fn rho_mixed(a1: f64, b1: f64, b2: f64, b3: f64) -> Result<f64, Error> {
    if !(a1 > 0.0 && a1 < 1.0) {
        return Err(Error::DegenerateMarginal(format!(
            "x marginal degenerate at α1 = {a1}"
        )));
    }
    let ybar = b2 + b3 + a1 * (b1 - b2);
    let vy = ybar * (1.0 - ybar);
    if vy <= 0.0 {
        return Err(Error::DegenerateMarginal(format!(
            "y marginal degenerate at <y> = {ybar}"
        )));
    }
    Ok((a1 * (1.0 - a1)).sqrt() * (b1 - b2) / vy.sqrt())
}

/// The two r-surfaces solving `rho_behavioural(p, q, r) = ρ` for `r`.
///
/// Values outside `[0, 1]` are legal outputs — they signal that the
/// correlation is not realisable at `(p, q)`; test with [`in_range`].
pub fn r_pm(p: f64, q: f64, rho: f64, plus: bool) -> f64 {
    let rho2 = rho * rho;
    let disc = rho2 + 4.0 * q * (1.0 - q) * (1.0 - p) / p;
    let root = rho * disc.max(0.0).sqrt();
    let num = rho2 - 2.0 * q * (1.0 - p) * (rho2 - 1.0) + if plus { root } else { -root };
    num / (2.0 * (1.0 + p * (rho2 - 1.0)))
}

/// The upper branch — the one the solver sweeps.
pub fn r_plus(p: f64, q: f64, rho: f64) -> f64 {
    r_pm(p, q, rho, true)
}

/// The lower branch, exported for completeness and testing.
pub fn r_minus(p: f64, q: f64, rho: f64) -> f64 {
    r_pm(p, q, rho, false)
}

/// Is a computed `r` a valid conditional probability?
pub fn in_range(r: f64) -> bool {
    (0.0..=1.0).contains(&r)
}

/// The permissible region of the `(p, q)` square for a given correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QBound {
    /// ρ = 0: every `(p, q)` admits `r = q`.
    EntireSquare,
    /// ρ > 0: permissible iff `q ≤ bound`.
    Upper(f64),
    /// ρ < 0: permissible iff `q ≥ bound`.
    Lower(f64),
}

/// Boundary of the region where `r_plus(p, q, ρ) ∈ [0, 1]`.
pub fn permissible_q_bound(p: f64, rho: f64) -> QBound {
    if rho == 0.0 {
        QBound::EntireSquare
    } else if rho > 0.0 {
        QBound::Upper(p / (p + rho * rho / (1.0 - rho * rho)))
    } else {
        let rho2 = rho * rho;
        QBound::Lower(1.0 / (1.0 + p * (1.0 - rho2) / rho2))
    }
}

/// Discrete Hotelling transform: map independent `(u, v)` to a pair with
/// correlation ρ. At ρ = ±1 the map is singular and `y = ±u` regardless of
/// `v`.
pub fn hotelling(u: f64, v: f64, rho: f64) -> (f64, f64) {
    (u, rho * u + (1.0 - rho * rho).max(0.0).sqrt() * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn behavioural_correlation_endpoints() {
        assert!((rho_behavioural(0.5, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((rho_behavioural(0.5, 1.0, 0.0).unwrap() + 1.0).abs() < 1e-12);
        for p in [0.1, 0.35, 0.8] {
            for qr in [0.2, 0.5, 0.9] {
                assert!(rho_behavioural(p, qr, qr).unwrap().abs() < 1e-15);
            }
        }
        assert!(rho_behavioural(0.0, 0.2, 0.8).is_err());
        assert!(rho_behavioural(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn mixed_correlation_endpoints() {
        assert!((rho_mixed(0.4, 1.0, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((rho_mixed(0.4, 0.0, 1.0, 0.0).unwrap() + 1.0).abs() < 1e-12);
        assert!(rho_mixed(0.7, 0.3, 0.3, 0.2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn r_surfaces_special_values() {
        for p in [0.2, 0.5, 0.77] {
            for q in [0.0, 0.3, 1.0] {
                assert!((r_plus(p, q, 0.0) - q).abs() < 1e-12);
                assert!((r_minus(p, q, 0.0) - q).abs() < 1e-12);
            }
        }
        assert!((r_plus(0.5, 0.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((r_plus(0.25, 0.0, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_through_r_plus() {
        let mut s = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut tried = 0;
        while tried < 500 {
            let (p, q, rho) = (next(), next(), 2.0 * next() - 1.0);
            if p < 1e-3 || p > 1.0 - 1e-3 {
                continue;
            }
            let r = r_plus(p, q, rho);
            if !in_range(r) {
                continue;
            }
            if let Ok(back) = rho_behavioural(p, q, r) {
                assert!(
                    (back - rho).abs() < 1e-8,
                    "round trip failed at ({p}, {q}, {rho}): r = {r}, back = {back}"
                );
                tried += 1;
            }
        }
    }

    #[test]
    fn permissible_bounds() {
        match permissible_q_bound(0.5, 0.5) {
            QBound::Upper(b) => assert!((b - 0.6).abs() < 1e-12),
            other => panic!("expected an upper bound, got {other:?}"),
        }
        assert_eq!(permissible_q_bound(0.3, 0.0), QBound::EntireSquare);
        // ρ → 1⁻ collapses the region to the q = 0 line.
        match permissible_q_bound(0.5, 0.999999) {
            QBound::Upper(b) => assert!(b < 1e-5),
            other => panic!("expected an upper bound, got {other:?}"),
        }
        // The bound separates realisable from unrealisable r values.
        let (p, rho) = (0.4, 0.6);
        if let QBound::Upper(b) = permissible_q_bound(p, rho) {
            assert!(in_range(r_plus(p, b - 1e-6, rho)));
            assert!(!in_range(r_plus(p, b + 1e-3, rho)));
        } else {
            panic!("expected an upper bound");
        }
        if let QBound::Lower(b) = permissible_q_bound(0.7, -0.5) {
            assert!(in_range(r_plus(0.7, b + 1e-6, -0.5)));
            assert!(!in_range(r_plus(0.7, b - 1e-3, -0.5)));
        } else {
            panic!("expected a lower bound");
        }
    }

    #[test]
    fn in_range_is_the_unit_interval() {
        assert!(in_range(0.0) && in_range(1.0) && in_range(0.5));
        assert!(!in_range(1.0001) && !in_range(-1e-9));
    }

    #[test]
    fn hotelling_special_cases() {
        assert_eq!(hotelling(1.0, 1.0, 0.0), (1.0, 1.0));
        assert_eq!(hotelling(0.7, -2.0, 1.0), (0.7, 0.7));
        let (x, y) = hotelling(1.0, 1.0, 0.6);
        assert!((x - 1.0).abs() < 1e-15 && (y - 1.4).abs() < 1e-12);
    }
}
