//! Checkers for the hypotheses behind the dimension formulas:
//! separation, positivity, bunching, metric bunching, the admissible-q
//! thresholds, and the existence inequality for good Bernoulli vectors.
//!
//! Strict inequalities are all evaluated in log space with a slack of
//! 1e-12: a margin has to clear the slack before the condition counts as
//! satisfied, so floating-point ties never pass.

use crate::dimension::{bernoulli_weights, lq_exponent};
use crate::ifs::{compose, invariant_ball, singular_values, IfsSystem};
use crate::numeric as nm;
use crate::{Error, Result};
use alloc::vec::Vec;

const STRICT_SLACK: f64 = 1e-12;

/// Outcome of the cover-based disjointness test.
///
/// `Certified` comes with a positive lower bound for the distance between
/// distinct first-level pieces of the attractor. The test never refutes
/// separation: covers that touch only make the outcome `Undetermined`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeparationStatus {
    Certified,
    Undetermined,
}

#[derive(Debug, Clone, Copy)]
pub struct SeparationCertificate {
    pub status: SeparationStatus,
    /// Lower bound for the separation gap when certified.
    pub gap: f64,
    pub depth: u32,
}

/// Extended-real threshold for the admissible range of `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QThreshold {
    Value(f64),
    Infinite,
    /// The condition already fails at `q = 2`.
    NoneBelowTwo,
}

/// Everything `check` learned about one system, in one place.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub positivity: bool,
    pub separation: SeparationCertificate,
    pub gamma_used: f64,
    pub q0_bunching: QThreshold,
    pub q0_metric: Option<QThreshold>,
    pub per_map_margins: Vec<f64>,
}

/// Strict positivity of every matrix entry.
pub fn check_positivity(ifs: &IfsSystem) -> bool {
    ifs.maps()
        .iter()
        .all(|m| m.linear().iter().flatten().all(|&e| e > 0.0))
}

/// One node of the pairwise cover search: two balls covering parts of
/// distinct first-level cylinders, with the slack (ball distance minus
/// ball radii) that lower-bounds every descendant pair.
struct PairNode {
    slack: f64,
    level: u32,
    u: Vec<u8>,
    v: Vec<u8>,
}

fn ball_of(ifs: &IfsSystem, w: &[u8], center: &[f64; 2], radius: f64) -> Result<([f64; 2], f64)> {
    let t = compose(ifs, w)?;
    let c = t.apply(center);
    let a1 = singular_values(t.linear())?.alpha1;
    Ok((c, a1 * radius))
}

fn pair_slack(
    ifs: &IfsSystem,
    u: &[u8],
    v: &[u8],
    center: &[f64; 2],
    radius: f64,
) -> Result<f64> {
    let (cu, ru) = ball_of(ifs, u, center, radius)?;
    let (cv, rv) = ball_of(ifs, v, center, radius)?;
    Ok(nm::hypot(cu[0] - cv[0], cu[1] - cv[1]) - ru - rv)
}

const PAIR_BUDGET: usize = 2_000_000;

/// Cover-based disjointness certificate for the first-level pieces.
///
/// Starting from the ball pairs covering `(T_i(F), T_j(F))` for `i != j`,
/// the search always refines the pair with the smallest slack: a node's
/// slack lower-bounds the slack of everything below it, so once the
/// smallest frontier element sits at the depth limit its slack is the
/// final bound. A positive bound certifies disjointness with that gap;
/// a nonpositive one at the limit leaves the question open (touching
/// covers never prove intersection).
pub fn check_separation(ifs: &IfsSystem, depth: u32) -> Result<SeparationCertificate> {
    if depth < 1 {
        return Err(Error::input("separation check needs depth >= 1"));
    }
    let (center, radius) = invariant_ball(ifs)?;
    let n = ifs.len() as u8;
    if n == 1 {
        return Ok(SeparationCertificate {
            status: SeparationStatus::Certified,
            gap: f64::INFINITY,
            depth,
        });
    }
    let mut frontier: Vec<PairNode> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (u, v) = (alloc::vec![i], alloc::vec![j]);
            frontier.push(PairNode {
                slack: pair_slack(ifs, &u, &v, &center, radius)?,
                level: 1,
                u,
                v,
            });
        }
    }
    loop {
        let (mut min_at, mut min_slack) = (0usize, f64::INFINITY);
        for (idx, node) in frontier.iter().enumerate() {
            if node.slack < min_slack {
                min_slack = node.slack;
                min_at = idx;
            }
        }
        let node = &frontier[min_at];
        if node.level >= depth {
            return Ok(if min_slack > 0.0 {
                SeparationCertificate {
                    status: SeparationStatus::Certified,
                    gap: min_slack,
                    depth,
                }
            } else {
                SeparationCertificate {
                    status: SeparationStatus::Undetermined,
                    gap: 0.0,
                    depth,
                }
            });
        }
        if frontier.len() + (n as usize) * (n as usize) > PAIR_BUDGET {
            return Err(Error::resource(
                "separation pair tree exceeds the enumeration budget",
            ));
        }
        let node = frontier.swap_remove(min_at);
        for a in 0..n {
            for b in 0..n {
                let mut u = node.u.clone();
                u.push(a);
                let mut v = node.v.clone();
                v.push(b);
                frontier.push(PairNode {
                    slack: pair_slack(ifs, &u, &v, &center, radius)?,
                    level: node.level + 1,
                    u,
                    v,
                });
            }
        }
    }
}

/// Per-map margins of the bunching inequality
/// `gamma alpha1(i)^(q d) < alpha2(i)^((q-1) d)`, in log:
/// `(q-1) d ln alpha2(i) - q d ln alpha1(i) - ln gamma`.
pub fn bunching_margins(ifs: &IfsSystem, gamma: f64, d: f64, q: f64) -> Result<Vec<f64>> {
    if gamma < 1.0 {
        return Err(Error::input("gamma must be at least 1"));
    }
    if !(d > 0.0 && d <= 2.0) {
        return Err(Error::input("d must lie in (0, 2]"));
    }
    ifs.maps()
        .iter()
        .map(|m| {
            let sv = singular_values(m.linear())?;
            Ok((q - 1.0) * d * nm::ln(sv.alpha2) - q * d * nm::ln(sv.alpha1) - nm::ln(gamma))
        })
        .collect()
}

/// Whether every map satisfies the `(q-1)`-bunching inequality strictly.
pub fn check_bunching(ifs: &IfsSystem, gamma: f64, d: f64, q: f64) -> Result<(bool, Vec<f64>)> {
    let margins = bunching_margins(ifs, gamma, d, q)?;
    let pass = margins.iter().all(|&m| m > STRICT_SLACK);
    Ok((pass, margins))
}

/// Per-map margins of the metric-bunching inequality
/// `gamma p(i)^q < alpha2(i)^((q-1) d(q))`.
pub fn check_metric_bunching(
    ifs: &IfsSystem,
    gamma: f64,
    dq: f64,
    p: &[f64],
    q: f64,
) -> Result<(bool, Vec<f64>)> {
    if gamma < 1.0 {
        return Err(Error::input("gamma must be at least 1"));
    }
    if p.len() != ifs.len() {
        return Err(Error::input("probability vector length mismatch"));
    }
    let margins: Vec<f64> = ifs
        .maps()
        .iter()
        .zip(p)
        .map(|(m, &pi)| {
            let sv = singular_values(m.linear())?;
            Ok((q - 1.0) * dq * nm::ln(sv.alpha2) - q * nm::ln(pi) - nm::ln(gamma))
        })
        .collect::<Result<_>>()?;
    let pass = margins.iter().all(|&m| m > STRICT_SLACK);
    Ok((pass, margins))
}

/// Supremum of the `q` range admitted by the bunching condition, in
/// closed form: the margin is affine in `q`, so each map contributes
/// `q_i = (-d ln alpha2(i) - ln gamma) / (d ln(alpha1(i)/alpha2(i)))`
/// and the threshold is the minimum. Conformal maps (`alpha1 = alpha2`)
/// contribute no constraint when their inequality holds for all `q`.
pub fn q0_bunching(ifs: &IfsSystem, gamma: f64, d: f64) -> Result<QThreshold> {
    if gamma < 1.0 {
        return Err(Error::input("gamma must be at least 1"));
    }
    if !(d > 0.0 && d <= 2.0) {
        return Err(Error::input("d must lie in (0, 2]"));
    }
    let mut q0 = f64::INFINITY;
    for m in ifs.maps() {
        let sv = singular_values(m.linear())?;
        let slope = d * nm::ln(sv.alpha1 / sv.alpha2);
        let intercept = -d * nm::ln(sv.alpha2) - nm::ln(gamma);
        if slope <= 1e-12 {
            // Conformal map (alpha1 = alpha2 up to rounding): the margin
            // is constant in q. A positive constant admits every q, a
            // nonpositive one admits none.
            if intercept <= STRICT_SLACK {
                return Ok(QThreshold::NoneBelowTwo);
            }
            continue;
        }
        q0 = q0.min(intercept / slope);
    }
    if q0 == f64::INFINITY {
        Ok(QThreshold::Infinite)
    } else if q0 < 2.0 {
        Ok(QThreshold::NoneBelowTwo)
    } else {
        Ok(QThreshold::Value(q0))
    }
}

const Q_SCAN_CAP: f64 = 64.0;

/// Supremum of the `q` range admitted by metric bunching, found by
/// scanning `q` upward from 2 (unit steps, then bisection across the
/// first failing step). Each probe recomputes `d(q)` at level `k`.
/// Capped at `q = 64`; surviving the cap reports infinity.
pub fn q0_metric_bunching(
    ifs: &IfsSystem,
    gamma: f64,
    p: &[f64],
    k: u32,
    tol: f64,
) -> Result<QThreshold> {
    let weights = bernoulli_weights(p)?;
    let holds = |q: f64| -> Result<bool> {
        let dq = lq_exponent(ifs, &weights, q, k, tol)?.value;
        Ok(check_metric_bunching(ifs, gamma, dq, p, q)?.0)
    };
    if !holds(2.0)? {
        return Ok(QThreshold::NoneBelowTwo);
    }
    let mut lo = 2.0;
    let mut hi = None;
    let mut q = 3.0;
    while q <= Q_SCAN_CAP {
        if holds(q)? {
            lo = q;
        } else {
            hi = Some(q);
            break;
        }
        q += 1.0;
    }
    let Some(mut hi) = hi else {
        return Ok(QThreshold::Infinite);
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(QThreshold::Value(0.5 * (lo + hi)))
}

/// Sums behind the existence argument for good Bernoulli vectors.
#[derive(Debug, Clone, Copy)]
pub struct Prop3Sums {
    /// `sum_i (alpha2(i)^d2 / gamma)^(1/2)`; existence needs `> 1`.
    pub existence_sum: f64,
    /// `sum_i alpha1(i)^d2`, diagnostic.
    pub sum_alpha1_d2: f64,
    /// `sum_i alpha1(i)^d`, diagnostic.
    pub sum_alpha1_d: f64,
}

/// The checkable existence inequality for a Bernoulli vector satisfying
/// metric bunching at `q = 2`: `sum_i (alpha2(i)^d2 / gamma)^(1/2) > 1`.
pub fn prop3_check(ifs: &IfsSystem, gamma: f64, d2: f64, d: f64) -> Result<(bool, Prop3Sums)> {
    if gamma < 1.0 {
        return Err(Error::input("gamma must be at least 1"));
    }
    let mut existence = nm::Kahan::new();
    let mut s1d2 = nm::Kahan::new();
    let mut s1d = nm::Kahan::new();
    for m in ifs.maps() {
        let sv = singular_values(m.linear())?;
        existence.add(nm::exp(0.5 * (d2 * nm::ln(sv.alpha2) - nm::ln(gamma))));
        s1d2.add(nm::powf(sv.alpha1, d2));
        s1d.add(nm::powf(sv.alpha1, d));
    }
    let sums = Prop3Sums {
        existence_sum: existence.value(),
        sum_alpha1_d2: s1d2.value(),
        sum_alpha1_d: s1d.value(),
    };
    Ok((sums.existence_sum > 1.0 + STRICT_SLACK, sums))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ifs::AffineMap;

    #[test]
    fn positivity_cases() {
        let pos = IfsSystem::new(alloc::vec![
            AffineMap::new([[0.6, 0.3], [0.3, 0.3]], [0.0, 0.0]).unwrap()
        ])
        .unwrap();
        assert!(check_positivity(&pos));
        assert!(!check_positivity(&fixtures::diagonal_pair()));
        let neg = IfsSystem::new(alloc::vec![
            AffineMap::new([[0.6, -0.3], [0.3, 0.3]], [0.0, 0.0]).unwrap()
        ])
        .unwrap();
        assert!(!check_positivity(&neg));
    }

    #[test]
    fn separation_cantor_corners() {
        let cert = check_separation(&fixtures::cantor_corners(), 6).unwrap();
        assert_eq!(cert.status, SeparationStatus::Certified);
        // Opposite corners of the two level-1 squares sit sqrt(2)/3 apart;
        // the ball covers converge to that from below.
        let target = core::f64::consts::SQRT_2 / 3.0;
        assert!(cert.gap > 0.25 && cert.gap <= target + 1e-12, "gap {}", cert.gap);
    }

    #[test]
    fn separation_touching_squares_undetermined() {
        let cert = check_separation(&fixtures::overlapping_squares(), 6).unwrap();
        assert_eq!(cert.status, SeparationStatus::Undetermined);
    }

    #[test]
    fn separation_single_map_vacuous() {
        let ifs = IfsSystem::new(alloc::vec![
            AffineMap::new([[0.5, 0.0], [0.0, 0.5]], [0.1, 0.0]).unwrap()
        ])
        .unwrap();
        let cert = check_separation(&ifs, 3).unwrap();
        assert_eq!(cert.status, SeparationStatus::Certified);
        assert_eq!(cert.gap, f64::INFINITY);
    }

    #[test]
    fn separation_gap_monotone_in_depth() {
        let ifs = fixtures::positive_triple();
        let a = check_separation(&ifs, 2).unwrap();
        let b = check_separation(&ifs, 4).unwrap();
        assert_eq!(a.status, SeparationStatus::Certified);
        assert_eq!(b.status, SeparationStatus::Certified);
        assert!(b.gap >= a.gap - 1e-12);
    }

    fn anisotropic(a1: f64, a2: f64) -> IfsSystem {
        IfsSystem::new(alloc::vec![
            AffineMap::new([[a1, 0.0], [0.0, a2]], [0.0, 0.0]).unwrap()
        ])
        .unwrap()
    }

    #[test]
    fn bunching_hand_examples() {
        let ifs = anisotropic(0.3, 0.2);
        assert!(check_bunching(&ifs, 1.0, 0.6, 2.0).unwrap().0);
        assert!(!check_bunching(&ifs, 1.0, 0.6, 5.0).unwrap().0);
        assert!(!check_bunching(&ifs, 2.0, 0.6, 2.0).unwrap().0);
    }

    #[test]
    fn q0_bunching_hand_examples() {
        let ifs = anisotropic(0.3, 0.2);
        let expected = 0.2_f64.ln() / (0.2_f64 / 0.3).ln();
        match q0_bunching(&ifs, 1.0, 0.6).unwrap() {
            QThreshold::Value(q0) => assert!((q0 - expected).abs() < 1e-12),
            other => panic!("expected finite q0, got {other:?}"),
        }
        // d cancels when gamma = 1.
        match q0_bunching(&ifs, 1.0, 0.9).unwrap() {
            QThreshold::Value(q0) => assert!((q0 - expected).abs() < 1e-12),
            other => panic!("expected finite q0, got {other:?}"),
        }
        assert_eq!(
            q0_bunching(&fixtures::cantor_corners(), 1.0, 0.5).unwrap(),
            QThreshold::Infinite
        );
        assert_eq!(
            q0_bunching(&anisotropic(0.3, 0.2), 2.0, 0.6).unwrap(),
            QThreshold::NoneBelowTwo
        );
    }

    #[test]
    fn metric_bunching_similarity_cases() {
        let ifs = fixtures::cantor_corners();
        let d = 2.0_f64.ln() / 3.0_f64.ln();
        let (pass, margins) = check_metric_bunching(&ifs, 1.0, d, &[0.5, 0.5], 2.0).unwrap();
        assert!(pass);
        // 1/4 against (1/3)^d = 1/2: margin is ln 2.
        for m in margins {
            assert!((m - 2.0_f64.ln()).abs() < 1e-12);
        }
        for q in [2.0, 3.0, 5.0, 8.0] {
            assert!(check_metric_bunching(&ifs, 1.0, d, &[0.5, 0.5], q).unwrap().0);
        }
    }

    #[test]
    fn metric_bunching_thin_margin() {
        let ifs = fixtures::cantor_corners();
        let d2 = 0.82_f64.ln() / (1.0_f64 / 3.0).ln();
        let (pass, _) = check_metric_bunching(&ifs, 1.0, d2, &[0.9, 0.1], 2.0).unwrap();
        assert!(pass);
    }

    #[test]
    fn q0_metric_uniform_similarities_infinite() {
        let ifs = fixtures::cantor_corners();
        assert_eq!(
            q0_metric_bunching(&ifs, 1.0, &[0.5, 0.5], 8, 1e-4).unwrap(),
            QThreshold::Infinite
        );
    }

    #[test]
    fn prop3_similarities() {
        let ifs = fixtures::cantor_corners();
        let d2 = 2.0_f64.ln() / 3.0_f64.ln();
        let (ok, sums) = prop3_check(&ifs, 1.0, d2, d2).unwrap();
        assert!(ok);
        assert!((sums.existence_sum - core::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn prop3_single_map_fails() {
        let ifs = anisotropic(0.5, 0.5);
        let (ok, sums) = prop3_check(&ifs, 1.0, 0.5, 0.5).unwrap();
        assert!(!ok);
        assert!((sums.existence_sum - 0.5_f64.powf(0.25)).abs() < 1e-12);
    }
}
