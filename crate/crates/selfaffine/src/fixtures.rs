//! Canonical test systems used across the suite and exposed through the
//! CLI fixture generator.
//!
//! The two strictly positive systems were searched offline for the full
//! set of hypotheses the dimension formulas need: strictly positive
//! entries, projectively separated first-level arcs, certified attractor
//! separation, bunched singular values, and affinity dimension safely
//! below 1. Their entries are frozen here; the checkers in the test suite
//! re-verify every claimed property from the numbers alone.

use crate::ifs::{AffineMap, IfsSystem};
use alloc::vec::Vec;

fn build(maps: Vec<([[f64; 2]; 2], [f64; 2])>) -> IfsSystem {
    IfsSystem::new(
        maps.into_iter()
            .map(|(l, t)| AffineMap::new(l, t).expect("fixture map is valid"))
            .collect(),
    )
    .expect("fixture system is valid")
}

/// Four half-scale copies tiling the unit square: the attractor is the
/// square and uniform weights give Lebesgue measure on it.
pub fn lebesgue_square() -> IfsSystem {
    build(alloc::vec![
        ([[0.5, 0.0], [0.0, 0.5]], [0.0, 0.0]),
        ([[0.5, 0.0], [0.0, 0.5]], [0.5, 0.0]),
        ([[0.5, 0.0], [0.0, 0.5]], [0.0, 0.5]),
        ([[0.5, 0.0], [0.0, 0.5]], [0.5, 0.5]),
    ])
}

/// Two third-scale copies at opposite corners of the unit square; a
/// Cantor set along the diagonal with dimension ln 2 / ln 3.
pub fn cantor_corners() -> IfsSystem {
    build(alloc::vec![
        ([[1.0 / 3.0, 0.0], [0.0, 1.0 / 3.0]], [0.0, 0.0]),
        ([[1.0 / 3.0, 0.0], [0.0, 1.0 / 3.0]], [2.0 / 3.0, 2.0 / 3.0]),
    ])
}

/// Two ratio-1/3 similarities on a horizontal line.
pub fn third_similarities() -> IfsSystem {
    build(alloc::vec![
        ([[1.0 / 3.0, 0.0], [0.0, 1.0 / 3.0]], [0.0, 0.0]),
        ([[1.0 / 3.0, 0.0], [0.0, 1.0 / 3.0]], [2.0 / 3.0, 0.0]),
    ])
}

/// Two copies of `diag(1/2, 1/4)`; the affinity dimension is exactly 1.
pub fn diagonal_pair() -> IfsSystem {
    build(alloc::vec![
        ([[0.5, 0.0], [0.0, 0.25]], [0.0, 0.0]),
        ([[0.5, 0.0], [0.0, 0.25]], [0.5, 0.75]),
    ])
}

/// Two half-scale squares sharing the corner (1/2, 1/2): the standard
/// example where cover-based separation stays undetermined.
pub fn overlapping_squares() -> IfsSystem {
    build(alloc::vec![
        ([[0.5, 0.0], [0.0, 0.5]], [0.0, 0.0]),
        ([[0.5, 0.0], [0.0, 0.5]], [0.5, 0.5]),
    ])
}

/// Strictly positive, projectively separated, 1-bunched triple with
/// affinity dimension about 0.65. Per-map singular values are
/// (0.16, 0.0288), (0.20, 0.0452), (0.24, 0.0648). The headline system
/// for comparing box-counting slopes against the theoretical exponent.
pub fn positive_triple() -> IfsSystem {
    build(alloc::vec![
        (
            [
                [0.11459529486459168, 0.00429726638527906],
                [0.10641943954026946, 0.04420175092059341],
            ],
            [0.1395200181032021, 0.0964544576737647],
        ),
        (
            [
                [0.12638256003191006, 0.06030944911313196],
                [0.09417271306476782, 0.11646784526843497],
            ],
            [0.09590808640839871, -0.16588682786471215],
        ),
        (
            [
                [0.1008910793062012, 0.1402056561805155],
                [0.0171341915707445, 0.17795736447429736],
            ],
            [-0.24213406235766632, 0.06154725644521436],
        ),
    ])
}

/// A Bernoulli vector satisfying the metric-bunching inequality at
/// `q = 2` on [`positive_triple`], found from the existence construction
/// (probabilities proportional to `alpha2^(d(2)/2)` at its fixed point).
pub fn positive_triple_probabilities() -> [f64; 3] {
    [0.29, 0.33, 0.38]
}

/// Strongly contracting positive separated pair (singular values 0.06 and
/// 0.015 for both maps, affinity dimension about 0.24). The heavy
/// contraction makes the directional series and energy diagnostics reach
/// their asymptotic regime at modest depths.
pub fn positive_pair() -> IfsSystem {
    build(alloc::vec![
        (
            [
                [0.0473531311317647, 0.00906849120942598],
                [0.02982413972199234, 0.02471768858622381],
            ],
            [-0.2489043295149698, -0.17375925401059827],
        ),
        (
            [
                [0.02677557554446871, 0.03215204043199964],
                [0.00916140540151318, 0.04461371427476795],
            ],
            [0.24998108225892773, 0.1745102121297383],
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::singular_values;

    #[test]
    fn positive_triple_singular_values_as_documented() {
        let expected = [(0.16, 0.0288), (0.20, 0.0452), (0.24, 0.0648)];
        for (m, (a1, a2)) in positive_triple().maps().iter().zip(expected) {
            let sv = singular_values(m.linear()).unwrap();
            assert!((sv.alpha1 - a1).abs() < 1e-10);
            assert!((sv.alpha2 - a2).abs() < 1e-10);
        }
    }

    #[test]
    fn positive_pair_singular_values_as_documented() {
        for m in positive_pair().maps() {
            let sv = singular_values(m.linear()).unwrap();
            assert!((sv.alpha1 - 0.06).abs() < 1e-10);
            assert!((sv.alpha2 - 0.015).abs() < 1e-10);
        }
    }

    #[test]
    fn positive_fixtures_are_positive_and_separated() {
        for ifs in [positive_triple(), positive_pair()] {
            assert!(crate::conditions::check_positivity(&ifs));
            assert!(crate::projective::projective_separation(&ifs).unwrap());
        }
    }

    #[test]
    fn triple_probabilities_sum_to_one() {
        let p = positive_triple_probabilities();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
