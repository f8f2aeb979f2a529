//! The induced system on the projective line and the overlap growth rate.
//!
//! Each linear part `A_i` acts on directions through its inverse,
//! `phi_i(theta) = angle(A_i^{-1} u(theta))`. Strictly positive matrices
//! map the negative quadrant `Q2 = [-pi/2, 0]` strictly inside itself, so
//! iterating the `phi_i` on `Q2` produces nested arcs whose maximum
//! overlap count at level `n`, `N_n`, is submultiplicative in `n`. By
//! Fekete's lemma every `N_n^(1/n)` is an upper bound for the growth rate
//! `gamma = lim N_n^(1/n)`, and the minimum over computed levels is the
//! certificate reported here.

use crate::ifs::{mat_vec, Angle, IfsSystem, Mat2};
use crate::numeric as nm;
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

use core::f64::consts::{FRAC_PI_2, PI};

/// A closed arc on the projective line, kept in a lifted coordinate:
/// `lo` canonical in `[-pi/2, pi/2)` and `hi = lo + length` with
/// `0 < length < pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    lo: f64,
    hi: f64,
}

impl Arc {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let len = hi - lo;
        if !(len > 0.0 && len < PI) {
            return Err(Error::input(format!(
                "arc length {len} outside (0, pi)"
            )));
        }
        let mut l = lo % PI;
        if l < -FRAC_PI_2 {
            l += PI;
        } else if l >= FRAC_PI_2 {
            l -= PI;
        }
        Ok(Arc { lo: l, hi: l + len })
    }

    /// The negative quadrant `Q2`: directions in `[-pi/2, 0]`.
    pub fn q2() -> Self {
        Arc {
            lo: -FRAC_PI_2,
            hi: 0.0,
        }
    }

    /// The positive quadrant `Q1`: directions in `[0, pi/2]`.
    pub fn q1() -> Self {
        Arc {
            lo: 0.0,
            hi: FRAC_PI_2,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Whether the closed arc contains the direction `theta` (mod pi).
    pub fn contains(&self, theta: f64, tol: f64) -> bool {
        let mut off = (theta - self.lo) % PI;
        if off < 0.0 {
            off += PI;
        }
        off <= self.length() + tol || off >= PI - tol
    }
}

/// Overlap counts per level and the resulting certified upper bound
/// for gamma.
#[derive(Debug, Clone)]
pub struct GammaReport {
    /// `(n, N_n, N_n^(1/n))` for each computed level.
    pub per_level: Vec<(u32, u64, f64)>,
    /// `min_n N_n^(1/n)`, a true upper bound for gamma.
    pub certified_upper: f64,
    /// Level-1 images of `Q2` are pairwise disjoint (which forces
    /// `gamma = 1`).
    pub separated: bool,
    /// The enumeration budget cut the level loop short of the requested
    /// depth; the certificate is still valid for the levels present.
    pub truncated: bool,
}

/// Direction of `m^{-1} u(theta)` on the projective line.
pub fn proj_map(m: &Mat2, theta: Angle) -> Result<Angle> {
    let d = crate::ifs::det(m);
    if d == 0.0 || !d.is_finite() {
        return Err(Error::domain("projective action of a singular matrix"));
    }
    // Inverse up to the scalar 1/det, which is invisible projectively.
    let inv = [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]];
    let v = mat_vec(&inv, &theta.unit());
    Ok(Angle::new(nm::atan2(v[1], v[0])))
}

/// Image of an arc under the projective action of `m`.
///
/// The endpoints map to `proj_map` of the endpoints; of the two arcs they
/// bound, the image is the one containing the image of the midpoint.
pub fn proj_image(m: &Mat2, arc: &Arc) -> Result<Arc> {
    let a = proj_map(m, Angle::new(arc.lo))?.value();
    let b = proj_map(m, Angle::new(arc.hi))?.value();
    let mid = proj_map(m, Angle::new(0.5 * (arc.lo + arc.hi)))?.value();
    let mut len_ab = (b - a) % PI;
    if len_ab < 0.0 {
        len_ab += PI;
    }
    let mut off = (mid - a) % PI;
    if off < 0.0 {
        off += PI;
    }
    let eps = 1e-9;
    if off <= len_ab + eps {
        Arc::new(a, a + len_ab.max(eps))
    } else {
        Arc::new(b, b + (PI - len_ab).max(eps))
    }
}

/// Maximum number of closed arcs covering a single direction, by an
/// endpoint sweep in a common lift. Endpoint ties count as overlap.
pub fn max_overlap(arcs: &[Arc]) -> u64 {
    if arcs.is_empty() {
        return 0;
    }
    // Events on the circle of circumference pi, cut at -pi/2. Arcs
    // crossing the cut contribute to the initial count and get their end
    // event wrapped around.
    let mut events: Vec<(f64, i8)> = Vec::with_capacity(2 * arcs.len());
    let mut count: i64 = 0;
    for a in arcs {
        events.push((a.lo, 1));
        if a.hi < FRAC_PI_2 {
            events.push((a.hi, -1));
        } else {
            count += 1;
            events.push((a.hi - PI, -1));
        }
    }
    events.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let tol = 1e-12;
    let mut best = count;
    let mut i = 0;
    while i < events.len() {
        let mut j = i;
        while j < events.len() && events[j].0 - events[i].0 <= tol {
            j += 1;
        }
        // Closed arcs: all starts in the coordinate cluster land before
        // any end, so touching endpoints register as overlap.
        for e in &events[i..j] {
            if e.1 > 0 {
                count += 1;
            }
        }
        best = best.max(count);
        for e in &events[i..j] {
            if e.1 < 0 {
                count += i64::from(e.1);
            }
        }
        i = j;
    }
    best.max(0) as u64
}

fn check_sign_pattern(ifs: &IfsSystem) -> Result<()> {
    let positive = ifs
        .maps()
        .iter()
        .all(|m| m.linear().iter().flatten().all(|&e| e > 0.0));
    let diagonal = ifs
        .maps()
        .iter()
        .all(|m| m.linear()[0][1] == 0.0 && m.linear()[1][0] == 0.0);
    if positive || diagonal {
        Ok(())
    } else {
        Err(Error::input(
            "gamma certificates need strictly positive or diagonal linear parts",
        ))
    }
}

const ARC_BUDGET: usize = 4_000_000;

/// Certified upper bound for the overlap growth rate gamma.
///
/// Level `n` holds the arcs `phi_{c_n} ∘ … ∘ phi_{c_1}(Q2)` over all
/// words, built by applying each `phi_i` on the outside of the previous
/// level. If the total arc count would exceed the budget, the loop stops
/// early and the report is flagged as truncated.
pub fn gamma_bound(ifs: &IfsSystem, max_depth: u32) -> Result<GammaReport> {
    if max_depth < 1 {
        return Err(Error::input("gamma bound needs max_depth >= 1"));
    }
    check_sign_pattern(ifs)?;
    let n = ifs.len();
    let mut level: Vec<Arc> = alloc::vec![Arc::q2()];
    let mut per_level = Vec::new();
    let mut truncated = false;
    for depth in 1..=max_depth {
        if level.len().saturating_mul(n) > ARC_BUDGET {
            truncated = true;
            break;
        }
        let parents = core::mem::take(&mut level);
        let images = nm::ordered_map(
            ifs.maps().iter().map(|m| *m.linear()).collect::<Vec<_>>(),
            |lin| {
                parents
                    .iter()
                    .map(|a| proj_image(&lin, a))
                    .collect::<Result<Vec<_>>>()
            },
        );
        for chunk in images {
            level.extend(chunk?);
        }
        let n_max = max_overlap(&level);
        per_level.push((depth, n_max, nm::powf(n_max as f64, 1.0 / f64::from(depth))));
    }
    let separated = if let Some(&(_, n1, _)) = per_level.first() {
        n1 == 1 && level1_gap(ifs)? > 0.0
    } else {
        false
    };
    let certified_upper = per_level
        .iter()
        .map(|&(_, _, g)| g)
        .fold(f64::INFINITY, f64::min);
    Ok(GammaReport {
        per_level,
        certified_upper,
        separated,
        truncated,
    })
}

/// Smallest circular gap between distinct level-1 arcs `phi_i(Q2)`;
/// negative or zero when some pair overlaps. Single-map systems have no
/// pairs and report infinite gap.
pub fn level1_gap(ifs: &IfsSystem) -> Result<f64> {
    let arcs: Vec<Arc> = ifs
        .maps()
        .iter()
        .map(|m| proj_image(m.linear(), &Arc::q2()))
        .collect::<Result<_>>()?;
    let mut min_gap = f64::INFINITY;
    for i in 0..arcs.len() {
        for j in (i + 1)..arcs.len() {
            let mut s = (arcs[j].lo - arcs[i].lo) % PI;
            if s < 0.0 {
                s += PI;
            }
            let gap = (s - arcs[i].length()).min(PI - s - arcs[j].length());
            min_gap = min_gap.min(gap);
        }
    }
    Ok(min_gap)
}

/// Whether the level-1 arcs `phi_i(Q2)` are pairwise disjoint with a
/// strictly positive gap. This forces `gamma = 1`.
pub fn projective_separation(ifs: &IfsSystem) -> Result<bool> {
    check_sign_pattern(ifs)?;
    Ok(level1_gap(ifs)? > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::AffineMap;

    fn sys(mats: &[Mat2]) -> IfsSystem {
        IfsSystem::new(
            mats.iter()
                .map(|m| AffineMap::new(*m, [0.0, 0.0]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn proj_map_scalar_fixes_everything() {
        for &t in &[-1.2, -0.3, 0.0, 0.9, FRAC_PI_2] {
            let th = Angle::new(t);
            let out = proj_map(&[[0.7, 0.0], [0.0, 0.7]], th).unwrap();
            assert!((out.value() - th.value()).abs() < 1e-12);
        }
    }

    #[test]
    fn proj_map_diagonal() {
        let out = proj_map(&[[0.5, 0.0], [0.0, 0.25]], Angle::new(PI / 4.0)).unwrap();
        assert!((out.value() - 2.0_f64.atan()).abs() < 1e-12);
    }

    #[test]
    fn proj_map_positive_contracts_q2() {
        let m = [[0.6, 0.3], [0.3, 0.3]];
        for &t in &[-FRAC_PI_2, -1.0, -0.2, 0.0] {
            let out = proj_map(&m, Angle::new(t)).unwrap().value();
            assert!(out > -FRAC_PI_2 && out < 0.0, "phi({t}) = {out}");
        }
    }

    #[test]
    fn proj_image_identity_and_diagonal_fix_q2() {
        let q2 = Arc::q2();
        let id = proj_image(&[[1.0, 0.0], [0.0, 1.0]], &q2).unwrap();
        assert!((id.lo - q2.lo).abs() < 1e-12 && (id.hi - q2.hi).abs() < 1e-12);
        let di = proj_image(&[[0.5, 0.0], [0.0, 0.25]], &q2).unwrap();
        assert!((di.lo - q2.lo).abs() < 1e-12 && (di.hi - q2.hi).abs() < 1e-12);
    }

    #[test]
    fn proj_image_positive_shrinks_q2() {
        let img = proj_image(&[[0.6, 0.3], [0.3, 0.3]], &Arc::q2()).unwrap();
        assert!(img.length() < FRAC_PI_2 - 1e-6);
        assert!(img.lo > -FRAC_PI_2 && img.hi < 0.0);
    }

    #[test]
    fn max_overlap_hand_cases() {
        let a = |l: f64, h: f64| Arc::new(l, h).unwrap();
        assert_eq!(max_overlap(&[a(0.0, 1.0), a(0.5, 1.5), a(2.0, 3.0)]), 2);
        assert_eq!(max_overlap(&[a(-1.5, -1.0), a(-0.5, 0.0), a(0.5, 1.0)]), 1);
        assert_eq!(max_overlap(&[a(0.2, 0.9); 5]), 5);
        assert_eq!(max_overlap(&[]), 0);
    }

    #[test]
    fn max_overlap_closed_endpoints_touch() {
        let a = |l: f64, h: f64| Arc::new(l, h).unwrap();
        assert_eq!(max_overlap(&[a(0.0, 0.5), a(0.5, 1.0)]), 2);
    }

    #[test]
    fn gamma_single_map() {
        let s = sys(&[[[0.6, 0.3], [0.3, 0.3]]]);
        let rep = gamma_bound(&s, 5).unwrap();
        for &(_, n, g) in &rep.per_level {
            assert_eq!(n, 1);
            assert_eq!(g, 1.0);
        }
        assert_eq!(rep.certified_upper, 1.0);
    }

    #[test]
    fn gamma_two_diagonal_maps() {
        let s = sys(&[[[0.5, 0.0], [0.0, 0.25]], [[0.4, 0.0], [0.0, 0.3]]]);
        let rep = gamma_bound(&s, 8).unwrap();
        for &(n, nn, g) in &rep.per_level {
            assert_eq!(nn, 1u64 << n);
            assert!((g - 2.0).abs() < 1e-12);
        }
        assert!(!rep.separated);
    }

    #[test]
    fn mixed_sign_pattern_rejected() {
        let s = sys(&[[[0.5, -0.2], [0.1, 0.4]]]);
        assert!(gamma_bound(&s, 3).is_err());
    }
}
