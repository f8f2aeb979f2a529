//! Affine maps, symbolic words, and the linear-algebra substrate.
//!
//! Everything downstream reduces to compositions `T_w = T_{w_1} ∘ … ∘ T_{w_k}`
//! and the two singular values of their linear parts. Singular values are
//! computed in closed form (no iteration), with the smaller one recovered
//! from the determinant so compositions that squash one direction to 1e-100
//! still come out with full relative accuracy.

use crate::numeric as nm;
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

use core::f64::consts::{FRAC_PI_2, PI};

/// A finite word over the symbol alphabet `0..N-1`.
pub type Word = Vec<u8>;

/// A direction on the projective line, stored as its canonical
/// representative in `(-pi/2, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle {
    theta: f64,
}

impl Angle {
    /// Reduce an arbitrary angle modulo pi into the canonical range.
    pub fn new(theta: f64) -> Self {
        let mut t = theta % PI;
        if t <= -FRAC_PI_2 {
            t += PI;
        } else if t > FRAC_PI_2 {
            t -= PI;
        }
        Angle { theta: t }
    }

    pub fn value(self) -> f64 {
        self.theta
    }

    /// Unit direction vector for this angle.
    pub fn unit(self) -> [f64; 2] {
        [nm::cos(self.theta), nm::sin(self.theta)]
    }
}

/// Singular values of a 2x2 matrix together with the direction of the
/// major axis of the image ellipse.
#[derive(Debug, Clone, Copy)]
pub struct SingularPair {
    pub alpha1: f64,
    pub alpha2: f64,
    pub major_axis_angle: Angle,
}

pub(crate) type Mat2 = [[f64; 2]; 2];

pub(crate) fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub(crate) fn mat_vec(m: &Mat2, v: &[f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub(crate) fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn max_abs_entry(m: &Mat2) -> f64 {
    let mut best = 0.0_f64;
    for row in m {
        for &e in row {
            let a = if e < 0.0 { -e } else { e };
            if a > best {
                best = a;
            }
        }
    }
    best
}

/// One affine contraction `T(x) = A x + t` of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    linear: Mat2,
    translation: [f64; 2],
    empty_composition: bool,
}

impl AffineMap {
    /// Build a map, enforcing nonsingularity and contraction.
    pub fn new(linear: Mat2, translation: [f64; 2]) -> Result<Self> {
        let d = det(&linear);
        if d == 0.0 || !d.is_finite() {
            return Err(Error::domain("linear part is singular"));
        }
        let sv = singular_values(&linear)?;
        if sv.alpha1 >= 1.0 {
            return Err(Error::domain(format!(
                "map is not a contraction (alpha1 = {})",
                sv.alpha1
            )));
        }
        Ok(AffineMap {
            linear,
            translation,
            empty_composition: false,
        })
    }

    fn identity() -> Self {
        AffineMap {
            linear: [[1.0, 0.0], [0.0, 1.0]],
            translation: [0.0, 0.0],
            empty_composition: true,
        }
    }

    pub fn linear(&self) -> &Mat2 {
        &self.linear
    }

    pub fn translation(&self) -> &[f64; 2] {
        &self.translation
    }

    /// True only for the result of composing the empty word. Such a map is
    /// the identity and must not be fed to the singular value function.
    pub fn is_empty_composition(&self) -> bool {
        self.empty_composition
    }

    pub fn apply(&self, x: &[f64; 2]) -> [f64; 2] {
        let v = mat_vec(&self.linear, x);
        [v[0] + self.translation[0], v[1] + self.translation[1]]
    }
}

/// An ordered family of affine contractions, indexed by symbols `0..N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IfsSystem {
    maps: Vec<AffineMap>,
}

impl IfsSystem {
    pub fn new(maps: Vec<AffineMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::input("system needs at least one map"));
        }
        if maps.len() > u8::MAX as usize {
            return Err(Error::input("more than 255 maps are not supported"));
        }
        Ok(IfsSystem { maps })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn map(&self, i: u8) -> Result<&AffineMap> {
        self.maps
            .get(i as usize)
            .ok_or_else(|| Error::input(format!("symbol {i} out of range (N = {})", self.maps.len())))
    }
}

/// Closed-form singular values of a 2x2 matrix.
///
/// Writing `M = R(u) diag(s1, s2) R(-v)`, the four quantities
/// `E = (a+d)/2, F = (a-d)/2, G = (b+c)/2, H = (c-b)/2` satisfy
/// `hypot(E,H) = (s1+s2)/2` and `hypot(F,G) = (s1-s2)/2`, which gives both
/// values and both rotation angles without iteration. The smaller value is
/// then replaced by `|det|/alpha1`: the determinant is exact in the matrix
/// entries, so this quotient keeps relative accuracy even when the two
/// values are hundreds of orders of magnitude apart.
pub fn singular_values(m: &Mat2) -> Result<SingularPair> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return Err(Error::domain("singular matrix has no singular pair"));
    }
    let e = 0.5 * (m[0][0] + m[1][1]);
    let f = 0.5 * (m[0][0] - m[1][1]);
    let g = 0.5 * (m[0][1] + m[1][0]);
    let h = 0.5 * (m[1][0] - m[0][1]);
    let q1 = nm::hypot(e, h);
    let q2 = nm::hypot(f, g);
    let alpha1 = q1 + q2;
    let alpha2 = (d / alpha1).abs();
    let diff = nm::atan2(h, e);
    let sum = nm::atan2(g, f);
    let major_axis_angle = Angle::new(0.5 * (sum + diff));
    Ok(SingularPair {
        alpha1,
        alpha2,
        major_axis_angle,
    })
}

/// Linear part of a composition, held as a unit-max-entry matrix plus a
/// log scale factor. Compositions of hundreds of contractions underflow a
/// plain `f64` matrix; the scaled form never does.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaledLinear {
    pub m: Mat2,
    pub log_scale: f64,
}

impl ScaledLinear {
    pub fn identity() -> Self {
        ScaledLinear {
            m: [[1.0, 0.0], [0.0, 1.0]],
            log_scale: 0.0,
        }
    }

    pub fn push(&mut self, a: &Mat2) {
        self.m = mat_mul(&self.m, a);
        let s = max_abs_entry(&self.m);
        if s > 0.0 && s.is_finite() {
            for row in self.m.iter_mut() {
                for e in row.iter_mut() {
                    *e /= s;
                }
            }
            self.log_scale += nm::ln(s);
        }
    }

    pub fn log_alpha1(&self) -> f64 {
        let sv = singular_values(&self.m).expect("scaled composition stays nonsingular");
        nm::ln(sv.alpha1) + self.log_scale
    }

    /// `(log alpha1, log alpha2)` of the full (unscaled) composition.
    pub fn log_alphas(&self) -> (f64, f64) {
        let sv = singular_values(&self.m).expect("scaled composition stays nonsingular");
        let la1 = nm::ln(sv.alpha1) + self.log_scale;
        let la2 = nm::ln(sv.alpha2) + self.log_scale;
        (la1, la2)
    }

    /// `log |M u(theta)|` of the full composition.
    pub fn log_norm_at(&self, theta: Angle) -> f64 {
        let u = theta.unit();
        let v = mat_vec(&self.m, &u);
        nm::ln(nm::hypot(v[0], v[1])) + self.log_scale
    }
}

pub(crate) fn scaled_linear(ifs: &IfsSystem, w: &[u8]) -> Result<ScaledLinear> {
    let mut acc = ScaledLinear::identity();
    for &s in w {
        acc.push(ifs.map(s)?.linear());
    }
    Ok(acc)
}

/// `log phi^s` for given log singular values of a word.
pub(crate) fn log_svf_from(la1: f64, la2: f64, s: f64) -> f64 {
    if s <= 1.0 {
        s * la1
    } else {
        la1 + (s - 1.0) * la2
    }
}

/// Compose `T_{w_1} ∘ … ∘ T_{w_k}` into a single affine map.
///
/// The empty word yields the identity, flagged via
/// [`AffineMap::is_empty_composition`].
pub fn compose(ifs: &IfsSystem, w: &[u8]) -> Result<AffineMap> {
    let mut acc = AffineMap::identity();
    for &s in w {
        let t = ifs.map(s)?;
        let linear = mat_mul(&acc.linear, &t.linear);
        let shift = mat_vec(&acc.linear, &t.translation);
        acc = AffineMap {
            linear,
            translation: [acc.translation[0] + shift[0], acc.translation[1] + shift[1]],
            empty_composition: false,
        };
    }
    Ok(acc)
}

/// Singular value function `phi^s(w)`: `alpha1^s` for `s <= 1`, otherwise
/// `alpha1 * alpha2^(s-1)`.
pub fn svf(ifs: &IfsSystem, w: &[u8], s: f64) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::input("singular value function needs a nonempty word"));
    }
    if !(0.0..=2.0).contains(&s) {
        return Err(Error::input(format!("exponent s = {s} outside [0, 2]")));
    }
    let sl = scaled_linear(ifs, w)?;
    let (la1, la2) = sl.log_alphas();
    Ok(nm::exp(log_svf_from(la1, la2, s)))
}

/// Factor by which `T_w` contracts line segments in direction `theta`:
/// `lambda_w(theta) = |A_w u(theta)|`.
pub fn contraction_at_angle(ifs: &IfsSystem, w: &[u8], theta: Angle) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::input("contraction factor needs a nonempty word"));
    }
    let sl = scaled_linear(ifs, w)?;
    Ok(nm::exp(sl.log_norm_at(theta)))
}

/// A closed ball `B` with `T_i(B) ⊆ B` for every map: center at the
/// origin, radius `max_i |t_i| / (1 - max_i alpha1(i))`.
pub fn invariant_ball(ifs: &IfsSystem) -> Result<([f64; 2], f64)> {
    let mut max_t = 0.0_f64;
    let mut max_a1 = 0.0_f64;
    for m in ifs.maps() {
        let t = m.translation();
        let n = nm::hypot(t[0], t[1]);
        if n > max_t {
            max_t = n;
        }
        let a1 = singular_values(m.linear())?.alpha1;
        if a1 > max_a1 {
            max_a1 = a1;
        }
    }
    if max_a1 >= 1.0 {
        return Err(Error::domain("system is not uniformly contracting"));
    }
    Ok(([0.0, 0.0], max_t / (1.0 - max_a1)))
}

/// Representative point of the cylinder `T_w(F)`: the image of the
/// invariant-ball center. Lies within `alpha1(w) * R` of every point of
/// the cylinder.
pub fn cylinder_point(ifs: &IfsSystem, w: &[u8]) -> Result<[f64; 2]> {
    if w.is_empty() {
        return Err(Error::input("cylinder point needs a nonempty word"));
    }
    let (c, _) = invariant_ball(ifs)?;
    Ok(compose(ifs, w)?.apply(&c))
}
