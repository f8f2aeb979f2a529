//! Truncated-pressure root finding and cylinder weight models.
//!
//! The affinity dimension is approximated by the root `s_k` of the
//! level-`k` pressure `P_k(s) = (1/k) log sum_{|w|=k} phi^s(w)`.
//! Submultiplicativity of `phi^s` makes `k P_k` subadditive in `k`, so
//! every `s_k` is a certified upper bound for the true critical exponent
//! and the roots decrease as `k` grows. The moment exponent `d(q)` comes
//! from the same machinery with the weighted sums
//! `sum phi^s(w)^(1-q) mu[w]^q`, which are monotone in `s` in the other
//! direction.
//!
//! All level sums stream through a shared word-tree walk that splits the
//! tree at a fixed shallow depth and merges per-prefix partial sums in
//! lexicographic order, so results do not depend on how many workers run
//! the walk.

use crate::ifs::{log_svf_from, IfsSystem, ScaledLinear};
use crate::numeric as nm;
use crate::numeric::LogSum;
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

/// A solved exponent with its truncation depth and bracket.
#[derive(Debug, Clone, Copy)]
pub struct DimensionEstimate {
    /// The computed exponent, clamped to `[0, 2]`.
    pub value: f64,
    /// Word length `k` of the truncated sums.
    pub depth: u32,
    /// `(lower_heuristic, upper_certified)` for the affinity dimension;
    /// the final bisection bracket for moment exponents.
    pub bracket: (f64, f64),
    pub tolerance: f64,
    /// False when the root ran into an endpoint of `[0, 2]`.
    pub converged: bool,
}

/// Cylinder-mass assignment `mu[w]`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightModel {
    /// Product measure: `mu[w]` is the product of per-symbol
    /// probabilities. Exactly multiplicative along concatenation.
    Bernoulli(Vec<f64>),
    /// Depth-normalized stand-in for the Kaenmaki measure:
    /// `mu[w] = phi^d(w) / Z_|w|` with `Z_k = sum_{|v|=k} phi^d(v)`.
    /// Defined for word lengths up to the table length only.
    KaenmakiApprox {
        exponent: f64,
        /// `log Z_k` for `k = 1..=table.len()`.
        log_z: Vec<f64>,
    },
}

impl WeightModel {
    /// `log mu[w]`.
    pub fn log_mass(&self, ifs: &IfsSystem, w: &[u8]) -> Result<f64> {
        if w.is_empty() {
            return Ok(0.0);
        }
        match self {
            WeightModel::Bernoulli(p) => {
                let mut s = 0.0;
                for &c in w {
                    let pi = p
                        .get(c as usize)
                        .ok_or_else(|| Error::input(format!("symbol {c} has no probability")))?;
                    s += nm::ln(*pi);
                }
                Ok(s)
            }
            WeightModel::KaenmakiApprox { exponent, log_z } => {
                let lz = log_z.get(w.len() - 1).ok_or_else(|| {
                    Error::input(format!(
                        "weights tabulated to depth {}, word has length {}",
                        log_z.len(),
                        w.len()
                    ))
                })?;
                let sl = crate::ifs::scaled_linear(ifs, w)?;
                let (la1, la2) = sl.log_alphas();
                Ok(log_svf_from(la1, la2, *exponent) - lz)
            }
        }
    }

    pub fn mass(&self, ifs: &IfsSystem, w: &[u8]) -> Result<f64> {
        Ok(nm::exp(self.log_mass(ifs, w)?))
    }

    /// Largest word length the model is defined for, if bounded.
    pub fn max_depth(&self) -> Option<usize> {
        match self {
            WeightModel::Bernoulli(_) => None,
            WeightModel::KaenmakiApprox { log_z, .. } => Some(log_z.len()),
        }
    }
}

const WORD_BUDGET: f64 = 4.0e7;

fn budget_check(n: usize, k: u32) -> Result<()> {
    if nm::powf(n as f64, f64::from(k)) > WORD_BUDGET {
        return Err(Error::resource(format!(
            "level {k} over {n} symbols exceeds the enumeration budget"
        )));
    }
    Ok(())
}

/// Split depth giving a few dozen independent prefix subtrees.
fn split_depth(n: usize, k: u32) -> u32 {
    if n < 2 {
        return 0;
    }
    let mut d = 0;
    let mut count = 1usize;
    while d < k && count < 64 {
        count *= n;
        d += 1;
    }
    d
}

fn dfs_logsum<F>(
    ifs: &IfsSystem,
    log_p: Option<&[f64]>,
    sl: ScaledLinear,
    logp: f64,
    remaining: u32,
    f: &F,
    acc: &mut LogSum,
) where
    F: Fn(f64, f64, f64) -> f64,
{
    if remaining == 0 {
        let (la1, la2) = sl.log_alphas();
        acc.add_log(f(la1, la2, logp));
        return;
    }
    for i in 0..ifs.len() {
        let mut child = sl;
        child.push(ifs.maps()[i].linear());
        let lp = logp + log_p.map_or(0.0, |p| nm::ln(p[i]));
        dfs_logsum(ifs, log_p, child, lp, remaining - 1, f, acc);
    }
}

/// `log sum_{|w|=k} exp f(log alpha1(w), log alpha2(w), log p_w)` where
/// `p_w` is the product of optional per-symbol weights along `w`.
pub(crate) fn level_logsum<F>(
    ifs: &IfsSystem,
    log_p: Option<&[f64]>,
    k: u32,
    f: F,
) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64 + Sync + Send,
{
    budget_check(ifs.len(), k)?;
    let sp = split_depth(ifs.len(), k);
    // Materialize the prefix layer, then walk each subtree independently
    // and merge in prefix order. The merge order is what makes the result
    // independent of worker count.
    let mut prefixes: Vec<(ScaledLinear, f64)> = alloc::vec![(ScaledLinear::identity(), 0.0)];
    for _ in 0..sp {
        let mut next = Vec::with_capacity(prefixes.len() * ifs.len());
        for (sl, lp) in &prefixes {
            for i in 0..ifs.len() {
                let mut child = *sl;
                child.push(ifs.maps()[i].linear());
                next.push((child, lp + log_p.map_or(0.0, |p| nm::ln(p[i]))));
            }
        }
        prefixes = next;
    }
    let partials = nm::ordered_map(prefixes, |(sl, lp)| {
        let mut acc = LogSum::new();
        dfs_logsum(ifs, log_p, sl, lp, k - sp, &f, &mut acc);
        acc
    });
    let mut total = LogSum::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.value())
}

/// Truncated pressure `P_k(s) = (1/k) log sum_{|w|=k} phi^s(w)`.
/// Strictly decreasing in `s`.
pub fn pressure(ifs: &IfsSystem, s: f64, k: u32) -> Result<f64> {
    if !(0.0..=2.0).contains(&s) {
        return Err(Error::input(format!("exponent s = {s} outside [0, 2]")));
    }
    if k < 1 {
        return Err(Error::input("pressure needs level k >= 1"));
    }
    let ls = level_logsum(ifs, None, k, move |la1, la2, _| log_svf_from(la1, la2, s))?;
    Ok(ls / f64::from(k))
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn random_word(state: &mut u64, n: usize, len: usize) -> Vec<u8> {
    (0..len).map(|_| (splitmix(state) % n as u64) as u8).collect()
}

/// Worst observed submultiplicativity defect
/// `min phi^s(vw) / (phi^s(v) phi^s(w))` over sampled word pairs, in log.
fn log_kappa(ifs: &IfsSystem, s: f64, samples: u32) -> Result<f64> {
    let mut state = 0x5eed_1234_u64;
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let lv = 1 + (splitmix(&mut state) % 6) as usize;
        let lw = 1 + (splitmix(&mut state) % 6) as usize;
        let v = random_word(&mut state, ifs.len(), lv);
        let w = random_word(&mut state, ifs.len(), lw);
        let mut vw = v.clone();
        vw.extend_from_slice(&w);
        let lphi = |word: &[u8]| -> Result<f64> {
            let sl = crate::ifs::scaled_linear(ifs, word)?;
            let (la1, la2) = sl.log_alphas();
            Ok(log_svf_from(la1, la2, s))
        };
        let defect = lphi(&vw)? - lphi(&v)? - lphi(&w)?;
        if defect < worst {
            worst = defect;
        }
    }
    Ok(worst)
}

/// Root of the truncated pressure: the depth-`k` approximation of the
/// affinity dimension. The root itself is a certified upper bound; the
/// lower end of the bracket deflates each level sum by the observed
/// quasi-multiplicativity defect and is heuristic only.
pub fn affinity_dim(ifs: &IfsSystem, k: u32, tol: f64) -> Result<DimensionEstimate> {
    if tol <= 0.0 {
        return Err(Error::input("tolerance must be positive"));
    }
    let p0 = pressure(ifs, 0.0, k)?;
    if p0 < 0.0 {
        return Ok(DimensionEstimate {
            value: 0.0,
            depth: k,
            bracket: (0.0, 0.0),
            tolerance: tol,
            converged: false,
        });
    }
    let p2 = pressure(ifs, 2.0, k)?;
    if p2 > 0.0 {
        return Ok(DimensionEstimate {
            value: 2.0,
            depth: k,
            bracket: (2.0, 2.0),
            tolerance: tol,
            converged: false,
        });
    }
    let root = nm::bisect(|s| pressure(ifs, s, k).unwrap(), 0.0, 2.0, tol, false);
    let lk = log_kappa(ifs, root, 200)?;
    let lower = if p0 + lk < 0.0 {
        0.0
    } else {
        nm::bisect(
            |s| pressure(ifs, s, k).unwrap() + lk,
            0.0,
            root,
            tol,
            false,
        )
    };
    Ok(DimensionEstimate {
        value: root,
        depth: k,
        bracket: (lower, root),
        tolerance: tol,
        converged: true,
    })
}

/// Moment exponent `d(q)`: root in `s` of
/// `G_k(s) = (1/k) log sum_{|w|=k} phi^s(w)^(1-q) mu[w]^q`,
/// strictly increasing in `s` for `q > 1`.
pub fn lq_exponent(
    ifs: &IfsSystem,
    weights: &WeightModel,
    q: f64,
    k: u32,
    tol: f64,
) -> Result<DimensionEstimate> {
    if q <= 1.0 {
        return Err(Error::input("moment exponent needs q > 1"));
    }
    if tol <= 0.0 {
        return Err(Error::input("tolerance must be positive"));
    }
    if let Some(d) = weights.max_depth() {
        if (k as usize) > d {
            return Err(Error::input(format!(
                "weights tabulated to depth {d}, requested level {k}"
            )));
        }
    }
    let g = |s: f64| -> f64 {
        let term: alloc::boxed::Box<dyn Fn(f64, f64, f64) -> f64 + Sync + Send> = match weights {
            WeightModel::Bernoulli(_) => alloc::boxed::Box::new(move |la1, la2, logp| {
                (1.0 - q) * log_svf_from(la1, la2, s) + q * logp
            }),
            WeightModel::KaenmakiApprox { exponent, log_z } => {
                let d = *exponent;
                let lz = log_z[(k - 1) as usize];
                alloc::boxed::Box::new(move |la1, la2, _| {
                    (1.0 - q) * log_svf_from(la1, la2, s) + q * (log_svf_from(la1, la2, d) - lz)
                })
            }
        };
        let log_p = match weights {
            WeightModel::Bernoulli(p) => Some(p.as_slice()),
            _ => None,
        };
        level_logsum(ifs, log_p, k, term).unwrap() / f64::from(k)
    };
    if g(0.0) > 0.0 {
        return Ok(DimensionEstimate {
            value: 0.0,
            depth: k,
            bracket: (0.0, 0.0),
            tolerance: tol,
            converged: false,
        });
    }
    if g(2.0) < 0.0 {
        return Ok(DimensionEstimate {
            value: 2.0,
            depth: k,
            bracket: (2.0, 2.0),
            tolerance: tol,
            converged: false,
        });
    }
    let root = nm::bisect(g, 0.0, 2.0, tol, true);
    Ok(DimensionEstimate {
        value: root,
        depth: k,
        bracket: (root - tol, root + tol),
        tolerance: tol,
        converged: true,
    })
}

/// Tabulate the depth-normalized Kaenmaki weights
/// `mu[w] = phi^d(w) / Z_|w|` for word lengths `1..=depth`.
pub fn kaenmaki_weights(ifs: &IfsSystem, d: f64, depth: u32) -> Result<WeightModel> {
    if !(d > 0.0 && d <= 2.0) {
        return Err(Error::input(format!("exponent d = {d} outside (0, 2]")));
    }
    if depth < 1 {
        return Err(Error::input("weights need depth >= 1"));
    }
    budget_check(ifs.len(), depth)?;
    let mut log_z = Vec::with_capacity(depth as usize);
    for k in 1..=depth {
        log_z.push(level_logsum(ifs, None, k, move |la1, la2, _| {
            log_svf_from(la1, la2, d)
        })?);
    }
    Ok(WeightModel::KaenmakiApprox { exponent: d, log_z })
}

/// Product weights from a probability vector.
pub fn bernoulli_weights(p: &[f64]) -> Result<WeightModel> {
    if p.is_empty() {
        return Err(Error::input("empty probability vector"));
    }
    if p.iter().any(|&x| x <= 0.0) {
        return Err(Error::input("probabilities must be strictly positive"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::input(format!("probabilities sum to {total}, not 1")));
    }
    Ok(WeightModel::Bernoulli(p.to_vec()))
}

/// Empirical quasi-Bernoulli constant: the worst ratio between
/// `mu[vw]` and `mu[v] mu[w]` over sampled split pairs with
/// `|v| + |w| <= depth`. A lower estimate of the true constant.
///
/// Bernoulli weights are multiplicative by definition of the model, so
/// they short-circuit to exactly 1.
pub fn quasi_bernoulli_constant(
    ifs: &IfsSystem,
    weights: &WeightModel,
    depth: u32,
) -> Result<f64> {
    if matches!(weights, WeightModel::Bernoulli(_)) {
        return Ok(1.0);
    }
    if depth < 2 {
        return Err(Error::input("split pairs need depth >= 2"));
    }
    if let Some(d) = weights.max_depth() {
        if (depth as usize) > d {
            return Err(Error::input(format!(
                "weights tabulated to depth {d}, requested depth {depth}"
            )));
        }
    }
    let mut state = 0x9b5f_c0de_u64;
    let mut worst = 0.0_f64;
    for _ in 0..400 {
        let total = 2 + (splitmix(&mut state) % (u64::from(depth) - 1)) as usize;
        let cut = 1 + (splitmix(&mut state) % (total as u64 - 1)) as usize;
        let vw = random_word(&mut state, ifs.len(), total);
        let log_ratio = weights.log_mass(ifs, &vw)?
            - weights.log_mass(ifs, &vw[..cut])?
            - weights.log_mass(ifs, &vw[cut..])?;
        let a = log_ratio.abs();
        if a > worst {
            worst = a;
        }
    }
    Ok(nm::exp(worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn pressure_moran_identity() {
        let ifs = fixtures::cantor_corners();
        let s = 2.0_f64.ln() / 3.0_f64.ln();
        for k in [1, 3, 7] {
            assert!(pressure(&ifs, s, k).unwrap().abs() < 1e-12);
        }
        assert!((pressure(&ifs, 0.0, 4).unwrap() - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn pressure_diagonal_pair_at_one() {
        let ifs = fixtures::diagonal_pair();
        for k in [1, 5, 9] {
            assert!(pressure(&ifs, 1.0, k).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn affinity_dim_similarities() {
        let ifs = fixtures::cantor_corners();
        let est = affinity_dim(&ifs, 12, 1e-6).unwrap();
        assert!((est.value - 2.0_f64.ln() / 3.0_f64.ln()).abs() < 1e-6);
        assert!(est.converged);
        assert!(est.bracket.0 <= est.value && est.value <= est.bracket.1);
    }

    #[test]
    fn affinity_dim_diagonal_pair() {
        let est = affinity_dim(&fixtures::diagonal_pair(), 12, 1e-6).unwrap();
        assert!((est.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn affinity_dim_depth_monotone() {
        let ifs = fixtures::positive_triple();
        let a = affinity_dim(&ifs, 5, 1e-7).unwrap();
        let b = affinity_dim(&ifs, 9, 1e-7).unwrap();
        assert!(b.value <= a.value + 1e-6);
    }

    #[test]
    fn lq_exponent_uniform_similarities() {
        let ifs = fixtures::cantor_corners();
        let w = bernoulli_weights(&[0.5, 0.5]).unwrap();
        let d = 2.0_f64.ln() / 3.0_f64.ln();
        for q in [2.0, 3.0, 4.0] {
            let est = lq_exponent(&ifs, &w, q, 12, 1e-7).unwrap();
            assert!((est.value - d).abs() < 1e-6, "q = {q}: {}", est.value);
        }
    }

    #[test]
    fn lq_exponent_biased_bernoulli_closed_form() {
        // s solves sum p_i^q r^(s(1-q)) = 1, i.e. s = ln(sum p_i^q) / ((q-1) ln r).
        let ifs = fixtures::cantor_corners();
        let w = bernoulli_weights(&[0.7, 0.3]).unwrap();
        let est = lq_exponent(&ifs, &w, 2.0, 12, 1e-7).unwrap();
        let expected = 0.58_f64.ln() / (1.0_f64 / 3.0).ln();
        assert!((est.value - expected).abs() < 1e-6);
    }

    #[test]
    fn kaenmaki_weights_recover_exponent() {
        let ifs = fixtures::positive_triple();
        let k = 8;
        let d = affinity_dim(&ifs, k, 1e-9).unwrap().value;
        let w = kaenmaki_weights(&ifs, d, k).unwrap();
        for q in [2.0, 4.0, 6.0] {
            let est = lq_exponent(&ifs, &w, q, k, 1e-9).unwrap();
            assert!((est.value - d).abs() < 2e-8, "q = {q}: {} vs {}", est.value, d);
        }
    }

    #[test]
    fn kaenmaki_masses_sum_to_one() {
        let ifs = fixtures::positive_triple();
        let w = kaenmaki_weights(&ifs, 0.7, 5).unwrap();
        let n = ifs.len();
        for k in [1u32, 3, 5] {
            let mut total = crate::numeric::Kahan::new();
            for idx in 0..n.pow(k) {
                let mut word = alloc::vec![0u8; k as usize];
                let mut rest = idx;
                for c in word.iter_mut().rev() {
                    *c = (rest % n) as u8;
                    rest /= n;
                }
                total.add(w.mass(&ifs, &word).unwrap());
            }
            assert!((total.value() - 1.0).abs() < 1e-9, "level {k}: {}", total.value());
        }
    }

    #[test]
    fn bernoulli_weights_validation() {
        assert!(bernoulli_weights(&[0.5, 0.5]).is_ok());
        assert!(bernoulli_weights(&[0.5, 0.4]).is_err());
        assert!(bernoulli_weights(&[1.2, -0.2]).is_err());
        let w = bernoulli_weights(&[0.7, 0.3]).unwrap();
        let ifs = fixtures::cantor_corners();
        assert!((w.mass(&ifs, &[1, 1]).unwrap() - 0.09).abs() < 1e-15);
        assert!((w.mass(&ifs, &[0, 1, 0]).unwrap() - 0.7 * 0.3 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn quasi_bernoulli_bernoulli_is_one() {
        let w = bernoulli_weights(&[0.6, 0.4]).unwrap();
        let ifs = fixtures::cantor_corners();
        assert_eq!(quasi_bernoulli_constant(&ifs, &w, 8).unwrap(), 1.0);
    }

    #[test]
    fn quasi_bernoulli_uniform_kaenmaki_near_one() {
        let ifs = fixtures::cantor_corners();
        let d = 2.0_f64.ln() / 3.0_f64.ln();
        let w = kaenmaki_weights(&ifs, d, 8).unwrap();
        let c = quasi_bernoulli_constant(&ifs, &w, 8).unwrap();
        assert!((c - 1.0).abs() < 1e-9, "C2 = {c}");
    }

    #[test]
    fn quasi_bernoulli_stable_in_depth() {
        let ifs = fixtures::positive_triple();
        let d = affinity_dim(&ifs, 8, 1e-7).unwrap().value;
        let w = kaenmaki_weights(&ifs, d, 10).unwrap();
        let c8 = quasi_bernoulli_constant(&ifs, &w, 8).unwrap();
        let c10 = quasi_bernoulli_constant(&ifs, &w, 10).unwrap();
        assert!(c8 >= 1.0 && c10 >= 1.0);
        assert!((c8 - c10).abs() < 0.5 * c8, "C2 jumped: {c8} vs {c10}");
    }
}
