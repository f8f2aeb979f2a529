//! Empirical side: mesh rasterization, moment sums, spectrum regressions,
//! Monte Carlo energy integrals, and the directional series diagnostic.
//!
//! The rasterizer expands the word tree until each cylinder is no wider
//! than the mesh (`alpha1(w) <= delta`) and deposits the full cylinder
//! mass at one representative point. That equalizes cylinder diameters to
//! the mesh scale, which is what keeps moment sums honest for strongly
//! nonconformal maps; the positional error of the representative shifts a
//! count by at most one neighboring cell and washes out of log-log slopes.

use crate::dimension::WeightModel;
use crate::ifs::{invariant_ball, log_svf_from, mat_vec, Angle, IfsSystem, ScaledLinear};
use crate::numeric as nm;
use crate::numeric::{Kahan, LogSum};
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use rand_core::{RngCore, SeedableRng};

/// A measure histogrammed on the square `delta`-mesh anchored at the
/// origin. Only occupied cells are stored.
#[derive(Debug, Clone)]
pub struct GridMeasure {
    pub delta: f64,
    pub origin: [f64; 2],
    pub cells: BTreeMap<(i64, i64), f64>,
    /// Some branch hit the hard depth cap before reaching the stopping
    /// scale; masses are still normalized but the scale is unreliable.
    pub depth_capped: bool,
}

impl GridMeasure {
    pub fn total_mass(&self) -> f64 {
        let mut k = Kahan::new();
        for m in self.cells.values() {
            k.add(*m);
        }
        k.value()
    }
}

const DEPTH_CAP: u32 = 64;
const LEAF_BUDGET: usize = 20_000_000;

struct Leaf {
    cell: (i64, i64),
    log_mass: f64,
}

#[allow(clippy::too_many_arguments)]
fn collect_leaves(
    ifs: &IfsSystem,
    weights: &WeightModel,
    delta: f64,
    sl: &ScaledLinear,
    point: [f64; 2],
    log_p: f64,
    depth: u32,
    out: &mut Vec<Leaf>,
    capped: &mut bool,
) -> Result<()> {
    let stop = sl.log_alpha1() <= nm::ln(delta);
    if stop || depth >= DEPTH_CAP {
        if !stop {
            *capped = true;
        }
        if out.len() >= LEAF_BUDGET {
            return Err(Error::resource("rasterization exceeds the leaf budget"));
        }
        let log_mass = match weights {
            WeightModel::Bernoulli(_) => log_p,
            WeightModel::KaenmakiApprox { exponent, .. } => {
                let (la1, la2) = sl.log_alphas();
                log_svf_from(la1, la2, *exponent)
            }
        };
        out.push(Leaf {
            cell: (
                nm::floor(point[0] / delta) as i64,
                nm::floor(point[1] / delta) as i64,
            ),
            log_mass,
        });
        return Ok(());
    }
    for (i, map) in ifs.maps().iter().enumerate() {
        let mut child = *sl;
        child.push(map.linear());
        // The representative of w.i is T_w applied to the child's
        // translation contribution; the scaled matrix only tracks the
        // linear part, so carry the point alongside in plain arithmetic.
        let shift = mat_vec(&plain_of(sl), map.translation());
        let child_point = [point[0] + shift[0], point[1] + shift[1]];
        let lp = match weights {
            WeightModel::Bernoulli(p) => log_p + nm::ln(p[i]),
            _ => 0.0,
        };
        collect_leaves(ifs, weights, delta, &child, child_point, lp, depth + 1, out, capped)?;
    }
    Ok(())
}

fn plain_of(sl: &ScaledLinear) -> [[f64; 2]; 2] {
    let s = nm::exp(sl.log_scale);
    [
        [sl.m[0][0] * s, sl.m[0][1] * s],
        [sl.m[1][0] * s, sl.m[1][1] * s],
    ]
}

/// Histogram the measure on the `delta`-mesh.
///
/// Stopped cylinder masses: Bernoulli words keep their product mass;
/// Kaenmaki words get `phi^d(w)` over the stopped section. Either way the
/// result is renormalized to total mass one.
pub fn rasterize(ifs: &IfsSystem, weights: &WeightModel, delta: f64) -> Result<GridMeasure> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::input("mesh size must be positive"));
    }
    if let WeightModel::Bernoulli(p) = weights {
        if p.len() != ifs.len() {
            return Err(Error::input("probability vector length mismatch"));
        }
    }
    let (center, _) = invariant_ball(ifs)?;
    let mut leaves = Vec::new();
    let mut capped = false;
    collect_leaves(
        ifs,
        weights,
        delta,
        &ScaledLinear::identity(),
        center,
        0.0,
        0,
        &mut leaves,
        &mut capped,
    )?;
    let mut total = LogSum::new();
    for l in &leaves {
        total.add_log(l.log_mass);
    }
    let log_total = total.value();
    let mut cells: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for l in &leaves {
        *cells.entry(l.cell).or_insert(0.0) += nm::exp(l.log_mass - log_total);
    }
    Ok(GridMeasure {
        delta,
        origin: [0.0, 0.0],
        cells,
        depth_capped: capped,
    })
}

/// Moment sum `M^q_delta = sum over occupied cells of mass^q`.
/// Empty cells contribute nothing (the `0^0 = 0` convention), so `q = 0`
/// counts occupied cells.
pub fn moment_sum(grid: &GridMeasure, q: f64) -> f64 {
    let mut k = Kahan::new();
    for &m in grid.cells.values() {
        k.add(nm::powf(m, q));
    }
    k.value()
}

/// Entropy sum `sum mu(Q) log mu(Q)` used for the information dimension.
pub fn entropy_sum(grid: &GridMeasure) -> f64 {
    let mut k = Kahan::new();
    for &m in grid.cells.values() {
        k.add(m * nm::ln(m));
    }
    k.value()
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumFit {
    pub q: f64,
    pub slope: f64,
    pub r_squared: f64,
}

/// Moment sums per `(q, delta)` and the fitted dimension per `q`.
#[derive(Debug, Clone)]
pub struct LqSpectrum {
    /// `(q, delta, M^q_delta)`; for `q = 1` the value is the entropy sum.
    pub moments: Vec<(f64, f64, f64)>,
    pub fits: Vec<SpectrumFit>,
    /// The mesh sizes actually regressed over.
    pub deltas_used: Vec<f64>,
    /// Mesh sizes dropped because rasterization hit the depth cap.
    pub capped_deltas: Vec<f64>,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// Estimate `L^q` dimensions by regressing log moment sums over a
/// geometric mesh schedule. The largest mesh is excluded by default, as
/// are meshes whose rasterization hit the depth cap.
pub fn lq_spectrum(
    ifs: &IfsSystem,
    weights: &WeightModel,
    qs: &[f64],
    deltas: &[f64],
) -> Result<LqSpectrum> {
    if deltas.len() < 4 {
        return Err(Error::input("mesh schedule needs at least 4 values"));
    }
    for pair in deltas.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::input("mesh schedule must be strictly decreasing"));
        }
    }
    let ratio = deltas[1] / deltas[0];
    for pair in deltas.windows(2) {
        if (pair[1] / pair[0] / ratio - 1.0).abs() > 0.01 {
            return Err(Error::input("mesh schedule must be geometric"));
        }
    }
    if qs.iter().any(|&q| !(0.0..=8.0).contains(&q)) {
        return Err(Error::input("q values must lie in [0, 8]"));
    }
    let grids: Vec<GridMeasure> = deltas
        .iter()
        .map(|&d| rasterize(ifs, weights, d))
        .collect::<Result<_>>()?;
    let capped_deltas: Vec<f64> = grids
        .iter()
        .filter(|g| g.depth_capped)
        .map(|g| g.delta)
        .collect();
    // Largest mesh excluded: boundary effects dominate the coarse end of
    // the scaling range.
    let usable: Vec<&GridMeasure> = grids
        .iter()
        .skip(1)
        .filter(|g| !g.depth_capped)
        .collect();
    if usable.len() < 2 {
        return Err(Error::estimation("fewer than 2 usable mesh sizes"));
    }
    let mut moments = Vec::new();
    let mut fits = Vec::new();
    for &q in qs {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for g in &grids {
            let v = if q == 1.0 {
                entropy_sum(g)
            } else {
                moment_sum(g, q)
            };
            moments.push((q, g.delta, v));
        }
        for g in &usable {
            if q == 1.0 {
                xs.push(nm::ln(g.delta));
                ys.push(entropy_sum(g));
            } else {
                xs.push((q - 1.0) * nm::ln(g.delta));
                ys.push(nm::ln(moment_sum(g, q)));
            }
        }
        let (slope, r2) = linear_fit(&xs, &ys);
        fits.push(SpectrumFit {
            q,
            slope,
            r_squared: r2,
        });
    }
    Ok(LqSpectrum {
        moments,
        fits,
        deltas_used: usable.iter().map(|g| g.delta).collect(),
        capped_deltas,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, Copy)]
pub struct EnergyRound {
    pub depth: u32,
    pub n_outer: u64,
    pub n_inner: u64,
    pub estimate: f64,
}

#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub s: f64,
    pub q: f64,
    pub schedule: Vec<EnergyRound>,
    pub stability: Stability,
    pub rejection_rate: f64,
    /// More than 1% of inner draws coincided with the outer point;
    /// suggests separation failure or a resolution too coarse.
    pub rejection_warning: bool,
}

fn stream(seed: u64, round: u32, index: u64) -> rand_chacha::ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&round.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    rand_chacha::ChaCha8Rng::from_seed(key)
}

fn uniform(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draw one representative point of a depth-`k` cylinder by sequential
/// symbol sampling: i.i.d. letters for Bernoulli weights, conditional
/// child masses proportional to `phi^d` for the Kaenmaki surrogate.
fn sample_point(
    ifs: &IfsSystem,
    weights: &WeightModel,
    depth: u32,
    center: &[f64; 2],
    rng: &mut rand_chacha::ChaCha8Rng,
) -> [f64; 2] {
    let n = ifs.len();
    let mut sl = ScaledLinear::identity();
    let mut point = *center;
    for _ in 0..depth {
        let pick = match weights {
            WeightModel::Bernoulli(p) => {
                let mut u = uniform(rng);
                let mut i = 0;
                while i + 1 < n {
                    if u < p[i] {
                        break;
                    }
                    u -= p[i];
                    i += 1;
                }
                i
            }
            WeightModel::KaenmakiApprox { exponent, .. } => {
                let mut logs = [0.0f64; 16];
                let mut max = f64::NEG_INFINITY;
                for (slot, map) in logs.iter_mut().zip(ifs.maps()) {
                    let mut child = sl;
                    child.push(map.linear());
                    let (la1, la2) = child.log_alphas();
                    let l = log_svf_from(la1, la2, *exponent);
                    *slot = l;
                    if l > max {
                        max = l;
                    }
                }
                let mut total = 0.0;
                for l in logs.iter().take(n) {
                    total += nm::exp(l - max);
                }
                let mut u = uniform(rng) * total;
                let mut i = 0;
                while i + 1 < n {
                    let w = nm::exp(logs[i] - max);
                    if u < w {
                        break;
                    }
                    u -= w;
                    i += 1;
                }
                i
            }
        };
        let shift = mat_vec(&plain_of(&sl), ifs.maps()[pick].translation());
        point = [point[0] + shift[0], point[1] + shift[1]];
        sl.push(ifs.maps()[pick].linear());
    }
    point
}

const REDRAW_LIMIT: u32 = 100;

/// Nested Monte Carlo estimate of the energy integral
/// `E_y [ (E_x |x-y|^(-s))^(q-1) ]` over a doubling schedule.
///
/// Round `r` truncates words at depth `depth0 + r` and doubles both
/// sample counts. Below the critical exponent the estimates settle;
/// above it each extra depth level uncovers more near-singular mass and
/// the estimates keep climbing, which is what the flag reports.
#[allow(clippy::too_many_arguments)]
pub fn energy_mc(
    ifs: &IfsSystem,
    weights: &WeightModel,
    s: f64,
    q: f64,
    n_outer: u64,
    n_inner: u64,
    depth0: u32,
    rounds: u32,
    seed: u64,
) -> Result<EnergyReport> {
    if !(s > 0.0 && s < 2.0) {
        return Err(Error::input("exponent s must lie in (0, 2)"));
    }
    if q < 2.0 {
        return Err(Error::input("energy estimate needs q >= 2"));
    }
    if n_outer == 0 || n_inner == 0 || rounds < 2 || depth0 < 1 {
        return Err(Error::input("sample schedule must be nonempty"));
    }
    if ifs.len() > 16 {
        return Err(Error::input("energy sampling supports at most 16 maps"));
    }
    let (center, _) = invariant_ball(ifs)?;
    let mut schedule = Vec::new();
    let mut rejects: u64 = 0;
    let mut draws: u64 = 0;
    for r in 0..rounds {
        let depth = depth0 + r;
        let n_out = n_outer << r;
        let n_in = n_inner << r;
        let outer_vals = nm::ordered_map((0..n_out).collect::<Vec<u64>>(), |i| {
            let mut rng = stream(seed, r, i);
            let y = sample_point(ifs, weights, depth, &center, &mut rng);
            let mut inner = Kahan::new();
            let mut used: u64 = 0;
            let mut local_rejects: u64 = 0;
            let mut local_draws: u64 = 0;
            for _ in 0..n_in {
                let mut attempts = 0;
                loop {
                    let x = sample_point(ifs, weights, depth, &center, &mut rng);
                    local_draws += 1;
                    let d = nm::hypot(x[0] - y[0], x[1] - y[1]);
                    if d > 0.0 {
                        inner.add(nm::powf(d, -s));
                        used += 1;
                        break;
                    }
                    local_rejects += 1;
                    attempts += 1;
                    if attempts >= REDRAW_LIMIT {
                        break;
                    }
                }
            }
            let mean = if used > 0 { inner.value() / used as f64 } else { 0.0 };
            (nm::powf(mean, q - 1.0), local_rejects, local_draws)
        });
        let mut outer = Kahan::new();
        for &(v, lr, ld) in &outer_vals {
            outer.add(v);
            rejects += lr;
            draws += ld;
        }
        schedule.push(EnergyRound {
            depth,
            n_outer: n_out,
            n_inner: n_in,
            estimate: outer.value() / n_out as f64,
        });
    }
    let diffs: Vec<f64> = schedule
        .windows(2)
        .map(|w| (w[1].estimate - w[0].estimate) / w[0].estimate)
        .collect();
    let stability = if diffs.iter().all(|&d| d > 0.25) {
        Stability::Diverging
    } else if diffs.iter().all(|&d| d.abs() < 0.05) {
        Stability::Stable
    } else {
        Stability::Inconclusive
    };
    let rejection_rate = if draws > 0 {
        rejects as f64 / draws as f64
    } else {
        0.0
    };
    Ok(EnergyReport {
        s,
        q,
        schedule,
        stability,
        rejection_rate,
        rejection_warning: rejection_rate > 0.01,
    })
}

/// Per-level maxima of the truncated directional series
/// `r(theta) = sum_n sum_{|w|=n} mu[w]^q lambda_w(theta)^(-s(q-1))`
/// over a uniform angle grid.
///
/// Entry `n` of the returned curve is the maximum over the grid of the
/// partial sum through level `n`; entry 0 is the empty-word term 1.
/// Saturation of this curve is the numerical face of the series being
/// bounded.
pub fn r_diagnostic(
    ifs: &IfsSystem,
    weights: &WeightModel,
    s: f64,
    q: f64,
    depth: u32,
    n_angles: u32,
) -> Result<Vec<f64>> {
    if n_angles < 16 {
        return Err(Error::input("angle grid needs at least 16 points"));
    }
    if depth < 1 {
        return Err(Error::input("diagnostic needs depth >= 1"));
    }
    if nm::powf(ifs.len() as f64, f64::from(depth) + 1.0) > 1.0e8 {
        return Err(Error::resource("diagnostic depth exceeds the enumeration budget"));
    }
    if let Some(d) = weights.max_depth() {
        if (depth as usize) > d {
            return Err(Error::input(format!(
                "weights tabulated to depth {d}, requested depth {depth}"
            )));
        }
    }
    let thetas: Vec<Angle> = (0..n_angles)
        .map(|m| Angle::new(-FRAC_PI_2 + PI * f64::from(m + 1) / f64::from(n_angles)))
        .collect();
    let units: Vec<[f64; 2]> = thetas.iter().map(|t| t.unit()).collect();
    // One DFS pass over the whole tree; every node contributes its term
    // to its level's per-angle accumulator. Split at the first level for
    // worker-count-independent merging.
    let na = n_angles as usize;
    let partials = nm::ordered_map((0..ifs.len()).collect::<Vec<usize>>(), |first| {
        let mut acc = alloc::vec![Kahan::new(); depth as usize * na];
        let mut sl = ScaledLinear::identity();
        sl.push(ifs.maps()[first].linear());
        let lp = match weights {
            WeightModel::Bernoulli(p) => nm::ln(p[first]),
            _ => 0.0,
        };
        r_dfs(ifs, weights, s, q, depth, &units, sl, lp, 1, &mut acc);
        acc
    });
    let mut level_sums = alloc::vec![Kahan::new(); depth as usize * na];
    for part in &partials {
        for (dst, src) in level_sums.iter_mut().zip(part) {
            dst.add(src.value());
        }
    }
    let mut curve = Vec::with_capacity(depth as usize + 1);
    curve.push(1.0);
    let mut cumulative = alloc::vec![1.0f64; na];
    for n in 0..depth as usize {
        let mut level_max = f64::NEG_INFINITY;
        for (a, c) in cumulative.iter_mut().enumerate() {
            *c += level_sums[n * na + a].value();
            if *c > level_max {
                level_max = *c;
            }
        }
        curve.push(level_max);
    }
    Ok(curve)
}

#[allow(clippy::too_many_arguments)]
fn r_dfs(
    ifs: &IfsSystem,
    weights: &WeightModel,
    s: f64,
    q: f64,
    depth: u32,
    units: &[[f64; 2]],
    sl: ScaledLinear,
    log_p: f64,
    level: u32,
    acc: &mut [Kahan],
) {
    let na = units.len();
    let log_mu = match weights {
        WeightModel::Bernoulli(_) => log_p,
        WeightModel::KaenmakiApprox { exponent, log_z } => {
            let (la1, la2) = sl.log_alphas();
            log_svf_from(la1, la2, *exponent) - log_z[(level - 1) as usize]
        }
    };
    let base = (level - 1) as usize * na;
    for (a, u) in units.iter().enumerate() {
        let v = mat_vec(&sl.m, u);
        let log_lambda = nm::ln(nm::hypot(v[0], v[1])) + sl.log_scale;
        acc[base + a].add(nm::exp(q * log_mu - s * (q - 1.0) * log_lambda));
    }
    if level == depth {
        return;
    }
    for (i, map) in ifs.maps().iter().enumerate() {
        let mut child = sl;
        child.push(map.linear());
        let lp = match weights {
            WeightModel::Bernoulli(p) => log_p + nm::ln(p[i]),
            _ => 0.0,
        };
        r_dfs(ifs, weights, s, q, depth, units, child, lp, level + 1, acc);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::{bernoulli_weights, kaenmaki_weights};
    use crate::fixtures;

    #[test]
    fn rasterize_lebesgue_quarter_mesh() {
        let ifs = fixtures::lebesgue_square();
        let w = bernoulli_weights(&[0.25; 4]).unwrap();
        let g = rasterize(&ifs, &w, 0.25).unwrap();
        assert_eq!(g.cells.len(), 16);
        for &m in g.cells.values() {
            assert!((m - 1.0 / 16.0).abs() < 1e-12);
        }
        assert!((g.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rasterize_cantor_corners() {
        let ifs = fixtures::cantor_corners();
        let w = bernoulli_weights(&[0.5, 0.5]).unwrap();
        let g = rasterize(&ifs, &w, 1.0 / 9.0).unwrap();
        assert_eq!(g.cells.len(), 4);
        for &m in g.cells.values() {
            assert!((m - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn rasterize_conserves_mass() {
        let ifs = fixtures::positive_triple();
        let d = crate::dimension::affinity_dim(&ifs, 8, 1e-6).unwrap().value;
        let w = kaenmaki_weights(&ifs, d, 8).unwrap();
        for delta in [0.1, 0.03, 0.01] {
            let g = rasterize(&ifs, &w, delta).unwrap();
            assert!((g.total_mass() - 1.0).abs() < 1e-9);
            assert!(!g.depth_capped);
        }
    }

    #[test]
    fn moment_sum_hand_cases() {
        let mut cells = BTreeMap::new();
        cells.insert((0, 0), 1.0);
        let g = GridMeasure {
            delta: 1.0,
            origin: [0.0, 0.0],
            cells,
            depth_capped: false,
        };
        assert_eq!(moment_sum(&g, 0.0), 1.0);
        assert_eq!(moment_sum(&g, 2.0), 1.0);
        let mut cells = BTreeMap::new();
        cells.insert((0, 0), 0.5);
        cells.insert((1, 0), 0.5);
        let g = GridMeasure {
            delta: 1.0,
            origin: [0.0, 0.0],
            cells,
            depth_capped: false,
        };
        assert_eq!(moment_sum(&g, 0.0), 2.0);
        assert!((moment_sum(&g, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spectrum_lebesgue_slope_two() {
        let ifs = fixtures::lebesgue_square();
        let w = bernoulli_weights(&[0.25; 4]).unwrap();
        let deltas: Vec<f64> = (2..=6).map(|k| 0.5f64.powi(k)).collect();
        let sp = lq_spectrum(&ifs, &w, &[0.0, 1.0, 2.0], &deltas).unwrap();
        for fit in &sp.fits {
            assert!((fit.slope - 2.0).abs() < 0.02, "q={} slope={}", fit.q, fit.slope);
            assert!(fit.r_squared > 0.999);
        }
    }

    #[test]
    fn spectrum_cantor_corners() {
        let ifs = fixtures::cantor_corners();
        let w = bernoulli_weights(&[0.5, 0.5]).unwrap();
        let deltas: Vec<f64> = (2..=7).map(|k| (1.0f64 / 3.0).powi(k)).collect();
        let sp = lq_spectrum(&ifs, &w, &[0.0, 1.0, 2.0], &deltas).unwrap();
        let d = 2.0f64.ln() / 3.0f64.ln();
        for fit in &sp.fits {
            assert!((fit.slope - d).abs() < 0.02, "q={} slope={}", fit.q, fit.slope);
        }
    }

    #[test]
    fn spectrum_validates_schedule() {
        let ifs = fixtures::lebesgue_square();
        let w = bernoulli_weights(&[0.25; 4]).unwrap();
        assert!(lq_spectrum(&ifs, &w, &[0.0], &[0.25, 0.125]).is_err());
        assert!(lq_spectrum(&ifs, &w, &[0.0], &[0.25, 0.2, 0.19, 0.07]).is_err());
        let deltas: Vec<f64> = (2..=6).map(|k| 0.5f64.powi(k)).collect();
        assert!(lq_spectrum(&ifs, &w, &[9.0], &deltas).is_err());
    }

    #[test]
    fn energy_degenerate_exponent_near_one() {
        let ifs = fixtures::lebesgue_square();
        let w = bernoulli_weights(&[0.25; 4]).unwrap();
        let rep = energy_mc(&ifs, &w, 1e-6, 2.0, 100, 50, 3, 2, 42).unwrap();
        for round in &rep.schedule {
            assert!((round.estimate - 1.0).abs() < 1e-4, "estimate {}", round.estimate);
        }
    }

    #[test]
    fn energy_lebesgue_matches_quadrature() {
        // Deterministic quadrature oracle for E|x-y|^(-1) over the unit
        // square: 2.9732096 (difference-coordinate double integral).
        let ifs = fixtures::lebesgue_square();
        let w = bernoulli_weights(&[0.25; 4]).unwrap();
        let rep = energy_mc(&ifs, &w, 1.0, 2.0, 600, 300, 4, 3, 42).unwrap();
        let last = rep.schedule.last().unwrap().estimate;
        assert!((last - 2.9732096).abs() < 0.15, "estimate {last}");
        assert_eq!(rep.stability, Stability::Stable);
    }

    #[test]
    fn energy_reproducible() {
        let ifs = fixtures::cantor_corners();
        let w = bernoulli_weights(&[0.5, 0.5]).unwrap();
        let a = energy_mc(&ifs, &w, 0.4, 2.0, 80, 40, 4, 2, 7).unwrap();
        let b = energy_mc(&ifs, &w, 0.4, 2.0, 80, 40, 4, 2, 7).unwrap();
        for (ra, rb) in a.schedule.iter().zip(&b.schedule) {
            assert_eq!(ra.estimate.to_bits(), rb.estimate.to_bits());
        }
    }

    #[test]
    fn r_diagnostic_base_term() {
        let ifs = fixtures::cantor_corners();
        let w = bernoulli_weights(&[0.5, 0.5]).unwrap();
        let curve = r_diagnostic(&ifs, &w, 0.5, 2.0, 3, 16).unwrap();
        assert_eq!(curve[0], 1.0);
        for pair in curve.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }

    #[test]
    fn r_diagnostic_similarity_geometric_series() {
        // Level terms (2^(1-q) 3^(s(q-1)))^n = (sqrt(3)/2)^n for q = 2,
        // s = 1/2; the partial sums match the closed form and carry no
        // angle dependence.
        let ifs = fixtures::cantor_corners();
        let w = bernoulli_weights(&[0.5, 0.5]).unwrap();
        let depth = 20;
        let curve = r_diagnostic(&ifs, &w, 0.5, 2.0, depth, 16).unwrap();
        let r = 3.0f64.sqrt() / 2.0;
        let expected = (1.0 - r.powi(depth as i32 + 1)) / (1.0 - r);
        assert!((curve[depth as usize] - expected).abs() < 1e-9, "{} vs {expected}", curve[depth as usize]);
    }
}
