use serde_json::json;

use selfaffine::conditions::{
    check_bunching, check_positivity, check_separation, prop3_check, q0_bunching,
    q0_metric_bunching, QThreshold, SeparationStatus,
};
use selfaffine::dimension::{
    affinity_dim, bernoulli_weights, kaenmaki_weights, lq_exponent, WeightModel,
};
use selfaffine::empirical::{energy_mc, lq_spectrum, r_diagnostic, rasterize, Stability};
use selfaffine::ifs::{invariant_ball, singular_values};
use selfaffine::projective::gamma_bound;
use selfaffine::{fixtures, IfsSystem};

use crate::config::{default_depth, RunConfig};
use crate::output::{csv, num, render_png, Format, Target};

/// A command outcome that is not a clean exit: the code to return and a
/// message for stderr.
pub struct Fail {
    pub code: i32,
    pub message: String,
}

fn lib_err(e: selfaffine::Error) -> Fail {
    let code = match &e {
        selfaffine::Error::Resource(_) => 3,
        _ => 1,
    };
    Fail {
        code,
        message: e.to_string(),
    }
}

fn io_err(m: String) -> Fail {
    Fail {
        code: 74,
        message: m,
    }
}

/// Parameters after merging command-line flags over config values.
pub struct Eff {
    pub depth: Option<u32>,
    pub tol: f64,
    pub seed: u64,
    pub target: Target,
}

impl Eff {
    fn depth_for(&self, ifs: &IfsSystem) -> u32 {
        self.depth.unwrap_or_else(|| default_depth(ifs.len()))
    }
}

fn q_threshold_json(t: &QThreshold) -> serde_json::Value {
    match t {
        QThreshold::Value(v) => json!(v),
        QThreshold::Infinite => json!("inf"),
        QThreshold::NoneBelowTwo => json!("none"),
    }
}

fn q_threshold_text(t: &QThreshold) -> String {
    match t {
        QThreshold::Value(v) => format!("{v:.6}"),
        QThreshold::Infinite => "inf".into(),
        QThreshold::NoneBelowTwo => "none below 2".into(),
    }
}

fn all_diagonal(ifs: &IfsSystem) -> bool {
    ifs.maps()
        .iter()
        .all(|m| m.linear()[0][1] == 0.0 && m.linear()[1][0] == 0.0)
}

/// Weight model for the configured system: Bernoulli when a probability
/// vector is present, otherwise the depth-`table` surrogate for the
/// measure of maximal dimension.
fn weight_model(
    cfg: &RunConfig,
    ifs: &IfsSystem,
    d: f64,
    table: u32,
) -> Result<(WeightModel, &'static str), Fail> {
    match &cfg.probabilities {
        Some(p) => Ok((bernoulli_weights(p).map_err(lib_err)?, "bernoulli")),
        None => Ok((kaenmaki_weights(ifs, d, table).map_err(lib_err)?, "kaenmaki")),
    }
}

/// Table depth needed so the weight model covers every word a
/// `delta`-stopping rasterization can reach.
fn raster_table_depth(ifs: &IfsSystem, delta_min: f64) -> Result<u32, Fail> {
    let (_, r) = invariant_ball(ifs).map_err(lib_err)?;
    let diam = (2.0 * r).max(1e-9);
    let mut a1max: f64 = 0.0;
    for m in ifs.maps() {
        a1max = a1max.max(singular_values(m.linear()).map_err(lib_err)?.alpha1);
    }
    if delta_min >= diam {
        return Ok(1);
    }
    let need = ((delta_min / diam).ln() / a1max.ln()).ceil() as u32 + 1;
    Ok(need.clamp(1, 40))
}

pub fn cmd_check(cfg: &RunConfig, eff: &Eff) -> Result<i32, Fail> {
    let ifs = cfg.system().map_err(|m| Fail { code: 64, message: m })?;
    let depth = eff.depth_for(&ifs);
    let positivity = check_positivity(&ifs);
    if !positivity && !all_diagonal(&ifs) {
        let report = json!({
            "positivity": false,
            "sign_pattern": "mixed",
        });
        eff.target.emit("check", &report.to_string()).map_err(io_err)?;
        eprintln!("positivity: failed (mixed sign pattern); remaining checks skipped");
        return Ok(1);
    }
    let d = affinity_dim(&ifs, depth, eff.tol).map_err(lib_err)?;
    let gamma_depth = cfg.params.gamma_depth.unwrap_or(8);
    let gamma = gamma_bound(&ifs, gamma_depth).map_err(lib_err)?;
    let sep_depth = cfg.params.sep_depth.unwrap_or_else(|| depth.min(8));
    let sep = check_separation(&ifs, sep_depth).map_err(lib_err)?;
    let g = gamma.certified_upper;
    let q0 = q0_bunching(&ifs, g, d.value).map_err(lib_err)?;
    let (bunched, margins) = check_bunching(&ifs, g, d.value, 2.0).map_err(lib_err)?;
    let q0_metric = match &cfg.probabilities {
        Some(p) => Some(
            q0_metric_bunching(&ifs, g, p, depth.min(8), eff.tol).map_err(lib_err)?,
        ),
        None => None,
    };
    let (prop3_ok, sums) = prop3_check(&ifs, g, d.value, d.value).map_err(lib_err)?;

    let report = json!({
        "positivity": positivity,
        "separation": {
            "status": match sep.status {
                SeparationStatus::Certified => "certified",
                SeparationStatus::Undetermined => "undetermined",
            },
            "gap": sep.gap,
            "depth": sep.depth,
        },
        "gamma": {
            "certified_upper": g,
            "separated": gamma.separated,
            "truncated": gamma.truncated,
        },
        "affinity_dim": {
            "value": d.value,
            "bracket": [d.bracket.0, d.bracket.1],
            "depth": d.depth,
            "converged": d.converged,
        },
        "q0_bunching": q_threshold_json(&q0),
        "q0_metric": q0_metric.as_ref().map(q_threshold_json),
        "bunched_at_2": bunched,
        "bunching_margins_q2": margins,
        "prop3": {
            "passes": prop3_ok,
            "existence_sum": sums.existence_sum,
            "sum_alpha1_d2": sums.sum_alpha1_d2,
            "sum_alpha1_d": sums.sum_alpha1_d,
        },
    });
    eff.target.emit("check", &report.to_string()).map_err(io_err)?;

    eprintln!("positivity        {}", if positivity { "yes" } else { "no (diagonal)" });
    eprintln!(
        "separation        {} (gap {:.3e}, depth {})",
        match sep.status {
            SeparationStatus::Certified => "certified",
            SeparationStatus::Undetermined => "undetermined",
        },
        sep.gap,
        sep.depth
    );
    eprintln!("gamma upper bound {:.6}{}", g, if gamma.separated { " (separated)" } else { "" });
    eprintln!("affinity dim      {:.6} in [{:.6}, {:.6}]", d.value, d.bracket.0, d.bracket.1);
    eprintln!("q0 (bunching)     {}", q_threshold_text(&q0));
    if let Some(t) = &q0_metric {
        eprintln!("q0 (metric)       {}", q_threshold_text(t));
    }
    eprintln!("existence sum     {:.6} ({})", sums.existence_sum, if prop3_ok { "passes" } else { "fails" });

    if sep.status == SeparationStatus::Undetermined {
        return Ok(2);
    }
    if q0 == QThreshold::NoneBelowTwo || q0_metric == Some(QThreshold::NoneBelowTwo) {
        return Ok(1);
    }
    Ok(0)
}

pub fn cmd_dim(cfg: &RunConfig, eff: &Eff) -> Result<i32, Fail> {
    let ifs = cfg.system().map_err(|m| Fail { code: 64, message: m })?;
    let depth = eff.depth_for(&ifs);
    let d = affinity_dim(&ifs, depth, eff.tol).map_err(lib_err)?;
    let qs = cfg.params.qs.clone().unwrap_or_else(|| vec![2.0, 3.0, 4.0]);
    let (weights, kind) = weight_model(cfg, &ifs, d.value, depth)?;

    let mut rows = vec![vec![
        "d".to_string(),
        num(d.value),
        d.depth.to_string(),
        num(d.bracket.0),
        num(d.bracket.1),
    ]];
    let mut dq_json = Vec::new();
    let mut partial = None;
    for &q in &qs {
        match lq_exponent(&ifs, &weights, q, depth, eff.tol) {
            Ok(e) => {
                rows.push(vec![
                    num(q),
                    num(e.value),
                    e.depth.to_string(),
                    num(e.bracket.0),
                    num(e.bracket.1),
                ]);
                dq_json.push(json!({
                    "q": q, "value": e.value, "depth": e.depth,
                    "bracket": [e.bracket.0, e.bracket.1], "converged": e.converged,
                }));
            }
            Err(e) => {
                let f = lib_err(e);
                if f.code == 3 {
                    partial = Some(f.message);
                    break;
                }
                return Err(f);
            }
        }
    }

    let body = match eff.target.format {
        Format::Csv => {
            let mut s = csv("q,dq_value,depth,bracket_lo,bracket_hi", &rows);
            if partial.is_some() {
                s.push_str("# partial: budget exhausted\n");
            }
            s
        }
        Format::Json => json!({
            "affinity_dim": {
                "value": d.value, "depth": d.depth,
                "bracket": [d.bracket.0, d.bracket.1], "converged": d.converged,
            },
            "weights": kind,
            "dq": dq_json,
            "partial": partial.is_some(),
        })
        .to_string(),
    };
    eff.target.emit("dim", &body).map_err(io_err)?;
    eprintln!("d = {:.6} in [{:.6}, {:.6}] at depth {}", d.value, d.bracket.0, d.bracket.1, d.depth);
    match partial {
        Some(m) => {
            eprintln!("partial output: {m}");
            Ok(3)
        }
        None => Ok(0),
    }
}

fn default_deltas() -> Vec<f64> {
    (5..=11).map(|k| (0.5f64).powi(k)).collect()
}

pub fn cmd_lq(cfg: &RunConfig, eff: &Eff) -> Result<i32, Fail> {
    let ifs = cfg.system().map_err(|m| Fail { code: 64, message: m })?;
    let depth = eff.depth_for(&ifs);
    let d = affinity_dim(&ifs, depth, eff.tol).map_err(lib_err)?;
    let qs = cfg.params.qs.clone().unwrap_or_else(|| vec![0.0, 1.0, 2.0]);
    let deltas = cfg.params.deltas.clone().unwrap_or_else(default_deltas);
    let delta_min = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    let table = raster_table_depth(&ifs, delta_min)?.max(depth);
    let (weights, kind) = weight_model(cfg, &ifs, d.value, table)?;
    let spec = lq_spectrum(&ifs, &weights, &qs, &deltas).map_err(lib_err)?;

    // Theoretical overlay: the affinity dimension for the surrogate
    // weights, the moment exponent d(q) for Bernoulli ones (defined for
    // q > 1 only).
    let mut fit_rows = Vec::new();
    let mut fits_json = Vec::new();
    for f in &spec.fits {
        let theory = if kind == "kaenmaki" {
            d.value
        } else if f.q > 1.0 + 1e-9 {
            lq_exponent(&ifs, &weights, f.q, depth, eff.tol).map_err(lib_err)?.value
        } else {
            f64::NAN
        };
        let dev = (f.slope - theory).abs();
        fit_rows.push(vec![num(f.q), num(f.slope), num(f.r_squared), num(theory), num(dev)]);
        fits_json.push(json!({
            "q": f.q, "slope": f.slope, "r_squared": f.r_squared,
            "theory": if theory.is_nan() { serde_json::Value::Null } else { json!(theory) },
            "deviation": if dev.is_nan() { serde_json::Value::Null } else { json!(dev) },
        }));
    }
    let moment_rows: Vec<Vec<String>> = spec
        .moments
        .iter()
        .map(|&(q, dl, m)| vec![num(q), num(dl), num(m)])
        .collect();

    match eff.target.format {
        Format::Csv => {
            eff.target
                .emit("lq_fits", &csv("q,slope,r_squared,theory,deviation", &fit_rows))
                .map_err(io_err)?;
            eff.target
                .emit("lq_moments", &csv("q,delta,moment", &moment_rows))
                .map_err(io_err)?;
        }
        Format::Json => {
            let body = json!({
                "weights": kind,
                "fits": fits_json,
                "moments": spec.moments.iter().map(|&(q, dl, m)| json!([q, dl, m])).collect::<Vec<_>>(),
                "deltas_used": spec.deltas_used,
                "capped_deltas": spec.capped_deltas,
            });
            eff.target.emit("lq", &body.to_string()).map_err(io_err)?;
        }
    }
    for f in &spec.fits {
        eprintln!("q = {:>4}: slope {:.4} (r2 {:.5})", f.q, f.slope, f.r_squared);
    }
    Ok(0)
}

pub fn cmd_diag(cfg: &RunConfig, eff: &Eff) -> Result<i32, Fail> {
    let ifs = cfg.system().map_err(|m| Fail { code: 64, message: m })?;
    let n = ifs.len() as f64;
    let depth = eff.depth_for(&ifs);
    let d = affinity_dim(&ifs, depth, eff.tol).map_err(lib_err)?;
    let q = cfg.params.q.unwrap_or(2.0);
    let s_values = cfg.params.s_values.clone().unwrap_or_else(|| {
        vec![(d.value - 0.05).max(0.01), (d.value + 0.2).min(1.99)]
    });
    // Default diagnostic depth keeps the word enumeration near 2e6.
    let r_depth = eff
        .depth
        .unwrap_or_else(|| (((2.0e6f64).ln() / n.ln()) as u32).saturating_sub(1).clamp(4, 20));
    let n_angles = cfg.params.n_angles.unwrap_or(64);
    let n_outer = cfg.params.n_outer.unwrap_or(200);
    let n_inner = cfg.params.n_inner.unwrap_or(100);
    let depth0 = cfg.params.depth0.unwrap_or(8);
    let rounds = cfg.params.rounds.unwrap_or(4);
    let table = r_depth.max(depth0 + rounds - 1).max(depth);
    let (weights, kind) = weight_model(cfg, &ifs, d.value, table)?;

    let mut r_rows = Vec::new();
    let mut energy_rows = Vec::new();
    let mut json_blocks = Vec::new();
    for &s in &s_values {
        let curve = r_diagnostic(&ifs, &weights, s, q, r_depth, n_angles).map_err(lib_err)?;
        for (level, v) in curve.iter().enumerate() {
            r_rows.push(vec![num(s), level.to_string(), num(*v)]);
        }
        let energy = energy_mc(&ifs, &weights, s, q, n_outer, n_inner, depth0, rounds, eff.seed)
            .map_err(lib_err)?;
        let stability = match energy.stability {
            Stability::Stable => "stable",
            Stability::Diverging => "diverging",
            Stability::Inconclusive => "inconclusive",
        };
        for r in &energy.schedule {
            energy_rows.push(vec![
                num(s),
                r.depth.to_string(),
                r.n_outer.to_string(),
                r.n_inner.to_string(),
                num(r.estimate),
                stability.to_string(),
            ]);
        }
        eprintln!(
            "s = {:.4}: r-curve final {:.4e}, energy {} (last estimate {:.4e})",
            s,
            curve.last().copied().unwrap_or(f64::NAN),
            stability,
            energy.schedule.last().map_or(f64::NAN, |r| r.estimate)
        );
        json_blocks.push(json!({
            "s": s,
            "q": q,
            "r_curve": curve,
            "energy": {
                "stability": stability,
                "rejection_rate": energy.rejection_rate,
                "rejection_warning": energy.rejection_warning,
                "schedule": energy.schedule.iter().map(|r| json!({
                    "depth": r.depth, "n_outer": r.n_outer,
                    "n_inner": r.n_inner, "estimate": r.estimate,
                })).collect::<Vec<_>>(),
            },
        }));
    }
    match eff.target.format {
        Format::Csv => {
            eff.target
                .emit("diag_r", &csv("s,level,r_max", &r_rows))
                .map_err(io_err)?;
            eff.target
                .emit(
                    "diag_energy",
                    &csv("s,depth,n_outer,n_inner,estimate,stability", &energy_rows),
                )
                .map_err(io_err)?;
        }
        Format::Json => {
            let body = json!({ "weights": kind, "seed": eff.seed, "runs": json_blocks });
            eff.target.emit("diag", &body.to_string()).map_err(io_err)?;
        }
    }
    Ok(0)
}

pub fn cmd_render(cfg: &RunConfig, eff: &Eff) -> Result<i32, Fail> {
    let ifs = cfg.system().map_err(|m| Fail { code: 64, message: m })?;
    let delta = cfg.params.delta.unwrap_or(1.0 / 64.0);
    let depth = eff.depth_for(&ifs);
    let d = affinity_dim(&ifs, depth, eff.tol).map_err(lib_err)?;
    let table = raster_table_depth(&ifs, delta)?;
    let (weights, _) = weight_model(cfg, &ifs, d.value, table)?;
    let grid = rasterize(&ifs, &weights, delta).map_err(lib_err)?;

    let rows: Vec<Vec<String>> = grid
        .cells
        .iter()
        .map(|(&(x, y), &m)| vec![x.to_string(), y.to_string(), num(m)])
        .collect();
    match eff.target.format {
        Format::Csv => eff
            .target
            .emit("cells", &csv("cell_x,cell_y,mass", &rows))
            .map_err(io_err)?,
        Format::Json => {
            let body = json!({
                "delta": grid.delta,
                "depth_capped": grid.depth_capped,
                "cells": grid.cells.iter().map(|(&(x, y), &m)| json!([x, y, m])).collect::<Vec<_>>(),
            });
            eff.target.emit("cells", &body.to_string()).map_err(io_err)?;
        }
    }
    let png = eff
        .target
        .dir
        .clone()
        .unwrap_or_else(|| std::path::PathBuf::from("."))
        .join("render.png");
    if let Some(dir) = &eff.target.dir {
        std::fs::create_dir_all(dir).map_err(|e| io_err(format!("{}: {e}", dir.display())))?;
    }
    render_png(&grid, &png).map_err(io_err)?;
    eprintln!(
        "rendered {} cells at delta {} to {}",
        grid.cells.len(),
        grid.delta,
        png.display()
    );
    Ok(0)
}

const FIXTURE_NAMES: &[&str] = &[
    "lebesgue-square",
    "cantor-corners",
    "third-similarities",
    "diagonal-pair",
    "overlapping-squares",
    "positive-triple",
    "positive-pair",
];

fn fixture_config(name: &str) -> Option<RunConfig> {
    let (ifs, probs) = match name {
        "lebesgue-square" => (fixtures::lebesgue_square(), None),
        "cantor-corners" => (fixtures::cantor_corners(), None),
        "third-similarities" => (fixtures::third_similarities(), None),
        "diagonal-pair" => (fixtures::diagonal_pair(), None),
        "overlapping-squares" => (fixtures::overlapping_squares(), None),
        "positive-triple" => (
            fixtures::positive_triple(),
            Some(fixtures::positive_triple_probabilities().to_vec()),
        ),
        "positive-pair" => (fixtures::positive_pair(), None),
        _ => return None,
    };
    Some(RunConfig::from_system(&ifs, probs))
}

pub fn cmd_fixtures(name: Option<&str>, eff: &Eff) -> Result<i32, Fail> {
    let names: Vec<&str> = match name {
        Some(n) => {
            if !FIXTURE_NAMES.contains(&n) {
                return Err(Fail {
                    code: 64,
                    message: format!("unknown fixture {n:?}; known: {}", FIXTURE_NAMES.join(", ")),
                });
            }
            vec![n]
        }
        None => FIXTURE_NAMES.to_vec(),
    };
    if eff.target.dir.is_none() && names.len() > 1 {
        // One file per fixture needs a directory; on stdout print a
        // single object keyed by name instead.
        let mut all = serde_json::Map::new();
        for n in names {
            let cfg = fixture_config(n).expect("listed fixture exists");
            all.insert(n.to_string(), serde_json::to_value(&cfg).expect("serializes"));
        }
        println!("{}", serde_json::Value::Object(all));
        return Ok(0);
    }
    for n in names {
        let cfg = fixture_config(n).expect("listed fixture exists");
        match &eff.target.dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)
                    .map_err(|e| io_err(format!("{}: {e}", dir.display())))?;
                let path = dir.join(format!("{n}.json"));
                std::fs::write(&path, cfg.to_json())
                    .map_err(|e| io_err(format!("{}: {e}", path.display())))?;
            }
            None => println!("{}", cfg.to_json()),
        }
    }
    Ok(0)
}
