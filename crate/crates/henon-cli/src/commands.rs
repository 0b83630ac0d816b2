use henon::cantor::{adding_machine_check, cantor_sample, hausdorff, periodic_point, Hierarchy, Word};
use henon::geometry::{box_scaling, geometry_sweep};
use henon::maps::default_box2;
use henon::renorm::{build_tower, conjugacy_defect, tune_parameter, RenormTower};
use henon::stats::linear_fit;
use henon::surfaces::{
    embedded_conjugacy_check, embedded_universality, graph_transform, rescale_surface, SurfaceGraph,
};
use henon::universality::doubling::FEIGENBAUM_POINT;
use henon::universality::{
    average_jacobian, distortion_check, jacobian_factors, jacobian_universality, strong_stable_rate,
    tilt_scaling,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{num, opt, Output};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Math(henon::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl From<henon::Error> for CliError {
    fn from(e: henon::Error) -> Self {
        if e.is_config() {
            CliError::Config(ConfigError::Invalid(e.to_string()))
        } else {
            CliError::Math(e)
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Math(_) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Tower of the configured map, tuned to the accumulation point unless `c` is fixed.
pub struct Built {
    pub c: f64,
    pub tower: RenormTower,
    pub stopped: Option<henon::Error>,
}

pub fn build(cfg: &ExperimentConfig) -> Result<Built> {
    let fam = |c: f64| cfg.family.build(c, cfg.settings.budget);
    match cfg.family.c {
        Some(c) => {
            let rep = build_tower(&fam(c)?, cfg.depth, &cfg.settings);
            Ok(Built { c, tower: rep.tower, stopped: rep.stopped })
        }
        None => {
            let tuned = tune_parameter(&fam, cfg.family.seed_parameter(), cfg.depth, &cfg.settings)?;
            Ok(Built { c: tuned.c, tower: tuned.tower, stopped: None })
        }
    }
}

fn full_hierarchy(cfg: &ExperimentConfig) -> Result<(f64, Hierarchy)> {
    let built = build(cfg)?;
    if built.tower.depth() < cfg.depth {
        let e = built.stopped.unwrap_or_else(|| henon::Error::NotRenormalizable("short tower".into()));
        return Err(e.into());
    }
    Ok((built.c, Hierarchy::from_tower(&built.tower, &cfg.settings)?))
}

fn error_text<T>(r: &henon::Result<T>) -> String {
    r.as_ref().err().map(|e| e.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct RenormSummary {
    config_hash: String,
    c: f64,
    requested_depth: usize,
    depth: usize,
    stopped: Option<String>,
    b_f: Option<f64>,
    b1: Option<f64>,
    b2: Option<f64>,
    /// `|b_F − b₁ b₂| / b_F` below 1%.
    product_rule: Option<bool>,
    max_conjugacy_defect: f64,
    conjugacy_ok: bool,
}

pub fn renormalize(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let built = build(cfg)?;
    let tower = &built.tower;
    let tol = &cfg.tolerances;
    let defects: Vec<henon::Result<f64>> = (0..tower.depth())
        .into_par_iter()
        .map(|k| {
            let st = &tower.steps[k];
            conjugacy_defect(tower.map(k), tower.map(k + 1), st.p, st.s, tol.samples, cfg.seed + k as u64)
        })
        .collect();
    let rows: Vec<Vec<String>> = tower
        .summary()
        .iter()
        .map(|l| {
            let conj = defects.get(l.level);
            vec![
                l.level.to_string(),
                opt(l.s),
                opt(l.p),
                num(l.eps_norm),
                num(l.delta_norm),
                opt(l.defect),
                conj.and_then(|r| r.as_ref().ok().copied()).map(num).unwrap_or_default(),
                conj.map(error_text).unwrap_or_default(),
            ]
        })
        .collect();
    out.csv(
        "levels.csv",
        &["level", "s", "p", "eps_norm", "delta_norm", "step_defect", "conjugacy_defect", "error"],
        &rows,
    )?;
    let norms: Vec<(f64, f64)> = tower.summary().iter().map(|l| (l.level as f64, l.eps_norm)).collect();
    out.dat("eps_norms.dat", &norms)?;
    out.json("tower.json", tower)?;

    let max_defect = defects.iter().map(|r| *r.as_ref().unwrap_or(&f64::INFINITY)).fold(0.0, f64::max);
    let h = Hierarchy::from_tower(tower, &cfg.settings).ok().filter(|h| h.depth() > 0);
    let b_f = h.as_ref().and_then(|h| average_jacobian(h, h.depth()).ok()).map(|a| a.value);
    let factors = match &h {
        Some(h) if h.dims() == 3 => jacobian_factors(h, h.depth()).ok(),
        _ => None,
    };
    let summary = RenormSummary {
        config_hash: out.hash().to_owned(),
        c: built.c,
        requested_depth: cfg.depth,
        depth: tower.depth(),
        stopped: built.stopped.as_ref().map(|e| e.to_string()),
        b_f,
        b1: factors.map(|f| f.b1),
        b2: factors.map(|f| f.b2),
        product_rule: factors.map(|f| ((f.b_f - f.b1 * f.b2) / f.b_f).abs() < 1e-2),
        max_conjugacy_defect: max_defect,
        conjugacy_ok: max_defect <= tol.conjugacy,
    };
    out.json("summary.json", &summary)?;
    match built.stopped {
        Some(e) if tower.depth() < cfg.depth => Err(CliError::Math(e)),
        _ => Ok(()),
    }
}

pub fn cantor(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let (c, h) = full_hierarchy(cfg)?;
    let n = h.depth();
    let sample = cantor_sample(&h, n)?;
    let rows: Vec<Vec<String>> = sample
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = vec![i.to_string(), sample.word(i).to_string()];
            r.extend(p[..h.dims()].iter().map(|&v| num(v)));
            r
        })
        .collect();
    let header: &[&str] =
        if h.dims() == 3 { &["index", "word", "x", "y", "z"] } else { &["index", "word", "x", "y"] };
    out.csv("cantor.csv", header, &rows)?;
    out.dat("cantor.dat", &sample.points.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>())?;

    let periodic: Vec<Vec<String>> = (1..=n.min(6))
        .map(|m| -> Result<Vec<String>> {
            let orbit: Vec<_> =
                Word::all(m).par_iter().map(|w| periodic_point(&h, w)).collect::<henon::Result<_>>()?;
            let level = cantor_sample(&h, m)?;
            Ok(vec![m.to_string(), orbit.len().to_string(), num(hausdorff(&orbit, &level.points))])
        })
        .collect::<Result<_>>()?;
    out.csv("periodic.csv", &["level", "points", "hausdorff"], &periodic)?;

    let machine = adding_machine_check(&h, n.min(8))?;
    out.json(
        "cantor.json",
        &json!({
            "config_hash": out.hash(),
            "c": c,
            "level": n,
            "weight": sample.weight,
            "min_pairwise_distance": sample.min_pairwise_distance(),
            "adding_machine": machine,
        }),
    )?;
    Ok(())
}

pub fn universality(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let (c, h) = full_hierarchy(cfg)?;
    let depth = h.depth();
    let levels: Vec<usize> = (1..=depth).collect();
    let rows: Vec<Vec<String>> = levels
        .par_iter()
        .map(|&n| {
            let avg = average_jacobian(&h, n);
            let dist = distortion_check(&h, n);
            let prof = jacobian_universality(&h, n);
            let errs: Vec<String> = [error_text(&avg), error_text(&dist), error_text(&prof)]
                .into_iter()
                .filter(|s| !s.is_empty())
                .collect();
            vec![
                n.to_string(),
                avg.as_ref().map(|a| num(a.value)).unwrap_or_default(),
                avg.as_ref().map(|a| num(a.gap)).unwrap_or_default(),
                dist.as_ref().map(|d| num(d.sup)).unwrap_or_default(),
                prof.as_ref().map(|p| num(p.spread)).unwrap_or_default(),
                prof.as_ref().ok().and_then(|p| p.step).map(num).unwrap_or_default(),
                errs.join("; "),
            ]
        })
        .collect();
    out.csv(
        "universality.csv",
        &["level", "b_f", "estimator_gap", "distortion", "profile_spread", "profile_step", "error"],
        &rows,
    )?;

    let tilts = if depth >= 2 { tilt_scaling(&h, (depth - 1).min(5))? } else { Vec::new() };
    let tilt_rows: Vec<Vec<String>> =
        tilts.iter().map(|t| vec![t.k.to_string(), num(t.t), num(t.b_power), num(t.ratio)]).collect();
    out.csv("tilt.csv", &["k", "tilt", "b_power", "ratio"], &tilt_rows)?;

    let profile_level = (1..=depth).rev().find_map(|n| jacobian_universality(&h, n).ok());
    if let Some(p) = &profile_level {
        let xs = default_box2()[0].linspace(101);
        out.dat("profile.dat", &xs.iter().map(|&x| (x, p.profile.value(&[x]))).collect::<Vec<_>>())?;
    }
    let strong = if h.dims() == 3 { strong_stable_rate(&h, &levels).ok() } else { None };
    out.json(
        "universality.json",
        &json!({
            "config_hash": out.hash(),
            "c": c,
            "depth": depth,
            "b_f": average_jacobian(&h, depth)?.value,
            "profile_level": profile_level.as_ref().map(|p| p.level),
            "strong_stable": strong,
        }),
    )?;
    Ok(())
}

fn slope_fit(rows: &[(usize, f64)]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|(_, v)| *v > 0.0).map(|&(n, v)| (n as f64, v.ln())).unzip();
    linear_fit(&xs, &ys).map(|f| f.slope)
}

pub fn surface(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    if !cfg.family.is_spatial() {
        return Err(ConfigError::Invalid("surface needs a three-dimensional family".into()).into());
    }
    let (c, h) = full_hierarchy(cfg)?;
    let tol = &cfg.tolerances;
    let s: SurfaceGraph = graph_transform(h.map(0), None, tol.surface_iters, tol.surface)?;
    let depth = h.depth();

    let rescaled: Vec<_> = (1..depth).into_par_iter().map(|n| (n, rescale_surface(&h, &s, n))).collect();
    let rows: Vec<Vec<String>> = rescaled
        .iter()
        .map(|(n, r)| match r {
            Ok(r) => vec![
                n.to_string(),
                num(r.c0),
                num(r.residual),
                num(r.abs_residual),
                num(r.dx_sup),
                opt(r.c0_formula),
                String::new(),
            ],
            Err(e) => vec![
                n.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.to_string(),
            ],
        })
        .collect();
    out.csv(
        "rescaled.csv",
        &["level", "c0", "residual", "abs_residual", "dx_sup", "c0_formula", "error"],
        &rows,
    )?;
    let ok: Vec<&henon::surfaces::Rescaled> =
        rescaled.iter().filter_map(|(n, r)| r.as_ref().ok().filter(|_| (2..=5).contains(n))).collect();
    let rel: Vec<(usize, f64)> = ok.iter().map(|r| (r.n, r.residual)).collect();
    let abs: Vec<(usize, f64)> = ok.iter().map(|r| (r.n, r.abs_residual)).collect();
    out.dat("abs_residual.dat", &abs.iter().map(|&(n, v)| (n as f64, v)).collect::<Vec<_>>())?;

    let embedded: Vec<Vec<String>> = (2..depth)
        .into_par_iter()
        .map(|n| match embedded_universality(&h, &s, n) {
            Ok(e) => vec![
                n.to_string(),
                num(e.b_2d),
                num(e.defect),
                num(e.oracle_gap),
                opt(e.jacobian_gap),
                String::new(),
            ],
            Err(e) => {
                vec![n.to_string(), String::new(), String::new(), String::new(), String::new(), e.to_string()]
            }
        })
        .collect();
    out.csv("embedded.csv", &["level", "b_2d", "defect", "oracle_gap", "jacobian_gap", "error"], &embedded)?;

    let conj: Vec<Vec<String>> = (0..depth.saturating_sub(1).min(4))
        .into_par_iter()
        .map(|k| match embedded_conjugacy_check(&h, &s, k) {
            Ok(r) => vec![k.to_string(), num(r.defect), opt(r.consistency), String::new()],
            Err(e) => vec![k.to_string(), String::new(), String::new(), e.to_string()],
        })
        .collect();
    out.csv("conjugacy.csv", &["level", "defect", "consistency", "error"], &conj)?;

    let xs = default_box2()[0].inflate(-0.1).linspace(65);
    let heights: Vec<(f64, f64)> =
        xs.iter().filter_map(|&x| s.height_at(x, 0.0).ok().map(|z| (x, z))).collect();
    out.dat("surface.dat", &heights)?;
    out.json(
        "surface.json",
        &json!({
            "config_hash": out.hash(),
            "c": c,
            "defect": s.defect,
            "changes": s.changes,
            "contraction": s.contraction(),
            "slope_contraction": s.slope_contraction(),
            "log_sigma": box_scaling().ln(),
            "residual_slope": slope_fit(&rel),
            "abs_residual_slope": slope_fit(&abs),
        }),
    )?;
    Ok(())
}

pub fn geometry(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let grid = cfg.b_grid();
    let sweep = cfg.sweep_settings();
    let report = geometry_sweep(&grid, &sweep, &cfg.settings);
    let mut rows = Vec::new();
    for &b in &grid {
        let point = report.points.iter().find(|p| p.b == b);
        let failure = report.failures.iter().find(|f| f.0 == b);
        for &k in &sweep.ks {
            let hits = point.map_or(0, |p| p.records.iter().filter(|r| r.k == k).count());
            let best = point.and_then(|p| p.min_ratio.iter().find(|m| m.0 == k)).and_then(|m| m.1);
            let status = match (point, best) {
                (None, _) => "failed",
                (Some(_), None) => "no_hit",
                _ => "ok",
            };
            rows.push(vec![
                num(b),
                point.map(|p| num(p.c)).unwrap_or_default(),
                k.to_string(),
                status.to_string(),
                hits.to_string(),
                opt(best),
                failure.map(|f| f.1.clone()).unwrap_or_default(),
            ]);
        }
    }
    out.csv("geometry.csv", &["b", "c", "k", "status", "hits", "min_ratio", "error"], &rows)?;

    let records: Vec<Vec<String>> = report
        .points
        .iter()
        .flat_map(|p| &p.records)
        .map(|r| {
            vec![
                num(r.b),
                r.k.to_string(),
                r.n.to_string(),
                r.word.clone(),
                num(r.dist_min),
                num(r.diam),
                num(r.ratio),
                r.overlap.to_string(),
                num(r.window),
                num(r.log_dist_scaled),
                num(r.log_diam_scaled),
            ]
        })
        .collect();
    out.csv(
        "records.csv",
        &[
            "b",
            "k",
            "n",
            "word",
            "dist_min",
            "diam",
            "ratio",
            "overlap",
            "window",
            "log_dist_scaled",
            "log_diam_scaled",
        ],
        &records,
    )?;

    let (k_lo, k_hi) = (sweep.ks[0], *sweep.ks.last().expect("nonempty ks"));
    let trend: Vec<(f64, f64)> = report
        .points
        .iter()
        .filter_map(|p| {
            let at = |k| p.min_ratio.iter().find(|m| m.0 == k).and_then(|m| m.1);
            Some((p.b, at(k_hi)? / at(k_lo)?))
        })
        .collect();
    out.dat("trend.dat", &trend)?;
    let passing = trend.iter().filter(|t| t.1 <= 0.5).count();
    out.json(
        "geometry.json",
        &json!({
            "config_hash": out.hash(),
            "grid": grid.len(),
            "hit_density": report.hit_density,
            "compared": trend.len(),
            "halved": passing,
            "failures": report.failures,
        }),
    )?;
    Ok(())
}

/// `(c, b_F, tilt ratio)` at one grid value.
type SweepRow = (f64, f64, Option<f64>);

pub fn sweep(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let grid = cfg.b_grid();
    let depth = cfg.grid.tune_depth;
    let rows: Vec<(f64, henon::Result<SweepRow>)> = grid
        .par_iter()
        .map(|&b| {
            let fam_spec = cfg.family.with_b(b);
            let fam = |c: f64| fam_spec.build(c, cfg.settings.budget);
            let r = tune_parameter(&fam, fam_spec.seed_parameter(), depth, &cfg.settings).and_then(|t| {
                let h = Hierarchy::from_tower(&t.tower, &cfg.settings)?;
                let b_f = average_jacobian(&h, h.depth())?.value;
                let tilt = tilt_scaling(&h, 1).ok().and_then(|v| v.first().map(|r| r.ratio));
                Ok((t.c, b_f, tilt))
            });
            (b, r)
        })
        .collect();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|(b, r)| match r {
            Ok((c, b_f, tilt)) => {
                vec![num(*b), num(*c), num(c - FEIGENBAUM_POINT), num(*b_f), opt(*tilt), String::new()]
            }
            Err(e) => {
                vec![num(*b), String::new(), String::new(), String::new(), String::new(), e.to_string()]
            }
        })
        .collect();
    out.csv("sweep.csv", &["b", "c", "shift", "b_f", "tilt_ratio", "error"], &table)?;
    let shift: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|(b, r)| r.as_ref().ok().map(|(c, _, _)| (*b, c - FEIGENBAUM_POINT)))
        .collect();
    out.dat("accumulation.dat", &shift)?;
    Ok(())
}
