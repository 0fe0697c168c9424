use super::config::{Experiment, LyapunovFlow, RunConfig};
use super::output::{header, num, OutputDir};
use super::svg::{plot, Series};
use crate::diagnostics::{
    attractor_detect, lyapunov_benettin, sync_metric, uniformity_check, ClusterSummary, FlowModel, LyapunovParams,
    MeanEstimate,
};
use crate::error::{Result, RqfError};
use crate::flows::{bias_scan, evolve_observed, initial_grid, pullback_with, Dynamics, TimeGrid, Warning};
use crate::geometry::{dot, sphere_distance, SymmetricMatrix, UnitVector};
use crate::integrators::{dqf_exact, heun_step_rqf, top_eigenspace, Sign};
use crate::noise::{IncrementSource, NoiseKey, NoiseStream, SymmetricIncrement, DEFAULT_MEMORY_CAP};
use crate::parallel::map_replicates;
use crate::zprocess::{simulate_z, z_endpoint, DensityGrid, FokkerPlanck};
use serde_json::json;

const TARGET_RECORDS: usize = 1000;
const Z_PATHS_SHOWN: usize = 10;
const TAIL_THRESHOLD: f64 = 0.99;

/// Context shared by all experiments.
struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: &'a mut OutputDir,
    warnings: Vec<String>,
}

impl Ctx<'_> {
    fn seed(&self) -> u64 {
        self.cfg.seeds.master
    }

    fn key(&self, i: u64) -> NoiseKey {
        NoiseKey::replicate(self.seed(), i)
    }

    fn steps(&self) -> Result<usize> {
        Ok(TimeGrid::new(self.cfg.t_end, self.cfg.dt)?.steps)
    }

    fn every(&self, steps: usize) -> usize {
        self.cfg.record_every.unwrap_or_else(|| steps.div_ceil(TARGET_RECORDS).max(1))
    }

    fn guard(&self, what: &'static str, bytes: u128) -> Result<()> {
        let cap = self.cfg.memory_cap_bytes.unwrap_or(DEFAULT_MEMORY_CAP) as u128;
        if bytes > cap {
            return Err(RqfError::ResourceCap { what, requested: bytes, cap });
        }
        Ok(())
    }

    fn dynamics(&mut self) -> Dynamics {
        let (sigma_q, sigma_w) = (self.cfg.sigma_q, self.cfg.sigma_w);
        if sigma_q == 0.0 && sigma_w == 0.0 && self.cfg.t_end > 0.0 {
            self.warn(Warning::FrozenDynamics);
        }
        Dynamics::Bias { sigma_q, sigma_w }
    }

    fn warn(&mut self, w: Warning) {
        let msg = match w {
            Warning::FrozenDynamics => "sigma_q = sigma_w = 0: dynamics are frozen".to_string(),
        };
        if !self.warnings.contains(&msg) {
            self.warnings.push(msg);
        }
    }

    fn initial(&self) -> Result<UnitVector> {
        match &self.cfg.initial {
            Some(x) => UnitVector::new(x.clone()),
            None => UnitVector::basis(self.cfg.n, 0),
        }
    }
}

/// Snapshots `[snapshot][member]` of a shared-noise run.
struct Recording {
    times: Vec<f64>,
    states: Vec<Vec<Vec<f64>>>,
    max_defect: f64,
}

fn record<S: IncrementSource>(
    source: &S,
    dynamics: Dynamics,
    initials: &[UnitVector],
    steps: usize,
    every: usize,
) -> Result<Recording> {
    let dt = source.dt();
    let mut times = vec![0.0];
    let mut states = vec![initials.iter().map(|x| x.as_slice().to_vec()).collect::<Vec<_>>()];
    let ends = evolve_observed(source, dynamics, initials, steps, |k, _, s| {
        if k.is_multiple_of(every) || k == steps {
            times.push(k as f64 * dt);
            states.push(s.to_vec());
        }
    })?;
    Ok(Recording { times, states, max_defect: ends.max_defect })
}

fn snapshots(steps: usize, every: usize) -> u128 {
    (steps / every + 2) as u128
}

fn row(fixed: Vec<String>, x: &[f64]) -> Vec<String> {
    fixed.into_iter().chain(x.iter().map(|v| num(*v))).collect()
}

pub(super) fn run_experiment(experiment: Experiment, cfg: &RunConfig, out: &mut OutputDir) -> Result<Vec<String>> {
    let mut ctx = Ctx { cfg, out, warnings: Vec::new() };
    match experiment {
        Experiment::Simulate => simulate(&mut ctx)?,
        Experiment::Coupled => coupled(&mut ctx)?,
        Experiment::Pullback => pullback(&mut ctx)?,
        Experiment::Zprocess => zprocess(&mut ctx)?,
        Experiment::FokkerPlanck => fokker_planck(&mut ctx)?,
        Experiment::Lyapunov => lyapunov(&mut ctx)?,
        Experiment::Dqf => dqf(&mut ctx)?,
        Experiment::BiasScan => scan(&mut ctx)?,
        Experiment::Uniformity => uniformity(&mut ctx)?,
    }
    Ok(ctx.warnings)
}

fn simulate(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let (n, count) = (cfg.n, cfg.seeds.count);
    let x0 = ctx.initial()?;
    let dynamics = ctx.dynamics();
    let steps = ctx.steps()?;
    let every = ctx.every(steps);
    ctx.guard("trajectory recording", count as u128 * snapshots(steps, every) * n as u128 * 8)?;
    let runs = map_replicates(count, |i| {
        let source = NoiseStream::new(ctx.key(i), n, cfg.dt)?;
        record(&source, dynamics, std::slice::from_ref(&x0), steps, every)
    })?;

    let mut rows = Vec::new();
    for (i, r) in runs.iter().enumerate() {
        for (t, s) in r.times.iter().zip(&r.states) {
            rows.push(row(vec![num(*t), i.to_string()], &s[0]));
        }
    }
    ctx.out.csv("trajectory.csv", &header(&["t", "member_id"], n), rows)?;

    let cosines: Vec<f64> =
        runs.iter().map(|r| dot(&r.states.last().expect("non-empty")[0], x0.as_slice())).collect();
    let max_defect = runs.iter().map(|r| r.max_defect).fold(0.0, f64::max);
    ctx.out.json(
        "summary.json",
        &json!({
            "replicates": count,
            "T": TimeGrid::new(cfg.t_end, cfg.dt)?.t_end(),
            "mean_inner_product_with_initial": MeanEstimate::of(&cosines),
            "max_renorm_defect": max_defect,
        }),
    )?;
    let first = &runs[0];
    ctx.out.svg("trajectory.svg", || {
        let series: Vec<Series> = (0..n)
            .map(|c| {
                Series::line(format!("x_{c}"), first.times.iter().zip(&first.states).map(|(t, s)| (*t, s[0][c])).collect())
            })
            .collect();
        plot("trajectory (replicate 0)", "t", "coordinate", &series)
    })
}

fn coupled(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let n = cfg.n;
    let initials = match &cfg.initials {
        Some(xs) => xs.iter().map(|x| UnitVector::new(x.clone())).collect::<Result<Vec<_>>>()?,
        None => initial_grid(n, cfg.members, NoiseKey::new(ctx.seed()))?,
    };
    let dynamics = ctx.dynamics();
    let steps = ctx.steps()?;
    let every = ctx.every(steps);
    ctx.guard("trajectory recording", snapshots(steps, every) * (initials.len() * n * 8) as u128)?;
    let source = NoiseStream::new(ctx.key(0), n, cfg.dt)?;
    let rec = record(&source, dynamics, &initials, steps, every)?;

    let mut rows = Vec::new();
    for (t, s) in rec.times.iter().zip(&rec.states) {
        for (m, x) in s.iter().enumerate() {
            rows.push(row(vec![num(*t), m.to_string()], x));
        }
    }
    ctx.out.csv("trajectory.csv", &header(&["t", "member_id"], n), rows)?;

    let mut summary = json!({ "members": initials.len(), "max_renorm_defect": rec.max_defect });
    if initials.len() >= 2 {
        let pair: Vec<(f64, f64, f64)> = rec
            .times
            .iter()
            .zip(&rec.states)
            .map(|(t, s)| {
                let (a, b) = (UnitVector::from_normalized(s[0].clone()), UnitVector::from_normalized(s[1].clone()));
                Ok((*t, dot(&s[0], &s[1]), sync_metric(&a, &b)?))
            })
            .collect::<Result<_>>()?;
        ctx.out.csv(
            "pair.csv",
            &["t".into(), "z".into(), "sync".into()],
            pair.iter().map(|(t, z, s)| vec![num(*t), num(*z), num(*s)]),
        )?;
        ctx.out.svg("pair.svg", || {
            plot(
                "inner product of members 0 and 1",
                "t",
                "z",
                &[Series::line("z", pair.iter().map(|(t, z, _)| (*t, *z)).collect())],
            )
        })?;
        if cfg.seeds.count > 1 {
            let two = &initials[..2];
            let ends = map_replicates(cfg.seeds.count, |i| {
                let e = crate::flows::coupled_endpoints(two, cfg.t_end, cfg.dt, ctx.key(i), dynamics)?;
                Ok((dot(e.states[0].as_slice(), e.states[1].as_slice()), sync_metric(&e.states[0], &e.states[1])?))
            })?;
            ctx.out.csv(
                "endpoints.csv",
                &["replicate".into(), "z_T".into(), "sync_T".into()],
                ends.iter().enumerate().map(|(i, (z, s))| vec![i.to_string(), num(*z), num(*s)]),
            )?;
            let z: Vec<f64> = ends.iter().map(|e| e.0).collect();
            summary["mean_z_T"] = json!(MeanEstimate::of(&z));
        }
    }
    ctx.out.json("summary.json", &summary)
}

fn cluster_row(i: usize, s: &ClusterSummary) -> Vec<String> {
    let opt = |v: Option<&f64>| v.map(|x| num(*x)).unwrap_or_default();
    vec![
        i.to_string(),
        s.k.to_string(),
        opt(s.masses.first()),
        opt(s.masses.get(1)),
        opt(s.diameters.first()),
        opt(s.diameters.get(1)),
        s.pole_inner_product().map(num).unwrap_or_default(),
    ]
}

fn is_bipolar(s: &ClusterSummary, tol: f64) -> bool {
    s.k == 2 && s.max_diameter() < tol && s.pole_inner_product().is_some_and(|c| c < -0.999)
}

fn pullback(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let n = cfg.n;
    let grid = initial_grid(n, cfg.grid_points, NoiseKey::new(ctx.seed()))?;
    let dynamics = ctx.dynamics();
    let steps = ctx.steps()?;
    let every = ctx.every(steps);
    let tol = cfg.diameter_tol;

    let source = NoiseStream::new(ctx.key(0), n, cfg.dt)?;
    let mut history = Vec::new();
    let summarize = |t: f64, states: &[Vec<f64>]| -> Result<Vec<f64>> {
        let pts: Vec<UnitVector> = states.iter().map(|s| UnitVector::from_normalized(s.clone())).collect();
        let s = attractor_detect(&pts, tol)?;
        Ok(vec![t, s.k as f64, s.diameters[0], s.diameters.get(1).copied().unwrap_or(0.0), s.max_pole_distance])
    };
    let initial_states: Vec<Vec<f64>> = grid.iter().map(|x| x.as_slice().to_vec()).collect();
    history.push(summarize(0.0, &initial_states));
    let ends = evolve_observed(&source, dynamics, &grid, steps, |k, _, s| {
        if k.is_multiple_of(every) || k == steps {
            history.push(summarize(k as f64 * cfg.dt, s));
        }
    })?;
    let history: Vec<Vec<f64>> = history.into_iter().collect::<Result<_>>()?;

    let results =
        map_replicates(cfg.seeds.count, |i| pullback_with(&grid, cfg.t_end, cfg.dt, ctx.key(i), tol, dynamics))?;

    ctx.out.csv(
        "clusters.csv",
        &["replicate", "k", "mass_0", "mass_1", "diameter_0", "diameter_1", "pole_inner_product"].map(String::from),
        results.iter().enumerate().map(|(i, r)| cluster_row(i, &r.summary)),
    )?;
    ctx.out.csv(
        "diameters.csv",
        &["t", "k", "diameter_0", "diameter_1", "max_pole_distance"].map(String::from),
        history.iter().map(|h| {
            let mut r: Vec<String> = h.iter().map(|v| num(*v)).collect();
            r[1] = (h[1] as u8).to_string();
            r
        }),
    )?;
    ctx.out.csv(
        "final_states.csv",
        &header(&["member_id"], n),
        ends.states.iter().enumerate().map(|(m, x)| row(vec![m.to_string()], x.as_slice())),
    )?;

    let bipolar: Vec<&ClusterSummary> = results.iter().map(|r| &r.summary).filter(|s| is_bipolar(s, tol)).collect();
    let masses: Vec<f64> = bipolar.iter().map(|s| s.masses[0]).collect();
    ctx.out.json(
        "summary.json",
        &json!({
            "replicates": results.len(),
            "grid_points": grid.len(),
            "bipolar_fraction": bipolar.len() as f64 / results.len() as f64,
            "mass_0": if masses.is_empty() { None } else { Some(MeanEstimate::of(&masses)) },
            "max_renorm_defect": ends.max_defect,
        }),
    )?;
    ctx.out.svg("diameters.svg", || {
        let pts = |c: usize| history.iter().map(|h| (h[0], h[c].max(1e-300).log10())).collect();
        plot(
            "cluster diameters (replicate 0)",
            "t",
            "log10 diameter",
            &[Series::line("diameter_0", pts(2)), Series::line("diameter_1", pts(3))],
        )
    })
}

fn hitting_grid(z0: f64) -> Vec<f64> {
    let mut zs: Vec<f64> = (-3..=3).map(|i| i as f64 * 0.25).collect();
    if !zs.contains(&z0) {
        zs.push(z0);
    }
    zs.sort_by(f64::total_cmp);
    zs
}

fn zprocess(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let model = cfg.z_model;
    let count = cfg.seeds.count;
    let rows = hitting_grid(cfg.z0)
        .into_iter()
        .map(|z| {
            let ends = map_replicates(count, |i| z_endpoint(z, cfg.t_end, cfg.dt, ctx.key(i), model))?;
            let up = ends.iter().filter(|v| **v > 0.0).count();
            Ok((z, model.hit_up_probability(z)?, MeanEstimate::proportion(up, count)))
        })
        .collect::<Result<Vec<_>>>()?;
    ctx.out.csv(
        "hitting.csv",
        &["z0", "p_closed_form", "p_monte_carlo", "stderr"].map(String::from),
        rows.iter().map(|(z, p, mc)| vec![num(*z), num(*p), num(mc.mean), num(mc.stderr)]),
    )?;

    let shown = count.min(Z_PATHS_SHOWN);
    let steps = ctx.steps()?;
    let every = ctx.every(steps);
    let paths = map_replicates(shown, |i| simulate_z(cfg.z0, cfg.t_end, cfg.dt, ctx.key(i), model))?;
    let mut zrows = Vec::new();
    for (k, _) in (0..=steps).enumerate().filter(|(k, _)| k % every == 0 || *k == steps) {
        for (i, p) in paths.iter().enumerate() {
            zrows.push(vec![num(k as f64 * cfg.dt), i.to_string(), num(p.values[k])]);
        }
    }
    ctx.out.csv("z_paths.csv", &["t", "replicate", "z"].map(String::from), zrows)?;
    let row_z0 = rows.iter().find(|r| r.0 == cfg.z0).expect("z0 is on the grid");
    ctx.out.json(
        "summary.json",
        &json!({
            "model": model,
            "z0": cfg.z0,
            "p_closed_form": row_z0.1,
            "p_monte_carlo": row_z0.2,
            "replicates": count,
        }),
    )?;
    ctx.out.svg("hitting.svg", || {
        plot(
            "probability of reaching +1",
            "z0",
            "P",
            &[
                Series::line("closed form", rows.iter().map(|r| (r.0, r.1)).collect()),
                Series::points("Monte Carlo", rows.iter().map(|r| (r.0, r.2.mean)).collect()),
            ],
        )
    })?;
    ctx.out.svg("z_paths.svg", || {
        let series: Vec<Series> = paths
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Series::line(
                    format!("replicate {i}"),
                    p.values.iter().enumerate().step_by(every).map(|(k, z)| (k as f64 * cfg.dt, *z)).collect(),
                )
            })
            .collect();
        plot("Z paths", "t", "z", &series)
    })
}

fn fokker_planck(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let fp = FokkerPlanck::new(cfg.cells, cfg.z_model)?;
    let p0 = DensityGrid::near_delta(cfg.cells, cfg.z0)?;
    let steps = if cfg.t_end == 0.0 { 0 } else { (cfg.t_end / cfg.dt).ceil() as usize };
    let every = ctx.every(steps);
    let mut history = Vec::new();
    let mut last = p0.clone();
    let mut k = 0usize;
    fp.evolve_observed(&p0, cfg.t_end, cfg.dt, |t, p| {
        if k.is_multiple_of(every) || k == steps {
            history.push((t, p.total_mass(), p.tail_mass(TAIL_THRESHOLD)));
        }
        if k == steps {
            last = p.clone();
        }
        k += 1;
    })?;
    let centers = last.centers();
    ctx.out.csv(
        "density.csv",
        &["z_center", "mass"].map(String::from),
        centers.iter().zip(last.masses()).map(|(z, m)| vec![num(*z), num(*m)]),
    )?;
    ctx.out.csv(
        "mass_history.csv",
        &["t", "total_mass", "tail_mass"].map(String::from),
        history.iter().map(|(t, m, tail)| vec![num(*t), num(*m), num(*tail)]),
    )?;
    ctx.out.json(
        "summary.json",
        &json!({
            "model": cfg.z_model,
            "cells": cfg.cells,
            "max_stable_dt": fp.max_stable_dt(),
            "mass_drift": (last.total_mass() - p0.total_mass()).abs(),
            "tail_mass": last.tail_mass(TAIL_THRESHOLD),
            "asymmetry": last.asymmetry(),
        }),
    )?;
    let width = last.width();
    ctx.out.svg("density.svg", || {
        plot(
            "density at T",
            "z",
            "mass / width",
            &[Series::line("p", centers.iter().zip(last.masses()).map(|(z, m)| (*z, m / width)).collect())],
        )
    })
}

fn lyapunov(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let model = match cfg.flow {
        LyapunovFlow::Rqf => FlowModel::Rqf { n: cfg.n },
        LyapunovFlow::Phase => FlowModel::Phase,
        LyapunovFlow::Bias => FlowModel::Bias { n: cfg.n, sigma_q: cfg.sigma_q, sigma_w: cfg.sigma_w },
    };
    let params = LyapunovParams { renorm_interval: cfg.renorm_interval, ..LyapunovParams::new(cfg.t_end, cfg.dt) };
    let ests = map_replicates(cfg.seeds.count, |i| lyapunov_benettin(model, params, ctx.key(i)))?;
    ctx.out.csv(
        "lyapunov.csv",
        &["replicate", "lambda", "stderr", "t_total", "renorm_interval"].map(String::from),
        ests.iter().enumerate().map(|(i, e)| {
            vec![i.to_string(), num(e.lambda), num(e.stderr), num(e.t_total), num(e.renorm_interval)]
        }),
    )?;
    let lambdas: Vec<f64> = ests.iter().map(|e| e.lambda).collect();
    ctx.out.json("summary.json", &json!({ "model": model, "estimates": ests, "mean_lambda": MeanEstimate::of(&lambdas) }))
}

fn dqf(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let n = cfg.n;
    let rows = cfg.matrix.as_ref().ok_or_else(|| RqfError::Config("dqf needs a matrix".into()))?;
    let m = SymmetricMatrix::from_rows(rows)?;
    let x0 = match &cfg.initial {
        Some(x) => UnitVector::new(x.clone())?,
        None => UnitVector::new(vec![1.0; n])?,
    };
    let top = top_eigenspace(&m)?;
    let steps = ctx.steps()?;
    let every = ctx.every(steps);
    let dq = SymmetricIncrement { dq: SymmetricMatrix::from_upper_fn(n, |i, j| m.get(i, j) * cfg.dt) };
    let mut x = x0.clone();
    let mut out_rows = Vec::new();
    let mut curve = Vec::new();
    for k in 0..=steps {
        if k > 0 {
            x = heun_step_rqf(&x, &dq, Sign::Positive)?.state;
        }
        if k.is_multiple_of(every) || k == steps {
            let t = k as f64 * cfg.dt;
            let exact = dqf_exact(&m, &x0, t)?;
            let err = sphere_distance(&x, &exact)?;
            let dist = top.distance(&exact);
            curve.push((t, err, dist));
            out_rows.push(row(vec![num(t), num(err), num(dist)], exact.as_slice()));
        }
    }
    ctx.out.csv("dqf.csv", &header(&["t", "heun_error", "top_distance"], n), out_rows)?;
    let (_, err, dist) = *curve.last().expect("t = 0 is recorded");
    ctx.out.json(
        "summary.json",
        &json!({
            "top_eigenvalue": top.eigenvalue,
            "gap": top.gap,
            "final_heun_error": err,
            "final_top_distance": dist,
        }),
    )?;
    ctx.out.svg("dqf.svg", || {
        plot(
            "deterministic flow",
            "t",
            "log10 distance",
            &[
                Series::line("Heun vs exact", curve.iter().map(|c| (c.0, c.1.max(1e-300).log10())).collect()),
                Series::line("exact vs top eigenspace", curve.iter().map(|c| (c.0, c.2.max(1e-300).log10())).collect()),
            ],
        )
    })
}

fn scan(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let grid = initial_grid(cfg.n, cfg.grid_points, NoiseKey::new(ctx.seed()))?;
    if cfg.sigma_q == 0.0 && cfg.t_end > 0.0 {
        ctx.warn(Warning::FrozenDynamics);
    }
    let rows =
        bias_scan(&grid, &cfg.ratios, cfg.sigma_q, cfg.t_end, cfg.dt, ctx.seed(), cfg.seeds.count, cfg.diameter_tol)?;
    ctx.out.csv(
        "bias_scan.csv",
        &["ratio", "sigma_q", "sigma_w", "seeds", "single", "bipolar", "unresolved"].map(String::from),
        rows.iter().map(|r| {
            vec![
                num(r.ratio),
                num(r.sigma_q),
                num(r.sigma_w),
                r.seeds.to_string(),
                num(r.single),
                num(r.bipolar),
                num(r.unresolved),
            ]
        }),
    )?;
    ctx.out.json("summary.json", &rows)?;
    ctx.out.svg("bias_scan.svg", || {
        let s = |f: fn(&crate::flows::BiasScanRow) -> f64| rows.iter().map(|r| (r.ratio, f(r))).collect();
        plot(
            "cluster counts vs sigma_w / sigma_q",
            "sigma_w / sigma_q",
            "fraction of seeds",
            &[
                Series::line("single", s(|r| r.single)),
                Series::line("bipolar", s(|r| r.bipolar)),
                Series::line("unresolved", s(|r| r.unresolved)),
            ],
        )
    })
}

fn uniformity(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let n = cfg.n;
    let x0 = ctx.initial()?;
    let dynamics = ctx.dynamics();
    ctx.guard("uniformity samples", (cfg.seeds.count * n * 8) as u128)?;
    let samples = map_replicates(cfg.seeds.count, |i| {
        let e = crate::flows::coupled_endpoints(std::slice::from_ref(&x0), cfg.t_end, cfg.dt, ctx.key(i), dynamics)?;
        Ok(e.states.into_iter().next().expect("one member"))
    })?;
    let report = uniformity_check(&samples, cfg.alpha)?;
    ctx.out.csv(
        "samples.csv",
        &header(&["replicate"], n),
        samples.iter().enumerate().map(|(i, x)| row(vec![i.to_string()], x.as_slice())),
    )?;
    ctx.out.json("report.json", &report)?;
    ctx.out.svg("samples.svg", || {
        plot(
            "samples projected on (x_0, x_1)",
            "x_0",
            "x_1",
            &[Series::points("X_T", samples.iter().map(|x| (x.as_slice()[0], x.as_slice()[1])).collect())],
        )
    })
}
