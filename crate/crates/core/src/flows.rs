//! Trajectory and ensemble simulation under one shared noise realization.
//!
//! Members of an ensemble never own noise: every step draws one increment
//! from the [`IncrementSource`] and applies it to all members, which makes
//! the common-noise coupling structural.

use crate::diagnostics::{attractor_detect, ClusterSummary};
use crate::error::{Result, RqfError};
use crate::geometry::{check_dim, UnitVector};
use crate::integrators::{check_bias_params, heun_in_place, Field, Scratch, Sign};
use crate::noise::{Channel, GaussianStream, IncrementSource, NoiseHeader, NoiseKey, NoiseStream, SymmetricIncrement};
use crate::parallel::map_replicates;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

/// Uniform time grid `t_k = k·dt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// `⌈T/dt⌉` steps, treating ratios within `1e-9` of an integer as exact.
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(RqfError::invalid("T must be finite and non-negative"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(RqfError::invalid("dt must be positive"));
        }
        if t_end == 0.0 {
            return Ok(TimeGrid { dt, steps: 0 });
        }
        if dt > t_end {
            return Err(RqfError::invalid(format!("dt = {dt} exceeds T = {t_end}")));
        }
        let ratio = t_end / dt;
        let nearest = ratio.round();
        let steps = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { ratio.ceil() };
        Ok(TimeGrid { dt, steps: steps as usize })
    }

    pub fn t_end(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.dt).collect()
    }
}

/// Which vector field drives the particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Dynamics {
    /// `dX = ±P_X ∂Q X`.
    Quadratic(#[serde(skip)] Sign),
    /// `dX = −σ_Q P_X ∂Q X − σ_W P_X ∂W`.
    Bias { sigma_q: f64, sigma_w: f64 },
}

impl Default for Dynamics {
    fn default() -> Self {
        Dynamics::Quadratic(Sign::Negative)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<UnitVector>,
}

impl Trajectory {
    pub fn final_state(&self) -> &UnitVector {
        self.states.last().expect("trajectories hold at least the initial state")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    pub noise: NoiseHeader,
    pub members: Vec<Trajectory>,
}

impl Ensemble {
    pub fn final_states(&self) -> Vec<UnitVector> {
        self.members.iter().map(|m| m.final_state().clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTrajectory {
    pub times: Vec<f64>,
    /// Angles wrapped to `[0, 2π)`.
    pub angles: Vec<f64>,
}

/// Non-fatal conditions reported alongside a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Warning {
    /// Both noise amplitudes are zero, so nothing moves.
    FrozenDynamics,
}

/// Final states of an ensemble run plus the largest renormalization defect seen.
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoints {
    pub states: Vec<UnitVector>,
    pub max_defect: f64,
}

fn common_dim(initials: &[UnitVector]) -> Result<usize> {
    let first = initials.first().ok_or_else(|| RqfError::invalid("initial list is empty"))?;
    let n = first.dim();
    for x in initials {
        check_dim(n, x.dim())?;
    }
    Ok(n)
}

/// Advances every member by `steps` shared increments from `source`.
///
/// `observe(k, dq, states)` runs after step `k` (1-based) with the increment
/// that was applied to all members.
pub fn evolve_observed<S: IncrementSource + ?Sized>(
    source: &S,
    dynamics: Dynamics,
    initials: &[UnitVector],
    steps: usize,
    mut observe: impl FnMut(usize, &SymmetricIncrement, &[Vec<f64>]),
) -> Result<Endpoints> {
    let n = common_dim(initials)?;
    check_dim(source.dim(), n)?;
    source.check_range(steps)?;
    let (use_w, sigma) = match dynamics {
        Dynamics::Quadratic(_) => (false, None),
        Dynamics::Bias { sigma_q, sigma_w } => {
            check_bias_params(sigma_q, sigma_w)?;
            (sigma_w != 0.0, Some((sigma_q, sigma_w)))
        }
    };
    let mut states: Vec<Vec<f64>> = initials.iter().map(|x| x.as_slice().to_vec()).collect();
    let mut scratch = Scratch::new(n);
    let mut dw = vec![0.0; n];
    let mut max_defect: f64 = 0.0;
    for k in 0..steps {
        let dq = source.symmetric_increment(k);
        if !dq.dq.is_finite() {
            return Err(RqfError::numerical(format!("non-finite matrix increment at step {k}")));
        }
        if use_w {
            source.vector_increment(k, &mut dw)?;
        }
        let field = match (dynamics, sigma) {
            (Dynamics::Quadratic(sign), _) => Field::Quadratic { dq: &dq.dq, sign },
            (_, Some((sigma_q, sigma_w))) => Field::Bias { dq: &dq.dq, dw: &dw, sigma_q, sigma_w },
            _ => unreachable!(),
        };
        for x in states.iter_mut() {
            let defect = heun_in_place(x, &field, &mut scratch);
            if !defect.is_finite() {
                return Err(RqfError::numerical(format!("state left the sphere at step {k}")));
            }
            max_defect = max_defect.max(defect);
        }
        observe(k + 1, &dq, &states);
    }
    Ok(Endpoints { states: states.into_iter().map(UnitVector::from_normalized).collect(), max_defect })
}

/// Full trajectories of every member, recording each step.
pub fn evolve_members<S: IncrementSource + ?Sized>(
    source: &S,
    dynamics: Dynamics,
    initials: &[UnitVector],
    steps: usize,
) -> Result<Vec<Trajectory>> {
    let dt = source.dt();
    let mut members: Vec<Trajectory> = initials
        .iter()
        .map(|x| Trajectory { times: vec![0.0], states: vec![x.clone()] })
        .collect();
    evolve_observed(source, dynamics, initials, steps, |k, _, states| {
        for (m, s) in members.iter_mut().zip(states) {
            m.times.push(k as f64 * dt);
            m.states.push(UnitVector::from_normalized(s.clone()));
        }
    })?;
    Ok(members)
}

/// One RQF trajectory `dX = −P_X ∂Q X`.
pub fn simulate_rqf(x0: &UnitVector, t_end: f64, dt: f64, key: impl Into<NoiseKey>) -> Result<Trajectory> {
    let grid = TimeGrid::new(t_end, dt)?;
    let source = NoiseStream::new(key, x0.dim(), dt)?;
    let mut members = evolve_members(&source, Dynamics::default(), std::slice::from_ref(x0), grid.steps)?;
    Ok(members.remove(0))
}

/// Final states of `initials` driven by one realization, without storing paths.
pub fn coupled_endpoints(
    initials: &[UnitVector],
    t_end: f64,
    dt: f64,
    key: impl Into<NoiseKey>,
    dynamics: Dynamics,
) -> Result<Endpoints> {
    let grid = TimeGrid::new(t_end, dt)?;
    let source = NoiseStream::new(key, common_dim(initials)?, dt)?;
    evolve_observed(&source, dynamics, initials, grid.steps, |_, _, _| {})
}

/// Several particles under common matrix noise.
pub fn simulate_coupled(initials: &[UnitVector], t_end: f64, dt: f64, key: impl Into<NoiseKey>) -> Result<Ensemble> {
    run_ensemble(initials, t_end, dt, key.into(), Dynamics::default())
}

fn run_ensemble(
    initials: &[UnitVector],
    t_end: f64,
    dt: f64,
    key: NoiseKey,
    dynamics: Dynamics,
) -> Result<Ensemble> {
    let grid = TimeGrid::new(t_end, dt)?;
    let source = NoiseStream::new(key, common_dim(initials)?, dt)?;
    let members = evolve_members(&source, dynamics, initials, grid.steps)?;
    Ok(Ensemble { noise: source.header(grid.steps), members })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasRun<T> {
    pub result: T,
    pub warning: Option<Warning>,
}

fn bias_warning(sigma_q: f64, sigma_w: f64, t_end: f64) -> Option<Warning> {
    (sigma_q == 0.0 && sigma_w == 0.0 && t_end > 0.0).then_some(Warning::FrozenDynamics)
}

/// One trajectory of the combined matrix and vector noise model.
pub fn simulate_bias(
    x0: &UnitVector,
    t_end: f64,
    dt: f64,
    key: impl Into<NoiseKey>,
    sigma_q: f64,
    sigma_w: f64,
) -> Result<BiasRun<Trajectory>> {
    check_bias_params(sigma_q, sigma_w)?;
    let mut ens = run_ensemble(std::slice::from_ref(x0), t_end, dt, key.into(), Dynamics::Bias { sigma_q, sigma_w })?;
    Ok(BiasRun { result: ens.members.remove(0), warning: bias_warning(sigma_q, sigma_w, t_end) })
}

/// Coupled particles under the combined model.
pub fn simulate_coupled_bias(
    initials: &[UnitVector],
    t_end: f64,
    dt: f64,
    key: impl Into<NoiseKey>,
    sigma_q: f64,
    sigma_w: f64,
) -> Result<BiasRun<Ensemble>> {
    check_bias_params(sigma_q, sigma_w)?;
    let ens = run_ensemble(initials, t_end, dt, key.into(), Dynamics::Bias { sigma_q, sigma_w })?;
    Ok(BiasRun { result: ens, warning: bias_warning(sigma_q, sigma_w, t_end) })
}

/// Noise combinations `(ΔB22 − ΔB11, ΔB12 + ΔB21)` from a row-major 2×2 increment.
#[inline]
pub(crate) fn phase_drivers(db: &[f64]) -> (f64, f64) {
    (db[3] - db[0], db[1] + db[2])
}

/// Heun step of `dφ = ½ sin2φ ∂U + ½ cos2φ ∂V` (unwrapped angle).
#[inline]
pub(crate) fn phase_step(phi: f64, u: f64, v: f64) -> f64 {
    let g = |p: f64| {
        let (s, c) = (2.0 * p).sin_cos();
        0.5 * (s * u + c * v)
    };
    let g0 = g(phi);
    let g1 = g(phi + g0);
    phi + 0.5 * (g0 + g1)
}

/// The circle model in angle coordinates, driven by the same 2×2 matrix
/// increments that [`simulate_rqf`] uses at `n = 2`.
pub fn simulate_phase(phi0: f64, t_end: f64, dt: f64, key: impl Into<NoiseKey>) -> Result<PhaseTrajectory> {
    if !phi0.is_finite() {
        return Err(RqfError::invalid("initial angle must be finite"));
    }
    let grid = TimeGrid::new(t_end, dt)?;
    let source = NoiseStream::new(key, 2, dt)?;
    let mut db = [0.0; 4];
    let mut phi = phi0;
    let mut angles = Vec::with_capacity(grid.steps + 1);
    angles.push(phi.rem_euclid(TAU));
    for k in 0..grid.steps {
        source.matrix_increment(k, &mut db);
        let (u, v) = phase_drivers(&db);
        phi = phase_step(phi, u, v);
        angles.push(phi.rem_euclid(TAU));
    }
    Ok(PhaseTrajectory { times: grid.times(), angles })
}

/// Forward run of a grid of initial points under one fixed realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullbackResult {
    pub noise: NoiseHeader,
    pub final_states: Vec<UnitVector>,
    pub summary: ClusterSummary,
    pub max_defect: f64,
}

/// Pushes `grid` forward for time `T` and summarizes the cluster structure.
///
/// By stationarity of the increments this has the law of the pull-back
/// `φ(T, θ_{−T}ω, ·)`.
pub fn pullback_run(
    grid: &[UnitVector],
    t_end: f64,
    dt: f64,
    key: impl Into<NoiseKey>,
    diameter_tol: f64,
) -> Result<PullbackResult> {
    pullback_with(grid, t_end, dt, key.into(), diameter_tol, Dynamics::default())
}

pub fn pullback_with(
    grid: &[UnitVector],
    t_end: f64,
    dt: f64,
    key: NoiseKey,
    diameter_tol: f64,
    dynamics: Dynamics,
) -> Result<PullbackResult> {
    let tg = TimeGrid::new(t_end, dt)?;
    let source = NoiseStream::new(key, common_dim(grid)?, dt)?;
    let ends = evolve_observed(&source, dynamics, grid, tg.steps, |_, _, _| {})?;
    let summary = attractor_detect(&ends.states, diameter_tol)?;
    Ok(PullbackResult {
        noise: source.header(tg.steps),
        final_states: ends.states,
        summary,
        max_defect: ends.max_defect,
    })
}

/// Genuine pull-back runs: for each horizon `h` (in steps) the grid starts at
/// step `end_step − h` of one realization and is evolved up to `end_step`.
/// As `h` grows the detected poles converge to the attractor `{a(ω), −a(ω)}`
/// of the fixed realization.
pub fn pullback_series(
    grid: &[UnitVector],
    end_step: usize,
    horizons: &[usize],
    dt: f64,
    key: impl Into<NoiseKey>,
    diameter_tol: f64,
) -> Result<Vec<ClusterSummary>> {
    let base = NoiseStream::new(key, common_dim(grid)?, dt)?;
    horizons
        .iter()
        .map(|&h| {
            if h > end_step {
                return Err(RqfError::invalid(format!("horizon {h} exceeds end step {end_step}")));
            }
            let shifted = base.shift(end_step - h);
            let ends = evolve_observed(&shifted, Dynamics::default(), grid, h, |_, _, _| {})?;
            attractor_detect(&ends.states, diameter_tol)
        })
        .collect()
}

/// One row of a σ_W/σ_Q sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasScanRow {
    pub ratio: f64,
    pub sigma_q: f64,
    pub sigma_w: f64,
    pub seeds: usize,
    /// Fraction of seeds ending in one cluster.
    pub single: f64,
    /// Fraction of seeds ending in two antipodal clusters.
    pub bipolar: f64,
    /// Fraction of seeds not resolved within the diameter tolerance.
    pub unresolved: f64,
}

/// Cluster-count statistics over a sweep of `σ_W/σ_Q` at fixed `σ_Q`.
#[allow(clippy::too_many_arguments)]
pub fn bias_scan(
    grid: &[UnitVector],
    ratios: &[f64],
    sigma_q: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
    seeds: usize,
    diameter_tol: f64,
) -> Result<Vec<BiasScanRow>> {
    if seeds == 0 {
        return Err(RqfError::invalid("bias scan needs at least one seed"));
    }
    ratios
        .iter()
        .map(|&ratio| {
            let sigma_w = ratio * sigma_q;
            check_bias_params(sigma_q, sigma_w)?;
            let ks = map_replicates(seeds, |i| {
                let dynamics = Dynamics::Bias { sigma_q, sigma_w };
                pullback_with(grid, t_end, dt, NoiseKey::replicate(seed, i), diameter_tol, dynamics)
                    .map(|r| r.summary.k)
            })?;
            let frac = |k: u8| ks.iter().filter(|&&x| x == k).count() as f64 / seeds as f64;
            Ok(BiasScanRow { ratio, sigma_q, sigma_w, seeds, single: frac(1), bipolar: frac(2), unresolved: frac(0) })
        })
        .collect()
}

/// Near-uniform points on `S²` along a Fibonacci spiral.
pub fn fibonacci_sphere(m: usize) -> Vec<UnitVector> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
            let r = (1.0 - z * z).sqrt();
            let theta = golden * i as f64;
            UnitVector::new(vec![r * theta.cos(), r * theta.sin(), z]).expect("spiral points are unit")
        })
        .collect()
}

/// `m` equally spaced points on `S¹`.
pub fn circle_grid(m: usize) -> Vec<UnitVector> {
    (0..m).map(|i| UnitVector::from_angle(TAU * i as f64 / m as f64)).collect()
}

/// Independent uniform points on `S^{n−1}` by normalizing Gaussian vectors.
pub fn uniform_sphere_points(n: usize, m: usize, key: impl Into<NoiseKey>) -> Result<Vec<UnitVector>> {
    if n < 2 {
        return Err(RqfError::invalid("n must be ≥ 2"));
    }
    let stream = GaussianStream::new(key.into(), Channel::Aux, n);
    let mut cursor = stream.cursor(0);
    let mut buf = vec![0.0; n];
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        cursor.next_block(&mut buf);
        // a Gaussian vector of norm < 1e-8 has probability ~1e-8n; redraw
        if let Ok(u) = UnitVector::new(buf.clone()) {
            out.push(u);
        }
    }
    Ok(out)
}

/// Default initial grid: circle for `n = 2`, Fibonacci spiral for `n = 3`,
/// seeded uniform points otherwise.
pub fn initial_grid(n: usize, m: usize, key: impl Into<NoiseKey>) -> Result<Vec<UnitVector>> {
    match n {
        2 => Ok(circle_grid(m)),
        3 => Ok(fibonacci_sphere(m)),
        _ => uniform_sphere_points(n, m, key),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::antipode;
    use crate::noise::generate_path;

    fn e(n: usize, i: usize) -> UnitVector {
        UnitVector::basis(n, i).unwrap()
    }

    #[test]
    fn time_grid_counts() {
        assert_eq!(TimeGrid::new(1.0, 1e-3).unwrap().steps, 1000);
        assert_eq!(TimeGrid::new(0.3, 0.1).unwrap().steps, 3);
        assert_eq!(TimeGrid::new(1.05, 0.1).unwrap().steps, 11);
        assert_eq!(TimeGrid::new(0.0, 0.5).unwrap().steps, 0);
        assert!(TimeGrid::new(1.0, 0.0).is_err());
        assert!(TimeGrid::new(-1.0, 0.1).is_err());
        assert!(TimeGrid::new(0.1, 1.0).is_err());
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let x0 = e(3, 2);
        let tr = simulate_rqf(&x0, 0.0, 0.01, 1).unwrap();
        assert_eq!(tr.states, vec![x0.clone()]);
        assert_eq!(tr.times, vec![0.0]);
    }

    #[test]
    fn rqf_is_deterministic_per_seed() {
        let x0 = e(4, 0);
        let a = simulate_rqf(&x0, 0.5, 1e-2, 7).unwrap();
        let b = simulate_rqf(&x0, 0.5, 1e-2, 7).unwrap();
        let c = simulate_rqf(&x0, 0.5, 1e-2, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.final_state(), c.final_state());
        assert_eq!(a.times.len(), 51);
    }

    #[test]
    fn stored_path_and_stream_drive_identically() {
        let x0 = e(3, 1);
        let path = generate_path(12, 3, 1e-2, 100, false).unwrap();
        let stored = evolve_members(&path, Dynamics::default(), std::slice::from_ref(&x0), 100).unwrap();
        let streamed = simulate_rqf(&x0, 1.0, 1e-2, 12).unwrap();
        assert_eq!(stored[0], streamed);
        assert!(evolve_members(&path, Dynamics::default(), std::slice::from_ref(&x0), 101).is_err());
    }

    #[test]
    fn identical_and_antipodal_pairs_are_preserved_exactly() {
        let x0 = UnitVector::new(vec![0.3, -0.5, 0.8]).unwrap();
        let ens = simulate_coupled(&[x0.clone(), x0.clone(), antipode(&x0)], 2.0, 1e-3, 21).unwrap();
        for k in 0..ens.members[0].states.len() {
            let a = &ens.members[0].states[k];
            assert_eq!(a, &ens.members[1].states[k]);
            assert_eq!(&antipode(a), &ens.members[2].states[k]);
        }
    }

    #[test]
    fn every_member_sees_the_same_increment() {
        let initials = fibonacci_sphere(5);
        let path = generate_path(3, 3, 1e-2, 20, false).unwrap();
        let mut seen = Vec::new();
        evolve_observed(&path, Dynamics::default(), &initials, 20, |k, dq, states| {
            assert_eq!(states.len(), 5);
            seen.push((k, dq.clone()));
        })
        .unwrap();
        assert_eq!(seen.len(), 20);
        for (k, dq) in seen {
            assert_eq!(dq, path.symmetric_increment(k - 1));
        }
    }

    #[test]
    fn mixed_dimensions_are_rejected() {
        assert!(simulate_coupled(&[e(3, 0), e(2, 0)], 1.0, 0.1, 1).is_err());
        assert!(simulate_coupled(&[], 1.0, 0.1, 1).is_err());
    }

    #[test]
    fn bias_reductions() {
        let x0 = UnitVector::new(vec![0.1, 0.7, -0.2]).unwrap();
        let frozen = simulate_bias(&x0, 1.0, 1e-2, 4, 0.0, 0.0).unwrap();
        assert_eq!(frozen.warning, Some(Warning::FrozenDynamics));
        assert!(frozen.result.states.iter().all(|s| s == &x0));
        let q_only = simulate_bias(&x0, 1.0, 1e-2, 4, 1.0, 0.0).unwrap();
        assert_eq!(q_only.warning, None);
        assert_eq!(q_only.result, simulate_rqf(&x0, 1.0, 1e-2, 4).unwrap());
        assert!(simulate_bias(&x0, 1.0, 1e-2, 4, -1.0, 0.0).is_err());
        assert_eq!(simulate_bias(&x0, 0.0, 1e-2, 4, 0.0, 0.0).unwrap().warning, None);
    }

    #[test]
    fn phase_examples() {
        let a = simulate_phase(0.4, 2.0, 1e-3, 5).unwrap();
        let b = simulate_phase(0.4 + PI, 2.0, 1e-3, 5).unwrap();
        for (x, y) in a.angles.iter().zip(&b.angles) {
            let d = (y - x).rem_euclid(TAU);
            assert!((d - PI).abs() < 1e-9, "{d}");
        }
        assert!(a.angles.iter().all(|v| (0.0..TAU).contains(v)));
        assert_eq!(phase_step(1.2, 0.0, 0.0), 1.2);
    }

    #[test]
    fn pullback_zero_horizon_keeps_grid() {
        let grid = fibonacci_sphere(20);
        let r = pullback_run(&grid, 0.0, 0.01, 3, 1e-3).unwrap();
        assert_eq!(r.final_states, grid);
    }

    #[test]
    fn pullback_poles_stabilize_with_horizon() {
        let grid = fibonacci_sphere(30);
        let dt = 1e-2;
        let runs = pullback_series(&grid, 4000, &[2500, 3000, 4000], dt, 77, 1e-3).unwrap();
        let poles: Vec<&UnitVector> = runs.iter().map(|s| &s.poles[0]).collect();
        for p in &poles[1..] {
            let c = p.dot(poles[0]).unwrap().abs();
            assert!(c > 1.0 - 1e-6, "pull-back poles disagree: |⟨a,b⟩| = {c}");
        }
        assert!(pullback_series(&grid, 10, &[11], dt, 77, 1e-3).is_err());
    }

    #[test]
    fn grids() {
        let f = fibonacci_sphere(100);
        assert_eq!(f.len(), 100);
        let mean_z: f64 = f.iter().map(|p| p.as_slice()[2]).sum::<f64>() / 100.0;
        assert!(mean_z.abs() < 1e-12);
        assert_eq!(circle_grid(4)[1].as_slice()[1], 1.0);
        let r = initial_grid(5, 10, 9).unwrap();
        assert_eq!(r.len(), 10);
        assert_eq!(r, initial_grid(5, 10, 9).unwrap());
        assert!(uniform_sphere_points(1, 3, 0).is_err());
    }

    #[test]
    fn renormalization_defect_is_small() {
        // S^4, dt = 1e-3: regression bound of 10·dt on the largest defect
        let dt = 1e-3;
        let grid = uniform_sphere_points(5, 8, 1).unwrap();
        let ends = coupled_endpoints(&grid, 5.0, dt, 2, Dynamics::default()).unwrap();
        assert!(ends.max_defect < 10.0 * dt, "{}", ends.max_defect);
        assert!(ends.max_defect > 0.0);
    }
}
