//! Statistical checks: KS tests, uniformity on the sphere, synchronization,
//! antipodal cluster detection and Lyapunov exponents.

use crate::error::{Result, RqfError};
use crate::flows::{phase_drivers, phase_step, uniform_sphere_points, Dynamics, TimeGrid};
use crate::geometry::{check_dim, distance_slices, dot, norm, project_in_place, UnitVector};
use crate::integrators::{check_bias_params, heun_in_place, Field, Scratch, Sign};
use crate::noise::{Channel, GaussianStream, IncrementSource, NoiseKey, NoiseStream};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|v| v.is_nan()) {
        return Err(RqfError::invalid("samples contain NaN"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov–Smirnov statistic with asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(RqfError::invalid("KS test needs non-empty samples"));
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult { statistic: d, p_value: ks_p(d, na * nb / (na + nb)) })
}

/// One-sample KS against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(RqfError::invalid("KS test needs non-empty samples"));
    }
    let s = sorted(samples)?;
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in s.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult { statistic: d, p_value: ks_p(d, n) })
}

/// Asymptotic two-sample critical value `c(α)·√((n+m)/(nm))`.
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

/// CDF of one coordinate of a uniform point on `S^{n−1}`:
/// `(1+u)/2 ~ Beta((n−1)/2, (n−1)/2)`.
pub fn sphere_marginal_cdf(n: usize, u: f64) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = (n as f64 - 1.0) / 2.0;
    beta_reg(a, a, (1.0 + u) / 2.0)
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanEstimate {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        MeanEstimate { mean, stderr: (var / n).sqrt() }
    }

    /// Binomial proportion `k/n` with standard error `√(p(1−p)/n)`.
    pub fn proportion(k: usize, n: usize) -> Self {
        let p = k as f64 / n as f64;
        MeanEstimate { mean: p, stderr: (p * (1.0 - p) / n as f64).sqrt() }
    }

    /// `|mean − target| ≤ z·stderr`.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub n: usize,
    pub samples: usize,
    pub alpha: f64,
    pub mean: Vec<f64>,
    pub mean_norm: f64,
    /// `N·n·‖mean‖²`, asymptotically χ²_n.
    pub mean_chi2: f64,
    pub mean_p: f64,
    /// `max |S − I/n|` for the second-moment matrix `S = N⁻¹ Σ x xᵀ`.
    pub cov_max_dev: f64,
    /// Largest entry z-score of `S − I/n`.
    pub cov_max_z: f64,
    /// Bonferroni-adjusted p-value of the largest z-score.
    pub cov_p: f64,
    pub coord_ks: Vec<KsResult>,
    /// Bonferroni-adjusted smallest coordinate KS p-value.
    pub ks_p: f64,
    /// Bonferroni combination of the three families.
    pub p_value: f64,
    pub mean_pass: bool,
    pub cov_pass: bool,
    pub ks_pass: bool,
    pub pass: bool,
}

pub const MIN_UNIFORMITY_SAMPLES: usize = 100;

/// Tests samples against the uniform measure on `S^{n−1}` at level `alpha`.
pub fn uniformity_check(samples: &[UnitVector], alpha: f64) -> Result<UniformityReport> {
    if samples.len() < MIN_UNIFORMITY_SAMPLES {
        return Err(RqfError::invalid(format!(
            "uniformity check needs at least {MIN_UNIFORMITY_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RqfError::invalid("alpha must lie in (0, 1)"));
    }
    let n = samples[0].dim();
    for s in samples {
        check_dim(n, s.dim())?;
    }
    let big_n = samples.len() as f64;
    let nf = n as f64;

    let mut mean = vec![0.0; n];
    let mut second = vec![0.0; n * n];
    for s in samples {
        let x = s.as_slice();
        for i in 0..n {
            mean[i] += x[i];
            for j in i..n {
                second[i * n + j] += x[i] * x[j];
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= big_n);
    let mean_norm = norm(&mean);
    let mean_chi2 = big_n * nf * mean_norm * mean_norm;
    let mean_p = 1.0 - ChiSquared::new(nf).expect("n ≥ 1").cdf(mean_chi2);

    // Var(x_i²) = 3/(n(n+2)) − 1/n², Var(x_i x_j) = 1/(n(n+2)) under uniformity
    let var_diag = 3.0 / (nf * (nf + 2.0)) - 1.0 / (nf * nf);
    let var_off = 1.0 / (nf * (nf + 2.0));
    let mut cov_max_dev: f64 = 0.0;
    let mut cov_max_z: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let s = second[i * n + j] / big_n;
            let (dev, var) = if i == j { (s - 1.0 / nf, var_diag) } else { (s, var_off) };
            cov_max_dev = cov_max_dev.max(dev.abs());
            cov_max_z = cov_max_z.max(dev.abs() / (var / big_n).sqrt());
        }
    }
    let entries = (n * (n + 1) / 2) as f64;
    let std_normal = Normal::standard();
    let cov_p = (entries * 2.0 * (1.0 - std_normal.cdf(cov_max_z))).min(1.0);

    let coord_ks = (0..n)
        .map(|i| {
            let col: Vec<f64> = samples.iter().map(|s| s.as_slice()[i]).collect();
            ks_one_sample(&col, |u| sphere_marginal_cdf(n, u))
        })
        .collect::<Result<Vec<_>>>()?;
    let ks_p = (nf * coord_ks.iter().map(|k| k.p_value).fold(1.0, f64::min)).min(1.0);

    let family = alpha / 3.0;
    let (mean_pass, cov_pass, ks_pass) = (mean_p >= family, cov_p >= family, ks_p >= family);
    let p_value = (3.0 * mean_p.min(cov_p).min(ks_p)).min(1.0);
    Ok(UniformityReport {
        n,
        samples: samples.len(),
        alpha,
        mean,
        mean_norm,
        mean_chi2,
        mean_p,
        cov_max_dev,
        cov_max_z,
        cov_p,
        coord_ks,
        ks_p,
        p_value,
        mean_pass,
        cov_pass,
        ks_pass,
        pass: mean_pass && cov_pass && ks_pass,
    })
}

/// `‖a − b‖` and `‖a + b‖`, each computed sign-symmetrically.
fn chord_pair(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut d, mut s) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        d += (a - b) * (a - b);
        s += (a + b) * (a + b);
    }
    (d.sqrt(), s.sqrt())
}

/// Projective distance `min(dist(x, y), dist(x, −y))` in `[0, π/2]`.
///
/// Symmetric under swapping and negating arguments, exactly.
pub fn sync_metric(x: &UnitVector, y: &UnitVector) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    let (d, s) = chord_pair(x.as_slice(), y.as_slice());
    Ok(2.0 * d.min(s).atan2(d.max(s)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    /// 1 or 2 detected clusters; 0 when some point is farther than the
    /// tolerance from its pole.
    pub k: u8,
    pub poles: Vec<UnitVector>,
    pub diameters: Vec<f64>,
    pub masses: Vec<f64>,
    /// Largest geodesic distance from any point to its pole.
    pub max_pole_distance: f64,
}

impl ClusterSummary {
    /// `⟨a, b⟩` of the two poles, if there are two.
    pub fn pole_inner_product(&self) -> Option<f64> {
        match self.poles.as_slice() {
            [a, b] => Some(dot(a.as_slice(), b.as_slice())),
            _ => None,
        }
    }

    pub fn max_diameter(&self) -> f64 {
        self.diameters.iter().copied().fold(0.0, f64::max)
    }
}

/// Top eigenvector of `N⁻¹ Σ x xᵀ`, sign fixed so its first non-zero entry is positive.
fn principal_axis(states: &[UnitVector]) -> Result<Vec<f64>> {
    let n = states[0].dim();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for x in states {
        let x = x.as_slice();
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] += x[i] * x[j];
            }
        }
    }
    s /= states.len() as f64;
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 0)
        .ok_or_else(|| RqfError::numerical("eigen-decomposition did not converge"))?;
    let top = eig.eigenvalues.imax();
    let mut a: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    if let Some(first) = a.iter().find(|v| **v != 0.0) {
        if *first < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(a)
}

fn pole_of(members: &[&[f64]], fallback: &[f64]) -> UnitVector {
    let n = fallback.len();
    let mut m = vec![0.0; n];
    for x in members {
        m.iter_mut().zip(x.iter()).for_each(|(a, b)| *a += b);
    }
    UnitVector::new(m).unwrap_or_else(|_| UnitVector::from_normalized(fallback.to_vec()))
}

fn diameter(members: &[&[f64]]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, x) in members.iter().enumerate() {
        for y in &members[i + 1..] {
            d = d.max(distance_slices(x, y));
        }
    }
    d
}

/// Antipodal clustering about the principal axis `a`.
///
/// Points with `⟨x, a⟩ ≥ 0` form the first side, the rest the second; each
/// pole is the normalized side mean.
pub fn attractor_detect(states: &[UnitVector], diameter_tol: f64) -> Result<ClusterSummary> {
    let first = states.first().ok_or_else(|| RqfError::invalid("no states to cluster"))?;
    if !(diameter_tol > 0.0) {
        return Err(RqfError::invalid("diameter tolerance must be positive"));
    }
    for x in states {
        check_dim(first.dim(), x.dim())?;
    }
    let a = principal_axis(states)?;
    let neg_a: Vec<f64> = a.iter().map(|v| -v).collect();
    let (plus, minus): (Vec<&[f64]>, Vec<&[f64]>) =
        states.iter().map(|x| x.as_slice()).partition(|x| dot(x, &a) >= 0.0);
    let total = states.len() as f64;
    let mut poles = Vec::new();
    let mut diameters = Vec::new();
    let mut masses = Vec::new();
    let mut max_pole_distance: f64 = 0.0;
    for (side, axis) in [(&plus, &a), (&minus, &neg_a)] {
        if side.is_empty() {
            continue;
        }
        let pole = pole_of(side, axis);
        for x in side.iter() {
            max_pole_distance = max_pole_distance.max(distance_slices(x, pole.as_slice()));
        }
        diameters.push(diameter(side));
        masses.push(side.len() as f64 / total);
        poles.push(pole);
    }
    let k = if max_pole_distance > diameter_tol { 0 } else { poles.len() as u8 };
    Ok(ClusterSummary { k, poles, diameters, masses, max_pole_distance })
}

/// Flow whose top Lyapunov exponent is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FlowModel {
    /// `dX = −P_X ∂Q X` on `S^{n−1}`.
    Rqf { n: usize },
    /// The angle SDE on `S¹`.
    Phase,
    /// Combined matrix and vector noise on `S^{n−1}`.
    Bias { n: usize, sigma_q: f64, sigma_w: f64 },
}

impl FlowModel {
    /// Ambient dimension of the noise that drives it.
    pub fn noise_dim(&self) -> usize {
        match *self {
            FlowModel::Rqf { n } | FlowModel::Bias { n, .. } => n,
            FlowModel::Phase => 2,
        }
    }

    fn dynamics(&self) -> Option<Dynamics> {
        match *self {
            FlowModel::Rqf { .. } => Some(Dynamics::Quadratic(Sign::Negative)),
            FlowModel::Bias { sigma_q, sigma_w, .. } => Some(Dynamics::Bias { sigma_q, sigma_w }),
            FlowModel::Phase => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovParams {
    pub t_end: f64,
    pub dt: f64,
    pub renorm_interval: f64,
    pub delta0: f64,
    /// Number of blocks for the standard error.
    pub blocks: usize,
}

impl LyapunovParams {
    pub fn new(t_end: f64, dt: f64) -> Self {
        LyapunovParams { t_end, dt, renorm_interval: 0.1, delta0: 1e-8, blocks: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    pub stderr: f64,
    pub t_total: f64,
    pub renorm_interval: f64,
}

/// Increments that are identically zero.
#[derive(Debug, Clone, Copy)]
pub struct ZeroNoise {
    pub n: usize,
    pub dt: f64,
}

impl IncrementSource for ZeroNoise {
    fn dim(&self) -> usize {
        self.n
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn len(&self) -> Option<usize> {
        None
    }
    fn matrix_increment(&self, _k: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    fn vector_increment(&self, _k: usize, out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = 0.0);
        Ok(())
    }
}

/// Two-trajectory (Benettin) estimate of the top Lyapunov exponent under the
/// realization `key`.
pub fn lyapunov_benettin(model: FlowModel, params: LyapunovParams, key: impl Into<NoiseKey>) -> Result<LyapunovEstimate> {
    let key = key.into();
    let source = NoiseStream::new(key, model.noise_dim(), params.dt)?;
    lyapunov_with_source(model, params, &source, key)
}

/// As [`lyapunov_benettin`] with an explicit increment source; `start` seeds
/// the initial point and perturbation direction.
pub fn lyapunov_with_source<S: IncrementSource + ?Sized>(
    model: FlowModel,
    params: LyapunovParams,
    source: &S,
    start: NoiseKey,
) -> Result<LyapunovEstimate> {
    let LyapunovParams { t_end, dt, renorm_interval, delta0, blocks } = params;
    check_dim(model.noise_dim(), source.dim())?;
    if (source.dt() - dt).abs() > 0.0 {
        return Err(RqfError::invalid("source dt differs from the requested dt"));
    }
    if let FlowModel::Bias { sigma_q, sigma_w, .. } = model {
        check_bias_params(sigma_q, sigma_w)?;
    }
    if !(delta0 > 0.0 && delta0 < 1e-2) {
        return Err(RqfError::invalid("delta0 must lie in (0, 1e-2)"));
    }
    if blocks == 0 {
        return Err(RqfError::invalid("blocks must be positive"));
    }
    if !(renorm_interval >= dt) {
        return Err(RqfError::invalid("renorm_interval must be at least dt"));
    }
    if !(t_end >= renorm_interval) {
        return Err(RqfError::invalid("T must be at least renorm_interval"));
    }
    let grid = TimeGrid::new(t_end, dt)?;
    let per = TimeGrid::new(renorm_interval, dt)?.steps;
    let rounds = grid.steps / per;
    source.check_range(rounds * per)?;

    let logs = match model.dynamics() {
        Some(dynamics) => sphere_logs(model.noise_dim(), dynamics, source, start, per, rounds, delta0)?,
        None => phase_logs(source, start, per, rounds, delta0)?,
    };
    let interval = per as f64 * dt;
    let t_total = rounds as f64 * interval;
    let lambda = logs.iter().sum::<f64>() / t_total;

    let b = blocks.min(rounds);
    let stderr = if b < 2 {
        0.0
    } else {
        let rates: Vec<f64> = (0..b)
            .map(|i| {
                let (lo, hi) = (i * rounds / b, (i + 1) * rounds / b);
                logs[lo..hi].iter().sum::<f64>() / ((hi - lo) as f64 * interval)
            })
            .collect();
        MeanEstimate::of(&rates).stderr
    };
    Ok(LyapunovEstimate { lambda, stderr, t_total, renorm_interval: interval })
}

fn separation_error(ratio: f64) -> RqfError {
    RqfError::numerical(format!(
        "separation changed by a factor {ratio:e} between renormalizations; use a smaller renorm_interval"
    ))
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio.is_finite() && (1e-6..=1e6).contains(&ratio)) {
        return Err(separation_error(ratio));
    }
    Ok(())
}

fn sphere_logs<S: IncrementSource + ?Sized>(
    n: usize,
    dynamics: Dynamics,
    source: &S,
    start: NoiseKey,
    per: usize,
    rounds: usize,
    delta0: f64,
) -> Result<Vec<f64>> {
    let x0 = uniform_sphere_points(n, 1, start)?.remove(0);
    let mut dir = vec![0.0; n];
    GaussianStream::new(start, Channel::Aux, n).fill(1 << 32, &mut dir);
    project_in_place(x0.as_slice(), &mut dir);
    let mut x = x0.into_vec();
    let mut y = offset_point(&x, &dir, delta0)?;

    let mut scratch = Scratch::new(n);
    let mut dw = vec![0.0; n];
    let (sigma, use_w) = match dynamics {
        Dynamics::Bias { sigma_q, sigma_w } => (Some((sigma_q, sigma_w)), sigma_w != 0.0),
        Dynamics::Quadratic(_) => (None, false),
    };
    let mut logs = Vec::with_capacity(rounds);
    let mut k = 0;
    for _ in 0..rounds {
        for _ in 0..per {
            let dq = source.symmetric_increment(k);
            if use_w {
                source.vector_increment(k, &mut dw)?;
            }
            let field = match sigma {
                None => Field::Quadratic { dq: &dq.dq, sign: Sign::Negative },
                Some((sigma_q, sigma_w)) => Field::Bias { dq: &dq.dq, dw: &dw, sigma_q, sigma_w },
            };
            heun_in_place(&mut x, &field, &mut scratch);
            heun_in_place(&mut y, &field, &mut scratch);
            k += 1;
        }
        let delta = distance_slices(&x, &y);
        let ratio = delta / delta0;
        check_ratio(ratio)?;
        logs.push(ratio.ln());
        let mut v: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        project_in_place(&x, &mut v);
        y = offset_point(&x, &v, delta0).map_err(|_| separation_error(ratio))?;
    }
    Ok(logs)
}

/// `cos δ·x + sin δ·v/‖v‖` for tangent `v`.
fn offset_point(x: &[f64], v: &[f64], delta: f64) -> Result<Vec<f64>> {
    let r = norm(v);
    if !(r > 0.0 && r.is_finite()) {
        return Err(RqfError::numerical("degenerate perturbation direction"));
    }
    let (s, c) = delta.sin_cos();
    Ok(x.iter().zip(v).map(|(a, b)| c * a + s * b / r).collect())
}

fn phase_logs<S: IncrementSource + ?Sized>(
    source: &S,
    start: NoiseKey,
    per: usize,
    rounds: usize,
    delta0: f64,
) -> Result<Vec<f64>> {
    let mut phi = uniform_sphere_points(2, 1, start)?[0].angle();
    let mut psi = phi + delta0;
    let mut db = [0.0; 4];
    let mut logs = Vec::with_capacity(rounds);
    let mut k = 0;
    for _ in 0..rounds {
        for _ in 0..per {
            source.matrix_increment(k, &mut db);
            let (u, v) = phase_drivers(&db);
            phi = phase_step(phi, u, v);
            psi = phase_step(psi, u, v);
            k += 1;
        }
        let delta = psi - phi;
        let ratio = delta.abs() / delta0;
        check_ratio(ratio)?;
        logs.push(ratio.ln());
        phi = phi.rem_euclid(std::f64::consts::TAU);
        psi = phi + delta0.copysign(delta);
    }
    Ok(logs)
}
