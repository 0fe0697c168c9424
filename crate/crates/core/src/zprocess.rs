//! The inner-product diffusion `Z_t = ⟨X_t, Y_t⟩` of two particles under
//! common noise: closed-form coefficients, scale function, boundary hitting
//! probabilities, direct simulation and a finite-volume Fokker–Planck solver.
//!
//! Both models share the diffusion coefficient `√2(1 − z²)` and differ in the
//! Itô drift:
//!
//! * [`ZModel::Outward`]: drift `2z(1 − z²)`, scale `z − z³/3`.
//! * [`ZModel::Coupled`]: drift `−z(1 − z²)`, scale `arcsin z`. This is the Itô
//!   form of `d⟨X, Y⟩` computed directly from the coupled sphere SDE, and it
//!   is the model whose law matches coupled sphere simulations.

use crate::error::{Result, RqfError};
use crate::noise::{NoiseKey, ScalarNoise};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZModel {
    #[default]
    Outward,
    Coupled,
}

impl ZModel {
    pub fn drift(self, z: f64) -> f64 {
        match self {
            ZModel::Outward => 2.0 * z * (1.0 - z * z),
            ZModel::Coupled => -z * (1.0 - z * z),
        }
    }

    pub fn diffusion(self, z: f64) -> f64 {
        SQRT_2 * (1.0 - z * z)
    }

    /// Clamped Euler–Maruyama step; `±1` are exact fixed points.
    pub fn em_step(self, z: f64, db: f64, dt: f64) -> f64 {
        let next = z + self.drift(z) * dt + self.diffusion(z) * db;
        next.clamp(-1.0, 1.0)
    }

    /// Scale function normalized so that `s(c) = 0`.
    pub fn scale(self, z: f64, c: f64) -> Result<f64> {
        check_reference(c)?;
        check_z(z)?;
        Ok(match self {
            ZModel::Outward => ((z - z.powi(3) / 3.0) - (c - c.powi(3) / 3.0)) / (1.0 - c * c),
            ZModel::Coupled => (1.0 - c * c).sqrt() * (z.asin() - c.asin()),
        })
    }

    /// `P(Z → +1 | Z_0 = z0)` from the scale function with reference point `c`.
    pub fn hit_up_probability_with(self, z0: f64, c: f64) -> Result<f64> {
        let lo = self.scale(-1.0, c)?;
        let hi = self.scale(1.0, c)?;
        Ok(((self.scale(z0, c)? - lo) / (hi - lo)).clamp(0.0, 1.0))
    }

    /// `P(Z → +1 | Z_0 = z0)` in closed form.
    pub fn hit_up_probability(self, z0: f64) -> Result<f64> {
        check_z(z0)?;
        Ok(match self {
            ZModel::Outward => (2.0 + 3.0 * z0 - z0.powi(3)) / 4.0,
            ZModel::Coupled => (z0.asin() + FRAC_PI_2) / PI,
        }
        .clamp(0.0, 1.0))
    }
}

/// Drift `2z(1 − z²)`.
pub fn z_drift(z: f64) -> f64 {
    ZModel::Outward.drift(z)
}

/// Diffusion coefficient `√2(1 − z²)`.
pub fn z_diffusion(z: f64) -> f64 {
    ZModel::Outward.diffusion(z)
}

/// `Σ(z) = (1 − z²)²`, half the squared diffusion coefficient.
pub fn sigma_z(z: f64) -> f64 {
    (1.0 - z * z).powi(2)
}

/// Scale function of the outward model with reference point `c ∈ (−1, 1)`.
pub fn scale(z: f64, c: f64) -> Result<f64> {
    ZModel::Outward.scale(z, c)
}

/// `P(Z → +1)` for the outward model.
pub fn hit_up_probability(z0: f64) -> Result<f64> {
    ZModel::Outward.hit_up_probability(z0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFunction {
    pub model: ZModel,
    pub c: f64,
}

impl ScaleFunction {
    pub fn new(model: ZModel, c: f64) -> Result<Self> {
        check_reference(c)?;
        Ok(ScaleFunction { model, c })
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        self.model.scale(z, self.c)
    }
}

fn check_reference(c: f64) -> Result<()> {
    if c.abs() < 1.0 {
        Ok(())
    } else {
        Err(RqfError::invalid(format!("scale reference point must lie in (-1, 1), got {c}")))
    }
}

fn check_z(z: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(RqfError::invalid(format!("z must lie in [-1, 1], got {z}")))
    }
}

/// A sampled path of the scalar diffusion on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ZPath {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl ZPath {
    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("paths hold at least the initial value")
    }
}

fn z_steps(z0: f64, t_end: f64, dt: f64) -> Result<usize> {
    check_z(z0)?;
    crate::flows::TimeGrid::new(t_end, dt).map(|g| g.steps)
}

/// Euler–Maruyama simulation; the state freezes once it reaches `±1`.
pub fn simulate_z(z0: f64, t_end: f64, dt: f64, key: impl Into<NoiseKey>, model: ZModel) -> Result<ZPath> {
    let steps = z_steps(z0, t_end, dt)?;
    let noise = ScalarNoise::new(key, dt)?;
    let mut values = Vec::with_capacity(steps + 1);
    values.push(z0);
    let mut z = z0;
    for db in noise.iter().take(steps) {
        if z.abs() < 1.0 {
            z = model.em_step(z, db, dt);
        }
        values.push(z);
    }
    Ok(ZPath { dt, values })
}

/// Final value of [`simulate_z`] without storing the path.
pub fn z_endpoint(z0: f64, t_end: f64, dt: f64, key: impl Into<NoiseKey>, model: ZModel) -> Result<f64> {
    let steps = z_steps(z0, t_end, dt)?;
    let noise = ScalarNoise::new(key, dt)?;
    let mut z = z0;
    for db in noise.iter().take(steps) {
        if z.abs() >= 1.0 {
            break;
        }
        z = model.em_step(z, db, dt);
    }
    Ok(z)
}

/// Probability masses on `m` uniform cells covering `[−1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    masses: Vec<f64>,
}

/// Default number of finite-volume cells.
pub const DEFAULT_CELLS: usize = 401;

impl DensityGrid {
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(RqfError::invalid("density grid needs at least one cell"));
        }
        if masses.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(RqfError::invalid("masses must be finite and non-negative"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(RqfError::invalid(format!("masses sum to {total}, expected 1")));
        }
        Ok(DensityGrid { masses })
    }

    /// All mass in the cell containing `z0`; the grid analogue of `δ_{z0}`.
    pub fn near_delta(m: usize, z0: f64) -> Result<Self> {
        check_z(z0)?;
        if m == 0 {
            return Err(RqfError::invalid("density grid needs at least one cell"));
        }
        let mut masses = vec![0.0; m];
        masses[cell_of(m, z0)] = 1.0;
        Ok(DensityGrid { masses })
    }

    /// Normalized histogram of samples in `[−1, 1]` on the cell grid.
    pub fn from_samples(m: usize, samples: &[f64]) -> Result<Self> {
        if samples.is_empty() || m == 0 {
            return Err(RqfError::invalid("histogram needs samples and cells"));
        }
        let mut masses = vec![0.0; m];
        for &z in samples {
            check_z(z)?;
            masses[cell_of(m, z)] += 1.0;
        }
        let total = samples.len() as f64;
        masses.iter_mut().for_each(|v| *v /= total);
        Ok(DensityGrid { masses })
    }

    pub fn cells(&self) -> usize {
        self.masses.len()
    }

    pub fn width(&self) -> f64 {
        2.0 / self.masses.len() as f64
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn centers(&self) -> Vec<f64> {
        let h = self.width();
        (0..self.cells()).map(|i| -1.0 + (i as f64 + 0.5) * h).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Mass in cells whose centers satisfy `|z| > threshold`.
    pub fn tail_mass(&self, threshold: f64) -> f64 {
        self.centers().iter().zip(&self.masses).filter(|(c, _)| c.abs() > threshold).map(|(_, m)| m).sum()
    }

    /// `max_i |p_i − p_{m−1−i}|`.
    pub fn asymmetry(&self) -> f64 {
        let m = self.cells();
        (0..m).map(|i| (self.masses[i] - self.masses[m - 1 - i]).abs()).fold(0.0, f64::max)
    }

    /// Merges consecutive blocks of `block` cells; the last block takes the remainder.
    pub fn coarsen(&self, block: usize) -> Vec<f64> {
        let block = block.max(1);
        let full = (self.cells() / block).max(1);
        let mut out = vec![0.0; full];
        for (i, m) in self.masses.iter().enumerate() {
            out[(i / block).min(full - 1)] += m;
        }
        out
    }

    pub fn l1_distance(&self, other: &DensityGrid) -> Result<f64> {
        if self.cells() != other.cells() {
            return Err(RqfError::DimensionMismatch { expected: self.cells(), found: other.cells() });
        }
        Ok(self.masses.iter().zip(&other.masses).map(|(a, b)| (a - b).abs()).sum())
    }
}

fn cell_of(m: usize, z: f64) -> usize {
    let i = ((z + 1.0) / 2.0 * m as f64).floor();
    (i.max(0.0) as usize).min(m - 1)
}

/// Explicit conservative finite-volume solver for
/// `∂t p = −∂z(b p) + ∂zz(Σ p)` with zero-flux boundaries.
///
/// Advection is upwinded at cell faces and `Σ p` is differenced between
/// cell centers. Every update coefficient is non-negative for
/// `dt ≤ max_stable_dt()`, which gives positivity and L1 stability; mass is
/// conserved because the face fluxes telescope.
#[derive(Debug, Clone)]
pub struct FokkerPlanck {
    model: ZModel,
    m: usize,
    h: f64,
    /// Drift at the `m − 1` interior faces.
    face_drift: Vec<f64>,
    /// `Σ` at cell centers.
    diffusivity: Vec<f64>,
}

impl FokkerPlanck {
    pub fn new(m: usize, model: ZModel) -> Result<Self> {
        if m < 3 {
            return Err(RqfError::invalid("Fokker-Planck grid needs at least 3 cells"));
        }
        let h = 2.0 / m as f64;
        let face_drift = (1..m).map(|i| model.drift(-1.0 + i as f64 * h)).collect();
        let diffusivity = (0..m).map(|i| sigma_z(-1.0 + (i as f64 + 0.5) * h)).collect();
        Ok(FokkerPlanck { model, m, h, face_drift, diffusivity })
    }

    pub fn model(&self) -> ZModel {
        self.model
    }

    /// Largest step keeping every update coefficient non-negative.
    pub fn max_stable_dt(&self) -> f64 {
        let (h, h2) = (self.h, self.h * self.h);
        (0..self.m)
            .map(|i| {
                let mut rate = 0.0;
                if i + 1 < self.m {
                    rate += self.face_drift[i].max(0.0) / h + self.diffusivity[i] / h2;
                }
                if i > 0 {
                    rate += (-self.face_drift[i - 1]).max(0.0) / h + self.diffusivity[i] / h2;
                }
                rate
            })
            .fold(0.0, f64::max)
            .recip()
    }

    fn step(&self, p: &[f64], next: &mut [f64], dt: f64) {
        let (h, h2) = (self.h, self.h * self.h);
        next.copy_from_slice(p);
        for f in 0..self.m - 1 {
            let b = self.face_drift[f];
            let advect = (b.max(0.0) * p[f] + b.min(0.0) * p[f + 1]) / h;
            let diffuse = (self.diffusivity[f + 1] * p[f + 1] - self.diffusivity[f] * p[f]) / h2;
            let flux = dt * (advect - diffuse);
            next[f] -= flux;
            next[f + 1] += flux;
        }
    }

    /// Evolves `p0` to time `t_end` with steps no larger than `dt_pde`.
    pub fn evolve(&self, p0: &DensityGrid, t_end: f64, dt_pde: f64) -> Result<DensityGrid> {
        let mut out = None;
        self.evolve_observed(p0, t_end, dt_pde, |_, g| out = Some(g.clone()))?;
        Ok(out.expect("observer sees the final state"))
    }

    /// Like [`evolve`](Self::evolve) but calls `observe(t, p)` after every step,
    /// including `t = 0`.
    pub fn evolve_observed(
        &self,
        p0: &DensityGrid,
        t_end: f64,
        dt_pde: f64,
        mut observe: impl FnMut(f64, &DensityGrid),
    ) -> Result<()> {
        if p0.cells() != self.m {
            return Err(RqfError::DimensionMismatch { expected: self.m, found: p0.cells() });
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(RqfError::invalid("time must be finite and non-negative"));
        }
        let max_dt = self.max_stable_dt();
        if !(dt_pde > 0.0) || dt_pde > max_dt {
            return Err(RqfError::invalid(format!(
                "dt_pde = {dt_pde:e} violates the stability bound; the maximum stable dt_pde is {max_dt:e}"
            )));
        }
        let steps = if t_end == 0.0 { 0 } else { (t_end / dt_pde).ceil() as usize };
        let dt = if steps == 0 { 0.0 } else { t_end / steps as f64 };
        let mut cur = p0.clone();
        let mut next = vec![0.0; self.m];
        observe(0.0, &cur);
        for k in 0..steps {
            self.step(&cur.masses, &mut next, dt);
            std::mem::swap(&mut cur.masses, &mut next);
            observe((k + 1) as f64 * dt, &cur);
        }
        Ok(())
    }
}

/// Evolves the outward-model density with the default scheme.
pub fn fokker_planck_evolve(p0: &DensityGrid, t_end: f64, dt_pde: f64) -> Result<DensityGrid> {
    FokkerPlanck::new(p0.cells(), ZModel::Outward)?.evolve(p0, t_end, dt_pde)
}
