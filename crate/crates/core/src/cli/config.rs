use crate::error::{Result, RqfError};
use crate::zprocess::ZModel;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Experiment {
    Simulate,
    Coupled,
    Pullback,
    Zprocess,
    FokkerPlanck,
    Lyapunov,
    Dqf,
    BiasScan,
    Uniformity,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Simulate,
        Experiment::Coupled,
        Experiment::Pullback,
        Experiment::Zprocess,
        Experiment::FokkerPlanck,
        Experiment::Lyapunov,
        Experiment::Dqf,
        Experiment::BiasScan,
        Experiment::Uniformity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Coupled => "coupled",
            Experiment::Pullback => "pullback",
            Experiment::Zprocess => "zprocess",
            Experiment::FokkerPlanck => "fokker-planck",
            Experiment::Lyapunov => "lyapunov",
            Experiment::Dqf => "dqf",
            Experiment::BiasScan => "bias-scan",
            Experiment::Uniformity => "uniformity",
        }
    }

    pub fn valid_names() -> Vec<&'static str> {
        Self::ALL.iter().map(|e| e.name()).collect()
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = RqfError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            RqfError::Config(format!(
                "unknown experiment \"{s}\"; valid experiments are: {}",
                Self::valid_names().join(", ")
            ))
        })
    }
}

impl TryFrom<String> for Experiment {
    type Error = RqfError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Experiment> for String {
    fn from(e: Experiment) -> String {
        e.name().to_string()
    }
}

/// Master seed and number of replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    #[serde(default)]
    pub master: u64,
    #[serde(default = "one_usize")]
    pub count: usize,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { master: 0, count: 1 }
    }
}

/// Flow selector for the Lyapunov experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LyapunovFlow {
    #[default]
    Rqf,
    Phase,
    Bias,
}

fn one_usize() -> usize {
    1
}
fn default_n() -> usize {
    3
}
fn default_sigma_q() -> f64 {
    1.0
}
fn default_z0() -> f64 {
    0.5
}
fn default_grid_points() -> usize {
    100
}
fn default_members() -> usize {
    2
}
fn default_cells() -> usize {
    crate::zprocess::DEFAULT_CELLS
}
fn default_renorm() -> f64 {
    0.1
}
fn default_tol() -> f64 {
    1e-3
}
fn default_alpha() -> f64 {
    0.01
}
fn default_ratios() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0]
}

/// One experiment run, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default = "default_sigma_q")]
    pub sigma_q: f64,
    #[serde(default)]
    pub sigma_w: f64,
    /// Rows of the symmetric matrix for `dqf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Initial point (normalized on load).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    /// Explicit initial points for `coupled`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initials: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_z0")]
    pub z0: f64,
    #[serde(default)]
    pub z_model: ZModel,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_members")]
    pub members: usize,
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
    #[serde(default)]
    pub flow: LyapunovFlow,
    #[serde(default = "default_renorm")]
    pub renorm_interval: f64,
    #[serde(default = "default_tol")]
    pub diameter_tol: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Keep every k-th step in recorded histories.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_cap_bytes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| RqfError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RqfError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// All schema violations; empty when the config can run.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut push = |cond: bool, msg: &str| {
            if cond {
                v.push(msg.to_string());
            }
        };
        push(self.n < 2, "n must be ≥ 2");
        push(!(self.dt > 0.0 && self.dt.is_finite()), "dt must be positive");
        push(!(self.t_end >= 0.0 && self.t_end.is_finite()), "T must be non-negative");
        push(self.t_end > 0.0 && self.dt > self.t_end, "dt must not exceed T");
        push(self.seeds.count == 0, "seeds.count must be ≥ 1");
        push(!(self.sigma_q >= 0.0 && self.sigma_q.is_finite()), "sigma_q must be non-negative");
        push(!(self.sigma_w >= 0.0 && self.sigma_w.is_finite()), "sigma_w must be non-negative");
        push(!(-1.0..=1.0).contains(&self.z0), "z0 must lie in [-1, 1]");
        push(self.grid_points == 0, "grid_points must be ≥ 1");
        push(self.members == 0, "members must be ≥ 1");
        push(self.cells < 3, "cells must be ≥ 3");
        push(!(self.renorm_interval > 0.0 && self.renorm_interval.is_finite()), "renorm_interval must be positive");
        push(!(self.diameter_tol > 0.0), "diameter_tol must be positive");
        push(!(self.alpha > 0.0 && self.alpha < 1.0), "alpha must lie in (0, 1)");
        push(self.record_every == Some(0), "record_every must be ≥ 1");
        if let Some(x) = &self.initial {
            push(x.len() != self.n, "initial must have n entries");
        }
        if let Some(xs) = &self.initials {
            push(xs.is_empty(), "initials must not be empty");
            push(xs.iter().any(|x| x.len() != self.n), "every entry of initials must have n entries");
        }
        match self.experiment {
            Some(Experiment::Dqf) => match &self.matrix {
                None => push(true, "dqf needs a matrix"),
                Some(rows) => push(
                    rows.len() != self.n || rows.iter().any(|r| r.len() != self.n),
                    "matrix must be n × n",
                ),
            },
            Some(Experiment::BiasScan) => {
                push(self.ratios.is_empty(), "ratios must not be empty");
                push(self.ratios.iter().any(|r| !(*r >= 0.0 && r.is_finite())), "ratios must be non-negative");
            }
            Some(Experiment::Lyapunov) => {
                push(self.renorm_interval < self.dt, "renorm_interval must be at least dt");
                push(self.t_end < self.renorm_interval, "T must be at least renorm_interval");
            }
            Some(Experiment::Uniformity) => push(
                self.seeds.count < crate::diagnostics::MIN_UNIFORMITY_SAMPLES,
                "uniformity needs seeds.count ≥ 100",
            ),
            _ => {}
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(RqfError::Config(v.join("; ")))
        }
    }
}
