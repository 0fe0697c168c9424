//! C interface to `rqf-core`.
//!
//! Every function returns an [`RqfStatus`]. On failure the message is kept in
//! a thread-local slot readable with [`rqf_last_error`]. Handles are opaque
//! and must be released with the matching `*_free` function.

use rqf_core::diagnostics::{attractor_detect, lyapunov_benettin, sync_metric, FlowModel, LyapunovParams};
use rqf_core::flows::{coupled_endpoints, simulate_coupled, simulate_rqf, Dynamics, Ensemble, Trajectory};
use rqf_core::noise::{generate_path, NoiseKey, NoisePath};
use rqf_core::zprocess::{DensityGrid, FokkerPlanck, ZModel};
use rqf_core::{RqfError, UnitVector};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RqfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    ResourceCap = 4,
    DimensionMismatch = 5,
    BufferTooSmall = 6,
    Io = 7,
    Panic = 8,
}

/// Drift model of the inner-product diffusion.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RqfZModel {
    Outward = 0,
    Coupled = 1,
}

impl From<RqfZModel> for ZModel {
    fn from(m: RqfZModel) -> Self {
        match m {
            RqfZModel::Outward => ZModel::Outward,
            RqfZModel::Coupled => ZModel::Coupled,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RqfLyapunov {
    pub lambda: f64,
    pub std_error: f64,
    pub t_total: f64,
}

/// Cluster structure of a pushed-forward grid. Entries past `k` are zero;
/// `pole_inner_product` is NaN unless `k == 2`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RqfClusterSummary {
    pub k: u8,
    pub masses: [f64; 2],
    pub diameters: [f64; 2],
    pub pole_inner_product: f64,
    pub max_pole_distance: f64,
}

pub struct RqfNoisePath(NoisePath);
pub struct RqfTrajectory(Trajectory);
pub struct RqfEnsemble(Ensemble);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Core(RqfError),
    Null,
    Buffer { needed: usize, given: usize },
}

impl From<RqfError> for Failure {
    fn from(e: RqfError) -> Self {
        Failure::Core(e)
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &RqfError) -> RqfStatus {
    match e {
        RqfError::InvalidInput(_) | RqfError::Config(_) => RqfStatus::InvalidInput,
        RqfError::DimensionMismatch { .. } => RqfStatus::DimensionMismatch,
        RqfError::Numerical(_) => RqfStatus::Numerical,
        RqfError::ResourceCap { .. } => RqfStatus::ResourceCap,
        RqfError::Io(_) => RqfStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RqfStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RqfStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null)) => {
            set_error("null pointer argument".into());
            RqfStatus::NullPointer
        }
        Ok(Err(Failure::Buffer { needed, given })) => {
            set_error(format!("buffer holds {given} values, {needed} needed"));
            RqfStatus::BufferTooSmall
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            RqfStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_to(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null);
    }
    if len < src.len() {
        return Err(Failure::Buffer { needed: src.len(), given: len });
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null);
    }
    out.write(value);
    Ok(())
}

unsafe fn handle<'a, T>(h: *const T) -> Result<&'a T, Failure> {
    h.as_ref().ok_or(Failure::Null)
}

unsafe fn points(coords: *const f64, count: usize, n: usize) -> Result<Vec<UnitVector>, Failure> {
    let total = count.checked_mul(n).ok_or_else(|| RqfError::InvalidInput("point array too large".into()))?;
    let all = slice(coords, total)?;
    if n == 0 {
        return Err(RqfError::InvalidInput("dimension must be positive".into()).into());
    }
    Ok(all.chunks(n).map(|c| UnitVector::new(c.to_vec())).collect::<Result<_, _>>()?)
}

fn key(seed: u64, replicate: u64) -> NoiseKey {
    NoiseKey::replicate(seed, replicate)
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn rqf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rqf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Stores `steps` matrix increments (and vector increments if `with_vector`).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rqf_noise_path_new(
    seed: u64,
    replicate: u64,
    n: usize,
    dt: f64,
    steps: usize,
    with_vector: bool,
    out: *mut *mut RqfNoisePath,
) -> RqfStatus {
    guard(|| {
        let path = generate_path(key(seed, replicate), n, dt, steps, with_vector)?;
        put(out, Box::into_raw(Box::new(RqfNoisePath(path))))
    })
}

/// # Safety
/// `path` must be NULL or a handle from [`rqf_noise_path_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rqf_noise_path_free(path: *mut RqfNoisePath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// # Safety
/// `path` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rqf_noise_path_steps(path: *const RqfNoisePath, out: *mut usize) -> RqfStatus {
    guard(|| put(out, handle(path)?.0.steps()))
}

/// Copies the raw `n × n` row-major Brownian increment of step `k` into `out`;
/// the flow is driven by its symmetric part.
///
/// # Safety
/// `path` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rqf_noise_path_matrix(
    path: *const RqfNoisePath,
    k: usize,
    out: *mut f64,
    len: usize,
) -> RqfStatus {
    guard(|| {
        let p = &handle(path)?.0;
        if k >= p.steps() {
            return Err(RqfError::InvalidInput(format!("step {k} is outside the stored path")).into());
        }
        write_to(p.matrix(k), out, len)
    })
}

/// One trajectory of the flow from `x0`, recorded at every step.
///
/// # Safety
/// `x0` must point to `n` doubles and `out` to storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rqf_simulate(
    x0: *const f64,
    n: usize,
    t_end: f64,
    dt: f64,
    seed: u64,
    replicate: u64,
    out: *mut *mut RqfTrajectory,
) -> RqfStatus {
    guard(|| {
        let x0 = UnitVector::new(slice(x0, n)?.to_vec())?;
        let traj = simulate_rqf(&x0, t_end, dt, key(seed, replicate))?;
        put(out, Box::into_raw(Box::new(RqfTrajectory(traj))))
    })
}

/// # Safety
/// `traj` must be NULL or a handle from [`rqf_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rqf_trajectory_free(traj: *mut RqfTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of recorded states, `steps + 1`.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rqf_trajectory_len(traj: *const RqfTrajectory, out: *mut usize) -> RqfStatus {
    guard(|| put(out, handle(traj)?.0.states.len()))
}

/// Time and coordinates of recorded state `k`.
///
/// # Safety
/// `traj` must be a live handle, `t` writable and `x` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rqf_trajectory_state(
    traj: *const RqfTrajectory,
    k: usize,
    t: *mut f64,
    x: *mut f64,
    len: usize,
) -> RqfStatus {
    guard(|| {
        let tr = &handle(traj)?.0;
        let s = tr
            .states
            .get(k)
            .ok_or_else(|| RqfError::InvalidInput(format!("state {k} is out of range")))?;
        write_to(s.as_slice(), x, len)?;
        put(t, tr.times[k])
    })
}

/// Several members driven by one realization. `initials` is `members × n`
/// row-major.
///
/// # Safety
/// `initials` must point to `members * n` doubles and `out` to storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rqf_simulate_coupled(
    initials: *const f64,
    members: usize,
    n: usize,
    t_end: f64,
    dt: f64,
    seed: u64,
    replicate: u64,
    out: *mut *mut RqfEnsemble,
) -> RqfStatus {
    guard(|| {
        let xs = points(initials, members, n)?;
        let e = simulate_coupled(&xs, t_end, dt, key(seed, replicate))?;
        put(out, Box::into_raw(Box::new(RqfEnsemble(e))))
    })
}

/// # Safety
/// `ens` must be NULL or a handle from [`rqf_simulate_coupled`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rqf_ensemble_free(ens: *mut RqfEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// Member count and number of recorded states per member.
///
/// # Safety
/// `ens` must be a live handle; `members` and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn rqf_ensemble_shape(ens: *const RqfEnsemble, members: *mut usize, len: *mut usize) -> RqfStatus {
    guard(|| {
        let e = &handle(ens)?.0;
        put(members, e.members.len())?;
        put(len, e.members.first().map_or(0, |m| m.states.len()))
    })
}

/// Coordinates of `member` at recorded state `k`.
///
/// # Safety
/// `ens` must be a live handle and `x` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rqf_ensemble_state(
    ens: *const RqfEnsemble,
    member: usize,
    k: usize,
    x: *mut f64,
    len: usize,
) -> RqfStatus {
    guard(|| {
        let e = &handle(ens)?.0;
        let s = e
            .members
            .get(member)
            .and_then(|m| m.states.get(k))
            .ok_or_else(|| RqfError::InvalidInput(format!("member {member}, state {k} is out of range")))?;
        write_to(s.as_slice(), x, len)
    })
}

/// Geodesic synchronization distance between two points of `S^{n−1}`.
///
/// # Safety
/// `x` and `y` must point to `n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rqf_sync_metric(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> RqfStatus {
    guard(|| {
        let a = UnitVector::new(slice(x, n)?.to_vec())?;
        let b = UnitVector::new(slice(y, n)?.to_vec())?;
        put(out, sync_metric(&a, &b)?)
    })
}

/// Probability that the inner-product diffusion started at `z0` reaches `+1` first.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqf_hit_up_probability(model: RqfZModel, z0: f64, out: *mut f64) -> RqfStatus {
    guard(|| put(out, ZModel::from(model).hit_up_probability(z0)?))
}

/// Evolves cell masses on `[−1, 1]` in place with the finite-volume scheme.
///
/// # Safety
/// `masses` must point to `cells` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rqf_fokker_planck(
    model: RqfZModel,
    masses: *mut f64,
    cells: usize,
    t_end: f64,
    dt_pde: f64,
) -> RqfStatus {
    guard(|| {
        let p0 = DensityGrid::from_masses(slice(masses, cells)?.to_vec())?;
        let p = FokkerPlanck::new(cells, model.into())?.evolve(&p0, t_end, dt_pde)?;
        write_to(p.masses(), masses, cells)
    })
}

/// Largest stable `dt_pde` for the given grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqf_fokker_planck_max_dt(model: RqfZModel, cells: usize, out: *mut f64) -> RqfStatus {
    guard(|| put(out, FokkerPlanck::new(cells, model.into())?.max_stable_dt()))
}

/// Top Lyapunov exponent of the flow on `S^{n−1}` under one realization.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqf_lyapunov(
    n: usize,
    t_end: f64,
    dt: f64,
    renorm_interval: f64,
    seed: u64,
    out: *mut RqfLyapunov,
) -> RqfStatus {
    guard(|| {
        let params = LyapunovParams { renorm_interval, ..LyapunovParams::new(t_end, dt) };
        let e = lyapunov_benettin(FlowModel::Rqf { n }, params, seed)?;
        put(out, RqfLyapunov { lambda: e.lambda, std_error: e.stderr, t_total: e.t_total })
    })
}

/// Pushes `count` grid points forward for time `T` under one realization and
/// summarizes the clusters.
///
/// # Safety
/// `grid` must point to `count * n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqf_pullback(
    grid: *const f64,
    count: usize,
    n: usize,
    t_end: f64,
    dt: f64,
    seed: u64,
    diameter_tol: f64,
    out: *mut RqfClusterSummary,
) -> RqfStatus {
    guard(|| {
        let xs = points(grid, count, n)?;
        let ends = coupled_endpoints(&xs, t_end, dt, seed, Dynamics::default())?;
        let s = attractor_detect(&ends.states, diameter_tol)?;
        let mut summary = RqfClusterSummary {
            k: s.k,
            pole_inner_product: s.pole_inner_product().unwrap_or(f64::NAN),
            max_pole_distance: s.max_pole_distance,
            ..Default::default()
        };
        for (i, (m, d)) in s.masses.iter().zip(&s.diameters).take(2).enumerate() {
            summary.masses[i] = *m;
            summary.diameters[i] = *d;
        }
        put(out, summary)
    })
}
