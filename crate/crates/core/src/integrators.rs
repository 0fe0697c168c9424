//! One-step schemes.
//!
//! Sphere flows use the Heun predictor–corrector, which is consistent with the
//! Stratonovich interpretation, followed by projection back onto the sphere.
//! The scalar inner-product diffusion is Itô and uses Euler–Maruyama.

use crate::error::{Result, RqfError};
use crate::geometry::{check_dim, dot, norm, project_in_place, SymmetricMatrix, UnitVector};
use crate::noise::SymmetricIncrement;
use crate::zprocess::ZModel;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Orientation of the matrix-noise vector field `±P_x dQ x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sign {
    /// `dX = −P_X ∂Q X` (the gradient-descent form).
    #[default]
    Negative,
    Positive,
}

impl Sign {
    #[inline]
    fn factor(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Positive => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub state: UnitVector,
    /// `|‖x'‖ − 1|` before renormalization.
    pub renorm_defect: f64,
}

/// Reusable buffers for in-place stepping.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    f0: Vec<f64>,
    f1: Vec<f64>,
    pred: Vec<f64>,
    tmp: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Scratch { f0: vec![0.0; n], f1: vec![0.0; n], pred: vec![0.0; n], tmp: vec![0.0; n] }
    }
}

/// The tangent vector field driving one step.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Field<'a> {
    Quadratic { dq: &'a SymmetricMatrix, sign: Sign },
    Bias { dq: &'a SymmetricMatrix, dw: &'a [f64], sigma_q: f64, sigma_w: f64 },
}

impl Field<'_> {
    /// `out = F(y)`; `tmp` is scratch of length n.
    #[inline]
    fn eval(&self, y: &[f64], out: &mut [f64], tmp: &mut [f64]) {
        match *self {
            Field::Quadratic { dq, sign } => {
                dq.mul_vec_into(y, out);
                project_in_place(y, out);
                let s = sign.factor();
                out.iter_mut().for_each(|v| *v *= s);
            }
            Field::Bias { dq, dw, sigma_q, sigma_w } => {
                let use_q = sigma_q != 0.0;
                let use_w = sigma_w != 0.0;
                if use_q {
                    dq.mul_vec_into(y, out);
                    project_in_place(y, out);
                }
                if use_w {
                    tmp.copy_from_slice(dw);
                    project_in_place(y, tmp);
                }
                match (use_q, use_w) {
                    (true, false) => out.iter_mut().for_each(|v| *v = -(sigma_q * *v)),
                    (false, true) => {
                        out.iter_mut().zip(tmp.iter()).for_each(|(o, w)| *o = -(sigma_w * w))
                    }
                    (true, true) => out
                        .iter_mut()
                        .zip(tmp.iter())
                        .for_each(|(o, w)| *o = -(sigma_q * *o) - sigma_w * w),
                    (false, false) => out.iter_mut().for_each(|v| *v = 0.0),
                }
            }
        }
    }
}

/// Heun step in place; returns the renormalization defect.
///
/// Every operation is sign-symmetric, so for odd fields the map `x ↦ x'`
/// commutes with negation bit for bit.
pub(crate) fn heun_in_place(x: &mut [f64], field: &Field<'_>, s: &mut Scratch) -> f64 {
    field.eval(x, &mut s.f0, &mut s.tmp);
    if s.f0.iter().all(|v| *v == 0.0) {
        // F(x) = 0 makes the predictor x itself, so the step is the identity
        return 0.0;
    }
    for ((p, xi), f) in s.pred.iter_mut().zip(x.iter()).zip(&s.f0) {
        *p = xi + f;
    }
    field.eval(&s.pred, &mut s.f1, &mut s.tmp);
    for ((xi, a), b) in x.iter_mut().zip(&s.f0).zip(&s.f1) {
        *xi += 0.5 * (a + b);
    }
    let r = norm(x);
    if r != 1.0 {
        x.iter_mut().for_each(|v| *v /= r);
    }
    (r - 1.0).abs()
}

fn finish(x: Vec<f64>, defect: f64) -> Result<StepResult> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(RqfError::numerical("step produced a non-finite state"));
    }
    Ok(StepResult { state: UnitVector::from_normalized(x), renorm_defect: defect })
}

/// One Stratonovich Heun step of `dX = ±P_X ∂Q X`.
pub fn heun_step_rqf(x: &UnitVector, dq: &SymmetricIncrement, sign: Sign) -> Result<StepResult> {
    check_dim(x.dim(), dq.dim())?;
    if !dq.dq.is_finite() {
        return Err(RqfError::numerical("non-finite matrix increment"));
    }
    let mut state = x.as_slice().to_vec();
    let mut scratch = Scratch::new(x.dim());
    let defect = heun_in_place(&mut state, &Field::Quadratic { dq: &dq.dq, sign }, &mut scratch);
    finish(state, defect)
}

/// One Heun step of `dX = −σ_Q P_X ∂Q X − σ_W P_X ∂W`.
pub fn heun_step_bias(
    x: &UnitVector,
    dq: &SymmetricIncrement,
    dw: &[f64],
    sigma_q: f64,
    sigma_w: f64,
) -> Result<StepResult> {
    check_bias_params(sigma_q, sigma_w)?;
    check_dim(x.dim(), dq.dim())?;
    check_dim(x.dim(), dw.len())?;
    if !dq.dq.is_finite() || dw.iter().any(|v| !v.is_finite()) {
        return Err(RqfError::numerical("non-finite increment"));
    }
    let mut state = x.as_slice().to_vec();
    let mut scratch = Scratch::new(x.dim());
    let field = Field::Bias { dq: &dq.dq, dw, sigma_q, sigma_w };
    let defect = heun_in_place(&mut state, &field, &mut scratch);
    finish(state, defect)
}

pub(crate) fn check_bias_params(sigma_q: f64, sigma_w: f64) -> Result<()> {
    if !(sigma_q >= 0.0 && sigma_q.is_finite()) || !(sigma_w >= 0.0 && sigma_w.is_finite()) {
        return Err(RqfError::invalid(format!(
            "noise amplitudes must be finite and non-negative (σ_Q = {sigma_q}, σ_W = {sigma_w})"
        )));
    }
    Ok(())
}

/// Euler–Maruyama step of `dZ = 2Z(1−Z²)dt + √2(1−Z²)dB`, clamped to `[−1, 1]`.
pub fn em_step_z(z: f64, db: f64, dt: f64) -> f64 {
    ZModel::Outward.em_step(z, db, dt)
}

/// Exact solution `e^{tM}x0 / ‖e^{tM}x0‖` of the deterministic quadratic-form flow.
pub fn dqf_exact(m: &SymmetricMatrix, x0: &UnitVector, t: f64) -> Result<UnitVector> {
    check_dim(m.dim(), x0.dim())?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(RqfError::invalid("time must be finite and non-negative"));
    }
    if t == 0.0 {
        return Ok(x0.clone());
    }
    let eig = eigen(m)?;
    let top = eig.eigenvalues.max();
    let x = DVector::from_column_slice(x0.as_slice());
    let mut coeffs = eig.eigenvectors.transpose() * x;
    // shifting by the top eigenvalue keeps every exponential <= 1
    for (c, lambda) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= (t * (lambda - top)).exp();
    }
    let y = &eig.eigenvectors * coeffs;
    let r = y.norm();
    if !(r > 0.0 && r.is_finite()) {
        return Err(RqfError::numerical("exact flow lost all mass in finite precision"));
    }
    Ok(UnitVector::from_normalized(y.iter().map(|v| v / r).collect()))
}

/// The top eigenspace of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct TopEigenspace {
    pub eigenvalue: f64,
    /// `λ1 − λ2` (infinite for `n = 1`).
    pub gap: f64,
    /// Orthonormal basis; one vector unless the gap is below the degeneracy threshold.
    pub basis: Vec<Vec<f64>>,
}

/// Gaps below this are treated as a degenerate top eigenvalue.
pub const DEGENERACY_GAP: f64 = 1e-10;

impl TopEigenspace {
    /// Row-major projector onto the eigenspace.
    pub fn projector(&self) -> Vec<f64> {
        let n = self.basis[0].len();
        let mut p = vec![0.0; n * n];
        for v in &self.basis {
            for i in 0..n {
                for j in 0..n {
                    p[i * n + j] += v[i] * v[j];
                }
            }
        }
        p
    }

    /// Geodesic distance from `x` to the nearest unit vector of the eigenspace.
    pub fn distance(&self, x: &UnitVector) -> f64 {
        let x = x.as_slice();
        let mut proj = vec![0.0; x.len()];
        for v in &self.basis {
            let c = dot(v, x);
            proj.iter_mut().zip(v).for_each(|(p, vi)| *p += c * vi);
        }
        let inside = norm(&proj);
        let outside: f64 = x.iter().zip(&proj).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        outside.atan2(inside)
    }
}

pub fn top_eigenspace(m: &SymmetricMatrix) -> Result<TopEigenspace> {
    let eig = eigen(m)?;
    let mut order: Vec<usize> = (0..m.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let gap = order.get(1).map_or(f64::INFINITY, |&i| top - eig.eigenvalues[i]);
    let basis = order
        .iter()
        .take_while(|&&i| top - eig.eigenvalues[i] < DEGENERACY_GAP)
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    Ok(TopEigenspace { eigenvalue: top, gap, basis })
}

fn eigen(m: &SymmetricMatrix) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !m.is_finite() {
        return Err(RqfError::numerical("matrix has non-finite entries"));
    }
    let n = m.dim();
    let dense = DMatrix::from_row_slice(n, n, &m.to_dense());
    SymmetricEigen::try_new(dense, f64::EPSILON, 10_000)
        .ok_or_else(|| RqfError::numerical("symmetric eigendecomposition did not converge"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::antipode;
    use crate::noise::{symmetrize, GaussianStream, NoiseKey, Channel};
    use proptest::prelude::*;

    fn random_dq(n: usize, seed: u64, scale: f64) -> SymmetricIncrement {
        let mut db = vec![0.0; n * n];
        GaussianStream::new(NoiseKey::new(seed), Channel::Matrix, n * n).fill(0, &mut db);
        db.iter_mut().for_each(|v| *v *= scale);
        symmetrize(&db).unwrap()
    }

    fn random_unit(n: usize, seed: u64) -> UnitVector {
        let mut v = vec![0.0; n];
        GaussianStream::new(NoiseKey::new(seed), Channel::Aux, n).fill(0, &mut v);
        UnitVector::new(v).unwrap()
    }

    #[test]
    fn zero_increment_is_identity() {
        let x = random_unit(4, 1);
        let r = heun_step_rqf(&x, &SymmetricIncrement::zeros(4), Sign::Negative).unwrap();
        assert_eq!(r.state, x);
        assert_eq!(r.renorm_defect, 0.0);
    }

    #[test]
    fn rqf_step_stays_on_sphere_and_is_odd() {
        for seed in 0..50 {
            let n = 2 + (seed as usize % 4);
            let x = random_unit(n, seed);
            let dq = random_dq(n, seed + 1000, 0.1);
            let a = heun_step_rqf(&x, &dq, Sign::Negative).unwrap();
            let b = heun_step_rqf(&antipode(&x), &dq, Sign::Negative).unwrap();
            assert!((norm(a.state.as_slice()) - 1.0).abs() < 1e-12);
            assert_eq!(b.state, antipode(&a.state));
            let bits_a: Vec<u64> = a.state.as_slice().iter().map(|v| (-v).to_bits()).collect();
            let bits_b: Vec<u64> = b.state.as_slice().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn sign_flips_the_field() {
        let x = random_unit(3, 4);
        let dq = random_dq(3, 5, 1e-3);
        let a = heun_step_rqf(&x, &dq, Sign::Negative).unwrap();
        let b = heun_step_rqf(&x, &dq, Sign::Positive).unwrap();
        let da: Vec<f64> = a.state.as_slice().iter().zip(x.as_slice()).map(|(p, q)| p - q).collect();
        let db: Vec<f64> = b.state.as_slice().iter().zip(x.as_slice()).map(|(p, q)| p - q).collect();
        for (u, v) in da.iter().zip(&db) {
            // the flipped step agrees up to second-order terms in dq
            assert!((u + v).abs() < 1e-5, "{u} {v}");
        }
    }

    #[test]
    fn non_finite_increment_is_rejected() {
        let mut db = vec![0.0; 4];
        db[1] = f64::NAN;
        let dq = symmetrize(&db).unwrap();
        let err = heun_step_rqf(&UnitVector::basis(2, 0).unwrap(), &dq, Sign::Negative).unwrap_err();
        assert!(matches!(err, RqfError::Numerical(_)));
    }

    #[test]
    fn bias_reductions() {
        let x = random_unit(3, 7);
        let dq = random_dq(3, 8, 0.1);
        let dw = [0.05, -0.02, 0.11];
        let frozen = heun_step_bias(&x, &dq, &dw, 0.0, 0.0).unwrap();
        assert_eq!(frozen.state, x);
        let q_only = heun_step_bias(&x, &dq, &dw, 1.0, 0.0).unwrap();
        let rqf = heun_step_rqf(&x, &dq, Sign::Negative).unwrap();
        assert_eq!(q_only, rqf);
        assert!(heun_step_bias(&x, &dq, &dw, -1.0, 0.0).is_err());
        assert!(heun_step_bias(&x, &dq, &dw, 0.0, -0.5).is_err());
    }

    #[test]
    fn pure_bias_step_is_not_odd() {
        // P_{-x} dw = P_x dw, so the pure vector-noise field is even in x
        let x = random_unit(3, 9);
        let dq = SymmetricIncrement::zeros(3);
        let dw = [0.3, -0.1, 0.2];
        let a = heun_step_bias(&x, &dq, &dw, 0.0, 1.0).unwrap();
        let b = heun_step_bias(&antipode(&x), &dq, &dw, 0.0, 1.0).unwrap();
        let gap: f64 =
            a.state.as_slice().iter().zip(b.state.as_slice()).map(|(p, q)| (p + q).abs()).sum();
        assert!(gap > 1e-3, "pure-bias step behaved oddly: {gap}");
    }

    #[test]
    fn em_z_examples() {
        assert_eq!(em_step_z(1.0, 0.7, 0.01), 1.0);
        assert_eq!(em_step_z(-1.0, -3.0, 0.01), -1.0);
        assert_eq!(em_step_z(0.0, 0.0, 0.01), 0.0);
        assert!((em_step_z(0.5, 0.0, 0.01) - 0.5075).abs() < 1e-15);
        assert_eq!(em_step_z(0.9, 10.0, 0.01), 1.0);
    }

    proptest! {
        #[test]
        fn em_z_stays_in_range(z in -1.0f64..=1.0, db in -5.0f64..5.0, dt in 1e-6f64..1.0) {
            let z1 = em_step_z(z, db, dt);
            prop_assert!((-1.0..=1.0).contains(&z1));
        }
    }

    #[test]
    fn dqf_examples() {
        let zero = SymmetricMatrix::zeros(3);
        let x0 = random_unit(3, 11);
        for t in [0.0, 1.0, 100.0] {
            let x = dqf_exact(&zero, &x0, t).unwrap();
            for (a, b) in x.as_slice().iter().zip(x0.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let m = SymmetricMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e2 = UnitVector::basis(2, 1).unwrap();
        for t in [0.5, 3.0, 40.0] {
            let x = dqf_exact(&m, &e2, t).unwrap();
            assert!(x.as_slice()[0].abs() < 1e-15 && (x.as_slice()[1] - 1.0).abs() < 1e-15);
        }
        let x0 = UnitVector::new(vec![1.0, 1.0]).unwrap();
        let x = dqf_exact(&m, &x0, 1.0).unwrap();
        let e = std::f64::consts::E;
        let r = (e.powi(4) + e * e).sqrt();
        assert!((x.as_slice()[0] - e * e / r).abs() < 1e-14);
        assert!((x.as_slice()[1] - e / r).abs() < 1e-14);
        assert_eq!(dqf_exact(&m, &x0, 0.0).unwrap(), x0);
    }

    #[test]
    fn dqf_handles_large_times() {
        let m = SymmetricMatrix::from_rows(&[vec![900.0, 1.0], vec![1.0, -50.0]]).unwrap();
        let x = dqf_exact(&m, &UnitVector::new(vec![0.2, 1.0]).unwrap(), 10.0).unwrap();
        let top = top_eigenspace(&m).unwrap();
        assert!(top.distance(&x) < 1e-12);
    }

    #[test]
    fn degenerate_top_eigenspace_reports_projector() {
        let m = SymmetricMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, -2.0],
        ])
        .unwrap();
        let top = top_eigenspace(&m).unwrap();
        assert_eq!(top.basis.len(), 2);
        let p = top.projector();
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[4] - 1.0).abs() < 1e-12 && p[8].abs() < 1e-12);
        let x = UnitVector::new(vec![0.6, 0.8, 0.0]).unwrap();
        assert!(top.distance(&x) < 1e-15);
    }
}
