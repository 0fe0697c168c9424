//! Primitives on the embedded unit sphere `S^{n-1} ⊂ R^n`.
//!
//! The dimension `n` is a runtime value so that the same code serves sweeps
//! over `n`. All values are immutable after construction.

use crate::error::{Result, RqfError};
use serde::{Deserialize, Serialize};

/// Inputs with a smaller Euclidean norm have no well-defined direction.
pub const MIN_NORM: f64 = 1e-8;

/// A point on `S^{n-1}`, `n >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Normalizes `coords` onto the sphere.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(RqfError::invalid(format!(
                "unit vectors need n >= 2 coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(RqfError::invalid("coordinates must be finite"));
        }
        let norm = norm(&coords);
        if norm < MIN_NORM {
            return Err(RqfError::invalid(format!(
                "vector norm {norm:e} is below {MIN_NORM:e}; direction undefined"
            )));
        }
        let mut coords = coords;
        if norm != 1.0 {
            coords.iter_mut().for_each(|c| *c /= norm);
        }
        Ok(UnitVector(coords))
    }

    /// The standard basis vector `e_i` in `R^n`.
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(RqfError::invalid(format!("basis index {i} out of range for n = {n}")));
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        UnitVector::new(v)
    }

    /// Point on the circle at angle `phi` (radians).
    pub fn from_angle(phi: f64) -> Self {
        UnitVector(vec![phi.cos(), phi.sin()])
    }

    /// Wraps coordinates that the caller has already normalized.
    pub(crate) fn from_normalized(coords: Vec<f64>) -> Self {
        debug_assert!((norm(&coords) - 1.0).abs() < 1e-9);
        UnitVector(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(dot(&self.0, &other.0))
    }

    /// Polar angle in `[0, 2π)` of a point on `S^1`.
    pub fn angle(&self) -> f64 {
        self.0[1].atan2(self.0[0]).rem_euclid(std::f64::consts::TAU)
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = RqfError;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        UnitVector::new(value)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(value: UnitVector) -> Self {
        value.0
    }
}

/// A vector in the tangent space `T_x S^{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: UnitVector,
    pub vec: Vec<f64>,
}

impl TangentVector {
    pub fn norm(&self) -> f64 {
        norm(&self.vec)
    }
}

/// Real symmetric `n × n` matrix stored as its packed upper triangle.
///
/// `get(i, j)` and `get(j, i)` read the same storage cell, so symmetry holds
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix { n, upper: vec![0.0; n * (n + 1) / 2] }
    }

    /// Builds from entries `f(i, j)` for `i <= j`.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(f(i, j));
            }
        }
        SymmetricMatrix { n, upper }
    }

    /// Builds from a row-major dense matrix that must already be exactly symmetric.
    pub fn from_dense(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(RqfError::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(RqfError::invalid(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_upper_fn(n, |i, j| entries[i * n + j]))
    }

    /// Builds from nested rows; the rows must form an exactly symmetric square matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut dense = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(RqfError::invalid("matrix must be square"));
            }
            dense.extend_from_slice(row);
        }
        Self::from_dense(n, &dense)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // rows 0..i hold n + (n-1) + ... + (n-i+1) entries
        i * self.n - i * i.saturating_sub(1) / 2 + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.index(i, j)]
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.get(i, j);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(|v| *v == 0.0)
    }

    /// `out = self · x`.
    #[inline]
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += self.get(i, j) * xj;
            }
            *o = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, x.len())?;
        let mut out = vec![0.0; self.n];
        self.mul_vec_into(x, &mut out);
        Ok(out)
    }
}

/// `P_x v = v − ⟨x, v⟩ x`.
pub fn project_tangent(x: &UnitVector, v: &[f64]) -> Result<TangentVector> {
    check_dim(x.dim(), v.len())?;
    let mut out = v.to_vec();
    project_in_place(x.as_slice(), &mut out);
    Ok(TangentVector { base: x.clone(), vec: out })
}

#[inline]
pub(crate) fn project_in_place(x: &[f64], v: &mut [f64]) {
    let c = dot(x, v);
    for (vi, xi) in v.iter_mut().zip(x) {
        *vi -= c * xi;
    }
}

/// Geodesic distance on the sphere, in `[0, π]`.
///
/// Evaluated as `2·atan2(‖x − y‖, ‖x + y‖)`, which equals the arccosine of the
/// inner product but keeps full relative precision for nearly equal and nearly
/// antipodal pairs.
pub fn sphere_distance(x: &UnitVector, y: &UnitVector) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    Ok(distance_slices(x.as_slice(), y.as_slice()))
}

#[inline]
pub(crate) fn distance_slices(x: &[f64], y: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (a, b) in x.iter().zip(y) {
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// The antipodal point `−x`.
pub fn antipode(x: &UnitVector) -> UnitVector {
    UnitVector(x.0.iter().map(|c| -c).collect())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(RqfError::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn e(n: usize, i: usize) -> UnitVector {
        UnitVector::basis(n, i).unwrap()
    }

    #[test]
    fn constructor_normalizes_and_rejects_tiny_inputs() {
        let u = UnitVector::new(vec![3.0, 4.0]).unwrap();
        assert!((norm(u.as_slice()) - 1.0).abs() < 1e-12);
        assert!(UnitVector::new(vec![1e-9, 0.0]).is_err());
        assert!(UnitVector::new(vec![1.0]).is_err());
        assert!(UnitVector::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn packed_storage_mirrors_entries() {
        let m = SymmetricMatrix::from_upper_fn(4, |i, j| (10 * i + j) as f64);
        for i in 0..4 {
            for j in 0..4 {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                assert_eq!(m.get(i, j), (10 * a + b) as f64);
                assert_eq!(m.get(i, j).to_bits(), m.get(j, i).to_bits());
            }
        }
        assert!(SymmetricMatrix::from_dense(2, &[0.0, 1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn projection_examples() {
        let p = project_tangent(&e(2, 0), e(2, 1).as_slice()).unwrap();
        assert_eq!(p.vec, vec![0.0, 1.0]);
        let p = project_tangent(&e(3, 0), e(3, 0).as_slice()).unwrap();
        assert!(p.norm() == 0.0);
        let x = UnitVector::new(vec![1.0, 1.0]).unwrap();
        let p = project_tangent(&x, &[1.0, 0.0]).unwrap();
        assert!((p.vec[0] - 0.5).abs() < 1e-15);
        assert!((p.vec[1] + 0.5).abs() < 1e-15);
        assert!(project_tangent(&x, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(sphere_distance(&e(3, 0), &e(3, 0)).unwrap(), 0.0);
        assert_eq!(sphere_distance(&e(3, 0), &antipode(&e(3, 0))).unwrap(), PI);
        assert!((sphere_distance(&e(3, 0), &e(3, 1)).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!(sphere_distance(&e(3, 0), &e(2, 0)).is_err());
    }

    #[test]
    fn small_angles_keep_precision() {
        let x = UnitVector::from_angle(0.3);
        let y = UnitVector::from_angle(0.3 + 1e-10);
        let d = sphere_distance(&x, &y).unwrap();
        assert!((d - 1e-10).abs() < 1e-16, "{d}");
    }

    #[test]
    fn antipode_examples() {
        assert_eq!(antipode(&e(3, 0)).as_slice(), &[-1.0, -0.0, -0.0]);
        let x = UnitVector::new(vec![0.3, -0.2, 0.9]).unwrap();
        assert_eq!(antipode(&antipode(&x)), x);
        assert!((x.dot(&antipode(&x)).unwrap() + 1.0).abs() < 1e-15);
        let d = UnitVector::new(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!((d.dot(&antipode(&d)).unwrap() + 1.0).abs() < 1e-15);
    }

    fn unit_and_vec() -> impl Strategy<Value = (UnitVector, Vec<f64>)> {
        (2usize..6).prop_flat_map(|n| {
            (
                prop::collection::vec(-1.0f64..1.0, n)
                    .prop_filter("non-degenerate", |v| norm(v) > 1e-3),
                prop::collection::vec(-5.0f64..5.0, n),
            )
                .prop_map(|(x, v)| (UnitVector::new(x).unwrap(), v))
        })
    }

    proptest! {
        #[test]
        fn projection_is_idempotent((x, v) in unit_and_vec()) {
            let p = project_tangent(&x, &v).unwrap();
            let pp = project_tangent(&x, &p.vec).unwrap();
            for (a, b) in p.vec.iter().zip(&pp.vec) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert!(dot(x.as_slice(), &p.vec).abs() < 1e-10);
        }

        #[test]
        fn projection_annihilates_base((x, _v) in unit_and_vec(), c in -10.0f64..10.0) {
            let scaled: Vec<f64> = x.as_slice().iter().map(|xi| xi * c).collect();
            let p = project_tangent(&x, &scaled).unwrap();
            prop_assert!(p.norm() < 1e-12);
        }

        #[test]
        fn projection_is_even_in_base((x, v) in unit_and_vec()) {
            let p = project_tangent(&x, &v).unwrap();
            let q = project_tangent(&antipode(&x), &v).unwrap();
            for (a, b) in p.vec.iter().zip(&q.vec) {
                prop_assert!((a - b).abs() < 1e-15);
            }
        }

        #[test]
        fn distance_is_symmetric((x, v) in unit_and_vec()) {
            if let Ok(y) = UnitVector::new(v) {
                let d = sphere_distance(&x, &y).unwrap();
                prop_assert_eq!(d, sphere_distance(&y, &x).unwrap());
                prop_assert!((0.0..=PI).contains(&d));
            }
        }
    }
}
