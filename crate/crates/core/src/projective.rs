//! Homogeneous coordinates, the angular metric on projective space and
//! tolerance-based numerical rank.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default relative threshold on singular-value ratios.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Norms at or below this are treated as zero.
pub(crate) const ZERO_NORM: f64 = 1e-300;

/// Real or complex double precision scalar.
pub trait Scalar: ComplexField<RealField = f64> + Copy {}

impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

pub(crate) fn to_complex<T: Scalar>(x: T) -> Complex64 {
    Complex64::new(x.real(), x.imaginary())
}

/// A point of projective space stored with unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint<T: Scalar = f64> {
    coords: DVector<T>,
}

impl<T: Scalar> ProjectivePoint<T> {
    pub fn new(coords: DVector<T>) -> Result<Self> {
        let n = coords.norm();
        if !(n > ZERO_NORM) || !n.is_finite() || coords.is_empty() {
            return Err(Error::ZeroVector);
        }
        Ok(Self { coords: coords.unscale(n) })
    }

    pub fn from_slice(coords: &[T]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn coords(&self) -> &DVector<T> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<T> {
        self.coords
    }

    /// Dimension `n` of the projective space `P^n`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn conj(&self) -> Self {
        Self { coords: self.coords.map(|c| c.conjugate()) }
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        angular_distance(self, other)
    }

    /// Proportionality test via the angular metric.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        matches!(angular_distance(self, other), Ok(d) if d < tol)
    }

    pub fn to_complex(&self) -> ProjectivePoint<Complex64> {
        ProjectivePoint { coords: self.coords.map(to_complex) }
    }
}

impl ProjectivePoint<Complex64> {
    /// Real representative if the point is real up to a global phase.
    pub fn real_view(&self, tol: f64) -> Option<ProjectivePoint<f64>> {
        let pivot = self
            .coords
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
        let phase = pivot.conj() / pivot.norm();
        let rotated = self.coords.map(|c| c * phase);
        if rotated.iter().any(|c| c.im.abs() > tol) {
            return None;
        }
        ProjectivePoint::new(rotated.map(|c| c.re)).ok()
    }
}

/// `min_t ‖u − t v‖ / ‖u‖`, the sine of the angle between the two lines of `C^{n+1}`.
pub fn angular_distance<T: Scalar>(u: &ProjectivePoint<T>, v: &ProjectivePoint<T>) -> Result<f64> {
    angular_distance_vectors(&u.coords, &v.coords)
}

/// [`angular_distance`] on raw, not necessarily normalized, coordinate vectors.
pub fn angular_distance_vectors<T: Scalar>(u: &DVector<T>, v: &DVector<T>) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    let (nu, nv) = (u.norm(), v.norm());
    if !(nu > ZERO_NORM) || !(nv > ZERO_NORM) {
        return Err(Error::ZeroVector);
    }
    let uh = u.unscale(nu);
    let vh = v.unscale(nv);
    // Residual form stays accurate for nearly equal points.
    let t = vh.dotc(&uh);
    let r = &uh - &vh * t;
    Ok(r.norm().min(1.0))
}

/// Root-sum-of-squares of componentwise angular distances.
pub fn product_distance<T: Scalar>(x: &[ProjectivePoint<T>], y: &[ProjectivePoint<T>]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = angular_distance(a, b)?;
        acc += d * d;
    }
    Ok(acc.sqrt())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RankReport {
    pub singular_values: Vec<f64>,
    pub numerical_rank: usize,
    /// `σ_{r+1} / σ_1`, zero at full rank.
    pub gap_ratio: f64,
}

impl RankReport {
    pub fn from_singular_values(mut sv: Vec<f64>, rank_tol: f64) -> Result<Self> {
        sv.sort_by(|a, b| b.total_cmp(a));
        let s1 = sv.first().copied().unwrap_or(0.0);
        if !(s1 > ZERO_NORM) || !s1.is_finite() {
            return Err(Error::ZeroMatrix);
        }
        let numerical_rank = sv.iter().filter(|&&s| s / s1 > rank_tol).count();
        let gap_ratio = sv.get(numerical_rank).map_or(0.0, |s| s / s1);
        Ok(Self { singular_values: sv, numerical_rank, gap_ratio })
    }

    /// `σ_k / σ_1` (0-based `k`), zero past the end.
    pub fn ratio(&self, k: usize) -> f64 {
        self.singular_values.get(k).map_or(0.0, |s| s / self.singular_values[0])
    }
}

/// Numerical rank from the singular values, with the decision taken on `σ_k / σ_1`.
pub fn numerical_rank<T: Scalar>(matrix: &DMatrix<T>, rank_tol: f64) -> Result<RankReport> {
    if matrix.is_empty() {
        return Err(Error::ZeroMatrix);
    }
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("rank_tol must lie in (0,1), got {rank_tol}")));
    }
    RankReport::from_singular_values(crate::linalg::singular_values(matrix), rank_tol)
}

/// Full left singular basis of an `r × c` matrix, columns ordered by descending
/// singular value. Missing singular values (when `c < r`) count as zero.
pub fn left_singular_basis<T: Scalar>(matrix: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>) {
    crate::linalg::jacobi_svd(&matrix.adjoint())
}

/// Full right singular basis (columns of `V`) of an `r × c` matrix, ordered by
/// descending singular value; missing values (when `r < c`) count as zero.
pub fn right_singular_basis<T: Scalar>(matrix: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>) {
    crate::linalg::jacobi_svd(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn zero_vector_rejected() {
        assert_eq!(ProjectivePoint::<f64>::from_slice(&[0.0, 0.0, 0.0]), Err(Error::ZeroVector));
        assert_eq!(
            angular_distance_vectors(&dvector![0.0, 0.0], &dvector![1.0, 0.0]),
            Err(Error::ZeroVector)
        );
    }

    #[test]
    fn identity_and_orthogonal() {
        let u = ProjectivePoint::from_slice(&[1.0, 2.0, 3.0]).unwrap();
        let v = ProjectivePoint::from_slice(&[-3.0, 0.0, 1.0]).unwrap();
        assert_eq!(angular_distance(&u, &u).unwrap(), 0.0);
        assert_relative_eq!(angular_distance(&u, &v).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hermitian_orthogonality_is_distance_one() {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let u = ProjectivePoint::from_slice(&[one, i]).unwrap();
        let v = ProjectivePoint::from_slice(&[one, -i]).unwrap();
        assert_relative_eq!(angular_distance(&u, &v).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn product_distance_cases() {
        let a = ProjectivePoint::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        let b = ProjectivePoint::from_slice(&[0.0, 1.0, 0.0]).unwrap();
        let c = ProjectivePoint::from_slice(&[0.3, 1.0, 0.0]).unwrap();
        assert_eq!(product_distance(&[a.clone(), b.clone()], &[a.clone(), b.clone()]).unwrap(), 0.0);
        assert_eq!(product_distance(&[a.clone()], &[c.clone()]).unwrap(), angular_distance(&a, &c).unwrap());
        assert_relative_eq!(
            product_distance(&[a.clone(), b.clone()], &[b.clone(), a.clone()]).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(
            product_distance(&[a.clone()], &[a, b]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn rank_examples() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert_eq!(numerical_rank(&id, DEFAULT_RANK_TOL).unwrap().numerical_rank, 4);
        let x = dvector![1.0, -2.0, 0.5];
        let y = dvector![0.3, 1.0, 4.0, -1.0];
        let outer = &x * y.transpose();
        let r = numerical_rank(&outer, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(r.numerical_rank, 1);
        assert!(r.gap_ratio < 1e-15);
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(3, 3), 1e-8), Err(Error::ZeroMatrix));
    }

    #[test]
    fn real_view_strips_phase() {
        let phase = Complex64::from_polar(1.0, 0.7);
        let p = ProjectivePoint::from_slice(&[phase * 2.0, phase * -1.0, phase * 0.5]).unwrap();
        let r = p.real_view(1e-12).unwrap();
        let expect = ProjectivePoint::from_slice(&[2.0, -1.0, 0.5]).unwrap();
        assert!(r.approx_eq(&expect, 1e-14));
        let q = ProjectivePoint::from_slice(&[Complex64::new(1.0, 0.0), Complex64::i()]).unwrap();
        assert!(q.real_view(1e-12).is_none());
    }

    #[test]
    fn singular_bases_are_sorted_and_padded() {
        let m = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
        let (u, sv) = left_singular_basis(&m);
        assert_eq!(u.shape(), (4, 4));
        assert_eq!(sv.len(), 4);
        assert_relative_eq!(sv[0], 3.0, epsilon = 1e-14);
        assert!(sv[2] < 1e-14 && sv[3] < 1e-14);
        let (v, sv) = right_singular_basis(&m.transpose());
        assert_eq!(v.shape(), (4, 4));
        assert_relative_eq!(sv[1], 1.0, epsilon = 1e-14);
    }
}
