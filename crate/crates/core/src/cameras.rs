//! Pinhole cameras and rigs.

use nalgebra::{DMatrix, Matrix3, Matrix3x4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::grassmannian::PlueckerLine;
use crate::projective::{angular_distance, numerical_rank, ProjectivePoint, RankReport, Scalar, DEFAULT_RANK_TOL};

/// Size of the image cross product, relative to `‖C‖²`, below which a line
/// counts as passing through the center.
pub const THROUGH_CENTER_TOL: f64 = 1e-10;

/// Relative residual accepted by [`Camera::plane_to_image_line`].
pub const BACK_PROJECTION_TOL: f64 = 1e-8;

/// Minimal angular distance between two camera centers.
pub const CENTER_TOL: f64 = 1e-8;

/// A plane of `P^3` given by its linear equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane3<T: Scalar = f64> {
    pub h: ProjectivePoint<T>,
}

impl<T: Scalar> Plane3<T> {
    pub fn new(h: Vector4<T>) -> Result<Self> {
        Ok(Self { h: ProjectivePoint::from_slice(h.as_slice())? })
    }

    pub fn vector(&self) -> Vector4<T> {
        Vector4::from_iterator(self.h.coords().iter().copied())
    }

    /// `hᵀx` with both sides as stored (unit `h`).
    pub fn evaluate(&self, x: &Vector4<T>) -> T {
        self.vector().dot(x)
    }

    pub fn contains(&self, x: &Vector4<T>, tol: f64) -> bool {
        self.evaluate(x).modulus() <= tol * x.norm()
    }
}

/// A full-rank `3 × 4` camera with its center cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    matrix: Matrix3x4<f64>,
    center: Vector4<f64>,
    /// `(C Cᵀ)⁻¹ C`, the left inverse of `Cᵀ`.
    pinv_t: Matrix3x4<f64>,
}

pub(crate) fn cofactor_kernel(c: &Matrix3x4<f64>) -> Vector4<f64> {
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&j| j != skip).collect();
        Matrix3::from_fn(|i, j| c[(i, cols[j])]).determinant()
    };
    Vector4::new(minor(0), -minor(1), minor(2), -minor(3))
}

impl Camera {
    pub fn new(matrix: Matrix3x4<f64>) -> Result<Self> {
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("camera matrix has non-finite entries".into()));
        }
        let rank = match numerical_rank(&DMatrix::from_column_slice(3, 4, matrix.as_slice()), DEFAULT_RANK_TOL) {
            Ok(r) => r.numerical_rank,
            Err(_) => 0,
        };
        if rank != 3 {
            return Err(Error::RankDeficientCamera { rank });
        }
        let k = cofactor_kernel(&matrix);
        let center = k.unscale(k.norm());
        let gram = matrix * matrix.transpose();
        let inv = gram.try_inverse().ok_or(Error::RankDeficientCamera { rank: 2 })?;
        Ok(Self { matrix, center, pinv_t: inv * matrix })
    }

    /// Camera from 12 numbers in row-major order.
    pub fn from_row_major(entries: &[f64]) -> Result<Self> {
        if entries.len() != 12 {
            return Err(Error::DimensionMismatch { expected: 12, got: entries.len() });
        }
        Self::new(Matrix3x4::from_row_slice(entries))
    }

    pub fn matrix(&self) -> &Matrix3x4<f64> {
        &self.matrix
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        self.matrix.transpose().as_slice().to_vec()
    }

    pub fn center(&self) -> ProjectivePoint<f64> {
        ProjectivePoint::from_slice(self.center.as_slice()).expect("unit center")
    }

    pub fn center_vector(&self) -> &Vector4<f64> {
        &self.center
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.matrix * s)
    }

    fn matrix_as<T: Scalar>(&self) -> Matrix3x4<T> {
        self.matrix.map(T::from_real)
    }

    pub fn project_point<T: Scalar>(&self, x: &Vector4<T>) -> Vector3<T> {
        self.matrix_as::<T>() * x
    }

    /// Image line of `line`, as the cross product of two projected points.
    pub fn project_line<T: Scalar>(&self, line: &PlueckerLine<T>) -> Result<ProjectivePoint<T>> {
        let c = self.matrix_as::<T>();
        let a = c * line.basis().column(0);
        let b = c * line.basis().column(1);
        let l = a.cross(&b);
        // Unit basis vectors keep ‖a‖, ‖b‖ ≤ ‖C‖, so this is scale invariant.
        if l.norm() <= THROUGH_CENTER_TOL * self.matrix.norm_squared() || l.norm() == 0.0 {
            return Err(Error::LineThroughCenter { camera: 0 });
        }
        ProjectivePoint::from_slice(l.as_slice())
    }

    /// Back-projected plane `Cᵀℓ`.
    pub fn back_project<T: Scalar>(&self, l: &ProjectivePoint<T>) -> Plane3<T> {
        let lv = Vector3::from_iterator(l.coords().iter().copied());
        Plane3::new(self.matrix_as::<T>().transpose() * lv).expect("full-rank camera maps nonzero lines to nonzero planes")
    }

    /// Inverse of [`Camera::back_project`] on planes through the center.
    pub fn plane_to_image_line<T: Scalar>(&self, h: &Plane3<T>) -> Result<ProjectivePoint<T>> {
        let hv = h.vector();
        let l = self.pinv_t.map(T::from_real) * hv;
        let back = self.matrix_as::<T>().transpose() * l;
        let residual = (hv - back).norm() / hv.norm();
        if residual > BACK_PROJECTION_TOL {
            return Err(Error::NotBackProjected { residual });
        }
        ProjectivePoint::from_slice(l.as_slice())
    }

    /// Preimage `{p : C p ∥ x}` of an image point, the ray through the center.
    pub fn back_project_point(&self, x: &Vector3<f64>) -> Result<PlueckerLine<f64>> {
        let p = self.pinv_t.transpose() * x;
        PlueckerLine::from_vectors(&self.center, &p)
    }
}

/// Maximal set of at least three cameras with collinear centers.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CollinearGroup {
    pub indices: Vec<usize>,
    /// `σ3 / σ1` of the stacked centers.
    pub gap_ratio: f64,
}

impl CollinearGroup {
    /// Four or more collinear centers: rank of `M(ℓ)` alone no longer describes the variety.
    pub fn breaks_rank_description(&self) -> bool {
        self.indices.len() >= 4
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    cameras: Vec<Camera>,
    collinear_groups: Vec<CollinearGroup>,
    coplanar: bool,
    rank_tol: f64,
    center_rank: RankReport,
    shared_centers: Vec<(usize, usize)>,
}

fn stacked_centers(cameras: &[Camera], idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(4, idx.len(), |r, c| cameras[idx[c]].center[r])
}

pub fn classify_rig(cameras: Vec<Camera>) -> Result<CameraRig> {
    classify_rig_with_tol(cameras, DEFAULT_RANK_TOL)
}

pub fn classify_rig_with_tol(cameras: Vec<Camera>, rank_tol: f64) -> Result<CameraRig> {
    classify_rig_with_options(cameras, rank_tol, false)
}

/// Like [`classify_rig_with_tol`]; with `allow_shared_centers` coincident centers
/// are recorded in [`CameraRig::shared_centers`] instead of rejected.
pub fn classify_rig_with_options(cameras: Vec<Camera>, rank_tol: f64, allow_shared_centers: bool) -> Result<CameraRig> {
    let m = cameras.len();
    if m < 2 {
        return Err(Error::TooFewCameras { min: 2, got: m });
    }
    let mut shared_centers = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if angular_distance(&cameras[i].center(), &cameras[j].center())? < CENTER_TOL {
                if !allow_shared_centers {
                    return Err(Error::DuplicateCenters { first: i, second: j });
                }
                shared_centers.push((i, j));
            }
        }
    }
    let rank_of = |idx: &[usize]| numerical_rank(&stacked_centers(&cameras, idx), rank_tol);
    let mut groups: Vec<CollinearGroup> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if shared_centers.contains(&(i, j)) || groups.iter().any(|g| g.indices.contains(&i) && g.indices.contains(&j)) {
                continue;
            }
            let mut members = vec![i, j];
            for k in 0..m {
                if k != i && k != j && rank_of(&[i, j, k])?.numerical_rank <= 2 {
                    members.push(k);
                }
            }
            if members.len() < 3 {
                continue;
            }
            members.sort_unstable();
            let report = rank_of(&members)?;
            if report.numerical_rank == 2 {
                groups.push(CollinearGroup { indices: members, gap_ratio: report.ratio(2) });
            }
        }
    }
    groups.sort_by(|a, b| a.indices.cmp(&b.indices));
    let all: Vec<usize> = (0..m).collect();
    let center_rank = rank_of(&all)?;
    Ok(CameraRig { coplanar: center_rank.numerical_rank <= 3, cameras, collinear_groups: groups, rank_tol, center_rank, shared_centers })
}

impl CameraRig {
    pub fn cameras(&self) -> &[Camera] {
        &self.cameras
    }

    pub fn camera(&self, i: usize) -> &Camera {
        &self.cameras[i]
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn collinear_groups(&self) -> &[CollinearGroup] {
        &self.collinear_groups
    }

    /// Groups of four or more collinear centers.
    pub fn exceptional_groups(&self) -> impl Iterator<Item = &CollinearGroup> {
        self.collinear_groups.iter().filter(|g| g.breaks_rank_description())
    }

    pub fn coplanar(&self) -> bool {
        self.coplanar
    }

    /// Pairs of cameras with coincident centers, only possible through
    /// [`classify_rig_with_options`].
    pub fn shared_centers(&self) -> &[(usize, usize)] {
        &self.shared_centers
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Singular values of the `4 × m` matrix of stacked centers.
    pub fn center_rank(&self) -> &RankReport {
        &self.center_rank
    }

    /// Baseline spanned by the centers of a collinear group.
    pub fn baseline(&self, indices: &[usize]) -> Result<PlueckerLine<f64>> {
        if indices.len() < 2 {
            return Err(Error::InvalidArgument("a baseline needs two centers".into()));
        }
        let (u, _) = crate::projective::left_singular_basis(&stacked_centers(&self.cameras, indices));
        let col = |k: usize| Vector4::from_iterator(u.column(k).iter().copied());
        PlueckerLine::from_vectors(&col(0), &col(1))
    }

    /// Rig made of the listed cameras, in order.
    pub fn subrig(&self, indices: &[usize]) -> Result<CameraRig> {
        let cams = indices.iter().map(|&i| self.cameras[i].clone()).collect();
        classify_rig_with_options(cams, self.rank_tol, !self.shared_centers.is_empty())
    }
}
