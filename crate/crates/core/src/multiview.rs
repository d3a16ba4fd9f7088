//! The line multiview variety: the matrix `M(ℓ)` of back-projected planes,
//! membership with closure and smoothness classification, the exceptional
//! locus of collinear rigs, the trifocal tensor and the point analogue.

use nalgebra::{DMatrix, Matrix3, Vector3, Vector4};

use crate::cameras::CameraRig;
use crate::error::{Error, Result};
use crate::grassmannian::{dual_line, hodge_star, DualMode, PlueckerLine};
use crate::projective::{left_singular_basis, numerical_rank, ProjectivePoint, RankReport, Scalar};

/// An `m`-tuple of image lines in dual coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LineTuple<T: Scalar = f64> {
    lines: Vec<ProjectivePoint<T>>,
}

impl<T: Scalar> LineTuple<T> {
    pub fn new(lines: Vec<ProjectivePoint<T>>) -> Result<Self> {
        if let Some(bad) = lines.iter().find(|l| l.dim() != 2) {
            return Err(Error::DimensionMismatch { expected: 2, got: bad.dim() });
        }
        Ok(Self { lines })
    }

    pub fn from_vectors(lines: &[Vector3<T>]) -> Result<Self> {
        Ok(Self { lines: lines.iter().map(|l| ProjectivePoint::from_slice(l.as_slice())).collect::<Result<_>>()? })
    }

    pub fn lines(&self) -> &[ProjectivePoint<T>] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn vector(&self, i: usize) -> Vector3<T> {
        Vector3::from_iterator(self.lines[i].coords().iter().copied())
    }

    pub fn vectors(&self) -> Vec<Vector3<T>> {
        (0..self.len()).map(|i| self.vector(i)).collect()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self { lines: indices.iter().map(|&i| self.lines[i].clone()).collect() }
    }
}

fn check_len<T: Scalar>(rig: &CameraRig, l: &LineTuple<T>) -> Result<()> {
    if rig.len() != l.len() {
        return Err(Error::LengthMismatch { left: rig.len(), right: l.len() });
    }
    Ok(())
}

/// `M(ℓ) = [C_1ᵀℓ_1 … C_mᵀℓ_m]` with unit columns.
pub fn build_m<T: Scalar>(rig: &CameraRig, l: &LineTuple<T>) -> Result<DMatrix<T>> {
    check_len(rig, l)?;
    let mut m = DMatrix::zeros(4, l.len());
    for (i, (cam, li)) in rig.cameras().iter().zip(l.lines()).enumerate() {
        m.set_column(i, &cam.back_project(li).vector());
    }
    Ok(m)
}

/// Images of a line in every camera.
pub fn forward_map<T: Scalar>(rig: &CameraRig, line: &PlueckerLine<T>) -> Result<LineTuple<T>> {
    let lines = rig
        .cameras()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.project_line(line).map_err(|e| match e {
                Error::LineThroughCenter { .. } => Error::LineThroughCenter { camera: i },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LineTuple { lines })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExceptionalReport {
    pub group: Vec<usize>,
    /// The transversals of the lines `F_I(ℓ_i)` form a positive-dimensional family.
    pub in_locus: bool,
    /// `σ4 / σ1` of the incidence system; zero on the locus.
    pub margin: f64,
    /// False when the margin lies within a factor 10 of the tolerance.
    pub confident: bool,
    /// Cameras whose `F_I(ℓ_i)` degenerates to a plane and carries no condition.
    pub degenerate_planes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MembershipDiagnostics {
    pub singular_values: Vec<f64>,
    pub gap_ratio: f64,
    pub exceptional: Vec<ExceptionalReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub rank: usize,
    pub in_variety: bool,
    pub in_image: bool,
    pub singular: bool,
    pub exceptional_ok: bool,
    pub witness_line: Option<PlueckerLine<f64>>,
    pub diagnostics: MembershipDiagnostics,
}

/// Classifies a tuple against the rig's line multiview variety.
pub fn membership(rig: &CameraRig, l: &LineTuple<f64>) -> Result<MembershipReport> {
    let m = build_m(rig, l)?;
    let (u, sv) = left_singular_basis(&m);
    let report = RankReport::from_singular_values(sv, rig.rank_tol())?;
    let rank = report.numerical_rank;

    let witness_line = if rank == 2 {
        let p = Vector4::from_iterator(u.column(2).iter().copied());
        let q = Vector4::from_iterator(u.column(3).iter().copied());
        PlueckerLine::from_vectors(&p, &q).ok()
    } else {
        None
    };

    let mut exceptional = Vec::new();
    if rank <= 2 {
        for g in rig.exceptional_groups() {
            exceptional.push(exceptional_locus_test(rig, l, &g.indices)?);
        }
    }
    let exceptional_ok = exceptional.iter().all(|e| e.in_locus);
    let in_variety = rank <= 2 && exceptional_ok;
    let through_center = witness_line
        .as_ref()
        .is_some_and(|w| rig.cameras().iter().any(|c| w.contains(c.center_vector())));
    let in_image = in_variety && !(rank == 2 && through_center);

    Ok(MembershipReport {
        rank,
        in_variety,
        in_image,
        singular: in_variety && rank == 1,
        exceptional_ok,
        witness_line,
        diagnostics: MembershipDiagnostics { gap_ratio: report.gap_ratio, singular_values: report.singular_values, exceptional },
    })
}

/// Membership of many tuples, in input order.
pub fn membership_batch(rig: &CameraRig, tuples: &[LineTuple<f64>]) -> Vec<Result<MembershipReport>> {
    crate::parallel::map_indexed(tuples.len(), |i| membership(rig, &tuples[i]))
}

/// Relative size of both `h·f` below which `E_I*` lies in the back-projected plane.
const PLANE_DEGENERACY_TOL: f64 = 1e-10;

/// Tests whether `ℓ` lies in the exceptional locus attached to a group of at
/// least four collinear cameras.
pub fn exceptional_locus_test(rig: &CameraRig, l: &LineTuple<f64>, group: &[usize]) -> Result<ExceptionalReport> {
    check_len(rig, l)?;
    let mut sorted = group.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let valid = sorted.len() >= 4
        && sorted.len() == group.len()
        && rig.collinear_groups().iter().any(|g| sorted.iter().all(|i| g.indices.contains(i)));
    if !valid {
        return Err(Error::NotCollinearGroup(group.to_vec()));
    }
    let baseline = rig.baseline(&sorted)?;
    let dual = dual_line(&baseline, DualMode::Hermitian);
    let (f1, f2) = (dual.basis_vector(0), dual.basis_vector(1));

    let mut rows: Vec<[f64; 6]> = Vec::new();
    let mut degenerate_planes = Vec::new();
    for &i in &sorted {
        let cam = rig.camera(i);
        let h = cam.back_project(&l.lines()[i]).vector();
        let (a, b) = (h.dot(&f1), h.dot(&f2));
        if a.abs() < PLANE_DEGENERACY_TOL && b.abs() < PLANE_DEGENERACY_TOL {
            degenerate_planes.push(i);
            continue;
        }
        let q = f1 * b - f2 * a;
        let f = PlueckerLine::from_vectors(cam.center_vector(), &q)?;
        rows.push(hodge_star(f.coords()));
    }

    // E_I and E_I* always solve the system; with nullity exactly 2 the pencil they
    // span meets the quadric in just these two lines, so only nullity ≥ 3 is infinite.
    let tol = rig.rank_tol();
    let margin = if rows.len() < 4 {
        0.0
    } else {
        let a = DMatrix::from_fn(rows.len().max(6), 6, |r, c| rows.get(r).map_or(0.0, |row| row[c]));
        let s = crate::linalg::singular_values(&a);
        s[3] / s[0]
    };
    let in_locus = margin <= tol;
    let confident = !(margin > tol / 10.0 && margin < tol * 10.0);
    Ok(ExceptionalReport { group: sorted, in_locus, margin, confident, degenerate_planes })
}

/// Polynomial cutting out the exceptional locus of the built-in collinear rig,
/// evaluated on unit-normalized image lines `x = ℓ1, y = ℓ2, z = ℓ3, w = ℓ4`
/// with 1-based subscripts `x1 = ℓ1[0]`.
pub fn collinear_quadruple_eliminant(l: &LineTuple<f64>) -> Result<f64> {
    if l.len() != 4 {
        return Err(Error::LengthMismatch { left: 4, right: l.len() });
    }
    let v = l.vectors();
    let (x, y, z, w) = (&v[0], &v[1], &v[2], &v[3]);
    let (x2, x3) = (x[1], x[2]);
    let (y1, y2) = (y[0], y[1]);
    let (z2, z3) = (z[1], z[2]);
    let (w2, w3) = (w[1], w[2]);
    Ok(2.0 * x3 * y2 * z2 * w2 - x3 * y1 * z3 * w2 - x2 * y2 * z3 * w2 - x3 * y1 * z2 * w3 - x2 * y2 * z2 * w3
        + 2.0 * x2 * y1 * z3 * w3)
}

/// Trilinear constraint `ℓ_pᵀ T(ℓ_j, ℓ_k) = 0` of three cameras.
#[derive(Debug, Clone, PartialEq)]
pub struct TrifocalTensor {
    pub pivot: usize,
    pub others: [usize; 2],
    /// `t[i][j][k]`: coefficient of `ℓ_p[i] ℓ_j[j] ℓ_k[k]`.
    pub t: [[[f64; 3]; 3]; 3],
    b: [Matrix3<f64>; 2],
}

impl TrifocalTensor {
    /// The vector `T(ℓ_j, ℓ_k)`.
    pub fn contract(&self, lj: &Vector3<f64>, lk: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|i, _| {
            let mut s = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    s += self.t[i][j][k] * lj[j] * lk[k];
                }
            }
            s
        })
    }

    /// Raw trilinear value.
    pub fn evaluate(&self, lp: &Vector3<f64>, lj: &Vector3<f64>, lk: &Vector3<f64>) -> f64 {
        lp.dot(&self.contract(lj, lk))
    }

    /// Value scaled to be invariant under rescaling of each argument.
    pub fn normalized_residual(&self, lp: &Vector3<f64>, lj: &Vector3<f64>, lk: &Vector3<f64>) -> f64 {
        let a = self.b[0] * lj;
        let b = self.b[1] * lk;
        let denom = lp.norm() * a.norm() * b.norm();
        if denom == 0.0 {
            return 0.0;
        }
        self.evaluate(lp, lj, lk).abs() / denom
    }

    /// Residual for a full tuple ordered like the rig.
    pub fn tuple_residual(&self, l: &LineTuple<f64>) -> f64 {
        self.normalized_residual(&l.vector(self.pivot), &l.vector(self.others[0]), &l.vector(self.others[1]))
    }
}

pub fn trifocal_tensor(rig: &CameraRig, pivot: usize) -> Result<TrifocalTensor> {
    if rig.len() != 3 {
        return Err(Error::InvalidArgument(format!("trifocal tensor needs 3 cameras, got {}", rig.len())));
    }
    if pivot >= 3 {
        return Err(Error::InvalidArgument(format!("pivot {pivot} out of range")));
    }
    let others = match pivot {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    };
    let cp = rig.camera(pivot).matrix();
    let proj = (cp * cp.transpose()).try_inverse().ok_or(Error::RankDeficientCamera { rank: 2 })? * cp;
    let b = others.map(|j| proj * rig.camera(j).matrix().transpose());
    let mut t = [[[0.0; 3]; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            let col = b[0].column(j).cross(&b[1].column(k));
            for i in 0..3 {
                t[i][j][k] = col[i];
            }
        }
    }
    Ok(TrifocalTensor { pivot, others, t, b })
}

/// The `3m × (m+4)` matrix `A_C(x)` with unit-norm camera blocks and image points.
pub fn point_multiview_matrix(rig: &CameraRig, x: &[ProjectivePoint<f64>]) -> Result<DMatrix<f64>> {
    let m = rig.len();
    if x.len() != m {
        return Err(Error::LengthMismatch { left: m, right: x.len() });
    }
    let mut a = DMatrix::zeros(3 * m, m + 4);
    for (i, (cam, xi)) in rig.cameras().iter().zip(x).enumerate() {
        if xi.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: xi.dim() });
        }
        let c = cam.matrix() / cam.matrix().norm();
        a.view_mut((3 * i, 0), (3, 4)).copy_from(&c);
        for r in 0..3 {
            a[(3 * i + r, 4 + i)] = xi.coords()[r];
        }
    }
    Ok(a)
}

pub fn point_multiview_rank(rig: &CameraRig, x: &[ProjectivePoint<f64>]) -> Result<RankReport> {
    numerical_rank(&point_multiview_matrix(rig, x)?, rig.rank_tol())
}

/// Image points are consistent iff `A_C(x)` is rank deficient.
pub fn point_multiview_membership(rig: &CameraRig, x: &[ProjectivePoint<f64>]) -> Result<bool> {
    Ok(point_multiview_rank(rig, x)?.numerical_rank < rig.len() + 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmannian::{chart, ChartPoint};
    use crate::rigs;

    #[test]
    fn chart_lines_under_sensitivity_rig() {
        let rig = rigs::sensitivity_rig(3);
        // span{e0, e1} contains the shared center e0 of the first two cameras.
        let origin = chart(&ChartPoint::new(0.0, 0.0, 0.0, 0.0));
        assert_eq!(forward_map(&rig, &origin), Err(Error::LineThroughCenter { camera: 0 }));
        let l = chart(&ChartPoint::new(0.3, -1.0, 2.0, 0.5));
        let t = forward_map(&rig, &l).unwrap();
        let m = build_m(&rig, &t).unwrap();
        assert_eq!(numerical_rank(&m, 1e-8).unwrap().numerical_rank, 2);
        let report = membership(&rig, &t).unwrap();
        assert!(report.in_variety && report.in_image);
        assert!(report.witness_line.unwrap().approx_eq(&l, 1e-10));
    }

    #[test]
    fn length_mismatch() {
        let rig = rigs::sensitivity_rig(3);
        let t = LineTuple::from_vectors(&[Vector3::new(1.0, 0.0, 0.0)]).unwrap();
        assert_eq!(build_m(&rig, &t), Err(Error::LengthMismatch { left: 3, right: 1 }));
    }

    #[test]
    fn trifocal_needs_three_cameras() {
        assert!(matches!(trifocal_tensor(&rigs::collinear_rig(), 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn exceptional_test_requires_group() {
        let rig = rigs::sensitivity_rig(3);
        let t = LineTuple::from_vectors(&[Vector3::new(1.0, 0.0, 0.0); 3]).unwrap();
        assert_eq!(exceptional_locus_test(&rig, &t, &[0, 1, 2]), Err(Error::NotCollinearGroup(vec![0, 1, 2])));
    }
}
