//! Lines of `P^3` in Plücker coordinates.
//!
//! Coordinates are the entries of the skew matrix `x∧y = x yᵀ − y xᵀ` read off
//! below the diagonal, in the order `(1,0) (2,0) (3,0) (2,1) (3,1) (3,2)`. This is
//! the negative of the lexicographic minors `x_i y_j − x_j y_i` (i < j), so both
//! conventions describe the same projective point and the quadric
//! `p0 p5 − p1 p4 + p2 p3` is unchanged.

use nalgebra::{DVector, Matrix2, Matrix4, Matrix4x2, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::projective::{angular_distance_vectors, to_complex, ProjectivePoint, Scalar, ZERO_NORM};

/// Index pairs `(i, j)` of the skew matrix entry holding each coordinate.
pub const PLUECKER_PAIRS: [(usize, usize); 6] = [(1, 0), (2, 0), (3, 0), (2, 1), (3, 1), (3, 2)];

/// Threshold on the unit-normalized pairing below which two lines meet.
pub const INCIDENCE_TOL: f64 = 1e-8;

/// Minimal angular separation of two spanning points.
pub const SPAN_TOL: f64 = 1e-10;

/// Maximal quadric residual accepted by [`PlueckerLine::from_coords`].
pub const QUADRIC_TOL: f64 = 1e-8;

/// Smallest `|p0|` (unit normalized) still accepted by [`chart_coordinates`].
pub const CHART_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DualMode {
    /// Annihilator under the bilinear form `xᵀy`.
    Euclidean,
    /// Annihilator under the Hermitian form `x*y`.
    Hermitian,
}

/// A line in `P^3`: unit-normalized Plücker vector plus an orthonormal spanning pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PlueckerLine<T: Scalar = f64> {
    p: [T; 6],
    basis: Matrix4x2<T>,
}

pub fn wedge<T: Scalar>(x: &Vector4<T>, y: &Vector4<T>) -> [T; 6] {
    PLUECKER_PAIRS.map(|(i, j)| x[i] * y[j] - y[i] * x[j])
}

pub fn plucker_quadric<T: Scalar>(p: &[T; 6]) -> T {
    p[0] * p[5] - p[1] * p[4] + p[2] * p[3]
}

/// Polarization of the Plücker quadric; vanishes iff the two lines meet.
pub fn plucker_pairing<T: Scalar>(p: &[T; 6], q: &[T; 6]) -> T {
    p[0] * q[5] + p[5] * q[0] - p[1] * q[4] - p[4] * q[1] + p[2] * q[3] + p[3] * q[2]
}

/// Plücker vector of the Euclidean dual line; `hodge_star(p)·q = pairing(p, q)`.
pub fn hodge_star<T: Scalar>(p: &[T; 6]) -> [T; 6] {
    [p[5], -p[4], p[3], p[2], -p[1], p[0]]
}

fn norm6<T: Scalar>(p: &[T; 6]) -> f64 {
    p.iter().map(|c| c.modulus_squared()).sum::<f64>().sqrt()
}

fn unit6<T: Scalar>(p: &[T; 6]) -> Option<[T; 6]> {
    let n = norm6(p);
    if !(n > ZERO_NORM) || !n.is_finite() {
        return None;
    }
    let inv = T::from_real(1.0 / n);
    Some(p.map(|c| c * inv))
}

fn normalize4<T: Scalar>(v: &Vector4<T>) -> Option<Vector4<T>> {
    let n = v.norm();
    (n > ZERO_NORM && n.is_finite()).then(|| v.unscale(n))
}

/// Orthonormal basis of the column space of a rank-2 skew matrix.
fn basis_from_skew<T: Scalar>(s: &Matrix4<T>) -> Option<Matrix4x2<T>> {
    let cols: Vec<Vector4<T>> = (0..4).map(|j| s.column(j).into_owned()).collect();
    let first = cols.iter().max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    let q1 = normalize4(first)?;
    let rest: Vec<Vector4<T>> = cols.iter().map(|c| c - q1 * q1.dotc(c)).collect();
    let second = rest.iter().max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    if second.norm() < 1e-10 * first.norm() {
        return None;
    }
    let q2 = normalize4(second)?;
    Some(Matrix4x2::from_columns(&[q1, q2]))
}

fn skew_from_coords<T: Scalar>(p: &[T; 6]) -> Matrix4<T> {
    let mut s = Matrix4::zeros();
    for (k, &(i, j)) in PLUECKER_PAIRS.iter().enumerate() {
        s[(i, j)] = p[k];
        s[(j, i)] = -p[k];
    }
    s
}

impl<T: Scalar> PlueckerLine<T> {
    /// Line spanned by two distinct points.
    pub fn from_vectors(x: &Vector4<T>, y: &Vector4<T>) -> Result<Self> {
        let d = angular_distance_vectors(&DVector::from_column_slice(x.as_slice()), &DVector::from_column_slice(y.as_slice()))?;
        if d < SPAN_TOL {
            return Err(Error::DegenerateSpan);
        }
        let q1 = normalize4(x).ok_or(Error::ZeroVector)?;
        let r = y - q1 * q1.dotc(y);
        let q2 = normalize4(&r).ok_or(Error::DegenerateSpan)?;
        // Re-orthogonalize once for accuracy.
        let q2 = normalize4(&(q2 - q1 * q1.dotc(&q2))).ok_or(Error::DegenerateSpan)?;
        let p = unit6(&wedge(&q1, &q2)).ok_or(Error::DegenerateSpan)?;
        Ok(Self { p, basis: Matrix4x2::from_columns(&[q1, q2]) })
    }

    pub fn from_points(x: &ProjectivePoint<T>, y: &ProjectivePoint<T>) -> Result<Self> {
        for pt in [x, y] {
            if pt.dim() != 3 {
                return Err(Error::DimensionMismatch { expected: 3, got: pt.dim() });
            }
        }
        Self::from_vectors(&Vector4::from_iterator(x.coords().iter().copied()), &Vector4::from_iterator(y.coords().iter().copied()))
    }

    /// Line from six Plücker coordinates, which must satisfy the quadric.
    pub fn from_coords(p: [T; 6]) -> Result<Self> {
        let u = unit6(&p).ok_or_else(|| Error::InvalidLine("zero Plücker vector".into()))?;
        let res = plucker_quadric(&u).modulus();
        if res > QUADRIC_TOL {
            return Err(Error::InvalidLine(format!("Plücker quadric residual {res:.3e}")));
        }
        let basis = basis_from_skew(&skew_from_coords(&u))
            .ok_or_else(|| Error::InvalidLine("skew matrix does not have rank 2".into()))?;
        // Snap onto the quadric, keeping the caller's phase.
        let snapped = unit6(&wedge(&basis.column(0).into_owned(), &basis.column(1).into_owned()))
            .ok_or_else(|| Error::InvalidLine("degenerate basis".into()))?;
        let overlap: T = snapped.iter().zip(&u).map(|(a, b)| a.conjugate() * *b).fold(T::zero(), |s, x| s + x);
        let phase = if overlap.modulus() > 0.0 { overlap.unscale(overlap.modulus()) } else { T::one() };
        Ok(Self { p: snapped.map(|c| c * phase), basis })
    }

    /// Intersection of two planes, given by their equations.
    pub fn from_planes(g: &Vector4<T>, h: &Vector4<T>) -> Result<Self> {
        Ok(Self::from_vectors(g, h)?.dual(DualMode::Euclidean))
    }

    pub fn coords(&self) -> &[T; 6] {
        &self.p
    }

    pub fn basis(&self) -> &Matrix4x2<T> {
        &self.basis
    }

    pub fn basis_vector(&self, k: usize) -> Vector4<T> {
        self.basis.column(k).into_owned()
    }

    /// The point `s b0 + t b1` of the line.
    pub fn point(&self, s: T, t: T) -> Vector4<T> {
        self.basis.column(0) * s + self.basis.column(1) * t
    }

    pub fn skew_matrix(&self) -> Matrix4<T> {
        skew_from_coords(&self.p)
    }

    pub fn quadric_residual(&self) -> f64 {
        plucker_quadric(&self.p).modulus()
    }

    pub fn conj(&self) -> Self {
        Self { p: self.p.map(|c| c.conjugate()), basis: self.basis.map(|c| c.conjugate()) }
    }

    pub fn dual(&self, mode: DualMode) -> Self {
        dual_line(self, mode)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        grassmann_distance(self, other)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        grassmann_distance(self, other) < tol
    }

    pub fn contains(&self, x: &Vector4<T>) -> bool {
        point_residual(self, x).is_some_and(|r| r < INCIDENCE_TOL)
    }

    /// Image under an invertible linear map of `C^4`.
    pub fn transform(&self, a: &Matrix4<T>) -> Result<Self> {
        Self::from_vectors(&(a * self.basis.column(0)), &(a * self.basis.column(1)))
    }

    pub fn to_complex(&self) -> PlueckerLine<Complex64> {
        PlueckerLine { p: self.p.map(to_complex), basis: self.basis.map(to_complex) }
    }
}

impl PlueckerLine<Complex64> {
    /// Real line if the Plücker vector is real up to a global phase.
    pub fn real_view(&self, tol: f64) -> Option<PlueckerLine<f64>> {
        let pivot = self.p.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
        let phase = pivot.conj() / pivot.norm();
        let rotated = self.p.map(|c| c * phase);
        if rotated.iter().any(|c| c.im.abs() > tol) {
            return None;
        }
        PlueckerLine::from_coords(rotated.map(|c| c.re)).ok()
    }

    /// Largest imaginary part after removing the global phase.
    pub fn imaginary_part(&self) -> f64 {
        let Some(pivot) = self.p.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) else {
            return 0.0;
        };
        let phase = pivot.conj() / pivot.norm();
        self.p.iter().map(|c| (c * phase).im.abs()).fold(0.0, f64::max)
    }
}

/// Coordinates `(v11, v12, v21, v22)` of the affine chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint<T: Scalar = f64> {
    pub v: Matrix2<T>,
}

impl<T: Scalar> ChartPoint<T> {
    pub fn new(v11: T, v12: T, v21: T, v22: T) -> Self {
        Self { v: Matrix2::new(v11, v12, v21, v22) }
    }

    pub fn from_array(a: [T; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.v[(0, 0)], self.v[(0, 1)], self.v[(1, 0)], self.v[(1, 1)]]
    }

    /// The two rows `(1, 0, v11, v12)` and `(0, 1, v21, v22)`.
    pub fn rows(&self) -> (Vector4<T>, Vector4<T>) {
        let (o, z) = (T::one(), T::zero());
        (
            Vector4::new(o, z, self.v[(0, 0)], self.v[(0, 1)]),
            Vector4::new(z, o, self.v[(1, 0)], self.v[(1, 1)]),
        )
    }
}

/// Row span of `[[1, 0, v11, v12], [0, 1, v21, v22]]`; its coordinate `p0` is `−1`
/// before normalization and never vanishes.
pub fn chart<T: Scalar>(v: &ChartPoint<T>) -> PlueckerLine<T> {
    let (a, b) = v.rows();
    let q1 = a.unscale(a.norm());
    let r = b - q1 * q1.dotc(&b);
    let q2 = r.unscale(r.norm());
    let [v11, v12, v21, v22] = v.to_array();
    let raw = [-T::one(), -v21, -v22, v11, v12, v12 * v21 - v11 * v22];
    let p = unit6(&raw).expect("p0 = -1 keeps the vector nonzero");
    PlueckerLine { p, basis: Matrix4x2::from_columns(&[q1, q2]) }
}

/// Inverse of [`chart`].
pub fn chart_coordinates<T: Scalar>(line: &PlueckerLine<T>) -> Result<ChartPoint<T>> {
    let p = line.coords();
    if p[0].modulus() < CHART_TOL {
        return Err(Error::OutsideChart);
    }
    let s = -T::one() / p[0];
    Ok(ChartPoint::new(s * p[3], s * p[4], -s * p[1], -s * p[2]))
}

pub fn dual_line<T: Scalar>(line: &PlueckerLine<T>, mode: DualMode) -> PlueckerLine<T> {
    let p = match mode {
        DualMode::Euclidean => *line.coords(),
        DualMode::Hermitian => line.coords().map(|c| c.conjugate()),
    };
    PlueckerLine::from_coords(hodge_star(&p)).expect("dual of a valid line is valid")
}

/// Operator norm of `Π_L − Π_K`, the sine of the largest principal angle.
pub fn grassmann_distance<T: Scalar>(l: &PlueckerLine<T>, k: &PlueckerLine<T>) -> f64 {
    let bl = l.basis();
    let bk = k.basis();
    let r = bl - bk * (bk.adjoint() * bl);
    let g = r.adjoint() * r;
    let a = g[(0, 0)].real();
    let d = g[(1, 1)].real();
    let b = g[(0, 1)].modulus();
    let half = 0.5 * (a - d);
    let lam = 0.5 * (a + d) + (half * half + b * b).sqrt();
    lam.max(0.0).sqrt().min(1.0)
}

pub fn meet_pairing<T: Scalar>(l: &PlueckerLine<T>, k: &PlueckerLine<T>) -> T {
    plucker_pairing(l.coords(), k.coords())
}

pub fn lines_meet<T: Scalar>(l: &PlueckerLine<T>, k: &PlueckerLine<T>) -> bool {
    meet_pairing(l, k).modulus() < INCIDENCE_TOL
}

/// Relative distance of `x` from the line's subspace.
pub fn point_residual<T: Scalar>(line: &PlueckerLine<T>, x: &Vector4<T>) -> Option<f64> {
    let n = x.norm();
    if !(n > ZERO_NORM) {
        return None;
    }
    let b = line.basis();
    let r = x - b * (b.adjoint() * x);
    Some(r.norm() / n)
}

pub fn point_on_line<T: Scalar>(line: &PlueckerLine<T>, x: &ProjectivePoint<T>) -> bool {
    x.dim() == 3 && line.contains(&Vector4::from_iterator(x.coords().iter().copied()))
}
