//! Line and point triangulation by local least squares, and the noise
//! sensitivity experiment built on them.
//!
//! Lines are optimized in the affine chart `V ↦ rowspan [[1,0,v11,v12],[0,1,v21,v22]]`
//! of the Grassmannian. When the current line sits near the boundary of that
//! chart the problem is re-expressed in rotated coordinates of `P^3`.

use nalgebra::{DMatrix, DVector, Matrix3x4, Matrix4, Vector2, Vector3, Vector4};

use crate::cameras::CameraRig;
use crate::error::{Error, Result};
use crate::grassmannian::{chart, chart_coordinates, grassmann_distance, ChartPoint, PlueckerLine};
use crate::multiview::{build_m, LineTuple};
use crate::projective::{left_singular_basis, product_distance, right_singular_basis, ZERO_NORM};
use crate::seeds::{gaussian, on_sphere, rng_for, sub_seed};

pub const GRAD_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 200;
pub const MAX_ROTATIONS: usize = 3;
pub const MAX_RESTARTS: usize = 5;

/// Below this `|p0|` of the unit Plücker vector a new chart is chosen.
const CHART_MIN_P0: f64 = 0.1;
/// Chart coordinates beyond this norm mean the iterate left the chart.
const CHART_ESCAPE: f64 = 1e4;
const LAMBDA_MAX: f64 = 1e20;
/// Relative slack, in units of machine epsilon, for objective ties.
pub const OBJECTIVE_ULPS: f64 = 8.0;

const STREAM_ROTATION: u64 = 0x524f;
const STREAM_SENSITIVITY: u64 = 0x5345;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TriangulationConfig {
    pub grad_tol: f64,
    pub max_iterations: usize,
    pub max_rotations: usize,
    pub max_restarts: usize,
    /// Seeds the random chart rotations.
    pub seed: u64,
}

impl Default for TriangulationConfig {
    fn default() -> Self {
        Self { grad_tol: GRAD_TOL, max_iterations: MAX_ITERATIONS, max_rotations: MAX_ROTATIONS, max_restarts: MAX_RESTARTS, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangulationResult {
    pub line: PlueckerLine<f64>,
    /// Sum of squared angular distances, the squared product distance.
    pub objective: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Objective at the start and after every accepted step, one list per chart.
    pub history: Vec<Vec<f64>>,
}

impl TriangulationResult {
    /// Turns a non-converged result into [`Error::NoConvergence`].
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence { iterations: self.iterations })
        }
    }
}

/// `d(Υ(L), u)²` as a function of chart coordinates, with residuals
/// `r_i = u_i − (u_i·k̂_i) k̂_i` for `k_i = (C_i a) × (C_i b)`.
#[derive(Debug, Clone)]
pub struct LineObjective {
    cams: Vec<Matrix3x4<f64>>,
    u: Vec<Vector3<f64>>,
}

fn unit_images(u: &LineTuple<f64>) -> Result<Vec<Vector3<f64>>> {
    u.vectors()
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let n = v.norm();
            if n.is_finite() && n > ZERO_NORM {
                Ok(v / n)
            } else {
                Err(Error::DegenerateInput(format!("image line {i} is zero or not finite")))
            }
        })
        .collect()
}

impl LineObjective {
    pub fn new(rig: &CameraRig, u: &LineTuple<f64>) -> Result<Self> {
        if u.len() != rig.len() {
            return Err(Error::LengthMismatch { left: rig.len(), right: u.len() });
        }
        Ok(Self { cams: rig.cameras().iter().map(|c| *c.matrix()).collect(), u: unit_images(u)? })
    }

    /// Same problem in coordinates `x' = R x`.
    fn rotated(&self, r: &Matrix4<f64>) -> Self {
        Self { cams: self.cams.iter().map(|c| c * r.transpose()).collect(), u: self.u.clone() }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    fn kappa(c: &Matrix3x4<f64>, v: &[f64; 4]) -> (Vector3<f64>, Vector3<f64>) {
        let ca = c.column(0) + c.column(2) * v[0] + c.column(3) * v[1];
        let cb = c.column(1) + c.column(2) * v[2] + c.column(3) * v[3];
        (ca, cb)
    }

    /// Residual vector of length `3m`, `None` when some image degenerates.
    pub fn residuals(&self, v: &[f64; 4]) -> Option<DVector<f64>> {
        let mut r = DVector::zeros(3 * self.len());
        for (i, (c, u)) in self.cams.iter().zip(&self.u).enumerate() {
            let (ca, cb) = Self::kappa(c, v);
            let k = ca.cross(&cb);
            let n = k.norm();
            if !(n > ZERO_NORM) {
                return None;
            }
            let kh = k / n;
            r.fixed_rows_mut::<3>(3 * i).copy_from(&(u - kh * kh.dot(u)));
        }
        Some(r)
    }

    /// Objective at a line given by any spanning pair, independent of charts.
    pub fn line_objective(&self, line: &PlueckerLine<f64>) -> f64 {
        let (a, b) = (line.basis_vector(0), line.basis_vector(1));
        let mut f = 0.0;
        for (c, u) in self.cams.iter().zip(&self.u) {
            let k = (c * a).cross(&(c * b));
            let n = k.norm();
            if !(n > crate::cameras::THROUGH_CENTER_TOL * c.norm_squared()) {
                return f64::INFINITY;
            }
            let kh = k / n;
            f += (u - kh * kh.dot(u)).norm_squared();
        }
        f
    }

    pub fn objective(&self, v: &[f64; 4]) -> f64 {
        self.residuals(v).map_or(f64::INFINITY, |r| r.norm_squared())
    }

    /// Residuals and their `3m × 4` Jacobian.
    pub fn residuals_and_jacobian(&self, v: &[f64; 4]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let m = self.len();
        let mut r = DVector::zeros(3 * m);
        let mut jac = DMatrix::zeros(3 * m, 4);
        for (i, (c, u)) in self.cams.iter().zip(&self.u).enumerate() {
            let (ca, cb) = Self::kappa(c, v);
            let (c2, c3) = (c.column(2).into_owned(), c.column(3).into_owned());
            let k = ca.cross(&cb);
            let n = k.norm();
            if !(n > ZERO_NORM) {
                return None;
            }
            let kh = k / n;
            let ku = kh.dot(u);
            r.fixed_rows_mut::<3>(3 * i).copy_from(&(u - kh * ku));
            let dk = [c2.cross(&cb), c3.cross(&cb), ca.cross(&c2), ca.cross(&c3)];
            for (j, d) in dk.iter().enumerate() {
                // d k̂ = Π d k / ‖k‖ with Π the projector orthogonal to k̂.
                let dkh = (d - kh * kh.dot(d)) / n;
                let dr = -(dkh * ku + kh * dkh.dot(u));
                jac.fixed_view_mut::<3, 1>(3 * i, j).copy_from(&dr);
            }
        }
        Some((r, jac))
    }

    /// Chart gradient `2 Jᵀ r` of the objective.
    pub fn gradient(&self, v: &[f64; 4]) -> Option<[f64; 4]> {
        let (r, j) = self.residuals_and_jacobian(v)?;
        let g = j.transpose() * r * 2.0;
        Some([g[0], g[1], g[2], g[3]])
    }
}

struct LmOutcome {
    v: [f64; 4],
    objective: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn norm4(v: &[f64; 4]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Gauss-Newton; accepts steps that decrease the objective, or leave it
/// unchanged to rounding while decreasing the gradient.
fn levenberg_marquardt(obj: &LineObjective, v0: [f64; 4], grad_tol: f64, max_iterations: usize) -> LmOutcome {
    let mut v = v0;
    let Some((mut r, mut j)) = obj.residuals_and_jacobian(&v) else {
        return LmOutcome { v, objective: f64::INFINITY, grad_norm: f64::INFINITY, iterations: 0, converged: false, history: vec![] };
    };
    let mut f = r.norm_squared();
    let mut jtj = j.transpose() * &j;
    let mut jtr = j.transpose() * &r;
    let mut lambda = 1e-3 * (0..4).map(|k| jtj[(k, k)]).fold(0.0, f64::max).max(1e-12);
    let mut iterations = 0;
    let mut history = vec![f];
    loop {
        let grad_norm = 2.0 * jtr.norm();
        if grad_norm < grad_tol {
            return LmOutcome { v, objective: f, grad_norm, iterations, converged: true, history };
        }
        if iterations >= max_iterations || lambda > LAMBDA_MAX || norm4(&v) > CHART_ESCAPE {
            return LmOutcome { v, objective: f, grad_norm, iterations, converged: false, history };
        }
        iterations += 1;
        let mut a = jtj.clone();
        for k in 0..4 {
            a[(k, k)] += lambda;
        }
        let Some(step) = a.cholesky().map(|ch| ch.solve(&(-&jtr))) else {
            lambda *= 10.0;
            continue;
        };
        let trial = [v[0] + step[0], v[1] + step[1], v[2] + step[2], v[3] + step[3]];
        // Near a large-residual minimum the achievable decrease drops below the
        // rounding error of `f`; there a tie that shrinks the gradient is taken.
        let accept = |rt: &DVector<f64>, jt: &DMatrix<f64>| {
            let ft = rt.norm_squared();
            ft < f || (ft <= f * (1.0 + OBJECTIVE_ULPS * f64::EPSILON) && (jt.transpose() * rt).norm() < jtr.norm())
        };
        match obj.residuals_and_jacobian(&trial) {
            Some((rt, jt)) if accept(&rt, &jt) => {
                v = trial;
                r = rt;
                j = jt;
                f = r.norm_squared();
                jtj = j.transpose() * &j;
                jtr = j.transpose() * &r;
                lambda = (lambda / 3.0).max(1e-15);
                history.push(f);
            }
            _ => lambda *= 4.0,
        }
    }
}

fn random_rotation(rng: &mut impl rand::Rng) -> Matrix4<f64> {
    Matrix4::from_fn(|_, _| gaussian(rng)).qr().q()
}

/// Rotation keeping `line` well inside the chart: identity when possible,
/// otherwise the best of a few random rotations.
fn pick_chart(line: &PlueckerLine<f64>, force: bool, tries: usize, rng: &mut impl rand::Rng) -> Matrix4<f64> {
    let p0 = |r: &Matrix4<f64>| line.transform(r).map_or(0.0, |l| l.coords()[0].abs());
    let mut best = (Matrix4::identity(), if force { -1.0 } else { p0(&Matrix4::identity()) });
    for _ in 0..tries.max(usize::from(force)) {
        if best.1 >= CHART_MIN_P0 {
            break;
        }
        let r = random_rotation(rng);
        let q = p0(&r);
        if q > best.1 {
            best = (r, q);
        }
    }
    best.0
}

/// Witness line spanned by the two smallest left singular vectors of `M(u)`.
pub fn initial_line(rig: &CameraRig, u: &LineTuple<f64>) -> Result<PlueckerLine<f64>> {
    let m = build_m(rig, u)?;
    let (basis, _) = left_singular_basis(&m);
    let col = |k: usize| Vector4::from_iterator(basis.column(k).iter().copied());
    PlueckerLine::from_vectors(&col(2), &col(3))
}

/// The witness line when it is admissible, otherwise the best other span of
/// two left singular vectors (the witness passes through a center when two
/// cameras share one).
fn starting_line(rig: &CameraRig, u: &LineTuple<f64>, obj: &LineObjective) -> Result<PlueckerLine<f64>> {
    let m = build_m(rig, u)?;
    let (basis, _) = left_singular_basis(&m);
    let col = |k: usize| Vector4::from_iterator(basis.column(k).iter().copied());
    let score = |l: &PlueckerLine<f64>| Some(obj.line_objective(l));
    let witness = PlueckerLine::from_vectors(&col(2), &col(3))?;
    if score(&witness).is_some_and(f64::is_finite) {
        return Ok(witness);
    }
    [(1, 3), (1, 2), (0, 3), (0, 2), (0, 1)]
        .iter()
        .filter_map(|&(a, b)| {
            let l = PlueckerLine::from_vectors(&col(a), &col(b)).ok()?;
            let f = score(&l)?;
            f.is_finite().then_some((f, l))
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|x| x.1)
        .ok_or_else(|| Error::DegenerateInput("every candidate line passes through a camera center".into()))
}

/// Locally minimizes `Σ_i d(project_line(C_i, L), u_i)²` over real lines.
///
/// A run that exhausts its budget still returns the best iterate, with
/// `converged = false`.
pub fn triangulate_line(rig: &CameraRig, u: &LineTuple<f64>, config: &TriangulationConfig) -> Result<TriangulationResult> {
    if rig.len() < 2 {
        return Err(Error::TooFewCameras { min: 2, got: rig.len() });
    }
    let obj = LineObjective::new(rig, u)?;
    let mut rng = rng_for(config.seed, STREAM_ROTATION, 0);
    let mut line = starting_line(rig, u, &obj)?;
    let mut best: Option<TriangulationResult> = None;
    let mut iterations = 0;
    let mut history = Vec::new();
    for attempt in 0..=config.max_restarts {
        let rot = pick_chart(&line, attempt > 0, config.max_rotations, &mut rng);
        let local = obj.rotated(&rot);
        let v0 = chart_coordinates(&line.transform(&rot)?).map_or([0.0; 4], |v| v.to_array());
        let out = levenberg_marquardt(&local, v0, config.grad_tol, config.max_iterations);
        iterations += out.iterations;
        history.push(out.history);
        let Ok(found) = chart(&ChartPoint::from_array(out.v)).transform(&rot.transpose()) else {
            continue;
        };
        let result = TriangulationResult {
            line: found.clone(),
            objective: out.objective,
            gradient_norm: out.grad_norm,
            iterations,
            converged: out.converged,
            restarts_used: attempt,
            history: history.clone(),
        };
        if out.converged {
            return Ok(result);
        }
        if best.as_ref().is_none_or(|b| result.objective < b.objective) {
            best = Some(result);
        }
        line = found;
    }
    let mut best = best.ok_or(Error::NoConvergence { iterations })?;
    best.iterations = iterations;
    best.restarts_used = config.max_restarts;
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointTriangulation {
    /// Affine point `P` of `[1 : P]`.
    pub point: Vector3<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Affine image `(y1/y0, y2/y0)` of `[1 : P]`, `None` when `y0` vanishes.
pub fn project_affine(c: &Matrix3x4<f64>, p: &Vector3<f64>) -> Option<Vector2<f64>> {
    let y = c * Vector4::new(1.0, p[0], p[1], p[2]);
    (y[0].abs() > ZERO_NORM * y.norm().max(1.0)).then(|| Vector2::new(y[1] / y[0], y[2] / y[0]))
}

fn point_residuals(cams: &[Matrix3x4<f64>], q: &[Vector2<f64>], p: &Vector3<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let m = cams.len();
    let mut r = DVector::zeros(2 * m);
    let mut jac = DMatrix::zeros(2 * m, 3);
    for (i, c) in cams.iter().enumerate() {
        let y = c * Vector4::new(1.0, p[0], p[1], p[2]);
        if y[0].abs() <= ZERO_NORM * y.norm().max(1.0) {
            return None;
        }
        for k in 0..2 {
            r[2 * i + k] = y[k + 1] / y[0] - q[i][k];
            for j in 0..3 {
                jac[(2 * i + k, j)] = (c[(k + 1, j + 1)] * y[0] - y[k + 1] * c[(0, j + 1)]) / (y[0] * y[0]);
            }
        }
    }
    Some((r, jac))
}

/// Minimizes `Σ ‖p_i(P) − q_i‖²` over affine points, initialized by the
/// linear (DLT) solution.
pub fn triangulate_point(rig: &CameraRig, q: &[Vector2<f64>], config: &TriangulationConfig) -> Result<PointTriangulation> {
    let m = rig.len();
    if m < 2 {
        return Err(Error::TooFewCameras { min: 2, got: m });
    }
    if q.len() != m {
        return Err(Error::LengthMismatch { left: m, right: q.len() });
    }
    if let Some(i) = q.iter().position(|x| !x.iter().all(|v| v.is_finite())) {
        return Err(Error::DegenerateInput(format!("image point {i} is not finite")));
    }
    let cams: Vec<Matrix3x4<f64>> = rig.cameras().iter().map(|c| *c.matrix()).collect();
    let mut a = DMatrix::zeros(2 * m, 4);
    for (i, c) in cams.iter().enumerate() {
        let s = 1.0 / c.norm();
        for k in 0..2 {
            let row = (c.row(0) * q[i][k] - c.row(k + 1)) * s;
            a.row_mut(2 * i + k).copy_from(&row);
        }
    }
    // With shared centers the null space is larger than one; try the two
    // smallest singular vectors and their sum and difference.
    let (v, _) = right_singular_basis(&a);
    let (v2, v3) = (v.column(2).into_owned(), v.column(3).into_owned());
    let best = [v3.clone(), v2.clone(), &v3 + &v2, &v3 - &v2]
        .into_iter()
        .filter(|x| x[0].abs() >= 1e-12 * x.norm())
        .filter_map(|x| {
            let p = Vector3::new(x[1] / x[0], x[2] / x[0], x[3] / x[0]);
            point_residuals(&cams, q, &p).map(|(r, j)| (r.norm_squared(), p, r, j))
        })
        .min_by(|x, y| x.0.total_cmp(&y.0));
    let Some((_, mut p, mut r, mut j)) = best else {
        return Err(Error::DegenerateInput("linear solution lies at infinity or on a principal plane".into()));
    };
    let mut f = r.norm_squared();
    let mut lambda = 1e-3 * (j.transpose() * &j).diagonal().max().max(1e-12);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        let jtr = j.transpose() * &r;
        if 2.0 * jtr.norm() < config.grad_tol {
            converged = true;
            break;
        }
        if lambda > LAMBDA_MAX {
            // No decrease is possible at working precision.
            converged = true;
            break;
        }
        iterations += 1;
        let mut sys = j.transpose() * &j;
        for k in 0..3 {
            sys[(k, k)] += lambda;
        }
        let Some(step) = sys.cholesky().map(|ch| ch.solve(&(-&jtr))) else {
            lambda *= 10.0;
            continue;
        };
        let trial = p + Vector3::new(step[0], step[1], step[2]);
        match point_residuals(&cams, q, &trial) {
            Some((rt, jt)) if rt.norm_squared() < f => {
                let small = step.norm() <= 1e-15 * (1.0 + p.norm());
                p = trial;
                r = rt;
                j = jt;
                f = r.norm_squared();
                lambda = (lambda / 3.0).max(1e-15);
                if small {
                    converged = true;
                    break;
                }
            }
            _ => lambda *= 4.0,
        }
    }
    Ok(PointTriangulation { point: p, objective: f, iterations, converged })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensitivityKind {
    Lines,
    Points,
}

impl std::fmt::Display for SensitivityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Lines => "lines",
            Self::Points => "points",
        })
    }
}

/// One trial of the sensitivity experiment. `e_value` is `NaN` when the trial failed.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SensitivityRecord {
    pub trial: usize,
    pub kind: SensitivityKind,
    /// Base-10 logarithm of the error amplification.
    pub e_value: f64,
    pub noise_radius: f64,
    pub objective: f64,
    pub converged: bool,
    pub restarts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// The CSV projection of a record.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SensitivityRow {
    pub trial: usize,
    pub kind: SensitivityKind,
    pub e_value: f64,
    pub objective: f64,
    pub converged: bool,
    pub restarts: usize,
}

impl SensitivityRecord {
    pub fn is_ok(&self) -> bool {
        self.converged && self.e_value.is_finite()
    }

    pub fn row(&self) -> SensitivityRow {
        SensitivityRow {
            trial: self.trial,
            kind: self.kind,
            e_value: self.e_value,
            objective: self.objective,
            converged: self.converged,
            restarts: self.restarts,
        }
    }

    fn failed(trial: usize, kind: SensitivityKind, eps: f64, why: String) -> Self {
        Self { trial, kind, e_value: f64::NAN, noise_radius: eps, objective: f64::NAN, converged: false, restarts: 0, failure: Some(why) }
    }
}

fn line_trial(rig: &CameraRig, eps: f64, seed: u64, trial: usize) -> Result<SensitivityRecord> {
    let mut rng = rng_for(seed, STREAM_SENSITIVITY, trial as u64);
    let v = ChartPoint::from_array(std::array::from_fn(|_| gaussian(&mut rng)));
    let truth = chart(&v);
    let images = crate::multiview::forward_map(rig, &truth)?;
    let noisy: Vec<Vector3<f64>> = images
        .vectors()
        .iter()
        .map(|l| {
            let x = on_sphere(&mut rng, 3, eps * l.norm());
            let w = l + Vector3::new(x[0], x[1], x[2]);
            w / w.norm()
        })
        .collect();
    let u = LineTuple::from_vectors(&noisy)?;
    let config = TriangulationConfig { seed: sub_seed(seed, STREAM_ROTATION, trial as u64), ..Default::default() };
    let res = triangulate_line(rig, &u, &config)?;
    let data_err = product_distance(images.lines(), u.lines())?;
    let e_value = (grassmann_distance(&truth, &res.line) / data_err).log10();
    Ok(SensitivityRecord {
        trial,
        kind: SensitivityKind::Lines,
        e_value,
        noise_radius: eps,
        objective: res.objective,
        converged: res.converged,
        restarts: res.restarts_used,
        failure: None,
    })
}

fn point_trial(rig: &CameraRig, eps: f64, seed: u64, trial: usize) -> Result<SensitivityRecord> {
    let mut rng = rng_for(seed, STREAM_SENSITIVITY ^ 1, trial as u64);
    let p = Vector3::new(gaussian(&mut rng), gaussian(&mut rng), gaussian(&mut rng));
    let q = rig
        .cameras()
        .iter()
        .map(|c| {
            let img = project_affine(c.matrix(), &p).ok_or_else(|| Error::DegenerateSample("point on a principal plane".into()))?;
            let x = on_sphere(&mut rng, 2, eps * img.norm());
            Ok(img + Vector2::new(x[0], x[1]))
        })
        .collect::<Result<Vec<_>>>()?;
    let res = triangulate_point(rig, &q, &TriangulationConfig::default())?;
    let e_value = ((p - res.point).norm() / (eps * p.norm())).log10();
    Ok(SensitivityRecord {
        trial,
        kind: SensitivityKind::Points,
        e_value,
        noise_radius: eps,
        objective: res.objective,
        converged: res.converged,
        restarts: 0,
        failure: None,
    })
}

/// Runs `trials` independent sample → project → perturb → triangulate
/// pipelines and records the error amplification of each, in trial order.
pub fn sensitivity_experiment(rig: &CameraRig, kind: SensitivityKind, trials: usize, eps: f64, seed: u64) -> Result<Vec<SensitivityRecord>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise radius must be positive, got {eps}")));
    }
    Ok(crate::parallel::map_indexed(trials, |t| {
        let out = match kind {
            SensitivityKind::Lines => line_trial(rig, eps, seed, t),
            SensitivityKind::Points => point_trial(rig, eps, seed, t),
        };
        out.unwrap_or_else(|e| SensitivityRecord::failed(t, kind, eps, e.to_string()))
    }))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SensitivitySummary {
    pub kind: SensitivityKind,
    pub trials: usize,
    /// Trials that converged with a finite e-value.
    pub ok: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl SensitivitySummary {
    pub fn from_records(kind: SensitivityKind, records: &[SensitivityRecord]) -> Self {
        let mut e: Vec<f64> = records.iter().filter(|r| r.is_ok()).map(|r| r.e_value).collect();
        e.sort_by(f64::total_cmp);
        let n = e.len();
        let mean = e.iter().sum::<f64>() / n.max(1) as f64;
        let var = e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
        let pick = |k: usize| e.get(k).copied().unwrap_or(f64::NAN);
        Self {
            kind,
            trials: records.len(),
            ok: n,
            mean: if n > 0 { mean } else { f64::NAN },
            std_dev: var.sqrt(),
            min: pick(0),
            median: pick(n / 2),
            max: if n > 0 { e[n - 1] } else { f64::NAN },
        }
    }

    pub fn ok_fraction(&self) -> f64 {
        self.ok as f64 / self.trials.max(1) as f64
    }
}

/// Histogram of the finite e-values: `(bin_left_edge, count)` pairs.
pub fn histogram(records: &[SensitivityRecord], bin_width: f64) -> Vec<(f64, usize)> {
    let mut bins = std::collections::BTreeMap::<i64, usize>::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        *bins.entry((r.e_value / bin_width).floor() as i64).or_default() += 1;
    }
    bins.into_iter().map(|(k, c)| (k as f64 * bin_width, c)).collect()
}
