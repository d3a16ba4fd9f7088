//! Total-degree homotopy continuation for square polynomial systems.
//!
//! Tracks `H(x, s) = (1 − s) γ G(x) + s F(x)` from the roots of
//! `G_i = x_i^{d_i} − r_i` at `s = 0` to `s = 1` with a fourth-order
//! Runge-Kutta predictor and a Newton corrector.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::poly::MultiPoly;
use crate::error::{Error, Result};
use crate::linalg::singular_values;

/// Largest system size the tracker handles (stack buffers).
pub const MAX_VARS: usize = 8;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// A square polynomial system with an evaluator for values and Jacobian.
pub trait PolySystem: Sync {
    fn dim(&self) -> usize;
    fn degrees(&self) -> Vec<u32>;
    /// Sum of coefficient moduli of each equation.
    fn coefficient_norms(&self) -> Vec<f64>;
    /// Writes `F(x)` into `f` and the row-major Jacobian into `jac`.
    fn eval(&self, x: &[C], f: &mut [C], jac: &mut [C]);
}

/// System given by explicit polynomials, Jacobian by symbolic differentiation.
#[derive(Debug, Clone)]
pub struct DensePolySystem {
    polys: Vec<MultiPoly>,
    jac: Vec<MultiPoly>,
}

impl DensePolySystem {
    pub fn new(polys: Vec<MultiPoly>) -> Result<Self> {
        let n = polys.len();
        if n == 0 || n > MAX_VARS || polys.iter().any(|p| p.nvars() != n) {
            return Err(Error::InvalidArgument(format!("need a square system of at most {MAX_VARS} equations")));
        }
        let jac = polys.iter().flat_map(|p| p.gradient()).collect();
        Ok(Self { polys, jac })
    }

    pub fn polynomials(&self) -> &[MultiPoly] {
        &self.polys
    }
}

impl PolySystem for DensePolySystem {
    fn dim(&self) -> usize {
        self.polys.len()
    }

    fn degrees(&self) -> Vec<u32> {
        self.polys.iter().map(|p| p.total_degree()).collect()
    }

    fn coefficient_norms(&self) -> Vec<f64> {
        self.polys.iter().map(|p| p.coefficient_norm()).collect()
    }

    fn eval(&self, x: &[C], f: &mut [C], jac: &mut [C]) {
        for (fi, p) in f.iter_mut().zip(&self.polys) {
            *fi = p.evaluate(x);
        }
        for (ji, p) in jac.iter_mut().zip(&self.jac) {
            *ji = p.evaluate(x);
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrackerConfig {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Accepted plus rejected steps per path.
    pub max_steps: usize,
    pub corrector_iterations: usize,
    /// Newton update size, relative to `1 + ‖x‖`, that counts as converged.
    pub corrector_tol: f64,
    /// Endpoints with `‖x‖∞` beyond this are counted as solutions at infinity.
    pub divergence_norm: f64,
    /// A path that stalls within this distance of `s = 1` is refined by Newton
    /// and kept only if the refined root tracks back to its start point.
    pub end_zone: f64,
    /// A step below `relative_stall` times the remaining parameter length
    /// ends the path.
    pub relative_stall: f64,
    /// Stalled endpoints with `|x_0| < infinity_tol · ‖X‖∞` lie at infinity.
    pub infinity_tol: f64,
    /// Relative residual an endpoint must reach to count as regular.
    pub end_tol: f64,
    pub cond_max: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.01,
            max_step: 0.1,
            min_step: 1e-15,
            max_steps: 20_000,
            corrector_iterations: 3,
            corrector_tol: 1e-9,
            divergence_norm: 1e8,
            end_zone: 1e-3,
            relative_stall: 1e-3,
            infinity_tol: 1e-4,
            end_tol: 1e-8,
            cond_max: 1e12,
        }
    }
}

impl TrackerConfig {
    /// Stricter settings for re-tracking failed or colliding paths.
    pub fn tightened(&self) -> Self {
        Self {
            initial_step: self.initial_step / 10.0,
            max_step: self.max_step / 5.0,
            min_step: self.min_step / 100.0,
            max_steps: self.max_steps * 4,
            corrector_tol: self.corrector_tol / 100.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathStatus {
    Regular,
    Singular,
    Diverged,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PathResult {
    pub index: usize,
    pub endpoint: Vec<C>,
    pub status: PathStatus,
    /// Largest equation residual relative to its coefficient scale.
    pub residual: f64,
    /// Ratio of the second to the first Newton update at the endpoint.
    pub newton_contraction: f64,
    /// Two further Newton steps each contracted at least tenfold.
    pub certified: bool,
    pub condition: f64,
    pub steps: usize,
}

/// Start system, γ constant and projective patch of one homotopy.
#[derive(Debug, Clone, PartialEq)]
pub struct StartSystem {
    pub gamma: C,
    pub r: Vec<C>,
    pub degrees: Vec<u32>,
    /// Coefficients `a` of the affine patch `a · (x_0, x) = 1`.
    pub patch: Vec<C>,
}

impl StartSystem {
    /// Random γ on the unit circle away from `±1`, unit `r_i` and patch.
    pub fn random(degrees: Vec<u32>, rng: &mut impl Rng) -> Self {
        let unit = |rng: &mut dyn rand::RngCore| C::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
        let gamma = loop {
            let g = unit(rng);
            if g.im.abs() > 0.1f64.sin() {
                break g;
            }
        };
        let r = degrees.iter().map(|_| unit(rng)).collect();
        let patch = (0..=degrees.len()).map(|_| unit(rng)).collect();
        Self { gamma, r, degrees, patch }
    }

    pub fn path_count(&self) -> usize {
        self.degrees.iter().map(|&d| d as usize).product()
    }

    /// Start root number `index` in mixed radix over the degrees.
    pub fn start_point(&self, mut index: usize) -> Vec<C> {
        self.degrees
            .iter()
            .zip(&self.r)
            .map(|(&d, r)| {
                let k = index % d as usize;
                index /= d as usize;
                r.powf(1.0 / d as f64) * C::from_polar(1.0, std::f64::consts::TAU * k as f64 / d as f64)
            })
            .collect()
    }
}

fn norm_inf(x: &[C]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Solves `a y = b` in place (`a` row-major `n × n`) by partial pivoting.
fn lu_solve(n: usize, a: &mut [C], b: &mut [C]) -> bool {
    for col in 0..n {
        let (piv, pmax) = (col..n).map(|r| (r, a[r * n + col].norm())).fold((col, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if !(pmax > 0.0) || !pmax.is_finite() {
            return false;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let inv = C::new(1.0, 0.0) / a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] * inv;
            if factor == ZERO {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= factor * v;
            }
            let bc = b[col];
            b[r] -= factor * bc;
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    b.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Homogeneous coordinates carry one extra entry.
const MAXP: usize = MAX_VARS + 1;

const REFINE_STEPS: usize = 10;

struct Workspace {
    f: [C; MAX_VARS],
    jac: [C; MAX_VARS * MAX_VARS],
    h: [C; MAXP],
    hx: [C; MAXP * MAXP],
    hs: [C; MAXP],
}

impl Workspace {
    fn new() -> Self {
        Self { f: [ZERO; MAX_VARS], jac: [ZERO; MAX_VARS * MAX_VARS], h: [ZERO; MAXP], hx: [ZERO; MAXP * MAXP], hs: [ZERO; MAXP] }
    }
}

/// The homotopy of one target system with one start system, tracked in
/// homogeneous coordinates `X = (x_0, x_0 x)` on a random affine patch so
/// that paths running to infinity stay bounded.
pub struct Homotopy<'a, S: PolySystem> {
    target: &'a S,
    start: &'a StartSystem,
    n: usize,
    norms: Vec<f64>,
}

impl<'a, S: PolySystem> Homotopy<'a, S> {
    pub fn new(target: &'a S, start: &'a StartSystem) -> Result<Self> {
        let n = target.dim();
        if n > MAX_VARS || start.degrees.len() != n || start.patch.len() != n + 1 {
            return Err(Error::DimensionMismatch { expected: n, got: start.degrees.len() });
        }
        if start.degrees != target.degrees() {
            return Err(Error::InvalidArgument("start degrees differ from the target system".into()));
        }
        Ok(Self { target, start, n, norms: target.coefficient_norms() })
    }

    /// Fills `ws.h`, `ws.hx` (row-major, `n + 1` square) and `ws.hs` at `(X, s)`.
    fn eval(&self, xh: &[C], s: f64, ws: &mut Workspace) {
        let n = self.n;
        let np = n + 1;
        let x0 = xh[0];
        let mut x = [ZERO; MAX_VARS];
        for k in 0..n {
            x[k] = xh[k + 1] / x0;
        }
        self.target.eval(&x[..n], &mut ws.f[..n], &mut ws.jac[..n * n]);
        let gs = self.start.gamma * (1.0 - s);
        for i in 0..n {
            let d = self.start.degrees[i];
            let p = x0.powu(d - 1);
            let fi = ws.f[i];
            let row = &ws.jac[i * n..(i + 1) * n];
            let jx: C = row.iter().zip(&x[..n]).map(|(a, b)| a * b).sum();
            let fh = p * x0 * fi;
            let out = &mut ws.hx[i * np..(i + 1) * np];
            out[0] = (fi * d as f64 - jx) * p * s;
            for k in 0..n {
                out[k + 1] = row[k] * p * s;
            }
            let xi = xh[i + 1];
            let xd1 = xi.powu(d - 1);
            let ri = self.start.r[i];
            let gh = xd1 * xi - ri * p * x0;
            out[i + 1] += gs * xd1 * d as f64;
            out[0] -= gs * ri * p * d as f64;
            ws.h[i] = gs * gh + fh * s;
            ws.hs[i] = fh - self.start.gamma * gh;
        }
        let a = &self.start.patch;
        ws.h[n] = a.iter().zip(xh).map(|(a, b)| a * b).sum::<C>() - C::new(1.0, 0.0);
        ws.hx[n * np..(n + 1) * np].copy_from_slice(a);
        ws.hs[n] = ZERO;
    }

    /// Tangent `dX/ds = −H_X⁻¹ H_s`.
    fn tangent(&self, xh: &[C], s: f64, ws: &mut Workspace, out: &mut [C]) -> bool {
        let np = self.n + 1;
        self.eval(xh, s, ws);
        for i in 0..np {
            out[i] = -ws.hs[i];
        }
        lu_solve(np, &mut ws.hx[..np * np], &mut out[..np])
    }

    fn predict(&self, xh: &[C], s: f64, ds: f64, ws: &mut Workspace, out: &mut [C]) -> bool {
        let np = self.n + 1;
        let mut k = [[ZERO; MAXP]; 4];
        let mut y = [ZERO; MAXP];
        if !self.tangent(xh, s, ws, &mut k[0]) {
            return false;
        }
        for (stage, frac) in [0.5, 0.5, 1.0].into_iter().enumerate() {
            for i in 0..np {
                y[i] = xh[i] + k[stage][i] * (frac * ds);
            }
            if !self.tangent(&y[..np], s + frac * ds, ws, &mut k[stage + 1]) {
                return false;
            }
        }
        for i in 0..np {
            out[i] = xh[i] + (k[0][i] + k[1][i] * 2.0 + k[2][i] * 2.0 + k[3][i]) * (ds / 6.0);
        }
        true
    }

    /// Newton on `H(·, s)`; true when an update falls below tolerance.
    fn correct(&self, xh: &mut [C], s: f64, iterations: usize, tol: f64, ws: &mut Workspace) -> bool {
        let np = self.n + 1;
        let mut prev = f64::INFINITY;
        for _ in 0..iterations {
            self.eval(xh, s, ws);
            if !lu_solve(np, &mut ws.hx[..np * np], &mut ws.h[..np]) {
                return false;
            }
            let dn = norm_inf(&ws.h[..np]);
            for i in 0..np {
                xh[i] -= ws.h[i];
            }
            if dn <= tol * norm_inf(xh) {
                return true;
            }
            if dn > 0.5 * prev {
                return false;
            }
            prev = dn;
        }
        false
    }

    /// Newton step on the affine target system; returns the update norm.
    fn newton_target(&self, x: &mut [C], ws: &mut Workspace) -> Option<f64> {
        let n = self.n;
        self.target.eval(x, &mut ws.f[..n], &mut ws.jac[..n * n]);
        let mut rhs = ws.f;
        if !lu_solve(n, &mut ws.jac[..n * n], &mut rhs[..n]) {
            return None;
        }
        for i in 0..n {
            x[i] -= rhs[i];
        }
        Some(norm_inf(&rhs[..n]))
    }

    fn relative_residual(&self, x: &[C], ws: &mut Workspace) -> f64 {
        let n = self.n;
        self.target.eval(x, &mut ws.f[..n], &mut ws.jac[..n * n]);
        let big = norm_inf(x).max(1.0);
        (0..n)
            .map(|i| ws.f[i].norm() / (self.norms[i].max(f64::MIN_POSITIVE) * big.powi(self.start.degrees[i] as i32)))
            .fold(0.0, f64::max)
    }

    fn condition(&self, x: &[C], ws: &mut Workspace) -> f64 {
        let n = self.n;
        self.target.eval(x, &mut ws.f[..n], &mut ws.jac[..n * n]);
        let j = DMatrix::from_fn(n, n, |r, c| ws.jac[r * n + c]);
        let sv = singular_values(&j);
        let smin = sv[n - 1];
        if smin > 0.0 { sv[0] / smin } else { f64::INFINITY }
    }

    /// Homogeneous point on the patch above the affine point `x`.
    fn lift(&self, x: &[C]) -> [C; MAXP] {
        let np = self.n + 1;
        let mut xh = [ZERO; MAXP];
        xh[0] = C::new(1.0, 0.0);
        xh[1..np].copy_from_slice(x);
        let scale: C = self.start.patch.iter().zip(&xh[..np]).map(|(a, b)| a * b).sum();
        for v in xh[..np].iter_mut() {
            *v /= scale;
        }
        xh
    }

    /// Steps `xh` from `from` towards `to`. Returns the parameter reached,
    /// whether it got there, and the number of attempted steps.
    fn run(&self, xh: &mut [C; MAXP], from: f64, to: f64, config: &TrackerConfig, ws: &mut Workspace) -> (f64, bool, usize) {
        let np = self.n + 1;
        let dir = (to - from).signum();
        let mut s = from;
        let mut ds = config.initial_step;
        let mut steps = 0;
        let mut streak = 0;
        let mut y = [ZERO; MAXP];
        while s != to {
            if steps >= config.max_steps || ds < config.min_step {
                return (s, false, steps);
            }
            steps += 1;
            let left = (to - s).abs();
            let (h, s_new) = if ds >= left { (left, to) } else { (ds, s + dir * ds) };
            let ok = self.predict(&xh[..np], s, dir * h, ws, &mut y[..np])
                && self.correct(&mut y[..np], s_new, config.corrector_iterations, config.corrector_tol, ws);
            if ok {
                *xh = y;
                s = s_new;
                let heading_out = xh[0].norm() < config.infinity_tol * norm_inf(&xh[1..np]);
                if heading_out && (to - s).abs() < config.end_zone {
                    return (s, false, steps);
                }
                streak += 1;
                if streak >= 3 {
                    ds = (ds * 2.0).min(config.max_step);
                    streak = 0;
                }
            } else {
                ds *= 0.5;
                if left < config.end_zone && ds < config.relative_stall * left {
                    return (s, false, steps);
                }
                streak = 0;
            }
        }
        (s, true, steps)
    }

    /// Tracks a target solution back to `s = 0` and returns the start root it
    /// came from, if the path is tracked successfully.
    pub fn trace_back(&self, x: &[C], config: &TrackerConfig) -> Option<Vec<C>> {
        let np = self.n + 1;
        let mut ws = Workspace::new();
        let mut xh = self.lift(x);
        let (_, finished, _) = self.run(&mut xh, 1.0, 0.0, config, &mut ws);
        finished.then(|| xh[1..np].iter().map(|v| v / xh[0]).collect())
    }

    fn leads_back(&self, x: &[C], index: usize, config: &TrackerConfig) -> bool {
        let start = self.start.start_point(index);
        self.trace_back(x, &config.tightened()).is_some_and(|y| y.iter().zip(&start).all(|(a, b)| (a - b).norm() < 1e-6))
    }

    pub fn track(&self, index: usize, config: &TrackerConfig) -> PathResult {
        let n = self.n;
        let np = n + 1;
        let mut ws = Workspace::new();
        let mut xh = self.lift(&self.start.start_point(index));
        let (s, finished, steps) = self.run(&mut xh, 0.0, 1.0, config, &mut ws);
        let ratio = xh[0].norm() / norm_inf(&xh[..np]);
        let affine: Vec<C> = xh[1..np].iter().map(|v| v / xh[0]).collect();
        let status = if finished {
            if ratio * config.divergence_norm >= 1.0 {
                return self.classify(index, &affine, steps, config, &mut ws);
            }
            PathStatus::Diverged
        } else if 1.0 - s < config.end_zone {
            if ratio < config.infinity_tol {
                PathStatus::Diverged
            } else {
                // A branch point just short of s = 1 also stalls regular paths.
                // Keep the Newton-refined root only if it tracks back to this start root.
                let refined = self.classify(index, &affine, steps, config, &mut ws);
                if refined.status == PathStatus::Regular && self.leads_back(&refined.endpoint, index, config) {
                    return refined;
                }
                PathStatus::Singular
            }
        } else {
            PathStatus::Truncated
        };
        PathResult {
            index,
            endpoint: affine,
            status,
            residual: f64::INFINITY,
            newton_contraction: f64::NAN,
            certified: false,
            condition: f64::INFINITY,
            steps,
        }
    }

    /// Refines an endpoint by Newton on the target system and classifies it.
    ///
    /// Newton runs until the update stagnates. The endpoint is regular when the
    /// final update sits at the roundoff level implied by the Jacobian
    /// condition, the residual is below `end_tol` and the condition below
    /// `cond_max`. It is certified when the two updates before that level each
    /// contracted at least tenfold.
    fn classify(&self, index: usize, x: &[C], steps: usize, config: &TrackerConfig, ws: &mut Workspace) -> PathResult {
        let n = self.n;
        let mut z = [ZERO; MAX_VARS];
        z[..n].copy_from_slice(x);
        let mut deltas: Vec<f64> = Vec::with_capacity(REFINE_STEPS);
        let scale = 1.0 + norm_inf(x);
        for _ in 0..REFINE_STEPS {
            let before = z;
            match self.newton_target(&mut z[..n], ws) {
                Some(d) if d.is_finite() && d < scale => {
                    let stagnated = deltas.len() >= 3 && deltas.last().is_some_and(|&p| d > 0.5 * p);
                    if stagnated {
                        z = before;
                        break;
                    }
                    deltas.push(d);
                    if d <= 1e-15 * scale {
                        break;
                    }
                }
                _ => {
                    z = before;
                    break;
                }
            }
        }
        let endpoint = &z[..n];
        let residual = self.relative_residual(endpoint, ws);
        let condition = self.condition(endpoint, ws);
        let floor = (1e-13f64).max(10.0 * condition * f64::EPSILON) * (1.0 + norm_inf(endpoint));
        let converged = deltas.last().is_some_and(|&d| d <= floor);
        let k = deltas.len();
        let contracts = |i: usize| deltas[i] <= floor || deltas[i] <= 0.1 * deltas[i - 1];
        let certified = converged && (k < 2 || contracts(k - 1)) && (k < 3 || contracts(k - 2));
        let status = if !converged || residual >= config.end_tol {
            PathStatus::Truncated
        } else if condition >= config.cond_max {
            PathStatus::Singular
        } else {
            PathStatus::Regular
        };
        PathResult {
            index,
            endpoint: endpoint.to_vec(),
            status,
            residual,
            newton_contraction: if k >= 2 && deltas[0] > 0.0 { deltas[1] / deltas[0] } else { 0.0 },
            certified: certified && status == PathStatus::Regular,
            condition,
            steps,
        }
    }
}

/// Groups points that agree to `tol` relative to their size; returns the
/// representative index of each input. Chart coordinates carry no scaling
/// freedom, so the comparison is affine.
pub fn dedup_classes(points: &[Vec<C>], tol: f64) -> Vec<usize> {
    let size = |p: &[C]| 1.0 + norm_inf(p);
    let mut rep: Vec<usize> = (0..points.len()).collect();
    for i in 0..points.len() {
        for j in 0..i {
            let scale = size(&points[i]).max(size(&points[j]));
            if rep[j] == j && points[i].iter().zip(&points[j]).all(|(a, b)| (a - b).norm() < tol * scale) {
                rep[i] = j;
                break;
            }
        }
    }
    rep
}

/// Tracks every start root, then re-tracks truncated paths and paths that
/// collided on a regular endpoint with tighter settings.
pub fn solve_total_degree<S: PolySystem>(system: &S, start: &StartSystem, config: &TrackerConfig, dedup_tol: f64) -> Result<Vec<PathResult>> {
    let h = Homotopy::new(system, start)?;
    let total = start.path_count();
    let mut results = crate::parallel::map_indexed(total, |i| h.track(i, config));
    let mut cfg = config.clone();
    for _ in 0..2 {
        let regular: Vec<usize> = (0..total).filter(|&i| results[i].status == PathStatus::Regular).collect();
        let rep = dedup_classes(&regular.iter().map(|&i| results[i].endpoint.clone()).collect::<Vec<_>>(), dedup_tol);
        let mut redo: Vec<usize> = (0..total).filter(|&i| results[i].status == PathStatus::Truncated).collect();
        for (k, &i) in regular.iter().enumerate() {
            if rep[k] != k {
                redo.push(i);
                redo.push(regular[rep[k]]);
            }
        }
        redo.sort_unstable();
        redo.dedup();
        if redo.is_empty() {
            break;
        }
        cfg = cfg.tightened();
        let again = crate::parallel::map_indexed(redo.len(), |k| h.track(redo[k], &cfg));
        for (k, r) in redo.iter().zip(again) {
            results[*k] = r;
        }
    }
    Ok(results)
}
