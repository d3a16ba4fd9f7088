//! Euclidean-distance degree of the line multiview variety, computed by
//! counting complex critical points with a total-degree homotopy.

pub mod homotopy;
pub mod poly;
pub mod system;

use std::time::Instant;

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use serde::Serialize;

pub use homotopy::{solve_total_degree, PathResult, PathStatus, PolySystem, StartSystem, TrackerConfig};
pub use poly::MultiPoly;
pub use system::{build_ed_polynomials, EdSystem};

use crate::cameras::CameraRig;
use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::seeds::rng_for;

const STREAM_START: u64 = 0x4544;

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct EdConfig {
    pub seed: u64,
    pub tracker: TrackerConfig,
    pub dedup_tol: f64,
    /// A solution needs `|t_i| > t_tol · ‖x‖` for every camera.
    pub t_tol: f64,
    /// Relative singular-value gap below which the plane matrix has rank 1.
    pub rank_tol: f64,
    /// Independent start systems whose endpoints are merged. A second pass
    /// recovers the occasional path lost to a near-singular crossing.
    pub passes: usize,
}

impl Default for EdConfig {
    fn default() -> Self {
        Self { seed: 0, tracker: TrackerConfig::default(), dedup_tol: 1e-6, t_tol: 1e-8, rank_tol: 1e-8, passes: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdSolution {
    pub x: Vec<Complex64>,
    pub certified: bool,
    pub real: bool,
}

impl EdSolution {
    pub fn chart(&self) -> [Complex64; 4] {
        [self.x[0], self.x[1], self.x[2], self.x[3]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdCount {
    pub m: usize,
    pub passes: usize,
    /// Paths tracked over all passes.
    pub paths: usize,
    /// Distinct regular endpoints.
    pub regular: usize,
    /// Regular endpoints with nonzero scales and a genuine line.
    pub valid: usize,
    /// Valid endpoints that passed the Newton-contraction check.
    pub lower_bound: usize,
    pub runtime_s: f64,
    pub seed: u64,
    pub singular: usize,
    pub diverged: usize,
    pub truncated: usize,
    pub duplicates: usize,
    pub invalid_scale: usize,
    pub rank_one: usize,
    #[serde(skip)]
    pub solutions: Vec<EdSolution>,
}

impl EdCount {
    pub fn real_solutions(&self) -> impl Iterator<Item = &EdSolution> {
        self.solutions.iter().filter(|s| s.real)
    }
}

/// Rank-one test on the back-projected planes `C_iᵀ κ_i`.
fn planes_have_rank_one(system: &EdSystem, rig: &CameraRig, x: &[Complex64], tol: f64) -> bool {
    let m = rig.len();
    let planes = DMatrix::from_fn(4, m, |r, i| {
        let k = system.image(i, x);
        let c = rig.cameras()[i].matrix();
        (0..3).map(|j| k[j] * c[(j, r)]).sum::<Complex64>()
    });
    let normalized = DMatrix::from_fn(4, m, |r, i| {
        let n = planes.column(i).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.0 { planes[(r, i)] / n } else { planes[(r, i)] }
    });
    let sv = singular_values(&normalized);
    sv[0] == 0.0 || sv[1] <= tol * sv[0]
}

/// Counts the complex critical points of the squared image distance from
/// data `u` to the multiview variety of `rig`.
pub fn count_ed_critical(rig: &CameraRig, u: &[Vector3<f64>], config: &EdConfig) -> Result<EdCount> {
    let clock = Instant::now();
    let system = EdSystem::new(rig, u)?;
    let m = rig.len();
    if config.passes == 0 {
        return Err(Error::InvalidArgument("at least one homotopy pass is needed".into()));
    }
    let mut results = Vec::new();
    for pass in 0..config.passes {
        let start = StartSystem::random(system.degrees(), &mut rng_for(config.seed, STREAM_START, pass as u64));
        results.extend(solve_total_degree(&system, &start, &config.tracker, config.dedup_tol)?);
    }
    let count = |s| results.iter().filter(|r| r.status == s).count();
    let regular: Vec<&PathResult> = results.iter().filter(|r| r.status == PathStatus::Regular).collect();
    let rep = homotopy::dedup_classes(&regular.iter().map(|r| r.endpoint.clone()).collect::<Vec<_>>(), config.dedup_tol);
    let distinct: Vec<&PathResult> = regular.iter().enumerate().filter(|(k, _)| rep[*k] == *k).map(|(_, r)| *r).collect();
    let (mut invalid_scale, mut rank_one) = (0, 0);
    let mut solutions = Vec::new();
    for r in &distinct {
        let x = &r.endpoint;
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if x[4..].iter().any(|t| t.norm() <= config.t_tol * norm) {
            invalid_scale += 1;
            continue;
        }
        if m == 3 && planes_have_rank_one(&system, rig, x, config.rank_tol) {
            rank_one += 1;
            continue;
        }
        let real = x.iter().all(|v| v.im.abs() <= 1e-8 * (1.0 + v.re.abs()));
        solutions.push(EdSolution { x: x.clone(), certified: r.certified, real });
    }
    Ok(EdCount {
        m,
        passes: config.passes,
        paths: results.len(),
        regular: distinct.len(),
        valid: solutions.len(),
        lower_bound: solutions.iter().filter(|s| s.certified).count(),
        runtime_s: clock.elapsed().as_secs_f64(),
        seed: config.seed,
        singular: count(PathStatus::Singular),
        diverged: count(PathStatus::Diverged),
        truncated: count(PathStatus::Truncated),
        duplicates: regular.len() - distinct.len(),
        invalid_scale,
        rank_one,
        solutions,
    })
}

/// Random instance: Gaussian cameras and unit Gaussian image lines.
pub fn random_instance(m: usize, seed: u64) -> (CameraRig, Vec<Vector3<f64>>) {
    let mut rng = rng_for(seed, STREAM_START + 1, m as u64);
    let rig = crate::rigs::gaussian_rig(&mut rng, m);
    let u = (0..m).map(|_| crate::seeds::gaussian_vector3(&mut rng).normalize()).collect();
    (rig, u)
}
