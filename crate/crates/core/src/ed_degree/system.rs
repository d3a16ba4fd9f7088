//! Critical-point equations of the squared image distance to the line
//! multiview variety, in the affine chart with explicit scale factors.
//!
//! Unknowns are `x = (v11, v12, v21, v22, t_1, …, t_m)`. The line spanned by
//! `a = (1, 0, v11, v12)` and `b = (0, 1, v21, v22)` has image
//! `κ_i = C_i a × C_i b` in camera `i`, and the objective is
//! `f = Σ ‖u_i − t_i κ_i‖²`. The system is `∇f = 0`, every equation of degree 5.

use nalgebra::Vector3;
use num_complex::Complex64;

use super::homotopy::{PolySystem, MAX_VARS};
use super::poly::MultiPoly;
use crate::cameras::CameraRig;
use crate::error::{Error, Result};

type C = Complex64;
type V3 = Vector3<C>;

/// Cameras with at least this many views give a finite critical-point count.
pub const MIN_CAMERAS: usize = 3;

#[derive(Debug, Clone)]
pub struct EdSystem {
    cols: Vec<[V3; 4]>,
    u: Vec<V3>,
    polys: Vec<MultiPoly>,
    coef_norms: Vec<f64>,
}

fn cplx(v: f64) -> C {
    C::new(v, 0.0)
}

/// Symbolic `∇f`, one polynomial per unknown.
pub fn build_ed_polynomials(rig: &CameraRig, u: &[Vector3<f64>]) -> Result<Vec<MultiPoly>> {
    let m = rig.len();
    if u.len() != m {
        return Err(Error::LengthMismatch { left: m, right: u.len() });
    }
    let n = m + 4;
    let var = |i| MultiPoly::var(n, i);
    let one = MultiPoly::constant(n, cplx(1.0));
    let zero = MultiPoly::zero(n);
    let a = [one.clone(), zero.clone(), var(0), var(1)];
    let b = [zero.clone(), one, var(2), var(3)];
    let mut f = MultiPoly::zero(n);
    for (i, cam) in rig.cameras().iter().enumerate() {
        let c = cam.matrix();
        let apply = |w: &[MultiPoly; 4]| -> [MultiPoly; 3] {
            std::array::from_fn(|r| (0..4).fold(MultiPoly::zero(n), |acc, j| &acc + &w[j].scale(cplx(c[(r, j)]))))
        };
        let (ca, cb) = (apply(&a), apply(&b));
        let kappa: [MultiPoly; 3] = std::array::from_fn(|r| {
            let (p, q) = ((r + 1) % 3, (r + 2) % 3);
            &(&ca[p] * &cb[q]) - &(&ca[q] * &cb[p])
        });
        let t = var(4 + i);
        for r in 0..3 {
            let e = &MultiPoly::constant(n, cplx(u[i][r])) - &(&t * &kappa[r]);
            f = &f + &(&e * &e);
        }
    }
    Ok(f.gradient())
}

impl EdSystem {
    pub fn new(rig: &CameraRig, u: &[Vector3<f64>]) -> Result<Self> {
        let m = rig.len();
        if m < MIN_CAMERAS {
            return Err(Error::TooFewCameras { min: MIN_CAMERAS, got: m });
        }
        if m + 4 > MAX_VARS {
            return Err(Error::InvalidArgument(format!("at most {} cameras are supported", MAX_VARS - 4)));
        }
        if u.iter().any(|x| !x.iter().all(|v| v.is_finite())) {
            return Err(Error::DegenerateInput("image data must be finite".into()));
        }
        let polys = build_ed_polynomials(rig, u)?;
        let coef_norms = polys.iter().map(|p| p.coefficient_norm()).collect();
        let cols = rig
            .cameras()
            .iter()
            .map(|cam| std::array::from_fn(|j| cam.matrix().column(j).map(cplx)))
            .collect();
        Ok(Self { cols, u: u.iter().map(|x| x.map(cplx)).collect(), polys, coef_norms })
    }

    pub fn num_cameras(&self) -> usize {
        self.u.len()
    }

    pub fn polynomials(&self) -> &[MultiPoly] {
        &self.polys
    }

    /// Image line `κ_i` of the chart line `v` in camera `i`.
    pub fn image(&self, i: usize, v: &[C]) -> V3 {
        let c = &self.cols[i];
        let ca = c[0] + c[2] * v[0] + c[3] * v[1];
        let cb = c[1] + c[2] * v[2] + c[3] * v[3];
        ca.cross(&cb)
    }

    /// `f(x) = Σ (u_i − t_i κ_i)ᵀ(u_i − t_i κ_i)` (bilinear, no conjugation).
    pub fn objective(&self, x: &[C]) -> C {
        (0..self.num_cameras())
            .map(|i| {
                let e = self.u[i] - self.image(i, x) * x[4 + i];
                e.dot(&e)
            })
            .sum()
    }
}

impl PolySystem for EdSystem {
    fn dim(&self) -> usize {
        self.u.len() + 4
    }

    fn degrees(&self) -> Vec<u32> {
        vec![5; self.dim()]
    }

    fn coefficient_norms(&self) -> Vec<f64> {
        self.coef_norms.clone()
    }

    fn eval(&self, x: &[C], f: &mut [C], jac: &mut [C]) {
        let n = self.dim();
        let zero = C::new(0.0, 0.0);
        f[..n].fill(zero);
        jac[..n * n].fill(zero);
        for (i, c) in self.cols.iter().enumerate() {
            let ca = c[0] + c[2] * x[0] + c[3] * x[1];
            let cb = c[1] + c[2] * x[2] + c[3] * x[3];
            let k = ca.cross(&cb);
            let dk = [c[2].cross(&cb), c[3].cross(&cb), ca.cross(&c[2]), ca.cross(&c[3])];
            let t = x[4 + i];
            let e = self.u[i] - k * t;
            let ti = 4 + i;
            f[ti] = k.dot(&e) * -2.0;
            jac[ti * n + ti] = k.dot(&k) * 2.0;
            let tk: [C; 4] = std::array::from_fn(|j| k.dot(&dk[j]));
            for j in 0..4 {
                let de = dk[j].dot(&e);
                f[j] += de * t * -2.0;
                let mixed = de * -2.0 + tk[j] * t * 2.0;
                jac[j * n + ti] = mixed;
                jac[ti * n + j] = mixed;
                for l in j..4 {
                    let v = dk[j].dot(&dk[l]) * t * t * 2.0;
                    jac[j * n + l] += v;
                    if l != j {
                        jac[l * n + j] += v;
                    }
                }
            }
            // Only ∂v11∂v22 κ = c2 × c3 and ∂v12∂v21 κ = c3 × c2 are nonzero.
            let s = c[2].cross(&c[3]).dot(&e) * t * -2.0;
            for (j, l, sign) in [(0, 3, 1.0), (1, 2, -1.0)] {
                jac[j * n + l] += s * sign;
                jac[l * n + j] += s * sign;
            }
        }
    }
}
