#![allow(dead_code)]

use linemv::cameras::{classify_rig, Camera, CameraRig};
use linemv::grassmannian::{chart, ChartPoint, PlueckerLine};
use linemv::seeds::{gaussian, gaussian_matrix3x4, gaussian_vector4, rng_for, ExperimentRng};
use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;
use rand::Rng;

pub fn rng(seed: u64) -> ExperimentRng {
    rng_for(seed, 0xC0FFEE, 0)
}

pub fn random_line(rng: &mut impl Rng) -> PlueckerLine<f64> {
    PlueckerLine::from_vectors(&gaussian_vector4(rng), &gaussian_vector4(rng)).unwrap()
}

pub fn random_chart_line(rng: &mut impl Rng) -> (ChartPoint<f64>, PlueckerLine<f64>) {
    let v = ChartPoint::new(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
    (v, chart(&v))
}

pub fn random_complex_vector4(rng: &mut impl Rng) -> Vector4<Complex64> {
    Vector4::from_fn(|_, _| Complex64::new(gaussian(rng), gaussian(rng)))
}

pub fn random_complex_line(rng: &mut impl Rng) -> PlueckerLine<Complex64> {
    PlueckerLine::from_vectors(&random_complex_vector4(rng), &random_complex_vector4(rng)).unwrap()
}

pub fn random_rig(rng: &mut impl Rng, m: usize) -> CameraRig {
    linemv::rigs::gaussian_rig(rng, m)
}

pub fn random_camera(rng: &mut impl Rng) -> Camera {
    Camera::new(gaussian_matrix3x4(rng)).unwrap()
}

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal(rng: &mut impl Rng) -> Matrix4<f64> {
    let a = Matrix4::from_fn(|_, _| gaussian(rng));
    a.qr().q()
}

pub fn random_unitary(rng: &mut impl Rng) -> Matrix4<Complex64> {
    let a = Matrix4::from_fn(|_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    a.qr().q()
}

pub fn random_orthogonal_n(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    a.qr().q()
}

pub fn rig_from(cams: Vec<Camera>) -> CameraRig {
    classify_rig(cams).unwrap()
}
