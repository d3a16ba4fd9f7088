//! Deterministic seeding for parallel experiments.
//!
//! A master seed and a `(stream, index)` pair are mixed with SplitMix64 into an
//! independent ChaCha8 generator, so results never depend on scheduling.

use nalgebra::{Matrix3x4, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type ExperimentRng = ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of item `index` in stream `stream` derived from `master`.
pub fn sub_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03)) ^ index)
}

pub fn rng_for(master: u64, stream: u64, index: u64) -> ExperimentRng {
    ExperimentRng::seed_from_u64(sub_seed(master, stream, index))
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_vector3<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    Vector3::from_fn(|_, _| gaussian(rng))
}

pub fn gaussian_vector4<R: Rng + ?Sized>(rng: &mut R) -> Vector4<f64> {
    Vector4::from_fn(|_, _| gaussian(rng))
}

pub fn gaussian_matrix3x4<R: Rng + ?Sized>(rng: &mut R) -> Matrix3x4<f64> {
    Matrix3x4::from_fn(|_, _| gaussian(rng))
}

/// Uniform point on the sphere of radius `r` in `R^n`.
pub fn on_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize, r: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x * r / norm).collect();
        }
    }
}
