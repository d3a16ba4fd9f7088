//! Built-in reference rigs and random rig sampling.

use nalgebra::Matrix3x4;
use rand::Rng;

use crate::cameras::{classify_rig, classify_rig_with_options, Camera, CameraRig};
use crate::projective::DEFAULT_RANK_TOL;
use crate::seeds::gaussian_matrix3x4;

/// Three fixed cameras used by the sensitivity experiments.
pub fn sensitivity_cameras() -> [Matrix3x4<f64>; 3] {
    [
        Matrix3x4::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0),
        Matrix3x4::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0),
        Matrix3x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0),
    ]
}

/// Four cameras whose centers `[0:0:0:1]` and `[1:0:0:0]` span a common baseline.
pub fn collinear_cameras() -> [Matrix3x4<f64>; 4] {
    [
        Matrix3x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0),
        Matrix3x4::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0),
        Matrix3x4::new(1.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0),
        Matrix3x4::new(1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0),
    ]
}

/// The first `m ∈ {2, 3}` sensitivity cameras.
///
/// The first two cameras share the center `[1:0:0:0]` (the second is an image
/// homography applied to the first), so the rig is built with shared centers
/// allowed. With `m = 2` a line is then not identifiable from its images.
pub fn sensitivity_rig(m: usize) -> CameraRig {
    assert!((2..=3).contains(&m), "the sensitivity rig has two or three cameras");
    let cams = sensitivity_cameras()[..m].iter().map(|c| Camera::new(*c).expect("full rank")).collect();
    classify_rig_with_options(cams, DEFAULT_RANK_TOL, true).expect("valid cameras")
}

pub fn collinear_rig() -> CameraRig {
    let cams = collinear_cameras().iter().map(|c| Camera::new(*c).expect("full rank")).collect();
    classify_rig(cams).expect("distinct centers")
}

/// Rig of `m` cameras with i.i.d. standard Gaussian entries, resampled until no
/// three centers are collinear.
pub fn gaussian_rig<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CameraRig {
    assert!(m >= 2, "a rig has at least two cameras");
    loop {
        let cams: Option<Vec<Camera>> = (0..m).map(|_| Camera::new(gaussian_matrix3x4(rng)).ok()).collect();
        if let Some(rig) = cams.and_then(|c| classify_rig(c).ok()) {
            if rig.collinear_groups().is_empty() {
                return rig;
            }
        }
    }
}
