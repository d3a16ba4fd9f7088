//! Numerical toolkit for line correspondences across pinhole cameras.
//!
//! The crate is organised bottom-up:
//!
//! * [`projective`]: homogeneous coordinates, the angular metric and numerical rank.
//! * [`grassmannian`]: Plücker lines, the affine chart, duality and incidence.
//! * [`cameras`]: pinhole cameras and rig classification.
//! * [`multiview`]: the back-projection matrix `M(ℓ)`, membership and the trifocal tensor.
//! * [`enumerative`]: transversals of four lines, quadrics and Monte-Carlo counts.
//! * [`triangulation`]: least-squares line and point triangulation, sensitivity runs.
//! * [`ed_degree`]: the critical-point system and a total-degree homotopy solver.

pub mod cameras;
pub mod ed_degree;
pub mod enumerative;
pub mod error;
pub mod grassmannian;
pub mod linalg;
pub mod multiview;
pub mod parallel;
pub mod projective;
pub mod rigs;
pub mod scene;
pub mod seeds;
pub mod triangulation;

pub use cameras::{classify_rig, Camera, CameraRig, CollinearGroup, Plane3};
pub use error::{Error, Result};
pub use grassmannian::{ChartPoint, DualMode, PlueckerLine};
pub use multiview::{LineTuple, MembershipReport};
pub use num_complex::Complex64;
pub use projective::{angular_distance, numerical_rank, product_distance, ProjectivePoint, RankReport, Scalar};
