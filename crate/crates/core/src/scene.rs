//! JSON scene files: a camera rig plus optional space lines and image tuples.
//!
//! ```json
//! {"cameras": [[p11, p12, p13, p14, p21, ..., p34], ...],
//!  "lines":   [[p0, p1, p2, p3, p4, p5], ...],
//!  "tuples":  [[[a, b, c], [a, b, c], ...], ...]}
//! ```
//!
//! Cameras are 3×4 matrices in row-major order. Lines are Plücker vectors and
//! tuples hold one image line per camera.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cameras::{classify_rig_with_options, Camera, CameraRig};
use crate::grassmannian::PlueckerLine;
use crate::multiview::LineTuple;
use crate::projective::DEFAULT_RANK_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub cameras: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lines: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuples: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    /// Malformed JSON or a field of the wrong shape.
    #[error("{field}: {message}")]
    Parse { field: String, message: String },
    /// Well-formed input that violates a geometric requirement.
    #[error("{field}: {message}")]
    Invariant { field: String, message: String },
}

impl SceneError {
    fn parse(field: impl Into<String>, message: impl ToString) -> Self {
        Self::Parse { field: field.into(), message: message.to_string() }
    }

    fn invariant(field: impl Into<String>, message: impl ToString) -> Self {
        Self::Invariant { field: field.into(), message: message.to_string() }
    }

    pub fn is_parse(&self) -> bool {
        matches!(self, Self::Parse { .. })
    }

    pub fn field(&self) -> &str {
        match self {
            Self::Parse { field, .. } | Self::Invariant { field, .. } => field,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub rig: CameraRig,
    pub lines: Vec<PlueckerLine<f64>>,
    pub tuples: Vec<LineTuple<f64>>,
    /// Line coordinates as read, emitted unchanged so files round-trip exactly.
    raw_lines: Vec<[f64; 6]>,
}

fn finite_array<const N: usize>(v: &[f64], field: String) -> Result<[f64; N], SceneError> {
    if v.len() != N {
        return Err(SceneError::parse(field, format!("expected {N} numbers, got {}", v.len())));
    }
    if let Some(k) = v.iter().position(|x| !x.is_finite()) {
        return Err(SceneError::parse(format!("{field}[{k}]"), "not a finite number"));
    }
    Ok(std::array::from_fn(|k| v[k]))
}

impl Scene {
    /// Parses and validates a scene. Cameras may share centers; the rig
    /// records them instead of failing.
    pub fn from_json(text: &str, rank_tol: f64) -> Result<Self, SceneError> {
        let file: SceneFile = serde_json::from_str(text).map_err(|e| {
            let field = ["cameras", "lines", "tuples"].into_iter().find(|f| e.to_string().contains(f)).unwrap_or("scene");
            SceneError::parse(field, e)
        })?;
        Self::from_file(&file, rank_tol)
    }

    pub fn from_file(file: &SceneFile, rank_tol: f64) -> Result<Self, SceneError> {
        let mut cams = Vec::with_capacity(file.cameras.len());
        for (i, row) in file.cameras.iter().enumerate() {
            let field = format!("cameras[{i}]");
            let entries: [f64; 12] = finite_array(row, field.clone())?;
            cams.push(Camera::from_row_major(&entries).map_err(|e| SceneError::invariant(field, e))?);
        }
        let m = cams.len();
        let rig = classify_rig_with_options(cams, rank_tol, true).map_err(|e| SceneError::invariant("cameras", e))?;
        let (mut lines, mut raw_lines) = (Vec::new(), Vec::new());
        for (i, p) in file.lines.iter().flatten().enumerate() {
            let field = format!("lines[{i}]");
            let p: [f64; 6] = finite_array(p, field.clone())?;
            lines.push(PlueckerLine::from_coords(p).map_err(|e| SceneError::invariant(field, e))?);
            raw_lines.push(p);
        }
        let mut tuples = Vec::new();
        for (i, t) in file.tuples.iter().flatten().enumerate() {
            if t.len() != m {
                return Err(SceneError::invariant(format!("tuples[{i}]"), format!("{} image lines for {m} cameras", t.len())));
            }
            let mut v = Vec::with_capacity(m);
            for (j, l) in t.iter().enumerate() {
                let a: [f64; 3] = finite_array(l, format!("tuples[{i}][{j}]"))?;
                v.push(Vector3::from(a));
            }
            tuples.push(LineTuple::from_vectors(&v).map_err(|e| SceneError::invariant(format!("tuples[{i}]"), e))?);
        }
        Ok(Self { rig, lines, tuples, raw_lines })
    }

    pub fn new(rig: CameraRig, lines: Vec<PlueckerLine<f64>>, tuples: Vec<LineTuple<f64>>) -> Self {
        Self { rig, lines, tuples, raw_lines: Vec::new() }
    }

    pub fn from_rig(rig: CameraRig) -> Self {
        Self::new(rig, Vec::new(), Vec::new())
    }

    fn line_coords(&self) -> Vec<Vec<f64>> {
        if self.raw_lines.len() == self.lines.len() {
            self.raw_lines.iter().map(|p| p.to_vec()).collect()
        } else {
            self.lines.iter().map(|l| l.coords().to_vec()).collect()
        }
    }

    pub fn to_file(&self) -> SceneFile {
        SceneFile {
            cameras: self.rig.cameras().iter().map(|c| c.to_row_major()).collect(),
            lines: (!self.lines.is_empty()).then(|| self.line_coords()),
            tuples: (!self.tuples.is_empty())
                .then(|| self.tuples.iter().map(|t| t.vectors().iter().map(|v| v.iter().copied().collect()).collect()).collect()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("scene serializes")
    }
}

impl std::str::FromStr for Scene {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, SceneError> {
        Self::from_json(s, DEFAULT_RANK_TOL)
    }
}
