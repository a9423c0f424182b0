//! Minimal and non-minimal solvers for essential and fundamental matrices.
//!
//! All solvers take pixel-coordinate correspondences. Conditioning
//! transforms (Hartley normalization for fundamental-matrix solvers,
//! intrinsics for essential-matrix solvers) are applied internally and
//! undone on output, so thresholds downstream stay in pixels.

mod eight_point;
mod five_point;
mod polynomial;
mod seven_point;

pub use eight_point::{eight_point_essential, eight_point_fundamental, eight_point_least_squares};
pub use five_point::five_point_essential;
pub use polynomial::{solve_cubic, solve_poly_degree10};
pub use seven_point::seven_point_fundamental;

use nalgebra::Matrix3;
use thiserror::Error;

/// Errors produced by the solvers.
#[derive(Debug, Clone, Error)]
pub enum SolverError {
    /// The sample's design matrix is rank deficient (coincident or otherwise
    /// degenerate configurations).
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),
    /// Root finding produced no usable model candidate.
    #[error("solver failure: {0}")]
    SolverFailure(&'static str),
    /// Polynomial input outside the solvable family.
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    /// The sample has the wrong number of correspondences for this solver.
    #[error("wrong sample size: expected {expected}, found {found}")]
    WrongSampleSize { expected: usize, found: usize },
}

/// The estimation problem a pipeline is solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Essential,
    Fundamental,
}

impl Problem {
    /// Minimal sample size: 5 for essential, 7 for fundamental.
    pub fn minimal_sample_size(&self) -> usize {
        match self {
            Problem::Essential => 5,
            Problem::Fundamental => 7,
        }
    }

    /// Upper bound on the number of models a minimal solve can return.
    pub fn max_candidates(&self) -> usize {
        match self {
            Problem::Essential => 10,
            Problem::Fundamental => 3,
        }
    }
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Problem::Essential => "essential",
            Problem::Fundamental => "fundamental",
        })
    }
}

impl std::str::FromStr for Problem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "essential" => Ok(Problem::Essential),
            "fundamental" => Ok(Problem::Fundamental),
            other => Err(format!("unknown problem `{other}`")),
        }
    }
}

/// The candidate models returned by one minimal solve.
#[derive(Debug, Clone)]
pub struct SolverOutput<M> {
    pub models: Vec<M>,
}

impl<M> SolverOutput<M> {
    pub fn new(models: Vec<M>) -> Self {
        Self { models }
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

/// Hartley conditioning: centroid at the origin, RMS radius sqrt(2).
///
/// Returns the normalized points and the transform `T` such that
/// `x_normalized = T x`. `None` when the points are (nearly) coincident.
pub(crate) fn hartley_normalize(
    points: &[(f64, f64)],
) -> Option<(Vec<(f64, f64)>, Matrix3<f64>)> {
    let n = points.len() as f64;
    let (cx, cy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.0, sy + p.1));
    let (cx, cy) = (cx / n, cy / n);
    let rms = (points
        .iter()
        .map(|p| {
            let dx = p.0 - cx;
            let dy = p.1 - cy;
            dx * dx + dy * dy
        })
        .sum::<f64>()
        / n)
        .sqrt();
    if rms < 1e-12 {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / rms;
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let normalized = points.iter().map(|p| ((p.0 - cx) * s, (p.1 - cy) * s)).collect();
    Some((normalized, t))
}

/// One epipolar design-matrix row for `x2ᵀ M x1 = 0` with `M` stacked
/// row-major.
pub(crate) fn epipolar_row(x1: (f64, f64), x2: (f64, f64)) -> [f64; 9] {
    let (u1, v1) = x1;
    let (u2, v2) = x2;
    [u2 * u1, u2 * v1, u2, v2 * u1, v2 * v1, v2, u1, v1, 1.0]
}

/// Reinterprets a row-major 9-vector as a 3x3 matrix.
pub(crate) fn matrix_from_row_major(v: &[f64]) -> Matrix3<f64> {
    Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8])
}

/// Drops models that duplicate an earlier one within `tol` in Frobenius
/// distance, up to the global sign ambiguity.
pub(crate) fn dedup_models(models: Vec<Matrix3<f64>>, tol: f64) -> Vec<Matrix3<f64>> {
    let mut out: Vec<Matrix3<f64>> = Vec::with_capacity(models.len());
    for m in models {
        let dup = out.iter().any(|prev| {
            let d = (m - prev).norm().min((m + prev).norm());
            d <= tol
        });
        if !dup {
            out.push(m);
        }
    }
    out
}
