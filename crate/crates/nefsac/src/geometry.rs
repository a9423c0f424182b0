//! Core two-view geometric types, error metrics and pose/model conversions.
//!
//! Conventions used throughout the crate:
//!
//! - Pixel coordinates have their origin in the top-left corner of the image.
//! - The relative pose `(R, t)` maps camera-1 coordinates into camera-2
//!   coordinates, `X2 = R X1 + t`, with `t` a unit direction (the two-view
//!   translation scale is unobservable).
//! - The epipolar constraint is `x2ᵀ F x1 = 0` for pixel coordinates and
//!   `x2ᵀ E x1 = 0` for normalized camera coordinates, with `E = [t]ₓ R`.

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3};
use thiserror::Error;

/// Errors produced by geometric constructions and operations.
#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    /// The matrix is not close enough to a valid essential matrix to be
    /// decomposed into poses.
    #[error("not a valid essential matrix: leading singular values {0:.6e} and {1:.6e} differ by more than 10%")]
    DegenerateModel(f64, f64),
    /// Triangulation rays are (nearly) parallel; the caller should treat the
    /// point as failing the cheirality test.
    #[error("triangulation rays near parallel (condition number {0:.3e})")]
    NearParallelRays(f64),
    /// A matrix failed the invariants of the requested model type.
    #[error("matrix does not satisfy {0} invariants: {1}")]
    InvalidModel(&'static str, String),
    /// A rotation matrix is not orthonormal with determinant +1.
    #[error("invalid rotation matrix: {0}")]
    InvalidRotation(&'static str),
    /// A translation with (near-)zero norm cannot be normalized.
    #[error("translation direction has zero norm")]
    ZeroTranslation,
    /// A minimal sample failed its construction invariants.
    #[error("invalid minimal sample: {0}")]
    InvalidSample(&'static str),
}

/// A single point correspondence between two images, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub u1: f64,
    pub v1: f64,
    pub u2: f64,
    pub v2: f64,
}

impl Correspondence {
    pub fn new(u1: f64, v1: f64, u2: f64, v2: f64) -> Self {
        Self { u1, v1, u2, v2 }
    }

    /// The same correspondence with the two images exchanged.
    pub fn swapped(&self) -> Self {
        Self { u1: self.u2, v1: self.v2, u2: self.u1, v2: self.v1 }
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.v1.is_finite() && self.u2.is_finite() && self.v2.is_finite()
    }

    fn bitwise_eq(&self, other: &Self) -> bool {
        self.u1.to_bits() == other.u1.to_bits()
            && self.v1.to_bits() == other.v1.to_bits()
            && self.u2.to_bits() == other.u2.to_bits()
            && self.v2.to_bits() == other.v2.to_bits()
    }
}

/// An ordered minimal set of correspondences (5 for essential, 7 for
/// fundamental matrix estimation).
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalSample {
    points: Vec<Correspondence>,
}

impl MinimalSample {
    /// Builds a sample, rejecting empty input, non-finite coordinates and
    /// bitwise-identical duplicate correspondences.
    pub fn new(points: Vec<Correspondence>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::InvalidSample("sample is empty"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::InvalidSample("non-finite coordinate"));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i].bitwise_eq(&points[j]) {
                    return Err(GeometryError::InvalidSample(
                        "two correspondences are bitwise identical",
                    ));
                }
            }
        }
        Ok(Self { points })
    }

    /// Internal constructor for hot paths where the caller guarantees the
    /// invariants (e.g. samplers drawing distinct indices).
    pub(crate) fn from_points_unchecked(points: Vec<Correspondence>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Correspondence] {
        &self.points
    }
}

/// Pinhole camera intrinsics (no skew, no distortion).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Self {
        debug_assert!(fx > 0.0 && fy > 0.0, "focal lengths must be positive");
        Self { fx, fy, cx, cy }
    }

    /// Identity intrinsics: pixel coordinates equal normalized coordinates.
    pub fn identity() -> Self {
        Self { fx: 1.0, fy: 1.0, cx: 0.0, cy: 0.0 }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Maps a pixel to normalized camera coordinates.
    pub fn normalize(&self, u: f64, v: f64) -> (f64, f64) {
        ((u - self.cx) / self.fx, (v - self.cy) / self.fy)
    }

    /// Maps normalized camera coordinates to a pixel.
    pub fn denormalize(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.fx + self.cx, y * self.fy + self.cy)
    }
}

/// An orthonormal 3x3 matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

const ROTATION_TOL: f64 = 1e-9;

impl Rotation {
    /// Validates orthonormality (`RᵀR = I` within 1e-9) and `det R = +1`
    /// within 1e-9.
    pub fn new(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let gram = m.transpose() * m;
        let dev = (gram - Matrix3::identity()).abs().max();
        if dev > ROTATION_TOL {
            return Err(GeometryError::InvalidRotation("matrix is not orthonormal"));
        }
        if (m.determinant() - 1.0).abs() > ROTATION_TOL {
            return Err(GeometryError::InvalidRotation("determinant is not +1"));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Rodrigues' formula. The axis does not need to be normalized.
    pub fn from_axis_angle(axis: Vector3<f64>, angle_rad: f64) -> Result<Self, GeometryError> {
        let norm = axis.norm();
        if norm < 1e-300 {
            return Err(GeometryError::InvalidRotation("zero rotation axis"));
        }
        let a = axis / norm;
        let k = skew_symmetric(&a);
        let m = Matrix3::identity() + k * angle_rad.sin() + k * k * (1.0 - angle_rad.cos());
        // Rodrigues output is orthonormal to machine precision.
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Rotation angle in degrees, in [0, 180].
    pub fn angle_deg(&self) -> f64 {
        let c = ((self.0.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos().to_degrees()
    }
}

/// Relative pose between two views: rotation plus unit translation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation,
    translation: Vector3<f64>,
}

impl Pose {
    /// Builds a pose, normalizing the translation to unit length.
    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let norm = translation.norm();
        if norm < 1e-300 {
            return Err(GeometryError::ZeroTranslation);
        }
        Ok(Self { rotation, translation: translation / norm })
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }
}

/// A 3x3 essential matrix: rank 2 with two equal nonzero singular values.
///
/// Canonically scaled so the nonzero singular values are 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssentialMatrix(Matrix3<f64>);

impl EssentialMatrix {
    /// Validates the essential-matrix invariants: smallest singular value
    /// below `1e-7 * ||E||_F` and the two leading singular values equal
    /// within 1e-6 relative.
    pub fn new(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let sv = m.svd(false, false).singular_values;
        let fro = m.norm();
        if !(sv[2] < 1e-7 * fro) {
            return Err(GeometryError::InvalidModel(
                "essential matrix",
                format!("rank-2 violated: smallest singular value {:.3e} vs norm {:.3e}", sv[2], fro),
            ));
        }
        if (sv[0] - sv[1]).abs() > 1e-6 * sv[0] {
            return Err(GeometryError::InvalidModel(
                "essential matrix",
                format!("singular values {:.6e}, {:.6e} not equal", sv[0], sv[1]),
            ));
        }
        Ok(Self(m))
    }

    /// Projects an arbitrary matrix onto the essential manifold
    /// (singular values forced to `(1, 1, 0)`).
    pub fn project_from(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd with u");
        let v_t = svd.v_t.expect("svd with v_t");
        let sv = svd.singular_values;
        if sv[1] < 1e-12 * sv[0].max(f64::MIN_POSITIVE) {
            return Err(GeometryError::InvalidModel(
                "essential matrix",
                "rank below 2, cannot project".to_string(),
            ));
        }
        let e = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0)) * v_t;
        Ok(Self(canonical_sign(e)))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

/// A 3x3 fundamental matrix: rank 2, Frobenius norm 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix(Matrix3<f64>);

impl FundamentalMatrix {
    /// Validates rank 2 (smallest singular value below `1e-7 * ||F||`) and
    /// unit Frobenius norm.
    pub fn new(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let sv = m.svd(false, false).singular_values;
        let fro = m.norm();
        if !(sv[2] < 1e-7 * fro) {
            return Err(GeometryError::InvalidModel(
                "fundamental matrix",
                format!("rank-2 violated: smallest singular value {:.3e} vs norm {:.3e}", sv[2], fro),
            ));
        }
        if (fro - 1.0).abs() > 1e-9 {
            return Err(GeometryError::InvalidModel(
                "fundamental matrix",
                format!("Frobenius norm {fro:.12} != 1"),
            ));
        }
        Ok(Self(m))
    }

    /// Rescales an already rank-deficient matrix to unit Frobenius norm
    /// without touching its singular vectors.
    ///
    /// Prefer this over [`FundamentalMatrix::project_from`] for matrices that
    /// are rank 2 by construction: an SVD round-trip perturbs every entry by
    /// machine epsilon, which pixel-scale homogeneous coordinates amplify by
    /// several orders of magnitude in the Sampson error.
    pub fn from_rank2(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let norm = m.norm();
        if norm < 1e-300 {
            return Err(GeometryError::InvalidModel(
                "fundamental matrix",
                "zero matrix".to_string(),
            ));
        }
        Self::new(canonical_sign(m / norm))
    }

    /// Projects an arbitrary matrix to rank 2 (smallest singular value
    /// truncated) and rescales to unit Frobenius norm.
    pub fn project_from(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd with u");
        let v_t = svd.v_t.expect("svd with v_t");
        let sv = svd.singular_values;
        if sv[1] < 1e-300 {
            return Err(GeometryError::InvalidModel(
                "fundamental matrix",
                "rank below 2, cannot project".to_string(),
            ));
        }
        let truncated =
            u * Matrix3::from_diagonal(&Vector3::new(sv[0], sv[1], 0.0)) * v_t;
        let f = truncated / truncated.norm();
        Ok(Self(canonical_sign(f)))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// The transposed model, relating the images in swapped order.
    pub fn transposed(&self) -> Self {
        Self(self.0.transpose())
    }
}

/// Fixes the scale-sign ambiguity of epipolar matrices: the entry with the
/// largest magnitude is made positive.
fn canonical_sign(m: Matrix3<f64>) -> Matrix3<f64> {
    let mut best = 0.0f64;
    let mut sign = 1.0f64;
    for v in m.iter() {
        if v.abs() > best {
            best = v.abs();
            sign = if *v < 0.0 { -1.0 } else { 1.0 };
        }
    }
    m * sign
}

/// The cross-product matrix `[v]ₓ` such that `[v]ₓ w = v × w`.
pub fn skew_symmetric(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// First-order geometric reprojection error of a correspondence under a
/// fundamental matrix, in pixels.
///
/// Returns `+inf` when both epipolar-line gradients vanish (denominator
/// below 1e-300).
pub fn sampson_error(model: &FundamentalMatrix, c: &Correspondence) -> f64 {
    let f = model.matrix();
    let x1 = Vector3::new(c.u1, c.v1, 1.0);
    let x2 = Vector3::new(c.u2, c.v2, 1.0);
    let fx1 = f * x1;
    let ftx2 = f.transpose() * x2;
    let val = x2.dot(&fx1);
    let denom = fx1.x * fx1.x + fx1.y * fx1.y + ftx2.x * ftx2.x + ftx2.y * ftx2.y;
    if denom < 1e-300 {
        return f64::INFINITY;
    }
    (val * val / denom).sqrt()
}

/// Converts an essential matrix to the fundamental matrix acting on pixel
/// coordinates: `F = K2⁻ᵀ E K1⁻¹`, renormalized to unit Frobenius norm.
pub fn essential_to_fundamental(
    e: &EssentialMatrix,
    k1: &CameraIntrinsics,
    k2: &CameraIntrinsics,
) -> FundamentalMatrix {
    let f = k2.inverse_matrix().transpose() * e.matrix() * k1.inverse_matrix();
    FundamentalMatrix::from_rank2(f)
        .expect("K-conjugation of a valid essential matrix keeps rank 2")
}

/// Builds the essential matrix `E = [t]ₓ R` of a pose.
pub fn essential_from_pose(pose: &Pose) -> EssentialMatrix {
    // [t]x R with unit t has singular values (1, 1, 0) exactly.
    let e = skew_symmetric(pose.translation()) * pose.rotation.matrix();
    EssentialMatrix::new(canonical_sign(e)).expect("[t]x R is essential by construction")
}

/// Decomposes an essential matrix into its four pose candidates
/// `{R_a, R_b} × {±t}`, in a fixed deterministic order.
pub fn pose_from_essential(e: &EssentialMatrix) -> Result<Vec<Pose>, GeometryError> {
    let svd = e.matrix().svd(true, true);
    let sv = svd.singular_values;
    if (sv[0] - sv[1]).abs() > 0.10 * sv[0] {
        return Err(GeometryError::DegenerateModel(sv[0], sv[1]));
    }
    let mut u = svd.u.expect("svd with u");
    let mut v_t = svd.v_t.expect("svd with v_t");
    // Make both factors proper rotations; this flips E only by sign.
    if u.determinant() < 0.0 {
        u = -u;
    }
    if v_t.determinant() < 0.0 {
        v_t = -v_t;
    }
    let w = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let ra = Rotation::new(u * w * v_t)?;
    let rb = Rotation::new(u * w.transpose() * v_t)?;
    let t = u.column(2).into_owned();
    Ok(vec![
        Pose::new(ra, t)?,
        Pose::new(ra, -t)?,
        Pose::new(rb, t)?,
        Pose::new(rb, -t)?,
    ])
}

/// Linear (DLT) triangulation of a correspondence; returns the signed depths
/// along the optical axes of the two cameras.
pub fn triangulate_depths(
    pose: &Pose,
    c: &Correspondence,
    k1: &CameraIntrinsics,
    k2: &CameraIntrinsics,
) -> Result<(f64, f64), GeometryError> {
    let p1: Matrix3x4<f64> = k1.matrix() * Matrix3x4::new(
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0,
    );
    let r = pose.rotation.matrix();
    let t = pose.translation();
    let rt = Matrix3x4::new(
        r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x, //
        r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y, //
        r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z,
    );
    let p2 = k2.matrix() * rt;

    let mut a = Matrix4::<f64>::zeros();
    a.set_row(0, &(p1.row(2) * c.u1 - p1.row(0)));
    a.set_row(1, &(p1.row(2) * c.v1 - p1.row(1)));
    a.set_row(2, &(p2.row(2) * c.u2 - p2.row(0)));
    a.set_row(3, &(p2.row(2) * c.v2 - p2.row(1)));

    let svd = a.svd(true, true);
    let sv = svd.singular_values;
    let cond = if sv[2] > 0.0 { sv[0] / sv[2] } else { f64::INFINITY };
    if cond > 1e12 {
        return Err(GeometryError::NearParallelRays(cond));
    }
    let v_t = svd.v_t.expect("svd with v_t");
    let x = v_t.row(3);
    let w = x[3];
    if w.abs() < 1e-300 {
        return Err(GeometryError::NearParallelRays(f64::INFINITY));
    }
    let point = Vector3::new(x[0] / w, x[1] / w, x[2] / w);
    let depth1 = point.z;
    let depth2 = (r * point + t).z;
    Ok((depth1, depth2))
}

/// Picks the pose candidate that places the most sample points in front of
/// both cameras. Returns `None` unless some candidate has a strict majority
/// of positive-depth points. Ties keep the lowest-index candidate.
pub fn cheirality_select(
    candidates: &[Pose],
    sample: &MinimalSample,
    k1: &CameraIntrinsics,
    k2: &CameraIntrinsics,
) -> Option<Pose> {
    best_pose_by_cheirality(candidates, sample.points(), k1, k2)
}

/// `cheirality_select` over an arbitrary correspondence set.
pub fn best_pose_by_cheirality(
    candidates: &[Pose],
    points: &[Correspondence],
    k1: &CameraIntrinsics,
    k2: &CameraIntrinsics,
) -> Option<Pose> {
    let mut best: Option<(usize, &Pose)> = None;
    for pose in candidates {
        let mut count = 0usize;
        for c in points {
            if let Ok((d1, d2)) = triangulate_depths(pose, c, k1, k2) {
                if d1 > 0.0 && d2 > 0.0 {
                    count += 1;
                }
            }
        }
        match best {
            Some((best_count, _)) if count <= best_count => {}
            _ => best = Some((count, pose)),
        }
    }
    let (count, pose) = best?;
    if count * 2 > points.len() {
        Some(*pose)
    } else {
        None
    }
}

/// Rotation and translation errors between two poses, in degrees.
///
/// The rotation error is the angle of `R_est R_gtᵀ`; the translation error is
/// the angle between translation directions, minimized over the `±t` sign
/// ambiguity. Both lie in [0, 180].
pub fn pose_error(estimated: &Pose, ground_truth: &Pose) -> (f64, f64) {
    let r_rel = estimated.rotation.matrix() * ground_truth.rotation.matrix().transpose();
    let rot_deg = ((r_rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
    let dot = estimated.translation().dot(ground_truth.translation());
    let trans_deg = dot.abs().clamp(0.0, 1.0).acos().to_degrees();
    (rot_deg, trans_deg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct projection of 3D points (camera-1 frame) into both views.
    /// Kept deliberately separate from the synth module: it is the oracle
    /// the geometry operations get checked against.
    fn project(
        points: &[Vector3<f64>],
        pose: &Pose,
        k1: &CameraIntrinsics,
        k2: &CameraIntrinsics,
    ) -> Vec<Correspondence> {
        points
            .iter()
            .map(|x| {
                let x2 = pose.rotation.matrix() * x + pose.translation();
                let (u1, v1) = k1.denormalize(x.x / x.z, x.y / x.z);
                let (u2, v2) = k2.denormalize(x2.x / x2.z, x2.y / x2.z);
                Correspondence::new(u1, v1, u2, v2)
            })
            .collect()
    }

    fn test_pose() -> Pose {
        let r = Rotation::from_axis_angle(Vector3::new(0.2, 1.0, -0.1), 0.15).unwrap();
        Pose::new(r, Vector3::new(0.6, 0.1, 0.79)).unwrap()
    }

    fn test_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-1.5..1.5),
                    rng.random_range(4.0..12.0),
                )
            })
            .collect()
    }

    fn random_fundamental(rng: &mut ChaCha8Rng) -> FundamentalMatrix {
        loop {
            let m = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            if let Ok(f) = FundamentalMatrix::project_from(m) {
                return f;
            }
        }
    }

    #[test]
    fn sampson_zero_on_exact_correspondence() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = CameraIntrinsics::new(800.0, 780.0, 320.0, 240.0);
        let pose = test_pose();
        let e = essential_from_pose(&pose);
        let f = essential_to_fundamental(&e, &k, &k);
        for c in project(&test_points(&mut rng, 50), &pose, &k, &k) {
            assert!(sampson_error(&f, &c) < 1e-9, "expected exact epipolar consistency");
        }
    }

    #[test]
    fn sampson_approximates_point_to_line_distance() {
        // With a strongly dominant image-1 focal length the image-1 gradient
        // terms become negligible and the Sampson error approaches the
        // image-2 point-to-line distance.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k1 = CameraIntrinsics::new(9000.0, 9000.0, 320.0, 240.0);
        let k2 = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0);
        let pose = test_pose();
        let e = essential_from_pose(&pose);
        let f = essential_to_fundamental(&e, &k1, &k2);
        for c in project(&test_points(&mut rng, 20), &pose, &k1, &k2) {
            let line = f.matrix() * Vector3::new(c.u1, c.v1, 1.0);
            let norm = (line.x * line.x + line.y * line.y).sqrt();
            let displaced = Correspondence::new(
                c.u1,
                c.v1,
                c.u2 + line.x / norm,
                c.v2 + line.y / norm,
            );
            // Oracle: exact distance from the displaced point to its epipolar line.
            let exact = (Vector3::new(displaced.u2, displaced.v2, 1.0).dot(&line)).abs() / norm;
            assert_relative_eq!(exact, 1.0, epsilon = 1e-9);
            let got = sampson_error(&f, &displaced);
            assert!(
                (got - exact).abs() < 0.05 * exact,
                "sampson {got} vs point-to-line {exact}"
            );
        }
    }

    /// Independent scalar reimplementation of the Sampson formula.
    fn sampson_oracle(f: &Matrix3<f64>, c: &Correspondence) -> f64 {
        let (u1, v1, u2, v2) = (c.u1, c.v1, c.u2, c.v2);
        let val = u2 * (f[(0, 0)] * u1 + f[(0, 1)] * v1 + f[(0, 2)])
            + v2 * (f[(1, 0)] * u1 + f[(1, 1)] * v1 + f[(1, 2)])
            + (f[(2, 0)] * u1 + f[(2, 1)] * v1 + f[(2, 2)]);
        let a = f[(0, 0)] * u1 + f[(0, 1)] * v1 + f[(0, 2)];
        let b = f[(1, 0)] * u1 + f[(1, 1)] * v1 + f[(1, 2)];
        let cc = f[(0, 0)] * u2 + f[(1, 0)] * v2 + f[(2, 0)];
        let d = f[(0, 1)] * u2 + f[(1, 1)] * v2 + f[(2, 1)];
        (val * val / (a * a + b * b + cc * cc + d * d)).sqrt()
    }

    #[test]
    fn sampson_matches_independent_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let f = random_fundamental(&mut rng);
            let c = Correspondence::new(
                rng.random_range(0.0..640.0),
                rng.random_range(0.0..480.0),
                rng.random_range(0.0..640.0),
                rng.random_range(0.0..480.0),
            );
            let got = sampson_error(&f, &c);
            let want = sampson_oracle(f.matrix(), &c);
            assert!((got - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn sampson_swap_transpose_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..1000 {
            let f = random_fundamental(&mut rng);
            let c = Correspondence::new(
                rng.random_range(0.0..640.0),
                rng.random_range(0.0..480.0),
                rng.random_range(0.0..640.0),
                rng.random_range(0.0..480.0),
            );
            let a = sampson_error(&f, &c);
            let b = sampson_error(&f.transposed(), &c.swapped());
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn essential_to_fundamental_identity_intrinsics() {
        let pose = test_pose();
        let e = essential_from_pose(&pose);
        let k = CameraIntrinsics::identity();
        let f = essential_to_fundamental(&e, &k, &k);
        // F must be proportional to E.
        let e_n = e.matrix() / e.matrix().norm();
        let f_m = f.matrix();
        let scale = if (f_m[(0, 0)] - e_n[(0, 0)]).abs() < 1e-9 { 1.0 } else { -1.0 };
        assert!((f_m * scale - e_n).abs().max() < 1e-12);
    }

    #[test]
    fn essential_to_fundamental_epipolar_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k1 = CameraIntrinsics::new(600.0, 620.0, 320.0, 240.0);
        let k2 = CameraIntrinsics::new(700.0, 690.0, 310.0, 250.0);
        let pose = test_pose();
        let e = essential_from_pose(&pose);
        let f = essential_to_fundamental(&e, &k1, &k2);
        for c in project(&test_points(&mut rng, 100), &pose, &k1, &k2) {
            let x1 = Vector3::new(c.u1, c.v1, 1.0);
            let x2 = Vector3::new(c.u2, c.v2, 1.0);
            assert!(x2.dot(&(f.matrix() * x1)).abs() < 1e-9);
        }
    }

    #[test]
    fn essential_to_fundamental_focal_rescaling_keeps_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let k = CameraIntrinsics::new(600.0, 620.0, 320.0, 240.0);
        let k_double = CameraIntrinsics::new(1200.0, 1240.0, 320.0, 240.0);
        let pose = test_pose();
        let e = essential_from_pose(&pose);
        let f = essential_to_fundamental(&e, &k_double, &k_double);
        let sv = f.matrix().svd(false, false).singular_values;
        assert!(sv[2] < 1e-9 * sv[0]);
        // The doubled-focal model is still exactly consistent with the
        // matching doubled-focal projections.
        for c in project(&test_points(&mut rng, 20), &pose, &k_double, &k_double) {
            assert!(sampson_error(&f, &c) < 1e-9);
        }
    }

    #[test]
    fn pose_from_essential_recovers_known_pose() {
        let pose = test_pose();
        let e = essential_from_pose(&pose);
        let candidates = pose_from_essential(&e).unwrap();
        assert_eq!(candidates.len(), 4);
        let best = candidates
            .iter()
            .map(|c| {
                let (r, t) = pose_error(c, &pose);
                r.max(t)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-6, "best candidate error {best} deg");
    }

    #[test]
    fn pose_from_essential_forward_motion_contains_identity() {
        let pose = Pose::new(Rotation::identity(), Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let e = essential_from_pose(&pose);
        let candidates = pose_from_essential(&e).unwrap();
        let hit = candidates.iter().any(|c| {
            let (r, t) = pose_error(c, &pose);
            r < 1e-9 && t < 1e-9 && c.translation().z > 0.0
        });
        assert!(hit, "candidate set must contain (I, (0,0,1))");
    }

    #[test]
    fn pose_from_essential_round_trip() {
        let pose = test_pose();
        let e = essential_from_pose(&pose);
        for candidate in pose_from_essential(&e).unwrap() {
            let e2 = essential_from_pose(&candidate);
            let a = e.matrix() / e.matrix().norm();
            let b = e2.matrix() / e2.matrix().norm();
            let dist = (a - b).abs().max().min((a + b).abs().max());
            assert!(dist < 1e-9, "recompose distance {dist}");
        }
    }

    #[test]
    fn pose_from_essential_rejects_unequal_singular_values() {
        // Bypass the validated constructor to feed a matrix with a 2:1
        // singular value gap into the decomposition.
        let m = Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 0.0));
        let e = EssentialMatrix(m);
        assert!(matches!(pose_from_essential(&e), Err(GeometryError::DegenerateModel(_, _))));
    }

    #[test]
    fn triangulate_recovers_depth() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0);
        let pose = Pose::new(Rotation::identity(), Vector3::new(0.2, 0.0, 0.98)).unwrap();
        let point = Vector3::new(0.4, -0.3, 5.0);
        let c = project(&[point], &pose, &k, &k)[0];
        let (d1, d2) = triangulate_depths(&pose, &c, &k, &k).unwrap();
        assert_relative_eq!(d1, 5.0, epsilon = 1e-6);
        let expected_d2 = (pose.rotation.matrix() * point + pose.translation()).z;
        assert_relative_eq!(d2, expected_d2, epsilon = 1e-6);
    }

    #[test]
    fn triangulate_sign_for_point_behind_camera() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0);
        let pose = Pose::new(Rotation::identity(), Vector3::new(0.3, 0.0, -0.954)).unwrap();
        // Construct projections of a point behind camera 1.
        let point = Vector3::new(0.2, 0.1, -6.0);
        let x2 = pose.rotation.matrix() * point + pose.translation();
        let (u1, v1) = k.denormalize(point.x / point.z, point.y / point.z);
        let (u2, v2) = k.denormalize(x2.x / x2.z, x2.y / x2.z);
        let c = Correspondence::new(u1, v1, u2, v2);
        let (d1, _) = triangulate_depths(&pose, &c, &k, &k).unwrap();
        assert!(d1 < 0.0, "depth1 should be negative, got {d1}");
    }

    #[test]
    fn triangulate_detects_parallel_rays() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0);
        // Dominantly sideways translation, with a small forward component so
        // the epipole stays finite. A point on the baseline ray projects to
        // the epipole in both images: the rays are collinear.
        let t = Vector3::new(0.9, 0.0, 0.436);
        let pose = Pose::new(Rotation::identity(), t).unwrap();
        let point = t * 5.0;
        let c = project(&[point], &pose, &k, &k)[0];
        assert!(matches!(
            triangulate_depths(&pose, &c, &k, &k),
            Err(GeometryError::NearParallelRays(_))
        ));
    }

    #[test]
    fn cheirality_selects_ground_truth_pose() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0);
        let pose = test_pose();
        let e = essential_from_pose(&pose);
        let candidates = pose_from_essential(&e).unwrap();
        let corrs = project(&test_points(&mut rng, 5), &pose, &k, &k);
        let sample = MinimalSample::new(corrs).unwrap();
        let selected = cheirality_select(&candidates, &sample, &k, &k).unwrap();
        let (r, t) = pose_error(&selected, &pose);
        assert!(r < 1e-6 && t < 1e-6);
    }

    #[test]
    fn cheirality_returns_none_without_majority() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0);
        // A single candidate that puts every point behind camera 1.
        let pose = Pose::new(Rotation::identity(), Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let points = vec![
            Vector3::new(0.1, 0.0, -5.0),
            Vector3::new(-0.2, 0.1, -6.0),
            Vector3::new(0.3, -0.1, -7.0),
            Vector3::new(0.0, 0.2, -4.0),
            Vector3::new(-0.1, -0.2, -8.0),
        ];
        let corrs = project(&points, &pose, &k, &k);
        let sample = MinimalSample::new(corrs).unwrap();
        assert!(cheirality_select(&[pose], &sample, &k, &k).is_none());
    }

    #[test]
    fn cheirality_tie_break_is_lowest_index() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0);
        let pose = Pose::new(Rotation::identity(), Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let corrs = project(&test_points(&mut rng, 5), &pose, &k, &k);
        let sample = MinimalSample::new(corrs).unwrap();
        // Identical candidates tie on the positive-depth count.
        let selected = best_pose_by_cheirality(&[pose, pose], sample.points(), &k, &k).unwrap();
        assert_eq!(selected, pose);
    }

    #[test]
    fn pose_error_identity_and_constructed_rotation() {
        let pose = test_pose();
        assert_eq!(pose_error(&pose, &pose), (0.0, 0.0));

        let extra = Rotation::from_axis_angle(Vector3::new(1.0, 2.0, 0.5), 10f64.to_radians())
            .unwrap();
        let rotated = Pose::new(
            Rotation::new(extra.matrix() * pose.rotation.matrix()).unwrap(),
            *pose.translation(),
        )
        .unwrap();
        let (r, t) = pose_error(&rotated, &pose);
        assert_relative_eq!(r, 10.0, epsilon = 1e-9);
        assert!(t < 1e-9);
    }

    #[test]
    fn pose_error_is_sign_agnostic_in_translation() {
        let pose = test_pose();
        let flipped = Pose::new(pose.rotation, -pose.translation()).unwrap();
        let (r, t) = pose_error(&flipped, &pose);
        assert_eq!(r, 0.0);
        assert_eq!(t, 0.0);
    }

    #[test]
    fn pose_error_is_a_premetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..100 {
            let ra = Rotation::from_axis_angle(
                Vector3::new(rng.random(), rng.random(), rng.random::<f64>() + 0.1),
                rng.random_range(0.0..1.0),
            )
            .unwrap();
            let rb = Rotation::from_axis_angle(
                Vector3::new(rng.random(), rng.random(), rng.random::<f64>() + 0.1),
                rng.random_range(0.0..1.0),
            )
            .unwrap();
            let pa = Pose::new(ra, Vector3::new(rng.random(), rng.random(), rng.random::<f64>() + 0.1)).unwrap();
            let pb = Pose::new(rb, Vector3::new(rng.random(), rng.random(), rng.random::<f64>() + 0.1)).unwrap();
            let (r_ab, t_ab) = pose_error(&pa, &pb);
            let (r_ba, t_ba) = pose_error(&pb, &pa);
            assert!(r_ab >= 0.0 && t_ab >= 0.0);
            assert!((r_ab - r_ba).abs() < 1e-12 * r_ab.max(1.0));
            assert!((t_ab - t_ba).abs() < 1e-12 * t_ab.max(1.0));
        }
    }

    #[test]
    fn minimal_sample_rejects_duplicates() {
        let c = Correspondence::new(1.0, 2.0, 3.0, 4.0);
        let err = MinimalSample::new(vec![c, c]);
        assert!(matches!(err, Err(GeometryError::InvalidSample(_))));
    }

    #[test]
    fn constructed_models_satisfy_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..100 {
            let f = random_fundamental(&mut rng);
            assert!(FundamentalMatrix::new(*f.matrix()).is_ok());
            let m = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            if let Ok(e) = EssentialMatrix::project_from(m) {
                assert!(EssentialMatrix::new(*e.matrix()).is_ok());
            }
        }
    }
}
