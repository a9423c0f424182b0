//! Synthetic two-view scene generation with configurable motion priors,
//! noise and outliers.
//!
//! Scenes come with ground-truth pose and epipolar models, per-correspondence
//! inlier flags, and simulated match-quality scores (Beta-distributed, so a
//! PROSAC ordering built on them is informative but imperfect). Generation is
//! fully deterministic given the config seed.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use thiserror::Error;

use crate::geometry::{
    essential_from_pose, essential_to_fundamental, sampson_error, CameraIntrinsics,
    Correspondence, EssentialMatrix, FundamentalMatrix, Pose, Rotation,
};

/// Errors produced by scene generation and scene file IO.
#[derive(Debug, Error)]
pub enum SynthError {
    #[error("scene config field `{field}` is invalid: {message}")]
    InvalidConfig { field: &'static str, message: String },
    #[error("scene generation produced only {produced} of {requested} points after 10x oversampling")]
    GenerationFailed { produced: usize, requested: usize },
    #[error("scene file format error: {0}")]
    Format(String),
    #[error("scene file io error: {0}")]
    Io(#[from] std::io::Error),
}

/// The camera motion family a scene is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionKind {
    /// Uniform rotation axis, angle up to 30 degrees, uniform translation.
    General,
    /// Forward-dominant translation and yaw-dominant rotation.
    Driving,
    /// Rotation about a near-vertical or near-horizontal axis, translation
    /// with limited elevation.
    Collection,
}

impl fmt::Display for MotionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MotionKind::General => "general",
            MotionKind::Driving => "driving",
            MotionKind::Collection => "collection",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for MotionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(MotionKind::General),
            "driving" => Ok(MotionKind::Driving),
            "collection" => Ok(MotionKind::Collection),
            other => Err(format!("unknown motion kind `{other}`")),
        }
    }
}

/// Parameters of a synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub n_points: usize,
    /// Scene depth range along the first camera's optical axis, scene units.
    pub depth_min: f64,
    pub depth_max: f64,
    /// Image size in pixels, shared by both views.
    pub image_width: f64,
    pub image_height: f64,
    /// Intrinsics, shared by both views.
    pub intrinsics: CameraIntrinsics,
    /// Standard deviation of the pixel noise added to inliers, per coordinate.
    pub noise_sigma: f64,
    /// Fraction of correspondences replaced by outliers, in [0, 1).
    pub outlier_ratio: f64,
    pub motion: MotionKind,
    /// Fraction of scenes whose 3D points all lie on one plane.
    pub planar_fraction: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            n_points: 500,
            depth_min: 4.0,
            depth_max: 20.0,
            image_width: 640.0,
            image_height: 480.0,
            intrinsics: CameraIntrinsics::new(600.0, 600.0, 320.0, 240.0),
            noise_sigma: 0.5,
            outlier_ratio: 0.0,
            motion: MotionKind::General,
            planar_fraction: 0.0,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        fn err(field: &'static str, message: impl Into<String>) -> SynthError {
            SynthError::InvalidConfig { field, message: message.into() }
        }
        if self.n_points < 8 {
            return Err(err("n_points", format!("must be >= 8, got {}", self.n_points)));
        }
        if !(self.depth_min > 0.0 && self.depth_max > self.depth_min) {
            return Err(err("depth_min/depth_max", "need 0 < depth_min < depth_max"));
        }
        if !(self.image_width > 0.0 && self.image_height > 0.0) {
            return Err(err("image_width/image_height", "must be positive"));
        }
        if !(self.intrinsics.fx > 0.0 && self.intrinsics.fy > 0.0) {
            return Err(err("fx/fy", "focal lengths must be positive"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(err("noise_sigma", format!("must be >= 0, got {}", self.noise_sigma)));
        }
        if !(0.0..1.0).contains(&self.outlier_ratio) {
            return Err(err("outlier_ratio", format!("must be in [0, 1), got {}", self.outlier_ratio)));
        }
        if !(0.0..=1.0).contains(&self.planar_fraction) {
            return Err(err("planar_fraction", format!("must be in [0, 1], got {}", self.planar_fraction)));
        }
        Ok(())
    }
}

/// A generated two-view scene with ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub config: SceneConfig,
    pub correspondences: Vec<Correspondence>,
    /// Simulated match-quality scores in (0, 1), one per correspondence.
    pub quality: Vec<f64>,
    /// True for correspondences consistent with the ground-truth model.
    pub inlier_flags: Vec<bool>,
    pub gt_pose: Pose,
    pub gt_essential: EssentialMatrix,
    pub gt_fundamental: FundamentalMatrix,
    pub k1: CameraIntrinsics,
    pub k2: CameraIntrinsics,
    /// Whether the scene's 3D points were drawn from a single plane.
    pub planar: bool,
}

fn rot_about(axis: Vector3<f64>, angle_rad: f64) -> Rotation {
    Rotation::from_axis_angle(axis, angle_rad).expect("nonzero axis")
}

/// Draws a relative pose from the given motion family.
pub fn sample_motion(kind: MotionKind, rng: &mut ChaCha8Rng) -> Pose {
    // Camera frame: x right, y down (vertical), z forward.
    match kind {
        MotionKind::Driving => {
            let yaw = rng.random_range(-10f64..10.0).to_radians();
            let pitch = rng.random_range(-1f64..1.0).to_radians();
            let roll = rng.random_range(-1f64..1.0).to_radians();
            let r = rot_about(Vector3::y(), yaw).matrix()
                * rot_about(Vector3::x(), pitch).matrix()
                * rot_about(Vector3::z(), roll).matrix();
            let azimuth = rng.random_range(-15f64..15.0).to_radians();
            let elevation = rng.random_range(-2f64..2.0).to_radians();
            let t = Vector3::new(
                azimuth.sin() * elevation.cos(),
                elevation.sin(),
                azimuth.cos() * elevation.cos(),
            );
            Pose::new(Rotation::new(r).expect("product of rotations"), t).expect("unit t")
        }
        MotionKind::Collection => {
            let deviation = rng.random_range(0f64..5.0).to_radians();
            let phi = rng.random_range(0f64..std::f64::consts::TAU);
            let axis = if rng.random::<bool>() {
                // Near-vertical axis.
                Vector3::new(
                    deviation.sin() * phi.cos(),
                    deviation.cos(),
                    deviation.sin() * phi.sin(),
                )
            } else {
                // Near-horizontal axis: elevation within the deviation cone.
                Vector3::new(
                    deviation.cos() * phi.cos(),
                    deviation.sin(),
                    deviation.cos() * phi.sin(),
                )
            };
            let angle = rng.random_range(0f64..30.0).to_radians();
            let az = rng.random_range(0f64..std::f64::consts::TAU);
            let el = rng.random_range(-20f64..20.0).to_radians();
            let t = Vector3::new(el.cos() * az.cos(), el.sin(), el.cos() * az.sin());
            Pose::new(rot_about(axis, angle), t).expect("unit t")
        }
        MotionKind::General => {
            let axis = random_unit_vector(rng);
            let angle = rng.random_range(0f64..30.0).to_radians();
            let t = random_unit_vector(rng);
            Pose::new(rot_about(axis, angle), t).expect("unit t")
        }
    }
}

fn random_unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    loop {
        let v = Vector3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Distance of the second image point from the epipolar line of the first.
fn epipolar_line_distance(f: &FundamentalMatrix, c: &Correspondence) -> f64 {
    let line = f.matrix() * Vector3::new(c.u1, c.v1, 1.0);
    let norm = (line.x * line.x + line.y * line.y).sqrt();
    if norm < 1e-300 {
        return f64::INFINITY;
    }
    (line.x * c.u2 + line.y * c.v2 + line.z).abs() / norm
}

/// Generates a scene from the config. Fails if fewer than `n_points`
/// correspondences survive frustum and image-bounds rejection after 10x
/// oversampling.
pub fn generate_scene(config: &SceneConfig) -> Result<SyntheticScene, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.intrinsics;
    let (w, h) = (config.image_width, config.image_height);

    let gt_pose = sample_motion(config.motion, &mut rng);
    let gt_essential = essential_from_pose(&gt_pose);
    let gt_fundamental = essential_to_fundamental(&gt_essential, &k, &k);

    let planar = rng.random::<f64>() < config.planar_fraction;
    // Plane through the mid-depth point on the optical axis, tilted at most
    // 50 degrees away from fronto-parallel.
    let plane = if planar {
        let tilt = rng.random_range(0f64..50.0).to_radians();
        let phi = rng.random_range(0f64..std::f64::consts::TAU);
        let normal = Vector3::new(tilt.sin() * phi.cos(), tilt.sin() * phi.sin(), -tilt.cos());
        let point = Vector3::new(0.0, 0.0, 0.5 * (config.depth_min + config.depth_max));
        Some((point, normal))
    } else {
        None
    };

    let noise = Normal::new(0.0, config.noise_sigma.max(f64::MIN_POSITIVE))
        .expect("valid noise sigma");
    let beta_inlier = Beta::new(5.0, 2.0).expect("valid beta");
    let beta_outlier = Beta::new(2.0, 5.0).expect("valid beta");

    let mut correspondences = Vec::with_capacity(config.n_points);
    let mut quality = Vec::with_capacity(config.n_points);
    let mut inlier_flags = Vec::with_capacity(config.n_points);

    let r = gt_pose.rotation.matrix();
    let t = gt_pose.translation();
    let max_attempts = 10 * config.n_points;
    let mut attempts = 0;
    while correspondences.len() < config.n_points && attempts < max_attempts {
        attempts += 1;
        let u1 = rng.random_range(0.0..w);
        let v1 = rng.random_range(0.0..h);
        let (x, y) = k.normalize(u1, v1);
        let ray = Vector3::new(x, y, 1.0);
        let point = match plane {
            Some((p0, n)) => {
                let denom = ray.dot(&n);
                if denom.abs() < 1e-9 {
                    continue;
                }
                let lambda = p0.dot(&n) / denom;
                let point = ray * lambda;
                if point.z < 0.25 * config.depth_min || point.z > 4.0 * config.depth_max {
                    continue;
                }
                point
            }
            None => ray * rng.random_range(config.depth_min..config.depth_max),
        };
        let point2 = r * point + t;
        if point2.z <= 1e-3 {
            continue;
        }
        let (u2, v2) = k.denormalize(point2.x / point2.z, point2.y / point2.z);
        if !(0.0..=w).contains(&u2) || !(0.0..=h).contains(&v2) {
            continue;
        }

        if rng.random::<f64>() < config.outlier_ratio {
            // Replace the second image point with a uniform draw far from
            // the true epipolar line.
            let (u1n, v1n) = if config.noise_sigma > 0.0 {
                (u1 + noise.sample(&mut rng), v1 + noise.sample(&mut rng))
            } else {
                (u1, v1)
            };
            if !(0.0..=w).contains(&u1n) || !(0.0..=h).contains(&v1n) {
                continue;
            }
            let mut placed = false;
            for _ in 0..100 {
                let cand = Correspondence::new(
                    u1n,
                    v1n,
                    rng.random_range(0.0..w),
                    rng.random_range(0.0..h),
                );
                if epipolar_line_distance(&gt_fundamental, &cand) >= 10.0
                    && sampson_error(&gt_fundamental, &cand) > 5.0
                {
                    correspondences.push(cand);
                    quality.push(beta_outlier.sample(&mut rng));
                    inlier_flags.push(false);
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue;
            }
        } else {
            let c = if config.noise_sigma > 0.0 {
                Correspondence::new(
                    u1 + noise.sample(&mut rng),
                    v1 + noise.sample(&mut rng),
                    u2 + noise.sample(&mut rng),
                    v2 + noise.sample(&mut rng),
                )
            } else {
                Correspondence::new(u1, v1, u2, v2)
            };
            if !(0.0..=w).contains(&c.u1)
                || !(0.0..=h).contains(&c.v1)
                || !(0.0..=w).contains(&c.u2)
                || !(0.0..=h).contains(&c.v2)
            {
                continue;
            }
            correspondences.push(c);
            quality.push(beta_inlier.sample(&mut rng));
            inlier_flags.push(true);
        }
    }

    if correspondences.len() < config.n_points {
        return Err(SynthError::GenerationFailed {
            produced: correspondences.len(),
            requested: config.n_points,
        });
    }

    Ok(SyntheticScene {
        config: config.clone(),
        correspondences,
        quality,
        inlier_flags,
        gt_pose,
        gt_essential,
        gt_fundamental,
        k1: k,
        k2: k,
        planar,
    })
}

fn write_f64s(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{v}"));
    }
}

/// Serializes a scene to the plain-text scene format.
pub fn save_scene(scene: &SyntheticScene, path: &Path) -> Result<(), SynthError> {
    let mut out = String::new();
    out.push_str("NEFSCENE v1\n");
    let c = &scene.config;
    out.push_str(&format!("n_points = {}\n", c.n_points));
    out.push_str(&format!("depth_min = {}\n", c.depth_min));
    out.push_str(&format!("depth_max = {}\n", c.depth_max));
    out.push_str(&format!("image_width = {}\n", c.image_width));
    out.push_str(&format!("image_height = {}\n", c.image_height));
    out.push_str(&format!("fx = {}\n", c.intrinsics.fx));
    out.push_str(&format!("fy = {}\n", c.intrinsics.fy));
    out.push_str(&format!("cx = {}\n", c.intrinsics.cx));
    out.push_str(&format!("cy = {}\n", c.intrinsics.cy));
    out.push_str(&format!("noise_sigma = {}\n", c.noise_sigma));
    out.push_str(&format!("outlier_ratio = {}\n", c.outlier_ratio));
    out.push_str(&format!("motion = {}\n", c.motion));
    out.push_str(&format!("planar_fraction = {}\n", c.planar_fraction));
    out.push_str(&format!("planar = {}\n", u8::from(scene.planar)));
    out.push_str(&format!("seed = {}\n", c.seed));

    out.push_str("gt_f = ");
    write_f64s(&mut out, scene.gt_fundamental.matrix().transpose().as_slice());
    out.push('\n');
    out.push_str("gt_r = ");
    write_f64s(&mut out, scene.gt_pose.rotation.matrix().transpose().as_slice());
    out.push('\n');
    out.push_str("gt_t = ");
    write_f64s(&mut out, scene.gt_pose.translation().as_slice());
    out.push('\n');
    out.push_str("k1 = ");
    write_f64s(&mut out, &[scene.k1.fx, scene.k1.fy, scene.k1.cx, scene.k1.cy]);
    out.push('\n');
    out.push_str("k2 = ");
    write_f64s(&mut out, &[scene.k2.fx, scene.k2.fy, scene.k2.cx, scene.k2.cy]);
    out.push('\n');

    out.push_str(&format!("correspondences = {}\n", scene.correspondences.len()));
    for (i, corr) in scene.correspondences.iter().enumerate() {
        write_f64s(
            &mut out,
            &[corr.u1, corr.v1, corr.u2, corr.v2, scene.quality[i]],
        );
        out.push_str(&format!(" {}\n", u8::from(scene.inlier_flags[i])));
    }

    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

fn parse_f64s(value: &str, expected: usize, what: &str) -> Result<Vec<f64>, SynthError> {
    let vals: Result<Vec<f64>, _> = value.split_whitespace().map(str::parse::<f64>).collect();
    let vals = vals.map_err(|e| SynthError::Format(format!("bad {what}: {e}")))?;
    if vals.len() != expected {
        return Err(SynthError::Format(format!(
            "{what}: expected {expected} values, found {}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn matrix3_from_row_major(v: &[f64]) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8])
}

/// Loads a scene from the plain-text scene format.
///
/// Unknown config keys are ignored and missing config keys fall back to
/// defaults, so files written by older revisions with the same version tag
/// keep loading. The ground-truth block and the correspondence records are
/// mandatory.
pub fn load_scene(path: &Path) -> Result<SyntheticScene, SynthError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("NEFSCENE v1") => {}
        other => {
            return Err(SynthError::Format(format!(
                "bad header line: expected `NEFSCENE v1`, found {other:?}"
            )))
        }
    }

    let mut config = SceneConfig::default();
    let mut planar = false;
    let mut gt_f: Option<FundamentalMatrix> = None;
    let mut gt_r: Option<Rotation> = None;
    let mut gt_t: Option<Vector3<f64>> = None;
    let mut k1: Option<CameraIntrinsics> = None;
    let mut k2: Option<CameraIntrinsics> = None;
    let mut n_corr: Option<usize> = None;

    fn parse_scalar<T: std::str::FromStr>(value: &str, key: &str) -> Result<T, SynthError>
    where
        T::Err: fmt::Display,
    {
        value
            .trim()
            .parse::<T>()
            .map_err(|e| SynthError::Format(format!("bad value for `{key}`: {e}")))
    }

    for line in lines.by_ref() {
        let Some((key, value)) = line.split_once('=') else {
            return Err(SynthError::Format(format!("expected `key = value`, found `{line}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "n_points" => config.n_points = parse_scalar(value, key)?,
            "depth_min" => config.depth_min = parse_scalar(value, key)?,
            "depth_max" => config.depth_max = parse_scalar(value, key)?,
            "image_width" => config.image_width = parse_scalar(value, key)?,
            "image_height" => config.image_height = parse_scalar(value, key)?,
            "fx" => config.intrinsics.fx = parse_scalar(value, key)?,
            "fy" => config.intrinsics.fy = parse_scalar(value, key)?,
            "cx" => config.intrinsics.cx = parse_scalar(value, key)?,
            "cy" => config.intrinsics.cy = parse_scalar(value, key)?,
            "noise_sigma" => config.noise_sigma = parse_scalar(value, key)?,
            "outlier_ratio" => config.outlier_ratio = parse_scalar(value, key)?,
            "motion" => {
                config.motion = value.parse().map_err(SynthError::Format)?;
            }
            "planar_fraction" => config.planar_fraction = parse_scalar(value, key)?,
            "planar" => planar = parse_scalar::<u8>(value, key)? != 0,
            "seed" => config.seed = parse_scalar(value, key)?,
            "gt_f" => {
                let v = parse_f64s(value, 9, "gt_f")?;
                gt_f = Some(
                    FundamentalMatrix::new(matrix3_from_row_major(&v))
                        .map_err(|e| SynthError::Format(format!("gt_f: {e}")))?,
                );
            }
            "gt_r" => {
                let v = parse_f64s(value, 9, "gt_r")?;
                gt_r = Some(
                    Rotation::new(matrix3_from_row_major(&v))
                        .map_err(|e| SynthError::Format(format!("gt_r: {e}")))?,
                );
            }
            "gt_t" => {
                let v = parse_f64s(value, 3, "gt_t")?;
                gt_t = Some(Vector3::new(v[0], v[1], v[2]));
            }
            "k1" => {
                let v = parse_f64s(value, 4, "k1")?;
                k1 = Some(CameraIntrinsics::new(v[0], v[1], v[2], v[3]));
            }
            "k2" => {
                let v = parse_f64s(value, 4, "k2")?;
                k2 = Some(CameraIntrinsics::new(v[0], v[1], v[2], v[3]));
            }
            "correspondences" => {
                n_corr = Some(parse_scalar(value, key)?);
                break;
            }
            // Forward compatibility: unknown config keys are ignored.
            _ => {}
        }
    }

    let gt_f = gt_f.ok_or_else(|| SynthError::Format("missing gt_f block".to_string()))?;
    let gt_r = gt_r.ok_or_else(|| SynthError::Format("missing gt_r block".to_string()))?;
    let gt_t = gt_t.ok_or_else(|| SynthError::Format("missing gt_t block".to_string()))?;
    let k1 = k1.ok_or_else(|| SynthError::Format("missing k1 block".to_string()))?;
    let k2 = k2.ok_or_else(|| SynthError::Format("missing k2 block".to_string()))?;
    let n_corr =
        n_corr.ok_or_else(|| SynthError::Format("missing correspondences count".to_string()))?;

    let gt_pose = Pose::new(gt_r, gt_t).map_err(|e| SynthError::Format(e.to_string()))?;
    let gt_essential = essential_from_pose(&gt_pose);

    let mut correspondences = Vec::with_capacity(n_corr);
    let mut quality = Vec::with_capacity(n_corr);
    let mut inlier_flags = Vec::with_capacity(n_corr);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let v = parse_f64s(line, 6, "correspondence record")?;
        correspondences.push(Correspondence::new(v[0], v[1], v[2], v[3]));
        quality.push(v[4]);
        inlier_flags.push(v[5] != 0.0);
    }
    if correspondences.len() != n_corr {
        return Err(SynthError::Format(format!(
            "expected {n_corr} correspondence records, found {}",
            correspondences.len()
        )));
    }

    Ok(SyntheticScene {
        config,
        correspondences,
        quality,
        inlier_flags,
        gt_pose,
        gt_essential,
        gt_fundamental: gt_f,
        k1,
        k2,
        planar,
    })
}
