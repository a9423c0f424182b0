//! Non-minimal least-squares solver (8 or more correspondences), used by
//! the local-optimization refinement step.

use nalgebra::SMatrix;

use super::{epipolar_row, hartley_normalize, matrix_from_row_major, Problem, SolverError};
use crate::geometry::{
    CameraIntrinsics, Correspondence, EssentialMatrix, FundamentalMatrix,
};

/// Either epipolar model, as returned by the problem-dispatching entry point.
#[derive(Debug, Clone, Copy)]
pub enum EpipolarModel {
    Essential(EssentialMatrix),
    Fundamental(FundamentalMatrix),
}

/// Least-squares fit of the epipolar constraint over point pairs given as
/// `(x1, y1, x2, y2)` tuples; returns the row-major 9-vector minimizing
/// `||A f||` over unit `f`, or `DegenerateSample` when the design matrix
/// drops below rank 8.
fn least_squares_nullvector(points: &[(f64, f64, f64, f64)]) -> Result<[f64; 9], SolverError> {
    // Accumulate AᵀA; its smallest-eigenvalue eigenvector is the solution.
    let mut ata = SMatrix::<f64, 9, 9>::zeros();
    for &(x1, y1, x2, y2) in points {
        let row = epipolar_row((x1, y1), (x2, y2));
        for i in 0..9 {
            for j in i..9 {
                ata[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..9 {
        for j in 0..i {
            ata[(i, j)] = ata[(j, i)];
        }
    }
    let eig = ata.symmetric_eigen();
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite eigenvalues")
    });
    // Eigenvalues of AᵀA are squared singular values of A: rank 8 needs the
    // second-smallest to clear the largest by a healthy margin.
    let second = eig.eigenvalues[order[1]].max(0.0);
    let largest = eig.eigenvalues[order[8]].max(0.0);
    if second < 1e-22 * largest {
        return Err(SolverError::DegenerateSample("design matrix rank below 8"));
    }
    let v = eig.eigenvectors.column(order[0]);
    let mut f = [0.0f64; 9];
    for i in 0..9 {
        f[i] = v[i];
    }
    Ok(f)
}

/// Least-squares fundamental matrix from 8 or more pixel correspondences.
pub fn eight_point_fundamental(
    inliers: &[Correspondence],
) -> Result<FundamentalMatrix, SolverError> {
    if inliers.len() < 8 {
        return Err(SolverError::WrongSampleSize { expected: 8, found: inliers.len() });
    }
    let pts1: Vec<(f64, f64)> = inliers.iter().map(|c| (c.u1, c.v1)).collect();
    let pts2: Vec<(f64, f64)> = inliers.iter().map(|c| (c.u2, c.v2)).collect();
    let (n1, t1) = hartley_normalize(&pts1)
        .ok_or(SolverError::DegenerateSample("coincident points in image 1"))?;
    let (n2, t2) = hartley_normalize(&pts2)
        .ok_or(SolverError::DegenerateSample("coincident points in image 2"))?;
    let tuples: Vec<(f64, f64, f64, f64)> = n1
        .iter()
        .zip(n2.iter())
        .map(|(a, b)| (a.0, a.1, b.0, b.1))
        .collect();
    let f = least_squares_nullvector(&tuples)?;
    let f_pix = t2.transpose() * matrix_from_row_major(&f) * t1;
    FundamentalMatrix::project_from(f_pix)
        .map_err(|_| SolverError::SolverFailure("rank-2 projection failed"))
}

/// Least-squares essential matrix from 8 or more pixel correspondences,
/// projected onto the equal-singular-value manifold.
pub fn eight_point_essential(
    inliers: &[Correspondence],
    k1: &CameraIntrinsics,
    k2: &CameraIntrinsics,
) -> Result<EssentialMatrix, SolverError> {
    if inliers.len() < 8 {
        return Err(SolverError::WrongSampleSize { expected: 8, found: inliers.len() });
    }
    let tuples: Vec<(f64, f64, f64, f64)> = inliers
        .iter()
        .map(|c| {
            let (x1, y1) = k1.normalize(c.u1, c.v1);
            let (x2, y2) = k2.normalize(c.u2, c.v2);
            (x1, y1, x2, y2)
        })
        .collect();
    let e = least_squares_nullvector(&tuples)?;
    EssentialMatrix::project_from(matrix_from_row_major(&e))
        .map_err(|_| SolverError::SolverFailure("essential projection failed"))
}

/// Problem-dispatching wrapper over the two typed fits.
pub fn eight_point_least_squares(
    inliers: &[Correspondence],
    problem: Problem,
    k1: &CameraIntrinsics,
    k2: &CameraIntrinsics,
) -> Result<EpipolarModel, SolverError> {
    match problem {
        Problem::Essential => eight_point_essential(inliers, k1, k2).map(EpipolarModel::Essential),
        Problem::Fundamental => eight_point_fundamental(inliers).map(EpipolarModel::Fundamental),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{essential_to_fundamental, sampson_error};
    use crate::solvers::seven_point_fundamental;
    use crate::geometry::MinimalSample;
    use crate::synth::{generate_scene, MotionKind, SceneConfig};

    fn scene(noise: f64, seed: u64) -> crate::synth::SyntheticScene {
        generate_scene(&SceneConfig {
            noise_sigma: noise,
            outlier_ratio: 0.0,
            motion: MotionKind::General,
            n_points: 100,
            seed,
            ..SceneConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn noise_free_fit_matches_ground_truth() {
        let scene = scene(0.0, 41);
        let f = eight_point_fundamental(&scene.correspondences).unwrap();
        for c in &scene.correspondences {
            assert!(sampson_error(&f, c) < 1e-6);
        }
        let e = eight_point_essential(&scene.correspondences, &scene.k1, &scene.k2).unwrap();
        let f_from_e = essential_to_fundamental(&e, &scene.k1, &scene.k2);
        for c in &scene.correspondences {
            assert!(sampson_error(&f_from_e, c) < 1e-6);
        }
    }

    #[test]
    fn least_squares_beats_best_minimal_sample_on_noisy_inliers() {
        let scene = scene(0.5, 42);
        let ls = eight_point_fundamental(&scene.correspondences).unwrap();
        let mean = |f: &FundamentalMatrix| {
            scene.correspondences.iter().map(|c| sampson_error(f, c)).sum::<f64>()
                / scene.correspondences.len() as f64
        };
        let ls_mean = mean(&ls);
        // Best model from a handful of minimal samples over the same points.
        let mut best_minimal = f64::INFINITY;
        for start in 0..10 {
            let pts: Vec<_> = (0..7).map(|i| scene.correspondences[start * 7 + i]).collect();
            let sample = MinimalSample::new(pts).unwrap();
            if let Ok(out) = seven_point_fundamental(&sample) {
                for f in &out.models {
                    best_minimal = best_minimal.min(mean(f));
                }
            }
        }
        assert!(
            ls_mean <= best_minimal,
            "least-squares mean {ls_mean} vs best minimal {best_minimal}"
        );
    }

    #[test]
    fn rank_deficient_input_does_not_crash() {
        // All points on one plane induce a rank-deficient design; either a
        // model or DegenerateSample is acceptable, never a panic.
        let planar = generate_scene(&SceneConfig {
            noise_sigma: 0.0,
            planar_fraction: 1.0,
            n_points: 8,
            seed: 43,
            ..SceneConfig::default()
        })
        .unwrap();
        let _ = eight_point_fundamental(&planar.correspondences);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let scene = scene(0.0, 44);
        assert!(matches!(
            eight_point_fundamental(&scene.correspondences[..7]),
            Err(SolverError::WrongSampleSize { .. })
        ));
    }
}
