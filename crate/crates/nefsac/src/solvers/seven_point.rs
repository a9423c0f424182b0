//! The 7-point minimal solver for the fundamental matrix.

use nalgebra::{DMatrix, Matrix3};

use super::{
    dedup_models, epipolar_row, hartley_normalize, matrix_from_row_major, solve_cubic,
    SolverError, SolverOutput,
};
use crate::geometry::{FundamentalMatrix, MinimalSample};

/// Determinant of a matrix mixing rows of `a` and `b`: row `i` comes from
/// `b` when bit `i` of `mask` is set.
fn det_mixed(a: &Matrix3<f64>, b: &Matrix3<f64>, mask: u8) -> f64 {
    let mut m = *a;
    for i in 0..3 {
        if mask & (1 << i) != 0 {
            m.set_row(i, &b.row(i));
        }
    }
    m.determinant()
}

/// Solves the fundamental matrix from exactly 7 correspondences.
///
/// Returns 1 to 3 rank-2, Frobenius-normalized candidates in pixel units.
/// Fails with `DegenerateSample` when the 7x9 design matrix drops rank
/// (coincident or collinear configurations).
pub fn seven_point_fundamental(
    sample: &MinimalSample,
) -> Result<SolverOutput<FundamentalMatrix>, SolverError> {
    if sample.len() != 7 {
        return Err(SolverError::WrongSampleSize { expected: 7, found: sample.len() });
    }
    let pts1: Vec<(f64, f64)> = sample.points().iter().map(|c| (c.u1, c.v1)).collect();
    let pts2: Vec<(f64, f64)> = sample.points().iter().map(|c| (c.u2, c.v2)).collect();
    let (n1, t1) = hartley_normalize(&pts1)
        .ok_or(SolverError::DegenerateSample("coincident points in image 1"))?;
    let (n2, t2) = hartley_normalize(&pts2)
        .ok_or(SolverError::DegenerateSample("coincident points in image 2"))?;

    // Padded square so the SVD returns the full right-singular basis (the
    // thin SVD of a 7x9 matrix would not expose the null space).
    let mut design = DMatrix::<f64>::zeros(9, 9);
    for i in 0..7 {
        let row = epipolar_row(n1[i], n2[i]);
        for (j, v) in row.iter().enumerate() {
            design[(i, j)] = *v;
        }
    }
    let svd = design.svd(false, true);
    let sv = &svd.singular_values;
    if sv[6] < 1e-9 * sv[0] {
        return Err(SolverError::DegenerateSample("design matrix rank below 7"));
    }
    let v_t = svd.v_t.expect("svd with v_t");
    let f1 = matrix_from_row_major(v_t.row(7).transpose().as_slice());
    let f2 = matrix_from_row_major(v_t.row(8).transpose().as_slice());

    // det(lambda F1 + F2) is a cubic in lambda; its coefficients follow from
    // determinants of matrices mixing rows of F1 and F2.
    let c3 = f1.determinant();
    let c0 = f2.determinant();
    let c2 = det_mixed(&f1, &f2, 0b001)
        + det_mixed(&f1, &f2, 0b010)
        + det_mixed(&f1, &f2, 0b100);
    let c1 = det_mixed(&f2, &f1, 0b001)
        + det_mixed(&f2, &f1, 0b010)
        + det_mixed(&f2, &f1, 0b100);

    let roots = solve_cubic(c3, c2, c1, c0)
        .map_err(|_| SolverError::DegenerateSample("vanishing determinant polynomial"))?;
    if roots.is_empty() {
        return Err(SolverError::SolverFailure("determinant cubic has no real roots"));
    }

    let mut raw = Vec::with_capacity(roots.len());
    for lambda in roots {
        let g = f1 * lambda + f2;
        // Undo the conditioning: x_normᵀ G x_norm = xᵀ (T2ᵀ G T1) x.
        let f_pix = t2.transpose() * g * t1;
        let norm = f_pix.norm();
        if norm < 1e-300 {
            continue;
        }
        raw.push(f_pix / norm);
    }
    let mut models = Vec::with_capacity(raw.len());
    for m in dedup_models(raw, 1e-8) {
        let f = FundamentalMatrix::from_rank2(m).or_else(|_| FundamentalMatrix::project_from(m));
        if let Ok(f) = f {
            models.push(f);
        }
    }
    if models.is_empty() {
        return Err(SolverError::SolverFailure("no candidate survived validation"));
    }
    Ok(SolverOutput::new(models))
}
