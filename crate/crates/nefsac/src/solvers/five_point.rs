//! The 5-point minimal solver for the essential matrix.
//!
//! Hidden-variable formulation: with the 4-dimensional null space
//! `E = x·X + y·Y + z·Z + W` of the epipolar design matrix, the cubic
//! essential-matrix constraints (`det E = 0` and `2 E Eᵀ E = tr(E Eᵀ) E`)
//! become ten polynomials in `(x, y, z)`. Collecting them by the monomials
//! in `x, y` yields a 10x10 matrix `C(z)` of polynomials in `z` alone; a
//! solution exists where `det C(z) = 0`, a polynomial of degree 10 whose
//! coefficients are recovered by interpolation. Each real root is
//! back-substituted through the null vector of `C(z)`.

use nalgebra::{DMatrix, DVector, Matrix3};

use super::{
    dedup_models, epipolar_row, matrix_from_row_major, solve_poly_degree10, SolverError,
    SolverOutput,
};
use crate::geometry::{CameraIntrinsics, EssentialMatrix, MinimalSample};

/// Monomials of total degree <= 3 in (x, y, z), as exponent triples.
/// The first ten (those containing x or y) index the columns of `C(z)`
/// together with their z-parts; the layout groups each (x,y)-monomial with
/// its z-multiples.
const MONO: [(u8, u8, u8); 20] = [
    (3, 0, 0), // x^3
    (0, 3, 0), // y^3
    (2, 1, 0), // x^2 y
    (1, 2, 0), // x y^2
    (2, 0, 0), // x^2      * {1, z}
    (2, 0, 1),
    (0, 2, 0), // y^2      * {1, z}
    (0, 2, 1),
    (1, 1, 0), // x y      * {1, z}
    (1, 1, 1),
    (1, 0, 0), // x        * {1, z, z^2}
    (1, 0, 1),
    (1, 0, 2),
    (0, 1, 0), // y        * {1, z, z^2}
    (0, 1, 1),
    (0, 1, 2),
    (0, 0, 0), // 1        * {1, z, z^2, z^3}
    (0, 0, 1),
    (0, 0, 2),
    (0, 0, 3),
];

fn mono_index(a: u8, b: u8, c: u8) -> usize {
    MONO.iter()
        .position(|&m| m == (a, b, c))
        .expect("monomial within degree-3 basis")
}

/// Dense polynomial over the 20-monomial basis.
#[derive(Clone, Copy)]
struct Poly3([f64; 20]);

impl Poly3 {
    fn zero() -> Self {
        Self([0.0; 20])
    }

    /// A degree-1 polynomial `cx·x + cy·y + cz·z + c1`.
    fn linear(cx: f64, cy: f64, cz: f64, c1: f64) -> Self {
        let mut p = Self::zero();
        p.0[mono_index(1, 0, 0)] = cx;
        p.0[mono_index(0, 1, 0)] = cy;
        p.0[mono_index(0, 0, 1)] = cz;
        p.0[mono_index(0, 0, 0)] = c1;
        p
    }

    fn add(mut self, other: &Poly3) -> Self {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
        self
    }

    fn sub(mut self, other: &Poly3) -> Self {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a -= b;
        }
        self
    }

    fn scale(mut self, s: f64) -> Self {
        for a in self.0.iter_mut() {
            *a *= s;
        }
        self
    }

    /// Product, valid while the result stays within total degree 3.
    fn mul(&self, other: &Poly3) -> Self {
        let mut out = Self::zero();
        for (i, &ci) in self.0.iter().enumerate() {
            if ci == 0.0 {
                continue;
            }
            let (a1, b1, c1) = MONO[i];
            for (j, &cj) in other.0.iter().enumerate() {
                if cj == 0.0 {
                    continue;
                }
                let (a2, b2, c2) = MONO[j];
                let (a, b, c) = (a1 + a2, b1 + b2, c1 + c2);
                debug_assert!(a + b + c <= 3, "product left the degree-3 basis");
                out.0[mono_index(a, b, c)] += ci * cj;
            }
        }
        out
    }
}

/// The ten cubic constraint polynomials for `E(x,y,z) = xX + yY + zZ + W`.
fn constraint_polynomials(basis: &[Matrix3<f64>; 4]) -> Vec<Poly3> {
    // E entries as linear polynomials.
    let e = |i: usize, j: usize| {
        Poly3::linear(basis[0][(i, j)], basis[1][(i, j)], basis[2][(i, j)], basis[3][(i, j)])
    };
    let mut entries = [[Poly3::zero(); 3]; 3];
    for (i, row) in entries.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = e(i, j);
        }
    }

    let mut polys = Vec::with_capacity(10);

    // det(E) = 0.
    let minor = |r0: usize, r1: usize, c0: usize, c1: usize| {
        entries[r0][c0].mul(&entries[r1][c1]).sub(&entries[r0][c1].mul(&entries[r1][c0]))
    };
    let det = entries[0][0]
        .mul(&minor(1, 2, 1, 2))
        .sub(&entries[0][1].mul(&minor(1, 2, 0, 2)))
        .add(&entries[0][2].mul(&minor(1, 2, 0, 1)));
    polys.push(det);

    // 2 E Eᵀ E - tr(E Eᵀ) E = 0, entry by entry.
    // (E Eᵀ)_ik = sum_j E_ij E_kj  (quadratic).
    let mut eet = [[Poly3::zero(); 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            let mut acc = Poly3::zero();
            for j in 0..3 {
                acc = acc.add(&entries[i][j].mul(&entries[k][j]));
            }
            eet[i][k] = acc;
        }
    }
    let trace = eet[0][0].add(&eet[1][1]).add(&eet[2][2]);
    for i in 0..3 {
        for l in 0..3 {
            let mut acc = Poly3::zero();
            for k in 0..3 {
                acc = acc.add(&eet[i][k].mul(&entries[k][l]));
            }
            let m = acc.scale(2.0).sub(&trace.mul(&entries[i][l]));
            polys.push(m);
        }
    }
    polys
}

/// Coefficient tensor of `C(z)`: `coef[row][col][zpow]`.
type CoefTensor = Vec<[[f64; 4]; 10]>;

/// Splits each constraint polynomial into the 10 columns (monomials in x, y)
/// with per-column z-polynomials.
fn assemble_c_of_z(polys: &[Poly3]) -> CoefTensor {
    // Column of each (a,b) pair in the order
    // [x^3, y^3, x^2 y, x y^2, x^2, y^2, x y, x, y, 1].
    fn column(a: u8, b: u8) -> usize {
        match (a, b) {
            (3, 0) => 0,
            (0, 3) => 1,
            (2, 1) => 2,
            (1, 2) => 3,
            (2, 0) => 4,
            (0, 2) => 5,
            (1, 1) => 6,
            (1, 0) => 7,
            (0, 1) => 8,
            (0, 0) => 9,
            _ => unreachable!("exponents limited to degree 3"),
        }
    }
    polys
        .iter()
        .map(|p| {
            let mut row = [[0.0f64; 4]; 10];
            for (idx, &c) in p.0.iter().enumerate() {
                if c != 0.0 {
                    let (a, b, zp) = MONO[idx];
                    row[column(a, b)][zp as usize] += c;
                }
            }
            row
        })
        .collect()
}

fn eval_c_matrix(coef: &CoefTensor, z: f64) -> DMatrix<f64> {
    let zp = [1.0, z, z * z, z * z * z];
    DMatrix::from_fn(10, 10, |r, c| {
        let t = &coef[r][c];
        t[0] * zp[0] + t[1] * zp[1] + t[2] * zp[2] + t[3] * zp[3]
    })
}

/// Recovers the degree-10 monomial coefficients of `det C(z)` by sampling
/// the determinant at 11 Chebyshev nodes and solving the Vandermonde system.
fn determinant_polynomial(coef: &CoefTensor) -> Option<[f64; 11]> {
    let nodes: Vec<f64> = (0..11)
        .map(|j| (std::f64::consts::PI * (2.0 * j as f64 + 1.0) / 22.0).cos())
        .collect();
    let values = DVector::from_iterator(
        11,
        nodes.iter().map(|&z| eval_c_matrix(coef, z).lu().determinant()),
    );
    let vander = DMatrix::from_fn(11, 11, |r, c| nodes[r].powi(c as i32));
    let solved = vander.lu().solve(&values)?;
    let mut out = [0.0f64; 11];
    for i in 0..11 {
        out[i] = solved[i];
    }
    Some(out)
}

/// Residuals of the essential-matrix constraints for a unit-scale matrix;
/// used to reject spurious polynomial roots before manifold projection.
fn essential_constraint_residual(e: &Matrix3<f64>) -> f64 {
    let scale = e.norm();
    if scale < 1e-300 {
        return f64::INFINITY;
    }
    let en = e / scale;
    let eet = en * en.transpose();
    let m = 2.0 * eet * en - en * eet.trace();
    m.abs().max().max(en.determinant().abs())
}

/// Solves the essential matrix from exactly 5 correspondences.
///
/// Intrinsics are applied internally; candidates are validated against the
/// essential-matrix invariants and deduplicated. Returns up to 10 models.
pub fn five_point_essential(
    sample: &MinimalSample,
    k1: &CameraIntrinsics,
    k2: &CameraIntrinsics,
) -> Result<SolverOutput<EssentialMatrix>, SolverError> {
    if sample.len() != 5 {
        return Err(SolverError::WrongSampleSize { expected: 5, found: sample.len() });
    }

    // Padded square design so the SVD exposes the full right-singular basis.
    let mut design = DMatrix::<f64>::zeros(9, 9);
    for (i, c) in sample.points().iter().enumerate() {
        let row = epipolar_row(k1.normalize(c.u1, c.v1), k2.normalize(c.u2, c.v2));
        for (j, v) in row.iter().enumerate() {
            design[(i, j)] = *v;
        }
    }
    let svd = design.svd(false, true);
    let sv = &svd.singular_values;
    if sv[4] < 1e-9 * sv[0] {
        return Err(SolverError::DegenerateSample("design matrix rank below 5"));
    }
    let v_t = svd.v_t.expect("svd with v_t");
    let basis = [
        matrix_from_row_major(v_t.row(5).transpose().as_slice()),
        matrix_from_row_major(v_t.row(6).transpose().as_slice()),
        matrix_from_row_major(v_t.row(7).transpose().as_slice()),
        matrix_from_row_major(v_t.row(8).transpose().as_slice()),
    ];

    let polys = constraint_polynomials(&basis);
    let coef = assemble_c_of_z(&polys);
    let det_poly = determinant_polynomial(&coef)
        .ok_or(SolverError::SolverFailure("determinant interpolation failed"))?;
    let roots = solve_poly_degree10(&det_poly)
        .map_err(|_| SolverError::SolverFailure("vanishing determinant polynomial"))?;

    let mut raw = Vec::with_capacity(roots.len());
    for z in roots {
        let c = eval_c_matrix(&coef, z);
        let c_svd = c.svd(false, true);
        let v_t = c_svd.v_t.expect("svd with v_t");
        let m = v_t.row(9);
        // Monomial vector [.., x, y, 1]: solutions at infinity are skipped.
        if m[9].abs() < 1e-10 {
            continue;
        }
        let x = m[7] / m[9];
        let y = m[8] / m[9];
        let e = basis[0] * x + basis[1] * y + basis[2] * z + basis[3];
        if essential_constraint_residual(&e) > 1e-6 {
            continue;
        }
        let scaled = e / e.norm();
        raw.push(scaled);
    }

    let mut models = Vec::with_capacity(raw.len());
    for m in dedup_models(raw, 1e-8) {
        if let Ok(e) = EssentialMatrix::project_from(m) {
            models.push(e);
        }
    }
    if models.is_empty() {
        return Err(SolverError::SolverFailure("no candidate survived validation"));
    }
    debug_assert!(models.len() <= 10);
    Ok(SolverOutput::new(models))
}
