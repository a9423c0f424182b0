//! Real root finding for the low-degree polynomials behind the minimal
//! solvers: cubics (7-point determinant constraint) and degree-10
//! univariates (5-point hidden-variable resultant).

use nalgebra::{Complex, DMatrix};

use super::SolverError;

fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn eval_derivative(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (i, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * x + c * i as f64;
    }
    acc
}

/// One Newton step; returns the input unchanged when the derivative
/// underflows or the step does not reduce the residual.
fn newton_polish(coeffs: &[f64], x: f64) -> f64 {
    let d = eval_derivative(coeffs, x);
    if d.abs() < 1e-300 {
        return x;
    }
    let candidate = x - eval(coeffs, x) / d;
    if candidate.is_finite() && eval(coeffs, candidate).abs() <= eval(coeffs, x).abs() {
        candidate
    } else {
        x
    }
}

fn dedup_sorted(mut roots: Vec<f64>, tol: f64) -> Vec<f64> {
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        match out.last() {
            Some(&last) if (r - last).abs() <= tol * last.abs().max(1.0) => {}
            _ => out.push(r),
        }
    }
    out
}

/// All real roots of `a3 x³ + a2 x² + a1 x + a0`, polished by one Newton
/// step and deduplicated within 1e-10.
///
/// Degree reduction is applied when leading coefficients vanish; a constant
/// (or identically zero) polynomial is rejected as degenerate input.
pub fn solve_cubic(a3: f64, a2: f64, a1: f64, a0: f64) -> Result<Vec<f64>, SolverError> {
    let scale = a3.abs().max(a2.abs()).max(a1.abs()).max(a0.abs());
    if scale < 1e-300 {
        return Err(SolverError::DegenerateInput("all cubic coefficients are zero"));
    }
    let coeffs = [a0 / scale, a1 / scale, a2 / scale, a3 / scale];
    let (c0, c1, c2, c3) = (coeffs[0], coeffs[1], coeffs[2], coeffs[3]);

    const EPS: f64 = 1e-12;
    let mut roots: Vec<f64> = if c3.abs() > EPS {
        // Monic cubic x³ + px² + qx + r, shifted to the depressed form
        // y³ + ay + b with x = y - p/3.
        let p = c2 / c3;
        let q = c1 / c3;
        let r = c0 / c3;
        let a = q - p * p / 3.0;
        let b = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
        let shift = -p / 3.0;
        let discriminant = -4.0 * a * a * a - 27.0 * b * b;
        if discriminant >= 0.0 {
            // Three real roots (trigonometric method). a <= 0 here.
            if a.abs() < 1e-30 {
                // Triple root.
                vec![shift - b.cbrt()]
            } else {
                let m = 2.0 * (-a / 3.0).sqrt();
                let arg = (3.0 * b / (a * m)).clamp(-1.0, 1.0);
                let theta = arg.acos() / 3.0;
                (0..3)
                    .map(|k| {
                        m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift
                    })
                    .collect()
            }
        } else {
            // One real root (Cardano, in the numerically stable form).
            let half_b = b / 2.0;
            let s = (half_b * half_b + a * a * a / 27.0).sqrt();
            let u = (-half_b + s).cbrt();
            let v = (-half_b - s).cbrt();
            vec![u + v + shift]
        }
    } else if c2.abs() > EPS {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            Vec::new()
        } else {
            // Citardauq form avoids cancellation for the small root.
            let sq = disc.sqrt();
            let q = -0.5 * (c1 + c1.signum() * sq);
            if q.abs() < 1e-300 {
                vec![0.0, -c1 / c2]
            } else {
                vec![q / c2, c0 / q]
            }
        }
    } else if c1.abs() > EPS {
        vec![-c0 / c1]
    } else {
        return Err(SolverError::DegenerateInput(
            "cubic has vanishing x³, x² and x coefficients but a nonzero constant",
        ));
    };

    for r in roots.iter_mut() {
        *r = newton_polish(&coeffs, *r);
    }
    Ok(dedup_sorted(roots, 1e-10))
}

/// All real roots of a polynomial of degree up to 10, given coefficients in
/// ascending order (`coeffs[i]` multiplies `x^i`).
///
/// The degree is reduced while leading coefficients are negligible; the
/// remaining polynomial is solved through companion-matrix eigenvalues, each
/// candidate polished by one Newton step and kept only when its residual is
/// below `1e-6 * max|coeff|`.
pub fn solve_poly_degree10(coeffs: &[f64; 11]) -> Result<Vec<f64>, SolverError> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale < 1e-300 {
        return Err(SolverError::DegenerateInput("all polynomial coefficients are zero"));
    }
    let scaled: Vec<f64> = coeffs.iter().map(|c| c / scale).collect();

    let mut degree = 10usize;
    while degree > 0 && scaled[degree].abs() < 1e-12 {
        degree -= 1;
    }
    if degree == 0 {
        // A nonzero constant has no roots.
        return Ok(Vec::new());
    }
    if degree <= 3 {
        let get = |i: usize| if i <= degree { scaled[i] } else { 0.0 };
        return solve_cubic(get(3), get(2), get(1), get(0));
    }

    // Companion matrix of the monic polynomial: subdiagonal ones, negated
    // coefficients in the last column.
    let lead = scaled[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -scaled[i] / lead;
    }
    let eigenvalues: Vec<Complex<f64>> = companion.complex_eigenvalues().iter().copied().collect();

    let trimmed = &scaled[..=degree];
    let mut roots = Vec::new();
    for ev in eigenvalues {
        if ev.im.abs() > 1e-6 * ev.re.abs().max(1.0) {
            continue;
        }
        let r = newton_polish(trimmed, ev.re);
        if eval(trimmed, r).abs() < 1e-6 {
            roots.push(r);
        }
    }
    Ok(dedup_sorted(roots, 1e-7))
}
