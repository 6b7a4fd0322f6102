//! Dense linear-algebra kernels shared by every analysis module: general
//! eigenvalues, inertia counts of symmetric matrices, and a Lyapunov solver.
//!
//! Eigenvalues go through a power-of-two balancing pass (exact similarity, no
//! rounding) followed by Hessenberg/Schur QR iteration; targeted accuracy is
//! 1e-9 relative for well-conditioned inputs up to n = 20.
//!
//! `solve_lyapunov` solves A^T P + P A = -Q by Kronecker vectorization: the
//! n^2 x n^2 system is small at these orders and the dense LU route is exact
//! about its own failure (singular operator <=> some eigenvalue pair of A has
//! lambda_i + lambda_j = 0), which matters more here than speed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Dense real matrix used throughout the crate.
pub type Matrix = DMatrix<f64>;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix must be symmetric: asymmetry {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotSymmetric { defect: f64, tol: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge")]
    EigenNonConvergence,
    #[error("Lyapunov operator is singular: A has eigenvalues with lambda_i + lambda_j = 0")]
    SingularLyapunov,
    #[error("Lyapunov solve is ill-conditioned: residual {residual:.3e}")]
    IllConditioned { residual: f64 },
}

/// Eigenvalue sign counts of a symmetric matrix, ordered (positive, zero, negative).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub zero: usize,
    pub negative: usize,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.positive + self.zero + self.negative
    }
}

fn check_square(m: &Matrix) -> Result<(), NumericsError> {
    if m.nrows() != m.ncols() {
        return Err(NumericsError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn check_finite(m: &Matrix) -> Result<(), NumericsError> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    Ok(())
}

/// Diagonal similarity scaling by powers of two so row and column norms agree.
/// Eigenvalues are preserved exactly because the scale factors are exact in
/// binary floating point.
fn balance(m: &Matrix) -> Matrix {
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    let n = m.nrows();
    let mut a = m.clone();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    r += a[(i, j)].abs();
                    c += a[(j, i)].abs();
                }
            }
            if c > 0.0 && r > 0.0 {
                let s = c + r;
                let mut f = 1.0;
                let mut c_scaled = c;
                while c_scaled < r / RADIX {
                    f *= RADIX;
                    c_scaled *= SQRDX;
                }
                while c_scaled > r * RADIX {
                    f /= RADIX;
                    c_scaled /= SQRDX;
                }
                if (c_scaled + r / f) < 0.95 * s && f != 1.0 {
                    converged = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
    a
}

/// All eigenvalues of a square real matrix, sorted by (re, im).
/// Complex eigenvalues come in exact conjugate pairs.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>, NumericsError> {
    check_square(m)?;
    check_finite(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(balance(m), f64::EPSILON, 100_000)
        .ok_or(NumericsError::EigenNonConvergence)?;
    let mut out: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    out.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    Ok(out)
}

/// Default zero-threshold for inertia counting, scaled to the matrix norm.
pub fn default_inertia_tol(s: &Matrix) -> f64 {
    1e-9 * s.norm().max(1.0)
}

/// Signs of the eigenvalues of a symmetric matrix; |mu| <= zero_tol counts as zero.
pub fn symmetric_inertia(s: &Matrix, zero_tol: f64) -> Result<Inertia, NumericsError> {
    check_square(s)?;
    check_finite(s)?;
    let n = s.nrows();
    if n == 0 {
        return Ok(Inertia {
            positive: 0,
            zero: 0,
            negative: 0,
        });
    }
    let defect = (s - s.transpose()).amax();
    let sym_tol = 1e-12 * s.amax().max(1.0);
    if defect > sym_tol {
        return Err(NumericsError::NotSymmetric {
            defect,
            tol: sym_tol,
        });
    }
    let sym = (s + s.transpose()) * 0.5;
    let se = nalgebra::linalg::SymmetricEigen::try_new(sym, f64::EPSILON, 100_000)
        .ok_or(NumericsError::EigenNonConvergence)?;
    let mut inertia = Inertia {
        positive: 0,
        zero: 0,
        negative: 0,
    };
    for &mu in se.eigenvalues.iter() {
        if mu > zero_tol {
            inertia.positive += 1;
        } else if mu < -zero_tol {
            inertia.negative += 1;
        } else {
            inertia.zero += 1;
        }
    }
    Ok(inertia)
}

/// Solves A^T P + P A = -Q for symmetric P (Q symmetric).
///
/// The solution is unique iff no two eigenvalues of A satisfy
/// lambda_i + lambda_j = 0; a singular or ill-conditioned operator is an error
/// rather than a garbage answer. The result is symmetrized and residual-checked.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix, NumericsError> {
    check_square(a)?;
    check_square(q)?;
    check_finite(a)?;
    check_finite(q)?;
    let n = a.nrows();
    if q.nrows() != n {
        return Err(NumericsError::DimensionMismatch(format!(
            "A is {n}x{n} but Q is {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    let q_defect = (q - q.transpose()).amax();
    let q_tol = 1e-12 * q.amax().max(1.0);
    if q_defect > q_tol {
        return Err(NumericsError::NotSymmetric {
            defect: q_defect,
            tol: q_tol,
        });
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    // vec(A^T P) = (I (x) A^T) vec(P), vec(P A) = (A^T (x) I) vec(P).
    let at = a.transpose();
    let id = Matrix::identity(n, n);
    let op = id.kronecker(&at) + at.kronecker(&id);
    let rhs = -DVector::from_column_slice(q.as_slice());
    let sol = op.lu().solve(&rhs).ok_or(NumericsError::SingularLyapunov)?;
    let p = Matrix::from_column_slice(n, n, sol.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    let residual = (&at * &p + &p * a + q).amax();
    let scale = (1.0 + a.norm()) * (1.0 + p.norm()) + q.norm();
    if !residual.is_finite() || residual > 1e-7 * scale {
        return Err(NumericsError::IllConditioned { residual });
    }
    Ok(p)
}
