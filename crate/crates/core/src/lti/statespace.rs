//! State-space realizations and conversions to/from transfer functions.
//!
//! tf_from_statespace builds the denominator as the characteristic polynomial
//! (from the eigenvalues, multiplied back in conjugate-closed order) and the
//! numerator by evaluation-interpolation: G(s_k) d(s_k) is sampled at n+1
//! points on a circle enclosing the spectrum and the coefficients recovered by
//! an inverse discrete Fourier transform, which is well conditioned at these
//! orders.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{LtiError, Polynomial, TransferFunction};
use crate::numerics::{eigenvalues, Matrix};

#[derive(Debug, Clone)]
pub struct StateSpace {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self, LtiError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LtiError::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(LtiError::DimensionMismatch(format!(
                "B must have {} rows, got {}",
                n,
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(LtiError::DimensionMismatch(format!(
                "C must have {} columns, got {}",
                n,
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(LtiError::DimensionMismatch(format!(
                "D must be {}x{}, got {}x{}",
                c.nrows(),
                b.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(StateSpace { a, b, c, d })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.inputs() == 1 && self.outputs() == 1
    }

    fn require_siso(&self) -> Result<(), LtiError> {
        if !self.is_siso() {
            return Err(LtiError::NotSiso {
                inputs: self.inputs(),
                outputs: self.outputs(),
            });
        }
        Ok(())
    }

    /// Controllable-canonical realization of a proper transfer function.
    pub fn from_transfer_function(g: &TransferFunction) -> Result<StateSpace, LtiError> {
        if !g.is_proper() {
            return Err(LtiError::Improper {
                num_degree: g.num().degree(),
                den_degree: g.den().degree(),
            });
        }
        let lead = g.den().leading();
        let den: Vec<f64> = g.den().coeffs().iter().map(|c| c / lead).collect();
        let n = den.len() - 1;
        let mut num = vec![0.0; n + 1];
        for (i, &c) in g.num().coeffs().iter().enumerate() {
            num[i] = c / lead;
        }
        // Split off the feedthrough so the remainder is strictly proper.
        let d_term = num[n];
        let strictly: Vec<f64> = (0..n).map(|i| num[i] - d_term * den[i]).collect();
        if n == 0 {
            return StateSpace::new(
                Matrix::zeros(0, 0),
                Matrix::zeros(0, 1),
                Matrix::zeros(1, 0),
                Matrix::from_element(1, 1, d_term),
            );
        }
        let mut a = Matrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -den[j];
        }
        let mut b = Matrix::zeros(n, 1);
        b[(n - 1, 0)] = 1.0;
        let c = Matrix::from_fn(1, n, |_, j| strictly[j]);
        StateSpace::new(a, b, c, Matrix::from_element(1, 1, d_term))
    }
}

/// Characteristic polynomial of A, built monic from its eigenvalues.
fn characteristic_polynomial(a: &Matrix) -> Result<Polynomial, LtiError> {
    let eigs = eigenvalues(a)?;
    Ok(Polynomial::from_roots(1.0, &eigs))
}

/// SISO transfer function of a state-space realization. Common pole/zero
/// pairs of non-minimal realizations cancel with a warning in the
/// TransferFunction constructor.
pub fn tf_from_statespace(ss: &StateSpace) -> Result<TransferFunction, LtiError> {
    ss.require_siso()?;
    let n = ss.order();
    let d_term = ss.d()[(0, 0)];
    let den = characteristic_polynomial(ss.a())?;
    if n == 0 {
        return TransferFunction::new(Polynomial::new(vec![d_term]), Polynomial::one());
    }
    let eigs = eigenvalues(ss.a())?;
    let spectral_radius = eigs.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let radius = 2.0 * spectral_radius.max(1.0);
    let m = n + 1;
    let a_c = ss.a().map(|x| Complex64::new(x, 0.0));
    let b_c = DMatrix::from_fn(n, 1, |i, _| Complex64::new(ss.b()[(i, 0)], 0.0));
    // Sample f(s) = G(s) d(s) on the circle; f is a polynomial of degree <= n.
    let mut samples = Vec::with_capacity(m);
    for k in 0..m {
        let theta = 2.0 * std::f64::consts::PI * (k as f64) / (m as f64);
        let s = Complex64::new(radius * theta.cos(), radius * theta.sin());
        let mut resolvent = -&a_c;
        for i in 0..n {
            resolvent[(i, i)] += s;
        }
        let x = resolvent
            .lu()
            .solve(&b_c)
            .ok_or_else(|| LtiError::DimensionMismatch("resolvent solve failed".into()))?;
        let mut g = Complex64::new(d_term, 0.0);
        for i in 0..n {
            g += Complex64::new(ss.c()[(0, i)], 0.0) * x[(i, 0)];
        }
        samples.push(g * den.eval(s));
    }
    // Inverse DFT divided by radius^j recovers coefficient j.
    let mut coeffs = vec![0.0f64; m];
    let fscale = samples.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    for (j, cj) in coeffs.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, f) in samples.iter().enumerate() {
            let theta = -2.0 * std::f64::consts::PI * (j as f64) * (k as f64) / (m as f64);
            acc += f * Complex64::new(theta.cos(), theta.sin());
        }
        *cj = acc.re / (m as f64) / radius.powi(j as i32);
    }
    // Trim trailing coefficients that vanish relative to the sample scale.
    let coeff_floor = 1e-9 * coeffs.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    while coeffs.len() > 1 && coeffs.last().unwrap().abs() <= coeff_floor {
        coeffs.pop();
    }
    if fscale == 0.0 {
        coeffs = vec![0.0];
    }
    TransferFunction::new(Polynomial::new(coeffs), den)
}
