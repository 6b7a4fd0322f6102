//! Real polynomials stored dense in ascending coefficient order.
//!
//! The argument shift p(s) -> p(s + c) is computed by repeated synthetic
//! division (Horner/Taylor shift), which is degree-preserving and avoids
//! forming large binomial coefficients explicitly.

use num_complex::Complex64;

/// Dense real polynomial, coefficients ascending in degree.
///
/// Always non-empty; the leading coefficient is nonzero unless the value is
/// the zero polynomial, which is represented as `[0.0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut c = coeffs.into();
        if c.is_empty() {
            c.push(0.0);
        }
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
        }
        Polynomial { coeffs: c }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![1.0] }
    }

    /// Builds leading * prod_i (s - r_i). The root set must be closed under
    /// conjugation for the result to be real; residual imaginary parts from
    /// rounding are dropped.
    pub fn from_roots(leading: f64, roots: &[Complex64]) -> Self {
        let mut acc: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, a) in acc.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            acc = next;
        }
        Polynomial::new(acc.iter().map(|z| z.re * leading).collect::<Vec<_>>())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    /// Horner value together with the magnitude scale sum_i |c_i| |s|^i, the
    /// conditioning reference for pole-proximity tests.
    pub fn eval_with_scale(&self, s: Complex64) -> (Complex64, f64) {
        let r = s.norm();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * s + c;
            scale = scale * r + c.abs();
        }
        (acc, scale)
    }

    /// Coefficients of p(s + c), computed by repeated synthetic division.
    pub fn shift_arg(&self, c: f64) -> Polynomial {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let t = c * a[j + 1];
                a[j] += t;
            }
        }
        Polynomial::new(a)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Polynomial::new(out)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    pub fn scale(&self, k: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
    }
}
