//! SISO transfer functions as ratios of real polynomials, the companion-matrix
//! root finder, and the shifted pole/zero counts consumed by the dominance and
//! frequency tests.

use num_complex::Complex64;

use super::{LtiError, Polynomial};
use crate::numerics::{eigenvalues, Matrix};

/// Tolerance for cancelling a numerator/denominator common root.
const CANCEL_TOL: f64 = 1e-7;

/// Relative denominator-magnitude threshold below which evaluation is
/// considered to sit on a pole.
const POLE_EVAL_TOL: f64 = 1e-12;

/// Ratio of two real polynomials in the Laplace variable.
///
/// Construction cancels numerator/denominator roots that agree within 1e-7
/// (with a logged warning) so downstream pole/zero counts see a coprime pair.
#[derive(Debug, Clone)]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
}

/// All roots of a real polynomial via its balanced companion matrix.
/// Constants have no roots; the zero polynomial is rejected.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>, LtiError> {
    if p.is_zero() {
        return Err(LtiError::ZeroPolynomial);
    }
    if !p.is_finite() {
        return Err(LtiError::NonFinite);
    }
    let n = p.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = p.leading();
    let mut companion = Matrix::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        companion[(i, n - 1)] = -p.coeffs()[i] / lead;
    }
    Ok(eigenvalues(&companion)?)
}

/// Pairs of (numerator root, denominator root) closer than the cancellation
/// tolerance are removed and both polynomials rebuilt from the survivors.
fn cancel_common_roots(
    num: Polynomial,
    den: Polynomial,
) -> Result<(Polynomial, Polynomial), LtiError> {
    if num.is_zero() || num.degree() == 0 || den.degree() == 0 {
        return Ok((num, den));
    }
    let nroots = poly_roots(&num)?;
    let droots = poly_roots(&den)?;
    let mut den_used = vec![false; droots.len()];
    let mut num_keep = Vec::new();
    let mut cancelled = Vec::new();
    for nr in &nroots {
        let candidate = droots
            .iter()
            .enumerate()
            .filter(|(i, _)| !den_used[*i])
            .min_by(|(_, a), (_, b)| {
                (nr - *a).norm().partial_cmp(&(nr - *b).norm()).unwrap()
            });
        match candidate {
            Some((i, dr)) if (nr - dr).norm() <= CANCEL_TOL * (1.0 + nr.norm()) => {
                den_used[i] = true;
                cancelled.push(*nr);
            }
            _ => num_keep.push(*nr),
        }
    }
    if cancelled.is_empty() {
        return Ok((num, den));
    }
    log::warn!(
        "cancelling {} common pole/zero pair(s) within {:.1e}: {:?}",
        cancelled.len(),
        CANCEL_TOL,
        cancelled
    );
    let den_keep: Vec<Complex64> = droots
        .iter()
        .enumerate()
        .filter(|(i, _)| !den_used[*i])
        .map(|(_, r)| *r)
        .collect();
    Ok((
        Polynomial::from_roots(num.leading(), &num_keep),
        Polynomial::from_roots(den.leading(), &den_keep),
    ))
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, LtiError> {
        if den.is_zero() {
            return Err(LtiError::ZeroDenominator);
        }
        if !num.is_finite() || !den.is_finite() {
            return Err(LtiError::NonFinite);
        }
        let (num, den) = cancel_common_roots(num, den)?;
        Ok(TransferFunction { num, den })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self, LtiError> {
        TransferFunction::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    /// den degree minus num degree; negative means improper.
    pub fn relative_degree(&self) -> isize {
        if self.num.is_zero() {
            return self.den.degree() as isize + 1;
        }
        self.den.degree() as isize - self.num.degree() as isize
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree() >= 0
    }

    pub fn poles(&self) -> Result<Vec<Complex64>, LtiError> {
        poly_roots(&self.den)
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>, LtiError> {
        if self.num.is_zero() {
            return Ok(Vec::new());
        }
        poly_roots(&self.num)
    }

    /// H(s) = G(s - lambda). Poles and zeros translate by +lambda; coprimality
    /// is preserved, so no re-cancellation happens.
    pub fn shift(&self, lambda: f64) -> TransferFunction {
        TransferFunction {
            num: self.num.shift_arg(-lambda),
            den: self.den.shift_arg(-lambda),
        }
    }

    /// Horner evaluation; an error when s falls on a pole (denominator
    /// magnitude below 1e-12 of its coefficient scale).
    pub fn evaluate(&self, s: Complex64) -> Result<Complex64, LtiError> {
        let (dv, dscale) = self.den.eval_with_scale(s);
        if dv.norm() < POLE_EVAL_TOL * dscale.max(f64::MIN_POSITIVE) {
            return Err(LtiError::EvaluationAtPole { s });
        }
        Ok(self.num.eval(s) / dv)
    }

    /// lim_{|s| -> inf} G(s): zero when strictly proper, the leading
    /// coefficient ratio when biproper, an error when improper.
    pub fn limit_at_infinity(&self) -> Result<f64, LtiError> {
        let rd = self.relative_degree();
        if rd < 0 {
            return Err(LtiError::Improper {
                num_degree: self.num.degree(),
                den_degree: self.den.degree(),
            });
        }
        if rd == 0 {
            Ok(self.num.leading() / self.den.leading())
        } else {
            Ok(0.0)
        }
    }

    pub fn mul(&self, other: &TransferFunction) -> Result<TransferFunction, LtiError> {
        TransferFunction::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn scale(&self, k: f64) -> TransferFunction {
        TransferFunction {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }
}

/// Pole/zero counts of G(s - lambda) relative to the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoleZeroSplit {
    /// Poles of the shifted system in the open right half-plane.
    pub p: usize,
    /// Denominator degree (total pole count).
    pub n_total: usize,
    /// Total finite zeros (numerator degree).
    pub q: usize,
    /// Zeros of the shifted system in the open right half-plane.
    pub r: usize,
    /// Some root sits within tolerance of the shifted imaginary axis.
    pub boundary: bool,
}

/// Default boundary tolerance for [`pole_zero_split`].
pub fn default_boundary_tol(lambda: f64) -> f64 {
    1e-9 * (1.0 + lambda.abs())
}

/// Counts shifted poles/zeros strictly right of the imaginary axis; roots with
/// |Re| <= tol are boundary cases, flagged and excluded from the strict counts.
pub fn pole_zero_split(
    g: &TransferFunction,
    lambda: f64,
    tol: f64,
) -> Result<PoleZeroSplit, LtiError> {
    let shifted = g.shift(lambda);
    let poles = poly_roots(shifted.den())?;
    let zeros = if shifted.num().is_zero() {
        Vec::new()
    } else {
        poly_roots(shifted.num())?
    };
    let mut boundary = false;
    let mut count_open_rhp = |roots: &[Complex64]| {
        let mut k = 0;
        for root in roots {
            if root.re.abs() <= tol {
                boundary = true;
            } else if root.re > 0.0 {
                k += 1;
            }
        }
        k
    };
    let p = count_open_rhp(&poles);
    let r = count_open_rhp(&zeros);
    Ok(PoleZeroSplit {
        p,
        n_total: shifted.den().degree(),
        q: if shifted.num().is_zero() {
            0
        } else {
            shifted.num().degree()
        },
        r,
        boundary,
    })
}
