//! Time-domain dominance certificates and their frequency-domain
//! counterparts: inertia-constrained Lyapunov and dissipativity
//! inequalities, the positive-realness test for a quadratic supply, the
//! relative-degree candidate table, and gain/rate scan utilities.
//!
//! A system is p-dominant with rate lambda when a symmetric storage P with
//! exactly p negative eigenvalues (and none at zero) satisfies
//! `A'P + PA + 2 lambda P <= -eps I`. By the Lyapunov inertia theorem the
//! negative count of P equals the number of eigenvalues of A + lambda I in
//! the open right half-plane, so transient modes decay faster than
//! e^(-lambda t) while at most p modes dominate the asymptotic behavior.
//!
//! Certificates are produced by dense Lyapunov solves and verified by
//! eigenvalue computations alone; no semidefinite programming is involved,
//! which keeps every verdict reproducible to floating-point accuracy.

use num_complex::Complex64;
use thiserror::Error;

use crate::exec;
use crate::frequency::{shifted_pole_counts, FrequencyError, FrequencyGrid};
use crate::lti::{poly_roots, LtiError, StateSpace, TransferFunction};
use crate::numerics::{
    default_inertia_tol, eigenvalues, solve_lyapunov, symmetric_inertia, Inertia, Matrix,
    NumericsError,
};

#[derive(Debug, Error)]
pub enum DominanceError {
    #[error("spectrum within {tol:.3e} of the shifted imaginary axis (Re = {re:.3e}); the split between dominant and transient modes is ill-defined")]
    OnBoundary { re: f64, tol: f64 },
    #[error("sector bounds must satisfy k1 < k2 and be finite, got k1 = {k1}, k2 = {k2}")]
    InvalidSector { k1: f64, k2: f64 },
    #[error("operation needs a scalar supply, got {outputs}x{inputs} blocks")]
    NotScalarSupply { outputs: usize, inputs: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Frequency(#[from] FrequencyError),
}

/// Quadratic supply rate s(y, u) = y'Qy + 2 y'Lu + u'Ru with symmetric Q
/// and R. Signs follow the dissipation inequality: trajectories may absorb
/// s, so "inside the sector" means the supply is nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct Supply {
    q: Matrix,
    l: Matrix,
    r: Matrix,
}

impl Supply {
    pub fn new(q: Matrix, l: Matrix, r: Matrix) -> Result<Self, DominanceError> {
        let (m1, m2) = (q.nrows(), r.nrows());
        if q.ncols() != m1 || r.ncols() != m2 || l.nrows() != m1 || l.ncols() != m2 {
            return Err(DominanceError::InvalidInput(format!(
                "supply blocks must be ({m1}x{m1}, {m1}x{m2}, {m2}x{m2}), got {}x{}, {}x{}, {}x{}",
                q.nrows(),
                q.ncols(),
                l.nrows(),
                l.ncols(),
                r.nrows(),
                r.ncols()
            )));
        }
        for (name, m) in [("Q", &q), ("R", &r)] {
            if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                return Err(DominanceError::InvalidInput(format!(
                    "{name} must be symmetric"
                )));
            }
        }
        if !(q.iter().all(|v| v.is_finite())
            && l.iter().all(|v| v.is_finite())
            && r.iter().all(|v| v.is_finite()))
        {
            return Err(DominanceError::InvalidInput(
                "supply blocks must be finite".into(),
            ));
        }
        Ok(Supply { q, l, r })
    }

    /// Passivity supply s = 2 y'u (Q = 0, L = I, R = 0).
    pub fn p_passive(m: usize) -> Supply {
        Supply {
            q: Matrix::zeros(m, m),
            l: Matrix::identity(m, m),
            r: Matrix::zeros(m, m),
        }
    }

    /// Output-strict passivity: s = 2 y'u - eps y'y.
    pub fn strictly_output_passive(m: usize, eps: f64) -> Supply {
        Supply {
            q: Matrix::identity(m, m) * -eps,
            l: Matrix::identity(m, m),
            r: Matrix::zeros(m, m),
        }
    }

    /// Input-strict passivity: s = 2 y'u - delta u'u.
    pub fn strictly_input_passive(m: usize, delta: f64) -> Supply {
        Supply {
            q: Matrix::zeros(m, m),
            l: Matrix::identity(m, m),
            r: Matrix::identity(m, m) * -delta,
        }
    }

    /// Scalar supply whose sign separates slopes inside [k1, k2] from
    /// slopes outside: for the feedback u = -k y,
    /// [1, -k] [[Q, L], [L, R]] [1, -k]' = 2 (k - k1)(k - k2).
    pub fn sector(k1: f64, k2: f64) -> Result<Supply, DominanceError> {
        if !(k1 < k2) || !(k1.is_finite() && k2.is_finite()) {
            return Err(DominanceError::InvalidSector { k1, k2 });
        }
        Ok(Supply {
            q: Matrix::from_element(1, 1, 2.0 * k1 * k2),
            l: Matrix::from_element(1, 1, k1 + k2),
            r: Matrix::from_element(1, 1, 2.0),
        })
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn l(&self) -> &Matrix {
        &self.l
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn output_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.r.nrows()
    }

    /// The (q, l, r) scalars when every block is 1x1.
    pub fn scalar(&self) -> Option<(f64, f64, f64)> {
        (self.output_dim() == 1 && self.input_dim() == 1)
            .then(|| (self.q[(0, 0)], self.l[(0, 0)], self.r[(0, 0)]))
    }
}

/// Storage matrix and constants certifying p-dominance with rate lambda.
#[derive(Debug, Clone)]
pub struct DominanceCertificate {
    /// Symmetric storage P with inertia (n - p, 0, p).
    pub storage: Matrix,
    /// Strictness of the inequality: A'P + PA + 2 lambda P <= -eps I.
    pub eps: f64,
    pub lambda: f64,
    /// Claimed dominance degree: the negative eigenvalue count of P.
    pub p: usize,
}

/// Builds a certificate for A with rate lambda by solving
/// (A + lambda I)'P + P(A + lambda I) = -I. Fails when A + lambda I has an
/// eigenvalue too close to the imaginary axis for the dominant/transient
/// split to be meaningful.
pub fn build_dominance_certificate(
    a: &Matrix,
    lambda: f64,
) -> Result<DominanceCertificate, DominanceError> {
    if !lambda.is_finite() {
        return Err(DominanceError::InvalidInput(format!(
            "rate must be finite, got {lambda}"
        )));
    }
    let mut shifted = a.clone();
    for i in 0..shifted.nrows().min(shifted.ncols()) {
        shifted[(i, i)] += lambda;
    }
    let eigs = eigenvalues(&shifted)?;
    let tol = 1e-9 * (1.0 + shifted.norm());
    let mut p = 0;
    for e in &eigs {
        if e.re.abs() <= tol {
            return Err(DominanceError::OnBoundary { re: e.re, tol });
        }
        if e.re > 0.0 {
            p += 1;
        }
    }
    let storage = solve_lyapunov(&shifted, &Matrix::identity(a.nrows(), a.nrows()))?;
    Ok(DominanceCertificate {
        storage,
        eps: 1.0,
        lambda,
        p,
    })
}

/// First clause a certificate failed, in check order.
#[derive(Debug, Clone, PartialEq)]
pub enum CertificateDefect {
    /// Inputs malformed: shape mismatch, asymmetry, non-finite data, or a
    /// failed eigendecomposition.
    Shape(String),
    /// The certificate inequality's largest eigenvalue exceeds the tolerance.
    Inequality { max_eigenvalue: f64, tol: f64 },
    /// The storage eigenvalue signs do not match the claimed degree.
    StorageInertia { found: Inertia, expected: Inertia },
}

impl std::fmt::Display for CertificateDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CertificateDefect::Shape(msg) => write!(f, "malformed certificate: {msg}"),
            CertificateDefect::Inequality {
                max_eigenvalue,
                tol,
            } => write!(
                f,
                "certificate inequality violated: max eigenvalue {max_eigenvalue:.6e} > {tol:.3e}"
            ),
            CertificateDefect::StorageInertia { found, expected } => write!(
                f,
                "storage inertia ({}, {}, {}) differs from expected ({}, {}, {})",
                found.positive,
                found.zero,
                found.negative,
                expected.positive,
                expected.zero,
                expected.negative
            ),
        }
    }
}

/// Outcome of a certificate check; never an error, failures carry a defect.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub ok: bool,
    /// Largest eigenvalue of the symmetrized certificate inequality block
    /// (NaN when the inputs were malformed).
    pub max_eigenvalue: f64,
    /// Inertia of the storage matrix (all zeros when malformed).
    pub inertia: Inertia,
    pub defect: Option<CertificateDefect>,
}

impl CertificateReport {
    fn malformed(msg: String) -> CertificateReport {
        CertificateReport {
            ok: false,
            max_eigenvalue: f64::NAN,
            inertia: Inertia {
                positive: 0,
                zero: 0,
                negative: 0,
            },
            defect: Some(CertificateDefect::Shape(msg)),
        }
    }

    fn from_checks(max_eigenvalue: f64, tol: f64, inertia: Inertia, p: usize) -> CertificateReport {
        let n = inertia.dim();
        let expected = Inertia {
            positive: n - p.min(n),
            zero: 0,
            negative: p.min(n),
        };
        let defect = if !(max_eigenvalue <= tol) {
            Some(CertificateDefect::Inequality {
                max_eigenvalue,
                tol,
            })
        } else if inertia != expected {
            Some(CertificateDefect::StorageInertia {
                found: inertia,
                expected,
            })
        } else {
            None
        };
        CertificateReport {
            ok: defect.is_none(),
            max_eigenvalue,
            inertia,
            defect,
        }
    }
}

/// Absolute tolerance suggestion for certificate inequalities, scaled to
/// the data so residuals of a correct solve pass with headroom.
pub fn default_certificate_tol(a: &Matrix, cert: &DominanceCertificate) -> f64 {
    1e-7 * (1.0 + a.norm()) * (1.0 + cert.storage.norm())
}

fn max_symmetric_eigenvalue(m: &Matrix) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(f64::NEG_INFINITY);
    }
    let sym = (m + m.transpose()) * 0.5;
    nalgebra::linalg::SymmetricEigen::try_new(sym, f64::EPSILON, 100_000)
        .map(|e| e.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

fn storage_inertia(storage: &Matrix) -> Result<Inertia, String> {
    symmetric_inertia(storage, default_inertia_tol(storage)).map_err(|e| e.to_string())
}

/// Checks A'P + PA + 2 lambda P + eps I <= tol I and the storage inertia
/// (n - p, 0, p). Structural problems come back as a `Shape` defect rather
/// than an error so callers always get a report.
pub fn verify_dominance_certificate(
    a: &Matrix,
    cert: &DominanceCertificate,
    tol: f64,
) -> CertificateReport {
    let n = a.nrows();
    if a.ncols() != n {
        return CertificateReport::malformed(format!("A must be square, got {n}x{}", a.ncols()));
    }
    if cert.storage.nrows() != n || cert.storage.ncols() != n {
        return CertificateReport::malformed(format!(
            "storage is {}x{} but A is {n}x{n}",
            cert.storage.nrows(),
            cert.storage.ncols()
        ));
    }
    if !(cert.eps.is_finite() && cert.lambda.is_finite())
        || a.iter().any(|v| !v.is_finite())
        || cert.storage.iter().any(|v| !v.is_finite())
    {
        return CertificateReport::malformed("non-finite data".into());
    }
    let asym = (&cert.storage - cert.storage.transpose()).amax();
    if asym > 1e-8 * cert.storage.amax().max(1.0) {
        return CertificateReport::malformed(format!("storage asymmetry {asym:.3e}"));
    }
    let p = (&cert.storage + cert.storage.transpose()) * 0.5;
    let mut block = a.transpose() * &p + &p * a + &p * (2.0 * cert.lambda);
    for i in 0..n {
        block[(i, i)] += cert.eps;
    }
    let Some(max_eig) = max_symmetric_eigenvalue(&block) else {
        return CertificateReport::malformed("eigendecomposition did not converge".into());
    };
    match storage_inertia(&p) {
        Ok(inertia) => CertificateReport::from_checks(max_eig, tol, inertia, cert.p),
        Err(msg) => CertificateReport::malformed(msg),
    }
}

/// Checks the open-system dissipation inequality for a quadratic supply:
/// the block matrix
///
/// ```text
/// [ A'P + PA + 2 lambda P - C'QC + eps I ,  PB - C'QD - C'L          ]
/// [ (PB - C'QD - C'L)'                   , -R - D'QD - D'L - L'D     ]
/// ```
///
/// must be negative semidefinite (up to tol) with the storage inertia
/// (n - p, 0, p). With the supply fixed to zero and no input coupling this
/// collapses to the plain dominance check on A.
pub fn verify_dissipativity_certificate(
    sys: &StateSpace,
    supply: &Supply,
    cert: &DominanceCertificate,
    tol: f64,
) -> CertificateReport {
    let n = sys.order();
    let (m_in, m_out) = (sys.inputs(), sys.outputs());
    if supply.output_dim() != m_out || supply.input_dim() != m_in {
        return CertificateReport::malformed(format!(
            "supply blocks sized for {}x{} but the system has {m_out} outputs and {m_in} inputs",
            supply.output_dim(),
            supply.input_dim()
        ));
    }
    if cert.storage.nrows() != n || cert.storage.ncols() != n {
        return CertificateReport::malformed(format!(
            "storage is {}x{} but the state dimension is {n}",
            cert.storage.nrows(),
            cert.storage.ncols()
        ));
    }
    if !(cert.eps.is_finite() && cert.lambda.is_finite())
        || cert.storage.iter().any(|v| !v.is_finite())
    {
        return CertificateReport::malformed("non-finite data".into());
    }
    let asym = (&cert.storage - cert.storage.transpose()).amax();
    if asym > 1e-8 * cert.storage.amax().max(1.0) {
        return CertificateReport::malformed(format!("storage asymmetry {asym:.3e}"));
    }
    let p = (&cert.storage + cert.storage.transpose()) * 0.5;
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let top_left = a.transpose() * &p + &p * a + &p * (2.0 * cert.lambda)
        - c.transpose() * supply.q() * c;
    let top_right = &p * b - c.transpose() * supply.q() * d - c.transpose() * supply.l();
    let bottom_right = -supply.r()
        - d.transpose() * supply.q() * d
        - d.transpose() * supply.l()
        - supply.l().transpose() * d;
    let mut block = Matrix::zeros(n + m_in, n + m_in);
    for i in 0..n {
        block[(i, i)] = cert.eps;
    }
    block.view_mut((0, 0), (n, n)).iter_mut().zip(top_left.iter()).for_each(|(o, v)| *o += v);
    block.view_mut((0, n), (n, m_in)).copy_from(&top_right);
    block
        .view_mut((n, 0), (m_in, n))
        .copy_from(&top_right.transpose());
    block.view_mut((n, n), (m_in, m_in)).copy_from(&bottom_right);
    let Some(max_eig) = max_symmetric_eigenvalue(&block) else {
        return CertificateReport::malformed("eigendecomposition did not converge".into());
    };
    match storage_inertia(&p) {
        Ok(inertia) => CertificateReport::from_checks(max_eig, tol, inertia, cert.p),
        Err(msg) => CertificateReport::malformed(msg),
    }
}

/// Frequency-domain dissipativity verdict for a scalar supply.
#[derive(Debug, Clone, Copy)]
pub struct KypReport {
    /// Margin nonnegative everywhere and the pole count matches.
    pub holds: bool,
    /// Margin also clears the strictness threshold
    /// 1e-7 * (1 + |Q| + |L| + |R|); the passivity supply on a strictly
    /// proper system sits at exactly zero in the limit, so `holds` without
    /// `strict` is the expected outcome there.
    pub strict: bool,
    /// Shifted open-right-half-plane pole count found.
    pub p: usize,
    pub requested_p: usize,
    /// Minimum of Q|G|^2 + 2L Re G + R over the grid and the limit at
    /// infinity.
    pub min_margin: f64,
    /// Minimum over the finite grid alone.
    pub min_margin_finite: f64,
    /// Frequency attaining `min_margin`; None means the limit at infinity.
    pub argmin_omega: Option<f64>,
}

/// Tests p-dissipativity of G with rate lambda through the shifted
/// frequency response: the supply margin Q|G(jw - lambda)|^2
/// + 2 L Re G(jw - lambda) + R must be nonnegative on the grid and in the
/// limit |w| -> inf, and G(s - lambda) must have exactly `requested_p`
/// poles in the open right half-plane.
pub fn kyp_frequency_test(
    g: &TransferFunction,
    lambda: f64,
    supply: &Supply,
    requested_p: usize,
    grid: &FrequencyGrid,
) -> Result<KypReport, DominanceError> {
    let (sq, sl, sr) = supply.scalar().ok_or(DominanceError::NotScalarSupply {
        outputs: supply.output_dim(),
        inputs: supply.input_dim(),
    })?;
    let (p, _, boundary) = shifted_pole_counts(g, lambda)?;
    if let Some(re) = boundary {
        return Err(DominanceError::OnBoundary {
            re,
            tol: crate::lti::default_boundary_tol(lambda),
        });
    }
    let shifted = g.shift(lambda);
    let margins = exec::map_slice(grid.omegas(), |&w| {
        shifted.evaluate(Complex64::new(0.0, w)).map(|gv| {
            sq * gv.norm_sqr() + 2.0 * sl * gv.re + sr
        })
    });
    let mut min_finite = f64::INFINITY;
    let mut argmin = None;
    for (&w, m) in grid.omegas().iter().zip(margins) {
        let m = m?;
        if m < min_finite {
            min_finite = m;
            argmin = Some(w);
        }
    }
    let g_inf = shifted.limit_at_infinity()?;
    let tail = sq * g_inf * g_inf + 2.0 * sl * g_inf + sr;
    let (min_margin, argmin_omega) = if tail < min_finite {
        (tail, None)
    } else {
        (min_finite, argmin)
    };
    let pole_ok = p == requested_p;
    Ok(KypReport {
        holds: pole_ok && min_margin >= 0.0,
        strict: pole_ok && min_margin > 1e-7 * (1.0 + sq.abs() + sl.abs() + sr.abs()),
        p,
        requested_p,
        min_margin,
        min_margin_finite: min_finite,
        argmin_omega,
    })
}

/// Degrees p for which p-passivity of G with rate lambda is not excluded
/// by the relative degree Delta and the shifted unstable zero count r:
/// feasibility requires 2p - Delta - 1 <= 2r <= 2p - Delta + 1 and
/// Delta <= 2p + 1, with p at most the system order.
pub fn passivity_degree_candidates(
    g: &TransferFunction,
    lambda: f64,
) -> Result<Vec<usize>, DominanceError> {
    let tol = crate::lti::default_boundary_tol(lambda);
    let split = crate::lti::pole_zero_split(g, lambda, tol)?;
    if split.boundary {
        let shifted = g.shift(lambda);
        let mut worst = 0.0f64;
        let mut found = false;
        let mut roots = poly_roots(shifted.den())?;
        if !shifted.num().is_zero() {
            roots.extend(poly_roots(shifted.num())?);
        }
        for root in roots {
            if root.re.abs() <= tol && (!found || root.re.abs() < worst.abs()) {
                worst = root.re;
                found = true;
            }
        }
        return Err(DominanceError::OnBoundary { re: worst, tol });
    }
    let delta = split.n_total as i64 - split.q as i64;
    if delta < 0 {
        return Err(DominanceError::InvalidInput(
            "transfer function must be proper".into(),
        ));
    }
    let r = split.r as i64;
    Ok((0..=split.n_total)
        .filter(|&p| {
            let p = p as i64;
            2 * r >= 2 * p - delta - 1 && 2 * r <= 2 * p - delta + 1 && delta <= 2 * p + 1
        })
        .collect())
}

/// Real-part band treated as "stable enough" by the gain scan: sampled
/// closed-loop eigenvalues within [-inf, margin] pass. Oscillator-type
/// loops hug the imaginary axis at large gains, where an honest eigenvalue
/// computation reports real parts of either sign at the 1e-5 scale; the
/// band keeps the scan a meaningful necessary-condition screen instead of
/// a noise amplifier. Set the margin to zero for a literal Hurwitz test.
pub const DEFAULT_STABILITY_MARGIN: f64 = 1e-4;

/// Outcome of a pointwise gain sweep.
#[derive(Debug, Clone, Copy)]
pub struct GainScan {
    /// Every sampled closed loop kept its spectrum within the margin band.
    pub all_within_margin: bool,
    /// Gain attaining the largest closed-loop real part.
    pub worst_gain: f64,
    pub worst_real_part: f64,
    pub samples: usize,
}

/// Samples gains in [k1, k2] and checks that every closed loop
/// A - K B C keeps its eigenvalues within the default stability margin.
/// A sampled sweep is a necessary-condition screen: it can refute
/// all-gain stability, never prove it.
pub fn pointwise_gain_stability_scan(
    sys: &StateSpace,
    k1: f64,
    k2: f64,
    samples: usize,
) -> Result<bool, DominanceError> {
    Ok(
        gain_stability_scan_with_margin(sys, k1, k2, samples, DEFAULT_STABILITY_MARGIN)?
            .all_within_margin,
    )
}

/// [`pointwise_gain_stability_scan`] with an explicit margin band,
/// reporting the worst sampled gain. Gains are log-spaced for positive
/// ranges (k1 = 0 contributes the endpoint itself plus a floor of
/// 1e-9 k2) and linearly spaced otherwise.
pub fn gain_stability_scan_with_margin(
    sys: &StateSpace,
    k1: f64,
    k2: f64,
    samples: usize,
    margin: f64,
) -> Result<GainScan, DominanceError> {
    if !sys.is_siso() {
        return Err(DominanceError::InvalidInput(format!(
            "gain scan needs a SISO system, got {} inputs and {} outputs",
            sys.inputs(),
            sys.outputs()
        )));
    }
    if !(k1.is_finite() && k2.is_finite() && k1 <= k2) || !margin.is_finite() {
        return Err(DominanceError::InvalidInput(format!(
            "gain range [{k1}, {k2}] with margin {margin} is invalid"
        )));
    }
    if samples < 2 {
        return Err(DominanceError::InvalidInput(
            "gain scan needs at least 2 samples".into(),
        ));
    }
    let mut gains = Vec::with_capacity(samples);
    if k1 > 0.0 {
        let (a, b) = (k1.ln(), k2.ln());
        for i in 0..samples {
            gains.push((a + (b - a) * i as f64 / (samples - 1) as f64).exp());
        }
    } else if k1 == 0.0 && k2 > 0.0 {
        gains.push(0.0);
        let (a, b) = ((k2 * 1e-9).ln(), k2.ln());
        for i in 0..samples - 1 {
            gains.push((a + (b - a) * i as f64 / (samples - 2).max(1) as f64).exp());
        }
    } else {
        for i in 0..samples {
            gains.push(k1 + (k2 - k1) * i as f64 / (samples - 1) as f64);
        }
    }
    let bc = sys.b() * sys.c();
    let a = sys.a();
    let worst_res = exec::map_slice(&gains, |&k| {
        eigenvalues(&(a - &bc * k)).map(|eigs| {
            eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max)
        })
    });
    let mut worst_gain = gains[0];
    let mut worst_re = f64::NEG_INFINITY;
    for (&k, res) in gains.iter().zip(worst_res) {
        let re = res?;
        if re > worst_re {
            worst_re = re;
            worst_gain = k;
        }
    }
    Ok(GainScan {
        all_within_margin: worst_re <= margin,
        worst_gain,
        worst_real_part: worst_re,
        samples: gains.len(),
    })
}

/// One probed rate in a [`rate_scan`]: `pole_count` and `margin` are absent
/// when a pole sat on the shifted axis at this rate.
#[derive(Debug, Clone, Copy)]
pub struct RateScanPoint {
    pub lambda: f64,
    /// Shifted open-right-half-plane pole count.
    pub pole_count: Option<usize>,
    /// Minimum supply margin over the finite grid. The limit at infinity is
    /// deliberately excluded: for strictly proper systems it pins the
    /// passivity margin to exactly zero at every rate, which would make
    /// every sign-based window empty.
    pub margin: Option<f64>,
}

/// Maximal interval of rates where the pole count matches and the margin
/// stays positive; endpoints interior to the scan range are refined by
/// bisection.
#[derive(Debug, Clone, Copy)]
pub struct RateWindow {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub struct RateScan {
    pub points: Vec<RateScanPoint>,
    pub windows: Vec<RateWindow>,
}

/// Sweeps the rate over [lambda_lo, lambda_hi] (inclusive, `steps` probes),
/// reporting the pole split and finite-grid supply margin at each rate and
/// the sign-based admissibility windows for the requested degree.
pub fn rate_scan(
    g: &TransferFunction,
    supply: &Supply,
    requested_p: usize,
    lambda_lo: f64,
    lambda_hi: f64,
    steps: usize,
    grid_points: usize,
) -> Result<RateScan, DominanceError> {
    if !(lambda_lo.is_finite() && lambda_hi.is_finite() && lambda_lo < lambda_hi) || steps < 2 {
        return Err(DominanceError::InvalidInput(format!(
            "rate range [{lambda_lo}, {lambda_hi}] with {steps} steps is invalid"
        )));
    }
    supply.scalar().ok_or(DominanceError::NotScalarSupply {
        outputs: supply.output_dim(),
        inputs: supply.input_dim(),
    })?;
    let lambdas: Vec<f64> = (0..steps)
        .map(|i| lambda_lo + (lambda_hi - lambda_lo) * i as f64 / (steps - 1) as f64)
        .collect();
    let points = exec::map_slice(&lambdas, |&lambda| probe_rate(g, supply, lambda, grid_points));
    let admissible = |pt: &RateScanPoint| {
        pt.pole_count == Some(requested_p) && pt.margin.is_some_and(|m| m > 0.0)
    };
    let mut windows = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..points.len() {
        let good = admissible(&points[i]);
        if good && run_start.is_none() {
            run_start = Some(i);
        }
        if (!good || i + 1 == points.len()) && run_start.is_some() {
            let start = run_start.take().unwrap();
            let end = if good { i } else { i - 1 };
            let lo = if start == 0 {
                lambdas[0]
            } else {
                bisect_edge(g, supply, requested_p, lambdas[start - 1], lambdas[start], grid_points)
            };
            let hi = if end + 1 == points.len() {
                lambdas[end]
            } else {
                bisect_edge(g, supply, requested_p, lambdas[end + 1], lambdas[end], grid_points)
            };
            windows.push(RateWindow { lo, hi });
        }
    }
    Ok(RateScan { points, windows })
}

fn probe_rate(g: &TransferFunction, supply: &Supply, lambda: f64, grid_points: usize) -> RateScanPoint {
    let bad = RateScanPoint {
        lambda,
        pole_count: None,
        margin: None,
    };
    let Ok(grid) = FrequencyGrid::standard_with(
        g,
        lambda,
        crate::frequency::DEFAULT_OMEGA_MIN,
        crate::frequency::DEFAULT_OMEGA_MAX,
        grid_points,
    ) else {
        return bad;
    };
    // The requested degree does not matter for the probe data; pole count
    // and margin are reported as found.
    match kyp_frequency_test(g, lambda, supply, 0, &grid) {
        Ok(report) => RateScanPoint {
            lambda,
            pole_count: Some(report.p),
            margin: Some(report.min_margin_finite),
        },
        Err(_) => bad,
    }
}

/// Bisects between an inadmissible and an admissible rate until the
/// bracket is 1e-3 of the initial gap or 40 rounds.
fn bisect_edge(
    g: &TransferFunction,
    supply: &Supply,
    requested_p: usize,
    mut bad: f64,
    mut good: f64,
    grid_points: usize,
) -> f64 {
    let width = (good - bad).abs();
    for _ in 0..40 {
        if (good - bad).abs() <= 1e-3 * width {
            break;
        }
        let mid = 0.5 * (bad + good);
        let pt = probe_rate(g, supply, mid, grid_points);
        let ok = pt.pole_count == Some(requested_p) && pt.margin.is_some_and(|m| m > 0.0);
        if ok {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}
