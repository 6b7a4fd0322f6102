//! Frequency-domain dominance tests: shifted Nyquist loci, winding numbers,
//! sector disks, the loop transformation, positive-realness, and the circle
//! criterion for feedback loops with a slope-bounded nonlinearity.
//!
//! All tests evaluate G(s - lambda) along the imaginary axis, i.e. G along
//! the boundary of the region Re(s) > -lambda where dominant poles live.
//! Winding numbers are counterclockwise-positive; the criterion's
//! encirclement count E is clockwise-positive, so E = -winding.

use num_complex::Complex64;
use thiserror::Error;

use crate::exec;
use crate::lti::{default_boundary_tol, poly_roots, LtiError, TransferFunction};

#[derive(Debug, Error)]
pub enum FrequencyError {
    #[error("pole within {tol:.3e} of the shifted imaginary axis (Re = {re:.3e})")]
    BoundaryPole { re: f64, tol: f64 },
    #[error("test point {point} is within {distance:.3e} of the locus; winding is inconclusive")]
    PointOnLocus { point: Complex64, distance: f64 },
    #[error("accumulated phase is {turns} turns, not close to an integer; the grid is too coarse")]
    GridTooCoarse { turns: f64 },
    #[error("locus grazes the sector-disk boundary (clearance {clearance:.3e}); verdict inconclusive")]
    DiskGrazing { clearance: f64 },
    #[error("sector bounds must satisfy k1 < k2 and not both zero, got k1 = {k1}, k2 = {k2}")]
    InvalidSector { k1: f64, k2: f64 },
    #[error("feedback gain must be nonzero")]
    ZeroGain,
    #[error("1 + k1*G vanishes at omega = {omega}; the sector transform is singular there")]
    SingularTransform { omega: f64 },
    #[error("pole count q + E = {value} falls outside [0, {total}]; locus and pole data disagree")]
    InconsistentCount { value: i64, total: usize },
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Lti(#[from] LtiError),
}

/// Sampling grid of nonnegative frequencies; `symmetric` grids are mirrored
/// to negative frequencies by conjugation when a locus is built from them.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
    symmetric: bool,
}

/// Default sweep bounds and density for [`FrequencyGrid::standard`].
pub const DEFAULT_OMEGA_MIN: f64 = 1e-3;
pub const DEFAULT_OMEGA_MAX: f64 = 1e4;
pub const DEFAULT_GRID_POINTS: usize = 2000;

impl FrequencyGrid {
    /// Grid from explicit frequencies: finite, strictly ascending, and
    /// nonnegative when `symmetric` (the negative half is implied).
    pub fn from_omegas(omegas: Vec<f64>, symmetric: bool) -> Result<Self, FrequencyError> {
        if omegas.is_empty() {
            return Err(FrequencyError::InvalidGrid("empty grid".into()));
        }
        for w in &omegas {
            if !w.is_finite() {
                return Err(FrequencyError::InvalidGrid("non-finite frequency".into()));
            }
        }
        if omegas.windows(2).any(|p| p[0] >= p[1]) {
            return Err(FrequencyError::InvalidGrid(
                "frequencies must be strictly ascending".into(),
            ));
        }
        if symmetric && omegas[0] < 0.0 {
            return Err(FrequencyError::InvalidGrid(
                "symmetric grids must hold nonnegative frequencies".into(),
            ));
        }
        Ok(FrequencyGrid { omegas, symmetric })
    }

    /// Log-spaced symmetric grid on [omega_min, omega_max] with omega = 0
    /// prepended so the locus always crosses the real axis explicitly.
    pub fn log_spaced(omega_min: f64, omega_max: f64, points: usize) -> Result<Self, FrequencyError> {
        let base = log_points(omega_min, omega_max, points)?;
        let mut omegas = vec![0.0];
        omegas.extend(base);
        FrequencyGrid::from_omegas(omegas, true)
    }

    /// Default analysis grid: log-spaced base sweep plus omega = 0, densified
    /// tenfold across one decade centered on each shifted pole's |Im|, so the
    /// locus resolves resonant lobes where it moves fastest.
    pub fn standard(g: &TransferFunction, lambda: f64) -> Result<Self, FrequencyError> {
        FrequencyGrid::standard_with(
            g,
            lambda,
            DEFAULT_OMEGA_MIN,
            DEFAULT_OMEGA_MAX,
            DEFAULT_GRID_POINTS,
        )
    }

    /// [`FrequencyGrid::standard`] with explicit bounds and base density.
    pub fn standard_with(
        g: &TransferFunction,
        lambda: f64,
        omega_min: f64,
        omega_max: f64,
        points: usize,
    ) -> Result<Self, FrequencyError> {
        let mut all = log_points(omega_min, omega_max, points)?;
        let decades = (omega_max / omega_min).log10();
        let per_decade = (points as f64 / decades).ceil() as usize;
        let shifted = g.shift(lambda);
        for pole in poly_roots(shifted.den())? {
            let w0 = pole.im.abs();
            let lo = (w0 / 10f64.sqrt()).max(omega_min);
            let hi = (w0 * 10f64.sqrt()).min(omega_max);
            if w0 <= 0.0 || lo >= hi {
                continue;
            }
            all.extend(log_points(lo, hi, 10 * per_decade)?);
        }
        all.sort_by(f64::total_cmp);
        all.dedup();
        let mut omegas = vec![0.0];
        omegas.extend(all);
        FrequencyGrid::from_omegas(omegas, true)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

fn log_points(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, FrequencyError> {
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || lo >= hi || points < 2 {
        return Err(FrequencyError::InvalidGrid(format!(
            "log spacing needs 0 < lo < hi and points >= 2, got [{lo}, {hi}] with {points}"
        )));
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..points)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
        .collect())
}

/// What to do when a shifted pole sits on the sweep path.
#[derive(Debug, Clone, Copy)]
pub enum Indentation {
    /// Fail with [`FrequencyError::BoundaryPole`].
    Reject,
    /// Detour around each boundary pole along a semicircle of the given
    /// radius bulging into Re > 0, excluding the pole from the region.
    Arc { radius: f64 },
}

/// Default detour radius for [`Indentation::Arc`].
pub const DEFAULT_INDENT_RADIUS: f64 = 1e-4;

const INDENT_ARC_POINTS: usize = 129;

/// Image of the shifted imaginary axis under G, ordered by increasing
/// frequency from -omega_max to +omega_max, plus the closure point that the
/// locus approaches as |omega| grows without bound.
#[derive(Debug, Clone)]
pub struct NyquistLocus {
    points: Vec<Complex64>,
    omegas: Vec<f64>,
    closure: Complex64,
}

impl NyquistLocus {
    pub(crate) fn from_parts(points: Vec<Complex64>, omegas: Vec<f64>, closure: Complex64) -> Self {
        NyquistLocus {
            points,
            omegas,
            closure,
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn closure(&self) -> Complex64 {
        self.closure
    }

    /// CSV export: `omega,re,im,is_closure` rows in path order, closure last
    /// with omega = inf. '.' decimal, ',' separator, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,re,im,is_closure\n");
        for (w, z) in self.omegas.iter().zip(&self.points) {
            out.push_str(&format!("{},{},{},0\n", w, z.re, z.im));
        }
        out.push_str(&format!("inf,{},{},1\n", self.closure.re, self.closure.im));
        out
    }

    /// Closed polygon in path order: closure, the sampled points, and back
    /// to the closure through the arc at infinity.
    fn cycle(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        let verts = std::iter::once(self.closure)
            .chain(self.points.iter().copied())
            .chain(std::iter::once(self.closure));
        let next = self
            .points
            .iter()
            .copied()
            .chain([self.closure, self.closure]);
        verts.zip(next)
    }

    fn vertices(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.points.iter().copied().chain([self.closure])
    }
}

/// Locus of G(s - lambda) along the shifted imaginary axis; errors when a
/// shifted pole sits on the path.
pub fn nyquist_locus(
    g: &TransferFunction,
    lambda: f64,
    grid: &FrequencyGrid,
) -> Result<NyquistLocus, FrequencyError> {
    nyquist_locus_with(g, lambda, grid, Indentation::Reject)
}

/// [`nyquist_locus`] with a boundary-pole policy; `Indentation::Arc` detours
/// around poles on the path (symmetric grids only).
pub fn nyquist_locus_with(
    g: &TransferFunction,
    lambda: f64,
    grid: &FrequencyGrid,
    indentation: Indentation,
) -> Result<NyquistLocus, FrequencyError> {
    let shifted = g.shift(lambda);
    let tol = default_boundary_tol(lambda);
    let mut boundary_ims = boundary_pole_ims(&shifted, tol)?;
    let radius = match indentation {
        Indentation::Reject => {
            if let Some(&im) = boundary_ims.first() {
                let re = poly_roots(shifted.den())?
                    .into_iter()
                    .find(|r| (r.im - im).abs() < 1e-9 * (1.0 + im.abs()))
                    .map_or(0.0, |r| r.re);
                return Err(FrequencyError::BoundaryPole { re, tol });
            }
            0.0
        }
        Indentation::Arc { radius } => {
            if !boundary_ims.is_empty() && !grid.symmetric {
                return Err(FrequencyError::InvalidGrid(
                    "indentation requires a symmetric grid".into(),
                ));
            }
            if !(radius.is_finite() && radius > 0.0) {
                return Err(FrequencyError::InvalidGrid(format!(
                    "indentation radius must be positive, got {radius}"
                )));
            }
            if grid.symmetric {
                // The mirror sweep supplies the conjugate arcs; keep only
                // poles whose detour touches Im(s) >= 0.
                boundary_ims.retain(|&im| im > -radius);
            }
            radius
        }
    };

    // Path samples for the nonnegative (or explicit) sweep: keyed by Im(s)
    // so detour arcs merge into frequency order.
    let mut samples: Vec<(f64, Complex64)> = Vec::with_capacity(grid.omegas.len());
    for &w in &grid.omegas {
        if boundary_ims.iter().any(|&im| (w - im).abs() <= radius) {
            continue;
        }
        samples.push((w, Complex64::new(0.0, w)));
    }
    for &im in &boundary_ims {
        // Right-bulging semicircle around j*im; for symmetric sweeps only the
        // Im(s) >= 0 part is kept, the mirror supplies the rest.
        let theta_lo = if grid.symmetric && im < radius {
            (-im / radius).asin()
        } else {
            -std::f64::consts::FRAC_PI_2
        };
        let theta_hi = std::f64::consts::FRAC_PI_2;
        for i in 0..INDENT_ARC_POINTS {
            let theta = theta_lo + (theta_hi - theta_lo) * i as f64 / (INDENT_ARC_POINTS - 1) as f64;
            let s = Complex64::new(radius * theta.cos(), im + radius * theta.sin());
            samples.push((s.im, s));
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));

    let values = {
        let results = exec::map_slice(&samples, |(_, s)| shifted.evaluate(*s));
        let mut vals = Vec::with_capacity(results.len());
        for r in results {
            vals.push(r?);
        }
        vals
    };

    let closure = Complex64::new(shifted.limit_at_infinity()?, 0.0);
    if grid.symmetric {
        let n = samples.len();
        let mut points = Vec::with_capacity(2 * n);
        let mut omegas = Vec::with_capacity(2 * n);
        for i in (0..n).rev() {
            if samples[i].0 == 0.0 {
                continue;
            }
            points.push(values[i].conj());
            omegas.push(-samples[i].0);
        }
        points.extend(&values);
        omegas.extend(samples.iter().map(|(w, _)| *w));
        Ok(NyquistLocus::from_parts(points, omegas, closure))
    } else {
        Ok(NyquistLocus::from_parts(
            values,
            samples.iter().map(|(w, _)| *w).collect(),
            closure,
        ))
    }
}

/// Imaginary parts (nonnegative representatives first) of shifted poles
/// within `tol` of the imaginary axis, deduplicated.
fn boundary_pole_ims(shifted: &TransferFunction, tol: f64) -> Result<Vec<f64>, FrequencyError> {
    let mut ims: Vec<f64> = poly_roots(shifted.den())?
        .into_iter()
        .filter(|r| r.re.abs() <= tol)
        .map(|r| r.im)
        .collect();
    ims.sort_by(f64::total_cmp);
    ims.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())));
    Ok(ims)
}

fn segment_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Counterclockwise winding number of the closed locus (sampled path plus
/// the closure at infinity) around `point`. Errors when the point sits on
/// the path within tolerance or the accumulated phase is not near an
/// integer number of turns.
pub fn winding_number(locus: &NyquistLocus, point: Complex64) -> Result<i64, FrequencyError> {
    let scale = locus
        .vertices()
        .map(|v| (v - point).norm())
        .fold(0.0f64, f64::max);
    let mut min_dist = f64::INFINITY;
    let mut total = 0.0;
    for (a, b) in locus.cycle() {
        min_dist = min_dist.min(segment_distance(a, b, point));
        let (za, zb) = (a - point, b - point);
        if za.norm() == 0.0 || zb.norm() == 0.0 {
            min_dist = 0.0;
            break;
        }
        total += (zb * za.conj()).arg();
    }
    if min_dist < 1e-6 * scale || min_dist == 0.0 {
        return Err(FrequencyError::PointOnLocus {
            point,
            distance: min_dist,
        });
    }
    let turns = total / std::f64::consts::TAU;
    let nearest = turns.round();
    if (turns - nearest).abs() > 1e-3 {
        return Err(FrequencyError::GridTooCoarse { turns });
    }
    Ok(nearest as i64)
}

/// Shifted open-right-half-plane pole count, total pole count, and the
/// worst boundary violation if any root sits on the axis.
pub(crate) fn shifted_pole_counts(
    g: &TransferFunction,
    lambda: f64,
) -> Result<(usize, usize, Option<f64>), FrequencyError> {
    let shifted = g.shift(lambda);
    let tol = default_boundary_tol(lambda);
    let poles = poly_roots(shifted.den())?;
    let mut q = 0;
    let mut boundary: Option<f64> = None;
    for r in &poles {
        if r.re.abs() <= tol {
            let better = boundary.is_none_or(|b| r.re.abs() < b.abs());
            if better {
                boundary = Some(r.re);
            }
        } else if r.re > 0.0 {
            q += 1;
        }
    }
    Ok((q, poles.len(), boundary))
}

/// Dominance degree of the feedback loop with constant gain k: the number of
/// closed-loop poles right of Re(s) = -lambda, read off the locus as
/// p2 = p1 + E where E is the clockwise winding around -1/k.
pub fn nyquist_dominance(
    g: &TransferFunction,
    lambda: f64,
    k: f64,
    grid: &FrequencyGrid,
) -> Result<usize, FrequencyError> {
    if k == 0.0 {
        return Err(FrequencyError::ZeroGain);
    }
    let (p1, total, boundary) = shifted_pole_counts(g, lambda)?;
    if let Some(re) = boundary {
        return Err(FrequencyError::BoundaryPole {
            re,
            tol: default_boundary_tol(lambda),
        });
    }
    let locus = nyquist_locus(g, lambda, grid)?;
    let winding = winding_number(&locus, Complex64::new(-1.0 / k, 0.0))?;
    let p2 = p1 as i64 - winding;
    if p2 < 0 || p2 > total as i64 {
        return Err(FrequencyError::InconsistentCount { value: p2, total });
    }
    Ok(p2 as usize)
}

/// Sector reduction G~ = G / (1 + k1 G): the loop of G with slope-[k1, k2]
/// feedback becomes the loop of G~ with slope-[0, k2 - k1] feedback.
pub fn loop_transform(g: &TransferFunction, k1: f64) -> Result<TransferFunction, FrequencyError> {
    let den = g.den().add(&g.num().scale(k1));
    Ok(TransferFunction::new(g.num().clone(), den)?)
}

#[derive(Debug, Clone, Copy)]
pub struct PositiveRealReport {
    pub holds: bool,
    /// Minimum of Re (1 + k2 G)/(1 + k1 G) over the grid and the limit at
    /// infinity.
    pub min_margin: f64,
    /// Frequency attaining the minimum; `None` means the limit at infinity.
    pub argmin_omega: Option<f64>,
}

/// Positive-realness of the sector-transformed system
/// Z = (1 + k2 G)/(1 + k1 G) along the shifted axis; `holds` requires the
/// margin to clear a strictness threshold of 1e-7 * (1 + |k1| + |k2|).
pub fn positive_real_test(
    g: &TransferFunction,
    lambda: f64,
    k1: f64,
    k2: f64,
    grid: &FrequencyGrid,
) -> Result<PositiveRealReport, FrequencyError> {
    if !(k1 < k2) || !(k1.is_finite() && k2.is_finite()) {
        return Err(FrequencyError::InvalidSector { k1, k2 });
    }
    let (_, _, boundary) = shifted_pole_counts(g, lambda)?;
    if let Some(re) = boundary {
        return Err(FrequencyError::BoundaryPole {
            re,
            tol: default_boundary_tol(lambda),
        });
    }
    let shifted = g.shift(lambda);
    let z_re = |gv: Complex64, omega: f64| -> Result<f64, FrequencyError> {
        let d = Complex64::new(1.0, 0.0) + gv * k1;
        if d.norm() < 1e-12 * (1.0 + (gv * k1).norm()) {
            return Err(FrequencyError::SingularTransform { omega });
        }
        Ok(((Complex64::new(1.0, 0.0) + gv * k2) / d).re)
    };
    let mut min_margin = f64::INFINITY;
    let mut argmin = None;
    let values = exec::map_slice(grid.omegas(), |&w| {
        shifted
            .evaluate(Complex64::new(0.0, w))
            .map_err(FrequencyError::from)
            .and_then(|gv| z_re(gv, w))
    });
    for (&w, v) in grid.omegas().iter().zip(values) {
        let v = v?;
        if v < min_margin {
            min_margin = v;
            argmin = Some(w);
        }
    }
    let g_inf = Complex64::new(shifted.limit_at_infinity()?, 0.0);
    let tail = z_re(g_inf, f64::INFINITY)?;
    if tail < min_margin {
        min_margin = tail;
        argmin = None;
    }
    Ok(PositiveRealReport {
        holds: min_margin > 1e-7 * (1.0 + k1.abs() + k2.abs()),
        min_margin,
        argmin_omega: argmin,
    })
}

/// Geometry the locus must avoid or stay inside, determined by the sector
/// sign pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiskMode {
    /// 0 < k1 < k2 or k1 < k2 < 0: the locus must stay outside the disk.
    Outside,
    /// k1 < 0 < k2: the locus must stay inside the disk.
    Inside,
    /// k1 = 0: the disk degenerates to the half-plane Re > center.
    HalfPlaneRight,
    /// k2 = 0: the half-plane Re < center.
    HalfPlaneLeft,
}

/// Critical disk for the sector [k1, k2]: real-axis diameter from -1/k1 to
/// -1/k2. In half-plane modes `center` holds the boundary abscissa and
/// `radius` is infinite.
#[derive(Debug, Clone, Copy)]
pub struct Disk {
    pub center: f64,
    pub radius: f64,
    pub mode: DiskMode,
}

pub fn disk(k1: f64, k2: f64) -> Result<Disk, FrequencyError> {
    if !(k1 < k2) || !(k1.is_finite() && k2.is_finite()) {
        return Err(FrequencyError::InvalidSector { k1, k2 });
    }
    if k1 == 0.0 {
        return Ok(Disk {
            center: -1.0 / k2,
            radius: f64::INFINITY,
            mode: DiskMode::HalfPlaneRight,
        });
    }
    if k2 == 0.0 {
        return Ok(Disk {
            center: -1.0 / k1,
            radius: f64::INFINITY,
            mode: DiskMode::HalfPlaneLeft,
        });
    }
    let mode = if k1 > 0.0 || k2 < 0.0 {
        DiskMode::Outside
    } else {
        DiskMode::Inside
    };
    Ok(Disk {
        center: -(k1 + k2) / (2.0 * k1 * k2),
        radius: (k2 - k1) / (2.0 * (k1 * k2).abs()),
        mode,
    })
}

/// Signed clearance of the locus against the disk constraint; positive means
/// the constraint holds with that margin.
fn disk_clearance(locus: &NyquistLocus, d: &Disk) -> f64 {
    let c = Complex64::new(d.center, 0.0);
    match d.mode {
        DiskMode::Outside => {
            // A segment may dip toward the disk between vertices, so measure
            // distance to every segment of the closed path.
            let mut min = f64::INFINITY;
            for (a, b) in locus.cycle() {
                min = min.min(segment_distance(a, b, c));
            }
            min - d.radius
        }
        // max |z - c| over a segment is attained at an endpoint.
        DiskMode::Inside => {
            d.radius
                - locus
                    .vertices()
                    .map(|v| (v - c).norm())
                    .fold(0.0f64, f64::max)
        }
        DiskMode::HalfPlaneRight => {
            locus
                .vertices()
                .map(|v| v.re)
                .fold(f64::INFINITY, f64::min)
                - d.center
        }
        DiskMode::HalfPlaneLeft => {
            d.center
                - locus
                    .vertices()
                    .map(|v| v.re)
                    .fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

/// Per-clause outcomes of the circle criterion. `sector` stays `None` until
/// the caller validates the actual nonlinearity against the declared slope
/// bounds; the locus alone cannot decide it.
#[derive(Debug, Clone, Copy)]
pub struct ClauseChecks {
    pub sector: Option<bool>,
    pub no_boundary_poles: bool,
    pub encirclement: bool,
    pub disk: bool,
}

#[derive(Debug, Clone)]
pub struct CircleReport {
    /// Dominance degree of the feedback loop when every clause holds.
    pub verdict: Option<usize>,
    pub reason: Option<String>,
    /// Shifted open-right-half-plane pole count of the linear block.
    pub pole_count_q: usize,
    pub total_poles: usize,
    /// Clockwise encirclements of -1/k1 (zero by convention when k1 = 0).
    pub encirclements: Option<i64>,
    pub disk: Disk,
    pub disk_clearance: Option<f64>,
    pub clauses: ClauseChecks,
}

impl CircleReport {
    /// Record the caller's sector validation of the actual nonlinearity;
    /// a failed check withdraws the verdict.
    pub fn apply_sector_check(&mut self, ok: bool) {
        self.clauses.sector = Some(ok);
        if !ok {
            self.verdict = None;
            if self.reason.is_none() {
                self.reason = Some("nonlinearity violates the declared sector".into());
            }
        }
    }
}

/// Circle criterion for the feedback loop of G with a nonlinearity of slope
/// in [k1, k2]: boundary-pole check, clockwise encirclement count
/// E = p - q around -1/k1, and the locus/disk separation. The verdict is
/// the loop's dominance degree p = q + E, present only when every checkable
/// clause holds; grazing contacts surface as errors, not verdicts.
pub fn circle_criterion(
    g: &TransferFunction,
    lambda: f64,
    k1: f64,
    k2: f64,
    grid: &FrequencyGrid,
) -> Result<CircleReport, FrequencyError> {
    let d = disk(k1, k2)?;
    let (q, total, boundary) = shifted_pole_counts(g, lambda)?;
    if boundary.is_some() {
        return Ok(CircleReport {
            verdict: None,
            reason: Some(format!(
                "pole within {:.3e} of the shifted imaginary axis",
                default_boundary_tol(lambda)
            )),
            pole_count_q: q,
            total_poles: total,
            encirclements: None,
            disk: d,
            disk_clearance: None,
            clauses: ClauseChecks {
                sector: None,
                no_boundary_poles: false,
                encirclement: false,
                disk: false,
            },
        });
    }
    let locus = nyquist_locus(g, lambda, grid)?;
    let e_cw = if k1 == 0.0 {
        0
    } else {
        -winding_number(&locus, Complex64::new(-1.0 / k1, 0.0))?
    };
    let p2 = q as i64 + e_cw;
    let encirclement_ok = p2 >= 0 && p2 <= total as i64;
    let clearance = disk_clearance(&locus, &d);
    let scale = 1.0
        + locus
            .vertices()
            .map(Complex64::norm)
            .fold(0.0f64, f64::max);
    if clearance.abs() < 1e-6 * scale {
        return Err(FrequencyError::DiskGrazing { clearance });
    }
    let disk_ok = clearance > 0.0;
    let reason = if !encirclement_ok {
        Some(format!(
            "pole count q + E = {p2} falls outside [0, {total}]"
        ))
    } else if !disk_ok {
        Some(format!(
            "locus violates the sector disk (clearance {clearance:.3e})"
        ))
    } else {
        None
    };
    Ok(CircleReport {
        verdict: (encirclement_ok && disk_ok).then_some(p2 as usize),
        reason,
        pole_count_q: q,
        total_poles: total,
        encirclements: Some(e_cw),
        disk: d,
        disk_clearance: Some(clearance),
        clauses: ClauseChecks {
            sector: None,
            no_boundary_poles: true,
            encirclement: encirclement_ok,
            disk: disk_ok,
        },
    })
}
