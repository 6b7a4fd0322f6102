//! Nonlinear closed-loop simulation of Lur'e interconnections, equilibrium
//! finding, and attractor classification.
//!
//! The loop is ẋ = Ax + Bu, y = Cx, u = s·φ(y) with s = -1 for negative
//! feedback and s = +1 for positive feedback. Direct feedthrough is
//! rejected: with D ≠ 0 the feedback relation u = s·φ(Cx + Du) is implicit.
//!
//! Trajectories come from fixed-step classical Runge-Kutta; divergence
//! truncates the trajectory and sets a flag instead of erroring, so a
//! blow-up is itself a classifiable outcome. The classifier discards a
//! transient prefix and labels the tail by bounding-box diameter (fixed
//! point), by an autocorrelation-seeded recurrence test (periodic), or as
//! bounded aperiodic motion (other).

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::exec;
use crate::lti::StateSpace;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("feedback loop needs a SISO linear part, got {inputs} inputs and {outputs} outputs")]
    NotSiso { inputs: usize, outputs: usize },
    #[error("direct feedthrough D = {d} makes the feedback relation implicit; D must be zero")]
    DirectFeedthrough { d: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("classification needs at least {need} post-transient samples, got {have}")]
    TooFewSamples { have: usize, need: usize },
    #[error("drift matrix is singular: the loop has a pole at the origin and no isolated equilibria")]
    SingularDrift,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Memoryless scalar nonlinearity with its derivative and the declared
/// differential sector [k1, k2] that the derivative is supposed to stay in.
#[derive(Clone)]
pub struct Nonlinearity {
    value: ScalarFn,
    derivative: ScalarFn,
    sector: (f64, f64),
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("sector", &self.sector)
            .finish_non_exhaustive()
    }
}

impl Nonlinearity {
    /// φ(y) = a·tanh(k·y) + c·y. The derivative a·k·sech²(k·y) + c spans
    /// (c, c + a·k] for a·k > 0 (and the mirrored interval for a·k < 0),
    /// which is the declared sector.
    pub fn tanh_family(a: f64, k: f64, c: f64) -> Nonlinearity {
        let ak = a * k;
        let value = move |y: f64| a * (k * y).tanh() + c * y;
        let derivative = move |y: f64| {
            let t = (k * y).tanh();
            ak * (1.0 - t * t) + c
        };
        Nonlinearity {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            sector: (c + ak.min(0.0), c + ak.max(0.0)),
        }
    }

    /// The zero function; closing the loop with it leaves the linear part.
    pub fn zero() -> Nonlinearity {
        Nonlinearity {
            value: Arc::new(|_| 0.0),
            derivative: Arc::new(|_| 0.0),
            sector: (0.0, 0.0),
        }
    }

    /// User-supplied value and derivative with a declared sector.
    pub fn custom(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sector: (f64, f64),
    ) -> Nonlinearity {
        Nonlinearity {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            sector,
        }
    }

    /// Piecewise-linear interpolant of (y, φ(y)) breakpoints, extrapolated
    /// beyond the ends with the edge slopes. The derivative is the active
    /// segment slope (right-continuous at breakpoints) and the sector is
    /// the slope range.
    pub fn from_table(points: &[(f64, f64)]) -> Result<Nonlinearity, SimulateError> {
        if points.len() < 2 {
            return Err(SimulateError::InvalidInput(
                "interpolation table needs at least 2 points".into(),
            ));
        }
        if points.iter().any(|(y, v)| !(y.is_finite() && v.is_finite())) {
            return Err(SimulateError::InvalidInput(
                "interpolation table must be finite".into(),
            ));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(SimulateError::InvalidInput(
                "interpolation table abscissae must be strictly ascending".into(),
            ));
        }
        let slopes: Vec<f64> = points
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        let sector = (
            slopes.iter().copied().fold(f64::INFINITY, f64::min),
            slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        let table: Arc<[(f64, f64)]> = points.to_vec().into();
        let seg_slopes: Arc<[f64]> = slopes.into();
        let segment_of = |table: &[(f64, f64)], y: f64| -> usize {
            // Index of the segment whose slope applies at y; ends extend.
            match table.binary_search_by(|(yk, _)| yk.total_cmp(&y)) {
                Ok(i) => i.min(table.len() - 2),
                Err(0) => 0,
                Err(i) => (i - 1).min(table.len() - 2),
            }
        };
        let t1 = table.clone();
        let s1 = seg_slopes.clone();
        let value = move |y: f64| {
            let i = segment_of(&t1, y);
            t1[i].1 + s1[i] * (y - t1[i].0)
        };
        let derivative = move |y: f64| seg_slopes[segment_of(&table, y)];
        Ok(Nonlinearity {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            sector,
        })
    }

    pub fn value(&self, y: f64) -> f64 {
        (self.value)(y)
    }

    pub fn derivative(&self, y: f64) -> f64 {
        (self.derivative)(y)
    }

    /// Declared differential sector (k1, k2).
    pub fn sector(&self) -> (f64, f64) {
        self.sector
    }

    /// Samples the derivative on [-half_width, half_width] and checks it
    /// stays within [k1 - tol, k2 + tol]; a sampled check can refute a
    /// sector claim, not prove it.
    pub fn respects_sector(&self, k1: f64, k2: f64, half_width: f64, samples: usize) -> bool {
        if samples < 2 || !(half_width > 0.0) {
            return false;
        }
        let tol = 1e-9 * (1.0 + k1.abs() + k2.abs());
        (0..samples).all(|i| {
            let y = -half_width + 2.0 * half_width * i as f64 / (samples - 1) as f64;
            let d = self.derivative(y);
            d.is_finite() && d >= k1 - tol && d <= k2 + tol
        })
    }
}

/// Sign of the feedback injection u = s·φ(y).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackSign {
    /// u = -φ(y).
    Negative,
    /// u = +φ(y).
    Positive,
}

impl FeedbackSign {
    pub fn signum(self) -> f64 {
        match self {
            FeedbackSign::Negative => -1.0,
            FeedbackSign::Positive => 1.0,
        }
    }
}

/// SISO linear system in feedback with a static nonlinearity.
#[derive(Debug, Clone)]
pub struct LureLoop {
    linear: StateSpace,
    phi: Nonlinearity,
    feedback: FeedbackSign,
}

impl LureLoop {
    pub fn new(
        linear: StateSpace,
        phi: Nonlinearity,
        feedback: FeedbackSign,
    ) -> Result<LureLoop, SimulateError> {
        if !linear.is_siso() {
            return Err(SimulateError::NotSiso {
                inputs: linear.inputs(),
                outputs: linear.outputs(),
            });
        }
        let d = linear.d()[(0, 0)];
        if d != 0.0 {
            return Err(SimulateError::DirectFeedthrough { d });
        }
        if linear.order() == 0 {
            return Err(SimulateError::InvalidInput(
                "loop needs at least one state".into(),
            ));
        }
        Ok(LureLoop {
            linear,
            phi,
            feedback,
        })
    }

    pub fn linear(&self) -> &StateSpace {
        &self.linear
    }

    pub fn phi(&self) -> &Nonlinearity {
        &self.phi
    }

    pub fn feedback(&self) -> FeedbackSign {
        self.feedback
    }
}

/// Uniformly sampled closed-loop trajectory. States are stored row-major
/// (sample-major); `ys` and `us` carry the loop output and injected input
/// at each sample. A divergence truncates the data at the last finite
/// sample and sets `diverged`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    dim: usize,
    data: Vec<f64>,
    ys: Vec<f64>,
    us: Vec<f64>,
    diverged: bool,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state_dim(&self) -> usize {
        self.dim
    }

    /// Number of stored samples (including the initial state).
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn output(&self, k: usize) -> f64 {
        self.ys[k]
    }

    pub fn input(&self, k: usize) -> f64 {
        self.us[k]
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }

    /// CSV export with header t,x1..xn,y,u; '.' decimals, LF line ends.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.dim + 3) * 20);
        out.push('t');
        for i in 1..=self.dim {
            out.push_str(&format!(",x{i}"));
        }
        out.push_str(",y,u\n");
        for k in 0..self.len() {
            out.push_str(&format!("{}", self.time(k)));
            for v in self.state(k) {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{},{}\n", self.ys[k], self.us[k]));
        }
        out
    }
}

/// Integrates ẋ = Ax + s·B·φ(Cx) from x0 with classical fixed-step
/// fourth-order Runge-Kutta over [0, t_final]. A non-finite state truncates
/// the trajectory and flags it diverged.
pub fn simulate(
    lure: &LureLoop,
    x0: &[f64],
    dt: f64,
    t_final: f64,
) -> Result<Trajectory, SimulateError> {
    let n = lure.linear.order();
    if x0.len() != n {
        return Err(SimulateError::InvalidInput(format!(
            "initial state has {} entries but the loop has {n} states",
            x0.len()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(SimulateError::InvalidInput(
            "initial state must be finite".into(),
        ));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_final >= dt && t_final.is_finite()) {
        return Err(SimulateError::InvalidInput(format!(
            "need 0 < dt <= T, got dt = {dt}, T = {t_final}"
        )));
    }
    let steps = (t_final / dt).round() as usize;

    // Flatten the system once; the stepping loop allocates nothing.
    let a: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| lure.linear.a()[(i, j)]))
        .collect();
    let b: Vec<f64> = (0..n).map(|i| lure.linear.b()[(i, 0)]).collect();
    let c: Vec<f64> = (0..n).map(|j| lure.linear.c()[(0, j)]).collect();
    let sign = lure.feedback.signum();
    let phi = &lure.phi;

    let output_of = |x: &[f64]| -> f64 { c.iter().zip(x).map(|(cj, xj)| cj * xj).sum() };
    let drift = |x: &[f64], out: &mut [f64]| {
        let u = sign * phi.value(output_of(x));
        for i in 0..n {
            let mut acc = b[i] * u;
            let row = &a[i * n..(i + 1) * n];
            for j in 0..n {
                acc += row[j] * x[j];
            }
            out[i] = acc;
        }
    };

    let mut data = Vec::with_capacity((steps + 1) * n);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut us = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    let mut stage = vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let record = |x: &[f64], data: &mut Vec<f64>, ys: &mut Vec<f64>, us: &mut Vec<f64>| {
        data.extend_from_slice(x);
        let y = output_of(x);
        ys.push(y);
        us.push(sign * phi.value(y));
    };
    record(&x, &mut data, &mut ys, &mut us);
    let mut diverged = false;
    for _ in 0..steps {
        drift(&x, &mut k1);
        for i in 0..n {
            stage[i] = x[i] + 0.5 * dt * k1[i];
        }
        drift(&stage, &mut k2);
        for i in 0..n {
            stage[i] = x[i] + 0.5 * dt * k2[i];
        }
        drift(&stage, &mut k3);
        for i in 0..n {
            stage[i] = x[i] + dt * k3[i];
        }
        drift(&stage, &mut k4);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        record(&x, &mut data, &mut ys, &mut us);
    }
    Ok(Trajectory {
        dt,
        dim: n,
        data,
        ys,
        us,
        diverged,
    })
}

/// [`simulate`] over a batch of initial conditions, parallel when the
/// `parallel` feature is enabled.
pub fn simulate_batch(
    lure: &LureLoop,
    x0s: &[Vec<f64>],
    dt: f64,
    t_final: f64,
) -> Vec<Result<Trajectory, SimulateError>> {
    exec::map_slice(x0s, |x0| simulate(lure, x0, dt, t_final))
}

/// Sequential counterpart of [`simulate_batch`], kept for benchmarking the
/// two execution paths against each other.
pub fn simulate_batch_seq(
    lure: &LureLoop,
    x0s: &[Vec<f64>],
    dt: f64,
    t_final: f64,
) -> Vec<Result<Trajectory, SimulateError>> {
    exec::map_slice_seq(x0s, |x0| simulate(lure, x0, dt, t_final))
}

/// Closed-loop equilibrium: the input-space root u*, the loop output
/// y* = G(0)·u*, and the state x* = -A⁻¹·B·u*.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub input: f64,
    pub output: f64,
    pub state: Vec<f64>,
}

/// Finds the loop equilibria by scanning h(u) = u - s·φ(G(0)·u) for sign
/// changes over `samples` points of `range` and bisecting each bracket to
/// width 1e-10. Roots closer than the scan resolution merge; a singular
/// drift matrix (pole at the origin) is an error.
pub fn equilibria(
    lure: &LureLoop,
    range: (f64, f64),
    samples: usize,
) -> Result<Vec<Equilibrium>, SimulateError> {
    let (u_min, u_max) = range;
    if !(u_min.is_finite() && u_max.is_finite() && u_min < u_max) || samples < 3 {
        return Err(SimulateError::InvalidInput(format!(
            "need a finite range and at least 3 samples, got [{u_min}, {u_max}] with {samples}"
        )));
    }
    let a = lure.linear.a();
    let b = lure.linear.b();
    let c = lure.linear.c();
    let lu = a.clone().lu();
    let xb = lu.solve(b).ok_or(SimulateError::SingularDrift)?;
    let residual = (a * &xb - b).norm();
    if residual > 1e-8 * (a.norm() * xb.norm() + b.norm()).max(1.0) {
        return Err(SimulateError::SingularDrift);
    }
    let g0 = -(c * &xb)[(0, 0)];
    let sign = lure.feedback.signum();
    let h = |u: f64| u - sign * lure.phi.value(g0 * u);

    let grid: Vec<f64> = (0..samples)
        .map(|i| u_min + (u_max - u_min) * i as f64 / (samples - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&u| h(u)).collect();
    let mut roots = Vec::new();
    for i in 0..samples {
        if values[i] == 0.0 {
            roots.push(grid[i]);
        } else if i + 1 < samples && values[i + 1] != 0.0 && values[i] * values[i + 1] < 0.0 {
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            let (mut f_lo, _) = (values[i], values[i + 1]);
            for _ in 0..200 {
                if hi - lo <= 1e-10 {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let f_mid = h(mid);
                if f_mid == 0.0 {
                    lo = mid;
                    hi = mid;
                } else if f_lo * f_mid < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    f_lo = f_mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-8 * (1.0 + a.abs()));
    Ok(roots
        .into_iter()
        .map(|u| {
            let state: Vec<f64> = (0..xb.nrows()).map(|i| -xb[(i, 0)] * u).collect();
            Equilibrium {
                input: u,
                output: g0 * u,
                state,
            }
        })
        .collect())
}

/// Qualitative tail behavior of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttractorKind {
    FixedPoint,
    Periodic,
    Other,
    Diverged,
}

/// Evidence backing an [`AttractorKind`]: the limit point for a fixed
/// point, the estimated period for a periodic orbit, nothing otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum AttractorWitness {
    Point(Vec<f64>),
    Period(f64),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttractorLabel {
    pub kind: AttractorKind,
    pub witness: AttractorWitness,
}

/// Classifies the post-transient tail of a trajectory. The first
/// `transient_fraction` of the samples is discarded; the tail is a fixed
/// point when its bounding-box diameter is below 1e-4·(1 + ‖mean‖),
/// periodic when an autocorrelation-seeded recurrence time τ > 10·dt keeps
/// the worst mismatch over the final period below 1e-3 of the tail
/// diameter, or `Other` when neither test passes. Needs at least 1000
/// post-transient samples.
pub fn classify(
    traj: &Trajectory,
    transient_fraction: f64,
) -> Result<AttractorLabel, SimulateError> {
    if traj.diverged() {
        return Ok(AttractorLabel {
            kind: AttractorKind::Diverged,
            witness: AttractorWitness::None,
        });
    }
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(SimulateError::InvalidInput(format!(
            "transient fraction must be in [0, 1), got {transient_fraction}"
        )));
    }
    let n = traj.len();
    let dim = traj.state_dim();
    let start = (n as f64 * transient_fraction).floor() as usize;
    let tail_len = n - start;
    if tail_len < 1000 {
        return Err(SimulateError::TooFewSamples {
            have: tail_len,
            need: 1000,
        });
    }

    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    let mut mean = vec![0.0; dim];
    for k in start..n {
        for (i, &v) in traj.state(k).iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
            mean[i] += v;
        }
    }
    for m in &mut mean {
        *m /= tail_len as f64;
    }
    let diam = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (h - l) * (h - l))
        .sum::<f64>()
        .sqrt();
    let mean_norm = mean.iter().map(|m| m * m).sum::<f64>().sqrt();
    if diam < 1e-4 * (1.0 + mean_norm) {
        return Ok(AttractorLabel {
            kind: AttractorKind::FixedPoint,
            witness: AttractorWitness::Point(mean),
        });
    }

    let other = Ok(AttractorLabel {
        kind: AttractorKind::Other,
        witness: AttractorWitness::None,
    });

    // Period seed: unbiased autocorrelation of the largest-variance
    // coordinate, decimated to at most 4096 samples.
    let dec = (tail_len / 4096).max(1);
    let len = tail_len.div_ceil(dec);
    let coord = (0..dim)
        .max_by(|&i, &j| {
            let spread = |i: usize| hi[i] - lo[i];
            spread(i).total_cmp(&spread(j))
        })
        .unwrap_or(0);
    let mut z: Vec<f64> = (0..len)
        .map(|k| traj.state(start + k * dec)[coord])
        .collect();
    let z_mean = z.iter().sum::<f64>() / len as f64;
    for v in &mut z {
        *v -= z_mean;
    }
    let half = len / 2;
    let mut ac = vec![0.0; half + 1];
    for (l, slot) in ac.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in 0..len - l {
            s += z[k] * z[k + l];
        }
        *slot = s / (len - l) as f64;
    }
    let lmin = ((10.0 / dec as f64).round() as usize).max(2);
    if lmin >= half {
        return other;
    }
    let l0 = (lmin..half)
        .max_by(|&i, &j| ac[i].total_cmp(&ac[j]))
        .unwrap();
    let (y0, y1, y2) = (ac[l0 - 1], ac[l0], ac[l0 + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    let frac = if denom.abs() > 0.0 {
        (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let tau_seed = (l0 as f64 + frac) * dec as f64 * traj.dt();

    // Golden-section refinement of the recurrence residual near the seed.
    let gr = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.98 * tau_seed, 1.02 * tau_seed);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    for _ in 0..40 {
        if recurrence_residual(traj, c) < recurrence_residual(traj, d) {
            b = d;
        } else {
            a = c;
        }
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    let tau = 0.5 * (a + b);
    let res = recurrence_residual(traj, tau);
    if tau > 10.0 * traj.dt() && res < 1e-3 * diam {
        return Ok(AttractorLabel {
            kind: AttractorKind::Periodic,
            witness: AttractorWitness::Period(tau),
        });
    }
    other
}

/// Worst recurrence mismatch max ‖x(t) - x(t + τ)‖ with t sweeping one
/// period at the trajectory's end; x(t + τ) is linearly interpolated.
/// Infinite when τ is shorter than a step or the data cannot hold two
/// periods.
fn recurrence_residual(traj: &Trajectory, tau: f64) -> f64 {
    let dt = traj.dt();
    let n = traj.len();
    if !tau.is_finite() || tau <= dt {
        return f64::INFINITY;
    }
    let ratio = tau / dt;
    let steps = ratio.floor() as usize;
    let alpha = ratio - steps as f64;
    let span = ratio.ceil() as usize;
    let chunk = span + steps + 2;
    if chunk > n {
        return f64::INFINITY;
    }
    let base = n - chunk;
    let m = (chunk - steps - 1).min(span);
    let mut worst = 0.0f64;
    for k in 0..m {
        let xi = traj.state(base + k);
        let xa = traj.state(base + k + steps);
        let xb = traj.state(base + k + steps + 1);
        let mut sq = 0.0;
        for i in 0..traj.state_dim() {
            let d = xi[i] - ((1.0 - alpha) * xa[i] + alpha * xb[i]);
            sq += d * d;
        }
        worst = worst.max(sq.sqrt());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn siso(a: Matrix, b: Vec<f64>, c: Vec<f64>) -> StateSpace {
        let n = b.len();
        StateSpace::new(
            a,
            Matrix::from_row_slice(n, 1, &b),
            Matrix::from_row_slice(1, n, &c),
            Matrix::zeros(1, 1),
        )
        .unwrap()
    }

    fn companion(den_tail: &[f64]) -> Matrix {
        // den ascending [a0..a_{n-1}] of a monic polynomial.
        let n = den_tail.len();
        let mut a = Matrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -den_tail[j];
        }
        a
    }

    /// Positive-feedback loop of 10/((s+2)(s+3)(s+5)) with φ = 10·tanh(10y).
    fn bistable_loop() -> LureLoop {
        let a = companion(&[30.0, 31.0, 10.0]);
        let linear = siso(a, vec![0.0, 0.0, 10.0], vec![1.0, 0.0, 0.0]);
        LureLoop::new(
            linear,
            Nonlinearity::tanh_family(10.0, 10.0, 0.0),
            FeedbackSign::Positive,
        )
        .unwrap()
    }

    /// Negative-feedback loop of 1/((s+1)(s+2)(s+3)) with φ = 10·tanh(10y).
    fn cycle_loop() -> LureLoop {
        let a = companion(&[6.0, 11.0, 6.0]);
        let linear = siso(a, vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]);
        LureLoop::new(
            linear,
            Nonlinearity::tanh_family(10.0, 10.0, 0.0),
            FeedbackSign::Negative,
        )
        .unwrap()
    }

    /// Chaotic-oscillator loop in state coordinates with φ = tanh(2y) + 0.7y.
    fn chaotic_loop() -> LureLoop {
        let (al, be) = (8.8, 15.0);
        let a = Matrix::from_row_slice(
            3,
            3,
            &[-al, al, 0.0, 1.0, -1.0, 1.0, 0.0, -be, 0.0],
        );
        let linear = siso(a, vec![-al, 0.0, 0.0], vec![1.0, 0.0, 0.0]);
        LureLoop::new(
            linear,
            Nonlinearity::tanh_family(1.0, 2.0, 0.7),
            FeedbackSign::Negative,
        )
        .unwrap()
    }

    /// Marginal-rotation loop whose pointwise gains look stable while the
    /// nonlinear loop oscillates; φ = tanh(y) + 0.01y.
    fn oscillating_loop() -> LureLoop {
        let a = Matrix::from_row_slice(
            4,
            4,
            &[
                0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0,
                -1.0,
            ],
        );
        let linear = siso(
            a,
            vec![10.0, 10.1, 0.0, -1.0],
            vec![1.0, 0.0, -10.1, -0.1],
        );
        LureLoop::new(
            linear,
            Nonlinearity::tanh_family(1.0, 1.0, 0.01),
            FeedbackSign::Negative,
        )
        .unwrap()
    }

    /// A = S·diag(-1,-2,-3)·S⁻¹ for unit lower-triangular integer S, so
    /// e^{At} is available exactly as S·diag(e^{-t},e^{-2t},e^{-3t})·S⁻¹.
    fn decaying_matrix() -> Matrix {
        Matrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 1.0, -2.0, 0.0, 1.0, 1.0, -3.0])
    }

    fn decaying_exact(t: f64, x0: &[f64; 3]) -> [f64; 3] {
        // S = [[1,0,0],[1,1,0],[1,1,1]], S⁻¹ = [[1,0,0],[-1,1,0],[0,-1,1]].
        let w = [
            x0[0],
            -x0[0] + x0[1],
            -x0[1] + x0[2],
        ];
        let e = [
            (-t).exp() * w[0],
            (-2.0 * t).exp() * w[1],
            (-3.0 * t).exp() * w[2],
        ];
        [e[0], e[0] + e[1], e[0] + e[1] + e[2]]
    }

    #[test]
    fn loop_construction_rejects_feedthrough_and_mimo() {
        let a = Matrix::from_row_slice(1, 1, &[-1.0]);
        let with_d = StateSpace::new(
            a.clone(),
            Matrix::from_row_slice(1, 1, &[1.0]),
            Matrix::from_row_slice(1, 1, &[1.0]),
            Matrix::from_row_slice(1, 1, &[0.5]),
        )
        .unwrap();
        assert!(matches!(
            LureLoop::new(with_d, Nonlinearity::zero(), FeedbackSign::Negative),
            Err(SimulateError::DirectFeedthrough { .. })
        ));
        let two_out = StateSpace::new(
            a,
            Matrix::from_row_slice(1, 1, &[1.0]),
            Matrix::from_row_slice(2, 1, &[1.0, 0.0]),
            Matrix::zeros(2, 1),
        )
        .unwrap();
        assert!(matches!(
            LureLoop::new(two_out, Nonlinearity::zero(), FeedbackSign::Negative),
            Err(SimulateError::NotSiso { .. })
        ));
    }

    #[test]
    fn scalar_decay_matches_the_exponential() {
        let linear = siso(
            Matrix::from_row_slice(1, 1, &[-1.0]),
            vec![1.0],
            vec![1.0],
        );
        let lure = LureLoop::new(linear, Nonlinearity::zero(), FeedbackSign::Negative).unwrap();
        let traj = simulate(&lure, &[1.0], 1e-3, 5.0).unwrap();
        assert_eq!(traj.len(), 5001);
        assert!(!traj.diverged());
        let last = traj.state(traj.len() - 1)[0];
        assert!((last - (-5.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn open_loop_matches_the_matrix_exponential() {
        let linear = siso(decaying_matrix(), vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]);
        let lure = LureLoop::new(linear, Nonlinearity::zero(), FeedbackSign::Negative).unwrap();
        let x0 = [1.0, -2.0, 0.5];
        let traj = simulate(&lure, &x0, 1e-3, 5.0).unwrap();
        for k in [0, 1000, 2500, 5000] {
            let exact = decaying_exact(traj.time(k), &x0);
            let got = traj.state(k);
            for i in 0..3 {
                assert!(
                    (got[i] - exact[i]).abs() < 1e-6,
                    "sample {k} coord {i}: {} vs {}",
                    got[i],
                    exact[i]
                );
            }
        }
    }

    #[test]
    fn halving_the_step_cuts_the_error_by_fourth_order() {
        let linear = siso(decaying_matrix(), vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]);
        let lure = LureLoop::new(linear, Nonlinearity::zero(), FeedbackSign::Negative).unwrap();
        let x0 = [1.0, 1.0, -1.0];
        let exact = decaying_exact(2.0, &x0);
        let err = |dt: f64| {
            let traj = simulate(&lure, &x0, dt, 2.0).unwrap();
            let got = traj.state(traj.len() - 1);
            got.iter()
                .zip(&exact)
                .map(|(g, e)| (g - e) * (g - e))
                .sum::<f64>()
                .sqrt()
        };
        let coarse = err(0.02);
        let fine = err(0.01);
        assert!(coarse > 1e-13, "coarse error {coarse} is roundoff-dominated");
        assert!(
            coarse / fine >= 12.0,
            "order ratio {} too small (coarse {coarse}, fine {fine})",
            coarse / fine
        );
    }

    #[test]
    fn positive_feedback_encodings_agree_bitwise() {
        let phi = Nonlinearity::tanh_family(10.0, 10.0, 0.0);
        let a = companion(&[30.0, 31.0, 10.0]);
        let plus = LureLoop::new(
            siso(a.clone(), vec![0.0, 0.0, 10.0], vec![1.0, 0.0, 0.0]),
            phi.clone(),
            FeedbackSign::Positive,
        )
        .unwrap();
        let minus = LureLoop::new(
            siso(a, vec![0.0, 0.0, -10.0], vec![1.0, 0.0, 0.0]),
            phi,
            FeedbackSign::Negative,
        )
        .unwrap();
        let x0 = [0.4, -0.2, 1.1];
        let ta = simulate(&plus, &x0, 1e-3, 10.0).unwrap();
        let tb = simulate(&minus, &x0, 1e-3, 10.0).unwrap();
        // Identical states and outputs, bit for bit; the recorded input
        // flips sign because the sign moved from u into B.
        assert!(ta.data == tb.data);
        assert!(ta.ys == tb.ys);
        assert_eq!(ta.us.len(), tb.us.len());
        assert!(ta.us.iter().zip(&tb.us).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn divergence_truncates_and_flags() {
        let linear = siso(Matrix::from_row_slice(1, 1, &[40.0]), vec![1.0], vec![1.0]);
        let lure = LureLoop::new(linear, Nonlinearity::zero(), FeedbackSign::Negative).unwrap();
        let traj = simulate(&lure, &[1.0], 0.01, 20.0).unwrap();
        assert!(traj.diverged());
        assert!(traj.len() < 2001);
        assert!(traj.states().all(|x| x.iter().all(|v| v.is_finite())));
        let label = classify(&traj, 0.5).unwrap();
        assert_eq!(label.kind, AttractorKind::Diverged);
    }

    #[test]
    fn simulate_validates_inputs() {
        let lure = bistable_loop();
        assert!(matches!(
            simulate(&lure, &[0.0, 0.0], 1e-3, 1.0),
            Err(SimulateError::InvalidInput(_))
        ));
        assert!(matches!(
            simulate(&lure, &[f64::NAN, 0.0, 0.0], 1e-3, 1.0),
            Err(SimulateError::InvalidInput(_))
        ));
        assert!(matches!(
            simulate(&lure, &[0.0; 3], 0.0, 1.0),
            Err(SimulateError::InvalidInput(_))
        ));
        assert!(matches!(
            simulate(&lure, &[0.0; 3], 1e-3, 1e-4),
            Err(SimulateError::InvalidInput(_))
        ));
    }

    #[test]
    fn trajectories_stay_inside_the_variation_of_constants_ball() {
        // For a Hurwitz linear part and bounded φ, variation of constants
        // bounds the state by the free response plus
        // sup|φ| · ∫₀^∞ ‖e^{Aτ}B‖ dτ; both terms come from linear runs.
        let lure = bistable_loop();
        let free = LureLoop::new(
            lure.linear().clone(),
            Nonlinearity::zero(),
            FeedbackSign::Positive,
        )
        .unwrap();
        let x0 = [3.0, -2.0, 1.0];
        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();

        let homogeneous = simulate(&free, &x0, 1e-3, 40.0).unwrap();
        let transient_sup = homogeneous.states().map(norm).fold(0.0f64, f64::max);
        assert_relative_eq!(transient_sup, 3.74, max_relative = 0.02);

        let b0 = [0.0, 0.0, 10.0];
        let impulse = simulate(&free, &b0, 1e-3, 40.0).unwrap();
        let norms: Vec<f64> = impulse.states().map(norm).collect();
        let integral = 1e-3
            * (norms.iter().sum::<f64>() - 0.5 * (norms[0] + norms[norms.len() - 1]));
        assert_relative_eq!(integral, 2.07, max_relative = 0.02);

        let ball = transient_sup + 10.0 * integral;
        let traj = simulate(&lure, &x0, 1e-3, 500.0).unwrap();
        assert!(!traj.diverged());
        let sup = traj.states().map(norm).fold(0.0f64, f64::max);
        assert!(sup <= ball * (1.0 + 1e-6), "sup {sup} exceeds ball {ball}");
    }

    #[test]
    fn equilibria_of_the_bistable_loop_are_three_and_symmetric() {
        let lure = bistable_loop();
        let eqs = equilibria(&lure, (-20.0, 20.0), 4001).unwrap();
        assert_eq!(eqs.len(), 3);
        assert_relative_eq!(eqs[0].input, -10.0, epsilon = 1e-6);
        assert_relative_eq!(eqs[1].input, 0.0, epsilon = 1e-10);
        assert_relative_eq!(eqs[2].input, 10.0, epsilon = 1e-6);
        assert_relative_eq!(eqs[2].output, 10.0 / 3.0, epsilon = 1e-6);
        // Odd nonlinearity: the root set is symmetric under negation.
        for eq in &eqs {
            assert!(eqs
                .iter()
                .any(|other| (other.input + eq.input).abs() < 1e-8));
        }
        // Reconstructed states are genuine equilibria of the vector field.
        for eq in &eqs {
            let a = lure.linear().a();
            let drift: Vec<f64> = (0..3)
                .map(|i| {
                    (0..3).map(|j| a[(i, j)] * eq.state[j]).sum::<f64>()
                        + lure.linear().b()[(i, 0)] * eq.input
                })
                .collect();
            assert!(drift.iter().all(|v| v.abs() < 1e-8), "drift {drift:?}");
        }
    }

    #[test]
    fn equilibrium_of_the_cycle_loop_is_unique() {
        let eqs = equilibria(&cycle_loop(), (-20.0, 20.0), 4001).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_relative_eq!(eqs[0].input, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_nonlinearity_has_only_the_origin() {
        let linear = siso(decaying_matrix(), vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]);
        let lure = LureLoop::new(linear, Nonlinearity::zero(), FeedbackSign::Negative).unwrap();
        let eqs = equilibria(&lure, (-5.0, 5.0), 1001).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].input, 0.0);
        assert!(eqs[0].state.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn singular_drift_is_rejected() {
        // Pole at the origin: companion with zero constant coefficient.
        let linear = siso(companion(&[0.0, 1.0]), vec![0.0, 1.0], vec![1.0, 0.0]);
        let lure = LureLoop::new(linear, Nonlinearity::zero(), FeedbackSign::Negative).unwrap();
        assert!(matches!(
            equilibria(&lure, (-1.0, 1.0), 101),
            Err(SimulateError::SingularDrift)
        ));
    }

    #[test]
    fn constant_trajectory_classifies_as_fixed_point() {
        let traj = Trajectory {
            dt: 1e-2,
            dim: 2,
            data: [1.0, -2.0].repeat(3000),
            ys: vec![1.0; 3000],
            us: vec![0.0; 3000],
            diverged: false,
        };
        let label = classify(&traj, 0.5).unwrap();
        assert_eq!(label.kind, AttractorKind::FixedPoint);
        match label.witness {
            AttractorWitness::Point(p) => {
                assert_relative_eq!(p[0], 1.0, epsilon = 1e-12);
                assert_relative_eq!(p[1], -2.0, epsilon = 1e-12);
            }
            other => panic!("expected a point witness, got {other:?}"),
        }
    }

    #[test]
    fn short_tails_are_rejected() {
        let traj = Trajectory {
            dt: 1e-2,
            dim: 1,
            data: vec![0.0; 1200],
            ys: vec![0.0; 1200],
            us: vec![0.0; 1200],
            diverged: false,
        };
        assert!(matches!(
            classify(&traj, 0.5),
            Err(SimulateError::TooFewSamples { have: 600, need: 1000 })
        ));
    }

    #[test]
    fn bistable_runs_settle_on_the_nonzero_equilibria() {
        let lure = bistable_loop();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x0s: Vec<Vec<f64>> = (0..6)
            .map(|_| {
                let dir: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let radius = rng.random_range(0.1..5.0);
                dir.iter().map(|v| v / norm * radius).collect()
            })
            .collect();
        for traj in simulate_batch(&lure, &x0s, 1e-3, 40.0) {
            let traj = traj.unwrap();
            let label = classify(&traj, 0.5).unwrap();
            assert_eq!(label.kind, AttractorKind::FixedPoint);
            let AttractorWitness::Point(p) = label.witness else {
                panic!("fixed point without a point witness");
            };
            // y* = x1 at rest; the two stable equilibria sit at ±10/3.
            assert_relative_eq!(p[0].abs(), 10.0 / 3.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn cycle_runs_classify_as_periodic_with_the_known_period() {
        let base = 1.8999538;
        for x0 in [[1.0, -2.0, 1.5], [0.3, 0.8, -0.4]] {
            let traj = simulate(&cycle_loop(), &x0, 1e-3, 60.0).unwrap();
            let label = classify(&traj, 0.5).unwrap();
            assert_eq!(label.kind, AttractorKind::Periodic, "x0 {x0:?}");
            let AttractorWitness::Period(tau) = label.witness else {
                panic!("periodic without a period witness");
            };
            // The autocorrelation peak may select a harmonic of the
            // fundamental period.
            let multiple = (tau / base).round();
            assert!(multiple >= 1.0);
            assert!(
                (tau - multiple * base).abs() < 0.01,
                "period {tau} is not near a multiple of {base}"
            );
        }
    }

    #[test]
    fn classification_is_deterministic() {
        let x0 = [1.0, -2.0, 1.5];
        let t1 = simulate(&cycle_loop(), &x0, 1e-3, 60.0).unwrap();
        let t2 = simulate(&cycle_loop(), &x0, 1e-3, 60.0).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(classify(&t1, 0.5).unwrap(), classify(&t2, 0.5).unwrap());
    }

    #[test]
    fn oscillating_loop_does_not_settle() {
        let traj = simulate(&oscillating_loop(), &[3.0, -3.0, -2.0, 0.0], 2e-3, 200.0).unwrap();
        assert!(!traj.diverged());
        let label = classify(&traj, 0.5).unwrap();
        assert_ne!(label.kind, AttractorKind::FixedPoint);
        assert_ne!(label.kind, AttractorKind::Diverged);
        // The tail keeps a macroscopic diameter: sustained oscillation.
        let start = traj.len() / 2;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in start..traj.len() {
            lo = lo.min(traj.output(k));
            hi = hi.max(traj.output(k));
        }
        assert!(hi - lo > 1.0, "output tail spread {}", hi - lo);
    }

    #[test]
    fn chaotic_loop_is_bounded_but_aperiodic() {
        let traj = simulate(&chaotic_loop(), &[0.1, 0.0, 0.0], 1e-3, 120.0).unwrap();
        assert!(!traj.diverged());
        let label = classify(&traj, 0.5).unwrap();
        assert_eq!(label.kind, AttractorKind::Other);
        let sup = traj
            .states()
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max);
        assert!(sup < 15.0, "state norm reached {sup}");
    }

    #[test]
    fn declared_sectors_validate_by_derivative_sampling() {
        let phi = Nonlinearity::tanh_family(1.0, 2.0, 0.7);
        assert_eq!(phi.sector(), (0.7, 2.7));
        let (k1, k2) = phi.sector();
        assert!(phi.respects_sector(k1, k2, 50.0, 1001));
        assert!(!phi.respects_sector(0.7, 2.0, 50.0, 1001));

        let scaled = Nonlinearity::tanh_family(10.0, 10.0, 0.0);
        assert_eq!(scaled.sector(), (0.0, 100.0));
        assert!(scaled.respects_sector(0.0, 100.0, 50.0, 1001));
    }

    #[test]
    fn table_nonlinearity_interpolates_and_extrapolates() {
        let phi =
            Nonlinearity::from_table(&[(-2.0, -1.0), (-1.0, -1.0), (1.0, 1.0), (2.0, 1.0)])
                .unwrap();
        assert_eq!(phi.sector(), (0.0, 1.0));
        assert_relative_eq!(phi.value(0.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(phi.value(0.5), 0.5, epsilon = 1e-15);
        assert_relative_eq!(phi.value(1.5), 1.0, epsilon = 1e-15);
        assert_relative_eq!(phi.value(5.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(phi.value(-5.0), -1.0, epsilon = 1e-15);
        assert_eq!(phi.derivative(0.5), 1.0);
        assert_eq!(phi.derivative(1.5), 0.0);
        assert_eq!(phi.derivative(-3.0), 0.0);
        assert!(Nonlinearity::from_table(&[(0.0, 0.0)]).is_err());
        assert!(Nonlinearity::from_table(&[(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(Nonlinearity::from_table(&[(1.0, 0.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn csv_export_carries_time_output_and_input_columns() {
        let linear = siso(
            Matrix::from_row_slice(1, 1, &[-1.0]),
            vec![1.0],
            vec![2.0],
        );
        let lure = LureLoop::new(
            linear,
            Nonlinearity::tanh_family(1.0, 1.0, 0.0),
            FeedbackSign::Negative,
        )
        .unwrap();
        let traj = simulate(&lure, &[1.0], 0.25, 0.5).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x1,y,u"));
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 4);
        assert_eq!(fields[0], "0");
        assert_eq!(fields[1], "1");
        assert_eq!(fields[2], "2");
        let u: f64 = fields[3].parse().unwrap();
        assert_relative_eq!(u, -(2.0f64).tanh(), epsilon = 1e-15);
        assert_eq!(csv.lines().count(), 1 + traj.len());
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn batch_results_match_single_runs() {
        let lure = cycle_loop();
        let x0s = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let batch = simulate_batch(&lure, &x0s, 1e-2, 5.0);
        let seq = simulate_batch_seq(&lure, &x0s, 1e-2, 5.0);
        assert_eq!(batch.len(), 2);
        for ((b, s), x0) in batch.iter().zip(&seq).zip(&x0s) {
            let single = simulate(&lure, x0, 1e-2, 5.0).unwrap();
            assert_eq!(b.as_ref().unwrap(), &single);
            assert_eq!(s.as_ref().unwrap(), &single);
        }
    }
}
