//! Machine-readable analysis reports. Serialization is deterministic:
//! fixed struct field order, no maps, no timestamps, so identical input and
//! tool version produce byte-identical output.

use serde::Serialize;

use domkit::dominance::KypReport;
use domkit::frequency::{CircleReport, Disk, DiskMode};

pub const TOOL_NAME: &str = "domkit";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> ToolInfo {
        ToolInfo {
            name: TOOL_NAME,
            version: TOOL_VERSION,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GridInfo {
    pub omega_min: f64,
    pub omega_max: f64,
    pub base_points: usize,
    /// Points actually evaluated after pole densification.
    pub total_points: usize,
    pub indent_radius: Option<f64>,
}

/// Tolerances that produced the report's booleans; every numeric verdict in
/// the report is governed by one of these.
#[derive(Debug, Serialize)]
pub struct ToleranceInfo {
    /// Half-width of the band around the shifted imaginary axis treated as
    /// a boundary pole.
    pub boundary_pole: f64,
    /// Minimum disk clearance demanded for a conclusive verdict.
    pub verdict_margin: f64,
    /// Slack allowed when sampling the nonlinearity's derivative against
    /// the declared sector.
    pub sector_derivative: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct PoleSplitInfo {
    pub shifted_rhp_poles: usize,
    pub total_poles: usize,
    pub numerator_degree: usize,
    pub shifted_rhp_zeros: usize,
    pub relative_degree: usize,
    pub boundary: bool,
}

/// Scalar supply rate (q, l, r) derived from the sector: the margin tested
/// is q|G|^2 + 2 l Re G + r.
#[derive(Debug, Serialize)]
pub struct SupplyInfo {
    pub q: f64,
    pub l: f64,
    pub r: f64,
}

#[derive(Debug, Serialize)]
pub struct KypInfo {
    pub requested_p: usize,
    pub pole_count: usize,
    pub holds: bool,
    pub strict: bool,
    pub min_margin: f64,
    pub min_margin_finite: f64,
    /// Frequency attaining the minimum; null means the limit at infinity.
    pub argmin_omega: Option<f64>,
    pub strictness_threshold: f64,
}

impl KypInfo {
    pub fn from_report(r: &KypReport, strictness_threshold: f64) -> KypInfo {
        KypInfo {
            requested_p: r.requested_p,
            pole_count: r.p,
            holds: r.holds,
            strict: r.strict,
            min_margin: r.min_margin,
            min_margin_finite: r.min_margin_finite,
            argmin_omega: r.argmin_omega,
            strictness_threshold,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DiskInfo {
    pub k1: f64,
    pub k2: f64,
    pub mode: &'static str,
    pub center: f64,
    /// Null for the half-plane modes (infinite radius).
    pub radius: Option<f64>,
}

impl DiskInfo {
    pub fn from_disk(d: &Disk, k1: f64, k2: f64) -> DiskInfo {
        let (mode, radius) = match d.mode {
            DiskMode::Outside => ("outside", Some(d.radius)),
            DiskMode::Inside => ("inside", Some(d.radius)),
            DiskMode::HalfPlaneRight => ("half_plane_right", None),
            DiskMode::HalfPlaneLeft => ("half_plane_left", None),
        };
        DiskInfo {
            k1,
            k2,
            mode,
            center: d.center,
            radius,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CircleInfo {
    pub disk: DiskInfo,
    /// Clockwise encirclements of -1/k1 (zero by convention when k1 = 0).
    pub encirclements_clockwise: Option<i64>,
    pub disk_clearance: Option<f64>,
    pub clause_no_boundary_poles: bool,
    pub clause_encirclement: bool,
    pub clause_disk: bool,
    pub verdict_p: Option<usize>,
    pub reason: Option<String>,
}

impl CircleInfo {
    pub fn from_report(r: &CircleReport, k1: f64, k2: f64) -> CircleInfo {
        CircleInfo {
            disk: DiskInfo::from_disk(&r.disk, k1, k2),
            encirclements_clockwise: r.encirclements,
            disk_clearance: r.disk_clearance,
            clause_no_boundary_poles: r.clauses.no_boundary_poles,
            clause_encirclement: r.clauses.encirclement,
            clause_disk: r.clauses.disk,
            verdict_p: r.verdict,
            reason: r.reason.clone(),
        }
    }
}

/// Comparison of the nonlinearity's sampled derivative range against the
/// sector the frequency tests assumed. A mismatch does not withdraw the
/// frequency-domain verdict (which is conditional on the sector hypothesis)
/// but is surfaced here and as a verdict caveat.
#[derive(Debug, Serialize)]
pub struct SectorCheckInfo {
    pub declared_sector: (f64, f64),
    pub analyzed_sector: (f64, f64),
    pub derivative_within: bool,
    pub sample_half_width: f64,
    pub sample_count: usize,
}

#[derive(Debug, Serialize)]
pub struct Verdict {
    /// Dominance degree of the feedback loop, when conclusive.
    pub p: Option<usize>,
    pub conclusive: bool,
    pub reason: Option<String>,
    pub caveat: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub tool: ToolInfo,
    pub command: &'static str,
    pub lambda: f64,
    pub feedback: &'static str,
    /// True when the analysis ran on -G to fold a positive-feedback loop
    /// into the negative-feedback convention.
    pub analysis_negated: bool,
    pub system_order: usize,
    pub grid: GridInfo,
    pub tolerances: ToleranceInfo,
    pub pole_split: Option<PoleSplitInfo>,
    pub degree_candidates: Option<Vec<usize>>,
    pub supply: Option<SupplyInfo>,
    pub kyp: Option<KypInfo>,
    pub circle: Option<CircleInfo>,
    pub sector_check: Option<SectorCheckInfo>,
    pub verdict: Verdict,
}

#[derive(Debug, Serialize)]
pub struct ClassifyTolerances {
    /// Tail bounding-box diameter below this times (1 + ||mean||) is a
    /// fixed point.
    pub fixed_point_diameter_rel: f64,
    /// Recurrence residual below this times the tail diameter is periodic.
    pub periodic_residual_rel: f64,
    /// Minimum period in units of dt.
    pub min_period_over_dt: f64,
}

#[derive(Debug, Serialize)]
pub struct LabelReport {
    pub tool: ToolInfo,
    pub kind: &'static str,
    pub witness_point: Option<Vec<f64>>,
    /// Loop output at the witness point.
    pub witness_output: Option<f64>,
    pub witness_period: Option<f64>,
    pub diverged: bool,
    pub samples: usize,
    pub state_dim: usize,
    pub dt: f64,
    pub transient_fraction: f64,
    pub tolerances: ClassifyTolerances,
}

#[derive(Debug, Serialize)]
pub struct WindowInfo {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Serialize)]
pub struct RateScanSidecar {
    pub tool: ToolInfo,
    pub degree: usize,
    pub supply: SupplyInfo,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub steps: usize,
    pub grid_points: usize,
    /// Rates where the pole count matches `degree` and the finite-grid
    /// margin is positive; interior endpoints refined by bisection.
    pub windows: Vec<WindowInfo>,
}

/// Disk sidecar for a Nyquist export; radius is null in half-plane modes.
#[derive(Debug, Serialize)]
pub struct DiskSidecar {
    pub tool: ToolInfo,
    pub disk: DiskInfo,
}

/// Stable JSON rendering: pretty-printed with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    text.push('\n');
    text
}
