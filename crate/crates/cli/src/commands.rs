//! Command implementations. Each returns the process exit code: 0 for a
//! conclusive result, 1 for a malformed spec or runtime failure (surfaced as
//! an error by the caller), 2 for a well-formed but inconclusive analysis.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::warn;

use domkit::dominance::{
    kyp_frequency_test, passivity_degree_candidates, rate_scan, Supply,
};
use domkit::frequency::{
    circle_criterion, disk, nyquist_locus_with, FrequencyError, FrequencyGrid, Indentation,
};
use domkit::lti::{default_boundary_tol, pole_zero_split, PoleZeroSplit};
use domkit::simulate::{classify, simulate, AttractorKind, AttractorWitness, LureLoop};

use crate::report::{
    to_json_string, AnalysisReport, CircleInfo, ClassifyTolerances, DiskInfo, DiskSidecar,
    GridInfo, KypInfo, LabelReport, PoleSplitInfo, RateScanSidecar, SectorCheckInfo, SupplyInfo,
    ToleranceInfo, ToolInfo, Verdict, WindowInfo,
};
use crate::spec::{load_spec, SystemSpecFile};

/// Flags shared by every verb.
#[derive(Debug, Clone, Default)]
pub struct CommonOpts {
    pub out: Option<PathBuf>,
    pub indent_radius: Option<f64>,
    pub grid_points: Option<usize>,
    pub tol: Option<f64>,
}

/// Half-width and density of the derivative sampling used to compare a
/// concrete nonlinearity against the declared sector.
const SECTOR_SAMPLE_HALF_WIDTH: f64 = 50.0;
const SECTOR_SAMPLE_COUNT: usize = 2001;

fn split_info(split: &PoleZeroSplit) -> PoleSplitInfo {
    PoleSplitInfo {
        shifted_rhp_poles: split.p,
        total_poles: split.n_total,
        numerator_degree: split.q,
        shifted_rhp_zeros: split.r,
        relative_degree: split.n_total.saturating_sub(split.q),
        boundary: split.boundary,
    }
}

/// Full frequency-domain analysis of a spec; exposed separately from the
/// file-level command so tests can inspect the report without a process
/// round trip. Returns the report and the exit code.
pub fn analyze_spec(spec: &SystemSpecFile, opts: &CommonOpts) -> Result<(AnalysisReport, i32)> {
    let g = spec.analysis_plant()?;
    let lambda = spec
        .lambda
        .context("analyze needs a `lambda` entry in the spec")?;
    let (omega_min, omega_max, base_points) = spec.grid_params(opts.grid_points);
    let grid = FrequencyGrid::standard_with(&g, lambda, omega_min, omega_max, base_points)
        .context("cannot build the frequency grid")?;
    let boundary_tol = default_boundary_tol(lambda);
    let verdict_margin = opts.tol.unwrap_or(0.0);
    let feedback = match spec.feedback_sign() {
        domkit::simulate::FeedbackSign::Negative => "negative",
        domkit::simulate::FeedbackSign::Positive => "positive",
    };
    let analysis_negated = feedback == "positive";

    let mut report = AnalysisReport {
        tool: ToolInfo::current(),
        command: "analyze",
        lambda,
        feedback,
        analysis_negated,
        system_order: g.den().degree(),
        grid: GridInfo {
            omega_min,
            omega_max,
            base_points,
            total_points: grid.omegas().len(),
            indent_radius: None,
        },
        tolerances: ToleranceInfo {
            boundary_pole: boundary_tol,
            verdict_margin,
            sector_derivative: None,
        },
        pole_split: None,
        degree_candidates: None,
        supply: None,
        kyp: None,
        circle: None,
        sector_check: None,
        verdict: Verdict {
            p: None,
            conclusive: false,
            reason: None,
            caveat: None,
        },
    };

    let split = pole_zero_split(&g, lambda, boundary_tol)?;
    report.pole_split = Some(split_info(&split));
    if split.boundary {
        report.verdict.reason = Some(format!(
            "boundary pole: a shifted root lies within {boundary_tol:.3e} of the imaginary axis"
        ));
        return Ok((report, 2));
    }

    report.degree_candidates = Some(passivity_degree_candidates(&g, lambda)?);

    let Some(sector) = &spec.sector else {
        report.verdict.reason =
            Some("no sector declared; only the pole split and degree candidates are reported".into());
        return Ok((report, 2));
    };
    let (k1, k2) = (sector.k1, sector.k2);

    let supply = Supply::sector(k1, k2)?;
    let (sq, sl, sr) = supply.scalar().expect("sector supply is scalar");
    report.supply = Some(SupplyInfo {
        q: sq,
        l: sl,
        r: sr,
    });
    let kyp = kyp_frequency_test(&g, lambda, &supply, split.p, &grid)?;
    let strictness = 1e-7 * (1.0 + sq.abs() + sl.abs() + sr.abs());
    report.kyp = Some(KypInfo::from_report(&kyp, strictness));

    // The concrete nonlinearity, when present, is checked against the
    // declared sector by derivative sampling. A mismatch is surfaced as a
    // caveat, not a withdrawal: the frequency verdict is conditional on the
    // sector hypothesis, and the declared sector is the analysis input.
    if let Some(phi) = spec.build_nonlinearity()? {
        let within = phi.respects_sector(k1, k2, SECTOR_SAMPLE_HALF_WIDTH, SECTOR_SAMPLE_COUNT);
        report.tolerances.sector_derivative = Some(1e-9 * (1.0 + k1.abs() + k2.abs()));
        report.sector_check = Some(SectorCheckInfo {
            declared_sector: (k1, k2),
            analyzed_sector: phi.sector(),
            derivative_within: within,
            sample_half_width: SECTOR_SAMPLE_HALF_WIDTH,
            sample_count: SECTOR_SAMPLE_COUNT,
        });
        if !within {
            let (a, b) = phi.sector();
            report.verdict.caveat = Some(format!(
                "the nonlinearity's sampled slope range [{a}, {b}] leaves the declared sector \
                 [{k1}, {k2}]; the verdict is conditional on the declared sector"
            ));
        }
    }

    match circle_criterion(&g, lambda, k1, k2, &grid) {
        Ok(circle) => {
            let info = CircleInfo::from_report(&circle, k1, k2);
            let clearance = circle.disk_clearance;
            report.circle = Some(info);
            match circle.verdict {
                Some(p) if clearance.is_some_and(|c| c > verdict_margin) => {
                    report.verdict.p = Some(p);
                    report.verdict.conclusive = true;
                }
                Some(_) => {
                    report.verdict.reason = Some(format!(
                        "disk clearance {:.3e} does not exceed the required margin {verdict_margin:.3e}",
                        clearance.unwrap_or(f64::NAN)
                    ));
                }
                None => {
                    report.verdict.reason = circle.reason.clone();
                }
            }
        }
        Err(FrequencyError::DiskGrazing { clearance }) => {
            report.verdict.reason = Some(format!(
                "locus grazes the sector-disk boundary (clearance {clearance:.3e})"
            ));
        }
        Err(err) => return Err(err).context("circle criterion failed"),
    }

    let code = if report.verdict.conclusive { 0 } else { 2 };
    Ok((report, code))
}

pub fn cmd_analyze(spec_path: &Path, opts: &CommonOpts) -> Result<i32> {
    let spec = load_spec(spec_path)?;
    let (report, code) = analyze_spec(&spec, opts)?;
    write_text(opts.out.as_deref(), &to_json_string(&report))?;
    Ok(code)
}

pub fn cmd_nyquist(spec_path: &Path, opts: &CommonOpts) -> Result<i32> {
    let spec = load_spec(spec_path)?;
    let g = spec.analysis_plant()?;
    let lambda = spec
        .lambda
        .context("nyquist needs a `lambda` entry in the spec")?;
    let (omega_min, omega_max, base_points) = spec.grid_params(opts.grid_points);
    let grid = FrequencyGrid::standard_with(&g, lambda, omega_min, omega_max, base_points)
        .context("cannot build the frequency grid")?;
    let indentation = match opts.indent_radius {
        Some(radius) => Indentation::Arc { radius },
        None => Indentation::Reject,
    };
    let locus = match nyquist_locus_with(&g, lambda, &grid, indentation) {
        Ok(locus) => locus,
        Err(FrequencyError::BoundaryPole { re, tol }) => {
            eprintln!(
                "a shifted pole sits on the sweep path (Re = {re:.3e}, tolerance {tol:.3e}); \
                 pass --indent-radius to detour around it"
            );
            return Ok(2);
        }
        Err(err) => return Err(err).context("cannot sweep the locus"),
    };
    write_text(opts.out.as_deref(), &locus.to_csv())?;
    if let Some(sector) = &spec.sector {
        let d = disk(sector.k1, sector.k2)?;
        let sidecar = DiskSidecar {
            tool: ToolInfo::current(),
            disk: DiskInfo::from_disk(&d, sector.k1, sector.k2),
        };
        match &opts.out {
            Some(out) => {
                let path = out.with_extension("disk.json");
                fs::write(&path, to_json_string(&sidecar))
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            None => warn!("no --out path; skipping the sector-disk sidecar"),
        }
    }
    Ok(0)
}

pub fn cmd_simulate(spec_path: &Path, opts: &CommonOpts) -> Result<i32> {
    let spec = load_spec(spec_path)?;
    let sim = spec
        .simulation
        .as_ref()
        .context("simulate needs a `simulation` block in the spec")?;
    let phi = spec
        .build_nonlinearity()?
        .context("simulate needs a `nonlinearity` block in the spec")?;
    let out = opts
        .out
        .as_deref()
        .context("simulate needs --out for the trajectory")?;
    let linear = spec.statespace()?;
    let lure = LureLoop::new(linear, phi, spec.feedback_sign())?;
    let traj = simulate(&lure, &sim.x0, sim.dt, sim.t_final)?;
    let transient = sim.transient_fraction.unwrap_or(0.5);
    let label = classify(&traj, transient)?;

    let kind = match label.kind {
        AttractorKind::FixedPoint => "fixed_point",
        AttractorKind::Periodic => "periodic",
        AttractorKind::Other => "other",
        AttractorKind::Diverged => "diverged",
    };
    let (witness_point, witness_period) = match &label.witness {
        AttractorWitness::Point(x) => (Some(x.clone()), None),
        AttractorWitness::Period(tau) => (None, Some(*tau)),
        AttractorWitness::None => (None, None),
    };
    let witness_output = witness_point.as_ref().map(|x| {
        let c = lure.linear().c();
        (0..x.len()).map(|i| c[(0, i)] * x[i]).sum()
    });
    let report = LabelReport {
        tool: ToolInfo::current(),
        kind,
        witness_point,
        witness_output,
        witness_period,
        diverged: traj.diverged(),
        samples: traj.len(),
        state_dim: traj.state_dim(),
        dt: traj.dt(),
        transient_fraction: transient,
        tolerances: ClassifyTolerances {
            fixed_point_diameter_rel: 1e-4,
            periodic_residual_rel: 1e-3,
            min_period_over_dt: 10.0,
        },
    };
    fs::write(out, traj.to_csv()).with_context(|| format!("cannot write {}", out.display()))?;
    let label_path = out.with_extension("label.json");
    fs::write(&label_path, to_json_string(&report))
        .with_context(|| format!("cannot write {}", label_path.display()))?;
    Ok(0)
}

pub fn cmd_rate_scan(
    spec_path: &Path,
    opts: &CommonOpts,
    lambda_min: f64,
    lambda_max: f64,
    steps: usize,
    degree: usize,
) -> Result<i32> {
    let spec = load_spec(spec_path)?;
    let g = spec.analysis_plant()?;
    let supply = match &spec.sector {
        Some(sector) => Supply::sector(sector.k1, sector.k2)?,
        None => Supply::p_passive(1),
    };
    let grid_points = opts.grid_points.unwrap_or(400);
    let scan = rate_scan(&g, &supply, degree, lambda_min, lambda_max, steps, grid_points)?;

    let mut csv = String::from("lambda,shifted_rhp_poles,margin\n");
    for point in &scan.points {
        let poles = point.pole_count.map_or(String::new(), |p| p.to_string());
        let margin = point.margin.map_or(String::new(), |m| m.to_string());
        csv.push_str(&format!("{},{},{}\n", point.lambda, poles, margin));
    }
    write_text(opts.out.as_deref(), &csv)?;

    let (sq, sl, sr) = supply.scalar().expect("scan supplies are scalar");
    let sidecar = RateScanSidecar {
        tool: ToolInfo::current(),
        degree,
        supply: SupplyInfo {
            q: sq,
            l: sl,
            r: sr,
        },
        lambda_min,
        lambda_max,
        steps,
        grid_points,
        windows: scan
            .windows
            .iter()
            .map(|w| WindowInfo { lo: w.lo, hi: w.hi })
            .collect(),
    };
    match &opts.out {
        Some(out) => {
            let path = out.with_extension("windows.json");
            fs::write(&path, to_json_string(&sidecar))
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        None => warn!("no --out path; skipping the windows sidecar"),
    }
    Ok(0)
}

/// Writes to the given path, or to stdout when no path was given. A broken
/// pipe on stdout means the consumer closed early (`domkit ... | head`), so
/// the process ends quietly instead of failing.
fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => {
            let mut stdout = io::stdout().lock();
            if let Err(err) = stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
                if err.kind() == io::ErrorKind::BrokenPipe {
                    std::process::exit(0);
                }
                return Err(err).context("writing to stdout");
            }
        }
    }
    Ok(())
}
