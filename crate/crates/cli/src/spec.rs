//! On-disk system description: a JSON document naming the linear part
//! (transfer function or state space), the analysis rate, the sector, the
//! feedback nonlinearity, and optional grid and simulation blocks.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use domkit::frequency::{DEFAULT_GRID_POINTS, DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_MIN};
use domkit::lti::{tf_from_statespace, Polynomial, StateSpace, TransferFunction};
use domkit::numerics::Matrix;
use domkit::simulate::{FeedbackSign, Nonlinearity};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpecFile {
    #[serde(default)]
    pub transfer_function: Option<TransferFunctionSpec>,
    #[serde(default)]
    pub state_space: Option<StateSpaceSpec>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub sector: Option<SectorSpec>,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default)]
    pub feedback: Option<String>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub simulation: Option<SimulationSpec>,
}

/// Polynomial coefficients in ascending order (constant term first).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferFunctionSpec {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpaceSpec {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSpec {
    pub k1: f64,
    pub k2: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    /// One of `tanh_scaled`, `tanh_plus_linear`, `custom_table`.
    pub kind: String,
    pub params: serde_json::Value,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub omega_min: Option<f64>,
    #[serde(default)]
    pub omega_max: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub x0: Vec<f64>,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Fraction of the run discarded before classification; default 0.5.
    #[serde(default)]
    pub transient_fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TanhScaledParams {
    a: f64,
    k: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TanhPlusLinearParams {
    a: f64,
    k: f64,
    c: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomTableParams {
    points: Vec<(f64, f64)>,
}

pub fn load_spec(path: &Path) -> Result<SystemSpecFile> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read spec file {}", path.display()))?;
    let spec: SystemSpecFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse spec file {}", path.display()))?;
    spec.validate()?;
    Ok(spec)
}

impl SystemSpecFile {
    pub fn validate(&self) -> Result<()> {
        match (&self.transfer_function, &self.state_space) {
            (Some(_), Some(_)) => {
                bail!("spec must contain exactly one of transfer_function / state_space, found both")
            }
            (None, None) => {
                bail!("spec must contain exactly one of transfer_function / state_space, found neither")
            }
            _ => {}
        }
        if let Some(lambda) = self.lambda {
            if !(lambda.is_finite() && lambda >= 0.0) {
                bail!("lambda must be finite and nonnegative, got {lambda}");
            }
        }
        if let Some(sector) = &self.sector {
            if !(sector.k1.is_finite() && sector.k2.is_finite() && sector.k1 < sector.k2) {
                bail!(
                    "sector needs finite k1 < k2, got k1 = {}, k2 = {}",
                    sector.k1,
                    sector.k2
                );
            }
        }
        if let Some(feedback) = &self.feedback {
            if feedback != "negative" && feedback != "positive" {
                bail!("feedback must be \"negative\" or \"positive\", got {feedback:?}");
            }
        }
        Ok(())
    }

    /// Transfer function of the linear part, derived from the state-space
    /// block when that form was given.
    pub fn plant(&self) -> Result<TransferFunction> {
        if let Some(tf) = &self.transfer_function {
            return TransferFunction::new(
                Polynomial::new(tf.num.clone()),
                Polynomial::new(tf.den.clone()),
            )
            .context("invalid transfer_function block");
        }
        let ss = self.statespace()?;
        tf_from_statespace(&ss).context("state_space block has no valid transfer function")
    }

    /// State-space realization of the linear part; transfer-function specs
    /// get a canonical realization.
    pub fn statespace(&self) -> Result<StateSpace> {
        if let Some(ss) = &self.state_space {
            let a = matrix_from_rows(&ss.a, "A")?;
            let b = matrix_from_rows(&ss.b, "B")?;
            let c = matrix_from_rows(&ss.c, "C")?;
            let d = matrix_from_rows(&ss.d, "D")?;
            return StateSpace::new(a, b, c, d).context("invalid state_space block");
        }
        let g = self.plant()?;
        StateSpace::from_transfer_function(&g)
            .context("transfer_function block has no state realization")
    }

    pub fn feedback_sign(&self) -> FeedbackSign {
        match self.feedback.as_deref() {
            Some("positive") => FeedbackSign::Positive,
            _ => FeedbackSign::Negative,
        }
    }

    /// Plant seen by the frequency-domain tests: for positive feedback the
    /// loop of G with +phi equals the loop of -G with -phi, so the analysis
    /// runs on -G under the negative-feedback convention.
    pub fn analysis_plant(&self) -> Result<TransferFunction> {
        let g = self.plant()?;
        Ok(match self.feedback_sign() {
            FeedbackSign::Negative => g,
            FeedbackSign::Positive => g.scale(-1.0),
        })
    }

    pub fn build_nonlinearity(&self) -> Result<Option<Nonlinearity>> {
        let Some(nl) = &self.nonlinearity else {
            return Ok(None);
        };
        let phi = match nl.kind.as_str() {
            "tanh_scaled" => {
                let p: TanhScaledParams = serde_json::from_value(nl.params.clone())
                    .context("tanh_scaled expects params {a, k}")?;
                Nonlinearity::tanh_family(p.a, p.k, 0.0)
            }
            "tanh_plus_linear" => {
                let p: TanhPlusLinearParams = serde_json::from_value(nl.params.clone())
                    .context("tanh_plus_linear expects params {a, k, c}")?;
                Nonlinearity::tanh_family(p.a, p.k, p.c)
            }
            "custom_table" => {
                let p: CustomTableParams = serde_json::from_value(nl.params.clone())
                    .context("custom_table expects params {points: [[y, phi]]}")?;
                Nonlinearity::from_table(&p.points).context("invalid custom_table points")?
            }
            other => bail!(
                "unknown nonlinearity kind {other:?}; expected tanh_scaled, tanh_plus_linear, or custom_table"
            ),
        };
        Ok(Some(phi))
    }

    /// Grid bounds and base density: spec values, with the command-line
    /// point count taking precedence.
    pub fn grid_params(&self, points_override: Option<usize>) -> (f64, f64, usize) {
        let omega_min = self
            .grid
            .as_ref()
            .and_then(|g| g.omega_min)
            .unwrap_or(DEFAULT_OMEGA_MIN);
        let omega_max = self
            .grid
            .as_ref()
            .and_then(|g| g.omega_max)
            .unwrap_or(DEFAULT_OMEGA_MAX);
        let points = points_override
            .or(self.grid.as_ref().and_then(|g| g.points))
            .unwrap_or(DEFAULT_GRID_POINTS);
        (omega_min, omega_max, points)
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], name: &str) -> Result<Matrix> {
    if rows.is_empty() {
        bail!("state_space matrix {name} is empty");
    }
    let cols = rows[0].len();
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        bail!("state_space matrix {name} must be rectangular and nonempty");
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        bail!("state_space matrix {name} must be finite");
    }
    Ok(Matrix::from_row_slice(rows.len(), cols, &flat))
}
