use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use env_logger::Env;

use domkit_cli::commands::{cmd_analyze, cmd_nyquist, cmd_rate_scan, cmd_simulate, CommonOpts};

/// Dominance analysis of linear systems and feedback loops: shifted Nyquist
/// tests, frequency-domain dissipativity, circle-criterion verdicts, and
/// nonlinear simulation with attractor classification.
#[derive(Debug, Parser)]
#[command(name = "domkit", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Write the primary output here instead of stdout; sidecar files
    /// derive their names from this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Detour radius around poles sitting on the sweep path.
    #[arg(long)]
    indent_radius: Option<f64>,
    /// Base number of frequency samples.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Minimum disk clearance demanded for a conclusive verdict.
    #[arg(long)]
    tol: Option<f64>,
}

impl CommonArgs {
    fn into_opts(self) -> CommonOpts {
        CommonOpts {
            out: self.out,
            indent_radius: self.indent_radius,
            grid_points: self.grid_points,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Frequency-domain dominance analysis: pole split, degree candidates,
    /// dissipativity margin, and circle-criterion verdict as JSON.
    Analyze {
        /// JSON system spec.
        spec: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Export the shifted Nyquist locus as CSV, with a sector-disk sidecar
    /// when the spec declares a sector.
    Nyquist {
        /// JSON system spec.
        spec: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Integrate the feedback loop and classify the attractor; writes the
    /// trajectory CSV and a label sidecar.
    Simulate {
        /// JSON system spec.
        spec: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep the rate over a range, tabulating the shifted pole count and
    /// dissipativity margin, and report admissible windows for a degree.
    RateScan {
        /// JSON system spec.
        spec: PathBuf,
        /// Lower end of the rate range.
        #[arg(long)]
        lambda_min: f64,
        /// Upper end of the rate range.
        #[arg(long)]
        lambda_max: f64,
        /// Number of probe rates across the range.
        #[arg(long, default_value_t = 21)]
        steps: usize,
        /// Dominance degree the admissibility windows are computed for.
        #[arg(long)]
        degree: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(Env::new().filter_or("DOMKIT_LOG", "warn")).init();
    let cli = Cli::parse();
    let run = || -> anyhow::Result<i32> {
        match cli.cmd {
            Cmd::Analyze { spec, common } => cmd_analyze(&spec, &common.into_opts()),
            Cmd::Nyquist { spec, common } => cmd_nyquist(&spec, &common.into_opts()),
            Cmd::Simulate { spec, common } => cmd_simulate(&spec, &common.into_opts()),
            Cmd::RateScan {
                spec,
                lambda_min,
                lambda_max,
                steps,
                degree,
                common,
            } => cmd_rate_scan(
                &spec,
                &common.into_opts(),
                lambda_min,
                lambda_max,
                steps,
                degree,
            ),
        }
    };
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
