mod report;
mod suites;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sphere_poincare::eigensolver::{gamma_numeric, numeric_minimizer_along, DEFAULT_MAX_DEGREE};
use sphere_poincare::flow::{gradient_flow, max_unit_deviation, perturbed_normal};
use sphere_poincare::grid::{Grid, SampledVectorField};
use sphere_poincare::sharp::{
    build_minimizer, equality_residual, gamma_table, membership_check, write_gamma_table,
    FreeParams, Regime,
};
use sphere_poincare::spectral::{norm_sq, EnergyBreakdown};
use sphere_poincare::vsh::{synthesize, CoeffSet};
use sphere_poincare::FOUR_PI;

use report::RunReport;
use suites::{Suite, SuiteOptions};

const SEED_ENV: &str = "SPHERE_POINCARE_SEED";

#[derive(Parser)]
#[command(name = "sphere-poincare", version, about = "Sharp Poincare constants for vector fields on the unit sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate gamma(kappa) as CSV (kappa,gamma,gamma_plus,shifted).
    Gamma {
        /// A single kappa.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "range", required_unless_present = "range")]
        kappa: Option<f64>,
        /// Inclusive range FROM TO STEPS.
        #[arg(long, num_args = 3, value_names = ["FROM", "TO", "STEPS"], allow_hyphen_values = true)]
        range: Option<Vec<String>>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an invariant battery; exits non-zero if any check fails.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// RNG seed; SPHERE_POINCARE_SEED takes precedence when set.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random samples (suite default when omitted).
        #[arg(long)]
        samples: Option<usize>,
        /// Tolerance of the main check (suite default when omitted).
        #[arg(long)]
        tol: Option<f64>,
        /// Band limit, or maximum degree for the lemma suite.
        #[arg(long)]
        band: Option<usize>,
        /// Restrict the kappa values (repeatable).
        #[arg(long = "kappa", allow_hyphen_values = true)]
        kappas: Vec<f64>,
        /// Also write the report as JSON to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Build a minimizer of the constrained energy and sample it on a grid.
    Minimize {
        /// Anisotropy weight kappa.
        #[arg(long, allow_hyphen_values = true)]
        kappa: f64,
        /// Closed-form family or numeric block eigen-solve.
        #[arg(long, value_enum, default_value_t = Method::Closed)]
        method: Method,
        /// Cartesian direction of the degree-one part.
        #[arg(long, num_args = 3, value_names = ["DX", "DY", "DZ"], allow_hyphen_values = true, default_values_t = [0.0, 0.0, 1.0])]
        direction: Vec<f64>,
        /// Radial coefficient at kappa = -4; 2 c0^2 must not exceed 8 pi.
        #[arg(long, allow_hyphen_values = true)]
        c0: Option<f64>,
        /// Pick -n instead of +n for kappa < -4.
        #[arg(long)]
        negative: bool,
        /// Sampling grid N_T N_PHI.
        #[arg(long, num_args = 2, value_names = ["NT", "NPHI"], default_values_t = [16, 33])]
        grid: Vec<usize>,
        /// Membership tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write PREFIX_coeffs.csv and PREFIX_field.csv; without it the
        /// coefficient CSV goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Projected gradient flow from a perturbation of the normal field.
    Flow {
        /// Anisotropy weight kappa.
        #[arg(long, allow_hyphen_values = true)]
        kappa: f64,
        /// Amplitude of the normalized y2_{1,0} perturbation.
        #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
        perturb: f64,
        /// Time step; must stay below 1 / (band (band + 1)).
        #[arg(long, default_value_t = 0.02)]
        dt: f64,
        /// Number of explicit steps.
        #[arg(long, default_value_t = 2500)]
        steps: usize,
        /// Band limit of the spectral Laplacian.
        #[arg(long, default_value_t = 6)]
        band: usize,
        /// Trajectory CSV path; without it the CSV goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Closed,
    Numeric,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo = std::env::args().collect::<Vec<_>>().join(" ");
    match run(cli.command, echo) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

/// Runs a writer against `path`, or stdout when absent.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn print_report(report: &mut RunReport, json: bool) {
    report.finish();
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
}

fn seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(flag),
    }
}

fn run(command: Command, echo: String) -> Result<bool> {
    match command {
        Command::Gamma { kappa, range, out } => {
            let rows = match (kappa, range) {
                (Some(k), _) => gamma_table(k, k, 1)?,
                (None, Some(r)) => {
                    let from: f64 = r[0].parse().context("FROM must be a number")?;
                    let to: f64 = r[1].parse().context("TO must be a number")?;
                    let steps: usize = r[2].parse().context("STEPS must be a positive integer")?;
                    gamma_table(from, to, steps)?
                }
                (None, None) => bail!("either --kappa or --range is required"),
            };
            emit(out.as_deref(), |w| Ok(write_gamma_table(&rows, w)?))?;
            Ok(true)
        }
        Command::Verify {
            suite,
            seed: flag,
            samples,
            tol,
            band,
            kappas,
            out,
            json,
        } => {
            let opts = SuiteOptions {
                seed: seed(flag)?,
                samples,
                tol,
                band,
                kappas,
            };
            let mut report = RunReport::start(echo);
            suites::run(suite, &opts, &mut report)?;
            print_report(&mut report, json);
            if let Some(p) = out {
                let mut w = create(&p)?;
                writeln!(w, "{}", report.to_json())?;
                w.flush()?;
            }
            Ok(report.passed)
        }
        Command::Minimize {
            kappa,
            method,
            direction,
            c0,
            negative,
            grid,
            tol,
            out,
            json,
        } => minimize(echo, kappa, method, &direction, c0, negative, &grid, tol, out, json),
        Command::Flow {
            kappa,
            perturb,
            dt,
            steps,
            band,
            out,
            json,
        } => flow(echo, kappa, perturb, dt, steps, band, out, json),
    }
}

/// Coefficient triple indexed by `j + 1` whose degree-one field points
/// along the Cartesian `d`. The normalization carries `(−1)^j`, so the
/// `x` and `y` entries pick up a sign.
fn order_triple(d: &[f64]) -> [f64; 3] {
    [-d[0], d[2], -d[1]]
}

#[allow(clippy::too_many_arguments)]
fn minimize(
    echo: String,
    kappa: f64,
    method: Method,
    direction: &[f64],
    c0: Option<f64>,
    negative: bool,
    grid: &[usize],
    tol: f64,
    out: Option<PathBuf>,
    json: bool,
) -> Result<bool> {
    let mut report = RunReport::start(echo);
    report.param("kappa", kappa);
    report.param("method", method);
    report.param("direction", direction);
    report.param("grid", grid);
    report.param("tolerance", tol);
    let regime = Regime::classify(kappa);
    report.output("regime", format!("{regime:?}").to_lowercase());
    let triple = order_triple(direction);

    let closed = || -> Result<CoeffSet> {
        let params = match regime {
            Regime::Below => FreeParams::Below { positive: !negative },
            Regime::Above => FreeParams::Above { direction: triple },
            Regime::Critical => FreeParams::Critical {
                c0: c0.unwrap_or((2.0 * std::f64::consts::PI).sqrt()),
                direction: triple,
            },
        };
        Ok(build_minimizer(kappa, params)?.1)
    };
    let numeric = || numeric_minimizer_along(kappa, DEFAULT_MAX_DEGREE, triple);
    let (coeffs, other) = match method {
        Method::Closed => (closed()?, numeric()),
        Method::Numeric => (numeric(), closed()?),
    };

    report.at_most("| |u|^2 - 4 pi |", (norm_sq(&coeffs) - FOUR_PI).abs(), 1e-10);
    report.at_most("|G - 4 pi gamma|", equality_residual(&coeffs, kappa)?.abs(), 1e-10);
    report.at_most(
        "result outside the equality family",
        if membership_check(&coeffs, kappa, tol) { 0.0 } else { 1.0 },
        0.0,
    );
    report.at_most(
        "other method's minimizer outside the equality family",
        if membership_check(&other, kappa, tol) { 0.0 } else { 1.0 },
        0.0,
    );
    let numeric_gamma = gamma_numeric(kappa, DEFAULT_MAX_DEGREE);
    report.output("gamma", numeric_gamma.value);
    report.output("energy", EnergyBreakdown::from_coeffs(&coeffs, kappa));

    if grid.len() != 2 {
        bail!("--grid takes two sizes");
    }
    let g = Arc::new(Grid::new(grid[0], grid[1])?);
    let field = synthesize(&coeffs, g)?;
    match out {
        Some(prefix) => {
            let (cpath, fpath) = (suffixed(&prefix, "_coeffs.csv"), suffixed(&prefix, "_field.csv"));
            emit(Some(&cpath), |w| Ok(coeffs.write_csv(w)?))?;
            emit(Some(&fpath), |w| Ok(field.write_csv(w)?))?;
            report.output("coeffs_csv", cpath.display().to_string());
            report.output("field_csv", fpath.display().to_string());
            print_report(&mut report, json);
        }
        None => {
            emit(None, |w| Ok(coeffs.write_csv(w)?))?;
            report.finish();
            eprint!("{}", report.to_text());
        }
    }
    Ok(report.passed)
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[allow(clippy::too_many_arguments)]
fn flow(
    echo: String,
    kappa: f64,
    perturb: f64,
    dt: f64,
    steps: usize,
    band: usize,
    out: Option<PathBuf>,
    json: bool,
) -> Result<bool> {
    let mut report = RunReport::start(echo);
    report.param("kappa", kappa);
    report.param("perturb", perturb);
    report.param("dt", dt);
    report.param("steps", steps);
    report.param("band", band);
    let grid = Arc::new(Grid::for_band(band));
    report.param("grid", grid.shape());
    let u0: SampledVectorField = perturbed_normal(grid, perturb)?;
    let summary = gradient_flow(&u0, kappa, dt, steps, band)?;

    let first = summary.initial();
    let last = summary.last();
    report.output("verdict", summary.verdict);
    report.output("initial_distance", first.distance());
    report.output("final_distance", last.distance());
    report.output("max_distance", summary.max_distance());
    report.output("final_energy", last.energy);
    report.output("final_residual_max", last.residual_max);
    report.at_most("max | |u| - 1 | after the last step", max_unit_deviation(&summary.final_state.field), 1e-12);
    let rise = summary
        .samples
        .windows(2)
        .map(|w| (w[1].energy - w[0].energy) / w[0].energy.abs().max(1.0))
        .fold(0.0, f64::max);
    report.at_most("max relative energy increase per step", rise, 1e-10);

    match out {
        Some(p) => {
            emit(Some(&p), |w| Ok(summary.write_csv(w)?))?;
            report.output("trajectory_csv", p.display().to_string());
            print_report(&mut report, json);
        }
        None => {
            emit(None, |w| Ok(summary.write_csv(w)?))?;
            report.finish();
            eprint!("{}", report.to_text());
        }
    }
    Ok(report.passed)
}
