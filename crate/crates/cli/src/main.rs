//! `elliptail`: exact and asymptotic tail probabilities of elliptical pairs,
//! Monte Carlo sampling and plug-in estimation, all reported as CSV.

use std::fs;
use std::io::{self, Write};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use elliptail::asymptotics::{self, converge, Path, Regime, TailEstimate};
use elliptail::estimators::{self, Channel, FitOptions, TailForm, Variant};
use elliptail::exact::{cross_validate, joint_survival_exact};
use elliptail::simulation::{sample_pairs, SampleSet};
use elliptail::{exec, EllipticalPair, Execution, RadialModel};

const THREADS_VAR: &str = "ELLIPTAIL_THREADS";

#[derive(Parser)]
#[command(name = "elliptail", version, about = "Tail probabilities of bivariate elliptical laws with Gumbel-type radii")]
#[command(after_help = "Environment:\n  ELLIPTAIL_THREADS  cap on worker threads [default: machine parallelism]")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact P(X > x, Y > y) by adaptive quadrature
    Exact(ExactArgs),
    /// Leading-order tail expansion with correction magnitudes
    Asymptotic(AsymptoticArgs),
    /// Ratio of an expansion to the exact value along a grid of x
    Converge(ConvergeArgs),
    /// Draw pairs and write them as CSV
    Simulate(SimulateArgs),
    /// Estimate P(Y > y | X > x) or its quantile from sampled pairs
    Estimate(EstimateArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Radial model descriptor (JSON) [default: Gaussian radius]
    #[arg(long)]
    model: Option<PathBuf>,
    /// Correlation parameter in [0, 1)
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
}

impl ModelArgs {
    fn pair(&self) -> Result<EllipticalPair> {
        let model = match &self.model {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
                RadialModel::from_json(&text).with_context(|| format!("parsing model {}", path.display()))?
            }
            None => RadialModel::gaussian(),
        };
        Ok(EllipticalPair::new(self.rho, model)?)
    }
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Threshold for X
    #[arg(long)]
    x: f64,
    /// Threshold for Y
    #[arg(long)]
    y: f64,
    /// Relative quadrature tolerance
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Also evaluate the I-form and fail if the two disagree
    #[arg(long, default_value_t = false)]
    cross_check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Auto,
    #[value(name = "1a")]
    R1a,
    #[value(name = "1b")]
    R1b,
    #[value(name = "1c")]
    R1c,
    #[value(name = "2")]
    R2,
    #[value(name = "3")]
    R3,
    Marginal,
}

#[derive(Args)]
struct AsymptoticArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Expansion to use
    #[arg(long, value_enum, default_value = "auto")]
    regime: RegimeArg,
    /// Threshold for X
    #[arg(long)]
    x: f64,
    /// Second threshold (1b accepts --z instead, 3 accepts --z with --a)
    #[arg(long)]
    y: Option<f64>,
    /// Central offset for 1b, shift for 3
    #[arg(long)]
    z: Option<f64>,
    /// Direction of the shifted conditional form
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Quadrature tolerance for the regimes that integrate
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Expansion to compare with the exact value
    #[arg(long, value_enum, default_value = "1a")]
    regime: RegimeArg,
    /// Comma-separated thresholds
    #[arg(long, value_delimiter = ',', required = true)]
    x_grid: Vec<f64>,
    /// Ray y = a·x
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Central offset (1b) or shift (3)
    #[arg(long, default_value_t = 0.0)]
    z: f64,
    /// Relative quadrature tolerance
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of pairs
    #[arg(long)]
    n: usize,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file [default: standard output]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Plain,
    Berman,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["y", "q"]))]
struct EstimateArgs {
    /// CSV with header x,y
    #[arg(long)]
    pairs: PathBuf,
    /// Upper order statistics in the regression [default: ceil(2√n) clamped to [30, n/2]]
    #[arg(long)]
    k_top: Option<usize>,
    /// Conditioning threshold X > x
    #[arg(long)]
    x: f64,
    /// Report the conditional survival at y
    #[arg(long)]
    y: Option<f64>,
    /// Report the conditional q-quantile
    #[arg(long)]
    q: Option<f64>,
    /// Plug-in variant: 1 uses g1, 2 uses g2
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 1)]
    variant: u8,
    /// Fit on Z = (ζX + Y)/√(ζ² + 2ζρ̂ + 1) instead of X [default: fit on X]
    #[arg(long)]
    zeta: Option<f64>,
    /// Marginal tail form assumed by the regression
    #[arg(long, value_enum, default_value = "berman")]
    form: FormArg,
}

/// Fixed 17-significant-digit rendering.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn writer(out: Option<&FsPath>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn warn(est: &TailEstimate) {
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
}

fn run_exact(a: &ExactArgs) -> Result<()> {
    let pair = a.model.pair()?;
    let mut w = writer(None)?;
    if a.cross_check {
        let c = cross_validate(&pair, a.x, a.y, a.tol)?;
        w.write_record(["x", "y", "rho", "value", "abs_error", "evaluations", "iform_value", "discrepancy"])?;
        w.write_record([
            num(a.x),
            num(a.y),
            num(pair.rho()),
            num(c.angular.value),
            num(c.angular.abs_error_estimate),
            c.angular.evaluations.to_string(),
            num(c.iform.value),
            num(c.discrepancy),
        ])?;
    } else {
        let r = joint_survival_exact(&pair, a.x, a.y, a.tol)?;
        w.write_record(["x", "y", "rho", "value", "abs_error", "evaluations"])?;
        w.write_record([
            num(a.x),
            num(a.y),
            num(pair.rho()),
            num(r.value),
            num(r.abs_error_estimate),
            r.evaluations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn need_y(y: Option<f64>, regime: &str) -> Result<f64> {
    y.with_context(|| format!("regime {regime} needs --y"))
}

fn run_asymptotic(a: &AsymptoticArgs) -> Result<()> {
    let pair = a.model.pair()?;
    let (est, y) = match a.regime {
        RegimeArg::Auto => {
            let y = need_y(a.y, "auto")?;
            (asymptotics::auto_joint(&pair, a.x, y)?, Some(y))
        }
        RegimeArg::R1a => {
            let y = need_y(a.y, "1a")?;
            (asymptotics::thm1a_joint(&pair, a.x, y)?, Some(y))
        }
        RegimeArg::R1b => {
            let z = match (a.y, a.z) {
                (_, Some(z)) => z,
                (Some(y), None) => asymptotics::thm1b_z(&pair, a.x, y),
                (None, None) => bail!("regime 1b needs --y or --z"),
            };
            let est = asymptotics::thm1b_joint(&pair, a.x, z)?;
            let y = est.implied_y;
            (est, y)
        }
        RegimeArg::R1c => {
            let y = need_y(a.y, "1c")?;
            (asymptotics::thm1c_joint(&pair, a.x, y)?, Some(y))
        }
        RegimeArg::R2 => {
            let y = need_y(a.y, "2")?;
            (asymptotics::thm2_joint(&pair, a.x, y, a.tol)?, Some(y))
        }
        RegimeArg::R3 => match (a.y, a.z) {
            (Some(y), None) => (asymptotics::thm3_conditional(&pair, a.x, y, a.tol)?, Some(y)),
            (None, Some(z)) => {
                let est = asymptotics::thm3_shifted(&pair, a.a, a.x, z, a.tol)?;
                let y = est.implied_y;
                (est, y)
            }
            _ => bail!("regime 3 needs exactly one of --y and --z"),
        },
        RegimeArg::Marginal => (asymptotics::marginal_berman(&pair, a.x)?, None),
    };
    warn(&est);
    let mut header: Vec<String> = ["value", "regime", "x", "y", "alt_value", "boundary", "correction_total"]
        .map(String::from)
        .to_vec();
    header.extend(est.corrections.iter().map(|c| c.label.clone()));
    let mut row = vec![
        num(est.value),
        est.regime.name().to_string(),
        num(a.x),
        opt(y),
        opt(est.alt_value),
        est.boundary.to_string(),
        num(est.correction_total()),
    ];
    row.extend(est.corrections.iter().map(|c| num(c.magnitude)));
    let mut w = writer(None)?;
    w.write_record(&header)?;
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

fn run_converge(a: &ConvergeArgs) -> Result<()> {
    let pair = a.model.pair()?;
    let regime = match a.regime {
        RegimeArg::Auto => bail!("converge needs an explicit --regime"),
        RegimeArg::R1a => Regime::Thm1a,
        RegimeArg::R1b => Regime::Thm1b,
        RegimeArg::R1c => Regime::Thm1c,
        RegimeArg::R2 => Regime::Thm2,
        RegimeArg::R3 => Regime::Thm3,
        RegimeArg::Marginal => Regime::Marginal,
    };
    let rows = converge(&pair, regime, &a.x_grid, Path { a: a.a, z: a.z }, a.tol, Execution::default())?;
    let mut w = writer(None)?;
    w.write_record(["regime", "x", "y", "asymptotic", "exact", "ratio", "correction_total"])?;
    for r in rows {
        let total: f64 = r.corrections.iter().map(|c| c.magnitude.abs()).sum();
        w.write_record([
            regime.name().to_string(),
            num(r.x),
            if r.y.is_nan() { String::new() } else { num(r.y) },
            num(r.asymptotic),
            num(r.exact),
            num(r.ratio),
            num(total),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    let pair = a.model.pair()?;
    let s = sample_pairs(&pair, a.n, a.seed, Execution::default())?;
    let mut w = writer(a.out.as_deref())?;
    w.write_record(["x", "y"])?;
    for &(x, y) in &s.pairs {
        w.write_record([num(x), num(y)])?;
    }
    w.flush()?;
    Ok(())
}

fn read_pairs(path: &FsPath) -> Result<SampleSet> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = r.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
        bail!("{}: expected header x,y, found {:?}", path.display(), headers.iter().collect::<Vec<_>>());
    }
    let mut pairs = Vec::new();
    for (i, rec) in r.deserialize::<(f64, f64)>().enumerate() {
        pairs.push(rec.with_context(|| format!("{}: row {}", path.display(), i + 1))?);
    }
    Ok(SampleSet::from_pairs(pairs, path.display().to_string())?)
}

fn run_estimate(a: &EstimateArgs) -> Result<()> {
    let s = read_pairs(&a.pairs)?;
    let opts = FitOptions {
        k_top: a.k_top,
        channel: a.zeta.map_or(Channel::X, Channel::Z),
        form: match a.form {
            FormArg::Plain => TailForm::Plain,
            FormArg::Berman => TailForm::Berman,
        },
    };
    let fit = estimators::fit_scaling(&s, &opts)?;
    let variant = Variant::try_from(a.variant)?;
    let mut w = writer(None)?;
    let head = ["rho_hat", "c_hat", "delta_hat", "k_top", "n", "residual", "threshold", "x"];
    let fitted = [
        num(fit.rho_hat),
        num(fit.c_hat),
        num(fit.delta_hat),
        fit.k_top.to_string(),
        fit.n.to_string(),
        num(fit.residual),
        num(fit.threshold),
        num(a.x),
    ];
    if let Some(y) = a.y {
        let e = estimators::psi_hat(&s, variant, a.x, y, &fit)?;
        if e.below_fit_region {
            eprintln!("warning: x lies below the smallest order statistic used in the fit");
        }
        let mut header = head.to_vec();
        header.extend(["y", "psi_hat", "g_star", "slope", "clamped", "fallback", "below_fit_region"]);
        let mut row = fitted.to_vec();
        row.extend([
            num(y),
            num(e.value),
            num(e.g_star),
            num(e.slope),
            e.clamped.to_string(),
            e.fallback.to_string(),
            e.below_fit_region.to_string(),
        ]);
        w.write_record(&header)?;
        w.write_record(&row)?;
    } else {
        let q = a.q.expect("clap requires --y or --q");
        let y = estimators::quantile_hat(&s, variant, q, a.x, &fit)?;
        let mut header = head.to_vec();
        header.extend(["q", "y_hat"]);
        let mut row = fitted.to_vec();
        row.extend([num(q), num(y)]);
        w.write_record(&header)?;
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_VAR} must be a positive integer, got '{v}'"))?;
    exec::configure_threads(n);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Exact(a) => run_exact(a),
        Command::Asymptotic(a) => run_asymptotic(a),
        Command::Converge(a) => run_converge(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Estimate(a) => run_estimate(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("elliptail: {e:#}");
            ExitCode::FAILURE
        }
    }
}
