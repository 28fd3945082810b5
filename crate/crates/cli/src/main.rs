use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use hvadi_core::error::Error;
use hvadi_core::grid::{error_norms, sample, ScalarField};
use hvadi_core::harness::{
    field_csv, space_convergence_study, time_convergence_study, ConvergenceReport, ErrorMode,
    SpaceStudyConfig, TimeStudyConfig,
};
use hvadi_core::problems::{builtin_names, by_name};
use hvadi_core::schemes::{check_supported, ExplicitPolicy, SchemeKind};
use hvadi_core::splitting::{integrate_with, IntegrateOptions, SplittingConfig};

mod config;

/// ADI solvers for 2D convection-diffusion with mixed derivatives.
#[derive(Debug, Parser)]
#[command(name = "hvadi", version)]
struct Cli {
    /// Read the command and its options from a `key = value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one problem with one scheme and dump the final field.
    Solve(SolveArgs),
    /// Fixed grid, refined time step.
    StudyTime(StudyTimeArgs),
    /// Fixed parabolic mesh ratio, refined grid.
    StudySpace(StudySpaceArgs),
    /// Print the built-in problems.
    ListProblems,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    problem: String,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    tf: f64,
    /// Explicit F1/F2 evaluation for HOC.
    #[arg(long, default_value = "five-point")]
    hoc_explicit: ExplicitPolicy,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    scheme: SchemeKind,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Also report the error against the exact solution.
    #[arg(long)]
    exact_error: bool,
    /// Write the six stage values of the final step here.
    #[arg(long)]
    trace_stages: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StudyOutputs {
    /// Comma-separated; defaults to every scheme the problem supports.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<SchemeKind>,
    /// Fitted rates; defaults to `<out stem>.rates.csv`.
    #[arg(long)]
    rates_out: Option<PathBuf>,
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Measure against the exact solution instead of a reference run.
    #[arg(long)]
    exact_error: bool,
}

#[derive(Debug, Args)]
struct StudyTimeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    outputs: StudyOutputs,
    #[arg(long)]
    h: f64,
    /// Comma-separated time steps; defaults to tf/k for k = 30, 40, ..., 90.
    #[arg(long, value_delimiter = ',')]
    dts: Vec<f64>,
    /// Defaults to tf/100.
    #[arg(long)]
    dt_ref: Option<f64>,
}

#[derive(Debug, Args)]
struct StudySpaceArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    outputs: StudyOutputs,
    #[arg(long)]
    mu: f64,
    /// Comma-separated mesh widths; defaults to 0.1, 0.05, 0.025, 0.0125.
    #[arg(long, value_delimiter = ',')]
    hs: Vec<f64>,
    /// Defaults to 0.00625.
    #[arg(long)]
    h_ref: Option<f64>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let numerical = error
            .chain()
            .any(|e| e.downcast_ref::<Error>().is_some_and(Error::is_numerical));
        Failure {
            code: if numerical { 2 } else { 1 },
            error,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().collect();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn parse(args: &[String]) -> Result<Option<Cli>, Failure> {
    match Cli::try_parse_from(args) {
        Ok(cli) => Ok(Some(cli)),
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            Ok(None)
        }
        Err(e) => Err(Failure {
            code: 1,
            error: {
                let text = e.render().to_string();
                anyhow!(text
                    .strip_prefix("error: ")
                    .unwrap_or(&text)
                    .trim_end()
                    .to_string())
            },
        }),
    }
}

fn run(args: &[String]) -> Result<(), Failure> {
    let Some(cli) = parse(args)? else {
        return Ok(());
    };
    let command = match (cli.config, cli.command) {
        (Some(_), Some(_)) => {
            return Err(anyhow!("--config cannot be combined with a subcommand").into())
        }
        (None, None) => return Err(anyhow!("no subcommand given (try --help)").into()),
        (None, Some(c)) => c,
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            let mut argv = vec![args[0].clone()];
            argv.extend(config::to_args(&text)?);
            match parse(&argv)? {
                Some(Cli {
                    command: Some(c), ..
                }) => c,
                _ => return Ok(()),
            }
        }
    };
    match command {
        Command::Solve(a) => solve(a),
        Command::StudyTime(a) => study_time(a),
        Command::StudySpace(a) => study_space(a),
        Command::ListProblems => {
            for name in builtin_names() {
                let p = by_name(name).map_err(anyhow::Error::from)?;
                println!("{name}\t{}", p.bc);
            }
            Ok(())
        }
    }
}

fn check_common(c: &Common) -> anyhow::Result<()> {
    by_name(&c.problem)?;
    if !(c.tf.is_finite() && c.tf > 0.0) {
        bail!("--tf must be positive, got {}", c.tf);
    }
    if !(c.theta.is_finite() && c.theta > 0.0) {
        bail!("--theta must be positive, got {}", c.theta);
    }
    if !c.sigma.is_finite() {
        bail!("--sigma must be finite");
    }
    Ok(())
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let c = &a.common;
    check_common(c)?;
    let problem = by_name(&c.problem).map_err(anyhow::Error::from)?;
    check_supported(a.scheme, problem.bc, c.hoc_explicit).map_err(anyhow::Error::from)?;
    if !(a.h.is_finite() && a.h > 0.0) {
        return Err(anyhow!("--h must be positive, got {}", a.h).into());
    }
    let grid = problem
        .grid_with_spacing(a.h)
        .map_err(anyhow::Error::from)?;
    let dt = match (a.dt, a.mu) {
        (Some(_), Some(_)) => return Err(anyhow!("give either --dt or --mu, not both").into()),
        (None, None) => return Err(anyhow!("one of --dt or --mu is required").into()),
        (Some(dt), None) => dt,
        (None, Some(mu)) => {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(anyhow!("--mu must be positive, got {mu}").into());
            }
            mu * a.h * a.h
        }
    };
    let cfg = SplittingConfig {
        theta: c.theta,
        sigma: c.sigma,
        dt,
        t0: 0.0,
        tf: c.tf,
    };
    cfg.steps().map_err(anyhow::Error::from)?;
    if a.exact_error && problem.exact.is_none() {
        return Err(anyhow!("problem {} has no exact solution", problem.name).into());
    }

    let opts = IntegrateOptions {
        policy: c.hoc_explicit,
        trace_last_step: a.trace_stages.is_some(),
    };
    let r = integrate_with(&problem, a.scheme, &cfg, &grid, opts).map_err(anyhow::Error::from)?;
    let meta = [
        ("problem", problem.name.clone()),
        ("scheme", a.scheme.to_string()),
        ("bc", grid.bc().to_string()),
        ("theta", c.theta.to_string()),
        ("sigma", c.sigma.to_string()),
        ("h", a.h.to_string()),
        ("dt", r.dt.to_string()),
        ("steps", r.steps.to_string()),
        ("tf", c.tf.to_string()),
        ("n_x", grid.n_x().to_string()),
        ("n_y", grid.n_y().to_string()),
    ];
    let field = field_csv(&r.solution, &meta);
    let trace = r
        .trace
        .as_ref()
        .map(|t| stages_csv(&[&t.y0, &t.y1, &t.y2, &t.yt0, &t.yt1, &t.yt2], &meta));
    let exact = if a.exact_error {
        let e = problem.exact.clone().expect("checked above");
        let u = sample(&grid, |x, y| e(x, y, c.tf)).map_err(anyhow::Error::from)?;
        Some(error_norms(&r.solution, &u).map_err(anyhow::Error::from)?)
    } else {
        None
    };

    write(&c.out, &field)?;
    if let (Some(path), Some(t)) = (&a.trace_stages, trace) {
        write(path, &t)?;
    }
    println!(
        "{} {} h={} dt={} steps={} max|u|={:e}",
        problem.name,
        a.scheme,
        a.h,
        r.dt,
        r.steps,
        r.solution.max_abs()
    );
    if let Some(n) = exact {
        println!("exact error: l2={:e} linf={:e}", n.l2, n.linf);
    }
    Ok(())
}

fn stages_csv(stages: &[&ScalarField; 6], meta: &[(&str, String)]) -> String {
    use std::fmt::Write as _;
    let g = stages[0].grid();
    let mut s = String::new();
    for (k, v) in meta {
        let _ = writeln!(s, "# {k}={v}");
    }
    s.push_str("x,y,y0,y1,y2,yt0,yt1,yt2\n");
    for j in 0..g.n_y() {
        for i in 0..g.n_x() {
            let _ = write!(s, "{},{}", g.x(i), g.y(j));
            for f in stages {
                let _ = write!(s, ",{}", f.get(i, j));
            }
            s.push('\n');
        }
    }
    s
}

fn schemes_or_default(
    given: &[SchemeKind],
    problem: &str,
    policy: ExplicitPolicy,
) -> anyhow::Result<Vec<SchemeKind>> {
    if !given.is_empty() {
        return Ok(given.to_vec());
    }
    let bc = by_name(problem)?.bc;
    Ok(SchemeKind::ALL
        .into_iter()
        .filter(|&k| check_supported(k, bc, policy).is_ok())
        .collect())
}

fn rates_path(out: &Path, given: &Option<PathBuf>) -> PathBuf {
    given.clone().unwrap_or_else(|| {
        let stem = out
            .file_stem()
            .map_or("report".into(), |s| s.to_string_lossy().into_owned());
        out.with_file_name(format!("{stem}.rates.csv"))
    })
}

fn emit(report: &ConvergenceReport, out: &Path, o: &StudyOutputs) -> anyhow::Result<()> {
    let rates = rates_path(out, &o.rates_out);
    write(out, &report.report_csv())?;
    write(&rates, &report.rates_csv())?;
    if let Some(p) = &o.plot_data {
        write(p, &report.plot_data())?;
    }
    for r in &report.rates {
        println!(
            "{} rate in {}: l2 {:.4} linf {:.4}",
            r.scheme,
            report.parameter.name(),
            r.l2.slope,
            r.linf.slope
        );
    }
    Ok(())
}

fn error_mode(exact: bool) -> ErrorMode {
    if exact {
        ErrorMode::Exact
    } else {
        ErrorMode::Reference
    }
}

fn study_time(a: StudyTimeArgs) -> Result<(), Failure> {
    let c = &a.common;
    check_common(c)?;
    let schemes = schemes_or_default(&a.outputs.scheme, &c.problem, c.hoc_explicit)?;
    let mut cfg = TimeStudyConfig::with_defaults(&c.problem, &schemes, a.h);
    cfg.theta = c.theta;
    cfg.sigma = c.sigma;
    cfg.policy = c.hoc_explicit;
    cfg.error_mode = error_mode(a.outputs.exact_error);
    cfg.tf = c.tf;
    cfg.dts = if a.dts.is_empty() {
        hvadi_core::harness::DEFAULT_DT_DIVISORS
            .iter()
            .map(|&k| c.tf / k as f64)
            .collect()
    } else {
        a.dts.clone()
    };
    cfg.dt_ref = a
        .dt_ref
        .unwrap_or(c.tf / hvadi_core::harness::DEFAULT_DT_REF_DIVISOR as f64);
    cfg.validate().map_err(anyhow::Error::from)?;
    let report = time_convergence_study(&cfg).map_err(anyhow::Error::from)?;
    emit(&report, &c.out, &a.outputs)?;
    Ok(())
}

fn study_space(a: StudySpaceArgs) -> Result<(), Failure> {
    let c = &a.common;
    check_common(c)?;
    let schemes = schemes_or_default(&a.outputs.scheme, &c.problem, c.hoc_explicit)?;
    let mut cfg = SpaceStudyConfig::with_defaults(&c.problem, &schemes, a.mu);
    cfg.theta = c.theta;
    cfg.sigma = c.sigma;
    cfg.policy = c.hoc_explicit;
    cfg.error_mode = error_mode(a.outputs.exact_error);
    cfg.tf = c.tf;
    if !a.hs.is_empty() {
        cfg.hs = a.hs.clone();
    }
    if let Some(h) = a.h_ref {
        cfg.h_ref = h;
    }
    cfg.validate().map_err(anyhow::Error::from)?;
    let report = space_convergence_study(&cfg).map_err(anyhow::Error::from)?;
    emit(&report, &c.out, &a.outputs)?;
    Ok(())
}
