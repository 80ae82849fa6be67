//! `waverate` command-line front end.
//!
//! Exit status: 0 on success, 1 for a bad configuration, 2 for a
//! computational error, 3 when `suite` criteria fail.

// Negated comparisons double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use waverate::convergence::{Target, TestFunction, TestFunctionId};
use waverate::export::{json_text, write_atomic, Cell, CsvTable};
use waverate::families::{make_family_at, FamilySpec, MraFamily};
use waverate::kernel::{
    fit_decay, naive_bound, period_kernel, profile_radius, radial_profile,
    verify_convolution_bound, DecayModel,
};
use waverate::sobolev::{
    critical_order_with, family_spectra, sweep, sweep_csv, CriterionKind, CriterionTable,
};
use waverate::spline::{best_l2_spline, spline_convergence_study, SplineSpace};
use waverate::suite::{run_suite, Group, SuiteConfig, DEFAULT_SEED};
use waverate::{analyze, lp_error_trace, sup_error_rates, Norm, DEFAULT_LEVEL};

use args::{parse_j_range, parse_sweep, parse_window, JRange, Sweep};

/// Environment variable overriding the default sampling level.
const LEVEL_VAR: &str = "WAVERATE_GRID_LEVEL";

#[derive(Parser, Debug)]
#[command(
    name = "waverate",
    version,
    about = "Wavelet expansion convergence experiments"
)]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Seed for randomised checks.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Output {
    /// Output file (a directory for `suite`).
    #[arg(short, long)]
    output: Option<PathBuf>,

    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate a family's scaling function and wavelet.
    Family {
        #[arg(long)]
        family: FamilySpec,
        #[command(flatten)]
        out: Output,
    },
    /// Expansion coefficients of a test function.
    Expand {
        #[arg(long)]
        family: FamilySpec,
        #[arg(long)]
        function: TestFunctionId,
        #[arg(long, default_value_t = 0)]
        j0: i32,
        #[arg(long, default_value_t = 4)]
        j1: i32,
        /// Analysis window `a,b` (default: the function's window).
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<(f64, f64)>,
        #[command(flatten)]
        out: Output,
    },
    /// Radial profiles of the projection kernel.
    Kernel {
        #[arg(long)]
        family: FamilySpec,
        /// Levels `a..b`, inclusive.
        #[arg(long, value_parser = parse_j_range, default_value = "0..6")]
        j: JRange,
        /// Check the convolution bound: collapse of the rescaled profiles and
        /// integrability of their envelope.
        #[arg(long)]
        check_bound: bool,
        /// Also profile the absolute-value wavelet sum taken from `j - depth`.
        #[arg(long)]
        naive_depth: Option<i32>,
        /// Decay model fitted to the envelope: `exponential` or `algebraic:N`.
        #[arg(long)]
        fit: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Sup-norm (or `L^p`) error rates of `P_j f`.
    Rate {
        #[arg(long)]
        family: FamilySpec,
        #[arg(long)]
        function: TestFunctionId,
        #[arg(long, value_parser = parse_j_range, default_value = "3..9")]
        j: JRange,
        /// Error window `a,b` (default: the middle half of the function's window).
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<(f64, f64)>,
        /// Report the discrete `L^p` error trace instead (`1`, `2` or `inf`).
        #[arg(long)]
        norm: Option<Norm>,
        #[command(flatten)]
        out: Output,
    },
    /// Sobolev-type criteria and the critical order.
    Sobolev {
        #[arg(long)]
        family: FamilySpec,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = Criterion::Wavelet)]
        criterion: Criterion,
        /// Evaluate the criterion over `a..b:step` instead of bisecting.
        #[arg(long, value_parser = parse_sweep)]
        sweep_s: Option<Sweep>,
        #[command(flatten)]
        out: Output,
    },
    /// Best L² spline approximation over halving meshes.
    Spline {
        #[arg(long)]
        function: TestFunctionId,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Mesh levels `a..b`: meshes `2^-a, ..., 2^-b`.
        #[arg(long, value_parser = parse_j_range, default_value = "2..7")]
        mesh_levels: JRange,
        /// Also write the coefficients at the finest mesh to this CSV file.
        #[arg(long)]
        coefficients: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Run the acceptance battery.
    Suite {
        /// Criterion groups to run, comma separated.
        #[arg(long, value_delimiter = ',')]
        only: Vec<Group>,
        /// Report directory.
        #[arg(short, long, default_value = "waverate-suite")]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Criterion {
    Wavelet,
    Scaling,
}

/// How a run ended when it did not succeed.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(String),
    CriteriaFailed(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Compute(_) => 2,
            Failure::CriteriaFailed(_) => 3,
        }
    }
}

impl From<waverate::Error> for Failure {
    fn from(e: waverate::Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Compute(e.to_string())
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            eprintln!("{first}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            match &f {
                Failure::CriteriaFailed(summary) => println!("{summary}"),
                Failure::Usage(m) | Failure::Compute(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn grid_level() -> Result<i32, Failure> {
    match std::env::var(LEVEL_VAR) {
        Ok(v) => {
            let level: i32 = v
                .trim()
                .parse()
                .map_err(|_| usage(format!("{LEVEL_VAR}=`{v}` is not an integer")))?;
            if !(3..=16).contains(&level) {
                return Err(usage(format!("{LEVEL_VAR}={level} outside 3..=16")));
            }
            Ok(level)
        }
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_LEVEL),
        Err(e) => Err(usage(format!("{LEVEL_VAR}: {e}"))),
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Compute(e.to_string()))?;
    }
    let level = grid_level()?;
    match cli.command {
        Command::Family { family, out } => cmd_family(family, level, out),
        Command::Expand {
            family,
            function,
            j0,
            j1,
            window,
            out,
        } => cmd_expand(family, function, j0, j1, window, level, out),
        Command::Kernel {
            family,
            j,
            check_bound,
            naive_depth,
            fit,
            out,
        } => cmd_kernel(family, j, check_bound, naive_depth, fit, level, out),
        Command::Rate {
            family,
            function,
            j,
            window,
            norm,
            out,
        } => cmd_rate(family, function, j, window, norm, level, out),
        Command::Sobolev {
            family,
            epsilon,
            criterion,
            sweep_s,
            out,
        } => cmd_sobolev(family, epsilon, criterion, sweep_s, level, out),
        Command::Spline {
            function,
            order,
            mesh_levels,
            coefficients,
            out,
        } => cmd_spline(function, order, mesh_levels, coefficients, out),
        Command::Suite { only, output } => cmd_suite(only, output, level, cli.seed),
    }
}

/// Output path and format, defaulting to `waverate-<command>.<ext>`.
fn destination(out: &Output, command: &str, default: Format) -> (PathBuf, Format) {
    let format = out.format.unwrap_or(default);
    let path = out
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("waverate-{command}.{}", format.ext())));
    (path, format)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    write_atomic(path, text.as_bytes())
        .map_err(|e| Failure::Compute(format!("writing {}: {e}", path.display())))
}

fn check_function_window(tf: &TestFunction, w: (f64, f64)) -> Result<(), Failure> {
    if !(w.0 < w.1) || w.0 < tf.window.0 || w.1 > tf.window.1 {
        return Err(usage(format!(
            "window [{}, {}] must be a nonempty part of the {} window [{}, {}]",
            w.0,
            w.1,
            tf.name(),
            tf.window.0,
            tf.window.1
        )));
    }
    Ok(())
}

fn family(spec: FamilySpec, level: i32) -> Result<MraFamily<f64>, Failure> {
    Ok(make_family_at(spec, level)?)
}

fn cmd_family(spec: FamilySpec, level: i32, out: Output) -> Result<String, Failure> {
    let (path, format) = destination(&out, "family", Format::Json);
    let fam = family(spec, level)?;
    let text = match format {
        Format::Json => {
            let mut s = fam.to_json()?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut t = CsvTable::new(["function", "x", "value"]);
            for (name, f) in [("phi", fam.phi()), ("psi", fam.psi())] {
                for (x, v) in f.grid().points().zip(f.values()) {
                    t.push(vec![name.into(), Cell::float(x), Cell::float(*v)]);
                }
            }
            t.render()
        }
    };
    write(&path, &text)?;
    Ok(format!(
        "family {spec}: level {level}, orthonormality defect {:.3e}",
        fam.invariants().orthonormality_defect
    ))
}

fn cmd_expand(
    spec: FamilySpec,
    id: TestFunctionId,
    j0: i32,
    j1: i32,
    window: Option<(f64, f64)>,
    level: i32,
    out: Output,
) -> Result<String, Failure> {
    if !(0..=20).contains(&j0) || !(0..=20).contains(&j1) || j1 <= j0 {
        return Err(usage(format!(
            "need 0 <= j0 < j1 <= 20, got j0 = {j0}, j1 = {j1}"
        )));
    }
    let tf = TestFunction::new(id);
    let window = window.unwrap_or(tf.window);
    check_function_window(&tf, window)?;
    let (path, format) = destination(&out, "expand", Format::Json);
    let fam = family(spec, level)?;
    let target = Target::new(tf, fam.level())?;
    let coeffs = analyze(&target.sampled, &fam, j0, j1, window)?;
    let text = match format {
        Format::Json => {
            let mut s = coeffs.to_json()?;
            s.push('\n');
            s
        }
        Format::Csv => coeffs.to_csv().render(),
    };
    write(&path, &text)?;
    Ok(format!(
        "expand {spec} {id}: {} coefficients, energy {:.6e}",
        coeffs.len(),
        coeffs.energy()
    ))
}

fn parse_model(s: &str) -> Result<DecayModel<f64>, Failure> {
    match s.split_once(':') {
        None if s == "exponential" => Ok(DecayModel::Exponential),
        Some(("algebraic", n)) => {
            let order: f64 = n
                .parse()
                .map_err(|_| usage(format!("algebraic order `{n}` is not a number")))?;
            if !(order > 0.0) {
                return Err(usage("algebraic order must be positive"));
            }
            Ok(DecayModel::Algebraic { order })
        }
        _ => Err(usage(format!(
            "--fit must be `exponential` or `algebraic:N`, got `{s}`"
        ))),
    }
}

fn cmd_kernel(
    spec: FamilySpec,
    j: JRange,
    check_bound: bool,
    naive_depth: Option<i32>,
    fit: Option<String>,
    level: i32,
    out: Output,
) -> Result<String, Failure> {
    let model = fit.as_deref().map(parse_model).transpose()?;
    let levels: Vec<i32> = (j.0..=j.1).collect();
    if levels.iter().any(|&l| l > 10) {
        return Err(usage("kernel levels above 10 are not supported"));
    }
    if (check_bound || naive_depth.is_some()) && levels.len() < 3 {
        return Err(usage("the bound check needs at least 3 levels"));
    }
    if let Some(d) = naive_depth {
        if !(1..=12).contains(&d) {
            return Err(usage("--naive-depth must lie in 1..=12"));
        }
    }
    let (path, format) = destination(
        &out,
        "kernel",
        if check_bound {
            Format::Json
        } else {
            Format::Csv
        },
    );
    let fam = family(spec, level)?;
    let report = if check_bound || naive_depth.is_some() {
        Some(match naive_depth {
            Some(d) => naive_bound(&fam, &levels, d)?,
            None => verify_convolution_bound(&fam, &levels)?,
        })
    } else {
        None
    };
    let profiles = match &report {
        Some(_) => Vec::new(),
        None => {
            let radius = profile_radius(&fam);
            levels
                .iter()
                .map(|&l| Ok((l, radial_profile(&period_kernel(&fam, l, radius)?))))
                .collect::<Result<Vec<_>, Failure>>()?
        }
    };
    let envelope = match &report {
        Some(r) => r.envelope.clone(),
        None => profiles[profiles.len() - 1].1.clone(),
    };
    let decay = model.map(|m| fit_decay(&envelope, m, None)).transpose()?;
    let text = match (format, &report) {
        (Format::Json, Some(r)) => json_text(&serde_json::json!({ "report": r, "fit": decay }))?,
        (Format::Json, None) => {
            let list: Vec<_> = profiles
                .iter()
                .map(|(l, p)| serde_json::json!({ "j": l, "profile": p }))
                .collect();
            json_text(
                &serde_json::json!({ "family": spec.to_string(), "profiles": list, "fit": decay }),
            )?
        }
        (Format::Csv, Some(r)) => r.envelope.to_csv().render(),
        (Format::Csv, None) => {
            let mut t = CsvTable::new(["j", "u", "M"]);
            for (l, p) in &profiles {
                for (u, m) in p.radii.iter().zip(&p.majorant) {
                    t.push(vec![(*l).into(), Cell::float(*u), Cell::float(*m)]);
                }
            }
            t.render()
        }
    };
    write(&path, &text)?;
    let mut summary = format!(
        "kernel {spec}: mass {:.6}, tail {:.3e}",
        envelope.l1_mass, envelope.tail_estimate
    );
    if let Some(r) = &report {
        summary.push_str(&format!(
            ", collapse defect {:.3e}, bound {}",
            r.collapse_defect,
            if r.passes { "finite" } else { "not integrable" }
        ));
    }
    if let Some(f) = decay {
        match f.rate {
            Some(a) if f.model_mismatch => {
                summary.push_str(&format!(", decay a = {a:.4} (model mismatch)"))
            }
            Some(a) => summary.push_str(&format!(", decay a = {a:.4} (R^2 {:.5})", f.r_squared)),
            None => summary.push_str(&format!(", algebraic fit R^2 {:.5}", f.r_squared)),
        }
    }
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
fn cmd_rate(
    spec: FamilySpec,
    id: TestFunctionId,
    j: JRange,
    window: Option<(f64, f64)>,
    norm: Option<Norm>,
    level: i32,
    out: Output,
) -> Result<String, Failure> {
    if j.1 > 14 {
        return Err(usage("scales above 14 are not supported"));
    }
    let tf = TestFunction::new(id);
    let window = window.unwrap_or_else(|| {
        let quarter = (tf.window.1 - tf.window.0) / 4.0;
        (tf.window.0 + quarter, tf.window.1 - quarter)
    });
    check_function_window(&tf, window)?;
    if norm.is_none() && j.1 - j.0 < 3 {
        return Err(usage("a rate needs at least 4 scales"));
    }
    let (path, format) = destination(&out, "rate", Format::Json);
    let fam = family(spec, level)?;
    let target = Target::new(tf, fam.level())?;
    if let Some(p) = norm {
        let trace = lp_error_trace(&target, &fam, p, j.0..=j.1, window)?;
        let text = match format {
            Format::Json => json_text(&serde_json::json!({
                "family": spec.to_string(),
                "function": id.to_string(),
                "norm": p,
                "errors": trace,
            }))?,
            Format::Csv => {
                let mut t = CsvTable::new(["j", "error"]);
                for (jj, e) in &trace {
                    t.push(vec![(*jj).into(), Cell::float(*e)]);
                }
                t.render()
            }
        };
        write(&path, &text)?;
        let last = trace.last().map_or(f64::NAN, |t| t.1);
        return Ok(format!(
            "rate {spec} {id}: {p:?} error {last:.3e} at j = {}",
            j.1
        ));
    }
    let report = sup_error_rates(&target, &fam, j.0..=j.1, window)?;
    let text = match format {
        Format::Json => json_text(&report)?,
        Format::Csv => report.to_csv().render(),
    };
    write(&path, &text)?;
    Ok(format!(
        "rate {spec} {id}: slope {:.4} (R^2 {:.5})",
        report.slope, report.r_squared
    ))
}

fn cmd_sobolev(
    spec: FamilySpec,
    epsilon: f64,
    criterion: Criterion,
    sweep_s: Option<Sweep>,
    level: i32,
    out: Output,
) -> Result<String, Failure> {
    if !(epsilon > 0.0 && epsilon <= 2.0 * std::f64::consts::PI) {
        return Err(usage(format!(
            "epsilon must lie in (0, 2 pi], got {epsilon}"
        )));
    }
    let (path, format) = destination(
        &out,
        "sobolev",
        if sweep_s.is_some() {
            Format::Csv
        } else {
            Format::Json
        },
    );
    let fam = family(spec, level)?;
    let (psi, phi) = family_spectra(&fam)?;
    let (spectrum, kind) = match criterion {
        Criterion::Wavelet => (psi, CriterionKind::Wavelet),
        Criterion::Scaling => (phi, CriterionKind::Scaling),
    };
    let table = CriterionTable::new(spectrum.as_ref(), kind, epsilon)?;
    if let Some(sw) = sweep_s {
        let results = sweep(&table, &sw.values())?;
        let text = match format {
            Format::Csv => sweep_csv(&results).render(),
            Format::Json => json_text(&results)?,
        };
        write(&path, &text)?;
        let flip = results.iter().find(|r| r.diverged).map(|r| r.s);
        return Ok(match flip {
            Some(s) => format!(
                "sobolev {spec}: {} values, diverged from s = {s}",
                results.len()
            ),
            None => format!(
                "sobolev {spec}: {} values, finite throughout",
                results.len()
            ),
        });
    }
    let order = critical_order_with(&table, spec.to_string())?;
    let text = match format {
        Format::Json => json_text(&order)?,
        Format::Csv => {
            let mut t = CsvTable::new(["s", "diverged"]);
            for (s, d) in &order.verdicts {
                t.push(vec![Cell::float(*s), (*d).into()]);
            }
            t.render()
        }
    };
    write(&path, &text)?;
    Ok(if order.above_range() {
        format!(
            "sobolev {spec}: s* above {} (epsilon {epsilon})",
            order.s_star
        )
    } else {
        format!(
            "sobolev {spec}: s* = {:.4} (epsilon {epsilon})",
            order.s_star
        )
    })
}

fn cmd_spline(
    id: TestFunctionId,
    order: usize,
    mesh_levels: JRange,
    coefficients: Option<PathBuf>,
    out: Output,
) -> Result<String, Failure> {
    if !(1..=8).contains(&order) {
        return Err(usage(format!(
            "spline order must lie in 1..=8, got {order}"
        )));
    }
    if mesh_levels.1 > 10 {
        return Err(usage("mesh levels above 10 are not supported"));
    }
    if mesh_levels.1 - mesh_levels.0 < 3 {
        return Err(usage("a rate needs at least 4 meshes"));
    }
    let tf = TestFunction::new(id);
    let meshes: Vec<f64> = (mesh_levels.0..=mesh_levels.1)
        .map(|m| 0.5f64.powi(m))
        .collect();
    let (path, format) = destination(&out, "spline", Format::Json);
    let report = spline_convergence_study::<f64>(&tf, order, &meshes)?;
    if let Some(cpath) = &coefficients {
        let f = tf.sample::<f64>(DEFAULT_LEVEL.max(mesh_levels.1 + 4))?;
        let space = SplineSpace::new(order, meshes[meshes.len() - 1], tf.window)?;
        let approx = best_l2_spline(&f, &space)?;
        write(cpath, &approx.to_csv().render())?;
    }
    let text = match format {
        Format::Json => json_text(&report)?,
        Format::Csv => report.to_csv().render(),
    };
    write(&path, &text)?;
    Ok(format!(
        "spline order {order} {id}: slope {:.4} (R^2 {:.5})",
        report.slope, report.r_squared
    ))
}

fn cmd_suite(only: Vec<Group>, output: PathBuf, level: i32, seed: u64) -> Result<String, Failure> {
    let cfg = SuiteConfig {
        level,
        seed,
        groups: only,
    };
    let report = run_suite(&cfg);
    report.write(&output)?;
    let summary = format!("suite: {} ({})", report.headline(), output.display());
    if report.passed() {
        Ok(summary)
    } else {
        Err(Failure::CriteriaFailed(summary))
    }
}
