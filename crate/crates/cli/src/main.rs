//! `mrplab`: simulate mixed renewal processes and check their properties from the shell.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mrplab::config::Preset;
use mrplab::properties::{default_t_grid, IdentityReport, MppReport, RegularityReport};
use mrplab::{
    check_consistency, integral_identities_check, markov_test, mpp_check, multinomial_test,
    parse_model, regularity_check, reparameterize, sample_ensemble, theorem_verdict,
    ConsistencyReport, MrpError, MrpModel, PathEnsemble, PathEvent, TestReport, TesterConfig,
    VerdictConfig, VerdictReport,
};

const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;
const EXIT_ANOMALY: u8 = 5;

#[derive(Parser)]
#[command(
    name = "mrplab",
    version,
    about = "Mixed renewal process simulation and property checks"
)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an ensemble of paths.
    Simulate(SimArgs),
    /// Run a statistical tester.
    Test {
        #[arg(value_enum)]
        which: TestKind,
        #[command(flatten)]
        run: RunArgs,
        /// Partition times, comma separated.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        /// Read the ensemble from a file written by `simulate` instead of simulating.
        #[arg(long)]
        ensemble: Option<PathBuf>,
    },
    /// Run an analytic or Monte Carlo check.
    Check {
        #[arg(value_enum)]
        which: CheckKind,
        #[command(flatten)]
        run: RunArgs,
        /// Event time for the consistency check (event `N_t = n`).
        #[arg(long, default_value_t = 1.0)]
        event_t: f64,
        /// Event count for the consistency check.
        #[arg(long, default_value_t = 1)]
        event_n: usize,
        /// Set B for the consistency check as `low,high` on the reparameterized scale
        /// (default: its interquartile range).
        #[arg(long, value_parser = parse_interval)]
        set_b: Option<(f64, f64)>,
    },
    /// Check the regularity conditions and whether the three properties agree.
    Verdict(RunArgs),
    /// Run the verdict on a built-in example.
    Example {
        #[arg(value_enum)]
        preset: PresetArg,
        /// Slope `a` of the affine map in example `a`.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Intercept `b` of the affine map in example `a`.
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        #[command(flatten)]
        sim: SimSettings,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, default_value_t = 0.01, value_parser = parse_alpha)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-9, value_parser = parse_positive)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TestKind {
    Multinomial,
    Markov,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Mpp,
    Regularity,
    Identities,
    Consistency,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    A,
    B,
    C,
    Deterministic,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::A => Preset::A,
            PresetArg::B => Preset::B,
            PresetArg::C => Preset::C,
            PresetArg::Deterministic => Preset::Deterministic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct ModelArgs {
    /// Model configuration file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Built-in example model.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
}

#[derive(Args)]
struct SimSettings {
    #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(1..))]
    paths: u64,
    #[arg(long, default_value_t = 4.0, value_parser = parse_positive)]
    horizon: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sim: SimSettings,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sim: SimSettings,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long, default_value_t = 0.01, value_parser = parse_alpha)]
    alpha: f64,
    /// Tolerance: distance to exponential for `mpp`, quadrature tolerance for `identities`.
    #[arg(long, default_value_t = 1e-9, value_parser = parse_positive)]
    tol: f64,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0,1), got {a}"))
    }
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `low,high`, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(format!("need low < high, got {lo},{hi}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {v}"))
    }
}

enum Failure {
    Error(MrpError),
    Io(String),
}

impl From<MrpError> for Failure {
    fn from(e: MrpError) -> Self {
        Failure::Error(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Error(MrpError::Numeric(_)) => EXIT_NUMERIC,
            Failure::Error(_) | Failure::Io(_) => EXIT_DATA,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Error(e) => e.to_string(),
            Failure::Io(m) => m.clone(),
        }
    }
}

/// A rendered report and whether it carries an anomaly.
struct Output {
    body: String,
    anomaly: bool,
}

fn load_model(args: &ModelArgs) -> Result<MrpModel, Failure> {
    match (&args.model, args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
            Ok(parse_model(&text)?)
        }
        (None, Some(p)) => Ok(Preset::from(p).model()),
        (None, None) => Cli::command()
            .error(
                ErrorKind::MissingRequiredArgument,
                "one of --model or --preset is required",
            )
            .exit(),
    }
}

fn envelope(command: &str, model: &MrpModel, config: Value, report: Value) -> String {
    let doc = json!({
        "command": command,
        "model": model.describe(),
        "config": config,
        "report": report,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("reports serialize");
    s.push('\n');
    s
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// Shortest round-trip form, switching to exponent notation for tiny magnitudes.
fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), num)
}

fn csv_test(r: &TestReport) -> String {
    let mut s = String::from("name,value,se,reference,z\n");
    for e in &r.estimates {
        s.push_str(&format!(
            "\"{}\",{},{},{},{}\n",
            e.name,
            num(e.value),
            opt(e.se),
            opt(e.reference),
            opt(e.z)
        ));
    }
    s.push_str(&format!("\"p_value\",{},,,\n", num(r.p_value)));
    s
}

fn csv_mpp(r: &MppReport) -> String {
    let mut s = String::from("quantile,theta,lambda,hazard,distance\n");
    for rec in &r.records {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            num(rec.quantile),
            num(rec.theta),
            num(rec.lambda),
            num(rec.hazard),
            num(rec.distance)
        ));
    }
    s
}

fn csv_regularity(r: &RegularityReport) -> String {
    let mut s = String::from("theta,lambda,density_positive,density_bound,bounded,max_relative_slope,smooth,hazard,passes\n");
    for rec in &r.records {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            num(rec.theta),
            opt(rec.lambda),
            rec.density_positive,
            opt(rec.density_bound),
            rec.bounded,
            opt(rec.max_relative_slope),
            rec.smooth,
            opt(rec.hazard),
            rec.passes
        ));
    }
    s
}

fn csv_identities(r: &IdentityReport) -> String {
    let mut s = String::from("t,v,d_joint,d_single,e,f,g\n");
    for rec in &r.records {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            num(rec.t),
            num(rec.v),
            num(rec.d_joint),
            num(rec.d_single),
            num(rec.e),
            num(rec.f),
            num(rec.g)
        ));
    }
    s
}

fn csv_consistency(r: &ConsistencyReport) -> String {
    format!(
        "disintegrated,disintegrated_se,joint,joint_se,difference,z,mass_b,n,seed\n{},{},{},{},{},{},{},{},{}\n",
        num(r.disintegrated),
        num(r.disintegrated_se),
        num(r.joint),
        num(r.joint_se),
        num(r.difference),
        num(r.z),
        num(r.mass_b),
        r.n,
        r.seed
    )
}

fn csv_verdict(r: &VerdictReport) -> String {
    format!(
        "key,value\nsummary,\"{}\"\nlicensed,{}\nmpp,{}\nmultinomial,{}\nmarkov,{}\nmultinomial_p,{}\nmarkov_p,{}\nanomalies,{}\n",
        r.summary,
        r.licensed,
        r.mpp_holds,
        r.multinomial_holds,
        r.markov_holds,
        num(r.multinomial.p_value),
        num(r.markov.p_value),
        r.anomalies.len()
    )
}

fn csv_ensemble(e: &PathEnsemble) -> String {
    let mut s = String::from("path,theta,arrival\n");
    for (i, p) in e.paths().iter().enumerate() {
        let theta = p.theta().first().copied().unwrap_or(f64::NAN);
        for a in p.arrivals() {
            s.push_str(&format!("{i},{theta},{a}\n"));
        }
    }
    s
}

fn sim_config(sim: &SimSettings) -> Value {
    json!({ "paths": sim.paths, "horizon": sim.horizon, "seed": sim.seed })
}

fn cmd_simulate(args: &SimArgs) -> Result<Output, Failure> {
    let model = load_model(&args.model)?;
    let e = sample_ensemble(
        &model,
        args.sim.paths as usize,
        args.sim.horizon,
        args.sim.seed,
    )?;
    let body = match args.out.format {
        Format::Json => e.to_text(),
        Format::Csv => csv_ensemble(&e),
    };
    Ok(Output {
        body,
        anomaly: false,
    })
}

fn cmd_test(
    which: TestKind,
    run: &RunArgs,
    times: Option<Vec<f64>>,
    ensemble: Option<&PathBuf>,
) -> Result<Output, Failure> {
    let (model, e) = match ensemble {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
            let e = PathEnsemble::from_text(&text)?;
            (e.model().clone(), e)
        }
        None => {
            let model = load_model(&run.model)?;
            let e = sample_ensemble(
                &model,
                run.sim.paths as usize,
                run.sim.horizon,
                run.sim.seed,
            )?;
            (model, e)
        }
    };
    let tester = TesterConfig::default();
    let (name, times, report) = match which {
        TestKind::Multinomial => {
            let times = times.unwrap_or_else(|| vec![1.0, 2.0]);
            let r = multinomial_test(&e, &times, run.alpha, &tester)?;
            ("test multinomial", times, r)
        }
        TestKind::Markov => {
            let times = times.unwrap_or_else(|| vec![1.0, 2.0, 3.0]);
            let r = markov_test(&e, &times, run.alpha, &tester)?;
            ("test markov", times, r)
        }
    };
    let body = match run.out.format {
        Format::Json => {
            let config = json!({
                "paths": e.len(), "horizon": e.horizon(), "seed": e.seed(),
                "alpha": run.alpha, "times": times, "tester": to_value(&tester),
            });
            envelope(name, &model, config, to_value(&report))
        }
        Format::Csv => csv_test(&report),
    };
    Ok(Output {
        body,
        anomaly: !report.anomalies.is_empty(),
    })
}

fn default_identity_grid() -> Vec<(f64, f64)> {
    let pts = [0.5, 1.0, 1.5, 2.0];
    pts.iter()
        .flat_map(|&t| pts.iter().map(move |&v| (t, v)))
        .collect()
}

fn cmd_check(
    which: CheckKind,
    run: &RunArgs,
    event_t: f64,
    event_n: usize,
    set_b: Option<(f64, f64)>,
) -> Result<Output, Failure> {
    let model = load_model(&run.model)?;
    let t_grid = default_t_grid(run.sim.horizon, 400);
    let mut config = sim_config(&run.sim);
    let (name, report, csv) = match which {
        CheckKind::Mpp => {
            config["tol"] = json!(run.tol);
            let r = mpp_check(&model, &t_grid, run.tol)?;
            ("check mpp", to_value(&r), csv_mpp(&r))
        }
        CheckKind::Regularity => {
            let r = regularity_check(&model, &model.mixing().quantile_grid(99), &t_grid)?;
            ("check regularity", to_value(&r), csv_regularity(&r))
        }
        CheckKind::Identities => {
            config["tol"] = json!(run.tol);
            let r = integral_identities_check(&model, &default_identity_grid(), run.tol)?;
            ("check identities", to_value(&r), csv_identities(&r))
        }
        CheckKind::Consistency => {
            let (low, high) = match set_b {
                Some(b) => b,
                None => {
                    let law = reparameterize(&model)?.mixing().clone();
                    (law.quantile(0.25), law.quantile(0.75))
                }
            };
            let event = PathEvent::count_eq(event_t, event_n)?;
            config["event"] = to_value(&event);
            config["set_b"] = json!([low, high]);
            let r = check_consistency(
                &model,
                &event,
                (low, high),
                run.sim.paths as usize,
                run.sim.seed,
            )?;
            ("check consistency", to_value(&r), csv_consistency(&r))
        }
    };
    let body = match run.out.format {
        Format::Json => envelope(name, &model, config, report),
        Format::Csv => csv,
    };
    Ok(Output {
        body,
        anomaly: false,
    })
}

fn run_verdict(
    name: &str,
    model: &MrpModel,
    sim: &SimSettings,
    alpha: f64,
    tol: f64,
    format: Format,
) -> Result<Output, Failure> {
    let config = VerdictConfig {
        n_paths: sim.paths as usize,
        horizon: sim.horizon,
        seed: sim.seed,
        alpha,
        mpp_tol: tol,
        ..VerdictConfig::default()
    };
    let r = theorem_verdict(model, &config)?;
    let body = match format {
        Format::Json => envelope(name, model, to_value(&config), to_value(&r)),
        Format::Csv => csv_verdict(&r),
    };
    Ok(Output {
        body,
        anomaly: r.has_anomaly(),
    })
}

fn run(cli: Cli) -> Result<(Output, Option<PathBuf>), Failure> {
    match cli.command {
        Command::Simulate(args) => Ok((cmd_simulate(&args)?, args.out.out)),
        Command::Test {
            which,
            run,
            times,
            ensemble,
        } => Ok((
            cmd_test(which, &run, times, ensemble.as_ref())?,
            run.out.out,
        )),
        Command::Check {
            which,
            run,
            event_t,
            event_n,
            set_b,
        } => Ok((
            cmd_check(which, &run, event_t, event_n, set_b)?,
            run.out.out,
        )),
        Command::Verdict(run) => {
            let model = load_model(&run.model)?;
            Ok((
                run_verdict(
                    "verdict",
                    &model,
                    &run.sim,
                    run.alpha,
                    run.tol,
                    run.out.format,
                )?,
                run.out.out,
            ))
        }
        Command::Example {
            preset,
            a,
            b,
            sim,
            out,
            alpha,
            tol,
        } => {
            let preset = Preset::from(preset);
            if preset == Preset::A {
                mrplab::ParameterMap::affine(a, b)?;
            }
            let model = preset.model_with_affine(a, b);
            let name = format!("example {preset}");
            Ok((
                run_verdict(&name, &model, &sim, alpha, tol, out.format)?,
                out.out,
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
        {
            eprintln!("error: cannot start {w} workers: {e}");
            return ExitCode::from(EXIT_DATA);
        }
    }
    match run(cli) {
        Ok((output, path)) => {
            match path {
                Some(p) => {
                    if let Err(e) = fs::write(&p, &output.body) {
                        eprintln!("error: cannot write {}: {e}", p.display());
                        return ExitCode::from(EXIT_DATA);
                    }
                }
                None => print!("{}", output.body),
            }
            if output.anomaly {
                eprintln!("anomaly: the report records a theorem violation");
                ExitCode::from(EXIT_ANOMALY)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
