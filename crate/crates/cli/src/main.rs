use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use otoc_core::circuit::DEFAULT_DT;
use otoc_core::exact::DEFAULT_MAX_GATES;
use otoc_core::experiments::{
    asymptotic_value, epsilon_grid, mean_width, optimize_epsilon, run_boundary_ensemble, run_ensemble,
    svd_principal_vector, Engine, EnsembleSpec, LightconeGrid, DEFAULT_FIT_START, DEFAULT_SEED, SUPPORT_THRESHOLD,
};
use otoc_core::io::{
    grid_to_csv, parse_gate_spec, parse_observable, read_grid, scan_to_csv, snap_gate_time, write_grid, write_text,
    GridFormat, OutputConfig, RunConfig,
};
use otoc_core::validation::{exact_sweep, gaussian_sweep, SweepConfig};
use otoc_core::{Error, Result};
use serde_json::json;

const THREADS_ENV: &str = "OTOC_THREADS";

#[derive(Parser, Debug)]
#[command(name = "otoc", version, about = "Out-of-time-ordered correlators for disordered matchgate circuits")]
struct Cli {
    /// Worker threads (default: $OTOC_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact determinantal series (few interaction gates).
    Exact(RunArgs),
    /// Conditional-Gaussian lightcone approximation.
    Approx(RunArgs),
    /// Interaction-free evolution.
    Gaussian(GaussianArgs),
    /// Brute-force state-vector reference (small n only).
    Oracle(RunArgs),
    /// Disorder ensemble with the engine chosen by --engine or the config.
    Ensemble(EnsembleArgs),
    /// Scan ε against the dense oracle.
    OptimizeEps(OptimizeArgs),
    /// SVD shape analysis and asymptotic value of a stored grid.
    Analyze(AnalyzeArgs),
    /// Oracle-equivalence sweep of the exact and Gaussian engines.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Disorder strength ν.
    #[arg(long)]
    nu: Option<f64>,
    /// Layer duration δt in radians.
    #[arg(long)]
    dt: Option<f64>,
    /// Number of periods (two Gaussian layers each).
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Probe letter applied on every site.
    #[arg(long)]
    a: Option<String>,
    /// Evolved observable, letter and site, e.g. X15.
    #[arg(long)]
    b: Option<String>,
    /// Gates as qubit@time, comma separated; replaces the brickwork layers.
    #[arg(long, value_delimiter = ',')]
    gates: Option<Vec<String>>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; repeatable. Format from --format or the extension.
    #[arg(long)]
    out: Vec<PathBuf>,
    #[arg(long)]
    format: Option<GridFormat>,
    /// Refuse exact runs with more gates than this.
    #[arg(long, default_value_t = DEFAULT_MAX_GATES)]
    max_gates: usize,
}

#[derive(Args, Debug)]
struct GaussianArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also write the mean boundary weights b_s(t).
    #[arg(long)]
    boundary_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[arg(long)]
    engine: Option<Engine>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 0.05)]
    eps_step: f64,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Grid written by a previous run (.csv or .json).
    #[arg(long)]
    input: PathBuf,
    /// Site for the asymptotic value.
    #[arg(long)]
    site: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_FIT_START)]
    fit_start: f64,
    #[arg(long, default_value_t = SUPPORT_THRESHOLD)]
    threshold: f64,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, default_value_t = 6)]
    max_n: usize,
    #[arg(long, default_value_t = 3)]
    max_gates: usize,
    #[arg(long, default_value_t = 200)]
    circuits: usize,
    #[arg(long, default_value_t = 5.0)]
    max_nu: f64,
    /// Largest chain of the Gaussian sweep.
    #[arg(long, default_value_t = 8)]
    gaussian_max_n: usize,
    #[arg(long, default_value_t = 20)]
    gaussian_circuits: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    #[arg(long, default_value_t = 1e-10)]
    gaussian_tolerance: f64,
}

impl RunArgs {
    fn overrides(&self) -> RunConfig {
        let mut c = RunConfig::default();
        c.model.n = self.n;
        c.model.nu = self.nu;
        c.model.dt = self.dt;
        c.model.periods = self.periods;
        c.epsilon = self.epsilon;
        c.observables.a = self.a.clone();
        c.observables.b = self.b.clone();
        c.gates = self.gates.clone();
        c.ensemble.realizations = self.realizations;
        c.ensemble.base_seed = self.seed;
        c.output =
            self.out.iter().map(|p| OutputConfig { path: p.display().to_string(), format: self.format }).collect();
        c
    }

    fn config(&self, engine: Option<Engine>) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let mut over = self.overrides();
        over.engine = engine;
        let merged = base.merged(over);
        merged.validate()?;
        Ok(merged)
    }
}

/// Fills defaults and checks everything that depends on more than one field.
fn ensemble_spec(cfg: &RunConfig) -> Result<EnsembleSpec> {
    let n = cfg.model.n.unwrap_or(30);
    let dt = cfg.model.dt.unwrap_or(DEFAULT_DT);
    let periods = cfg.model.periods.unwrap_or(10);
    let probe = match &cfg.observables.a {
        None => 'Z',
        Some(a) => match parse_observable(a)? {
            (letter, None) => letter,
            (_, Some(_)) => {
                return Err(Error::input("observables.a: the probe runs over every site; give a letter only, e.g. Z"))
            }
        },
    };
    let b = match &cfg.observables.b {
        None => None,
        Some(b) => match parse_observable(b)? {
            (letter, Some(site)) if site <= n => Some((letter, site)),
            (_, Some(site)) => return Err(Error::input(format!("observables.b: site {site} outside 1..={n}"))),
            (_, None) => return Err(Error::input("observables.b: needs a site, e.g. X15")),
        },
    };
    let gates = match &cfg.gates {
        None => None,
        Some(list) => {
            let mut placed = Vec::new();
            for g in list {
                let (q, t) = parse_gate_spec(g).map_err(|e| Error::input(format!("gates: {e}")))?;
                if q >= n {
                    return Err(Error::input(format!("gates: qubit {q} needs a partner; use 1..={}", n - 1)));
                }
                let after = snap_gate_time(t, dt);
                if after > 2 * periods {
                    return Err(Error::input(format!(
                        "gates: time {t} falls after the last layer at {}",
                        2.0 * periods as f64 * dt
                    )));
                }
                placed.push((q, after));
            }
            Some(placed)
        }
    };
    Ok(EnsembleSpec {
        n,
        nu: cfg.model.nu.unwrap_or(0.0),
        dt,
        periods,
        epsilon: cfg.epsilon.unwrap_or(0.2),
        realizations: cfg.ensemble.realizations.unwrap_or(1),
        base_seed: cfg.ensemble.base_seed.unwrap_or(DEFAULT_SEED),
        b,
        probe,
        gates,
    })
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain JSON");
    s.push('\n');
    s
}

/// A closed pipe (`otoc ... | head`) is not an error.
fn stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io { path: "<stdout>".into(), source: e }),
        _ => Ok(()),
    }
}

fn emit_grid(grid: &LightconeGrid, outputs: &[OutputConfig]) -> Result<()> {
    if outputs.is_empty() {
        stdout(&grid_to_csv(grid))?;
        return Ok(());
    }
    for o in outputs {
        let path = PathBuf::from(&o.path);
        let format = match o.format {
            Some(f) => f,
            None => GridFormat::from_path(&path)?,
        };
        write_grid(grid, &path, format)?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn run_engine(engine: Engine, args: &RunArgs) -> Result<LightconeGrid> {
    let cfg = args.config(Some(engine))?;
    let spec = ensemble_spec(&cfg)?;
    let grid = run_ensemble(&spec, engine, args.max_gates)?;
    emit_grid(&grid, &cfg.output)?;
    Ok(grid)
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let grid = read_grid(&args.input)?;
    let pv = svd_principal_vector(&grid, args.fit_start)?;
    let asym = args.site.map(|s| asymptotic_value(&grid, s)).transpose()?;
    let report = json!({
        "sigma1": pv.sigma1,
        "u1": pv.u1,
        "degenerate": pv.degenerate,
        "fit_start": args.fit_start,
        "semilog_fit": pv.semilog_fit,
        "linear_fit": pv.linear_fit,
        "asymptotic_value": asym,
        "site": args.site,
        "width_second_quarter": mean_width(&grid, 0.25, 0.5, args.threshold),
        "width_final_quarter": mean_width(&grid, 0.75, 1.0, args.threshold),
    });
    stdout(&json_text(&report))?;
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<()> {
    let exact = exact_sweep(&SweepConfig {
        circuits: args.circuits,
        max_n: args.max_n,
        max_gates: args.max_gates,
        max_nu: args.max_nu,
        seed: args.seed,
    })?;
    let gaussian = gaussian_sweep(&SweepConfig {
        circuits: args.gaussian_circuits,
        max_n: args.gaussian_max_n,
        max_gates: 0,
        max_nu: args.max_nu,
        seed: args.seed,
    })?;
    let report = json!({ "exact": exact, "gaussian": gaussian });
    stdout(&json_text(&report))?;
    if exact.max_error > args.tolerance {
        return Err(Error::consistency(format!("exact engine off by {:.3e}: {}", exact.max_error, exact.worst)));
    }
    if gaussian.max_error > args.gaussian_tolerance {
        return Err(Error::consistency(format!(
            "Gaussian engine off by {:.3e}: {}",
            gaussian.max_error, gaussian.worst
        )));
    }
    Ok(())
}

fn config_threads(cli: &Cli) -> Result<Option<usize>> {
    let from_config = |args: &RunArgs| -> Result<Option<usize>> {
        match &args.config {
            Some(p) => Ok(RunConfig::load(p)?.threads),
            None => Ok(None),
        }
    };
    match &cli.command {
        Command::Exact(a) | Command::Approx(a) | Command::Oracle(a) => from_config(a),
        Command::Gaussian(g) => from_config(&g.run),
        Command::Ensemble(e) => from_config(&e.run),
        Command::OptimizeEps(o) => from_config(&o.run),
        Command::Analyze(_) | Command::Validate(_) => Ok(None),
    }
}

fn setup_threads(cli: &Cli) -> Result<()> {
    let env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::input(format!("{THREADS_ENV}: expected a thread count, got '{v}'")))?,
        ),
        Err(_) => None,
    };
    let threads = cli.threads.or(config_threads(cli)?).or(env);
    if let Some(k) = threads {
        if k == 0 {
            return Err(Error::input("threads: must be ≥ 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::consistency(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    setup_threads(cli)?;
    match &cli.command {
        Command::Exact(a) => run_engine(Engine::Exact, a).map(drop),
        Command::Approx(a) => run_engine(Engine::Approx, a).map(drop),
        Command::Oracle(a) => run_engine(Engine::Oracle, a).map(drop),
        Command::Gaussian(g) => {
            run_engine(Engine::Gaussian, &g.run)?;
            if let Some(path) = &g.boundary_out {
                let spec = ensemble_spec(&g.run.config(Some(Engine::Gaussian))?)?;
                let grid = run_boundary_ensemble(&spec)?;
                let format = match g.run.format {
                    Some(f) => f,
                    None => GridFormat::from_path(path)?,
                };
                write_grid(&grid, path, format)?;
            }
            Ok(())
        }
        Command::Ensemble(e) => {
            let cfg = e.run.config(e.engine)?;
            let engine = cfg.engine.ok_or_else(|| Error::input("engine: pass --engine or set it in the config"))?;
            run_engine(engine, &e.run).map(drop)
        }
        Command::OptimizeEps(o) => {
            let cfg = o.run.config(Some(Engine::Approx))?;
            let spec = ensemble_spec(&cfg)?;
            let scan = optimize_epsilon(&spec, &epsilon_grid(o.eps_step)?)?;
            let csv = scan_to_csv(&scan);
            if cfg.output.is_empty() {
                stdout(&csv)?;
            }
            for out in &cfg.output {
                write_text(&PathBuf::from(&out.path), &csv)?;
            }
            match scan.minimizer {
                Some(e) => {
                    eprintln!("minimizer ε* = {e} (depth {:.1}% of the curve range)", 100.0 * scan.relative_depth())
                }
                None => eprintln!("no interior minimum: the error curve is flat or monotone"),
            }
            Ok(())
        }
        Command::Analyze(a) => analyze(a),
        Command::Validate(v) => validate(v),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
