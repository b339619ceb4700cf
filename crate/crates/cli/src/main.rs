use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mairs::harness::{
    check_gradient, gain_landscape, generate_scenario, initialize_variables, run_scheme, run_sweep, RunOptions,
    SchemeSpec, SweepConfig, SweepParam, SweepRow, SweepTable,
};
use mairs::manifold::ProductManifold;
use mairs::objective::PenaltyState;

#[derive(Parser, Debug)]
#[command(name = "mairs", version, about = "Joint beamforming and antenna-position optimization for movable-element IRS links")]
struct Cli {
    /// TOML file with sweep, scenario and solver settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every scheme over a parameter grid and emit one row per cell.
    Sweep(SweepArgs),
    /// Optimize one scheme on one scenario.
    Single(SingleArgs),
    /// Compare the analytic gradient with finite differences.
    Gradcheck(GradcheckArgs),
    /// Channel power gain over the IRS region for one moving element.
    Landscape(LandscapeArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug, Default)]
struct ScenarioArgs {
    /// Number of BS antennas M.
    #[arg(long = "bs-antennas", short = 'M')]
    bs_antennas: Option<usize>,
    /// Number of IRS elements N.
    #[arg(long = "irs-elements", short = 'N')]
    irs_elements: Option<usize>,
    /// Number of users K.
    #[arg(long, short = 'K')]
    users: Option<usize>,
    /// Number of propagation paths L.
    #[arg(long, short = 'L')]
    paths: Option<usize>,
    /// Transmit power in dBm.
    #[arg(long = "power-dbm")]
    power_dbm: Option<f64>,
    #[arg(long = "noise-dbm")]
    noise_dbm: Option<f64>,
    #[arg(long = "carrier-hz")]
    carrier_hz: Option<f64>,
    /// BS region edge in wavelengths.
    #[arg(long = "bs-region")]
    bs_region_wl: Option<f64>,
    /// IRS region edge in wavelengths.
    #[arg(long = "irs-region")]
    irs_region_wl: Option<f64>,
    /// Minimum per-user rate in bit/s/Hz.
    #[arg(long = "min-rate")]
    min_rate: Option<f64>,
    /// Maximum angle error of the FRI used for optimization.
    #[arg(long = "angle-error")]
    angle_error: Option<f64>,
    /// Variance of the normalized path-response error.
    #[arg(long = "response-error")]
    response_error: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct SolverArgs {
    #[arg(long = "memory-size")]
    memory_size: Option<usize>,
    #[arg(long = "sigma-ls")]
    sigma_ls: Option<f64>,
    #[arg(long = "gamma-ls")]
    gamma_ls: Option<f64>,
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long = "max-inner-iters")]
    max_inner_iters: Option<usize>,
    #[arg(long = "max-outer-iters")]
    max_outer_iters: Option<usize>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long = "theta-rho")]
    theta_rho: Option<f64>,
    #[arg(long)]
    u0: Option<f64>,
    #[arg(long = "theta-u")]
    theta_u: Option<f64>,
    #[arg(long = "u-min")]
    u_min: Option<f64>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long = "theta-eps")]
    theta_eps: Option<f64>,
    #[arg(long = "eps-min")]
    eps_min: Option<f64>,
    #[arg(long = "tau-outer")]
    tau_outer: Option<f64>,
    #[arg(long = "feasibility-tol")]
    feasibility_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Swept parameter: P_t, N, L, A_I, Gamma, mu or nu.
    #[arg(long)]
    param: Option<SweepParam>,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated scheme labels, e.g. proposed-OPS,FPA,MA-FPA-DPS.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fill wall_ms with measured time (breaks byte-identical reruns).
    #[arg(long)]
    record_wall_time: bool,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SingleArgs {
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Include the per-iteration trace (JSON only).
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
    #[arg(long, default_value_t = 10.0)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    smoothing: f64,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct LandscapeArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Scheme whose initial layout (or optimized result) is used.
    #[arg(long, default_value = "proposed-OPS")]
    scheme: String,
    /// Optimize first and draw the landscape around the result.
    #[arg(long)]
    optimized: bool,
    #[arg(long, default_value_t = 0)]
    user: usize,
    #[arg(long, default_value_t = 0)]
    element: usize,
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

macro_rules! override_fields {
    ($target:expr, $src:expr, [$($field:ident),* $(,)?]) => {
        $(if let Some(v) = $src.$field.clone() { $target.$field = v; })*
    };
}

impl ScenarioArgs {
    fn apply(&self, cfg: &mut SweepConfig) {
        override_fields!(cfg.scenario, self, [
            bs_antennas, irs_elements, users, paths, power_dbm, noise_dbm, carrier_hz,
            bs_region_wl, irs_region_wl, min_rate, angle_error, response_error,
        ]);
    }
}

impl SolverArgs {
    fn apply(&self, cfg: &mut SweepConfig) {
        override_fields!(cfg.solver, self, [
            memory_size, sigma_ls, gamma_ls, tau0, max_inner_iters, max_outer_iters, rho0, theta_rho,
            u0, theta_u, u_min, eps0, theta_eps, eps_min, tau_outer, feasibility_tol,
        ]);
    }
}

fn load_config(path: Option<&Path>) -> Result<SweepConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(SweepConfig::default()),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sweep(cfg_file: SweepConfig, args: SweepArgs) -> Result<()> {
    let mut cfg = cfg_file;
    if let Some(p) = args.param {
        cfg.param = p;
    }
    override_fields!(cfg, args, [values, trials, schemes, seed]);
    cfg.record_wall_time |= args.record_wall_time;
    args.scenario.apply(&mut cfg);
    args.solver.apply(&mut cfg);
    cfg.validate()?;

    let table = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| run_sweep(&cfg))?,
        None => run_sweep(&cfg)?,
    };
    let mut out = output(args.output.out.as_deref())?;
    match args.output.format {
        Format::Csv => table.write_csv(&mut out)?,
        Format::Json => table.write_json(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn single(cfg_file: SweepConfig, args: SingleArgs) -> Result<()> {
    let mut cfg = cfg_file;
    args.scenario.apply(&mut cfg);
    args.solver.apply(&mut cfg);
    let seed = args.seed.unwrap_or(cfg.seed);
    let label = match (&args.scheme, cfg.schemes.first()) {
        (Some(s), _) => s.clone(),
        (None, Some(s)) => s.clone(),
        (None, None) => bail!("no scheme given"),
    };
    let scheme = SchemeSpec::parse(&label)?;
    cfg.solver.validate()?;
    let scenario = generate_scenario(seed, &cfg.scenario)?;
    let opts = RunOptions {
        seed,
        angle_error: cfg.scenario.angle_error,
        response_error: cfg.scenario.response_error,
        record_wall_time: cfg.record_wall_time,
    };
    let result = run_scheme(&scenario, &scheme, &cfg.solver, &opts)?;

    let mut out = output(args.output.out.as_deref())?;
    match args.output.format {
        Format::Json => {
            let mut value = serde_json::to_value(&result)?;
            if args.trace {
                value["trace"] = serde_json::to_value(&result.trace)?;
            }
            serde_json::to_writer_pretty(&mut out, &value)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let row = SweepRow {
                sweep_param: "none".into(),
                sweep_value: 0.0,
                trial: 0,
                scheme: result.scheme.clone(),
                sum_rate_bpshz: result.sum_rate,
                min_user_rate: result.min_user_rate,
                max_constraint_violation: result.max_violation,
                feasible: result.feasible,
                outer_iters: result.outer_iters,
                inner_iters_total: result.inner_iters_total,
                final_rho: result.final_rho,
                wall_ms: result.wall_ms,
                seed,
                error: None,
            };
            SweepTable {
                rows: vec![row],
                summary: Vec::new(),
            }
            .write_csv(&mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn gradcheck(cfg_file: SweepConfig, args: GradcheckArgs) -> Result<()> {
    let mut cfg = cfg_file;
    args.scenario.apply(&mut cfg);
    let seed = args.seed.unwrap_or(cfg.seed);
    let scenario = generate_scenario(seed, &cfg.scenario)?;
    let x = initialize_variables(&scenario, &SchemeSpec::parse("proposed-OPS")?, seed)?;
    let pen = PenaltyState {
        rho: args.rho,
        smoothing: args.smoothing,
        eps: 0.0,
    };
    let check = check_gradient(&x, &scenario, &pen, &ProductManifold::new(scenario.power), args.step);

    let mut out = output(args.output.out.as_deref())?;
    match args.output.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &check)?;
            writeln!(out)?;
        }
        Format::Csv => {
            writeln!(out, "index,analytic,numeric")?;
            for (i, (a, n)) in check.analytic.iter().zip(&check.numeric).enumerate() {
                writeln!(out, "{i},{a},{n}")?;
            }
        }
    }
    out.flush()?;
    eprintln!("max relative error {:e}", check.max_relative_error);
    Ok(())
}

fn landscape(cfg_file: SweepConfig, args: LandscapeArgs) -> Result<()> {
    let mut cfg = cfg_file;
    args.scenario.apply(&mut cfg);
    args.solver.apply(&mut cfg);
    let seed = args.seed.unwrap_or(cfg.seed);
    let scheme = SchemeSpec::parse(&args.scheme)?;
    let scenario = generate_scenario(seed, &cfg.scenario)?;
    let x = if args.optimized {
        let opts = RunOptions {
            seed,
            ..RunOptions::default()
        };
        run_scheme(&scenario, &scheme, &cfg.solver, &opts)?
            .point
            .context("run returned no point")?
    } else {
        initialize_variables(&scenario, &scheme, seed)?
    };
    let land = gain_landscape(&scenario, &x, args.user, args.element, args.resolution)?;
    let mut out = output(args.out.as_deref())?;
    land.write_matrix(&mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Sweep(a) => sweep(cfg, a),
        Command::Single(a) => single(cfg, a),
        Command::Gradcheck(a) => gradcheck(cfg, a),
        Command::Landscape(a) => landscape(cfg, a),
    }
}
