//! Batch driver for the SQG solver: each subcommand reads a TOML run
//! configuration, executes one experiment, and writes its artifacts into
//! a self-describing run directory.
//!
//! Exit codes are a stable contract:
//!
//! | code | meaning                                     |
//! |------|---------------------------------------------|
//! | 0    | success (and all pass flags true)           |
//! | 2    | configuration or usage error                |
//! | 3    | blow-up abort                               |
//! | 4    | Picard non-convergence                      |
//! | 5    | I/O or file-format error                    |
//! | 6    | verification checks completed but failed    |
//! | 70   | internal error                              |

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sqg_core::error::Error;
use sqg_core::estimates::run_verify_suite;
use sqg_core::evolution::{self, Stepper};
use sqg_core::io::{self, config::InitialDataSection, RunConfig};
use sqg_core::{dyadic, BesovIndex, EnsembleSpec, Field64, SpectrumProfile};

const EXIT_CONFIG: u8 = 2;
const EXIT_BLOWUP: u8 = 3;
const EXIT_PICARD: u8 = 4;
const EXIT_IO: u8 = 5;
const EXIT_VERIFY_FAILED: u8 = 6;
const EXIT_INTERNAL: u8 = 70;

#[derive(Parser)]
#[command(
    name = "sqg",
    about = "Pseudospectral solver and inequality verifier for the inviscid SQG equation \
             on the unit square with Dirichlet boundary conditions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the experiment seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the regularisation strength.
    #[arg(long)]
    mu: Option<f64>,
    /// Override the simulation horizon.
    #[arg(long)]
    t_final: Option<f64>,
    /// Override the time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the output root directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Cap the worker thread count.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured initial data and store the trajectory.
    Simulate(CommonArgs),
    /// Solve across the configured μ ladder and compare runs.
    SweepMu(CommonArgs),
    /// Run the full inequality-verification suite over the ensemble.
    Verify(CommonArgs),
    /// Print the Besov norm of a stored checkpoint.
    BesovNorm {
        #[command(flatten)]
        common: CommonArgs,
        /// Checkpoint file holding the field.
        #[arg(long)]
        field: PathBuf,
    },
    /// Perturbation-growth experiment against the Gronwall envelope.
    Gronwall(CommonArgs),
    /// Summarise a finished run directory.
    Report {
        /// Directory written by a previous subcommand.
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    // behave like a standard unix tool when the output pipe closes
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify(&err))
        }
    }
}

fn classify(err: &Error) -> u8 {
    match err {
        Error::BlowUp { .. } => EXIT_BLOWUP,
        Error::PicardNonConvergence { .. } => EXIT_PICARD,
        Error::Io(_) | Error::FileFormat { .. } => EXIT_IO,
        Error::NonFiniteState(_) => EXIT_BLOWUP,
        Error::ConfigParse { .. }
        | Error::ConfigConstraint { .. }
        | Error::InvalidDomain(_)
        | Error::InvalidSolverConfig(_)
        | Error::InvalidNonlinearity(_)
        | Error::InvalidEnsemble(_)
        | Error::InvalidBesovIndex(_)
        | Error::InvalidExponent(_)
        | Error::EquivalenceRange(_)
        | Error::HypothesisViolated(_) => EXIT_CONFIG,
        _ => EXIT_INTERNAL,
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::SweepMu(args) => sweep_mu(args),
        Command::Verify(args) => verify(args),
        Command::BesovNorm { common, field } => besov_norm_cmd(common, field),
        Command::Gronwall(args) => gronwall(args),
        Command::Report { run_dir } => report(&run_dir),
    }
}

fn load(args: &CommonArgs) -> Result<RunConfig, Error> {
    if let Some(jobs) = args.jobs {
        // ignore failure: the global pool can only be set once
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let mut cfg = io::load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(mu) = args.mu {
        cfg.nonlinearity.mu = mu;
    }
    if let Some(t) = args.t_final {
        cfg.solver.t_final = Some(t);
    }
    if let Some(dt) = args.dt {
        cfg.solver.dt = dt;
    }
    if let Some(dir) = &args.output_dir {
        cfg.experiment.output_dir = Some(dir.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Horizon: explicit config value, else the existence-window heuristic.
fn horizon(cfg: &RunConfig, theta0: &Field64) -> Result<f64, Error> {
    if let Some(t) = cfg.solver.t_final {
        return Ok(t);
    }
    let t = evolution::existence_window(theta0, cfg.solver.horizon_constant)?;
    if !t.is_finite() {
        return Err(Error::ConfigConstraint {
            field: "solver.t_final".into(),
            message: "required when the initial data is zero".into(),
        });
    }
    Ok(t.max(cfg.solver.window))
}

fn simulate(args: CommonArgs) -> Result<ExitCode, Error> {
    let cfg = load(&args)?;
    let domain = cfg.build_domain()?;
    let theta0 = cfg.build_initial_data(&domain)?;
    let t_final = horizon(&cfg, &theta0)?;
    let mut solver = cfg.solver_config(t_final);
    let mu = cfg.nonlinearity.mu;
    if mu == 0.0 {
        // the Picard contraction has no guarantee without regularisation
        solver.stepper = Stepper::ExplicitRk4;
    }

    let traj = evolution::solve(&theta0, mu, &solver)?;

    let dir = io::prepare_run_dir(&cfg.output_root(), &cfg.experiment.id, Some(&args.config))?;
    io::write_trajectory(&traj, &dir.join("trajectory.bin"))?;
    io::write_norm_series(&traj, &dir.join("norms.csv"))?;
    io::write_checkpoint(
        traj.terminal_state(),
        *traj.times().last().unwrap(),
        mu,
        &dir.join("final.ckpt"),
    )?;
    let last = traj.diagnostics().last().unwrap();
    println!(
        "simulate {}: {} steps to t = {}, |theta|_L2 = {}, |theta|_B221 = {}, run dir {}",
        cfg.experiment.id,
        traj.len() - 1,
        traj.times().last().unwrap(),
        last.l2,
        last.besov_221,
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn sweep_mu(args: CommonArgs) -> Result<ExitCode, Error> {
    let cfg = load(&args)?;
    let domain = cfg.build_domain()?;
    let theta0 = cfg.build_initial_data(&domain)?;
    let t_final = horizon(&cfg, &theta0)?;
    let solver = cfg.solver_config(t_final);

    let sweep = evolution::mu_sweep(&theta0, &cfg.nonlinearity.mu_list, &solver)?;

    let dir = io::prepare_run_dir(&cfg.output_root(), &cfg.experiment.id, Some(&args.config))?;
    io::write_sweep_report(&sweep, &dir.join("sweep.csv"))?;
    for (mu, run) in sweep.mus.iter().zip(&sweep.runs) {
        io::write_norm_series(run, &dir.join(format!("norms_mu{mu}.csv")))?;
    }
    if let Some(direct) = &sweep.direct_run {
        io::write_norm_series(direct, &dir.join("norms_mu0.csv"))?;
    }

    let uniform = sweep.uniform_bound_ok(cfg.estimates.mu_slack);
    let cauchy = sweep.cauchy_ok();
    println!(
        "sweep-mu {}: CL variation {}, uniform-bound {}, cauchy {}, run dir {}",
        cfg.experiment.id,
        sweep.cl_variation(),
        if uniform { "pass" } else { "fail" },
        if cauchy { "pass" } else { "fail" },
        dir.display()
    );
    Ok(if uniform && cauchy {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILED)
    })
}

fn verify(args: CommonArgs) -> Result<ExitCode, Error> {
    let cfg = load(&args)?;
    let ens = cfg.ensemble_spec();
    let est = cfg.estimates_config();
    let reports = run_verify_suite(&ens, &est, &cfg.nonlinearity.mu_list, cfg.estimates.gamma)?;

    let dir = io::prepare_run_dir(&cfg.output_root(), &cfg.experiment.id, Some(&args.config))?;
    io::write_reports(&reports, &dir.join("report.csv"))?;
    io::write_summary(&reports, &dir.join("summary.txt"))?;

    let passed = reports.iter().filter(|r| r.pass).count();
    println!(
        "verify {}: {passed}/{} checks passed, run dir {}",
        cfg.experiment.id,
        reports.len(),
        dir.display()
    );
    for r in reports.iter().filter(|r| !r.pass) {
        println!("  FAIL {}", r.id);
    }
    Ok(if passed == reports.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILED)
    })
}

fn besov_norm_cmd(args: CommonArgs, field: PathBuf) -> Result<ExitCode, Error> {
    let cfg = load(&args)?;
    let ck = io::read_checkpoint(&field)?;
    let idx = BesovIndex::new(cfg.besov.s, cfg.besov.p, cfg.besov.q)?;
    let value = dyadic::besov_norm(&ck.field, idx)?;
    println!("{value}");
    Ok(ExitCode::SUCCESS)
}

fn gronwall(args: CommonArgs) -> Result<ExitCode, Error> {
    let cfg = load(&args)?;
    let domain = cfg.build_domain()?;
    let theta0 = cfg.build_initial_data(&domain)?;
    let t_final = horizon(&cfg, &theta0)?;
    let mut solver = cfg.solver_config(t_final);
    let mu = cfg.nonlinearity.mu;
    if mu == 0.0 {
        solver.stepper = Stepper::ExplicitRk4;
    }

    // perturbation direction: an independent draw from the same profile
    let decay = match &cfg.initial_data {
        InitialDataSection::RandomDecay { decay_rate, .. } => *decay_rate,
        _ => 3.0,
    };
    let pert_spec = EnsembleSpec {
        count: 1,
        profile: SpectrumProfile::Decay { r: decay },
        seed: cfg.experiment.seed.wrapping_add(1),
        resolutions: vec![domain.mode_cutoff()],
    };
    let mut delta = pert_spec.generate(&domain)?.pop().unwrap();
    delta.scale(cfg.gronwall.perturbation * theta0.l2_norm());

    let growth = evolution::gronwall_check(&theta0, &delta, mu, &solver)?;

    let dir = io::prepare_run_dir(&cfg.output_root(), &cfg.experiment.id, Some(&args.config))?;
    io::write_growth_report(&growth, &dir.join("growth.csv"))?;

    let pass = growth.bounded_by_envelope() && growth.fitted_c <= 10.0;
    println!(
        "gronwall {}: fitted C = {}, max ratio = {}, {}, run dir {}",
        cfg.experiment.id,
        growth.fitted_c,
        growth
            .ratios
            .iter()
            .cloned()
            .fold(0.0f64, f64::max),
        if pass { "pass" } else { "fail" },
        dir.display()
    );
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILED)
    })
}

fn report(run_dir: &Path) -> Result<ExitCode, Error> {
    let mut failed = false;
    let mut printed = false;

    let summary = run_dir.join("summary.txt");
    if summary.exists() {
        let text = std::fs::read_to_string(&summary)?;
        print!("{text}");
        failed |= text.lines().any(|l| l.starts_with("FAIL"));
        printed = true;
    }
    for name in ["report.csv", "sweep.csv", "growth.csv", "norms.csv"] {
        let path = run_dir.join(name);
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            let mut lines = text.lines();
            println!("--- {name} ---");
            for line in lines.by_ref().take(12) {
                println!("{line}");
            }
            let rest = lines.count();
            if rest > 0 {
                println!("... ({rest} more rows)");
            }
            printed = true;
        }
    }
    if !printed {
        return Err(Error::FileFormat {
            path: run_dir.display().to_string(),
            message: "no report artifacts found".into(),
        });
    }
    Ok(if failed {
        ExitCode::from(EXIT_VERIFY_FAILED)
    } else {
        ExitCode::SUCCESS
    })
}
