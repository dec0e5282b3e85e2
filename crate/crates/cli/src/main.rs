//! Command-line front end: single solves, suite benchmarks, gamma/tau
//! sweeps and spectrum experiments. Tables go to stdout as CSV; `solve`
//! prints a human summary and an optional per-iteration trace CSV.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cipm::diagnostics::{perturbation_probe, schur_spectrum, spectrum_report, SpectrumReport};
use cipm::ipm::{solve, IpmOptions, IpmResult, IterationRecord};
use cipm::nlp::{builtin_suite, load_qp_json, NlpProblem};
use cipm::strategy::{KktStrategy, StrategyKind};

const EXIT_SOLVER_FAILURE: i32 = 1;
const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(
    name = "cipm",
    about = "Condensed-space interior-point solver",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print a summary.
    Solve(SolveArgs),
    /// Run every builtin problem under each sparse strategy, CSV output.
    Bench(BenchArgs),
    /// Sweep the Schur regularization gamma on one problem.
    SweepGamma(SweepGammaArgs),
    /// Sweep the equality relaxation tau on one problem.
    SweepTau(SweepTauArgs),
    /// Spectrum statistics of the condensed matrix at a late iterate.
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
struct ProblemSource {
    /// Builtin problem name (see `bench` for the list).
    #[arg(long)]
    problem: Option<String>,
    /// Path to a QP in the JSON schema.
    #[arg(long)]
    qp: Option<PathBuf>,
}

impl ProblemSource {
    fn load(&self) -> Result<Arc<NlpProblem<f64>>> {
        match (&self.problem, &self.qp) {
            (Some(name), None) => {
                let suite = builtin_suite::<f64>();
                suite
                    .into_iter()
                    .find(|e| e.problem.name() == name)
                    .map(|e| e.problem)
                    .with_context(|| {
                        let names: Vec<String> = builtin_suite::<f64>()
                            .iter()
                            .map(|e| e.problem.name().to_string())
                            .collect();
                        format!("unknown problem `{name}`; available: {}", names.join(", "))
                    })
            }
            (None, Some(path)) => {
                let qp = load_qp_json::<f64, _>(path)
                    .with_context(|| format!("loading {}", path.display()))?;
                Ok(Arc::new(qp))
            }
            _ => bail!("exactly one of --problem or --qp is required"),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: ProblemSource,
    /// Strategy: k1, hykkt, lifted or oracle.
    #[arg(long, default_value = "k1")]
    strategy: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Schur regularization (hykkt only).
    #[arg(long)]
    gamma: Option<f64>,
    /// Equality relaxation (lifted only; defaults to the tolerance).
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Write the per-iteration trace to this CSV file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Tolerance for the lifted strategy (relaxation-limited).
    #[arg(long, default_value_t = 1e-6)]
    lifted_tol: f64,
    #[arg(long, default_value_t = 1e7)]
    gamma: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Restrict to a comma-separated subset of problems.
    #[arg(long)]
    only: Option<String>,
    /// Also write the CSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepGammaArgs {
    #[command(flatten)]
    source: ProblemSource,
    /// Comma-separated gamma values.
    #[arg(long, default_value = "1e4,1e5,1e6,1e7,1e8")]
    values: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepTauArgs {
    #[command(flatten)]
    source: ProblemSource,
    /// Comma-separated tau values; the solver tolerance follows tau.
    #[arg(long, default_value = "1e-4,1e-5,1e-6,1e-7")]
    values: String,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    source: ProblemSource,
    /// Comma-separated gamma values.
    #[arg(long, default_value = "1e4,1e5,1e6,1e7,1e8")]
    values: String,
    /// Tolerance of the preliminary solve locating the late iterate.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Relative noise for the perturbation probe (skipped when absent).
    #[arg(long)]
    probe_noise: Option<f64>,
    /// Seed for the perturbation probe.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_strategy(
    name: &str,
    gamma: Option<f64>,
    tau: Option<f64>,
    tol: f64,
) -> Result<StrategyKind<f64>> {
    let kind = match name {
        "k1" => StrategyKind::DirectK1,
        "hykkt" => StrategyKind::HyKkt {
            gamma: gamma.unwrap_or(1e7),
        },
        "lifted" => StrategyKind::LiftedKkt {
            tau: tau.unwrap_or(tol),
        },
        "oracle" => StrategyKind::DenseK2Oracle,
        other => bail!("unknown strategy `{other}` (expected k1, hykkt, lifted, oracle)"),
    };
    if gamma.is_some() && name != "hykkt" {
        bail!("--gamma only applies to the hykkt strategy");
    }
    if tau.is_some() && name != "lifted" {
        bail!("--tau only applies to the lifted strategy");
    }
    Ok(kind)
}

fn parse_values(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .with_context(|| format!("bad numeric value `{tok}`"))
        })
        .collect()
}

fn write_table(out: &Option<PathBuf>, table: &str) -> Result<()> {
    print!("{table}");
    if let Some(path) = out {
        std::fs::File::create(path)?.write_all(table.as_bytes())?;
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let problem = args.source.load()?;
    let kind = parse_strategy(&args.strategy, args.gamma, args.tau, args.tol)?;
    let mut opts = IpmOptions::with_strategy(kind).with_tol(args.tol);
    opts.max_iters = args.max_iters;
    let res = solve(&problem, &opts);

    println!(
        "problem     {} (n={}, m_e={}, m_i={})",
        problem.name(),
        problem.n(),
        problem.m_e(),
        problem.m_i()
    );
    println!("strategy    {}", kind.label());
    println!("status      {}", res.status);
    println!("objective   {:.12e}", res.objective);
    println!("iterations  {}", res.iterations);
    println!("kkt resid   {:.3e}", res.kkt_residual);
    if let Some(viol) = res.eq_violation_original {
        println!("eq viol     {:.3e} (original equalities)", viol);
    }
    if res.total_cg_iterations > 0 {
        println!("cg iters    {}", res.total_cg_iterations);
    }
    let t = res.timings;
    println!(
        "timing      init {:.4}s | build {:.4}s | factorize {:.4}s | backsolve {:.4}s | cg {:.4}s | total {:.4}s",
        res.init_seconds,
        t.assembly.as_secs_f64(),
        t.factorize.as_secs_f64(),
        t.backsolve.as_secs_f64(),
        t.cg.as_secs_f64(),
        res.total_seconds
    );
    if !res.message.is_empty() {
        println!("note        {}", res.message);
    }

    if let Some(path) = &args.trace {
        let mut csv = String::new();
        csv.push_str(IterationRecord::<f64>::CSV_HEADER);
        csv.push('\n');
        for record in &res.trace {
            csv.push_str(&record.csv_row());
            csv.push('\n');
        }
        std::fs::File::create(path)?.write_all(csv.as_bytes())?;
    }

    Ok(if res.is_optimal() {
        0
    } else {
        EXIT_SOLVER_FAILURE
    })
}

fn run_case(
    problem: &Arc<NlpProblem<f64>>,
    kind: StrategyKind<f64>,
    tol: f64,
    max_iters: usize,
) -> IpmResult<f64> {
    let mut opts = IpmOptions::with_strategy(kind).with_tol(tol);
    opts.max_iters = max_iters;
    solve(problem, &opts)
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let keep: Option<Vec<&str>> = args.only.as_deref().map(|s| s.split(',').collect());
    let mut table = String::from(
        "problem,strategy,status,iterations,objective,kkt_residual,init_s,lin_s,total_s\n",
    );
    for entry in builtin_suite::<f64>() {
        if let Some(keep) = &keep {
            if !keep.contains(&entry.problem.name()) {
                continue;
            }
        }
        for (label, kind, tol) in [
            ("k1", StrategyKind::DirectK1, args.tol),
            ("hykkt", StrategyKind::HyKkt { gamma: args.gamma }, args.tol),
            (
                "lifted",
                StrategyKind::LiftedKkt {
                    tau: args.lifted_tol,
                },
                args.lifted_tol,
            ),
        ] {
            let res = run_case(&entry.problem, kind, tol, args.max_iters);
            table.push_str(&format!(
                "{},{},{},{},{:e},{:e},{:.4},{:.4},{:.4}\n",
                entry.problem.name(),
                label,
                res.status,
                res.iterations,
                res.objective,
                res.kkt_residual,
                res.init_seconds,
                res.timings.total().as_secs_f64(),
                res.total_seconds
            ));
        }
    }
    write_table(&args.out, &table)?;
    Ok(0)
}

fn cmd_sweep_gamma(args: &SweepGammaArgs) -> Result<i32> {
    let problem = args.source.load()?;
    let values = parse_values(&args.values)?;
    let mut table =
        String::from("gamma,status,iterations,total_cg_iterations,objective,kkt_residual\n");
    for &gamma in &values {
        let res = run_case(
            &problem,
            StrategyKind::HyKkt { gamma },
            args.tol,
            args.max_iters,
        );
        table.push_str(&format!(
            "{:e},{},{},{},{:e},{:e}\n",
            gamma,
            res.status,
            res.iterations,
            res.total_cg_iterations,
            res.objective,
            res.kkt_residual
        ));
    }
    write_table(&args.out, &table)?;
    Ok(0)
}

fn cmd_sweep_tau(args: &SweepTauArgs) -> Result<i32> {
    let problem = args.source.load()?;
    let values = parse_values(&args.values)?;

    // Reference objective from the dense strategy at a tolerance well
    // below the sweep.
    let ref_tol = values.iter().cloned().fold(f64::INFINITY, f64::min) * 1e-2;
    let reference = run_case(
        &problem,
        StrategyKind::DenseK2Oracle,
        ref_tol.max(1e-11),
        args.max_iters,
    );
    if !reference.is_optimal() {
        bail!(
            "reference solve did not converge (status {})",
            reference.status
        );
    }

    let mut table = String::from("tau,status,iterations,objective,objective_error,eq_violation\n");
    for &tau in &values {
        let res = run_case(
            &problem,
            StrategyKind::LiftedKkt { tau },
            tau,
            args.max_iters,
        );
        table.push_str(&format!(
            "{:e},{},{},{:e},{:e},{:e}\n",
            tau,
            res.status,
            res.iterations,
            res.objective,
            (res.objective - reference.objective).abs(),
            res.eq_violation_original.unwrap_or(0.0)
        ));
    }
    write_table(&args.out, &table)?;
    Ok(0)
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<i32> {
    let problem = args.source.load()?;
    let values = parse_values(&args.values)?;

    // Locate a late iterate: solve with the direct strategy, then reuse the
    // final interior point.
    let res = run_case(&problem, StrategyKind::DirectK1, args.tol, 200);
    if !res.is_optimal() {
        bail!("preliminary solve did not converge (status {})", res.status);
    }
    let late = res.iterate;

    let mut table = String::new();
    table.push_str(SpectrumReport::<f64>::CSV_HEADER);
    table.push('\n');
    for &gamma in &values {
        let report = spectrum_report(&problem, &late, gamma)?;
        // CG work for this gamma at the same iterate.
        let mut strategy = KktStrategy::new(StrategyKind::HyKkt { gamma }, &problem)?;
        let mut it = late.clone();
        let step = strategy.compute_step(&problem, &mut it)?;
        let cg_iters = step.cg.map(|c| c.iterations).unwrap_or(0);
        table.push_str(&report.csv_row(cg_iters));
        table.push('\n');

        if problem.m_e() > 0 {
            let eigenvalues = schur_spectrum(&problem, &late, gamma)?;
            let cluster = eigenvalues
                .iter()
                .map(|ev| (gamma * ev - 1.0).abs())
                .fold(0.0f64, f64::max);
            table.push_str(&format!(
                "# schur gamma={gamma:e} max|gamma*lambda-1|={cluster:e}\n"
            ));
        }
        if let Some(noise) = args.probe_noise {
            let probe = perturbation_probe(&problem, &late, gamma, noise, args.seed)?;
            table.push_str(&format!(
                "# probe gamma={:e} noise={:e} step_error={:e} bound={:e} rhs_range={:e} rhs_null={:e}\n",
                gamma,
                noise,
                probe.step_error_rel,
                probe.naive_bound,
                probe.rhs_error_in_range,
                probe.rhs_error_in_null
            ));
        }
    }
    write_table(&args.out, &table)?;
    Ok(0)
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::SweepGamma(args) => cmd_sweep_gamma(args),
        Command::SweepTau(args) => cmd_sweep_tau(args),
        Command::Spectrum(args) => cmd_spectrum(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(EXIT_USAGE);
        }
    }
}
