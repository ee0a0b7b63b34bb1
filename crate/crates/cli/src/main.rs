use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use pooltest_core::analytic::{closed_form_expected_tests, expected_total_tests, optimize, Form, PoolCountRule};
use pooltest_core::harness::{
    parse_count_range, parse_range, run_robustness, run_sweep, to_csv_string, write_csv_atomic, ModelAxis, SweepSpec,
};
use pooltest_core::oracle::{enumerate_expected_tests, DEFAULT_BUDGET};
use pooltest_core::seed::DEFAULT_SEED;
use pooltest_core::simulate::run_replications;
use pooltest_core::{DesignParams, Error, ProblemInstance, Scheme};
use serde::Serialize;

/// Two-stage randomized group testing: design, simulate and verify FTP, FTI
/// and RP pooling schemes.
#[derive(Parser)]
#[command(name = "pooltest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal continuous and integer parameters with predicted test counts.
    Design {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_enum, default_value = "all")]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value = "paper")]
        mode: Mode,
    },
    /// Monte Carlo replications at one population, optimized or given design.
    Simulate {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_enum, default_value = "all")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Number of pools; requires --secondary and a single scheme.
        #[arg(long, requires = "secondary")]
        m: Option<f64>,
        /// b (FTP), d (FTI) or a (RP).
        #[arg(long, requires = "m")]
        secondary: Option<f64>,
        #[arg(long, value_enum, default_value = "paper")]
        mode: Mode,
    },
    /// Sweep over a k or p range and write one CSV row per point and scheme.
    Sweep {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        axis: AxisArgs,
        #[arg(long, value_enum, default_value = "all")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cost of designing for a wrong infected count.
    Robustness {
        #[arg(long)]
        n: u64,
        /// True infected count.
        #[arg(long)]
        k: u64,
        /// Estimates to design for, `start:stop:step`.
        #[arg(long)]
        k_range: String,
        #[arg(long, value_enum, default_value = "fti")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact expectation by enumeration on a tiny instance.
    Oracle {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        secondary: f64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ModelArgs {
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct Target {
    #[arg(long)]
    n: u64,
    #[command(flatten)]
    model: ModelArgs,
}

impl Target {
    fn instance(&self) -> pooltest_core::Result<ProblemInstance> {
        match (self.model.k, self.model.p) {
            (Some(k), _) => ProblemInstance::fixed_k(self.n, k),
            (_, Some(p)) => ProblemInstance::binomial(self.n, p),
            _ => unreachable!("clap enforces one of --k/--p"),
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct AxisArgs {
    #[arg(long)]
    k_range: Option<String>,
    #[arg(long)]
    p_range: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Ftp,
    Fti,
    Rp,
    All,
}

impl SchemeArg {
    fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeArg::Ftp => vec![Scheme::Ftp],
            SchemeArg::Fti => vec![Scheme::Fti],
            SchemeArg::Rp => vec![Scheme::Rp],
            SchemeArg::All => Scheme::ALL.to_vec(),
        }
    }

    fn single(self) -> anyhow::Result<Scheme> {
        match self.schemes()[..] {
            [s] => Ok(s),
            _ => Err(Error::InvalidParams("this command needs a single --scheme".into()).into()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Paper,
    Exact,
}

impl Mode {
    fn form(self) -> Form {
        match self {
            Mode::Paper => Form::PaperApprox,
            Mode::Exact => Form::Exact,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Mode::Paper => "paper",
            Mode::Exact => "exact",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Infeasible(_)) => 3,
        Some(Error::BudgetExceeded { .. }) => 4,
        Some(Error::Io(_) | Error::Csv(_)) | None => 1,
        Some(_) => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Design { target, scheme, mode } => design(&target.instance()?, scheme, mode),
        Command::Simulate {
            target,
            scheme,
            reps,
            seed,
            m,
            secondary,
            mode,
        } => {
            let inst = target.instance()?;
            let given = match (m, secondary) {
                (Some(m), Some(s)) => Some(DesignParams::new(scheme.single()?, m, s)),
                _ => None,
            };
            simulate(&inst, scheme, given, reps, seed, mode)
        }
        Command::Sweep {
            n,
            axis,
            scheme,
            reps,
            seed,
            out,
        } => {
            let axis = match (axis.k_range, axis.p_range) {
                (Some(r), _) => ModelAxis::FixedK(parse_count_range(&r)?),
                (_, Some(r)) => ModelAxis::Binomial(parse_range(&r)?),
                _ => unreachable!("clap enforces one of --k-range/--p-range"),
            };
            let spec = SweepSpec {
                schemes: scheme.schemes(),
                n,
                axis,
                reps,
                seed,
                rule: PoolCountRule::ExactStationary,
            };
            spec.validate()?;
            emit(&run_sweep(&spec)?, out)
        }
        Command::Robustness {
            n,
            k,
            k_range,
            scheme,
            reps,
            seed,
            out,
        } => {
            let inst = ProblemInstance::fixed_k(n, k)?;
            let estimates = parse_range(&k_range)?;
            emit(&run_robustness(&inst, scheme.single()?, &estimates, reps, seed)?, out)
        }
        Command::Oracle {
            n,
            k,
            scheme,
            m,
            secondary,
            budget,
        } => {
            let inst = ProblemInstance::fixed_k(n, k)?;
            oracle(&inst, &DesignParams::new(scheme.single()?, m, secondary), budget)
        }
    }
}

fn design(inst: &ProblemInstance, scheme: SchemeArg, mode: Mode) -> anyhow::Result<()> {
    println!("n={} kbar={}", inst.n(), inst.kbar());
    for s in scheme.schemes() {
        let opt = optimize(inst, s, PoolCountRule::ExactStationary)?;
        let name = s.secondary_name();
        let predicted = expected_total_tests(inst, &opt.realized, mode.form())?.expected_total_tests;
        println!("{s}");
        println!(
            "  continuous  m={:.4} {name}={:.6}",
            opt.continuous.m, opt.continuous.secondary
        );
        println!("  integer     m={} {name}={}", opt.realized.m, opt.realized.secondary);
        println!("  E[T] ({})  {predicted:.4}", mode.label());
        println!("  closed form {:.4}", closed_form_expected_tests(inst, s)?);
    }
    Ok(())
}

fn simulate(
    inst: &ProblemInstance,
    scheme: SchemeArg,
    given: Option<DesignParams>,
    reps: usize,
    seed: u64,
    mode: Mode,
) -> anyhow::Result<()> {
    let designs = match given {
        Some(params) => vec![params],
        None => scheme
            .schemes()
            .into_iter()
            .map(|s| Ok(optimize(inst, s, PoolCountRule::ExactStationary)?.realized))
            .collect::<pooltest_core::Result<_>>()?,
    };
    println!("scheme,m,secondary,reps,mean_total,stderr_total,theory_total,identification_failures");
    for params in designs {
        let summary = run_replications(inst, &params, reps, seed)?;
        let theory = expected_total_tests(inst, &params, mode.form())?.expected_total_tests;
        println!(
            "{},{},{},{},{},{},{},{}",
            params.scheme,
            params.m,
            params.secondary,
            summary.reps,
            summary.mean_total,
            summary.stderr_total,
            theory,
            summary.identification_failures
        );
    }
    Ok(())
}

fn oracle(inst: &ProblemInstance, params: &DesignParams, budget: u128) -> anyhow::Result<()> {
    let exact = enumerate_expected_tests(inst, params, budget)?;
    let paper = expected_total_tests(inst, params, Form::PaperApprox)?.expected_total_tests;
    let exact_form = expected_total_tests(inst, params, Form::Exact)?.expected_total_tests;
    println!("states      {}", exact.state_count);
    println!("enumerated  {} = {}", exact.exact_expected_total, exact.expected_total);
    println!("paper       {paper} (gap {:+e})", paper - exact.expected_total);
    println!(
        "exact_form  {exact_form} (gap {:+e})",
        exact_form - exact.expected_total
    );
    Ok(())
}

fn emit<T: Serialize>(rows: &[T], out: Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => write_csv_atomic(&path, rows).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{}", to_csv_string(rows)?);
            Ok(())
        }
    }
}
