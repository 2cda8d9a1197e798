use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swor_core::experiment::{run, Experiment, ExperimentConfig, KernelChoice};
use swor_core::kernel_complexity::TailConvention;

/// Concentration bounds for sampling without replacement: numerical checks
/// and transductive risk bounds.
#[derive(Parser, Debug)]
#[command(name = "swor-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo check of every tail and deviation bound
    VerifyBounds(Common),
    /// Compare the tail exponents of the sub-Gaussian and El-Yaniv–Pechyony bounds
    CompareExponents(Common),
    /// Exhaustive check of E[Q'_m] <= E[Q_m] and the 2m³/N gap on small classes
    OracleCheck(Common),
    /// Uniform deviation bounds for ERM over random train/test splits
    TransductiveErm(Common),
    /// Localized excess-risk bounds and their empirical validity
    Localize(Common),
    /// Gram spectrum and eigenvalue tail-sum bound for a kernel class
    KernelBound(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// key = value configuration file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    splits: Option<u64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// comma-separated t values
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    /// comma-separated ε values
    #[arg(long, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
    /// replace the sub-Gaussian exponent constant 8 (power check)
    #[arg(long)]
    corrupt: Option<f64>,
    /// run the full verification grid
    #[arg(long)]
    sweep: bool,
    #[arg(long)]
    class_csv: Option<PathBuf>,
    #[arg(long)]
    loss_csv: Option<PathBuf>,
    #[arg(long)]
    points_csv: Option<PathBuf>,
    /// the last column of --points-csv holds labels
    #[arg(long)]
    labeled: bool,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    net_size: Option<usize>,
    #[arg(long)]
    c_l: Option<f64>,
    /// count the θ-th eigenvalue in the tail sum
    #[arg(long)]
    inclusive_tail: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// output directory for report.json and curves.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum KernelArg {
    Gaussian,
    Linear,
    Polynomial,
    Delta,
}

impl From<KernelArg> for KernelChoice {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Gaussian => KernelChoice::Gaussian,
            KernelArg::Linear => KernelChoice::Linear,
            KernelArg::Polynomial => KernelChoice::Polynomial,
            KernelArg::Delta => KernelChoice::Delta,
        }
    }
}

fn build_config(experiment: Experiment, args: Common) -> swor_core::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = experiment;
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field {
                cfg.$field = v;
            }
        )*};
    }
    set!(seed, n, trials, splits, sigma2, eps, bandwidth, net_size, c_l, threads);
    if args.m.is_some() {
        cfg.m = args.m;
    }
    if args.t_grid.is_some() {
        cfg.t_grid = args.t_grid;
    }
    if args.eps_grid.is_some() {
        cfg.eps_grid = args.eps_grid;
    }
    if let Some(c) = args.corrupt {
        cfg.subgaussian_constant = c;
    }
    if let Some(k) = args.kernel {
        cfg.kernel = k.into();
    }
    for (slot, value) in [
        (&mut cfg.class_csv, args.class_csv),
        (&mut cfg.loss_csv, args.loss_csv),
        (&mut cfg.points_csv, args.points_csv),
        (&mut cfg.out, args.out),
    ] {
        if value.is_some() {
            *slot = value;
        }
    }
    cfg.sweep |= args.sweep;
    cfg.labeled |= args.labeled;
    if args.inclusive_tail {
        cfg.convention = TailConvention::Inclusive;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::VerifyBounds(a) => (Experiment::VerifyBounds, a),
        Command::CompareExponents(a) => (Experiment::CompareExponents, a),
        Command::OracleCheck(a) => (Experiment::OracleCheck, a),
        Command::TransductiveErm(a) => (Experiment::TransductiveErm, a),
        Command::Localize(a) => (Experiment::Localize, a),
        Command::KernelBound(a) => (Experiment::KernelBound, a),
    };
    let outcome = build_config(experiment, args).and_then(|cfg| {
        let output = run(&cfg)?;
        let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        output.write(&dir)?;
        Ok((output, dir))
    });
    match outcome {
        Ok((output, dir)) => {
            let status = if output.report.passed { "PASS" } else { "FAIL" };
            println!(
                "{} {status} in {:.2}s, report written to {}",
                experiment.name(),
                output.report.wall_time_secs,
                dir.join("report.json").display()
            );
            if output.report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
