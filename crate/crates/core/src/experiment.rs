//! Batch experiments: configuration, orchestration and report emission.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::empirical_process::{
    balanced_sign_class, center_class, exact_sup_with, exact_sup_without, Estimate,
    ExpectationMethod, FunctionClass,
};
use crate::error::{LabError, Result};
use crate::ground_set::{binomial, derive_seed, RngStream};
use crate::inequality_bank::{compare_exponents, gap_bound, ExactRates, ExponentForm};
use crate::kernel_complexity::{
    eigen_spectrum, gram_matrix, kernel_hypothesis_table, synthetic_points, tailsum_bound,
    KernelKind, KernelSpec, PointLoss, TailConvention,
};
use crate::localization::{
    self, build_excess_class, compute_b, localized_validity, LocalizeSetup, SubRootBound,
};
use crate::mc_verifier::{verify_configuration, write_curve_csv, VerifyOutcome, VerifySetup};
use crate::table::Table;
use crate::transductive_lab::{
    demo_problem, erm, generalization_validity, map_splits, TransductiveProblem,
};

/// Largest population accepted by any experiment.
pub const MAX_POPULATION: usize = 1_000_000;
/// Largest number of Monte Carlo trials or splits.
pub const MAX_TRIALS: u64 = 100_000_000;
/// Largest point set for the kernel experiment.
pub const MAX_KERNEL_POINTS: usize = 2_000;
/// Largest population for exhaustive oracle checks.
pub const MAX_ORACLE_POPULATION: usize = 12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[default]
    VerifyBounds,
    CompareExponents,
    OracleCheck,
    TransductiveErm,
    Localize,
    KernelBound,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::VerifyBounds => "verify-bounds",
            Experiment::CompareExponents => "compare-exponents",
            Experiment::OracleCheck => "oracle-check",
            Experiment::TransductiveErm => "transductive-erm",
            Experiment::Localize => "localize",
            Experiment::KernelBound => "kernel-bound",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    #[default]
    Gaussian,
    Linear,
    Polynomial,
    Delta,
}

/// Every knob of every experiment. Keys not relevant to the chosen
/// experiment are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// population size (verify-bounds, compare-exponents, oracle-check, kernel-bound)
    pub n: usize,
    /// sample size; defaults to half the population
    pub m: Option<usize>,
    /// Monte Carlo trials per estimate
    pub trials: u64,
    pub sigma2: f64,
    /// number of `±f` pairs in the verification class
    pub pairs: usize,
    pub t_grid: Option<Vec<f64>>,
    pub eps_grid: Option<Vec<f64>>,
    /// deviation at which exponents are compared
    pub eps: f64,
    pub delta: f64,
    pub budget: u64,
    /// sub-Gaussian exponent constant; anything but 8 is a deliberately
    /// corrupted bound used as a power check
    pub subgaussian_constant: f64,
    /// run the full `N × m/N × σ²` verification grid
    pub sweep: bool,
    pub classes: usize,
    pub functions: usize,
    pub class_csv: Option<PathBuf>,
    pub loss_csv: Option<PathBuf>,
    pub splits: u64,
    pub grid_points: usize,
    pub bennett_k: f64,
    pub gap_k: f64,
    pub points_csv: Option<PathBuf>,
    /// the last column of `points_csv` holds labels
    pub labeled: bool,
    pub dim: usize,
    pub kernel: KernelChoice,
    pub bandwidth: f64,
    pub degree: u32,
    pub offset: f64,
    pub c_l: f64,
    pub convention: TailConvention,
    pub net_size: usize,
    pub loss: PointLoss,
    /// worker threads; 0 lets the pool decide
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::default(),
            seed: 0,
            n: 100,
            m: None,
            trials: 100_000,
            sigma2: 0.1,
            pairs: 10,
            t_grid: None,
            eps_grid: None,
            eps: 1.0,
            delta: crate::mc_verifier::DEFAULT_DELTA,
            budget: crate::ground_set::DEFAULT_ENUMERATION_BUDGET as u64,
            subgaussian_constant: 8.0,
            sweep: false,
            classes: 20,
            functions: 5,
            class_csv: None,
            loss_csv: None,
            splits: 10_000,
            grid_points: 12,
            bennett_k: localization::DEFAULT_BENNETT_K,
            gap_k: localization::DEFAULT_GAP_K,
            points_csv: None,
            labeled: false,
            dim: 3,
            kernel: KernelChoice::default(),
            bandwidth: 1.0,
            degree: 2,
            offset: 1.0,
            c_l: 1.0,
            convention: TailConvention::default(),
            net_size: 0,
            loss: PointLoss::default(),
            threads: 0,
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses a `key = value` file (TOML syntax).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    fn t_grid_or(&self, default: &[f64]) -> Vec<f64> {
        self.t_grid.clone().unwrap_or_else(|| default.to_vec())
    }

    fn m_or_half(&self, n: usize) -> usize {
        self.m.unwrap_or(n / 2)
    }

    fn expectation_method(&self) -> ExpectationMethod {
        ExpectationMethod::Exact {
            budget: self.budget as u128,
        }
    }

    /// Checks ranges shared by all experiments.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(LabError::Config(msg));
        if self.n == 0 || self.n > MAX_POPULATION {
            return fail(format!("n = {} outside 1..={MAX_POPULATION}", self.n));
        }
        if self.trials == 0 || self.trials > MAX_TRIALS {
            return fail(format!("trials = {} outside 1..={MAX_TRIALS}", self.trials));
        }
        if self.splits == 0 || self.splits > MAX_TRIALS {
            return fail(format!("splits = {} outside 1..={MAX_TRIALS}", self.splits));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta = {} outside (0, 1)", self.delta));
        }
        if !(self.subgaussian_constant > 0.0) {
            return fail("subgaussian_constant must be positive".into());
        }
        for t in self.t_grid.iter().flatten() {
            if !(*t >= 0.0 && t.is_finite()) {
                return fail(format!("t-grid entry {t} must be finite and nonnegative"));
            }
        }
        if let Some(g) = &self.eps_grid {
            if g.is_empty() || g.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
                return fail("eps-grid entries must be finite and nonnegative".into());
            }
        }
        if self.m == Some(0) {
            return fail("m must be positive".into());
        }
        Ok(())
    }

    fn load_problem(&self) -> Result<TransductiveProblem> {
        match &self.loss_csv {
            Some(path) => TransductiveProblem::new(Table::from_csv_path(path)?),
            None => Ok(demo_problem()),
        }
    }
}

/// The numeric constants every bound in the report was evaluated with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantSet {
    pub subgaussian_constant: f64,
    pub excess_subgaussian: [f64; 2],
    pub excess_bennett: [f64; 3],
    pub risk_gap: [f64; 2],
    pub bennett_k: f64,
    pub gap_k: f64,
}

impl ConstantSet {
    fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            subgaussian_constant: config.subgaussian_constant,
            excess_subgaussian: [
                localization::SUBGAUSSIAN_R_COEF,
                localization::SUBGAUSSIAN_T_COEF,
            ],
            excess_bennett: [
                localization::BENNETT_R_COEF,
                localization::BENNETT_T_CONST,
                localization::BENNETT_T_B_COEF,
            ],
            risk_gap: [localization::GAP_R_COEF, localization::GAP_T_COEF],
            bennett_k: config.bennett_k,
            gap_k: config.gap_k,
        }
    }
}

/// How one expectation in the report was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub quantity: String,
    pub exact: bool,
    /// Monte Carlo trials, or enumerated items when exact
    pub trials: u64,
}

impl Provenance {
    fn of(quantity: impl Into<String>, est: &Estimate) -> Self {
        Self {
            quantity: quantity.into(),
            exact: est.exact,
            trials: est.trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub constants: ConstantSet,
    pub results: Value,
    pub provenance: Vec<Provenance>,
    pub passed: bool,
    pub wall_time_secs: f64,
}

/// A finished run: the report plus CSV plot data keyed by file name.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub curves: BTreeMap<String, Vec<u8>>,
}

impl RunOutput {
    /// Writes `report.json` and every curve file into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_vec_pretty(&self.report)?;
        std::fs::write(dir.join("report.json"), json)?;
        for (name, bytes) in &self.curves {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }

    /// The deterministic part of the report, serialized.
    pub fn results_bytes(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(&self.report.results)?)
    }
}

struct Payload {
    results: Value,
    provenance: Vec<Provenance>,
    passed: bool,
    curves: BTreeMap<String, Vec<u8>>,
}

/// Runs the configured experiment on a pool of `config.threads` workers.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let payload = pool.install(|| match config.experiment {
        Experiment::VerifyBounds => run_verify(config),
        Experiment::CompareExponents => run_compare(config),
        Experiment::OracleCheck => run_oracle(config),
        Experiment::TransductiveErm => run_transductive(config),
        Experiment::Localize => run_localize(config),
        Experiment::KernelBound => run_kernel(config),
    })?;
    Ok(RunOutput {
        report: RunReport {
            experiment: config.experiment,
            config: config.clone(),
            constants: ConstantSet::from_config(config),
            results: payload.results,
            provenance: payload.provenance,
            passed: payload.passed,
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
        curves: payload.curves,
    })
}

/// The `N × m/N × σ²` grid used by the sweep: `N ∈ {20, 100, 1000}`,
/// `m ∈ {N/10, N/2, 9N/10}`, `σ² ∈ {0.01, 0.1, 0.25}`.
pub fn verification_grid() -> Vec<(usize, usize, f64)> {
    let mut grid = Vec::new();
    for n in [20usize, 100, 1000] {
        for m in [n / 10, n / 2, 9 * n / 10] {
            for sigma2 in [0.01, 0.1, 0.25] {
                grid.push((n, m, sigma2));
            }
        }
    }
    grid
}

fn verify_one(
    config: &ExperimentConfig,
    n: usize,
    m: usize,
    sigma2: f64,
    index: u64,
) -> Result<VerifyOutcome> {
    let fc = balanced_sign_class(
        n,
        sigma2,
        config.pairs,
        derive_seed(config.seed, 0xC1A5 + index),
    )?;
    let setup = VerifySetup {
        trials: config.trials,
        center_trials: config.trials,
        seed: derive_seed(config.seed, index),
        eps_grid: config.eps_grid.clone(),
        t_grid: config.t_grid_or(&[1.0, 2.0, 4.0]),
        delta: config.delta,
        subgaussian_constant: config.subgaussian_constant,
        budget: config.budget as u128,
    };
    verify_configuration(&fc, m, &setup)
}

fn curve_bytes(outcome: &VerifyOutcome) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, &outcome.curve_eq_prime, &outcome.params())?;
    Ok(buf)
}

fn run_verify(config: &ExperimentConfig) -> Result<Payload> {
    let configs = if config.sweep {
        verification_grid()
    } else {
        let m = config.m_or_half(config.n);
        if m > config.n {
            return Err(LabError::Config(format!(
                "m = {m} exceeds N = {}",
                config.n
            )));
        }
        vec![(config.n, m, config.sigma2)]
    };
    let mut outcomes = Vec::new();
    let mut curves = BTreeMap::new();
    let mut provenance = Vec::new();
    for (i, &(n, m, sigma2)) in configs.iter().enumerate() {
        let outcome = verify_one(config, n, m, sigma2, i as u64)?;
        let name = if config.sweep {
            format!("curves_n{n}_m{m}_s{sigma2}.csv")
        } else {
            "curves.csv".to_string()
        };
        curves.insert(name, curve_bytes(&outcome)?);
        provenance.push(Provenance::of(
            format!("E[Q'_m] (N={n}, m={m}, sigma2={sigma2})"),
            &outcome.eq_prime,
        ));
        provenance.push(Provenance::of(
            format!("E[Q_m] (N={n}, m={m}, sigma2={sigma2})"),
            &outcome.eq,
        ));
        outcomes.push(outcome);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    Ok(Payload {
        results: json!({ "configurations": outcomes }),
        provenance,
        passed,
        curves,
    })
}

fn run_compare(config: &ExperimentConfig) -> Result<Payload> {
    let n = config.n;
    let m = config.m_or_half(n);
    let report = compare_exponents(n, m, config.sigma2, config.eps)?;
    let exact_crossover = (m < n).then(|| ExactRates::simplified_crossover(n, m).to_string());
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "sigma2",
        "rate_subgaussian",
        "rate_subgaussian_loose",
        "rate_elyaniv_pechyony",
    ])?;
    let points = 50;
    let (lo, hi): (f64, f64) = (1e-3, 0.25);
    for i in 0..points {
        let s2 = lo * (hi / lo).powf(i as f64 / (points - 1) as f64);
        let r = compare_exponents(n, m, s2, 1.0)?;
        let rate = |form| {
            r.entries
                .iter()
                .find(|e| e.form == form)
                .map(|e| -e.exponent)
                .expect("every form is reported")
        };
        wtr.write_record([
            s2.to_string(),
            rate(ExponentForm::SubGaussian).to_string(),
            rate(ExponentForm::SubGaussianLoose).to_string(),
            rate(ExponentForm::ElYanivPechyony).to_string(),
        ])?;
    }
    let curves = BTreeMap::from([(
        "curves.csv".to_string(),
        wtr.into_inner().map_err(|e| e.into_error())?,
    )]);
    Ok(Payload {
        results: json!({ "comparison": report, "simplified_crossover_exact": exact_crossover }),
        provenance: Vec::new(),
        passed: true,
        curves,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OracleRow {
    class: usize,
    m: usize,
    eq_prime: f64,
    eq: f64,
    gap: f64,
    gap_bound: f64,
    ordered: bool,
    gap_ok: bool,
}

/// Random centered classes of `functions` rows over `n` points.
pub fn random_centered_classes(
    n: usize,
    functions: usize,
    classes: usize,
    seed: u64,
) -> Result<Vec<FunctionClass>> {
    (0..classes)
        .map(|c| {
            let mut rng = RngStream::new(seed, c as u64).rng();
            let rows: Vec<Vec<f64>> = (0..functions)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
                .collect();
            Ok(center_class(&Table::from_rows(rows)?))
        })
        .collect()
}

fn run_oracle(config: &ExperimentConfig) -> Result<Payload> {
    let classes = match &config.class_csv {
        Some(path) => vec![center_class(&Table::from_csv_path(path)?)],
        None => {
            if config.functions == 0 || config.classes == 0 {
                return Err(LabError::Config(
                    "oracle check needs at least one class and function".into(),
                ));
            }
            random_centered_classes(config.n, config.functions, config.classes, config.seed)?
        }
    };
    let n = classes[0].population_size();
    if n > MAX_ORACLE_POPULATION {
        return Err(LabError::Config(format!(
            "oracle check enumerates every sample; N = {n} exceeds {MAX_ORACLE_POPULATION}"
        )));
    }
    let ms: Vec<usize> = match config.m {
        Some(m) if m <= n => vec![m],
        Some(m) => return Err(LabError::Config(format!("m = {m} exceeds N = {n}"))),
        None => (1..=n).collect(),
    };
    let budget = config.budget as u128;
    let mut rows = Vec::new();
    let mut provenance = Vec::new();
    for (c, fc) in classes.iter().enumerate() {
        for &m in &ms {
            let without = exact_sup_without(fc, m, budget)?;
            let with = exact_sup_with(fc, m, budget)?;
            provenance.push(Provenance::of(
                format!("E[Q'_m] (class {c}, m={m})"),
                &without,
            ));
            provenance.push(Provenance::of(format!("E[Q_m] (class {c}, m={m})"), &with));
            let gap = with.mean - without.mean;
            let bound = gap_bound(n, m);
            rows.push(OracleRow {
                class: c,
                m,
                eq_prime: without.mean,
                eq: with.mean,
                gap,
                gap_bound: bound,
                ordered: without.mean <= with.mean + 1e-12,
                gap_ok: gap <= bound + 1e-12,
            });
        }
    }
    let passed = rows.iter().all(|r| r.ordered && r.gap_ok);
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        wtr.serialize(r)?;
    }
    let curves = BTreeMap::from([(
        "curves.csv".to_string(),
        wtr.into_inner().map_err(|e| e.into_error())?,
    )]);
    Ok(Payload {
        results: json!({ "n": n, "subsets_per_m": ms.iter().map(|&m| binomial(n, m).to_string()).collect::<Vec<_>>(), "rows": rows }),
        provenance,
        passed,
        curves,
    })
}

fn run_transductive(config: &ExperimentConfig) -> Result<Payload> {
    let tp = config.load_problem()?;
    let m = config.m_or_half(tp.population_size());
    let method = match config.expectation_method() {
        ExpectationMethod::Exact { budget } if enumerable(&tp, m, budget) => {
            ExpectationMethod::Exact { budget }
        }
        _ => ExpectationMethod::MonteCarlo {
            trials: config.trials,
            seed: derive_seed(config.seed, 0xE5),
        },
    };
    let report = generalization_validity(
        &tp,
        m,
        &config.t_grid_or(&[1.0, 2.0, 3.0]),
        config.splits,
        config.seed,
        &method,
        config.delta,
    )?;
    let excess = map_splits(&tp, m, config.splits, config.seed, |sr| erm(sr).excess_risk)?;
    let mean_excess = excess.iter().sum::<f64>() / excess.len() as f64;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for c in &report.checks {
        wtr.serialize(c)?;
    }
    let curves = BTreeMap::from([(
        "curves.csv".to_string(),
        wtr.into_inner().map_err(|e| e.into_error())?,
    )]);
    Ok(Payload {
        provenance: vec![
            Provenance::of("E[sup_h (L_N - L_m)]", &report.sup_expectation),
            Provenance::of("E_m (with replacement)", &report.e_m),
        ],
        passed: report.passed,
        results: json!({ "generalization": report, "mean_excess_risk": mean_excess }),
        curves,
    })
}

fn enumerable(tp: &TransductiveProblem, m: usize, budget: u128) -> bool {
    let n = tp.population_size();
    m <= n && binomial(n, m) <= budget && binomial(n + m - 1, m) <= budget
}

fn subroot_rows(wtr: &mut csv::Writer<Vec<u8>>, label: &str, fit: &SubRootBound) -> Result<()> {
    for p in &fit.grid {
        wtr.write_record([
            label.to_string(),
            p.r.to_string(),
            p.psi.to_string(),
            p.std_error.to_string(),
            fit.psi(p.r).to_string(),
        ])?;
    }
    Ok(())
}

fn run_localize(config: &ExperimentConfig) -> Result<Payload> {
    let tp = config.load_problem()?;
    let n = tp.population_size();
    let m = config.m_or_half(n);
    let budget = config.budget as u128;
    let method = if enumerable(&tp, m.max(n.saturating_sub(m)), budget) {
        ExpectationMethod::Exact { budget }
    } else {
        ExpectationMethod::MonteCarlo {
            trials: config.trials,
            seed: derive_seed(config.seed, 0x10C),
        }
    };
    let setup = LocalizeSetup {
        splits: config.splits,
        seed: config.seed,
        t_grid: config.t_grid_or(&[1.0, 2.0]),
        grid_points: config.grid_points,
        method,
        bennett_k: config.bennett_k,
        gap_k: config.gap_k,
        delta: config.delta,
    };
    let report = localized_validity(&tp, m, &setup)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["fit", "r", "psi_hat", "std_error", "majorant"])?;
    subroot_rows(&mut wtr, "train_without", &report.subroot_m)?;
    subroot_rows(&mut wtr, "test_without", &report.subroot_u)?;
    subroot_rows(&mut wtr, "train_with", &report.subroot_m_with)?;
    subroot_rows(&mut wtr, "test_with", &report.subroot_u_with)?;
    let curves = BTreeMap::from([(
        "curves.csv".to_string(),
        wtr.into_inner().map_err(|e| e.into_error())?,
    )]);
    let exact = matches!(method, ExpectationMethod::Exact { .. });
    let trials = match method {
        ExpectationMethod::MonteCarlo { trials, .. } => trials,
        ExpectationMethod::Exact { .. } => 0,
    };
    let provenance = ["train_without", "test_without", "train_with", "test_with"]
        .iter()
        .map(|fit| Provenance {
            quantity: format!("localized modulus ({fit})"),
            exact,
            trials,
        })
        .collect();
    Ok(Payload {
        passed: report.passed,
        results: json!({ "localization": report }),
        provenance,
        curves,
    })
}

fn run_kernel(config: &ExperimentConfig) -> Result<Payload> {
    let (points, labels) = match &config.points_csv {
        Some(path) => {
            let table = Table::from_csv_path(path)?;
            if config.labeled {
                if table.cols() < 2 {
                    return Err(LabError::Input(
                        "labeled points need at least two columns".into(),
                    ));
                }
                let d = table.cols() - 1;
                let labels = table.iter_rows().map(|r| r[d]).collect();
                let feats = Table::from_rows(table.iter_rows().map(|r| r[..d].to_vec()).collect())?;
                (feats, Some(labels))
            } else {
                (table, None)
            }
        }
        None => {
            let (p, l) = synthetic_points(config.n, config.dim, config.seed)?;
            (p, Some(l))
        }
    };
    let n = points.rows();
    if n > MAX_KERNEL_POINTS {
        return Err(LabError::Config(format!(
            "{n} points exceed the kernel budget of {MAX_KERNEL_POINTS}"
        )));
    }
    let m = config.m_or_half(n);
    if m == 0 || m > n {
        return Err(LabError::Config(format!(
            "need 1 <= m <= N, got m = {m}, N = {n}"
        )));
    }
    let kind = match config.kernel {
        KernelChoice::Gaussian => KernelKind::Gaussian {
            bandwidth: config.bandwidth,
        },
        KernelChoice::Linear => KernelKind::Linear,
        KernelChoice::Polynomial => KernelKind::Polynomial {
            degree: config.degree,
            offset: config.offset,
        },
        KernelChoice::Delta => KernelKind::Delta,
    };
    let spec = KernelSpec::normalized(kind, &points)?;
    let gram = gram_matrix(&points, &spec)?;
    let spectrum = eigen_spectrum(&gram)?;
    let mut bounds = vec![tailsum_bound(&spectrum, m, config.c_l, config.convention)?];
    if m < n {
        bounds.push(tailsum_bound(
            &spectrum,
            n - m,
            config.c_l,
            config.convention,
        )?);
    }
    let bernstein = match (&labels, config.net_size) {
        (Some(labels), size) if size > 0 => {
            let net =
                kernel_hypothesis_table(&points, labels, &spec, size, config.loss, config.seed)?;
            Some(compute_b(&build_excess_class(&net.problem)))
        }
        _ => None,
    };
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["index", "lambda"])?;
    for (i, l) in spectrum.lambdas.iter().enumerate() {
        wtr.write_record([(i + 1).to_string(), l.to_string()])?;
    }
    let curves = BTreeMap::from([(
        "curves.csv".to_string(),
        wtr.into_inner().map_err(|e| e.into_error())?,
    )]);
    Ok(Payload {
        results: json!({
            "n": n,
            "m": m,
            "kernel": spec,
            "trace": gram.trace(),
            "spectrum": spectrum,
            "tailsum": bounds,
            "bernstein": bernstein,
        }),
        provenance: Vec::new(),
        passed: true,
        curves,
    })
}
