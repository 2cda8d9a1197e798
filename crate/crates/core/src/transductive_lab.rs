//! Transductive learning over a finite hypothesis table: without-replacement
//! train/test splits, the training, test and overall risks, ERM, and the
//! generalization bounds derived from the concentration inequalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical_process::{expected_sup_single, Estimate, ExpectationMethod, FunctionClass};
use crate::error::{LabError, Result};
use crate::ground_set::{derive_seed, GroundSet, RngStream, SampleScheme, Sampler};
use crate::mc_verifier::{clopper_pearson_lower, clopper_pearson_upper};
use crate::table::Table;

/// Loss table `H × N`, entry `(h, i) = ℓ(h(X_i), φ(X_i)) ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransductiveProblem {
    loss: Table,
}

impl TransductiveProblem {
    pub fn new(loss: Table) -> Result<Self> {
        for (h, row) in loss.iter_rows().enumerate() {
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(LabError::Domain(format!(
                    "loss {v} of hypothesis {h} is outside [0, 1]"
                )));
            }
        }
        Ok(Self { loss })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Table::from_rows(rows)?)
    }

    pub fn population_size(&self) -> usize {
        self.loss.cols()
    }

    pub fn num_hypotheses(&self) -> usize {
        self.loss.rows()
    }

    pub fn loss(&self) -> &Table {
        &self.loss
    }

    pub fn loss_row(&self, h: usize) -> &[f64] {
        self.loss.row(h)
    }

    /// `L_N(h)` for every hypothesis.
    pub fn overall_risks(&self) -> Vec<f64> {
        let n = self.population_size() as f64;
        self.loss
            .iter_rows()
            .map(|r| r.iter().sum::<f64>() / n)
            .collect()
    }

    /// `σ²_H = max_h (1/N) Σ_X (ℓ_h(X) - L_N(h))²`
    pub fn sigma2_h(&self) -> f64 {
        let n = self.population_size() as f64;
        self.loss
            .iter_rows()
            .zip(self.overall_risks())
            .map(|(row, l)| row.iter().map(|v| (v - l).powi(2)).sum::<f64>() / n)
            .fold(0.0, f64::max)
    }

    /// The class `{L_N(h) - ℓ_h}`; its supremum over a sample of size `m` is
    /// `m · sup_h (L_N(h) - L̂_m(h))`.
    pub fn deviation_class(&self) -> Result<FunctionClass> {
        let rows = self
            .loss
            .iter_rows()
            .zip(self.overall_risks())
            .map(|(row, l)| row.iter().map(|v| l - v).collect())
            .collect();
        FunctionClass::centered_from_rows(rows)
    }

    /// Risks for the split whose training set is `train`.
    pub fn risks_for_train(&self, train: &[usize]) -> Result<SplitRisks> {
        let n = self.population_size();
        let m = train.len();
        if m == 0 || m >= n {
            return Err(LabError::Config(format!(
                "need 1 <= m < N for a split, got m = {m}, N = {n}"
            )));
        }
        let mut in_train = vec![false; n];
        for &i in train {
            if i >= n || in_train[i] {
                return Err(LabError::Config(format!(
                    "invalid or repeated training index {i}"
                )));
            }
            in_train[i] = true;
        }
        let mut train_indices = train.to_vec();
        train_indices.sort_unstable();
        let test_indices: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
        let u = test_indices.len();
        let mut l_hat_m = Vec::with_capacity(self.num_hypotheses());
        let mut l_u = Vec::with_capacity(self.num_hypotheses());
        let mut l_n = Vec::with_capacity(self.num_hypotheses());
        for row in self.loss.iter_rows() {
            let s_train: f64 = train_indices.iter().map(|&i| row[i]).sum();
            let s_test: f64 = test_indices.iter().map(|&i| row[i]).sum();
            l_hat_m.push(s_train / m as f64);
            l_u.push(s_test / u as f64);
            l_n.push(row.iter().sum::<f64>() / n as f64);
        }
        Ok(SplitRisks {
            train_indices,
            test_indices,
            l_hat_m,
            l_u,
            l_n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRisks {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// training risk `L̂_m(h)`
    pub l_hat_m: Vec<f64>,
    /// test risk `L_u(h)`
    pub l_u: Vec<f64>,
    /// overall risk `L_N(h)`
    pub l_n: Vec<f64>,
}

impl SplitRisks {
    pub fn m(&self) -> usize {
        self.train_indices.len()
    }

    pub fn u(&self) -> usize {
        self.test_indices.len()
    }

    /// `sup_h (L_N(h) - L̂_m(h))`
    pub fn sup_deviation(&self) -> f64 {
        self.l_n
            .iter()
            .zip(&self.l_hat_m)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Draws a uniform without-replacement training set of size `m`.
pub fn split_and_risks(
    tp: &TransductiveProblem,
    m: usize,
    stream: RngStream,
) -> Result<SplitRisks> {
    let n = tp.population_size();
    if m == 0 || m >= n {
        return Err(LabError::Config(format!(
            "need 1 <= m < N for a split, got m = {m}, N = {n}"
        )));
    }
    let gs = GroundSet::new(n)?;
    let mut train = Vec::with_capacity(m);
    Sampler::new(&gs).draw_into(
        &SampleScheme::without_replacement(m),
        &mut stream.rng(),
        &mut train,
    );
    tp.risks_for_train(&train)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErmOutcome {
    /// training-risk minimizer
    pub h_hat_m: usize,
    /// test-risk minimizer
    pub h_star_u: usize,
    /// overall-risk minimizer
    pub h_star_n: usize,
    /// `L_u(ĥ_m) - L_u(h*_u)`
    pub excess_risk: f64,
}

/// Index of the smallest entry; ties go to the lowest index.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

pub fn erm(sr: &SplitRisks) -> ErmOutcome {
    let h_hat_m = argmin(&sr.l_hat_m);
    let h_star_u = argmin(&sr.l_u);
    ErmOutcome {
        h_hat_m,
        h_star_u,
        h_star_n: argmin(&sr.l_n),
        excess_risk: sr.l_u[h_hat_m] - sr.l_u[h_star_u],
    }
}

fn scaled(est: Estimate, m: usize) -> Estimate {
    Estimate {
        mean: est.mean / m as f64,
        std_error: est.std_error / m as f64,
        ..est
    }
}

/// `E[sup_h (L_N(h) - L̂_m(h))]` over without-replacement training sets.
pub fn sup_expectation(
    tp: &TransductiveProblem,
    m: usize,
    method: &ExpectationMethod,
) -> Result<Estimate> {
    let fc = tp.deviation_class()?;
    Ok(scaled(
        expected_sup_single(&fc, &SampleScheme::without_replacement(m), method)?,
        m,
    ))
}

/// `E_m = E[sup_h (L_N(h) - (1/m) Σ ℓ_h(ξ_i))]` over with-replacement draws.
pub fn with_replacement_expectation(
    tp: &TransductiveProblem,
    m: usize,
    method: &ExpectationMethod,
) -> Result<Estimate> {
    let fc = tp.deviation_class()?;
    Ok(scaled(
        expected_sup_single(&fc, &SampleScheme::with_replacement(m), method)?,
        m,
    ))
}

/// `E[sup(L_N - L̂_m)] + 2 √(2 (N/m²) σ²_H t)`
pub fn gen_bound_subgaussian(
    n: usize,
    m: usize,
    sigma2_h: f64,
    t: f64,
    sup_expectation: f64,
) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    sup_expectation + 2.0 * (2.0 * (nf / (mf * mf)) * sigma2_h * t).sqrt()
}

/// `2 E_m + √(2 σ²_H t / m) + 4t / (3m)`
pub fn gen_bound_bennett(m: usize, sigma2_h: f64, t: f64, e_m: f64) -> f64 {
    let mf = m as f64;
    2.0 * e_m + (2.0 * sigma2_h * t / mf).sqrt() + 4.0 * t / (3.0 * mf)
}

/// Violation frequency of a high-probability statement over repeated splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityCheck {
    pub statement: String,
    pub t: f64,
    pub bound: f64,
    pub violations: u64,
    pub splits: u64,
    pub frequency: f64,
    pub lower_ci: f64,
    pub upper_ci: f64,
    /// the failure probability the statement allows, `e^{-t}` or `2e^{-t}`
    pub guarantee: f64,
    pub passed: bool,
}

impl ValidityCheck {
    pub fn from_counts(
        statement: &str,
        t: f64,
        bound: f64,
        violations: u64,
        splits: u64,
        guarantee: f64,
        delta: f64,
    ) -> Self {
        let lower_ci = clopper_pearson_lower(violations, splits, delta);
        Self {
            statement: statement.to_string(),
            t,
            bound,
            violations,
            splits,
            frequency: violations as f64 / splits as f64,
            lower_ci,
            upper_ci: clopper_pearson_upper(violations, splits, delta),
            guarantee,
            passed: lower_ci <= guarantee,
        }
    }
}

/// Runs `f` on split `i = 0..splits` (training set from stream `(seed, i)`),
/// returning results in split order.
pub fn map_splits<T: Send>(
    tp: &TransductiveProblem,
    m: usize,
    splits: u64,
    seed: u64,
    f: impl Fn(&SplitRisks) -> T + Sync,
) -> Result<Vec<T>> {
    if splits == 0 {
        return Err(LabError::Config("number of splits must be positive".into()));
    }
    (0..splits)
        .into_par_iter()
        .map(|i| split_and_risks(tp, m, RngStream::new(seed, i)).map(|sr| f(&sr)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub n: usize,
    pub m: usize,
    pub sigma2_h: f64,
    pub sup_expectation: Estimate,
    pub e_m: Estimate,
    pub checks: Vec<ValidityCheck>,
    pub passed: bool,
}

fn reseeded(method: &ExpectationMethod, label: u64) -> ExpectationMethod {
    match *method {
        ExpectationMethod::MonteCarlo { trials, seed } => ExpectationMethod::MonteCarlo {
            trials,
            seed: derive_seed(seed, label),
        },
        exact => exact,
    }
}

/// Checks both uniform deviation bounds on `splits` random splits.
pub fn generalization_validity(
    tp: &TransductiveProblem,
    m: usize,
    t_grid: &[f64],
    splits: u64,
    seed: u64,
    method: &ExpectationMethod,
    delta: f64,
) -> Result<GeneralizationReport> {
    let n = tp.population_size();
    let sigma2_h = tp.sigma2_h();
    let sup_exp = sup_expectation(tp, m, &reseeded(method, 0x7157))?;
    let e_m = with_replacement_expectation(tp, m, &reseeded(method, 0x7150))?;
    let sups = map_splits(tp, m, splits, seed, SplitRisks::sup_deviation)?;
    let mut checks = Vec::new();
    for &t in t_grid {
        let b5 = gen_bound_subgaussian(n, m, sigma2_h, t, sup_exp.mean);
        let b6 = gen_bound_bennett(m, sigma2_h, t, e_m.mean);
        for (name, bound) in [
            ("uniform_deviation_subgaussian", b5),
            ("uniform_deviation_bennett", b6),
        ] {
            let k = sups.iter().filter(|&&s| s > bound).count() as u64;
            checks.push(ValidityCheck::from_counts(
                name,
                t,
                bound,
                k,
                splits,
                (-t).exp(),
                delta,
            ));
        }
    }
    Ok(GeneralizationReport {
        n,
        m,
        sigma2_h,
        sup_expectation: sup_exp,
        e_m,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// A 4 × 12 zero-one loss table with distinct overall risks
/// `(3, 4, 5, 6) / 12`, small enough for exhaustive enumeration.
pub fn demo_problem() -> TransductiveProblem {
    let errors: [&[usize]; 4] = [
        &[0, 1, 2],
        &[0, 3, 4, 5],
        &[6, 7, 8, 9, 10],
        &[1, 2, 3, 4, 5, 11],
    ];
    let rows = errors
        .iter()
        .map(|errs| {
            (0..12)
                .map(|i| if errs.contains(&i) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    TransductiveProblem::from_rows(rows).expect("valid demo table")
}
