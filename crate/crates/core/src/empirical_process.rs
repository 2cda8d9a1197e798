//! Finite function classes on the ground set and the suprema
//! `Q_m = sup_f Σ f(X_i)` (with replacement) and `Q'_m = sup_f Σ f(Z_i)`
//! (without replacement).

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::ground_set::{
    derive_seed, enumerate_multisets, enumerate_without_replacement, power, GroundSet, RngStream,
    SampleScheme, Sampler, SamplingMode,
};
use crate::table::Table;

/// Absolute tolerance for the zero-mean check on centered rows.
pub const CENTERING_TOL: f64 = 1e-12;

/// An `M × N` table of function values, entry `(j, i) = f_j(c_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionClass {
    rows: usize,
    cols: usize,
    /// row-major
    values: Vec<f64>,
    /// point-major copy: the `M` values at point `i` are contiguous
    by_point: Vec<f64>,
    centered: bool,
}

impl FunctionClass {
    fn from_table(table: &Table, centered: bool) -> Self {
        let (rows, cols) = (table.rows(), table.cols());
        let values: Vec<f64> = table.iter_rows().flatten().copied().collect();
        let mut by_point = vec![0.0; rows * cols];
        for j in 0..rows {
            for i in 0..cols {
                by_point[i * rows + j] = values[j * cols + i];
            }
        }
        Self {
            rows,
            cols,
            values,
            by_point,
            centered,
        }
    }

    /// Wraps a table without centering it.
    pub fn raw(table: &Table) -> Self {
        Self::from_table(table, false)
    }

    /// Accepts rows that already satisfy the centered-class contract: zero
    /// population mean and values in `[-1, 1]`.
    pub fn centered_from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let table = Table::from_rows(rows)?;
        for (j, row) in table.iter_rows().enumerate() {
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            if mean.abs() > CENTERING_TOL {
                return Err(LabError::Domain(format!("row {j} has mean {mean:e}")));
            }
            if let Some(v) = row.iter().find(|v| v.abs() > 1.0) {
                return Err(LabError::Domain(format!(
                    "row {j} has value {v} outside [-1, 1]"
                )));
            }
        }
        Ok(Self::from_table(&table, true))
    }

    pub fn num_functions(&self) -> usize {
        self.rows
    }

    pub fn population_size(&self) -> usize {
        self.cols
    }

    pub fn ground_set(&self) -> GroundSet {
        GroundSet::new(self.cols).expect("tables have at least one column")
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.cols..(j + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.by_point[i * self.rows..(i + 1) * self.rows]
    }

    /// `sup_f Σ_{i ∈ sample} f(c_i)`, reusing `scratch` for the per-row sums.
    pub fn sup_process_with(&self, sample: &[usize], scratch: &mut Vec<f64>) -> f64 {
        if sample.is_empty() {
            return 0.0;
        }
        scratch.clear();
        scratch.resize(self.rows, 0.0);
        for &i in sample {
            for (acc, v) in scratch.iter_mut().zip(self.point(i)) {
                *acc += v;
            }
        }
        scratch.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_process(&self, sample: &[usize]) -> f64 {
        self.sup_process_with(sample, &mut Vec::new())
    }

    /// `σ² = max_j (1/N) Σ_i f_j(c_i)²`, the class variance of a centered class.
    pub fn class_variance(&self) -> f64 {
        self.rows()
            .map(|row| row.iter().map(|v| v * v).sum::<f64>() / self.cols as f64)
            .fold(0.0, f64::max)
    }
}

/// Centers each row at its population mean, then divides by
/// `max(1, max_i |f_j(c_i) - mean_j|)` so the range condition holds.
pub fn center_class(raw: &Table) -> FunctionClass {
    let n = raw.cols() as f64;
    let rows: Vec<Vec<f64>> = raw
        .iter_rows()
        .map(|row| {
            let mean = row.iter().sum::<f64>() / n;
            let mut centered: Vec<f64> = row.iter().map(|v| v - mean).collect();
            let scale = centered.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
            if scale > 1.0 {
                centered.iter_mut().for_each(|v| *v /= scale);
            }
            // constant rows can leave rounding residue
            if centered.iter().all(|v| v.abs() <= CENTERING_TOL) {
                centered.iter_mut().for_each(|v| *v = 0.0);
            }
            centered
        })
        .collect();
    let table = Table::from_rows(rows).expect("shape preserved");
    FunctionClass::from_table(&table, true)
}

/// A symmetric test class of `2 · pairs` functions `{±f_1, …, ±f_pairs}`.
/// Each `f_k` is a seeded random arrangement of `⌊N/2⌋` values `+s` and
/// `⌊N/2⌋` values `-s` (plus one zero when `N` is odd), with `s` chosen so
/// that the class variance equals `sigma2` whenever that is attainable.
pub fn balanced_sign_class(
    n: usize,
    sigma2: f64,
    pairs: usize,
    seed: u64,
) -> Result<FunctionClass> {
    if n < 2 || pairs == 0 {
        return Err(LabError::Config(
            "balanced class needs N >= 2 and at least one pair".into(),
        ));
    }
    if !(0.0..=1.0).contains(&sigma2) {
        return Err(LabError::Config(format!(
            "sigma2 = {sigma2} outside [0, 1]"
        )));
    }
    let half = n / 2;
    let s = (sigma2 * n as f64 / (2 * half) as f64).sqrt().min(1.0);
    let mut rows = Vec::with_capacity(2 * pairs);
    for k in 0..pairs {
        let mut rng = RngStream::new(seed, k as u64).rng();
        let mut signs: Vec<f64> = (0..n)
            .map(|i| match i {
                i if i < half => s,
                i if i < 2 * half => -s,
                _ => 0.0,
            })
            .collect();
        signs.shuffle(&mut rng);
        rows.push(signs.iter().map(|v| -v).collect());
        rows.push(signs);
    }
    FunctionClass::centered_from_rows(rows)
}

/// How an expectation of a supremum is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum ExpectationMethod {
    Exact { budget: u128 },
    MonteCarlo { trials: u64, seed: u64 },
}

/// A mean together with how it was computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub exact: bool,
    /// Number of Monte Carlo trials, or of enumerated items when exact.
    pub trials: u64,
}

impl Estimate {
    pub fn exact(mean: f64, items: u64) -> Self {
        Self {
            mean,
            std_error: 0.0,
            exact: true,
            trials: items,
        }
    }

    /// Sample mean and `sd / √n` with a fixed left-to-right summation order.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n).sqrt(),
            exact: false,
            trials: samples.len() as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupremumStats {
    /// estimate of `E[Q_m]`
    pub mean_with: f64,
    /// estimate of `E[Q'_m]`
    pub mean_without: f64,
    pub variance_sigma2: f64,
    pub exact: bool,
    pub trials: u64,
    pub std_error_with: f64,
    pub std_error_without: f64,
}

/// Draws `trials` independent samples under `scheme` and returns the supremum
/// for each. Trial `i` always uses stream `(seed, i)`, and the output is
/// ordered by trial index, so the result does not depend on the thread pool.
pub fn sample_sups(
    fc: &FunctionClass,
    scheme: &SampleScheme,
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let gs = fc.ground_set();
    scheme.validate(&gs)?;
    if trials == 0 {
        return Err(LabError::Config("trials must be positive".into()));
    }
    Ok((0..trials)
        .into_par_iter()
        .map_init(
            || (Sampler::new(&gs), Vec::with_capacity(scheme.m), Vec::new()),
            |(sampler, sample, scratch), i| {
                let mut rng = RngStream::new(seed, i).rng();
                sampler.draw_into(scheme, &mut rng, sample);
                fc.sup_process_with(sample, scratch)
            },
        )
        .collect())
}

/// Exact `E[Q'_m]` by averaging over every `m`-subset.
pub fn exact_sup_without(fc: &FunctionClass, m: usize, budget: u128) -> Result<Estimate> {
    let gs = fc.ground_set();
    SampleScheme::without_replacement(m).validate(&gs)?;
    let mut scratch = Vec::new();
    let mut total = 0.0;
    let mut count = 0u64;
    for subset in enumerate_without_replacement(&gs, m, budget)? {
        total += fc.sup_process_with(&subset, &mut scratch);
        count += 1;
    }
    Ok(Estimate::exact(total / count as f64, count))
}

/// Exact `E[Q_m]` over all `N^m` ordered draws, evaluated through multisets
/// weighted by their multiplicity.
pub fn exact_sup_with(fc: &FunctionClass, m: usize, budget: u128) -> Result<Estimate> {
    let gs = fc.ground_set();
    SampleScheme::with_replacement(m).validate(&gs)?;
    let mut scratch = Vec::new();
    let mut total = 0.0;
    let mut count = 0u64;
    for (multiset, weight) in enumerate_multisets(&gs, m, budget)? {
        total += weight as f64 * fc.sup_process_with(&multiset, &mut scratch);
        count += 1;
    }
    Ok(Estimate::exact(total / power(gs.size(), m) as f64, count))
}

/// Expectation of the supremum under one sampling scheme.
pub fn expected_sup_single(
    fc: &FunctionClass,
    scheme: &SampleScheme,
    method: &ExpectationMethod,
) -> Result<Estimate> {
    match *method {
        ExpectationMethod::Exact { budget } => match scheme.mode {
            SamplingMode::WithoutReplacement => exact_sup_without(fc, scheme.m, budget),
            SamplingMode::WithReplacement => exact_sup_with(fc, scheme.m, budget),
        },
        ExpectationMethod::MonteCarlo { trials, seed } => Ok(Estimate::from_samples(&sample_sups(
            fc, scheme, trials, seed,
        )?)),
    }
}

const STREAM_WITH: u64 = 0x5157;
const STREAM_WITHOUT: u64 = 0x5150;

/// `E[Q_m]`, `E[Q'_m]` and `σ²` for sample size `m`. In Monte Carlo mode the
/// two expectations use independent stream families derived from the seed.
pub fn expected_sup(
    fc: &FunctionClass,
    m: usize,
    method: &ExpectationMethod,
) -> Result<SupremumStats> {
    let per_mode = |label: u64| match *method {
        ExpectationMethod::MonteCarlo { trials, seed } => ExpectationMethod::MonteCarlo {
            trials,
            seed: derive_seed(seed, label),
        },
        exact => exact,
    };
    let with = expected_sup_single(
        fc,
        &SampleScheme::with_replacement(m),
        &per_mode(STREAM_WITH),
    )?;
    let without = expected_sup_single(
        fc,
        &SampleScheme::without_replacement(m),
        &per_mode(STREAM_WITHOUT),
    )?;
    Ok(SupremumStats {
        mean_with: with.mean,
        mean_without: without.mean,
        variance_sigma2: fc.class_variance(),
        exact: with.exact && without.exact,
        trials: match *method {
            ExpectationMethod::MonteCarlo { trials, .. } => trials,
            ExpectationMethod::Exact { .. } => with.trials + without.trials,
        },
        std_error_with: with.std_error,
        std_error_without: without.std_error,
    })
}
