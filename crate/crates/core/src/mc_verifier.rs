//! Monte Carlo tail estimates with exact binomial confidence bounds, and the
//! checks that analytic bounds dominate them.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::empirical_process::{
    exact_sup_with, exact_sup_without, sample_sups, Estimate, FunctionClass,
};
use crate::error::{LabError, Result};
use crate::ground_set::{
    derive_seed, enumerate_without_replacement, SampleScheme, SamplingMode,
    DEFAULT_ENUMERATION_BUDGET,
};
use crate::inequality_bank::{
    tail_bousquet, tail_elyaniv_pechyony, tail_subgaussian, tail_subgaussian_with_constant,
    tail_talagrand_swor, Bound, BoundParams, Center,
};

/// Confidence parameter for every one-sided interval in this module.
pub const DEFAULT_DELTA: f64 = 0.01;

fn invert_increasing(target: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One-sided Clopper–Pearson upper bound: the `p` with
/// `P{Bin(n, p) ≤ k} = δ`.
pub fn clopper_pearson_upper(k: u64, n: u64, delta: f64) -> f64 {
    assert!(k <= n && n > 0, "need 0 <= k <= n, n > 0");
    if k == n {
        return 1.0;
    }
    // P{Bin ≤ k} = 1 - I_p(k+1, n-k), decreasing in p
    let (a, b) = ((k + 1) as f64, (n - k) as f64);
    invert_increasing(1.0 - delta, |p| beta_reg(a, b, p))
}

/// One-sided Clopper–Pearson lower bound: the `p` with
/// `P{Bin(n, p) ≥ k} = δ`.
pub fn clopper_pearson_lower(k: u64, n: u64, delta: f64) -> f64 {
    assert!(k <= n && n > 0, "need 0 <= k <= n, n > 0");
    if k == 0 {
        return 0.0;
    }
    // P{Bin ≥ k} = I_p(k, n-k+1), increasing in p
    let (a, b) = (k as f64, (n - k + 1) as f64);
    invert_increasing(delta, |p| beta_reg(a, b, p))
}

/// The expectation a curve is centered at, with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    pub center: Center,
    pub value: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub eps_grid: Vec<f64>,
    pub exceedances: Vec<u64>,
    pub tail_estimate: Vec<f64>,
    pub upper_ci: Vec<f64>,
    pub lower_ci: Vec<f64>,
    pub trials: u64,
    pub delta: f64,
    pub centering: Centering,
}

impl TailCurve {
    /// Builds the curve from already sampled suprema.
    pub fn from_sups(
        sups: &[f64],
        eps_grid: &[f64],
        centering: Centering,
        delta: f64,
    ) -> Result<Self> {
        if sups.is_empty() {
            return Err(LabError::Config("trials must be positive".into()));
        }
        if eps_grid.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(LabError::Config("eps grid must be ascending".into()));
        }
        let mut devs: Vec<f64> = sups.iter().map(|q| q - centering.value.mean).collect();
        devs.sort_by(f64::total_cmp);
        let n = sups.len() as u64;
        let exceedances: Vec<u64> = eps_grid
            .iter()
            .map(|&eps| (devs.len() - devs.partition_point(|&d| d < eps)) as u64)
            .collect();
        Ok(Self {
            eps_grid: eps_grid.to_vec(),
            tail_estimate: exceedances.iter().map(|&k| k as f64 / n as f64).collect(),
            upper_ci: exceedances
                .iter()
                .map(|&k| clopper_pearson_upper(k, n, delta))
                .collect(),
            lower_ci: exceedances
                .iter()
                .map(|&k| clopper_pearson_lower(k, n, delta))
                .collect(),
            exceedances,
            trials: n,
            delta,
            centering,
        })
    }
}

/// Samples `Q'_m` `trials` times and tabulates `P{Q'_m - center ≥ ε}`.
pub fn estimate_tail(
    fc: &FunctionClass,
    m: usize,
    eps_grid: &[f64],
    trials: u64,
    centering: Centering,
    seed: u64,
) -> Result<TailCurve> {
    let sups = sample_sups(fc, &SampleScheme::without_replacement(m), trials, seed)?;
    TailCurve::from_sups(&sups, eps_grid, centering, DEFAULT_DELTA)
}

/// Exact `P{Q'_m - center ≥ ε}` by enumerating every `m`-subset.
pub fn exact_tail(
    fc: &FunctionClass,
    m: usize,
    eps_grid: &[f64],
    center: f64,
    budget: u128,
) -> Result<Vec<f64>> {
    let mut scratch = Vec::new();
    let devs: Vec<f64> = enumerate_without_replacement(&fc.ground_set(), m, budget)?
        .map(|s| fc.sup_process_with(&s, &mut scratch) - center)
        .collect();
    Ok(eps_grid
        .iter()
        .map(|&eps| devs.iter().filter(|&&d| d >= eps).count() as f64 / devs.len() as f64)
        .collect())
}

/// 20 geometric points from `0.05 √(m σ²)` to `3 m σ² + 3`.
pub fn default_eps_grid(m: usize, sigma2: f64) -> Vec<f64> {
    let lo = match 0.05 * (m as f64 * sigma2).sqrt() {
        v if v > 0.0 => v,
        _ => 0.05,
    };
    let hi = 3.0 * m as f64 * sigma2 + 3.0;
    let points = 20;
    let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
    (0..points).map(|i| lo * ratio.powi(i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub eps: f64,
    pub estimate: f64,
    pub empirical_lower_ci: f64,
    pub empirical_upper_ci: f64,
    pub bound_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub bound: String,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

/// Compares a curve with an arbitrary tail function; a grid point is a
/// violation when the lower confidence bound of the empirical tail exceeds
/// the bound there.
pub fn check_domination_with(
    curve: &TailCurve,
    tag: &str,
    expected_center: Center,
    tail: impl Fn(f64) -> f64,
) -> Result<DominationReport> {
    if curve.centering.center != expected_center {
        return Err(LabError::CenteringMismatch {
            bound: tag.to_string(),
            expected: format!("{expected_center:?}"),
            found: format!("{:?}", curve.centering.center),
        });
    }
    let violations: Vec<Violation> = curve
        .eps_grid
        .iter()
        .enumerate()
        .filter_map(|(i, &eps)| {
            let bound_value = tail(eps);
            (curve.lower_ci[i] > bound_value).then(|| Violation {
                eps,
                estimate: curve.tail_estimate[i],
                empirical_lower_ci: curve.lower_ci[i],
                empirical_upper_ci: curve.upper_ci[i],
                bound_value,
            })
        })
        .collect();
    Ok(DominationReport {
        bound: tag.to_string(),
        passed: violations.is_empty(),
        violations,
    })
}

pub fn check_domination(
    curve: &TailCurve,
    bound: Bound,
    params: &BoundParams,
) -> Result<DominationReport> {
    check_domination_with(curve, bound.tag(), bound.center(), |eps| {
        bound.tail(&params.at_eps(eps)).value
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationCheck {
    pub bound: String,
    pub t: f64,
    /// `center + deviation(t)`
    pub threshold: f64,
    pub exceedances: u64,
    pub trials: u64,
    pub frequency: f64,
    pub lower_ci: f64,
    pub upper_ci: f64,
    /// `e^{-t}`
    pub guarantee: f64,
    pub passed: bool,
}

/// Counts `Q'_m > center + deviation` and fails only if the exceedance
/// frequency is significantly above `e^{-t}` (lower CI above it).
pub fn check_deviation(
    sups: &[f64],
    tag: &str,
    center: f64,
    deviation: f64,
    t: f64,
    delta: f64,
) -> DeviationCheck {
    let threshold = center + deviation;
    let k = sups.iter().filter(|&&q| q > threshold).count() as u64;
    let n = sups.len() as u64;
    let lower_ci = clopper_pearson_lower(k, n, delta);
    let guarantee = (-t).exp();
    DeviationCheck {
        bound: tag.to_string(),
        t,
        threshold,
        exceedances: k,
        trials: n,
        frequency: k as f64 / n as f64,
        lower_ci,
        upper_ci: clopper_pearson_upper(k, n, delta),
        guarantee,
        passed: lower_ci <= guarantee,
    }
}

/// One configuration of the bound-verification experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySetup {
    pub trials: u64,
    /// trials for each Monte Carlo expectation when enumeration is infeasible
    pub center_trials: u64,
    pub seed: u64,
    pub eps_grid: Option<Vec<f64>>,
    pub t_grid: Vec<f64>,
    pub delta: f64,
    /// denominator constant of the sub-Gaussian exponent (8 unless running
    /// the power-check control)
    pub subgaussian_constant: f64,
    pub budget: u128,
}

impl Default for VerifySetup {
    fn default() -> Self {
        Self {
            trials: 100_000,
            center_trials: 100_000,
            seed: 0,
            eps_grid: None,
            t_grid: vec![1.0, 2.0, 4.0],
            delta: DEFAULT_DELTA,
            subgaussian_constant: 8.0,
            budget: DEFAULT_ENUMERATION_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub n: usize,
    pub m: usize,
    pub sigma2: f64,
    pub eq_prime: Estimate,
    pub eq: Estimate,
    pub curve_eq_prime: TailCurve,
    pub curve_eq: TailCurve,
    pub domination: Vec<DominationReport>,
    pub deviation: Vec<DeviationCheck>,
    pub passed: bool,
}

impl VerifyOutcome {
    pub fn params(&self) -> BoundParams {
        BoundParams::new(self.n, self.m, self.sigma2, self.eq.mean)
    }
}

const LABEL_TAIL: u64 = 1;
const LABEL_EQ_PRIME: u64 = 2;
const LABEL_EQ: u64 = 3;

fn expectation(
    fc: &FunctionClass,
    scheme: SampleScheme,
    setup: &VerifySetup,
    label: u64,
) -> Result<Estimate> {
    let exact = match scheme.mode {
        SamplingMode::WithoutReplacement => exact_sup_without(fc, scheme.m, setup.budget),
        SamplingMode::WithReplacement => exact_sup_with(fc, scheme.m, setup.budget),
    };
    match exact {
        Ok(e) => Ok(e),
        Err(LabError::OracleScale { .. }) => Ok(Estimate::from_samples(&sample_sups(
            fc,
            &scheme,
            setup.center_trials,
            derive_seed(setup.seed, label),
        )?)),
        Err(e) => Err(e),
    }
}

/// Runs every tail and deviation check for one `(class, m)` configuration.
pub fn verify_configuration(
    fc: &FunctionClass,
    m: usize,
    setup: &VerifySetup,
) -> Result<VerifyOutcome> {
    if !fc.is_centered() {
        return Err(LabError::Domain(
            "verification needs a centered class".into(),
        ));
    }
    let n = fc.population_size();
    let sigma2 = fc.class_variance();
    let eq_prime = expectation(
        fc,
        SampleScheme::without_replacement(m),
        setup,
        LABEL_EQ_PRIME,
    )?;
    let eq = expectation(fc, SampleScheme::with_replacement(m), setup, LABEL_EQ)?;
    let sups = sample_sups(
        fc,
        &SampleScheme::without_replacement(m),
        setup.trials,
        derive_seed(setup.seed, LABEL_TAIL),
    )?;
    let grid = setup
        .eps_grid
        .clone()
        .unwrap_or_else(|| default_eps_grid(m, sigma2));
    let curve_eq_prime = TailCurve::from_sups(
        &sups,
        &grid,
        Centering {
            center: Center::AroundEQprime,
            value: eq_prime,
        },
        setup.delta,
    )?;
    let curve_eq = TailCurve::from_sups(
        &sups,
        &grid,
        Centering {
            center: Center::AroundEQ,
            value: eq,
        },
        setup.delta,
    )?;
    let params = BoundParams::new(n, m, sigma2, eq.mean.max(0.0));
    params.validate()?;

    let mut domination = Vec::new();
    for bound in Bound::ALL {
        let curve = match bound.center() {
            Center::AroundEQprime => &curve_eq_prime,
            Center::AroundEQ => &curve_eq,
        };
        let report = if bound == Bound::SubGaussian && setup.subgaussian_constant != 8.0 {
            check_domination_with(curve, bound.tag(), bound.center(), |eps| {
                tail_subgaussian_with_constant(&params.at_eps(eps), setup.subgaussian_constant)
                    .value
            })?
        } else {
            check_domination(curve, bound, &params)?
        };
        domination.push(report);
    }

    let mut deviation = Vec::new();
    for &t in &setup.t_grid {
        for bound in [Bound::SubGaussian, Bound::TalagrandSwor, Bound::Bousquet] {
            let dev = bound
                .deviation(&params.at_t(t))
                .expect("deviation form exists")
                .value;
            let center = match bound.center() {
                Center::AroundEQprime => eq_prime.mean,
                Center::AroundEQ => eq.mean,
            };
            deviation.push(check_deviation(
                &sups,
                bound.tag(),
                center,
                dev,
                t,
                setup.delta,
            ));
        }
    }
    let passed = domination.iter().all(|r| r.passed) && deviation.iter().all(|d| d.passed);
    Ok(VerifyOutcome {
        n,
        m,
        sigma2,
        eq_prime,
        eq,
        curve_eq_prime,
        curve_eq,
        domination,
        deviation,
        passed,
    })
}

/// Per-grid-point plot data:
/// `eps, estimate, upper_ci, bound_thm1, bound_thm2, bound_ep, bound_bousquet`.
/// The estimate columns come from `curve`; the bound columns are evaluated
/// at `params` with each bound's own centering convention.
pub fn write_curve_csv<W: std::io::Write>(
    writer: W,
    curve: &TailCurve,
    params: &BoundParams,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "eps",
        "estimate",
        "upper_ci",
        "bound_thm1",
        "bound_thm2",
        "bound_ep",
        "bound_bousquet",
    ])?;
    for (i, &eps) in curve.eps_grid.iter().enumerate() {
        let p = params.at_eps(eps);
        wtr.write_record([
            format!("{eps}"),
            format!("{}", curve.tail_estimate[i]),
            format!("{}", curve.upper_ci[i]),
            format!("{}", tail_subgaussian(&p).value),
            format!("{}", tail_talagrand_swor(&p).value),
            format!("{}", tail_elyaniv_pechyony(&p).value),
            format!("{}", tail_bousquet(&p).value),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical_process::balanced_sign_class;

    /// Binomial tails summed term by term in log space.
    fn binom_cdf(k: u64, n: u64, p: f64) -> f64 {
        let ln_choose = |j: u64| {
            statrs::function::gamma::ln_gamma(n as f64 + 1.0)
                - statrs::function::gamma::ln_gamma(j as f64 + 1.0)
                - statrs::function::gamma::ln_gamma((n - j) as f64 + 1.0)
        };
        (0..=k)
            .map(|j| (ln_choose(j) + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln()).exp())
            .sum()
    }

    #[test]
    fn clopper_pearson_matches_direct_binomial_sums() {
        for (k, n) in [
            (0u64, 10u64),
            (3, 10),
            (9, 10),
            (17, 1000),
            (250, 1000),
            (0, 100_000),
            (12, 100_000),
        ] {
            let up = clopper_pearson_upper(k, n, 0.01);
            assert!(
                (binom_cdf(k, n, up) - 0.01).abs() < 1e-8,
                "upper k={k} n={n}"
            );
            if k > 0 {
                let lo = clopper_pearson_lower(k, n, 0.01);
                let tail = 1.0 - binom_cdf(k - 1, n, lo);
                assert!((tail - 0.01).abs() < 1e-8, "lower k={k} n={n}");
                assert!(lo < k as f64 / n as f64 && up > k as f64 / n as f64);
            }
        }
        assert_eq!(clopper_pearson_upper(10, 10, 0.01), 1.0);
        assert_eq!(clopper_pearson_lower(0, 10, 0.01), 0.0);
        // k = 0 has the closed form 1 - δ^{1/n}
        let closed = 1.0 - 0.01f64.powf(1.0 / 50.0);
        assert!((clopper_pearson_upper(0, 50, 0.01) - closed).abs() < 1e-12);
    }

    fn single_function() -> FunctionClass {
        FunctionClass::centered_from_rows(vec![vec![-1.0, -0.5, 0.5, 1.0]]).unwrap()
    }

    fn exact_center(fc: &FunctionClass, m: usize) -> Centering {
        Centering {
            center: Center::AroundEQprime,
            value: exact_sup_without(fc, m, DEFAULT_ENUMERATION_BUDGET).unwrap(),
        }
    }

    #[test]
    fn estimate_beyond_range_is_zero() {
        let fc = single_function();
        let c = exact_center(&fc, 2);
        let curve = estimate_tail(&fc, 2, &[0.0, 4.5, 10.0], 2_000, c, 3).unwrap();
        assert_eq!(curve.tail_estimate[1], 0.0);
        assert_eq!(curve.tail_estimate[2], 0.0);
        assert!(curve.tail_estimate[0] > 0.0 && curve.tail_estimate[0] <= 1.0);
        for i in 0..3 {
            assert!(curve.tail_estimate[i] <= curve.upper_ci[i]);
            assert!(curve.lower_ci[i] <= curve.tail_estimate[i]);
        }
    }

    #[test]
    fn single_function_tail_matches_enumeration() {
        let fc = single_function();
        let c = exact_center(&fc, 2);
        let grid = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0];
        let exact = exact_tail(&fc, 2, &grid, c.value.mean, 100).unwrap();
        let curve = estimate_tail(&fc, 2, &grid, 20_000, c, 8).unwrap();
        for i in 0..grid.len() {
            assert!(
                curve.lower_ci[i] <= exact[i] && exact[i] <= curve.upper_ci[i],
                "eps={} exact={} ci=[{}, {}]",
                grid[i],
                exact[i],
                curve.lower_ci[i],
                curve.upper_ci[i]
            );
        }
    }

    #[test]
    fn curve_is_monotone() {
        let fc = balanced_sign_class(30, 0.25, 2, 1).unwrap();
        let c = Centering {
            center: Center::AroundEQprime,
            value: Estimate::exact(0.0, 1),
        };
        let curve = estimate_tail(&fc, 10, &default_eps_grid(10, 0.25), 5_000, c, 2).unwrap();
        assert!(curve.tail_estimate.windows(2).all(|w| w[0] >= w[1]));
        assert!(TailCurve::from_sups(&[], &[0.0], c, 0.01).is_err());
        assert!(TailCurve::from_sups(&[1.0], &[1.0, 0.0], c, 0.01).is_err());
    }

    #[test]
    fn zero_class_is_always_dominated() {
        let fc = FunctionClass::centered_from_rows(vec![vec![0.0; 10]]).unwrap();
        let params = BoundParams::new(10, 5, 0.0, 0.0);
        let c = exact_center(&fc, 5);
        let curve = estimate_tail(&fc, 5, &[0.1, 0.5, 1.0], 1_000, c, 0).unwrap();
        for b in [Bound::SubGaussian, Bound::ElYanivPechyony] {
            assert!(check_domination(&curve, b, &params).unwrap().passed);
        }
    }

    #[test]
    fn centering_mismatch_is_refused() {
        let fc = single_function();
        let curve = estimate_tail(&fc, 2, &[0.5], 100, exact_center(&fc, 2), 0).unwrap();
        let params = BoundParams::new(4, 2, fc.class_variance(), 0.5);
        assert!(matches!(
            check_domination(&curve, Bound::TalagrandSwor, &params),
            Err(LabError::CenteringMismatch { .. })
        ));
    }

    #[test]
    fn default_grid_shape() {
        let g = default_eps_grid(500, 0.25);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 0.05 * 125f64.sqrt()).abs() < 1e-12);
        assert!((g[19] - 378.0).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(default_eps_grid(10, 0.0)[0], 0.05);
    }

    #[test]
    fn deviation_check_counts_strict_exceedances() {
        let sups = [0.0, 1.0, 2.0, 3.0];
        let d = check_deviation(&sups, "x", 1.0, 1.0, 1.0, 0.01);
        assert_eq!(d.exceedances, 1);
        assert_eq!(d.frequency, 0.25);
        assert!(d.passed);
    }

    #[test]
    fn csv_has_expected_columns() {
        let fc = single_function();
        let curve = estimate_tail(&fc, 2, &[0.5, 1.0], 100, exact_center(&fc, 2), 0).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(
            &mut buf,
            &curve,
            &BoundParams::new(4, 2, fc.class_variance(), 0.6),
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "eps,estimate,upper_ci,bound_thm1,bound_thm2,bound_ep,bound_bousquet"
        );
        assert_eq!(lines.count(), 2);
    }
}
