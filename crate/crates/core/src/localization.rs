//! Localized excess-risk bounds: the excess loss class, its Bernstein
//! constant, the localized modulus of continuity, sub-root majorants with
//! their fixed points, and the resulting bounds on excess risk.

use serde::{Deserialize, Serialize};

use crate::empirical_process::{expected_sup_single, Estimate, ExpectationMethod, FunctionClass};
use crate::error::{LabError, Result};
use crate::ground_set::{SampleScheme, SamplingMode};
use crate::table::Table;
use crate::transductive_lab::{argmin, erm, map_splits, TransductiveProblem, ValidityCheck};

/// Coefficient of `r*/B` in the sub-Gaussian excess bound.
pub const SUBGAUSSIAN_R_COEF: f64 = 51.0;
/// Coefficient of `B t N / m²` in the sub-Gaussian excess bound.
pub const SUBGAUSSIAN_T_COEF: f64 = 17.0;
/// Coefficient of `r*/B` in the Bennett excess bound.
pub const BENNETT_R_COEF: f64 = 901.0;
/// Constant part of `(16 + 25 B)` in the Bennett excess bound.
pub const BENNETT_T_CONST: f64 = 16.0;
/// Coefficient of `B` in `(16 + 25 B)`.
pub const BENNETT_T_B_COEF: f64 = 25.0;
/// Coefficient of `K r*/B` in the risk-gap bound.
pub const GAP_R_COEF: f64 = 2.0;
/// Coefficient of `K B t N / m²` in the risk-gap bound.
pub const GAP_T_COEF: f64 = 16.0;
/// Default slack factor `K > 1` of the risk-gap bound.
pub const DEFAULT_GAP_K: f64 = 1.0001;
/// Default `K` in the test-set Bennett bound.
pub const DEFAULT_BENNETT_K: f64 = 1.0;

/// Tolerance for treating `E f` as zero.
const ZERO_MEAN_TOL: f64 = 1e-12;

/// `{ℓ_h - ℓ_{h*}}` where `h*` minimizes the overall risk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessLossClass {
    pub base: TransductiveProblem,
    pub star_index: usize,
    pub rows: Table,
}

impl ExcessLossClass {
    pub fn population_size(&self) -> usize {
        self.rows.cols()
    }

    /// `E f` per row.
    pub fn means(&self) -> Vec<f64> {
        let n = self.population_size() as f64;
        self.rows
            .iter_rows()
            .map(|r| r.iter().sum::<f64>() / n)
            .collect()
    }

    /// `E f²` per row.
    pub fn second_moments(&self) -> Vec<f64> {
        let n = self.population_size() as f64;
        self.rows
            .iter_rows()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>() / n)
            .collect()
    }

    /// Rows with `E f² ≤ r`, as the class `{E f - f}` whose sample mean is
    /// `E f - Ê f`.
    fn slice_class(&self, r: f64) -> FunctionClass {
        let means = self.means();
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter_rows()
            .zip(self.second_moments())
            .zip(&means)
            .filter(|((_, s), _)| *s <= r)
            .map(|((row, _), mean)| row.iter().map(|v| mean - v).collect())
            .collect();
        FunctionClass::raw(&Table::from_rows(rows).expect("slice contains the zero row"))
    }
}

pub fn build_excess_class(tp: &TransductiveProblem) -> ExcessLossClass {
    let star_index = argmin(&tp.overall_risks());
    let star = tp.loss_row(star_index);
    let rows = tp
        .loss()
        .iter_rows()
        .map(|row| row.iter().zip(star).map(|(a, b)| a - b).collect())
        .collect();
    ExcessLossClass {
        base: tp.clone(),
        star_index,
        rows: Table::from_rows(rows).expect("same shape as the loss table"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinConstant {
    pub b: f64,
    /// hypothesis attaining the largest `E f² / E f`; `None` when every row is zero
    pub witness: Option<usize>,
    pub satisfied: bool,
    /// first hypothesis with `E f = 0` but `E f² > 0`, with that second moment
    pub violation: Option<(usize, f64)>,
}

impl BernsteinConstant {
    /// The constant, or an error naming the hypothesis that breaks the
    /// Bernstein condition.
    pub fn require(&self) -> Result<f64> {
        match self.violation {
            Some((hypothesis, second_moment)) => Err(LabError::BernsteinViolated {
                hypothesis,
                second_moment,
            }),
            None => Ok(self.b),
        }
    }
}

/// Smallest `B` with `E f² ≤ B E f` for every row.
pub fn compute_b(ec: &ExcessLossClass) -> BernsteinConstant {
    let mut b = 0.0;
    let mut witness = None;
    let mut violation = None;
    for (h, (mean, sq)) in ec.means().into_iter().zip(ec.second_moments()).enumerate() {
        if mean.abs() <= ZERO_MEAN_TOL {
            if sq > ZERO_MEAN_TOL && violation.is_none() {
                violation = Some((h, sq));
            }
            continue;
        }
        let ratio = sq / mean;
        if witness.is_none() || ratio > b {
            b = ratio;
            witness = Some(h);
        }
    }
    if witness.is_none() {
        b = 1.0;
    }
    BernsteinConstant {
        b,
        witness,
        satisfied: violation.is_none(),
        violation,
    }
}

/// [`compute_b`], failing when no finite constant exists.
pub fn verified_b(ec: &ExcessLossClass) -> Result<BernsteinConstant> {
    let bc = compute_b(ec);
    bc.require()?;
    Ok(bc)
}

/// `B · E[sup_{f: E f² ≤ r} (E f - Ê f)]` for samples of size `m` drawn
/// under `flavor`. Monte Carlo runs share the seed across `r`, so the
/// estimate is nondecreasing in `r`.
pub fn estimate_modulus(
    ec: &ExcessLossClass,
    b: f64,
    r: f64,
    m: usize,
    flavor: SamplingMode,
    method: &ExpectationMethod,
) -> Result<Estimate> {
    if !(r > 0.0) {
        return Err(LabError::Domain(format!(
            "modulus radius must be positive, got {r}"
        )));
    }
    if let ExpectationMethod::MonteCarlo { trials: 0, .. } = method {
        return Err(LabError::Config("trials must be positive".into()));
    }
    let scheme = SampleScheme { mode: flavor, m };
    let est = expected_sup_single(&ec.slice_class(r), &scheme, method)?;
    let scale = b / m as f64;
    Ok(Estimate {
        mean: est.mean * scale,
        std_error: est.std_error * scale,
        ..est
    })
}

/// Geometric grid from half the smallest nonzero `E f²` to twice the largest,
/// merged with every distinct nonzero `E f²`. The modulus is a step function
/// of `r` that only jumps at those values, so a majorant that holds on this
/// grid holds for all `r > 0`.
pub fn modulus_grid(ec: &ExcessLossClass, points: usize) -> Vec<f64> {
    let mut breaks: Vec<f64> = ec
        .second_moments()
        .into_iter()
        .filter(|&s| s > 0.0)
        .collect();
    if breaks.is_empty() {
        return Vec::new();
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let lo = breaks[0] / 2.0;
    let hi = breaks[breaks.len() - 1] * 2.0;
    let mut grid = breaks;
    match points {
        0 => {}
        1 => grid.push(lo),
        _ => {
            let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
            grid.extend((0..points).map(|i| lo * ratio.powi(i as i32)));
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub r: f64,
    pub psi: f64,
    pub std_error: f64,
}

/// A sub-root majorant `ψ(r) = c √r`, whose fixed point is `c²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubRootBound {
    pub c: f64,
    pub r_star: f64,
    pub grid: Vec<GridPoint>,
    pub flavor: SamplingMode,
}

impl SubRootBound {
    pub fn psi(&self, r: f64) -> f64 {
        self.c * r.sqrt()
    }
}

/// Smallest `c` with `c √r ≥ ψ̂(r) + 2 se(r)` on every grid point.
pub fn fit_subroot(grid: Vec<GridPoint>, flavor: SamplingMode) -> Result<SubRootBound> {
    let mut c: f64 = 0.0;
    for p in &grid {
        if !(p.r > 0.0) {
            return Err(LabError::Domain(format!(
                "grid radius must be positive, got {}",
                p.r
            )));
        }
        c = c.max((p.psi + 2.0 * p.std_error) / p.r.sqrt());
    }
    Ok(SubRootBound {
        c,
        r_star: c * c,
        grid,
        flavor,
    })
}

/// Evaluates the modulus on [`modulus_grid`] and fits the majorant.
pub fn localize(
    ec: &ExcessLossClass,
    b: f64,
    m: usize,
    flavor: SamplingMode,
    grid_points: usize,
    method: &ExpectationMethod,
) -> Result<SubRootBound> {
    let grid = modulus_grid(ec, grid_points)
        .into_iter()
        .map(|r| {
            estimate_modulus(ec, b, r, m, flavor, method).map(|e| GridPoint {
                r,
                psi: e.mean,
                std_error: e.std_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    fit_subroot(grid, flavor)
}

/// Solves `ψ(r) = r` by bisection on `[r_lo, r_hi]`, stopping once both the
/// bracket width and `|ψ(r) - r|` are within `tol`.
pub fn fixed_point(psi: impl Fn(f64) -> f64, r_lo: f64, r_hi: f64, tol: f64) -> Result<f64> {
    let g = |r: f64| psi(r) - r;
    let (mut lo, mut hi) = (r_lo, r_hi);
    let (g_lo, g_hi) = (g(lo), g(hi));
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(LabError::Bracket { lo: r_lo, hi: r_hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() <= tol && hi - lo <= tol {
            return Ok(mid);
        }
        if gm > 0.0 {
            lo = mid;
        } else if gm < 0.0 {
            hi = mid;
        } else {
            return Ok(mid);
        }
        if hi - lo <= f64::EPSILON * hi.abs() {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    if g(mid).abs() <= tol {
        Ok(mid)
    } else {
        Err(LabError::NoConvergence {
            sweeps: 200,
            residual: g(mid).abs(),
        })
    }
}

/// `51 r*/B + 17 B t N / m²`, bounding `L_N(ĥ_m) - L_N(h*_N)`.
pub fn excess_bound_subgaussian(b: f64, r_star: f64, n: usize, m: usize, t: f64) -> f64 {
    let mf = m as f64;
    SUBGAUSSIAN_R_COEF * r_star / b + SUBGAUSSIAN_T_COEF * b * t * n as f64 / (mf * mf)
}

/// `901 r*/B + t (16 + 25 B) / (3m)`, bounding `L_N(ĥ_m) - L_N(h*_N)`.
pub fn excess_bound_bennett(b: f64, r_star: f64, m: usize, t: f64) -> f64 {
    BENNETT_R_COEF * r_star / b + t * (BENNETT_T_CONST + BENNETT_T_B_COEF * b) / (3.0 * m as f64)
}

/// Test-set excess risk bound from the sub-Gaussian excess bounds on both
/// sides of the split; holds with probability `1 - 2e^{-t}`.
pub fn test_excess_bound_subgaussian(
    b: f64,
    r_star_m: f64,
    r_star_u: f64,
    n: usize,
    m: usize,
    u: usize,
    t: f64,
) -> f64 {
    let nf = n as f64;
    nf / u as f64 * excess_bound_subgaussian(b, r_star_m, n, m, t)
        + nf / m as f64 * excess_bound_subgaussian(b, r_star_u, n, u, t)
}

/// Bennett analogue of [`test_excess_bound_subgaussian`], with the `r*`
/// coefficient scaled by `k`.
#[allow(clippy::too_many_arguments)]
pub fn test_excess_bound_bennett(
    b: f64,
    k: f64,
    r_star_m: f64,
    r_star_u: f64,
    n: usize,
    m: usize,
    u: usize,
    t: f64,
) -> f64 {
    let nf = n as f64;
    nf / u as f64 * excess_bound_bennett(b, k * r_star_m, m, t)
        + nf / m as f64 * excess_bound_bennett(b, k * r_star_u, u, t)
}

fn gap_term(b: f64, k: f64, r_star: f64, n: usize, m: usize, t: f64) -> f64 {
    let mf = m as f64;
    GAP_R_COEF * k * r_star / b + GAP_T_COEF * k * b * t * n as f64 / (mf * mf)
}

/// `max` form of the bound on `|L_N(ĥ_m) - L_N(h*_u)|`.
#[allow(clippy::too_many_arguments)]
pub fn risk_gap_bound_max(
    b: f64,
    k: f64,
    r_star_m: f64,
    r_star_u: f64,
    n: usize,
    m: usize,
    u: usize,
    t: f64,
) -> f64 {
    gap_term(b, k, r_star_m, n, m, t).max(gap_term(b, k, r_star_u, n, u, t))
}

/// `2K (r*_m + r*_u)/B + 16 K B t N (1/m² + 1/u²)`, bounding
/// `|L_N(ĥ_m) - L_N(h*_u)|`.
#[allow(clippy::too_many_arguments)]
pub fn risk_gap_bound(
    b: f64,
    k: f64,
    r_star_m: f64,
    r_star_u: f64,
    n: usize,
    m: usize,
    u: usize,
    t: f64,
) -> f64 {
    gap_term(b, k, r_star_m, n, m, t) + gap_term(b, k, r_star_u, n, u, t)
}

/// Settings for [`localized_validity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizeSetup {
    pub splits: u64,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    pub grid_points: usize,
    pub method: ExpectationMethod,
    pub bennett_k: f64,
    pub gap_k: f64,
    pub delta: f64,
}

impl Default for LocalizeSetup {
    fn default() -> Self {
        Self {
            splits: 10_000,
            seed: 0,
            t_grid: vec![1.0, 2.0],
            grid_points: 12,
            method: ExpectationMethod::Exact {
                budget: crate::ground_set::DEFAULT_ENUMERATION_BUDGET,
            },
            bennett_k: DEFAULT_BENNETT_K,
            gap_k: DEFAULT_GAP_K,
            delta: crate::mc_verifier::DEFAULT_DELTA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsAtT {
    pub t: f64,
    pub excess_subgaussian: f64,
    pub excess_bennett: f64,
    pub test_excess_subgaussian: f64,
    pub test_excess_bennett: f64,
    pub risk_gap: f64,
    pub risk_gap_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub n: usize,
    pub m: usize,
    pub u: usize,
    pub star_index: usize,
    pub bernstein: BernsteinConstant,
    pub subroot_m: SubRootBound,
    pub subroot_u: SubRootBound,
    pub subroot_m_with: SubRootBound,
    pub subroot_u_with: SubRootBound,
    pub bennett_k: f64,
    pub gap_k: f64,
    pub bounds: Vec<BoundsAtT>,
    pub checks: Vec<ValidityCheck>,
    pub passed: bool,
}

/// Fits the four sub-root majorants (training and test sample sizes, both
/// sampling flavors) and evaluates every excess bound at each `t`.
pub fn localization_bounds(
    tp: &TransductiveProblem,
    m: usize,
    setup: &LocalizeSetup,
) -> Result<LocalizationReport> {
    let n = tp.population_size();
    if m == 0 || m >= n {
        return Err(LabError::Config(format!(
            "need 1 <= m < N, got m = {m}, N = {n}"
        )));
    }
    let u = n - m;
    let ec = build_excess_class(tp);
    let bernstein = verified_b(&ec)?;
    let b = bernstein.b;
    let fit = |size, flavor| localize(&ec, b, size, flavor, setup.grid_points, &setup.method);
    let subroot_m = fit(m, SamplingMode::WithoutReplacement)?;
    let subroot_u = fit(u, SamplingMode::WithoutReplacement)?;
    let subroot_m_with = fit(m, SamplingMode::WithReplacement)?;
    let subroot_u_with = fit(u, SamplingMode::WithReplacement)?;
    let bounds = setup
        .t_grid
        .iter()
        .map(|&t| BoundsAtT {
            t,
            excess_subgaussian: excess_bound_subgaussian(b, subroot_m.r_star, n, m, t),
            excess_bennett: excess_bound_bennett(b, subroot_m_with.r_star, m, t),
            test_excess_subgaussian: test_excess_bound_subgaussian(
                b,
                subroot_m.r_star,
                subroot_u.r_star,
                n,
                m,
                u,
                t,
            ),
            test_excess_bennett: test_excess_bound_bennett(
                b,
                setup.bennett_k,
                subroot_m_with.r_star,
                subroot_u_with.r_star,
                n,
                m,
                u,
                t,
            ),
            risk_gap: risk_gap_bound(
                b,
                setup.gap_k,
                subroot_m.r_star,
                subroot_u.r_star,
                n,
                m,
                u,
                t,
            ),
            risk_gap_max: risk_gap_bound_max(
                b,
                setup.gap_k,
                subroot_m.r_star,
                subroot_u.r_star,
                n,
                m,
                u,
                t,
            ),
        })
        .collect();
    Ok(LocalizationReport {
        n,
        m,
        u,
        star_index: ec.star_index,
        bernstein,
        subroot_m,
        subroot_u,
        subroot_m_with,
        subroot_u_with,
        bennett_k: setup.bennett_k,
        gap_k: setup.gap_k,
        bounds,
        checks: Vec::new(),
        passed: true,
    })
}

/// [`localization_bounds`] followed by violation counts over `splits`
/// random splits. Excess bounds on the overall risk are checked against
/// `e^{-t}`, the two-sided statements against `2e^{-t}`.
pub fn localized_validity(
    tp: &TransductiveProblem,
    m: usize,
    setup: &LocalizeSetup,
) -> Result<LocalizationReport> {
    let mut report = localization_bounds(tp, m, setup)?;
    let star = report.star_index;
    let outcomes = map_splits(tp, m, setup.splits, setup.seed, |sr| {
        let out = erm(sr);
        [
            sr.l_n[out.h_hat_m] - sr.l_n[star],
            out.excess_risk,
            (sr.l_n[out.h_hat_m] - sr.l_n[out.h_star_u]).abs(),
        ]
    })?;
    // columns of each outcome row
    const OVERALL_EXCESS: usize = 0;
    const TEST_EXCESS: usize = 1;
    const RISK_GAP: usize = 2;
    let count =
        |column: usize, bound: f64| outcomes.iter().filter(|o| o[column] > bound).count() as u64;
    let mut checks = Vec::new();
    for bt in &report.bounds {
        let t = bt.t;
        let once = (-t).exp();
        let twice = 2.0 * once;
        let rows = [
            (
                "excess_subgaussian",
                bt.excess_subgaussian,
                OVERALL_EXCESS,
                once,
            ),
            ("excess_bennett", bt.excess_bennett, OVERALL_EXCESS, once),
            (
                "test_excess_subgaussian",
                bt.test_excess_subgaussian,
                TEST_EXCESS,
                twice,
            ),
            (
                "test_excess_bennett",
                bt.test_excess_bennett,
                TEST_EXCESS,
                twice,
            ),
            ("risk_gap", bt.risk_gap, RISK_GAP, twice),
        ];
        for (name, bound, pick, guarantee) in rows {
            checks.push(ValidityCheck::from_counts(
                name,
                t,
                bound,
                count(pick, bound),
                setup.splits,
                guarantee,
                setup.delta,
            ));
        }
    }
    report.passed = checks.iter().all(|c| c.passed);
    report.checks = checks;
    Ok(report)
}
