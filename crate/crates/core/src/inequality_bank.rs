//! Tail and deviation bounds for `Q'_m` as pure formulas.
//!
//! Tail bounds return `P{deviation ≥ ε}` capped at 1; deviation bounds return
//! the level exceeded with probability at most `e^{-t}`. The sub-Gaussian and
//! El-Yaniv–Pechyony bounds measure deviations from `E[Q'_m]` and also bound
//! the lower tail `P{E[Q'_m] - Q'_m ≥ ε}`. The Talagrand-type bound measures
//! deviations of `Q'_m` from `E[Q_m]` and has no lower-tail counterpart;
//! Bousquet's inequality is the same formula stated for `Q_m`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Which expectation a deviation is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Center {
    /// around `E[Q'_m]`
    AroundEQprime,
    /// around `E[Q_m]`
    AroundEQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    SubGaussian,
    TalagrandSwor,
    ElYanivPechyony,
    Bousquet,
}

impl Bound {
    pub const ALL: [Bound; 4] = [
        Bound::SubGaussian,
        Bound::TalagrandSwor,
        Bound::ElYanivPechyony,
        Bound::Bousquet,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Bound::SubGaussian => "subgaussian",
            Bound::TalagrandSwor => "talagrand_swor",
            Bound::ElYanivPechyony => "el_yaniv_pechyony",
            Bound::Bousquet => "bousquet",
        }
    }

    pub fn center(&self) -> Center {
        match self {
            Bound::SubGaussian | Bound::ElYanivPechyony => Center::AroundEQprime,
            Bound::TalagrandSwor | Bound::Bousquet => Center::AroundEQ,
        }
    }

    /// Whether the same tail bound also holds for the lower deviation.
    pub fn covers_lower_tail(&self) -> bool {
        matches!(self, Bound::SubGaussian | Bound::ElYanivPechyony)
    }

    pub fn tail(&self, p: &BoundParams) -> BoundValue {
        match self {
            Bound::SubGaussian => tail_subgaussian(p),
            Bound::TalagrandSwor => tail_talagrand_swor(p),
            Bound::ElYanivPechyony => tail_elyaniv_pechyony(p),
            Bound::Bousquet => tail_bousquet(p),
        }
    }

    /// `None` for El-Yaniv–Pechyony, which is only available in tail form.
    pub fn deviation(&self, p: &BoundParams) -> Option<BoundValue> {
        match self {
            Bound::SubGaussian => Some(deviation_subgaussian(p)),
            Bound::TalagrandSwor => Some(deviation_talagrand_swor(p)),
            Bound::ElYanivPechyony => None,
            Bound::Bousquet => Some(deviation_bousquet(p)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: usize,
    pub m: usize,
    pub sigma2: f64,
    /// `E[Q_m]`, supplied by the caller (exact or estimated).
    pub eq_m: f64,
    pub t: f64,
    pub eps: f64,
}

impl BoundParams {
    pub fn new(n: usize, m: usize, sigma2: f64, eq_m: f64) -> Self {
        Self {
            n,
            m,
            sigma2,
            eq_m,
            t: 0.0,
            eps: 0.0,
        }
    }

    pub fn at_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn at_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > self.n {
            return Err(LabError::Config(format!(
                "need 1 <= m <= N, got m = {}, N = {}",
                self.m, self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.sigma2) {
            return Err(LabError::Config(format!(
                "sigma2 = {} outside [0, 1]",
                self.sigma2
            )));
        }
        if !(self.t >= 0.0) || !(self.eps >= 0.0) || !self.eq_m.is_finite() {
            return Err(LabError::Config(
                "t and eps must be nonnegative, E[Q_m] finite".into(),
            ));
        }
        Ok(())
    }

    /// `v = m σ² + 2 E[Q_m]`
    pub fn v(&self) -> f64 {
        self.m as f64 * self.sigma2 + 2.0 * self.eq_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    TailProbability,
    DeviationLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub kind: BoundKind,
    pub value: f64,
    pub bound: Bound,
}

impl BoundValue {
    fn tail(bound: Bound, value: f64) -> Self {
        Self {
            kind: BoundKind::TailProbability,
            value: value.clamp(0.0, 1.0),
            bound,
        }
    }

    fn deviation(bound: Bound, value: f64) -> Self {
        Self {
            kind: BoundKind::DeviationLevel,
            value,
            bound,
        }
    }
}

/// `h(u) = (1+u) log(1+u) - u` for `u > -1`.
pub fn h_fn(u: f64) -> Result<f64> {
    if !(u > -1.0) {
        return Err(LabError::Domain(format!("h(u) needs u > -1, got {u}")));
    }
    Ok((1.0 + u) * u.ln_1p() - u)
}

/// `φ(u) = e^u - u - 1`
pub fn phi_fn(u: f64) -> f64 {
    u.exp_m1() - u
}

fn exp_tail(exponent: f64) -> f64 {
    exponent.exp().min(1.0)
}

/// Sub-Gaussian tail with a configurable denominator constant (8 in the
/// theorem). Only the power-check control uses other constants.
pub fn tail_subgaussian_with_constant(p: &BoundParams, constant: f64) -> BoundValue {
    if p.eps == 0.0 {
        return BoundValue::tail(Bound::SubGaussian, 1.0);
    }
    if p.sigma2 == 0.0 {
        return BoundValue::tail(Bound::SubGaussian, 0.0);
    }
    let n = p.n as f64;
    let exponent = -(n + 2.0) * p.eps * p.eps / (constant * n * n * p.sigma2);
    BoundValue::tail(Bound::SubGaussian, exp_tail(exponent))
}

/// `exp{-(N+2) ε² / (8 N² σ²)}`
pub fn tail_subgaussian(p: &BoundParams) -> BoundValue {
    tail_subgaussian_with_constant(p, 8.0)
}

/// The looser `exp{-ε² / (8 N σ²)}`.
pub fn tail_subgaussian_loose(p: &BoundParams) -> BoundValue {
    if p.eps == 0.0 {
        return BoundValue::tail(Bound::SubGaussian, 1.0);
    }
    if p.sigma2 == 0.0 {
        return BoundValue::tail(Bound::SubGaussian, 0.0);
    }
    let exponent = -p.eps * p.eps / (8.0 * p.n as f64 * p.sigma2);
    BoundValue::tail(Bound::SubGaussian, exp_tail(exponent))
}

/// `2 √(2 N σ² t)`, the deviation above `E[Q'_m]`.
pub fn deviation_subgaussian(p: &BoundParams) -> BoundValue {
    BoundValue::deviation(
        Bound::SubGaussian,
        2.0 * (2.0 * p.n as f64 * p.sigma2 * p.t).sqrt(),
    )
}

fn bennett_tail(bound: Bound, p: &BoundParams) -> BoundValue {
    if p.eps == 0.0 {
        return BoundValue::tail(bound, 1.0);
    }
    let v = p.v();
    if v <= 0.0 {
        return BoundValue::tail(bound, 0.0);
    }
    let h = h_fn(p.eps / v).expect("eps / v is nonnegative");
    BoundValue::tail(bound, exp_tail(-v * h))
}

fn bernstein_tail(bound: Bound, p: &BoundParams) -> BoundValue {
    if p.eps == 0.0 {
        return BoundValue::tail(bound, 1.0);
    }
    let v = p.v();
    if v <= 0.0 {
        return BoundValue::tail(bound, 0.0);
    }
    let exponent = -p.eps * p.eps / (2.0 * v + 2.0 * p.eps / 3.0);
    BoundValue::tail(bound, exp_tail(exponent))
}

/// `exp(-v h(ε/v))` for `P{Q'_m - E[Q_m] ≥ ε}`.
pub fn tail_talagrand_swor(p: &BoundParams) -> BoundValue {
    bennett_tail(Bound::TalagrandSwor, p)
}

/// The looser Bernstein form `exp(-ε² / (2v + 2ε/3))`.
pub fn tail_talagrand_swor_bernstein(p: &BoundParams) -> BoundValue {
    bernstein_tail(Bound::TalagrandSwor, p)
}

/// `√(2vt) + t/3`, the deviation above `E[Q_m]` (not `E[Q'_m]`).
pub fn deviation_talagrand_swor(p: &BoundParams) -> BoundValue {
    BoundValue::deviation(Bound::TalagrandSwor, (2.0 * p.v() * p.t).sqrt() + p.t / 3.0)
}

pub fn tail_bousquet(p: &BoundParams) -> BoundValue {
    bennett_tail(Bound::Bousquet, p)
}

/// `exp(-ε² / (2(v + ε/3)))`
pub fn tail_bousquet_bernstein(p: &BoundParams) -> BoundValue {
    bernstein_tail(Bound::Bousquet, p)
}

pub fn deviation_bousquet(p: &BoundParams) -> BoundValue {
    BoundValue::deviation(Bound::Bousquet, (2.0 * p.v() * p.t).sqrt() + p.t / 3.0)
}

/// Rate `κ` of the El-Yaniv–Pechyony exponent `-κ ε²`; `None` when `m = N`.
fn elyaniv_pechyony_rate(n: usize, m: usize) -> Option<f64> {
    if m >= n {
        return None;
    }
    let (nf, mf) = (n as f64, m as f64);
    let max = m.max(n - m) as f64;
    Some((1.0 / (2.0 * mf)) * ((nf - 0.5) / (nf - mf)) * (1.0 - 1.0 / (2.0 * max)))
}

/// `exp{-(ε²/2m) ((N - 1/2)/(N - m)) (1 - 1/(2 max(m, N-m)))}`; with `m = N`
/// the supremum is deterministic and the tail is 0 for `ε > 0`.
pub fn tail_elyaniv_pechyony(p: &BoundParams) -> BoundValue {
    if p.eps == 0.0 {
        return BoundValue::tail(Bound::ElYanivPechyony, 1.0);
    }
    match elyaniv_pechyony_rate(p.n, p.m) {
        Some(rate) => BoundValue::tail(Bound::ElYanivPechyony, exp_tail(-rate * p.eps * p.eps)),
        None => BoundValue::tail(Bound::ElYanivPechyony, 0.0),
    }
}

/// `2 m³ / N`, the upper bound on `E[Q_m] - E[Q'_m]`.
pub fn gap_bound(n: usize, m: usize) -> f64 {
    2.0 * (m as f64).powi(3) / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentForm {
    SubGaussian,
    SubGaussianLoose,
    ElYanivPechyony,
}

impl ExponentForm {
    pub const ALL: [ExponentForm; 3] = [
        ExponentForm::SubGaussian,
        ExponentForm::SubGaussianLoose,
        ExponentForm::ElYanivPechyony,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEntry {
    pub form: ExponentForm,
    /// log of the uncapped tail bound, `-κ ε²`
    pub exponent: f64,
}

/// Tail exponents of the `E[Q'_m]`-centered bounds, tightest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub n: usize,
    pub m: usize,
    pub sigma2: f64,
    pub eps: f64,
    /// sorted by exponent, most negative first
    pub entries: Vec<ExponentEntry>,
    /// every form attaining the smallest exponent (more than one on ties)
    pub tightest: Vec<ExponentForm>,
    /// simplified comparison `-ε²/(8Nσ²)` versus `-(ε²/2m)(N-1/2)/(N-m)`
    pub simplified_subgaussian: f64,
    pub simplified_elyaniv_pechyony: f64,
    /// σ² at which the simplified exponents coincide (`None` when m = N)
    pub simplified_crossover_sigma2: Option<f64>,
    /// σ² at which the full sub-Gaussian and El-Yaniv–Pechyony exponents coincide
    pub crossover_sigma2: Option<f64>,
}

const TIE_RTOL: f64 = 1e-12;

pub fn compare_exponents(n: usize, m: usize, sigma2: f64, eps: f64) -> Result<ExponentReport> {
    BoundParams::new(n, m, sigma2, 0.0).at_eps(eps).validate()?;
    let (nf, mf) = (n as f64, m as f64);
    let e2 = eps * eps;
    let rate_sg = (nf + 2.0) / (8.0 * nf * nf * sigma2);
    let rate_loose = 1.0 / (8.0 * nf * sigma2);
    let rate_ep = elyaniv_pechyony_rate(n, m).unwrap_or(f64::INFINITY);
    let exponent = |rate: f64| if e2 == 0.0 { 0.0 } else { -rate * e2 };

    let mut entries: Vec<ExponentEntry> = ExponentForm::ALL
        .iter()
        .zip([rate_sg, rate_loose, rate_ep])
        .map(|(&form, rate)| ExponentEntry {
            form,
            exponent: exponent(rate),
        })
        .collect();
    entries.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
    let best = entries[0].exponent;
    let tightest = entries
        .iter()
        .filter(|e| {
            e.exponent == best || (e.exponent - best).abs() <= TIE_RTOL * best.abs().max(1e-300)
        })
        .map(|e| e.form)
        .collect();

    let simplified_ep_rate = if m < n {
        (nf - 0.5) / (2.0 * mf * (nf - mf))
    } else {
        f64::INFINITY
    };
    let (simplified_crossover_sigma2, crossover_sigma2) = if m < n {
        (
            Some(mf * (nf - mf) / (4.0 * nf * (nf - 0.5))),
            Some((nf + 2.0) / (8.0 * nf * nf * rate_ep)),
        )
    } else {
        (None, None)
    };
    Ok(ExponentReport {
        n,
        m,
        sigma2,
        eps,
        entries,
        tightest,
        simplified_subgaussian: exponent(rate_loose),
        simplified_elyaniv_pechyony: exponent(simplified_ep_rate),
        simplified_crossover_sigma2,
        crossover_sigma2,
    })
}

/// Exponent rates `κ` (tail = `exp(-κ ε²)`) in exact rational arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRates {
    pub subgaussian: BigRational,
    pub subgaussian_loose: BigRational,
    pub elyaniv_pechyony: BigRational,
    pub simplified_elyaniv_pechyony: BigRational,
}

fn int(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl ExactRates {
    /// Requires `1 <= m < N` and `σ² > 0`.
    pub fn new(n: usize, m: usize, sigma2: &BigRational) -> Result<Self> {
        if m == 0 || m >= n || !(sigma2 > &BigRational::zero()) {
            return Err(LabError::Config(
                "exact rates need 1 <= m < N and sigma2 > 0".into(),
            ));
        }
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let two = int(2);
        let eight = int(8);
        let (nr, mr) = (int(n), int(m));
        let max = int(m.max(n - m));
        let subgaussian = (&nr + &two) / (&eight * &nr * &nr * sigma2);
        let subgaussian_loose = BigRational::one() / (&eight * &nr * sigma2);
        let simplified_elyaniv_pechyony = (&nr - &half) / (&two * &mr * (&nr - &mr));
        let elyaniv_pechyony = &simplified_elyaniv_pechyony
            * (BigRational::one() - BigRational::one() / (&two * &max));
        Ok(Self {
            subgaussian,
            subgaussian_loose,
            elyaniv_pechyony,
            simplified_elyaniv_pechyony,
        })
    }

    /// `σ²` at which `1/(8Nσ²)` equals `(N - 1/2) / (2m(N - m))`.
    pub fn simplified_crossover(n: usize, m: usize) -> BigRational {
        let (nr, mr) = (int(n), int(m));
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        &mr * (&nr - &mr) / (int(4) * &nr * (&nr - half))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(n: usize, m: usize, sigma2: f64, eq_m: f64) -> BoundParams {
        BoundParams::new(n, m, sigma2, eq_m)
    }

    #[test]
    fn h_and_phi_values() {
        assert_eq!(h_fn(0.0).unwrap(), 0.0);
        assert_eq!(phi_fn(0.0), 0.0);
        let e = std::f64::consts::E;
        assert_relative_eq!(h_fn(e - 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert!(h_fn(-1.0).is_err());
        assert!(h_fn(f64::NAN).is_err());
        for k in 1..=1000 {
            let u = k as f64 / 100.0;
            assert!(h_fn(u).unwrap() >= u * u / (2.0 * (1.0 + u / 3.0)));
        }
    }

    #[test]
    fn subgaussian_examples() {
        let p = params(100, 50, 0.25, 0.0);
        assert_eq!(tail_subgaussian(&p).value, 1.0);
        assert_eq!(
            tail_subgaussian(&params(100, 50, 0.0, 0.0).at_eps(0.1)).value,
            0.0
        );
        let v = tail_subgaussian(&p.at_eps(10.0)).value;
        assert_relative_eq!(v, (-0.51f64).exp(), max_relative = 1e-14);
        assert!(tail_subgaussian_loose(&p.at_eps(10.0)).value > v);
    }

    #[test]
    fn subgaussian_deviation_examples() {
        let p = params(8, 4, 0.25, 0.0);
        assert_eq!(deviation_subgaussian(&p).value, 0.0);
        assert_relative_eq!(
            deviation_subgaussian(&p.at_t(2.0)).value,
            2.0 * 8f64.sqrt(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            deviation_subgaussian(&p.at_t(4.0)).value,
            2f64.sqrt() * deviation_subgaussian(&p.at_t(2.0)).value,
            max_relative = 1e-14
        );
    }

    #[test]
    fn talagrand_examples() {
        let p = params(500, 50, 0.1, 2.0);
        assert_relative_eq!(p.v(), 9.0, epsilon = 1e-14);
        assert_eq!(tail_talagrand_swor(&p).value, 1.0);
        assert_eq!(tail_talagrand_swor_bernstein(&p).value, 1.0);
        let h = (5.0 / 3.0) * (5.0f64 / 3.0).ln() - 2.0 / 3.0;
        assert_relative_eq!(
            tail_talagrand_swor(&p.at_eps(6.0)).value,
            (-9.0 * h).exp(),
            max_relative = 1e-13
        );
        let dev = deviation_talagrand_swor(&p.at_t(2.0)).value;
        assert_relative_eq!(dev, 6.0 + 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(dev, deviation_bousquet(&p.at_t(2.0)).value);
        assert_eq!(deviation_talagrand_swor(&p).value, 0.0);
    }

    #[test]
    fn degenerate_v_gives_zero_tail() {
        let p = params(10, 5, 0.0, 0.0).at_eps(0.5);
        assert_eq!(tail_talagrand_swor(&p).value, 0.0);
        assert_eq!(tail_bousquet_bernstein(&p).value, 0.0);
    }

    #[test]
    fn elyaniv_pechyony_examples() {
        let p = params(100, 50, 0.25, 0.0);
        assert_eq!(tail_elyaniv_pechyony(&p).value, 1.0);
        assert_relative_eq!(
            tail_elyaniv_pechyony(&p.at_eps(10.0)).value,
            (-1.9701f64).exp(),
            max_relative = 1e-12
        );
        // variance does not enter
        assert_eq!(
            tail_elyaniv_pechyony(&params(100, 50, 0.01, 0.0).at_eps(10.0)).value,
            tail_elyaniv_pechyony(&p.at_eps(10.0)).value
        );
        let full = params(10, 10, 0.2, 0.0);
        assert_eq!(tail_elyaniv_pechyony(&full).value, 1.0);
        assert_eq!(tail_elyaniv_pechyony(&full.at_eps(0.1)).value, 0.0);
    }

    #[test]
    fn gap_bound_examples() {
        assert_eq!(gap_bound(7, 1), 2.0 / 7.0);
        assert_eq!(gap_bound(4, 2), 4.0);
        let g = gap_bound(100_000, 10);
        assert_relative_eq!(g, 0.02, epsilon = 1e-15);
        assert!(g < 10f64.sqrt());
    }

    #[test]
    fn params_validation() {
        assert!(params(10, 0, 0.1, 0.0).validate().is_err());
        assert!(params(10, 11, 0.1, 0.0).validate().is_err());
        assert!(params(10, 5, 1.5, 0.0).validate().is_err());
        assert!(params(10, 5, 0.1, 0.0).at_t(-1.0).validate().is_err());
        assert!(params(10, 10, 1.0, 3.0).validate().is_ok());
    }

    #[test]
    fn bound_metadata() {
        assert!(Bound::SubGaussian.covers_lower_tail());
        assert!(Bound::ElYanivPechyony.covers_lower_tail());
        assert!(!Bound::TalagrandSwor.covers_lower_tail());
        assert_eq!(Bound::Bousquet.center(), Center::AroundEQ);
        assert!(Bound::ElYanivPechyony
            .deviation(&params(4, 2, 0.1, 0.0))
            .is_none());
    }

    #[test]
    fn compare_exponent_regimes() {
        // N = 2m, σ² = 1/64: sub-Gaussian wins
        let r = compare_exponents(200, 100, 1.0 / 64.0, 5.0).unwrap();
        assert_eq!(r.tightest, vec![ExponentForm::SubGaussian]);
        // m = N/100, σ² = 1/4: El-Yaniv–Pechyony wins
        let r = compare_exponents(10_000, 100, 0.25, 5.0).unwrap();
        assert_eq!(r.tightest, vec![ExponentForm::ElYanivPechyony]);
        // ε = 0: all exponents vanish and tie
        let r = compare_exponents(200, 100, 0.1, 0.0).unwrap();
        assert_eq!(r.tightest.len(), 3);
    }

    #[test]
    fn crossover_near_one_sixteenth() {
        for m in [10usize, 50, 500] {
            let r = compare_exponents(2 * m, m, 1.0 / 16.0, 1.0).unwrap();
            let x = r.simplified_crossover_sigma2.unwrap();
            let factor = 1.0 - 1.0 / (2.0 * m as f64);
            assert!((1.0 / 16.0) / x >= factor && (1.0 / 16.0) / x <= 1.0 / factor);
        }
    }

    #[test]
    fn exact_rates_agree_with_floats() {
        let s2 = BigRational::new(BigInt::from(1), BigInt::from(16));
        let exact = ExactRates::new(100, 50, &s2).unwrap();
        let as_f = |r: &BigRational| {
            use num_traits::ToPrimitive;
            r.to_f64().unwrap()
        };
        let fl = compare_exponents(100, 50, 1.0 / 16.0, 1.0).unwrap();
        let sg = fl
            .entries
            .iter()
            .find(|e| e.form == ExponentForm::SubGaussian)
            .unwrap();
        assert_relative_eq!(-as_f(&exact.subgaussian), sg.exponent, max_relative = 1e-14);
        assert!(ExactRates::new(10, 10, &s2).is_err());
    }

    proptest! {
        #[test]
        fn tails_are_probabilities_and_monotone(
            n in 2usize..2000, frac in 0.01f64..1.0, sigma2 in 0.0f64..1.0,
            eq_m in 0.0f64..20.0, e1 in 0.0f64..100.0, de in 0.0f64..50.0,
        ) {
            let m = ((n as f64 * frac).ceil() as usize).clamp(1, n);
            let p = params(n, m, sigma2, eq_m);
            for b in Bound::ALL {
                let a = b.tail(&p.at_eps(e1)).value;
                let c = b.tail(&p.at_eps(e1 + de)).value;
                prop_assert!((0.0..=1.0).contains(&a));
                prop_assert!(c <= a);
            }
        }

        #[test]
        fn deviation_and_tail_are_dual(
            n in 2usize..2000, frac in 0.01f64..0.99, sigma2 in 1e-4f64..1.0,
            eq_m in 0.0f64..20.0, t in 0.0f64..10.0,
        ) {
            let m = ((n as f64 * frac).ceil() as usize).clamp(1, n - 1);
            let p = params(n, m, sigma2, eq_m).at_t(t);
            for b in [Bound::SubGaussian, Bound::TalagrandSwor, Bound::Bousquet] {
                let d = b.deviation(&p).unwrap().value;
                prop_assert!(d >= 0.0);
                let tail = b.tail(&p.at_eps(d)).value;
                prop_assert!(tail <= (-t).exp() * (1.0 + 1e-9), "{:?}: {} vs {}", b, tail, (-t).exp());
                let d2 = b.deviation(&p.at_t(t + 0.5)).unwrap().value;
                prop_assert!(d2 >= d);
            }
        }

        #[test]
        fn bennett_form_dominates_bernstein_form(
            v in 1e-3f64..100.0, eps in 1e-3f64..200.0,
        ) {
            let p = BoundParams { n: 10, m: 1, sigma2: 0.0, eq_m: v / 2.0, t: 0.0, eps };
            let bennett = tail_talagrand_swor(&p).value;
            prop_assert!(bennett <= tail_talagrand_swor_bernstein(&p).value);
            prop_assert!(tail_bousquet(&p).value <= tail_bousquet_bernstein(&p).value);
            prop_assert_eq!(bennett.to_bits(), tail_bousquet(&p).value.to_bits());
        }
    }
}
