//! Kernel classes: normalized Gram matrices, a Jacobi eigensolver, the
//! eigenvalue tail-sum bound on the localized fixed point, and finite nets of
//! the RKHS unit ball turned into loss tables.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::ground_set::RngStream;
use crate::table::Table;
use crate::transductive_lab::TransductiveProblem;

/// Off-diagonal threshold relative to the matrix scale.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KernelKind {
    Gaussian {
        bandwidth: f64,
    },
    Linear,
    Polynomial {
        degree: u32,
        offset: f64,
    },
    /// `k(x, y) = 1` when the points coincide, else `0`
    Delta,
}

impl KernelKind {
    fn validate(&self) -> Result<()> {
        match *self {
            KernelKind::Gaussian { bandwidth } if !(bandwidth > 0.0 && bandwidth.is_finite()) => {
                Err(LabError::Config(format!(
                    "Gaussian bandwidth must be positive, got {bandwidth}"
                )))
            }
            KernelKind::Polynomial { offset, .. } if !(offset >= 0.0 && offset.is_finite()) => {
                Err(LabError::Config(format!(
                    "polynomial offset must be nonnegative, got {offset}"
                )))
            }
            _ => Ok(()),
        }
    }

    fn raw(&self, x: &[f64], y: &[f64]) -> f64 {
        let dot = || x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        match *self {
            KernelKind::Gaussian { bandwidth } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
                (-d2 / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelKind::Linear => dot(),
            KernelKind::Polynomial { degree, offset } => (dot() + offset).powi(degree as i32),
            KernelKind::Delta => {
                if x == y {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// A kernel rescaled so that `k(x, x) ≤ 1` on the point set it was fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub scale: f64,
}

impl KernelSpec {
    /// Chooses `scale = 1 / max(1, max_i k(X_i, X_i))`.
    pub fn normalized(kind: KernelKind, points: &Table) -> Result<Self> {
        kind.validate()?;
        let max_diag = points
            .iter_rows()
            .map(|x| kind.raw(x, x))
            .fold(0.0, f64::max);
        if !max_diag.is_finite() {
            return Err(LabError::Domain("kernel diagonal is not finite".into()));
        }
        Ok(Self {
            kind,
            scale: 1.0 / max_diag.max(1.0),
        })
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.scale * self.kind.raw(x, y)
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Takes the lower triangle of `rows` as authoritative and mirrors it.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(LabError::Input(
                "matrix must be square and non-empty".into(),
            ));
        }
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = rows[i][j];
                if !v.is_finite() {
                    return Err(LabError::Input(format!("non-finite entry at ({i}, {j})")));
                }
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Ok(Self { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn to_table(&self) -> Table {
        Table::from_rows((0..self.n).map(|i| self.row(i).to_vec()).collect())
            .expect("finite square matrix")
    }
}

/// `(K_N)_{ij} = k(X_i, X_j) / N` over the rows of `points`.
pub fn gram_matrix(points: &Table, spec: &KernelSpec) -> Result<SymMatrix> {
    let n = points.rows();
    let inv_n = 1.0 / n as f64;
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let xi = points.row(i);
            (0..n).map(move |j| spec.eval(xi, points.row(j)) * inv_n)
        })
        .collect();
    if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
        return Err(LabError::Domain(format!(
            "kernel value at ({}, {}) is not finite",
            idx / n,
            idx % n
        )));
    }
    Ok(SymMatrix { n, data })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    /// eigenvalues, nonincreasing
    pub lambdas: Vec<f64>,
    /// largest off-diagonal magnitude left after the last sweep
    pub residual: f64,
    pub sweeps: usize,
}

impl EigenSpectrum {
    pub fn trace(&self) -> f64 {
        self.lambdas.iter().sum()
    }
}

fn max_off_diagonal(a: &[f64], n: usize) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            m = m.max(a[i * n + j].abs());
        }
    }
    m
}

/// Eigenvalues by cyclic Jacobi rotations, stopping once every off-diagonal
/// entry is at most [`JACOBI_TOL`] times the matrix scale. Eigenvalues that
/// cannot be told apart from zero at that accuracy are returned as zero.
pub fn eigen_spectrum(matrix: &SymMatrix) -> Result<EigenSpectrum> {
    let n = matrix.n;
    let mut a = matrix.data.clone();
    let scale = {
        let diag: f64 = (0..n).map(|i| a[i * n + i].abs()).sum();
        diag.max(a.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
    };
    let threshold = JACOBI_TOL * scale;
    let mut sweeps = 0;
    let mut residual = max_off_diagonal(&a, n);
    while residual > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LabError::NoConvergence { sweeps, residual });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[k * n + p] = new_kp;
                    a[p * n + k] = new_kp;
                    a[k * n + q] = new_kq;
                    a[q * n + k] = new_kq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
        sweeps += 1;
        residual = max_off_diagonal(&a, n);
    }
    // each diagonal entry is within (n - 1) · residual of an eigenvalue, so
    // anything inside that radius of zero is reported as zero
    let radius = n as f64 * threshold;
    let mut lambdas: Vec<f64> = (0..n)
        .map(|i| a[i * n + i])
        .map(|l| if l.abs() <= radius { 0.0 } else { l })
        .collect();
    lambdas.sort_by(|x, y| y.total_cmp(x));
    Ok(EigenSpectrum {
        lambdas,
        residual,
        sweeps,
    })
}

/// Which eigenvalues the tail sum at `θ` keeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailConvention {
    /// `Σ_{i > θ} λ_i`, so `θ = N` leaves nothing
    #[default]
    Exclusive,
    /// `Σ_{i ≥ θ} λ_i`, the same as exclusive at `θ = 0`
    Inclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailsumBound {
    /// `c_L` times the bracketed minimum
    pub value: f64,
    /// `min_θ (θ/k + √(tail(θ)/k))`
    pub bracket: f64,
    pub theta_star: usize,
    pub k: usize,
    pub c_l: f64,
    pub convention: TailConvention,
}

/// Bound on the localized fixed point for sample size `k`:
/// `c_L · min_{0 ≤ θ ≤ k} (θ/k + √((1/k) Σ_{tail} λ_i))`, with eigenvalues
/// indexed from 1 and the tail chosen by `convention`. Ties keep the
/// smallest `θ`.
pub fn tailsum_bound(
    spec: &EigenSpectrum,
    k: usize,
    c_l: f64,
    convention: TailConvention,
) -> Result<TailsumBound> {
    if k == 0 {
        return Err(LabError::Config("sample size k must be positive".into()));
    }
    if !(c_l > 0.0) {
        return Err(LabError::Config(format!("c_L must be positive, got {c_l}")));
    }
    let n = spec.lambdas.len();
    // suffix[j] = Σ_{i ≥ j+1} λ_i in 1-based indexing
    let mut suffix = vec![0.0; n + 1];
    for j in (0..n).rev() {
        suffix[j] = suffix[j + 1] + spec.lambdas[j];
    }
    let kf = k as f64;
    let mut best = (f64::INFINITY, 0);
    for theta in 0..=k.min(n) {
        let tail = match convention {
            TailConvention::Exclusive => suffix[theta],
            TailConvention::Inclusive => suffix[theta.saturating_sub(1)],
        };
        let v = theta as f64 / kf + (tail.max(0.0) / kf).sqrt();
        if v < best.0 {
            best = (v, theta);
        }
    }
    Ok(TailsumBound {
        value: c_l * best.0,
        bracket: best.0,
        theta_star: best.1,
        k,
        c_l,
        convention,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointLoss {
    /// `min(1, (f - y)²)`
    #[default]
    ClippedSquared,
    /// `min(1, |f - y|)`
    ClippedAbsolute,
}

impl PointLoss {
    pub fn eval(&self, prediction: f64, label: f64) -> f64 {
        match self {
            PointLoss::ClippedSquared => (prediction - label).powi(2).min(1.0),
            PointLoss::ClippedAbsolute => (prediction - label).abs().min(1.0),
        }
    }
}

/// A finite net of the RKHS unit ball over the sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelNet {
    /// one coefficient vector per function, the zero function first
    pub alphas: Vec<Vec<f64>>,
    /// `αᵀ (N K_N) α` per function
    pub norms_sq: Vec<f64>,
    pub problem: TransductiveProblem,
}

const MAX_DRAW_ATTEMPTS: usize = 1000;

/// Builds `net_size` functions `f = Σ α_i k(·, X_i)` with RKHS norm at most 1
/// (the zero function plus random directions scaled to a uniform radius) and
/// their loss rows against `labels`.
pub fn kernel_hypothesis_table(
    points: &Table,
    labels: &[f64],
    spec: &KernelSpec,
    net_size: usize,
    loss: PointLoss,
    seed: u64,
) -> Result<KernelNet> {
    let n = points.rows();
    if net_size == 0 {
        return Err(LabError::Config("net size must be at least 1".into()));
    }
    if labels.len() != n {
        return Err(LabError::Input(format!(
            "{} labels for {n} points",
            labels.len()
        )));
    }
    let gram = gram_matrix(points, spec)?;
    if gram.data.iter().all(|&v| v == 0.0) {
        return Err(LabError::Domain("Gram matrix is identically zero".into()));
    }
    let nf = n as f64;
    // the kernel matrix itself, k(X_i, X_j) = N (K_N)_{ij}
    let quad = |alpha: &[f64]| {
        nf * alpha
            .iter()
            .zip(gram.mul_vec(alpha))
            .map(|(a, b)| a * b)
            .sum::<f64>()
    };
    let mut alphas = vec![vec![0.0; n]];
    let mut norms_sq = vec![0.0];
    for j in 1..net_size {
        let mut rng = RngStream::new(seed, j as u64).rng();
        let mut drawn = None;
        for _ in 0..MAX_DRAW_ATTEMPTS {
            let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let q = quad(&dir);
            if q > 0.0 {
                let radius: f64 = rng.random::<f64>();
                let s = radius / q.sqrt();
                drawn = Some(dir.into_iter().map(|a| a * s).collect::<Vec<f64>>());
                break;
            }
        }
        let alpha =
            drawn.ok_or_else(|| LabError::Domain("could not draw a nonzero function".into()))?;
        norms_sq.push(quad(&alpha));
        alphas.push(alpha);
    }
    let rows: Vec<Vec<f64>> = alphas
        .par_iter()
        .map(|alpha| {
            gram.mul_vec(alpha)
                .into_iter()
                .zip(labels)
                .map(|(v, &y)| loss.eval(nf * v, y))
                .collect()
        })
        .collect();
    Ok(KernelNet {
        alphas,
        norms_sq,
        problem: TransductiveProblem::from_rows(rows)?,
    })
}

/// `n` standard normal points in `dim` dimensions with labels
/// `1` when the first coordinate is positive and `0` otherwise.
pub fn synthetic_points(n: usize, dim: usize, seed: u64) -> Result<(Table, Vec<f64>)> {
    if n == 0 || dim == 0 {
        return Err(LabError::Config(
            "need at least one point and one dimension".into(),
        ));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64).rng();
            (0..dim).map(|_| rng.sample(StandardNormal)).collect()
        })
        .collect();
    let labels = rows
        .iter()
        .map(|r: &Vec<f64>| if r[0] > 0.0 { 1.0 } else { 0.0 })
        .collect();
    Ok((Table::from_rows(rows)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn points(rows: Vec<Vec<f64>>) -> Table {
        Table::from_rows(rows).unwrap()
    }

    /// Number of eigenvalues below `x`, from the signs of the pivots of
    /// `A - xI` (Sylvester's law of inertia).
    fn count_below(a: &[Vec<f64>], x: f64) -> usize {
        let n = a.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] -= x;
        }
        let mut negatives = 0;
        for k in 0..n {
            let mut pivot = m[k][k];
            if pivot == 0.0 {
                pivot = -1e-300;
            }
            if pivot < 0.0 {
                negatives += 1;
            }
            let (upper, lower) = m.split_at_mut(k + 1);
            let pivot_row = &upper[k][k + 1..];
            for row in lower.iter_mut() {
                let f = row[k] / pivot;
                for (x, p) in row[k + 1..].iter_mut().zip(pivot_row) {
                    *x -= f * p;
                }
            }
        }
        negatives
    }

    /// `j`-th smallest eigenvalue by bisection on the inertia count.
    fn oracle_eigenvalue(a: &[Vec<f64>], j: usize, lo: f64, hi: f64) -> f64 {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(a, mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn delta_gram_is_scaled_identity() {
        let pts = points(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let spec = KernelSpec::normalized(KernelKind::Delta, &pts).unwrap();
        let g = gram_matrix(&pts, &spec).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g.get(i, j), if i == j { 0.25 } else { 0.0 });
            }
        }
        let spec = eigen_spectrum(&g).unwrap();
        assert_eq!(spec.lambdas, vec![0.25; 4]);
        assert_eq!(spec.sweeps, 0);
    }

    #[test]
    fn linear_gram_off_diagonal_is_cosine() {
        let theta: f64 = 0.7;
        let pts = points(vec![vec![1.0, 0.0], vec![theta.cos(), theta.sin()]]);
        let spec = KernelSpec::normalized(KernelKind::Linear, &pts).unwrap();
        let g = gram_matrix(&pts, &spec).unwrap();
        assert_abs_diff_eq!(g.get(0, 1), theta.cos() / 2.0, epsilon = 1e-15);
        assert_eq!(g.get(0, 1), g.get(1, 0));
    }

    #[test]
    fn normalization_caps_diagonal() {
        let pts = points(vec![vec![3.0, 4.0], vec![1.0, 0.0], vec![0.0, 0.5]]);
        for kind in [
            KernelKind::Linear,
            KernelKind::Polynomial {
                degree: 3,
                offset: 1.0,
            },
            KernelKind::Gaussian { bandwidth: 0.8 },
        ] {
            let spec = KernelSpec::normalized(kind, &pts).unwrap();
            let g = gram_matrix(&pts, &spec).unwrap();
            for i in 0..3 {
                assert!(g.get(i, i) <= 1.0 / 3.0 + 1e-15);
            }
        }
        let spec = KernelSpec::normalized(KernelKind::Gaussian { bandwidth: 0.8 }, &pts).unwrap();
        let g = gram_matrix(&pts, &spec).unwrap();
        assert!((0..3).all(|i| g.get(i, i) == 1.0 / 3.0));
        assert!(KernelSpec::normalized(KernelKind::Gaussian { bandwidth: 0.0 }, &pts).is_err());
    }

    #[test]
    fn rank_one_spectrum() {
        let v = [1.0, -1.0, 1.0, 1.0, -1.0];
        let n = v.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| v[i] * v[j] / n as f64).collect())
            .collect();
        let spec = eigen_spectrum(&SymMatrix::from_rows(&rows).unwrap()).unwrap();
        assert_abs_diff_eq!(spec.lambdas[0], 1.0, epsilon = 1e-12);
        for l in &spec.lambdas[1..] {
            assert_abs_diff_eq!(*l, 0.0, epsilon = 1e-12);
        }
    }

    fn random_psd(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = RngStream::new(seed, 0).rng();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| a[i][k] * a[j][k]).sum())
                    .collect()
            })
            .collect();
        let tr: f64 = (0..n).map(|i| m[i][i]).sum();
        for row in &mut m {
            for v in row.iter_mut() {
                *v /= tr;
            }
        }
        m
    }

    #[test]
    fn random_psd_matches_inertia_oracle() {
        for seed in 0..5 {
            let m = random_psd(8, seed);
            let spec = eigen_spectrum(&SymMatrix::from_rows(&m).unwrap()).unwrap();
            for j in 0..8 {
                let oracle = oracle_eigenvalue(&m, j, -1.0, 2.0);
                assert!((spec.lambdas[7 - j] - oracle).abs() <= 1e-8);
            }
            assert!((spec.trace() - 1.0).abs() <= 1e-8);
            assert!(spec.lambdas.iter().all(|&l| l >= -1e-10));
        }
    }

    #[test]
    fn tailsum_zero_spectrum() {
        let spec = EigenSpectrum {
            lambdas: vec![0.0; 6],
            residual: 0.0,
            sweeps: 0,
        };
        let b = tailsum_bound(&spec, 3, 1.0, TailConvention::Exclusive).unwrap();
        assert_eq!((b.value, b.theta_star), (0.0, 0));
    }

    #[test]
    fn tailsum_delta_matches_scan() {
        for n in [4usize, 10, 30] {
            let k = n / 2;
            let spec = EigenSpectrum {
                lambdas: vec![1.0 / n as f64; n],
                residual: 0.0,
                sweeps: 0,
            };
            let got = tailsum_bound(&spec, k, 1.0, TailConvention::Exclusive).unwrap();
            let scan = (0..=k)
                .map(|t| t as f64 / k as f64 + ((n - t) as f64 / (n * k) as f64).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(got.value, scan, epsilon = 1e-15);
        }
    }

    #[test]
    fn tailsum_conventions_differ_by_one_index() {
        let spec = EigenSpectrum {
            lambdas: vec![0.5, 0.3, 0.2],
            residual: 0.0,
            sweeps: 0,
        };
        let ex = tailsum_bound(&spec, 3, 2.0, TailConvention::Exclusive).unwrap();
        let inc = tailsum_bound(&spec, 3, 2.0, TailConvention::Inclusive).unwrap();
        assert!(inc.bracket >= ex.bracket);
        assert_eq!(ex.value, 2.0 * ex.bracket);
        assert!(tailsum_bound(&spec, 0, 1.0, TailConvention::Exclusive).is_err());
    }

    #[test]
    fn low_rank_linear_kernel() {
        let (pts, _) = synthetic_points(20, 3, 4).unwrap();
        let spec = KernelSpec::normalized(KernelKind::Linear, &pts).unwrap();
        let eig = eigen_spectrum(&gram_matrix(&pts, &spec).unwrap()).unwrap();
        assert!(eig.lambdas[..3].iter().all(|&l| l > 0.0));
        assert!(eig.lambdas[3..].iter().all(|&l| l == 0.0));
        for k in [5usize, 10, 20] {
            let b = tailsum_bound(&eig, k, 1.0, TailConvention::Exclusive).unwrap();
            assert!(b.value <= 3.0 / k as f64);
        }
    }

    #[test]
    fn net_construction() {
        let (pts, labels) = synthetic_points(10, 2, 1).unwrap();
        let spec = KernelSpec::normalized(KernelKind::Gaussian { bandwidth: 1.0 }, &pts).unwrap();
        let single =
            kernel_hypothesis_table(&pts, &labels, &spec, 1, PointLoss::default(), 3).unwrap();
        assert_eq!(single.alphas, vec![vec![0.0; 10]]);
        let net =
            kernel_hypothesis_table(&pts, &labels, &spec, 25, PointLoss::default(), 3).unwrap();
        assert_eq!(net.problem.num_hypotheses(), 25);
        assert!(net.norms_sq.iter().all(|&q| q <= 1.0 + 1e-9));
        assert!(net
            .problem
            .loss()
            .iter_rows()
            .flatten()
            .all(|v| (0.0..=1.0).contains(v)));
        // the zero function predicts 0, so its loss is the label itself
        assert_eq!(net.problem.loss_row(0), labels.as_slice());
        let again =
            kernel_hypothesis_table(&pts, &labels, &spec, 25, PointLoss::default(), 3).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn net_rejects_zero_gram() {
        let pts = points(vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        let spec = KernelSpec::normalized(KernelKind::Linear, &pts).unwrap();
        assert!(
            kernel_hypothesis_table(&pts, &[0.0, 1.0], &spec, 3, PointLoss::default(), 0).is_err()
        );
    }

    proptest! {
        #[test]
        fn spectrum_properties(seed in 0u64..1000, n in 1usize..12, bw in 0.1f64..3.0) {
            let (pts, _) = synthetic_points(n, 2, seed).unwrap();
            let spec = KernelSpec::normalized(KernelKind::Gaussian { bandwidth: bw }, &pts).unwrap();
            let g = gram_matrix(&pts, &spec).unwrap();
            let eig = eigen_spectrum(&g).unwrap();
            prop_assert!((eig.trace() - g.trace()).abs() <= 1e-8 * g.trace().abs().max(1.0));
            prop_assert!(eig.lambdas.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(eig.lambdas.iter().all(|&l| l >= -1e-10));
        }

        #[test]
        fn tailsum_nonincreasing_in_k(lams in proptest::collection::vec(0.0f64..1.0, 1..30), c in 0.1f64..5.0) {
            let mut lambdas = lams;
            lambdas.sort_by(|a, b| b.total_cmp(a));
            let tr: f64 = lambdas.iter().sum();
            let spec = EigenSpectrum { lambdas, residual: 0.0, sweeps: 0 };
            let mut prev = f64::INFINITY;
            for k in 1..40 {
                let b = tailsum_bound(&spec, k, c, TailConvention::Exclusive).unwrap();
                prop_assert!(b.value <= prev + 1e-15);
                prop_assert!(b.value <= c * (tr / k as f64).sqrt() + 1e-12);
                prev = b.value;
            }
        }
    }
}
