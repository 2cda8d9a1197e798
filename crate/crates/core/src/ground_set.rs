//! Finite populations, the two sampling protocols, and exhaustive enumeration
//! of samples for brute-force oracles.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Default cap on the number of items an exhaustive enumeration may yield.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1_000_000;

/// The population `{0, …, N-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSet {
    size: usize,
}

impl GroundSet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(LabError::Config("ground set must be non-empty".into()));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ids(&self) -> std::ops::Range<usize> {
        0..self.size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    WithReplacement,
    WithoutReplacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleScheme {
    pub mode: SamplingMode,
    pub m: usize,
}

impl SampleScheme {
    pub fn with_replacement(m: usize) -> Self {
        Self {
            mode: SamplingMode::WithReplacement,
            m,
        }
    }

    pub fn without_replacement(m: usize) -> Self {
        Self {
            mode: SamplingMode::WithoutReplacement,
            m,
        }
    }

    pub fn validate(&self, gs: &GroundSet) -> Result<()> {
        if self.m == 0 {
            return Err(LabError::Config("sample size m must be at least 1".into()));
        }
        if self.mode == SamplingMode::WithoutReplacement && self.m > gs.size() {
            return Err(LabError::Config(format!(
                "cannot draw m = {} distinct points from N = {}",
                self.m,
                gs.size()
            )));
        }
        Ok(())
    }
}

/// A reproducible random stream addressed by `(master_seed, stream_index)`.
///
/// Backed by ChaCha8 with the stream index mapped onto the cipher's stream
/// counter, so distinct indices give independent, non-overlapping sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Mixes a master seed with a label into a new master seed (SplitMix64
/// finalizer). Used to give each estimator in an experiment its own family of
/// trial streams.
pub fn derive_seed(master: u64, label: u64) -> u64 {
    let mut z = master ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reusable sampler. Without replacement it runs a partial Fisher–Yates
/// shuffle over an index buffer and undoes its swaps afterwards, so every draw
/// starts from the identity permutation and depends only on the RNG.
#[derive(Debug, Clone)]
pub struct Sampler {
    buffer: Vec<usize>,
    swaps: Vec<usize>,
}

impl Sampler {
    pub fn new(gs: &GroundSet) -> Self {
        Self {
            buffer: gs.ids().collect(),
            swaps: Vec::new(),
        }
    }

    /// Draws into `out` (cleared first). The scheme is assumed validated.
    pub fn draw_into<R: Rng + ?Sized>(
        &mut self,
        scheme: &SampleScheme,
        rng: &mut R,
        out: &mut Vec<usize>,
    ) {
        out.clear();
        let n = self.buffer.len();
        match scheme.mode {
            SamplingMode::WithReplacement => {
                out.extend((0..scheme.m).map(|_| rng.random_range(0..n)));
            }
            SamplingMode::WithoutReplacement => {
                self.swaps.clear();
                for i in 0..scheme.m {
                    let j = rng.random_range(i..n);
                    self.buffer.swap(i, j);
                    self.swaps.push(j);
                }
                out.extend_from_slice(&self.buffer[..scheme.m]);
                for (i, &j) in self.swaps.iter().enumerate().rev() {
                    self.buffer.swap(i, j);
                }
            }
        }
    }
}

pub fn draw_sample(gs: &GroundSet, scheme: &SampleScheme, stream: RngStream) -> Result<Vec<usize>> {
    scheme.validate(gs)?;
    let mut sampler = Sampler::new(gs);
    let mut out = Vec::with_capacity(scheme.m);
    sampler.draw_into(scheme, &mut stream.rng(), &mut out);
    Ok(out)
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// `n^m`, saturating at `u128::MAX`.
pub fn power(n: usize, m: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..m {
        match acc.checked_mul(n as u128) {
            Some(v) => acc = v,
            None => return u128::MAX,
        }
    }
    acc
}

fn check_budget(needed: u128, budget: u128) -> Result<()> {
    if needed > budget {
        Err(LabError::OracleScale { needed, budget })
    } else {
        Ok(())
    }
}

/// All `C(N, m)` subsets in lexicographic order.
pub fn enumerate_without_replacement(
    gs: &GroundSet,
    m: usize,
    budget: u128,
) -> Result<impl Iterator<Item = Vec<usize>>> {
    if m > gs.size() {
        return Err(LabError::Config(format!(
            "cannot enumerate {m}-subsets of {} points",
            gs.size()
        )));
    }
    check_budget(binomial(gs.size(), m), budget)?;
    Ok(gs.ids().combinations(m))
}

/// All `N^m` ordered sequences, last position varying fastest.
pub fn enumerate_with_replacement(
    gs: &GroundSet,
    m: usize,
    budget: u128,
) -> Result<OrderedSequences> {
    check_budget(power(gs.size(), m), budget)?;
    Ok(OrderedSequences {
        n: gs.size(),
        current: Some(vec![0; m]),
    })
}

pub struct OrderedSequences {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for OrderedSequences {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        let mut pos = next.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            next[pos] += 1;
            if next[pos] < self.n {
                self.current = Some(next);
                break;
            }
            next[pos] = 0;
        }
        Some(out)
    }
}

/// Every multiset of size `m` over the ground set together with the number of
/// ordered sequences that realize it. Summing `weight · g(multiset)` and
/// dividing by `N^m` gives the exact with-replacement expectation of any
/// order-invariant statistic `g` from `C(N+m-1, m)` terms instead of `N^m`.
pub fn enumerate_multisets(
    gs: &GroundSet,
    m: usize,
    budget: u128,
) -> Result<impl Iterator<Item = (Vec<usize>, u128)>> {
    check_budget(binomial(gs.size() + m - 1, m), budget)?;
    if power(gs.size(), m) == u128::MAX {
        return Err(LabError::OracleScale {
            needed: u128::MAX,
            budget,
        });
    }
    Ok(gs.ids().combinations_with_replacement(m).map(move |ms| {
        let w = multinomial_weight(&ms);
        (ms, w)
    }))
}

/// `m! / Π c_i!` for the run lengths `c_i` of a sorted multiset.
fn multinomial_weight(sorted: &[usize]) -> u128 {
    let mut remaining = sorted.len();
    let mut weight: u128 = 1;
    for (_, run) in &sorted.iter().chunk_by(|&&x| x) {
        let c = run.count();
        weight = weight.saturating_mul(binomial(remaining, c));
        remaining -= c;
    }
    weight
}
