use crate::data::{interaction_column, pearson, Dataset, EffectIndex, Family};
use crate::error::{Error, Result};

use super::binary::{binary_cor, binary_spread};
use super::kernel::{scan_pairs, PairVisitor, ResponseMoments};

/// Per-variable aggregated correlation scores.
#[derive(Debug, Clone, PartialEq)]
pub struct AcorScores {
    scores: Vec<f64>,
    partners: Vec<usize>,
    zero_variance: usize,
}

impl AcorScores {
    pub fn new(scores: Vec<f64>, partners: Vec<usize>) -> Self {
        assert_eq!(scores.len(), partners.len());
        Self {
            scores,
            partners,
            zero_variance: 0,
        }
    }

    pub fn p(&self) -> usize {
        self.scores.len()
    }

    /// Scores indexed by `j - 1`.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn partners(&self) -> &[usize] {
        &self.partners
    }

    pub fn score(&self, j: usize) -> f64 {
        self.scores[j - 1]
    }

    /// Partner achieving the maximum for variable `j`; 0 means the main effect.
    pub fn partner(&self, j: usize) -> usize {
        self.partners[j - 1]
    }

    /// Number of candidate effects whose product column was constant and
    /// therefore scored 0.
    pub fn zero_variance_count(&self) -> usize {
        self.zero_variance
    }

    /// Variables in descending score order, ties by ascending index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (1..=self.p()).collect();
        idx.sort_by(|&a, &b| {
            self.scores[b - 1]
                .total_cmp(&self.scores[a - 1])
                .then(a.cmp(&b))
        });
        idx
    }
}

struct MaxVisitor {
    best: Vec<f64>,
    partner: Vec<usize>,
}

impl MaxVisitor {
    fn new(p: usize) -> Self {
        Self {
            best: vec![f64::NEG_INFINITY; p],
            partner: vec![usize::MAX; p],
        }
    }

    #[inline]
    fn offer(&mut self, var: usize, score: f64, partner: usize) {
        let i = var - 1;
        let cur = self.best[i];
        if score > cur || (score == cur && partner < self.partner[i]) {
            self.best[i] = score;
            self.partner[i] = partner;
        }
    }
}

impl PairVisitor for MaxVisitor {
    #[inline]
    fn visit(&mut self, j: usize, k: usize, cor: f64) {
        let s = cor.abs();
        if j == 0 {
            self.offer(k, s, 0);
        } else {
            self.offer(j, s, k);
            self.offer(k, s, j);
        }
    }

    fn merge(&mut self, other: Self) {
        for (i, (s, k)) in other.best.into_iter().zip(other.partner).enumerate() {
            if k != usize::MAX {
                self.offer(i + 1, s, k);
            }
        }
    }
}

fn acor_with(ds: &Dataset, m: ResponseMoments, workers: usize) -> AcorScores {
    let out = scan_pairs(ds, m, workers, || MaxVisitor::new(ds.p()));
    AcorScores {
        scores: out.visitor.best,
        partners: out.visitor.partner,
        zero_variance: out.zero_variance,
    }
}

/// Aggregated correlation of every variable using Pearson correlation.
///
/// Working memory is a few `n × 64` panels per worker plus `O(p)` per worker
/// for the running maxima; the result does not depend on `workers`.
pub fn acor_all(ds: &Dataset, workers: usize) -> AcorScores {
    acor_with(ds, ResponseMoments::pearson(ds.y()), workers)
}

/// [`acor_all`] with the two-class binary correlation in place of Pearson.
pub fn binary_acor_all(ds: &Dataset, workers: usize) -> Result<AcorScores> {
    if ds.family() != Family::Binomial {
        return Err(Error::WrongFamily("binary screening needs a binomial response".into()));
    }
    let n1 = ds.n_positive();
    let m = ResponseMoments {
        mean: n1 as f64 / ds.n() as f64,
        spread: binary_spread(ds.n(), n1),
    };
    Ok(acor_with(ds, m, workers))
}

/// Family-appropriate screening scores: Pearson for gaussian data, the binary
/// correlation for binomial data.
pub fn screen_scores(ds: &Dataset, workers: usize) -> Result<AcorScores> {
    match ds.family() {
        Family::Gaussian => Ok(acor_all(ds, workers)),
        Family::Binomial => binary_acor_all(ds, workers),
    }
}

fn acor_single(
    ds: &Dataset,
    j: usize,
    cor: impl Fn(&[f64]) -> Result<f64>,
) -> Result<(f64, usize)> {
    if j == 0 || j > ds.p() {
        return Err(Error::IndexOutOfRange(format!("variable {j} with p = {}", ds.p())));
    }
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for k in (0..=ds.p()).filter(|&k| k != j) {
        let e = if k == 0 {
            EffectIndex::main(j)
        } else {
            EffectIndex::pair(j, k)
        };
        let z = interaction_column(ds, e)?;
        let s = match cor(&z) {
            Ok(c) => c.abs(),
            Err(Error::ZeroVariance) => 0.0,
            Err(e) => return Err(e),
        };
        if s > best.0 {
            best = (s, k);
        }
    }
    Ok(best)
}

/// Aggregated correlation of one variable by direct enumeration of its
/// partners: `max_{k != j} |cor(x_j ∘ x_k, y)|` and the smallest maximising
/// `k` (0 for the main effect).
pub fn acor(ds: &Dataset, j: usize) -> Result<(f64, usize)> {
    acor_single(ds, j, |z| pearson(z, ds.y()))
}

/// [`acor`] with the binary correlation.
pub fn binary_acor(ds: &Dataset, j: usize) -> Result<(f64, usize)> {
    let n1 = ds.n_positive();
    acor_single(ds, j, |z| binary_cor(z, ds.y(), n1))
}

/// Screening budget: a fraction `gamma` of `n` or an explicit size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScreenSize {
    Gamma(f64),
    Fixed(usize),
}

impl ScreenSize {
    /// `gamma = 1 / log n`.
    pub fn conventional(n: usize) -> Self {
        ScreenSize::Gamma(1.0 / (n as f64).ln())
    }

    /// `d = [gamma n]` (integer part), or the explicit size.
    pub fn resolve(&self, n: usize) -> Result<usize> {
        match *self {
            ScreenSize::Gamma(g) => {
                if !(g > 0.0 && g <= 1.0) {
                    return Err(Error::InvalidGamma(format!("gamma = {g} not in (0, 1]")));
                }
                let d = (g * n as f64).floor() as usize;
                if d < 1 {
                    return Err(Error::InvalidGamma(format!("[gamma n] = [{g} * {n}] < 1")));
                }
                Ok(d)
            }
            ScreenSize::Fixed(0) => Err(Error::InvalidGamma("d must be at least 1".into())),
            ScreenSize::Fixed(d) => Ok(d),
        }
    }
}

/// Variables kept by screening.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrunkSet {
    /// Strictly increasing 1-based variable indices.
    pub indices: Vec<usize>,
    /// Requested size `d`.
    pub d: usize,
    pub size: ScreenSize,
}

impl ShrunkSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// True when `d` exceeded `p` and every variable was kept.
    pub fn clamped(&self) -> bool {
        self.d > self.indices.len()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }
}

/// Top `min(d, p)` variables by score with ties broken by ascending index.
/// `n` is the sample size used to turn a `gamma` into `d`.
pub fn shrunk_variable_set(scores: &AcorScores, n: usize, size: ScreenSize) -> Result<ShrunkSet> {
    let d = size.resolve(n)?;
    let mut indices: Vec<usize> = scores.ranking().into_iter().take(d).collect();
    indices.sort_unstable();
    Ok(ShrunkSet { indices, d, size })
}
