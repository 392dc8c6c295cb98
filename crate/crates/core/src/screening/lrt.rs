use crate::data::{Dataset, EffectIndex, Family};
use crate::error::Result;

use super::kernel::ResponseMoments;

const MAX_ITER: usize = 50;
const DEV_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 30;
const PROB_FLOOR: f64 = 1e-15;

/// Aggregated likelihood-ratio statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct LrtScores {
    /// Indexed by `j - 1`.
    pub scores: Vec<f64>,
    pub partners: Vec<usize>,
    /// Single-effect fits that failed to converge; their contribution is 0.
    pub nonconverged: Vec<EffectIndex>,
    /// Effects that perfectly separate the classes; capped at the null deviance.
    pub separated: Vec<EffectIndex>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SingleLogisticFit {
    pub intercept: f64,
    pub slope: f64,
    pub deviance: f64,
    pub converged: bool,
}

fn bernoulli_deviance(y: &[f64], eta: impl Iterator<Item = f64>) -> f64 {
    let mut dev = 0.0;
    for (yi, e) in y.iter().zip(eta) {
        let mu = (1.0 / (1.0 + (-e).exp())).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        dev -= 2.0 * if *yi == 1.0 { mu.ln() } else { (1.0 - mu).ln() };
    }
    dev
}

pub(crate) fn null_deviance(n: usize, n1: usize) -> f64 {
    let (nf, n1f) = (n as f64, n1 as f64);
    let n0f = nf - n1f;
    let mut d = 0.0;
    if n1 > 0 {
        d -= 2.0 * n1f * (n1f / nf).ln();
    }
    if n0f > 0.0 {
        d -= 2.0 * n0f * (n0f / nf).ln();
    }
    d
}

/// Intercept + slope logistic regression by Newton/IRLS with step halving.
pub(crate) fn fit_single_logistic(z: &[f64], y: &[f64]) -> SingleLogisticFit {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let mut b0 = (ybar / (1.0 - ybar)).ln();
    let mut b1 = 0.0;
    let mut dev = bernoulli_deviance(y, z.iter().map(|_| b0));
    for _ in 0..MAX_ITER {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (zi, yi) in z.iter().zip(y) {
            let mu = 1.0 / (1.0 + (-(b0 + b1 * zi)).exp());
            let w = (mu * (1.0 - mu)).max(1e-12);
            let r = yi - mu;
            g0 += r;
            g1 += r * zi;
            h00 += w;
            h01 += w * zi;
            h11 += w * zi * zi;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det.abs() > 1e-300) {
            break;
        }
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let (c0, c1) = (b0 + step * d0, b1 + step * d1);
            let cand = bernoulli_deviance(y, z.iter().map(|zi| c0 + c1 * zi));
            if cand.is_finite() && cand <= dev + 1e-12 {
                accepted = Some((c0, c1, cand));
                break;
            }
            step *= 0.5;
        }
        let Some((c0, c1, cand)) = accepted else {
            break;
        };
        let change = (dev - cand).abs();
        b0 = c0;
        b1 = c1;
        dev = cand;
        if change < DEV_TOL {
            return SingleLogisticFit {
                intercept: b0,
                slope: b1,
                deviance: dev,
                converged: true,
            };
        }
    }
    SingleLogisticFit {
        intercept: b0,
        slope: b1,
        deviance: dev,
        converged: false,
    }
}

fn separates(z: &[f64], y: &[f64]) -> bool {
    let (mut lo1, mut hi1, mut lo0, mut hi0) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (zi, yi) in z.iter().zip(y) {
        if *yi == 1.0 {
            lo1 = lo1.min(*zi);
            hi1 = hi1.max(*zi);
        } else {
            lo0 = lo0.min(*zi);
            hi0 = hi0.max(*zi);
        }
    }
    hi0 < lo1 || hi1 < lo0
}

enum Contribution {
    Value(f64),
    NonConverged,
    Separated(f64),
}

fn binomial_contribution(z: &[f64], y: &[f64], null: f64) -> Contribution {
    if separates(z, y) {
        return Contribution::Separated(null);
    }
    let fit = fit_single_logistic(z, y);
    if !fit.converged {
        return Contribution::NonConverged;
    }
    Contribution::Value((null - fit.deviance).clamp(0.0, null))
}

fn gaussian_contribution(z: &[f64], y: &[f64], m: ResponseMoments) -> f64 {
    let n = z.len() as f64;
    let (mut s, mut ss, mut sy) = (0.0, 0.0, 0.0);
    for (a, b) in z.iter().zip(y) {
        s += a;
        ss += a * a;
        sy += a * b;
    }
    let szz = ss - s * s / n;
    if szz <= 1e-12 * ss || m.spread <= 0.0 {
        return 0.0;
    }
    // RSS(null) - RSS(z) = S_zy² / S_zz
    let szy = sy - m.mean * s;
    szy * szy / szz
}

/// For every variable, the largest deviance reduction over single-effect
/// GLMs `y ~ 1 + x_j ∘ x_k`, `k != j` (`k = 0` is the main effect).
///
/// Each pair is fitted once. Intended for moderate `p`: cost is `O(p² n)`
/// times the IRLS iteration count.
pub fn aggregated_lrt(ds: &Dataset) -> Result<LrtScores> {
    let (n, p) = (ds.n(), ds.p());
    let y = ds.y();
    let m = ResponseMoments::pearson(y);
    let null = null_deviance(n, ds.n_positive());

    let mut scores = vec![f64::NEG_INFINITY; p];
    let mut partners = vec![usize::MAX; p];
    let mut nonconverged = Vec::new();
    let mut separated = Vec::new();
    let mut offer = |var: usize, s: f64, partner: usize| {
        let i = var - 1;
        if s > scores[i] || (s == scores[i] && partner < partners[i]) {
            scores[i] = s;
            partners[i] = partner;
        }
    };

    let mut z = vec![0.0; n];
    for k in 1..=p {
        for j in 0..k {
            let e = EffectIndex { j, k };
            ds.interaction_into(e, &mut z)?;
            let s = match ds.family() {
                Family::Gaussian => gaussian_contribution(&z, y, m),
                Family::Binomial => match binomial_contribution(&z, y, null) {
                    Contribution::Value(v) => v,
                    Contribution::Separated(v) => {
                        separated.push(e);
                        v
                    }
                    Contribution::NonConverged => {
                        nonconverged.push(e);
                        0.0
                    }
                },
            };
            if j == 0 {
                offer(k, s, 0);
            } else {
                offer(j, s, k);
                offer(k, s, j);
            }
        }
    }

    Ok(LrtScores {
        scores,
        partners,
        nonconverged,
        separated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::standardize;
    use crate::screening::acor_all;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn ranking(v: &[f64]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
        idx
    }

    #[test]
    fn gaussian_lrt_ranks_like_acor() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (n, p) = (40, 12);
        let x: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| x[i] * x[3 * n + i] + { let e: f64 = StandardNormal.sample(&mut rng); 0.3 * e })
            .collect();
        let ds = standardize(&y, &x, p, Family::Gaussian).unwrap();
        let lrt = aggregated_lrt(&ds).unwrap();
        let acor = acor_all(&ds, 1);
        assert_eq!(ranking(&lrt.scores), ranking(acor.scores()));
        assert_eq!(lrt.partners, acor.partners());
    }

    #[test]
    fn single_logistic_recovers_known_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 4000;
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = z
            .iter()
            .map(|zi| {
                let pr = 1.0 / (1.0 + (-(0.5 + 1.5 * zi)).exp());
                if rand::Rng::random::<f64>(&mut rng) < pr { 1.0 } else { 0.0 }
            })
            .collect();
        let f = fit_single_logistic(&z, &y);
        assert!(f.converged);
        assert!((f.slope - 1.5).abs() < 0.15, "{f:?}");
        assert!((f.intercept - 0.5).abs() < 0.15, "{f:?}");
    }

    #[test]
    fn permuted_labels_give_chi_square_scale() {
        // Under independence the deviance drop is asymptotically χ²₁ (mean 1).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200;
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut y: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 1.0 } else { 0.0 }).collect();
        let null = null_deviance(n, y.iter().filter(|v| **v == 1.0).count());
        let mut total = 0.0;
        let reps = 300;
        for _ in 0..reps {
            y.shuffle(&mut rng);
            match binomial_contribution(&z, &y, null) {
                Contribution::Value(v) => total += v,
                _ => panic!("unexpected degenerate fit"),
            }
        }
        let mean = total / reps as f64;
        assert!(mean > 0.7 && mean < 1.4, "mean deviance drop {mean}");
    }

    #[test]
    fn separation_caps_at_null_deviance() {
        let x = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, -1.5, 1.5];
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        let ds = standardize(&y, &x, 1, Family::Binomial).unwrap();
        let lrt = aggregated_lrt(&ds).unwrap();
        let null = null_deviance(8, 4);
        assert!((lrt.scores[0] - null).abs() < 1e-12);
        assert_eq!(lrt.separated, vec![EffectIndex::main(1)]);
    }
}
