use crate::data::{Dataset, Family};
use crate::error::{Error, Result};

use super::coef::CoefficientSet;
use super::config::{Fit, Method, PenaltyConfig};
use super::design::{dot, sum_sq, ScreenedDesign};
use super::gresh::{gresh_lambda_max, GreshSolver};
use super::shim::{shim_lambda_max, ShimSolver};

pub const PATH_LEN: usize = 50;
/// Smallest grid value as a fraction of `λ_max`.
pub const PATH_FLOOR: f64 = 0.01;
/// Grid points whose model uses more than this fraction of `n` degrees of
/// freedom are never chosen: near saturation the refit variance collapses
/// and the log-likelihood is meaningless.
pub const MAX_DF_FRACTION: f64 = 0.5;

/// Extended-BIC weight `ln p · ln ln n`.
pub fn kappa_ebic(p: usize, n: usize) -> f64 {
    (p as f64).ln() * (n as f64).ln().ln()
}

/// Gaussian log-likelihood at the MLE of the noise variance.
pub fn gaussian_loglik(sigma2: f64, n: usize) -> f64 {
    let n = n as f64;
    -0.5 * n * (1.0 + (2.0 * std::f64::consts::PI).ln()) - 0.5 * n * sigma2.ln()
}

/// `PATH_LEN` geometric points from `lambda_max` down to `PATH_FLOOR · lambda_max`.
pub fn lambda_grid(lambda_max: f64) -> Vec<f64> {
    let ratio = PATH_FLOOR.powf(1.0 / (PATH_LEN - 1) as f64);
    (0..PATH_LEN).map(|i| lambda_max * ratio.powi(i as i32)).collect()
}

/// Which residuals estimate the noise variance at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GicVariance {
    /// Least-squares refit on the support selected at that point; falls back
    /// to the penalised residuals when the refit is rank deficient.
    #[default]
    Refit,
    /// Residuals of the shrunken penalised fit.
    Penalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GicRecord {
    pub lambda1: f64,
    pub lambda2: f64,
    pub loglik: f64,
    pub df: usize,
    pub sigma2_hat: f64,
    pub gic: f64,
    pub converged: bool,
    /// Converged and below the degrees-of-freedom cap; only these compete.
    pub eligible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GicResult {
    pub method: Method,
    pub vars: Vec<usize>,
    pub lambda_grid: Vec<f64>,
    pub records: Vec<GicRecord>,
    pub chosen: usize,
    pub kappa: f64,
    /// Coefficients at the chosen grid point.
    pub model: CoefficientSet,
}

impl GicResult {
    pub fn chosen_record(&self) -> &GicRecord {
        &self.records[self.chosen]
    }
}

enum Solver<'a> {
    Gresh(GreshSolver<'a>),
    Shim(ShimSolver<'a>),
}

impl Solver<'_> {
    fn run(&mut self, cfg: &PenaltyConfig) -> Fit {
        match self {
            Solver::Gresh(s) => s.run(cfg),
            Solver::Shim(s) => s.run(cfg),
        }
    }

    fn residual(&self) -> &[f64] {
        match self {
            Solver::Gresh(s) => s.residual(),
            Solver::Shim(s) => s.residual(),
        }
    }
}

/// Fits the warm-started path over the variables `vars` and picks the grid
/// point minimising `-2ℓ + κ·df`, where `df` counts nonzero coefficients
/// including the intercept.
pub fn lambda_path_gic(ds: &Dataset, vars: &[usize], method: Method, kappa: f64) -> Result<GicResult> {
    lambda_path_gic_with(ds, vars, method, kappa, GicVariance::default())
}

pub fn lambda_path_gic_with(
    ds: &Dataset,
    vars: &[usize],
    method: Method,
    kappa: f64,
    variance: GicVariance,
) -> Result<GicResult> {
    if ds.family() != Family::Gaussian {
        return Err(Error::WrongFamily("penalised path needs a gaussian response".into()));
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidInput(format!("kappa must be nonnegative, got {kappa}")));
    }
    let design = ScreenedDesign::new(ds, vars)?;
    let (lambda_max, mut solver) = match method {
        Method::Gresh => (gresh_lambda_max(&design), Solver::Gresh(GreshSolver::new(&design))),
        Method::Shim => (shim_lambda_max(&design), Solver::Shim(ShimSolver::new(&design))),
    };
    // a response orthogonal to every column still gets a usable grid
    let grid = lambda_grid(lambda_max.max(1e-8));
    let n = ds.n();

    let mut records: Vec<GicRecord> = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, CoefficientSet)> = None;
    for &lam in &grid {
        let cfg = PenaltyConfig::for_method(method, lam);
        let fit = solver.run(&cfg);
        let rss = match variance {
            GicVariance::Refit => refit_rss(&design, &fit.coefs),
            GicVariance::Penalized => None,
        }
        .unwrap_or_else(|| sum_sq(solver.residual()));
        let sigma2 = (rss / n as f64).max(f64::MIN_POSITIVE);
        let loglik = gaussian_loglik(sigma2, n);
        let df = fit.coefs.df();
        let gic = -2.0 * loglik + kappa * df as f64;
        let rec = GicRecord {
            lambda1: cfg.lambda1,
            lambda2: cfg.lambda2,
            loglik,
            df,
            sigma2_hat: sigma2,
            gic,
            converged: fit.converged,
            eligible: fit.converged && df as f64 <= MAX_DF_FRACTION * n as f64,
        };
        let better = match &best {
            None => true,
            Some((i, _)) => gic < records[*i].gic,
        };
        if rec.eligible && better {
            best = Some((records.len(), fit.coefs));
        }
        records.push(rec);
    }
    let (chosen, model) = best.ok_or(Error::PathFailed)?;
    Ok(GicResult {
        method,
        vars: design.vars().to_vec(),
        lambda_grid: grid,
        records,
        chosen,
        kappa,
        model,
    })
}

/// Residual sum of squares of the least-squares fit of `y` on an intercept
/// and the nonzero columns of `coefs`; `None` if the normal equations are
/// not positive definite.
pub(crate) fn refit_rss(design: &ScreenedDesign, coefs: &CoefficientSet) -> Option<f64> {
    let (_, beta) = design.from_coefficients(coefs);
    let support: Vec<usize> = (0..beta.len()).filter(|&c| beta[c] != 0.0).collect();
    let n = design.n();
    let y = design.y();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let k = support.len();
    if k == 0 {
        return Some(tss);
    }
    if k + 1 >= n {
        return None;
    }
    // centre the columns so the intercept drops out
    let mut cols = Vec::with_capacity(n * k);
    for &c in &support {
        let col = design.col(c);
        let m = col.iter().sum::<f64>() / n as f64;
        cols.extend(col.iter().map(|v| v - m));
    }
    let col = |a: usize| &cols[a * n..(a + 1) * n];
    let gram = nalgebra::DMatrix::from_fn(k, k, |a, b| dot(col(a), col(b)));
    let rhs = nalgebra::DVector::from_fn(k, |a, _| dot(col(a), y));
    let chol = gram.cholesky()?;
    let coef = chol.solve(&rhs);
    let explained = coef.dot(&rhs);
    Some((tss - explained).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{standardize, EffectIndex};
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn dataset(n: usize, p: usize, seed: u64, signal: impl Fn(&[f64], usize, usize) -> f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let e: f64 = StandardNormal.sample(&mut rng);
                signal(&x, n, i) + e
            })
            .collect();
        standardize(&y, &x, p, Family::Gaussian).unwrap()
    }

    #[test]
    fn kappa_at_reference_size() {
        let k = kappa_ebic(2000, 200);
        assert!((k - 12.67).abs() < 0.005, "{k}");
    }

    #[test]
    fn grid_shape() {
        let g = lambda_grid(2.0);
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 2.0);
        assert!((g[49] - 0.02).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn zero_kappa_picks_best_fit() {
        let ds = dataset(60, 4, 1, |x, n, i| x[i] + x[i] * x[n + i]);
        for method in [Method::Gresh, Method::Shim] {
            let r = lambda_path_gic(&ds, &[1, 2, 3, 4], method, 0.0).unwrap();
            let best = r
                .records
                .iter()
                .filter(|r| r.eligible)
                .map(|r| r.loglik)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(r.chosen_record().loglik, best);
        }
    }

    #[test]
    fn chosen_record_minimises_gic() {
        let ds = dataset(80, 5, 2, |x, n, i| 2.0 * x[i] + x[i] * x[2 * n + i]);
        let r = lambda_path_gic(&ds, &[1, 2, 3, 4, 5], Method::Gresh, kappa_ebic(500, 80)).unwrap();
        assert!(r.records.iter().all(|x| x.gic >= r.chosen_record().gic || !x.eligible));
        assert_eq!(r.model.df(), r.chosen_record().df);
        let cap = 1 + 5 + 10;
        assert!(r.records.iter().all(|x| x.df <= cap));
    }

    #[test]
    fn refit_rss_matches_direct_least_squares() {
        let ds = dataset(40, 3, 3, |x, n, i| x[i] + x[i] * x[n + i]);
        let design = ScreenedDesign::new(&ds, &[1, 2, 3]).unwrap();
        let mut coefs = CoefficientSet::zeros(&[1, 2, 3]);
        coefs.main.insert(1, 0.3);
        coefs.inter.insert(EffectIndex::pair(1, 2), 0.1);
        let z: Vec<f64> = (0..40).map(|i| ds.column(1)[i] * ds.column(2)[i]).collect();
        let x = DMatrix::from_fn(40, 3, |i, c| match c {
            0 => 1.0,
            1 => ds.column(1)[i],
            _ => z[i],
        });
        let y = DVector::from_column_slice(ds.y());
        let b = x.clone().svd(true, true).solve(&y, 1e-12).unwrap();
        let direct = (&y - &x * b).norm_squared();
        assert!((refit_rss(&design, &coefs).unwrap() - direct).abs() < 1e-9);
        assert!((refit_rss(&design, &CoefficientSet::zeros(&[1, 2, 3])).unwrap() - 40.0).abs() < 1e-9);
    }

    #[test]
    fn binomial_rejected() {
        let y = [0.0, 1.0, 0.0, 1.0, 1.0];
        let x = [1.0, 2.0, 3.0, 4.0, 6.0];
        let ds = standardize(&y, &x, 1, Family::Binomial).unwrap();
        assert!(matches!(lambda_path_gic(&ds, &[1], Method::Gresh, 1.0), Err(Error::WrongFamily(_))));
    }

    /// Exhaustive oracle: OLS on every subset of the six effects of three
    /// variables, scored with the same criterion.
    fn oracle_support(ds: &Dataset, kappa: f64) -> Vec<EffectIndex> {
        let effects = [
            EffectIndex::main(1),
            EffectIndex::main(2),
            EffectIndex::main(3),
            EffectIndex::pair(1, 2),
            EffectIndex::pair(1, 3),
            EffectIndex::pair(2, 3),
        ];
        let n = ds.n();
        let col = |e: EffectIndex| -> Vec<f64> {
            (0..n)
                .map(|i| if e.j == 0 { ds.column(e.k)[i] } else { ds.column(e.j)[i] * ds.column(e.k)[i] })
                .collect()
        };
        let y = DVector::from_column_slice(ds.y());
        let mut best = (f64::INFINITY, Vec::new());
        for mask in 0u32..64 {
            let chosen: Vec<EffectIndex> = (0..6).filter(|b| mask >> b & 1 == 1).map(|b| effects[b]).collect();
            let mut x = DMatrix::from_element(n, chosen.len() + 1, 1.0);
            for (c, &e) in chosen.iter().enumerate() {
                x.set_column(c + 1, &DVector::from_vec(col(e)));
            }
            let coef = (x.transpose() * &x).lu().solve(&(x.transpose() * &y)).unwrap();
            let rss = (&y - &x * coef).norm_squared();
            let gic = -2.0 * gaussian_loglik(rss / n as f64, n) + kappa * (chosen.len() + 1) as f64;
            if gic < best.0 {
                best = (gic, chosen);
            }
        }
        best.1.sort();
        best.1
    }

    #[test]
    fn strong_signal_support_matches_exhaustive_oracle() {
        let kappa = kappa_ebic(1000, 150);
        for seed in 0..5 {
            let ds = dataset(150, 3, 10 + seed, |x, n, i| {
                1.5 * x[i] + 1.5 * x[n + i] + 1.5 * x[i] * x[n + i]
            });
            let r = lambda_path_gic(&ds, &[1, 2, 3], Method::Gresh, kappa).unwrap();
            let mut support: Vec<EffectIndex> = r.model.selected_mains().into_iter().map(EffectIndex::main).collect();
            support.extend(r.model.selected_interactions());
            support.sort();
            let truth = vec![EffectIndex::main(1), EffectIndex::main(2), EffectIndex::pair(1, 2)];
            assert_eq!(oracle_support(&ds, kappa), truth, "seed {seed}");
            assert_eq!(support, truth, "seed {seed}");
        }
    }
}
