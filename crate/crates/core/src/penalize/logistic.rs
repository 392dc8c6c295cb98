//! Penalised logistic selection on a screened set for binary responses.
//!
//! Pipeline: ℓ1-penalised logistic path (proximal Newton with coordinate
//! descent inner loops) tuned by `deviance + κ·df`; add any missing parent
//! mains of the selected interactions; unpenalised refit; then drop
//! interactions with Wald p-value above [`WALD_LEVEL`], largest first,
//! refitting after each drop. Main effects are never pruned, so parents of
//! surviving interactions stay in the model.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Dataset, EffectIndex, Family};
use crate::error::{Error, Result};

use super::coef::{CoefficientSet, ZERO_SNAP};
use super::design::{dot, ScreenedDesign};
use super::deviance::sigmoid;
use super::path::{lambda_grid, MAX_DF_FRACTION};

pub const WALD_LEVEL: f64 = 0.05;
/// Ridge weight (times `n`) used when the unpenalised refit separates.
pub const RIDGE_FALLBACK: f64 = 1e-6;

const OUTER_MAX_ITER: usize = 100;
const INNER_MAX_SWEEPS: usize = 1000;
const OUTER_TOL: f64 = 1e-6;
const INNER_TOL: f64 = 1e-7;
const NEWTON_MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 30;
const WEIGHT_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub coefs: CoefficientSet,
    /// Penalty chosen on the ℓ1 path.
    pub lambda: f64,
    pub gic: f64,
    pub kappa: f64,
    /// Wald p-values of the final model's effects.
    pub p_values: BTreeMap<EffectIndex, f64>,
    pub ridge_used: bool,
    pub warnings: Vec<String>,
}

fn neg_loglik(y: &[f64], eta: &[f64]) -> f64 {
    // log(1 + e^η) - yη, evaluated without overflow
    y.iter()
        .zip(eta)
        .map(|(&yi, &e)| e.max(0.0) + (-e.abs()).exp().ln_1p() - yi * e)
        .sum()
}

fn soft(lin: f64, kink: f64, curv: f64) -> f64 {
    super::scalar::soft_threshold(lin, kink, curv)
}

struct L1Fit {
    converged: bool,
}

/// One ℓ1-penalised logistic fit, warm-started from `(b0, beta)`.
fn l1_logistic(design: &ScreenedDesign, lam: f64, b0: &mut f64, beta: &mut [f64]) -> L1Fit {
    let n = design.n();
    let y = design.y();
    let m = beta.len();
    let nf = n as f64;
    let penalty = |beta: &[f64]| nf * lam * beta.iter().map(|b| b.abs()).sum::<f64>();
    let eta_of = |b0: f64, beta: &[f64]| {
        let mut eta = vec![b0; n];
        for (c, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                super::design::axpy(b, design.col(c), &mut eta);
            }
        }
        eta
    };

    let mut eta = eta_of(*b0, beta);
    let mut obj = neg_loglik(y, &eta) + penalty(beta);
    let mut w = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut wx = vec![0.0; n];
    for _ in 0..OUTER_MAX_ITER {
        for i in 0..n {
            let mu = sigmoid(eta[i]);
            w[i] = (mu * (1.0 - mu)).max(WEIGHT_FLOOR);
            // working residual z - η
            r[i] = (y[i] - mu) / w[i];
        }
        let sw: f64 = w.iter().sum();
        let mut nb0 = *b0;
        let mut nbeta = beta.to_vec();
        for _ in 0..INNER_MAX_SWEEPS {
            let shift = w.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / sw;
            nb0 += shift;
            for ri in &mut r {
                *ri -= shift;
            }
            let mut change = shift.abs();
            for c in 0..m {
                let x = design.col(c);
                for i in 0..n {
                    wx[i] = w[i] * x[i];
                }
                let curv = dot(&wx, x);
                if !(curv > 0.0) {
                    continue;
                }
                let old = nbeta[c];
                let new = soft(dot(&wx, &r) + curv * old, nf * lam, curv);
                if new != old {
                    super::design::axpy(old - new, x, &mut r);
                    nbeta[c] = new;
                    change = change.max((new - old).abs());
                }
            }
            if change < INNER_TOL {
                break;
            }
        }

        // step halving on the penalised objective
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cb0 = *b0 + step * (nb0 - *b0);
            let cbeta: Vec<f64> = beta.iter().zip(&nbeta).map(|(o, v)| o + step * (v - o)).collect();
            let ceta = eta_of(cb0, &cbeta);
            let cobj = neg_loglik(y, &ceta) + penalty(&cbeta);
            if cobj.is_finite() && cobj <= obj + 1e-12 * obj.abs().max(1.0) {
                accepted = Some((cb0, cbeta, ceta, cobj));
                break;
            }
            step *= 0.5;
        }
        let Some((cb0, cbeta, ceta, cobj)) = accepted else {
            return L1Fit { converged: false };
        };
        let change = beta
            .iter()
            .zip(&cbeta)
            .map(|(a, b)| (a - b).abs())
            .fold((cb0 - *b0).abs(), f64::max);
        *b0 = cb0;
        beta.copy_from_slice(&cbeta);
        eta = ceta;
        obj = cobj;
        if change < OUTER_TOL {
            return L1Fit { converged: true };
        }
    }
    L1Fit { converged: false }
}

/// Negative log-likelihood of the unpenalised refit on `support`, or of the
/// penalised coefficients when that refit fails (shrinkage would otherwise
/// make the criterion favour over-large supports).
fn support_neg_loglik(design: &ScreenedDesign, support: &[usize], b0: f64, beta: &[f64]) -> f64 {
    let mut eta = vec![b0; design.n()];
    match newton_refit(design, support, 0.0).filter(|r| r.converged) {
        Some(r) => {
            eta.fill(r.coef[0]);
            for (a, &c) in support.iter().enumerate() {
                super::design::axpy(r.coef[a + 1], design.col(c), &mut eta);
            }
        }
        None => {
            for &c in support {
                super::design::axpy(beta[c], design.col(c), &mut eta);
            }
        }
    }
    neg_loglik(design.y(), &eta)
}

/// Adds the parent main columns of every interaction column in `support`.
pub(crate) fn repair_hierarchy(design: &ScreenedDesign, support: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = support.to_vec();
    for &c in support {
        if c >= design.d() {
            let (a, b) = design.parents(c);
            out.push(a);
            out.push(b);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

struct Refit {
    /// Intercept first, then `support` order.
    coef: Vec<f64>,
    /// Standard errors in the same order.
    se: Vec<f64>,
    converged: bool,
}

/// Newton–Raphson logistic fit on an intercept and the `support` columns,
/// with an optional ridge on the non-intercept coefficients.
fn newton_refit(design: &ScreenedDesign, support: &[usize], ridge: f64) -> Option<Refit> {
    let n = design.n();
    let k = support.len() + 1;
    if k >= n {
        return None;
    }
    let y = DVector::from_column_slice(design.y());
    let mut x = DMatrix::from_element(n, k, 1.0);
    for (a, &c) in support.iter().enumerate() {
        x.set_column(a + 1, &DVector::from_column_slice(design.col(c)));
    }
    let ybar = y.mean();
    let mut coef = DVector::zeros(k);
    coef[0] = (ybar / (1.0 - ybar)).ln();
    let ridge_vec = DVector::from_fn(k, |a, _| if a == 0 { 0.0 } else { ridge });
    let objective = |c: &DVector<f64>| {
        let eta = &x * c;
        neg_loglik(y.as_slice(), eta.as_slice()) + 0.5 * c.component_mul(c).dot(&ridge_vec)
    };
    let hessian = |c: &DVector<f64>| {
        let eta = &x * c;
        let w = eta.map(|e| {
            let mu = sigmoid(e);
            mu * (1.0 - mu)
        });
        let mut xw = x.clone();
        for mut col_w in xw.column_iter_mut() {
            col_w.component_mul_assign(&w);
        }
        let mut h = x.transpose() * xw;
        for a in 1..k {
            h[(a, a)] += ridge;
        }
        h
    };
    let mut obj = objective(&coef);
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let eta = &x * &coef;
        let mu = eta.map(sigmoid);
        let grad = x.transpose() * (&y - &mu) - ridge_vec.component_mul(&coef);
        let h = hessian(&coef);
        let step = h.cholesky()?.solve(&grad);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = &coef + &step * t;
            let v = objective(&cand);
            if v.is_finite() && v <= obj + 1e-12 * obj.abs().max(1.0) {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, v)) = accepted else { break };
        let done = (obj - v).abs() < 1e-10 * (1.0 + obj.abs());
        coef = cand;
        obj = v;
        if done {
            converged = true;
            break;
        }
    }
    let cov = hessian(&coef).cholesky()?.inverse();
    let se = (0..k).map(|a| cov[(a, a)].max(0.0).sqrt()).collect();
    Some(Refit {
        coef: coef.iter().copied().collect(),
        se,
        converged,
    })
}

/// Unpenalised refit, falling back to a small ridge on failure or on
/// runaway coefficients (separation).
fn refit_with_fallback(design: &ScreenedDesign, support: &[usize], warnings: &mut Vec<String>) -> (Refit, bool) {
    if let Some(r) = newton_refit(design, support, 0.0) {
        let runaway = r.coef.iter().any(|c| c.abs() > 50.0);
        if r.converged && !runaway {
            return (r, false);
        }
    }
    warnings.push(format!(
        "unpenalised refit on {} effects did not converge (separation?); using ridge {RIDGE_FALLBACK}·n",
        support.len()
    ));
    let ridge = RIDGE_FALLBACK * design.n() as f64;
    let r = newton_refit(design, support, ridge).unwrap_or_else(|| Refit {
        coef: vec![0.0; support.len() + 1],
        se: vec![f64::INFINITY; support.len() + 1],
        converged: false,
    });
    (r, true)
}

fn wald_p(coef: f64, se: f64) -> f64 {
    if !(se > 0.0) || !se.is_finite() {
        return 1.0;
    }
    2.0 * Normal::standard().sf((coef / se).abs())
}

/// Selects a logistic interaction model on the screened variables `vars`.
pub fn logistic_select(ds: &Dataset, vars: &[usize], kappa: f64) -> Result<LogisticModel> {
    if ds.family() != Family::Binomial {
        return Err(Error::WrongFamily("logistic selection needs a binary response".into()));
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidInput(format!("kappa must be nonnegative, got {kappa}")));
    }
    let design = ScreenedDesign::new(ds, vars)?;
    let n = design.n();
    let nf = n as f64;
    let y = design.y();
    let ybar = y.iter().sum::<f64>() / nf;
    let resid: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let lambda_max = (0..design.n_cols())
        .map(|c| dot(design.col(c), &resid).abs() / nf)
        .fold(0.0, f64::max)
        .max(1e-8);

    let mut warnings = Vec::new();
    let mut b0 = (ybar / (1.0 - ybar)).ln();
    let mut beta = vec![0.0; design.n_cols()];
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    let mut failed = 0;
    for lam in lambda_grid(lambda_max) {
        let fit = l1_logistic(&design, lam, &mut b0, &mut beta);
        if !fit.converged {
            failed += 1;
            continue;
        }
        let support: Vec<usize> = (0..beta.len()).filter(|&c| beta[c].abs() >= ZERO_SNAP).collect();
        if (1 + support.len()) as f64 > MAX_DF_FRACTION * nf {
            continue;
        }
        let gic = 2.0 * support_neg_loglik(&design, &support, b0, &beta) + kappa * (1 + support.len()) as f64;
        if best.as_ref().is_none_or(|(g, _, _)| gic < *g) {
            best = Some((gic, lam, support));
        }
    }
    if failed > 0 {
        warnings.push(format!("{failed} penalised logistic fits did not converge and were skipped"));
    }
    let (gic, lambda, support) = best.ok_or(Error::PathFailed)?;

    let mut support = repair_hierarchy(&design, &support);
    let mut ridge_used = false;
    let refit = loop {
        let (r, ridge) = refit_with_fallback(&design, &support, &mut warnings);
        ridge_used |= ridge;
        // largest interaction p-value above the level
        let worst = support
            .iter()
            .enumerate()
            .filter(|(_, &c)| c >= design.d())
            .map(|(a, &c)| (c, wald_p(r.coef[a + 1], r.se[a + 1])))
            .filter(|&(_, p)| p > WALD_LEVEL)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        match worst {
            Some((c, _)) => support.retain(|&s| s != c),
            None => break r,
        }
    };

    let mut cols = vec![0.0; design.n_cols()];
    let mut p_values = BTreeMap::new();
    for (a, &c) in support.iter().enumerate() {
        cols[c] = refit.coef[a + 1];
        p_values.insert(design.effect(c), wald_p(refit.coef[a + 1], refit.se[a + 1]));
    }
    let mut coefs = design.to_coefficients(refit.coef[0], &cols);
    coefs.snap(ZERO_SNAP);
    Ok(LogisticModel {
        coefs,
        lambda,
        gic,
        kappa,
        p_values,
        ridge_used,
        warnings,
    })
}
