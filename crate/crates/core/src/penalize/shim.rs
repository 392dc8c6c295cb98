//! Strong-heredity interaction model: interactions are parameterised as
//! `β_jk = γ_jk β_j β_k`, so
//!
//! ```text
//! ½‖y - β0 - Σ x_j β_j - ΣΣ γ_jk β_j β_k x_j∘x_k‖² + n λ2 Σ|β_j| + n λ1 ΣΣ|γ_jk|
//! ```
//!
//! is minimised by coordinate descent. A zero main effect removes every
//! interaction it takes part in, so hierarchy holds by construction.

use crate::data::Dataset;
use crate::error::{Error, Result};

use super::coef::{CoefficientSet, ZERO_SNAP};
use super::config::{Fit, Method, PenaltyConfig};
use super::design::{axpy, dot, sum_sq, ScreenedDesign};
use super::scalar::soft_threshold;

pub struct ShimSolver<'a> {
    design: &'a ScreenedDesign,
    beta0: f64,
    /// Main effects by screened position.
    beta: Vec<f64>,
    /// Interaction multipliers by pair position (interaction column minus `d`).
    gamma: Vec<f64>,
    resid: Vec<f64>,
    /// Scratch for the synthetic main-effect column.
    work: Vec<f64>,
    skipped: usize,
    trace: Option<Vec<f64>>,
}

impl<'a> ShimSolver<'a> {
    pub fn new(design: &'a ScreenedDesign) -> Self {
        let d = design.d();
        Self {
            design,
            beta0: 0.0,
            beta: vec![0.0; d],
            gamma: vec![0.0; design.n_cols() - d],
            resid: design.y().to_vec(),
            work: vec![0.0; design.n()],
            skipped: 0,
            trace: None,
        }
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<f64> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn residual(&self) -> &[f64] {
        &self.resid
    }

    /// γ updates skipped in the last run because a parent was zero.
    pub fn skipped_degenerate(&self) -> usize {
        self.skipped
    }

    /// Sets the parameters and recomputes the residual.
    pub fn set_state(&mut self, beta0: f64, beta: &[f64], gamma: &[f64]) {
        assert_eq!(beta.len(), self.beta.len());
        assert_eq!(gamma.len(), self.gamma.len());
        self.beta0 = beta0;
        self.beta.copy_from_slice(beta);
        self.gamma.copy_from_slice(gamma);
        let effective = self.effective();
        self.resid = self.design.residual(beta0, &effective);
    }

    /// Coefficients in design column order, interactions as `γ β_j β_k`.
    fn effective(&self) -> Vec<f64> {
        let d = self.design.d();
        let mut out = self.beta.clone();
        for (g, &gamma) in self.gamma.iter().enumerate() {
            let (a, b) = self.design.parents(d + g);
            out.push(gamma * self.beta[a] * self.beta[b]);
        }
        out
    }

    pub fn objective(&self, cfg: &PenaltyConfig) -> f64 {
        let n = self.design.n() as f64;
        0.5 * sum_sq(&self.resid)
            + n * cfg.lambda2 * self.beta.iter().map(|b| b.abs()).sum::<f64>()
            + n * cfg.lambda1 * self.gamma.iter().map(|g| g.abs()).sum::<f64>()
    }

    fn record(&mut self, cfg: &PenaltyConfig) {
        if self.trace.is_some() {
            let v = self.objective(cfg);
            self.trace.as_mut().unwrap().push(v);
        }
    }

    fn update_intercept(&mut self, cfg: &PenaltyConfig) -> f64 {
        let shift = self.resid.iter().sum::<f64>() / self.resid.len() as f64;
        if shift != 0.0 {
            self.beta0 += shift;
            for r in &mut self.resid {
                *r -= shift;
            }
        }
        self.record(cfg);
        shift.abs()
    }

    /// Exact minimisation over `β_a`: the fitted values are affine in `β_a`
    /// with slope `w_a = x_a + Σ_b γ_ab β_b x_a∘x_b`.
    fn update_main(&mut self, a: usize, cfg: &PenaltyConfig) -> f64 {
        let d = self.design.d();
        self.work.copy_from_slice(self.design.col(a));
        for &c in self.design.group(a) {
            let g = self.gamma[c - d];
            if g == 0.0 {
                continue;
            }
            let (p, q) = self.design.parents(c);
            let other = if p == a { q } else { p };
            let coef = g * self.beta[other];
            if coef != 0.0 {
                axpy(coef, self.design.col(c), &mut self.work);
            }
        }
        let curv = sum_sq(&self.work);
        if !(curv > 0.0) {
            return 0.0;
        }
        let old = self.beta[a];
        let lin = dot(&self.work, &self.resid) + curv * old;
        let n = self.design.n() as f64;
        let new = soft_threshold(lin, n * cfg.lambda2, curv);
        if new != old {
            axpy(old - new, &self.work, &mut self.resid);
            self.beta[a] = new;
        }
        self.record(cfg);
        (new - old).abs()
    }

    fn update_gamma(&mut self, g: usize, cfg: &PenaltyConfig) -> f64 {
        let c = self.design.d() + g;
        let (a, b) = self.design.parents(c);
        let scale = self.beta[a] * self.beta[b];
        let old = self.gamma[g];
        if scale == 0.0 {
            // the column vanishes; only the penalty depends on γ
            self.skipped += 1;
            self.gamma[g] = 0.0;
            if old != 0.0 {
                self.record(cfg);
            }
            return old.abs();
        }
        let z = self.design.col(c);
        let curv = scale * scale * self.design.sq_norm(c);
        if !(curv > 0.0) {
            return 0.0;
        }
        let lin = scale * dot(z, &self.resid) + curv * old;
        let n = self.design.n() as f64;
        let new = soft_threshold(lin, n * cfg.lambda1, curv);
        if new != old {
            axpy((old - new) * scale, z, &mut self.resid);
            self.gamma[g] = new;
        }
        self.record(cfg);
        (new - old).abs()
    }

    fn sweep(&mut self, cfg: &PenaltyConfig) -> f64 {
        let mut change = self.update_intercept(cfg);
        for a in 0..self.beta.len() {
            change = change.max(self.update_main(a, cfg));
        }
        for g in 0..self.gamma.len() {
            change = change.max(self.update_gamma(g, cfg));
        }
        change
    }

    pub fn run(&mut self, cfg: &PenaltyConfig) -> Fit {
        self.skipped = 0;
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < cfg.max_sweeps {
            let change = self.sweep(cfg);
            sweeps += 1;
            if change < cfg.tol {
                converged = true;
                break;
            }
        }
        Fit {
            coefs: self.coefficients(),
            objective: self.objective(cfg),
            sweeps,
            converged,
            newton_fallbacks: 0,
        }
    }

    /// Snapped coefficients; mains are snapped before the products are
    /// formed so a snapped parent always removes its interactions.
    pub fn coefficients(&self) -> CoefficientSet {
        let d = self.design.d();
        let mains: Vec<f64> = self
            .beta
            .iter()
            .map(|&b| if b.abs() < ZERO_SNAP { 0.0 } else { b })
            .collect();
        let mut cols = mains.clone();
        for (g, &gamma) in self.gamma.iter().enumerate() {
            let (a, b) = self.design.parents(d + g);
            cols.push(gamma * mains[a] * mains[b]);
        }
        let mut coefs = self.design.to_coefficients(self.beta0, &cols);
        coefs.snap(ZERO_SNAP);
        coefs
    }
}

/// Fits SHIM on the variables `vars` of `ds` from a zero start.
pub fn shim_fit(ds: &Dataset, vars: &[usize], cfg: &PenaltyConfig) -> Result<Fit> {
    if cfg.method != Method::Shim || !cfg.is_valid() {
        return Err(Error::InvalidInput(format!("not a valid SHIM configuration: {cfg:?}")));
    }
    let design = ScreenedDesign::new(ds, vars)?;
    Ok(ShimSolver::new(&design).run(cfg))
}

/// Smallest `λ` (with `λ1 = λ2`) keeping every main effect at zero from the
/// null model; interactions cannot enter before their parents.
pub fn shim_lambda_max(design: &ScreenedDesign) -> f64 {
    let n = design.n() as f64;
    let ybar = design.y().iter().sum::<f64>() / n;
    let r: Vec<f64> = design.y().iter().map(|v| v - ybar).collect();
    (0..design.d())
        .map(|a| dot(design.col(a), &r).abs() / n)
        .fold(0.0, f64::max)
}
