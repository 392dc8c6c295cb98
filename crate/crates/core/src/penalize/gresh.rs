//! Group-regularised estimation under structural hierarchy, restricted to a
//! screened set `A`:
//!
//! ```text
//! ½‖y - β0 - Σ x_j β_j - ΣΣ x_j∘x_k β_jk‖²
//!     + n λ2 Σ_j (β_j² + Σ_{k≠j} β_jk²)^{1/2} + n λ1 ΣΣ |β_jk|
//! ```
//!
//! solved by cyclic coordinate descent. Every interaction belongs to the
//! groups of both parents, so an interaction can only be nonzero while both
//! parent groups are active, and an active group makes its main effect's
//! update smooth at zero. Together these keep fitted models hierarchical.

use crate::data::Dataset;
use crate::error::{Error, Result};

use super::coef::{CoefficientSet, ZERO_SNAP};
use super::config::{Fit, Method, PenaltyConfig};
use super::design::{axpy, dot, sum_sq, ScreenedDesign};
use super::scalar::minimize_scalar;

/// GRESH objective of `beta` on `ds`; the groups run over the main effects
/// present in `beta.main`.
pub fn gresh_objective(ds: &Dataset, beta: &CoefficientSet, cfg: &PenaltyConfig) -> f64 {
    let n = ds.n() as f64;
    let resid: f64 = {
        let eta = beta.linear_predictor(ds);
        ds.y().iter().zip(&eta).map(|(y, e)| (y - e) * (y - e)).sum()
    };
    let mut group = 0.0;
    for (&j, &bj) in &beta.main {
        let mut ss = bj * bj;
        for (e, b) in &beta.inter {
            if e.j == j || e.k == j {
                ss += b * b;
            }
        }
        group += ss.sqrt();
    }
    let l1: f64 = beta.inter.values().map(|b| b.abs()).sum();
    0.5 * resid + n * cfg.lambda2 * group + n * cfg.lambda1 * l1
}

/// New main-effect coefficient given the partial residual `partial` (the
/// residual with this main effect's contribution added back) and the norm of
/// the variable's interaction coefficients.
pub fn update_main(x: &[f64], partial: &[f64], xi_norm: f64, cfg: &PenaltyConfig) -> f64 {
    let n = x.len() as f64;
    let (kink, norms): (f64, &[f64]) = if xi_norm == 0.0 {
        (n * cfg.lambda2, &[])
    } else {
        (0.0, std::slice::from_ref(&xi_norm))
    };
    minimize_scalar(sum_sq(x), dot(x, partial), kink, n * cfg.lambda2, norms).value
}

/// New interaction coefficient. `norm_j` and `norm_k` are the norms of the
/// two parent groups with this interaction removed.
pub fn update_interaction(
    z: &[f64],
    partial: &[f64],
    norm_j: f64,
    norm_k: f64,
    cfg: &PenaltyConfig,
) -> f64 {
    let n = z.len() as f64;
    let (kink, norms) = interaction_terms(n, norm_j, norm_k, cfg);
    minimize_scalar(sum_sq(z), dot(z, partial), kink, n * cfg.lambda2, norms.as_slice()).value
}

/// Up to two positive group norms without allocating.
struct Norms {
    vals: [f64; 2],
    len: usize,
}

impl Norms {
    fn as_slice(&self) -> &[f64] {
        &self.vals[..self.len]
    }
}

fn interaction_terms(n: f64, s1: f64, s2: f64, cfg: &PenaltyConfig) -> (f64, Norms) {
    let mut kink = n * cfg.lambda1;
    let mut norms = Norms {
        vals: [0.0; 2],
        len: 0,
    };
    for s in [s1, s2] {
        if s == 0.0 {
            kink += n * cfg.lambda2;
        } else {
            norms.vals[norms.len] = s;
            norms.len += 1;
        }
    }
    (kink, norms)
}

/// Coordinate-descent state over a [`ScreenedDesign`]; reusable across a
/// path of penalties for warm starts.
pub struct GreshSolver<'a> {
    design: &'a ScreenedDesign,
    beta0: f64,
    beta: Vec<f64>,
    resid: Vec<f64>,
    fallbacks: usize,
    trace: Option<Vec<f64>>,
}

impl<'a> GreshSolver<'a> {
    pub fn new(design: &'a ScreenedDesign) -> Self {
        Self {
            design,
            beta0: 0.0,
            beta: vec![0.0; design.n_cols()],
            resid: design.y().to_vec(),
            fallbacks: 0,
            trace: None,
        }
    }

    /// Records the objective after every single coordinate update.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<f64> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn set_state(&mut self, beta0: f64, beta: &[f64]) {
        assert_eq!(beta.len(), self.beta.len());
        self.beta0 = beta0;
        self.beta.copy_from_slice(beta);
        self.resid = self.design.residual(beta0, beta);
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn residual(&self) -> &[f64] {
        &self.resid
    }

    fn main_xi_norm(&self, a: usize) -> f64 {
        self.design
            .group(a)
            .iter()
            .map(|&c| self.beta[c] * self.beta[c])
            .sum::<f64>()
            .sqrt()
    }

    /// Norm of main position `a`'s group without interaction column `skip`.
    fn group_norm_without(&self, a: usize, skip: usize) -> f64 {
        let mut ss = self.beta[a] * self.beta[a];
        for &c in self.design.group(a) {
            if c != skip {
                ss += self.beta[c] * self.beta[c];
            }
        }
        ss.sqrt()
    }

    /// `(curvature, linear term, kink weight, group norms)` of column `c`.
    fn coordinate_terms(&self, c: usize, cfg: &PenaltyConfig) -> (f64, f64, f64, Norms) {
        let n = self.design.n() as f64;
        let curv = self.design.sq_norm(c);
        let lin = dot(self.design.col(c), &self.resid) + curv * self.beta[c];
        if c < self.design.d() {
            let s = self.main_xi_norm(c);
            if s == 0.0 {
                (curv, lin, n * cfg.lambda2, Norms { vals: [0.0; 2], len: 0 })
            } else {
                (curv, lin, 0.0, Norms { vals: [s, 0.0], len: 1 })
            }
        } else {
            let (a, b) = self.design.parents(c);
            let (kink, norms) =
                interaction_terms(n, self.group_norm_without(a, c), self.group_norm_without(b, c), cfg);
            (curv, lin, kink, norms)
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

    fn update_coordinate(&mut self, c: usize, cfg: &PenaltyConfig) -> f64 {
        let (curv, lin, kink, norms) = self.coordinate_terms(c, cfg);
        if !(curv > 0.0) {
            return 0.0;
        }
        let n = self.design.n() as f64;
        let sol = minimize_scalar(curv, lin, kink, n * cfg.lambda2, norms.as_slice());
        if sol.fallback {
            self.fallbacks += 1;
        }
        let old = self.beta[c];
        let new = sol.value;
        if new != old {
            axpy(old - new, self.design.col(c), &mut self.resid);
            self.beta[c] = new;
        }
        self.record(cfg);
        (new - old).abs()
    }

    fn record(&mut self, cfg: &PenaltyConfig) {
        if self.trace.is_some() {
            let v = self.objective(cfg);
            self.trace.as_mut().unwrap().push(v);
        }
    }

    /// One cyclic pass: intercept, then mains, then interactions. With
    /// `active_only`, zero coefficients are skipped.
    fn pass(&mut self, cfg: &PenaltyConfig, active_only: bool) -> f64 {
        let mut change = self.update_intercept(cfg);
        for c in 0..self.beta.len() {
            if active_only && self.beta[c] == 0.0 {
                continue;
            }
            change = change.max(self.update_coordinate(c, cfg));
        }
        change
    }

    /// Tries moving each active group (a main effect and all its
    /// interactions) to zero in one step and keeps the move when the
    /// objective does not rise. Coordinate descent alone can stall on the
    /// non-separable kink where a main effect and an interaction keep each
    /// other's group alive at vanishing magnitude.
    fn zero_groups(&mut self, cfg: &PenaltyConfig) -> bool {
        let mut moved = false;
        let mut trial_resid = vec![0.0; self.resid.len()];
        for a in 0..self.design.d() {
            let members = std::iter::once(a).chain(self.design.group(a).iter().copied());
            let active: Vec<usize> = members.filter(|&c| self.beta[c] != 0.0).collect();
            if active.is_empty() {
                continue;
            }
            let current = self.objective(cfg);
            trial_resid.copy_from_slice(&self.resid);
            let saved: Vec<f64> = active.iter().map(|&c| self.beta[c]).collect();
            for &c in &active {
                axpy(self.beta[c], self.design.col(c), &mut trial_resid);
                self.beta[c] = 0.0;
            }
            std::mem::swap(&mut self.resid, &mut trial_resid);
            if self.objective(cfg) < current {
                moved = true;
                self.record(cfg);
            } else {
                std::mem::swap(&mut self.resid, &mut trial_resid);
                for (&c, &b) in active.iter().zip(&saved) {
                    self.beta[c] = b;
                }
            }
        }
        moved
    }

    /// Moves jointly out of the all-zero groups when that lowers the
    /// objective. A zero group's penalty does not split into coordinate
    /// terms, so a single-coordinate move can be blocked by the kink while a
    /// joint move into the group descends. Steps along the steepest-descent
    /// direction restricted to the zero groups' coefficients, with an exact
    /// line search.
    fn open_groups(&mut self, cfg: &PenaltyConfig) -> bool {
        match zero_group_descent(self.design, &self.beta, &self.resid, cfg) {
            Some(dir) => self.line_step(&dir, 0.0, 0.0, cfg),
            None => false,
        }
    }

    /// Rescales each active group (a main effect and its interactions) by
    /// the factor minimising the objective. Near a group's kink the
    /// coordinate updates are so tightly coupled that a small but growing
    /// group creeps up by amounts below the stopping tolerance; one exact
    /// search over the group's scale moves it to its proper size.
    fn rescale_groups(&mut self, cfg: &PenaltyConfig) -> bool {
        let mut moved = false;
        for a in 0..self.design.d() {
            let members = std::iter::once(a).chain(self.design.group(a).iter().copied());
            let dir: Vec<(usize, f64)> = members.filter(|&c| self.beta[c] != 0.0).map(|c| (c, self.beta[c])).collect();
            if !dir.is_empty() && self.line_step(&dir, -1.0, RESCALE_MIN_STEP, cfg) {
                moved = true;
            }
        }
        moved
    }

    /// Exact line search for `min F(β + t·dir)` over `t >= t_min`, taken only
    /// when the largest coefficient move exceeds `min_step` times the largest
    /// current value and the objective strictly drops. The objective is convex along the ray, so the minimiser is
    /// found by bisection on the sign of the right derivative.
    fn line_step(&mut self, dir: &[(usize, f64)], t_min: f64, min_step: f64, cfg: &PenaltyConfig) -> bool {
        let design = self.design;
        let n = design.n() as f64;
        let d = design.d();
        let mut xd = vec![0.0; design.n()];
        for &(c, v) in dir {
            axpy(v, design.col(c), &mut xd);
        }
        let quad = sum_sq(&xd);
        if !(quad > 0.0) {
            return false;
        }
        let lin = dot(&xd, &self.resid);
        // per touched group: |β_g|², β_g·dir_g and |dir_g|²
        let mut touched = vec![false; d];
        for &(c, _) in dir {
            if c < d {
                touched[c] = true;
            } else {
                let (a, b) = design.parents(c);
                touched[a] = true;
                touched[b] = true;
            }
        }
        let mut now = vec![0.0; d];
        for a in (0..d).filter(|&a| touched[a]) {
            now[a] = self.beta[a] * self.beta[a] + self.main_xi_norm(a).powi(2);
        }
        let (mut cross, mut along) = (vec![0.0; d], vec![0.0; d]);
        let mut inters = Vec::new();
        for &(c, v) in dir {
            let b = self.beta[c];
            if c < d {
                cross[c] += b * v;
                along[c] += v * v;
            } else {
                let (j, k) = design.parents(c);
                for g in [j, k] {
                    cross[g] += b * v;
                    along[g] += v * v;
                }
                inters.push((b, v));
            }
        }
        let slope = |t: f64| {
            let mut g = -lin + t * quad;
            for h in (0..d).filter(|&h| touched[h]) {
                let sq = (now[h] + 2.0 * t * cross[h] + t * t * along[h]).max(0.0);
                g += n * cfg.lambda2 * if sq > 0.0 { (cross[h] + t * along[h]) / sq.sqrt() } else { along[h].sqrt() };
            }
            for &(b, v) in &inters {
                let at = b + t * v;
                g += n * cfg.lambda1 * if at != 0.0 { at.signum() * v } else { v.abs() };
            }
            g
        };
        let t = if slope(t_min) >= 0.0 {
            t_min
        } else {
            let mut lo = t_min;
            let mut hi = (lin / quad).max(t_min + 1.0);
            while slope(hi) < 0.0 {
                lo = hi;
                hi = t_min + 2.0 * (hi - t_min);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if slope(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let scale = dir.iter().map(|&(c, _)| self.beta[c].abs()).fold(0.0, f64::max);
        let step = dir.iter().map(|&(_, v)| (t * v).abs()).fold(0.0, f64::max);
        if step <= min_step * scale || step == 0.0 {
            return false;
        }
        let before = self.objective(cfg);
        let saved: Vec<f64> = dir.iter().map(|&(c, _)| self.beta[c]).collect();
        let saved_resid = self.resid.clone();
        for &(c, v) in dir {
            // t = -1 along the current values lands on exact zeros
            self.beta[c] = if t == -1.0 { self.beta[c] - self.beta[c] } else { self.beta[c] + t * v };
        }
        axpy(-t, &xd, &mut self.resid);
        if self.objective(cfg) < before {
            self.record(cfg);
            true
        } else {
            for (&(c, _), &b) in dir.iter().zip(&saved) {
                self.beta[c] = b;
            }
            self.resid = saved_resid;
            false
        }
    }

    pub fn objective(&self, cfg: &PenaltyConfig) -> f64 {
        let d = self.design.d();
        let n = self.design.n() as f64;
        let mut group = 0.0;
        for a in 0..d {
            let s = self.beta[a] * self.beta[a] + self.main_xi_norm(a).powi(2);
            group += s.sqrt();
        }
        let l1: f64 = self.beta[d..].iter().map(|b| b.abs()).sum();
        0.5 * sum_sq(&self.resid) + n * cfg.lambda2 * group + n * cfg.lambda1 * l1
    }

    /// Largest violation of the coordinate-wise optimality conditions: for a
    /// zero coefficient, how far `|x_cᵀ y̌|` exceeds its kink weight; for a
    /// nonzero one, the magnitude of the 1-D derivative.
    pub fn kkt_residual(&self, cfg: &PenaltyConfig) -> f64 {
        let n = self.design.n() as f64;
        let mut worst: f64 = 0.0;
        for c in 0..self.beta.len() {
            let (curv, lin, kink, norms) = self.coordinate_terms(c, cfg);
            let b = self.beta[c];
            let v = if b == 0.0 {
                (lin.abs() - kink).max(0.0)
            } else {
                let smooth: f64 = norms
                    .as_slice()
                    .iter()
                    .map(|s| b / (b * b + s * s).sqrt())
                    .sum();
                (curv * b - lin + kink * b.signum() + n * cfg.lambda2 * smooth).abs()
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Runs coordinate descent to convergence from the current state.
    /// Alternates full sweeps with sweeps over the nonzero coefficients;
    /// convergence is only declared after a full sweep.
    pub fn run(&mut self, cfg: &PenaltyConfig) -> Fit {
        self.fallbacks = 0;
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < cfg.max_sweeps {
            let change = self.pass(cfg, false);
            sweeps += 1;
            let zeroed = self.zero_groups(cfg);
            if change < cfg.tol && !zeroed && !self.open_groups(cfg) && !self.rescale_groups(cfg) {
                converged = true;
                break;
            }
            while sweeps < cfg.max_sweeps {
                let change = self.pass(cfg, true);
                sweeps += 1;
                if change < cfg.tol {
                    break;
                }
            }
        }
        let mut coefs = self.design.to_coefficients(self.beta0, &self.beta);
        coefs.snap(ZERO_SNAP);
        Fit {
            coefs,
            objective: self.objective(cfg),
            sweeps,
            converged,
            newton_fallbacks: self.fallbacks,
        }
    }
}

/// Smallest relative change of a group's scale worth taking; smaller ones
/// are left to coordinate descent.
const RESCALE_MIN_STEP: f64 = 1e-2;
const DUAL_MAX_ITER: usize = 5000;
/// Zero groups count as optimal once the smallest subgradient over their
/// coefficients is this small relative to the largest gradient entry.
const ZERO_GROUP_TOL: f64 = 1e-7;

/// Steepest-descent direction of the objective over the coefficients of the
/// all-zero groups, as `(column, component)` pairs, or `None` when no such
/// descent exists (up to a small tolerance).
///
/// The direction is minus the minimum-norm subgradient: each zero group
/// contributes a vector in a ball of radius `n λ2` over its coefficients and
/// each interaction a value in `[-n λ1, n λ1]`. Minimising the norm over these
/// separable constraint sets is done by exact block coordinate descent.
fn zero_group_descent(
    design: &ScreenedDesign,
    beta: &[f64],
    resid: &[f64],
    cfg: &PenaltyConfig,
) -> Option<Vec<(usize, f64)>> {
    let d = design.d();
    let n = design.n() as f64;
    let is_zero = |a: usize| beta[a] == 0.0 && design.group(a).iter().all(|&c| beta[c] == 0.0);
    let zero: Vec<usize> = (0..d).filter(|&a| is_zero(a)).collect();
    if zero.is_empty() {
        return None;
    }
    // coordinates touched, with v = -x_cᵀr + Σ u + s kept per column
    let mut in_block = vec![false; design.n_cols()];
    for &a in &zero {
        in_block[a] = true;
        for &c in design.group(a) {
            in_block[c] = true;
        }
    }
    let coords: Vec<usize> = (0..design.n_cols()).filter(|&c| in_block[c]).collect();
    let mut v = vec![0.0; design.n_cols()];
    let mut scale: f64 = 0.0;
    for &c in &coords {
        v[c] = -dot(design.col(c), resid);
        scale = scale.max(v[c].abs());
    }
    let radius = n * cfg.lambda2;
    let box_l1 = n * cfg.lambda1;
    // sufficient condition first: an interaction with both parents zero
    // splits its excess over the box equally between them
    let certified = zero.iter().all(|&a| {
        let mut load = v[a] * v[a];
        for &c in design.group(a) {
            let (j, k) = design.parents(c);
            let other = if j == a { k } else { j };
            let excess = (v[c].abs() - box_l1).max(0.0);
            let share = if in_block[other] && is_zero(other) { 0.5 * excess } else { excess };
            load += share * share;
        }
        load <= radius * radius
    });
    if certified {
        return None;
    }
    let mut u: Vec<Vec<f64>> = zero.iter().map(|&a| vec![0.0; 1 + design.group(a).len()]).collect();
    let mut s = vec![0.0; design.n_cols()];
    let tol = ZERO_GROUP_TOL * scale.max(1.0);
    let norm_of = |v: &[f64]| coords.iter().map(|&c| v[c] * v[c]).sum::<f64>().sqrt();
    let mut w = Vec::new();
    for _ in 0..DUAL_MAX_ITER {
        if norm_of(&v) <= tol {
            return None;
        }
        let mut moved: f64 = 0.0;
        for (g, &a) in zero.iter().enumerate() {
            let members = std::iter::once(a).chain(design.group(a).iter().copied());
            w.clear();
            w.extend(members.zip(&u[g]).map(|(c, ug)| v[c] - ug));
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let shrink = if norm > radius { radius / norm } else { 1.0 };
            let members = std::iter::once(a).chain(design.group(a).iter().copied());
            for ((c, ug), wc) in members.zip(u[g].iter_mut()).zip(&w) {
                let new = -wc * shrink;
                moved = moved.max((new - *ug).abs());
                *ug = new;
                v[c] = wc + new;
            }
        }
        for &c in coords.iter().filter(|&&c| c >= d) {
            let wc = v[c] - s[c];
            let new = (-wc).clamp(-box_l1, box_l1);
            moved = moved.max((new - s[c]).abs());
            s[c] = new;
            v[c] = wc + new;
        }
        if moved <= 1e-3 * tol {
            break;
        }
    }
    if norm_of(&v) <= tol {
        return None;
    }
    Some(coords.iter().filter(|&&c| v[c] != 0.0).map(|&c| (c, -v[c])).collect())
}

/// Fits GRESH on the variables `vars` (1-based) of `ds` from a zero start.
pub fn gresh_fit(ds: &Dataset, vars: &[usize], cfg: &PenaltyConfig) -> Result<Fit> {
    if cfg.method != Method::Gresh || !cfg.is_valid() {
        return Err(Error::InvalidInput(format!("not a valid GRESH configuration: {cfg:?}")));
    }
    let design = ScreenedDesign::new(ds, vars)?;
    Ok(GreshSolver::new(&design).run(cfg))
}

/// A `λ1` (with `λ2 = λ1/2`) at which the zero model is optimal, close to
/// the smallest one. With `r = y - ȳ`, the zero model is optimal when every
/// group's ball of radius `n λ2` can absorb its main gradient `x_jᵀr` plus a
/// share of each interaction's excess `soft(z_jkᵀr, n λ1)`. Splitting that
/// excess equally between the two parents gives a sufficient condition that
/// is monotone in `λ1`; the result is the smallest `λ1` meeting it, found by
/// bisection from the coordinate-wise lower bound.
pub fn gresh_lambda_max(design: &ScreenedDesign) -> f64 {
    let n = design.n() as f64;
    let d = design.d();
    let ybar = design.y().iter().sum::<f64>() / n;
    let r: Vec<f64> = design.y().iter().map(|v| v - ybar).collect();
    let g: Vec<f64> = (0..design.n_cols()).map(|c| dot(design.col(c), &r).abs() / n).collect();
    let mut lo: f64 = 0.0;
    for (c, &gc) in g.iter().enumerate() {
        lo = lo.max(if c < d { 2.0 * gc } else { 0.5 * gc });
    }
    if lo == 0.0 {
        return 0.0;
    }
    let certified = |lam: f64| {
        (0..d).all(|a| {
            let share: f64 = design.group(a).iter().map(|&c| (0.5 * (g[c] - lam).max(0.0)).powi(2)).sum();
            g[a] * g[a] + share <= 0.25 * lam * lam
        })
    };
    let mut hi = lo;
    while !certified(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if certified(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
