use crate::data::{Dataset, EffectIndex};
use crate::error::{Error, Result};

use super::coef::CoefficientSet;

/// Materialised design of a screened set: `d` main columns followed by the
/// `d(d-1)/2` interaction columns in lexicographic pair order. Interaction
/// columns are raw products of the standardised mains.
#[derive(Debug, Clone)]
pub struct ScreenedDesign {
    n: usize,
    vars: Vec<usize>,
    cols: Vec<f64>,
    sq_norms: Vec<f64>,
    /// Parent positions `(a, b)`, `a < b`, of each interaction column.
    parents: Vec<(usize, usize)>,
    /// Interaction columns touching each main position.
    groups: Vec<Vec<usize>>,
    y: Vec<f64>,
}

impl ScreenedDesign {
    /// `vars` are 1-based variable indices; they are sorted and deduplicated.
    pub fn new(ds: &Dataset, vars: &[usize]) -> Result<Self> {
        let mut vars = vars.to_vec();
        vars.sort_unstable();
        vars.dedup();
        if vars.is_empty() {
            return Err(Error::InvalidInput("screened set is empty".into()));
        }
        if let Some(&v) = vars.iter().find(|&&v| v == 0 || v > ds.p()) {
            return Err(Error::IndexOutOfRange(format!("variable {v} with p = {}", ds.p())));
        }
        let n = ds.n();
        let d = vars.len();
        let m = d + d * (d - 1) / 2;
        let mut cols = Vec::with_capacity(n * m);
        for &v in &vars {
            cols.extend_from_slice(ds.column(v));
        }
        let mut parents = Vec::with_capacity(m - d);
        let mut groups = vec![Vec::new(); d];
        let mut buf = vec![0.0; n];
        for a in 0..d {
            for b in a + 1..d {
                ds.interaction_into(EffectIndex::pair(vars[a], vars[b]), &mut buf)?;
                cols.extend_from_slice(&buf);
                let c = d + parents.len();
                groups[a].push(c);
                groups[b].push(c);
                parents.push((a, b));
            }
        }
        let sq_norms = cols.chunks_exact(n).map(|c| c.iter().map(|v| v * v).sum()).collect();
        Ok(Self {
            n,
            vars,
            cols,
            sq_norms,
            parents,
            groups,
            y: ds.y().to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of screened variables.
    pub fn d(&self) -> usize {
        self.vars.len()
    }

    /// Total number of penalised columns.
    pub fn n_cols(&self) -> usize {
        self.sq_norms.len()
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn col(&self, c: usize) -> &[f64] {
        &self.cols[c * self.n..(c + 1) * self.n]
    }

    pub fn sq_norm(&self, c: usize) -> f64 {
        self.sq_norms[c]
    }

    /// Parent main positions of interaction column `c`.
    pub fn parents(&self, c: usize) -> (usize, usize) {
        self.parents[c - self.d()]
    }

    /// Interaction columns containing main position `a`.
    pub fn group(&self, a: usize) -> &[usize] {
        &self.groups[a]
    }

    /// Effect index of column `c` in the original variable numbering.
    pub fn effect(&self, c: usize) -> EffectIndex {
        if c < self.d() {
            EffectIndex::main(self.vars[c])
        } else {
            let (a, b) = self.parents(c);
            EffectIndex::pair(self.vars[a], self.vars[b])
        }
    }

    /// Packs an intercept and a column-ordered coefficient vector.
    pub fn to_coefficients(&self, beta0: f64, beta: &[f64]) -> CoefficientSet {
        let mut out = CoefficientSet::zeros(&self.vars);
        out.beta0 = beta0;
        for (c, &b) in beta.iter().enumerate() {
            let e = self.effect(c);
            if e.is_main() {
                out.main.insert(e.k, b);
            } else {
                out.inter.insert(e, b);
            }
        }
        out
    }

    /// Column-ordered coefficients of `coefs`; effects outside the design are
    /// ignored.
    pub fn from_coefficients(&self, coefs: &CoefficientSet) -> (f64, Vec<f64>) {
        let beta = (0..self.n_cols())
            .map(|c| {
                let e = self.effect(c);
                if e.is_main() {
                    coefs.main_coef(e.k)
                } else {
                    coefs.inter_coef(e.j, e.k)
                }
            })
            .collect();
        (coefs.beta0, beta)
    }

    /// `y - β0 - Σ col_c β_c`.
    pub fn residual(&self, beta0: f64, beta: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.y.iter().map(|v| v - beta0).collect();
        for (c, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(-b, self.col(c), &mut r);
            }
        }
        r
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the loop vectorises without reassociation
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * i + l] * b[4 * i + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn sum_sq(v: &[f64]) -> f64 {
    dot(v, v)
}
