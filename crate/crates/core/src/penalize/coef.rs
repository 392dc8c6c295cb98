use std::collections::BTreeMap;

use crate::data::{Dataset, EffectIndex};

/// Coefficients below this magnitude are structural zeros.
pub const ZERO_SNAP: f64 = 1e-10;

/// Fitted intercept, main effects and interactions over a screened set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientSet {
    pub beta0: f64,
    /// Variable (1-based) to main-effect coefficient, for every screened variable.
    pub main: BTreeMap<usize, f64>,
    /// Interaction `(j, k)`, `1 <= j < k`, to coefficient, for every screened pair.
    pub inter: BTreeMap<EffectIndex, f64>,
}

impl CoefficientSet {
    /// All-zero coefficients over `vars`.
    pub fn zeros(vars: &[usize]) -> Self {
        let main = vars.iter().map(|&v| (v, 0.0)).collect();
        let mut inter = BTreeMap::new();
        for (a, &va) in vars.iter().enumerate() {
            for &vb in &vars[a + 1..] {
                inter.insert(EffectIndex::pair(va, vb), 0.0);
            }
        }
        Self {
            beta0: 0.0,
            main,
            inter,
        }
    }

    pub fn main_coef(&self, j: usize) -> f64 {
        self.main.get(&j).copied().unwrap_or(0.0)
    }

    pub fn inter_coef(&self, j: usize, k: usize) -> f64 {
        self.inter.get(&EffectIndex::pair(j, k)).copied().unwrap_or(0.0)
    }

    /// Sets every coefficient with magnitude below `threshold` to exactly 0.
    pub fn snap(&mut self, threshold: f64) {
        for v in self.main.values_mut().chain(self.inter.values_mut()) {
            if v.abs() < threshold {
                *v = 0.0;
            }
        }
    }

    pub fn selected_mains(&self) -> Vec<usize> {
        self.main
            .iter()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, _)| *k)
            .collect()
    }

    pub fn selected_interactions(&self) -> Vec<EffectIndex> {
        self.inter
            .iter()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, _)| *k)
            .collect()
    }

    /// Nonzero coefficients plus one for the intercept.
    pub fn df(&self) -> usize {
        1 + self.selected_mains().len() + self.selected_interactions().len()
    }

    /// Linear predictor on the rows of `ds` (standardised with the training
    /// transform).
    pub fn linear_predictor(&self, ds: &Dataset) -> Vec<f64> {
        let mut eta = vec![self.beta0; ds.n()];
        for (&j, &b) in self.main.iter().filter(|(_, b)| **b != 0.0) {
            for (e, x) in eta.iter_mut().zip(ds.column(j)) {
                *e += b * x;
            }
        }
        for (e, &b) in self.inter.iter().filter(|(_, b)| **b != 0.0) {
            let (xj, xk) = (ds.column(e.j), ds.column(e.k));
            for ((o, a), c) in eta.iter_mut().zip(xj).zip(xk) {
                *o += b * a * c;
            }
        }
        eta
    }
}

/// Outcome of a strong-hierarchy check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShCheck {
    pub satisfied: bool,
    /// Interactions present without both parent main effects.
    pub violations: Vec<EffectIndex>,
}

/// Lists every nonzero `β_jk` whose `β_j` or `β_k` is zero.
pub fn check_sh(model: &CoefficientSet) -> ShCheck {
    let violations: Vec<EffectIndex> = model
        .inter
        .iter()
        .filter(|(e, b)| **b != 0.0 && (model.main_coef(e.j) == 0.0 || model.main_coef(e.k) == 0.0))
        .map(|(e, _)| *e)
        .collect();
    ShCheck {
        satisfied: violations.is_empty(),
        violations,
    }
}
