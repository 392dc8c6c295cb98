use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::EffectIndex;
use crate::error::{Error, Result};

/// Coefficient of every true effect.
pub const SIGNAL: f64 = 3.0;

/// Hierarchy pattern of the true model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    /// Weak hierarchy: mains 1..4, interactions (1,4), (1,5), (5,6).
    A,
    /// Strong hierarchy: mains 1..6 and the same interactions.
    B,
    /// Pure interactions, no main effects.
    C,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::A, Case::B, Case::C];

    pub fn as_str(self) -> &'static str {
        match self {
            Case::A => "a",
            Case::B => "b",
            Case::C => "c",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Case::A),
            "b" => Ok(Case::B),
            "c" => Ok(Case::C),
            other => Err(Error::InvalidInput(format!("unknown case '{other}'"))),
        }
    }
}

/// True effects of a simulated model.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSpec {
    /// Variables with a nonzero main effect.
    pub mains: Vec<usize>,
    pub interactions: Vec<EffectIndex>,
    /// Every variable with a main effect or in a true interaction.
    pub active: Vec<usize>,
    pub coef: f64,
}

impl TruthSpec {
    pub fn for_case(case: Case) -> Self {
        let mains: Vec<usize> = match case {
            Case::A => (1..=4).collect(),
            Case::B => (1..=6).collect(),
            Case::C => Vec::new(),
        };
        let interactions = vec![EffectIndex::pair(1, 4), EffectIndex::pair(1, 5), EffectIndex::pair(5, 6)];
        let mut active = mains.clone();
        active.extend(interactions.iter().flat_map(|e| [e.j, e.k]));
        active.sort_unstable();
        active.dedup();
        Self {
            mains,
            interactions,
            active,
            coef: SIGNAL,
        }
    }

    pub fn is_active(&self, j: usize) -> bool {
        self.active.binary_search(&j).is_ok()
    }
}

/// `n × p` column-major design whose rows are i.i.d. with
/// `cov(x_j, x_k) = rho^|j-k|`, built by the AR(1) recursion along each row.
pub fn gen_design<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidRho(rho));
    }
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = vec![0.0; n * p];
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = StandardNormal.sample(rng);
            let v = if j == 0 { z } else { rho * prev + innov * z };
            x[j * n + i] = v;
            prev = v;
        }
    }
    Ok(x)
}

fn response(case: Case, x: &[f64], n: usize, p: usize, mut noise: impl FnMut() -> f64) -> Result<(Vec<f64>, TruthSpec)> {
    if p < 6 || x.len() != n * p {
        return Err(Error::DimensionMismatch(format!("need p >= 6 and {n}x{p} values, got {}", x.len())));
    }
    let truth = TruthSpec::for_case(case);
    let col = |j: usize| &x[(j - 1) * n..j * n];
    let mut y: Vec<f64> = (0..n).map(|_| noise()).collect();
    for &j in &truth.mains {
        for (yi, v) in y.iter_mut().zip(col(j)) {
            *yi += truth.coef * v;
        }
    }
    for e in &truth.interactions {
        for ((yi, a), b) in y.iter_mut().zip(col(e.j)).zip(col(e.k)) {
            *yi += truth.coef * a * b;
        }
    }
    Ok((y, truth))
}

/// Raw response `Σ β*_j x_j + 3 Σ x_j∘x_k + ε`, `ε ~ N(0, I)`.
pub fn gen_response<R: Rng + ?Sized>(case: Case, x: &[f64], n: usize, p: usize, rng: &mut R) -> Result<(Vec<f64>, TruthSpec)> {
    response(case, x, n, p, || StandardNormal.sample(rng))
}

/// [`gen_response`] with the noise frozen at zero.
pub fn gen_response_noiseless(case: Case, x: &[f64], n: usize, p: usize) -> Result<(Vec<f64>, TruthSpec)> {
    response(case, x, n, p, || 0.0)
}
