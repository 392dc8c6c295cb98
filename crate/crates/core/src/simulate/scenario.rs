use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{standardize, Dataset, Family};
use crate::error::{Error, Result};
use crate::penalize::{check_sh, kappa_ebic, lambda_path_gic, CoefficientSet, Method};
use crate::screening::{acor_all, all_pairs_sis, shrunk_variable_set, ScreenSize};

use super::generate::{gen_design, gen_response, Case, TruthSpec};

/// Screening-only or screening-plus-penalisation pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimMethod {
    Acor,
    AllPairs,
    AcorGresh,
    AcorShim,
}

impl SimMethod {
    pub const ALL: [SimMethod; 4] = [SimMethod::Acor, SimMethod::AllPairs, SimMethod::AcorGresh, SimMethod::AcorShim];

    pub fn as_str(self) -> &'static str {
        match self {
            SimMethod::Acor => "acor",
            SimMethod::AllPairs => "all_pairs",
            SimMethod::AcorGresh => "acor+gresh",
            SimMethod::AcorShim => "acor+shim",
        }
    }

    fn penalty(self) -> Option<Method> {
        match self {
            SimMethod::AcorGresh => Some(Method::Gresh),
            SimMethod::AcorShim => Some(Method::Shim),
            _ => None,
        }
    }
}

impl fmt::Display for SimMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        SimMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }
}

/// One simulation cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub case: Case,
    pub seed: u64,
    pub reps: usize,
    pub size: ScreenSize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidInput(format!("n = {} < 10", self.n)));
        }
        if self.p < 6 {
            return Err(Error::InvalidInput(format!("p = {} < 6", self.p)));
        }
        if self.reps < 1 {
            return Err(Error::InvalidInput("reps must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidRho(self.rho));
        }
        self.size.resolve(self.n)?;
        Ok(())
    }

    /// Independent generator for replicate `rep`: stream `rep` of the
    /// scenario seed, so replicates can run in any order.
    pub fn rng(&self, rep: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(rep as u64);
        rng
    }

    /// Standardised dataset and truth of replicate `rep`.
    pub fn draw(&self, rep: usize) -> Result<(Dataset, TruthSpec)> {
        let mut rng = self.rng(rep);
        let x = gen_design(self.n, self.p, self.rho, &mut rng)?;
        let (y, truth) = gen_response(self.case, &x, self.n, self.p, &mut rng)?;
        Ok((standardize(&y, &x, self.p, Family::Gaussian)?, truth))
    }
}

/// Outcome of one replicate under one method. Selection fields are `None`
/// for screening-only methods.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub method: SimMethod,
    pub rep: usize,
    /// Screened variables contain every active variable.
    pub covered: bool,
    /// All-pairs only: every retained interaction has both parent mains retained.
    pub hierarchy_complete: Option<bool>,
    /// Share of active variables with a nonzero main effect.
    pub tp_main: Option<f64>,
    /// Nonzero main effects outside the active set.
    pub fp_main: Option<usize>,
    /// Share of true interactions selected.
    pub tp_inter: Option<f64>,
    pub fp_inter: Option<usize>,
    pub sh_satisfied: Option<bool>,
}

impl RepRecord {
    fn screening(method: SimMethod, rep: usize, covered: bool) -> Self {
        Self {
            method,
            rep,
            covered,
            hierarchy_complete: None,
            tp_main: None,
            fp_main: None,
            tp_inter: None,
            fp_inter: None,
            sh_satisfied: None,
        }
    }
}

/// True/false positive counts of a fitted model against the truth.
pub fn selection_metrics(model: &CoefficientSet, truth: &TruthSpec) -> (f64, usize, f64, usize) {
    let mains = model.selected_mains();
    let tp_m = mains.iter().filter(|&&j| truth.is_active(j)).count();
    let fp_m = mains.len() - tp_m;
    let inters = model.selected_interactions();
    let tp_i = inters.iter().filter(|e| truth.interactions.contains(e)).count();
    let fp_i = inters.len() - tp_i;
    (
        tp_m as f64 / truth.active.len() as f64,
        fp_m,
        tp_i as f64 / truth.interactions.len() as f64,
        fp_i,
    )
}

/// Runs every method in `methods` on replicate `rep`, sharing the dataset
/// and the acor screening between them.
pub fn run_replicate(sc: &Scenario, methods: &[SimMethod], rep: usize) -> Vec<(SimMethod, Result<RepRecord>)> {
    let (ds, truth) = match sc.draw(rep) {
        Ok(v) => v,
        Err(e) => return methods.iter().map(|&m| (m, Err(e.clone()))).collect(),
    };
    let need_acor = methods.iter().any(|&m| m != SimMethod::AllPairs);
    let shrunk = if need_acor {
        let scores = acor_all(&ds, 1);
        Some(shrunk_variable_set(&scores, sc.n, sc.size))
    } else {
        None
    };
    let kappa = kappa_ebic(sc.p, sc.n);

    methods
        .iter()
        .map(|&m| {
            let rec = (|| -> Result<RepRecord> {
                if m == SimMethod::AllPairs {
                    let d = sc.size.resolve(sc.n)?;
                    let set = all_pairs_sis(&ds, d, 1)?;
                    let vars = set.variables();
                    let covered = truth.active.iter().all(|j| vars.contains(j));
                    let mut r = RepRecord::screening(m, rep, covered);
                    r.hierarchy_complete = Some(set.is_hierarchy_complete());
                    return Ok(r);
                }
                let s = shrunk.as_ref().expect("acor screening ran").clone()?;
                let covered = truth.active.iter().all(|&j| s.contains(j));
                let mut r = RepRecord::screening(m, rep, covered);
                if let Some(method) = m.penalty() {
                    let fit = lambda_path_gic(&ds, &s.indices, method, kappa)?;
                    let (tp_m, fp_m, tp_i, fp_i) = selection_metrics(&fit.model, &truth);
                    r.tp_main = Some(tp_m);
                    r.fp_main = Some(fp_m);
                    r.tp_inter = Some(tp_i);
                    r.fp_inter = Some(fp_i);
                    r.sh_satisfied = Some(check_sh(&fit.model).satisfied);
                }
                Ok(r)
            })();
            (m, rec)
        })
        .collect()
}

/// One replicate under one method.
pub fn run_replication(sc: &Scenario, method: SimMethod, rep: usize) -> Result<RepRecord> {
    run_replicate(sc, &[method], rep).pop().expect("one method").1
}

/// Every replicate of `sc`, in replicate order, on a pool of `threads`
/// workers. Per method: the successful records and the failures.
pub fn run_scenario(sc: &Scenario, methods: &[SimMethod], threads: usize) -> Result<Vec<MethodRun>> {
    sc.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let per_rep: Vec<Vec<(SimMethod, Result<RepRecord>)>> =
        pool.install(|| (0..sc.reps).into_par_iter().map(|rep| run_replicate(sc, methods, rep)).collect());
    let mut runs: Vec<MethodRun> = methods
        .iter()
        .map(|&method| MethodRun {
            method,
            records: Vec::new(),
            failures: Vec::new(),
        })
        .collect();
    for rep_results in per_rep {
        for (run, (_, res)) in runs.iter_mut().zip(rep_results) {
            match res {
                Ok(r) => run.records.push(r),
                Err(e) => run.failures.push(e),
            }
        }
    }
    Ok(runs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: SimMethod,
    pub records: Vec<RepRecord>,
    pub failures: Vec<Error>,
}
