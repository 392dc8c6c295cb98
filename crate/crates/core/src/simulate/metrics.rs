use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::generate::Case;
use super::scenario::{MethodRun, RepRecord, SimMethod};

/// Replicate averages for one (method, rho, case) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMetrics {
    pub method: SimMethod,
    pub rho: f64,
    pub case: Case,
    pub reps: usize,
    pub failed: usize,
    pub coverage: f64,
    /// Binomial standard error of `coverage`.
    pub coverage_se: f64,
    pub hierarchy_incomplete: Option<f64>,
    pub tp_main: Option<f64>,
    pub fp_main: Option<f64>,
    pub tp_inter: Option<f64>,
    pub fp_inter: Option<f64>,
    pub sh_rate: Option<f64>,
}

fn mean_of(records: &[RepRecord], f: impl Fn(&RepRecord) -> Option<f64>) -> Option<f64> {
    let vals: Vec<f64> = records.iter().filter_map(f).collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

fn rate(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Means and rates over the successful replicates of one method.
pub fn aggregate(run: &MethodRun, rho: f64, case: Case) -> Result<ScenarioMetrics> {
    let records = &run.records;
    if records.is_empty() {
        return Err(Error::AllReplicatesFailed);
    }
    let reps = records.len();
    let coverage = records.iter().filter(|r| r.covered).count() as f64 / reps as f64;
    Ok(ScenarioMetrics {
        method: run.method,
        rho,
        case,
        reps,
        failed: run.failures.len(),
        coverage,
        coverage_se: (coverage * (1.0 - coverage) / reps as f64).sqrt(),
        hierarchy_incomplete: mean_of(records, |r| r.hierarchy_complete.map(|h| rate(!h))),
        tp_main: mean_of(records, |r| r.tp_main),
        fp_main: mean_of(records, |r| r.fp_main.map(|v| v as f64)),
        tp_inter: mean_of(records, |r| r.tp_inter),
        fp_inter: mean_of(records, |r| r.fp_inter.map(|v| v as f64)),
        sh_rate: mean_of(records, |r| r.sh_satisfied.map(rate)),
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.3}"))
}

fn header(out: &mut String, cols: &[&str]) {
    out.push_str("method\trho\tcase\treps\tfailed");
    for c in cols {
        out.push('\t');
        out.push_str(c);
    }
    out.push('\n');
}

fn key(out: &mut String, m: &ScenarioMetrics) {
    let _ = write!(out, "{}\t{}\t{}\t{}\t{}", m.method, m.rho, m.case, m.reps, m.failed);
}

/// Coverage of the active set by the screened variables.
pub fn coverage_table(rows: &[ScenarioMetrics]) -> String {
    let mut out = String::new();
    header(&mut out, &["coverage", "coverage_se", "hierarchy_incomplete"]);
    for m in rows {
        key(&mut out, m);
        let _ = writeln!(out, "\t{:.3}\t{:.4}\t{}", m.coverage, m.coverage_se, cell(m.hierarchy_incomplete));
    }
    out
}

/// True-positive proportions and false-positive counts of penalised fits.
pub fn selection_table(rows: &[ScenarioMetrics]) -> String {
    let mut out = String::new();
    header(&mut out, &["tp_main", "fp_main", "tp_inter", "fp_inter"]);
    for m in rows.iter().filter(|m| m.tp_main.is_some()) {
        key(&mut out, m);
        let _ = writeln!(
            out,
            "\t{}\t{}\t{}\t{}",
            cell(m.tp_main),
            cell(m.fp_main),
            cell(m.tp_inter),
            cell(m.fp_inter)
        );
    }
    out
}

/// Share of penalised fits satisfying strong hierarchy.
pub fn hierarchy_table(rows: &[ScenarioMetrics]) -> String {
    let mut out = String::new();
    header(&mut out, &["sh_rate"]);
    for m in rows.iter().filter(|m| m.sh_rate.is_some()) {
        key(&mut out, m);
        let _ = writeln!(out, "\t{}", cell(m.sh_rate));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(covered: bool) -> RepRecord {
        RepRecord {
            method: SimMethod::Acor,
            rep: 0,
            covered,
            hierarchy_complete: None,
            tp_main: None,
            fp_main: None,
            tp_inter: None,
            fp_inter: None,
            sh_satisfied: None,
        }
    }

    fn run(records: Vec<RepRecord>) -> MethodRun {
        MethodRun {
            method: SimMethod::Acor,
            records,
            failures: Vec::new(),
        }
    }

    #[test]
    fn single_covered_replicate() {
        let m = aggregate(&run(vec![rec(true)]), 0.0, Case::A).unwrap();
        assert_eq!(m.coverage, 1.0);
        assert_eq!(m.tp_main, None);
    }

    #[test]
    fn coverage_fraction() {
        let m = aggregate(&run(vec![rec(true), rec(false), rec(true), rec(true)]), 0.5, Case::B).unwrap();
        assert_eq!(m.coverage, 0.75);
        assert!((m.coverage_se - (0.75f64 * 0.25 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hundred_reps_standard_error_bound() {
        // worst case p = 0.5 gives sqrt(0.25 / 100) = 0.05
        let recs: Vec<RepRecord> = (0..100).map(|i| rec(i % 2 == 0)).collect();
        let m = aggregate(&run(recs), 0.0, Case::A).unwrap();
        assert!(m.coverage_se <= 0.05 + 1e-15);
    }

    #[test]
    fn no_successes_is_an_error() {
        let mut r = run(Vec::new());
        r.failures.push(Error::PathFailed);
        assert_eq!(aggregate(&r, 0.0, Case::C), Err(Error::AllReplicatesFailed));
    }

    #[test]
    fn tables_are_keyed_long_format() {
        let mut m = aggregate(&run(vec![rec(true)]), 0.2, Case::C).unwrap();
        let t = coverage_table(std::slice::from_ref(&m));
        assert_eq!(t.lines().next().unwrap(), "method\trho\tcase\treps\tfailed\tcoverage\tcoverage_se\thierarchy_incomplete");
        assert_eq!(t.lines().nth(1).unwrap(), "acor\t0.2\tc\t1\t0\t1.000\t0.0000\tNA");
        assert_eq!(selection_table(std::slice::from_ref(&m)).lines().count(), 1);
        m.sh_rate = Some(1.0);
        assert_eq!(hierarchy_table(&[m]).lines().nth(1).unwrap(), "acor\t0.2\tc\t1\t0\t1.000");
    }
}
